use std::fmt;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::RoundBundle;
use crate::career::{CareerEvent, EventCategory, SentimentLabel};
use crate::ids::EventId;

/// Thresholds applied by [`validate_round_with`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationPolicy {
    pub hint_words: RangeInclusive<usize>,
    pub min_skill_sentences: usize,
    pub min_random_sentences: usize,
}

impl Default for ValidationPolicy {
    fn default() -> Self {
        ValidationPolicy {
            hint_words: 2..=6,
            min_skill_sentences: 2,
            min_random_sentences: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    HintWordCount {
        event: EventId,
        count: usize,
    },
    HintRevealsLabel {
        event: EventId,
        word: String,
    },
    AllRandomsPositive,
    EmptyTitle {
        event: EventId,
    },
    EmptyBody {
        event: EventId,
    },
    TooFewSentences {
        event: EventId,
        count: usize,
        required: usize,
    },
    Structure {
        event: EventId,
        detail: String,
    },
}

impl Violation {
    /// Soft violations are accepted with a warning once retries run out.
    pub fn is_soft(&self) -> bool {
        matches!(
            self,
            Violation::HintWordCount { .. } | Violation::TooFewSentences { .. }
        )
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::HintWordCount { event, count } => {
                write!(f, "{event}: hint has {count} words, needs 2-6")
            }
            Violation::HintRevealsLabel { event, word } => {
                write!(f, "{event}: hint uses the label word \"{word}\"")
            }
            Violation::AllRandomsPositive => f.write_str("all three random events are Positive"),
            Violation::EmptyTitle { event } => write!(f, "{event}: empty title"),
            Violation::EmptyBody { event } => write!(f, "{event}: empty content"),
            Violation::TooFewSentences {
                event,
                count,
                required,
            } => {
                write!(
                    f,
                    "{event}: content has {count} sentence(s), needs at least {required}"
                )
            }
            Violation::Structure { event, detail } => write!(f, "{event}: {detail}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundCheck {
    pub violations: Vec<Violation>,
}

impl RoundCheck {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_hard(&self) -> bool {
        self.violations.iter().any(|v| !v.is_soft())
    }

    pub fn hard(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| !v.is_soft())
    }

    pub fn soft(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.is_soft())
    }
}

/// Lower-case label words a hint must not contain (as a word or word prefix).
fn label_word_in(hint: &str) -> Option<String> {
    let words = SentimentLabel::VARIANT_NAMES.map(|w| w.to_ascii_lowercase());
    hint.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .find_map(|token| {
            words
                .iter()
                .find(|w| token.starts_with(w.as_str()))
                .cloned()
        })
}

/// Sentences approximated by terminal punctuation followed by whitespace or
/// end of text; runs like `...` or `?!` count once.
pub(crate) fn sentence_count(text: &str) -> usize {
    let chars: Vec<char> = text.trim().chars().collect();
    let terminal = |c: char| matches!(c, '.' | '!' | '?');
    (0..chars.len())
        .filter(|&i| terminal(chars[i]) && chars.get(i + 1).is_none_or(|c| c.is_whitespace()))
        .count()
}

fn check_event(event: &CareerEvent, policy: &ValidationPolicy, out: &mut Vec<Violation>) {
    let id = || event.id.clone();
    if let Err(detail) = event.check_invariants() {
        out.push(Violation::Structure {
            event: id(),
            detail,
        });
    }
    if event.title.trim().is_empty() {
        out.push(Violation::EmptyTitle { event: id() });
    }
    if event.body.trim().is_empty() {
        out.push(Violation::EmptyBody { event: id() });
    }
    if let Some(hint) = &event.hint {
        let count = hint.split_whitespace().count();
        if !policy.hint_words.contains(&count) {
            out.push(Violation::HintWordCount { event: id(), count });
        }
        if let Some(word) = label_word_in(hint) {
            out.push(Violation::HintRevealsLabel { event: id(), word });
        }
    }
    let required = match event.category {
        EventCategory::Skill => policy.min_skill_sentences,
        EventCategory::Random => policy.min_random_sentences,
        EventCategory::Milestone => 0,
    };
    let count = sentence_count(&event.body);
    if !event.body.trim().is_empty() && count < required {
        out.push(Violation::TooFewSentences {
            event: id(),
            count,
            required,
        });
    }
}

pub fn validate_round(bundle: &RoundBundle) -> RoundCheck {
    validate_round_with(bundle, &ValidationPolicy::default())
}

pub fn validate_round_with(bundle: &RoundBundle, policy: &ValidationPolicy) -> RoundCheck {
    let mut violations = Vec::new();
    let expected = [
        (EventCategory::Milestone, 1),
        (EventCategory::Random, 3),
        (EventCategory::Skill, 3),
    ];
    let groups: [&[CareerEvent]; 3] = [
        std::slice::from_ref(&bundle.milestone),
        &bundle.randoms,
        &bundle.skills,
    ];
    for ((category, _), group) in expected.iter().zip(groups) {
        for event in group {
            if event.category != *category {
                violations.push(Violation::Structure {
                    event: event.id.clone(),
                    detail: format!("expected a {category:?} event, found {:?}", event.category),
                });
            }
            if event.round_index != bundle.round_index {
                violations.push(Violation::Structure {
                    event: event.id.clone(),
                    detail: format!(
                        "round {} inside bundle for round {}",
                        event.round_index, bundle.round_index
                    ),
                });
            }
            check_event(event, policy, &mut violations);
        }
    }
    if bundle
        .randoms
        .iter()
        .all(|e| e.label == Some(SentimentLabel::Positive))
    {
        violations.push(Violation::AllRandomsPositive);
    }
    RoundCheck { violations }
}

/// Returns the bundle when it has no violations at all, otherwise every violation.
pub fn validate_round_strict(bundle: RoundBundle) -> Result<RoundBundle, Vec<Violation>> {
    let check = validate_round(&bundle);
    if check.is_clean() {
        Ok(bundle)
    } else {
        Err(check.violations)
    }
}
