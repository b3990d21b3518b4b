use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::grammar::format_event_string;
use super::GenerationContext;
use crate::career::{CareerEvent, DirectionChange, EventCategory};
use crate::resources::ResourceId;

/// Slot tokens of the round generation template, as they appear in the text.
pub const ROUND_PROMPT_SLOTS: [&str; 7] = [
    "<currentMilestoneNum>",
    "<acceptedChangesStr>",
    "<userIntro>",
    "<pocketedEvents>",
    "<pastExperiencesStr> or 'None yet'",
    "<acceptedDirectionChanges>",
    "<currentTime>",
];

pub(crate) const IMAGE_PROMPT_SLOTS: [&str; 1] = ["${bigEventContent}"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MaskError {
    #[error("rendered text diverges from the template at byte {offset}: expected {expected:?}, found {found:?}")]
    Mismatch {
        offset: usize,
        expected: String,
        found: String,
    },
    #[error("rendered text has {0} unexpected trailing bytes")]
    Trailing(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Literal(String),
    Slot(String),
}

/// A text template with named slot tokens embedded verbatim in the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    source: String,
    segments: Vec<Segment>,
}

impl PromptTemplate {
    /// Splits `source` at every occurrence of any token in `slots`.
    pub fn parse(source: &str, slots: &[&str]) -> Self {
        let mut segments = Vec::new();
        let mut literal = String::new();
        let mut rest = source;
        while !rest.is_empty() {
            let hit = slots
                .iter()
                .filter(|t| rest.starts_with(**t))
                .max_by_key(|t| t.len());
            match hit {
                Some(token) => {
                    if !literal.is_empty() {
                        segments.push(Segment::Literal(std::mem::take(&mut literal)));
                    }
                    segments.push(Segment::Slot(token.to_string()));
                    rest = &rest[token.len()..];
                }
                None => {
                    let ch = rest.chars().next().expect("non-empty");
                    literal.push(ch);
                    rest = &rest[ch.len_utf8()..];
                }
            }
        }
        if !literal.is_empty() {
            segments.push(Segment::Literal(literal));
        }
        PromptTemplate {
            source: source.to_string(),
            segments,
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn slot_count(&self) -> usize {
        self.segments
            .iter()
            .filter(|s| matches!(s, Segment::Slot(_)))
            .count()
    }

    fn lookup<'v>(values: &'v [(&str, String)], token: &str) -> Option<&'v str> {
        values
            .iter()
            .find(|(t, _)| *t == token)
            .map(|(_, v)| v.as_str())
    }

    /// Substitutes every slot. Slots without a value keep their token.
    pub fn render(&self, values: &[(&str, String)]) -> String {
        let mut out = String::with_capacity(self.source.len() * 2);
        for segment in &self.segments {
            match segment {
                Segment::Literal(text) => out.push_str(text),
                Segment::Slot(token) => out.push_str(Self::lookup(values, token).unwrap_or(token)),
            }
        }
        out
    }

    /// Replaces the slot values in `rendered` with their tokens, checking
    /// every literal byte against this template along the way. On success the
    /// result equals [`PromptTemplate::source`].
    pub fn mask(&self, rendered: &str, values: &[(&str, String)]) -> Result<String, MaskError> {
        let mut out = String::with_capacity(self.source.len());
        let mut cursor = 0;
        let snippet = |s: &str| s.chars().take(40).collect::<String>();
        for segment in &self.segments {
            let (expected, token) = match segment {
                Segment::Literal(text) => (text.as_str(), None),
                Segment::Slot(token) => (Self::lookup(values, token).unwrap_or(token), Some(token)),
            };
            if !rendered[cursor..].starts_with(expected) {
                return Err(MaskError::Mismatch {
                    offset: cursor,
                    expected: snippet(expected),
                    found: snippet(&rendered[cursor..]),
                });
            }
            cursor += expected.len();
            out.push_str(token.map_or(expected, String::as_str));
        }
        if cursor != rendered.len() {
            return Err(MaskError::Trailing(rendered.len() - cursor));
        }
        Ok(out)
    }
}

fn round_template() -> &'static PromptTemplate {
    static TEMPLATE: OnceLock<PromptTemplate> = OnceLock::new();
    TEMPLATE.get_or_init(|| {
        PromptTemplate::parse(ResourceId::EventsGeneration.embedded(), &ROUND_PROMPT_SLOTS)
    })
}

fn image_template() -> &'static PromptTemplate {
    static TEMPLATE: OnceLock<PromptTemplate> = OnceLock::new();
    TEMPLATE.get_or_init(|| {
        PromptTemplate::parse(ResourceId::MilestoneImage.embedded(), &IMAGE_PROMPT_SLOTS)
    })
}

pub(crate) fn changes_list(changes: &[DirectionChange]) -> String {
    changes
        .iter()
        .map(|c| format!("{} → {}", c.from, c.to))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Slot values of the round generation template for `ctx`.
pub fn round_prompt_values(ctx: &GenerationContext) -> Vec<(&'static str, String)> {
    let profile = format!("{} {}", ctx.profile.intro.trim(), ctx.profile.goal.trim());
    let (pocketed, past) = if ctx.pocketed_events.is_empty() {
        ("None yet".to_string(), "None yet".to_string())
    } else {
        let full = ctx
            .pocketed_events
            .iter()
            .map(|e| {
                format!(
                    "{:?} - {}",
                    e.category,
                    format_event_string(&e.title, &e.body, e.label.as_ref())
                )
            })
            .collect::<Vec<_>>()
            .join("; ");
        let brief = ctx
            .pocketed_events
            .iter()
            .map(|e| format!("{} ({:?}, day {})", e.title, e.category, e.day))
            .collect::<Vec<_>>()
            .join("; ");
        (full, brief)
    };
    let (accepted, accepted_sentence) = if ctx.accepted_changes.is_empty() {
        ("None".to_string(), String::new())
    } else {
        let list = changes_list(&ctx.accepted_changes);
        let sentence = format!("The user has accepted the following direction changes: {list}.");
        (list, sentence)
    };
    vec![
        ("<currentMilestoneNum>", ctx.round_index.to_string()),
        ("<acceptedChangesStr>", accepted_sentence),
        ("<userIntro>", profile),
        ("<pocketedEvents>", pocketed),
        ("<pastExperiencesStr> or 'None yet'", past),
        ("<acceptedDirectionChanges>", accepted),
        (
            "<currentTime>",
            ctx.current_date.format("%Y-%m-%d").to_string(),
        ),
    ]
}

pub fn build_round_prompt(ctx: &GenerationContext) -> String {
    build_round_prompt_with(round_template(), ctx)
}

pub fn build_round_prompt_with(template: &PromptTemplate, ctx: &GenerationContext) -> String {
    template.render(&round_prompt_values(ctx))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImagePrompt {
    pub text: String,
    pub warnings: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("image prompts are only built for milestones, got a {0:?} event")]
pub struct NotMilestone(pub EventCategory);

/// Scene prompt for a milestone's artwork, from its `title | content`.
pub fn build_image_prompt(milestone: &CareerEvent) -> Result<ImagePrompt, NotMilestone> {
    if milestone.category != EventCategory::Milestone {
        return Err(NotMilestone(milestone.category));
    }
    let mut warnings = Vec::new();
    if milestone.body.trim().is_empty() {
        warnings.push(format!(
            "{}: milestone has no content, scene text is empty",
            milestone.id
        ));
    }
    let content = format!("{} | {}", milestone.title, milestone.body);
    Ok(ImagePrompt {
        text: image_template().render(&[("${bigEventContent}", content)]),
        warnings,
    })
}
