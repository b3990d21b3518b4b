//! Journey report: partition of the pocketed events plus the two-field
//! analysis requested from the provider.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::career::{
    CareerError, CareerEvent, CompletionReason, EventCategory, Session, SessionStatus, UserProfile,
};
use crate::pipeline::{
    correction_message, PromptTemplate, Provider, ProviderError, ProviderRequest, ResponseError,
    Task,
};
use crate::resources::ResourceId;

pub(crate) const REPORT_PROMPT_SLOTS: [&str; 2] = ["${userIntro}", "${allEvents}"];

/// Pocketed events by category, in pocket order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JourneySummary {
    pub milestones: Vec<CareerEvent>,
    pub skills: Vec<CareerEvent>,
    pub randoms: Vec<CareerEvent>,
    pub days_used: u32,
    pub completion_reason: CompletionReason,
}

impl JourneySummary {
    /// (milestones, skills, randoms)
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.milestones.len(), self.skills.len(), self.randoms.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JourneyReport {
    pub career_analysis: String,
    pub future_suggestions: String,
    pub milestones: Vec<CareerEvent>,
    pub skills: Vec<CareerEvent>,
    pub randoms: Vec<CareerEvent>,
    pub days_used: u32,
    pub completion_reason: CompletionReason,
}

impl JourneyReport {
    pub fn new(
        summary: JourneySummary,
        career_analysis: String,
        future_suggestions: String,
    ) -> Self {
        JourneyReport {
            career_analysis,
            future_suggestions,
            milestones: summary.milestones,
            skills: summary.skills,
            randoms: summary.randoms,
            days_used: summary.days_used,
            completion_reason: summary.completion_reason,
        }
    }

    /// Plain-text rendering for terminals.
    pub fn to_text(&self) -> String {
        let list = |events: &[CareerEvent]| -> String {
            if events.is_empty() {
                return "  (none)\n".into();
            }
            events
                .iter()
                .map(|e| match &e.label {
                    Some(label) => format!(
                        "  - {} [{}] (day {})\n",
                        e.title,
                        label,
                        e.pocketed_on_day.unwrap_or(0)
                    ),
                    None => format!("  - {} (day {})\n", e.title, e.pocketed_on_day.unwrap_or(0)),
                })
                .collect()
        };
        format!(
            "Journey report ({:?}, {} days)\n\nCareer analysis\n{}\n\nFuture suggestions\n{}\n\nMilestones ({})\n{}\nSkills ({})\n{}\nRandom events ({})\n{}",
            self.completion_reason,
            self.days_used,
            self.career_analysis,
            self.future_suggestions,
            self.milestones.len(),
            list(&self.milestones),
            self.skills.len(),
            list(&self.skills),
            self.randoms.len(),
            list(&self.randoms),
        )
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error(transparent)]
    State(#[from] CareerError),
    #[error(transparent)]
    Decode(#[from] ResponseError),
    #[error("report reply has no \"{0}\" string")]
    MissingKey(&'static str),
    #[error("report field \"{0}\" is empty")]
    EmptyField(&'static str),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("no valid report after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
}

pub fn summarize_journey(session: &Session) -> Result<JourneySummary, CareerError> {
    if session.status != SessionStatus::Completed {
        return Err(CareerError::IllegalState {
            expected: "Completed",
            actual: session.status,
        });
    }
    let reason = session
        .completion_reason
        .ok_or_else(|| CareerError::Consistency("completed session without a reason".into()))?;
    let mut summary = JourneySummary {
        milestones: Vec::new(),
        skills: Vec::new(),
        randoms: Vec::new(),
        days_used: session.day_elapsed,
        completion_reason: reason,
    };
    for event in session.pocketed_events() {
        let bucket = match event.category {
            EventCategory::Milestone => &mut summary.milestones,
            EventCategory::Skill => &mut summary.skills,
            EventCategory::Random => &mut summary.randoms,
        };
        bucket.push(event.clone());
    }
    Ok(summary)
}

fn report_template() -> &'static PromptTemplate {
    static TEMPLATE: OnceLock<PromptTemplate> = OnceLock::new();
    TEMPLATE.get_or_init(|| {
        PromptTemplate::parse(ResourceId::CareerAnalysis.embedded(), &REPORT_PROMPT_SLOTS)
    })
}

/// Slot values of the analysis prompt: the profile and the pocketed events
/// as `title | body [label]`, separated by `; `.
pub fn report_prompt_values(session: &Session) -> Vec<(&'static str, String)> {
    report_values_for(&session.profile, &session.pocketed_events())
}

pub(crate) fn report_values_for(
    profile: &UserProfile,
    events: &[&CareerEvent],
) -> Vec<(&'static str, String)> {
    let all = if events.is_empty() {
        "None".to_string()
    } else {
        events
            .iter()
            .map(|e| match &e.label {
                Some(label) => format!("{} | {} [{}]", e.title, e.body, label),
                None => format!("{} | {}", e.title, e.body),
            })
            .collect::<Vec<_>>()
            .join("; ")
    };
    let intro = format!("{} {}", profile.intro.trim(), profile.goal.trim());
    vec![("${userIntro}", intro), ("${allEvents}", all)]
}

pub fn build_report_prompt(session: &Session) -> String {
    report_template().render(&report_prompt_values(session))
}

/// Decodes `{"careerAnalysis": …, "futureSuggestions": …}`, tolerating fences and prose.
pub fn parse_report_response(raw: &str) -> Result<(String, String), ReportError> {
    let map = crate::pipeline::decode_object(raw)?;
    let field = |key: &'static str| -> Result<String, ReportError> {
        let value = map
            .get(key)
            .and_then(|v| v.as_str())
            .ok_or(ReportError::MissingKey(key))?;
        let value = value.trim();
        if value.is_empty() {
            return Err(ReportError::EmptyField(key));
        }
        Ok(value.to_string())
    };
    Ok((field("careerAnalysis")?, field("futureSuggestions")?))
}

/// Asks the provider for the analysis, retrying malformed replies up to
/// `retry_budget` times. Transport errors are returned at once.
pub fn generate_report(
    provider: &dyn Provider,
    session: &Session,
    retry_budget: u32,
    temperature: f64,
) -> Result<JourneyReport, ReportError> {
    let summary = summarize_journey(session)?;
    let base = build_report_prompt(session);
    let mut last: Option<String> = None;
    for attempt in 0..=retry_budget {
        let prompt = match &last {
            Some(problem) => format!(
                "{base}\n\n{}",
                correction_message(std::slice::from_ref(problem))
            ),
            None => base.clone(),
        };
        let request = ProviderRequest {
            prompt,
            task: Task::Report {
                profile: session.profile.clone(),
                summary: summary.clone(),
            },
            seed: session.rng_seed,
            attempt,
            temperature,
        };
        let raw = provider.submit(&request)?;
        match parse_report_response(&raw) {
            Ok((analysis, suggestions)) => {
                return Ok(JourneyReport::new(summary, analysis, suggestions))
            }
            Err(e) => last = Some(e.to_string()),
        }
    }
    Err(ReportError::Exhausted {
        attempts: retry_budget + 1,
        last: last.unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_fields() {
        let (a, s) =
            parse_report_response(r#"{"careerAnalysis":"grew","futureSuggestions":"keep going"}"#)
                .unwrap();
        assert_eq!((a.as_str(), s.as_str()), ("grew", "keep going"));
    }

    #[test]
    fn missing_or_empty_fields_rejected() {
        assert_eq!(
            parse_report_response(r#"{"careerAnalysis":"grew"}"#),
            Err(ReportError::MissingKey("futureSuggestions"))
        );
        assert_eq!(
            parse_report_response(r#"{"careerAnalysis":" ","futureSuggestions":"x"}"#),
            Err(ReportError::EmptyField("careerAnalysis"))
        );
        assert!(matches!(
            parse_report_response("no json here"),
            Err(ReportError::Decode(_))
        ));
    }

    #[test]
    fn fenced_variants_parse() {
        let body = r#"{"careerAnalysis":"a","futureSuggestions":"b"}"#;
        for raw in [
            format!("```json\n{body}\n```"),
            format!("```\n{body}```"),
            format!("Here you go:\n{body}\nThanks"),
            format!("  {body}\n"),
        ] {
            assert_eq!(
                parse_report_response(&raw).unwrap(),
                ("a".to_string(), "b".to_string()),
                "{raw}"
            );
        }
    }

    #[test]
    fn template_has_two_slots_and_key_requirement() {
        assert_eq!(report_template().slot_count(), 2);
        assert!(report_template()
            .source()
            .contains("\"futureSuggestions\":\"(specific, actionable suggestions"));
    }
}
