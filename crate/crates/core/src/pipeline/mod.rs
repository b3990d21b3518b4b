//! Event generation: prompt assembly, provider calls, strict output parsing
//! and validation, plus a seeded offline provider.

mod generate;
mod grammar;
mod prompt;
mod provider;
mod remote;
mod response;
mod template_provider;
mod validate;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::career::{
    CareerEvent, DirectionChange, EventCategory, SentimentLabel, Session, UserProfile,
};

pub use generate::{
    correction_message, generate_round, GeneratedRound, GenerationError, GenerationPolicy,
};
pub use grammar::{
    format_event_string, normalize_event_string, parse_event_string, parse_label, GrammarError,
    ParsedEvent,
};
pub(crate) use prompt::IMAGE_PROMPT_SLOTS;
pub use prompt::{
    build_image_prompt, build_round_prompt, build_round_prompt_with, round_prompt_values,
    ImagePrompt, MaskError, NotMilestone, PromptTemplate, ROUND_PROMPT_SLOTS,
};
pub use provider::{Provider, ProviderError, ProviderKind, ProviderRequest, Task};
pub use remote::{RemoteConfig, RemoteProvider, DEFAULT_API_KEY_ENV};
pub(crate) use response::decode_object;
pub use response::{extract_json_object, parse_round_response, round_keys, ResponseError};
pub use template_provider::TemplateProvider;
pub use validate::{
    validate_round, validate_round_strict, validate_round_with, RoundCheck, ValidationPolicy,
    Violation,
};

/// One generation round: a milestone plus three random and three skill events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundBundle {
    pub round_index: u32,
    pub milestone: CareerEvent,
    pub randoms: [CareerEvent; 3],
    pub skills: [CareerEvent; 3],
}

impl RoundBundle {
    /// Milestone, randoms, skills, in that order.
    pub fn events(&self) -> impl Iterator<Item = &CareerEvent> {
        std::iter::once(&self.milestone)
            .chain(self.randoms.iter())
            .chain(self.skills.iter())
    }

    pub fn events_mut(&mut self) -> impl Iterator<Item = &mut CareerEvent> {
        std::iter::once(&mut self.milestone)
            .chain(self.randoms.iter_mut())
            .chain(self.skills.iter_mut())
    }
}

/// A pocketed event as the prompt sees it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PocketedSummary {
    pub title: String,
    pub body: String,
    pub category: EventCategory,
    pub label: Option<SentimentLabel>,
    pub day: u32,
}

/// Everything a round's generation may depend on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationContext {
    pub profile: UserProfile,
    pub round_index: u32,
    pub pocketed_events: Vec<PocketedSummary>,
    pub accepted_changes: Vec<DirectionChange>,
    pub current_date: NaiveDate,
}

impl GenerationContext {
    pub fn from_session(session: &Session) -> Self {
        let pocketed_events = session
            .timeline
            .iter()
            .filter_map(|entry| {
                session.event(&entry.event_id).map(|e| PocketedSummary {
                    title: e.title.clone(),
                    body: e.body.clone(),
                    category: e.category,
                    label: e.label.clone(),
                    day: entry.day,
                })
            })
            .collect();
        let current_date = session
            .profile
            .start_date
            .checked_add_days(Days::new(u64::from(session.day_elapsed)))
            .unwrap_or(session.profile.start_date);
        GenerationContext {
            profile: session.profile.clone(),
            round_index: session.current_round,
            pocketed_events,
            accepted_changes: session.accepted_changes.clone(),
            current_date,
        }
    }

    /// Stable 64-bit digest of the context (SHA-256 over its JSON form).
    pub fn hash64(&self) -> u64 {
        let bytes = serde_json::to_vec(self).expect("context serializes");
        let digest = Sha256::digest(&bytes);
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }
}
