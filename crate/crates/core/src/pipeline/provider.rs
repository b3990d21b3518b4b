use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::GenerationContext;
use crate::career::UserProfile;
use crate::report::JourneySummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Template,
    Remote,
}

impl fmt::Display for ProviderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProviderKind::Template => "template",
            ProviderKind::Remote => "remote",
        })
    }
}

impl FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "template" => Ok(ProviderKind::Template),
            "remote" => Ok(ProviderKind::Remote),
            other => Err(format!(
                "unknown provider {other:?}, expected template or remote"
            )),
        }
    }
}

/// What the prompt asks for. Remote providers only need the prompt; the
/// offline provider works from the structured task instead.
#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Round {
        context: GenerationContext,
    },
    Report {
        profile: UserProfile,
        summary: JourneySummary,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderRequest {
    pub prompt: String,
    pub task: Task,
    pub seed: u64,
    /// Zero for the first call, then one per correction retry.
    pub attempt: u32,
    pub temperature: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("provider timed out after {0:?}")]
    Timeout(Duration),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("provider protocol error: {0}")]
    Protocol(String),
    #[error("unsupported by this provider: {0}")]
    Unsupported(String),
}

/// A text-generation backend.
pub trait Provider: Send + Sync {
    fn kind(&self) -> ProviderKind;

    /// Returns the raw model output for one request.
    fn submit(&self, request: &ProviderRequest) -> Result<String, ProviderError>;
}
