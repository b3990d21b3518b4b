//! Versioned text resources: prompt templates and the reference round output.
//!
//! Each resource is compiled in and pinned by SHA-256, so an edited file is
//! detected both at build time (the embedded text changes) and by
//! `validate-fixtures` when pointed at a resource directory.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ResourceId {
    /// Round generation prompt with `<placeholder>` slots.
    EventsGeneration,
    /// The instruction/input/output fine-tuning record, verbatim.
    FinetuneExample,
    /// The round-1 output of the fine-tuning record as a JSON object.
    Round1Output,
    /// Milestone scene prompt with a `${bigEventContent}` slot.
    MilestoneImage,
    /// Journey analysis prompt with `${userIntro}` and `${allEvents}` slots.
    CareerAnalysis,
    /// Plain chat baseline prompt; stored for reference only.
    BaselineChat,
}

impl ResourceId {
    pub const ALL: [ResourceId; 6] = [
        ResourceId::EventsGeneration,
        ResourceId::FinetuneExample,
        ResourceId::Round1Output,
        ResourceId::MilestoneImage,
        ResourceId::CareerAnalysis,
        ResourceId::BaselineChat,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            ResourceId::EventsGeneration => "events_generation.v1.txt",
            ResourceId::FinetuneExample => "finetune_example.v1.txt",
            ResourceId::Round1Output => "round1_output.v1.json",
            ResourceId::MilestoneImage => "milestone_image.v1.txt",
            ResourceId::CareerAnalysis => "career_analysis.v1.txt",
            ResourceId::BaselineChat => "baseline_chat.v1.txt",
        }
    }

    pub fn embedded(self) -> &'static str {
        match self {
            ResourceId::EventsGeneration => include_str!("../resources/events_generation.v1.txt"),
            ResourceId::FinetuneExample => include_str!("../resources/finetune_example.v1.txt"),
            ResourceId::Round1Output => include_str!("../resources/round1_output.v1.json"),
            ResourceId::MilestoneImage => include_str!("../resources/milestone_image.v1.txt"),
            ResourceId::CareerAnalysis => include_str!("../resources/career_analysis.v1.txt"),
            ResourceId::BaselineChat => include_str!("../resources/baseline_chat.v1.txt"),
        }
    }

    /// SHA-256 of the released resource text.
    pub fn pinned_sha256(self) -> &'static str {
        match self {
            ResourceId::EventsGeneration => {
                "1b90bfe6b23c284b0574d755b704d0f938230aaac198184705871e7540225901"
            }
            ResourceId::FinetuneExample => {
                "82d59a3fe5a01ab21afa47eb63cb066a9fe86eea9e327bc996e2dc5a46be2d3f"
            }
            ResourceId::Round1Output => {
                "ea33d1b5eb8298f0d2e27d96f0446c313495a61211a520b804c1f7844b2ab89e"
            }
            ResourceId::MilestoneImage => {
                "5197e4b30c2c905734fc348aa3c55997b916c1feef56a910e8b63b841faff579"
            }
            ResourceId::CareerAnalysis => {
                "fa2b002584f026684706fece4663c42da925c5f75f52c9e663a22fa4f6c9e8b4"
            }
            ResourceId::BaselineChat => {
                "3360a490efe5222ffd40becaccc99d39058b06ba9f9f3ff817bbc6df3cbfdf52"
            }
        }
    }
}

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_name())
    }
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// A complete set of resource texts, either compiled in or read from disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceSet {
    texts: BTreeMap<ResourceId, String>,
}

impl ResourceSet {
    pub fn embedded() -> Self {
        ResourceSet {
            texts: ResourceId::ALL
                .iter()
                .map(|id| (*id, id.embedded().to_string()))
                .collect(),
        }
    }

    pub fn from_dir(dir: &Path) -> std::io::Result<Self> {
        let mut texts = BTreeMap::new();
        for id in ResourceId::ALL {
            let path = dir.join(id.file_name());
            let text = std::fs::read_to_string(&path)
                .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
            texts.insert(id, text);
        }
        Ok(ResourceSet { texts })
    }

    pub fn get(&self, id: ResourceId) -> &str {
        &self.texts[&id]
    }

    /// Writes every resource into `dir`, e.g. to edit a copy for testing.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (id, text) in &self.texts {
            std::fs::write(dir.join(id.file_name()), text)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_resources_match_pinned_digests() {
        for id in ResourceId::ALL {
            assert_eq!(sha256_hex(id.embedded()), id.pinned_sha256(), "{id}");
        }
    }

    #[test]
    fn dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        ResourceSet::embedded().write_to(dir.path()).unwrap();
        assert_eq!(
            ResourceSet::from_dir(dir.path()).unwrap(),
            ResourceSet::embedded()
        );
    }
}
