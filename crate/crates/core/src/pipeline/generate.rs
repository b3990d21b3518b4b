use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::prompt::{build_image_prompt, build_round_prompt};
use super::provider::{Provider, ProviderError, ProviderRequest, Task};
use super::response::parse_round_response;
use super::validate::{validate_round_with, ValidationPolicy};
use super::{GenerationContext, RoundBundle};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationPolicy {
    /// Extra attempts after the first one.
    pub retry_budget: u32,
    pub temperature: f64,
    pub validation: ValidationPolicy,
}

impl Default for GenerationPolicy {
    fn default() -> Self {
        GenerationPolicy {
            retry_budget: 2,
            temperature: 0.8,
            validation: ValidationPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedRound {
    pub bundle: RoundBundle,
    /// Provider calls made, including the successful one.
    pub attempts: u32,
    /// Soft violations accepted after the retries ran out, plus prompt warnings.
    pub warnings: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerationError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("no valid round after {attempts} attempts: {}", problems.join("; "))]
    Exhausted {
        attempts: u32,
        problems: Vec<String>,
    },
}

pub fn correction_message(problems: &[String]) -> String {
    format!(
        "Your previous output violated: {}. Regenerate the full JSON object.",
        problems.join("; ")
    )
}

/// Prompt, submit, parse and validate, retrying with a correction note.
///
/// Transport failures end the loop at once. Once the budget is spent, a round
/// whose only problems are soft is accepted with warnings.
pub fn generate_round(
    provider: &dyn Provider,
    ctx: &GenerationContext,
    seed: u64,
    policy: &GenerationPolicy,
) -> Result<GeneratedRound, GenerationError> {
    let base_prompt = build_round_prompt(ctx);
    let mut problems: Vec<String> = Vec::new();
    let mut fallback: Option<(RoundBundle, Vec<String>)> = None;
    let mut attempts = 0;

    for attempt in 0..=policy.retry_budget {
        let prompt = if problems.is_empty() {
            base_prompt.clone()
        } else {
            format!("{base_prompt}\n\n{}", correction_message(&problems))
        };
        let request = ProviderRequest {
            prompt,
            task: Task::Round {
                context: ctx.clone(),
            },
            seed,
            attempt,
            temperature: policy.temperature,
        };
        attempts += 1;
        let raw = provider.submit(&request)?;
        let bundle = match parse_round_response(&raw, ctx.round_index) {
            Ok(bundle) => bundle,
            Err(e) => {
                problems = vec![e.to_string()];
                continue;
            }
        };
        let check = validate_round_with(&bundle, &policy.validation);
        if check.is_clean() {
            return Ok(finish(bundle, attempts, Vec::new()));
        }
        problems = check.violations.iter().map(ToString::to_string).collect();
        if !check.has_hard() {
            fallback = Some((bundle, problems.clone()));
        }
    }

    match fallback {
        Some((bundle, warnings)) => Ok(finish(bundle, attempts, warnings)),
        None => Err(GenerationError::Exhausted { attempts, problems }),
    }
}

fn finish(mut bundle: RoundBundle, attempts: u32, mut warnings: Vec<String>) -> GeneratedRound {
    if let Ok(image) = build_image_prompt(&bundle.milestone) {
        warnings.extend(image.warnings);
        bundle.milestone.image_prompt = Some(image.text);
    }
    GeneratedRound {
        bundle,
        attempts,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Mutex;

    use super::*;
    use crate::pipeline::tests_support::context;
    use crate::pipeline::{ProviderKind, TemplateProvider};
    use crate::resources::ResourceId;

    /// Replays canned replies in order and records the prompts it saw.
    struct Scripted {
        replies: Mutex<Vec<Result<String, ProviderError>>>,
        prompts: Mutex<Vec<String>>,
    }

    impl Scripted {
        fn new(replies: Vec<Result<String, ProviderError>>) -> Self {
            Scripted {
                replies: Mutex::new(replies),
                prompts: Mutex::new(Vec::new()),
            }
        }
    }

    impl Provider for Scripted {
        fn kind(&self) -> ProviderKind {
            ProviderKind::Remote
        }

        fn submit(&self, request: &ProviderRequest) -> Result<String, ProviderError> {
            self.prompts.lock().unwrap().push(request.prompt.clone());
            self.replies.lock().unwrap().remove(0)
        }
    }

    fn fixture() -> String {
        ResourceId::Round1Output.embedded().to_string()
    }

    #[test]
    fn fixture_reply_needs_no_retry() {
        let p = Scripted::new(vec![Ok(fixture())]);
        let g = generate_round(&p, &context(1), 0, &GenerationPolicy::default()).unwrap();
        assert_eq!(g.attempts, 1);
        assert_eq!(g.bundle.milestone.title, "Enroll in HCI Master's");
        assert!(g.warnings.is_empty());
        assert!(g
            .bundle
            .milestone
            .image_prompt
            .as_deref()
            .unwrap()
            .contains("Ghibli-style"));
    }

    #[test]
    fn refusals_exhaust_into_generation_error() {
        let p = Scripted::new(vec![
            Ok("I cannot help".into()),
            Ok("I cannot help".into()),
            Ok("I cannot help".into()),
        ]);
        let err = generate_round(&p, &context(1), 0, &GenerationPolicy::default()).unwrap_err();
        assert!(matches!(
            err,
            GenerationError::Exhausted { attempts: 3, .. }
        ));
        let prompts = p.prompts.lock().unwrap();
        assert!(!prompts[0].contains("Your previous output violated"));
        assert!(prompts[1].ends_with("Regenerate the full JSON object."));
    }

    #[test]
    fn retry_recovers_after_bad_output() {
        let p = Scripted::new(vec![Ok("{}".into()), Ok(fixture())]);
        let g = generate_round(&p, &context(1), 0, &GenerationPolicy::default()).unwrap();
        assert_eq!(g.attempts, 2);
        let prompts = p.prompts.lock().unwrap();
        assert!(
            prompts[1].contains("Your previous output violated: missing key \"bigEvent1\""),
            "{}",
            prompts[1]
        );
    }

    #[test]
    fn soft_violations_accepted_with_warnings() {
        let soft = fixture().replace("air thickens, energy wanes", "fog");
        let p = Scripted::new(vec![Ok(soft.clone()), Ok(soft.clone()), Ok(soft)]);
        let g = generate_round(&p, &context(1), 0, &GenerationPolicy::default()).unwrap();
        assert_eq!(g.attempts, 3);
        assert_eq!(g.warnings.len(), 1);
        assert!(g.warnings[0].contains("hint has 1 words"));
    }

    #[test]
    fn hard_violations_are_not_accepted() {
        let hard = fixture().replace("air thickens, energy wanes", "a negative omen");
        let p = Scripted::new(vec![Ok(hard.clone()), Ok(hard.clone()), Ok(hard)]);
        assert!(matches!(
            generate_round(&p, &context(1), 0, &GenerationPolicy::default()),
            Err(GenerationError::Exhausted { .. })
        ));
    }

    #[test]
    fn transport_error_is_immediate() {
        let p = Scripted::new(vec![Err(ProviderError::Timeout(
            std::time::Duration::from_secs(1),
        ))]);
        assert!(matches!(
            generate_round(&p, &context(1), 0, &GenerationPolicy::default()),
            Err(GenerationError::Provider(ProviderError::Timeout(_)))
        ));
    }

    #[test]
    fn template_rounds_are_byte_identical() {
        let policy = GenerationPolicy::default();
        let a = generate_round(&TemplateProvider, &context(1), 7, &policy).unwrap();
        let b = generate_round(&TemplateProvider, &context(1), 7, &policy).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.attempts, 1);
    }
}
