//! Self-check of the shipped resources: digests, the reference round output,
//! and byte fidelity of every rendered prompt once its slots are masked.

use serde::Serialize;
use serde_json::Value;

use crate::career::{DirectionChange, SentimentLabel};
use crate::pipeline::{
    build_image_prompt, build_round_prompt, decode_object, parse_round_response,
    round_prompt_values, validate_round, GenerationContext, PocketedSummary, PromptTemplate,
    RoundBundle, IMAGE_PROMPT_SLOTS, ROUND_PROMPT_SLOTS,
};
use crate::report::{report_values_for, REPORT_PROMPT_SLOTS};
use crate::resources::{sha256_hex, ResourceId, ResourceSet};

pub const FIXTURE_MILESTONE: &str = "Enroll in HCI Master's";
pub const FIXTURE_RANDOMS: [&str; 3] = [
    "Homesick",
    "Graduate Satisfied",
    "Become Interested in AR/VR",
];
pub const FIXTURE_SKILLS: [&str; 3] = ["HCI Basic Knowledge", "User Research", "UI Prototyping"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixtureCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl FixtureCheck {
    fn new(name: impl Into<String>, result: Result<String, String>) -> Self {
        let (passed, detail) = match result {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        FixtureCheck {
            name: name.into(),
            passed,
            detail,
        }
    }
}

fn squash(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn check_round_output(bundle: &RoundBundle) -> Result<String, String> {
    let mut problems = Vec::new();
    if bundle.milestone.title != FIXTURE_MILESTONE {
        problems.push(format!("milestone title {:?}", bundle.milestone.title));
    }
    let randoms: Vec<&str> = bundle.randoms.iter().map(|e| e.title.as_str()).collect();
    if randoms != FIXTURE_RANDOMS {
        problems.push(format!("random titles {randoms:?}"));
    }
    let skills: Vec<&str> = bundle.skills.iter().map(|e| e.title.as_str()).collect();
    if skills != FIXTURE_SKILLS {
        problems.push(format!("skill titles {skills:?}"));
    }
    let labels: Vec<Option<&SentimentLabel>> =
        bundle.randoms.iter().map(|e| e.label.as_ref()).collect();
    let expected = [
        SentimentLabel::Negative,
        SentimentLabel::Positive,
        SentimentLabel::change("HCI", "AR/VR"),
    ];
    if labels != expected.iter().map(Some).collect::<Vec<_>>() {
        problems.push(format!("labels {labels:?}"));
    }
    let hints = bundle.events().filter_map(|e| e.hint.as_deref()).count();
    if hints != 6 {
        problems.push(format!("{hints} hints"));
    }
    problems.extend(
        validate_round(bundle)
            .violations
            .iter()
            .map(ToString::to_string),
    );
    if problems.is_empty() {
        Ok("7 events, 6 hints, zero violations".into())
    } else {
        Err(problems.join("; "))
    }
}

fn fidelity(
    rendered: &str,
    template_text: &str,
    slots: &[&str],
    values: &[(&str, String)],
) -> Result<String, String> {
    let template = PromptTemplate::parse(template_text, slots);
    let masked = template.mask(rendered, values).map_err(|e| e.to_string())?;
    if masked != template_text {
        return Err("masked prompt differs from the template".into());
    }
    Ok(format!(
        "{} bytes rendered, {} slots",
        rendered.len(),
        template.slot_count()
    ))
}

fn sample_context(bundle: &RoundBundle) -> GenerationContext {
    let profile = crate::career::UserProfile {
        intro: "I am a first-year master's student majoring in HCI in the United States.".into(),
        goal: "I hope to become a PhD student in human-computer interaction in two years.".into(),
        start_date: chrono::NaiveDate::from_ymd_opt(2024, 10, 28).expect("valid date"),
    };
    let pocketed = [&bundle.milestone, &bundle.randoms[2], &bundle.skills[0]]
        .iter()
        .map(|e| PocketedSummary {
            title: e.title.clone(),
            body: e.body.clone(),
            category: e.category,
            label: e.label.clone(),
            day: 90,
        })
        .collect();
    GenerationContext {
        profile,
        round_index: 2,
        pocketed_events: pocketed,
        accepted_changes: vec![DirectionChange {
            from: "HCI".into(),
            to: "AR/VR".into(),
        }],
        current_date: chrono::NaiveDate::from_ymd_opt(2025, 1, 26).expect("valid date"),
    }
}

/// Runs every check against `set`. The rendering side always uses the
/// compiled-in templates, so an edited file on disk fails its fidelity check.
pub fn validate_fixtures(set: &ResourceSet) -> Vec<FixtureCheck> {
    let mut checks = Vec::new();
    for id in ResourceId::ALL {
        let actual = sha256_hex(set.get(id));
        let result = if actual == id.pinned_sha256() {
            Ok(actual)
        } else {
            Err(format!("sha256 {actual}, pinned {}", id.pinned_sha256()))
        };
        checks.push(FixtureCheck::new(
            format!("digest {}", id.file_name()),
            result,
        ));
    }

    let parsed = parse_round_response(set.get(ResourceId::Round1Output), 1);
    checks.push(FixtureCheck::new(
        "round-1 output parses and validates",
        parsed
            .as_ref()
            .map_err(ToString::to_string)
            .and_then(check_round_output),
    ));

    let record = squash(set.get(ResourceId::FinetuneExample));
    let cross = decode_object(set.get(ResourceId::Round1Output))
        .map_err(|e| e.to_string())
        .and_then(|map| {
            let missing: Vec<&String> = map
                .iter()
                .filter(|(_, v)| v.as_str().is_none_or(|s| !record.contains(&squash(s))))
                .map(|(k, _)| k)
                .collect();
            match missing.is_empty() {
                true => Ok(format!("all {} values found in the record", map.len())),
                false => Err(format!("not in the fine-tuning record: {missing:?}")),
            }
        });
    checks.push(FixtureCheck::new(
        "round-1 output matches the fine-tuning record",
        cross,
    ));

    // Fidelity uses the pristine fixture so it does not depend on the file under test.
    let bundle = parse_round_response(ResourceId::Round1Output.embedded(), 1)
        .expect("embedded fixture parses");
    let ctx = sample_context(&bundle);
    checks.push(FixtureCheck::new(
        "events prompt fidelity",
        fidelity(
            &build_round_prompt(&ctx),
            set.get(ResourceId::EventsGeneration),
            &ROUND_PROMPT_SLOTS,
            &round_prompt_values(&ctx),
        ),
    ));

    let image = build_image_prompt(&bundle.milestone).expect("fixture milestone");
    let content = vec![(
        "${bigEventContent}",
        format!("{} | {}", bundle.milestone.title, bundle.milestone.body),
    )];
    checks.push(FixtureCheck::new(
        "image prompt fidelity",
        fidelity(
            &image.text,
            set.get(ResourceId::MilestoneImage),
            &IMAGE_PROMPT_SLOTS,
            &content,
        ),
    ));

    let events: Vec<_> = bundle.events().collect();
    let values = report_values_for(&ctx.profile, &events);
    let rendered =
        PromptTemplate::parse(ResourceId::CareerAnalysis.embedded(), &REPORT_PROMPT_SLOTS)
            .render(&values);
    checks.push(FixtureCheck::new(
        "report prompt fidelity",
        fidelity(
            &rendered,
            set.get(ResourceId::CareerAnalysis),
            &REPORT_PROMPT_SLOTS,
            &values,
        ),
    ));

    let json_ok = serde_json::from_str::<Value>(set.get(ResourceId::Round1Output)).is_ok();
    checks.push(FixtureCheck::new(
        "round-1 output is bare JSON",
        if json_ok {
            Ok("decodes without fence stripping".into())
        } else {
            Err("not a bare JSON object".into())
        },
    ));
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pristine_resources_pass() {
        for check in validate_fixtures(&ResourceSet::embedded()) {
            assert!(check.passed, "{}: {}", check.name, check.detail);
        }
    }

    #[test]
    fn edited_template_fails_fidelity() {
        let dir = tempfile::tempdir().unwrap();
        ResourceSet::embedded().write_to(dir.path()).unwrap();
        let path = dir.path().join(ResourceId::EventsGeneration.file_name());
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("TWO-YEAR", "THREE-YEAR");
        std::fs::write(&path, text).unwrap();
        let checks = validate_fixtures(&ResourceSet::from_dir(dir.path()).unwrap());
        let failed: Vec<_> = checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        assert_eq!(
            failed,
            ["digest events_generation.v1.txt", "events prompt fidelity"]
        );
    }

    #[test]
    fn label_word_in_hint_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        ResourceSet::embedded().write_to(dir.path()).unwrap();
        let path = dir.path().join(ResourceId::Round1Output.file_name());
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("air thickens, energy wanes", "negative air thickens");
        std::fs::write(&path, text).unwrap();
        let checks = validate_fixtures(&ResourceSet::from_dir(dir.path()).unwrap());
        let round = checks
            .iter()
            .find(|c| c.name == "round-1 output parses and validates")
            .unwrap();
        assert!(!round.passed);
        assert!(
            round.detail.contains("label word \"negative\""),
            "{}",
            round.detail
        );
    }
}
