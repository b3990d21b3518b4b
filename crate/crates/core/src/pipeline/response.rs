use serde_json::{Map, Value};
use thiserror::Error;

use super::grammar::{parse_event_string, GrammarError};
use super::RoundBundle;
use crate::career::{CareerEvent, EventCategory};
use crate::ids::EventId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResponseError {
    #[error("response is not a JSON object: {0}")]
    Decode(String),
    #[error("missing key \"{0}\"")]
    MissingKey(String),
    #[error("unexpected key \"{0}\"")]
    UnexpectedKey(String),
    #[error("value of \"{0}\" is not a string")]
    NotAString(String),
    #[error("\"{key}\": {source}")]
    Grammar { key: String, source: GrammarError },
}

impl ResponseError {
    /// Schema and grammar failures, as opposed to undecodable output.
    pub fn is_schema(&self) -> bool {
        !matches!(self, ResponseError::Decode(_))
    }
}

/// Pulls the JSON object out of a model reply: drops one surrounding
/// markdown fence, then takes the outermost balanced `{...}`.
pub fn extract_json_object(raw: &str) -> Result<&str, ResponseError> {
    let mut text = raw.trim();
    if let Some(rest) = text.strip_prefix("```") {
        text = match rest.find('\n') {
            Some(nl) => &rest[nl + 1..],
            None => rest,
        };
        text = text.trim_end();
        if let Some(inner) = text.strip_suffix("```") {
            text = inner;
        }
    }
    let start = text
        .find('{')
        .ok_or_else(|| ResponseError::Decode("no '{' found".into()))?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (offset, ch) in text[start..].char_indices() {
        if in_string {
            match ch {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match ch {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Ok(&text[start..start + offset + 1]);
                }
            }
            _ => {}
        }
    }
    Err(ResponseError::Decode("unbalanced braces".into()))
}

pub(crate) fn decode_object(raw: &str) -> Result<Map<String, Value>, ResponseError> {
    let json = extract_json_object(raw)?;
    match serde_json::from_str::<Value>(json) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(ResponseError::Decode(
            "top-level value is not an object".into(),
        )),
        Err(e) => Err(ResponseError::Decode(e.to_string())),
    }
}

/// The 13 keys of round `n`, in canonical order.
pub fn round_keys(n: u32) -> Vec<String> {
    let mut keys = vec![format!("bigEvent{n}")];
    for k in 1..=3 {
        keys.push(format!("randomEvent{n}-{k}"));
        keys.push(format!("randomEvent{n}-{k}-hint"));
    }
    for k in 1..=3 {
        keys.push(format!("skill{n}-{k}"));
        keys.push(format!("skill{n}-{k}-hint"));
    }
    keys
}

/// Decodes a model reply into a [`RoundBundle`] for `round_index`.
pub fn parse_round_response(raw: &str, round_index: u32) -> Result<RoundBundle, ResponseError> {
    let map = decode_object(raw)?;
    let keys = round_keys(round_index);
    for key in &keys {
        if !map.contains_key(key) {
            return Err(ResponseError::MissingKey(key.clone()));
        }
    }
    if let Some(extra) = map.keys().find(|k| !keys.contains(k)) {
        return Err(ResponseError::UnexpectedKey(extra.clone()));
    }
    let text = |key: &str| -> Result<&str, ResponseError> {
        map[key]
            .as_str()
            .ok_or_else(|| ResponseError::NotAString(key.to_string()))
    };
    let event =
        |key: &str, id: String, category: EventCategory| -> Result<CareerEvent, ResponseError> {
            let expect_label = category == EventCategory::Random;
            let parsed = parse_event_string(text(key)?, expect_label).map_err(|source| {
                ResponseError::Grammar {
                    key: key.to_string(),
                    source,
                }
            })?;
            let hint = match category {
                EventCategory::Milestone => None,
                _ => Some(text(&format!("{key}-hint"))?.trim().to_string()),
            };
            Ok(CareerEvent::new(
                EventId(id),
                round_index,
                category,
                parsed.title,
                parsed.body,
                parsed.label,
                hint,
            ))
        };

    let n = round_index;
    let milestone = event(
        &format!("bigEvent{n}"),
        format!("r{n}-milestone"),
        EventCategory::Milestone,
    )?;
    let randoms = [1, 2, 3].map(|k| {
        event(
            &format!("randomEvent{n}-{k}"),
            format!("r{n}-random-{k}"),
            EventCategory::Random,
        )
    });
    let skills = [1, 2, 3].map(|k| {
        event(
            &format!("skill{n}-{k}"),
            format!("r{n}-skill-{k}"),
            EventCategory::Skill,
        )
    });
    let [r1, r2, r3] = randoms;
    let [s1, s2, s3] = skills;
    Ok(RoundBundle {
        round_index,
        milestone,
        randoms: [r1?, r2?, r3?],
        skills: [s1?, s2?, s3?],
    })
}
