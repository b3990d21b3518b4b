use thiserror::Error;

use crate::career::SentimentLabel;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("event string must start with \"title: \"")]
    MissingTitlePrefix,
    #[error("event string has no \" | \" between title and content")]
    MissingSeparator,
    #[error("random event must end with a [label]")]
    MissingLabel,
    #[error("unknown label [{0}]")]
    UnknownLabel(String),
    #[error("change label [{0}] must read \"Change: from → to\"")]
    MalformedChange(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedEvent {
    pub title: String,
    pub body: String,
    pub label: Option<SentimentLabel>,
}

/// Parses `title: <title> | <content> [<label>]`.
///
/// With `expect_label` the trailing bracket is required and parsed; without
/// it a trailing bracket (such as an image tag on a milestone) is dropped.
pub fn parse_event_string(raw: &str, expect_label: bool) -> Result<ParsedEvent, GrammarError> {
    let rest = raw
        .trim()
        .strip_prefix("title:")
        .ok_or(GrammarError::MissingTitlePrefix)?;
    let bar = rest.find('|').ok_or(GrammarError::MissingSeparator)?;
    let (before, after) = (&rest[..bar], &rest[bar + 1..]);
    let spaced = before.ends_with(char::is_whitespace) && after.starts_with(char::is_whitespace);
    if !spaced {
        return Err(GrammarError::MissingSeparator);
    }
    let title = before.trim().to_string();
    let content = after.trim();

    let bracket = content
        .strip_suffix(']')
        .and_then(|inner| inner.rfind('[').map(|open| (open, &inner[open + 1..])));
    let (body, label) = match bracket {
        Some((open, token)) => {
            let body = content[..open].trim_end().to_string();
            let label = if expect_label {
                Some(parse_label(token)?)
            } else {
                None
            };
            (body, label)
        }
        None if expect_label => return Err(GrammarError::MissingLabel),
        None => (content.to_string(), None),
    };
    Ok(ParsedEvent { title, body, label })
}

/// Parses a label token (the text inside the brackets). Both `→` and `->`
/// are accepted as the change arrow.
pub fn parse_label(token: &str) -> Result<SentimentLabel, GrammarError> {
    let t = token.trim();
    let lower = t.to_ascii_lowercase();
    match lower.as_str() {
        "positive" => return Ok(SentimentLabel::Positive),
        "neutral" => return Ok(SentimentLabel::Neutral),
        "negative" => return Ok(SentimentLabel::Negative),
        _ => {}
    }
    if lower.starts_with("change") {
        let spec = t["change".len()..].trim_start();
        let spec = spec
            .strip_prefix(':')
            .ok_or_else(|| GrammarError::MalformedChange(t.to_string()))?;
        let (from, to) = spec
            .split_once('→')
            .or_else(|| spec.split_once("->"))
            .ok_or_else(|| GrammarError::MalformedChange(t.to_string()))?;
        let (from, to) = (from.trim(), to.trim());
        if from.is_empty() || to.is_empty() {
            return Err(GrammarError::MalformedChange(t.to_string()));
        }
        return Ok(SentimentLabel::change(from, to));
    }
    Err(GrammarError::UnknownLabel(t.to_string()))
}

/// Canonical event string; the inverse of [`parse_event_string`].
pub fn format_event_string(title: &str, body: &str, label: Option<&SentimentLabel>) -> String {
    match label {
        Some(label) => format!("title: {title} | {body} [{label}]"),
        None => format!("title: {title} | {body}"),
    }
}

/// Whitespace-canonical form of an event string: trimmed, one space after
/// `title:`, single spaces around the first ` | `, one space before a
/// trailing label, and `->` in a change label written as `→`.
pub fn normalize_event_string(raw: &str) -> String {
    let s = raw.trim();
    let Some(rest) = s.strip_prefix("title:") else {
        return s.to_string();
    };
    let Some(bar) = rest.find('|') else {
        return s.to_string();
    };
    let title = rest[..bar].trim();
    let content = rest[bar + 1..].trim();
    let content = match content.strip_suffix(']').and_then(|inner| inner.rfind('[')) {
        Some(open) => {
            let body = content[..open].trim_end();
            let token = content[open + 1..content.len() - 1].trim();
            let token = match token.split_once(':') {
                Some((head, tail)) if head.trim().eq_ignore_ascii_case("change") => {
                    let tail = tail.replace("->", "→");
                    match tail.split_once('→') {
                        Some((a, b)) => format!("{}: {} → {}", head.trim(), a.trim(), b.trim()),
                        None => token.to_string(),
                    }
                }
                _ => token.to_string(),
            };
            format!("{body} [{token}]")
        }
        None => content.to_string(),
    };
    format!("title: {title} | {content}")
}
