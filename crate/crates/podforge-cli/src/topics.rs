//! Topic file ingestion. Two formats share one loader: tab-separated
//! lines (`id<TAB>category<TAB>text`, or `category<TAB>text` with a
//! generated id) and a JSON array of topic records. Content starting with
//! `[` is treated as JSON; everything else as lines. Blank lines and `#`
//! comments are skipped in line mode.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use podforge::script::{Topic, TopicCategory};
use thiserror::Error;

use crate::error::CliError;

#[derive(Debug, Error)]
pub enum TopicsError {
    #[error("topics {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("topics {path}:{line}: {reason}")]
    Line { path: PathBuf, line: usize, reason: String },
    #[error("topics {path}: {reason}")]
    File { path: PathBuf, reason: String },
    #[error("topics {path}: no topics found")]
    Empty { path: PathBuf },
}

impl From<TopicsError> for CliError {
    fn from(e: TopicsError) -> Self {
        CliError::usage(e)
    }
}

const CATEGORY_HINT: &str =
    "expected generic, knowledge, common_sense, counterfactual, or other";

pub fn load_topics(path: &Path) -> Result<Vec<Topic>, TopicsError> {
    let body = std::fs::read_to_string(path)
        .map_err(|source| TopicsError::Io { path: path.to_path_buf(), source })?;
    let topics = if body.trim_start().starts_with('[') {
        parse_json(path, &body)?
    } else {
        parse_lines(path, &body)?
    };
    if topics.is_empty() {
        return Err(TopicsError::Empty { path: path.to_path_buf() });
    }
    Ok(topics)
}

fn parse_lines(path: &Path, body: &str) -> Result<Vec<Topic>, TopicsError> {
    let fail = |line: usize, reason: String| TopicsError::Line {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut topics = Vec::new();
    let mut first_use: BTreeMap<String, usize> = BTreeMap::new();
    for (index, raw) in body.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let (id, tag, text) = match fields.as_slice() {
            [id, tag, text] => ((*id).to_string(), *tag, *text),
            [tag, text] => (format!("t{line_no:03}"), *tag, *text),
            _ => {
                return Err(fail(
                    line_no,
                    format!(
                        "expected `id<TAB>category<TAB>text` or `category<TAB>text`, found {} field(s)",
                        fields.len()
                    ),
                ))
            }
        };
        let category = TopicCategory::parse(tag)
            .ok_or_else(|| fail(line_no, format!("unknown category '{tag}' ({CATEGORY_HINT})")))?;
        let topic = Topic::new(id, category, text).map_err(|e| fail(line_no, e.to_string()))?;
        check_id(&topic.id).map_err(|reason| fail(line_no, reason))?;
        if let Some(first) = first_use.insert(topic.id.clone(), line_no) {
            return Err(fail(
                line_no,
                format!("duplicate topic id '{}' (first used on line {first})", topic.id),
            ));
        }
        topics.push(topic);
    }
    Ok(topics)
}

fn parse_json(path: &Path, body: &str) -> Result<Vec<Topic>, TopicsError> {
    let fail = |reason: String| TopicsError::File { path: path.to_path_buf(), reason };
    let raw: Vec<Topic> = serde_json::from_str(body).map_err(|e| fail(e.to_string()))?;
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut topics = Vec::with_capacity(raw.len());
    for (index, entry) in raw.into_iter().enumerate() {
        let topic = Topic::new(entry.id, entry.category, entry.text)
            .map_err(|e| fail(format!("topic {index}: {e}")))?;
        check_id(&topic.id).map_err(|reason| fail(format!("topic {index}: {reason}")))?;
        if let Some(first) = seen.insert(topic.id.clone(), index) {
            return Err(fail(format!(
                "topic {index}: duplicate topic id '{}' (first used by topic {first})",
                topic.id
            )));
        }
        topics.push(topic);
    }
    Ok(topics)
}

/// Topic ids become run directory names, so they are restricted to a
/// filesystem-safe alphabet.
fn check_id(id: &str) -> Result<(), String> {
    let safe = id
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '_' || c == '-');
    if !safe {
        return Err(format!(
            "topic id '{id}' contains characters outside [A-Za-z0-9._-]"
        ));
    }
    if id.chars().all(|c| c == '.') {
        return Err(format!("topic id '{id}' is not a usable directory name"));
    }
    Ok(())
}
