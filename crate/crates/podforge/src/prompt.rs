//! Versioned prompt templates with `{placeholder}` interpolation.
//!
//! Templates are plain-text files named `<name>.v<N>.txt`; the highest
//! version per name wins. `{name}` interpolates, `{{` and `}}` escape
//! literal braces. The built-in set is embedded in the binary; a template
//! directory can override or extend it. Each known template declares the
//! placeholders it must contain, so a bad override fails at load time,
//! not in the middle of an episode.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("unknown template '{0}'")]
    UnknownTemplate(String),
    #[error("template '{template}' is missing required placeholder '{{{placeholder}}}'")]
    MissingPlaceholder { template: String, placeholder: String },
    #[error("template '{template}' references '{{{placeholder}}}' but no value was supplied")]
    UnboundPlaceholder { template: String, placeholder: String },
    #[error("template '{template}' has an unmatched '{{' at byte {position}")]
    UnmatchedBrace { template: String, position: usize },
    #[error("bad template file name '{0}': expected <name>.v<N>.txt")]
    BadFileName(String),
    #[error("reading template dir: {0}")]
    Io(#[from] std::io::Error),
}

pub const HOST_PROFILES: &str = "host_profiles";
pub const HOST_OUTLINE: &str = "host_outline";
pub const GUEST_RESPONSE: &str = "guest_response";
pub const GUEST_RESPONSE_FREE: &str = "guest_response_free";
pub const WRITER_COMPOSE: &str = "writer_compose";
pub const DIRECT_BASELINE: &str = "direct_baseline";
pub const SINGLE_AGENT: &str = "single_agent";
pub const VOICE_MATCH: &str = "voice_match";
pub const AUDIO_ENRICH: &str = "audio_enrich";
pub const JUDGE_PAIRWISE: &str = "judge_pairwise";

/// Placeholders every template must contain, by name. Templates not
/// listed here (user additions) are accepted without a contract.
fn required_placeholders(name: &str) -> &'static [&'static str] {
    match name {
        HOST_PROFILES => &["topic", "n_guests"],
        HOST_OUTLINE => &["topic", "profiles", "question_count"],
        GUEST_RESPONSE => &["topic", "profile", "outline"],
        GUEST_RESPONSE_FREE => &["topic", "profile"],
        WRITER_COMPOSE => &["topic", "host_name", "profiles", "outline", "responses", "min_lines"],
        DIRECT_BASELINE => &["topic", "n_guests"],
        SINGLE_AGENT => &["topic", "n_guests", "question_count"],
        VOICE_MATCH => &["roles", "library", "outline"],
        AUDIO_ENRICH => &["script", "line_count", "max_line"],
        JUDGE_PAIRWISE => &["dialogue_a", "dialogue_b"],
        _ => &[],
    }
}

const BUILTIN: &[(&str, u32, &str)] = &[
    (HOST_PROFILES, 1, include_str!("../prompts/host_profiles.v1.txt")),
    (HOST_OUTLINE, 1, include_str!("../prompts/host_outline.v1.txt")),
    (GUEST_RESPONSE, 1, include_str!("../prompts/guest_response.v1.txt")),
    (GUEST_RESPONSE_FREE, 1, include_str!("../prompts/guest_response_free.v1.txt")),
    (WRITER_COMPOSE, 1, include_str!("../prompts/writer_compose.v1.txt")),
    (DIRECT_BASELINE, 1, include_str!("../prompts/direct_baseline.v1.txt")),
    (SINGLE_AGENT, 1, include_str!("../prompts/single_agent.v1.txt")),
    (VOICE_MATCH, 1, include_str!("../prompts/voice_match.v1.txt")),
    (AUDIO_ENRICH, 1, include_str!("../prompts/audio_enrich.v1.txt")),
    (JUDGE_PAIRWISE, 1, include_str!("../prompts/judge_pairwise.v1.txt")),
];

#[derive(Debug, Clone)]
pub struct PromptTemplate {
    name: String,
    version: u32,
    body: String,
}

impl PromptTemplate {
    /// Stable identifier recorded in config snapshots, e.g. `"writer_compose.v1"`.
    pub fn id(&self) -> String {
        format!("{}.v{}", self.name, self.version)
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    /// Interpolates `vars` into the body. Every `{placeholder}` in the
    /// body must be bound; unused vars are ignored.
    pub fn render(&self, vars: &[(&str, &str)]) -> Result<String, PromptError> {
        let mut out = String::with_capacity(self.body.len());
        let bytes = self.body.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            match bytes[i] {
                b'{' if bytes.get(i + 1) == Some(&b'{') => {
                    out.push('{');
                    i += 2;
                }
                b'}' if bytes.get(i + 1) == Some(&b'}') => {
                    out.push('}');
                    i += 2;
                }
                b'{' => {
                    let rest = &self.body[i + 1..];
                    let end = rest.find('}').ok_or_else(|| PromptError::UnmatchedBrace {
                        template: self.name.clone(),
                        position: i,
                    })?;
                    let key = &rest[..end];
                    let value = vars.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).ok_or_else(
                        || PromptError::UnboundPlaceholder {
                            template: self.name.clone(),
                            placeholder: key.to_string(),
                        },
                    )?;
                    out.push_str(value);
                    i += 1 + end + 1;
                }
                _ => {
                    let ch = self.body[i..].chars().next().expect("in-bounds char");
                    out.push(ch);
                    i += ch.len_utf8();
                }
            }
        }
        Ok(out)
    }

    fn check_contract(&self) -> Result<(), PromptError> {
        for ph in required_placeholders(&self.name) {
            let token = format!("{{{ph}}}");
            if !self.body.contains(&token) {
                return Err(PromptError::MissingPlaceholder {
                    template: self.name.clone(),
                    placeholder: (*ph).to_string(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PromptStore {
    templates: BTreeMap<String, PromptTemplate>,
}

impl PromptStore {
    /// The embedded default templates.
    pub fn builtin() -> Self {
        let mut templates = BTreeMap::new();
        for (name, version, body) in BUILTIN {
            let t = PromptTemplate {
                name: (*name).to_string(),
                version: *version,
                body: (*body).to_string(),
            };
            t.check_contract().expect("builtin template satisfies its contract");
            templates.insert((*name).to_string(), t);
        }
        Self { templates }
    }

    /// Builtin templates overlaid with `<name>.v<N>.txt` files from `dir`.
    /// A file wins over the builtin of the same name regardless of
    /// version number; among files, the highest version wins.
    pub fn builtin_with_overrides(dir: &Path) -> Result<Self, PromptError> {
        let mut store = Self::builtin();
        let mut best: BTreeMap<String, PromptTemplate> = BTreeMap::new();
        for entry in std::fs::read_dir(dir)? {
            let entry = entry?;
            let file_name = entry.file_name().to_string_lossy().into_owned();
            if !file_name.ends_with(".txt") {
                continue;
            }
            let (name, version) = parse_template_file_name(&file_name)
                .ok_or_else(|| PromptError::BadFileName(file_name.clone()))?;
            let body = std::fs::read_to_string(entry.path())?;
            let t = PromptTemplate { name: name.clone(), version, body };
            t.check_contract()?;
            match best.get(&name) {
                Some(existing) if existing.version >= version => {}
                _ => {
                    best.insert(name, t);
                }
            }
        }
        for (name, t) in best {
            store.templates.insert(name, t);
        }
        Ok(store)
    }

    pub fn get(&self, name: &str) -> Result<&PromptTemplate, PromptError> {
        self.templates.get(name).ok_or_else(|| PromptError::UnknownTemplate(name.to_string()))
    }

    pub fn render(&self, name: &str, vars: &[(&str, &str)]) -> Result<String, PromptError> {
        self.get(name)?.render(vars)
    }

    /// `name -> id` for every template, for config snapshots.
    pub fn ids(&self) -> BTreeMap<String, String> {
        self.templates.iter().map(|(k, v)| (k.clone(), v.id())).collect()
    }
}

fn parse_template_file_name(file_name: &str) -> Option<(String, u32)> {
    let stem = file_name.strip_suffix(".txt")?;
    let dot = stem.rfind(".v")?;
    let name = &stem[..dot];
    let version: u32 = stem[dot + 2..].parse().ok()?;
    if name.is_empty() {
        return None;
    }
    Some((name.to_string(), version))
}
