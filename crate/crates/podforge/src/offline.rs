//! Deterministic completion provider for offline runs.
//!
//! [`OfflineLlm`] recognizes each builtin prompt by a distinctive marker
//! line, parses the parameters the prompt carries (counts, topic, JSON
//! payloads), and produces a well-formed reply. Identical prompts always
//! produce identical replies; text variety comes from hash-keyed picks
//! out of fixed word pools, never from ambient randomness.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;
use serde_json::json;

use crate::llm::{CompletionProvider, CompletionRequest, CompletionResponse, ProviderError};
use crate::script::{GuestProfile, GuestResponse, InterviewOutline};
use crate::stablehash::fnv1a64;

/// Stands in for a chat-completion endpoint. Routes on the latest user
/// message containing a known marker, so repair and correction re-prompts
/// fall through to the original prompt.
#[derive(Debug, Default, Clone, Copy)]
pub struct OfflineLlm;

impl OfflineLlm {
    pub fn new() -> Self {
        OfflineLlm
    }
}

impl CompletionProvider for OfflineLlm {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        for message in request.messages.iter().rev() {
            if message.role != "user" {
                continue;
            }
            if let Some(text) = route(&message.content) {
                return text.map(|t| CompletionResponse { text: t });
            }
        }
        Err(ProviderError::Malformed(
            "offline provider received a prompt with no recognized marker".into(),
        ))
    }
}

fn route(prompt: &str) -> Option<Result<String, ProviderError>> {
    if prompt.contains("Please follow the steps:") {
        Some(single_agent_reply(prompt))
    } else if prompt.contains("Please Write a corresponding talk show conversation script") {
        Some(direct_baseline_reply(prompt))
    } else if prompt.contains("Propose exactly ") {
        Some(profiles_reply(prompt))
    } else if prompt.contains("Create an interview outline consisting of exactly ") {
        Some(outline_reply(prompt))
    } else if prompt.contains("Your profile (JSON): ") {
        Some(guest_reply(prompt))
    } else if prompt.contains("You are the script writer") {
        Some(writer_reply(prompt))
    } else if prompt.contains("Roles to cast (JSON): ") {
        Some(casting_reply(prompt))
    } else if prompt.contains("You are the audio director") {
        Some(enrich_reply(prompt))
    } else if prompt.contains("You are an impartial judge") {
        Some(judge_reply(prompt))
    } else {
        None
    }
}

fn missing(what: &str) -> ProviderError {
    ProviderError::Malformed(format!("offline provider could not find {what} in the prompt"))
}

/// Rest of the line following `marker`, trimmed.
fn value_after<'a>(text: &'a str, marker: &str) -> Option<&'a str> {
    let at = text.find(marker)? + marker.len();
    let rest = &text[at..];
    let end = rest.find('\n').unwrap_or(rest.len());
    Some(rest[..end].trim())
}

/// Decimal number immediately following `marker`.
fn number_after(text: &str, marker: &str) -> Option<usize> {
    let at = text.find(marker)? + marker.len();
    let digits: String = text[at..].chars().take_while(char::is_ascii_digit).collect();
    digits.parse().ok()
}

/// Text strictly between the first `start` and the next `end`.
fn between<'a>(text: &'a str, start: &str, end: &str) -> Option<&'a str> {
    let from = text.find(start)? + start.len();
    let rest = &text[from..];
    let to = rest.find(end)?;
    Some(rest[..to].trim())
}

fn json_line<T: serde::de::DeserializeOwned>(
    text: &str,
    marker: &str,
) -> Result<T, ProviderError> {
    let raw = value_after(text, marker).ok_or_else(|| missing(marker))?;
    serde_json::from_str(raw).map_err(|e| {
        ProviderError::Malformed(format!("offline provider could not parse {marker}{e}"))
    })
}

fn pick<'a>(pool: &[&'a str], key: &str) -> &'a str {
    pool[(fnv1a64(key.as_bytes()) % pool.len() as u64) as usize]
}

const STYLES: [&str; 6] = [
    "warm and steady",
    "brisk, openly curious",
    "measured, thoughtful",
    "animated, leaning in",
    "calm and precise",
    "light, with a smile",
];

fn style(i: usize) -> &'static str {
    STYLES[i % STYLES.len()]
}

const ARCHETYPES: [(&str, &str, &str, &str, &str); 6] = [
    (
        "Dr. Maya Chen",
        "field research and measurement",
        "She has spent a decade running field studies and teaching research methods.",
        "the evidence should lead the conversation, not follow it",
        "female",
    ),
    (
        "Prof. Alan Reyes",
        "history and theory",
        "He wrote a widely used survey of the field and its origins.",
        "today's debates echo much older ones, and the echoes are instructive",
        "male",
    ),
    (
        "Sam Okafor",
        "industry practice",
        "They have shipped production systems at three very different companies.",
        "what survives contact with real users is what actually matters",
        "unspecified",
    ),
    (
        "Dr. Lena Fischer",
        "policy and regulation",
        "She advises public bodies on standards, audits, and oversight.",
        "rules end up shaping outcomes more than intentions ever do",
        "female",
    ),
    (
        "Raj Patel",
        "engineering tradeoffs",
        "He leads a team that balances cost, speed, and reliability daily.",
        "every design choice buys one thing at the price of another",
        "male",
    ),
    (
        "Jordan Lee",
        "community education",
        "They run workshops translating research for complete newcomers.",
        "ideas only start to matter once people outside the field can use them",
        "unspecified",
    ),
];

const OBSERVATIONS: [&str; 10] = [
    "the data keeps surprising us in productive ways",
    "small early choices compound into very large outcomes",
    "most disagreements dissolve once terms are pinned down",
    "the boring infrastructure questions decide everything downstream",
    "practitioners and researchers still talk past each other",
    "the second-order effects matter more than the headline ones",
    "incentives quietly steer what gets measured at all",
    "the exceptions teach more than the averages do",
    "progress looks sudden but is prepared over long stretches",
    "context changes the answer more than people expect",
];

const REACTIONS: [&str; 4] = [
    "Building on that thought",
    "I want to push back gently",
    "Let me add a different angle",
    "That matches what I have seen",
];

const HOST_LEADS: [&str; 4] = [
    "Let us dig into this",
    "Here is something I have wanted to ask",
    "Picking up the next thread",
    "This question comes up constantly",
];

const ANGLES: [&str; 8] = [
    "fundamentals",
    "strongest evidence",
    "common misconceptions",
    "everyday impact",
    "open problems",
    "history",
    "hidden tradeoffs",
    "future directions",
];

const QUESTION_STEMS: [&str; 4] = [
    "How would you explain the {angle} of {topic} to a curious listener?",
    "Where do the {angle} of {topic} matter most right now?",
    "What gets lost when people debate the {angle} of {topic}?",
    "Which concrete examples best show the {angle} of {topic}?",
];

fn canned_profiles(n: usize, topic: &str) -> Vec<serde_json::Value> {
    ARCHETYPES
        .iter()
        .take(n)
        .map(|(name, expertise, background, perspective, gender)| {
            json!({
                "name": name,
                "expertise": expertise,
                "background": background,
                "perspective": format!("On {topic}, {perspective}."),
                "stated_gender": gender,
            })
        })
        .collect()
}

fn canned_question(i: usize, topic: &str) -> String {
    let stem = QUESTION_STEMS[i % QUESTION_STEMS.len()];
    let angle = ANGLES[i % ANGLES.len()];
    stem.replace("{angle}", angle).replace("{topic}", topic)
}

fn push_line(lines: &mut Vec<serde_json::Value>, speaker: &str, text: String) {
    let i = lines.len();
    lines.push(json!({ "speaker": speaker, "text": text, "style_instruction": style(i) }));
}

fn profiles_reply(prompt: &str) -> Result<String, ProviderError> {
    let n = number_after(prompt, "Propose exactly ").ok_or_else(|| missing("the guest count"))?;
    let topic = value_after(prompt, "Here is the topic of the talk show: ")
        .ok_or_else(|| missing("the topic"))?;
    Ok(json!({ "profiles": canned_profiles(n, topic) }).to_string())
}

fn outline_reply(prompt: &str) -> Result<String, ProviderError> {
    let count = number_after(prompt, "consisting of exactly ")
        .ok_or_else(|| missing("the question count"))?;
    let topic = value_after(prompt, "Here is the topic of the talk show: ")
        .ok_or_else(|| missing("the topic"))?;
    let questions: Vec<String> = (0..count).map(|i| canned_question(i, topic)).collect();
    Ok(json!({ "questions": questions }).to_string())
}

fn guest_answer(profile: &GuestProfile, prompt_fragment: &str, index: usize) -> String {
    let lead = pick(&OBSERVATIONS, &format!("{}|{index}|lead", profile.name));
    let tail = pick(&OBSERVATIONS, &format!("{}|{index}|tail", profile.name));
    format!(
        "Speaking from my work in {}, {lead}. On {prompt_fragment}, I would add that {tail}.",
        profile.expertise
    )
}

fn guest_reply(prompt: &str) -> Result<String, ProviderError> {
    let profile: GuestProfile = json_line(prompt, "Your profile (JSON): ")?;
    let answers: Vec<String> = if prompt.contains("There is no prepared outline") {
        let topic = value_after(prompt, "Here is the topic of the talk show: ")
            .ok_or_else(|| missing("the topic"))?;
        (0..3)
            .map(|i| guest_answer(&profile, &format!("my point {} about {topic}", i + 1), i))
            .collect()
    } else {
        let outline: InterviewOutline = json_line(prompt, "Interview outline (JSON): ")?;
        outline
            .questions
            .iter()
            .enumerate()
            .map(|(i, q)| {
                let fragment = q.trim_end_matches('?').to_lowercase();
                guest_answer(&profile, &format!("the question of {fragment}"), i)
            })
            .collect()
    };
    Ok(json!({ "answers": answers }).to_string())
}

fn writer_reply(prompt: &str) -> Result<String, ProviderError> {
    let topic = value_after(prompt, "Here is the topic of the talk show: ")
        .ok_or_else(|| missing("the topic"))?;
    let host_name = between(prompt, "The host's speaker label is \"", "\"")
        .ok_or_else(|| missing("the host label"))?;
    let profiles: Vec<GuestProfile> = json_line(prompt, "Guest profiles (JSON): ")?;
    let responses: Vec<GuestResponse> = json_line(prompt, "Guest responses (JSON): ")?;
    let min_lines =
        number_after(prompt, "Write at least ").ok_or_else(|| missing("the line minimum"))?;
    let outline_raw =
        value_after(prompt, "Interview outline (JSON): ").ok_or_else(|| missing("the outline"))?;
    let outline: Option<InterviewOutline> = if outline_raw == "null" {
        None
    } else {
        Some(serde_json::from_str(outline_raw).map_err(|e| {
            ProviderError::Malformed(format!("offline provider could not parse the outline: {e}"))
        })?)
    };

    let answers_for = |name: &str| -> &[String] {
        responses
            .iter()
            .find(|r| r.guest_name == name)
            .map(|r| r.answers.as_slice())
            .unwrap_or(&[])
    };
    let rounds = match &outline {
        Some(o) => o.questions.len(),
        None => responses.iter().map(|r| r.answers.len()).max().unwrap_or(0),
    };

    let mut lines: Vec<serde_json::Value> = Vec::new();
    let names: Vec<&str> = profiles.iter().map(|p| p.name.as_str()).collect();
    push_line(
        &mut lines,
        host_name,
        format!(
            "Welcome to the show. Today we are talking about {topic}, and joining me are {}.",
            names.join(" and ")
        ),
    );
    for round in 0..rounds {
        let ask = match &outline {
            Some(o) => {
                format!("{}. {}", HOST_LEADS[round % HOST_LEADS.len()], o.questions[round])
            }
            None => format!(
                "{}. What would you each like listeners to take away about {topic}?",
                HOST_LEADS[round % HOST_LEADS.len()]
            ),
        };
        push_line(&mut lines, host_name, ask);
        for (gi, profile) in profiles.iter().enumerate() {
            let Some(answer) = answers_for(&profile.name).get(round) else { continue };
            let text = if gi == 0 {
                answer.clone()
            } else {
                format!("{}: {answer}", REACTIONS[(round + gi) % REACTIONS.len()])
            };
            push_line(&mut lines, &profile.name, text);
        }
    }
    // Guests without any picked-up answer still must speak once.
    for profile in &profiles {
        if !lines.iter().any(|l| l["speaker"] == profile.name.as_str()) {
            push_line(
                &mut lines,
                &profile.name,
                format!(
                    "Briefly, from where I sit in {}: {topic} deserves the attention.",
                    profile.expertise
                ),
            );
        }
    }
    let mut filler = 0usize;
    while lines.len() + 1 < min_lines {
        let profile = &profiles[filler % profiles.len()];
        push_line(&mut lines, host_name, format!("Before we close, one more thought on {topic}?"));
        push_line(
            &mut lines,
            &profile.name,
            format!(
                "Only that {}.",
                pick(&OBSERVATIONS, &format!("{}|closing|{filler}", profile.name))
            ),
        );
        filler += 1;
    }
    push_line(
        &mut lines,
        host_name,
        format!(
            "That is all the time we have. My thanks to {} and to you for listening.",
            names.join(", ")
        ),
    );
    Ok(json!({ "lines": lines }).to_string())
}

fn direct_baseline_reply(prompt: &str) -> Result<String, ProviderError> {
    let topic = between(prompt, "Here is the topic of the talk show: ", " Please Write")
        .ok_or_else(|| missing("the topic"))?;
    let n = number_after(prompt, "featuring 1 host and ")
        .ok_or_else(|| missing("the guest count"))?;
    let profiles = canned_profiles(n, topic);
    let mut lines: Vec<serde_json::Value> = Vec::new();
    push_line(&mut lines, "Host", format!("Welcome to our talk show about {topic}."));
    for profile in &profiles {
        let name = profile["name"].as_str().unwrap_or_default();
        push_line(&mut lines, "Host", format!("Tell us what you think about {topic}."));
        push_line(
            &mut lines,
            name,
            format!("I think {topic} is very interesting and important for everyone."),
        );
        push_line(
            &mut lines,
            "Host",
            format!("That is very interesting. {topic} really is important."),
        );
    }
    push_line(&mut lines, "Host", "Thank you all for coming to the show.".to_string());
    Ok(json!({
        "host_name": "Host",
        "guests": profiles,
        "lines": lines,
    })
    .to_string())
}

/// Mirrors the one-call pipeline texture: the outline is followed, but
/// the show stops after the last answer with no concluding remarks.
fn single_agent_reply(prompt: &str) -> Result<String, ProviderError> {
    let topic = between(prompt, "Here is the topic of the talk show: ", " Please follow")
        .ok_or_else(|| missing("the topic"))?;
    let n = number_after(prompt, "invite ").ok_or_else(|| missing("the guest count"))?;
    let question_count =
        number_after(prompt, "consisting of ").ok_or_else(|| missing("the question count"))?;
    let profiles = canned_profiles(n, topic);
    let names: Vec<&str> =
        profiles.iter().map(|p| p["name"].as_str().unwrap_or_default()).collect();
    let mut lines: Vec<serde_json::Value> = Vec::new();
    push_line(
        &mut lines,
        "Host",
        format!("Welcome. Our topic is {topic}, and with me are {}.", names.join(" and ")),
    );
    for qi in 0..question_count {
        push_line(&mut lines, "Host", canned_question(qi, topic));
        for name in &names {
            let flat = pick(&OBSERVATIONS[..3], &format!("{name}|single|{qi}"));
            push_line(&mut lines, name, format!("I think {topic} matters here, because {flat}."));
        }
    }
    Ok(json!({
        "host_name": "Host",
        "guests": profiles,
        "lines": lines,
    })
    .to_string())
}

#[derive(Debug, Deserialize)]
struct RoleIn {
    role: String,
    #[serde(default)]
    stated_gender: Option<String>,
}

#[derive(Debug, Deserialize)]
struct VoiceIn {
    voice_id: String,
    #[serde(default)]
    gender: Option<String>,
}

fn gender_compatible(role: &str, voice: &str) -> bool {
    match role {
        "male" => voice != "female",
        "female" => voice != "male",
        _ => true,
    }
}

/// Depth-first search for an injective, gender-compatible assignment in
/// role order, trying voices in library order. Finds a valid cast
/// whenever one exists; when none does, falls back to pairing roles with
/// voices positionally so the caller's validation reports the conflict.
fn cast_roles(roles: &[RoleIn], voices: &[VoiceIn]) -> BTreeMap<String, String> {
    fn search(
        roles: &[RoleIn],
        voices: &[VoiceIn],
        at: usize,
        used: &mut BTreeSet<usize>,
        out: &mut BTreeMap<String, String>,
    ) -> bool {
        let Some(role) = roles.get(at) else { return true };
        let role_gender = role.stated_gender.as_deref().unwrap_or("unspecified");
        for (vi, voice) in voices.iter().enumerate() {
            if used.contains(&vi) {
                continue;
            }
            if !gender_compatible(role_gender, voice.gender.as_deref().unwrap_or("unknown")) {
                continue;
            }
            used.insert(vi);
            out.insert(role.role.clone(), voice.voice_id.clone());
            if search(roles, voices, at + 1, used, out) {
                return true;
            }
            used.remove(&vi);
            out.remove(&role.role);
        }
        false
    }
    let mut used = BTreeSet::new();
    let mut out = BTreeMap::new();
    if search(roles, voices, 0, &mut used, &mut out) {
        return out;
    }
    roles
        .iter()
        .zip(voices)
        .map(|(r, v)| (r.role.clone(), v.voice_id.clone()))
        .collect()
}

fn casting_reply(prompt: &str) -> Result<String, ProviderError> {
    let roles: Vec<RoleIn> = json_line(prompt, "Roles to cast (JSON): ")?;
    let voices: Vec<VoiceIn> = json_line(prompt, "Voice library (JSON): ")?;
    Ok(json!({ "assignments": cast_roles(&roles, &voices) }).to_string())
}

fn enrich_reply(prompt: &str) -> Result<String, ProviderError> {
    let line_count =
        number_after(prompt, "The script has ").ok_or_else(|| missing("the line count"))?;
    if line_count == 0 {
        return Err(ProviderError::Malformed("offline provider got a zero-line script".into()));
    }
    let mut background = vec![json!({
        "kind": "music",
        "description": "gentle theme music with a short rising intro",
        "start_line": 0,
        "end_line": 0,
        "gain_db": -18.0,
    })];
    if line_count >= 2 {
        background.push(json!({
            "kind": "music",
            "description": "soft outro theme fading down under the goodbye",
            "start_line": line_count - 1,
            "end_line": line_count - 1,
            "gain_db": -20.0,
        }));
    }
    Ok(json!({ "background": background }).to_string())
}

/// Dimension value for one dialogue, in 0..=3, keyed only by the text.
fn judge_axis(dimension: &str, dialogue: &str) -> i64 {
    let mut key = Vec::with_capacity(dimension.len() + 1 + dialogue.len());
    key.extend_from_slice(dimension.as_bytes());
    key.push(0);
    key.extend_from_slice(dialogue.as_bytes());
    (fnv1a64(&key) % 4) as i64
}

fn judge_reply(prompt: &str) -> Result<String, ProviderError> {
    let fences: Vec<usize> = prompt.match_indices("\"\"\"").map(|(i, _)| i).collect();
    if fences.len() < 4 {
        return Err(missing("two fenced dialogues"));
    }
    let a = prompt[fences[0] + 3..fences[1]].trim();
    let b = prompt[fences[2] + 3..fences[3]].trim();
    let mut scores = serde_json::Map::new();
    for dim in crate::judge::JudgeDimension::ALL {
        let value = judge_axis(dim.as_str(), a) - judge_axis(dim.as_str(), b);
        scores.insert(dim.as_str().to_string(), json!(value));
    }
    let evidence = format!(
        "Dialogue A has {} lines and dialogue B has {} lines; each dimension was \
         scored from the texts alone, independent of presentation order.",
        a.lines().count(),
        b.lines().count()
    );
    Ok(format!(
        "{{\"evidence\": {}, \"scores\": {}}}",
        serde_json::Value::String(evidence),
        serde_json::Value::Object(scores)
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::judge::{judge_pair, JudgeConfig, JudgeDimension};
    use crate::llm::RetryPolicy;
    use crate::prompt::PromptStore;
    use crate::script::{Provenance, ScriptConfig, ScriptEngine, Topic, TopicCategory};

    fn topic() -> Topic {
        Topic::new("t1", TopicCategory::Knowledge, "how tides store energy").unwrap()
    }

    fn engine_fixture() -> (PromptStore, ScriptConfig) {
        let mut config = ScriptConfig::default();
        config.retry = RetryPolicy::immediate(1);
        (PromptStore::builtin(), config)
    }

    #[test]
    fn multi_agent_episode_is_valid_and_deterministic() {
        let provider = OfflineLlm::new();
        let (prompts, config) = engine_fixture();
        let engine = ScriptEngine::new(&provider, &prompts, config);
        let script = engine.run_episode(&topic(), 2, true).unwrap();
        assert_eq!(script.provenance, Provenance::MultiAgent);
        assert_eq!(script.guests.len(), 2);
        assert!(script.lines.len() >= 8);
        assert_eq!(script.outline.as_ref().unwrap().questions.len(), 5);
        let again = engine.run_episode(&topic(), 2, true).unwrap();
        assert_eq!(script, again);
    }

    #[test]
    fn episode_without_outline_still_composes() {
        let provider = OfflineLlm::new();
        let (prompts, config) = engine_fixture();
        let engine = ScriptEngine::new(&provider, &prompts, config);
        let script = engine.run_episode(&topic(), 2, false).unwrap();
        assert!(script.outline.is_none());
        assert!(script.lines.len() >= 8);
    }

    #[test]
    fn baselines_produce_valid_scripts() {
        let provider = OfflineLlm::new();
        let (prompts, config) = engine_fixture();
        let engine = ScriptEngine::new(&provider, &prompts, config);

        let direct = engine.direct_baseline_script(&topic(), 2).unwrap();
        assert_eq!(direct.provenance, Provenance::DirectBaseline);
        assert_eq!(direct.lines.last().unwrap().speaker, direct.host_name);

        let single = engine.single_agent_script(&topic(), 2).unwrap();
        assert_eq!(single.provenance, Provenance::SingleAgent);
        let last = single.lines.last().unwrap();
        assert_ne!(last.speaker, single.host_name, "one-call script should stop abruptly");
    }

    #[test]
    fn casting_respects_gender_and_injectivity() {
        let roles = vec![
            RoleIn { role: "Host".into(), stated_gender: None },
            RoleIn { role: "Dr. Maya Chen".into(), stated_gender: Some("female".into()) },
            RoleIn { role: "Prof. Alan Reyes".into(), stated_gender: Some("male".into()) },
        ];
        let voices = vec![
            VoiceIn { voice_id: "v-m".into(), gender: Some("male".into()) },
            VoiceIn { voice_id: "v-f".into(), gender: Some("female".into()) },
            VoiceIn { voice_id: "v-u".into(), gender: Some("unknown".into()) },
        ];
        let cast = cast_roles(&roles, &voices);
        assert_eq!(cast.len(), 3);
        assert_eq!(cast["Host"], "v-m", "unconstrained role takes the first voice");
        assert_eq!(cast["Dr. Maya Chen"], "v-f");
        assert_eq!(cast["Prof. Alan Reyes"], "v-u");
        let distinct: BTreeSet<&String> = cast.values().collect();
        assert_eq!(distinct.len(), 3);
    }

    #[test]
    fn casting_backtracks_past_greedy_dead_ends() {
        // Greedy would hand the lone unknown voice to the first role and
        // strand the female role.
        let roles = vec![
            RoleIn { role: "Host".into(), stated_gender: None },
            RoleIn { role: "Guest".into(), stated_gender: Some("female".into()) },
        ];
        let voices = vec![
            VoiceIn { voice_id: "v-u".into(), gender: Some("unknown".into()) },
            VoiceIn { voice_id: "v-m".into(), gender: Some("male".into()) },
        ];
        let cast = cast_roles(&roles, &voices);
        assert_eq!(cast["Guest"], "v-u");
        assert_eq!(cast["Host"], "v-m");
    }

    #[test]
    fn judge_scores_are_antisymmetric_and_zero_on_self() {
        let provider = OfflineLlm::new();
        let prompts = PromptStore::builtin();
        let mut config = JudgeConfig::default();
        config.retry = RetryPolicy::immediate(1);
        let a = "Host: hello\nAda: the tides are batteries";
        let b = "Host: hi\nBen: rivers also store energy";

        let ab = judge_pair(a, b, &provider, &prompts, &config).unwrap();
        let ba = judge_pair(b, a, &provider, &prompts, &config).unwrap();
        let self_pair = judge_pair(a, a, &provider, &prompts, &config).unwrap();
        for dim in JudgeDimension::ALL {
            let f = ab.final_scores.get(dim);
            assert!((-3.0..=3.0).contains(&f));
            assert_eq!(f, -ba.final_scores.get(dim));
            assert_eq!(self_pair.final_scores.get(dim), 0.0);
            assert_eq!(f.fract(), 0.0, "offline judge scores are whole numbers");
        }
    }

    #[test]
    fn unrecognized_prompt_is_rejected() {
        let provider = OfflineLlm::new();
        let request =
            CompletionRequest::new("m", 0.0, None).with_user("What is the capital of France?");
        assert!(matches!(
            provider.complete(&request),
            Err(ProviderError::Malformed(_))
        ));
    }
}
