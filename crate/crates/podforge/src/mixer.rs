//! Sample-accurate program assembly.
//!
//! Layout places foreground speech clips sequentially with a fixed gap and
//! anchors background spans to the line placements they cover; render
//! mixes everything into one f64 buffer. Rendering is linear (mixing the
//! union of two placement sets equals summing their separate renders) and
//! deterministic down to the bit, except when a sample exceeds full scale:
//! then a tanh soft clip is applied to the whole buffer and flagged.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audioplan::{AudioKind, AudioLayer, AudioScript};
use crate::synth::AudioClip;

pub const DEFAULT_GAP_MS: u32 = 300;
/// Crossfade applied at loop seams when a background clip is shorter than
/// its span.
pub const LOOP_CROSSFADE_MS: u32 = 10;

#[derive(Debug, Error)]
pub enum MixError {
    #[error("no clip supplied for item {item_index}")]
    MissingClip { item_index: usize },
    #[error("clip for item {item_index} is at {got} Hz, timeline needs {want} Hz")]
    RateMismatch { item_index: usize, got: u32, want: u32 },
    #[error("clip for item {item_index} is empty")]
    EmptyClip { item_index: usize },
    #[error("invalid timeline: {0}")]
    InvalidTimeline(String),
    #[error("audio script has no foreground items")]
    NoForeground,
}

/// One clip's position on the timeline, in samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub item_index: usize,
    pub layer: AudioLayer,
    pub kind: AudioKind,
    pub start_sample: usize,
    pub len_samples: usize,
    pub gain_db: f64_serde::GainDb,
}

/// Complete render plan: every placement plus the program length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub sample_rate_hz: u32,
    pub gap_samples: usize,
    pub total_samples: usize,
    pub placements: Vec<Placement>,
}

/// Serde helper keeping gain as a plain f64 in JSON while giving
/// `Placement` a total equality for test comparison.
mod f64_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Debug, Clone, Copy, PartialOrd)]
    pub struct GainDb(pub f64);

    impl PartialEq for GainDb {
        fn eq(&self, other: &Self) -> bool {
            self.0.to_bits() == other.0.to_bits()
        }
    }

    impl Eq for GainDb {}

    impl Serialize for GainDb {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            self.0.serialize(s)
        }
    }

    impl<'de> Deserialize<'de> for GainDb {
        fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            f64::deserialize(d).map(GainDb)
        }
    }

    impl From<f64> for GainDb {
        fn from(v: f64) -> Self {
            GainDb(v)
        }
    }
}

pub use f64_serde::GainDb;

impl Timeline {
    pub fn duration_s(&self) -> f64 {
        self.total_samples as f64 / f64::from(self.sample_rate_hz)
    }

    /// Structural checks: foreground placements are ordered, gap-separated,
    /// non-overlapping; every placement ends within the program.
    pub fn validate(&self) -> Result<(), MixError> {
        let mut cursor: Option<usize> = None;
        for p in self.placements.iter().filter(|p| p.layer == AudioLayer::Foreground) {
            if let Some(end) = cursor {
                if p.start_sample != end + self.gap_samples {
                    return Err(MixError::InvalidTimeline(format!(
                        "foreground item {} starts at {}, expected {}",
                        p.item_index,
                        p.start_sample,
                        end + self.gap_samples
                    )));
                }
            } else if p.start_sample != 0 {
                return Err(MixError::InvalidTimeline(
                    "first foreground placement does not start at 0".into(),
                ));
            }
            cursor = Some(p.start_sample + p.len_samples);
        }
        let max_end = self
            .placements
            .iter()
            .map(|p| p.start_sample + p.len_samples)
            .max()
            .ok_or_else(|| MixError::InvalidTimeline("timeline has no placements".into()))?;
        if max_end != self.total_samples {
            return Err(MixError::InvalidTimeline(format!(
                "total_samples {} does not match furthest placement end {max_end}",
                self.total_samples
            )));
        }
        Ok(())
    }
}

/// Computes the timeline for an audio script given one clip per item
/// (keyed by item index). Foreground clips line up start-to-end with
/// `gap_ms` of silence between consecutive items and no trailing gap;
/// background placements span from the start of their first line to the
/// end of their last.
pub fn layout(
    audio_script: &AudioScript,
    clips: &std::collections::BTreeMap<usize, AudioClip>,
    sample_rate_hz: u32,
    gap_ms: u32,
) -> Result<Timeline, MixError> {
    let gap_samples = (u64::from(gap_ms) * u64::from(sample_rate_hz) / 1000) as usize;
    let mut placements = Vec::new();
    // One (start, end) per dialogue line, indexed by line number.
    let mut line_bounds: Vec<(usize, usize)> = Vec::new();
    let mut cursor = 0usize;
    let mut first = true;
    for (item_index, item) in audio_script.foreground_items() {
        let clip = fetch_clip(clips, item_index, sample_rate_hz)?;
        if !first {
            cursor += gap_samples;
        }
        first = false;
        let start = cursor;
        let len = clip.samples.len();
        placements.push(Placement {
            item_index,
            layer: AudioLayer::Foreground,
            kind: item.kind,
            start_sample: start,
            len_samples: len,
            gain_db: item.gain_db.into(),
        });
        line_bounds.push((start, start + len));
        cursor += len;
    }
    if line_bounds.is_empty() {
        return Err(MixError::NoForeground);
    }
    let total_samples = cursor;

    for (item_index, item) in audio_script.background_items() {
        fetch_clip(clips, item_index, sample_rate_hz)?;
        let (start_line, end_line) = item.span.ok_or_else(|| {
            MixError::InvalidTimeline(format!("background item {item_index} has no span"))
        })?;
        let (Some(first_bound), Some(last_bound)) =
            (line_bounds.get(start_line), line_bounds.get(end_line))
        else {
            return Err(MixError::InvalidTimeline(format!(
                "background item {item_index} spans lines ({start_line}, {end_line}) of {}",
                line_bounds.len()
            )));
        };
        placements.push(Placement {
            item_index,
            layer: AudioLayer::Background,
            kind: item.kind,
            start_sample: first_bound.0,
            len_samples: last_bound.1 - first_bound.0,
            gain_db: item.gain_db.into(),
        });
    }

    let timeline = Timeline { sample_rate_hz, gap_samples, total_samples, placements };
    timeline.validate()?;
    Ok(timeline)
}

fn fetch_clip<'c>(
    clips: &'c std::collections::BTreeMap<usize, AudioClip>,
    item_index: usize,
    sample_rate_hz: u32,
) -> Result<&'c AudioClip, MixError> {
    let clip = clips.get(&item_index).ok_or(MixError::MissingClip { item_index })?;
    if clip.sample_rate_hz != sample_rate_hz {
        return Err(MixError::RateMismatch {
            item_index,
            got: clip.sample_rate_hz,
            want: sample_rate_hz,
        });
    }
    if clip.samples.is_empty() {
        return Err(MixError::EmptyClip { item_index });
    }
    Ok(clip)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedProgram {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
    /// True when any mixed sample exceeded full scale and the soft-clip
    /// limiter ran over the buffer.
    pub limited: bool,
}

impl RenderedProgram {
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }
}

/// Mixes the timeline into one buffer. Placements are summed in order
/// with dB gains applied; background clips are truncated or crossfade-
/// looped to their placement length. Only if a mixed sample's magnitude
/// exceeds 1 does the limiter run (tanh over the whole buffer), keeping
/// every non-overflowing mix strictly linear.
pub fn render(
    timeline: &Timeline,
    clips: &std::collections::BTreeMap<usize, AudioClip>,
) -> Result<RenderedProgram, MixError> {
    timeline.validate()?;
    let mut buffer = vec![0.0f64; timeline.total_samples];
    let crossfade =
        (u64::from(LOOP_CROSSFADE_MS) * u64::from(timeline.sample_rate_hz) / 1000) as usize;
    for placement in &timeline.placements {
        let clip = fetch_clip(clips, placement.item_index, timeline.sample_rate_hz)?;
        let gain = 10f64.powf(placement.gain_db.0 / 20.0);
        let source: std::borrow::Cow<[f64]> = if clip.samples.len() == placement.len_samples {
            std::borrow::Cow::Borrowed(&clip.samples)
        } else {
            std::borrow::Cow::Owned(fit_to_length(&clip.samples, placement.len_samples, crossfade))
        };
        let out = &mut buffer[placement.start_sample..placement.start_sample + placement.len_samples];
        for (dst, src) in out.iter_mut().zip(source.iter()) {
            *dst += src * gain;
        }
    }
    let overflow = buffer.iter().any(|s| s.abs() > 1.0);
    if overflow {
        log::warn!("mix exceeded full scale; soft-clip limiter engaged");
        for s in &mut buffer {
            *s = s.tanh();
        }
    }
    Ok(RenderedProgram {
        samples: buffer,
        sample_rate_hz: timeline.sample_rate_hz,
        limited: overflow,
    })
}

/// Truncates or loops `source` to exactly `target` samples. Loops overlap
/// by `crossfade` samples with a linear blend so seams do not click; a
/// source shorter than the crossfade falls back to plain concatenation.
pub fn fit_to_length(source: &[f64], target: usize, crossfade: usize) -> Vec<f64> {
    assert!(!source.is_empty(), "cannot fit an empty clip");
    if source.len() >= target {
        return source[..target].to_vec();
    }
    let crossfade = crossfade.min(source.len().saturating_sub(1));
    let mut out = Vec::with_capacity(target + source.len());
    out.extend_from_slice(source);
    while out.len() < target {
        let seam = out.len() - crossfade;
        for j in 0..crossfade {
            let a = (j + 1) as f64 / (crossfade + 1) as f64;
            out[seam + j] = out[seam + j] * (1.0 - a) + source[j] * a;
        }
        out.extend_from_slice(&source[crossfade..]);
    }
    out.truncate(target);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audioplan::{AudioItem, AudioScript};
    use crate::script::{
        ConversationScript, DialogueLine, GuestProfile, Provenance, StatedGender, Topic,
        TopicCategory,
    };
    use crate::voice::RoleVoiceAssignment;
    use std::collections::BTreeMap;

    const RATE: u32 = 24_000;

    fn make_audio_script(line_secs: &[f64], background: &[((usize, usize), f64)]) -> AudioScript {
        let mut lines = Vec::new();
        for (i, _) in line_secs.iter().enumerate() {
            lines.push(DialogueLine {
                speaker: if i == 0 { "Host".into() } else { "Ada".into() },
                text: format!("line {i}"),
                style_instruction: "even".into(),
            });
        }
        lines[0].speaker = "Host".into();
        let script = ConversationScript {
            topic: Topic::new("t", TopicCategory::Other, "x").unwrap(),
            host_name: "Host".into(),
            guests: vec![GuestProfile {
                name: "Ada".into(),
                expertise: "y".into(),
                background: String::new(),
                perspective: String::new(),
                stated_gender: StatedGender::Unspecified,
            }],
            outline: None,
            lines: lines.clone(),
            provenance: Provenance::MultiAgent,
        };
        let mut items: Vec<AudioItem> = lines
            .iter()
            .map(|l| AudioItem {
                kind: AudioKind::Speech,
                layer: AudioLayer::Foreground,
                content: l.text.clone(),
                speaker: Some(l.speaker.clone()),
                style_instruction: Some(l.style_instruction.clone()),
                span: None,
                gain_db: 0.0,
            })
            .collect();
        for (span, gain) in background {
            items.push(AudioItem {
                kind: AudioKind::Music,
                layer: AudioLayer::Background,
                content: "bed".into(),
                speaker: None,
                style_instruction: None,
                span: Some(*span),
                gain_db: *gain,
            });
        }
        AudioScript {
            script,
            assignment: RoleVoiceAssignment {
                assignments: BTreeMap::from([
                    ("Host".to_string(), "v1".to_string()),
                    ("Ada".to_string(), "v2".to_string()),
                ]),
            },
            items,
        }
    }

    fn const_clip(item_index: usize, seconds: f64, value: f64) -> AudioClip {
        let n = (seconds * f64::from(RATE)).round() as usize;
        AudioClip { samples: vec![value; n], sample_rate_hz: RATE, source_item_index: item_index }
    }

    fn clips_for(audio_script: &AudioScript, line_secs: &[f64], bg_secs: f64) -> BTreeMap<usize, AudioClip> {
        let mut clips = BTreeMap::new();
        for (idx, (item_index, _)) in audio_script.foreground_items().enumerate() {
            clips.insert(item_index, const_clip(item_index, line_secs[idx], 0.1));
        }
        for (item_index, _) in audio_script.background_items() {
            clips.insert(item_index, const_clip(item_index, bg_secs, 0.05));
        }
        clips
    }

    #[test]
    fn duration_law_holds() {
        let line_secs = [2.0, 3.0, 1.5];
        let script = make_audio_script(&line_secs, &[]);
        let clips = clips_for(&script, &line_secs, 1.0);
        let timeline = layout(&script, &clips, RATE, 300).unwrap();
        let expected = (6.5 * f64::from(RATE)) as usize + 2 * 7200;
        assert_eq!(timeline.total_samples, expected);
        let program = render(&timeline, &clips).unwrap();
        assert_eq!(program.samples.len(), expected);
    }

    #[test]
    fn background_music_is_truncated_to_span() {
        // Lines of 2s and 3s, gap 0, music source 10s over lines 0..=1:
        // placement length exactly 5s.
        let line_secs = [2.0, 3.0];
        let script = make_audio_script(&line_secs, &[((0, 1), -6.0)]);
        let clips = clips_for(&script, &line_secs, 10.0);
        let timeline = layout(&script, &clips, RATE, 0).unwrap();
        let bg = timeline
            .placements
            .iter()
            .find(|p| p.layer == AudioLayer::Background)
            .unwrap();
        assert_eq!(bg.start_sample, 0);
        assert_eq!(bg.len_samples, (5.0 * f64::from(RATE)) as usize);
    }

    #[test]
    fn short_background_is_looped_to_span() {
        let line_secs = [4.0];
        let script = make_audio_script(&line_secs, &[((0, 0), 0.0)]);
        let mut clips = clips_for(&script, &line_secs, 1.0);
        // Constant-value source: looping with crossfade preserves the value.
        clips.insert(1, const_clip(1, 1.0, 0.2));
        let timeline = layout(&script, &clips, RATE, 300).unwrap();
        let program = render(&timeline, &clips).unwrap();
        assert_eq!(program.samples.len(), 4 * RATE as usize);
        for s in &program.samples {
            assert!((s - 0.3).abs() < 1e-9, "looped constant drifted: {s}");
        }
        assert!(!program.limited);
    }

    #[test]
    fn gaps_are_silent() {
        let line_secs = [1.0, 1.0];
        let script = make_audio_script(&line_secs, &[]);
        let clips = clips_for(&script, &line_secs, 1.0);
        let timeline = layout(&script, &clips, RATE, 500).unwrap();
        let program = render(&timeline, &clips).unwrap();
        let gap_start = RATE as usize;
        let gap_len = RATE as usize / 2;
        assert!(program.samples[gap_start..gap_start + gap_len].iter().all(|s| *s == 0.0));
    }

    #[test]
    fn rendering_is_deterministic() {
        let line_secs = [1.0, 2.0];
        let script = make_audio_script(&line_secs, &[((0, 1), -12.0)]);
        let clips = clips_for(&script, &line_secs, 0.7);
        let timeline = layout(&script, &clips, RATE, 300).unwrap();
        let a = render(&timeline, &clips).unwrap();
        let b = render(&timeline, &clips).unwrap();
        assert!(a.samples.iter().zip(&b.samples).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn coincident_full_scale_sum_does_not_trigger_limiter() {
        // Two 0.5-amplitude clips mixed coincident reach exactly 1.0,
        // which is full scale but not overflow.
        let line_secs = [1.0];
        let script = make_audio_script(&line_secs, &[((0, 0), 0.0)]);
        let mut clips = BTreeMap::new();
        clips.insert(0, const_clip(0, 1.0, 0.5));
        clips.insert(1, const_clip(1, 1.0, 0.5));
        let timeline = layout(&script, &clips, RATE, 300).unwrap();
        let program = render(&timeline, &clips).unwrap();
        assert!(!program.limited);
        assert!(program.samples.iter().all(|s| *s == 1.0));
    }

    #[test]
    fn overflow_triggers_flagged_soft_clip() {
        let line_secs = [1.0];
        let script = make_audio_script(&line_secs, &[((0, 0), 0.0)]);
        let mut clips = BTreeMap::new();
        clips.insert(0, const_clip(0, 1.0, 0.8));
        clips.insert(1, const_clip(1, 1.0, 0.8));
        let timeline = layout(&script, &clips, RATE, 300).unwrap();
        let program = render(&timeline, &clips).unwrap();
        assert!(program.limited);
        let expected = 1.6f64.tanh();
        assert!(program.samples.iter().all(|s| (*s - expected).abs() < 1e-12));
    }

    #[test]
    fn linearity_below_full_scale() {
        let line_secs = [1.0, 1.0];
        let script = make_audio_script(&line_secs, &[((0, 1), -20.0)]);
        let clips = clips_for(&script, &line_secs, 0.5);
        let timeline = layout(&script, &clips, RATE, 100).unwrap();
        let full = render(&timeline, &clips).unwrap();

        let fg_only = Timeline {
            placements: timeline
                .placements
                .iter()
                .filter(|p| p.layer == AudioLayer::Foreground)
                .cloned()
                .collect(),
            ..timeline.clone()
        };
        let bg_only = Timeline {
            placements: timeline
                .placements
                .iter()
                .filter(|p| p.layer == AudioLayer::Background)
                .cloned()
                .collect(),
            ..timeline.clone()
        };
        let a = render(&fg_only, &clips).unwrap();
        let b = render(&bg_only, &clips).unwrap();
        for i in 0..full.samples.len() {
            let summed = a.samples[i] + b.samples[i];
            assert!((full.samples[i] - summed).abs() <= 1e-9);
        }
    }

    #[test]
    fn missing_clip_and_rate_mismatch_are_named() {
        let line_secs = [1.0];
        let script = make_audio_script(&line_secs, &[]);
        let empty = BTreeMap::new();
        assert!(matches!(
            layout(&script, &empty, RATE, 300),
            Err(MixError::MissingClip { item_index: 0 })
        ));
        let mut wrong_rate = BTreeMap::new();
        wrong_rate.insert(
            0,
            AudioClip { samples: vec![0.0; 100], sample_rate_hz: 8000, source_item_index: 0 },
        );
        assert!(matches!(
            layout(&script, &wrong_rate, RATE, 300),
            Err(MixError::RateMismatch { got: 8000, .. })
        ));
    }

    #[test]
    fn timeline_serializes_round_trip() {
        let line_secs = [1.0, 2.0];
        let script = make_audio_script(&line_secs, &[((0, 1), -12.0)]);
        let clips = clips_for(&script, &line_secs, 0.7);
        let timeline = layout(&script, &clips, RATE, 300).unwrap();
        let json = serde_json::to_string(&timeline).unwrap();
        let back: Timeline = serde_json::from_str(&json).unwrap();
        assert_eq!(back, timeline);
    }
}
