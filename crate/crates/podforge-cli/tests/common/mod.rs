//! Shared fixtures for the CLI integration tests: binary invocation and
//! on-disk voice library construction.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn podforge() -> Command {
    Command::new(env!("CARGO_BIN_EXE_podforge"))
}

pub fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("spawning the podforge binary")
}

pub fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

pub fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("process terminated by signal")
}

pub fn write_file(path: &Path, content: &str) {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).unwrap();
    }
    std::fs::write(path, content).unwrap();
}

/// Two-topic TSV fixture covering two categories.
pub fn write_topics(path: &Path) {
    write_file(
        path,
        "alpha\tgeneric\tThe future of urban gardening\n\
         beta\tknowledge\tHow semiconductors are fabricated\n",
    );
}

/// Writes `count` reference WAVs plus a ready-to-use voice library JSON
/// next to them; returns the library path. Genders alternate so any cast
/// of up to `count` roles stays satisfiable.
pub fn fixture_voice_library(dir: &Path, count: usize) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let genders = ["male", "female", "unknown"];
    let mut entries = Vec::new();
    for i in 0..count {
        let name = format!("v{i:02}.wav");
        let samples: Vec<f64> = (0..12_000)
            .map(|t| 0.1 * (2.0 * std::f64::consts::PI * (200.0 + 40.0 * i as f64) * t as f64 / 24_000.0).sin())
            .collect();
        podforge::wav::write_wav_mono16(&dir.join(&name), &samples, 24_000).unwrap();
        entries.push(serde_json::json!({
            "voice_id": format!("v{i:02}"),
            "speaker_id": format!("spk{i:02}"),
            "gender": genders[i % genders.len()],
            "caption": format!("Fixture voice number {i}, register {}", genders[i % genders.len()]),
            "audio_path": name,
            "language": "en",
        }));
    }
    let path = dir.join("library.json");
    write_file(&path, &serde_json::to_string_pretty(&entries).unwrap());
    path
}
