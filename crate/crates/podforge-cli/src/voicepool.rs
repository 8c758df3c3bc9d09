//! Voice library construction: ingest a raw manifest, embed captions,
//! drop near-duplicates, persist the deduplicated library.

use std::path::Path;

use podforge::voice::{self, VoiceError};

use crate::error::CliError;
use crate::providers::Providers;

pub fn cmd_build(
    providers: &Providers,
    input: &Path,
    output: &Path,
    threshold: f64,
) -> Result<(), CliError> {
    let entries = voice::load_entries(input)
        .map_err(|e| CliError::usage(format!("{}: {e}", input.display())))?;
    let total = entries.len();
    let library = voice::build_voice_library(&entries, &*providers.embedder, threshold)
        .map_err(|e| match e {
            VoiceError::InvalidThreshold(_)
            | VoiceError::EmptyInput
            | VoiceError::Invariant(_)
            | VoiceError::Format { .. }
            | VoiceError::Io { .. } => CliError::usage(e),
            other => CliError::stage("voicepool", other),
        })?;
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::usage(format!("creating {}: {e}", parent.display())))?;
    }
    voice::save_library(&library, output)
        .map_err(|e| CliError::stage("voicepool", format!("{}: {e}", output.display())))?;
    println!(
        "kept {} of {total} voices (threshold {threshold}) -> {}",
        library.len(),
        output.display()
    );
    Ok(())
}
