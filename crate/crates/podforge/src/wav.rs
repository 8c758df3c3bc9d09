//! Mono WAV encode/decode. Samples are f64 in [-1, 1] in memory; files
//! are 16-bit PCM. Stereo input is downmixed by averaging.

use std::io::Cursor;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WavError {
    #[error("reading {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("decoding WAV: {0}")]
    Decode(String),
    #[error("encoding WAV: {0}")]
    Encode(String),
    #[error("unsupported WAV: {0}")]
    Unsupported(String),
}

const I16_SCALE: f64 = 32767.0;

/// Decodes WAV bytes to mono f64 samples and the sample rate.
pub fn decode_wav_mono(bytes: &[u8]) -> Result<(Vec<f64>, u32), WavError> {
    let reader =
        hound::WavReader::new(Cursor::new(bytes)).map_err(|e| WavError::Decode(e.to_string()))?;
    let spec = reader.spec();
    if spec.channels == 0 {
        return Err(WavError::Unsupported("zero channels".into()));
    }
    let channels = spec.channels as usize;
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / I16_SCALE))
            .collect::<Result<_, _>>()
            .map_err(|e| WavError::Decode(e.to_string()))?,
        (hound::SampleFormat::Int, bits @ (24 | 32)) => {
            let scale = f64::from((1u32 << (bits - 1)) - 1);
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) / scale))
                .collect::<Result<_, _>>()
                .map_err(|e| WavError::Decode(e.to_string()))?
        }
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(|e| WavError::Decode(e.to_string()))?,
        (format, bits) => {
            return Err(WavError::Unsupported(format!("{format:?} at {bits} bits")));
        }
    };
    let samples = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    Ok((samples, spec.sample_rate))
}

pub fn read_wav_mono(path: &Path) -> Result<(Vec<f64>, u32), WavError> {
    let bytes = std::fs::read(path)
        .map_err(|source| WavError::Io { path: path.to_path_buf(), source })?;
    decode_wav_mono(&bytes)
}

/// Encodes mono f64 samples as 16-bit PCM WAV bytes. Samples are clamped
/// into [-1, 1] before quantization.
pub fn encode_wav_mono16(samples: &[f64], sample_rate_hz: u32) -> Result<Vec<u8>, WavError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: sample_rate_hz,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut cursor = Cursor::new(Vec::new());
    {
        let mut writer = hound::WavWriter::new(&mut cursor, spec)
            .map_err(|e| WavError::Encode(e.to_string()))?;
        for &s in samples {
            let q = (s.clamp(-1.0, 1.0) * I16_SCALE).round() as i16;
            writer.write_sample(q).map_err(|e| WavError::Encode(e.to_string()))?;
        }
        writer.finalize().map_err(|e| WavError::Encode(e.to_string()))?;
    }
    Ok(cursor.into_inner())
}

pub fn write_wav_mono16(
    path: &Path,
    samples: &[f64],
    sample_rate_hz: u32,
) -> Result<(), WavError> {
    let bytes = encode_wav_mono16(samples, sample_rate_hz)?;
    std::fs::write(path, bytes)
        .map_err(|source| WavError::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_decode_round_trip_within_quantization() {
        let rate = 24_000;
        let samples: Vec<f64> =
            (0..2400).map(|i| 0.5 * (i as f64 * 0.01).sin()).collect();
        let bytes = encode_wav_mono16(&samples, rate).unwrap();
        let (decoded, got_rate) = decode_wav_mono(&bytes).unwrap();
        assert_eq!(got_rate, rate);
        assert_eq!(decoded.len(), samples.len());
        for (a, b) in samples.iter().zip(&decoded) {
            assert!((a - b).abs() <= 1.0 / I16_SCALE, "{a} vs {b}");
        }
    }

    #[test]
    fn stereo_downmix_averages_channels() {
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut cursor = Cursor::new(Vec::new());
        {
            let mut w = hound::WavWriter::new(&mut cursor, spec).unwrap();
            for _ in 0..10 {
                w.write_sample(16384i16).unwrap();
                w.write_sample(-16384i16).unwrap();
            }
            w.finalize().unwrap();
        }
        let (samples, rate) = decode_wav_mono(&cursor.into_inner()).unwrap();
        assert_eq!(rate, 8000);
        assert_eq!(samples.len(), 10);
        for s in samples {
            assert!(s.abs() < 1e-9, "should average to ~0, got {s}");
        }
    }

    #[test]
    fn garbage_bytes_fail_to_decode() {
        assert!(matches!(decode_wav_mono(b"not a wav"), Err(WavError::Decode(_))));
    }
}
