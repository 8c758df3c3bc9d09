//! Windowed-sinc sample-rate conversion.
//!
//! Pure f64 arithmetic with a fixed kernel, so conversion is deterministic
//! across runs and platforms. The Blackman-windowed sinc kernel has 16
//! zero crossings per side; for downsampling the kernel is stretched so
//! its cutoff sits at the output Nyquist. Each output sample's kernel
//! weights are renormalized to unity, preserving DC and amplitude.

/// Kernel half-width in zero crossings at the (scaled) cutoff.
const HALF_WIDTH: f64 = 16.0;

/// Converts `input` from `from_hz` to `to_hz`. Equal rates return the
/// input unchanged. Output length is `round(len * to / from)`, at least 1
/// for non-empty input.
pub fn resample(input: &[f64], from_hz: u32, to_hz: u32) -> Vec<f64> {
    assert!(from_hz > 0 && to_hz > 0, "sample rates must be positive");
    if from_hz == to_hz || input.is_empty() {
        return input.to_vec();
    }
    let ratio = f64::from(to_hz) / f64::from(from_hz);
    let out_len = ((input.len() as f64 * ratio).round() as usize).max(1);
    // Cutoff relative to the input Nyquist: 1 when upsampling, to/from
    // when downsampling (anti-aliasing).
    let scale = ratio.min(1.0);
    let support = HALF_WIDTH / scale;
    let mut output = Vec::with_capacity(out_len);
    for n in 0..out_len {
        let center = n as f64 / ratio;
        let lo = (center - support).ceil() as isize;
        let hi = (center + support).floor() as isize;
        let mut acc = 0.0;
        let mut weight_sum = 0.0;
        for k in lo..=hi {
            let x = (center - k as f64) * scale;
            let w = sinc_pi(x) * blackman(x / HALF_WIDTH);
            weight_sum += w;
            if k >= 0 && (k as usize) < input.len() {
                acc += input[k as usize] * w;
            }
        }
        output.push(if weight_sum != 0.0 { acc / weight_sum } else { 0.0 });
    }
    output
}

fn sinc_pi(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Blackman window on u in [-1, 1], zero outside.
fn blackman(u: f64) -> f64 {
    if u.abs() > 1.0 {
        return 0.0;
    }
    let pu = std::f64::consts::PI * u;
    0.42 + 0.5 * pu.cos() + 0.08 * (2.0 * pu).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq_hz: f64, rate: u32, seconds: f64, amplitude: f64) -> Vec<f64> {
        let n = (rate as f64 * seconds).round() as usize;
        (0..n)
            .map(|i| amplitude * (2.0 * std::f64::consts::PI * freq_hz * i as f64 / rate as f64).sin())
            .collect()
    }

    /// Dominant frequency by zero-crossing count, ignoring edge samples.
    fn zero_crossing_freq(samples: &[f64], rate: u32) -> f64 {
        let crossings = samples.windows(2).filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0)).count();
        crossings as f64 * rate as f64 / (2.0 * samples.len() as f64)
    }

    fn rms(samples: &[f64]) -> f64 {
        (samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64).sqrt()
    }

    #[test]
    fn equal_rates_are_identity() {
        let x = sine(440.0, 24_000, 0.1, 0.5);
        assert_eq!(resample(&x, 24_000, 24_000), x);
    }

    #[test]
    fn downsample_preserves_tone_frequency_and_level() {
        let x = sine(440.0, 48_000, 0.5, 0.5);
        let y = resample(&x, 48_000, 24_000);
        assert_eq!(y.len(), 12_000);
        let freq = zero_crossing_freq(&y, 24_000);
        assert!((freq - 440.0).abs() < 2.0, "freq {freq}");
        let level = rms(&y);
        let expected = 0.5 / 2f64.sqrt();
        assert!((level - expected).abs() / expected < 0.02, "rms {level}");
    }

    #[test]
    fn upsample_preserves_tone_frequency_and_level() {
        let x = sine(440.0, 16_000, 0.5, 0.5);
        let y = resample(&x, 16_000, 24_000);
        assert_eq!(y.len(), 12_000);
        let freq = zero_crossing_freq(&y, 24_000);
        assert!((freq - 440.0).abs() < 2.0, "freq {freq}");
        let level = rms(&y);
        let expected = 0.5 / 2f64.sqrt();
        assert!((level - expected).abs() / expected < 0.02, "rms {level}");
    }

    #[test]
    fn dc_is_preserved() {
        let x = vec![0.25; 4800];
        let y = resample(&x, 48_000, 24_000);
        // Interior samples (away from edge truncation) keep the DC level.
        for s in &y[100..y.len() - 100] {
            assert!((s - 0.25).abs() < 1e-6, "dc drifted to {s}");
        }
    }

    #[test]
    fn conversion_is_deterministic() {
        let x = sine(333.0, 44_100, 0.25, 0.4);
        let a = resample(&x, 44_100, 24_000);
        let b = resample(&x, 44_100, 24_000);
        assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
    }

    #[test]
    fn duration_is_kept_within_a_millisecond() {
        for (from, to) in [(48_000u32, 24_000u32), (22_050, 24_000), (44_100, 24_000)] {
            let x = sine(440.0, from, 0.7, 0.3);
            let y = resample(&x, from, to);
            let in_s = x.len() as f64 / from as f64;
            let out_s = y.len() as f64 / to as f64;
            assert!((in_s - out_s).abs() < 1e-3, "{from}->{to}: {in_s} vs {out_s}");
        }
    }
}
