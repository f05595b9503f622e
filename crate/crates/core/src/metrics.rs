//! Evaluation metrics: SI-SNR improvement, log-spectral distance and
//! band-wise residual noise.

use serde::{Deserialize, Serialize};

use crate::adapter::BandSplit;
use crate::dsp::{Spectrogram, Waveform};
use crate::error::{Error, Result};
use crate::loss::si_snr_db;
use crate::scalar::{lit, Scalar};

/// `si_snr(enhanced, clean) - si_snr(mixture, clean)` in dB; positive when
/// enhancement helped.
pub fn si_snr_improvement<T: Scalar>(
    enhanced: &Waveform<T>,
    mixture: &Waveform<T>,
    clean: &Waveform<T>,
) -> Result<T> {
    if enhanced.len() != mixture.len() || mixture.len() != clean.len() {
        return Err(Error::ShapeMismatch(format!(
            "lengths enhanced {} / mixture {} / clean {}",
            enhanced.len(),
            mixture.len(),
            clean.len()
        )));
    }
    Ok(si_snr_db(&enhanced.samples, &clean.samples)?
        - si_snr_db(&mixture.samples, &clean.samples)?)
}

/// Log-spectral distance in dB: RMS over frames of the per-frame RMS of
/// `20*log10((|E|+1e-8)/(|C|+1e-8))` over bins.
pub fn log_spectral_distance<T: Scalar>(
    enhanced: &Spectrogram<T>,
    clean: &Spectrogram<T>,
) -> Result<T> {
    if enhanced.frames() != clean.frames() || enhanced.bins() != clean.bins() {
        return Err(Error::ShapeMismatch(format!(
            "spectrogram shapes {}x{} vs {}x{}",
            enhanced.frames(),
            enhanced.bins(),
            clean.frames(),
            clean.bins()
        )));
    }
    let floor = lit::<T>(1e-8);
    let twenty = lit::<T>(20.0);
    let frames = enhanced.frames();
    let bins = enhanced.bins();
    let mut frame_sq_sum = T::zero();
    for f in 0..frames {
        let ef = enhanced.frame(f);
        let cf = clean.frame(f);
        let mut sq = T::zero();
        for k in 0..bins {
            let em = (ef[k].re * ef[k].re + ef[k].im * ef[k].im).sqrt();
            let cm = (cf[k].re * cf[k].re + cf[k].im * cf[k].im).sqrt();
            let d = twenty * ((em + floor) / (cm + floor)).log10();
            sq += d * d;
        }
        frame_sq_sum += sq / lit::<T>(bins as f64);
    }
    Ok((frame_sq_sum / lit::<T>(frames as f64)).sqrt())
}

/// Residual error energy relative to the clean signal, split per frame at
/// the given crossover bins: `10*log10(sum|E-C|^2 / sum|C|^2 + 1e-12)` for
/// the low band `[0..=m]` and the high band `[m..]`. Floors at -120 dB when
/// the enhanced signal matches the clean one.
pub fn band_residual<T: Scalar>(
    enhanced: &Spectrogram<T>,
    clean: &Spectrogram<T>,
    crossovers: &[usize],
) -> Result<(T, T)> {
    if enhanced.frames() != clean.frames() || enhanced.bins() != clean.bins() {
        return Err(Error::ShapeMismatch("band_residual spectrogram shapes".into()));
    }
    if crossovers.len() != enhanced.frames() {
        return Err(Error::ShapeMismatch(format!(
            "{} crossovers for {} frames",
            crossovers.len(),
            enhanced.frames()
        )));
    }
    let bins = enhanced.bins();
    let mut num = [T::zero(); 2];
    let mut den = [T::zero(); 2];
    for (f, &m) in crossovers.iter().enumerate() {
        let split = BandSplit::new(m, bins)?;
        let ef = enhanced.frame(f);
        let cf = clean.frame(f);
        for (band, range) in [(0usize, split.low()), (1, split.high())] {
            for k in range {
                let dre = ef[k].re - cf[k].re;
                let dim = ef[k].im - cf[k].im;
                num[band] += dre * dre + dim * dim;
                den[band] += cf[k].re * cf[k].re + cf[k].im * cf[k].im;
            }
        }
    }
    let tiny = lit::<T>(1e-30);
    let guard = lit::<T>(1e-12);
    let ten = lit::<T>(10.0);
    let low = ten * (num[0] / (den[0] + tiny) + guard).log10();
    let high = ten * (num[1] / (den[1] + tiny) + guard).log10();
    Ok((low, high))
}

/// Aggregate evaluation result over a test split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalSummary {
    pub variant: String,
    pub n_clips: usize,
    pub si_snri_mean: f64,
    pub si_snri_std: f64,
    pub lsd_mean: f64,
    pub band_residual_low: f64,
    pub band_residual_high: f64,
    pub seed: u64,
}

/// Per-clip evaluation row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClipMetrics {
    pub id: usize,
    pub si_snri: f64,
    pub lsd: f64,
    pub band_residual_low: f64,
    pub band_residual_high: f64,
}

/// Mean and (population) standard deviation of per-clip SI-SNRi values.
pub fn summarize(variant: &str, seed: u64, clips: &[ClipMetrics]) -> EvalSummary {
    let n = clips.len().max(1) as f64;
    let mean = |f: fn(&ClipMetrics) -> f64| clips.iter().map(f).sum::<f64>() / n;
    let si_mean = mean(|c| c.si_snri);
    let si_var = clips.iter().map(|c| (c.si_snri - si_mean).powi(2)).sum::<f64>() / n;
    EvalSummary {
        variant: variant.to_string(),
        n_clips: clips.len(),
        si_snri_mean: si_mean,
        si_snri_std: si_var.sqrt(),
        lsd_mean: mean(|c| c.lsd),
        band_residual_low: mean(|c| c.band_residual_low),
        band_residual_high: mean(|c| c.band_residual_high),
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_noise, gen_speechlike, NoiseKind};
    use crate::dsp::{stft, StftConfig};
    use approx::assert_relative_eq;

    #[test]
    fn identity_improvement_is_exactly_zero() {
        let clean = gen_speechlike::<f64>(1, 0.5, 16000);
        let mix = gen_noise::<f64>(NoiseKind::White, 2, 0.5, 16000);
        let si = si_snr_improvement(&mix, &mix, &clean).unwrap();
        assert_eq!(si, 0.0);
    }

    #[test]
    fn perfect_enhancement_is_guard_limited() {
        let clean = gen_speechlike::<f64>(3, 0.5, 16000);
        let mut mix = clean.clone();
        for (i, x) in mix.samples.iter_mut().enumerate() {
            *x += 0.01 * ((i % 13) as f64 - 6.0);
        }
        let si = si_snr_improvement(&clean, &mix, &clean).unwrap();
        assert!(si > 60.0, "improvement {si}");
    }

    #[test]
    fn improvement_scale_invariant() {
        let clean = gen_speechlike::<f64>(4, 0.5, 16000);
        let mix = Waveform::new(
            clean.samples.iter().enumerate().map(|(i, &x)| x + 0.05 * ((i % 5) as f64)).collect(),
            16000,
        );
        let scaled = Waveform::new(mix.samples.iter().map(|&x| 3.0 * x).collect(), 16000);
        let si = si_snr_improvement(&scaled, &mix, &clean).unwrap();
        assert!(si.abs() < 1e-9, "improvement {si}");
    }

    #[test]
    fn lsd_zero_at_equality_and_twenty_for_10x() {
        let cfg = StftConfig::default();
        let clean = stft(&gen_noise::<f64>(NoiseKind::White, 5, 0.5, 16000), &cfg).unwrap();
        assert_eq!(log_spectral_distance(&clean, &clean).unwrap(), 0.0);

        let mut scaled = clean.clone();
        for c in scaled.data_mut() {
            *c *= 10.0;
        }
        let lsd = log_spectral_distance(&scaled, &clean).unwrap();
        assert_relative_eq!(lsd, 20.0, epsilon = 1e-2);
    }

    #[test]
    fn lsd_matches_bruteforce() {
        let cfg = StftConfig::default();
        let a = stft(&gen_noise::<f64>(NoiseKind::White, 6, 0.25, 16000), &cfg).unwrap();
        let b = stft(&gen_noise::<f64>(NoiseKind::Pink, 7, 0.25, 16000), &cfg).unwrap();
        let lsd = log_spectral_distance(&a, &b).unwrap();

        let mut total = 0.0;
        for f in 0..a.frames() {
            let mut sq = 0.0;
            for k in 0..a.bins() {
                let am: f64 = a.frame(f)[k].norm();
                let bm: f64 = b.frame(f)[k].norm();
                let d = 20.0 * ((am + 1e-8) / (bm + 1e-8)).log10();
                sq += d * d;
            }
            total += sq / a.bins() as f64;
        }
        let expect = (total / a.frames() as f64).sqrt();
        assert_relative_eq!(lsd, expect, max_relative = 1e-9);
    }

    #[test]
    fn band_residual_floor_and_confinement() {
        let cfg = StftConfig::default();
        let clean = stft(&gen_noise::<f64>(NoiseKind::White, 8, 0.25, 16000), &cfg).unwrap();
        let ms = vec![128; clean.frames()];
        let (low, high) = band_residual(&clean, &clean, &ms).unwrap();
        assert_relative_eq!(low, -120.0, epsilon = 1e-9);
        assert_relative_eq!(high, -120.0, epsilon = 1e-9);

        // Error confined to the high band leaves the low band at the floor.
        let mut enhanced = clean.clone();
        for f in 0..enhanced.frames() {
            for k in 200..enhanced.bins() {
                enhanced.frame_mut(f)[k].re += 0.3;
            }
        }
        let (low, high) = band_residual(&enhanced, &clean, &ms).unwrap();
        assert_relative_eq!(low, -120.0, epsilon = 1e-9);
        assert!(high > -120.0 + 1.0, "high {high}");
    }

    #[test]
    fn band_residual_m_zero_low_band_is_dc_only() {
        let cfg = StftConfig::default();
        let clean = stft(&gen_noise::<f64>(NoiseKind::White, 9, 0.25, 16000), &cfg).unwrap();
        let mut enhanced = clean.clone();
        // Perturb only the DC bin.
        for f in 0..enhanced.frames() {
            enhanced.frame_mut(f)[0].re += 0.5;
        }
        let ms = vec![0; clean.frames()];
        let (low, high) = band_residual(&enhanced, &clean, &ms).unwrap();
        assert!(low > -60.0, "low {low}");
        // Bin 0 is shared with the high band, but its error is diluted
        // across all other bins.
        assert!(high < low);
    }

    #[test]
    fn summarize_means() {
        let clips = vec![
            ClipMetrics { id: 0, si_snri: 1.0, lsd: 2.0, band_residual_low: -10.0, band_residual_high: -20.0 },
            ClipMetrics { id: 1, si_snri: 3.0, lsd: 4.0, band_residual_low: -30.0, band_residual_high: -40.0 },
        ];
        let s = summarize("dfkd", 7, &clips);
        assert_eq!(s.n_clips, 2);
        assert_relative_eq!(s.si_snri_mean, 2.0);
        assert_relative_eq!(s.si_snri_std, 1.0);
        assert_relative_eq!(s.lsd_mean, 3.0);
        assert_eq!(s.seed, 7);
    }
}
