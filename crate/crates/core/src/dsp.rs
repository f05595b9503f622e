//! Waveforms, windowed STFT/iSTFT with an exact linear adjoint, and WAV I/O.
//!
//! The iSTFT uses weighted overlap-add with a synthesis window equal to the
//! analysis window and per-sample normalization by the accumulated squared
//! window. With that normalization `istft(stft(x))` reproduces `x` exactly
//! (up to floating-point rounding) on the fully-overlapped interior. The
//! normalizer is floored at [`OLA_NORM_FLOOR`]: a modified spectrogram (a
//! masked spectrum, a gradient) is not a consistent STFT, and dividing its
//! leakage by the near-zero window coverage of the outermost samples would
//! amplify it by up to eight orders of magnitude. Flooring attenuates those
//! edge samples instead and leaves the interior untouched.
//!
//! [`istft_adjoint`] is the adjoint of [`istft`] seen as a real-linear map
//! from per-bin (re, im) pairs to output samples. It is what backpropagates
//! time-domain losses into spectrogram space.

pub mod wav;

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Smallest overlap-add window coverage that is divided through; samples
/// with less coverage (the first and last few of a clip) are attenuated.
pub const OLA_NORM_FLOOR: f64 = 1e-3;

/// Mono audio signal with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform<T = f64> {
    pub samples: Vec<T>,
    pub sample_rate: u32,
}

impl<T: Scalar> Waveform<T> {
    pub fn new(samples: Vec<T>, sample_rate: u32) -> Self {
        Self { samples, sample_rate }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Checks the type invariants: nonempty, positive rate, finite samples.
    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::InputTooShort("waveform has no samples".into()));
        }
        if self.sample_rate == 0 {
            return Err(Error::InvalidConfig("sample_rate must be positive".into()));
        }
        if self.samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NanInput("waveform contains non-finite samples".into()));
        }
        Ok(())
    }

    pub fn rms(&self) -> T {
        if self.samples.is_empty() {
            return T::zero();
        }
        let sum: T = self.samples.iter().map(|&s| s * s).sum();
        (sum / lit(self.samples.len() as f64)).sqrt()
    }

    pub fn peak(&self) -> T {
        self.samples
            .iter()
            .fold(T::zero(), |acc, &s| acc.max(s.abs()))
    }
}

/// STFT analysis parameters. The window is a periodic Hann of length
/// `n_fft`, which satisfies the overlap-add condition at `hop = n_fft / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftConfig {
    pub n_fft: usize,
    pub hop: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        // 257 bins at 16 kHz: one bin per 31.25 Hz.
        Self { n_fft: 512, hop: 256 }
    }
}

impl StftConfig {
    pub fn bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_fft < 4 || self.n_fft % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "n_fft must be even and >= 4, got {}",
                self.n_fft
            )));
        }
        if self.hop == 0 || self.n_fft % self.hop != 0 {
            return Err(Error::InvalidConfig(format!(
                "hop must divide n_fft, got hop={} n_fft={}",
                self.hop, self.n_fft
            )));
        }
        Ok(())
    }

    /// Periodic Hann window of length `n_fft`.
    pub fn window<T: Scalar>(&self) -> Vec<T> {
        let n = self.n_fft as f64;
        (0..self.n_fft)
            .map(|i| lit(0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / n).cos())))
            .collect()
    }

    /// Number of full frames a signal of `len` samples yields.
    pub fn frame_count(&self, len: usize) -> Result<usize> {
        if len < self.n_fft {
            return Err(Error::InputTooShort(format!(
                "signal length {} is below one frame ({} samples)",
                len, self.n_fft
            )));
        }
        Ok((len - self.n_fft) / self.hop + 1)
    }

    /// Length of the overlap-add output for `frames` frames.
    pub fn output_len(&self, frames: usize) -> usize {
        (frames - 1) * self.hop + self.n_fft
    }
}

/// Complex one-sided spectrogram: `frames × bins` with `bins = n_fft/2 + 1`,
/// stored row-major per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram<T = f64> {
    frames: usize,
    bins: usize,
    sample_rate: u32,
    config: StftConfig,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> Spectrogram<T> {
    pub fn zeros(frames: usize, config: StftConfig, sample_rate: u32) -> Self {
        let bins = config.bins();
        Self {
            frames,
            bins,
            sample_rate,
            config,
            data: vec![Complex::new(T::zero(), T::zero()); frames * bins],
        }
    }

    pub fn from_data(
        config: StftConfig,
        sample_rate: u32,
        frames: usize,
        data: Vec<Complex<T>>,
    ) -> Result<Self> {
        config.validate()?;
        let bins = config.bins();
        if data.len() != frames * bins {
            return Err(Error::ShapeMismatch(format!(
                "spectrogram data length {} != frames {} x bins {}",
                data.len(),
                frames,
                bins
            )));
        }
        Ok(Self { frames, bins, sample_rate, config, data })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn frame(&self, f: usize) -> &[Complex<T>] {
        &self.data[f * self.bins..(f + 1) * self.bins]
    }

    pub fn frame_mut(&mut self, f: usize) -> &mut [Complex<T>] {
        &mut self.data[f * self.bins..(f + 1) * self.bins]
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex<T>> {
        self.data
    }

    /// Per-bin magnitudes of one frame.
    pub fn magnitude_frame(&self, f: usize) -> Vec<T> {
        self.frame(f)
            .iter()
            .map(|c| (c.re * c.re + c.im * c.im).sqrt())
            .collect()
    }
}

/// Short-time Fourier transform with a periodic Hann analysis window.
///
/// Frame `f` covers samples `[f*hop, f*hop + n_fft)`; bin `k` of that frame
/// is the k-th DFT coefficient of the windowed segment. Trailing samples
/// that do not fill a frame are dropped.
pub fn stft<T: Scalar>(wave: &Waveform<T>, cfg: &StftConfig) -> Result<Spectrogram<T>> {
    cfg.validate()?;
    let n = cfg.n_fft;
    let frames = cfg.frame_count(wave.samples.len())?;
    let window: Vec<T> = cfg.window();
    let bins = cfg.bins();

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut spec = Spectrogram::zeros(frames, *cfg, wave.sample_rate);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    for f in 0..frames {
        let start = f * cfg.hop;
        for i in 0..n {
            buf[i] = Complex::new(wave.samples[start + i] * window[i], T::zero());
        }
        fft.process(&mut buf);
        spec.frame_mut(f).copy_from_slice(&buf[..bins]);
    }
    Ok(spec)
}

/// Accumulated squared synthesis window over the frame grid.
fn ola_norm<T: Scalar>(cfg: &StftConfig, frames: usize) -> Vec<T> {
    let window: Vec<T> = cfg.window();
    let mut norm = vec![T::zero(); cfg.output_len(frames)];
    for f in 0..frames {
        let start = f * cfg.hop;
        for i in 0..cfg.n_fft {
            norm[start + i] += window[i] * window[i];
        }
    }
    norm
}

/// Inverse STFT by weighted overlap-add.
///
/// The one-sided input is treated as the first half of a conjugate-symmetric
/// spectrum; imaginary parts of the DC and Nyquist bins do not contribute.
/// Reconstruction is exact on the interior; edge samples whose window
/// coverage falls below [`OLA_NORM_FLOOR`] are attenuated.
pub fn istft<T: Scalar>(spec: &Spectrogram<T>) -> Result<Waveform<T>> {
    let cfg = spec.config();
    cfg.validate()?;
    let n = cfg.n_fft;
    if spec.bins() != cfg.bins() {
        return Err(Error::ShapeMismatch(format!(
            "spectrogram has {} bins, config expects {}",
            spec.bins(),
            cfg.bins()
        )));
    }
    let frames = spec.frames();
    if frames == 0 {
        return Err(Error::InputTooShort("spectrogram has no frames".into()));
    }

    let window: Vec<T> = cfg.window();
    let norm = ola_norm::<T>(cfg, frames);
    let out_len = cfg.output_len(frames);
    let inv_n = T::one() / lit::<T>(n as f64);

    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(n);
    let mut acc = vec![T::zero(); out_len];
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    for f in 0..frames {
        let fr = spec.frame(f);
        buf[0] = fr[0];
        buf[n / 2] = fr[n / 2];
        for k in 1..n / 2 {
            buf[k] = fr[k];
            buf[n - k] = fr[k].conj();
        }
        ifft.process(&mut buf);
        let start = f * cfg.hop;
        for i in 0..n {
            acc[start + i] += window[i] * buf[i].re * inv_n;
        }
    }

    let floor = lit::<T>(OLA_NORM_FLOOR);
    let samples = acc.iter().zip(&norm).map(|(&a, &w2)| a / w2.max(floor)).collect();
    Ok(Waveform::new(samples, spec.sample_rate()))
}

/// Adjoint of [`istft`] as a real-linear map: for every spectrogram `X` and
/// waveform `y` of matching shape,
/// `<istft(X), y> == <X, istft_adjoint(y)>` where the right-hand inner
/// product sums `re*re + im*im` over all bins.
///
/// The input length must lie exactly on the frame grid,
/// `len = (frames-1)*hop + n_fft`, which is what [`istft`] produces.
pub fn istft_adjoint<T: Scalar>(wave_grad: &Waveform<T>, cfg: &StftConfig) -> Result<Spectrogram<T>> {
    cfg.validate()?;
    let n = cfg.n_fft;
    let len = wave_grad.samples.len();
    if len < n || (len - n) % cfg.hop != 0 {
        return Err(Error::ShapeMismatch(format!(
            "length {} does not sit on the frame grid (n_fft={}, hop={})",
            len, n, cfg.hop
        )));
    }
    let frames = (len - n) / cfg.hop + 1;
    let window: Vec<T> = cfg.window();
    let norm = ola_norm::<T>(cfg, frames);
    let inv_n = T::one() / lit::<T>(n as f64);
    let two = lit::<T>(2.0);

    // Undo the per-sample normalization with the same floor as istft; the
    // normalizer is diagonal, so this keeps the map an exact adjoint.
    let floor = lit::<T>(OLA_NORM_FLOOR);
    let g: Vec<T> = wave_grad
        .samples
        .iter()
        .zip(&norm)
        .map(|(&y, &w2)| y / w2.max(floor))
        .collect();

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut spec = Spectrogram::zeros(frames, *cfg, wave_grad.sample_rate);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    for f in 0..frames {
        let start = f * cfg.hop;
        for i in 0..n {
            buf[i] = Complex::new(window[i] * g[start + i], T::zero());
        }
        fft.process(&mut buf);
        let out = spec.frame_mut(f);
        // Middle bins appear twice in the symmetric spectrum, DC and
        // Nyquist once; their imaginary parts never reach the output.
        out[0] = Complex::new(buf[0].re * inv_n, T::zero());
        out[n / 2] = Complex::new(buf[n / 2].re * inv_n, T::zero());
        for k in 1..n / 2 {
            out[k] = Complex::new(two * buf[k].re * inv_n, two * buf[k].im * inv_n);
        }
    }
    Ok(spec)
}

/// Per-bin magnitudes, `frames × bins`.
pub fn magnitude<T: Scalar>(spec: &Spectrogram<T>) -> Vec<Vec<T>> {
    (0..spec.frames()).map(|f| spec.magnitude_frame(f)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    /// Direct O(n^2) DFT of a real segment, the oracle for the FFT path.
    fn naive_dft(seg: &[f64]) -> Vec<Complex<f64>> {
        let n = seg.len();
        (0..n)
            .map(|k| {
                let mut acc = Complex::new(0.0, 0.0);
                for (i, &x) in seg.iter().enumerate() {
                    let ang = -2.0 * std::f64::consts::PI * (k * i) as f64 / n as f64;
                    acc += Complex::new(x * ang.cos(), x * ang.sin());
                }
                acc
            })
            .collect()
    }

    fn random_wave(seed: u64, len: usize) -> Waveform<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        Waveform::new((0..len).map(|_| rng.random_range(-1.0..1.0)).collect(), 16000)
    }

    fn cfg() -> StftConfig {
        StftConfig::default()
    }

    #[test]
    fn stft_of_zeros_is_zero() {
        let wave = Waveform::new(vec![0.0; 2048], 16000);
        let spec = stft(&wave, &cfg()).unwrap();
        assert!(spec.data().iter().all(|c| c.re == 0.0 && c.im == 0.0));
    }

    #[test]
    fn stft_too_short_errors() {
        let wave = Waveform::new(vec![0.1; 100], 16000);
        let err = stft(&wave, &cfg()).unwrap_err();
        assert!(err.to_string().contains("input too short"));
    }

    #[test]
    fn stft_frame_count_and_layout() {
        let wave = random_wave(1, 32000);
        let spec = stft(&wave, &cfg()).unwrap();
        assert_eq!(spec.frames(), (32000 - 512) / 256 + 1);
        assert_eq!(spec.bins(), 257);
    }

    #[test]
    fn stft_matches_naive_dft_oracle() {
        let wave = random_wave(2, 1024);
        let c = cfg();
        let spec = stft(&wave, &c).unwrap();
        let window: Vec<f64> = c.window();
        for f in 0..spec.frames() {
            let seg: Vec<f64> = (0..c.n_fft)
                .map(|i| wave.samples[f * c.hop + i] * window[i])
                .collect();
            let oracle = naive_dft(&seg);
            for k in 0..c.bins() {
                assert_relative_eq!(spec.frame(f)[k].re, oracle[k].re, max_relative = 1e-9, epsilon = 1e-9);
                assert_relative_eq!(spec.frame(f)[k].im, oracle[k].im, max_relative = 1e-9, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn stft_of_impulse_matches_windowed_impulse_dft() {
        let mut samples = vec![0.0; 512];
        samples[0] = 1.0;
        let wave = Waveform::new(samples, 16000);
        let c = cfg();
        let spec = stft(&wave, &c).unwrap();
        // Window is zero at sample 0, so the windowed impulse is the zero
        // segment; check against the oracle anyway.
        let window: Vec<f64> = c.window();
        let seg: Vec<f64> = (0..512).map(|i| wave.samples[i] * window[i]).collect();
        let oracle = naive_dft(&seg);
        for k in 0..c.bins() {
            assert_relative_eq!(spec.frame(0)[k].re, oracle[k].re, epsilon = 1e-12);
            assert_relative_eq!(spec.frame(0)[k].im, oracle[k].im, epsilon = 1e-12);
        }
        // Impulse at sample 1 exercises a nonzero window tap.
        let mut samples = vec![0.0; 512];
        samples[1] = 1.0;
        let wave = Waveform::new(samples, 16000);
        let spec = stft(&wave, &c).unwrap();
        let seg: Vec<f64> = (0..512).map(|i| wave.samples[i] * window[i]).collect();
        let oracle = naive_dft(&seg);
        for k in 0..c.bins() {
            assert_relative_eq!(spec.frame(0)[k].re, oracle[k].re, epsilon = 1e-12);
            assert_relative_eq!(spec.frame(0)[k].im, oracle[k].im, epsilon = 1e-12);
        }
    }

    #[test]
    fn sine_at_bin_center_peaks_at_that_bin() {
        // 500 Hz at 16 kHz with n_fft = 512 lands exactly on bin 16.
        let n = 4096;
        let samples: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * 500.0 * i as f64 / 16000.0).sin())
            .collect();
        let spec = stft(&Waveform::new(samples, 16000), &cfg()).unwrap();
        for f in 0..spec.frames() {
            let mags = spec.magnitude_frame(f);
            let peak_bin = mags
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(peak_bin, 16);
            // Exact-bin sine under a periodic Hann leaks only into the
            // immediate neighbors.
            for (k, &m) in mags.iter().enumerate() {
                if k.abs_diff(16) > 1 {
                    assert!(m < 1e-9 * mags[16], "bin {k} magnitude {m}");
                }
            }
        }
    }

    #[test]
    fn parseval_energy_consistency_single_frame() {
        let wave = random_wave(3, 512);
        let c = cfg();
        let window: Vec<f64> = c.window();
        let seg: Vec<f64> = (0..512).map(|i| wave.samples[i] * window[i]).collect();
        let spec = stft(&wave, &c).unwrap();
        let time_energy: f64 = seg.iter().map(|x| x * x).sum();
        let fr = spec.frame(0);
        let mut freq_energy = fr[0].norm_sqr() + fr[256].norm_sqr();
        for k in 1..256 {
            freq_energy += 2.0 * fr[k].norm_sqr();
        }
        freq_energy /= 512.0;
        assert_relative_eq!(time_energy, freq_energy, max_relative = 1e-9);
    }

    #[test]
    fn istft_roundtrip_interior() {
        for seed in 0..5 {
            let wave = random_wave(100 + seed, 32000);
            let spec = stft(&wave, &cfg()).unwrap();
            let rec = istft(&spec).unwrap();
            assert_eq!(rec.len(), 32000);
            let interior = 512..32000 - 512;
            let mut err = 0.0;
            let mut ref_energy = 0.0;
            for i in interior {
                let d = rec.samples[i] - wave.samples[i];
                err += d * d;
                ref_energy += wave.samples[i] * wave.samples[i];
            }
            assert!((err / ref_energy).sqrt() < 1e-6);
        }
    }

    #[test]
    fn istft_of_zero_spec_is_zero() {
        let spec = Spectrogram::<f64>::zeros(8, cfg(), 16000);
        let wave = istft(&spec).unwrap();
        assert!(wave.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn istft_linearity() {
        let x = random_wave(7, 8192);
        let y = random_wave(8, 8192);
        let sx = stft(&x, &cfg()).unwrap();
        let sy = stft(&y, &cfg()).unwrap();
        let mut sum = sx.clone();
        for (a, b) in sum.data_mut().iter_mut().zip(sy.data()) {
            *a += *b;
        }
        let rec_sum = istft(&sum).unwrap();
        let rx = istft(&sx).unwrap();
        let ry = istft(&sy).unwrap();
        for i in 0..rec_sum.len() {
            assert_relative_eq!(rec_sum.samples[i], rx.samples[i] + ry.samples[i], epsilon = 1e-10);
        }
    }

    fn random_spec(seed: u64, frames: usize) -> Spectrogram<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let c = cfg();
        let data = (0..frames * c.bins())
            .map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        Spectrogram::from_data(c, 16000, frames, data).unwrap()
    }

    #[test]
    fn adjoint_identity_random_pairs() {
        for seed in 0..50 {
            let frames = 3 + (seed as usize % 5);
            let spec = random_spec(200 + seed, frames);
            let y = random_wave(300 + seed, cfg().output_len(frames));
            let lhs: f64 = istft(&spec)
                .unwrap()
                .samples
                .iter()
                .zip(&y.samples)
                .map(|(a, b)| a * b)
                .sum();
            let adj = istft_adjoint(&y, &cfg()).unwrap();
            let rhs: f64 = spec
                .data()
                .iter()
                .zip(adj.data())
                .map(|(a, b)| a.re * b.re + a.im * b.im)
                .sum();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-8);
        }
    }

    #[test]
    fn adjoint_of_zero_is_zero() {
        let y = Waveform::new(vec![0.0; 2048], 16000);
        let adj = istft_adjoint(&y, &cfg()).unwrap();
        assert!(adj.data().iter().all(|c| c.re == 0.0 && c.im == 0.0));
    }

    #[test]
    fn adjoint_single_entry_inner_products() {
        // One nonzero bin vs one nonzero sample, both inner products by
        // brute force.
        let c = cfg();
        let frames = 3;
        let mut spec = Spectrogram::<f64>::zeros(frames, c, 16000);
        spec.frame_mut(1)[40] = Complex::new(0.7, -0.3);
        let mut y = Waveform::new(vec![0.0; c.output_len(frames)], 16000);
        y.samples[700] = 1.3;
        let lhs: f64 = istft(&spec)
            .unwrap()
            .samples
            .iter()
            .zip(&y.samples)
            .map(|(a, b)| a * b)
            .sum();
        let adj = istft_adjoint(&y, &c).unwrap();
        let rhs = 0.7 * adj.frame(1)[40].re + (-0.3) * adj.frame(1)[40].im;
        assert_relative_eq!(lhs, rhs, max_relative = 1e-10, epsilon = 1e-15);
    }

    #[test]
    fn magnitude_basics() {
        let c = cfg();
        let mut spec = Spectrogram::<f64>::zeros(1, c, 16000);
        spec.frame_mut(0)[5] = Complex::new(3.0, 4.0);
        let mags = magnitude(&spec);
        assert_eq!(mags[0][5], 5.0);
        assert!(mags[0].iter().enumerate().all(|(k, &m)| k == 5 || m == 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn stft_linearity_property(seed_x in 0u64..1000, seed_y in 1000u64..2000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let x = random_wave(seed_x, 2048);
            let y = random_wave(seed_y, 2048);
            let combo = Waveform::new(
                x.samples.iter().zip(&y.samples).map(|(&p, &q)| a * p + b * q).collect(),
                16000,
            );
            let sc = stft(&combo, &cfg()).unwrap();
            let sx = stft(&x, &cfg()).unwrap();
            let sy = stft(&y, &cfg()).unwrap();
            for (i, c) in sc.data().iter().enumerate() {
                let expect = sx.data()[i] * a + sy.data()[i] * b;
                prop_assert!((c.re - expect.re).abs() < 1e-10);
                prop_assert!((c.im - expect.im).abs() < 1e-10);
            }
        }

        #[test]
        fn magnitude_squared_is_norm_sqr(seed in 0u64..500) {
            let spec = random_spec(seed, 2);
            let mags = magnitude(&spec);
            for f in 0..2 {
                for k in 0..spec.bins() {
                    let m = mags[f][k];
                    prop_assert!((m * m - spec.frame(f)[k].norm_sqr()).abs() < 1e-12);
                }
            }
        }
    }
}
