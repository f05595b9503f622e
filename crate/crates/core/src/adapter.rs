//! Frequency adapter: per-frame crossover detection and band splitting.
//!
//! For one spectral frame with per-bin magnitudes `t_0..t_B-1`, the adapter
//! builds the running-max envelope `f_i = max(t_0..t_i)`, its normalized
//! forward difference `(f_{i+1} - f_i) / (f_i + eps)`, and picks the
//! crossover bin `m` as the first index attaining the maximum difference.
//! Bins `[0..m]` form the low band and `[m..B-1]` the high band; bin `m`
//! belongs to both. The crossover is always computed from the teacher
//! output and is treated as a constant during backpropagation.

use num_complex::Complex;

use crate::dsp::Spectrogram;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default denominator guard for the normalized difference.
pub const DEFAULT_EPS: f64 = 1e-8;

/// Fixed crossover used by the static-split baseline: 4 kHz at 16 kHz with
/// a 512-point transform.
pub const FIXED_SUBBAND_BIN: usize = 128;

/// Running-max envelope of one frame's magnitudes; nondecreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope<T = f64>(Vec<T>);

impl<T: Scalar> Envelope<T> {
    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Normalized forward difference of an envelope; one entry per bin pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffProfile<T = f64> {
    values: Vec<T>,
    pub epsilon: T,
}

impl<T: Scalar> DiffProfile<T> {
    pub fn from_values(values: Vec<T>, epsilon: T) -> Self {
        Self { values, epsilon }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

/// Crossover bin with the band index ranges it induces over `bins` bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandSplit {
    pub m: usize,
    pub bins: usize,
}

impl BandSplit {
    pub fn new(m: usize, bins: usize) -> Result<Self> {
        if bins < 2 || m > bins - 2 {
            return Err(Error::InvalidConfig(format!(
                "crossover m={m} out of range for {bins} bins (need m <= bins-2)"
            )));
        }
        Ok(Self { m, bins })
    }

    /// Low band `[0..=m]`, `m + 1` bins.
    pub fn low(&self) -> std::ops::Range<usize> {
        0..self.m + 1
    }

    /// High band `[m..bins-1]`, `bins - m` bins; shares bin `m` with the
    /// low band.
    pub fn high(&self) -> std::ops::Range<usize> {
        self.m..self.bins
    }
}

/// Teacher and student band slices for one frame.
#[derive(Debug, Clone, Copy)]
pub struct FrameBands<'a, T> {
    pub split: BandSplit,
    pub t_low: &'a [Complex<T>],
    pub t_high: &'a [Complex<T>],
    pub s_low: &'a [Complex<T>],
    pub s_high: &'a [Complex<T>],
}

/// Running maximum over one frame's magnitudes.
pub fn running_max<T: Scalar>(frame_mags: &[T]) -> Result<Envelope<T>> {
    if frame_mags.is_empty() {
        return Err(Error::InputTooShort("running_max of an empty frame".into()));
    }
    if frame_mags.iter().any(|v| v.is_nan()) {
        return Err(Error::NanInput("running_max input contains NaN".into()));
    }
    let mut out = Vec::with_capacity(frame_mags.len());
    let mut cur = frame_mags[0];
    for &v in frame_mags {
        cur = cur.max(v);
        out.push(cur);
    }
    Ok(Envelope(out))
}

/// `(env[i+1] - env[i]) / (env[i] + eps)` for each adjacent pair.
pub fn normalized_diff<T: Scalar>(env: &Envelope<T>, eps: T) -> Result<DiffProfile<T>> {
    if eps <= T::zero() {
        return Err(Error::InvalidConfig("adapter eps must be positive".into()));
    }
    let v = env.values();
    let values = v
        .windows(2)
        .map(|w| (w[1] - w[0]) / (w[0] + eps))
        .collect();
    Ok(DiffProfile { values, epsilon: eps })
}

/// First index attaining the maximum difference; 0 for an all-flat profile.
pub fn crossover_index<T: Scalar>(diff: &DiffProfile<T>) -> usize {
    let mut best = 0;
    let mut best_val = T::neg_infinity();
    for (i, &v) in diff.values.iter().enumerate() {
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    best
}

/// Crossover of one complex frame: magnitudes, running max, normalized
/// difference, argmax.
pub fn frame_crossover<T: Scalar>(frame: &[Complex<T>], eps: T) -> Result<usize> {
    let mags: Vec<T> = frame.iter().map(|c| (c.re * c.re + c.im * c.im).sqrt()).collect();
    let env = running_max(&mags)?;
    let diff = normalized_diff(&env, eps)?;
    Ok(crossover_index(&diff))
}

/// Slices teacher and student frames into low/high bands at `m`.
pub fn split_frame<'a, T: Scalar>(
    teacher_frame: &'a [Complex<T>],
    student_frame: &'a [Complex<T>],
    m: usize,
) -> Result<FrameBands<'a, T>> {
    if teacher_frame.len() != student_frame.len() {
        return Err(Error::ShapeMismatch(format!(
            "teacher frame has {} bins, student {}",
            teacher_frame.len(),
            student_frame.len()
        )));
    }
    let split = BandSplit::new(m, teacher_frame.len())?;
    Ok(FrameBands {
        split,
        t_low: &teacher_frame[split.low()],
        t_high: &teacher_frame[split.high()],
        s_low: &student_frame[split.low()],
        s_high: &student_frame[split.high()],
    })
}

/// Per-frame crossover indices of a whole spectrogram, computed from the
/// teacher output only.
pub fn adapt<T: Scalar>(teacher_spec: &Spectrogram<T>, eps: T) -> Result<Vec<usize>> {
    (0..teacher_spec.frames())
        .map(|f| frame_crossover(teacher_spec.frame(f), eps))
        .collect()
}

/// Whole-utterance variant for ablations: one crossover from the per-bin
/// maximum magnitude across all frames.
pub fn adapt_utterance<T: Scalar>(teacher_spec: &Spectrogram<T>, eps: T) -> Result<usize> {
    if teacher_spec.frames() == 0 {
        return Err(Error::InputTooShort("spectrogram has no frames".into()));
    }
    let bins = teacher_spec.bins();
    let mut mags = vec![T::zero(); bins];
    for f in 0..teacher_spec.frames() {
        for (k, c) in teacher_spec.frame(f).iter().enumerate() {
            let m = (c.re * c.re + c.im * c.im).sqrt();
            if m > mags[k] {
                mags[k] = m;
            }
        }
    }
    let env = running_max(&mags)?;
    let diff = normalized_diff(&env, eps)?;
    Ok(crossover_index(&diff))
}
