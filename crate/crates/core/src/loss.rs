//! Distillation and task losses, each returning its value together with the
//! analytic gradient with respect to the student quantity.
//!
//! Complex spectra are treated as real vectors of interleaved (re, im)
//! pairs: a "gradient" at a complex entry holds `dL/d(re)` in its real part
//! and `dL/d(im)` in its imaginary part. All spectral losses average over
//! frames so values do not scale with clip length.
//!
//! The banded distillation loss splits every frame at a crossover bin taken
//! from the teacher output (see [`crate::adapter`]): the low band is matched
//! with a cosine loss (phase-oriented, amplitude-free), the high band with a
//! `beta`-weighted blend of cosine and mean squared error.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::adapter;
use crate::dsp::Spectrogram;
use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Guard added to norm products and energy ratios.
pub const NORM_GUARD: f64 = 1e-12;

/// Direction of the cosine objective.
///
/// `Alignment` (`1 - cos`) is minimized when student and teacher vectors
/// align. `Literal` (`cos - 1`) keeps the historical sign convention with
/// range `[-2, 0]`; minimizing it drives the vectors apart, so it exists
/// for fidelity experiments only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CosineForm {
    Alignment,
    PaperLiteral,
}

/// Which distillation objective to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KdVariant {
    /// Banded loss with the per-frame adaptive crossover.
    Dfkd,
    /// Full-spectrum mean absolute error.
    L1,
    /// Full-spectrum mean squared error.
    L2,
    /// Full-spectrum KL divergence between magnitude softmax distributions.
    Kl,
    /// Banded loss with the crossover frozen at 4 kHz (bin 128).
    FixedSubband,
    /// No distillation (scratch training).
    None,
}

impl KdVariant {
    pub const ALL: [KdVariant; 6] = [
        KdVariant::None,
        KdVariant::L1,
        KdVariant::L2,
        KdVariant::Kl,
        KdVariant::FixedSubband,
        KdVariant::Dfkd,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            KdVariant::Dfkd => "dfkd",
            KdVariant::L1 => "l1",
            KdVariant::L2 => "l2",
            KdVariant::Kl => "kl",
            KdVariant::FixedSubband => "fixed_subband",
            KdVariant::None => "none",
        }
    }
}

impl std::str::FromStr for KdVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dfkd" => Ok(KdVariant::Dfkd),
            "l1" => Ok(KdVariant::L1),
            "l2" => Ok(KdVariant::L2),
            "kl" => Ok(KdVariant::Kl),
            "fixed_subband" => Ok(KdVariant::FixedSubband),
            "none" => Ok(KdVariant::None),
            other => Err(Error::InvalidConfig(format!("unknown kd variant '{other}'"))),
        }
    }
}

impl std::str::FromStr for CosineForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alignment" => Ok(CosineForm::Alignment),
            "paper_literal" => Ok(CosineForm::PaperLiteral),
            other => Err(Error::InvalidConfig(format!("unknown cosine form '{other}'"))),
        }
    }
}

/// Loss hyperparameters shared by training and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// Blend between distillation and task loss in the total objective.
    pub alpha: f64,
    /// Blend between cosine and L2 inside the high-frequency loss.
    pub beta: f64,
    pub kd_variant: KdVariant,
    pub cosine_form: CosineForm,
    /// Softmax temperature for the KL baseline.
    pub kl_temperature: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.5,
            kd_variant: KdVariant::Dfkd,
            cosine_form: CosineForm::Alignment,
            kl_temperature: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!("alpha must be in [0,1], got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidConfig(format!("beta must be in [0,1], got {}", self.beta)));
        }
        if self.kl_temperature <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "kl_temperature must be positive, got {}",
                self.kl_temperature
            )));
        }
        Ok(())
    }
}

/// A scalar loss value with its gradient.
///
/// `guarded` is set when a degeneracy guard (zero norm, zero error energy)
/// dominated the value; diagnostics only, gradients stay well-defined.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTerm<T, G> {
    pub value: T,
    pub grad: G,
    pub guarded: bool,
}

/// Gradient containers that support convex combination.
pub trait GradArray<T: Scalar>: Clone {
    fn combine(a: T, x: &Self, b: T, y: &Self) -> Result<Self>;
}

impl<T: Scalar> GradArray<T> for Vec<T> {
    fn combine(a: T, x: &Self, b: T, y: &Self) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::ShapeMismatch(format!(
                "gradient lengths {} vs {}",
                x.len(),
                y.len()
            )));
        }
        Ok(x.iter().zip(y).map(|(&p, &q)| a * p + b * q).collect())
    }
}

impl<T: Scalar> GradArray<T> for Vec<Complex<T>> {
    fn combine(a: T, x: &Self, b: T, y: &Self) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::ShapeMismatch(format!(
                "gradient lengths {} vs {}",
                x.len(),
                y.len()
            )));
        }
        Ok(x
            .iter()
            .zip(y)
            .map(|(&p, &q)| Complex::new(a * p.re + b * q.re, a * p.im + b * q.im))
            .collect())
    }
}

fn check_equal_len<T>(t: &[Complex<T>], s: &[Complex<T>]) -> Result<usize> {
    if t.len() != s.len() {
        return Err(Error::ShapeMismatch(format!(
            "teacher slice has {} bins, student {}",
            t.len(),
            s.len()
        )));
    }
    if t.is_empty() {
        return Err(Error::InputTooShort("loss over an empty slice".into()));
    }
    Ok(t.len())
}

/// Cosine loss between two complex slices flattened to real vectors.
///
/// `cos = <T,S> / (|T||S| + 1e-12)`; the gradient is taken with respect to
/// the student slice.
pub fn cosine_loss<T: Scalar>(
    t_band: &[Complex<T>],
    s_band: &[Complex<T>],
    form: CosineForm,
) -> Result<LossTerm<T, Vec<Complex<T>>>> {
    check_equal_len(t_band, s_band)?;
    let guard = lit::<T>(NORM_GUARD);
    let mut dot = T::zero();
    let mut nt2 = T::zero();
    let mut ns2 = T::zero();
    for (t, s) in t_band.iter().zip(s_band) {
        dot += t.re * s.re + t.im * s.im;
        nt2 += t.re * t.re + t.im * t.im;
        ns2 += s.re * s.re + s.im * s.im;
    }
    let nt = nt2.sqrt();
    let ns = ns2.sqrt();
    let denom = nt * ns + guard;
    let cos = dot / denom;
    let guarded = nt2 == T::zero() || ns2 == T::zero();

    // d cos / d s_k = t_k/denom - cos * |T| / (|S| denom) * s_k
    let factor = if ns2 > T::zero() {
        cos * nt / (ns * denom)
    } else {
        T::zero()
    };
    let sign = match form {
        CosineForm::Alignment => -T::one(),
        CosineForm::PaperLiteral => T::one(),
    };
    let grad = t_band
        .iter()
        .zip(s_band)
        .map(|(t, s)| {
            Complex::new(
                sign * (t.re / denom - factor * s.re),
                sign * (t.im / denom - factor * s.im),
            )
        })
        .collect();
    let value = match form {
        CosineForm::Alignment => T::one() - cos,
        CosineForm::PaperLiteral => cos - T::one(),
    };
    Ok(LossTerm { value, grad, guarded })
}

/// Mean squared difference per complex entry: `mean |s_k - t_k|^2`.
pub fn l2_loss<T: Scalar>(
    t: &[Complex<T>],
    s: &[Complex<T>],
) -> Result<LossTerm<T, Vec<Complex<T>>>> {
    let n = check_equal_len(t, s)?;
    let inv_n = T::one() / lit::<T>(n as f64);
    let two = lit::<T>(2.0);
    let mut value = T::zero();
    let mut grad = Vec::with_capacity(n);
    for (tk, sk) in t.iter().zip(s) {
        let dre = sk.re - tk.re;
        let dim = sk.im - tk.im;
        value += (dre * dre + dim * dim) * inv_n;
        grad.push(Complex::new(two * dre * inv_n, two * dim * inv_n));
    }
    Ok(LossTerm { value, grad, guarded: false })
}

/// Mean absolute difference per complex entry: `mean |s_k - t_k|`, with the
/// subgradient 0 where the entries tie.
pub fn l1_loss<T: Scalar>(
    t: &[Complex<T>],
    s: &[Complex<T>],
) -> Result<LossTerm<T, Vec<Complex<T>>>> {
    let n = check_equal_len(t, s)?;
    let inv_n = T::one() / lit::<T>(n as f64);
    let mut value = T::zero();
    let mut grad = Vec::with_capacity(n);
    for (tk, sk) in t.iter().zip(s) {
        let dre = sk.re - tk.re;
        let dim = sk.im - tk.im;
        let mag = (dre * dre + dim * dim).sqrt();
        value += mag * inv_n;
        if mag > T::zero() {
            grad.push(Complex::new(dre / mag * inv_n, dim / mag * inv_n));
        } else {
            grad.push(Complex::new(T::zero(), T::zero()));
        }
    }
    Ok(LossTerm { value, grad, guarded: false })
}

/// Softmax over per-bin magnitudes scaled by `1/temperature`.
pub fn magnitude_softmax<T: Scalar>(frame: &[Complex<T>], temperature: T) -> Vec<T> {
    let z: Vec<T> = frame
        .iter()
        .map(|c| (c.re * c.re + c.im * c.im).sqrt() / temperature)
        .collect();
    let zmax = z.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let exps: Vec<T> = z.iter().map(|&v| (v - zmax).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Mean per-frame KL divergence `KL(teacher || student)` between magnitude
/// softmax distributions, with the gradient taken through the student
/// magnitudes and softmax.
pub fn kl_loss<T: Scalar>(
    teacher: &Spectrogram<T>,
    student: &Spectrogram<T>,
    temperature: T,
) -> Result<LossTerm<T, Vec<Complex<T>>>> {
    if temperature <= T::zero() {
        return Err(Error::InvalidConfig("temperature must be positive".into()));
    }
    check_same_shape(teacher, student)?;
    let frames = teacher.frames();
    let inv_frames = T::one() / lit::<T>(frames as f64);
    let mut value = T::zero();
    let mut grad = vec![Complex::new(T::zero(), T::zero()); teacher.data().len()];
    for f in 0..frames {
        let tf = teacher.frame(f);
        let sf = student.frame(f);
        let pt = magnitude_softmax(tf, temperature);
        let ps = magnitude_softmax(sf, temperature);
        let mut kl = T::zero();
        for k in 0..tf.len() {
            if pt[k] > T::zero() {
                kl += pt[k] * (pt[k].ln() - ps[k].ln());
            }
        }
        value += kl * inv_frames;
        // d KL / d z_s[k] = p_s[k] - p_t[k]; chain through |s_k| / temperature.
        let base = f * teacher.bins();
        for k in 0..sf.len() {
            let mag = (sf[k].re * sf[k].re + sf[k].im * sf[k].im).sqrt();
            if mag > T::zero() {
                let dz = (ps[k] - pt[k]) / temperature * inv_frames;
                grad[base + k] = Complex::new(dz * sf[k].re / mag, dz * sf[k].im / mag);
            }
        }
    }
    Ok(LossTerm { value, grad, guarded: false })
}

fn check_same_shape<T: Scalar>(a: &Spectrogram<T>, b: &Spectrogram<T>) -> Result<()> {
    if a.frames() != b.frames() || a.bins() != b.bins() {
        return Err(Error::ShapeMismatch(format!(
            "spectrogram shapes {}x{} vs {}x{}",
            a.frames(),
            a.bins(),
            b.frames(),
            b.bins()
        )));
    }
    if a.frames() == 0 {
        return Err(Error::InputTooShort("loss over an empty spectrogram".into()));
    }
    Ok(())
}

fn check_crossovers<T: Scalar>(spec: &Spectrogram<T>, ms: &[usize]) -> Result<()> {
    if ms.len() != spec.frames() {
        return Err(Error::ShapeMismatch(format!(
            "{} crossovers for {} frames",
            ms.len(),
            spec.frames()
        )));
    }
    Ok(())
}

/// Frame-averaged cosine loss over the low band `[0..=m]` of every frame.
pub fn low_freq_loss<T: Scalar>(
    teacher: &Spectrogram<T>,
    student: &Spectrogram<T>,
    crossovers: &[usize],
    form: CosineForm,
) -> Result<LossTerm<T, Vec<Complex<T>>>> {
    check_same_shape(teacher, student)?;
    check_crossovers(teacher, crossovers)?;
    let frames = teacher.frames();
    let bins = teacher.bins();
    let inv_frames = T::one() / lit::<T>(frames as f64);
    let mut value = T::zero();
    let mut grad = vec![Complex::new(T::zero(), T::zero()); frames * bins];
    let mut guarded = false;
    for (f, &m) in crossovers.iter().enumerate() {
        let split = adapter::BandSplit::new(m, bins)?;
        let term = cosine_loss(
            &teacher.frame(f)[split.low()],
            &student.frame(f)[split.low()],
            form,
        )?;
        value += term.value * inv_frames;
        guarded |= term.guarded;
        let base = f * bins;
        for (k, g) in term.grad.iter().enumerate() {
            grad[base + k].re += g.re * inv_frames;
            grad[base + k].im += g.im * inv_frames;
        }
    }
    Ok(LossTerm { value, grad, guarded })
}

/// Frame-averaged high-band loss: `beta * cosine + (1 - beta) * L2` over
/// `[m..bins-1]` of every frame.
///
/// The cosine and L2 parts are aggregated separately and blended once, so
/// the value is exactly affine in `beta`.
pub fn high_freq_loss<T: Scalar>(
    teacher: &Spectrogram<T>,
    student: &Spectrogram<T>,
    crossovers: &[usize],
    beta: T,
    form: CosineForm,
) -> Result<LossTerm<T, Vec<Complex<T>>>> {
    if beta < T::zero() || beta > T::one() {
        return Err(Error::InvalidConfig("beta must be in [0,1]".into()));
    }
    check_same_shape(teacher, student)?;
    check_crossovers(teacher, crossovers)?;
    let frames = teacher.frames();
    let bins = teacher.bins();
    let inv_frames = T::one() / lit::<T>(frames as f64);
    let mut cos_value = T::zero();
    let mut l2_value = T::zero();
    let mut cos_grad = vec![Complex::new(T::zero(), T::zero()); frames * bins];
    let mut l2_grad = vec![Complex::new(T::zero(), T::zero()); frames * bins];
    let mut guarded = false;
    for (f, &m) in crossovers.iter().enumerate() {
        let split = adapter::BandSplit::new(m, bins)?;
        let t_high = &teacher.frame(f)[split.high()];
        let s_high = &student.frame(f)[split.high()];
        let cos_term = cosine_loss(t_high, s_high, form)?;
        let l2_term = l2_loss(t_high, s_high)?;
        cos_value += cos_term.value * inv_frames;
        l2_value += l2_term.value * inv_frames;
        guarded |= cos_term.guarded;
        let base = f * bins + m;
        for k in 0..t_high.len() {
            cos_grad[base + k].re += cos_term.grad[k].re * inv_frames;
            cos_grad[base + k].im += cos_term.grad[k].im * inv_frames;
            l2_grad[base + k].re += l2_term.grad[k].re * inv_frames;
            l2_grad[base + k].im += l2_term.grad[k].im * inv_frames;
        }
    }
    let one_minus = T::one() - beta;
    let grad = GradArray::combine(beta, &cos_grad, one_minus, &l2_grad)?;
    Ok(LossTerm {
        value: beta * cos_value + one_minus * l2_value,
        grad,
        guarded,
    })
}

/// Banded distillation loss with its per-band components.
#[derive(Debug, Clone)]
pub struct KdLoss<T> {
    pub term: LossTerm<T, Vec<Complex<T>>>,
    pub low_value: T,
    pub high_value: T,
    /// Per-frame crossovers actually used; empty for full-spectrum variants.
    pub crossovers: Vec<usize>,
}

impl<T: Scalar> KdLoss<T> {
    fn full_spectrum(term: LossTerm<T, Vec<Complex<T>>>) -> Self {
        Self { term, low_value: T::zero(), high_value: T::zero(), crossovers: Vec::new() }
    }
}

/// Banded loss `low + high` with explicit per-frame crossovers.
pub fn kd_loss_with_crossovers<T: Scalar>(
    teacher: &Spectrogram<T>,
    student: &Spectrogram<T>,
    crossovers: &[usize],
    weights: &LossWeights,
) -> Result<KdLoss<T>> {
    weights.validate().map_err(|e| Error::InvalidConfig(format!("loss weights: {e}")))?;
    let low = low_freq_loss(teacher, student, crossovers, weights.cosine_form)?;
    let high = high_freq_loss(
        teacher,
        student,
        crossovers,
        lit(weights.beta),
        weights.cosine_form,
    )?;
    let grad = GradArray::combine(T::one(), &low.grad, T::one(), &high.grad)?;
    Ok(KdLoss {
        term: LossTerm {
            value: low.value + high.value,
            grad,
            guarded: low.guarded || high.guarded,
        },
        low_value: low.value,
        high_value: high.value,
        crossovers: crossovers.to_vec(),
    })
}

/// Distillation loss dispatch over [`KdVariant`].
///
/// `eps_adapter` feeds the crossover detector for the adaptive variant.
pub fn kd_loss<T: Scalar>(
    teacher: &Spectrogram<T>,
    student: &Spectrogram<T>,
    weights: &LossWeights,
    eps_adapter: T,
) -> Result<KdLoss<T>> {
    check_same_shape(teacher, student)?;
    match weights.kd_variant {
        KdVariant::Dfkd => {
            let ms = adapter::adapt(teacher, eps_adapter)?;
            kd_loss_with_crossovers(teacher, student, &ms, weights)
        }
        KdVariant::FixedSubband => {
            let ms = vec![adapter::FIXED_SUBBAND_BIN; teacher.frames()];
            kd_loss_with_crossovers(teacher, student, &ms, weights)
        }
        KdVariant::L1 => Ok(KdLoss::full_spectrum(l1_loss(teacher.data(), student.data())?)),
        KdVariant::L2 => Ok(KdLoss::full_spectrum(l2_loss(teacher.data(), student.data())?)),
        KdVariant::Kl => Ok(KdLoss::full_spectrum(kl_loss(
            teacher,
            student,
            lit(weights.kl_temperature),
        )?)),
        KdVariant::None => Ok(KdLoss::full_spectrum(LossTerm {
            value: T::zero(),
            grad: vec![Complex::new(T::zero(), T::zero()); teacher.data().len()],
            guarded: false,
        })),
    }
}

/// Scale-invariant SNR of `est` against `reference`, in dB.
pub fn si_snr_db<T: Scalar>(est: &[T], reference: &[T]) -> Result<T> {
    Ok(si_snr_parts(est, reference)?.0)
}

struct SiSnrParts<T> {
    value_db: T,
    scale: T,
    signal_energy: T,
    err: Vec<T>,
    err_energy: T,
}

fn si_snr_parts<T: Scalar>(est: &[T], reference: &[T]) -> Result<(T, SiSnrParts<T>)> {
    if est.len() != reference.len() {
        return Err(Error::ShapeMismatch(format!(
            "estimate length {} vs reference {}",
            est.len(),
            reference.len()
        )));
    }
    if est.is_empty() {
        return Err(Error::InputTooShort("SI-SNR over empty signals".into()));
    }
    let mut dot = T::zero();
    let mut rr = T::zero();
    for (&e, &r) in est.iter().zip(reference) {
        dot += e * r;
        rr += r * r;
    }
    if rr == T::zero() {
        return Err(Error::ZeroEnergy("SI-SNR reference has zero energy".into()));
    }
    let scale = dot / rr;
    let signal_energy = dot * scale; // |scale * r|^2 = dot^2 / rr
    if signal_energy == T::zero() {
        return Err(Error::ZeroEnergy(
            "estimate is orthogonal to the reference; SI-SNR undefined".into(),
        ));
    }
    let err: Vec<T> = est.iter().zip(reference).map(|(&e, &r)| e - scale * r).collect();
    let err_energy: T = err.iter().map(|&x| x * x).sum();
    let guard = lit::<T>(NORM_GUARD);
    let ratio = signal_energy / (err_energy + guard);
    let value_db = lit::<T>(10.0) * ratio.log10();
    Ok((value_db, SiSnrParts { value_db, scale, signal_energy, err, err_energy }))
}

/// Negative SI-SNR as a loss, with the gradient with respect to the
/// estimate.
pub fn si_snr<T: Scalar>(est: &[T], reference: &[T]) -> Result<LossTerm<T, Vec<T>>> {
    let (_, parts) = si_snr_parts(est, reference)?;
    let guard = lit::<T>(NORM_GUARD);
    let k = lit::<T>(10.0) / lit::<T>(std::f64::consts::LN_10);
    let two = lit::<T>(2.0);
    let denom = parts.err_energy + guard;
    let grad = reference
        .iter()
        .zip(&parts.err)
        .map(|(&r, &e)| {
            -k * (two * parts.scale * r / parts.signal_energy - two * e / denom)
        })
        .collect();
    Ok(LossTerm {
        value: -parts.value_db,
        grad,
        guarded: parts.err_energy < guard,
    })
}

/// Convex combination `alpha * kd + (1 - alpha) * se` of two loss terms
/// whose gradients live in the same space.
pub fn total_loss<T: Scalar, G: GradArray<T>>(
    kd: &LossTerm<T, G>,
    se: &LossTerm<T, G>,
    alpha: T,
) -> Result<LossTerm<T, G>> {
    if alpha < T::zero() || alpha > T::one() {
        return Err(Error::InvalidConfig("alpha must be in [0,1]".into()));
    }
    let one_minus = T::one() - alpha;
    Ok(LossTerm {
        value: alpha * kd.value + one_minus * se.value,
        grad: GradArray::combine(alpha, &kd.grad, one_minus, &se.grad)?,
        guarded: kd.guarded || se.guarded,
    })
}
