//! Central finite-difference verification of every analytic gradient.
//!
//! Each loss operation is checked on batches of random inputs: the analytic
//! gradient must match `(f(x+h) - f(x-h)) / 2h` componentwise within a
//! relative tolerance, with a small absolute floor for near-zero
//! components. The end-to-end check differentiates the full training
//! objective (distillation loss + task loss through iSTFT) with respect to
//! every student parameter.
//!
//! All checks run in f64. Step and tolerance are fixed constants; the only
//! free input is the seed, so a given seed always checks the same cases.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::data::{hash64, MixtureSample, NoiseKind};
use crate::dsp::{self, Spectrogram, StftConfig, Waveform};
use crate::error::Result;
use crate::loss::{self, CosineForm, KdVariant, LossWeights};
use crate::model::MaskNet;
use crate::train::{clip_step, SeLoss, TrainConfig};

/// Central-difference step (f64).
pub const FD_STEP: f64 = 1e-5;
/// Maximum allowed relative error.
pub const TOLERANCE: f64 = 1e-4;
/// Components below this magnitude are compared absolutely.
pub const REL_FLOOR: f64 = 1e-4;

/// Result of checking one operation.
#[derive(Debug, Clone)]
pub struct GradCheckEntry {
    pub name: String,
    pub cases: usize,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Full suite result.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
    pub seed: u64,
}

impl GradCheckReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }
}

/// Central finite differences of a scalar function.
pub fn central_diff(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let plus = f(&probe);
        probe[i] = x[i] - h;
        let minus = f(&probe);
        probe[i] = x[i];
        grad[i] = (plus - minus) / (2.0 * h);
    }
    grad
}

/// Worst componentwise deviation between analytic and finite-difference
/// gradients, relative with an absolute floor.
pub fn max_rel_err(analytic: &[f64], fd: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(fd)
        .map(|(&a, &f)| (a - f).abs() / a.abs().max(f.abs()).max(REL_FLOOR))
        .fold(0.0, f64::max)
}

fn flatten(v: &[Complex<f64>]) -> Vec<f64> {
    v.iter().flat_map(|c| [c.re, c.im]).collect()
}

fn unflatten(x: &[f64]) -> Vec<Complex<f64>> {
    x.chunks_exact(2).map(|p| Complex::new(p[0], p[1])).collect()
}

fn random_cvec(rng: &mut ChaCha12Rng, n: usize) -> Vec<Complex<f64>> {
    (0..n)
        .map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

/// Small spectrogram config used by the spectrogram-level checks.
fn small_cfg() -> StftConfig {
    StftConfig { n_fft: 64, hop: 32 }
}

fn random_spec(rng: &mut ChaCha12Rng, frames: usize, cfg: StftConfig) -> Spectrogram<f64> {
    let data = random_cvec(rng, frames * cfg.bins());
    Spectrogram::from_data(cfg, 16000, frames, data).unwrap()
}

fn spec_from_flat(template: &Spectrogram<f64>, x: &[f64]) -> Spectrogram<f64> {
    Spectrogram::from_data(
        *template.config(),
        template.sample_rate(),
        template.frames(),
        unflatten(x),
    )
    .unwrap()
}

/// Checks a band-level operation over `cases` random slice pairs.
fn check_band_op(
    name: &str,
    seed: u64,
    cases: usize,
    op: impl Fn(&[Complex<f64>], &[Complex<f64>]) -> Result<loss::LossTerm<f64, Vec<Complex<f64>>>>,
    corrupt: bool,
) -> GradCheckEntry {
    let mut rng = ChaCha12Rng::seed_from_u64(hash64(seed, name, 0));
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.random_range(4..=32usize);
        let t = random_cvec(&mut rng, n);
        let s = random_cvec(&mut rng, n);
        let term = op(&t, &s).expect("band op");
        let mut analytic = flatten(&term.grad);
        if corrupt {
            analytic[0] += 0.5;
        }
        let f = |x: &[f64]| op(&t, &unflatten(x)).expect("band op").value;
        let fd = central_diff(&f, &flatten(&s), FD_STEP);
        worst = worst.max(max_rel_err(&analytic, &fd));
    }
    GradCheckEntry {
        name: name.to_string(),
        cases,
        max_rel_err: worst,
        tolerance: TOLERANCE,
        pass: worst < TOLERANCE,
    }
}

/// Checks a spectrogram-level operation over `cases` random pairs.
fn check_spec_op(
    name: &str,
    seed: u64,
    cases: usize,
    op: impl Fn(&Spectrogram<f64>, &Spectrogram<f64>) -> Result<loss::LossTerm<f64, Vec<Complex<f64>>>>,
) -> GradCheckEntry {
    let mut rng = ChaCha12Rng::seed_from_u64(hash64(seed, name, 0));
    let cfg = small_cfg();
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let frames = rng.random_range(2..=3usize);
        let teacher = random_spec(&mut rng, frames, cfg);
        let student = random_spec(&mut rng, frames, cfg);
        let term = op(&teacher, &student).expect("spec op");
        let analytic = flatten(&term.grad);
        let f = |x: &[f64]| op(&teacher, &spec_from_flat(&student, x)).expect("spec op").value;
        let fd = central_diff(&f, &flatten(student.data()), FD_STEP);
        worst = worst.max(max_rel_err(&analytic, &fd));
    }
    GradCheckEntry {
        name: name.to_string(),
        cases,
        max_rel_err: worst,
        tolerance: TOLERANCE,
        pass: worst < TOLERANCE,
    }
}

fn check_si_snr(seed: u64, cases: usize) -> GradCheckEntry {
    let mut rng = ChaCha12Rng::seed_from_u64(hash64(seed, "si_snr", 0));
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.random_range(32..=256usize);
        let reference: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        // Correlated estimate so the projection is well away from zero.
        let est: Vec<f64> = reference
            .iter()
            .map(|&r| r + rng.random_range(-0.5..0.5))
            .collect();
        let term = loss::si_snr(&est, &reference).expect("si_snr");
        let f = |x: &[f64]| loss::si_snr(x, &reference).expect("si_snr").value;
        let fd = central_diff(&f, &est, FD_STEP);
        worst = worst.max(max_rel_err(&term.grad, &fd));
    }
    GradCheckEntry {
        name: "si_snr".to_string(),
        cases,
        max_rel_err: worst,
        tolerance: TOLERANCE,
        pass: worst < TOLERANCE,
    }
}

fn check_total(seed: u64, cases: usize) -> GradCheckEntry {
    let mut rng = ChaCha12Rng::seed_from_u64(hash64(seed, "total", 0));
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.random_range(4..=24usize);
        let t_kd = random_cvec(&mut rng, n);
        let t_se = random_cvec(&mut rng, n);
        let s = random_cvec(&mut rng, n);
        let alpha = rng.random_range(0.0..1.0);
        let eval = |sv: &[Complex<f64>]| {
            let kd = loss::l2_loss(&t_kd, sv).unwrap();
            let se = loss::cosine_loss(&t_se, sv, CosineForm::Alignment).unwrap();
            loss::total_loss(&kd, &se, alpha).unwrap()
        };
        let term = eval(&s);
        let analytic = flatten(&term.grad);
        let f = |x: &[f64]| eval(&unflatten(x)).value;
        let fd = central_diff(&f, &flatten(&s), FD_STEP);
        worst = worst.max(max_rel_err(&analytic, &fd));
    }
    GradCheckEntry {
        name: "total".to_string(),
        cases,
        max_rel_err: worst,
        tolerance: TOLERANCE,
        pass: worst < TOLERANCE,
    }
}

fn get_params(net: &MaskNet<f64>) -> Vec<f64> {
    let mut n = net.clone();
    n.params_mut().map(|p| *p).collect()
}

fn set_params(net: &MaskNet<f64>, flat: &[f64]) -> MaskNet<f64> {
    let mut n = net.clone();
    for (p, &v) in n.params_mut().zip(flat) {
        *p = v;
    }
    n
}

/// End-to-end check: d(total objective)/d(student params) for the full
/// training pipeline (teacher masks, banded loss, iSTFT task loss).
fn check_end_to_end(seed: u64, cases: usize) -> GradCheckEntry {
    let mut rng = ChaCha12Rng::seed_from_u64(hash64(seed, "end_to_end", 0));
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        // A couple of full-size configs, the rest small for speed.
        let full = case < 2;
        let stft = if full { StftConfig::default() } else { small_cfg() };
        let bins = stft.bins();
        let frames = 2;
        let len = stft.output_len(frames);

        let mut sample_ok = None;
        for _attempt in 0..50 {
            let clean: Vec<f64> = (0..len).map(|_| rng.random_range(-0.5..0.5)).collect();
            let noise: Vec<f64> = (0..len).map(|_| rng.random_range(-0.2..0.2)).collect();
            let mixture: Vec<f64> = clean.iter().zip(&noise).map(|(c, n)| c + n).collect();
            let sample = MixtureSample {
                clean: Waveform::new(clean, 16000),
                noise: Waveform::new(noise.clone(), 16000),
                mixture: Waveform::new(mixture, 16000),
                snr_db: 0.0,
                seed: 0,
                kind: NoiseKind::White,
            };
            let hidden = rng.random_range(3..=6usize);
            let teacher = MaskNet::<f64>::init(&[bins, hidden, bins], rng.random::<u64>()).unwrap();
            let student = MaskNet::<f64>::init(&[bins, hidden, bins], rng.random::<u64>()).unwrap();

            // Finite differences are invalid on a ReLU kink; skip draws
            // whose hidden pre-activations sit within the step size.
            let spec = dsp::stft(&sample.mixture, &stft).unwrap();
            let clear = (0..frames).all(|f| {
                let feats = crate::model::log1p_features(&spec.magnitude_frame(f));
                let (_, cache) = student.forward(&feats).unwrap();
                cache
                    .hidden_preactivations()
                    .iter()
                    .all(|z| z.abs() > 1e-4)
            });
            if clear {
                sample_ok = Some((sample, teacher, student));
                break;
            }
        }
        let (sample, teacher, student) =
            sample_ok.expect("no kink-free configuration in 50 draws");

        let cfg = TrainConfig {
            weights: LossWeights {
                alpha: rng.random_range(0.2..0.8),
                beta: rng.random_range(0.2..0.8),
                kd_variant: KdVariant::Dfkd,
                ..Default::default()
            },
            se_loss: SeLoss::NegSiSnr,
            hidden: student.hidden_dim(),
            stft,
            ..Default::default()
        };

        let (grads, _) = clip_step(&student, Some(&teacher), &sample, &cfg).unwrap();
        let analytic: Vec<f64> = grads
            .iter()
            .copied()
            .collect();
        let x0 = get_params(&student);
        let f = |x: &[f64]| {
            let net = set_params(&student, x);
            clip_step(&net, Some(&teacher), &sample, &cfg).unwrap().1.l_total
        };
        let fd = central_diff(&f, &x0, FD_STEP);
        worst = worst.max(max_rel_err(&analytic, &fd));
    }
    GradCheckEntry {
        name: "end_to_end".to_string(),
        cases,
        max_rel_err: worst,
        tolerance: TOLERANCE,
        pass: worst < TOLERANCE,
    }
}

/// Runs the whole verification suite.
///
/// `corrupt` deliberately perturbs one analytic gradient so callers can
/// confirm failures propagate; it must make the suite fail.
pub fn run_suite(seed: u64, cases: usize, corrupt: bool) -> GradCheckReport {
    let weights = LossWeights::default();
    let entries = vec![
        check_band_op(
            "cosine_alignment",
            seed,
            cases,
            |t, s| loss::cosine_loss(t, s, CosineForm::Alignment),
            false,
        ),
        check_band_op(
            "cosine_paper_literal",
            seed,
            cases,
            |t, s| loss::cosine_loss(t, s, CosineForm::PaperLiteral),
            false,
        ),
        check_band_op("l1", seed, cases, |t, s| loss::l1_loss(t, s), false),
        check_band_op("l2", seed, cases, |t, s| loss::l2_loss(t, s), corrupt),
        check_spec_op("kl", seed, cases, |t, s| loss::kl_loss(t, s, 1.0)),
        check_spec_op("low_freq", seed, cases, move |t, s| {
            let ms = fixed_ms(t);
            loss::low_freq_loss(t, s, &ms, CosineForm::Alignment)
        }),
        check_spec_op("high_freq", seed, cases, move |t, s| {
            let ms = fixed_ms(t);
            loss::high_freq_loss(t, s, &ms, 0.35, CosineForm::Alignment)
        }),
        check_spec_op("kd_dfkd", seed, cases, move |t, s| {
            Ok(loss::kd_loss(t, s, &weights, 1e-8)?.term)
        }),
        // Same banded code path as the fixed-subband variant; the constant
        // crossover scales with the reduced bin count used here.
        check_spec_op("kd_fixed_subband", seed, cases, move |t, s| {
            let ms = vec![t.bins() / 2; t.frames()];
            Ok(loss::kd_loss_with_crossovers(t, s, &ms, &weights)?.term)
        }),
        check_si_snr(seed, cases),
        check_total(seed, cases),
        check_end_to_end(seed, 20),
    ];
    GradCheckReport { entries, seed }
}

/// Deterministic per-frame crossovers for the band-loss checks: spread
/// across the valid range.
fn fixed_ms(spec: &Spectrogram<f64>) -> Vec<usize> {
    let bins = spec.bins();
    (0..spec.frames()).map(|f| (7 * (f + 1)) % (bins - 1)).collect()
}
