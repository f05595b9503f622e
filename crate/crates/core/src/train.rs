//! Teacher pretraining and student distillation loops.
//!
//! Data flow per clip: STFT of the mixture, per-frame `log1p` magnitude
//! features, teacher mask (frozen) and student mask, masked spectra `T_o`
//! and `S_o`, distillation loss between them, task loss between `S_o` and
//! the clean reference (negative SI-SNR through the iSTFT and its adjoint,
//! or spectral MSE), then the blended gradient is pushed through the mask
//! multiplication into the student parameters.
//!
//! Everything the frozen teacher contributes (masks, crossovers) is
//! precomputed once per clip, so distillation epochs only pay for the
//! student. Batch gradients fan out across clips in parallel but are
//! accumulated in clip-index order, making results independent of
//! scheduling.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adapter;
use crate::data::{hash64, MixtureSample};
use crate::dsp::{self, Spectrogram, StftConfig, Waveform};
use crate::error::{Error, Result};
use crate::loss::{self, KdVariant, LossTerm, LossWeights};
use crate::metrics;
use crate::model::{self, GradientBuffer, MaskNet};
use crate::scalar::{lit, Scalar};

/// Task-loss choice for the student/teacher objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeLoss {
    /// Negative SI-SNR of the resynthesized waveform against the clean clip.
    NegSiSnr,
    /// Mean squared error against the clean spectrogram.
    SpectralMse,
}

impl SeLoss {
    pub fn as_str(&self) -> &'static str {
        match self {
            SeLoss::NegSiSnr => "neg_sisnr",
            SeLoss::SpectralMse => "spectral_mse",
        }
    }
}

impl std::str::FromStr for SeLoss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neg_sisnr" => Ok(SeLoss::NegSiSnr),
            "spectral_mse" => Ok(SeLoss::SpectralMse),
            other => Err(Error::InvalidConfig(format!("unknown se loss '{other}'"))),
        }
    }
}

/// Parameter update rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam { .. } => "adam",
        }
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::adam()),
            other => Err(Error::InvalidConfig(format!("unknown optimizer '{other}'"))),
        }
    }
}

/// Optimizer with its per-parameter state.
#[derive(Debug, Clone)]
pub struct Optimizer<T> {
    kind: OptimizerKind,
    m: Option<GradientBuffer<T>>,
    v: Option<GradientBuffer<T>>,
    t: u64,
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(kind: OptimizerKind) -> Self {
        Self { kind, m: None, v: None, t: 0 }
    }

    /// One deterministic update; errors on non-finite gradients.
    pub fn step(&mut self, net: &mut MaskNet<T>, grads: &GradientBuffer<T>, lr: T) -> Result<()> {
        if !grads.is_finite() {
            return Err(Error::NanInput("non-finite gradient in optimizer step".into()));
        }
        match self.kind {
            OptimizerKind::Sgd => net.apply_update(grads, lr),
            OptimizerKind::Adam { beta1, beta2, eps } => {
                let b1 = lit::<T>(beta1);
                let b2 = lit::<T>(beta2);
                let e = lit::<T>(eps);
                let one = T::one();
                if self.m.is_none() {
                    self.m = Some(GradientBuffer::zeros_like(net));
                    self.v = Some(GradientBuffer::zeros_like(net));
                }
                self.t += 1;
                let bc1 = one - lit::<T>(beta1.powi(self.t as i32));
                let bc2 = one - lit::<T>(beta2.powi(self.t as i32));
                let m = self.m.as_mut().unwrap();
                let v = self.v.as_mut().unwrap();
                for (((p, &g), mi), vi) in net
                    .params_mut()
                    .zip(grads.iter())
                    .zip(m.iter_mut())
                    .zip(v.iter_mut())
                {
                    *mi = b1 * *mi + (one - b1) * g;
                    *vi = b2 * *vi + (one - b2) * g * g;
                    let m_hat = *mi / bc1;
                    let v_hat = *vi / bc2;
                    *p = *p - lr * m_hat / (v_hat.sqrt() + e);
                }
            }
        }
        Ok(())
    }
}

/// Full training configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub weights: LossWeights,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub eps_adapter: f64,
    pub se_loss: SeLoss,
    /// Hidden width of the net being trained.
    pub hidden: usize,
    /// Fraction of the corpus held out for best-checkpoint selection.
    pub val_fraction: f64,
    /// Ablation hook: overrides the per-frame crossover of the banded
    /// variants with a constant bin.
    pub force_crossover: Option<usize>,
    pub stft: StftConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            weights: LossWeights::default(),
            lr: 1e-3,
            epochs: 30,
            batch_size: 8,
            optimizer: OptimizerKind::adam(),
            seed: 0,
            eps_adapter: adapter::DEFAULT_EPS,
            se_loss: SeLoss::NegSiSnr,
            hidden: model::TEACHER_HIDDEN,
            val_fraction: 0.1,
            force_crossover: None,
            stft: StftConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if self.lr <= 0.0 {
            return Err(Error::InvalidConfig("lr must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if self.eps_adapter <= 0.0 {
            return Err(Error::InvalidConfig("eps_adapter must be positive".into()));
        }
        if !(0.0..=0.5).contains(&self.val_fraction) {
            return Err(Error::InvalidConfig("val_fraction must be in [0, 0.5]".into()));
        }
        if self.hidden == 0 {
            return Err(Error::InvalidConfig("hidden width must be positive".into()));
        }
        self.stft.validate()?;
        Ok(())
    }

    /// Normalizes the config: the `none` variant means scratch training, so
    /// it pins `alpha = 0` and the total objective reduces to the task loss.
    pub fn resolved(&self) -> Self {
        let mut cfg = self.clone();
        if cfg.weights.kd_variant == KdVariant::None {
            cfg.weights.alpha = 0.0;
        }
        cfg
    }

    /// Flat key/value echo sufficient to reproduce the run.
    pub fn echo_map(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("alpha".into(), self.weights.alpha.to_string());
        m.insert("beta".into(), self.weights.beta.to_string());
        m.insert("kd_variant".into(), self.weights.kd_variant.as_str().into());
        m.insert("cosine_form".into(), match self.weights.cosine_form {
            loss::CosineForm::Alignment => "alignment".into(),
            loss::CosineForm::PaperLiteral => "paper_literal".into(),
        });
        m.insert("kl_temperature".into(), self.weights.kl_temperature.to_string());
        m.insert("lr".into(), self.lr.to_string());
        m.insert("epochs".into(), self.epochs.to_string());
        m.insert("batch_size".into(), self.batch_size.to_string());
        m.insert("optimizer".into(), self.optimizer.as_str().into());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("eps_adapter".into(), format!("{:e}", self.eps_adapter));
        m.insert("se_loss".into(), self.se_loss.as_str().into());
        m.insert("hidden".into(), self.hidden.to_string());
        m.insert("val_fraction".into(), self.val_fraction.to_string());
        if let Some(mc) = self.force_crossover {
            m.insert("force_crossover".into(), mc.to_string());
        }
        m.insert("n_fft".into(), self.stft.n_fft.to_string());
        m.insert("hop".into(), self.stft.hop.to_string());
        m
    }
}

/// One optimizer step of the training log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRow {
    pub step: usize,
    pub epoch: usize,
    pub l_se: f64,
    pub l_low: f64,
    pub l_high: f64,
    pub l_kd: f64,
    pub l_total: f64,
    pub grad_norm: f64,
}

/// Per-epoch aggregates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub mean_l_total: f64,
    pub mean_l_se: f64,
    pub mean_l_kd: f64,
    pub val_si_snri: Option<f64>,
}

/// Training record: step log, epoch summaries, config echo.
///
/// Wall time is informational and excluded from serialization so written
/// artifacts stay byte-reproducible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub steps: Vec<StepRow>,
    pub epochs: Vec<EpochRow>,
    pub config_echo: BTreeMap<String, String>,
    pub version: String,
    pub best_epoch: usize,
    pub best_val_si_snri: Option<f64>,
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl TrainReport {
    /// Step log as CSV, one row per optimizer step.
    pub fn steps_csv(&self) -> String {
        let mut out = String::from("step,epoch,l_se,l_low,l_high,l_kd,l_total,grad_norm\n");
        for r in &self.steps {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.step, r.epoch, r.l_se, r.l_low, r.l_high, r.l_kd, r.l_total, r.grad_norm
            ));
        }
        out
    }
}

/// Everything the loops need per clip, with frozen-teacher quantities
/// precomputed.
struct ClipCache<'a, T> {
    mixture_spec: Spectrogram<T>,
    feats: Vec<Vec<T>>,
    clean: &'a Waveform<T>,
    clean_spec: Option<Spectrogram<T>>,
    teacher_out: Option<Spectrogram<T>>,
    crossovers: Option<Vec<usize>>,
}

fn build_cache<'a, T: Scalar>(
    sample: &'a MixtureSample<T>,
    teacher: Option<&MaskNet<T>>,
    cfg: &TrainConfig,
) -> Result<ClipCache<'a, T>> {
    let spec = dsp::stft(&sample.mixture, &cfg.stft)?;
    let frames = spec.frames();
    let feats: Vec<Vec<T>> = (0..frames)
        .map(|f| model::log1p_features(&spec.magnitude_frame(f)))
        .collect();

    let teacher_out = match teacher {
        Some(net) => {
            let mut out = Spectrogram::zeros(frames, *spec.config(), spec.sample_rate());
            for f in 0..frames {
                let (mask, _) = net.forward(&feats[f])?;
                out.frame_mut(f).copy_from_slice(&model::apply_mask(&mask, spec.frame(f)));
            }
            Some(out)
        }
        None => None,
    };

    let crossovers = match (&teacher_out, cfg.weights.kd_variant) {
        (Some(t_out), KdVariant::Dfkd | KdVariant::FixedSubband) => {
            let ms = if let Some(m) = cfg.force_crossover {
                adapter::BandSplit::new(m, spec.bins())?;
                vec![m; frames]
            } else if cfg.weights.kd_variant == KdVariant::Dfkd {
                adapter::adapt(t_out, lit(cfg.eps_adapter))?
            } else {
                vec![adapter::FIXED_SUBBAND_BIN; frames]
            };
            Some(ms)
        }
        _ => None,
    };

    let clean_spec = match cfg.se_loss {
        SeLoss::SpectralMse => Some(dsp::stft(&sample.clean, &cfg.stft)?),
        SeLoss::NegSiSnr => None,
    };

    Ok(ClipCache { mixture_spec: spec, feats, clean: &sample.clean, clean_spec, teacher_out, crossovers })
}

/// Loss components of one clip (or one batch, averaged).
#[derive(Debug, Clone, Copy, Default)]
pub struct ClipLosses {
    pub l_se: f64,
    pub l_low: f64,
    pub l_high: f64,
    pub l_kd: f64,
    pub l_total: f64,
}

fn clip_gradient<T: Scalar>(
    student: &MaskNet<T>,
    cache: &ClipCache<'_, T>,
    cfg: &TrainConfig,
) -> Result<(GradientBuffer<T>, ClipLosses)> {
    let spec = &cache.mixture_spec;
    let frames = spec.frames();
    let bins = spec.bins();

    let mut fwd_caches = Vec::with_capacity(frames);
    let mut student_out = Spectrogram::zeros(frames, *spec.config(), spec.sample_rate());
    for f in 0..frames {
        let (mask, fc) = student.forward(&cache.feats[f])?;
        student_out.frame_mut(f).copy_from_slice(&model::apply_mask(&mask, spec.frame(f)));
        fwd_caches.push(fc);
    }

    let (kd_term, l_low, l_high) = match (&cache.teacher_out, cache.crossovers.as_ref()) {
        (Some(t_out), Some(ms)) => {
            let kd = loss::kd_loss_with_crossovers(t_out, &student_out, ms, &cfg.weights)?;
            (kd.term, kd.low_value, kd.high_value)
        }
        (Some(t_out), None) => {
            let kd = loss::kd_loss(t_out, &student_out, &cfg.weights, lit(cfg.eps_adapter))?;
            (kd.term, kd.low_value, kd.high_value)
        }
        (None, _) => (
            LossTerm {
                value: T::zero(),
                grad: vec![Complex::new(T::zero(), T::zero()); frames * bins],
                guarded: false,
            },
            T::zero(),
            T::zero(),
        ),
    };

    let se_term: LossTerm<T, Vec<Complex<T>>> = match cfg.se_loss {
        SeLoss::NegSiSnr => {
            let est = dsp::istft(&student_out)?;
            let n = est.len().min(cache.clean.len());
            let lt = loss::si_snr(&est.samples[..n], &cache.clean.samples[..n])?;
            let grad_wave = Waveform::new(lt.grad, est.sample_rate);
            let grad_spec = dsp::istft_adjoint(&grad_wave, &cfg.stft)?;
            LossTerm { value: lt.value, grad: grad_spec.into_data(), guarded: lt.guarded }
        }
        SeLoss::SpectralMse => {
            let clean_spec = cache
                .clean_spec
                .as_ref()
                .expect("clean spectrogram cached for spectral_mse");
            loss::l2_loss(clean_spec.data(), student_out.data())?
        }
    };

    let total = loss::total_loss(&kd_term, &se_term, lit(cfg.weights.alpha))?;

    // Push dL/dS_o through the mask multiplication into the parameters:
    // S_o[k] = mask[k] * X[k], so dL/dmask[k] = Re(g)*Re(X) + Im(g)*Im(X).
    let mut grads = GradientBuffer::zeros_like(student);
    let mut mask_grad = vec![T::zero(); bins];
    for f in 0..frames {
        let base = f * bins;
        let xf = spec.frame(f);
        for k in 0..bins {
            let g = total.grad[base + k];
            mask_grad[k] = g.re * xf[k].re + g.im * xf[k].im;
        }
        let (g, _) = student.backward(&fwd_caches[f], &mask_grad)?;
        grads.accumulate(&g);
    }

    Ok((
        grads,
        ClipLosses {
            l_se: se_term.value.to_f64().unwrap(),
            l_low: l_low.to_f64().unwrap(),
            l_high: l_high.to_f64().unwrap(),
            l_kd: kd_term.value.to_f64().unwrap(),
            l_total: total.value.to_f64().unwrap(),
        },
    ))
}

/// Blended loss and parameter gradient for one clip, exactly as the
/// training loops compute it. This is the unit the finite-difference suite
/// verifies end to end.
pub fn clip_step<T: Scalar>(
    student: &MaskNet<T>,
    teacher: Option<&MaskNet<T>>,
    sample: &MixtureSample<T>,
    cfg: &TrainConfig,
) -> Result<(GradientBuffer<T>, ClipLosses)> {
    let cfg = cfg.resolved();
    cfg.validate()?;
    let cache = build_cache(sample, teacher, &cfg)?;
    clip_gradient(student, &cache, &cfg)
}

fn validation_si_snri<T: Scalar>(
    net: &MaskNet<T>,
    val: &[MixtureSample<T>],
    cfg: &TrainConfig,
) -> Result<Option<f64>> {
    if val.is_empty() {
        return Ok(None);
    }
    let scores: Result<Vec<f64>> = val
        .par_iter()
        .map(|sample| {
            let (enhanced, _) = model::enhance(net, &sample.mixture, &cfg.stft)?;
            let n = enhanced.len();
            let mix = Waveform::new(sample.mixture.samples[..n].to_vec(), enhanced.sample_rate);
            let clean = Waveform::new(sample.clean.samples[..n].to_vec(), enhanced.sample_rate);
            Ok(metrics::si_snr_improvement(&enhanced, &mix, &clean)?.to_f64().unwrap())
        })
        .collect();
    Ok(Some(scores?.iter().sum::<f64>() / val.len() as f64))
}

fn run_training<T: Scalar>(
    teacher: Option<&MaskNet<T>>,
    corpus: &[MixtureSample<T>],
    cfg: &TrainConfig,
) -> Result<(MaskNet<T>, TrainReport)> {
    let cfg = cfg.resolved();
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::InvalidConfig("training corpus is empty".into()));
    }
    let bins = cfg.stft.bins();
    if let Some(t) = teacher {
        if t.input_dim() != bins {
            return Err(Error::ShapeMismatch(format!(
                "teacher input dim {} != {} bins",
                t.input_dim(),
                bins
            )));
        }
    }
    let started = Instant::now();

    let n_val = ((corpus.len() as f64 * cfg.val_fraction).floor() as usize).min(corpus.len() - 1);
    let (train_clips, val_clips) = corpus.split_at(corpus.len() - n_val);

    let caches: Result<Vec<ClipCache<'_, T>>> = train_clips
        .par_iter()
        .map(|sample| build_cache(sample, teacher, &cfg))
        .collect();
    let caches = caches?;

    let mut net = MaskNet::<T>::init(&[bins, cfg.hidden, bins], cfg.seed)?;
    let mut optimizer = Optimizer::new(cfg.optimizer);
    let mut shuffle_rng = ChaCha12Rng::seed_from_u64(hash64(cfg.seed, "shuffle", 0));
    let lr = lit::<T>(cfg.lr);

    let mut steps: Vec<StepRow> = Vec::new();
    let mut epochs: Vec<EpochRow> = Vec::new();
    let mut best: Option<(f64, usize, MaskNet<T>)> = None;
    let mut step = 0usize;

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..caches.len()).collect();
        order.shuffle(&mut shuffle_rng);

        let epoch_first_step = steps.len();
        for batch in order.chunks(cfg.batch_size) {
            let results: Result<Vec<(GradientBuffer<T>, ClipLosses)>> = batch
                .par_iter()
                .map(|&ci| clip_gradient(&net, &caches[ci], &cfg))
                .collect();
            let results = results?;

            let inv = 1.0 / batch.len() as f64;
            let mut grads = GradientBuffer::zeros_like(&net);
            let mut losses = ClipLosses::default();
            for (g, l) in &results {
                grads.accumulate(g);
                losses.l_se += l.l_se * inv;
                losses.l_low += l.l_low * inv;
                losses.l_high += l.l_high * inv;
                losses.l_kd += l.l_kd * inv;
                losses.l_total += l.l_total * inv;
            }
            grads.scale(lit(inv));

            if !losses.l_total.is_finite() {
                return Err(Error::Diverged { step, what: format!("loss {}", losses.l_total) });
            }
            optimizer.step(&mut net, &grads, lr).map_err(|e| Error::Diverged {
                step,
                what: e.to_string(),
            })?;

            steps.push(StepRow {
                step,
                epoch,
                l_se: losses.l_se,
                l_low: losses.l_low,
                l_high: losses.l_high,
                l_kd: losses.l_kd,
                l_total: losses.l_total,
                grad_norm: grads.l2_norm().to_f64().unwrap(),
            });
            step += 1;
        }

        let epoch_steps = &steps[epoch_first_step..];
        let inv = 1.0 / epoch_steps.len().max(1) as f64;
        let val_si_snri = validation_si_snri(&net, val_clips, &cfg)?;
        epochs.push(EpochRow {
            epoch,
            mean_l_total: epoch_steps.iter().map(|r| r.l_total).sum::<f64>() * inv,
            mean_l_se: epoch_steps.iter().map(|r| r.l_se).sum::<f64>() * inv,
            mean_l_kd: epoch_steps.iter().map(|r| r.l_kd).sum::<f64>() * inv,
            val_si_snri,
        });

        if let Some(v) = val_si_snri {
            let replace = match &best {
                Some((bv, _, _)) => v > *bv,
                None => true,
            };
            if replace {
                best = Some((v, epoch, net.clone()));
            }
        }
    }

    let (best_epoch, best_val_si_snri, final_net) = match best {
        Some((v, e, n)) => (e, Some(v), n),
        None => (cfg.epochs - 1, None, net),
    };

    let report = TrainReport {
        steps,
        epochs,
        config_echo: cfg.echo_map(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        best_epoch,
        best_val_si_snri,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    Ok((final_net, report))
}

/// Trains a mask net on the task loss alone (no distillation) and returns
/// the best-on-validation checkpoint.
pub fn train_teacher<T: Scalar>(
    corpus: &[MixtureSample<T>],
    cfg: &TrainConfig,
) -> Result<(MaskNet<T>, TrainReport)> {
    let mut cfg = cfg.clone();
    cfg.weights.kd_variant = KdVariant::None;
    run_training(None, corpus, &cfg)
}

/// Distills a student against a frozen teacher; teacher gradients are never
/// computed.
pub fn distill<T: Scalar>(
    teacher: &MaskNet<T>,
    corpus: &[MixtureSample<T>],
    cfg: &TrainConfig,
) -> Result<(MaskNet<T>, TrainReport)> {
    run_training(Some(teacher), corpus, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_corpus, CorpusConfig, NoiseKind};
    use approx::assert_relative_eq;

    fn tiny_corpus(n_train: usize, seconds: f64) -> Vec<MixtureSample<f64>> {
        let cfg = CorpusConfig {
            n_train,
            n_test: 0,
            clip_seconds: seconds,
            noise_kinds: vec![NoiseKind::Hiss, NoiseKind::White],
            ..Default::default()
        };
        build_corpus::<f64>(&cfg).unwrap().train
    }

    fn tiny_cfg() -> TrainConfig {
        TrainConfig {
            epochs: 2,
            batch_size: 4,
            hidden: 8,
            stft: StftConfig { n_fft: 128, hop: 64 },
            ..Default::default()
        }
    }

    #[test]
    fn sgd_step_scalar_example() {
        // One SGD step on p = 1 with g = 2, lr = 0.1 lands on 0.8.
        let mut net = MaskNet::<f64>::init(&[257, 1, 257], 0).unwrap();
        *net.params_mut().next().unwrap() = 1.0;
        let mut grads = GradientBuffer::zeros_like(&net);
        grads.weights[0][0] = 2.0;
        let mut opt = Optimizer::new(OptimizerKind::Sgd);
        opt.step(&mut net, &grads, 0.1).unwrap();
        assert_relative_eq!(*net.params_mut().next().unwrap(), 0.8);
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        for kind in [OptimizerKind::Sgd, OptimizerKind::adam()] {
            let mut net = MaskNet::<f64>::init(&[257, 4, 257], 3).unwrap();
            let before = net.clone();
            let grads = GradientBuffer::zeros_like(&net);
            let mut opt = Optimizer::new(kind);
            opt.step(&mut net, &grads, 0.1).unwrap();
            assert_eq!(net, before);
        }
    }

    #[test]
    fn adam_first_step_magnitude_is_lr() {
        // Bias-corrected Adam at t=1 moves each parameter by about
        // lr * sign(g) regardless of gradient scale.
        for scale in [1e-4, 1.0, 1e3] {
            let mut net = MaskNet::<f64>::init(&[257, 1, 257], 1).unwrap();
            let before = net.clone();
            let mut grads = GradientBuffer::zeros_like(&net);
            for g in grads.iter_mut() {
                *g = scale;
            }
            let mut opt = Optimizer::new(OptimizerKind::adam());
            opt.step(&mut net, &grads, 0.01).unwrap();
            let mut b = before;
            for (p, q) in net.params_mut().zip(b.params_mut()) {
                assert_relative_eq!((*p - *q).abs(), 0.01, max_relative = 2e-2);
            }
        }
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut net = MaskNet::<f64>::init(&[257, 1, 257], 1).unwrap();
        let mut grads = GradientBuffer::zeros_like(&net);
        grads.weights[0][0] = f64::NAN;
        let mut opt = Optimizer::new(OptimizerKind::Sgd);
        assert!(opt.step(&mut net, &grads, 0.1).is_err());
    }

    #[test]
    fn teacher_training_is_seed_deterministic() {
        let corpus = tiny_corpus(6, 0.25);
        let cfg = tiny_cfg();
        let (a, ra) = train_teacher(&corpus, &cfg).unwrap();
        let (b, rb) = train_teacher(&corpus, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra.steps.len(), rb.steps.len());
        for (x, y) in ra.steps.iter().zip(&rb.steps) {
            assert_eq!(x.l_total, y.l_total);
            assert_eq!(x.grad_norm, y.grad_norm);
        }
    }

    #[test]
    fn loss_composition_identity_holds_per_step() {
        let corpus = tiny_corpus(6, 0.25);
        let teacher_cfg = tiny_cfg();
        let (teacher, _) = train_teacher(&corpus, &teacher_cfg).unwrap();
        let cfg = TrainConfig { hidden: 4, ..tiny_cfg() };
        let (_, report) = distill(&teacher, &corpus, &cfg).unwrap();
        let alpha: f64 = report.config_echo["alpha"].parse().unwrap();
        for row in &report.steps {
            let recomposed = alpha * row.l_kd + (1.0 - alpha) * row.l_se;
            assert!((row.l_total - recomposed).abs() < 1e-12, "step {}", row.step);
        }
    }

    #[test]
    fn alpha_zero_distill_matches_scratch_training() {
        let corpus = tiny_corpus(6, 0.25);
        let (teacher, _) = train_teacher(&corpus, &tiny_cfg()).unwrap();
        let student_cfg = TrainConfig {
            hidden: 4,
            weights: LossWeights { alpha: 0.0, ..Default::default() },
            ..tiny_cfg()
        };
        let (scratch, scratch_report) = train_teacher(&corpus, &student_cfg).unwrap();
        let (distilled, distill_report) = distill(&teacher, &corpus, &student_cfg).unwrap();
        assert_eq!(scratch, distilled);
        for (a, b) in scratch_report.steps.iter().zip(&distill_report.steps) {
            assert_eq!(a.l_se, b.l_se);
            assert_eq!(a.l_total, b.l_total);
        }
    }

    #[test]
    fn forced_crossover_matches_fixed_subband() {
        let corpus = tiny_corpus(6, 0.25);
        let stft = StftConfig::default();
        let base = TrainConfig { stft, hidden: 4, epochs: 1, batch_size: 3, ..Default::default() };
        let (teacher, _) = train_teacher(&corpus, &TrainConfig { hidden: 8, ..base.clone() }).unwrap();

        let forced = TrainConfig {
            force_crossover: Some(adapter::FIXED_SUBBAND_BIN),
            ..base.clone()
        };
        let fixed = TrainConfig {
            weights: LossWeights { kd_variant: KdVariant::FixedSubband, ..Default::default() },
            ..base
        };
        let (a, ra) = distill(&teacher, &corpus, &forced).unwrap();
        let (b, rb) = distill(&teacher, &corpus, &fixed).unwrap();
        assert_eq!(a, b);
        for (x, y) in ra.steps.iter().zip(&rb.steps) {
            assert_eq!(x.l_total, y.l_total);
            assert_eq!(x.l_kd, y.l_kd);
        }
    }

    #[test]
    fn teacher_as_student_has_zero_kd_at_step_zero() {
        let corpus = tiny_corpus(4, 0.25);
        let cfg = TrainConfig { hidden: 8, epochs: 1, batch_size: 100, ..tiny_cfg() };
        let (teacher, _) = train_teacher(&corpus, &cfg).unwrap();
        // With the teacher standing in as its own student, S_o == T_o and
        // the banded loss vanishes up to the cosine norm guard, which
        // scales like 1e-12 / (band energy) on quiet frames.
        let resolved = cfg.resolved();
        let sample = &corpus[0];
        let cache = build_cache(sample, Some(&teacher), &resolved).unwrap();
        let (_, losses) = clip_gradient(&teacher, &cache, &resolved).unwrap();
        assert!(losses.l_kd.abs() < 1e-6, "l_kd {}", losses.l_kd);
    }

    #[test]
    fn all_variants_train_and_log() {
        // Full-width spectrograms so the fixed 4 kHz crossover is in range.
        let corpus = tiny_corpus(5, 0.25);
        let base = TrainConfig { epochs: 1, batch_size: 4, hidden: 8, ..Default::default() };
        let (teacher, _) = train_teacher(&corpus, &base).unwrap();
        for variant in KdVariant::ALL {
            let cfg = TrainConfig {
                hidden: 4,
                weights: LossWeights { kd_variant: variant, ..Default::default() },
                ..base.clone()
            };
            let (_, report) = distill(&teacher, &corpus, &cfg).unwrap();
            assert!(!report.steps.is_empty(), "{variant:?}");
            assert_eq!(report.config_echo["kd_variant"], variant.as_str());
        }
    }

    #[test]
    fn spectral_mse_se_loss_trains() {
        let corpus = tiny_corpus(4, 0.25);
        let cfg = TrainConfig { se_loss: SeLoss::SpectralMse, ..tiny_cfg() };
        let (_, report) = train_teacher(&corpus, &cfg).unwrap();
        assert!(report.steps.iter().all(|r| r.l_total.is_finite()));
    }

    #[test]
    fn steps_csv_has_expected_header_and_rows() {
        let corpus = tiny_corpus(4, 0.25);
        let (_, report) = train_teacher(&corpus, &tiny_cfg()).unwrap();
        let csv = report.steps_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "step,epoch,l_se,l_low,l_high,l_kd,l_total,grad_norm"
        );
        assert_eq!(csv.lines().count(), report.steps.len() + 1);
    }
}
