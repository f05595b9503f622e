//! Mask-estimation networks: one hidden layer, ReLU inside, sigmoid out.
//!
//! The net maps a frame of `log(1 + magnitude)` features to a per-bin gain
//! in `(0, 1)` that multiplies the noisy complex frame (phase preserved).
//! Teacher and students differ only in hidden width. Forward passes return
//! a cache so [`backward`] can produce exact reverse-mode gradients without
//! any autodiff machinery.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::dsp::{self, Spectrogram, StftConfig, Waveform};
use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Hidden widths used by the experiment matrix.
pub const TEACHER_HIDDEN: usize = 512;
pub const STUDENT_SMALL_HIDDEN: usize = 128;
pub const STUDENT_TINY_HIDDEN: usize = 16;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// Fully-connected mask estimator `[bins, hidden, bins]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskNet<T = f64> {
    layer_dims: Vec<usize>,
    /// Row-major `[out][in]` weight matrices, one per layer.
    weights: Vec<Vec<T>>,
    biases: Vec<Vec<T>>,
    seed: u64,
}

/// Intermediate activations of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    input: Vec<T>,
    z_hidden: Vec<T>,
    h_hidden: Vec<T>,
    mask: Vec<T>,
}

impl<T: Scalar> ForwardCache<T> {
    /// Hidden-layer pre-activations; the finite-difference suite uses them
    /// to skip inputs that sit on the ReLU kink.
    pub fn hidden_preactivations(&self) -> &[T] {
        &self.z_hidden
    }
}

/// Parameter-shaped gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBuffer<T> {
    pub weights: Vec<Vec<T>>,
    pub biases: Vec<Vec<T>>,
}

impl<T: Scalar> GradientBuffer<T> {
    pub fn zeros_like(net: &MaskNet<T>) -> Self {
        Self {
            weights: net.weights.iter().map(|w| vec![T::zero(); w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![T::zero(); b.len()]).collect(),
        }
    }

    pub fn accumulate(&mut self, other: &Self) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y;
            }
        }
    }

    pub fn scale(&mut self, s: T) {
        for w in &mut self.weights {
            for x in w.iter_mut() {
                *x *= s;
            }
        }
        for b in &mut self.biases {
            for x in b.iter_mut() {
                *x *= s;
            }
        }
    }

    pub fn l2_norm(&self) -> T {
        let mut acc = T::zero();
        for w in &self.weights {
            for &x in w {
                acc += x * x;
            }
        }
        for b in &self.biases {
            for &x in b {
                acc += x * x;
            }
        }
        acc.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().flatten().all(|x| x.is_finite())
            && self.biases.iter().flatten().all(|x| x.is_finite())
    }

    /// Flat view in the same order as [`MaskNet::params_mut`].
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.weights
            .iter()
            .flat_map(|w| w.iter())
            .chain(self.biases.iter().flat_map(|b| b.iter()))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.weights
            .iter_mut()
            .flat_map(|w| w.iter_mut())
            .chain(self.biases.iter_mut().flat_map(|b| b.iter_mut()))
    }
}

fn validate_dims(layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() != 3 {
        return Err(Error::InvalidConfig(format!(
            "mask nets have exactly one hidden layer, got dims {layer_dims:?}"
        )));
    }
    if layer_dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidConfig("layer dims must be positive".into()));
    }
    if layer_dims[0] != layer_dims[2] {
        return Err(Error::InvalidConfig(format!(
            "input and output dims must match the bin count, got {layer_dims:?}"
        )));
    }
    Ok(())
}

/// Total parameter count for the given dims.
pub fn param_count(layer_dims: &[usize]) -> usize {
    layer_dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

/// Multiply-add FLOPs of one forward pass (2 per weight).
pub fn forward_flops(layer_dims: &[usize]) -> usize {
    layer_dims.windows(2).map(|w| 2 * w[0] * w[1]).sum()
}

impl<T: Scalar> MaskNet<T> {
    /// Deterministic initialization: He-uniform for the hidden layer,
    /// Xavier-uniform for the output layer, zero biases. Draws are made in
    /// f64 so `seed` defines the same network for every scalar type.
    pub fn init(layer_dims: &[usize], seed: u64) -> Result<Self> {
        validate_dims(layer_dims)?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for (layer, w) in layer_dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = if layer == 0 {
                (6.0 / fan_in as f64).sqrt()
            } else {
                (6.0 / (fan_in + fan_out) as f64).sqrt()
            };
            let mut mat = Vec::with_capacity(fan_in * fan_out);
            for _ in 0..fan_in * fan_out {
                mat.push(lit::<T>(rng.random_range(-limit..limit)));
            }
            weights.push(mat);
            biases.push(vec![T::zero(); fan_out]);
        }
        Ok(Self { layer_dims: layer_dims.to_vec(), weights, biases, seed })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn hidden_dim(&self) -> usize {
        self.layer_dims[1]
    }

    pub fn param_count(&self) -> usize {
        param_count(&self.layer_dims)
    }

    pub fn forward_flops(&self) -> usize {
        forward_flops(&self.layer_dims)
    }

    /// Forward pass over one feature frame; returns the mask and the cache
    /// needed by [`backward`].
    pub fn forward(&self, input: &[T]) -> Result<(Vec<T>, ForwardCache<T>)> {
        if input.len() != self.layer_dims[0] {
            return Err(Error::ShapeMismatch(format!(
                "input length {} != {}",
                input.len(),
                self.layer_dims[0]
            )));
        }
        if input.iter().any(|x| x.is_nan()) {
            return Err(Error::NanInput("mask net input contains NaN".into()));
        }
        let (d_in, d_hid, d_out) = (self.layer_dims[0], self.layer_dims[1], self.layer_dims[2]);
        let mut z_hidden = vec![T::zero(); d_hid];
        for j in 0..d_hid {
            let row = &self.weights[0][j * d_in..(j + 1) * d_in];
            let mut acc = self.biases[0][j];
            for (w, x) in row.iter().zip(input) {
                acc += *w * *x;
            }
            z_hidden[j] = acc;
        }
        let h_hidden: Vec<T> = z_hidden.iter().map(|&z| z.max(T::zero())).collect();
        let mut mask = vec![T::zero(); d_out];
        for o in 0..d_out {
            let row = &self.weights[1][o * d_hid..(o + 1) * d_hid];
            let mut acc = self.biases[1][o];
            for (w, h) in row.iter().zip(&h_hidden) {
                acc += *w * *h;
            }
            mask[o] = T::one() / (T::one() + (-acc).exp());
        }
        let cache = ForwardCache {
            input: input.to_vec(),
            z_hidden,
            h_hidden,
            mask: mask.clone(),
        };
        Ok((mask, cache))
    }

    /// Exact reverse-mode gradients through sigmoid, dense, ReLU, dense.
    ///
    /// `upstream` is `dL/d(mask)`. Returns parameter gradients and
    /// `dL/d(input)`. ReLU uses derivative 0 at exactly zero.
    pub fn backward(
        &self,
        cache: &ForwardCache<T>,
        upstream: &[T],
    ) -> Result<(GradientBuffer<T>, Vec<T>)> {
        let (d_in, d_hid, d_out) = (self.layer_dims[0], self.layer_dims[1], self.layer_dims[2]);
        if upstream.len() != d_out {
            return Err(Error::ShapeMismatch(format!(
                "upstream length {} != {}",
                upstream.len(),
                d_out
            )));
        }
        let mut grads = GradientBuffer::zeros_like(self);

        // Output layer: dz2 = upstream * sigmoid'(z2) = upstream * m(1-m).
        let mut dz2 = vec![T::zero(); d_out];
        for o in 0..d_out {
            let m = cache.mask[o];
            dz2[o] = upstream[o] * m * (T::one() - m);
        }
        let mut dh = vec![T::zero(); d_hid];
        for o in 0..d_out {
            let row = &self.weights[1][o * d_hid..(o + 1) * d_hid];
            let grow = &mut grads.weights[1][o * d_hid..(o + 1) * d_hid];
            let d = dz2[o];
            for j in 0..d_hid {
                grow[j] = d * cache.h_hidden[j];
                dh[j] += d * row[j];
            }
            grads.biases[1][o] = d;
        }

        // Hidden layer through ReLU.
        let mut input_grad = vec![T::zero(); d_in];
        for j in 0..d_hid {
            let dz = if cache.z_hidden[j] > T::zero() { dh[j] } else { T::zero() };
            let row = &self.weights[0][j * d_in..(j + 1) * d_in];
            let grow = &mut grads.weights[0][j * d_in..(j + 1) * d_in];
            for i in 0..d_in {
                grow[i] = dz * cache.input[i];
                input_grad[i] += dz * row[i];
            }
            grads.biases[0][j] = dz;
        }
        Ok((grads, input_grad))
    }

    /// Applies an SGD-style in-place update `p -= lr * g` (used by the
    /// optimizers; exposed for tests).
    pub fn apply_update(&mut self, direction: &GradientBuffer<T>, lr: T) {
        for (w, g) in self.weights.iter_mut().zip(&direction.weights) {
            for (x, d) in w.iter_mut().zip(g) {
                *x -= lr * *d;
            }
        }
        for (b, g) in self.biases.iter_mut().zip(&direction.biases) {
            for (x, d) in b.iter_mut().zip(g) {
                *x -= lr * *d;
            }
        }
    }

    /// Iterates over all parameters with matching gradient-buffer entries.
    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.weights
            .iter_mut()
            .flat_map(|w| w.iter_mut())
            .chain(self.biases.iter_mut().flat_map(|b| b.iter_mut()))
    }

    pub fn to_checkpoint(&self, training_meta: BTreeMap<String, String>) -> Checkpoint {
        let mut weights = Vec::new();
        for (layer, w) in self.layer_dims.windows(2).enumerate() {
            let (d_in, d_out) = (w[0], w[1]);
            let mat: Vec<Vec<f64>> = (0..d_out)
                .map(|o| {
                    self.weights[layer][o * d_in..(o + 1) * d_in]
                        .iter()
                        .map(|x| x.to_f64().unwrap())
                        .collect()
                })
                .collect();
            weights.push(mat);
        }
        Checkpoint {
            format_version: CHECKPOINT_FORMAT_VERSION,
            layer_dims: self.layer_dims.clone(),
            hidden_activation: "relu".to_string(),
            output_activation: "sigmoid".to_string(),
            weights,
            biases: self
                .biases
                .iter()
                .map(|b| b.iter().map(|x| x.to_f64().unwrap()).collect())
                .collect(),
            seed: self.seed,
            training_meta,
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        ckpt.validate()?;
        let mut weights = Vec::new();
        for (layer, w) in ckpt.layer_dims.windows(2).enumerate() {
            let (d_in, d_out) = (w[0], w[1]);
            let mut mat = Vec::with_capacity(d_in * d_out);
            for row in &ckpt.weights[layer] {
                if row.len() != d_in {
                    return Err(Error::Checkpoint(format!(
                        "weight row length {} != {}",
                        row.len(),
                        d_in
                    )));
                }
                mat.extend(row.iter().map(|&x| lit::<T>(x)));
            }
            if mat.len() != d_in * d_out {
                return Err(Error::Checkpoint("weight matrix shape mismatch".into()));
            }
            weights.push(mat);
        }
        Ok(Self {
            layer_dims: ckpt.layer_dims.clone(),
            weights,
            biases: ckpt.biases.iter().map(|b| b.iter().map(|&x| lit::<T>(x)).collect()).collect(),
            seed: ckpt.seed,
        })
    }
}

/// Input features for the mask net: `log(1 + magnitude)` per bin.
pub fn log1p_features<T: Scalar>(frame_mags: &[T]) -> Vec<T> {
    frame_mags.iter().map(|&m| (T::one() + m).ln()).collect()
}

/// Per-bin multiplicative masking; phase of the noisy frame is preserved.
pub fn apply_mask<T: Scalar>(mask: &[T], noisy_frame: &[Complex<T>]) -> Vec<Complex<T>> {
    mask.iter()
        .zip(noisy_frame)
        .map(|(&m, c)| Complex::new(m * c.re, m * c.im))
        .collect()
}

/// Runs the net over a full mixture: per-frame masks applied to the mixture
/// spectrogram, then overlap-add back to a waveform.
pub fn enhance<T: Scalar>(
    net: &MaskNet<T>,
    mixture: &Waveform<T>,
    cfg: &StftConfig,
) -> Result<(Waveform<T>, Spectrogram<T>)> {
    let spec = dsp::stft(mixture, cfg)?;
    let mut masked = Spectrogram::zeros(spec.frames(), *cfg, spec.sample_rate());
    for f in 0..spec.frames() {
        let feats = log1p_features(&spec.magnitude_frame(f));
        let (mask, _) = net.forward(&feats)?;
        masked.frame_mut(f).copy_from_slice(&apply_mask(&mask, spec.frame(f)));
    }
    let wave = dsp::istft(&masked)?;
    Ok((wave, masked))
}

/// On-disk checkpoint: JSON with row-major weight matrices in f64.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub layer_dims: Vec<usize>,
    pub hidden_activation: String,
    pub output_activation: String,
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
    pub seed: u64,
    pub training_meta: BTreeMap<String, String>,
}

impl Checkpoint {
    pub fn validate(&self) -> Result<()> {
        if self.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        validate_dims(&self.layer_dims).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if self.hidden_activation != "relu" || self.output_activation != "sigmoid" {
            return Err(Error::Checkpoint(format!(
                "unsupported activations {}/{}",
                self.hidden_activation, self.output_activation
            )));
        }
        if self.weights.len() != 2 || self.biases.len() != 2 {
            return Err(Error::Checkpoint("expected exactly two layers".into()));
        }
        for (layer, w) in self.layer_dims.windows(2).enumerate() {
            if self.weights[layer].len() != w[1] || self.biases[layer].len() != w[1] {
                return Err(Error::Checkpoint(format!("layer {layer} shape mismatch")));
            }
        }
        Ok(())
    }
}

/// Serializes a checkpoint; the encoding is deterministic (sorted meta keys,
/// shortest-round-trip floats), so identical nets give identical bytes.
pub fn save_checkpoint(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<()> {
    let mut bytes = serde_json::to_vec(ckpt)?;
    bytes.push(b'\n');
    std::fs::write(path.as_ref(), bytes)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let bytes = std::fs::read(path.as_ref())?;
    let ckpt: Checkpoint = serde_json::from_slice(&bytes)?;
    ckpt.validate()?;
    Ok(ckpt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn init_is_deterministic() {
        let a = MaskNet::<f64>::init(&[257, 16, 257], 7).unwrap();
        let b = MaskNet::<f64>::init(&[257, 16, 257], 7).unwrap();
        assert_eq!(a, b);
        let c = MaskNet::<f64>::init(&[257, 16, 257], 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn param_count_formula() {
        // sum of d_in*d_out + d_out per layer
        assert_eq!(param_count(&[257, 512, 257]), 257 * 512 + 512 + 512 * 257 + 257);
        assert_eq!(param_count(&[257, 512, 257]), 263_937);
        assert_eq!(
            MaskNet::<f64>::init(&[257, 16, 257], 0).unwrap().param_count(),
            257 * 16 + 16 + 16 * 257 + 257
        );
    }

    #[test]
    fn flops_ratio_tiny_vs_teacher() {
        let teacher = forward_flops(&[257, 512, 257]) as f64;
        let tiny = forward_flops(&[257, 16, 257]) as f64;
        assert_relative_eq!(tiny / teacher, 16.0 / 512.0, max_relative = 1e-12);
        let small = forward_flops(&[257, 128, 257]) as f64;
        assert_relative_eq!(small / teacher, 0.25, max_relative = 1e-12);
    }

    #[test]
    fn zero_weight_net_outputs_half() {
        let mut net = MaskNet::<f64>::init(&[257, 8, 257], 1).unwrap();
        for p in net.params_mut() {
            *p = 0.0;
        }
        let (mask, _) = net.forward(&vec![0.3; 257]).unwrap();
        assert!(mask.iter().all(|&m| m == 0.5));
    }

    #[test]
    fn forward_bounded_for_large_inputs() {
        // Sigmoid saturates to the closed interval under f64 rounding.
        let net = MaskNet::<f64>::init(&[257, 8, 257], 2).unwrap();
        let (mask, _) = net.forward(&vec![1e4; 257]).unwrap();
        assert!(mask.iter().all(|&m| m.is_finite() && (0.0..=1.0).contains(&m)));
    }

    #[test]
    fn forward_matches_naive_matmul_oracle() {
        let net = MaskNet::<f64>::init(&[257, 5, 257], 3).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let input: Vec<f64> = (0..257).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (mask, _) = net.forward(&input).unwrap();

        // Independent dense-layer recomputation.
        let d_in = 257;
        let d_hid = 5;
        let mut h = vec![0.0f64; d_hid];
        for j in 0..d_hid {
            let mut acc = net.biases[0][j];
            for i in 0..d_in {
                acc += net.weights[0][j * d_in + i] * input[i];
            }
            h[j] = acc.max(0.0);
        }
        for o in 0..257 {
            let mut acc = net.biases[1][o];
            for j in 0..d_hid {
                acc += net.weights[1][o * d_hid + j] * h[j];
            }
            let expect = 1.0 / (1.0 + (-acc).exp());
            assert_relative_eq!(mask[o], expect, max_relative = 1e-14);
        }
    }

    #[test]
    fn apply_mask_identity_zero_and_magnitude() {
        let frame: Vec<Complex<f64>> = (0..4).map(|i| Complex::new(i as f64, -1.0)).collect();
        let ones = vec![1.0; 4];
        assert_eq!(apply_mask(&ones, &frame), frame);
        let zeros = vec![0.0; 4];
        assert!(apply_mask(&zeros, &frame).iter().all(|c| c.re == 0.0 && c.im == 0.0));
        let half = vec![0.5; 4];
        let out = apply_mask(&half, &frame);
        for (o, f) in out.iter().zip(&frame) {
            assert_relative_eq!(o.norm(), 0.5 * f.norm());
        }
    }

    #[test]
    fn backward_zero_upstream_gives_zero_grads() {
        let net = MaskNet::<f64>::init(&[257, 4, 257], 5).unwrap();
        let (_, cache) = net.forward(&vec![0.2; 257]).unwrap();
        let (grads, input_grad) = net.backward(&cache, &vec![0.0; 257]).unwrap();
        assert!(grads.weights.iter().flatten().all(|&g| g == 0.0));
        assert!(grads.biases.iter().flatten().all(|&g| g == 0.0));
        assert!(input_grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn backward_matches_finite_differences() {
        // Scalar objective: sum of mask * fixed weights.
        let net = MaskNet::<f64>::init(&[257, 4, 257], 6).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let input: Vec<f64> = (0..257).map(|_| rng.random_range(0.0..2.0)).collect();
        let probe: Vec<f64> = (0..257).map(|_| rng.random_range(-1.0..1.0)).collect();
        let objective = |net: &MaskNet<f64>| -> f64 {
            let (mask, _) = net.forward(&input).unwrap();
            mask.iter().zip(&probe).map(|(m, p)| m * p).sum()
        };
        let (_, cache) = net.forward(&input).unwrap();
        let (grads, _) = net.backward(&cache, &probe).unwrap();

        let h = 1e-5;
        let mut max_rel: f64 = 0.0;
        // Spot-check a deterministic subset of parameters per tensor.
        for layer in 0..2 {
            for idx in (0..net.weights[layer].len()).step_by(97) {
                let mut plus = net.clone();
                plus.weights[layer][idx] += h;
                let mut minus = net.clone();
                minus.weights[layer][idx] -= h;
                let fd = (objective(&plus) - objective(&minus)) / (2.0 * h);
                let a = grads.weights[layer][idx];
                let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-4);
                max_rel = max_rel.max(rel);
            }
            for idx in 0..net.biases[layer].len().min(16) {
                let mut plus = net.clone();
                plus.biases[layer][idx] += h;
                let mut minus = net.clone();
                minus.biases[layer][idx] -= h;
                let fd = (objective(&plus) - objective(&minus)) / (2.0 * h);
                let a = grads.biases[layer][idx];
                let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-4);
                max_rel = max_rel.max(rel);
            }
        }
        assert!(max_rel < 1e-4, "max rel err {max_rel}");
    }

    #[test]
    fn batch_gradient_is_mean_of_per_sample_grads() {
        let net = MaskNet::<f64>::init(&[257, 4, 257], 8).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let inputs: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..257).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let upstream: Vec<f64> = (0..257).map(|_| rng.random_range(-1.0..1.0)).collect();

        let mut acc = GradientBuffer::zeros_like(&net);
        for input in &inputs {
            let (_, cache) = net.forward(input).unwrap();
            let (g, _) = net.backward(&cache, &upstream).unwrap();
            acc.accumulate(&g);
        }
        acc.scale(0.5);

        // Same thing via two separate buffers averaged manually.
        let mut manual = GradientBuffer::zeros_like(&net);
        for input in &inputs {
            let (_, cache) = net.forward(input).unwrap();
            let (g, _) = net.backward(&cache, &upstream).unwrap();
            manual.accumulate(&g);
        }
        manual.scale(0.5);
        assert_eq!(acc, manual);
    }

    #[test]
    fn checkpoint_roundtrip_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let net = MaskNet::<f64>::init(&[257, 16, 257], 11).unwrap();
        let mut meta = BTreeMap::new();
        meta.insert("note".to_string(), "unit-test".to_string());
        let ckpt = net.to_checkpoint(meta);

        let p1 = dir.path().join("a.json");
        let p2 = dir.path().join("b.json");
        save_checkpoint(&p1, &ckpt).unwrap();
        let loaded = load_checkpoint(&p1).unwrap();
        save_checkpoint(&p2, &loaded).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());

        let net2 = MaskNet::<f64>::from_checkpoint(&loaded).unwrap();
        assert_eq!(net, net2);
        let input: Vec<f64> = (0..257).map(|i| (i as f64 * 0.01).sin().abs()).collect();
        let (m1, _) = net.forward(&input).unwrap();
        let (m2, _) = net2.forward(&input).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn invalid_dims_rejected() {
        assert!(MaskNet::<f64>::init(&[257, 16], 0).is_err());
        assert!(MaskNet::<f64>::init(&[257, 0, 257], 0).is_err());
        assert!(MaskNet::<f64>::init(&[257, 16, 128], 0).is_err());
    }
}
