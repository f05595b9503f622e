//! Frequency-adaptive knowledge distillation for spectral-mask speech
//! enhancement.
//!
//! The crate trains a small "student" mask-estimation network to mimic a
//! frozen, larger "teacher" on noisy-speech spectrograms. Instead of one
//! distillation loss over the full spectrum, every STFT frame is split at a
//! per-frame crossover bin detected from the teacher output (the
//! [`adapter`] module); the band below the crossover is matched with a
//! cosine (phase-oriented) loss and the band above with a cosine/L2 blend
//! (the [`loss`] module). Everything needed to run the experiment end to
//! end is included: STFT/iSTFT with an exact adjoint for backpropagation
//! ([`dsp`]), tiny mask networks with hand-written backward passes
//! ([`model`]), deterministic synthetic corpus generation ([`data`]),
//! training loops ([`train`]), evaluation metrics ([`metrics`]) and a
//! finite-difference gradient verification suite ([`gradcheck`]).
//!
//! All numeric code is generic over the scalar type via [`Scalar`]
//! (`f32` or `f64`); the provided type aliases fix `f64`, which is what the
//! tests, the CLI and the gradient suite use.

pub mod adapter;
pub mod data;
pub mod dsp;
pub mod error;
pub mod gradcheck;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod scalar;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision waveform, the default for all tooling.
pub type Waveform64 = dsp::Waveform<f64>;
/// Double-precision complex spectrogram.
pub type Spectrogram64 = dsp::Spectrogram<f64>;
/// Double-precision mask-estimation network.
pub type MaskNet64 = model::MaskNet<f64>;
/// Double-precision mixture sample.
pub type MixtureSample64 = data::MixtureSample<f64>;
