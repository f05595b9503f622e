//! `adapt-trace` subcommand: per-frame crossover dump.

use std::path::PathBuf;

use clap::Args;
use dfkd::adapter;
use dfkd::dsp::{stft, wav::read_wav, Spectrogram, StftConfig};
use dfkd::model::{apply_mask, load_checkpoint, log1p_features, MaskNet};

use crate::error::CliResult;

#[derive(Args, Debug)]
pub struct TraceArgs {
    /// Input WAV (mono 16-bit PCM).
    #[arg(long)]
    pub wav: PathBuf,
    /// Teacher checkpoint whose output drives the crossover.
    #[arg(long)]
    pub teacher: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Denominator guard for the normalized difference.
    #[arg(long, default_value_t = adapter::DEFAULT_EPS)]
    pub eps: f64,
    /// Use one crossover for the whole clip instead of one per frame.
    #[arg(long)]
    pub utterance: bool,
}

/// Per-frame crossovers of the teacher-masked spectrum for a waveform.
pub fn trace_crossovers(
    teacher: &MaskNet<f64>,
    spec: &Spectrogram<f64>,
    eps: f64,
    utterance: bool,
) -> CliResult<Vec<usize>> {
    let mut teacher_out = Spectrogram::zeros(spec.frames(), *spec.config(), spec.sample_rate());
    for f in 0..spec.frames() {
        let feats = log1p_features(&spec.magnitude_frame(f));
        let (mask, _) = teacher.forward(&feats)?;
        teacher_out.frame_mut(f).copy_from_slice(&apply_mask(&mask, spec.frame(f)));
    }
    let ms = if utterance {
        vec![adapter::adapt_utterance(&teacher_out, eps)?; spec.frames()]
    } else {
        adapter::adapt(&teacher_out, eps)?
    };
    Ok(ms)
}

pub fn run(args: &TraceArgs) -> CliResult<()> {
    let ckpt = load_checkpoint(&args.teacher)?;
    let teacher = MaskNet::<f64>::from_checkpoint(&ckpt)?;
    let wave = read_wav::<f64>(&args.wav)?;
    let cfg = StftConfig::default();
    let spec = stft(&wave, &cfg)?;
    let ms = trace_crossovers(&teacher, &spec, args.eps, args.utterance)?;

    let hz_per_bin = wave.sample_rate as f64 / cfg.n_fft as f64;
    let mut csv = String::from("frame_index,m,m_hz\n");
    for (f, &m) in ms.iter().enumerate() {
        csv.push_str(&format!("{f},{m},{}\n", m as f64 * hz_per_bin));
    }
    std::fs::write(&args.out, csv)?;
    println!("wrote {} frames to {}", ms.len(), args.out.display());
    Ok(())
}
