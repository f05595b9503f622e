//! `eval` subcommand: metrics over a corpus split.

use std::path::PathBuf;

use clap::Args;
use dfkd::adapter;
use dfkd::data::MixtureSample;
use dfkd::dsp::{stft, StftConfig, Waveform};
use dfkd::metrics::{
    band_residual, log_spectral_distance, si_snr_improvement, summarize, ClipMetrics, EvalSummary,
};
use dfkd::model::{enhance, load_checkpoint, MaskNet};
use rayon::prelude::*;

use crate::corpus_io::{corpus_sample_rate, load_corpus};
use crate::error::{CliError, CliResult};

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Checkpoint to evaluate.
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Corpus directory.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output JSON path; a per-clip CSV lands next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Which split to evaluate.
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Label recorded in the summary (defaults to the checkpoint's variant).
    #[arg(long)]
    pub label: Option<String>,
}

/// Per-clip metrics: SI-SNRi in the time domain; LSD and band residuals in
/// spectrogram space, with the band split adapted from the enhanced output.
pub fn eval_clip(
    net: &MaskNet<f64>,
    sample: &MixtureSample<f64>,
    id: usize,
    cfg: &StftConfig,
) -> CliResult<ClipMetrics> {
    let (enhanced, masked_spec) = enhance(net, &sample.mixture, cfg)?;
    let n = enhanced.len();
    let mixture = Waveform::new(sample.mixture.samples[..n].to_vec(), enhanced.sample_rate);
    let clean = Waveform::new(sample.clean.samples[..n].to_vec(), enhanced.sample_rate);
    let si_snri = si_snr_improvement(&enhanced, &mixture, &clean)?;
    let clean_spec = stft(&clean, cfg)?;
    let lsd = log_spectral_distance(&masked_spec, &clean_spec)?;
    let ms = adapter::adapt(&masked_spec, adapter::DEFAULT_EPS)?;
    let (low, high) = band_residual(&masked_spec, &clean_spec, &ms)?;
    Ok(ClipMetrics { id, si_snri, lsd, band_residual_low: low, band_residual_high: high })
}

pub fn evaluate(
    net: &MaskNet<f64>,
    clips: &[MixtureSample<f64>],
    cfg: &StftConfig,
) -> CliResult<Vec<ClipMetrics>> {
    clips
        .par_iter()
        .enumerate()
        .map(|(id, sample)| eval_clip(net, sample, id, cfg))
        .collect()
}

pub fn clips_csv(clips: &[ClipMetrics]) -> String {
    let mut out = String::from("id,si_snri,lsd,band_residual_low,band_residual_high\n");
    for c in clips {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            c.id, c.si_snri, c.lsd, c.band_residual_low, c.band_residual_high
        ));
    }
    out
}

pub fn run(args: &EvalArgs) -> CliResult<()> {
    let ckpt = load_checkpoint(&args.ckpt)?;
    let net = MaskNet::<f64>::from_checkpoint(&ckpt)?;
    let corpus = load_corpus(&args.corpus)?;
    let rate = corpus_sample_rate(&corpus)?;
    if let Some(ckpt_rate) = ckpt.training_meta.get("sample_rate") {
        if ckpt_rate != &rate.to_string() {
            return Err(CliError::Config(format!(
                "checkpoint was trained at {ckpt_rate} Hz but the corpus is {rate} Hz"
            )));
        }
    }
    let clips = match args.split.as_str() {
        "test" => &corpus.test,
        "train" => &corpus.train,
        other => return Err(CliError::Config(format!("unknown split '{other}'"))),
    };
    if clips.is_empty() {
        return Err(CliError::Config(format!("split '{}' is empty", args.split)));
    }

    let cfg = StftConfig::default();
    let per_clip = evaluate(&net, clips, &cfg)?;
    let label = args
        .label
        .clone()
        .or_else(|| ckpt.training_meta.get("kd_variant").cloned())
        .unwrap_or_else(|| "unknown".to_string());
    let summary: EvalSummary = {
        let mut s = summarize(&label, ckpt.seed, &per_clip);
        s.seed = ckpt.seed;
        s
    };

    #[derive(serde::Serialize)]
    struct EvalOutput<'a> {
        #[serde(flatten)]
        summary: &'a EvalSummary,
        config: std::collections::BTreeMap<String, String>,
    }
    let mut config = ckpt.training_meta.clone();
    config.insert("split".into(), args.split.clone());
    let out = EvalOutput { summary: &summary, config };
    let mut json = serde_json::to_vec_pretty(&out).map_err(dfkd::Error::from)?;
    json.push(b'\n');
    std::fs::write(&args.out, json)?;
    let csv_path = args.out.with_extension("csv");
    std::fs::write(&csv_path, clips_csv(&per_clip))?;

    println!(
        "{label}: SI-SNRi {:.3} +/- {:.3} dB, LSD {:.3} dB over {} clips",
        summary.si_snri_mean, summary.si_snri_std, summary.lsd_mean, summary.n_clips
    );
    println!("summary: {}", args.out.display());
    println!("clips:   {}", csv_path.display());
    Ok(())
}
