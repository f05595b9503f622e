use std::path::PathBuf;

use clap::Args;
use dfkd::data::{build_corpus, CorpusConfig};

use crate::config::{apply_corpus_kv, corpus_config_echo, parse_kv, read_kv_file};
use crate::error::CliResult;

/// Synthesize a deterministic noisy-speech corpus.
#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Corpus config file (key = value lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for WAVs and the manifest.
    #[arg(long, env = "DFKD_OUT_DIR")]
    pub out: PathBuf,
    /// Override: number of training mixtures.
    #[arg(long)]
    pub n_train: Option<usize>,
    /// Override: number of test mixtures.
    #[arg(long)]
    pub n_test: Option<usize>,
    /// Override: clip duration in seconds.
    #[arg(long)]
    pub clip_seconds: Option<f64>,
    /// Override: master seed.
    #[arg(long)]
    pub master_seed: Option<u64>,
    /// Override: comma-separated noise kinds.
    #[arg(long)]
    pub noise_kinds: Option<String>,
}

pub fn run(args: &SynthArgs) -> CliResult<()> {
    let mut cfg = CorpusConfig::default();
    if let Some(path) = &args.config {
        apply_corpus_kv(&mut cfg, &read_kv_file(path)?)?;
    }
    // Flags override file values.
    let mut overrides = Vec::new();
    if let Some(v) = args.n_train {
        overrides.push(("n_train".to_string(), v.to_string()));
    }
    if let Some(v) = args.n_test {
        overrides.push(("n_test".to_string(), v.to_string()));
    }
    if let Some(v) = args.clip_seconds {
        overrides.push(("clip_seconds".to_string(), v.to_string()));
    }
    if let Some(v) = args.master_seed {
        overrides.push(("master_seed".to_string(), v.to_string()));
    }
    if let Some(v) = &args.noise_kinds {
        overrides.push(("noise_kinds".to_string(), v.clone()));
    }
    apply_corpus_kv(&mut cfg, &overrides)?;
    cfg.validate()?;

    let corpus = build_corpus::<f64>(&cfg)?;
    crate::corpus_io::write_corpus(&args.out, &corpus, &corpus_config_echo(&cfg))?;
    println!(
        "wrote {} train + {} test mixtures to {}",
        corpus.train.len(),
        corpus.test.len(),
        args.out.display()
    );
    Ok(())
}

// Re-exported for tests that build configs from plain strings.
#[allow(dead_code)]
pub fn corpus_config_from_text(text: &str) -> CliResult<CorpusConfig> {
    let mut cfg = CorpusConfig::default();
    apply_corpus_kv(&mut cfg, &parse_kv(text)?)?;
    Ok(cfg)
}
