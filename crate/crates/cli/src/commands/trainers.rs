//! `train-teacher` and `distill` subcommands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use dfkd::loss::KdVariant;
use dfkd::model::{
    load_checkpoint, save_checkpoint, MaskNet, STUDENT_SMALL_HIDDEN, STUDENT_TINY_HIDDEN,
};
use dfkd::train::{distill, train_teacher, TrainConfig, TrainReport};

use crate::config::{apply_train_kv, read_kv_file};
use crate::corpus_io::{corpus_sample_rate, load_corpus};
use crate::error::{CliError, CliResult};

#[derive(Args, Debug)]
pub struct TrainTeacherArgs {
    /// Corpus directory produced by `synth`.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Train config file (key = value lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Checkpoint output path.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub hidden: Option<usize>,
}

#[derive(Args, Debug)]
pub struct DistillArgs {
    /// Corpus directory produced by `synth`.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Frozen teacher checkpoint.
    #[arg(long)]
    pub teacher: PathBuf,
    /// Train config file (key = value lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Checkpoint output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Distillation variant.
    #[arg(long, value_parser = parse_variant)]
    pub variant: Option<KdVariant>,
    /// Student preset: small (hidden 128) or tiny (hidden 16).
    #[arg(long)]
    pub student: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Explicit hidden width (overrides --student).
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Ablation hook: freeze the banded crossover at this bin.
    #[arg(long)]
    pub force_crossover: Option<usize>,
}

fn parse_variant(s: &str) -> Result<KdVariant, String> {
    s.parse::<KdVariant>().map_err(|e| e.to_string())
}

fn build_cfg(
    config: Option<&PathBuf>,
    overrides: &[(String, String)],
    default_hidden: usize,
) -> CliResult<TrainConfig> {
    let mut cfg = TrainConfig { hidden: default_hidden, ..Default::default() };
    if let Some(path) = config {
        apply_train_kv(&mut cfg, &read_kv_file(path)?)?;
    }
    apply_train_kv(&mut cfg, overrides)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Writes the checkpoint plus the step CSV (`<out>.log.csv`) and summary
/// JSON (`<out>.report.json`). Wall time goes to stdout only so the files
/// stay byte-reproducible.
fn write_artifacts(
    out: &Path,
    net: &MaskNet<f64>,
    report: &TrainReport,
    sample_rate: u32,
    role: &str,
) -> CliResult<()> {
    let mut meta: BTreeMap<String, String> = report.config_echo.clone();
    meta.insert("role".into(), role.into());
    meta.insert("sample_rate".into(), sample_rate.to_string());
    meta.insert("best_epoch".into(), report.best_epoch.to_string());
    meta.insert("version".into(), report.version.clone());
    save_checkpoint(out, &net.to_checkpoint(meta))?;

    let log_path = sibling(out, ".log.csv");
    std::fs::write(&log_path, report.steps_csv())?;
    let report_path = sibling(out, ".report.json");
    let mut json = serde_json::to_vec_pretty(report).map_err(dfkd::Error::from)?;
    json.push(b'\n');
    std::fs::write(&report_path, json)?;

    println!(
        "{role} done in {:.1}s: best epoch {}{}",
        report.wall_time_s,
        report.best_epoch,
        match report.best_val_si_snri {
            Some(v) => format!(" (val SI-SNRi {v:.3} dB)"),
            None => String::new(),
        }
    );
    println!("checkpoint: {}", out.display());
    println!("step log:   {}", log_path.display());
    println!("report:     {}", report_path.display());
    Ok(())
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    out.with_file_name(name)
}

pub fn run_train_teacher(args: &TrainTeacherArgs) -> CliResult<()> {
    let mut overrides = Vec::new();
    if let Some(v) = args.epochs {
        overrides.push(("epochs".to_string(), v.to_string()));
    }
    if let Some(v) = args.lr {
        overrides.push(("lr".to_string(), v.to_string()));
    }
    if let Some(v) = args.seed {
        overrides.push(("seed".to_string(), v.to_string()));
    }
    if let Some(v) = args.hidden {
        overrides.push(("hidden".to_string(), v.to_string()));
    }
    let cfg = build_cfg(args.config.as_ref(), &overrides, dfkd::model::TEACHER_HIDDEN)?;

    let corpus = load_corpus(&args.corpus)?;
    let rate = corpus_sample_rate(&corpus)?;
    let (net, report) = train_teacher(&corpus.train, &cfg)?;
    write_artifacts(&args.out, &net, &report, rate, "teacher")
}

pub fn run_distill(args: &DistillArgs) -> CliResult<()> {
    let default_hidden = match args.student.as_deref() {
        None | Some("small") => STUDENT_SMALL_HIDDEN,
        Some("tiny") => STUDENT_TINY_HIDDEN,
        Some(other) => {
            return Err(CliError::Config(format!(
                "unknown student preset '{other}' (expected small or tiny)"
            )))
        }
    };
    let mut overrides = Vec::new();
    if let Some(v) = args.variant {
        overrides.push(("kd_variant".to_string(), v.as_str().to_string()));
    }
    if let Some(v) = args.epochs {
        overrides.push(("epochs".to_string(), v.to_string()));
    }
    if let Some(v) = args.lr {
        overrides.push(("lr".to_string(), v.to_string()));
    }
    if let Some(v) = args.seed {
        overrides.push(("seed".to_string(), v.to_string()));
    }
    if let Some(v) = args.hidden {
        overrides.push(("hidden".to_string(), v.to_string()));
    }
    if let Some(v) = args.alpha {
        overrides.push(("alpha".to_string(), v.to_string()));
    }
    if let Some(v) = args.beta {
        overrides.push(("beta".to_string(), v.to_string()));
    }
    if let Some(v) = args.force_crossover {
        overrides.push(("force_crossover".to_string(), v.to_string()));
    }
    let cfg = build_cfg(args.config.as_ref(), &overrides, default_hidden)?;

    let ckpt = load_checkpoint(&args.teacher)?;
    let teacher = MaskNet::<f64>::from_checkpoint(&ckpt)?;
    let corpus = load_corpus(&args.corpus)?;
    let rate = corpus_sample_rate(&corpus)?;
    if let Some(ckpt_rate) = ckpt.training_meta.get("sample_rate") {
        if ckpt_rate != &rate.to_string() {
            return Err(CliError::Config(format!(
                "teacher was trained at {ckpt_rate} Hz but the corpus is {rate} Hz"
            )));
        }
    }
    let (net, report) = distill(&teacher, &corpus.train, &cfg)?;
    write_artifacts(&args.out, &net, &report, rate, "student")
}
