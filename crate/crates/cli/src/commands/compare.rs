//! `compare` subcommand: trains one teacher, distills every variant at
//! every student size over several seeds, and tabulates test-set SI-SNRi.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use dfkd::data::hash64;
use dfkd::dsp::StftConfig;
use dfkd::loss::{KdVariant, LossWeights};
use dfkd::model::{STUDENT_SMALL_HIDDEN, STUDENT_TINY_HIDDEN, TEACHER_HIDDEN};
use dfkd::train::{distill, train_teacher, TrainConfig};

use crate::commands::eval::evaluate;
use crate::corpus_io::load_corpus;
use crate::error::{CliError, CliResult};

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Corpus directory.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Seeds per (variant, size) cell.
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    /// Output Markdown table; a CSV with per-run rows lands next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub teacher_epochs: usize,
    #[arg(long, default_value_t = 12)]
    pub student_epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    /// Base seed; per-run seeds derive from it.
    #[arg(long, default_value_t = 7)]
    pub base_seed: u64,
}

/// Display name for a variant in compare outputs.
fn display(variant: KdVariant) -> &'static str {
    match variant {
        KdVariant::None => "scratch",
        v => v.as_str(),
    }
}

#[derive(Debug, Clone)]
pub struct RunRow {
    pub model: String,
    pub variant: String,
    pub seed_index: u64,
    pub seed: u64,
    pub si_snri: f64,
}

pub fn runs_csv(rows: &[RunRow]) -> String {
    let mut out = String::from("model,variant,seed_index,seed,si_snri\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.model, r.variant, r.seed_index, r.seed, r.si_snri
        ));
    }
    out
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn run(args: &CompareArgs) -> CliResult<()> {
    if args.seeds == 0 {
        return Err(CliError::Config("--seeds must be at least 1".into()));
    }
    let started = Instant::now();
    let corpus = load_corpus(&args.corpus)?;
    if corpus.test.is_empty() {
        return Err(CliError::Config("corpus has no test split".into()));
    }
    let stft = StftConfig::default();

    let teacher_cfg = TrainConfig {
        epochs: args.teacher_epochs,
        seed: hash64(args.base_seed, "teacher", 0),
        hidden: TEACHER_HIDDEN,
        ..Default::default()
    };
    eprintln!("training teacher ({} epochs)...", args.teacher_epochs);
    let (teacher, teacher_report) = train_teacher(&corpus.train, &teacher_cfg)?;
    let teacher_clips = evaluate(&teacher, &corpus.test, &stft)?;
    let (teacher_mean, teacher_std) =
        mean_std(&teacher_clips.iter().map(|c| c.si_snri).collect::<Vec<_>>());
    eprintln!(
        "teacher: SI-SNRi {teacher_mean:.3} dB ({:.0}s)",
        teacher_report.wall_time_s
    );

    let mut rows: Vec<RunRow> = vec![RunRow {
        model: "teacher".into(),
        variant: "scratch".into(),
        seed_index: 0,
        seed: teacher_cfg.seed,
        si_snri: teacher_mean,
    }];

    let sizes = [("small", STUDENT_SMALL_HIDDEN), ("tiny", STUDENT_TINY_HIDDEN)];
    for (size_name, hidden) in sizes {
        for variant in KdVariant::ALL {
            for k in 0..args.seeds {
                let seed = hash64(args.base_seed, "student", k);
                let cfg = TrainConfig {
                    hidden,
                    epochs: args.student_epochs,
                    seed,
                    weights: LossWeights {
                        alpha: args.alpha,
                        beta: args.beta,
                        kd_variant: variant,
                        ..Default::default()
                    },
                    ..Default::default()
                };
                let (net, _) = distill(&teacher, &corpus.train, &cfg)?;
                let clips = evaluate(&net, &corpus.test, &stft)?;
                let (mean, _) = mean_std(&clips.iter().map(|c| c.si_snri).collect::<Vec<_>>());
                eprintln!(
                    "{size_name}/{}/seed{k}: SI-SNRi {mean:.3} dB",
                    display(variant)
                );
                rows.push(RunRow {
                    model: size_name.into(),
                    variant: display(variant).into(),
                    seed_index: k,
                    seed,
                    si_snri: mean,
                });
            }
        }
    }

    let mut md = String::new();
    md.push_str("# Distillation comparison\n\n");
    md.push_str("Config:\n\n```\n");
    md.push_str(&format!(
        "corpus = {}\nseeds = {}\nteacher_epochs = {}\nstudent_epochs = {}\nalpha = {}\nbeta = {}\nbase_seed = {}\n",
        args.corpus.display(),
        args.seeds,
        args.teacher_epochs,
        args.student_epochs,
        args.alpha,
        args.beta,
        args.base_seed
    ));
    md.push_str("```\n\n");
    md.push_str(&format!(
        "Teacher (hidden {TEACHER_HIDDEN}): SI-SNRi {teacher_mean:.3} dB (clip std {teacher_std:.3})\n\n"
    ));
    md.push_str("| model | variant | mean SI-SNRi (dB) | std over seeds | per-seed |\n");
    md.push_str("|-------|---------|-------------------|----------------|----------|\n");
    for (size_name, _) in sizes {
        for variant in KdVariant::ALL {
            let per_seed: Vec<f64> = rows
                .iter()
                .filter(|r| r.model == size_name && r.variant == display(variant))
                .map(|r| r.si_snri)
                .collect();
            let (mean, std) = mean_std(&per_seed);
            let seeds_str = per_seed
                .iter()
                .map(|v| format!("{v:.3}"))
                .collect::<Vec<_>>()
                .join(" ");
            md.push_str(&format!(
                "| {size_name} | {} | {mean:.3} | {std:.3} | {seeds_str} |\n",
                display(variant)
            ));
        }
    }
    std::fs::write(&args.out, &md)?;
    let csv_path = args.out.with_extension("csv");
    std::fs::write(&csv_path, runs_csv(&rows))?;

    println!("{md}");
    println!("table: {}", args.out.display());
    println!("runs:  {}", csv_path.display());
    eprintln!("compare finished in {:.0}s", started.elapsed().as_secs_f64());
    Ok(())
}
