//! Corpus directory layout: WAV triples plus a manifest CSV.
//!
//! ```text
//! <dir>/manifest.csv          id,split,seed,kind,snr_db,clean,noise,mix
//! <dir>/corpus_config.txt     config echo, re-runnable with `synth --config`
//! <dir>/{train,test}/clean_NNNN.wav  (noise_NNNN.wav, mix_NNNN.wav)
//! ```

use std::path::{Path, PathBuf};

use dfkd::data::{Corpus, MixtureSample, NoiseKind, Split};
use dfkd::dsp::wav::{read_wav, write_wav};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

pub const MANIFEST_HEADER: &str = "id,split,seed,kind,snr_db,clean,noise,mix";

fn split_dir(split: Split) -> &'static str {
    split.as_str()
}

fn write_split(
    dir: &Path,
    split: Split,
    samples: &[MixtureSample<f64>],
    manifest: &mut String,
) -> CliResult<()> {
    let sub = dir.join(split_dir(split));
    std::fs::create_dir_all(&sub)?;
    let results: CliResult<Vec<String>> = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let clean = format!("{}/clean_{i:04}.wav", split_dir(split));
            let noise = format!("{}/noise_{i:04}.wav", split_dir(split));
            let mix = format!("{}/mix_{i:04}.wav", split_dir(split));
            write_wav(dir.join(&clean), &s.clean)?;
            write_wav(dir.join(&noise), &s.noise)?;
            write_wav(dir.join(&mix), &s.mixture)?;
            Ok(format!(
                "{i},{},{},{},{},{clean},{noise},{mix}\n",
                split_dir(split),
                s.seed,
                s.kind.as_str(),
                s.snr_db
            ))
        })
        .collect();
    for row in results? {
        manifest.push_str(&row);
    }
    Ok(())
}

pub fn write_corpus(dir: &Path, corpus: &Corpus<f64>, config_echo: &str) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    let mut manifest = format!("{MANIFEST_HEADER}\n");
    write_split(dir, Split::Train, &corpus.train, &mut manifest)?;
    write_split(dir, Split::Test, &corpus.test, &mut manifest)?;
    std::fs::write(dir.join("manifest.csv"), manifest)?;
    std::fs::write(dir.join("corpus_config.txt"), config_echo)?;
    Ok(())
}

struct ManifestRow {
    split: Split,
    seed: u64,
    kind: NoiseKind,
    snr_db: f64,
    clean: PathBuf,
    noise: PathBuf,
    mix: PathBuf,
}

fn parse_manifest(dir: &Path) -> CliResult<Vec<ManifestRow>> {
    let path = dir.join("manifest.csv");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == MANIFEST_HEADER => {}
        other => {
            return Err(CliError::Io(format!(
                "{}: bad manifest header {other:?}",
                path.display()
            )))
        }
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 8 {
            return Err(CliError::Io(format!(
                "{}: row {} has {} fields, expected 8",
                path.display(),
                n + 2,
                parts.len()
            )));
        }
        let split = match parts[1] {
            "train" => Split::Train,
            "test" => Split::Test,
            other => return Err(CliError::Io(format!("unknown split '{other}'"))),
        };
        rows.push(ManifestRow {
            split,
            seed: parts[2].parse().map_err(|e| CliError::Io(format!("seed: {e}")))?,
            kind: parts[3].parse().map_err(|e: dfkd::Error| CliError::Io(e.to_string()))?,
            snr_db: parts[4].parse().map_err(|e| CliError::Io(format!("snr_db: {e}")))?,
            clean: dir.join(parts[5]),
            noise: dir.join(parts[6]),
            mix: dir.join(parts[7]),
        });
    }
    Ok(rows)
}

/// Loads a corpus directory back into memory.
pub fn load_corpus(dir: &Path) -> CliResult<Corpus<f64>> {
    let rows = parse_manifest(dir)?;
    let samples: CliResult<Vec<(Split, MixtureSample<f64>)>> = rows
        .par_iter()
        .map(|row| {
            let clean = read_wav::<f64>(&row.clean)?;
            let noise = read_wav::<f64>(&row.noise)?;
            let mixture = read_wav::<f64>(&row.mix)?;
            if clean.sample_rate != mixture.sample_rate || clean.len() != mixture.len() {
                return Err(CliError::Io(format!(
                    "{}: clean/mix length or rate mismatch",
                    row.clean.display()
                )));
            }
            Ok((
                row.split,
                MixtureSample {
                    clean,
                    noise,
                    mixture,
                    snr_db: row.snr_db,
                    seed: row.seed,
                    kind: row.kind,
                },
            ))
        })
        .collect();
    let mut corpus = Corpus { train: Vec::new(), test: Vec::new() };
    for (split, sample) in samples? {
        match split {
            Split::Train => corpus.train.push(sample),
            Split::Test => corpus.test.push(sample),
        }
    }
    if corpus.train.is_empty() && corpus.test.is_empty() {
        return Err(CliError::Io(format!("{}: manifest lists no samples", dir.display())));
    }
    Ok(corpus)
}

/// Sample rate shared by all clips, or an error if they disagree.
pub fn corpus_sample_rate(corpus: &Corpus<f64>) -> CliResult<u32> {
    let mut rate = None;
    for s in corpus.train.iter().chain(&corpus.test) {
        match rate {
            None => rate = Some(s.clean.sample_rate),
            Some(r) if r == s.clean.sample_rate => {}
            Some(r) => {
                return Err(CliError::Config(format!(
                    "corpus mixes sample rates {r} and {}",
                    s.clean.sample_rate
                )))
            }
        }
    }
    rate.ok_or_else(|| CliError::Io("empty corpus".into()))
}
