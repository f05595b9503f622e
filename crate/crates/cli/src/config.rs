//! Flat key-value config files with strict schemas.
//!
//! Format: one `key = value` per line, `#` starts a comment, blank lines
//! ignored. Unknown keys are rejected, all of them listed in the error.

use std::path::Path;

use dfkd::data::{CorpusConfig, NoiseKind};
use dfkd::train::TrainConfig;

use crate::error::{CliError, CliResult};

pub fn parse_kv(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "line {}: expected 'key = value', got '{line}'",
                lineno + 1
            )));
        };
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

pub fn read_kv_file(path: &Path) -> CliResult<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_kv(&text)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| CliError::Config(format!("key '{key}': cannot parse '{value}': {e}")))
}

/// Applies key/value pairs onto a corpus config, rejecting unknown keys.
pub fn apply_corpus_kv(cfg: &mut CorpusConfig, pairs: &[(String, String)]) -> CliResult<()> {
    let mut unknown = Vec::new();
    for (key, value) in pairs {
        match key.as_str() {
            "n_train" => cfg.n_train = parse_value(key, value)?,
            "n_test" => cfg.n_test = parse_value(key, value)?,
            "clip_seconds" => cfg.clip_seconds = parse_value(key, value)?,
            "sample_rate" => cfg.sample_rate = parse_value(key, value)?,
            "master_seed" => cfg.master_seed = parse_value(key, value)?,
            "noise_kinds" => {
                let kinds: Result<Vec<NoiseKind>, _> =
                    value.split(',').map(|s| s.trim().parse::<NoiseKind>()).collect();
                cfg.noise_kinds =
                    kinds.map_err(|e| CliError::Config(format!("key 'noise_kinds': {e}")))?;
            }
            _ => unknown.push(key.clone()),
        }
    }
    if !unknown.is_empty() {
        return Err(CliError::Config(format!("unknown config keys: {}", unknown.join(", "))));
    }
    Ok(())
}

/// Applies key/value pairs onto a train config, rejecting unknown keys.
pub fn apply_train_kv(cfg: &mut TrainConfig, pairs: &[(String, String)]) -> CliResult<()> {
    let mut unknown = Vec::new();
    let mut stft = cfg.stft;
    for (key, value) in pairs {
        match key.as_str() {
            "alpha" => cfg.weights.alpha = parse_value(key, value)?,
            "beta" => cfg.weights.beta = parse_value(key, value)?,
            "kd_variant" => cfg.weights.kd_variant = parse_value(key, value)?,
            "cosine_form" => cfg.weights.cosine_form = parse_value(key, value)?,
            "kl_temperature" => cfg.weights.kl_temperature = parse_value(key, value)?,
            "lr" => cfg.lr = parse_value(key, value)?,
            "epochs" => cfg.epochs = parse_value(key, value)?,
            "batch_size" => cfg.batch_size = parse_value(key, value)?,
            "optimizer" => cfg.optimizer = parse_value(key, value)?,
            "seed" => cfg.seed = parse_value(key, value)?,
            "eps_adapter" => cfg.eps_adapter = parse_value(key, value)?,
            "se_loss" => cfg.se_loss = parse_value(key, value)?,
            "hidden" => cfg.hidden = parse_value(key, value)?,
            "val_fraction" => cfg.val_fraction = parse_value(key, value)?,
            "force_crossover" => cfg.force_crossover = Some(parse_value(key, value)?),
            "n_fft" => stft.n_fft = parse_value(key, value)?,
            "hop" => stft.hop = parse_value(key, value)?,
            _ => unknown.push(key.clone()),
        }
    }
    cfg.stft = stft;
    if !unknown.is_empty() {
        return Err(CliError::Config(format!("unknown config keys: {}", unknown.join(", "))));
    }
    Ok(())
}

/// Renders a corpus config back into the file format it was read from.
pub fn corpus_config_echo(cfg: &CorpusConfig) -> String {
    let kinds: Vec<&str> = cfg.noise_kinds.iter().map(|k| k.as_str()).collect();
    format!(
        "n_train = {}\nn_test = {}\nclip_seconds = {}\nsample_rate = {}\nmaster_seed = {}\nnoise_kinds = {}\n",
        cfg.n_train,
        cfg.n_test,
        cfg.clip_seconds,
        cfg.sample_rate,
        cfg.master_seed,
        kinds.join(",")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blanks() {
        let pairs = parse_kv("# header\n\nn_train = 5\n  master_seed=9\n").unwrap();
        assert_eq!(pairs, vec![("n_train".into(), "5".into()), ("master_seed".into(), "9".into())]);
    }

    #[test]
    fn unknown_keys_all_reported() {
        let mut cfg = CorpusConfig::default();
        let pairs = parse_kv("snr_bd = 3\nn_train = 5\nbogus = 1\n").unwrap();
        let err = apply_corpus_kv(&mut cfg, &pairs).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("snr_bd") && msg.contains("bogus"), "{msg}");
        assert_eq!(err.code(), 2);
    }

    #[test]
    fn corpus_roundtrip_through_echo() {
        let mut cfg = CorpusConfig::default();
        apply_corpus_kv(
            &mut cfg,
            &parse_kv("n_train = 7\nnoise_kinds = white,pink\n").unwrap(),
        )
        .unwrap();
        let echo = corpus_config_echo(&cfg);
        let mut cfg2 = CorpusConfig::default();
        apply_corpus_kv(&mut cfg2, &parse_kv(&echo).unwrap()).unwrap();
        assert_eq!(cfg, cfg2);
    }

    #[test]
    fn train_kv_full_schema() {
        let mut cfg = TrainConfig::default();
        let text = "alpha = 0.7\nbeta = 0.3\nkd_variant = fixed_subband\ncosine_form = paper_literal\n\
                    lr = 0.01\nepochs = 3\nbatch_size = 2\noptimizer = sgd\nseed = 8\n\
                    eps_adapter = 1e-7\nse_loss = spectral_mse\nhidden = 32\nval_fraction = 0.2\n";
        apply_train_kv(&mut cfg, &parse_kv(text).unwrap()).unwrap();
        assert_eq!(cfg.weights.alpha, 0.7);
        assert_eq!(cfg.hidden, 32);
        assert_eq!(cfg.epochs, 3);
    }
}
