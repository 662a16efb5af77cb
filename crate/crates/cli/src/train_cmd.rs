use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use revdict::dataset::DatasetSplit;
use revdict::model::{Checkpoint, ModelConfig, ModelParameters};
use revdict::train::train;

use crate::artifacts::{self, with_targets, write_file, Prepared};
use crate::config::RunConfig;

/// Checks that a checkpoint was trained on the prepared data it is used with.
pub fn check_compatible(ckpt: &Checkpoint, prepared: &Prepared, fingerprint: u64, path: &Path) -> Result<()> {
    let tokens: Vec<&str> = prepared.tokens.tokens().collect();
    if ckpt.model.vocab().iter().map(String::as_str).ne(tokens.iter().copied()) {
        bail!(
            "checkpoint {} has a different input vocabulary ({} tokens) from the prepared data ({} tokens)",
            path.display(),
            ckpt.model.vocab().len(),
            tokens.len()
        );
    }
    match ckpt.output_fingerprint {
        Some(f) if f != fingerprint => bail!("checkpoint {} was trained against different output word vectors", path.display()),
        None => warn!("checkpoint {} records no output fingerprint", path.display()),
        _ => {}
    }
    Ok(())
}

pub fn run(cfg: &RunConfig, checkpoint: &Path, resume: bool) -> Result<()> {
    let prepared = Prepared::load(&cfg.paths.output)?;
    let vectors = artifacts::vectors(cfg, &prepared)?;
    let fingerprint = vectors.targets.fingerprint();
    let arch = cfg.model.architecture;

    let model = if resume {
        let ckpt = Checkpoint::load(checkpoint).with_context(|| format!("loading checkpoint {}", checkpoint.display()))?;
        check_compatible(&ckpt, &prepared, fingerprint, checkpoint)?;
        if ckpt.model.config.architecture != arch {
            bail!("checkpoint {} holds a {} model, not {arch}", checkpoint.display(), ckpt.model.config.architecture);
        }
        info!("resuming from {}", checkpoint.display());
        ckpt.model
    } else {
        let config = ModelConfig {
            architecture: arch,
            dim: vectors.targets.dim(),
            input_vocab_size: prepared.tokens.len(),
            output_word_count: vectors.targets.len(),
            score_reduction: cfg.model.score_reduction,
        };
        let vocab = prepared.tokens.tokens().map(str::to_owned).collect();
        ModelParameters::init(config, vocab, &vectors.inputs, cfg.seed)?
    };

    let split = DatasetSplit {
        train: with_targets(&prepared.train, &vectors.targets, "train"),
        dev: with_targets(&prepared.dev, &vectors.targets, "dev"),
        test: Vec::new(),
        seed: cfg.seed,
    };
    let mut stdout = std::io::stdout().lock();
    let (best, report) = train(model, &split, &vectors.targets, &cfg.train_config(), |r| {
        let _ = writeln!(stdout, "epoch {:>3}  train {:.6}  dev {:.6}", r.epoch, r.train_loss, r.dev_loss);
    })?;
    writeln!(
        stdout,
        "best epoch {} (dev {:.6}), stopped by {:?}",
        report.best_epoch, report.best_dev_loss, report.stop_reason
    )?;

    if let Some(dir) = checkpoint.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Checkpoint {
        model: best,
        output_fingerprint: Some(fingerprint),
    }
    .save(checkpoint)
    .with_context(|| format!("writing checkpoint {}", checkpoint.display()))?;
    let log_path = cfg.paths.output.join(format!("{arch}.train.jsonl"));
    write_file(&log_path, |w| report.write_jsonl(w))?;
    info!("wrote {} and {}", checkpoint.display(), log_path.display());
    Ok(())
}
