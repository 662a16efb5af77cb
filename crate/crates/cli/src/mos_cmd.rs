use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use revdict::eval::{mos_report, read_manifest, RatingMatrix};

use crate::artifacts::open;
use crate::config::existing;

pub fn run(ratings: &Path, manifest: &Path, threshold: f64, json: bool) -> Result<()> {
    let matrix = RatingMatrix::read_csv(open(existing(ratings)?)?).with_context(|| format!("reading ratings {}", ratings.display()))?;
    let items = read_manifest(open(existing(manifest)?)?).with_context(|| format!("reading manifest {}", manifest.display()))?;
    let report = mos_report(&matrix, &items, threshold)?;
    let mut out = std::io::stdout().lock();
    if json {
        serde_json::to_writer(&mut out, &report)?;
        writeln!(out)?;
    } else {
        write!(out, "{}", report.render())?;
    }
    Ok(())
}
