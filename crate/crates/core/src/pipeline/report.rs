//! Metric reports over a directory of fused images.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::data::{load_grayscale, DatasetManifest};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricReport, MetricRow};

/// `fused/<id>.png`, falling back to `fused/<id>.pgm`.
pub fn fused_path(fused: &Path, id: &str) -> Option<PathBuf> {
    ["png", "pgm"]
        .iter()
        .map(|ext| fused.join(format!("{id}.{ext}")))
        .find(|p| p.is_file())
}

#[derive(Clone, Debug)]
pub struct EvaluationOutcome {
    pub report: MetricReport,
    /// Manifest ids with no fused image.
    pub missing: Vec<String>,
}

/// Score every manifest pair that has a fused image. Rows follow manifest order.
pub fn evaluate_report(fused: &Path, manifest: &DatasetManifest) -> Result<EvaluationOutcome> {
    let mut missing = Vec::new();
    let mut jobs = Vec::new();
    for e in &manifest.entries {
        match fused_path(fused, &e.id) {
            Some(p) => jobs.push((e, p)),
            None => missing.push(e.id.clone()),
        }
    }
    if jobs.is_empty() {
        return Err(Error::Dataset(format!(
            "no fused images for any manifest id under {}",
            fused.display()
        )));
    }
    let rows: Vec<MetricRow> = jobs
        .par_iter()
        .map(|(e, path)| {
            let pair = manifest.load_pair(e)?;
            let f = load_grayscale(path)?;
            evaluate(&f, &pair.visible, &pair.infrared, &e.id)
        })
        .collect::<Result<_>>()?;
    Ok(EvaluationOutcome {
        report: MetricReport::new(rows)?,
        missing,
    })
}

/// Write `{prefix}.csv` and `{prefix}.md`.
pub fn write_report(report: &MetricReport, prefix: &Path) -> Result<(PathBuf, PathBuf)> {
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let name = prefix
        .file_name()
        .ok_or_else(|| Error::Usage(format!("report prefix {} has no file name", prefix.display())))?
        .to_string_lossy()
        .into_owned();
    let csv = prefix.with_file_name(format!("{name}.csv"));
    let md = prefix.with_file_name(format!("{name}.md"));
    std::fs::write(&csv, report.to_csv())?;
    std::fs::write(&md, report.to_markdown())?;
    Ok((csv, md))
}
