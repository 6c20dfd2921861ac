//! Per-image metric rows, averaging, and CSV / Markdown report rendering.

use std::fmt::Write as _;

use super::image::GrayImage;
use super::information::{entropy, mutual_information_pair};
use super::qabf::qabf;
use super::ssim::ssim_pair;
use super::vif::vif_pair;
use crate::error::{Error, Result};

pub const AVERAGE_ID: &str = "Average";

/// Per-source terms behind the fused MI, SSIM and VIF values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceBreakdown {
    pub mi_vis: f64,
    pub mi_ir: f64,
    pub ssim_vis: f64,
    pub ssim_ir: f64,
    pub vif_vis: f64,
    pub vif_ir: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub image_id: String,
    pub vif: f64,
    pub qabf: f64,
    pub ssim: f64,
    pub mi: f64,
    pub en: f64,
    pub breakdown: Option<SourceBreakdown>,
}

impl MetricRow {
    pub fn new(image_id: impl Into<String>, vif: f64, qabf: f64, ssim: f64, mi: f64, en: f64) -> Self {
        Self {
            image_id: image_id.into(),
            vif,
            qabf,
            ssim,
            mi,
            en,
            breakdown: None,
        }
    }

    /// Values in report column order: VIF, Q^AB/F, SSIM, MI, EN.
    pub fn values(&self) -> [f64; 5] {
        [self.vif, self.qabf, self.ssim, self.mi, self.en]
    }
}

/// Score fused image `f` against its sources.
///
/// MI and VIF sum the visible and infrared terms; SSIM averages them.
pub fn evaluate(f: &GrayImage, v: &GrayImage, i: &GrayImage, image_id: &str) -> Result<MetricRow> {
    let b = SourceBreakdown {
        mi_vis: mutual_information_pair(f, v)?,
        mi_ir: mutual_information_pair(f, i)?,
        ssim_vis: ssim_pair(f, v)?,
        ssim_ir: ssim_pair(f, i)?,
        vif_vis: vif_pair(v, f)?,
        vif_ir: vif_pair(i, f)?,
    };
    Ok(MetricRow {
        image_id: image_id.to_owned(),
        vif: b.vif_vis + b.vif_ir,
        qabf: qabf(v, i, f)?,
        ssim: (b.ssim_vis + b.ssim_ir) / 2.0,
        mi: b.mi_vis + b.mi_ir,
        en: entropy(f),
        breakdown: Some(b),
    })
}

/// Column-wise arithmetic mean, labelled [`AVERAGE_ID`].
pub fn aggregate(rows: &[MetricRow]) -> Result<MetricRow> {
    if rows.is_empty() {
        return Err(Error::Usage("cannot average an empty set of metric rows".into()));
    }
    let n = rows.len() as f64;
    let mut sums = [0.0; 5];
    for r in rows {
        for (s, v) in sums.iter_mut().zip(r.values()) {
            *s += v;
        }
    }
    let [vif, qabf, ssim, mi, en] = sums.map(|s| s / n);
    Ok(MetricRow::new(AVERAGE_ID, vif, qabf, ssim, mi, en))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
    pub average: MetricRow,
}

const FOOTER: &str = "\
MI and VIF are summed over the visible and infrared sources; SSIM is their mean. \
EN and MI use 256-bin histograms (log base 2). VIF is the pixel-domain multi-scale variant.";

impl MetricReport {
    pub fn new(rows: Vec<MetricRow>) -> Result<Self> {
        let average = aggregate(&rows)?;
        Ok(Self { rows, average })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("image,VIF,QABF,SSIM,MI,EN\n");
        for r in self.rows.iter().chain(std::iter::once(&self.average)) {
            let [a, b, c, d, e] = r.values();
            let _ = writeln!(out, "{},{a},{b},{c},{d},{e}", r.image_id);
        }
        out
    }

    /// Aligned Markdown table with four decimals per value.
    pub fn to_markdown(&self) -> String {
        let header = ["", "VIF", "Q^AB/F", "SSIM", "MI", "EN"];
        let mut cells: Vec<[String; 6]> = vec![header.map(String::from)];
        for r in self.rows.iter().chain(std::iter::once(&self.average)) {
            let v = r.values().map(|x| format!("{x:.4}"));
            cells.push([
                r.image_id.clone(),
                v[0].clone(),
                v[1].clone(),
                v[2].clone(),
                v[3].clone(),
                v[4].clone(),
            ]);
        }
        let widths: Vec<usize> = (0..6)
            .map(|c| cells.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
            .collect();
        let line = |row: &[String; 6]| {
            let parts: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (s, &w))| if c == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") })
                .collect();
            format!("| {} |\n", parts.join(" | "))
        };
        let mut out = line(&cells[0]);
        let rule: Vec<String> = widths
            .iter()
            .enumerate()
            .map(|(c, &w)| if c == 0 { "-".repeat(w) } else { format!("{}:", "-".repeat(w - 1)) })
            .collect();
        let _ = writeln!(out, "| {} |", rule.join(" | "));
        for row in &cells[1..] {
            out.push_str(&line(row));
        }
        let _ = write!(out, "\n{FOOTER}\n");
        out
    }
}
