//! Score simple fusion rules with the full metric suite and print the report.
//!
//! cargo run --release --example metrics_report

use fforge::data::synthesize_pair;
use fforge::metrics::{evaluate, GrayImage, MetricReport};

fn main() -> fforge::Result<()> {
    let mut rows = Vec::new();
    for seed in 0..4 {
        let p = synthesize_pair(seed, 96)?;
        let (w, h) = p.visible.dims();
        let average = GrayImage::from_fn(w, h, |x, y| 0.5 * (p.visible.get(x, y) + p.infrared.get(x, y)))?;
        let max = GrayImage::from_fn(w, h, |x, y| p.visible.get(x, y).max(p.infrared.get(x, y)))?;
        rows.push(evaluate(&average, &p.visible, &p.infrared, &format!("{}-avg", p.id))?);
        rows.push(evaluate(&max, &p.visible, &p.infrared, &format!("{}-max", p.id))?);
    }
    let report = MetricReport::new(rows)?;
    print!("{}", report.to_markdown());
    Ok(())
}
