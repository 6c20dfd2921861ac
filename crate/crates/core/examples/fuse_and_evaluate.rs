//! Train briefly, fuse held-out pairs of a non-multiple size, and evaluate
//! the fused images from disk.
//!
//! cargo run --release --example fuse_and_evaluate -- [steps]

use fforge::data::{build_manifest, save_grayscale, synthesize_pair, write_pair, ImagePair};
use fforge::metrics::GrayImage;
use fforge::pipeline::{evaluate_report, fuse_pair, train, TrainConfig};

fn main() -> fforge::Result<()> {
    let steps = std::env::args().nth(1).map_or(30, |s| s.parse().expect("steps"));
    let work = std::env::temp_dir().join("fforge-fuse");
    let pairs: Vec<_> = (0..8).map(|s| synthesize_pair(s, 64)).collect::<Result<_, _>>()?;
    let config = TrainConfig {
        steps,
        gen_lr: 1e-3,
        disc_lr: 1e-3,
        ..TrainConfig::default()
    };
    let mut t = train(&config, &pairs)?;
    println!("trained {steps} steps, last content {:.4}", t.log.rows.last().map_or(f64::NAN, |r| r.1.content));

    // 100x70 crops: fusion reflect-pads to 128x96 and crops back.
    let data = work.join("data");
    for seed in 200..203 {
        let p = synthesize_pair(seed, 128)?;
        let crop = |img: &GrayImage| img.crop(5, 9, 100, 70);
        let pair = ImagePair::new(p.id.clone(), crop(&p.visible)?, crop(&p.infrared)?)?;
        write_pair(&data, &pair)?;
        let fused = fuse_pair(&mut t.generator, &pair)?;
        save_grayscale(&fused, work.join("fused").join(format!("{}.png", pair.id)))?;
    }
    let outcome = evaluate_report(&work.join("fused"), &build_manifest(&data)?)?;
    print!("{}", outcome.report.to_markdown());
    Ok(())
}
