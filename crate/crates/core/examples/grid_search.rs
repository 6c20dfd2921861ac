//! Small grid search over the content-loss weights on synthetic data.
//!
//! cargo run --release --example grid_search -- [steps]

use fforge::data::synthesize_pair;
use fforge::pipeline::{grid_search, GridSpec, TrainConfig};

fn main() -> fforge::Result<()> {
    let steps = std::env::args().nth(1).map_or(20, |s| s.parse().expect("steps"));
    let train: Vec<_> = (0..8).map(|s| synthesize_pair(s, 64)).collect::<Result<_, _>>()?;
    let heldout: Vec<_> = (100..102).map(|s| synthesize_pair(s, 64)).collect::<Result<_, _>>()?;
    let base = TrainConfig::parse(&format!(
        "steps = {steps}\nbatch_size = 4\ngen_lr = 1e-3\ndisc_lr = 1e-3\n\
         gen.stage_widths = 8,16,32,64\ngen.stem_channels = 8\ngen.blocks = 1,1,1,1\n"
    ))?;
    let grid = GridSpec {
        alphas: vec![0.1, 1.0],
        betas: vec![0.3, 0.7],
        ..GridSpec::default()
    };
    let result = grid_search(&grid, &base, &train, &heldout)?;
    print!("{}", result.to_csv());
    let best = result.best();
    println!("selected alpha = {}, beta = {}", best.alpha, best.beta);
    Ok(())
}
