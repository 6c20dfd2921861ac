//! Train on seeded synthetic pairs and print the loss log.
//!
//! cargo run --release --example train_smoke -- [steps] [lr]

use std::time::Instant;

use fforge::data::synthesize_pair;
use fforge::pipeline::{train, TrainConfig};

fn main() -> fforge::Result<()> {
    let mut args = std::env::args().skip(1);
    let steps = args.next().map_or(200, |s| s.parse().expect("steps"));
    let lr: f64 = args.next().map_or(1e-3, |s| s.parse().expect("lr"));
    let pairs: Vec<_> = (0..16).map(|s| synthesize_pair(s, 64)).collect::<Result<_, _>>()?;
    let config = TrainConfig {
        steps,
        gen_lr: lr,
        disc_lr: lr,
        ..TrainConfig::default()
    };
    let t0 = Instant::now();
    let t = train(&config, &pairs)?;
    for (step, r) in &t.log.rows {
        if *step == 1 || step % 10 == 0 {
            println!("{}", r.csv_row(*step));
        }
    }
    println!("{} steps in {:.1}s", steps, t0.elapsed().as_secs_f64());
    Ok(())
}
