//! Save a trained model, reload it, and confirm the reloaded generator fuses
//! bit-identically.
//!
//! cargo run --release --example checkpoint_roundtrip

use fforge::data::synthesize_pair;
use fforge::pipeline::{fuse_values, load_networks, train, TrainConfig};
use fforge::tensor::checkpoint;

fn main() -> fforge::Result<()> {
    let pairs: Vec<_> = (0..4).map(|s| synthesize_pair(s, 64)).collect::<Result<_, _>>()?;
    let config = TrainConfig {
        steps: 5,
        batch_size: 4,
        ..TrainConfig::default()
    };
    let mut t = train(&config, &pairs)?;
    let path = std::env::temp_dir().join("fforge-roundtrip.ffc");
    t.save_checkpoint(&path)?;

    let records = checkpoint::load(&path)?;
    let bytes = std::fs::metadata(&path)?.len();
    println!("{} records, {bytes} bytes in {}", records.len(), path.display());
    for r in records.iter().take(3) {
        println!("  {} {:?}", r.name, r.tensor.shape());
    }

    let (restored_config, mut gen, disc) = load_networks(&path)?;
    assert_eq!(restored_config, t.config);
    assert_eq!(disc.store, t.discriminator.store);
    let probe = synthesize_pair(99, 96)?;
    let a = fuse_values(&mut t.generator, &probe)?;
    let b = fuse_values(&mut gen, &probe)?;
    let identical = a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits());
    println!("reloaded generator output bit-identical: {identical}");
    Ok(())
}
