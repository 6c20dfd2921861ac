//! Build the fusion generator and discriminator, print their sizes and run
//! one forward pass in each batchnorm mode.
//!
//! cargo run --release --example generator_forward

use fforge::data::synthesize_pair;
use fforge::nn::{build_discriminator, build_generator, DiscriminatorConfig, GeneratorConfig, Pass};
use fforge::tensor::Graph;

fn main() -> fforge::Result<()> {
    let mut gen = build_generator::<f32>(&GeneratorConfig::default(), 0)?;
    let mut disc = build_discriminator::<f32>(&DiscriminatorConfig::default(), 1)?;
    println!(
        "generator: {} tensors, {} trainable values",
        gen.store.len(),
        gen.store.trainable_count()
    );
    println!(
        "discriminator: {} tensors, {} trainable values, fc inputs {}",
        disc.store.len(),
        disc.store.trainable_count(),
        disc.config.fc_inputs()
    );

    let pair = synthesize_pair(3, 64)?;
    for (label, pass) in [("train", Pass::train()), ("eval", Pass::eval())] {
        let mut g = Graph::new();
        let v = g.constant(pair.visible.to_tensor());
        let i = g.constant(pair.infrared.to_tensor());
        let (_, _, fused) = gen.encode(&mut g, pass, v, i)?;
        let shapes: Vec<_> = fused.iter().map(|&f| g.shape(f)).collect();
        let f = gen.forward(&mut g, pass, v, i)?;
        let d = disc.forward(&mut g, pass, f)?;
        let data = g.value(f).data();
        let (lo, hi) = data.iter().fold((1.0f32, 0.0f32), |(l, h), &x| (l.min(x), h.max(x)));
        println!("{label}: fused levels {shapes:?}");
        println!("{label}: F {:?} in [{lo:.4}, {hi:.4}], D(F) = {:.4}", g.shape(f), g.item(d));
    }
    Ok(())
}
