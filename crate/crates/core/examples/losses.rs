//! Evaluate the content and adversarial objectives on a synthetic pair.
//!
//! cargo run --release --example losses

use fforge::data::synthesize_pair;
use fforge::objectives::{content_loss, disc_loss, gen_adv_loss, AdversarialVariant, LossWeights};
use fforge::tensor::{Graph, Tensor};

fn main() -> fforge::Result<()> {
    let pair = synthesize_pair(7, 64)?;
    let mut g = Graph::<f64>::new();
    let v = g.constant(pair.visible.to_tensor());
    let i = g.constant(pair.infrared.to_tensor());
    let avg = g.add(v, i)?;
    let avg = g.scale(avg, 0.5);

    for (name, f) in [("F = V", v), ("F = I", i), ("F = (V+I)/2", avg)] {
        let t = content_loss(&mut g, f, v, i, LossWeights::default())?;
        println!(
            "{name:12} content {:.5}  mse_ir {:.5}  mse_vis {:.5}  tv {:.5}",
            g.item(t.content),
            g.item(t.mse_ir),
            g.item(t.mse_vis),
            g.item(t.tv)
        );
    }

    for p in [0.1, 0.5, 0.9] {
        let d = g.constant(Tensor::full([4, 1, 1, 1], p));
        let real = g.constant(Tensor::full([4, 1, 1, 1], 1.0 - p));
        let dl = disc_loss(&mut g, d, real)?;
        let sat = gen_adv_loss(&mut g, d, AdversarialVariant::Saturating)?;
        let ns = gen_adv_loss(&mut g, d, AdversarialVariant::NonSaturating)?;
        println!(
            "D(F) = {p}, D(V) = {:.1}: disc {:.4}  gen_adv {:.4}  non-saturating {:.4}",
            1.0 - p,
            g.item(dl),
            g.item(sat),
            g.item(ns)
        );
    }
    Ok(())
}
