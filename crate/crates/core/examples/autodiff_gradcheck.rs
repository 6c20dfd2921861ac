//! Record a small computation, backpropagate, and compare against central
//! finite differences.
//!
//! cargo run --release --example autodiff_gradcheck

use fforge::tensor::gradcheck::{max_coordinate_error, STEP};
use fforge::tensor::{Graph, Tensor};

fn loss(g: &mut Graph<f64>, x: fforge::tensor::Var, w: fforge::tensor::Var) -> fforge::Result<fforge::tensor::Var> {
    let y = g.conv2d(x, w, None, 2, 1)?;
    let y = g.sigmoid(y);
    let t = g.total_variation(y);
    let m = g.square(y);
    let m = g.mean(m);
    g.add(t, m)
}

fn main() -> fforge::Result<()> {
    let x = Tensor::new([1, 1, 6, 6], (0..36).map(|k| ((k * 37 % 11) as f64 - 5.0) / 5.0).collect())?;
    let w = Tensor::new([2, 1, 3, 3], (0..18).map(|k| ((k * 7 % 5) as f64 - 2.0) / 3.0).collect())?;

    let mut g = Graph::new();
    let xv = g.leaf(x.clone(), true);
    let wv = g.leaf(w.clone(), true);
    let out = loss(&mut g, xv, wv)?;
    g.backward(out)?;
    println!("loss = {:.6}", g.item(out));

    let dx = g.grad(xv).expect("input gradient");
    let mut f = |probe: &Tensor<f64>| {
        let mut h = Graph::new();
        let (a, b) = (h.constant(probe.clone()), h.constant(w.clone()));
        let o = loss(&mut h, a, b).expect("forward");
        h.item(o)
    };
    let err = max_coordinate_error(&mut f, &x, &dx, None);
    println!("max relative error over {} input coordinates (step {STEP:e}): {err:.2e}", x.len());
    Ok(())
}
