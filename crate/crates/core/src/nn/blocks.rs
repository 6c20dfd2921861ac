//! Residual units: the encoder bottleneck and the decoder transbasic block.

use rand::Rng;

use super::layers::{self, Pass};
use crate::error::Result;
use crate::tensor::{Element, Graph, ParamStore, Var};

/// Register a bottleneck block under `prefix`.
///
/// Residual path: 1x1 reduce to `cout / expansion` channels, 3x3 (stride 2
/// when downsampling), 1x1 expand to `cout`, each followed by batchnorm.
/// The shortcut is an agant layer whenever the shape changes.
pub fn add_bottleneck<T: Element, R: Rng>(
    store: &mut ParamStore<T>,
    rng: &mut R,
    prefix: &str,
    cin: usize,
    cout: usize,
    expansion: usize,
    downsample: bool,
) -> Result<()> {
    let mid = (cout / expansion.max(1)).max(1);
    layers::add_conv(store, rng, &format!("{prefix}.conv1"), cin, mid, 1, false)?;
    layers::add_batchnorm(store, &format!("{prefix}.bn1"), mid)?;
    layers::add_conv(store, rng, &format!("{prefix}.conv2"), mid, mid, 3, false)?;
    layers::add_batchnorm(store, &format!("{prefix}.bn2"), mid)?;
    layers::add_conv(store, rng, &format!("{prefix}.conv3"), mid, cout, 1, false)?;
    layers::add_batchnorm(store, &format!("{prefix}.bn3"), cout)?;
    if downsample || cin != cout {
        layers::add_agant(store, rng, &format!("{prefix}.shortcut"), cin, cout)?;
    }
    Ok(())
}

pub fn bottleneck_block<T: Element>(
    g: &mut Graph<T>,
    store: &mut ParamStore<T>,
    pass: Pass,
    prefix: &str,
    x: Var,
    downsample: bool,
) -> Result<Var> {
    let stride = if downsample { 2 } else { 1 };
    let h = layers::conv(g, store, pass, &format!("{prefix}.conv1"), x, 1, 0)?;
    let h = layers::batchnorm(g, store, pass, &format!("{prefix}.bn1"), h)?;
    let h = g.relu(h);
    let h = layers::conv(g, store, pass, &format!("{prefix}.conv2"), h, stride, 1)?;
    let h = layers::batchnorm(g, store, pass, &format!("{prefix}.bn2"), h)?;
    let h = g.relu(h);
    let h = layers::conv(g, store, pass, &format!("{prefix}.conv3"), h, 1, 0)?;
    let h = layers::batchnorm(g, store, pass, &format!("{prefix}.bn3"), h)?;
    let shortcut_name = format!("{prefix}.shortcut");
    let shortcut = if store.get(&format!("{shortcut_name}.conv.w")).is_some() {
        layers::agant(g, store, pass, &shortcut_name, x, stride)?
    } else {
        x
    };
    let y = g.add(h, shortcut)?;
    Ok(g.relu(y))
}

/// Register a transbasic block under `prefix`.
///
/// Residual path: 3x3 conv keeping `cin` channels, then either a stride-2
/// 3x3 transposed conv (upsampling) or a 3x3 conv to `cout`, each followed by
/// batchnorm. The shortcut is a stride-2 2x2 transposed conv plus batchnorm
/// when upsampling, an agant layer when only the width changes.
pub fn add_transbasic<T: Element, R: Rng>(
    store: &mut ParamStore<T>,
    rng: &mut R,
    prefix: &str,
    cin: usize,
    cout: usize,
    upsample: bool,
) -> Result<()> {
    layers::add_conv(store, rng, &format!("{prefix}.conv1"), cin, cin, 3, false)?;
    layers::add_batchnorm(store, &format!("{prefix}.bn1"), cin)?;
    if upsample {
        layers::add_conv_transpose(store, rng, &format!("{prefix}.deconv2"), cin, cout, 3, 2, false)?;
    } else {
        layers::add_conv(store, rng, &format!("{prefix}.conv2"), cin, cout, 3, false)?;
    }
    layers::add_batchnorm(store, &format!("{prefix}.bn2"), cout)?;
    if upsample {
        layers::add_conv_transpose(store, rng, &format!("{prefix}.shortcut.deconv"), cin, cout, 2, 2, false)?;
        layers::add_batchnorm(store, &format!("{prefix}.shortcut.bn"), cout)?;
    } else if cin != cout {
        layers::add_agant(store, rng, &format!("{prefix}.shortcut"), cin, cout)?;
    }
    Ok(())
}

pub fn transbasic_block<T: Element>(
    g: &mut Graph<T>,
    store: &mut ParamStore<T>,
    pass: Pass,
    prefix: &str,
    x: Var,
    upsample: bool,
) -> Result<Var> {
    let h = layers::conv(g, store, pass, &format!("{prefix}.conv1"), x, 1, 1)?;
    let h = layers::batchnorm(g, store, pass, &format!("{prefix}.bn1"), h)?;
    let h = g.relu(h);
    let h = if upsample {
        layers::conv_transpose(g, store, pass, &format!("{prefix}.deconv2"), h, 2, 1, 1)?
    } else {
        layers::conv(g, store, pass, &format!("{prefix}.conv2"), h, 1, 1)?
    };
    let h = layers::batchnorm(g, store, pass, &format!("{prefix}.bn2"), h)?;
    let shortcut = if upsample {
        let s = layers::conv_transpose(g, store, pass, &format!("{prefix}.shortcut.deconv"), x, 2, 0, 0)?;
        layers::batchnorm(g, store, pass, &format!("{prefix}.shortcut.bn"), s)?
    } else if store.get(&format!("{prefix}.shortcut.conv.w")).is_some() {
        layers::agant(g, store, pass, &format!("{prefix}.shortcut"), x, 1)?
    } else {
        x
    };
    let y = g.add(h, shortcut)?;
    Ok(g.relu(y))
}
