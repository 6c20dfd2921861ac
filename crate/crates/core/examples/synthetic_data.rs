//! Write a small synthetic dataset, scan it into a manifest with a held-out
//! split, and cut training patches.
//!
//! cargo run --release --example synthetic_data -- [out_dir]

use fforge::data::{build_manifest, sample_patches, synthesize_pair, write_pair, PatchSpec, Split};
use fforge::metrics::entropy;

fn main() -> fforge::Result<()> {
    let root = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("fforge-synth"), Into::into);
    for seed in 0..6 {
        let pair = synthesize_pair(seed, 128)?;
        println!(
            "{}: EN(vis) {:.3}  EN(ir) {:.3}",
            pair.id,
            entropy(&pair.visible),
            entropy(&pair.infrared)
        );
        write_pair(&root, &pair)?;
    }

    let mut manifest = build_manifest(&root)?;
    manifest.assign_splits(0.25)?;
    print!("{}", manifest.to_text());
    manifest.save(root.join("manifest.tsv"))?;

    let train = manifest.load_split(Split::Train)?;
    let patches = sample_patches(&train[0], &PatchSpec::default())?;
    let ids: Vec<_> = patches.iter().take(5).map(|p| p.id.as_str()).collect();
    println!("{} patches from {}, first: {ids:?}", patches.len(), train[0].id);
    println!("dataset written to {}", root.display());
    Ok(())
}
