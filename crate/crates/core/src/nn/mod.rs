//! Network definitions: residual blocks, the fusion generator and the discriminator.

pub mod blocks;
pub mod discriminator;
pub mod generator;
pub mod layers;

pub use discriminator::{build_discriminator, DiscriminatorConfig, DiscriminatorParams};
pub use generator::{
    build_generator, fuse_latents, Branch, GeneratorConfig, GeneratorParams, LatentFusion, StageFeatures,
};
pub use layers::Pass;
