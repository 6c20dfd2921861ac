pub mod data;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod objectives;
pub mod pipeline;
pub mod tensor;

pub use error::{Error, Result};
