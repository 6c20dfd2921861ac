//! Objective fusion-quality metrics: EN, MI, SSIM, VIF and Q^AB/F.

pub mod filter;
pub mod image;
pub mod information;
pub mod qabf;
pub mod report;
pub mod ssim;
pub mod vif;

pub use image::GrayImage;
pub use information::{entropy, mutual_information, mutual_information_pair};
pub use qabf::qabf;
pub use report::{aggregate, evaluate, MetricReport, MetricRow, SourceBreakdown};
pub use ssim::{ssim_fusion, ssim_pair};
pub use vif::{vif_fusion, vif_pair};
