use crate::error::{Error, Result};
use crate::metrics::GrayImage;

/// A registered visible/infrared pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ImagePair {
    pub id: String,
    pub visible: GrayImage,
    pub infrared: GrayImage,
}

impl ImagePair {
    pub fn new(id: impl Into<String>, visible: GrayImage, infrared: GrayImage) -> Result<Self> {
        let id = id.into();
        if visible.dims() != infrared.dims() {
            return Err(Error::Input(format!(
                "pair {id}: visible is {:?} but infrared is {:?}",
                visible.dims(),
                infrared.dims()
            )));
        }
        Ok(Self { id, visible, infrared })
    }

    pub fn width(&self) -> usize {
        self.visible.width()
    }

    pub fn height(&self) -> usize {
        self.visible.height()
    }
}
