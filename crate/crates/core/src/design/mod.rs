//! Raster design representation on the annular wheel domain, the procedural
//! reference generator, and the augmentation transforms used for surrogate
//! training.

mod image;
mod mask;
mod pgm;
mod reference;
mod transform;

pub use image::DesignImage;
pub use mask::{AnnulusMask, PixelClass};
pub use pgm::{read_pgm, write_pgm};
pub use reference::{generate_reference, sample_reference_spec, HolePattern, ReferenceSpec};
pub use transform::{add_noise, binarize, rotate, RotationMethod};
