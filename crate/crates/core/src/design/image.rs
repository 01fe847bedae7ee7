use std::sync::Arc;

use crate::design::mask::{AnnulusMask, PixelClass};
use crate::error::{Error, Result};

/// A G x G density raster living on an [`AnnulusMask`].
///
/// Invariants (see [`DesignImage::validate`]):
/// - every density lies in [0, 1],
/// - pixels outside the mask are exactly 0,
/// - fixed (hub/rim band) pixels are exactly 1.
#[derive(Debug, Clone)]
pub struct DesignImage {
    mask: Arc<AnnulusMask>,
    data: Vec<f32>,
}

impl DesignImage {
    /// All-void designable region (fixed bands still at 1).
    pub fn empty(mask: Arc<AnnulusMask>) -> Self {
        let mut data = vec![0.0f32; mask.resolution() * mask.resolution()];
        for &px in mask.active() {
            if mask.class()[px as usize] == PixelClass::Fixed {
                data[px as usize] = 1.0;
            }
        }
        Self { mask, data }
    }

    /// Builds an image by evaluating `f(row, col)` on designable pixels.
    /// Fixed pixels are forced to 1 and outside pixels to 0.
    pub fn from_fn(mask: Arc<AnnulusMask>, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let g = mask.resolution();
        let mut img = Self::empty(mask);
        for px in img.mask.designable().to_vec() {
            let (row, col) = (px as usize / g, px as usize % g);
            img.data[px as usize] = f(row, col).clamp(0.0, 1.0);
        }
        img
    }

    /// Wraps a raw full-grid buffer, re-imposing the mask invariants
    /// (outside -> 0, fixed -> 1, designable clamped to [0,1]).
    pub fn from_grid(mask: Arc<AnnulusMask>, grid: Vec<f32>) -> Result<Self> {
        let g = mask.resolution();
        if grid.len() != g * g {
            return Err(Error::ShapeMismatch(format!(
                "grid has {} values, expected {}",
                grid.len(),
                g * g
            )));
        }
        let mut img = Self { mask, data: grid };
        img.reimpose_mask();
        Ok(img)
    }

    /// Forces the mask invariants onto the raw buffer.
    pub(crate) fn reimpose_mask(&mut self) {
        for (px, cls) in self.mask.class().iter().enumerate() {
            self.data[px] = match cls {
                PixelClass::Outside => 0.0,
                PixelClass::Fixed => 1.0,
                PixelClass::Designable => {
                    let v = self.data[px];
                    if v.is_finite() {
                        v.clamp(0.0, 1.0)
                    } else {
                        0.0
                    }
                }
            };
        }
    }

    pub fn mask(&self) -> &Arc<AnnulusMask> {
        &self.mask
    }

    pub fn resolution(&self) -> usize {
        self.mask.resolution()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.mask.resolution() + col]
    }

    /// Sets a designable pixel; ignores writes elsewhere.
    pub fn set(&mut self, row: usize, col: usize, value: f32) {
        let g = self.mask.resolution();
        if self.mask.class()[row * g + col] == PixelClass::Designable {
            self.data[row * g + col] = value.clamp(0.0, 1.0);
        }
    }

    pub fn pixels(&self) -> &[f32] {
        &self.data
    }

    pub(crate) fn pixels_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    /// Densities of designable pixels in mask order.
    pub fn designable_values(&self) -> impl Iterator<Item = f32> + '_ {
        self.mask.designable().iter().map(|&px| self.data[px as usize])
    }

    /// Sum of designable densities (the design "volume").
    pub fn volume(&self) -> f64 {
        self.designable_values().map(|v| v as f64).sum()
    }

    /// Fraction of the designable region that is filled.
    pub fn fill_fraction(&self) -> f64 {
        self.volume() / self.mask.designable().len() as f64
    }

    /// L1 distance over designable pixels.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        debug_assert!(self.mask.same_domain(other.mask()));
        self.mask
            .designable()
            .iter()
            .map(|&px| (self.data[px as usize] - other.data[px as usize]).abs() as f64)
            .sum()
    }

    /// Mean absolute per-pixel difference over designable pixels.
    pub fn mean_abs_difference(&self, other: &Self) -> f64 {
        self.l1_distance(other) / self.mask.designable().len() as f64
    }

    /// True when every designable pixel is exactly 0 or 1.
    pub fn is_binary(&self) -> bool {
        self.designable_values().all(|v| v == 0.0 || v == 1.0)
    }

    /// Checks all three image invariants.
    pub fn validate(&self) -> Result<()> {
        let g = self.mask.resolution();
        if self.data.len() != g * g {
            return Err(Error::InvalidImage("buffer size mismatch".into()));
        }
        for (px, (&v, cls)) in self.data.iter().zip(self.mask.class()).enumerate() {
            match cls {
                PixelClass::Outside if v != 0.0 => {
                    return Err(Error::InvalidImage(format!(
                        "pixel {px} outside mask has density {v}"
                    )));
                }
                PixelClass::Fixed if v != 1.0 => {
                    return Err(Error::InvalidImage(format!(
                        "fixed pixel {px} has density {v}"
                    )));
                }
                PixelClass::Designable if !(0.0..=1.0).contains(&v) => {
                    return Err(Error::InvalidImage(format!(
                        "designable pixel {px} has density {v}"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_image_is_valid() {
        let img = DesignImage::empty(AnnulusMask::standard(32));
        img.validate().unwrap();
        assert_eq!(img.volume(), 0.0);
    }

    #[test]
    fn from_fn_respects_mask() {
        let img = DesignImage::from_fn(AnnulusMask::standard(32), |_, _| 0.5);
        img.validate().unwrap();
        assert_eq!(img.get(0, 0), 0.0);
        assert!((img.fill_fraction() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn from_grid_reimposes_invariants() {
        let mask = AnnulusMask::standard(32);
        let grid = vec![2.0f32; 32 * 32];
        let img = DesignImage::from_grid(mask, grid).unwrap();
        img.validate().unwrap();
        assert!(img.designable_values().all(|v| v == 1.0));
    }
}
