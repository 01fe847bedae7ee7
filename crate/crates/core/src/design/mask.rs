use std::sync::Arc;

use crate::error::{Error, Result};

/// Classification of a pixel on the wheel domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelClass {
    /// Outside the annulus; density is always 0 and no element exists there.
    Outside,
    /// Hub or rim band; density is always 1, the element is part of the mesh
    /// but never updated by the optimizer.
    Fixed,
    /// Free design element.
    Designable,
}

/// Annular wheel domain on a G x G pixel grid.
///
/// Pixels are classified by the distance of their center to the image
/// center. Radii are in pixel units. The hub band (inner ring) and rim band
/// (outer ring) are fixed at full density; the optimizer only touches the
/// designable ring between them.
#[derive(Debug)]
pub struct AnnulusMask {
    g: usize,
    r_in: f64,
    r_out: f64,
    hub_band: f64,
    rim_band: f64,
    class: Vec<PixelClass>,
    /// Pixel indices (row-major) of designable pixels, in row-major order.
    designable: Vec<u32>,
    /// Pixel indices of active (designable or fixed) pixels, row-major order.
    active: Vec<u32>,
    /// Per-pixel index into `active`, or u32::MAX when outside.
    active_lookup: Vec<u32>,
}

impl AnnulusMask {
    pub fn new(g: usize, r_in: f64, r_out: f64, hub_band: f64, rim_band: f64) -> Result<Arc<Self>> {
        if g < 8 {
            return Err(Error::Config(format!("mask resolution {g} too small")));
        }
        if !(r_in > 0.0 && r_in < r_out && r_out <= g as f64 / 2.0) {
            return Err(Error::Config(format!(
                "annulus radii must satisfy 0 < r_in < r_out <= G/2, got r_in={r_in}, r_out={r_out}, G={g}"
            )));
        }
        if hub_band < 0.0 || rim_band < 0.0 || r_in + hub_band >= r_out - rim_band {
            return Err(Error::Config(
                "hub/rim bands leave no designable ring".into(),
            ));
        }
        let mut class = vec![PixelClass::Outside; g * g];
        let mut designable = Vec::new();
        let mut active = Vec::new();
        let mut active_lookup = vec![u32::MAX; g * g];
        let c = g as f64 / 2.0;
        for row in 0..g {
            for col in 0..g {
                let dx = (col as f64 + 0.5) - c;
                let dy = (row as f64 + 0.5) - c;
                let r = (dx * dx + dy * dy).sqrt();
                let idx = row * g + col;
                if r < r_in || r > r_out {
                    continue;
                }
                let cls = if r < r_in + hub_band || r > r_out - rim_band {
                    PixelClass::Fixed
                } else {
                    PixelClass::Designable
                };
                class[idx] = cls;
                active_lookup[idx] = active.len() as u32;
                active.push(idx as u32);
                if cls == PixelClass::Designable {
                    designable.push(idx as u32);
                }
            }
        }
        Ok(Arc::new(Self {
            g,
            r_in,
            r_out,
            hub_band,
            rim_band,
            class,
            designable,
            active,
            active_lookup,
        }))
    }

    /// Default wheel domain: r_in = 0.15 G, r_out = 0.48 G, 2-pixel bands.
    pub fn standard(g: usize) -> Arc<Self> {
        Self::new(g, 0.15 * g as f64, 0.48 * g as f64, 2.0, 2.0)
            .expect("standard mask parameters are valid")
    }

    pub fn resolution(&self) -> usize {
        self.g
    }

    pub fn r_in(&self) -> f64 {
        self.r_in
    }

    pub fn r_out(&self) -> f64 {
        self.r_out
    }

    pub fn hub_band(&self) -> f64 {
        self.hub_band
    }

    pub fn rim_band(&self) -> f64 {
        self.rim_band
    }

    #[inline]
    pub fn class_at(&self, row: usize, col: usize) -> PixelClass {
        self.class[row * self.g + col]
    }

    #[inline]
    pub fn class(&self) -> &[PixelClass] {
        &self.class
    }

    /// Row-major indices of designable pixels.
    pub fn designable(&self) -> &[u32] {
        &self.designable
    }

    /// Row-major indices of active (designable + fixed) pixels.
    pub fn active(&self) -> &[u32] {
        &self.active
    }

    /// Index of a pixel within the active list, if active.
    #[inline]
    pub fn active_index(&self, pixel: usize) -> Option<usize> {
        let v = self.active_lookup[pixel];
        (v != u32::MAX).then_some(v as usize)
    }

    /// Polar coordinates of a pixel center relative to the image center:
    /// (radius in pixels, angle in radians measured from the +x axis with y
    /// pointing down the rows).
    pub fn polar(&self, row: usize, col: usize) -> (f64, f64) {
        let c = self.g as f64 / 2.0;
        let dx = (col as f64 + 0.5) - c;
        let dy = (row as f64 + 0.5) - c;
        ((dx * dx + dy * dy).sqrt(), dy.atan2(dx))
    }

    /// Two masks describe the same domain.
    pub fn same_domain(&self, other: &Self) -> bool {
        self.g == other.g
            && self.r_in == other.r_in
            && self.r_out == other.r_out
            && self.hub_band == other.hub_band
            && self.rim_band == other.rim_band
    }
}
