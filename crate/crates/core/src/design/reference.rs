use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::design::image::DesignImage;
use crate::design::mask::AnnulusMask;
use crate::error::{Error, Result};

/// Circular voids punched into the spokes, repeated once per spoke sector so
/// the n-fold rotational symmetry of the wheel is preserved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolePattern {
    /// Holes per spoke sector (total holes = per_sector * spoke_count).
    pub per_sector: u32,
    /// Hole radius in pixels.
    pub radius: f64,
}

/// Parametric spoke-wheel reference design.
///
/// Fully procedural substitute for a crawled wheel-photo corpus: spokes of a
/// given width fan out from the hub, optionally curved (`twist`) and pierced
/// by a symmetric hole pattern. Rasterization is deterministic; `seed` only
/// controls the angular phase of the hole pattern within each sector.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSpec {
    pub spoke_count: u32,
    /// Spoke width in pixels (chord width, roughly constant over the radius).
    pub spoke_width: f64,
    /// Total angular sweep, in degrees, of the spoke centerline from hub to
    /// rim; 0 gives straight spokes.
    pub twist: f64,
    pub hole_pattern: Option<HolePattern>,
    pub seed: u64,
}

impl ReferenceSpec {
    pub fn validate(&self, mask: &AnnulusMask) -> Result<()> {
        if self.spoke_count < 2 {
            return Err(Error::InvalidSpec(format!(
                "spoke_count must be >= 2, got {}",
                self.spoke_count
            )));
        }
        if self.spoke_width < 1.0 {
            return Err(Error::InvalidSpec(format!(
                "spoke_width {} below one pixel is not rasterizable",
                self.spoke_width
            )));
        }
        // Spokes must not merge into a solid disc at the outer designable
        // radius, otherwise the fill fraction degenerates to 1.
        let sector = PI / self.spoke_count as f64;
        let r_outer = mask.r_out() - mask.rim_band();
        if (self.spoke_width / 2.0) / r_outer >= sector {
            return Err(Error::InvalidSpec(format!(
                "{} spokes of width {} merge at the rim",
                self.spoke_count, self.spoke_width
            )));
        }
        if let Some(h) = self.hole_pattern {
            if h.per_sector == 0 || h.radius <= 0.0 {
                return Err(Error::InvalidSpec("degenerate hole pattern".into()));
            }
        }
        Ok(())
    }
}

/// Smallest absolute angular difference between two angles, in radians.
fn ang_dist(a: f64, b: f64) -> f64 {
    let mut d = (a - b) % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    }
    if d < -PI {
        d += 2.0 * PI;
    }
    d.abs()
}

/// Rasterizes a binary spoke-wheel design on `mask`.
///
/// The design has `spoke_count`-fold rotational symmetry (up to
/// rasterization) and, with zero twist, one spoke pointing straight down so
/// straight-spoke wheels are mirror-symmetric about the vertical axis.
pub fn generate_reference(spec: &ReferenceSpec, mask: &Arc<AnnulusMask>) -> Result<DesignImage> {
    spec.validate(mask)?;
    let n = spec.spoke_count as f64;
    let sector = 2.0 * PI / n;
    // Base phase puts one spoke on the downward vertical (+y) axis.
    let phase = PI / 2.0;
    let twist_rad = spec.twist.to_radians();
    let r_in = mask.r_in();
    let r_span = (mask.r_out() - mask.r_in()).max(1e-9);

    // Hole centers sit on the mid-radius circle of the designable ring; the
    // phase within each sector comes from the seed.
    let holes: Vec<(f64, f64)> = match spec.hole_pattern {
        None => Vec::new(),
        Some(h) => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let hole_r = 0.5 * ((r_in + mask.hub_band()) + (mask.r_out() - mask.rim_band()));
            // Fraction of the sub-sector, kept away from the sector edges so
            // holes land between/inside spokes rather than on the seam.
            let frac: f64 = rng.gen_range(0.25..0.75);
            let mut centers = Vec::new();
            for s in 0..spec.spoke_count {
                for k in 0..h.per_sector {
                    let a = phase
                        + sector * s as f64
                        + sector * (k as f64 + frac) / h.per_sector as f64
                        + twist_rad * (hole_r - r_in) / r_span;
                    centers.push((hole_r * a.cos(), hole_r * a.sin()));
                }
            }
            centers
        }
    };

    let g = mask.resolution();
    let c = g as f64 / 2.0;
    let img = DesignImage::from_fn(mask.clone(), |row, col| {
        let dx = (col as f64 + 0.5) - c;
        let dy = (row as f64 + 0.5) - c;
        let r = (dx * dx + dy * dy).sqrt();
        let theta = dy.atan2(dx);
        // Spoke centerlines rotate linearly with radius (twist).
        let local = theta - phase - twist_rad * (r - r_in) / r_span;
        let nearest = (local / sector).round() * sector;
        let half_angle = (spec.spoke_width / 2.0) / r.max(1.0);
        let mut solid = ang_dist(local, nearest) <= half_angle;
        if solid {
            for &(hx, hy) in &holes {
                let ddx = dx - hx;
                let ddy = dy - hy;
                if ddx * ddx + ddy * ddy <= spec.hole_pattern.unwrap().radius.powi(2) {
                    solid = false;
                    break;
                }
            }
        }
        if solid {
            1.0
        } else {
            0.0
        }
    });
    Ok(img)
}

/// Samples a varied reference spec from a seeded stream; used by `gen-refs`.
pub fn sample_reference_spec(rng: &mut ChaCha8Rng) -> ReferenceSpec {
    let spoke_count = rng.gen_range(3..=8u32);
    let spoke_width = rng.gen_range(2.5..=5.5);
    let twist = if rng.gen_bool(0.35) {
        0.0
    } else {
        let t: f64 = rng.gen_range(15.0..=70.0);
        if rng.gen_bool(0.5) {
            t
        } else {
            -t
        }
    };
    let hole_pattern = rng.gen_bool(0.35).then(|| HolePattern {
        per_sector: 1,
        radius: rng.gen_range(1.6..=2.8),
    });
    ReferenceSpec {
        spoke_count,
        spoke_width,
        twist,
        hole_pattern,
        seed: rng.gen(),
    }
}
