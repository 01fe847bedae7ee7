use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::design::image::DesignImage;
use crate::design::mask::PixelClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationMethod {
    /// Preserves binarity; multiples of 90 degrees are exact pixel
    /// permutations.
    Nearest,
    Bilinear,
}

/// Rotates the image about its center by an integer number of degrees
/// (counterclockwise in pixel coordinates). Out-of-mask pixels are re-zeroed
/// and fixed pixels forced back to 1, so the result is a valid design image.
pub fn rotate(img: &DesignImage, degrees: u32, method: RotationMethod) -> DesignImage {
    let deg = degrees % 360;
    if deg == 0 {
        return img.clone();
    }
    let g = img.resolution();
    let mut out = img.clone();

    if deg % 90 == 0 && method == RotationMethod::Nearest {
        // Exact permutation: source index for quarter-turn k.
        let k = deg / 90;
        for row in 0..g {
            for col in 0..g {
                let (sr, sc) = match k {
                    1 => (col, g - 1 - row),
                    2 => (g - 1 - row, g - 1 - col),
                    _ => (g - 1 - col, row),
                };
                out.pixels_mut()[row * g + col] = img.pixels()[sr * g + sc];
            }
        }
        out.reimpose_mask();
        return out;
    }

    let c = g as f64 / 2.0;
    let rad = (deg as f64).to_radians();
    let (sin, cos) = rad.sin_cos();
    for row in 0..g {
        for col in 0..g {
            // Inverse-rotate the destination pixel center into the source.
            let x = (col as f64 + 0.5) - c;
            let y = (row as f64 + 0.5) - c;
            let sx = cos * x + sin * y + c - 0.5;
            let sy = -sin * x + cos * y + c - 0.5;
            let v = match method {
                RotationMethod::Nearest => {
                    let sc = sx.round() as isize;
                    let sr = sy.round() as isize;
                    sample(img, sr, sc)
                }
                RotationMethod::Bilinear => {
                    let c0 = sx.floor();
                    let r0 = sy.floor();
                    let fx = (sx - c0) as f32;
                    let fy = (sy - r0) as f32;
                    let (r0, c0) = (r0 as isize, c0 as isize);
                    let v00 = sample(img, r0, c0);
                    let v01 = sample(img, r0, c0 + 1);
                    let v10 = sample(img, r0 + 1, c0);
                    let v11 = sample(img, r0 + 1, c0 + 1);
                    (1.0 - fy) * ((1.0 - fx) * v00 + fx * v01) + fy * ((1.0 - fx) * v10 + fx * v11)
                }
            };
            out.pixels_mut()[row * g + col] = v;
        }
    }
    out.reimpose_mask();
    out
}

#[inline]
fn sample(img: &DesignImage, row: isize, col: isize) -> f32 {
    let g = img.resolution() as isize;
    if row < 0 || col < 0 || row >= g || col >= g {
        0.0
    } else {
        img.pixels()[(row * g + col) as usize]
    }
}

/// Adds zero-mean Gaussian noise of the given variance to every designable
/// pixel, clamping back to [0, 1]. Deterministic for a fixed seed.
pub fn add_noise(img: &DesignImage, variance: f64, seed: u64) -> DesignImage {
    let mut out = img.clone();
    if variance <= 0.0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0f64, variance.sqrt()).expect("valid stddev");
    for &px in img.mask().designable() {
        let noisy = out.pixels()[px as usize] as f64 + normal.sample(&mut rng);
        out.pixels_mut()[px as usize] = (noisy as f32).clamp(0.0, 1.0);
    }
    out
}

/// Thresholds designable pixels to {0, 1}; fixed pixels remain 1.
pub fn binarize(img: &DesignImage, threshold: f32) -> DesignImage {
    debug_assert!(threshold > 0.0 && threshold < 1.0);
    let mut out = img.clone();
    for (px, cls) in img.mask().class().iter().enumerate() {
        if *cls == PixelClass::Designable {
            out.pixels_mut()[px] = if img.pixels()[px] >= threshold { 1.0 } else { 0.0 };
        }
    }
    out
}
