use std::sync::Arc;

use crate::design::AnnulusMask;

/// Classic sensitivity filter over active elements: precomputed
/// cone-weighted neighborhoods of radius `radius` (in element units).
#[derive(Debug)]
pub struct SensitivityFilter {
    /// Flattened (neighbor active index, weight) lists per active element.
    neighbors: Vec<(u32, f64)>,
    offsets: Vec<u32>,
}

impl SensitivityFilter {
    pub fn new(mask: &Arc<AnnulusMask>, radius: f64) -> Self {
        assert!(radius > 0.0);
        let g = mask.resolution() as isize;
        let reach = radius.ceil() as isize;
        let mut neighbors = Vec::new();
        let mut offsets = Vec::with_capacity(mask.active().len() + 1);
        offsets.push(0u32);
        for &px in mask.active() {
            let (row, col) = (px as isize / g, px as isize % g);
            for dr in -reach..=reach {
                for dc in -reach..=reach {
                    let (r, c) = (row + dr, col + dc);
                    if r < 0 || c < 0 || r >= g || c >= g {
                        continue;
                    }
                    let dist = ((dr * dr + dc * dc) as f64).sqrt();
                    let w = radius - dist;
                    if w <= 0.0 {
                        continue;
                    }
                    if let Some(ai) = mask.active_index((r * g + c) as usize) {
                        neighbors.push((ai as u32, w));
                    }
                }
            }
            offsets.push(neighbors.len() as u32);
        }
        Self { neighbors, offsets }
    }

    /// Applies the filter: g_hat_e = sum_f w_ef x_f g_f / (max(x_e, 1e-3)
    /// sum_f w_ef), everything indexed over active elements.
    pub fn apply(&self, x: &[f64], g: &[f64]) -> Vec<f64> {
        assert_eq!(x.len() + 1, self.offsets.len());
        assert_eq!(x.len(), g.len());
        let mut out = Vec::with_capacity(g.len());
        for e in 0..g.len() {
            let span =
                &self.neighbors[self.offsets[e] as usize..self.offsets[e + 1] as usize];
            let mut num = 0.0;
            let mut den = 0.0;
            for &(f, w) in span {
                num += w * x[f as usize] * g[f as usize];
                den += w;
            }
            out.push(num / (x[e].max(1e-3) * den));
        }
        out
    }
}

/// One-shot convenience wrapper over [`SensitivityFilter`].
pub fn filter_sensitivities(
    mask: &Arc<AnnulusMask>,
    x: &[f64],
    g: &[f64],
    radius: f64,
) -> Vec<f64> {
    SensitivityFilter::new(mask, radius).apply(x, g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_radius_is_identity() {
        let mask = AnnulusMask::standard(32);
        let n = mask.active().len();
        let x: Vec<f64> = (0..n).map(|i| 0.2 + 0.6 * ((i % 7) as f64) / 7.0).collect();
        let g: Vec<f64> = (0..n).map(|i| -((i % 5) as f64) - 0.5).collect();
        let out = filter_sensitivities(&mask, &x, &g, 0.75);
        for (a, b) in out.iter().zip(&g) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_field_is_fixed_point() {
        let mask = AnnulusMask::standard(32);
        let n = mask.active().len();
        let x = vec![0.5f64; n];
        let g = vec![-2.0f64; n];
        let out = filter_sensitivities(&mask, &x, &g, 1.5);
        for v in out {
            assert!((v + 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_double_loop_oracle() {
        let mask = AnnulusMask::standard(32);
        let g32 = 32usize;
        let n = mask.active().len();
        let x: Vec<f64> = (0..n).map(|i| 0.05 + 0.9 * ((i * 13 % 11) as f64) / 11.0).collect();
        let g: Vec<f64> = (0..n).map(|i| -1.0 - ((i * 7 % 13) as f64) / 3.0).collect();
        let radius = 1.5;
        let out = filter_sensitivities(&mask, &x, &g, radius);

        // Brute-force double loop over all active element pairs.
        for (e, &pe) in mask.active().iter().enumerate() {
            let (er, ec) = (pe as usize / g32, pe as usize % g32);
            let mut num = 0.0;
            let mut den = 0.0;
            for (f, &pf) in mask.active().iter().enumerate() {
                let (fr, fc) = (pf as usize / g32, pf as usize % g32);
                let dist = (((er as f64 - fr as f64).powi(2)
                    + (ec as f64 - fc as f64).powi(2)) as f64)
                    .sqrt();
                let w = radius - dist;
                if w > 0.0 {
                    num += w * x[f] * g[f];
                    den += w;
                }
            }
            let oracle = num / (x[e].max(1e-3) * den);
            assert!(
                (out[e] - oracle).abs() < 1e-12,
                "element {e}: {} vs {}",
                out[e],
                oracle
            );
        }
    }
}
