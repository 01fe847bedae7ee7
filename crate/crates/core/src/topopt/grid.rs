use crate::error::{Error, Result};

/// The 11-point design-parameter grids: similarity weights c1 log-spaced
/// over [0.0005, 5.0] and force ratios c2 linearly spaced over [0.0, 0.4].
#[derive(Debug, Clone)]
pub struct ParameterGrid {
    c1: [f64; 11],
    c2: [f64; 11],
}


impl Default for ParameterGrid {
    fn default() -> Self {
        let mut c1 = [0.0; 11];
        let mut c2 = [0.0; 11];
        for i in 0..11 {
            // c1 = 0.0005 * 10^(0.4 i): geometric with ratio 10^0.4.
            c1[i] = 5e-4 * 10f64.powf(0.4 * i as f64);
            // c2 = 0.04 i, computed as an exact-decimal quotient.
            c2[i] = (4 * i) as f64 / 100.0;
        }
        Self { c1, c2 }
    }
}

impl ParameterGrid {
    /// (c1, c2) for a pair of grid indices.
    pub fn values(&self, index_c1: usize, index_c2: usize) -> Result<(f64, f64)> {
        if index_c1 >= 11 || index_c2 >= 11 {
            return Err(Error::Config(format!(
                "parameter index ({index_c1}, {index_c2}) outside 0..=10"
            )));
        }
        Ok((self.c1[index_c1], self.c2[index_c2]))
    }

    pub fn c1_values(&self) -> &[f64; 11] {
        &self.c1
    }

    pub fn c2_values(&self) -> &[f64; 11] {
        &self.c2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_exact() {
        let g = ParameterGrid::default();
        assert_eq!(g.values(0, 0).unwrap(), (0.0005, 0.0));
        assert_eq!(g.values(10, 10).unwrap(), (5.0, 0.4));
    }

    #[test]
    fn midpoint() {
        let g = ParameterGrid::default();
        let (c1, c2) = g.values(5, 5).unwrap();
        assert!((c1 - 0.05).abs() < 1e-15);
        assert!((c2 - 0.20).abs() < 1e-15);
    }

    #[test]
    fn spacing_laws() {
        let g = ParameterGrid::default();
        let ratio = 10f64.powf(0.4);
        for i in 1..11 {
            assert!((g.c1[i] / g.c1[i - 1] - ratio).abs() < 1e-12);
            assert!((g.c2[i] - g.c2[i - 1] - 0.04).abs() < 1e-15);
        }
        assert!(g.c1.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn out_of_range_rejected() {
        let g = ParameterGrid::default();
        assert!(g.values(11, 0).is_err());
        assert!(g.values(0, 11).is_err());
    }
}
