/// Plane-stress stiffness matrix of a unit-square bilinear quadrilateral,
/// integrated with 2x2 Gauss quadrature (exact for this element).
///
/// Element nodes are ordered (0,0), (1,0), (1,1), (0,1) in local (x, y)
/// coordinates, two DOFs (ux, uy) per node.
pub fn element_stiffness(e: f64, nu: f64) -> [[f64; 8]; 8] {
    assert!(e > 0.0, "Young's modulus must be positive");
    assert!((0.0..0.5).contains(&nu), "Poisson ratio must be in [0, 0.5)");

    // Plane-stress constitutive matrix.
    let f = e / (1.0 - nu * nu);
    let d = [
        [f, f * nu, 0.0],
        [f * nu, f, 0.0],
        [0.0, 0.0, f * (1.0 - nu) / 2.0],
    ];

    // Node positions on the unit square, matching the DOF ordering.
    const XN: [f64; 4] = [0.0, 1.0, 1.0, 0.0];
    const YN: [f64; 4] = [0.0, 0.0, 1.0, 1.0];

    let gp = 1.0 / 3.0f64.sqrt();
    let mut ke = [[0.0f64; 8]; 8];
    for &xi in &[-gp, gp] {
        for &eta in &[-gp, gp] {
            // Shape-function derivatives w.r.t. local coords; the map
            // x = (xi+1)/2 gives dN/dx = 2 dN/dxi and |J| = 1/4.
            let mut dndx = [0.0f64; 4];
            let mut dndy = [0.0f64; 4];
            for k in 0..4 {
                let sx = 2.0 * XN[k] - 1.0; // +-1 per corner
                let sy = 2.0 * YN[k] - 1.0;
                dndx[k] = 2.0 * 0.25 * sx * (1.0 + sy * eta);
                dndy[k] = 2.0 * 0.25 * sy * (1.0 + sx * xi);
            }
            // B matrix columns: [dN/dx 0; 0 dN/dy; dN/dy dN/dx] per node.
            let mut b = [[0.0f64; 8]; 3];
            for k in 0..4 {
                b[0][2 * k] = dndx[k];
                b[1][2 * k + 1] = dndy[k];
                b[2][2 * k] = dndy[k];
                b[2][2 * k + 1] = dndx[k];
            }
            let detj_w = 0.25; // |J| * unit Gauss weight
            for i in 0..8 {
                for j in 0..8 {
                    let mut acc = 0.0;
                    for r in 0..3 {
                        for s in 0..3 {
                            acc += b[r][i] * d[r][s] * b[s][j];
                        }
                    }
                    ke[i][j] += acc * detj_w;
                }
            }
        }
    }
    // Symmetrize away quadrature round-off so KE == KE^T bit-exactly.
    for i in 0..8 {
        for j in 0..i {
            let v = 0.5 * (ke[i][j] + ke[j][i]);
            ke[i][j] = v;
            ke[j][i] = v;
        }
    }
    ke
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed-form plane-stress Q4 stiffness (the classic compliance-code
    /// formula); independent oracle for the quadrature implementation.
    fn closed_form(e: f64, nu: f64) -> [[f64; 8]; 8] {
        let k = [
            0.5 - nu / 6.0,
            0.125 + nu / 8.0,
            -0.25 - nu / 12.0,
            -0.125 + 3.0 * nu / 8.0,
            -0.25 + nu / 12.0,
            -0.125 - nu / 8.0,
            nu / 6.0,
            0.125 - 3.0 * nu / 8.0,
        ];
        let idx: [[usize; 8]; 8] = [
            [0, 1, 2, 3, 4, 5, 6, 7],
            [1, 0, 7, 6, 5, 4, 3, 2],
            [2, 7, 0, 5, 6, 3, 4, 1],
            [3, 6, 5, 0, 7, 2, 1, 4],
            [4, 5, 6, 7, 0, 1, 2, 3],
            [5, 4, 3, 2, 1, 0, 7, 6],
            [6, 3, 4, 1, 2, 7, 0, 5],
            [7, 2, 1, 4, 3, 6, 5, 0],
        ];
        let mut ke = [[0.0; 8]; 8];
        for i in 0..8 {
            for j in 0..8 {
                ke[i][j] = e / (1.0 - nu * nu) * k[idx[i][j]];
            }
        }
        ke
    }

    #[test]
    fn matches_closed_form_oracle() {
        let ke = element_stiffness(1.0, 0.3);
        let oracle = closed_form(1.0, 0.3);
        for i in 0..8 {
            for j in 0..8 {
                assert!(
                    (ke[i][j] - oracle[i][j]).abs() < 1e-9,
                    "entry ({i},{j}): {} vs {}",
                    ke[i][j],
                    oracle[i][j]
                );
            }
        }
        // Spot value from the closed form at E=1, nu=0.3.
        assert!((ke[0][0] - 0.45 / 0.91).abs() < 1e-9);
    }

    #[test]
    fn symmetric_and_rank_five() {
        let ke = element_stiffness(1.0, 0.3);
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(ke[i][j], ke[j][i]);
            }
        }
        // Rigid x- and y-translations are in the nullspace: row sums over
        // each translational DOF block vanish.
        for i in 0..8 {
            let sx: f64 = (0..4).map(|k| ke[i][2 * k]).sum();
            let sy: f64 = (0..4).map(|k| ke[i][2 * k + 1]).sum();
            assert!(sx.abs() < 1e-12 && sy.abs() < 1e-12);
        }
        // Rank 5: three rigid-body modes in 2D. Gaussian elimination with
        // partial pivoting, counting nonzero pivots.
        let mut a = ke;
        let mut rank = 0;
        for col in 0..8 {
            let piv = (rank..8).max_by(|&p, &q| {
                a[p][col].abs().partial_cmp(&a[q][col].abs()).unwrap()
            });
            let piv = piv.unwrap();
            if a[piv][col].abs() < 1e-9 {
                continue;
            }
            a.swap(rank, piv);
            for r in rank + 1..8 {
                let f = a[r][col] / a[rank][col];
                for c in col..8 {
                    a[r][c] -= f * a[rank][c];
                }
            }
            rank += 1;
        }
        assert_eq!(rank, 5);
    }

    #[test]
    fn scales_linearly_with_modulus() {
        let a = element_stiffness(1.0, 0.25);
        let b = element_stiffness(2.5, 0.25);
        for i in 0..8 {
            for j in 0..8 {
                assert!((b[i][j] - 2.5 * a[i][j]).abs() < 1e-12);
            }
        }
    }
}
