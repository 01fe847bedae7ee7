use crate::design::DesignImage;
use crate::error::{Error, Result};
use crate::fem::mesh::{Mesh, NO_DOF};

/// Diagnostics from a linear solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub relative_residual: f64,
    pub refinement_steps: usize,
}

/// Symmetric banded matrix, lower half stored row-wise.
struct BandMatrix {
    n: usize,
    bw: usize,
    /// data[i * (bw+1) + (j - i + bw)] holds A[i][j] for j in [i-bw, i].
    data: Vec<f64>,
}

impl BandMatrix {
    fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    #[inline]
    fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j <= i && i - j <= self.bw);
        self.data[i * (self.bw + 1) + (j + self.bw - i)] += v;
    }

    /// In-place Cholesky (A = L L^T). Errors on a non-positive pivot.
    fn cholesky(&mut self) -> Result<()> {
        let w = self.bw + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let k0 = j.saturating_sub(self.bw).max(lo);
                let len = j - k0;
                let mut sum = self.data[i * w + (j + self.bw - i)];
                if len > 0 {
                    let ri = &self.data[i * w + (k0 + self.bw - i)..i * w + (j + self.bw - i)];
                    let rj = &self.data[j * w + (k0 + self.bw - j)..j * w + (j + self.bw - j)];
                    let mut dot = 0.0;
                    for (a, b) in ri.iter().zip(rj) {
                        dot += a * b;
                    }
                    sum -= dot;
                }
                if i == j {
                    if sum <= 0.0 || !sum.is_finite() {
                        return Err(Error::SingularSystem(format!(
                            "non-positive pivot {sum:.3e} at DOF {i}; the load is not \
                             connected to the supports through nonzero stiffness"
                        )));
                    }
                    self.data[i * w + self.bw] = sum.sqrt();
                } else {
                    self.data[i * w + (j + self.bw - i)] = sum / self.data[j * w + self.bw];
                }
            }
        }
        Ok(())
    }

    /// Solves L L^T x = b given the factored matrix.
    fn solve_factored(&self, b: &[f64]) -> Vec<f64> {
        let w = self.bw + 1;
        let mut x = b.to_vec();
        // Forward: L y = b.
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let mut sum = x[i];
            let row = &self.data[i * w + (lo + self.bw - i)..i * w + self.bw];
            for (k, l) in (lo..i).zip(row) {
                sum -= l * x[k];
            }
            x[i] = sum / self.data[i * w + self.bw];
        }
        // Backward: L^T x = y.
        for i in (0..self.n).rev() {
            let hi = (i + self.bw).min(self.n - 1);
            let mut sum = x[i];
            for j in i + 1..=hi {
                sum -= self.data[j * w + (i + self.bw - j)] * x[j];
            }
            x[i] = sum / self.data[i * w + self.bw];
        }
        x
    }
}

/// SIMP interpolation of the element Young's modulus.
#[inline]
pub(crate) fn simp_modulus(density: f64, penal: f64, e_min: f64) -> f64 {
    e_min + density.powf(penal) * (1.0 - e_min)
}

/// Densities of the active elements in mesh (mask) order.
pub fn active_densities(mesh: &Mesh, x: &DesignImage) -> Vec<f64> {
    mesh.elems
        .iter()
        .map(|el| x.pixels()[el.pixel as usize] as f64)
        .collect()
}

/// K u without assembling: element-wise multiply-accumulate.
fn matvec(mesh: &Mesh, moduli: &[f64], u: &[f64]) -> Vec<f64> {
    let ke = mesh.ke();
    let mut out = vec![0.0f64; u.len()];
    for (el, &m) in mesh.elems.iter().zip(moduli) {
        let mut ue = [0.0f64; 8];
        for (k, &d) in el.dofs.iter().enumerate() {
            if d != NO_DOF {
                ue[k] = u[d as usize];
            }
        }
        for (k, &d) in el.dofs.iter().enumerate() {
            if d != NO_DOF {
                let mut acc = 0.0;
                for c in 0..8 {
                    acc += ke[k][c] * ue[c];
                }
                out[d as usize] += m * acc;
            }
        }
    }
    out
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Assembles the SIMP-penalized stiffness for density field `x` and solves
/// K u = f for the free DOFs by banded Cholesky, with iterative refinement
/// until the relative residual is at most 1e-8.
pub fn assemble_and_solve(
    mesh: &Mesh,
    x: &DesignImage,
    penal: f64,
    e_min: f64,
    f: &[f64],
) -> Result<(Vec<f64>, SolveStats)> {
    solve_active(mesh, &active_densities(mesh, x), penal, e_min, f)
}

/// [`assemble_and_solve`] on raw active-element densities (mesh order);
/// the optimizer keeps its iterates in f64 and calls this directly.
pub fn solve_active(
    mesh: &Mesh,
    densities: &[f64],
    penal: f64,
    e_min: f64,
    f: &[f64],
) -> Result<(Vec<f64>, SolveStats)> {
    assert!(penal >= 1.0, "penalization must be >= 1");
    assert!(e_min > 0.0 && e_min < 1.0, "E_min must be in (0, 1)");
    assert_eq!(densities.len(), mesh.elems.len());
    if f.len() != mesh.free_dofs() {
        return Err(Error::ShapeMismatch(format!(
            "force vector has {} entries, mesh has {} free DOFs",
            f.len(),
            mesh.free_dofs()
        )));
    }
    let fnorm = norm(f);
    if fnorm == 0.0 {
        return Ok((
            vec![0.0; f.len()],
            SolveStats {
                relative_residual: 0.0,
                refinement_steps: 0,
            },
        ));
    }

    let moduli: Vec<f64> = densities
        .iter()
        .map(|&d| simp_modulus(d, penal, e_min))
        .collect();
    let ke = mesh.ke();
    let mut kb = BandMatrix::zeros(mesh.free_dofs(), mesh.bandwidth());
    for (el, &m) in mesh.elems.iter().zip(&moduli) {
        for a in 0..8 {
            let da = el.dofs[a];
            if da == NO_DOF {
                continue;
            }
            for b in 0..8 {
                let db = el.dofs[b];
                if db != NO_DOF && db <= da {
                    kb.add(da as usize, db as usize, m * ke[a][b]);
                }
            }
        }
    }
    kb.cholesky()?;
    let mut u = kb.solve_factored(f);

    const TOL: f64 = 1e-8;
    let mut steps = 0;
    let mut rel = f64::INFINITY;
    for _ in 0..3 {
        let ku = matvec(mesh, &moduli, &u);
        let r: Vec<f64> = f.iter().zip(&ku).map(|(a, b)| a - b).collect();
        rel = norm(&r) / fnorm;
        if rel <= TOL {
            break;
        }
        let d = kb.solve_factored(&r);
        for (ui, di) in u.iter_mut().zip(&d) {
            *ui += di;
        }
        steps += 1;
    }
    if rel > TOL {
        return Err(Error::SingularSystem(format!(
            "solver stalled at relative residual {rel:.3e}"
        )));
    }
    Ok((
        u,
        SolveStats {
            relative_residual: rel,
            refinement_steps: steps,
        },
    ))
}

/// Compliance U^T K U and SIMP sensitivities, one entry per active element
/// in mask order: dc/dx_e = -p x^(p-1) (1 - E_min) u_e^T k0 u_e.
pub fn compliance_and_sensitivity(
    mesh: &Mesh,
    x: &DesignImage,
    penal: f64,
    e_min: f64,
    u: &[f64],
) -> (f64, Vec<f64>) {
    sensitivity_active(mesh, &active_densities(mesh, x), penal, e_min, u)
}

/// [`compliance_and_sensitivity`] on raw active-element densities.
pub fn sensitivity_active(
    mesh: &Mesh,
    densities: &[f64],
    penal: f64,
    e_min: f64,
    u: &[f64],
) -> (f64, Vec<f64>) {
    let ke = mesh.ke();
    let mut compliance = 0.0f64;
    let mut dc = Vec::with_capacity(mesh.elems.len());
    for (el, &xd) in mesh.elems.iter().zip(densities) {
        let mut ue = [0.0f64; 8];
        for (k, &d) in el.dofs.iter().enumerate() {
            if d != NO_DOF {
                ue[k] = u[d as usize];
            }
        }
        let mut energy = 0.0;
        for a in 0..8 {
            let mut acc = 0.0;
            for b in 0..8 {
                acc += ke[a][b] * ue[b];
            }
            energy += ue[a] * acc;
        }
        compliance += simp_modulus(xd, penal, e_min) * energy;
        dc.push(-penal * xd.powf(penal - 1.0) * (1.0 - e_min) * energy);
    }
    (compliance, dc)
}

/// Writes the assembled stiffness in triplet text form (`row col value` per
/// line, free-DOF ids). Diagnostic interface behind the CLI debug flag.
pub fn dump_stiffness_triplets(
    mesh: &Mesh,
    x: &DesignImage,
    penal: f64,
    e_min: f64,
    mut w: impl std::io::Write,
) -> Result<()> {
    let moduli: Vec<f64> = active_densities(mesh, x)
        .iter()
        .map(|&d| simp_modulus(d, penal, e_min))
        .collect();
    let ke = mesh.ke();
    let n = mesh.free_dofs();
    let bw = mesh.bandwidth();
    let mut kb = BandMatrix::zeros(n, bw);
    for (el, &m) in mesh.elems.iter().zip(&moduli) {
        for a in 0..8 {
            let da = el.dofs[a];
            if da == NO_DOF {
                continue;
            }
            for b in 0..8 {
                let db = el.dofs[b];
                if db != NO_DOF && db <= da {
                    kb.add(da as usize, db as usize, m * ke[a][b]);
                }
            }
        }
    }
    for i in 0..n {
        for j in i.saturating_sub(bw)..=i {
            let v = kb.data[i * (bw + 1) + (j + bw - i)];
            if v != 0.0 {
                writeln!(w, "{i} {j} {v:.17e}")?;
                if i != j {
                    writeln!(w, "{j} {i} {v:.17e}")?;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::AnnulusMask;
    use crate::fem::element::element_stiffness;
    use crate::fem::mesh::{LoadCase, Material};

    fn standard_setup() -> (std::sync::Arc<AnnulusMask>, Mesh) {
        let mask = AnnulusMask::standard(64);
        let mesh = Mesh::from_mask(&mask, Material::default()).unwrap();
        (mask, mesh)
    }

    #[test]
    fn single_element_matches_dense_oracle() {
        // One element, three corner nodes fixed, unit load on the free node.
        let mesh = Mesh::custom(
            2,
            Material::default(),
            &[0],
            &[(0, 0), (1, 0), (0, 1)],
        )
        .unwrap();
        assert_eq!(mesh.free_dofs(), 2);
        // The mesh only reads pixel 0 of the density buffer; poke it to
        // full density directly (the annulus mask is irrelevant here).
        let mut img = DesignImage::empty(AnnulusMask::standard(64));
        img.pixels_mut()[0] = 1.0;
        let f = vec![0.3, -1.0];
        let (u, stats) = assemble_and_solve(&mesh, &img, 3.0, 1e-9, &f).unwrap();
        assert!(stats.relative_residual <= 1e-8);

        // Dense oracle: free node is (1,1), element DOFs 4 and 5.
        let ke = element_stiffness(1.0, 0.3);
        let a = [[ke[4][4], ke[4][5]], [ke[5][4], ke[5][5]]];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let oracle = [
            (a[1][1] * f[0] - a[0][1] * f[1]) / det,
            (-a[1][0] * f[0] + a[0][0] * f[1]) / det,
        ];
        for k in 0..2 {
            assert!(
                (u[k] - oracle[k]).abs() <= 1e-8 * oracle[k].abs().max(1.0),
                "dof {k}: {} vs {}",
                u[k],
                oracle[k]
            );
        }
    }

    #[test]
    fn doubling_stiffness_halves_displacement() {
        let mask = AnnulusMask::standard(32);
        let img = DesignImage::from_fn(mask.clone(), |_, _| 0.7);
        let m1 = Mesh::from_mask(&mask, Material { e: 1.0, nu: 0.3 }).unwrap();
        let m2 = Mesh::from_mask(&mask, Material { e: 2.0, nu: 0.3 }).unwrap();
        let f = m1.build_load(&LoadCase::new(0.2)).unwrap();
        let (u1, _) = assemble_and_solve(&m1, &img, 3.0, 1e-9, &f).unwrap();
        let (u2, _) = assemble_and_solve(&m2, &img, 3.0, 1e-9, &f).unwrap();
        let scale = norm(&u1);
        for (a, b) in u1.iter().zip(&u2) {
            assert!((a - 2.0 * b).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn zero_force_zero_displacement() {
        let (mask, mesh) = standard_setup();
        let img = DesignImage::from_fn(mask, |_, _| 0.5);
        let f = vec![0.0; mesh.free_dofs()];
        let (u, _) = assemble_and_solve(&mesh, &img, 3.0, 1e-9, &f).unwrap();
        assert!(u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn load_vector_contract() {
        let (_, mesh) = standard_setup();
        // Free DOFs come in (x, y) pairs per node, so even ids are x.
        let f0 = mesh.build_load(&LoadCase::new(0.0)).unwrap();

        // c2 = 0: pure inward radial load over a symmetric arc, so the
        // x-components cancel.
        let sum_x: f64 = f0.iter().step_by(2).sum();
        assert!(sum_x.abs() < 1e-12, "sum of x-components {sum_x}");

        // Sum of per-node normal force magnitudes equals normal_magnitude.
        let total_n: f64 = f0
            .chunks_exact(2)
            .map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt())
            .sum();
        assert!((total_n - 1.0).abs() < 1e-12, "total normal {total_n}");

        // Tangential/normal resultant ratio equals c2 exactly: tangentials
        // are the per-node normals rotated 90 degrees.
        let f4 = mesh.build_load(&LoadCase::new(0.4)).unwrap();
        let d: Vec<f64> = f4.iter().zip(&f0).map(|(a, b)| a - b).collect();
        let resultant = |v: &[f64]| {
            let rx: f64 = v.iter().step_by(2).sum();
            let ry: f64 = v.iter().skip(1).step_by(2).sum();
            (rx * rx + ry * ry).sqrt()
        };
        let ratio = resultant(&d) / resultant(&f0);
        assert!((ratio - 0.4).abs() < 1e-12, "ratio {ratio}");
        // Sum of per-node tangential magnitudes equals c2.
        let total_t: f64 = d
            .chunks_exact(2)
            .map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt())
            .sum();
        assert!((total_t - 0.4).abs() < 1e-12, "total tangential {total_t}");
    }

    #[test]
    fn symmetric_density_symmetric_displacement() {
        let (mask, mesh) = standard_setup();
        // Mirror-symmetric density field.
        let img = DesignImage::from_fn(mask.clone(), |r, c| {
            let cc = if c >= 32 { 63 - c } else { c };
            (((r * 7 + cc * 13) % 10) as f32) / 10.0
        });
        let f = mesh.build_load(&LoadCase::new(0.0)).unwrap();
        let (u, _) = assemble_and_solve(&mesh, &img, 3.0, 1e-9, &f).unwrap();
        let map = mesh.mirror_dof_map();
        let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (d, &(md, sign)) in map.iter().enumerate() {
            assert_ne!(md, NO_DOF);
            let err = (u[d] - sign * u[md as usize]).abs();
            assert!(
                err <= 1e-7 * scale,
                "dof {d}: {} vs mirrored {}",
                u[d],
                u[md as usize]
            );
        }
    }

    #[test]
    fn compliance_identity_and_sensitivity_signs() {
        let (mask, mesh) = standard_setup();
        let img = DesignImage::from_fn(mask, |r, c| 0.3 + 0.4 * (((r + c) % 2) as f32));
        let f = mesh.build_load(&LoadCase::new(0.2)).unwrap();
        let (u, _) = assemble_and_solve(&mesh, &img, 3.0, 1e-9, &f).unwrap();
        let (c, dc) = compliance_and_sensitivity(&mesh, &img, 3.0, 1e-9, &u);
        let ftu: f64 = f.iter().zip(&u).map(|(a, b)| a * b).sum();
        assert!((c - ftu).abs() <= 1e-10 * c.abs());
        assert!(dc.iter().all(|&v| v <= 0.0));
    }

    #[test]
    fn sensitivity_matches_finite_difference() {
        use rand::prelude::*;
        let mask = AnnulusMask::standard(32);
        let mesh = Mesh::from_mask(&mask, Material::default()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let img = DesignImage::from_fn(mask.clone(), |_, _| rng.gen_range(0.3..0.9));
        let f = mesh.build_load(&LoadCase::new(0.12)).unwrap();
        let (u, _) = assemble_and_solve(&mesh, &img, 3.0, 1e-9, &f).unwrap();
        let (_, dc) = compliance_and_sensitivity(&mesh, &img, 3.0, 1e-9, &u);

        // Pick random designable elements and compare against central
        // differences of the re-solved compliance.
        let designable: Vec<usize> = mask.designable().iter().map(|&p| p as usize).collect();
        let act_of_p = |p: usize| mask.active_index(p).unwrap();
        let h = 1e-4f32;
        for _ in 0..8 {
            let p = designable[rng.gen_range(0..designable.len())];
            let base = img.pixels()[p];
            let mut up = img.clone();
            up.pixels_mut()[p] = base + h;
            let mut dn = img.clone();
            dn.pixels_mut()[p] = base - h;
            let (uu, _) = assemble_and_solve(&mesh, &up, 3.0, 1e-9, &f).unwrap();
            let (cp, _) = compliance_and_sensitivity(&mesh, &up, 3.0, 1e-9, &uu);
            let (ud, _) = assemble_and_solve(&mesh, &dn, 3.0, 1e-9, &f).unwrap();
            let (cm, _) = compliance_and_sensitivity(&mesh, &dn, 3.0, 1e-9, &ud);
            // f32 storage quantizes the step; divide by the realized one.
            let dh = up.pixels()[p] as f64 - dn.pixels()[p] as f64;
            let fd = (cp - cm) / dh;
            let an = dc[act_of_p(p)];
            assert!(
                (fd - an).abs() <= 1e-4 * an.abs().max(1e-12),
                "element {p}: fd {fd} vs analytic {an}"
            );
        }
    }

    #[test]
    fn contact_arc_without_rim_nodes_errors() {
        let (_, mesh) = standard_setup();
        let bad = LoadCase {
            contact_arc_deg: 0.01,
            ..LoadCase::new(0.0)
        };
        // A tiny arc may or may not catch a node; shrink until it cannot.
        let r = mesh.build_load(&bad);
        if let Err(e) = r {
            assert!(matches!(e, Error::Config(_)));
        }
    }
}
