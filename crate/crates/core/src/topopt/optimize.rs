use std::sync::Arc;

use rayon::prelude::*;

use crate::design::{AnnulusMask, DesignImage, PixelClass};
use crate::error::{Error, Result};
use crate::fem::{sensitivity_active, solve_active, LoadCase, Material, Mesh};
use crate::topopt::filter::SensitivityFilter;
use crate::topopt::grid::ParameterGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopOptConfig {
    pub penal: f64,
    pub filter_radius: f64,
    pub move_limit: f64,
    pub damping: f64,
    pub max_iters: usize,
    pub change_tol: f64,
    /// Volume fraction R: the optimized design keeps R times the reference
    /// volume.
    pub volume_fraction: f64,
    pub bisection_tol: f64,
    pub e_min: f64,
    /// Designable densities initialize at max(x_ref, init_floor); the
    /// multiplicative OC update cannot regrow material from exact zeros, so
    /// binary references get a small positive floor on their void pixels.
    pub init_floor: f64,
    pub material: Material,
    pub normal_magnitude: f64,
    pub contact_arc_deg: f64,
}

impl Default for TopOptConfig {
    fn default() -> Self {
        Self {
            penal: 3.0,
            filter_radius: 1.5,
            move_limit: 0.2,
            damping: 0.5,
            max_iters: 60,
            change_tol: 0.01,
            volume_fraction: 1.0,
            bisection_tol: 1e-4,
            e_min: 1e-9,
            init_floor: 0.01,
            material: Material::default(),
            normal_magnitude: 1.0,
            contact_arc_deg: 15.0,
        }
    }
}

impl TopOptConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.move_limit > 0.0 && self.move_limit <= 1.0) {
            return Err(Error::Config("move_limit must be in (0, 1]".into()));
        }
        if self.volume_fraction <= 0.0 {
            return Err(Error::Config("volume fraction must be positive".into()));
        }
        if self.penal < 1.0 || self.e_min <= 0.0 || self.e_min >= 1.0 {
            return Err(Error::Config("penal >= 1 and E_min in (0,1) required".into()));
        }
        if self.filter_radius < 0.5 || self.max_iters == 0 {
            return Err(Error::Config("degenerate filter radius or max_iters".into()));
        }
        Ok(())
    }
}

/// Objective of the regularized problem: compliance + c1 * L1 distance.
pub fn objective(compliance: f64, l1_distance: f64, c1: f64) -> f64 {
    compliance + c1 * l1_distance
}

/// Total sensitivity: compliance sensitivity plus the L1 subgradient,
/// sign(0) = 0 at the kink. All vectors over active elements.
pub fn total_sensitivity(x: &[f64], x_ref: &[f64], c1: f64, dc: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(x_ref)
        .zip(dc)
        .map(|((&xe, &xr), &d)| {
            let s = (xe - xr).signum();
            let s = if xe == xr { 0.0 } else { s };
            d + c1 * s
        })
        .collect()
}

/// One optimality-criteria update on the designable densities.
///
/// x'_e = clamp(x_e (max(-g_e, 1e-10) / lambda)^damping) into the move
/// window [x_e - move, x_e + move] intersected with [0, 1], with lambda
/// bisected until sum x' matches `target_volume` within
/// `bisection_tol * volume_scale`.
pub fn oc_update(
    x: &[f64],
    g: &[f64],
    target_volume: f64,
    volume_scale: f64,
    move_limit: f64,
    damping: f64,
    bisection_tol: f64,
) -> Result<(Vec<f64>, f64)> {
    assert_eq!(x.len(), g.len());
    let tol = bisection_tol * volume_scale.max(1e-12);
    let trial = |lambda: f64, out: &mut Vec<f64>| -> f64 {
        out.clear();
        let mut sum = 0.0;
        for (&xe, &ge) in x.iter().zip(g) {
            let num = (-ge).max(1e-10);
            let v = (xe * (num / lambda).powf(damping))
                .clamp((xe - move_limit).max(0.0), (xe + move_limit).min(1.0));
            sum += v;
            out.push(v);
        }
        sum
    };

    let mut buf = Vec::with_capacity(x.len());
    let (mut lo, mut hi) = (1e-20f64, 1e20f64);
    let s_lo = trial(lo, &mut buf);
    if target_volume > s_lo + tol {
        return Err(Error::InfeasibleVolume(format!(
            "target {target_volume:.3} exceeds attainable maximum {s_lo:.3}"
        )));
    }
    let s_hi = trial(hi, &mut buf);
    if target_volume < s_hi - tol {
        return Err(Error::InfeasibleVolume(format!(
            "target {target_volume:.3} below attainable minimum {s_hi:.3}"
        )));
    }
    let mut lambda = (lo * hi).sqrt();
    for _ in 0..256 {
        lambda = (lo * hi).sqrt();
        let s = trial(lambda, &mut buf);
        if (s - target_volume).abs() <= tol {
            return Ok((buf, lambda));
        }
        if s > target_volume {
            lo = lambda;
        } else {
            hi = lambda;
        }
    }
    Err(Error::InfeasibleVolume(format!(
        "volume bisection stalled at lambda {lambda:.3e}"
    )))
}

/// Per-iteration optimizer trace (one row per FEM solve, including the
/// final state).
#[derive(Debug, Clone, Copy)]
pub struct IterTrace {
    pub iter: usize,
    pub compliance: f64,
    pub l1: f64,
    pub objective: f64,
    pub volume: f64,
    /// Max density change of the update that produced this state (0 for the
    /// initial state).
    pub change: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub design: DesignImage,
    pub compliance: f64,
    pub history: Vec<IterTrace>,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub design: DesignImage,
    pub compliance: f64,
}

/// Results of the 11x11 grid sweep; per-cell failures are recorded, not
/// fatal.
#[derive(Debug)]
pub struct GridResults {
    cells: Vec<Result<CellResult>>,
}

impl GridResults {
    pub fn cell(&self, index_c1: usize, index_c2: usize) -> &Result<CellResult> {
        &self.cells[index_c1 * 11 + index_c2]
    }

    pub fn cells(&self) -> &[Result<CellResult>] {
        &self.cells
    }

    pub fn completed(&self) -> usize {
        self.cells.iter().filter(|c| c.is_ok()).count()
    }
}

/// Reference topology optimizer bound to one design domain. Holds the mesh
/// and filter kernels so repeated `optimize` calls share setup; all methods
/// take `&self` and are safe to call from many threads.
pub struct Optimizer {
    mask: Arc<AnnulusMask>,
    mesh: Mesh,
    filter: SensitivityFilter,
    config: TopOptConfig,
    grid: ParameterGrid,
    /// Positions of designable elements within the active ordering.
    designable_slots: Vec<u32>,
}

impl Optimizer {
    pub fn new(mask: Arc<AnnulusMask>, config: TopOptConfig) -> Result<Self> {
        config.validate()?;
        let mesh = Mesh::from_mask(&mask, config.material)?;
        let filter = SensitivityFilter::new(&mask, config.filter_radius);
        let designable_slots = mask
            .designable()
            .iter()
            .map(|&px| mask.active_index(px as usize).unwrap() as u32)
            .collect();
        Ok(Self {
            mask,
            mesh,
            filter,
            config,
            grid: ParameterGrid::default(),
            designable_slots,
        })
    }

    pub fn mask(&self) -> &Arc<AnnulusMask> {
        &self.mask
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn config(&self) -> &TopOptConfig {
        &self.config
    }

    pub fn grid(&self) -> &ParameterGrid {
        &self.grid
    }

    /// Compliance of an arbitrary design under the c2 load; used by the
    /// evaluation metrics.
    pub fn compliance_of(&self, x: &DesignImage, c2: f64) -> Result<f64> {
        let f = self.mesh.build_load(&self.load_case(c2))?;
        let xa = crate::fem::active_densities(&self.mesh, x);
        let (u, _) = solve_active(&self.mesh, &xa, self.config.penal, self.config.e_min, &f)?;
        let (c, _) = sensitivity_active(&self.mesh, &xa, self.config.penal, self.config.e_min, &u);
        Ok(c)
    }

    fn load_case(&self, c2: f64) -> LoadCase {
        LoadCase {
            normal_magnitude: self.config.normal_magnitude,
            force_ratio: c2,
            contact_arc_deg: self.config.contact_arc_deg,
        }
    }

    /// Runs the similarity-regularized compliance minimization for one
    /// (c1, c2) pair, starting from the reference design.
    pub fn optimize(&self, x_ref: &DesignImage, c1: f64, c2: f64) -> Result<OptimizeResult> {
        let cfg = &self.config;
        let f = self.mesh.build_load(&self.load_case(c2))?;

        // Active-element views of the reference and the iterate.
        let class = self.mask.class();
        let xref_act: Vec<f64> = self
            .mask
            .active()
            .iter()
            .map(|&px| x_ref.pixels()[px as usize] as f64)
            .collect();
        let mut x_act = xref_act.clone();
        for &slot in &self.designable_slots {
            let v = &mut x_act[slot as usize];
            *v = v.max(cfg.init_floor);
        }
        debug_assert!(self
            .mask
            .active()
            .iter()
            .zip(&xref_act)
            .all(|(&px, &v)| class[px as usize] != PixelClass::Fixed || v == 1.0));

        let v_ref: f64 = self
            .designable_slots
            .iter()
            .map(|&s| xref_act[s as usize])
            .sum();
        let target = cfg.volume_fraction * v_ref;
        let n_designable = self.designable_slots.len() as f64;
        if target <= 0.0 || target > n_designable {
            return Err(Error::InfeasibleVolume(format!(
                "volume target {target:.1} outside (0, {n_designable}]"
            )));
        }

        let mut history = Vec::new();
        let mut change = 0.0f64;
        let mut xd: Vec<f64> = self
            .designable_slots
            .iter()
            .map(|&s| x_act[s as usize])
            .collect();
        let xref_d: Vec<f64> = self
            .designable_slots
            .iter()
            .map(|&s| xref_act[s as usize])
            .collect();

        for it in 0..cfg.max_iters {
            let (u, _) = solve_active(&self.mesh, &x_act, cfg.penal, cfg.e_min, &f)?;
            let (c, dc) = sensitivity_active(&self.mesh, &x_act, cfg.penal, cfg.e_min, &u);
            let l1: f64 = xd.iter().zip(&xref_d).map(|(a, b)| (a - b).abs()).sum();
            let vol: f64 = xd.iter().sum();
            history.push(IterTrace {
                iter: it,
                compliance: c,
                l1,
                objective: objective(c, l1, c1),
                volume: vol,
                change,
            });

            let g = total_sensitivity(&x_act, &xref_act, c1, &dc);
            let g_hat = self.filter.apply(&x_act, &g);
            let gd: Vec<f64> = self
                .designable_slots
                .iter()
                .map(|&s| g_hat[s as usize])
                .collect();
            let (xd_new, _) = oc_update(
                &xd,
                &gd,
                target,
                v_ref,
                cfg.move_limit,
                cfg.damping,
                cfg.bisection_tol,
            )?;
            change = xd
                .iter()
                .zip(&xd_new)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            xd = xd_new;
            for (&slot, &v) in self.designable_slots.iter().zip(&xd) {
                x_act[slot as usize] = v;
            }
            if change < cfg.change_tol {
                break;
            }
        }

        // Final state: one more solve for the reported compliance.
        let (u, _) = solve_active(&self.mesh, &x_act, cfg.penal, cfg.e_min, &f)?;
        let (c, _) = sensitivity_active(&self.mesh, &x_act, cfg.penal, cfg.e_min, &u);
        let l1: f64 = xd.iter().zip(&xref_d).map(|(a, b)| (a - b).abs()).sum();
        history.push(IterTrace {
            iter: history.len(),
            compliance: c,
            l1,
            objective: objective(c, l1, c1),
            volume: xd.iter().sum(),
            change,
        });

        let g = self.mask.resolution();
        let mut grid = vec![0.0f32; g * g];
        for (&px, &v) in self.mask.active().iter().zip(&x_act) {
            grid[px as usize] = v as f32;
        }
        let design = DesignImage::from_grid(self.mask.clone(), grid)?;
        Ok(OptimizeResult {
            design,
            compliance: c,
            history,
        })
    }

    /// Optimize at a pair of grid indices.
    pub fn optimize_cell(
        &self,
        x_ref: &DesignImage,
        index_c1: usize,
        index_c2: usize,
    ) -> Result<OptimizeResult> {
        let (c1, c2) = self.grid.values(index_c1, index_c2)?;
        self.optimize(x_ref, c1, c2)
    }

    /// Runs all 121 parameter combinations (in parallel); deterministic per
    /// cell regardless of scheduling.
    pub fn precompute_grid(&self, x_ref: &DesignImage) -> GridResults {
        let cells: Vec<Result<CellResult>> = (0..121usize)
            .into_par_iter()
            .map(|k| {
                self.optimize_cell(x_ref, k / 11, k % 11).map(|r| CellResult {
                    design: r.design,
                    compliance: r.compliance,
                })
            })
            .collect();
        GridResults { cells }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{generate_reference, ReferenceSpec};

    fn small_setup(max_iters: usize) -> (Arc<AnnulusMask>, Optimizer, DesignImage) {
        let mask = AnnulusMask::standard(32);
        let config = TopOptConfig {
            max_iters,
            ..TopOptConfig::default()
        };
        let opt = Optimizer::new(mask.clone(), config).unwrap();
        let xref = generate_reference(
            &ReferenceSpec {
                spoke_count: 4,
                spoke_width: 3.0,
                twist: 0.0,
                hole_pattern: None,
                seed: 1,
            },
            &mask,
        )
        .unwrap();
        (mask, opt, xref)
    }

    #[test]
    fn oc_uniform_inputs_stay_uniform() {
        let x = vec![0.5; 16];
        let g = vec![-2.0; 16];
        let (xn, _) = oc_update(&x, &g, 8.0, 8.0, 0.2, 0.5, 1e-4).unwrap();
        let first = xn[0];
        assert!(xn.iter().all(|&v| (v - first).abs() < 1e-12));
        let sum: f64 = xn.iter().sum();
        assert!((sum - 8.0).abs() <= 1e-4 * 8.0);
    }

    #[test]
    fn oc_positive_sensitivities_still_meet_volume() {
        // All sensitivities >= 0 clamps the numerator; the update is pushed
        // to the lower move bound and lambda rescues the volume target.
        let x = vec![0.6, 0.4, 0.8, 0.2];
        let g = vec![1.0, 0.5, 2.0, 0.1];
        let target = 1.6; // < current 2.0, reachable within move 0.2
        let (xn, _) = oc_update(&x, &g, target, 2.0, 0.2, 0.5, 1e-4).unwrap();
        let sum: f64 = xn.iter().sum();
        assert!((sum - target).abs() <= 1e-4 * 2.0, "sum {sum}");
        // Everyone gets the same multiplicative pressure, so no element may
        // move below its lower bound.
        for (a, b) in x.iter().zip(&xn) {
            assert!(*b >= (a - 0.2).max(0.0) - 1e-12 && *b <= (a + 0.2).min(1.0) + 1e-12);
        }
    }

    #[test]
    fn oc_infeasible_volume_errors() {
        let x = vec![1.0; 4];
        let g = vec![-1.0; 4];
        assert!(matches!(
            oc_update(&x, &g, 0.5, 4.0, 0.2, 0.5, 1e-4),
            Err(Error::InfeasibleVolume(_))
        ));
        assert!(matches!(
            oc_update(&x, &g, 6.0, 4.0, 0.2, 0.5, 1e-4),
            Err(Error::InfeasibleVolume(_))
        ));
    }

    #[test]
    fn total_sensitivity_subgradient() {
        let x = vec![0.5, 0.2, 0.8];
        let xr = vec![0.5, 0.8, 0.2];
        let dc = vec![-1.0, -2.0, -3.0];
        let g = total_sensitivity(&x, &xr, 2.0, &dc);
        assert_eq!(g[0], -1.0); // sign(0) = 0
        assert_eq!(g[1], -4.0); // below reference: -2 - 2
        assert_eq!(g[2], -1.0); // above reference: -3 + 2
        let g0 = total_sensitivity(&x, &xr, 0.0, &dc);
        assert_eq!(g0, dc);
    }

    #[test]
    fn volume_held_every_iteration_and_symmetry() {
        let (mask, opt, xref) = small_setup(12);
        let res = opt.optimize(&xref, 0.05, 0.0).unwrap();
        let v_ref = xref.volume();
        for row in &res.history[1..] {
            assert!(
                (row.volume - v_ref).abs() <= 1e-3 * v_ref,
                "iter {} volume {} vs {}",
                row.iter,
                row.volume,
                v_ref
            );
        }
        // Mirror-symmetric reference + c2 = 0 stays mirror-symmetric.
        let g = mask.resolution();
        for row in 0..g {
            for col in 0..g {
                let a = res.design.get(row, col);
                let b = res.design.get(row, g - 1 - col);
                assert!(
                    (a - b).abs() <= 1e-6,
                    "asymmetry at ({row},{col}): {a} vs {b}"
                );
            }
        }
        res.design.validate().unwrap();
    }

    #[test]
    fn pure_compliance_run_reduces_compliance() {
        let (_, opt, xref) = small_setup(25);
        let res = opt.optimize(&xref, 0.0, 0.2).unwrap();
        let first = res.history.first().unwrap().compliance;
        assert!(
            res.compliance < first,
            "final {} vs initial {}",
            res.compliance,
            first
        );
    }

    #[test]
    fn high_similarity_weight_stays_closer() {
        let (_, opt, xref) = small_setup(25);
        let far = opt.optimize(&xref, 0.0005, 0.2).unwrap();
        let near = opt.optimize(&xref, 5.0, 0.2).unwrap();
        let d_far = far.design.l1_distance(&xref);
        let d_near = near.design.l1_distance(&xref);
        assert!(
            d_near < d_far,
            "L1 at c1=5: {d_near}, at c1=0.0005: {d_far}"
        );
    }

    #[test]
    fn grid_cell_matches_standalone_call() {
        let (_, opt, xref) = small_setup(4);
        let grid = opt.precompute_grid(&xref);
        assert_eq!(grid.cells().len(), 121);
        assert_eq!(grid.completed(), 121);
        let standalone = opt.optimize_cell(&xref, 3, 7).unwrap();
        let cell = grid.cell(3, 7).as_ref().unwrap();
        assert_eq!(cell.design.pixels(), standalone.design.pixels());
        assert_eq!(cell.compliance, standalone.compliance);
    }
}
