use std::sync::Arc;

use crate::design::AnnulusMask;
use crate::error::{Error, Result};
use crate::fem::element::element_stiffness;

pub const NO_DOF: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub e: f64,
    pub nu: f64,
}

impl Default for Material {
    fn default() -> Self {
        Self { e: 1.0, nu: 0.3 }
    }
}

/// Load applied over the rim contact patch at the bottom of the wheel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadCase {
    /// Total radial (inward) force magnitude.
    pub normal_magnitude: f64,
    /// Force ratio c2: tangential force = c2 * normal force.
    pub force_ratio: f64,
    /// Half-width of the contact arc in degrees about the bottom point.
    pub contact_arc_deg: f64,
}

impl LoadCase {
    pub fn new(force_ratio: f64) -> Self {
        Self {
            normal_magnitude: 1.0,
            force_ratio,
            contact_arc_deg: 15.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.4).contains(&self.force_ratio) {
            return Err(Error::Config(format!(
                "force ratio {} outside [0, 0.4]",
                self.force_ratio
            )));
        }
        if self.normal_magnitude <= 0.0 || self.contact_arc_deg <= 0.0 {
            return Err(Error::Config("degenerate load case".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub(crate) struct MeshElement {
    /// Row-major pixel index of the element.
    pub pixel: u32,
    /// Global free-DOF ids in element order, NO_DOF for constrained DOFs.
    pub dofs: [u32; 8],
}

/// Finite-element mesh over the active pixels of a design domain.
///
/// Grid nodes live at integer pixel corners; hub-band nodes are fully
/// constrained. Free DOFs are numbered row-major, which keeps the stiffness
/// bandwidth at roughly two node rows.
#[derive(Debug)]
pub struct Mesh {
    g: usize,
    material: Material,
    ke: [[f64; 8]; 8],
    pub(crate) elems: Vec<MeshElement>,
    n_free: usize,
    bandwidth: usize,
    fixed_node_count: usize,
    /// (node_x, node_y, dof_x, dof_y) for nodes on the rim band; candidates
    /// for contact loading.
    rim_nodes: Vec<(f64, f64, u32, u32)>,
}

impl Mesh {
    /// Builds the mesh for all active (designable + fixed) pixels of `mask`,
    /// constraining every node on the hub band.
    pub fn from_mask(mask: &Arc<AnnulusMask>, material: Material) -> Result<Self> {
        let g = mask.resolution();
        let c = g as f64 / 2.0;
        let hub_r = mask.r_in() + mask.hub_band();
        let rim_r = mask.r_out() - mask.rim_band();
        let active: Vec<usize> = mask.active().iter().map(|&p| p as usize).collect();
        let fixed = |ix: usize, iy: usize| {
            let dx = ix as f64 - c;
            let dy = iy as f64 - c;
            (dx * dx + dy * dy).sqrt() <= hub_r
        };
        let rim = |ix: usize, iy: usize| {
            let dx = ix as f64 - c;
            let dy = iy as f64 - c;
            (dx * dx + dy * dy).sqrt() >= rim_r
        };
        Self::build(g, material, &active, fixed, rim)
    }

    /// Builds a mesh over an explicit element set with an explicit fixed-node
    /// predicate; intended for tests and custom domains.
    pub fn custom(
        g: usize,
        material: Material,
        active_pixels: &[usize],
        fixed_nodes: &[(usize, usize)],
    ) -> Result<Self> {
        let fixed = |ix: usize, iy: usize| fixed_nodes.contains(&(ix, iy));
        Self::build(g, material, active_pixels, fixed, |_, _| true)
    }

    fn build(
        g: usize,
        material: Material,
        active_pixels: &[usize],
        fixed: impl Fn(usize, usize) -> bool,
        rim: impl Fn(usize, usize) -> bool,
    ) -> Result<Self> {
        if active_pixels.is_empty() {
            return Err(Error::Config("mesh has no active elements".into()));
        }
        let nn = g + 1;
        let mut node_active = vec![false; nn * nn];
        for &px in active_pixels {
            let (iy, ix) = (px / g, px % g);
            for (dx, dy) in [(0, 0), (1, 0), (1, 1), (0, 1)] {
                node_active[(iy + dy) * nn + ix + dx] = true;
            }
        }
        // Row-major numbering of free DOFs.
        let mut node_dof = vec![[NO_DOF; 2]; nn * nn];
        let mut n_free = 0u32;
        let mut fixed_node_count = 0usize;
        for iy in 0..nn {
            for ix in 0..nn {
                let nid = iy * nn + ix;
                if !node_active[nid] {
                    continue;
                }
                if fixed(ix, iy) {
                    fixed_node_count += 1;
                    continue;
                }
                node_dof[nid] = [n_free, n_free + 1];
                n_free += 2;
            }
        }
        if fixed_node_count == 0 {
            return Err(Error::Config("mesh has no fixed nodes".into()));
        }
        if n_free == 0 {
            return Err(Error::Config("mesh has no free DOFs".into()));
        }

        let mut elems = Vec::with_capacity(active_pixels.len());
        let mut bandwidth = 0usize;
        for &px in active_pixels {
            let (iy, ix) = (px / g, px % g);
            let corner = [(ix, iy), (ix + 1, iy), (ix + 1, iy + 1), (ix, iy + 1)];
            let mut dofs = [NO_DOF; 8];
            let (mut lo, mut hi) = (u32::MAX, 0u32);
            for (k, (cx, cy)) in corner.into_iter().enumerate() {
                let nd = node_dof[cy * nn + cx];
                dofs[2 * k] = nd[0];
                dofs[2 * k + 1] = nd[1];
                if nd[0] != NO_DOF {
                    lo = lo.min(nd[0]);
                    hi = hi.max(nd[1]);
                }
            }
            if lo != u32::MAX {
                bandwidth = bandwidth.max((hi - lo) as usize);
            }
            elems.push(MeshElement {
                pixel: px as u32,
                dofs,
            });
        }

        let mut rim_nodes = Vec::new();
        for iy in 0..nn {
            for ix in 0..nn {
                let nid = iy * nn + ix;
                if node_active[nid] && node_dof[nid][0] != NO_DOF && rim(ix, iy) {
                    rim_nodes.push((ix as f64, iy as f64, node_dof[nid][0], node_dof[nid][1]));
                }
            }
        }

        Ok(Self {
            g,
            material,
            ke: element_stiffness(material.e, material.nu),
            elems,
            n_free: n_free as usize,
            bandwidth,
            fixed_node_count,
            rim_nodes,
        })
    }

    pub fn resolution(&self) -> usize {
        self.g
    }

    pub fn free_dofs(&self) -> usize {
        self.n_free
    }

    pub fn fixed_node_count(&self) -> usize {
        self.fixed_node_count
    }

    pub(crate) fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn material(&self) -> Material {
        self.material
    }

    pub(crate) fn ke(&self) -> &[[f64; 8]; 8] {
        &self.ke
    }

    /// Number of active elements (mask order).
    pub fn element_count(&self) -> usize {
        self.elems.len()
    }

    /// Builds the global force vector for a contact-patch load: a total
    /// inward radial force of `normal_magnitude` plus a tangential force of
    /// `force_ratio * normal_magnitude`, split uniformly over the rim nodes
    /// inside the contact arc at the bottom of the wheel.
    pub fn build_load(&self, load: &LoadCase) -> Result<Vec<f64>> {
        load.validate()?;
        let c = self.g as f64 / 2.0;
        let arc = load.contact_arc_deg.to_radians();
        let mut contact: Vec<(u32, u32, f64, f64)> = Vec::new();
        for &(nx, ny, dx_id, dy_id) in &self.rim_nodes {
            let dx = nx - c;
            let dy = ny - c;
            let r = (dx * dx + dy * dy).sqrt();
            if r == 0.0 {
                continue;
            }
            // Angle from the downward vertical (+y goes down the rows).
            let phi = dx.atan2(dy);
            if phi.abs() <= arc {
                contact.push((dx_id, dy_id, -dx / r, -dy / r));
            }
        }
        if contact.is_empty() {
            return Err(Error::Config(
                "contact arc contains no rim nodes".to_string(),
            ));
        }
        let m = contact.len() as f64;
        let fn_mag = load.normal_magnitude / m;
        let ft_mag = load.force_ratio * load.normal_magnitude / m;
        let mut f = vec![0.0f64; self.n_free];
        for (dx_id, dy_id, nx, ny) in contact {
            // Tangential direction is the inward normal rotated +90 deg.
            let (tx, ty) = (-ny, nx);
            f[dx_id as usize] += fn_mag * nx + ft_mag * tx;
            f[dy_id as usize] += fn_mag * ny + ft_mag * ty;
        }
        Ok(f)
    }

    /// Mirror map on free DOFs about the vertical axis: returns, for every
    /// free DOF, the mirrored DOF id and the sign of the x-component flip.
    /// Only meaningful for masks symmetric about the vertical axis.
    pub fn mirror_dof_map(&self) -> Vec<(u32, f64)> {
        let nn = self.g + 1;
        let mut node_dof = vec![[NO_DOF; 2]; nn * nn];
        for el in &self.elems {
            let (iy, ix) = (el.pixel as usize / self.g, el.pixel as usize % self.g);
            let corner = [(ix, iy), (ix + 1, iy), (ix + 1, iy + 1), (ix, iy + 1)];
            for (k, (cx, cy)) in corner.into_iter().enumerate() {
                node_dof[cy * nn + cx] = [el.dofs[2 * k], el.dofs[2 * k + 1]];
            }
        }
        let mut map = vec![(NO_DOF, 1.0); self.n_free];
        for iy in 0..nn {
            for ix in 0..nn {
                let nd = node_dof[iy * nn + ix];
                if nd[0] == NO_DOF {
                    continue;
                }
                let mirror = node_dof[iy * nn + (self.g - ix)];
                if mirror[0] != NO_DOF {
                    map[nd[0] as usize] = (mirror[0], -1.0);
                    map[nd[1] as usize] = (mirror[1], 1.0);
                }
            }
        }
        map
    }
}
