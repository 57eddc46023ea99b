//! Degree-of-freedom management with interface identification.
//!
//! Fluid and solid velocities share global DOFs on the interface: each
//! matched pair of grid points (fluid point at `phi(z_i)`, solid point at
//! `z_i`) maps to one velocity node carrying two components. Pressure DOFs
//! live on the `P_{m-1}` nodes of the fluid mesh. Dirichlet sets collect the
//! Sigma1 fluid points (inflow/walls) and Sigma3 solid points (fixed solid
//! boundary); a merged node is Dirichlet when either side says so.

use crate::mesh::{BoundaryMarker, Mesh};
use crate::ref_elem::node_count;
use crate::{Error, Point2};

/// Which constraint claims a Dirichlet velocity node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirichletSource {
    FluidInflow,
    SolidFixed,
    Both,
}

/// A constrained velocity node with the grid points that claim it.
#[derive(Debug, Clone, Copy)]
pub struct DirichletNode {
    pub vel_node: usize,
    pub source: DirichletSource,
    pub fluid_point: Option<usize>,
    pub solid_point: Option<usize>,
}

/// Global DOF layout: velocity components `2*node + comp` first, then
/// pressure DOFs.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub n_fluid_points: usize,
    pub n_solid_points: usize,
    /// merged velocity node count
    pub n_vel_nodes: usize,
    pub vel_node_of_fluid: Vec<usize>,
    pub vel_node_of_solid: Vec<usize>,
    pub n_pressure: usize,
    /// flattened per-fluid-triangle pressure node indices
    pub tri_pressure: Vec<usize>,
    pub pressure_order: usize,
    pub interface_pairs: Vec<(usize, usize)>,
    pub dirichlet: Vec<DirichletNode>,
    /// pressure DOF pinned to zero when the fluid boundary has no Sigma2 part
    pub pinned_pressure: Option<usize>,
}

impl DofMap {
    pub fn n_dofs(&self) -> usize {
        2 * self.n_vel_nodes + self.n_pressure
    }

    #[inline]
    pub fn u_dof(&self, fluid_point: usize, comp: usize) -> usize {
        2 * self.vel_node_of_fluid[fluid_point] + comp
    }

    #[inline]
    pub fn v_dof(&self, solid_point: usize, comp: usize) -> usize {
        2 * self.vel_node_of_solid[solid_point] + comp
    }

    #[inline]
    pub fn p_dof(&self, pressure_node: usize) -> usize {
        2 * self.n_vel_nodes + pressure_node
    }
}

/// Match interface grid points of the two meshes by position.
///
/// Returns `(fluid_point, solid_point)` pairs covering every Interface grid
/// point of both meshes, or an error when some point has no partner within
/// the tolerance.
pub fn match_interface(fluid: &Mesh, solid: &Mesh, tol: f64) -> Result<Vec<(usize, usize)>, Error> {
    let fp = fluid.boundary_points(BoundaryMarker::Interface);
    let sp = solid.boundary_points(BoundaryMarker::Interface);
    if fp.len() != sp.len() {
        return Err(Error::Connectivity(format!(
            "interface point counts differ: {} fluid vs {} solid",
            fp.len(),
            sp.len()
        )));
    }
    let mut pairs = Vec::with_capacity(fp.len());
    let mut used = vec![false; sp.len()];
    for &f in &fp {
        let pf: Point2 = fluid.grid_points[f];
        let mut best = None;
        let mut best_d = tol;
        for (k, &s) in sp.iter().enumerate() {
            if used[k] {
                continue;
            }
            let d = (solid.grid_points[s] - pf).norm();
            if d <= best_d {
                best_d = d;
                best = Some(k);
            }
        }
        match best {
            Some(k) => {
                used[k] = true;
                pairs.push((f, sp[k]));
            }
            None => return Err(Error::UnmatchedInterfacePoint { fluid_point: f }),
        }
    }
    Ok(pairs)
}

/// Build the merged DOF map.
///
/// `interface_pairs` must be a bijection between the Interface grid points
/// of the two meshes (see [`match_interface`]). The pressure constant is
/// pinned when the fluid mesh has no Sigma2 boundary edge.
pub fn build_dof_map(
    fluid: &Mesh,
    solid: &Mesh,
    interface_pairs: &[(usize, usize)],
) -> Result<DofMap, Error> {
    let n_f = fluid.n_grid_points();
    let n_s = solid.n_grid_points();

    // validate the pairing against the meshes' interface point sets
    let fluid_iface = fluid.boundary_points(BoundaryMarker::Interface);
    let solid_iface = solid.boundary_points(BoundaryMarker::Interface);
    let mut fluid_partner = vec![usize::MAX; n_f];
    let mut solid_claimed = vec![false; n_s];
    for &(f, s) in interface_pairs {
        if f >= n_f || s >= n_s {
            return Err(Error::Connectivity(format!("interface pair ({f},{s}) out of range")));
        }
        if fluid_partner[f] != usize::MAX || solid_claimed[s] {
            return Err(Error::Connectivity(format!(
                "interface pair ({f},{s}) duplicates an earlier pair"
            )));
        }
        fluid_partner[f] = s;
        solid_claimed[s] = true;
    }
    for &f in &fluid_iface {
        if fluid_partner[f] == usize::MAX {
            return Err(Error::UnmatchedInterfacePoint { fluid_point: f });
        }
    }
    if interface_pairs.len() != fluid_iface.len() || fluid_iface.len() != solid_iface.len() {
        return Err(Error::Connectivity(format!(
            "interface pairing is not a bijection: {} pairs, {} fluid points, {} solid points",
            interface_pairs.len(),
            fluid_iface.len(),
            solid_iface.len()
        )));
    }

    // merged velocity nodes: all fluid points, then unpaired solid points
    let vel_node_of_fluid: Vec<usize> = (0..n_f).collect();
    let mut vel_node_of_solid = vec![usize::MAX; n_s];
    for &(f, s) in interface_pairs {
        vel_node_of_solid[s] = f;
    }
    let mut n_vel_nodes = n_f;
    for s in 0..n_s {
        if vel_node_of_solid[s] == usize::MAX {
            vel_node_of_solid[s] = n_vel_nodes;
            n_vel_nodes += 1;
        }
    }

    // pressure nodes on the fluid mesh: P_{m-1}
    let pressure_order = fluid.order.saturating_sub(1).max(1);
    if fluid.n_triangles() > 0 && fluid.order < 2 {
        return Err(Error::UnsupportedOrder(fluid.order));
    }
    let nv = fluid.vertices.len();
    let (n_pressure, tri_pressure) = match pressure_order {
        1 => {
            let mut tp = Vec::with_capacity(3 * fluid.n_triangles());
            for t in &fluid.triangles {
                tp.extend_from_slice(t);
            }
            (nv, tp)
        }
        2 => {
            let lp = node_count(2);
            let mut tp = Vec::with_capacity(lp * fluid.n_triangles());
            for j in 0..fluid.n_triangles() {
                let t = fluid.triangles[j];
                tp.extend_from_slice(&t);
                for e in 0..3 {
                    tp.push(nv + fluid.tri_edges[j][e]);
                }
            }
            (nv + fluid.edges.len(), tp)
        }
        other => return Err(Error::UnsupportedOrder(other + 1)),
    };

    // Dirichlet sets: Sigma1 fluid points, Sigma3 solid points
    let sigma1 = fluid.boundary_points(BoundaryMarker::Sigma1);
    let sigma3 = solid.boundary_points(BoundaryMarker::Sigma3);
    let mut claim_fluid = vec![None; n_vel_nodes];
    let mut claim_solid = vec![None; n_vel_nodes];
    for &f in &sigma1 {
        claim_fluid[vel_node_of_fluid[f]] = Some(f);
    }
    for &s in &sigma3 {
        claim_solid[vel_node_of_solid[s]] = Some(s);
    }
    let mut dirichlet = Vec::new();
    for node in 0..n_vel_nodes {
        let d = match (claim_fluid[node], claim_solid[node]) {
            (Some(f), Some(s)) => Some(DirichletNode {
                vel_node: node,
                source: DirichletSource::Both,
                fluid_point: Some(f),
                solid_point: Some(s),
            }),
            (Some(f), None) => Some(DirichletNode {
                vel_node: node,
                source: DirichletSource::FluidInflow,
                fluid_point: Some(f),
                solid_point: None,
            }),
            (None, Some(s)) => Some(DirichletNode {
                vel_node: node,
                source: DirichletSource::SolidFixed,
                fluid_point: None,
                solid_point: Some(s),
            }),
            (None, None) => None,
        };
        if let Some(d) = d {
            dirichlet.push(d);
        }
    }

    let has_outflow =
        fluid.boundary_edges.iter().any(|be| be.marker == BoundaryMarker::Sigma2);
    let pinned_pressure = if has_outflow || n_pressure == 0 { None } else { Some(0) };

    Ok(DofMap {
        n_fluid_points: n_f,
        n_solid_points: n_s,
        n_vel_nodes,
        vel_node_of_fluid,
        vel_node_of_solid,
        n_pressure,
        tri_pressure,
        pressure_order,
        interface_pairs: interface_pairs.to_vec(),
        dirichlet,
        pinned_pressure,
    })
}
