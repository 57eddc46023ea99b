//! Fluid-mesh motion between time levels.
//!
//! The interface is advanced explicitly from the previous solid velocity,
//! interior vertices follow a stiffened linear elasticity solve on the
//! initial fluid mesh (assembled and factorized once), and the two point
//! sets at consecutive levels form an [`AleFrame`]: positions at any
//! intermediate time are the nodewise linear interpolation, the mesh
//! velocity is the per-node difference quotient, and the discrete geometric
//! conservation law ties integrals over the three mesh levels together.

use crate::mesh::{ElementGeom, Mesh};
use crate::ref_elem::{BasisTable, QuadRule};
use crate::{Error, Point2, Vec2};
use faer::sparse::{SparseColMat, Triplet};
use faer::sparse::linalg::solvers::Lu;
use faer::prelude::*;

/// Explicit interface advance: `phi + dt * v`, nodewise.
pub fn advance_interface(phi: &[Point2], v: &[Vec2], dt: f64) -> Vec<Point2> {
    assert_eq!(phi.len(), v.len());
    phi.iter().zip(v).map(|(p, vi)| *p + dt * vi).collect()
}

/// Grid-point positions at two consecutive time levels over a shared
/// topology. Positions at intermediate times interpolate linearly.
#[derive(Debug, Clone)]
pub struct AleFrame {
    pub old: Vec<Point2>,
    pub new: Vec<Point2>,
    pub dt: f64,
}

impl AleFrame {
    /// Positions at the normalized time `theta` in [0,1]
    /// (0 = old level, 1 = new level).
    pub fn points_at(&self, theta: f64) -> Vec<Point2> {
        self.old
            .iter()
            .zip(&self.new)
            .map(|(o, n)| Point2::from((1.0 - theta) * o.coords + theta * n.coords))
            .collect()
    }

    /// The half-step positions `(old + new) / 2`.
    pub fn midpoints(&self) -> Vec<Point2> {
        self.points_at(0.5)
    }
}

/// Build a frame and verify that neither the new nor the half-step mesh is
/// tangled (positive Jacobians at all quadrature points).
pub fn build_frame(
    mesh: &Mesh,
    old: Vec<Point2>,
    new: Vec<Point2>,
    dt: f64,
) -> Result<AleFrame, Error> {
    assert_eq!(old.len(), new.len(), "grid-point counts must match");
    assert!(dt > 0.0);
    let frame = AleFrame { old, new, dt };
    mesh.validate_jacobians(&frame.new).map_err(|e| tangle("t^n", e))?;
    mesh.validate_jacobians(&frame.midpoints()).map_err(|e| tangle("t^{n-1/2}", e))?;
    Ok(frame)
}

fn tangle(when: &'static str, e: Error) -> Error {
    match e {
        Error::NonPositiveJacobian { tri, det } => Error::MeshTangling { when, tri, det },
        other => other,
    }
}

/// Mesh velocity: per-node difference quotient `(new - old) / dt`.
pub fn mesh_velocity(frame: &AleFrame) -> Vec<Vec2> {
    frame.old.iter().zip(&frame.new).map(|(o, n)| (n - o) / frame.dt).collect()
}

fn gcl_residual_impl(
    mesh: &Mesh,
    frame: &AleFrame,
    rule: &QuadRule,
    eval: &dyn Fn(usize, usize, &BasisTable) -> f64,
) -> f64 {
    let table = BasisTable::new(mesh.order, rule).expect("supported order");
    let w = mesh_velocity(frame);
    let mid = frame.midpoints();
    let mut i_new = 0.0;
    let mut i_old = 0.0;
    let mut i_mid = 0.0;
    for j in 0..mesh.n_triangles() {
        let nodes = mesh.tri_nodes(j);
        let g_new = ElementGeom::new(mesh, j, &frame.new, &table).expect("untangled");
        let g_old = ElementGeom::new(mesh, j, &frame.old, &table).expect("untangled");
        let g_mid = ElementGeom::new(mesh, j, &mid, &table).expect("untangled");
        for q in 0..table.nq {
            let f = eval(j, q, &table);
            let wq = rule.weights[q];
            i_new += wq * f * g_new.det[q];
            i_old += wq * f * g_old.det[q];
            let mut div_w = 0.0;
            for (p, &gp) in nodes.iter().enumerate() {
                div_w += w[gp].dot(&(g_mid.inv_jt[q] * table.grad(q, p)));
            }
            i_mid += wq * f * div_w * g_mid.det[q];
        }
    }
    (i_new - i_old - frame.dt * i_mid).abs()
}

/// Residual of the discrete geometric conservation law for a scalar FE
/// coefficient vector `f`: integrals of the frozen-coefficient function over
/// the new, old and half-step meshes must satisfy
/// `I_new - I_old = dt * I_mid(f div w)` exactly at quadrature level.
pub fn gcl_residual(mesh: &Mesh, frame: &AleFrame, f: &[f64], rule: &QuadRule) -> f64 {
    assert_eq!(f.len(), mesh.n_grid_points());
    gcl_residual_impl(mesh, frame, rule, &|j, q, table| {
        let mut v = 0.0;
        for (p, &gp) in mesh.tri_nodes(j).iter().enumerate() {
            v += f[gp] * table.value(q, p);
        }
        v
    })
}

/// Same residual with the integrand `|u|^2` for a vector coefficient field.
pub fn gcl_residual_squared(mesh: &Mesh, frame: &AleFrame, u: &[Vec2], rule: &QuadRule) -> f64 {
    assert_eq!(u.len(), mesh.n_grid_points());
    gcl_residual_impl(mesh, frame, rule, &|j, q, table| {
        let mut v = Vec2::zeros();
        for (p, &gp) in mesh.tri_nodes(j).iter().enumerate() {
            v += u[gp] * table.value(q, p);
        }
        v.norm_squared()
    })
}

/// Per-triangle stiffening coefficient of the mesh-motion solve:
/// `1 + (max_i |T_i| - min_i |T_i|) / |T_j|` over the initial mesh.
pub fn stiffening_coefficients(mesh: &Mesh) -> Vec<f64> {
    let areas: Vec<f64> = (0..mesh.n_triangles())
        .map(|j| {
            let t = mesh.triangles[j];
            let (a, b, c) = (mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
            0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
        })
        .collect();
    let max = areas.iter().cloned().fold(f64::MIN, f64::max);
    let min = areas.iter().cloned().fold(f64::MAX, f64::min);
    areas.iter().map(|a| 1.0 + (max - min) / a).collect()
}

/// Pseudo-elastic mesh-motion operator on the initial fluid mesh.
///
/// P1 vector elasticity with per-triangle stiffening, assembled and
/// factorized once; every step only changes the boundary displacement data.
pub struct MeshMotionOperator {
    initial_vertices: Vec<Point2>,
    /// vertex ids on the boundary, ascending
    boundary: Vec<usize>,
    /// vertex -> rank among interior vertices (dof = 2*rank + comp)
    interior_rank: Vec<Option<usize>>,
    n_interior: usize,
    lu: Lu<usize, f64>,
    k_fb: SparseColMat<usize, f64>,
    /// full stiffness kept for residual diagnostics
    k_full: SparseColMat<usize, f64>,
}

impl MeshMotionOperator {
    pub fn new(mesh: &Mesh) -> Result<Self, Error> {
        let nv = mesh.vertices.len();
        let mut is_boundary = vec![false; nv];
        for e in &mesh.edges {
            if e.tris.iter().filter(|t| t.is_some()).count() == 1 {
                is_boundary[e.v[0]] = true;
                is_boundary[e.v[1]] = true;
            }
        }
        let boundary: Vec<usize> = (0..nv).filter(|&v| is_boundary[v]).collect();
        let mut interior_rank = vec![None; nv];
        let mut n_interior = 0;
        for v in 0..nv {
            if !is_boundary[v] {
                interior_rank[v] = Some(n_interior);
                n_interior += 1;
            }
        }
        let mut boundary_rank = vec![None; nv];
        for (r, &v) in boundary.iter().enumerate() {
            boundary_rank[v] = Some(r);
        }

        let stiff = stiffening_coefficients(mesh);
        let mut t_ff: Vec<Triplet<usize, usize, f64>> = Vec::new();
        let mut t_fb: Vec<Triplet<usize, usize, f64>> = Vec::new();
        let mut t_full: Vec<Triplet<usize, usize, f64>> = Vec::new();
        for (j, tri) in mesh.triangles.iter().enumerate() {
            let (mu, lambda) = (stiff[j], stiff[j]);
            let pa = mesh.vertices[tri[0]];
            let pb = mesh.vertices[tri[1]];
            let pc = mesh.vertices[tri[2]];
            let det = (pb.x - pa.x) * (pc.y - pa.y) - (pc.x - pa.x) * (pb.y - pa.y);
            let area = 0.5 * det;
            // constant P1 gradients
            let grads = [
                Vec2::new(pb.y - pc.y, pc.x - pb.x) / det,
                Vec2::new(pc.y - pa.y, pa.x - pc.x) / det,
                Vec2::new(pa.y - pb.y, pb.x - pa.x) / det,
            ];
            for a in 0..3 {
                for b in 0..3 {
                    let ga = grads[a];
                    let gb = grads[b];
                    for alpha in 0..2 {
                        for beta in 0..2 {
                            let mut k = mu * ga[beta] * gb[alpha] + lambda * ga[alpha] * gb[beta];
                            if alpha == beta {
                                k += mu * ga.dot(&gb);
                            }
                            k *= area;
                            let (va, vb) = (tri[a], tri[b]);
                            let (row, col) = (2 * va + alpha, 2 * vb + beta);
                            t_full.push(Triplet::new(row, col, k));
                            match (interior_rank[va], interior_rank[vb]) {
                                (Some(ra), Some(rb)) => {
                                    t_ff.push(Triplet::new(2 * ra + alpha, 2 * rb + beta, k))
                                }
                                (Some(ra), None) => {
                                    let rb = boundary_rank[vb].unwrap();
                                    t_fb.push(Triplet::new(2 * ra + alpha, 2 * rb + beta, k))
                                }
                                _ => {}
                            }
                        }
                    }
                }
            }
        }
        let nf = 2 * n_interior;
        let nb = 2 * boundary.len();
        let k_ff = SparseColMat::try_new_from_triplets(nf.max(1), nf.max(1), &t_ff)
            .map_err(|e| Error::SolveFailed(format!("mesh motion stiffness: {e:?}")))?;
        let k_fb = SparseColMat::try_new_from_triplets(nf.max(1), nb.max(1), &t_fb)
            .map_err(|e| Error::SolveFailed(format!("mesh motion coupling: {e:?}")))?;
        let k_full = SparseColMat::try_new_from_triplets(2 * nv, 2 * nv, &t_full)
            .map_err(|e| Error::SolveFailed(format!("mesh motion full: {e:?}")))?;
        let lu = k_ff
            .sp_lu()
            .map_err(|e| Error::SolveFailed(format!("mesh motion factorization: {e:?}")))?;
        Ok(MeshMotionOperator {
            initial_vertices: mesh.vertices.clone(),
            boundary,
            interior_rank,
            n_interior,
            lu,
            k_fb,
            k_full,
        })
    }

    /// Vertex ids that require boundary displacement data, ascending.
    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary
    }

    /// Solve for all vertex positions given per-boundary-vertex
    /// displacements (indexed like [`Self::boundary_vertices`]) relative to
    /// the initial mesh.
    pub fn solve(&self, boundary_disp: &[Vec2]) -> Result<Vec<Point2>, Error> {
        assert_eq!(boundary_disp.len(), self.boundary.len());
        let nf = 2 * self.n_interior;
        let mut out: Vec<Point2> = self.initial_vertices.clone();
        for (r, &v) in self.boundary.iter().enumerate() {
            out[v] += boundary_disp[r];
        }
        if nf == 0 {
            return Ok(out);
        }
        let mut db = Mat::zeros(2 * self.boundary.len(), 1);
        for (r, d) in boundary_disp.iter().enumerate() {
            db[(2 * r, 0)] = d.x;
            db[(2 * r + 1, 0)] = d.y;
        }
        let rhs = &self.k_fb * &db;
        let mut b = Mat::zeros(nf, 1);
        for i in 0..nf {
            b[(i, 0)] = -rhs[(i, 0)];
        }
        let sol = self.lu.solve(&b);
        for (v, rank) in self.interior_rank.iter().enumerate() {
            if let Some(r) = rank {
                out[v] += Vec2::new(sol[(2 * r, 0)], sol[(2 * r + 1, 0)]);
            }
        }
        Ok(out)
    }

    /// Apply the full (unconstrained) stiffness to a displacement field over
    /// all vertices. Rigid motions are in the kernel.
    pub fn apply_full(&self, disp: &[Vec2]) -> Vec<Vec2> {
        let n = self.initial_vertices.len();
        assert_eq!(disp.len(), n);
        let mut d = Mat::zeros(2 * n, 1);
        for (v, dv) in disp.iter().enumerate() {
            d[(2 * v, 0)] = dv.x;
            d[(2 * v + 1, 0)] = dv.y;
        }
        let r = &self.k_full * &d;
        (0..n).map(|v| Vec2::new(r[(2 * v, 0)], r[(2 * v + 1, 0)])).collect()
    }
}

/// Place all grid points of the moved fluid mesh.
///
/// Vertices come from the mesh-motion solve, every edge midpoint starts as
/// the midpoint of its endpoints, fixed-boundary grid points are reset to
/// their initial positions (this restores curved rigid boundaries), and
/// interface grid points are overwritten with the solid position
/// coefficients so the two sides match bitwise.
pub fn place_grid_points(
    mesh: &Mesh,
    new_vertices: &[Point2],
    interface_pairs: &[(usize, usize)],
    phi: &[Point2],
) -> Vec<Point2> {
    assert_eq!(new_vertices.len(), mesh.vertices.len());
    assert!(mesh.order <= 2, "moving meshes support order 2");
    let mut pts = mesh.grid_points.clone();
    pts[..new_vertices.len()].copy_from_slice(new_vertices);
    for e in &mesh.edges {
        if !e.nodes.is_empty() {
            pts[e.nodes[0]] =
                Point2::from((pts[e.v[0]].coords + pts[e.v[1]].coords) / 2.0);
        }
    }
    // fixed boundary edges keep their original grid points
    for e in &mesh.edges {
        if let Some(m) = e.marker {
            if m != crate::mesh::BoundaryMarker::Interface {
                pts[e.v[0]] = mesh.grid_points[e.v[0]];
                pts[e.v[1]] = mesh.grid_points[e.v[1]];
                for &n in &e.nodes {
                    pts[n] = mesh.grid_points[n];
                }
            }
        }
    }
    // interface grid points track the solid exactly
    for &(fp, sp) in interface_pairs {
        pts[fp] = phi[sp];
    }
    pts
}
