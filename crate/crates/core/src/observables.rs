//! Derived quantities: traction forces on immersed boundaries, material
//! point displacement traces, and norms of solid position fields.

use crate::assembly::SystemState;
use crate::dof::DofMap;
use crate::mesh::{ref_edge_point, ref_edge_tangent, BoundaryMarker, ElementGeom, Mesh};
use crate::ref_elem::{basis_eval, gauss_legendre_unit, quad_rule, BasisTable};
use crate::{Error, Mat2, Point2, Vec2};

/// Boundary edges forming a probed surface, with the force scale factor.
/// Normals are oriented outward from the enclosed body, i.e. opposite to
/// the fluid-domain outward normal.
#[derive(Debug, Clone)]
pub struct TractionProbe {
    pub edges: Vec<(usize, u8)>,
    pub scale: f64,
}

impl TractionProbe {
    /// Collect all fluid boundary edges carrying one of the markers.
    pub fn from_markers(fluid: &Mesh, markers: &[BoundaryMarker], scale: f64) -> TractionProbe {
        let edges = fluid
            .boundary_edges
            .iter()
            .filter(|be| markers.contains(&be.marker))
            .map(|be| (be.tri, be.local_edge))
            .collect();
        TractionProbe { edges, scale }
    }

    /// Integral of the body-outward unit normal over the probe surface;
    /// zero on closed surfaces.
    pub fn normal_integral(&self, fluid: &Mesh, points: &[Point2]) -> Vec2 {
        let (nodes_1d, w_1d) = gauss_legendre_unit(fluid.order + 1);
        let mut total = Vec2::zeros();
        for &(tri, ledge) in &self.edges {
            let tnodes = fluid.tri_nodes(tri);
            for (s, ws) in nodes_1d.iter().zip(&w_1d) {
                let basis = basis_eval(fluid.order, ref_edge_point(ledge, *s)).expect("order");
                let mut jac = Mat2::zeros();
                for (p, &g) in tnodes.iter().enumerate() {
                    jac += points[g].coords * basis.grad[p].transpose();
                }
                let tang = jac * ref_edge_tangent(ledge);
                // fluid outward is (t_y, -t_x); body outward is the negative
                total += *ws * Vec2::new(-tang.y, tang.x);
            }
        }
        total
    }
}

/// Force on the probed body: `scale * \int_S sigma^f(u, p) n ds` with `n`
/// outward from the body, evaluated on the current fluid mesh.
/// Returns `(drag, lift)` = (x, y) components.
pub fn lift_drag(
    fluid: &Mesh,
    dof: &DofMap,
    state: &SystemState,
    params_rho_nu: (f64, f64),
    probe: &TractionProbe,
) -> Result<(f64, f64), Error> {
    let (rho_f, nu_f) = params_rho_nu;
    let points = &state.fluid_points;
    let (nodes_1d, w_1d) = gauss_legendre_unit(fluid.order + 1);
    let lp = crate::ref_elem::node_count(dof.pressure_order);
    let mut force = Vec2::zeros();
    for &(tri, ledge) in &probe.edges {
        let is_boundary = fluid
            .boundary_edges
            .iter()
            .any(|be| be.tri == tri && be.local_edge == ledge);
        if !is_boundary {
            return Err(Error::Connectivity(format!(
                "probe edge ({tri},{ledge}) is not a boundary edge"
            )));
        }
        let tnodes = fluid.tri_nodes(tri);
        let pnodes = &dof.tri_pressure[tri * lp..(tri + 1) * lp];
        for (s, ws) in nodes_1d.iter().zip(&w_1d) {
            let xh = ref_edge_point(ledge, *s);
            let basis = basis_eval(fluid.order, xh)?;
            let pbasis = basis_eval(dof.pressure_order, xh)?;
            let mut jac = Mat2::zeros();
            for (p, &g) in tnodes.iter().enumerate() {
                jac += points[g].coords * basis.grad[p].transpose();
            }
            let inv_jt = jac
                .try_inverse()
                .ok_or(Error::NonPositiveJacobian { tri, det: jac.determinant() })?
                .transpose();
            // velocity gradient and pressure at the edge point
            let mut grad_u = Mat2::zeros();
            for (p, &g) in tnodes.iter().enumerate() {
                let gp = inv_jt * basis.grad[p];
                grad_u += state.u_at(dof, g) * gp.transpose();
            }
            let mut pr = 0.0;
            for (c, &pn) in pnodes.iter().enumerate() {
                pr += state.pressure[pn] * pbasis.value[c];
            }
            let sigma = rho_f * nu_f * (grad_u + grad_u.transpose()) - pr * Mat2::identity();
            let tang = jac * ref_edge_tangent(ledge);
            // body-outward normal times ds
            let n_ds = *ws * Vec2::new(-tang.y, tang.x);
            force += sigma * n_ds;
        }
    }
    Ok((probe.scale * force.x, probe.scale * force.y))
}

/// Locate a material point in the solid reference mesh: triangle index and
/// reference coordinates. Newton on the isoparametric map, seeded by the
/// affine inverse.
pub fn locate_point(solid: &Mesh, z: Point2) -> Result<(usize, [f64; 2]), Error> {
    let mut best: Option<(usize, [f64; 2], f64)> = None;
    for j in 0..solid.n_triangles() {
        let t = solid.triangles[j];
        let (a, b, c) = (solid.vertices[t[0]], solid.vertices[t[1]], solid.vertices[t[2]]);
        let m = Mat2::from_columns(&[b - a, c - a]);
        let Some(minv) = m.try_inverse() else { continue };
        let aff = minv * (z - a);
        let mut xh = [aff.x, aff.y];
        // Newton refinement handles curved triangles
        for _ in 0..12 {
            let x = solid.iso_map_eval(j, xh);
            let r = z - x;
            if r.norm() < 1e-13 {
                break;
            }
            let Ok((jac, _)) = solid.iso_map_jacobian(j, xh) else { break };
            let Some(ji) = jac.try_inverse() else { break };
            let d = ji * r;
            xh[0] += d.x;
            xh[1] += d.y;
        }
        let resid = (z - solid.iso_map_eval(j, xh)).norm();
        if resid > 1e-10 {
            continue;
        }
        // smallest barycentric coordinate measures interiority
        let l0 = 1.0 - xh[0] - xh[1];
        let inside = l0.min(xh[0]).min(xh[1]);
        if inside >= -1e-10 {
            match best {
                Some((_, _, bi)) if bi >= inside => {}
                _ => best = Some((j, xh, inside)),
            }
        }
    }
    best.map(|(j, xh, _)| (j, xh)).ok_or(Error::PointOutsideSolid { x: z.x, y: z.y })
}

/// Displacement `phi(z) - z` of a located material point.
pub fn displacement_at(
    solid: &Mesh,
    phi: &[Point2],
    location: (usize, [f64; 2]),
    z: Point2,
) -> Vec2 {
    let (j, xh) = location;
    let basis = basis_eval(solid.order, xh).expect("order");
    let mut x = Vec2::zeros();
    for (p, &g) in solid.tri_nodes(j).iter().enumerate() {
        x += basis.value[p] * phi[g].coords;
    }
    x - z.coords
}

/// Convenience: locate and evaluate in one call.
pub fn tail_displacement(solid: &Mesh, phi: &[Point2], z: Point2) -> Result<Vec2, Error> {
    let loc = locate_point(solid, z)?;
    Ok(displacement_at(solid, phi, loc, z))
}

/// Norms of a scalar field difference on the solid reference mesh.
#[derive(Debug, Clone, Copy, Default)]
pub struct FieldNorms {
    pub l2: f64,
    pub linf: f64,
    pub grad_l2: f64,
    pub grad_linf: f64,
}

/// Norms of one component of the difference `a - b` of two solid position
/// (or displacement) coefficient fields. The max norms sample all
/// quadrature and grid points.
pub fn field_norms_component(
    solid: &Mesh,
    a: &[Point2],
    b: &[Point2],
    comp: usize,
) -> Result<FieldNorms, Error> {
    assert_eq!(a.len(), solid.n_grid_points());
    assert_eq!(b.len(), solid.n_grid_points());
    let rule = quad_rule(3 * solid.order + 2)?;
    let tab = BasisTable::new(solid.order, &rule)?;
    let mut out = FieldNorms::default();
    let diff = |g: usize| a[g][comp] - b[g][comp];
    for g in 0..solid.n_grid_points() {
        out.linf = out.linf.max(diff(g).abs());
    }
    for j in 0..solid.n_triangles() {
        let nodes = solid.tri_nodes(j);
        let geom = ElementGeom::new(solid, j, &solid.grid_points, &tab)?;
        for q in 0..tab.nq {
            let wq = rule.weights[q] * geom.det[q];
            let mut val = 0.0;
            let mut grad = Vec2::zeros();
            for (p, &g) in nodes.iter().enumerate() {
                val += diff(g) * tab.value(q, p);
                grad += diff(g) * (geom.inv_jt[q] * tab.grad(q, p));
            }
            out.l2 += wq * val * val;
            out.grad_l2 += wq * grad.norm_squared();
            out.linf = out.linf.max(val.abs());
            out.grad_linf = out.grad_linf.max(grad.norm());
        }
    }
    out.l2 = out.l2.sqrt();
    out.grad_l2 = out.grad_l2.sqrt();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dof::build_dof_map;
    use crate::mesh::{
        generate_hole_mesh, generate_rectangle_mesh, BoundaryMarker, SideMarkers,
    };

    fn all_sigma1() -> SideMarkers {
        SideMarkers {
            left: BoundaryMarker::Sigma1,
            right: BoundaryMarker::Sigma1,
            bottom: BoundaryMarker::Sigma1,
            top: BoundaryMarker::Sigma1,
        }
    }

    fn circle_edges(fluid: &Mesh, c: Point2, r: f64) -> Vec<(usize, u8)> {
        fluid
            .boundary_edges
            .iter()
            .filter(|be| {
                let (a, b) = fluid.edge_endpoints(be.tri, be.local_edge);
                ((fluid.vertices[a] - c).norm() - r).abs() < 1e-9
                    && ((fluid.vertices[b] - c).norm() - r).abs() < 1e-9
            })
            .map(|be| (be.tri, be.local_edge))
            .collect()
    }

    #[test]
    fn closed_probe_has_zero_normal_integral_and_zero_force_under_pressure() {
        // full circle inside a box: the hole boundary is a closed curve
        let c = Point2::new(1.5, 1.5);
        let fluid = generate_hole_mesh(
            (0.0, 3.0, 0.0, 3.0),
            (c, 0.5),
            0.125,
            2,
            all_sigma1(),
            BoundaryMarker::Sigma1,
        )
        .unwrap();
        let probe = TractionProbe { edges: circle_edges(&fluid, c, 0.5), scale: 1000.0 };
        assert!(probe.edges.len() >= 16);
        let n_int = probe.normal_integral(&fluid, &fluid.grid_points);
        assert!(n_int.norm() < 1e-10, "closed-surface normal integral {n_int:?}");

        let solid = Mesh::empty(2);
        let dof = build_dof_map(&fluid, &solid, &[]).unwrap();
        let mut state = SystemState::rest(&dof, &fluid, &solid);
        state.pressure.iter_mut().for_each(|p| *p = 1.0);
        let (dx, dy) = lift_drag(&fluid, &dof, &state, (1.0, 1.0), &probe).unwrap();
        assert!(dx.abs() < 1e-7 && dy.abs() < 1e-7, "force ({dx}, {dy})");
    }

    #[test]
    fn half_circle_probe_under_unit_pressure() {
        // the case-I geometry: semicircle of radius 0.5 on the floor
        let fluid = generate_hole_mesh(
            (0.0, 6.5, -0.5, 1.0),
            (Point2::new(1.5, -0.5), 0.5),
            0.0625,
            2,
            all_sigma1(),
            BoundaryMarker::Sigma1,
        )
        .unwrap();
        let c = Point2::new(1.5, -0.5);
        let probe = TractionProbe { edges: circle_edges(&fluid, c, 0.5), scale: 1000.0 };
        // normal integral over the upper half circle, body-outward: (0, 2r)
        let n_int = probe.normal_integral(&fluid, &fluid.grid_points);
        assert!((n_int - Vec2::new(0.0, 1.0)).norm() < 1e-9, "{n_int:?}");

        let solid = Mesh::empty(2);
        let dof = build_dof_map(&fluid, &solid, &[]).unwrap();
        let mut state = SystemState::rest(&dof, &fluid, &solid);
        state.pressure.iter_mut().for_each(|p| *p = 1.0);
        let (drag, lift) = lift_drag(&fluid, &dof, &state, (1.0, 1.0), &probe).unwrap();
        assert!(drag.abs() < 1e-6, "drag {drag}");
        assert!((lift + 1000.0).abs() < 1e-6, "lift {lift}");
    }

    #[test]
    fn probe_rejects_non_boundary_edges() {
        let fluid =
            generate_rectangle_mesh((0.0, 1.0, 0.0, 1.0), 0.5, 2, SideMarkers::default())
                .unwrap();
        let solid = Mesh::empty(2);
        let dof = build_dof_map(&fluid, &solid, &[]).unwrap();
        let state = SystemState::rest(&dof, &fluid, &solid);
        // the diagonal of cell 0 is interior
        let probe = TractionProbe { edges: vec![(0, 2)], scale: 1.0 };
        assert!(lift_drag(&fluid, &dof, &state, (1.0, 1.0), &probe).is_err());
    }

    #[test]
    fn zero_state_gives_zero_force() {
        let fluid =
            generate_rectangle_mesh((0.0, 1.0, 0.0, 1.0), 0.25, 2, SideMarkers::default())
                .unwrap();
        let solid = Mesh::empty(2);
        let dof = build_dof_map(&fluid, &solid, &[]).unwrap();
        let state = SystemState::rest(&dof, &fluid, &solid);
        let probe = TractionProbe::from_markers(&fluid, &[BoundaryMarker::Sigma2], 1000.0);
        let (d, l) = lift_drag(&fluid, &dof, &state, (1.0, 0.01), &probe).unwrap();
        assert_eq!((d, l), (0.0, 0.0));
    }

    #[test]
    fn lift_drag_is_linear_in_state() {
        let c = Point2::new(1.5, 1.5);
        let fluid = generate_hole_mesh(
            (0.0, 3.0, 0.0, 3.0),
            (c, 0.5),
            0.25,
            2,
            all_sigma1(),
            BoundaryMarker::Sigma1,
        )
        .unwrap();
        let probe = TractionProbe { edges: circle_edges(&fluid, c, 0.5), scale: 7.0 };
        let solid = Mesh::empty(2);
        let dof = build_dof_map(&fluid, &solid, &[]).unwrap();
        let mut s = 1234u64;
        let mut rnd = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut sa = SystemState::rest(&dof, &fluid, &solid);
        let mut sb = SystemState::rest(&dof, &fluid, &solid);
        sa.vel.iter_mut().for_each(|v| *v = rnd());
        sa.pressure.iter_mut().for_each(|v| *v = rnd());
        sb.vel.iter_mut().for_each(|v| *v = rnd());
        sb.pressure.iter_mut().for_each(|v| *v = rnd());
        let mut sum = SystemState::rest(&dof, &fluid, &solid);
        for (o, (x, y)) in sum.vel.iter_mut().zip(sa.vel.iter().zip(&sb.vel)) {
            *o = x + y;
        }
        for (o, (x, y)) in sum.pressure.iter_mut().zip(sa.pressure.iter().zip(&sb.pressure)) {
            *o = x + y;
        }
        let fa = lift_drag(&fluid, &dof, &sa, (1.3, 0.7), &probe).unwrap();
        let fb = lift_drag(&fluid, &dof, &sb, (1.3, 0.7), &probe).unwrap();
        let fs = lift_drag(&fluid, &dof, &sum, (1.3, 0.7), &probe).unwrap();
        assert!((fs.0 - fa.0 - fb.0).abs() < 1e-9 * (1.0 + fs.0.abs()));
        assert!((fs.1 - fa.1 - fb.1).abs() < 1e-9 * (1.0 + fs.1.abs()));
    }

    #[test]
    fn displacement_trivials() {
        let markers = SideMarkers {
            left: BoundaryMarker::Sigma3,
            right: BoundaryMarker::Sigma3,
            bottom: BoundaryMarker::Sigma3,
            top: BoundaryMarker::Sigma3,
        };
        let solid = generate_rectangle_mesh((0.0, 1.0, 0.0, 1.0), 0.25, 2, markers).unwrap();
        let z = Point2::new(0.6, 0.2);
        let d = tail_displacement(&solid, &solid.grid_points, z).unwrap();
        assert!(d.norm() < 1e-12);
        // rigid translation
        let c = Vec2::new(0.2, -0.7);
        let phi: Vec<Point2> = solid.grid_points.iter().map(|p| p + c).collect();
        let d = tail_displacement(&solid, &phi, z).unwrap();
        assert!((d - c).norm() < 1e-12);
        // outside point
        assert!(tail_displacement(&solid, &phi, Point2::new(3.0, 3.0)).is_err());
    }

    #[test]
    fn field_norms_hand_cases() {
        let markers = SideMarkers {
            left: BoundaryMarker::Sigma3,
            right: BoundaryMarker::Sigma3,
            bottom: BoundaryMarker::Sigma3,
            top: BoundaryMarker::Sigma3,
        };
        let solid = generate_rectangle_mesh((0.0, 1.0, 0.0, 1.0), 0.25, 2, markers).unwrap();
        let a = solid.grid_points.clone();
        // a = b: all zeros
        let n = field_norms_component(&solid, &a, &a, 0).unwrap();
        assert_eq!((n.l2, n.linf, n.grad_l2, n.grad_linf), (0.0, 0.0, 0.0, 0.0));
        // constant difference c on the unit-area mesh
        let c = 0.37;
        let b: Vec<Point2> = a.iter().map(|p| p + Vec2::new(c, 0.0)).collect();
        let n = field_norms_component(&solid, &b, &a, 0).unwrap();
        assert!((n.l2 - c).abs() < 1e-13);
        assert!((n.linf - c).abs() < 1e-15);
        assert!(n.grad_l2 < 1e-12 && n.grad_linf < 1e-12);
        // linear difference (x, 0): gradient L2 = 1
        let b: Vec<Point2> = a.iter().map(|p| Point2::new(p.x + p.x, p.y)).collect();
        let n = field_norms_component(&solid, &b, &a, 0).unwrap();
        assert!((n.grad_l2 - 1.0).abs() < 1e-12, "{}", n.grad_l2);
        assert!((n.grad_linf - 1.0).abs() < 1e-10);
    }
}
