//! Benchmark geometries and parameter presets.
//!
//! Case I: a channel `[0, 6.5] x [-0.5, 1]` with a linear elastic
//! semicircular bump of radius 0.5 centered at (1.5, -0.5), attached to the
//! floor. Case II: a channel `[0, 2.5] x [0, 0.41]` with a rigid cylinder
//! of radius 0.05 at (0.2, 0.2) carrying an elastic bar of length 0.35 and
//! width 0.02. A third, all-straight fixture (a rectangular block on the
//! floor of a box) backs the tests that need exactness to roundoff.
//!
//! The fluid and solid meshes of every case are built from shared
//! coordinates so their interface grid points coincide bitwise.

use crate::assembly::{FsiParams, SolidUpdate};
use crate::dof::match_interface;
use crate::materials::{MaterialKind, MaterialModel};
use crate::mesh::{
    generate_hole_mesh, punch_hole, BoundaryMarker, CircleBoundary, Mesh, PunchSpec, SideMarkers,
};
use crate::{Error, Point2, Vec2};

/// A conforming fluid/solid mesh pair with its interface pairing, the
/// lift/drag probe edges (on the fluid boundary) and the displacement probe
/// point.
pub struct CaseGeometry {
    pub fluid: Mesh,
    pub solid: Mesh,
    pub pairs: Vec<(usize, usize)>,
    pub probe_edges: Vec<(usize, u8)>,
    pub tail_point: Point2,
}

/// Case I physical parameters: linear elastic solid, unit density and
/// viscosity, mu 50, lambda 500, no body force.
pub fn case_i_params(dt: f64) -> FsiParams {
    FsiParams {
        rho_f: 1.0,
        nu_f: 1.0,
        g_f: Vec2::zeros(),
        g_s: Vec2::zeros(),
        sigma_b_s: Vec2::zeros(),
        material: MaterialModel::new(MaterialKind::LinearElastic, 50.0, 500.0, 1.0),
        dt,
        quad_degree: 0,
        solid_update: SolidUpdate::SemiImplicit,
    }
}

/// Case II physical parameters: Saint Venant-Kirchhoff bar, viscosity 1e-3,
/// mu 2000, lambda 8000, gravity (0, -2) on both phases. The nonlinear
/// solid is treated semi-implicitly.
pub fn case_ii_params(dt: f64) -> FsiParams {
    FsiParams {
        rho_f: 1.0,
        nu_f: 0.001,
        g_f: Vec2::new(0.0, -2.0),
        g_s: Vec2::new(0.0, -2.0),
        sigma_b_s: Vec2::zeros(),
        material: MaterialModel::new(MaterialKind::SaintVenantKirchhoff, 2000.0, 8000.0, 1.0),
        dt,
        quad_degree: 0,
        solid_update: SolidUpdate::SemiImplicit,
    }
}

const CASE_I_CENTER: (f64, f64) = (1.5, -0.5);
const CASE_I_RADIUS: f64 = 0.5;

/// Build the case-I geometry at target mesh size `h`. With `outflow` the
/// right side is a traction boundary, otherwise the box is all-Dirichlet
/// (the free-vibration configuration).
pub fn build_case_i(h: f64, order: usize, outflow: bool) -> Result<CaseGeometry, Error> {
    let center = Point2::new(CASE_I_CENTER.0, CASE_I_CENTER.1);
    let r = CASE_I_RADIUS;
    let markers = SideMarkers {
        left: BoundaryMarker::Sigma1,
        right: if outflow { BoundaryMarker::Sigma2 } else { BoundaryMarker::Sigma1 },
        bottom: BoundaryMarker::Sigma1,
        top: BoundaryMarker::Sigma1,
    };
    let fluid = generate_hole_mesh(
        (0.0, 6.5, -0.5, 1.0),
        (center, r),
        h,
        order,
        markers,
        BoundaryMarker::Interface,
    )?;

    // the interface must be a clean arc: every interface vertex on the circle
    let mut arc: Vec<usize> = Vec::new();
    for be in &fluid.boundary_edges {
        if be.marker == BoundaryMarker::Interface {
            let (a, b) = fluid.edge_endpoints(be.tri, be.local_edge);
            for v in [a, b] {
                if ((fluid.vertices[v] - center).norm() - r).abs() > 1e-9 {
                    return Err(Error::BadMeshRequest(format!(
                        "case I at h = {h}: interface vertex off the circle; refine the mesh"
                    )));
                }
                if !arc.contains(&v) {
                    arc.push(v);
                }
            }
        }
    }
    if arc.len() < 5 {
        return Err(Error::BadMeshRequest(format!(
            "case I at h = {h}: arc resolved by only {} vertices",
            arc.len()
        )));
    }
    arc.sort_by(|&a, &b| {
        let ta = angle_on_arc(fluid.vertices[a], center);
        let tb = angle_on_arc(fluid.vertices[b], center);
        ta.partial_cmp(&tb).unwrap()
    });

    let solid = polar_half_disk(center, r, &arc.iter().map(|&v| fluid.vertices[v]).collect::<Vec<_>>(), h, order)?;
    let pairs = matched_pairs(&fluid, &solid)?;
    let probe_edges = fluid
        .boundary_edges
        .iter()
        .filter(|be| be.marker == BoundaryMarker::Interface)
        .map(|be| (be.tri, be.local_edge))
        .collect();
    Ok(CaseGeometry {
        fluid,
        solid,
        pairs,
        probe_edges,
        tail_point: Point2::new(center.x, center.y + r),
    })
}

fn angle_on_arc(p: Point2, center: Point2) -> f64 {
    let d = p - center;
    d.y.atan2(d.x)
}

/// Structured polar mesh of the half disk above `center`, whose outer ring
/// reuses the given arc vertex positions bitwise. The diameter lies on the
/// floor and is marked Sigma3; the arc is the curved interface.
fn polar_half_disk(
    center: Point2,
    r: f64,
    arc: &[Point2],
    h: f64,
    order: usize,
) -> Result<Mesh, Error> {
    let k = arc.len() - 1; // angular cells
    let nr = ((r / h).round() as usize).max(1); // radial rings
    let id = |ring: usize, a: usize| 1 + (ring - 1) * (k + 1) + a;
    let mut vertices = vec![center];
    for ring in 1..=nr {
        for p in arc.iter().take(k + 1) {
            if ring == nr {
                vertices.push(*p);
            } else {
                let s = ring as f64 / nr as f64;
                vertices.push(Point2::from(center.coords + s * (p - center)));
            }
        }
    }
    let mut triangles = Vec::new();
    let mut boundary = Vec::new();
    // center fan
    for a in 0..k {
        let t = triangles.len();
        triangles.push([0, id(1, a), id(1, a + 1)]);
        if a == 0 {
            boundary.push((t, 0u8, BoundaryMarker::Sigma3));
        }
        if a == k - 1 {
            boundary.push((t, 2u8, BoundaryMarker::Sigma3));
        }
        if nr == 1 {
            boundary.push((t, 1u8, BoundaryMarker::Interface));
        }
    }
    // ring bands
    for ring in 1..nr {
        for a in 0..k {
            let (i0, o0, o1, i1) =
                (id(ring, a), id(ring + 1, a), id(ring + 1, a + 1), id(ring, a + 1));
            let t = triangles.len();
            triangles.push([i0, o0, o1]);
            triangles.push([i0, o1, i1]);
            if a == 0 {
                boundary.push((t, 0u8, BoundaryMarker::Sigma3));
            }
            if a == k - 1 {
                boundary.push((t + 1, 1u8, BoundaryMarker::Sigma3));
            }
            if ring == nr - 1 {
                boundary.push((t, 1u8, BoundaryMarker::Interface));
            }
        }
    }
    Mesh::build(
        vertices,
        triangles,
        boundary,
        order,
        vec![CircleBoundary { center, radius: r, marker: BoundaryMarker::Interface }],
    )
}

/// Interface pairing plus the bitwise-coincidence guarantee the moving-mesh
/// identities rely on.
fn matched_pairs(fluid: &Mesh, solid: &Mesh) -> Result<Vec<(usize, usize)>, Error> {
    let pairs = match_interface(fluid, solid, 1e-9)?;
    for &(f, s) in &pairs {
        if fluid.grid_points[f] != solid.grid_points[s] {
            return Err(Error::Connectivity(format!(
                "interface grid points {f}/{s} match only approximately: {:?} vs {:?}",
                fluid.grid_points[f], solid.grid_points[s]
            )));
        }
    }
    Ok(pairs)
}

const CASE_II_CENTER: (f64, f64) = (0.2, 0.2);
const CASE_II_RADIUS: f64 = 0.05;
const BAR_TOP: f64 = 0.21;
const BAR_BOTTOM: f64 = 0.19;
const BAR_END: f64 = 0.6;

/// Build the case-II geometry. `refine` scales the resolution (1 gives
/// a fluid mesh of roughly 2400 triangles near the cylinder and bar).
pub fn build_case_ii(refine: usize, order: usize) -> Result<CaseGeometry, Error> {
    let center = Point2::new(CASE_II_CENTER.0, CASE_II_CENTER.1);
    let r = CASE_II_RADIUS;
    let n = refine.max(1);

    // graded grid: the bar rows are exact grid lines
    let mut xs = seg(0.0, 0.15, 4 * n);
    append_seg(&mut xs, 0.15, 0.65, 40 * n);
    append_seg(&mut xs, 0.65, 2.5, 37 * n);
    let mut ys = seg(0.0, 0.13, 4 * n);
    append_seg(&mut ys, 0.13, BAR_BOTTOM, 3 * n);
    append_seg(&mut ys, BAR_BOTTOM, BAR_TOP, 2 * n);
    append_seg(&mut ys, BAR_TOP, 0.27, 3 * n);
    append_seg(&mut ys, 0.27, 0.41, 4 * n);

    let in_bar = |p: Point2| {
        p.y > BAR_BOTTOM && p.y < BAR_TOP && p.x > center.x && p.x < BAR_END
    };
    // only the bar side of the cylinder slides along the bar lines
    let on_bar_line = move |p: Point2| {
        p.x > center.x
            && ((p.y - BAR_BOTTOM).abs() < 1e-12 || (p.y - BAR_TOP).abs() < 1e-12)
    };
    let clip_to_circle = move |p: Point2| -> Point2 {
        if on_bar_line(p) {
            // slide along the bar side onto the circle
            let dy = p.y - center.y;
            Point2::new(center.x + (r * r - dy * dy).max(0.0).sqrt(), p.y)
        } else {
            CircleBoundary { center, radius: r, marker: BoundaryMarker::Sigma1 }.project(p)
        }
    };
    let classify = move |a: Point2, b: Point2| -> BoundaryMarker {
        let on_circle =
            |p: Point2| ((p - center).norm() - r).abs() < 1e-9;
        if on_circle(a) && on_circle(b) {
            BoundaryMarker::Sigma1 // rigid cylinder wall
        } else {
            BoundaryMarker::Interface // bar outline
        }
    };
    let fluid = punch_hole(
        &xs,
        &ys,
        (center, r),
        order,
        SideMarkers::default(),
        BoundaryMarker::Interface,
        &PunchSpec {
            extra_removed: &in_bar,
            project: Some(&clip_to_circle),
            classify: Some(&classify),
            curve_marker: BoundaryMarker::Sigma1,
        },
    )?;

    // bar outline rows extracted from the fluid interface, bitwise
    let mut bottom = Vec::new();
    let mut top = Vec::new();
    for be in &fluid.boundary_edges {
        if be.marker != BoundaryMarker::Interface {
            continue;
        }
        let (a, b) = fluid.edge_endpoints(be.tri, be.local_edge);
        for v in [a, b] {
            let p = fluid.vertices[v];
            if (p.y - BAR_BOTTOM).abs() < 1e-12 && !bottom.contains(&p) {
                bottom.push(p);
            }
            if (p.y - BAR_TOP).abs() < 1e-12 && !top.contains(&p) {
                top.push(p);
            }
        }
    }
    bottom.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
    top.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
    if bottom.len() != top.len() || bottom.len() < 3 {
        return Err(Error::BadMeshRequest(format!(
            "case II bar rows resolved inconsistently: {} vs {} vertices",
            bottom.len(),
            top.len()
        )));
    }
    let y_mid = 0.5 * (BAR_BOTTOM + BAR_TOP);
    let solid = bar_mesh(center, r, &bottom, &top, y_mid, order)?;
    let pairs = matched_pairs(&fluid, &solid)?;

    // lift/drag surface: cylinder wall plus bar outline
    let on_circle = |p: Point2| ((p - center).norm() - r).abs() < 1e-9;
    let probe_edges = fluid
        .boundary_edges
        .iter()
        .filter(|be| {
            be.marker == BoundaryMarker::Interface || {
                let (a, b) = fluid.edge_endpoints(be.tri, be.local_edge);
                be.marker == BoundaryMarker::Sigma1
                    && on_circle(fluid.vertices[a])
                    && on_circle(fluid.vertices[b])
            }
        })
        .map(|be| (be.tri, be.local_edge))
        .collect();

    Ok(CaseGeometry {
        fluid,
        solid,
        pairs,
        probe_edges,
        tail_point: Point2::new(BAR_END, y_mid),
    })
}

/// Tensor bar mesh with three rows; the bottom and top rows reuse the fluid
/// boundary vertices bitwise, the left column is clipped to the cylinder.
fn bar_mesh(
    center: Point2,
    r: f64,
    bottom: &[Point2],
    top: &[Point2],
    y_mid: f64,
    order: usize,
) -> Result<Mesh, Error> {
    let ncol = bottom.len();
    let mut vertices = Vec::with_capacity(3 * ncol);
    vertices.extend_from_slice(bottom);
    for (i, p) in bottom.iter().enumerate() {
        if i == 0 {
            let dy = y_mid - center.y;
            vertices.push(Point2::new(center.x + (r * r - dy * dy).max(0.0).sqrt(), y_mid));
        } else {
            vertices.push(Point2::new(p.x, y_mid));
        }
    }
    vertices.extend_from_slice(top);
    let id = |i: usize, row: usize| row * ncol + i;
    let mut triangles = Vec::new();
    let mut boundary = Vec::new();
    for row in 0..2 {
        for i in 0..(ncol - 1) {
            let (v00, v10, v11, v01) =
                (id(i, row), id(i + 1, row), id(i + 1, row + 1), id(i, row + 1));
            let t = triangles.len();
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
            if row == 0 && i > 0 {
                // the leftmost bottom cell edge belongs to the clipped zone
            }
            if row == 0 {
                boundary.push((t, 0u8, BoundaryMarker::Interface));
            }
            if row == 1 {
                boundary.push((t + 1, 1u8, BoundaryMarker::Interface));
            }
            if i == ncol - 2 {
                boundary.push((t, 1u8, BoundaryMarker::Interface));
            }
            if i == 0 {
                boundary.push((t + 1, 2u8, BoundaryMarker::Sigma3));
            }
        }
    }
    Mesh::build(
        vertices,
        triangles,
        boundary,
        order,
        vec![CircleBoundary { center, radius: r, marker: BoundaryMarker::Sigma3 }],
    )
}

fn seg(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect()
}

fn append_seg(xs: &mut Vec<f64>, a: f64, b: f64, n: usize) {
    debug_assert!((xs.last().copied().unwrap() - a).abs() < 1e-14);
    xs.extend((1..=n).map(|k| a + (b - a) * k as f64 / n as f64));
}

/// All-straight FSI fixture: a box `[0, 2] x [0, 1]` of fluid with a
/// rectangular elastic block `[0.875, 1.125] x [0, 0.25]` attached to the
/// floor. Every boundary is Dirichlet (no traction outflow), matching the
/// hypotheses of the energy estimate, and every triangle stays straight, so
/// the estimate holds to roundoff.
pub fn build_box_case(h: f64, order: usize) -> Result<CaseGeometry, Error> {
    let (bx0, bx1, by1) = (0.875, 1.125, 0.25);
    let nx = (2.0 / h).round() as usize;
    let ny = (1.0 / h).round() as usize;
    let xs = seg(0.0, 2.0, nx);
    let ys = seg(0.0, 1.0, ny);
    for line in [bx0, bx1] {
        if !xs.iter().any(|x| (x - line).abs() < 1e-12) {
            return Err(Error::BadMeshRequest(format!(
                "h = {h} does not place a grid line at x = {line}"
            )));
        }
    }
    if !ys.iter().any(|y| (y - by1).abs() < 1e-12) {
        return Err(Error::BadMeshRequest(format!(
            "h = {h} does not place a grid line at y = {by1}"
        )));
    }

    let in_block = |p: Point2| p.x > bx0 && p.x < bx1 && p.y < by1;
    // background triangulation shared by both submeshes
    let (nxc, nyc) = (xs.len() - 1, ys.len() - 1);
    let vid = |i: usize, j: usize| j * (nxc + 1) + i;
    let mut verts = Vec::new();
    for y in &ys {
        for x in &xs {
            verts.push(Point2::new(*x, *y));
        }
    }
    let mut tris = Vec::new();
    for j in 0..nyc {
        for i in 0..nxc {
            let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            tris.push([v00, v10, v11]);
            tris.push([v00, v11, v01]);
        }
    }
    let centroid = |t: &[usize; 3]| {
        Point2::from((verts[t[0]].coords + verts[t[1]].coords + verts[t[2]].coords) / 3.0)
    };
    let is_solid: Vec<bool> = tris.iter().map(|t| in_block(centroid(t))).collect();

    let fluid = extract_submesh(&verts, &tris, &is_solid, false, order, &|mid: Point2| {
        if mid.x.abs() < 1e-12
            || (mid.x - 2.0).abs() < 1e-12
            || mid.y.abs() < 1e-12
            || (mid.y - 1.0).abs() < 1e-12
        {
            BoundaryMarker::Sigma1
        } else {
            BoundaryMarker::Interface
        }
    })?;
    let solid = extract_submesh(&verts, &tris, &is_solid, true, order, &|mid: Point2| {
        if mid.y.abs() < 1e-12 {
            BoundaryMarker::Sigma3
        } else {
            BoundaryMarker::Interface
        }
    })?;
    let pairs = matched_pairs(&fluid, &solid)?;
    let probe_edges = fluid
        .boundary_edges
        .iter()
        .filter(|be| be.marker == BoundaryMarker::Interface)
        .map(|be| (be.tri, be.local_edge))
        .collect();
    Ok(CaseGeometry {
        fluid,
        solid,
        pairs,
        probe_edges,
        tail_point: Point2::new(0.5 * (bx0 + bx1), by1),
    })
}

/// Extract the sub-triangulation with `is_solid[j] == keep_solid`, classify
/// its boundary edges by midpoint, and build the order-`m` mesh.
fn extract_submesh(
    verts: &[Point2],
    tris: &[[usize; 3]],
    is_solid: &[bool],
    keep_solid: bool,
    order: usize,
    classify: &dyn Fn(Point2) -> BoundaryMarker,
) -> Result<Mesh, Error> {
    let mut vmap = vec![usize::MAX; verts.len()];
    let mut out_verts = Vec::new();
    let mut out_tris = Vec::new();
    for (j, t) in tris.iter().enumerate() {
        if is_solid[j] != keep_solid {
            continue;
        }
        let mut nt = [0usize; 3];
        for (k, &v) in t.iter().enumerate() {
            if vmap[v] == usize::MAX {
                vmap[v] = out_verts.len();
                out_verts.push(verts[v]);
            }
            nt[k] = vmap[v];
        }
        out_tris.push(nt);
    }
    // exposed edges
    use std::collections::HashMap;
    let mut edge_use: HashMap<(usize, usize), (usize, u8, usize)> = HashMap::new();
    for (jn, t) in out_tris.iter().enumerate() {
        for e in 0..3u8 {
            let (a, b) = (t[e as usize], t[(e as usize + 1) % 3]);
            let key = (a.min(b), a.max(b));
            let entry = edge_use.entry(key).or_insert((jn, e, 0));
            entry.2 += 1;
        }
    }
    let mut keys: Vec<_> = edge_use.keys().copied().collect();
    keys.sort_unstable();
    let mut boundary = Vec::new();
    for key in keys {
        let (tri, le, uses) = edge_use[&key];
        if uses == 1 {
            let mid =
                Point2::from((out_verts[key.0].coords + out_verts[key.1].coords) / 2.0);
            boundary.push((tri, le, classify(mid)));
        }
    }
    boundary.sort_unstable_by_key(|&(t, e, _)| (t, e));
    Mesh::build(out_verts, out_tris, boundary, order, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_i_geometry_is_conforming() {
        let geo = build_case_i(0.125, 2, true).unwrap();
        assert!(geo.fluid.n_triangles() > 800);
        assert!(geo.solid.n_triangles() > 30);
        assert!(!geo.pairs.is_empty());
        // paired grid points coincide bitwise
        for &(f, s) in &geo.pairs {
            assert_eq!(geo.fluid.grid_points[f], geo.solid.grid_points[s]);
        }
        // solid diameter on the floor, arc on the circle
        let c = Point2::new(1.5, -0.5);
        for be in &geo.solid.boundary_edges {
            let (a, b) = geo.solid.edge_endpoints(be.tri, be.local_edge);
            match be.marker {
                BoundaryMarker::Sigma3 => {
                    assert!((geo.solid.vertices[a].y + 0.5).abs() < 1e-14);
                    assert!((geo.solid.vertices[b].y + 0.5).abs() < 1e-14);
                }
                BoundaryMarker::Interface => {
                    assert!(((geo.solid.vertices[a] - c).norm() - 0.5).abs() < 1e-9);
                }
                other => panic!("unexpected solid marker {other}"),
            }
        }
    }

    #[test]
    fn case_i_rejects_unresolvable_h() {
        assert!(build_case_i(0.9, 2, true).is_err());
    }

    #[test]
    fn box_case_is_all_straight_and_conforming() {
        let geo = build_box_case(0.125, 2).unwrap();
        assert!(geo.fluid.curved.iter().all(|&c| !c));
        assert!(geo.solid.curved.iter().all(|&c| !c));
        for &(f, s) in &geo.pairs {
            assert_eq!(geo.fluid.grid_points[f], geo.solid.grid_points[s]);
        }
        // block of 2x0.25 x 0.25 area
        let area: f64 = geo.solid.polygon_area();
        assert!((area - 0.25 * 0.25).abs() < 1e-12);
        // interface points: left + top + right sides of the block
        assert_eq!(
            geo.pairs.len(),
            {
                let nl = 2; // 0.25 / 0.125 cells per vertical side
                let nt = 2; // block width cells
                // P2 points: vertices + midpoints per side, corners shared
                (2 * nl + nt) * 2 + 1
            },
            "interface grid point count"
        );
    }

    #[test]
    fn case_ii_geometry_is_conforming() {
        let geo = build_case_ii(1, 2).unwrap();
        for &(f, s) in &geo.pairs {
            assert_eq!(geo.fluid.grid_points[f], geo.solid.grid_points[s]);
        }
        // bar tail at (0.6, 0.2) is a solid grid point
        assert!(geo
            .solid
            .grid_points
            .iter()
            .any(|p| (p - Point2::new(0.6, 0.2)).norm() < 1e-12));
        // solid: clipped-arc Sigma3 vertices on the circle
        let c = Point2::new(0.2, 0.2);
        for be in &geo.solid.boundary_edges {
            if be.marker == BoundaryMarker::Sigma3 {
                let (a, b) = geo.solid.edge_endpoints(be.tri, be.local_edge);
                for v in [a, b] {
                    assert!(
                        ((geo.solid.vertices[v] - c).norm() - 0.05).abs() < 1e-9,
                        "Sigma3 vertex off the cylinder: {:?}",
                        geo.solid.vertices[v]
                    );
                }
            }
        }
        // probe covers the closed cylinder+bar outline: its normal integral
        // vanishes
        let probe = crate::observables::TractionProbe {
            edges: geo.probe_edges.clone(),
            scale: 1000.0,
        };
        let n_int = probe.normal_integral(&geo.fluid, &geo.fluid.grid_points);
        assert!(n_int.norm() < 1e-9, "cylinder+bar outline is closed: {n_int:?}");
    }
}
