//! Triangle meshes with order-`m` Lagrange grid points.
//!
//! A [`Mesh`] stores the plain triangulation (vertices, CCW triangles,
//! marked boundary edges) plus the full set of order-`m` grid points and a
//! per-triangle local-to-global node map in reference-element order. Interior
//! edges are straight; boundary edges marked by a declared circle carry
//! mid-edge points projected onto the exact circle and flag their triangle
//! as curved.
//!
//! The text format read and written here is `nv nt nbe m` on the first line,
//! then `nv` lines `x y`, then `nt` lines of three 0-based CCW vertex
//! indices, then `nbe` lines `tri local_edge marker` with markers 1..4 for
//! Sigma1..Sigma4 and 0 for the interface. Higher-order grid points are
//! generated on load, never stored.

use crate::ref_elem::{basis_eval, node_count, quad_rule, BasisTable, QuadRule};
use crate::{Error, Mat2, Point2, Vec2};
use std::collections::HashMap;
use std::fmt;
use std::path::Path;

/// Boundary classification: Sigma1/Sigma2 are the fluid Dirichlet and
/// traction boundaries, Sigma3/Sigma4 their solid counterparts, Interface
/// marks the fluid-solid interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryMarker {
    Sigma1,
    Sigma2,
    Sigma3,
    Sigma4,
    Interface,
}

impl BoundaryMarker {
    pub fn code(self) -> usize {
        match self {
            BoundaryMarker::Interface => 0,
            BoundaryMarker::Sigma1 => 1,
            BoundaryMarker::Sigma2 => 2,
            BoundaryMarker::Sigma3 => 3,
            BoundaryMarker::Sigma4 => 4,
        }
    }

    pub fn from_code(code: usize) -> Option<Self> {
        match code {
            0 => Some(BoundaryMarker::Interface),
            1 => Some(BoundaryMarker::Sigma1),
            2 => Some(BoundaryMarker::Sigma2),
            3 => Some(BoundaryMarker::Sigma3),
            4 => Some(BoundaryMarker::Sigma4),
            _ => None,
        }
    }
}

impl fmt::Display for BoundaryMarker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BoundaryMarker::Sigma1 => "Sigma1",
            BoundaryMarker::Sigma2 => "Sigma2",
            BoundaryMarker::Sigma3 => "Sigma3",
            BoundaryMarker::Sigma4 => "Sigma4",
            BoundaryMarker::Interface => "Interface",
        };
        f.write_str(s)
    }
}

/// A marked boundary edge, identified by its triangle and local edge index
/// (local edge `k` connects local vertices `k` and `(k+1) % 3`).
#[derive(Debug, Clone, Copy)]
pub struct BoundaryEdge {
    pub tri: usize,
    pub local_edge: u8,
    pub marker: BoundaryMarker,
}

/// An analytic circle used to curve boundary edges of a given marker.
#[derive(Debug, Clone, Copy)]
pub struct CircleBoundary {
    pub center: Point2,
    pub radius: f64,
    pub marker: BoundaryMarker,
}

impl CircleBoundary {
    pub fn project(&self, p: Point2) -> Point2 {
        let d = p - self.center;
        let n = d.norm();
        if n == 0.0 {
            return p;
        }
        self.center + d * (self.radius / n)
    }

    fn contains(&self, p: Point2, tol: f64) -> bool {
        ((p - self.center).norm() - self.radius).abs() <= tol
    }
}

/// Undirected mesh edge.
#[derive(Debug, Clone)]
pub struct Edge {
    /// endpoint vertex indices, `v[0] < v[1]`
    pub v: [usize; 2],
    /// grid-point indices of the m-1 interior edge nodes, ordered v[0] -> v[1]
    pub nodes: Vec<usize>,
    /// adjacent triangles (one for boundary edges)
    pub tris: [Option<usize>; 2],
    pub marker: Option<BoundaryMarker>,
    /// true when the edge lies on a declared circle
    pub on_curve: bool,
}

/// Triangle mesh with order-`m` grid points.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub order: usize,
    /// vertex coordinates; grid points 0..nv coincide with the vertices
    pub vertices: Vec<Point2>,
    /// CCW vertex triples
    pub triangles: Vec<[usize; 3]>,
    /// all Lagrange grid points (vertices first, then edge nodes, then interior)
    pub grid_points: Vec<Point2>,
    /// flattened per-triangle grid-point indices, `node_count(order)` per triangle
    tri_nodes: Vec<usize>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// per-triangle flag: some edge lies on a curved boundary
    pub curved: Vec<bool>,
    pub edges: Vec<Edge>,
    /// per-triangle edge indices, local order
    pub tri_edges: Vec<[usize; 3]>,
    pub curves: Vec<CircleBoundary>,
}

/// Boundary markers assigned to the four sides of a generated rectangle.
#[derive(Debug, Clone, Copy)]
pub struct SideMarkers {
    pub left: BoundaryMarker,
    pub right: BoundaryMarker,
    pub bottom: BoundaryMarker,
    pub top: BoundaryMarker,
}

impl Default for SideMarkers {
    fn default() -> Self {
        // channel convention: inflow left, traction outflow right, walls elsewhere
        SideMarkers {
            left: BoundaryMarker::Sigma1,
            right: BoundaryMarker::Sigma2,
            bottom: BoundaryMarker::Sigma1,
            top: BoundaryMarker::Sigma1,
        }
    }
}

impl Mesh {
    /// Build a mesh from a plain triangulation, elevating to order `m`.
    ///
    /// Checks orientation and connectivity, allocates edge and interior grid
    /// points, projects boundary mid-edge points onto declared circles and
    /// validates the isoparametric Jacobians.
    pub fn build(
        vertices: Vec<Point2>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<(usize, u8, BoundaryMarker)>,
        order: usize,
        curves: Vec<CircleBoundary>,
    ) -> Result<Mesh, Error> {
        if !(1..=3).contains(&order) {
            return Err(Error::UnsupportedOrder(order));
        }
        let nv = vertices.len();
        for (j, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= nv) {
                return Err(Error::Connectivity(format!("triangle {j} references missing vertex")));
            }
            let area = signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            if area <= 0.0 {
                return Err(Error::InvertedTriangle { tri: j, area });
            }
        }

        // undirected edge table; a shared edge must appear in both directions
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut tri_edges = vec![[usize::MAX; 3]; triangles.len()];
        for (j, t) in triangles.iter().enumerate() {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let idx = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        v: [key.0, key.1],
                        nodes: Vec::new(),
                        tris: [None, None],
                        marker: None,
                        on_curve: false,
                    });
                    edges.len() - 1
                });
                let slot = if a < b { 0 } else { 1 };
                if edges[idx].tris[slot].is_some() {
                    return Err(Error::Connectivity(format!(
                        "edge ({a},{b}) traversed twice in the same direction; triangles are not consistently oriented"
                    )));
                }
                edges[idx].tris[slot] = Some(j);
                tri_edges[j][e] = idx;
            }
        }

        // attach markers to the listed boundary edges
        let mut boundary_edges = Vec::with_capacity(boundary.len());
        for &(tri, local_edge, marker) in &boundary {
            if tri >= triangles.len() || local_edge > 2 {
                return Err(Error::Connectivity(format!(
                    "boundary edge ({tri},{local_edge}) out of range"
                )));
            }
            let idx = tri_edges[tri][local_edge as usize];
            let edge = &mut edges[idx];
            if edge.tris[0].is_some() && edge.tris[1].is_some() {
                return Err(Error::Connectivity(format!(
                    "boundary edge ({tri},{local_edge}) is shared by two triangles"
                )));
            }
            if edge.marker.is_some() {
                return Err(Error::Connectivity(format!(
                    "boundary edge ({tri},{local_edge}) carries two markers"
                )));
            }
            edge.marker = Some(marker);
            boundary_edges.push(BoundaryEdge { tri, local_edge, marker });
        }
        for (idx, edge) in edges.iter().enumerate() {
            let uses = edge.tris.iter().filter(|t| t.is_some()).count();
            if uses == 1 && edge.marker.is_none() {
                return Err(Error::Connectivity(format!(
                    "edge {idx} ({},{}) lies on the boundary but carries no marker",
                    edge.v[0], edge.v[1]
                )));
            }
        }

        // curved edges: both endpoints on a circle declared for this marker
        for edge in edges.iter_mut() {
            if let Some(marker) = edge.marker {
                for c in &curves {
                    let tol = 1e-8 * c.radius.max(1.0);
                    if c.marker == marker
                        && c.contains(vertices[edge.v[0]], tol)
                        && c.contains(vertices[edge.v[1]], tol)
                    {
                        edge.on_curve = true;
                    }
                }
            }
        }
        if order == 3 && edges.iter().any(|e| e.on_curve) {
            return Err(Error::BadMeshRequest(
                "order 3 is supported on straight-boundary meshes only".into(),
            ));
        }

        // grid points: vertices, then edge nodes, then interior nodes
        let mut grid_points = vertices.clone();
        for edge in edges.iter_mut() {
            let a = vertices[edge.v[0]];
            let b = vertices[edge.v[1]];
            for k in 1..order {
                let s = k as f64 / order as f64;
                let mut p = Point2::from(a.coords + s * (b.coords - a.coords));
                if edge.on_curve {
                    let c = curves
                        .iter()
                        .find(|c| Some(c.marker) == edge.marker)
                        .expect("curved edge without curve");
                    p = c.project(p);
                }
                edge.nodes.push(grid_points.len());
                grid_points.push(p);
            }
        }
        let ln = node_count(order);
        let mut tri_nodes = Vec::with_capacity(triangles.len() * ln);
        for (j, t) in triangles.iter().enumerate() {
            tri_nodes.extend_from_slice(t);
            if order >= 2 {
                for e in 0..3 {
                    let (a, b) = (t[e], t[(e + 1) % 3]);
                    let edge = &edges[tri_edges[j][e]];
                    if a < b {
                        tri_nodes.extend(edge.nodes.iter().copied());
                    } else {
                        tri_nodes.extend(edge.nodes.iter().rev().copied());
                    }
                }
            }
            if order == 3 {
                let p = Point2::from(
                    (vertices[t[0]].coords + vertices[t[1]].coords + vertices[t[2]].coords) / 3.0,
                );
                tri_nodes.push(grid_points.len());
                grid_points.push(p);
            }
        }

        let curved = (0..triangles.len())
            .map(|j| tri_edges[j].iter().any(|&e| edges[e].on_curve))
            .collect();

        let mesh = Mesh {
            order,
            vertices,
            triangles,
            grid_points,
            tri_nodes,
            boundary_edges,
            curved,
            edges,
            tri_edges,
            curves,
        };
        mesh.validate_jacobians(&mesh.grid_points)?;
        Ok(mesh)
    }

    /// Mesh with no triangles (used for fluid-only problems).
    pub fn empty(order: usize) -> Mesh {
        Mesh {
            order,
            vertices: Vec::new(),
            triangles: Vec::new(),
            grid_points: Vec::new(),
            tri_nodes: Vec::new(),
            boundary_edges: Vec::new(),
            curved: Vec::new(),
            edges: Vec::new(),
            tri_edges: Vec::new(),
            curves: Vec::new(),
        }
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_grid_points(&self) -> usize {
        self.grid_points.len()
    }

    /// Global grid-point indices of triangle `j` in reference local order.
    pub fn tri_nodes(&self, j: usize) -> &[usize] {
        let l = node_count(self.order);
        &self.tri_nodes[j * l..(j + 1) * l]
    }

    /// Vertex indices of the endpoints of a local edge, in traversal order.
    pub fn edge_endpoints(&self, tri: usize, local_edge: u8) -> (usize, usize) {
        let t = self.triangles[tri];
        let e = local_edge as usize;
        (t[e], t[(e + 1) % 3])
    }

    /// All grid points lying on boundary edges with the given marker.
    pub fn boundary_points(&self, marker: BoundaryMarker) -> Vec<usize> {
        let mut out = Vec::new();
        for be in &self.boundary_edges {
            if be.marker == marker {
                let e = &self.edges[self.tri_edges[be.tri][be.local_edge as usize]];
                out.push(e.v[0]);
                out.push(e.v[1]);
                out.extend(e.nodes.iter().copied());
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Evaluate the isoparametric map of triangle `j` at reference point `xhat`.
    pub fn iso_map_eval(&self, j: usize, xhat: [f64; 2]) -> Point2 {
        self.iso_map_eval_at(j, xhat, &self.grid_points)
    }

    /// Same as [`Mesh::iso_map_eval`] with explicit grid-point positions
    /// (used on moved meshes that share this topology).
    pub fn iso_map_eval_at(&self, j: usize, xhat: [f64; 2], points: &[Point2]) -> Point2 {
        let b = basis_eval(self.order, xhat).expect("supported order");
        let mut x = Vec2::zeros();
        for (p, &g) in self.tri_nodes(j).iter().enumerate() {
            x += b.value[p] * points[g].coords;
        }
        Point2::from(x)
    }

    /// Jacobian of the isoparametric map and its determinant.
    pub fn iso_map_jacobian(&self, j: usize, xhat: [f64; 2]) -> Result<(Mat2, f64), Error> {
        self.iso_map_jacobian_at(j, xhat, &self.grid_points)
    }

    pub fn iso_map_jacobian_at(
        &self,
        j: usize,
        xhat: [f64; 2],
        points: &[Point2],
    ) -> Result<(Mat2, f64), Error> {
        let b = basis_eval(self.order, xhat).expect("supported order");
        let mut jac = Mat2::zeros();
        for (p, &g) in self.tri_nodes(j).iter().enumerate() {
            jac += points[g].coords * b.grad[p].transpose();
        }
        let det = jac.determinant();
        if det <= 0.0 {
            return Err(Error::NonPositiveJacobian { tri: j, det });
        }
        Ok((jac, det))
    }

    /// Check det > 0 at the default quadrature points of every triangle.
    pub fn validate_jacobians(&self, points: &[Point2]) -> Result<(), Error> {
        let rule = quad_rule(3 * self.order + 2)?;
        for j in 0..self.n_triangles() {
            for &q in &rule.points {
                self.iso_map_jacobian_at(j, q, points)?;
            }
        }
        Ok(())
    }

    /// Mesh area by quadrature over all triangles at the given positions.
    pub fn quadrature_area(&self, rule: &QuadRule, points: &[Point2]) -> f64 {
        let mut area = 0.0;
        for j in 0..self.n_triangles() {
            for (&q, &w) in rule.points.iter().zip(&rule.weights) {
                let (_, det) = self.iso_map_jacobian_at(j, q, points).expect("positive Jacobian");
                area += w * det;
            }
        }
        area
    }

    /// Sum of signed vertex-polygon areas (exact for all-straight meshes).
    pub fn polygon_area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| signed_area(self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]))
            .sum()
    }

    /// Serialize the plain triangulation in the text format.
    pub fn write_text(&self) -> String {
        let mut s = format!(
            "{} {} {} {}\n",
            self.vertices.len(),
            self.triangles.len(),
            self.boundary_edges.len(),
            self.order
        );
        for v in &self.vertices {
            s.push_str(&format!("{:.17e} {:.17e}\n", v.x, v.y));
        }
        for t in &self.triangles {
            s.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
        }
        for be in &self.boundary_edges {
            s.push_str(&format!("{} {} {}\n", be.tri, be.local_edge, be.marker.code()));
        }
        s
    }

    pub fn write_file(&self, path: &Path) -> Result<(), Error> {
        std::fs::write(path, self.write_text())?;
        Ok(())
    }
}

fn signed_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
}

/// Parse a mesh from the text format; `curves` attaches analytic circles to
/// boundary markers for curved-edge projection.
pub fn read_mesh_text(text: &str, curves: Vec<CircleBoundary>) -> Result<Mesh, Error> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .peekable();
    let mut next = |what: &str| -> Result<(usize, &str), Error> {
        lines.next().ok_or_else(|| Error::MeshParse { line: 0, msg: format!("missing {what}") })
    };
    let (ln, header) = next("header")?;
    let head: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| Error::MeshParse { line: ln + 1, msg: format!("bad header: {e}") })?;
    if head.len() != 4 {
        return Err(Error::MeshParse { line: ln + 1, msg: "header must be `nv nt nbe m`".into() });
    }
    let (nv, nt, nbe, order) = (head[0], head[1], head[2], head[3]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = next("vertex")?;
        let xy: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| Error::MeshParse { line: ln + 1, msg: format!("bad vertex: {e}") })?;
        if xy.len() != 2 {
            return Err(Error::MeshParse { line: ln + 1, msg: "vertex needs `x y`".into() });
        }
        vertices.push(Point2::new(xy[0], xy[1]));
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = next("triangle")?;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| Error::MeshParse { line: ln + 1, msg: format!("bad triangle: {e}") })?;
        if idx.len() != 3 {
            return Err(Error::MeshParse { line: ln + 1, msg: "triangle needs 3 indices".into() });
        }
        triangles.push([idx[0], idx[1], idx[2]]);
    }
    let mut boundary = Vec::with_capacity(nbe);
    for _ in 0..nbe {
        let (ln, l) = next("boundary edge")?;
        let f: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| Error::MeshParse { line: ln + 1, msg: format!("bad boundary edge: {e}") })?;
        if f.len() != 3 {
            return Err(Error::MeshParse {
                line: ln + 1,
                msg: "boundary edge needs `tri local_edge marker`".into(),
            });
        }
        let marker = BoundaryMarker::from_code(f[2]).ok_or_else(|| Error::MeshParse {
            line: ln + 1,
            msg: format!("unknown marker code {}", f[2]),
        })?;
        boundary.push((f[0], f[1] as u8, marker));
    }
    Mesh::build(vertices, triangles, boundary, order, curves)
}

/// Read a mesh file in the text format.
pub fn read_mesh(path: &Path, curves: Vec<CircleBoundary>) -> Result<Mesh, Error> {
    let text = std::fs::read_to_string(path)?;
    read_mesh_text(&text, curves)
}

/// Structured mesh of the tensor grid `xs` x `ys`, each cell split into two
/// CCW triangles. Sides are marked per `markers`.
pub fn generate_tensor_mesh(
    xs: &[f64],
    ys: &[f64],
    order: usize,
    markers: SideMarkers,
) -> Result<Mesh, Error> {
    if xs.len() < 2 || ys.len() < 2 {
        return Err(Error::BadMeshRequest("tensor grid needs at least 2 lines per axis".into()));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) || ys.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadMeshRequest("tensor grid lines must be strictly increasing".into()));
    }
    let (nx, ny) = (xs.len() - 1, ys.len() - 1);
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for y in ys {
        for x in xs {
            vertices.push(Point2::new(*x, *y));
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    let mut boundary = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            let t0 = triangles.len();
            // cell split along the v00-v11 diagonal
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
            if j == 0 {
                boundary.push((t0, 0u8, markers.bottom));
            }
            if i == nx - 1 {
                boundary.push((t0, 1u8, markers.right));
            }
            if j == ny - 1 {
                boundary.push((t0 + 1, 1u8, markers.top));
            }
            if i == 0 {
                boundary.push((t0 + 1, 2u8, markers.left));
            }
        }
    }
    Mesh::build(vertices, triangles, boundary, order, Vec::new())
}

fn linspace(a: f64, b: f64, n_cells: usize) -> Vec<f64> {
    (0..=n_cells).map(|k| a + (b - a) * k as f64 / n_cells as f64).collect()
}

/// Uniform structured mesh of the rectangle `[x0,x1] x [y0,y1]` with target
/// edge length `h`.
pub fn generate_rectangle_mesh(
    extent: (f64, f64, f64, f64),
    target_h: f64,
    order: usize,
    markers: SideMarkers,
) -> Result<Mesh, Error> {
    let (x0, x1, y0, y1) = extent;
    if !(x1 > x0 && y1 > y0) {
        return Err(Error::BadMeshRequest(format!("degenerate extent {extent:?}")));
    }
    if !(target_h > 0.0) {
        return Err(Error::BadMeshRequest(format!("target_h must be positive, got {target_h}")));
    }
    let nx = ((x1 - x0) / target_h).ceil().max(1.0) as usize;
    let ny = ((y1 - y0) / target_h).ceil().max(1.0) as usize;
    generate_tensor_mesh(&linspace(x0, x1, nx), &linspace(y0, y1, ny), order, markers)
}

/// Rectangle mesh with the triangles covering a circular hole removed.
///
/// Triangles with a vertex strictly inside the circle are removed, surviving
/// vertices of those triangles are projected radially onto the circle, the
/// interior gets one Laplacian smoothing pass, and the hole edges are marked
/// `hole_marker` with mid-edge points on the exact circle. A circle that
/// covers no vertex leaves the rectangle mesh untouched.
pub fn generate_hole_mesh(
    extent: (f64, f64, f64, f64),
    circle: (Point2, f64),
    target_h: f64,
    order: usize,
    markers: SideMarkers,
    hole_marker: BoundaryMarker,
) -> Result<Mesh, Error> {
    let (x0, x1, y0, y1) = extent;
    if !(x1 > x0 && y1 > y0) {
        return Err(Error::BadMeshRequest(format!("degenerate extent {extent:?}")));
    }
    if !(target_h > 0.0) {
        return Err(Error::BadMeshRequest(format!("target_h must be positive, got {target_h}")));
    }
    let nx = ((x1 - x0) / target_h).ceil().max(1.0) as usize;
    let ny = ((y1 - y0) / target_h).ceil().max(1.0) as usize;
    punch_hole(
        &linspace(x0, x1, nx),
        &linspace(y0, y1, ny),
        circle,
        order,
        markers,
        hole_marker,
        &PunchSpec {
            extra_removed: &|_| false,
            project: None,
            classify: None,
            curve_marker: hole_marker,
        },
    )
}

/// Extended hole-punch controls (see [`punch_hole`]).
pub struct PunchSpec<'a> {
    /// cut additional triangles, selected by centroid, without projection
    pub extra_removed: &'a dyn Fn(Point2) -> bool,
    /// projection for vertices adjacent to removed circle triangles;
    /// radial onto the circle when None
    pub project: Option<&'a dyn Fn(Point2) -> Point2>,
    /// marker of an exposed hole edge given its endpoints; the constant
    /// hole marker when None
    pub classify: Option<&'a dyn Fn(Point2, Point2) -> BoundaryMarker>,
    /// marker whose boundary edges follow the circle (curved projection)
    pub curve_marker: BoundaryMarker,
}

/// Hole punch over an explicit tensor grid.
pub fn punch_hole(
    xs: &[f64],
    ys: &[f64],
    circle: (Point2, f64),
    order: usize,
    markers: SideMarkers,
    hole_marker: BoundaryMarker,
    spec: &PunchSpec,
) -> Result<Mesh, Error> {
    let extra_removed = spec.extra_removed;
    let (center, radius) = circle;
    if !(radius > 0.0) {
        return Err(Error::BadMeshRequest(format!("radius must be positive, got {radius}")));
    }
    let hmin = xs
        .windows(2)
        .map(|w| w[1] - w[0])
        .chain(ys.windows(2).map(|w| w[1] - w[0]))
        .fold(f64::MAX, f64::min);
    let base = generate_tensor_mesh(xs, ys, 1, markers)?;
    let verts = base.vertices.clone();
    let inside = |p: Point2| (p - center).norm() < radius * (1.0 - 1e-12);
    let centroid = |t: &[usize; 3], v: &[Point2]| {
        Point2::from((v[t[0]].coords + v[t[1]].coords + v[t[2]].coords) / 3.0)
    };

    let mut removed: Vec<bool> = base
        .triangles
        .iter()
        .map(|t| t.iter().any(|&v| inside(verts[v])) || extra_removed(centroid(t, &verts)))
        .collect();
    if removed.iter().all(|&r| !r) {
        // hole misses the grid entirely: identical to the plain rectangle mesh
        return generate_tensor_mesh(xs, ys, order, markers);
    }
    let circle_cut =
        base.triangles.iter().enumerate().any(|(j, t)| removed[j] && t.iter().any(|&v| inside(verts[v])));
    if circle_cut && 2.0 * radius < 3.0 * hmin {
        return Err(Error::BadMeshRequest(format!(
            "circle radius {radius} too small for grid spacing {hmin}: no valid boundary layer"
        )));
    }

    // project surviving vertices of removed circle triangles onto the circle
    let mut new_verts = verts.clone();
    let mut touched = vec![false; verts.len()];
    for (j, t) in base.triangles.iter().enumerate() {
        if removed[j] && t.iter().any(|&v| inside(verts[v])) {
            for &v in t {
                touched[v] = true;
            }
        }
    }
    let circ = CircleBoundary { center, radius, marker: spec.curve_marker };
    for (v, p) in new_verts.iter_mut().enumerate() {
        if touched[v] {
            *p = match spec.project {
                Some(f) => f(*p),
                None => circ.project(*p),
            };
        }
    }
    // drop triangles that collapsed into the hole after projection
    for (j, t) in base.triangles.iter().enumerate() {
        if !removed[j] && (centroid(t, &new_verts) - center).norm() < radius * (1.0 - 1e-12) {
            removed[j] = true;
        }
    }

    let kept: Vec<usize> = (0..base.triangles.len()).filter(|&j| !removed[j]).collect();
    if kept.is_empty() {
        return Err(Error::BadMeshRequest("hole removes the entire mesh".into()));
    }

    // compress vertices
    let mut vmap = vec![usize::MAX; verts.len()];
    let mut out_verts = Vec::new();
    let mut out_tris = Vec::with_capacity(kept.len());
    for &j in &kept {
        let t = base.triangles[j];
        let mut nt = [0usize; 3];
        for (k, &v) in t.iter().enumerate() {
            if vmap[v] == usize::MAX {
                vmap[v] = out_verts.len();
                out_verts.push(new_verts[v]);
            }
            nt[k] = vmap[v];
        }
        out_tris.push(nt);
    }

    // classify boundary edges of the kept triangulation by edge midpoint
    let mut edge_use: HashMap<(usize, usize), (usize, u8, usize)> = HashMap::new();
    for (jn, t) in out_tris.iter().enumerate() {
        for e in 0..3u8 {
            let (a, b) = (t[e as usize], t[(e as usize + 1) % 3]);
            let key = (a.min(b), a.max(b));
            let entry = edge_use.entry(key).or_insert((jn, e, 0));
            entry.2 += 1;
            entry.0 = jn.min(entry.0);
            if entry.0 == jn {
                entry.1 = e;
            }
        }
    }
    let tol = 1e-10 * (xs[xs.len() - 1] - xs[0]).max(ys[ys.len() - 1] - ys[0]);
    let (gx0, gx1) = (xs[0], xs[xs.len() - 1]);
    let (gy0, gy1) = (ys[0], ys[ys.len() - 1]);
    let side_of = |p: Point2| -> Option<BoundaryMarker> {
        if (p.x - gx0).abs() < tol {
            Some(markers.left)
        } else if (p.x - gx1).abs() < tol {
            Some(markers.right)
        } else if (p.y - gy0).abs() < tol {
            Some(markers.bottom)
        } else if (p.y - gy1).abs() < tol {
            Some(markers.top)
        } else {
            None
        }
    };
    let mut boundary = Vec::new();
    let mut keys: Vec<(usize, usize)> = edge_use.keys().copied().collect();
    keys.sort_unstable();
    for key in &keys {
        let (tri, le, uses) = edge_use[key];
        if uses != 1 {
            continue;
        }
        let mid = Point2::from((out_verts[key.0].coords + out_verts[key.1].coords) / 2.0);
        let marker = side_of(mid).unwrap_or_else(|| match spec.classify {
            Some(f) => f(out_verts[key.0], out_verts[key.1]),
            None => hole_marker,
        });
        boundary.push((tri, le, marker));
    }
    boundary.sort_unstable_by_key(|&(t, e, _)| (t, e));

    // one Laplacian smoothing pass on interior vertices
    let mut on_boundary = vec![false; out_verts.len()];
    for key in &keys {
        if edge_use[key].2 == 1 {
            on_boundary[key.0] = true;
            on_boundary[key.1] = true;
        }
    }
    let mut nbr_sum = vec![Vec2::zeros(); out_verts.len()];
    let mut nbr_cnt = vec![0usize; out_verts.len()];
    for key in &keys {
        nbr_sum[key.0] += out_verts[key.1].coords;
        nbr_sum[key.1] += out_verts[key.0].coords;
        nbr_cnt[key.0] += 1;
        nbr_cnt[key.1] += 1;
    }
    let smoothed: Vec<Point2> = out_verts
        .iter()
        .enumerate()
        .map(|(v, p)| {
            if on_boundary[v] || nbr_cnt[v] == 0 {
                *p
            } else {
                Point2::from(nbr_sum[v] / nbr_cnt[v] as f64)
            }
        })
        .collect();

    Mesh::build(smoothed, out_tris, boundary, order, vec![circ]).map_err(|e| match e {
        Error::InvertedTriangle { .. } | Error::NonPositiveJacobian { .. } => {
            Error::BadMeshRequest(format!("circle too large relative to the grid spacing: {e}"))
        }
        other => other,
    })
}

/// Reference coordinates along a local edge, `s` in [0,1] running from the
/// first to the second vertex of the edge.
pub fn ref_edge_point(local_edge: u8, s: f64) -> [f64; 2] {
    match local_edge {
        0 => [s, 0.0],
        1 => [1.0 - s, s],
        _ => [0.0, 1.0 - s],
    }
}

/// Reference tangent of a local edge (d x̂ / d s).
pub fn ref_edge_tangent(local_edge: u8) -> Vec2 {
    match local_edge {
        0 => Vec2::new(1.0, 0.0),
        1 => Vec2::new(-1.0, 1.0),
        _ => Vec2::new(0.0, -1.0),
    }
}

/// Per-quadrature-point geometry of one triangle at given node positions.
pub struct ElementGeom {
    pub det: Vec<f64>,
    pub inv_jt: Vec<Mat2>,
}

impl ElementGeom {
    pub fn new(
        mesh: &Mesh,
        j: usize,
        points: &[Point2],
        table: &BasisTable,
    ) -> Result<ElementGeom, Error> {
        let nodes = mesh.tri_nodes(j);
        let mut det = Vec::with_capacity(table.nq);
        let mut inv_jt = Vec::with_capacity(table.nq);
        for q in 0..table.nq {
            let mut jac = Mat2::zeros();
            for (p, &g) in nodes.iter().enumerate() {
                jac += points[g].coords * table.grad(q, p).transpose();
            }
            let d = jac.determinant();
            if d <= 0.0 {
                return Err(Error::NonPositiveJacobian { tri: j, det: d });
            }
            det.push(d);
            inv_jt.push(jac.try_inverse().unwrap().transpose());
        }
        Ok(ElementGeom { det, inv_jt })
    }
}
