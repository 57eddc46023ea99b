//! Reference-triangle Lagrange bases and quadrature.
//!
//! Everything here lives on the reference triangle `T̂` with vertices
//! (0,0), (1,0), (0,1). Bases are nodal on the equispaced Lagrange lattice;
//! local node order is vertices first, then edge nodes per local edge
//! (edge 0: v0->v1, edge 1: v1->v2, edge 2: v2->v0), then interior nodes.
//! All pullback integrals in the crate use the rules from [`quad_rule`].

use crate::{Error, Vec2};
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Number of Lagrange nodes of order `m` on the triangle.
pub fn node_count(m: usize) -> usize {
    (m + 1) * (m + 2) / 2
}

/// Equispaced Lagrange lattice of order `m` in local node order.
pub fn tri_lattice(m: usize) -> Vec<[f64; 2]> {
    let verts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let mut nodes: Vec<[f64; 2]> = verts.to_vec();
    if m >= 2 {
        for e in 0..3 {
            let a = verts[e];
            let b = verts[(e + 1) % 3];
            for k in 1..m {
                let s = k as f64 / m as f64;
                nodes.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
            }
        }
    }
    if m == 3 {
        nodes.push([1.0 / 3.0, 1.0 / 3.0]);
    }
    debug_assert_eq!(nodes.len(), node_count(m));
    nodes
}

/// Values and gradients of all basis functions at one reference point.
#[derive(Debug, Clone)]
pub struct BasisEval {
    pub len: usize,
    pub value: [f64; 10],
    pub grad: [Vec2; 10],
}

/// Evaluate the order-`m` Lagrange basis at a reference point.
///
/// Returns the nodal values and reference gradients in local node order.
pub fn basis_eval(m: usize, xhat: [f64; 2]) -> Result<BasisEval, Error> {
    let (x, y) = (xhat[0], xhat[1]);
    // barycentric coordinates and their constant gradients
    let l = [1.0 - x - y, x, y];
    let dl = [Vec2::new(-1.0, -1.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
    let mut out = BasisEval { len: node_count(m), value: [0.0; 10], grad: [Vec2::zeros(); 10] };
    match m {
        1 => {
            for p in 0..3 {
                out.value[p] = l[p];
                out.grad[p] = dl[p];
            }
        }
        2 => {
            for p in 0..3 {
                out.value[p] = l[p] * (2.0 * l[p] - 1.0);
                out.grad[p] = (4.0 * l[p] - 1.0) * dl[p];
            }
            for e in 0..3 {
                let (a, b) = (e, (e + 1) % 3);
                out.value[3 + e] = 4.0 * l[a] * l[b];
                out.grad[3 + e] = 4.0 * (l[b] * dl[a] + l[a] * dl[b]);
            }
        }
        3 => {
            for p in 0..3 {
                out.value[p] = 0.5 * l[p] * (3.0 * l[p] - 1.0) * (3.0 * l[p] - 2.0);
                out.grad[p] = 0.5 * (27.0 * l[p] * l[p] - 18.0 * l[p] + 2.0) * dl[p];
            }
            for e in 0..3 {
                let (a, b) = (e, (e + 1) % 3);
                // node nearer `a`, then node nearer `b`
                out.value[3 + 2 * e] = 4.5 * l[a] * l[b] * (3.0 * l[a] - 1.0);
                out.grad[3 + 2 * e] =
                    4.5 * (l[b] * (6.0 * l[a] - 1.0) * dl[a] + l[a] * (3.0 * l[a] - 1.0) * dl[b]);
                out.value[3 + 2 * e + 1] = 4.5 * l[a] * l[b] * (3.0 * l[b] - 1.0);
                out.grad[3 + 2 * e + 1] =
                    4.5 * (l[a] * (6.0 * l[b] - 1.0) * dl[b] + l[b] * (3.0 * l[b] - 1.0) * dl[a]);
            }
            out.value[9] = 27.0 * l[0] * l[1] * l[2];
            out.grad[9] = 27.0 * (l[1] * l[2] * dl[0] + l[0] * l[2] * dl[1] + l[0] * l[1] * dl[2]);
        }
        _ => return Err(Error::UnsupportedOrder(m)),
    }
    Ok(out)
}

/// Quadrature rule on the reference triangle.
///
/// Weights are positive and sum to 1/2 (the triangle area); every bivariate
/// monomial up to `degree` integrates exactly.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Symmetry orbits used to describe the tabulated rules. Weights are
/// normalized so that a full rule sums to 1 before the area scaling.
#[derive(Debug, Clone, Copy)]
enum Orbit {
    Centroid(f64),
    /// points (a,a), (1-2a,a), (a,1-2a)
    Three(f64, f64),
    /// the six permutations of barycentric (1-b-c, b, c)
    Six(f64, f64, f64),
}

impl Orbit {
    fn expand(&self, pts: &mut Vec<[f64; 2]>, wts: &mut Vec<f64>) {
        match *self {
            Orbit::Centroid(w) => {
                pts.push([1.0 / 3.0, 1.0 / 3.0]);
                wts.push(0.5 * w);
            }
            Orbit::Three(a, w) => {
                for p in [[a, a], [1.0 - 2.0 * a, a], [a, 1.0 - 2.0 * a]] {
                    pts.push(p);
                    wts.push(0.5 * w);
                }
            }
            Orbit::Six(b, c, w) => {
                let z = 1.0 - b - c;
                for p in [[b, c], [c, b], [z, b], [b, z], [z, c], [c, z]] {
                    pts.push(p);
                    wts.push(0.5 * w);
                }
            }
        }
    }
}

/// Exact moment of the monomial `x^i y^j` over the reference triangle.
pub fn monomial_moment(i: usize, j: usize) -> f64 {
    // i! j! / (i + j + 2)!
    let mut v = 1.0;
    // divide (i+j+2)! by i! incrementally: v = j! * i! / (i+j+2)!
    for k in 1..=j {
        v *= k as f64;
    }
    for k in (i + 1)..=(i + j + 2) {
        v /= k as f64;
    }
    v
}

/// Gauss-Newton polish of an orbit rule against the exact moments up to
/// `degree`. The tabulated coefficients below are correct to ~1e-9; two or
/// three iterations take them to machine precision.
fn polish(orbits: &mut [Orbit], degree: usize) {
    use nalgebra::{DMatrix, DVector};
    let monos: Vec<(usize, usize)> =
        (0..=degree).flat_map(|s| (0..=s).map(move |i| (i, s - i))).collect();
    let nm = monos.len();

    // pack parameters
    let mut theta: Vec<f64> = Vec::new();
    for o in orbits.iter() {
        match *o {
            Orbit::Centroid(w) => theta.push(w),
            Orbit::Three(a, w) => theta.extend([a, w]),
            Orbit::Six(b, c, w) => theta.extend([b, c, w]),
        }
    }

    let unpack = |theta: &[f64], orbits: &mut [Orbit]| {
        let mut k = 0;
        for o in orbits.iter_mut() {
            match o {
                Orbit::Centroid(w) => {
                    *w = theta[k];
                    k += 1;
                }
                Orbit::Three(a, w) => {
                    *a = theta[k];
                    *w = theta[k + 1];
                    k += 2;
                }
                Orbit::Six(b, c, w) => {
                    *b = theta[k];
                    *c = theta[k + 1];
                    *w = theta[k + 2];
                    k += 3;
                }
            }
        }
    };

    for _ in 0..8 {
        unpack(&theta, orbits);
        let mut pts = Vec::new();
        let mut wts = Vec::new();
        for o in orbits.iter() {
            o.expand(&mut pts, &mut wts);
        }
        let mut resid = DVector::zeros(nm);
        let mut jac = DMatrix::zeros(nm, theta.len());
        for (r, &(i, j)) in monos.iter().enumerate() {
            let mono = |x: f64, y: f64| x.powi(i as i32) * y.powi(j as i32);
            let dmono = |x: f64, y: f64| {
                let dx = if i == 0 { 0.0 } else { i as f64 * x.powi(i as i32 - 1) * y.powi(j as i32) };
                let dy = if j == 0 { 0.0 } else { j as f64 * x.powi(i as i32) * y.powi(j as i32 - 1) };
                (dx, dy)
            };
            let mut sum = 0.0;
            for (p, w) in pts.iter().zip(&wts) {
                sum += w * mono(p[0], p[1]);
            }
            resid[r] = sum - monomial_moment(i, j);
            // columns follow the packing order
            let mut col = 0;
            for o in orbits.iter() {
                match *o {
                    Orbit::Centroid(_) => {
                        jac[(r, col)] = 0.5 * mono(1.0 / 3.0, 1.0 / 3.0);
                        col += 1;
                    }
                    Orbit::Three(a, w) => {
                        let reps = [([a, a], [1.0, 1.0]), ([1.0 - 2.0 * a, a], [-2.0, 1.0]), ([a, 1.0 - 2.0 * a], [1.0, -2.0])];
                        let mut dw = 0.0;
                        let mut da = 0.0;
                        for (p, dpa) in reps {
                            dw += 0.5 * mono(p[0], p[1]);
                            let (gx, gy) = dmono(p[0], p[1]);
                            da += 0.5 * w * (gx * dpa[0] + gy * dpa[1]);
                        }
                        jac[(r, col)] = da;
                        jac[(r, col + 1)] = dw;
                        col += 2;
                    }
                    Orbit::Six(b, c, w) => {
                        let z = 1.0 - b - c;
                        let reps = [
                            ([b, c], [1.0, 0.0], [0.0, 1.0]),
                            ([c, b], [0.0, 1.0], [1.0, 0.0]),
                            ([z, b], [-1.0, 1.0], [-1.0, 0.0]),
                            ([b, z], [1.0, -1.0], [0.0, -1.0]),
                            ([z, c], [-1.0, 0.0], [-1.0, 1.0]),
                            ([c, z], [0.0, -1.0], [1.0, -1.0]),
                        ];
                        let (mut dw, mut db, mut dc) = (0.0, 0.0, 0.0);
                        for (p, dpb, dpc) in reps {
                            dw += 0.5 * mono(p[0], p[1]);
                            let (gx, gy) = dmono(p[0], p[1]);
                            db += 0.5 * w * (gx * dpb[0] + gy * dpb[1]);
                            dc += 0.5 * w * (gx * dpc[0] + gy * dpc[1]);
                        }
                        jac[(r, col)] = db;
                        jac[(r, col + 1)] = dc;
                        jac[(r, col + 2)] = dw;
                        col += 3;
                    }
                }
            }
        }
        let rmax = resid.amax();
        if rmax < 1e-15 {
            break;
        }
        let svd = jac.svd(true, true);
        let delta = svd.solve(&(-resid), 1e-12).expect("quadrature polish: SVD solve");
        for (t, d) in theta.iter_mut().zip(delta.iter()) {
            *t += d;
        }
    }
    unpack(&theta, orbits);
}

fn expand_polished(mut orbits: Vec<Orbit>, degree: usize) -> QuadRule {
    polish(&mut orbits, degree);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for o in &orbits {
        o.expand(&mut points, &mut weights);
    }
    QuadRule { points, weights, degree }
}

/// Collapsed Gauss-Legendre product rule, symmetrized over the six affine
/// symmetries of the triangle. Exact for total degree `degree`, positive
/// weights. Used for the high degrees that have no tabulated rule here.
fn symmetrized_product_rule(degree: usize) -> QuadRule {
    let n = (degree + 3) / 2; // 2n-1 >= degree+1: the (1-y) factor raises the y-degree by one
    let (gx, gw) = gauss_legendre_unit(n);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (s, ws) in gx.iter().zip(&gw) {
        for (y, wy) in gx.iter().zip(&gw) {
            let x = s * (1.0 - y);
            let w = ws * wy * (1.0 - y) / 6.0;
            let z = 1.0 - x - y;
            // all six permutations of the barycentric coordinates
            for p in [[x, *y], [*y, x], [z, *y], [x, z], [z, x], [*y, z]] {
                points.push(p);
                weights.push(w);
            }
        }
    }
    QuadRule { points, weights, degree }
}

/// Symmetric quadrature rule on the reference triangle that is exact for
/// all polynomials of total degree `degree` (supported up to 12).
pub fn quad_rule(degree: usize) -> Result<QuadRule, Error> {
    static CACHE: OnceLock<Mutex<HashMap<usize, QuadRule>>> = OnceLock::new();
    if degree > 12 {
        return Err(Error::UnsupportedDegree(degree));
    }
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    if let Some(r) = map.get(&degree) {
        return Ok(r.clone());
    }
    let rule = match degree {
        0 | 1 => QuadRule { points: vec![[1.0 / 3.0, 1.0 / 3.0]], weights: vec![0.5], degree: 1 },
        2 => {
            let a = 1.0 / 6.0;
            QuadRule {
                points: vec![[a, a], [2.0 / 3.0, a], [a, 2.0 / 3.0]],
                weights: vec![1.0 / 6.0; 3],
                degree: 2,
            }
        }
        3 | 4 => expand_polished(
            vec![
                Orbit::Three(0.445948490915965, 0.223381589678011),
                Orbit::Three(0.091576213509771, 0.109951743655322),
            ],
            4,
        ),
        5 => {
            let s15 = 15f64.sqrt();
            let mut points = Vec::new();
            let mut weights = Vec::new();
            for o in [
                Orbit::Centroid(9.0 / 40.0),
                Orbit::Three((6.0 + s15) / 21.0, (155.0 + s15) / 1200.0),
                Orbit::Three((6.0 - s15) / 21.0, (155.0 - s15) / 1200.0),
            ] {
                o.expand(&mut points, &mut weights);
            }
            QuadRule { points, weights, degree: 5 }
        }
        6 => expand_polished(
            vec![
                Orbit::Three(0.249286745170910, 0.116786275726379),
                Orbit::Three(0.063089014491502, 0.050844906370207),
                Orbit::Six(0.310352451033785, 0.053145049844816, 0.082851075618374),
            ],
            6,
        ),
        7 | 8 => expand_polished(
            vec![
                Orbit::Centroid(0.144315607677787),
                Orbit::Three(0.459292588292723, 0.095091634413245),
                Orbit::Three(0.170569307751760, 0.103217370534718),
                Orbit::Three(0.050547228317031, 0.032458497623198),
                Orbit::Six(0.263112829634638, 0.008394777409958, 0.027230314174435),
            ],
            8,
        ),
        9 => expand_polished(
            vec![
                Orbit::Centroid(0.097135796282799),
                Orbit::Three(0.489682519198738, 0.031334700227139),
                Orbit::Three(0.437089591492937, 0.077827541004774),
                Orbit::Three(0.188203535619033, 0.079647738927210),
                Orbit::Three(0.044729513394453, 0.025577675658698),
                Orbit::Six(0.221962989160766, 0.036838412054736, 0.043283539377289),
            ],
            9,
        ),
        d => symmetrized_product_rule(d),
    };
    map.insert(degree, rule.clone());
    Ok(rule)
}

/// Gauss-Legendre nodes and weights on [0,1]; weights sum to 1.
/// Exact for polynomials of degree 2n-1.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && n <= 32, "unsupported Gauss point count {n}");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        // Newton iteration on P_n over [-1,1]
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..60 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1,1] -> [0,1]; reverse so nodes come out ascending
        nodes[n - 1 - k] = 0.5 * (x + 1.0);
        weights[n - 1 - k] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Basis values and reference gradients tabulated at the points of a rule.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub order: usize,
    pub len: usize,
    pub nq: usize,
    value: Vec<f64>,
    grad: Vec<Vec2>,
}

impl BasisTable {
    pub fn new(m: usize, rule: &QuadRule) -> Result<Self, Error> {
        let len = node_count(m);
        let nq = rule.points.len();
        let mut value = Vec::with_capacity(nq * len);
        let mut grad = Vec::with_capacity(nq * len);
        for &p in &rule.points {
            let b = basis_eval(m, p)?;
            value.extend_from_slice(&b.value[..len]);
            grad.extend_from_slice(&b.grad[..len]);
        }
        Ok(BasisTable { order: m, len, nq, value, grad })
    }

    #[inline]
    pub fn value(&self, q: usize, p: usize) -> f64 {
        self.value[q * self.len + p]
    }

    #[inline]
    pub fn grad(&self, q: usize, p: usize) -> Vec2 {
        self.grad[q * self.len + p]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_property() {
        for m in 1..=3 {
            let nodes = tri_lattice(m);
            for (q, &nq) in nodes.iter().enumerate() {
                let b = basis_eval(m, nq).unwrap();
                for p in 0..nodes.len() {
                    let expect = if p == q { 1.0 } else { 0.0 };
                    assert!(
                        (b.value[p] - expect).abs() < 1e-13,
                        "m={m} phi_{p}(node {q}) = {}",
                        b.value[p]
                    );
                }
            }
        }
    }

    #[test]
    fn p1_vertex_and_p2_midpoint_values() {
        let b = basis_eval(1, [0.0, 0.0]).unwrap();
        assert_eq!(&b.value[..3], &[1.0, 0.0, 0.0]);
        // midpoint of edge 0 is local node 3
        let b = basis_eval(2, [0.5, 0.0]).unwrap();
        for p in 0..6 {
            let expect = if p == 3 { 1.0 } else { 0.0 };
            assert!((b.value[p] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn unsupported_order_rejected() {
        assert!(matches!(basis_eval(4, [0.2, 0.2]), Err(Error::UnsupportedOrder(4))));
    }

    #[test]
    fn partition_of_unity_and_gradient_sum() {
        let pts = [[0.1, 0.2], [0.3, 0.3], [0.0, 0.9], [0.5, 0.5], [1.0 / 3.0, 1.0 / 3.0]];
        for m in 1..=3 {
            for &p in &pts {
                let b = basis_eval(m, p).unwrap();
                let s: f64 = b.value[..b.len].iter().sum();
                assert!((s - 1.0).abs() < 1e-13);
                let g: Vec2 = b.grad[..b.len].iter().sum();
                assert!(g.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        // derived oracle: central differences of basis_eval values
        let pts = [[0.21, 0.17], [0.4, 0.35], [0.05, 0.6], [0.3, 0.1], [0.25, 0.45]];
        let eps = 1e-6;
        for m in 1..=3 {
            for &p in &pts {
                let b = basis_eval(m, p).unwrap();
                for i in 0..b.len {
                    let fx1 = basis_eval(m, [p[0] + eps, p[1]]).unwrap().value[i];
                    let fx0 = basis_eval(m, [p[0] - eps, p[1]]).unwrap().value[i];
                    let fy1 = basis_eval(m, [p[0], p[1] + eps]).unwrap().value[i];
                    let fy0 = basis_eval(m, [p[0], p[1] - eps]).unwrap().value[i];
                    let fd = Vec2::new((fx1 - fx0) / (2.0 * eps), (fy1 - fy0) / (2.0 * eps));
                    assert!((b.grad[i] - fd).norm() < 1e-6, "m={m} node {i}");
                }
            }
        }
    }

    #[test]
    fn degree_one_rule_is_centroid() {
        let r = quad_rule(1).unwrap();
        assert_eq!(r.points.len(), 1);
        assert!((r.points[0][0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((r.weights[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quadrature_exactness_all_supported_degrees() {
        for d in 1..=12 {
            let r = quad_rule(d).unwrap();
            assert!(r.degree >= d);
            let wsum: f64 = r.weights.iter().sum();
            assert!((wsum - 0.5).abs() < 1e-13, "degree {d}: weight sum {wsum}");
            assert!(r.weights.iter().all(|&w| w > 0.0), "degree {d}: negative weight");
            for i in 0..=r.degree {
                for j in 0..=(r.degree - i) {
                    let mut s = 0.0;
                    for (p, w) in r.points.iter().zip(&r.weights) {
                        s += w * p[0].powi(i as i32) * p[1].powi(j as i32);
                    }
                    let exact = monomial_moment(i, j);
                    assert!(
                        (s - exact).abs() < 1e-13,
                        "degree {d}, x^{i} y^{j}: {s} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn spec_moments() {
        // ∫ x y = 1/24 with any rule of degree >= 2
        let r = quad_rule(2).unwrap();
        let s: f64 = r.points.iter().zip(&r.weights).map(|(p, w)| w * p[0] * p[1]).sum();
        assert!((s - 1.0 / 24.0).abs() < 1e-14);
        // ∫ x^4 = 1/30 with the degree-4 rule
        let r = quad_rule(4).unwrap();
        let s: f64 = r.points.iter().zip(&r.weights).map(|(p, w)| w * p[0].powi(4)).sum();
        assert!((s - 1.0 / 30.0).abs() < 1e-14);
    }

    #[test]
    fn degree_cap() {
        assert!(matches!(quad_rule(13), Err(Error::UnsupportedDegree(13))));
    }

    #[test]
    fn gauss_legendre_exactness() {
        for n in 1..=8 {
            let (x, w) = gauss_legendre_unit(n);
            for d in 0..=(2 * n - 1) {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
                let exact = 1.0 / (d as f64 + 1.0);
                assert!((s - exact).abs() < 1e-14, "n={n} degree {d}: {s} vs {exact}");
            }
        }
    }
}
