//! Per-step assembly of the coupled fluid-solid system and the sparse solve.
//!
//! One time step solves for `(u^n, p^n, v^n)`: the fluid mass matrix lives
//! on the new mesh, the previous-level mass term is integrated on the old
//! mesh with its own standard basis, convection and the divergence
//! stabilization are integrated on the half-step mesh with the previous
//! velocity and the mesh velocity entering as frozen coefficient vectors,
//! viscous and pressure terms live on the new mesh, and the solid
//! contributes its mass, the stress at the advanced position and the
//! tangent bilinear form scaled by dt. Dirichlet rows and columns are
//! eliminated symmetrically with boundary values moved to the right side.

use crate::ale::AleFrame;
use crate::dof::{DirichletSource, DofMap};
use crate::materials::MaterialModel;
use crate::mesh::{ref_edge_point, ref_edge_tangent, BoundaryMarker, ElementGeom, Mesh};
use crate::ref_elem::{basis_eval, gauss_legendre_unit, quad_rule, BasisTable};
use crate::{Error, Mat2, Point2, Vec2};
use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

/// How the solid stress term is advanced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolidUpdate {
    /// stress at the known position `phi^n`, tangent form times dt on the
    /// unknown velocity; one linear solve per step
    SemiImplicit,
    /// stress at `phi^n + dt v^n`, solved by Newton iteration
    Implicit { tol: f64, max_iter: usize },
}

/// Physical and numerical parameters of a run.
#[derive(Debug, Clone)]
pub struct FsiParams {
    pub rho_f: f64,
    pub nu_f: f64,
    pub g_f: Vec2,
    pub g_s: Vec2,
    /// constant traction on the Sigma4 solid boundary
    pub sigma_b_s: Vec2,
    pub material: MaterialModel,
    pub dt: f64,
    /// volume quadrature degree; 0 picks the default `3m + 2`
    pub quad_degree: usize,
    pub solid_update: SolidUpdate,
}

impl FsiParams {
    pub fn volume_degree(&self, order: usize) -> usize {
        if self.quad_degree == 0 {
            3 * order + 2
        } else {
            self.quad_degree
        }
    }
}

/// Coefficients of one time level. Fluid and solid velocities share the
/// merged storage `vel`, so the interface coupling `u(phi(z_i)) = v(z_i)`
/// holds bitwise by construction.
#[derive(Debug, Clone)]
pub struct SystemState {
    pub t: f64,
    /// merged velocity coefficients, `2 * n_vel_nodes`
    pub vel: Vec<f64>,
    pub pressure: Vec<f64>,
    /// solid position coefficients per solid grid point
    pub phi: Vec<Point2>,
    /// fluid grid-point positions at this time level
    pub fluid_points: Vec<Point2>,
}

impl SystemState {
    /// Rest state: zero velocities, identity solid placement, initial mesh.
    pub fn rest(dof: &DofMap, fluid: &Mesh, solid: &Mesh) -> SystemState {
        SystemState {
            t: 0.0,
            vel: vec![0.0; 2 * dof.n_vel_nodes],
            pressure: vec![0.0; dof.n_pressure],
            phi: solid.grid_points.clone(),
            fluid_points: fluid.grid_points.clone(),
        }
    }

    #[inline]
    pub fn u_at(&self, dof: &DofMap, fluid_point: usize) -> Vec2 {
        let n = dof.vel_node_of_fluid[fluid_point];
        Vec2::new(self.vel[2 * n], self.vel[2 * n + 1])
    }

    #[inline]
    pub fn v_at(&self, dof: &DofMap, solid_point: usize) -> Vec2 {
        let n = dof.vel_node_of_solid[solid_point];
        Vec2::new(self.vel[2 * n], self.vel[2 * n + 1])
    }

    /// Overwrite the solid velocity coefficients (interface fluid values
    /// follow through the shared storage).
    pub fn set_solid_velocity(&mut self, dof: &DofMap, v: &dyn Fn(Point2) -> Vec2) {
        for (s, z) in self.phi.iter().enumerate() {
            let val = v(*z);
            let n = dof.vel_node_of_solid[s];
            self.vel[2 * n] = val.x;
            self.vel[2 * n + 1] = val.y;
        }
    }
}

/// Dirichlet velocity values for one time level, per velocity node.
#[derive(Debug, Clone)]
pub struct BcValues {
    pub value: Vec<Option<Vec2>>,
}

impl BcValues {
    /// Evaluate the Dirichlet data: `inflow` at Sigma1 fluid points (at their
    /// fixed positions), `solid_rate` at Sigma3 solid points. Nodes claimed
    /// by both must agree.
    pub fn evaluate(
        dof: &DofMap,
        fluid: &Mesh,
        solid: &Mesh,
        inflow: &dyn Fn(Point2) -> Vec2,
        solid_rate: &dyn Fn(Point2) -> Vec2,
    ) -> Result<BcValues, Error> {
        let mut value = vec![None; dof.n_vel_nodes];
        for d in &dof.dirichlet {
            let from_fluid = d.fluid_point.map(|f| inflow(fluid.grid_points[f]));
            let from_solid = d.solid_point.map(|s| solid_rate(solid.grid_points[s]));
            let v = match (d.source, from_fluid, from_solid) {
                (DirichletSource::Both, Some(a), Some(b)) => {
                    if (a - b).norm() > 1e-12 * (1.0 + a.norm()) {
                        return Err(Error::DirichletConflict {
                            node: d.vel_node,
                            a: [a.x, a.y],
                            b: [b.x, b.y],
                        });
                    }
                    a
                }
                (_, Some(a), None) => a,
                (_, None, Some(b)) => b,
                _ => unreachable!("dirichlet node without claims"),
            };
            value[d.vel_node] = Some(v);
        }
        Ok(BcValues { value })
    }

    pub fn none(dof: &DofMap) -> BcValues {
        BcValues { value: vec![None; dof.n_vel_nodes] }
    }
}

/// Triplet accumulator with on-the-fly symmetric Dirichlet elimination.
struct Assembler {
    triplets: Vec<Triplet<usize, usize, f64>>,
    rhs: Vec<f64>,
    /// per global dof: Some(bc value) for eliminated dofs
    constrained: Vec<Option<f64>>,
}

impl Assembler {
    fn new(dof: &DofMap, bc: &BcValues) -> Assembler {
        let n = dof.n_dofs();
        let mut constrained = vec![None; n];
        for (node, v) in bc.value.iter().enumerate() {
            if let Some(v) = v {
                constrained[2 * node] = Some(v.x);
                constrained[2 * node + 1] = Some(v.y);
            }
        }
        if let Some(p) = dof.pinned_pressure {
            constrained[dof.p_dof(p)] = Some(0.0);
        }
        Assembler { triplets: Vec::new(), rhs: vec![0.0; n], constrained }
    }

    #[inline]
    fn add(&mut self, r: usize, c: usize, v: f64) {
        if v == 0.0 {
            return;
        }
        if self.constrained[r].is_some() {
            return;
        }
        if let Some(bc) = self.constrained[c] {
            self.rhs[r] -= v * bc;
            return;
        }
        self.triplets.push(Triplet::new(r, c, v));
    }

    #[inline]
    fn add_rhs(&mut self, r: usize, v: f64) {
        if self.constrained[r].is_none() {
            self.rhs[r] += v;
        }
    }

    fn finish(mut self, n: usize) -> Result<(SparseColMat<usize, f64>, Vec<f64>), Error> {
        for (d, bc) in self.constrained.iter().enumerate() {
            if let Some(bc) = bc {
                self.triplets.push(Triplet::new(d, d, 1.0));
                self.rhs[d] = *bc;
            }
        }
        let a = SparseColMat::try_new_from_triplets(n, n, &self.triplets)
            .map_err(|e| Error::SolveFailed(format!("matrix build: {e:?}")))?;
        Ok((a, self.rhs))
    }
}

/// Assemble the coupled system for one step.
///
/// `phi_stress` is the solid position entering the stress and tangent terms
/// (`phi^n` for the semi-implicit update, the Newton iterate otherwise);
/// `v_iter` adds the Newton correction `dt * A_s(grad phi; grad v_k, .)` to
/// the right side and is `None` for the semi-implicit path.
#[allow(clippy::too_many_arguments)]
pub fn assemble_step(
    fluid: &Mesh,
    solid: &Mesh,
    dof: &DofMap,
    params: &FsiParams,
    state_prev: &SystemState,
    frame: &AleFrame,
    w: &[Vec2],
    bc: &BcValues,
    phi_stress: &[Point2],
    v_iter: Option<&[Vec2]>,
) -> Result<(SparseColMat<usize, f64>, Vec<f64>), Error> {
    let mut asm = Assembler::new(dof, bc);
    add_fluid_terms(&mut asm, fluid, dof, params, state_prev, frame, w)?;
    add_outflow_traction(&mut asm, fluid, dof, params, &frame.new)?;
    add_solid_terms(&mut asm, solid, dof, params, state_prev, phi_stress, v_iter)?;
    asm.finish(dof.n_dofs())
}

fn add_fluid_terms(
    asm: &mut Assembler,
    fluid: &Mesh,
    dof: &DofMap,
    params: &FsiParams,
    state_prev: &SystemState,
    frame: &AleFrame,
    w: &[Vec2],
) -> Result<(), Error> {
    if fluid.n_triangles() == 0 {
        return Ok(());
    }
    let rule = quad_rule(params.volume_degree(fluid.order))?;
    let vtab = BasisTable::new(fluid.order, &rule)?;
    let ptab = BasisTable::new(dof.pressure_order, &rule)?;
    let mid = frame.midpoints();
    let (rho, nu, dt) = (params.rho_f, params.nu_f, params.dt);
    let lv = vtab.len;
    let lp = ptab.len;

    for j in 0..fluid.n_triangles() {
        let nodes = fluid.tri_nodes(j);
        let pnodes = &dof.tri_pressure[j * lp..(j + 1) * lp];
        let g_new = ElementGeom::new(fluid, j, &frame.new, &vtab)?;
        let g_old = ElementGeom::new(fluid, j, &frame.old, &vtab)?;
        let g_mid = ElementGeom::new(fluid, j, &mid, &vtab)?;

        // frozen coefficient vectors on this element
        let u_prev: Vec<Vec2> = nodes.iter().map(|&g| state_prev.u_at(dof, g)).collect();
        let w_loc: Vec<Vec2> = nodes.iter().map(|&g| w[g]).collect();

        let mut m_new = vec![0.0; lv * lv]; // scalar mass on the new mesh
        let mut conv = vec![0.0; lv * lv]; // convection + stabilization at the half step
        let mut visc = vec![0.0; 4 * lv * lv]; // full vector viscous block
        let mut bmat = vec![0.0; 2 * lv * lp]; // pressure-velocity coupling
        let mut rhs_mass = vec![Vec2::zeros(); lv];
        let mut rhs_grav = vec![0.0; lv];

        for q in 0..vtab.nq {
            let wq = rule.weights[q];
            // new-mesh terms: mass, viscous, pressure, gravity
            let dn = wq * g_new.det[q];
            let grads_new: Vec<Vec2> =
                (0..lv).map(|p| g_new.inv_jt[q] * vtab.grad(q, p)).collect();
            for b in 0..lv {
                let vb = vtab.value(q, b);
                rhs_grav[b] += dn * vb;
                for a in 0..lv {
                    m_new[b * lv + a] += dn * vtab.value(q, a) * vb;
                    let (ga, gb) = (grads_new[a], grads_new[b]);
                    let dot = ga.dot(&gb);
                    for alpha in 0..2 {
                        for beta in 0..2 {
                            let mut k = rho * nu * ga[beta] * gb[alpha];
                            if alpha == beta {
                                k += rho * nu * dot;
                            }
                            visc[((b * 2 + beta) * lv + a) * 2 + alpha] += dn * k;
                        }
                    }
                }
                for (c, _) in pnodes.iter().enumerate() {
                    let qc = ptab.value(q, c);
                    for beta in 0..2 {
                        bmat[(b * 2 + beta) * lp + c] -= dn * qc * grads_new[b][beta];
                    }
                }
            }

            // half-step terms: convection with (u_prev - w) and the
            // divergence stabilization, all with frozen coefficients
            let dm = wq * g_mid.det[q];
            let grads_mid: Vec<Vec2> =
                (0..lv).map(|p| g_mid.inv_jt[q] * vtab.grad(q, p)).collect();
            let mut g_adv = Vec2::zeros();
            let mut div_g = 0.0;
            let mut div_uprev = 0.0;
            for p in 0..lv {
                let diff = u_prev[p] - w_loc[p];
                g_adv += diff * vtab.value(q, p);
                div_g += diff.dot(&grads_mid[p]);
                div_uprev += u_prev[p].dot(&grads_mid[p]);
            }
            for b in 0..lv {
                let vb = vtab.value(q, b);
                for a in 0..lv {
                    let va = vtab.value(q, a);
                    let adv = div_g * va + g_adv.dot(&grads_mid[a]);
                    conv[b * lv + a] += dm * rho * (adv - 0.5 * div_uprev * va) * vb;
                }
            }

            // old-mesh right side: previous mass with old standard basis
            let do_ = wq * g_old.det[q];
            let mut u_old = Vec2::zeros();
            for p in 0..lv {
                u_old += u_prev[p] * vtab.value(q, p);
            }
            for b in 0..lv {
                rhs_mass[b] += (do_ * vtab.value(q, b)) * u_old;
            }
        }

        // scatter
        for b in 0..lv {
            let nb = dof.vel_node_of_fluid[nodes[b]];
            for beta in 0..2 {
                let r = 2 * nb + beta;
                asm.add_rhs(r, rho / dt * rhs_mass[b][beta]);
                asm.add_rhs(r, rho * params.g_f[beta] * rhs_grav[b]);
                for a in 0..lv {
                    let na = dof.vel_node_of_fluid[nodes[a]];
                    let scal = rho / dt * m_new[b * lv + a] + conv[b * lv + a];
                    asm.add(r, 2 * na + beta, scal + visc[((b * 2 + beta) * lv + a) * 2 + beta]);
                    let alpha = 1 - beta;
                    asm.add(r, 2 * na + alpha, visc[((b * 2 + beta) * lv + a) * 2 + alpha]);
                }
                for (c, &pn) in pnodes.iter().enumerate() {
                    let val = bmat[(b * 2 + beta) * lp + c];
                    asm.add(r, dof.p_dof(pn), val);
                    asm.add(dof.p_dof(pn), r, val);
                }
            }
        }
    }
    Ok(())
}

/// Add the traction outflow `sigma n = -p_g n` on Sigma2 with
/// `p_g(x) = rho_f g_f . x` (zero for zero body force).
fn add_outflow_traction(
    asm: &mut Assembler,
    fluid: &Mesh,
    dof: &DofMap,
    params: &FsiParams,
    points: &[Point2],
) -> Result<(), Error> {
    let (nodes_1d, w_1d) = gauss_legendre_unit(fluid.order + 1);
    for be in &fluid.boundary_edges {
        if be.marker != BoundaryMarker::Sigma2 {
            continue;
        }
        let tnodes = fluid.tri_nodes(be.tri);
        for (s, ws) in nodes_1d.iter().zip(&w_1d) {
            let xh = ref_edge_point(be.local_edge, *s);
            let basis = basis_eval(fluid.order, xh)?;
            let mut jac = Mat2::zeros();
            let mut x = Vec2::zeros();
            for (p, &g) in tnodes.iter().enumerate() {
                jac += points[g].coords * basis.grad[p].transpose();
                x += basis.value[p] * points[g].coords;
            }
            let tang = jac * ref_edge_tangent(be.local_edge);
            let ds = tang.norm();
            let n_out = Vec2::new(tang.y, -tang.x) / ds;
            let p_g = params.rho_f * params.g_f.dot(&x);
            for (b, &g) in tnodes.iter().enumerate() {
                let nb = dof.vel_node_of_fluid[g];
                for beta in 0..2 {
                    asm.add_rhs(2 * nb + beta, -ws * ds * p_g * n_out[beta] * basis.value[b]);
                }
            }
        }
    }
    Ok(())
}

fn add_solid_terms(
    asm: &mut Assembler,
    solid: &Mesh,
    dof: &DofMap,
    params: &FsiParams,
    state_prev: &SystemState,
    phi_stress: &[Point2],
    v_iter: Option<&[Vec2]>,
) -> Result<(), Error> {
    if solid.n_triangles() == 0 {
        return Ok(());
    }
    let rule = quad_rule(params.volume_degree(solid.order))?;
    let tab = BasisTable::new(solid.order, &rule)?;
    let lv = tab.len;
    let mat = &params.material;
    let (rho_s, dt) = (mat.rho_s, params.dt);

    for j in 0..solid.n_triangles() {
        let nodes = solid.tri_nodes(j);
        let geom = ElementGeom::new(solid, j, &solid.grid_points, &tab)?;
        let v_prev: Vec<Vec2> = nodes.iter().map(|&g| state_prev.v_at(dof, g)).collect();

        let mut mass = vec![0.0; lv * lv];
        let mut stiff = vec![0.0; 4 * lv * lv];
        let mut rhs = vec![Vec2::zeros(); lv];

        for q in 0..tab.nq {
            let wq = rule.weights[q] * geom.det[q];
            let grads: Vec<Vec2> = (0..lv).map(|p| geom.inv_jt[q] * tab.grad(q, p)).collect();
            // deformation gradient of the stress position field
            let mut f = Mat2::zeros();
            for (p, &g) in nodes.iter().enumerate() {
                f += phi_stress[g].coords * grads[p].transpose();
            }
            let sigma = mat.stress(&f);
            // optional Newton correction: dt * A_s(F; grad v_k, grad phi^s)
            let mut grad_vk = Mat2::zeros();
            if let Some(vk) = v_iter {
                for (p, &g) in nodes.iter().enumerate() {
                    grad_vk += vk[g] * grads[p].transpose();
                }
            }
            let mut vprev = Vec2::zeros();
            for p in 0..lv {
                vprev += v_prev[p] * tab.value(q, p);
            }
            for b in 0..lv {
                let vb = tab.value(q, b);
                // previous mass, gravity, stress residual
                rhs[b] += wq * (rho_s / dt * vb) * vprev;
                rhs[b] += wq * rho_s * vb * params.g_s;
                rhs[b] -= wq * (sigma * grads[b]);
                for a in 0..lv {
                    mass[b * lv + a] += wq * tab.value(q, a) * vb;
                }
                for beta in 0..2 {
                    let h = basis_mat(beta, grads[b]);
                    if v_iter.is_some() {
                        let corr = mat.linearization_density(&f, &grad_vk, &h);
                        rhs[b][beta] += wq * dt * corr;
                    }
                    for a in 0..lv {
                        for alpha in 0..2 {
                            let g = basis_mat(alpha, grads[a]);
                            let d = mat.linearization_density(&f, &g, &h);
                            stiff[((b * 2 + beta) * lv + a) * 2 + alpha] += wq * dt * d;
                        }
                    }
                }
            }
        }

        for b in 0..lv {
            let nb = dof.vel_node_of_solid[nodes[b]];
            for beta in 0..2 {
                let r = 2 * nb + beta;
                asm.add_rhs(r, rhs[b][beta]);
                for a in 0..lv {
                    let na = dof.vel_node_of_solid[nodes[a]];
                    let m = rho_s / dt * mass[b * lv + a];
                    asm.add(r, 2 * na + beta, m + stiff[((b * 2 + beta) * lv + a) * 2 + beta]);
                    let alpha = 1 - beta;
                    asm.add(r, 2 * na + alpha, stiff[((b * 2 + beta) * lv + a) * 2 + alpha]);
                }
            }
        }
    }

    // constant Sigma4 traction
    if params.sigma_b_s.norm() > 0.0 {
        let (nodes_1d, w_1d) = gauss_legendre_unit(solid.order + 1);
        for be in &solid.boundary_edges {
            if be.marker != BoundaryMarker::Sigma4 {
                continue;
            }
            let tnodes = solid.tri_nodes(be.tri);
            for (s, ws) in nodes_1d.iter().zip(&w_1d) {
                let xh = ref_edge_point(be.local_edge, *s);
                let basis = basis_eval(solid.order, xh)?;
                let mut jac = Mat2::zeros();
                for (p, &g) in tnodes.iter().enumerate() {
                    jac += solid.grid_points[g].coords * basis.grad[p].transpose();
                }
                let ds = (jac * ref_edge_tangent(be.local_edge)).norm();
                for (b, &g) in tnodes.iter().enumerate() {
                    let nb = dof.vel_node_of_solid[g];
                    for beta in 0..2 {
                        asm.add_rhs(
                            2 * nb + beta,
                            ws * ds * params.sigma_b_s[beta] * basis.value[b],
                        );
                    }
                }
            }
        }
    }
    Ok(())
}

/// G = e_alpha (grad phi)^T: the gradient of the vector basis function.
#[inline]
fn basis_mat(alpha: usize, grad: Vec2) -> Mat2 {
    if alpha == 0 {
        Mat2::new(grad.x, grad.y, 0.0, 0.0)
    } else {
        Mat2::new(0.0, 0.0, grad.x, grad.y)
    }
}

/// Direct sparse solve with a residual contract: `|A x - b| <= 1e-10 |b|`
/// in the max norm (with an absolute floor at machine scale).
pub fn solve_linear(a: &SparseColMat<usize, f64>, b: &[f64]) -> Result<Vec<f64>, Error> {
    let n = b.len();
    let lu = a.sp_lu().map_err(|e| Error::SolveFailed(format!("sparse LU: {e:?}")))?;
    let mut bm = Mat::zeros(n, 1);
    for (i, v) in b.iter().enumerate() {
        bm[(i, 0)] = *v;
    }
    let x = lu.solve(&bm);
    let sol: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolveFailed("non-finite solution (singular matrix)".into()));
    }
    let r = a * &x - &bm;
    let mut rnorm = 0.0f64;
    let mut bnorm = 0.0f64;
    let mut xnorm = 0.0f64;
    for i in 0..n {
        rnorm = rnorm.max(r[(i, 0)].abs());
        bnorm = bnorm.max(bm[(i, 0)].abs());
        xnorm = xnorm.max(sol[i].abs());
    }
    let tol = 1e-10 * bnorm + 1e-13 * xnorm.max(1.0);
    if !(rnorm <= tol) {
        return Err(Error::SolveResidual { residual: rnorm, tol });
    }
    Ok(sol)
}

/// Extract `(vel, pressure)` slices of a solution vector.
pub fn split_solution(dof: &DofMap, x: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let nv = 2 * dof.n_vel_nodes;
    let pressure = x[nv..].to_vec();
    let mut vel = x;
    vel.truncate(nv);
    (vel, pressure)
}

/// One semi-implicit solve: assemble at `phi_next` and solve once.
#[allow(clippy::too_many_arguments)]
pub fn semi_implicit_solve(
    fluid: &Mesh,
    solid: &Mesh,
    dof: &DofMap,
    params: &FsiParams,
    state_prev: &SystemState,
    frame: &AleFrame,
    w: &[Vec2],
    bc: &BcValues,
    phi_next: &[Point2],
) -> Result<Vec<f64>, Error> {
    let (a, b) =
        assemble_step(fluid, solid, dof, params, state_prev, frame, w, bc, phi_next, None)?;
    solve_linear(&a, &b)
}

/// Newton iteration for the implicit solid update: the stress is evaluated
/// at `phi^n + dt v` and the tangent form is the exact Jacobian. Starts
/// from `v = 0`, so the first iterate solves the semi-implicit system; for
/// a linear elastic material it stops there.
#[allow(clippy::too_many_arguments)]
pub fn newton_solid_step(
    fluid: &Mesh,
    solid: &Mesh,
    dof: &DofMap,
    params: &FsiParams,
    state_prev: &SystemState,
    frame: &AleFrame,
    w: &[Vec2],
    bc: &BcValues,
    phi_next: &[Point2],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize), Error> {
    let mut v_k: Vec<Vec2> = vec![Vec2::zeros(); dof.n_solid_points];
    let mut x_prev: Option<Vec<f64>> = None;
    let mut last = f64::INFINITY;
    for it in 1..=max_iter {
        let phi_eval: Vec<Point2> =
            phi_next.iter().zip(&v_k).map(|(p, v)| *p + params.dt * v).collect();
        let (a, b) = assemble_step(
            fluid, solid, dof, params, state_prev, frame, w, bc, &phi_eval,
            Some(&v_k),
        )?;
        let x = solve_linear(&a, &b)?;
        if let Some(ref xp) = x_prev {
            last = x.iter().zip(xp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if last < tol {
                return Ok((x, it));
            }
        }
        for s in 0..dof.n_solid_points {
            let n = dof.vel_node_of_solid[s];
            v_k[s] = Vec2::new(x[2 * n], x[2 * n + 1]);
        }
        // a linear material makes the system independent of the iterate
        if params.material.convex_energy() && x_prev.is_none() {
            return Ok((x, it));
        }
        x_prev = Some(x);
    }
    Err(Error::NewtonDiverged { iters: max_iter, last })
}
