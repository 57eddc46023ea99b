//! Time integration of the coupled scheme.
//!
//! One step, in order: advance the interface explicitly from the previous
//! solid velocity, move the fluid mesh through the stiffened elasticity
//! solve, build the ALE frame and the mesh velocity (interface nodes copy
//! the previous velocity bitwise), assemble and solve the coupled system,
//! then update the energy ledger and the stability residual
//!
//!   [E(n) - E(n-1) + D_visc(n) - P(n)] / dt <= slack,
//!
//! where E collects fluid kinetic, solid kinetic and strain energy, D_visc
//! the viscous dissipation of the step and P the power input. With zero
//! inflow, no traction outflow, a fixed solid boundary and a convex strain
//! energy the residual is nonpositive up to quadrature error regardless of
//! the mesh motion.

use crate::ale::{
    advance_interface, build_frame, mesh_velocity, place_grid_points, MeshMotionOperator,
};
use crate::assembly::{
    assemble_step, newton_solid_step, solve_linear, split_solution, BcValues, FsiParams,
    SolidUpdate, SystemState,
};
use crate::dof::{build_dof_map, DofMap};
use crate::mesh::{ElementGeom, Mesh};
use crate::observables::{field_norms_component, FieldNorms};
use crate::ref_elem::{quad_rule, BasisTable};
use crate::{Error, Point2, Vec2};
use std::time::Instant;

/// Inflow ramp of the benchmark cases: `(1 - cos(pi t / 2)) / 2` until
/// `t = 2`, then 1.
pub fn inflow_ramp(t: f64) -> f64 {
    if t <= 2.0 {
        0.5 * (1.0 - (0.5 * std::f64::consts::PI * t).cos())
    } else {
        1.0
    }
}

/// Dirichlet fluid velocity on Sigma1.
#[derive(Debug, Clone, Copy)]
pub enum Inflow {
    /// homogeneous no-slip everywhere on Sigma1
    None,
    /// ramped channel profile `(1 + 2y)(1 - y)` on the left edge `x = 0`
    CaseI,
    /// ramped parabolic profile `12/0.1681 y (0.41 - y)` on the left edge
    CaseII,
    /// constant value on all of Sigma1 (testing)
    Uniform { ux: f64, uy: f64 },
    /// arbitrary profile `(t, x) -> u_b` (manufactured solutions)
    Custom(fn(f64, Point2) -> Vec2),
}

impl Inflow {
    pub fn eval(&self, t: f64, p: Point2) -> Vec2 {
        match *self {
            Inflow::None => Vec2::zeros(),
            Inflow::CaseI => {
                if p.x.abs() < 1e-12 {
                    Vec2::new(inflow_ramp(t) * (1.0 + 2.0 * p.y) * (1.0 - p.y), 0.0)
                } else {
                    Vec2::zeros()
                }
            }
            Inflow::CaseII => {
                if p.x.abs() < 1e-12 {
                    Vec2::new(inflow_ramp(t) * 12.0 / 0.1681 * p.y * (0.41 - p.y), 0.0)
                } else {
                    Vec2::zeros()
                }
            }
            Inflow::Uniform { ux, uy } => Vec2::new(ux, uy),
            Inflow::Custom(f) => f(t, p),
        }
    }
}

/// Stability-monitor configuration.
#[derive(Debug, Clone, Copy)]
pub struct MonitorConfig {
    /// the energy-inequality hypotheses hold for this run (zero inflow, no
    /// traction outflow, fixed solid boundary, convex strain energy)
    pub hypotheses_hold: bool,
    /// violation slack relative to the initial total energy; 1e-8 covers
    /// curved-element quadrature error, 1e-10 is adequate on all-straight
    /// meshes
    pub slack_factor: f64,
    /// abort the run on a violation instead of recording it
    pub abort_on_violation: bool,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig { hypotheses_hold: false, slack_factor: 1e-8, abort_on_violation: false }
    }
}

/// Per-step energy bookkeeping: the terms of the discrete energy estimate.
#[derive(Debug, Clone, Copy)]
pub struct LedgerRow {
    pub step: usize,
    pub t: f64,
    /// fluid kinetic energy at this level
    pub e_kin_f: f64,
    /// solid kinetic energy
    pub e_kin_s: f64,
    /// strain energy of the advanced position `phi^n + dt v^n`
    pub e_strain: f64,
    /// viscous dissipation of the step (times dt)
    pub d_visc: f64,
    /// power input of the step (times dt)
    pub power: f64,
    /// stability residual (LHS - RHS of the energy estimate); None on row 0
    pub stab_residual: Option<f64>,
}

impl LedgerRow {
    pub fn total_energy(&self) -> f64 {
        self.e_kin_f + self.e_kin_s + self.e_strain
    }
}

#[derive(Debug, Clone, Default)]
pub struct EnergyLedger {
    pub rows: Vec<LedgerRow>,
}

/// Diagnostics of one time step.
#[derive(Debug, Clone, Copy)]
pub struct StepReport {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub stability_residual: f64,
    pub stability_violation: bool,
    pub min_det_new: f64,
    pub min_det_mid: f64,
    pub solver_residual: f64,
    pub newton_iters: usize,
    pub max_mesh_velocity: f64,
    /// not covered by the determinism guarantee
    pub wall_seconds: f64,
}

/// A configured transient FSI run.
pub struct Simulation {
    pub fluid: Mesh,
    pub solid: Mesh,
    pub dof: DofMap,
    pub params: FsiParams,
    pub inflow: Inflow,
    pub monitor: MonitorConfig,
    pub motion: MeshMotionOperator,
    pub state: SystemState,
    pub ledger: EnergyLedger,
    pair_of_fluid: Vec<Option<usize>>,
    step_count: usize,
}

impl Simulation {
    pub fn new(
        fluid: Mesh,
        solid: Mesh,
        interface_pairs: &[(usize, usize)],
        params: FsiParams,
        inflow: Inflow,
        monitor: MonitorConfig,
    ) -> Result<Simulation, Error> {
        let dof = build_dof_map(&fluid, &solid, interface_pairs)?;
        let motion = MeshMotionOperator::new(&fluid)?;
        let state = SystemState::rest(&dof, &fluid, &solid);
        let mut pair_of_fluid = vec![None; fluid.n_grid_points().max(1)];
        for &(f, s) in interface_pairs {
            pair_of_fluid[f] = Some(s);
        }
        Ok(Simulation {
            fluid,
            solid,
            dof,
            params,
            inflow,
            monitor,
            motion,
            state,
            ledger: EnergyLedger::default(),
            pair_of_fluid,
            step_count: 0,
        })
    }

    /// Set the initial solid velocity (for free-vibration runs); resets the
    /// ledger.
    pub fn set_initial_solid_velocity(&mut self, v: &dyn Fn(Point2) -> Vec2) {
        let dof = self.dof.clone();
        self.state.set_solid_velocity(&dof, v);
        self.ledger.rows.clear();
    }

    fn seed_ledger(&mut self) {
        let row = self.ledger_row(None);
        self.ledger.rows.push(row);
    }

    /// Execute one step of the scheme.
    pub fn step(&mut self) -> Result<StepReport, Error> {
        let t0 = Instant::now();
        if self.ledger.rows.is_empty() {
            self.seed_ledger();
        }
        let dt = self.params.dt;
        let t_next = self.state.t + dt;

        // explicit interface advance
        let v_prev: Vec<Vec2> =
            (0..self.dof.n_solid_points).map(|s| self.state.v_at(&self.dof, s)).collect();
        let phi_next = advance_interface(&self.state.phi, &v_prev, dt);

        // fluid mesh at the new level
        let bdisp: Vec<Vec2> = self
            .motion
            .boundary_vertices()
            .iter()
            .map(|&bv| match self.pair_of_fluid[bv] {
                Some(s) => phi_next[s] - self.fluid.vertices[bv],
                None => Vec2::zeros(),
            })
            .collect();
        let new_vertices = self.motion.solve(&bdisp)?;
        let new_points =
            place_grid_points(&self.fluid, &new_vertices, &self.dof.interface_pairs, &phi_next);
        let frame = build_frame(&self.fluid, self.state.fluid_points.clone(), new_points, dt)?;
        let min_det_new = min_det(&self.fluid, &frame.new)?;
        let min_det_mid = min_det(&self.fluid, &frame.midpoints())?;

        // mesh velocity; interface nodes carry the previous fluid/solid
        // velocity bitwise
        let mut w = if self.fluid.n_grid_points() > 0 {
            mesh_velocity(&frame)
        } else {
            Vec::new()
        };
        for &(f, s) in &self.dof.interface_pairs {
            w[f] = self.state.v_at(&self.dof, s);
            // interface coupling is shared storage; the trace identity
            // w = u^{n-1} on the interface holds bitwise
            assert_eq!(w[f], self.state.u_at(&self.dof, f));
        }
        let max_w = w.iter().map(|v| v.norm()).fold(0.0, f64::max);

        // boundary data at the new time level
        let inflow = self.inflow;
        let bc = BcValues::evaluate(
            &self.dof,
            &self.fluid,
            &self.solid,
            &|p| inflow.eval(t_next, p),
            &|_| Vec2::zeros(),
        )?;

        // assemble and solve
        let (x, solver_residual, newton_iters) = match self.params.solid_update {
            SolidUpdate::SemiImplicit => {
                let (a, b) = assemble_step(
                    &self.fluid,
                    &self.solid,
                    &self.dof,
                    &self.params,
                    &self.state,
                    &frame,
                    &w,
                    &bc,
                    &phi_next,
                    None,
                )?;
                let x = solve_linear(&a, &b)?;
                let resid = matvec_residual(&a, &x, &b);
                (x, resid, 1)
            }
            SolidUpdate::Implicit { tol, max_iter } => {
                let (x, iters) = newton_solid_step(
                    &self.fluid,
                    &self.solid,
                    &self.dof,
                    &self.params,
                    &self.state,
                    &frame,
                    &w,
                    &bc,
                    &phi_next,
                    tol,
                    max_iter,
                )?;
                (x, f64::NAN, iters)
            }
        };
        let (vel, pressure) = split_solution(&self.dof, x);
        self.state = SystemState {
            t: t_next,
            vel,
            pressure,
            phi: phi_next,
            fluid_points: frame.new.clone(),
        };
        self.step_count += 1;

        // energy ledger and stability residual
        let prev_row = *self.ledger.rows.last().expect("seeded ledger");
        let mut row = self.ledger_row(Some(self.step_count));
        let residual =
            (row.total_energy() - prev_row.total_energy() + row.d_visc - row.power) / dt;
        row.stab_residual = Some(residual);
        self.ledger.rows.push(row);

        let e_ref = self.ledger.rows[0].total_energy().max(1e-30);
        let violation =
            self.monitor.hypotheses_hold && residual > self.monitor.slack_factor * e_ref;
        if violation && self.monitor.abort_on_violation {
            return Err(Error::SolveFailed(format!(
                "stability violation at step {}: residual {residual:.3e} > slack {:.3e}",
                self.step_count,
                self.monitor.slack_factor * e_ref
            )));
        }

        Ok(StepReport {
            step: self.step_count,
            t: t_next,
            dt,
            stability_residual: residual,
            stability_violation: violation,
            min_det_new,
            min_det_mid,
            solver_residual,
            newton_iters,
            max_mesh_velocity: max_w,
            wall_seconds: t0.elapsed().as_secs_f64(),
        })
    }

    /// Stability residual of step `n` per the recorded ledger. Errors when
    /// the run is not flagged as satisfying the energy-inequality
    /// hypotheses.
    pub fn check_stability(&self, n: usize) -> Result<f64, Error> {
        if !self.monitor.hypotheses_hold {
            return Err(Error::StabilityHypotheses);
        }
        let row = &self.ledger.rows[n];
        row.stab_residual.ok_or_else(|| {
            Error::BadConfig(format!("ledger row {n} carries no stability residual"))
        })
    }

    /// Integrate to `t_end` with the fixed step; returns one report per step.
    pub fn run(&mut self, t_end: f64) -> Result<Vec<StepReport>, Error> {
        self.run_with(t_end, &mut |_, _| Ok(()))
    }

    /// Integrate to `t_end`, invoking `sink` after every step.
    pub fn run_with(
        &mut self,
        t_end: f64,
        sink: &mut dyn FnMut(&Simulation, &StepReport) -> Result<(), Error>,
    ) -> Result<Vec<StepReport>, Error> {
        let dt = self.params.dt;
        let remaining = t_end - self.state.t;
        if remaining < -1e-12 {
            return Err(Error::BadConfig(format!(
                "t_end {t_end} lies before the current time {}",
                self.state.t
            )));
        }
        let n_steps = (remaining / dt).round() as usize;
        if (n_steps as f64 * dt - remaining).abs() > 1e-9 * remaining.max(1.0) {
            return Err(Error::BadConfig(format!(
                "dt {dt} does not divide the remaining time {remaining}"
            )));
        }
        if self.ledger.rows.is_empty() {
            self.seed_ledger();
        }
        let mut reports = Vec::with_capacity(n_steps);
        for _ in 0..n_steps {
            let report = self.step()?;
            sink(self, &report)?;
            reports.push(report);
        }
        Ok(reports)
    }

    fn ledger_row(&self, step: Option<usize>) -> LedgerRow {
        let dt = self.params.dt;
        let (e_kin_f, d_visc_rate, power_f) = self.fluid_energies();
        let (e_kin_s, e_strain, power_s) = self.solid_energies();
        LedgerRow {
            step: step.unwrap_or(0),
            t: self.state.t,
            e_kin_f,
            e_kin_s,
            e_strain,
            d_visc: dt * d_visc_rate,
            power: dt * (power_f + power_s),
            stab_residual: None,
        }
    }

    /// Fluid kinetic energy, viscous dissipation rate and body-force power
    /// on the current mesh.
    fn fluid_energies(&self) -> (f64, f64, f64) {
        if self.fluid.n_triangles() == 0 {
            return (0.0, 0.0, 0.0);
        }
        let rule = quad_rule(self.params.volume_degree(self.fluid.order)).expect("degree");
        let tab = BasisTable::new(self.fluid.order, &rule).expect("order");
        let pts = &self.state.fluid_points;
        let (mut kin, mut diss, mut pow) = (0.0, 0.0, 0.0);
        for j in 0..self.fluid.n_triangles() {
            let nodes = self.fluid.tri_nodes(j);
            let geom = ElementGeom::new(&self.fluid, j, pts, &tab).expect("untangled");
            for q in 0..tab.nq {
                let wq = rule.weights[q] * geom.det[q];
                let mut u = Vec2::zeros();
                let mut grad = crate::Mat2::zeros();
                for (p, &g) in nodes.iter().enumerate() {
                    let up = self.state.u_at(&self.dof, g);
                    u += up * tab.value(q, p);
                    grad += up * (geom.inv_jt[q] * tab.grad(q, p)).transpose();
                }
                let sym = grad + grad.transpose();
                kin += wq * u.norm_squared();
                diss += wq * (sym.m11 * sym.m11
                    + sym.m12 * sym.m12
                    + sym.m21 * sym.m21
                    + sym.m22 * sym.m22);
                pow += wq * self.params.g_f.dot(&u);
            }
        }
        let rho = self.params.rho_f;
        (0.5 * rho * kin, 0.5 * rho * self.params.nu_f * diss, rho * pow)
    }

    /// Solid kinetic energy, strain energy of the advanced position, and
    /// body-force plus Sigma4 traction power.
    fn solid_energies(&self) -> (f64, f64, f64) {
        if self.solid.n_triangles() == 0 {
            return (0.0, 0.0, 0.0);
        }
        let rule = quad_rule(self.params.volume_degree(self.solid.order)).expect("degree");
        let tab = BasisTable::new(self.solid.order, &rule).expect("order");
        let mat = &self.params.material;
        let dt = self.params.dt;
        // the energy estimate tracks Pi_s(v^n; phi^n + dt v^n)
        let v_now: Vec<Vec2> =
            (0..self.dof.n_solid_points).map(|s| self.state.v_at(&self.dof, s)).collect();
        let phi_eff = advance_interface(&self.state.phi, &v_now, dt);
        let (mut kin, mut strain, mut pow) = (0.0, 0.0, 0.0);
        for j in 0..self.solid.n_triangles() {
            let nodes = self.solid.tri_nodes(j);
            let geom =
                ElementGeom::new(&self.solid, j, &self.solid.grid_points, &tab).expect("valid");
            for q in 0..tab.nq {
                let wq = rule.weights[q] * geom.det[q];
                let mut v = Vec2::zeros();
                let mut f = crate::Mat2::zeros();
                for (p, &g) in nodes.iter().enumerate() {
                    let gp = geom.inv_jt[q] * tab.grad(q, p);
                    v += v_now[g] * tab.value(q, p);
                    f += phi_eff[g].coords * gp.transpose();
                }
                kin += wq * v.norm_squared();
                strain += wq * mat.strain_energy(&f);
                pow += wq * mat.rho_s * self.params.g_s.dot(&v);
            }
        }
        if self.params.sigma_b_s.norm() > 0.0 {
            let (nodes_1d, w_1d) =
                crate::ref_elem::gauss_legendre_unit(self.solid.order + 1);
            for be in &self.solid.boundary_edges {
                if be.marker != crate::mesh::BoundaryMarker::Sigma4 {
                    continue;
                }
                let tnodes = self.solid.tri_nodes(be.tri);
                for (s, ws) in nodes_1d.iter().zip(&w_1d) {
                    let xh = crate::mesh::ref_edge_point(be.local_edge, *s);
                    let basis = crate::ref_elem::basis_eval(self.solid.order, xh).expect("order");
                    let mut jac = crate::Mat2::zeros();
                    let mut v = Vec2::zeros();
                    for (p, &g) in tnodes.iter().enumerate() {
                        jac += self.solid.grid_points[g].coords * basis.grad[p].transpose();
                        v += v_now[g] * basis.value[p];
                    }
                    let ds = (jac * crate::mesh::ref_edge_tangent(be.local_edge)).norm();
                    pow += ws * ds * self.params.sigma_b_s.dot(&v);
                }
            }
        }
        (0.5 * mat.rho_s * kin, strain, pow)
    }
}

fn min_det(mesh: &Mesh, points: &[Point2]) -> Result<f64, Error> {
    if mesh.n_triangles() == 0 {
        return Ok(1.0);
    }
    let rule = quad_rule(3 * mesh.order + 2)?;
    let mut min = f64::MAX;
    for j in 0..mesh.n_triangles() {
        for &q in &rule.points {
            let (_, det) = mesh.iso_map_jacobian_at(j, q, points)?;
            min = min.min(det);
        }
    }
    Ok(min)
}

fn matvec_residual(
    a: &faer::sparse::SparseColMat<usize, f64>,
    x: &[f64],
    b: &[f64],
) -> f64 {
    let n = b.len();
    let mut xm = faer::Mat::zeros(n, 1);
    for (i, v) in x.iter().enumerate() {
        xm[(i, 0)] = *v;
    }
    let r = a * &xm;
    let mut max = 0.0f64;
    for i in 0..n {
        max = max.max((r[(i, 0)] - b[i]).abs());
    }
    max
}

/// Result of a temporal convergence study against a reference step size.
#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub t_end: f64,
    pub dt_ref: f64,
    pub rows: Vec<ConvergenceRow>,
    pub failures: Vec<(f64, String)>,
}

/// Errors (and local orders vs the previous row) of the two solid position
/// components in L2, Linf, gradient-L2 and gradient-Linf.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub err: [FieldNorms; 2],
    pub order: [Option<FieldNorms>; 2],
}

/// Run the study: integrate to `t_end` for every step size plus the
/// reference, then compare the final solid position fields.
pub fn convergence_study(
    make: &dyn Fn(f64) -> Result<Simulation, Error>,
    dts: &[f64],
    dt_ref: f64,
    t_end: f64,
) -> Result<ConvergenceStudy, Error> {
    let mut reference = make(dt_ref)?;
    reference.run(t_end)?;
    let phi_ref = reference.state.phi.clone();
    let solid = reference.solid.clone();

    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut failures = Vec::new();
    for &dt in dts {
        let outcome = make(dt).and_then(|mut sim| {
            sim.run(t_end)?;
            Ok(sim.state.phi.clone())
        });
        match outcome {
            Ok(phi) => {
                let err = [
                    field_norms_component(&solid, &phi, &phi_ref, 0)?,
                    field_norms_component(&solid, &phi, &phi_ref, 1)?,
                ];
                let order = match rows.last() {
                    Some(prev) => {
                        let ratio = (prev.dt / dt).log10();
                        let ord = |e0: f64, e1: f64| {
                            if e0 > 0.0 && e1 > 0.0 {
                                (e0 / e1).log10() / ratio
                            } else {
                                f64::NAN
                            }
                        };
                        [0, 1].map(|c| {
                            Some(FieldNorms {
                                l2: ord(prev.err[c].l2, err[c].l2),
                                linf: ord(prev.err[c].linf, err[c].linf),
                                grad_l2: ord(prev.err[c].grad_l2, err[c].grad_l2),
                                grad_linf: ord(prev.err[c].grad_linf, err[c].grad_linf),
                            })
                        })
                    }
                    None => [None, None],
                };
                rows.push(ConvergenceRow { dt, err, order });
            }
            Err(e) => failures.push((dt, e.to_string())),
        }
    }
    Ok(ConvergenceStudy { t_end, dt_ref, rows, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{FsiParams, SolidUpdate};
    use crate::materials::{MaterialKind, MaterialModel};
    use crate::mesh::{generate_rectangle_mesh, BoundaryMarker, SideMarkers};

    fn fluid_only_params(dt: f64) -> FsiParams {
        FsiParams {
            rho_f: 1.0,
            nu_f: 1.0,
            g_f: Vec2::zeros(),
            g_s: Vec2::zeros(),
            sigma_b_s: Vec2::zeros(),
            material: MaterialModel::new(MaterialKind::LinearElastic, 1.0, 1.0, 1.0),
            dt,
            quad_degree: 0,
            solid_update: SolidUpdate::SemiImplicit,
        }
    }

    #[test]
    fn ramp_values() {
        assert_eq!(inflow_ramp(0.0), 0.0);
        assert!((inflow_ramp(1.0) - 0.5).abs() < 1e-15);
        assert_eq!(inflow_ramp(2.0), 1.0);
        assert_eq!(inflow_ramp(5.0), 1.0);
    }

    #[test]
    fn zero_run_stays_zero() {
        let markers = SideMarkers {
            left: BoundaryMarker::Sigma1,
            right: BoundaryMarker::Sigma1,
            bottom: BoundaryMarker::Sigma1,
            top: BoundaryMarker::Sigma1,
        };
        let fluid = generate_rectangle_mesh((0.0, 1.0, 0.0, 1.0), 0.25, 2, markers).unwrap();
        let mut sim = Simulation::new(
            fluid,
            Mesh::empty(2),
            &[],
            fluid_only_params(0.1),
            Inflow::None,
            MonitorConfig { hypotheses_hold: true, ..Default::default() },
        )
        .unwrap();
        let reports = sim.run(0.5).unwrap();
        assert_eq!(reports.len(), 5);
        let vmax = sim.state.vel.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let pmax = sim.state.pressure.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(vmax <= 1e-12 && pmax <= 1e-12, "state must stay zero: {vmax:e}, {pmax:e}");
        for row in &sim.ledger.rows {
            assert!(row.total_energy() <= 1e-20);
            assert!(row.d_visc.abs() <= 1e-20 && row.power.abs() <= 1e-20);
        }
    }

    #[test]
    fn run_to_zero_time_takes_no_steps() {
        let fluid =
            generate_rectangle_mesh((0.0, 1.0, 0.0, 1.0), 0.5, 2, SideMarkers::default())
                .unwrap();
        let mut sim = Simulation::new(
            fluid,
            Mesh::empty(2),
            &[],
            fluid_only_params(0.1),
            Inflow::None,
            MonitorConfig::default(),
        )
        .unwrap();
        let reports = sim.run(0.0).unwrap();
        assert!(reports.is_empty());
        // the initial snapshot row exists
        assert_eq!(sim.ledger.rows.len(), 1);
    }

    #[test]
    fn mismatched_t_end_is_rejected() {
        let fluid =
            generate_rectangle_mesh((0.0, 1.0, 0.0, 1.0), 0.5, 2, SideMarkers::default())
                .unwrap();
        let mut sim = Simulation::new(
            fluid,
            Mesh::empty(2),
            &[],
            fluid_only_params(0.3),
            Inflow::None,
            MonitorConfig::default(),
        )
        .unwrap();
        assert!(sim.run(1.0).is_err());
    }

    #[test]
    fn poiseuille_is_a_steady_state_on_a_fixed_mesh() {
        // all-Dirichlet box carrying the exact Poiseuille trace; the profile
        // lies in the P2 space, so steps leave it unchanged
        let markers = SideMarkers {
            left: BoundaryMarker::Sigma1,
            right: BoundaryMarker::Sigma1,
            bottom: BoundaryMarker::Sigma1,
            top: BoundaryMarker::Sigma1,
        };
        let fluid = generate_rectangle_mesh((0.0, 1.0, 0.0, 1.0), 0.25, 2, markers).unwrap();
        let mut sim = Simulation::new(
            fluid.clone(),
            Mesh::empty(2),
            &[],
            fluid_only_params(0.05),
            Inflow::Custom(|_, p| Vec2::new(p.y * (1.0 - p.y), 0.0)),
            MonitorConfig::default(),
        )
        .unwrap();
        for (g, p) in fluid.grid_points.iter().enumerate() {
            let n = sim.dof.vel_node_of_fluid[g];
            sim.state.vel[2 * n] = p.y * (1.0 - p.y);
            sim.state.vel[2 * n + 1] = 0.0;
        }
        let reports = sim.run(0.25).unwrap();
        for r in &reports {
            assert!(r.solver_residual < 1e-9);
            assert_eq!(r.max_mesh_velocity, 0.0, "mesh must not move");
        }
        for (g, p) in fluid.grid_points.iter().enumerate() {
            let n = sim.dof.vel_node_of_fluid[g];
            let exact = p.y * (1.0 - p.y);
            assert!(
                (sim.state.vel[2 * n] - exact).abs() < 1e-8,
                "u_x at {p:?}: {} vs {exact}",
                sim.state.vel[2 * n]
            );
            assert!(sim.state.vel[2 * n + 1].abs() < 1e-8);
        }
    }

    #[test]
    fn check_stability_requires_hypotheses() {
        let fluid =
            generate_rectangle_mesh((0.0, 1.0, 0.0, 1.0), 0.5, 2, SideMarkers::default())
                .unwrap();
        let mut sim = Simulation::new(
            fluid,
            Mesh::empty(2),
            &[],
            fluid_only_params(0.1),
            Inflow::None,
            MonitorConfig::default(),
        )
        .unwrap();
        sim.run(0.2).unwrap();
        assert!(matches!(sim.check_stability(1), Err(Error::StabilityHypotheses)));
    }
}
