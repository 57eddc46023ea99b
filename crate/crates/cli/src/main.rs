//! Command-line front end for the coupled fluid-structure solver.
//!
//! Subcommands: `run` integrates a configured case and writes the time
//! series; `converge` reproduces the temporal-accuracy study; `gcl-check`
//! verifies the discrete geometric conservation law on random mesh motions;
//! `stability-check` drives a free-vibration run and reports the energy
//! residuals; `info` prints the resolved configuration and mesh statistics.

mod config;
mod output;

use alefsi::ale::{build_frame, gcl_residual, gcl_residual_squared};
use alefsi::mesh::{generate_rectangle_mesh, read_mesh, Mesh, SideMarkers};
use alefsi::ref_elem::quad_rule;
use alefsi::stepper::convergence_study;
use alefsi::{Point2, Vec2};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use config::{load_config, RunConfig};
use output::OutputWriters;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "alefsi", version, about = "2D isoparametric FSI solver on a moving mesh")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configured case and write ledger/forces/snapshots
    Run {
        #[arg(long)]
        config: PathBuf,
        /// override the fluid mesh with a file (fluid-only run)
        #[arg(long)]
        mesh: Option<PathBuf>,
        /// override the output directory
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Temporal convergence study against a reference step size
    Converge {
        #[arg(long)]
        config: PathBuf,
        /// comma-separated list of step sizes
        #[arg(long, value_delimiter = ',')]
        dts: Vec<f64>,
        #[arg(long)]
        ref_dt: f64,
        /// final time of every run (defaults to the config t_end)
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Verify the geometric conservation law on random interior motions
    GclCheck {
        /// mesh file; a rectangle mesh is generated when absent
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0.25)]
        h: f64,
    },
    /// Free-vibration energy-stability check on a case geometry
    StabilityCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        /// initial solid velocity amplitude
        #[arg(long, default_value_t = 0.2)]
        amplitude: f64,
    },
    /// Print the resolved configuration and mesh statistics
    Info {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() {
    // die quietly when stdout is closed mid-stream (e.g. piping into head)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run { config, mesh, out_dir } => {
            let mut cfg = load_config(&config)?;
            if let Some(m) = mesh {
                cfg.mesh = Some(m);
            }
            if let Some(d) = out_dir {
                cfg.out_dir = d;
            }
            if let Ok(env_dir) = std::env::var("ALEFSI_OUT_DIR") {
                cfg.out_dir = PathBuf::from(env_dir);
            }
            run(&cfg)
        }
        Command::Converge { config, dts, ref_dt, t_end } => {
            let cfg = load_config(&config)?;
            converge(&cfg, &dts, ref_dt, t_end.unwrap_or(cfg.t_end))
        }
        Command::GclCheck { mesh, trials, h } => gcl_check(mesh, trials, h),
        Command::StabilityCheck { config, steps, amplitude } => {
            let cfg = load_config(&config)?;
            stability_check(&cfg, steps, amplitude)
        }
        Command::Info { config } => {
            let cfg = load_config(&config)?;
            info(&cfg)
        }
    }
}

fn run(cfg: &RunConfig) -> Result<i32> {
    let (mut sim, probe, tail) = cfg.build_simulation()?;
    let mut out = OutputWriters::create(
        &cfg.out_dir,
        &cfg.serialize(),
        probe,
        tail,
        cfg.forces,
        cfg.snapshot_every,
        &sim,
    )?;
    println!(
        "run: case {} | fluid {} tris, solid {} tris, {} dofs | dt {} to t = {}",
        cfg.case_name(),
        sim.fluid.n_triangles(),
        sim.solid.n_triangles(),
        sim.dof.n_dofs(),
        cfg.dt,
        cfg.t_end
    );
    if cfg.snapshot_every > 0 {
        out.write_snapshot(&sim)?;
    }
    let result = sim.run_with(cfg.t_end, &mut |sim, report| {
        out.record(sim, report).map_err(|e| alefsi::Error::BadConfig(format!("output: {e}")))?;
        if report.step % 50 == 0 {
            println!(
                "  step {:5}  t {:9.4}  min det {:.3e}  stab {:+.3e}",
                report.step, report.t, report.min_det_new, report.stability_residual
            );
        }
        Ok(())
    });
    out.flush()?;
    match result {
        Ok(reports) => {
            let violations = reports.iter().filter(|r| r.stability_violation).count();
            println!("done: {} steps, {} stability violations", reports.len(), violations);
            Ok(0)
        }
        Err(e) => {
            // partial outputs are already flushed
            eprintln!("run aborted: {e}");
            Ok(3)
        }
    }
}

fn converge(cfg: &RunConfig, dts: &[f64], ref_dt: f64, t_end: f64) -> Result<i32> {
    if dts.is_empty() {
        bail!("--dts must list at least one step size");
    }
    let make = |dt: f64| {
        let mut c = cfg.clone();
        c.dt = dt;
        let (sim, _, _) = c.build_simulation().map_err(|e| {
            alefsi::Error::BadConfig(format!("building simulation for dt {dt}: {e}"))
        })?;
        Ok(sim)
    };
    println!("convergence study to t = {t_end}, reference dt = {ref_dt}");
    let study = convergence_study(&make, dts, ref_dt, t_end)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut csv = String::from("dt,comp,l2,linf,grad_l2,grad_linf,o_l2,o_linf,o_grad_l2,o_grad_linf\n");
    println!("      dt | comp |     L2      Linf    grad-L2  grad-Linf |  orders (L2, Linf, gL2, gLinf)");
    for row in &study.rows {
        for c in 0..2 {
            let e = &row.err[c];
            let o = row.order[c];
            print!(
                "{:8.4} | phi{} | {:9.3e} {:9.3e} {:9.3e} {:9.3e} |",
                row.dt,
                c + 1,
                e.l2,
                e.linf,
                e.grad_l2,
                e.grad_linf
            );
            match o {
                Some(o) => println!("  {:.3} {:.3} {:.3} {:.3}", o.l2, o.linf, o.grad_l2, o.grad_linf),
                None => println!("  -"),
            }
            csv.push_str(&format!(
                "{},{},{:e},{:e},{:e},{:e},{},{},{},{}\n",
                row.dt,
                c + 1,
                e.l2,
                e.linf,
                e.grad_l2,
                e.grad_linf,
                o.map(|o| o.l2.to_string()).unwrap_or_default(),
                o.map(|o| o.linf.to_string()).unwrap_or_default(),
                o.map(|o| o.grad_l2.to_string()).unwrap_or_default(),
                o.map(|o| o.grad_linf.to_string()).unwrap_or_default(),
            ));
        }
    }
    std::fs::write(cfg.out_dir.join("convergence.csv"), csv)?;
    for (dt, err) in &study.failures {
        eprintln!("run at dt = {dt} failed: {err}");
    }
    Ok(if study.failures.is_empty() { 0 } else { 3 })
}

fn gcl_check(mesh_path: Option<PathBuf>, trials: usize, h: f64) -> Result<i32> {
    let mesh = match mesh_path {
        Some(p) => read_mesh(&p, Vec::new()).with_context(|| format!("reading {p:?}"))?,
        None => generate_rectangle_mesh((0.0, 2.0, 0.0, 1.0), h, 2, SideMarkers::default())?,
    };
    let area = mesh.polygon_area();
    let rule = quad_rule(3 * mesh.order + 2)?;
    let bound = 1e-12 * area;
    let mut rng = Lcg::new(0x5eed);
    let mut boundary_point = vec![false; mesh.n_grid_points()];
    for e in &mesh.edges {
        if e.marker.is_some() {
            boundary_point[e.v[0]] = true;
            boundary_point[e.v[1]] = true;
            for &n in &e.nodes {
                boundary_point[n] = true;
            }
        }
    }
    let hmin = mesh
        .edges
        .iter()
        .map(|e| (mesh.grid_points[e.v[0]] - mesh.grid_points[e.v[1]]).norm())
        .fold(f64::MAX, f64::min);
    let mut max_resid = 0.0f64;
    for _ in 0..trials {
        let mut new = mesh.grid_points.clone();
        for v in 0..mesh.vertices.len() {
            if !boundary_point[v] {
                new[v] += 0.3 * hmin * Vec2::new(rng.next(), rng.next());
            }
        }
        for e in &mesh.edges {
            if let Some(&n) = e.nodes.first() {
                if !boundary_point[n] {
                    new[n] = Point2::from((new[e.v[0]].coords + new[e.v[1]].coords) / 2.0);
                }
            }
        }
        let frame = build_frame(&mesh, mesh.grid_points.clone(), new, 0.1)?;
        let f: Vec<f64> = (0..mesh.n_grid_points()).map(|_| rng.next()).collect();
        let u: Vec<Vec2> =
            (0..mesh.n_grid_points()).map(|_| Vec2::new(rng.next(), rng.next())).collect();
        max_resid = max_resid.max(gcl_residual(&mesh, &frame, &f, &rule));
        max_resid = max_resid.max(gcl_residual_squared(&mesh, &frame, &u, &rule));
    }
    println!(
        "gcl-check: {trials} random frames on {} triangles: max residual {max_resid:.3e} (bound {bound:.3e})",
        mesh.n_triangles()
    );
    Ok(if max_resid <= bound { 0 } else { 1 })
}

fn stability_check(cfg: &RunConfig, steps: usize, amplitude: f64) -> Result<i32> {
    let mut cfg = cfg.clone();
    cfg.outflow = false;
    cfg.inflow = "none".into();
    cfg.monitor_stability = true;
    let (mut sim, _, _) = cfg.build_simulation()?;
    sim.set_initial_solid_velocity(&|z| Vec2::new(amplitude * (z.y - floor_of(z)), 0.0));
    let mut max_rel = f64::MIN;
    let mut violations = 0;
    for _ in 0..steps {
        let r = sim.step()?;
        let e0 = sim.ledger.rows[0].total_energy().max(1e-30);
        max_rel = max_rel.max(r.stability_residual / e0);
        if r.stability_violation {
            violations += 1;
        }
    }
    println!(
        "stability-check: {steps} steps, max residual / E(0) = {max_rel:+.3e} (slack {}), {violations} violations",
        cfg.slack_factor
    );
    Ok(if violations == 0 { 0 } else { 1 })
}

/// The solid floor height of the packaged cases (velocity perturbations
/// vanish there so the fixed-boundary hypothesis holds).
fn floor_of(z: Point2) -> f64 {
    // case I floor is y = -0.5, box fixture floor is y = 0
    if z.y < 0.0 {
        -0.5
    } else {
        0.0
    }
}

fn info(cfg: &RunConfig) -> Result<i32> {
    let geo = cfg.geometry()?;
    println!("# resolved configuration");
    print!("{}", cfg.serialize());
    println!("# meshes");
    println!(
        "fluid: {} vertices, {} triangles, {} grid points, {} boundary edges",
        geo.fluid.vertices.len(),
        geo.fluid.n_triangles(),
        geo.fluid.n_grid_points(),
        geo.fluid.boundary_edges.len()
    );
    print_h_range("fluid", &geo.fluid);
    if geo.solid.n_triangles() > 0 {
        println!(
            "solid: {} vertices, {} triangles, {} grid points, {} boundary edges",
            geo.solid.vertices.len(),
            geo.solid.n_triangles(),
            geo.solid.n_grid_points(),
            geo.solid.boundary_edges.len()
        );
        print_h_range("solid", &geo.solid);
        println!("interface grid points: {}", geo.pairs.len());
    }
    Ok(0)
}

fn print_h_range(label: &str, mesh: &Mesh) {
    let (mut hmin, mut hmax) = (f64::MAX, 0.0f64);
    for e in &mesh.edges {
        let l = (mesh.vertices[e.v[0]] - mesh.vertices[e.v[1]]).norm();
        hmin = hmin.min(l);
        hmax = hmax.max(l);
    }
    println!("{label}: h_min = {hmin:.4}, h_max = {hmax:.4}");
}

/// Small deterministic generator for the gcl-check driver.
struct Lcg(u64);

impl Lcg {
    fn new(seed: u64) -> Lcg {
        Lcg(seed.max(1))
    }
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }
}

impl RunConfig {
    fn case_name(&self) -> &'static str {
        match self.case {
            config::CaseId::I => "I",
            config::CaseId::II => "II",
            config::CaseId::Box => "box",
            config::CaseId::Custom => "custom",
        }
    }
}
