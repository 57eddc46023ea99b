//! Run outputs: CSV time series, legacy-VTK snapshots, and the manifest.

use alefsi::observables::{displacement_at, lift_drag, TractionProbe};
use alefsi::stepper::{Simulation, StepReport};
use alefsi::{Point2, Vec2};
use anyhow::{Context, Result};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub struct OutputWriters {
    pub dir: PathBuf,
    ledger: BufWriter<File>,
    forces: Option<BufWriter<File>>,
    probe: TractionProbe,
    tail: Point2,
    tail_location: Option<(usize, [f64; 2])>,
    snapshot_every: usize,
    snapshots_written: usize,
}

impl OutputWriters {
    pub fn create(
        dir: &Path,
        manifest: &str,
        probe: TractionProbe,
        tail: Point2,
        forces: bool,
        snapshot_every: usize,
        sim: &Simulation,
    ) -> Result<OutputWriters> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {dir:?}"))?;
        std::fs::write(dir.join("manifest.cfg"), manifest)?;
        let mut ledger = BufWriter::new(File::create(dir.join("ledger.csv"))?);
        writeln!(ledger, "step,t,E_kin_f,E_kin_s,E_strain,D_visc,power,stab_residual")?;
        let forces = if forces && !probe.edges.is_empty() {
            let mut f = BufWriter::new(File::create(dir.join("forces.csv"))?);
            writeln!(f, "t,drag,lift,ux_tail,uy_tail")?;
            Some(f)
        } else {
            None
        };
        let tail_location = alefsi::observables::locate_point(&sim.solid, tail).ok();
        Ok(OutputWriters {
            dir: dir.to_path_buf(),
            ledger,
            forces,
            probe,
            tail,
            tail_location,
            snapshot_every,
            snapshots_written: 0,
        })
    }

    /// Write the ledger row for the current last entry, forces and
    /// snapshots as configured.
    pub fn record(&mut self, sim: &Simulation, report: &StepReport) -> Result<()> {
        let row = sim.ledger.rows.last().expect("ledger row");
        writeln!(
            self.ledger,
            "{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            row.step,
            row.t,
            row.e_kin_f,
            row.e_kin_s,
            row.e_strain,
            row.d_visc,
            row.power,
            row.stab_residual.unwrap_or(f64::NAN)
        )?;
        if let Some(f) = &mut self.forces {
            let (drag, lift) =
                lift_drag(&sim.fluid, &sim.dof, &sim.state, (sim.params.rho_f, sim.params.nu_f), &self.probe)?;
            let d = match self.tail_location {
                Some(loc) => displacement_at(&sim.solid, &sim.state.phi, loc, self.tail),
                None => Vec2::zeros(),
            };
            writeln!(f, "{},{:.10e},{:.10e},{:.10e},{:.10e}", row.t, drag, lift, d.x, d.y)?;
        }
        if self.snapshot_every > 0 && report.step % self.snapshot_every == 0 {
            self.write_snapshot(sim)?;
        }
        if report.step % 50 == 0 {
            self.flush()?;
        }
        Ok(())
    }

    pub fn write_snapshot(&mut self, sim: &Simulation) -> Result<()> {
        let k = self.snapshots_written;
        write_fluid_vtk(&self.dir.join(format!("fluid_{k:04}.vtk")), sim)?;
        if sim.solid.n_triangles() > 0 {
            write_solid_vtk(&self.dir.join(format!("solid_{k:04}.vtk")), sim)?;
        }
        self.snapshots_written += 1;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.ledger.flush()?;
        if let Some(f) = &mut self.forces {
            f.flush()?;
        }
        Ok(())
    }
}

/// Split each order-2 triangle into four linear cells on its six nodes.
fn subcells(nodes: &[usize]) -> [[usize; 3]; 4] {
    let (v0, v1, v2, e0, e1, e2) = (nodes[0], nodes[1], nodes[2], nodes[3], nodes[4], nodes[5]);
    [[v0, e0, e2], [e0, v1, e1], [e2, e1, v2], [e0, e1, e2]]
}

fn write_fluid_vtk(path: &Path, sim: &Simulation) -> Result<()> {
    let mesh = &sim.fluid;
    let pts = &sim.state.fluid_points;
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "# vtk DataFile Version 3.0")?;
    writeln!(f, "fluid state t = {}", sim.state.t)?;
    writeln!(f, "ASCII")?;
    writeln!(f, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(f, "POINTS {} double", pts.len())?;
    for p in pts {
        writeln!(f, "{:.9e} {:.9e} 0.0", p.x, p.y)?;
    }
    let nt = mesh.n_triangles();
    writeln!(f, "CELLS {} {}", 4 * nt, 4 * nt * 4)?;
    for j in 0..nt {
        for c in subcells(mesh.tri_nodes(j)) {
            writeln!(f, "3 {} {} {}", c[0], c[1], c[2])?;
        }
    }
    writeln!(f, "CELL_TYPES {}", 4 * nt)?;
    for _ in 0..4 * nt {
        writeln!(f, "5")?;
    }
    writeln!(f, "POINT_DATA {}", pts.len())?;
    writeln!(f, "VECTORS velocity double")?;
    for g in 0..pts.len() {
        let u = sim.state.u_at(&sim.dof, g);
        writeln!(f, "{:.9e} {:.9e} 0.0", u.x, u.y)?;
    }
    writeln!(f, "SCALARS pressure double 1")?;
    writeln!(f, "LOOKUP_TABLE default")?;
    // P1 pressure: vertex values, edge nodes take the endpoint mean
    let nv = mesh.vertices.len();
    let mut pval = vec![0.0; pts.len()];
    pval[..nv].copy_from_slice(&sim.state.pressure[..nv]);
    for e in &mesh.edges {
        if let Some(&n) = e.nodes.first() {
            pval[n] = 0.5 * (sim.state.pressure[e.v[0]] + sim.state.pressure[e.v[1]]);
        }
    }
    for v in &pval {
        writeln!(f, "{v:.9e}")?;
    }
    Ok(())
}

fn write_solid_vtk(path: &Path, sim: &Simulation) -> Result<()> {
    let mesh = &sim.solid;
    let pts = &sim.state.phi;
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "# vtk DataFile Version 3.0")?;
    writeln!(f, "solid state t = {}", sim.state.t)?;
    writeln!(f, "ASCII")?;
    writeln!(f, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(f, "POINTS {} double", pts.len())?;
    for p in pts {
        writeln!(f, "{:.9e} {:.9e} 0.0", p.x, p.y)?;
    }
    let nt = mesh.n_triangles();
    writeln!(f, "CELLS {} {}", 4 * nt, 4 * nt * 4)?;
    for j in 0..nt {
        for c in subcells(mesh.tri_nodes(j)) {
            writeln!(f, "3 {} {} {}", c[0], c[1], c[2])?;
        }
    }
    writeln!(f, "CELL_TYPES {}", 4 * nt)?;
    for _ in 0..4 * nt {
        writeln!(f, "5")?;
    }
    writeln!(f, "POINT_DATA {}", pts.len())?;
    writeln!(f, "VECTORS velocity double")?;
    for g in 0..pts.len() {
        let v = sim.state.v_at(&sim.dof, g);
        writeln!(f, "{:.9e} {:.9e} 0.0", v.x, v.y)?;
    }
    Ok(())
}
