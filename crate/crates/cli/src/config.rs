//! Key-value run configuration.
//!
//! The format is one `key = value` pair per line, `#` comments. `case`
//! selects a preset (I, II, box, custom) whose geometry and physical
//! parameters can be overridden key by key. `load` then `serialize` then
//! `load` is idempotent.

use alefsi::assembly::{FsiParams, SolidUpdate};
use alefsi::cases::{self, CaseGeometry};
use alefsi::materials::{MaterialKind, MaterialModel};
use alefsi::mesh::{read_mesh, BoundaryMarker, CircleBoundary, Mesh};
use alefsi::observables::TractionProbe;
use alefsi::stepper::{Inflow, MonitorConfig, Simulation};
use alefsi::{Point2, Vec2};
use anyhow::{anyhow, bail, Context, Result};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseId {
    I,
    II,
    Box,
    Custom,
}

impl CaseId {
    fn parse(s: &str) -> Result<CaseId> {
        match s {
            "I" | "i" | "1" => Ok(CaseId::I),
            "II" | "ii" | "2" => Ok(CaseId::II),
            "box" => Ok(CaseId::Box),
            "custom" => Ok(CaseId::Custom),
            other => bail!("unknown case {other:?} (expected I, II, box or custom)"),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            CaseId::I => "I",
            CaseId::II => "II",
            CaseId::Box => "box",
            CaseId::Custom => "custom",
        }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub case: CaseId,
    pub m: usize,
    pub h: f64,
    pub refine: usize,
    pub dt: f64,
    pub t_end: f64,
    pub outflow: bool,
    pub solid_update: String,
    pub implicit_tol: f64,
    pub implicit_max_iter: usize,
    pub rho_f: f64,
    pub nu_f: f64,
    pub rho_s: f64,
    pub mu_s: f64,
    pub lambda_s: f64,
    pub solid_kind: String,
    pub g_f: Vec2,
    pub g_s: Vec2,
    pub inflow: String,
    pub quad_degree: usize,
    pub monitor_stability: bool,
    pub abort_on_violation: bool,
    pub slack_factor: f64,
    pub out_dir: PathBuf,
    pub snapshot_every: usize,
    pub forces: bool,
    pub mesh: Option<PathBuf>,
    pub curves: Vec<CircleBoundary>,
}

impl RunConfig {
    fn preset(case: CaseId) -> RunConfig {
        let base = RunConfig {
            case,
            m: 2,
            h: 0.125,
            refine: 1,
            dt: 0.05,
            t_end: 10.0,
            outflow: true,
            solid_update: "semi_implicit".into(),
            implicit_tol: 1e-10,
            implicit_max_iter: 30,
            rho_f: 1.0,
            nu_f: 1.0,
            rho_s: 1.0,
            mu_s: 50.0,
            lambda_s: 500.0,
            solid_kind: "linear".into(),
            g_f: Vec2::zeros(),
            g_s: Vec2::zeros(),
            inflow: "case_i".into(),
            quad_degree: 0,
            monitor_stability: false,
            abort_on_violation: false,
            slack_factor: 1e-8,
            out_dir: PathBuf::from("out"),
            snapshot_every: 0,
            forces: true,
            mesh: None,
            curves: Vec::new(),
        };
        match case {
            CaseId::I => base,
            CaseId::II => RunConfig {
                nu_f: 0.001,
                mu_s: 2000.0,
                lambda_s: 8000.0,
                solid_kind: "svk".into(),
                g_f: Vec2::new(0.0, -2.0),
                g_s: Vec2::new(0.0, -2.0),
                inflow: "case_ii".into(),
                dt: 0.1,
                t_end: 20.0,
                ..base
            },
            CaseId::Box => RunConfig {
                outflow: false,
                inflow: "none".into(),
                monitor_stability: true,
                forces: false,
                ..base
            },
            CaseId::Custom => RunConfig { inflow: "none".into(), forces: false, ..base },
        }
    }

    fn material(&self) -> Result<MaterialModel> {
        let kind = match self.solid_kind.as_str() {
            "linear" => MaterialKind::LinearElastic,
            "svk" => MaterialKind::SaintVenantKirchhoff,
            other => bail!("unknown solid_kind {other:?} (expected linear or svk)"),
        };
        if !(self.mu_s > 0.0 && self.lambda_s >= 0.0 && self.rho_s > 0.0) {
            bail!("material moduli must satisfy mu_s > 0, lambda_s >= 0, rho_s > 0");
        }
        Ok(MaterialModel::new(kind, self.mu_s, self.lambda_s, self.rho_s))
    }

    pub fn params(&self) -> Result<FsiParams> {
        let solid_update = match self.solid_update.as_str() {
            "semi_implicit" => SolidUpdate::SemiImplicit,
            "implicit" => SolidUpdate::Implicit {
                tol: self.implicit_tol,
                max_iter: self.implicit_max_iter,
            },
            other => bail!("unknown solid_update {other:?}"),
        };
        Ok(FsiParams {
            rho_f: self.rho_f,
            nu_f: self.nu_f,
            g_f: self.g_f,
            g_s: self.g_s,
            sigma_b_s: Vec2::zeros(),
            material: self.material()?,
            dt: self.dt,
            quad_degree: self.quad_degree,
            solid_update,
        })
    }

    pub fn inflow(&self) -> Result<Inflow> {
        Ok(match self.inflow.as_str() {
            "none" => Inflow::None,
            "case_i" => Inflow::CaseI,
            "case_ii" => Inflow::CaseII,
            other => {
                let parts: Vec<&str> = other.split_whitespace().collect();
                if parts.len() == 3 && parts[0] == "uniform" {
                    Inflow::Uniform { ux: parts[1].parse()?, uy: parts[2].parse()? }
                } else {
                    bail!("unknown inflow {other:?} (none, case_i, case_ii, `uniform ux uy`)")
                }
            }
        })
    }

    pub fn monitor(&self) -> MonitorConfig {
        MonitorConfig {
            hypotheses_hold: self.monitor_stability,
            slack_factor: self.slack_factor,
            abort_on_violation: self.abort_on_violation,
        }
    }

    /// Build the case geometry (respecting a `mesh` file override for
    /// fluid-only custom runs).
    pub fn geometry(&self) -> Result<CaseGeometry> {
        if let Some(path) = &self.mesh {
            let fluid = read_mesh(path, self.curves.clone())
                .with_context(|| format!("reading mesh {path:?}"))?;
            return Ok(CaseGeometry {
                fluid,
                solid: Mesh::empty(self.m),
                pairs: Vec::new(),
                probe_edges: Vec::new(),
                tail_point: Point2::origin(),
            });
        }
        match self.case {
            CaseId::I => Ok(cases::build_case_i(self.h, self.m, self.outflow)?),
            CaseId::II => Ok(cases::build_case_ii(self.refine, self.m)?),
            CaseId::Box => Ok(cases::build_box_case(self.h, self.m)?),
            CaseId::Custom => bail!("case = custom requires a mesh = <path> entry"),
        }
    }

    pub fn build_simulation(&self) -> Result<(Simulation, TractionProbe, Point2)> {
        let geo = self.geometry()?;
        let probe = TractionProbe { edges: geo.probe_edges.clone(), scale: 1000.0 };
        let tail = geo.tail_point;
        let sim = Simulation::new(
            geo.fluid,
            geo.solid,
            &geo.pairs,
            self.params()?,
            self.inflow()?,
            self.monitor(),
        )?;
        Ok((sim, probe, tail))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            bail!("dt must be positive, got {}", self.dt);
        }
        if self.t_end < 0.0 {
            bail!("t_end must be nonnegative, got {}", self.t_end);
        }
        if !(self.h > 0.0) {
            bail!("h must be positive, got {}", self.h);
        }
        if self.m != 2 {
            bail!("only m = 2 is supported by the coupled solver, got {}", self.m);
        }
        if !(self.rho_f > 0.0 && self.nu_f > 0.0) {
            bail!("rho_f and nu_f must be positive");
        }
        self.material()?;
        self.inflow()?;
        self.params()?;
        Ok(())
    }

    /// Canonical serialization; `load_config_text(serialize(c))` equals `c`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        kv("case", self.case.name().into());
        kv("m", self.m.to_string());
        kv("h", format!("{:?}", self.h));
        kv("refine", self.refine.to_string());
        kv("dt", format!("{:?}", self.dt));
        kv("t_end", format!("{:?}", self.t_end));
        kv("outflow", self.outflow.to_string());
        kv("solid_update", self.solid_update.clone());
        kv("implicit_tol", format!("{:?}", self.implicit_tol));
        kv("implicit_max_iter", self.implicit_max_iter.to_string());
        kv("rho_f", format!("{:?}", self.rho_f));
        kv("nu_f", format!("{:?}", self.nu_f));
        kv("rho_s", format!("{:?}", self.rho_s));
        kv("mu_s", format!("{:?}", self.mu_s));
        kv("lambda_s", format!("{:?}", self.lambda_s));
        kv("solid_kind", self.solid_kind.clone());
        kv("g_f", format!("{:?} {:?}", self.g_f.x, self.g_f.y));
        kv("g_s", format!("{:?} {:?}", self.g_s.x, self.g_s.y));
        kv("inflow", self.inflow.clone());
        kv("quad_degree", self.quad_degree.to_string());
        kv("monitor_stability", self.monitor_stability.to_string());
        kv("abort_on_violation", self.abort_on_violation.to_string());
        kv("slack_factor", format!("{:?}", self.slack_factor));
        kv("out_dir", self.out_dir.display().to_string());
        kv("snapshot_every", self.snapshot_every.to_string());
        kv("forces", self.forces.to_string());
        if let Some(m) = &self.mesh {
            kv("mesh", m.display().to_string());
        }
        for c in &self.curves {
            kv(
                "curve",
                format!(
                    "circle {:?} {:?} {:?} {}",
                    c.center.x,
                    c.center.y,
                    c.radius,
                    c.marker.code()
                ),
            );
        }
        s
    }
}

fn parse_bool(v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => bail!("expected a boolean, got {other:?}"),
    }
}

fn parse_vec2(v: &str) -> Result<Vec2> {
    let parts: Vec<&str> = v.split_whitespace().collect();
    if parts.len() != 2 {
        bail!("expected two numbers, got {v:?}");
    }
    Ok(Vec2::new(parts[0].parse()?, parts[1].parse()?))
}

fn parse_curve(v: &str) -> Result<CircleBoundary> {
    let parts: Vec<&str> = v.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != "circle" {
        bail!("curve directive must be `circle cx cy r marker`, got {v:?}");
    }
    let marker = BoundaryMarker::from_code(parts[4].parse()?)
        .ok_or_else(|| anyhow!("unknown marker code {}", parts[4]))?;
    Ok(CircleBoundary {
        center: Point2::new(parts[1].parse()?, parts[2].parse()?),
        radius: parts[3].parse()?,
        marker,
    })
}

/// Parse a config text. The `case` key (default I) selects the preset;
/// every other key overrides it. Unknown keys are errors.
pub fn load_config_text(text: &str) -> Result<RunConfig> {
    let mut entries: Vec<(String, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected `key = value`, got {line:?}", i + 1))?;
        entries.push((k.trim().to_string(), v.trim().to_string()));
    }
    let mut seen = BTreeMap::new();
    for (k, _) in &entries {
        if k != "curve" && seen.insert(k.clone(), ()).is_some() {
            bail!("duplicate key {k:?}");
        }
    }
    let case = entries
        .iter()
        .find(|(k, _)| k == "case")
        .map(|(_, v)| CaseId::parse(v))
        .transpose()?
        .unwrap_or(CaseId::I);
    let mut cfg = RunConfig::preset(case);
    for (k, v) in &entries {
        match k.as_str() {
            "case" => {}
            "m" => cfg.m = v.parse()?,
            "h" => cfg.h = v.parse()?,
            "refine" => cfg.refine = v.parse()?,
            "dt" => cfg.dt = v.parse()?,
            "t_end" => cfg.t_end = v.parse()?,
            "outflow" => cfg.outflow = parse_bool(v)?,
            "solid_update" => cfg.solid_update = v.clone(),
            "implicit_tol" => cfg.implicit_tol = v.parse()?,
            "implicit_max_iter" => cfg.implicit_max_iter = v.parse()?,
            "rho_f" => cfg.rho_f = v.parse()?,
            "nu_f" => cfg.nu_f = v.parse()?,
            "rho_s" => cfg.rho_s = v.parse()?,
            "mu_s" => cfg.mu_s = v.parse()?,
            "lambda_s" => cfg.lambda_s = v.parse()?,
            "solid_kind" => cfg.solid_kind = v.clone(),
            "g_f" => cfg.g_f = parse_vec2(v)?,
            "g_s" => cfg.g_s = parse_vec2(v)?,
            "inflow" => cfg.inflow = v.clone(),
            "quad_degree" => cfg.quad_degree = v.parse()?,
            "monitor_stability" => cfg.monitor_stability = parse_bool(v)?,
            "abort_on_violation" => cfg.abort_on_violation = parse_bool(v)?,
            "slack_factor" => cfg.slack_factor = v.parse()?,
            "out_dir" => cfg.out_dir = PathBuf::from(v),
            "snapshot_every" => cfg.snapshot_every = v.parse()?,
            "forces" => cfg.forces = parse_bool(v)?,
            "mesh" => cfg.mesh = Some(PathBuf::from(v)),
            "curve" => cfg.curves.push(parse_curve(v)?),
            other => bail!("unknown key {other:?}"),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading config {path:?}"))?;
    load_config_text(&text).with_context(|| format!("parsing config {path:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_presets_fill_table_values() {
        let c = load_config_text("case = I\n").unwrap();
        assert_eq!(
            (c.rho_f, c.nu_f, c.rho_s, c.mu_s, c.lambda_s),
            (1.0, 1.0, 1.0, 50.0, 500.0)
        );
        assert_eq!(c.solid_kind, "linear");
        assert_eq!(c.g_f, Vec2::zeros());

        let c = load_config_text("case = II\n").unwrap();
        assert_eq!((c.nu_f, c.mu_s, c.lambda_s), (0.001, 2000.0, 8000.0));
        assert_eq!(c.solid_kind, "svk");
        assert_eq!(c.g_f, Vec2::new(0.0, -2.0));
    }

    #[test]
    fn invalid_dt_rejected() {
        assert!(load_config_text("case = I\ndt = -1\n").is_err());
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(load_config_text("case = I\nbogus = 3\n").is_err());
    }

    #[test]
    fn round_trip_is_idempotent() {
        let a = load_config_text("case = II\ndt = 0.025\nmu_s = 1234.5\nout_dir = road/to\n")
            .unwrap();
        let text = a.serialize();
        let b = load_config_text(&text).unwrap();
        assert_eq!(text, b.serialize());
    }
}
