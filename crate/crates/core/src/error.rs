use thiserror::Error;

/// Errors produced while building meshes, assembling or solving.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh parse error at line {line}: {msg}")]
    MeshParse { line: usize, msg: String },

    #[error("triangle {tri} is inverted (signed area {area:.3e})")]
    InvertedTriangle { tri: usize, area: f64 },

    #[error("non-positive isoparametric Jacobian on triangle {tri} (det {det:.3e})")]
    NonPositiveJacobian { tri: usize, det: f64 },

    #[error("inconsistent mesh connectivity: {0}")]
    Connectivity(String),

    #[error("invalid mesh request: {0}")]
    BadMeshRequest(String),

    #[error("unsupported element order {0}")]
    UnsupportedOrder(usize),

    #[error("unsupported quadrature degree {0}")]
    UnsupportedDegree(usize),

    #[error("interface grid point {fluid_point} of the fluid mesh has no solid partner")]
    UnmatchedInterfacePoint { fluid_point: usize },

    #[error("conflicting Dirichlet values at merged node {node}: {a:?} vs {b:?}")]
    DirichletConflict { node: usize, a: [f64; 2], b: [f64; 2] },

    #[error("mesh tangling at {when}: triangle {tri} has det {det:.3e}")]
    MeshTangling { when: &'static str, tri: usize, det: f64 },

    #[error("linear solve failed: {0}")]
    SolveFailed(String),

    #[error("linear solve residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    SolveResidual { residual: f64, tol: f64 },

    #[error("Newton iteration did not converge after {iters} iterations (last update {last:.3e})")]
    NewtonDiverged { iters: usize, last: f64 },

    #[error("stability check requires the energy-inequality hypotheses (zero inflow, no traction outflow, fixed solid boundary, convex strain energy); the run is not flagged as satisfying them")]
    StabilityHypotheses,

    #[error("point ({x}, {y}) lies outside the solid mesh")]
    PointOutsideSolid { x: f64, y: f64 },

    #[error("invalid configuration: {0}")]
    BadConfig(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
