//! 2D isoparametric finite-element solver for incompressible Navier-Stokes
//! flow coupled with an elastic solid.
//!
//! The fluid is discretized with Taylor-Hood `P_m/P_{m-1}` elements on a
//! moving (ALE) mesh, the solid with `P_m` Lagrangian elements on a fixed
//! reference mesh. Fluid and solid velocities share degrees of freedom on
//! the interface, the interface is advanced explicitly from the previous
//! solid velocity, and each time step solves a single sparse linear system
//! (or a short Newton loop for the fully implicit solid update).
//!
//! Crate layout:
//! - [`ref_elem`]: reference-triangle Lagrange bases and quadrature rules
//! - [`mesh`]: triangle meshes with order-`m` grid points, generators, I/O
//! - [`materials`]: linear elastic and Saint Venant-Kirchhoff solid laws
//! - [`ale`]: mesh motion, ALE frames, mesh velocity, GCL checks
//! - [`dof`]: DOF management with interface identification
//! - [`assembly`]: per-step system assembly and the sparse solve
//! - [`stepper`]: the time loop, energy ledger and stability monitor
//! - [`observables`]: lift/drag, point displacement traces, field norms
//! - [`cases`]: benchmark geometry builders and parameter presets

pub mod ale;
pub mod assembly;
pub mod cases;
pub mod dof;
pub mod materials;
pub mod mesh;
pub mod observables;
pub mod ref_elem;
pub mod stepper;

mod error;

pub use error::Error;

/// 2D point in physical or reference coordinates.
pub type Point2 = nalgebra::Point2<f64>;
/// 2D vector.
pub type Vec2 = nalgebra::Vector2<f64>;
/// 2x2 matrix (Jacobians, deformation gradients, stresses).
pub type Mat2 = nalgebra::Matrix2<f64>;

pub use ale::{advance_interface, build_frame, mesh_velocity, AleFrame, MeshMotionOperator};
pub use assembly::{solve_linear, FsiParams, SolidUpdate, SystemState};
pub use dof::{build_dof_map, DofMap};
pub use materials::{MaterialKind, MaterialModel};
pub use mesh::{BoundaryMarker, Mesh};
pub use stepper::{EnergyLedger, Simulation, StepReport};
