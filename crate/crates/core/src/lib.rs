//! Dense optical flow for scalar image sequences on an evolving surface
//! given as the graph of a height function over a planar grid.
//!
//! The estimated flow minimises a Horn–Schunck type energy whose smoothness
//! term is the covariant derivative of the tangential field, so the
//! regulariser respects the surface geometry. In the flat case everything
//! reduces to classical Horn–Schunck.

pub mod error;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod model;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{SurfaceGeometry, Vec3, Vec3Field};
pub use grid::{GridSpec, Hessian, ScalarField, VectorField};
pub use model::{CovariantDerivative, FlowProblem};
pub use solver::{Method, SolverConfig, SolverReport};
pub use synth::{SyntheticScene, SyntheticSequence};
