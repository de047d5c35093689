//! Quasi-random discrete ordinates solver for the steady monochromatic
//! radiative transfer equation on 2D rectangular domains with linear
//! anisotropic scattering.
//!
//! The method replaces a fixed angular quadrature with a continuing
//! low-discrepancy sequence of directions: every source-iteration step
//! consumes fresh points of the same stream, so angular resolution grows
//! with the iteration instead of being fixed up front. Per direction, the
//! transport equation is discretized with streamline-upwind Petrov-Galerkin
//! (SUPG) bilinear finite elements and weakly imposed inflow boundary
//! conditions.
//!
//! The crate is organized bottom-up:
//!
//! - [`directions`]: reverse Halton points, octant directions, quadruples.
//! - [`mesh`]: structured rectangular meshes and nodal fields.
//! - [`linalg`]: sparse matrices, banded LU, reference GMRES.
//! - [`transport`]: per-direction SUPG assembly and solves.
//! - [`problems`]: benchmark problems with manufactured exact solutions.
//! - [`driver`]: the nested source iteration over the direction stream.
//! - [`config`]: key-value run configuration files.
//! - [`commands`]: the operations behind the command-line interface.
//!
//! The `examples/` directory exercises each capability end to end; start
//! with `run_problem1` for a complete solve and `refinement_table` for a
//! convergence study.

pub mod commands;
pub mod config;
pub mod directions;
pub mod driver;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod problems;
pub mod transport;

pub use directions::{direction_stream, DirectionStream, SequenceKind};
pub use driver::{source_iteration, QrdomSolution, SolverConfig};
pub use error::{Error, Result};
pub use mesh::{NodalField, StructuredMesh};
pub use problems::{problem1, problem2, ProblemSpec};
pub use transport::{Medium, PhaseCoefficients, TransportAssembler};
