//! Lattice fermions in a uniform magnetic field on finite boxes.
//!
//! Gibbs states are computed either by exact diagonalization in particle
//! number sectors ([`fock`]) or, for quadratic Hamiltonians, from the
//! one-body Fermi-Dirac matrix ([`free`]). On top of that sit bond currents
//! through dual edges ([`currents`]) and the thermodynamic comparisons
//! between magnetization, edge currents and pressures ([`thermo`]).

// Link the BLAS/LAPACK backend.
extern crate blas_src;
extern crate openblas_src;

pub mod cache;
pub mod config;
pub mod currents;
pub mod engine;
pub mod error;
pub mod fock;
pub mod free;
pub mod geometry;
pub mod linalg;
pub mod model;
pub mod report;
pub mod thermo;

pub use engine::{solve, solve_cached, EngineKind, SolveOptions, Solved};
pub use error::{Error, Result};
pub use fock::{EdConfig, ThermoParams};
pub use geometry::{DualEdge, Site, SiteSet};
pub use model::ModelSpec;
