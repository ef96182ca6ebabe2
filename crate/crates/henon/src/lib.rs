//! Numerical machinery for the mixed local-nonlocal Henon equation
//!
//!   L_{s,p,gamma} u + |x|^beta |u|^{p-2} u = |x|^alpha |u|^{q-2} u   in R^N,
//!
//! restricted to radial profiles on a truncated domain, where
//! L_{s,p,gamma} = gamma (-Delta)_p + (1-gamma) (-Delta)_p^s.
//!
//! The library provides:
//! - radial grids, quadrature and weighted norms ([`radial`]),
//! - angular-reduced Gagliardo seminorm assembly with a Monte Carlo
//!   oracle and a persistent kernel cache ([`kernel`]),
//! - the energy functional, its discrete gradient and parameter
//!   admissibility classification ([`functional`]),
//! - Nehari-manifold ground-state computation ([`solver`]),
//! - numerical checkers for decay, interpolation, compactness,
//!   De Giorgi iteration, scaling and Pohozaev sign conditions
//!   ([`verify`]),
//! - the `henon` command line interface ([`cli`]).

pub mod cli;
pub mod error;
pub mod functional;
pub mod gauss;
pub mod kernel;
pub mod par;
pub mod radial;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use functional::{AdmissibilityReport, EnergyBreakdown, Params, Verdict};
pub use kernel::KernelMatrix;
pub use radial::{RadialFunction, RadialGrid};
pub use solver::{SolveReport, SolverConfig};
