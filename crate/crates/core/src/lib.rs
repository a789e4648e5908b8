//! Load optimization for the p-Laplacian membrane problem
//! `-Δ_p u + |u|^{p-2} u = 0` in a planar domain with Neumann load `f` on the
//! boundary, maximizing the compliance `J(f) = ∫_{∂Ω} f u`.
//!
//! The crate covers meshing ([`mesh`]), the nonlinear state solver
//! ([`fem`]), optimization over the three load classes ([`optimize`]),
//! tangential shape derivatives of arc regions ([`shape`]), a Fourier–Bessel
//! oracle for `p = 2` on the unit disk ([`oracle`]), and the command line
//! workflows with their file formats ([`cli`], [`io`]).

pub mod cli;
pub mod error;
pub mod fem;
pub mod io;
pub mod mesh;
pub mod optimize;
pub mod oracle;
pub mod region;
pub mod shape;
pub mod sparse;

pub use error::{Error, Result};
pub use fem::{BoundaryLoad, FemSpace, SolverConfig, StateSolution};
pub use mesh::{build_mesh, refine_uniform, DomainKind, DomainSpec, Mesh};
pub use region::{arc_region, region_measure, Arc, BoundaryRegion};
