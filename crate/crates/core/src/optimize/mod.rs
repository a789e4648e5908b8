//! Maximization of `J` over the admissible load classes.
//!
//! * rearrangements of a fixed per-edge profile: best-response ascent built
//!   on sorting ([`best_rearrangement`], [`ascent_rearrangement`]);
//! * indicators of boundary sets of fixed measure: superlevel-set ascent
//!   ([`bathtub_discrete`], [`superlevel_region`], [`ascent_bathtub`]);
//! * the unit ball of `L^q(∂Ω)`: explicit maximizer from the trace extremal
//!   ([`trace_extremal`], [`lq_optimal_load`]).

mod ascent;
mod discrete;
mod lq;

use serde::{Deserialize, Serialize};

pub use ascent::{
    ascent_bathtub, ascent_rearrangement, multistart_bathtub, multistart_rearrangement, optimality_residual,
    random_regions, BathtubRun, EndpointSpread, MultistartBathtub, MultistartRearrangement, RearrangementRun,
};
pub use discrete::{bathtub_discrete, best_rearrangement, pairing_value, superlevel_region, BathtubResult};
pub use lq::{
    boundary_power_integral, lq_optimal_load, rayleigh_quotient, steklov_inverse_iteration,
    trace_exponent_warning, trace_extremal, LqExtremal, LqLoad,
};

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Relative tolerance for the uniform-partition requirement of the rearrangement class.
pub const UNIFORM_REL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdmissibleClass {
    /// Rearrangements of a per-edge profile on a uniform boundary partition.
    Rearrangement { f0: Vec<f64> },
    /// The unit ball of `L^q(∂Ω)`.
    LqBall { q: f64 },
    /// Indicators of boundary sets of measure `a`.
    SurfaceFraction { a: f64 },
}

impl AdmissibleClass {
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        match self {
            Self::Rearrangement { f0 } => {
                if !mesh.has_uniform_boundary(UNIFORM_REL_TOL) {
                    return Err(Error::ClassViolation(
                        "rearrangements need equal boundary edge lengths".into(),
                    ));
                }
                if f0.len() != mesh.boundary_edges().len() {
                    return Err(Error::Config(format!(
                        "f0 has {} values but the boundary has {} edges",
                        f0.len(),
                        mesh.boundary_edges().len()
                    )));
                }
                if f0.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                    return Err(Error::Domain("f0 must be finite and nonnegative".into()));
                }
                Ok(())
            }
            Self::LqBall { q } => {
                if *q > 1.0 && q.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config(format!("q must be in (1, ∞), got {q}")))
                }
            }
            Self::SurfaceFraction { a } => {
                if *a > 0.0 && *a < mesh.perimeter() {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "A = {a} must lie in (0, {})",
                        mesh.perimeter()
                    )))
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AscentConfig {
    pub ascent_tol: f64,
    pub max_ascent: usize,
    pub multistart: usize,
    pub seed: u64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        Self {
            ascent_tol: 1e-10,
            max_ascent: 50,
            multistart: 20,
            seed: 0,
        }
    }
}

impl AscentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ascent_tol >= 0.0) {
            return Err(Error::Config("ascent_tol must be nonnegative".into()));
        }
        if self.max_ascent == 0 || self.multistart == 0 {
            return Err(Error::Config("max_ascent and multistart must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Tolerance,
    MaxIters,
    FixedPoint,
}

/// One iterate of an ascent loop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AscentStep {
    pub iter: usize,
    #[serde(rename = "J")]
    pub j: f64,
    /// Level of the superlevel set that produced this iterate.
    pub threshold_s: Option<f64>,
    /// Boundary measure of the region, or `∫ f` for rearrangements.
    pub measure: f64,
    /// Endpoint spread for regions, relative change of `J` for rearrangements.
    pub residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AscentTrace {
    pub steps: Vec<AscentStep>,
    pub terminated: Termination,
    /// Set when a superlevel update met a constant trace.
    pub degenerate: bool,
}

impl AscentTrace {
    pub fn best_j(&self) -> f64 {
        self.steps.iter().map(|s| s.j).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Whether `J` never drops by more than `slack` between recorded steps.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.steps.windows(2).all(|w| w[1].j >= w[0].j - slack)
    }
}
