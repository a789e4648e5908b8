//! Tangential perturbations of boundary regions and the endpoint formulas
//! for the first variation of `J` and of the region measure.
//!
//! A region moves by transporting each endpoint `s_i` to `s_i + t V_i` along
//! the boundary. With `σ_i = -1` at the start of an arc and `+1` at its end,
//! `dJ/dt = p/(p-1) Σ u(s_i) σ_i V_i` and `d|D|/dt = Σ σ_i V_i`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{BoundaryLoad, FemSpace, SolverConfig, StateSolution};
use crate::mesh::{DomainKind, Mesh};
use crate::region::{Arc, BoundaryRegion};

/// Speeds of the region endpoints, in the order of [`BoundaryRegion::endpoints`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentialVelocity {
    pub speeds: Vec<f64>,
}

impl TangentialVelocity {
    pub fn new(speeds: Vec<f64>) -> Self {
        Self { speeds }
    }

    /// Every endpoint moves with unit speed counterclockwise.
    pub fn rigid(region: &BoundaryRegion) -> Self {
        Self::new(vec![1.0; region.endpoints().len()])
    }

    pub fn zero(region: &BoundaryRegion) -> Self {
        Self::new(vec![0.0; region.endpoints().len()])
    }

    fn check(&self, region: &BoundaryRegion) -> Result<()> {
        let expected = region.endpoints().len();
        if self.speeds.len() != expected {
            return Err(Error::Config(format!(
                "velocity has {} speeds but the region has {expected} endpoints",
                self.speeds.len()
            )));
        }
        if self.speeds.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("velocity speeds must be finite".into()));
        }
        Ok(())
    }
}

/// Moves each endpoint by `t V_i`. Fails if an arc or a gap would close.
pub fn perturb_region(
    region: &BoundaryRegion,
    velocity: &TangentialVelocity,
    t: f64,
) -> Result<BoundaryRegion> {
    velocity.check(region)?;
    if velocity.speeds.is_empty() || t == 0.0 {
        return Ok(region.clone());
    }
    let perimeter = region.perimeter();
    let moved: Vec<(f64, f64)> = region
        .arcs()
        .iter()
        .enumerate()
        .map(|(i, arc)| {
            (
                arc.begin + t * velocity.speeds[2 * i],
                arc.end() + t * velocity.speeds[2 * i + 1],
            )
        })
        .collect();
    let tiny = 1e-12 * perimeter;
    for (i, &(b, e)) in moved.iter().enumerate() {
        if e - b <= tiny {
            return Err(Error::PerturbationTooLarge(format!(
                "arc {i} collapses at t = {t}"
            )));
        }
        let next_begin = if i + 1 < moved.len() {
            moved[i + 1].0
        } else {
            moved[0].0 + perimeter
        };
        if next_begin - e <= tiny {
            return Err(Error::PerturbationTooLarge(format!(
                "arc {i} reaches its neighbour at t = {t}"
            )));
        }
    }
    let arcs: Vec<Arc> = moved
        .into_iter()
        .map(|(b, e)| Arc {
            begin: b,
            length: e - b,
        })
        .collect();
    BoundaryRegion::from_arcs(&arcs, perimeter)
}

/// `d|D_t|/dt = Σ σ_i V_i`.
pub fn area_derivative(region: &BoundaryRegion, velocity: &TangentialVelocity) -> Result<f64> {
    velocity.check(region)?;
    Ok(region
        .endpoints()
        .iter()
        .zip(&velocity.speeds)
        .map(|(e, v)| e.sign * v)
        .sum())
}

/// `dJ/dt = p/(p-1) Σ u(s_i) σ_i V_i`, with `u` the state for the load `χ_D`.
pub fn shape_derivative_j(
    mesh: &Mesh,
    u: &[f64],
    region: &BoundaryRegion,
    velocity: &TangentialVelocity,
    p: f64,
) -> Result<f64> {
    velocity.check(region)?;
    let perimeter = mesh.perimeter();
    if (region.perimeter() - perimeter).abs() > 1e-12 * perimeter {
        return Err(Error::Internal(format!(
            "region perimeter {} does not match the mesh boundary {perimeter}",
            region.perimeter()
        )));
    }
    if u.len() != mesh.n_vertices() {
        return Err(Error::Internal("state does not match the mesh".into()));
    }
    let sum: f64 = region
        .endpoints()
        .iter()
        .zip(&velocity.speeds)
        .map(|(e, v)| mesh.trace_at(u, e.s) * e.sign * v)
        .sum();
    Ok(p / (p - 1.0) * sum)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeEntry {
    pub t: f64,
    #[serde(rename = "fd_dJ")]
    pub fd_dj: f64,
    #[serde(rename = "formula_dJ")]
    pub formula_dj: f64,
    #[serde(rename = "fd_dA")]
    pub fd_da: f64,
    #[serde(rename = "formula_dA")]
    pub formula_da: f64,
    /// `max(|J(D_t) - J(D)|, |J(D_{-t}) - J(D)|)`.
    pub continuity_gap: f64,
    /// Both perturbed state solves converged.
    pub converged: bool,
}

impl DerivativeEntry {
    pub fn gap_j(&self) -> f64 {
        (self.fd_dj - self.formula_dj).abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub p: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub max_u: f64,
    #[serde(rename = "formula_dJ")]
    pub formula_dj: f64,
    #[serde(rename = "formula_dA")]
    pub formula_da: f64,
    pub entries: Vec<DerivativeEntry>,
    /// Least-squares slope of `log |fd_dJ - formula_dJ|` against `log t`.
    pub observed_order: Option<f64>,
}

/// Slope of the least-squares line through `(log x, log y)`, skipping zero `y`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx).powi(2))
    });
    (sxx > 0.0).then(|| sxy / sxx)
}

fn solve_region(
    space: &FemSpace,
    region: &BoundaryRegion,
    solver: &SolverConfig,
) -> Result<(StateSolution, f64)> {
    let load = BoundaryLoad::Region(region.clone());
    let sol = space.solve_state(&load, solver)?;
    let j = space.cost_j(&load, &sol.nodal_u)?;
    Ok((sol, j))
}

/// Central finite differences of `J(D_t)` and `|D_t|` on the fixed mesh,
/// compared with the endpoint formulas.
pub fn fd_check(
    space: &FemSpace,
    region: &BoundaryRegion,
    velocity: &TangentialVelocity,
    solver: &SolverConfig,
    steps: &[f64],
) -> Result<DerivativeReport> {
    solver.validate()?;
    if !matches!(space.mesh().kind(), DomainKind::Disk { .. }) {
        return Err(Error::Config(
            "shape derivatives need a smooth boundary; use a disk domain".into(),
        ));
    }
    velocity.check(region)?;
    if steps.iter().any(|t| !(*t > 0.0)) || steps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config(
            "step sizes must be positive and strictly decreasing".into(),
        ));
    }
    let p = solver.p;
    let (sol, j) = solve_region(space, region, solver)?;
    if !sol.converged {
        return Err(Error::NonConvergence(format!(
            "unperturbed state stalled at residual {:e}",
            sol.residual_norm
        )));
    }
    let formula_dj = shape_derivative_j(space.mesh(), &sol.nodal_u, region, velocity, p)?;
    let formula_da = area_derivative(region, velocity)?;

    let entries = steps
        .par_iter()
        .map(|&t| {
            let plus = perturb_region(region, velocity, t)?;
            let minus = perturb_region(region, velocity, -t)?;
            let (sp, jp) = solve_region(space, &plus, solver)?;
            let (sm, jm) = solve_region(space, &minus, solver)?;
            Ok(DerivativeEntry {
                t,
                fd_dj: (jp - jm) / (2.0 * t),
                formula_dj,
                fd_da: (plus.measure() - minus.measure()) / (2.0 * t),
                formula_da,
                continuity_gap: (jp - j).abs().max((jm - j).abs()),
                converged: sp.converged && sm.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let observed_order = log_log_slope(&entries.iter().map(|e| (e.t, e.gap_j())).collect::<Vec<_>>());
    Ok(DerivativeReport {
        p,
        j,
        max_u: sol.nodal_u.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        formula_dj,
        formula_da,
        entries,
        observed_order,
    })
}
