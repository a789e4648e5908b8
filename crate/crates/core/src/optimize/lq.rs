use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{dot, BoundaryLoad, FemSpace, SolverConfig};
use crate::mesh::Mesh;

const MAX_ITERATIONS: usize = 1000;
const QUOTIENT_TOL: f64 = 1e-10;

/// Minimizer of `(∫ |∇v|^p + |v|^p) / (∫_{∂Ω} |v|^{q'})^{p/q'}` over nodal fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LqExtremal {
    /// Nonnegative nodal field with unit boundary `q'`-norm.
    pub v: Vec<f64>,
    /// Value of the quotient at `v`.
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub q_conj: f64,
    pub iterations: usize,
    pub warning: Option<String>,
}

/// The optimal load on the unit `L^q` ball with its predicted cost and state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LqLoad {
    pub load: BoundaryLoad,
    pub predicted_j: f64,
    pub u_scale: f64,
    pub predicted_u: Vec<f64>,
    /// Boundary `L^q` norm of `v^{q'-1}` before it was rescaled to 1.
    pub norm_before_rescale: f64,
}

/// Mean of `|x|^r` over the segment from `a` to `b`.
fn segment_power_mean(a: f64, b: f64, r: f64) -> f64 {
    if a * b < 0.0 {
        let x0 = a / (a - b);
        return (x0 * a.abs().powf(r) + (1.0 - x0) * b.abs().powf(r)) / (r + 1.0);
    }
    let (lo, hi) = {
        let (x, y) = (a.abs(), b.abs());
        (x.min(y), x.max(y))
    };
    if hi == 0.0 {
        return 0.0;
    }
    if hi - lo > 1e-3 * hi {
        return (hi.powf(r + 1.0) - lo.powf(r + 1.0)) / ((r + 1.0) * (hi - lo));
    }
    // Binomial series in δ = (hi - lo) / lo; the closed form cancels here.
    let delta = (hi - lo) / lo;
    let (mut term, mut sum) = (1.0, 1.0);
    for k in 1..8 {
        term *= (r - (k - 1) as f64) / k as f64 * delta;
        sum += term / (k + 1) as f64;
    }
    lo.powf(r) * sum
}

/// `∫_{∂Ω} |v|^r` for a trace linear on each boundary edge (values at the loop vertices).
pub fn boundary_power_integral(mesh: &Mesh, trace: &[f64], r: f64) -> f64 {
    let n = trace.len();
    mesh.boundary_edges()
        .iter()
        .enumerate()
        .map(|(k, e)| e.length * segment_power_mean(trace[k], trace[(k + 1) % n], r))
        .sum()
}

/// Nodal gradient of `∫_{∂Ω} v^r` for `v ≥ 0` (Gauss–Legendre on each edge).
fn boundary_power_gradient(mesh: &Mesh, v: &[f64], r: f64) -> Vec<f64> {
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let mut grad = vec![0.0; v.len()];
    for e in mesh.boundary_edges() {
        for (x, w) in X.iter().zip(&W) {
            let t = 0.5 * (1.0 + x);
            let val = (1.0 - t) * v[e.a] + t * v[e.b];
            let weight = 0.5 * w * e.length * r * val.max(0.0).powf(r - 1.0);
            grad[e.a] += weight * (1.0 - t);
            grad[e.b] += weight * t;
        }
    }
    grad
}

/// The quotient minimized by [`trace_extremal`]; infinite for a zero trace.
pub fn rayleigh_quotient(space: &FemSpace, v: &[f64], p: f64, q: f64) -> f64 {
    let qc = q / (q - 1.0);
    let norm = boundary_power_integral(space.mesh(), &space.mesh().boundary_trace(v), qc);
    if norm <= 0.0 {
        return f64::INFINITY;
    }
    space.energy(v, p) / norm.powf(p / qc)
}

/// Warns when `q` is at or below the planar trace exponent `p / (2(p - 1))`.
pub fn trace_exponent_warning(p: f64, q: f64) -> Option<String> {
    let critical = p / (2.0 * (p - 1.0));
    (q <= critical).then(|| {
        format!("q = {q} is not above the trace exponent {critical} for p = {p}; the continuum problem may be ill-posed")
    })
}

/// Takes absolute values and rescales to unit boundary `q'`-norm. Returns
/// false for a zero trace.
fn normalize(mesh: &Mesh, v: &mut [f64], qc: f64) -> bool {
    v.iter_mut().for_each(|x| *x = x.abs());
    let norm = boundary_power_integral(mesh, &mesh.boundary_trace(v), qc);
    if !(norm > 0.0 && norm.is_finite()) {
        return false;
    }
    let scale = norm.powf(-1.0 / qc);
    v.iter_mut().for_each(|x| *x *= scale);
    true
}

/// Minimizes the trace quotient by preconditioned projected gradient descent.
///
/// Each step solves with the Hessian of the `p`-energy (the stiffness plus mass
/// matrix for `p = 2`), backtracks on the quotient and projects back onto
/// nonnegative fields of unit boundary norm. At `p = q' = 2` the full step is
/// exactly one inverse iteration.
pub fn trace_extremal(space: &FemSpace, q: f64, p: f64, solver: &SolverConfig) -> Result<LqExtremal> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::Config(format!("q must be in (1, ∞), got {q}")));
    }
    SolverConfig { p, ..*solver }.validate()?;
    let mesh = space.mesh();
    let qc = q / (q - 1.0);
    let n = space.n();
    let zero = vec![0.0; n];
    let grad_eps = if p < 2.0 { solver.epsilon_min } else { 0.0 };

    let restart = || {
        let mut v = vec![1.0; n];
        normalize(mesh, &mut v, qc);
        v
    };
    let mut v = restart();
    let mut quotient = space.energy(&v, p);

    for it in 0..MAX_ITERATIONS {
        let mut g: Vec<f64> = space
            .residual(&v, p, grad_eps, &zero)
            .into_iter()
            .map(|x| p * x)
            .collect();
        let g_norm = boundary_power_gradient(mesh, &v, qc);
        let energy = space.energy(&v, p);
        g.iter_mut()
            .zip(&g_norm)
            .for_each(|(x, y)| *x -= p / qc * energy * y);
        let d = if p == 2.0 {
            space.solve_linear(&g)?
        } else {
            let h = space.hessian(&v, p, solver.epsilon_min.max(1e-8));
            space.solve_spd(&h, &g)?
        };

        let mut alpha = (p - 1.0) / p;
        let accepted = loop {
            let mut trial: Vec<f64> = v.iter().zip(&d).map(|(x, dx)| x - alpha * dx).collect();
            if !normalize(mesh, &mut trial, qc) {
                trial = restart();
            }
            let value = space.energy(&trial, p);
            if value <= quotient {
                break Some((trial, value));
            }
            alpha *= 0.5;
            if alpha < 1e-12 {
                break None;
            }
        };
        let Some((trial, value)) = accepted else {
            return Ok(extremal(v, quotient, p, q, qc, it));
        };
        let change = (quotient - value) / quotient;
        v = trial;
        quotient = value;
        if change <= QUOTIENT_TOL {
            return Ok(extremal(v, quotient, p, q, qc, it + 1));
        }
    }
    Err(Error::NonConvergence(format!(
        "trace extremal did not settle within {MAX_ITERATIONS} iterations (quotient {quotient})"
    )))
}

fn extremal(v: Vec<f64>, s: f64, p: f64, q: f64, q_conj: f64, iterations: usize) -> LqExtremal {
    LqExtremal {
        v,
        s,
        p,
        q,
        q_conj,
        iterations,
        warning: trace_exponent_warning(p, q),
    }
}

/// Smallest eigenvalue of `(K + M) v = λ B v` by linear inverse iteration,
/// where `B` is the boundary mass matrix. Equals the `p = q' = 2` trace constant.
pub fn steklov_inverse_iteration(space: &FemSpace) -> Result<(f64, Vec<f64>)> {
    let mut v = vec![1.0; space.n()];
    let mut lambda = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let bv = space.boundary_mass_apply(&v);
        let w = space.solve_linear(&bv)?;
        let scale = dot(&w, &space.boundary_mass_apply(&w)).sqrt();
        v = w.into_iter().map(|x| x / scale).collect();
        let next = dot(&v, &space.apply_linear(&v));
        if (lambda - next).abs() <= 1e-14 * next {
            return Ok((next, v));
        }
        lambda = next;
    }
    Err(Error::NonConvergence("inverse iteration did not settle".into()))
}

/// The maximizer of `J` on the unit `L^q` ball built from the extremal:
/// nodal trace `v^{q'-1}`, rescaled to unit discrete norm.
pub fn lq_optimal_load(space: &FemSpace, extremal: &LqExtremal) -> Result<LqLoad> {
    let mesh = space.mesh();
    let (p, q, qc) = (extremal.p, extremal.q, extremal.q_conj);
    let mut trace: Vec<f64> = mesh
        .boundary_trace(&extremal.v)
        .into_iter()
        .map(|x| x.powf(qc - 1.0))
        .collect();
    let norm = boundary_power_integral(mesh, &trace, q).powf(1.0 / q);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Internal("extremal has a zero trace".into()));
    }
    trace.iter_mut().for_each(|x| *x /= norm);
    let check = boundary_power_integral(mesh, &trace, q).powf(1.0 / q);
    if (check - 1.0).abs() > 1e-8 {
        return Err(Error::Internal(format!("optimal load has L^q norm {check}")));
    }
    let u_scale = extremal.s.powf(-1.0 / (p - 1.0));
    Ok(LqLoad {
        load: BoundaryLoad::NodalTrace(trace),
        predicted_j: u_scale,
        u_scale,
        predicted_u: extremal.v.iter().map(|x| u_scale * x).collect(),
        norm_before_rescale: norm,
    })
}
