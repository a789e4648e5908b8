use serde::{Deserialize, Serialize};

use super::{assemble_load, dot, norm, BoundaryLoad, FemSpace};
use crate::error::{Error, Result};
use crate::mesh::Mesh;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub p: f64,
    pub epsilon_start: f64,
    pub epsilon_min: f64,
    pub continuation_factor: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub line_search_beta: f64,
    pub line_search_c: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            epsilon_start: 1e-1,
            epsilon_min: 1e-6,
            continuation_factor: 10.0,
            newton_tol: 1e-10,
            max_newton: 100,
            line_search_beta: 0.5,
            line_search_c: 1e-4,
        }
    }
}

impl SolverConfig {
    pub fn with_p(p: f64) -> Self {
        Self { p, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("solver: {what}")));
        if !(self.p > 1.0 && self.p.is_finite()) {
            return bad(&format!("p must be in (1, ∞), got {}", self.p));
        }
        if !(self.epsilon_min > 0.0 && self.epsilon_min <= self.epsilon_start) {
            return bad("need 0 < epsilon_min <= epsilon_start");
        }
        if !(self.continuation_factor > 1.0) {
            return bad("continuation_factor must exceed 1");
        }
        if !(self.newton_tol > 0.0) {
            return bad("newton_tol must be positive");
        }
        if !(self.line_search_beta > 0.0 && self.line_search_beta < 1.0)
            || !(self.line_search_c > 0.0 && self.line_search_c < 1.0)
        {
            return bad("line search parameters must lie in (0, 1)");
        }
        Ok(())
    }

    /// Regularization levels visited by the continuation. The `p = 2`
    /// operator does not depend on ε, so it gets a single stage.
    pub fn epsilon_schedule(&self) -> Vec<f64> {
        if self.p == 2.0 {
            return vec![self.epsilon_min];
        }
        let mut out = Vec::new();
        let mut eps = self.epsilon_start;
        while eps > self.epsilon_min * (1.0 + 1e-9) {
            out.push(eps);
            eps /= self.continuation_factor;
        }
        out.push(self.epsilon_min);
        out
    }
}

/// One accepted Newton step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonRecord {
    pub epsilon: f64,
    /// Regularized energy after the step.
    pub energy: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSolution {
    pub nodal_u: Vec<f64>,
    pub p_used: f64,
    pub epsilon_final: f64,
    pub converged: bool,
    pub residual_norm: f64,
    pub newton_iterations: usize,
    /// `∫ |∇u|^p + |u|^p` without regularization.
    pub energy_value: f64,
    pub history: Vec<NewtonRecord>,
}

impl FemSpace {
    /// Minimizes the regularized energy by damped Newton with ε-continuation.
    pub fn solve_state(&self, load: &BoundaryLoad, config: &SolverConfig) -> Result<StateSolution> {
        let rhs = assemble_load(self.mesh(), load)?;
        self.solve_rhs(&rhs, config, None)
    }

    /// Same as [`FemSpace::solve_state`] for an assembled load vector, optionally warm-started.
    pub fn solve_rhs(
        &self,
        rhs: &[f64],
        config: &SolverConfig,
        initial: Option<&[f64]>,
    ) -> Result<StateSolution> {
        config.validate()?;
        let p = config.p;
        let mut u = initial.map_or_else(|| vec![0.0; self.n()], <[f64]>::to_vec);
        let mut history = Vec::new();
        let mut iterations = 0;
        let mut residual_norm = f64::INFINITY;
        let mut eps_final = config.epsilon_min;

        if p == 2.0 {
            // Quadratic energy: one Newton step is exact.
            let r = self.residual(&u, 2.0, 0.0, rhs);
            residual_norm = norm(&r);
            if residual_norm > config.newton_tol {
                let d = self.solve_linear(&r)?;
                u.iter_mut().zip(&d).for_each(|(x, dx)| *x -= dx);
                iterations = 1;
                let r = self.residual(&u, 2.0, 0.0, rhs);
                residual_norm = norm(&r);
                let (c, l) = self.regularized_parts(&u, 2.0, 0.0, rhs);
                history.push(NewtonRecord {
                    epsilon: eps_final,
                    energy: c - l,
                    residual: residual_norm,
                });
            }
        } else {
            for eps in config.epsilon_schedule() {
                eps_final = eps;
                let (n, res) = self.newton_stage(&mut u, rhs, config, eps, &mut history)?;
                iterations += n;
                residual_norm = res;
            }
        }

        let converged = residual_norm <= config.newton_tol;
        Ok(StateSolution {
            energy_value: self.energy(&u, p),
            nodal_u: u,
            p_used: p,
            epsilon_final: eps_final,
            converged,
            residual_norm,
            newton_iterations: iterations,
            history,
        })
    }

    fn newton_stage(
        &self,
        u: &mut Vec<f64>,
        rhs: &[f64],
        config: &SolverConfig,
        eps: f64,
        history: &mut Vec<NewtonRecord>,
    ) -> Result<(usize, f64)> {
        let p = config.p;
        let energy = |v: &[f64]| {
            let (convex, linear) = self.regularized_parts(v, p, eps, rhs);
            (convex - linear, convex + linear.abs())
        };
        let mut r = self.residual(u, p, eps, rhs);
        let mut rn = norm(&r);
        let (mut e0, _) = energy(u);
        for it in 0..config.max_newton {
            if rn <= config.newton_tol {
                return Ok((it, rn));
            }
            let h = self.hessian(u, p, eps);
            let mut d = self.solve_spd(&h, &r)?;
            d.iter_mut().for_each(|x| *x = -*x);
            let slope = dot(&r, &d);

            let mut alpha = 1.0;
            let accepted = loop {
                let trial: Vec<f64> = u.iter().zip(&d).map(|(x, dx)| x + alpha * dx).collect();
                let (e1, scale) = energy(&trial);
                if e1 <= e0 + config.line_search_c * alpha * slope {
                    break Some((trial, e1));
                }
                // Near convergence the energy decrease drops below rounding;
                // accept if the energy is flat to rounding and the residual shrinks.
                if e1 - e0 <= 1e-14 * scale {
                    let r1 = self.residual(&trial, p, eps, rhs);
                    if norm(&r1) < rn {
                        break Some((trial, e1));
                    }
                }
                alpha *= config.line_search_beta;
                if alpha < 1e-12 {
                    break None;
                }
            };
            let Some((trial, e1)) = accepted else {
                return Ok((it, rn));
            };
            *u = trial;
            e0 = e1;
            r = self.residual(u, p, eps, rhs);
            rn = norm(&r);
            history.push(NewtonRecord {
                epsilon: eps,
                energy: e0,
                residual: rn,
            });
        }
        Ok((config.max_newton, rn))
    }

    /// `∫_{∂Ω} f u`, i.e. the load vector paired with the nodal values.
    pub fn cost_j(&self, load: &BoundaryLoad, u: &[f64]) -> Result<f64> {
        Ok(dot(&assemble_load(self.mesh(), load)?, u))
    }

    /// `(p ∫_{∂Ω} f v - ∫ |∇v|^p + |v|^p) / (p - 1)`.
    pub fn functional_i(&self, load: &BoundaryLoad, v: &[f64], p: f64) -> Result<f64> {
        let rhs = assemble_load(self.mesh(), load)?;
        Ok(self.functional_i_rhs(&rhs, v, p))
    }

    pub(crate) fn functional_i_rhs(&self, rhs: &[f64], v: &[f64], p: f64) -> f64 {
        (p * dot(rhs, v) - self.energy(v, p)) / (p - 1.0)
    }
}

pub fn solve_state(mesh: &Mesh, load: &BoundaryLoad, config: &SolverConfig) -> Result<StateSolution> {
    FemSpace::new(mesh.clone()).solve_state(load, config)
}

pub fn energy(mesh: &Mesh, u: &[f64], p: f64) -> f64 {
    FemSpace::new(mesh.clone()).energy(u, p)
}

pub fn cost_j(mesh: &Mesh, load: &BoundaryLoad, u: &[f64]) -> Result<f64> {
    Ok(dot(&assemble_load(mesh, load)?, u))
}

pub fn functional_i(mesh: &Mesh, load: &BoundaryLoad, v: &[f64], p: f64) -> Result<f64> {
    FemSpace::new(mesh.clone()).functional_i(load, v, p)
}
