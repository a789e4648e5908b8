//! P1 finite elements for `-Δ_p u + |u|^{p-2} u = 0` with a Neumann load.
//!
//! Gradient terms are integrated exactly per element (constant gradients);
//! the `|u|^p` term uses vertex-lumped quadrature. Boundary loads are
//! integrated exactly against the hat functions.

mod load;
mod solver;

use std::sync::OnceLock;

pub use load::{assemble_load, BoundaryLoad};
pub use solver::{cost_j, energy, functional_i, solve_state, NewtonRecord, SolverConfig, StateSolution};

use crate::error::Result;
use crate::mesh::Mesh;
use crate::sparse::{solve_refined, EnvelopeCholesky, SparsePattern};

/// Precomputed element geometry, sparsity pattern and factorization
/// structure for one mesh.
#[derive(Debug)]
pub struct FemSpace {
    mesh: Mesh,
    areas: Vec<f64>,
    /// Gradients of the three hat functions of each triangle.
    grads: Vec<[[f64; 2]; 3]>,
    lumped: Vec<f64>,
    pattern: SparsePattern,
    /// Storage position of local entry `(a, b)` at index `3a + b`.
    local_pos: Vec<[usize; 9]>,
    symbolic: EnvelopeCholesky,
    /// Factor of the `p = 2` operator (stiffness + lumped mass), which does not depend on `u`.
    linear: OnceLock<(Vec<f64>, EnvelopeCholesky)>,
}

impl FemSpace {
    pub fn new(mesh: Mesh) -> Self {
        let nt = mesh.triangles().len();
        let mut areas = Vec::with_capacity(nt);
        let mut grads = Vec::with_capacity(nt);
        let mut lumped = vec![0.0; mesh.n_vertices()];
        for (t, &[a, b, c]) in mesh.triangles().iter().enumerate() {
            let area = mesh.triangle_area(t);
            let v = mesh.vertices();
            let (pa, pb, pc) = (v[a], v[b], v[c]);
            let scale = 1.0 / (2.0 * area);
            grads.push([
                [(pb[1] - pc[1]) * scale, (pc[0] - pb[0]) * scale],
                [(pc[1] - pa[1]) * scale, (pa[0] - pc[0]) * scale],
                [(pa[1] - pb[1]) * scale, (pb[0] - pa[0]) * scale],
            ]);
            for &i in &[a, b, c] {
                lumped[i] += area / 3.0;
            }
            areas.push(area);
        }
        let pattern = SparsePattern::from_edges(
            mesh.n_vertices(),
            mesh.triangles()
                .iter()
                .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)]),
        );
        let local_pos = mesh
            .triangles()
            .iter()
            .map(|tri| {
                let mut pos = [0; 9];
                for a in 0..3 {
                    for b in 0..3 {
                        pos[3 * a + b] = pattern
                            .position(tri[a], tri[b])
                            .expect("element entry in pattern");
                    }
                }
                pos
            })
            .collect();
        let symbolic = EnvelopeCholesky::symbolic(&pattern);
        Self {
            mesh,
            areas,
            grads,
            lumped,
            pattern,
            local_pos,
            symbolic,
            linear: OnceLock::new(),
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn n(&self) -> usize {
        self.mesh.n_vertices()
    }

    pub fn pattern(&self) -> &SparsePattern {
        &self.pattern
    }

    pub fn lumped_mass(&self) -> &[f64] {
        &self.lumped
    }

    fn gradient_on(&self, t: usize, u: &[f64]) -> [f64; 2] {
        let [a, b, c] = self.mesh.triangles()[t];
        let g = &self.grads[t];
        [
            u[a] * g[0][0] + u[b] * g[1][0] + u[c] * g[2][0],
            u[a] * g[0][1] + u[b] * g[1][1] + u[c] * g[2][1],
        ]
    }

    /// `∫ |∇u|^p + |u|^p` with the discretization's quadrature.
    pub fn energy(&self, u: &[f64], p: f64) -> f64 {
        let grad: f64 = (0..self.areas.len())
            .map(|t| {
                let [gx, gy] = self.gradient_on(t, u);
                self.areas[t] * (gx * gx + gy * gy).powf(0.5 * p)
            })
            .sum();
        let mass: f64 = self.lumped.iter().zip(u).map(|(m, x)| m * x.abs().powf(p)).sum();
        grad + mass
    }

    /// Regularized energy split into its convex part and the load term `F·u`.
    pub(crate) fn regularized_parts(&self, u: &[f64], p: f64, eps: f64, rhs: &[f64]) -> (f64, f64) {
        let eps2 = eps * eps;
        let grad: f64 = (0..self.areas.len())
            .map(|t| {
                let [gx, gy] = self.gradient_on(t, u);
                self.areas[t] * (gx * gx + gy * gy + eps2).powf(0.5 * p)
            })
            .sum();
        let mass: f64 = self
            .lumped
            .iter()
            .zip(u)
            .map(|(m, x)| m * (x * x + eps2).powf(0.5 * p))
            .sum();
        ((grad + mass) / p, dot(rhs, u))
    }

    /// Gradient of the regularized energy: the discrete residual of the state equation.
    pub(crate) fn residual(&self, u: &[f64], p: f64, eps: f64, rhs: &[f64]) -> Vec<f64> {
        let eps2 = eps * eps;
        let mut r: Vec<f64> = rhs.iter().map(|f| -f).collect();
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let [gx, gy] = self.gradient_on(t, u);
            let w = self.areas[t] * (gx * gx + gy * gy + eps2).powf(0.5 * p - 1.0);
            for (a, &i) in tri.iter().enumerate() {
                let ga = self.grads[t][a];
                r[i] += w * (gx * ga[0] + gy * ga[1]);
            }
        }
        for (i, (m, x)) in self.lumped.iter().zip(u).enumerate() {
            r[i] += m * (x * x + eps2).powf(0.5 * p - 1.0) * x;
        }
        r
    }

    /// Exact Hessian of the regularized energy, stored on the pattern.
    pub(crate) fn hessian(&self, u: &[f64], p: f64, eps: f64) -> Vec<f64> {
        let eps2 = eps * eps;
        let mut values = vec![0.0; self.pattern.nnz()];
        for (t, pos) in self.local_pos.iter().enumerate() {
            let g = self.gradient_on(t, u);
            let s = g[0] * g[0] + g[1] * g[1] + eps2;
            let w = self.areas[t] * s.powf(0.5 * p - 1.0);
            let w2 = if p == 2.0 {
                0.0
            } else {
                self.areas[t] * (p - 2.0) * s.powf(0.5 * p - 2.0)
            };
            let grads = &self.grads[t];
            let gdot: [f64; 3] = std::array::from_fn(|a| g[0] * grads[a][0] + g[1] * grads[a][1]);
            for a in 0..3 {
                for b in 0..3 {
                    let k = grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1];
                    values[pos[3 * a + b]] += w * k + w2 * gdot[a] * gdot[b];
                }
            }
        }
        for (i, (m, x)) in self.lumped.iter().zip(u).enumerate() {
            let s = x * x + eps2;
            let mut d = s.powf(0.5 * p - 1.0);
            if p != 2.0 {
                d += (p - 2.0) * s.powf(0.5 * p - 2.0) * x * x;
            }
            let pos = self.pattern.position(i, i).expect("diagonal entry");
            values[pos] += m * d;
        }
        values
    }

    /// Solves `H x = rhs` for a Hessian stored on this space's pattern.
    pub(crate) fn solve_spd(&self, values: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
        let mut factor = self.symbolic.clone();
        factor.factor(&self.pattern, values)?;
        solve_refined(&factor, &self.pattern, values, rhs)
    }

    /// Solves with the `p = 2` operator, factoring it once per space.
    pub(crate) fn solve_linear(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if self.linear.get().is_none() {
            let zero = vec![0.0; self.n()];
            let values = self.hessian(&zero, 2.0, 0.0);
            let mut factor = self.symbolic.clone();
            factor.factor(&self.pattern, &values)?;
            let _ = self.linear.set((values, factor));
        }
        let (values, factor) = self.linear.get().expect("linear factor initialized");
        solve_refined(factor, &self.pattern, values, rhs)
    }

    /// The `p = 2` operator (stiffness plus lumped mass) applied to `u`.
    pub fn apply_linear(&self, u: &[f64]) -> Vec<f64> {
        let zero = vec![0.0; self.n()];
        self.residual(u, 2.0, 0.0, &zero)
    }

    /// Consistent boundary mass matrix applied to a nodal field.
    pub fn boundary_mass_apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for e in self.mesh.boundary_edges() {
            out[e.a] += e.length * (2.0 * u[e.a] + u[e.b]) / 6.0;
            out[e.b] += e.length * (u[e.a] + 2.0 * u[e.b]) / 6.0;
        }
        out
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, DomainSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn space() -> FemSpace {
        FemSpace::new(build_mesh(&DomainSpec::disk(1.0, 12, 1)).unwrap())
    }

    #[test]
    fn residual_is_gradient_of_energy() {
        let space = space();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u: Vec<f64> = (0..space.n()).map(|_| rng.random_range(0.2..1.0)).collect();
        let rhs: Vec<f64> = (0..space.n()).map(|_| rng.random_range(-0.1..0.1)).collect();
        for p in [1.5, 2.0, 3.0] {
            let eps = 0.05;
            let r = space.residual(&u, p, eps, &rhs);
            let e = |v: &[f64]| {
                let (c, l) = space.regularized_parts(v, p, eps, &rhs);
                c - l
            };
            for i in [0, 5, space.n() - 1] {
                let h = 1e-6;
                let mut up = u.clone();
                let mut dn = u.clone();
                up[i] += h;
                dn[i] -= h;
                let fd = (e(&up) - e(&dn)) / (2.0 * h);
                assert!((fd - r[i]).abs() < 1e-7, "p={p} i={i}: {fd} vs {}", r[i]);
            }
        }
    }

    #[test]
    fn hessian_is_jacobian_of_residual() {
        let space = space();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u: Vec<f64> = (0..space.n()).map(|_| rng.random_range(0.2..1.0)).collect();
        let zero = vec![0.0; space.n()];
        for p in [1.5, 3.0] {
            let eps = 0.05;
            let h_values = space.hessian(&u, p, eps);
            let dir: Vec<f64> = (0..space.n()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut hv = vec![0.0; space.n()];
            space.pattern().mul(&h_values, &dir, &mut hv);
            let step = 1e-6;
            let up: Vec<f64> = u.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let dn: Vec<f64> = u.iter().zip(&dir).map(|(a, d)| a - step * d).collect();
            let rp = space.residual(&up, p, eps, &zero);
            let rm = space.residual(&dn, p, eps, &zero);
            for i in 0..space.n() {
                let fd = (rp[i] - rm[i]) / (2.0 * step);
                assert!((fd - hv[i]).abs() < 1e-6 * (1.0 + hv[i].abs()));
            }
        }
    }

    #[test]
    fn constant_field_energy_on_square() {
        let space = FemSpace::new(build_mesh(&DomainSpec::square(1.0, 8, 1)).unwrap());
        let u = vec![1.7; space.n()];
        for p in [1.5, 2.0, 3.0] {
            assert!((space.energy(&u, p) - 1.7_f64.powf(p)).abs() < 1e-13);
        }
        assert_eq!(space.energy(&vec![0.0; space.n()], 2.0), 0.0);
    }
}
