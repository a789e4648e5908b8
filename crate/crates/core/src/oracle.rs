//! Fourier–Bessel solution of the `p = 2` problem on the unit disk.
//!
//! For `f(θ) = a_0 + Σ a_n cos nθ + b_n sin nθ` the state is
//! `u = Σ f_n I_n(r)/I_n'(1)` mode by mode, so `J` is a weighted sum of squared
//! coefficients with multipliers `I_n(1)/I_n'(1)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{BoundaryLoad, FemSpace, SolverConfig};
use crate::mesh::{build_mesh, refine_uniform, DomainSpec};
use crate::region::{arc_region, Arc, BoundaryRegion};

/// Default number of modes for indicator loads.
pub const DEFAULT_MODES: usize = 64;

/// `I_n(r) / ((r/2)^n / n!)`: the power series without its leading factor.
fn scaled_series(n: usize, r: f64) -> f64 {
    let sq = 0.25 * r * r;
    let (mut term, mut sum) = (1.0, 1.0);
    for k in 1..=500 {
        term *= sq / (k as f64 * (k + n) as f64);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Modified Bessel function of the first kind `I_n(r)` by its power series.
pub fn bessel_i(n: usize, r: f64) -> f64 {
    let half = 0.5 * r;
    (1..=n).fold(1.0, |t, k| t * half / k as f64) * scaled_series(n, r)
}

/// `I_n'(r)` from the recurrences `I_0' = I_1`, `I_n' = (I_{n-1} + I_{n+1})/2`.
pub fn bessel_i_prime(n: usize, r: f64) -> f64 {
    if n == 0 {
        bessel_i(1, r)
    } else {
        0.5 * (bessel_i(n - 1, r) + bessel_i(n + 1, r))
    }
}

/// Ratio `I_n(1)/I_n'(1)`: the boundary response of mode `n` to unit flux.
///
/// Evaluated on the scaled series so that high modes do not underflow.
pub fn mode_multiplier(n: usize) -> f64 {
    let half = 0.5;
    if n == 0 {
        return scaled_series(0, 1.0) / (half * scaled_series(1, 1.0));
    }
    let nf = n as f64;
    let below = nf / half * scaled_series(n - 1, 1.0);
    let above = half / (nf + 1.0) * scaled_series(n + 1, 1.0);
    2.0 * scaled_series(n, 1.0) / (below + above)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FourierLoad {
    pub a0: f64,
    /// `a_1, a_2, ...`
    pub a: Vec<f64>,
    /// `b_1, b_2, ...`
    pub b: Vec<f64>,
}

impl FourierLoad {
    pub fn constant(a0: f64) -> Self {
        Self {
            a0,
            ..Self::default()
        }
    }

    pub fn cosine(n: usize, amplitude: f64) -> Self {
        let mut a = vec![0.0; n];
        a[n - 1] = amplitude;
        Self {
            a0: 0.0,
            b: vec![0.0; n],
            a,
        }
    }

    pub fn modes(&self) -> usize {
        self.a.len().max(self.b.len())
    }

    fn coeff(v: &[f64], n: usize) -> f64 {
        v.get(n - 1).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if std::iter::once(&self.a0)
            .chain(&self.a)
            .chain(&self.b)
            .all(|x| x.is_finite())
        {
            Ok(())
        } else {
            Err(Error::Config("Fourier coefficients must be finite".into()))
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        (1..=self.modes()).fold(self.a0, |acc, n| {
            let x = n as f64 * theta;
            acc + Self::coeff(&self.a, n) * x.cos() + Self::coeff(&self.b, n) * x.sin()
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub load: FourierLoad,
    /// `I_n(1)/I_n'(1)` for `n = 0..=modes`.
    pub multipliers: Vec<f64>,
    #[serde(rename = "J")]
    pub j: f64,
    /// Bound on the truncation error in `J` for an indicator load with these modes.
    pub tail_bound: f64,
}

impl OracleSolution {
    /// `u(r, θ)` from the series.
    pub fn eval(&self, r: f64, theta: f64) -> f64 {
        let load = &self.load;
        let mut u = load.a0 * bessel_i(0, r) / bessel_i_prime(0, 1.0);
        for n in 1..=load.modes() {
            let radial = bessel_i(n, r) / bessel_i_prime(n, 1.0);
            let x = n as f64 * theta;
            u += radial
                * (FourierLoad::coeff(&load.a, n) * x.cos() + FourierLoad::coeff(&load.b, n) * x.sin());
        }
        u
    }

    /// Boundary coefficients `u_n(1) = f_n I_n(1)/I_n'(1)`.
    pub fn boundary_coefficients(&self) -> FourierLoad {
        let scale = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .enumerate()
                .map(|(k, x)| x * self.multipliers[k + 1])
                .collect()
        };
        FourierLoad {
            a0: self.load.a0 * self.multipliers[0],
            a: scale(&self.load.a),
            b: scale(&self.load.b),
        }
    }
}

/// Solves `-Δu + u = 0` in the unit disk with `∂u/∂ν = f` and returns `J = ∫ f u`.
pub fn solve_disk(load: &FourierLoad) -> Result<OracleSolution> {
    load.validate()?;
    let modes = load.modes();
    let multipliers: Vec<f64> = (0..=modes).map(mode_multiplier).collect();
    let mut j = 2.0 * PI * load.a0 * load.a0 * multipliers[0];
    for n in 1..=modes {
        let (a, b) = (FourierLoad::coeff(&load.a, n), FourierLoad::coeff(&load.b, n));
        j += PI * (a * a + b * b) * multipliers[n];
    }
    // Indicator coefficients satisfy a_n² + b_n² ≤ 4/(nπ)², and the multipliers
    // are below 1/n, so the dropped tail is at most Σ_{n>N} 4/(π n³).
    let tail_bound = 2.0 / (PI * (modes as f64 + 0.5).powi(2));
    Ok(OracleSolution {
        load: load.clone(),
        multipliers,
        j,
        tail_bound,
    })
}

/// Exact Fourier coefficients of the indicator of `region` on the unit circle,
/// with arc length `s` read as the angle `2πs/P`.
pub fn arc_fourier(region: &BoundaryRegion, modes: usize) -> FourierLoad {
    let to_angle = 2.0 * PI / region.perimeter();
    let mut load = FourierLoad {
        a0: 0.0,
        a: vec![0.0; modes],
        b: vec![0.0; modes],
    };
    for &(s0, s1) in region.intervals() {
        let (alpha, beta) = (s0 * to_angle, s1 * to_angle);
        load.a0 += (beta - alpha) / (2.0 * PI);
        for n in 1..=modes {
            let nf = n as f64;
            load.a[n - 1] += ((nf * beta).sin() - (nf * alpha).sin()) / (nf * PI);
            load.b[n - 1] += ((nf * alpha).cos() - (nf * beta).cos()) / (nf * PI);
        }
    }
    load
}

/// Oracle `J` of the indicator of `region` (perimeter taken as `2π`).
pub fn region_j(region: &BoundaryRegion, modes: usize) -> f64 {
    solve_disk(&arc_fourier(region, modes))
        .map(|s| s.j)
        .unwrap_or(f64::NAN)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcConfig {
    pub config_id: usize,
    pub description: String,
    pub arcs: Vec<Arc>,
    #[serde(rename = "J")]
    pub j: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcSearch {
    /// Row 0 is the single arc; the rest are two-arc splits.
    pub table: Vec<ArcConfig>,
    pub best: usize,
}

/// Oracle `J` for the single arc of length `a` and for `k` random splits of
/// `a` into two disjoint arcs on the unit circle.
pub fn best_arc_search(a: f64, k: usize, modes: usize, seed: u64) -> Result<ArcSearch> {
    let perimeter = 2.0 * PI;
    if !(a > 0.0 && a < perimeter) {
        return Err(Error::Domain(format!("A = {a} outside (0, 2π)")));
    }
    let single = arc_region(0.0, a, perimeter)?;
    let mut table = vec![ArcConfig {
        config_id: 0,
        description: format!("single arc of length {a}"),
        arcs: single.arcs(),
        j: region_j(&single, modes),
    }];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for id in 1..=k {
        let frac = rng.random_range(0.05..0.5);
        let gap = rng.random_range(0.0..1.0) * (perimeter - a);
        let gap = gap.clamp(1e-9, perimeter - a - 1e-9);
        let (l1, l2) = ((1.0 - frac) * a, frac * a);
        let arcs = vec![
            Arc {
                begin: 0.0,
                length: l1,
            },
            Arc {
                begin: l1 + gap,
                length: l2,
            },
        ];
        let region = BoundaryRegion::from_arcs(&arcs, perimeter)?;
        table.push(ArcConfig {
            config_id: id,
            description: format!("two arcs {l1:.6} + {l2:.6}, gap {gap:.6}"),
            arcs,
            j: region_j(&region, modes),
        });
    }
    let mut best = 0;
    for (i, row) in table.iter().enumerate() {
        if row.j > table[best].j {
            best = i;
        }
    }
    Ok(ArcSearch { table, best })
}

/// One row of a FEM against oracle refinement study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub n_refine: usize,
    #[serde(rename = "J_fem")]
    pub j_fem: f64,
    #[serde(rename = "J_oracle")]
    pub j_oracle: f64,
    pub abs_err: f64,
}

/// FEM `J` on the unit disk with `n_boundary` edges refined `0..=max_refine`
/// times, against the oracle value. Rows start at `min_refine`.
pub fn compare_refinements(
    load: &FourierLoad,
    n_boundary: usize,
    min_refine: usize,
    max_refine: usize,
    solver: &SolverConfig,
) -> Result<Vec<CompareRow>> {
    if solver.p != 2.0 {
        return Err(Error::Config(format!(
            "the disk oracle needs p = 2, got {}",
            solver.p
        )));
    }
    if min_refine > max_refine {
        return Err(Error::Config("min_refine exceeds max_refine".into()));
    }
    solver.validate()?;
    let exact = solve_disk(load)?.j;
    let mut mesh = build_mesh(&DomainSpec::disk(1.0, n_boundary, 0))?;
    let mut rows = Vec::new();
    for level in 0..=max_refine {
        if level > 0 {
            mesh = refine_uniform(&mesh);
        }
        if level < min_refine {
            continue;
        }
        let load = BoundaryLoad::from_angle_fn(&mesh, |t| load.eval(t));
        let space = FemSpace::new(mesh.clone());
        let sol = space.solve_state(&load, solver)?;
        let j = space.cost_j(&load, &sol.nodal_u)?;
        rows.push(CompareRow {
            n_refine: level,
            j_fem: j,
            j_oracle: exact,
            abs_err: (j - exact).abs(),
        });
    }
    Ok(rows)
}
