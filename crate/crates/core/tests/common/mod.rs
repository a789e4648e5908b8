//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use membrane::{build_mesh, DomainSpec, FemSpace};

/// `I_n(x)` by its power series, summed directly.
pub fn bessel_i(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
    let mut sum = term;
    for k in 1..200 {
        term *= half * half / (k as f64 * (k as f64 + n as f64));
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// `π I_1(1) / I_1'(1)`, the cost of `f = cos θ` on the unit disk at `p = 2`.
pub fn cosine_cost() -> f64 {
    let i1 = bessel_i(1, 1.0);
    // I_1' = I_0 - I_1 / x
    std::f64::consts::PI * i1 / (bessel_i(0, 1.0) - i1)
}

/// Every permutation of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k - 1 {
            heap(k - 1, a, out);
            if k % 2 == 0 {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
        }
        heap(k - 1, a, out);
    }
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    heap(n, &mut a, &mut out);
    out
}

/// Largest `Σ f_σ(i) u_i ℓ` over all permutations `σ`.
pub fn brute_rearrangement(f0: &[f64], u: &[f64], len: f64) -> f64 {
    permutations(f0.len())
        .iter()
        .map(|p| p.iter().zip(u).map(|(&i, u)| f0[i] * u * len).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest `Σ g u ℓ` over the vertices of `{0 ≤ g ≤ 1, Σ g ℓ = a}`: sets of
/// full cells plus at most one fractional cell.
pub fn brute_bathtub(u: &[f64], l: &[f64], a: f64) -> f64 {
    let n = u.len();
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << n) {
        let inside = |i: usize| mask >> i & 1 == 1;
        let full: f64 = (0..n).filter(|&i| inside(i)).map(|i| l[i]).sum();
        let base: f64 = (0..n).filter(|&i| inside(i)).map(|i| u[i] * l[i]).sum();
        if (full - a).abs() <= 1e-12 * a.max(1.0) {
            best = best.max(base);
        }
        for j in (0..n).filter(|&j| !inside(j)) {
            let c = (a - full) / l[j];
            if (0.0..=1.0).contains(&c) {
                best = best.max(base + c * u[j] * l[j]);
            }
        }
    }
    best
}

pub fn disk_space(n: usize, refinements: usize) -> FemSpace {
    FemSpace::new(build_mesh(&DomainSpec::disk(1.0, n, refinements)).unwrap())
}

pub fn square_space(n: usize, refinements: usize) -> FemSpace {
    FemSpace::new(build_mesh(&DomainSpec::square(1.0, n, refinements)).unwrap())
}

/// Central least-squares slope of `log y` against `log x`.
pub fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}
