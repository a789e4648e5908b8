use serde::{Deserialize, Serialize};

use super::UNIFORM_REL_TOL;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::region::{arc_region, BoundaryRegion};

/// Maximizer of `Σ g u ℓ` over `0 ≤ g ≤ 1`, `Σ g ℓ = A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathtubResult {
    /// Per-cell values (covered fraction of each edge for the piecewise-linear variant).
    pub g: Vec<f64>,
    pub threshold_s: f64,
    /// Fraction of the tie set `{u = s}` that is included.
    pub tie_fraction_c: f64,
    pub region: Option<BoundaryRegion>,
    /// The field was constant, so every admissible set is optimal.
    pub degenerate: bool,
}

/// Indices sorted by decreasing value, ties by increasing index.
fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    order
}

/// Rearrangement of `f0` that pairs the `k`-th largest value with the
/// `k`-th largest entry of `u`.
pub fn best_rearrangement(f0: &[f64], u: &[f64], lengths: &[f64]) -> Result<Vec<f64>> {
    if f0.len() != u.len() || f0.len() != lengths.len() {
        return Err(Error::Config("f0, u and lengths must have equal sizes".into()));
    }
    let (lo, hi) = lengths
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &l| (lo.min(l), hi.max(l)));
    if !lengths.is_empty() && hi - lo > UNIFORM_REL_TOL * hi {
        return Err(Error::ClassViolation(format!(
            "edge lengths range over [{lo}, {hi}]"
        )));
    }
    if f0.iter().chain(u).any(|&x| !(x >= 0.0)) {
        return Err(Error::Domain("f0 and u must be nonnegative".into()));
    }
    let mut sorted = f0.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut out = vec![0.0; f0.len()];
    for (value, e) in sorted.into_iter().zip(descending_order(u)) {
        out[e] = value;
    }
    Ok(out)
}

/// `Σ f u ℓ`.
pub fn pairing_value(f: &[f64], u: &[f64], lengths: &[f64]) -> f64 {
    f.iter().zip(u).zip(lengths).map(|((f, u), l)| f * u * l).sum()
}

/// Bathtub maximizer over cells: `g = 1` where `u > s`, `g = c` on `u = s`.
pub fn bathtub_discrete(u: &[f64], lengths: &[f64], a: f64) -> Result<BathtubResult> {
    if u.len() != lengths.len() {
        return Err(Error::Config("u and lengths must have equal sizes".into()));
    }
    let total: f64 = lengths.iter().sum();
    if !(a >= 0.0) || a > total * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("A = {a} outside [0, {total}]")));
    }
    let order = descending_order(u);
    let mut g = vec![0.0; u.len()];
    let mut above = 0.0;
    let mut k = 0;
    while k < order.len() {
        let level = u[order[k]];
        let group_end = k + order[k..].iter().take_while(|&&i| u[i] == level).count();
        let tied: f64 = order[k..group_end].iter().map(|&i| lengths[i]).sum();
        if above + tied > a {
            let c = ((a - above) / tied).clamp(0.0, 1.0);
            for &i in &order[k..group_end] {
                g[i] = c;
            }
            return Ok(BathtubResult {
                g,
                threshold_s: level,
                tie_fraction_c: c,
                region: None,
                degenerate: false,
            });
        }
        for &i in &order[k..group_end] {
            g[i] = 1.0;
        }
        above += tied;
        k = group_end;
    }
    Ok(BathtubResult {
        g,
        threshold_s: order.last().map_or(0.0, |&i| u[i]),
        tie_fraction_c: 1.0,
        region: None,
        degenerate: false,
    })
}

/// Measure of `{u ≥ t}` on one edge with linear `u` (`> t` when `strict`).
fn edge_measure(ua: f64, ub: f64, len: f64, t: f64, strict: bool) -> f64 {
    if ua == ub {
        let inside = if strict { ua > t } else { ua >= t };
        return if inside { len } else { 0.0 };
    }
    let (lo, hi) = (ua.min(ub), ua.max(ub));
    len * ((hi - t) / (hi - lo)).clamp(0.0, 1.0)
}

/// Superlevel set `{u ≥ t}` of the piecewise-linear boundary trace with
/// measure exactly `a`.
///
/// `trace` holds the values at the boundary loop vertices. The level is found
/// from the exact level-set measure, which is piecewise linear in `t` between
/// consecutive nodal values. If the level falls on a plateau, whole plateau
/// edges are taken in order of increasing arc length and the last one is cut
/// short.
pub fn superlevel_region(mesh: &Mesh, trace: &[f64], a: f64) -> Result<BathtubResult> {
    let edges = mesh.boundary_edges();
    let perimeter = mesh.perimeter();
    let n = edges.len();
    if trace.len() != n {
        return Err(Error::Config(format!(
            "trace has {} values but the boundary has {n} vertices",
            trace.len()
        )));
    }
    if !(a > 0.0 && a < perimeter) {
        return Err(Error::Domain(format!("A = {a} outside (0, {perimeter})")));
    }
    let ends = |k: usize| (trace[k], trace[(k + 1) % n]);
    let measure = |t: f64, strict: bool| -> f64 {
        edges
            .iter()
            .enumerate()
            .map(|(k, e)| {
                let (ua, ub) = ends(k);
                edge_measure(ua, ub, e.length, t, strict)
            })
            .sum()
    };

    let mut levels = trace.to_vec();
    levels.sort_by(|x, y| y.total_cmp(x));
    levels.dedup();
    if levels.len() == 1 {
        let region = arc_region(0.0, a, perimeter)?;
        return Ok(BathtubResult {
            g: covered_fractions(mesh, &region),
            threshold_s: levels[0],
            tie_fraction_c: a / perimeter,
            region: Some(region),
            degenerate: true,
        });
    }

    // First level (from the top) whose closed superlevel set reaches `a`.
    let k = levels
        .partition_point(|&w| measure(w, false) < a)
        .min(levels.len() - 1);
    let w = levels[k];
    let strict = measure(w, true);

    let mut raw = Vec::new();
    let (threshold, c) = if a <= strict && k > 0 {
        // Linear piece on (w, levels[k - 1]).
        let upper = measure(levels[k - 1], false);
        let t = if strict > upper {
            w + (strict - a) / (strict - upper) * (levels[k - 1] - w)
        } else {
            w
        };
        push_superlevel(mesh, trace, t, &mut raw);
        (t, 1.0)
    } else {
        push_superlevel(mesh, trace, w, &mut raw);
        let plateau: Vec<usize> = (0..n)
            .filter(|&k| {
                let (ua, ub) = ends(k);
                ua == w && ub == w
            })
            .collect();
        let plateau_len: f64 = plateau.iter().map(|&k| edges[k].length).sum();
        let mut need = a - strict;
        for &k in &plateau {
            if need <= 0.0 {
                break;
            }
            let e = &edges[k];
            let take = need.min(e.length);
            raw.push((e.s_start, e.s_start + take));
            need -= take;
        }
        let c = if plateau_len > 0.0 {
            ((a - strict) / plateau_len).clamp(0.0, 1.0)
        } else {
            1.0
        };
        (w, c)
    };
    let region = BoundaryRegion::from_intervals(&raw, perimeter)?;
    Ok(BathtubResult {
        g: covered_fractions(mesh, &region),
        threshold_s: threshold,
        tie_fraction_c: c,
        region: Some(region),
        degenerate: false,
    })
}

/// Pieces of `{u > t}` (plus the sloped part of `{u = t}`) on each edge.
fn push_superlevel(mesh: &Mesh, trace: &[f64], t: f64, raw: &mut Vec<(f64, f64)>) {
    let n = trace.len();
    for (k, e) in mesh.boundary_edges().iter().enumerate() {
        let (ua, ub) = (trace[k], trace[(k + 1) % n]);
        if ua == ub {
            if ua > t {
                raw.push((e.s_start, e.s_end()));
            }
            continue;
        }
        if ua.min(ub) >= t {
            raw.push((e.s_start, e.s_end()));
            continue;
        }
        if ua.max(ub) < t {
            continue;
        }
        let x = e.length * ((ua - t) / (ua - ub)).clamp(0.0, 1.0);
        if ua >= t {
            if x > 0.0 {
                raw.push((e.s_start, e.s_start + x));
            }
        } else if x < e.length {
            raw.push((e.s_start + x, e.s_end()));
        }
    }
}

fn covered_fractions(mesh: &Mesh, region: &BoundaryRegion) -> Vec<f64> {
    mesh.boundary_edges()
        .iter()
        .map(|e| {
            let covered: f64 = region.overlaps(e.s_start, e.s_end()).map(|(x, y)| y - x).sum();
            (covered / e.length).clamp(0.0, 1.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, DomainSpec};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..n {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn small_rearrangement_matches_enumeration() {
        let (f0, u, l) = ([3.0, 1.0, 2.0], [0.1, 0.5, 0.2], [1.0; 3]);
        let best = best_rearrangement(&f0, &u, &l).unwrap();
        assert_eq!(best, vec![1.0, 3.0, 2.0]);
        let brute = permutations(3)
            .iter()
            .map(|p| {
                let f: Vec<f64> = p.iter().map(|&i| f0[i]).collect();
                pairing_value(&f, &u, &l)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((pairing_value(&best, &u, &l) - 2.0).abs() < 1e-15);
        assert!((brute - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rearrangement_trivial_cases() {
        let u = [0.3, 0.1, 0.2];
        let l = [0.5; 3];
        assert_eq!(best_rearrangement(&[2.0; 3], &u, &l).unwrap(), vec![2.0; 3]);
        let f0 = [3.0, 1.0, 2.0];
        assert_eq!(best_rearrangement(&f0, &u, &l).unwrap(), f0.to_vec());
        // Ties in u go to the lowest index first.
        assert_eq!(
            best_rearrangement(&[1.0, 2.0], &[0.5, 0.5], &[1.0, 1.0]).unwrap(),
            vec![2.0, 1.0]
        );
    }

    #[test]
    fn rearrangement_errors() {
        assert!(matches!(
            best_rearrangement(&[1.0, 2.0], &[0.1, 0.2], &[1.0, 1.1]),
            Err(Error::ClassViolation(_))
        ));
        assert!(matches!(
            best_rearrangement(&[-1.0, 2.0], &[0.1, 0.2], &[1.0, 1.0]),
            Err(Error::Domain(_))
        ));
    }

    /// Best vertex of `{0 ≤ g ≤ 1, Σ g ℓ = A}`: at most one fractional cell.
    fn bathtub_vertices(u: &[f64], l: &[f64], a: f64) -> f64 {
        let n = u.len();
        let mut best = f64::NEG_INFINITY;
        for mask in 0u32..(1 << n) {
            let full: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| l[i]).sum();
            let base: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| u[i] * l[i]).sum();
            if (full - a).abs() <= 1e-13 {
                best = best.max(base);
            }
            for j in (0..n).filter(|&j| mask >> j & 1 == 0) {
                let c = (a - full) / l[j];
                if (0.0..=1.0).contains(&c) {
                    best = best.max(base + c * u[j] * l[j]);
                }
            }
        }
        best
    }

    #[test]
    fn bathtub_example() {
        let r = bathtub_discrete(&[5.0, 3.0, 1.0], &[1.0; 3], 1.5).unwrap();
        assert_eq!(r.g, vec![1.0, 0.5, 0.0]);
        assert_eq!(r.threshold_s, 3.0);
        assert_eq!(r.tie_fraction_c, 0.5);
        let value = pairing_value(&r.g, &[5.0, 3.0, 1.0], &[1.0; 3]);
        assert_eq!(value, bathtub_vertices(&[5.0, 3.0, 1.0], &[1.0; 3], 1.5));
    }

    #[test]
    fn bathtub_extremes() {
        let u = [0.2, 0.9, 0.4];
        let l = [1.0, 2.0, 0.5];
        assert_eq!(bathtub_discrete(&u, &l, 3.5).unwrap().g, vec![1.0; 3]);
        assert_eq!(bathtub_discrete(&u, &l, 0.0).unwrap().g, vec![0.0; 3]);
        assert!(matches!(bathtub_discrete(&u, &l, 3.6), Err(Error::Domain(_))));
        assert!(matches!(bathtub_discrete(&u, &l, -0.1), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn bathtub_is_feasible_and_optimal(
            cells in proptest::collection::vec((0u8..5, 0.5..2.0f64), 1..8),
            frac in 0.0..1.0f64,
        ) {
            // Coarse integer levels force ties.
            let u: Vec<f64> = cells.iter().map(|c| c.0 as f64 * 0.25).collect();
            let l: Vec<f64> = cells.iter().map(|c| c.1).collect();
            let a = frac * l.iter().sum::<f64>();
            let r = bathtub_discrete(&u, &l, a).unwrap();
            prop_assert!(r.g.iter().all(|&g| (0.0..=1.0).contains(&g)));
            prop_assert!((pairing_value(&r.g, &vec![1.0; l.len()], &l) - a).abs() <= 1e-10 * a.max(1e-300));
            for (gi, ui) in r.g.iter().zip(&u) {
                if *ui > r.threshold_s { prop_assert_eq!(*gi, 1.0); }
                if *ui < r.threshold_s { prop_assert_eq!(*gi, 0.0); }
            }
            let best = bathtub_vertices(&u, &l, a);
            prop_assert!((pairing_value(&r.g, &u, &l) - best).abs() <= 1e-12 * best.abs().max(1.0));
        }

        #[test]
        fn rearrangement_is_a_permutation(values in proptest::collection::vec((0.0..3.0f64, 0.0..1.0f64), 1..12)) {
            let f0: Vec<f64> = values.iter().map(|v| v.0).collect();
            let u: Vec<f64> = values.iter().map(|v| v.1).collect();
            let l = vec![0.3; f0.len()];
            let mut out = best_rearrangement(&f0, &u, &l).unwrap();
            let mut sorted = f0.clone();
            out.sort_by(f64::total_cmp);
            sorted.sort_by(f64::total_cmp);
            prop_assert_eq!(out, sorted);
        }
    }

    fn disk_trace(n: usize, f: impl Fn(f64) -> f64) -> (Mesh, Vec<f64>) {
        let mesh = build_mesh(&DomainSpec::disk(1.0, n, 0)).unwrap();
        let trace = mesh
            .boundary_edges()
            .iter()
            .map(|e| {
                let [x, y] = mesh.vertices()[e.a];
                f(y.atan2(x))
            })
            .collect();
        (mesh, trace)
    }

    #[test]
    fn cosine_half_measure_superlevel() {
        let (mesh, trace) = disk_trace(256, f64::cos);
        let p = mesh.perimeter();
        let r = superlevel_region(&mesh, &trace, 0.5 * p).unwrap();
        let region = r.region.unwrap();
        assert!((region.measure() - 0.5 * p).abs() < 1e-12);
        assert!(r.threshold_s.abs() < 1e-3);
        let arcs = region.arcs();
        assert_eq!(arcs.len(), 1);
        assert!((arcs[0].begin - 0.75 * p).abs() < 1e-3);
        assert!((arcs[0].end() - 1.25 * p).abs() < 1e-3);
        assert!(!r.degenerate);
    }

    #[test]
    fn superlevel_near_full_measure() {
        let (mesh, trace) = disk_trace(64, |t| 2.0 + t.sin());
        let p = mesh.perimeter();
        let r = superlevel_region(&mesh, &trace, p * (1.0 - 1e-9)).unwrap();
        let min = trace.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((r.threshold_s - min).abs() < 1e-3);
        assert!((r.region.unwrap().measure() - p * (1.0 - 1e-9)).abs() < 1e-12 * p);
    }

    #[test]
    fn constant_trace_is_degenerate() {
        let (mesh, trace) = disk_trace(32, |_| 0.7);
        let r = superlevel_region(&mesh, &trace, 1.0).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.region.unwrap(), arc_region(0.0, 1.0, mesh.perimeter()).unwrap());
    }

    #[test]
    fn plateau_ties_trim_from_the_end() {
        // Square with a trace that is 1 on two sides and 0 elsewhere.
        let mesh = build_mesh(&DomainSpec::square(1.0, 8, 0)).unwrap();
        let trace = [1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0];
        let r = superlevel_region(&mesh, &trace, 1.25).unwrap();
        let region = r.region.unwrap();
        assert!((region.measure() - 1.25).abs() < 1e-14);
        assert_eq!(region.intervals(), &[(0.0, 1.25)]);
        assert_eq!(r.threshold_s, 1.0);
        assert!((r.tie_fraction_c - 0.625).abs() < 1e-14);
    }

    #[test]
    fn superlevel_measure_is_exact_for_random_traces() {
        let (mesh, _) = disk_trace(40, |_| 0.0);
        let p = mesh.perimeter();
        for seed in 0..20u64 {
            let trace: Vec<f64> = (0..40)
                .map(|k| ((k as f64 + 1.0) * (seed as f64 + 0.37) * 12.9898).sin().abs())
                .collect();
            for frac in [0.05, 0.3, 0.5, 0.77, 0.99] {
                let r = superlevel_region(&mesh, &trace, frac * p).unwrap();
                let region = r.region.unwrap();
                assert!(
                    (region.measure() - frac * p).abs() < 1e-11,
                    "seed {seed} frac {frac}"
                );
                let covered: f64 = r.g.iter().zip(mesh.edge_lengths()).map(|(g, l)| g * l).sum();
                assert!((covered - frac * p).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn superlevel_contains_higher_values() {
        let (mesh, trace) = disk_trace(64, |t| (2.0 * t).cos() + 0.3 * t.sin());
        let r = superlevel_region(&mesh, &trace, PI).unwrap();
        let region = r.region.unwrap();
        for k in 0..400 {
            let s = mesh.perimeter() * (k as f64 + 0.5) / 400.0;
            let (e, x) = mesh.locate(s);
            let w = x / mesh.boundary_edges()[e].length;
            let u = (1.0 - w) * trace[e] + w * trace[(e + 1) % 64];
            if u > r.threshold_s + 1e-12 {
                assert!(region.contains(s));
            } else if u < r.threshold_s - 1e-12 {
                assert!(!region.contains(s));
            }
        }
    }
}
