use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    best_rearrangement, superlevel_region, AdmissibleClass, AscentConfig, AscentStep, AscentTrace,
    Termination,
};
use crate::error::{Error, Result};
use crate::fem::{BoundaryLoad, FemSpace, SolverConfig, StateSolution};
use crate::mesh::Mesh;
use crate::region::{Arc, BoundaryRegion};

/// Spread of the boundary trace over the endpoints of a region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointSpread {
    pub value: f64,
    /// The region had no endpoints (empty or full) and `value` is 0 by convention.
    pub flagged: bool,
}

/// `max u(s_i) - min u(s_i)` over the endpoints `s_i` of `region`.
pub fn optimality_residual(mesh: &Mesh, u: &[f64], region: &BoundaryRegion) -> EndpointSpread {
    let ends = region.endpoints();
    if ends.is_empty() {
        return EndpointSpread {
            value: 0.0,
            flagged: true,
        };
    }
    let (lo, hi) = ends
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
            let v = mesh.trace_at(u, e.s);
            (lo.min(v), hi.max(v))
        });
    EndpointSpread {
        value: hi - lo,
        flagged: false,
    }
}

fn solve_checked(
    space: &FemSpace,
    load: &BoundaryLoad,
    config: &SolverConfig,
    steps: &[AscentStep],
) -> Result<(StateSolution, f64)> {
    let stopped = |reason: String| Error::AscentStopped {
        reason,
        trace: Box::new(AscentTrace {
            steps: steps.to_vec(),
            terminated: Termination::MaxIters,
            degenerate: false,
        }),
    };
    let sol = space
        .solve_state(load, config)
        .map_err(|e| stopped(e.to_string()))?;
    if !sol.converged {
        return Err(stopped(format!(
            "state solve stalled at residual {:e}",
            sol.residual_norm
        )));
    }
    let j = space.cost_j(load, &sol.nodal_u)?;
    Ok((sol, j))
}

fn relative_change(new: f64, old: f64) -> f64 {
    (new - old).abs() / new.abs().max(old.abs()).max(f64::MIN_POSITIVE)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RearrangementRun {
    /// Initial per-edge load.
    pub start: Vec<f64>,
    /// Best per-edge load found.
    pub load: Vec<f64>,
    pub j: f64,
    pub solution: StateSolution,
    pub trace: AscentTrace,
}

/// Best-response ascent over rearrangements: each iterate is the
/// rearrangement of `f0` sorted like the edge means of the previous state.
pub fn ascent_rearrangement(
    space: &FemSpace,
    f0: &[f64],
    solver: &SolverConfig,
    ascent: &AscentConfig,
) -> Result<RearrangementRun> {
    let mesh = space.mesh();
    AdmissibleClass::Rearrangement { f0: f0.to_vec() }.validate(mesh)?;
    ascent.validate()?;
    let lengths = mesh.edge_lengths();
    let mass: f64 = f0.iter().zip(&lengths).map(|(f, l)| f * l).sum();

    let mut steps = Vec::new();
    let mut f = f0.to_vec();
    let (mut sol, mut j) = solve_checked(space, &BoundaryLoad::PerEdge(f.clone()), solver, &steps)?;
    steps.push(AscentStep {
        iter: 0,
        j,
        threshold_s: None,
        measure: mass,
        residual: None,
    });
    let mut seen = vec![f.clone()];
    let mut best = (f.clone(), sol.clone(), j);
    let mut terminated = Termination::MaxIters;

    for iter in 1..ascent.max_ascent {
        let means: Vec<f64> = mesh
            .edge_means(&sol.nodal_u)
            .into_iter()
            .map(|x| x.max(0.0))
            .collect();
        let next = best_rearrangement(f0, &means, &lengths)?;
        if seen.contains(&next) {
            terminated = Termination::FixedPoint;
            break;
        }
        let (next_sol, next_j) = solve_checked(space, &BoundaryLoad::PerEdge(next.clone()), solver, &steps)?;
        let change = relative_change(next_j, j);
        steps.push(AscentStep {
            iter,
            j: next_j,
            threshold_s: None,
            measure: mass,
            residual: Some(change),
        });
        if next_j > best.2 {
            best = (next.clone(), next_sol.clone(), next_j);
        }
        f = next;
        sol = next_sol;
        j = next_j;
        seen.push(f.clone());
        if change <= ascent.ascent_tol {
            terminated = Termination::Tolerance;
            break;
        }
    }
    Ok(RearrangementRun {
        start: f0.to_vec(),
        load: best.0,
        j: best.2,
        solution: best.1,
        trace: AscentTrace {
            steps,
            terminated,
            degenerate: false,
        },
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BathtubRun {
    pub start: BoundaryRegion,
    /// Best region found.
    pub region: BoundaryRegion,
    pub j: f64,
    pub solution: StateSolution,
    pub trace: AscentTrace,
}

/// Superlevel-set ascent for indicators of sets of measure `a`: each iterate
/// is the superlevel set of measure `a` of the previous state's trace.
pub fn ascent_bathtub(
    space: &FemSpace,
    a: f64,
    solver: &SolverConfig,
    ascent: &AscentConfig,
    init: &BoundaryRegion,
) -> Result<BathtubRun> {
    let mesh = space.mesh();
    AdmissibleClass::SurfaceFraction { a }.validate(mesh)?;
    ascent.validate()?;
    let perimeter = mesh.perimeter();
    if (init.perimeter() - perimeter).abs() > 1e-12 * perimeter {
        return Err(Error::Config(
            "initial region does not match the mesh perimeter".into(),
        ));
    }

    let mut steps = Vec::new();
    let mut region = init.clone();
    let (mut sol, mut j) = solve_checked(space, &BoundaryLoad::Region(region.clone()), solver, &steps)?;
    steps.push(AscentStep {
        iter: 0,
        j,
        threshold_s: None,
        measure: region.measure(),
        residual: Some(optimality_residual(mesh, &sol.nodal_u, &region).value),
    });
    let mut best = (region.clone(), sol.clone(), j);
    let mut terminated = Termination::MaxIters;
    let mut degenerate = false;

    for iter in 1..ascent.max_ascent {
        let update = superlevel_region(mesh, &mesh.boundary_trace(&sol.nodal_u), a)?;
        if update.degenerate {
            degenerate = true;
            terminated = Termination::FixedPoint;
            break;
        }
        let next = update.region.expect("superlevel region");
        if next.distance(&region).is_some_and(|d| d <= 1e-12 * perimeter) {
            terminated = Termination::FixedPoint;
            break;
        }
        let (next_sol, next_j) = solve_checked(space, &BoundaryLoad::Region(next.clone()), solver, &steps)?;
        let change = relative_change(next_j, j);
        steps.push(AscentStep {
            iter,
            j: next_j,
            threshold_s: Some(update.threshold_s),
            measure: next.measure(),
            residual: Some(optimality_residual(mesh, &next_sol.nodal_u, &next).value),
        });
        if next_j > best.2 {
            best = (next.clone(), next_sol.clone(), next_j);
        }
        region = next;
        sol = next_sol;
        j = next_j;
        if change <= ascent.ascent_tol {
            terminated = Termination::Tolerance;
            break;
        }
    }
    Ok(BathtubRun {
        start: init.clone(),
        region: best.0,
        j: best.2,
        solution: best.1,
        trace: AscentTrace {
            steps,
            terminated,
            degenerate,
        },
    })
}

/// Random starting regions of measure `a`: in turn one, two and three arcs
/// with random lengths, gaps and offset.
pub fn random_regions(perimeter: f64, a: f64, count: usize, seed: u64) -> Result<Vec<BoundaryRegion>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let k = i % 3 + 1;
            let lengths = random_split(&mut rng, a, k);
            let gaps = random_split(&mut rng, perimeter - a, k);
            let mut s = rng.random_range(0.0..perimeter);
            let mut arcs = Vec::with_capacity(k);
            for (len, gap) in lengths.into_iter().zip(gaps) {
                arcs.push(Arc {
                    begin: s,
                    length: len,
                });
                s += len + gap;
            }
            BoundaryRegion::from_arcs(&arcs, perimeter)
        })
        .collect()
}

/// `k` positive parts of `total`, each at least a fifth of the largest weight.
fn random_split(rng: &mut ChaCha8Rng, total: f64, k: usize) -> Vec<f64> {
    let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
    let sum: f64 = weights.iter().sum();
    weights.into_iter().map(|w| total * w / sum).collect()
}

/// Index of the largest `J`, lowest index on ties.
fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultistartBathtub {
    pub runs: Vec<BathtubRun>,
    pub best: usize,
}

impl MultistartBathtub {
    pub fn best_run(&self) -> &BathtubRun {
        &self.runs[self.best]
    }
}

/// Runs [`ascent_bathtub`] from `ascent.multistart` random regions in parallel.
pub fn multistart_bathtub(
    space: &FemSpace,
    a: f64,
    solver: &SolverConfig,
    ascent: &AscentConfig,
) -> Result<MultistartBathtub> {
    AdmissibleClass::SurfaceFraction { a }.validate(space.mesh())?;
    ascent.validate()?;
    let starts = random_regions(space.mesh().perimeter(), a, ascent.multistart, ascent.seed)?;
    let runs = starts
        .par_iter()
        .map(|start| ascent_bathtub(space, a, solver, ascent, start))
        .collect::<Result<Vec<_>>>()?;
    let best = argmax(runs.iter().map(|r| r.j));
    Ok(MultistartBathtub { runs, best })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultistartRearrangement {
    pub runs: Vec<RearrangementRun>,
    pub best: usize,
}

impl MultistartRearrangement {
    pub fn best_run(&self) -> &RearrangementRun {
        &self.runs[self.best]
    }
}

/// Runs [`ascent_rearrangement`] from `f0` and from `ascent.multistart - 1`
/// random permutations of it.
pub fn multistart_rearrangement(
    space: &FemSpace,
    f0: &[f64],
    solver: &SolverConfig,
    ascent: &AscentConfig,
) -> Result<MultistartRearrangement> {
    AdmissibleClass::Rearrangement { f0: f0.to_vec() }.validate(space.mesh())?;
    ascent.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(ascent.seed);
    let starts: Vec<Vec<f64>> = (0..ascent.multistart)
        .map(|i| {
            let mut f = f0.to_vec();
            if i > 0 {
                f.shuffle(&mut rng);
            }
            f
        })
        .collect();
    let runs = starts
        .par_iter()
        .map(|start| ascent_rearrangement(space, start, solver, ascent))
        .collect::<Result<Vec<_>>>()?;
    let best = argmax(runs.iter().map(|r| r.j));
    Ok(MultistartRearrangement { runs, best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, DomainSpec};
    use crate::region::arc_region;
    use std::f64::consts::PI;

    fn disk(n: usize, refinements: usize) -> FemSpace {
        FemSpace::new(build_mesh(&DomainSpec::disk(1.0, n, refinements)).unwrap())
    }

    #[test]
    fn constant_profile_is_a_fixed_point() {
        let space = disk(32, 0);
        let f0 = vec![1.5; 32];
        let run =
            ascent_rearrangement(&space, &f0, &SolverConfig::default(), &AscentConfig::default()).unwrap();
        assert_eq!(run.trace.terminated, Termination::FixedPoint);
        assert_eq!(run.trace.steps.len(), 1);
        let j = space
            .cost_j(&BoundaryLoad::PerEdge(f0), &run.solution.nodal_u)
            .unwrap();
        assert_eq!(run.j, j);
    }

    #[test]
    fn optimal_pairing_start_stops_quickly() {
        let space = disk(32, 0);
        let f0: Vec<f64> = (0..32).map(|k| if k % 4 == 0 { 2.0 } else { 0.5 }).collect();
        let ascent = AscentConfig::default();
        let first = ascent_rearrangement(&space, &f0, &SolverConfig::default(), &ascent).unwrap();
        let again = ascent_rearrangement(&space, &first.load, &SolverConfig::default(), &ascent).unwrap();
        assert_eq!(again.trace.terminated, Termination::FixedPoint);
        assert!(again.trace.steps.len() <= 2);
        assert!(first.trace.is_monotone(1e-12));
    }

    #[test]
    fn mismatched_profile_length_is_rejected() {
        let space = FemSpace::new(build_mesh(&DomainSpec::square(1.0, 8, 0)).unwrap());
        let err = ascent_rearrangement(
            &space,
            &[1.0; 3],
            &SolverConfig::default(),
            &AscentConfig::default(),
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn symmetric_arc_is_a_fixed_point() {
        let space = disk(64, 0);
        let p = space.mesh().perimeter();
        let init = arc_region(0.0, 0.25 * p, p).unwrap();
        let run = ascent_bathtub(
            &space,
            0.25 * p,
            &SolverConfig::default(),
            &AscentConfig::default(),
            &init,
        )
        .unwrap();
        assert!(run.trace.steps.len() <= 2);
        let d = run.region.distance(&init).unwrap();
        assert!(d <= 1e-6, "moved by {d}");
    }

    #[test]
    fn nearly_full_measure_takes_one_step() {
        let space = disk(32, 0);
        let p = space.mesh().perimeter();
        let a = p * (1.0 - 1e-9);
        let init = arc_region(1.0, a, p).unwrap();
        let run = ascent_bathtub(
            &space,
            a,
            &SolverConfig::default(),
            &AscentConfig::default(),
            &init,
        )
        .unwrap();
        assert!(run.trace.steps.len() <= 3);
        assert!((run.region.measure() - a).abs() < 1e-9);
    }

    #[test]
    fn random_regions_have_requested_measure() {
        let regions = random_regions(2.0 * PI, 0.5 * PI, 9, 4).unwrap();
        for (i, r) in regions.iter().enumerate() {
            assert!((r.measure() - 0.5 * PI).abs() < 1e-12);
            assert_eq!(r.arcs().len(), i % 3 + 1);
        }
        assert_eq!(regions, random_regions(2.0 * PI, 0.5 * PI, 9, 4).unwrap());
    }

    #[test]
    fn full_region_residual_is_flagged() {
        let space = disk(16, 0);
        let u = vec![1.0; space.n()];
        let r = optimality_residual(space.mesh(), &u, &BoundaryRegion::full(space.mesh().perimeter()));
        assert!(r.flagged);
        assert_eq!(r.value, 0.0);
    }
}
