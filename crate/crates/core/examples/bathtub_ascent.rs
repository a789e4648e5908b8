//! Superlevel-set ascent for boundary sets of measure `π/2` on the disk,
//! from random one-, two- and three-arc starts.

use std::f64::consts::PI;

use membrane::optimize::{multistart_bathtub, optimality_residual, AscentConfig};
use membrane::oracle::{best_arc_search, DEFAULT_MODES};
use membrane::{build_mesh, DomainSpec, FemSpace, SolverConfig};

fn main() -> membrane::Result<()> {
    let space = FemSpace::new(build_mesh(&DomainSpec::disk(1.0, 64, 2))?);
    let a = PI / 2.0;
    let ms = multistart_bathtub(&space, a, &SolverConfig::default(), &AscentConfig::default())?;

    for (k, run) in ms.runs.iter().enumerate() {
        println!(
            "run {k:2}: start arcs {}, final arcs {}, J {:.8} -> {:.8}, {} steps, {:?}",
            run.start.arcs().len(),
            run.region.arcs().len(),
            run.trace.steps[0].j,
            run.j,
            run.trace.steps.len(),
            run.trace.terminated
        );
    }
    let best = ms.best_run();
    let spread = optimality_residual(space.mesh(), &best.solution.nodal_u, &best.region);
    let max_u = best.solution.nodal_u.iter().fold(0.0_f64, |m, x| m.max(*x));
    println!("best region {:?}", best.region.arcs());
    println!("endpoint spread of u: {:.3e} (max u {max_u:.4})", spread.value);

    let search = best_arc_search(a, 20, DEFAULT_MODES, 0)?;
    let split = search.table[1..]
        .iter()
        .map(|c| c.j)
        .fold(f64::NEG_INFINITY, f64::max);
    println!(
        "oracle: single arc {:.8}, best sampled two-arc split {split:.8}",
        search.table[0].j
    );
    Ok(())
}
