//! Homogeneity `J(λf) = λ^{p/(p-1)} J(f)` on the unit square.

use membrane::{build_mesh, BoundaryLoad, DomainSpec, FemSpace, SolverConfig};

fn main() -> membrane::Result<()> {
    let space = FemSpace::new(build_mesh(&DomainSpec::square(1.0, 64, 1))?);
    let perimeter = space.mesh().perimeter();
    let load = BoundaryLoad::from_fn(space.mesh(), |s| {
        1.0 + 0.5 * (2.0 * std::f64::consts::PI * s / perimeter).cos()
    });
    for p in [1.5, 2.0, 3.0] {
        let config = SolverConfig::with_p(p);
        let j1 = {
            let sol = space.solve_state(&load, &config)?;
            space.cost_j(&load, &sol.nodal_u)?
        };
        let doubled = load.scaled(2.0)?;
        let j2 = {
            let sol = space.solve_state(&doubled, &config)?;
            space.cost_j(&doubled, &sol.nodal_u)?
        };
        let predicted = 2f64.powf(p / (p - 1.0)) * j1;
        println!(
            "p = {p}: J(f) = {j1:.10}, J(2f) = {j2:.10}, relative mismatch {:.2e}",
            (j2 - predicted).abs() / j2
        );
    }
    Ok(())
}
