//! Finite differences of `J` under tangential motion of arc endpoints,
//! against the endpoint formula.

use std::f64::consts::PI;

use membrane::shape::{fd_check, TangentialVelocity};
use membrane::{arc_region, build_mesh, DomainSpec, FemSpace, SolverConfig};

fn main() -> membrane::Result<()> {
    let space = FemSpace::new(build_mesh(&DomainSpec::disk(1.0, 64, 2))?);
    let region = arc_region(0.0, PI / 2.0, space.mesh().perimeter())?;
    let steps = [1e-2, 5e-3, 2.5e-3];

    let moving = TangentialVelocity::new(vec![1.0, 0.0]);
    let report = fd_check(&space, &region, &moving, &SolverConfig::default(), &steps)?;
    println!(
        "J = {:.10}, formula dJ = {:.10}, dA = {}",
        report.j, report.formula_dj, report.formula_da
    );
    for e in &report.entries {
        println!(
            "t = {:.4}: fd dJ = {:.10}, gap {:.3e}, fd dA = {:.15}",
            e.t,
            e.fd_dj,
            e.gap_j(),
            e.fd_da
        );
    }
    println!("observed order {:?}", report.observed_order);

    let rigid = fd_check(
        &space,
        &region,
        &TangentialVelocity::rigid(&region),
        &SolverConfig::default(),
        &steps,
    )?;
    println!("rigid rotation: formula dJ = {:.3e}", rigid.formula_dj);
    Ok(())
}
