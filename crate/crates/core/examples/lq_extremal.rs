//! The `L^q` load class: compute the trace-inequality extremal, build the
//! optimal load from it and check the predicted cost.

use membrane::optimize::{lq_optimal_load, steklov_inverse_iteration, trace_extremal};
use membrane::oracle::bessel_i;
use membrane::{build_mesh, DomainSpec, FemSpace, SolverConfig};

fn main() -> membrane::Result<()> {
    let space = FemSpace::new(build_mesh(&DomainSpec::disk(1.0, 64, 2))?);

    let (lambda, _) = steklov_inverse_iteration(&space)?;
    let bessel = bessel_i(1, 1.0) / bessel_i(0, 1.0);
    println!("p = q = 2: inverse iteration S = {lambda:.8}, Bessel I1(1)/I0(1) = {bessel:.8}");

    for (p, q) in [(2.0, 2.0), (3.0, 1.5), (1.5, 4.0)] {
        let solver = SolverConfig::with_p(p);
        let ex = trace_extremal(&space, q, p, &solver)?;
        let lq = lq_optimal_load(&space, &ex)?;
        let sol = space.solve_state(&lq.load, &solver)?;
        let j = space.cost_j(&lq.load, &sol.nodal_u)?;
        println!(
            "p = {p}, q = {q}: S = {:.8} after {} iterations, predicted J = {:.8}, solved J = {j:.8}",
            ex.s, ex.iterations, lq.predicted_j
        );
        if let Some(w) = ex.warning {
            println!("  warning: {w}");
        }
    }
    Ok(())
}
