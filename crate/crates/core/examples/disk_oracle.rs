//! The Fourier–Bessel oracle: exact costs for Fourier loads and arc
//! indicators on the unit disk at `p = 2`.

use std::f64::consts::PI;

use membrane::oracle::{best_arc_search, mode_multiplier, region_j, solve_disk, FourierLoad, DEFAULT_MODES};
use membrane::BoundaryRegion;

fn main() -> membrane::Result<()> {
    for n in 0..5 {
        println!("mode {n}: I_n(1)/I_n'(1) = {:.12}", mode_multiplier(n));
    }
    let cos = solve_disk(&FourierLoad::cosine(1, 1.0))?;
    println!("f = cos θ: J = {:.12}", cos.j);
    println!("u(0.5, 0) = {:.12}", cos.eval(0.5, 0.0));

    let single = region_j(
        &BoundaryRegion::from_intervals(&[(0.0, PI)], 2.0 * PI)?,
        DEFAULT_MODES,
    );
    let opposite = region_j(
        &BoundaryRegion::from_intervals(&[(0.0, PI / 2.0), (PI, 1.5 * PI)], 2.0 * PI)?,
        DEFAULT_MODES,
    );
    println!("A = π: single arc J = {single:.10}, two opposite quarter arcs J = {opposite:.10}");

    let search = best_arc_search(PI / 2.0, 10, DEFAULT_MODES, 1)?;
    for row in &search.table {
        println!("{:3} {:45} {:.10}", row.config_id, row.description, row.j);
    }
    println!("argmax: {}", search.best);
    Ok(())
}
