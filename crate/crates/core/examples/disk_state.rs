//! Solve the state equation on the unit disk for `f(θ) = cos θ` at several
//! exponents and compare the `p = 2` cost with the Fourier–Bessel value.

use membrane::oracle::{solve_disk, FourierLoad};
use membrane::{build_mesh, BoundaryLoad, DomainSpec, FemSpace, SolverConfig};

fn main() -> membrane::Result<()> {
    let mesh = build_mesh(&DomainSpec::disk(1.0, 64, 2))?;
    println!(
        "mesh: {} vertices, {} triangles",
        mesh.n_vertices(),
        mesh.triangles().len()
    );
    let space = FemSpace::new(mesh);
    let load = BoundaryLoad::from_angle_fn(space.mesh(), f64::cos);

    for p in [1.5, 2.0, 3.0] {
        let config = SolverConfig::with_p(p);
        let sol = space.solve_state(&load, &config)?;
        let j = space.cost_j(&load, &sol.nodal_u)?;
        let i = space.functional_i(&load, &sol.nodal_u, p)?;
        println!(
            "p = {p}: J = {j:.10}, I(u) = {i:.10}, Newton steps {}, residual {:.2e}",
            sol.newton_iterations, sol.residual_norm
        );
    }

    let exact = solve_disk(&FourierLoad::cosine(1, 1.0))?.j;
    let sol = space.solve_state(&load, &SolverConfig::default())?;
    let j = space.cost_j(&load, &sol.nodal_u)?;
    println!(
        "p = 2 oracle J = {exact:.10}, relative error {:.2e}",
        (j - exact).abs() / exact
    );
    Ok(())
}
