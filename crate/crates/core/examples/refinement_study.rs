//! FEM against the disk oracle under uniform refinement.

use membrane::oracle::{compare_refinements, FourierLoad};
use membrane::SolverConfig;

fn main() -> membrane::Result<()> {
    let load = FourierLoad::cosine(1, 1.0);
    let rows = compare_refinements(&load, 64, 0, 3, &SolverConfig::default())?;
    println!("n_refine  J_fem            abs_err     ratio");
    for (k, r) in rows.iter().enumerate() {
        let ratio = if k > 0 {
            rows[k - 1].abs_err / r.abs_err
        } else {
            f64::NAN
        };
        println!("{:8}  {:.12}  {:.3e}  {ratio:.2}", r.n_refine, r.j_fem, r.abs_err);
    }
    println!("oracle J = {:.12}", rows[0].j_oracle);
    Ok(())
}
