//! Run a configured workflow in-process and write its files, the same way
//! the `membrane` binary does.
//!
//! Usage: `cargo run --example cli_workflow -- <output dir>`

use std::path::PathBuf;

use membrane::cli::{emit_outputs, execute, ClassTag, RunConfig, Workflow};

fn main() -> membrane::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("membrane-linfty"));
    let config = RunConfig::from_json(
        r#"{
            "domain": {"kind": {"disk": {"radius": 1.0}}, "n_boundary": 64, "refinements": 1},
            "problem": {"p": 2.0, "class": "linfty", "A": 1.5707963267948966},
            "ascent": {"multistart": 8, "seed": 3}
        }"#,
    )?;
    let outcome = execute(Workflow::Optimize, &config, Some(ClassTag::Linfty))?;
    println!("J_best = {}", outcome.report.j_best);
    for path in emit_outputs(&outcome, &config.output.formats, &dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
