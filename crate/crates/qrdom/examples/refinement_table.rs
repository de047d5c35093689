//! Convergence study: solves the first benchmark on a sequence of square
//! meshes and tabulates the edge error, which should fall by roughly 8x per
//! refinement.
//!
//! This is the library-level version of `qrdom refine`; it keeps the meshes
//! small so the example finishes in seconds. The command-line default
//! continues the series to 128x128.
//!
//! Run with `cargo run --example refinement_table`.

use qrdom::commands::cmd_refine;
use qrdom::config::RunConfig;

fn main() -> qrdom::Result<()> {
    let out = tempfile::tempdir().expect("temp dir");
    let config = RunConfig {
        output_dir: out.path().to_path_buf(),
        ..RunConfig::default()
    };

    let table = cmd_refine(&config, &[8, 16, 32])?;

    println!("{}", std::fs::read_to_string(out.path().join("refine.txt"))?);
    let mut previous: Option<f64> = None;
    for row in &table.rows {
        let eps = row.eps.expect("benchmark has a closed form");
        if let Some(prev) = previous {
            println!(
                "{:>3} -> {:>3} cells: error ratio {:.1}",
                row.cells / 2,
                row.cells,
                prev / eps
            );
        }
        previous = Some(eps);
    }
    println!("\nartifacts also written as refine.csv / refine.txt");
    Ok(())
}
