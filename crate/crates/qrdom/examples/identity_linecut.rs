//! Round-trips a solved field through its CSV artifact and samples it along
//! the domain diagonal.
//!
//! `cmd_run` writes the moment fields as `x1,x2,value` CSV; `cmd_linecut`
//! reads such a file back (inferring the mesh from the coordinates) and
//! samples the density along `x(t) = (t, t)`, adding the exact column when
//! the problem has one. The stored artifact is the interface: everything
//! here flows through the files, as it would for an external plotting tool.
//!
//! Run with `cargo run --example identity_linecut`.

use qrdom::commands::{cmd_linecut, cmd_run};
use qrdom::config::RunConfig;

fn main() -> qrdom::Result<()> {
    let out = tempfile::tempdir().expect("temp dir");
    let config = RunConfig {
        nx: 24,
        ny: 24,
        output_dir: out.path().to_path_buf(),
        ..RunConfig::default()
    };

    let summary = cmd_run(&config)?;
    println!(
        "solved {}: artifacts in {}",
        config.problem,
        summary.output_dir.display()
    );

    let cut = cmd_linecut(&summary.output_dir.join("psi0.csv"), Some(&config), 9)?;
    println!("\n{:>6} {:>12} {:>12}", "t", "psi0", "exact");
    let mut worst = 0.0f64;
    for (t, value, exact) in &cut.samples {
        let exact = exact.expect("problem has a closed form");
        println!("{t:>6.3} {value:>12.5} {exact:>12.5}");
        worst = worst.max((value - exact).abs());
    }
    println!("\nworst |psi0 - exact| along the cut: {worst:.2e}");
    Ok(())
}
