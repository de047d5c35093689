//! Sweeps the scattering coefficient of the second benchmark and compares
//! the mean moments against their closed forms.
//!
//! The benchmark manufactures `I(x, s) = (1 + s1) exp(-kappa x1 - sigma_s
//! x2)`, whose mean density is `((1 - e^-kappa)/kappa) ((1 -
//! e^-sigma_s)/sigma_s)` and whose first moment is a third of that. The
//! mesh is kept coarse so the example runs in seconds; `qrdom sweep`
//! reproduces the study at 128x128.
//!
//! Run with `cargo run --example scattering_sweep`.

use qrdom::commands::cmd_sweep;
use qrdom::config::RunConfig;

fn main() -> qrdom::Result<()> {
    let out = tempfile::tempdir().expect("temp dir");
    let config = RunConfig {
        problem: "problem2".into(),
        kappa: 0.1,
        nx: 16,
        ny: 16,
        output_dir: out.path().to_path_buf(),
        ..RunConfig::default()
    };

    let table = cmd_sweep(&config, &[0.1, 0.9, 2.5])?;
    println!("{}", std::fs::read_to_string(out.path().join("sweep.txt"))?);

    println!("relative error of the mean density:");
    for row in &table.rows {
        let exact = row.exact_f.expect("benchmark has closed-form means");
        let rel = (row.level.f[0] - exact[0]).abs() / exact[0];
        println!("  sigma_s = {:<4} rel = {rel:.1e}", row.sigma_s);
    }
    Ok(())
}
