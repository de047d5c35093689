//! Solves the first benchmark problem end to end on a 32x32 mesh and
//! compares the computed radiation density against its closed form.
//!
//! The benchmark manufactures the direction-independent intensity
//! `1 + sin(2 pi x1) sin(4 pi x2)`, so the converged density should
//! reproduce it and the first angular moments should vanish.
//!
//! Run with `cargo run --example run_problem1`.

use qrdom::driver::{source_iteration, target_functional, SolverConfig};
use qrdom::problems::problem1;
use qrdom::StructuredMesh;

fn main() -> qrdom::Result<()> {
    let problem = problem1(1.0)?;
    let mesh = StructuredMesh::unit_square(32, 32)?;
    let config = SolverConfig::default();

    let solution = source_iteration(&problem, &mesh, &config)?;
    let last = solution.trace.last().expect("converged run has steps");
    println!(
        "converged after {} source steps, {} directions total",
        last.step,
        4 * last.m_curr
    );

    let exact = problem.exact.as_ref().expect("benchmark has a closed form");
    let psi0 = solution.moments.psi0();
    println!("\nfunctionals (computed vs exact):");
    println!("  F(psi0) = {:.6}  [{:.6}]", solution.f_psi0(), exact.mean_psi0);
    println!(
        "  F(psi1) = {:+.2e}  [0],  F(psi2) = {:+.2e}  [0]",
        target_functional(&solution.moments.psi1()),
        target_functional(&solution.moments.psi2())
    );

    println!("\ndensity along the diagonal x2 = x1:");
    println!("{:>6} {:>12} {:>12}", "t", "psi0", "exact");
    for t in [0.1, 0.3, 0.5, 0.7, 0.9] {
        println!(
            "{:>6.1} {:>12.5} {:>12.5}",
            t,
            psi0.eval(t, t)?,
            (exact.psi0)(t, t)
        );
    }

    let eps = mesh.l2_error_boundary(&psi0, exact.psi0.as_ref())?;
    println!("\nedge L2 error of psi0: {eps:.2e}");
    Ok(())
}
