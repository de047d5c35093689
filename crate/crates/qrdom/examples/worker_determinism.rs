//! Shows that the worker count changes only wall time, never bits.
//!
//! Per-direction transport solves run on a thread pool, but every reduction
//! over directions happens in sequence order, so the converged moment
//! fields are bitwise identical for any worker count.
//!
//! Run with `cargo run --example worker_determinism`.

use qrdom::driver::{source_iteration, SolverConfig};
use qrdom::problems::problem2;
use qrdom::StructuredMesh;

fn main() -> qrdom::Result<()> {
    let problem = problem2(0.1, 0.9)?;
    let mesh = StructuredMesh::unit_square(16, 16)?;

    let mut reference: Option<Vec<u64>> = None;
    for workers in [1usize, 2, 8] {
        let config = SolverConfig {
            workers,
            ..SolverConfig::default()
        };
        let solution = source_iteration(&problem, &mesh, &config)?;
        let bits: Vec<u64> = solution
            .moments
            .psi0()
            .values()
            .iter()
            .map(|v| v.to_bits())
            .collect();
        match &reference {
            None => {
                println!(
                    "workers = {workers}: F(psi0) = {:.10} (reference)",
                    solution.f_psi0()
                );
                reference = Some(bits);
            }
            Some(expected) => {
                let identical = expected == &bits;
                println!(
                    "workers = {workers}: F(psi0) = {:.10} ({})",
                    solution.f_psi0(),
                    if identical { "bitwise identical" } else { "MISMATCH" }
                );
                assert!(identical, "worker count changed the result");
            }
        }
    }
    Ok(())
}
