//! Verifies the manufactured problems against the transfer equation
//! itself: plugging the exact intensity and moments into
//!
//! ```text
//! s . grad I + sigma_t I - sigma_s (a0 psi0 + a1 s . psi_vec) - kappa I_b
//! ```
//!
//! must leave only roundoff at every point and direction. This check is
//! independent of the discretization, so it certifies the problem data
//! before any solver runs.
//!
//! Run with `cargo run --example manufactured_residual`.

use qrdom::directions::{direction_stream, SequenceKind};
use qrdom::problems::{problem1, problem2, residual_check};

fn main() -> qrdom::Result<()> {
    let specs = [
        problem1(1.0)?,
        problem2(0.1, 0.9)?,
        problem2(0.1, 5.0)?,
    ];
    for spec in &specs {
        let mut worst = 0.0f64;
        let mut checked = 0u32;
        for quad in direction_stream(1, 16, SequenceKind::ReverseHalton)? {
            for d in &quad.directions {
                for i in 0..7 {
                    for j in 0..7 {
                        let (x1, x2) = (i as f64 / 6.0, j as f64 / 6.0);
                        worst = worst.max(residual_check(spec, d, x1, x2)?.abs());
                        checked += 1;
                    }
                }
            }
        }
        println!(
            "{} (kappa = {}, sigma_s = {}): worst |residual| {worst:.2e} over {checked} samples",
            spec.name,
            spec.medium.kappa(),
            spec.medium.sigma_s()
        );
    }
    Ok(())
}
