//! Convergence order of one stabilized transport solve, isolated from the
//! angular iteration.
//!
//! Freezing the scattering source at the second benchmark's exact moments
//! turns the problem into a single advection-reaction equation with a known
//! solution, so the spatial discretization can be measured on its own: the
//! L2 error should fall at second order until the weak boundary treatment
//! caps it near 2.
//!
//! Run with `cargo run --example single_direction_supg`.

use qrdom::directions::{direction_stream, SequenceKind};
use qrdom::linalg::LinearSolveOptions;
use qrdom::problems::problem2;
use qrdom::transport::{TransportAssembler, DEFAULT_SUPG_C1};
use qrdom::StructuredMesh;

fn main() -> qrdom::Result<()> {
    let spec = problem2(0.1, 0.9)?;
    let exact = spec.exact.as_ref().expect("benchmark has a closed form");
    let sigma_s = spec.medium.sigma_s();
    let (a0, a1) = (spec.phase.a0(), spec.phase.a1());

    let d = direction_stream(2, 1, SequenceKind::ReverseHalton)?[0].directions[0];
    let s = d.components();
    println!(
        "direction s = ({:.6}, {:.6}, {:.6}), quadrant {}",
        d.s1, d.s2, d.s3, d.quadrant
    );

    // The full volumetric right-hand side with the scattering integral
    // evaluated from the exact moments.
    let psi0 = exact.psi0.clone();
    let psi1 = exact.psi1.clone();
    let psi2 = exact.psi2.clone();
    let emission = spec.emission.clone();
    let volume = move |x1: f64, x2: f64| {
        sigma_s * (a0 * psi0(x1, x2) + a1 * (d.s1 * psi1(x1, x2) + d.s2 * psi2(x1, x2)))
            + emission(x1, x2, s)
    };
    let intensity = exact.intensity.clone();
    let boundary = exact.intensity.clone();
    let inflow = move |x1: f64, x2: f64| boundary(x1, x2, s);

    println!("\n{:>7} {:>12} {:>8}", "cells", "L2 error", "order");
    let mut previous: Option<f64> = None;
    for n in [16usize, 32, 64] {
        let mesh = StructuredMesh::unit_square(n, n)?;
        let assembler = TransportAssembler::new(&mesh);
        let (field, _) = assembler.solve_direction(
            &d,
            &spec.medium,
            DEFAULT_SUPG_C1,
            &volume,
            &inflow,
            &LinearSolveOptions::default(),
        )?;
        let err = mesh.l2_error(&field, |x1, x2| intensity(x1, x2, s))?;
        match previous {
            Some(prev) => println!("{:>7} {:>12.3e} {:>8.2}", n, err, (prev / err).log2()),
            None => println!("{:>7} {:>12.3e} {:>8}", n, err, "-"),
        }
        previous = Some(err);
    }
    Ok(())
}
