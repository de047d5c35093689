//! End-to-end acceptance suite: one test per release criterion, each
//! asserting its stated tolerance against the benchmark targets.
//!
//! The expensive studies (the first benchmark's refinement ladder and the
//! second benchmark's scattering sweep at 128 x 128) are computed once and
//! shared between criteria. Wall-clock budgets are stated for a four-core
//! desktop; on hosts with fewer cores they are scaled by `4 / cores`.

use std::time::{Duration, Instant};

use once_cell::sync::Lazy;
use qrdom::commands::cmd_run;
use qrdom::config::RunConfig;
use qrdom::directions::{direction_stream, quadruple_at, rh_pair, SequenceKind};
use qrdom::driver::{source_iteration, target_functional, IterationTrace, SolverConfig};
use qrdom::linalg::LinearSolveOptions;
use qrdom::problems::{problem1, problem2, residual_check, ProblemSpec};
use qrdom::transport::{Medium, TransportAssembler, DEFAULT_SUPG_C1};
use qrdom::StructuredMesh;

/// Scales a four-core budget to the current host.
fn scaled_budget(four_core: Duration) -> Duration {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    four_core.mul_f64((4.0 / cores as f64).max(1.0))
}

/// One converged full solve plus everything the criteria inspect.
struct Level {
    cells: usize,
    /// L2 error of `psi0` along the domain edges against the exact density.
    eps: f64,
    /// `[F(psi0), F(psi1), F(psi2)]`.
    f: [f64; 3],
    /// `psi0` at the diagonal points `t = 0.1, 0.5, 0.9`.
    probes: [f64; 3],
    trace: Vec<IterationTrace>,
    elapsed: Duration,
}

fn solve_level(spec: &ProblemSpec, n: usize) -> Level {
    let mesh = StructuredMesh::unit_square(n, n).expect("valid mesh");
    let start = Instant::now();
    let solution =
        source_iteration(spec, &mesh, &SolverConfig::default()).expect("solver converges");
    let elapsed = start.elapsed();
    let exact = spec.exact.as_ref().expect("benchmark has a closed form");
    let psi0 = solution.moments.psi0();
    let eps = mesh
        .l2_error_boundary(&psi0, exact.psi0.as_ref())
        .expect("field lives on this mesh");
    let f = [
        target_functional(&psi0),
        target_functional(&solution.moments.psi1()),
        target_functional(&solution.moments.psi2()),
    ];
    let probes = [0.1, 0.5, 0.9].map(|t| psi0.eval(t, t).expect("probe inside domain"));
    Level {
        cells: n,
        eps,
        f,
        probes,
        trace: solution.trace,
        elapsed,
    }
}

/// First benchmark (pure absorption, kappa = 1) on the refinement ladder.
static PROBLEM1_LADDER: Lazy<[Level; 4]> = Lazy::new(|| {
    let spec = problem1(1.0).expect("valid absorption");
    [16, 32, 64, 128].map(|n| solve_level(&spec, n))
});

/// Second benchmark (kappa = 0.1) swept over the scattering coefficient
/// at the finest study mesh.
static PROBLEM2_SWEEP: Lazy<[(f64, Level); 4]> = Lazy::new(|| {
    [0.1, 0.9, 2.5, 5.0].map(|sigma_s| {
        let spec = problem2(0.1, sigma_s).expect("valid coefficients");
        (sigma_s, solve_level(&spec, 128))
    })
});

#[test]
fn criterion_1_manufactured_residuals() {
    let start = Instant::now();
    let specs = [
        problem1(1.0).unwrap(),
        problem2(0.1, 0.9).unwrap(),
        problem2(0.1, 5.0).unwrap(),
    ];
    for spec in &specs {
        let mut worst = 0.0f64;
        for k in 0..200usize {
            let quad = quadruple_at(1 + (k / 4) as u64, SequenceKind::ReverseHalton).unwrap();
            let d = quad.directions[k % 4];
            // Golden-ratio lattice: 200 well-spread interior points.
            let x1 = (0.137 + 0.618_033_988_749_894_9 * k as f64).fract();
            let x2 = (0.289 + 0.754_877_666_246_693 * k as f64).fract();
            let r = residual_check(spec, &d, x1, x2).unwrap().abs();
            worst = worst.max(r);
        }
        assert!(
            worst <= 1e-12,
            "{}: worst manufactured residual {worst:e} exceeds 1e-12",
            spec.name
        );
        println!(
            "criterion 1 [{}]: worst residual {worst:.2e} over 200 (x, s) pairs",
            spec.name
        );
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed < Duration::from_secs(1),
        "residual sampling took {elapsed:?}, budget 1 s"
    );
}

#[test]
fn criterion_2_problem1_refinement() {
    // Reference edge errors for 16, 32, 64, 128 cells per side; the band
    // allows a factor of three either way for sequence-indexing choices.
    let reference = [5.1e-3, 6.1e-4, 7.5e-5, 1.1e-5];
    let ladder = &*PROBLEM1_LADDER;
    for (level, expected) in ladder.iter().zip(reference) {
        assert!(
            level.eps >= expected / 3.0 && level.eps <= expected * 3.0,
            "{0}x{0}: eps {1:e} outside [{2:e}, {3:e}]",
            level.cells,
            level.eps,
            expected / 3.0,
            expected * 3.0
        );
    }
    for pair in ladder.windows(2) {
        let ratio = pair[0].eps / pair[1].eps;
        assert!(
            ratio >= 4.0,
            "error ratio {ratio:.2} from {} to {} cells is below 4",
            pair[0].cells,
            pair[1].cells
        );
    }
    let full: Duration = ladder.iter().map(|l| l.elapsed).sum();
    let subset: Duration = ladder[..3].iter().map(|l| l.elapsed).sum();
    let full_budget = scaled_budget(Duration::from_secs(600));
    let subset_budget = scaled_budget(Duration::from_secs(60));
    assert!(
        full <= full_budget,
        "refinement ladder took {full:.1?}, budget {full_budget:.1?}"
    );
    assert!(
        subset <= subset_budget,
        "16-64 subset took {subset:.1?}, budget {subset_budget:.1?}"
    );
    println!(
        "criterion 2: eps = {:?}, ratios = {:?}, {:.1?} total ({:.1?} for 16-64)",
        [0, 1, 2, 3].map(|k| ladder[k].eps),
        [0, 1, 2].map(|k| ladder[k].eps / ladder[k + 1].eps),
        full,
        subset
    );
}

#[test]
fn criterion_3_problem1_functionals() {
    let fine = &PROBLEM1_LADDER[3];
    assert_eq!(fine.cells, 128);
    let f0_err = (fine.f[0] - 1.0).abs();
    let center_err = (fine.probes[1] - 1.0).abs();
    let corner_err = (fine.probes[0] - 1.55902).abs();
    assert!(f0_err <= 1e-4, "|F(psi0) - 1| = {f0_err:e} exceeds 1e-4");
    assert!(
        center_err <= 1e-3,
        "|psi0(0.5, 0.5) - 1| = {center_err:e} exceeds 1e-3"
    );
    assert!(
        corner_err <= 5e-3,
        "|psi0(0.1, 0.1) - 1.55902| = {corner_err:e} exceeds 5e-3"
    );
    assert!(
        fine.f[1].abs() <= 1e-10,
        "|F(psi1)| = {:e} exceeds 1e-10",
        fine.f[1]
    );
    assert!(
        fine.f[2].abs() <= 1e-10,
        "|F(psi2)| = {:e} exceeds 1e-10",
        fine.f[2]
    );
    println!(
        "criterion 3: F(psi0) = {:.6}, psi0(0.5, 0.5) = {:.5}, psi0(0.1, 0.1) = {:.5}, \
         |F(psi1)| = {:.1e}, |F(psi2)| = {:.1e}",
        fine.f[0],
        fine.probes[1],
        fine.probes[0],
        fine.f[1].abs(),
        fine.f[2].abs()
    );
}

#[test]
fn criterion_4_problem2_sweep() {
    const KAPPA: f64 = 0.1;
    for (sigma_s, level) in PROBLEM2_SWEEP.iter() {
        // Closed-form mean density of the separable exponential solution.
        let f0_exact = ((1.0 - (-KAPPA).exp()) / KAPPA) * ((1.0 - (-sigma_s).exp()) / sigma_s);
        let rel0 = (level.f[0] - f0_exact).abs() / f0_exact;
        let f1_target = f0_exact / 3.0;
        let rel1 = (level.f[1] - f1_target).abs() / f1_target;
        assert!(
            rel0 <= 1e-4,
            "sigma_s = {sigma_s}: F(psi0) relative error {rel0:e} exceeds 1e-4"
        );
        assert!(
            rel1 <= 2e-2,
            "sigma_s = {sigma_s}: F(psi1) relative error {rel1:e} exceeds 2e-2"
        );
        assert!(
            level.f[2].abs() <= 1e-6,
            "sigma_s = {sigma_s}: |F(psi2)| = {:e} exceeds 1e-6",
            level.f[2]
        );
        assert!(
            level.eps <= 1.5e-4,
            "sigma_s = {sigma_s}: eps = {:e} exceeds 1.5e-4",
            level.eps
        );
        println!(
            "criterion 4 [sigma_s = {sigma_s}]: rel F(psi0) {rel0:.1e}, rel F(psi1) {rel1:.1e}, \
             |F(psi2)| {:.1e}, eps {:.1e}, {:.1?}",
            level.f[2].abs(),
            level.eps,
            level.elapsed
        );
    }
    let total: Duration = PROBLEM2_SWEEP.iter().map(|(_, l)| l.elapsed).sum();
    let budget = scaled_budget(Duration::from_secs(900));
    assert!(
        total <= budget,
        "sweep took {total:.1?}, budget {budget:.1?}"
    );
}

#[test]
fn criterion_5_direction_sequence() {
    // First eight sequence pairs, frozen by hand from the digit-permutation
    // rule: base 2 is plain van der Corput, base 3 swaps digits 1 and 2.
    // Every value is an exact dyadic or triadic rational, so the comparison
    // is bit-for-bit.
    let expected = [
        (1.0 / 2.0, 2.0 / 3.0),
        (1.0 / 4.0, 1.0 / 3.0),
        (3.0 / 4.0, 2.0 / 9.0),
        (1.0 / 8.0, 8.0 / 9.0),
        (5.0 / 8.0, 5.0 / 9.0),
        (3.0 / 8.0, 1.0 / 9.0),
        (7.0 / 8.0, 7.0 / 9.0),
        (1.0 / 16.0, 4.0 / 9.0),
    ];
    for (i, (u1, u2)) in expected.iter().enumerate() {
        let p = rh_pair(i as u64 + 1).unwrap();
        assert_eq!(p.u1, *u1, "u1 at index {}", i + 1);
        assert_eq!(p.u2, *u2, "u2 at index {}", i + 1);
    }

    let quads = direction_stream(1, 256, SequenceKind::ReverseHalton).unwrap();
    let mut worst_norm = 0.0f64;
    let (mut sum_one, mut sum_s1_sq, mut sum_s3) = (0.0, 0.0, 0.0);
    for quad in &quads {
        for d in &quad.directions {
            worst_norm = worst_norm.max((d.norm() - 1.0).abs());
            sum_one += 1.0;
            sum_s1_sq += d.s1 * d.s1;
            sum_s3 += d.s3;
        }
    }
    let n = (4 * quads.len()) as f64;
    let means = [sum_one / n, sum_s1_sq / n, sum_s3 / n];
    assert!(
        worst_norm <= 1e-14,
        "worst norm deviation {worst_norm:e} exceeds 1e-14"
    );
    for (mean, target) in means.iter().zip([1.0, 1.0 / 3.0, 0.5]) {
        assert!(
            (mean - target).abs() <= 5e-3,
            "sequence average {mean} deviates from {target} by more than 5e-3"
        );
    }
    println!(
        "criterion 5: first 8 pairs exact, worst norm deviation {worst_norm:.1e}, \
         averages {means:?} vs [1, 1/3, 1/2]"
    );
}

#[test]
fn criterion_6_discretization_properties() {
    let mesh = StructuredMesh::unit_square(24, 24).unwrap();
    let assembler = TransportAssembler::new(&mesh);
    let opts = LinearSolveOptions::default();
    let d = quadruple_at(3, SequenceKind::ReverseHalton).unwrap().directions[2];

    // Constant data reproduce the constant to near machine precision.
    let medium = Medium::new(0.4, 0.0).unwrap();
    let constant = 1.75;
    let (field, _) = assembler
        .solve_direction(
            &d,
            &medium,
            DEFAULT_SUPG_C1,
            &|_, _| medium.sigma_t() * constant,
            &|_, _| constant,
            &opts,
        )
        .unwrap();
    let worst = field
        .values()
        .iter()
        .map(|v| (v - constant).abs())
        .fold(0.0, f64::max);
    assert!(
        worst <= 1e-10,
        "constant solve deviates by {worst:e}, tolerance 1e-10"
    );

    // Zero data give the zero field exactly.
    let (zero, _) = assembler
        .solve_direction(&d, &medium, DEFAULT_SUPG_C1, &|_, _| 0.0, &|_, _| 0.0, &opts)
        .unwrap();
    assert!(zero.values().iter().all(|v| *v == 0.0));

    // The linear-solve residual contract, recomputed here from a fresh
    // assembly and the public matrix-vector product rather than the stats
    // the solver reports.
    let spec = problem2(0.1, 0.9).unwrap();
    let exact = spec.exact.as_ref().unwrap();
    let s = d.components();
    let (a0, a1) = (spec.phase.a0(), spec.phase.a1());
    let sigma_s = spec.medium.sigma_s();
    let volume = |x1: f64, x2: f64| {
        sigma_s
            * (a0 * (exact.psi0)(x1, x2)
                + a1 * (d.s1 * (exact.psi1)(x1, x2) + d.s2 * (exact.psi2)(x1, x2)))
            + (spec.emission)(x1, x2, s)
    };
    let inflow = |x1: f64, x2: f64| (exact.intensity)(x1, x2, s);
    let (solved, _) = assembler
        .solve_direction(&d, &spec.medium, DEFAULT_SUPG_C1, &volume, &inflow, &opts)
        .unwrap();
    let system = assembler
        .assemble(&d, &spec.medium, DEFAULT_SUPG_C1, &volume, &inflow)
        .unwrap();
    let mut ax = vec![0.0; system.rhs.len()];
    system.matrix.matvec(solved.values(), &mut ax);
    let rnorm = system
        .rhs
        .iter()
        .zip(&ax)
        .map(|(b, y)| (b - y) * (b - y))
        .sum::<f64>()
        .sqrt();
    let bnorm = system.rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
    let rel = rnorm / bnorm;
    assert!(
        rel <= 1e-12,
        "recomputed relative residual {rel:e} exceeds 1e-12"
    );

    // Convergence order of a single-direction solve with the scattering
    // source frozen at the exact moments: second order until the weak
    // boundary treatment caps it, so at least 1.8.
    let d = quadruple_at(2, SequenceKind::ReverseHalton).unwrap().directions[0];
    let s = d.components();
    let volume = |x1: f64, x2: f64| {
        sigma_s
            * (a0 * (exact.psi0)(x1, x2)
                + a1 * (d.s1 * (exact.psi1)(x1, x2) + d.s2 * (exact.psi2)(x1, x2)))
            + (spec.emission)(x1, x2, s)
    };
    let inflow = |x1: f64, x2: f64| (exact.intensity)(x1, x2, s);
    let mut errors = Vec::new();
    for n in [16usize, 32, 64] {
        let mesh = StructuredMesh::unit_square(n, n).unwrap();
        let assembler = TransportAssembler::new(&mesh);
        let (field, _) = assembler
            .solve_direction(&d, &spec.medium, DEFAULT_SUPG_C1, &volume, &inflow, &opts)
            .unwrap();
        errors.push(
            mesh.l2_error(&field, |x1, x2| (exact.intensity)(x1, x2, s))
                .unwrap(),
        );
    }
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    for order in &orders {
        assert!(
            *order >= 1.8,
            "observed order {order:.2} below 1.8 (errors {errors:?})"
        );
    }
    println!(
        "criterion 6: constant deviation {worst:.1e}, zero exact, recomputed residual {rel:.1e}, \
         orders {orders:?}"
    );
}

#[test]
fn criterion_7_worker_determinism() {
    let base = tempfile::tempdir().unwrap();
    let fields = ["psi0.csv", "psi1.csv", "psi2.csv"];
    let mut reference: Option<[Vec<u8>; 3]> = None;
    for workers in [1usize, 2, 8] {
        let config = RunConfig {
            problem: "problem2".into(),
            kappa: 0.1,
            sigma_s: Some(0.9),
            nx: 16,
            ny: 16,
            workers,
            output_dir: base.path().join(format!("workers{workers}")),
            ..RunConfig::default()
        };
        cmd_run(&config).unwrap();
        let bytes = fields.map(|name| std::fs::read(config.output_dir.join(name)).unwrap());
        match &reference {
            None => reference = Some(bytes),
            Some(first) => {
                for ((a, b), name) in first.iter().zip(&bytes).zip(fields) {
                    assert_eq!(
                        a, b,
                        "{name} differs between 1 worker and {workers} workers"
                    );
                }
            }
        }
    }
    println!("criterion 7: moment artifacts bitwise identical across 1, 2, and 8 workers");
}

#[test]
fn criterion_8_ordinate_workload() {
    let level = &PROBLEM1_LADDER[1];
    assert_eq!(level.cells, 32);
    let counts: Vec<u64> = level.trace.iter().map(|row| row.indices).collect();
    for (row, m) in level.trace.iter().zip(&counts) {
        assert!(
            (100..=1000).contains(m),
            "step {}: per-step sequence count {m} outside [100, 1000]",
            row.step
        );
    }
    println!(
        "criterion 8: {} steps, per-step counts min {} max {}",
        counts.len(),
        counts.iter().min().unwrap(),
        counts.iter().max().unwrap()
    );
}
