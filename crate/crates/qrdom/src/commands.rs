//! The operations behind the command-line interface.
//!
//! Each command is an ordinary function so library users and tests can run
//! the same orchestration and inspect the numbers directly; the binary only
//! parses arguments, calls one of these, and maps errors to exit codes.
//!
//! All CSV numbers use the shortest decimal representation that round-trips
//! to the same `f64`, which makes bitwise file comparison a meaningful
//! reproducibility check.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::directions::{direction_stream, SequenceKind};
use crate::driver::{source_iteration, target_functional, QrdomSolution};
use crate::error::{Error, Result};
use crate::mesh::{NodalField, StructuredMesh};
use crate::problems::ProblemSpec;

/// Probe parameters along the domain diagonal reported by `run` and
/// `refine`: the points `x(t) = (a, c) + t (b - a, d - c)`.
pub const PROBE_PARAMS: [f64; 3] = [0.1, 0.5, 0.9];

fn probe_points(bounds: (f64, f64, f64, f64)) -> [(f64, f64); 3] {
    let (a, b, c, d) = bounds;
    PROBE_PARAMS.map(|t| (a + t * (b - a), c + t * (d - c)))
}

/// One solved level: functionals, probe values, and the error against the
/// exact radiation density when the problem has one.
#[derive(Debug, Clone)]
pub struct LevelResult {
    /// Cells per side, `nx` (the studies use square meshes).
    pub cells: usize,
    /// `[F(psi0), F(psi1), F(psi2)]`.
    pub f: [f64; 3],
    /// `psi0` at the diagonal probe points `t = 0.1, 0.5, 0.9`.
    pub points: [f64; 3],
    /// L2 error of `psi0` along the domain edges against the exact density,
    /// the norm the refinement tables print as `eps`. The edge trace is
    /// where the weakly imposed inflow data lives, so it refines one order
    /// faster than the interior field.
    pub eps: Option<f64>,
}

fn solve_level(
    config: &RunConfig,
    problem: &ProblemSpec,
    nx: usize,
    ny: usize,
) -> Result<(QrdomSolution, LevelResult)> {
    let (a, b, c, d) = problem.bounds;
    let mesh = StructuredMesh::new(a, b, c, d, nx, ny)?;
    let solution = source_iteration(problem, &mesh, &config.solver_config())?;
    let psi0 = solution.moments.psi0();
    let f = [
        target_functional(&psi0),
        target_functional(&solution.moments.psi1()),
        target_functional(&solution.moments.psi2()),
    ];
    let points =
        probe_points(mesh.bounds()).map(|(x1, x2)| psi0.eval(x1, x2).expect("probe in domain"));
    let eps = match &problem.exact {
        Some(exact) => Some(mesh.l2_error_boundary(&psi0, exact.psi0.as_ref())?),
        None => None,
    };
    Ok((
        solution,
        LevelResult {
            cells: nx,
            f,
            points,
            eps,
        },
    ))
}

fn write_text(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, contents)?;
    Ok(())
}

fn trace_csv(solution: &QrdomSolution) -> String {
    let mut out = String::from("l,m_prev,m_curr,M,F_psi0,rel_change\n");
    for row in &solution.trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.step, row.m_prev, row.m_curr, row.indices, row.f_psi0, row.rel_change
        );
    }
    out
}

/// Everything `run` produced, for callers that want the numbers as well as
/// the files.
#[derive(Debug)]
pub struct RunSummary {
    pub solution: QrdomSolution,
    pub level: LevelResult,
    pub output_dir: PathBuf,
}

/// Solves the configured problem and writes `psi0.csv`, `psi1.csv`,
/// `psi2.csv`, `trace.csv`, and `report.txt` into the output directory.
pub fn cmd_run(config: &RunConfig) -> Result<RunSummary> {
    let problem = config.build_problem()?;
    let (solution, level) = solve_level(config, &problem, config.nx, config.ny)?;

    std::fs::create_dir_all(&config.output_dir)?;
    let fields = [
        ("psi0.csv", solution.moments.psi0()),
        ("psi1.csv", solution.moments.psi1()),
        ("psi2.csv", solution.moments.psi2()),
    ];
    for (name, field) in &fields {
        let mut out = Vec::new();
        field.write_csv(&mut out)?;
        write_text(&config.output_dir.join(name), &out)?;
    }
    write_text(&config.output_dir.join("trace.csv"), &trace_csv(&solution))?;

    let mut report = String::new();
    let mesh = solution.moments.mesh();
    let (a, b, c, d) = mesh.bounds();
    let _ = writeln!(report, "qrdom run report");
    let _ = writeln!(
        report,
        "problem: {} (kappa = {}, sigma_s = {}, a0 = {}, a1 = {})",
        problem.name,
        problem.medium.kappa(),
        problem.medium.sigma_s(),
        problem.phase.a0(),
        problem.phase.a1()
    );
    let _ = writeln!(
        report,
        "mesh: {} x {} cells on [{a}, {b}] x [{c}, {d}]",
        config.nx, config.ny
    );
    let _ = writeln!(
        report,
        "sequence: {}, batch size {}, workers {}",
        config.sequence.name(),
        config.batch_size,
        config.workers
    );
    let _ = writeln!(
        report,
        "tolerances: inner {}, outer {}, linear {}",
        config.tol_inner, config.tol_outer, config.linear_tol
    );
    let last = solution.trace.last().expect("converged runs have steps");
    let _ = writeln!(
        report,
        "converged after {} source steps, {} quadruple indices ({} directions)",
        last.step,
        last.m_curr,
        4 * last.m_curr
    );
    let _ = writeln!(report);
    let _ = writeln!(report, "F(psi0) = {}", level.f[0]);
    let _ = writeln!(report, "F(psi1) = {}", level.f[1]);
    let _ = writeln!(report, "F(psi2) = {}", level.f[2]);
    for ((x1, x2), value) in probe_points(mesh.bounds()).iter().zip(level.points.iter()) {
        let _ = writeln!(report, "psi0({x1}, {x2}) = {value}");
    }
    if let Some(exact) = &problem.exact {
        let _ = writeln!(report);
        let _ = writeln!(report, "exact comparison:");
        let _ = writeln!(
            report,
            "eps = {} (edge L2 error of psi0)",
            level.eps.expect("exact present")
        );
        let _ = writeln!(
            report,
            "F(psi0) exact = {} (diff {:e})",
            exact.mean_psi0,
            (level.f[0] - exact.mean_psi0).abs()
        );
        let _ = writeln!(
            report,
            "F(psi1) exact = {} (diff {:e})",
            exact.mean_psi1,
            (level.f[1] - exact.mean_psi1).abs()
        );
        let _ = writeln!(
            report,
            "F(psi2) exact = {} (diff {:e})",
            exact.mean_psi2,
            (level.f[2] - exact.mean_psi2).abs()
        );
    }
    write_text(&config.output_dir.join("report.txt"), &report)?;

    Ok(RunSummary {
        solution,
        level,
        output_dir: config.output_dir.clone(),
    })
}

/// The exact reference row appended to study tables.
#[derive(Debug, Clone)]
pub struct ExactRow {
    pub f_psi0: f64,
    pub points: [f64; 3],
}

/// Output of [`cmd_refine`].
#[derive(Debug)]
pub struct RefineTable {
    pub rows: Vec<LevelResult>,
    pub exact: Option<ExactRow>,
}

fn refine_csv(table: &RefineTable) -> String {
    let mut out = String::from("cells,eps,F_psi0,psi0_t01,psi0_t05,psi0_t09\n");
    for row in &table.rows {
        let eps = row.eps.map_or(String::new(), |e| e.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.cells, eps, row.f[0], row.points[0], row.points[1], row.points[2]
        );
    }
    if let Some(exact) = &table.exact {
        let _ = writeln!(
            out,
            "exact,,{},{},{},{}",
            exact.f_psi0, exact.points[0], exact.points[1], exact.points[2]
        );
    }
    out
}

fn refine_text(table: &RefineTable) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:<10} {:<10} {:<14} {:<14} {:<14}",
        "cells", "eps", "F(psi0)", "psi0(t=0.1)", "psi0(t=0.5)", "psi0(t=0.9)"
    );
    for row in &table.rows {
        let eps = row.eps.map_or("-".to_string(), |e| format!("{e:.1e}"));
        let _ = writeln!(
            out,
            "{:<10} {:<10} {:<10.6} {:<14.5} {:<14.5} {:<14.5}",
            format!("{0}x{0}", row.cells),
            eps,
            row.f[0],
            row.points[0],
            row.points[1],
            row.points[2]
        );
    }
    if let Some(exact) = &table.exact {
        let _ = writeln!(
            out,
            "{:<10} {:<10} {:<10.6} {:<14.5} {:<14.5} {:<14.5}",
            "exact", "-", exact.f_psi0, exact.points[0], exact.points[1], exact.points[2]
        );
    }
    out
}

/// Runs the configured problem on each square mesh in `levels` (cells per
/// side, strictly increasing) and writes `refine.csv` and `refine.txt`.
pub fn cmd_refine(config: &RunConfig, levels: &[usize]) -> Result<RefineTable> {
    if levels.is_empty() {
        return Err(Error::Config("refine needs at least one mesh level".into()));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!(
            "mesh levels must be strictly increasing, got {levels:?}"
        )));
    }
    let problem = config.build_problem()?;
    let mut rows = Vec::with_capacity(levels.len());
    for &n in levels {
        if n == 0 {
            return Err(Error::Config("mesh level 0 is not a mesh".into()));
        }
        let (_, level) = solve_level(config, &problem, n, n)?;
        rows.push(level);
    }
    let exact = problem.exact.as_ref().map(|exact| ExactRow {
        f_psi0: exact.mean_psi0,
        points: probe_points(problem.bounds).map(|(x1, x2)| (exact.psi0)(x1, x2)),
    });
    let table = RefineTable { rows, exact };
    std::fs::create_dir_all(&config.output_dir)?;
    write_text(&config.output_dir.join("refine.csv"), &refine_csv(&table))?;
    write_text(&config.output_dir.join("refine.txt"), &refine_text(&table))?;
    Ok(table)
}

/// One scattering coefficient of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub sigma_s: f64,
    pub level: LevelResult,
    /// Exact `[F(psi0), F(psi1), F(psi2)]` when available.
    pub exact_f: Option<[f64; 3]>,
}

/// Output of [`cmd_sweep`].
#[derive(Debug)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

fn sweep_csv(table: &SweepTable) -> String {
    let mut out = String::from("sigma_s,eps,F_psi0,F_psi0_exact,F_psi1,F_psi1_exact,F_psi2\n");
    for row in &table.rows {
        let eps = row.level.eps.map_or(String::new(), |e| e.to_string());
        let (e0, e1) = row.exact_f.map_or((String::new(), String::new()), |f| {
            (f[0].to_string(), f[1].to_string())
        });
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.sigma_s, eps, row.level.f[0], e0, row.level.f[1], e1, row.level.f[2]
        );
    }
    out
}

fn sweep_text(table: &SweepTable) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<9} {:<10} {:<10} {:<14} {:<10} {:<14} {:<11}",
        "sigma_s", "eps", "F(psi0)", "F(psi0) exact", "F(psi1)", "F(psi1) exact", "F(psi2)"
    );
    for row in &table.rows {
        let eps = row.level.eps.map_or("-".to_string(), |e| format!("{e:.1e}"));
        let (e0, e1) = row.exact_f.map_or(("-".to_string(), "-".to_string()), |f| {
            (format!("{:.6}", f[0]), format!("{:.6}", f[1]))
        });
        let _ = writeln!(
            out,
            "{:<9} {:<10} {:<10.6} {:<14} {:<10.6} {:<14} {:<11.1e}",
            row.sigma_s, eps, row.level.f[0], e0, row.level.f[1], e1, row.level.f[2]
        );
    }
    out
}

/// Solves the configured problem once per scattering coefficient in
/// `values` and writes `sweep.csv` and `sweep.txt`.
pub fn cmd_sweep(config: &RunConfig, values: &[f64]) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one sigma_s value".into()));
    }
    let mut rows = Vec::with_capacity(values.len());
    for &sigma_s in values {
        let mut level_config = config.clone();
        level_config.sigma_s = Some(sigma_s);
        let problem = level_config.build_problem()?;
        let (_, level) = solve_level(&level_config, &problem, config.nx, config.ny)?;
        let exact_f = problem
            .exact
            .as_ref()
            .map(|e| [e.mean_psi0, e.mean_psi1, e.mean_psi2]);
        rows.push(SweepRow {
            sigma_s,
            level,
            exact_f,
        });
    }
    let table = SweepTable { rows };
    std::fs::create_dir_all(&config.output_dir)?;
    write_text(&config.output_dir.join("sweep.csv"), &sweep_csv(&table))?;
    write_text(&config.output_dir.join("sweep.txt"), &sweep_text(&table))?;
    Ok(table)
}

fn artifact_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::Artifact {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

/// Reads a nodal-field CSV produced by this crate back into a field,
/// inferring the mesh from the node coordinates.
pub fn read_field_csv(path: &Path) -> Result<NodalField> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| artifact_error(path, format!("cannot read: {e}")))?;
    let mut lines = text.lines();
    match lines.next() {
        Some("x1,x2,value") => {}
        Some(other) => {
            return Err(artifact_error(
                path,
                format!("expected header 'x1,x2,value', got '{other}'"),
            ))
        }
        None => return Err(artifact_error(path, "empty file")),
    }
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |what: &str| -> Result<f64> {
            fields
                .next()
                .and_then(|t| t.trim().parse().ok())
                .ok_or_else(|| {
                    artifact_error(path, format!("line {}: bad {what}", lineno + 2))
                })
        };
        rows.push((next("x1")?, next("x2")?, next("value")?));
    }
    if rows.len() < 4 {
        return Err(artifact_error(path, "fewer than 4 nodes"));
    }
    // Nodes are row-major with x1 fastest: the first block shares x2.
    let first_x2 = rows[0].1;
    let ncols = rows.iter().take_while(|r| r.1 == first_x2).count();
    if ncols < 2 || rows.len() % ncols != 0 {
        return Err(artifact_error(path, "rows do not form a rectangular grid"));
    }
    let nrows = rows.len() / ncols;
    if nrows < 2 {
        return Err(artifact_error(path, "grid needs at least 2 node rows"));
    }
    let (a, c) = (rows[0].0, rows[0].1);
    let (b, d) = (rows[ncols - 1].0, rows[rows.len() - 1].1);
    let mesh = StructuredMesh::new(a, b, c, d, ncols - 1, nrows - 1)
        .map_err(|e| artifact_error(path, format!("bad grid geometry: {e}")))?;
    for (k, row) in rows.iter().enumerate() {
        let (x1, x2) = mesh.node_position(k % ncols, k / ncols);
        if (row.0 - x1).abs() > 1e-9 * (1.0 + x1.abs())
            || (row.1 - x2).abs() > 1e-9 * (1.0 + x2.abs())
        {
            return Err(artifact_error(
                path,
                format!("node {k} at ({}, {}) is off the inferred grid", row.0, row.1),
            ));
        }
    }
    NodalField::from_values(&mesh, rows.into_iter().map(|r| r.2).collect())
}

/// Output of [`cmd_linecut`].
#[derive(Debug)]
pub struct LinecutResult {
    /// Sampled `(t, psi0, exact)` triples; `exact` is `None` when no
    /// problem was supplied.
    pub samples: Vec<(f64, f64, Option<f64>)>,
    pub csv: String,
}

/// Samples a stored radiation-density field along the diagonal
/// `x(t) = (a, c) + t (b - a, d - c)` at `samples` uniform parameters.
/// When `config` selects a problem with an exact solution, a third column
/// holds the exact density at the same points.
pub fn cmd_linecut(
    field_path: &Path,
    config: Option<&RunConfig>,
    samples: usize,
) -> Result<LinecutResult> {
    if samples < 2 {
        return Err(Error::Config("linecut needs at least 2 samples".into()));
    }
    let field = read_field_csv(field_path)?;
    let exact = match config {
        Some(config) => config.build_problem()?.exact.map(|e| e.psi0),
        None => None,
    };
    let (a, b, c, d) = field.mesh().bounds();
    let mut out = String::from(if exact.is_some() {
        "t,psi0,exact\n"
    } else {
        "t,psi0\n"
    });
    let mut sampled = Vec::with_capacity(samples);
    for k in 0..samples {
        let t = k as f64 / (samples - 1) as f64;
        let x1 = a + t * (b - a);
        let x2 = c + t * (d - c);
        let value = field.eval(x1, x2)?;
        let exact_value = exact.as_ref().map(|e| e(x1, x2));
        match exact_value {
            Some(ev) => {
                let _ = writeln!(out, "{t},{value},{ev}");
            }
            None => {
                let _ = writeln!(out, "{t},{value}");
            }
        }
        sampled.push((t, value, exact_value));
    }
    Ok(LinecutResult {
        samples: sampled,
        csv: out,
    })
}

/// Renders the first `count` direction quadruples as CSV with columns
/// `i,j,s1,s2,s3`.
pub fn cmd_directions(count: usize, kind: SequenceKind) -> Result<String> {
    if count == 0 {
        return Err(Error::Config("directions needs count >= 1".into()));
    }
    let mut out = String::from("i,j,s1,s2,s3\n");
    for quad in direction_stream(1, count, kind)? {
        for (j, d) in quad.directions.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{},{}", quad.index, j + 1, d.s1, d.s2, d.s3);
        }
    }
    Ok(out)
}

/// Maps an error to the process exit code the command-line interface
/// promises: 2 for configuration and input mistakes, 3 for runtime
/// failures.
pub fn exit_code_for(error: &Error) -> i32 {
    match error {
        Error::Config(_)
        | Error::InvalidParameter(_)
        | Error::MeshMismatch(_)
        | Error::OutsideDomain(..)
        | Error::MissingExactSolution(_)
        | Error::Artifact { .. } => 2,
        Error::LinearSolveFailed { .. }
        | Error::SingularSystem { .. }
        | Error::InnerIterationStalled { .. }
        | Error::SourceIterationCap { .. }
        | Error::GrazingDirection(..)
        | Error::Io(_) => 3,
    }
}
