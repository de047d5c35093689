//! Source iteration driven by a continuing low-discrepancy direction stream.
//!
//! Each outer step freezes the scattering source at the previous moment
//! estimates and accumulates new transport solves in batches of direction
//! quadruples, always continuing the quasi-random sequence where the last
//! step left off. A step ends when the running estimate of the mean
//! radiation density stabilizes; the outer loop ends when consecutive steps
//! agree.
//!
//! All reductions happen in sequence order regardless of how many worker
//! threads solve the per-direction systems, so results are bitwise
//! reproducible across thread counts.

use std::sync::Arc;

use rayon::prelude::*;

use crate::directions::{direction_stream, Quadruple, SequenceKind};
use crate::error::{Error, Result};
use crate::linalg::LinearSolveOptions;
use crate::mesh::{NodalField, StructuredMesh};
use crate::problems::ProblemSpec;
use crate::transport::{PhaseCoefficients, TransportAssembler, DEFAULT_SUPG_C1};

/// Running sums of the angular moments over all directions consumed so far.
#[derive(Debug, Clone)]
pub struct MomentSet {
    mesh: Arc<StructuredMesh>,
    sum0: Vec<f64>,
    sum1: Vec<f64>,
    sum2: Vec<f64>,
    n_dirs: u64,
}

/// The nodal sums contributed by one direction quadruple, combined in a
/// fixed order so the reduction is deterministic.
#[derive(Debug, Clone)]
pub struct QuadrupleContribution {
    pub index: u64,
    sum0: Vec<f64>,
    sum1: Vec<f64>,
    sum2: Vec<f64>,
}

impl QuadrupleContribution {
    /// Combines the four per-direction intensity fields of `quad`. The
    /// summation order over the four quadrants is fixed.
    pub fn from_fields(quad: &Quadruple, fields: &[NodalField; 4]) -> Result<Self> {
        let mesh = fields[0].mesh();
        for (f, d) in fields.iter().zip(quad.directions.iter()) {
            if !Arc::ptr_eq(f.mesh(), mesh) && f.mesh().divisions() != mesh.divisions() {
                return Err(Error::MeshMismatch(
                    "quadruple fields live on different meshes".into(),
                ));
            }
            if f.values().len() != mesh.node_count() {
                return Err(Error::MeshMismatch(format!(
                    "field for direction {} has {} values, mesh has {} nodes",
                    d.seq_index,
                    f.values().len(),
                    mesh.node_count()
                )));
            }
        }
        let n = mesh.node_count();
        let mut sum0 = vec![0.0; n];
        let mut sum1 = vec![0.0; n];
        let mut sum2 = vec![0.0; n];
        for (f, d) in fields.iter().zip(quad.directions.iter()) {
            let vals = f.values();
            for k in 0..n {
                sum0[k] += vals[k];
                sum1[k] += d.s1 * vals[k];
                sum2[k] += d.s2 * vals[k];
            }
        }
        Ok(Self {
            index: quad.index,
            sum0,
            sum1,
            sum2,
        })
    }
}

impl MomentSet {
    pub fn zero(mesh: Arc<StructuredMesh>) -> Self {
        let n = mesh.node_count();
        Self {
            mesh,
            sum0: vec![0.0; n],
            sum1: vec![0.0; n],
            sum2: vec![0.0; n],
            n_dirs: 0,
        }
    }

    pub fn mesh(&self) -> &Arc<StructuredMesh> {
        &self.mesh
    }

    /// Number of directions folded in so far (four per quadruple).
    pub fn directions_used(&self) -> u64 {
        self.n_dirs
    }

    /// Folds one quadruple's sums into the running totals.
    pub fn add_contribution(&mut self, c: &QuadrupleContribution) -> Result<()> {
        let n = self.mesh.node_count();
        if c.sum0.len() != n {
            return Err(Error::MeshMismatch(format!(
                "contribution has {} values, mesh has {n} nodes",
                c.sum0.len()
            )));
        }
        for k in 0..n {
            self.sum0[k] += c.sum0[k];
            self.sum1[k] += c.sum1[k];
            self.sum2[k] += c.sum2[k];
        }
        self.n_dirs += 4;
        Ok(())
    }

    fn mean_field(&self, sums: &[f64]) -> NodalField {
        let values = if self.n_dirs == 0 {
            vec![0.0; sums.len()]
        } else {
            let inv = 1.0 / self.n_dirs as f64;
            sums.iter().map(|s| s * inv).collect()
        };
        NodalField::from_values(&self.mesh, values).expect("sums match mesh")
    }

    /// Radiation density estimate `psi0` (sample mean over directions).
    pub fn psi0(&self) -> NodalField {
        self.mean_field(&self.sum0)
    }

    /// First-moment estimate `psi1` (mean of `s1 I`).
    pub fn psi1(&self) -> NodalField {
        self.mean_field(&self.sum1)
    }

    /// Second-moment estimate `psi2` (mean of `s2 I`).
    pub fn psi2(&self) -> NodalField {
        self.mean_field(&self.sum2)
    }
}

/// One row of the outer-iteration history.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    /// Outer step number, starting at 1.
    pub step: usize,
    /// Sequence position before the step (last index consumed previously).
    pub m_prev: u64,
    /// Sequence position after the step.
    pub m_curr: u64,
    /// Quadruple indices consumed by this step.
    pub indices: u64,
    /// Mean radiation density after this step.
    pub f_psi0: f64,
    /// Relative change of `f_psi0` against the previous step.
    pub rel_change: f64,
}

/// Tuning knobs for the nested iteration.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Quadruple indices added per inner batch.
    pub batch_size: usize,
    /// Batches an inner step must consume before testing convergence.
    pub min_batches: usize,
    /// Upper bound on batches per step; exceeding it is an error.
    pub max_batches: usize,
    /// Relative tolerance for the inner (batch) loop.
    pub tol_inner: f64,
    /// Relative tolerance for the outer (source) loop.
    pub tol_outer: f64,
    /// Upper bound on outer steps; exceeding it is an error.
    pub max_source_steps: usize,
    /// Worker threads for per-direction solves; 0 picks the host default.
    pub workers: usize,
    pub sequence: SequenceKind,
    pub supg_c1: f64,
    pub linear: LinearSolveOptions,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            // Four batches put every step's ordinate count in the hundreds,
            // which keeps the per-step moment estimates out of the noisy
            // few-dozen-direction regime.
            min_batches: 4,
            max_batches: 512,
            tol_inner: 1e-5,
            tol_outer: 1e-5,
            max_source_steps: 200,
            workers: 0,
            sequence: SequenceKind::ReverseHalton,
            supg_c1: DEFAULT_SUPG_C1,
            linear: LinearSolveOptions::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch_size must be positive".into()));
        }
        if self.min_batches == 0 || self.max_batches < self.min_batches {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= min_batches <= max_batches, got {} and {}",
                self.min_batches, self.max_batches
            )));
        }
        if !(self.tol_inner > 0.0) || !(self.tol_outer > 0.0) {
            return Err(Error::InvalidParameter(
                "inner and outer tolerances must be positive".into(),
            ));
        }
        if self.max_source_steps == 0 {
            return Err(Error::InvalidParameter(
                "max_source_steps must be positive".into(),
            ));
        }
        if !(self.supg_c1 > 0.0) {
            return Err(Error::InvalidParameter(
                "supg_c1 must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Relative change of `current` against `previous`, falling back to the
/// absolute change when the reference is effectively zero.
pub fn relative_change(current: f64, previous: f64) -> f64 {
    let diff = (current - previous).abs();
    if previous.abs() < 1e-14 {
        diff
    } else {
        diff / previous.abs()
    }
}

/// Mean of a nodal field over the domain, `(1/|D|) integral of f`.
pub fn target_functional(field: &NodalField) -> f64 {
    let integral = field
        .mesh()
        .integrate(field)
        .expect("field integrates on its own mesh");
    integral / field.mesh().area()
}

/// Evaluates the scattering source seen by direction `d`:
/// `a0 psi0 + a1 (s1 psi1 + s2 psi2)` as a nodal field. The scattering
/// coefficient itself is applied by the caller.
pub fn scatter_source(
    moments: &MomentSet,
    d: &crate::directions::Direction,
    phase: &PhaseCoefficients,
) -> NodalField {
    let n = moments.mesh.node_count();
    let mut values = vec![0.0; n];
    if moments.n_dirs > 0 {
        let inv = 1.0 / moments.n_dirs as f64;
        let a0 = phase.a0();
        let a1 = phase.a1();
        for k in 0..n {
            values[k] = inv
                * (a0 * moments.sum0[k] + a1 * (d.s1 * moments.sum1[k] + d.s2 * moments.sum2[k]));
        }
    }
    NodalField::from_values(&moments.mesh, values).expect("sized to mesh")
}

/// The converged output of [`source_iteration`].
#[derive(Debug)]
pub struct QrdomSolution {
    pub moments: MomentSet,
    pub trace: Vec<IterationTrace>,
}

impl QrdomSolution {
    /// Mean radiation density of the final step.
    pub fn f_psi0(&self) -> f64 {
        self.trace.last().map_or(0.0, |t| t.f_psi0)
    }

    /// Total quadruple indices consumed across all steps.
    pub fn indices_used(&self) -> u64 {
        self.trace.last().map_or(0, |t| t.m_curr)
    }
}

fn solve_quadruple(
    assembler: &TransportAssembler,
    problem: &ProblemSpec,
    previous: &MomentSet,
    quad: &Quadruple,
    config: &SolverConfig,
) -> Result<QuadrupleContribution> {
    let sigma_s = problem.medium.sigma_s();
    let scatter_active = sigma_s > 0.0 && previous.n_dirs > 0;
    // One banded factorization serves all four sign-mirrored directions.
    let factors = assembler.factor_quadruple(quad, &problem.medium, config.supg_c1)?;
    let mut fields: Vec<NodalField> = Vec::with_capacity(4);
    for d in &quad.directions {
        let s = d.components();
        let emission = &problem.emission;
        let inflow = |x1: f64, x2: f64| (problem.inflow)(x1, x2, s);
        let field = if scatter_active {
            let scatter = scatter_source(previous, d, &problem.phase);
            let volume = move |x1: f64, x2: f64| {
                sigma_s * scatter.eval(x1, x2).expect("inside domain") + emission(x1, x2, s)
            };
            assembler
                .solve_factored(
                    &factors,
                    d,
                    &problem.medium,
                    config.supg_c1,
                    &volume,
                    &inflow,
                    &config.linear,
                )?
                .0
        } else {
            let volume = move |x1: f64, x2: f64| emission(x1, x2, s);
            assembler
                .solve_factored(
                    &factors,
                    d,
                    &problem.medium,
                    config.supg_c1,
                    &volume,
                    &inflow,
                    &config.linear,
                )?
                .0
        };
        fields.push(field);
    }
    let fields: [NodalField; 4] = fields.try_into().expect("four directions per quadruple");
    QuadrupleContribution::from_fields(quad, &fields)
}

/// Runs one inner step: consumes batches of quadruples starting at sequence
/// index `start`, folding them into a fresh moment accumulator, until the
/// mean density of the accumulated estimate stabilizes.
fn inner_step(
    assembler: &TransportAssembler,
    problem: &ProblemSpec,
    previous: &MomentSet,
    start: u64,
    config: &SolverConfig,
    pool: &rayon::ThreadPool,
    step: usize,
) -> Result<(MomentSet, u64)> {
    let mut acc = MomentSet::zero(Arc::clone(assembler.mesh()));
    let mut f_prev: Option<f64> = None;
    let mut batches: u64 = 0;
    loop {
        let first = start + batches * config.batch_size as u64;
        let quads = direction_stream(first, config.batch_size, config.sequence)?;
        // Solves may finish out of order across workers; collect preserves
        // the input order, and the fold below consumes it sequentially.
        let parts: Vec<Result<QuadrupleContribution>> = pool.install(|| {
            quads
                .par_iter()
                .map(|q| solve_quadruple(assembler, problem, previous, q, config))
                .collect()
        });
        for part in parts {
            acc.add_contribution(&part?)?;
        }
        batches += 1;
        let f_now = target_functional(&acc.psi0());
        if batches >= config.min_batches as u64 {
            if let Some(prev) = f_prev {
                if relative_change(f_now, prev) < config.tol_inner {
                    return Ok((acc, batches));
                }
            }
        }
        if batches >= config.max_batches as u64 {
            return Err(Error::InnerIterationStalled {
                source_step: step,
                batches: batches as usize,
            });
        }
        f_prev = Some(f_now);
    }
}

/// Solves `problem` on `mesh` by source iteration over a continuing
/// quasi-random direction stream.
///
/// Outer steps stop once the mean radiation density of two consecutive
/// steps agrees to `tol_outer` (checked from the second step on). The
/// direction sequence never restarts: each step picks up at the index after
/// the last one consumed.
pub fn source_iteration(
    problem: &ProblemSpec,
    mesh: &Arc<StructuredMesh>,
    config: &SolverConfig,
) -> Result<QrdomSolution> {
    config.validate()?;
    if mesh.bounds() != problem.bounds {
        return Err(Error::MeshMismatch(format!(
            "mesh bounds {:?} do not match problem domain {:?}",
            mesh.bounds(),
            problem.bounds
        )));
    }
    let assembler = TransportAssembler::new(mesh);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot build worker pool: {e}")))?;

    let mut moments = MomentSet::zero(Arc::clone(mesh));
    let mut trace: Vec<IterationTrace> = Vec::new();
    let mut consumed: u64 = 0;
    let mut f_prev = 0.0;

    for step in 1..=config.max_source_steps {
        let (step_moments, batches) = inner_step(
            &assembler,
            problem,
            &moments,
            consumed + 1,
            config,
            &pool,
            step,
        )?;
        let indices = batches * config.batch_size as u64;
        let f_now = target_functional(&step_moments.psi0());
        let rel = relative_change(f_now, f_prev);
        trace.push(IterationTrace {
            step,
            m_prev: consumed,
            m_curr: consumed + indices,
            indices,
            f_psi0: f_now,
            rel_change: rel,
        });
        consumed += indices;
        moments = step_moments;
        if step >= 2 && rel < config.tol_outer {
            return Ok(QrdomSolution { moments, trace });
        }
        f_prev = f_now;
    }
    Err(Error::SourceIterationCap {
        cap: config.max_source_steps,
        trace,
    })
}
