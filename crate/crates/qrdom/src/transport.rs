//! Per-direction transport solves with streamline-upwind Petrov-Galerkin
//! stabilization.
//!
//! For a fixed unit direction `s` the monochromatic transfer equation on the
//! rectangle reads
//!
//! ```text
//! s . grad I + sigma_t I = f,    f(x) = sigma_s Psi(x, s) + kappa I_b(x, s),
//! ```
//!
//! with the intensity prescribed on the two inflow sides. Only the in-plane
//! components `(s1, s2)` enter the advection; `s3` matters solely through
//! the angular weights applied elsewhere. Testing against `v + delta s .
//! grad v` and integrating the advection term by parts gives the stabilized
//! weak form assembled here:
//!
//! ```text
//! -(I, s . grad v) + (I, s.n v)_out + delta (s . grad I, s . grad v)
//!   + sigma_t (I, v + delta s . grad v)
//!   = (f, v + delta s . grad v) + (|s.n| I_in, v)_in .
//! ```
//!
//! The inflow data enters weakly through the boundary term; no rows are
//! eliminated. On a uniform mesh every cell contributes the same 4x4 block,
//! so assembly combines six direction-independent element integrals (mass,
//! two advection moments, three gradient products) that are precomputed per
//! mesh, and scatters the combined block through a cached index map. All
//! element integrands are polynomials integrated exactly by the tensor 2x2
//! Gauss rule.
//!
//! Systems are solved directly. The lexicographic node numbering keeps the
//! stencil inside a narrow band, so one banded LU factorization per matrix
//! is cheap, and directions that differ only in component signs have
//! matrices identical up to mirroring the node numbering, letting the four
//! members of a sign quadruple share one factorization. Every solve ends
//! with iterative refinement against the direction's own assembled matrix,
//! so the reported residual is the true `||b - Ax|| / ||b||`.

use std::sync::Arc;

use crate::directions::{Direction, Quadruple};
use crate::error::{Error, Result};
use crate::linalg::{BandedLu, CsrMatrix, CsrPattern, LinearSolveOptions, SolveStats};
use crate::mesh::{
    basis_gradients, basis_values, inflow_edges, outflow_edges, Edge, NodalField, StructuredMesh,
    GAUSS2,
};

/// Absorption and scattering coefficients of a homogeneous medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Medium {
    kappa: f64,
    sigma_s: f64,
}

impl Medium {
    pub fn new(kappa: f64, sigma_s: f64) -> Result<Self> {
        if !(kappa >= 0.0 && sigma_s >= 0.0) || !kappa.is_finite() || !sigma_s.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "medium coefficients must be finite and nonnegative, got kappa = {kappa}, \
                 sigma_s = {sigma_s}"
            )));
        }
        Ok(Medium { kappa, sigma_s })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn sigma_s(&self) -> f64 {
        self.sigma_s
    }

    /// Extinction coefficient `kappa + sigma_s`.
    pub fn sigma_t(&self) -> f64 {
        self.kappa + self.sigma_s
    }
}

/// Coefficients of the linear anisotropic phase function
/// `Phi(s', s) = a0 + a1 s' . s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCoefficients {
    a0: f64,
    a1: f64,
}

impl PhaseCoefficients {
    pub fn new(a0: f64, a1: f64) -> Result<Self> {
        if !(a0 > 0.0) || !a0.is_finite() || !a1.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "phase coefficient a0 must be positive, got {a0}"
            )));
        }
        if a0 - a1.abs() < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "phase function must stay nonnegative: a0 - |a1| = {}",
                a0 - a1.abs()
            )));
        }
        Ok(PhaseCoefficients { a0, a1 })
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }
}

/// Default stabilization constant in the SUPG parameter.
pub const DEFAULT_SUPG_C1: f64 = 2.0;

/// The SUPG parameter `delta = (c1^2 / h^2 + sigma_t)^(-1/2)` with `h` the
/// larger cell extent.
pub fn supg_delta(h: f64, sigma_t: f64, c1: f64) -> Result<f64> {
    if !(h > 0.0) || !(c1 > 0.0) || !(sigma_t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "supg_delta needs h > 0, c1 > 0, sigma_t >= 0; got ({h}, {sigma_t}, {c1})"
        )));
    }
    Ok(1.0 / (c1 * c1 / (h * h) + sigma_t).sqrt())
}

/// An assembled linear system for one direction.
#[derive(Debug)]
pub struct TransportSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub seq_index: u64,
    pub quadrant: u8,
}

/// Direction-independent element integrals and index maps for one mesh.
/// Built once and shared by every solve on that mesh.
#[derive(Debug)]
pub struct TransportAssembler {
    mesh: Arc<StructuredMesh>,
    pattern: Arc<CsrPattern>,
    /// Per cell, value-array position of each (test, trial) pair, row-major
    /// in the local 4x4 block.
    cell_scatter: Vec<[usize; 16]>,
    /// Basis values and reference gradients at the 2x2 points.
    quad: QuadTables,
    /// Element integrals: mass, x/y advection moments, gradient products.
    mass: [[f64; 4]; 4],
    adv_x: [[f64; 4]; 4],
    adv_y: [[f64; 4]; 4],
    grad_xx: [[f64; 4]; 4],
    grad_xy: [[f64; 4]; 4],
    grad_yy: [[f64; 4]; 4],
    /// Boundary strips in the order bottom, right, top, left.
    strips: [BoundaryStrip; 4],
    /// Node renumberings onto the all-positive-signs frame for quadrants
    /// 2, 3, 4: mirror in x, in both axes, and in y.
    mirrors: [Vec<usize>; 3],
}

/// A banded factorization shared by the four directions of one sign
/// quadruple.
///
/// The factorization is taken in the first-quadrant frame; the other three
/// directions reuse it through the assembler's mirror renumberings.
#[derive(Debug)]
pub struct QuadrupleFactors {
    lu: BandedLu,
    index: u64,
    s1_abs: f64,
    s2_abs: f64,
}

#[derive(Debug)]
struct QuadTables {
    /// (xi, eta, weight) with the weight being the 2D product weight.
    points: [(f64, f64, f64); 4],
    phi: [[f64; 4]; 4],
    dxi: [[f64; 4]; 4],
    deta: [[f64; 4]; 4],
}

#[derive(Debug)]
struct BoundaryStrip {
    edge: Edge,
    /// Segment length along the strip.
    len: f64,
    /// Step from a segment's first node to its second.
    step: (f64, f64),
    /// Per segment: node pair, their 2x2 scatter positions, and the
    /// coordinates of the first node.
    segments: Vec<StripSegment>,
}

#[derive(Debug)]
struct StripSegment {
    nodes: [usize; 2],
    scatter: [usize; 4],
    origin: (f64, f64),
}

impl TransportAssembler {
    pub fn new(mesh: &Arc<StructuredMesh>) -> Self {
        let (nx, ny) = mesh.divisions();
        let (hx, hy) = mesh.spacing();
        let stride = nx + 1;

        // Nine-point pattern of the bilinear stencil.
        let mut rows: Vec<Vec<usize>> = Vec::with_capacity(mesh.node_count());
        for q in 0..=ny as i64 {
            for p in 0..=nx as i64 {
                let mut cols = Vec::with_capacity(9);
                for dq in -1..=1i64 {
                    for dp in -1..=1i64 {
                        let (pp, qq) = (p + dp, q + dq);
                        if pp >= 0 && pp <= nx as i64 && qq >= 0 && qq <= ny as i64 {
                            cols.push(qq as usize * stride + pp as usize);
                        }
                    }
                }
                rows.push(cols);
            }
        }
        let pattern = Arc::new(CsrPattern::from_rows(&rows));

        let mut cell_scatter = Vec::with_capacity(mesh.cell_count());
        for j in 0..ny {
            for i in 0..nx {
                let nodes = mesh.cell_nodes(i, j);
                let mut map = [0usize; 16];
                for p in 0..4 {
                    for q in 0..4 {
                        map[4 * p + q] = pattern
                            .entry_index(nodes[p], nodes[q])
                            .expect("cell nodes are pattern neighbors");
                    }
                }
                cell_scatter.push(map);
            }
        }

        let quad = QuadTables::build();
        let mut mass = [[0.0; 4]; 4];
        let mut adv_x = [[0.0; 4]; 4];
        let mut adv_y = [[0.0; 4]; 4];
        let mut grad_xx = [[0.0; 4]; 4];
        let mut grad_xy = [[0.0; 4]; 4];
        let mut grad_yy = [[0.0; 4]; 4];
        for (g, &(_, _, w)) in quad.points.iter().enumerate() {
            for p in 0..4 {
                for q in 0..4 {
                    mass[p][q] += w * hx * hy * quad.phi[g][p] * quad.phi[g][q];
                    adv_x[p][q] += w * hy * quad.dxi[g][q] * quad.phi[g][p];
                    adv_y[p][q] += w * hx * quad.deta[g][q] * quad.phi[g][p];
                    grad_xx[p][q] += w * (hy / hx) * quad.dxi[g][q] * quad.dxi[g][p];
                    grad_xy[p][q] +=
                        w * (quad.dxi[g][q] * quad.deta[g][p] + quad.deta[g][q] * quad.dxi[g][p]);
                    grad_yy[p][q] += w * (hx / hy) * quad.deta[g][q] * quad.deta[g][p];
                }
            }
        }

        let strip = |edge: Edge| -> BoundaryStrip {
            let (a, b_right, c, d_top) = mesh.bounds();
            let (count, len, step) = match edge {
                Edge::Bottom | Edge::Top => (nx, hx, (hx, 0.0)),
                Edge::Left | Edge::Right => (ny, hy, (0.0, hy)),
            };
            let mut segments = Vec::with_capacity(count);
            for k in 0..count {
                let (n0, n1, origin) = match edge {
                    Edge::Bottom => (
                        mesh.node_index(k, 0),
                        mesh.node_index(k + 1, 0),
                        (a + k as f64 * hx, c),
                    ),
                    Edge::Top => (
                        mesh.node_index(k, ny),
                        mesh.node_index(k + 1, ny),
                        (a + k as f64 * hx, d_top),
                    ),
                    Edge::Left => (
                        mesh.node_index(0, k),
                        mesh.node_index(0, k + 1),
                        (a, c + k as f64 * hy),
                    ),
                    Edge::Right => (
                        mesh.node_index(nx, k),
                        mesh.node_index(nx, k + 1),
                        (b_right, c + k as f64 * hy),
                    ),
                };
                let scatter = [
                    pattern.entry_index(n0, n0).unwrap(),
                    pattern.entry_index(n0, n1).unwrap(),
                    pattern.entry_index(n1, n0).unwrap(),
                    pattern.entry_index(n1, n1).unwrap(),
                ];
                segments.push(StripSegment {
                    nodes: [n0, n1],
                    scatter,
                    origin,
                });
            }
            BoundaryStrip {
                edge,
                len,
                step,
                segments,
            }
        };
        let strips = [
            strip(Edge::Bottom),
            strip(Edge::Right),
            strip(Edge::Top),
            strip(Edge::Left),
        ];

        // Flipping a direction's component signs mirrors its matrix: the
        // uniform mesh is symmetric under reflecting either axis, so the
        // entries are identical after renumbering nodes across the
        // reflected axes.
        let mirror_map = |flip_x: bool, flip_y: bool| -> Vec<usize> {
            let mut map = Vec::with_capacity(mesh.node_count());
            for q in 0..=ny {
                for p in 0..=nx {
                    let mp = if flip_x { nx - p } else { p };
                    let mq = if flip_y { ny - q } else { q };
                    map.push(mq * stride + mp);
                }
            }
            map
        };
        let mirrors = [
            mirror_map(true, false),
            mirror_map(true, true),
            mirror_map(false, true),
        ];

        TransportAssembler {
            mesh: Arc::clone(mesh),
            pattern,
            cell_scatter,
            quad,
            mass,
            adv_x,
            adv_y,
            grad_xx,
            grad_xy,
            grad_yy,
            strips,
            mirrors,
        }
    }

    pub fn mesh(&self) -> &Arc<StructuredMesh> {
        &self.mesh
    }

    /// The combined 4x4 element block for a direction.
    fn element_block(&self, s1: f64, s2: f64, sigma_t: f64, delta: f64) -> [[f64; 4]; 4] {
        let mut block = [[0.0; 4]; 4];
        let advection_weight = sigma_t * delta - 1.0;
        for p in 0..4 {
            for q in 0..4 {
                // Advection tested against v + delta s.grad v contributes
                // through its transpose after integration by parts.
                let transposed_advection = s1 * self.adv_x[q][p] + s2 * self.adv_y[q][p];
                let streamline = s1 * s1 * self.grad_xx[p][q]
                    + s1 * s2 * self.grad_xy[p][q]
                    + s2 * s2 * self.grad_yy[p][q];
                block[p][q] = advection_weight * transposed_advection
                    + delta * streamline
                    + sigma_t * self.mass[p][q];
            }
        }
        block
    }

    /// Assembles the matrix and right-hand side for one direction.
    ///
    /// `volume_rhs` is the full volumetric source `sigma_s Psi + kappa I_b`
    /// at this direction; `inflow` is the boundary intensity on the two
    /// inflow sides.
    pub fn assemble(
        &self,
        d: &Direction,
        medium: &Medium,
        supg_c1: f64,
        volume_rhs: &dyn Fn(f64, f64) -> f64,
        inflow: &dyn Fn(f64, f64) -> f64,
    ) -> Result<TransportSystem> {
        let (hx, hy) = self.mesh.spacing();
        let sigma_t = medium.sigma_t();
        let delta = supg_delta(hx.max(hy), sigma_t, supg_c1)?;
        let inflow_set = inflow_edges(d)?;
        let outflow_set = outflow_edges(d)?;

        let mut matrix = CsrMatrix::zeros(Arc::clone(&self.pattern));
        let mut rhs = vec![0.0; self.mesh.node_count()];

        let block = self.element_block(d.s1, d.s2, sigma_t, delta);
        let vals = matrix.values_mut();
        for map in &self.cell_scatter {
            for p in 0..4 {
                for q in 0..4 {
                    vals[map[4 * p + q]] += block[p][q];
                }
            }
        }

        // Outflow boundary mass, weighted by s.n > 0.
        for strip in &self.strips {
            if !outflow_set.contains(&strip.edge) {
                continue;
            }
            let (n1, n2) = strip.edge.outward_normal();
            let sn = d.s1 * n1 + d.s2 * n2;
            debug_assert!(sn > 0.0);
            let scale = sn * strip.len / 6.0;
            for seg in &strip.segments {
                vals[seg.scatter[0]] += 2.0 * scale;
                vals[seg.scatter[1]] += scale;
                vals[seg.scatter[2]] += scale;
                vals[seg.scatter[3]] += 2.0 * scale;
            }
        }

        // Volume source tested against v + delta s.grad v.
        let (nx, ny) = self.mesh.divisions();
        let cell_area = hx * hy;
        for j in 0..ny {
            for i in 0..nx {
                let nodes = self.mesh.cell_nodes(i, j);
                let (ox, oy) = self.mesh.cell_origin(i, j);
                for (g, &(xi, eta, w)) in self.quad.points.iter().enumerate() {
                    let f = volume_rhs(ox + xi * hx, oy + eta * hy);
                    let scaled = w * cell_area * f;
                    for p in 0..4 {
                        let test = self.quad.phi[g][p]
                            + delta
                                * (d.s1 * self.quad.dxi[g][p] / hx
                                    + d.s2 * self.quad.deta[g][p] / hy);
                        rhs[nodes[p]] += scaled * test;
                    }
                }
            }
        }

        // Weakly imposed inflow data, weighted by |s.n|.
        for strip in &self.strips {
            if !inflow_set.contains(&strip.edge) {
                continue;
            }
            let (n1, n2) = strip.edge.outward_normal();
            let sn_abs = (d.s1 * n1 + d.s2 * n2).abs();
            for seg in &strip.segments {
                for (t, wt) in GAUSS2 {
                    let x = seg.origin.0 + t * strip.step.0;
                    let y = seg.origin.1 + t * strip.step.1;
                    let val = sn_abs * strip.len * wt * inflow(x, y);
                    rhs[seg.nodes[0]] += val * (1.0 - t);
                    rhs[seg.nodes[1]] += val * t;
                }
            }
        }

        Ok(TransportSystem {
            matrix,
            rhs,
            seq_index: d.seq_index,
            quadrant: d.quadrant,
        })
    }

    /// Assembles and solves the system for one direction, enforcing the
    /// relative residual contract of `opts.tol`.
    pub fn solve_direction(
        &self,
        d: &Direction,
        medium: &Medium,
        supg_c1: f64,
        volume_rhs: &dyn Fn(f64, f64) -> f64,
        inflow: &dyn Fn(f64, f64) -> f64,
        opts: &LinearSolveOptions,
    ) -> Result<(NodalField, SolveStats)> {
        let system = self.assemble(d, medium, supg_c1, volume_rhs, inflow)?;
        let lu = BandedLu::factor(&system.matrix)?;
        let (x, stats) = self.solve_banded(&system.matrix, &lu, None, &system.rhs, d, opts)?;
        Ok((NodalField::from_values(&self.mesh, x)?, stats))
    }

    /// Factors the first-quadrant matrix of a sign quadruple for reuse by
    /// all four of its directions.
    pub fn factor_quadruple(
        &self,
        quad: &Quadruple,
        medium: &Medium,
        supg_c1: f64,
    ) -> Result<QuadrupleFactors> {
        let d0 = &quad.directions[0];
        let system = self.assemble(d0, medium, supg_c1, &|_, _| 0.0, &|_, _| 0.0)?;
        let lu = BandedLu::factor(&system.matrix)?;
        Ok(QuadrupleFactors {
            lu,
            index: quad.index,
            s1_abs: d0.s1.abs(),
            s2_abs: d0.s2.abs(),
        })
    }

    /// Assembles and solves one direction of a quadruple, reusing the
    /// quadruple's shared factorization.
    ///
    /// The refinement residual is computed against the direction's own
    /// assembled matrix, so the residual contract is enforced exactly as in
    /// [`TransportAssembler::solve_direction`]; the mirrored factorization
    /// only serves as the solve operator.
    pub fn solve_factored(
        &self,
        factors: &QuadrupleFactors,
        d: &Direction,
        medium: &Medium,
        supg_c1: f64,
        volume_rhs: &dyn Fn(f64, f64) -> f64,
        inflow: &dyn Fn(f64, f64) -> f64,
        opts: &LinearSolveOptions,
    ) -> Result<(NodalField, SolveStats)> {
        if d.seq_index != factors.index
            || d.s1.abs() != factors.s1_abs
            || d.s2.abs() != factors.s2_abs
        {
            return Err(Error::InvalidParameter(format!(
                "direction at sequence index {} does not belong to the factored quadruple {}",
                d.seq_index, factors.index
            )));
        }
        let system = self.assemble(d, medium, supg_c1, volume_rhs, inflow)?;
        let slot = (d.quadrant as usize).saturating_sub(1).min(3);
        let map = if slot == 0 {
            None
        } else {
            Some(self.mirrors[slot - 1].as_slice())
        };
        let (x, stats) = self.solve_banded(&system.matrix, &factors.lu, map, &system.rhs, d, opts)?;
        Ok((NodalField::from_values(&self.mesh, x)?, stats))
    }

    /// Direct solve with iterative refinement.
    ///
    /// `lu` factors either `matrix` itself or its mirror twin; in the
    /// latter case `map` renumbers nodes between the two frames. Refinement
    /// always measures the residual of `matrix`, so the returned stats
    /// certify the system actually being solved.
    fn solve_banded(
        &self,
        matrix: &CsrMatrix,
        lu: &BandedLu,
        map: Option<&[usize]>,
        b: &[f64],
        d: &Direction,
        opts: &LinearSolveOptions,
    ) -> Result<(Vec<f64>, SolveStats)> {
        let n = b.len();
        let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if b_norm == 0.0 {
            return Ok((
                vec![0.0; n],
                SolveStats {
                    iterations: 0,
                    relative_residual: 0.0,
                },
            ));
        }

        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut scratch = vec![0.0; n];
        let mut rel;
        let mut rounds = 0;
        loop {
            // Correction dx = P A_1^{-1} P r, with P the frame mirror (or
            // the identity when the factorization is of `matrix` itself).
            match map {
                Some(m) => {
                    for (si, &k) in scratch.iter_mut().zip(m) {
                        *si = r[k];
                    }
                }
                None => scratch.copy_from_slice(&r),
            }
            lu.solve(&mut scratch);
            match map {
                Some(m) => {
                    for (xi, &k) in x.iter_mut().zip(m) {
                        *xi += scratch[k];
                    }
                }
                None => {
                    for (xi, si) in x.iter_mut().zip(&scratch) {
                        *xi += si;
                    }
                }
            }
            rounds += 1;
            rel = matrix.residual(b, &x, &mut r) / b_norm;
            if rel <= opts.tol || rounds >= 4 {
                break;
            }
        }
        if rel > opts.tol {
            return Err(Error::LinearSolveFailed {
                seq_index: d.seq_index,
                quadrant: d.quadrant,
                achieved: rel,
                target: opts.tol,
                iterations: rounds,
            });
        }
        Ok((
            x,
            SolveStats {
                iterations: rounds,
                relative_residual: rel,
            },
        ))
    }
}

impl QuadTables {
    fn build() -> Self {
        let mut points = [(0.0, 0.0, 0.0); 4];
        let mut phi = [[0.0; 4]; 4];
        let mut dxi = [[0.0; 4]; 4];
        let mut deta = [[0.0; 4]; 4];
        let mut g = 0;
        for (xi, wx) in GAUSS2 {
            for (eta, wy) in GAUSS2 {
                points[g] = (xi, eta, wx * wy);
                phi[g] = basis_values(xi, eta);
                for (l, grad) in basis_gradients(xi, eta).into_iter().enumerate() {
                    dxi[g][l] = grad.0;
                    deta[g][l] = grad.1;
                }
                g += 1;
            }
        }
        QuadTables {
            points,
            phi,
            dxi,
            deta,
        }
    }
}
