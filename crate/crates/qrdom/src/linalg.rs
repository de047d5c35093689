//! Sparse matrices and the linear solvers for per-direction transport
//! systems.
//!
//! Matrices are compressed sparse row with a pattern that is fixed per mesh
//! and shared between solves; only the values are rewritten per direction.
//! On a structured grid the stencil keeps every nonzero within a narrow
//! band, so the production path is a banded LU factorization with partial
//! pivoting: one factorization per matrix, reused across right-hand sides,
//! with accuracy limited only by conditioning rather than by iteration
//! counts. Restarted GMRES is kept alongside it as an independent reference
//! solver for cross-checks and for matrices without useful band structure.

use crate::error::{Error, Result};
use std::sync::Arc;

/// Sparsity structure shared by every matrix on the same mesh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrPattern {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
}

impl CsrPattern {
    /// Builds a pattern from per-row column lists. Columns must be sorted
    /// and unique within each row.
    pub fn from_rows(rows: &[Vec<usize>]) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0] < w[1]));
            cols.extend_from_slice(row);
            row_ptr.push(cols.len());
        }
        CsrPattern { n, row_ptr, cols }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    #[inline]
    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    #[inline]
    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    /// Position of entry `(i, j)` in the value array.
    pub fn entry_index(&self, i: usize, j: usize) -> Option<usize> {
        let range = self.row_range(i);
        self.cols[range.clone()]
            .binary_search(&j)
            .ok()
            .map(|k| range.start + k)
    }
}

/// A sparse matrix: shared pattern plus per-instance values.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pattern: Arc<CsrPattern>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: Arc<CsrPattern>) -> Self {
        let vals = vec![0.0; pattern.nnz()];
        CsrMatrix { pattern, vals }
    }

    pub fn pattern(&self) -> &CsrPattern {
        &self.pattern
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.vals
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern
            .entry_index(i, j)
            .map_or(0.0, |k| self.vals[k])
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let p = &self.pattern;
        for i in 0..p.n {
            let mut acc = 0.0;
            for k in p.row_range(i) {
                acc += self.vals[k] * x[p.cols[k]];
            }
            y[i] = acc;
        }
    }

    /// `r = b - A x`, returning `||r||`.
    pub fn residual(&self, b: &[f64], x: &[f64], r: &mut [f64]) -> f64 {
        self.matvec(x, r);
        let mut norm_sq = 0.0;
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
            norm_sq += *ri * *ri;
        }
        norm_sq.sqrt()
    }
}

/// LU factorization of a banded matrix with partial pivoting.
///
/// Storage is column-major band layout: column `j` is a contiguous slice of
/// height `2 kl + ku + 1` holding entry `(i, j)` at offset `kl + ku + i - j`.
/// The extra `kl` slots at the top of each column absorb the fill that row
/// interchanges push above the original superdiagonals.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    /// Subdiagonal and superdiagonal counts of the original matrix.
    kl: usize,
    ku: usize,
    /// Height of one stored column, `2 kl + ku + 1`.
    ldab: usize,
    ab: Vec<f64>,
    /// Row interchanged with row `j` at elimination step `j`.
    ipiv: Vec<usize>,
}

impl BandedLu {
    /// Factors a sparse matrix, deriving the band widths from its pattern.
    ///
    /// Fails with [`Error::SingularSystem`] when an elimination column has
    /// no nonzero pivot candidate, which means the matrix is exactly
    /// singular.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n();
        let pattern = a.pattern();
        let (mut kl, mut ku) = (0usize, 0usize);
        for i in 0..n {
            for k in pattern.row_range(i) {
                let j = pattern.cols[k];
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![0.0; ldab * n];
        for i in 0..n {
            for k in pattern.row_range(i) {
                let j = pattern.cols[k];
                ab[j * ldab + kl + ku + i - j] = a.vals[k];
            }
        }

        let mut ipiv: Vec<usize> = (0..n).collect();
        // Rightmost column touched by any elimination step so far; pivoting
        // can push it up to `kl` columns past the original superdiagonals.
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let diag = j * ldab + kl + ku;
            let mut piv_off = 0usize;
            let mut piv_abs = ab[diag].abs();
            for t in 1..=km {
                let cand = ab[diag + t].abs();
                if cand > piv_abs {
                    piv_abs = cand;
                    piv_off = t;
                }
            }
            if piv_abs == 0.0 {
                return Err(Error::SingularSystem { column: j });
            }
            ipiv[j] = j + piv_off;
            ju = ju.max((j + ku + piv_off).min(n - 1));
            if piv_off != 0 {
                for k in j..=ju {
                    let row_j = k * ldab + kl + ku - (k - j);
                    ab.swap(row_j, row_j + piv_off);
                }
            }
            if km > 0 {
                let pivot = ab[diag];
                for t in 1..=km {
                    ab[diag + t] /= pivot;
                }
                if ju > j {
                    let (head, tail) = ab.split_at_mut((j + 1) * ldab);
                    let mult = &head[diag + 1..diag + 1 + km];
                    for k in j + 1..=ju {
                        let row_j = (k - j - 1) * ldab + kl + ku - (k - j);
                        let u = tail[row_j];
                        if u != 0.0 {
                            let below = &mut tail[row_j + 1..row_j + 1 + km];
                            for (bv, mv) in below.iter_mut().zip(mult) {
                                *bv -= mv * u;
                            }
                        }
                    }
                }
            }
        }
        Ok(BandedLu {
            n,
            kl,
            ku,
            ldab,
            ab,
            ipiv,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `(subdiagonals, superdiagonals)` of the factored matrix.
    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    /// Solves `A x = b` in place using the stored factors.
    pub fn solve(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let (kl, ku, ldab) = (self.kl, self.ku, self.ldab);
        if kl > 0 {
            for j in 0..self.n.saturating_sub(1) {
                let lm = kl.min(self.n - 1 - j);
                let piv = self.ipiv[j];
                if piv != j {
                    b.swap(piv, j);
                }
                let bj = b[j];
                if bj != 0.0 {
                    let mult = &self.ab[j * ldab + kl + ku + 1..][..lm];
                    for (t, &m) in mult.iter().enumerate() {
                        b[j + 1 + t] -= m * bj;
                    }
                }
            }
        }
        for j in (0..self.n).rev() {
            let xj = b[j] / self.ab[j * ldab + kl + ku];
            b[j] = xj;
            if xj != 0.0 {
                let lm = (kl + ku).min(j);
                let above = &self.ab[j * ldab + kl + ku - lm..][..lm];
                for (t, &u) in above.iter().enumerate() {
                    b[j - lm + t] -= u * xj;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LinearSolveOptions {
    /// Target on `||b - Ax|| / ||b||`.
    pub tol: f64,
    /// GMRES restart length.
    pub restart: usize,
    /// Total Krylov iteration budget across restarts.
    pub max_iterations: usize,
}

impl Default for LinearSolveOptions {
    fn default() -> Self {
        LinearSolveOptions {
            tol: 1e-12,
            restart: 50,
            max_iterations: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    /// True relative residual of the returned iterate, recomputed after
    /// the iteration finished.
    pub relative_residual: f64,
}

#[derive(Debug)]
pub struct GmresResult {
    pub x: Vec<f64>,
    pub stats: SolveStats,
    pub converged: bool,
}

/// Restarted GMRES on `A x = b` with a zero initial guess.
///
/// The convergence test is on the true relative residual
/// `||b - Ax|| / ||b||`, recomputed from scratch at every restart, so a
/// `converged` result is self-certifying.
pub fn gmres(a: &CsrMatrix, b: &[f64], opts: &LinearSolveOptions) -> GmresResult {
    let n = a.n();
    assert_eq!(b.len(), n);
    let m = opts.restart.max(1);

    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return GmresResult {
            x,
            stats: SolveStats {
                iterations: 0,
                relative_residual: 0.0,
            },
            converged: true,
        };
    }

    let mut r = vec![0.0; n];
    let mut iterations = 0;
    let mut rel = a.residual(b, &x, &mut r) / b_norm;

    // Basis of the Krylov space; x is rebuilt from it after each cycle.
    let mut v: Vec<Vec<f64>> = Vec::new();
    let mut h = vec![vec![0.0f64; m]; m + 1];
    let (mut cs, mut sn) = (vec![0.0f64; m], vec![0.0f64; m]);
    let mut g = vec![0.0f64; m + 1];

    while rel > opts.tol && iterations < opts.max_iterations {
        let beta = rel * b_norm;
        v.clear();
        let mut v0 = r.clone();
        for val in &mut v0 {
            *val /= beta;
        }
        v.push(v0);
        g.iter_mut().for_each(|gi| *gi = 0.0);
        g[0] = beta;

        let mut k_used = 0;
        for j in 0..m {
            if iterations >= opts.max_iterations {
                break;
            }
            iterations += 1;

            let mut w = vec![0.0; n];
            a.matvec(&v[j], &mut w);

            // Modified Gram-Schmidt, run twice to hold orthogonality at the
            // tight tolerances this solver is asked for.
            for _pass in 0..2 {
                for (i, vi) in v.iter().take(j + 1).enumerate() {
                    let dot: f64 = w.iter().zip(vi).map(|(a, b)| a * b).sum();
                    for (wk, vk) in w.iter_mut().zip(vi) {
                        *wk -= dot * vk;
                    }
                    h[i][j] += dot;
                }
            }
            let w_norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            h[j + 1][j] = w_norm;

            // Apply the accumulated Givens rotations, then form the new one.
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = (h[j][j] * h[j][j] + h[j + 1][j] * h[j + 1][j]).sqrt();
            if denom == 0.0 {
                k_used = j + 1;
                break;
            }
            cs[j] = h[j][j] / denom;
            sn[j] = h[j + 1][j] / denom;
            h[j][j] = denom;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            k_used = j + 1;

            let happy_breakdown = w_norm <= 1e-300;
            if !happy_breakdown {
                let mut next = w;
                for val in &mut next {
                    *val /= w_norm;
                }
                v.push(next);
            }
            if g[j + 1].abs() / b_norm <= 0.25 * opts.tol || happy_breakdown {
                break;
            }
        }

        // Back-substitute H y = g and accumulate x += V y.
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut acc = g[i];
            for (kk, yk) in y.iter().enumerate().skip(i + 1) {
                acc -= h[i][kk] * yk;
            }
            y[i] = acc / h[i][i];
        }
        for (vi, yi) in v.iter().zip(&y) {
            for (xk, vk) in x.iter_mut().zip(vi) {
                *xk += yi * vk;
            }
        }
        for row in h.iter_mut().take(k_used + 1) {
            for val in row.iter_mut().take(k_used) {
                *val = 0.0;
            }
        }

        rel = a.residual(b, &x, &mut r) / b_norm;
        if k_used == 0 {
            break;
        }
    }

    GmresResult {
        x,
        stats: SolveStats {
            iterations,
            relative_residual: rel,
        },
        converged: rel <= opts.tol,
    }
}
