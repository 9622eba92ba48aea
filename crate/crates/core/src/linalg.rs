//! Dense complex linear algebra used by every other module.
//!
//! Hermitian eigendecompositions come from `nalgebra`; the SVD is a one-sided
//! Jacobi iteration. This module owns the rank decisions. A singular value counts as zero when it is at most
//! `rank_tol * sigma_max`, and the decision is refused (reported as
//! indeterminate) when any singular value falls inside the band
//! `[rank_tol / band, rank_tol * band] * sigma_max`.
//!
//! Vectorization is row-stacking: `vec(X)[i * cols + j] = X[i, j]`, so that
//! `vec(A X B) = (A ⊗ Bᵀ) vec(X)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Complex scalar.
pub type C64 = Complex64;

/// Dense complex matrix, the carrier for every operator in the crate.
pub type ComplexMatrix = DMatrix<C64>;

const MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LinalgError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is not Hermitian (asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },
    #[error("matrix is not positive definite (minimal eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error(
        "rank decision is indeterminate: a singular value ratio lies in the band around the cutoff"
    )]
    Indeterminate { singular_values: Vec<f64> },
    #[error("factorization did not converge")]
    NoConvergence,
    #[error("invalid tolerance configuration: {0}")]
    InvalidTolerance(String),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Numerical thresholds shared by all rank and residual decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Relative singular-value cutoff.
    pub rank_tol: f64,
    /// Absolute norm cutoff for residual checks.
    pub residual_tol: f64,
    /// Multiplicative width of the indeterminate band around `rank_tol`.
    pub indeterminate_band: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            rank_tol: 1e-9,
            residual_tol: 1e-8,
            indeterminate_band: 10.0,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = self.rank_tol.is_finite()
            && self.residual_tol.is_finite()
            && self.indeterminate_band.is_finite();
        if !finite || self.rank_tol < 0.0 || self.residual_tol < 0.0 {
            return Err(LinalgError::InvalidTolerance(format!("{self:?}")));
        }
        if self.indeterminate_band < 1.0 {
            return Err(LinalgError::InvalidTolerance(
                "indeterminate_band must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn with_rank_tol(mut self, rank_tol: f64) -> Self {
        self.rank_tol = rank_tol;
        self
    }

    pub fn with_residual_tol(mut self, residual_tol: f64) -> Self {
        self.residual_tol = residual_tol;
        self
    }
}

/// Outcome of thresholding a singular spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankDecision {
    pub rank: usize,
    pub indeterminate: bool,
}

/// Decide the numerical rank of a nonincreasing singular spectrum.
pub fn rank_decision(singular_values: &[f64], tol: &ToleranceConfig) -> RankDecision {
    let smax = singular_values.iter().copied().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return RankDecision {
            rank: 0,
            indeterminate: false,
        };
    }
    let cutoff = tol.rank_tol * smax;
    let lo = cutoff / tol.indeterminate_band;
    let hi = cutoff * tol.indeterminate_band;
    let rank = singular_values.iter().filter(|&&s| s > cutoff).count();
    let indeterminate = singular_values.iter().any(|&s| s >= lo && s <= hi);
    RankDecision {
        rank,
        indeterminate,
    }
}

/// Thin singular value decomposition `A = U diag(s) V*`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut us = self.u.clone();
        for (j, &s) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * self.v.adjoint()
    }
}

const JACOBI_SWEEPS: usize = 80;

/// One-sided Jacobi SVD of a matrix with at least as many rows as columns.
/// nalgebra's complex SVD mis-reconstructs inputs with repeated singular
/// values, which are the rule here (everything is an ampliation), so the
/// columns are orthogonalized directly instead.
fn tall_svd(a: &ComplexMatrix) -> Result<(ComplexMatrix, Vec<f64>, ComplexMatrix)> {
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = ComplexMatrix::identity(n, n);
    // columns at the rounding floor carry no rank information
    let tiny = f64::EPSILON * a.norm();
    let mut converged = false;
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if g <= f64::EPSILON * (alpha * beta).sqrt()
                    || alpha.sqrt() <= tiny
                    || beta.sqrt() <= tiny
                {
                    continue;
                }
                rotated = true;
                // rephase column q so that the Gram entry is real, then rotate
                let phase = (gamma / g).conj();
                w.column_mut(q).iter_mut().for_each(|z| *z *= phase);
                v.column_mut(q).iter_mut().for_each(|z| *z *= phase);
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for mat in [&mut w, &mut v] {
                    for r in 0..mat.nrows() {
                        let (x, y) = (mat[(r, p)], mat[(r, q)]);
                        mat[(r, p)] = x * cs - y * sn;
                        mat[(r, q)] = x * sn + y * cs;
                    }
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence);
    }
    let s: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let smax = s.iter().copied().fold(0.0_f64, f64::max);
    let floor = (m.max(n) as f64) * f64::EPSILON * smax;
    let mut u = ComplexMatrix::zeros(m, n);
    let mut pending = Vec::new();
    for j in 0..n {
        if s[j] > floor && s[j] > 0.0 {
            u.set_column(j, &(w.column(j) / C64::new(s[j], 0.0)));
        } else {
            pending.push(j);
        }
    }
    // negligible columns: complete U to an orthonormal set
    let mut e = 0;
    for j in pending {
        while e < m {
            let mut cand = ComplexMatrix::zeros(m, 1);
            cand[(e, 0)] = C64::new(1.0, 0.0);
            e += 1;
            for _ in 0..2 {
                for k in 0..n {
                    let proj = u.column(k).dotc(&cand.column(0));
                    let col = u.column(k).into_owned();
                    cand.column_mut(0).axpy(-proj, &col, C64::new(1.0, 0.0));
                }
            }
            let norm = cand.norm();
            if norm > 0.5 {
                u.set_column(j, &(cand.column(0) / C64::new(norm, 0.0)));
                break;
            }
        }
    }
    Ok((u, s, v))
}

/// Singular values in nonincreasing order with orthonormal singular vectors.
pub fn svd(a: &ComplexMatrix) -> Result<Svd> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(Svd {
            u: ComplexMatrix::zeros(m, 0),
            s: Vec::new(),
            v: ComplexMatrix::zeros(n, 0),
        });
    }
    let (u, s, v) = if m >= n {
        tall_svd(a)?
    } else {
        let (v, s, u) = tall_svd(&a.adjoint())?;
        (u, s, v)
    };
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let s_sorted = order.iter().map(|&i| s[i]).collect();
    let u = ComplexMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let v = ComplexMatrix::from_fn(v.nrows(), order.len(), |r, c| v[(r, order[c])]);
    Ok(Svd { u, s: s_sorted, v })
}

/// Orthonormal basis of a kernel together with the spectrum it was read from.
#[derive(Debug, Clone)]
pub struct NullSpace {
    /// Basis vectors as columns.
    pub basis: ComplexMatrix,
    /// Full singular spectrum (length = number of columns of the input).
    pub singular_values: Vec<f64>,
    pub rank: usize,
}

impl NullSpace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

/// Full singular spectrum and right singular vectors, padding wide inputs
/// with zero rows so that every column direction is accounted for.
fn full_right_svd(a: &ComplexMatrix) -> Result<Svd> {
    let (m, n) = a.shape();
    if m >= n {
        return svd(a);
    }
    let mut padded = ComplexMatrix::zeros(n, n);
    padded.view_mut((0, 0), (m, n)).copy_from(a);
    svd(&padded)
}

/// Orthonormal basis of `ker(A)`.
pub fn nullspace(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<NullSpace> {
    let n = a.ncols();
    if n == 0 {
        return Ok(NullSpace {
            basis: ComplexMatrix::zeros(0, 0),
            singular_values: Vec::new(),
            rank: 0,
        });
    }
    let dec = full_right_svd(a)?;
    let decision = rank_decision(&dec.s, tol);
    if decision.indeterminate {
        return Err(LinalgError::Indeterminate {
            singular_values: dec.s,
        });
    }
    let basis = dec.v.columns(decision.rank, n - decision.rank).into_owned();
    Ok(NullSpace {
        basis,
        singular_values: dec.s,
        rank: decision.rank,
    })
}

/// Orthonormal basis of the column space of `A`, plus its singular spectrum.
pub fn range_basis(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<(ComplexMatrix, Vec<f64>)> {
    let dec = svd(a)?;
    let decision = rank_decision(&dec.s, tol);
    if decision.indeterminate {
        return Err(LinalgError::Indeterminate {
            singular_values: dec.s,
        });
    }
    Ok((dec.u.columns(0, decision.rank).into_owned(), dec.s))
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

pub fn asymmetry(a: &ComplexMatrix) -> f64 {
    (a - a.adjoint()).norm()
}

pub fn symmetrize(a: &ComplexMatrix) -> ComplexMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Eigendecomposition of the Hermitian part of `a`.
pub fn hermitian_eigen(a: &ComplexMatrix) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(LinalgError::ShapeMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: Vec::new(),
            vectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let dec = SymmetricEigen::try_new(symmetrize(a), f64::EPSILON, MAX_ITERATIONS)
        .ok_or(LinalgError::NoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| dec.eigenvalues[i].total_cmp(&dec.eigenvalues[j]));
    let values = order.iter().map(|&i| dec.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| dec.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

fn ensure_hermitian(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<()> {
    if !a.is_square() {
        return Err(LinalgError::ShapeMismatch(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let asym = asymmetry(a);
    if asym > tol.residual_tol * a.norm().max(1.0) {
        return Err(LinalgError::NotHermitian { asymmetry: asym });
    }
    Ok(())
}

/// `A^w = Q diag(exp(w log λ)) Q*` for Hermitian `A`.
///
/// Real nonnegative powers are defined on positive semidefinite input (with
/// `0^w = 0` for `w ≠ 0`); any other exponent needs `A` strictly positive.
pub fn hermitian_power(a: &ComplexMatrix, w: C64, tol: &ToleranceConfig) -> Result<ComplexMatrix> {
    ensure_hermitian(a, tol)?;
    let eig = hermitian_eigen(a)?;
    let lmax = eig
        .values
        .iter()
        .copied()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let floor = tol.rank_tol * lmax.max(f64::MIN_POSITIVE);
    let needs_pd = w.im != 0.0 || w.re < 0.0;
    let lmin = eig.values.first().copied().unwrap_or(0.0);
    if needs_pd && lmin <= floor {
        return Err(LinalgError::NotPositiveDefinite {
            min_eigenvalue: lmin,
        });
    }
    if !needs_pd && lmin < -floor {
        return Err(LinalgError::NotPositiveDefinite {
            min_eigenvalue: lmin,
        });
    }
    let powers: Vec<C64> = eig
        .values
        .iter()
        .map(|&l| {
            if w == C64::new(0.0, 0.0) {
                C64::new(1.0, 0.0)
            } else if l <= floor {
                C64::new(0.0, 0.0)
            } else {
                (w * l.ln()).exp()
            }
        })
        .collect();
    Ok(spectral_apply(&eig.vectors, &powers))
}

/// `Q diag(f) Q*`.
pub fn spectral_apply(q: &ComplexMatrix, f: &[C64]) -> ComplexMatrix {
    let mut qf = q.clone();
    for (j, &fj) in f.iter().enumerate() {
        qf.column_mut(j).iter_mut().for_each(|x| *x *= fj);
    }
    qf * q.adjoint()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsdVerdict {
    Psd,
    NotPsd,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdReport {
    pub verdict: PsdVerdict,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Frobenius norm of `A - A*` before symmetrization.
    pub asymmetry: f64,
}

/// Positive semidefiniteness test on the Hermitian part of `a`.
pub fn psd_check(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<PsdReport> {
    ensure_hermitian(a, tol)?;
    let asym = asymmetry(a);
    let eig = hermitian_eigen(a)?;
    let min = eig.values.first().copied().unwrap_or(0.0);
    let max = eig.values.last().copied().unwrap_or(0.0);
    let cutoff = tol.rank_tol * max.max(1.0);
    let verdict = if min.abs() >= cutoff / tol.indeterminate_band
        && min.abs() <= cutoff * tol.indeterminate_band
        && min < 0.0
    {
        PsdVerdict::Indeterminate
    } else if min >= -cutoff {
        PsdVerdict::Psd
    } else {
        PsdVerdict::NotPsd
    };
    Ok(PsdReport {
        verdict,
        min_eigenvalue: min,
        max_eigenvalue: max,
        asymmetry: asym,
    })
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Row-stacking vectorization.
pub fn vectorize(a: &ComplexMatrix) -> DVector<C64> {
    let (r, c) = a.shape();
    DVector::from_fn(r * c, |k, _| a[(k / c, k % c)])
}

pub fn devectorize(v: &DVector<C64>, rows: usize, cols: usize) -> Result<ComplexMatrix> {
    if v.len() != rows * cols {
        return Err(LinalgError::ShapeMismatch(format!(
            "vector of length {} cannot be reshaped to {rows}x{cols}",
            v.len()
        )));
    }
    Ok(ComplexMatrix::from_fn(rows, cols, |i, j| v[i * cols + j]))
}

/// Stack the row-vectorizations of `mats` as columns of one matrix.
pub fn columns_of(mats: &[ComplexMatrix]) -> ComplexMatrix {
    let len = mats.first().map(|m| m.len()).unwrap_or(0);
    let mut out = ComplexMatrix::zeros(len, mats.len());
    for (j, m) in mats.iter().enumerate() {
        out.set_column(j, &vectorize(m));
    }
    out
}

/// Trace inner product `Tr(A* B)`.
pub fn trace_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Matrix unit `E_ij` of size `n`.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut e = ComplexMatrix::zeros(n, n);
    e[(i, j)] = C64::new(1.0, 0.0);
    e
}

pub fn diag(values: &[f64]) -> ComplexMatrix {
    let n = values.len();
    ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(values[i], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Largest singular value.
pub fn operator_norm(a: &ComplexMatrix) -> Result<f64> {
    Ok(svd(a)?.s.first().copied().unwrap_or(0.0))
}

pub fn trace(a: &ComplexMatrix) -> C64 {
    a.diagonal().iter().sum()
}

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}
