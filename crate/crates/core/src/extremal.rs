//! Extremality certificates in the convex set of unital CP maps, explicit
//! convex decompositions, Radon–Nikodym derivatives and intertwiners.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channel::{
    assemble_inner, inner_block_families, minimal_kraus, stinespring_support, KrausChannel,
};
use crate::error::{Error, Result};
use crate::linalg::{
    columns_of, devectorize, hermitian_power, identity, kron, nullspace, psd_check, range_basis,
    rank_decision, svd, trace_inner, vectorize, ComplexMatrix, LinalgError, PsdReport, PsdVerdict,
    ToleranceConfig, C64,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Extremal,
    NotExtremal,
    Indeterminate,
    HypothesisUnmet,
}

/// A `d × d` array `(λ^α_β)` of operators on `H`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientArray {
    pub d: usize,
    pub entries: Vec<ComplexMatrix>,
}

impl CoefficientArray {
    /// Read `λ^α_β[h, h'] = Λ[h d + α, h' d + β]` off an operator on `H ⊗ C^d`.
    pub fn from_dilation(op: &ComplexMatrix, d: usize) -> Self {
        let n = op.nrows() / d;
        let entries = (0..d * d)
            .map(|ab| {
                let (a, b) = (ab / d, ab % d);
                ComplexMatrix::from_fn(n, n, |h, k| op[(h * d + a, k * d + b)])
            })
            .collect();
        Self { d, entries }
    }

    pub fn to_dilation(&self) -> ComplexMatrix {
        let d = self.d;
        let n = self.entries.first().map(|e| e.nrows()).unwrap_or(0);
        ComplexMatrix::from_fn(n * d, n * d, |r, c| {
            self.entries[(r % d) * d + c % d][(r / d, c / d)]
        })
    }

    pub fn entry(&self, alpha: usize, beta: usize) -> &ComplexMatrix {
        &self.entries[alpha * self.d + beta]
    }

    /// Array `λ^α_β = c_αβ · I` from a scalar matrix.
    pub fn scalar(c: &ComplexMatrix, n: usize) -> Self {
        Self::from_dilation(&kron(&identity(n), c), c.nrows())
    }
}

#[derive(Debug, Clone)]
pub struct Certificate {
    pub verdict: Verdict,
    pub kernel_dim: usize,
    /// Hermitian kernel elements relative to `reduced`.
    pub kernel_basis: Vec<CoefficientArray>,
    pub singular_spectrum: Vec<f64>,
    pub residuals: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    /// The Kraus family the kernel is expressed against.
    pub reduced: KrausChannel,
}

impl Certificate {
    pub fn is_extremal(&self) -> bool {
        self.verdict == Verdict::Extremal
    }
}

/// Kernel of a column matrix, with the band refusal surfaced as a verdict.
pub(crate) struct KernelSolve {
    pub indeterminate: bool,
    pub coefficients: Vec<Vec<C64>>,
    pub spectrum: Vec<f64>,
}

pub(crate) fn solve_kernel(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<KernelSolve> {
    match nullspace(a, tol) {
        Ok(ns) => Ok(KernelSolve {
            indeterminate: false,
            coefficients: (0..ns.dim())
                .map(|j| ns.basis.column(j).iter().copied().collect())
                .collect(),
            spectrum: ns.singular_values,
        }),
        Err(LinalgError::Indeterminate { singular_values }) => Ok(KernelSolve {
            indeterminate: true,
            coefficients: Vec::new(),
            spectrum: singular_values,
        }),
        Err(e) => Err(e.into()),
    }
}

pub(crate) fn combine(basis: &[ComplexMatrix], coef: &[C64]) -> ComplexMatrix {
    let (r, c) = basis[0].shape();
    basis
        .iter()
        .zip(coef)
        .fold(ComplexMatrix::zeros(r, c), |acc, (b, &z)| acc + b * z)
}

/// Hermitian spanning set of a `*`-closed space: the Hermitian and
/// anti-Hermitian parts of each element, orthonormalized under `Re Tr(A* B)`.
pub(crate) fn hermitian_basis(elements: &[ComplexMatrix], target: usize) -> Vec<ComplexMatrix> {
    let mut out: Vec<ComplexMatrix> = Vec::with_capacity(target);
    for k in elements {
        let ka = k.adjoint();
        let parts = [(k + &ka).scale(0.5), (k - &ka) * C64::new(0.0, -0.5)];
        for mut h in parts {
            for e in &out {
                let proj = trace_inner(e, &h).re;
                h -= e.scale(proj);
            }
            let norm = h.norm();
            if norm > 1e-6 {
                out.push(h.scale(1.0 / norm));
            }
            if out.len() == target {
                return out;
            }
        }
    }
    out
}

fn arrays(ops: &[ComplexMatrix], d: usize) -> Vec<CoefficientArray> {
    ops.iter()
        .map(|op| CoefficientArray::from_dilation(op, d))
        .collect()
}

fn verdict_of(solve: &KernelSolve, dim: usize) -> Verdict {
    if solve.indeterminate {
        Verdict::Indeterminate
    } else if dim == 0 {
        Verdict::Extremal
    } else {
        Verdict::NotExtremal
    }
}

/// `max ‖V Λ V*‖` over a list of dilation operators.
fn sandwich_residual(tau: &KrausChannel, ops: &[ComplexMatrix]) -> f64 {
    let vstar = tau.dilation_adjoint();
    let v = vstar.adjoint();
    ops.iter()
        .map(|op| (&v * op * &vstar).norm())
        .fold(0.0, f64::max)
}

/// Extremality among unital CP maps: nonzero `Λ ∈ P π(M)' P` with
/// `V Λ V* = 0`, computed on a minimal Kraus family.
pub fn extremality_cp(tau: &KrausChannel, tol: &ToleranceConfig) -> Result<Certificate> {
    let reduced = minimal_kraus(tau, tol)?;
    let data = stinespring_support(&reduced, tol)?;
    let basis = data.compressed_commutant_basis();
    let vstar = reduced.dilation_adjoint();
    let v = vstar.adjoint();
    let images: Vec<ComplexMatrix> = basis.iter().map(|l| &v * l * &vstar).collect();
    let solve = solve_kernel(&columns_of(&images), tol)?;
    let raw: Vec<ComplexMatrix> = solve
        .coefficients
        .iter()
        .map(|c| combine(&basis, c))
        .collect();
    let herm = hermitian_basis(&raw, raw.len());
    let verdict = verdict_of(&solve, herm.len());

    let mut residuals = BTreeMap::new();
    residuals.insert("kernel".to_string(), sandwich_residual(&reduced, &herm));
    residuals.insert("unitality".to_string(), reduced.unitality_defect());
    residuals.insert("reduction".to_string(), reduced.distance(tau)?);
    residuals.insert("support_block_form".to_string(), data.block_form_defect);
    let mut notes = vec![format!(
        "reduced from {} to {} Kraus operators (index {})",
        tau.d(),
        reduced.d(),
        data.index
    )];
    if data.blocks.iter().any(|b| b.rank() != b.width()) {
        notes.push("support projection is not the identity after reduction".into());
    }
    if tau.model().spec().is_full_matrix_algebra() {
        notes.push("single full block: the Choi criterion applies".into());
    }
    Ok(Certificate {
        verdict,
        kernel_dim: herm.len(),
        kernel_basis: arrays(&herm, reduced.d()),
        singular_spectrum: solve.spectrum,
        residuals,
        notes,
        reduced,
    })
}

/// Linear independence of the products `v_k v_j*` on `B(H)`.
pub fn extremality_choi(tau: &KrausChannel, tol: &ToleranceConfig) -> Result<Certificate> {
    if !tau.model().spec().is_full_matrix_algebra() {
        return Err(Error::NotFullMatrixAlgebra);
    }
    let reduced = minimal_kraus(tau, tol)?;
    let (n, d) = (reduced.carrier_dim(), reduced.d());
    let ks = reduced.kraus();
    let products: Vec<ComplexMatrix> = (0..d * d)
        .map(|kj| &ks[kj / d] * ks[kj % d].adjoint())
        .collect();
    let solve = solve_kernel(&columns_of(&products), tol)?;
    let raw: Vec<ComplexMatrix> = solve
        .coefficients
        .iter()
        .map(|c| ComplexMatrix::from_fn(d, d, |k, j| c[k * d + j]))
        .collect();
    let herm = hermitian_basis(&raw, raw.len());
    let ops: Vec<ComplexMatrix> = herm.iter().map(|c| kron(&identity(n), c)).collect();
    let mut residuals = BTreeMap::new();
    residuals.insert("kernel".to_string(), sandwich_residual(&reduced, &ops));
    residuals.insert("reduction".to_string(), reduced.distance(tau)?);
    Ok(Certificate {
        verdict: verdict_of(&solve, herm.len()),
        kernel_dim: herm.len(),
        kernel_basis: arrays(&ops, d),
        singular_spectrum: solve.spectrum,
        residuals,
        notes: vec![format!("{} products v_k v_j* tested", d * d)],
        reduced,
    })
}

/// Kernel with central coefficients for an inner family, solved block by
/// block on the minimal block components.
pub fn extremality_inner_center(tau: &KrausChannel, tol: &ToleranceConfig) -> Result<Certificate> {
    let model = tau.model().clone();
    let families = inner_block_families(tau, tol)?;
    let reduced = tau.with_kraus(assemble_inner(&model, &families)?)?;
    let d = reduced.d();
    let mut indeterminate = false;
    let mut spectrum = Vec::new();
    let mut ops = Vec::new();
    for (b, fam) in families.iter().enumerate() {
        let s = fam.len();
        if s == 0 {
            continue;
        }
        let products: Vec<ComplexMatrix> = (0..s * s)
            .map(|kj| &fam[kj / s] * fam[kj % s].adjoint())
            .collect();
        let solve = solve_kernel(&columns_of(&products), tol)?;
        indeterminate |= solve.indeterminate;
        spectrum.extend(solve.spectrum.iter().copied());
        let raw: Vec<ComplexMatrix> = solve
            .coefficients
            .iter()
            .map(|c| {
                ComplexMatrix::from_fn(d, d, |k, j| {
                    if k < s && j < s {
                        c[k * s + j]
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            })
            .collect();
        let proj = &model.block_projections()[b];
        ops.extend(
            hermitian_basis(&raw, raw.len())
                .iter()
                .map(|c| kron(proj, c)),
        );
    }
    let verdict = if indeterminate {
        Verdict::Indeterminate
    } else if ops.is_empty() {
        Verdict::Extremal
    } else {
        Verdict::NotExtremal
    };
    let mut residuals = BTreeMap::new();
    residuals.insert("kernel".to_string(), sandwich_residual(&reduced, &ops));
    residuals.insert("reduction".to_string(), reduced.distance(tau)?);
    Ok(Certificate {
        verdict,
        kernel_dim: ops.len(),
        kernel_basis: arrays(&ops, d),
        singular_spectrum: spectrum,
        residuals,
        notes: vec!["coefficients restricted to the center".into()],
        reduced,
    })
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub plus: KrausChannel,
    pub minus: KrausChannel,
    /// `max_x ‖τ(x) − (τ₊(x) + τ₋(x)) / 2‖` over the basis of `M`.
    pub reassembly_residual: f64,
    /// `max_x ‖τ₊(x) − τ₋(x)‖`.
    pub separation: f64,
}

/// Check that `Λ` is a Hermitian element of `π(M)'` on the dilation of `τ`
/// and return it scaled to operator norm one.
pub(crate) fn normalized_kernel_element(
    tau: &KrausChannel,
    lambda: &CoefficientArray,
    tol: &ToleranceConfig,
) -> Result<ComplexMatrix> {
    let (n, d) = (tau.carrier_dim(), tau.d());
    if lambda.d != d || lambda.entries.iter().any(|e| e.shape() != (n, n)) {
        return Err(Error::InvalidCoefficients(format!(
            "expected a {d}x{d} array of {n}x{n} operators"
        )));
    }
    let op = lambda.to_dilation();
    let asym = (&op - op.adjoint()).norm();
    if asym > tol.residual_tol * op.norm().max(1.0) {
        return Err(Error::InvalidCoefficients(format!(
            "array is not Hermitian (asymmetry {asym:e})"
        )));
    }
    for x in tau.model().basis_m() {
        let px = kron(x, &identity(d));
        let comm = (&px * &op - &op * &px).norm();
        if comm > tol.residual_tol * op.norm().max(1.0) {
            return Err(Error::InvalidCoefficients(format!(
                "entries do not lie in the commutant (defect {comm:e})"
            )));
        }
    }
    let norm = crate::linalg::operator_norm(&op)?;
    if norm == 0.0 {
        return Err(Error::InvalidCoefficients("array is zero".into()));
    }
    Ok(crate::linalg::symmetrize(&op).scale(1.0 / norm))
}

/// Split `τ` along `Λ`: `τ±` with Kraus rows `W± V*`, `W±² = I ∓ Λ`.
pub(crate) fn split(
    tau: &KrausChannel,
    op: &ComplexMatrix,
    tol: &ToleranceConfig,
) -> Result<Decomposition> {
    let d = tau.d();
    let id = identity(op.nrows());
    let vstar = tau.dilation_adjoint();
    let half = C64::new(0.5, 0.0);
    let w_plus = hermitian_power(&(&id - op), half, tol)?;
    let w_minus = hermitian_power(&(&id + op), half, tol)?;
    let plus = tau
        .with_kraus(KrausChannel::kraus_from_dilation(&(w_plus * &vstar), d))?
        .with_label(format!("{} (+)", tau.label()));
    let minus = tau
        .with_kraus(KrausChannel::kraus_from_dilation(&(w_minus * &vstar), d))?
        .with_label(format!("{} (-)", tau.label()));
    let mut reassembly_residual = 0.0_f64;
    for x in tau.model().basis_m() {
        let avg = (plus.apply(x)? + minus.apply(x)?).scale(0.5);
        reassembly_residual = reassembly_residual.max((tau.apply(x)? - avg).norm());
    }
    let separation = plus.distance(&minus)?;
    Ok(Decomposition {
        plus,
        minus,
        reassembly_residual,
        separation,
    })
}

/// Proper convex decomposition of a non-extremal `τ` from a kernel element
/// expressed against `τ`'s own Kraus family.
pub fn decompose_cp(
    tau: &KrausChannel,
    lambda: &CoefficientArray,
    tol: &ToleranceConfig,
) -> Result<Decomposition> {
    let op = normalized_kernel_element(tau, lambda, tol)?;
    let vstar = tau.dilation_adjoint();
    let residual = (vstar.adjoint() * &op * &vstar).norm();
    if residual > tol.residual_tol {
        return Err(Error::NotInKernel { residual });
    }
    let dec = split(tau, &op, tol)?;
    for part in [&dec.plus, &dec.minus] {
        let defect = part.unitality_defect();
        if defect > tol.residual_tol {
            return Err(Error::NotUnital { defect });
        }
    }
    Ok(dec)
}

#[derive(Debug, Clone)]
pub struct RNDerivative {
    /// `(t^k_j)` relative to the Kraus family of `τ`.
    pub t: CoefficientArray,
    pub psd: PsdReport,
    /// Verdict for `c P − T ⪰ 0`.
    pub bounded: PsdReport,
    pub domination_constant: f64,
    /// Smallest eigenvalue over the block Choi matrices of `c τ − η`.
    pub domination_min_eigenvalue: f64,
    pub reconstruction_residual: f64,
    pub singular_spectrum: Vec<f64>,
    pub notes: Vec<String>,
}

/// `T ∈ P π(M)' P` with `η(x) = V π(x) T V*` for every `x ∈ M`.
pub fn radon_nikodym(
    eta: &KrausChannel,
    tau: &KrausChannel,
    c: f64,
    tol: &ToleranceConfig,
) -> Result<RNDerivative> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::InvalidInput(format!(
            "domination constant {c} must be positive"
        )));
    }
    if eta.model().spec() != tau.model().spec() {
        return Err(Error::InvalidInput(
            "channels act on different algebras".into(),
        ));
    }
    let mut dom_min = f64::INFINITY;
    for b in 0..tau.model().spec().blocks.len() {
        let diff = tau.block_choi(b)?.scale(c) - eta.block_choi(b)?;
        let report = psd_check(&diff, tol)?;
        dom_min = dom_min.min(report.min_eigenvalue);
        match report.verdict {
            PsdVerdict::Psd => {}
            PsdVerdict::NotPsd => {
                return Err(Error::DominationFails {
                    min_eigenvalue: report.min_eigenvalue,
                })
            }
            PsdVerdict::Indeterminate => {
                return Err(Error::Indeterminate(format!(
                    "domination eigenvalue {:e} inside the tolerance band",
                    report.min_eigenvalue
                )))
            }
        }
    }

    let data = stinespring_support(tau, tol)?;
    let basis = data.compressed_commutant_basis();
    let (n, d) = (tau.carrier_dim(), tau.d());
    let vstar = tau.dilation_adjoint();
    let v = vstar.adjoint();
    let xs = tau.model().basis_m();
    let block = n * n;
    let mut a = ComplexMatrix::zeros(xs.len() * block, basis.len());
    let mut rhs = ComplexMatrix::zeros(xs.len() * block, 1);
    for (i, x) in xs.iter().enumerate() {
        let vpx = &v * kron(x, &identity(d));
        for (j, l) in basis.iter().enumerate() {
            a.view_mut((i * block, j), (block, 1))
                .copy_from(&vectorize(&(&vpx * l * &vstar)));
        }
        rhs.view_mut((i * block, 0), (block, 1))
            .copy_from(&vectorize(&eta.apply(x)?));
    }
    let dec = svd(&a)?;
    let decision = rank_decision(&dec.s, tol);
    if decision.indeterminate {
        return Err(Error::Indeterminate(format!(
            "derivative system rank near the cutoff, spectrum {:?}",
            dec.s
        )));
    }
    if decision.rank < basis.len() {
        return Err(Error::RankDeficient {
            rank: decision.rank,
            cols: basis.len(),
        });
    }
    let uhb = dec.u.adjoint() * &rhs;
    let theta = ComplexMatrix::from_fn(basis.len(), 1, |r, _| {
        (0..basis.len())
            .map(|k| dec.v[(r, k)] * uhb[(k, 0)] / dec.s[k])
            .sum::<C64>()
    });
    let residual = (&a * &theta - &rhs).norm();
    if residual > tol.residual_tol {
        return Err(Error::ReconstructionFailed { residual });
    }
    let coef: Vec<C64> = theta.iter().copied().collect();
    let t = crate::linalg::symmetrize(&combine(&basis, &coef));
    let psd = psd_check(&t, tol)?;
    let bounded = psd_check(&(&data.support_projection.scale(c) - &t), tol)?;
    let mut notes = vec!["domination verified as complete positivity of c*tau - eta".into()];
    if data.index != d {
        notes.push(format!(
            "Kraus family is not minimal ({d} operators, index {})",
            data.index
        ));
    }
    Ok(RNDerivative {
        t: CoefficientArray::from_dilation(&t, d),
        psd,
        bounded,
        domination_constant: c,
        domination_min_eigenvalue: dom_min,
        reconstruction_residual: residual,
        singular_spectrum: dec.s,
        notes,
    })
}

#[derive(Debug, Clone)]
pub struct Intertwiner {
    /// `(λ^k_j)` with `v_k* = Σ_j λ^k_j w_j*`.
    pub lambda: CoefficientArray,
    pub unitarity_defect: f64,
    pub residual: f64,
}

fn padded(tau: &KrausChannel, d: usize) -> Result<KrausChannel> {
    let n = tau.carrier_dim();
    let mut ks = tau.kraus().to_vec();
    ks.resize(d, ComplexMatrix::zeros(n, n));
    tau.with_kraus(ks)
}

/// Unitary `λ ∈ M_d(M')` relating two Kraus families of the same map.
pub fn intertwiner(
    v_family: &KrausChannel,
    w_family: &KrausChannel,
    tol: &ToleranceConfig,
) -> Result<Intertwiner> {
    if v_family.model().spec() != w_family.model().spec() {
        return Err(Error::InvalidInput(
            "families act on different algebras".into(),
        ));
    }
    let distance = v_family.distance(w_family)?;
    if distance > tol.residual_tol {
        return Err(Error::ChannelsDiffer { distance });
    }
    let d = v_family.d().max(w_family.d());
    let v = padded(v_family, d)?;
    let w = padded(w_family, d)?;
    let data_v = stinespring_support(&v, tol)?;
    let data_w = stinespring_support(&w, tol)?;
    let basis = data_w.full_commutant_basis();
    let vstar = v.dilation_adjoint();
    let wstar = w.dilation_adjoint();
    let images: Vec<ComplexMatrix> = basis.iter().map(|b| b * &wstar).collect();
    let a = columns_of(&images);
    let rhs = vectorize(&vstar);
    let dec = svd(&a)?;
    let decision = rank_decision(&dec.s, tol);
    if decision.indeterminate {
        return Err(Error::Indeterminate(format!(
            "intertwiner system rank near the cutoff, spectrum {:?}",
            dec.s
        )));
    }
    let uhb = dec.u.adjoint() * rhs;
    let coef: Vec<C64> = (0..basis.len())
        .map(|r| {
            (0..decision.rank)
                .map(|k| dec.v[(r, k)] * uhb[k] / dec.s[k])
                .sum()
        })
        .collect();
    let mut op = combine(&basis, &coef);
    for ((bv, qv), qw) in data_v
        .blocks
        .iter()
        .zip(data_v.complement_ranges())
        .zip(data_w.complement_ranges())
    {
        if qv.ncols() != qw.ncols() {
            return Err(Error::NoUnitarySolution {
                defect: (qv.ncols() as f64 - qw.ncols() as f64).abs(),
            });
        }
        let local = kron(&identity(bv.dim), &(qv * qw.adjoint()));
        let size = local.nrows();
        let mut view = op.view_mut((bv.offset, bv.offset), (size, size));
        view += local;
    }
    let residual = (&op * &wstar - &vstar).norm();
    let unitarity_defect = (&op * op.adjoint() - identity(op.nrows())).norm();
    if residual > tol.residual_tol || unitarity_defect > tol.residual_tol {
        return Err(Error::NoUnitarySolution {
            defect: unitarity_defect.max(residual),
        });
    }
    Ok(Intertwiner {
        lambda: CoefficientArray::from_dilation(&op, d),
        unitarity_defect,
        residual,
    })
}

/// Trace-orthonormal basis of `{V Λ V* : Λ ∈ π(M)'}`.
pub fn operator_system_basis(
    tau: &KrausChannel,
    tol: &ToleranceConfig,
) -> Result<Vec<ComplexMatrix>> {
    let data = stinespring_support(tau, tol)?;
    let vstar = tau.dilation_adjoint();
    let v = vstar.adjoint();
    let images: Vec<ComplexMatrix> = data
        .compressed_commutant_basis()
        .iter()
        .map(|l| &v * l * &vstar)
        .collect();
    let (q, _) = range_basis(&columns_of(&images), tol)?;
    let n = tau.carrier_dim();
    (0..q.ncols())
        .map(|j| Ok(devectorize(&q.column(j).into_owned(), n, n)?))
        .collect()
}
