//! Kraus families, Choi matrices and minimal Stinespring data.
//!
//! A channel acts by `τ(x) = Σ_k v_k x v_k*`. The dilation space is
//! `H ⊗ C^d` with basis index `h * d + k`; `V*` is the `Nd × N` matrix whose
//! row `h * d + k` is row `h` of `v_k*`, and `π(x) = x ⊗ I_d`.

use std::sync::Arc;

use crate::algebra::{AlgebraModel, Which};
use crate::error::{Error, Result};
use crate::linalg::{
    c, hermitian_eigen, identity, kron, nullspace, psd_check, range_basis, rank_decision, trace,
    ComplexMatrix, PsdVerdict, ToleranceConfig, C64,
};

#[derive(Debug, Clone)]
pub struct KrausChannel {
    model: Arc<AlgebraModel>,
    kraus: Vec<ComplexMatrix>,
    label: String,
}

fn check_family(model: &AlgebraModel, kraus: &[ComplexMatrix]) -> Result<()> {
    if kraus.is_empty() {
        return Err(Error::InvalidInput("Kraus family is empty".into()));
    }
    let n = model.carrier_dim();
    if let Some((k, v)) = kraus.iter().enumerate().find(|(_, v)| v.shape() != (n, n)) {
        return Err(Error::ShapeMismatch(format!(
            "Kraus operator {k} is {}x{}, carrier dimension is {n}",
            v.nrows(),
            v.ncols()
        )));
    }
    Ok(())
}

impl KrausChannel {
    /// A unital CP map; fails when `‖Σ v v* − I‖ > residual_tol`.
    pub fn new(
        model: Arc<AlgebraModel>,
        kraus: Vec<ComplexMatrix>,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        let channel = Self::new_cp(model, kraus)?;
        let defect = channel.unitality_defect();
        if defect > tol.residual_tol {
            return Err(Error::NotUnital { defect });
        }
        Ok(channel)
    }

    /// A CP map without the unitality requirement.
    pub fn new_cp(model: Arc<AlgebraModel>, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        check_family(&model, &kraus)?;
        Ok(Self {
            model,
            kraus,
            label: String::new(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn model(&self) -> &Arc<AlgebraModel> {
        &self.model
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of Kraus operators.
    pub fn d(&self) -> usize {
        self.kraus.len()
    }

    pub fn carrier_dim(&self) -> usize {
        self.model.carrier_dim()
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.carrier_dim();
        if x.shape() != (n, n) {
            return Err(Error::ShapeMismatch(format!(
                "argument is {}x{}, carrier dimension is {n}",
                x.nrows(),
                x.ncols()
            )));
        }
        Ok(self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, v| {
                acc + v * x * v.adjoint()
            }))
    }

    /// `Σ_k v_k v_k*`.
    pub fn image_of_unit(&self) -> ComplexMatrix {
        let n = self.carrier_dim();
        self.kraus
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, v| acc + v * v.adjoint())
    }

    pub fn unitality_defect(&self) -> f64 {
        (self.image_of_unit() - identity(self.carrier_dim())).norm()
    }

    /// The `Nd × N` matrix `V*`.
    pub fn dilation_adjoint(&self) -> ComplexMatrix {
        let (n, d) = (self.carrier_dim(), self.d());
        ComplexMatrix::from_fn(n * d, n, |r, col| self.kraus[r % d][(col, r / d)].conj())
    }

    /// Read Kraus operators back off a `V*` with `d` slots.
    pub fn kraus_from_dilation(vstar: &ComplexMatrix, d: usize) -> Vec<ComplexMatrix> {
        let n = vstar.ncols();
        (0..d)
            .map(|k| ComplexMatrix::from_fn(n, n, |row, col| vstar[(col * d + k, row)].conj()))
            .collect()
    }

    /// Same algebra, new Kraus family.
    pub fn with_kraus(&self, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        Ok(Self::new_cp(self.model.clone(), kraus)?.with_label(self.label.clone()))
    }

    /// Kraus family with rows `u V*`, i.e. `w_j* = Σ_k u_jk v_k*`.
    pub fn mixed(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.ncols() != self.d() {
            return Err(Error::ShapeMismatch(format!(
                "mixing matrix has {} columns, channel has {} Kraus operators",
                u.ncols(),
                self.d()
            )));
        }
        let n = self.carrier_dim();
        let kraus = (0..u.nrows())
            .map(|j| {
                (0..self.d()).fold(ComplexMatrix::zeros(n, n), |acc, k| {
                    acc + &self.kraus[k] * u[(j, k)].conj()
                })
            })
            .collect();
        self.with_kraus(kraus)
    }

    /// `x ↦ u τ(u* x u) u*`.
    pub fn conjugated(&self, u: &ComplexMatrix) -> Result<Self> {
        let ua = u.adjoint();
        self.with_kraus(self.kraus.iter().map(|v| u * v * &ua).collect())
    }

    /// `p τ + (1 − p) η` as a concatenated Kraus family.
    pub fn convex_mix(&self, p: f64, other: &Self) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!(
                "mixing weight {p} outside [0, 1]"
            )));
        }
        let mut kraus: Vec<_> = self.kraus.iter().map(|v| v.scale(p.sqrt())).collect();
        kraus.extend(other.kraus.iter().map(|v| v.scale((1.0 - p).sqrt())));
        self.with_kraus(kraus)
    }

    /// Largest deviation `‖τ(x) − η(x)‖` over the basis of `M`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        let mut worst = 0.0_f64;
        for x in self.model.basis_m() {
            worst = worst.max((self.apply(x)? - other.apply(x)?).norm());
        }
        Ok(worst)
    }

    /// Index of the first Kraus operator outside `M`, with its distance.
    pub fn first_non_inner(&self, tol: &ToleranceConfig) -> Result<Option<(usize, f64)>> {
        for (k, v) in self.kraus.iter().enumerate() {
            let m = self.model.membership(v, Which::Algebra, tol)?;
            if !m.is_member {
                return Ok(Some((k, m.distance)));
            }
        }
        Ok(None)
    }

    pub fn is_inner(&self, tol: &ToleranceConfig) -> Result<bool> {
        Ok(self.first_non_inner(tol)?.is_none())
    }

    /// Largest distance of `τ(x)` from `M` over the basis of `M`.
    pub fn algebra_defect(&self) -> Result<f64> {
        let mut worst = 0.0_f64;
        for x in self.model.basis_m() {
            let y = self.apply(x)?;
            worst = worst.max((&y - self.model.project(&y, Which::Algebra)?).norm());
        }
        Ok(worst)
    }

    /// Choi matrix of the restriction to block `b`: `Σ_ij E_ij ⊗ τ(E_ij ⊗ I)`
    /// with `E_ij` ranging over `M_{n_b}`.
    pub fn block_choi(&self, b: usize) -> Result<ComplexMatrix> {
        let spec = self.model.spec();
        let block = spec
            .blocks
            .get(b)
            .ok_or_else(|| Error::InvalidInput(format!("block {b} out of range")))?;
        let (nb, n) = (block.dim, self.carrier_dim());
        let mut out = ComplexMatrix::zeros(nb * n, nb * n);
        for i in 0..nb {
            for j in 0..nb {
                let mut elems: Vec<ComplexMatrix> = spec
                    .blocks
                    .iter()
                    .map(|bl| ComplexMatrix::zeros(bl.dim, bl.dim))
                    .collect();
                elems[b][(i, j)] = c(1.0);
                let y = self.apply(&self.model.embed(&elems)?)?;
                out.view_mut((i * n, j * n), (n, n)).copy_from(&y);
            }
        }
        Ok(out)
    }
}

/// `Σ_ij E_ij ⊗ τ(E_ij)` over all of `B(H)`; entry `[(i, a), (j, b)] = τ(E_ij)_ab`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    pub matrix: ComplexMatrix,
}

impl ChoiMatrix {
    pub fn carrier_dim(&self) -> usize {
        (self.matrix.nrows() as f64).sqrt().round() as usize
    }

    pub fn rank(&self, tol: &ToleranceConfig) -> Result<usize> {
        let eig = hermitian_eigen(&self.matrix)?;
        let s: Vec<f64> = eig.values.iter().rev().map(|v| v.max(0.0)).collect();
        let dec = rank_decision(&s, tol);
        if dec.indeterminate {
            return Err(Error::Indeterminate(format!(
                "Choi rank near the cutoff, spectrum {s:?}"
            )));
        }
        Ok(dec.rank)
    }
}

pub fn to_choi(tau: &KrausChannel) -> ChoiMatrix {
    let n = tau.carrier_dim();
    let mut out = ComplexMatrix::zeros(n * n, n * n);
    for v in tau.kraus() {
        let w = ComplexMatrix::from_fn(n * n, 1, |r, _| v[(r % n, r / n)]);
        out += &w * w.adjoint();
    }
    ChoiMatrix { matrix: out }
}

/// Kraus operators of a Choi matrix in descending eigenvalue order.
pub fn kraus_from_choi(choi: &ComplexMatrix, tol: &ToleranceConfig) -> Result<Vec<ComplexMatrix>> {
    let n = (choi.nrows() as f64).sqrt().round() as usize;
    if !choi.is_square() || n * n != choi.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "Choi matrix must be N^2 x N^2, got {}x{}",
            choi.nrows(),
            choi.ncols()
        )));
    }
    let report = psd_check(choi, tol)?;
    match report.verdict {
        PsdVerdict::Psd => {}
        PsdVerdict::NotPsd => {
            return Err(Error::NotCompletelyPositive {
                min_eigenvalue: report.min_eigenvalue,
            })
        }
        PsdVerdict::Indeterminate => {
            return Err(Error::Indeterminate(format!(
                "Choi minimal eigenvalue {:e} inside the tolerance band",
                report.min_eigenvalue
            )))
        }
    }
    let eig = hermitian_eigen(choi)?;
    let desc: Vec<usize> = (0..eig.values.len()).rev().collect();
    let s: Vec<f64> = desc.iter().map(|&i| eig.values[i].max(0.0)).collect();
    let dec = rank_decision(&s, tol);
    if dec.indeterminate {
        return Err(Error::Indeterminate(format!(
            "Choi rank near the cutoff, spectrum {s:?}"
        )));
    }
    Ok(desc
        .iter()
        .take(dec.rank.max(1))
        .map(|&col| {
            let scale = eig.values[col].max(0.0).sqrt();
            ComplexMatrix::from_fn(n, n, |a, i| eig.vectors[(i * n + a, col)] * scale)
        })
        .collect())
}

pub fn from_choi(
    model: Arc<AlgebraModel>,
    choi: &ChoiMatrix,
    tol: &ToleranceConfig,
) -> Result<KrausChannel> {
    if choi.carrier_dim() != model.carrier_dim() {
        return Err(Error::ShapeMismatch(format!(
            "Choi matrix for carrier dimension {}, algebra has {}",
            choi.carrier_dim(),
            model.carrier_dim()
        )));
    }
    KrausChannel::new_cp(model, kraus_from_choi(&choi.matrix, tol)?)
}

/// A scalar-linearly-independent Kraus family for `x ↦ Σ g x g*` on `M_n`,
/// read off the Choi matrix.
pub fn minimal_family(
    family: &[ComplexMatrix],
    tol: &ToleranceConfig,
) -> Result<Vec<ComplexMatrix>> {
    let n = family.first().map(|g| g.nrows()).unwrap_or(0);
    let mut choi = ComplexMatrix::zeros(n * n, n * n);
    for g in family {
        let w = ComplexMatrix::from_fn(n * n, 1, |r, _| g[(r % n, r / n)]);
        choi += &w * w.adjoint();
    }
    if choi.norm() == 0.0 {
        return Ok(Vec::new());
    }
    kraus_from_choi(&choi, tol)
}

/// The part of the support projection living over one central block.
#[derive(Debug, Clone)]
pub struct BlockSupport {
    /// First dilation index of the block slice `C^{n_b} ⊗ C^{m_b d}`.
    pub offset: usize,
    pub dim: usize,
    pub multiplicity: usize,
    /// Orthonormal basis (columns) of `range(q_b) ⊆ C^{m_b d}`.
    pub range: ComplexMatrix,
}

impl BlockSupport {
    pub fn width(&self) -> usize {
        self.range.nrows()
    }

    pub fn rank(&self) -> usize {
        self.range.ncols()
    }
}

#[derive(Debug, Clone)]
pub struct StinespringData {
    pub d: usize,
    pub support_projection: ComplexMatrix,
    pub index: usize,
    pub blocks: Vec<BlockSupport>,
    /// Singular values of the cyclic spanning set.
    pub singular_values: Vec<f64>,
    /// `‖P − ⊕ I ⊗ q_b‖`.
    pub block_form_defect: f64,
}

impl StinespringData {
    /// Orthonormal basis of `P π(M)' P`: `I_{n_b} ⊗ Q_b E_st Q_b* / √n_b`.
    pub fn compressed_commutant_basis(&self) -> Vec<ComplexMatrix> {
        commutant_basis(&self.blocks, self.support_projection.nrows(), true)
    }

    /// Orthonormal basis of `π(M)'`.
    pub fn full_commutant_basis(&self) -> Vec<ComplexMatrix> {
        commutant_basis(&self.blocks, self.support_projection.nrows(), false)
    }

    /// `⊕ I ⊗ (1 − q_b)` range bases, one per block.
    pub fn complement_ranges(&self) -> Vec<ComplexMatrix> {
        self.blocks
            .iter()
            .map(|b| {
                let w = b.width();
                let q = &b.range * b.range.adjoint();
                let eig = hermitian_eigen(&(identity(w) - q)).expect("square input");
                let cols: Vec<usize> = (0..w).filter(|&i| eig.values[i] > 0.5).collect();
                ComplexMatrix::from_fn(w, cols.len(), |r, c| eig.vectors[(r, cols[c])])
            })
            .collect()
    }
}

fn commutant_basis(blocks: &[BlockSupport], total: usize, compressed: bool) -> Vec<ComplexMatrix> {
    let mut out = Vec::new();
    for b in blocks {
        let w = b.width();
        let q = if compressed {
            b.range.clone()
        } else {
            identity(w)
        };
        let r = q.ncols();
        let scale = 1.0 / (b.dim as f64).sqrt();
        for s in 0..r {
            for t in 0..r {
                let local = q.column(s) * q.column(t).adjoint();
                let full_local = kron(&identity(b.dim), &local).scale(scale);
                let mut m = ComplexMatrix::zeros(total, total);
                m.view_mut((b.offset, b.offset), (b.dim * w, b.dim * w))
                    .copy_from(&full_local);
                out.push(m);
            }
        }
    }
    out
}

/// Support projection of the cyclic subspace `[π(M) V* H]` and the index.
pub fn stinespring_support(tau: &KrausChannel, tol: &ToleranceConfig) -> Result<StinespringData> {
    let model = tau.model();
    let (n, d) = (tau.carrier_dim(), tau.d());
    let vstar = tau.dilation_adjoint();
    let basis = model.basis_m();
    let mut span = ComplexMatrix::zeros(n * d, basis.len() * n);
    for (i, x) in basis.iter().enumerate() {
        let block = kron(x, &identity(d)) * &vstar;
        span.view_mut((0, i * n), (n * d, n)).copy_from(&block);
    }
    let (q, singular_values) = range_basis(&span, tol)?;
    let p = &q * q.adjoint();

    let mut blocks = Vec::new();
    let mut block_form = ComplexMatrix::zeros(n * d, n * d);
    let mut index = 0;
    for (block, &off) in model.spec().blocks.iter().zip(model.offsets()) {
        let (nb, mb) = (block.dim, block.multiplicity);
        let w = mb * d;
        let start = off * d;
        let mut qb = ComplexMatrix::zeros(w, w);
        for i in 0..nb {
            qb += p.view((start + i * w, start + i * w), (w, w));
        }
        qb /= c(nb as f64);
        let eig = hermitian_eigen(&qb)?;
        let s: Vec<f64> = eig.values.iter().rev().map(|v| v.max(0.0)).collect();
        let dec = rank_decision(&s, tol);
        if dec.indeterminate {
            return Err(Error::Indeterminate(format!(
                "support projection rank near the cutoff, spectrum {s:?}"
            )));
        }
        let r = dec.rank;
        let range = ComplexMatrix::from_fn(w, r, |row, col| eig.vectors[(row, w - 1 - col)]);
        let local = kron(&identity(nb), &(&range * range.adjoint()));
        block_form
            .view_mut((start, start), (nb * w, nb * w))
            .copy_from(&local);
        index = index.max(r.div_ceil(mb));
        blocks.push(BlockSupport {
            offset: start,
            dim: nb,
            multiplicity: mb,
            range,
        });
    }
    Ok(StinespringData {
        d,
        block_form_defect: (&p - &block_form).norm(),
        support_projection: p,
        index: index.max(1),
        blocks,
        singular_values,
    })
}

pub fn index(tau: &KrausChannel, tol: &ToleranceConfig) -> Result<usize> {
    Ok(stinespring_support(tau, tol)?.index)
}

/// A Kraus family of cardinality `index(τ)` representing the same map.
///
/// Inner families are reduced block by block through the Choi matrix of each
/// block component and stay inner. Other families are rebuilt from the
/// subrepresentation on the support projection.
pub fn minimal_kraus(tau: &KrausChannel, tol: &ToleranceConfig) -> Result<KrausChannel> {
    if tau.is_inner(tol)? {
        return minimal_inner_kraus(tau, tol);
    }
    let data = stinespring_support(tau, tol)?;
    let (n, d, dn) = (tau.carrier_dim(), tau.d(), data.index);
    let vstar = tau.dilation_adjoint();
    let mut wstar = ComplexMatrix::zeros(n * dn, n);
    for b in &data.blocks {
        let (nb, w, wn) = (b.dim, b.width(), b.multiplicity * dn);
        let mut j = ComplexMatrix::zeros(wn, w);
        j.view_mut((0, 0), (b.rank(), w))
            .copy_from(&b.range.adjoint());
        let start_new = b.offset / d * dn;
        for i in 0..nb {
            let rows = vstar.rows(b.offset + i * w, w);
            let mapped = &j * rows;
            wstar.rows_mut(start_new + i * wn, wn).copy_from(&mapped);
        }
    }
    tau.with_kraus(KrausChannel::kraus_from_dilation(&wstar, dn))
}

/// Per-block minimal families `h_{k,b}` of an inner channel, `k < s_b`.
pub fn inner_block_families(
    tau: &KrausChannel,
    tol: &ToleranceConfig,
) -> Result<Vec<Vec<ComplexMatrix>>> {
    if let Some((index, distance)) = tau.first_non_inner(tol)? {
        return Err(Error::NotInner { index, distance });
    }
    let model = tau.model();
    let compressed: Vec<Vec<ComplexMatrix>> = tau
        .kraus()
        .iter()
        .map(|v| model.compress(v))
        .collect::<Result<_>>()?;
    (0..model.spec().blocks.len())
        .map(|b| {
            let family: Vec<ComplexMatrix> = compressed.iter().map(|v| v[b].clone()).collect();
            minimal_family(&family, tol)
        })
        .collect()
}

/// Glue per-block families into one inner family, padding with zeros.
pub fn assemble_inner(
    model: &AlgebraModel,
    families: &[Vec<ComplexMatrix>],
) -> Result<Vec<ComplexMatrix>> {
    let d = families.iter().map(Vec::len).max().unwrap_or(0).max(1);
    (0..d)
        .map(|k| {
            let elems: Vec<ComplexMatrix> = model
                .spec()
                .blocks
                .iter()
                .zip(families)
                .map(|(bl, fam)| {
                    fam.get(k)
                        .cloned()
                        .unwrap_or_else(|| ComplexMatrix::zeros(bl.dim, bl.dim))
                })
                .collect();
            model.embed(&elems)
        })
        .collect()
}

fn minimal_inner_kraus(tau: &KrausChannel, tol: &ToleranceConfig) -> Result<KrausChannel> {
    let families = inner_block_families(tau, tol)?;
    tau.with_kraus(assemble_inner(tau.model(), &families)?)
}

/// Kernel of `(c_α) ↦ Σ_α c_α v_α*` over `c_α ∈ M'`.
#[derive(Debug, Clone)]
pub struct CommKernel {
    /// Each element is a `d`-tuple of commutant operators, unit norm overall.
    pub basis: Vec<Vec<ComplexMatrix>>,
    pub singular_values: Vec<f64>,
}

impl CommKernel {
    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }
}

pub fn kraus_comm_kernel(tau: &KrausChannel, tol: &ToleranceConfig) -> Result<CommKernel> {
    let comm = tau.model().basis_comm();
    let columns: Vec<ComplexMatrix> = tau
        .kraus()
        .iter()
        .flat_map(|v| {
            let va = v.adjoint();
            comm.iter().map(move |b| b * &va)
        })
        .collect();
    let ns = nullspace(&crate::linalg::columns_of(&columns), tol)?;
    let n = tau.carrier_dim();
    let basis = (0..ns.dim())
        .map(|j| {
            let coef = ns.basis.column(j);
            (0..tau.d())
                .map(|a| {
                    comm.iter()
                        .enumerate()
                        .fold(ComplexMatrix::zeros(n, n), |acc, (s, b)| {
                            acc + b * coef[a * comm.len() + s]
                        })
                })
                .collect()
        })
        .collect();
    Ok(CommKernel {
        basis,
        singular_values: ns.singular_values,
    })
}

/// Density matrix of a normal state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    rho: ComplexMatrix,
    min_eigenvalue: f64,
    faithful: bool,
}

impl DensityState {
    pub fn new(rho: ComplexMatrix, tol: &ToleranceConfig) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::InvalidState(format!(
                "density is {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let report = psd_check(&rho, tol).map_err(|e| Error::InvalidState(e.to_string()))?;
        if report.verdict == PsdVerdict::NotPsd {
            return Err(Error::InvalidState(format!(
                "density has negative eigenvalue {:e}",
                report.min_eigenvalue
            )));
        }
        let tr = trace(&rho);
        if (tr - c(1.0)).norm() > tol.residual_tol {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let rho = crate::linalg::symmetrize(&rho);
        Ok(Self {
            faithful: report.min_eigenvalue > tol.rank_tol * tol.indeterminate_band,
            min_eigenvalue: report.min_eigenvalue,
            rho,
        })
    }

    /// Normalized trace on the carrier.
    pub fn tracial(n: usize) -> Self {
        Self {
            rho: identity(n).scale(1.0 / n as f64),
            min_eigenvalue: 1.0 / n as f64,
            faithful: true,
        }
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn faithful(&self) -> bool {
        self.faithful
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn expect(&self, x: &ComplexMatrix) -> C64 {
        crate::linalg::trace_inner(&self.rho, x)
    }
}

/// `max_x |Tr(ρ τ(x)) − Tr(ρ x)|` over the basis of `M`.
pub fn phi_defect(tau: &KrausChannel, phi: &DensityState) -> Result<f64> {
    if phi.rho().shape() != (tau.carrier_dim(), tau.carrier_dim()) {
        return Err(Error::ShapeMismatch(
            "state and channel carriers differ".into(),
        ));
    }
    let mut worst = 0.0_f64;
    for x in tau.model().basis_m() {
        worst = worst.max((phi.expect(&tau.apply(x)?) - phi.expect(x)).norm());
    }
    Ok(worst)
}

pub fn is_phi_preserving(
    tau: &KrausChannel,
    phi: &DensityState,
    tol: &ToleranceConfig,
) -> Result<(bool, f64)> {
    let defect = phi_defect(tau, phi)?;
    Ok((defect <= tol.residual_tol, defect))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgebraSpec;
    use crate::linalg::{diag, matrix_unit};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn full(n: usize) -> Arc<AlgebraModel> {
        Arc::new(AlgebraModel::build(AlgebraSpec::full(n).unwrap()).unwrap())
    }

    fn pinching() -> KrausChannel {
        KrausChannel::new(full(2), vec![diag(&[1.0, 0.0]), diag(&[0.0, 1.0])], &tol()).unwrap()
    }

    fn hadamard() -> ComplexMatrix {
        let s = 1.0 / 2f64.sqrt();
        ComplexMatrix::from_row_slice(2, 2, &[c(s), c(s), c(s), c(-s)])
    }

    #[test]
    fn rejects_non_unital_family() {
        let err = KrausChannel::new(full(2), vec![diag(&[1.0, 0.5])], &tol()).unwrap_err();
        assert!(matches!(err, Error::NotUnital { .. }));
        assert!(KrausChannel::new(full(2), vec![], &tol()).is_err());
        assert!(KrausChannel::new(full(2), vec![identity(3)], &tol()).is_err());
    }

    #[test]
    fn apply_examples() {
        let id = KrausChannel::new(full(2), vec![identity(2)], &tol()).unwrap();
        let x = ComplexMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(3.0), c(4.0)]);
        assert_eq!(id.apply(&x).unwrap(), x);
        assert_eq!(pinching().apply(&x).unwrap(), diag(&[1.0, 4.0]));
        let u = KrausChannel::new(full(2), vec![hadamard()], &tol()).unwrap();
        let y = u.apply(&diag(&[3.0, -1.0])).unwrap();
        let eig = hermitian_eigen(&y).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-12 && (eig.values[1] - 3.0).abs() < 1e-12);
        assert!(id.apply(&identity(3)).is_err());
    }

    #[test]
    fn choi_ranks() {
        let id = KrausChannel::new(full(2), vec![identity(2)], &tol()).unwrap();
        assert_eq!(to_choi(&id).rank(&tol()).unwrap(), 1);
        let choi = to_choi(&pinching());
        assert_eq!(choi.rank(&tol()).unwrap(), 2);
        // pinching Choi is E11⊗E11 + E22⊗E22
        let expected = kron(&matrix_unit(2, 0, 0), &matrix_unit(2, 0, 0))
            + kron(&matrix_unit(2, 1, 1), &matrix_unit(2, 1, 1));
        assert!((&choi.matrix - expected).norm() < 1e-15);
    }

    #[test]
    fn choi_round_trip() {
        let choi = to_choi(&pinching());
        let back = from_choi(full(2), &choi, &tol()).unwrap();
        assert_eq!(back.d(), 2);
        assert!((to_choi(&back).matrix - &choi.matrix).norm() < 1e-10);
        let bad = ChoiMatrix {
            matrix: diag(&[1.0, -1.0, 0.0, 0.0]),
        };
        assert!(matches!(
            from_choi(full(2), &bad, &tol()),
            Err(Error::NotCompletelyPositive { .. })
        ));
    }

    #[test]
    fn support_examples() {
        let id = KrausChannel::new(full(2), vec![identity(2)], &tol()).unwrap();
        let s = stinespring_support(&id, &tol()).unwrap();
        assert_eq!(s.index, 1);
        assert!((&s.support_projection - identity(2)).norm() < 1e-12);

        let h = hadamard().scale(1.0 / 2f64.sqrt());
        let dup = KrausChannel::new(full(2), vec![h.clone(), h], &tol()).unwrap();
        let s = stinespring_support(&dup, &tol()).unwrap();
        assert_eq!(s.index, 1);
        let p = &s.support_projection;
        assert!((p * p - p).norm() < 1e-10 && (p - p.adjoint()).norm() < 1e-10);
        assert!((crate::linalg::trace(p) - c(2.0)).norm() < 1e-10);

        let s = stinespring_support(&pinching(), &tol()).unwrap();
        assert_eq!(s.index, 2);
        assert!((&s.support_projection - identity(4)).norm() < 1e-12);
    }

    #[test]
    fn minimal_kraus_examples() {
        let h = hadamard();
        let dup = KrausChannel::new(
            full(2),
            vec![h.scale(1.0 / 2f64.sqrt()), h.scale(1.0 / 2f64.sqrt())],
            &tol(),
        )
        .unwrap();
        let m = minimal_kraus(&dup, &tol()).unwrap();
        assert_eq!(m.d(), 1);
        assert!(m.distance(&dup).unwrap() < 1e-10);

        let p = minimal_kraus(&pinching(), &tol()).unwrap();
        assert_eq!(p.d(), 2);
        assert!(p.distance(&pinching()).unwrap() < 1e-10);

        let redundant =
            KrausChannel::new(full(2), vec![identity(2).scale(0.5); 4], &tol()).unwrap();
        let m = minimal_kraus(&redundant, &tol()).unwrap();
        assert_eq!(m.d(), 1);
        assert!(m.distance(&redundant).unwrap() < 1e-10);
    }

    #[test]
    fn comm_kernel_examples() {
        assert!(kraus_comm_kernel(&pinching(), &tol()).unwrap().is_empty());
        let h = hadamard().scale(1.0 / 2f64.sqrt());
        let dup = KrausChannel::new(full(2), vec![h.clone(), h], &tol()).unwrap();
        let k = kraus_comm_kernel(&dup, &tol()).unwrap();
        assert_eq!(k.basis.len(), 1);
        let el = &k.basis[0];
        assert!((&el[0] + &el[1]).norm() < 1e-12);
        assert!(el[0].norm() > 0.1);
    }

    #[test]
    fn comm_kernel_sees_commutant_dependence() {
        let model =
            Arc::new(AlgebraModel::build(AlgebraSpec::from_pairs(&[(2, 2)]).unwrap()).unwrap());
        let u = hadamard();
        let z = diag(&[1.0, -1.0]);
        let s = 1.0 / 2f64.sqrt();
        let v1 = kron(&u, &identity(2)).scale(s);
        let v2 = kron(&u, &z).scale(s);
        let tau = KrausChannel::new(model, vec![v1, v2], &tol()).unwrap();
        assert_eq!(minimal_family(tau.kraus(), &tol()).unwrap().len(), 2);
        // kernel is {(-(I⊗w Z), I⊗w)}: one copy of M' per solution direction
        let k = kraus_comm_kernel(&tau, &tol()).unwrap();
        assert_eq!(k.basis.len(), 4);
        let red = minimal_kraus(&tau, &tol()).unwrap();
        assert_eq!(red.d(), 1);
        assert!(red.distance(&tau).unwrap() < 1e-10);
        assert!(kraus_comm_kernel(&red, &tol()).unwrap().is_empty());
    }

    #[test]
    fn phi_preservation_examples() {
        let phi = DensityState::tracial(2);
        let (ok, defect) = is_phi_preserving(&pinching(), &phi, &tol()).unwrap();
        assert!(ok && defect < 1e-15);
        let g = 0.5_f64;
        let ad = KrausChannel::new(
            full(2),
            vec![
                diag(&[1.0, (1.0 - g).sqrt()]),
                matrix_unit(2, 1, 0).scale(g.sqrt()),
            ],
            &tol(),
        )
        .unwrap();
        let (ok, defect) = is_phi_preserving(&ad, &phi, &tol()).unwrap();
        assert!(!ok && defect > 0.1);
    }

    #[test]
    fn density_validation() {
        assert!(DensityState::new(diag(&[0.5, 0.6]), &tol()).is_err());
        assert!(DensityState::new(diag(&[1.5, -0.5]), &tol()).is_err());
        let s = DensityState::new(diag(&[1.0, 0.0]), &tol()).unwrap();
        assert!(!s.faithful());
        assert!(DensityState::new(diag(&[0.25, 0.75]), &tol())
            .unwrap()
            .faithful());
    }

    #[test]
    fn dilation_round_trip() {
        let tau = pinching();
        let vs = tau.dilation_adjoint();
        assert_eq!(vs.shape(), (4, 2));
        assert!((vs.adjoint() * &vs - identity(2)).norm() < 1e-15);
        let back = KrausChannel::kraus_from_dilation(&vs, 2);
        assert_eq!(back, tau.kraus());
    }
}
