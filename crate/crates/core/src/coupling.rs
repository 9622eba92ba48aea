//! Couplings of `φ` with itself and extremality inside `CP_φ`.
//!
//! A coupling is a density `D` on `C^N ⊗ C^N` (multiplicity-free carrier)
//! paired with `M ⊗ M` through `ψ(x ⊗ y) = Tr(D (xᵀ ⊗ y))`. The channel `τ`
//! and its coupling determine each other through
//! `Tr(D (xᵀ ⊗ y)) = Tr(ρ^{1/2} τ(y) ρ^{1/2} x)`, so the marginals are
//! `Tr₂ D = ρᵀ` and `Tr₁ D = ρ`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channel::{
    assemble_inner, inner_block_families, kraus_from_choi, minimal_kraus, stinespring_support,
    KrausChannel,
};
use crate::error::{Error, Result};
use crate::extremal::{
    combine, hermitian_basis, normalized_kernel_element, solve_kernel, split, CoefficientArray,
    Decomposition, Verdict,
};
use crate::linalg::{
    columns_of, identity, kron, psd_check, range_basis, trace, vectorize, ComplexMatrix,
    PsdVerdict, ToleranceConfig, C64,
};
use crate::modular::{check_cp_phi, ModularData};

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingState {
    pub matrix: ComplexMatrix,
}

impl CouplingState {
    pub fn carrier_dim(&self) -> usize {
        (self.matrix.nrows() as f64).sqrt().round() as usize
    }

    /// `Tr₂ D`.
    pub fn first_marginal(&self) -> ComplexMatrix {
        let n = self.carrier_dim();
        ComplexMatrix::from_fn(n, n, |p, r| {
            (0..n).map(|q| self.matrix[(p * n + q, r * n + q)]).sum()
        })
    }

    /// `Tr₁ D`.
    pub fn second_marginal(&self) -> ComplexMatrix {
        let n = self.carrier_dim();
        ComplexMatrix::from_fn(n, n, |q, s| {
            (0..n).map(|p| self.matrix[(p * n + q, p * n + s)]).sum()
        })
    }

    /// `ψ(x ⊗ y) = Tr(D (xᵀ ⊗ y))`.
    pub fn pair(&self, x: &ComplexMatrix, y: &ComplexMatrix) -> C64 {
        trace(&(&self.matrix * kron(&x.transpose(), y)))
    }

    /// Largest marginal deviation from `(ρᵀ, ρ)`.
    pub fn marginal_defect(&self, rho: &ComplexMatrix) -> f64 {
        let a = (self.first_marginal() - rho.transpose()).norm();
        let b = (self.second_marginal() - rho).norm();
        a.max(b)
    }
}

fn require_multiplicity_free(md: &ModularData) -> Result<()> {
    if !md.model().spec().is_multiplicity_free() {
        return Err(Error::NotMultiplicityFree);
    }
    Ok(())
}

/// Pairs `(a, b)` of carrier indices lying in a common block.
fn same_block_pairs(md: &ModularData) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (block, &off) in md.model().spec().blocks.iter().zip(md.model().offsets()) {
        for a in off..off + block.dim {
            for b in off..off + block.dim {
                out.push((a, b));
            }
        }
    }
    out
}

pub fn channel_to_coupling(
    md: &ModularData,
    tau: &KrausChannel,
    tol: &ToleranceConfig,
) -> Result<CouplingState> {
    require_multiplicity_free(md)?;
    check_cp_phi(tau, md.phi(), tol)?;
    let n = tau.carrier_dim();
    let pairs = same_block_pairs(md);
    let s = md.sqrt_rho();
    let mut d = ComplexMatrix::zeros(n * n, n * n);
    for &(c, e) in &pairs {
        let mut unit = ComplexMatrix::zeros(n, n);
        unit[(c, e)] = C64::new(1.0, 0.0);
        let k = s * tau.apply(&unit)? * s;
        for &(a, b) in &pairs {
            d[(a * n + e, b * n + c)] += k[(b, a)];
        }
    }
    Ok(CouplingState { matrix: d })
}

/// Validate `D` as an element of `C_φ`.
pub fn check_coupling(md: &ModularData, d: &CouplingState, tol: &ToleranceConfig) -> Result<()> {
    require_multiplicity_free(md)?;
    let n = md.model().carrier_dim();
    if d.matrix.shape() != (n * n, n * n) {
        return Err(Error::ShapeMismatch(format!(
            "coupling must be {0}x{0}, got {1}x{2}",
            n * n,
            d.matrix.nrows(),
            d.matrix.ncols()
        )));
    }
    let report = psd_check(&d.matrix, tol)?;
    match report.verdict {
        PsdVerdict::Psd => {}
        PsdVerdict::NotPsd => {
            return Err(Error::InvalidState(format!(
                "coupling has negative eigenvalue {:e}",
                report.min_eigenvalue
            )))
        }
        PsdVerdict::Indeterminate => {
            return Err(Error::Indeterminate(format!(
                "coupling eigenvalue {:e} inside the tolerance band",
                report.min_eigenvalue
            )))
        }
    }
    let tr = trace(&d.matrix);
    if (tr - C64::new(1.0, 0.0)).norm() > tol.residual_tol {
        return Err(Error::InvalidState(format!("coupling trace is {tr}")));
    }
    let defect = d.marginal_defect(md.rho());
    if defect > tol.residual_tol {
        return Err(Error::MarginalDefect { defect });
    }
    Ok(())
}

/// `τ(y) = ρ^{-1/2} [Tr₂(D (I ⊗ y))]ᵀ ρ^{-1/2}`, Kraus-decomposed through the
/// Choi matrix of `τ` composed with the block pinching.
pub fn coupling_to_channel(
    md: &ModularData,
    d: &CouplingState,
    tol: &ToleranceConfig,
) -> Result<KrausChannel> {
    check_coupling(md, d, tol)?;
    let n = md.model().carrier_dim();
    let si = md.inv_sqrt_rho();
    let mut choi = ComplexMatrix::zeros(n * n, n * n);
    for (c, e) in same_block_pairs(md) {
        // Tr₂(D (I ⊗ E_ce))[p, r] = D[p n + e, r n + c]
        let partial = ComplexMatrix::from_fn(n, n, |p, r| d.matrix[(p * n + e, r * n + c)]);
        let image = si * partial.transpose() * si;
        choi.view_mut((c * n, e * n), (n, n)).copy_from(&image);
    }
    let kraus = kraus_from_choi(&choi, tol)?;
    let tau = KrausChannel::new(md.model().clone(), kraus, tol)?.with_label("from coupling");
    check_cp_phi(&tau, md.phi(), tol)?;
    Ok(tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Joint system with central coefficients on an inner minimal family.
    Central,
    /// Kernel over the compressed commutant of the dilation.
    Commutant,
}

#[derive(Debug, Clone)]
pub struct PhiCertificate {
    pub verdict: Verdict,
    pub route: Route,
    pub kernel_dim: usize,
    pub kernel_basis: Vec<CoefficientArray>,
    pub singular_spectrum: Vec<f64>,
    pub residuals: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub reduced: KrausChannel,
}

impl PhiCertificate {
    pub fn is_extremal(&self) -> bool {
        self.verdict == Verdict::Extremal
    }
}

/// `max_x |Tr(ρ V π(x) Λ V*)|` over the basis of `M`.
fn phi_functional_residual(md: &ModularData, tau: &KrausChannel, op: &ComplexMatrix) -> f64 {
    let vstar = tau.dilation_adjoint();
    let v = vstar.adjoint();
    let d = tau.d();
    md.model()
        .basis_m()
        .iter()
        .map(|x| {
            md.expect(&(&v * kron(x, &identity(d)) * op * &vstar))
                .norm()
        })
        .fold(0.0, f64::max)
}

/// Projector onto the orthogonal complement of `vec(M)`.
fn outside_m(md: &ModularData, tol: &ToleranceConfig) -> Result<ComplexMatrix> {
    let n = md.model().carrier_dim();
    let (q, _) = range_basis(&columns_of(md.model().basis_m()), tol)?;
    Ok(identity(n * n) - &q * q.adjoint())
}

/// Largest component of `V π(x) Λ V*` outside `M`, over the basis of `M`.
fn algebra_residual(
    md: &ModularData,
    tau: &KrausChannel,
    op: &ComplexMatrix,
    tol: &ToleranceConfig,
) -> Result<f64> {
    let out = outside_m(md, tol)?;
    let vstar = tau.dilation_adjoint();
    let v = vstar.adjoint();
    let d = tau.d();
    Ok(md
        .model()
        .basis_m()
        .iter()
        .map(|x| (&out * vectorize(&(&v * kron(x, &identity(d)) * op * &vstar))).norm())
        .fold(0.0, f64::max))
}

fn unital_residual(tau: &KrausChannel, op: &ComplexMatrix) -> f64 {
    let vstar = tau.dilation_adjoint();
    (vstar.adjoint() * op * &vstar).norm()
}

fn residual_table(
    md: &ModularData,
    tau: &KrausChannel,
    ops: &[ComplexMatrix],
    tol: &ToleranceConfig,
) -> Result<BTreeMap<String, f64>> {
    let mut r = BTreeMap::new();
    r.insert(
        "unital_system".to_string(),
        ops.iter()
            .map(|o| unital_residual(tau, o))
            .fold(0.0, f64::max),
    );
    r.insert(
        "phi_system".to_string(),
        ops.iter()
            .map(|o| phi_functional_residual(md, tau, o))
            .fold(0.0, f64::max),
    );
    let mut worst = 0.0_f64;
    for o in ops {
        worst = worst.max(algebra_residual(md, tau, o, tol)?);
    }
    r.insert("algebra_system".to_string(), worst);
    Ok(r)
}

/// Extremality in `CP_φ` for an inner minimal family: central `λ` with
/// `Σ v_k λ^k_j v_j* = 0` and `Σ ṽ_j λ^k_j ṽ_k* = 0`. Families with a Kraus
/// operator outside `M` get [`Verdict::HypothesisUnmet`].
pub fn extremality_cp_phi(
    md: &ModularData,
    tau: &KrausChannel,
    tol: &ToleranceConfig,
) -> Result<PhiCertificate> {
    check_cp_phi(tau, md.phi(), tol)?;
    let reduced = minimal_kraus(tau, tol)?;
    if let Some((index, distance)) = reduced.first_non_inner(tol)? {
        return Ok(PhiCertificate {
            verdict: Verdict::HypothesisUnmet,
            route: Route::Central,
            kernel_dim: 0,
            kernel_basis: Vec::new(),
            singular_spectrum: Vec::new(),
            residuals: BTreeMap::new(),
            notes: vec![format!(
                "minimal Kraus operator {index} lies outside the algebra (distance {distance:e}); \
                 the central criterion needs an inner family"
            )],
            reduced,
        });
    }
    let model = md.model().clone();
    let families = inner_block_families(&reduced, tol)?;
    let reduced = reduced.with_kraus(assemble_inner(&model, &families)?)?;
    let d = reduced.d();
    let rho_blocks = model.compress(md.rho())?;
    let mut indeterminate = false;
    let mut spectrum = Vec::new();
    let mut ops = Vec::new();
    for (b, fam) in families.iter().enumerate() {
        let s = fam.len();
        if s == 0 {
            continue;
        }
        let tol_rho = ToleranceConfig::default();
        let half = crate::linalg::hermitian_power(&rho_blocks[b], C64::new(0.5, 0.0), &tol_rho)?;
        let inv_half =
            crate::linalg::hermitian_power(&rho_blocks[b], C64::new(-0.5, 0.0), &tol_rho)?;
        let tilde: Vec<ComplexMatrix> = fam
            .iter()
            .map(|h| &inv_half * h.adjoint() * &half)
            .collect();
        let nb = fam[0].nrows();
        let columns: Vec<ComplexMatrix> = (0..s * s)
            .map(|kj| {
                let (k, j) = (kj / s, kj % s);
                let first = &fam[k] * fam[j].adjoint();
                let second = &tilde[j] * tilde[k].adjoint();
                let mut stacked = ComplexMatrix::zeros(2 * nb, nb);
                stacked.rows_mut(0, nb).copy_from(&first);
                stacked.rows_mut(nb, nb).copy_from(&second);
                stacked
            })
            .collect();
        let solve = solve_kernel(&columns_of(&columns), tol)?;
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
    Ok(PhiCertificate {
        verdict,
        route: Route::Central,
        kernel_dim: ops.len(),
        kernel_basis: ops
            .iter()
            .map(|o| CoefficientArray::from_dilation(o, d))
            .collect(),
        singular_spectrum: spectrum,
        residuals: residual_table(md, &reduced, &ops, tol)?,
        notes: vec![format!(
            "inner minimal family of {d} Kraus operators; coefficients in the center"
        )],
        reduced,
    })
}

/// Extremality in `CP_φ` for any Kraus family: `Λ ∈ P π(M)' P` with
/// `V Λ V* = 0`, `Tr(ρ V π(x) Λ V*) = 0` and `V π(x) Λ V* ∈ M` for all `x ∈ M`.
/// The last condition keeps both halves of a split inside the maps on `M`.
pub fn extremality_cp_phi_commutant(
    md: &ModularData,
    tau: &KrausChannel,
    tol: &ToleranceConfig,
) -> Result<PhiCertificate> {
    check_cp_phi(tau, md.phi(), tol)?;
    let reduced = minimal_kraus(tau, tol)?;
    let data = stinespring_support(&reduced, tol)?;
    let basis = data.compressed_commutant_basis();
    let (n, d) = (reduced.carrier_dim(), reduced.d());
    let vstar = reduced.dilation_adjoint();
    let v = vstar.adjoint();
    let xs = md.model().basis_m();
    let out = outside_m(md, tol)?;
    let lifted: Vec<ComplexMatrix> = xs.iter().map(|x| &v * kron(x, &identity(d))).collect();
    let (nn, k) = (n * n, xs.len());
    let columns: Vec<ComplexMatrix> = basis
        .iter()
        .map(|l| {
            let lv = l * &vstar;
            let mut col = ComplexMatrix::zeros(nn + k + k * nn, 1);
            col.rows_mut(0, nn).copy_from(&vectorize(&(&v * &lv)));
            for (i, px) in lifted.iter().enumerate() {
                let img = px * &lv;
                col[(nn + i, 0)] = trace(&(md.rho() * &img));
                col.rows_mut(nn + k + i * nn, nn)
                    .copy_from(&(&out * vectorize(&img)));
            }
            col
        })
        .collect();
    let solve = solve_kernel(&columns_of(&columns), tol)?;
    let raw: Vec<ComplexMatrix> = solve
        .coefficients
        .iter()
        .map(|c| combine(&basis, c))
        .collect();
    let ops = hermitian_basis(&raw, raw.len());
    let verdict = if solve.indeterminate {
        Verdict::Indeterminate
    } else if ops.is_empty() {
        Verdict::Extremal
    } else {
        Verdict::NotExtremal
    };
    Ok(PhiCertificate {
        verdict,
        route: Route::Commutant,
        kernel_dim: ops.len(),
        kernel_basis: ops
            .iter()
            .map(|o| CoefficientArray::from_dilation(o, d))
            .collect(),
        singular_spectrum: solve.spectrum,
        residuals: residual_table(md, &reduced, &ops, tol)?,
        notes: vec![format!(
            "minimal family of {d} Kraus operators; coefficients in the compressed commutant"
        )],
        reduced,
    })
}

/// Split `τ ∈ CP_φ` along a joint kernel element `λ` (relative to `τ`'s own
/// Kraus family): `η±` with Kraus rows `(I ± λ)^{1/2} V*`.
pub fn decompose_cp_phi(
    md: &ModularData,
    tau: &KrausChannel,
    lambda: &CoefficientArray,
    tol: &ToleranceConfig,
) -> Result<Decomposition> {
    let op = normalized_kernel_element(tau, lambda, tol)?;
    let residual = unital_residual(tau, &op)
        .max(phi_functional_residual(md, tau, &op))
        .max(algebra_residual(md, tau, &op, tol)?);
    if residual > tol.residual_tol {
        return Err(Error::NotInKernel { residual });
    }
    let neg = -op;
    let dec = split(tau, &neg, tol)?;
    for part in [&dec.plus, &dec.minus] {
        check_cp_phi(part, md.phi(), tol)?;
    }
    Ok(dec)
}

/// Certificate for the channel induced by a coupling. Families outside the
/// algebra fall back to the commutant route.
pub fn coupling_extremality(
    md: &ModularData,
    d: &CouplingState,
    tol: &ToleranceConfig,
) -> Result<PhiCertificate> {
    let tau = coupling_to_channel(md, d, tol)?;
    let mut cert = extremality_cp_phi(md, &tau, tol)?;
    if cert.verdict == Verdict::HypothesisUnmet {
        let first = cert.notes.clone();
        cert = extremality_cp_phi_commutant(md, &tau, tol)?;
        cert.notes.splice(0..0, first);
    }
    cert.notes.push(
        "verdict concerns the induced channel; an extremal coupling induces an extremal channel"
            .into(),
    );
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{AlgebraModel, AlgebraSpec};
    use crate::channel::DensityState;
    use crate::linalg::{c, diag, matrix_unit};
    use crate::random::{gaussian, random_faithful_state, random_inner_phi_channel, rng};
    use std::sync::Arc;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn model(pairs: &[(usize, usize)]) -> Arc<AlgebraModel> {
        Arc::new(AlgebraModel::build(AlgebraSpec::from_pairs(pairs).unwrap()).unwrap())
    }

    fn md(pairs: &[(usize, usize)], rho: &ComplexMatrix) -> ModularData {
        ModularData::new(
            model(pairs),
            DensityState::new(rho.clone(), &tol()).unwrap(),
            &tol(),
        )
        .unwrap()
    }

    fn identity_channel(m: Arc<AlgebraModel>) -> KrausChannel {
        let n = m.carrier_dim();
        KrausChannel::new(m, vec![identity(n)], &tol()).unwrap()
    }

    /// `x ↦ Tr(ρ x) I` with Kraus operators `√λ_j |i⟩⟨e_j|`.
    fn replacement(m: Arc<AlgebraModel>, rho: &ComplexMatrix) -> KrausChannel {
        let n = m.carrier_dim();
        let eig = crate::linalg::hermitian_eigen(rho).unwrap();
        let mut kraus = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let e = eig.vectors.column(j).into_owned();
                let unit =
                    ComplexMatrix::from_fn(n, 1, |r, _| if r == i { c(1.0) } else { c(0.0) });
                kraus.push((unit * e.adjoint()).scale(eig.values[j].max(0.0).sqrt()));
            }
        }
        KrausChannel::new(m, kraus, &tol()).unwrap()
    }

    #[test]
    fn identity_couples_to_maximally_entangled_state() {
        let m = md(&[(2, 1)], &identity(2).scale(0.5));
        let tau = identity_channel(m.model().clone());
        let d = channel_to_coupling(&m, &tau, &tol()).unwrap();
        let mut expected = ComplexMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                expected += kron(&matrix_unit(2, i, j), &matrix_unit(2, i, j)).scale(0.5);
            }
        }
        assert!((&d.matrix - expected).norm() < 1e-12);
    }

    #[test]
    fn replacement_channel_couples_to_product_state() {
        let rho = diag(&[0.7, 0.3]);
        let m = md(&[(2, 1)], &rho);
        let tau = replacement(m.model().clone(), &rho);
        let d = channel_to_coupling(&m, &tau, &tol()).unwrap();
        assert!((&d.matrix - kron(&rho.transpose(), &rho)).norm() < 1e-12);
        let back = coupling_to_channel(&m, &d, &tol()).unwrap();
        assert!(back.distance(&tau).unwrap() < 1e-10);
    }

    #[test]
    fn pairing_matches_standard_form() {
        // L²(M₂) with Hilbert–Schmidt product, Ω = ρ^{1/2}, J x J ξ = ξ x*
        let mut r = rng(21);
        let g = gaussian(2, 2, &mut r);
        let rho = (&g * g.adjoint() + identity(2).scale(0.2)).scale(1.0);
        let rho = rho.scale(1.0 / crate::linalg::trace(&rho).re);
        let m = md(&[(2, 1)], &rho);
        let tau = random_inner_phi_channel(m.model().clone(), m.phi(), 2, 3).unwrap();
        let d = channel_to_coupling(&m, &tau, &tol()).unwrap();
        let omega = m.sqrt_rho().clone();
        for x in m.model().basis_m() {
            for y in m.model().basis_m() {
                let jxj_omega = &omega * x.adjoint();
                let t_omega = tau.apply(y).unwrap() * &omega;
                let standard = crate::linalg::trace_inner(&jxj_omega, &t_omega);
                assert!((d.pair(x, y) - standard).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn permutation_coupling_on_two_points() {
        let m = md(&[(1, 1), (1, 1)], &identity(2).scale(0.5));
        let mut dm = ComplexMatrix::zeros(4, 4);
        dm[(1, 1)] = c(0.5);
        dm[(2, 2)] = c(0.5);
        let d = CouplingState { matrix: dm };
        let tau = coupling_to_channel(&m, &d, &tol()).unwrap();
        assert!((tau.apply(&diag(&[1.0, 0.0])).unwrap() - diag(&[0.0, 1.0])).norm() < 1e-12);
        let cert = coupling_extremality(&m, &d, &tol()).unwrap();
        assert_eq!(cert.verdict, Verdict::Extremal);
        assert_eq!(cert.route, Route::Commutant);
        assert_eq!(
            extremality_cp_phi(&m, &tau, &tol()).unwrap().verdict,
            Verdict::HypothesisUnmet
        );
    }

    #[test]
    fn marginal_defects_are_rejected() {
        let m = md(&[(2, 1)], &identity(2).scale(0.5));
        let d = CouplingState {
            matrix: kron(&diag(&[0.9, 0.1]), &identity(2).scale(0.5)),
        };
        assert!(matches!(
            coupling_to_channel(&m, &d, &tol()),
            Err(Error::MarginalDefect { .. })
        ));
        let multi = ModularData::new(model(&[(2, 2)]), DensityState::tracial(4), &tol()).unwrap();
        let tau = identity_channel(multi.model().clone());
        assert!(matches!(
            channel_to_coupling(&multi, &tau, &tol()),
            Err(Error::NotMultiplicityFree)
        ));
    }

    #[test]
    fn phi_extremality_examples() {
        let m = md(&[(2, 1)], &identity(2).scale(0.5));
        let pinch = KrausChannel::new(
            m.model().clone(),
            vec![diag(&[1.0, 0.0]), diag(&[0.0, 1.0])],
            &tol(),
        )
        .unwrap();
        let cert = extremality_cp_phi(&m, &pinch, &tol()).unwrap();
        assert_eq!(cert.verdict, Verdict::NotExtremal);
        assert_eq!(cert.kernel_dim, 2);
        let dec = decompose_cp_phi(&m, &cert.reduced, &cert.kernel_basis[0], &tol()).unwrap();
        assert!(dec.reassembly_residual < 1e-9);

        let rho = diag(&[0.6, 0.4]);
        let m = md(&[(2, 1)], &rho);
        let u = diag(&[1.0, -1.0]);
        let tau = KrausChannel::new(m.model().clone(), vec![u], &tol()).unwrap();
        assert_eq!(
            extremality_cp_phi(&m, &tau, &tol()).unwrap().verdict,
            Verdict::Extremal
        );
    }

    #[test]
    fn routes_agree_on_inner_channels() {
        for pairs in [
            vec![(2, 1)],
            vec![(3, 1)],
            vec![(1, 1), (2, 1)],
            vec![(2, 2)],
        ] {
            let mm = model(&pairs);
            for seed in 0..4 {
                let phi = random_faithful_state(&mm, seed).unwrap();
                let m = ModularData::new(mm.clone(), phi.clone(), &tol()).unwrap();
                for d in 1..=3 {
                    let tau = random_inner_phi_channel(mm.clone(), &phi, d, seed + 100).unwrap();
                    let a = extremality_cp_phi(&m, &tau, &tol()).unwrap();
                    let b = extremality_cp_phi_commutant(&m, &tau, &tol()).unwrap();
                    assert_eq!(a.verdict, b.verdict, "{pairs:?} d={d} seed={seed}");
                }
            }
        }
    }
}
