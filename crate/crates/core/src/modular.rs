//! Modular data of a faithful state `φ = Tr(ρ ·)` on `M`.
//!
//! The modular operator acts as conjugation by powers of `ρ`:
//! `σ_z(x) = ρ^{iz} x ρ^{-iz}`. The adjoint Kraus operators are
//! `ṽ = ρ^{-1/2} v* ρ^{1/2}`, which makes `τ̃` unital exactly when `τ`
//! preserves `φ` and satisfies
//! `Tr(ρ τ(x) σ_{-i/2}(y)) = Tr(ρ σ_{i/2}(x) τ̃(y))`.

use std::sync::Arc;

use crate::algebra::{AlgebraModel, Which};
use crate::channel::{phi_defect, DensityState, KrausChannel};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, spectral_apply, trace, ComplexMatrix, ToleranceConfig, C64};

#[derive(Debug, Clone)]
pub struct ModularData {
    model: Arc<AlgebraModel>,
    phi: DensityState,
    eigenvalues: Vec<f64>,
    eigenvectors: ComplexMatrix,
    sqrt_rho: ComplexMatrix,
    inv_sqrt_rho: ComplexMatrix,
}

impl ModularData {
    pub fn new(model: Arc<AlgebraModel>, phi: DensityState, tol: &ToleranceConfig) -> Result<Self> {
        let n = model.carrier_dim();
        if phi.rho().shape() != (n, n) {
            return Err(Error::ShapeMismatch(format!(
                "state is {}x{}, carrier dimension is {n}",
                phi.rho().nrows(),
                phi.rho().ncols()
            )));
        }
        if !phi.faithful() {
            return Err(Error::NotFaithful {
                min_eigenvalue: phi.min_eigenvalue(),
            });
        }
        let m = model.membership(phi.rho(), Which::Algebra, tol)?;
        if !m.is_member {
            return Err(Error::StateNotInAlgebra {
                distance: m.distance,
            });
        }
        let eig = hermitian_eigen(phi.rho())?;
        let mut md = Self {
            model,
            phi,
            eigenvalues: eig.values,
            eigenvectors: eig.vectors,
            sqrt_rho: ComplexMatrix::zeros(0, 0),
            inv_sqrt_rho: ComplexMatrix::zeros(0, 0),
        };
        md.sqrt_rho = md.rho_power(C64::new(0.5, 0.0));
        md.inv_sqrt_rho = md.rho_power(C64::new(-0.5, 0.0));
        Ok(md)
    }

    pub fn model(&self) -> &Arc<AlgebraModel> {
        &self.model
    }

    pub fn phi(&self) -> &DensityState {
        &self.phi
    }

    pub fn rho(&self) -> &ComplexMatrix {
        self.phi.rho()
    }

    pub fn sqrt_rho(&self) -> &ComplexMatrix {
        &self.sqrt_rho
    }

    pub fn inv_sqrt_rho(&self) -> &ComplexMatrix {
        &self.inv_sqrt_rho
    }

    /// `ρ^w` for complex `w`.
    pub fn rho_power(&self, w: C64) -> ComplexMatrix {
        let f: Vec<C64> = self
            .eigenvalues
            .iter()
            .map(|&l| (w * l.ln()).exp())
            .collect();
        spectral_apply(&self.eigenvectors, &f)
    }

    fn check_shape(&self, x: &ComplexMatrix) -> Result<()> {
        let n = self.model.carrier_dim();
        if x.shape() != (n, n) {
            return Err(Error::ShapeMismatch(format!(
                "operator is {}x{}, carrier dimension is {n}",
                x.nrows(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// `σ_z(x) = ρ^{iz} x ρ^{-iz}`.
    pub fn sigma(&self, z: C64, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_shape(x)?;
        let i = C64::new(0.0, 1.0);
        Ok(self.rho_power(i * z) * x * self.rho_power(-i * z))
    }

    /// `φ(x) = Tr(ρ x)`.
    pub fn expect(&self, x: &ComplexMatrix) -> C64 {
        trace(&(self.rho() * x))
    }

    /// `|φ(x* y) − φ(σ_{i/2}(y) σ_{-i/2}(x*))|`.
    pub fn kms_check(&self, x: &ComplexMatrix, y: &ComplexMatrix) -> Result<f64> {
        let xa = x.adjoint();
        let lhs = self.expect(&(&xa * y));
        let half = C64::new(0.0, 0.5);
        let rhs = self.expect(&(self.sigma(half, y)? * self.sigma(-half, &xa)?));
        Ok((lhs - rhs).norm())
    }

    /// `ṽ = ρ^{-1/2} v* ρ^{1/2}`; requires `v ∈ M`.
    pub fn tilde_kraus(&self, v: &ComplexMatrix, tol: &ToleranceConfig) -> Result<ComplexMatrix> {
        self.check_shape(v)?;
        let m = self.model.membership(v, Which::Algebra, tol)?;
        if !m.is_member {
            return Err(Error::NotInner {
                index: 0,
                distance: m.distance,
            });
        }
        Ok(&self.inv_sqrt_rho * v.adjoint() * &self.sqrt_rho)
    }

    /// The `φ`-adjoint channel with Kraus operators `ṽ_k`.
    pub fn adjoint_channel(
        &self,
        tau: &KrausChannel,
        tol: &ToleranceConfig,
    ) -> Result<KrausChannel> {
        check_cp_phi(tau, &self.phi, tol)?;
        if let Some((index, distance)) = tau.first_non_inner(tol)? {
            return Err(Error::NotInner { index, distance });
        }
        let kraus = tau
            .kraus()
            .iter()
            .map(|v| self.tilde_kraus(v, tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(tau
            .with_kraus(kraus)?
            .with_label(format!("adjoint of {}", tau.label())))
    }

    /// Largest `|Tr(ρ τ(x) σ_{-i/2}(y)) − Tr(ρ σ_{i/2}(x) τ̃(y))|` over pairs of
    /// basis elements of `M`.
    pub fn duality_defect(&self, tau: &KrausChannel, tilde: &KrausChannel) -> Result<f64> {
        let half = C64::new(0.0, 0.5);
        let basis = self.model.basis_m();
        let tx: Vec<ComplexMatrix> = basis.iter().map(|x| tau.apply(x)).collect::<Result<_>>()?;
        let sx: Vec<ComplexMatrix> = basis
            .iter()
            .map(|x| self.sigma(half, x))
            .collect::<Result<_>>()?;
        let sy: Vec<ComplexMatrix> = basis
            .iter()
            .map(|y| self.sigma(-half, y))
            .collect::<Result<_>>()?;
        let ty: Vec<ComplexMatrix> = basis
            .iter()
            .map(|y| tilde.apply(y))
            .collect::<Result<_>>()?;
        let mut worst = 0.0_f64;
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                let lhs = self.expect(&(&tx[i] * &sy[j]));
                let rhs = self.expect(&(&sx[i] * &ty[j]));
                worst = worst.max((lhs - rhs).norm());
            }
        }
        Ok(worst)
    }
}

/// Verify that `τ` is unital, maps `M` into `M` and preserves `φ`.
pub fn check_cp_phi(tau: &KrausChannel, phi: &DensityState, tol: &ToleranceConfig) -> Result<()> {
    let defect = tau.unitality_defect();
    if defect > tol.residual_tol {
        return Err(Error::NotUnital { defect });
    }
    let distance = tau.algebra_defect()?;
    if distance > tol.residual_tol {
        return Err(Error::NotAlgebraPreserving { distance });
    }
    let defect = phi_defect(tau, phi)?;
    if defect > tol.residual_tol {
        return Err(Error::NotPhiPreserving { defect });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgebraSpec;
    use crate::channel::{index, is_phi_preserving};
    use crate::linalg::{c, diag, identity, matrix_unit};
    use crate::random::{gaussian, random_faithful_state, random_inner_phi_channel, rng};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn full(n: usize) -> Arc<AlgebraModel> {
        Arc::new(AlgebraModel::build(AlgebraSpec::full(n).unwrap()).unwrap())
    }

    fn md(rho: &[f64]) -> ModularData {
        let n = rho.len();
        ModularData::new(
            full(n),
            DensityState::new(diag(rho), &tol()).unwrap(),
            &tol(),
        )
        .unwrap()
    }

    #[test]
    fn tracial_state_has_trivial_modular_group() {
        let m = md(&[0.5, 0.5]);
        let x = gaussian(2, 2, &mut rng(1));
        for z in [C64::new(0.3, 0.0), C64::new(0.0, 0.5), C64::new(-1.2, 0.7)] {
            assert!((m.sigma(z, &x).unwrap() - &x).norm() < 1e-12);
        }
    }

    #[test]
    fn sigma_imaginary_half_on_off_diagonal_unit() {
        let m = md(&[2.0 / 3.0, 1.0 / 3.0]);
        let y = m.sigma(C64::new(0.0, -0.5), &matrix_unit(2, 0, 1)).unwrap();
        assert!((y - matrix_unit(2, 0, 1).scale(2f64.sqrt())).norm() < 1e-12);
    }

    #[test]
    fn real_sigma_is_state_preserving_automorphism() {
        let m = md(&[0.7, 0.2, 0.1]);
        let mut r = rng(2);
        let (x, y) = (gaussian(3, 3, &mut r), gaussian(3, 3, &mut r));
        let t = C64::new(0.83, 0.0);
        let sxy = m.sigma(t, &(&x * &y)).unwrap();
        assert!((sxy - m.sigma(t, &x).unwrap() * m.sigma(t, &y).unwrap()).norm() < 1e-12);
        assert!(
            (m.sigma(t, &x.adjoint()).unwrap() - m.sigma(t, &x).unwrap().adjoint()).norm() < 1e-12
        );
        assert!((m.expect(&m.sigma(t, &x).unwrap()) - m.expect(&x)).norm() < 1e-12);
    }

    #[test]
    fn kms_examples() {
        let m = md(&[0.5, 0.5]);
        assert!(m.kms_check(&identity(2), &identity(2)).unwrap() < 1e-15);
        let mut r = rng(3);
        let (x, y) = (gaussian(2, 2, &mut r), gaussian(2, 2, &mut r));
        assert!(m.kms_check(&x, &y).unwrap() < 1e-12);
        let phi = random_faithful_state(&full(2), 4).unwrap();
        let m = ModularData::new(full(2), phi, &tol()).unwrap();
        assert!(m.kms_check(&x, &y).unwrap() < 1e-9);
    }

    #[test]
    fn tilde_examples() {
        let m = md(&[0.5, 0.5]);
        let v = gaussian(2, 2, &mut rng(5));
        assert!((m.tilde_kraus(&v, &tol()).unwrap() - v.adjoint()).norm() < 1e-12);

        let (r1, r2) = (0.8, 0.2);
        let m = md(&[r1, r2]);
        let t = m.tilde_kraus(&matrix_unit(2, 0, 1), &tol()).unwrap();
        assert!((t - matrix_unit(2, 1, 0).scale((r1 / r2).sqrt())).norm() < 1e-12);
        let tt = m
            .tilde_kraus(&m.tilde_kraus(&v, &tol()).unwrap(), &tol())
            .unwrap();
        assert!((tt - v).norm() < 1e-12);
    }

    #[test]
    fn tilde_requires_inner_operator() {
        let model = Arc::new(
            AlgebraModel::build(AlgebraSpec::from_pairs(&[(1, 1), (1, 1)]).unwrap()).unwrap(),
        );
        let m = ModularData::new(
            model,
            DensityState::new(diag(&[0.4, 0.6]), &tol()).unwrap(),
            &tol(),
        )
        .unwrap();
        assert!(matches!(
            m.tilde_kraus(&matrix_unit(2, 0, 1), &tol()),
            Err(Error::NotInner { .. })
        ));
    }

    #[test]
    fn state_must_be_faithful_and_in_algebra() {
        let model = Arc::new(
            AlgebraModel::build(AlgebraSpec::from_pairs(&[(1, 1), (1, 1)]).unwrap()).unwrap(),
        );
        let off = ComplexMatrix::from_row_slice(2, 2, &[c(0.5), c(0.1), c(0.1), c(0.5)]);
        assert!(matches!(
            ModularData::new(
                model.clone(),
                DensityState::new(off, &tol()).unwrap(),
                &tol()
            ),
            Err(Error::StateNotInAlgebra { .. })
        ));
        assert!(matches!(
            ModularData::new(
                model,
                DensityState::new(diag(&[1.0, 0.0]), &tol()).unwrap(),
                &tol()
            ),
            Err(Error::NotFaithful { .. })
        ));
    }

    #[test]
    fn adjoint_of_commuting_unitary_is_inverse_conjugation() {
        let m = md(&[0.6, 0.3, 0.1]);
        let u = diag(&[1.0, -1.0, 1.0]) * C64::new(0.0, 1.0).exp();
        let tau = KrausChannel::new(full(3), vec![u.clone()], &tol()).unwrap();
        let tilde = m.adjoint_channel(&tau, &tol()).unwrap();
        assert!((&tilde.kraus()[0] - u.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn adjoint_duality_and_double_adjoint() {
        for pairs in [
            vec![(2, 1)],
            vec![(3, 1)],
            vec![(2, 2)],
            vec![(1, 1), (2, 1)],
        ] {
            let model =
                Arc::new(AlgebraModel::build(AlgebraSpec::from_pairs(&pairs).unwrap()).unwrap());
            let phi = random_faithful_state(&model, 9).unwrap();
            let m = ModularData::new(model.clone(), phi.clone(), &tol()).unwrap();
            let tau = random_inner_phi_channel(model, &phi, 2, 10).unwrap();
            let tilde = m.adjoint_channel(&tau, &tol()).unwrap();
            assert!(tilde.unitality_defect() < 1e-9);
            assert!(is_phi_preserving(&tilde, &phi, &tol()).unwrap().0);
            assert!(m.duality_defect(&tau, &tilde).unwrap() < 1e-9);
            assert_eq!(index(&tau, &tol()).unwrap(), index(&tilde, &tol()).unwrap());
            let back = m.adjoint_channel(&tilde, &tol()).unwrap();
            assert!(back.distance(&tau).unwrap() < 1e-10);
        }
    }

    #[test]
    fn adjoint_rejects_non_invariant_channel() {
        let m = md(&[0.5, 0.5]);
        let g = 0.5_f64;
        let tau = KrausChannel::new(
            full(2),
            vec![
                diag(&[1.0, (1.0 - g).sqrt()]),
                matrix_unit(2, 1, 0).scale(g.sqrt()),
            ],
            &tol(),
        )
        .unwrap();
        assert!(matches!(
            m.adjoint_channel(&tau, &tol()),
            Err(Error::NotPhiPreserving { .. })
        ));
    }
}
