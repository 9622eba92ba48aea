//! Finite-dimensional von Neumann algebras `M = ⊕_b M_{n_b} ⊗ I_{m_b}` acting
//! on `H = ⊕_b C^{n_b} ⊗ C^{m_b}`.
//!
//! Carrier ordering: blocks in spec order; inside block `b` the basis vector
//! `e_i ⊗ f_a` sits at `offset_b + i * m_b + a`. Basis elements of `M` are the
//! matrix units `E_ij ⊗ I` (row-major in `(i, j)`), those of `M'` are
//! `I ⊗ E_ab`, and the center is spanned by the block projections; all are
//! normalized in the trace inner product.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, identity, kron, matrix_unit, trace_inner, ComplexMatrix, ToleranceConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub dim: usize,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraSpec {
    pub blocks: Vec<Block>,
}

impl AlgebraSpec {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        let spec = Self { blocks };
        spec.validate()?;
        Ok(spec)
    }

    /// `[(dim, multiplicity), ...]` shorthand.
    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(dim, multiplicity)| Block { dim, multiplicity })
                .collect(),
        )
    }

    /// The full matrix algebra `M_n` acting on `C^n`.
    pub fn full(n: usize) -> Result<Self> {
        Self::from_pairs(&[(n, 1)])
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::InvalidSpec("at least one block is required".into()));
        }
        if let Some(b) = self
            .blocks
            .iter()
            .find(|b| b.dim == 0 || b.multiplicity == 0)
        {
            return Err(Error::InvalidSpec(format!(
                "block dimensions and multiplicities must be positive, got {b:?}"
            )));
        }
        Ok(())
    }

    pub fn carrier_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim * b.multiplicity).sum()
    }

    pub fn offsets(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .scan(0, |acc, b| {
                let off = *acc;
                *acc += b.dim * b.multiplicity;
                Some(off)
            })
            .collect()
    }

    pub fn is_multiplicity_free(&self) -> bool {
        self.blocks.iter().all(|b| b.multiplicity == 1)
    }

    pub fn is_full_matrix_algebra(&self) -> bool {
        self.blocks.len() == 1 && self.blocks[0].multiplicity == 1
    }

    pub fn dim_algebra(&self) -> usize {
        self.blocks.iter().map(|b| b.dim * b.dim).sum()
    }

    pub fn dim_commutant(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| b.multiplicity * b.multiplicity)
            .sum()
    }
}

/// Which of the three algebras attached to a model a test refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    Algebra,
    Commutant,
    Center,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub is_member: bool,
    pub distance: f64,
}

/// An algebra together with orthonormal bases of `M`, `M'` and `Z(M)`.
#[derive(Debug, Clone)]
pub struct AlgebraModel {
    spec: AlgebraSpec,
    offsets: Vec<usize>,
    basis_m: Vec<ComplexMatrix>,
    basis_comm: Vec<ComplexMatrix>,
    basis_center: Vec<ComplexMatrix>,
    block_projections: Vec<ComplexMatrix>,
}

impl AlgebraModel {
    pub fn build(spec: AlgebraSpec) -> Result<Self> {
        spec.validate()?;
        let n_total = spec.carrier_dim();
        let offsets = spec.offsets();
        let mut basis_m = Vec::with_capacity(spec.dim_algebra());
        let mut basis_comm = Vec::with_capacity(spec.dim_commutant());
        let mut basis_center = Vec::with_capacity(spec.blocks.len());
        let mut block_projections = Vec::with_capacity(spec.blocks.len());

        for (b, block) in spec.blocks.iter().enumerate() {
            let (n, m) = (block.dim, block.multiplicity);
            let place = |local: ComplexMatrix| {
                let mut full = ComplexMatrix::zeros(n_total, n_total);
                full.view_mut((offsets[b], offsets[b]), (n * m, n * m))
                    .copy_from(&local);
                full
            };
            for i in 0..n {
                for j in 0..n {
                    let e =
                        kron(&matrix_unit(n, i, j), &identity(m)).scale(1.0 / (m as f64).sqrt());
                    basis_m.push(place(e));
                }
            }
            for a in 0..m {
                for bb in 0..m {
                    let e =
                        kron(&identity(n), &matrix_unit(m, a, bb)).scale(1.0 / (n as f64).sqrt());
                    basis_comm.push(place(e));
                }
            }
            let proj = place(identity(n * m));
            basis_center.push(proj.scale(1.0 / ((n * m) as f64).sqrt()));
            block_projections.push(proj);
        }

        Ok(Self {
            spec,
            offsets,
            basis_m,
            basis_comm,
            basis_center,
            block_projections,
        })
    }

    pub fn spec(&self) -> &AlgebraSpec {
        &self.spec
    }

    pub fn carrier_dim(&self) -> usize {
        self.spec.carrier_dim()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn basis_m(&self) -> &[ComplexMatrix] {
        &self.basis_m
    }

    pub fn basis_comm(&self) -> &[ComplexMatrix] {
        &self.basis_comm
    }

    pub fn basis_center(&self) -> &[ComplexMatrix] {
        &self.basis_center
    }

    pub fn block_projections(&self) -> &[ComplexMatrix] {
        &self.block_projections
    }

    pub fn basis(&self, which: Which) -> &[ComplexMatrix] {
        match which {
            Which::Algebra => &self.basis_m,
            Which::Commutant => &self.basis_comm,
            Which::Center => &self.basis_center,
        }
    }

    fn check_square(&self, x: &ComplexMatrix) -> Result<()> {
        let n = self.carrier_dim();
        if x.shape() != (n, n) {
            return Err(Error::ShapeMismatch(format!(
                "expected a {n}x{n} operator, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// `⊕_b x_b ⊗ I_{m_b}`.
    pub fn embed(&self, block_elements: &[ComplexMatrix]) -> Result<ComplexMatrix> {
        self.embed_tensor(block_elements, false)
    }

    /// `⊕_b I_{n_b} ⊗ y_b`, the commutant counterpart of [`Self::embed`].
    pub fn embed_commutant(&self, block_elements: &[ComplexMatrix]) -> Result<ComplexMatrix> {
        self.embed_tensor(block_elements, true)
    }

    fn embed_tensor(&self, elements: &[ComplexMatrix], commutant: bool) -> Result<ComplexMatrix> {
        if elements.len() != self.spec.blocks.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} block elements, got {}",
                self.spec.blocks.len(),
                elements.len()
            )));
        }
        let n_total = self.carrier_dim();
        let mut out = ComplexMatrix::zeros(n_total, n_total);
        for (b, (block, x)) in self.spec.blocks.iter().zip(elements).enumerate() {
            let (n, m) = (block.dim, block.multiplicity);
            let expected = if commutant { m } else { n };
            if x.shape() != (expected, expected) {
                return Err(Error::ShapeMismatch(format!(
                    "block {b} element must be {expected}x{expected}, got {}x{}",
                    x.nrows(),
                    x.ncols()
                )));
            }
            let local = if commutant {
                kron(&identity(n), x)
            } else {
                kron(x, &identity(m))
            };
            out.view_mut((self.offsets[b], self.offsets[b]), (n * m, n * m))
                .copy_from(&local);
        }
        Ok(out)
    }

    /// Block components `x_b` of an element `x ∈ M`, read off the first copy of
    /// each multiplicity space. Only meaningful for members of `M`.
    pub fn compress(&self, x: &ComplexMatrix) -> Result<Vec<ComplexMatrix>> {
        self.check_square(x)?;
        Ok(self
            .spec
            .blocks
            .iter()
            .zip(&self.offsets)
            .map(|(block, &off)| {
                let (n, m) = (block.dim, block.multiplicity);
                ComplexMatrix::from_fn(n, n, |i, j| x[(off + i * m, off + j * m)])
            })
            .collect())
    }

    /// Trace-orthogonal projection onto the span of the chosen basis.
    pub fn project(&self, x: &ComplexMatrix, which: Which) -> Result<ComplexMatrix> {
        self.check_square(x)?;
        let n = self.carrier_dim();
        let mut out = ComplexMatrix::zeros(n, n);
        for e in self.basis(which) {
            out += e * trace_inner(e, x);
        }
        Ok(out)
    }

    pub fn membership(
        &self,
        x: &ComplexMatrix,
        which: Which,
        tol: &ToleranceConfig,
    ) -> Result<Membership> {
        let distance = (x - self.project(x, which)?).norm();
        Ok(Membership {
            is_member: distance <= tol.residual_tol * x.norm().max(1.0),
            distance,
        })
    }

    /// Coordinates of `x` in the chosen basis.
    pub fn coordinates(&self, x: &ComplexMatrix, which: Which) -> Vec<crate::linalg::C64> {
        self.basis(which)
            .iter()
            .map(|e| trace_inner(e, x))
            .collect()
    }

    /// Identity on the carrier space.
    pub fn unit(&self) -> ComplexMatrix {
        identity(self.carrier_dim())
    }

    /// Scalar multiple of the identity on block `b`.
    pub fn central_element(&self, weights: &[f64]) -> ComplexMatrix {
        let n = self.carrier_dim();
        self.block_projections
            .iter()
            .zip(weights)
            .fold(ComplexMatrix::zeros(n, n), |acc, (p, &w)| acc + p * c(w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, nullspace, vectorize, C64};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(pairs: &[(usize, usize)]) -> AlgebraModel {
        AlgebraModel::build(AlgebraSpec::from_pairs(pairs).unwrap()).unwrap()
    }

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn random(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(AlgebraSpec::new(vec![]).is_err());
        assert!(AlgebraSpec::from_pairs(&[(2, 0)]).is_err());
        assert!(AlgebraSpec::from_pairs(&[(0, 1)]).is_err());
    }

    #[test]
    fn full_matrix_algebra() {
        let a = model(&[(2, 1)]);
        assert_eq!(a.basis_m().len(), 4);
        assert_eq!(a.basis_comm().len(), 1);
        assert_eq!(a.basis_center().len(), 1);
        let i2 = identity(2).scale(1.0 / 2f64.sqrt());
        assert!((&a.basis_comm()[0] - &i2).norm() < 1e-15);
        assert!((&a.basis_center()[0] - &i2).norm() < 1e-15);
    }

    #[test]
    fn abelian_two_point_algebra() {
        let a = model(&[(1, 1), (1, 1)]);
        for which in [Which::Algebra, Which::Commutant, Which::Center] {
            assert_eq!(a.basis(which).len(), 2);
        }
        for x in a.basis_m() {
            assert!(a.membership(x, Which::Commutant, &tol()).unwrap().is_member);
            assert!(a.membership(x, Which::Center, &tol()).unwrap().is_member);
        }
    }

    #[test]
    fn multiplicity_two_block() {
        let a = model(&[(2, 2)]);
        assert_eq!(a.carrier_dim(), 4);
        assert_eq!(a.basis_m().len(), 4);
        assert_eq!(a.basis_comm().len(), 4);
        assert_eq!(a.basis_center().len(), 1);
        for x in a.basis_m() {
            for y in a.basis_comm() {
                assert!((x * y - y * x).norm() <= 1e-12);
            }
        }
        assert!((&a.basis_center()[0] - identity(4).scale(0.5)).norm() < 1e-15);
    }

    #[test]
    fn bases_are_orthonormal() {
        let a = model(&[(2, 1), (1, 3), (3, 2)]);
        for which in [Which::Algebra, Which::Commutant, Which::Center] {
            let basis = a.basis(which);
            for (i, x) in basis.iter().enumerate() {
                for (j, y) in basis.iter().enumerate() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((trace_inner(x, y) - C64::new(expected, 0.0)).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn embed_examples() {
        let a = model(&[(2, 1), (1, 3)]);
        let e = a.embed(&[identity(2), identity(1)]).unwrap();
        assert_eq!(e, identity(5));
        let b = model(&[(2, 1)]);
        assert_eq!(
            b.embed(&[matrix_unit(2, 0, 0)]).unwrap(),
            matrix_unit(2, 0, 0)
        );
        let c2 = model(&[(2, 2)]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random(2, &mut rng);
        assert!((c2.embed(&[x.clone()]).unwrap() - x.kronecker(&identity(2))).norm() < 1e-15);
        assert!(c2.embed(&[identity(3)]).is_err());
        assert_eq!(c2.compress(&c2.embed(&[x.clone()]).unwrap()).unwrap()[0], x);
    }

    #[test]
    fn membership_examples() {
        let a = model(&[(2, 1)]);
        for which in [Which::Algebra, Which::Commutant, Which::Center] {
            let m = a.membership(&identity(2), which, &tol()).unwrap();
            assert!(m.is_member && m.distance < 1e-15);
        }
        let e12 = matrix_unit(2, 0, 1);
        assert!(
            a.membership(&e12, Which::Algebra, &tol())
                .unwrap()
                .is_member
        );
        assert!(!a.membership(&e12, Which::Center, &tol()).unwrap().is_member);
        let ab = model(&[(1, 1), (1, 1)]);
        assert!(
            ab.membership(&diag(&[1.0, 2.0]), Which::Center, &tol())
                .unwrap()
                .is_member
        );
    }

    #[test]
    fn dimension_count() {
        for pairs in [
            vec![(2, 1)],
            vec![(2, 2)],
            vec![(1, 2), (2, 1)],
            vec![(3, 1), (1, 1)],
        ] {
            let a = model(&pairs);
            let n = a.carrier_dim();
            let (dm, dc, dz) = (
                a.basis_m().len(),
                a.basis_comm().len(),
                a.basis_center().len(),
            );
            assert!(dm + dc - dz <= n * n);
            assert_eq!(dz, pairs.len());
        }
    }

    #[test]
    fn double_commutant_by_commutation_equations() {
        // the commutant of span(basis_comm), solved from [X, y] = 0, must be span(basis_M)
        for pairs in [vec![(2, 2)], vec![(1, 2), (2, 1)], vec![(2, 1), (1, 1)]] {
            let a = model(&pairs);
            let n = a.carrier_dim();
            let rows: Vec<ComplexMatrix> = a
                .basis_comm()
                .iter()
                .map(|y| {
                    let yt = y.transpose();
                    kron(y, &identity(n)) - kron(&identity(n), &yt)
                })
                .collect();
            let mut stacked = ComplexMatrix::zeros(rows.len() * n * n, n * n);
            for (k, r) in rows.iter().enumerate() {
                stacked
                    .view_mut((k * n * n, 0), (n * n, n * n))
                    .copy_from(r);
            }
            let ns = nullspace(&stacked, &tol()).unwrap();
            assert_eq!(ns.dim(), a.basis_m().len());
            for j in 0..ns.dim() {
                let x = crate::linalg::devectorize(&ns.basis.column(j).into_owned(), n, n).unwrap();
                assert!(a.membership(&x, Which::Algebra, &tol()).unwrap().is_member);
            }
            for x in a.basis_m() {
                let v = vectorize(x);
                let resid = &stacked * v;
                assert!(resid.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn embed_is_star_homomorphism() {
        let a = model(&[(2, 1), (3, 2)]);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..10 {
            let x = vec![random(2, &mut rng), random(3, &mut rng)];
            let y = vec![random(2, &mut rng), random(3, &mut rng)];
            let xy: Vec<_> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
            let xs: Vec<_> = x.iter().map(|p| p.adjoint()).collect();
            let ex = a.embed(&x).unwrap();
            let ey = a.embed(&y).unwrap();
            assert!((a.embed(&xy).unwrap() - &ex * &ey).norm() <= 1e-12);
            assert!((a.embed(&xs).unwrap() - ex.adjoint()).norm() <= 1e-12);
        }
    }
}
