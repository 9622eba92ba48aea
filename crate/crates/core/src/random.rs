//! Seeded generators for channels and states.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::AlgebraModel;
use crate::channel::{DensityState, KrausChannel};
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigen, hermitian_power, identity, kron, ComplexMatrix, ToleranceConfig, C64,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex Gaussian matrix with `E|z|² = 1`.
pub fn gaussian<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    })
}

/// Haar-distributed isometry `C^cols → C^rows`.
pub fn haar_isometry<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let qr = gaussian(rows, cols, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        let dj = r[(j, j)];
        let phase = if dj.norm() > 0.0 {
            dj / dj.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    q
}

pub fn haar_unitary<R: Rng>(n: usize, rng: &mut R) -> ComplexMatrix {
    haar_isometry(n, n, rng)
}

/// Random Hermitian matrix with Gaussian entries.
pub fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = gaussian(n, n, rng);
    (&g + g.adjoint()).scale(0.5)
}

/// Haar-random Stinespring isometry sliced into `d` Kraus operators.
pub fn random_channel(model: Arc<AlgebraModel>, d: usize, seed: u64) -> Result<KrausChannel> {
    if d == 0 {
        return Err(Error::InvalidInput("Kraus count must be positive".into()));
    }
    let n = model.carrier_dim();
    let vstar = haar_isometry(n * d, n, &mut rng(seed));
    let kraus = KrausChannel::kraus_from_dilation(&vstar, d);
    Ok(
        KrausChannel::new(model, kraus, &ToleranceConfig::default())?
            .with_label(format!("random d={d} seed={seed}")),
    )
}

/// Random faithful density in `M`; every eigenvalue is at least `0.05 / N`.
pub fn random_faithful_state(model: &AlgebraModel, seed: u64) -> Result<DensityState> {
    let mut rng = rng(seed);
    let elems: Vec<ComplexMatrix> = model
        .spec()
        .blocks
        .iter()
        .map(|b| {
            let g = gaussian(b.dim, b.dim, &mut rng);
            &g * g.adjoint() + identity(b.dim).scale(0.1)
        })
        .collect();
    let rho = model.embed(&elems)?;
    let tr = crate::linalg::trace(&rho).re;
    DensityState::new(rho.scale(1.0 / tr), &ToleranceConfig::default())
}

/// A unitary in `M` commuting with `ρ ∈ M`: Haar on each eigenspace cluster
/// of every block component.
pub fn random_commuting_unitary<R: Rng>(
    model: &AlgebraModel,
    phi: &DensityState,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    let comps = model.compress(phi.rho())?;
    let elems = comps
        .iter()
        .map(|rb| {
            let eig = hermitian_eigen(rb)?;
            let n = rb.nrows();
            let scale = eig.values.last().copied().unwrap_or(1.0).abs().max(1e-300);
            let mut inner = ComplexMatrix::zeros(n, n);
            let mut start = 0;
            while start < n {
                let mut end = start + 1;
                while end < n && (eig.values[end] - eig.values[end - 1]).abs() <= 1e-9 * scale {
                    end += 1;
                }
                let u = haar_unitary(end - start, rng);
                inner
                    .view_mut((start, start), (end - start, end - start))
                    .copy_from(&u);
                start = end;
            }
            Ok(&eig.vectors * inner * eig.vectors.adjoint())
        })
        .collect::<Result<Vec<_>>>()?;
    model.embed(&elems)
}

fn check_state(model: &AlgebraModel, phi: &DensityState) -> Result<()> {
    if !phi.faithful() {
        return Err(Error::NotFaithful {
            min_eigenvalue: phi.min_eigenvalue(),
        });
    }
    let m = model.membership(
        phi.rho(),
        crate::algebra::Which::Algebra,
        &ToleranceConfig::default(),
    )?;
    if !m.is_member {
        return Err(Error::StateNotInAlgebra {
            distance: m.distance,
        });
    }
    Ok(())
}

/// Convex mixture of `d` conjugations by unitaries in `M` commuting with `ρ`.
pub fn random_phi_channel(
    model: Arc<AlgebraModel>,
    phi: &DensityState,
    d: usize,
    seed: u64,
) -> Result<KrausChannel> {
    if d == 0 {
        return Err(Error::InvalidInput("Kraus count must be positive".into()));
    }
    check_state(&model, phi)?;
    let mut rng = rng(seed);
    let weights: Vec<f64> = (0..d).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let kraus = weights
        .iter()
        .map(|w| Ok(random_commuting_unitary(&model, phi, &mut rng)?.scale((w / total).sqrt())))
        .collect::<Result<Vec<_>>>()?;
    Ok(
        KrausChannel::new(model, kraus, &ToleranceConfig::default())?
            .with_label(format!("random phi-mixture d={d} seed={seed}")),
    )
}

const SINKHORN_ITERATIONS: usize = 5_000;

/// Inner channel in `CP_φ` with `d` Kraus operators per block, obtained by
/// alternately scaling a Gaussian family until `Σ g g* = I` and `Σ g* ρ_b g = ρ_b`.
pub fn random_inner_phi_channel(
    model: Arc<AlgebraModel>,
    phi: &DensityState,
    d: usize,
    seed: u64,
) -> Result<KrausChannel> {
    if d == 0 {
        return Err(Error::InvalidInput("Kraus count must be positive".into()));
    }
    check_state(&model, phi)?;
    if d == 1 {
        let u = random_commuting_unitary(&model, phi, &mut rng(seed))?;
        return Ok(
            KrausChannel::new(model, vec![u], &ToleranceConfig::default())?
                .with_label(format!("random inner phi d=1 seed={seed}")),
        );
    }
    let tol = ToleranceConfig::default();
    let mut rng = rng(seed);
    let comps = model.compress(phi.rho())?;
    let mut per_block: Vec<Vec<ComplexMatrix>> = Vec::new();
    for rb in &comps {
        let n = rb.nrows();
        let rb = rb.scale(1.0 / crate::linalg::trace(rb).re);
        let rho_half = hermitian_power(&rb, C64::new(0.5, 0.0), &tol)?;
        let rho_inv_half = hermitian_power(&rb, C64::new(-0.5, 0.0), &tol)?;
        // scale h = ρ^{1/2} g to Σ h h* = ρ and Σ h* h = ρ
        let mut h: Vec<ComplexMatrix> = (0..d).map(|_| gaussian(n, n, &mut rng)).collect();
        let mut converged = false;
        for _ in 0..SINKHORN_ITERATIONS {
            let out = h
                .iter()
                .fold(ComplexMatrix::zeros(n, n), |a, x| a + x * x.adjoint());
            let left = &rho_half * hermitian_power(&out, C64::new(-0.5, 0.0), &tol)?;
            h = h.iter().map(|x| &left * x).collect();
            let inp = h
                .iter()
                .fold(ComplexMatrix::zeros(n, n), |a, x| a + x.adjoint() * x);
            let right = hermitian_power(&inp, C64::new(-0.5, 0.0), &tol)? * &rho_half;
            h = h.iter().map(|x| x * &right).collect();
            let out = h
                .iter()
                .fold(ComplexMatrix::zeros(n, n), |a, x| a + x * x.adjoint());
            if (out - &rb).norm() < 1e-15 * n as f64 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::InvalidInput(
                "operator scaling did not converge for this seed".into(),
            ));
        }
        let g: Vec<ComplexMatrix> = h.iter().map(|x| &rho_inv_half * x).collect();
        per_block.push(g);
    }
    let kraus = (0..d)
        .map(|k| {
            let elems: Vec<ComplexMatrix> = per_block.iter().map(|g| g[k].clone()).collect();
            model.embed(&elems)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KrausChannel::new(model, kraus, &tol)?
        .with_label(format!("random inner phi d={d} seed={seed}")))
}

/// `u ⊗ I_m` per block with Haar `u`: a random unitary in `M`.
pub fn random_algebra_unitary<R: Rng>(model: &AlgebraModel, rng: &mut R) -> Result<ComplexMatrix> {
    let elems: Vec<ComplexMatrix> = model
        .spec()
        .blocks
        .iter()
        .map(|b| haar_unitary(b.dim, rng))
        .collect();
    model.embed(&elems)
}

/// Random unitary in `M'`.
pub fn random_commutant_unitary<R: Rng>(
    model: &AlgebraModel,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    let elems: Vec<ComplexMatrix> = model
        .spec()
        .blocks
        .iter()
        .map(|b| haar_unitary(b.multiplicity, rng))
        .collect();
    model.embed_commutant(&elems)
}

/// `u ⊗ I_m` helper for tests on a single block.
pub fn ampliate(u: &ComplexMatrix, m: usize) -> ComplexMatrix {
    kron(u, &identity(m))
}
