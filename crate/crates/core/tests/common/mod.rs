//! Test-only helpers shared by the integration suites. The rank oracle here
//! uses complete-pivoting Gaussian elimination, so it shares no code path with
//! the SVD-based solvers in the library.
#![allow(dead_code)]

use std::sync::Arc;

use cpcert_core::{AlgebraModel, AlgebraSpec, ComplexMatrix, C64};

pub fn model(pairs: &[(usize, usize)]) -> Arc<AlgebraModel> {
    Arc::new(AlgebraModel::build(AlgebraSpec::from_pairs(pairs).unwrap()).unwrap())
}

pub fn full(n: usize) -> Arc<AlgebraModel> {
    model(&[(n, 1)])
}

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Flatten matrices into the columns of a dense array.
pub fn columns(mats: &[ComplexMatrix]) -> Vec<Vec<C64>> {
    mats.iter().map(|m| m.iter().copied().collect()).collect()
}

/// Numerical rank of a set of vectors. A pivot counts when its modulus
/// exceeds `rel_tol` times the largest entry of the input.
pub fn elimination_rank(cols: &[Vec<C64>], rel_tol: f64) -> usize {
    if cols.is_empty() {
        return 0;
    }
    let rows = cols[0].len();
    // work on the transpose: one row per vector
    let mut a: Vec<Vec<C64>> = cols.to_vec();
    let scale = a.iter().flatten().map(|z| z.norm()).fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let mut rank = 0;
    let mut live_cols: Vec<usize> = (0..rows).collect();
    while rank < a.len() && !live_cols.is_empty() {
        let mut best = (0.0_f64, rank, 0usize);
        for (i, row) in a.iter().enumerate().skip(rank) {
            for (jj, &j) in live_cols.iter().enumerate() {
                let v = row[j].norm();
                if v > best.0 {
                    best = (v, i, jj);
                }
            }
        }
        if best.0 <= rel_tol * scale {
            break;
        }
        a.swap(rank, best.1);
        let pc = live_cols.swap_remove(best.2);
        let pivot = a[rank][pc];
        let (head, tail) = a.split_at_mut(rank + 1);
        let prow = &head[rank];
        for row in tail.iter_mut() {
            let f = row[pc] / pivot;
            if f != C64::new(0.0, 0.0) {
                for (x, p) in row.iter_mut().zip(prow) {
                    *x -= f * p;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Landau–Streater test: the pairs `(v_k v_j*, v_j* v_k)` are linearly independent.
pub fn joint_pairs_independent(kraus: &[ComplexMatrix], rel_tol: f64) -> bool {
    let d = kraus.len();
    let cols: Vec<Vec<C64>> = (0..d * d)
        .map(|kj| {
            let (k, j) = (kj / d, kj % d);
            let a = &kraus[k] * kraus[j].adjoint();
            let b = kraus[j].adjoint() * &kraus[k];
            a.iter().chain(b.iter()).copied().collect()
        })
        .collect();
    elimination_rank(&cols, rel_tol) == d * d
}

/// Choi test: the products `v_k v_j*` are linearly independent.
pub fn products_independent(kraus: &[ComplexMatrix], rel_tol: f64) -> bool {
    let d = kraus.len();
    let prods: Vec<ComplexMatrix> = (0..d * d)
        .map(|kj| &kraus[kj / d] * kraus[kj % d].adjoint())
        .collect();
    elimination_rank(&columns(&prods), rel_tol) == d * d
}
