//! JSON encodings. A matrix is an array of rows, each row an array of
//! `[re, im]` pairs.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraModel, AlgebraSpec};
use crate::channel::{DensityState, KrausChannel};
use crate::coupling::{CouplingState, PhiCertificate, Route};
use crate::error::{Error, Result};
use crate::extremal::{Certificate, CoefficientArray, Decomposition, Verdict};
use crate::linalg::{ComplexMatrix, ToleranceConfig, C64};

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &ComplexMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<ComplexMatrix> {
    let r = rows.len();
    let c = rows.first().map(Vec::len).unwrap_or(0);
    if r == 0 || c == 0 {
        return Err(Error::InvalidInput("matrix is empty".into()));
    }
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::InvalidInput(
            "matrix rows have different lengths".into(),
        ));
    }
    if rows.iter().flatten().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has a non-finite entry".into()));
    }
    Ok(ComplexMatrix::from_fn(r, c, |i, j| {
        C64::new(rows[i][j][0], rows[i][j][1])
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelFile {
    pub algebra: AlgebraSpec,
    pub kraus: Vec<MatrixJson>,
    #[serde(default)]
    pub label: String,
}

impl ChannelFile {
    pub fn from_channel(tau: &KrausChannel) -> Self {
        Self {
            algebra: tau.model().spec().clone(),
            kraus: tau.kraus().iter().map(matrix_to_json).collect(),
            label: tau.label().to_string(),
        }
    }

    fn matrices(&self) -> Result<Vec<ComplexMatrix>> {
        self.kraus.iter().map(matrix_from_json).collect()
    }

    pub fn model(&self) -> Result<Arc<AlgebraModel>> {
        Ok(Arc::new(AlgebraModel::build(self.algebra.clone())?))
    }

    pub fn to_channel(&self, tol: &ToleranceConfig) -> Result<KrausChannel> {
        Ok(KrausChannel::new(self.model()?, self.matrices()?, tol)?.with_label(self.label.clone()))
    }

    /// Completely positive map without the unitality check.
    pub fn to_cp_map(&self) -> Result<KrausChannel> {
        Ok(KrausChannel::new_cp(self.model()?, self.matrices()?)?.with_label(self.label.clone()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub state: MatrixJson,
}

impl StateFile {
    pub fn from_state(phi: &DensityState) -> Self {
        Self {
            state: matrix_to_json(phi.rho()),
        }
    }

    pub fn to_state(&self, tol: &ToleranceConfig) -> Result<DensityState> {
        DensityState::new(matrix_from_json(&self.state)?, tol)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingFile {
    pub algebra: AlgebraSpec,
    pub coupling: MatrixJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<MatrixJson>,
}

impl CouplingFile {
    pub fn coupling(&self) -> Result<CouplingState> {
        Ok(CouplingState {
            matrix: matrix_from_json(&self.coupling)?,
        })
    }
}

pub fn array_to_json(a: &CoefficientArray) -> Vec<Vec<MatrixJson>> {
    (0..a.d)
        .map(|i| (0..a.d).map(|j| matrix_to_json(a.entry(i, j))).collect())
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionJson {
    pub plus: ChannelFile,
    pub minus: ChannelFile,
    pub reassembly_residual: f64,
    pub separation: f64,
}

impl DecompositionJson {
    pub fn new(dec: &Decomposition) -> Self {
        Self {
            plus: ChannelFile::from_channel(&dec.plus),
            minus: ChannelFile::from_channel(&dec.minus),
            reassembly_residual: dec.reassembly_residual,
            separation: dec.separation,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateJson {
    pub verdict: Verdict,
    pub kernel_dim: usize,
    pub kernel_basis: Vec<Vec<Vec<MatrixJson>>>,
    pub singular_spectrum: Vec<f64>,
    pub residuals: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub route: Option<Route>,
    pub reduced: ChannelFile,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionJson>,
}

impl CertificateJson {
    pub fn from_certificate(cert: &Certificate, dec: Option<&Decomposition>) -> Self {
        Self {
            verdict: cert.verdict,
            kernel_dim: cert.kernel_dim,
            kernel_basis: cert.kernel_basis.iter().map(array_to_json).collect(),
            singular_spectrum: cert.singular_spectrum.clone(),
            residuals: cert.residuals.clone(),
            notes: cert.notes.clone(),
            route: None,
            reduced: ChannelFile::from_channel(&cert.reduced),
            decomposition: dec.map(DecompositionJson::new),
        }
    }

    pub fn from_phi_certificate(cert: &PhiCertificate, dec: Option<&Decomposition>) -> Self {
        Self {
            verdict: cert.verdict,
            kernel_dim: cert.kernel_dim,
            kernel_basis: cert.kernel_basis.iter().map(array_to_json).collect(),
            singular_spectrum: cert.singular_spectrum.clone(),
            residuals: cert.residuals.clone(),
            notes: cert.notes.clone(),
            route: Some(cert.route),
            reduced: ChannelFile::from_channel(&cert.reduced),
            decomposition: dec.map(DecompositionJson::new),
        }
    }
}
