use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use cpcert_core::channel::{index, kraus_comm_kernel, minimal_kraus};
use cpcert_core::coupling::{
    channel_to_coupling, coupling_extremality, coupling_to_channel, decompose_cp_phi,
    extremality_cp_phi, extremality_cp_phi_commutant, PhiCertificate,
};
use cpcert_core::extremal::{decompose_cp, extremality_choi, extremality_cp, radon_nikodym};
use cpcert_core::io::{
    array_to_json, matrix_to_json, CertificateJson, ChannelFile, CouplingFile, MatrixJson,
    StateFile,
};
use cpcert_core::linalg::PsdReport;
use cpcert_core::modular::ModularData;
use cpcert_core::random::{
    random_channel, random_faithful_state, random_inner_phi_channel, random_phi_channel,
};
use cpcert_core::{
    AlgebraModel, AlgebraSpec, DensityState, Error, KrausChannel, ToleranceConfig, Verdict,
};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::args::Command;
use crate::error::{
    CliError, CliResult, ErrorReport, EXIT_INDETERMINATE, EXIT_INVALID, EXIT_NOT_EXTREMAL, EXIT_OK,
};

/// A finished command: the JSON report and the process exit code.
pub struct Outcome {
    pub report: Value,
    pub exit_code: i32,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    #[serde(flatten)]
    report: T,
    tolerance: ToleranceConfig,
}

fn envelope<T: Serialize>(command: &str, report: T, tol: &ToleranceConfig) -> CliResult<Value> {
    serde_json::to_value(Envelope {
        command,
        report,
        tolerance: *tol,
    })
    .map_err(|e| CliError::Usage(format!("cannot serialize report: {e}")))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn verdict_exit(v: Verdict) -> i32 {
    match v {
        Verdict::Extremal => EXIT_OK,
        Verdict::NotExtremal => EXIT_NOT_EXTREMAL,
        Verdict::Indeterminate => EXIT_INDETERMINATE,
        Verdict::HypothesisUnmet => EXIT_INVALID,
    }
}

fn verdict_name(v: Verdict) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|s| s.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn load_state(path: &Path, tol: &ToleranceConfig) -> CliResult<DensityState> {
    let file: StateFile = read_json(path)?;
    let phi = file.to_state(tol)?;
    if !phi.faithful() {
        return Err(Error::NotFaithful {
            min_eigenvalue: phi.min_eigenvalue(),
        }
        .into());
    }
    Ok(phi)
}

fn modular(
    model: Arc<AlgebraModel>,
    state: &Path,
    tol: &ToleranceConfig,
) -> CliResult<ModularData> {
    let phi = load_state(state, tol)?;
    Ok(ModularData::new(model, phi, tol)?)
}

pub fn run(command: &Command, tol: &ToleranceConfig) -> CliResult<Outcome> {
    match command {
        Command::Certify { input } if input.is_dir() => certify_batch(input, tol),
        Command::Certify { input } => {
            let (report, exit_code) = certify(input, tol)?;
            Ok(Outcome {
                report: envelope("certify", report, tol)?,
                exit_code,
            })
        }
        Command::CertifyPhi { input, state } => certify_phi(input, state, tol),
        Command::Reduce { input } => reduce(input, tol),
        Command::Rn { input, eta, c } => rn(input, eta, *c, tol),
        Command::Adjoint { input, state } => adjoint(input, state, tol),
        Command::Couple { input, state } => couple(input, state, tol),
        Command::Uncouple {
            input,
            state,
            certify,
        } => uncouple(input, state, *certify, tol),
        Command::Random {
            blocks,
            kraus,
            seed,
            state,
            mixture,
            faithful_state,
        } => random(
            blocks,
            *kraus,
            *seed,
            state.as_deref(),
            *mixture,
            *faithful_state,
            tol,
        ),
        Command::KmsCheck { input, state } => kms(input, state, tol),
    }
}

fn certify(input: &Path, tol: &ToleranceConfig) -> CliResult<(CertificateJson, i32)> {
    let file: ChannelFile = read_json(input)?;
    let tau = file.to_channel(tol)?;
    let mut cert = extremality_cp(&tau, tol)?;
    if tau.model().spec().is_full_matrix_algebra() {
        let choi = extremality_choi(&tau, tol)?;
        cert.notes.push(format!(
            "Choi criterion verdict: {}",
            verdict_name(choi.verdict)
        ));
    }
    let dec = match (cert.verdict, cert.kernel_basis.first()) {
        (Verdict::NotExtremal, Some(lambda)) => Some(decompose_cp(&cert.reduced, lambda, tol)?),
        _ => None,
    };
    let exit = verdict_exit(cert.verdict);
    Ok((CertificateJson::from_certificate(&cert, dec.as_ref()), exit))
}

#[derive(Serialize)]
struct BatchEntry {
    file: String,
    exit_code: i32,
    #[serde(flatten)]
    body: Value,
}

#[derive(Serialize)]
struct BatchReport {
    results: Vec<BatchEntry>,
}

/// Worst exit code of a batch: invalid input, then indeterminate, then not extremal.
fn batch_exit(codes: impl IntoIterator<Item = i32>) -> i32 {
    let rank = |c: i32| match c {
        EXIT_INVALID => 3,
        EXIT_INDETERMINATE => 2,
        EXIT_NOT_EXTREMAL => 1,
        _ => 0,
    };
    codes
        .into_iter()
        .max_by_key(|&c| rank(c))
        .unwrap_or(EXIT_OK)
}

fn certify_batch(dir: &Path, tol: &ToleranceConfig) -> CliResult<Outcome> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|source| CliError::Read {
            path: dir.to_path_buf(),
            source,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Usage(format!(
            "no .json files in {}",
            dir.display()
        )));
    }
    let results: Vec<BatchEntry> = files
        .par_iter()
        .map(|path| {
            let file = path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let (body, exit_code) = match certify(path, tol) {
                Ok((cert, code)) => (serde_json::to_value(cert).unwrap_or(Value::Null), code),
                Err(e) => {
                    let report = ErrorReport::from(&e);
                    (
                        serde_json::to_value(report).unwrap_or(Value::Null),
                        e.exit_code(),
                    )
                }
            };
            BatchEntry {
                file,
                exit_code,
                body,
            }
        })
        .collect();
    let exit_code = batch_exit(results.iter().map(|r| r.exit_code));
    Ok(Outcome {
        report: envelope("certify", BatchReport { results }, tol)?,
        exit_code,
    })
}

fn certify_phi(input: &Path, state: &Path, tol: &ToleranceConfig) -> CliResult<Outcome> {
    let file: ChannelFile = read_json(input)?;
    let tau = file.to_channel(tol)?;
    let md = modular(tau.model().clone(), state, tol)?;
    let central = extremality_cp_phi(&md, &tau, tol)?;
    let commutant = extremality_cp_phi_commutant(&md, &tau, tol)?;
    let (mut primary, other): (PhiCertificate, Option<&PhiCertificate>) =
        if central.verdict == Verdict::HypothesisUnmet {
            let mut cert = commutant.clone();
            cert.notes.splice(0..0, central.notes.iter().cloned());
            (cert, None)
        } else {
            (central.clone(), Some(&commutant))
        };
    if let Some(other) = other {
        primary.notes.push(format!(
            "commutant route verdict: {} (kernel dimension {})",
            verdict_name(other.verdict),
            other.kernel_dim
        ));
    }
    let dec = match (primary.verdict, primary.kernel_basis.first()) {
        (Verdict::NotExtremal, Some(lambda)) => {
            Some(decompose_cp_phi(&md, &primary.reduced, lambda, tol)?)
        }
        _ => None,
    };
    let exit_code = verdict_exit(primary.verdict);
    let report = CertificateJson::from_phi_certificate(&primary, dec.as_ref());
    Ok(Outcome {
        report: envelope("certify-phi", report, tol)?,
        exit_code,
    })
}

#[derive(Serialize)]
struct ReduceReport {
    index: usize,
    input_kraus: usize,
    comm_kernel_dim_before: usize,
    comm_kernel_dim_after: usize,
    reduction_residual: f64,
    channel: ChannelFile,
}

fn reduce(input: &Path, tol: &ToleranceConfig) -> CliResult<Outcome> {
    let file: ChannelFile = read_json(input)?;
    let tau = file.to_channel(tol)?;
    let reduced = minimal_kraus(&tau, tol)?;
    let report = ReduceReport {
        index: index(&tau, tol)?,
        input_kraus: tau.d(),
        comm_kernel_dim_before: kraus_comm_kernel(&tau, tol)?.basis.len(),
        comm_kernel_dim_after: kraus_comm_kernel(&reduced, tol)?.basis.len(),
        reduction_residual: reduced.distance(&tau)?,
        channel: ChannelFile::from_channel(&reduced),
    };
    Ok(Outcome {
        report: envelope("reduce", report, tol)?,
        exit_code: EXIT_OK,
    })
}

#[derive(Serialize)]
struct RnReport {
    t: Vec<Vec<MatrixJson>>,
    psd: PsdReport,
    bounded: PsdReport,
    domination_constant: f64,
    domination_min_eigenvalue: f64,
    reconstruction_residual: f64,
    singular_spectrum: Vec<f64>,
    notes: Vec<String>,
}

fn rn(input: &Path, eta: &Path, c: f64, tol: &ToleranceConfig) -> CliResult<Outcome> {
    let tau = read_json::<ChannelFile>(input)?.to_channel(tol)?;
    let eta = read_json::<ChannelFile>(eta)?.to_cp_map()?;
    let d = radon_nikodym(&eta, &tau, c, tol)?;
    let report = RnReport {
        t: array_to_json(&d.t),
        psd: d.psd,
        bounded: d.bounded,
        domination_constant: d.domination_constant,
        domination_min_eigenvalue: d.domination_min_eigenvalue,
        reconstruction_residual: d.reconstruction_residual,
        singular_spectrum: d.singular_spectrum,
        notes: d.notes,
    };
    Ok(Outcome {
        report: envelope("rn", report, tol)?,
        exit_code: EXIT_OK,
    })
}

#[derive(Serialize)]
struct AdjointReport {
    duality_defect: f64,
    index: usize,
    adjoint_index: usize,
    channel: ChannelFile,
}

fn adjoint(input: &Path, state: &Path, tol: &ToleranceConfig) -> CliResult<Outcome> {
    let tau = read_json::<ChannelFile>(input)?.to_channel(tol)?;
    let md = modular(tau.model().clone(), state, tol)?;
    let tilde = md.adjoint_channel(&tau, tol)?;
    let report = AdjointReport {
        duality_defect: md.duality_defect(&tau, &tilde)?,
        index: index(&tau, tol)?,
        adjoint_index: index(&tilde, tol)?,
        channel: ChannelFile::from_channel(&tilde),
    };
    Ok(Outcome {
        report: envelope("adjoint", report, tol)?,
        exit_code: EXIT_OK,
    })
}

#[derive(Serialize)]
struct CoupleReport {
    marginal_defect: f64,
    #[serde(flatten)]
    file: CouplingFile,
}

fn couple(input: &Path, state: &Path, tol: &ToleranceConfig) -> CliResult<Outcome> {
    let tau = read_json::<ChannelFile>(input)?.to_channel(tol)?;
    let md = modular(tau.model().clone(), state, tol)?;
    let d = channel_to_coupling(&md, &tau, tol)?;
    let report = CoupleReport {
        marginal_defect: d.marginal_defect(md.rho()),
        file: CouplingFile {
            algebra: tau.model().spec().clone(),
            coupling: matrix_to_json(&d.matrix),
            state: Some(matrix_to_json(md.rho())),
        },
    };
    Ok(Outcome {
        report: envelope("couple", report, tol)?,
        exit_code: EXIT_OK,
    })
}

#[derive(Serialize)]
struct UncoupleReport {
    marginal_defect: f64,
    channel: ChannelFile,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<CertificateJson>,
}

fn uncouple(
    input: &Path,
    state: &Path,
    certify: bool,
    tol: &ToleranceConfig,
) -> CliResult<Outcome> {
    let file: CouplingFile = read_json(input)?;
    let model = Arc::new(AlgebraModel::build(file.algebra.clone())?);
    let md = modular(model, state, tol)?;
    let d = file.coupling()?;
    let tau = coupling_to_channel(&md, &d, tol)?;
    let mut exit_code = EXIT_OK;
    let certificate = if certify {
        let cert = coupling_extremality(&md, &d, tol)?;
        exit_code = verdict_exit(cert.verdict);
        Some(CertificateJson::from_phi_certificate(&cert, None))
    } else {
        None
    };
    let report = UncoupleReport {
        marginal_defect: d.marginal_defect(md.rho()),
        channel: ChannelFile::from_channel(&tau),
        certificate,
    };
    Ok(Outcome {
        report: envelope("uncouple", report, tol)?,
        exit_code,
    })
}

/// Parse `2x1,1x2` into `(dim, multiplicity)` pairs.
pub fn parse_blocks(text: &str) -> CliResult<AlgebraSpec> {
    let pairs = text
        .split(',')
        .map(|part| {
            let (n, m) = part
                .trim()
                .split_once(['x', 'X'])
                .ok_or_else(|| CliError::Usage(format!("block `{part}` is not DIMxMULT")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::Usage(format!("block `{part}` is not DIMxMULT")))
            };
            Ok((parse(n)?, parse(m)?))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(AlgebraSpec::from_pairs(&pairs)?)
}

#[derive(Serialize)]
#[serde(untagged)]
enum RandomReport {
    Channel(ChannelFile),
    State(StateFile),
}

fn random(
    blocks: &str,
    d: usize,
    seed: u64,
    state: Option<&Path>,
    mixture: bool,
    faithful_state: bool,
    tol: &ToleranceConfig,
) -> CliResult<Outcome> {
    let model = Arc::new(AlgebraModel::build(parse_blocks(blocks)?)?);
    let report = if faithful_state {
        RandomReport::State(StateFile::from_state(&random_faithful_state(&model, seed)?))
    } else {
        let tau: KrausChannel = match state {
            None => random_channel(model, d, seed)?,
            Some(path) => {
                let phi = load_state(path, tol)?;
                if mixture {
                    random_phi_channel(model, &phi, d, seed)?
                } else {
                    random_inner_phi_channel(model, &phi, d, seed)?
                }
            }
        };
        RandomReport::Channel(ChannelFile::from_channel(&tau))
    };
    Ok(Outcome {
        report: envelope("random", report, tol)?,
        exit_code: EXIT_OK,
    })
}

#[derive(Serialize)]
struct KmsEntry {
    x: usize,
    y: usize,
    defect: f64,
}

#[derive(Serialize)]
struct KmsReport {
    basis_size: usize,
    max_defect: f64,
    passes: bool,
    defects: Vec<KmsEntry>,
    summary: BTreeMap<String, f64>,
}

fn kms(input: &Path, state: &Path, tol: &ToleranceConfig) -> CliResult<Outcome> {
    let file: ChannelFile = read_json(input)?;
    let md = modular(file.model()?, state, tol)?;
    let basis = md.model().basis_m();
    let mut defects = Vec::with_capacity(basis.len() * basis.len());
    for (i, x) in basis.iter().enumerate() {
        for (j, y) in basis.iter().enumerate() {
            defects.push(KmsEntry {
                x: i,
                y: j,
                defect: md.kms_check(x, y)?,
            });
        }
    }
    let max_defect = defects.iter().map(|e| e.defect).fold(0.0, f64::max);
    let mean = defects.iter().map(|e| e.defect).sum::<f64>() / defects.len().max(1) as f64;
    let summary = BTreeMap::from([("max".to_string(), max_defect), ("mean".to_string(), mean)]);
    let report = KmsReport {
        basis_size: basis.len(),
        max_defect,
        passes: max_defect <= tol.residual_tol,
        defects,
        summary,
    };
    Ok(Outcome {
        report: envelope("kms-check", report, tol)?,
        exit_code: EXIT_OK,
    })
}
