use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use schauder_core::op_algebra::{shift_form_of, OperatorExpr, ShiftForm};
use schauder_core::schauder::{
    classify_compact, deflate, deflate_block_continuous, deflate_discrete, deflate_finite_spectrum,
    is_schauder, schauder_spectrum_self_adjoint, schauder_spectrum_with, DeflationConfig, DeflationResult,
    SchauderSpectrumReport, SchauderVerdict, SpectrumOptions,
};
use schauder_core::spectral::{
    block_norm_blowup, certify_grid, dense_eigs, EigenExclusionCertificate, ExclusionParams, GridCertificates,
    LambdaGrid, DENSE_EIGS_MAX_DIM,
};
use schauder_core::Error as CoreError;
use serde::Serialize;

use crate::error::{CliError, ErrorBlock};
use crate::spec_file::{Analysis, OperatorSpecFile, Subject};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Command-line overrides; `None` defers to the spec file, then defaults.
#[derive(Clone, Debug, Default)]
pub struct Flags {
    pub truncation: Option<usize>,
    pub grid_moduli: Option<usize>,
    pub grid_phases: Option<usize>,
    pub bound: Option<f64>,
    pub step_cap: Option<u64>,
    pub epsilon: Option<f64>,
    pub csv: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Settings {
    pub truncation: usize,
    /// `None` lets each analysis pick a grid scaled to the operator.
    pub grid: Option<LambdaGrid>,
    pub bound: f64,
    pub step_cap: u64,
    pub epsilon: f64,
}

impl Settings {
    pub fn resolve(spec: &OperatorSpecFile, flags: &Flags) -> Settings {
        let p = &spec.params;
        let moduli = flags.grid_moduli.or(p.grid_moduli.map(|n| n as usize));
        let phases = flags.grid_phases.or(p.grid_phases.map(|n| n as usize));
        let custom = moduli.is_some() || phases.is_some() || p.grid_min.is_some() || p.grid_max.is_some();
        let grid = custom.then(|| {
            LambdaGrid::log_spaced(
                p.grid_min.unwrap_or(1e-3),
                p.grid_max.unwrap_or(10.0),
                moduli.unwrap_or(16),
                phases.unwrap_or(8) as u32,
            )
        });
        Settings {
            truncation: flags.truncation.or(p.truncation.map(|n| n as usize)).unwrap_or(64),
            grid,
            bound: flags.bound.or(p.bound).unwrap_or(1e12),
            step_cap: flags.step_cap.or(p.step_cap.map(|n| n as u64)).unwrap_or(100_000),
            epsilon: flags.epsilon.or(p.epsilon).unwrap_or(0.01),
        }
    }

    fn params(&self) -> ExclusionParams {
        ExclusionParams {
            bound: self.bound,
            step_cap: self.step_cap,
        }
    }

    fn deflation(&self) -> DeflationConfig {
        DeflationConfig {
            grid: self.grid.clone(),
            params: self.params(),
            audit_window: self.truncation,
            ..DeflationConfig::default()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "analysis", rename_all = "kebab-case")]
pub enum Results {
    SchauderSpectrum {
        report: SchauderSpectrumReport,
    },
    Classify {
        report: SchauderSpectrumReport,
        case: u8,
    },
    Deflate {
        deflation: Box<DeflationResult>,
        spectrum: SchauderSpectrumReport,
    },
    #[serde(rename_all = "camelCase")]
    Certify {
        shift: Option<ShiftForm>,
        zero_check: Option<SchauderVerdict>,
        grid: LambdaGrid,
        certificates: Vec<GridCertificates>,
        block_certificates: Vec<EigenExclusionCertificate>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AuditedWindow {
    pub check: String,
    pub window: usize,
    pub exact: bool,
    pub max_abs_diff: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportFile {
    pub tool_version: &'static str,
    pub wall_time_seconds: f64,
    pub inputs: OperatorSpecFile,
    pub settings: Settings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub results: Option<Results>,
    pub audited_windows: Vec<AuditedWindow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBlock>,
}

pub struct Outcome {
    pub results: Results,
    /// Operator dumped to the matrix and eigenvalue CSVs.
    pub analyzed: Option<OperatorExpr>,
    pub audited: Vec<AuditedWindow>,
}

fn spectrum(t: &OperatorExpr, s: &Settings) -> Result<SchauderSpectrumReport, CliError> {
    let opts = SpectrumOptions {
        grid: s.grid.clone(),
        params: s.params(),
        ..SpectrumOptions::default()
    };
    Ok(schauder_spectrum_with(t, &opts)?)
}

fn deflation_outcome(d: DeflationResult) -> Result<Outcome, CliError> {
    let spectrum = d.spectrum_report()?;
    let audited = vec![AuditedWindow {
        check: "unitary × input = deflated".into(),
        window: d.audit.window,
        exact: d.audit.exact,
        max_abs_diff: d.audit.max_abs_diff,
        passed: d.audit.passed,
    }];
    Ok(Outcome {
        analyzed: Some(d.deflated.clone()),
        results: Results::Deflate {
            deflation: Box::new(d),
            spectrum,
        },
        audited,
    })
}

fn certify_operator(t: &OperatorExpr, s: &Settings) -> Result<Outcome, CliError> {
    let shift = shift_form_of(t)
        .filter(|sf| sf.perm.is_single_bilateral_orbit())
        .ok_or_else(|| CoreError::UnsupportedClass("certify needs a weighted shift along one bilateral orbit".into()))?;
    let max_w = (1..=1024).map(|k| shift.weights.value(k).norm()).fold(0.0, f64::max);
    let grid = s.grid.clone().unwrap_or_else(|| LambdaGrid::default_for(max_w));
    let certificates = certify_grid(&shift, &grid, &s.params(), Default::default())?;
    Ok(Outcome {
        results: Results::Certify {
            zero_check: Some(is_schauder(t)?),
            shift: Some(shift),
            grid,
            certificates,
            block_certificates: Vec::new(),
        },
        analyzed: Some(t.clone()),
        audited: Vec::new(),
    })
}

pub fn execute(spec: &OperatorSpecFile, s: &Settings) -> Result<Outcome, CliError> {
    let subject = spec.subject();
    match (subject, spec.analysis) {
        (Subject::Operator(t), Analysis::SchauderSpectrum) => Ok(Outcome {
            results: Results::SchauderSpectrum {
                report: spectrum(&t, s)?,
            },
            analyzed: Some(t),
            audited: Vec::new(),
        }),
        (Subject::Operator(t), Analysis::Classify) => {
            let report = spectrum(&t, s)?;
            let case = classify_compact(&report.members, report.compact)?;
            Ok(Outcome {
                results: Results::Classify { report, case },
                analyzed: Some(t),
                audited: Vec::new(),
            })
        }
        (Subject::SelfAdjoint(data), analysis) => {
            let report = schauder_spectrum_self_adjoint(&data)?;
            let results = if analysis == Analysis::Classify {
                let case = classify_compact(&report.members, report.compact)?;
                Results::Classify { report, case }
            } else {
                Results::SchauderSpectrum { report }
            };
            Ok(Outcome {
                results,
                analyzed: None,
                audited: Vec::new(),
            })
        }
        (Subject::Operator(t), Analysis::Deflate) => deflation_outcome(deflate(&t, &s.deflation())?),
        (Subject::Operator(t), Analysis::Certify) => certify_operator(&t, s),
        (Subject::Multiplicities(m), _) => {
            let d = if m.tail.is_some() {
                deflate_discrete(&m, &s.deflation())?
            } else {
                deflate_finite_spectrum(&m, &s.deflation())?
            };
            deflation_outcome(d)
        }
        (Subject::BlockModel(mut b), Analysis::Deflate) => {
            b.model.epsilon = s.epsilon;
            deflation_outcome(deflate_block_continuous(&b, &s.deflation())?)
        }
        (Subject::BlockModel(mut b), _) => {
            b.model.epsilon = s.epsilon;
            b.model.validate()?;
            let grid = s
                .grid
                .clone()
                .unwrap_or_else(|| LambdaGrid::default_for(b.model.big_m.max(1.5 * b.model.alpha)));
            let mut block_certificates = Vec::new();
            for lambda in grid.points() {
                for adjoint in [false, true] {
                    block_certificates.push(block_norm_blowup(&b.model, lambda, adjoint, &s.params())?);
                }
            }
            Ok(Outcome {
                results: Results::Certify {
                    shift: None,
                    zero_check: None,
                    grid,
                    certificates: Vec::new(),
                    block_certificates,
                },
                analyzed: None,
                audited: Vec::new(),
            })
        }
    }
}

/// Runs the analysis and writes `report.json` (plus CSVs when asked).
/// The report is written on failure too, carrying the error block.
pub fn run(spec: &OperatorSpecFile, flags: &Flags, out_dir: &Path) -> Result<ReportFile, CliError> {
    let settings = Settings::resolve(spec, flags);
    let started = Instant::now();
    let outcome = execute(spec, &settings);
    let wall = started.elapsed().as_secs_f64();
    std::fs::create_dir_all(out_dir)?;
    let (results, audited, analyzed, error) = match outcome {
        Ok(o) => (Some(o.results), o.audited, o.analyzed, None),
        Err(e) => (None, Vec::new(), None, Some(e)),
    };
    let report = ReportFile {
        tool_version: TOOL_VERSION,
        wall_time_seconds: wall,
        inputs: spec.clone(),
        settings: settings.clone(),
        results,
        audited_windows: audited,
        error: error.as_ref().map(CliError::block),
    };
    let file = std::fs::File::create(out_dir.join("report.json"))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &report)?;
    if let Some(e) = error {
        return Err(e);
    }
    if flags.csv {
        if let Some(t) = &analyzed {
            write_matrix_csv(t, settings.truncation, &out_dir.join("matrix.csv"))?;
            if settings.truncation <= DENSE_EIGS_MAX_DIM {
                write_eigen_csv(t, settings.truncation, &out_dir.join("eigenvalues.csv"))?;
            }
        }
        if let Some(r) = &report.results {
            write_certificate_csv(r, &out_dir.join("certificates.csv"))?;
        }
    }
    Ok(report)
}

fn write_matrix_csv(t: &OperatorExpr, n: usize, path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["row", "col", "value", "re", "im"])?;
    let entries = t.truncate_exact(n);
    for (k, z) in entries.iter().enumerate() {
        if z.is_zero() {
            continue;
        }
        let c = z.to_c64();
        w.write_record([
            (k / n + 1).to_string(),
            (k % n + 1).to_string(),
            z.to_string(),
            c.re.to_string(),
            c.im.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_eigen_csv(t: &OperatorExpr, n: usize, path: &Path) -> Result<(), CliError> {
    let pairs = dense_eigs(&t.truncate(n))?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "re", "im", "residual"])?;
    for (k, p) in pairs.iter().enumerate() {
        w.write_record([(k + 1).to_string(), p.value.re.to_string(), p.value.im.to_string(), p.residual.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per certificate; `block` indexes the certified shift
/// (`shiftCertificates` of a deflation) or is empty for block-norm rows.
#[derive(Debug, Serialize)]
pub struct CertificateRow {
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub side: &'static str,
    pub block: Option<usize>,
    pub witness_index: u64,
    pub magnitude: f64,
    pub log_magnitude: f64,
    pub bound: f64,
}

impl CertificateRow {
    fn new(c: &EigenExclusionCertificate, block: Option<usize>) -> Self {
        CertificateRow {
            lambda_re: c.lambda.re,
            lambda_im: c.lambda.im,
            side: if c.adjoint { "adjoint" } else { "direct" },
            block,
            witness_index: c.witness_index,
            magnitude: c.attained_magnitude,
            log_magnitude: c.log_magnitude,
            bound: c.bound,
        }
    }

    pub fn lambda(&self) -> Complex64 {
        Complex64::new(self.lambda_re, self.lambda_im)
    }
}

pub fn certificate_rows(r: &Results) -> Vec<CertificateRow> {
    let mut rows = Vec::new();
    let push_grid = |grid: &[GridCertificates], block: Option<usize>, rows: &mut Vec<CertificateRow>| {
        for g in grid {
            rows.push(CertificateRow::new(&g.direct, block));
            rows.push(CertificateRow::new(&g.adjoint, block));
        }
    };
    match r {
        Results::Deflate { deflation, .. } => {
            for (b, block) in deflation.shift_certificates.iter().enumerate() {
                push_grid(&block.grid_certificates, Some(b), &mut rows);
            }
            rows.extend(deflation.block_certificates.iter().map(|c| CertificateRow::new(c, None)));
        }
        Results::Certify {
            certificates,
            block_certificates,
            ..
        } => {
            push_grid(certificates, Some(0), &mut rows);
            rows.extend(block_certificates.iter().map(|c| CertificateRow::new(c, None)));
        }
        Results::SchauderSpectrum { .. } | Results::Classify { .. } => {}
    }
    rows
}

fn write_certificate_csv(r: &Results, path: &Path) -> Result<(), CliError> {
    let rows = certificate_rows(r);
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record([
            "lambda_re",
            "lambda_im",
            "side",
            "block",
            "witness_index",
            "magnitude",
            "log_magnitude",
            "bound",
        ])?;
    }
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
