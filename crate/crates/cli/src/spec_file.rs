//! Operator-description files: a versioned JSON tagged tree.

use std::path::Path;

use schauder_core::index_maps::MultiplicityList;
use schauder_core::op_algebra::OperatorExpr;
use schauder_core::schauder::{BlockContinuousSpec, SelfAdjointSpectralData};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Diagnostic};

pub const FORMAT_VERSION: u32 = 1;
pub const MAX_TRUNCATION: i64 = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    SchauderSpectrum,
    Classify,
    Deflate,
    Certify,
}

/// Exactly one subject per file.
#[derive(Clone, Debug, PartialEq)]
pub enum Subject {
    Operator(OperatorExpr),
    /// Eigenvalues of a positive diagonal operator; deflated by the discrete
    /// or finite-spectrum construction.
    Multiplicities(MultiplicityList),
    BlockModel(BlockContinuousSpec),
    SelfAdjoint(SelfAdjointSpectralData),
}

/// Overrides; every field is optional and command-line flags win.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_moduli: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_phases: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_cap: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct OperatorSpecFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorExpr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplicities: Option<MultiplicityList>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_model: Option<BlockContinuousSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_adjoint: Option<SelfAdjointSpectralData>,
    pub analysis: Analysis,
    #[serde(default)]
    pub params: Params,
}

impl OperatorSpecFile {
    fn subjects(&self) -> Vec<Subject> {
        let mut out = Vec::new();
        out.extend(self.operator.clone().map(Subject::Operator));
        out.extend(self.multiplicities.clone().map(Subject::Multiplicities));
        out.extend(self.block_model.clone().map(Subject::BlockModel));
        out.extend(self.self_adjoint.clone().map(Subject::SelfAdjoint));
        out
    }

    /// Present after [`check`] succeeds.
    pub fn subject(&self) -> Subject {
        self.subjects().into_iter().next().expect("validated spec has a subject")
    }
}

/// `a.b[2].c` style paths from serde, rewritten as JSON pointers.
fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

pub fn parse_str(text: &str) -> Result<OperatorSpecFile, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let spec: OperatorSpecFile = serde_path_to_error::deserialize(de).map_err(|e| {
        CliError::Schema(vec![Diagnostic {
            path: pointer(e.path()),
            message: e.inner().to_string(),
        }])
    })?;
    let problems = check(&spec);
    if problems.is_empty() {
        Ok(spec)
    } else {
        Err(CliError::Schema(problems))
    }
}

pub fn read(path: &Path) -> Result<OperatorSpecFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_str(&text)
}

fn diag(path: &str, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        path: path.into(),
        message: message.into(),
    }
}

/// Constraints serde cannot express.
pub fn check(spec: &OperatorSpecFile) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if spec.version != FORMAT_VERSION {
        out.push(diag("/version", format!("unsupported version {}; expected {FORMAT_VERSION}", spec.version)));
    }
    let p = &spec.params;
    if let Some(n) = p.truncation {
        if !(1..=MAX_TRUNCATION).contains(&n) {
            out.push(diag(
                "/params/truncation",
                format!("truncation must be an integer in 1..={MAX_TRUNCATION}, got {n}"),
            ));
        }
    }
    for (name, v) in [("gridModuli", p.grid_moduli), ("gridPhases", p.grid_phases)] {
        if let Some(n) = v {
            if !(1..=4096).contains(&n) {
                out.push(diag(&format!("/params/{name}"), format!("{name} must be in 1..=4096, got {n}")));
            }
        }
    }
    for (name, v) in [("gridMin", p.grid_min), ("gridMax", p.grid_max), ("bound", p.bound)] {
        if let Some(x) = v {
            if !(x.is_finite() && x > 0.0) {
                out.push(diag(&format!("/params/{name}"), format!("{name} must be positive and finite, got {x}")));
            }
        }
    }
    if let (Some(lo), Some(hi)) = (p.grid_min, p.grid_max) {
        if lo > hi {
            out.push(diag("/params/gridMin", format!("gridMin {lo} exceeds gridMax {hi}")));
        }
    }
    if let Some(b) = p.bound {
        if b <= 1.0 {
            out.push(diag("/params/bound", format!("bound must exceed 1, got {b}")));
        }
    }
    if let Some(n) = p.step_cap {
        if n < 1 {
            out.push(diag("/params/stepCap", format!("stepCap must be a positive integer, got {n}")));
        }
    }
    if let Some(e) = p.epsilon {
        if !(e > 0.0 && e < 1.0) {
            out.push(diag("/params/epsilon", format!("epsilon must lie in (0, 1), got {e}")));
        }
    }
    let subjects = spec.subjects();
    if subjects.len() != 1 {
        out.push(diag(
            "/",
            format!(
                "exactly one of operator, multiplicities, blockModel, selfAdjoint is required, found {}",
                subjects.len()
            ),
        ));
        return out;
    }
    let semantic = match &subjects[0] {
        Subject::Operator(t) => t.validate().err().map(|e| ("/operator", e)),
        Subject::Multiplicities(m) => m.validate().err().map(|e| ("/multiplicities", e)),
        // block-model hypotheses are preconditions, checked at run time
        Subject::BlockModel(_) | Subject::SelfAdjoint(_) => None,
    };
    if let Some((path, e)) = semantic {
        out.push(diag(path, e.to_string()));
    }
    let allowed = matches!(
        (&subjects[0], spec.analysis),
        (Subject::Operator(_), _)
            | (Subject::Multiplicities(_), Analysis::Deflate)
            | (Subject::BlockModel(_), Analysis::Deflate | Analysis::Certify)
            | (Subject::SelfAdjoint(_), Analysis::SchauderSpectrum | Analysis::Classify)
    );
    if !allowed {
        out.push(diag(
            "/analysis",
            format!("analysis {:?} does not apply to this subject", spec.analysis),
        ));
    }
    out
}
