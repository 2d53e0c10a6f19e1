//! Schauder predicates, Schauder spectra of structured operators, and the
//! deflation constructions producing `U′` with `σ_S(U′T) = ∅`.
//!
//! Zero is always decided structurally (column and row coverage); nonzero
//! `λ` are excluded by certificates over a finite grid, and reports name the
//! grid they cover.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index_maps::{
    decompose_into_spreads, expand_multiplicities, sigma_bilateral, IndexSequence, Multiplicity, MultiplicityList,
    Permutation, SpreadSpec,
};
use crate::op_algebra::{recognize_shift_form, shift_form_of, OperatorExpr, ShiftForm};
use crate::par::{self, Execution};
use crate::scalar::Scalar;
use crate::sequence::SeqRule;
use crate::spectral::{
    block_norm_blowup, certify_grid, dense_eigs, matrix_norm, shields_similar, BlockNormModel,
    EigenExclusionCertificate, ExclusionParams, GridCertificates, LambdaGrid, ShieldsVerdict,
};

/// Columns and rows probed by structural checks.
pub const PROBE_WINDOW: u64 = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchauderFailure {
    NotInjective,
    RangeNotDense,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SchauderVerdict {
    pub schauder: bool,
    pub failure: Option<SchauderFailure>,
    /// Empty column (not injective) or unreached row (range not dense).
    pub index: Option<u64>,
}

impl SchauderVerdict {
    fn yes() -> Self {
        SchauderVerdict {
            schauder: true,
            failure: None,
            index: None,
        }
    }

    fn no(failure: SchauderFailure, index: u64) -> Self {
        SchauderVerdict {
            schauder: false,
            failure: Some(failure),
            index: Some(index),
        }
    }
}

fn nonzero_in_column(t: &OperatorExpr, j: u64) -> usize {
    t.col_support(j).into_iter().filter(|&i| !t.entry(i, j).is_zero()).count()
}

fn nonzero_in_row(t: &OperatorExpr, i: u64) -> usize {
    t.row_support(i).into_iter().filter(|&j| !t.entry(i, j).is_zero()).count()
}

pub fn is_schauder(t: &OperatorExpr) -> Result<SchauderVerdict> {
    is_schauder_within(t, PROBE_WINDOW)
}

/// Exact verdict for operators with at most one nonzero per row and column:
/// an empty column is a kernel vector, an unreached row is orthogonal to the
/// range.
pub fn is_schauder_within(t: &OperatorExpr, window: u64) -> Result<SchauderVerdict> {
    t.validate()?;
    let unsupported = |what: &str, k: u64| {
        Error::UnsupportedClass(format!("{what} {k} has more than one nonzero entry"))
    };
    for j in 1..=window {
        match nonzero_in_column(t, j) {
            0 => return Ok(SchauderVerdict::no(SchauderFailure::NotInjective, j)),
            1 => {}
            _ => return Err(unsupported("column", j)),
        }
    }
    for i in 1..=window {
        match nonzero_in_row(t, i) {
            0 => return Ok(SchauderVerdict::no(SchauderFailure::RangeNotDense, i)),
            1 => {}
            _ => return Err(unsupported("row", i)),
        }
    }
    Ok(SchauderVerdict::yes())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", rename_all_fields = "camelCase")]
pub enum SpectrumMembers {
    EmptySet,
    /// Distinct values, decreasing in modulus.
    FiniteSet { values: Vec<Scalar> },
    /// The values of `rule`, plus 0 when `includes_zero`.
    SequenceWithLimitZero { rule: SeqRule, includes_zero: bool },
}

impl SpectrumMembers {
    pub fn contains_zero(&self) -> bool {
        match self {
            SpectrumMembers::EmptySet => false,
            SpectrumMembers::FiniteSet { values } => values.iter().any(|v| v.is_zero()),
            SpectrumMembers::SequenceWithLimitZero { includes_zero, .. } => *includes_zero,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberReason {
    pub value: Scalar,
    pub reason: SchauderFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SchauderSpectrumReport {
    pub members: SpectrumMembers,
    pub per_member_reason: Vec<MemberReason>,
    /// Reason shared by every value of a sequence member set.
    pub sequence_reason: Option<SchauderFailure>,
    pub compact: bool,
    pub classification_case: Option<u8>,
    /// Grids on which nonzero `λ` were excluded by certificate.
    pub certified_grids: Vec<LambdaGrid>,
    pub notes: Vec<String>,
}

impl SchauderSpectrumReport {
    fn from_parts(p: Parts) -> Result<Self> {
        let classification_case = if p.compact {
            Some(classify_compact(&p.members, true)?)
        } else {
            None
        };
        Ok(SchauderSpectrumReport {
            members: p.members,
            per_member_reason: p.reasons,
            sequence_reason: p.sequence_reason,
            compact: p.compact,
            classification_case,
            certified_grids: p.grids,
            notes: p.notes,
        })
    }
}

/// The six mutually exclusive shapes of `σ_S` for a compact operator:
/// 1 empty, 2 `{0}`, 3 finite without 0, 4 finite with 0,
/// 5 sequence tending to 0 without 0, 6 with 0.
pub fn classify_compact(members: &SpectrumMembers, compact: bool) -> Result<u8> {
    if !compact {
        return Err(Error::NotCompact);
    }
    Ok(match members {
        SpectrumMembers::EmptySet => 1,
        SpectrumMembers::FiniteSet { values } if values.is_empty() => 1,
        SpectrumMembers::FiniteSet { values } if values.iter().all(|v| v.is_zero()) => 2,
        SpectrumMembers::FiniteSet { values } if values.iter().any(|v| v.is_zero()) => 4,
        SpectrumMembers::FiniteSet { .. } => 3,
        SpectrumMembers::SequenceWithLimitZero { includes_zero: false, .. } => 5,
        SpectrumMembers::SequenceWithLimitZero { includes_zero: true, .. } => 6,
    })
}

#[derive(Clone, Debug)]
pub struct SpectrumOptions {
    pub grid: Option<LambdaGrid>,
    pub params: ExclusionParams,
    pub window: u64,
    pub exec: Execution,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            grid: None,
            params: ExclusionParams::default(),
            window: PROBE_WINDOW,
            exec: Execution::default(),
        }
    }
}

const SELF_ADJOINT_NOTE: &str = "self-adjoint: σ_S computed as σ_p from the injective/dense-range criterion, \
not as the complement of σ_p in σ";

struct Parts {
    members: SpectrumMembers,
    reasons: Vec<MemberReason>,
    sequence_reason: Option<SchauderFailure>,
    compact: bool,
    grids: Vec<LambdaGrid>,
    notes: Vec<String>,
}

impl Parts {
    fn finite(values: Vec<Scalar>, compact: bool) -> Parts {
        let mut values = values;
        values.sort_by(|a, b| b.cmp_abs(a));
        values.dedup();
        let mut deduped: Vec<Scalar> = Vec::with_capacity(values.len());
        for v in values {
            if !deduped.contains(&v) {
                deduped.push(v);
            }
        }
        let reasons = deduped
            .iter()
            .map(|&value| MemberReason {
                value,
                reason: SchauderFailure::NotInjective,
            })
            .collect();
        let members = if deduped.is_empty() {
            SpectrumMembers::EmptySet
        } else {
            SpectrumMembers::FiniteSet { values: deduped }
        };
        Parts {
            members,
            reasons,
            sequence_reason: None,
            compact,
            grids: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn union(self, other: Parts) -> Result<Parts> {
        use SpectrumMembers::*;
        let members = match (self.members, other.members) {
            (EmptySet, m) | (m, EmptySet) => m,
            (FiniteSet { values: a }, FiniteSet { values: b }) => {
                let merged = Parts::finite(a.into_iter().chain(b).collect(), true);
                merged.members
            }
            (SequenceWithLimitZero { rule, includes_zero }, FiniteSet { values })
            | (FiniteSet { values }, SequenceWithLimitZero { rule, includes_zero })
                if values.iter().all(|v| v.is_zero()) =>
            {
                SequenceWithLimitZero {
                    rule,
                    includes_zero: includes_zero || !values.is_empty(),
                }
            }
            _ => {
                return Err(Error::UnsupportedClass(
                    "union of block spectra is not a finite set or a single sequence".into(),
                ))
            }
        };
        let mut reasons = self.reasons;
        for r in other.reasons {
            if !reasons.iter().any(|x| x.value == r.value) {
                reasons.push(r);
            }
        }
        let mut grids = self.grids;
        for g in other.grids {
            if !grids.contains(&g) {
                grids.push(g);
            }
        }
        let mut notes = self.notes;
        for n in other.notes {
            if !notes.contains(&n) {
                notes.push(n);
            }
        }
        Ok(Parts {
            members,
            reasons,
            sequence_reason: self.sequence_reason.or(other.sequence_reason),
            compact: self.compact && other.compact,
            grids,
            notes,
        })
    }
}

pub fn schauder_spectrum(t: &OperatorExpr) -> Result<SchauderSpectrumReport> {
    schauder_spectrum_with(t, &SpectrumOptions::default())
}

pub fn schauder_spectrum_with(t: &OperatorExpr, opts: &SpectrumOptions) -> Result<SchauderSpectrumReport> {
    t.validate()?;
    let mut parts = spectrum_parts(t, opts)?;
    if t.is_structurally_self_adjoint() && !parts.notes.iter().any(|n| n == SELF_ADJOINT_NOTE) {
        parts.notes.push(SELF_ADJOINT_NOTE.into());
    }
    SchauderSpectrumReport::from_parts(parts)
}

fn spectrum_parts(t: &OperatorExpr, opts: &SpectrumOptions) -> Result<Parts> {
    if let OperatorExpr::BlockDirectSum { blocks, partition } = t {
        let mut acc: Option<Parts> = None;
        for (block, cell) in blocks.iter().zip(partition) {
            let part = match cell.len() {
                Some(len) => finite_cell_parts(block, len)?,
                None => spectrum_parts(block, opts)?,
            };
            acc = Some(match acc {
                None => part,
                Some(a) => a.union(part)?,
            });
        }
        return acc.ok_or(Error::EmptyInput);
    }
    let Some(sf) = shift_form_of(t) else {
        return Err(Error::UnsupportedClass(
            "no structured form for this operator tree (supported: diagonal, permutation × diagonal, block sums)".into(),
        ));
    };
    if sf.perm.is_identity() {
        diagonal_parts(&sf.weights, opts.window)
    } else if sf.perm.is_single_bilateral_orbit() {
        shift_parts(&sf, opts)
    } else {
        Err(Error::UnsupportedClass(format!(
            "shift along {} is not a single bilateral orbit",
            sf.perm.description()
        )))
    }
}

fn finite_cell_parts(block: &OperatorExpr, len: usize) -> Result<Parts> {
    match block {
        OperatorExpr::Diagonal { weights } => {
            let values = (1..=len as u64).map(|k| weights.value(k)).collect();
            let mut p = Parts::finite(values, true);
            if weights_are_real(weights, len as u64) {
                p.notes.push(SELF_ADJOINT_NOTE.into());
            }
            Ok(p)
        }
        _ => Err(Error::UnsupportedClass("finite partition cells support diagonal blocks only".into())),
    }
}

fn weights_are_real(w: &SeqRule, window: u64) -> bool {
    (1..=window).all(|k| w.value(k).is_real())
}

fn diagonal_parts(w: &SeqRule, window: u64) -> Result<Parts> {
    let mut parts = if let Some((from, c)) = w.eventually_constant() {
        let values = (1..from).map(|k| w.value(k)).chain(std::iter::once(c)).collect();
        Parts::finite(values, c.is_zero())
    } else if w.limit().is_some_and(|l| l.is_zero()) {
        let zero = w.first_zero(window);
        let mut reasons = Vec::new();
        if zero.is_some() {
            reasons.push(MemberReason {
                value: Scalar::ZERO,
                reason: SchauderFailure::NotInjective,
            });
        }
        Parts {
            members: SpectrumMembers::SequenceWithLimitZero {
                rule: w.clone(),
                includes_zero: zero.is_some(),
            },
            reasons,
            sequence_reason: Some(SchauderFailure::NotInjective),
            compact: true,
            grids: Vec::new(),
            notes: Vec::new(),
        }
    } else {
        return Err(Error::UnsupportedClass(
            "diagonal values neither stabilize nor tend to 0".into(),
        ));
    };
    if weights_are_real(w, window) {
        parts.notes.push(SELF_ADJOINT_NOTE.into());
    }
    Ok(parts)
}

fn max_weight(w: &SeqRule, window: u64) -> f64 {
    (1..=window).map(|k| w.value(k).norm()).fold(0.0, f64::max)
}

fn shift_parts(sf: &ShiftForm, opts: &SpectrumOptions) -> Result<Parts> {
    if let Some(k) = sf.first_zero_weight(opts.window) {
        return Err(Error::UnsupportedClass(format!(
            "weighted shift with vanishing weight at {k}"
        )));
    }
    let grid = opts
        .grid
        .clone()
        .unwrap_or_else(|| LambdaGrid::default_for(max_weight(&sf.weights, opts.window)));
    certify_grid(sf, &grid, &opts.params, opts.exec)?;
    let compact = sf.weights.limit().is_some_and(|l| l.is_zero());
    Ok(Parts {
        members: SpectrumMembers::EmptySet,
        reasons: Vec::new(),
        sequence_reason: None,
        compact,
        notes: vec![format!(
            "nonzero λ excluded by direct and adjoint certificates on {} grid points; λ = 0 decided structurally",
            grid.len()
        )],
        grids: vec![grid],
    })
}

/// Spectral data of a self-adjoint operator given abstractly: eigenvalues
/// with multiplicities and intervals of continuous spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SelfAdjointSpectralData {
    pub eigenvalues: MultiplicityList,
    #[serde(default)]
    pub continuous: Vec<[f64; 2]>,
}

/// For self-adjoint `A`, `λI − A` injective implies dense range, so
/// `σ_S(A) = σ_p(A)`; continuous spectrum contributes nothing.
pub fn schauder_spectrum_self_adjoint(data: &SelfAdjointSpectralData) -> Result<SchauderSpectrumReport> {
    let m = &data.eigenvalues;
    for iv in &data.continuous {
        if !(iv[0] <= iv[1]) {
            return Err(Error::InvalidInput(format!("interval [{}, {}] is empty", iv[0], iv[1])));
        }
    }
    if m.entries.is_empty() && m.tail.is_none() {
        if data.continuous.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut p = Parts::finite(Vec::new(), false);
        p.notes.push(SELF_ADJOINT_NOTE.into());
        return SchauderSpectrumReport::from_parts(p);
    }
    m.validate()?;
    if m.entries.iter().chain(std::iter::empty()).any(|e| !e.value.is_real()) {
        return Err(Error::InvalidInput("self-adjoint eigenvalues must be real".into()));
    }
    let infinite_nonzero = m
        .entries
        .iter()
        .any(|e| e.multiplicity == Multiplicity::Infinite && !e.value.is_zero());
    let mut parts = match &m.tail {
        None => {
            let values = m.entries.iter().map(|e| e.value).collect();
            Parts::finite(values, data.continuous.is_empty() && !infinite_nonzero)
        }
        Some(tail) if m.entries.is_empty() && tail.limit().is_some_and(|l| l.is_zero()) => {
            let mut p = diagonal_parts(tail, PROBE_WINDOW)?;
            p.compact = data.continuous.is_empty();
            p.notes.clear();
            p
        }
        Some(_) => {
            return Err(Error::UnsupportedClass(
                "eigenvalue entries alongside a sequence tail".into(),
            ))
        }
    };
    parts.notes.push(SELF_ADJOINT_NOTE.into());
    SchauderSpectrumReport::from_parts(parts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaPath {
    Basic,
    Discrete,
    FiniteSpectrum,
    BlockContinuous,
}

#[derive(Clone, Debug)]
pub struct DeflationConfig {
    /// `None` uses [`LambdaGrid::default_for`] the largest weight.
    pub grid: Option<LambdaGrid>,
    pub params: ExclusionParams,
    pub audit_window: usize,
    pub probe_window: u64,
    pub shields_horizon: u64,
    pub exec: Execution,
}

impl Default for DeflationConfig {
    fn default() -> Self {
        DeflationConfig {
            grid: None,
            params: ExclusionParams::default(),
            audit_window: 64,
            probe_window: PROBE_WINDOW,
            shields_horizon: 10_000,
            exec: Execution::default(),
        }
    }
}

impl DeflationConfig {
    fn grid_for(&self, max_weight: f64) -> LambdaGrid {
        self.grid.clone().unwrap_or_else(|| LambdaGrid::default_for(max_weight))
    }
}

/// Spread decomposition of one permutation factor of `U′`; `cell` is the
/// partition cell it acts on, in local indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BlockSpreads {
    pub cell: Option<IndexSequence>,
    pub spreads: Vec<SpreadSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CertifiedBlock {
    pub label: String,
    pub cell: Option<IndexSequence>,
    pub shift: ShiftForm,
    pub grid_certificates: Vec<GridCertificates>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WindowAudit {
    pub window: usize,
    pub exact: bool,
    pub max_abs_diff: f64,
    pub unitary_ok: bool,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EigenAudit {
    pub dimension: usize,
    pub max_relative_residual: f64,
    pub spectral_radius: f64,
    pub eigenvalues: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DeflationResult {
    pub lemma_path: LemmaPath,
    /// The operator `U′` multiplies.
    pub input: OperatorExpr,
    pub unitary: OperatorExpr,
    /// Spreads of the constructed `U′` (before any recognition unitary).
    pub unitary_spreads: Vec<BlockSpreads>,
    pub deflated: OperatorExpr,
    pub shift: Option<ShiftForm>,
    pub grid: LambdaGrid,
    pub shift_certificates: Vec<CertifiedBlock>,
    pub block_certificates: Vec<EigenExclusionCertificate>,
    pub block_model: Option<BlockNormModel>,
    /// `λ = 0`: injectivity and dense range of the deflated operator.
    pub zero_check: SchauderVerdict,
    pub shields: Option<ShieldsVerdict>,
    pub audit: WindowAudit,
    pub eigen_audit: Option<EigenAudit>,
    pub notes: Vec<String>,
}

impl DeflationResult {
    pub fn certificate_count(&self) -> usize {
        self.shift_certificates.iter().map(|b| 2 * b.grid_certificates.len()).sum::<usize>()
            + self.block_certificates.len()
    }

    /// `σ_S` of the deflated operator as established by the certificates.
    pub fn spectrum_report(&self) -> Result<SchauderSpectrumReport> {
        if !self.zero_check.schauder {
            return Err(Error::PreconditionViolated("deflated operator fails at λ = 0".into()));
        }
        let compact = matches!(self.lemma_path, LemmaPath::Basic | LemmaPath::Discrete)
            && self
                .shift_certificates
                .iter()
                .all(|b| b.shift.weights.limit().is_some_and(|l| l.is_zero()));
        SchauderSpectrumReport::from_parts(Parts {
            members: SpectrumMembers::EmptySet,
            reasons: Vec::new(),
            sequence_reason: None,
            compact,
            grids: vec![self.grid.clone()],
            notes: vec![format!(
                "nonzero λ excluded by {} certificates; λ = 0 decided structurally",
                self.certificate_count()
            )],
        })
    }
}

fn check_unitary_window(u: &OperatorExpr, n: usize) -> bool {
    let unit = |z: Scalar| (z.norm() - 1.0).abs() <= 1e-12;
    (1..=n as u64).all(|j| {
        let col: Vec<Scalar> = u.col_support(j).into_iter().map(|i| u.entry(i, j)).filter(|z| !z.is_zero()).collect();
        let row: Vec<Scalar> = u.row_support(j).into_iter().map(|k| u.entry(j, k)).filter(|z| !z.is_zero()).collect();
        col.len() == 1 && row.len() == 1 && unit(col[0]) && unit(row[0])
    })
}

/// Compares `Product(unitary, input)` with `expected` on the leading window.
fn audit_window(unitary: &OperatorExpr, input: &OperatorExpr, expected: &[Scalar], n: usize) -> WindowAudit {
    let lhs = OperatorExpr::product(unitary.clone(), input.clone()).truncate_exact(n);
    let exact = lhs.iter().chain(expected).all(|z| z.is_exact());
    let max_abs_diff = lhs
        .iter()
        .zip(expected)
        .map(|(a, b)| (a.to_c64() - b.to_c64()).norm())
        .fold(0.0, f64::max);
    let matches = if exact { lhs == expected } else { max_abs_diff <= 1e-12 };
    let unitary_ok = check_unitary_window(unitary, n);
    WindowAudit {
        window: n,
        exact,
        max_abs_diff,
        unitary_ok,
        passed: matches && unitary_ok,
    }
}

fn require_audit(audit: &WindowAudit) -> Result<()> {
    if audit.passed {
        Ok(())
    } else {
        Err(Error::PreconditionViolated(format!(
            "deflation audit failed on the {0}×{0} window (max difference {1:e}, unitary {2})",
            audit.window, audit.max_abs_diff, audit.unitary_ok
        )))
    }
}

/// Positive, non-increasing (strictly when `strict`) on the window, limit 0.
fn check_vanishing(t: &SeqRule, window: u64, strict: bool) -> Result<()> {
    if !t.limit().is_some_and(|l| l.is_zero()) {
        return Err(Error::PreconditionViolated("weights do not tend to 0".into()));
    }
    let mut prev: Option<Scalar> = None;
    for k in 1..=window {
        let v = t.value(k);
        if !v.is_positive_real() {
            return Err(Error::PreconditionViolated(format!("weight {k} is {v}, not positive")));
        }
        if let Some(p) = prev {
            let ord = v.cmp_abs(&p);
            let bad = if strict { ord.is_ge() } else { ord.is_gt() };
            if bad {
                let how = if strict { "strictly decreasing" } else { "non-increasing" };
                return Err(Error::PreconditionViolated(format!("weights are not {how} at {k}")));
            }
        }
        prev = Some(v);
    }
    Ok(())
}

fn residue_partition(cells: usize) -> Vec<IndexSequence> {
    (0..cells as u64).map(|b| IndexSequence::arithmetic(b + 1, cells as u64)).collect()
}

/// One σ-shift per block: `blocks[0]` on the simple part, the rest constant.
struct ShiftLayout {
    labels: Vec<String>,
    weights: Vec<SeqRule>,
}

impl ShiftLayout {
    fn partition(&self) -> Option<Vec<IndexSequence>> {
        (self.weights.len() > 1).then(|| residue_partition(self.weights.len()))
    }

    fn assemble(&self, each: impl Fn(&SeqRule) -> OperatorExpr) -> OperatorExpr {
        match self.partition() {
            None => each(&self.weights[0]),
            Some(partition) => OperatorExpr::block_direct_sum(self.weights.iter().map(each).collect(), partition),
        }
    }

    fn build(self, path: LemmaPath, cfg: &DeflationConfig, notes: Vec<String>) -> Result<DeflationResult> {
        let sigma = sigma_bilateral();
        let shifts: Vec<ShiftForm> = self.weights.iter().map(|w| ShiftForm::new(sigma.clone(), w.clone())).collect();
        let input = self.assemble(|w| OperatorExpr::diagonal(w.clone()));
        let unitary = self.assemble(|_| OperatorExpr::permutation(sigma.clone()));
        let deflated = match self.partition() {
            None => shifts[0].to_expr(),
            Some(partition) => OperatorExpr::block_direct_sum(shifts.iter().map(|s| s.to_expr()).collect(), partition),
        };
        let n = cfg.audit_window;
        let expected = if shifts.len() == 1 {
            shifts[0].truncate_exact(n)
        } else {
            deflated.truncate_exact(n)
        };
        let audit = audit_window(&unitary, &input, &expected, n);
        require_audit(&audit)?;

        let max_w = self.weights.iter().map(|w| max_weight(w, cfg.probe_window)).fold(0.0, f64::max);
        let grid = cfg.grid_for(max_w);
        let cells: Vec<Option<IndexSequence>> = match self.partition() {
            None => vec![None],
            Some(p) => p.into_iter().map(Some).collect(),
        };
        let mut shift_certificates = Vec::with_capacity(shifts.len());
        for ((shift, label), cell) in shifts.iter().zip(&self.labels).zip(&cells) {
            shift_certificates.push(CertifiedBlock {
                label: label.clone(),
                cell: cell.clone(),
                shift: shift.clone(),
                grid_certificates: certify_grid(shift, &grid, &cfg.params, cfg.exec)?,
            });
        }
        let zero_check = is_schauder_within(&deflated, cfg.probe_window)?;
        let spreads = decompose_into_spreads(&sigma, cfg.probe_window);
        let unitary_spreads = cells
            .into_iter()
            .map(|cell| BlockSpreads {
                cell,
                spreads: spreads.clone(),
            })
            .collect();
        Ok(DeflationResult {
            lemma_path: path,
            input,
            unitary,
            unitary_spreads,
            deflated,
            shift: (shifts.len() == 1).then(|| shifts[0].clone()),
            grid,
            shift_certificates,
            block_certificates: Vec::new(),
            block_model: None,
            zero_check,
            shields: None,
            audit,
            eigen_audit: None,
            notes,
        })
    }
}

/// `A = diag(t)` with `t` strictly decreasing to 0: `U′ = U_σ` turns `A`
/// into the bilateral shift `e_2 ↦ t_2 e_1`, `e_{2k} ↦ t_{2k} e_{2k−2}`,
/// `e_{2k−1} ↦ t_{2k−1} e_{2k+1}`.
pub fn deflate_basic(t: &SeqRule, cfg: &DeflationConfig) -> Result<DeflationResult> {
    check_vanishing(t, cfg.probe_window, true)?;
    ShiftLayout {
        labels: vec!["simple".into()],
        weights: vec![t.clone()],
    }
    .build(LemmaPath::Basic, cfg, Vec::new())
}

/// Eigenvalues accumulating only at 0. Finite multiplicities are repeated in
/// the simple part; each infinite-multiplicity value `t` keeps its own
/// block `t·U_σ` and lends one basis vector to the simple part.
pub fn deflate_discrete(m: &MultiplicityList, cfg: &DeflationConfig) -> Result<DeflationResult> {
    let ex = expand_multiplicities(m)?;
    let Some(tail) = ex.tail.clone() else {
        return Err(Error::PreconditionViolated(
            "eigenvalues do not accumulate at 0; use the finite-spectrum deflation".into(),
        ));
    };
    for v in ex.finite.iter().chain(&ex.infinite) {
        if !v.is_positive_real() {
            return Err(Error::PreconditionViolated(format!("eigenvalue {v} is not positive")));
        }
    }
    let simple_only = ex.infinite.is_empty() && ex.finite.windows(2).all(|p| p[0] != p[1]);
    let mut prefix = ex.finite.clone();
    prefix.extend(ex.infinite.iter().copied());
    prefix.sort_by(|a, b| b.cmp_abs(a));
    let simple = SeqRule::explicit(prefix, tail);
    if simple_only && check_vanishing(&simple, cfg.probe_window, true).is_ok() {
        return deflate_basic(&simple, cfg);
    }
    check_vanishing(&simple, cfg.probe_window, false)?;
    let mut labels = vec!["simple".to_string()];
    let mut weights = vec![simple];
    for v in &ex.infinite {
        labels.push(format!("eigenspace {v}"));
        weights.push(SeqRule::constant(*v));
    }
    let mut notes = Vec::new();
    if !ex.infinite.is_empty() {
        notes.push(format!(
            "one basis vector borrowed from each of {} infinite-multiplicity eigenspaces",
            ex.infinite.len()
        ));
    }
    ShiftLayout { labels, weights }.build(LemmaPath::Discrete, cfg, notes)
}

/// Finitely many distinct nonzero eigenvalues, at least one of infinite
/// multiplicity. The finite-multiplicity part is merged into the first
/// infinite eigenspace, whose σ-shift is then a finite perturbation of
/// `t₁·U_σ`.
pub fn deflate_finite_spectrum(m: &MultiplicityList, cfg: &DeflationConfig) -> Result<DeflationResult> {
    if m.tail.is_some() {
        return Err(Error::PreconditionViolated("spectrum is not finite".into()));
    }
    let ex = expand_multiplicities(m)?;
    finite_spectrum_core(ex.finite, &ex.infinite, cfg)
}

fn finite_spectrum_core(prefix: Vec<Scalar>, infinite: &[Scalar], cfg: &DeflationConfig) -> Result<DeflationResult> {
    if let Some(z) = prefix.iter().chain(infinite).find(|v| v.is_zero()) {
        return Err(Error::PreconditionViolated(format!(
            "eigenvalue {z} is zero; the range cannot be dense"
        )));
    }
    let Some((&designated, others)) = infinite.split_first() else {
        return Err(Error::PreconditionViolated(
            "no eigenvalue of infinite multiplicity".into(),
        ));
    };
    let merged = SeqRule::explicit(prefix, SeqRule::constant(designated));
    let verdict = shields_similar(&merged, &SeqRule::constant(designated), cfg.shields_horizon);
    if !verdict.is_bounded() {
        return Err(Error::PreconditionViolated(format!(
            "merged weights are not similar to the constant {designated}: {verdict:?}"
        )));
    }
    let mut labels = vec![format!("eigenspace {designated} with finite part")];
    let mut weights = vec![merged];
    for v in others {
        labels.push(format!("eigenspace {v}"));
        weights.push(SeqRule::constant(*v));
    }
    let notes = vec![format!(
        "σ-shift on the merged block is similar to {designated}·U_σ, which has no eigenvalues and neither has its adjoint"
    )];
    let mut out = ShiftLayout { labels, weights }.build(LemmaPath::FiniteSpectrum, cfg, notes)?;
    out.shields = Some(verdict);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BlockContinuousSpec {
    pub model: BlockNormModel,
    /// Dimension of the finite model standing in for each block.
    pub block_dim: u64,
}

pub const MAX_BLOCK_DIM: u64 = 64;

/// Entries of the diagonal block model at position `k` of every block:
/// `A_0` spreads over `[m, M]`, block `n ≥ 1` sits at `α_{2n−1}`, block
/// `n ≤ −1` at `α_{2|n|}`.
fn block_position_rule(model: &BlockNormModel, k: u64, dim: u64) -> SeqRule {
    let frac = if dim == 1 { 0.0 } else { (k - 1) as f64 / (dim - 1) as f64 };
    let a0 = Scalar::real(model.m + (model.big_m - model.m) * frac);
    let positive = SeqRule::explicit(vec![a0], SeqRule::subsampled(model.alpha_seq.clone(), 2, -1));
    let negative = SeqRule::subsampled(model.alpha_seq.clone(), 2, 0);
    SeqRule::bilateral(positive, negative)
}

/// `U e_k⁽ⁿ⁾ = e_k⁽ⁿ⁺¹⁾` on the block model; every `λ ≠ 0` of the grid, plus
/// the ring `|λ| = α`, gets direct and adjoint block-norm certificates.
pub fn deflate_block_continuous(spec: &BlockContinuousSpec, cfg: &DeflationConfig) -> Result<DeflationResult> {
    let model = &spec.model;
    model.validate()?;
    let d = spec.block_dim;
    if d == 0 || d > MAX_BLOCK_DIM {
        return Err(Error::InvalidInput(format!("block dimension must be in 1..={MAX_BLOCK_DIM}")));
    }
    let rules: Vec<SeqRule> = (1..=d).map(|k| block_position_rule(model, k, d)).collect();
    let assemble = |each: &dyn Fn(&SeqRule) -> OperatorExpr| {
        if d == 1 {
            each(&rules[0])
        } else {
            OperatorExpr::block_direct_sum(rules.iter().map(each).collect(), residue_partition(d as usize))
        }
    };
    let input = assemble(&|r| OperatorExpr::diagonal(r.clone()));
    let block_shift = Permutation::BlockBilateral { block_dim: d };
    let unitary = OperatorExpr::permutation(block_shift.clone());
    // inside each position cell the block shift is the ℤ-shift on block labels
    let deflated = assemble(&|r| ShiftForm::new(Permutation::ZShift { step: 1 }, r.clone()).to_expr());
    let n = cfg.audit_window;
    let audit = audit_window(&unitary, &input, &deflated.truncate_exact(n), n);
    require_audit(&audit)?;

    let top = model.big_m.max(1.5 * model.alpha);
    let grid = cfg.grid_for(top);
    let mut points = grid.points();
    let ring = grid.phases.max(1);
    points.extend((0..ring).map(|p| Complex64::from_polar(model.alpha, std::f64::consts::TAU * p as f64 / ring as f64)));
    let jobs: Vec<(Complex64, bool)> = points.iter().flat_map(|&l| [(l, false), (l, true)]).collect();
    let block_certificates = par::map(cfg.exec, &jobs, |&(l, adj)| block_norm_blowup(model, l, adj, &cfg.params))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let zero_check = is_schauder_within(&deflated, cfg.probe_window)?;
    let eig_n = n.min(crate::spectral::DENSE_EIGS_MAX_DIM);
    let trunc = deflated.truncate(eig_n);
    let scale = matrix_norm(&trunc).max(f64::MIN_POSITIVE);
    let pairs = dense_eigs(&trunc)?;
    let eigen_audit = EigenAudit {
        dimension: eig_n,
        max_relative_residual: pairs.iter().map(|p| p.residual / scale).fold(0.0, f64::max),
        spectral_radius: pairs.iter().map(|p| p.value.norm()).fold(0.0, f64::max),
        eigenvalues: pairs.iter().map(|p| p.value).collect(),
    };
    let (fwd, bwd) = covered_moduli(&block_certificates, model.alpha);
    let notes = vec![format!(
        "certificates cover 0 < |λ| ≤ {fwd:.6e}, |λ| = {}, and |λ| ≥ {bwd:.6e}",
        model.alpha
    )];
    Ok(DeflationResult {
        lemma_path: LemmaPath::BlockContinuous,
        input,
        unitary,
        unitary_spreads: vec![BlockSpreads {
            cell: None,
            spreads: decompose_into_spreads(&block_shift, cfg.probe_window),
        }],
        deflated,
        shift: None,
        grid,
        shift_certificates: Vec::new(),
        block_certificates,
        block_model: Some(model.clone()),
        zero_check,
        shields: None,
        audit,
        eigen_audit: Some(eigen_audit),
        notes,
    })
}

/// Forward-regime certificates also hold for every smaller `|λ|`, backward
/// ones for every larger `|λ|`.
fn covered_moduli(certs: &[EigenExclusionCertificate], alpha: f64) -> (f64, f64) {
    let direct = certs.iter().filter(|c| !c.adjoint);
    let mut below = 0.0f64;
    let mut above = f64::INFINITY;
    for c in direct {
        let r = c.lambda.norm();
        if r < alpha {
            below = below.max(r);
        } else if r > alpha {
            above = above.min(r);
        }
    }
    (below, above)
}

/// Full pipeline: `T = U_rec·|T|` by recognition, deflate `|T|`, and return
/// `W = U′·U_rec*` so that `W T = U′|T|`.
pub fn deflate(t: &OperatorExpr, cfg: &DeflationConfig) -> Result<DeflationResult> {
    let verdict = is_schauder_within(t, cfg.probe_window)?;
    if !verdict.schauder {
        return Err(Error::PreconditionViolated(format!(
            "not a Schauder operator: {:?} at index {}",
            verdict.failure.expect("failure set"),
            verdict.index.expect("index set")
        )));
    }
    let rec = recognize_shift_form(t, cfg.probe_window)
        .ok_or_else(|| Error::UnsupportedClass("operator is not a permutation-weighted diagonal".into()))?;
    let a = &rec.modulus;
    let mut sub = if a.limit().is_some_and(|l| l.is_zero()) {
        if check_vanishing(a, cfg.probe_window, true).is_ok() {
            deflate_basic(a, cfg)?
        } else if check_vanishing(a, cfg.probe_window, false).is_ok() {
            ShiftLayout {
                labels: vec!["simple".into()],
                weights: vec![a.clone()],
            }
            .build(LemmaPath::Discrete, cfg, vec!["repeated singular values kept in place".into()])?
        } else {
            return Err(Error::UnsupportedClass(
                "|T| is not monotone; no reordering unitary is constructed".into(),
            ));
        }
    } else if let Some((from, c)) = a.eventually_constant() {
        let prefix = (1..from).map(|k| a.value(k)).collect();
        let mut out = finite_spectrum_core(prefix, &[c], cfg)?;
        if from == 1 {
            out.notes.push("|T| is a multiple of the identity".into());
        }
        out
    } else {
        return Err(Error::UnsupportedClass(
            "|T| neither tends to 0 nor stabilizes".into(),
        ));
    };

    let n = cfg.audit_window;
    if sub.input.truncate_exact(n) != rec.diagonal.truncate_exact(n) {
        return Err(Error::UnsupportedClass(
            "deflation layout differs from |T|; no reordering unitary is constructed".into(),
        ));
    }
    let unitary = match &rec.unitary {
        OperatorExpr::PermutationUnitary { perm } if perm.is_identity() => sub.unitary.clone(),
        u => OperatorExpr::product(sub.unitary.clone(), OperatorExpr::adjoint(u.clone())),
    };
    let audit = audit_window(&unitary, t, &sub.deflated.truncate_exact(n), n);
    require_audit(&audit)?;
    sub.notes.insert(
        0,
        format!("recognized as permutation along {} times |T|", rec.shift.perm.description()),
    );
    sub.input = t.clone();
    sub.unitary = unitary;
    sub.audit = audit;
    Ok(sub)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index_maps::Multiplicity::{Finite, Infinite};
    use crate::spectral::{verify_block, verify_shift, Recurrence, Regime};

    fn harmonic() -> SeqRule {
        SeqRule::reciprocal(0)
    }

    fn quick() -> DeflationConfig {
        DeflationConfig {
            grid: Some(LambdaGrid::log_spaced(1e-2, 5.0, 4, 4)),
            ..DeflationConfig::default()
        }
    }

    #[test]
    fn schauder_verdicts() {
        assert!(is_schauder(&OperatorExpr::cibws()).unwrap().schauder);
        let v = is_schauder(&OperatorExpr::backward_unilateral_shift()).unwrap();
        assert_eq!((v.failure, v.index), (Some(SchauderFailure::NotInjective), Some(1)));
        let v = is_schauder(&OperatorExpr::forward_unilateral_shift()).unwrap();
        assert_eq!((v.failure, v.index), (Some(SchauderFailure::RangeNotDense), Some(1)));
        let d = OperatorExpr::diagonal(SeqRule::explicit(vec![Scalar::ONE, Scalar::ONE, Scalar::ZERO], harmonic()));
        let v = is_schauder(&d).unwrap();
        assert_eq!((v.failure, v.index), (Some(SchauderFailure::NotInjective), Some(3)));
    }

    #[test]
    fn two_entry_columns_are_unsupported() {
        let t = OperatorExpr::lambda_shift(Scalar::ONE, OperatorExpr::cibws());
        assert_eq!(is_schauder(&t).unwrap_err().kind(), "unsupported-class");
    }

    #[test]
    fn harmonic_diagonal_spectrum() {
        let r = schauder_spectrum(&OperatorExpr::diagonal(harmonic())).unwrap();
        assert_eq!(
            r.members,
            SpectrumMembers::SequenceWithLimitZero {
                rule: harmonic(),
                includes_zero: false
            }
        );
        assert_eq!(r.classification_case, Some(5));
        assert!(r.notes.iter().any(|n| n == SELF_ADJOINT_NOTE));
    }

    #[test]
    fn diagonal_with_zero_is_case_six() {
        let w = SeqRule::explicit(vec![Scalar::ZERO], harmonic());
        let r = schauder_spectrum(&OperatorExpr::diagonal(w)).unwrap();
        assert_eq!(r.classification_case, Some(6));
        assert!(r.per_member_reason.iter().any(|m| m.value.is_zero()));
    }

    #[test]
    fn eventually_constant_diagonals() {
        let w = SeqRule::explicit(vec![Scalar::int(2), Scalar::int(3), Scalar::int(2)], SeqRule::one());
        let r = schauder_spectrum(&OperatorExpr::diagonal(w)).unwrap();
        assert_eq!(r.members, SpectrumMembers::FiniteSet { values: vec![Scalar::int(3), Scalar::int(2), Scalar::ONE] });
        assert!(!r.compact);
        assert_eq!(r.classification_case, None);
        let finite_rank = SeqRule::explicit(vec![Scalar::ratio(1, 2)], SeqRule::constant(Scalar::ZERO));
        let r = schauder_spectrum(&OperatorExpr::diagonal(finite_rank)).unwrap();
        assert_eq!(r.classification_case, Some(4));
        let zero = schauder_spectrum(&OperatorExpr::scale(Scalar::ZERO, OperatorExpr::identity())).unwrap();
        assert_eq!(zero.classification_case, Some(2));
    }

    #[test]
    fn cibws_spectrum_is_empty() {
        let opts = SpectrumOptions {
            grid: Some(LambdaGrid::default_for(1.0)),
            ..SpectrumOptions::default()
        };
        let r = schauder_spectrum_with(&OperatorExpr::cibws(), &opts).unwrap();
        assert_eq!(r.members, SpectrumMembers::EmptySet);
        assert_eq!(r.classification_case, Some(1));
        assert_eq!(r.certified_grids.len(), 1);
    }

    #[test]
    fn one_plus_cibws_is_case_three() {
        let t = OperatorExpr::block_direct_sum(
            vec![OperatorExpr::identity(), OperatorExpr::cibws()],
            vec![
                IndexSequence::explicit(vec![1]),
                IndexSequence::Prefixed { prefix: vec![], start: 2, step: 1 },
            ],
        );
        let blocks_ok = is_schauder(&OperatorExpr::cibws()).unwrap().schauder;
        assert!(blocks_ok);
        let r = schauder_spectrum_with(&t, &SpectrumOptions { grid: Some(LambdaGrid::log_spaced(0.01, 2.0, 4, 4)), ..Default::default() }).unwrap();
        assert_eq!(r.members, SpectrumMembers::FiniteSet { values: vec![Scalar::ONE] });
        assert_eq!(r.classification_case, Some(3));
    }

    #[test]
    fn self_adjoint_continuous_is_empty() {
        let data = SelfAdjointSpectralData {
            eigenvalues: MultiplicityList::new(vec![]),
            continuous: vec![[1.0, 2.0]],
        };
        let r = schauder_spectrum_self_adjoint(&data).unwrap();
        assert_eq!(r.members, SpectrumMembers::EmptySet);
        assert!(!r.compact);
        assert!(r.notes.iter().any(|n| n == SELF_ADJOINT_NOTE));
    }

    #[test]
    fn classification_rejects_non_compact() {
        assert_eq!(classify_compact(&SpectrumMembers::EmptySet, false).unwrap_err(), Error::NotCompact);
    }

    #[test]
    fn basic_deflation_of_harmonic() {
        let r = deflate_basic(&harmonic(), &quick()).unwrap();
        assert_eq!(r.lemma_path, LemmaPath::Basic);
        assert_eq!(r.deflated.entry(1, 2), Scalar::ratio(1, 2));
        assert_eq!(r.deflated.entry(2, 4), Scalar::ratio(1, 4));
        assert_eq!(r.deflated.entry(5, 3), Scalar::ratio(1, 3));
        assert!(r.audit.passed && r.audit.exact);
        assert!(r.zero_check.schauder);
        assert_eq!(r.unitary_spreads[0].spreads.len(), 2);
        let block = &r.shift_certificates[0];
        assert_eq!(block.grid_certificates.len(), 16);
        for g in &block.grid_certificates {
            assert!(verify_shift(&g.direct, &block.shift) && verify_shift(&g.adjoint, &block.shift));
        }
        assert_eq!(r.spectrum_report().unwrap().classification_case, Some(1));
    }

    #[test]
    fn basic_rejects_constant_and_repeats() {
        let e = deflate_basic(&SeqRule::one(), &quick()).unwrap_err();
        assert_eq!(e.kind(), "precondition-violated");
        let rep = SeqRule::explicit(vec![Scalar::ONE, Scalar::ONE], SeqRule::reciprocal(1));
        assert!(deflate_basic(&rep, &quick()).is_err());
    }

    #[test]
    fn discrete_without_multiplicity_is_basic() {
        let m = MultiplicityList::new(vec![]).with_tail(harmonic());
        assert_eq!(deflate_discrete(&m, &quick()).unwrap().lemma_path, LemmaPath::Basic);
    }

    #[test]
    fn discrete_doubles_are_ordered() {
        let entries = (1..=5).map(|k| (Scalar::ratio(1, k), Finite(2))).collect();
        let m = MultiplicityList::new(entries).with_tail(SeqRule::reciprocal(5));
        let r = deflate_discrete(&m, &quick()).unwrap();
        assert_eq!(r.lemma_path, LemmaPath::Discrete);
        let d = r.input.truncate_exact(12);
        let diag: Vec<Scalar> = (0..12).map(|i| d[i * 12 + i]).collect();
        let oracle: Vec<Scalar> = [1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 7].iter().map(|&k| Scalar::ratio(1, k)).collect();
        assert_eq!(diag, oracle);
    }

    #[test]
    fn discrete_infinite_block_borrows() {
        let m = MultiplicityList::new(vec![(Scalar::ratio(1, 2), Infinite), (Scalar::ratio(1, 3), Finite(1))])
            .with_tail(SeqRule::reciprocal(3));
        let r = deflate_discrete(&m, &quick()).unwrap();
        assert_eq!(r.shift_certificates.len(), 2);
        assert!(r.notes.iter().any(|n| n.contains("borrowed")));
        // simple part: 1/2 (borrowed), 1/3, 1/4, …
        let simple = &r.shift_certificates[0].shift.weights;
        assert_eq!(simple.value(1), Scalar::ratio(1, 2));
        assert_eq!(simple.value(2), Scalar::ratio(1, 3));
        assert_eq!(simple.value(3), Scalar::ratio(1, 4));
        assert!(r.audit.passed);
        assert!(r.zero_check.schauder);
    }

    #[test]
    fn finite_spectrum_cases() {
        let r = deflate_finite_spectrum(&MultiplicityList::new(vec![(Scalar::ONE, Infinite)]), &quick()).unwrap();
        assert_eq!(r.shields, Some(ShieldsVerdict::BoundedCertified { lower: 1.0, upper: 1.0 }));
        let m = MultiplicityList::new(vec![(Scalar::ONE, Infinite), (Scalar::int(2), Finite(3))]);
        let r = deflate_finite_spectrum(&m, &quick()).unwrap();
        match r.shields {
            Some(ShieldsVerdict::BoundedCertified { lower, upper }) => {
                assert_eq!(lower, 1.0);
                assert!((upper - 8.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
        let bad = MultiplicityList::new(vec![(Scalar::ONE, Infinite), (Scalar::ZERO, Finite(1))]);
        assert_eq!(deflate_finite_spectrum(&bad, &quick()).unwrap_err().kind(), "precondition-violated");
    }

    fn block_spec() -> BlockContinuousSpec {
        let alpha = SeqRule::affine_geometric(Scalar::ONE, Scalar::int(-1), Scalar::ratio(1, 2));
        BlockContinuousSpec {
            model: BlockNormModel::new(alpha, 1.0, 0.1, 2.0),
            block_dim: 3,
        }
    }

    #[test]
    fn block_continuous_certificates() {
        let spec = block_spec();
        let r = deflate_block_continuous(&spec, &quick()).unwrap();
        assert!(r.audit.passed);
        assert!(r.zero_check.schauder);
        assert_eq!(r.block_certificates.len(), 2 * (16 + 4));
        assert!(r.block_certificates.iter().all(|c| verify_block(c, &spec.model)));
        assert!(r
            .block_certificates
            .iter()
            .any(|c| c.recurrence == Recurrence::BlockNorm { regime: Regime::Constancy }));
        let eig = r.eigen_audit.unwrap();
        assert!(eig.max_relative_residual <= 1e-8);
    }

    #[test]
    fn block_continuous_rejects_harmonic_gaps() {
        let mut spec = block_spec();
        spec.model.alpha_seq = SeqRule::AffineReciprocal { base: Scalar::ONE, coef: Scalar::int(-1), offset: 1 };
        assert_eq!(deflate_block_continuous(&spec, &quick()).unwrap_err().kind(), "precondition-violated");
    }

    #[test]
    fn deflate_dispatch() {
        let r = deflate(&OperatorExpr::diagonal(harmonic()), &quick()).unwrap();
        assert_eq!(r.lemma_path, LemmaPath::Basic);
        let r = deflate(&OperatorExpr::cibws(), &quick()).unwrap();
        assert_eq!(r.lemma_path, LemmaPath::Discrete);
        assert!(r.audit.passed && r.audit.exact);
        assert_eq!(r.spectrum_report().unwrap().members, SpectrumMembers::EmptySet);
        let e = deflate(&OperatorExpr::backward_unilateral_shift(), &quick()).unwrap_err();
        assert_eq!(e.kind(), "precondition-violated");
        let r = deflate(&OperatorExpr::identity(), &quick()).unwrap();
        assert_eq!(r.lemma_path, LemmaPath::FiniteSpectrum);
    }

    #[test]
    fn deflate_with_phases() {
        let w = SeqRule::product(harmonic(), SeqRule::constant(Scalar::complex(0.0, 1.0)));
        let t = OperatorExpr::product(OperatorExpr::permutation(sigma_bilateral()), OperatorExpr::diagonal(w));
        let r = deflate(&t, &quick()).unwrap();
        assert!(r.audit.passed && !r.audit.exact);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn members() -> impl Strategy<Value = SpectrumMembers> {
            let value = prop_oneof![Just(Scalar::ZERO), (1i128..20).prop_map(|k| Scalar::ratio(1, k))];
            prop_oneof![
                Just(SpectrumMembers::EmptySet),
                prop::collection::vec(value, 0..6).prop_map(|values| SpectrumMembers::FiniteSet { values }),
                any::<bool>().prop_map(|z| SpectrumMembers::SequenceWithLimitZero { rule: SeqRule::reciprocal(0), includes_zero: z }),
            ]
        }

        proptest! {
            #[test]
            fn classification_is_total_and_consistent(m in members()) {
                let case = classify_compact(&m, true).unwrap();
                prop_assert!((1..=6).contains(&case));
                prop_assert_eq!(case, classify_compact(&m, true).unwrap());
                prop_assert_eq!(matches!(case, 2 | 4 | 6), m.contains_zero());
                prop_assert_eq!(matches!(case, 5 | 6), matches!(m, SpectrumMembers::SequenceWithLimitZero { .. }));
            }

            #[test]
            fn diagonal_spectrum_matches_values(vals in prop::collection::vec(0i128..6, 1..8)) {
                let prefix: Vec<Scalar> = vals.iter().map(|&v| Scalar::int(v)).collect();
                let w = SeqRule::explicit(prefix.clone(), SeqRule::constant(Scalar::int(7)));
                let r = schauder_spectrum(&OperatorExpr::diagonal(w.clone())).unwrap();
                let SpectrumMembers::FiniteSet { values } = r.members else { panic!() };
                // brute force on a truncation: λ is a member iff min_k |λ − m_k| = 0
                for lambda in -1i128..9 {
                    let l = Scalar::int(lambda);
                    let hit = (1..=64).any(|k| (w.value(k) - l).is_zero());
                    prop_assert_eq!(values.contains(&l), hit);
                }
            }
        }
    }
}
