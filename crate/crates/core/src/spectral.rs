//! Divergence certificates for eigenvector recurrences, infinite products,
//! similarity of weighted shifts, and a dense eigensolver for truncations.
//!
//! Every recurrence runs in log space; a certificate stores enough to be
//! replayed from scratch by the matching `replay_*` function.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::op_algebra::{OperatorExpr, ShiftForm};
use crate::par::{self, Execution};
use crate::scalar::Scalar;
use crate::sequence::{log_tail_from_deviation, SeqRule, TailSum};

/// Relative tolerance for certificate replay.
pub const REPLAY_RTOL: f64 = 1e-12;
/// `|λ|` and a limit modulus closer than this (relatively) are treated as equal.
pub const TIE_RTOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Along the column map: `m → perm(m)`.
    Forward,
    /// Against it: `m → perm⁻¹(m)`.
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Forward,
    Backward,
    Constancy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", rename_all_fields = "camelCase")]
pub enum Recurrence {
    /// `floor` certificates hold a constant lower bound on every later
    /// coordinate instead of a threshold crossing.
    ScalarShift { direction: Direction, floor: bool },
    BlockNorm { regime: Regime },
}

/// Proof that `λ` admits no ℓ² eigenvector: the recurrence started from a
/// unit coordinate reaches `attained_magnitude > bound` after
/// `witness_index` steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EigenExclusionCertificate {
    pub lambda: Complex64,
    pub witness_index: u64,
    /// Basis index reached by a scalar-shift walk.
    pub basis_index: Option<u64>,
    pub attained_magnitude: f64,
    pub log_magnitude: f64,
    pub bound: f64,
    pub recurrence: Recurrence,
    /// Certificate for the adjoint recurrence (dense range of `λI − T`).
    pub adjoint: bool,
}

impl EigenExclusionCertificate {
    pub fn is_consistent(&self) -> bool {
        self.attained_magnitude > self.bound
    }
}

fn replay_matches(cert: &EigenExclusionCertificate, log_magnitude: f64) -> bool {
    if cert.attained_magnitude.is_finite() {
        let again = log_magnitude.exp();
        (again - cert.attained_magnitude).abs() <= REPLAY_RTOL * cert.attained_magnitude.abs()
    } else {
        (log_magnitude - cert.log_magnitude).abs() <= REPLAY_RTOL * cert.log_magnitude.abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExclusionParams {
    pub bound: f64,
    pub step_cap: u64,
}

impl Default for ExclusionParams {
    fn default() -> Self {
        ExclusionParams {
            bound: 1e12,
            step_cap: 100_000,
        }
    }
}

fn check_params(lambda: Complex64, params: &ExclusionParams) -> Result<()> {
    if lambda.norm() == 0.0 || !lambda.norm().is_finite() {
        return Err(Error::PreconditionViolated(
            "λ must be nonzero and finite; λ = 0 is decided structurally".into(),
        ));
    }
    if !(params.bound > 0.0) || params.step_cap == 0 {
        return Err(Error::InvalidInput("bound must be positive and step cap at least 1".into()));
    }
    Ok(())
}

/// One step of the eigenvector recurrence `w(m) x_m = λ x_{perm(m)}`.
fn shift_step(s: &ShiftForm, at: u64, dir: Direction, ln_lambda: f64) -> Result<(u64, f64)> {
    let (next, src) = match dir {
        Direction::Forward => (s.perm.forward(at), at),
        Direction::Backward => {
            let p = s.perm.inverse(at);
            (p, p)
        }
    };
    let ln_w = s.weights.ln_abs(src);
    if !ln_w.is_finite() {
        return Err(Error::PreconditionViolated(format!("weight at index {src} is zero")));
    }
    let delta = match dir {
        Direction::Forward => ln_w - ln_lambda,
        Direction::Backward => ln_lambda - ln_w,
    };
    Ok((next, delta))
}

fn walk(s: &ShiftForm, dir: Direction, ln_lambda: f64, steps: u64) -> Result<(u64, f64)> {
    let (mut at, mut log) = (1u64, 0.0);
    for _ in 0..steps {
        let (next, d) = shift_step(s, at, dir, ln_lambda)?;
        at = next;
        log += d;
    }
    Ok((at, log))
}

fn require_single_orbit(s: &ShiftForm) -> Result<()> {
    if s.perm.is_single_bilateral_orbit() {
        Ok(())
    } else {
        Err(Error::PreconditionViolated(format!(
            "eigenvector recurrence needs a single bilateral orbit, got {}",
            s.perm.description()
        )))
    }
}

/// Excludes `λ` from `σ_p` of the shift by walking the unique orbit through
/// `e_1` in both directions from `x_1 = 1` until one side exceeds `bound`.
pub fn shift_eigen_exclude(
    s: &ShiftForm,
    lambda: Complex64,
    params: &ExclusionParams,
) -> Result<EigenExclusionCertificate> {
    check_params(lambda, params)?;
    require_single_orbit(s)?;
    let ln_lambda = lambda.norm().ln();
    if let Some(cert) = constancy_floor(s, lambda, ln_lambda, params)? {
        return Ok(cert);
    }
    let ln_bound = params.bound.ln();
    let mut fwd = (1u64, 0.0f64);
    let mut bwd = (1u64, 0.0f64);
    let mut best = f64::NEG_INFINITY;
    for k in 1..=params.step_cap {
        for (dir, state) in [(Direction::Forward, &mut fwd), (Direction::Backward, &mut bwd)] {
            let (next, d) = shift_step(s, state.0, dir, ln_lambda)?;
            state.0 = next;
            state.1 += d;
            best = best.max(state.1);
            if state.1 > ln_bound {
                return Ok(EigenExclusionCertificate {
                    lambda,
                    witness_index: k,
                    basis_index: Some(state.0),
                    attained_magnitude: state.1.exp(),
                    log_magnitude: state.1,
                    bound: params.bound,
                    recurrence: Recurrence::ScalarShift { direction: dir, floor: false },
                    adjoint: false,
                });
            }
        }
    }
    Err(Error::StepCapExceeded {
        cap: params.step_cap,
        best_log: best,
        log_bound: ln_bound,
    })
}

/// When the weights are eventually `c` and `|λ| = |c|`, every later forward
/// coordinate keeps the modulus reached once the orbit passes the constant
/// region, so `x ∉ ℓ²` unless that floor is zero.
fn constancy_floor(
    s: &ShiftForm,
    lambda: Complex64,
    ln_lambda: f64,
    params: &ExclusionParams,
) -> Result<Option<EigenExclusionCertificate>> {
    let Some((from, c)) = s.weights.eventually_constant() else {
        return Ok(None);
    };
    if c.is_zero() || (c.norm().ln() - ln_lambda).abs() > TIE_RTOL * ln_lambda.abs().max(1.0) {
        return Ok(None);
    }
    let (mut at, mut log) = (1u64, 0.0);
    for k in 1..=params.step_cap {
        let (next, d) = shift_step(s, at, Direction::Forward, ln_lambda)?;
        at = next;
        log += d;
        if at >= from {
            return Ok(Some(EigenExclusionCertificate {
                lambda,
                witness_index: k,
                basis_index: Some(at),
                attained_magnitude: log.exp(),
                log_magnitude: log,
                bound: 0.0,
                recurrence: Recurrence::ScalarShift {
                    direction: Direction::Forward,
                    floor: true,
                },
                adjoint: false,
            }));
        }
    }
    Ok(None)
}

/// Runs the exclusion for `T*` at `conj(λ)`; the result certifies that
/// `λI − T` has dense range.
pub fn adjoint_exclusion(
    s: &ShiftForm,
    lambda: Complex64,
    params: &ExclusionParams,
) -> Result<EigenExclusionCertificate> {
    let mut cert = shift_eigen_exclude(&s.adjoint(), lambda.conj(), params)?;
    cert.lambda = lambda;
    cert.adjoint = true;
    Ok(cert)
}

/// Recomputes a scalar-shift certificate's magnitude from `x_1 = 1`.
pub fn replay_shift(cert: &EigenExclusionCertificate, s: &ShiftForm) -> Result<f64> {
    let Recurrence::ScalarShift { direction, .. } = cert.recurrence else {
        return Err(Error::InvalidInput("not a scalar-shift certificate".into()));
    };
    let (form, lambda) = if cert.adjoint {
        (s.adjoint(), cert.lambda.conj())
    } else {
        (s.clone(), cert.lambda)
    };
    let (_, log) = walk(&form, direction, lambda.norm().ln(), cert.witness_index)?;
    Ok(log.exp())
}

pub fn verify_shift(cert: &EigenExclusionCertificate, s: &ShiftForm) -> bool {
    let Recurrence::ScalarShift { direction, .. } = cert.recurrence else {
        return false;
    };
    let (form, lambda) = if cert.adjoint {
        (s.adjoint(), cert.lambda.conj())
    } else {
        (s.clone(), cert.lambda)
    };
    match walk(&form, direction, lambda.norm().ln(), cert.witness_index) {
        Ok((_, log)) => cert.is_consistent() && replay_matches(cert, log),
        Err(_) => false,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KernelVerdict {
    pub trivial: bool,
    pub zero_weight_at: Option<u64>,
}

/// `ker T = {0}` for a shift form iff no weight vanishes; the column map
/// is a bijection by construction. Probes `1..=window`.
pub fn kernel_trivial(s: &ShiftForm, window: u64) -> KernelVerdict {
    let zero = s.first_zero_weight(window);
    KernelVerdict {
        trivial: zero.is_none(),
        zero_weight_at: zero,
    }
}

/// λ values `r·e^{2πik/phases}`, moduli-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LambdaGrid {
    pub moduli: Vec<f64>,
    pub phases: u32,
}

impl LambdaGrid {
    pub fn log_spaced(lo: f64, hi: f64, n_moduli: usize, phases: u32) -> Self {
        let moduli = match n_moduli {
            0 => Vec::new(),
            1 => vec![lo],
            n => {
                let (a, b) = (lo.ln(), hi.ln());
                (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
            }
        };
        LambdaGrid { moduli, phases }
    }

    /// 16 moduli in `[10⁻³, 10·max_weight]` × 8 phases.
    pub fn default_for(max_weight: f64) -> Self {
        LambdaGrid::log_spaced(1e-3, 10.0 * max_weight, 16, 8)
    }

    pub fn points(&self) -> Vec<Complex64> {
        self.moduli
            .iter()
            .flat_map(|&r| (0..self.phases).map(move |p| Complex64::from_polar(r, TAU * p as f64 / self.phases as f64)))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.moduli.len() * self.phases as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCertificates {
    pub lambda: Complex64,
    pub direct: EigenExclusionCertificate,
    pub adjoint: EigenExclusionCertificate,
}

/// Direct and adjoint certificates for every grid point, in grid order.
/// Fails with the first error in grid order.
pub fn certify_grid(
    s: &ShiftForm,
    grid: &LambdaGrid,
    params: &ExclusionParams,
    exec: Execution,
) -> Result<Vec<GridCertificates>> {
    let adj = s.adjoint();
    let results = par::map(exec, &grid.points(), |&lambda| -> Result<GridCertificates> {
        let direct = shift_eigen_exclude(s, lambda, params)?;
        let mut adjoint = shift_eigen_exclude(&adj, lambda.conj(), params)?;
        adjoint.lambda = lambda;
        adjoint.adjoint = true;
        Ok(GridCertificates { lambda, direct, adjoint })
    });
    results.into_iter().collect()
}

/// Smallest `n ≥ 1` with `pred(n)`, for `pred` monotone in `n`.
fn first_index_where(cap: u64, pred: impl Fn(u64) -> bool) -> Option<u64> {
    let mut hi = 1u64;
    while !pred(hi) {
        if hi >= cap {
            return None;
        }
        hi = (hi * 2).min(cap);
    }
    let mut lo = hi / 2;
    // pred(lo) is false or lo == 0
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProductEstimate {
    pub convergent: bool,
    pub limit_estimate: f64,
    /// Bound on `|ln|` of all factors not multiplied in.
    pub tail_bound: f64,
    pub terms_used: u64,
}

const PRODUCT_TERM_CAP: u64 = 50_000_000;
const DIVERGENT_SAMPLE: u64 = 10_000;

/// `∏_{j≥1} (t₀ − a_j)/t₀` with a rule-derived tail bound.
pub fn infinite_product(a: &SeqRule, t0: f64, tol: f64) -> Result<ProductEstimate> {
    if t0 == 0.0 || !t0.is_finite() {
        return Err(Error::PreconditionViolated("t₀ must be nonzero".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let log_partial = |terms: u64| -> Result<f64> {
        let mut acc = 0.0;
        for j in 1..=terms {
            let f = 1.0 - a.value(j).re() / t0;
            if f < 0.0 {
                return Err(Error::PreconditionViolated(format!("a_{j}/t₀ exceeds 1")));
            }
            acc += f.ln();
        }
        Ok(acc)
    };
    let vanishes = a.limit().is_some_and(|l| l.is_zero());
    let tail = if vanishes { a.tail_deviation(1) } else { TailSum::Divergent };
    match tail {
        TailSum::Divergent => Ok(ProductEstimate {
            convergent: false,
            limit_estimate: log_partial(DIVERGENT_SAMPLE)?.exp(),
            tail_bound: f64::INFINITY,
            terms_used: DIVERGENT_SAMPLE,
        }),
        TailSum::Unknown => Err(Error::UnknownTail {
            numeric_estimate: log_partial(DIVERGENT_SAMPLE)?.exp(),
            terms_used: DIVERGENT_SAMPLE,
        }),
        TailSum::Bounded(_) => {
            let tail_log = |n: u64| match a.tail_deviation(n) {
                TailSum::Bounded(s) => log_tail_from_deviation(s / t0.abs()),
                _ => None,
            };
            let n = first_index_where(PRODUCT_TERM_CAP, |n| tail_log(n).is_some_and(|t| t <= tol))
                .ok_or_else(|| Error::ConvergenceFailure(format!("tail not below {tol} within {PRODUCT_TERM_CAP} terms")))?;
            let terms = n - 1;
            Ok(ProductEstimate {
                convergent: true,
                limit_estimate: log_partial(terms)?.exp(),
                tail_bound: tail_log(n).unwrap_or(0.0),
                terms_used: terms,
            })
        }
    }
}

const CLAIM1_CAP: u64 = 1 << 40;

/// Smallest `N` whose certified tail `Σ_{n≥N} |ln(α_n/α)|` is at most
/// `min(ln(1+ε), −ln(1−ε))`. Every finite `Δ ⊆ [N, ∞)` then has
/// `(1−ε)α^|Δ| ≤ ∏_{n∈Δ} α_n ≤ (1+ε)α^|Δ|`.
pub fn claim1_find_n(alpha_seq: &SeqRule, alpha: f64, epsilon: f64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::PreconditionViolated("ε must lie in (0, 1)".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::PreconditionViolated("α must be positive".into()));
    }
    match alpha_seq.limit() {
        Some(l) if l.approx_eq(&Scalar::real(alpha), 1e-12 * alpha) => {}
        _ => {
            return Err(Error::PreconditionViolated(format!(
                "sequence does not converge to α = {alpha}"
            )))
        }
    }
    let target = (1.0 + epsilon).ln().min(-(1.0 - epsilon).ln());
    let tail_log = |n: u64| match alpha_seq.tail_deviation(n) {
        TailSum::Bounded(s) => Ok(log_tail_from_deviation(s / alpha)),
        TailSum::Divergent => Err(Error::NotSummable(
            "Σ|1 − α_n/α| diverges".into(),
        )),
        TailSum::Unknown => Err(Error::UnknownTail {
            numeric_estimate: f64::NAN,
            terms_used: 0,
        }),
    };
    tail_log(1)?;
    first_index_where(CLAIM1_CAP, |n| matches!(tail_log(n), Ok(Some(t)) if t <= target))
        .ok_or_else(|| Error::NotSummable(format!("tail never drops below {target}")))
}

/// Windowed ratio products `∏_{j=k}^{k+l} |w_j/v_j|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case", rename_all_fields = "camelCase")]
pub enum ShieldsVerdict {
    BoundedCertified { lower: f64, upper: f64 },
    BoundedNumerically { lower: f64, upper: f64 },
    /// `window` is the extremal `[first, last]`; `certified` when the rule
    /// tails prove unboundedness rather than the numeric threshold.
    UnboundedWitness { window: (u64, u64), value: f64, certified: bool },
}

impl ShieldsVerdict {
    pub fn is_bounded(&self) -> bool {
        !matches!(self, ShieldsVerdict::UnboundedWitness { .. })
    }
}

/// Thresholds for a numeric unbounded verdict.
pub const SHIELDS_LOW: f64 = 1e-6;
pub const SHIELDS_HIGH: f64 = 1e6;

#[derive(Clone, Copy, Debug)]
struct WindowExtremes {
    max_rise: f64,
    max_window: (u64, u64),
    min_rise: f64,
    min_window: (u64, u64),
}

/// Extremes of `P_b − P_a` over `0 ≤ a < b ≤ horizon`, `P` the prefix log sums.
fn window_extremes(w: &SeqRule, v: &SeqRule, horizon: u64) -> std::result::Result<WindowExtremes, u64> {
    let mut prefix = 0.0;
    let (mut lo_p, mut lo_at) = (0.0f64, 0u64);
    let (mut hi_p, mut hi_at) = (0.0f64, 0u64);
    let mut ext = WindowExtremes {
        max_rise: f64::NEG_INFINITY,
        max_window: (1, 1),
        min_rise: f64::INFINITY,
        min_window: (1, 1),
    };
    for j in 1..=horizon {
        let lw = w.ln_abs(j);
        if !lw.is_finite() {
            return Err(j);
        }
        prefix += lw - v.ln_abs(j);
        if prefix - lo_p > ext.max_rise {
            ext.max_rise = prefix - lo_p;
            ext.max_window = (lo_at + 1, j);
        }
        if prefix - hi_p < ext.min_rise {
            ext.min_rise = prefix - hi_p;
            ext.min_window = (hi_at + 1, j);
        }
        if prefix < lo_p {
            lo_p = prefix;
            lo_at = j;
        }
        if prefix > hi_p {
            hi_p = prefix;
            hi_at = j;
        }
    }
    Ok(ext)
}

enum TailVerdict {
    Summable(f64),
    Divergent,
    Unknown,
}

/// Bound on `Σ_{j≥n} |ln|w_j/v_j||` when both rules share a nonzero limit.
fn ratio_tail(w: &SeqRule, v: &SeqRule, n: u64) -> TailVerdict {
    let (Some(lw), Some(lv)) = (w.limit(), v.limit()) else {
        return TailVerdict::Unknown;
    };
    if lw.is_zero() || lv.is_zero() {
        return TailVerdict::Unknown;
    }
    if (lw.norm() - lv.norm()).abs() > TIE_RTOL * lv.norm() {
        return TailVerdict::Divergent;
    }
    let rel = |r: &SeqRule, l: Scalar| match r.tail_deviation(n) {
        TailSum::Bounded(s) => Ok(log_tail_from_deviation(s / l.norm())),
        TailSum::Divergent => Err(true),
        TailSum::Unknown => Err(false),
    };
    match (rel(w, lw), rel(v, lv)) {
        (Ok(Some(a)), Ok(Some(b))) => TailVerdict::Summable(a + b),
        (Ok(Some(_)), Err(true)) | (Err(true), Ok(Some(_))) => TailVerdict::Divergent,
        _ => TailVerdict::Unknown,
    }
}

/// Boundedness of all windowed weight-ratio products, the similarity
/// criterion for injective weighted shifts.
pub fn shields_similar(w: &SeqRule, v: &SeqRule, horizon: u64) -> ShieldsVerdict {
    if w == v {
        return ShieldsVerdict::BoundedCertified { lower: 1.0, upper: 1.0 };
    }
    let ext = match window_extremes(w, v, horizon.max(1)) {
        Ok(e) => e,
        Err(j) => {
            return ShieldsVerdict::UnboundedWitness {
                window: (j, j),
                value: 0.0,
                certified: true,
            }
        }
    };
    let extremal = || {
        if ext.max_rise.abs() >= ext.min_rise.abs() {
            (ext.max_window, ext.max_rise.exp())
        } else {
            (ext.min_window, ext.min_rise.exp())
        }
    };
    match ratio_tail(w, v, horizon.max(1) + 1) {
        TailVerdict::Summable(t) => {
            return ShieldsVerdict::BoundedCertified {
                lower: (ext.min_rise.min(0.0) - t).exp(),
                upper: (ext.max_rise.max(0.0) + t).exp(),
            }
        }
        TailVerdict::Divergent => {
            let (window, value) = extremal();
            return ShieldsVerdict::UnboundedWitness {
                window,
                value,
                certified: true,
            };
        }
        TailVerdict::Unknown => {}
    }
    let (lower, upper) = (ext.min_rise.exp(), ext.max_rise.exp());
    if lower < SHIELDS_LOW {
        ShieldsVerdict::UnboundedWitness {
            window: ext.min_window,
            value: lower,
            certified: false,
        }
    } else if upper > SHIELDS_HIGH {
        ShieldsVerdict::UnboundedWitness {
            window: ext.max_window,
            value: upper,
            certified: false,
        }
    } else {
        ShieldsVerdict::BoundedNumerically { lower, upper }
    }
}

/// `T e_j = w_j e_{j−1}`, `T e_1 = 0`.
pub fn weighted_backward_shift(w: SeqRule) -> OperatorExpr {
    OperatorExpr::product(OperatorExpr::backward_unilateral_shift(), OperatorExpr::diagonal(w))
}

/// `X = diag(∏_{j≤n} w_j/v_j)`, which satisfies
/// `X · weighted_backward_shift(w) · X⁻¹ = weighted_backward_shift(v)`.
pub fn similarity_diagonal(w: &SeqRule, v: &SeqRule, horizon: u64) -> Result<OperatorExpr> {
    match shields_similar(w, v, horizon) {
        ShieldsVerdict::UnboundedWitness { window, value, .. } => Err(Error::NotSimilar(format!(
            "window [{}, {}] has ratio product {value:e}",
            window.0, window.1
        ))),
        _ => Ok(OperatorExpr::diagonal(SeqRule::cumulative_ratio(w.clone(), v.clone()))),
    }
}

/// Norm data of a block operator `A = ⊕_{n∈ℤ} A_n` shifted by the block
/// bilateral shift: `‖A_0 x‖ ∈ [m, M]·‖x‖`; the block at `n ≥ 1` is bounded
/// below by `α_{2n−1}` and the block at `n ≤ −1` by `α_{2|n|}`, with upper
/// norms `α(1 + 2^{−|n|})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BlockNormModel {
    pub alpha_seq: SeqRule,
    pub alpha: f64,
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

pub fn default_epsilon() -> f64 {
    0.01
}

/// Window over which `α_n` is checked against its interval.
pub const ALPHA_PROBE: u64 = 256;

impl BlockNormModel {
    pub fn new(alpha_seq: SeqRule, alpha: f64, m: f64, big_m: f64) -> Self {
        BlockNormModel {
            alpha_seq,
            alpha,
            m,
            big_m,
            epsilon: default_epsilon(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0 && self.m <= self.big_m && self.big_m.is_finite()) {
            return Err(Error::PreconditionViolated("need 0 < m ≤ M < ∞".into()));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::PreconditionViolated("α must be positive".into()));
        }
        let slack = 1e-12 * self.alpha;
        for n in 1..=ALPHA_PROBE {
            let a = self.alpha_seq.value(n);
            let low = self.alpha * (1.0 - 0.5f64.powi(n as i32));
            if !a.is_real() || a.re() > self.alpha + slack || a.re() < low - slack || a.re() <= 0.0 {
                return Err(Error::PreconditionViolated(format!(
                    "α_{n} = {a} outside [α(1 − 2^-{n}), α]"
                )));
            }
        }
        claim1_find_n(&self.alpha_seq, self.alpha, self.epsilon).map_err(|e| match e {
            Error::NotSummable(s) => Error::PreconditionViolated(format!("α gaps not summable: {s}")),
            other => other,
        })?;
        Ok(())
    }

    fn ln_alpha_at(&self, n: u64) -> f64 {
        self.alpha_seq.ln_abs(n)
    }

    fn ln_upper(&self, k: u64) -> f64 {
        self.alpha.ln() + (0.5f64.powi(k as i32)).ln_1p()
    }

    /// Log increment of step `k ≥ 1` of the chosen regime.
    fn step(&self, regime: Regime, adjoint: bool, k: u64, ln_lambda: f64) -> f64 {
        match (regime, adjoint) {
            // ‖x⁽ᵏ⁾‖ ≥ ‖A_{k−1}‖_low/|λ| ‖x⁽ᵏ⁻¹⁾‖
            (Regime::Forward, false) => {
                let low = if k == 1 { self.m.ln() } else { self.ln_alpha_at(2 * (k - 1) - 1) };
                low - ln_lambda
            }
            // ‖x⁽⁻ᵏ⁾‖ ≥ |λ|/‖A_{−k}‖ ‖x⁽⁻ᵏ⁺¹⁾‖
            (Regime::Backward, false) => ln_lambda - self.ln_upper(k),
            (Regime::Forward, true) => {
                let up = if k == 1 { self.big_m.ln() } else { self.ln_upper(k - 1) };
                ln_lambda - up
            }
            (Regime::Backward, true) => self.ln_alpha_at(2 * k) - ln_lambda,
            (Regime::Constancy, _) => 0.0,
        }
    }

    fn regime_for(&self, lambda: Complex64, adjoint: bool) -> Regime {
        let r = lambda.norm();
        if (r - self.alpha).abs() <= TIE_RTOL * self.alpha {
            Regime::Constancy
        } else if (r < self.alpha) != adjoint {
            Regime::Forward
        } else {
            Regime::Backward
        }
    }

    /// `ln` of the constant lower bound valid for every block beyond `N`.
    fn ln_floor(&self, n: u64, ln_lambda: f64, adjoint: bool) -> f64 {
        let eps = (1.0 - self.epsilon).ln();
        if adjoint {
            eps - (n - 1) as f64 * ln_lambda + (1..n).map(|k| self.ln_alpha_at(2 * k)).sum::<f64>()
        } else {
            self.m.ln() + eps - n as f64 * ln_lambda + (1..n).map(|k| self.ln_alpha_at(2 * k - 1)).sum::<f64>()
        }
    }

    fn run(&self, regime: Regime, adjoint: bool, ln_lambda: f64, steps: u64) -> f64 {
        (1..=steps).map(|k| self.step(regime, adjoint, k, ln_lambda)).sum()
    }
}

/// Excludes `λ` from `σ_p(UA)` (or `σ_p(AU*)` when `adjoint`) for the block
/// model. The regime follows `|λ|` against `α`.
pub fn block_norm_blowup(
    model: &BlockNormModel,
    lambda: Complex64,
    adjoint: bool,
    params: &ExclusionParams,
) -> Result<EigenExclusionCertificate> {
    check_params(lambda, params)?;
    model.validate()?;
    let ln_lambda = lambda.norm().ln();
    let regime = model.regime_for(lambda, adjoint);
    let cert = |k: u64, log: f64, bound: f64| EigenExclusionCertificate {
        lambda,
        witness_index: k,
        basis_index: None,
        attained_magnitude: log.exp(),
        log_magnitude: log,
        bound,
        recurrence: Recurrence::BlockNorm { regime },
        adjoint,
    };
    if regime == Regime::Constancy {
        let n = claim1_find_n(&model.alpha_seq, model.alpha, model.epsilon)?;
        return Ok(cert(n, model.ln_floor(n, ln_lambda, adjoint), 0.0));
    }
    let ln_bound = params.bound.ln();
    let mut log = 0.0;
    let mut best = f64::NEG_INFINITY;
    for k in 1..=params.step_cap {
        log += model.step(regime, adjoint, k, ln_lambda);
        best = best.max(log);
        if log > ln_bound {
            return Ok(cert(k, log, params.bound));
        }
    }
    Err(Error::StepCapExceeded {
        cap: params.step_cap,
        best_log: best,
        log_bound: ln_bound,
    })
}

pub fn replay_block(cert: &EigenExclusionCertificate, model: &BlockNormModel) -> Result<f64> {
    let Recurrence::BlockNorm { regime } = cert.recurrence else {
        return Err(Error::InvalidInput("not a block-norm certificate".into()));
    };
    let ln_lambda = cert.lambda.norm().ln();
    let log = match regime {
        Regime::Constancy => model.ln_floor(cert.witness_index, ln_lambda, cert.adjoint),
        r => model.run(r, cert.adjoint, ln_lambda, cert.witness_index),
    };
    Ok(log.exp())
}

pub fn verify_block(cert: &EigenExclusionCertificate, model: &BlockNormModel) -> bool {
    let Recurrence::BlockNorm { regime } = cert.recurrence else {
        return false;
    };
    let ln_lambda = cert.lambda.norm().ln();
    let log = match regime {
        Regime::Constancy => model.ln_floor(cert.witness_index, ln_lambda, cert.adjoint),
        r => model.run(r, cert.adjoint, ln_lambda, cert.witness_index),
    };
    cert.is_consistent() && replay_matches(cert, log)
}

pub const DENSE_EIGS_MAX_DIM: usize = 512;
const SCHUR_MAX_ITER: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub value: Complex64,
    /// Unit-norm eigenvector.
    pub vector: DVector<Complex64>,
    /// `‖Mx − λx‖` for the returned unit `x`.
    pub residual: f64,
}

/// Frobenius norm, used as the scale for residual tolerances.
pub fn matrix_norm(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenpairs via complex Schur form `M = Q T Q*`; eigenvectors of `T` by
/// back substitution, with near-zero pivots clamped to `ε‖M‖`.
pub fn dense_eigs(m: &DMatrix<Complex64>) -> Result<Vec<EigenPair>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidInput(format!("matrix is {}×{}", n, m.ncols())));
    }
    if n > DENSE_EIGS_MAX_DIM {
        return Err(Error::InvalidInput(format!(
            "dimension {n} exceeds {DENSE_EIGS_MAX_DIM}"
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let scale = matrix_norm(m);
    let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::ConvergenceFailure(format!("Schur iteration did not converge in {SCHUR_MAX_ITER} steps")))?;
    let (q, t) = schur.unpack();
    let smin = (f64::EPSILON * scale).max(f64::MIN_POSITIVE);
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = DVector::<Complex64>::zeros(n);
        y[k] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let s: Complex64 = ((i + 1)..=k).map(|j| t[(i, j)] * y[j]).sum();
            let mut d = t[(i, i)] - lambda;
            if d.norm() < smin {
                d = Complex64::new(smin, 0.0);
            }
            y[i] = -s / d;
        }
        let mut x = &q * y;
        let nx = x.norm();
        x /= Complex64::new(nx, 0.0);
        let residual = (m * &x - &x * lambda).norm();
        pairs.push(EigenPair { value: lambda, vector: x, residual });
    }
    Ok(pairs)
}

pub fn dense_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    Ok(dense_eigs(m)?.into_iter().map(|p| p.value).collect())
}
