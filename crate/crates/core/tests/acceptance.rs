//! The eleven acceptance criteria, each with an oracle independent of the
//! library code path it checks. Prints one PASS/FAIL line per criterion,
//! then fails if any criterion failed or overran its time budget.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Ratio;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use schauder_core::index_maps::{decompose_into_spreads, sigma_bilateral, IndexSequence, Permutation};
use schauder_core::op_algebra::OperatorExpr;
use schauder_core::schauder::{
    classify_compact, deflate, deflate_basic, schauder_spectrum, DeflationConfig, SpectrumMembers,
};
use schauder_core::sequence::SeqRule;
use schauder_core::spectral::{
    block_norm_blowup, claim1_find_n, dense_eigs, shields_similar, verify_block, verify_shift, BlockNormModel,
    Direction, EigenExclusionCertificate, ExclusionParams, LambdaGrid, Recurrence, Regime, ShieldsVerdict,
};
use schauder_core::Scalar;

type Outcome = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn q(n: i128, d: i128) -> Scalar {
    Scalar::ratio(n, d)
}

// ── index oracles, written from the definitions ───────────────────────────

/// ℤ → ℕ: `j ≥ 0 ↦ 2j+1`, `j < 0 ↦ 2|j|`.
fn z_to_n(j: i64) -> u64 {
    if j >= 0 {
        2 * j as u64 + 1
    } else {
        2 * j.unsigned_abs()
    }
}

fn n_to_z(n: u64) -> i64 {
    if n % 2 == 1 {
        ((n - 1) / 2) as i64
    } else {
        -((n / 2) as i64)
    }
}

fn sigma(n: u64) -> u64 {
    match n {
        2 => 1,
        _ if n % 2 == 0 => n - 2,
        _ => n + 2,
    }
}

fn sigma_inv(n: u64) -> u64 {
    match n {
        1 => 2,
        _ if n % 2 == 0 => n + 2,
        _ => n - 2,
    }
}

// ── criteria ──────────────────────────────────────────────────────────────

fn c1_spread_identity() -> Outcome {
    let s = OperatorExpr::spread(IndexSequence::arithmetic(2, 1), IndexSequence::naturals());
    let got = s.truncate_exact(64);
    for i in 0..64 {
        for j in 0..64 {
            let want = if j == i + 1 { Scalar::ONE } else { Scalar::ZERO };
            ensure!(got[i * 64 + j] == want, "entry ({}, {}) is {}", i + 1, j + 1, got[i * 64 + j]);
        }
    }
    Ok(())
}

fn c2_spread_decomposition() -> Outcome {
    let n = 256usize;
    let spreads = decompose_into_spreads(&sigma_bilateral(), n as u64);
    ensure!(spreads.len() == 2, "expected 2 spreads, got {}", spreads.len());
    let sum = OperatorExpr::sum(spreads.into_iter().map(OperatorExpr::Spread).collect());
    let got = sum.truncate_exact(n);
    for col in 1..=n as u64 {
        for row in 1..=n as u64 {
            let want = if row == sigma(col) { Scalar::ONE } else { Scalar::ZERO };
            let at = got[(row as usize - 1) * n + col as usize - 1];
            ensure!(at == want, "entry ({row}, {col}) is {at}");
        }
    }
    Ok(())
}

fn c3_cibws_factorization() -> Outcome {
    let n = 100usize;
    // K e_j = w_j e_{j−1} on ℤ with w_j = 1/(1+|j|)
    let w = |j: i64| Ratio::new(1i128, 1 + j.abs() as i128);
    let mut oracle = vec![Scalar::ZERO; n * n];
    for col in 1..=n as u64 {
        let j = n_to_z(col);
        let row = z_to_n(j - 1);
        if row as usize <= n {
            oracle[(row as usize - 1) * n + col as usize - 1] = Scalar::Rational(w(j));
        }
    }
    let d_prefix: Vec<Scalar> = (1..=n as u64).map(|k| Scalar::Rational(w(n_to_z(k)))).collect();
    let d = OperatorExpr::diagonal(SeqRule::explicit(d_prefix, SeqRule::constant(Scalar::ZERO)));
    let s = OperatorExpr::permutation(Permutation::ZShift { step: -1 });
    let sd = OperatorExpr::product(s, d).truncate_exact(n);
    let k = OperatorExpr::cibws().truncate_exact(n);
    ensure!(k.iter().all(|z| z.is_exact()), "K truncation left rational arithmetic");
    ensure!(k == oracle, "K differs from the ℤ definition");
    ensure!(sd == oracle, "S·D differs from the ℤ definition");
    Ok(())
}

fn c4_diagonal_spectrum() -> Outcome {
    let harmonic = SeqRule::reciprocal(0);
    for k in 1..=50u64 {
        ensure!(harmonic.value(k) == q(1, k as i128), "rule is not 1/k at {k}");
    }
    let r = schauder_spectrum(&OperatorExpr::diagonal(harmonic.clone())).map_err(|e| e.to_string())?;
    ensure!(
        r.members
            == SpectrumMembers::SequenceWithLimitZero {
                rule: harmonic,
                includes_zero: false
            },
        "members {:?}",
        r.members
    );
    let case = classify_compact(&r.members, r.compact).map_err(|e| e.to_string())?;
    ensure!(case == 5, "case {case}");
    Ok(())
}

/// Log magnitudes of the four walks for `σ`-shifted `1/k`, in closed form.
fn harmonic_walk_oracle(r: f64, adjoint: bool) -> (u64, Direction, f64) {
    let ln_bound = 1e12f64.ln();
    let (mut fwd, mut bwd) = (0.0f64, 0.0f64);
    for k in 1u64.. {
        let odd = ((2 * k - 1) as f64).ln();
        let even = ((2 * k) as f64).ln();
        let (f, b) = if adjoint { (-even, odd) } else { (-odd, even) };
        fwd += f - r.ln();
        if fwd > ln_bound {
            return (k, Direction::Forward, fwd);
        }
        bwd += b + r.ln();
        if bwd > ln_bound {
            return (k, Direction::Backward, bwd);
        }
    }
    unreachable!()
}

fn check_harmonic_cert(c: &EigenExclusionCertificate) -> Outcome {
    let (k, dir, log) = harmonic_walk_oracle(c.lambda.norm(), c.adjoint);
    let Recurrence::ScalarShift { direction, floor: false } = c.recurrence else {
        return Err(format!("unexpected recurrence {:?}", c.recurrence));
    };
    ensure!(
        c.witness_index == k && direction == dir,
        "λ = {} adjoint {}: witness {} {:?}, oracle {k} {dir:?}",
        c.lambda,
        c.adjoint,
        c.witness_index,
        direction
    );
    ensure!(
        (c.log_magnitude - log).abs() <= 1e-12 * log.abs(),
        "log magnitude {} vs oracle {log}",
        c.log_magnitude
    );
    ensure!(c.attained_magnitude > 1e12, "magnitude {} not above bound", c.attained_magnitude);
    Ok(())
}

fn c5_basic_deflation() -> Outcome {
    let cfg = DeflationConfig::default();
    let r = deflate_basic(&SeqRule::reciprocal(0), &cfg).map_err(|e| e.to_string())?;
    ensure!(r.grid == LambdaGrid::log_spaced(1e-3, 10.0, 16, 8), "grid {:?}", r.grid);
    ensure!(r.grid.len() == 128, "{} grid points", r.grid.len());
    let block = &r.shift_certificates[0];
    ensure!(block.grid_certificates.len() == 128, "{} certified points", block.grid_certificates.len());
    for (g, lambda) in block.grid_certificates.iter().zip(r.grid.points()) {
        ensure!(g.lambda == lambda, "grid order");
        for c in [&g.direct, &g.adjoint] {
            ensure!(c.witness_index <= cfg.params.step_cap, "step cap");
            ensure!(verify_shift(c, &block.shift), "replay failed at λ = {}", c.lambda);
            check_harmonic_cert(c)?;
        }
    }
    Ok(())
}

fn c6_cibws_emptiness() -> Outcome {
    let k = OperatorExpr::cibws();
    let r = deflate(&k, &DeflationConfig::default()).map_err(|e| e.to_string())?;
    ensure!(r.audit.passed && r.audit.exact, "audit {:?}", r.audit);
    // oracle: U′|K| sends e_j to |w_j| e_{σ(j)}; every row i is hit from σ⁻¹(i),
    // so no column is empty (injective) and no row is missed (dense range)
    let n = 128usize;
    let m = r.deflated.truncate_exact(n);
    let modulus = |k: u64| q(1, 1 + n_to_z(k).abs() as i128);
    for j in 1..=n as u64 {
        for i in 1..=n as u64 {
            let want = if i == sigma(j) { modulus(j) } else { Scalar::ZERO };
            let at = m[(i as usize - 1) * n + j as usize - 1];
            ensure!(at == want, "deflated entry ({i}, {j}) is {at}, expected {want}");
        }
        ensure!(sigma(sigma_inv(j)) == j && !modulus(sigma_inv(j)).is_zero(), "row {j} is not reached");
    }
    ensure!(r.zero_check.schauder, "λ = 0 check {:?}", r.zero_check);
    let points = r.grid.len();
    for b in &r.shift_certificates {
        ensure!(b.grid_certificates.len() == points, "block {} covers {} points", b.label, b.grid_certificates.len());
        for g in &b.grid_certificates {
            ensure!(verify_shift(&g.direct, &b.shift) && verify_shift(&g.adjoint, &b.shift), "replay at {}", g.lambda);
        }
    }
    let report = r.spectrum_report().map_err(|e| e.to_string())?;
    ensure!(report.members == SpectrumMembers::EmptySet, "members {:?}", report.members);
    Ok(())
}

/// Extreme products `∏_{n∈Δ} α_n` over `Δ ⊆ [lo, lo+30]`, `|Δ| ≤ 10`, by
/// exhaustive depth-first multiplication; one thread per smallest element.
fn exhaustive_products(alpha: &[f64], lo: usize) -> (f64, f64, u64) {
    fn dfs(alpha: &[f64], from: usize, hi: usize, left: u32, acc: f64, out: &mut (f64, f64, u64)) {
        out.0 = out.0.min(acc);
        out.1 = out.1.max(acc);
        out.2 += 1;
        if left == 0 {
            return;
        }
        for n in from..=hi {
            dfs(alpha, n + 1, hi, left - 1, acc * alpha[n], out);
        }
    }
    let hi = lo + 30;
    let parts: Vec<(f64, f64, u64)> = std::thread::scope(|s| {
        let handles: Vec<_> = (lo..=hi)
            .map(|first| {
                s.spawn(move || {
                    let mut out = (f64::INFINITY, f64::NEG_INFINITY, 0);
                    dfs(alpha, first + 1, hi, 9, alpha[first], &mut out);
                    out
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    // the empty product
    parts.into_iter().fold((1.0, 1.0, 1), |a, p| (a.0.min(p.0), a.1.max(p.1), a.2 + p.2))
}

fn c7_product_tail_index() -> Outcome {
    let alpha = SeqRule::affine_geometric(Scalar::ONE, Scalar::int(-1), q(1, 2));
    let n = claim1_find_n(&alpha, 1.0, 0.01).map_err(|e| e.to_string())? as usize;
    let table: Vec<f64> = (0..=n + 31).map(|k| 1.0 - 0.5f64.powi(k as i32)).collect();
    let (lo, hi, count) = exhaustive_products(&table, n);
    let expected: u64 = (0..=10u64).map(|k| binomial(31, k)).sum();
    ensure!(count == expected, "visited {count} subsets, expected {expected}");
    ensure!(lo >= 0.99 && hi <= 1.01, "N = {n}: products span [{lo}, {hi}]");
    Ok(())
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn c8_shields() -> Outcome {
    let one = SeqRule::one();
    let geometric_gap = SeqRule::affine_geometric(Scalar::ONE, Scalar::int(-1), q(1, 2));
    let v = shields_similar(&geometric_gap, &one, 10_000);
    let (lower, upper) = match v {
        ShieldsVerdict::BoundedCertified { lower, upper } | ShieldsVerdict::BoundedNumerically { lower, upper } => {
            (lower, upper)
        }
        other => return Err(format!("1 − 2^-j: {other:?}")),
    };
    ensure!(0.0 < lower && lower <= upper && upper.is_finite(), "bounds [{lower}, {upper}]");
    // oracle: every window product of 1 − 2^-j lies in [∏_{j≥1}(1 − 2^-j), 1]
    let full: f64 = (1..200).map(|j| 1.0 - 0.5f64.powi(j)).product();
    ensure!(lower <= full * (1.0 + 1e-12) && upper >= 1.0 - 1e-12, "bounds miss the window products");

    let harmonic_gap = SeqRule::AffineReciprocal {
        base: Scalar::ONE,
        coef: Scalar::int(-1),
        offset: 0,
    };
    match shields_similar(&harmonic_gap, &one, 10_000) {
        ShieldsVerdict::UnboundedWitness { window: (a, b), value, .. } => {
            ensure!(value < 1e-6, "witness value {value}");
            ensure!(1 <= a && a <= b && b <= 10_000, "window ({a}, {b})");
            let direct: f64 = (a..=b).map(|j| 1.0 - 1.0 / j as f64).product();
            ensure!((direct - value).abs() <= 1e-12, "window product {direct} vs reported {value}");
        }
        other => return Err(format!("1 − 1/j: {other:?}")),
    }
    Ok(())
}

fn c9_block_regimes() -> Outcome {
    let alpha_n = |n: u64| 1.0 - 0.5f64.powi(n as i32);
    let alpha = SeqRule::affine_geometric(Scalar::ONE, Scalar::int(-1), q(1, 2));
    let model = BlockNormModel::new(alpha.clone(), 1.0, 0.1, 2.0);
    let params = ExclusionParams::default();
    let cert = |l: f64, adjoint| block_norm_blowup(&model, Complex64::new(l, 0.0), adjoint, &params);

    // forward at 0.5: ‖x⁽ᵏ⁾‖ ≥ m·∏_{i<k} α_{2i−1} / 0.5^k
    let f = cert(0.5, false).map_err(|e| e.to_string())?;
    ensure!(f.recurrence == Recurrence::BlockNorm { regime: Regime::Forward }, "0.5: {:?}", f.recurrence);
    let (mut k, mut prod) = (0u64, 1.0f64);
    while prod <= 1e12 {
        k += 1;
        prod *= if k == 1 { 0.1 } else { alpha_n(2 * k - 3) } / 0.5;
    }
    ensure!(f.witness_index == k, "forward witness {} vs oracle {k}", f.witness_index);
    ensure!((f.attained_magnitude - prod).abs() <= 1e-9 * prod, "forward magnitude");

    // backward at 2: ‖x⁽⁻ᵏ⁾‖ ≥ ∏ 2/(1 + 2^-i)
    let b = cert(2.0, false).map_err(|e| e.to_string())?;
    ensure!(b.recurrence == Recurrence::BlockNorm { regime: Regime::Backward }, "2: {:?}", b.recurrence);
    let (mut k, mut prod) = (0u64, 1.0f64);
    while prod <= 1e12 {
        k += 1;
        prod *= 2.0 / (1.0 + 0.5f64.powi(k as i32));
    }
    ensure!(b.witness_index == k, "backward witness {} vs oracle {k}", b.witness_index);
    ensure!((b.attained_magnitude - prod).abs() <= 1e-9 * prod, "backward magnitude");

    // |λ| = 1: floor m(1 − ε)∏_{k<N} α_{2k−1} with N from claim1_find_n
    let lambda = Complex64::from_polar(1.0, 0.7);
    let c = block_norm_blowup(&model, lambda, false, &params).map_err(|e| e.to_string())?;
    ensure!(c.recurrence == Recurrence::BlockNorm { regime: Regime::Constancy }, "|λ| = 1: {:?}", c.recurrence);
    let n = claim1_find_n(&alpha, 1.0, 0.01).map_err(|e| e.to_string())?;
    ensure!(c.witness_index == n, "constancy N {} vs {n}", c.witness_index);
    let floor = 0.1 * 0.99 * (1..n).map(|k| alpha_n(2 * k - 1)).product::<f64>();
    ensure!(floor > 0.0 && (c.attained_magnitude - floor).abs() <= 1e-12 * floor, "floor {} vs {floor}", c.attained_magnitude);

    for (l, adj) in [(0.5, true), (2.0, true)] {
        let a = cert(l, adj).map_err(|e| e.to_string())?;
        ensure!(verify_block(&a, &model), "adjoint replay at {l}");
    }
    for x in [&f, &b, &c] {
        ensure!(verify_block(x, &model), "replay at {}", x.lambda);
    }
    Ok(())
}

fn c10_eigensolver() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5c4a_d3e7);
    for trial in 0..100 {
        let n = 32;
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
            for j in i + 1..n {
                let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        let pairs = dense_eigs(&m).map_err(|e| e.to_string())?;
        ensure!(pairs.len() == n, "trial {trial}: {} eigenpairs", pairs.len());
        for p in &pairs {
            let r = (&m * &p.vector - p.vector.scale(1.0) * p.value).norm();
            ensure!(r <= 1e-8 && p.residual <= 1e-8, "trial {trial}: residual {r}");
            ensure!(p.value.im.abs() <= 1e-8, "trial {trial}: Hermitian eigenvalue {}", p.value);
        }
        let trace: Complex64 = (0..n).map(|i| m[(i, i)]).sum();
        let sum: Complex64 = pairs.iter().map(|p| p.value).sum();
        ensure!((trace - sum).norm() <= 1e-8, "trial {trial}: trace {trace} vs {sum}");
    }
    Ok(())
}

/// The six shapes as stated: empty, {0}, finite without 0, finite with 0,
/// sequence without 0, sequence with 0.
fn described_case(m: &SpectrumMembers) -> u8 {
    match m {
        SpectrumMembers::EmptySet => 1,
        SpectrumMembers::FiniteSet { values } => {
            let zero = values.iter().any(|v| v.is_zero());
            let nonzero = values.iter().any(|v| !v.is_zero());
            match (zero, nonzero) {
                (false, false) => 1,
                (true, false) => 2,
                (false, true) => 3,
                (true, true) => 4,
            }
        }
        SpectrumMembers::SequenceWithLimitZero { includes_zero, .. } => 5 + *includes_zero as u8,
    }
}

fn c11_classification_totality() -> Outcome {
    let value = prop_oneof![Just(Scalar::ZERO), (1i128..50).prop_map(|k| q(1, k)), (-5i64..5).prop_map(|k| Scalar::int(k as i128))];
    let rule = prop_oneof![
        Just(SeqRule::reciprocal(0)),
        (1u32..5).prop_map(|k| SeqRule::geometric(q(1, 1 << k))),
    ];
    let members = prop_oneof![
        Just(SpectrumMembers::EmptySet),
        prop::collection::vec(value, 0..8).prop_map(|values| SpectrumMembers::FiniteSet { values }),
        (rule, any::<bool>()).prop_map(|(rule, includes_zero)| SpectrumMembers::SequenceWithLimitZero { rule, includes_zero }),
    ];
    let mut runner = TestRunner::new(Config {
        cases: 2000,
        ..Config::default()
    });
    let mut seen = [false; 6];
    let seen_ref = std::cell::RefCell::new(&mut seen);
    runner
        .run(&members, |m| {
            let a = classify_compact(&m, true).expect("total on compact reports");
            let b = classify_compact(&m, true).expect("total on compact reports");
            prop_assert_eq!(a, b);
            prop_assert_eq!(a, described_case(&m));
            prop_assert!(classify_compact(&m, false).is_err());
            seen_ref.borrow_mut()[a as usize - 1] = true;
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    ensure!(seen.iter().all(|&s| s), "not every case was produced: {seen:?}");
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: [(&str, Duration, fn() -> Outcome); 11] = [
        ("spread identity", Duration::from_secs(1), c1_spread_identity),
        ("spread decomposition", Duration::from_secs(1), c2_spread_decomposition),
        ("CIBWS factorization", Duration::from_secs(2), c3_cibws_factorization),
        ("diagonal Schauder spectrum", Duration::from_secs(1), c4_diagonal_spectrum),
        ("basic deflation certificates", Duration::from_secs(30), c5_basic_deflation),
        ("CIBWS emptiness", Duration::from_secs(30), c6_cibws_emptiness),
        ("product-tail index, exhaustive subsets", Duration::from_secs(10), c7_product_tail_index),
        ("Shields boundedness", Duration::from_secs(5), c8_shields),
        ("block continuous regimes", Duration::from_secs(5), c9_block_regimes),
        ("eigensolver sanity", Duration::from_secs(10), c10_eigensolver),
        ("classification totality", Duration::from_secs(1), c11_classification_totality),
    ];
    let mut failed = Vec::new();
    // written to the raw stdout handle so the lines survive output capture
    let mut out = std::io::stdout().lock();
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let took = started.elapsed();
        let verdict = match result {
            Ok(()) if took <= *budget => Ok(()),
            Ok(()) => Err(format!("took {took:.2?}, budget {budget:?}")),
            Err(e) => Err(e),
        };
        match &verdict {
            Ok(()) => writeln!(out, "PASS {:>2} {name} ({took:.2?})", i + 1).unwrap(),
            Err(e) => {
                writeln!(out, "FAIL {:>2} {name} ({took:.2?}): {e}", i + 1).unwrap();
                failed.push(i + 1);
            }
        }
    }
    out.flush().unwrap();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
