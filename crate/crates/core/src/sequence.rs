//! Sequence rules `k ↦ s(k)` for `k ≥ 1`: closed-form families that carry
//! their own limit and tail-sum bounds, plus combinators.

use serde::{Deserialize, Serialize};

use crate::index_maps::{deinterleave, Permutation};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", rename_all_fields = "camelCase")]
pub enum SeqRule {
    Constant {
        value: Scalar,
    },
    /// `base + coef · ratio^k`
    AffineGeometric {
        base: Scalar,
        coef: Scalar,
        ratio: Scalar,
    },
    /// `base + coef / (k + offset)`
    AffineReciprocal {
        base: Scalar,
        coef: Scalar,
        #[serde(default)]
        offset: i64,
    },
    /// `base + coef · k^(−power)`, floating point.
    AffinePower {
        base: f64,
        coef: f64,
        power: f64,
    },
    /// `prefix[k−1]` for `k ≤ prefix.len()`, then `tail(k − prefix.len())`.
    Explicit {
        prefix: Vec<Scalar>,
        tail: Box<SeqRule>,
    },
    /// `inner(k + by)`
    Shifted {
        inner: Box<SeqRule>,
        by: i64,
    },
    /// `inner(stride·k + offset)`
    Subsampled {
        inner: Box<SeqRule>,
        stride: u64,
        #[serde(default)]
        offset: i64,
    },
    /// A ℤ-indexed sequence pulled back to ℕ through the interleave: odd
    /// `n = 2j+1` reads `nonneg(j+1)`, even `n = 2j` reads `negative(j)`.
    Bilateral {
        nonneg: Box<SeqRule>,
        negative: Box<SeqRule>,
    },
    /// `inner(perm(k))`
    Permuted {
        inner: Box<SeqRule>,
        perm: Permutation,
    },
    Product {
        left: Box<SeqRule>,
        right: Box<SeqRule>,
    },
    Scaled {
        by: Scalar,
        inner: Box<SeqRule>,
    },
    Conj {
        inner: Box<SeqRule>,
    },
    Abs {
        inner: Box<SeqRule>,
    },
    Phase {
        inner: Box<SeqRule>,
    },
    /// `∏_{j ≤ k} num(j) / den(j)`
    CumulativeRatio {
        num: Box<SeqRule>,
        den: Box<SeqRule>,
    },
}

/// Bound on `Σ_{k ≥ n} |s(k) − limit|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailSum {
    Bounded(f64),
    /// The deviations are eventually of one sign and not summable.
    Divergent,
    /// The family carries no tail argument.
    Unknown,
}

impl SeqRule {
    pub fn constant(value: Scalar) -> Self {
        SeqRule::Constant { value }
    }

    pub fn one() -> Self {
        SeqRule::constant(Scalar::ONE)
    }

    /// `1/(k + offset)`
    pub fn reciprocal(offset: i64) -> Self {
        SeqRule::AffineReciprocal {
            base: Scalar::ZERO,
            coef: Scalar::ONE,
            offset,
        }
    }

    /// `base + coef · ratio^k`
    pub fn affine_geometric(base: Scalar, coef: Scalar, ratio: Scalar) -> Self {
        SeqRule::AffineGeometric { base, coef, ratio }
    }

    /// `ratio^k`
    pub fn geometric(ratio: Scalar) -> Self {
        SeqRule::affine_geometric(Scalar::ZERO, Scalar::ONE, ratio)
    }

    pub fn explicit(prefix: Vec<Scalar>, tail: SeqRule) -> Self {
        if prefix.is_empty() {
            tail
        } else {
            SeqRule::Explicit {
                prefix,
                tail: Box::new(tail),
            }
        }
    }

    pub fn shifted(inner: SeqRule, by: i64) -> Self {
        if by == 0 {
            inner
        } else {
            SeqRule::Shifted {
                inner: Box::new(inner),
                by,
            }
        }
    }

    pub fn subsampled(inner: SeqRule, stride: u64, offset: i64) -> Self {
        if stride == 1 {
            return SeqRule::shifted(inner, offset);
        }
        SeqRule::Subsampled {
            inner: Box::new(inner),
            stride,
            offset,
        }
    }

    pub fn bilateral(nonneg: SeqRule, negative: SeqRule) -> Self {
        SeqRule::Bilateral {
            nonneg: Box::new(nonneg),
            negative: Box::new(negative),
        }
    }

    /// `w_j = 1/(1+|j|)` on ℤ, pulled back through the interleave.
    pub fn cibws_weights() -> Self {
        // nonneg(j+1) = 1/(j+1), negative(|j|) = 1/(1+|j|)
        SeqRule::bilateral(SeqRule::reciprocal(0), SeqRule::reciprocal(1))
    }

    pub fn permuted(inner: SeqRule, perm: Permutation) -> Self {
        if perm.is_identity() {
            return inner;
        }
        if let SeqRule::Constant { .. } = inner {
            return inner;
        }
        SeqRule::Permuted {
            inner: Box::new(inner),
            perm,
        }
    }

    pub fn product(left: SeqRule, right: SeqRule) -> Self {
        match (&left, &right) {
            (SeqRule::Constant { value }, other) | (other, SeqRule::Constant { value })
                if *value == Scalar::ONE =>
            {
                other.clone()
            }
            (SeqRule::Constant { value: a }, SeqRule::Constant { value: b }) => SeqRule::constant(*a * *b),
            _ => SeqRule::Product {
                left: Box::new(left),
                right: Box::new(right),
            },
        }
    }

    pub fn scaled(by: Scalar, inner: SeqRule) -> Self {
        if by == Scalar::ONE {
            return inner;
        }
        if let SeqRule::Constant { value } = inner {
            return SeqRule::constant(by * value);
        }
        SeqRule::Scaled {
            by,
            inner: Box::new(inner),
        }
    }

    pub fn conj(inner: SeqRule) -> Self {
        SeqRule::Conj { inner: Box::new(inner) }
    }

    pub fn abs(inner: SeqRule) -> Self {
        SeqRule::Abs { inner: Box::new(inner) }
    }

    pub fn phase(inner: SeqRule) -> Self {
        SeqRule::Phase { inner: Box::new(inner) }
    }

    pub fn cumulative_ratio(num: SeqRule, den: SeqRule) -> Self {
        SeqRule::CumulativeRatio {
            num: Box::new(num),
            den: Box::new(den),
        }
    }

    /// `s(k)` for `k ≥ 1`.
    pub fn value(&self, k: u64) -> Scalar {
        debug_assert!(k >= 1);
        match self {
            SeqRule::Constant { value } => *value,
            SeqRule::AffineGeometric { base, coef, ratio } => *base + *coef * ratio.powi(k),
            SeqRule::AffineReciprocal { base, coef, offset } => {
                let d = k as i128 + *offset as i128;
                *base + *coef / Scalar::int(d)
            }
            SeqRule::AffinePower { base, coef, power } => Scalar::real(base + coef * (k as f64).powf(-power)),
            SeqRule::Explicit { prefix, tail } => {
                let len = prefix.len() as u64;
                if k <= len {
                    prefix[k as usize - 1]
                } else {
                    tail.value(k - len)
                }
            }
            SeqRule::Shifted { inner, by } => inner.value((k as i64 + by) as u64),
            SeqRule::Subsampled { inner, stride, offset } => inner.value(subsample(k, *stride, *offset)),
            SeqRule::Bilateral { nonneg, negative } => {
                let j = deinterleave(k);
                if j >= 0 {
                    nonneg.value(j as u64 + 1)
                } else {
                    negative.value(j.unsigned_abs())
                }
            }
            SeqRule::Permuted { inner, perm } => inner.value(perm.forward(k)),
            SeqRule::Product { left, right } => left.value(k) * right.value(k),
            SeqRule::Scaled { by, inner } => *by * inner.value(k),
            SeqRule::Conj { inner } => inner.value(k).conj(),
            SeqRule::Abs { inner } => inner.value(k).abs(),
            SeqRule::Phase { inner } => inner.value(k).phase(),
            SeqRule::CumulativeRatio { num, den } => {
                (1..=k).fold(Scalar::ONE, |acc, j| acc * num.value(j) / den.value(j))
            }
        }
    }

    /// `ln |s(k)|`, with closed forms where the value itself would underflow.
    pub fn ln_abs(&self, k: u64) -> f64 {
        match self {
            SeqRule::AffineGeometric { base, coef, ratio } if base.is_zero() => {
                coef.ln_abs() + k as f64 * ratio.ln_abs()
            }
            SeqRule::Explicit { prefix, tail } if k > prefix.len() as u64 => {
                tail.ln_abs(k - prefix.len() as u64)
            }
            SeqRule::Shifted { inner, by } => inner.ln_abs((k as i64 + by) as u64),
            SeqRule::Subsampled { inner, stride, offset } => inner.ln_abs(subsample(k, *stride, *offset)),
            SeqRule::Bilateral { nonneg, negative } => {
                let j = deinterleave(k);
                if j >= 0 {
                    nonneg.ln_abs(j as u64 + 1)
                } else {
                    negative.ln_abs(j.unsigned_abs())
                }
            }
            SeqRule::Permuted { inner, perm } => inner.ln_abs(perm.forward(k)),
            SeqRule::Product { left, right } => left.ln_abs(k) + right.ln_abs(k),
            SeqRule::Scaled { by, inner } => by.ln_abs() + inner.ln_abs(k),
            SeqRule::Conj { inner } | SeqRule::Abs { inner } => inner.ln_abs(k),
            SeqRule::Phase { .. } => 0.0,
            SeqRule::CumulativeRatio { num, den } => (1..=k).map(|j| num.ln_abs(j) - den.ln_abs(j)).sum(),
            _ => self.value(k).ln_abs(),
        }
    }

    /// Smallest index `≥ from` the rule can be evaluated at (offsets and
    /// shifts may make small indices meaningless).
    pub fn first_index(&self) -> u64 {
        match self {
            SeqRule::AffineReciprocal { offset, .. } if *offset < 0 => (1 - offset) as u64,
            SeqRule::Shifted { inner, by } => (inner.first_index() as i64 - by).max(1) as u64,
            SeqRule::Subsampled { inner, stride, offset } => {
                let need = inner.first_index() as i64 - offset;
                (need.max(1) as u64).div_ceil(*stride).max(1)
            }
            _ => 1,
        }
    }

    /// `lim s(k)`, when the family determines it.
    pub fn limit(&self) -> Option<Scalar> {
        match self {
            SeqRule::Constant { value } => Some(*value),
            SeqRule::AffineGeometric { base, coef, ratio } => {
                let r = ratio.norm();
                if coef.is_zero() || r < 1.0 {
                    Some(*base)
                } else if *ratio == Scalar::ONE {
                    Some(*base + *coef)
                } else {
                    None
                }
            }
            SeqRule::AffineReciprocal { base, .. } => Some(*base),
            SeqRule::AffinePower { base, coef, power } => {
                if *power > 0.0 || *coef == 0.0 {
                    Some(Scalar::real(*base))
                } else if *power == 0.0 {
                    Some(Scalar::real(base + coef))
                } else {
                    None
                }
            }
            SeqRule::Explicit { tail, .. } => tail.limit(),
            SeqRule::Shifted { inner, .. } | SeqRule::Subsampled { inner, .. } => inner.limit(),
            SeqRule::Bilateral { nonneg, negative } => {
                let (a, b) = (nonneg.limit()?, negative.limit()?);
                (a == b).then_some(a)
            }
            SeqRule::Permuted { inner, .. } => inner.limit(),
            SeqRule::Product { left, right } => Some(left.limit()? * right.limit()?),
            SeqRule::Scaled { by, inner } => Some(*by * inner.limit()?),
            SeqRule::Conj { inner } => inner.limit().map(Scalar::conj),
            SeqRule::Abs { inner } => inner.limit().map(Scalar::abs),
            SeqRule::Phase { inner } => {
                let l = inner.limit()?;
                (!l.is_zero()).then(|| l.phase())
            }
            SeqRule::CumulativeRatio { .. } => None,
        }
    }

    /// `(K, c)` with `s(k) = c` exactly for every `k ≥ K`.
    pub fn eventually_constant(&self) -> Option<(u64, Scalar)> {
        match self {
            SeqRule::Constant { value } => Some((1, *value)),
            SeqRule::AffineGeometric { base, coef, ratio } => {
                if coef.is_zero() {
                    Some((1, *base))
                } else if *ratio == Scalar::ONE {
                    Some((1, *base + *coef))
                } else {
                    None
                }
            }
            SeqRule::AffineReciprocal { base, coef, .. } if coef.is_zero() => Some((1, *base)),
            SeqRule::Explicit { prefix, tail } => {
                let (k, c) = tail.eventually_constant()?;
                Some((k + prefix.len() as u64, c))
            }
            SeqRule::Shifted { inner, by } => {
                let (k, c) = inner.eventually_constant()?;
                Some(((k as i64 - by).max(1) as u64, c))
            }
            SeqRule::Subsampled { inner, stride, offset } => {
                let (k, c) = inner.eventually_constant()?;
                let need = (k as i64 - offset).max(1) as u64;
                Some((need.div_ceil(*stride).max(1), c))
            }
            SeqRule::Scaled { by, inner } => inner.eventually_constant().map(|(k, c)| (k, *by * c)),
            SeqRule::Conj { inner } => inner.eventually_constant().map(|(k, c)| (k, c.conj())),
            SeqRule::Abs { inner } => inner.eventually_constant().map(|(k, c)| (k, c.abs())),
            SeqRule::Phase { inner } => inner.eventually_constant().map(|(k, c)| (k, c.phase())),
            SeqRule::Product { left, right } => {
                let (a, x) = left.eventually_constant()?;
                let (b, y) = right.eventually_constant()?;
                Some((a.max(b), x * y))
            }
            SeqRule::Bilateral { nonneg, negative } => {
                let (a, x) = nonneg.eventually_constant()?;
                let (b, y) = negative.eventually_constant()?;
                // nonneg(j+1) sits at 2j+1, negative(j) at 2j
                (x == y).then(|| ((2 * a).max(2 * b), x))
            }
            _ => None,
        }
    }

    /// Bound on `Σ_{k ≥ n} |s(k) − lim s|`.
    pub fn tail_deviation(&self, n: u64) -> TailSum {
        let n = n.max(1);
        match self {
            SeqRule::Constant { .. } => TailSum::Bounded(0.0),
            SeqRule::AffineGeometric { coef, ratio, .. } => {
                if coef.is_zero() {
                    return TailSum::Bounded(0.0);
                }
                let r = ratio.norm();
                if r < 1.0 {
                    TailSum::Bounded(coef.norm() * r.powf(n as f64) / (1.0 - r))
                } else if *ratio == Scalar::ONE {
                    TailSum::Bounded(0.0)
                } else {
                    TailSum::Unknown
                }
            }
            SeqRule::AffineReciprocal { coef, .. } => {
                if coef.is_zero() {
                    TailSum::Bounded(0.0)
                } else {
                    TailSum::Divergent
                }
            }
            SeqRule::AffinePower { coef, power, .. } => {
                if *coef == 0.0 {
                    TailSum::Bounded(0.0)
                } else if *power > 1.0 {
                    // Σ_{k≥n} k^-p ≤ n^-p + n^{1-p}/(p-1)
                    let nf = n as f64;
                    TailSum::Bounded(coef.abs() * (nf.powf(-power) + nf.powf(1.0 - power) / (power - 1.0)))
                } else if *power > 0.0 {
                    TailSum::Divergent
                } else {
                    TailSum::Unknown
                }
            }
            SeqRule::Explicit { prefix, tail } => {
                let len = prefix.len() as u64;
                if n > len {
                    return tail.tail_deviation(n - len);
                }
                let Some(limit) = tail.limit() else {
                    return TailSum::Unknown;
                };
                match tail.tail_deviation(1) {
                    TailSum::Bounded(b) => {
                        let head: f64 = prefix[n as usize - 1..]
                            .iter()
                            .map(|v| (*v - limit).norm())
                            .sum();
                        TailSum::Bounded(head + b)
                    }
                    other => other,
                }
            }
            SeqRule::Shifted { inner, by } => inner.tail_deviation((n as i64 + by).max(1) as u64),
            // a subsequence's tail sits inside the full tail
            SeqRule::Subsampled { inner, stride, offset } => {
                inner.tail_deviation(((*stride * n) as i64 + offset).max(1) as u64)
            }
            SeqRule::Scaled { by, inner } => match inner.tail_deviation(n) {
                TailSum::Bounded(b) => TailSum::Bounded(by.norm() * b),
                other => other,
            },
            SeqRule::Conj { inner } => inner.tail_deviation(n),
            SeqRule::Abs { inner } => match inner.tail_deviation(n) {
                // ||a| − |L|| ≤ |a − L|
                TailSum::Bounded(b) => TailSum::Bounded(b),
                _ => TailSum::Unknown,
            },
            _ => TailSum::Unknown,
        }
    }

    /// First index in `1..=window` whose value is exactly zero.
    pub fn first_zero(&self, window: u64) -> Option<u64> {
        (self.first_index()..=window).find(|&k| self.value(k).is_zero())
    }
}

fn subsample(k: u64, stride: u64, offset: i64) -> u64 {
    (stride as i64 * k as i64 + offset) as u64
}

/// Bound on `Σ |ln(1 + δ_k)|` from `S = Σ |δ_k|`: each `|δ_k| ≤ S`, and
/// `|ln(1+δ)| ≤ |δ| / (1 − |δ|)` for `|δ| < 1`.
pub fn log_tail_from_deviation(s: f64) -> Option<f64> {
    (s < 1.0).then(|| s / (1.0 - s))
}
