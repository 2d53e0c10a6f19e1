//! Bijections and injections of ℕ = {1, 2, 3, …}: increasing index sequences,
//! named permutations, spreads, and multiplicity lists.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sequence::SeqRule;

/// ℤ → ℕ: `j ≥ 0 ↦ 2j+1`, `j < 0 ↦ 2|j|`.
pub fn interleave_z(j: i64) -> u64 {
    if j >= 0 {
        2 * j as u64 + 1
    } else {
        2 * j.unsigned_abs()
    }
}

/// Two-sided inverse of [`interleave_z`]. `n` must be ≥ 1.
pub fn deinterleave(n: u64) -> i64 {
    debug_assert!(n >= 1);
    if n % 2 == 1 {
        ((n - 1) / 2) as i64
    } else {
        -((n / 2) as i64)
    }
}

/// A strictly increasing sequence in ℕ, possibly finite.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", rename_all_fields = "camelCase")]
pub enum IndexSequence {
    /// `start, start+step, start+2·step, …`
    Arithmetic { start: u64, step: u64 },
    /// The listed prefix, then `start, start+step, …`.
    Prefixed { prefix: Vec<u64>, start: u64, step: u64 },
    /// A finite set, listed increasingly.
    Explicit { elems: Vec<u64> },
}

impl IndexSequence {
    pub fn naturals() -> Self {
        IndexSequence::Arithmetic { start: 1, step: 1 }
    }

    pub fn arithmetic(start: u64, step: u64) -> Self {
        IndexSequence::Arithmetic { start, step }
    }

    pub fn explicit(elems: Vec<u64>) -> Self {
        IndexSequence::Explicit { elems }
    }

    /// `n`-th element (1-based), `None` past the end of a finite sequence.
    pub fn elem(&self, n: usize) -> Option<u64> {
        if n == 0 {
            return None;
        }
        match self {
            IndexSequence::Arithmetic { start, step } => Some(start + step * (n as u64 - 1)),
            IndexSequence::Prefixed {
                prefix,
                start,
                step,
            } => {
                if n <= prefix.len() {
                    Some(prefix[n - 1])
                } else {
                    Some(start + step * (n - prefix.len() - 1) as u64)
                }
            }
            IndexSequence::Explicit { elems } => elems.get(n - 1).copied(),
        }
    }

    /// 1-based position of `i` in the sequence.
    pub fn position(&self, i: u64) -> Option<usize> {
        match self {
            IndexSequence::Arithmetic { start, step } => arith_position(i, *start, *step),
            IndexSequence::Prefixed {
                prefix,
                start,
                step,
            } => match prefix.binary_search(&i) {
                Ok(p) => Some(p + 1),
                Err(_) => arith_position(i, *start, *step).map(|p| p + prefix.len()),
            },
            IndexSequence::Explicit { elems } => elems.binary_search(&i).ok().map(|p| p + 1),
        }
    }

    pub fn contains(&self, i: u64) -> bool {
        self.position(i).is_some()
    }

    pub fn len(&self) -> Option<usize> {
        match self {
            IndexSequence::Explicit { elems } => Some(elems.len()),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn is_infinite(&self) -> bool {
        self.len().is_none()
    }

    /// All elements `≤ bound`, in order.
    pub fn elems_upto(&self, bound: u64) -> Vec<u64> {
        let mut out = Vec::new();
        let mut n = 1;
        while let Some(e) = self.elem(n) {
            if e > bound {
                break;
            }
            out.push(e);
            n += 1;
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        match self {
            IndexSequence::Arithmetic { start, step } => {
                if *start == 0 || *step == 0 {
                    return bad(format!("arithmetic sequence needs start ≥ 1 and step ≥ 1, got ({start}, {step})"));
                }
            }
            IndexSequence::Prefixed {
                prefix,
                start,
                step,
            } => {
                if *start == 0 || *step == 0 {
                    return bad("prefixed sequence tail needs start ≥ 1 and step ≥ 1".into());
                }
                check_increasing(prefix)?;
                if let Some(&last) = prefix.last() {
                    if last >= *start {
                        return bad(format!("prefix ends at {last} but tail starts at {start}"));
                    }
                }
            }
            IndexSequence::Explicit { elems } => check_increasing(elems)?,
        }
        Ok(())
    }
}

fn arith_position(i: u64, start: u64, step: u64) -> Option<usize> {
    if i < start || (i - start) % step != 0 {
        None
    } else {
        Some(((i - start) / step) as usize + 1)
    }
}

fn check_increasing(v: &[u64]) -> Result<()> {
    if v.first() == Some(&0) {
        return Err(Error::InvalidInput("index 0 is not in ℕ".into()));
    }
    if let Some(w) = v.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(format!(
            "sequence not strictly increasing at {} → {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// A bijection of ℕ given by a rule, with its inverse.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "perm", rename_all = "kebab-case", rename_all_fields = "camelCase")]
pub enum Permutation {
    Identity,
    /// σ(2)=1, σ(2n)=2(n−1) for n ≥ 2, σ(2n−1)=2n+1.
    SigmaBilateral,
    /// `n ↦ interleave(deinterleave(n) + step)`: a shift of ℤ carried to ℕ.
    ZShift { step: i64 },
    /// A permutation of `1..=images.len()`, identity beyond.
    Finite { images: Vec<u64> },
    /// Blocks of `block_dim` consecutive indices, labelled by ℤ through the
    /// interleave, shifted one block forward: `e_k^(n) ↦ e_k^(n+1)`.
    BlockBilateral { block_dim: u64 },
    Inverse { of: Box<Permutation> },
    /// `outer ∘ inner`.
    Compose {
        outer: Box<Permutation>,
        inner: Box<Permutation>,
    },
}

pub fn sigma_bilateral() -> Permutation {
    Permutation::SigmaBilateral
}

impl Permutation {
    pub fn forward(&self, k: u64) -> u64 {
        debug_assert!(k >= 1);
        match self {
            Permutation::Identity => k,
            Permutation::SigmaBilateral => {
                if k == 2 {
                    1
                } else if k % 2 == 0 {
                    k - 2
                } else {
                    k + 2
                }
            }
            Permutation::ZShift { step } => interleave_z(deinterleave(k) + step),
            Permutation::Finite { images } => {
                if (k as usize) <= images.len() {
                    images[k as usize - 1]
                } else {
                    k
                }
            }
            Permutation::BlockBilateral { block_dim } => block_shift(k, *block_dim, 1),
            Permutation::Inverse { of } => of.inverse(k),
            Permutation::Compose { outer, inner } => outer.forward(inner.forward(k)),
        }
    }

    pub fn inverse(&self, k: u64) -> u64 {
        debug_assert!(k >= 1);
        match self {
            Permutation::Identity => k,
            Permutation::SigmaBilateral => {
                if k == 1 {
                    2
                } else if k % 2 == 1 {
                    k - 2
                } else {
                    k + 2
                }
            }
            Permutation::ZShift { step } => interleave_z(deinterleave(k) - step),
            Permutation::Finite { images } => {
                if (k as usize) <= images.len() {
                    images.iter().position(|&v| v == k).map(|p| p as u64 + 1).unwrap_or(k)
                } else {
                    k
                }
            }
            Permutation::BlockBilateral { block_dim } => block_shift(k, *block_dim, -1),
            Permutation::Inverse { of } => of.forward(k),
            Permutation::Compose { outer, inner } => inner.inverse(outer.inverse(k)),
        }
    }

    /// Inverse permutation, simplified where a named form exists.
    pub fn inverted(&self) -> Permutation {
        match self {
            Permutation::Identity => Permutation::Identity,
            Permutation::ZShift { step } => Permutation::ZShift { step: -step },
            Permutation::Inverse { of } => (**of).clone(),
            Permutation::Finite { images } => {
                let mut inv = vec![0; images.len()];
                for (i, &v) in images.iter().enumerate() {
                    inv[v as usize - 1] = i as u64 + 1;
                }
                Permutation::Finite { images: inv }
            }
            other => Permutation::Inverse {
                of: Box::new(other.clone()),
            },
        }
    }

    /// `outer ∘ inner`, dropping identities.
    pub fn compose(outer: &Permutation, inner: &Permutation) -> Permutation {
        match (outer, inner) {
            (Permutation::Identity, p) | (p, Permutation::Identity) => p.clone(),
            (Permutation::ZShift { step: a }, Permutation::ZShift { step: b }) => {
                if a + b == 0 {
                    Permutation::Identity
                } else {
                    Permutation::ZShift { step: a + b }
                }
            }
            _ => Permutation::Compose {
                outer: Box::new(outer.clone()),
                inner: Box::new(inner.clone()),
            },
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            Permutation::Identity => true,
            Permutation::ZShift { step } => *step == 0,
            Permutation::Finite { images } => images.iter().enumerate().all(|(i, &v)| v == i as u64 + 1),
            _ => false,
        }
    }

    /// True when ℕ is a single two-sided orbit `… → a → p(a) → …` with no
    /// cycles, as for the named bilateral shifts.
    pub fn is_single_bilateral_orbit(&self) -> bool {
        match self {
            Permutation::SigmaBilateral => true,
            Permutation::ZShift { step } => step.abs() == 1,
            Permutation::Inverse { of } => of.is_single_bilateral_orbit(),
            _ => false,
        }
    }

    pub fn description(&self) -> String {
        match self {
            Permutation::Identity => "identity".into(),
            Permutation::SigmaBilateral => "sigma-bilateral".into(),
            Permutation::ZShift { step } => format!("z-shift({step})"),
            Permutation::Finite { images } => format!("finite({} points)", images.len()),
            Permutation::BlockBilateral { block_dim } => format!("block-bilateral(dim {block_dim})"),
            Permutation::Inverse { of } => format!("inverse({})", of.description()),
            Permutation::Compose { outer, inner } => {
                format!("{} ∘ {}", outer.description(), inner.description())
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Permutation::Finite { images } => {
                let n = images.len();
                let mut seen = vec![false; n];
                for &v in images {
                    if v == 0 || v as usize > n || seen[v as usize - 1] {
                        return Err(Error::InvalidInput(format!(
                            "finite permutation images must be a permutation of 1..={n}"
                        )));
                    }
                    seen[v as usize - 1] = true;
                }
                Ok(())
            }
            Permutation::BlockBilateral { block_dim } if *block_dim == 0 => {
                Err(Error::InvalidInput("block dimension must be ≥ 1".into()))
            }
            Permutation::Inverse { of } => of.validate(),
            Permutation::Compose { outer, inner } => {
                outer.validate()?;
                inner.validate()
            }
            _ => Ok(()),
        }
    }
}

fn block_shift(g: u64, dim: u64, by: i64) -> u64 {
    let block = (g - 1) / dim + 1;
    let offset = (g - 1) % dim;
    let moved = interleave_z(deinterleave(block) + by);
    (moved - 1) * dim + offset + 1
}

/// S_{A,B}: `e_{a_k} ↦ e_{b_k}`, everything off `A` to zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpreadSpec {
    pub domain: IndexSequence,
    pub image: IndexSequence,
}

impl SpreadSpec {
    pub fn new(domain: IndexSequence, image: IndexSequence) -> Self {
        SpreadSpec { domain, image }
    }

    /// Image row of column `j`, if `j ∈ A`.
    pub fn map(&self, j: u64) -> Option<u64> {
        self.domain.position(j).and_then(|p| self.image.elem(p))
    }

    /// Source column of row `i`, if `i ∈ B`.
    pub fn preimage(&self, i: u64) -> Option<u64> {
        self.image.position(i).and_then(|p| self.domain.elem(p))
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        self.image.validate()?;
        if self.domain.len() != self.image.len() {
            return Err(Error::InvalidInput(
                "spread domain and image must have the same cardinality".into(),
            ));
        }
        Ok(())
    }
}

/// Splits `p` into spreads whose domains partition `1..=window`, each with
/// increasing domain and image. Named permutations get their rule-based
/// continuation; anything else is returned as finite pieces.
pub fn decompose_into_spreads(p: &Permutation, window: u64) -> Vec<SpreadSpec> {
    let window = window.max(1);
    match p {
        Permutation::Identity => {
            return vec![SpreadSpec::new(IndexSequence::naturals(), IndexSequence::naturals())]
        }
        Permutation::SigmaBilateral | Permutation::ZShift { step: 1 } => {
            return vec![
                SpreadSpec::new(IndexSequence::arithmetic(1, 2), IndexSequence::arithmetic(3, 2)),
                SpreadSpec::new(
                    IndexSequence::arithmetic(2, 2),
                    IndexSequence::Prefixed {
                        prefix: vec![1],
                        start: 2,
                        step: 2,
                    },
                ),
            ]
        }
        Permutation::ZShift { step: -1 } => {
            return vec![
                SpreadSpec::new(
                    IndexSequence::Prefixed {
                        prefix: vec![1],
                        start: 2,
                        step: 2,
                    },
                    IndexSequence::arithmetic(2, 2),
                ),
                SpreadSpec::new(IndexSequence::arithmetic(3, 2), IndexSequence::arithmetic(1, 2)),
            ]
        }
        _ => {}
    }

    let moved_upto = match p {
        Permutation::Finite { images } => images.len() as u64,
        _ => 0,
    };
    let scan = window.max(moved_upto);
    let pieces = greedy_pieces(p, scan);

    pieces
        .into_iter()
        .enumerate()
        .filter_map(|(idx, piece)| {
            // past the moved range a finite permutation is the identity, and
            // the greedy scan always files those pairs into the first piece
            if idx == 0 && moved_upto > 0 && moved_upto <= window {
                let (dom, img): (Vec<u64>, Vec<u64>) =
                    piece.iter().filter(|(a, _)| *a <= moved_upto).copied().unzip();
                return Some(SpreadSpec::new(
                    IndexSequence::Prefixed {
                        prefix: dom,
                        start: moved_upto + 1,
                        step: 1,
                    },
                    IndexSequence::Prefixed {
                        prefix: img,
                        start: moved_upto + 1,
                        step: 1,
                    },
                ));
            }
            let (dom, img): (Vec<u64>, Vec<u64>) =
                piece.into_iter().filter(|(a, _)| *a <= window).unzip();
            if dom.is_empty() {
                None
            } else {
                Some(SpreadSpec::new(IndexSequence::explicit(dom), IndexSequence::explicit(img)))
            }
        })
        .collect()
}

/// Patience-style scan: each pair `(a, p(a))` joins the first piece whose
/// last pair it dominates in both coordinates.
fn greedy_pieces(p: &Permutation, upto: u64) -> Vec<Vec<(u64, u64)>> {
    let mut pieces: Vec<Vec<(u64, u64)>> = Vec::new();
    for a in 1..=upto {
        let b = p.forward(a);
        match pieces
            .iter_mut()
            .find(|piece| piece.last().is_some_and(|&(_, lb)| lb < b))
        {
            Some(piece) => piece.push((a, b)),
            None => pieces.push(vec![(a, b)]),
        }
    }
    pieces
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Multiplicity {
    Finite(u64),
    Infinite,
}

impl Multiplicity {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Multiplicity::Infinite)
    }
}

impl Serialize for Multiplicity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Multiplicity::Finite(n) => s.serialize_u64(*n),
            Multiplicity::Infinite => s.serialize_str("infinite"),
        }
    }
}

impl<'de> Deserialize<'de> for Multiplicity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Count(u64),
            Word(String),
        }
        match Repr::deserialize(d)? {
            Repr::Count(n) => Ok(Multiplicity::Finite(n)),
            Repr::Word(w) if w.eq_ignore_ascii_case("infinite") => Ok(Multiplicity::Infinite),
            Repr::Word(w) => Err(serde::de::Error::custom(format!(
                "multiplicity must be a positive integer or \"infinite\", got {w:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityEntry {
    pub value: Scalar,
    pub multiplicity: Multiplicity,
}

/// Eigenvalues with multiplicities. `tail`, when present, lists further
/// simple eigenvalues (its k-th element is the k-th value after `entries`).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityList {
    pub entries: Vec<MultiplicityEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<SeqRule>,
}

impl MultiplicityList {
    pub fn new(entries: Vec<(Scalar, Multiplicity)>) -> Self {
        MultiplicityList {
            entries: entries
                .into_iter()
                .map(|(value, multiplicity)| MultiplicityEntry {
                    value,
                    multiplicity,
                })
                .collect(),
            tail: None,
        }
    }

    pub fn with_tail(mut self, tail: SeqRule) -> Self {
        self.tail = Some(tail);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.entries.iter().enumerate() {
            if e.multiplicity == Multiplicity::Finite(0) {
                return Err(Error::InvalidInput(format!(
                    "entry {i}: finite multiplicity must be ≥ 1"
                )));
            }
            if self.entries[..i].iter().any(|o| o.value == e.value) {
                return Err(Error::InvalidInput(format!(
                    "entry {i}: value {} listed twice",
                    e.value
                )));
            }
        }
        Ok(())
    }
}

/// Result of [`expand_multiplicities`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExpandedSpectrum {
    /// Finite-multiplicity values repeated by multiplicity, decreasing in modulus.
    pub finite: Vec<Scalar>,
    /// Values of infinite multiplicity, in input order.
    pub infinite: Vec<Scalar>,
    /// Simple values following `finite`.
    pub tail: Option<SeqRule>,
}

impl ExpandedSpectrum {
    /// The whole finite-multiplicity part as one sequence, when it is infinite.
    pub fn finite_rule(&self) -> Option<SeqRule> {
        self.tail
            .as_ref()
            .map(|t| SeqRule::explicit(self.finite.clone(), t.clone()))
    }
}

pub fn expand_multiplicities(m: &MultiplicityList) -> Result<ExpandedSpectrum> {
    if m.entries.is_empty() && m.tail.is_none() {
        return Err(Error::EmptyInput);
    }
    m.validate()?;
    let mut finite = Vec::new();
    let mut infinite = Vec::new();
    for e in &m.entries {
        match e.multiplicity {
            Multiplicity::Finite(k) => finite.extend(std::iter::repeat_n(e.value, k as usize)),
            Multiplicity::Infinite => infinite.push(e.value),
        }
    }
    finite.sort_by(|a, b| b.cmp_abs(a));
    Ok(ExpandedSpectrum {
        finite,
        infinite,
        tail: m.tail.clone(),
    })
}
