//! Lazy operator expressions on ℓ² = ℓ²(ℕ).
//!
//! Every variant is row- and column-finite, so an entry of a product is a
//! finite sum over the intermediate indices where the right factor's column
//! is supported. No entry is ever defined through a truncation.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index_maps::{IndexSequence, Permutation, SpreadSpec};
use crate::scalar::Scalar;
use crate::sequence::SeqRule;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", rename_all_fields = "camelCase")]
pub enum OperatorExpr {
    Diagonal {
        weights: SeqRule,
    },
    Spread(SpreadSpec),
    #[serde(rename = "permutation")]
    PermutationUnitary {
        perm: Permutation,
    },
    Sum {
        terms: Vec<OperatorExpr>,
    },
    Product {
        left: Box<OperatorExpr>,
        right: Box<OperatorExpr>,
    },
    Adjoint {
        inner: Box<OperatorExpr>,
    },
    Scale {
        scalar: Scalar,
        inner: Box<OperatorExpr>,
    },
    /// `λI − inner`
    LambdaShift {
        lambda: Scalar,
        inner: Box<OperatorExpr>,
    },
    /// Block `b` acts on the indices of `partition[b]`, in increasing order.
    BlockDirectSum {
        blocks: Vec<OperatorExpr>,
        partition: Vec<IndexSequence>,
    },
}

impl OperatorExpr {
    pub fn diagonal(weights: SeqRule) -> Self {
        OperatorExpr::Diagonal { weights }
    }

    pub fn identity() -> Self {
        OperatorExpr::diagonal(SeqRule::one())
    }

    pub fn spread(domain: IndexSequence, image: IndexSequence) -> Self {
        OperatorExpr::Spread(SpreadSpec::new(domain, image))
    }

    /// `S e_n = e_{n−1}`, `S e_1 = 0`.
    pub fn backward_unilateral_shift() -> Self {
        OperatorExpr::spread(IndexSequence::arithmetic(2, 1), IndexSequence::naturals())
    }

    /// `S e_n = e_{n+1}`.
    pub fn forward_unilateral_shift() -> Self {
        OperatorExpr::spread(IndexSequence::naturals(), IndexSequence::arithmetic(2, 1))
    }

    pub fn permutation(perm: Permutation) -> Self {
        OperatorExpr::PermutationUnitary { perm }
    }

    /// The compact injective bilateral weighted shift `K ẽ_j = ẽ_{j−1}/(1+|j|)`,
    /// written on ℕ through the interleave as `S·D`.
    pub fn cibws() -> Self {
        OperatorExpr::product(
            OperatorExpr::permutation(Permutation::ZShift { step: -1 }),
            OperatorExpr::diagonal(SeqRule::cibws_weights()),
        )
    }

    pub fn product(left: OperatorExpr, right: OperatorExpr) -> Self {
        OperatorExpr::Product {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn adjoint(inner: OperatorExpr) -> Self {
        OperatorExpr::Adjoint { inner: Box::new(inner) }
    }

    pub fn scale(scalar: Scalar, inner: OperatorExpr) -> Self {
        OperatorExpr::Scale {
            scalar,
            inner: Box::new(inner),
        }
    }

    pub fn lambda_shift(lambda: Scalar, inner: OperatorExpr) -> Self {
        OperatorExpr::LambdaShift {
            lambda,
            inner: Box::new(inner),
        }
    }

    pub fn sum(terms: Vec<OperatorExpr>) -> Self {
        OperatorExpr::Sum { terms }
    }

    pub fn block_direct_sum(blocks: Vec<OperatorExpr>, partition: Vec<IndexSequence>) -> Self {
        OperatorExpr::BlockDirectSum { blocks, partition }
    }

    /// Upper bound on nonzeros in any row or column.
    pub fn structural_bound(&self) -> usize {
        match self {
            OperatorExpr::Diagonal { .. } | OperatorExpr::Spread(_) | OperatorExpr::PermutationUnitary { .. } => 1,
            OperatorExpr::Sum { terms } => terms.iter().map(|t| t.structural_bound()).sum(),
            OperatorExpr::Product { left, right } => left.structural_bound() * right.structural_bound(),
            OperatorExpr::Adjoint { inner } | OperatorExpr::Scale { inner, .. } => inner.structural_bound(),
            OperatorExpr::LambdaShift { inner, .. } => inner.structural_bound() + 1,
            OperatorExpr::BlockDirectSum { blocks, .. } => {
                blocks.iter().map(|b| b.structural_bound()).max().unwrap_or(0)
            }
        }
    }

    /// Rows where column `j` may be nonzero, sorted and deduplicated.
    pub fn col_support(&self, j: u64) -> Vec<u64> {
        let mut out = match self {
            OperatorExpr::Diagonal { .. } => vec![j],
            OperatorExpr::Spread(s) => s.map(j).into_iter().collect(),
            OperatorExpr::PermutationUnitary { perm } => vec![perm.forward(j)],
            OperatorExpr::Sum { terms } => terms.iter().flat_map(|t| t.col_support(j)).collect(),
            OperatorExpr::Product { left, right } => right
                .col_support(j)
                .into_iter()
                .flat_map(|k| left.col_support(k))
                .collect(),
            OperatorExpr::Adjoint { inner } => inner.row_support(j),
            OperatorExpr::Scale { inner, .. } => inner.col_support(j),
            OperatorExpr::LambdaShift { inner, .. } => {
                let mut v = inner.col_support(j);
                v.push(j);
                v
            }
            OperatorExpr::BlockDirectSum { blocks, partition } => match locate(partition, j) {
                Some((b, local)) => blocks[b]
                    .col_support(local)
                    .into_iter()
                    .filter_map(|r| partition[b].elem(r as usize))
                    .collect(),
                None => Vec::new(),
            },
        };
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Columns where row `i` may be nonzero, sorted and deduplicated.
    pub fn row_support(&self, i: u64) -> Vec<u64> {
        let mut out = match self {
            OperatorExpr::Diagonal { .. } => vec![i],
            OperatorExpr::Spread(s) => s.preimage(i).into_iter().collect(),
            OperatorExpr::PermutationUnitary { perm } => vec![perm.inverse(i)],
            OperatorExpr::Sum { terms } => terms.iter().flat_map(|t| t.row_support(i)).collect(),
            OperatorExpr::Product { left, right } => left
                .row_support(i)
                .into_iter()
                .flat_map(|k| right.row_support(k))
                .collect(),
            OperatorExpr::Adjoint { inner } => inner.col_support(i),
            OperatorExpr::Scale { inner, .. } => inner.row_support(i),
            OperatorExpr::LambdaShift { inner, .. } => {
                let mut v = inner.row_support(i);
                v.push(i);
                v
            }
            OperatorExpr::BlockDirectSum { blocks, partition } => match locate(partition, i) {
                Some((b, local)) => blocks[b]
                    .row_support(local)
                    .into_iter()
                    .filter_map(|c| partition[b].elem(c as usize))
                    .collect(),
                None => Vec::new(),
            },
        };
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Exact matrix entry `⟨e_i, T e_j⟩`, `i, j ≥ 1`.
    pub fn entry(&self, i: u64, j: u64) -> Scalar {
        debug_assert!(i >= 1 && j >= 1);
        match self {
            OperatorExpr::Diagonal { weights } => {
                if i == j {
                    weights.value(j)
                } else {
                    Scalar::ZERO
                }
            }
            OperatorExpr::Spread(s) => indicator(s.map(j) == Some(i)),
            OperatorExpr::PermutationUnitary { perm } => indicator(perm.forward(j) == i),
            OperatorExpr::Sum { terms } => terms.iter().map(|t| t.entry(i, j)).sum(),
            OperatorExpr::Product { left, right } => right
                .col_support(j)
                .into_iter()
                .map(|k| left.entry(i, k) * right.entry(k, j))
                .sum(),
            OperatorExpr::Adjoint { inner } => inner.entry(j, i).conj(),
            OperatorExpr::Scale { scalar, inner } => *scalar * inner.entry(i, j),
            OperatorExpr::LambdaShift { lambda, inner } => {
                let d = if i == j { *lambda } else { Scalar::ZERO };
                d - inner.entry(i, j)
            }
            OperatorExpr::BlockDirectSum { blocks, partition } => {
                match (locate(partition, i), locate(partition, j)) {
                    (Some((bi, li)), Some((bj, lj))) if bi == bj => blocks[bi].entry(li, lj),
                    _ => Scalar::ZERO,
                }
            }
        }
    }

    /// Column `j` as a finitely supported vector.
    pub fn column(&self, j: u64) -> FinVector {
        FinVector::from_pairs(self.col_support(j).into_iter().map(|i| (i, self.entry(i, j))))
    }

    pub fn apply(&self, x: &FinVector) -> FinVector {
        let mut out = FinVector::zero();
        for (&j, &xj) in x.iter() {
            for i in self.col_support(j) {
                out.add(i, self.entry(i, j) * xj);
            }
        }
        out
    }

    /// Leading `n × n` corner as exact scalars, row-major.
    pub fn truncate_exact(&self, n: usize) -> Vec<Scalar> {
        let mut m = vec![Scalar::ZERO; n * n];
        for j in 1..=n as u64 {
            for i in self.col_support(j) {
                if i as usize <= n {
                    m[(i as usize - 1) * n + (j as usize - 1)] = self.entry(i, j);
                }
            }
        }
        m
    }

    /// Leading `n × n` corner.
    pub fn truncate(&self, n: usize) -> DMatrix<Complex64> {
        let exact = self.truncate_exact(n);
        DMatrix::from_fn(n, n, |r, c| exact[r * n + c].to_c64())
    }

    /// Self-adjointness known from the structure alone.
    pub fn is_structurally_self_adjoint(&self) -> bool {
        match self {
            OperatorExpr::Diagonal { weights } => weights_real(weights),
            OperatorExpr::PermutationUnitary { perm } => perm.is_identity(),
            OperatorExpr::Scale { scalar, inner } => scalar.is_real() && inner.is_structurally_self_adjoint(),
            OperatorExpr::LambdaShift { lambda, inner } => lambda.is_real() && inner.is_structurally_self_adjoint(),
            OperatorExpr::Sum { terms } => terms.iter().all(|t| t.is_structurally_self_adjoint()),
            OperatorExpr::BlockDirectSum { blocks, .. } => blocks.iter().all(|b| b.is_structurally_self_adjoint()),
            _ => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            OperatorExpr::Diagonal { .. } => Ok(()),
            OperatorExpr::Spread(s) => s.validate(),
            OperatorExpr::PermutationUnitary { perm } => perm.validate(),
            OperatorExpr::Sum { terms } => {
                if terms.is_empty() {
                    return Err(Error::InvalidInput("sum needs at least one term".into()));
                }
                terms.iter().try_for_each(|t| t.validate())
            }
            OperatorExpr::Product { left, right } => {
                left.validate()?;
                right.validate()
            }
            OperatorExpr::Adjoint { inner }
            | OperatorExpr::Scale { inner, .. }
            | OperatorExpr::LambdaShift { inner, .. } => inner.validate(),
            OperatorExpr::BlockDirectSum { blocks, partition } => {
                if blocks.len() != partition.len() || blocks.is_empty() {
                    return Err(Error::InvalidInput(
                        "block direct sum needs one partition cell per block".into(),
                    ));
                }
                for cell in partition {
                    cell.validate()?;
                }
                blocks.iter().try_for_each(|b| b.validate())?;
                check_partition(partition, PARTITION_PROBE)
            }
        }
    }
}

/// Window over which block partitions are checked to be disjoint and covering.
pub const PARTITION_PROBE: u64 = 4096;

fn check_partition(partition: &[IndexSequence], probe: u64) -> Result<()> {
    for i in 1..=probe {
        let owners = partition.iter().filter(|c| c.contains(i)).count();
        if owners != 1 {
            return Err(Error::InvalidInput(format!(
                "index {i} lies in {owners} partition cells, expected exactly 1"
            )));
        }
    }
    Ok(())
}

fn weights_real(w: &SeqRule) -> bool {
    match w {
        SeqRule::Constant { value } => value.is_real(),
        SeqRule::AffineGeometric { base, coef, ratio } => base.is_real() && coef.is_real() && ratio.is_real(),
        SeqRule::AffineReciprocal { base, coef, .. } => base.is_real() && coef.is_real(),
        SeqRule::AffinePower { .. } | SeqRule::Abs { .. } => true,
        SeqRule::Explicit { prefix, tail } => prefix.iter().all(|v| v.is_real()) && weights_real(tail),
        SeqRule::Shifted { inner, .. }
        | SeqRule::Subsampled { inner, .. }
        | SeqRule::Permuted { inner, .. }
        | SeqRule::Conj { inner } => {
            weights_real(inner)
        }
        SeqRule::Bilateral { nonneg, negative } => weights_real(nonneg) && weights_real(negative),
        SeqRule::Product { left, right } => weights_real(left) && weights_real(right),
        SeqRule::Scaled { by, inner } => by.is_real() && weights_real(inner),
        SeqRule::Phase { inner } => weights_real(inner),
        SeqRule::CumulativeRatio { num, den } => weights_real(num) && weights_real(den),
    }
}

fn indicator(b: bool) -> Scalar {
    if b {
        Scalar::ONE
    } else {
        Scalar::ZERO
    }
}

/// `(cell, local index)` of global index `g`.
fn locate(partition: &[IndexSequence], g: u64) -> Option<(usize, u64)> {
    partition
        .iter()
        .enumerate()
        .find_map(|(b, cell)| cell.position(g).map(|p| (b, p as u64)))
}

/// A finitely supported vector; stored values are never zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FinVector {
    values: BTreeMap<u64, Scalar>,
}

impl FinVector {
    pub fn zero() -> Self {
        FinVector::default()
    }

    pub fn basis(k: u64) -> Self {
        FinVector::from_pairs([(k, Scalar::ONE)])
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, Scalar)>) -> Self {
        let mut v = FinVector::zero();
        for (i, x) in pairs {
            v.add(i, x);
        }
        v
    }

    pub fn add(&mut self, i: u64, x: Scalar) {
        let cur = self.values.get(&i).copied().unwrap_or(Scalar::ZERO);
        let next = cur + x;
        if next.is_zero() {
            self.values.remove(&i);
        } else {
            self.values.insert(i, next);
        }
    }

    pub fn get(&self, i: u64) -> Scalar {
        self.values.get(&i).copied().unwrap_or(Scalar::ZERO)
    }

    pub fn support(&self) -> impl Iterator<Item = u64> + '_ {
        self.values.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&u64, &Scalar)> {
        self.values.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_index(&self) -> Option<u64> {
        self.values.keys().next_back().copied()
    }

    pub fn scaled(&self, c: Scalar) -> FinVector {
        FinVector::from_pairs(self.values.iter().map(|(&i, &x)| (i, c * x)))
    }
}

/// How a shift form's column map arose.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftSource {
    BilateralViaInterleave,
    Unilateral,
    Generic,
}

/// One nonzero entry per column: `T e_j = w(j) e_{perm(j)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftForm {
    pub perm: Permutation,
    pub weights: SeqRule,
    pub source: ShiftSource,
}

impl ShiftForm {
    pub fn new(perm: Permutation, weights: SeqRule) -> Self {
        let source = if perm.is_single_bilateral_orbit() {
            ShiftSource::BilateralViaInterleave
        } else {
            ShiftSource::Generic
        };
        ShiftForm { perm, weights, source }
    }

    /// Entry computed from the column map directly, not through an expression tree.
    pub fn entry(&self, i: u64, j: u64) -> Scalar {
        if self.perm.forward(j) == i {
            self.weights.value(j)
        } else {
            Scalar::ZERO
        }
    }

    pub fn truncate_exact(&self, n: usize) -> Vec<Scalar> {
        let mut m = vec![Scalar::ZERO; n * n];
        for j in 1..=n as u64 {
            let i = self.perm.forward(j);
            if i as usize <= n {
                m[(i as usize - 1) * n + (j as usize - 1)] = self.weights.value(j);
            }
        }
        m
    }

    pub fn to_expr(&self) -> OperatorExpr {
        let diag = OperatorExpr::diagonal(self.weights.clone());
        if self.perm.is_identity() {
            diag
        } else {
            OperatorExpr::product(OperatorExpr::permutation(self.perm.clone()), diag)
        }
    }

    /// `T*`: column `m` holds `conj(w(perm⁻¹(m)))` in row `perm⁻¹(m)`.
    pub fn adjoint(&self) -> ShiftForm {
        let inv = self.perm.inverted();
        ShiftForm {
            weights: SeqRule::conj(SeqRule::permuted(self.weights.clone(), inv.clone())),
            perm: inv,
            source: self.source,
        }
    }

    /// First probed column with zero weight.
    pub fn first_zero_weight(&self, window: u64) -> Option<u64> {
        self.weights.first_zero(window)
    }
}

/// `T = unitary · diagonal`, the polar decomposition of a shift form.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftDecomposition {
    pub unitary: OperatorExpr,
    pub diagonal: OperatorExpr,
    /// `|T|` as a weight rule.
    pub modulus: SeqRule,
    pub shift: ShiftForm,
}

/// Column map and weights read off the expression tree, without probing.
fn structural_shift(t: &OperatorExpr) -> Option<(Permutation, SeqRule)> {
    match t {
        OperatorExpr::Diagonal { weights } => Some((Permutation::Identity, weights.clone())),
        OperatorExpr::PermutationUnitary { perm } => Some((perm.clone(), SeqRule::one())),
        OperatorExpr::Spread(s) => {
            let nat = IndexSequence::naturals();
            (s.domain == nat && s.image == nat).then(|| (Permutation::Identity, SeqRule::one()))
        }
        OperatorExpr::Product { left, right } => {
            let (pl, wl) = structural_shift(left)?;
            let (pr, wr) = structural_shift(right)?;
            // T e_j = wr(j) wl(pr(j)) e_{pl(pr(j))}
            let weights = SeqRule::product(wr, SeqRule::permuted(wl, pr.clone()));
            Some((Permutation::compose(&pl, &pr), weights))
        }
        OperatorExpr::Scale { scalar, inner } => {
            let (p, w) = structural_shift(inner)?;
            Some((p, SeqRule::scaled(*scalar, w)))
        }
        OperatorExpr::Adjoint { inner } => {
            let (p, w) = structural_shift(inner)?;
            let s = ShiftForm::new(p, w).adjoint();
            Some((s.perm, s.weights))
        }
        _ => None,
    }
}

/// Column map and weights from the tree structure alone; weights may vanish.
pub fn shift_form_of(t: &OperatorExpr) -> Option<ShiftForm> {
    structural_shift(t).map(|(p, w)| ShiftForm::new(p, w))
}

/// Recognizes `T` as a permutation-weighted operator and splits it as
/// `U_σ · |T|` (phases folded into the unitary). Every column in
/// `1..=window` must hold exactly one nonzero entry, at the predicted row.
pub fn recognize_shift_form(t: &OperatorExpr, window: u64) -> Option<ShiftDecomposition> {
    let (perm, weights) = structural_shift(t)?;
    let mut positive = true;
    for j in 1..=window {
        let row = perm.forward(j);
        let w = weights.value(j);
        if w.is_zero() {
            return None;
        }
        positive &= w.is_positive_real();
        let nonzero: Vec<u64> = t
            .col_support(j)
            .into_iter()
            .filter(|&i| !t.entry(i, j).is_zero())
            .collect();
        if nonzero != [row] || t.entry(row, j) != w {
            return None;
        }
    }
    let (unitary, modulus) = if positive {
        (OperatorExpr::permutation(perm.clone()), weights.clone())
    } else {
        let u = OperatorExpr::product(
            OperatorExpr::permutation(perm.clone()),
            OperatorExpr::diagonal(SeqRule::phase(weights.clone())),
        );
        (u, SeqRule::abs(weights.clone()))
    };
    Some(ShiftDecomposition {
        unitary,
        diagonal: OperatorExpr::diagonal(modulus.clone()),
        modulus,
        shift: ShiftForm::new(perm, weights),
    })
}
