//! Term subsets, term families and grouped frequency index sets.
//!
//! Coordinates are 1-based throughout, matching the usual `u ⊆ {1, …, d}`
//! convention. A [`GroupedIndexSet`] stores one low-dimensional block `I_u`
//! per term and keeps them in canonical order: terms sorted by
//! `(|u|, lexicographic)`, frequencies inside a block sorted
//! lexicographically. That order fixes the coefficient layout everywhere
//! else in the crate.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A frequency `k ∈ Z^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Frequency(pub Vec<i64>);

impl Frequency {
    pub fn zero(d: usize) -> Self {
        Frequency(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    /// Coordinates of the nonzero entries, ascending.
    pub fn support(&self) -> TermSubset {
        TermSubset(
            self.0
                .iter()
                .enumerate()
                .filter(|(_, &k)| k != 0)
                .map(|(i, _)| i + 1)
                .collect(),
        )
    }
}

impl From<Vec<i64>> for Frequency {
    fn from(v: Vec<i64>) -> Self {
        Frequency(v)
    }
}

/// A coordinate subset `u ⊆ {1, …, d}` stored as strictly increasing
/// 1-based indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct TermSubset(Vec<usize>);

impl TermSubset {
    pub fn new(coords: Vec<usize>) -> Result<Self> {
        if coords.first() == Some(&0) || coords.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidTerm(coords));
        }
        Ok(TermSubset(coords))
    }

    /// Builds a term from coordinates in any order, dropping duplicates.
    pub fn from_unsorted(mut coords: Vec<usize>) -> Result<Self> {
        coords.sort_unstable();
        coords.dedup();
        Self::new(coords)
    }

    pub fn empty() -> Self {
        TermSubset(Vec::new())
    }

    pub fn coords(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, coord: usize) -> bool {
        self.0.binary_search(&coord).is_ok()
    }

    pub fn is_subset_of(&self, other: &TermSubset) -> bool {
        self.0.iter().all(|c| other.contains(*c))
    }

    /// Fails when a coordinate exceeds `d`.
    pub fn check_dim(&self, d: usize) -> Result<()> {
        match self.0.last() {
            Some(&c) if c > d => Err(Error::CoordinateOutOfRange { coord: c, d }),
            _ => Ok(()),
        }
    }

    /// All subsets `v ⊆ u`, including `∅` and `u` itself, in canonical order.
    pub fn subsets(&self) -> Vec<TermSubset> {
        let n = self.0.len();
        let mut out: Vec<TermSubset> = (0u64..(1u64 << n))
            .map(|mask| {
                TermSubset(
                    (0..n)
                        .filter(|i| mask & (1 << i) != 0)
                        .map(|i| self.0[i])
                        .collect(),
                )
            })
            .collect();
        out.sort();
        out
    }

    /// Subsets obtained by removing exactly one coordinate.
    pub fn maximal_proper_subsets(&self) -> impl Iterator<Item = TermSubset> + '_ {
        (0..self.0.len()).map(move |skip| {
            TermSubset(
                self.0
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, &c)| c)
                    .collect(),
            )
        })
    }
}

impl Ord for TermSubset {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for TermSubset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl TryFrom<Vec<usize>> for TermSubset {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        TermSubset::new(v)
    }
}

impl From<TermSubset> for Vec<usize> {
    fn from(u: TermSubset) -> Self {
        u.0
    }
}

impl fmt::Display for TermSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

/// Checks the inclusion condition `u ∈ U ⇒ v ∈ U for all v ⊂ u`.
pub fn check_downward_closed<'a>(terms: impl IntoIterator<Item = &'a TermSubset>) -> Result<()> {
    let set: BTreeSet<&TermSubset> = terms.into_iter().collect();
    for u in &set {
        for v in u.maximal_proper_subsets() {
            if !set.contains(&v) {
                return Err(Error::NotDownwardClosed {
                    missing: v,
                    parent: (*u).clone(),
                });
            }
        }
    }
    Ok(())
}

/// A downward-closed family `U ⊆ P({1, …, d})`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TermFamilyDoc", into = "TermFamilyDoc")]
pub struct TermFamily {
    d: usize,
    terms: BTreeSet<TermSubset>,
}

#[derive(Serialize, Deserialize)]
struct TermFamilyDoc {
    d: usize,
    terms: Vec<TermSubset>,
}

impl TryFrom<TermFamilyDoc> for TermFamily {
    type Error = Error;

    fn try_from(doc: TermFamilyDoc) -> Result<Self> {
        TermFamily::new(doc.d, doc.terms)
    }
}

impl From<TermFamily> for TermFamilyDoc {
    fn from(f: TermFamily) -> Self {
        TermFamilyDoc {
            d: f.d,
            terms: f.terms.into_iter().collect(),
        }
    }
}

impl TermFamily {
    /// Validates coordinates and downward closedness.
    pub fn new(d: usize, terms: impl IntoIterator<Item = TermSubset>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        let terms: BTreeSet<TermSubset> = terms.into_iter().collect();
        for u in &terms {
            u.check_dim(d)?;
        }
        check_downward_closed(&terms)?;
        Ok(TermFamily { d, terms })
    }

    /// The smallest downward-closed family containing every given term.
    pub fn downward_closure(d: usize, terms: impl IntoIterator<Item = TermSubset>) -> Result<Self> {
        let mut out = BTreeSet::new();
        for u in terms {
            u.check_dim(d)?;
            if out.contains(&u) {
                continue;
            }
            out.extend(u.subsets());
        }
        Ok(TermFamily { d, terms: out })
    }

    /// `U_{d_s} = { u ⊆ D : |u| ≤ d_s }`.
    pub fn up_to_order(d: usize, ds: usize) -> Result<Self> {
        if d == 0 || ds > d {
            return Err(Error::InvalidParameter(format!(
                "superposition threshold {ds} must lie in 0..={d}"
            )));
        }
        let mut terms = BTreeSet::new();
        let mut current = vec![TermSubset::empty()];
        terms.insert(TermSubset::empty());
        for _ in 0..ds {
            let mut next = Vec::new();
            for u in &current {
                let start = u.0.last().copied().unwrap_or(0) + 1;
                for c in start..=d {
                    let mut v = u.0.clone();
                    v.push(c);
                    next.push(TermSubset(v));
                }
            }
            terms.extend(next.iter().cloned());
            current = next;
        }
        Ok(TermFamily { d, terms })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn contains(&self, u: &TermSubset) -> bool {
        self.terms.contains(u)
    }

    /// Terms in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = &TermSubset> {
        self.terms.iter()
    }

    pub fn max_order(&self) -> usize {
        self.terms.iter().map(TermSubset::len).max().unwrap_or(0)
    }

    pub fn is_subfamily_of(&self, other: &TermFamily) -> bool {
        self.d == other.d && self.terms.is_subset(&other.terms)
    }

    /// Removes `u` together with every superset of `u`, which keeps the
    /// family downward closed.
    pub fn without(&self, u: &TermSubset) -> TermFamily {
        TermFamily {
            d: self.d,
            terms: self
                .terms
                .iter()
                .filter(|v| !u.is_subset_of(v))
                .cloned()
                .collect(),
        }
    }
}

/// A low-dimensional frequency block `I_u ⊂ (Z \ {0})^{|u|}`.
///
/// Vectors are stored flat in lexicographic order. The empty term holds a
/// single zero-length vector, representing `I_∅ = {0}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LowDimIndexSet {
    term: TermSubset,
    len: usize,
    data: Vec<i64>,
}

impl LowDimIndexSet {
    /// Validates, sorts and deduplicates the given vectors.
    pub fn from_vectors(term: TermSubset, mut freqs: Vec<Vec<i64>>) -> Result<Self> {
        let dim = term.len();
        if dim == 0 {
            if freqs.iter().any(|f| !f.is_empty()) {
                return Err(Error::DimensionMismatch { expected: 0, got: 1 });
            }
            return Ok(Self::mean(term));
        }
        for f in &freqs {
            if f.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: f.len(),
                });
            }
            if f.contains(&0) {
                return Err(Error::ZeroEntry(f.clone()));
            }
        }
        freqs.sort_unstable();
        freqs.dedup();
        let len = freqs.len();
        Ok(LowDimIndexSet {
            term,
            len,
            data: freqs.into_iter().flatten().collect(),
        })
    }

    fn mean(term: TermSubset) -> Self {
        LowDimIndexSet {
            term,
            len: 1,
            data: Vec::new(),
        }
    }

    pub fn term(&self) -> &TermSubset {
        &self.term
    }

    /// `|u|`, the length of each stored vector.
    pub fn dim(&self) -> usize {
        self.term.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> &[i64] {
        let dim = self.dim();
        &self.data[i * dim..(i + 1) * dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[i64]> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Position of `ell` inside the block, if present.
    pub fn position(&self, ell: &[i64]) -> Option<usize> {
        if ell.len() != self.dim() {
            return None;
        }
        if self.dim() == 0 {
            return Some(0);
        }
        let (mut lo, mut hi) = (0, self.len);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.get(mid).cmp(ell) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    /// Largest `|ℓ_s|` over the block, per local axis.
    pub fn max_abs_per_axis(&self) -> Vec<i64> {
        let mut out = vec![0; self.dim()];
        for ell in self.iter() {
            for (o, &l) in out.iter_mut().zip(ell) {
                *o = (*o).max(l.abs());
            }
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        self.iter().all(|ell| {
            let neg: Vec<i64> = ell.iter().map(|l| -l).collect();
            self.position(&neg).is_some()
        })
    }
}

/// `P_u ℓ`: places `ℓ` on the coordinates of `u` and zeros elsewhere.
pub fn embed(term: &TermSubset, freq: &[i64], d: usize) -> Result<Frequency> {
    term.check_dim(d)?;
    if freq.len() != term.len() {
        return Err(Error::DimensionMismatch {
            expected: term.len(),
            got: freq.len(),
        });
    }
    if freq.contains(&0) {
        return Err(Error::ZeroEntry(freq.to_vec()));
    }
    let mut k = vec![0; d];
    for (&c, &l) in term.coords().iter().zip(freq) {
        k[c - 1] = l;
    }
    Ok(Frequency(k))
}

/// Full grid `{-N/2, …, N/2 - 1}^{|u|}` restricted to nonzero entries.
pub fn full_grid(term: &TermSubset, n: u64) -> Result<LowDimIndexSet> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::OddBandwidth(n));
    }
    let half = (n / 2) as i64;
    let axis: Vec<i64> = (-half..half).filter(|&l| l != 0).collect();
    let dim = term.len();
    if dim == 0 {
        return Ok(LowDimIndexSet::mean(term.clone()));
    }
    let total = axis.len().pow(dim as u32);
    let mut data = Vec::with_capacity(total * dim);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        data.extend(idx.iter().map(|&i| axis[i]));
        for pos in (0..dim).rev() {
            idx[pos] += 1;
            if idx[pos] < axis.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
    Ok(LowDimIndexSet {
        term: term.clone(),
        len: total,
        data,
    })
}

/// Hyperbolic cross of dominating mixed smoothness 3/2:
/// `{ ℓ ∈ (Z \ {0})^{|u|} : ∏_s (1 + |ℓ_s|)^{3/2} ≤ N }`.
///
/// The test is evaluated as `∏_s (1 + |ℓ_s|)^3 ≤ N^2` in integer arithmetic
/// when `N` is integral, so boundary cases are decided exactly.
pub fn hyperbolic_cross(term: &TermSubset, n: f64) -> Result<LowDimIndexSet> {
    if !(n >= 1.0) || !n.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "hyperbolic cross cutoff must be a finite number >= 1, got {n}"
        )));
    }
    let exact = n.fract() == 0.0 && n < 9.0e15;
    let n_int = n as u128;
    let fits = |p: u128| -> bool {
        if exact {
            p.checked_pow(3).is_some_and(|c| c <= n_int * n_int)
        } else {
            (p as f64).powi(3) <= n * n
        }
    };
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(term.len());
    hc_rec(term.len(), 1, &fits, &mut cur, &mut out);
    LowDimIndexSet::from_vectors(term.clone(), out)
}

fn hc_rec(
    dim: usize,
    prod: u128,
    fits: &dyn Fn(u128) -> bool,
    cur: &mut Vec<i64>,
    out: &mut Vec<Vec<i64>>,
) {
    if cur.len() == dim {
        out.push(cur.clone());
        return;
    }
    // remaining axes contribute at least a factor 2 each
    let rest = 1u128 << (dim - cur.len() - 1);
    let mut m: i64 = 1;
    loop {
        let p = prod * (1 + m as u128);
        if !fits(p * rest) {
            break;
        }
        for s in [m, -m] {
            cur.push(s);
            hc_rec(dim, p, fits, cur, out);
            cur.pop();
        }
        m += 1;
    }
}

/// `{ ℓ ∈ (Z \ {0})^{|u|} : w(P_u ℓ) ≤ N_u }` for a weight that is
/// nondecreasing in every `|k_s|`.
///
/// The search is a depth-first enumeration that fixes one axis at a time
/// and bounds the unassigned axes from below by setting them to `±1`.
/// `axis_cap` bounds `|ℓ_s|`; reaching it while the set still grows is an
/// error instead of a silent truncation.
pub fn weighted_index_set<W>(
    term: &TermSubset,
    d: usize,
    weight: W,
    cutoff: f64,
    axis_cap: i64,
) -> Result<LowDimIndexSet>
where
    W: Fn(&[i64]) -> f64,
{
    term.check_dim(d)?;
    if term.is_empty() {
        return Ok(LowDimIndexSet::mean(term.clone()));
    }
    let mut k = vec![0i64; d];
    for &c in term.coords() {
        k[c - 1] = 1;
    }
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(term.len());
    weighted_rec(term, &weight, cutoff, axis_cap, &mut k, &mut cur, &mut out)?;
    LowDimIndexSet::from_vectors(term.clone(), out)
}

fn weighted_rec(
    term: &TermSubset,
    weight: &dyn Fn(&[i64]) -> f64,
    cutoff: f64,
    cap: i64,
    k: &mut [i64],
    cur: &mut Vec<i64>,
    out: &mut Vec<Vec<i64>>,
) -> Result<()> {
    let pos = cur.len();
    if pos == term.len() {
        out.push(cur.clone());
        return Ok(());
    }
    let axis = term.coords()[pos] - 1;
    for sign in [1i64, -1] {
        let mut m = 1i64;
        loop {
            k[axis] = sign * m;
            if weight(k) > cutoff {
                break;
            }
            if m > cap {
                return Err(Error::EnumerationCap {
                    term: term.clone(),
                    cap,
                });
            }
            cur.push(sign * m);
            weighted_rec(term, weight, cutoff, cap, k, cur, out)?;
            cur.pop();
            m += 1;
        }
    }
    k[axis] = 1;
    Ok(())
}

/// `I(U) = ⋃_{u ∈ U} P_u I_u` with its block structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupedIndexSet {
    d: usize,
    blocks: Vec<LowDimIndexSet>,
    offsets: Vec<usize>,
}

impl GroupedIndexSet {
    /// Assembles the blocks of `family`. Every term needs a block; extra
    /// blocks for terms outside the family are ignored.
    pub fn new(family: &TermFamily, sets: &BTreeMap<TermSubset, LowDimIndexSet>) -> Result<Self> {
        let blocks = family
            .iter()
            .map(|u| {
                sets.get(u)
                    .cloned()
                    .ok_or_else(|| Error::MissingBlock(u.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_blocks(family.dim(), blocks)
    }

    /// Builds from blocks in any order; they are sorted canonically.
    pub fn from_blocks(d: usize, mut blocks: Vec<LowDimIndexSet>) -> Result<Self> {
        blocks.sort_by(|a, b| a.term.cmp(&b.term));
        for w in blocks.windows(2) {
            if w[0].term == w[1].term {
                return Err(Error::InvalidParameter(format!(
                    "duplicate block for term {}",
                    w[0].term
                )));
            }
        }
        for b in &blocks {
            b.term.check_dim(d)?;
        }
        check_downward_closed(blocks.iter().map(|b| &b.term))?;
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for b in &blocks {
            acc += b.len();
            offsets.push(acc);
        }
        Ok(GroupedIndexSet { d, blocks, offsets })
    }

    /// Same low-dimensional set for every term of a given order:
    /// `sets_by_order[j]` is used for all `|u| = j`, `j ≥ 1`.
    pub fn order_dependent<F>(family: &TermFamily, mut block_for: F) -> Result<Self>
    where
        F: FnMut(&TermSubset) -> Result<LowDimIndexSet>,
    {
        let blocks = family
            .iter()
            .map(|u| {
                if u.is_empty() {
                    Ok(LowDimIndexSet::mean(u.clone()))
                } else {
                    block_for(u)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_blocks(family.dim(), blocks)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Total number of frequencies `|I(U)|`.
    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn blocks(&self) -> &[LowDimIndexSet] {
        &self.blocks
    }

    /// Index range of block `i` inside the flat coefficient layout.
    pub fn block_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn block_index(&self, term: &TermSubset) -> Option<usize> {
        self.blocks.binary_search_by(|b| b.term.cmp(term)).ok()
    }

    pub fn family(&self) -> TermFamily {
        TermFamily {
            d: self.d,
            terms: self.blocks.iter().map(|b| b.term.clone()).collect(),
        }
    }

    /// Flat position of a full frequency `k`, if it belongs to `I(U)`.
    pub fn position(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.d {
            return None;
        }
        let support = Frequency(k.to_vec()).support();
        let b = self.block_index(&support)?;
        let ell: Vec<i64> = support.coords().iter().map(|&c| k[c - 1]).collect();
        self.blocks[b]
            .position(&ell)
            .map(|p| self.offsets[b] + p)
    }

    /// All embedded frequencies in canonical order.
    pub fn frequencies(&self) -> impl Iterator<Item = Frequency> + '_ {
        self.blocks.iter().flat_map(move |b| {
            b.iter().map(move |ell| {
                let mut k = vec![0; self.d];
                for (&c, &l) in b.term.coords().iter().zip(ell) {
                    k[c - 1] = l;
                }
                Frequency(k)
            })
        })
    }

    /// Restriction to a subfamily of terms.
    pub fn restrict(&self, family: &TermFamily) -> Result<GroupedIndexSet> {
        let blocks = family
            .iter()
            .map(|u| {
                self.block_index(u)
                    .map(|i| self.blocks[i].clone())
                    .ok_or_else(|| Error::NotSubfamily(u.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_blocks(self.d, blocks)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Serialize, Deserialize)]
struct GroupedDoc {
    d: usize,
    blocks: Vec<BlockDoc>,
}

#[derive(Serialize, Deserialize)]
struct BlockDoc {
    u: TermSubset,
    freqs: Vec<Vec<i64>>,
}

impl Serialize for GroupedIndexSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GroupedDoc {
            d: self.d,
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockDoc {
                    u: b.term.clone(),
                    freqs: b.iter().map(<[i64]>::to_vec).collect(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroupedIndexSet {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let doc = GroupedDoc::deserialize(de)?;
        let blocks = doc
            .blocks
            .into_iter()
            .map(|b| LowDimIndexSet::from_vectors(b.u, b.freqs))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        GroupedIndexSet::from_blocks(doc.d, blocks).map_err(serde::de::Error::custom)
    }
}

/// `D(I) = { k - h : k, h ∈ I }`.
pub fn difference_set<'a>(freqs: impl IntoIterator<Item = &'a Frequency>) -> HashSet<Frequency> {
    let freqs: Vec<&Frequency> = freqs.into_iter().collect();
    let mut out = HashSet::with_capacity(freqs.len() * 2);
    for k in &freqs {
        for h in &freqs {
            out.insert(Frequency(
                k.0.iter().zip(&h.0).map(|(a, b)| a - b).collect(),
            ));
        }
    }
    out
}

/// Whether `|D(I)| ≥ bound`, stopping as soon as `bound` distinct
/// differences have been seen.
pub fn difference_set_at_least(freqs: &[Frequency], bound: usize) -> bool {
    let mut seen = HashSet::with_capacity(bound.min(1 << 24));
    for k in freqs {
        for h in freqs {
            seen.insert(Frequency(k.0.iter().zip(&h.0).map(|(a, b)| a - b).collect()));
            if seen.len() >= bound {
                return true;
            }
        }
    }
    false
}

/// `|U_{d_s}| = Σ_{n=0}^{d_s} C(d, n)`.
pub fn family_cardinality(d: usize, ds: usize) -> u128 {
    let mut binom: u128 = 1;
    let mut sum = 0;
    for n in 0..=ds.min(d) {
        sum += binom;
        binom = binom * (d - n) as u128 / (n + 1) as u128;
    }
    sum
}

/// The polynomial-growth bound `(e·d/d_s)^{d_s}` on `|U_{d_s}|`.
pub fn family_cardinality_bound(d: usize, ds: usize) -> f64 {
    (std::f64::consts::E * d as f64 / ds as f64).powi(ds as i32)
}

/// Upper bounds on `|D(I(U))|` for symmetric blocks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DifferenceBounds {
    /// `Σ_{u ∈ U} Σ_{v ⊆ u} |I_u| |I_v|`
    pub fine: u128,
    /// `2^{max |u|} |U| max |I_u|^2`
    pub coarse: u128,
}

pub fn diff_cardinality_bound(set: &GroupedIndexSet) -> DifferenceBounds {
    let sizes: BTreeMap<&TermSubset, u128> = set
        .blocks
        .iter()
        .map(|b| (&b.term, b.len() as u128))
        .collect();
    let fine = set
        .blocks
        .iter()
        .map(|b| {
            let own = b.len() as u128;
            b.term
                .subsets()
                .iter()
                .map(|v| own * sizes.get(v).copied().unwrap_or(0))
                .sum::<u128>()
        })
        .sum();
    let max_block = sizes.values().copied().max().unwrap_or(0);
    let max_order = set.blocks.iter().map(|b| b.dim()).max().unwrap_or(0);
    let coarse = (1u128 << max_order) * sizes.len() as u128 * max_block * max_block;
    DifferenceBounds { fine, coarse }
}

/// `(2e·d/d_s)^{d_s} max |I_u|^2`, the coarse bound specialised to `U_{d_s}`.
pub fn diff_cardinality_bound_ds(d: usize, ds: usize, max_block: usize) -> f64 {
    (2.0 * std::f64::consts::E * d as f64 / ds as f64).powi(ds as i32)
        * (max_block as f64).powi(2)
}
