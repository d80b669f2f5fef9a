//! Rank-1 lattices: nodes, the reconstruction property, a randomized
//! component-by-component search and FFT-based transforms.

use std::collections::HashSet;
use std::sync::Arc;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::anova::CoefficientMap;
use crate::error::{Error, Result};
use crate::index_sets::{difference_set, Frequency, GroupedIndexSet};

/// Nodes `x_j = (j z / M) mod 1`, `j = 0, …, M-1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rank1Lattice {
    z: Vec<u64>,
    #[serde(rename = "M")]
    m: u64,
}

impl Rank1Lattice {
    /// Entries of `z` are reduced modulo `M`.
    pub fn new(z: Vec<i64>, m: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("lattice size must be at least 1".into()));
        }
        if z.is_empty() {
            return Err(Error::InvalidParameter("generating vector is empty".into()));
        }
        let z = z
            .into_iter()
            .map(|v| (v as i128).rem_euclid(m as i128) as u64)
            .collect();
        Ok(Rank1Lattice { z, m })
    }

    pub fn z(&self) -> &[u64] {
        &self.z
    }

    pub fn size(&self) -> u64 {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// Node `j` written into `out`.
    pub fn node_into(&self, j: u64, out: &mut [f64]) {
        let m = self.m as u128;
        for (o, &zs) in out.iter_mut().zip(&self.z) {
            *o = ((j as u128 * zs as u128) % m) as f64 / self.m as f64;
        }
    }

    /// All nodes, row-major `M × d`.
    pub fn nodes(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; self.m as usize * d];
        out.par_chunks_mut(d)
            .enumerate()
            .for_each(|(j, row)| self.node_into(j as u64, row));
        out
    }

    /// `k · z mod M`.
    pub fn residue(&self, k: &[i64]) -> u64 {
        let m = self.m as i128;
        let s: i128 = k
            .iter()
            .zip(&self.z)
            .map(|(&a, &b)| (a as i128 * b as i128) % m)
            .sum();
        s.rem_euclid(m) as u64
    }

    /// Residues of every frequency of `set` in canonical order.
    pub fn residues(&self, set: &GroupedIndexSet) -> Vec<u64> {
        let m = self.m as i128;
        let mut out = Vec::with_capacity(set.len());
        for b in set.blocks() {
            let zu: Vec<i128> = b.term().coords().iter().map(|&c| self.z[c - 1] as i128).collect();
            out.extend(b.iter().map(|ell| {
                let s: i128 = ell.iter().zip(&zu).map(|(&l, &z)| (l as i128 * z) % m).sum();
                s.rem_euclid(m) as u64
            }));
        }
        out
    }

    /// True iff `k ↦ k·z mod M` is injective on `freqs`, which is the same
    /// as `m·z ≢ 0 (mod M)` for every nonzero `m ∈ D(I)`.
    pub fn is_reconstructing(&self, freqs: &[Frequency]) -> bool {
        distinct(freqs.iter().map(|k| self.residue(&k.0)), self.m)
    }

    pub fn is_reconstructing_set(&self, set: &GroupedIndexSet) -> bool {
        distinct(self.residues(set).into_iter(), self.m)
    }
}

fn distinct(residues: impl ExactSizeIterator<Item = u64>, m: u64) -> bool {
    if residues.len() as u128 > m as u128 {
        return false;
    }
    let mut seen = vec![false; m as usize];
    for r in residues {
        if std::mem::replace(&mut seen[r as usize], true) {
            return false;
        }
    }
    true
}

pub fn is_prime(n: u64) -> bool {
    primal::is_prime(n)
}

pub fn next_prime(mut n: u64) -> u64 {
    n = n.max(2);
    while !is_prime(n) {
        n += 1;
    }
    n
}

/// Largest lattice that is sampled and transformed. Node storage and the
/// prime-length FFT scratch grow linearly in `M`; beyond this size they
/// no longer fit in a few GB.
pub const MAX_SAMPLED_LATTICE: u64 = 1 << 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbcOptions {
    pub seed: u64,
    /// Candidates tried per component before the lattice size grows.
    pub candidate_budget: usize,
    /// The search brackets a working size by doubling, then bisects until
    /// the last failing and the returned size are within this ratio.
    pub tolerance: f64,
}

impl Default for CbcOptions {
    fn default() -> Self {
        CbcOptions {
            seed: 0,
            candidate_budget: 256,
            tolerance: 1.02,
        }
    }
}

/// Projections of `I` onto the leading coordinates: level `s` lists the
/// distinct vectors `k_{1..s}` as (parent at level `s-1`, `k_s`).
struct ProjectionTree {
    levels: Vec<Vec<(u32, i64)>>,
}

impl ProjectionTree {
    fn new(freqs: &[&[i64]], d: usize) -> Self {
        let mut ids = vec![0u32; freqs.len()];
        let mut levels = Vec::with_capacity(d);
        for s in 0..d {
            let mut keys: Vec<(u32, i64, usize)> = freqs
                .iter()
                .enumerate()
                .map(|(i, k)| (ids[i], k[s], i))
                .collect();
            keys.sort_unstable();
            let mut level = Vec::new();
            let mut prev: Option<(u32, i64)> = None;
            for (parent, ks, i) in keys {
                if prev != Some((parent, ks)) {
                    level.push((parent, ks));
                    prev = Some((parent, ks));
                }
                ids[i] = (level.len() - 1) as u32;
            }
            levels.push(level);
        }
        ProjectionTree { levels }
    }
}

/// Searches a reconstructing lattice for `freqs` with prime size `M`.
/// Starting at the first prime `≥ |I|`, the size doubles until the
/// component-by-component search succeeds, then bisects back towards the
/// last failure. The result is certified with
/// [`Rank1Lattice::is_reconstructing`] before it is returned.
pub fn cbc_construct(freqs: &[Frequency], opts: &CbcOptions) -> Result<Rank1Lattice> {
    let d = freqs.first().map(Frequency::dim).ok_or_else(|| {
        Error::InvalidParameter("frequency set is empty".into())
    })?;
    if freqs.iter().any(|k| k.dim() != d) {
        return Err(Error::InvalidParameter("frequencies of mixed dimension".into()));
    }
    let n = freqs.len() as u64;
    if n == 1 {
        return Rank1Lattice::new(vec![0; d], 1);
    }
    if !(opts.tolerance > 1.0) || opts.candidate_budget == 0 {
        return Err(Error::InvalidParameter("CBC needs tolerance > 1 and a positive budget".into()));
    }
    let limit = if n <= 1000 {
        difference_set(freqs).len() as u64
    } else {
        n * (n - 1) + 1
    };
    let slices: Vec<&[i64]> = freqs.iter().map(|k| k.0.as_slice()).collect();
    let tree = ProjectionTree::new(&slices, d);
    let attempt = |m: u64| -> Result<Option<Rank1Lattice>> {
        match cbc_at_size(&tree, m, opts) {
            Some(z) => {
                let lat = Rank1Lattice::new(z, m)?;
                Ok(lat.is_reconstructing(freqs).then_some(lat))
            }
            None => Ok(None),
        }
    };

    // bracket: double until a size works
    let mut lo = 0u64;
    let mut m = next_prime(n);
    let mut found = loop {
        if m > limit {
            return Err(Error::LatticeSearchExhausted { limit });
        }
        if let Some(lat) = attempt(m)? {
            break lat;
        }
        lo = m;
        m = next_prime(m.saturating_mul(2).min(limit.saturating_add(1)));
    };
    // bisect on the geometric midpoint
    while lo > 0 && (found.size() as f64) > lo as f64 * opts.tolerance {
        let mid = next_prime(((lo as f64) * (found.size() as f64)).sqrt().ceil() as u64);
        if mid >= found.size() {
            break;
        }
        match attempt(mid)? {
            Some(lat) => found = lat,
            None => lo = mid,
        }
    }
    log::debug!("cbc: M = {} for |I| = {n}", found.size());
    Ok(found)
}

fn cbc_at_size(tree: &ProjectionTree, m: u64, opts: &CbcOptions) -> Option<Vec<i64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ m.rotate_left(17));
    let mut residues: Vec<u64> = vec![0];
    let mut z = Vec::with_capacity(tree.levels.len());
    for level in &tree.levels {
        if level.len() as u64 > m {
            return None;
        }
        let candidates: Vec<u64> = if (m - 1) as usize <= opts.candidate_budget {
            let mut all: Vec<u64> = (1..m).collect();
            all.shuffle(&mut rng);
            all
        } else {
            (0..opts.candidate_budget).map(|_| rng.random_range(1..m)).collect()
        };
        let prev = &residues;
        let injective = |zs: u64, seen: &mut Seen| {
            seen.reset();
            level.iter().all(|&(parent, ks)| {
                let r = (prev[parent as usize] as i128 + ks as i128 * zs as i128).rem_euclid(m as i128) as u64;
                seen.insert(r)
            })
        };
        let dense = m as usize <= 16 * level.len().max(1024);
        let hit = candidates
            .par_iter()
            .map_init(|| Seen::new(dense, m, level.len()), |seen, &zs| injective(zs, seen))
            .position_first(|ok| ok)?;
        let zs = candidates[hit];
        residues = level
            .iter()
            .map(|&(parent, ks)| {
                (residues[parent as usize] as i128 + ks as i128 * zs as i128).rem_euclid(m as i128) as u64
            })
            .collect();
        z.push(zs as i64);
    }
    Some(z)
}

/// Residues seen so far for one candidate: generation stamps over `0..M`
/// when `M` is small, a hash set otherwise.
enum Seen {
    Stamps(Vec<u32>, u32),
    Hashed(HashSet<u64>),
}

impl Seen {
    fn new(dense: bool, m: u64, len: usize) -> Self {
        if dense {
            Seen::Stamps(vec![0; m as usize], 0)
        } else {
            Seen::Hashed(HashSet::with_capacity(len))
        }
    }

    fn reset(&mut self) {
        match self {
            Seen::Stamps(_, g) => *g += 1,
            Seen::Hashed(h) => h.clear(),
        }
    }

    /// False when `r` was already present.
    fn insert(&mut self, r: u64) -> bool {
        match self {
            Seen::Stamps(s, g) => std::mem::replace(&mut s[r as usize], *g) != *g,
            Seen::Hashed(h) => h.insert(r),
        }
    }
}

fn plan(m: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(m)
    } else {
        planner.plan_fft_forward(m)
    }
}

/// Values of `Σ_k ĉ_k e^{2πi k·x}` at all lattice nodes: coefficients are
/// bucketed by `k·z mod M` and one inverse FFT of length `M` follows.
pub fn lattice_evaluate(coeffs: &CoefficientMap, lat: &Rank1Lattice) -> Vec<Complex64> {
    let m = lat.size() as usize;
    let mut buckets = vec![Complex64::new(0.0, 0.0); m];
    for (r, c) in lat.residues(coeffs.index_set()).into_iter().zip(coeffs.values()) {
        buckets[r as usize] += c;
    }
    plan(m, true).process(&mut buckets);
    buckets
}

/// `F* y` on the lattice: one forward FFT, then a lookup at `k·z mod M`.
pub fn lattice_adjoint(values: &[Complex64], set: &GroupedIndexSet, lat: &Rank1Lattice) -> Result<Vec<Complex64>> {
    let m = lat.size() as usize;
    if values.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            got: values.len(),
        });
    }
    let mut spec = values.to_vec();
    plan(m, false).process(&mut spec);
    Ok(lat.residues(set).into_iter().map(|r| spec[r as usize]).collect())
}

/// `f̂_k = M^{-1} Σ_j y_j e^{-2πi j (k·z)/M}`, exact for polynomials on
/// `set` whenever the lattice is reconstructing for it.
pub fn lattice_reconstruct(values: &[Complex64], set: &GroupedIndexSet, lat: &Rank1Lattice) -> Result<CoefficientMap> {
    let scale = 1.0 / lat.size() as f64;
    let mut v = lattice_adjoint(values, set, lat)?;
    v.iter_mut().for_each(|c| *c *= scale);
    CoefficientMap::new(set.clone(), v)
}

/// The dual lattice `{ h : h·z ≡ 0 (mod M) }` inside `[-K, K]^d`.
#[derive(Clone, Debug)]
pub struct DualLatticeWindow {
    pub lattice: Rank1Lattice,
    pub radius: i64,
}

impl DualLatticeWindow {
    /// Nonzero members of the window.
    pub fn members(&self) -> Vec<Vec<i64>> {
        let d = self.lattice.dim();
        let side = (2 * self.radius + 1) as usize;
        let total = side.pow(d as u32);
        let mut out = Vec::new();
        let mut h = vec![0i64; d];
        for mut idx in 0..total {
            for s in (0..d).rev() {
                h[s] = (idx % side) as i64 - self.radius;
                idx /= side;
            }
            if h.iter().any(|&x| x != 0) && self.lattice.residue(&h) == 0 {
                out.push(h.clone());
            }
        }
        out
    }
}

/// `ĉ_k + Σ_{h ∈ Λ^⊥ \ {0}} ĉ_{k+h}` over the window, i.e. what lattice
/// reconstruction returns at `k` for a function with the given exact
/// coefficients. Members on the window boundary must carry total mass
/// below `boundary_tol`, otherwise the window is reported as too small.
pub fn aliasing_sum<F>(exact: F, k: &[i64], window: &DualLatticeWindow, boundary_tol: f64) -> Result<Complex64>
where
    F: Fn(&[i64]) -> Complex64,
{
    let mut acc = exact(k);
    let mut boundary = 0.0;
    let mut kh = vec![0i64; k.len()];
    for h in window.members() {
        for ((o, a), b) in kh.iter_mut().zip(k).zip(&h) {
            *o = a + b;
        }
        let c = exact(&kh);
        acc += c;
        if h.iter().any(|x| x.abs() == window.radius) {
            boundary += c.norm();
        }
    }
    if boundary > boundary_tol {
        return Err(Error::WindowTooSmall {
            radius: window.radius,
            mass: boundary,
        });
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index_sets::{full_grid, hyperbolic_cross, TermFamily};
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::TAU;

    fn freqs(v: &[&[i64]]) -> Vec<Frequency> {
        v.iter().map(|k| Frequency(k.to_vec())).collect()
    }

    fn cube(d: usize, r: i64) -> Vec<Frequency> {
        let side = (2 * r + 1) as usize;
        (0..side.pow(d as u32))
            .map(|mut i| {
                let mut k = vec![0; d];
                for s in (0..d).rev() {
                    k[s] = (i % side) as i64 - r;
                    i /= side;
                }
                Frequency(k)
            })
            .collect()
    }

    fn naive_eval(map: &CoefficientMap, x: &[f64]) -> Complex64 {
        map.index_set()
            .frequencies()
            .zip(map.values())
            .map(|(k, c)| {
                let t: f64 = k.0.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum();
                c * Complex64::from_polar(1.0, TAU * t)
            })
            .sum()
    }

    #[test]
    fn node_examples() {
        let l = Rank1Lattice::new(vec![1], 4).unwrap();
        assert_eq!(l.nodes(), vec![0.0, 0.25, 0.5, 0.75]);
        let l = Rank1Lattice::new(vec![1, 3], 9).unwrap();
        let n = l.nodes();
        assert_eq!(&n[4..6], &[2.0 / 9.0, 6.0 / 9.0]);
        assert_eq!(&n[0..2], &[0.0, 0.0]);
        assert!(n.iter().all(|x| (x * 9.0 - (x * 9.0).round()).abs() < 1e-12));
        assert_eq!(Rank1Lattice::new(vec![-1, 12], 9).unwrap().z(), &[8, 3]);
    }

    #[test]
    fn reconstruction_examples() {
        let i = cube(2, 1);
        assert!(Rank1Lattice::new(vec![1, 3], 9).unwrap().is_reconstructing(&i));
        assert!(!Rank1Lattice::new(vec![1, 1], 9).unwrap().is_reconstructing(&i));
        assert!(!Rank1Lattice::new(vec![1, 3], 8).unwrap().is_reconstructing(&i));
    }

    #[test]
    fn injectivity_matches_difference_condition() {
        let i = cube(2, 1);
        let diffs = difference_set(&i);
        for m in 1..30u64 {
            for z1 in 0..m as i64 {
                for z2 in 0..m as i64 {
                    let l = Rank1Lattice::new(vec![z1, z2], m).unwrap();
                    let via_diff = diffs.iter().all(|h| h.0.iter().all(|&x| x == 0) || l.residue(&h.0) != 0);
                    assert_eq!(l.is_reconstructing(&i), via_diff, "z=({z1},{z2}) M={m}");
                }
            }
        }
    }

    #[test]
    fn cbc_examples() {
        let zero = freqs(&[&[0, 0, 0]]);
        let l = cbc_construct(&zero, &CbcOptions::default()).unwrap();
        assert_eq!((l.size(), l.z()), (1, &[0u64, 0, 0][..]));

        let line = freqs(&[&[-1, 0], &[0, 0], &[1, 0]]);
        let l = cbc_construct(&line, &CbcOptions::default()).unwrap();
        assert!(is_prime(l.size()) && l.size() >= 3);
        assert!(l.is_reconstructing(&line));

        let c = cube(3, 2);
        let l = cbc_construct(&c, &CbcOptions { seed: 7, ..Default::default() }).unwrap();
        assert!(l.is_reconstructing(&c));
        assert!(l.size() as usize >= c.len() && l.size() <= difference_set(&c).len() as u64);
    }

    #[test]
    fn cbc_is_deterministic() {
        let fam = TermFamily::up_to_order(4, 2).unwrap();
        let set = GroupedIndexSet::order_dependent(&fam, |u| hyperbolic_cross(u, 30.0)).unwrap();
        let f: Vec<Frequency> = set.frequencies().collect();
        let o = CbcOptions { seed: 3, ..Default::default() };
        assert_eq!(cbc_construct(&f, &o).unwrap(), cbc_construct(&f, &o).unwrap());
    }

    #[test]
    fn evaluate_examples() {
        let fam = TermFamily::up_to_order(2, 2).unwrap();
        let set = GroupedIndexSet::order_dependent(&fam, |u| full_grid(u, 4)).unwrap();
        let lat = Rank1Lattice::new(vec![1, 5], 31).unwrap();
        let mut c = CoefficientMap::zeros(set.clone());
        c.values_mut()[0] = Complex64::new(1.0, 0.0);
        assert!(lattice_evaluate(&c, &lat).iter().all(|v| (v - 1.0).norm() < 1e-14));

        let mut c = CoefficientMap::zeros(set.clone());
        // (1,0)·z = 1
        c.values_mut()[set.position(&[1, 0]).unwrap()] = Complex64::new(1.0, 0.0);
        for (j, v) in lattice_evaluate(&c, &lat).iter().enumerate() {
            assert!((v - Complex64::from_polar(1.0, TAU * j as f64 / 31.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn planted_alias_shifts_the_mean() {
        let lat = Rank1Lattice::new(vec![1, 3], 9).unwrap();
        let fam = TermFamily::up_to_order(2, 2).unwrap();
        let set = GroupedIndexSet::order_dependent(&fam, |u| full_grid(u, 2)).unwrap();
        let exact = |k: &[i64]| match k {
            [0, 0] => Complex64::new(0.5, 0.0),
            [0, 3] => Complex64::new(0.25, -1.0),
            _ => Complex64::new(0.0, 0.0),
        };
        let samples: Vec<Complex64> = (0..9)
            .map(|j| {
                let x = [j as f64 / 9.0, (3 * j % 9) as f64 / 9.0];
                exact(&[0, 0]) + exact(&[0, 3]) * Complex64::from_polar(1.0, TAU * 3.0 * x[1])
            })
            .collect();
        let rec = lattice_reconstruct(&samples, &set, &lat).unwrap();
        let window = DualLatticeWindow { lattice: lat, radius: 4 };
        let predicted = aliasing_sum(exact, &[0, 0], &window, 1e-14).unwrap();
        assert!((rec.get(&[0, 0]).unwrap() - predicted).norm() < 1e-13);
        assert!((predicted - Complex64::new(0.75, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn window_too_small_is_reported() {
        let lat = Rank1Lattice::new(vec![1, 3], 9).unwrap();
        let window = DualLatticeWindow { lattice: lat, radius: 3 };
        let exact = |k: &[i64]| if k == [0, 3] { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
        assert!(matches!(
            aliasing_sum(exact, &[0, 0], &window, 1e-12),
            Err(Error::WindowTooSmall { radius: 3, .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn fft_paths_match_naive_sums(seed in 0u64..1000, m in 5u64..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let fam = TermFamily::up_to_order(3, 2).unwrap();
            let set = GroupedIndexSet::order_dependent(&fam, |u| full_grid(u, 4)).unwrap();
            let c = CoefficientMap::from_fn(set.clone(), |_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let z: Vec<i64> = (0..3).map(|_| rng.random_range(0..m as i64)).collect();
            let lat = Rank1Lattice::new(z, m).unwrap();
            let vals = lattice_evaluate(&c, &lat);
            let nodes = lat.nodes();
            let scale: f64 = c.values().iter().map(|v| v.norm()).sum();
            for j in 0..m as usize {
                let naive = naive_eval(&c, &nodes[3 * j..3 * j + 3]);
                prop_assert!((vals[j] - naive).norm() <= 1e-12 * scale);
            }
            let adj = lattice_adjoint(&vals, &set, &lat).unwrap();
            for (k, a) in set.frequencies().zip(&adj) {
                let naive: Complex64 = (0..m as usize).map(|j| {
                    let t: f64 = k.0.iter().zip(&nodes[3 * j..3 * j + 3]).map(|(&a, &b)| a as f64 * b).sum();
                    vals[j] * Complex64::from_polar(1.0, -TAU * t)
                }).sum();
                prop_assert!((a - naive).norm() <= 1e-11 * scale * m as f64);
            }
        }

        #[test]
        fn cbc_round_trip_is_exact(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let fam = TermFamily::up_to_order(5, 2).unwrap();
            let set = GroupedIndexSet::order_dependent(&fam, |u| hyperbolic_cross(u, 12.0)).unwrap();
            let f: Vec<Frequency> = set.frequencies().collect();
            let lat = cbc_construct(&f, &CbcOptions { seed, ..Default::default() }).unwrap();
            prop_assert!(lat.is_reconstructing_set(&set));
            let c = CoefficientMap::from_fn(set.clone(), |_| Complex64::new(rng.random::<f64>(), rng.random::<f64>()));
            let rec = lattice_reconstruct(&lattice_evaluate(&c, &lat), &set, &lat).unwrap();
            let err: f64 = rec.values().iter().zip(c.values()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(err / c.norm_sq().sqrt() < 1e-10);
        }
    }
}

