//! The block-structured Fourier matrix `F = (e^{2πi k·x})_{x ∈ X, k ∈ I(U)}`,
//! applied matrix-free, and the least-squares solvers built on it.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anova::{cis_turns, CoefficientMap};
use crate::error::{Error, Result};
use crate::index_sets::GroupedIndexSet;
use crate::lattice::{lattice_adjoint, lattice_evaluate, Rank1Lattice};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NodeProvenance {
    Scattered { seed: u64 },
    Lattice { z: Vec<u64>, #[serde(rename = "M")] m: u64 },
    Data,
}

/// Sampling nodes in `[0,1)^d`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSet {
    d: usize,
    points: Vec<f64>,
    provenance: NodeProvenance,
}

impl NodeSet {
    pub fn new(d: usize, points: Vec<f64>, provenance: NodeProvenance) -> Result<Self> {
        if d == 0 || points.len() % d != 0 {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: points.len(),
            });
        }
        if let Some(x) = points.iter().find(|x| !(0.0..1.0).contains(*x)) {
            return Err(Error::InvalidParameter(format!("node coordinate {x} outside [0,1)")));
        }
        Ok(NodeSet { d, points, provenance })
    }

    /// Reduces coordinates modulo 1 and reports how many needed it.
    pub fn from_raw(d: usize, mut points: Vec<f64>) -> Result<(Self, usize)> {
        let mut reduced = 0;
        for x in &mut points {
            if !(0.0..1.0).contains(x) {
                let r = *x - x.floor();
                *x = if r >= 1.0 { 0.0 } else { r };
                reduced += 1;
            }
        }
        Ok((Self::new(d, points, NodeProvenance::Data)?, reduced))
    }

    pub fn from_lattice(lat: &Rank1Lattice) -> Self {
        NodeSet {
            d: lat.dim(),
            points: lat.nodes(),
            provenance: NodeProvenance::Lattice {
                z: lat.z().to_vec(),
                m: lat.size(),
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.d..(j + 1) * self.d]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn provenance(&self) -> &NodeProvenance {
        &self.provenance
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks(self.d)
    }
}

/// `m` i.i.d. uniform nodes from a seeded ChaCha8 stream.
pub fn uniform_nodes(d: usize, m: usize, seed: u64) -> Result<NodeSet> {
    if m == 0 || d == 0 {
        return Err(Error::InvalidParameter("need at least one node and one dimension".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..m * d).map(|_| rng.random::<f64>()).collect();
    NodeSet::new(d, points, NodeProvenance::Scattered { seed })
}

/// A linear map from coefficients on `I(U)` to values at nodes together
/// with its adjoint.
pub trait FourierOperator: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn forward(&self, coeffs: &[Complex64]) -> Vec<Complex64>;
    fn adjoint(&self, values: &[Complex64]) -> Vec<Complex64>;
}

const ADJOINT_CHUNK: usize = 2048;
const ANCHOR_EVERY: i64 = 16;
const MAX_ORDER: usize = 16;

/// Direct `O(|X| |I|)` kernel. Each block only reads the coordinates of its
/// term; exponentials are tabulated per node with exact argument reduction
/// every few multiples and recurrences in between.
pub struct DirectOperator<'a> {
    nodes: &'a NodeSet,
    set: &'a GroupedIndexSet,
    /// Largest `|ℓ_s|` needed per coordinate.
    bandwidth: Vec<i64>,
    /// Offset of coordinate `s` inside a node table.
    table_offset: Vec<usize>,
    table_len: usize,
}

impl<'a> DirectOperator<'a> {
    pub fn new(nodes: &'a NodeSet, set: &'a GroupedIndexSet) -> Result<Self> {
        if nodes.dim() != set.dim() {
            return Err(Error::DimensionMismatch {
                expected: set.dim(),
                got: nodes.dim(),
            });
        }
        if let Some(b) = set.blocks().iter().find(|b| b.dim() >= MAX_ORDER) {
            return Err(Error::InvalidParameter(format!("term {} exceeds the kernel's order limit", b.term())));
        }
        let d = set.dim();
        let mut bandwidth = vec![0i64; d];
        for b in set.blocks() {
            for (&c, m) in b.term().coords().iter().zip(b.max_abs_per_axis()) {
                bandwidth[c - 1] = bandwidth[c - 1].max(m);
            }
        }
        let mut table_offset = Vec::with_capacity(d);
        let mut acc = 0;
        for &b in &bandwidth {
            table_offset.push(acc + b as usize);
            acc += 2 * b as usize + 1;
        }
        Ok(DirectOperator {
            nodes,
            set,
            bandwidth,
            table_offset,
            table_len: acc,
        })
    }

    fn fill_table(&self, x: &[f64], table: &mut [Complex64]) {
        for s in 0..x.len() {
            let b = self.bandwidth[s];
            let o = self.table_offset[s];
            table[o] = Complex64::new(1.0, 0.0);
            let base = cis_turns(x[s]);
            for m in 1..=b {
                let v = if m % ANCHOR_EVERY == 0 {
                    cis_turns((m as f64 * x[s]).fract())
                } else {
                    table[o + m as usize - 1] * base
                };
                table[o + m as usize] = v;
                table[o - m as usize] = v.conj();
            }
        }
    }

    /// Calls `f(position, e^{2πi k·x})` for every frequency, reusing the
    /// product over the common prefix of lexicographically adjacent entries.
    fn for_each_phase(&self, table: &[Complex64], mut f: impl FnMut(usize, Complex64)) {
        let mut prefix = [Complex64::new(1.0, 0.0); MAX_ORDER + 1];
        let mut last = [i64::MIN; MAX_ORDER];
        for (bi, b) in self.set.blocks().iter().enumerate() {
            let start = self.set.block_range(bi).start;
            let coords = b.term().coords();
            let dim = coords.len();
            if dim == 0 {
                f(start, Complex64::new(1.0, 0.0));
                continue;
            }
            last[..dim].fill(i64::MIN);
            for (i, ell) in b.iter().enumerate() {
                let mut j = 0;
                while j < dim && last[j] == ell[j] {
                    j += 1;
                }
                for t in j..dim {
                    let e = table[(self.table_offset[coords[t] - 1] as i64 + ell[t]) as usize];
                    prefix[t + 1] = prefix[t] * e;
                    last[t] = ell[t];
                }
                f(start + i, prefix[dim]);
            }
        }
    }
}

impl FourierOperator for DirectOperator<'_> {
    fn rows(&self) -> usize {
        self.nodes.len()
    }

    fn cols(&self) -> usize {
        self.set.len()
    }

    fn forward(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(coeffs.len(), self.cols());
        let d = self.nodes.dim();
        self.nodes
            .points()
            .par_chunks(d)
            .map_init(
                || vec![Complex64::new(0.0, 0.0); self.table_len],
                |table, x| {
                    self.fill_table(x, table);
                    let mut acc = Complex64::new(0.0, 0.0);
                    self.for_each_phase(table, |p, e| acc += coeffs[p] * e);
                    acc
                },
            )
            .collect()
    }

    fn adjoint(&self, values: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.rows());
        let d = self.nodes.dim();
        let n = self.cols();
        let partials: Vec<Vec<Complex64>> = self
            .nodes
            .points()
            .par_chunks(d * ADJOINT_CHUNK)
            .zip(values.par_chunks(ADJOINT_CHUNK))
            .map(|(pts, ys)| {
                let mut table = vec![Complex64::new(0.0, 0.0); self.table_len];
                let mut acc = vec![Complex64::new(0.0, 0.0); n];
                for (x, y) in pts.chunks(d).zip(ys) {
                    self.fill_table(x, &mut table);
                    self.for_each_phase(&table, |p, e| acc[p] += y * e.conj());
                }
                acc
            })
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for part in partials {
            for (o, v) in out.iter_mut().zip(part) {
                *o += v;
            }
        }
        out
    }
}

/// `F` on lattice nodes, applied through length-`M` FFTs.
pub struct LatticeOperator<'a> {
    lattice: &'a Rank1Lattice,
    set: &'a GroupedIndexSet,
}

impl<'a> LatticeOperator<'a> {
    pub fn new(lattice: &'a Rank1Lattice, set: &'a GroupedIndexSet) -> Result<Self> {
        if lattice.dim() != set.dim() {
            return Err(Error::DimensionMismatch {
                expected: set.dim(),
                got: lattice.dim(),
            });
        }
        Ok(LatticeOperator { lattice, set })
    }
}

impl FourierOperator for LatticeOperator<'_> {
    fn rows(&self) -> usize {
        self.lattice.size() as usize
    }

    fn cols(&self) -> usize {
        self.set.len()
    }

    fn forward(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let map = CoefficientMap::new(self.set.clone(), coeffs.to_vec()).expect("coefficient length");
        lattice_evaluate(&map, self.lattice)
    }

    fn adjoint(&self, values: &[Complex64]) -> Vec<Complex64> {
        lattice_adjoint(values, self.set, self.lattice).expect("value length")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// `y = 0`, so `x = 0` is exact.
    ZeroRhs,
    /// `‖r‖ ≤ btol ‖y‖ + atol ‖F‖ ‖x‖`.
    ResidualTolerance,
    /// `‖F* r‖ ≤ atol ‖F‖ ‖r‖`.
    LeastSquaresTolerance,
    MaxIterations,
    /// Closed-form solve on a reconstructing lattice.
    Direct,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub iterations: usize,
    /// `‖y - F ĥ‖_2` recomputed from the returned coefficients.
    pub residual_norm: f64,
    pub rhs_norm: f64,
    pub stop_reason: StopReason,
    /// LSQR's running estimate of `‖r‖` after each iteration.
    pub residual_history: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub coefficients: CoefficientMap,
    pub stats: SolverStats,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LsqrOptions {
    pub atol: f64,
    pub btol: f64,
    pub max_iter: usize,
}

impl LsqrOptions {
    pub const DETECTION: LsqrOptions = LsqrOptions {
        atol: 1e-8,
        btol: 1e-8,
        max_iter: 50,
    };
    pub const FINAL_FIT: LsqrOptions = LsqrOptions {
        atol: 1e-8,
        btol: 1e-8,
        max_iter: 200,
    };
}

impl Default for LsqrOptions {
    fn default() -> Self {
        Self::FINAL_FIT
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
}

fn residual_norm(op: &dyn FourierOperator, y: &[Complex64], x: &[Complex64]) -> f64 {
    let fx = op.forward(x);
    y.iter()
        .zip(&fx)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Undamped LSQR for `min ‖y - F x‖_2`. Returns plain coefficient vectors;
/// [`lsqr_solve`] wraps the result in a [`SolveReport`].
pub fn lsqr(op: &dyn FourierOperator, y: &[Complex64], opts: &LsqrOptions) -> Result<(Vec<Complex64>, SolverStats)> {
    if y.len() != op.rows() {
        return Err(Error::LengthMismatch {
            expected: op.rows(),
            got: y.len(),
        });
    }
    let n = op.cols();
    let zero = Complex64::new(0.0, 0.0);
    let mut x = vec![zero; n];
    let bnorm = norm(y);
    let mut history = Vec::new();
    let finish = |x: Vec<Complex64>, iterations, reason, history| {
        let r = residual_norm(op, y, &x);
        (
            x,
            SolverStats {
                iterations,
                residual_norm: r,
                rhs_norm: bnorm,
                stop_reason: reason,
                residual_history: history,
            },
        )
    };
    if bnorm == 0.0 {
        return Ok(finish(x, 0, StopReason::ZeroRhs, history));
    }

    let mut u: Vec<Complex64> = y.iter().map(|v| v / bnorm).collect();
    let mut beta = bnorm;
    let mut v = op.adjoint(&u);
    let mut alpha = norm(&v);
    if alpha == 0.0 {
        return Ok(finish(x, 0, StopReason::LeastSquaresTolerance, history));
    }
    v.iter_mut().for_each(|c| *c /= alpha);
    let mut w = v.clone();
    let mut phibar = beta;
    let mut rhobar = alpha;
    let mut anorm_sq = 0.0;

    for it in 1..=opts.max_iter {
        let av = op.forward(&v);
        for (ui, ai) in u.iter_mut().zip(&av) {
            *ui = ai - *ui * alpha;
        }
        beta = norm(&u);
        if beta > 0.0 {
            u.iter_mut().for_each(|c| *c /= beta);
            anorm_sq += alpha * alpha + beta * beta;
            let atu = op.adjoint(&u);
            for (vi, ai) in v.iter_mut().zip(&atu) {
                *vi = ai - *vi * beta;
            }
            alpha = norm(&v);
            if alpha > 0.0 {
                v.iter_mut().for_each(|c| *c /= alpha);
            }
        } else {
            anorm_sq += alpha * alpha;
        }

        let rho = rhobar.hypot(beta);
        let c = rhobar / rho;
        let s = beta / rho;
        let theta = s * alpha;
        rhobar = -c * alpha;
        let phi = c * phibar;
        phibar *= s;

        let t1 = phi / rho;
        let t2 = -theta / rho;
        for ((xi, wi), vi) in x.iter_mut().zip(w.iter_mut()).zip(&v) {
            *xi += *wi * t1;
            *wi = vi + *wi * t2;
        }
        history.push(phibar);

        let anorm = anorm_sq.sqrt();
        let xnorm = norm(&x);
        let arnorm = phibar * alpha * c.abs();
        if phibar <= opts.btol * bnorm + opts.atol * anorm * xnorm {
            return Ok(finish(x, it, StopReason::ResidualTolerance, history));
        }
        if arnorm <= opts.atol * anorm * phibar || alpha == 0.0 {
            return Ok(finish(x, it, StopReason::LeastSquaresTolerance, history));
        }
    }
    Ok(finish(x, opts.max_iter, StopReason::MaxIterations, history))
}

/// LSQR with the direct kernel on scattered nodes.
pub fn lsqr_solve(nodes: &NodeSet, set: &GroupedIndexSet, y: &[Complex64], opts: &LsqrOptions) -> Result<SolveReport> {
    let op = DirectOperator::new(nodes, set)?;
    let (x, stats) = lsqr(&op, y, opts)?;
    if stats.stop_reason == StopReason::MaxIterations {
        log::info!("lsqr stopped after {} iterations", stats.iterations);
    }
    Ok(SolveReport {
        coefficients: CoefficientMap::new(set.clone(), x)?,
        stats,
    })
}

/// `ĥ = M^{-1} F* y`, the unique least-squares solution on a certified
/// reconstructing lattice.
pub fn lattice_solve(lat: &Rank1Lattice, set: &GroupedIndexSet, y: &[Complex64]) -> Result<SolveReport> {
    if !lat.is_reconstructing_set(set) {
        return Err(Error::NotReconstructing { m: lat.size() });
    }
    let op = LatticeOperator::new(lat, set)?;
    if y.len() != op.rows() {
        return Err(Error::LengthMismatch {
            expected: op.rows(),
            got: y.len(),
        });
    }
    let scale = 1.0 / lat.size() as f64;
    let x: Vec<Complex64> = op.adjoint(y).into_iter().map(|c| c * scale).collect();
    let r = residual_norm(&op, y, &x);
    Ok(SolveReport {
        coefficients: CoefficientMap::new(set.clone(), x)?,
        stats: SolverStats {
            iterations: 1,
            residual_norm: r,
            rhs_norm: norm(y),
            stop_reason: StopReason::Direct,
            residual_history: vec![r],
        },
    })
}
