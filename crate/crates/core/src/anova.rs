//! Coefficient-level ANOVA: truncation, variances, sensitivity indices and
//! tensor-grid quadrature oracles for projections and term functions.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index_sets::{full_grid, GroupedIndexSet, TermFamily, TermSubset};

/// `supp k = { i : k_i ≠ 0 }`.
pub fn support(k: &[i64]) -> TermSubset {
    crate::index_sets::Frequency(k.to_vec()).support()
}

/// `U_{d_s}`, every term of order at most `d_s`.
pub fn term_family_ds(d: usize, ds: usize) -> Result<TermFamily> {
    TermFamily::up_to_order(d, ds)
}

/// `e^{2πi t}` with `t` reduced modulo 1 first.
pub(crate) fn cis_turns(t: f64) -> Complex64 {
    let (s, c) = (TAU * (t - t.floor())).sin_cos();
    Complex64::new(c, s)
}

/// Fourier coefficients laid out block by block along a [`GroupedIndexSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientMap {
    index_set: GroupedIndexSet,
    values: Vec<Complex64>,
}

impl CoefficientMap {
    pub fn new(index_set: GroupedIndexSet, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != index_set.len() {
            return Err(Error::LengthMismatch {
                expected: index_set.len(),
                got: values.len(),
            });
        }
        Ok(CoefficientMap { index_set, values })
    }

    pub fn zeros(index_set: GroupedIndexSet) -> Self {
        let n = index_set.len();
        CoefficientMap {
            index_set,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Fills every coefficient from a function of the full frequency.
    pub fn from_fn(index_set: GroupedIndexSet, mut f: impl FnMut(&[i64]) -> Complex64) -> Self {
        let values = index_set.frequencies().map(|k| f(&k.0)).collect();
        CoefficientMap { index_set, values }
    }

    pub fn index_set(&self) -> &GroupedIndexSet {
        &self.index_set
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn block(&self, i: usize) -> &[Complex64] {
        &self.values[self.index_set.block_range(i)]
    }

    pub fn term_block(&self, u: &TermSubset) -> Option<&[Complex64]> {
        self.index_set.block_index(u).map(|i| self.block(i))
    }

    /// Coefficient at `k`, or `None` when `k ∉ I(U)`.
    pub fn get(&self, k: &[i64]) -> Option<Complex64> {
        self.index_set.position(k).map(|p| self.values[p])
    }

    /// The mean coefficient `ĉ_0`.
    pub fn mean(&self) -> Result<Complex64> {
        self.term_block(&TermSubset::empty())
            .map(|b| b[0])
            .ok_or(Error::MissingZeroFrequency)
    }

    /// `Σ |ĉ_k|^2` over the stored set.
    pub fn norm_sq(&self) -> f64 {
        self.block_norms().iter().sum()
    }

    fn block_norms(&self) -> Vec<f64> {
        (0..self.index_set.blocks().len())
            .into_par_iter()
            .map(|i| self.block(i).iter().map(Complex64::norm_sqr).sum())
            .collect()
    }

    /// Keeps the blocks whose term lies in `family`; the result lives on the
    /// sub-family only.
    pub fn truncate(&self, family: &TermFamily) -> Result<CoefficientMap> {
        let index_set = self.index_set.restrict(family)?;
        let mut values = Vec::with_capacity(index_set.len());
        for b in index_set.blocks() {
            values.extend_from_slice(self.term_block(b.term()).expect("restricted block"));
        }
        Ok(CoefficientMap { index_set, values })
    }

    /// `σ^2 = Σ_{k ≠ 0} |ĉ_k|^2`.
    pub fn variance(&self) -> Result<f64> {
        self.mean()?;
        let norms = self.block_norms();
        Ok(self
            .index_set
            .blocks()
            .iter()
            .zip(&norms)
            .filter(|(b, _)| !b.term().is_empty())
            .map(|(_, n)| n)
            .sum())
    }

    pub fn sensitivity(&self) -> Result<SensitivityReport> {
        let mean = self.mean()?;
        let norms = self.block_norms();
        let mut terms = Vec::with_capacity(norms.len());
        let mut total = 0.0;
        for (b, &v) in self.index_set.blocks().iter().zip(&norms) {
            if !b.term().is_empty() {
                total += v;
                terms.push(TermSensitivity {
                    u: b.term().clone(),
                    variance: v,
                    gsi: None,
                });
            }
        }
        if total > 0.0 {
            for t in &mut terms {
                t.gsi = Some(t.variance / total);
            }
        }
        Ok(SensitivityReport {
            mean,
            total_variance: total,
            terms,
        })
    }

    /// `Σ_k ĉ_k e^{2πi k·x}`, block by block using only `x_u`.
    pub fn evaluate(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.index_set.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.index_set.dim(),
                got: x.len(),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, b) in self.index_set.blocks().iter().enumerate() {
            let xu: Vec<f64> = b.term().coords().iter().map(|&c| x[c - 1]).collect();
            let vals = self.block(i);
            for (ell, &c) in b.iter().zip(vals) {
                let t: f64 = ell
                    .iter()
                    .zip(&xu)
                    .map(|(&l, &xs)| {
                        let p = l as f64 * xs;
                        p - p.floor()
                    })
                    .sum();
                acc += c * cis_turns(t);
            }
        }
        Ok(acc)
    }
}

/// Variance and sensitivity index of a single term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermSensitivity {
    pub u: TermSubset,
    pub variance: f64,
    /// `None` when the total variance is zero.
    pub gsi: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub mean: Complex64,
    pub total_variance: f64,
    /// Nonempty terms in canonical order.
    pub terms: Vec<TermSensitivity>,
}

impl SensitivityReport {
    pub fn gsi(&self, u: &TermSubset) -> Option<f64> {
        self.terms
            .binary_search_by(|t| t.u.cmp(u))
            .ok()
            .and_then(|i| self.terms[i].gsi)
    }

    pub fn variance_of(&self, u: &TermSubset) -> Option<f64> {
        self.terms
            .binary_search_by(|t| t.u.cmp(u))
            .ok()
            .map(|i| self.terms[i].variance)
    }

    /// Terms ranked by decreasing GSI within each order.
    pub fn ranked(&self, order: usize) -> Vec<&TermSensitivity> {
        let mut v: Vec<_> = self.terms.iter().filter(|t| t.u.len() == order).collect();
        v.sort_by(|a, b| b.variance.total_cmp(&a.variance).then_with(|| a.u.cmp(&b.u)));
        v
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("u;order;variance;gsi\n");
        for t in &self.terms {
            let gsi = t.gsi.map_or_else(|| "undefined".to_string(), |g| format!("{g:e}"));
            let _ = writeln!(s, "{};{};{:e};{}", t.u, t.u.len(), t.variance, gsi);
        }
        s
    }
}

/// Samples of a function on the tensor grid `{0, 1/G, …, (G-1)/G}^d`,
/// reused for every projection computed from it.
pub struct QuadratureGrid {
    d: usize,
    grid: usize,
    values: Vec<Complex64>,
}

impl QuadratureGrid {
    pub const MAX_DIM: usize = 4;

    pub fn sample<F>(sampler: F, d: usize, grid: usize) -> Result<Self>
    where
        F: Fn(&[f64]) -> Complex64 + Sync,
    {
        if d == 0 || d > Self::MAX_DIM {
            return Err(Error::InvalidParameter(format!(
                "quadrature oracle supports 1 <= d <= {}, got {d}",
                Self::MAX_DIM
            )));
        }
        if grid < 2 || !grid.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid resolution must be a power of two >= 2, got {grid}"
            )));
        }
        let total = grid.pow(d as u32);
        let values = (0..total)
            .into_par_iter()
            .map(|idx| {
                let x = grid_point(idx, d, grid);
                sampler(&x)
            })
            .collect();
        Ok(QuadratureGrid { d, grid, values })
    }

    /// Fails when a known bandwidth does not fit into the grid.
    pub fn check_bandwidth(&self, bandwidth: i64) -> Result<()> {
        if bandwidth >= (self.grid / 2) as i64 {
            return Err(Error::Aliasing {
                grid: self.grid,
                bandwidth,
            });
        }
        Ok(())
    }

    /// Values of `P_u f` on the `G^{|u|}` subgrid (rectangle rule over `x_{u^c}`).
    pub fn projection_values(&self, u: &TermSubset) -> Result<Vec<Complex64>> {
        u.check_dim(self.d)?;
        let g = self.grid;
        let k = u.len();
        let mut out = vec![Complex64::new(0.0, 0.0); g.pow(k as u32)];
        let mut digits = vec![0usize; self.d];
        for (idx, v) in self.values.iter().enumerate() {
            split_index(idx, g, &mut digits);
            let local = u.coords().iter().fold(0, |acc, &c| acc * g + digits[c - 1]);
            out[local] += v;
        }
        let scale = 1.0 / g.pow((self.d - k) as u32) as f64;
        out.iter_mut().for_each(|v| *v *= scale);
        Ok(out)
    }

    /// Grid DFT of `P_u f` in local `u` coordinates, normalized so that bin
    /// `b` approximates `ĉ_ℓ(P_u f)` with `ℓ = b` or `b - G`.
    fn projection_spectrum(&self, u: &TermSubset) -> Result<Vec<Complex64>> {
        let mut data = self.projection_values(u)?;
        tensor_fft(&mut data, self.grid, u.len(), false);
        let scale = 1.0 / (self.grid as f64).powi(u.len() as i32);
        data.iter_mut().for_each(|v| *v *= scale);
        Ok(data)
    }

    /// Coefficients of `P_u f` over the family `P(u)` with full-grid blocks.
    pub fn projection(&self, u: &TermSubset) -> Result<CoefficientMap> {
        let spec = self.projection_spectrum(u)?;
        let g = self.grid as i64;
        let family = TermFamily::downward_closure(self.d, [u.clone()])?;
        let set = GroupedIndexSet::order_dependent(&family, |v| full_grid(v, self.grid as u64))?;
        Ok(CoefficientMap::from_fn(set, |k| {
            let local = u
                .coords()
                .iter()
                .fold(0i64, |acc, &c| acc * g + k[c - 1].rem_euclid(g));
            spec[local as usize]
        }))
    }

    /// Largest pointwise gap on the `G^{|u|}` grid between the alternating
    /// sum `Σ_{v ⊆ u} (-1)^{|u|-|v|} P_v f` and the inverse transform of the
    /// coefficients of `P_u f` whose local entries are all nonzero.
    pub fn direct_formula_residual(&self, u: &TermSubset) -> Result<f64> {
        u.check_dim(self.d)?;
        let g = self.grid;
        let k = u.len();
        let n = g.pow(k as u32);

        let mut alternating = vec![Complex64::new(0.0, 0.0); n];
        let mut local_digits = vec![0usize; k];
        for v in u.subsets() {
            let pv = self.projection_values(&v)?;
            let sign = if (k - v.len()) % 2 == 0 { 1.0 } else { -1.0 };
            let positions: Vec<usize> = v
                .coords()
                .iter()
                .map(|c| u.coords().iter().position(|x| x == c).expect("subset"))
                .collect();
            for (idx, a) in alternating.iter_mut().enumerate() {
                split_index(idx, g, &mut local_digits);
                let j = positions.iter().fold(0, |acc, &p| acc * g + local_digits[p]);
                *a += sign * pv[j];
            }
        }

        let mut spec = self.projection_spectrum(u)?;
        for (idx, c) in spec.iter_mut().enumerate() {
            split_index(idx, g, &mut local_digits);
            if local_digits.contains(&0) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        tensor_fft(&mut spec, g, k, true);

        Ok(alternating
            .iter()
            .zip(&spec)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

fn grid_point(mut idx: usize, d: usize, g: usize) -> Vec<f64> {
    let mut x = vec![0.0; d];
    for s in (0..d).rev() {
        x[s] = (idx % g) as f64 / g as f64;
        idx /= g;
    }
    x
}

fn split_index(mut idx: usize, g: usize, digits: &mut [usize]) {
    for s in (0..digits.len()).rev() {
        digits[s] = idx % g;
        idx /= g;
    }
}

/// In-place unnormalized DFT along every axis of a row-major `g^k` array.
fn tensor_fft(data: &mut [Complex64], g: usize, k: usize, inverse: bool) {
    if k == 0 {
        return;
    }
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(g)
    } else {
        planner.plan_fft_forward(g)
    };
    let mut line = vec![Complex64::new(0.0, 0.0); g];
    for axis in 0..k {
        let stride = g.pow((k - 1 - axis) as u32);
        let block = stride * g;
        for start in (0..data.len()).step_by(block) {
            for off in 0..stride {
                for (j, l) in line.iter_mut().enumerate() {
                    *l = data[start + off + j * stride];
                }
                fft.process(&mut line);
                for (j, l) in line.iter().enumerate() {
                    data[start + off + j * stride] = *l;
                }
            }
        }
    }
}

/// Coefficients of `P_u f` from a `G^d` tensor grid.
pub fn quadrature_projection<F>(sampler: F, d: usize, u: &TermSubset, grid: usize) -> Result<CoefficientMap>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    QuadratureGrid::sample(sampler, d, grid)?.projection(u)
}

/// See [`QuadratureGrid::direct_formula_residual`].
pub fn direct_formula_check<F>(sampler: F, d: usize, u: &TermSubset, grid: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    QuadratureGrid::sample(sampler, d, grid)?.direct_formula_residual(u)
}
