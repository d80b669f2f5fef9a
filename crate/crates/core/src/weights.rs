//! Product-and-order-dependent weights `w^{α,β}` and closed-form bounds on
//! the error of truncating to `U_{d_s}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index_sets::{TermFamily, TermSubset};

/// Parameters of `w^{α,β}(k) = γ_{supp k}^{-1} (1+‖k‖_1)^α ∏_{s ∈ supp k} (1+|k_s|)^β`
/// with `γ_u = Γ_{|u|} ∏_{s ∈ u} γ_s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub alpha: f64,
    pub beta: f64,
    /// Dimension weights `γ_1, …, γ_d`.
    pub gamma: Vec<f64>,
    /// Order weights `Γ_1, …, Γ_d`; `Γ_0 = 1` is implied.
    #[serde(rename = "Gamma")]
    pub order_weights: Vec<f64>,
}

impl WeightParams {
    pub fn new(alpha: f64, beta: f64, gamma: Vec<f64>, order_weights: Vec<f64>) -> Result<Self> {
        let p = WeightParams {
            alpha,
            beta,
            gamma,
            order_weights,
        };
        p.validate()?;
        Ok(p)
    }

    /// `γ ≡ 1`, `Γ ≡ 1`.
    pub fn unweighted(d: usize, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha, beta, vec![1.0; d], vec![1.0; d])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.gamma.is_empty() {
            return bad("weights need at least one dimension".into());
        }
        if self.gamma.len() != self.order_weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.gamma.len(),
                got: self.order_weights.len(),
            });
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return bad(format!("beta must be finite and nonnegative, got {}", self.beta));
        }
        // α = -β = 0 is kept: it is the unweighted case.
        let ok = self.alpha > -self.beta || (self.alpha == 0.0 && self.beta == 0.0);
        if !ok || !self.alpha.is_finite() {
            return bad(format!("alpha must exceed -beta, got alpha={} beta={}", self.alpha, self.beta));
        }
        let in_unit = |v: &f64| *v > 0.0 && *v <= 1.0;
        if !self.gamma.iter().all(in_unit) {
            return bad("dimension weights must lie in (0,1]".into());
        }
        if !self.order_weights.iter().all(in_unit) {
            return bad("order weights must lie in (0,1]".into());
        }
        if self.order_weights.windows(2).any(|w| w[1] > w[0]) {
            return bad("order weights must be nonincreasing".into());
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    /// `Γ_n` with `Γ_0 = 1`.
    pub fn order_weight(&self, n: usize) -> f64 {
        if n == 0 {
            1.0
        } else {
            self.order_weights[n - 1]
        }
    }

    /// `γ_u = Γ_{|u|} ∏_{s ∈ u} γ_s`.
    pub fn term_weight(&self, u: &TermSubset) -> f64 {
        self.order_weight(u.len()) * u.coords().iter().map(|&s| self.gamma[s - 1]).product::<f64>()
    }

    /// `γ` sorted in nonincreasing order.
    pub fn gamma_rearranged(&self) -> Vec<f64> {
        let mut g = self.gamma.clone();
        g.sort_by(|a, b| b.total_cmp(a));
        g
    }

    /// `c` when `Γ_n = c^n` for every `n`, to relative accuracy 1e-12.
    pub fn geometric_ratio(&self) -> Option<f64> {
        let c = self.order_weights[0];
        self.order_weights
            .iter()
            .enumerate()
            .all(|(i, &g)| (g - c.powi(i as i32 + 1)).abs() <= 1e-12 * g)
            .then_some(c)
    }
}

pub fn pod_weight(k: &[i64], p: &WeightParams) -> f64 {
    let mut l1 = 0.0;
    let mut mixed = 1.0;
    let mut gammas = 1.0;
    let mut order = 0;
    for (s, &ks) in k.iter().enumerate() {
        if ks != 0 {
            let a = ks.unsigned_abs() as f64;
            l1 += a;
            mixed *= (1.0 + a).powf(p.beta);
            gammas *= p.gamma[s];
            order += 1;
        }
    }
    (1.0 + l1).powf(p.alpha) * mixed / (p.order_weight(order) * gammas)
}

fn check_ds(p: &WeightParams, ds: usize) -> Result<()> {
    if ds >= p.dim() {
        return Err(Error::NoExcludedTerms);
    }
    Ok(())
}

/// `Γ_{d_s+1} (2+d_s)^{-α} 2^{-β(d_s+1)} ∏_{s=1}^{d_s+1} γ*_s`, bounding
/// `‖f - T_{d_s} f‖_∞ / ‖f‖_{A_w}`.
pub fn wiener_trunc_bound(p: &WeightParams, ds: usize) -> Result<f64> {
    p.validate()?;
    check_ds(p, ds)?;
    let n = ds + 1;
    let gammas: f64 = p.gamma_rearranged()[..n].iter().product();
    Ok(p.order_weight(n) * (2.0 + ds as f64).powf(-p.alpha) * 2f64.powf(-p.beta * n as f64) * gammas)
}

/// Relative `L_2` truncation bound in the Sobolev-type space; the closed
/// form coincides with [`wiener_trunc_bound`].
pub fn sobolev_trunc_bound_l2(p: &WeightParams, ds: usize) -> Result<f64> {
    wiener_trunc_bound(p, ds)
}

/// Riemann zeta for real `s > 1`: a direct partial sum followed by an
/// Euler–Maclaurin tail.
pub fn zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::InvalidParameter(format!("zeta diverges at s={s}")));
    }
    const N: usize = 64;
    // B_{2j} / (2j)!
    const B: [f64; 6] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
    ];
    let head: f64 = (1..N).rev().map(|n| (n as f64).powf(-s)).sum();
    let nf = N as f64;
    let mut tail = nf.powf(1.0 - s) / (s - 1.0) + 0.5 * nf.powf(-s);
    // rising product s(s+1)…(s+2j-2) times N^{-s-2j+1}
    let mut rising = s;
    let mut power = nf.powf(-s - 1.0);
    for (j, b) in B.iter().enumerate() {
        tail += b * rising * power;
        let m = 2.0 * j as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        power /= nf * nf;
    }
    Ok(head + tail)
}

fn linf_params(p: &WeightParams) -> Result<f64> {
    p.validate()?;
    if p.alpha != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "the L-infinity bound needs alpha = 0, got {}",
            p.alpha
        )));
    }
    if !(p.beta > 0.5) {
        return Err(Error::InvalidParameter(format!(
            "the L-infinity bound needs beta > 1/2, got {}",
            p.beta
        )));
    }
    zeta(2.0 * p.beta).map(|z| z - 1.0)
}

/// `sqrt(Σ_{n=d_s+1}^{d} 2^n Γ_n^2 (ζ(2β)-1)^n ‖γ‖_2^{2n})`; zero when `d_s = d`.
pub fn sobolev_trunc_bound_linf(p: &WeightParams, ds: usize) -> Result<f64> {
    let z = linf_params(p)?;
    if ds > p.dim() {
        return Err(Error::InvalidParameter(format!("d_s={ds} exceeds d={}", p.dim())));
    }
    let g2: f64 = p.gamma.iter().map(|g| g * g).sum();
    let sum: f64 = (ds + 1..=p.dim())
        .map(|n| (2.0 * z * g2).powi(n as i32) * p.order_weight(n).powi(2))
        .sum();
    Ok(sum.sqrt())
}

/// Closed forms of the `L_∞` bound when `Γ_n = c^n` and
/// `q = 2c^2 (ζ(2β)-1) ‖γ‖_2^2 < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeometricBound {
    pub q: f64,
    /// `sqrt(q^{d_s+1} (1 - q^{d-d_s}) / (1 - q))`, equal to the finite sum.
    pub finite: f64,
    /// `sqrt(q^{d_s+1} / (1 - q))`, the dimension-free limit.
    pub limit: f64,
}

pub fn sobolev_linf_geometric(p: &WeightParams, ds: usize) -> Result<GeometricBound> {
    let z = linf_params(p)?;
    let c = p.geometric_ratio().ok_or_else(|| {
        Error::InvalidParameter("order weights are not of the form c^n".into())
    })?;
    if ds > p.dim() {
        return Err(Error::InvalidParameter(format!("d_s={ds} exceeds d={}", p.dim())));
    }
    let g2: f64 = p.gamma.iter().map(|g| g * g).sum();
    let q = 2.0 * c * c * z * g2;
    if !(q < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "||gamma||_2 must be below 1/(c sqrt(2 zeta(2 beta) - 2)); q = {q}"
        )));
    }
    let head = q.powi(ds as i32 + 1) / (1.0 - q);
    Ok(GeometricBound {
        q,
        finite: (head * (1.0 - q.powi((p.dim() - ds) as i32))).sqrt(),
        limit: head.sqrt(),
    })
}

/// Smallest `d_s` whose squared `L_2` bound is at most `1 - δ`, or `d`.
pub fn superposition_threshold(p: &WeightParams, delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0,1), got {delta}")));
    }
    for ds in 1..p.dim() {
        if sobolev_trunc_bound_l2(p, ds)?.powi(2) <= 1.0 - delta {
            return Ok(ds);
        }
    }
    Ok(p.dim())
}

/// `min { w(k) : supp k ∉ U }` for a weight that is nondecreasing in every
/// `|k_s|`, so each excluded support is probed only with entries `±1`.
/// Supports up to order `probe_order` are enumerated.
pub fn min_excluded_weight<W>(weight: W, family: &TermFamily, probe_order: usize) -> Result<f64>
where
    W: Fn(&[i64]) -> f64,
{
    let d = family.dim();
    let probe = TermFamily::up_to_order(d, probe_order.min(d))?;
    let mut best = f64::INFINITY;
    let mut k = vec![0i64; d];
    for u in probe.iter().filter(|u| !family.contains(u)) {
        let n = u.len();
        for signs in 0u32..(1 << n) {
            k.iter_mut().for_each(|x| *x = 0);
            for (i, &c) in u.coords().iter().enumerate() {
                k[c - 1] = if signs & (1 << i) == 0 { 1 } else { -1 };
            }
            best = best.min(weight(&k));
        }
    }
    if best.is_infinite() {
        return Err(Error::NoExcludedTerms);
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Wiener,
    SobolevL2,
    SobolevLinf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Alpha,
    Beta,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCurve {
    pub kind: BoundKind,
    pub param: SweepParam,
    pub d: usize,
    pub ds: usize,
    pub grid: Vec<f64>,
    /// `+∞` where the parameters leave the bound's domain.
    pub values: Vec<f64>,
}

impl BoundCurve {
    pub fn to_csv(&self) -> String {
        let name = match self.param {
            SweepParam::Alpha => "alpha",
            SweepParam::Beta => "beta",
        };
        let mut s = String::from("param;value;bound\n");
        for (x, v) in self.grid.iter().zip(&self.values) {
            s.push_str(&format!("{name};{x};{v:e}\n"));
        }
        s
    }
}

pub fn evaluate_bound(kind: BoundKind, p: &WeightParams, ds: usize) -> Result<f64> {
    match kind {
        BoundKind::Wiener => wiener_trunc_bound(p, ds),
        BoundKind::SobolevL2 => sobolev_trunc_bound_l2(p, ds),
        BoundKind::SobolevLinf => sobolev_trunc_bound_linf(p, ds),
    }
}

/// Evaluates a bound while sweeping `α` or `β` over `grid`.
pub fn bound_curve(kind: BoundKind, base: &WeightParams, ds: usize, param: SweepParam, grid: &[f64]) -> BoundCurve {
    let values = grid
        .par_iter()
        .map(|&x| {
            let mut p = base.clone();
            match param {
                SweepParam::Alpha => p.alpha = x,
                SweepParam::Beta => p.beta = x,
            }
            evaluate_bound(kind, &p, ds).unwrap_or(f64::INFINITY)
        })
        .collect();
    BoundCurve {
        kind,
        param,
        d: base.dim(),
        ds,
        grid: grid.to_vec(),
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn fig3(alpha: f64, beta: f64) -> WeightParams {
        let c = 3f64.sqrt() / PI;
        WeightParams::new(
            alpha,
            beta,
            (1..=9).map(|s| 1.0 / s as f64).collect(),
            (1..=9).map(|s| c.powi(s)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn weight_examples() {
        let p = WeightParams::unweighted(2, 0.0, 1.0).unwrap();
        assert_eq!(pod_weight(&[0, 0], &p), 1.0);
        assert_eq!(pod_weight(&[1, 0], &p), 2.0);
        let q = WeightParams::new(1.0, 1.0, vec![1.0, 0.5], vec![1.0, 1.0]).unwrap();
        assert_relative_eq!(pod_weight(&[1, 1], &q), 24.0, max_relative = 1e-15);
        assert_eq!(pod_weight(&[0, 0], &q), 1.0);
    }

    #[test]
    fn validation() {
        assert!(WeightParams::new(0.0, -1.0, vec![1.0], vec![1.0]).is_err());
        assert!(WeightParams::new(-1.0, 1.0, vec![1.0], vec![1.0]).is_err());
        assert!(WeightParams::new(0.0, 1.0, vec![1.5], vec![1.0]).is_err());
        assert!(WeightParams::new(0.0, 1.0, vec![1.0, 1.0], vec![0.5, 0.6]).is_err());
        assert!(WeightParams::new(0.0, 1.0, vec![1.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn trivial_bounds() {
        let p = WeightParams::unweighted(5, 0.0, 0.0).unwrap();
        for ds in 1..5 {
            assert_eq!(wiener_trunc_bound(&p, ds).unwrap(), 1.0);
        }
        assert!(matches!(wiener_trunc_bound(&p, 5), Err(Error::NoExcludedTerms)));
    }

    #[test]
    fn fig3_bound_value() {
        // Γ_4 · 2^{-4} · (1·1/2·1/3·1/4)
        let expected = (3f64.sqrt() / PI).powi(4) / 16.0 / 24.0;
        assert_relative_eq!(wiener_trunc_bound(&fig3(0.0, 1.0), 3).unwrap(), expected, max_relative = 1e-14);
        assert_relative_eq!(expected, 2.4060895909416415e-4, max_relative = 1e-12);
    }

    #[test]
    fn alpha_ratio_and_beta_doubling() {
        let b0 = sobolev_trunc_bound_l2(&fig3(0.0, 1.0), 3).unwrap();
        let b1 = sobolev_trunc_bound_l2(&fig3(1.0, 1.0), 3).unwrap();
        assert_relative_eq!(b1 / b0, 1.0 / 5.0, max_relative = 1e-14);
        let b2 = sobolev_trunc_bound_l2(&fig3(0.0, 2.0), 3).unwrap();
        assert_relative_eq!(b2 / b0, 2f64.powi(-4), max_relative = 1e-14);
    }

    #[test]
    fn rearrangement_invariance() {
        let mut p = fig3(0.5, 1.0);
        let b = wiener_trunc_bound(&p, 2).unwrap();
        p.gamma.reverse();
        assert_eq!(wiener_trunc_bound(&p, 2).unwrap(), b);
    }

    #[test]
    fn zeta_values() {
        assert_relative_eq!(zeta(2.0).unwrap(), PI * PI / 6.0, max_relative = 1e-14);
        assert_relative_eq!(zeta(4.0).unwrap(), PI.powi(4) / 90.0, max_relative = 1e-14);
        assert_relative_eq!(zeta(6.0).unwrap(), PI.powi(6) / 945.0, max_relative = 1e-14);
        // partial sums with a crude integral tail, independent of the EM terms
        let direct: f64 = (1..200_000u64).rev().map(|n| (n as f64).powf(-3.0)).sum::<f64>() + 0.5 / 200_000f64.powi(2);
        assert_relative_eq!(zeta(3.0).unwrap(), direct, max_relative = 1e-12);
        assert!(zeta(1.0).is_err());
    }

    #[test]
    fn linf_bound_and_closed_form() {
        let p = fig3(0.0, 2.0);
        let finite = sobolev_trunc_bound_linf(&p, 3).unwrap();
        let g = sobolev_linf_geometric(&p, 3).unwrap();
        assert_relative_eq!(finite, g.finite, max_relative = 1e-12);
        assert!(g.limit > g.finite);
        assert_eq!(sobolev_trunc_bound_linf(&p, 9).unwrap(), 0.0);
        assert!(sobolev_trunc_bound_linf(&fig3(0.0, 0.5), 3).is_err());
        assert!(sobolev_trunc_bound_linf(&fig3(1.0, 2.0), 3).is_err());
    }

    #[test]
    fn threshold_examples() {
        let p = fig3(0.0, 1.0);
        assert_eq!(superposition_threshold(&p, 1e-9).unwrap(), 1);
        assert!(superposition_threshold(&p, 0.99999936).unwrap() <= 3);
        let flat = WeightParams::unweighted(4, 0.0, 0.0).unwrap();
        assert_eq!(superposition_threshold(&flat, 0.5).unwrap(), 4);
        assert!(superposition_threshold(&p, 1.0).is_err());
    }

    #[test]
    fn min_excluded_examples() {
        let l1 = |k: &[i64]| 1.0 + k.iter().map(|x| x.abs() as f64).sum::<f64>();
        let only_mean = TermFamily::up_to_order(2, 0).unwrap();
        assert_eq!(min_excluded_weight(l1, &only_mean, 2).unwrap(), 2.0);
        let all = TermFamily::up_to_order(2, 2).unwrap();
        assert!(matches!(min_excluded_weight(l1, &all, 2), Err(Error::NoExcludedTerms)));
    }

    #[test]
    fn min_excluded_pod_structure() {
        let p = fig3(0.0, 1.0);
        let fam = TermFamily::up_to_order(9, 3).unwrap();
        let m = min_excluded_weight(|k| pod_weight(k, &p), &fam, 4).unwrap();
        let expected = pod_weight(&[1, 1, 1, 1, 0, 0, 0, 0, 0], &p);
        assert_relative_eq!(m, expected, max_relative = 1e-14);
    }

    #[test]
    fn min_excluded_brute_force() {
        let p = WeightParams::new(0.5, 1.0, vec![0.9, 0.3, 0.6], vec![1.0, 0.7, 0.2]).unwrap();
        let fam = TermFamily::downward_closure(
            3,
            [TermSubset::new(vec![1, 3]).unwrap(), TermSubset::new(vec![2]).unwrap()],
        )
        .unwrap();
        let mut brute = f64::INFINITY;
        for a in -5..=5i64 {
            for b in -5..=5i64 {
                for c in -5..=5i64 {
                    let k = [a, b, c];
                    if !fam.contains(&crate::anova::support(&k)) {
                        brute = brute.min(pod_weight(&k, &p));
                    }
                }
            }
        }
        let m = min_excluded_weight(|k| pod_weight(k, &p), &fam, 3).unwrap();
        assert_relative_eq!(m, brute, max_relative = 1e-15);
    }

    #[test]
    fn curves_mark_invalid_points() {
        let p = fig3(0.0, 1.0);
        let c = bound_curve(BoundKind::SobolevLinf, &p, 3, SweepParam::Beta, &[0.25, 1.0, 2.0]);
        assert!(c.values[0].is_infinite());
        assert!(c.values[1].is_finite() && c.values[2] < c.values[1]);
        assert!(c.to_csv().starts_with("param;value;bound\nbeta;0.25;inf"));
    }

    proptest! {
        #[test]
        fn bounds_are_monotone(alpha in 0.0f64..3.0, beta in 0.6f64..3.0, da in 0.0f64..1.0, db in 0.0f64..1.0) {
            let p = fig3(alpha, beta);
            for kind in [BoundKind::Wiener, BoundKind::SobolevL2, BoundKind::SobolevLinf] {
                let pk = if kind == BoundKind::SobolevLinf { fig3(0.0, beta) } else { p.clone() };
                let mut prev = f64::INFINITY;
                for ds in 1..9 {
                    let b = evaluate_bound(kind, &pk, ds).unwrap();
                    prop_assert!(b > 0.0 && b.is_finite() && b <= prev);
                    prev = b;
                }
                let higher_beta = WeightParams { beta: pk.beta + db, ..pk.clone() };
                prop_assert!(evaluate_bound(kind, &higher_beta, 3).unwrap() <= evaluate_bound(kind, &pk, 3).unwrap());
                if kind != BoundKind::SobolevLinf {
                    let higher_alpha = WeightParams { alpha: pk.alpha + da, ..pk.clone() };
                    prop_assert!(evaluate_bound(kind, &higher_alpha, 3).unwrap() <= evaluate_bound(kind, &pk, 3).unwrap());
                }
            }
        }

        #[test]
        fn weights_are_at_least_one(k in prop::collection::vec(-20i64..20, 4), alpha in 0.0f64..2.0, beta in 0.0f64..2.0) {
            let p = WeightParams::new(alpha, beta, vec![0.5, 1.0, 0.25, 0.8], vec![1.0, 0.5, 0.5, 0.1]).unwrap();
            prop_assert!(pod_weight(&k, &p) >= 1.0);
        }
    }
}
