//! The 9-dimensional B-spline benchmark: exact Fourier coefficients,
//! closed-form values, error measures and the experiment runner.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::anova::{CoefficientMap, SensitivityReport, TermSensitivity};
use crate::error::{Error, Result};
use crate::index_sets::{TermFamily, TermSubset};
use crate::method::{
    approximate, detect, gap_intervals, threshold_terms, ApproxConfig, ApproxModel, BlockSizing, DetectionConfig,
    GapInterval, Sampling, SearchSet, Target,
};
use crate::operator::LsqrOptions;

pub const DIM: usize = 9;

/// `c_j` making `‖B_j‖_{L_2} = 1`.
pub fn normalization(j: u32) -> Result<f64> {
    match j {
        2 => Ok((3.0f64 / 4.0).sqrt()),
        4 => Ok((315.0f64 / 604.0).sqrt()),
        6 => Ok((277200.0f64 / 655177.0).sqrt()),
        _ => Err(Error::InvalidParameter(format!("B-spline order {j} not in {{2,4,6}}"))),
    }
}

/// `c_j sinc^j(πk/j) cos(πk)`, exactly zero when `j | k ≠ 0`.
pub fn bspline_coeff(j: u32, k: i64) -> Result<f64> {
    let c = normalization(j)?;
    if k == 0 {
        return Ok(c);
    }
    if k % j as i64 == 0 {
        return Ok(0.0);
    }
    let x = PI * k as f64 / j as f64;
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    Ok(c * (x.sin() / x).powi(j as i32) * sign)
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Cardinal B-spline of order `j` supported on `[0, j]`.
fn cardinal(j: u32, t: f64) -> f64 {
    let fact: f64 = (1..j).map(f64::from).product();
    let s: f64 = (0..=j)
        .map(|i| {
            let p = t - i as f64;
            if p > 0.0 {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                sign * binomial(j, i) * p.powi(j as i32 - 1)
            } else {
                0.0
            }
        })
        .sum();
    s / fact
}

/// `B_j(x) = c_j · j · N_j(j x)` for `x` reduced into `[0,1)`.
pub fn bspline_value(j: u32, x: f64) -> Result<f64> {
    let c = normalization(j)?;
    let x = x - x.floor();
    Ok(c * j as f64 * cardinal(j, j as f64 * x))
}

/// Coordinates (1-based) and spline orders of the four products.
pub const PRODUCTS: [&[(usize, u32)]; 4] = [
    &[(1, 2), (5, 4)],
    &[(2, 2), (6, 4)],
    &[(3, 2), (7, 4)],
    &[(4, 2), (8, 4), (9, 6)],
];

pub fn testfun_value(x: &[f64]) -> f64 {
    PRODUCTS
        .iter()
        .map(|p| {
            p.iter()
                .map(|&(c, j)| bspline_value(j, x[c - 1]).expect("supported order"))
                .product::<f64>()
        })
        .sum()
}

pub fn testfun_coeff(k: &[i64]) -> Result<f64> {
    if k.len() != DIM {
        return Err(Error::DimensionMismatch {
            expected: DIM,
            got: k.len(),
        });
    }
    let mut acc = 0.0;
    for p in PRODUCTS {
        let inside = k
            .iter()
            .enumerate()
            .all(|(i, &ki)| ki == 0 || p.iter().any(|&(c, _)| c == i + 1));
        if inside {
            let mut prod = 1.0;
            for &(c, j) in p {
                prod *= bspline_coeff(j, k[c - 1])?;
            }
            acc += prod;
        }
    }
    Ok(acc)
}

fn term(c: &[usize]) -> TermSubset {
    TermSubset::new(c.to_vec()).expect("valid term")
}

/// `U* = P({1,5}) ∪ P({2,6}) ∪ P({3,7}) ∪ P({4,8,9})`.
pub fn u_star() -> TermFamily {
    TermFamily::downward_closure(DIM, [term(&[1, 5]), term(&[2, 6]), term(&[3, 7]), term(&[4, 8, 9])])
        .expect("valid family")
}

/// `U+ = U* \ {{4,8,9}}`.
pub fn u_plus() -> TermFamily {
    u_star().without(&term(&[4, 8, 9]))
}

/// Fixed coordinates of the 3-dimensional slice through `x4, x8, x9`.
pub const SLICE_FIXED: f64 = 0.25;
pub const SLICE_FREE: [usize; 3] = [4, 8, 9];

/// The benchmark restricted to `(x4, x8, x9)` with all other coordinates at
/// [`SLICE_FIXED`].
pub fn slice_value(free: &[f64]) -> f64 {
    let mut x = [SLICE_FIXED; DIM];
    for (&c, &v) in SLICE_FREE.iter().zip(free) {
        x[c - 1] = v;
    }
    testfun_value(&x)
}

/// Fourier coefficients of [`slice_value`].
pub fn slice_coeff(ell: &[i64]) -> f64 {
    let fixed: f64 = PRODUCTS[..3]
        .iter()
        .map(|p| p.iter().map(|&(_, j)| bspline_value(j, SLICE_FIXED).unwrap()).product::<f64>())
        .sum();
    let product: f64 = PRODUCTS[3]
        .iter()
        .zip(ell)
        .map(|(&(_, j), &l)| bspline_coeff(j, l).unwrap())
        .product();
    if ell.iter().all(|&l| l == 0) {
        fixed + product
    } else {
        product
    }
}

/// Exact norms and term variances, from univariate coefficients on
/// `|k| ≤ bandwidth` plus an analytic bound on the omitted tail.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactBench {
    pub bandwidth: i64,
    pub mean: f64,
    pub norm_sq: f64,
    pub total_variance: f64,
    /// Upper bound on the squared `L_2` mass beyond `bandwidth` per axis.
    pub tail_bound: f64,
    pub variances: Vec<(TermSubset, f64)>,
}

impl ExactBench {
    pub const DEFAULT_BANDWIDTH: i64 = 1 << 14;

    pub fn new(bandwidth: i64) -> Self {
        let univariate = |j: u32| -> (f64, f64) {
            let c0 = bspline_coeff(j, 0).unwrap();
            let var: f64 = (1..=bandwidth)
                .rev()
                .map(|k| 2.0 * bspline_coeff(j, k).unwrap().powi(2))
                .sum();
            (c0 * c0, var)
        };
        let stats: Vec<(u32, (f64, f64))> = [2, 4, 6].iter().map(|&j| (j, univariate(j))).collect();
        let lookup = |j: u32| stats.iter().find(|s| s.0 == j).unwrap().1;

        let mut mean = 0.0;
        let mut variances = Vec::new();
        for p in PRODUCTS {
            mean += p.iter().map(|&(_, j)| normalization(j).unwrap()).product::<f64>();
            let coords: Vec<usize> = p.iter().map(|c| c.0).collect();
            for u in term(&coords).subsets().into_iter().filter(|u| !u.is_empty()) {
                let v: f64 = p
                    .iter()
                    .map(|&(c, j)| {
                        let (m2, var) = lookup(j);
                        if u.contains(c) {
                            var
                        } else {
                            m2
                        }
                    })
                    .product();
                variances.push((u, v));
            }
        }
        variances.sort_by(|a, b| a.0.cmp(&b.0));
        let total_variance: f64 = variances.iter().map(|v| v.1).sum();

        // |ĉ_k(B_j)| ≤ c_j (j/(π|k|))^j, so the tail beyond K is at most
        // 2 c_j^2 (j/π)^{2j} K^{1-2j} / (2j-1); products add at most that
        // much per axis, times the number of product axes.
        let tail_bound: f64 = PRODUCTS
            .iter()
            .flat_map(|p| p.iter())
            .map(|&(_, j)| {
                let c = normalization(j).unwrap();
                let jf = j as f64;
                2.0 * c * c * (jf / PI).powf(2.0 * jf) * (bandwidth as f64).powf(1.0 - 2.0 * jf) / (2.0 * jf - 1.0)
            })
            .sum();

        ExactBench {
            bandwidth,
            mean,
            norm_sq: mean * mean + total_variance,
            total_variance,
            tail_bound,
            variances,
        }
    }

    pub fn gsi(&self, u: &TermSubset) -> f64 {
        self.variances
            .iter()
            .find(|v| &v.0 == u)
            .map_or(0.0, |v| v.1 / self.total_variance)
    }

    /// The exact sensitivity report over `U*`.
    pub fn report(&self) -> SensitivityReport {
        SensitivityReport {
            mean: self.mean.into(),
            total_variance: self.total_variance,
            terms: self
                .variances
                .iter()
                .map(|(u, v)| TermSensitivity {
                    u: u.clone(),
                    variance: *v,
                    gsi: Some(v / self.total_variance),
                })
                .collect(),
        }
    }

    /// `‖f - T_U f‖ / ‖f‖` for a downward-closed `U`.
    pub fn truncation_error(&self, family: &TermFamily) -> f64 {
        let lost: f64 = self
            .variances
            .iter()
            .filter(|v| !family.contains(&v.0))
            .map(|v| v.1)
            .sum();
        (lost / self.norm_sq).sqrt()
    }

    /// `ε_L2` through Parseval:
    /// `‖f - S f‖^2 = ‖f‖^2 + Σ_{k∈I} |ĉ_k - f̂_k|^2 - Σ_{k∈I} |ĉ_k|^2`.
    pub fn l2_error(&self, coeffs: &CoefficientMap) -> Result<f64> {
        let mut diff = 0.0;
        let mut exact = 0.0;
        for (k, f) in coeffs.index_set().frequencies().zip(coeffs.values()) {
            let c = testfun_coeff(&k.0)?;
            diff += (f - c).norm_sqr();
            exact += c * c;
        }
        Ok((self.norm_sq + diff - exact).max(0.0).sqrt() / self.norm_sq.sqrt())
    }
}

/// Bar-chart data for one order: `rank;gsi;term`, highest GSI first.
pub fn gsi_bars_csv(report: &SensitivityReport, order: usize) -> String {
    let mut s = String::from("rank;gsi;term\n");
    for (i, t) in report.ranked(order).iter().enumerate() {
        let _ = writeln!(s, "{};{:e};{}", i + 1, t.gsi.unwrap_or(f64::NAN), t.u);
    }
    s
}

/// `(ε_ℓ2, ε_L2)` of a fitted model.
pub fn errors(model: &ApproxModel, exact: &ExactBench) -> Result<(f64, f64)> {
    Ok((model.training_error(), exact.l2_error(&model.coefficients)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// Reduced bandwidths and sample counts that fit a workstation.
    Desk,
    /// Full-size table rows.
    Paper,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum Stage {
    /// Pilot fit on `U_{d_s}`; thresholds default to the middle of each gap.
    Detection {
        #[serde(default)]
        thresholds: Option<Vec<f64>>,
    },
    /// Final fit on the known active set (`U*` for `d_s = 3`, `U+` for 2).
    Active,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub id: String,
    pub ds: usize,
    pub stage: Stage,
    pub search: SearchSet,
    pub sampling: Sampling,
    pub solver: LsqrOptions,
    pub scale: Scale,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub id: String,
    pub scenario: String,
    pub ds: usize,
    pub n: String,
    pub set_size: usize,
    pub samples: usize,
    pub eps_l2: f64,
    #[serde(rename = "eps_L2")]
    pub eps_big_l2: f64,
    pub gaps: Option<Vec<Option<GapInterval>>>,
    /// For detection runs: whether the thresholds picked out the truth.
    pub recovered: Option<bool>,
    pub active: Option<Vec<TermSubset>>,
    pub lattice_size: Option<u64>,
    pub tail_bound: f64,
    pub scale: Scale,
    pub seconds: f64,
}

pub const CSV_HEADER: &str = "id;scenario;d_s;N;set_size;samples;eps_l2;eps_L2;gaps;seconds";

impl ExperimentRow {
    pub fn csv_line(&self) -> String {
        let gaps = match &self.gaps {
            None => String::new(),
            Some(g) => g
                .iter()
                .map(|g| match g {
                    Some(g) => format!("({:.3e},{:.3e})", g.lower, g.upper),
                    None => "empty".to_string(),
                })
                .collect::<Vec<_>>()
                .join(" "),
        };
        let mut s = String::new();
        let _ = write!(
            s,
            "{};{};{};{};{};{};{:.3e};{:.3e};{};{:.2}",
            self.id, self.scenario, self.ds, self.n, self.set_size, self.samples, self.eps_l2, self.eps_big_l2, gaps,
            self.seconds
        );
        s
    }
}

pub fn truth_for(ds: usize) -> TermFamily {
    if ds >= 3 {
        u_star()
    } else {
        u_plus()
    }
}

/// A threshold inside each gap: the geometric mean of its ends, or half the
/// upper end when the lower one is zero.
pub fn thresholds_inside(gaps: &[Option<GapInterval>]) -> Option<Vec<f64>> {
    gaps.iter()
        .map(|g| {
            g.map(|g| {
                if g.lower > 0.0 {
                    (g.lower * g.upper).sqrt()
                } else {
                    0.5 * g.upper
                }
            })
        })
        .collect()
}

fn describe_n(search: &SearchSet) -> String {
    match search {
        SearchSet::FullGrid { n } => format!("{n:?}"),
        SearchSet::HyperbolicCross { n } => format!("{n:?}"),
        SearchSet::Weighted { cutoff, .. } => format!("{cutoff:?}"),
    }
}

pub fn run_experiment(cfg: &ExperimentConfig, exact: &ExactBench) -> Result<ExperimentRow> {
    let start = Instant::now();
    let sampler: &(dyn Fn(&[f64]) -> f64 + Sync) = &testfun_value;
    let truth = truth_for(cfg.ds);
    let (model, gaps, recovered, active) = match &cfg.stage {
        Stage::Detection { thresholds } => {
            let dcfg = DetectionConfig {
                d: DIM,
                ds: cfg.ds,
                search: cfg.search.clone(),
                thresholds: vec![0.0; cfg.ds],
                sampling: cfg.sampling.clone(),
                solver: cfg.solver,
            };
            let result = detect(&dcfg, Target::Sampler(sampler))?;
            let gaps = gap_intervals(&result.sensitivity, &truth, cfg.ds);
            let eps = thresholds.clone().or_else(|| thresholds_inside(&gaps));
            let (recovered, active) = match eps {
                Some(eps) => {
                    let fam = threshold_terms(&result.sensitivity, &eps, DIM)?;
                    (Some(fam == truth), Some(fam.iter().cloned().collect()))
                }
                None => (Some(false), None),
            };
            (result.pilot, Some(gaps), recovered, active)
        }
        Stage::Active => {
            let acfg = ApproxConfig {
                search: cfg.search.clone(),
                sizing: BlockSizing::OrderDependent,
                sampling: cfg.sampling.clone(),
                solver: cfg.solver,
            };
            let (model, _) = approximate(&truth, &acfg, None, Target::Sampler(sampler))?;
            (model, None, None, None)
        }
    };
    let (eps_l2, eps_big_l2) = errors(&model, exact)?;
    let scenario = match cfg.sampling {
        Sampling::Scattered { .. } => "scattered",
        Sampling::Lattice { .. } => "lattice",
    };
    Ok(ExperimentRow {
        id: cfg.id.clone(),
        scenario: scenario.into(),
        ds: cfg.ds,
        n: describe_n(&cfg.search),
        set_size: model.index_set().len(),
        samples: model.provenance.samples,
        eps_l2,
        eps_big_l2,
        gaps,
        recovered,
        active,
        lattice_size: model.provenance.lattice.as_ref().map(|l| l.size()),
        tail_bound: exact.tail_bound,
        scale: cfg.scale,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub const DESK_SAMPLES: usize = 100_000;
pub const PAPER_SAMPLES: usize = 2_500_000;
pub const DEFAULT_SEED: u64 = 20_210_301;

/// Rows of the six result tables:
/// 1 scattered detection `d_s = 3`, 2 scattered fit on `U*`,
/// 3 scattered detection `d_s = 2`, 4 lattice detection `d_s = 3`,
/// 5 lattice fit on `U*`, 6 scattered fit on `U+`.
pub fn table_rows(table: usize, scale: Scale) -> Result<Vec<Vec<f64>>> {
    let rows: Vec<Vec<f64>> = match (table, scale) {
        (1, Scale::Paper) => vec![
            vec![256., 32., 8.],
            vec![256., 32., 16.],
            vec![256., 32., 32.],
            vec![256., 64., 8.],
            vec![256., 64., 16.],
            vec![256., 64., 32.],
            vec![512., 64., 8.],
            vec![512., 64., 16.],
            vec![512., 64., 32.],
        ],
        (1, Scale::Desk) => vec![vec![32., 8., 4.], vec![64., 8., 4.]],
        (2, Scale::Paper) => vec![
            vec![1024., 64., 64.],
            vec![1024., 128., 32.],
            vec![1024., 128., 64.],
            vec![1024., 256., 64.],
        ],
        (2, Scale::Desk) => vec![vec![64., 16., 8.], vec![128., 16., 8.]],
        (3, Scale::Paper) => vec![vec![256., 16.], vec![256., 32.], vec![256., 64.], vec![256., 128.]],
        (3, Scale::Desk) => vec![vec![32., 8.], vec![64., 8.]],
        (4, Scale::Paper) => vec![
            vec![1e2, 1e2, 1e2],
            vec![1e3, 1e3, 1e3],
            vec![1e4, 1e4, 1e3],
            vec![1e5, 1e4, 1e3],
        ],
        (4, Scale::Desk) => vec![vec![1e2, 1e2, 1e2]],
        (5, Scale::Paper) => vec![
            vec![1e4, 1e4, 1e4],
            vec![1e5, 1e5, 1e5],
            vec![1e6, 1e5, 1e5],
            vec![1e6, 1e6, 1e5],
        ],
        (5, Scale::Desk) => vec![vec![1e4, 1e4, 1e4]],
        (6, Scale::Paper) => vec![vec![1024., 16.], vec![1024., 32.], vec![1024., 64.], vec![1024., 128.]],
        (6, Scale::Desk) => vec![vec![64., 16.], vec![128., 16.]],
        _ => return Err(Error::InvalidParameter(format!("no table {table}; tables are 1 to 6"))),
    };
    Ok(rows)
}

/// Configuration of `row` (1-based) of `table`.
pub fn table_config(table: usize, row: usize, scale: Scale, seed: u64) -> Result<ExperimentConfig> {
    let rows = table_rows(table, scale)?;
    let n = rows
        .get(row.wrapping_sub(1))
        .ok_or_else(|| Error::InvalidParameter(format!("table {table} has rows 1 to {}", rows.len())))?
        .clone();
    let samples = match scale {
        Scale::Desk => DESK_SAMPLES,
        Scale::Paper => PAPER_SAMPLES,
    };
    let scattered = Sampling::Scattered { samples, seed };
    let grid = || SearchSet::FullGrid {
        n: n.iter().map(|&v| v as u64).collect(),
    };
    let (ds, stage, search, sampling, solver) = match table {
        1 | 3 => (
            n.len(),
            Stage::Detection { thresholds: None },
            grid(),
            scattered,
            LsqrOptions::DETECTION,
        ),
        2 | 6 => (n.len(), Stage::Active, grid(), scattered, LsqrOptions::FINAL_FIT),
        4 | 5 => (
            3,
            if table == 4 {
                Stage::Detection { thresholds: None }
            } else {
                Stage::Active
            },
            SearchSet::HyperbolicCross { n: n.clone() },
            Sampling::Lattice { cbc_seed: seed },
            LsqrOptions::FINAL_FIT,
        ),
        _ => unreachable!("validated by table_rows"),
    };
    Ok(ExperimentConfig {
        id: format!("T{table}R{row}"),
        ds,
        stage,
        search,
        sampling,
        solver,
        scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn coefficient_examples() {
        assert_relative_eq!(bspline_coeff(2, 0).unwrap(), 0.75f64.sqrt(), max_relative = 1e-15);
        assert_eq!(bspline_coeff(2, 2).unwrap(), 0.0);
        assert_relative_eq!(
            bspline_coeff(2, 1).unwrap(),
            -0.75f64.sqrt() * (2.0 / PI).powi(2),
            max_relative = 1e-14
        );
        assert!(bspline_coeff(3, 1).is_err());
        assert_eq!(bspline_coeff(6, -12).unwrap(), 0.0);
        assert_eq!(bspline_coeff(4, 3).unwrap(), bspline_coeff(4, -3).unwrap());
    }

    #[test]
    fn value_examples() {
        assert_relative_eq!(bspline_value(2, 0.5).unwrap(), 1.7320508075688772, max_relative = 1e-14);
        assert_relative_eq!(bspline_value(4, 0.5).unwrap(), 1.9257749794623442, max_relative = 1e-14);
        assert_eq!(bspline_value(2, 0.0).unwrap(), 0.0);
        assert_eq!(bspline_value(2, 1.5).unwrap(), bspline_value(2, 0.5).unwrap());
    }

    #[test]
    fn testfun_examples() {
        assert_eq!(testfun_value(&[0.0; 9]), 0.0);
        let b2 = bspline_value(2, 0.5).unwrap();
        let b4 = bspline_value(4, 0.5).unwrap();
        let b6 = bspline_value(6, 0.5).unwrap();
        let v = testfun_value(&[0.5; 9]);
        assert_relative_eq!(v, 3.0 * b2 * b4 + b2 * b4 * b6, max_relative = 1e-14);
    }

    #[test]
    fn coefficient_structure() {
        let mut k = [0i64; 9];
        let mean = testfun_coeff(&k).unwrap();
        let c = |j| normalization(j).unwrap();
        assert_relative_eq!(mean, 3.0 * c(2) * c(4) + c(2) * c(4) * c(6), max_relative = 1e-15);
        k[0] = 1;
        assert_relative_eq!(
            testfun_coeff(&k).unwrap(),
            bspline_coeff(2, 1).unwrap() * c(4),
            max_relative = 1e-15
        );
        k[1] = 1;
        assert_eq!(testfun_coeff(&k).unwrap(), 0.0);
    }

    #[test]
    fn families() {
        assert_eq!(u_star().len(), 17);
        assert_eq!(u_plus().len(), 16);
        assert!(!u_plus().contains(&term(&[4, 8, 9])));
        assert!(u_plus().contains(&term(&[8, 9])));
    }

    #[test]
    fn exact_quantities() {
        let e = ExactBench::new(ExactBench::DEFAULT_BANDWIDTH);
        assert!(e.tail_bound < 1e-12);
        assert_relative_eq!(e.total_variance, 2.661083722034894, max_relative = 1e-12);
        assert_relative_eq!(e.norm_sq, 7.873377544345397, max_relative = 1e-12);
        assert_relative_eq!(e.truncation_error(&u_plus()), 0.09362100159787604, max_relative = 1e-10);
        assert_relative_eq!(e.gsi(&term(&[5])), 0.1348539367335749, max_relative = 1e-10);
        assert_eq!(e.gsi(&term(&[1, 2])), 0.0);
    }

    #[test]
    fn bars_are_ranked() {
        let e = ExactBench::new(1 << 10);
        let csv = gsi_bars_csv(&e.report(), 1);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "rank;gsi;term");
        assert_eq!(lines.len(), 10);
        assert!(lines[1].ends_with(";{5}") || lines[1].ends_with(";{6}") || lines[1].ends_with(";{7}"));
        assert_eq!(e.report().terms.len(), 16);
    }

    #[test]
    fn parseval_error_with_exact_coefficients() {
        let e = ExactBench::new(1 << 12);
        let set = SearchSet::FullGrid { n: vec![16, 8, 4] }.build(&u_star()).unwrap();
        let exact = CoefficientMap::from_fn(set, |k| testfun_coeff(k).unwrap().into());
        let kept: f64 = exact.values().iter().map(|c| c.norm_sqr()).sum();
        let err = e.l2_error(&exact).unwrap();
        assert_relative_eq!(err, (1.0 - kept / e.norm_sq).sqrt(), max_relative = 1e-9);
    }

    #[test]
    fn table_presets() {
        let c = table_config(4, 1, Scale::Desk, 1).unwrap();
        assert_eq!(c.ds, 3);
        assert!(matches!(c.sampling, Sampling::Lattice { cbc_seed: 1 }));
        let c = table_config(3, 1, Scale::Desk, 1).unwrap();
        assert_eq!(c.ds, 2);
        assert!(table_config(7, 1, Scale::Desk, 1).is_err());
        assert!(table_config(1, 0, Scale::Desk, 1).is_err());
        assert_eq!(table_rows(1, Scale::Paper).unwrap().len(), 9);
    }

    #[test]
    fn gap_midpoints() {
        let g = [
            Some(GapInterval { order: 1, lower: 0.0, upper: 0.02 }),
            Some(GapInterval { order: 2, lower: 1e-8, upper: 1e-2 }),
        ];
        let t = thresholds_inside(&g).unwrap();
        assert_eq!(t[0], 0.01);
        assert_relative_eq!(t[1], 1e-5, max_relative = 1e-12);
        assert!(thresholds_inside(&[None]).is_none());
    }
}
