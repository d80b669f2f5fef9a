//! The two-stage method: a pilot fit on `I(U_{d_s})` ranks the terms by
//! sensitivity, the thresholded downward closure becomes the active set,
//! and a second fit on the active set yields the final model.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anova::{CoefficientMap, SensitivityReport};
use crate::error::{Error, Result};
use crate::index_sets::{
    full_grid, hyperbolic_cross, weighted_index_set, Frequency, GroupedIndexSet, LowDimIndexSet, TermFamily,
    TermSubset,
};
use crate::lattice::{cbc_construct, CbcOptions, Rank1Lattice, MAX_SAMPLED_LATTICE};
use crate::operator::{lattice_solve, lsqr_solve, uniform_nodes, LsqrOptions, NodeSet, SolveReport, SolverStats};
use crate::weights::{pod_weight, WeightParams};

/// Order-dependent search sets `I_1, …, I_{d_s}`: entry `j-1` of the
/// parameter vector configures every term of order `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "snake_case")]
pub enum SearchSet {
    FullGrid { n: Vec<u64> },
    HyperbolicCross { n: Vec<f64> },
    Weighted {
        weight: WeightParams,
        cutoff: Vec<f64>,
        #[serde(default = "default_axis_cap")]
        axis_cap: i64,
    },
}

fn default_axis_cap() -> i64 {
    1 << 20
}

impl SearchSet {
    pub fn orders(&self) -> usize {
        match self {
            SearchSet::FullGrid { n } => n.len(),
            SearchSet::HyperbolicCross { n } => n.len(),
            SearchSet::Weighted { cutoff, .. } => cutoff.len(),
        }
    }

    /// The block for `u`, with its size parameter multiplied by `scale`.
    pub fn block(&self, u: &TermSubset, d: usize, scale: u64) -> Result<LowDimIndexSet> {
        let j = u.len();
        if j == 0 {
            return LowDimIndexSet::from_vectors(u.clone(), vec![vec![]]);
        }
        if j > self.orders() {
            return Err(Error::InvalidParameter(format!(
                "no search set configured for order {j} (term {u})"
            )));
        }
        match self {
            SearchSet::FullGrid { n } => full_grid(u, n[j - 1] * scale),
            SearchSet::HyperbolicCross { n } => hyperbolic_cross(u, n[j - 1] * scale as f64),
            SearchSet::Weighted { weight, cutoff, axis_cap } => {
                if weight.dim() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: weight.dim(),
                    });
                }
                weighted_index_set(u, d, |k| pod_weight(k, weight), cutoff[j - 1] * scale as f64, *axis_cap)
            }
        }
    }

    pub fn build(&self, family: &TermFamily) -> Result<GroupedIndexSet> {
        GroupedIndexSet::order_dependent(family, |u| self.block(u, family.dim(), 1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum Sampling {
    /// `samples` i.i.d. uniform nodes, or the nodes of the supplied data.
    Scattered {
        #[serde(default)]
        samples: usize,
        #[serde(default)]
        seed: u64,
    },
    /// A fresh CBC lattice for every index set.
    Lattice {
        #[serde(default)]
        cbc_seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    pub d: usize,
    pub ds: usize,
    pub search: SearchSet,
    /// `ε_1, …, ε_{d_s}`.
    pub thresholds: Vec<f64>,
    pub sampling: Sampling,
    #[serde(default = "detection_solver")]
    pub solver: LsqrOptions,
}

fn detection_solver() -> LsqrOptions {
    LsqrOptions::DETECTION
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.ds == 0 || self.ds > self.d {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= d_s <= d, got d_s={} d={}",
                self.ds, self.d
            )));
        }
        if self.thresholds.len() != self.ds {
            return Err(Error::LengthMismatch {
                expected: self.ds,
                got: self.thresholds.len(),
            });
        }
        if let Some(e) = self.thresholds.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::InvalidParameter(format!("threshold {e} outside [0,1]")));
        }
        if self.search.orders() < self.ds {
            return Err(Error::LengthMismatch {
                expected: self.ds,
                got: self.search.orders(),
            });
        }
        Ok(())
    }
}

/// What is being approximated: a black box or fixed samples.
#[derive(Clone, Copy)]
pub enum Target<'a> {
    Sampler(&'a (dyn Fn(&[f64]) -> f64 + Sync)),
    Data { nodes: &'a NodeSet, values: &'a [Complex64] },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default)]
    pub config: serde_json::Value,
    pub sampling: Option<Sampling>,
    pub lattice: Option<Rank1Lattice>,
    pub samples: usize,
    /// How per-term index sets were sized, when not purely order-dependent.
    pub tiering: Option<String>,
    pub data_digest: Option<String>,
}

/// A trigonometric polynomial on `I(U)` with the record of how it was fitted.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxModel {
    pub coefficients: CoefficientMap,
    pub solver: SolverStats,
    pub provenance: Provenance,
}

impl ApproxModel {
    pub fn index_set(&self) -> &GroupedIndexSet {
        self.coefficients.index_set()
    }

    /// `Σ_{k ∈ I(U)} f̂_k e^{2πi k·x}` with `x` reduced modulo 1.
    pub fn evaluate(&self, x: &[f64]) -> Result<Complex64> {
        let reduced: Vec<f64> = x.iter().map(|v| v - v.floor()).collect();
        self.coefficients.evaluate(&reduced)
    }

    /// `ε_ℓ2 = ‖y - F f̂‖ / ‖y‖` on the data the model was fitted to.
    pub fn training_error(&self) -> f64 {
        if self.solver.rhs_norm == 0.0 {
            0.0
        } else {
            self.solver.residual_norm / self.solver.rhs_norm
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDoc::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<ModelDoc>(s)?.try_into()
    }
}

pub fn evaluate_model(m: &ApproxModel, x: &[f64]) -> Result<Complex64> {
    m.evaluate(x)
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    config: serde_json::Value,
    index_set: GroupedIndexSet,
    /// Per block, interleaved `re, im` as hex-encoded binary64.
    coefficients: Vec<Vec<String>>,
    solver_report: SolverStats,
    seeds: Option<Sampling>,
    lattice: Option<Rank1Lattice>,
    samples: usize,
    tiering: Option<String>,
    data_digest: Option<String>,
}

pub fn f64_to_hex(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

pub fn f64_from_hex(s: &str) -> Result<f64> {
    u64::from_str_radix(s, 16)
        .map(f64::from_bits)
        .map_err(|e| Error::InvalidParameter(format!("bad hex float {s:?}: {e}")))
}

impl From<&ApproxModel> for ModelDoc {
    fn from(m: &ApproxModel) -> Self {
        let c = &m.coefficients;
        let coefficients = (0..c.index_set().blocks().len())
            .map(|i| {
                c.block(i)
                    .iter()
                    .flat_map(|v| [f64_to_hex(v.re), f64_to_hex(v.im)])
                    .collect()
            })
            .collect();
        let p = &m.provenance;
        ModelDoc {
            config: p.config.clone(),
            index_set: c.index_set().clone(),
            coefficients,
            solver_report: m.solver.clone(),
            seeds: p.sampling.clone(),
            lattice: p.lattice.clone(),
            samples: p.samples,
            tiering: p.tiering.clone(),
            data_digest: p.data_digest.clone(),
        }
    }
}

impl TryFrom<ModelDoc> for ApproxModel {
    type Error = Error;

    fn try_from(doc: ModelDoc) -> Result<Self> {
        if doc.coefficients.len() != doc.index_set.blocks().len() {
            return Err(Error::LengthMismatch {
                expected: doc.index_set.blocks().len(),
                got: doc.coefficients.len(),
            });
        }
        let mut values = Vec::with_capacity(doc.index_set.len());
        for (b, hex) in doc.index_set.blocks().iter().zip(&doc.coefficients) {
            if hex.len() != 2 * b.len() {
                return Err(Error::LengthMismatch {
                    expected: 2 * b.len(),
                    got: hex.len(),
                });
            }
            for pair in hex.chunks(2) {
                values.push(Complex64::new(f64_from_hex(&pair[0])?, f64_from_hex(&pair[1])?));
            }
        }
        let coefficients = CoefficientMap::new(doc.index_set, values)?;
        if coefficients.values().iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidParameter("model holds non-finite coefficients".into()));
        }
        Ok(ApproxModel {
            coefficients,
            solver: doc.solver_report,
            provenance: Provenance {
                config: doc.config,
                sampling: doc.seeds,
                lattice: doc.lattice,
                samples: doc.samples,
                tiering: doc.tiering,
                data_digest: doc.data_digest,
            },
        })
    }
}

/// Samples the target (or takes its data) and solves the least-squares
/// problem on `set`.
pub fn fit(
    set: &GroupedIndexSet,
    sampling: &Sampling,
    target: Target<'_>,
    solver: &LsqrOptions,
    warnings: &mut Vec<String>,
) -> Result<ApproxModel> {
    let d = set.dim();
    let (report, lattice, samples): (SolveReport, Option<Rank1Lattice>, usize) = match (sampling, target) {
        (Sampling::Lattice { cbc_seed }, Target::Sampler(f)) => {
            let freqs: Vec<Frequency> = set.frequencies().collect();
            let lat = cbc_construct(
                &freqs,
                &CbcOptions {
                    seed: *cbc_seed,
                    ..Default::default()
                },
            )?;
            if lat.size() > MAX_SAMPLED_LATTICE {
                return Err(Error::LatticeTooLarge {
                    m: lat.size(),
                    max: MAX_SAMPLED_LATTICE,
                });
            }
            let nodes = NodeSet::from_lattice(&lat);
            let y = sample(f, &nodes);
            let m = nodes.len();
            (lattice_solve(&lat, set, &y)?, Some(lat), m)
        }
        (Sampling::Lattice { .. }, Target::Data { .. }) => {
            return Err(Error::InvalidParameter(
                "lattice sampling needs a black-box target, not fixed data".into(),
            ))
        }
        (Sampling::Scattered { samples, seed }, target) => {
            let owned;
            let (nodes, y): (&NodeSet, Vec<Complex64>) = match target {
                Target::Sampler(f) => {
                    owned = uniform_nodes(d, *samples, *seed)?;
                    let y = sample(f, &owned);
                    (&owned, y)
                }
                Target::Data { nodes, values } => {
                    if values.len() != nodes.len() {
                        return Err(Error::LengthMismatch {
                            expected: nodes.len(),
                            got: values.len(),
                        });
                    }
                    (nodes, values.to_vec())
                }
            };
            if nodes.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: nodes.dim(),
                });
            }
            if set.len() * 10 > nodes.len() {
                let msg = format!(
                    "index set of size {} exceeds a tenth of the {} samples; the fit may be underdetermined",
                    set.len(),
                    nodes.len()
                );
                log::warn!("{msg}");
                warnings.push(msg);
            }
            (lsqr_solve(nodes, set, &y, solver)?, None, nodes.len())
        }
    };
    Ok(ApproxModel {
        coefficients: report.coefficients,
        solver: report.stats,
        provenance: Provenance {
            sampling: Some(sampling.clone()),
            lattice,
            samples,
            ..Default::default()
        },
    })
}

fn sample(f: &(dyn Fn(&[f64]) -> f64 + Sync), nodes: &NodeSet) -> Vec<Complex64> {
    nodes
        .points()
        .par_chunks(nodes.dim())
        .map(|x| Complex64::new(f(x), 0.0))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapInterval {
    pub order: usize,
    /// Largest GSI of an order-`j` term outside the truth, 0 if none.
    pub lower: f64,
    /// Smallest GSI of an order-`j` term inside the truth, 1 if none.
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ActiveSetResult {
    pub sensitivity: SensitivityReport,
    pub active: TermFamily,
    pub thresholds: Vec<f64>,
    /// Per order `1..=d_s`; `None` where the ranking fails. Only filled in
    /// when a ground truth is known.
    pub gaps: Option<Vec<Option<GapInterval>>>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub pilot: ApproxModel,
}

impl ActiveSetResult {
    pub fn attach_gaps(&mut self, truth: &TermFamily) {
        self.gaps = Some(gap_intervals(&self.sensitivity, truth, self.thresholds.len()));
    }
}

/// Downward closure of `{ u : ρ(u) > ε_{|u|} }`.
pub fn threshold_terms(report: &SensitivityReport, thresholds: &[f64], d: usize) -> Result<TermFamily> {
    let mut keep = vec![TermSubset::empty()];
    for t in &report.terms {
        let Some(eps) = thresholds.get(t.u.len() - 1) else {
            continue;
        };
        let gsi = t.gsi.ok_or(Error::ZeroVariance)?;
        if gsi > *eps {
            keep.push(t.u.clone());
        }
    }
    TermFamily::downward_closure(d, keep)
}

/// Pilot fit on `I(U_{d_s})`, sensitivity ranking and thresholding.
pub fn detect(cfg: &DetectionConfig, target: Target<'_>) -> Result<ActiveSetResult> {
    cfg.validate()?;
    let family = TermFamily::up_to_order(cfg.d, cfg.ds)?;
    let set = cfg.search.build(&family)?;
    let mut warnings = Vec::new();
    let mut pilot = fit(&set, &cfg.sampling, target, &cfg.solver, &mut warnings)?;
    pilot.provenance.config = serde_json::to_value(cfg)?;
    let sensitivity = pilot.coefficients.sensitivity()?;
    if sensitivity.total_variance == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let active = threshold_terms(&sensitivity, &cfg.thresholds, cfg.d)?;
    Ok(ActiveSetResult {
        sensitivity,
        active,
        thresholds: cfg.thresholds.clone(),
        gaps: None,
        warnings,
        pilot,
    })
}

/// `I^{(j)} = (a^{(j)}, b^{(j)})` for `j = 1, …, d_s`, present when `a < b`.
pub fn gap_intervals(report: &SensitivityReport, truth: &TermFamily, ds: usize) -> Vec<Option<GapInterval>> {
    (1..=ds)
        .map(|order| {
            let mut lower: f64 = 0.0;
            let mut upper: f64 = 1.0;
            for t in report.terms.iter().filter(|t| t.u.len() == order) {
                let g = t.gsi?;
                if truth.contains(&t.u) {
                    upper = upper.min(g);
                } else {
                    lower = lower.max(g);
                }
            }
            (lower < upper).then_some(GapInterval { order, lower, upper })
        })
        .collect()
}

/// How the final fit sizes the per-term index sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BlockSizing {
    /// The same search set for every term of an order.
    OrderDependent,
    /// Terms whose pilot GSI is at least the median of their order get
    /// their size parameter doubled.
    GsiTiered,
}

impl Default for BlockSizing {
    fn default() -> Self {
        BlockSizing::OrderDependent
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxConfig {
    pub search: SearchSet,
    #[serde(default)]
    pub sizing: BlockSizing,
    pub sampling: Sampling,
    #[serde(default)]
    pub solver: LsqrOptions,
}

fn tiered_scales(active: &TermFamily, report: &SensitivityReport) -> Vec<(TermSubset, u64)> {
    let mut out = Vec::new();
    for order in 1..=active.max_order() {
        let mut gsis: Vec<(TermSubset, f64)> = active
            .iter()
            .filter(|u| u.len() == order)
            .map(|u| (u.clone(), report.gsi(u).unwrap_or(0.0)))
            .collect();
        if gsis.is_empty() {
            continue;
        }
        let mut sorted: Vec<f64> = gsis.iter().map(|g| g.1).collect();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 1 {
            sorted[mid]
        } else {
            0.5 * (sorted[mid - 1] + sorted[mid])
        };
        out.extend(gsis.drain(..).map(|(u, g)| (u, if g >= median { 2 } else { 1 })));
    }
    out
}

/// Final least-squares fit restricted to the active terms.
pub fn approximate(
    active: &TermFamily,
    cfg: &ApproxConfig,
    report: Option<&SensitivityReport>,
    target: Target<'_>,
) -> Result<(ApproxModel, Vec<String>)> {
    let d = active.dim();
    let (set, tiering) = match (&cfg.sizing, report) {
        (BlockSizing::OrderDependent, _) => (cfg.search.build(active)?, None),
        (BlockSizing::GsiTiered, Some(report)) => {
            let scales = tiered_scales(active, report);
            let set = GroupedIndexSet::order_dependent(active, |u| {
                let scale = scales.iter().find(|(v, _)| v == u).map_or(1, |s| s.1);
                cfg.search.block(u, d, scale)
            })?;
            let doubled: Vec<String> = scales.iter().filter(|s| s.1 == 2).map(|s| s.0.to_string()).collect();
            (
                set,
                Some(format!(
                    "size parameter doubled for terms with GSI >= order median: {}",
                    doubled.join(" ")
                )),
            )
        }
        (BlockSizing::GsiTiered, None) => {
            return Err(Error::InvalidParameter("tiered sizing needs a sensitivity report".into()))
        }
    };
    let mut warnings = Vec::new();
    let mut model = fit(&set, &cfg.sampling, target, &cfg.solver, &mut warnings)?;
    model.provenance.config = serde_json::to_value(cfg)?;
    model.provenance.tiering = tiering;
    Ok((model, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anova::TermSensitivity;
    use std::f64::consts::TAU;

    fn t(c: &[usize]) -> TermSubset {
        TermSubset::new(c.to_vec()).unwrap()
    }

    /// `cos(2π x1) + 0.5 sin(2π x2) cos(2π x3) + 0.1 cos(4π x4)` in d = 4.
    fn toy(x: &[f64]) -> f64 {
        (TAU * x[0]).cos() + 0.5 * (TAU * x[1]).sin() * (TAU * x[2]).cos() + 0.1 * (2.0 * TAU * x[3]).cos()
    }

    fn toy_truth() -> TermFamily {
        TermFamily::downward_closure(4, [t(&[1]), t(&[2, 3]), t(&[4])]).unwrap()
    }

    fn cfg(sampling: Sampling, thresholds: Vec<f64>) -> DetectionConfig {
        DetectionConfig {
            d: 4,
            ds: 2,
            search: SearchSet::FullGrid { n: vec![8, 4] },
            thresholds,
            sampling,
            solver: LsqrOptions::DETECTION,
        }
    }

    #[test]
    fn detects_toy_structure_scattered() {
        let c = cfg(Sampling::Scattered { samples: 4000, seed: 1 }, vec![1e-3, 1e-3]);
        let mut r = detect(&c, Target::Sampler(&toy)).unwrap();
        assert_eq!(r.active, toy_truth());
        r.attach_gaps(&toy_truth());
        assert!(r.gaps.as_ref().unwrap().iter().all(Option::is_some));
    }

    #[test]
    fn detects_toy_structure_lattice() {
        let c = cfg(Sampling::Lattice { cbc_seed: 2 }, vec![1e-3, 1e-3]);
        let r = detect(&c, Target::Sampler(&toy)).unwrap();
        assert_eq!(r.active, toy_truth());
        // in-band trigonometric polynomial: recovered exactly
        assert!(r.pilot.training_error() < 1e-12);
        let lat = r.pilot.provenance.lattice.as_ref().unwrap();
        assert!(lat.is_reconstructing_set(r.pilot.index_set()));
    }

    #[test]
    fn threshold_extremes() {
        let c = cfg(Sampling::Lattice { cbc_seed: 2 }, vec![1.0, 1.0]);
        let r = detect(&c, Target::Sampler(&toy)).unwrap();
        assert_eq!(r.active, TermFamily::up_to_order(4, 0).unwrap());
        let noisy = |x: &[f64]| toy(x) + 0.01 * (TAU * 3.0 * (x[0] + x[1] + x[2] + x[3])).sin();
        let c = cfg(Sampling::Scattered { samples: 3000, seed: 4 }, vec![0.0, 0.0]);
        let r = detect(&c, Target::Sampler(&noisy)).unwrap();
        assert_eq!(r.active, TermFamily::up_to_order(4, 2).unwrap());
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(Sampling::Scattered { samples: 100, seed: 0 }, vec![0.1]);
        assert!(matches!(c.validate(), Err(Error::LengthMismatch { .. })));
        c.thresholds = vec![0.1, 1.5];
        assert!(c.validate().is_err());
        c.thresholds = vec![0.1, 0.1];
        c.ds = 5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn warns_when_samples_are_scarce() {
        let c = cfg(Sampling::Scattered { samples: 400, seed: 1 }, vec![0.01, 0.01]);
        let r = detect(&c, Target::Sampler(&toy)).unwrap();
        assert_eq!(r.warnings.len(), 1);
    }

    fn report(entries: &[(&[usize], f64)]) -> SensitivityReport {
        let mut terms: Vec<TermSensitivity> = entries
            .iter()
            .map(|(u, g)| TermSensitivity {
                u: t(u),
                variance: *g,
                gsi: Some(*g),
            })
            .collect();
        terms.sort_by(|a, b| a.u.cmp(&b.u));
        SensitivityReport {
            mean: Complex64::new(0.0, 0.0),
            total_variance: 1.0,
            terms,
        }
    }

    #[test]
    fn gap_examples() {
        let r = report(&[(&[1], 0.5), (&[2], 0.3), (&[3], 0.0), (&[1, 2], 0.2), (&[1, 3], 0.0), (&[2, 3], 0.0)]);
        let truth = TermFamily::downward_closure(3, [t(&[1, 2])]).unwrap();
        let g = gap_intervals(&r, &truth, 2);
        assert_eq!(g[0], Some(GapInterval { order: 1, lower: 0.0, upper: 0.3 }));
        assert_eq!(g[1], Some(GapInterval { order: 2, lower: 0.0, upper: 0.2 }));
        let wrong = TermFamily::downward_closure(3, [t(&[1, 3])]).unwrap();
        let g = gap_intervals(&r, &wrong, 2);
        assert!(g[0].is_none() && g[1].is_none());
    }

    #[test]
    fn threshold_semantics_are_strict() {
        let r = report(&[(&[1], 0.5), (&[2], 0.3), (&[1, 2], 0.2)]);
        let fam = threshold_terms(&r, &[0.3, 0.1], 2).unwrap();
        assert_eq!(fam, TermFamily::downward_closure(2, [t(&[1, 2])]).unwrap());
        let fam = threshold_terms(&r, &[0.3, 0.2], 2).unwrap();
        assert_eq!(fam, TermFamily::downward_closure(2, [t(&[1])]).unwrap());
    }

    #[test]
    fn refit_on_pilot_family_reproduces_pilot() {
        let c = cfg(Sampling::Scattered { samples: 3000, seed: 9 }, vec![0.0, 0.0]);
        let r = detect(&c, Target::Sampler(&toy)).unwrap();
        let fam = TermFamily::up_to_order(4, 2).unwrap();
        let a = ApproxConfig {
            search: c.search.clone(),
            sizing: BlockSizing::OrderDependent,
            sampling: c.sampling.clone(),
            solver: c.solver,
        };
        let (m, _) = approximate(&fam, &a, None, Target::Sampler(&toy)).unwrap();
        assert_eq!(m.coefficients, r.pilot.coefficients);
    }

    #[test]
    fn mean_only_models() {
        let fam = TermFamily::up_to_order(4, 0).unwrap();
        let a = ApproxConfig {
            search: SearchSet::FullGrid { n: vec![4] },
            sizing: BlockSizing::OrderDependent,
            sampling: Sampling::Scattered { samples: 500, seed: 3 },
            solver: LsqrOptions::FINAL_FIT,
        };
        let (m, _) = approximate(&fam, &a, None, Target::Sampler(&toy)).unwrap();
        let nodes = uniform_nodes(4, 500, 3).unwrap();
        let mean = nodes.iter().map(toy).sum::<f64>() / 500.0;
        assert!((m.coefficients.values()[0].re - mean).abs() < 1e-10);

        let a = ApproxConfig {
            sampling: Sampling::Lattice { cbc_seed: 0 },
            ..a
        };
        let (m, _) = approximate(&fam, &a, None, Target::Sampler(&toy)).unwrap();
        assert_eq!(m.provenance.lattice.as_ref().unwrap().size(), 1);
        assert_eq!(m.coefficients.values()[0], Complex64::new(toy(&[0.0; 4]), 0.0));
    }

    #[test]
    fn tiered_sizing_doubles_top_terms() {
        let r = report(&[(&[1], 0.5), (&[2], 0.3), (&[3], 0.01), (&[4], 0.02)]);
        let fam = TermFamily::up_to_order(4, 1).unwrap();
        let a = ApproxConfig {
            search: SearchSet::FullGrid { n: vec![4] },
            sizing: BlockSizing::GsiTiered,
            sampling: Sampling::Scattered { samples: 500, seed: 3 },
            solver: LsqrOptions::FINAL_FIT,
        };
        let (m, _) = approximate(&fam, &a, Some(&r), Target::Sampler(&toy)).unwrap();
        let sizes: Vec<usize> = m.index_set().blocks().iter().map(LowDimIndexSet::len).collect();
        assert_eq!(sizes, vec![1, 7, 7, 3, 3]);
        assert!(m.provenance.tiering.as_ref().unwrap().contains("{1} {2}"));
    }

    #[test]
    fn model_json_round_trip_is_exact() {
        let c = cfg(Sampling::Scattered { samples: 2000, seed: 5 }, vec![0.01, 0.01]);
        let r = detect(&c, Target::Sampler(&toy)).unwrap();
        let s = r.pilot.to_json().unwrap();
        let back = ApproxModel::from_json(&s).unwrap();
        assert_eq!(back, r.pilot);
        assert_eq!(back.to_json().unwrap(), s);
        let x = [0.1, 0.7, 0.3, 0.9];
        assert_eq!(back.evaluate(&x).unwrap(), r.pilot.evaluate(&x).unwrap());
        // 1.1 - 1 is not exactly 0.1
        let shifted = r.pilot.evaluate(&[1.1, -0.3, 0.3, 0.9]).unwrap();
        assert!((shifted - r.pilot.evaluate(&x).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn hex_floats() {
        for v in [0.0, -0.0, 1.5, f64::MIN_POSITIVE, -3.25e-300, f64::MAX] {
            assert_eq!(f64_from_hex(&f64_to_hex(v)).unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(f64_to_hex(1.0), "3ff0000000000000");
        assert!(f64_from_hex("zz").is_err());
    }

    #[test]
    fn search_set_config_format() {
        let s: SearchSet = serde_json::from_str(r#"{"type":"full_grid","params":{"n":[32,8,4]}}"#).unwrap();
        assert_eq!(s, SearchSet::FullGrid { n: vec![32, 8, 4] });
        let h: SearchSet = serde_json::from_str(r#"{"type":"hyperbolic_cross","params":{"n":[100,100,100]}}"#).unwrap();
        assert_eq!(h.orders(), 3);
        let samp: Sampling = serde_json::from_str(r#"{"scenario":"lattice","cbc_seed":4}"#).unwrap();
        assert_eq!(samp, Sampling::Lattice { cbc_seed: 4 });
    }
}
