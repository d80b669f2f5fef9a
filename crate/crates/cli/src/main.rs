mod config;
mod expr;

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anova_fourier::bench::{
    gsi_bars_csv, run_experiment, table_config, testfun_value, truth_for, ExactBench, Scale, CSV_HEADER,
    DEFAULT_SEED, DESK_SAMPLES,
};
use anova_fourier::index_sets::diff_cardinality_bound;
use anova_fourier::lattice::{cbc_construct, CbcOptions};
use anova_fourier::method::{approximate, detect, Sampling, Target};
use anova_fourier::weights::{bound_curve, evaluate_bound, BoundKind, SweepParam};
use anova_fourier::{ApproxModel, Frequency, GroupedIndexSet, WeightParams};
use anyhow::{anyhow, Context as _};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use config::{load, read_data, read_rows, resolve, sha256_hex, ActiveSetDoc, ApproximateDoc, DetectDoc, IndexSetDoc, TargetSpec};

#[derive(Parser)]
#[command(name = "anova-fourier", version, about = "ANOVA-based Fourier approximation of high-dimensional functions")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides the seed in the config (sampling seed or CBC seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Scenario {
    Scattered,
    Lattice,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScaleArg {
    Desk,
    Paper,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Wiener,
    SobolevL2,
    SobolevLinf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SweepArg {
    Alpha,
    Beta,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a grouped index set and report its size.
    IndexSet {
        #[arg(long)]
        config: PathBuf,
    },
    /// Rank-1 lattices.
    Lattice {
        #[command(subcommand)]
        action: LatticeCmd,
    },
    /// Pilot fit on all terms up to order d_s and threshold the sensitivities.
    Detect {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        scenario: Option<Scenario>,
    },
    /// Final fit restricted to an active set.
    Approximate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        scenario: Option<Scenario>,
    },
    /// Run one row of the benchmark tables and append it to bench.csv.
    Bench {
        #[arg(long)]
        table: usize,
        #[arg(long)]
        row: usize,
        #[arg(long, value_enum, default_value = "desk")]
        scale: ScaleArg,
    },
    /// Evaluate a truncation-error bound, or a sweep of it.
    Bound {
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 3)]
        ds: usize,
        #[arg(long, default_value_t = 9)]
        d: usize,
        /// Dimension weights as an expression in s.
        #[arg(long, default_value = "1")]
        gammas: String,
        /// Order weights as an expression in s.
        #[arg(long = "Gammas", default_value = "1")]
        order_weights: String,
        #[arg(long, value_enum, default_value = "wiener")]
        kind: KindArg,
        #[arg(long, value_enum)]
        sweep: Option<SweepArg>,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, default_value_t = 2.0)]
        to: f64,
        #[arg(long, default_value_t = 41)]
        steps: usize,
    },
    /// Evaluate a saved model.
    Eval {
        #[arg(long)]
        model: PathBuf,
        /// `;`-separated points, one per row.
        #[arg(long)]
        points: Option<PathBuf>,
        /// A single point as comma-separated coordinates; repeatable.
        #[arg(long = "x", allow_negative_numbers = true)]
        x: Vec<String>,
    },
    /// Write plot data: exact GSI bars of the benchmark and bound curves.
    PlotData,
}

#[derive(Subcommand)]
enum LatticeCmd {
    /// Build a reconstructing lattice for an index set file or an index-set config.
    Build {
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        index_set: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Exit status 2 for configuration problems, 1 for failures afterwards.
enum Failure {
    Config(anyhow::Error),
    Pipeline(anyhow::Error),
}

fn cfg<T, E: Into<anyhow::Error>>(r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Config(e.into()))
}

fn run<T, E: Into<anyhow::Error>>(r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Pipeline(e.into()))
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    config_digest: String,
    seeds: BTreeMap<String, u64>,
    artifacts: Vec<String>,
    tool_version: &'static str,
    wall_seconds: f64,
    warnings: Vec<String>,
    summary: serde_json::Value,
}

struct Ctx {
    out: PathBuf,
    seed: Option<u64>,
    start: Instant,
    artifacts: Vec<String>,
}

impl Ctx {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), Failure> {
        let p = self.out.join(name);
        run(fs::write(&p, contents).with_context(|| format!("cannot write {}", p.display())))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<(), Failure> {
        let s = run(serde_json::to_string_pretty(v))?;
        self.write(name, &s)
    }

    fn append(&mut self, name: &str, header: Option<&str>, line: &str) -> Result<(), Failure> {
        let p = self.out.join(name);
        let fresh = !p.exists();
        let mut f = run(OpenOptions::new().create(true).append(true).open(&p))?;
        if fresh {
            if let Some(h) = header {
                run(writeln!(f, "{h}"))?;
            }
        }
        run(writeln!(f, "{line}"))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn manifest(
        mut self,
        command: &str,
        config_digest: String,
        seeds: BTreeMap<String, u64>,
        warnings: Vec<String>,
        summary: serde_json::Value,
    ) -> Result<(), Failure> {
        for w in &warnings {
            log::warn!("{w}");
        }
        let m = RunManifest {
            command: command.into(),
            config_digest,
            seeds,
            artifacts: self.artifacts.clone(),
            tool_version: env!("CARGO_PKG_VERSION"),
            wall_seconds: self.start.elapsed().as_secs_f64(),
            warnings,
            summary,
        };
        self.write_json("manifest.json", &m)
    }
}

fn sampling_seeds(s: &Sampling) -> BTreeMap<String, u64> {
    match s {
        Sampling::Scattered { seed, .. } => BTreeMap::from([("sampling".to_string(), *seed)]),
        Sampling::Lattice { cbc_seed } => BTreeMap::from([("cbc".to_string(), *cbc_seed)]),
    }
}

fn override_sampling(s: &Sampling, scenario: Option<Scenario>, seed: Option<u64>) -> Sampling {
    let current = match s {
        Sampling::Scattered { seed, .. } => *seed,
        Sampling::Lattice { cbc_seed } => *cbc_seed,
    };
    let seed = seed.unwrap_or(current);
    match (scenario, s) {
        (Some(Scenario::Lattice), _) | (None, Sampling::Lattice { .. }) => Sampling::Lattice { cbc_seed: seed },
        (_, Sampling::Scattered { samples, .. }) => Sampling::Scattered { samples: *samples, seed },
        (Some(Scenario::Scattered), Sampling::Lattice { .. }) => Sampling::Scattered {
            samples: DESK_SAMPLES,
            seed,
        },
    }
}

/// Target, optional data digest and warnings about the input.
struct Input {
    data: Option<config::Data>,
    warnings: Vec<String>,
}

impl Input {
    fn new(spec: &TargetSpec, d: usize, dir: &Path) -> Result<Self, Failure> {
        match spec {
            TargetSpec::Bench => {
                if d != anova_fourier::bench::DIM {
                    return Err(Failure::Config(anyhow!("the benchmark target needs d = 9, got d = {d}")));
                }
                Ok(Input { data: None, warnings: Vec::new() })
            }
            TargetSpec::Data { path } => {
                let data = cfg(read_data(&resolve(dir, path), d))?;
                let warnings = if data.reduced > 0 {
                    vec![format!("{} coordinates reduced into [0,1)", data.reduced)]
                } else {
                    Vec::new()
                };
                Ok(Input { data: Some(data), warnings })
            }
        }
    }

    fn target(&self) -> Target<'_> {
        match &self.data {
            None => Target::Sampler(&testfun_value),
            Some(d) => Target::Data {
                nodes: &d.nodes,
                values: &d.values,
            },
        }
    }

    fn digest(&self) -> Option<String> {
        self.data.as_ref().map(|d| d.digest.clone())
    }
}

fn cmd_index_set(ctx: Ctx, config: &Path) -> Result<(), Failure> {
    let loaded = cfg(load::<IndexSetDoc>(config))?;
    let set = cfg(loaded.doc.build())?;
    let mut ctx = ctx;
    ctx.write("index_set.json", &run(set.to_json())?)?;
    let b = diff_cardinality_bound(&set);
    let blocks: Vec<serde_json::Value> = set
        .blocks()
        .iter()
        .map(|blk| json!({"u": blk.term().to_string(), "size": blk.len()}))
        .collect();
    let summary = json!({"size": set.len(), "terms": set.blocks().len(), "difference_bound_fine": b.fine,
        "difference_bound_coarse": b.coarse, "blocks": blocks});
    println!("|I| = {}", set.len());
    ctx.manifest("index-set", loaded.digest, BTreeMap::new(), Vec::new(), summary)
}

fn cmd_lattice(ctx: Ctx, index_set: Option<&Path>, config: Option<&Path>) -> Result<(), Failure> {
    let (set, digest) = match (index_set, config) {
        (Some(p), None) => {
            let text = cfg(fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display())))?;
            let set = cfg(GroupedIndexSet::from_json(&text).with_context(|| format!("{}: invalid index set", p.display())))?;
            (set, sha256_hex(text.as_bytes()))
        }
        (None, Some(p)) => {
            let loaded = cfg(load::<IndexSetDoc>(p))?;
            (cfg(loaded.doc.build())?, loaded.digest)
        }
        _ => return Err(Failure::Config(anyhow!("give exactly one of --index-set and --config"))),
    };
    let seed = ctx.seed.unwrap_or(0);
    let freqs: Vec<Frequency> = set.frequencies().collect();
    let lat = run(cbc_construct(&freqs, &CbcOptions { seed, ..CbcOptions::default() }))?;
    let set_digest = sha256_hex(run(set.to_json())?.as_bytes());
    let doc = json!({"d": set.dim(), "M": lat.size(), "z": lat.z(), "index_set_digest": set_digest});
    let mut ctx = ctx;
    ctx.write_json("lattice.json", &doc)?;
    println!("M = {} for |I| = {}", lat.size(), set.len());
    let summary = json!({"size": set.len(), "M": lat.size()});
    ctx.manifest("lattice build", digest, BTreeMap::from([("cbc".into(), seed)]), Vec::new(), summary)
}

fn cmd_detect(mut ctx: Ctx, config: &Path, scenario: Option<Scenario>) -> Result<(), Failure> {
    let loaded = cfg(load::<DetectDoc>(config))?;
    let mut run_cfg = loaded.doc.run.clone();
    run_cfg.sampling = override_sampling(&run_cfg.sampling, scenario, ctx.seed);
    cfg(run_cfg.validate())?;
    let input = Input::new(&loaded.doc.target, run_cfg.d, &loaded.dir)?;
    let mut result = run(detect(&run_cfg, input.target()))?;
    result.pilot.provenance.data_digest = input.digest();
    if input.data.is_none() {
        result.attach_gaps(&truth_for(run_cfg.ds));
    }
    let mut warnings = input.warnings.clone();
    warnings.extend(result.warnings.iter().cloned());

    ctx.write("sensitivity.csv", &result.sensitivity.to_csv())?;
    ctx.write_json("sensitivity.json", &result.sensitivity)?;
    ctx.write_json("active_set.json", &result)?;
    ctx.write("pilot_model.json", &run(result.pilot.to_json())?)?;
    let terms: Vec<String> = result.active.iter().map(ToString::to_string).collect();
    println!("active terms: {}", terms.join(" "));
    let summary = json!({
        "active": terms,
        "index_set_size": result.pilot.index_set().len(),
        "samples": result.pilot.provenance.samples,
        "lattice_size": result.pilot.provenance.lattice.as_ref().map(|l| l.size()),
        "training_error": result.pilot.training_error(),
        "gaps": result.gaps,
    });
    ctx.manifest("detect", loaded.digest, sampling_seeds(&run_cfg.sampling), warnings, summary)
}

fn cmd_approximate(mut ctx: Ctx, config: &Path, scenario: Option<Scenario>) -> Result<(), Failure> {
    let loaded = cfg(load::<ApproximateDoc>(config))?;
    let doc = &loaded.doc;
    let mut acfg = doc.approx.clone();
    acfg.sampling = override_sampling(&acfg.sampling, scenario, ctx.seed);
    let (family, report) = match (&doc.active_set, &doc.active_terms) {
        (Some(p), None) => {
            let p = resolve(&loaded.dir, p);
            let text = cfg(fs::read_to_string(&p).with_context(|| format!("cannot read {}", p.display())))?;
            let a: ActiveSetDoc = cfg(serde_json::from_str(&text).with_context(|| format!("{}: invalid active set", p.display())))?;
            (a.active, Some(a.sensitivity))
        }
        (None, Some(terms)) => (cfg(anova_fourier::TermFamily::downward_closure(doc.d, terms.iter().cloned()))?, None),
        _ => return Err(Failure::Config(anyhow!("give exactly one of `active_set` and `active_terms`"))),
    };
    if family.dim() != doc.d {
        return Err(Failure::Config(anyhow!("active set has d = {}, config has d = {}", family.dim(), doc.d)));
    }
    let input = Input::new(&doc.target, doc.d, &loaded.dir)?;
    let (mut model, fit_warnings) = run(approximate(&family, &acfg, report.as_ref(), input.target()))?;
    model.provenance.data_digest = input.digest();
    let mut warnings = input.warnings.clone();
    warnings.extend(fit_warnings);
    ctx.write("model.json", &run(model.to_json())?)?;
    let mut summary = json!({
        "index_set_size": model.index_set().len(),
        "samples": model.provenance.samples,
        "lattice_size": model.provenance.lattice.as_ref().map(|l| l.size()),
        "eps_l2": model.training_error(),
    });
    if input.data.is_none() {
        let exact = ExactBench::new(ExactBench::DEFAULT_BANDWIDTH);
        summary["eps_L2"] = json!(run(exact.l2_error(&model.coefficients))?);
    }
    println!("|I| = {}, training error {:.3e}", model.index_set().len(), model.training_error());
    ctx.manifest("approximate", loaded.digest, sampling_seeds(&acfg.sampling), warnings, summary)
}

fn cmd_bench(mut ctx: Ctx, table: usize, row: usize, scale: ScaleArg) -> Result<(), Failure> {
    let scale = match scale {
        ScaleArg::Desk => Scale::Desk,
        ScaleArg::Paper => Scale::Paper,
    };
    let seed = ctx.seed.unwrap_or(DEFAULT_SEED);
    let ecfg = cfg(table_config(table, row, scale, seed))?;
    let exact = ExactBench::new(ExactBench::DEFAULT_BANDWIDTH);
    let result = run(run_experiment(&ecfg, &exact))?;
    let line = result.csv_line();
    println!("{CSV_HEADER}\n{line}");
    ctx.append("bench.csv", Some(CSV_HEADER), &line)?;
    ctx.append("bench_log.jsonl", None, &run(serde_json::to_string(&json!({"config": ecfg, "row": result})))?)?;
    let digest = sha256_hex(run(serde_json::to_string(&ecfg))?.as_bytes());
    let summary = run(serde_json::to_value(&result))?;
    ctx.manifest("bench", digest, BTreeMap::from([("seed".into(), seed)]), Vec::new(), summary)
}

#[allow(clippy::too_many_arguments)]
fn cmd_bound(
    mut ctx: Ctx,
    alpha: f64,
    beta: f64,
    ds: usize,
    d: usize,
    gammas: &str,
    order_weights: &str,
    kind: KindArg,
    sweep: Option<(SweepArg, f64, f64, usize)>,
) -> Result<(), Failure> {
    let gamma = cfg(expr::sequence(gammas, d))?;
    let order = cfg(expr::sequence(order_weights, d))?;
    let p = cfg(WeightParams::new(alpha, beta, gamma, order))?;
    let kind = match kind {
        KindArg::Wiener => BoundKind::Wiener,
        KindArg::SobolevL2 => BoundKind::SobolevL2,
        KindArg::SobolevLinf => BoundKind::SobolevLinf,
    };
    let digest = sha256_hex(format!("{alpha};{beta};{ds};{d};{gammas};{order_weights};{kind:?};{sweep:?}").as_bytes());
    ctx.write_json("weights.json", &p)?;
    let summary = match sweep {
        None => {
            let v = run(evaluate_bound(kind, &p, ds))?;
            println!("{v:e}");
            json!({"bound": v})
        }
        Some((param, from, to, steps)) => {
            if steps < 2 || !(to > from) {
                return Err(Failure::Config(anyhow!("a sweep needs steps >= 2 and to > from")));
            }
            let grid: Vec<f64> = (0..steps).map(|i| from + (to - from) * i as f64 / (steps - 1) as f64).collect();
            let param = match param {
                SweepArg::Alpha => SweepParam::Alpha,
                SweepArg::Beta => SweepParam::Beta,
            };
            let curve = bound_curve(kind, &p, ds, param, &grid);
            let csv = curve.to_csv();
            print!("{csv}");
            ctx.write("bound_curve.csv", &csv)?;
            json!({"points": grid.len()})
        }
    };
    ctx.manifest("bound", digest, BTreeMap::new(), Vec::new(), summary)
}

fn cmd_eval(mut ctx: Ctx, model: &Path, points: Option<&Path>, xs: &[String]) -> Result<(), Failure> {
    let text = cfg(fs::read_to_string(model).with_context(|| format!("cannot read {}", model.display())))?;
    let m = cfg(ApproxModel::from_json(&text))?;
    let d = m.index_set().dim();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    if let Some(p) = points {
        rows.extend(cfg(read_rows(p, d))?.0);
    }
    for x in xs {
        let row: Vec<f64> = cfg(x
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("bad point `{x}`")))?;
        if row.len() != d {
            return Err(Failure::Config(anyhow!("point `{x}` has {} coordinates, model has d = {d}", row.len())));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Failure::Config(anyhow!("no points given; use --points or --x")));
    }
    let header: Vec<String> = (1..=d).map(|i| format!("x{i}")).chain(["value".into(), "imag".into()]).collect();
    let mut csv = header.join(";") + "\n";
    let mut max_imag = 0.0f64;
    for row in &rows {
        let v = run(m.evaluate(row))?;
        max_imag = max_imag.max(v.im.abs());
        let coords: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        csv.push_str(&format!("{};{:e};{:e}\n", coords.join(";"), v.re, v.im));
    }
    print!("{csv}");
    ctx.write("evaluations.csv", &csv)?;
    let digest = sha256_hex(text.as_bytes());
    let summary = json!({"points": rows.len(), "max_abs_imag": max_imag});
    ctx.manifest("eval", digest, BTreeMap::new(), Vec::new(), summary)
}

fn cmd_plot_data(mut ctx: Ctx) -> Result<(), Failure> {
    let exact = ExactBench::new(ExactBench::DEFAULT_BANDWIDTH);
    let report = exact.report();
    for order in 1..=3 {
        ctx.write(&format!("gsi_bars_order{order}.csv"), &gsi_bars_csv(&report, order))?;
    }
    let d = 9;
    let gamma: Vec<f64> = (1..=d).map(|s| 1.0 / s as f64).collect();
    let order: Vec<f64> = (1..=d).map(|s| (3f64.sqrt() / std::f64::consts::PI).powi(s as i32)).collect();
    let base = run(WeightParams::new(0.0, 1.0, gamma, order))?;
    let grid = |a: f64, b: f64, n: usize| -> Vec<f64> { (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect() };
    for ds in 1..=4 {
        let alpha = bound_curve(BoundKind::SobolevL2, &base, ds, SweepParam::Alpha, &grid(0.0, 4.0, 81));
        ctx.write(&format!("bound_l2_alpha_ds{ds}.csv"), &alpha.to_csv())?;
        let beta = bound_curve(BoundKind::SobolevL2, &base, ds, SweepParam::Beta, &grid(0.0, 4.0, 81));
        ctx.write(&format!("bound_l2_beta_ds{ds}.csv"), &beta.to_csv())?;
        let linf = bound_curve(BoundKind::SobolevLinf, &base, ds, SweepParam::Beta, &grid(0.55, 4.0, 70));
        ctx.write(&format!("bound_linf_beta_ds{ds}.csv"), &linf.to_csv())?;
    }
    let n = ctx.artifacts.len();
    println!("wrote {n} plot-data files to {}", ctx.out.display());
    ctx.manifest("plot-data", sha256_hex(b"plot-data"), BTreeMap::new(), Vec::new(), json!({"files": n}))
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Config(anyhow!("--threads must be positive")));
        }
        cfg(rayon::ThreadPoolBuilder::new().num_threads(n).build_global())?;
    }
    cfg(fs::create_dir_all(&cli.out).with_context(|| format!("cannot create {}", cli.out.display())))?;
    let ctx = Ctx {
        out: cli.out.clone(),
        seed: cli.seed,
        start: Instant::now(),
        artifacts: Vec::new(),
    };
    match cli.cmd {
        Cmd::IndexSet { config } => cmd_index_set(ctx, &config),
        Cmd::Lattice {
            action: LatticeCmd::Build { index_set, config },
        } => cmd_lattice(ctx, index_set.as_deref(), config.as_deref()),
        Cmd::Detect { config, scenario } => cmd_detect(ctx, &config, scenario),
        Cmd::Approximate { config, scenario } => cmd_approximate(ctx, &config, scenario),
        Cmd::Bench { table, row, scale } => cmd_bench(ctx, table, row, scale),
        Cmd::Bound {
            alpha,
            beta,
            ds,
            d,
            gammas,
            order_weights,
            kind,
            sweep,
            from,
            to,
            steps,
        } => cmd_bound(
            ctx,
            alpha,
            beta,
            ds,
            d,
            &gammas,
            &order_weights,
            kind,
            sweep.map(|s| (s, from, to, steps)),
        ),
        Cmd::Eval { model, points, x } => cmd_eval(ctx, &model, points.as_deref(), &x),
        Cmd::PlotData => cmd_plot_data(ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Pipeline(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
