//! `fairclust` — command-line driver for fair clustering via matroid
//! facility location.
//!
//! Exit codes: 0 success, 1 input or parameter error, 2 infeasible.

mod generate;
mod io;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use fairclust_core::facility_location::{relaxation_lp, solve_matroid_fl, FlError, FlOptions};
use fairclust_core::geometry::{CostParams, Dataset};
use fairclust_core::oracle::{
    oracle_fair_clustering, oracle_fair_kcenter, oracle_matroid_fl, OracleError, OracleValue,
};
use fairclust_core::reductions::kcenter::solve_fair_kcenter;
use fairclust_core::reductions::{
    reduce_fair_to_fl, solve_fair_clustering_with, ReductionError, SolveReport,
};

use crate::io::LoadedInput;
use crate::report::TimingsJson;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Anything wrong with the input or configuration → exit 1.
    #[error("{0}")]
    Input(String),
    /// A well-posed problem with no feasible answer → exit 2.
    #[error("{0}")]
    Infeasible(String),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Solve fair clustering through the LP-rounding pipeline.
    LpRound,
    /// Solve fair k-center through the threshold pipeline.
    Kcenter,
    /// Exhaustive optimum (small instances only).
    Oracle,
    /// Fairness ratios of a given center set.
    Audit,
    /// Emit a synthetic dataset CSV.
    Generate,
    /// Cost-vs-alpha sweep, CSV output.
    Sweep,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::LpRound => "lp-round",
            Mode::Kcenter => "kcenter",
            Mode::Oracle => "oracle",
            Mode::Audit => "audit",
            Mode::Generate => "generate",
            Mode::Sweep => "sweep",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Objective {
    /// Powered ℓp clustering cost.
    Clustering,
    /// Maximum center distance.
    Kcenter,
}

/// One solver invocation; see `--help` for the flag-by-flag story.
#[derive(Parser, Debug)]
#[command(name = "fairclust", version, about = "Fair clustering via matroid facility location")]
struct RunConfig {
    /// What to do.
    #[arg(long, value_enum)]
    mode: Mode,

    /// Input file: point CSV (`id,w,x1,...`), distance-matrix CSV, or
    /// facility-location JSON.
    #[arg(long)]
    input: Option<PathBuf>,

    /// Number of clusters.
    #[arg(long)]
    k: Option<usize>,

    /// Fairness stretch factor (α ≥ 1).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,

    /// Cost exponent of the ℓp objective (p ≥ 1).
    #[arg(long, default_value_t = 2.0)]
    p: f64,

    /// Approximation slack ε.
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,

    /// Seed for `--mode generate`.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Where to write the report (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,

    /// Merge duplicate points (weights add) before solving.
    #[arg(long)]
    dedup: bool,

    /// Solve the small rounding LPs in exact rational arithmetic.
    #[arg(long = "exact-rational")]
    exact_rational: bool,

    /// Also write the facility-location LP relaxation next to the report
    /// (requires --output, lp-round mode only).
    #[arg(long = "dump-lp")]
    dump_lp: bool,

    /// Include wall-clock timings in the report. Off by default so that
    /// identical configs produce byte-identical reports.
    #[arg(long = "emit-timings")]
    emit_timings: bool,

    /// Centers JSON for `--mode audit`: `[0, 3]` or `{"centers": [0, 3]}`.
    #[arg(long)]
    centers: Option<PathBuf>,

    /// Objective for `--mode oracle` and `--mode sweep` on point datasets.
    #[arg(long, value_enum, default_value_t = Objective::Clustering)]
    objective: Objective,

    /// Worker threads across sweep points (sweep mode only).
    #[arg(long, default_value_t = 1)]
    jobs: usize,

    /// Comma-separated α values for `--mode sweep`.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1.5, 2.0, 2.5, 3.0])]
    alphas: Vec<f64>,

    /// Points to generate (`--mode generate`).
    #[arg(long)]
    n: Option<usize>,

    /// Dimensions for generated points.
    #[arg(long, default_value_t = 2)]
    dims: usize,

    /// Blob count for generated points.
    #[arg(long, default_value_t = 1)]
    clusters: usize,

    /// Within-blob standard deviation scale for generated points.
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
}

fn main() -> ExitCode {
    let cfg = match RunConfig::try_parse() {
        Ok(cfg) => cfg,
        Err(err) => {
            use clap::error::ErrorKind;
            let ok = matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = err.print();
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Infeasible(msg)) => {
            eprintln!("infeasible: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cfg: &RunConfig) -> Result<(), CliError> {
    validate(cfg)?;
    match cfg.mode {
        Mode::Generate => run_generate(cfg),
        Mode::LpRound => run_lp_round(cfg),
        Mode::Kcenter => run_kcenter(cfg),
        Mode::Oracle => run_oracle(cfg),
        Mode::Audit => run_audit(cfg),
        Mode::Sweep => run_sweep(cfg),
    }
}

/// Mode-specific completeness, checked before any input is read.
fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    let need = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(CliError::Input(format!("--mode {} requires {what}", cfg.mode.name())))
        }
    };
    match cfg.mode {
        Mode::Generate => need(cfg.n.is_some(), "--n")?,
        // lp-round and oracle accept raw facility-location JSON, which
        // carries its own matroid; --k is checked once the input's kind
        // is known.
        Mode::Oracle | Mode::LpRound => need(cfg.input.is_some(), "--input")?,
        Mode::Kcenter | Mode::Sweep => {
            need(cfg.input.is_some(), "--input and --k")?;
            need(cfg.k.is_some(), "--k")?;
        }
        Mode::Audit => {
            need(cfg.input.is_some(), "--input, --k, and --centers")?;
            need(cfg.k.is_some(), "--k")?;
            need(cfg.centers.is_some(), "--centers")?;
        }
    }
    if cfg.dump_lp {
        if cfg.mode != Mode::LpRound {
            return Err(CliError::Input("--dump-lp only applies to --mode lp-round".into()));
        }
        if cfg.output.is_none() {
            return Err(CliError::Input("--dump-lp requires --output".into()));
        }
    }
    if cfg.jobs == 0 {
        return Err(CliError::Input("--jobs must be at least 1".into()));
    }
    if cfg.mode == Mode::Sweep && cfg.alphas.is_empty() {
        return Err(CliError::Input("--mode sweep requires a nonempty --alphas list".into()));
    }
    Ok(())
}

fn input(cfg: &RunConfig) -> &Path {
    cfg.input.as_deref().expect("validated")
}

fn the_k(cfg: &RunConfig) -> usize {
    cfg.k.expect("validated")
}

fn maybe_dedup(cfg: &RunConfig, ds: Dataset) -> Dataset {
    if cfg.dedup {
        ds.merge_duplicates().0
    } else {
        ds
    }
}

fn fl_options(cfg: &RunConfig) -> FlOptions {
    FlOptions { exact_rounding_lps: cfg.exact_rational, ..FlOptions::default() }
}

fn timings(cfg: &RunConfig, start: Instant) -> Option<TimingsJson> {
    cfg.emit_timings.then(|| TimingsJson { total_ms: start.elapsed().as_secs_f64() * 1e3 })
}

/// Infeasibility keeps exit code 2; everything else from the solver is an
/// input/parameter problem (or an internal bug, also exit 1).
fn solver_err(e: ReductionError) -> CliError {
    match &e {
        ReductionError::Infeasible | ReductionError::Fl(FlError::Infeasible) => {
            CliError::Infeasible(e.to_string())
        }
        _ => CliError::Input(e.to_string()),
    }
}

fn fl_err(e: FlError) -> CliError {
    match &e {
        FlError::Infeasible => CliError::Infeasible(e.to_string()),
        _ => CliError::Input(e.to_string()),
    }
}

fn oracle_err(e: OracleError) -> CliError {
    CliError::Input(e.to_string())
}

// ---------------------------------------------------------------------------
// Modes.
// ---------------------------------------------------------------------------

fn run_generate(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = generate::GenSpec {
        n: cfg.n.expect("validated"),
        dims: cfg.dims,
        clusters: cfg.clusters,
        spread: cfg.spread,
        seed: cfg.seed,
    };
    let points = generate::generate_synthetic(&spec)?;
    io::write_output(cfg.output.as_deref(), &generate::points_to_csv(&points))
}

fn run_lp_round(cfg: &RunConfig) -> Result<(), CliError> {
    let start = Instant::now();
    let opts = fl_options(cfg);
    match io::load_input(input(cfg))? {
        LoadedInput::Dataset(ds) => {
            let ds = maybe_dedup(cfg, ds);
            let k = cfg.k.ok_or_else(|| {
                CliError::Input("--mode lp-round on a point dataset requires --k".into())
            })?;
            if cfg.dump_lp {
                dump_relaxation(cfg, &ds, k)?;
            }
            let rep = solve_fair_clustering_with(&ds, k, cfg.alpha, cfg.epsilon, cfg.p, &opts)
                .map_err(solver_err)?;
            let json = report::SolveReportJson::new(
                "lp-round",
                "clustering",
                &rep,
                timings(cfg, start),
            );
            io::write_output(cfg.output.as_deref(), &report::to_json(&json)?)
        }
        LoadedInput::Fl(fl) => {
            if cfg.dump_lp {
                let lp = relaxation_lp(&fl.instance, fl.instance.demands());
                let dump = report::LpDumpJson::from_lp(&lp);
                io::write_output(Some(&dump_path(cfg)), &report::to_json(&dump)?)?;
            }
            let res = solve_matroid_fl(&fl.instance, &opts).map_err(fl_err)?;
            let json = report::FlReportJson::new(
                &res,
                fl.instance.params().p,
                &fl.facility_ids,
                &fl.client_ids,
                timings(cfg, start),
            );
            io::write_output(cfg.output.as_deref(), &report::to_json(&json)?)
        }
    }
}

/// `report.json` → `report.lp.json`, next to the report.
fn dump_path(cfg: &RunConfig) -> PathBuf {
    cfg.output.as_deref().expect("validated").with_extension("lp.json")
}

/// Rebuilds the solver's reduction (same β schedule) and dumps its LP
/// relaxation. A `--k` equal to the dataset size has no reduction to dump.
fn dump_relaxation(cfg: &RunConfig, ds: &Dataset, k: usize) -> Result<(), CliError> {
    if k >= ds.len() {
        return Err(CliError::Input(
            "--dump-lp: k must be smaller than the dataset for a reduction to exist".into(),
        ));
    }
    let beta = if cfg.p == 1.0 { 22.0 } else { 16f64.powf(cfg.p) };
    let red = reduce_fair_to_fl(ds, k, cfg.alpha, cfg.epsilon, beta, cfg.p).map_err(solver_err)?;
    let lp = relaxation_lp(&red.instance, red.instance.demands());
    let dump = report::LpDumpJson::from_lp(&lp);
    io::write_output(Some(&dump_path(cfg)), &report::to_json(&dump)?)
}

fn run_kcenter(cfg: &RunConfig) -> Result<(), CliError> {
    let start = Instant::now();
    let ds = maybe_dedup(cfg, io::load_dataset(input(cfg))?);
    let rep = solve_fair_kcenter(&ds, the_k(cfg), cfg.alpha, cfg.epsilon).map_err(solver_err)?;
    let json = report::SolveReportJson::new("kcenter", "kcenter", &rep, timings(cfg, start));
    io::write_output(cfg.output.as_deref(), &report::to_json(&json)?)
}

fn run_oracle(cfg: &RunConfig) -> Result<(), CliError> {
    let start = Instant::now();
    match io::load_input(input(cfg))? {
        LoadedInput::Dataset(ds) => {
            let ds = maybe_dedup(cfg, ds);
            let k = cfg.k.ok_or_else(|| {
                CliError::Input("--mode oracle on a point dataset requires --k".into())
            })?;
            let (objective, p, res) = match cfg.objective {
                Objective::Clustering => {
                    let params = CostParams::with_p(cfg.p)
                        .map_err(|e| CliError::Input(e.to_string()))?;
                    let res =
                        oracle_fair_clustering(&ds, k, cfg.alpha, &params).map_err(oracle_err)?;
                    ("clustering", Some(cfg.p), res)
                }
                Objective::Kcenter => {
                    let res = oracle_fair_kcenter(&ds, k, cfg.alpha).map_err(oracle_err)?;
                    ("kcenter", None, res)
                }
            };
            let json = report::OracleReportJson::new(
                objective,
                Some(k),
                Some(cfg.alpha),
                p,
                &res,
                None,
                timings(cfg, start),
            );
            io::write_output(cfg.output.as_deref(), &report::to_json(&json)?)?;
            if res.value == OracleValue::Infeasible {
                return Err(CliError::Infeasible(format!(
                    "no alpha-fair solution with k = {k}, alpha = {} exists",
                    cfg.alpha
                )));
            }
            Ok(())
        }
        LoadedInput::Fl(fl) => {
            let res = oracle_matroid_fl(&fl.instance).map_err(oracle_err)?;
            let json = report::OracleReportJson::new(
                "facility-location",
                None,
                None,
                Some(fl.instance.params().p),
                &res,
                Some(&fl.facility_ids),
                timings(cfg, start),
            );
            io::write_output(cfg.output.as_deref(), &report::to_json(&json)?)?;
            if res.value == OracleValue::Infeasible {
                return Err(CliError::Infeasible(
                    "the matroid admits no feasible facility opening".into(),
                ));
            }
            Ok(())
        }
    }
}

fn run_audit(cfg: &RunConfig) -> Result<(), CliError> {
    let ds = maybe_dedup(cfg, io::load_dataset(input(cfg))?);
    let centers = io::load_centers(cfg.centers.as_deref().expect("validated"))?;
    let k = the_k(cfg);
    let audit = fairclust_core::fairness::fairness_audit(&ds, &centers, k)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let json = report::AuditReportJson {
        schema_version: report::SCHEMA_VERSION,
        mode: "audit",
        k,
        centers,
        ratios: audit.ratios,
        max_ratio: audit.max_ratio,
    };
    io::write_output(cfg.output.as_deref(), &report::to_json(&json)?)
}

// ---------------------------------------------------------------------------
// Sweep.
// ---------------------------------------------------------------------------

fn sweep_point(cfg: &RunConfig, ds: &Dataset, alpha: f64) -> Result<SolveReport, CliError> {
    match cfg.objective {
        Objective::Clustering => {
            solve_fair_clustering_with(ds, the_k(cfg), alpha, cfg.epsilon, cfg.p, &fl_options(cfg))
                .map_err(solver_err)
        }
        Objective::Kcenter => {
            solve_fair_kcenter(ds, the_k(cfg), alpha, cfg.epsilon).map_err(solver_err)
        }
    }
}

/// One row per α, in the order given. `--jobs` distributes points
/// round-robin; the output order never depends on scheduling.
fn run_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let ds = maybe_dedup(cfg, io::load_dataset(input(cfg))?);
    let alphas = &cfg.alphas;
    let jobs = cfg.jobs.min(alphas.len().max(1));
    let mut merged: Vec<Option<Result<SolveReport, CliError>>> =
        (0..alphas.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let ds = &ds;
        let handles: Vec<_> = (0..jobs)
            .map(|worker| {
                scope.spawn(move || {
                    let mut out = Vec::new();
                    let mut i = worker;
                    while i < alphas.len() {
                        out.push((i, sweep_point(cfg, ds, alphas[i])));
                        i += jobs;
                    }
                    out
                })
            })
            .collect();
        for handle in handles {
            for (i, res) in handle.join().expect("sweep worker panicked") {
                merged[i] = Some(res);
            }
        }
    });

    let mut csv = String::from("alpha,cost,fairness_max_ratio,m,beta\n");
    for slot in merged {
        let rep = slot.expect("every sweep point ran")?;
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            rep.alpha, rep.cost, rep.fairness_max_ratio, rep.m, rep.beta
        ));
    }
    io::write_output(cfg.output.as_deref(), &csv)
}
