//! Experiment specification files and the Monte-Carlo runner behind the
//! `freesense` binary.
//!
//! An experiment file is a scenario file (see
//! [`freesense::scenario_file`]) extended with a `kind` and kind-specific
//! keys; see the README for the full key table.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use freesense::estimators::{classical_estimate, iterative_mmse, zf_estimate, PowerGrid};
use freesense::freeprob::recover_block_moments;
use freesense::scenario_file::{parse_list, read_scenario, render_scenario, KeyValues};
use freesense::sim::{synthesize, true_hph_moments};
use freesense::spectral::accumulate;
use freesense::theory::noise_covariance;
use freesense::{
    seed, CovarianceMethod, EstimatorConfig, MarchenkoPastur, Method, NetworkScenario,
    NoiseCovariance, PowerEstimate, Prior,
};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Runtime(_) => 2,
        }
    }
}

impl From<freesense::Error> for RunError {
    fn from(e: freesense::Error) -> Self {
        match e {
            freesense::Error::InvalidConfig(m) => RunError::Config(m),
            other => RunError::Runtime(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Table1,
    MomentRelerr,
    EstimatorCdf,
    Iterative,
    MpDensity,
}

impl ExperimentKind {
    pub fn label(&self) -> &'static str {
        match self {
            ExperimentKind::Table1 => "table1",
            ExperimentKind::MomentRelerr => "moment-relerr",
            ExperimentKind::EstimatorCdf => "estimator-cdf",
            ExperimentKind::Iterative => "iterative",
            ExperimentKind::MpDensity => "mp-density",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [
            ExperimentKind::Table1,
            ExperimentKind::MomentRelerr,
            ExperimentKind::EstimatorCdf,
            ExperimentKind::Iterative,
            ExperimentKind::MpDensity,
        ]
        .into_iter()
        .find(|k| k.label() == s)
        .ok_or_else(|| {
            format!("unknown kind `{s}` (table1, moment-relerr, estimator-cdf, iterative, mp-density)")
        })
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    match s {
        "mmse" => Ok(Method::Mmse),
        "ml" => Ok(Method::Ml),
        "zf" => Ok(Method::Zf),
        "classical" => Ok(Method::Classical),
        _ => Err(format!("unknown estimator `{s}` (mmse, ml, zf, classical)")),
    }
}

fn parse_prior(s: &str) -> Result<Prior, String> {
    match s {
        "uniform-simplex" => Ok(Prior::UniformSimplex),
        "sequential" => Ok(Prior::Sequential),
        _ => Err(format!("unknown prior `{s}` (uniform-simplex, sequential)")),
    }
}

fn prior_label(p: Prior) -> &'static str {
    match p {
        Prior::UniformSimplex => "uniform-simplex",
        Prior::Sequential => "sequential",
    }
}

/// Fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// Absent only for `mp-density`.
    pub scenario: Option<NetworkScenario>,
    pub trials: usize,
    pub estimator: Method,
    pub config: EstimatorConfig,
    pub covariance: CovarianceMethod,
    /// `table1` symbol-count sweep.
    pub l_values: Vec<usize>,
    /// Blocks averaged per `estimator-cdf` trial.
    pub accumulations: usize,
    /// `iterative` refinement steps.
    pub steps: usize,
    /// `mp-density` ratio and number of abscissae.
    pub c: f64,
    pub points: usize,
    pub output_path: String,
}

impl ExperimentSpec {
    /// Canonical text rendering; this is what the config hash covers.
    pub fn render(&self) -> String {
        let mut out = format!("kind = {}\n", self.kind.label());
        if self.kind == ExperimentKind::MpDensity {
            let _ = writeln!(out, "c = {:?}\npoints = {}", self.c, self.points);
        } else {
            out.push_str(&render_scenario(self.scenario.as_ref().expect("scenario")));
            let _ = writeln!(out, "trials = {}", self.trials);
            let _ = writeln!(out, "estimator = {}", self.estimator.label());
            let _ = writeln!(out, "p_max = {:?}", self.config.p_max);
            let _ = writeln!(out, "grid_points = {}", self.config.grid_points);
            let _ = writeln!(out, "moments = {}", self.config.moments);
            let _ = writeln!(out, "prior = {}", prior_label(self.config.prior));
            match self.covariance {
                CovarianceMethod::Analytic => out.push_str("covariance = analytic\n"),
                CovarianceMethod::MonteCarlo { trials, .. } => {
                    let _ = writeln!(out, "covariance = monte-carlo\ncovariance_trials = {trials}");
                }
            }
            match self.kind {
                ExperimentKind::Table1 => {
                    let l: Vec<String> = self.l_values.iter().map(|l| l.to_string()).collect();
                    let _ = writeln!(out, "l_values = {}", l.join(", "));
                }
                ExperimentKind::EstimatorCdf => {
                    let _ = writeln!(out, "accumulations = {}", self.accumulations);
                }
                ExperimentKind::Iterative => {
                    let _ = writeln!(out, "steps = {}", self.steps);
                }
                _ => {}
            }
        }
        let _ = writeln!(out, "output = {}", self.output_path);
        out
    }

    pub fn master_seed(&self) -> u64 {
        self.scenario.as_ref().map_or(0, |s| s.master_seed)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        if let Some(s) = self.scenario.as_mut() {
            s.master_seed = seed;
            if let CovarianceMethod::MonteCarlo { trials, .. } = self.covariance {
                self.covariance =
                    CovarianceMethod::MonteCarlo { trials, seed: seed::domain(seed, "covariance") };
            }
        }
        self
    }

    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.render().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Parses and validates an experiment file's contents.
pub fn parse_spec_str(text: &str) -> Result<ExperimentSpec, RunError> {
    let mut kv = KeyValues::parse(text)?;
    let kind: ExperimentKind = kv.parse_with("kind", |s| s.parse())?.ok_or_else(|| {
        RunError::Config("missing required key `kind`".into())
    })?;
    let output_path =
        kv.get::<String>("output")?.unwrap_or_else(|| format!("{}.csv", kind.label()));
    if kind == ExperimentKind::MpDensity {
        let c: f64 = kv.require("c")?;
        let points: usize = kv.get("points")?.unwrap_or(512);
        MarchenkoPastur::new(c)?;
        if points < 2 {
            return Err(RunError::Config("points must be at least 2".into()));
        }
        kv.finish()?;
        return Ok(ExperimentSpec {
            kind,
            scenario: None,
            trials: 1,
            estimator: Method::Mmse,
            config: EstimatorConfig::new(1.0, 2, 1),
            covariance: CovarianceMethod::Analytic,
            l_values: Vec::new(),
            accumulations: 1,
            steps: 1,
            c,
            points,
            output_path,
        });
    }

    let scenario = read_scenario(&mut kv)?;
    let m = scenario.stations;
    let trials: usize = kv.get("trials")?.unwrap_or(20);
    if trials == 0 {
        return Err(RunError::Config("trials must be at least 1".into()));
    }
    let default_method = if kind == ExperimentKind::Table1 { Method::Classical } else { Method::Mmse };
    let estimator = kv.parse_with("estimator", parse_method)?.unwrap_or(default_method);
    let config = EstimatorConfig {
        p_max: kv.get("p_max")?.unwrap_or(8.0),
        grid_points: kv.get("grid_points")?.unwrap_or(EstimatorConfig::default_grid_points(m)),
        moments: kv.get("moments")?.unwrap_or(m),
        prior: kv.parse_with("prior", parse_prior)?.unwrap_or_default(),
    };
    if matches!(estimator, Method::Mmse | Method::Ml) || kind == ExperimentKind::Iterative {
        config.validate(m)?;
    }
    if config.moments > freesense::MAX_MOMENTS {
        return Err(RunError::Config(format!("moments must be ≤ {}", freesense::MAX_MOMENTS)));
    }
    let cov_kind = kv.get::<String>("covariance")?.unwrap_or_else(|| "monte-carlo".into());
    let cov_trials: usize = kv.get("covariance_trials")?.unwrap_or(200);
    let covariance = match cov_kind.as_str() {
        "analytic" => CovarianceMethod::Analytic,
        "monte-carlo" if cov_trials >= 2 => CovarianceMethod::MonteCarlo {
            trials: cov_trials,
            seed: seed::domain(scenario.master_seed, "covariance"),
        },
        "monte-carlo" => return Err(RunError::Config("covariance_trials must be at least 2".into())),
        other => {
            return Err(RunError::Config(format!(
                "unknown covariance `{other}` (analytic, monte-carlo)"
            )))
        }
    };
    let l_values = match kind {
        ExperimentKind::Table1 => kv
            .parse_with("l_values", parse_list::<usize>)?
            .unwrap_or_else(|| (0..8).map(|k| scenario.subcarriers << k).collect()),
        _ => Vec::new(),
    };
    if kind == ExperimentKind::Table1 && (l_values.is_empty() || l_values.contains(&0)) {
        return Err(RunError::Config("l_values must list positive symbol counts".into()));
    }
    let accumulations: usize = match kind {
        ExperimentKind::EstimatorCdf => kv.get("accumulations")?.unwrap_or(1),
        _ => 1,
    };
    let steps: usize = match kind {
        ExperimentKind::Iterative => kv.get("steps")?.unwrap_or(10),
        _ => 1,
    };
    if accumulations == 0 || steps == 0 {
        return Err(RunError::Config("accumulations and steps must be at least 1".into()));
    }
    kv.finish()?;
    Ok(ExperimentSpec {
        kind,
        scenario: Some(scenario),
        trials,
        estimator,
        config,
        covariance,
        l_values,
        accumulations,
        steps,
        c: 0.0,
        points: 0,
        output_path,
    })
}

pub fn parse_spec(path: &Path) -> Result<ExperimentSpec, RunError> {
    let text = fs::read_to_string(path)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_spec_str(&text).map_err(|e| match e {
        RunError::Config(m) => RunError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Execution options that do not affect results.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub workers: usize,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub output: PathBuf,
    pub rows: usize,
}

type Table = (Vec<String>, Vec<Vec<String>>);

fn status(e: &PowerEstimate) -> &'static str {
    if e.fallback {
        "fallback"
    } else if e.degenerate {
        "degenerate"
    } else {
        "ok"
    }
}

fn power_columns(prefix: &str, m: usize) -> Vec<String> {
    (1..=m).map(|i| format!("{prefix}{i}")).collect()
}

fn l2_error(est: &[f64], truth: &[f64]) -> f64 {
    est.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

/// One estimate for the accumulated moments of `blocks`.
fn estimate(
    spec: &ExperimentSpec,
    scenario: &NetworkScenario,
    blocks: &[freesense::ReceivedBlock],
    cov: Option<&NoiseCovariance>,
    grid: Option<&PowerGrid>,
) -> freesense::Result<Option<PowerEstimate>> {
    let m = scenario.stations;
    let recover = |k: usize| -> freesense::Result<freesense::MomentVector> {
        let d: Vec<_> =
            blocks.iter().map(|b| recover_block_moments(b, k)).collect::<freesense::Result<_>>()?;
        accumulate(&d)
    };
    let res = match spec.estimator {
        Method::Classical => classical_estimate(&blocks[0], scenario.sigma2, m, &spec.config),
        Method::Zf => zf_estimate(&recover(m)?, m),
        Method::Mmse => grid.expect("grid").mmse(&recover(spec.config.moments)?, cov.expect("C")),
        Method::Ml => grid.expect("grid").ml(&recover(spec.config.moments)?, cov.expect("C")),
    };
    match res {
        Ok(e) => Ok(Some(e)),
        Err(freesense::Error::NotIdentifiable(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn blocks_for(
    scenario: &NetworkScenario,
    trial_seed: u64,
    count: usize,
) -> freesense::Result<Vec<freesense::ReceivedBlock>> {
    (0..count as u64).map(|a| synthesize(scenario, seed::derive(trial_seed, a))).collect()
}

fn needs_grid(spec: &ExperimentSpec) -> bool {
    matches!(spec.estimator, Method::Mmse | Method::Ml)
}

/// Covariance at the scenario's true powers for `factor` accumulated blocks.
fn oracle_covariance(
    spec: &ExperimentSpec,
    scenario: &NetworkScenario,
    factor: usize,
) -> freesense::Result<Option<NoiseCovariance>> {
    if !needs_grid(spec) {
        return Ok(None);
    }
    let c = noise_covariance(scenario, &scenario.powers, spec.config.moments, spec.covariance)?;
    Ok(Some(c.accumulated(factor)))
}

/// Runs `job` for every trial index on the pool; results come back in
/// trial order. Stops at the first failing trial, returning the rows that
/// precede it together with the failure.
fn run_trials<T: Send>(
    pool: &rayon::ThreadPool,
    trials: usize,
    job: impl Fn(usize) -> freesense::Result<T> + Sync,
) -> (Vec<T>, Option<(usize, String)>) {
    let results: Vec<_> = pool.install(|| (0..trials).into_par_iter().map(&job).collect());
    let mut ok = Vec::with_capacity(trials);
    for (t, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => return (ok, Some((t, e.to_string()))),
        }
    }
    (ok, None)
}

fn table1(spec: &ExperimentSpec, pool: &rayon::ThreadPool) -> (Table, Option<(usize, String)>) {
    let base = spec.scenario.as_ref().expect("scenario");
    let m = base.stations;
    let mut header = vec!["L".to_string(), "trial".to_string()];
    header.extend(power_columns("p", m));
    header.extend(["l2_error", "squared_l2_error", "status"].map(String::from));
    let mut rows = Vec::new();
    for (li, &l) in spec.l_values.iter().enumerate() {
        let scenario = NetworkScenario { symbols: l, ..base.clone() };
        let setup = (|| -> freesense::Result<_> {
            let cov = oracle_covariance(spec, &scenario, 1)?;
            let grid =
                if needs_grid(spec) { Some(PowerGrid::new(m, &spec.config)?) } else { None };
            Ok((cov, grid))
        })();
        let (cov, grid) = match setup {
            Ok(v) => v,
            Err(e) => return ((header, rows), Some((li * spec.trials, e.to_string()))),
        };
        let (out, failure) = run_trials(pool, spec.trials, |t| {
            let seed = scenario.trial_seed((li * spec.trials + t) as u64);
            let blocks = blocks_for(&scenario, seed, 1)?;
            estimate(spec, &scenario, &blocks, cov.as_ref(), grid.as_ref())
        });
        let mut errs = Vec::new();
        for (t, est) in out.iter().enumerate() {
            let mut row = vec![l.to_string(), t.to_string()];
            match est {
                Some(e) => {
                    let err = l2_error(&e.powers, &base.powers);
                    errs.push(err);
                    row.extend(e.powers.iter().map(|p| fmt(*p)));
                    row.extend([fmt(err), fmt(err * err), status(e).to_string()]);
                }
                None => {
                    row.extend(std::iter::repeat_n("NaN".to_string(), m + 2));
                    row.push("failed".into());
                }
            }
            rows.push(row);
        }
        if let Some((t, e)) = failure {
            return ((header, rows), Some((li * spec.trials + t, e)));
        }
        let mean = errs.iter().sum::<f64>() / errs.len().max(1) as f64;
        let mean_sq = errs.iter().map(|e| e * e).sum::<f64>() / errs.len().max(1) as f64;
        let mut row = vec![l.to_string(), "mean".to_string()];
        row.extend(std::iter::repeat_n(String::new(), m));
        row.extend([fmt(mean), fmt(mean_sq), format!("{}/{} ok", errs.len(), out.len())]);
        rows.push(row);
    }
    ((header, rows), None)
}

fn moment_relerr(spec: &ExperimentSpec, pool: &rayon::ThreadPool) -> (Table, Option<(usize, String)>) {
    let scenario = spec.scenario.as_ref().expect("scenario");
    let k = spec.config.moments;
    let header = ["order", "mean_relative_error", "std_error"].map(String::from).to_vec();
    let (out, failure) = run_trials(pool, spec.trials, |t| {
        let block = synthesize(scenario, scenario.trial_seed(t as u64))?;
        let d = recover_block_moments(&block, k)?;
        let nu = true_hph_moments(&block.channels, &scenario.powers, k);
        Ok((0..k).map(|i| ((d.values[i] - nu.values[i]) / nu.values[i]).abs()).collect::<Vec<_>>())
    });
    let mut rows = Vec::new();
    if failure.is_none() {
        let n = out.len() as f64;
        for i in 0..k {
            let mean = out.iter().map(|r| r[i]).sum::<f64>() / n;
            let var = out.iter().map(|r| (r[i] - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            rows.push(vec![(i + 1).to_string(), fmt(mean), fmt((var / n).sqrt())]);
        }
    }
    ((header, rows), failure)
}

fn estimator_cdf(spec: &ExperimentSpec, pool: &rayon::ThreadPool) -> (Table, Option<(usize, String)>) {
    let scenario = spec.scenario.as_ref().expect("scenario");
    let header = ["trial", "station", "estimate", "cdf", "status"].map(String::from).to_vec();
    let setup = (|| -> freesense::Result<_> {
        let cov = oracle_covariance(spec, scenario, spec.accumulations)?;
        let grid = if needs_grid(spec) {
            Some(PowerGrid::new(scenario.stations, &spec.config)?)
        } else {
            None
        };
        Ok((cov, grid))
    })();
    let (cov, grid) = match setup {
        Ok(v) => v,
        Err(e) => return ((header, Vec::new()), Some((0, e.to_string()))),
    };
    let (out, failure) = run_trials(pool, spec.trials, |t| {
        let blocks = blocks_for(scenario, scenario.trial_seed(t as u64), spec.accumulations)?;
        estimate(spec, scenario, &blocks, cov.as_ref(), grid.as_ref())
    });
    let mut pooled: Vec<f64> =
        out.iter().flatten().flat_map(|e| e.powers.iter().copied()).collect();
    pooled.sort_by(f64::total_cmp);
    let cdf = |x: f64| pooled.partition_point(|v| *v <= x) as f64 / pooled.len() as f64;
    let mut rows = Vec::new();
    for (t, est) in out.iter().enumerate() {
        match est {
            Some(e) => {
                for (i, p) in e.powers.iter().enumerate() {
                    rows.push(vec![
                        t.to_string(),
                        (i + 1).to_string(),
                        fmt(*p),
                        fmt(cdf(*p)),
                        status(e).into(),
                    ]);
                }
            }
            None => rows.push(vec![t.to_string(), String::new(), "NaN".into(), "NaN".into(), "failed".into()]),
        }
    }
    ((header, rows), failure)
}

fn iterative(spec: &ExperimentSpec, pool: &rayon::ThreadPool) -> (Table, Option<(usize, String)>) {
    let scenario = spec.scenario.as_ref().expect("scenario");
    let m = scenario.stations;
    let mut header = vec!["trial".to_string(), "step".to_string()];
    header.extend(power_columns("p", m));
    header.extend(["l2_error", "status"].map(String::from));
    let (out, failure) = run_trials(pool, spec.trials, |t| {
        let blocks = blocks_for(scenario, scenario.trial_seed(t as u64), spec.steps)?;
        iterative_mmse(&blocks, m, &spec.config, spec.steps, spec.covariance)
    });
    let mut rows = Vec::new();
    for (t, traj) in out.iter().enumerate() {
        for (s, e) in traj.iter().enumerate() {
            let mut row = vec![t.to_string(), (s + 1).to_string()];
            row.extend(e.powers.iter().map(|p| fmt(*p)));
            row.push(fmt(l2_error(&e.powers, &scenario.powers)));
            row.push(status(e).into());
            rows.push(row);
        }
    }
    ((header, rows), failure)
}

/// `(x, density)` pairs over the continuous support of the law.
pub fn mp_density_table(c: f64, points: usize) -> Result<Table, RunError> {
    if points < 2 {
        return Err(RunError::Config("points must be at least 2".into()));
    }
    let mp = MarchenkoPastur::new(c)?;
    let (a, b) = mp.support();
    let rows = (0..points)
        .map(|i| {
            let x = a + (b - a) * i as f64 / (points - 1) as f64;
            vec![fmt(x), fmt(mp.density(x))]
        })
        .collect();
    Ok((vec!["x".into(), "density".into()], rows))
}

fn write_csv(
    path: &Path,
    comments: &[String],
    table: &Table,
    partial: Option<&str>,
) -> Result<(), RunError> {
    let io = |e: std::io::Error| RunError::Runtime(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut file = File::create(path).map_err(io)?;
    for c in comments {
        writeln!(file, "# {c}").map_err(io)?;
    }
    let mut w = csv::Writer::from_writer(file);
    let csv_err = |e: csv::Error| RunError::Runtime(format!("{}: {e}", path.display()));
    w.write_record(&table.0).map_err(csv_err)?;
    for row in &table.1 {
        w.write_record(row).map_err(csv_err)?;
    }
    let mut file = w.into_inner().map_err(|e| RunError::Runtime(e.to_string()))?;
    if let Some(msg) = partial {
        writeln!(file, "# PARTIAL OUTPUT: {msg}").map_err(io)?;
    }
    file.flush().map_err(io)
}

/// Header comment lines recording the master seed and config hash.
pub fn provenance_comments(spec: &ExperimentSpec) -> Vec<String> {
    vec![
        format!("freesense {} kind={}", env!("CARGO_PKG_VERSION"), spec.kind.label()),
        format!("master_seed={} config_sha256={}", spec.master_seed(), spec.config_hash()),
    ]
}

/// Executes `spec` and writes its CSV to `options.out_dir/spec.output_path`.
///
/// Output is independent of `options.workers`. On a trial failure the rows
/// of the preceding trials are written with a trailing partial-output marker
/// and a runtime error is returned.
pub fn run_experiment(spec: &ExperimentSpec, options: &RunOptions) -> Result<RunReport, RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .map_err(|e| RunError::Runtime(format!("cannot start worker pool: {e}")))?;
    let (table, failure) = match spec.kind {
        ExperimentKind::MpDensity => (mp_density_table(spec.c, spec.points)?, None),
        ExperimentKind::Table1 => table1(spec, &pool),
        ExperimentKind::MomentRelerr => moment_relerr(spec, &pool),
        ExperimentKind::EstimatorCdf => estimator_cdf(spec, &pool),
        ExperimentKind::Iterative => iterative(spec, &pool),
    };
    let output = options.out_dir.join(&spec.output_path);
    let mut comments = provenance_comments(spec);
    if spec.kind == ExperimentKind::MpDensity {
        let mp = MarchenkoPastur::new(spec.c)?;
        comments.push(format!("atom_at_zero={}", mp.atom()));
    }
    let partial = failure.as_ref().map(|(t, e)| format!("trial {t} failed: {e}"));
    write_csv(&output, &comments, &table, partial.as_deref())?;
    match failure {
        Some((t, e)) => Err(RunError::Runtime(format!("trial {t} failed: {e}"))),
        None => Ok(RunReport { output, rows: table.1.len() }),
    }
}
