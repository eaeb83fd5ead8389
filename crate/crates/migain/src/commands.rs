//! Config-driven batch commands behind the `migain` binary: prior generation,
//! mutual-information estimation, co-training runs, mechanism verification,
//! and prior analysis.
//!
//! Every command reads one JSON config (unknown keys rejected), runs
//! deterministically given the seeds inside it, and writes CSV and/or JSON
//! outputs. Each CSV starts with a provenance comment naming the config hash
//! and library version; JSON reports carry the same fields. A failed claim of
//! a verification run is data in the report, not a process failure.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cotrain::{optimize_mig, optimize_mig_empirical, OptimizerConfig};
use crate::dist::{read_samples_csv, sample_tasks, TaskSample, TripletPrior};
use crate::divergence::Divergence;
use crate::gain::{empirical_gain, forecast_gain, ForecastTask, Hypothesis};
use crate::mechanisms::{verify_focal, verify_truthful, FocalReport, Mechanism, TruthfulnessReport};
use crate::prior_analysis::{check_stable, check_well_defined, generate_prior, WellDefinedReport};
use crate::psgain::{optimize_ps_gain, optimize_ps_gain_empirical, ScoringRule};
use crate::simplex::Simplex;
use crate::dist::View;
use crate::{Error, Result};

/// Flags shared by all subcommands.
#[derive(Debug, Clone, Default)]
pub struct GlobalOpts {
    /// Directory for outputs; the config's file names are joined onto it.
    pub out_dir: Option<PathBuf>,
    /// Overrides the seed in the config.
    pub seed: Option<u64>,
}

struct Context {
    opts: GlobalOpts,
    config_dir: PathBuf,
    config_hash: String,
}

impl Context {
    fn load<T: serde::de::DeserializeOwned>(config_path: &Path, opts: &GlobalOpts) -> Result<(T, Context)> {
        let bytes = fs::read(config_path).map_err(|e| {
            Error::InvalidConfig(format!("cannot read {}: {e}", config_path.display()))
        })?;
        let cfg: T = serde_json::from_slice(&bytes)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", config_path.display())))?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        let config_hash = hex_prefix(&hasher.finalize(), 12);
        Ok((
            cfg,
            Context {
                opts: opts.clone(),
                config_dir: config_path
                    .parent()
                    .map(Path::to_path_buf)
                    .unwrap_or_else(|| PathBuf::from(".")),
                config_hash,
            },
        ))
    }

    /// Inputs resolve relative to the config file.
    fn input_path(&self, name: &str) -> PathBuf {
        let p = PathBuf::from(name);
        if p.is_absolute() {
            p
        } else {
            self.config_dir.join(p)
        }
    }

    /// Outputs resolve into `--out` (or the working directory).
    fn output_path(&self, name: &str) -> PathBuf {
        let p = PathBuf::from(name);
        if p.is_absolute() {
            return p;
        }
        match &self.opts.out_dir {
            Some(dir) => dir.join(p),
            None => p,
        }
    }

    fn provenance(&self) -> String {
        format!(
            "config_hash={} version={}",
            self.config_hash,
            env!("CARGO_PKG_VERSION")
        )
    }

    fn write_csv(&self, name: &str, header: &str, rows: &[String]) -> Result<PathBuf> {
        let path = self.output_path(name);
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        let mut file = fs::File::create(&path)?;
        writeln!(file, "# {}", self.provenance())?;
        writeln!(file, "{header}")?;
        for row in rows {
            writeln!(file, "{row}")?;
        }
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, report: &T) -> Result<PathBuf> {
        let path = self.output_path(name);
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        let wrapped = Provenance {
            config_hash: &self.config_hash,
            version: env!("CARGO_PKG_VERSION"),
            report,
        };
        let mut file = fs::File::create(&path)?;
        serde_json::to_writer_pretty(&mut file, &wrapped)?;
        file.write_all(b"\n")?;
        Ok(path)
    }
}

#[derive(Serialize)]
struct Provenance<'a, T> {
    config_hash: &'a str,
    version: &'a str,
    report: &'a T,
}

fn hex_prefix(bytes: &[u8], chars: usize) -> String {
    let mut s = String::with_capacity(chars);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
        if s.len() >= chars {
            break;
        }
    }
    s.truncate(chars);
    s
}

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

// ---------------------------------------------------------------------------
// gen-prior

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenPriorConfig {
    /// `[sigma_a, sigma_b, sigma_y]`.
    pub sizes: [usize; 3],
    pub seed: u64,
    #[serde(default = "default_concentration")]
    pub concentration: f64,
    #[serde(default)]
    pub require_stable: bool,
    /// Also print a stability / uniqueness summary.
    #[serde(default)]
    pub report: bool,
    #[serde(default = "default_wd_grid")]
    pub well_defined_grid: f64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default = "default_prior_out")]
    pub out: String,
}

fn default_concentration() -> f64 {
    1.0
}
fn default_wd_grid() -> f64 {
    0.05
}
fn default_budget() -> u64 {
    5_000_000
}
fn default_prior_out() -> String {
    "prior.json".into()
}

pub fn cmd_gen_prior(config_path: &Path, opts: &GlobalOpts) -> Result<()> {
    let (mut cfg, ctx) = Context::load::<GenPriorConfig>(config_path, opts)?;
    if let Some(seed) = ctx.opts.seed {
        cfg.seed = seed;
    }
    let [n_a, n_b, n_y] = cfg.sizes;
    let prior = generate_prior(n_a, n_b, n_y, cfg.seed, cfg.concentration, cfg.require_stable)?;
    let path = ctx.output_path(&cfg.out);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    prior.write_json(&path)?;
    println!("wrote {}", path.display());
    if cfg.report {
        let stability = check_stable(&prior);
        let wd = check_well_defined(&prior, cfg.well_defined_grid, cfg.budget)?;
        println!(
            "stability: stable={} rank_a={} rank_b={} (|sigma|={})",
            stability.stable, stability.rank_a, stability.rank_b, stability.n_labels
        );
        println!(
            "well-defined: {:?} ({} candidates, {} survivors)",
            wd.verdict, wd.candidates_enumerated, wd.survivors
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// estimate-mi

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateMiConfig {
    /// Prior JSON to sample tasks from; mutually exclusive with
    /// `forecasts_file`.
    #[serde(default)]
    pub prior_file: Option<String>,
    /// Fixed per-task forecasts to score directly (no sampling).
    #[serde(default)]
    pub forecasts_file: Option<String>,
    pub spec: String,
    #[serde(default)]
    pub sample_sizes: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Fraction of each batch carrying both signals.
    #[serde(default = "default_one")]
    pub overlap_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_estimate_out")]
    pub out: String,
}

fn default_replicates() -> usize {
    20
}
fn default_one() -> f64 {
    1.0
}
fn default_estimate_out() -> String {
    "estimate_mi.csv".into()
}

/// Fixed per-task forecast lists, as stored in a forecasts fixture file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastFixture {
    pub p: Vec<f64>,
    pub forecasts_a: Vec<Vec<f64>>,
    pub forecasts_b: Vec<Vec<f64>>,
}

pub fn cmd_estimate_mi(config_path: &Path, opts: &GlobalOpts) -> Result<()> {
    let (mut cfg, ctx) = Context::load::<EstimateMiConfig>(config_path, opts)?;
    if let Some(seed) = ctx.opts.seed {
        cfg.seed = seed;
    }
    let div = Divergence::by_name(&cfg.spec)?;

    if let Some(fixture_path) = &cfg.forecasts_file {
        let text = fs::read_to_string(ctx.input_path(fixture_path))?;
        let fixture: ForecastFixture = serde_json::from_str(&text)?;
        if fixture.forecasts_a.len() != fixture.forecasts_b.len() {
            return Err(Error::LengthMismatch(
                fixture.forecasts_a.len(),
                fixture.forecasts_b.len(),
            ));
        }
        let p = Simplex::new(fixture.p)?;
        let tasks: Vec<ForecastTask> = fixture
            .forecasts_a
            .into_iter()
            .zip(fixture.forecasts_b)
            .enumerate()
            .map(|(i, (fa, fb))| {
                Ok(ForecastTask {
                    task_id: i as u64,
                    forecast_a: Some(Simplex::new(fa)?),
                    forecast_b: Some(Simplex::new(fb)?),
                })
            })
            .collect::<Result<_>>()?;
        let gain = forecast_gain(div, &tasks, &p)?;
        let path = ctx.write_csv(
            &cfg.out,
            "n,replicate,gain,exact_mi,stderr",
            &[format!("{},fixture,{},,", tasks.len(), fmt(gain))],
        )?;
        println!("gain = {gain:.10} ({})", path.display());
        return Ok(());
    }

    let prior_file = cfg.prior_file.as_ref().ok_or_else(|| {
        Error::InvalidConfig("either prior_file or forecasts_file is required".into())
    })?;
    if cfg.sample_sizes.is_empty() {
        return Err(Error::InvalidConfig("sample_sizes must be nonempty".into()));
    }
    if !(0.0..=1.0).contains(&cfg.overlap_fraction) {
        return Err(Error::InvalidConfig("overlap_fraction must lie in [0, 1]".into()));
    }
    let prior = TripletPrior::read_json(&ctx.input_path(prior_file))?;
    let h_a = Hypothesis::bayes(&prior, View::A)?;
    let h_b = Hypothesis::bayes(&prior, View::B)?;
    let exact = div.mutual_information(&prior.induce_joint());

    let mut rows = Vec::new();
    for (size_idx, &n) in cfg.sample_sizes.iter().enumerate() {
        let overlap = ((n as f64) * cfg.overlap_fraction).round() as usize;
        let mut gains = Vec::with_capacity(cfg.replicates);
        for rep in 0..cfg.replicates {
            let seed = cfg
                .seed
                .wrapping_add(1_000_003u64.wrapping_mul(size_idx as u64))
                .wrapping_add(rep as u64);
            let samples = sample_tasks(&prior, n, overlap.min(n), seed)?;
            let gain = empirical_gain(div, &h_a, &h_b, prior.prior_y(), &samples)?;
            rows.push(format!("{n},{rep},{},{},", fmt(gain), fmt(exact)));
            gains.push(gain);
        }
        let mean = gains.iter().sum::<f64>() / gains.len() as f64;
        let var = gains.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>()
            / (gains.len().saturating_sub(1).max(1)) as f64;
        let stderr = (var / gains.len() as f64).sqrt();
        rows.push(format!("{n},mean,{},{},{}", fmt(mean), fmt(exact), fmt(stderr)));
    }
    let path = ctx.write_csv(&cfg.out, "n,replicate,gain,exact_mi,stderr", &rows)?;
    println!("wrote {}", path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// cotrain

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CotrainMode {
    #[default]
    Mig,
    PsGain,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CotrainConfig {
    #[serde(default)]
    pub prior_file: Option<String>,
    /// Task CSV for empirical mode.
    #[serde(default)]
    pub samples_file: Option<String>,
    pub spec: String,
    #[serde(default)]
    pub mode: CotrainMode,
    /// For `ps_gain` mode: "log" or "brier".
    #[serde(default)]
    pub scoring_rule: Option<String>,
    /// Required in empirical mode (the samples do not reveal it).
    #[serde(default)]
    pub n_labels: Option<usize>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    /// Disables the likelihood-table column constraint (failure-mode demo).
    #[serde(default)]
    pub ps_unconstrained: bool,
    #[serde(default = "default_cotrain_out")]
    pub out_prefix: String,
}

fn default_cotrain_out() -> String {
    "cotrain".into()
}

#[derive(Serialize)]
struct PsGainCommandReport {
    objective: f64,
    constrained: bool,
    h_a_star: Hypothesis,
    v_b_star: Vec<Vec<f64>>,
    permutation: Option<Vec<usize>>,
    aligned_tv_distance: Option<f64>,
    column_sum_deviation: f64,
    restart_errors: Vec<String>,
}

pub fn cmd_cotrain(config_path: &Path, opts: &GlobalOpts) -> Result<()> {
    let (mut cfg, ctx) = Context::load::<CotrainConfig>(config_path, opts)?;
    if let Some(seed) = ctx.opts.seed {
        cfg.optimizer.seed = seed;
    }
    let div = Divergence::by_name(&cfg.spec)?;
    let prior = cfg
        .prior_file
        .as_ref()
        .map(|f| TripletPrior::read_json(&ctx.input_path(f)))
        .transpose()?;
    let samples: Option<Vec<TaskSample>> = cfg
        .samples_file
        .as_ref()
        .map(|f| -> Result<_> {
            let file = fs::File::open(ctx.input_path(f))?;
            read_samples_csv(std::io::BufReader::new(file))
        })
        .transpose()?;

    match cfg.mode {
        CotrainMode::Mig => {
            if !div.derivative_invertible() {
                eprintln!(
                    "warning: {div} has no invertible derivative; recovery guarantees are void"
                );
            }
            let result = match (&prior, &samples) {
                (Some(prior), None) => optimize_mig(prior, div, &cfg.optimizer)?,
                (maybe_prior, Some(samples)) => {
                    let n_labels = cfg.n_labels.ok_or_else(|| {
                        Error::InvalidConfig("empirical mode needs n_labels".into())
                    })?;
                    let mut r =
                        optimize_mig_empirical(samples, n_labels, div, &cfg.optimizer, None)?;
                    if let Some(prior) = maybe_prior {
                        r.align_to(
                            &Hypothesis::bayes(prior, View::A)?,
                            &Hypothesis::bayes(prior, View::B)?,
                            Some(prior.prior_y()),
                        )?;
                    }
                    r
                }
                (None, None) => {
                    return Err(Error::InvalidConfig(
                        "need prior_file (exact mode) or samples_file (empirical mode)".into(),
                    ))
                }
            };
            for err in &result.restart_errors {
                eprintln!("warning: {err}");
            }
            let curve: Vec<String> = result
                .trace
                .iter()
                .enumerate()
                .map(|(i, v)| format!("{i},{}", fmt(*v)))
                .collect();
            ctx.write_csv(&format!("{}_curve.csv", cfg.out_prefix), "iteration,objective", &curve)?;
            let path = ctx.write_json(&format!("{}.json", cfg.out_prefix), &result)?;
            println!(
                "objective = {:.10}, aligned_tv = {:?} ({})",
                result.objective,
                result.aligned_tv_distance,
                path.display()
            );
        }
        CotrainMode::PsGain => {
            let rule = ScoringRule::by_name(cfg.scoring_rule.as_deref().unwrap_or("log"))?;
            let constrained = !cfg.ps_unconstrained;
            let (result, aligned) = match (&prior, &samples) {
                (Some(prior), None) => {
                    let r = optimize_ps_gain(prior, rule, &cfg.optimizer, constrained)?;
                    let aligned = constrained
                        .then(|| r.align_to_truth(prior))
                        .transpose()?;
                    (r, aligned)
                }
                (maybe_prior, Some(samples)) => {
                    let n_labels = cfg.n_labels.ok_or_else(|| {
                        Error::InvalidConfig("empirical mode needs n_labels".into())
                    })?;
                    let r = optimize_ps_gain_empirical(
                        samples,
                        n_labels,
                        rule,
                        &cfg.optimizer,
                        constrained,
                    )?;
                    let aligned = match (maybe_prior, constrained) {
                        (Some(prior), true) => Some(r.align_to_truth(prior)?),
                        _ => None,
                    };
                    (r, aligned)
                }
                (None, None) => {
                    return Err(Error::InvalidConfig(
                        "need prior_file (exact mode) or samples_file (empirical mode)".into(),
                    ))
                }
            };
            for err in &result.restart_errors {
                eprintln!("warning: {err}");
            }
            let (permutation, aligned_tv_distance) = match aligned {
                Some((p, d)) => (Some(p), Some(d)),
                None => (None, None),
            };
            let report = PsGainCommandReport {
                objective: result.objective,
                constrained: result.constrained,
                column_sum_deviation: crate::psgain::column_sum_deviation(&result.v_b_star),
                h_a_star: result.h_a_star,
                v_b_star: result.v_b_star,
                permutation,
                aligned_tv_distance,
                restart_errors: result.restart_errors,
            };
            let path = ctx.write_json(&format!("{}.json", cfg.out_prefix), &report)?;
            println!("objective = {:.10} ({})", report.objective, path.display());
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// mechanism

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismConfig {
    pub prior_file: String,
    /// "single" or "mcg".
    pub mechanism: String,
    /// Divergence for "mcg".
    #[serde(default)]
    pub spec: Option<String>,
    #[serde(default = "default_grid")]
    pub grid_resolution: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Task count in the mechanism statement; two tasks with full overlap
    /// already satisfy the focality hypothesis, and the expected payment does
    /// not depend on the count.
    #[serde(default = "default_tasks")]
    pub n_tasks: usize,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default = "default_mech_out")]
    pub out_prefix: String,
}

fn default_grid() -> f64 {
    0.05
}
fn default_tol() -> f64 {
    1e-9
}
fn default_tasks() -> usize {
    2
}
fn default_mech_out() -> String {
    "mechanism".into()
}

#[derive(Serialize)]
struct MechanismReport {
    mechanism: String,
    n_tasks: usize,
    truthfulness: TruthfulnessReport,
    focality: Option<FocalReport>,
    /// Set when the focality sweep exceeded the enumeration budget.
    focality_inconclusive: Option<String>,
}

pub fn cmd_mechanism(config_path: &Path, opts: &GlobalOpts) -> Result<()> {
    let (cfg, ctx) = Context::load::<MechanismConfig>(config_path, opts)?;
    let prior = TripletPrior::read_json(&ctx.input_path(&cfg.prior_file))?;
    let mechanism = match cfg.mechanism.as_str() {
        "single" => Mechanism::Single,
        "mcg" => {
            let spec = cfg.spec.as_ref().ok_or_else(|| {
                Error::InvalidConfig("mcg needs a spec (divergence name)".into())
            })?;
            Mechanism::Mcg(Divergence::by_name(spec)?)
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown mechanism {other:?} (expected \"single\" or \"mcg\")"
            )))
        }
    };
    if cfg.n_tasks < 2 {
        if let Mechanism::Mcg(_) = mechanism {
            return Err(Error::InvalidConfig(
                "the multi-task mechanism needs at least 2 tasks".into(),
            ));
        }
    }

    let truthfulness = verify_truthful(&prior, mechanism, cfg.grid_resolution, cfg.tol)?;
    let (focality, focality_inconclusive) = match mechanism {
        Mechanism::Mcg(div) => {
            match verify_focal(&prior, div, cfg.grid_resolution, cfg.budget, cfg.tol) {
                Ok(report) => (Some(report), None),
                Err(Error::EnumerationBudgetExceeded { needed, budget }) => {
                    let msg = format!(
                        "focality sweep inconclusive: {needed} profiles exceed budget {budget}"
                    );
                    eprintln!("warning: {msg}");
                    (None, Some(msg))
                }
                Err(e) => return Err(e),
            }
        }
        Mechanism::Single => (None, None),
    };

    let mut rows = vec![format!(
        "truthful,expected payment,{},{}",
        fmt(truthfulness.truthful_payoff),
        fmt(0.0)
    )];
    rows.push(format!(
        "deviation,best non-truthful grid report,{},{}",
        fmt(truthfulness.truthful_payoff + truthfulness.worst_deviation),
        fmt(-truthfulness.worst_deviation)
    ));
    if let Some(focal) = &focality {
        for r in &focal.rows {
            rows.push(format!("{},{},{},{}", r.class, r.label, fmt(r.payoff), fmt(r.gap)));
        }
    }
    ctx.write_csv(
        &format!("{}_payoffs.csv", cfg.out_prefix),
        "class,label,payoff,gap",
        &rows,
    )?;
    let report = MechanismReport {
        mechanism: mechanism.name(),
        n_tasks: cfg.n_tasks,
        truthfulness,
        focality,
        focality_inconclusive,
    };
    let path = ctx.write_json(&format!("{}.json", cfg.out_prefix), &report)?;
    println!(
        "is_equilibrium = {}, is_strict = {} ({})",
        report.truthfulness.is_equilibrium,
        report.truthfulness.is_strict,
        path.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// verify-prior

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyPriorConfig {
    pub prior_file: String,
    #[serde(default = "default_wd_grid")]
    pub grid_resolution: f64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default = "default_verify_out")]
    pub out: String,
}

fn default_verify_out() -> String {
    "prior_report.json".into()
}

#[derive(Serialize)]
struct PriorReport {
    ci_identity_residual: f64,
    stability: crate::prior_analysis::StabilityReport,
    well_defined: WellDefinedReport,
}

pub fn cmd_verify_prior(config_path: &Path, opts: &GlobalOpts) -> Result<()> {
    let (cfg, ctx) = Context::load::<VerifyPriorConfig>(config_path, opts)?;
    let prior = TripletPrior::read_json(&ctx.input_path(&cfg.prior_file))?;
    let report = PriorReport {
        ci_identity_residual: crate::dist::verify_ci_identity(&prior),
        stability: check_stable(&prior),
        well_defined: check_well_defined(&prior, cfg.grid_resolution, cfg.budget)?,
    };
    let path = ctx.write_json(&cfg.out, &report)?;
    println!(
        "stable = {}, well-defined = {:?} ({})",
        report.stability.stable,
        report.well_defined.verdict,
        path.display()
    );
    Ok(())
}
