//! Experiment driver: one-parameter sweeps over many seeded runs, with and
//! without the HFT, aggregated into per-cell means and emitted as CSV plus a
//! JSON manifest that reproduces the report.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine;
use crate::error::{ConfigError, Error, Result};
use crate::metrics::{LiquidityReport, MetricsConfig, StylizedFacts, AUTOCORR_LAGS};
use crate::params::MarketParams;
use crate::seeding::run_seed;

/// Environment variable holding the worker-thread count for sweeps.
pub const WORKERS_ENV: &str = "HFTSIM_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    WithHft,
    WithoutHft,
}

impl Variant {
    pub fn hft(self) -> bool {
        matches!(self, Variant::WithHft)
    }

    pub fn label(self) -> &'static str {
        match self {
            Variant::WithHft => "with HFT",
            Variant::WithoutHft => "without HFT",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// `both`, `with` or `without`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantSelection {
    Both,
    With,
    Without,
}

impl VariantSelection {
    pub fn variants(self) -> Vec<Variant> {
        match self {
            VariantSelection::Both => vec![Variant::WithHft, Variant::WithoutHft],
            VariantSelection::With => vec![Variant::WithHft],
            VariantSelection::Without => vec![Variant::WithoutHft],
        }
    }
}

impl FromStr for VariantSelection {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "both" => Ok(Self::Both),
            "with" => Ok(Self::With),
            "without" => Ok(Self::Without),
            other => Err(ConfigError::invalid(format!(
                "variant must be both|with|without, got `{other}`"
            ))),
        }
    }
}

/// Value lists of the reference parameter sweeps.
pub fn table2_preset(parameter: &str) -> Option<Vec<f64>> {
    Some(match parameter {
        "tick" | "delta_p" => vec![0.01, 0.1, 1.0, 10.0, 100.0],
        "w1_max" | "w2_max" => vec![1.0, 3.0, 5.0, 8.0, 10.0],
        "sigma_eps" => vec![0.02, 0.04, 0.06, 0.08, 0.1],
        "est" => vec![0.003, 0.005, 0.01, 0.02, 0.03],
        "t_c" => vec![10_000.0, 15_000.0, 20_000.0, 25_000.0, 30_000.0],
        "pr_o" => vec![0.2, 0.4, 0.6, 0.8, 1.0],
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// The one parameter that varies; everything else stays at `base`.
    pub parameter: String,
    pub values: Vec<f64>,
    pub runs: u32,
    pub base: MarketParams,
    pub variants: Vec<Variant>,
    pub master_seed: u64,
    #[serde(default)]
    pub metrics: MetricsConfig,
}

impl SweepSpec {
    pub fn table2(parameter: &str, base: MarketParams, runs: u32, master_seed: u64) -> Result<Self, ConfigError> {
        let values = table2_preset(parameter).ok_or_else(|| {
            ConfigError::invalid(format!("no preset value list for `{parameter}`"))
        })?;
        Ok(Self {
            parameter: parameter.to_string(),
            values,
            runs,
            base,
            variants: VariantSelection::Both.variants(),
            master_seed,
            metrics: MetricsConfig::default(),
        })
    }

    /// Parameters for row `value_index`, before the variant and seed are set.
    pub fn cell_params(&self, value_index: usize) -> Result<MarketParams, ConfigError> {
        let mut p = self.base.clone();
        p.set(&self.parameter, &self.values[value_index].to_string())?;
        Ok(p)
    }

    pub fn seed(&self, value_index: usize, run: u32) -> u64 {
        run_seed(self.master_seed, value_index as u64, u64::from(run))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.runs == 0 {
            return Err(ConfigError::invalid("runs must be positive"));
        }
        if self.values.is_empty() {
            return Err(ConfigError::invalid("sweep needs at least one value"));
        }
        if self.variants.is_empty() {
            return Err(ConfigError::invalid("sweep needs at least one variant"));
        }
        if self.base.get(&self.parameter).is_none() || matches!(self.parameter.as_str(), "seed" | "hft") {
            return Err(ConfigError::UnknownParameter(self.parameter.clone()));
        }
        for i in 0..self.values.len() {
            let p = self.cell_params(i)?;
            p.validate()?;
            p.validate_whole_days()?;
        }
        Ok(())
    }

    pub fn from_manifest(text: &str) -> Result<Self> {
        let manifest: Manifest = serde_json::from_str(text)?;
        Ok(manifest.spec)
    }
}

/// Mean (or standard error) of each reported quantity across runs.
/// Quantities undefined in every run stay `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub volume: Option<f64>,
    pub hft_volume: Option<f64>,
    pub tightness: Option<f64>,
    pub resiliency: Option<f64>,
    pub depth: Option<f64>,
    pub execution_rate: Option<f64>,
    pub execution_rate_normal_resting: Option<f64>,
    pub volatility: Option<f64>,
    pub kurtosis: Option<f64>,
    pub sq_return_autocorr: [Option<f64>; AUTOCORR_LAGS],
}

fn mean_and_se(xs: impl Iterator<Item = Option<f64>>) -> (Option<f64>, Option<f64>) {
    let xs: Vec<f64> = xs.flatten().collect();
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let se = if xs.len() > 1 {
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Some((var / n).sqrt())
    } else {
        None
    };
    (Some(mean), se)
}

/// Per-run means and standard errors, summed in run order.
pub fn aggregate(reports: &[LiquidityReport]) -> (Aggregate, Aggregate) {
    macro_rules! field {
        ($f:expr) => {
            mean_and_se(reports.iter().map($f))
        };
    }
    let volume = field!(|r| Some(r.volume as f64));
    let hft_volume = field!(|r| Some(r.hft_volume as f64));
    let tightness = field!(|r| r.tightness);
    let resiliency = field!(|r| r.resiliency);
    let depth = field!(|r| Some(r.depth));
    let exec = field!(|r| r.execution_rate);
    let exec_n = field!(|r| r.execution_rate_normal_resting);
    let vol = field!(|r| r.volatility);
    let kurt = field!(|r| r.kurtosis);
    let mut ac_mean = [None; AUTOCORR_LAGS];
    let mut ac_se = [None; AUTOCORR_LAGS];
    for lag in 0..AUTOCORR_LAGS {
        let (m, s) = field!(|r| r.sq_return_autocorr.map(|a| a[lag]));
        ac_mean[lag] = m;
        ac_se[lag] = s;
    }
    (
        Aggregate {
            volume: volume.0,
            hft_volume: hft_volume.0,
            tightness: tightness.0,
            resiliency: resiliency.0,
            depth: depth.0,
            execution_rate: exec.0,
            execution_rate_normal_resting: exec_n.0,
            volatility: vol.0,
            kurtosis: kurt.0,
            sq_return_autocorr: ac_mean,
        },
        Aggregate {
            volume: volume.1,
            hft_volume: hft_volume.1,
            tightness: tightness.1,
            resiliency: resiliency.1,
            depth: depth.1,
            execution_rate: exec.1,
            execution_rate_normal_resting: exec_n.1,
            volatility: vol.1,
            kurtosis: kurt.1,
            sq_return_autocorr: ac_se,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub value: f64,
    pub variant: Variant,
    pub mean: Aggregate,
    pub std_error: Aggregate,
    /// Individual runs in run-index order; runs of the same index share a
    /// seed across variants.
    pub runs: Vec<LiquidityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub spec: SweepSpec,
    pub version: String,
    /// `seeds[value_index][run]`.
    pub seeds: Vec<Vec<u64>>,
    /// Row-major: for each value, one cell per variant in `spec.variants` order.
    pub cells: Vec<CellReport>,
}

impl SweepReport {
    pub fn cell(&self, value_index: usize, variant: Variant) -> Option<&CellReport> {
        let v = self.spec.variants.iter().position(|&x| x == variant)?;
        self.cells.get(value_index * self.spec.variants.len() + v)
    }
}

/// Worker count from [`WORKERS_ENV`], if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV)
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|&n: &usize| n > 0)
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(e) => {
                log::warn!("could not build a {n}-thread pool ({e}); using the global pool");
                f()
            }
        },
        None => f(),
    }
}

/// Simulate one parameter set and compute its report.
pub fn run_single(params: &MarketParams, metrics: &MetricsConfig) -> Result<LiquidityReport, ConfigError> {
    let trace = engine::run(params)?;
    Ok(LiquidityReport::from_trace(&trace, metrics))
}

/// Run every (value, variant, run) job of a sweep. Output depends only on
/// the spec, not on scheduling.
pub fn run_sweep(spec: &SweepSpec, workers: Option<usize>) -> Result<SweepReport, ConfigError> {
    spec.validate()?;
    let nv = spec.variants.len();
    let mut jobs = Vec::new();
    let mut seeds = Vec::with_capacity(spec.values.len());
    for vi in 0..spec.values.len() {
        let base = spec.cell_params(vi)?;
        let row: Vec<u64> = (0..spec.runs).map(|r| spec.seed(vi, r)).collect();
        for &variant in &spec.variants {
            for &seed in &row {
                jobs.push(MarketParams {
                    hft: variant.hft(),
                    seed,
                    ..base.clone()
                });
            }
        }
        seeds.push(row);
    }
    log::info!(
        "sweep `{}`: {} jobs of {} steps",
        spec.parameter,
        jobs.len(),
        spec.base.t_end
    );

    let reports: Vec<LiquidityReport> = with_pool(workers, || {
        jobs.par_iter()
            .map(|p| run_single(p, &spec.metrics))
            .collect::<Result<Vec<_>, _>>()
    })?;

    let runs = spec.runs as usize;
    let cells = reports
        .chunks(runs)
        .enumerate()
        .map(|(k, chunk)| {
            let (mean, std_error) = aggregate(chunk);
            CellReport {
                value: spec.values[k / nv],
                variant: spec.variants[k % nv],
                mean,
                std_error,
                runs: chunk.to_vec(),
            }
        })
        .collect();

    Ok(SweepReport {
        spec: spec.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seeds,
        cells,
    })
}

/// Column names of the per-cell CSV. The seven indicator columns come
/// first in the order of the published result tables.
pub const CSV_COLUMNS: &[&str] = &[
    "parameter",
    "value",
    "variant",
    "Volume",
    "HFT volume",
    "Tightness",
    "Resiliency",
    "Depth",
    "Execution rate",
    "Volatility",
    "Execution rate (normal resting)",
    "Kurtosis",
    "runs",
    "Volume SE",
    "Tightness SE",
    "Resiliency SE",
    "Depth SE",
    "Execution rate SE",
    "Volatility SE",
];

fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn percent(x: Option<f64>) -> String {
    cell(x.map(|v| v * 100.0))
}

/// Execution rates and volatility are written in percent.
pub fn write_csv<W: Write>(report: &SweepReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for c in &report.cells {
        let (m, s) = (&c.mean, &c.std_error);
        w.write_record([
            report.spec.parameter.clone(),
            c.value.to_string(),
            c.variant.label().to_string(),
            cell(m.volume),
            cell(m.hft_volume),
            cell(m.tightness),
            cell(m.resiliency),
            cell(m.depth),
            percent(m.execution_rate),
            percent(m.volatility),
            percent(m.execution_rate_normal_resting),
            cell(m.kurtosis),
            c.runs.len().to_string(),
            cell(s.volume),
            cell(s.tightness),
            cell(s.resiliency),
            cell(s.depth),
            percent(s.execution_rate),
            percent(s.volatility),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(report: &SweepReport) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(report, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Everything needed to regenerate a report byte-for-byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub spec: SweepSpec,
    pub seeds: Vec<Vec<u64>>,
    pub settings: ManifestSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSettings {
    pub hft_on_abstain: bool,
    pub volatility_interval: u64,
    pub return_interval: u64,
    pub seed_derivation: String,
}

impl Manifest {
    pub fn of(report: &SweepReport) -> Self {
        Self {
            version: report.version.clone(),
            spec: report.spec.clone(),
            seeds: report.seeds.clone(),
            settings: ManifestSettings {
                hft_on_abstain: report.spec.base.hft_on_abstain,
                volatility_interval: report.spec.metrics.volatility_interval,
                return_interval: report.spec.metrics.return_interval,
                seed_derivation: "sha256(master_le || value_index_le || run_le || \"run\")[..8]".into(),
            },
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

/// Write the CSV report and, if requested, its manifest.
pub fn emit(report: &SweepReport, csv_path: &Path, manifest_path: Option<&Path>) -> Result<()> {
    write_file(csv_path, csv_string(report)?.as_bytes())?;
    if let Some(path) = manifest_path {
        let json = serde_json::to_string_pretty(&Manifest::of(report))?;
        write_file(path, json.as_bytes())?;
    }
    Ok(())
}

/// Outcome of the stylized-facts gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StylizedVerdict {
    pub pass: bool,
    pub runs: usize,
    /// Runs whose statistics were defined.
    pub defined_runs: usize,
    pub mean_kurtosis: Option<f64>,
    pub mean_sq_return_autocorr: [Option<f64>; AUTOCORR_LAGS],
}

/// Pass iff the mean excess kurtosis and every mean squared-return
/// autocorrelation are positive.
pub fn stylized_verdict(facts: &[Option<StylizedFacts>]) -> StylizedVerdict {
    let defined: Vec<&StylizedFacts> = facts.iter().flatten().collect();
    let mean = |f: &dyn Fn(&StylizedFacts) -> f64| {
        (!defined.is_empty()).then(|| defined.iter().map(|s| f(s)).sum::<f64>() / defined.len() as f64)
    };
    let mean_kurtosis = mean(&|s| s.kurtosis);
    let mut mean_sq_return_autocorr = [None; AUTOCORR_LAGS];
    for (lag, slot) in mean_sq_return_autocorr.iter_mut().enumerate() {
        *slot = mean(&|s| s.sq_return_autocorr[lag]);
    }
    let pass = mean_kurtosis.is_some_and(|k| k > 0.0)
        && mean_sq_return_autocorr.iter().all(|a| a.is_some_and(|v| v > 0.0));
    StylizedVerdict {
        pass,
        runs: facts.len(),
        defined_runs: defined.len(),
        mean_kurtosis,
        mean_sq_return_autocorr,
    }
}

/// Run `runs` seeded simulations of `params` and apply the stylized-facts gate.
pub fn validate_stylized(
    params: &MarketParams,
    runs: u32,
    master_seed: u64,
    metrics: &MetricsConfig,
    workers: Option<usize>,
) -> Result<StylizedVerdict, ConfigError> {
    params.validate()?;
    if runs == 0 {
        return Err(ConfigError::invalid("runs must be positive"));
    }
    let facts = with_pool(workers, || {
        (0..runs)
            .into_par_iter()
            .map(|r| {
                let p = MarketParams {
                    seed: run_seed(master_seed, 0, u64::from(r)),
                    ..params.clone()
                };
                let trace = engine::run(&p)?;
                Ok(crate::metrics::stylized_facts(&trace.prices, metrics.return_interval))
            })
            .collect::<Result<Vec<_>, ConfigError>>()
    })?;
    Ok(stylized_verdict(&facts))
}
