//! Trace-driven simulation, parameter sweeps and model comparison.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{aggregate_bandwidth, top_c_mass, BandwidthParams, MassMode};
use crate::cache::{run_policy_with, Policy};
use crate::error::{invalid, Error, Result};
use crate::output::{fmt_real, write_atomic};
use crate::popularity::ZipfCatalog;
use crate::workload::{
    equal_bins, ObjectAttributes, RankHistogram, RateConvention, ValueRange, Workload,
    DEFAULT_CHANNEL_RANGE_MS, DEFAULT_SESSION_SIZE, DEFAULT_SIZE_RANGE_KB,
};

/// Zipf exponents of the reference experimental grid.
pub const PAPER_ALPHAS: [f64; 6] = [0.98, 0.75, 0.64, 0.51, 0.41, 0.31];

/// `100^3` requests.
pub const DEFAULT_REQUESTS: usize = 1_000_000;
pub const DEFAULT_OBJECTS: usize = 10_000;
pub const DEFAULT_CAPACITY: usize = 100;

/// One fully specified simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_objects: usize,
    pub alpha: f64,
    pub total_requests: usize,
    pub session_size: usize,
    pub capacity: usize,
    pub policy: Policy,
    pub seed: u64,
    pub size_range: ValueRange,
    pub time_range: ValueRange,
    pub k: f64,
    pub rate: RateConvention,
    pub mode: MassMode,
    /// Preload the top `capacity` ranks before the first request.
    pub warm_start: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_objects: DEFAULT_OBJECTS,
            alpha: PAPER_ALPHAS[0],
            total_requests: DEFAULT_REQUESTS,
            session_size: DEFAULT_SESSION_SIZE,
            capacity: DEFAULT_CAPACITY,
            policy: Policy::SessionLfu,
            seed: 0,
            size_range: DEFAULT_SIZE_RANGE_KB,
            time_range: DEFAULT_CHANNEL_RANGE_MS,
            k: 1.0,
            rate: RateConvention::Product,
            mode: MassMode::Corrected,
            warm_start: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_objects == 0 || self.total_requests == 0 || self.session_size == 0 {
            return Err(invalid(
                "objects, requests and session size must be positive",
            ));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(invalid(format!(
                "alpha must be finite and >= 0, got {}",
                self.alpha
            )));
        }
        self.size_range.validate()?;
        self.time_range.validate()?;
        self.bandwidth_params().validate()
    }

    pub fn bandwidth_params(&self) -> BandwidthParams {
        BandwidthParams {
            k: self.k,
            cache_capacity: self.capacity,
            mode: self.mode,
            rate: self.rate,
        }
    }

    pub fn catalog(&self) -> Result<ZipfCatalog> {
        ZipfCatalog::new(self.n_objects, self.alpha)
    }

    pub fn attributes(&self) -> Result<ObjectAttributes> {
        ObjectAttributes::generate(self.n_objects, self.size_range, self.time_range, self.seed)
    }

    pub fn workload(&self, catalog: &ZipfCatalog) -> Result<Workload> {
        Workload::generate(catalog, self.total_requests, self.session_size, self.seed)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RankTally {
    pub requests: u64,
    pub hits: u64,
    pub misses: u64,
    pub imported_bandwidth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub requests: u64,
    pub hits: u64,
    pub misses: u64,
    pub hit_ratio: f64,
    pub miss_ratio: f64,
    pub total_bandwidth: f64,
}

/// Per-rank and aggregate results of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub config: SimConfig,
    pub per_rank: Vec<RankTally>,
    pub totals: Totals,
    pub elapsed_secs: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a SimConfig,
    totals: &'a Totals,
    elapsed_secs: f64,
}

impl SimReport {
    pub fn histogram(&self) -> RankHistogram {
        RankHistogram::from_counts(self.per_rank.iter().map(|t| t.requests).collect())
    }

    pub fn imported_bandwidth(&self) -> Vec<f64> {
        self.per_rank.iter().map(|t| t.imported_bandwidth).collect()
    }

    /// Imported bandwidth summed over `n_bins` equal-width rank ranges.
    pub fn binned_bandwidth(&self, n_bins: usize) -> Vec<f64> {
        equal_bins(&self.imported_bandwidth(), n_bins)
    }

    /// `rank,log100_rank,requests,hits,misses,bandwidth`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "rank",
            "log100_rank",
            "requests",
            "hits",
            "misses",
            "bandwidth",
        ])?;
        for (i, t) in self.per_rank.iter().enumerate() {
            let rank = i + 1;
            w.write_record([
                rank.to_string(),
                fmt_real((rank as f64).log(100.0)),
                t.requests.to_string(),
                t.hits.to_string(),
                t.misses.to_string(),
                fmt_real(t.imported_bandwidth),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), |f| self.write_csv(f))
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Summary {
            config: &self.config,
            totals: &self.totals,
            elapsed_secs: self.elapsed_secs,
        })?)
    }

    pub fn save_summary(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = self.summary_json()?;
        write_atomic(path.as_ref(), |f| Ok(writeln!(f, "{json}")?))
    }
}

/// Builds catalog, attributes and workload from `config.seed` and runs the
/// configured policy over them.
pub fn run_simulation(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    let start = Instant::now();
    let catalog = config.catalog()?;
    let attributes = config.attributes()?;
    let workload = config.workload(&catalog)?;
    let mut report = simulate_workload(config, &workload, &attributes)?;
    report.elapsed_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Runs an existing workload. `config.n_objects` must match the workload;
/// the Zipf fields of `config` are carried along only for the record.
pub fn simulate_workload(
    config: &SimConfig,
    workload: &Workload,
    attributes: &ObjectAttributes,
) -> Result<SimReport> {
    let start = Instant::now();
    let n = workload.n_objects();
    if config.n_objects != n || attributes.len() != n {
        return Err(invalid(format!(
            "object counts disagree: config {}, workload {n}, attributes {}",
            config.n_objects,
            attributes.len()
        )));
    }
    let params = config.bandwidth_params();
    params.validate()?;
    let demand = (1..=n)
        .map(|r| attributes.demand(r, config.rate))
        .collect::<Result<Vec<f64>>>()?;

    let warm: Option<Vec<usize>> = config
        .warm_start
        .then(|| (1..=config.capacity.min(n)).collect());

    let mut per_rank = vec![RankTally::default(); n];
    run_policy_with(
        config.policy,
        config.capacity,
        warm.as_deref(),
        workload,
        |outcome| {
            let t = &mut per_rank[outcome.rank - 1];
            t.requests += 1;
            if outcome.hit {
                t.hits += 1;
            } else {
                t.misses += 1;
            }
        },
    )?;
    for (t, b) in per_rank.iter_mut().zip(&demand) {
        t.imported_bandwidth = params.k * t.misses as f64 * b;
    }

    let requests: u64 = per_rank.iter().map(|t| t.requests).sum();
    let hits: u64 = per_rank.iter().map(|t| t.hits).sum();
    let misses = requests - hits;
    let hit_ratio = hits as f64 / requests as f64;
    let totals = Totals {
        requests,
        hits,
        misses,
        hit_ratio,
        miss_ratio: misses as f64 / requests as f64,
        total_bandwidth: per_rank.iter().map(|t| t.imported_bandwidth).sum(),
    };
    Ok(SimReport {
        config: config.clone(),
        per_rank,
        totals,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

/// Cross product of alphas and capacities over a shared base configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub base: SimConfig,
    pub alphas: Vec<f64>,
    pub capacities: Vec<usize>,
}

impl SweepConfig {
    /// The scalar configurations of every sweep point, alpha-major. Point
    /// `i` runs with seed `base.seed ^ i`.
    pub fn points(&self) -> Result<Vec<SimConfig>> {
        if self.alphas.is_empty() || self.capacities.is_empty() {
            return Err(invalid("sweep lists must be non-empty"));
        }
        let mut out = Vec::with_capacity(self.alphas.len() * self.capacities.len());
        for &alpha in &self.alphas {
            for &capacity in &self.capacities {
                let index = out.len() as u64;
                out.push(SimConfig {
                    alpha,
                    capacity,
                    seed: self.base.seed ^ index,
                    ..self.base.clone()
                });
            }
        }
        Ok(out)
    }
}

/// Runs every sweep point, in parallel, returning reports in point order.
pub fn sweep(config: &SweepConfig) -> Result<Vec<SimReport>> {
    let points = config.points()?;
    points.iter().try_for_each(SimConfig::validate)?;
    points.par_iter().map(run_simulation).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub capacity: usize,
    pub simulated_hit_ratio: f64,
    pub top_c_mass: f64,
    /// `top_c_mass - simulated_hit_ratio`
    pub gap: f64,
    pub sim_bandwidth: f64,
    pub model_bandwidth_product: f64,
    pub model_bandwidth_ratio: f64,
}

/// Simulated hit ratio and imported bandwidth against the closed-form model,
/// one row per capacity. All rows share one catalog, attribute table and
/// workload drawn from `config.seed`.
pub fn compare_analytic(config: &SimConfig, capacities: &[usize]) -> Result<Vec<ComparisonRow>> {
    config.validate()?;
    if capacities.is_empty() {
        return Err(invalid("need at least one capacity"));
    }
    let catalog = config.catalog()?;
    let attributes = config.attributes()?;
    let workload = config.workload(&catalog)?;
    let n = catalog.n_objects();

    capacities
        .par_iter()
        .map(|&capacity| {
            let cfg = SimConfig {
                capacity,
                ..config.clone()
            };
            cfg.validate()?;
            let report = simulate_workload(&cfg, &workload, &attributes)?;
            let mass = top_c_mass(&catalog, capacity.min(n))?;
            let params = cfg.bandwidth_params();
            let model = |rate| {
                aggregate_bandwidth(
                    &attributes,
                    &BandwidthParams { rate, ..params },
                    &catalog,
                    n,
                )
            };
            Ok(ComparisonRow {
                capacity,
                simulated_hit_ratio: report.totals.hit_ratio,
                top_c_mass: mass,
                gap: mass - report.totals.hit_ratio,
                sim_bandwidth: report.totals.total_bandwidth,
                model_bandwidth_product: model(RateConvention::Product)?,
                model_bandwidth_ratio: model(RateConvention::Ratio)?,
            })
        })
        .collect()
}

pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "capacity",
        "simulated_hit_ratio",
        "top_c_mass",
        "gap",
        "sim_bandwidth",
        "model_bandwidth_product",
        "model_bandwidth_ratio",
    ])?;
    for r in rows {
        w.write_record([
            r.capacity.to_string(),
            fmt_real(r.simulated_hit_ratio),
            fmt_real(r.top_c_mass),
            fmt_real(r.gap),
            fmt_real(r.sim_bandwidth),
            fmt_real(r.model_bandwidth_product),
            fmt_real(r.model_bandwidth_ratio),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Ordinary least-squares line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n != ys.len() {
        return Err(invalid("x and y lengths differ"));
    }
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "{n} points, need at least 3"
        )));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientData("x values are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        points: n,
    })
}

/// Fits `log count = a + slope * log rank` over ranks `1..=max_rank`,
/// skipping ranks with zero requests.
pub fn fit_power_law(histogram: &RankHistogram, max_rank: usize) -> Result<LinearFit> {
    if max_rank < 10 {
        return Err(invalid(format!(
            "max_rank must be at least 10, got {max_rank}"
        )));
    }
    let counts = histogram.counts();
    if max_rank > counts.len() {
        return Err(invalid(format!(
            "max_rank {max_rank} exceeds histogram length {}",
            counts.len()
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = counts[..max_rank]
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (((i + 1) as f64).ln(), (c as f64).ln()))
        .unzip();
    linear_fit(&xs, &ys)
}

/// Share of all requests that went to ranks `1..=top`.
pub fn request_share(histogram: &RankHistogram, top: usize) -> f64 {
    let counts = histogram.counts();
    let top = top.min(counts.len());
    counts[..top].iter().sum::<u64>() as f64 / histogram.total() as f64
}

pub fn is_non_increasing<T: PartialOrd>(values: &[T]) -> bool {
    values.windows(2).all(|w| w[0] >= w[1])
}

/// A cumulative curve is concave exactly when its increments never grow.
pub fn cumulative_is_concave(increments: &[f64]) -> bool {
    is_non_increasing(increments)
}
