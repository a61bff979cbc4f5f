//! Command-line front end: `gen`, `run`, `sweep` and `estimate`.
//!
//! Every flag may also come from a `--config` file of `key=value` lines whose
//! keys are flag names without the leading dashes. Flags given on the
//! command line win over the file.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::Serialize;

use crate::analytics::{BandwidthParams, MassMode, ModelReport};
use crate::output::write_atomic;
use crate::popularity::ZipfCatalog;
use crate::simulator::{
    compare_analytic, fit_power_law, run_simulation, simulate_workload, sweep,
    write_comparison_csv, SimConfig, SweepConfig, DEFAULT_CAPACITY, DEFAULT_OBJECTS,
    DEFAULT_REQUESTS, PAPER_ALPHAS,
};
use crate::workload::{
    ObjectAttributes, RateConvention, ValueRange, Workload, DEFAULT_SESSION_SIZE,
};

#[derive(Debug, Parser)]
#[command(
    name = "proxycache",
    version,
    about = "Web proxy cache simulator and Zipf traffic model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a Zipf request trace.
    Gen(GenArgs),
    /// Simulate one cache over a trace or a freshly generated workload.
    Run(RunArgs),
    /// Simulate every combination of alphas and capacities.
    Sweep(SweepArgs),
    /// Evaluate the closed-form hit-miss and bandwidth model.
    Estimate(EstimateArgs),
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// key=value file supplying defaults for any flag
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// number of distinct objects N
    #[arg(long)]
    objects: usize,
    /// total requests R
    #[arg(long, default_value_t = DEFAULT_REQUESTS)]
    requests: usize,
    /// Zipf exponent
    #[arg(long)]
    alpha: f64,
    /// requests per session
    #[arg(long, default_value_t = DEFAULT_SESSION_SIZE)]
    session: usize,
    #[arg(long)]
    seed: u64,
    /// trace file to write
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct AttributeArgs {
    /// smallest object size (kb)
    #[arg(long, default_value_t = 1.0)]
    size_min: f64,
    /// largest object size (kb)
    #[arg(long, default_value_t = 15.0)]
    size_max: f64,
    /// shortest channel activity time (ms)
    #[arg(long, default_value_t = 1.0)]
    time_min: f64,
    /// longest channel activity time (ms)
    #[arg(long, default_value_t = 10.0)]
    time_max: f64,
    /// loss threshold factor k in [0, 1]
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    /// bandwidth of an object: product (kb*ms) or ratio (kb/ms)
    #[arg(long, default_value = "product")]
    rate: RateConvention,
}

impl AttributeArgs {
    fn ranges(&self) -> Result<(ValueRange, ValueRange)> {
        Ok((
            ValueRange::new(self.size_min, self.size_max).context("size range (kb)")?,
            ValueRange::new(self.time_min, self.time_max).context("channel time range (ms)")?,
        ))
    }
}

#[derive(Debug, Args)]
struct SimArgs {
    /// number of distinct objects N
    #[arg(long, default_value_t = DEFAULT_OBJECTS)]
    objects: usize,
    /// total requests R
    #[arg(long, default_value_t = DEFAULT_REQUESTS)]
    requests: usize,
    /// requests per session
    #[arg(long, default_value_t = DEFAULT_SESSION_SIZE)]
    session: usize,
    /// replacement policy: session_lfu, lru or lfu_classic
    #[arg(long, default_value = "session_lfu")]
    policy: String,
    /// preload the top-ranked objects before the first request
    #[arg(long)]
    warm: bool,
    #[command(flatten)]
    attributes: AttributeArgs,
}

impl SimArgs {
    fn base_config(&self, alpha: f64, capacity: usize, seed: u64) -> Result<SimConfig> {
        let (size_range, time_range) = self.attributes.ranges()?;
        let config = SimConfig {
            n_objects: self.objects,
            alpha,
            total_requests: self.requests,
            session_size: self.session,
            capacity,
            policy: self.policy.parse()?,
            seed,
            size_range,
            time_range,
            k: self.attributes.k,
            rate: self.attributes.rate,
            warm_start: self.warm,
            ..SimConfig::default()
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// replay this trace instead of generating requests
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Zipf exponent for generated workloads
    #[arg(long, default_value_t = PAPER_ALPHAS[0])]
    alpha: f64,
    /// cache capacity C in objects
    #[arg(long, default_value_t = DEFAULT_CAPACITY)]
    capacity: usize,
    /// seed for requests and attributes; required unless --trace is given
    #[arg(long)]
    seed: Option<u64>,
    /// also write comparison.csv against the closed-form model
    #[arg(long)]
    compare: bool,
    /// capacities for the comparison table, comma separated
    #[arg(long)]
    compare_capacities: Option<String>,
    /// directory for report.csv and summary.json
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    sim: SimArgs,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Zipf exponents, comma separated
    #[arg(long, default_value = "0.98,0.75,0.64,0.51,0.41,0.31")]
    alphas: String,
    /// cache capacities, comma separated
    #[arg(long, default_value_t = DEFAULT_CAPACITY.to_string())]
    capacities: String,
    #[arg(long)]
    seed: u64,
    /// highest rank used for the power-law fit recorded in the manifest
    #[arg(long, default_value_t = 100)]
    fit_ranks: usize,
    /// directory for per-point CSVs and manifest.json
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    sim: SimArgs,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// number of distinct objects N
    #[arg(long, default_value_t = DEFAULT_OBJECTS)]
    objects: usize,
    /// Zipf exponent
    #[arg(long)]
    alpha: f64,
    /// cache capacity C in objects
    #[arg(long, default_value_t = DEFAULT_CAPACITY)]
    capacity: usize,
    /// closed-form mass: paper, corrected or exact
    #[arg(long, default_value = "corrected")]
    mode: MassMode,
    /// request count R used for per-rank miss probabilities
    #[arg(long, default_value_t = DEFAULT_REQUESTS as u64)]
    requests: u64,
    /// seed for the attribute table
    #[arg(long)]
    seed: u64,
    /// model report CSV to write
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    attributes: AttributeArgs,
    #[command(flatten)]
    config: ConfigArg,
}

/// Parses `args` (including the program name) and executes the command,
/// writing human-readable results to `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = merge_config(args.into_iter().map(Into::into).collect())?;
    let mut command = Cli::command();
    for name in ["gen", "run", "sweep", "estimate"] {
        command = command.mut_subcommand(name, |c| c.args_override_self(true));
    }
    let matches = command.try_get_matches_from(args)?;
    let cli = Cli::from_arg_matches(&matches)?;
    match cli.command {
        Command::Gen(a) => cmd_gen(&a, stdout),
        Command::Run(a) => cmd_run(&a, stdout),
        Command::Sweep(a) => cmd_sweep(&a, stdout),
        Command::Estimate(a) => cmd_estimate(&a, stdout),
    }
}

// Inserts `--key value` pairs from a `--config` file right after the
// subcommand so later command-line occurrences override them.
fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut config_path = None;
    let mut iter = args.iter().enumerate();
    while let Some((_, a)) = iter.next() {
        let Some(s) = a.to_str() else { continue };
        if s == "--config" {
            config_path = iter.next().map(|(_, p)| PathBuf::from(p));
        } else if let Some(p) = s.strip_prefix("--config=") {
            config_path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = config_path else {
        return Ok(args);
    };
    let pairs = read_config(&path)?;
    let mut merged = Vec::with_capacity(args.len() + 2 * pairs.len());
    merged.extend(args.iter().take(2).cloned());
    for (key, value) in pairs {
        merged.push(format!("--{key}").into());
        if let Some(v) = value {
            merged.push(v.into());
        }
    }
    merged.extend(args.iter().skip(2).cloned());
    Ok(merged)
}

fn read_config(path: &Path) -> Result<Vec<(String, Option<String>)>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), Some(v.trim().to_owned())),
            None => (line, None),
        };
        if key.is_empty() || key == "config" || key.starts_with('-') {
            bail!("{}: line {}: invalid key `{key}`", path.display(), i + 1);
        }
        pairs.push((key.to_owned(), value));
    }
    Ok(pairs)
}

fn parse_list<T: std::str::FromStr>(flag: &str, raw: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let items: Vec<&str> = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        bail!("--{flag} needs at least one value");
    }
    items
        .into_iter()
        .map(|s| {
            s.parse()
                .map_err(|e| anyhow::anyhow!("--{flag}: `{s}`: {e}"))
        })
        .collect()
}

fn cmd_gen(a: &GenArgs, stdout: &mut dyn Write) -> Result<()> {
    let catalog = ZipfCatalog::new(a.objects, a.alpha)?;
    let workload = Workload::generate(&catalog, a.requests, a.session, a.seed)?;
    workload.save_trace(&a.out)?;
    writeln!(
        stdout,
        "wrote {} requests over {} objects to {}",
        workload.len(),
        workload.n_objects(),
        a.out.display()
    )?;
    Ok(())
}

fn cmd_run(a: &RunArgs, stdout: &mut dyn Write) -> Result<()> {
    let report = match &a.trace {
        Some(path) => {
            if a.compare || a.compare_capacities.is_some() {
                bail!("--compare needs a generated workload, not --trace");
            }
            let workload = Workload::load_trace(path)?;
            let mut config = a
                .sim
                .base_config(a.alpha, a.capacity, a.seed.unwrap_or(0))?;
            config.n_objects = workload.n_objects();
            config.total_requests = workload.len();
            config.session_size = workload.session_size();
            let attributes = config.attributes()?;
            simulate_workload(&config, &workload, &attributes)?
        }
        None => {
            let Some(seed) = a.seed else {
                bail!("--seed is required when generating a workload");
            };
            let config = a.sim.base_config(a.alpha, a.capacity, seed)?;
            run_simulation(&config)?
        }
    };

    let comparison = if a.compare || a.compare_capacities.is_some() {
        let capacities = match &a.compare_capacities {
            Some(list) => parse_list("compare-capacities", list)?,
            None => vec![a.capacity],
        };
        Some(compare_analytic(&report.config, &capacities)?)
    } else {
        None
    };

    report.save_csv(a.out_dir.join("report.csv"))?;
    report.save_summary(a.out_dir.join("summary.json"))?;
    if let Some(rows) = &comparison {
        write_atomic(&a.out_dir.join("comparison.csv"), |w| {
            write_comparison_csv(rows, w)
        })?;
    }

    let t = &report.totals;
    writeln!(
        stdout,
        "requests={} hits={} misses={} hit_ratio={:.6} miss_ratio={:.6} bandwidth={:.6}",
        t.requests, t.hits, t.misses, t.hit_ratio, t.miss_ratio, t.total_bandwidth
    )?;
    Ok(())
}

#[derive(Serialize)]
struct ManifestEntry {
    file: String,
    alpha: f64,
    capacity: usize,
    seed: u64,
    hit_ratio: f64,
    total_bandwidth: f64,
    power_law_slope: Option<f64>,
    power_law_r_squared: Option<f64>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    base: &'a SimConfig,
    fit_ranks: usize,
    points: Vec<ManifestEntry>,
}

fn cmd_sweep(a: &SweepArgs, stdout: &mut dyn Write) -> Result<()> {
    let alphas: Vec<f64> = parse_list("alphas", &a.alphas)?;
    let capacities: Vec<usize> = parse_list("capacities", &a.capacities)?;
    let base = a.sim.base_config(alphas[0], capacities[0], a.seed)?;
    let spec = SweepConfig {
        base,
        alphas,
        capacities,
    };
    let reports = sweep(&spec)?;

    let mut points = Vec::with_capacity(reports.len());
    for rep in &reports {
        let c = &rep.config;
        let fit = fit_power_law(&rep.histogram(), a.fit_ranks.min(c.n_objects)).ok();
        points.push(ManifestEntry {
            file: format!("alpha{}_cap{}.csv", c.alpha, c.capacity),
            alpha: c.alpha,
            capacity: c.capacity,
            seed: c.seed,
            hit_ratio: rep.totals.hit_ratio,
            total_bandwidth: rep.totals.total_bandwidth,
            power_law_slope: fit.map(|f| f.slope),
            power_law_r_squared: fit.map(|f| f.r_squared),
        });
    }
    for (rep, entry) in reports.iter().zip(&points) {
        rep.save_csv(a.out_dir.join(&entry.file))?;
    }
    let manifest = serde_json::to_string_pretty(&Manifest {
        base: &spec.base,
        fit_ranks: a.fit_ranks,
        points,
    })?;
    write_atomic(&a.out_dir.join("manifest.json"), |w| {
        Ok(writeln!(w, "{manifest}")?)
    })?;

    for rep in &reports {
        writeln!(
            stdout,
            "alpha={} capacity={} hit_ratio={:.6} bandwidth={:.6}",
            rep.config.alpha, rep.config.capacity, rep.totals.hit_ratio, rep.totals.total_bandwidth
        )?;
    }
    Ok(())
}

fn cmd_estimate(a: &EstimateArgs, stdout: &mut dyn Write) -> Result<()> {
    let catalog = ZipfCatalog::new(a.objects, a.alpha)?;
    let (size_range, time_range) = a.attributes.ranges()?;
    let attributes = ObjectAttributes::generate(a.objects, size_range, time_range, a.seed)?;
    let params = BandwidthParams::new(a.attributes.k, a.capacity)?
        .with_mode(a.mode)
        .with_rate(a.attributes.rate);
    let report = ModelReport::build(&catalog, &attributes, &params, a.requests)?;
    report.save_csv(&a.out)?;
    writeln!(
        stdout,
        "top_c_mass={} h_demand={} aggregate_bandwidth={}",
        report.top_c_mass, report.h_demand, report.aggregate_bandwidth
    )?;
    if let (Some(m), Some(b)) = (
        report.asymptotic_mass,
        report.asymptotic_aggregate_bandwidth,
    ) {
        writeln!(
            stdout,
            "asymptotic_mass={m} asymptotic_aggregate_bandwidth={b}"
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_parsing() {
        assert_eq!(
            parse_list::<f64>("alphas", "0.98, 0.64").unwrap(),
            vec![0.98, 0.64]
        );
        assert!(parse_list::<f64>("alphas", "").is_err());
        assert!(parse_list::<f64>("alphas", " , ").is_err());
        assert!(parse_list::<usize>("capacities", "10,x").is_err());
    }

    #[test]
    fn config_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.conf");
        fs::write(&path, "# comment\nobjects = 5\nwarm\n\nalpha=0.5\n").unwrap();
        let pairs = read_config(&path).unwrap();
        assert_eq!(
            pairs,
            vec![
                ("objects".to_owned(), Some("5".to_owned())),
                ("warm".to_owned(), None),
                ("alpha".to_owned(), Some("0.5".to_owned())),
            ]
        );
        fs::write(&path, "config=other\n").unwrap();
        assert!(read_config(&path).is_err());
    }

    #[test]
    fn help_lists_units() {
        for sub in ["run", "sweep", "estimate"] {
            let mut cmd = Cli::command();
            let help = cmd
                .find_subcommand_mut(sub)
                .unwrap()
                .render_long_help()
                .to_string();
            assert!(help.contains("(kb)") && help.contains("(ms)"), "{sub}");
        }
        let mut cmd = Cli::command();
        let help = cmd
            .find_subcommand_mut("gen")
            .unwrap()
            .render_long_help()
            .to_string();
        assert!(help.contains("--objects") && help.contains("--out"));
    }
}
