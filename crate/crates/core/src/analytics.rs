//! Closed-form hit-miss and bandwidth-demand model.
//!
//! For a stream of `R` independent requests the chance that rank `i` has not
//! been requested yet is `(1 - p_i)^R`. Summed against `p_i` this gives the
//! on-demand miss mass, which vanishes as `R` grows; in steady state the
//! cache of size `C` is credited with the top-`C` probability mass. The
//! aggregate import bandwidth is `k * mass * sum(b_i)`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::output::{fmt_real, write_atomic};
use crate::popularity::{generalized_harmonic, zeta_real, ZipfCatalog};
use crate::workload::{ObjectAttributes, RateConvention};

/// Closed-form approximation of the top-`C` mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassMode {
    /// No closed form; only the exact partial sum is reported.
    Exact,
    /// `alpha * C^(1 - alpha)`, unnormalized and able to exceed 1.
    PaperLiteral,
    /// `Omega * (C^(1 - alpha) / (1 - alpha) + zeta(alpha) + C^-alpha / 2)`,
    /// the Euler-Maclaurin expansion of the normalized partial sum.
    #[default]
    Corrected,
}

impl std::str::FromStr for MassMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "paper" | "paper_literal" => Ok(Self::PaperLiteral),
            "corrected" => Ok(Self::Corrected),
            other => Err(invalid(format!("unknown mass mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthParams {
    /// Loss threshold factor in `[0, 1]`.
    pub k: f64,
    pub cache_capacity: usize,
    pub mode: MassMode,
    pub rate: RateConvention,
}

impl BandwidthParams {
    pub fn new(k: f64, cache_capacity: usize) -> Result<Self> {
        let p = Self {
            k,
            cache_capacity,
            mode: MassMode::default(),
            rate: RateConvention::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_mode(mut self, mode: MassMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_rate(mut self, rate: RateConvention) -> Self {
        self.rate = rate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.k) {
            return Err(invalid(format!("k must lie in [0, 1], got {}", self.k)));
        }
        if self.cache_capacity == 0 {
            return Err(invalid("cache capacity must be at least 1"));
        }
        Ok(())
    }
}

/// `(1 - p_rank)^R`: probability that `rank` is absent after `R` requests.
pub fn miss_probability(catalog: &ZipfCatalog, rank: usize, r_requests: u64) -> Result<f64> {
    let p = catalog.probability(rank)?;
    Ok(miss_term(p, r_requests))
}

fn miss_term(p: f64, r_requests: u64) -> f64 {
    (1.0 - p).powf(r_requests as f64)
}

/// `sum_{i <= upper_rank} p_i (1 - p_i)^R`.
pub fn hit_miss_on_demand(
    catalog: &ZipfCatalog,
    r_requests: u64,
    upper_rank: usize,
) -> Result<f64> {
    catalog.check_rank(upper_rank)?;
    Ok(catalog.probabilities()[..upper_rank]
        .iter()
        .map(|&p| p * miss_term(p, r_requests))
        .sum())
}

/// Exact probability mass of the `c` most popular ranks.
pub fn top_c_mass(catalog: &ZipfCatalog, c: usize) -> Result<f64> {
    if c == 0 || c > catalog.n_objects() {
        return Err(invalid(format!(
            "top-C mass needs 1 <= C <= {}, got {c}",
            catalog.n_objects()
        )));
    }
    if c == catalog.n_objects() {
        return Ok(1.0);
    }
    Ok(generalized_harmonic(c, catalog.alpha()) / catalog.harmonic_sum())
}

/// Closed-form approximation of [`top_c_mass`]. `Exact` defers to the
/// partial sum.
pub fn top_c_mass_asymptotic(catalog: &ZipfCatalog, c: usize, mode: MassMode) -> Result<f64> {
    if c == 0 {
        return Err(invalid("C must be at least 1"));
    }
    let alpha = catalog.alpha();
    if mode == MassMode::Exact {
        return top_c_mass(catalog, c);
    }
    if alpha == 1.0 {
        return Err(Error::SingularAlpha);
    }
    let c = c as f64;
    let scale = c.powf(1.0 - alpha);
    Ok(match mode {
        MassMode::PaperLiteral => alpha * scale,
        MassMode::Corrected => {
            let partial = scale / (1.0 - alpha) + zeta_real(alpha)? + 0.5 * c.powf(-alpha);
            catalog.normalizer() * partial
        }
        MassMode::Exact => unreachable!(),
    })
}

// A cache at least as large as the catalog holds all of it.
fn capacity_mass(catalog: &ZipfCatalog, capacity: usize) -> Result<f64> {
    top_c_mass(catalog, capacity.min(catalog.n_objects()))
}

/// `k * top_c_mass(C) * b_rank`.
pub fn bandwidth_per_rank(
    rank: usize,
    attributes: &ObjectAttributes,
    params: &BandwidthParams,
    catalog: &ZipfCatalog,
) -> Result<f64> {
    params.validate()?;
    catalog.check_rank(rank)?;
    let mass = capacity_mass(catalog, params.cache_capacity)?;
    Ok(params.k * mass * attributes.demand(rank, params.rate)?)
}

/// Sum of [`bandwidth_per_rank`] over ranks `1..=n_ranks`.
pub fn aggregate_bandwidth(
    attributes: &ObjectAttributes,
    params: &BandwidthParams,
    catalog: &ZipfCatalog,
    n_ranks: usize,
) -> Result<f64> {
    params.validate()?;
    if n_ranks == 0 || n_ranks > catalog.n_objects() || n_ranks > attributes.len() {
        return Err(invalid(format!(
            "n_ranks must be in 1..={}, got {n_ranks}",
            catalog.n_objects().min(attributes.len())
        )));
    }
    let mass = capacity_mass(catalog, params.cache_capacity)?;
    let demand = demand_sum(attributes, params.rate, n_ranks)?;
    Ok(params.k * mass * demand)
}

fn demand_sum(attributes: &ObjectAttributes, rate: RateConvention, n_ranks: usize) -> Result<f64> {
    (1..=n_ranks).map(|r| attributes.demand(r, rate)).sum()
}

/// Every model quantity for one catalog, attribute table and cache size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelReport {
    pub params: BandwidthParams,
    pub r_requests: u64,
    pub probabilities: Vec<f64>,
    pub per_rank_miss: Vec<f64>,
    pub h_demand: f64,
    pub top_c_mass: f64,
    pub per_rank_bandwidth: Vec<f64>,
    pub aggregate_bandwidth: f64,
    /// Closed-form mass for the configured mode; absent in `Exact` mode.
    pub asymptotic_mass: Option<f64>,
    /// `k * asymptotic_mass * sum(b_i)`.
    pub asymptotic_aggregate_bandwidth: Option<f64>,
}

impl ModelReport {
    pub fn build(
        catalog: &ZipfCatalog,
        attributes: &ObjectAttributes,
        params: &BandwidthParams,
        r_requests: u64,
    ) -> Result<Self> {
        params.validate()?;
        let n = catalog.n_objects();
        if attributes.len() != n {
            return Err(invalid(format!(
                "attribute table has {} rows, catalog has {n} objects",
                attributes.len()
            )));
        }
        let mass = capacity_mass(catalog, params.cache_capacity)?;
        let per_rank_miss = catalog
            .probabilities()
            .iter()
            .map(|&p| miss_term(p, r_requests))
            .collect();
        let per_rank_bandwidth = (1..=n)
            .map(|r| Ok(params.k * mass * attributes.demand(r, params.rate)?))
            .collect::<Result<Vec<f64>>>()?;
        let aggregate_bandwidth = per_rank_bandwidth.iter().sum();
        let asymptotic_mass = match params.mode {
            MassMode::Exact => None,
            mode => Some(top_c_mass_asymptotic(catalog, params.cache_capacity, mode)?),
        };
        let asymptotic_aggregate_bandwidth = match asymptotic_mass {
            Some(m) => Some(params.k * m * demand_sum(attributes, params.rate, n)?),
            None => None,
        };
        Ok(Self {
            params: *params,
            r_requests,
            probabilities: catalog.probabilities().to_vec(),
            per_rank_miss,
            h_demand: hit_miss_on_demand(catalog, r_requests, n)?,
            top_c_mass: mass,
            per_rank_bandwidth,
            aggregate_bandwidth,
            asymptotic_mass,
            asymptotic_aggregate_bandwidth,
        })
    }

    /// `rank,p,miss_prob,bandwidth` rows followed by a `#` summary line.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rank", "p", "miss_prob", "bandwidth"])?;
        for (i, ((p, m), b)) in self
            .probabilities
            .iter()
            .zip(&self.per_rank_miss)
            .zip(&self.per_rank_bandwidth)
            .enumerate()
        {
            w.write_record([
                (i + 1).to_string(),
                fmt_real(*p),
                fmt_real(*m),
                fmt_real(*b),
            ])?;
        }
        w.flush()?;
        let mut out = w.into_inner().map_err(|e| e.into_error())?;
        writeln!(out, "{}", self.summary_line())?;
        Ok(())
    }

    pub fn summary_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(fmt_real).unwrap_or_else(|| "na".into());
        format!(
            "# h_demand={} top_c_mass={} aggregate_bandwidth={} asymptotic_mass={} asymptotic_aggregate_bandwidth={}",
            fmt_real(self.h_demand),
            fmt_real(self.top_c_mass),
            fmt_real(self.aggregate_bandwidth),
            opt(self.asymptotic_mass),
            opt(self.asymptotic_aggregate_bandwidth),
        )
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), |f| self.write_csv(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat(n: usize, a: f64) -> ZipfCatalog {
        ZipfCatalog::new(n, a).unwrap()
    }

    #[test]
    fn miss_probability_cases() {
        assert_eq!(miss_probability(&cat(10, 0.8), 4, 0).unwrap(), 1.0);
        let m = miss_probability(&cat(2, 1.0), 1, 2).unwrap();
        assert!((m - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(miss_probability(&cat(1, 0.5), 1, 1).unwrap(), 0.0);
        assert!(miss_probability(&cat(3, 1.0), 4, 1).is_err());
    }

    #[test]
    fn hit_miss_cases() {
        let c = cat(7, 0.64);
        assert!((hit_miss_on_demand(&c, 0, 7).unwrap() - 1.0).abs() < 1e-15);
        let h = hit_miss_on_demand(&cat(2, 1.0), 1, 2).unwrap();
        assert!((h - 4.0 / 9.0).abs() < 1e-15);

        let c = cat(100, 0.98);
        let r = 1_000_000;
        let h = hit_miss_on_demand(&c, r, 100).unwrap();
        let last = miss_probability(&c, 100, r).unwrap();
        assert!(h <= 100.0 * last);
        assert!(h < 1e-6);
        assert!(hit_miss_on_demand(&c, 5, 101).is_err());
    }

    #[test]
    fn top_c_cases() {
        assert_eq!(top_c_mass(&cat(9, 0.4), 9).unwrap(), 1.0);
        assert!((top_c_mass(&cat(3, 1.0), 2).unwrap() - 9.0 / 11.0).abs() < 1e-15);
        assert!((top_c_mass(&cat(5, 0.0), 2).unwrap() - 0.4).abs() < 1e-15);
        assert!(top_c_mass(&cat(5, 0.0), 6).is_err());
        assert!(top_c_mass(&cat(5, 0.0), 0).is_err());
    }

    #[test]
    fn asymptotic_forms() {
        let lit = top_c_mass_asymptotic(&cat(10, 0.5), 4, MassMode::PaperLiteral).unwrap();
        assert!((lit - 1.0).abs() < 1e-15);

        let c = cat(10_000, 0.7);
        let exact = top_c_mass(&c, 100).unwrap();
        let approx = top_c_mass_asymptotic(&c, 100, MassMode::Corrected).unwrap();
        assert!((approx - exact).abs() / exact < 0.10, "{approx} vs {exact}");

        // C = 1 is outside the asymptotic regime; only sanity-check it
        let c = cat(50, 0.6);
        let one = top_c_mass_asymptotic(&c, 1, MassMode::Corrected).unwrap();
        let exact = c.normalizer();
        assert!(
            one > 0.0 && (one - exact).abs() / exact < 0.5,
            "{one} vs {exact}"
        );

        let uniform = cat(40, 0.0);
        let m = top_c_mass_asymptotic(&uniform, 10, MassMode::Corrected).unwrap();
        assert!((m - 0.25).abs() < 1e-12);

        let c = cat(50, 1.0);
        assert!(matches!(
            top_c_mass_asymptotic(&c, 4, MassMode::PaperLiteral),
            Err(Error::SingularAlpha)
        ));
        assert!(top_c_mass_asymptotic(&c, 4, MassMode::Corrected).is_err());
        assert!(top_c_mass_asymptotic(&c, 4, MassMode::Exact).is_ok());
    }

    #[test]
    fn per_rank_bandwidth_cases() {
        let c = cat(1, 0.9);
        let a = ObjectAttributes::from_parts(vec![2.0], vec![3.0]).unwrap();
        let p = BandwidthParams::new(1.0, 1).unwrap();
        assert_eq!(bandwidth_per_rank(1, &a, &p, &c).unwrap(), 6.0);
        let ratio = p.with_rate(RateConvention::Ratio);
        assert!((bandwidth_per_rank(1, &a, &ratio, &c).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let zero = BandwidthParams::new(0.0, 1).unwrap();
        assert_eq!(bandwidth_per_rank(1, &a, &zero, &c).unwrap(), 0.0);
        assert_eq!(aggregate_bandwidth(&a, &p, &c, 1).unwrap(), 6.0);
        assert_eq!(aggregate_bandwidth(&a, &zero, &c, 1).unwrap(), 0.0);
        assert!(aggregate_bandwidth(&a, &p, &c, 0).is_err());
    }

    #[test]
    fn unit_attributes_sum_to_rank_count() {
        let n = 40;
        let c = cat(n, 0.75);
        let a = ObjectAttributes::from_parts(vec![1.0; n], vec![1.0; n]).unwrap();
        let p = BandwidthParams::new(1.0, n).unwrap();
        assert_eq!(aggregate_bandwidth(&a, &p, &c, 17).unwrap(), 17.0);
    }

    #[test]
    fn k_out_of_range_rejected() {
        assert!(BandwidthParams::new(1.5, 3).is_err());
        assert!(BandwidthParams::new(-0.1, 3).is_err());
        assert!(BandwidthParams::new(f64::NAN, 3).is_err());
        assert!(BandwidthParams::new(0.5, 0).is_err());
    }

    #[test]
    fn model_report_csv() {
        let c = cat(3, 1.0);
        let a = ObjectAttributes::from_parts(vec![1.0, 2.0, 3.0], vec![1.0, 1.0, 1.0]).unwrap();
        let p = BandwidthParams::new(1.0, 2)
            .unwrap()
            .with_mode(MassMode::Exact);
        let rep = ModelReport::build(&c, &a, &p, 10).unwrap();
        assert!((rep.top_c_mass - 9.0 / 11.0).abs() < 1e-15);
        assert!(rep.asymptotic_mass.is_none());
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "rank,p,miss_prob,bandwidth");
        assert_eq!(lines.len(), 5);
        assert!(lines[4].starts_with("# h_demand="));
        assert!(lines[4].contains("top_c_mass=8.181818181818e-1"));
    }

    #[test]
    fn paper_mode_report_rejects_alpha_one() {
        let c = cat(3, 1.0);
        let a = ObjectAttributes::from_parts(vec![1.0; 3], vec![1.0; 3]).unwrap();
        let p = BandwidthParams::new(1.0, 2)
            .unwrap()
            .with_mode(MassMode::PaperLiteral);
        assert!(ModelReport::build(&c, &a, &p, 10).is_err());
    }
}
