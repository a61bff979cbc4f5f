#![allow(dead_code)]

use proxycache::cache::AccessOutcome;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Straight transcription of the session replacement loop: a flat list of
/// (name, hit count, arrival) rows rescanned on every request.
pub struct ReferenceCache {
    capacity: usize,
    rows: Vec<(usize, u64, u64)>,
    arrivals: u64,
}

impl ReferenceCache {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            rows: Vec::new(),
            arrivals: 0,
        }
    }

    pub fn run_session(&mut self, session: &[usize]) -> Vec<(usize, bool, Option<usize>)> {
        let mut out = Vec::new();
        for &name in session {
            let mut found = None;
            for i in 0..self.rows.len() {
                if self.rows[i].0 == name {
                    found = Some(i);
                }
            }
            if let Some(i) = found {
                self.rows[i].1 += 1;
                out.push((name, true, None));
                continue;
            }
            let mut evicted = None;
            if self.rows.len() == self.capacity {
                let mut least = 0;
                for i in 1..self.rows.len() {
                    let (_, c, a) = self.rows[i];
                    let (_, lc, la) = self.rows[least];
                    if c < lc || (c == lc && a < la) {
                        least = i;
                    }
                }
                evicted = Some(self.rows.remove(least).0);
            }
            self.rows.push((name, 1, self.arrivals));
            self.arrivals += 1;
            out.push((name, false, evicted));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }
}

pub fn reference_run(
    capacity: usize,
    requests: &[usize],
    session: usize,
) -> Vec<(usize, bool, Option<usize>)> {
    let mut cache = ReferenceCache::new(capacity);
    requests
        .chunks(session)
        .flat_map(|s| cache.run_session(s))
        .collect()
}

pub fn flatten(outcomes: &[AccessOutcome]) -> Vec<(usize, bool, Option<usize>)> {
    outcomes
        .iter()
        .map(|o| (o.rank, o.hit, o.evicted))
        .collect()
}

/// Pearson chi-square statistic after merging adjacent ranks until every
/// bin expects at least 5 observations. Returns (statistic, degrees of freedom).
pub fn chi_square(observed: &[u64], probabilities: &[f64], total: u64) -> (f64, usize) {
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (o, p) in observed.iter().zip(probabilities) {
        obs += *o as f64;
        exp += p * total as f64;
        if exp >= 5.0 {
            bins.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if exp > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += obs;
                last.1 += exp;
            }
            None => bins.push((obs, exp)),
        }
    }
    let stat = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    (stat, bins.len().saturating_sub(1))
}

/// Upper critical value of the chi-square distribution at `significance`.
pub fn chi_square_critical(dof: usize, significance: f64) -> f64 {
    ChiSquared::new(dof as f64)
        .expect("positive dof")
        .inverse_cdf(1.0 - significance)
}
