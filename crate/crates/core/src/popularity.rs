//! Zipf popularity model over a finite catalog of ranked objects.
//!
//! Rank 1 is the most popular object. The probability of rank `i` is
//! `i^-alpha / H(N, alpha)` where `H` is the generalized harmonic number.
//! This module also carries the partial-sum numerics for the zeta series
//! that bound how fast those harmonic sums converge.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::output::{fmt_real, write_atomic};

/// Sum of `i^-alpha` for `i` in `1..=n`, accumulated in ascending rank order.
pub fn generalized_harmonic(n: usize, alpha: f64) -> f64 {
    (1..=n).map(|i| rank_weight(i, alpha)).sum()
}

#[inline]
fn rank_weight(rank: usize, alpha: f64) -> f64 {
    (rank as f64).powf(-alpha)
}

/// An immutable universe of `n_objects` ranks with Zipf(alpha) request
/// probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ZipfCatalog {
    n_objects: usize,
    alpha: f64,
    harmonic: f64,
    normalizer: f64,
    probabilities: Vec<f64>,
    // cumulative[i] = P(rank <= i + 1); last entry pinned to 1.0
    cumulative: Vec<f64>,
}

impl ZipfCatalog {
    pub fn new(n_objects: usize, alpha: f64) -> Result<Self> {
        if n_objects == 0 {
            return Err(invalid("catalog needs at least one object"));
        }
        if !alpha.is_finite() {
            return Err(invalid(format!("alpha must be finite, got {alpha}")));
        }
        let harmonic = generalized_harmonic(n_objects, alpha);
        let normalizer = 1.0 / harmonic;
        let probabilities: Vec<f64> = (1..=n_objects)
            .map(|i| normalizer * rank_weight(i, alpha))
            .collect();

        let mut cumulative = Vec::with_capacity(n_objects);
        let mut acc = 0.0;
        for p in &probabilities {
            acc += p;
            cumulative.push(acc);
        }
        *cumulative.last_mut().expect("n_objects >= 1") = 1.0;

        Ok(Self {
            n_objects,
            alpha,
            harmonic,
            normalizer,
            probabilities,
            cumulative,
        })
    }

    pub fn n_objects(&self) -> usize {
        self.n_objects
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `H(N, alpha)`.
    pub fn harmonic_sum(&self) -> f64 {
        self.harmonic
    }

    /// `1 / H(N, alpha)`.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// Probabilities indexed by `rank - 1`.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Request probability of `rank` (1-based).
    pub fn probability(&self, rank: usize) -> Result<f64> {
        self.check_rank(rank)?;
        Ok(self.probabilities[rank - 1])
    }

    pub(crate) fn check_rank(&self, rank: usize) -> Result<()> {
        if rank == 0 || rank > self.n_objects {
            return Err(Error::RankOutOfRange {
                rank,
                n_objects: self.n_objects,
            });
        }
        Ok(())
    }

    /// Draws one rank by inverting the cumulative distribution.
    pub fn sample_rank<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.n_objects - 1) + 1
    }

    /// Writes `rank,probability` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rank", "probability"])?;
        for (i, p) in self.probabilities.iter().enumerate() {
            w.write_record([(i + 1).to_string(), fmt_real(*p)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), |f| self.write_csv(f))
    }
}

/// A complex exponent `s = sigma + i*beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexExponent {
    pub sigma: f64,
    pub beta: f64,
}

impl ComplexExponent {
    pub fn new(sigma: f64, beta: f64) -> Self {
        Self { sigma, beta }
    }

    pub fn real(sigma: f64) -> Self {
        Self { sigma, beta: 0.0 }
    }

    pub fn as_complex(self) -> Complex64 {
        Complex64::new(self.sigma, self.beta)
    }

    pub fn norm(self) -> f64 {
        self.as_complex().norm()
    }
}

/// `|n^-s|`. The oscillating factor `e^{-i beta ln n}` has unit modulus, so
/// only the real part of the exponent contributes.
pub fn power_modulus(n: usize, s: ComplexExponent) -> f64 {
    (n as f64).powf(-s.sigma)
}

/// One term of the series `zeta(s) - 1/(s-1) = sum_n (n^-s - int_n^{n+1} x^-s dx)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaTerm {
    pub n: usize,
    /// `n^-s - int_n^{n+1} x^-s dx`
    pub value: Complex64,
    /// `|s| * n^(-1-sigma)`
    pub bound: f64,
}

impl ZetaTerm {
    pub fn within_bound(&self) -> bool {
        self.value.norm() <= self.bound
    }
}

/// Terms `n = 1..=n_terms` of the zeta correction series together with the
/// per-term bound `|s| n^(-1-sigma)` obtained from
/// `|n^-s - x^-s| <= |s| * int_n^x y^(-1-sigma) dy`.
pub fn zeta_partial_terms(s: ComplexExponent, n_terms: usize) -> Result<Vec<ZetaTerm>> {
    if s.sigma <= 0.0 || !s.beta.is_finite() || !s.sigma.is_finite() {
        return Err(invalid(format!(
            "zeta terms need a finite exponent with positive real part, got {} + {}i",
            s.sigma, s.beta
        )));
    }
    if n_terms == 0 {
        return Err(invalid("n_terms must be at least 1"));
    }
    let z = s.as_complex();
    let modulus = s.norm();
    Ok((1..=n_terms)
        .map(|n| {
            let ln_n = (n as f64).ln();
            let power = (-z * ln_n).exp();
            let value = power - unit_interval_integral(z, n);
            ZetaTerm {
                n,
                value,
                bound: modulus * (n as f64).powf(-1.0 - s.sigma),
            }
        })
        .collect())
}

/// Sum of the first `n_terms` correction terms.
pub fn zeta_partial_sum(s: ComplexExponent, n_terms: usize) -> Result<Complex64> {
    Ok(zeta_partial_terms(s, n_terms)?
        .iter()
        .map(|t| t.value)
        .sum())
}

/// Terms summed explicitly by [`zeta_real`] before the tail estimate.
const ZETA_TERMS: usize = 1000;

/// Riemann zeta at a real `s >= 0`, `s != 1`, from
/// `zeta(s) = 1/(s-1) + sum_n a_n` with the first [`ZETA_TERMS`] correction
/// terms summed and the remainder estimated by Euler-Maclaurin.
pub fn zeta_real(s: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(-0.5);
    }
    if s == 1.0 {
        return Err(Error::SingularAlpha);
    }
    let head = zeta_partial_sum(ComplexExponent::real(s), ZETA_TERMS)?.re;
    // sum_{n>=m} n^-s - int_m^inf x^-s dx = m^-s / 2 + s m^(-s-1) / 12 - ...
    let m = (ZETA_TERMS + 1) as f64;
    let tail = 0.5 * m.powf(-s) + s * m.powf(-s - 1.0) / 12.0;
    Ok(1.0 / (s - 1.0) + head + tail)
}

// int_n^{n+1} x^-s dx, written as n^{1-s} * expm1((1-s) ln(1 + 1/n)) / (1-s)
// so the difference of two nearly equal powers is never formed explicitly.
fn unit_interval_integral(s: Complex64, n: usize) -> Complex64 {
    let log_step = (1.0 / n as f64).ln_1p();
    let one_minus_s = Complex64::new(1.0, 0.0) - s;
    if one_minus_s.re == 0.0 && one_minus_s.im == 0.0 {
        return Complex64::new(log_step, 0.0);
    }
    let lead = (one_minus_s * (n as f64).ln()).exp();
    lead * complex_expm1(one_minus_s * log_step) / one_minus_s
}

fn complex_expm1(z: Complex64) -> Complex64 {
    let half_sin = (z.im / 2.0).sin();
    let re = z.re.exp_m1() * z.im.cos() - 2.0 * half_sin * half_sin;
    let im = z.re.exp() * z.im.sin();
    Complex64::new(re, im)
}
