//! Request streams, per-object attributes and the trace file format.
//!
//! A trace is plain text: an optional header `#n_objects=<N> session=<m>`
//! followed by one decimal rank per line.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::output::{fmt_real, write_atomic};
use crate::popularity::ZipfCatalog;

pub const DEFAULT_SESSION_SIZE: usize = 1000;

/// Object size range in kilobits.
pub const DEFAULT_SIZE_RANGE_KB: ValueRange = ValueRange {
    min: 1.0,
    max: 15.0,
};
/// Channel activity time range in milliseconds.
pub const DEFAULT_CHANNEL_RANGE_MS: ValueRange = ValueRange {
    min: 1.0,
    max: 10.0,
};

const REQUEST_STREAM: u64 = 0;
const ATTRIBUTE_STREAM: u64 = 1;

/// Deterministic generator for one logical stream of a seeded run. Requests
/// and attributes draw from different streams of the same seed.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A closed interval `[min, max]` with `0 < min <= max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueRange {
    pub min: f64,
    pub max: f64,
}

impl ValueRange {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        let r = Self { min, max };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.min <= 0.0 || self.min > self.max
        {
            return Err(invalid(format!(
                "range [{}, {}] must be finite with 0 < min <= max",
                self.min, self.max
            )));
        }
        Ok(())
    }

    pub fn contains(&self, x: f64) -> bool {
        self.min <= x && x <= self.max
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        (self.min + (self.max - self.min) * u).min(self.max)
    }
}

/// How an object's size and channel time combine into its bandwidth demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateConvention {
    /// `size * time`
    #[default]
    Product,
    /// `size / time`, kb per ms
    Ratio,
}

impl std::str::FromStr for RateConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(Self::Product),
            "ratio" => Ok(Self::Ratio),
            other => Err(invalid(format!("unknown rate convention `{other}`"))),
        }
    }
}

/// Per-rank file size (kb) and channel activity time (ms).
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectAttributes {
    sizes_kb: Vec<f64>,
    channel_ms: Vec<f64>,
}

impl ObjectAttributes {
    pub fn from_parts(sizes_kb: Vec<f64>, channel_ms: Vec<f64>) -> Result<Self> {
        if sizes_kb.is_empty() || sizes_kb.len() != channel_ms.len() {
            return Err(invalid(
                "size and time tables must be non-empty and equally long",
            ));
        }
        if sizes_kb
            .iter()
            .chain(&channel_ms)
            .any(|v| !(*v > 0.0 && v.is_finite()))
        {
            return Err(invalid("attribute values must be positive and finite"));
        }
        Ok(Self {
            sizes_kb,
            channel_ms,
        })
    }

    /// Draws every size and channel time uniformly from its range.
    pub fn generate(
        n_objects: usize,
        size_range: ValueRange,
        time_range: ValueRange,
        seed: u64,
    ) -> Result<Self> {
        if n_objects == 0 {
            return Err(invalid("need at least one object"));
        }
        size_range.validate()?;
        time_range.validate()?;
        let mut rng = seeded_rng(seed, ATTRIBUTE_STREAM);
        let mut sizes_kb = Vec::with_capacity(n_objects);
        let mut channel_ms = Vec::with_capacity(n_objects);
        for _ in 0..n_objects {
            sizes_kb.push(size_range.draw(&mut rng));
            channel_ms.push(time_range.draw(&mut rng));
        }
        Ok(Self {
            sizes_kb,
            channel_ms,
        })
    }

    pub fn len(&self) -> usize {
        self.sizes_kb.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes_kb.is_empty()
    }

    pub fn sizes_kb(&self) -> &[f64] {
        &self.sizes_kb
    }

    pub fn channel_ms(&self) -> &[f64] {
        &self.channel_ms
    }

    /// Raw bandwidth demand `b_i` of a rank (1-based) before any threshold
    /// factor.
    pub fn demand(&self, rank: usize, rate: RateConvention) -> Result<f64> {
        if rank == 0 || rank > self.len() {
            return Err(Error::RankOutOfRange {
                rank,
                n_objects: self.len(),
            });
        }
        let (s, t) = (self.sizes_kb[rank - 1], self.channel_ms[rank - 1]);
        Ok(match rate {
            RateConvention::Product => s * t,
            RateConvention::Ratio => s / t,
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rank", "size_kb", "channel_ms"])?;
        for (i, (s, t)) in self.sizes_kb.iter().zip(&self.channel_ms).enumerate() {
            w.write_record([(i + 1).to_string(), fmt_real(*s), fmt_real(*t)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), |f| self.write_csv(f))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            rank: usize,
            size_kb: f64,
            channel_ms: f64,
        }
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path)?;
        let mut sizes = Vec::new();
        let mut times = Vec::new();
        for (i, row) in reader.deserialize::<Row>().enumerate() {
            let row = row?;
            if row.rank != i + 1 {
                return Err(Error::TraceParse {
                    path: path.to_owned(),
                    line: i + 2,
                    message: format!("expected rank {}, found {}", i + 1, row.rank),
                });
            }
            sizes.push(row.size_kb);
            times.push(row.channel_ms);
        }
        Self::from_parts(sizes, times)
    }
}

/// An ordered request stream split into contiguous sessions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workload {
    requests: Vec<usize>,
    session_size: usize,
    session_boundaries: Vec<usize>,
    seed: u64,
    n_objects: usize,
}

impl Workload {
    /// Builds a workload whose sessions are consecutive blocks of
    /// `session_size` requests; the last block may be shorter.
    pub fn new(
        requests: Vec<usize>,
        n_objects: usize,
        session_size: usize,
        seed: u64,
    ) -> Result<Self> {
        if requests.is_empty() {
            return Err(invalid("a workload needs at least one request"));
        }
        if session_size == 0 {
            return Err(invalid("session size must be at least 1"));
        }
        if let Some(&bad) = requests.iter().find(|&&r| r == 0 || r > n_objects) {
            return Err(Error::RankOutOfRange {
                rank: bad,
                n_objects,
            });
        }
        let total = requests.len();
        let session_boundaries = (1..=total.div_ceil(session_size))
            .map(|k| (k * session_size).min(total))
            .collect();
        Ok(Self {
            requests,
            session_size,
            session_boundaries,
            seed,
            n_objects,
        })
    }

    /// Draws `total_requests` i.i.d. ranks from `catalog`.
    pub fn generate(
        catalog: &ZipfCatalog,
        total_requests: usize,
        session_size: usize,
        seed: u64,
    ) -> Result<Self> {
        if total_requests == 0 {
            return Err(invalid("total_requests must be at least 1"));
        }
        let mut rng = seeded_rng(seed, REQUEST_STREAM);
        let requests = (0..total_requests)
            .map(|_| catalog.sample_rank(&mut rng))
            .collect();
        Self::new(requests, catalog.n_objects(), session_size, seed)
    }

    pub fn requests(&self) -> &[usize] {
        &self.requests
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    pub fn session_size(&self) -> usize {
        self.session_size
    }

    /// Exclusive end index of each session.
    pub fn session_boundaries(&self) -> &[usize] {
        &self.session_boundaries
    }

    pub fn sessions(&self) -> impl Iterator<Item = &[usize]> {
        self.requests.chunks(self.session_size)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_objects(&self) -> usize {
        self.n_objects
    }

    pub fn histogram(&self) -> RankHistogram {
        let mut counts = vec![0u64; self.n_objects];
        for &r in &self.requests {
            counts[r - 1] += 1;
        }
        RankHistogram { counts }
    }

    pub fn write_trace<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "#n_objects={} session={}",
            self.n_objects, self.session_size
        )?;
        for r in &self.requests {
            writeln!(out, "{r}")?;
        }
        Ok(())
    }

    pub fn save_trace(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), |w| self.write_trace(w))
    }

    /// Loads a trace. Without a header the catalog size is taken as the
    /// largest rank seen and the session size as the default.
    pub fn load_trace(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::parse_trace(&text, path)
    }

    pub fn parse_trace(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::TraceParse {
            path: path.to_owned(),
            line,
            message,
        };

        let mut header: Option<(usize, usize)> = None;
        let mut requests = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                if line_no == 1 {
                    header = Some(parse_header(meta).map_err(|m| err(line_no, m))?);
                }
                continue;
            }
            let rank: usize = line
                .parse()
                .map_err(|_| err(line_no, format!("`{line}` is not a rank")))?;
            if rank == 0 {
                return Err(err(line_no, "rank must be positive".into()));
            }
            if let Some((n, _)) = header {
                if rank > n {
                    return Err(err(line_no, format!("rank {rank} exceeds n_objects={n}")));
                }
            }
            requests.push(rank);
        }
        if requests.is_empty() {
            return Err(err(1, "trace contains no requests".into()));
        }
        let (n_objects, session) = header.unwrap_or_else(|| {
            let max = requests.iter().copied().max().unwrap_or(1);
            (max, DEFAULT_SESSION_SIZE)
        });
        Self::new(requests, n_objects, session, 0)
    }
}

fn parse_header(meta: &str) -> std::result::Result<(usize, usize), String> {
    let mut n_objects = None;
    let mut session = None;
    for field in meta.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| format!("malformed header field `{field}`"))?;
        let value: usize = value
            .parse()
            .map_err(|_| format!("header value `{value}` is not an integer"))?;
        match key {
            "n_objects" => n_objects = Some(value),
            "session" => session = Some(value),
            other => return Err(format!("unknown header key `{other}`")),
        }
    }
    match (n_objects, session) {
        (Some(n), Some(m)) if n > 0 && m > 0 => Ok((n, m)),
        _ => Err("header needs positive n_objects and session".into()),
    }
}

/// Request count per rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankHistogram {
    counts: Vec<u64>,
}

impl RankHistogram {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    /// Counts indexed by `rank - 1`.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Sums counts over `n_bins` contiguous rank ranges of (nearly) equal width.
    pub fn binned(&self, n_bins: usize) -> Vec<u64> {
        equal_bins(&self.counts, n_bins)
    }
}

pub(crate) fn equal_bins<T>(values: &[T], n_bins: usize) -> Vec<T>
where
    T: Copy + std::iter::Sum<T>,
{
    let n = values.len();
    (0..n_bins)
        .map(|b| {
            values[b * n / n_bins..(b + 1) * n / n_bins]
                .iter()
                .copied()
                .sum()
        })
        .collect()
}
