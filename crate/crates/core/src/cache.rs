//! Bounded proxy cache with session-buffered least-hit-count replacement.
//!
//! Requests are collected into a session buffer and then replayed against
//! the resident list in arrival order. A hit bumps the entry's hit count; a
//! miss on a full cache evicts the entry with the smallest hit count, oldest
//! insertion first among ties, and admits the requested object with a count
//! of one. LRU is provided as a baseline.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::workload::Workload;

/// Hit count given to an object when it is admitted on a miss.
pub const ADMISSION_HIT_COUNT: u64 = 1;

/// Result of one request against the cache.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessOutcome {
    pub rank: usize,
    pub hit: bool,
    /// Set only on a miss that found the cache full.
    pub evicted: Option<usize>,
}

impl AccessOutcome {
    fn hit(rank: usize) -> Self {
        Self {
            rank,
            hit: true,
            evicted: None,
        }
    }

    fn miss(rank: usize, evicted: Option<usize>) -> Self {
        Self {
            rank,
            hit: false,
            evicted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheEntry {
    pub hit_count: u64,
    pub insertion_seq: u64,
}

/// Resident list with per-entry hit counts.
#[derive(Debug, Clone)]
pub struct CacheState {
    capacity: usize,
    entries: HashMap<usize, CacheEntry>,
    // (hit_count, insertion_seq, rank); first element is the eviction victim
    victims: BTreeSet<(u64, u64, usize)>,
    next_seq: u64,
}

impl CacheState {
    /// An empty cache, or one preloaded with `warm` in list order with zero
    /// hit counts.
    pub fn new(capacity: usize, warm: Option<&[usize]>) -> Result<Self> {
        if capacity == 0 {
            return Err(invalid("cache capacity must be at least 1"));
        }
        let mut cache = Self {
            capacity,
            entries: HashMap::with_capacity(capacity),
            victims: BTreeSet::new(),
            next_seq: 0,
        };
        for &rank in warm.unwrap_or_default() {
            if rank == 0 {
                return Err(invalid("warm list ranks must be positive"));
            }
            if cache.entries.contains_key(&rank) {
                return Err(invalid(format!("warm list repeats rank {rank}")));
            }
            if cache.entries.len() == capacity {
                return Err(invalid(format!(
                    "warm list is longer than capacity {capacity}"
                )));
            }
            cache.admit(rank, 0);
        }
        Ok(cache)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, rank: usize) -> bool {
        self.entries.contains_key(&rank)
    }

    pub fn entry(&self, rank: usize) -> Option<CacheEntry> {
        self.entries.get(&rank).copied()
    }

    /// Resident ranks with their entries, sorted by rank.
    pub fn entries(&self) -> Vec<(usize, CacheEntry)> {
        let mut v: Vec<_> = self.entries.iter().map(|(r, e)| (*r, *e)).collect();
        v.sort_unstable_by_key(|(r, _)| *r);
        v
    }

    /// Applies one request.
    pub fn access(&mut self, rank: usize) -> AccessOutcome {
        if let Some(e) = self.entries.get_mut(&rank) {
            self.victims.remove(&(e.hit_count, e.insertion_seq, rank));
            e.hit_count += 1;
            self.victims.insert((e.hit_count, e.insertion_seq, rank));
            return AccessOutcome::hit(rank);
        }
        let evicted = if self.entries.len() == self.capacity {
            let (_, _, victim) = self.victims.pop_first().expect("full cache has entries");
            self.entries.remove(&victim);
            Some(victim)
        } else {
            None
        };
        self.admit(rank, ADMISSION_HIT_COUNT);
        AccessOutcome::miss(rank, evicted)
    }

    fn admit(&mut self, rank: usize, hit_count: u64) {
        let insertion_seq = self.next_seq;
        self.next_seq += 1;
        self.entries.insert(
            rank,
            CacheEntry {
                hit_count,
                insertion_seq,
            },
        );
        self.victims.insert((hit_count, insertion_seq, rank));
    }
}

/// Requests of one session waiting to be replayed.
#[derive(Debug, Clone)]
pub struct SessionBuffer {
    pending: Vec<usize>,
    capacity: usize,
}

impl SessionBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(invalid("session buffer capacity must be at least 1"));
        }
        Ok(Self {
            pending: Vec::with_capacity(capacity),
            capacity,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn pending(&self) -> &[usize] {
        &self.pending
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn push(&mut self, rank: usize) -> Result<()> {
        if rank == 0 {
            return Err(invalid("ranks are 1-based"));
        }
        if self.pending.len() == self.capacity {
            return Err(invalid(format!(
                "session buffer full ({} requests)",
                self.capacity
            )));
        }
        self.pending.push(rank);
        Ok(())
    }

    pub fn fill(&mut self, ranks: &[usize]) -> Result<()> {
        ranks.iter().try_for_each(|&r| self.push(r))
    }
}

/// Replays the buffered session against `cache` and flushes the buffer.
pub fn process_session(
    cache: &mut CacheState,
    buffer: &mut SessionBuffer,
) -> Result<Vec<AccessOutcome>> {
    let mut out = Vec::with_capacity(buffer.pending.len());
    process_session_with(cache, buffer, |o| out.push(o))?;
    Ok(out)
}

pub fn process_session_with<F>(
    cache: &mut CacheState,
    buffer: &mut SessionBuffer,
    mut sink: F,
) -> Result<()>
where
    F: FnMut(AccessOutcome),
{
    if buffer.is_empty() {
        return Err(invalid("cannot process an empty session"));
    }
    for rank in buffer.pending.drain(..) {
        sink(cache.access(rank));
    }
    Ok(())
}

/// Least-recently-used baseline.
#[derive(Debug, Clone)]
pub struct LruCache {
    capacity: usize,
    last_use: HashMap<usize, u64>,
    by_age: BTreeMap<u64, usize>,
    clock: u64,
}

impl LruCache {
    pub fn new(capacity: usize, warm: Option<&[usize]>) -> Result<Self> {
        // reuse the warm-list validation of the primary cache
        CacheState::new(capacity, warm)?;
        let mut cache = Self {
            capacity,
            last_use: HashMap::with_capacity(capacity),
            by_age: BTreeMap::new(),
            clock: 0,
        };
        for &rank in warm.unwrap_or_default() {
            cache.touch(rank);
        }
        Ok(cache)
    }

    pub fn len(&self) -> usize {
        self.last_use.len()
    }

    pub fn is_empty(&self) -> bool {
        self.last_use.is_empty()
    }

    pub fn contains(&self, rank: usize) -> bool {
        self.last_use.contains_key(&rank)
    }

    pub fn access(&mut self, rank: usize) -> AccessOutcome {
        if self.last_use.contains_key(&rank) {
            self.touch(rank);
            return AccessOutcome::hit(rank);
        }
        let evicted = if self.last_use.len() == self.capacity {
            let (_, victim) = self.by_age.pop_first().expect("full cache has entries");
            self.last_use.remove(&victim);
            Some(victim)
        } else {
            None
        };
        self.touch(rank);
        AccessOutcome::miss(rank, evicted)
    }

    fn touch(&mut self, rank: usize) {
        if let Some(old) = self.last_use.insert(rank, self.clock) {
            self.by_age.remove(&old);
        }
        self.by_age.insert(self.clock, rank);
        self.clock += 1;
    }
}

/// Replacement policies available to the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Least hit count, replayed one session at a time.
    SessionLfu,
    Lru,
    /// Least hit count with every request its own session.
    LfuClassic,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::SessionLfu, Policy::Lru, Policy::LfuClassic];

    pub fn name(self) -> &'static str {
        match self {
            Policy::SessionLfu => "session_lfu",
            Policy::Lru => "lru",
            Policy::LfuClassic => "lfu_classic",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPolicy(s.to_owned()))
    }
}

/// Runs `workload` through `policy` from a cold cache and collects every
/// outcome.
pub fn run_policy(
    policy: Policy,
    capacity: usize,
    workload: &Workload,
) -> Result<Vec<AccessOutcome>> {
    let mut out = Vec::with_capacity(workload.len());
    run_policy_with(policy, capacity, None, workload, |o| out.push(o))?;
    Ok(out)
}

/// Streams outcomes to `sink` instead of collecting them.
pub fn run_policy_with<F>(
    policy: Policy,
    capacity: usize,
    warm: Option<&[usize]>,
    workload: &Workload,
    mut sink: F,
) -> Result<()>
where
    F: FnMut(AccessOutcome),
{
    match policy {
        Policy::SessionLfu | Policy::LfuClassic => {
            let session = match policy {
                Policy::LfuClassic => 1,
                _ => workload.session_size(),
            };
            let mut cache = CacheState::new(capacity, warm)?;
            let mut buffer = SessionBuffer::new(session)?;
            for chunk in workload.requests().chunks(session) {
                buffer.fill(chunk)?;
                process_session_with(&mut cache, &mut buffer, &mut sink)?;
            }
        }
        Policy::Lru => {
            let mut cache = LruCache::new(capacity, warm)?;
            for &rank in workload.requests() {
                sink(cache.access(rank));
            }
        }
    }
    Ok(())
}
