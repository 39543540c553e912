//! Exponential population-level abstraction.
//!
//! Every species count is mapped to a level. Level 0 is the singleton `[0, 0]`;
//! level `j >= 1` is `[b_{j-1}, b_j - 1]` where `b_0 < b_1 < ...` are the
//! distinct values of `round(c^n)`, `n = 0, 1, ...`, rounded half up. For
//! `c = 2` this gives `[0,0], [1,1], [2,3], [4,7], [8,15], ...`. For `c < 2`
//! several powers round to the same integer; duplicates are dropped so that
//! every interval is nonempty.

use std::fmt;
use std::sync::Arc;

use parking_lot::RwLock;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::crn::State;
use crate::error::{Error, Result};

/// Boundaries stop once `c^n` no longer fits in a `u64`; the last interval
/// then extends to `u64::MAX`.
const BOUNDARY_LIMIT: f64 = 18_446_744_073_709_551_616.0;

/// Per-species level vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AbstractState(pub Vec<u32>);

impl AbstractState {
    pub fn levels(&self) -> &[u32] {
        &self.0
    }

    /// True if both states differ by at most one level in every dimension.
    pub fn is_neighbor_or_equal(&self, other: &AbstractState) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(&a, &b)| a.abs_diff(b) <= 1)
    }
}

impl fmt::Display for AbstractState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "]")
    }
}

#[inline]
fn round_half_up(x: f64) -> u64 {
    (x + 0.5).floor() as u64
}

fn check_c(c: f64) -> Result<()> {
    if c.is_finite() && c > 1.0 && c <= 2.0 {
        Ok(())
    } else {
        Err(Error::PartitionParameter(c))
    }
}

#[derive(Debug)]
struct BoundaryCache {
    values: Vec<u64>,
    /// Smallest exponent not yet inspected.
    next_exponent: i32,
    complete: bool,
}

impl BoundaryCache {
    fn new() -> Self {
        BoundaryCache {
            values: vec![1],
            next_exponent: 1,
            complete: false,
        }
    }

    /// Appends the next distinct boundary; returns false once saturated.
    fn push_next(&mut self, c: f64, ln_c: f64) -> bool {
        if self.complete {
            return false;
        }
        let last = *self.values.last().expect("cache is never empty");
        // smallest n with round(c^n) > last, i.e. c^n >= last + 0.5
        let estimate = ((last as f64 + 0.5).ln() / ln_c).ceil() as i32 - 1;
        let mut n = self.next_exponent.max(estimate);
        let mut power = c.powi(n);
        while power + 0.5 < BOUNDARY_LIMIT && round_half_up(power) <= last {
            n += 1;
            power = c.powi(n);
        }
        self.next_exponent = n + 1;
        if power + 0.5 >= BOUNDARY_LIMIT {
            self.complete = true;
            return false;
        }
        self.values.push(round_half_up(power));
        true
    }
}

/// The partition for one value of `c`, shared by all species.
///
/// Cloning is cheap; clones share the lazily grown boundary cache. Readers
/// only ever observe a prefix of the final list.
#[derive(Debug, Clone)]
pub struct Abstraction {
    c: f64,
    ln_c: f64,
    cache: Arc<RwLock<BoundaryCache>>,
}

impl PartialEq for Abstraction {
    fn eq(&self, other: &Self) -> bool {
        self.c == other.c
    }
}

impl Abstraction {
    pub fn new(c: f64) -> Result<Self> {
        check_c(c)?;
        Ok(Abstraction {
            c,
            ln_c: c.ln(),
            cache: Arc::new(RwLock::new(BoundaryCache::new())),
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Makes sure the cache covers `population`.
    fn ensure_covers(&self, population: u64) {
        {
            let cache = self.cache.read();
            if cache.complete || *cache.values.last().unwrap() > population {
                return;
            }
        }
        let mut cache = self.cache.write();
        while !cache.complete && *cache.values.last().unwrap() <= population {
            cache.push_next(self.c, self.ln_c);
        }
    }

    /// Makes sure boundaries `b_0 ..= b_index` exist (unless saturated).
    fn ensure_index(&self, index: usize) {
        {
            let cache = self.cache.read();
            if cache.complete || cache.values.len() > index {
                return;
            }
        }
        let mut cache = self.cache.write();
        while cache.values.len() <= index && cache.push_next(self.c, self.ln_c) {}
    }

    /// The first `count` boundaries (fewer if the list saturates first).
    pub fn boundary_prefix(&self, count: usize) -> Vec<u64> {
        self.ensure_index(count.saturating_sub(1));
        let cache = self.cache.read();
        cache.values.iter().take(count).copied().collect()
    }

    #[inline]
    fn level_in(values: &[u64], population: u64) -> u32 {
        if population == 0 {
            0
        } else {
            // number of boundaries <= population
            values.partition_point(|&b| b <= population) as u32
        }
    }

    pub fn level_of(&self, population: u64) -> u32 {
        self.ensure_covers(population);
        Self::level_in(&self.cache.read().values, population)
    }

    pub fn abstract_state(&self, state: &State) -> AbstractState {
        let mut levels = Vec::with_capacity(state.len());
        self.levels_into(state.counts(), &mut levels);
        AbstractState(levels)
    }

    /// Writes the level vector of `counts` into `out` (cleared first).
    pub fn levels_into(&self, counts: &[u64], out: &mut Vec<u32>) {
        out.clear();
        if let Some(&max) = counts.iter().max() {
            self.ensure_covers(max);
        }
        let cache = self.cache.read();
        out.extend(counts.iter().map(|&x| Self::level_in(&cache.values, x)));
    }

    /// Inclusive integer bounds of `level`.
    pub fn interval_of(&self, level: u32) -> (u64, u64) {
        if level == 0 {
            return (0, 0);
        }
        let j = level as usize;
        self.ensure_index(j);
        let cache = self.cache.read();
        let lo = cache
            .values
            .get(j - 1)
            .copied()
            .unwrap_or(*cache.values.last().unwrap());
        let hi = cache.values.get(j).map_or(u64::MAX, |b| b - 1);
        (lo, hi)
    }

    /// Floored interval midpoint in every dimension.
    pub fn representative(&self, a: &AbstractState) -> State {
        State(
            a.0.iter()
                .map(|&l| {
                    let (lo, hi) = self.interval_of(l);
                    lo + (hi - lo) / 2
                })
                .collect(),
        )
    }

    /// Uniform draw from the hyperrectangle of `a`.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, a: &AbstractState, rng: &mut R) -> State {
        State(
            a.0.iter()
                .map(|&l| {
                    let (lo, hi) = self.interval_of(l);
                    rng.random_range(lo..=hi)
                })
                .collect(),
        )
    }
}

/// The first `n_max` distinct values of `round(c^n)`.
pub fn boundaries(c: f64, n_max: usize) -> Result<Vec<u64>> {
    if n_max == 0 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    Ok(Abstraction::new(c)?.boundary_prefix(n_max))
}
