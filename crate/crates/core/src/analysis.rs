//! Transient statistics over run ensembles.
//!
//! Accuracy is measured one species at a time: the empirical distribution of
//! its count at a fixed time across many runs is compared by earth-mover
//! distance, and the same distance between two independent SSA ensembles
//! (the control pair) serves as the sampling-noise yardstick.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::crn::{CrnModel, State};
use crate::error::{Error, Result};
use crate::rng::run_rng;
use crate::ssa::Ssa;
use crate::trajectory::{Recording, Trajectory};

const MASS_TOLERANCE: f64 = 1e-9;

/// Normalized distribution over nonnegative integers (counts or levels).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    support: Vec<u64>,
    mass: Vec<f64>,
    sample_count: u64,
}

impl Histogram {
    /// Empirical distribution of `samples`.
    pub fn from_samples<I: IntoIterator<Item = u64>>(samples: I) -> Result<Self> {
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        for x in samples {
            *counts.entry(x).or_default() += 1;
        }
        let n: u64 = counts.values().sum();
        if n == 0 {
            return Err(Error::Domain("histogram of an empty sample".into()));
        }
        Ok(Histogram {
            support: counts.keys().copied().collect(),
            mass: counts.values().map(|&c| c as f64 / n as f64).collect(),
            sample_count: n,
        })
    }

    /// Builds a histogram from `(value, mass)` pairs; masses must sum to 1.
    /// Repeated values are merged and zero-mass entries dropped.
    pub fn from_masses<I: IntoIterator<Item = (u64, f64)>>(pairs: I, sample_count: u64) -> Result<Self> {
        let mut acc: BTreeMap<u64, f64> = BTreeMap::new();
        for (x, m) in pairs {
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::Domain(format!("invalid mass {m} at {x}")));
            }
            *acc.entry(x).or_default() += m;
        }
        acc.retain(|_, m| *m > 0.0);
        let h = Histogram {
            support: acc.keys().copied().collect(),
            mass: acc.values().copied().collect(),
            sample_count,
        };
        h.check_normalized()?;
        Ok(h)
    }

    pub fn support(&self) -> &[u64] {
        &self.support
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn sample_count(&self) -> u64 {
        self.sample_count
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.support.iter().copied().zip(self.mass.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn mass_at(&self, x: u64) -> f64 {
        self.support.binary_search(&x).map_or(0.0, |i| self.mass[i])
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(x, m)| x as f64 * m).sum()
    }

    fn check_normalized(&self) -> Result<()> {
        let total = self.total_mass();
        if (total - 1.0).abs() > MASS_TOLERANCE || self.mass.iter().any(|&m| m < 0.0) {
            return Err(Error::Domain(format!(
                "histogram is not normalized (total mass {total})"
            )));
        }
        Ok(())
    }
}

/// State in force at time `t` (last seam with time <= `t`).
pub fn state_at<T: Trajectory + ?Sized>(run: &T, t: f64) -> Result<&State> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!("query time must be >= 0, got {t}")));
    }
    let seams = run.seams();
    if seams.is_empty() {
        return Err(Error::Domain("empty run".into()));
    }
    let idx = seams.partition_point(|s| s.time <= t);
    Ok(&seams[idx.saturating_sub(1)].state)
}

fn species_value<T: Trajectory + ?Sized>(run: &T, t: f64, species: usize) -> Result<u64> {
    let s = state_at(run, t)?;
    s.counts()
        .get(species)
        .copied()
        .ok_or_else(|| Error::Domain(format!("species index {species} out of range")))
}

/// Empirical distribution of one species at time `t` across `runs`.
pub fn transient_histogram<T: Trajectory>(runs: &[T], t: f64, species: usize) -> Result<Histogram> {
    if runs.is_empty() {
        return Err(Error::Domain("need at least one run".into()));
    }
    let values = runs
        .iter()
        .map(|r| species_value(r, t, species))
        .collect::<Result<Vec<_>>>()?;
    Histogram::from_samples(values)
}

/// 1-Wasserstein distance on the integer line, `sum_x |F1(x) - F2(x)|`.
pub fn emd(h1: &Histogram, h2: &Histogram) -> Result<f64> {
    h1.check_normalized()?;
    h2.check_normalized()?;
    let (mut i, mut j) = (0, 0);
    let (mut cdf1, mut cdf2) = (0.0f64, 0.0f64);
    let mut total = 0.0;
    let mut prev: Option<u64> = None;
    while i < h1.support.len() || j < h2.support.len() {
        let x = match (h1.support.get(i), h2.support.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        if let Some(p) = prev {
            total += (cdf1 - cdf2).abs() * (x - p) as f64;
        }
        if h1.support.get(i) == Some(&x) {
            cdf1 += h1.mass[i];
            i += 1;
        }
        if h2.support.get(j) == Some(&x) {
            cdf2 += h2.mass[j];
            j += 1;
        }
        prev = Some(x);
    }
    Ok(total)
}

/// Final-state values of `species` at time `t` for `n_runs` SSA runs seeded from `seed`.
pub fn ssa_transient_samples(model: &CrnModel, t: f64, species: usize, n_runs: usize, seed: u64) -> Result<Vec<u64>> {
    if species >= model.species_count() {
        return Err(Error::Domain(format!("species index {species} out of range")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("query time must be positive, got {t}")));
    }
    let mut ssa = Ssa::new(model);
    Ok((0..n_runs as u64)
        .map(|i| {
            let run = ssa.simulate(&model.initial_state, t, &mut run_rng(seed, i), Recording::Grid(1));
            run.final_state().counts()[species]
        })
        .collect())
}

/// EMD between two independent SSA ensembles of `n_runs` each.
pub fn control_pair_emd(model: &CrnModel, t: f64, species: usize, n_runs: usize, seeds: (u64, u64)) -> Result<f64> {
    if n_runs < 2 {
        return Err(Error::Domain("control pair needs at least 2 runs".into()));
    }
    let a = Histogram::from_samples(ssa_transient_samples(model, t, species, n_runs, seeds.0)?)?;
    let b = Histogram::from_samples(ssa_transient_samples(model, t, species, n_runs, seeds.1)?)?;
    emd(&a, &b)
}

/// Per-time ensemble mean and unbiased variance of one species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesStat {
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

pub fn stats_over_time<T: Trajectory>(runs: &[T], grid: &[f64], species: usize) -> Result<TimeSeriesStat> {
    if grid.is_empty() {
        return Err(Error::Domain("empty time grid".into()));
    }
    if runs.is_empty() {
        return Err(Error::Domain("need at least one run".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("time grid must be increasing".into()));
    }
    let n = runs.len() as f64;
    let mut mean = Vec::with_capacity(grid.len());
    let mut variance = Vec::with_capacity(grid.len());
    for &t in grid {
        let values = runs
            .iter()
            .map(|r| species_value(r, t, species).map(|v| v as f64))
            .collect::<Result<Vec<_>>>()?;
        let m = values.iter().sum::<f64>() / n;
        let v = if runs.len() > 1 {
            values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        mean.push(m);
        variance.push(v);
    }
    Ok(TimeSeriesStat {
        grid: grid.to_vec(),
        mean,
        variance,
    })
}
