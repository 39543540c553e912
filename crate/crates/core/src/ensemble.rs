//! Ensembles of independent runs, optionally spread over worker threads.
//!
//! Run `i` always draws from `run_rng(seed, i)` and results come back in
//! index order. SSA ensembles are therefore identical for any thread count;
//! segmental ensembles are reproducible with one thread, since workers share
//! the segment memory.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::crn::CrnModel;
use crate::error::{Error, Result};
use crate::rng::run_rng;
use crate::segmental::{DenselyConcreteRun, SegmentMemory, SegmentalSimulator};
use crate::ssa::{Run, Ssa};
use crate::trajectory::Recording;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub runs: usize,
    pub seed: u64,
    pub threads: usize,
    pub t_end: f64,
    pub recording: Recording,
}

impl EnsembleConfig {
    pub fn new(runs: usize, seed: u64, t_end: f64, recording: Recording) -> Self {
        EnsembleConfig {
            runs,
            seed,
            threads: 1,
            t_end,
            recording,
        }
    }

    pub fn threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Domain("an ensemble needs at least one run".into()));
        }
        if self.threads == 0 {
            return Err(Error::Domain("thread count must be at least 1".into()));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Domain(format!("t_end must be positive, got {}", self.t_end)));
        }
        Ok(())
    }
}

/// Runs `work(worker_state, index)` for every index, collecting in order.
fn run_indexed<S, T, Init, Work>(runs: usize, threads: usize, init: Init, work: Work) -> Vec<T>
where
    T: Send,
    Init: Fn() -> S + Sync,
    Work: Fn(&mut S, usize) -> T + Sync,
{
    if threads == 1 {
        let mut state = init();
        return (0..runs).map(|i| work(&mut state, i)).collect();
    }
    let next = AtomicUsize::new(0);
    let mut parts: Vec<(usize, T)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads.min(runs))
            .map(|_| {
                scope.spawn(|| {
                    let mut state = init();
                    let mut out = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= runs {
                            break out;
                        }
                        out.push((i, work(&mut state, i)));
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("ensemble worker panicked"))
            .collect()
    });
    parts.sort_unstable_by_key(|(i, _)| *i);
    parts.into_iter().map(|(_, run)| run).collect()
}

pub fn run_ssa_ensemble(model: &CrnModel, config: &EnsembleConfig) -> Result<Vec<Run>> {
    config.validate()?;
    model.validate()?;
    Ok(run_indexed(
        config.runs,
        config.threads,
        || Ssa::new(model),
        |ssa, i| {
            let mut rng = run_rng(config.seed, i as u64);
            ssa.simulate(&model.initial_state, config.t_end, &mut rng, config.recording)
        },
    ))
}

pub fn run_segmental_ensemble(
    model: &CrnModel,
    memory: &SegmentMemory,
    config: &EnsembleConfig,
) -> Result<Vec<DenselyConcreteRun>> {
    config.validate()?;
    model.validate()?;
    SegmentalSimulator::new(model, memory)?;
    Ok(run_indexed(
        config.runs,
        config.threads,
        || SegmentalSimulator::new(model, memory).expect("checked above"),
        |sim, i| {
            let mut rng = run_rng(config.seed, i as u64);
            sim.simulate(&model.initial_state, config.t_end, &mut rng, config.recording)
        },
    ))
}
