//! Gillespie's direct method.
//!
//! Each step computes all propensities, draws an exponential waiting time
//! with rate equal to their sum and picks a reaction proportionally. The
//! networks of interest have at most a few dozen reactions, so a linear scan
//! is used instead of a dependency graph.

use std::time::{Duration, Instant};

use rand::distr::Open01;
use rand::Rng;

use crate::abstraction::{AbstractState, Abstraction};
use crate::crn::{CompiledNetwork, CrnModel, State};
use crate::segmental::{Segment, Summary};
use crate::trajectory::{Recorder, Recording, Seam, Terminal, Trajectory};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    /// Every applied reaction, whether or not it was recorded.
    pub reaction_count: u64,
    pub wall_time: Duration,
}

/// One SSA trajectory.
#[derive(Debug, Clone)]
pub struct Run {
    pub seams: Vec<Seam>,
    pub terminal: Terminal,
    pub stats: RunStats,
}

impl Run {
    pub fn final_state(&self) -> &State {
        &self.seams.last().expect("a run holds at least its initial seam").state
    }
}

impl Trajectory for Run {
    fn seams(&self) -> &[Seam] {
        &self.seams
    }

    fn terminal(&self) -> Terminal {
        self.terminal
    }
}

/// Result of one SSA step: the fired reaction index and the waiting time,
/// or `None` with an infinite waiting time when nothing is enabled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub reaction: Option<usize>,
    pub dt: f64,
}

/// Reusable direct-method simulator for one model.
#[derive(Debug, Clone)]
pub struct Ssa {
    net: CompiledNetwork,
    species: usize,
    props: Vec<f64>,
}

impl Ssa {
    pub fn new(model: &CrnModel) -> Self {
        let net = CompiledNetwork::new(model);
        let props = vec![0.0; net.len()];
        Ssa {
            net,
            species: model.species_count(),
            props,
        }
    }

    /// Samples the next reaction and waiting time at `counts` without applying it.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&mut self, counts: &[u64], rng: &mut R) -> Step {
        let total = self.net.propensities(counts, &mut self.props);
        if total <= 0.0 {
            return Step {
                reaction: None,
                dt: f64::INFINITY,
            };
        }
        let u: f64 = rng.sample(Open01);
        let dt = -u.ln() / total;
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for (j, &a) in self.props.iter().enumerate() {
            if a > 0.0 {
                acc += a;
                chosen = Some(j);
                if target < acc {
                    break;
                }
            }
        }
        Step { reaction: chosen, dt }
    }

    /// Applies reaction `j`; true if a count now exceeds the population bound.
    #[inline]
    pub(crate) fn fire(&self, j: usize, counts: &mut [u64]) -> bool {
        self.net.fire(j, counts)
    }

    pub(crate) fn exceeds_bound(&self, counts: &[u64]) -> bool {
        self.net.exceeds_bound(counts)
    }

    /// Simulates from `start` until `t_end`, deadlock, or the population bound.
    pub fn simulate<R: Rng + ?Sized>(&mut self, start: &State, t_end: f64, rng: &mut R, recording: Recording) -> Run {
        assert_eq!(start.len(), self.species, "state has wrong dimension");
        let clock = Instant::now();
        let mut counts = start.0.clone();
        let mut recorder = Recorder::new(recording, t_end, start);
        let mut t = 0.0;
        let mut reaction_count = 0u64;
        let terminal = loop {
            let step = self.step(&counts, rng);
            let Some(j) = step.reaction else {
                break Terminal::Deadlock;
            };
            let t_next = t + step.dt;
            if t_next >= t_end {
                break Terminal::Horizon;
            }
            recorder.advance(&counts, t_next);
            let exceeded = self.fire(j, &mut counts);
            reaction_count += 1;
            t = t_next;
            recorder.event(&counts, t);
            if exceeded {
                break Terminal::Bound;
            }
        };
        let seams = recorder.finish(&counts, t);
        Run {
            seams,
            terminal,
            stats: RunStats {
                reaction_count,
                wall_time: clock.elapsed(),
            },
        }
    }

    /// Runs from `start` until the abstract state of `start` is left (or
    /// deadlock) and returns the traversed segment.
    pub fn simulate_until_leaving<R: Rng + ?Sized>(
        &mut self,
        start: &State,
        abstraction: &Abstraction,
        rng: &mut R,
        retain_reactions: bool,
    ) -> Segment {
        let home = abstraction.abstract_state(start);
        self.simulate_until_leaving_from(start, &home, abstraction, rng, retain_reactions, f64::INFINITY)
    }

    /// As [`Ssa::simulate_until_leaving`], but also stops once `max_time` has
    /// elapsed. Segments ignore the population bound; runs check it at seams. A segment that outlasts the horizon carries the run past it
    /// anyway, so the cut does not change any state observed before `t_end`.
    pub(crate) fn simulate_until_leaving_from<R: Rng + ?Sized>(
        &mut self,
        start: &State,
        home: &AbstractState,
        abstraction: &Abstraction,
        rng: &mut R,
        retain_reactions: bool,
        max_time: f64,
    ) -> Segment {
        let bounds: Vec<(u64, u64)> = home.levels().iter().map(|&l| abstraction.interval_of(l)).collect();
        let mut counts = start.0.clone();
        let mut elapsed = 0.0;
        let mut reactions = retain_reactions.then(Vec::new);
        loop {
            let step = self.step(&counts, rng);
            let Some(j) = step.reaction else {
                elapsed = f64::INFINITY;
                break;
            };
            self.fire(j, &mut counts);
            elapsed += step.dt;
            if let Some(list) = reactions.as_mut() {
                list.push(j as u32);
            }
            let inside = counts.iter().zip(&bounds).all(|(&x, &(lo, hi))| lo <= x && x <= hi);
            if !inside || elapsed >= max_time {
                break;
            }
        }
        let end = State(counts);
        Segment {
            start: start.clone(),
            reactions,
            summary: Summary::new(end.delta_from(start), elapsed),
        }
    }
}

/// One direct-method step at `state`.
pub fn ssa_step<R: Rng + ?Sized>(model: &CrnModel, state: &State, rng: &mut R) -> Step {
    Ssa::new(model).step(state.counts(), rng)
}

pub fn ssa_simulate<R: Rng + ?Sized>(
    model: &CrnModel,
    start: &State,
    t_end: f64,
    rng: &mut R,
    recording: Recording,
) -> Run {
    Ssa::new(model).simulate(start, t_end, rng, recording)
}

pub fn simulate_until_leaving<R: Rng + ?Sized>(
    model: &CrnModel,
    start: &State,
    abstraction: &Abstraction,
    rng: &mut R,
) -> Segment {
    Ssa::new(model).simulate_until_leaving(start, abstraction, rng, false)
}
