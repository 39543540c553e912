//! Recorded trajectories shared by all engines.

use serde::{Deserialize, Serialize};

use crate::crn::State;
use crate::error::{Error, Result};

/// A state together with the time it was entered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seam {
    pub state: State,
    pub time: f64,
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Terminal {
    /// The time horizon was reached.
    Horizon,
    /// No reaction can fire any more.
    Deadlock,
    /// A count exceeded the model's population bound.
    Bound,
}

impl Terminal {
    pub fn as_str(self) -> &'static str {
        match self {
            Terminal::Horizon => "horizon",
            Terminal::Deadlock => "deadlock",
            Terminal::Bound => "bound",
        }
    }
}

/// Which seams a simulation keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Recording {
    /// Every state change.
    Full,
    /// Every `n`-th state change, plus the initial and final state.
    Stride(usize),
    /// Only the initial and final state.
    SeamsOnly,
    // Stride and SeamsOnly also keep the state in force at t_end when the
    // final state is entered after t_end (segmental overshoot).
    /// The exact state at `n + 1` evenly spaced times `0, t_end/n, ..., t_end`.
    Grid(usize),
}

impl Recording {
    /// Parses `full`, `seams`, `stride:<n>` or `grid:<n>`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("unknown recording policy `{text}`"));
        match text.split_once(':') {
            None => match text {
                "full" => Ok(Recording::Full),
                "seams" | "seams_only" => Ok(Recording::SeamsOnly),
                _ => Err(bad()),
            },
            Some((kind, n)) => {
                let n: usize = n.parse().map_err(|_| bad())?;
                if n == 0 {
                    return Err(bad());
                }
                match kind {
                    "stride" => Ok(Recording::Stride(n)),
                    "grid" => Ok(Recording::Grid(n)),
                    _ => Err(bad()),
                }
            }
        }
    }
}

impl std::fmt::Display for Recording {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Recording::Full => write!(f, "full"),
            Recording::Stride(n) => write!(f, "stride:{n}"),
            Recording::SeamsOnly => write!(f, "seams"),
            Recording::Grid(n) => write!(f, "grid:{n}"),
        }
    }
}

/// Anything that can be queried as a right-continuous step function of time.
pub trait Trajectory {
    fn seams(&self) -> &[Seam];
    fn terminal(&self) -> Terminal;
}

/// Collects seams according to a [`Recording`] policy.
#[derive(Debug)]
pub(crate) struct Recorder {
    policy: Recording,
    t_end: f64,
    seams: Vec<Seam>,
    events: u64,
    next_grid: usize,
    last_time: f64,
    last_kept: bool,
}

impl Recorder {
    pub(crate) fn new(policy: Recording, t_end: f64, initial: &State) -> Self {
        let seams = vec![Seam {
            state: initial.clone(),
            time: 0.0,
        }];
        Recorder {
            policy,
            t_end,
            seams,
            events: 0,
            next_grid: 1,
            last_time: 0.0,
            last_kept: true,
        }
    }

    fn grid_time(&self, i: usize, n: usize) -> f64 {
        if i == n {
            self.t_end
        } else {
            self.t_end * i as f64 / n as f64
        }
    }

    /// Called before the state changes at `t_event`; `counts` still holds the old state.
    #[inline]
    pub(crate) fn advance(&mut self, counts: &[u64], t_event: f64) {
        if t_event > self.t_end && !self.last_kept && self.last_time <= self.t_end {
            if let Recording::SeamsOnly | Recording::Stride(_) = self.policy {
                self.seams.push(Seam {
                    state: State(counts.to_vec()),
                    time: self.last_time,
                });
                self.last_kept = true;
            }
        }
        if let Recording::Grid(n) = self.policy {
            while self.next_grid <= n {
                let g = self.grid_time(self.next_grid, n);
                if g >= t_event {
                    break;
                }
                self.seams.push(Seam {
                    state: State(counts.to_vec()),
                    time: g,
                });
                self.next_grid += 1;
            }
        }
    }

    /// Called after the state changed at `t_event`.
    #[inline]
    pub(crate) fn event(&mut self, counts: &[u64], t_event: f64) {
        self.events += 1;
        let keep = match self.policy {
            Recording::Full => true,
            Recording::Stride(n) => self.events.is_multiple_of(n as u64),
            Recording::SeamsOnly | Recording::Grid(_) => false,
        };
        self.last_time = t_event;
        self.last_kept = keep;
        if keep {
            self.seams.push(Seam {
                state: State(counts.to_vec()),
                time: t_event,
            });
        }
    }

    /// Closes the recording with the final state entered at `t_last`.
    pub(crate) fn finish(mut self, counts: &[u64], t_last: f64) -> Vec<Seam> {
        match self.policy {
            Recording::Grid(n) => {
                while self.next_grid <= n {
                    let g = self.grid_time(self.next_grid, n);
                    self.seams.push(Seam {
                        state: State(counts.to_vec()),
                        time: g,
                    });
                    self.next_grid += 1;
                }
            }
            _ => {
                let last = self.seams.last().expect("recorder always holds the initial seam");
                if t_last > last.time {
                    self.seams.push(Seam {
                        state: State(counts.to_vec()),
                        time: t_last,
                    });
                }
            }
        }
        self.seams
    }
}
