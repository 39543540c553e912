//! Abstract runs and concretization.
//!
//! An abstract run is a densely concrete run with every seam mapped to its
//! abstract state. The concrete component is carried along internally as
//! the hidden part of a [`Configuration`].

use rand::Rng;

use crate::abstraction::{AbstractState, Abstraction};
use crate::analysis::Histogram;
use crate::crn::{CrnModel, State};
use crate::error::{Error, Result};
use crate::segmental::{DenselyConcreteRun, SegmentMemory, SegmentalSimulator};
use crate::trajectory::{Recording, Terminal};

/// Largest number of integer points `concretize_histogram` will materialize.
pub const MAX_CONCRETE_SUPPORT: u64 = 1 << 24;

/// State of the segmental abstraction: abstract state, carried concrete state, time.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub a: AbstractState,
    pub s: State,
    pub t: f64,
}

impl Configuration {
    pub fn new(abstraction: &Abstraction, s: State, t: f64) -> Self {
        Configuration {
            a: abstraction.abstract_state(&s),
            s,
            t,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbstractRun {
    pub steps: Vec<(AbstractState, f64)>,
    pub terminal: Terminal,
}

impl AbstractRun {
    /// Abstract state in force at time `t`.
    pub fn state_at(&self, t: f64) -> Result<&AbstractState> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::Domain(format!("query time must be >= 0, got {t}")));
        }
        let idx = self.steps.partition_point(|(_, time)| *time <= t);
        self.steps
            .get(idx.saturating_sub(1))
            .map(|(a, _)| a)
            .ok_or_else(|| Error::Domain("empty run".into()))
    }

    /// Compact encoding: step count, then per step the time as `f64` bits
    /// and each level as a LEB128 varint.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.push(terminal_tag(self.terminal));
        let dim = self.steps.first().map_or(0, |(a, _)| a.0.len());
        put_varint(&mut out, dim as u64);
        put_varint(&mut out, self.steps.len() as u64);
        for (a, t) in &self.steps {
            out.extend_from_slice(&t.to_le_bytes());
            for &l in a.levels() {
                put_varint(&mut out, u64::from(l));
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let terminal = match r.byte()? {
            0 => Terminal::Horizon,
            1 => Terminal::Deadlock,
            2 => Terminal::Bound,
            b => return Err(Error::Format(format!("bad terminal tag {b}"))),
        };
        let dim = r.varint()? as usize;
        let n = r.varint()? as usize;
        let mut steps = Vec::with_capacity(n.min(bytes.len()));
        for _ in 0..n {
            let t = f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
            let levels = (0..dim)
                .map(|_| {
                    r.varint()
                        .and_then(|v| u32::try_from(v).map_err(|_| Error::Format("level overflow".into())))
                })
                .collect::<Result<Vec<_>>>()?;
            steps.push((AbstractState(levels), t));
        }
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after abstract run".into()));
        }
        Ok(AbstractRun { steps, terminal })
    }
}

/// Encoding of a densely concrete run in the same layout as
/// [`AbstractRun::to_bytes`], with counts in place of levels.
pub fn concrete_run_bytes(run: &DenselyConcreteRun) -> Vec<u8> {
    let mut out = vec![terminal_tag(run.terminal)];
    let dim = run.seams.first().map_or(0, |s| s.state.len());
    put_varint(&mut out, dim as u64);
    put_varint(&mut out, run.seams.len() as u64);
    for seam in &run.seams {
        out.extend_from_slice(&seam.time.to_le_bytes());
        for &x in seam.state.counts() {
            put_varint(&mut out, x);
        }
    }
    out
}

fn terminal_tag(terminal: Terminal) -> u8 {
    match terminal {
        Terminal::Horizon => 0,
        Terminal::Deadlock => 1,
        Terminal::Bound => 2,
    }
}

fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format("truncated abstract run".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn byte(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn varint(&mut self) -> Result<u64> {
        let mut v = 0u64;
        for shift in (0..64).step_by(7) {
            let b = self.byte()?;
            v |= u64::from(b & 0x7f) << shift;
            if b & 0x80 == 0 {
                return Ok(v);
            }
        }
        Err(Error::Format("varint too long".into()))
    }
}

/// Maps every seam of `run` through the abstraction.
pub fn project(run: &DenselyConcreteRun, abstraction: &Abstraction) -> AbstractRun {
    AbstractRun {
        steps: run
            .seams
            .iter()
            .map(|s| (abstraction.abstract_state(&s.state), s.time))
            .collect(),
        terminal: run.terminal,
    }
}

/// Abstract run of one segmental simulation against `memory`.
pub fn abstract_simulate<R: Rng + ?Sized>(
    model: &CrnModel,
    s_init: &State,
    t_end: f64,
    memory: &SegmentMemory,
    rng: &mut R,
) -> Result<AbstractRun> {
    let mut sim = SegmentalSimulator::new(model, memory)?;
    let run = sim.simulate(s_init, t_end, rng, Recording::Full);
    Ok(project(&run, memory.abstraction()))
}

/// Draws a state uniformly from the box of `a`.
pub fn concretize_uniform<R: Rng + ?Sized>(abstraction: &Abstraction, a: &AbstractState, rng: &mut R) -> State {
    abstraction.sample_uniform(a, rng)
}

/// Spreads each level's mass uniformly over the integer points of its interval.
pub fn concretize_histogram(levels: &Histogram, abstraction: &Abstraction) -> Result<Histogram> {
    let mut points = 0u64;
    let mut pairs = Vec::new();
    for (level, mass) in levels.iter() {
        let level = u32::try_from(level).map_err(|_| Error::Domain(format!("level {level} out of range")))?;
        let (lo, hi) = abstraction.interval_of(level);
        let width = hi - lo + 1;
        points = points.saturating_add(width);
        if points > MAX_CONCRETE_SUPPORT {
            return Err(Error::Domain(format!(
                "concretized support exceeds {MAX_CONCRETE_SUPPORT} points"
            )));
        }
        let share = mass / width as f64;
        pairs.extend((lo..=hi).map(|x| (x, share)));
    }
    Histogram::from_masses(pairs, levels.sample_count())
}

/// Histogram of levels of one species at time `t` across abstract runs.
pub fn abstract_transient_histogram(runs: &[AbstractRun], t: f64, species: usize) -> Result<Histogram> {
    if runs.is_empty() {
        return Err(Error::Domain("need at least one run".into()));
    }
    let levels = runs
        .iter()
        .map(|r| {
            let a = r.state_at(t)?;
            a.levels()
                .get(species)
                .map(|&l| u64::from(l))
                .ok_or_else(|| Error::Domain(format!("species index {species} out of range")))
        })
        .collect::<Result<Vec<_>>>()?;
    Histogram::from_samples(levels)
}
