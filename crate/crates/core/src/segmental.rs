//! Lazy segmental simulation.
//!
//! A [`SegmentMemory`] maps abstract states to at most `k` summaries of SSA
//! segments started at the abstract state's representative. A simulation
//! repeatedly looks up the abstract state of its current concrete state and
//! either generates a fresh segment (while fewer than `k` are stored) or
//! reuses a uniformly chosen stored one, then adds the summary's state and
//! time deltas to the concrete state.
//!
//! If a drawn summary would make some count negative at the current concrete
//! state, it is discarded and a one-off segment is simulated from the
//! concrete state itself. Such segments are not stored; the `fallbacks`
//! counters record how often it happens.

use std::borrow::Borrow;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use parking_lot::RwLock;
use rand::Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::abstraction::{AbstractState, Abstraction};
use crate::crn::{CrnModel, State};
use crate::error::{Error, Result};
use crate::ssa::Ssa;
use crate::trajectory::{Recorder, Recording, Seam, Terminal, Trajectory};

/// Net effect of a segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub delta_state: Vec<i64>,
    /// Elapsed time; infinite for a segment that ended in deadlock.
    pub delta_time: f64,
}

impl Summary {
    pub fn new(delta_state: Vec<i64>, delta_time: f64) -> Self {
        Summary {
            delta_state,
            delta_time,
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.delta_time.is_infinite()
    }
}

/// A simulated segment. `reactions` is only kept when requested.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: State,
    pub reactions: Option<Vec<u32>>,
    pub summary: Summary,
}

impl Borrow<[u32]> for AbstractState {
    fn borrow(&self) -> &[u32] {
        &self.0
    }
}

#[derive(Debug)]
struct Bucket {
    representative: State,
    /// Generation slots handed out; never exceeds `k`.
    reserved: AtomicUsize,
    summaries: RwLock<Vec<Arc<Summary>>>,
    traces: RwLock<Vec<Arc<[u32]>>>,
}

impl Bucket {
    fn new(representative: State) -> Self {
        Bucket {
            representative,
            reserved: AtomicUsize::new(0),
            summaries: RwLock::new(Vec::new()),
            traces: RwLock::new(Vec::new()),
        }
    }

    /// Claims one of the `k` generation slots, if any is left.
    fn try_reserve(&self, k: usize) -> bool {
        self.reserved
            .fetch_update(Ordering::AcqRel, Ordering::Acquire, |r| (r < k).then_some(r + 1))
            .is_ok()
    }
}

#[derive(Debug, Default)]
struct Counters {
    stored: AtomicU64,
    reused: AtomicU64,
    fresh: AtomicU64,
    fallbacks: AtomicU64,
}

/// Snapshot of a memory's size and usage counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryStats {
    pub visited_states: usize,
    pub stored_summaries: u64,
    pub approx_bytes: u64,
    pub reused: u64,
    pub fresh: u64,
    pub fallbacks: u64,
}

/// Shared store of segment summaries keyed by abstract state.
///
/// Safe to share between threads. The generate-or-reuse decision claims a
/// slot atomically, so no abstract state ever stores more than `k`
/// summaries. A reader that finds every slot claimed but no summary
/// finished yet simulates an unstored segment instead of waiting.
#[derive(Debug)]
pub struct SegmentMemory {
    model_name: String,
    species: usize,
    abstraction: Abstraction,
    k: usize,
    retain_reactions: bool,
    map: RwLock<FxHashMap<AbstractState, Arc<Bucket>>>,
    counters: Counters,
}

/// How a summary was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Fresh,
    Reused,
}

impl SegmentMemory {
    pub fn new(model: &CrnModel, abstraction: Abstraction, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("k must be at least 1".into()));
        }
        Ok(SegmentMemory {
            model_name: model.name.clone(),
            species: model.species_count(),
            abstraction,
            k,
            retain_reactions: false,
            map: RwLock::new(FxHashMap::default()),
            counters: Counters::default(),
        })
    }

    /// Keep full reaction sequences alongside summaries (for replay checks).
    pub fn retaining_reactions(mut self) -> Self {
        self.retain_reactions = true;
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn abstraction(&self) -> &Abstraction {
        &self.abstraction
    }

    pub fn model_name(&self) -> &str {
        &self.model_name
    }

    pub fn species_count(&self) -> usize {
        self.species
    }

    fn bucket(&self, levels: &[u32]) -> Arc<Bucket> {
        if let Some(b) = self.map.read().get(levels) {
            return Arc::clone(b);
        }
        let key = AbstractState(levels.to_vec());
        let rep = self.abstraction.representative(&key);
        Arc::clone(
            self.map
                .write()
                .entry(key)
                .or_insert_with(|| Arc::new(Bucket::new(rep))),
        )
    }

    /// Stored summaries of `a`, in insertion order.
    pub fn summaries(&self, a: &AbstractState) -> Vec<Summary> {
        self.map
            .read()
            .get(a)
            .map(|b| b.summaries.read().iter().map(|s| (**s).clone()).collect())
            .unwrap_or_default()
    }

    /// Stored segments of `a`; reaction lists are present only when retained.
    pub fn segments(&self, a: &AbstractState) -> Vec<Segment> {
        let map = self.map.read();
        let Some(b) = map.get(a) else {
            return Vec::new();
        };
        let traces = b.traces.read();
        let summaries = b.summaries.read();
        summaries
            .iter()
            .enumerate()
            .map(|(i, s)| Segment {
                start: b.representative.clone(),
                reactions: traces.get(i).map(|t| t.to_vec()),
                summary: (**s).clone(),
            })
            .collect::<Vec<_>>()
    }

    pub fn stats(&self) -> MemoryStats {
        let visited = self.map.read().len();
        let stored = self.counters.stored.load(Ordering::Relaxed);
        let per_summary = self.species as u64 * 4 + 8;
        let per_key = self.species as u64 * 4 + 32;
        MemoryStats {
            visited_states: visited,
            stored_summaries: stored,
            approx_bytes: stored * per_summary + visited as u64 * per_key,
            reused: self.counters.reused.load(Ordering::Relaxed),
            fresh: self.counters.fresh.load(Ordering::Relaxed),
            fallbacks: self.counters.fallbacks.load(Ordering::Relaxed),
        }
    }

    fn check_model(&self, model: &CrnModel) -> Result<()> {
        if model.species_count() != self.species {
            return Err(Error::Model(format!(
                "memory was built for {} species, model `{}` has {}",
                self.species,
                model.name,
                model.species_count()
            )));
        }
        Ok(())
    }
}

/// Summary statistics of memory contents.
pub fn memory_stats(memory: &SegmentMemory) -> MemoryStats {
    memory.stats()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SegmentalRunStats {
    pub summaries_applied: u64,
    pub fresh_segments: u64,
    pub reused_segments: u64,
    pub fallbacks: u64,
    pub wall_time: Duration,
}

/// A run known only at the seams between applied summaries.
#[derive(Debug, Clone)]
pub struct DenselyConcreteRun {
    pub seams: Vec<Seam>,
    pub terminal: Terminal,
    pub stats: SegmentalRunStats,
}

impl DenselyConcreteRun {
    pub fn final_state(&self) -> &State {
        &self.seams.last().expect("a run holds at least its initial seam").state
    }
}

impl Trajectory for DenselyConcreteRun {
    fn seams(&self) -> &[Seam] {
        &self.seams
    }

    fn terminal(&self) -> Terminal {
        self.terminal
    }
}

/// Segmental simulator bound to one model and one shared memory.
#[derive(Debug)]
pub struct SegmentalSimulator<'m> {
    memory: &'m SegmentMemory,
    ssa: Ssa,
    levels: Vec<u32>,
}

impl<'m> SegmentalSimulator<'m> {
    pub fn new(model: &CrnModel, memory: &'m SegmentMemory) -> Result<Self> {
        memory.check_model(model)?;
        Ok(SegmentalSimulator {
            memory,
            ssa: Ssa::new(model),
            levels: Vec::with_capacity(model.species_count()),
        })
    }

    pub fn memory(&self) -> &SegmentMemory {
        self.memory
    }

    /// Returns a summary for `levels`: a fresh one while fewer than `k` are
    /// stored, otherwise a uniformly chosen stored one.
    pub fn lookup_or_generate<R: Rng + ?Sized>(
        &mut self,
        levels: &[u32],
        rng: &mut R,
        max_time: f64,
    ) -> (Arc<Summary>, Source) {
        let memory = self.memory;
        let bucket = memory.bucket(levels);
        if bucket.try_reserve(memory.k) {
            let home = AbstractState(levels.to_vec());
            let seg = self.ssa.simulate_until_leaving_from(
                &bucket.representative,
                &home,
                &memory.abstraction,
                rng,
                memory.retain_reactions,
                max_time,
            );
            let summary = Arc::new(seg.summary);
            {
                let mut list = bucket.summaries.write();
                list.push(Arc::clone(&summary));
                if let Some(trace) = seg.reactions {
                    bucket.traces.write().push(trace.into());
                }
            }
            memory.counters.stored.fetch_add(1, Ordering::Relaxed);
            memory.counters.fresh.fetch_add(1, Ordering::Relaxed);
            return (summary, Source::Fresh);
        }
        let picked = {
            let list = bucket.summaries.read();
            (!list.is_empty()).then(|| Arc::clone(&list[rng.random_range(0..list.len())]))
        };
        match picked {
            Some(summary) => {
                memory.counters.reused.fetch_add(1, Ordering::Relaxed);
                (summary, Source::Reused)
            }
            None => {
                // every slot is claimed by an in-flight generation
                let home = AbstractState(levels.to_vec());
                let seg = self.ssa.simulate_until_leaving_from(
                    &bucket.representative,
                    &home,
                    &memory.abstraction,
                    rng,
                    false,
                    max_time,
                );
                memory.counters.fresh.fetch_add(1, Ordering::Relaxed);
                (Arc::new(seg.summary), Source::Fresh)
            }
        }
    }

    /// One densely concrete simulation from `start` up to `t_end`.
    ///
    /// Every applied summary appends a seam; the last seam may lie past
    /// `t_end`. Drawing a terminal summary ends the run as a deadlock.
    pub fn simulate<R: Rng + ?Sized>(
        &mut self,
        start: &State,
        t_end: f64,
        rng: &mut R,
        recording: Recording,
    ) -> DenselyConcreteRun {
        assert_eq!(start.len(), self.memory.species, "state has wrong dimension");
        let clock = Instant::now();
        let abstraction = self.memory.abstraction.clone();
        let mut recorder = Recorder::new(recording, t_end, start);
        let mut stats = SegmentalRunStats::default();
        let mut s = start.clone();
        let mut t = 0.0;
        let mut terminal = Terminal::Horizon;
        let mut levels = std::mem::take(&mut self.levels);
        while t < t_end {
            abstraction.levels_into(s.counts(), &mut levels);
            let (summary, source) = self.lookup_or_generate(&levels, rng, t_end);
            match source {
                Source::Fresh => stats.fresh_segments += 1,
                Source::Reused => stats.reused_segments += 1,
            }
            let (next, dt) = match s.checked_add_delta(&summary.delta_state) {
                Some(next) if !summary.is_terminal() => (next, summary.delta_time),
                Some(_) => {
                    terminal = Terminal::Deadlock;
                    break;
                }
                None => {
                    stats.fallbacks += 1;
                    self.memory.counters.fallbacks.fetch_add(1, Ordering::Relaxed);
                    let home = AbstractState(levels.clone());
                    let seg = self
                        .ssa
                        .simulate_until_leaving_from(&s, &home, &abstraction, rng, false, t_end);
                    if seg.summary.is_terminal() {
                        terminal = Terminal::Deadlock;
                        break;
                    }
                    let next = s
                        .checked_add_delta(&seg.summary.delta_state)
                        .expect("a segment simulated from the state itself stays nonnegative");
                    (next, seg.summary.delta_time)
                }
            };
            let t_next = t + dt;
            recorder.advance(s.counts(), t_next);
            s = next;
            t = t_next;
            stats.summaries_applied += 1;
            recorder.event(s.counts(), t);
            if self.ssa.exceeds_bound(s.counts()) {
                terminal = Terminal::Bound;
                break;
            }
        }
        self.levels = levels;
        let seams = recorder.finish(s.counts(), t);
        stats.wall_time = clock.elapsed();
        DenselyConcreteRun { seams, terminal, stats }
    }
}

/// One lookup against `memory` for abstract state `a`.
pub fn lookup_or_generate<R: Rng + ?Sized>(
    memory: &SegmentMemory,
    a: &AbstractState,
    model: &CrnModel,
    rng: &mut R,
) -> Result<Summary> {
    let mut sim = SegmentalSimulator::new(model, memory)?;
    Ok((*sim.lookup_or_generate(a.levels(), rng, f64::INFINITY).0).clone())
}

pub fn segmental_simulate<R: Rng + ?Sized>(
    model: &CrnModel,
    start: &State,
    t_end: f64,
    memory: &SegmentMemory,
    rng: &mut R,
    recording: Recording,
) -> Result<DenselyConcreteRun> {
    let mut sim = SegmentalSimulator::new(model, memory)?;
    Ok(sim.simulate(start, t_end, rng, recording))
}

const MEMORY_FORMAT: &str = "segsim-memory";
const MEMORY_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct MemoryDocument {
    format: String,
    version: u32,
    model: String,
    c: f64,
    k: usize,
    species: usize,
    states: Vec<StateEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StateEntry {
    levels: Vec<u32>,
    summaries: Vec<SummaryRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SummaryRecord {
    delta: Vec<i64>,
    /// `null` marks a terminal summary.
    dt: Option<f64>,
}

/// Serializes the memory as a versioned JSON document, states sorted by level vector.
pub fn export_memory(memory: &SegmentMemory) -> String {
    let map = memory.map.read();
    let mut states: Vec<StateEntry> = map
        .iter()
        .map(|(a, b)| StateEntry {
            levels: a.0.clone(),
            summaries: b
                .summaries
                .read()
                .iter()
                .map(|s| SummaryRecord {
                    delta: s.delta_state.clone(),
                    dt: (!s.is_terminal()).then_some(s.delta_time),
                })
                .collect(),
        })
        .collect();
    states.sort_by(|x, y| x.levels.cmp(&y.levels));
    let doc = MemoryDocument {
        format: MEMORY_FORMAT.into(),
        version: MEMORY_VERSION,
        model: memory.model_name.clone(),
        c: memory.abstraction.c(),
        k: memory.k,
        species: memory.species,
        states,
    };
    serde_json::to_string(&doc).expect("memory document serializes")
}

/// Rebuilds a memory exported by [`export_memory`] for use with `model`
/// under partition parameter `c`.
pub fn import_memory(text: &str, model: &CrnModel, c: f64) -> Result<SegmentMemory> {
    let doc: MemoryDocument = serde_json::from_str(text).map_err(|e| Error::Format(format!("memory document: {e}")))?;
    if doc.format != MEMORY_FORMAT || doc.version != MEMORY_VERSION {
        return Err(Error::Format(format!(
            "unsupported memory format {} v{}",
            doc.format, doc.version
        )));
    }
    if doc.c != c {
        return Err(Error::Format(format!(
            "memory was built with c = {}, requested c = {c}",
            doc.c
        )));
    }
    if doc.model != model.name || doc.species != model.species_count() {
        return Err(Error::Format(format!(
            "memory belongs to model `{}` with {} species",
            doc.model, doc.species
        )));
    }
    if doc.k == 0 {
        return Err(Error::Format("k must be at least 1".into()));
    }
    let memory = SegmentMemory::new(model, Abstraction::new(c)?, doc.k)?;
    {
        let mut map = memory.map.write();
        let mut stored = 0u64;
        for entry in doc.states {
            if entry.levels.len() != doc.species {
                return Err(Error::Format("level vector has wrong length".into()));
            }
            if entry.summaries.len() > doc.k {
                return Err(Error::Format(format!(
                    "abstract state {:?} holds more than k summaries",
                    entry.levels
                )));
            }
            let key = AbstractState(entry.levels);
            let bucket = Bucket::new(memory.abstraction.representative(&key));
            let mut list = Vec::with_capacity(entry.summaries.len());
            for rec in entry.summaries {
                if rec.delta.len() != doc.species {
                    return Err(Error::Format("summary delta has wrong length".into()));
                }
                let dt = match rec.dt {
                    None => f64::INFINITY,
                    Some(dt) if dt > 0.0 => dt,
                    Some(dt) => return Err(Error::Format(format!("nonpositive summary time {dt}"))),
                };
                list.push(Arc::new(Summary::new(rec.delta, dt)));
            }
            stored += list.len() as u64;
            bucket.reserved.store(list.len(), Ordering::Relaxed);
            *bucket.summaries.write() = list;
            if map.insert(key, Arc::new(bucket)).is_some() {
                return Err(Error::Format("duplicate abstract state".into()));
            }
        }
        memory.counters.stored.store(stored, Ordering::Relaxed);
    }
    Ok(memory)
}
