use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use segsim::{
    export_memory, import_memory, project, run_segmental_ensemble, run_ssa_ensemble, Abstraction, CrnModel,
    EnsembleConfig, MemoryStats, Recording, SegmentMemory, Terminal,
};
use serde::Serialize;

use crate::archive::{ArchiveHeader, ArchivedRun, Method, RunArchive};
use crate::error::{read_input, write_output, CliError, CliResult};
use crate::{core_error, default_runs, ensure_dir, load_model};

pub const STATS_FORMAT: &str = "segsim-stats";

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Built-in model name or path to a `.crn` file.
    #[arg(long)]
    pub model: String,
    #[arg(long, value_enum, default_value_t = Method::Segmental)]
    pub method: Method,
    /// Partition parameter, 1 < c <= 2.
    #[arg(long, default_value_t = 1.5)]
    pub c: f64,
    /// Summaries stored per abstract state [default: 100, or the imported memory's k].
    #[arg(long)]
    pub k: Option<usize>,
    /// Ensemble size [default: 10000 for PP and VI, 1000 otherwise].
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Overrides the model's time horizon.
    #[arg(long)]
    pub t_end: Option<f64>,
    /// full, seams, stride:<n> or grid:<n> [default: grid:200 for ssa, full otherwise].
    #[arg(long)]
    pub recording: Option<String>,
    /// Segment memory to start from (segmental and abstract methods).
    #[arg(long)]
    pub memory_in: Option<PathBuf>,
    /// Where to export the segment memory after the run.
    #[arg(long)]
    pub memory_out: Option<PathBuf>,
    /// Output directory for `archive.csv` and `stats.json`.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct RunRecord {
    /// Reactions fired (SSA) or summaries applied (segmental).
    pub steps: u64,
    pub fresh: Option<u64>,
    pub fallbacks: Option<u64>,
    pub terminal: &'static str,
    pub wall_time_s: f64,
}

#[derive(Debug, Serialize)]
pub struct SimulationStats {
    pub format: &'static str,
    pub version: u32,
    pub model: String,
    pub method: String,
    pub c: Option<f64>,
    pub k: Option<usize>,
    pub seed: u64,
    pub runs: usize,
    pub threads: usize,
    pub t_end: f64,
    pub recording: String,
    pub wall_time_s: f64,
    pub mean_wall_time_per_run_s: f64,
    pub mean_reactions: Option<f64>,
    pub mean_summaries: Option<f64>,
    pub terminals: Terminals,
    pub memory: Option<MemoryStats>,
    pub per_run: Vec<RunRecord>,
}

#[derive(Debug, Default, Serialize)]
pub struct Terminals {
    pub horizon: usize,
    pub deadlock: usize,
    pub bound: usize,
}

impl Terminals {
    fn count(&mut self, t: Terminal) {
        match t {
            Terminal::Horizon => self.horizon += 1,
            Terminal::Deadlock => self.deadlock += 1,
            Terminal::Bound => self.bound += 1,
        }
    }
}

/// Output of one simulate invocation, before anything is written.
pub struct Simulation {
    pub archive: RunArchive,
    pub stats: SimulationStats,
    pub memory: Option<SegmentMemory>,
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let sim = simulate(args)?;
    let dir = ensure_dir(&args.out)?;
    sim.archive.save(&dir.join("archive.csv"))?;
    let stats = serde_json::to_string_pretty(&sim.stats).expect("stats serialize");
    write_output(&dir.join("stats.json"), &(stats + "\n"))?;
    if let (Some(path), Some(memory)) = (&args.memory_out, &sim.memory) {
        write_output(path, &export_memory(memory))?;
    }
    let s = &sim.stats;
    let per_run = s.mean_reactions.or(s.mean_summaries).unwrap_or(0.0);
    let unit = if s.mean_reactions.is_some() {
        "reactions"
    } else {
        "summaries"
    };
    println!(
        "{} {} runs of {} in {:.3} s ({:.0} {unit}/run)",
        s.runs, s.method, s.model, s.wall_time_s, per_run
    );
    if let Some(m) = &s.memory {
        println!(
            "memory: {} abstract states, {} summaries, ~{} bytes",
            m.visited_states, m.stored_summaries, m.approx_bytes
        );
    }
    Ok(())
}

fn memory_for(args: &SimulateArgs, model: &CrnModel) -> CliResult<SegmentMemory> {
    match &args.memory_in {
        Some(path) => {
            let memory = import_memory(&read_input(path)?, model, args.c).map_err(core_error)?;
            if let Some(k) = args.k {
                if k != memory.k() {
                    return Err(CliError::Usage(format!(
                        "--k {k} conflicts with the imported memory's k = {}",
                        memory.k()
                    )));
                }
            }
            Ok(memory)
        }
        None => {
            let abstraction = Abstraction::new(args.c).map_err(core_error)?;
            SegmentMemory::new(model, abstraction, args.k.unwrap_or(100)).map_err(core_error)
        }
    }
}

/// Runs the ensemble described by `args` without touching the filesystem
/// (apart from reading `--model` and `--memory-in`).
pub fn simulate(args: &SimulateArgs) -> CliResult<Simulation> {
    let mut model = load_model(&args.model)?;
    if let Some(t) = args.t_end {
        model = model.with_t_end(t).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let runs = args.runs.unwrap_or_else(|| default_runs(&model));
    if runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    if args.threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let recording = match &args.recording {
        Some(text) => Recording::parse(text).map_err(core_error)?,
        None if args.method == Method::Ssa => Recording::Grid(200),
        None => Recording::Full,
    };
    if args.method == Method::Ssa && (args.memory_in.is_some() || args.memory_out.is_some()) {
        return Err(CliError::Usage(
            "segment memories apply to segmental and abstract methods only".into(),
        ));
    }
    let config = EnsembleConfig::new(runs, args.seed, model.t_end, recording).threads(args.threads);
    let mut terminals = Terminals::default();
    let clock = Instant::now();
    let (archived, per_run, memory) = match args.method {
        Method::Ssa => {
            let out = run_ssa_ensemble(&model, &config).map_err(core_error)?;
            let per_run = out
                .iter()
                .map(|r| RunRecord {
                    steps: r.stats.reaction_count,
                    fresh: None,
                    fallbacks: None,
                    terminal: r.terminal.as_str(),
                    wall_time_s: r.stats.wall_time.as_secs_f64(),
                })
                .collect::<Vec<_>>();
            let archived = out
                .into_iter()
                .map(|r| ArchivedRun {
                    terminal: r.terminal,
                    seams: r.seams,
                })
                .collect::<Vec<_>>();
            (archived, per_run, None)
        }
        Method::Segmental | Method::Abstract => {
            let memory = memory_for(args, &model)?;
            let out = run_segmental_ensemble(&model, &memory, &config).map_err(core_error)?;
            let per_run = out
                .iter()
                .map(|r| RunRecord {
                    steps: r.stats.summaries_applied,
                    fresh: Some(r.stats.fresh_segments),
                    fallbacks: Some(r.stats.fallbacks),
                    terminal: r.terminal.as_str(),
                    wall_time_s: r.stats.wall_time.as_secs_f64(),
                })
                .collect::<Vec<_>>();
            let archived = out
                .into_iter()
                .map(|r| {
                    if args.method == Method::Abstract {
                        let a = project(&r, memory.abstraction());
                        ArchivedRun {
                            terminal: a.terminal,
                            seams: a
                                .steps
                                .into_iter()
                                .map(|(levels, time)| segsim::Seam {
                                    state: segsim::State(levels.0.into_iter().map(u64::from).collect()),
                                    time,
                                })
                                .collect(),
                        }
                    } else {
                        ArchivedRun {
                            terminal: r.terminal,
                            seams: r.seams,
                        }
                    }
                })
                .collect::<Vec<_>>();
            (archived, per_run, Some(memory))
        }
    };
    let wall = clock.elapsed().as_secs_f64();
    for r in &archived {
        terminals.count(r.terminal);
    }
    let mean_steps = per_run.iter().map(|r| r.steps as f64).sum::<f64>() / runs as f64;
    let abstracted = args.method != Method::Ssa;
    let header = ArchiveHeader {
        model: model.name.clone(),
        method: args.method,
        c: abstracted.then_some(args.c),
        k: memory.as_ref().map(SegmentMemory::k),
        seed: args.seed,
        runs,
        t_end: model.t_end,
        recording,
        species: model.species.clone(),
    };
    let stats = SimulationStats {
        format: STATS_FORMAT,
        version: 1,
        model: model.name.clone(),
        method: args.method.to_string(),
        c: header.c,
        k: header.k,
        seed: args.seed,
        runs,
        threads: args.threads,
        t_end: model.t_end,
        recording: recording.to_string(),
        wall_time_s: wall,
        mean_wall_time_per_run_s: wall / runs as f64,
        mean_reactions: (!abstracted).then_some(mean_steps),
        mean_summaries: abstracted.then_some(mean_steps),
        terminals,
        memory: memory.as_ref().map(SegmentMemory::stats),
        per_run,
    };
    Ok(Simulation {
        archive: RunArchive { header, runs: archived },
        stats,
        memory,
    })
}
