use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use segsim::{
    run_segmental_ensemble, run_ssa_ensemble, Abstraction, EnsembleConfig, MemoryStats, Recording, SegmentMemory,
};
use serde::Serialize;

use crate::error::{write_output, CliError, CliResult};
use crate::{core_error, ensure_dir, load_model};

pub const BENCH_FORMAT: &str = "segsim-bench";

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub model: String,
    /// Partition parameters to try.
    #[arg(long, value_delimiter = ',', default_values_t = [2.0, 1.5, 1.3])]
    pub c: Vec<f64>,
    /// Memory capacities to try.
    #[arg(long, value_delimiter = ',', default_values_t = [10, 100, 1000])]
    pub k: Vec<usize>,
    /// Segmental runs per (c, k) cell.
    #[arg(long, default_value_t = 10_000)]
    pub runs: usize,
    /// SSA runs used to estimate the baseline time per run [default: --runs].
    #[arg(long)]
    pub ssa_runs: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Number of windows for the moving-average time per run.
    #[arg(long, default_value_t = 10)]
    pub windows: usize,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct SsaBaseline {
    pub runs: usize,
    pub total_time_s: f64,
    pub mean_time_s: f64,
    pub mean_reactions: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchCell {
    pub c: f64,
    pub k: usize,
    pub runs: usize,
    pub total_time_s: f64,
    pub mean_time_s: f64,
    pub speedup: f64,
    pub mean_summaries: f64,
    /// Mean wall time per run within consecutive windows of runs.
    pub window_mean_time_s: Vec<f64>,
    pub memory: MemoryStats,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub format: &'static str,
    pub version: u32,
    pub model: String,
    pub t_end: f64,
    pub seed: u64,
    pub threads: usize,
    pub ssa: SsaBaseline,
    pub cells: Vec<BenchCell>,
}

/// Mean of `values` over `windows` consecutive, nearly equal chunks.
pub fn window_means(values: &[f64], windows: usize) -> Vec<f64> {
    let windows = windows.clamp(1, values.len().max(1));
    (0..windows)
        .map(|w| {
            let lo = w * values.len() / windows;
            let hi = (w + 1) * values.len() / windows;
            let chunk = &values[lo..hi];
            chunk.iter().sum::<f64>() / chunk.len().max(1) as f64
        })
        .collect()
}

pub fn bench(args: &BenchArgs) -> CliResult<BenchReport> {
    let mut model = load_model(&args.model)?;
    if let Some(t) = args.t_end {
        model = model.with_t_end(t).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if args.runs == 0 || args.ssa_runs == Some(0) {
        return Err(CliError::Usage("run counts must be at least 1".into()));
    }
    if args.threads == 0 || args.windows == 0 {
        return Err(CliError::Usage("--threads and --windows must be at least 1".into()));
    }
    if args.c.is_empty() || args.k.is_empty() {
        return Err(CliError::Usage("need at least one c and one k".into()));
    }
    let ssa_runs = args.ssa_runs.unwrap_or(args.runs);
    let ssa_config = EnsembleConfig::new(ssa_runs, args.seed, model.t_end, Recording::SeamsOnly).threads(args.threads);
    let clock = Instant::now();
    let ssa_out = run_ssa_ensemble(&model, &ssa_config).map_err(core_error)?;
    let ssa_total = clock.elapsed().as_secs_f64();
    let ssa = SsaBaseline {
        runs: ssa_runs,
        total_time_s: ssa_total,
        mean_time_s: ssa_total / ssa_runs as f64,
        mean_reactions: ssa_out.iter().map(|r| r.stats.reaction_count as f64).sum::<f64>() / ssa_runs as f64,
    };
    drop(ssa_out);

    let mut cells = Vec::new();
    for &c in &args.c {
        for &k in &args.k {
            let abstraction = Abstraction::new(c).map_err(core_error)?;
            let memory = SegmentMemory::new(&model, abstraction, k).map_err(core_error)?;
            let config =
                EnsembleConfig::new(args.runs, args.seed, model.t_end, Recording::SeamsOnly).threads(args.threads);
            let clock = Instant::now();
            let out = run_segmental_ensemble(&model, &memory, &config).map_err(core_error)?;
            let total = clock.elapsed().as_secs_f64();
            let times: Vec<f64> = out.iter().map(|r| r.stats.wall_time.as_secs_f64()).collect();
            let mean_time = total / args.runs as f64;
            cells.push(BenchCell {
                c,
                k,
                runs: args.runs,
                total_time_s: total,
                mean_time_s: mean_time,
                speedup: ssa.mean_time_s / mean_time,
                mean_summaries: out.iter().map(|r| r.stats.summaries_applied as f64).sum::<f64>() / args.runs as f64,
                window_mean_time_s: window_means(&times, args.windows),
                memory: memory.stats(),
            });
        }
    }
    Ok(BenchReport {
        format: BENCH_FORMAT,
        version: 1,
        model: model.name.clone(),
        t_end: model.t_end,
        seed: args.seed,
        threads: args.threads,
        ssa,
        cells,
    })
}

/// Speedup table with one row per c and one column per k.
pub fn speedup_table(report: &BenchReport, cs: &[f64], ks: &[usize]) -> String {
    let mut s = String::from("c");
    for k in ks {
        s.push_str(&format!(",k={k}"));
    }
    s.push('\n');
    for &c in cs {
        s.push_str(&c.to_string());
        for &k in ks {
            let cell = report.cells.iter().find(|x| x.c == c && x.k == k);
            s.push_str(&format!(",{}", cell.map_or(f64::NAN, |x| x.speedup)));
        }
        s.push('\n');
    }
    s
}

pub fn run(args: &BenchArgs) -> CliResult<()> {
    let report = bench(args)?;
    let dir = ensure_dir(&args.out)?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    write_output(&dir.join("bench.json"), &(text + "\n"))?;
    write_output(&dir.join("speedup.csv"), &speedup_table(&report, &args.c, &args.k))?;
    println!(
        "{}: SSA {:.4} s/run ({:.0} reactions/run, {} runs, {} thread(s))",
        report.model, report.ssa.mean_time_s, report.ssa.mean_reactions, report.ssa.runs, report.threads
    );
    println!(
        "{:>5} {:>6} {:>10} {:>9} {:>10} {:>8} {:>10}",
        "c", "k", "s/run", "speedup", "summaries", "states", "stored"
    );
    for cell in &report.cells {
        println!(
            "{:>5} {:>6} {:>10.6} {:>8.1}x {:>10.0} {:>8} {:>10}",
            cell.c,
            cell.k,
            cell.mean_time_s,
            cell.speedup,
            cell.mean_summaries,
            cell.memory.visited_states,
            cell.memory.stored_summaries
        );
    }
    Ok(())
}
