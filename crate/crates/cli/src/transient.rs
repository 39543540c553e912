use std::path::{Path, PathBuf};

use clap::Args;
use segsim::{
    concretize_histogram, control_pair_emd, emd, stats_over_time, transient_histogram, Abstraction, Histogram,
};
use serde::Serialize;

use crate::archive::{Method, RunArchive};
use crate::error::{write_output, CliError, CliResult};
use crate::{core_error, ensure_dir, load_model};

pub const HISTOGRAM_FORMAT: &str = "segsim-histogram";
pub const SERIES_FORMAT: &str = "segsim-series";
pub const REPORT_FORMAT: &str = "segsim-transient";

#[derive(Debug, Clone, Args)]
pub struct TransientArgs {
    /// One archive, or two to compare.
    #[arg(required = true, num_args = 1..=2)]
    pub archives: Vec<PathBuf>,
    /// Query time.
    #[arg(long)]
    pub at: f64,
    #[arg(long)]
    pub species: String,
    /// Also compute the EMD between two fresh SSA ensembles of this size.
    #[arg(long)]
    pub control: Option<usize>,
    /// Model for the control ensembles [default: the archive's built-in model].
    #[arg(long)]
    pub model: Option<String>,
    /// Seed of the first control ensemble; the second uses seed + 1.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write mean and variance on this many grid intervals over [0, t_end].
    #[arg(long)]
    pub series: Option<usize>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArchiveSummary {
    pub archive: String,
    pub method: String,
    pub runs: usize,
    /// Mean of the count histogram (concretized for abstract archives).
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransientReport {
    pub format: &'static str,
    pub version: u32,
    pub t: f64,
    pub species: String,
    pub inputs: Vec<ArchiveSummary>,
    pub emd: Option<f64>,
    pub mean_difference: Option<f64>,
    pub emd_control: Option<f64>,
    pub control_runs: Option<usize>,
}

/// Count histogram of one archive, plus the level histogram for abstract archives.
pub struct ArchiveHistograms {
    pub counts: Histogram,
    pub levels: Option<Histogram>,
}

pub fn histograms(archive: &RunArchive, t: f64, species: usize) -> CliResult<ArchiveHistograms> {
    let h = transient_histogram(&archive.runs, t, species).map_err(core_error)?;
    if archive.header.method != Method::Abstract {
        return Ok(ArchiveHistograms {
            counts: h,
            levels: None,
        });
    }
    let c = archive.header.c.expect("abstract archives carry c");
    let abstraction = Abstraction::new(c).map_err(|e| CliError::Format(e.to_string()))?;
    let counts = concretize_histogram(&h, &abstraction).map_err(core_error)?;
    Ok(ArchiveHistograms {
        counts,
        levels: Some(h),
    })
}

pub fn species_index(archive: &RunArchive, name: &str) -> CliResult<usize> {
    archive.header.species.iter().position(|s| s == name).ok_or_else(|| {
        CliError::Usage(format!(
            "species `{name}` is not in model {} (species: {})",
            archive.header.model,
            archive.header.species.join(", ")
        ))
    })
}

fn histogram_csv(h: &Histogram, source: &str, t: f64, species: &str, kind: &str) -> String {
    let mut s = format!("# {HISTOGRAM_FORMAT} v1 archive={source} t={t} species={species} kind={kind}\nvalue,mass\n");
    for (x, m) in h.iter() {
        s.push_str(&format!("{x},{m}\n"));
    }
    s
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn run(args: &TransientArgs) -> CliResult<()> {
    if !(args.at >= 0.0 && args.at.is_finite()) {
        return Err(CliError::Usage(format!("--at must be a time >= 0, got {}", args.at)));
    }
    let archives = args
        .archives
        .iter()
        .map(|p| RunArchive::load(p))
        .collect::<CliResult<Vec<_>>>()?;
    let dir = ensure_dir(&args.out)?;
    let mut inputs = Vec::new();
    let mut count_hists = Vec::new();
    for (i, (archive, path)) in archives.iter().zip(&args.archives).enumerate() {
        let tag = ["a", "b"][i];
        let species = species_index(archive, &args.species)?;
        let hs = histograms(archive, args.at, species)?;
        let label = file_label(path);
        write_output(
            &dir.join(format!("hist_{tag}.csv")),
            &histogram_csv(&hs.counts, &label, args.at, &args.species, "counts"),
        )?;
        if let Some(levels) = &hs.levels {
            write_output(
                &dir.join(format!("hist_{tag}_levels.csv")),
                &histogram_csv(levels, &label, args.at, &args.species, "levels"),
            )?;
        }
        if let Some(n) = args.series {
            if n == 0 {
                return Err(CliError::Usage("--series needs at least one interval".into()));
            }
            let t_end = archive.header.t_end;
            let grid: Vec<f64> = (0..=n).map(|j| t_end * j as f64 / n as f64).collect();
            let s = stats_over_time(&archive.runs, &grid, species).map_err(core_error)?;
            let mut text = format!(
                "# {SERIES_FORMAT} v1 archive={label} species={} kind={}\ntime,mean,variance\n",
                args.species,
                if hs.levels.is_some() { "levels" } else { "counts" }
            );
            for ((t, m), v) in s.grid.iter().zip(&s.mean).zip(&s.variance) {
                text.push_str(&format!("{t},{m},{v}\n"));
            }
            write_output(&dir.join(format!("series_{tag}.csv")), &text)?;
        }
        inputs.push(ArchiveSummary {
            archive: label,
            method: archive.header.method.to_string(),
            runs: archive.runs.len(),
            mean: hs.counts.mean(),
        });
        count_hists.push(hs.counts);
    }
    let (emd_value, mean_difference) = match count_hists.as_slice() {
        [a, b] => (Some(emd(a, b).map_err(core_error)?), Some(a.mean() - b.mean())),
        _ => (None, None),
    };
    let emd_control = match args.control {
        Some(n) => {
            let name = args.model.as_deref().unwrap_or(&archives[0].header.model);
            let model = load_model(name)?;
            let species = model
                .species_index(&args.species)
                .ok_or_else(|| CliError::Usage(format!("species `{}` is not in model {name}", args.species)))?;
            Some(
                control_pair_emd(&model, args.at, species, n, (args.seed, args.seed.wrapping_add(1)))
                    .map_err(core_error)?,
            )
        }
        None => None,
    };
    let report = TransientReport {
        format: REPORT_FORMAT,
        version: 1,
        t: args.at,
        species: args.species.clone(),
        inputs,
        emd: emd_value,
        mean_difference,
        emd_control,
        control_runs: args.control,
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    write_output(&dir.join("report.json"), &(text + "\n"))?;
    for input in &report.inputs {
        println!(
            "{}: {} runs, mean {} = {:.4}",
            input.archive, input.runs, args.species, input.mean
        );
    }
    if let Some(d) = report.emd {
        println!("emd = {d:.6}");
    }
    if let Some(d) = report.emd_control {
        println!("control emd = {d:.6}");
    }
    Ok(())
}
