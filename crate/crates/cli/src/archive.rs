//! Run archives: one CSV file holding every recorded seam of an ensemble.
//!
//! ```text
//! # segsim-archive v1 model=PP method=segmental c=2 k=100 seed=7 runs=2 t_end=200 recording=full
//! run,terminal,time,Pred,Prey
//! 0,horizon,0,200,200
//! ...
//! ```
//!
//! For `method=abstract` the species columns hold interval levels.

use std::fmt;
use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use segsim::{Recording, Seam, State, Terminal, Trajectory};

use crate::error::{CliError, CliResult};

pub const ARCHIVE_FORMAT: &str = "segsim-archive";
pub const ARCHIVE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Ssa,
    Segmental,
    Abstract,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ssa => "ssa",
            Method::Segmental => "segmental",
            Method::Abstract => "abstract",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "ssa" => Some(Method::Ssa),
            "segmental" => Some(Method::Segmental),
            "abstract" => Some(Method::Abstract),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveHeader {
    pub model: String,
    pub method: Method,
    /// Abstraction parameters; absent for SSA archives.
    pub c: Option<f64>,
    pub k: Option<usize>,
    pub seed: u64,
    pub runs: usize,
    pub t_end: f64,
    pub recording: Recording,
    pub species: Vec<String>,
}

impl ArchiveHeader {
    fn line(&self) -> String {
        let mut s = format!(
            "# {ARCHIVE_FORMAT} v{ARCHIVE_VERSION} model={} method={}",
            self.model, self.method
        );
        if let Some(c) = self.c {
            s.push_str(&format!(" c={c}"));
        }
        if let Some(k) = self.k {
            s.push_str(&format!(" k={k}"));
        }
        s.push_str(&format!(
            " seed={} runs={} t_end={} recording={}",
            self.seed, self.runs, self.t_end, self.recording
        ));
        s
    }

    fn parse(line: &str, species: Vec<String>) -> CliResult<Self> {
        let bad = |msg: String| CliError::Format(format!("archive header: {msg}"));
        let mut tokens = line
            .strip_prefix('#')
            .ok_or_else(|| bad("missing header line".into()))?
            .split_whitespace();
        if tokens.next() != Some(ARCHIVE_FORMAT) {
            return Err(bad(format!("not a {ARCHIVE_FORMAT} file")));
        }
        let version = tokens.next().unwrap_or_default();
        if version != format!("v{ARCHIVE_VERSION}") {
            return Err(bad(format!("unsupported version `{version}`")));
        }
        let (mut model, mut method, mut c, mut k, mut seed, mut runs, mut t_end, mut recording) =
            (None, None, None, None, None, None, None, None);
        for tok in tokens {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| bad(format!("malformed field `{tok}`")))?;
            let num = |what: &str| bad(format!("invalid {what} `{value}`"));
            match key {
                "model" => model = Some(value.to_string()),
                "method" => method = Some(Method::parse(value).ok_or_else(|| num("method"))?),
                "c" => c = Some(value.parse::<f64>().map_err(|_| num("c"))?),
                "k" => k = Some(value.parse::<usize>().map_err(|_| num("k"))?),
                "seed" => seed = Some(value.parse::<u64>().map_err(|_| num("seed"))?),
                "runs" => runs = Some(value.parse::<usize>().map_err(|_| num("runs"))?),
                "t_end" => t_end = Some(value.parse::<f64>().map_err(|_| num("t_end"))?),
                "recording" => recording = Some(Recording::parse(value).map_err(|_| num("recording"))?),
                _ => return Err(bad(format!("unknown field `{key}`"))),
            }
        }
        let need = |name: &str| bad(format!("missing field `{name}`"));
        let method = method.ok_or_else(|| need("method"))?;
        if method != Method::Ssa && (c.is_none() || k.is_none()) {
            return Err(bad("abstraction parameters c and k are required".into()));
        }
        Ok(ArchiveHeader {
            model: model.ok_or_else(|| need("model"))?,
            method,
            c,
            k,
            seed: seed.ok_or_else(|| need("seed"))?,
            runs: runs.ok_or_else(|| need("runs"))?,
            t_end: t_end.ok_or_else(|| need("t_end"))?,
            recording: recording.ok_or_else(|| need("recording"))?,
            species,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchivedRun {
    pub terminal: Terminal,
    pub seams: Vec<Seam>,
}

impl Trajectory for ArchivedRun {
    fn seams(&self) -> &[Seam] {
        &self.seams
    }

    fn terminal(&self) -> Terminal {
        self.terminal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunArchive {
    pub header: ArchiveHeader,
    pub runs: Vec<ArchivedRun>,
}

impl RunArchive {
    pub fn write_to<W: Write>(&self, mut out: W) -> CliResult<()> {
        let io = |e: std::io::Error| CliError::io("writing archive", e);
        writeln!(out, "{}", self.header.line()).map_err(io)?;
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| CliError::Format(format!("writing archive: {e}"));
        let mut row: Vec<String> = vec!["run".into(), "terminal".into(), "time".into()];
        row.extend(self.header.species.iter().cloned());
        w.write_record(&row).map_err(csv_err)?;
        for (i, run) in self.runs.iter().enumerate() {
            let (idx, terminal) = (i.to_string(), run.terminal.as_str());
            for seam in &run.seams {
                row.clear();
                row.push(idx.clone());
                row.push(terminal.to_string());
                row.push(seam.time.to_string());
                row.extend(seam.state.counts().iter().map(u64::to_string));
                w.write_record(&row).map_err(csv_err)?;
            }
        }
        w.flush().map_err(io)
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let file = std::fs::File::create(path).map_err(|e| CliError::io(format!("creating {}", path.display()), e))?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let (first, body) = text.split_once('\n').unwrap_or((text, ""));
        let bad = |msg: String| CliError::Format(format!("archive: {msg}"));
        let mut reader = csv::ReaderBuilder::new().from_reader(body.as_bytes());
        let columns = reader
            .headers()
            .map_err(|e| bad(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect::<Vec<_>>();
        if columns.len() < 4 || columns[..3] != ["run", "terminal", "time"] {
            return Err(bad("expected columns run,terminal,time,<species>...".into()));
        }
        let header = ArchiveHeader::parse(first.trim_end(), columns[3..].to_vec())?;
        let mut runs: Vec<ArchivedRun> = Vec::with_capacity(header.runs);
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| bad(e.to_string()))?;
            let at = |msg: &str| bad(format!("row {}: {msg}", line + 1));
            let run: usize = record[0].parse().map_err(|_| at("invalid run index"))?;
            let terminal = match &record[1] {
                "horizon" => Terminal::Horizon,
                "deadlock" => Terminal::Deadlock,
                "bound" => Terminal::Bound,
                _ => return Err(at("invalid terminal")),
            };
            let time: f64 = record[2].parse().map_err(|_| at("invalid time"))?;
            let counts = record
                .iter()
                .skip(3)
                .map(|v| v.parse::<u64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| at("invalid count"))?;
            if run == runs.len() {
                runs.push(ArchivedRun {
                    terminal,
                    seams: Vec::new(),
                });
            } else if run + 1 != runs.len() {
                return Err(at("runs must be contiguous and in order"));
            }
            let current = runs.last_mut().expect("pushed above");
            if current.terminal != terminal {
                return Err(at("terminal changes within a run"));
            }
            if current.seams.last().is_some_and(|s| s.time > time) {
                return Err(at("seam times must not decrease"));
            }
            current.seams.push(Seam {
                state: State(counts),
                time,
            });
        }
        if runs.len() != header.runs {
            return Err(bad(format!(
                "header announces {} runs, found {}",
                header.runs,
                runs.len()
            )));
        }
        Ok(RunArchive { header, runs })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::parse(&crate::error::read_input(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunArchive {
        RunArchive {
            header: ArchiveHeader {
                model: "PP".into(),
                method: Method::Segmental,
                c: Some(1.5),
                k: Some(100),
                seed: 7,
                runs: 2,
                t_end: 200.0,
                recording: Recording::Full,
                species: vec!["Pred".into(), "Prey".into()],
            },
            runs: vec![
                ArchivedRun {
                    terminal: Terminal::Horizon,
                    seams: vec![
                        Seam {
                            state: State(vec![200, 200]),
                            time: 0.0,
                        },
                        Seam {
                            state: State(vec![150, 260]),
                            time: 0.1 + 0.2,
                        },
                    ],
                },
                ArchivedRun {
                    terminal: Terminal::Deadlock,
                    seams: vec![Seam {
                        state: State(vec![0, 0]),
                        time: 0.0,
                    }],
                },
            ],
        }
    }

    fn text(a: &RunArchive) -> String {
        let mut buf = Vec::new();
        a.write_to(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let a = sample();
        let t = text(&a);
        assert!(t.starts_with("# segsim-archive v1 model=PP method=segmental c=1.5 k=100 seed=7"));
        let back = RunArchive::parse(&t).unwrap();
        assert_eq!(back, a);
        assert_eq!(text(&back), t);
    }

    #[test]
    fn ssa_header_omits_abstraction() {
        let mut a = sample();
        a.header.method = Method::Ssa;
        a.header.c = None;
        a.header.k = None;
        let t = text(&a);
        assert!(!t.lines().next().unwrap().contains("c="));
        assert_eq!(RunArchive::parse(&t).unwrap(), a);
    }

    #[test]
    fn malformed_archives_are_format_errors() {
        let good = text(&sample());
        let cases = [
            good.replacen("segsim-archive", "other", 1),
            good.replacen("v1", "v9", 1),
            good.replacen("runs=2", "runs=3", 1),
            good.replacen("0,horizon,0.30000000000000004", "0,deadlock,0.30000000000000004", 1),
            good.replacen("150,260", "150,x", 1),
            good.replacen(" c=1.5", "", 1),
            String::new(),
        ];
        for case in cases {
            assert!(matches!(RunArchive::parse(&case), Err(CliError::Format(_))), "{case}");
        }
    }
}
