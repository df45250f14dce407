//! Batch discovery runs reported as CSV rows.

use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::discovery::{eager_discover, lazy_discover, DiscoveryError, DiscoveryOptions, DiscoveryResult};
use crate::extfm::Configuration;
use crate::formula::{FeatureName, FormulaError};
use crate::fragments::RepositoryIndex;

pub const CSV_HEADER: &str =
    "problem_id,mode,found,iterations,fragments_loaded,features_loaded,total_features,solver_calls,wall_ms";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown mode `{0}` (expected `lazy` or `eager`)")]
    UnknownMode(String),
    #[error("{}: line {line}: {source}", path.display())]
    Problem {
        path: PathBuf,
        line: usize,
        source: FormulaError,
    },
    #[error("problem {problem}: {source}")]
    Discovery {
        problem: usize,
        source: DiscoveryError,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Lazy,
    Eager,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Lazy => "lazy",
            Mode::Eager => "eager",
        })
    }
}

impl FromStr for Mode {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lazy" => Ok(Mode::Lazy),
            "eager" => Ok(Mode::Eager),
            other => Err(BenchError::UnknownMode(other.to_string())),
        }
    }
}

impl Mode {
    pub fn run(
        self,
        idx: &RepositoryIndex,
        c: &Configuration,
        opts: DiscoveryOptions,
    ) -> Result<DiscoveryResult, DiscoveryError> {
        match self {
            Mode::Lazy => lazy_discover(idx, c, opts),
            Mode::Eager => eager_discover(idx, c, opts),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub problem_id: usize,
    pub mode: Mode,
    pub found: bool,
    pub iterations: usize,
    pub fragments_loaded: usize,
    pub features_loaded: usize,
    pub total_features: usize,
    pub solver_calls: u64,
    pub wall_ms: f64,
}

impl BenchRow {
    pub fn new(problem_id: usize, mode: Mode, result: &DiscoveryResult) -> Self {
        let s = &result.stats;
        BenchRow {
            problem_id,
            mode,
            found: result.outcome.is_found(),
            iterations: s.iterations,
            fragments_loaded: s.fragments_loaded,
            features_loaded: s.features_loaded,
            total_features: s.total_features,
            solver_calls: s.solver_calls,
            wall_ms: s.wall_ms(),
        }
    }
}

impl fmt::Display for BenchRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{},{},{},{:.3}",
            self.problem_id,
            self.mode,
            self.found,
            self.iterations,
            self.fragments_loaded,
            self.features_loaded,
            self.total_features,
            self.solver_calls,
            self.wall_ms
        )
    }
}

/// Parses a comma-separated feature list; blank entries are ignored.
pub fn parse_request(text: &str) -> Result<Configuration, FormulaError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(FeatureName::new)
        .collect()
}

/// One request per line; blank lines and `#` comments are skipped.
pub fn parse_problems(path: &Path, text: &str) -> Result<Vec<Configuration>, BenchError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse_request(line).map_err(|source| BenchError::Problem {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?);
    }
    Ok(out)
}

/// Runs every (problem, mode) pair on up to `jobs` threads and writes the
/// header plus one row per pair to `out`, in problem order then mode order.
pub fn run_bench(
    idx: &RepositoryIndex,
    problems: &[Configuration],
    modes: &[Mode],
    opts: DiscoveryOptions,
    jobs: usize,
    out: &mut impl Write,
) -> Result<Vec<BenchRow>, BenchError> {
    let slots: Vec<Mutex<Option<Result<Vec<BenchRow>, BenchError>>>> =
        problems.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        let Some(c) = problems.get(i) else { break };
        let rows = modes
            .iter()
            .map(|&mode| {
                mode.run(idx, c, opts)
                    .map(|r| BenchRow::new(i, mode, &r))
                    .map_err(|source| BenchError::Discovery { problem: i, source })
            })
            .collect();
        *slots[i].lock().expect("slot lock") = Some(rows);
    };
    let jobs = jobs.clamp(1, problems.len().max(1));
    if jobs == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..jobs {
                s.spawn(work);
            }
        });
    }
    writeln!(out, "{CSV_HEADER}")?;
    let mut all = Vec::new();
    for slot in slots {
        let rows = slot.into_inner().expect("slot lock").expect("every problem ran")?;
        for row in &rows {
            writeln!(out, "{row}")?;
        }
        all.extend(rows);
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::feature_set;
    use crate::gen::chain_fragments;

    #[test]
    fn modes() {
        assert_eq!("lazy".parse::<Mode>().unwrap(), Mode::Lazy);
        assert_eq!(Mode::Eager.to_string(), "eager");
        assert!(matches!("fast".parse::<Mode>(), Err(BenchError::UnknownMode(_))));
    }

    #[test]
    fn problems_file() {
        let p = Path::new("p.txt");
        let probs = parse_problems(p, "# c\n\na, b\nc\n").unwrap();
        assert_eq!(probs, vec![feature_set(["a", "b"]), feature_set(["c"])]);
        assert!(matches!(parse_problems(p, "ok\nbad name\n"), Err(BenchError::Problem { line: 2, .. })));
    }

    #[test]
    fn row_format() {
        let row = BenchRow {
            problem_id: 3,
            mode: Mode::Lazy,
            found: true,
            iterations: 2,
            fragments_loaded: 4,
            features_loaded: 9,
            total_features: 20,
            solver_calls: 3,
            wall_ms: 1.23456,
        };
        assert_eq!(row.to_string(), "3,lazy,true,2,4,9,20,3,1.235");
    }

    #[test]
    fn ordered_parallel_output() {
        let idx = RepositoryIndex::from_fragments(chain_fragments(5, 30)).unwrap();
        let problems: Vec<_> = (0..12)
            .map(|i| feature_set([format!("other{i}")]))
            .chain([feature_set(["chain0"])])
            .collect();
        let mut serial = Vec::new();
        let mut parallel = Vec::new();
        let opts = DiscoveryOptions::default();
        let a = run_bench(&idx, &problems, &[Mode::Lazy, Mode::Eager], opts, 1, &mut serial).unwrap();
        let b = run_bench(&idx, &problems, &[Mode::Lazy, Mode::Eager], opts, 4, &mut parallel).unwrap();
        assert_eq!(a.len(), 26);
        let key = |r: &BenchRow| (r.problem_id, r.mode, r.found, r.fragments_loaded, r.features_loaded);
        assert_eq!(a.iter().map(key).collect::<Vec<_>>(), b.iter().map(key).collect::<Vec<_>>());
        assert_eq!(a[24].fragments_loaded, 6);
        let text = String::from_utf8(parallel).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert_eq!(text.lines().count(), 27);
    }

    #[test]
    fn no_problems_gives_header_only() {
        let idx = RepositoryIndex::default();
        let mut out = Vec::new();
        run_bench(&idx, &[], &[Mode::Lazy], DiscoveryOptions::default(), 8, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), format!("{CSV_HEADER}\n"));
    }
}
