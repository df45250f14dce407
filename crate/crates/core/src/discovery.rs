//! Lazy product discovery and the load-everything baseline.
//!
//! The lazy loop keeps a set `Y` of examined features, starting from the
//! request. Each round composes a cut of every fragment for `Y`, asks the
//! solver for a product containing the request, and stops once that product
//! lies inside `Y` (it is then a product of the full composition) or none
//! exists (then the full composition has none either). Otherwise the
//! product's features join `Y` and the round repeats.
//!
//! With guarded fragments the cut is either the whole fragment (guard in
//! `Y`) or constraint-free, and since `Y` only grows, a fragment's clauses
//! are asserted once into a single incremental session.

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::extfm::{compose_all, enumerate_products, Configuration, ExtError, Product, ENUMERATION_CAP};
use crate::formula::{FeatureName, FeatureSet};
use crate::fragments::{load_fragment, minimum_cut, CutStrategy, Fragment, RepoError, RepositoryIndex};
use crate::solver::SolverSession;

#[derive(Debug, Error)]
pub enum DiscoveryError {
    #[error("unknown request features: {}", .0.iter().map(FeatureName::as_str).collect::<Vec<_>>().join(", "))]
    UnknownFeatures(Vec<FeatureName>),
    #[error(transparent)]
    Repo(#[from] RepoError),
    #[error("fragment `{id}`: {source}")]
    Cut { id: String, source: ExtError },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DiscoveryOptions {
    pub strategy: CutStrategy,
    pub seed: u64,
    /// Record a state snapshot per round and check loop invariants on it.
    pub debug_invariants: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Found(Product),
    NoProduct,
}

impl Outcome {
    pub fn is_found(&self) -> bool {
        matches!(self, Outcome::Found(_))
    }

    pub fn product(&self) -> Option<&Product> {
        match self {
            Outcome::Found(p) => Some(p),
            Outcome::NoProduct => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DiscoveryStats {
    pub iterations: usize,
    pub fragments_loaded: usize,
    pub features_loaded: usize,
    pub total_features: usize,
    pub solver_calls: u64,
    pub wall: Duration,
}

impl DiscoveryStats {
    pub fn wall_ms(&self) -> f64 {
        self.wall.as_secs_f64() * 1e3
    }
}

/// Loop state at one point of a lazy run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DiscoveryState {
    pub examined: FeatureSet,
    pub loaded: BTreeSet<String>,
    pub composed_features: FeatureSet,
    pub solution: Option<Product>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Inv1: the request is not contained in the examined features.
    RequestNotExamined(FeatureSet),
    ExaminedShrank(FeatureSet),
    LoadedShrank(BTreeSet<String>),
    /// The loop exited with a solution outside the examined features.
    SolutionNotExamined(FeatureSet),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscoveryResult {
    pub outcome: Outcome,
    pub stats: DiscoveryStats,
    /// Snapshots after initialization and after each round; debug mode only.
    pub trace: Vec<DiscoveryState>,
    pub violations: Vec<Violation>,
}

/// Checks the loop invariants that hold by construction: the request stays
/// examined, `Y` and the loaded set never shrink, and at exit a found
/// solution lies inside `Y`.
pub fn check_invariants(
    state: &DiscoveryState,
    c: &Configuration,
    previous: Option<&DiscoveryState>,
    at_exit: bool,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let missing: FeatureSet = c.difference(&state.examined).cloned().collect();
    if !missing.is_empty() {
        out.push(Violation::RequestNotExamined(missing));
    }
    if let Some(prev) = previous {
        let lost: FeatureSet = prev.examined.difference(&state.examined).cloned().collect();
        if !lost.is_empty() {
            out.push(Violation::ExaminedShrank(lost));
        }
        let lost: BTreeSet<String> = prev.loaded.difference(&state.loaded).cloned().collect();
        if !lost.is_empty() {
            out.push(Violation::LoadedShrank(lost));
        }
    }
    if at_exit {
        if let Some(sol) = &state.solution {
            let outside: FeatureSet = sol.difference(&state.examined).cloned().collect();
            if !outside.is_empty() {
                out.push(Violation::SolutionNotExamined(outside));
            }
        }
    }
    out
}

fn check_request(idx: &RepositoryIndex, c: &Configuration) -> Result<(), DiscoveryError> {
    let unknown: Vec<FeatureName> = c.iter().filter(|f| !idx.declares(f)).cloned().collect();
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(DiscoveryError::UnknownFeatures(unknown))
    }
}

/// One discovery run over a repository; keeps the solver session of the
/// last run for inspection.
pub struct Discovery<'a> {
    idx: &'a RepositoryIndex,
    opts: DiscoveryOptions,
    session: SolverSession,
}

struct LazyRun<'r, 'a> {
    d: &'r mut Discovery<'a>,
    c: &'r Configuration,
    examined: FeatureSet,
    loaded: Vec<bool>,
    loaded_ids: BTreeSet<String>,
    cache: HashMap<usize, Fragment>,
    loaded_features: FeatureSet,
    composed: FeatureSet,
    solver_calls: u64,
}

impl LazyRun<'_, '_> {
    /// Loads the fragment at `pos` if needed; returns whether it was new.
    fn load(&mut self, pos: usize) -> Result<bool, DiscoveryError> {
        if self.loaded[pos] {
            return Ok(false);
        }
        let idx = self.d.idx;
        let entry = &idx.entries()[pos];
        let frag = load_fragment(idx, &entry.id)?;
        self.loaded[pos] = true;
        self.loaded_ids.insert(entry.id.clone());
        self.loaded_features.extend(frag.fm.features().iter().cloned());
        self.composed.extend(frag.fm.features().iter().cloned());
        match self.d.opts.strategy {
            CutStrategy::FullOrTrivial => self.d.session.assert_fm(&frag.fm),
            CutStrategy::Minimum => {
                self.cache.insert(pos, frag);
            }
        }
        Ok(true)
    }

    /// Loads every fragment whose cut for the current `Y` is non-trivial.
    fn load_triggered(&mut self, newly: impl IntoIterator<Item = FeatureName>) -> Result<(), DiscoveryError> {
        let idx = self.d.idx;
        for f in newly {
            for &pos in idx.guarded_by(&f) {
                self.load(pos)?;
            }
        }
        Ok(())
    }

    fn select(&mut self) -> Result<Option<Product>, DiscoveryError> {
        self.solver_calls += 1;
        if self.d.opts.strategy == CutStrategy::Minimum {
            // minimum cuts change with Y, so rebuild the composition
            let mut session = SolverSession::new(self.d.opts.seed);
            let mut positions: Vec<&usize> = self.cache.keys().collect();
            positions.sort();
            for pos in positions {
                let frag = &self.cache[pos];
                let cut = minimum_cut(frag, &self.examined).map_err(|source| DiscoveryError::Cut {
                    id: frag.id.clone(),
                    source,
                })?;
                session.assert_fm(&cut.fm);
            }
            self.d.session = session;
        }
        Ok(self.d.session.select(&self.composed, self.c))
    }

    fn snapshot(&self, solution: Option<&Product>) -> DiscoveryState {
        DiscoveryState {
            examined: self.examined.clone(),
            loaded: self.loaded_ids.clone(),
            composed_features: self.composed.clone(),
            solution: solution.cloned(),
        }
    }
}

impl<'a> Discovery<'a> {
    pub fn new(idx: &'a RepositoryIndex, opts: DiscoveryOptions) -> Self {
        Discovery {
            idx,
            opts,
            session: SolverSession::new(opts.seed),
        }
    }

    pub fn session(&self) -> &SolverSession {
        &self.session
    }

    pub fn lazy(&mut self, c: &Configuration) -> Result<DiscoveryResult, DiscoveryError> {
        check_request(self.idx, c)?;
        let start = Instant::now();
        self.session = SolverSession::new(self.opts.seed);
        let debug = self.opts.debug_invariants;
        let idx = self.idx;
        let mut run = LazyRun {
            d: self,
            c,
            examined: c.clone(),
            loaded: vec![false; idx.len()],
            loaded_ids: BTreeSet::new(),
            cache: HashMap::new(),
            loaded_features: FeatureSet::new(),
            composed: c.clone(),
            solver_calls: 0,
        };
        for (pos, entry) in idx.entries().iter().enumerate() {
            if entry.guard.is_none() {
                run.load(pos)?;
            }
        }
        run.load_triggered(c.iter().cloned())?;

        let mut trace = Vec::new();
        let mut violations = Vec::new();
        if debug {
            let s = run.snapshot(None);
            violations.extend(check_invariants(&s, c, None, false));
            trace.push(s);
        }

        let mut iterations = 0;
        let outcome = loop {
            let solution = run.select()?;
            let done = match &solution {
                None => true,
                Some(p) => p.is_subset(&run.examined),
            };
            if debug {
                let s = run.snapshot(solution.as_ref());
                violations.extend(check_invariants(&s, c, trace.last(), done));
                trace.push(s);
            }
            match solution {
                None => break Outcome::NoProduct,
                Some(p) if done => break Outcome::Found(p),
                Some(p) => {
                    iterations += 1;
                    let newly: Vec<FeatureName> = p.difference(&run.examined).cloned().collect();
                    run.examined.extend(newly.iter().cloned());
                    run.composed.extend(newly.iter().cloned());
                    run.load_triggered(newly)?;
                }
            }
        };

        let stats = DiscoveryStats {
            iterations,
            fragments_loaded: run.loaded_ids.len(),
            features_loaded: run.loaded_features.len(),
            total_features: idx.total_features(),
            solver_calls: run.solver_calls,
            wall: start.elapsed(),
        };
        Ok(DiscoveryResult {
            outcome,
            stats,
            trace,
            violations,
        })
    }

    /// Loads and asserts every fragment, then solves once.
    pub fn eager(&mut self, c: &Configuration) -> Result<DiscoveryResult, DiscoveryError> {
        check_request(self.idx, c)?;
        let start = Instant::now();
        self.session = SolverSession::new(self.opts.seed);
        for entry in self.idx.entries() {
            let frag = load_fragment(self.idx, &entry.id)?;
            self.session.assert_fm(&frag.fm);
        }
        let all = self.idx.all_features();
        let outcome = match self.session.select(&all, c) {
            Some(p) => Outcome::Found(p),
            None => Outcome::NoProduct,
        };
        let stats = DiscoveryStats {
            iterations: 0,
            fragments_loaded: self.idx.len(),
            features_loaded: all.len(),
            total_features: all.len(),
            solver_calls: 1,
            wall: start.elapsed(),
        };
        Ok(DiscoveryResult {
            outcome,
            stats,
            trace: Vec::new(),
            violations: Vec::new(),
        })
    }
}

pub fn lazy_discover(
    idx: &RepositoryIndex,
    c: &Configuration,
    opts: DiscoveryOptions,
) -> Result<DiscoveryResult, DiscoveryError> {
    Discovery::new(idx, opts).lazy(c)
}

pub fn eager_discover(
    idx: &RepositoryIndex,
    c: &Configuration,
    opts: DiscoveryOptions,
) -> Result<DiscoveryResult, DiscoveryError> {
    Discovery::new(idx, opts).eager(c)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verification {
    Confirmed,
    Refuted(String),
    /// The repository is too large to enumerate.
    Skipped(String),
}

/// Checks a result against the extensional composition of every fragment.
pub fn verify_result(
    idx: &RepositoryIndex,
    c: &Configuration,
    outcome: &Outcome,
) -> Result<Verification, DiscoveryError> {
    if let Outcome::Found(p) = outcome {
        if !c.is_subset(p) {
            return Ok(Verification::Refuted(
                "product does not contain the request".into(),
            ));
        }
    }
    let total = idx.total_features();
    if total > ENUMERATION_CAP {
        return Ok(Verification::Skipped(format!(
            "{total} features exceed the enumeration cap of {ENUMERATION_CAP}"
        )));
    }
    let mut models = Vec::with_capacity(idx.len());
    for entry in idx.entries() {
        let frag = load_fragment(idx, &entry.id)?;
        models.push(enumerate_products(&frag.fm).map_err(|source| DiscoveryError::Cut {
            id: entry.id.clone(),
            source,
        })?);
    }
    let full = compose_all(&models);
    Ok(match outcome {
        Outcome::Found(p) if full.contains(p) => Verification::Confirmed,
        Outcome::Found(_) => Verification::Refuted("not a product of the full composition".into()),
        Outcome::NoProduct => match full.products().iter().find(|p| c.is_subset(p)) {
            None => Verification::Confirmed,
            Some(p) => Verification::Refuted(format!(
                "a product exists: {{{}}}",
                p.iter().map(FeatureName::as_str).collect::<Vec<_>>().join(", ")
            )),
        },
    })
}
