//! Incremental satisfiability sessions over feature models.

mod engine;

use std::collections::HashMap;
use std::io::{self, Write};

pub use engine::{Engine, EngineStats, Lit, Var};

use crate::extfm::{Configuration, Product};
use crate::formula::{to_cnf, ClauseSet, CnfVar, FeatureName, FeatureSet, PropFM};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SessionStats {
    pub solve_calls: u64,
    pub clauses_added: u64,
    pub aux_vars: u64,
}

/// A solver session whose clause store only grows.
///
/// Feature variables are registered once per name; encoding auxiliaries come
/// from a separate pool and never surface in products.
pub struct SolverSession {
    engine: Engine,
    features: HashMap<FeatureName, Var>,
    /// Feature name per engine variable, `None` for auxiliaries.
    names: Vec<Option<FeatureName>>,
    /// Every clause as asserted, for DIMACS dumps.
    log: Vec<Vec<Lit>>,
    stats: SessionStats,
}

impl SolverSession {
    pub fn new(seed: u64) -> Self {
        SolverSession {
            engine: Engine::new(seed),
            features: HashMap::new(),
            names: Vec::new(),
            log: Vec::new(),
            stats: SessionStats::default(),
        }
    }

    pub fn stats(&self) -> SessionStats {
        self.stats
    }

    pub fn engine_stats(&self) -> EngineStats {
        self.engine.stats()
    }

    pub fn feature_count(&self) -> usize {
        self.features.len()
    }

    pub fn is_registered(&self, name: &FeatureName) -> bool {
        self.features.contains_key(name)
    }

    pub fn register(&mut self, name: &FeatureName) -> Var {
        if let Some(&v) = self.features.get(name) {
            return v;
        }
        let v = self.engine.new_var();
        self.names.push(Some(name.clone()));
        self.features.insert(name.clone(), v);
        v
    }

    fn fresh_aux(&mut self) -> Var {
        self.stats.aux_vars += 1;
        self.names.push(None);
        self.engine.new_var()
    }

    /// Adds an already encoded clause set, mapping its auxiliaries to fresh
    /// variables.
    pub fn add_clause_set(&mut self, cnf: &ClauseSet) {
        let map: Vec<Var> = cnf
            .vars()
            .iter()
            .map(|v| match v {
                CnfVar::Feature(name) => self.register(name),
                CnfVar::Aux(_) => self.fresh_aux(),
            })
            .collect();
        for clause in cnf.clauses() {
            let lits: Vec<Lit> = clause
                .iter()
                .map(|l| Lit::new(map[l.var], l.positive))
                .collect();
            self.stats.clauses_added += 1;
            self.engine.add_clause(&lits);
            self.log.push(lits);
        }
    }

    /// Registers the model's features and asserts its constraint.
    pub fn assert_fm(&mut self, fm: &PropFM) {
        for f in fm.features() {
            self.register(f);
        }
        self.add_clause_set(&to_cnf(fm.constraint()));
    }

    /// A product of the asserted models over `fm_features` containing `c`,
    /// or `None` if there is none. Requested features are registered on the
    /// fly; the assumptions used to force them leave no trace in the store.
    pub fn select(&mut self, fm_features: &FeatureSet, c: &Configuration) -> Option<Product> {
        let assumptions: Vec<Lit> = c.iter().map(|f| Lit::new(self.register(f), true)).collect();
        self.stats.solve_calls += 1;
        if !self.engine.solve(&assumptions) {
            return None;
        }
        Some(
            fm_features
                .iter()
                .filter(|f| {
                    self.features
                        .get(*f)
                        .is_some_and(|&v| self.engine.model_value(v))
                })
                .cloned()
                .collect(),
        )
    }

    /// Writes the asserted clauses in DIMACS CNF. A comment block maps
    /// feature names to variable indices.
    pub fn write_dimacs(&self, out: &mut impl Write) -> io::Result<()> {
        let mut named: Vec<(usize, &FeatureName)> = self
            .names
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.as_ref().map(|n| (i + 1, n)))
            .collect();
        named.sort();
        for (i, name) in named {
            writeln!(out, "c {i} {name}")?;
        }
        writeln!(out, "p cnf {} {}", self.names.len(), self.log.len())?;
        for clause in &self.log {
            for l in clause {
                write!(out, "{} ", l.to_dimacs())?;
            }
            writeln!(out, "0")?;
        }
        Ok(())
    }
}
