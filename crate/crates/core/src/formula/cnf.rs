use std::collections::HashMap;
use std::fmt;

use super::{FeatureName, Formula};

/// A clause-set variable: either a feature or an encoding auxiliary.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CnfVar {
    Feature(FeatureName),
    Aux(u32),
}

impl CnfVar {
    pub fn is_aux(&self) -> bool {
        matches!(self, CnfVar::Aux(_))
    }
}

impl fmt::Display for CnfVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CnfVar::Feature(name) => write!(f, "{name}"),
            CnfVar::Aux(n) => write!(f, "@aux/{n}"),
        }
    }
}

/// A literal over the variable table of a [`ClauseSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CnfLit {
    pub var: usize,
    pub positive: bool,
}

impl std::ops::Not for CnfLit {
    type Output = CnfLit;

    fn not(self) -> CnfLit {
        CnfLit {
            var: self.var,
            positive: !self.positive,
        }
    }
}

/// Clauses over a local variable table. Auxiliary variables are numbered
/// from zero within each set; consumers map them to fresh variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClauseSet {
    vars: Vec<CnfVar>,
    clauses: Vec<Vec<CnfLit>>,
}

impl ClauseSet {
    pub fn vars(&self) -> &[CnfVar] {
        &self.vars
    }

    pub fn clauses(&self) -> &[Vec<CnfLit>] {
        &self.clauses
    }

    pub fn aux_count(&self) -> usize {
        self.vars.iter().filter(|v| v.is_aux()).count()
    }

    /// Whether the clauses hold under `value`, which must cover every
    /// variable index of the table.
    pub fn satisfied_by(&self, value: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| value[l.var] == l.positive))
    }
}

struct Encoder {
    out: ClauseSet,
    features: HashMap<FeatureName, usize>,
    aux: u32,
}

impl Encoder {
    fn feature(&mut self, name: &FeatureName) -> usize {
        if let Some(&i) = self.features.get(name) {
            return i;
        }
        let i = self.out.vars.len();
        self.out.vars.push(CnfVar::Feature(name.clone()));
        self.features.insert(name.clone(), i);
        i
    }

    fn fresh(&mut self) -> usize {
        let i = self.out.vars.len();
        self.out.vars.push(CnfVar::Aux(self.aux));
        self.aux += 1;
        i
    }

    fn pos(var: usize) -> CnfLit {
        CnfLit {
            var,
            positive: true,
        }
    }

    /// Literal equivalent to `f`; `f` must be constant-free.
    fn literal(&mut self, f: &Formula) -> CnfLit {
        match f {
            Formula::Var(x) => Self::pos(self.feature(x)),
            Formula::Not(g) => !self.literal(g),
            Formula::And(l, r) => {
                let (a, b) = (self.literal(l), self.literal(r));
                let t = Self::pos(self.fresh());
                self.out.clauses.push(vec![!t, a]);
                self.out.clauses.push(vec![!t, b]);
                self.out.clauses.push(vec![t, !a, !b]);
                t
            }
            Formula::Or(l, r) => {
                let (a, b) = (self.literal(l), self.literal(r));
                self.gate_or(a, b)
            }
            Formula::Implies(l, r) => {
                let (a, b) = (self.literal(l), self.literal(r));
                self.gate_or(!a, b)
            }
            Formula::Const(_) => unreachable!("constants are folded before encoding"),
        }
    }

    fn gate_or(&mut self, a: CnfLit, b: CnfLit) -> CnfLit {
        let t = Self::pos(self.fresh());
        self.out.clauses.push(vec![!t, a, b]);
        self.out.clauses.push(vec![t, !a]);
        self.out.clauses.push(vec![t, !b]);
        t
    }

    fn disjuncts(&mut self, f: &Formula, clause: &mut Vec<CnfLit>) {
        match f {
            Formula::Or(l, r) => {
                self.disjuncts(l, clause);
                self.disjuncts(r, clause);
            }
            Formula::Implies(l, r) => {
                let a = self.literal(l);
                clause.push(!a);
                self.disjuncts(r, clause);
            }
            other => {
                let l = self.literal(other);
                clause.push(l);
            }
        }
    }

    fn assert_top(&mut self, f: &Formula) {
        match f {
            Formula::And(l, r) => {
                self.assert_top(l);
                self.assert_top(r);
            }
            Formula::Const(true) => {}
            Formula::Const(false) => self.out.clauses.push(Vec::new()),
            other => {
                let mut clause = Vec::new();
                self.disjuncts(other, &mut clause);
                self.out.clauses.push(clause);
            }
        }
    }
}

/// Tseitin-style encoding.
///
/// Top-level conjunctions are split and top-level disjunctions and
/// implications become single clauses; nested connectives get a fresh
/// auxiliary with full equivalence clauses. Every feature assignment
/// satisfying the formula extends to exactly one model of the clause set,
/// so models projected onto feature variables are the formula's models.
pub fn to_cnf(f: &Formula) -> ClauseSet {
    let mut enc = Encoder {
        out: ClauseSet::default(),
        features: HashMap::new(),
        aux: 0,
    };
    enc.assert_top(&f.fold_constants());
    enc.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    fn cnf(src: &str) -> ClauseSet {
        to_cnf(&parse_formula(src).unwrap())
    }

    #[test]
    fn constants() {
        let c = cnf("false");
        assert_eq!(c.clauses(), &[Vec::<CnfLit>::new()]);
        assert!(cnf("true").clauses().is_empty());
        assert!(cnf("a -> true").clauses().is_empty());
    }

    #[test]
    fn single_var() {
        let c = cnf("a");
        assert_eq!(c.vars(), &[CnfVar::Feature(FeatureName::new("a").unwrap())]);
        assert_eq!(
            c.clauses(),
            &[vec![CnfLit {
                var: 0,
                positive: true
            }]]
        );
    }

    #[test]
    fn flat_clause_needs_no_aux() {
        let c = cnf("a -> b | !c");
        assert_eq!(c.aux_count(), 0);
        assert_eq!(c.clauses().len(), 1);
        assert_eq!(c.clauses()[0].len(), 3);
    }

    #[test]
    fn aux_display_namespace() {
        assert_eq!(CnfVar::Aux(3).to_string(), "@aux/3");
        assert!(FeatureName::new(CnfVar::Aux(3).to_string()).is_err());
    }

    #[test]
    fn linear_size() {
        let mut src = String::from("x0");
        for i in 1..200 {
            src = format!("({src}) & (x{i} | !x{})", i - 1);
        }
        let f = parse_formula(&src).unwrap();
        let c = to_cnf(&f);
        assert!(c.clauses().len() <= 3 * f.size());
    }
}
