//! Propositional formulas over feature names.
//!
//! A feature model in propositional form is a pair of a feature set and a
//! constraint. Products are read closed-world: a product `p` corresponds to
//! the assignment that sets exactly the features of `p` to true.

mod cnf;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use cnf::{to_cnf, ClauseSet, CnfLit, CnfVar};
pub use parse::{parse_count, parse_formula, FormulaError};

/// Sorted set of feature names. Products and configurations use this form.
pub type FeatureSet = BTreeSet<FeatureName>;

const RESERVED: [&str; 6] = ["true", "false", "and", "or", "not", "impl"];

/// A validated feature name.
///
/// Names start with `[A-Za-z0-9_]` and continue with `[A-Za-z0-9_:+./@-]`,
/// which admits Gentoo-style `cat/pkg` and `pkg:flag` tokens. Because `@`
/// cannot lead a name, the `@aux/...` namespace used for encoding variables
/// never collides with a feature.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureName(String);

impl FeatureName {
    pub fn new(token: impl Into<String>) -> Result<Self, FormulaError> {
        let token = token.into();
        if !is_valid_name(&token) {
            return Err(FormulaError::InvalidFeatureName(token));
        }
        if is_reserved(&token) {
            return Err(FormulaError::ReservedWord {
                offset: 0,
                word: token,
            });
        }
        Ok(FeatureName(token))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for FeatureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for FeatureName {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureName::new(s)
    }
}

impl AsRef<str> for FeatureName {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

pub(crate) fn is_name_start(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub(crate) fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | ':' | '+' | '.' | '/' | '@' | '-')
}

pub(crate) fn is_reserved(token: &str) -> bool {
    RESERVED.contains(&token)
}

fn is_valid_name(token: &str) -> bool {
    let mut chars = token.chars();
    match chars.next() {
        Some(c) if is_name_start(c) => chars.all(is_name_char),
        _ => false,
    }
}

/// Builds a feature set from string tokens, panicking on invalid names.
///
/// Intended for literals in tests and examples.
pub fn feature_set<I, S>(names: I) -> FeatureSet
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    names
        .into_iter()
        .map(|n| FeatureName::new(n.as_ref()).expect("valid feature name"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Const(bool),
    Var(FeatureName),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn var(name: &FeatureName) -> Formula {
        Formula::Var(name.clone())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn implies(l: Formula, r: Formula) -> Formula {
        Formula::Implies(Box::new(l), Box::new(r))
    }

    /// Left-nested conjunction; the empty conjunction is `true`.
    pub fn conjunction(parts: impl IntoIterator<Item = Formula>) -> Formula {
        parts
            .into_iter()
            .reduce(Formula::and)
            .unwrap_or(Formula::Const(true))
    }

    /// Left-nested disjunction; the empty disjunction is `false`.
    pub fn disjunction(parts: impl IntoIterator<Item = Formula>) -> Formula {
        parts
            .into_iter()
            .reduce(Formula::or)
            .unwrap_or(Formula::Const(false))
    }

    /// Evaluates with `value` giving the truth value of each variable.
    pub fn eval_with(&self, value: &impl Fn(&FeatureName) -> bool) -> bool {
        match self {
            Formula::Const(b) => *b,
            Formula::Var(x) => value(x),
            Formula::Not(f) => !f.eval_with(value),
            Formula::And(l, r) => l.eval_with(value) && r.eval_with(value),
            Formula::Or(l, r) => l.eval_with(value) || r.eval_with(value),
            Formula::Implies(l, r) => !l.eval_with(value) || r.eval_with(value),
        }
    }

    pub fn eval(&self, assignment: &Assignment) -> bool {
        self.eval_with(&|x| assignment.get(x))
    }

    /// Evaluates under the assignment that sets exactly `product` to true.
    pub fn eval_product(&self, product: &FeatureSet) -> bool {
        self.eval_with(&|x| product.contains(x))
    }

    pub fn free_features(&self) -> FeatureSet {
        let mut out = FeatureSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut FeatureSet) {
        match self {
            Formula::Const(_) => {}
            Formula::Var(x) => {
                out.insert(x.clone());
            }
            Formula::Not(f) => f.collect_vars(out),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::Const(_) | Formula::Var(_) => 1,
            Formula::Not(f) => 1 + f.size(),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => {
                1 + l.size() + r.size()
            }
        }
    }

    /// Renames variables through `map`; names not in the map are kept.
    pub fn rename(&self, map: &BTreeMap<FeatureName, FeatureName>) -> Formula {
        match self {
            Formula::Const(b) => Formula::Const(*b),
            Formula::Var(x) => Formula::Var(map.get(x).unwrap_or(x).clone()),
            Formula::Not(f) => Formula::not(f.rename(map)),
            Formula::And(l, r) => Formula::and(l.rename(map), r.rename(map)),
            Formula::Or(l, r) => Formula::or(l.rename(map), r.rename(map)),
            Formula::Implies(l, r) => Formula::implies(l.rename(map), r.rename(map)),
        }
    }

    /// Folds constants away. The result is either a lone `Const` or contains
    /// no `Const` node at all.
    pub fn fold_constants(&self) -> Formula {
        use Formula::*;
        match self {
            Const(_) | Var(_) => self.clone(),
            Not(f) => match f.fold_constants() {
                Const(b) => Const(!b),
                g => Formula::not(g),
            },
            And(l, r) => match (l.fold_constants(), r.fold_constants()) {
                (Const(false), _) | (_, Const(false)) => Const(false),
                (Const(true), g) | (g, Const(true)) => g,
                (a, b) => Formula::and(a, b),
            },
            Or(l, r) => match (l.fold_constants(), r.fold_constants()) {
                (Const(true), _) | (_, Const(true)) => Const(true),
                (Const(false), g) | (g, Const(false)) => g,
                (a, b) => Formula::or(a, b),
            },
            Implies(l, r) => match (l.fold_constants(), r.fold_constants()) {
                (Const(false), _) | (_, Const(true)) => Const(true),
                (Const(true), g) => g,
                (g, Const(false)) => Formula::not(g),
                (a, b) => Formula::implies(a, b),
            },
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Implies(..) => 0,
            Formula::Or(..) => 1,
            Formula::And(..) => 2,
            _ => 3,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.precedence() < min;
        if paren {
            f.write_str("(")?;
        }
        match self {
            Formula::Const(b) => write!(f, "{b}")?,
            Formula::Var(x) => write!(f, "{x}")?,
            Formula::Not(g) => {
                f.write_str("!")?;
                g.write_at(f, 3)?;
            }
            Formula::And(l, r) => {
                l.write_at(f, 2)?;
                f.write_str(" & ")?;
                r.write_at(f, 3)?;
            }
            Formula::Or(l, r) => {
                l.write_at(f, 1)?;
                f.write_str(" | ")?;
                r.write_at(f, 2)?;
            }
            Formula::Implies(l, r) => {
                l.write_at(f, 1)?;
                f.write_str(" -> ")?;
                r.write_at(f, 0)?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Prints in the concrete syntax accepted by [`parse_formula`], with the
/// minimal parentheses needed to reparse to the same tree.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

impl std::str::FromStr for Formula {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}

/// Truth values for feature names. Names without a binding read as false.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment(BTreeMap<FeatureName, bool>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_true_set(set: &FeatureSet) -> Self {
        Assignment(set.iter().map(|f| (f.clone(), true)).collect())
    }

    pub fn set(&mut self, name: FeatureName, value: bool) {
        self.0.insert(name, value);
    }

    pub fn get(&self, name: &FeatureName) -> bool {
        self.0.get(name).copied().unwrap_or(false)
    }

    pub fn true_set(&self) -> FeatureSet {
        self.0
            .iter()
            .filter(|(_, v)| **v)
            .map(|(k, _)| k.clone())
            .collect()
    }
}

impl FromIterator<(FeatureName, bool)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (FeatureName, bool)>>(iter: T) -> Self {
        Assignment(iter.into_iter().collect())
    }
}

/// A feature model in propositional form: a feature set and a constraint
/// whose free variables are among the features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropFM {
    features: FeatureSet,
    constraint: Formula,
}

impl PropFM {
    pub fn new(features: FeatureSet, constraint: Formula) -> Result<Self, FormulaError> {
        let stray: Vec<_> = constraint
            .free_features()
            .difference(&features)
            .cloned()
            .collect();
        if !stray.is_empty() {
            return Err(FormulaError::UndeclaredFeatures(stray));
        }
        Ok(PropFM {
            features,
            constraint,
        })
    }

    /// The model `(∅, true)`, whose only product is the empty one.
    pub fn empty() -> Self {
        PropFM {
            features: FeatureSet::new(),
            constraint: Formula::Const(true),
        }
    }

    pub fn features(&self) -> &FeatureSet {
        &self.features
    }

    pub fn constraint(&self) -> &Formula {
        &self.constraint
    }

    pub fn into_parts(self) -> (FeatureSet, Formula) {
        (self.features, self.constraint)
    }

    /// Whether `product` is a product of this model.
    pub fn accepts(&self, product: &FeatureSet) -> bool {
        product.is_subset(&self.features) && self.constraint.eval_product(product)
    }
}
