//! Extensional feature models: an explicit feature set and product set.
//!
//! This is the executable form of the feature-model algebra (interfaces,
//! slices, composition, cuts) at desk scale. Every symbolic component of
//! the crate is checked against it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::formula::{FeatureName, FeatureSet, Formula, PropFM};

/// Largest feature set an operation may enumerate `2^F` over.
pub const ENUMERATION_CAP: usize = 20;
/// Largest feature set accepted by [`minimum_cut_bruteforce`].
pub const BRUTEFORCE_CUT_CAP: usize = 12;

pub type Product = FeatureSet;
pub type Configuration = FeatureSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtError {
    #[error("{features} features exceed the enumeration cap of {cap}")]
    CapExceeded { features: usize, cap: usize },
    #[error("product {{{}}} is not a subset of the feature set", join(.0))]
    ProductOutsideFeatures(Product),
    #[error("feature models share features: {}", join(.0))]
    SharedFeatures(FeatureSet),
    #[error("cut candidates have no unique minimum")]
    NoUniqueMinimum,
    #[error("malformed feature model text at line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn join(set: &FeatureSet) -> String {
    set.iter()
        .map(FeatureName::as_str)
        .collect::<Vec<_>>()
        .join(", ")
}

fn check_cap(features: usize, cap: usize) -> Result<(), ExtError> {
    if features > cap {
        return Err(ExtError::CapExceeded { features, cap });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExtFM {
    features: FeatureSet,
    products: BTreeSet<Product>,
}

impl ExtFM {
    pub fn new(
        features: FeatureSet,
        products: impl IntoIterator<Item = Product>,
    ) -> Result<Self, ExtError> {
        let products: BTreeSet<Product> = products.into_iter().collect();
        if let Some(p) = products.iter().find(|p| !p.is_subset(&features)) {
            return Err(ExtError::ProductOutsideFeatures(p.clone()));
        }
        Ok(ExtFM { features, products })
    }

    /// `(∅, {∅})`, the identity of composition.
    pub fn empty() -> Self {
        ExtFM {
            features: FeatureSet::new(),
            products: BTreeSet::from([Product::new()]),
        }
    }

    /// `(features, ∅)`.
    pub fn void(features: FeatureSet) -> Self {
        ExtFM {
            features,
            products: BTreeSet::new(),
        }
    }

    /// `(features, 2^features)`; capped like every enumeration.
    pub fn unconstrained(features: FeatureSet) -> Result<Self, ExtError> {
        let products = powerset(&features)?;
        Ok(ExtFM { features, products })
    }

    pub fn features(&self) -> &FeatureSet {
        &self.features
    }

    pub fn products(&self) -> &BTreeSet<Product> {
        &self.products
    }

    pub fn is_void(&self) -> bool {
        self.products.is_empty()
    }

    pub fn contains(&self, product: &Product) -> bool {
        self.products.contains(product)
    }

    /// Characteristic formula: a disjunction over the products, each a
    /// conjunction fixing every feature.
    pub fn to_prop(&self) -> PropFM {
        let disjuncts = self.products.iter().map(|p| {
            Formula::conjunction(self.features.iter().map(|f| {
                if p.contains(f) {
                    Formula::var(f)
                } else {
                    Formula::not(Formula::var(f))
                }
            }))
        });
        PropFM::new(self.features.clone(), Formula::disjunction(disjuncts))
            .expect("characteristic formula only mentions declared features")
    }

    /// Reads the debug text format written by `Display`.
    pub fn parse_debug(text: &str) -> Result<Self, ExtError> {
        let mut features = None;
        let mut products = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| ExtError::Parse {
                line: i + 1,
                message,
            };
            let names = |rest: &str| -> Result<FeatureSet, ExtError> {
                rest.split_whitespace()
                    .map(|t| FeatureName::new(t).map_err(|e| err(e.to_string())))
                    .collect()
            };
            if let Some(rest) = line.strip_prefix("features:") {
                if features.is_some() {
                    return Err(err("duplicate `features:` line".into()));
                }
                features = Some(names(rest)?);
            } else if let Some(rest) = line.strip_prefix("product:") {
                products.push(names(rest)?);
            } else {
                return Err(err(format!("unrecognized line `{line}`")));
            }
        }
        let features = features.ok_or(ExtError::Parse {
            line: 0,
            message: "missing `features:` line".into(),
        })?;
        ExtFM::new(features, products)
    }
}

/// The debug text format: a `features:` line, then one `product:` line per
/// product in canonical order.
impl fmt::Display for ExtFM {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("features:")?;
        for x in &self.features {
            write!(f, " {x}")?;
        }
        writeln!(f)?;
        for p in &self.products {
            f.write_str("product:")?;
            for x in p {
                write!(f, " {x}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn powerset(features: &FeatureSet) -> Result<BTreeSet<Product>, ExtError> {
    check_cap(features.len(), ENUMERATION_CAP)?;
    let names: Vec<&FeatureName> = features.iter().collect();
    Ok((0u32..1 << names.len())
        .map(|mask| subset(&names, mask))
        .collect())
}

fn subset(names: &[&FeatureName], mask: u32) -> Product {
    names
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, n)| (*n).clone())
        .collect()
}

/// All products of a propositional model, by enumerating `2^F`.
pub fn enumerate_products(m: &PropFM) -> Result<ExtFM, ExtError> {
    check_cap(m.features().len(), ENUMERATION_CAP)?;
    let names: Vec<&FeatureName> = m.features().iter().collect();
    let index: BTreeMap<&FeatureName, usize> =
        names.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let products = (0u32..1 << names.len())
        .filter(|&mask| {
            m.constraint()
                .eval_with(&|x| index.get(x).is_some_and(|&i| mask >> i & 1 == 1))
        })
        .map(|mask| subset(&names, mask))
        .collect();
    Ok(ExtFM {
        features: m.features().clone(),
        products,
    })
}

fn project(products: &BTreeSet<Product>, onto: &FeatureSet) -> BTreeSet<Product> {
    products
        .iter()
        .map(|p| p.intersection(onto).cloned().collect())
        .collect()
}

/// `m1 ⪯ m2`: `m1` hides some features of `m2`.
pub fn is_interface(m1: &ExtFM, m2: &ExtFM) -> bool {
    m1.features.is_subset(&m2.features) && m1.products == project(&m2.products, &m1.features)
}

/// Restriction of `m` to the features in `y`.
pub fn slice(m: &ExtFM, y: &FeatureSet) -> ExtFM {
    let features: FeatureSet = m.features.intersection(y).cloned().collect();
    let products = project(&m.products, &features);
    ExtFM { features, products }
}

/// Join-like composition: products agreeing on shared features are merged.
pub fn compose_ext(m1: &ExtFM, m2: &ExtFM) -> ExtFM {
    let features: FeatureSet = m1.features.union(&m2.features).cloned().collect();
    let shared: FeatureSet = m1.features.intersection(&m2.features).cloned().collect();
    // bucket m2's products by their shared part
    let mut by_shared: BTreeMap<Product, Vec<&Product>> = BTreeMap::new();
    for q in &m2.products {
        by_shared
            .entry(q.intersection(&shared).cloned().collect())
            .or_default()
            .push(q);
    }
    let mut products = BTreeSet::new();
    for p in &m1.products {
        let key: Product = p.intersection(&shared).cloned().collect();
        for q in by_shared.get(&key).into_iter().flatten() {
            products.insert(p.union(q).cloned().collect());
        }
    }
    ExtFM { features, products }
}

/// Composition of a whole family; the empty family composes to `(∅, {∅})`.
pub fn compose_all<'a>(ms: impl IntoIterator<Item = &'a ExtFM>) -> ExtFM {
    ms.into_iter()
        .fold(ExtFM::empty(), |acc, m| compose_ext(&acc, m))
}

/// Whether `c` extends to some product of `m`.
pub fn is_pre_product(m: &ExtFM, c: &Configuration) -> bool {
    m.products.iter().any(|p| c.is_subset(p))
}

/// `m1 ⊑ m2`: an interface whose products are all products of `m2`.
pub fn is_conservative_interface(m1: &ExtFM, m2: &ExtFM) -> bool {
    is_interface(m1, m2) && m1.products.is_subset(&m2.products)
}

/// `slice(m2, y) ⪯ m1 ⪯ m2`.
pub fn is_extended_slice(m1: &ExtFM, m2: &ExtFM, y: &FeatureSet) -> bool {
    is_interface(&slice(m2, y), m1) && is_interface(m1, m2)
}

/// `m1 ⊑_Y m2`: an extended slice for `y` that is also conservative.
pub fn is_cut(m1: &ExtFM, m2: &ExtFM, y: &FeatureSet) -> bool {
    is_extended_slice(m1, m2, y) && m1.products.is_subset(&m2.products)
}

/// One application of the minimum-cut step function: add every product of
/// `m` all of whose proper sub-products differ from it on some feature of
/// `current`, together with those products' features.
pub fn cut_step(m: &ExtFM, current: &ExtFM) -> ExtFM {
    let added: Vec<&Product> = m
        .products
        .iter()
        .filter(|p| {
            m.products.iter().all(|q| {
                !(q.is_subset(p) && q.len() < p.len())
                    || p.difference(q).any(|x| current.features.contains(x))
            })
        })
        .collect();
    let mut next = current.clone();
    for p in added {
        next.features.extend(p.iter().cloned());
        next.products.insert(p.clone());
    }
    next
}

/// The least cut of `m` for `y`, as the least fixpoint of [`cut_step`]
/// starting from `(F ∩ Y, ∅)`.
pub fn minimum_cut_fixpoint(m: &ExtFM, y: &FeatureSet) -> Result<ExtFM, ExtError> {
    check_cap(m.features.len(), ENUMERATION_CAP)?;
    let mut current = ExtFM::void(m.features.intersection(y).cloned().collect());
    loop {
        let next = cut_step(m, &current);
        if next == current {
            return Ok(current);
        }
        current = next;
    }
}

/// Reference minimum cut by exhaustive search over every feature set between
/// `F ∩ Y` and `F`. The result is the candidate below all others in the
/// pointwise (features ⊆, products ⊆) order.
pub fn minimum_cut_bruteforce(m: &ExtFM, y: &FeatureSet) -> Result<ExtFM, ExtError> {
    check_cap(m.features.len(), BRUTEFORCE_CUT_CAP)?;
    let base: FeatureSet = m.features.intersection(y).cloned().collect();
    let rest: Vec<&FeatureName> = m.features.difference(&base).collect();
    let cuts: Vec<ExtFM> = (0u32..1 << rest.len())
        .map(|mask| {
            let mut fs = base.clone();
            fs.extend(subset(&rest, mask));
            slice(m, &fs)
        })
        .filter(|cand| is_cut(cand, m, y))
        .collect();
    let below = |a: &ExtFM, b: &ExtFM| {
        a.features.is_subset(&b.features) && a.products.is_subset(&b.products)
    };
    let mut minima = cuts.iter().filter(|a| cuts.iter().all(|b| below(a, b)));
    match (minima.next(), minima.next()) {
        (Some(min), None) => Ok(min.clone()),
        _ => Err(ExtError::NoUniqueMinimum),
    }
}

/// Smallest (by sorted feature names) product of the composition of `ms`
/// containing `c`.
pub fn discover_ext(ms: &[ExtFM], c: &Configuration) -> Result<Option<Product>, ExtError> {
    let total: FeatureSet = ms.iter().flat_map(|m| m.features.iter().cloned()).collect();
    check_cap(total.len(), ENUMERATION_CAP)?;
    let full = compose_all(ms);
    Ok(full.products.iter().find(|p| c.is_subset(p)).cloned())
}

/// Compatibility of `c` with a family of pairwise feature-disjoint models,
/// decided per model on slices without composing.
pub fn disjoint_compat_criterion(ms: &[ExtFM], c: &Configuration) -> Result<bool, ExtError> {
    for (i, a) in ms.iter().enumerate() {
        for b in &ms[i + 1..] {
            let shared: FeatureSet = a.features.intersection(&b.features).cloned().collect();
            if !shared.is_empty() {
                return Err(ExtError::SharedFeatures(shared));
            }
        }
    }
    let covered = c
        .iter()
        .all(|x| ms.iter().any(|m| m.features.contains(x)));
    Ok(covered
        && ms.iter().all(|m| {
            let local: Product = c.intersection(&m.features).cloned().collect();
            slice(m, c).products.contains(&local)
        }))
}
