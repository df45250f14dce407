//! Seeded generators: synthetic repositories at scale, chain repositories,
//! and small random fragments and models for property tests.

use std::collections::{BTreeSet, VecDeque};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::extfm::{Configuration, ExtFM, Product};
use crate::formula::{FeatureName, FeatureSet, Formula, PropFM};
use crate::fragments::{write_repository, Fragment, RepoError, RepositoryIndex};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("could only find {found} of {wanted} requests with closure at most {max_closure}")]
    TooFewRequests {
        found: usize,
        wanted: usize,
        max_closure: usize,
    },
    #[error(transparent)]
    Repo(#[from] RepoError),
}

/// Shape of a synthetic repository.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSpec {
    pub fragments: usize,
    pub features_per_fragment: usize,
    pub dep_out_degree: usize,
    pub share_prob: f64,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<(), GenError> {
        if !(0.0..=1.0).contains(&self.share_prob) {
            return Err(GenError::InvalidSpec(format!(
                "share probability {} is not in [0, 1]",
                self.share_prob
            )));
        }
        Ok(())
    }
}

fn name(s: String) -> FeatureName {
    FeatureName::new(s).expect("generated names are valid")
}

fn guard_name(i: usize) -> FeatureName {
    name(format!("pkg{i}"))
}

/// The fragments of a synthetic repository, in id order of generation.
///
/// Fragment `i` is guarded by `pkg<i>` and owns the flags `pkg<i>:f<j>`.
/// Its out-edges go to the tree children `i*d+1 ..= i*d+d`, each replaced by
/// a uniformly random fragment with probability `share_prob`. Each edge
/// becomes a requirement (70%), a conflict (15%) or a disjunction with a
/// second random fragment (15%), and is conditioned on a random flag half
/// of the time. Conflicts are always flag-conditioned.
pub fn generate_fragments(spec: &GenSpec) -> Result<Vec<Fragment>, GenError> {
    spec.validate()?;
    let n = spec.fragments;
    let d = spec.dep_out_degree;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let guard = guard_name(i);
        let flags: Vec<FeatureName> = (0..spec.features_per_fragment)
            .map(|j| name(format!("pkg{i}:f{j}")))
            .collect();
        let mut features: FeatureSet = flags.iter().cloned().collect();
        features.insert(guard.clone());
        let mut items = Vec::new();
        for k in 0..d {
            let target = if n > 1 && rng.gen_bool(spec.share_prob) {
                let t = rng.gen_range(0..n - 1);
                if t >= i {
                    t + 1
                } else {
                    t
                }
            } else {
                let child = i * d + k + 1;
                if child >= n {
                    continue;
                }
                child
            };
            let cond = if !flags.is_empty() && rng.gen_bool(0.5) {
                flags.choose(&mut rng).cloned()
            } else {
                None
            };
            let target_guard = guard_name(target);
            features.insert(target_guard.clone());
            let roll = rng.gen_range(0..100);
            let body = if roll >= 85 && n > 2 {
                let other = loop {
                    let o = rng.gen_range(0..n);
                    if o != i && o != target {
                        break o;
                    }
                };
                let other_guard = guard_name(other);
                features.insert(other_guard.clone());
                Formula::or(Formula::Var(target_guard), Formula::Var(other_guard))
            } else if (70..85).contains(&roll) && cond.is_some() {
                Formula::not(Formula::Var(target_guard))
            } else {
                Formula::Var(target_guard)
            };
            items.push(match cond {
                Some(flag) => Formula::implies(Formula::Var(flag), body),
                None => body,
            });
        }
        let constraint = Formula::implies(Formula::Var(guard.clone()), Formula::conjunction(items));
        let fm = PropFM::new(features, constraint).expect("every referenced guard is declared");
        out.push(Fragment {
            id: format!("pkg{i}"),
            fm,
            guard: Some(guard),
        });
    }
    Ok(out)
}

/// Writes the synthetic repository of `spec` to `out`. Output is
/// byte-identical across runs with the same spec.
pub fn run_generate(spec: &GenSpec, out: &Path) -> Result<RepositoryIndex, GenError> {
    let fragments = generate_fragments(spec)?;
    Ok(write_repository(out, &fragments)?)
}

/// Guarded chain `chain0 -> chain1 -> ... -> chain<depth>` plus disconnected
/// guarded fragments `other<j>`, `total` fragments in all.
pub fn chain_fragments(depth: usize, total: usize) -> Vec<Fragment> {
    let mut out = Vec::with_capacity(total.max(depth + 1));
    for i in 0..=depth {
        let guard = name(format!("chain{i}"));
        let mut features = BTreeSet::from([guard.clone()]);
        let body = if i < depth {
            let next = name(format!("chain{}", i + 1));
            features.insert(next.clone());
            Formula::Var(next)
        } else {
            Formula::Const(true)
        };
        let fm = PropFM::new(features, Formula::implies(Formula::Var(guard.clone()), body))
            .expect("declared");
        out.push(Fragment {
            id: format!("chain{i}"),
            fm,
            guard: Some(guard),
        });
    }
    for j in 0..total.saturating_sub(depth + 1) {
        let guard = name(format!("other{j}"));
        let opt = name(format!("other{j}:opt"));
        let fm = PropFM::new(
            BTreeSet::from([guard.clone(), opt.clone()]),
            Formula::implies(Formula::Var(guard.clone()), Formula::Var(opt)),
        )
        .expect("declared");
        out.push(Fragment {
            id: format!("other{j}"),
            fm,
            guard: Some(guard),
        });
    }
    out
}

/// Positions of every fragment lazy discovery could load for a request:
/// unguarded fragments and fragments guarded by a requested feature, closed
/// under "guarded by a feature some included fragment declares".
pub fn dependency_closure(idx: &RepositoryIndex, request: &FeatureSet) -> BTreeSet<usize> {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    let push = |pos: usize, seen: &mut BTreeSet<usize>, queue: &mut VecDeque<usize>| {
        if seen.insert(pos) {
            queue.push_back(pos);
        }
    };
    for (pos, e) in idx.entries().iter().enumerate() {
        if e.guard.is_none() {
            push(pos, &mut seen, &mut queue);
        }
    }
    for f in request {
        for &pos in idx.guarded_by(f) {
            push(pos, &mut seen, &mut queue);
        }
    }
    while let Some(pos) = queue.pop_front() {
        for f in &idx.entries()[pos].features {
            for &next in idx.guarded_by(f) {
                push(next, &mut seen, &mut queue);
            }
        }
    }
    seen
}

/// `count` requests of one to ten distinct guard features, each with a
/// combined dependency closure of at most `max_closure` fragments.
pub fn pick_guard_requests(
    idx: &RepositoryIndex,
    count: usize,
    max_closure: usize,
    seed: u64,
) -> Result<Vec<Configuration>, GenError> {
    let guards: Vec<&FeatureName> = idx.entries().iter().filter_map(|e| e.guard.as_ref()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let max_attempts = count * 1000 + 1000;
    for _ in 0..max_attempts {
        if out.len() == count || guards.is_empty() {
            break;
        }
        let want = rng.gen_range(1..=10);
        let mut request = FeatureSet::new();
        let mut closure = BTreeSet::new();
        for _ in 0..want * 20 {
            if request.len() == want {
                break;
            }
            let g = guards[rng.gen_range(0..guards.len())];
            if request.contains(g) {
                continue;
            }
            let extra = dependency_closure(idx, &BTreeSet::from([g.clone()]));
            if closure.union(&extra).count() <= max_closure {
                closure.extend(extra);
                request.insert(g.clone());
            }
        }
        if !request.is_empty() {
            out.push(request);
        }
    }
    if out.len() < count {
        return Err(GenError::TooFewRequests {
            found: out.len(),
            wanted: count,
            max_closure,
        });
    }
    Ok(out)
}

/// The feature pool `f0 .. f<size-1>`.
pub fn feature_pool(size: usize) -> Vec<FeatureName> {
    (0..size).map(|i| name(format!("f{i}"))).collect()
}

/// A random formula over `vars` of depth at most `depth`.
pub fn random_formula<R: Rng>(rng: &mut R, vars: &[FeatureName], depth: usize) -> Formula {
    if depth == 0 || vars.is_empty() || rng.gen_bool(0.3) {
        return match rng.gen_range(0..10) {
            0 => Formula::Const(rng.gen_bool(0.5)),
            _ if vars.is_empty() => Formula::Const(rng.gen_bool(0.5)),
            _ => Formula::Var(vars[rng.gen_range(0..vars.len())].clone()),
        };
    }
    let sub = |rng: &mut R| random_formula(rng, vars, depth - 1);
    match rng.gen_range(0..4) {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(sub(rng), sub(rng)),
        2 => Formula::or(sub(rng), sub(rng)),
        _ => Formula::implies(sub(rng), sub(rng)),
    }
}

/// A random fragment over `1..=max_features` features drawn from `pool`;
/// guarded by one of them half of the time.
pub fn random_fragment<R: Rng>(
    rng: &mut R,
    id: &str,
    pool: &[FeatureName],
    max_features: usize,
) -> Fragment {
    let k = rng.gen_range(1..=max_features.clamp(1, pool.len().max(1)));
    let vars: Vec<FeatureName> = pool.choose_multiple(rng, k).cloned().collect();
    let features: FeatureSet = vars.iter().cloned().collect();
    if rng.gen_bool(0.5) {
        let guard = vars[0].clone();
        let body = random_formula(rng, &vars, 3);
        let fm = PropFM::new(features, Formula::implies(Formula::Var(guard.clone()), body))
            .expect("declared");
        Fragment {
            id: id.to_string(),
            fm,
            guard: Some(guard),
        }
    } else {
        let fm = PropFM::new(features, random_formula(rng, &vars, 3)).expect("declared");
        Fragment::new(id, fm)
    }
}

/// One to `max_fragments` random fragments over a shared pool of
/// `pool_size` features.
pub fn random_repository<R: Rng>(
    rng: &mut R,
    max_fragments: usize,
    max_features: usize,
    pool_size: usize,
) -> Vec<Fragment> {
    let pool = feature_pool(pool_size);
    let n = rng.gen_range(1..=max_fragments.max(1));
    (0..n)
        .map(|i| random_fragment(rng, &format!("frag{i}"), &pool, max_features))
        .collect()
}

/// A random request: up to `max` features of the repository.
pub fn random_request<R: Rng>(rng: &mut R, idx: &RepositoryIndex, max: usize) -> Configuration {
    let all: Vec<FeatureName> = idx.all_features().into_iter().collect();
    let k = rng.gen_range(0..=max.min(all.len()));
    all.choose_multiple(rng, k).cloned().collect()
}

/// Each subset of `features` is a product with probability `density`.
pub fn random_ext<R: Rng>(rng: &mut R, features: &FeatureSet, density: f64) -> ExtFM {
    let names: Vec<&FeatureName> = features.iter().collect();
    assert!(names.len() < 16, "random_ext enumerates 2^|F| subsets");
    let products: BTreeSet<Product> = (0u32..1 << names.len())
        .filter(|_| rng.gen_bool(density))
        .map(|mask| {
            names
                .iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, f)| (*f).clone())
                .collect()
        })
        .collect();
    ExtFM::new(features.clone(), products).expect("products are subsets of features")
}
