#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use lazydep::extfm::ExtFM;
use lazydep::formula::{feature_set, parse_formula, FeatureName, FeatureSet, PropFM};
use lazydep::fragments::{Fragment, RepositoryIndex};

pub fn fs<const N: usize>(names: [&str; N]) -> FeatureSet {
    feature_set(names)
}

pub fn fm(features: &[&str], src: &str) -> PropFM {
    PropFM::new(feature_set(features), parse_formula(src).unwrap()).unwrap()
}

pub fn glibc_fm() -> PropFM {
    fm(
        &["glibc", "txinfo", "tzdata", "glibc:doc", "glibc:v"],
        "glibc -> ((glibc:doc -> txinfo) & (glibc:v -> !tzdata))",
    )
}

pub fn gshell_fm() -> PropFM {
    fm(&["g-shell", "tzdata", "g-shell:nm"], "g-shell -> (g-shell:nm -> tzdata)")
}

pub fn demo_fragments() -> Vec<Fragment> {
    vec![Fragment::new("glibc", glibc_fm()), Fragment::new("g-shell", gshell_fm())]
}

pub fn demo_repo() -> RepositoryIndex {
    RepositoryIndex::from_fragments(demo_fragments()).unwrap()
}

fn powerset(features: &[&str]) -> Vec<FeatureSet> {
    (0u32..1 << features.len())
        .map(|m| {
            features
                .iter()
                .enumerate()
                .filter(|(i, _)| m >> i & 1 == 1)
                .map(|(_, f)| FeatureName::new(*f).unwrap())
                .collect()
        })
        .collect()
}

fn ext(features: &[&str], listed: &[&[&str]], free: &[&str]) -> ExtFM {
    let mut products: BTreeSet<FeatureSet> = listed.iter().map(|p| feature_set(p.iter().copied())).collect();
    products.extend(powerset(free));
    ExtFM::new(feature_set(features.iter().copied()), products).unwrap()
}

/// The glibc product set as listed in the worked example.
pub fn p_glibc_listed() -> ExtFM {
    ext(
        &["glibc", "txinfo", "tzdata", "glibc:doc", "glibc:v"],
        &[
            &["glibc"],
            &["glibc", "txinfo"],
            &["glibc", "tzdata"],
            &["glibc", "txinfo", "tzdata"],
            &["glibc", "glibc:doc", "txinfo"],
            &["glibc", "glibc:doc", "txinfo", "tzdata"],
            &["glibc", "glibc:v"],
            &["glibc", "glibc:v", "txinfo"],
            &["glibc", "glibc:doc", "glibc:v", "txinfo"],
        ],
        &["txinfo", "tzdata", "glibc:doc", "glibc:v"],
    )
}

/// The g-shell product set as listed in the worked example.
pub fn p_gshell_listed() -> ExtFM {
    ext(
        &["g-shell", "tzdata", "g-shell:nm"],
        &[&["g-shell"], &["g-shell", "tzdata"], &["g-shell", "tzdata", "g-shell:nm"]],
        &["tzdata", "g-shell:nm"],
    )
}

pub fn demo_pkg_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/demo")
}

/// Package names of the demo `.pkg` files mapped to the short names used by
/// the fixtures above.
pub fn rename_map() -> BTreeMap<FeatureName, FeatureName> {
    [
        ("sys-libs/glibc", "glibc"),
        ("sys-libs/glibc:doc", "glibc:doc"),
        ("sys-libs/glibc:vanilla", "glibc:v"),
        ("sys-apps/texinfo", "txinfo"),
        ("sys-libs/timezone-data", "tzdata"),
        ("gnome-base/gnome-shell", "g-shell"),
        ("gnome-base/gnome-shell:networkmanager", "g-shell:nm"),
    ]
    .into_iter()
    .map(|(a, b)| (FeatureName::new(a).unwrap(), FeatureName::new(b).unwrap()))
    .collect()
}

pub fn rename_fm(m: &PropFM, map: &BTreeMap<FeatureName, FeatureName>) -> PropFM {
    let features = m
        .features()
        .iter()
        .map(|f| map.get(f).cloned().unwrap_or_else(|| f.clone()))
        .collect();
    PropFM::new(features, m.constraint().rename(map)).unwrap()
}
