use super::Fragment;
use crate::extfm::{enumerate_products, minimum_cut_fixpoint, ExtError};
use crate::formula::{FeatureSet, Formula, PropFM};

/// A cut of a fragment. Trivial cuts carry no constraint and only
/// contribute their features to a composition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutFM {
    pub fm: PropFM,
    pub trivial: bool,
}

impl CutFM {
    pub fn trivial(features: FeatureSet) -> Self {
        CutFM {
            fm: PropFM::new(features, Formula::Const(true)).expect("`true` has no variables"),
            trivial: true,
        }
    }
}

/// Which cut discovery asks of a fragment whose guard has been examined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum CutStrategy {
    /// The whole fragment.
    #[default]
    FullOrTrivial,
    /// The least cut, computed extensionally; desk-scale fragments only.
    Minimum,
}

/// The fragment itself, or `(Y ∩ F, true)` when the fragment is guarded and
/// its guard is not in `y`.
pub fn pick_cut(frag: &Fragment, y: &FeatureSet) -> CutFM {
    match &frag.guard {
        Some(g) if !y.contains(g) => {
            CutFM::trivial(frag.fm.features().intersection(y).cloned().collect())
        }
        _ => CutFM {
            fm: frag.fm.clone(),
            trivial: false,
        },
    }
}

/// Like [`pick_cut`], but a non-trivial result is replaced by the least cut
/// of the fragment for `y`, in characteristic-formula form.
pub fn minimum_cut(frag: &Fragment, y: &FeatureSet) -> Result<CutFM, ExtError> {
    let cut = pick_cut(frag, y);
    if cut.trivial {
        return Ok(cut);
    }
    let min = minimum_cut_fixpoint(&enumerate_products(&frag.fm)?, y)?;
    Ok(CutFM {
        fm: min.to_prop(),
        trivial: false,
    })
}

/// Conjunction of the non-trivial constraints over the union of features.
pub fn compose_symbolic<'a>(cuts: impl IntoIterator<Item = &'a CutFM>) -> PropFM {
    let mut features = FeatureSet::new();
    let mut parts = Vec::new();
    for cut in cuts {
        features.extend(cut.fm.features().iter().cloned());
        if !cut.trivial {
            parts.push(cut.fm.constraint().clone());
        }
    }
    PropFM::new(features, Formula::conjunction(parts))
        .expect("each constraint only mentions its own cut's features")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extfm::{enumerate_products, is_cut};
    use crate::formula::{feature_set, parse_formula};

    fn frag(id: &str, features: &[&str], src: &str) -> Fragment {
        Fragment::new(
            id,
            PropFM::new(feature_set(features), parse_formula(src).unwrap()).unwrap(),
        )
    }

    fn glibc() -> Fragment {
        frag(
            "glibc",
            &["glibc", "txinfo", "tzdata", "glibc:doc", "glibc:v"],
            "glibc -> ((glibc:doc -> txinfo) & (glibc:v -> !tzdata))",
        )
    }

    #[test]
    fn unexamined_guard_gives_trivial_cut() {
        let cut = pick_cut(&glibc(), &feature_set(["g-shell"]));
        assert!(cut.trivial);
        assert_eq!(cut.fm, PropFM::empty());
        let cut = pick_cut(&glibc(), &feature_set(["tzdata", "g-shell"]));
        assert!(cut.trivial);
        assert_eq!(cut.fm.features(), &feature_set(["tzdata"]));
    }

    #[test]
    fn examined_guard_gives_full_fragment() {
        let g = glibc();
        let y = feature_set(["glibc", "tzdata"]);
        let cut = pick_cut(&g, &y);
        assert!(!cut.trivial);
        assert_eq!(cut.fm, g.fm);
        let m = enumerate_products(&g.fm).unwrap();
        assert!(is_cut(&enumerate_products(&cut.fm).unwrap(), &m, &y));
    }

    #[test]
    fn unguarded_fragment_is_always_full() {
        let f = frag("u", &["a", "b"], "a | b");
        assert!(f.guard.is_none());
        for y in [feature_set::<[&str; 0], &str>([]), feature_set(["z"])] {
            let cut = pick_cut(&f, &y);
            assert!(!cut.trivial);
            assert_eq!(cut.fm, f.fm);
        }
    }

    #[test]
    fn minimum_cut_is_smaller() {
        let g = glibc();
        let y = feature_set(["glibc", "glibc:doc"]);
        let cut = minimum_cut(&g, &y).unwrap();
        assert_eq!(cut.fm.features(), &feature_set(["glibc", "glibc:doc", "txinfo"]));
        assert_eq!(enumerate_products(&cut.fm).unwrap().products().len(), 7);
    }

    #[test]
    fn symbolic_composition() {
        assert_eq!(compose_symbolic(&[]), PropFM::empty());
        let full = CutFM {
            fm: PropFM::new(feature_set(["a", "b"]), parse_formula("a -> b").unwrap()).unwrap(),
            trivial: false,
        };
        let triv = CutFM::trivial(feature_set(["a"]));
        assert_eq!(compose_symbolic(&[triv, full.clone()]), full.fm);
    }
}
