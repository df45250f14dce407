//! Feature-model fragments, their on-disk repository, and cuts.

mod cut;
mod repo;

use std::fmt::Write as _;

pub use cut::{compose_symbolic, minimum_cut, pick_cut, CutFM, CutStrategy};
pub use repo::{
    load_fragment, load_repository, write_repository, FragmentSource, IndexEntry, RepoError,
    RepositoryIndex, MANIFEST_FILE,
};

use crate::formula::{FeatureName, Formula, PropFM};

/// A named feature model, optionally guarded by one of its features.
///
/// A guarded fragment has a constraint of shape `guard -> ψ`: it constrains
/// nothing unless the guard is selected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    pub id: String,
    pub fm: PropFM,
    pub guard: Option<FeatureName>,
}

impl Fragment {
    /// Builds a fragment whose guard is whatever [`detect_guard`] finds.
    pub fn new(id: impl Into<String>, fm: PropFM) -> Self {
        let guard = detect_guard(&fm);
        Fragment {
            id: id.into(),
            fm,
            guard,
        }
    }

    /// Builds a fragment that is never treated as guarded.
    pub fn unguarded(id: impl Into<String>, fm: PropFM) -> Self {
        Fragment {
            id: id.into(),
            fm,
            guard: None,
        }
    }

    /// The `.fm` file body: `feature` lines, then one `constraint` line.
    pub fn to_fm_text(&self) -> String {
        let mut out = String::new();
        for f in self.fm.features() {
            let _ = writeln!(out, "feature {f}");
        }
        let _ = writeln!(out, "constraint {}", self.fm.constraint());
        out
    }
}

/// The guard of a constraint of shape `Var(f) -> ψ` with `f` declared.
pub fn detect_guard(fm: &PropFM) -> Option<FeatureName> {
    match fm.constraint() {
        Formula::Implies(lhs, _) => match lhs.as_ref() {
            Formula::Var(f) if fm.features().contains(f) => Some(f.clone()),
            _ => None,
        },
        _ => None,
    }
}
