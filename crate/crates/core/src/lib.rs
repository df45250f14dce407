//! Lazy product discovery over repositories of interdependent feature-model
//! fragments.
//!
//! - [`formula`]: propositional feature models, parsing, CNF.
//! - [`extfm`]: extensional models, slices, composition and cuts; the
//!   reference semantics used as a test oracle.
//! - [`fragments`]: guarded fragments, on-disk repositories, cut selection.
//! - [`solver`]: an incremental CDCL engine and a session over features.
//! - [`discovery`]: the lazy loop and the eager baseline.
//! - [`depparse`]: a Gentoo-style dependency language and its translation.
//! - [`gen`] and [`bench`]: synthetic repositories and CSV benchmarking.

pub mod bench;
pub mod depparse;
pub mod discovery;
pub mod extfm;
pub mod formula;
pub mod fragments;
pub mod gen;
pub mod solver;

pub use discovery::{
    eager_discover, lazy_discover, verify_result, DiscoveryError, DiscoveryOptions, DiscoveryResult,
    DiscoveryStats, Outcome, Verification,
};
pub use extfm::{Configuration, ExtFM, Product};
pub use formula::{FeatureName, FeatureSet, Formula, PropFM};
pub use fragments::{load_repository, CutStrategy, Fragment, RepositoryIndex};
pub use solver::SolverSession;
