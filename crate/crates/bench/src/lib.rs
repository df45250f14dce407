//! Fixtures shared by the criterion benches.

use lazydep::fragments::{write_repository, RepositoryIndex};
use lazydep::gen::{chain_fragments, pick_guard_requests, run_generate, GenSpec};
use lazydep::Configuration;
use tempfile::TempDir;

/// An on-disk repository that lives as long as this value.
pub struct Fixture {
    pub dir: TempDir,
    pub idx: RepositoryIndex,
}

/// A synthetic repository of `fragments` fragments with ten flags each.
pub fn synthetic(fragments: usize, seed: u64) -> Fixture {
    let dir = tempfile::tempdir().expect("temp dir");
    let spec = GenSpec {
        fragments,
        features_per_fragment: 10,
        dep_out_degree: 3,
        share_prob: 0.05,
        seed,
    };
    let idx = run_generate(&spec, dir.path()).expect("generate");
    Fixture { dir, idx }
}

/// A chain of `depth + 1` guarded fragments among `total` fragments.
pub fn chain(depth: usize, total: usize) -> Fixture {
    let dir = tempfile::tempdir().expect("temp dir");
    let idx = write_repository(dir.path(), &chain_fragments(depth, total)).expect("write");
    Fixture { dir, idx }
}

/// Guard requests whose dependency closure stays within `max_closure`.
pub fn requests(fx: &Fixture, count: usize, max_closure: usize) -> Vec<Configuration> {
    pick_guard_requests(&fx.idx, count, max_closure, 1).expect("requests")
}
