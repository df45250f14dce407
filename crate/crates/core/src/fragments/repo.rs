use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io;
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use super::{detect_guard, Fragment};
use crate::formula::{parse_formula, FeatureName, FeatureSet, Formula, FormulaError, PropFM};

pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Error)]
pub enum RepoError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("duplicate fragment id `{0}`")]
    DuplicateId(String),
    #[error("unknown fragment id `{0}`")]
    UnknownId(String),
    #[error("fragment `{id}` line {line}: {source}")]
    Parse {
        id: String,
        line: usize,
        source: FormulaError,
    },
    #[error("fragment `{id}` line {line}: {message}")]
    Fragment {
        id: String,
        line: usize,
        message: String,
    },
    #[error("fragment `{id}` declares features that differ from the manifest")]
    FeatureMismatch { id: String },
    #[error("fragment `{id}`: manifest guard `{declared}` does not match the constraint shape")]
    GuardMismatch { id: String, declared: FeatureName },
}

#[derive(Debug, Clone)]
pub enum FragmentSource {
    /// Relative to the repository root.
    File(PathBuf),
    Memory(Arc<Fragment>),
}

#[derive(Debug, Clone)]
pub struct IndexEntry {
    pub id: String,
    pub features: FeatureSet,
    pub guard: Option<FeatureName>,
    pub source: FragmentSource,
}

/// Manifest-level view of a repository. Building it never reads or parses
/// a fragment body.
#[derive(Debug, Clone, Default)]
pub struct RepositoryIndex {
    root: PathBuf,
    entries: Vec<IndexEntry>,
    by_id: HashMap<String, usize>,
    owners: HashMap<FeatureName, Vec<usize>>,
    guarded_by: HashMap<FeatureName, Vec<usize>>,
}

impl RepositoryIndex {
    fn push(&mut self, entry: IndexEntry) -> Result<(), RepoError> {
        if self.by_id.contains_key(&entry.id) {
            return Err(RepoError::DuplicateId(entry.id));
        }
        let i = self.entries.len();
        for f in &entry.features {
            self.owners.entry(f.clone()).or_default().push(i);
        }
        if let Some(g) = &entry.guard {
            self.guarded_by.entry(g.clone()).or_default().push(i);
        }
        self.by_id.insert(entry.id.clone(), i);
        self.entries.push(entry);
        Ok(())
    }

    /// An index over fragments held in memory.
    pub fn from_fragments(
        fragments: impl IntoIterator<Item = Fragment>,
    ) -> Result<Self, RepoError> {
        let mut idx = RepositoryIndex::default();
        for frag in fragments {
            idx.push(IndexEntry {
                id: frag.id.clone(),
                features: frag.fm.features().clone(),
                guard: frag.guard.clone(),
                source: FragmentSource::Memory(Arc::new(frag)),
            })?;
        }
        Ok(idx)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn entry(&self, id: &str) -> Option<&IndexEntry> {
        self.by_id.get(id).map(|&i| &self.entries[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    /// Ids of the fragments declaring `feature`, in manifest order.
    pub fn feature_owners(&self, feature: &FeatureName) -> Vec<&str> {
        self.owner_positions(feature)
            .iter()
            .map(|&i| self.entries[i].id.as_str())
            .collect()
    }

    pub fn owner_positions(&self, feature: &FeatureName) -> &[usize] {
        self.owners.get(feature).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Positions of fragments guarded by `feature`.
    pub fn guarded_by(&self, feature: &FeatureName) -> &[usize] {
        self.guarded_by.get(feature).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn declares(&self, feature: &FeatureName) -> bool {
        self.owners.contains_key(feature)
    }

    /// Number of distinct features across all fragments.
    pub fn total_features(&self) -> usize {
        self.owners.len()
    }

    pub fn all_features(&self) -> FeatureSet {
        self.owners.keys().cloned().collect()
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RepoError + '_ {
    move |source| RepoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && !id.chars().any(char::is_whitespace)
        && Path::new(id)
            .components()
            .all(|c| matches!(c, Component::Normal(_)))
}

fn parse_manifest_line(line_no: usize, line: &str) -> Result<IndexEntry, RepoError> {
    let err = |message: String| RepoError::Manifest {
        line: line_no,
        message,
    };
    let mut parts = line.split_whitespace();
    let (Some(id), Some(file), Some(guard), Some(features), None) = (
        parts.next(),
        parts.next(),
        parts.next(),
        parts.next(),
        parts.next(),
    ) else {
        return Err(err(
            "expected `<id> <file> guard=<feature|none> features=<list>`".into(),
        ));
    };
    if !valid_id(id) {
        return Err(err(format!("invalid fragment id `{id}`")));
    }
    if !valid_id(file) {
        return Err(err(format!("fragment path `{file}` must be relative")));
    }
    let guard = guard
        .strip_prefix("guard=")
        .ok_or_else(|| err("missing `guard=`".into()))?;
    let features = features
        .strip_prefix("features=")
        .ok_or_else(|| err("missing `features=`".into()))?;
    let features: FeatureSet = features
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|s| FeatureName::new(s).map_err(|e| err(e.to_string())))
        .collect::<Result<_, _>>()?;
    let guard = match guard {
        "none" => None,
        g => {
            let g = FeatureName::new(g).map_err(|e| err(e.to_string()))?;
            if !features.contains(&g) {
                return Err(err(format!("guard `{g}` is not a declared feature")));
            }
            Some(g)
        }
    };
    Ok(IndexEntry {
        id: id.to_string(),
        features,
        guard,
        source: FragmentSource::File(PathBuf::from(file)),
    })
}

/// Reads `<root>/manifest.txt` and indexes the fragments it lists.
pub fn load_repository(root: impl AsRef<Path>) -> Result<RepositoryIndex, RepoError> {
    let root = root.as_ref();
    let path = root.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let mut idx = RepositoryIndex {
        root: root.to_path_buf(),
        ..Default::default()
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        idx.push(parse_manifest_line(i + 1, line)?)?;
    }
    Ok(idx)
}

fn parse_fm_text(id: &str, text: &str) -> Result<PropFM, RepoError> {
    let mut features = FeatureSet::new();
    let mut constraints = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (keyword, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let parse_err = |source| RepoError::Parse {
            id: id.to_string(),
            line: i + 1,
            source,
        };
        match keyword {
            "feature" => {
                if !constraints.is_empty() {
                    return Err(RepoError::Fragment {
                        id: id.to_string(),
                        line: i + 1,
                        message: "`feature` lines must precede constraints".into(),
                    });
                }
                features.insert(FeatureName::new(rest.trim()).map_err(parse_err)?);
            }
            "constraint" => constraints.push(parse_formula(rest).map_err(parse_err)?),
            other => {
                return Err(RepoError::Fragment {
                    id: id.to_string(),
                    line: i + 1,
                    message: format!("unknown directive `{other}`"),
                })
            }
        }
    }
    if constraints.is_empty() {
        return Err(RepoError::Fragment {
            id: id.to_string(),
            line: 0,
            message: "no `constraint` line".into(),
        });
    }
    PropFM::new(features, Formula::conjunction(constraints)).map_err(|source| RepoError::Parse {
        id: id.to_string(),
        line: 0,
        source,
    })
}

/// Reads and parses one fragment, checking it against its manifest entry.
pub fn load_fragment(idx: &RepositoryIndex, id: &str) -> Result<Fragment, RepoError> {
    let entry = idx
        .entry(id)
        .ok_or_else(|| RepoError::UnknownId(id.to_string()))?;
    let path = match &entry.source {
        FragmentSource::Memory(frag) => return Ok(Fragment::clone(frag)),
        FragmentSource::File(rel) => idx.root.join(rel),
    };
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let fm = parse_fm_text(id, &text)?;
    if fm.features() != &entry.features {
        return Err(RepoError::FeatureMismatch { id: id.to_string() });
    }
    if let Some(g) = &entry.guard {
        if detect_guard(&fm).as_ref() != Some(g) {
            return Err(RepoError::GuardMismatch {
                id: id.to_string(),
                declared: g.clone(),
            });
        }
    }
    Ok(Fragment {
        id: id.to_string(),
        fm,
        guard: entry.guard.clone(),
    })
}

fn manifest_line(frag: &Fragment, file: &str) -> String {
    let guard = frag.guard.as_ref().map_or("none", FeatureName::as_str);
    let features: Vec<&str> = frag.fm.features().iter().map(FeatureName::as_str).collect();
    format!("{} {file} guard={guard} features={}\n", frag.id, features.join(","))
}

/// Writes a manifest plus one `<id>.fm` file per fragment under `root`, in
/// the given order, and returns the index over it.
pub fn write_repository(
    root: impl AsRef<Path>,
    fragments: &[Fragment],
) -> Result<RepositoryIndex, RepoError> {
    let root = root.as_ref();
    fs::create_dir_all(root).map_err(io_err(root))?;
    let mut seen = BTreeSet::new();
    let mut manifest = String::new();
    for frag in fragments {
        if !valid_id(&frag.id) {
            return Err(RepoError::Manifest {
                line: seen.len() + 1,
                message: format!("invalid fragment id `{}`", frag.id),
            });
        }
        if !seen.insert(frag.id.as_str()) {
            return Err(RepoError::DuplicateId(frag.id.clone()));
        }
        let file = format!("{}.fm", frag.id);
        let path = root.join(&file);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        fs::write(&path, frag.to_fm_text()).map_err(io_err(&path))?;
        manifest.push_str(&manifest_line(frag, &file));
    }
    let path = root.join(MANIFEST_FILE);
    fs::write(&path, manifest).map_err(io_err(&path))?;
    load_repository(root)
}
