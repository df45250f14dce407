//! A Gentoo-style dependency language and its translation into fragments.
//!
//! Supported: plain atoms `cat/pkg`, blockers `!cat/pkg`, use-conditional
//! groups `flag? ( ... )`, any-of groups `|| ( ... )` and plain groups
//! `( ... )`. Versions, slots and `REQUIRED_USE` are not modelled; every
//! atom stands for any version of its package.
//!
//! A package `p` becomes a fragment guarded by the feature `p`, with one
//! feature `p:flag` per use flag and one feature per referenced package.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::formula::{FeatureName, FeatureSet, Formula, PropFM};
use crate::fragments::{write_repository, Fragment, RepoError, RepositoryIndex};

#[derive(Debug, Error)]
pub enum DependError {
    #[error("byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("byte {offset}: `{token}` is not a `category/name` atom")]
    BadAtom { offset: usize, token: String },
    #[error("byte {offset}: invalid use flag `{token}`")]
    BadFlag { offset: usize, token: String },
    #[error("package `{package}` references undeclared use flag `{flag}`")]
    UnknownFlag { package: String, flag: String },
    #[error("package `{package}` declares use flag `{flag}` twice")]
    DuplicateFlag { package: String, flag: String },
    #[error("{}: line {line}: {message}", path.display())]
    Package {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Repo(#[from] RepoError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DependExpr {
    Atom { package: String, negated: bool },
    UseCond { flag: String, body: Vec<DependExpr> },
    AnyOf(Vec<DependExpr>),
    Group(Vec<DependExpr>),
}

impl DependExpr {
    pub fn atom(package: &str) -> Self {
        DependExpr::Atom {
            package: package.to_string(),
            negated: false,
        }
    }

    pub fn blocker(package: &str) -> Self {
        DependExpr::Atom {
            package: package.to_string(),
            negated: true,
        }
    }
}

fn write_body(f: &mut fmt::Formatter<'_>, body: &[DependExpr]) -> fmt::Result {
    f.write_str("(")?;
    for e in body {
        write!(f, " {e}")?;
    }
    f.write_str(" )")
}

impl fmt::Display for DependExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DependExpr::Atom { package, negated } => {
                if *negated {
                    f.write_str("!")?;
                }
                f.write_str(package)
            }
            DependExpr::UseCond { flag, body } => {
                write!(f, "{flag}? ")?;
                write_body(f, body)
            }
            DependExpr::AnyOf(body) => {
                f.write_str("|| ")?;
                write_body(f, body)
            }
            DependExpr::Group(body) => write_body(f, body),
        }
    }
}

/// Prints a dependency list in the syntax [`parse_depend`] reads.
pub fn print_depend(items: &[DependExpr]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

fn is_atom_part(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphanumeric() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '+' | '.' | '-'))
}

pub fn is_valid_atom(token: &str) -> bool {
    match token.split_once('/') {
        Some((cat, name)) => is_atom_part(cat) && is_atom_part(name),
        None => false,
    }
}

pub fn is_valid_flag(token: &str) -> bool {
    let mut chars = token.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphanumeric())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '_' | '@' | '-'))
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok<'a> {
    Open,
    Close,
    Word(&'a str),
}

fn tokenize(text: &str) -> Vec<(usize, Tok<'_>)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        let delim = c.is_whitespace() || c == '(' || c == ')';
        if delim {
            if let Some(s) = start.take() {
                out.push((s, Tok::Word(&text[s..i])));
            }
            match c {
                '(' => out.push((i, Tok::Open)),
                ')' => out.push((i, Tok::Close)),
                _ => {}
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, Tok::Word(&text[s..])));
    }
    out
}

struct Parser<'a> {
    toks: Vec<(usize, Tok<'a>)>,
    at: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn offset(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(o, _)| *o)
    }

    fn expect_open(&mut self) -> Result<(), DependError> {
        match self.toks.get(self.at) {
            Some((_, Tok::Open)) => {
                self.at += 1;
                Ok(())
            }
            _ => Err(DependError::Syntax {
                offset: self.offset(),
                message: "expected `(`".into(),
            }),
        }
    }

    /// Items up to a closing parenthesis (consumed) or, at top level, the
    /// end of input.
    fn items(&mut self, nested: bool) -> Result<Vec<DependExpr>, DependError> {
        let mut out = Vec::new();
        loop {
            let offset = self.offset();
            let Some((_, tok)) = self.toks.get(self.at).cloned() else {
                if nested {
                    return Err(DependError::Syntax {
                        offset,
                        message: "unbalanced parentheses: missing `)`".into(),
                    });
                }
                return Ok(out);
            };
            self.at += 1;
            match tok {
                Tok::Close if nested => return Ok(out),
                Tok::Close => {
                    return Err(DependError::Syntax {
                        offset,
                        message: "unbalanced parentheses: unexpected `)`".into(),
                    })
                }
                Tok::Open => out.push(DependExpr::Group(self.items(true)?)),
                Tok::Word("||") => {
                    self.expect_open()?;
                    let body = self.items(true)?;
                    if body.is_empty() {
                        return Err(DependError::Syntax {
                            offset,
                            message: "empty `|| ( )` group".into(),
                        });
                    }
                    out.push(DependExpr::AnyOf(body));
                }
                Tok::Word(w) if w.ends_with('?') => {
                    let flag = &w[..w.len() - 1];
                    if !is_valid_flag(flag) {
                        return Err(DependError::BadFlag {
                            offset,
                            token: flag.to_string(),
                        });
                    }
                    self.expect_open()?;
                    out.push(DependExpr::UseCond {
                        flag: flag.to_string(),
                        body: self.items(true)?,
                    });
                }
                Tok::Word(w) => {
                    let (package, negated) = match w.strip_prefix('!') {
                        Some(rest) => (rest, true),
                        None => (w, false),
                    };
                    if !is_valid_atom(package) {
                        return Err(DependError::BadAtom {
                            offset,
                            token: w.to_string(),
                        });
                    }
                    out.push(DependExpr::Atom {
                        package: package.to_string(),
                        negated,
                    });
                }
            }
        }
    }
}

/// Parses a whitespace-separated dependency list; top-level items are
/// conjoined.
pub fn parse_depend(text: &str) -> Result<Vec<DependExpr>, DependError> {
    let mut p = Parser {
        toks: tokenize(text),
        at: 0,
        end: text.len(),
    };
    p.items(false)
}

/// A package declaration: its name, use flags and dependencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackageDecl {
    pub name: String,
    pub use_flags: Vec<String>,
    pub depend: Vec<DependExpr>,
}

/// Reads the `.pkg` format: `name <cat/pkg>`, `iuse <flag> ...` and
/// `depend <text>` lines. Repeated `iuse` and `depend` lines accumulate.
pub fn parse_package(path: &Path, text: &str) -> Result<PackageDecl, DependError> {
    let err = |line: usize, message: String| DependError::Package {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut name = None;
    let mut flags: Vec<String> = Vec::new();
    let mut depend = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (keyword, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        match keyword {
            "name" => {
                let n = rest.trim();
                if !is_valid_atom(n) {
                    return Err(err(i + 1, format!("`{n}` is not a `category/name` atom")));
                }
                if name.replace(n.to_string()).is_some() {
                    return Err(err(i + 1, "duplicate `name` line".into()));
                }
            }
            "iuse" => {
                for flag in rest.split_whitespace() {
                    if !is_valid_flag(flag) {
                        return Err(err(i + 1, format!("invalid use flag `{flag}`")));
                    }
                    flags.push(flag.to_string());
                }
            }
            "depend" => {
                depend.push_str(rest);
                depend.push('\n');
            }
            other => return Err(err(i + 1, format!("unknown directive `{other}`"))),
        }
    }
    let name = name.ok_or_else(|| err(0, "missing `name` line".into()))?;
    let mut seen = BTreeSet::new();
    if let Some(dup) = flags.iter().find(|f| !seen.insert(f.as_str())) {
        return Err(DependError::DuplicateFlag {
            package: name,
            flag: dup.clone(),
        });
    }
    Ok(PackageDecl {
        name,
        use_flags: flags,
        depend: parse_depend(&depend)?,
    })
}

fn feature(token: &str) -> FeatureName {
    FeatureName::new(token).expect("atoms and package:flag pairs are valid feature names")
}

struct Translator<'d> {
    decl: &'d PackageDecl,
    features: FeatureSet,
}

impl Translator<'_> {
    fn expr(&mut self, e: &DependExpr) -> Result<Formula, DependError> {
        Ok(match e {
            DependExpr::Atom { package, negated } => {
                let f = feature(package);
                self.features.insert(f.clone());
                let v = Formula::Var(f);
                if *negated {
                    Formula::not(v)
                } else {
                    v
                }
            }
            DependExpr::UseCond { flag, body } => {
                if !self.decl.use_flags.contains(flag) {
                    return Err(DependError::UnknownFlag {
                        package: self.decl.name.clone(),
                        flag: flag.clone(),
                    });
                }
                let f = feature(&format!("{}:{flag}", self.decl.name));
                Formula::implies(Formula::Var(f), self.all(body)?)
            }
            DependExpr::AnyOf(body) => Formula::disjunction(
                body.iter().map(|e| self.expr(e)).collect::<Result<Vec<_>, _>>()?,
            ),
            DependExpr::Group(body) => self.all(body)?,
        })
    }

    fn all(&mut self, body: &[DependExpr]) -> Result<Formula, DependError> {
        Ok(Formula::conjunction(
            body.iter().map(|e| self.expr(e)).collect::<Result<Vec<_>, _>>()?,
        ))
    }
}

/// The fragment `(F, name -> conj(depend))` of a package.
pub fn translate_package(decl: &PackageDecl) -> Result<Fragment, DependError> {
    let guard = feature(&decl.name);
    let mut features: FeatureSet = decl
        .use_flags
        .iter()
        .map(|flag| feature(&format!("{}:{flag}", decl.name)))
        .collect();
    features.insert(guard.clone());
    let mut t = Translator { decl, features };
    let body = t.all(&decl.depend)?;
    let fm = PropFM::new(t.features, Formula::implies(Formula::Var(guard.clone()), body))
        .expect("translation declares every feature it mentions");
    Ok(Fragment {
        id: decl.name.clone(),
        fm,
        guard: Some(guard),
    })
}

/// Translates every `.pkg` file directly under `input` into a fragment
/// repository at `out`.
pub fn translate_directory(input: &Path, out: &Path) -> Result<RepositoryIndex, DependError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| DependError::Io { path, source }
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(input)
        .map_err(io(input))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io(input))?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "pkg"));
    paths.sort();
    let mut fragments = Vec::with_capacity(paths.len());
    for path in &paths {
        let text = fs::read_to_string(path).map_err(io(path))?;
        fragments.push(translate_package(&parse_package(path, &text)?)?);
    }
    fragments.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(write_repository(out, &fragments)?)
}
