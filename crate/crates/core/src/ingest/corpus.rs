use std::{
    collections::{BTreeMap, HashMap, HashSet},
    fs,
    path::{Path, PathBuf},
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{tree::NodeRecord, Error, ReplyTree, Result, TreeDocument};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Trees with fewer nodes are dropped.
    pub min_size: usize,
    /// Drop trees containing deleted or empty-text nodes; otherwise prune
    /// those nodes together with their replies.
    pub strict: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self { min_size: 20, strict: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusTree {
    /// File stem of the source document.
    pub name: String,
    pub tree: ReplyTree,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileError {
    pub file: String,
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub trees_in: usize,
    pub removed_small: usize,
    pub removed_malformed: usize,
    pub trees_out: usize,
    /// Support fraction of each retained tree; `null` for root-only trees.
    pub q_hat: BTreeMap<String, Option<f64>>,
    pub errors: Vec<FileError>,
}

enum Outcome {
    Kept(CorpusTree),
    Small,
    Malformed(FileError),
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let unreadable = |source| Error::UnreadablePath { path: dir.to_path_buf(), source };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(unreadable)? {
        let path = entry.map_err(unreadable)?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// `true` for placeholders of removed comments.
fn is_removed(r: &NodeRecord) -> bool {
    r.deleted || r.text.as_deref() == Some("")
}

/// Drops removed nodes and everything replying to them, directly or not.
fn prune(records: Vec<NodeRecord>) -> Vec<NodeRecord> {
    let mut children: HashMap<&str, Vec<&str>> = HashMap::new();
    for r in &records {
        if let Some(p) = &r.parent {
            children.entry(p.as_str()).or_default().push(&r.id);
        }
    }
    let mut dropped: HashSet<String> = HashSet::new();
    let mut stack: Vec<&str> = records.iter().filter(|r| is_removed(r)).map(|r| r.id.as_str()).collect();
    while let Some(id) = stack.pop() {
        if dropped.insert(id.to_string()) {
            stack.extend(children.get(id).into_iter().flatten());
        }
    }
    records.into_iter().filter(|r| !dropped.contains(&r.id)).collect()
}

fn load_one(path: &Path, opts: &LoadOptions) -> Outcome {
    let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let name = path.file_stem().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let fail = |e: Error| Outcome::Malformed(FileError { file: file.clone(), kind: e.kind().into(), message: e.to_string() });

    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return fail(Error::Io(e)),
    };
    let doc = match TreeDocument::from_json(&text) {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    let records = if doc.nodes.iter().any(is_removed) {
        if opts.strict {
            return Outcome::Malformed(FileError {
                file,
                kind: "RemovedContent".into(),
                message: "tree contains deleted or empty nodes".into(),
            });
        }
        prune(doc.nodes)
    } else {
        doc.nodes
    };
    if records.is_empty() {
        return fail(Error::NoRoot);
    }
    match ReplyTree::build(&records) {
        Ok(tree) if tree.len() < opts.min_size => Outcome::Small,
        Ok(tree) => Outcome::Kept(CorpusTree { name, tree }),
        Err(e) => fail(e),
    }
}

/// Loads every `*.json` tree document in a directory (sorted by file name),
/// or a single document. Per-file problems are recorded in the report.
pub fn load_corpus(path: &Path, opts: &LoadOptions) -> Result<(Vec<CorpusTree>, CleaningReport)> {
    let meta = fs::metadata(path).map_err(|source| Error::UnreadablePath { path: path.to_path_buf(), source })?;
    let files = if meta.is_dir() { json_files(path)? } else { vec![path.to_path_buf()] };

    let outcomes: Vec<Outcome> = files.par_iter().map(|f| load_one(f, opts)).collect();
    let mut report = CleaningReport { trees_in: files.len(), ..Default::default() };
    let mut trees = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Kept(t) => {
                report.q_hat.insert(t.name.clone(), t.tree.estimate_q().ok());
                trees.push(t);
            }
            Outcome::Small => report.removed_small += 1,
            Outcome::Malformed(e) => {
                report.removed_malformed += 1;
                report.errors.push(e);
            }
        }
    }
    report.trees_out = trees.len();
    debug_assert_eq!(report.trees_out, report.trees_in - report.removed_small - report.removed_malformed);
    Ok((trees, report))
}

/// Writes each tree to `<dir>/<name>.json`.
pub fn write_corpus(dir: &Path, trees: &[CorpusTree]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for t in trees {
        fs::write(dir.join(format!("{}.json", t.name)), t.tree.to_document().to_json()?)?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupportClass {
    /// `q̂ ≤ 0.2`
    Low,
    /// `0.4 ≤ q̂ ≤ 0.6`
    Balanced,
    /// `q̂ ≥ 0.8`
    High,
    Unclassified,
}

impl SupportClass {
    pub const ALL: [SupportClass; 4] =
        [SupportClass::Low, SupportClass::Balanced, SupportClass::High, SupportClass::Unclassified];

    /// Class of `supports / edges`, compared exactly.
    pub fn from_counts(supports: usize, edges: usize) -> Option<Self> {
        if edges == 0 {
            return None;
        }
        let (s5, e) = (5 * supports, edges);
        Some(if s5 <= e {
            SupportClass::Low
        } else if 2 * e <= s5 && s5 <= 3 * e {
            SupportClass::Balanced
        } else if s5 >= 4 * e {
            SupportClass::High
        } else {
            SupportClass::Unclassified
        })
    }

    pub fn from_fraction(q: f64) -> Self {
        if q <= 0.2 {
            SupportClass::Low
        } else if (0.4..=0.6).contains(&q) {
            SupportClass::Balanced
        } else if q >= 0.8 {
            SupportClass::High
        } else {
            SupportClass::Unclassified
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SupportClass::Low => "low",
            SupportClass::Balanced => "balanced",
            SupportClass::High => "high",
            SupportClass::Unclassified => "unclassified",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SupportBins {
    /// Tree names per class; every class is present.
    pub members: BTreeMap<SupportClass, Vec<String>>,
    /// Trees without edges.
    pub skipped: Vec<String>,
}

pub fn bin_by_support(trees: &[CorpusTree]) -> SupportBins {
    let mut bins = SupportBins {
        members: SupportClass::ALL.iter().map(|&c| (c, Vec::new())).collect(),
        skipped: Vec::new(),
    };
    for t in trees {
        let (s, e) = t.tree.support_counts();
        match SupportClass::from_counts(s, e) {
            Some(c) => bins.members.get_mut(&c).expect("all classes present").push(t.name.clone()),
            None => bins.skipped.push(t.name.clone()),
        }
    }
    bins
}
