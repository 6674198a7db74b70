//! Reads the aclImdb directory layout into a manifest and tokenized
//! documents.
//!
//! ```text
//! <root>/train/pos  train/neg  train/unsup  test/pos  test/neg
//! ```
//!
//! Document ids follow the order train/pos, train/neg, test/pos, test/neg,
//! train/unsup; inside a directory files are ordered by their numeric
//! prefix (`<id>_<rating>.txt`), then by name.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dvngram_core::corpus::{tokenize, Label};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{read_lines, write_file};

pub const MANIFEST_FILE: &str = "manifest.tsv";

/// SHA-256 of `aclImdb_v1.tar.gz` as distributed by the dataset authors.
pub const ACLIMDB_ARCHIVE_SHA256: &str =
    "c40f74a18d3b61f90feba1e17730e0d38e8b97c05fde7008942e91923d1658fe";

/// Review counts of the full IMDB release.
pub const FULL_IMDB: ManifestCounts = ManifestCounts {
    train_pos: 12_500,
    train_neg: 12_500,
    test_pos: 12_500,
    test_neg: 12_500,
    unlabeled: 50_000,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    Unsup,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
            Split::Unsup => "unsup",
        })
    }
}

impl FromStr for Split {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            "unsup" => Ok(Split::Unsup),
            _ => Err(()),
        }
    }
}

/// The five source directories, in id order.
const SOURCES: [(&str, Split, Option<Label>); 5] = [
    ("train/pos", Split::Train, Some(Label::Positive)),
    ("train/neg", Split::Train, Some(Label::Negative)),
    ("test/pos", Split::Test, Some(Label::Positive)),
    ("test/neg", Split::Test, Some(Label::Negative)),
    ("train/unsup", Split::Unsup, None),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub doc_id: u32,
    pub split: Split,
    pub label: Option<Label>,
    /// Relative to the dataset root.
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestCounts {
    pub train_pos: usize,
    pub train_neg: usize,
    pub test_pos: usize,
    pub test_neg: usize,
    pub unlabeled: usize,
}

impl ManifestCounts {
    pub fn total(&self) -> usize {
        self.train_pos + self.train_neg + self.test_pos + self.test_neg + self.unlabeled
    }

    /// Labeled positives and negatives across both splits.
    pub fn positives(&self) -> usize {
        self.train_pos + self.test_pos
    }

    pub fn negatives(&self) -> usize {
        self.train_neg + self.test_neg
    }
}

fn label_str(label: Option<Label>) -> &'static str {
    match label {
        Some(Label::Positive) => "pos",
        Some(Label::Negative) => "neg",
        None => "none",
    }
}

fn sort_key(name: &str) -> (u64, String) {
    let prefix: String = name.chars().take_while(char::is_ascii_digit).collect();
    (prefix.parse().unwrap_or(u64::MAX), name.to_string())
}

impl Manifest {
    /// Scans the dataset root. Every source directory must exist (it may be
    /// empty); the first missing one is named in the error.
    pub fn scan(root: &Path) -> Result<Manifest> {
        if !root.is_dir() {
            return Err(Error::Data(format!(
                "dataset root {} is not a directory",
                root.display()
            )));
        }
        let mut entries = Vec::new();
        for (sub, split, label) in SOURCES {
            let dir = root.join(sub);
            if !dir.is_dir() {
                return Err(Error::Data(format!(
                    "missing split directory {sub} under {}",
                    root.display()
                )));
            }
            let mut names: Vec<String> = std::fs::read_dir(&dir)
                .map_err(|e| Error::io(&dir, e))?
                .filter_map(|e| e.ok())
                .filter(|e| e.file_type().map(|t| t.is_file()).unwrap_or(false))
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .collect();
            names.sort_by_cached_key(|n| sort_key(n));
            for name in names {
                entries.push(ManifestEntry {
                    doc_id: entries.len() as u32,
                    split,
                    label,
                    path: Path::new(sub).join(name),
                });
            }
        }
        Ok(Manifest {
            root: root.to_path_buf(),
            entries,
        })
    }

    pub fn counts(&self) -> ManifestCounts {
        let mut c = ManifestCounts::default();
        for e in &self.entries {
            match (e.split, e.label) {
                (Split::Train, Some(Label::Positive)) => c.train_pos += 1,
                (Split::Train, Some(Label::Negative)) => c.train_neg += 1,
                (Split::Test, Some(Label::Positive)) => c.test_pos += 1,
                (Split::Test, Some(Label::Negative)) => c.test_neg += 1,
                _ => c.unlabeled += 1,
            }
        }
        c
    }

    /// Errors unless the counts match the full IMDB release.
    pub fn validate_full_imdb(&self) -> Result<()> {
        let c = self.counts();
        if c == FULL_IMDB {
            Ok(())
        } else {
            Err(Error::Data(format!(
                "expected full IMDB counts {FULL_IMDB:?}, found {c:?}"
            )))
        }
    }

    /// First line holds the dataset root, then
    /// `doc_id<TAB>split<TAB>label<TAB>relative path`.
    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, |w| {
            writeln!(w, "#root\t{}", self.root.display())?;
            for e in &self.entries {
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}",
                    e.doc_id,
                    e.split,
                    label_str(e.label),
                    e.path.display()
                )?;
            }
            Ok(())
        })
    }

    pub fn read(path: &Path) -> Result<Manifest> {
        let lines = read_lines(path)?;
        let mut root = None;
        let mut entries = Vec::with_capacity(lines.len());
        for (no, line) in lines {
            if let Some(r) = line.strip_prefix("#root\t") {
                root = Some(PathBuf::from(r));
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let [id, split, label, rel] = f[..] else {
                return Err(Error::parse(path, no, "expected 4 tab-separated fields"));
            };
            let label = match label {
                "pos" => Some(Label::Positive),
                "neg" => Some(Label::Negative),
                "none" => None,
                other => return Err(Error::parse(path, no, format!("bad label {other:?}"))),
            };
            entries.push(ManifestEntry {
                doc_id: id
                    .parse()
                    .map_err(|_| Error::parse(path, no, "bad doc id"))?,
                split: split
                    .parse()
                    .map_err(|_| Error::parse(path, no, "bad split"))?,
                label,
                path: PathBuf::from(rel),
            });
        }
        let root = root.ok_or_else(|| Error::parse(path, 1, "missing #root line"))?;
        Ok(Manifest { root, entries })
    }
}

/// Hex SHA-256 of a file, streamed.
pub fn sha256_file(path: &Path) -> Result<String> {
    use sha2::{Digest, Sha256};
    use std::io::Read;
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

/// Compares a downloaded archive against `expected` (hex, case-insensitive).
pub fn verify_archive(path: &Path, expected: &str) -> Result<()> {
    let actual = sha256_file(path)?;
    if actual.eq_ignore_ascii_case(expected.trim()) {
        Ok(())
    } else {
        Err(Error::Data(format!(
            "checksum mismatch for {}: expected {expected}, found {actual}",
            path.display()
        )))
    }
}

/// A tokenized document with its split and label.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub doc_id: u32,
    pub split: Split,
    pub label: Option<Label>,
    pub words: Vec<String>,
}

/// Tokenizes a raw review; the HTML line breaks of the IMDB dump become
/// whitespace first.
pub fn tokenize_review(text: &str) -> Vec<String> {
    tokenize(&text.replace("<br />", " ").replace("<br/>", " "))
}

/// Reads and tokenizes every document of the manifest.
pub fn load_documents(manifest: &Manifest) -> Result<Vec<Document>> {
    load_entries(&manifest.root, &manifest.entries)
}

pub fn load_entries(root: &Path, entries: &[ManifestEntry]) -> Result<Vec<Document>> {
    entries
        .iter()
        .map(|e| {
            let path = root.join(&e.path);
            let bytes = std::fs::read(&path).map_err(|err| Error::io(&path, err))?;
            let text = String::from_utf8_lossy(&bytes);
            Ok(Document {
                doc_id: e.doc_id,
                split: e.split,
                label: e.label,
                words: tokenize_review(&text),
            })
        })
        .collect()
}

/// Seeded, class-balanced selection of `train` training reviews, `test`
/// test reviews and `unlabeled` unlabeled reviews, returned in id order.
pub fn select_subset(
    manifest: &Manifest,
    train: usize,
    test: usize,
    unlabeled: usize,
    seed: u64,
) -> Result<Manifest> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut picked = Vec::new();
    let groups: [(Split, Option<Label>, usize); 5] = [
        (Split::Train, Some(Label::Positive), train / 2),
        (Split::Train, Some(Label::Negative), train - train / 2),
        (Split::Test, Some(Label::Positive), test / 2),
        (Split::Test, Some(Label::Negative), test - test / 2),
        (Split::Unsup, None, unlabeled),
    ];
    for (split, label, n) in groups {
        let mut pool: Vec<&ManifestEntry> = manifest
            .entries
            .iter()
            .filter(|e| e.split == split && e.label == label)
            .collect();
        if pool.len() < n {
            return Err(Error::Data(format!(
                "subset wants {n} {split}/{} reviews, only {} available",
                label_str(label),
                pool.len()
            )));
        }
        pool.shuffle(&mut rng);
        picked.extend(pool.into_iter().take(n).cloned());
    }
    picked.sort_by_key(|e| e.doc_id);
    Ok(Manifest {
        root: manifest.root.clone(),
        entries: picked,
    })
}
