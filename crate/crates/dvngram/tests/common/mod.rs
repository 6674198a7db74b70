#![allow(dead_code)]

use std::path::{Path, PathBuf};

use dvngram::config::ExperimentConfig;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

const POSITIVE: [&str; 8] = [
    "great",
    "superb",
    "loved",
    "wonderful",
    "excellent",
    "brilliant",
    "moving",
    "fun",
];
const NEGATIVE: [&str; 8] = [
    "awful", "boring", "hated", "terrible", "dull", "worst", "weak", "mess",
];
const COMMON: [&str; 10] = [
    "the", "film", "movie", "a", "was", "and", "it", "plot", "actor", "scene",
];

#[derive(Debug, Clone, Copy)]
pub struct FixtureSize {
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub unlabeled: usize,
    pub words: usize,
}

impl Default for FixtureSize {
    fn default() -> Self {
        FixtureSize {
            train_per_class: 20,
            test_per_class: 10,
            unlabeled: 6,
            words: 25,
        }
    }
}

fn review(rng: &mut rand_chacha::ChaCha8Rng, polar: &[&str], words: usize) -> String {
    let mut out: Vec<&str> = (0..words)
        .map(|_| {
            if rng.gen_bool(0.3) {
                *polar.choose(rng).unwrap()
            } else {
                *COMMON.choose(rng).unwrap()
            }
        })
        .collect();
    out.push(".<br /><br />");
    out.join(" ")
}

/// Writes a small aclImdb-shaped dataset whose classes are separable by
/// their sentiment words.
pub fn write_fixture(root: &Path, size: FixtureSize, seed: u64) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for sub in [
        "train/pos",
        "train/neg",
        "test/pos",
        "test/neg",
        "train/unsup",
    ] {
        std::fs::create_dir_all(root.join(sub)).unwrap();
    }
    let mixed: Vec<&str> = POSITIVE.iter().chain(&NEGATIVE).copied().collect();
    for (sub, n, polar) in [
        ("train/pos", size.train_per_class, &POSITIVE[..]),
        ("train/neg", size.train_per_class, &NEGATIVE[..]),
        ("test/pos", size.test_per_class, &POSITIVE[..]),
        ("test/neg", size.test_per_class, &NEGATIVE[..]),
        ("train/unsup", size.unlabeled, &mixed[..]),
    ] {
        for i in 0..n {
            let rating = if sub.ends_with("pos") {
                8
            } else if sub.ends_with("neg") {
                2
            } else {
                0
            };
            std::fs::write(
                root.join(sub).join(format!("{i}_{rating}.txt")),
                review(&mut rng, polar, size.words),
            )
            .unwrap();
        }
    }
}

/// Small, fast experiment over a fixture at `root/data`, writing to `root/out`.
pub fn small_config(root: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig {
        dataset_path: root.join("data"),
        output_dir: root.join("out"),
        runs: 2,
        ..ExperimentConfig::default()
    };
    c.train.dim = 12;
    c.train.epochs = 4;
    c.train.mini_batch = 32;
    c.classifier.c_grid = vec![0.1, 1.0, 10.0];
    c
}

pub fn fixture_dir(size: FixtureSize, seed: u64) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    write_fixture(&data, size, seed);
    (dir, data)
}
