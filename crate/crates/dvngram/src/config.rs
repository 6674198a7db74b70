//! Experiment configuration, TOML loading and named presets.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dvngram_core::baselines::{TermWeighting, DEFAULT_NB_ALPHA};
use dvngram_core::classifier::DEFAULT_C_GRID;
use dvngram_core::model::{LearningRateSchedule, TrainConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const PRESETS: [&str; 8] = [
    "dv-uni",
    "dv-bi",
    "dv-tri",
    "dv-tri-unlabd",
    "bo-uni",
    "bo-bi",
    "bo-tri",
    "dv-tri+nbbo-tri",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Logistic regression on document vectors.
    #[serde(rename = "dv")]
    Dv,
    /// Logistic regression on binary bag-of-ngram features.
    #[serde(rename = "bo")]
    Bo,
    /// Document vectors concatenated with NB-weighted bag-of-ngram features.
    #[serde(rename = "dv+nbbo")]
    DvNbbo,
}

impl Mode {
    pub fn uses_vectors(self) -> bool {
        matches!(self, Mode::Dv | Mode::DvNbbo)
    }

    pub fn uses_bag(self) -> bool {
        matches!(self, Mode::Bo | Mode::DvNbbo)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Dv => "dv",
            Mode::Bo => "bo",
            Mode::DvNbbo => "dv+nbbo",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "dv" => Ok(Mode::Dv),
            "bo" => Ok(Mode::Bo),
            "dv+nbbo" => Ok(Mode::DvNbbo),
            _ => Err(Error::Usage(format!(
                "unknown mode {s:?} (expected dv, bo or dv+nbbo)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    Constant,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Binary,
    Tf,
}

impl From<Weighting> for TermWeighting {
    fn from(w: Weighting) -> TermWeighting {
        match w {
            Weighting::Binary => TermWeighting::Binary,
            Weighting::Tf => TermWeighting::TermFrequency,
        }
    }
}

/// Embedding hyper-parameters; the seed lives on [`ExperimentConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub dim: usize,
    pub learning_rate: f64,
    pub mini_batch: usize,
    pub epochs: usize,
    pub negative_k: usize,
    pub noise_exponent: f64,
    pub use_bias: bool,
    pub schedule: Schedule,
    /// Snapshot the model after every epoch.
    pub checkpoint: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSection {
            dim: d.dim,
            learning_rate: d.learning_rate,
            mini_batch: d.mini_batch,
            epochs: d.epochs,
            negative_k: d.negative_k,
            noise_exponent: d.noise_exponent,
            use_bias: d.use_bias,
            schedule: Schedule::Constant,
            checkpoint: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSection {
    pub c_grid: Vec<f64>,
    /// Newton stopping rule: gradient norm below `tol_eps * |grad f(0)|`.
    pub tol_eps: f64,
    /// L2-normalize document vectors before classification.
    pub normalize: bool,
    /// Multiplier on the dense block in dv+nbbo mode.
    pub dense_scale: f64,
    pub nb_alpha: f64,
    pub weighting: Weighting,
    /// Highest n-gram order of the bag-of-ngram features.
    pub bag_order: usize,
}

impl Default for ClassifierSection {
    fn default() -> Self {
        ClassifierSection {
            c_grid: DEFAULT_C_GRID.to_vec(),
            tol_eps: 1e-3,
            normalize: false,
            dense_scale: 1.0,
            nb_alpha: DEFAULT_NB_ALPHA,
            weighting: Weighting::Binary,
            bag_order: 1,
        }
    }
}

/// Seeded, class-balanced selection of part of the dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubsetSection {
    pub train: usize,
    pub test: usize,
    pub unlabeled: usize,
    pub seed: u64,
}

impl Default for SubsetSection {
    fn default() -> Self {
        SubsetSection {
            train: 2000,
            test: 2000,
            unlabeled: 0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Preset the configuration started from, if any.
    pub name: String,
    pub dataset_path: PathBuf,
    pub output_dir: PathBuf,
    pub mode: Mode,
    /// Highest n-gram order predicted by the document vectors.
    pub ngram_order: usize,
    pub use_unlabeled: bool,
    pub min_count: u64,
    pub runs: usize,
    /// Training threads; 1 is bit-reproducible.
    pub workers: usize,
    pub precision: Precision,
    /// Run `r` uses `seed + r` for embeddings and the dev split.
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subset: Option<SubsetSection>,
    pub train: TrainSection,
    pub classifier: ClassifierSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "custom".into(),
            dataset_path: PathBuf::from("aclImdb"),
            output_dir: PathBuf::from("out"),
            mode: Mode::Dv,
            ngram_order: 1,
            use_unlabeled: false,
            min_count: 1,
            runs: 5,
            workers: 1,
            precision: Precision::F32,
            seed: 1,
            subset: None,
            train: TrainSection::default(),
            classifier: ClassifierSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<ExperimentConfig> {
        let (mode, ngram_order, use_unlabeled, bag_order) = match name {
            "dv-uni" => (Mode::Dv, 1, false, 1),
            "dv-bi" => (Mode::Dv, 2, false, 1),
            "dv-tri" => (Mode::Dv, 3, false, 1),
            "dv-tri-unlabd" => (Mode::Dv, 3, true, 1),
            "bo-uni" => (Mode::Bo, 1, false, 1),
            "bo-bi" => (Mode::Bo, 1, false, 2),
            "bo-tri" => (Mode::Bo, 1, false, 3),
            "dv-tri+nbbo-tri" => (Mode::DvNbbo, 3, true, 3),
            _ => {
                return Err(Error::Usage(format!(
                    "unknown preset {name:?}; available: {}",
                    PRESETS.join(", ")
                )))
            }
        };
        let mut c = ExperimentConfig {
            name: name.to_string(),
            mode,
            ngram_order,
            use_unlabeled,
            ..ExperimentConfig::default()
        };
        c.classifier.bag_order = bag_order;
        Ok(c)
    }

    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        toml::from_str(text).map_err(|e| Error::Usage(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Checks ranges; violations are usage errors.
    pub fn validate(&self) -> Result<()> {
        let usage = |m: &str| Err(Error::Usage(m.to_string()));
        if !(1..=3).contains(&self.ngram_order) {
            return usage("ngram_order must be 1, 2 or 3");
        }
        if !(1..=3).contains(&self.classifier.bag_order) {
            return usage("classifier.bag_order must be 1, 2 or 3");
        }
        if self.runs == 0 {
            return usage("runs must be at least 1");
        }
        if self.workers == 0 {
            return usage("workers must be at least 1");
        }
        if self.min_count == 0 {
            return usage("min_count must be at least 1");
        }
        if self.classifier.c_grid.is_empty()
            || self
                .classifier
                .c_grid
                .iter()
                .any(|c| !(*c > 0.0 && c.is_finite()))
        {
            return usage("classifier.c_grid must be non-empty and positive");
        }
        if !(self.classifier.tol_eps > 0.0 && self.classifier.tol_eps < 1.0) {
            return usage("classifier.tol_eps must lie in (0, 1)");
        }
        if !(self.classifier.nb_alpha > 0.0 && self.classifier.nb_alpha.is_finite()) {
            return usage("classifier.nb_alpha must be positive");
        }
        if !self.classifier.dense_scale.is_finite() {
            return usage("classifier.dense_scale must be finite");
        }
        self.train_config(0)
            .validate()
            .map_err(|e| Error::Usage(format!("train: {e}")))
    }

    /// Embedding configuration of run `run`.
    pub fn train_config(&self, run: usize) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            dim: t.dim,
            learning_rate: t.learning_rate,
            mini_batch: t.mini_batch,
            epochs: t.epochs,
            negative_k: t.negative_k,
            seed: self.run_seed(run),
            noise_exponent: t.noise_exponent,
            use_bias: t.use_bias,
            schedule: match t.schedule {
                Schedule::Constant => LearningRateSchedule::Constant,
                Schedule::Linear => LearningRateSchedule::Linear,
            },
        }
    }

    pub fn run_seed(&self, run: usize) -> u64 {
        self.seed.wrapping_add(run as u64)
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        hex_sha256(
            serde_json::to_string(self)
                .expect("config serializes")
                .as_bytes(),
        )
    }

    /// Hash over the fields that determine the learned vectors; evaluation
    /// uses it to refuse vectors trained under another configuration.
    pub fn embedding_hash(&self) -> String {
        let key = serde_json::json!({
            "ngram_order": self.ngram_order,
            "use_unlabeled": self.use_unlabeled,
            "min_count": self.min_count,
            "workers": self.workers,
            "precision": self.precision,
            "seed": self.seed,
            "subset": self.subset,
            "train": self.train,
        });
        hex_sha256(key.to_string().as_bytes())
    }
}

pub fn hex_sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_hyperparameters() {
        let c = ExperimentConfig::default();
        let t = c.train_config(0);
        assert_eq!(
            (t.dim, t.learning_rate, t.mini_batch, t.epochs, t.negative_k),
            (500, 0.25, 100, 10, 5)
        );
        assert_eq!(c.runs, 5);
        assert_eq!(c.workers, 1);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn every_preset_is_valid_and_round_trips() {
        for name in PRESETS {
            let c = ExperimentConfig::preset(name).unwrap();
            c.validate().unwrap();
            let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
            assert_eq!(back, c, "{name}");
            assert_eq!(back.hash(), c.hash());
        }
        assert!(matches!(
            ExperimentConfig::preset("dv-quad"),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn partial_toml_fills_defaults() {
        let c = ExperimentConfig::from_toml(
            "ngram_order = 2\nmode = \"dv+nbbo\"\n[train]\ndim = 16\n[subset]\ntrain = 10\n",
        )
        .unwrap();
        assert_eq!(c.ngram_order, 2);
        assert_eq!(c.mode, Mode::DvNbbo);
        assert_eq!(c.train.dim, 16);
        assert_eq!(c.train.epochs, 10);
        assert_eq!(c.subset.as_ref().unwrap().train, 10);
        assert_eq!(c.subset.as_ref().unwrap().test, 2000);
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn validation_rejects_bad_ranges() {
        for edit in [
            |c: &mut ExperimentConfig| c.ngram_order = 4,
            |c: &mut ExperimentConfig| c.runs = 0,
            |c: &mut ExperimentConfig| c.workers = 0,
            |c: &mut ExperimentConfig| c.train.dim = 0,
            |c: &mut ExperimentConfig| c.classifier.c_grid.clear(),
        ] {
            let mut c = ExperimentConfig::default();
            edit(&mut c);
            assert!(matches!(c.validate(), Err(Error::Usage(_))));
        }
    }

    #[test]
    fn hashes_track_relevant_fields() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.classifier.normalize = true;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.embedding_hash(), b.embedding_hash());
        b.train.epochs = 3;
        assert_ne!(a.embedding_hash(), b.embedding_hash());
        assert_eq!(a.hash().len(), 64);
    }
}
