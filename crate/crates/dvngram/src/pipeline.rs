//! End-to-end experiment steps: ingest, vocabulary, embedding training and
//! classifier evaluation, each reading and writing under `output_dir`.
//!
//! ```text
//! <output_dir>/manifest.tsv
//! <output_dir>/vocab.tsv
//! <output_dir>/run<r>/{header.txt, doc_vectors.txt, token_vectors.txt}
//! <output_dir>/run<r>/checkpoint/...
//! <output_dir>/metrics-<hash>.{json,txt}
//! ```

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use dvngram_core::baselines::{
    bag_of_ngram_features, concat_features, fit_nb_weights, nb_weighted_features,
    SparseFeatureVector,
};
use dvngram_core::classifier::{
    dev_split_select, evaluate, relative_tolerance, train_logreg, FeatureRow, LabeledDataset,
};
use dvngram_core::corpus::{EncodedDocument, Label, NoiseTable, Vocabulary};
use dvngram_core::math::norm2;
use dvngram_core::model::{EmbeddingModel, Real};
use dvngram_core::trainer::{EpochReport, Trainer};
use log::info;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Mode, Precision};
use crate::error::{Error, Result};
use crate::formats::checkpoint::{
    read_header, write_checkpoint, CheckpointHeader, DOC_VECTORS_FILE, HEADER_FILE,
};
use crate::formats::vectors::read_vectors;
use crate::formats::vocab::write_vocab;
use crate::formats::write_file;
use crate::ingest::{load_entries, select_subset, Document, Manifest, Split, MANIFEST_FILE};
use crate::parallel::run_epochs;

pub const VOCAB_FILE: &str = "vocab.tsv";

pub fn run_dir(config: &ExperimentConfig, run: usize) -> PathBuf {
    config.output_dir.join(format!("run{run}"))
}

pub fn doc_name(doc_id: u32) -> String {
    format!("doc_{doc_id}")
}

/// Scans the dataset and writes the manifest.
pub fn cmd_ingest(config: &ExperimentConfig) -> Result<Manifest> {
    let manifest = Manifest::scan(&config.dataset_path)?;
    let c = manifest.counts();
    info!(
        "ingested {} documents: train {}+/{}-, test {}+/{}-, unlabeled {}",
        c.total(),
        c.train_pos,
        c.train_neg,
        c.test_pos,
        c.test_neg,
        c.unlabeled
    );
    manifest.write(&config.output_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// The documents an experiment works on: labeled train and test reviews,
/// plus unlabeled ones when enabled, in id order.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub documents: Vec<Document>,
}

impl Corpus {
    pub fn labeled(&self, split: Split) -> impl Iterator<Item = (&Document, Label)> {
        self.documents
            .iter()
            .filter(move |d| d.split == split)
            .filter_map(|d| d.label.map(|l| (d, l)))
    }

    pub fn count(&self, split: Split) -> usize {
        self.documents.iter().filter(|d| d.split == split).count()
    }
}

/// Reads the manifest written by `ingest` (scanning the dataset when it is
/// absent), drops unlabeled reviews unless enabled, applies the subset and
/// tokenizes.
pub fn load_corpus(config: &ExperimentConfig) -> Result<Corpus> {
    let path = config.output_dir.join(MANIFEST_FILE);
    let mut manifest = if path.exists() {
        Manifest::read(&path)?
    } else {
        cmd_ingest(config)?
    };
    if !config.use_unlabeled {
        manifest.entries.retain(|e| e.split != Split::Unsup);
    }
    if let Some(s) = &config.subset {
        let unlabeled = if config.use_unlabeled { s.unlabeled } else { 0 };
        manifest = select_subset(&manifest, s.train, s.test, unlabeled, s.seed)?;
    }
    let documents = load_entries(&manifest.root, &manifest.entries)?;
    let corpus = Corpus { documents };
    if corpus.count(Split::Train) == 0 || corpus.count(Split::Test) == 0 {
        return Err(Error::Data(
            "corpus needs both training and test reviews".into(),
        ));
    }
    Ok(corpus)
}

/// Vocabulary of the embedding model over every corpus document.
pub fn build_vocab(config: &ExperimentConfig, corpus: &Corpus) -> Result<Vocabulary> {
    let words: Vec<&[String]> = corpus
        .documents
        .iter()
        .map(|d| d.words.as_slice())
        .collect();
    Ok(Vocabulary::build(
        &words,
        config.ngram_order,
        config.min_count,
    )?)
}

pub fn cmd_vocab(config: &ExperimentConfig) -> Result<Vocabulary> {
    config.validate()?;
    let corpus = load_corpus(config)?;
    let vocab = build_vocab(config, &corpus)?;
    write_vocab(&config.output_dir.join(VOCAB_FILE), &vocab)?;
    info!(
        "vocabulary: {} tokens up to order {}",
        vocab.len(),
        config.ngram_order
    );
    Ok(vocab)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub num_docs: usize,
    pub vocab_size: usize,
    /// Epoch reports of each run.
    pub reports: Vec<Vec<EpochReport>>,
}

/// Trains one embedding model per run over the whole corpus.
pub fn cmd_train(config: &ExperimentConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let corpus = load_corpus(config)?;
    let vocab = build_vocab(config, &corpus)?;
    write_vocab(&config.output_dir.join(VOCAB_FILE), &vocab)?;
    let encoded: Vec<EncodedDocument> = corpus
        .documents
        .iter()
        .enumerate()
        .map(|(row, d)| vocab.encode(row as u32, &d.words))
        .collect();
    let noise = NoiseTable::new(&vocab, config.train.noise_exponent)?;
    let doc_names: Vec<String> = corpus
        .documents
        .iter()
        .map(|d| doc_name(d.doc_id))
        .collect();
    info!(
        "training on {} documents, {} tokens, {} workers",
        encoded.len(),
        vocab.len(),
        config.workers
    );
    let mut reports = Vec::with_capacity(config.runs);
    for run in 0..config.runs {
        let job = TrainJob {
            config,
            run,
            encoded: &encoded,
            noise: &noise,
            doc_names: &doc_names,
            token_names: vocab.tokens(),
        };
        reports.push(match config.precision {
            Precision::F32 => job.run::<f32>()?,
            Precision::F64 => job.run::<f64>()?,
        });
    }
    Ok(TrainOutcome {
        num_docs: encoded.len(),
        vocab_size: vocab.len(),
        reports,
    })
}

struct TrainJob<'a> {
    config: &'a ExperimentConfig,
    run: usize,
    encoded: &'a [EncodedDocument],
    noise: &'a NoiseTable,
    doc_names: &'a [String],
    token_names: &'a [String],
}

impl TrainJob<'_> {
    fn run<T: Real>(&self) -> Result<Vec<EpochReport>> {
        let tc = self.config.train_config(self.run);
        let model = EmbeddingModel::<T>::init(self.encoded.len(), self.noise.len(), &tc)?;
        let mut trainer = Trainer::new(&model, self.encoded, self.noise, &tc)?;
        let dir = run_dir(self.config, self.run);
        let hash = self.config.embedding_hash();
        let header = |t: &Trainer| CheckpointHeader {
            epoch: t.epoch(),
            config_hash: hash.clone(),
            rng: t.rng_state(),
        };
        let reports = run_epochs(
            &mut trainer,
            &model,
            self.noise,
            self.config.workers,
            |report, t| {
                info!(
                    "run {} epoch {}: mean objective {:.6}, {} pairs, {:.2}s",
                    self.run,
                    report.epoch,
                    report.mean_objective,
                    report.pairs_processed,
                    report.wall_seconds
                );
                if self.config.train.checkpoint {
                    write_checkpoint(
                        &dir.join("checkpoint"),
                        &header(t),
                        &model,
                        self.doc_names,
                        self.token_names,
                    )?;
                }
                Ok(())
            },
        )?;
        write_checkpoint(
            &dir,
            &header(&trainer),
            &model,
            self.doc_names,
            self.token_names,
        )?;
        Ok(reports)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub run_seconds: Vec<f64>,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub name: String,
    pub mode: Mode,
    pub config_hash: String,
    /// Test accuracy of each run, as a fraction.
    pub accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Regularization constant chosen on the dev split, per run.
    pub selected_c: Vec<f64>,
    pub train_docs: usize,
    pub test_docs: usize,
    pub feature_dim: usize,
    pub timing: Timing,
    pub config: ExperimentConfig,
}

impl MetricsReport {
    /// `metrics-<first 16 hex digits of the config hash>`.
    pub fn file_stem(&self) -> String {
        format!("metrics-{}", &self.config_hash[..16])
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: &dyn std::fmt::Display| s.push_str(&format!("{k} = {v}\n"));
        line("name", &self.name);
        line("mode", &self.mode);
        line("config_hash", &self.config_hash);
        line("runs", &self.accuracies.len());
        line("mean_accuracy", &self.mean_accuracy);
        line("train_docs", &self.train_docs);
        line("test_docs", &self.test_docs);
        line("feature_dim", &self.feature_dim);
        line("total_seconds", &self.timing.total_seconds);
        s.push_str("\nrun\tseed\tC\taccuracy\tseconds\n");
        for (r, acc) in self.accuracies.iter().enumerate() {
            s.push_str(&format!(
                "{r}\t{}\t{}\t{acc}\t{}\n",
                self.config.run_seed(r),
                self.selected_c[r],
                self.timing.run_seconds[r]
            ));
        }
        s.push_str("\n# config\n");
        s.push_str(&self.config.to_toml());
        s
    }

    /// Writes the JSON and text variants; returns their paths.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        let json = dir.join(format!("{}.json", self.file_stem()));
        let text = dir.join(format!("{}.txt", self.file_stem()));
        write_file(&json, |w| {
            serde_json::to_writer_pretty(&mut *w, self)?;
            writeln!(w)
        })?;
        write_file(&text, |w| w.write_all(self.to_text().as_bytes()))?;
        Ok((json, text))
    }

    pub fn read(path: &Path) -> Result<MetricsReport> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Bag-of-ngram features of the labeled train and test reviews, with the
/// vocabulary built on the training reviews only.
fn bag_features(
    config: &ExperimentConfig,
    corpus: &Corpus,
) -> Result<(Vec<SparseFeatureVector>, Vec<SparseFeatureVector>, usize)> {
    let train_words: Vec<&[String]> = corpus
        .labeled(Split::Train)
        .map(|(d, _)| d.words.as_slice())
        .collect();
    let vocab = Vocabulary::build(&train_words, config.classifier.bag_order, config.min_count)?;
    let weighting = config.classifier.weighting.into();
    let features = |split| -> Vec<SparseFeatureVector> {
        corpus
            .labeled(split)
            .map(|(d, _)| {
                bag_of_ngram_features(&vocab.encode(d.doc_id, &d.words), vocab.len(), weighting)
            })
            .collect()
    };
    Ok((features(Split::Train), features(Split::Test), vocab.len()))
}

/// Reads the document vectors of `run` as rows keyed by document id.
fn load_run_vectors(config: &ExperimentConfig, run: usize) -> Result<HashMap<String, Vec<f64>>> {
    let dir = run_dir(config, run);
    let header_path = dir.join(HEADER_FILE);
    if !header_path.exists() {
        return Err(Error::Data(format!(
            "missing document vectors for run {run} in {}; run `train` first",
            dir.display()
        )));
    }
    let header = read_header(&header_path)?;
    if header.config_hash != config.embedding_hash() {
        return Err(Error::Data(format!(
            "vectors in {} were trained with a different configuration",
            dir.display()
        )));
    }
    let path = dir.join(DOC_VECTORS_FILE);
    let (names, rows) = match config.precision {
        Precision::F32 => rows_f64::<f32>(&path)?,
        Precision::F64 => rows_f64::<f64>(&path)?,
    };
    Ok(names.into_iter().zip(rows).collect())
}

fn rows_f64<T: Real + FromStr>(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let (names, m) = read_vectors::<T>(path)?;
    let rows = (0..m.rows()).map(|r| m.row_f64(r)).collect();
    Ok((names, rows))
}

fn dense_features(
    config: &ExperimentConfig,
    corpus: &Corpus,
    vectors: &HashMap<String, Vec<f64>>,
    split: Split,
) -> Result<Vec<Vec<f64>>> {
    corpus
        .labeled(split)
        .map(|(d, _)| {
            let name = doc_name(d.doc_id);
            let mut v = vectors
                .get(&name)
                .cloned()
                .ok_or_else(|| Error::Data(format!("no vector for {name}")))?;
            if config.classifier.normalize {
                let n = norm2(&v);
                if n > 0.0 {
                    v.iter_mut().for_each(|x| *x /= n);
                }
            }
            Ok(v)
        })
        .collect()
}

/// Dev-selects `C`, refits on the full training set and scores the test
/// set. Returns `(accuracy, C)`.
fn classify<R: FeatureRow>(
    config: &ExperimentConfig,
    run: usize,
    train: LabeledDataset<R>,
    test: LabeledDataset<R>,
) -> Result<(f64, f64)> {
    let eps = config.classifier.tol_eps;
    let c = dev_split_select(&train, &config.classifier.c_grid, config.run_seed(run), eps)?;
    let tol = relative_tolerance(&train, c, eps);
    let model = train_logreg(&train, c, tol)?;
    Ok((evaluate(&model, &test)?, c))
}

/// Trains and scores the classifier of `config.mode` for every run and
/// writes the metrics report.
pub fn cmd_evaluate(config: &ExperimentConfig) -> Result<MetricsReport> {
    config.validate()?;
    let start = Instant::now();
    let corpus = load_corpus(config)?;
    let train_labels: Vec<Label> = corpus.labeled(Split::Train).map(|(_, l)| l).collect();
    let test_labels: Vec<Label> = corpus.labeled(Split::Test).map(|(_, l)| l).collect();
    let bag = if config.mode.uses_bag() {
        Some(bag_features(config, &corpus)?)
    } else {
        None
    };

    let mut accuracies = Vec::with_capacity(config.runs);
    let mut selected_c = Vec::with_capacity(config.runs);
    let mut run_seconds = Vec::with_capacity(config.runs);
    let mut feature_dim = 0;
    for run in 0..config.runs {
        let t = Instant::now();
        let (acc, c) = match (config.mode, &bag) {
            (Mode::Bo, Some((train, test, dim))) => {
                feature_dim = *dim;
                classify(
                    config,
                    run,
                    LabeledDataset::new(train.iter().collect(), train_labels.clone(), *dim)?,
                    LabeledDataset::new(test.iter().collect(), test_labels.clone(), *dim)?,
                )?
            }
            (Mode::Dv, _) => {
                let vectors = load_run_vectors(config, run)?;
                let train = dense_features(config, &corpus, &vectors, Split::Train)?;
                let test = dense_features(config, &corpus, &vectors, Split::Test)?;
                feature_dim = config.train.dim;
                classify(
                    config,
                    run,
                    LabeledDataset::new(train, train_labels.clone(), feature_dim)?,
                    LabeledDataset::new(test, test_labels.clone(), feature_dim)?,
                )?
            }
            (Mode::DvNbbo, Some((bag_train, bag_test, dim))) => {
                let vectors = load_run_vectors(config, run)?;
                let dense_train = dense_features(config, &corpus, &vectors, Split::Train)?;
                let dense_test = dense_features(config, &corpus, &vectors, Split::Test)?;
                let pairs: Vec<(SparseFeatureVector, Label)> = bag_train
                    .iter()
                    .cloned()
                    .zip(train_labels.iter().copied())
                    .collect();
                let nb = fit_nb_weights(&pairs, *dim, config.classifier.nb_alpha)?;
                let combine = |dense: &[Vec<f64>],
                               sparse: &[SparseFeatureVector]|
                 -> Result<Vec<SparseFeatureVector>> {
                    dense
                        .iter()
                        .zip(sparse)
                        .map(|(d, s)| {
                            Ok(concat_features(
                                d,
                                &nb_weighted_features(s, &nb)?,
                                config.classifier.dense_scale,
                            ))
                        })
                        .collect()
                };
                feature_dim = config.train.dim + dim;
                classify(
                    config,
                    run,
                    LabeledDataset::new(
                        combine(&dense_train, bag_train)?,
                        train_labels.clone(),
                        feature_dim,
                    )?,
                    LabeledDataset::new(
                        combine(&dense_test, bag_test)?,
                        test_labels.clone(),
                        feature_dim,
                    )?,
                )?
            }
            _ => unreachable!("bag features are built for every mode that uses them"),
        };
        info!("run {run}: C = {c}, test accuracy {:.4}", acc);
        accuracies.push(acc);
        selected_c.push(c);
        run_seconds.push(t.elapsed().as_secs_f64());
    }

    let report = MetricsReport {
        name: config.name.clone(),
        mode: config.mode,
        config_hash: config.hash(),
        mean_accuracy: mean(&accuracies),
        accuracies,
        selected_c,
        train_docs: train_labels.len(),
        test_docs: test_labels.len(),
        feature_dim,
        timing: Timing {
            run_seconds,
            total_seconds: start.elapsed().as_secs_f64(),
        },
        config: config.clone(),
    };
    let (json, _) = report.write(&config.output_dir)?;
    info!(
        "mean accuracy {:.4} over {} runs -> {}",
        report.mean_accuracy,
        config.runs,
        json.display()
    );
    Ok(report)
}

/// Trains embeddings when the mode needs them, then evaluates.
pub fn run_experiment(config: &ExperimentConfig) -> Result<MetricsReport> {
    config.validate()?;
    if config.mode.uses_vectors() {
        cmd_train(config)?;
    }
    cmd_evaluate(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_is_arithmetic() {
        assert_eq!(mean(&[0.5]), 0.5);
        assert!((mean(&[0.8, 0.9, 0.85]) - 0.85).abs() <= 1e-12);
    }
}
