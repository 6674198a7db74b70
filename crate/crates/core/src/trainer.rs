//! Negative-sampling SGD over (document, token) pairs and the exact-softmax
//! reference used to check it on small instances.
//!
//! For a pair `(d, w)` with negatives `n_1..n_k` the per-pair objective is
//!
//! ```text
//! l = log s(x_w . x_d) + sum_j log s(-x_{n_j} . x_d)
//! ```
//!
//! and each step ascends its gradient with every sigmoid evaluated at the
//! parameters as they were before the step.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};

use crate::corpus::{EncodedDocument, NoiseTable};
use crate::math::{axpy, dot, log_sigmoid, log_sum_exp, sigmoid, CompensatedSum};
use crate::model::{EmbeddingModel, LearningRateSchedule, Real, TrainConfig, INIT_RANGE};
use crate::{DvRng, Error, Result};

/// Floor of the linear learning-rate schedule, relative to the initial rate.
pub const MIN_LR_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainingPair {
    pub doc_id: u32,
    pub target_token: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    /// Zero-based.
    pub epoch: usize,
    /// Mean per-pair objective, measured before each pair's update.
    pub mean_objective: f64,
    pub pairs_processed: u64,
    /// Filled in by callers that own a clock; zero otherwise.
    pub wall_seconds: f64,
}

/// Reusable scratch space for the update kernel.
#[derive(Debug, Default, Clone)]
pub struct Kernel {
    doc: Vec<f64>,
    doc_grad: Vec<f64>,
    rows: Vec<f64>,
    outputs: Vec<u32>,
    coeffs: Vec<f64>,
}

impl Kernel {
    pub fn new() -> Kernel {
        Kernel::default()
    }

    /// Reads the doc row and every output row, and fills `coeffs` with
    /// `lr * (label - s(score))`. Returns the pair objective.
    fn forward<T: Real>(
        &mut self,
        model: &EmbeddingModel<T>,
        target: u32,
        negatives: &[u32],
        lr: f64,
    ) -> f64 {
        let dim = model.dim();
        self.outputs.clear();
        self.outputs.push(target);
        self.outputs.extend_from_slice(negatives);
        self.rows.resize(self.outputs.len() * dim, 0.0);
        self.coeffs.resize(self.outputs.len(), 0.0);

        let mut objective = CompensatedSum::default();
        for (j, &out) in self.outputs.iter().enumerate() {
            let row = &mut self.rows[j * dim..(j + 1) * dim];
            model.token_vectors.read_row(out as usize, row);
            let s = dot(&self.doc, row) + model.bias(out as usize);
            let label = if j == 0 { 1.0 } else { 0.0 };
            objective.add(if j == 0 {
                log_sigmoid(s)
            } else {
                log_sigmoid(-s)
            });
            self.coeffs[j] = lr * (label - sigmoid(s));
        }
        objective.value()
    }

    /// One ascent step on the pair objective with the given negatives.
    /// Returns the objective before the update.
    pub fn step<T: Real>(
        &mut self,
        model: &EmbeddingModel<T>,
        pair: TrainingPair,
        negatives: &[u32],
        lr: f64,
    ) -> f64 {
        let dim = model.dim();
        let doc = pair.doc_id as usize;
        self.doc.resize(dim, 0.0);
        model.doc_vectors.read_row(doc, &mut self.doc);
        let objective = self.forward(model, pair.target_token, negatives, lr);

        self.doc_grad.clear();
        self.doc_grad.resize(dim, 0.0);
        for (j, &out) in self.outputs.iter().enumerate() {
            let g = self.coeffs[j];
            axpy(g, &self.rows[j * dim..(j + 1) * dim], &mut self.doc_grad);
            model.token_vectors.add_scaled(out as usize, g, &self.doc);
            if let Some(b) = &model.biases {
                b.add_scaled(out as usize, g, &[1.0]);
            }
        }
        model.doc_vectors.add_scaled(doc, 1.0, &self.doc_grad);
        objective
    }

    /// Like [`Kernel::step`] but only `doc` moves; the model is read-only.
    pub fn step_frozen<T: Real>(
        &mut self,
        model: &EmbeddingModel<T>,
        doc: &mut [f64],
        target: u32,
        negatives: &[u32],
        lr: f64,
    ) -> f64 {
        let dim = model.dim();
        self.doc.clear();
        self.doc.extend_from_slice(doc);
        let objective = self.forward(model, target, negatives, lr);
        for (j, &g) in self.coeffs.iter().enumerate() {
            axpy(g, &self.rows[j * dim..(j + 1) * dim], doc);
        }
        objective
    }
}

/// Pair objective with fixed negatives; touches nothing.
pub fn pair_objective<T: Real>(
    model: &EmbeddingModel<T>,
    pair: TrainingPair,
    negatives: &[u32],
) -> f64 {
    let d = model.doc_vectors.row_f64(pair.doc_id as usize);
    let mut row = vec![0.0; model.dim()];
    let mut score = |tok: u32| {
        model.token_vectors.read_row(tok as usize, &mut row);
        dot(&d, &row) + model.bias(tok as usize)
    };
    let mut l = CompensatedSum::default();
    l.add(log_sigmoid(score(pair.target_token)));
    for &n in negatives {
        l.add(log_sigmoid(-score(n)));
    }
    l.value()
}

/// Draws `k` negatives from `noise` and takes one step. Negatives equal to
/// the target are kept.
pub fn sgd_step<T: Real, R: Rng + ?Sized>(
    model: &EmbeddingModel<T>,
    pair: TrainingPair,
    noise: &NoiseTable,
    lr: f64,
    k: usize,
    rng: &mut R,
) -> f64 {
    let negatives: Vec<u32> = (0..k).map(|_| noise.sample(rng)).collect();
    Kernel::new().step(model, pair, &negatives, lr)
}

/// `y_w - log sum_u exp(y_u)` with `y = b + W x_d`.
pub fn exact_softmax_logprob<T: Real>(
    model: &EmbeddingModel<T>,
    doc: usize,
    token: usize,
) -> Result<f64> {
    model.check_token(token)?;
    Ok(exact_softmax_log_probs(model, doc)?[token])
}

/// Log-probabilities of every vocabulary token for one document.
pub fn exact_softmax_log_probs<T: Real>(model: &EmbeddingModel<T>, doc: usize) -> Result<Vec<f64>> {
    model.check_doc(doc)?;
    let d = model.doc_vectors.row_f64(doc);
    let mut row = vec![0.0; model.dim()];
    let mut y: Vec<f64> = (0..model.vocab_size())
        .map(|u| {
            model.token_vectors.read_row(u, &mut row);
            dot(&d, &row) + model.bias(u)
        })
        .collect();
    let z = log_sum_exp(&y);
    for v in &mut y {
        *v -= z;
    }
    Ok(y)
}

/// Mean per-pair negative-sampling objective over the corpus with fresh
/// negatives; parameters are not modified.
pub fn corpus_objective_estimate<T: Real, R: Rng + ?Sized>(
    model: &EmbeddingModel<T>,
    corpus: &[EncodedDocument],
    noise: &NoiseTable,
    k: usize,
    rng: &mut R,
) -> Result<f64> {
    let mut negatives = vec![0u32; k];
    let mut total = CompensatedSum::default();
    let mut pairs = 0u64;
    for doc in corpus {
        model.check_doc(doc.doc_id as usize)?;
        for &tok in &doc.token_ids {
            model.check_token(tok as usize)?;
            for n in negatives.iter_mut() {
                *n = noise.sample(rng);
            }
            let pair = TrainingPair {
                doc_id: doc.doc_id,
                target_token: tok,
            };
            total.add(pair_objective(model, pair, &negatives));
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(Error::EmptyCorpus("corpus has no tokens"));
    }
    Ok(total.value() / pairs as f64)
}

/// Every (document, token) occurrence of a corpus, addressable by position.
#[derive(Debug, Clone)]
pub struct PairStream {
    tokens: Vec<u32>,
    offsets: Vec<usize>,
    doc_ids: Vec<u32>,
}

impl PairStream {
    pub fn new(corpus: &[EncodedDocument]) -> Result<PairStream> {
        let total: usize = corpus.iter().map(|d| d.token_ids.len()).sum();
        if total > u32::MAX as usize {
            return Err(Error::InvalidArgument(
                "corpus has more than u32::MAX pairs",
            ));
        }
        let mut tokens = Vec::with_capacity(total);
        let mut offsets = Vec::with_capacity(corpus.len() + 1);
        offsets.push(0);
        for doc in corpus {
            tokens.extend_from_slice(&doc.token_ids);
            offsets.push(tokens.len());
        }
        Ok(PairStream {
            tokens,
            offsets,
            doc_ids: corpus.iter().map(|d| d.doc_id).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    #[inline]
    pub fn pair(&self, position: usize) -> TrainingPair {
        let doc = self.offsets.partition_point(|&o| o <= position) - 1;
        TrainingPair {
            doc_id: self.doc_ids[doc],
            target_token: self.tokens[position],
        }
    }
}

/// Serializable generator state, enough to resume an interrupted run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &DvRng) -> RngState {
        RngState {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> DvRng {
        let mut rng = DvRng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

/// Drives epochs over a fixed corpus.
///
/// Each epoch shuffles the global pair stream and cuts it into chunks of
/// `mini_batch` pairs. Negatives for chunk `c` come from a generator keyed
/// by the epoch seed and `c`, so the draws do not depend on which worker
/// processes the chunk. Updates inside a chunk are applied pair by pair.
#[derive(Debug)]
pub struct Trainer {
    config: TrainConfig,
    stream: PairStream,
    order: Vec<u32>,
    rng: DvRng,
    epoch: usize,
}

/// One shuffled epoch, shareable between workers.
#[derive(Debug, Clone, Copy)]
pub struct EpochPlan<'a> {
    pub epoch: usize,
    seed: u64,
    order: &'a [u32],
    stream: &'a PairStream,
    config: &'a TrainConfig,
}

impl Trainer {
    pub fn new<T: Real>(
        model: &EmbeddingModel<T>,
        corpus: &[EncodedDocument],
        noise: &NoiseTable,
        config: &TrainConfig,
    ) -> Result<Trainer> {
        config.validate()?;
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus("no documents to train on"));
        }
        if model.dim() != config.dim {
            return Err(Error::DimensionMismatch {
                expected: config.dim,
                found: model.dim(),
            });
        }
        if noise.len() != model.vocab_size() {
            return Err(Error::DimensionMismatch {
                expected: model.vocab_size(),
                found: noise.len(),
            });
        }
        for doc in corpus {
            model.check_doc(doc.doc_id as usize)?;
            for &t in &doc.token_ids {
                model.check_token(t as usize)?;
            }
        }
        let stream = PairStream::new(corpus)?;
        if stream.is_empty() {
            return Err(Error::EmptyCorpus("corpus has no tokens"));
        }
        let mut rng = DvRng::seed_from_u64(config.seed);
        rng.set_stream(1);
        Ok(Trainer {
            order: (0..stream.len() as u32).collect(),
            config: config.clone(),
            stream,
            rng,
            epoch: 0,
        })
    }

    /// Picks up at `epoch` with a generator captured by [`Trainer::rng_state`].
    pub fn resume(&mut self, epoch: usize, state: &RngState) {
        self.epoch = epoch;
        self.rng = state.restore();
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn pairs_per_epoch(&self) -> usize {
        self.stream.len()
    }

    pub fn rng_state(&self) -> RngState {
        RngState::capture(&self.rng)
    }

    /// Shuffles the pair order for the next epoch.
    pub fn begin_epoch(&mut self) -> EpochPlan<'_> {
        // restore identity first so the permutation depends only on the rng
        for (i, slot) in self.order.iter_mut().enumerate() {
            *slot = i as u32;
        }
        self.order.shuffle(&mut self.rng);
        let seed = self.rng.next_u64();
        let epoch = self.epoch;
        self.epoch += 1;
        EpochPlan {
            epoch,
            seed,
            order: &self.order,
            stream: &self.stream,
            config: &self.config,
        }
    }

    /// Runs one epoch on the calling thread.
    pub fn run_epoch<T: Real>(
        &mut self,
        model: &EmbeddingModel<T>,
        noise: &NoiseTable,
    ) -> Result<EpochReport> {
        let plan = self.begin_epoch();
        let mut kernel = Kernel::new();
        let total: f64 = (0..plan.num_chunks())
            .map(|c| plan.run_chunk(model, noise, c, &mut kernel))
            .sum();
        model.check_finite()?;
        Ok(plan.report(total, 0.0))
    }
}

impl EpochPlan<'_> {
    pub fn num_chunks(&self) -> usize {
        self.order.len().div_ceil(self.config.mini_batch)
    }

    #[inline]
    fn learning_rate(&self, position_in_epoch: usize) -> f64 {
        let lr = self.config.learning_rate;
        match self.config.schedule {
            LearningRateSchedule::Constant => lr,
            LearningRateSchedule::Linear => {
                let per_epoch = self.order.len() as f64;
                let done = self.epoch as f64 * per_epoch + position_in_epoch as f64;
                let total = self.config.epochs.max(1) as f64 * per_epoch;
                lr * (1.0 - done / total).max(MIN_LR_FRACTION)
            }
        }
    }

    /// Processes chunk `chunk` and returns the summed pair objectives.
    pub fn run_chunk<T: Real>(
        &self,
        model: &EmbeddingModel<T>,
        noise: &NoiseTable,
        chunk: usize,
        kernel: &mut Kernel,
    ) -> f64 {
        let mut rng = DvRng::seed_from_u64(self.seed);
        rng.set_stream(chunk as u64);
        let k = self.config.negative_k;
        let start = chunk * self.config.mini_batch;
        let end = (start + self.config.mini_batch).min(self.order.len());
        let mut negatives = vec![0u32; k];
        let mut total = 0.0;
        for (i, &pos) in self.order[start..end].iter().enumerate() {
            for n in negatives.iter_mut() {
                *n = noise.sample(&mut rng);
            }
            let pair = self.stream.pair(pos as usize);
            total += kernel.step(model, pair, &negatives, self.learning_rate(start + i));
        }
        total
    }

    pub fn report(&self, objective_sum: f64, wall_seconds: f64) -> EpochReport {
        EpochReport {
            epoch: self.epoch,
            mean_objective: objective_sum / self.order.len() as f64,
            pairs_processed: self.order.len() as u64,
            wall_seconds,
        }
    }
}

/// Single-worker training; bit-reproducible for a fixed seed.
pub fn train<T: Real>(
    model: &EmbeddingModel<T>,
    corpus: &[EncodedDocument],
    noise: &NoiseTable,
    config: &TrainConfig,
) -> Result<Vec<EpochReport>> {
    let mut trainer = Trainer::new(model, corpus, noise, config)?;
    (0..config.epochs)
        .map(|_| trainer.run_epoch(model, noise))
        .collect()
}

/// Learns a vector for a document that was not part of training, keeping
/// every token vector fixed.
pub fn infer_doc_vector<T: Real>(
    model: &EmbeddingModel<T>,
    token_ids: &[u32],
    noise: &NoiseTable,
    config: &TrainConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    if noise.len() != model.vocab_size() {
        return Err(Error::DimensionMismatch {
            expected: model.vocab_size(),
            found: noise.len(),
        });
    }
    for &t in token_ids {
        model.check_token(t as usize)?;
    }
    let mut rng = DvRng::seed_from_u64(config.seed);
    rng.set_stream(2);
    let mut doc: Vec<f64> = (0..model.dim())
        .map(|_| rng.gen_range(-INIT_RANGE..=INIT_RANGE))
        .collect();
    let mut order = token_ids.to_vec();
    let mut negatives = vec![0u32; config.negative_k];
    let mut kernel = Kernel::new();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &tok in &order {
            for n in negatives.iter_mut() {
                *n = noise.sample(&mut rng);
            }
            kernel.step_frozen(model, &mut doc, tok, &negatives, config.learning_rate);
        }
    }
    if doc.iter().all(|v| v.is_finite()) {
        Ok(doc)
    } else {
        Err(Error::NonFinite("inferred document vector"))
    }
}
