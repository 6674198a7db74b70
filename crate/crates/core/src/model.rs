//! Dense parameters of the shallow prediction network: one vector per
//! document on the input side and one vector (plus optional bias) per
//! vocabulary token on the output side.
//!
//! Every scalar lives in a word-sized atomic and is accessed with relaxed
//! ordering. Workers may therefore update a shared model without locks
//! (hogwild-style); each individual read or write is atomic, nothing more is
//! promised. With a single worker the model behaves like a plain matrix.

use alloc::vec::Vec;
use core::fmt::{Debug, Display};
#[cfg(target_has_atomic = "64")]
use core::sync::atomic::AtomicU64;
use core::sync::atomic::{AtomicU32, Ordering};

use rand::{Rng, SeedableRng};

use crate::math::dot;
use crate::{DvRng, Error, Result};

/// Half-width of the uniform initialization interval.
pub const INIT_RANGE: f64 = 0.001;

/// Storage precision of the model parameters. Arithmetic is always done in
/// `f64`; this only decides what is stored.
pub trait Real: Copy + PartialEq + Debug + Display + Send + Sync + 'static {
    type Atomic: Send + Sync;
    const NAME: &'static str;

    fn to_f64(self) -> f64;
    fn from_f64(v: f64) -> Self;
    fn atomic(v: Self) -> Self::Atomic;
    fn load(a: &Self::Atomic) -> Self;
    fn store(a: &Self::Atomic, v: Self);
}

impl Real for f32 {
    type Atomic = AtomicU32;
    const NAME: &'static str = "f32";

    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn atomic(v: Self) -> AtomicU32 {
        AtomicU32::new(v.to_bits())
    }
    #[inline]
    fn load(a: &AtomicU32) -> Self {
        f32::from_bits(a.load(Ordering::Relaxed))
    }
    #[inline]
    fn store(a: &AtomicU32, v: Self) {
        a.store(v.to_bits(), Ordering::Relaxed)
    }
}

/// Needs 64-bit atomics; targets without them store `f32` only.
#[cfg(target_has_atomic = "64")]
impl Real for f64 {
    type Atomic = AtomicU64;
    const NAME: &'static str = "f64";

    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    fn atomic(v: Self) -> AtomicU64 {
        AtomicU64::new(v.to_bits())
    }
    #[inline]
    fn load(a: &AtomicU64) -> Self {
        f64::from_bits(a.load(Ordering::Relaxed))
    }
    #[inline]
    fn store(a: &AtomicU64, v: Self) {
        a.store(v.to_bits(), Ordering::Relaxed)
    }
}

/// Row-major matrix of atomically stored scalars.
pub struct ParamMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<T::Atomic>,
}

impl<T: Real> ParamMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| T::from_f64(0.0))
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(T::atomic(f(r, c)));
            }
        }
        ParamMatrix { rows, cols, data }
    }

    /// Builds a matrix from row-major values; `values.len()` must equal
    /// `rows * cols`.
    pub fn from_values(rows: usize, cols: usize, values: &[T]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: values.len(),
            });
        }
        Ok(Self::from_fn(rows, cols, |r, c| values[r * cols + c]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        T::load(&self.data[row * self.cols + col])
    }

    #[inline]
    pub fn set(&self, row: usize, col: usize, v: T) {
        T::store(&self.data[row * self.cols + col], v)
    }

    #[inline]
    fn row_cells(&self, row: usize) -> &[T::Atomic] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// Copies a row into `out`, widening to `f64`.
    #[inline]
    pub fn read_row(&self, row: usize, out: &mut [f64]) {
        for (o, cell) in out.iter_mut().zip(self.row_cells(row)) {
            *o = T::load(cell).to_f64();
        }
    }

    pub fn row_vec(&self, row: usize) -> Vec<T> {
        self.row_cells(row).iter().map(T::load).collect()
    }

    pub fn row_f64(&self, row: usize) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.cols];
        self.read_row(row, &mut out);
        out
    }

    /// `row += alpha * x`, one relaxed read-modify-write per element.
    #[inline]
    pub fn add_scaled(&self, row: usize, alpha: f64, x: &[f64]) {
        for (cell, xi) in self.row_cells(row).iter().zip(x) {
            let v = T::load(cell).to_f64() + alpha * xi;
            T::store(cell, T::from_f64(v));
        }
    }

    pub fn write_row(&self, row: usize, values: &[f64]) {
        for (cell, &v) in self.row_cells(row).iter().zip(values) {
            T::store(cell, T::from_f64(v));
        }
    }

    /// Row-major snapshot of every value.
    pub fn to_vec(&self) -> Vec<T> {
        self.data.iter().map(T::load).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| T::load(c).to_f64().is_finite())
    }
}

impl<T: Real> Clone for ParamMatrix<T> {
    fn clone(&self) -> Self {
        ParamMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|c| T::atomic(T::load(c))).collect(),
        }
    }
}

impl<T: Real> PartialEq for ParamMatrix<T> {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.to_vec() == other.to_vec()
    }
}

impl<T: Real> Debug for ParamMatrix<T> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ParamMatrix")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearningRateSchedule {
    Constant,
    /// Linear decay from the initial rate to `1e-4` of it over the run.
    Linear,
}

/// Hyper-parameters of embedding training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub learning_rate: f64,
    /// Number of pairs dispatched as one unit of work.
    pub mini_batch: usize,
    pub epochs: usize,
    pub negative_k: usize,
    pub seed: u64,
    pub noise_exponent: f64,
    pub use_bias: bool,
    pub schedule: LearningRateSchedule,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 500,
            learning_rate: 0.25,
            mini_batch: 100,
            epochs: 10,
            negative_k: 5,
            seed: 1,
            noise_exponent: crate::corpus::DEFAULT_NOISE_EXPONENT,
            use_bias: false,
            schedule: LearningRateSchedule::Constant,
        }
    }
}

impl TrainConfig {
    /// `epochs == 0` is accepted and trains nothing.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidArgument("dim must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be positive"));
        }
        if self.mini_batch == 0 {
            return Err(Error::InvalidArgument("mini_batch must be positive"));
        }
        if self.negative_k == 0 {
            return Err(Error::InvalidArgument("negative_k must be at least 1"));
        }
        if !(self.noise_exponent > 0.0 && self.noise_exponent.is_finite()) {
            return Err(Error::InvalidArgument("noise exponent must be positive"));
        }
        Ok(())
    }
}

/// Document vectors, output token vectors and optional output biases.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel<T: Real> {
    pub doc_vectors: ParamMatrix<T>,
    pub token_vectors: ParamMatrix<T>,
    /// One column; present only when the model was built with biases.
    pub biases: Option<ParamMatrix<T>>,
}

impl<T: Real> EmbeddingModel<T> {
    /// Every entry i.i.d. uniform on `[-0.001, 0.001]` from `config.seed`:
    /// document rows first, then token rows. Biases start at zero.
    pub fn init(num_docs: usize, vocab_size: usize, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        if num_docs == 0 {
            return Err(Error::EmptyCorpus("no documents"));
        }
        if vocab_size == 0 {
            return Err(Error::EmptyCorpus("empty vocabulary"));
        }
        let mut rng = DvRng::seed_from_u64(config.seed);
        let mut draw = |_, _| T::from_f64(rng.gen_range(-INIT_RANGE..=INIT_RANGE));
        let doc_vectors = ParamMatrix::from_fn(num_docs, config.dim, &mut draw);
        let token_vectors = ParamMatrix::from_fn(vocab_size, config.dim, &mut draw);
        Ok(EmbeddingModel {
            doc_vectors,
            token_vectors,
            biases: config.use_bias.then(|| ParamMatrix::zeros(vocab_size, 1)),
        })
    }

    /// All-zero model; handy as a reference point.
    pub fn zeros(num_docs: usize, vocab_size: usize, dim: usize, use_bias: bool) -> Self {
        EmbeddingModel {
            doc_vectors: ParamMatrix::zeros(num_docs, dim),
            token_vectors: ParamMatrix::zeros(vocab_size, dim),
            biases: use_bias.then(|| ParamMatrix::zeros(vocab_size, 1)),
        }
    }

    pub fn from_parts(
        doc_vectors: ParamMatrix<T>,
        token_vectors: ParamMatrix<T>,
        biases: Option<ParamMatrix<T>>,
    ) -> Result<Self> {
        if doc_vectors.cols() == 0 {
            return Err(Error::InvalidArgument("dim must be positive"));
        }
        if doc_vectors.cols() != token_vectors.cols() {
            return Err(Error::DimensionMismatch {
                expected: doc_vectors.cols(),
                found: token_vectors.cols(),
            });
        }
        if let Some(b) = &biases {
            if b.rows() != token_vectors.rows() || b.cols() != 1 {
                return Err(Error::DimensionMismatch {
                    expected: token_vectors.rows(),
                    found: b.rows(),
                });
            }
        }
        Ok(EmbeddingModel {
            doc_vectors,
            token_vectors,
            biases,
        })
    }

    pub fn dim(&self) -> usize {
        self.doc_vectors.cols()
    }

    pub fn num_docs(&self) -> usize {
        self.doc_vectors.rows()
    }

    pub fn vocab_size(&self) -> usize {
        self.token_vectors.rows()
    }

    #[inline]
    pub fn bias(&self, token: usize) -> f64 {
        self.biases
            .as_ref()
            .map_or(0.0, |b| b.get(token, 0).to_f64())
    }

    pub fn check_doc(&self, doc: usize) -> Result<()> {
        if doc < self.num_docs() {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                kind: "document",
                id: doc,
                size: self.num_docs(),
            })
        }
    }

    pub fn check_token(&self, token: usize) -> Result<()> {
        if token < self.vocab_size() {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                kind: "token",
                id: token,
                size: self.vocab_size(),
            })
        }
    }

    /// `x_doc . x_token (+ b_token)`, accumulated in `f64`.
    pub fn score(&self, doc: usize, token: usize) -> Result<f64> {
        self.check_doc(doc)?;
        self.check_token(token)?;
        let d = self.doc_vectors.row_f64(doc);
        let w = self.token_vectors.row_f64(token);
        Ok(dot(&d, &w) + self.bias(token))
    }

    /// Errors if any parameter is NaN or infinite.
    pub fn check_finite(&self) -> Result<()> {
        if !self.doc_vectors.is_finite() {
            return Err(Error::NonFinite("document vectors"));
        }
        if !self.token_vectors.is_finite() {
            return Err(Error::NonFinite("token vectors"));
        }
        if let Some(b) = &self.biases {
            if !b.is_finite() {
                return Err(Error::NonFinite("biases"));
            }
        }
        Ok(())
    }
}
