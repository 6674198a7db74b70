//! Bag-of-ngram features, Naive-Bayes log-count-ratio weighting and the
//! dense + sparse concatenation used in the feature-combination runs.

use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{EncodedDocument, Label};
use crate::{Error, Result};

pub const DEFAULT_NB_ALPHA: f64 = 1.0;

/// Sorted `(feature id, weight)` pairs; ids strictly increase and zero
/// weights are never stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseFeatureVector {
    entries: Vec<(u32, f64)>,
}

impl SparseFeatureVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sorts by id, sums duplicate ids and drops zeros.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(u32, f64)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            match entries.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => entries.push((i, v)),
            }
        }
        entries.retain(|&(_, v)| v != 0.0);
        SparseFeatureVector { entries }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|&(i, _)| i)
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for &(i, v) in &self.entries {
            out[i as usize] = v;
        }
        out
    }
}

/// How bag-of-ngram features weight a token that occurs in a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TermWeighting {
    /// 1.0 for every distinct token.
    #[default]
    Binary,
    /// Raw occurrence count.
    TermFrequency,
}

/// One weight per distinct token id of the document.
pub fn bag_of_ngram_features(
    doc: &EncodedDocument,
    vocab_size: usize,
    weighting: TermWeighting,
) -> SparseFeatureVector {
    debug_assert!(doc.token_ids.iter().all(|&t| (t as usize) < vocab_size));
    let mut ids = doc.token_ids.clone();
    ids.sort_unstable();
    let mut entries: Vec<(u32, f64)> = Vec::new();
    for id in ids {
        match entries.last_mut() {
            Some(last) if last.0 == id => {
                if weighting == TermWeighting::TermFrequency {
                    last.1 += 1.0;
                }
            }
            _ => entries.push((id, 1.0)),
        }
    }
    SparseFeatureVector { entries }
}

/// Per-feature log-count ratios from labeled data.
#[derive(Debug, Clone, PartialEq)]
pub struct NbWeights {
    pub r: Vec<f64>,
    pub alpha: f64,
}

/// `p = alpha + sum of positive rows`, `q = alpha + sum of negative rows`
/// (rows binarized), `r = log((p / |p|_1) / (q / |q|_1))`.
pub fn fit_nb_weights(
    train: &[(SparseFeatureVector, Label)],
    feature_dim: usize,
    alpha: f64,
) -> Result<NbWeights> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(
            "NB smoothing alpha must be positive",
        ));
    }
    let mut p = vec![alpha; feature_dim];
    let mut q = vec![alpha; feature_dim];
    let (mut has_pos, mut has_neg) = (false, false);
    for (x, label) in train {
        let counts = match label {
            Label::Positive => {
                has_pos = true;
                &mut p
            }
            Label::Negative => {
                has_neg = true;
                &mut q
            }
        };
        for id in x.ids() {
            let slot = counts.get_mut(id as usize).ok_or(Error::OutOfRange {
                kind: "feature",
                id: id as usize,
                size: feature_dim,
            })?;
            *slot += 1.0;
        }
    }
    if !(has_pos && has_neg) {
        return Err(Error::SingleClass);
    }
    let log_p_total = libm::log(p.iter().sum());
    let log_q_total = libm::log(q.iter().sum());
    // difference of logs keeps r exactly antisymmetric under label swaps
    let r = p
        .iter()
        .zip(&q)
        .map(|(&pi, &qi)| (libm::log(pi) - log_p_total) - (libm::log(qi) - log_q_total))
        .collect();
    Ok(NbWeights { r, alpha })
}

/// Elementwise `r_i * x_i`; features whose product is zero are dropped.
pub fn nb_weighted_features(
    x: &SparseFeatureVector,
    weights: &NbWeights,
) -> Result<SparseFeatureVector> {
    let mut entries = Vec::with_capacity(x.nnz());
    for &(i, v) in x.entries() {
        let r = *weights.r.get(i as usize).ok_or(Error::OutOfRange {
            kind: "feature",
            id: i as usize,
            size: weights.r.len(),
        })?;
        let w = r * v;
        if w != 0.0 {
            entries.push((i, w));
        }
    }
    Ok(SparseFeatureVector { entries })
}

/// Dense block at ids `[0, dense.len())` scaled by `dense_scale`, sparse
/// ids shifted by `dense.len()`.
pub fn concat_features(
    dense: &[f64],
    sparse: &SparseFeatureVector,
    dense_scale: f64,
) -> SparseFeatureVector {
    let dim = dense.len() as u32;
    let mut entries = Vec::with_capacity(dense.len() + sparse.nnz());
    entries.extend(
        dense
            .iter()
            .enumerate()
            .map(|(i, &v)| (i as u32, v * dense_scale))
            .filter(|&(_, v)| v != 0.0),
    );
    entries.extend(sparse.entries().iter().map(|&(i, v)| (i + dim, v)));
    SparseFeatureVector { entries }
}

/// Inverse of [`concat_features`] for a known dense dimension: returns the
/// (scaled) dense block and the unshifted sparse part.
pub fn split_concat(v: &SparseFeatureVector, dense_dim: usize) -> (Vec<f64>, SparseFeatureVector) {
    let mut dense = vec![0.0; dense_dim];
    let mut sparse = Vec::new();
    for &(i, w) in v.entries() {
        if (i as usize) < dense_dim {
            dense[i as usize] = w;
        } else {
            sparse.push((i - dense_dim as u32, w));
        }
    }
    (dense, SparseFeatureVector { entries: sparse })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(ids: &[u32]) -> EncodedDocument {
        EncodedDocument {
            doc_id: 0,
            token_ids: ids.to_vec(),
        }
    }

    #[test]
    fn binarized_bag() {
        let v = bag_of_ngram_features(&doc(&[3, 3, 1]), 4, TermWeighting::Binary);
        assert_eq!(v.entries(), &[(1, 1.0), (3, 1.0)]);
        assert!(bag_of_ngram_features(&doc(&[]), 4, TermWeighting::Binary).is_empty());
        let tf = bag_of_ngram_features(&doc(&[3, 3, 1]), 4, TermWeighting::TermFrequency);
        assert_eq!(tf.entries(), &[(1, 1.0), (3, 2.0)]);
    }

    #[test]
    fn from_pairs_normalizes() {
        let v = SparseFeatureVector::from_pairs(vec![
            (5, 1.0),
            (2, 0.5),
            (5, -1.0),
            (2, 0.5),
            (0, 0.0),
        ]);
        assert_eq!(v.entries(), &[(2, 1.0)]);
    }

    #[test]
    fn nb_hand_worked_example() {
        // two features, one positive doc {0}, one negative doc {1}, alpha 1:
        // p = [2, 1], q = [1, 2], r_0 = log((2/3)/(1/3)) = log 2, r_1 = -log 2
        let train = vec![
            (
                SparseFeatureVector::from_pairs(vec![(0, 1.0)]),
                Label::Positive,
            ),
            (
                SparseFeatureVector::from_pairs(vec![(1, 1.0)]),
                Label::Negative,
            ),
        ];
        let w = fit_nb_weights(&train, 2, 1.0).unwrap();
        assert!((w.r[0] - core::f64::consts::LN_2).abs() < 1e-12);
        assert!((w.r[1] + core::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn nb_balanced_feature_is_neutral() {
        let both = SparseFeatureVector::from_pairs(vec![(0, 1.0)]);
        let train = vec![(both.clone(), Label::Positive), (both, Label::Negative)];
        let w = fit_nb_weights(&train, 3, 1.0).unwrap();
        assert!(w.r.iter().all(|r| r.abs() < 1e-15));
    }

    #[test]
    fn nb_rejects_single_class_and_bad_ids() {
        let x = SparseFeatureVector::from_pairs(vec![(0, 1.0)]);
        assert_eq!(
            fit_nb_weights(&[(x.clone(), Label::Positive)], 1, 1.0),
            Err(Error::SingleClass)
        );
        let far = SparseFeatureVector::from_pairs(vec![(7, 1.0)]);
        assert!(fit_nb_weights(&[(x, Label::Positive), (far, Label::Negative)], 2, 1.0).is_err());
    }

    #[test]
    fn nb_weighting_examples() {
        let x = SparseFeatureVector::from_pairs(vec![(0, 1.0), (2, 1.0)]);
        let ones = NbWeights {
            r: vec![1.0; 3],
            alpha: 1.0,
        };
        assert_eq!(nb_weighted_features(&x, &ones).unwrap(), x);
        let zero_at_2 = NbWeights {
            r: vec![0.5, 1.0, 0.0],
            alpha: 1.0,
        };
        assert_eq!(
            nb_weighted_features(&x, &zero_at_2).unwrap().entries(),
            &[(0, 0.5)]
        );
        let short = NbWeights {
            r: vec![1.0],
            alpha: 1.0,
        };
        assert!(nb_weighted_features(&x, &short).is_err());
    }

    #[test]
    fn concat_examples() {
        let dense = [0.5, -1.0];
        let sparse = SparseFeatureVector::from_pairs(vec![(0, 2.0), (4, 1.0)]);
        let v = concat_features(&dense, &SparseFeatureVector::new(), 2.0);
        assert_eq!(v.entries(), &[(0, 1.0), (1, -2.0)]);
        let v = concat_features(&dense, &sparse, 0.0);
        assert_eq!(v.entries(), &[(2, 2.0), (6, 1.0)]);
        let v = concat_features(&dense, &sparse, 1.0);
        assert_eq!(v.nnz(), 4);
        let (d, s) = split_concat(&v, 2);
        assert_eq!(d, dense);
        assert_eq!(s, sparse);
    }
}
