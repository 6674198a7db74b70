//! L2-regularized binary logistic regression with an unregularized
//! intercept, trained by a truncated Newton method (conjugate-gradient
//! inner solves with Hessian-vector products and a backtracking line
//! search). Works over dense document vectors and sparse feature vectors.

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::baselines::SparseFeatureVector;
use crate::corpus::Label;
use crate::math::{axpy, dot, norm2, sigmoid, softplus};
use crate::{DvRng, Error, Result};

pub const DEFAULT_C_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

/// Fraction of the training data held out by [`dev_split_select`].
pub const DEV_FRACTION: f64 = 0.2;

const MAX_NEWTON_ITERS: usize = 200;
const MAX_LINE_SEARCH: usize = 60;

/// A feature vector the classifier can consume.
pub trait FeatureRow {
    /// `w . x` over the first `w.len()` coordinates.
    fn dot(&self, w: &[f64]) -> f64;
    /// `out += alpha * x`
    fn add_to(&self, alpha: f64, out: &mut [f64]);
    /// One past the largest coordinate this row touches.
    fn extent(&self) -> usize;
}

impl FeatureRow for [f64] {
    #[inline]
    fn dot(&self, w: &[f64]) -> f64 {
        dot(self, w)
    }
    #[inline]
    fn add_to(&self, alpha: f64, out: &mut [f64]) {
        axpy(alpha, self, out)
    }
    fn extent(&self) -> usize {
        self.len()
    }
}

impl FeatureRow for Vec<f64> {
    #[inline]
    fn dot(&self, w: &[f64]) -> f64 {
        self.as_slice().dot(w)
    }
    #[inline]
    fn add_to(&self, alpha: f64, out: &mut [f64]) {
        self.as_slice().add_to(alpha, out)
    }
    fn extent(&self) -> usize {
        self.len()
    }
}

impl FeatureRow for SparseFeatureVector {
    #[inline]
    fn dot(&self, w: &[f64]) -> f64 {
        self.entries().iter().map(|&(i, v)| w[i as usize] * v).sum()
    }
    #[inline]
    fn add_to(&self, alpha: f64, out: &mut [f64]) {
        for &(i, v) in self.entries() {
            out[i as usize] += alpha * v;
        }
    }
    fn extent(&self) -> usize {
        self.entries().last().map_or(0, |&(i, _)| i as usize + 1)
    }
}

impl<R: FeatureRow + ?Sized> FeatureRow for &R {
    fn dot(&self, w: &[f64]) -> f64 {
        (**self).dot(w)
    }
    fn add_to(&self, alpha: f64, out: &mut [f64]) {
        (**self).add_to(alpha, out)
    }
    fn extent(&self) -> usize {
        (**self).extent()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<R> {
    features: Vec<R>,
    labels: Vec<Label>,
    feature_dim: usize,
}

impl<R: FeatureRow> LabeledDataset<R> {
    pub fn new(features: Vec<R>, labels: Vec<Label>, feature_dim: usize) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                found: labels.len(),
            });
        }
        if let Some(bad) = features
            .iter()
            .map(FeatureRow::extent)
            .find(|&e| e > feature_dim)
        {
            return Err(Error::DimensionMismatch {
                expected: feature_dim,
                found: bad,
            });
        }
        Ok(LabeledDataset {
            features,
            labels,
            feature_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn features(&self) -> &[R] {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// Borrowing view of the given rows.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset<&R> {
        LabeledDataset {
            features: indices.iter().map(|&i| &self.features[i]).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_dim: self.feature_dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Inverse regularization strength the model was trained with.
    pub c_value: f64,
}

impl LinearModel {
    pub fn decision<R: FeatureRow + ?Sized>(&self, x: &R) -> Result<f64> {
        if x.extent() > self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                found: x.extent(),
            });
        }
        Ok(x.dot(&self.weights) + self.intercept)
    }

    /// `sign(w . x + b)`, ties go to positive.
    pub fn predict<R: FeatureRow + ?Sized>(&self, x: &R) -> Result<Label> {
        Ok(if self.decision(x)? >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        })
    }
}

/// Fraction of rows predicted correctly.
pub fn evaluate<R: FeatureRow>(model: &LinearModel, data: &LabeledDataset<R>) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot evaluate on an empty dataset",
        ));
    }
    let mut correct = 0usize;
    for (x, &y) in data.features.iter().zip(&data.labels) {
        if model.predict(x)? == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Objective, gradient and Hessian-vector products of
/// `0.5 |w|^2 + C sum_i log(1 + exp(-y_i (w . x_i + b)))`
/// over the stacked parameter `[w, b]`.
pub struct LogisticObjective<'a, R> {
    data: &'a LabeledDataset<R>,
    c: f64,
    // per-row sigma(m)(1 - sigma(m)) from the last gradient evaluation
    curvature: Vec<f64>,
}

impl<'a, R: FeatureRow> LogisticObjective<'a, R> {
    pub fn new(data: &'a LabeledDataset<R>, c: f64) -> Self {
        LogisticObjective {
            data,
            c,
            curvature: vec![0.0; data.len()],
        }
    }

    fn split(params: &[f64]) -> (&[f64], f64) {
        let (w, b) = params.split_at(params.len() - 1);
        (w, b[0])
    }

    pub fn value(&self, params: &[f64]) -> f64 {
        let (w, b) = Self::split(params);
        let loss: f64 = self
            .data
            .features
            .iter()
            .zip(&self.data.labels)
            .map(|(x, y)| softplus(-y.sign() * (x.dot(w) + b)))
            .sum();
        0.5 * dot(w, w) + self.c * loss
    }

    /// Writes the gradient into `grad` and caches the curvature weights
    /// used by [`LogisticObjective::hessian_vec`].
    pub fn gradient(&mut self, params: &[f64], grad: &mut [f64]) {
        let (w, b) = Self::split(params);
        let dim = w.len();
        grad[..dim].copy_from_slice(w);
        grad[dim] = 0.0;
        for (i, (x, y)) in self.data.features.iter().zip(&self.data.labels).enumerate() {
            let y = y.sign();
            let m = y * (x.dot(w) + b);
            let s = sigmoid(m);
            self.curvature[i] = s * (1.0 - s);
            let coef = self.c * (s - 1.0) * y;
            x.add_to(coef, &mut grad[..dim]);
            grad[dim] += coef;
        }
    }

    pub fn hessian_vec(&self, v: &[f64], out: &mut [f64]) {
        let (vw, vb) = Self::split(v);
        let dim = vw.len();
        out[..dim].copy_from_slice(vw);
        out[dim] = 0.0;
        for (x, &d) in self.data.features.iter().zip(&self.curvature) {
            let coef = self.c * d * (x.dot(vw) + vb);
            x.add_to(coef, &mut out[..dim]);
            out[dim] += coef;
        }
    }
}

/// Gradient of the training objective at `model`, stacked as `[w, b]`.
pub fn objective_gradient<R: FeatureRow>(
    data: &LabeledDataset<R>,
    model: &LinearModel,
) -> Vec<f64> {
    let mut params = model.weights.clone();
    params.push(model.intercept);
    let mut grad = vec![0.0; params.len()];
    LogisticObjective::new(data, model.c_value).gradient(&params, &mut grad);
    grad
}

/// Objective value at `model`.
pub fn objective_value<R: FeatureRow>(data: &LabeledDataset<R>, model: &LinearModel) -> f64 {
    let mut params = model.weights.clone();
    params.push(model.intercept);
    LogisticObjective::new(data, model.c_value).value(&params)
}

fn check_classes(labels: &[Label]) -> Result<()> {
    let pos = labels.contains(&Label::Positive);
    let neg = labels.contains(&Label::Negative);
    if pos && neg {
        Ok(())
    } else {
        Err(Error::SingleClass)
    }
}

/// Fits the model until the gradient norm is at most `tol`.
pub fn train_logreg<R: FeatureRow>(
    data: &LabeledDataset<R>,
    c_value: f64,
    tol: f64,
) -> Result<LinearModel> {
    if !(c_value > 0.0 && c_value.is_finite()) {
        return Err(Error::InvalidArgument("C must be positive"));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive"));
    }
    check_classes(&data.labels)?;

    let n = data.feature_dim + 1;
    let mut obj = LogisticObjective::new(data, c_value);
    let mut params = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut step = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut cg = CgWorkspace::new(n);

    let mut f = obj.value(&params);
    obj.gradient(&params, &mut grad);
    let mut gnorm = norm2(&grad);
    for _ in 0..MAX_NEWTON_ITERS {
        if gnorm <= tol {
            break;
        }
        // inexact Newton direction: forcing term min(0.5, sqrt|g|)
        let forcing = 0.5f64.min(libm::sqrt(gnorm));
        cg.solve(&obj, &grad, forcing * gnorm, &mut step);
        let mut slope = dot(&grad, &step);
        if !(slope < 0.0) {
            for (s, g) in step.iter_mut().zip(&grad) {
                *s = -g;
            }
            slope = -gnorm * gnorm;
        }
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_LINE_SEARCH {
            for ((t, p), s) in trial.iter_mut().zip(&params).zip(&step) {
                *t = p + alpha * s;
            }
            let ft = obj.value(&trial);
            if ft <= f + 1e-4 * alpha * slope {
                f = ft;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        core::mem::swap(&mut params, &mut trial);
        obj.gradient(&params, &mut grad);
        gnorm = norm2(&grad);
    }
    if !(gnorm <= tol) {
        return Err(Error::NotConverged {
            grad_norm: gnorm,
            tol,
        });
    }
    let intercept = params.pop().unwrap_or(0.0);
    Ok(LinearModel {
        weights: params,
        intercept,
        c_value,
    })
}

struct CgWorkspace {
    r: Vec<f64>,
    d: Vec<f64>,
    hd: Vec<f64>,
}

impl CgWorkspace {
    fn new(n: usize) -> Self {
        CgWorkspace {
            r: vec![0.0; n],
            d: vec![0.0; n],
            hd: vec![0.0; n],
        }
    }

    /// Approximately solves `H s = -g` by conjugate gradients.
    fn solve<R: FeatureRow>(
        &mut self,
        obj: &LogisticObjective<'_, R>,
        grad: &[f64],
        tol: f64,
        s: &mut [f64],
    ) {
        s.fill(0.0);
        for (r, g) in self.r.iter_mut().zip(grad) {
            *r = -g;
        }
        self.d.copy_from_slice(&self.r);
        let mut rr = dot(&self.r, &self.r);
        let max_iter = grad.len().min(500);
        for _ in 0..max_iter {
            if libm::sqrt(rr) <= tol {
                break;
            }
            obj.hessian_vec(&self.d, &mut self.hd);
            let dhd = dot(&self.d, &self.hd);
            if !(dhd > 0.0) {
                break;
            }
            let a = rr / dhd;
            axpy(a, &self.d, s);
            axpy(-a, &self.hd, &mut self.r);
            let rr_new = dot(&self.r, &self.r);
            let beta = rr_new / rr;
            rr = rr_new;
            for (d, r) in self.d.iter_mut().zip(&self.r) {
                *d = r + beta * *d;
            }
        }
    }
}

/// Gradient-norm tolerance relative to the gradient at `w = 0`, the usual
/// stopping rule for large problems where an absolute bound is out of
/// floating-point reach.
pub fn relative_tolerance<R: FeatureRow>(data: &LabeledDataset<R>, c_value: f64, eps: f64) -> f64 {
    let zero = LinearModel {
        weights: vec![0.0; data.feature_dim],
        intercept: 0.0,
        c_value,
    };
    (eps * norm2(&objective_gradient(data, &zero))).max(1e-12)
}

/// Seeded stratified split: returns `(train, dev)` row indices with about
/// `DEV_FRACTION` of each class in `dev`.
pub fn stratified_split(labels: &[Label], seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = DvRng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut dev = Vec::new();
    for class in [Label::Positive, Label::Negative] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n_dev = libm::round(idx.len() as f64 * DEV_FRACTION) as usize;
        dev.extend_from_slice(&idx[..n_dev]);
        train.extend_from_slice(&idx[n_dev..]);
    }
    train.sort_unstable();
    dev.sort_unstable();
    (train, dev)
}

/// Picks the `C` with the best dev accuracy on a seeded stratified 80/20
/// split; ties go to the smaller `C`. `eps` is the relative stopping
/// tolerance passed through [`relative_tolerance`].
pub fn dev_split_select<R: FeatureRow>(
    data: &LabeledDataset<R>,
    c_grid: &[f64],
    seed: u64,
    eps: f64,
) -> Result<f64> {
    match c_grid {
        [] => return Err(Error::InvalidArgument("C grid is empty")),
        [only] => return Ok(*only),
        _ => {}
    }
    let (train_idx, dev_idx) = stratified_split(&data.labels, seed);
    let train = data.subset(&train_idx);
    let dev = data.subset(&dev_idx);
    check_classes(&train.labels)?;
    let mut grid = c_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut best: Option<(f64, f64)> = None;
    for c in grid {
        let tol = relative_tolerance(&train, c, eps);
        let model = train_logreg(&train, c, tol)?;
        let acc = evaluate(&model, &dev)?;
        if best.is_none_or(|(best_acc, _)| acc > best_acc) {
            best = Some((acc, c));
        }
    }
    Ok(best.map(|(_, c)| c).expect("grid has at least two entries"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn dense(xs: &[&[f64]], ys: &[Label]) -> LabeledDataset<Vec<f64>> {
        let dim = xs[0].len();
        LabeledDataset::new(xs.iter().map(|x| x.to_vec()).collect(), ys.to_vec(), dim).unwrap()
    }

    use Label::{Negative as N, Positive as P};

    #[test]
    fn separable_one_dimensional() {
        let data = dense(&[&[-1.0], &[1.0]], &[N, P]);
        let m = train_logreg(&data, 1e4, 1e-8).unwrap();
        assert_eq!(m.predict(&vec![-1.0]).unwrap(), N);
        assert_eq!(m.predict(&vec![1.0]).unwrap(), P);
        assert!(m.intercept.abs() <= 1e-6);
    }

    #[test]
    fn gradient_at_solution_is_small() {
        let mut rng = DvRng::seed_from_u64(5);
        let xs: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let ys: Vec<Label> = xs
            .iter()
            .map(|x| {
                if x[0] - 0.5 * x[2] + rng.gen_range(-0.3..0.3) > 0.0 {
                    P
                } else {
                    N
                }
            })
            .collect();
        let data = LabeledDataset::new(xs, ys, 4).unwrap();
        let tol = 1e-8;
        let m = train_logreg(&data, 3.0, tol).unwrap();
        assert!(norm2(&objective_gradient(&data, &m)) <= tol);
        let zero = LinearModel {
            weights: vec![0.0; 4],
            intercept: 0.0,
            c_value: 3.0,
        };
        assert!(objective_value(&data, &m) <= objective_value(&data, &zero));
    }

    #[test]
    fn single_class_and_bad_arguments() {
        let data = dense(&[&[1.0], &[2.0]], &[P, P]);
        assert_eq!(train_logreg(&data, 1.0, 1e-6), Err(Error::SingleClass));
        let data = dense(&[&[1.0], &[2.0]], &[P, N]);
        assert!(train_logreg(&data, 0.0, 1e-6).is_err());
        assert!(LabeledDataset::new(vec![vec![1.0]], vec![], 1).is_err());
        assert!(LabeledDataset::new(vec![vec![1.0, 2.0]], vec![P], 1).is_err());
    }

    #[test]
    fn predict_examples() {
        let zero = LinearModel {
            weights: vec![0.0],
            intercept: 0.0,
            c_value: 1.0,
        };
        assert_eq!(zero.predict(&vec![3.0]).unwrap(), P);
        let m = LinearModel {
            weights: vec![1.0],
            intercept: 0.0,
            c_value: 1.0,
        };
        assert_eq!(m.predict(&vec![-2.0]).unwrap(), N);
        assert!(m.predict(&vec![1.0, 1.0]).is_err());
        let sparse = SparseFeatureVector::from_pairs(vec![(3, 1.0)]);
        assert!(m.predict(&sparse).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let m = LinearModel {
            weights: vec![1.0],
            intercept: 0.0,
            c_value: 1.0,
        };
        let data = dense(&[&[1.0], &[-1.0], &[2.0], &[-3.0]], &[P, N, P, N]);
        assert_eq!(evaluate(&m, &data).unwrap(), 1.0);
        let flipped = dense(&[&[1.0], &[-1.0], &[2.0], &[-3.0]], &[N, P, N, P]);
        assert_eq!(evaluate(&m, &flipped).unwrap(), 0.0);
        let three = dense(&[&[1.0], &[-1.0], &[2.0], &[-3.0]], &[P, N, P, P]);
        assert_eq!(evaluate(&m, &three).unwrap(), 0.75);
        let empty = LabeledDataset::<Vec<f64>>::new(vec![], vec![], 1).unwrap();
        assert!(evaluate(&m, &empty).is_err());
    }

    #[test]
    fn split_is_stratified_and_seeded() {
        let labels: Vec<Label> = (0..50).map(|i| if i % 5 == 0 { P } else { N }).collect();
        let (tr, dev) = stratified_split(&labels, 7);
        assert_eq!(tr.len() + dev.len(), 50);
        assert_eq!(dev.iter().filter(|&&i| labels[i] == P).count(), 2);
        assert_eq!(dev.iter().filter(|&&i| labels[i] == N).count(), 8);
        assert_eq!((tr.clone(), dev.clone()), stratified_split(&labels, 7));
        assert_ne!(dev, stratified_split(&labels, 8).1);
    }

    #[test]
    fn grid_of_one() {
        let data = dense(&[&[1.0], &[-1.0]], &[P, N]);
        assert_eq!(dev_split_select(&data, &[0.3], 1, 1e-3).unwrap(), 0.3);
        assert!(dev_split_select(&data, &[], 1, 1e-3).is_err());
    }
}
