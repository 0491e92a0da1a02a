//! Linear softmax classifiers for the spurious-correlation task.
//!
//! [`SharedSpecificClassifier`] composes per-domain weights additively,
//! `logits(x) = (W_sh + W_d)·x`, with every block a flattened
//! `num_classes × feature_dim` matrix. Both blocks therefore receive the
//! same weight-gradient from a domain's loss.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::objective::{Batch, DomainObjective, Evaluation};
use crate::param::{BlockId, Domain, GradSlices, ParamLayout, ParamVector};
use crate::testbeds::spurious::{Features, LabeledSet, UnlabeledSet};
use crate::vector::dot;

/// Standard deviation of the shared-block initialization.
pub const SHARED_INIT_STD: f64 = 0.01;

/// Anything that maps a feature vector to class probabilities.
pub trait Predictor: Sync {
    fn num_classes(&self) -> usize;
    fn predict_proba(&self, x: &[f64]) -> Vec<f64>;
}

/// In-place numerically stable softmax.
pub fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// `softmax(W·x)` for a row-major `num_classes × dim` weight matrix.
pub fn linear_proba(weights: &[f64], num_classes: usize, x: &[f64]) -> Vec<f64> {
    let dim = x.len();
    let mut z: Vec<f64> = (0..num_classes)
        .map(|k| dot(&weights[k * dim..(k + 1) * dim], x))
        .collect();
    softmax_in_place(&mut z);
    z
}

/// Mean softmax cross-entropy over `rows` and its gradient w.r.t. `weights`.
/// Returns `(0, 0)` when `rows` is empty.
pub fn softmax_cross_entropy(
    weights: &[f64],
    num_classes: usize,
    features: &Features,
    labels: &[usize],
    rows: impl Iterator<Item = usize>,
) -> (f64, Vec<f64>, usize) {
    let dim = features.dim();
    let mut grad = vec![0.0; weights.len()];
    let mut loss = 0.0;
    let mut count = 0usize;
    let mut z = vec![0.0; num_classes];
    for i in rows {
        let x = features.row(i);
        let y = labels[i];
        for (k, zk) in z.iter_mut().enumerate() {
            *zk = dot(&weights[k * dim..(k + 1) * dim], x);
        }
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = z.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        loss += log_sum - z[y];
        for (k, zk) in z.iter().enumerate() {
            let residual = (zk - log_sum).exp() - if k == y { 1.0 } else { 0.0 };
            if residual != 0.0 {
                for (g, xj) in grad[k * dim..(k + 1) * dim].iter_mut().zip(x) {
                    *g += residual * xj;
                }
            }
        }
        count += 1;
    }
    if count > 0 {
        let inv = 1.0 / count as f64;
        loss *= inv;
        grad.iter_mut().for_each(|g| *g *= inv);
    }
    (loss, grad, count)
}

/// Plain linear softmax classifier (no bias).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSoftmax {
    num_classes: usize,
    dim: usize,
    weights: Vec<f64>,
}

impl LinearSoftmax {
    pub fn new(num_classes: usize, dim: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != num_classes * dim {
            return Err(Error::LengthMismatch {
                context: "linear classifier weights",
                expected: num_classes * dim,
                actual: weights.len(),
            });
        }
        Ok(Self {
            num_classes,
            dim,
            weights,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn accuracy(&self, data: &LabeledSet) -> f64 {
        accuracy(self, data)
    }
}

impl Predictor for LinearSoftmax {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        linear_proba(&self.weights, self.num_classes, x)
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

pub fn accuracy(model: &dyn Predictor, data: &LabeledSet) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let correct = data
        .features
        .rows()
        .zip(&data.labels)
        .filter(|(x, &y)| argmax(&model.predict_proba(x)) == y)
        .count();
    correct as f64 / data.len() as f64
}

/// Stand-in for a frozen zero-shot model: a linear softmax classifier fit
/// to the source data with `warmup_iters` full-batch gradient steps from
/// zero, then frozen.
pub fn train_anchor(
    source: &LabeledSet,
    num_classes: usize,
    warmup_iters: usize,
    eta: f64,
) -> Result<LinearSoftmax> {
    if warmup_iters == 0 {
        return Err(Error::InvalidConfig("anchor warmup needs at least one step".into()));
    }
    if source.is_empty() {
        return Err(Error::EmptyBatch(Domain::Source(0)));
    }
    let dim = source.features.dim();
    let mut w = vec![0.0; num_classes * dim];
    for step in 0..warmup_iters {
        let (loss, grad, _) =
            softmax_cross_entropy(&w, num_classes, &source.features, &source.labels, 0..source.len());
        if !loss.is_finite() || !grad.iter().all(|g| g.is_finite()) {
            return Err(Error::AnchorDiverged { step });
        }
        for (wi, gi) in w.iter_mut().zip(&grad) {
            *wi -= eta * gi;
        }
    }
    LinearSoftmax::new(num_classes, dim, w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoLabel {
    pub include: bool,
    pub label: usize,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabelSet {
    pub entries: Vec<PseudoLabel>,
}

impl PseudoLabelSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn included(&self) -> usize {
        self.entries.iter().filter(|e| e.include).count()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.label).collect()
    }

    pub fn mask(&self) -> Vec<bool> {
        self.entries.iter().map(|e| e.include).collect()
    }
}

/// Pseudo-label for one probability vector: argmax class (lowest index on
/// ties), included iff its probability is at least `tau`.
pub fn label_from_probs(probs: &[f64], tau: f64, index: usize) -> Result<PseudoLabel> {
    let invalid = |reason: String| Error::InvalidProbabilities { index, reason };
    if probs.is_empty() {
        return Err(invalid("empty".into()));
    }
    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(invalid(format!("negative or non-finite entry in {probs:?}")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("sums to {sum}")));
    }
    let label = argmax(probs);
    let confidence = probs[label];
    Ok(PseudoLabel {
        include: confidence >= tau,
        label,
        confidence,
    })
}

pub fn pseudo_label(anchor: &dyn Predictor, data: &UnlabeledSet, tau: f64) -> Result<PseudoLabelSet> {
    let entries = data
        .features
        .rows()
        .enumerate()
        .map(|(i, x)| label_from_probs(&anchor.predict_proba(x), tau, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(PseudoLabelSet { entries })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharedSpecificClassifier {
    num_classes: usize,
    feature_dim: usize,
    num_sources: usize,
}

impl SharedSpecificClassifier {
    pub fn new(num_classes: usize, feature_dim: usize, num_sources: usize) -> Self {
        Self {
            num_classes,
            feature_dim,
            num_sources,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn block_len(&self) -> usize {
        self.num_classes * self.feature_dim
    }

    pub fn layout(&self) -> ParamLayout {
        let b = self.block_len();
        ParamLayout::new(b, vec![b; self.num_sources], b)
    }

    /// Shared block ~ N(0, 0.01²), specific blocks zero.
    pub fn init_params(&self, rng: &mut impl Rng) -> ParamVector {
        let layout = Arc::new(self.layout());
        let normal = Normal::new(0.0, SHARED_INIT_STD).expect("valid std");
        let mut values = vec![0.0; layout.total_dim()];
        for v in &mut values[..self.block_len()] {
            *v = normal.sample(rng);
        }
        ParamVector::from_parts_unchecked(layout, values)
    }

    fn check(&self, params: &ParamVector) -> Result<()> {
        if params.layout() != &self.layout() {
            return Err(Error::LayoutMismatch(format!(
                "classifier expects {}, got {}",
                self.layout().header(),
                params.layout().header()
            )));
        }
        Ok(())
    }

    /// `W_sh + W_d` for `domain`.
    pub fn composed_weights(&self, params: &ParamVector, domain: Domain) -> Result<Vec<f64>> {
        self.check(params)?;
        let shared = params.slice(BlockId::Shared)?;
        let specific = params.slice(domain.block())?;
        Ok(shared.iter().zip(specific).map(|(a, b)| a + b).collect())
    }

    pub fn predict_proba(&self, params: &ParamVector, domain: Domain, x: &[f64]) -> Result<Vec<f64>> {
        let w = self.composed_weights(params, domain)?;
        Ok(linear_proba(&w, self.num_classes, x))
    }

    fn domains(&self) -> impl Iterator<Item = Domain> {
        (0..self.num_sources)
            .map(Domain::Source)
            .chain(std::iter::once(Domain::Target))
    }

    /// Mean of the class probabilities under every source composition and
    /// the target composition.
    pub fn avg_inference(&self, params: &ParamVector, x: &[f64]) -> Result<Vec<f64>> {
        let mut avg = vec![0.0; self.num_classes];
        let mut count = 0.0;
        for d in self.domains() {
            let p = self.predict_proba(params, d, x)?;
            for (a, v) in avg.iter_mut().zip(&p) {
                *a += v;
            }
            count += 1.0;
        }
        avg.iter_mut().for_each(|a| *a /= count);
        Ok(avg)
    }

    /// Frozen averaged-inference predictor for `params`.
    pub fn averaged(&self, params: &ParamVector) -> Result<AveragedPredictor> {
        let weights = self
            .domains()
            .map(|d| self.composed_weights(params, d))
            .collect::<Result<Vec<_>>>()?;
        Ok(AveragedPredictor {
            num_classes: self.num_classes,
            weights,
        })
    }
}

/// Snapshot of a [`SharedSpecificClassifier`] that averages predictions
/// over all domain compositions.
#[derive(Debug, Clone)]
pub struct AveragedPredictor {
    num_classes: usize,
    weights: Vec<Vec<f64>>,
}

impl Predictor for AveragedPredictor {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut avg = vec![0.0; self.num_classes];
        for w in &self.weights {
            for (a, v) in avg.iter_mut().zip(linear_proba(w, self.num_classes, x)) {
                *a += v;
            }
        }
        let n = self.weights.len() as f64;
        avg.iter_mut().for_each(|a| *a /= n);
        avg
    }
}

/// Cross-entropy loss of one domain under its composed weights.
///
/// Source objectives use every row of the batch and reject empty batches.
/// Target objectives carry an inclusion mask (pseudo-label confidence
/// cleared `tau`) and average over the included rows only; a batch with no
/// included row yields zero loss and zero gradient.
#[derive(Debug, Clone)]
pub struct CrossEntropyObjective {
    model: SharedSpecificClassifier,
    domain: Domain,
    features: Arc<Features>,
    labels: Arc<Vec<usize>>,
    include: Option<Arc<Vec<bool>>>,
}

impl CrossEntropyObjective {
    pub fn source(model: SharedSpecificClassifier, index: usize, data: &LabeledSet) -> Self {
        Self {
            model,
            domain: Domain::Source(index),
            features: Arc::new(data.features.clone()),
            labels: Arc::new(data.labels.clone()),
            include: None,
        }
    }

    pub fn target(
        model: SharedSpecificClassifier,
        features: Arc<Features>,
        pseudo: &PseudoLabelSet,
    ) -> Result<Self> {
        if pseudo.len() != features.len() {
            return Err(Error::LengthMismatch {
                context: "pseudo labels",
                expected: features.len(),
                actual: pseudo.len(),
            });
        }
        Ok(Self {
            model,
            domain: Domain::Target,
            features,
            labels: Arc::new(pseudo.labels()),
            include: Some(Arc::new(pseudo.mask())),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

impl DomainObjective for CrossEntropyObjective {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn evaluate(&self, params: &ParamVector, batch: &Batch) -> Result<Evaluation> {
        let w = self.model.composed_weights(params, self.domain)?;
        let n = self.labels.len();
        let indices: Box<dyn Iterator<Item = usize>> = match batch {
            Batch::Full => Box::new(0..n),
            Batch::Indices(ix) => {
                if let Some(&bad) = ix.iter().find(|&&i| i >= n) {
                    return Err(Error::InvalidConfig(format!(
                        "batch index {bad} out of range for {n} samples"
                    )));
                }
                Box::new(ix.iter().copied())
            }
        };
        let rows: Box<dyn Iterator<Item = usize>> = match &self.include {
            Some(mask) => {
                let mask = Arc::clone(mask);
                Box::new(indices.filter(move |&i| mask[i]))
            }
            None => indices,
        };
        let (loss, grad, count) =
            softmax_cross_entropy(&w, self.model.num_classes, &self.features, &self.labels, rows);
        if count == 0 && self.include.is_none() {
            return Err(Error::EmptyBatch(self.domain));
        }
        Ok(Evaluation {
            loss,
            grad: GradSlices::new(self.domain, grad.clone(), grad),
        })
    }
}

/// Source-domain CE loss and gradient slices on `batch`.
pub fn source_loss(
    model: &SharedSpecificClassifier,
    params: &ParamVector,
    data: &LabeledSet,
    index: usize,
    batch: &Batch,
) -> Result<(f64, GradSlices)> {
    let eval = CrossEntropyObjective::source(model.clone(), index, data).evaluate(params, batch)?;
    Ok((eval.loss, eval.grad))
}

/// Target-domain CE loss over pseudo-labeled rows that cleared `tau`.
pub fn target_loss(
    model: &SharedSpecificClassifier,
    params: &ParamVector,
    features: &Features,
    pseudo: &PseudoLabelSet,
    batch: &Batch,
) -> Result<(f64, GradSlices)> {
    let obj = CrossEntropyObjective::target(model.clone(), Arc::new(features.clone()), pseudo)?;
    let eval = obj.evaluate(params, batch)?;
    Ok((eval.loss, eval.grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{check_gradient, FullSpace};
    use crate::testbeds::spurious::{gen_spurious, SpuriousConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_data(seed: u64) -> LabeledSet {
        gen_spurious(&SpuriousConfig {
            noise_dim: 4,
            n_samples: 40,
            seed,
            ..SpuriousConfig::default()
        })
        .unwrap()
    }

    fn median_confidence(anchor: &LinearSoftmax, data: &LabeledSet) -> f64 {
        let mut conf: Vec<f64> = data
            .features
            .rows()
            .map(|x| anchor.predict_proba(x).into_iter().fold(0.0, f64::max))
            .collect();
        conf.sort_by(f64::total_cmp);
        conf[conf.len() / 2]
    }

    fn random_params(model: &SharedSpecificClassifier, rng: &mut ChaCha8Rng, scale: f64) -> ParamVector {
        let layout = Arc::new(model.layout());
        let values = (0..layout.total_dim())
            .map(|_| rng.gen_range(-scale..scale))
            .collect();
        ParamVector::new(layout, values).unwrap()
    }

    #[test]
    fn uniform_predictor_loss_is_ln2() {
        let data = small_data(0);
        let model = SharedSpecificClassifier::new(2, 6, 1);
        let p = ParamVector::zeros(Arc::new(model.layout()));
        let (loss, g) = source_loss(&model, &p, &data, 0, &Batch::Full).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(g.shared, g.specific);
    }

    #[test]
    fn separating_weights_drive_loss_to_zero() {
        let data = small_data(1);
        let model = SharedSpecificClassifier::new(2, 6, 1);
        let mut prev = f64::INFINITY;
        for scale in [1.0, 10.0, 100.0] {
            // Class 1 scores +x[1], class 0 scores −x[1].
            let mut values = vec![0.0; model.layout().total_dim()];
            values[1] = -scale;
            values[6 + 1] = scale;
            let p = ParamVector::new(Arc::new(model.layout()), values).unwrap();
            let (loss, _) = source_loss(&model, &p, &data, 0, &Batch::Full).unwrap();
            assert!(loss < prev);
            prev = loss;
        }
        assert!(prev < 1e-40);
    }

    #[test]
    fn source_gradient_matches_finite_differences() {
        let data = small_data(2);
        let model = SharedSpecificClassifier::new(2, 6, 2);
        let obj = CrossEntropyObjective::source(model.clone(), 1, &data);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let p = random_params(&model, &mut rng, 0.5);
            let batch = Batch::Indices(vec![0, 3, 5, 7, 11, 30]);
            let f = FullSpace::new(&obj, Arc::new(model.layout()), batch);
            let r = check_gradient(&f, p.values(), 1e-5, 1e-7).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn target_gradient_matches_finite_differences_on_included_rows() {
        let data = small_data(3);
        let model = SharedSpecificClassifier::new(2, 6, 1);
        let anchor = train_anchor(&data, 2, 5, 0.1).unwrap();
        let tau = median_confidence(&anchor, &data);
        let pseudo = pseudo_label(&anchor, &data.unlabeled(), tau).unwrap();
        assert!(pseudo.included() > 0 && pseudo.included() < pseudo.len());
        let obj = CrossEntropyObjective::target(model.clone(), Arc::new(data.features.clone()), &pseudo).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let p = random_params(&model, &mut rng, 0.5);
        let f = FullSpace::new(&obj, Arc::new(model.layout()), Batch::Full);
        assert!(check_gradient(&f, p.values(), 1e-5, 1e-7).unwrap().passed);
    }

    #[test]
    fn target_loss_with_nothing_included_is_zero() {
        let data = small_data(4);
        let model = SharedSpecificClassifier::new(2, 6, 1);
        let anchor = train_anchor(&data, 2, 3, 0.1).unwrap();
        let pseudo = pseudo_label(&anchor, &data.unlabeled(), 1.0).unwrap();
        assert_eq!(pseudo.included(), 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = random_params(&model, &mut rng, 1.0);
        let (loss, g) = target_loss(&model, &p, &data.features, &pseudo, &Batch::Full).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.shared.iter().chain(&g.specific).all(|v| *v == 0.0));
    }

    #[test]
    fn tau_zero_equals_plain_ce_on_pseudo_labels() {
        let data = small_data(5);
        let model = SharedSpecificClassifier::new(2, 6, 1);
        let anchor = train_anchor(&data, 2, 3, 0.1).unwrap();
        let pseudo = pseudo_label(&anchor, &data.unlabeled(), 0.0).unwrap();
        assert_eq!(pseudo.included(), pseudo.len());
        let relabeled = LabeledSet::new(data.features.clone(), pseudo.labels()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_params(&model, &mut rng, 0.3);
        let (lt, gt) = target_loss(&model, &p, &data.features, &pseudo, &Batch::Full).unwrap();
        let w = model.composed_weights(&p, Domain::Target).unwrap();
        let (lp, gp, _) = softmax_cross_entropy(&w, 2, &relabeled.features, &relabeled.labels, 0..40);
        assert_eq!(lt, lp);
        assert_eq!(gt.shared, gp);
    }

    #[test]
    fn empty_source_batch_is_an_error() {
        let data = small_data(6);
        let model = SharedSpecificClassifier::new(2, 6, 1);
        let p = ParamVector::zeros(Arc::new(model.layout()));
        assert!(matches!(
            source_loss(&model, &p, &data, 0, &Batch::Indices(vec![])),
            Err(Error::EmptyBatch(_))
        ));
        assert!(source_loss(&model, &p, &data, 0, &Batch::Indices(vec![40])).is_err());
    }

    #[test]
    fn pseudo_label_examples() {
        let a = label_from_probs(&[0.45, 0.55], 0.4, 0).unwrap();
        assert_eq!((a.include, a.label, a.confidence), (true, 1, 0.55));
        assert!(!label_from_probs(&[0.62, 0.38], 0.7, 0).unwrap().include);
        let tie = label_from_probs(&[0.5, 0.5], 0.4, 0).unwrap();
        assert_eq!((tie.include, tie.label), (true, 0));
    }

    #[test]
    fn pseudo_label_rejects_bad_probabilities() {
        assert!(label_from_probs(&[0.5, 0.6], 0.4, 3).is_err());
        assert!(label_from_probs(&[-0.1, 1.1], 0.4, 3).is_err());
        assert!(label_from_probs(&[f64::NAN, 1.0], 0.4, 3).is_err());
    }

    #[test]
    fn anchor_is_accurate_in_distribution() {
        let data = gen_spurious(&SpuriousConfig {
            n_samples: 2000,
            seed: 11,
            ..SpuriousConfig::default()
        })
        .unwrap();
        let anchor = train_anchor(&data, 2, 200, 0.1).unwrap();
        assert!(anchor.accuracy(&data) > 0.9);
        let x = data.features.row(0);
        assert_eq!(anchor.predict_proba(x), anchor.predict_proba(x));
    }

    #[test]
    fn anchor_needs_warmup() {
        let data = small_data(7);
        assert!(train_anchor(&data, 2, 0, 0.1).is_err());
    }

    #[test]
    fn averaged_inference() {
        let model = SharedSpecificClassifier::new(2, 6, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = model.init_params(&mut rng);
        let x = [0.3, -1.0, 0.2, 0.1, -0.4, 2.0];
        let shared_only = linear_proba(p.slice(BlockId::Shared).unwrap(), 2, &x);
        let avg = model.avg_inference(&p, &x).unwrap();
        for (a, b) in avg.iter().zip(&shared_only) {
            assert!((a - b).abs() < 1e-15);
        }
        let q = random_params(&model, &mut rng, 3.0);
        let avg = model.avg_inference(&q, &x).unwrap();
        assert!(avg.iter().all(|v| *v >= 0.0));
        assert!((avg.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let frozen = model.averaged(&q).unwrap();
        assert_eq!(frozen.predict_proba(&x), avg);
    }

    #[test]
    fn averaged_inference_of_opposite_compositions() {
        // Source composition predicts class 0, target class 1, both sharply.
        let model = SharedSpecificClassifier::new(2, 1, 1);
        let layout = Arc::new(model.layout());
        let p = ParamVector::new(layout, vec![0.0, 0.0, 800.0, -800.0, -800.0, 800.0]).unwrap();
        let avg = model.avg_inference(&p, &[1.0]).unwrap();
        assert_eq!(avg, vec![0.5, 0.5]);
    }

    #[test]
    fn specific_blocks_start_at_zero() {
        let model = SharedSpecificClassifier::new(2, 300, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = model.init_params(&mut rng);
        assert!(p.slice(BlockId::Source(0)).unwrap().iter().all(|v| *v == 0.0));
        assert!(p.slice(BlockId::Source(1)).unwrap().iter().all(|v| *v == 0.0));
        assert!(p.slice(BlockId::Target).unwrap().iter().all(|v| *v == 0.0));
        let sh = p.slice(BlockId::Shared).unwrap();
        let std = (sh.iter().map(|v| v * v).sum::<f64>() / sh.len() as f64).sqrt();
        assert!((std - SHARED_INIT_STD).abs() < 0.002);
    }
}
