//! Sigmoid noise-contrastive losses with balanced (multi-positive) anchors.
//!
//! A pair `(q, v)` is scored as `σ(qᵀv/τ)` when it is positive and
//! `σ(-qᵀv/τ)` when it is negative. The plain loss for one anchor `q` is
//!
//! ```text
//! L_NS = -[ ln σ(q·v⁺/τ) + Σ_j ln σ(-q·v⁻_j/τ) ]
//! ```
//!
//! The balanced loss repeats that sum for `m` additional same-class anchors
//! and averages over the `m + 1` anchors. The first summand is the
//! instance-level part (anchor and its own augmented view), the rest is the
//! class-level part (other members of the class against the anchor's view).

use rand::seq::IndexedRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BnsConfig {
    pub tau: f64,
    /// Extra same-class positives per anchor.
    pub m: usize,
    /// Negatives per anchor.
    pub n: usize,
}

impl Default for BnsConfig {
    fn default() -> Self {
        Self { tau: 0.3, m: 6, n: 5 }
    }
}

impl BnsConfig {
    pub fn new(tau: f64, m: usize, n: usize) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "temperature must be positive, got {tau}"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one negative".into()));
        }
        Ok(Self { tau, m, n })
    }
}

/// One anchor with its augmented view, extra same-class anchors and negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct BnsBatch {
    pub anchor: Vec<f64>,
    pub positive: Vec<f64>,
    pub extra_positives: Vec<Vec<f64>>,
    pub negatives: Vec<Vec<f64>>,
}

impl BnsBatch {
    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    fn anchors(&self) -> impl Iterator<Item = &Vec<f64>> {
        std::iter::once(&self.anchor).chain(self.extra_positives.iter())
    }

    fn check(&self) -> Result<()> {
        let d = self.dim();
        let all = std::iter::once(&self.positive)
            .chain(self.extra_positives.iter())
            .chain(self.negatives.iter());
        for v in all {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }

    fn check_config(&self, config: &BnsConfig) -> Result<()> {
        self.check()?;
        if self.extra_positives.len() != config.m || self.negatives.len() != config.n {
            return Err(Error::ConfigMismatch(format!(
                "batch has m = {}, n = {}; config has m = {}, n = {}",
                self.extra_positives.len(),
                self.negatives.len(),
                config.m,
                config.n
            )));
        }
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(x)` without overflow for large |x|.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Pair score: `σ(qᵀv/τ)` for a positive pair, `σ(-qᵀv/τ)` for a negative one.
pub fn pair_score(q: &[f64], v: &[f64], tau: f64, positive_pair: bool) -> Result<f64> {
    if q.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: q.len(),
            got: v.len(),
        });
    }
    let s = dot(q, v) / tau;
    Ok(sigmoid(if positive_pair { s } else { -s }))
}

/// Per-anchor log-likelihood `ln σ(a·v⁺/τ) + Σ_j ln σ(-a·v⁻_j/τ)`.
fn anchor_term(a: &[f64], positive: &[f64], negatives: &[Vec<f64>], tau: f64) -> f64 {
    let neg: f64 = negatives.iter().map(|v| log_sigmoid(-dot(a, v) / tau)).sum();
    log_sigmoid(dot(a, positive) / tau) + neg
}

/// Single-anchor loss; `extra_positives` must be empty.
pub fn ns_loss(batch: &BnsBatch, config: &BnsConfig) -> Result<f64> {
    batch.check()?;
    if !batch.extra_positives.is_empty() {
        return Err(Error::ConfigMismatch("the plain loss takes no extra positives".into()));
    }
    Ok(-anchor_term(
        &batch.anchor,
        &batch.positive,
        &batch.negatives,
        config.tau,
    ))
}

/// Balanced loss averaged over the anchor and its `m` extra positives.
pub fn bns_loss(batch: &BnsBatch, config: &BnsConfig) -> Result<f64> {
    batch.check_config(config)?;
    let total: f64 = batch
        .anchors()
        .map(|a| anchor_term(a, &batch.positive, &batch.negatives, config.tau))
        .fold(0.0, |acc, t| acc + t);
    Ok(-total / (config.m + 1) as f64)
}

/// Gradient of [`bns_loss`] with respect to every vector in the batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BnsGradient {
    pub anchor: Vec<f64>,
    pub positive: Vec<f64>,
    pub extra_positives: Vec<Vec<f64>>,
    pub negatives: Vec<Vec<f64>>,
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn bns_gradient(batch: &BnsBatch, config: &BnsConfig) -> Result<BnsGradient> {
    batch.check_config(config)?;
    let d = batch.dim();
    let tau = config.tau;
    let scale = 1.0 / (config.m + 1) as f64;

    let mut positive = vec![0.0; d];
    let mut negatives = vec![vec![0.0; d]; batch.negatives.len()];
    let mut anchors = Vec::with_capacity(config.m + 1);
    for a in batch.anchors() {
        let mut ga = vec![0.0; d];
        // d/dx ln σ(x) = σ(-x)
        let wp = sigmoid(-dot(a, &batch.positive) / tau) * scale / tau;
        axpy(&mut ga, -wp, &batch.positive);
        axpy(&mut positive, -wp, a);
        for (vn, gn) in batch.negatives.iter().zip(negatives.iter_mut()) {
            let wn = sigmoid(dot(a, vn) / tau) * scale / tau;
            axpy(&mut ga, wn, vn);
            axpy(gn, wn, a);
        }
        anchors.push(ga);
    }
    let anchor = anchors.remove(0);
    Ok(BnsGradient {
        anchor,
        positive,
        extra_positives: anchors,
        negatives,
    })
}

/// Mean over classes of the mean pairwise cosine distance `1 - cos` between
/// same-class vectors. Vectors must be unit-norm; classes with a single
/// member contribute nothing.
pub fn intra_class_distance(embeddings: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if embeddings.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: embeddings.len(),
            got: labels.len(),
        });
    }
    if let Some(v) = embeddings.iter().find(|v| (dot(v, v).sqrt() - 1.0).abs() > 1e-8) {
        return Err(Error::NotNormalized(dot(v, v).sqrt()));
    }
    let num_classes = labels.iter().max().map_or(0, |&c| c + 1);
    let mut per_class = Vec::new();
    for c in 0..num_classes {
        let members: Vec<&Vec<f64>> = embeddings
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == c)
            .map(|(v, _)| v)
            .collect();
        if members.len() < 2 {
            continue;
        }
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for i in 0..members.len() {
            for j in (i + 1)..members.len() {
                sum += 1.0 - dot(members[i], members[j]);
                pairs += 1;
            }
        }
        per_class.push(sum / pairs as f64);
    }
    if per_class.is_empty() {
        return Ok(0.0);
    }
    Ok(per_class.iter().sum::<f64>() / per_class.len() as f64)
}

pub fn normalize(v: &mut [f64]) {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Toy training knobs beyond the loss configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyTraining {
    pub steps: usize,
    pub lr: f64,
    pub seed: u64,
    /// Standard deviation of the additive noise producing the augmented view.
    pub view_noise: f64,
}

impl Default for ToyTraining {
    fn default() -> Self {
        Self {
            steps: 200,
            lr: 0.1,
            seed: 42,
            view_noise: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyTrace {
    pub embeddings: Vec<Vec<f64>>,
    /// Mean batch loss before each step.
    pub loss: Vec<f64>,
    /// Intra-class distance before each step, plus one entry after the last.
    pub intra_dist: Vec<f64>,
}

impl ToyTrace {
    /// CSV with header `step,loss,intra_dist`. The final row (after the last
    /// update) has an empty loss cell when no loss was evaluated there.
    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "step,loss,intra_dist")?;
        for (step, d) in self.intra_dist.iter().enumerate() {
            match self.loss.get(step) {
                Some(l) => writeln!(w, "{step},{l},{d}")?,
                None => writeln!(w, "{step},,{d}")?,
            }
        }
        Ok(())
    }
}

/// Learn a free embedding per item by gradient descent on [`bns_loss`].
///
/// Every item is an anchor at every step. Its augmented view is the item's own
/// embedding plus Gaussian noise; the `m` extra positives are distinct
/// same-class items and the `n` negatives are drawn with replacement from the
/// other classes. Gradients from all anchors are averaged, applied with step
/// `lr`, and every embedding is renormalized to unit length afterwards.
pub fn train_toy_embeddings(
    data: &[Vec<f64>],
    labels: &[usize],
    config: &BnsConfig,
    training: &ToyTraining,
) -> Result<ToyTrace> {
    if data.len() != labels.len() || data.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            got: labels.len(),
        });
    }
    let d = data[0].len();
    if let Some(v) = data.iter().find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: v.len(),
        });
    }
    let num_classes = labels.iter().max().map_or(0, |&c| c + 1);
    let members: Vec<Vec<usize>> = (0..num_classes)
        .map(|c| (0..labels.len()).filter(|&i| labels[i] == c).collect())
        .collect();
    let present = members.iter().filter(|m| !m.is_empty()).count();
    if present < 2 {
        return Err(Error::DegenerateConfig("need at least two classes".into()));
    }
    for (c, m) in members.iter().enumerate() {
        if !m.is_empty() && m.len() < config.m + 1 {
            return Err(Error::ClassTooSmall {
                class: c,
                size: m.len(),
                needed: config.m + 1,
            });
        }
    }
    let others: Vec<Vec<usize>> = (0..num_classes)
        .map(|c| (0..labels.len()).filter(|&i| labels[i] != c).collect())
        .collect();

    let mut emb: Vec<Vec<f64>> = data.to_vec();
    for v in emb.iter_mut() {
        if (dot(v, v) - 1.0).abs() > 1e-12 {
            normalize(v);
        }
    }

    let mut rng = rng_from_seed(derive_seed(training.seed, "bns-toy-train"));
    let noise = Normal::new(0.0, training.view_noise.max(0.0)).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut loss_trace = Vec::with_capacity(training.steps);
    let mut dist_trace = Vec::with_capacity(training.steps + 1);
    let count = emb.len() as f64;

    for step in 0..training.steps {
        dist_trace.push(intra_class_distance(&emb, labels)?);
        let mut grads = vec![vec![0.0; d]; emb.len()];
        let mut total = 0.0;
        for i in 0..emb.len() {
            let c = labels[i];
            let positive: Vec<f64> = emb[i].iter().map(|x| x + noise.sample(&mut rng)).collect();
            let pool: Vec<usize> = members[c].iter().copied().filter(|&j| j != i).collect();
            let extras: Vec<usize> = pool.choose_multiple(&mut rng, config.m).copied().collect();
            let negs: Vec<usize> = (0..config.n)
                .map(|_| others[c][rng.random_range(0..others[c].len())])
                .collect();
            let batch = BnsBatch {
                anchor: emb[i].clone(),
                positive,
                extra_positives: extras.iter().map(|&j| emb[j].clone()).collect(),
                negatives: negs.iter().map(|&j| emb[j].clone()).collect(),
            };
            total += bns_loss(&batch, config)?;
            let g = bns_gradient(&batch, config)?;
            // the view is emb[i] + noise, so its gradient flows to emb[i]
            axpy(&mut grads[i], 1.0, &g.anchor);
            axpy(&mut grads[i], 1.0, &g.positive);
            for (&j, gj) in extras.iter().zip(&g.extra_positives) {
                axpy(&mut grads[j], 1.0, gj);
            }
            for (&j, gj) in negs.iter().zip(&g.negatives) {
                axpy(&mut grads[j], 1.0, gj);
            }
        }
        let mean_loss = total / count;
        if !mean_loss.is_finite() {
            return Err(Error::NonFiniteLoss(step));
        }
        loss_trace.push(mean_loss);
        for (v, g) in emb.iter_mut().zip(&grads) {
            axpy(v, -training.lr / count, g);
            normalize(v);
        }
    }
    dist_trace.push(intra_class_distance(&emb, labels)?);
    Ok(ToyTrace {
        embeddings: emb,
        loss: loss_trace,
        intra_dist: dist_trace,
    })
}

/// Gaussian blobs around random unit-norm class centres.
pub fn toy_dataset(
    classes: usize,
    per_class: usize,
    dim: usize,
    spread: f64,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let mut rng = rng_from_seed(derive_seed(seed, "bns-toy-data"));
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut data = Vec::with_capacity(classes * per_class);
    let mut labels = Vec::with_capacity(classes * per_class);
    for c in 0..classes {
        let mut centre: Vec<f64> = (0..dim).map(|_| normal.sample(&mut rng)).collect();
        normalize(&mut centre);
        for _ in 0..per_class {
            let mut x: Vec<f64> = centre.iter().map(|m| m + spread * normal.sample(&mut rng)).collect();
            normalize(&mut x);
            data.push(x);
            labels.push(c);
        }
    }
    if data.iter().any(|v| dot(v, v) == 0.0) {
        return Err(Error::DegenerateConfig("zero vector in toy data".into()));
    }
    Ok((data, labels))
}
