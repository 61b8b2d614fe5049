//! A desk-scale two-stage long-tail experiment on Gaussian blobs.
//!
//! Stage one trains a softmax classifier on the full long-tailed training
//! set. Stage two keeps training from those weights on class-balanced subsets
//! that are re-drawn every few epochs, either by the IP-DPP sampler (using the
//! current classifier's correct-label probabilities) or uniformly at random.
//! A third arm simply keeps training on the full data for the same number of
//! epochs. All arms are scored on a class-balanced test set, stratified into
//! many-, medium- and few-shot classes by training-set size.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample as sample_indices;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data_model::{ClassManifest, ItemRecord};
use crate::error::{Error, Result};
use crate::ipdpp::{balanced_resample, merged_indices, SamplerConfig};
use crate::rng::{derive_seed, derive_seed_tagged, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub num_classes: usize,
    /// Size of the largest class, `N_1`.
    pub max_class_size: usize,
    /// `N_1 / N_C`.
    pub imbalance_factor: f64,
    pub dim: usize,
    /// Distance of each class mean from the origin.
    pub class_separation: f64,
    /// Within-class standard deviation.
    pub noise_sigma: f64,
    pub test_per_class: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            num_classes: 10,
            max_class_size: 500,
            imbalance_factor: 100.0,
            dim: 8,
            class_separation: 1.5,
            noise_sigma: 1.0,
            test_per_class: 100,
            seed: 42,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::DegenerateConfig(msg));
        if self.num_classes < 3 {
            return bad(format!("need at least 3 classes, got {}", self.num_classes));
        }
        if self.max_class_size < self.num_classes {
            return bad(format!(
                "largest class ({}) must hold at least one item per class ({})",
                self.max_class_size, self.num_classes
            ));
        }
        if !(self.imbalance_factor >= 1.0) || !self.imbalance_factor.is_finite() {
            return bad(format!("imbalance factor must be ≥ 1, got {}", self.imbalance_factor));
        }
        if self.dim == 0 || self.test_per_class == 0 {
            return bad("dimension and test size must be positive".into());
        }
        if !(self.noise_sigma >= 0.0) || !self.class_separation.is_finite() {
            return bad("noise and separation must be finite and non-negative".into());
        }
        if self.class_sizes().contains(&0) {
            return bad("imbalance factor leaves a class empty".into());
        }
        Ok(())
    }

    /// `N_c = round(N_1 · IF^{-c/(C-1)})` for `c = 0, …, C-1`.
    pub fn class_sizes(&self) -> Vec<usize> {
        let c_max = (self.num_classes - 1).max(1) as f64;
        (0..self.num_classes)
            .map(|c| {
                let n = self.max_class_size as f64 * self.imbalance_factor.powf(-(c as f64) / c_max);
                n.round() as usize
            })
            .collect()
    }

    /// Synthetic shot thresholds: many-shot above half of `N_1`, few-shot
    /// below a tenth of it.
    pub fn shot_thresholds(&self) -> ShotThresholds {
        ShotThresholds {
            many_min: self.max_class_size as f64 * 0.5,
            few_max: self.max_class_size as f64 * 0.1,
        }
    }
}

/// Generate a long-tailed training set and a balanced test set.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<(ClassManifest, ClassManifest)> {
    config.validate()?;
    let mut rng = rng_from_seed(derive_seed(config.seed, "synthetic-data"));
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let means: Vec<Vec<f64>> = (0..config.num_classes)
        .map(|_| {
            let v: Vec<f64> = (0..config.dim).map(|_| unit.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            v.iter().map(|x| x / norm * config.class_separation).collect()
        })
        .collect();
    let mut draw = |prefix: &str, class: usize, idx: usize| {
        let f: Vec<f64> = means[class]
            .iter()
            .map(|m| m + config.noise_sigma * unit.sample(&mut rng))
            .collect();
        ItemRecord {
            id: format!("{prefix}{class}_{idx}"),
            class_label: class,
            probability: None,
            features: Some(f),
        }
    };
    let mut train = Vec::new();
    for (c, &n) in config.class_sizes().iter().enumerate() {
        train.extend((0..n).map(|i| draw("tr", c, i)));
    }
    let mut test = Vec::new();
    for c in 0..config.num_classes {
        test.extend((0..config.test_per_class).map(|i| draw("te", c, i)));
    }
    Ok((ClassManifest::from_items(train)?, ClassManifest::from_items(test)?))
}

/// Multinomial logistic regression.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyClassifier {
    /// `C × d`.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

/// Feature matrix (`n × d`) and labels of a manifest.
pub fn design_matrix(manifest: &ClassManifest) -> Result<(DMatrix<f64>, Vec<usize>)> {
    let d = manifest
        .feature_dim()
        .ok_or_else(|| Error::InvalidArgument("manifest items lack uniform features".into()))?;
    let n = manifest.len();
    let x = DMatrix::from_fn(n, d, |i, j| manifest.items()[i].features.as_ref().expect("checked")[j]);
    let y = manifest.items().iter().map(|it| it.class_label).collect();
    Ok((x, y))
}

fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    row.iter_mut().for_each(|v| *v /= sum);
}

impl ToyClassifier {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        Self {
            weights: DMatrix::zeros(classes, dim),
            bias: DVector::zeros(classes),
        }
    }

    /// Small Gaussian initialization.
    pub fn random(classes: usize, dim: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(derive_seed(seed, "softmax-init"));
        let normal = Normal::new(0.0, 0.01).expect("valid sigma");
        Self {
            weights: DMatrix::from_fn(classes, dim, |_, _| normal.sample(&mut rng)),
            bias: DVector::zeros(classes),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn dim(&self) -> usize {
        self.weights.ncols()
    }

    /// Row-wise class probabilities, `n × C`.
    pub fn predict_proba(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.ncols(),
            });
        }
        let mut logits = x * self.weights.transpose();
        for mut row in logits.row_iter_mut() {
            row += self.bias.transpose();
            let mut buf: Vec<f64> = row.iter().copied().collect();
            softmax_in_place(&mut buf);
            row.iter_mut().zip(buf).for_each(|(r, b)| *r = b);
        }
        Ok(logits)
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<usize>> {
        let p = self.predict_proba(x)?;
        Ok(p.row_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold(
                        (0, f64::NEG_INFINITY),
                        |best, (i, &v)| if v > best.1 { (i, v) } else { best },
                    )
                    .0
            })
            .collect())
    }

    /// Mean cross-entropy and its gradient `(∂W, ∂b)`.
    pub fn loss_and_gradient(&self, x: &DMatrix<f64>, y: &[usize]) -> Result<(f64, DMatrix<f64>, DVector<f64>)> {
        let mut p = self.predict_proba(x)?;
        let n = x.nrows() as f64;
        let mut loss = 0.0;
        for (i, &label) in y.iter().enumerate() {
            if label >= self.num_classes() {
                return Err(Error::IndexOutOfRange {
                    index: label,
                    len: self.num_classes(),
                });
            }
            loss -= p[(i, label)].max(f64::MIN_POSITIVE).ln();
            p[(i, label)] -= 1.0;
        }
        p /= n;
        let grad_w = p.transpose() * x;
        let grad_b = DVector::from_iterator(self.num_classes(), p.column_iter().map(|c| c.sum()));
        Ok((loss / n, grad_w, grad_b))
    }

    pub fn loss(&self, x: &DMatrix<f64>, y: &[usize]) -> Result<f64> {
        Ok(self.loss_and_gradient(x, y)?.0)
    }

    /// Full-batch gradient descent; returns the loss before each epoch.
    pub fn fit(&mut self, x: &DMatrix<f64>, y: &[usize], epochs: usize, lr: f64) -> Result<Vec<f64>> {
        let mut trace = Vec::with_capacity(epochs);
        for epoch in 0..epochs {
            let (loss, gw, gb) = self.loss_and_gradient(x, y)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss(epoch));
            }
            trace.push(loss);
            self.weights -= gw * lr;
            self.bias -= gb * lr;
        }
        Ok(trace)
    }
}

/// Train a fresh classifier on a featured manifest.
pub fn train_softmax(data: &ClassManifest, epochs: usize, lr: f64, seed: u64) -> Result<ToyClassifier> {
    let (x, y) = design_matrix(data)?;
    if data.class_counts().len() < 2 {
        return Err(Error::DegenerateConfig("need at least two classes".into()));
    }
    let mut model = ToyClassifier::random(data.num_classes(), x.ncols(), seed);
    model.fit(&x, &y, epochs, lr)?;
    Ok(model)
}

/// Set each item's probability to the model's probability of its true label.
pub fn annotate_probabilities(model: &ToyClassifier, manifest: &ClassManifest) -> Result<ClassManifest> {
    let (x, y) = design_matrix(manifest)?;
    let p = model.predict_proba(&x)?;
    let probs: Vec<f64> = y
        .iter()
        .enumerate()
        .map(|(i, &c)| p.get((i, c)).copied().unwrap_or(0.0))
        .collect();
    manifest.with_probabilities(&probs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotThresholds {
    /// Classes with strictly more training items are many-shot.
    pub many_min: f64,
    /// Classes with strictly fewer training items are few-shot.
    pub few_max: f64,
}

impl ShotThresholds {
    /// The thresholds used for CIFAR-style benchmarks (500 and 200 images).
    pub const CIFAR: ShotThresholds = ShotThresholds {
        many_min: 500.0,
        few_max: 200.0,
    };
}

/// Pooled accuracies per shot bucket; `None` marks an empty bucket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotMetrics {
    pub many: Option<f64>,
    pub medium: Option<f64>,
    pub few: Option<f64>,
    pub overall: f64,
}

pub fn shot_metrics(
    per_class_correct: &[usize],
    per_class_total: &[usize],
    class_train_counts: &[usize],
    thresholds: ShotThresholds,
) -> Result<ShotMetrics> {
    let c = per_class_total.len();
    if per_class_correct.len() != c || class_train_counts.len() != c {
        return Err(Error::DimensionMismatch {
            expected: c,
            got: per_class_correct.len().min(class_train_counts.len()),
        });
    }
    let mut buckets = [(0usize, 0usize); 3];
    for i in 0..c {
        let n = class_train_counts[i] as f64;
        let b = if n > thresholds.many_min {
            0
        } else if n < thresholds.few_max {
            2
        } else {
            1
        };
        buckets[b].0 += per_class_correct[i];
        buckets[b].1 += per_class_total[i];
    }
    let acc = |(hit, tot): (usize, usize)| (tot > 0).then(|| hit as f64 / tot as f64);
    let hits: usize = per_class_correct.iter().sum();
    let total: usize = per_class_total.iter().sum();
    Ok(ShotMetrics {
        many: acc(buckets[0]),
        medium: acc(buckets[1]),
        few: acc(buckets[2]),
        overall: if total > 0 { hits as f64 / total as f64 } else { 0.0 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "ip-dpp")]
    IpDpp,
    #[serde(rename = "random-undersample")]
    RandomUndersample,
    #[serde(rename = "full-data")]
    FullData,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::IpDpp, Method::RandomUndersample, Method::FullData];

    pub fn name(self) -> &'static str {
        match self {
            Method::IpDpp => "ip-dpp",
            Method::RandomUndersample => "random-undersample",
            Method::FullData => "full-data",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{s}`")))
    }
}

/// Epoch budget and step size for the two stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub stage1_epochs: usize,
    pub stage2_epochs: usize,
    /// Re-draw the balanced subset every this many stage-two epochs.
    pub resample_every: usize,
    pub lr: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            stage1_epochs: 200,
            stage2_epochs: 60,
            resample_every: 10,
            lr: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRun {
    pub seed: u64,
    pub method: Method,
    pub metrics: ShotMetrics,
    pub per_class_correct: Vec<usize>,
    pub per_class_total: Vec<usize>,
    /// Class sizes of the last training subset.
    pub subset_sizes: Vec<usize>,
}

impl MethodRun {
    pub fn evaluated(&self) -> usize {
        self.per_class_total.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub data: SyntheticConfig,
    pub k: usize,
    pub variant: crate::data_model::SamplerVariant,
    pub schedule: Schedule,
    pub thresholds: ShotThresholds,
    pub train_class_sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub runs: Vec<MethodRun>,
}

impl ExperimentReport {
    pub fn run(&self, seed: u64, method: Method) -> Option<&MethodRun> {
        self.runs.iter().find(|r| r.seed == seed && r.method == method)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// CSV with header `seed,method,many,medium,few,overall`; empty buckets
    /// are empty cells.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        writeln!(w, "seed,method,many,medium,few,overall")?;
        for r in &self.runs {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.seed,
                r.method,
                cell(r.metrics.many),
                cell(r.metrics.medium),
                cell(r.metrics.few),
                r.metrics.overall
            )?;
        }
        Ok(())
    }

    /// Mean of each metric per method over seeds (absent buckets skipped).
    pub fn summary(&self) -> BTreeMap<Method, ShotMetrics> {
        let mut out = BTreeMap::new();
        for m in Method::ALL {
            let runs: Vec<&MethodRun> = self.runs.iter().filter(|r| r.method == m).collect();
            if runs.is_empty() {
                continue;
            }
            let mean = |f: &dyn Fn(&ShotMetrics) -> Option<f64>| {
                let v: Vec<f64> = runs.iter().filter_map(|r| f(&r.metrics)).collect();
                (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
            };
            out.insert(
                m,
                ShotMetrics {
                    many: mean(&|s| s.many),
                    medium: mean(&|s| s.medium),
                    few: mean(&|s| s.few),
                    overall: mean(&|s| Some(s.overall)).unwrap_or(0.0),
                },
            );
        }
        out
    }
}

fn random_undersample(train: &ClassManifest, k: usize, seed: u64) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for &c in train.class_counts().keys() {
        let members = train.class_indices(c);
        if members.len() <= k {
            out.extend(members);
            continue;
        }
        let mut rng = rng_from_seed(derive_seed_tagged(seed, "random-undersample", c as u64));
        out.extend(
            sample_indices(&mut rng, members.len(), k)
                .into_iter()
                .map(|i| members[i]),
        );
    }
    out
}

fn rows(x: &DMatrix<f64>, y: &[usize], idx: &BTreeSet<usize>) -> (DMatrix<f64>, Vec<usize>) {
    let idx: Vec<usize> = idx.iter().copied().collect();
    (x.select_rows(idx.iter()), idx.iter().map(|&i| y[i]).collect())
}

fn evaluate(
    model: &ToyClassifier,
    test_x: &DMatrix<f64>,
    test_y: &[usize],
    classes: usize,
    train_sizes: &[usize],
    thresholds: ShotThresholds,
) -> Result<(ShotMetrics, Vec<usize>, Vec<usize>)> {
    let pred = model.predict(test_x)?;
    let mut correct = vec![0usize; classes];
    let mut total = vec![0usize; classes];
    for (&p, &t) in pred.iter().zip(test_y) {
        total[t] += 1;
        if p == t {
            correct[t] += 1;
        }
    }
    let m = shot_metrics(&correct, &total, train_sizes, thresholds)?;
    Ok((m, correct, total))
}

/// Run every requested method on one synthetic dataset (seeded by
/// `data.seed`).
pub fn run_two_stage(
    data: &SyntheticConfig,
    sampler: &SamplerConfig,
    schedule: &Schedule,
    methods: &BTreeSet<Method>,
) -> Result<Vec<MethodRun>> {
    if schedule.resample_every == 0 {
        return Err(Error::DegenerateConfig("resample interval must be positive".into()));
    }
    let (train, test) = generate_synthetic(data)?;
    let (x, y) = design_matrix(&train)?;
    let (tx, ty) = design_matrix(&test)?;
    let classes = data.num_classes;
    let sizes = data.class_sizes();
    let thresholds = data.shot_thresholds();
    let seed = data.seed;

    let mut base = ToyClassifier::random(classes, data.dim, seed);
    base.fit(&x, &y, schedule.stage1_epochs, schedule.lr)?;

    let mut runs = Vec::new();
    for &method in methods {
        let mut model = base.clone();
        let mut last_subset: BTreeSet<usize> = (0..train.len()).collect();
        let mut epoch = 0;
        let mut round = 0u64;
        while epoch < schedule.stage2_epochs {
            let block = schedule.resample_every.min(schedule.stage2_epochs - epoch);
            let round_seed = derive_seed_tagged(seed, "resample-round", round);
            let subset = match method {
                Method::FullData => (0..train.len()).collect(),
                Method::RandomUndersample => random_undersample(&train, sampler.k, round_seed),
                Method::IpDpp => {
                    let scored = annotate_probabilities(&model, &train)?;
                    let config = SamplerConfig {
                        seed: round_seed,
                        ..*sampler
                    };
                    merged_indices(&balanced_resample(&scored, &config)?)
                }
            };
            let (sx, sy) = rows(&x, &y, &subset);
            model.fit(&sx, &sy, block, schedule.lr)?;
            last_subset = subset;
            epoch += block;
            round += 1;
        }
        let (metrics, correct, total) = evaluate(&model, &tx, &ty, classes, &sizes, thresholds)?;
        let mut subset_sizes = vec![0usize; classes];
        for &i in &last_subset {
            subset_sizes[y[i]] += 1;
        }
        runs.push(MethodRun {
            seed,
            method,
            metrics,
            per_class_correct: correct,
            per_class_total: total,
            subset_sizes,
        });
    }
    Ok(runs)
}

/// Repeat [`run_two_stage`] over several seeds (each seed replaces
/// `data.seed`; the sampler seed is derived from it).
pub fn run_experiment(
    data: &SyntheticConfig,
    sampler: &SamplerConfig,
    schedule: &Schedule,
    methods: &BTreeSet<Method>,
    seeds: &[u64],
) -> Result<ExperimentReport> {
    data.validate()?;
    let results = crate::par::map(seeds.to_vec(), |s| {
        let d = SyntheticConfig {
            seed: s,
            ..data.clone()
        };
        let sc = SamplerConfig {
            seed: derive_seed(s, "experiment-sampler"),
            ..*sampler
        };
        run_two_stage(&d, &sc, schedule, methods)
    });
    let mut runs = Vec::new();
    for r in results {
        runs.extend(r?);
    }
    Ok(ExperimentReport {
        data: data.clone(),
        k: sampler.k,
        variant: sampler.variant,
        schedule: *schedule,
        thresholds: data.shot_thresholds(),
        train_class_sizes: data.class_sizes(),
        seeds: seeds.to_vec(),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_size_profile() {
        let cfg = SyntheticConfig::default();
        let sizes = cfg.class_sizes();
        assert_eq!(sizes.len(), 10);
        assert_eq!(sizes[0], 500);
        assert_eq!(sizes[9], 5);
        // 500 · 100^{-c/9}
        let want: Vec<usize> = (0..10)
            .map(|c| (500.0 * 100f64.powf(-(c as f64) / 9.0)).round() as usize)
            .collect();
        assert_eq!(sizes, want);
        assert!(sizes.windows(2).all(|w| w[0] >= w[1]));

        let flat = SyntheticConfig {
            imbalance_factor: 1.0,
            ..cfg
        };
        assert!(flat.class_sizes().iter().all(|&n| n == 500));
    }

    #[test]
    fn degenerate_configs() {
        let cfg = SyntheticConfig {
            num_classes: 2,
            max_class_size: 1,
            ..Default::default()
        };
        assert!(matches!(generate_synthetic(&cfg), Err(Error::DegenerateConfig(_))));
        let cfg = SyntheticConfig {
            imbalance_factor: 0.5,
            ..Default::default()
        };
        assert!(generate_synthetic(&cfg).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SyntheticConfig {
            max_class_size: 50,
            ..Default::default()
        };
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.1.class_counts().values().all(|&n| n == cfg.test_per_class));
    }

    #[test]
    fn shot_metrics_hand_dataset() {
        let m = shot_metrics(&[9, 5], &[10, 10], &[600, 10], ShotThresholds::CIFAR).unwrap();
        assert_eq!(m.many, Some(0.9));
        assert_eq!(m.medium, None);
        assert_eq!(m.few, Some(0.5));
        assert!((m.overall - 0.7).abs() < 1e-15);

        let m = shot_metrics(&[3, 4], &[5, 5], &[900, 800], ShotThresholds::CIFAR).unwrap();
        assert_eq!((m.medium, m.few), (None, None));
        assert_eq!(m.many, Some(m.overall));
    }

    #[test]
    fn untrained_zero_model_is_uniform() {
        let (train, _) = generate_synthetic(&SyntheticConfig {
            max_class_size: 20,
            imbalance_factor: 4.0,
            ..Default::default()
        })
        .unwrap();
        let model = ToyClassifier::zeros(10, SyntheticConfig::default().dim);
        let scored = annotate_probabilities(&model, &train).unwrap();
        assert!(scored.items().iter().all(|it| it.probability == Some(0.1)));
    }

    #[test]
    fn annotate_checks_dimension() {
        let (train, _) = generate_synthetic(&SyntheticConfig {
            max_class_size: 20,
            imbalance_factor: 4.0,
            ..Default::default()
        })
        .unwrap();
        assert!(matches!(
            annotate_probabilities(&ToyClassifier::zeros(10, 3), &train),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
