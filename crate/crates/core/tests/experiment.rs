use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};

use tailsampler::experiment::{
    annotate_probabilities, design_matrix, generate_synthetic, run_experiment, run_two_stage, shot_metrics,
    train_softmax, Method, Schedule, ShotThresholds, SyntheticConfig, ToyClassifier,
};
use tailsampler::rng::rng_from_seed;
use tailsampler::verify::softmax_gradient_error;
use tailsampler::{ClassManifest, ItemRecord, SamplerConfig};

fn small_config() -> SyntheticConfig {
    SyntheticConfig {
        num_classes: 5,
        max_class_size: 120,
        imbalance_factor: 20.0,
        test_per_class: 40,
        ..SyntheticConfig::default()
    }
}

fn all_methods() -> BTreeSet<Method> {
    Method::ALL.into_iter().collect()
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let data = small_config();
    let sampler = SamplerConfig::new(30, 0);
    let a = run_experiment(&data, &sampler, &Schedule::default(), &all_methods(), &[1, 2]).unwrap();
    let b = run_experiment(&data, &sampler, &Schedule::default(), &all_methods(), &[1, 2]).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    a.write_csv(&mut ca).unwrap();
    b.write_csv(&mut cb).unwrap();
    assert_eq!(ca, cb);
    assert_eq!(a.runs.len(), 6);
}

#[test]
fn every_method_evaluates_the_whole_test_set() {
    let data = small_config();
    let runs = run_two_stage(&data, &SamplerConfig::new(30, 3), &Schedule::default(), &all_methods()).unwrap();
    for run in &runs {
        assert_eq!(run.evaluated(), data.num_classes * data.test_per_class);
        let correct: usize = run.per_class_correct.iter().sum();
        assert!((run.metrics.overall - correct as f64 / run.evaluated() as f64).abs() <= 1e-12);
    }
}

#[test]
fn undersampling_methods_share_subset_sizes() {
    let data = small_config();
    let k = 30;
    let runs = run_two_stage(&data, &SamplerConfig::new(k, 5), &Schedule::default(), &all_methods()).unwrap();
    let expected: Vec<usize> = data.class_sizes().iter().map(|&n| n.min(k)).collect();
    for run in &runs {
        match run.method {
            Method::FullData => assert_eq!(run.subset_sizes, data.class_sizes()),
            _ => assert_eq!(run.subset_sizes, expected, "{}", run.method),
        }
    }
}

#[test]
fn balanced_data_leaves_methods_tied() {
    let data = SyntheticConfig {
        imbalance_factor: 1.0,
        max_class_size: 60,
        ..small_config()
    };
    let k = 10 * data.class_sizes().last().unwrap();
    let runs = run_two_stage(&data, &SamplerConfig::new(k, 0), &Schedule::default(), &all_methods()).unwrap();
    let overall: Vec<f64> = runs.iter().map(|r| r.metrics.overall).collect();
    let spread = overall.iter().cloned().fold(f64::MIN, f64::max) - overall.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread <= 0.02, "{overall:?}");
}

#[test]
fn full_data_favours_head_classes() {
    let data = SyntheticConfig::default();
    let k = 10 * data.class_sizes().last().unwrap();
    let report = run_experiment(
        &data,
        &SamplerConfig::new(k, 0),
        &Schedule::default(),
        &all_methods(),
        &[0, 1, 2],
    )
    .unwrap();
    let summary = report.summary();
    let full = summary[&Method::FullData];
    assert!(full.many.unwrap() > full.few.unwrap());
    for m in [Method::IpDpp, Method::RandomUndersample] {
        assert!(summary[&m].few.unwrap() > full.few.unwrap());
        assert!(summary[&m].many.unwrap() < full.many.unwrap());
    }
}

fn blobs(separation: f64, per_class: usize, seed: u64) -> ClassManifest {
    let mut rng = rng_from_seed(seed);
    let noise = Normal::new(0.0, 0.5).unwrap();
    let mut items = Vec::new();
    for c in 0..2 {
        let centre = if c == 0 { -separation } else { separation };
        for i in 0..per_class {
            let f = vec![centre + noise.sample(&mut rng), noise.sample(&mut rng)];
            items.push(ItemRecord::new(format!("{c}-{i}"), c, 0.5).with_features(f));
        }
    }
    ClassManifest::from_items(items).unwrap()
}

#[test]
fn separable_blobs_are_learned() {
    let data = blobs(3.0, 100, 1);
    let model = train_softmax(&data, 200, 0.1, 7).unwrap();
    let (x, y) = design_matrix(&data).unwrap();
    let predicted = model.predict(&x).unwrap();
    let acc = predicted.iter().zip(&y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64;
    assert!(acc >= 0.99, "{acc}");
}

#[test]
fn training_loss_never_rises_over_twenty_epochs() {
    let (train, _) = generate_synthetic(&small_config()).unwrap();
    let (x, y) = design_matrix(&train).unwrap();
    let mut model = ToyClassifier::random(5, 8, 3);
    let trace = model.fit(&x, &y, 200, 0.1).unwrap();
    for w in trace.windows(21) {
        assert!(w[20] <= w[0] + 1e-12);
    }
}

#[test]
fn softmax_gradient_matches_finite_differences() {
    let mut model = ToyClassifier::random(3, 4, 11);
    model.weights = DMatrix::from_fn(3, 4, |i, j| ((i * 4 + j) as f64 * 0.37).sin());
    let x = DMatrix::from_fn(10, 4, |i, j| ((i + 2 * j) as f64 * 0.61).cos());
    let y: Vec<usize> = (0..10).map(|i| i % 3).collect();
    assert!(softmax_gradient_error(&model, &x, &y, 1e-5) <= 1e-5);
}

#[test]
fn annotated_probabilities_are_clipped_and_sharp_near_means() {
    let data = blobs(6.0, 20, 4);
    let model = train_softmax(&data, 200, 0.1, 1).unwrap();
    let scored = annotate_probabilities(&model, &data).unwrap();
    for item in scored.items() {
        let p = item.probability.unwrap();
        assert!((1e-12..=1.0).contains(&p));
        assert!(p > 0.9);
    }
}

#[test]
fn single_bucket_collapses_to_overall() {
    let m = shot_metrics(
        &[9, 8],
        &[10, 10],
        &[600, 700],
        ShotThresholds {
            many_min: 500.0,
            few_max: 200.0,
        },
    )
    .unwrap();
    assert_eq!(m.medium, None);
    assert_eq!(m.few, None);
    assert_eq!(m.many, Some(m.overall));
}
