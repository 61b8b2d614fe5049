//! Randomized property suites behind `tailsampler verify`.
//!
//! Each check draws its instances from seeds derived from one root seed, so a
//! failing instance can be replayed from the seed printed next to it.

use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng as _;
use serde::Serialize;

use crate::bns::{bns_gradient, bns_loss, dot, log_sigmoid, ns_loss, BnsBatch, BnsConfig};
use crate::data_model::SamplerVariant;
use crate::dpp::{enumerate_all, marginal_kernel, monte_carlo_marginals};
use crate::error::{Error, Result};
use crate::experiment::ToyClassifier;
use crate::infotheory::{joint_entropy, mutual_information, nce_bound_check, variation_of_information, DiscreteJoint};
use crate::rng::{derive_seed_tagged, rng_from_seed, Rng};
use crate::stochastic_matrix::{build_stochastic_matrix, spectral_decompose, validate_lemmas, StochasticMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Suite {
    Matrix,
    Dpp,
    Bns,
    Info,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matrix" => Ok(Suite::Matrix),
            "dpp" => Ok(Suite::Dpp),
            "bns" => Ok(Suite::Bns),
            "info" => Ok(Suite::Info),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidArgument(format!("unknown suite `{other}`"))),
        }
    }
}

/// Deliberate corruption, used to exercise the failure path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Replace the first matrix of the matrix suite with a non-PSD one.
    CorruptMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub trials: usize,
    pub seed: u64,
    /// Draws per instance for the Monte-Carlo marginal check.
    pub mc_draws: usize,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            trials: 100,
            seed: 42,
            mc_draws: 50_000,
            fault: None,
        }
    }
}

/// Outcome of one named property over all its instances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub suite: &'static str,
    pub check: &'static str,
    pub trials: usize,
    pub failures: usize,
    /// Worst observed value of the checked quantity (error, margin, …).
    pub worst: f64,
    /// Seed and parameters of the first failing instance.
    pub replay: Option<String>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

struct Tally {
    suite: &'static str,
    check: &'static str,
    trials: usize,
    failures: usize,
    worst: f64,
    replay: Option<String>,
}

impl Tally {
    fn new(suite: &'static str, check: &'static str) -> Self {
        Self {
            suite,
            check,
            trials: 0,
            failures: 0,
            worst: 0.0,
            replay: None,
        }
    }

    fn record(&mut self, ok: bool, value: f64, replay: impl FnOnce() -> String) {
        self.trials += 1;
        if value.is_nan() || value > self.worst {
            self.worst = value;
        }
        if !ok {
            self.failures += 1;
            if self.replay.is_none() {
                self.replay = Some(replay());
            }
        }
    }

    fn finish(self) -> CheckOutcome {
        CheckOutcome {
            suite: self.suite,
            check: self.check,
            trials: self.trials,
            failures: self.failures,
            worst: self.worst,
            replay: self.replay,
        }
    }
}

fn instance_rng(root: u64, purpose: &str, t: usize) -> (u64, Rng) {
    let seed = derive_seed_tagged(root, purpose, t as u64);
    (seed, rng_from_seed(seed))
}

fn uniform_probs(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// A symmetric, row-stochastic but indefinite matrix.
fn corrupted_matrix(n: usize) -> StochasticMatrix {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, (i + 1) % n)] += 0.5;
        m[((i + 1) % n, i)] += 0.5;
    }
    StochasticMatrix::from_matrix_unchecked(m)
}

pub fn matrix_suite(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    let mut lemmas = Tally::new("matrix", "psd-and-unit-eigenvalues");
    let mut recon = Tally::new("matrix", "spectral-reconstruction");
    let mut trace = Tally::new("matrix", "trace-identity");
    for t in 0..opts.trials {
        let (seed, mut rng) = instance_rng(opts.seed, "verify-matrix", t);
        let n = rng.random_range(2..=64);
        let s = if t == 0 && opts.fault == Some(Fault::CorruptMatrix) {
            corrupted_matrix(n.max(3) | 1)
        } else {
            build_stochastic_matrix(&uniform_probs(&mut rng, n)).expect("valid probabilities")
        };
        let n = s.n();
        let report = validate_lemmas(&s);
        let replay = || format!("seed={seed} n={n}");
        lemmas.record(report.all_ok(), -report.min_eig.min(0.0), replay);
        match spectral_decompose(&s, crate::stochastic_matrix::DEFAULT_CLAMP_TOL) {
            Ok(d) => {
                let err = (d.reconstruct() - s.entries()).abs().max();
                recon.record(err <= 1e-8, err, replay);
                let tr = (s.entries().trace() - d.eigenvalues.iter().sum::<f64>()).abs();
                trace.record(tr <= 1e-10, tr, replay);
            }
            Err(_) => {
                recon.record(false, f64::INFINITY, replay);
                trace.record(false, f64::INFINITY, replay);
            }
        }
    }
    vec![lemmas.finish(), recon.finish(), trace.finish()]
}

pub fn dpp_suite(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    let mut norm = Tally::new("dpp", "normalization-identity");
    let mut bounded = Tally::new("dpp", "bounded-probability");
    let mut marg = Tally::new("dpp", "kernel-vs-enumeration-marginals");
    for t in 0..opts.trials {
        let (seed, mut rng) = instance_rng(opts.seed, "verify-dpp", t);
        let n = rng.random_range(2..=12);
        let s = build_stochastic_matrix(&uniform_probs(&mut rng, n)).expect("valid probabilities");
        let replay = || format!("seed={seed} n={n}");
        let table = match enumerate_all(&s) {
            Ok(t) => t,
            Err(_) => {
                norm.record(false, f64::INFINITY, replay);
                continue;
            }
        };
        let rel = table.normalization_error();
        norm.record(rel <= 1e-8, rel, replay);
        let worst = table
            .probabilities()
            .map(|(_, p)| (-p).max(p - 1.0).max(0.0))
            .fold(0.0, f64::max);
        bounded.record(worst <= 1e-12, worst, replay);
        let k = marginal_kernel(&s).map(|k| k.inclusion_probabilities());
        let err = match k {
            Ok(k) => k
                .iter()
                .zip(table.marginals())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
            Err(_) => f64::INFINITY,
        };
        marg.record(err <= 1e-8, err, replay);
    }

    let mut fidelity = Tally::new("dpp", "sampler-marginal-fidelity");
    let mut size = Tally::new("dpp", "sampler-cardinality-law");
    let instances = (opts.trials / 50).clamp(1, 4);
    for t in 0..instances {
        let (seed, mut rng) = instance_rng(opts.seed, "verify-dpp-mc", t);
        let n = rng.random_range(4..=16);
        let s = build_stochastic_matrix(&uniform_probs(&mut rng, n)).expect("valid probabilities");
        let replay = || format!("seed={seed} n={n} draws={}", opts.mc_draws);
        match monte_carlo_marginals(&s, opts.mc_draws, seed, SamplerVariant::Probabilistic) {
            Ok(rep) => {
                let frac = rep.fraction_within(3.0);
                fidelity.record(frac >= 0.95, 1.0 - frac, replay);
                let z = rep.size_z().abs();
                size.record(z <= 3.0, z, replay);
            }
            Err(_) => fidelity.record(false, f64::INFINITY, replay),
        }
    }
    vec![
        norm.finish(),
        bounded.finish(),
        marg.finish(),
        fidelity.finish(),
        size.finish(),
    ]
}

fn random_vec(rng: &mut Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// A random batch with the given shape.
pub fn random_batch(rng: &mut Rng, d: usize, m: usize, n: usize) -> BnsBatch {
    BnsBatch {
        anchor: random_vec(rng, d),
        positive: random_vec(rng, d),
        extra_positives: (0..m).map(|_| random_vec(rng, d)).collect(),
        negatives: (0..n).map(|_| random_vec(rng, d)).collect(),
    }
}

/// Largest componentwise relative error between the analytic gradient and
/// central differences with step `h`. Components whose magnitudes are both
/// below `floor` are compared absolutely.
pub fn bns_gradient_error(batch: &BnsBatch, config: &BnsConfig, h: f64) -> f64 {
    let g = bns_gradient(batch, config).expect("shapes match");
    let analytic: Vec<&Vec<f64>> = std::iter::once(&g.anchor)
        .chain(std::iter::once(&g.positive))
        .chain(g.extra_positives.iter())
        .chain(g.negatives.iter())
        .collect();
    let mut worst = 0.0f64;
    for (v, grad) in analytic.iter().enumerate() {
        for (c, &g_vc) in grad.iter().enumerate().take(batch.dim()) {
            let mut plus = batch.clone();
            let mut minus = batch.clone();
            *vector_mut(&mut plus, v).get_mut(c).unwrap() += h;
            *vector_mut(&mut minus, v).get_mut(c).unwrap() -= h;
            let fd = (bns_loss(&plus, config).unwrap() - bns_loss(&minus, config).unwrap()) / (2.0 * h);
            worst = worst.max(relative_error(g_vc, fd));
        }
    }
    worst
}

fn vector_mut(batch: &mut BnsBatch, v: usize) -> &mut Vec<f64> {
    let m = batch.extra_positives.len();
    match v {
        0 => &mut batch.anchor,
        1 => &mut batch.positive,
        v if v < 2 + m => &mut batch.extra_positives[v - 2],
        v => &mut batch.negatives[v - 2 - m],
    }
}

/// `|a - b| / max(|a|, |b|, 1e-3)`; the floor keeps near-zero components from
/// dominating through round-off in the difference quotient.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

/// Same comparison for the softmax cross-entropy gradient.
pub fn softmax_gradient_error(model: &ToyClassifier, x: &DMatrix<f64>, y: &[usize], h: f64) -> f64 {
    let (_, gw, gb) = model.loss_and_gradient(x, y).expect("shapes match");
    let mut worst = 0.0f64;
    for i in 0..gw.nrows() {
        for j in 0..gw.ncols() {
            let mut p = model.clone();
            let mut m = model.clone();
            p.weights[(i, j)] += h;
            m.weights[(i, j)] -= h;
            let fd = (p.loss(x, y).unwrap() - m.loss(x, y).unwrap()) / (2.0 * h);
            worst = worst.max(relative_error(gw[(i, j)], fd));
        }
        let mut p = model.clone();
        let mut m = model.clone();
        p.bias[i] += h;
        m.bias[i] -= h;
        let fd = (p.loss(x, y).unwrap() - m.loss(x, y).unwrap()) / (2.0 * h);
        worst = worst.max(relative_error(gb[i], fd));
    }
    worst
}

/// Instance-level plus class-level sums, computed term by term.
pub fn decomposed_bns_sum(batch: &BnsBatch, tau: f64) -> f64 {
    let term = |q: &[f64]| {
        let mut s = log_sigmoid(dot(q, &batch.positive) / tau);
        for v in &batch.negatives {
            s += log_sigmoid(-dot(q, v) / tau);
        }
        s
    };
    let instance = term(&batch.anchor);
    let class: f64 = batch.extra_positives.iter().map(|q| term(q)).sum();
    -(instance + class)
}

pub fn bns_suite(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    let mut reduction = Tally::new("bns", "m0-reduces-to-ns");
    let mut split = Tally::new("bns", "instance-class-decomposition");
    let mut grad = Tally::new("bns", "bns-gradient-finite-difference");
    let mut soft = Tally::new("bns", "softmax-gradient-finite-difference");
    let dims = [2usize, 8, 32];
    let ns = [1usize, 5, 20];
    let ms = [0usize, 3, 6];
    let taus = [0.1, 0.3, 1.0];
    for t in 0..opts.trials {
        let (seed, mut rng) = instance_rng(opts.seed, "verify-bns", t);
        let d = rng.random_range(1..=16);
        let n = rng.random_range(1..=10);
        let tau = rng.random_range(0.05..2.0);
        let replay = || format!("seed={seed} d={d} n={n} tau={tau}");
        let b0 = random_batch(&mut rng, d, 0, n);
        let c0 = BnsConfig { tau, m: 0, n };
        let diff = (bns_loss(&b0, &c0).unwrap() - ns_loss(&b0, &c0).unwrap()).abs();
        reduction.record(diff <= 1e-15, diff, replay);

        let m = rng.random_range(1..=6);
        let bm = random_batch(&mut rng, d, m, n);
        let cm = BnsConfig { tau, m, n };
        let scaled = bns_loss(&bm, &cm).unwrap() * (m + 1) as f64;
        let diff = (scaled - decomposed_bns_sum(&bm, tau)).abs();
        split.record(diff <= 1e-12, diff, || {
            format!("seed={seed} d={d} m={m} n={n} tau={tau}")
        });
    }
    let grad_trials = opts.trials.min(100);
    for t in 0..grad_trials {
        let (seed, mut rng) = instance_rng(opts.seed, "verify-bns-grad", t);
        let (d, n, m, tau) = (dims[t % 3], ns[(t / 3) % 3], ms[(t / 9) % 3], taus[(t / 27) % 3]);
        // keep scores in a range where the sigmoid is not saturated
        let mut b = random_batch(&mut rng, d, m, n);
        let s = (tau / d as f64).sqrt();
        for v in std::iter::once(&mut b.anchor)
            .chain(std::iter::once(&mut b.positive))
            .chain(b.extra_positives.iter_mut())
            .chain(b.negatives.iter_mut())
        {
            v.iter_mut().for_each(|x| *x *= s * 2.0);
        }
        let err = bns_gradient_error(&b, &BnsConfig { tau, m, n }, 1e-5);
        grad.record(err <= 1e-5, err, || format!("seed={seed} d={d} m={m} n={n} tau={tau}"));

        let (classes, dim, rows) = (
            rng.random_range(2..=5),
            rng.random_range(1..=6),
            rng.random_range(3..=20),
        );
        let mut model = ToyClassifier::random(classes, dim, seed);
        model.weights.iter_mut().for_each(|w| *w = rng.random_range(-1.0..1.0));
        model.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
        let x = DMatrix::from_fn(rows, dim, |_, _| rng.random_range(-1.0..1.0));
        let y: Vec<usize> = (0..rows).map(|_| rng.random_range(0..classes)).collect();
        let err = softmax_gradient_error(&model, &x, &y, 1e-5);
        soft.record(err <= 1e-5, err, || {
            format!("seed={seed} classes={classes} dim={dim} rows={rows}")
        });
    }
    vec![reduction.finish(), split.finish(), grad.finish(), soft.finish()]
}

/// A random joint table with every entry drawn from U(0, 1) and normalized;
/// some entries are zeroed to exercise the `0 ln 0` convention.
pub fn random_joint(rng: &mut Rng, rows: usize, cols: usize) -> DiscreteJoint {
    let mut m = DMatrix::from_fn(rows, cols, |_, _| {
        if rng.random::<f64>() < 0.15 {
            0.0
        } else {
            rng.random::<f64>()
        }
    });
    if m.sum() == 0.0 {
        m[(0, 0)] = 1.0;
    }
    let total = m.sum();
    m /= total;
    // push any residual rounding into the largest entry
    let resid = 1.0 - m.sum();
    let imax = m.iamax_full();
    m[imax] += resid;
    DiscreteJoint::new(m).expect("normalized")
}

pub fn info_suite(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    let mut bound = Tally::new("info", "nce-lower-bound");
    let mut symmetry = Tally::new("info", "mi-symmetry");
    let mut vi = Tally::new("info", "vi-joint-entropy-identity");
    let mut cap = Tally::new("info", "mi-below-marginal-entropy");
    for t in 0..opts.trials {
        let (seed, mut rng) = instance_rng(opts.seed, "verify-info", t);
        let (r, c) = (rng.random_range(2..=6), rng.random_range(2..=6));
        let n = rng.random_range(1..=10);
        let joint = random_joint(&mut rng, r, c);
        let replay = || format!("seed={seed} alphabet={r}x{c} n={n}");
        let rep = nce_bound_check(&joint, n).expect("n ≥ 1");
        bound.record(rep.holds, rep.rhs - rep.lhs, replay);
        let mi = mutual_information(&joint);
        let diff = (mi - mutual_information(&joint.transpose())).abs();
        symmetry.record(diff <= 1e-12, diff, replay);
        let diff = (variation_of_information(&joint) - (joint_entropy(&joint) - mi)).abs();
        vi.record(diff <= 1e-10, diff, replay);
        let hx = crate::infotheory::entropy(joint.row_marginal().as_slice()).unwrap_or(f64::NAN);
        let hy = crate::infotheory::entropy(joint.col_marginal().as_slice()).unwrap_or(f64::NAN);
        let excess = mi - hx.min(hy);
        cap.record(excess <= 1e-12, excess, replay);
    }
    vec![bound.finish(), symmetry.finish(), vi.finish(), cap.finish()]
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Vec<CheckOutcome> {
    match suite {
        Suite::Matrix => matrix_suite(opts),
        Suite::Dpp => dpp_suite(opts),
        Suite::Bns => bns_suite(opts),
        Suite::Info => info_suite(opts),
        Suite::All => [Suite::Matrix, Suite::Dpp, Suite::Bns, Suite::Info]
            .into_iter()
            .flat_map(|s| run_suite(s, opts))
            .collect(),
    }
}

/// Print the outcomes as a CSV table, failing instances underneath.
pub fn write_table(outcomes: &[CheckOutcome], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "suite,check,trials,failures,worst,status")?;
    for o in outcomes {
        writeln!(
            w,
            "{},{},{},{},{:e},{}",
            o.suite,
            o.check,
            o.trials,
            o.failures,
            o.worst,
            if o.passed() { "pass" } else { "FAIL" }
        )?;
    }
    for o in outcomes.iter().filter(|o| !o.passed()) {
        if let Some(r) = &o.replay {
            writeln!(w, "# replay {}/{}: {r}", o.suite, o.check)?;
        }
    }
    Ok(())
}
