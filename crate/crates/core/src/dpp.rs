//! L-ensemble DPP over a stochastic kernel: exact subset probabilities,
//! brute-force enumeration, the marginal kernel, and the two-phase spectral
//! sampler.
//!
//! The sampler first keeps each eigenvector `v_i` independently with
//! probability `λ_i / (λ_i + 1)`, then picks one item per kept eigenvector,
//! each time projecting the kept subspace away from the chosen coordinate.
//! How the item is picked is the only difference between the variants:
//! [`SamplerVariant::PaperArgmax`] takes the heaviest coordinate, while
//! [`SamplerVariant::Probabilistic`] draws it in proportion to its weight
//! (the exact DPP sampler).

use std::collections::BTreeSet;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::Serialize;

use crate::data_model::{DppSample, SamplerVariant};
use crate::error::{Error, Result};
use crate::linalg::{principal_submatrix, project_out_coordinate, symmetric_det};
use crate::rng::{derive_seed, rng_from_seed};
use crate::stochastic_matrix::{SpectralDecomposition, StochasticMatrix};

/// Largest ground set [`enumerate_all`] accepts.
pub const MAX_ENUMERATION: usize = 20;
/// Relative tolerance when comparing item weights for the argmax tie-break.
pub const ARGMAX_TIE_TOL: f64 = 1e-12;

/// `det(S + I)`.
pub fn partition_function(s: &StochasticMatrix) -> Result<f64> {
    let n = s.n();
    let z = symmetric_det(&(s.entries() + DMatrix::<f64>::identity(n, n)));
    if !(z > 0.0) {
        return Err(Error::SingularPartition(z));
    }
    Ok(z)
}

fn check_indices(subset: &[usize], n: usize) -> Result<()> {
    match subset.iter().find(|&&i| i >= n) {
        Some(&index) => Err(Error::IndexOutOfRange { index, len: n }),
        None => Ok(()),
    }
}

/// `det(S_Y)` with `det(S_∅) = 1`.
pub fn subset_det(s: &StochasticMatrix, subset: &[usize]) -> Result<f64> {
    check_indices(subset, s.n())?;
    Ok(symmetric_det(&principal_submatrix(s.entries(), subset)))
}

/// `P(Y) = det(S_Y) / det(S + I)`.
pub fn subset_probability(s: &StochasticMatrix, subset: &[usize]) -> Result<f64> {
    let det = subset_det(s, subset)?;
    Ok(det / partition_function(s)?)
}

/// Probabilities of every subset of a small ground set.
#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationTable {
    n: usize,
    /// Indexed by bitmask: bit `i` set means item `i` is in the subset.
    dets: Vec<f64>,
    partition: f64,
}

impl EnumerationTable {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `det(S + I)` computed directly.
    pub fn partition(&self) -> f64 {
        self.partition
    }

    /// `Σ_Y det(S_Y)` accumulated over the table.
    pub fn det_sum(&self) -> f64 {
        self.dets.iter().sum()
    }

    pub fn det(&self, mask: u32) -> f64 {
        self.dets[mask as usize]
    }

    pub fn probability(&self, mask: u32) -> f64 {
        self.dets[mask as usize] / self.partition
    }

    pub fn probabilities(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.dets
            .iter()
            .enumerate()
            .map(|(m, &d)| (m as u32, d / self.partition))
    }

    /// `|Σ det(S_Y) - det(S + I)| / det(S + I)`.
    pub fn normalization_error(&self) -> f64 {
        (self.det_sum() - self.partition).abs() / self.partition
    }

    /// Inclusion probability of each item, summed over the table.
    pub fn marginals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (mask, p) in self.probabilities() {
            for (i, o) in out.iter_mut().enumerate() {
                if mask & (1 << i) != 0 {
                    *o += p;
                }
            }
        }
        out
    }

    /// Distribution of `|Y|`.
    pub fn size_distribution(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n + 1];
        for (mask, p) in self.probabilities() {
            out[mask.count_ones() as usize] += p;
        }
        out
    }
}

pub fn mask_to_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

pub fn indices_to_mask(indices: impl IntoIterator<Item = usize>) -> u32 {
    indices.into_iter().fold(0, |m, i| m | (1 << i))
}

/// Compute `det(S_Y)` for all `2^N` subsets, together with `det(S + I)`.
pub fn enumerate_all(s: &StochasticMatrix) -> Result<EnumerationTable> {
    let n = s.n();
    if n > MAX_ENUMERATION {
        return Err(Error::GroundSetTooLarge {
            n,
            max: MAX_ENUMERATION,
        });
    }
    let dets = (0u32..(1u32 << n))
        .map(|mask| symmetric_det(&principal_submatrix(s.entries(), &mask_to_indices(mask))))
        .collect();
    Ok(EnumerationTable {
        n,
        dets,
        partition: partition_function(s)?,
    })
}

/// `K = S (S + I)^{-1}`, whose diagonal holds the item inclusion probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalKernel {
    pub entries: DMatrix<f64>,
}

impl MarginalKernel {
    pub fn inclusion_probabilities(&self) -> Vec<f64> {
        self.entries.diagonal().iter().copied().collect()
    }
}

/// Marginal kernel through the eigenbasis of `S`: eigenvalues `λ/(λ+1)`.
pub fn marginal_kernel(s: &StochasticMatrix) -> Result<MarginalKernel> {
    Ok(marginal_kernel_from_spectrum(s.spectrum()?))
}

pub fn marginal_kernel_from_spectrum(spec: &SpectralDecomposition) -> MarginalKernel {
    let shrunk: Vec<f64> = spec.eigenvalues.iter().map(|&l| l / (l + 1.0)).collect();
    let v = &spec.eigenvectors;
    let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * shrunk[j]);
    MarginalKernel {
        entries: scaled * v.transpose(),
    }
}

/// Expected sample size `Σ λ_i / (λ_i + 1) = tr K`.
pub fn expected_size(s: &StochasticMatrix) -> Result<f64> {
    Ok(expected_size_from_eigenvalues(&s.spectrum()?.eigenvalues))
}

pub fn expected_size_from_eigenvalues(eigenvalues: &[f64]) -> f64 {
    eigenvalues.iter().map(|&l| l / (l + 1.0)).sum()
}

/// Variance of the Poisson-binomial sample size.
pub fn size_variance_from_eigenvalues(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .map(|&l| {
            let q = l / (l + 1.0);
            q * (1.0 - q)
        })
        .sum()
}

/// Per-item weights `(1/|V|) Σ_v v_i²` of the current basis.
fn item_weights(basis: &[DVector<f64>], n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for v in basis {
        for (wi, x) in w.iter_mut().zip(v.iter()) {
            *wi += x * x;
        }
    }
    let k = basis.len() as f64;
    w.iter_mut().for_each(|x| *x /= k);
    w
}

/// Lowest index whose weight is within [`ARGMAX_TIE_TOL`] of the maximum.
fn argmax_lowest(weights: &[f64]) -> usize {
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cut = max - ARGMAX_TIE_TOL * max.abs().max(1.0);
    weights.iter().position(|&w| w >= cut).unwrap_or(0)
}

fn draw_weighted(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if target < acc {
            return i;
        }
    }
    last
}

/// Item phase: one item per basis vector. `uniform` is only consulted by the
/// probabilistic variant.
pub fn select_items(
    mut basis: Vec<DVector<f64>>,
    n: usize,
    variant: SamplerVariant,
    uniform: &mut dyn FnMut() -> f64,
) -> Result<BTreeSet<usize>> {
    let mut chosen = BTreeSet::new();
    while !basis.is_empty() {
        let w = item_weights(&basis, n);
        let item = match variant {
            SamplerVariant::PaperArgmax => argmax_lowest(&w),
            SamplerVariant::Probabilistic => draw_weighted(&w, uniform()),
            SamplerVariant::ExactKdppOracle => {
                return Err(Error::InvalidArgument(
                    "the enumeration oracle has no spectral item phase".into(),
                ))
            }
        };
        if !chosen.insert(item) {
            return Err(Error::OrthogonalizationCollapse(w[item]));
        }
        project_out_coordinate(&mut basis, item)?;
    }
    Ok(chosen)
}

/// Draw from the DPP given its eigendecomposition. `uniform` supplies the
/// U(0, 1) draws: one per eigenvector, then one per item for the
/// probabilistic variant.
pub fn sample_from_spectrum_with(
    spec: &SpectralDecomposition,
    variant: SamplerVariant,
    uniform: &mut dyn FnMut() -> f64,
) -> Result<BTreeSet<usize>> {
    let basis: Vec<DVector<f64>> = spec
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|&(_, &l)| uniform() < l / (l + 1.0))
        .map(|(i, _)| spec.eigenvector(i))
        .collect();
    select_items(basis, spec.n(), variant, uniform)
}

/// Seeded draw from the DPP with kernel `S`.
pub fn sample_standard(s: &StochasticMatrix, seed: u64, variant: SamplerVariant) -> Result<DppSample> {
    sample_spectrum(s.spectrum()?, seed, variant)
}

/// Seeded draw from a DPP given directly by its eigenpairs.
pub fn sample_spectrum(spec: &SpectralDecomposition, seed: u64, variant: SamplerVariant) -> Result<DppSample> {
    let mut rng = rng_from_seed(derive_seed(seed, "dpp-standard"));
    let mut uniform = || rng.random::<f64>();
    let indices = sample_from_spectrum_with(spec, variant, &mut uniform)?;
    Ok(DppSample { indices, seed, variant })
}

/// One row of a Monte-Carlo marginal comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginalRow {
    pub item: usize,
    pub empirical_marginal: f64,
    pub kernel_marginal: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub draws: usize,
    pub rows: Vec<MarginalRow>,
    pub mean_size: f64,
    pub expected_size: f64,
    pub size_std: f64,
}

impl MonteCarloReport {
    /// Fraction of items whose |z| is at most `z_max`.
    pub fn fraction_within(&self, z_max: f64) -> f64 {
        let ok = self.rows.iter().filter(|r| r.z_score.abs() <= z_max).count();
        ok as f64 / self.rows.len().max(1) as f64
    }

    /// z-score of the mean sample size against the Poisson-binomial law.
    pub fn size_z(&self) -> f64 {
        if self.size_std == 0.0 {
            return if self.mean_size == self.expected_size {
                0.0
            } else {
                f64::INFINITY
            };
        }
        (self.mean_size - self.expected_size) / (self.size_std / (self.draws as f64).sqrt())
    }

    /// CSV with header `item,empirical_marginal,kernel_marginal,z_score`.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "item,empirical_marginal,kernel_marginal,z_score")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{}",
                r.item, r.empirical_marginal, r.kernel_marginal, r.z_score
            )?;
        }
        Ok(())
    }
}

/// Draw `draws` samples and compare item frequencies with `diag(K)`.
pub fn monte_carlo_marginals(
    s: &StochasticMatrix,
    draws: usize,
    seed: u64,
    variant: SamplerVariant,
) -> Result<MonteCarloReport> {
    let spec = s.spectrum()?;
    let kernel = marginal_kernel_from_spectrum(spec).inclusion_probabilities();
    let n = spec.n();
    let mut counts = vec![0usize; n];
    let mut size_total = 0usize;
    let mut rng = rng_from_seed(derive_seed(seed, "dpp-monte-carlo"));
    let mut uniform = || rng.random::<f64>();
    for _ in 0..draws {
        let y = sample_from_spectrum_with(spec, variant, &mut uniform)?;
        size_total += y.len();
        for i in y {
            counts[i] += 1;
        }
    }
    let d = draws as f64;
    let rows = (0..n)
        .map(|i| {
            let emp = counts[i] as f64 / d;
            let k = kernel[i];
            let se = (k * (1.0 - k) / d).sqrt();
            let z = if se > 0.0 {
                (emp - k) / se
            } else if (emp - k).abs() < 1e-12 {
                0.0
            } else {
                f64::INFINITY
            };
            MarginalRow {
                item: i,
                empirical_marginal: emp,
                kernel_marginal: k,
                z_score: z,
            }
        })
        .collect();
    Ok(MonteCarloReport {
        draws,
        rows,
        mean_size: size_total as f64 / d,
        expected_size: expected_size_from_eigenvalues(&spec.eigenvalues),
        size_std: size_variance_from_eigenvalues(&spec.eigenvalues).sqrt(),
    })
}
