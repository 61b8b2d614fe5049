//! Fixed-cardinality sampling: the truncated spectral sampler used for
//! per-class rebalancing, an exact k-DPP by enumeration for small ground
//! sets, and [`balanced_resample`] which applies the sampler class by class.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DVector;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data_model::{ClassManifest, DppSample, SamplerVariant};
use crate::dpp::{mask_to_indices, select_items};
use crate::error::{Error, Result};
use crate::linalg::{principal_submatrix, symmetric_det};
use crate::rng::{derive_seed, derive_seed_tagged, rng_from_seed};
use crate::stochastic_matrix::{build_stochastic_matrix, SpectralDecomposition, StochasticMatrix, RANK_TOL};

/// Largest ground set the exact k-DPP oracle will enumerate.
pub const MAX_ORACLE_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Items to keep per class.
    pub k: usize,
    pub seed: u64,
    pub variant: SamplerVariant,
    /// Fill up the eigenvector set when the Bernoulli walk keeps fewer than `k`.
    pub topup: bool,
}

impl SamplerConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            variant: SamplerVariant::PaperArgmax,
            topup: true,
        }
    }

    pub fn with_variant(mut self, variant: SamplerVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_topup(mut self, topup: bool) -> Self {
        self.topup = topup;
        self
    }

    /// Ten times the smallest class size.
    pub fn default_k(manifest: &ClassManifest) -> usize {
        10 * manifest.class_counts().values().copied().min().unwrap_or(0)
    }
}

/// Eigenvector phase with a cap of `k`: walk eigenpairs in decreasing order,
/// keep each with probability `λ/(λ+1)`, stop at `k`. With `topup`, unkept
/// eigenvectors of non-zero eigenvalue are then appended (still in
/// decreasing order) until `min(k, rank)` are kept.
pub fn select_eigenvectors(
    spec: &SpectralDecomposition,
    k: usize,
    topup: bool,
    uniform: &mut dyn FnMut() -> f64,
) -> Vec<usize> {
    let mut kept = Vec::with_capacity(k);
    let mut taken = vec![false; spec.n()];
    for (i, &l) in spec.eigenvalues.iter().enumerate() {
        if kept.len() == k {
            break;
        }
        if uniform() < l / (l + 1.0) {
            kept.push(i);
            taken[i] = true;
        }
    }
    if topup {
        // λ/(λ+1) is increasing in λ, so eigenvalue order is the fill order
        for (i, &l) in spec.eigenvalues.iter().enumerate() {
            if kept.len() == k {
                break;
            }
            if !taken[i] && l > RANK_TOL {
                kept.push(i);
            }
        }
    }
    kept
}

/// Spectral k-sampler driven by explicit uniform draws.
pub fn sample_k_with(
    spec: &SpectralDecomposition,
    k: usize,
    topup: bool,
    variant: SamplerVariant,
    uniform: &mut dyn FnMut() -> f64,
) -> Result<BTreeSet<usize>> {
    if k > spec.n() {
        return Err(Error::KTooLarge { k, n: spec.n() });
    }
    let basis: Vec<DVector<f64>> = select_eigenvectors(spec, k, topup, uniform)
        .into_iter()
        .map(|i| spec.eigenvector(i))
        .collect();
    select_items(basis, spec.n(), variant, uniform)
}

/// Draw a subset of (at most, or with top-up exactly `min(k, rank S)`) `k`
/// items. The oracle variant is routed to [`exact_kdpp_oracle`].
pub fn sample_k(s: &StochasticMatrix, config: &SamplerConfig) -> Result<DppSample> {
    if config.k > s.n() {
        return Err(Error::KTooLarge { k: config.k, n: s.n() });
    }
    if config.variant == SamplerVariant::ExactKdppOracle {
        return exact_kdpp_oracle(s, config.k, config.seed);
    }
    let mut rng = rng_from_seed(derive_seed(config.seed, "ipdpp-sample-k"));
    let mut uniform = || rng.random::<f64>();
    let indices = sample_k_with(s.spectrum()?, config.k, config.topup, config.variant, &mut uniform)?;
    Ok(DppSample {
        indices,
        seed: config.seed,
        variant: config.variant,
    })
}

fn k_subsets(n: usize, k: usize) -> impl Iterator<Item = u32> {
    (0u32..(1u32 << n)).filter(move |m| m.count_ones() as usize == k)
}

/// Every size-`k` subset (as a bitmask) with its probability under the
/// k-DPP `P(Y) ∝ det(S_Y)`, `|Y| = k`.
pub fn kdpp_table(s: &StochasticMatrix, k: usize) -> Result<Vec<(u32, f64)>> {
    let n = s.n();
    if n > MAX_ORACLE_N {
        return Err(Error::GroundSetTooLarge { n, max: MAX_ORACLE_N });
    }
    if k > n {
        return Err(Error::KTooLarge { k, n });
    }
    let dets: Vec<(u32, f64)> = k_subsets(n, k)
        .map(|m| {
            let d = symmetric_det(&principal_submatrix(s.entries(), &mask_to_indices(m)));
            (m, d.max(0.0))
        })
        .collect();
    let total: f64 = dets.iter().map(|(_, d)| d).sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateSupport(k));
    }
    Ok(dets.into_iter().map(|(m, d)| (m, d / total)).collect())
}

/// Exact k-DPP draw by enumeration (small `N` only).
pub fn exact_kdpp_oracle(s: &StochasticMatrix, k: usize, seed: u64) -> Result<DppSample> {
    let table = kdpp_table(s, k)?;
    let mut rng = rng_from_seed(derive_seed(seed, "kdpp-oracle"));
    let mask = draw_from_table(&table, rng.random::<f64>());
    Ok(DppSample {
        indices: mask_to_indices(mask).into_iter().collect(),
        seed,
        variant: SamplerVariant::ExactKdppOracle,
    })
}

/// Inverse-CDF draw from a `(mask, probability)` table.
pub fn draw_from_table(table: &[(u32, f64)], u: f64) -> u32 {
    let mut acc = 0.0;
    let mut last = table[0].0;
    for &(m, p) in table {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = m;
        if u < acc {
            return m;
        }
    }
    last
}

/// `e_k(λ_1, …, λ_N)`, the normalizer of the exact k-DPP.
pub fn elementary_symmetric(values: &[f64], k: usize) -> f64 {
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for &x in values {
        for j in (1..=k).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e[k]
}

/// Rebalance a manifest: every class larger than `k` is reduced to `k`
/// items with the k-sampler over that class's own kernel; smaller classes are
/// kept whole. Indices in the returned samples refer to the manifest.
pub fn balanced_resample(manifest: &ClassManifest, config: &SamplerConfig) -> Result<BTreeMap<usize, DppSample>> {
    if config.k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if let Some(item) = manifest.items().iter().find(|it| it.probability.is_none()) {
        return Err(Error::MissingProbability(item.id.clone()));
    }
    let classes: Vec<usize> = (0..manifest.num_classes()).collect();
    if let Some(&c) = classes.iter().find(|&&c| manifest.count(c) == 0) {
        return Err(Error::EmptyClass(c));
    }

    let results = crate::par::map(classes, |c| {
        let members = manifest.class_indices(c);
        let seed = derive_seed_tagged(config.seed, "class", c as u64);
        if members.len() <= config.k {
            return Ok((
                c,
                DppSample {
                    indices: members.into_iter().collect(),
                    seed,
                    variant: config.variant,
                },
            ));
        }
        let probs: Vec<f64> = members
            .iter()
            .map(|&i| manifest.items()[i].probability.expect("checked above"))
            .collect();
        let s = build_stochastic_matrix(&probs)?;
        let local = sample_k(&s, &SamplerConfig { seed, ..*config })?;
        Ok((
            c,
            DppSample {
                indices: local.indices.into_iter().map(|i| members[i]).collect(),
                seed,
                variant: config.variant,
            },
        ))
    });
    results.into_iter().collect()
}

/// Union of the per-class samples.
pub fn merged_indices(samples: &BTreeMap<usize, DppSample>) -> BTreeSet<usize> {
    samples.values().flat_map(|s| s.indices.iter().copied()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::ItemRecord;

    fn scripted(values: Vec<f64>) -> impl FnMut() -> f64 {
        let mut it = values.into_iter();
        move || it.next().expect("ran out of scripted draws")
    }

    #[test]
    fn hand_trace_k_equals_one() {
        let s = build_stochastic_matrix(&[1.0, 1.0]).unwrap();
        let mut u = scripted(vec![0.2]);
        let y = sample_k_with(s.spectrum().unwrap(), 1, false, SamplerVariant::PaperArgmax, &mut u).unwrap();
        assert_eq!(y.into_iter().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn identity_kernel_full_topup() {
        let s = build_stochastic_matrix(&[0.0; 7]).unwrap();
        for seed in 0..20 {
            let y = sample_k(&s, &SamplerConfig::new(7, seed)).unwrap();
            assert_eq!(y.indices, (0..7).collect());
        }
    }

    #[test]
    fn without_topup_can_fall_short() {
        let s = build_stochastic_matrix(&[0.0; 4]).unwrap();
        let mut u = scripted(vec![0.9, 0.9, 0.9, 0.1]);
        let y = sample_k_with(s.spectrum().unwrap(), 3, false, SamplerVariant::PaperArgmax, &mut u).unwrap();
        assert_eq!(y.len(), 1);
    }

    #[test]
    fn topup_is_capped_by_rank() {
        // p = (1, 1): rank one
        let s = build_stochastic_matrix(&[1.0, 1.0]).unwrap();
        let y = sample_k(&s, &SamplerConfig::new(2, 3)).unwrap();
        assert_eq!(y.len(), 1);
    }

    #[test]
    fn k_too_large() {
        let s = build_stochastic_matrix(&[0.3, 0.4]).unwrap();
        assert!(matches!(
            sample_k(&s, &SamplerConfig::new(3, 0)),
            Err(Error::KTooLarge { k: 3, n: 2 })
        ));
    }

    #[test]
    fn oracle_tables() {
        let s = build_stochastic_matrix(&[1.0, 1.0]).unwrap();
        let t = kdpp_table(&s, 1).unwrap();
        assert_eq!(t.len(), 2);
        assert!(t.iter().all(|(_, p)| (p - 0.5).abs() < 1e-15));
        assert!(matches!(kdpp_table(&s, 2), Err(Error::DegenerateSupport(2))));
        assert!(matches!(
            exact_kdpp_oracle(&build_stochastic_matrix(&[0.5; 13]).unwrap(), 2, 0),
            Err(Error::GroundSetTooLarge { .. })
        ));
    }

    #[test]
    fn oracle_table_for_three_items_matches_hand_minors() {
        let p = [0.9, 0.6, 0.3];
        let s = build_stochastic_matrix(&p).unwrap();
        // 2x2 minors of S with off-diagonal p_i p_j / 3
        let n = 3.0;
        let diag: Vec<f64> = (0..3)
            .map(|j| 1.0 - (0..3).filter(|&k| k != j).map(|k| p[k] * p[j] / n).sum::<f64>())
            .collect();
        let minor = |i: usize, j: usize| diag[i] * diag[j] - (p[i] * p[j] / n).powi(2);
        let raw = [(0b011, minor(0, 1)), (0b101, minor(0, 2)), (0b110, minor(1, 2))];
        let z: f64 = raw.iter().map(|r| r.1).sum();
        let t = kdpp_table(&s, 2).unwrap();
        for (m, want) in raw {
            let got = t.iter().find(|(mm, _)| *mm == m).unwrap().1;
            assert!((got - want / z).abs() < 1e-14);
        }
    }

    #[test]
    fn elementary_symmetric_matches_subset_dets() {
        let s = build_stochastic_matrix(&[0.9, 0.6, 0.3, 0.8, 0.1]).unwrap();
        let lam = &s.spectrum().unwrap().eigenvalues;
        for k in 0..=5 {
            let sum: f64 = k_subsets(5, k)
                .map(|m| symmetric_det(&principal_submatrix(s.entries(), &mask_to_indices(m))))
                .sum();
            assert!((elementary_symmetric(lam, k) - sum).abs() < 1e-12, "k={k}");
        }
    }

    fn manifest(sizes: &[usize]) -> ClassManifest {
        let mut items = Vec::new();
        for (c, &n) in sizes.iter().enumerate() {
            for i in 0..n {
                let p = 0.05 + 0.9 * ((i * 37 + c * 11) % 97) as f64 / 97.0;
                items.push(ItemRecord::new(format!("c{c}_{i}"), c, p));
            }
        }
        ClassManifest::from_items(items).unwrap()
    }

    #[test]
    fn balanced_sizes_follow_min_rule() {
        let m = manifest(&[100, 50, 5]);
        let out = balanced_resample(&m, &SamplerConfig::new(10, 42)).unwrap();
        let sizes: Vec<usize> = out.values().map(DppSample::len).collect();
        assert_eq!(sizes, vec![10, 10, 5]);
        for (c, s) in &out {
            assert!(s.indices.iter().all(|&i| m.items()[i].class_label == *c));
        }
        let again = balanced_resample(&m, &SamplerConfig::new(10, 42)).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn large_k_is_identity() {
        let m = manifest(&[8, 6, 3]);
        let out = balanced_resample(&m, &SamplerConfig::new(100, 1)).unwrap();
        assert_eq!(merged_indices(&out), (0..m.len()).collect());
    }

    #[test]
    fn default_k_is_ten_times_smallest_class() {
        assert_eq!(SamplerConfig::default_k(&manifest(&[40, 20, 5])), 50);
    }

    #[test]
    fn missing_probability_and_empty_class() {
        let mut items = vec![ItemRecord::new("a", 0, 0.5)];
        items.push(ItemRecord {
            probability: None,
            ..ItemRecord::new("b", 0, 0.0)
        });
        let m = ClassManifest::from_items(items).unwrap();
        assert!(matches!(
            balanced_resample(&m, &SamplerConfig::new(1, 0)),
            Err(Error::MissingProbability(id)) if id == "b"
        ));
        let gap = ClassManifest::from_items(vec![ItemRecord::new("a", 1, 0.5)]).unwrap();
        assert!(matches!(
            balanced_resample(&gap, &SamplerConfig::new(1, 0)),
            Err(Error::EmptyClass(0))
        ));
    }
}
