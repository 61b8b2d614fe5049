//! # tailsampler
//!
//! Tools for learning from long-tailed data in two stages.
//!
//! 1. **Balanced negative sampling** ([`bns`]): a sigmoid noise-contrastive
//!    loss where each anchor is accompanied by `m` extra same-class positives,
//!    so that tail classes contribute class-level as well as instance-level
//!    attraction.
//! 2. **Information-preserving DPP subsets** ([`stochastic_matrix`], [`dpp`],
//!    [`ipdpp`]): per class, build a symmetric stochastic kernel from the
//!    classifier's correct-label probabilities and draw a fixed-size subset
//!    that favours items the classifier finds hard.
//!
//! Brute-force oracles (subset enumeration, exact k-DPP, exact discrete
//! mutual information in [`infotheory`]) sit next to the fast paths so the
//! two can be checked against each other; [`verify`] bundles those checks and
//! [`experiment`] runs a small synthetic long-tail pipeline end to end.
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`data_model`] | manifests, subset files, sample records |
//! | [`infotheory`] | entropy, MI, variation of information, NCE bound |
//! | [`stochastic_matrix`] | kernel construction, spectrum, property report |
//! | [`dpp`] | subset probabilities, enumeration, marginal kernel, sampler |
//! | [`ipdpp`] | k-sampler, exact k-DPP oracle, per-class rebalancing |
//! | [`bns`] | losses, gradients, toy embedding trainer |
//! | [`experiment`] | synthetic data, softmax classifier, two-stage runs |
//! | [`cli`] | the `tailsampler` command line |
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bns;
pub mod cli;
pub mod data_model;
pub mod dpp;
pub mod error;
pub mod experiment;
pub mod infotheory;
pub mod ipdpp;
pub mod linalg;
pub mod par;
pub mod rng;
pub mod stochastic_matrix;
pub mod verify;

pub use data_model::{ClassManifest, DppSample, ItemRecord, ManifestFormat, SamplerVariant};
pub use error::{Error, Result};
pub use ipdpp::SamplerConfig;
pub use stochastic_matrix::{build_stochastic_matrix, SpectralDecomposition, StochasticMatrix};
