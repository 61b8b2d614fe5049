//! The symmetric stochastic kernel built from per-item classification
//! probabilities, and its eigendecomposition.
//!
//! For probabilities `p` over `N` items the kernel is
//!
//! ```text
//! S[i][j] = p(i) p(j) / N                  (i ≠ j)
//! S[j][j] = 1 - Σ_{k≠j} p(k) p(j) / N
//! ```
//!
//! Every row sums to one, the matrix is positive semidefinite, and all of its
//! eigenvalues lie in `[0, 1]`. Items that the classifier gets right with high
//! confidence are coupled more strongly, which lowers the determinant of any
//! principal minor containing them.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

/// Eigenvalues within this distance of `[0, 1]` are clamped into it.
pub const DEFAULT_CLAMP_TOL: f64 = 1e-8;
/// Row sums must be within this of one.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Eigenvalues above this count toward the rank.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug)]
pub struct StochasticMatrix {
    entries: DMatrix<f64>,
    source_probs: Vec<f64>,
    spectrum: OnceLock<SpectralDecomposition>,
}

impl Clone for StochasticMatrix {
    fn clone(&self) -> Self {
        let spectrum = OnceLock::new();
        if let Some(s) = self.spectrum.get() {
            let _ = spectrum.set(s.clone());
        }
        Self {
            entries: self.entries.clone(),
            source_probs: self.source_probs.clone(),
            spectrum,
        }
    }
}

/// Build the kernel from probabilities in `[0, 1]`.
pub fn build_stochastic_matrix(probs: &[f64]) -> Result<StochasticMatrix> {
    let n = probs.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if let Some((i, &p)) = probs.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
        return Err(Error::ProbabilityOutOfRange {
            id: i.to_string(),
            value: p,
        });
    }
    let nf = n as f64;
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = probs[i] * probs[j] / nf;
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    for j in 0..n {
        let off: f64 = (0..n).filter(|&k| k != j).map(|k| s[(k, j)]).sum();
        s[(j, j)] = 1.0 - off;
    }
    Ok(StochasticMatrix {
        entries: s,
        source_probs: probs.to_vec(),
        spectrum: OnceLock::new(),
    })
}

impl StochasticMatrix {
    /// Wrap an arbitrary square matrix after checking that it is symmetric,
    /// non-negative and row-stochastic.
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() == 0 {
            return Err(Error::EmptyInput);
        }
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                got: entries.ncols(),
            });
        }
        let m = Self::from_matrix_unchecked(entries);
        let r = validate_structure(&m.entries);
        if !(r.0 && r.1 && r.2) {
            return Err(Error::InvalidArgument(
                "matrix is not symmetric, non-negative and row-stochastic".into(),
            ));
        }
        Ok(m)
    }

    /// Wrap a matrix without any checks. Used to inject corrupted kernels
    /// into the verification suites.
    #[doc(hidden)]
    pub fn from_matrix_unchecked(entries: DMatrix<f64>) -> Self {
        Self {
            source_probs: Vec::new(),
            entries,
            spectrum: OnceLock::new(),
        }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// Probabilities the matrix was built from (empty for wrapped matrices).
    pub fn source_probs(&self) -> &[f64] {
        &self.source_probs
    }

    /// Cached decomposition with the default clamping tolerance.
    pub fn spectrum(&self) -> Result<&SpectralDecomposition> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let s = spectral_decompose(self, DEFAULT_CLAMP_TOL)?;
        Ok(self.spectrum.get_or_init(|| s))
    }
}

/// Eigenpairs sorted by decreasing eigenvalue; eigenvectors are the columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    /// Assemble a decomposition from known eigenpairs. The pairs are re-sorted
    /// in decreasing eigenvalue order; the caller guarantees orthonormality.
    pub fn from_parts(eigenvalues: Vec<f64>, eigenvectors: DMatrix<f64>) -> Result<Self> {
        let n = eigenvalues.len();
        if eigenvectors.ncols() != n || eigenvectors.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: eigenvectors.ncols(),
            });
        }
        Ok(sorted_pairs(&eigenvalues, &eigenvectors))
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, i: usize) -> DVector<f64> {
        self.eigenvectors.column(i).into_owned()
    }

    /// Number of eigenvalues above [`RANK_TOL`].
    pub fn rank(&self) -> usize {
        self.eigenvalues.iter().filter(|&&l| l > RANK_TOL).count()
    }

    /// `Σ λ_i v_i v_iᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let v = &self.eigenvectors;
        let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * self.eigenvalues[j]);
        scaled * v.transpose()
    }
}

fn sorted_pairs(values: &[f64], vectors: &DMatrix<f64>) -> SpectralDecomposition {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let eigenvalues = order.iter().map(|&i| values[i]).collect();
    let eigenvectors = DMatrix::from_fn(vectors.nrows(), order.len(), |r, c| vectors[(r, order[c])]);
    SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

fn eigen(m: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::DecompositionFailure("symmetric QR iteration did not converge".into()))
}

/// Eigendecompose `S`, clamping eigenvalues that stray from `[0, 1]` by at
/// most `clamp_tol` and rejecting anything further out.
pub fn spectral_decompose(s: &StochasticMatrix, clamp_tol: f64) -> Result<SpectralDecomposition> {
    let eig = eigen(&s.entries)?;
    if eig.eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(Error::DecompositionFailure("non-finite eigenvalue".into()));
    }
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    for l in values.iter_mut() {
        if *l < -clamp_tol || *l > 1.0 + clamp_tol {
            return Err(Error::EigenvalueOutOfBound {
                value: *l,
                tol: clamp_tol,
            });
        }
        *l = l.clamp(0.0, 1.0);
    }
    Ok(sorted_pairs(&values, &eig.eigenvectors))
}

/// Outcome of checking the PSD and unit-interval eigenvalue properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaReport {
    pub symmetric: bool,
    pub row_sums_ok: bool,
    pub nonnegative: bool,
    pub psd: bool,
    pub eigs_in_unit: bool,
    pub min_eig: f64,
    pub max_eig: f64,
}

impl LemmaReport {
    pub fn all_ok(&self) -> bool {
        self.symmetric && self.row_sums_ok && self.nonnegative && self.psd && self.eigs_in_unit
    }
}

fn validate_structure(m: &DMatrix<f64>) -> (bool, bool, bool) {
    let n = m.nrows();
    let symmetric = (0..n).all(|i| (0..i).all(|j| m[(i, j)] == m[(j, i)]));
    let row_sums_ok = m.row_iter().all(|r| (r.sum() - 1.0).abs() <= ROW_SUM_TOL);
    let nonnegative = m.iter().all(|&x| x >= 0.0);
    (symmetric, row_sums_ok, nonnegative)
}

/// Check the structural and spectral properties of `S` numerically.
/// Never fails: a decomposition failure shows up as NaN bounds and false flags.
pub fn validate_lemmas(s: &StochasticMatrix) -> LemmaReport {
    let (symmetric, row_sums_ok, nonnegative) = validate_structure(&s.entries);
    // symmetrize so that an asymmetric input still gets a real spectrum
    let sym = (&s.entries + s.entries.transpose()) * 0.5;
    let (min_eig, max_eig) = match eigen(&sym) {
        Ok(e) => e
            .eigenvalues
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &l| {
                (lo.min(l), hi.max(l))
            }),
        Err(_) => (f64::NAN, f64::NAN),
    };
    LemmaReport {
        symmetric,
        row_sums_ok,
        nonnegative,
        psd: min_eig >= -DEFAULT_CLAMP_TOL,
        eigs_in_unit: max_eig <= 1.0 + DEFAULT_CLAMP_TOL,
        min_eig,
        max_eig,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_mat(m: &DMatrix<f64>, want: &[f64], tol: f64) {
        for (a, b) in m.iter().zip(want) {
            assert!((a - b).abs() <= tol, "{m} vs {want:?}");
        }
    }

    #[test]
    fn builds_two_by_two_kernels() {
        let s = build_stochastic_matrix(&[1.0, 1.0]).unwrap();
        assert_mat(s.entries(), &[0.5, 0.5, 0.5, 0.5], 0.0);
        let s = build_stochastic_matrix(&[1.0, 0.5]).unwrap();
        assert_mat(s.entries(), &[0.75, 0.25, 0.25, 0.75], 0.0);
    }

    #[test]
    fn zero_probabilities_give_identity() {
        let s = build_stochastic_matrix(&[0.0; 5]).unwrap();
        assert_eq!(s.entries(), &DMatrix::<f64>::identity(5, 5));
        let d = s.spectrum().unwrap();
        assert!(d.eigenvalues.iter().all(|&l| (l - 1.0).abs() < 1e-15));
    }

    #[test]
    fn build_errors() {
        assert!(matches!(build_stochastic_matrix(&[]), Err(Error::EmptyInput)));
        assert!(matches!(
            build_stochastic_matrix(&[0.5, 1.2]),
            Err(Error::ProbabilityOutOfRange { .. })
        ));
    }

    #[test]
    fn two_by_two_spectrum() {
        let s = build_stochastic_matrix(&[1.0, 1.0]).unwrap();
        let d = spectral_decompose(&s, DEFAULT_CLAMP_TOL).unwrap();
        assert!((d.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!(d.eigenvalues[1].abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = d.eigenvector(0);
        // sign is arbitrary
        assert!((v0[0].abs() - h).abs() < 1e-12 && (v0[0] - v0[1]).abs() < 1e-12);
        let v1 = d.eigenvector(1);
        assert!((v1[0].abs() - h).abs() < 1e-12 && (v1[0] + v1[1]).abs() < 1e-12);

        let s = build_stochastic_matrix(&[1.0, 0.5]).unwrap();
        let d = s.spectrum().unwrap();
        assert!((d.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((d.eigenvalues[1] - 0.5).abs() < 1e-14);
        assert_eq!(d.rank(), 2);
    }

    #[test]
    fn out_of_band_eigenvalue_is_an_error() {
        let bad = StochasticMatrix::from_matrix_unchecked(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert!(matches!(
            spectral_decompose(&bad, DEFAULT_CLAMP_TOL),
            Err(Error::EigenvalueOutOfBound { .. })
        ));
        let r = validate_lemmas(&bad);
        assert!(r.symmetric && r.row_sums_ok && !r.psd);
        assert!(StochasticMatrix::from_matrix(DMatrix::from_row_slice(1, 2, &[1.0, 0.0])).is_err());
    }

    #[test]
    fn lemma_report_examples() {
        let r = validate_lemmas(&build_stochastic_matrix(&[1.0, 1.0]).unwrap());
        assert!(r.all_ok());
        assert!(r.min_eig.abs() < 1e-12 && (r.max_eig - 1.0).abs() < 1e-12);
        let r = validate_lemmas(&build_stochastic_matrix(&[0.0; 4]).unwrap());
        assert!(r.all_ok());
        assert_eq!((r.min_eig, r.max_eig), (1.0, 1.0));
    }

    #[test]
    fn smaller_eigenvalue_of_pair_is_one_minus_product() {
        for &(a, b) in &[(0.2, 0.9), (0.5, 0.5), (1.0, 0.3), (0.7, 0.0)] {
            let d = build_stochastic_matrix(&[a, b]).unwrap().spectrum().unwrap().clone();
            assert!((d.eigenvalues[1] - (1.0 - a * b)).abs() < 1e-14);
        }
    }
}
