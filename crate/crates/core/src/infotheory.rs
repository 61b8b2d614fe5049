//! Exact information measures over finite alphabets, in nats.
//!
//! Everything here works by direct enumeration of a joint probability table;
//! there are no estimators. `0 · ln 0` is taken to be 0.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Total-mass tolerance for probability vectors and joint tables.
pub const NORM_TOL: f64 = 1e-12;

fn check_pmf(pmf: &[f64]) -> Result<()> {
    let total: f64 = pmf.iter().sum();
    if pmf.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(total));
    }
    Ok(())
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// Shannon entropy `-Σ p ln p`.
pub fn entropy(pmf: &[f64]) -> Result<f64> {
    check_pmf(pmf)?;
    Ok(-pmf.iter().map(|&p| plogp(p)).sum::<f64>())
}

/// Self-information `-ln p` of an outcome with probability `p ∈ [1e-12, 1]`.
pub fn information_content(p: f64) -> Result<f64> {
    if !(crate::data_model::PROB_FLOOR..=1.0).contains(&p) {
        return Err(Error::OutOfRange(p));
    }
    Ok(-p.ln())
}

/// Self-information of a set of independent events: the sum of the parts.
pub fn joint_information_content(ps: &[f64]) -> Result<f64> {
    ps.iter().map(|&p| information_content(p)).sum()
}

/// A joint distribution over `X × Y` with cached marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJoint {
    pmf: DMatrix<f64>,
    row_marginal: DVector<f64>,
    col_marginal: DVector<f64>,
}

impl DiscreteJoint {
    pub fn new(pmf: DMatrix<f64>) -> Result<Self> {
        check_pmf(pmf.as_slice())?;
        let row_marginal = DVector::from_iterator(pmf.nrows(), pmf.row_iter().map(|r| r.sum()));
        let col_marginal = DVector::from_iterator(pmf.ncols(), pmf.column_iter().map(|c| c.sum()));
        Ok(Self {
            pmf,
            row_marginal,
            col_marginal,
        })
    }

    /// Build from row-major nested slices.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::InvalidArgument(
                "joint table must be a non-empty rectangle".into(),
            ));
        }
        Self::new(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }

    /// Product distribution `p(x) p(y)`.
    pub fn independent(px: &[f64], py: &[f64]) -> Result<Self> {
        check_pmf(px)?;
        check_pmf(py)?;
        Self::new(DMatrix::from_fn(px.len(), py.len(), |i, j| px[i] * py[j]))
    }

    pub fn pmf(&self) -> &DMatrix<f64> {
        &self.pmf
    }

    pub fn row_marginal(&self) -> &DVector<f64> {
        &self.row_marginal
    }

    pub fn col_marginal(&self) -> &DVector<f64> {
        &self.col_marginal
    }

    pub fn transpose(&self) -> Self {
        Self {
            pmf: self.pmf.transpose(),
            row_marginal: self.col_marginal.clone(),
            col_marginal: self.row_marginal.clone(),
        }
    }
}

pub fn joint_entropy(joint: &DiscreteJoint) -> f64 {
    -joint.pmf.iter().map(|&p| plogp(p)).sum::<f64>()
}

pub fn mutual_information(joint: &DiscreteJoint) -> f64 {
    let mut mi = 0.0;
    for (j, col) in joint.pmf.column_iter().enumerate() {
        for (i, &pxy) in col.iter().enumerate() {
            if pxy > 0.0 {
                mi += pxy * (pxy / (joint.row_marginal[i] * joint.col_marginal[j])).ln();
            }
        }
    }
    mi
}

/// `H(X) + H(Y) - 2 MI(X, Y)`.
pub fn variation_of_information(joint: &DiscreteJoint) -> f64 {
    let hx = -joint.row_marginal.iter().map(|&p| plogp(p)).sum::<f64>();
    let hy = -joint.col_marginal.iter().map(|&p| plogp(p)).sum::<f64>();
    hx + hy - 2.0 * mutual_information(joint)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Check `MI(X;Y) ≥ E_p(x,y) ln[p(x,y) / (p(x,y) + n p(x) p(y))] + ln n`.
///
/// The negative-pair law is taken to be the column marginal, so `p(x)p(y)` is
/// the product of the two marginals of `joint`.
pub fn nce_bound_check(joint: &DiscreteJoint, n: usize) -> Result<BoundReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let nf = n as f64;
    let mut expectation = 0.0;
    for (j, col) in joint.pmf.column_iter().enumerate() {
        for (i, &pxy) in col.iter().enumerate() {
            if pxy > 0.0 {
                let noise = nf * joint.row_marginal[i] * joint.col_marginal[j];
                expectation += pxy * (pxy / (pxy + noise)).ln();
            }
        }
    }
    let lhs = mutual_information(joint);
    let rhs = expectation + nf.ln();
    Ok(BoundReport {
        lhs,
        rhs,
        holds: lhs >= rhs - 1e-10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    fn correlated() -> DiscreteJoint {
        DiscreteJoint::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap()
    }

    fn fair_independent() -> DiscreteJoint {
        DiscreteJoint::independent(&[0.5, 0.5], &[0.5, 0.5]).unwrap()
    }

    fn mixed() -> DiscreteJoint {
        DiscreteJoint::from_rows(&[vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap()
    }

    #[test]
    fn entropy_values() {
        close(entropy(&[0.5, 0.5]).unwrap(), LN2, 1e-15);
        assert_eq!(entropy(&[1.0, 0.0]).unwrap(), 0.0);
        close(entropy(&[0.4, 0.6]).unwrap(), 0.673012, 1e-6);
        assert!(matches!(entropy(&[0.5, 0.4]), Err(Error::NotNormalized(_))));
        assert!(entropy(&[1.5, -0.5]).is_err());
    }

    #[test]
    fn mutual_information_values() {
        close(mutual_information(&fair_independent()), 0.0, 1e-15);
        close(mutual_information(&correlated()), LN2, 1e-15);
        close(mutual_information(&mixed()), 0.192745, 1e-6);
    }

    #[test]
    fn information_content_values() {
        assert_eq!(information_content(1.0).unwrap(), 0.0);
        close(information_content(0.5).unwrap(), LN2, 1e-15);
        close(joint_information_content(&[0.5, 0.25]).unwrap(), 2.079442, 1e-6);
        assert!(matches!(information_content(0.0), Err(Error::OutOfRange(_))));
        assert!(information_content(1.1).is_err());
    }

    #[test]
    fn variation_of_information_values() {
        close(variation_of_information(&correlated()), 0.0, 1e-15);
        close(variation_of_information(&fair_independent()), 2.0 * LN2, 1e-15);
        // marginals are uniform, so H(X) = H(Y) = ln 2
        close(variation_of_information(&mixed()), 2.0 * LN2 - 2.0 * 0.192745, 1e-6);
        close(variation_of_information(&mixed()), 1.000805, 1e-6);
    }

    #[test]
    fn nce_bound_examples() {
        let r = nce_bound_check(&correlated(), 1).unwrap();
        close(r.rhs, (2.0f64 / 3.0).ln(), 1e-15);
        close(r.lhs, LN2, 1e-15);
        assert!(r.holds);

        let r = nce_bound_check(&fair_independent(), 1).unwrap();
        close(r.lhs, 0.0, 1e-15);
        close(r.rhs, 0.5f64.ln(), 1e-15);
        assert!(r.holds);
        assert!(nce_bound_check(&correlated(), 0).is_err());
    }

    #[test]
    fn rejects_unnormalized_joint() {
        assert!(DiscreteJoint::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).is_err());
    }
}
