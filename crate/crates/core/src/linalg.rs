//! Small dense kernels that the samplers need and nalgebra does not offer
//! in the exact form required.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Determinants whose magnitude falls below this are reported as zero.
pub const DET_UNDERFLOW: f64 = 1e-300;

/// Determinant of a symmetric matrix by LDLᵀ with symmetric (diagonal)
/// pivoting: the determinant is the product of the pivots.
///
/// A pivot that is zero up to round-off relative to the largest diagonal
/// entry makes the whole determinant zero. Negative pivots are kept, so an
/// indefinite input yields a negative value rather than being hidden.
pub fn symmetric_det(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    if n == 0 {
        return 1.0;
    }
    let mut m = a.clone();
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(0.0f64, f64::max).max(1.0);
    let tiny = f64::EPSILON * scale * n as f64;
    let mut det = 1.0;
    for k in 0..n {
        // largest remaining diagonal entry in magnitude
        let (piv, _) = (k..n)
            .map(|i| (i, m[(i, i)].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv != k {
            m.swap_rows(k, piv);
            m.swap_columns(k, piv);
        }
        let d = m[(k, k)];
        if d.abs() <= tiny {
            return 0.0;
        }
        det *= d;
        for i in (k + 1)..n {
            let l = m[(i, k)] / d;
            if l == 0.0 {
                continue;
            }
            for j in (k + 1)..=i {
                let v = m[(i, j)] - l * m[(j, k)];
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
    }
    if det.abs() < DET_UNDERFLOW {
        0.0
    } else {
        det
    }
}

/// Principal submatrix indexed by `idx` (in the given order).
pub fn principal_submatrix(a: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])])
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let (ca, ra) = a.as_chunks::<8>();
    let (cb, rb) = b.as_chunks::<8>();
    for (x, y) in ca.iter().zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Drop threshold for Gram–Schmidt.
pub const ORTHO_DROP: f64 = 1e-10;

/// Orthonormalize `vectors` in place with modified Gram–Schmidt followed by
/// one re-orthogonalization pass.
///
/// Fails with [`Error::OrthogonalizationCollapse`] if any vector's residual
/// norm drops below [`ORTHO_DROP`], which means the inputs were (numerically)
/// linearly dependent.
pub fn mgs_orthonormalize(vectors: &mut [DVector<f64>]) -> Result<()> {
    for j in 0..vectors.len() {
        let (done, rest) = vectors.split_at_mut(j);
        let v = &mut rest[0];
        for _pass in 0..2 {
            for q in done.iter() {
                let c = dot(q.as_slice(), v.as_slice());
                axpy(v.as_mut_slice(), -c, q.as_slice());
            }
        }
        let norm = dot(v.as_slice(), v.as_slice()).sqrt();
        if norm < ORTHO_DROP {
            return Err(Error::OrthogonalizationCollapse(norm));
        }
        *v /= norm;
    }
    Ok(())
}

/// Replace the orthonormal basis `basis` by an orthonormal basis of its
/// subspace orthogonal to the coordinate vector `e_item`. The result has one
/// vector fewer.
pub fn project_out_coordinate(basis: &mut Vec<DVector<f64>>, item: usize) -> Result<()> {
    if basis.is_empty() {
        return Ok(());
    }
    // eliminate with the vector carrying the largest weight on `item`
    let (pivot_idx, _) = basis
        .iter()
        .enumerate()
        .map(|(i, v)| (i, v[item].abs()))
        .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    let pivot = basis.swap_remove(pivot_idx);
    let pv = pivot[item];
    if pv.abs() < ORTHO_DROP {
        return Err(Error::OrthogonalizationCollapse(pv.abs()));
    }
    for v in basis.iter_mut() {
        let c = v[item] / pv;
        axpy(v.as_mut_slice(), -c, pivot.as_slice());
        v[item] = 0.0;
    }
    mgs_orthonormalize(basis)?;
    for v in basis.iter_mut() {
        v[item] = 0.0;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_of_small_matrices() {
        let a = DMatrix::from_row_slice(2, 2, &[1.5, 0.5, 0.5, 1.5]);
        assert!((symmetric_det(&a) - 2.0).abs() < 1e-15);
        let singular = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        assert_eq!(symmetric_det(&singular), 0.0);
        assert_eq!(symmetric_det(&DMatrix::zeros(0, 0)), 1.0);
        let indef = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        // zero diagonal: pivoting cannot find a usable pivot
        assert_eq!(symmetric_det(&indef), 0.0);
        let neg = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!((symmetric_det(&neg) + 3.0).abs() < 1e-14);
    }

    #[test]
    fn det_matches_lu_on_spd() {
        let b = DMatrix::from_fn(6, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let a = &b * b.transpose() + DMatrix::identity(6, 6);
        let lu = a.clone().lu().determinant();
        assert!((symmetric_det(&a) - lu).abs() <= 1e-9 * lu.abs());
    }

    #[test]
    fn mgs_produces_orthonormal_set() {
        let mut vs = vec![
            DVector::from_vec(vec![1.0, 1.0, 0.0]),
            DVector::from_vec(vec![1.0, 0.0, 1.0]),
            DVector::from_vec(vec![0.0, 1.0, 1.0]),
        ];
        mgs_orthonormalize(&mut vs).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((vs[i].dot(&vs[j]) - want).abs() < 1e-14);
            }
        }
        let mut dep = vec![DVector::from_vec(vec![1.0, 2.0]), DVector::from_vec(vec![2.0, 4.0])];
        assert!(matches!(
            mgs_orthonormalize(&mut dep),
            Err(Error::OrthogonalizationCollapse(_))
        ));
    }

    #[test]
    fn projection_removes_coordinate() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut basis = vec![
            DVector::from_vec(vec![s, s, 0.0]),
            DVector::from_vec(vec![0.0, 0.0, 1.0]),
        ];
        project_out_coordinate(&mut basis, 0).unwrap();
        assert_eq!(basis.len(), 1);
        assert_eq!(basis[0][0], 0.0);
        assert!((basis[0].norm() - 1.0).abs() < 1e-14);
    }
}
