//! Dense symmetric eigendecomposition shared by MCA and cMCA.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Top-`k` eigenpairs of the symmetric matrix `m`, by descending algebraic
/// eigenvalue. Each eigenvector is signed so that its largest-magnitude
/// entry (first one on ties) is positive.
pub fn top_eigenpairs(m: &DMatrix<f64>, k: usize) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let dim = m.nrows();
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix is not square",
            m.nrows(),
            m.ncols()
        )));
    }
    if k == 0 || k > dim {
        return Err(Error::InvalidArgument(format!(
            "k_prime must be in 1..={dim}, got {k}"
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("eigen input"));
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0).ok_or(Error::EigenFailure)?;
    if eig.eigenvalues.iter().any(|x| !x.is_finite())
        || eig.eigenvectors.iter().any(|x| !x.is_finite())
    {
        return Err(Error::EigenFailure);
    }

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });

    let mut vectors = DMatrix::zeros(dim, k);
    let mut values = Vec::with_capacity(k);
    for (j, &src) in order.iter().take(k).enumerate() {
        let col = eig.eigenvectors.column(src);
        let mut pivot = 0;
        for i in 1..dim {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..dim {
            vectors[(i, j)] = sign * col[i];
        }
        values.push(eig.eigenvalues[src]);
    }
    Ok((vectors, values))
}
