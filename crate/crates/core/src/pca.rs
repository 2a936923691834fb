//! Principal components of complete-case rows, used for map initialization
//! and SOTM coloring. Computed in `f64` regardless of the caller's scalar.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct Principal {
    pub mean: Vec<f64>,
    /// Eigenvalues of the sample covariance, descending.
    pub variances: Vec<f64>,
    /// Unit eigenvectors matching `variances`; each has its largest-magnitude
    /// entry positive.
    pub components: Vec<Vec<f64>>,
}

/// Sample-covariance eigendecomposition of `rows`.
///
/// Ties in eigenvalues keep the solver's column order; sign is fixed so the
/// first largest-magnitude entry of every eigenvector is positive.
pub fn principal_components<F: Scalar>(rows: &[&[F]]) -> Result<Principal> {
    let n_rows = rows.len();
    if n_rows < 2 {
        return Err(Error::TooFewCompleteRows {
            needed: 2,
            found: n_rows,
        });
    }
    let dim = rows[0].len();
    let mut mean = vec![0.0; dim];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r.iter()) {
            *m += v.as_f64();
        }
    }
    for m in &mut mean {
        *m /= n_rows as f64;
    }
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for r in rows {
        let centered: Vec<f64> = r.iter().zip(&mean).map(|(v, m)| v.as_f64() - m).collect();
        for a in 0..dim {
            for b in a..dim {
                cov[(a, b)] += centered[a] * centered[b];
            }
        }
    }
    for a in 0..dim {
        for b in a..dim {
            let v = cov[(a, b)] / (n_rows - 1) as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
    });
    let mut variances = Vec::with_capacity(dim);
    let mut components = Vec::with_capacity(dim);
    for &c in &order {
        let mut v: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
        let mut pivot = 0;
        for (i, x) in v.iter().enumerate() {
            if x.abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        variances.push(eig.eigenvalues[c].max(0.0));
        components.push(v);
    }
    Ok(Principal {
        mean,
        variances,
        components,
    })
}

/// Index of the first indicator with zero variance, if any.
pub(crate) fn zero_variance_indicator<F: Scalar>(rows: &[&[F]]) -> Option<usize> {
    let dim = rows.first()?.len();
    (0..dim).find(|&k| rows.iter().all(|r| r[k] == rows[0][k]))
}
