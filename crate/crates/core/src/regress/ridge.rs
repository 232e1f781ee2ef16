use nalgebra::{DMatrix, DVector};
use ndarray::Array1;

use super::{check_inputs, RegressError};
use crate::eval::{FeatureMatrix, FieldColumn};

/// Reciprocal condition estimate (from the Cholesky diagonal) below which a
/// system counts as singular.
const MIN_PIVOT_RATIO: f64 = 1e-7;

/// Normal-equation blocks `ΦᵀΦ` and `Φᵀy`, plus the column norms.
///
/// STRidge solves many sub-problems on subsets of the same columns; the blocks
/// are formed once and sliced per active set.
#[derive(Debug, Clone)]
pub struct Gram {
    g: DMatrix<f64>,
    b: DVector<f64>,
    norms: Vec<f64>,
}

impl Gram {
    pub fn new(phi: &FeatureMatrix, y: &FieldColumn) -> Self {
        let k = phi.n_cols();
        let mut g = DMatrix::zeros(k, k);
        let mut b = DVector::zeros(k);
        for i in 0..k {
            let ci = &phi.columns[i].values;
            for j in 0..=i {
                let v = ci.dot(&phi.columns[j].values);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
            b[i] = ci.dot(&y.values);
        }
        let norms = (0..k).map(|i| g[(i, i)].sqrt()).collect();
        Gram { g, b, norms }
    }

    pub fn n_cols(&self) -> usize {
        self.norms.len()
    }

    /// 2-norm of column `i`.
    pub fn norm(&self, i: usize) -> f64 {
        self.norms[i]
    }

    /// Solves `(ΦₐᵀΦₐ + λI) ξ = Φₐᵀy` on the `active` columns, returning raw-scale
    /// coefficients in the order of `active`.
    ///
    /// With `normalize`, columns are scaled to unit norm before the penalty is
    /// added and the coefficients are scaled back afterwards.
    pub fn solve(
        &self,
        active: &[usize],
        lambda: f64,
        normalize: bool,
    ) -> Result<Vec<f64>, RegressError> {
        let m = active.len();
        if m == 0 {
            return Ok(Vec::new());
        }
        let scale: Vec<f64> = active
            .iter()
            .map(|&i| if normalize { 1.0 / self.norms[i] } else { 1.0 })
            .collect();
        let mut a = DMatrix::from_fn(m, m, |r, c| {
            self.g[(active[r], active[c])] * scale[r] * scale[c]
        });
        for r in 0..m {
            a[(r, r)] += lambda;
        }
        let rhs = DVector::from_fn(m, |r, _| self.b[active[r]] * scale[r]);
        if a.iter().any(|v| !v.is_finite()) || rhs.iter().any(|v| !v.is_finite()) {
            return Err(RegressError::Singular);
        }
        let chol = a.cholesky().ok_or(RegressError::Singular)?;
        let l = chol.l_dirty();
        let diag: Vec<f64> = (0..m).map(|r| l[(r, r)]).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min > MIN_PIVOT_RATIO * max) {
            return Err(RegressError::Singular);
        }
        let sol = chol.solve(&rhs);
        Ok(sol.iter().zip(&scale).map(|(v, s)| v * s).collect())
    }
}

/// Ridge minimizer `argmin ‖Φξ − y‖² + λ‖ξ‖²` via the normal equations and a
/// Cholesky factorization.
///
/// With `normalize`, all-zero columns are left out of the solve and get a zero
/// coefficient.
pub fn ridge_solve(
    phi: &FeatureMatrix,
    y: &FieldColumn,
    lambda: f64,
    normalize: bool,
) -> Result<Array1<f64>, RegressError> {
    check_inputs(phi, y)?;
    let gram = Gram::new(phi, y);
    let active: Vec<usize> = (0..gram.n_cols())
        .filter(|&i| !normalize || gram.norm(i) > 0.0)
        .collect();
    let sol = gram.solve(&active, lambda, normalize)?;
    let mut xi = Array1::zeros(gram.n_cols());
    for (&i, v) in active.iter().zip(sol) {
        xi[i] = v;
    }
    Ok(xi)
}
