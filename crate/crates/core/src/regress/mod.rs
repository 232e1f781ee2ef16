//! Sparse coefficient fitting and candidate scoring.
//!
//! Coefficients come from sequentially thresholded ridge regression (STRidge):
//! solve the ridge problem `min ‖Φξ − y‖² + λ‖ξ‖²` on the active columns, zero
//! every coefficient below `tol`, and repeat on the survivors until the active
//! set stops changing. A fitted forest is scored with
//! `AIC = 2k + 2 ln(MSE)`, where `k` counts the non-zero coefficients.

mod ridge;

pub use ridge::{ridge_solve, Gram};

use ndarray::Array1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ConfigError;
use crate::eval::{FeatureMatrix, FieldColumn};

/// Smallest MSE fed to the logarithm.
pub const MSE_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegressError {
    #[error("column {0} contains non-finite values")]
    NonFiniteColumn(usize),
    #[error("target contains non-finite values")]
    NonFiniteTarget,
    #[error("{rows} rows cannot determine {cols} coefficients")]
    TooFewRows { rows: usize, cols: usize },
    #[error("target has {target} rows, features have {features}")]
    RowMismatch { target: usize, features: usize },
    #[error("normal equations are singular")]
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionParams {
    /// Ridge penalty.
    pub lambda: f64,
    /// Hard threshold applied to coefficient magnitudes.
    pub tol: f64,
    /// Cap on threshold-and-refit sweeps.
    pub max_sweeps: usize,
    /// Scale columns to unit 2-norm before solving; `tol` then applies on that scale.
    pub normalize_columns: bool,
}

impl Default for RegressionParams {
    fn default() -> Self {
        RegressionParams {
            lambda: 1e-5,
            tol: 1e-2,
            max_sweeps: 25,
            normalize_columns: true,
        }
    }
}

impl RegressionParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(ConfigError::invalid("lambda", "must be finite and >= 0"));
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(ConfigError::invalid("tol", "must be finite and > 0"));
        }
        if self.max_sweeps < 1 {
            return Err(ConfigError::invalid("max_sweeps", "must be at least 1"));
        }
        Ok(())
    }
}

/// Fit and fitness of one forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    /// One coefficient per tree, zero for pruned terms.
    pub xi: Vec<f64>,
    /// Number of non-zero coefficients.
    pub k: usize,
    pub mse: f64,
    pub aic: f64,
    pub valid: bool,
}

impl CandidateScore {
    pub fn invalid(n_terms: usize) -> Self {
        CandidateScore {
            xi: vec![0.0; n_terms],
            k: 0,
            mse: f64::INFINITY,
            aic: f64::INFINITY,
            valid: false,
        }
    }

    /// AIC used for ranking; invalid candidates rank last.
    pub fn rank_aic(&self) -> f64 {
        if self.valid {
            self.aic
        } else {
            f64::INFINITY
        }
    }
}

pub fn aic(k: usize, mse: f64) -> f64 {
    2.0 * k as f64 + 2.0 * mse.max(MSE_FLOOR).ln()
}

fn check_inputs(phi: &FeatureMatrix, y: &FieldColumn) -> Result<(), RegressError> {
    if let Some(&i) = phi.non_finite_columns().first() {
        return Err(RegressError::NonFiniteColumn(i));
    }
    if !y.is_finite() {
        return Err(RegressError::NonFiniteTarget);
    }
    if phi.n_cols() > 0 && y.len() != phi.n_rows {
        return Err(RegressError::RowMismatch {
            target: y.len(),
            features: phi.n_rows,
        });
    }
    if y.len() < phi.n_cols() {
        return Err(RegressError::TooFewRows {
            rows: y.len(),
            cols: phi.n_cols(),
        });
    }
    Ok(())
}

/// Sequentially thresholded ridge regression.
///
/// Returns a full-length coefficient vector, zero outside the final active set
/// (all zeros if every term was thresholded away).
pub fn stridge(
    phi: &FeatureMatrix,
    y: &FieldColumn,
    p: &RegressionParams,
) -> Result<Array1<f64>, RegressError> {
    check_inputs(phi, y)?;
    let gram = Gram::new(phi, y);
    stridge_gram(&gram, p)
}

/// STRidge on precomputed normal-equation blocks.
pub fn stridge_gram(gram: &Gram, p: &RegressionParams) -> Result<Array1<f64>, RegressError> {
    let k = gram.n_cols();
    let mut xi = Array1::zeros(k);
    let mut active: Vec<usize> = (0..k).filter(|&i| gram.norm(i) > 0.0).collect();
    for sweep in 0..p.max_sweeps {
        if active.is_empty() {
            return Ok(Array1::zeros(k));
        }
        let sol = gram.solve(&active, p.lambda, p.normalize_columns)?;
        let kept: Vec<usize> = active
            .iter()
            .zip(sol.iter())
            .filter(|&(&i, &c)| {
                let scaled = if p.normalize_columns {
                    c * gram.norm(i)
                } else {
                    c
                };
                scaled.abs() >= p.tol
            })
            .map(|(&i, _)| i)
            .collect();
        if kept.len() == active.len() || sweep + 1 == p.max_sweeps {
            xi.fill(0.0);
            for (&i, &c) in active.iter().zip(sol.iter()) {
                xi[i] = c;
            }
            if kept.len() == active.len() {
                return Ok(xi);
            }
        }
        active = kept;
    }
    Ok(xi)
}

/// Sum of squared residuals of `Φξ` against `y`, divided by the row count.
pub fn mean_squared_error(phi: &FeatureMatrix, y: &FieldColumn, xi: &Array1<f64>) -> f64 {
    let mut resid = y.values.clone();
    for (col, &c) in phi.columns.iter().zip(xi.iter()) {
        if c != 0.0 {
            resid.scaled_add(-c, &col.values);
        }
    }
    resid.dot(&resid) / y.len() as f64
}

/// Fits a forest's feature matrix against `y` and computes its AIC.
///
/// Non-finite columns, a failed solve, or an all-zero fit yield an invalid
/// score with infinite AIC.
pub fn score(phi: &FeatureMatrix, y: &FieldColumn, p: &RegressionParams) -> CandidateScore {
    let xi = match stridge(phi, y, p) {
        Ok(xi) => xi,
        Err(_) => return CandidateScore::invalid(phi.n_cols()),
    };
    let k = xi.iter().filter(|&&c| c != 0.0).count();
    if k == 0 {
        return CandidateScore::invalid(phi.n_cols());
    }
    let mse = mean_squared_error(phi, y, &xi);
    if !mse.is_finite() {
        return CandidateScore::invalid(phi.n_cols());
    }
    CandidateScore {
        xi: xi.to_vec(),
        k,
        mse,
        aic: aic(k, mse),
        valid: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    pub(crate) fn matrix(cols: Vec<Vec<f64>>) -> FeatureMatrix {
        let labels = (0..cols.len()).map(|i| format!("c{i}")).collect();
        FeatureMatrix::new(
            cols.into_iter()
                .map(|c| Arc::new(FieldColumn::new(Array1::from(c))))
                .collect(),
            labels,
        )
    }

    #[test]
    fn aic_arithmetic() {
        assert!((aic(2, (-8.0f64).exp()) - (-12.0)).abs() < 1e-12);
        assert_eq!(aic(1, 0.0), 2.0 + 2.0 * MSE_FLOOR.ln());
    }

    #[test]
    fn aic_is_monotone() {
        assert!(aic(2, 1e-3) < aic(2, 2e-3));
        assert!(aic(2, 1e-3) < aic(3, 1e-3));
    }

    #[test]
    fn exact_term_survives_orthogonal_decoys() {
        let n = 64;
        let base: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.37).sin() + 0.5).collect();
        // decoys: alternating-sign patterns orthogonal to each other and to base
        let mut decoys = Vec::new();
        for period in [2usize, 4, 8] {
            let d: Vec<f64> = (0..n)
                .map(|i| {
                    if (i / (period / 2)) % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .collect();
            decoys.push(d);
        }
        // project base onto the orthogonal complement of the decoys
        let mut b = base.clone();
        for d in &decoys {
            let c: f64 = b.iter().zip(d).map(|(x, y)| x * y).sum::<f64>()
                / d.iter().map(|v| v * v).sum::<f64>();
            for (bi, di) in b.iter_mut().zip(d) {
                *bi -= c * di;
            }
        }
        let y: Vec<f64> = b.iter().map(|v| 2.0 * v).collect();
        let mut cols = vec![b];
        cols.extend(decoys);
        let phi = matrix(cols);
        let p = RegressionParams {
            tol: 0.1,
            ..RegressionParams::default()
        };
        let xi = stridge(&phi, &FieldColumn::new(Array1::from(y)), &p).unwrap();
        assert!((xi[0] - 2.0).abs() < 1e-4, "{xi}");
        assert_eq!(&xi.to_vec()[1..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_forest_is_invalid() {
        let phi = matrix(vec![vec![0.0; 10]]);
        let y = FieldColumn::new(Array1::linspace(0.0, 1.0, 10));
        let s = score(&phi, &y, &RegressionParams::default());
        assert!(!s.valid);
        assert_eq!(s.aic, f64::INFINITY);
        assert_eq!(s.k, 0);
    }

    #[test]
    fn non_finite_column_is_invalid() {
        let phi = matrix(vec![vec![1.0, f64::NAN, 2.0, 3.0]]);
        let y = FieldColumn::new(Array1::from(vec![1.0, 2.0, 3.0, 4.0]));
        assert_eq!(
            stridge(&phi, &y, &RegressionParams::default()),
            Err(RegressError::NonFiniteColumn(0))
        );
        assert!(!score(&phi, &y, &RegressionParams::default()).valid);
    }

    #[test]
    fn perfect_fit_has_finite_aic() {
        let c: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y = FieldColumn::new(Array1::from(c.iter().map(|v| 3.0 * v).collect::<Vec<_>>()));
        let p = RegressionParams {
            lambda: 0.0,
            ..RegressionParams::default()
        };
        let s = score(&matrix(vec![c]), &y, &p);
        assert!(s.valid);
        assert!(s.aic.is_finite());
        assert!(s.aic <= aic(1, 1e-20));
    }

    #[test]
    fn params_validation() {
        assert!(RegressionParams::default().validate().is_ok());
        let bad = RegressionParams {
            tol: 0.0,
            ..RegressionParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = RegressionParams {
            lambda: -1.0,
            ..RegressionParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
