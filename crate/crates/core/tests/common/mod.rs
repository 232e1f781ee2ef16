//! Shared fixtures and independent oracles for the integration suites.
//!
//! Nothing here calls the crate's regression code: least squares goes through
//! nalgebra's SVD so that it can referee STRidge.

#![allow(dead_code)]

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use pdeforest::data::{preset, solve, Problem};
use pdeforest::eval::{evaluate_tree, make_dataset, Dataset};
use pdeforest::expr::{parse_forest, Forest, Tree};

/// A value computed at most once per key, shared across test threads.
pub type Slot<T> = Arc<OnceLock<Arc<T>>>;

/// Prints a verdict line outside the test harness's capture.
pub fn report(label: &str, pass: bool, detail: &str) {
    let line = format!("[{}] {label}: {detail}", if pass { "PASS" } else { "FAIL" });
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}

/// Preset datasets, solved once per test binary.
pub fn dataset(p: Problem) -> Arc<Dataset> {
    static CACHE: OnceLock<Mutex<HashMap<Problem, Slot<Dataset>>>> = OnceLock::new();
    let slot = {
        let mut map = CACHE.get_or_init(Default::default).lock().unwrap();
        Arc::clone(map.entry(p).or_default())
    };
    Arc::clone(slot.get_or_init(|| Arc::new(solve(&preset(p)).expect("preset solves"))))
}

/// The governing right-hand side of each problem as a forest.
pub fn target_forest(p: Problem) -> Forest {
    let s = match p {
        Problem::Burgers => "{ * u ux } & { d2 u x }",
        Problem::Kdv => "{ d2 ux x } & { * u ux }",
        Problem::ChafeeInfante => "{ d2 u x } & { u } & { ^3 u }",
        Problem::PdeDivide => "{ / ux x } & { d2 u x }",
        Problem::PdeCompound => "{ d (* u ux) x }",
    };
    parse_forest(s).expect("target parses")
}

pub fn to_dmatrix(cols: &[Array1<f64>]) -> DMatrix<f64> {
    let n = cols.first().map_or(0, |c| c.len());
    DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}

/// Least-squares fit by SVD; returns coefficients and the residual sum of squares.
pub fn lstsq(a: &DMatrix<f64>, y: &DVector<f64>) -> (DVector<f64>, f64) {
    if a.ncols() == 0 {
        return (DVector::zeros(0), y.norm_squared());
    }
    let coef = a
        .clone()
        .svd(true, true)
        .solve(y, 1e-12)
        .expect("svd solve");
    let rss = (y - a * &coef).norm_squared();
    (coef, rss)
}

/// Support chosen by exhaustive search over all column subsets under BIC,
/// `n·ln(RSS/n) + k·ln(n)`.
pub fn best_subset_bic(a: &DMatrix<f64>, y: &DVector<f64>) -> Vec<usize> {
    let (n, p) = a.shape();
    let mut best = (f64::INFINITY, Vec::new());
    for mask in 0u32..(1 << p) {
        let cols: Vec<usize> = (0..p).filter(|j| mask & (1 << j) != 0).collect();
        let sub = a.select_columns(cols.iter());
        let (_, rss) = lstsq(&sub, y);
        let bic =
            n as f64 * (rss.max(1e-300) / n as f64).ln() + cols.len() as f64 * (n as f64).ln();
        if bic < best.0 {
            best = (bic, cols);
        }
    }
    best.1
}

/// Norm of the part of `v` outside the span of `basis`, relative to `|v|`.
pub fn projection_residual(v: &DVector<f64>, basis: &DMatrix<f64>) -> f64 {
    let (_, rss) = lstsq(basis, v);
    rss.sqrt() / v.norm().max(f64::MIN_POSITIVE)
}

/// Smooth fields on `x ∈ [1, 2]` with no special identities among their
/// derivatives and `u_x` bounded away from zero.
pub fn probe_datasets() -> Vec<Dataset> {
    let fields: [fn(f64, f64) -> f64; 2] = [
        |x, t| 2.0 + x + 0.2 * (1.3 * x + t).sin(),
        |x, t| (0.4 * x).exp() * (1.5 + 0.2 * (2.1 * x - 0.7 * t).cos()) + 0.3 * x * x,
    ];
    let (nx, nt) = (201, 41);
    let x = Array1::linspace(1.0, 2.0, nx);
    let t = Array1::linspace(0.0, 1.0, nt);
    fields
        .iter()
        .map(|f| {
            let u = Array2::from_shape_fn((nx, nt), |(i, j)| f(x[i], t[j]));
            make_dataset(u, x.clone(), t.clone()).expect("probe grid")
        })
        .collect()
}

/// Share of `|Φξ|` carried by each term, `|ξ_i|·|φ_i| / |Φξ|`.
pub fn contributions(d: &Dataset, trees: &[Tree], xi: &[f64]) -> Vec<f64> {
    let cols: Vec<Array1<f64>> = trees
        .iter()
        .map(|t| evaluate_tree(t, d).values.clone())
        .collect();
    let phi = to_dmatrix(&cols);
    let fit = &phi * DVector::from_column_slice(xi);
    let total = fit.norm();
    cols.iter()
        .zip(xi)
        .map(|(c, w)| w.abs() * c.dot(c).sqrt() / total.max(f64::MIN_POSITIVE))
        .collect()
}

/// Terms below this share of the fitted right-hand side are ignored.
pub const DOMINANT_SHARE: f64 = 0.01;
/// Largest relative projection residual for two term sets to count as the same span.
pub const SPAN_TOL: f64 = 1e-3;

/// Checks that the dominant terms of a fitted forest span the same function
/// space as `target`, term for term, on every probe field.
///
/// Two sets agree when they have the same size and every column of each lies
/// in the span of the other. Algebraic rewrites such as `0.5·d2(u²)` for
/// `d(u·u_x)` therefore pass.
pub fn structure_verdict(
    d: &Dataset,
    forest: &Forest,
    xi: &[f64],
    target: &Forest,
) -> Result<(), String> {
    let share = contributions(d, forest.trees(), xi);
    let dominant: Vec<&Tree> = forest
        .trees()
        .iter()
        .zip(&share)
        .filter(|(_, &s)| s >= DOMINANT_SHARE)
        .map(|(t, _)| t)
        .collect();
    if dominant.len() != target.len() {
        return Err(format!(
            "{} dominant terms, want {}",
            dominant.len(),
            target.len()
        ));
    }
    for probe in probe_datasets() {
        let eval = |ts: &[&Tree]| {
            to_dmatrix(
                &ts.iter()
                    .map(|t| evaluate_tree(t, &probe).values.clone())
                    .collect::<Vec<_>>(),
            )
        };
        let found = eval(&dominant);
        let want = eval(&target.trees().iter().collect::<Vec<_>>());
        for (a, b, what) in [
            (&found, &want, "found term outside target span"),
            (&want, &found, "target term not covered"),
        ] {
            for j in 0..a.ncols() {
                let r = projection_residual(&a.column(j).into_owned(), b);
                if r.is_nan() || r >= SPAN_TOL {
                    return Err(format!("{what} (residual {r:.2e})"));
                }
            }
        }
    }
    Ok(())
}
