//! Second-order finite differences along one axis of a grid field.

use ndarray::{Array2, ArrayView2, ArrayViewMut1, Zip};

use super::DatasetError;

/// Fewest points along the differentiated axis.
pub const MIN_POINTS: usize = 5;

/// Derivative order supported by the stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    First,
    Second,
}

impl Order {
    pub fn from_int(n: u8) -> Option<Order> {
        match n {
            1 => Some(Order::First),
            2 => Some(Order::Second),
            _ => None,
        }
    }
}

/// Writes `Σ c_k · f.row(i_k)` into `out`.
fn combine(mut out: ArrayViewMut1<f64>, f: &ArrayView2<f64>, terms: &[(f64, usize)]) {
    let (c0, i0) = terms[0];
    Zip::from(&mut out)
        .and(f.row(i0))
        .for_each(|o, &v| *o = c0 * v);
    for &(c, i) in &terms[1..] {
        Zip::from(&mut out)
            .and(f.row(i))
            .for_each(|o, &v| *o += c * v);
    }
}

/// Differentiates along axis 0 of `f`, one whole row at a time.
fn diff_rows(f: ArrayView2<f64>, h: f64, order: Order) -> Array2<f64> {
    let n = f.nrows();
    let mut out = Array2::zeros(f.raw_dim());
    match order {
        Order::First => {
            let s = 1.0 / (2.0 * h);
            combine(out.row_mut(0), &f, &[(-3.0 * s, 0), (4.0 * s, 1), (-s, 2)]);
            for i in 1..n - 1 {
                combine(out.row_mut(i), &f, &[(s, i + 1), (-s, i - 1)]);
            }
            combine(
                out.row_mut(n - 1),
                &f,
                &[(3.0 * s, n - 1), (-4.0 * s, n - 2), (s, n - 3)],
            );
        }
        Order::Second => {
            let s = 1.0 / (h * h);
            combine(
                out.row_mut(0),
                &f,
                &[(2.0 * s, 0), (-5.0 * s, 1), (4.0 * s, 2), (-s, 3)],
            );
            for i in 1..n - 1 {
                combine(out.row_mut(i), &f, &[(s, i + 1), (-2.0 * s, i), (s, i - 1)]);
            }
            combine(
                out.row_mut(n - 1),
                &f,
                &[
                    (2.0 * s, n - 1),
                    (-5.0 * s, n - 2),
                    (4.0 * s, n - 3),
                    (-s, n - 4),
                ],
            );
        }
    }
    out
}

fn check_len(n: usize, axis: &'static str) -> Result<(), DatasetError> {
    if n < MIN_POINTS {
        return Err(DatasetError::TooFewPoints {
            axis,
            found: n,
            min: MIN_POINTS,
        });
    }
    Ok(())
}

/// Spatial derivative of a `(nx, nt)` field, applied per time slice: central
/// stencils inside, one-sided second-order stencils on the two edge lines.
pub fn diff_x(field: &Array2<f64>, dx: f64, order: Order) -> Result<Array2<f64>, DatasetError> {
    check_len(field.nrows(), "x")?;
    Ok(diff_rows(field.view(), dx, order))
}

/// Temporal derivative of a `(nx, nt)` field with the same stencils, applied per spatial point.
pub fn diff_t(field: &Array2<f64>, dt: f64, order: Order) -> Result<Array2<f64>, DatasetError> {
    check_len(field.ncols(), "t")?;
    let d = diff_rows(field.t(), dt, order);
    Ok(d.reversed_axes().as_standard_layout().into_owned())
}
