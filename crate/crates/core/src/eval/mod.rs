//! Gridded observations and numerical evaluation of trees on them.

pub mod stencil;

use std::borrow::Cow;
use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView2, Zip};
use thiserror::Error;

use crate::expr::{to_display_string, BinaryOp, Forest, Node, Operand, Tree, UnaryOp};
pub use stencil::{diff_t, diff_x, Order};

/// Denominators smaller than this in magnitude are replaced by it.
pub const DIV_GUARD: f64 = 1e-10;

/// Grid lines dropped from each edge of both axes before flattening.
pub const DEFAULT_BOUNDARY_TRIM: usize = 2;

const AXIS_UNIFORM_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("u has shape {u_shape:?} but axes have lengths ({nx}, {nt})")]
    ShapeMismatch {
        u_shape: (usize, usize),
        nx: usize,
        nt: usize,
    },
    #[error("{axis} axis has {found} points, need at least {min}")]
    TooFewPoints {
        axis: &'static str,
        found: usize,
        min: usize,
    },
    #[error("{axis} axis is not strictly increasing with uniform spacing (at index {index})")]
    NonUniformAxis { axis: &'static str, index: usize },
    #[error("boundary trim {trim} leaves no interior on a ({nx}, {nt}) grid")]
    TrimTooLarge { trim: usize, nx: usize, nt: usize },
}

/// Descriptive metadata carried alongside the numbers (problem name, physical
/// parameters, free-form notes). It does not affect evaluation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetInfo {
    pub problem: String,
    pub params: Vec<(String, f64)>,
    pub notes: Vec<(String, String)>,
}

/// A field `u(x, t)` on a uniform grid, with cached `u_t` and `u_x`.
///
/// Arrays are indexed `[spatial index, time index]`.
#[derive(Debug, Clone)]
pub struct Dataset {
    u: Array2<f64>,
    x: Array1<f64>,
    t: Array1<f64>,
    ut: Array2<f64>,
    ux: Array2<f64>,
    x_grid: Array2<f64>,
    zeros: Array2<f64>,
    dx: f64,
    dt: f64,
    trim: usize,
    pub info: DatasetInfo,
}

fn uniform_step(axis: &Array1<f64>, name: &'static str) -> Result<f64, DatasetError> {
    let n = axis.len();
    let h = (axis[n - 1] - axis[0]) / (n - 1) as f64;
    if !(h > 0.0) || !h.is_finite() {
        return Err(DatasetError::NonUniformAxis {
            axis: name,
            index: 0,
        });
    }
    for i in 1..n {
        let step = axis[i] - axis[i - 1];
        if (step - h).abs() > AXIS_UNIFORM_RTOL * h.max(axis[i].abs()) {
            return Err(DatasetError::NonUniformAxis {
                axis: name,
                index: i,
            });
        }
    }
    Ok(h)
}

/// Builds a dataset and its derivative caches (`u_t` along t, `u_x` along x).
pub fn make_dataset(
    u: Array2<f64>,
    x: Array1<f64>,
    t: Array1<f64>,
) -> Result<Dataset, DatasetError> {
    let (nx, nt) = u.dim();
    if nx != x.len() || nt != t.len() {
        return Err(DatasetError::ShapeMismatch {
            u_shape: (nx, nt),
            nx: x.len(),
            nt: t.len(),
        });
    }
    for (axis, n) in [("x", nx), ("t", nt)] {
        if n < stencil::MIN_POINTS {
            return Err(DatasetError::TooFewPoints {
                axis,
                found: n,
                min: stencil::MIN_POINTS,
            });
        }
    }
    let dx = uniform_step(&x, "x")?;
    let dt = uniform_step(&t, "t")?;
    let u = u.as_standard_layout().into_owned();
    let ut = diff_t(&u, dt, Order::First)?;
    let ux = diff_x(&u, dx, Order::First)?;
    let x_grid = Array2::from_shape_fn((nx, nt), |(i, _)| x[i]);
    let zeros = Array2::zeros((nx, nt));
    let trim = DEFAULT_BOUNDARY_TRIM.min((nx - 1) / 2).min((nt - 1) / 2);
    Ok(Dataset {
        u,
        x,
        t,
        ut,
        ux,
        x_grid,
        zeros,
        dx,
        dt,
        trim,
        info: DatasetInfo::default(),
    })
}

impl Dataset {
    pub fn u(&self) -> &Array2<f64> {
        &self.u
    }
    pub fn x(&self) -> &Array1<f64> {
        &self.x
    }
    pub fn t(&self) -> &Array1<f64> {
        &self.t
    }
    pub fn ut(&self) -> &Array2<f64> {
        &self.ut
    }
    pub fn ux(&self) -> &Array2<f64> {
        &self.ux
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn nx(&self) -> usize {
        self.u.nrows()
    }
    pub fn nt(&self) -> usize {
        self.u.ncols()
    }
    pub fn boundary_trim(&self) -> usize {
        self.trim
    }

    pub fn with_info(mut self, info: DatasetInfo) -> Self {
        self.info = info;
        self
    }

    /// Sets how many edge lines are excluded from regression rows.
    pub fn with_boundary_trim(mut self, trim: usize) -> Result<Self, DatasetError> {
        if 2 * trim >= self.nx() || 2 * trim >= self.nt() {
            return Err(DatasetError::TrimTooLarge {
                trim,
                nx: self.nx(),
                nt: self.nt(),
            });
        }
        self.trim = trim;
        Ok(self)
    }

    /// Number of regression rows after trimming.
    pub fn n_rows(&self) -> usize {
        (self.nx() - 2 * self.trim) * (self.nt() - 2 * self.trim)
    }

    /// Drops the trimmed edge lines and flattens row-major (space-major).
    pub fn trim_flatten(&self, field: ArrayView2<f64>) -> Array1<f64> {
        let k = self.trim;
        let inner = field.slice(ndarray::s![k..self.nx() - k, k..self.nt() - k]);
        Array1::from_iter(inner.iter().copied())
    }
}

/// One evaluated term over the retained grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldColumn {
    pub values: Array1<f64>,
    /// Share of entries that are finite; below 1 the column is unusable.
    pub finite_fraction: f64,
}

impl FieldColumn {
    pub fn new(values: Array1<f64>) -> Self {
        let n = values.len();
        let finite = values.iter().filter(|v| v.is_finite()).count();
        let finite_fraction = if n == 0 {
            1.0
        } else {
            finite as f64 / n as f64
        };
        FieldColumn {
            values,
            finite_fraction,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.finite_fraction >= 1.0
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The design matrix Φ: one column per tree of a forest.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub columns: Vec<Arc<FieldColumn>>,
    pub n_rows: usize,
    pub term_labels: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(columns: Vec<Arc<FieldColumn>>, term_labels: Vec<String>) -> Self {
        assert_eq!(columns.len(), term_labels.len(), "one label per column");
        let n_rows = columns.first().map_or(0, |c| c.len());
        assert!(
            columns.iter().all(|c| c.len() == n_rows),
            "columns differ in length"
        );
        FeatureMatrix {
            columns,
            n_rows,
            term_labels,
        }
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    /// Indices of columns containing NaN or infinity.
    pub fn non_finite_columns(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&i| !self.columns[i].is_finite())
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        self.columns.iter().all(|c| c.is_finite())
    }
}

fn owned(c: Cow<'_, Array2<f64>>) -> Array2<f64> {
    c.into_owned()
}

fn eval_node<'a>(node: &Node, d: &'a Dataset) -> Cow<'a, Array2<f64>> {
    match node {
        Node::Leaf(o) => Cow::Borrowed(match o {
            Operand::U => &d.u,
            Operand::X => &d.x_grid,
            Operand::Ux => &d.ux,
            Operand::Zero => &d.zeros,
        }),
        Node::Unary(op, child) => {
            let mut a = owned(eval_node(child, d));
            match op {
                UnaryOp::Square => a.mapv_inplace(|v| v * v),
                UnaryOp::Cube => a.mapv_inplace(|v| v * v * v),
            }
            Cow::Owned(a)
        }
        Node::Binary(op, l, r) => {
            let left = eval_node(l, d);
            if op.is_derivative() {
                let order = if *op == BinaryOp::D1 {
                    Order::First
                } else {
                    Order::Second
                };
                return Cow::Owned(diff_x(&left, d.dx, order).expect("dataset has enough points"));
            }
            let right = eval_node(r, d);
            let mut a = owned(left);
            let z = Zip::from(&mut a).and(right.as_ref());
            match op {
                BinaryOp::Add => z.for_each(|a, &b| *a += b),
                BinaryOp::Sub => z.for_each(|a, &b| *a -= b),
                BinaryOp::Mul => z.for_each(|a, &b| *a *= b),
                BinaryOp::Div => z.for_each(|a, &b| *a /= guard(b)),
                BinaryOp::D1 | BinaryOp::D2 => unreachable!(),
            }
            Cow::Owned(a)
        }
    }
}

/// Replaces a near-zero denominator by `+DIV_GUARD`.
#[inline]
pub fn guard(den: f64) -> f64 {
    if den.abs() < DIV_GUARD {
        DIV_GUARD
    } else {
        den
    }
}

/// Evaluates a tree on the whole grid, without trimming.
pub fn evaluate_tree_grid(t: &Tree, d: &Dataset) -> Array2<f64> {
    eval_node(t.root(), d).into_owned()
}

/// Evaluates a tree on the full grid, then trims and flattens it.
///
/// Non-finite entries are kept and reported through `finite_fraction`.
pub fn evaluate_tree(t: &Tree, d: &Dataset) -> FieldColumn {
    let grid = eval_node(t.root(), d);
    FieldColumn::new(d.trim_flatten(grid.view()))
}

/// One column per tree in forest order, labelled with the display string.
pub fn build_feature_matrix(f: &Forest, d: &Dataset) -> FeatureMatrix {
    let columns = f
        .trees()
        .iter()
        .map(|t| Arc::new(evaluate_tree(t, d)))
        .collect();
    let labels = f.trees().iter().map(to_display_string).collect();
    FeatureMatrix::new(columns, labels)
}

/// The cached `u_t`, trimmed and flattened like [`evaluate_tree`].
pub fn ut_vector(d: &Dataset) -> FieldColumn {
    FieldColumn::new(d.trim_flatten(d.ut.view()))
}
