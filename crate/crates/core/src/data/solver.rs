use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ConfigError;
use crate::eval::{make_dataset, Dataset, DatasetError, DatasetInfo};

/// Safety factor in the dispersive step bound `dt ≤ C·dx³/|b|`.
///
/// RK4 with the central third-difference stencil is stable up to roughly
/// `1.09·dx³/|b|`.
pub const DISPERSIVE_C: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Burgers,
    Kdv,
    ChafeeInfante,
    PdeDivide,
    PdeCompound,
}

impl Problem {
    pub const ALL: [Problem; 5] = [
        Problem::Burgers,
        Problem::Kdv,
        Problem::ChafeeInfante,
        Problem::PdeDivide,
        Problem::PdeCompound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Problem::Burgers => "burgers",
            Problem::Kdv => "kdv",
            Problem::ChafeeInfante => "chafee_infante",
            Problem::PdeDivide => "pde_divide",
            Problem::PdeCompound => "pde_compound",
        }
    }

    pub fn boundary(self) -> Boundary {
        match self {
            Problem::Burgers | Problem::Kdv => Boundary::Periodic,
            _ => Boundary::Dirichlet,
        }
    }

    /// The governing equation in display form, with the preset's parameter names.
    pub fn equation(self) -> &'static str {
        match self {
            Problem::Burgers => "u_t = -u*u_x + nu*u_xx",
            Problem::Kdv => "u_t = a*u*u_x + b*u_xxx",
            Problem::ChafeeInfante => "u_t = u_xx - a*(u - u^3)",
            Problem::PdeDivide => "u_t = -u_x/x + 0.25*u_xx",
            Problem::PdeCompound => "u_t = (u*u_x)_x",
        }
    }

    fn initial_condition(self, x: f64) -> f64 {
        match self {
            Problem::Burgers | Problem::Kdv => (PI * x).cos(),
            Problem::ChafeeInfante => {
                (PI * x / 3.0).sin() * (1.0 + 0.5 * (2.0 * PI * x / 3.0).cos())
            }
            Problem::PdeDivide | Problem::PdeCompound => -(PI * x).sin(),
        }
    }

    fn initial_condition_label(self) -> &'static str {
        match self {
            Problem::Burgers | Problem::Kdv => "cos(pi*x)",
            Problem::ChafeeInfante => "sin(pi*x/3)*(1+0.5*cos(2*pi*x/3))",
            Problem::PdeDivide | Problem::PdeCompound => "-sin(pi*x)",
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown problem `{0}` (expected one of burgers, kdv, chafee_infante, pde_divide, pde_compound)")]
pub struct UnknownProblem(pub String);

impl FromStr for Problem {
    type Err = UnknownProblem;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Problem::ALL
            .into_iter()
            .find(|p| p.name() == norm)
            .ok_or_else(|| UnknownProblem(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// `x ∈ [x_min, x_max)`, the last point wraps onto the first.
    Periodic,
    /// `x ∈ [x_min, x_max]` with `u = 0` on both end points.
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ForwardEuler,
    Rk4,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::ForwardEuler => "forward_euler",
            Scheme::Rk4 => "rk4",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unstable time step: dt = {dt:e} exceeds the {limit} bound {bound:e}")]
    Unstable {
        limit: &'static str,
        dt: f64,
        bound: f64,
    },
    #[error("solution became non-finite by internal step {step}")]
    BlowUp { step: usize },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Grid, time stepping, and physical parameters of one benchmark solve.
///
/// The stored grid has `nx × nt_store` points. The solver steps on a grid that
/// is `refine` times finer in space and keeps every `refine`-th point and every
/// `subsample_every`-th step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub problem: Problem,
    pub nx: usize,
    pub nt_store: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub t_max: f64,
    pub dt_internal: f64,
    pub subsample_every: usize,
    pub refine: usize,
    pub scheme: Scheme,
    pub params: BTreeMap<String, f64>,
}

/// Named stability limit on the internal time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLimit {
    pub name: &'static str,
    pub bound: f64,
}

/// Default configuration for each benchmark.
pub fn preset(problem: Problem) -> SolverConfig {
    let params = |pairs: &[(&str, f64)]| pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect();
    let mut cfg = match problem {
        Problem::Burgers => SolverConfig {
            problem,
            nx: 256,
            nt_store: 201,
            x_min: -8.0,
            x_max: 8.0,
            t_max: 0.0,
            dt_internal: 1e-3,
            subsample_every: 50,
            refine: 4,
            scheme: Scheme::ForwardEuler,
            params: params(&[("nu", 0.1)]),
        },
        Problem::Kdv => SolverConfig {
            problem,
            nx: 512,
            nt_store: 201,
            x_min: -1.0,
            x_max: 1.0,
            t_max: 0.0,
            dt_internal: 1e-5,
            subsample_every: 500,
            refine: 1,
            scheme: Scheme::Rk4,
            params: params(&[("a", -1.0), ("b", -0.0025)]),
        },
        Problem::ChafeeInfante => SolverConfig {
            problem,
            nx: 301,
            nt_store: 200,
            x_min: 0.0,
            x_max: 3.0,
            t_max: 0.0,
            dt_internal: 1e-5,
            subsample_every: 200,
            refine: 1,
            scheme: Scheme::ForwardEuler,
            params: params(&[("a", 1.0)]),
        },
        Problem::PdeDivide | Problem::PdeCompound => SolverConfig {
            problem,
            nx: 100,
            nt_store: 251,
            x_min: 1.0,
            x_max: 2.0,
            t_max: 0.0,
            dt_internal: 1e-5,
            subsample_every: 1000,
            refine: 1,
            scheme: Scheme::ForwardEuler,
            params: BTreeMap::new(),
        },
    };
    cfg.sync_t_max();
    cfg
}

impl SolverConfig {
    /// Spacing of the stored grid.
    pub fn dx(&self) -> f64 {
        match self.problem.boundary() {
            Boundary::Periodic => (self.x_max - self.x_min) / self.nx as f64,
            Boundary::Dirichlet => (self.x_max - self.x_min) / (self.nx - 1) as f64,
        }
    }

    pub fn dx_internal(&self) -> f64 {
        self.dx() / self.refine as f64
    }

    pub fn dt_store(&self) -> f64 {
        self.dt_internal * self.subsample_every as f64
    }

    pub fn internal_steps(&self) -> usize {
        (self.nt_store - 1) * self.subsample_every
    }

    /// Sets `t_max` to the end of the stored time window.
    pub fn sync_t_max(&mut self) {
        self.t_max = self.internal_steps() as f64 * self.dt_internal;
    }

    pub fn param(&self, name: &str) -> Result<f64, ConfigError> {
        self.params.get(name).copied().ok_or_else(|| {
            ConfigError::invalid("params", format!("missing `{name}` for {}", self.problem))
        })
    }

    fn internal_nx(&self) -> usize {
        match self.problem.boundary() {
            Boundary::Periodic => self.nx * self.refine,
            Boundary::Dirichlet => (self.nx - 1) * self.refine + 1,
        }
    }

    fn internal_x(&self) -> Vec<f64> {
        let h = self.dx_internal();
        (0..self.internal_nx())
            .map(|j| self.x_min + j as f64 * h)
            .collect()
    }

    /// Initial profile on the internal grid, with Dirichlet end points set to 0.
    pub fn initial_profile(&self) -> Vec<f64> {
        let mut u: Vec<f64> = self
            .internal_x()
            .into_iter()
            .map(|x| self.problem.initial_condition(x))
            .collect();
        if self.problem.boundary() == Boundary::Dirichlet {
            let n = u.len();
            u[0] = 0.0;
            u[n - 1] = 0.0;
        }
        u
    }

    fn check_shape(&self) -> Result<(), ConfigError> {
        if self.nx < 5 {
            return Err(ConfigError::invalid("nx", "must be at least 5"));
        }
        if self.nt_store < 5 {
            return Err(ConfigError::invalid("nt", "must be at least 5"));
        }
        if self.refine < 1 {
            return Err(ConfigError::invalid("refine", "must be at least 1"));
        }
        if self.subsample_every < 1 {
            return Err(ConfigError::invalid(
                "subsample_every",
                "must be at least 1",
            ));
        }
        if !(self.x_max > self.x_min) || !self.x_min.is_finite() || !self.x_max.is_finite() {
            return Err(ConfigError::invalid("x range", "need finite x_min < x_max"));
        }
        if !(self.dt_internal > 0.0) || !self.dt_internal.is_finite() {
            return Err(ConfigError::invalid(
                "dt_internal",
                "must be finite and > 0",
            ));
        }
        let t_end = self.internal_steps() as f64 * self.dt_internal;
        if (t_end - self.t_max).abs() > 1e-9 * self.t_max.abs().max(1.0) {
            return Err(ConfigError::invalid(
                "t_max",
                format!(
                    "{} does not equal (nt - 1) * subsample_every * dt = {t_end}",
                    self.t_max
                ),
            ));
        }
        if self.problem == Problem::PdeDivide && self.x_min <= 0.0 {
            return Err(ConfigError::invalid("x range", "pde_divide needs x > 0"));
        }
        Ok(())
    }

    /// Largest |u| the solution can reach, bounded by the initial data.
    fn amplitude(&self) -> f64 {
        self.initial_profile()
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Step-size limits that apply to this configuration.
    pub fn step_limits(&self) -> Result<Vec<StepLimit>, ConfigError> {
        let h = self.dx_internal();
        let diffusive = |d: f64| StepLimit {
            name: "diffusive dx^2/(2D)",
            bound: h * h / (2.0 * d),
        };
        // forward Euler on central advection is only damped by the diffusion
        let advective = |d: f64, v: f64| StepLimit {
            name: "advection-diffusion 2D/v^2",
            bound: 2.0 * d / (v * v),
        };
        let amp = self.amplitude();
        let mut limits = Vec::new();
        match self.problem {
            Problem::Burgers => {
                let nu = self.param("nu")?;
                if !(nu > 0.0) {
                    return Err(ConfigError::invalid("params", "nu must be > 0"));
                }
                limits.push(diffusive(nu));
                if self.scheme == Scheme::ForwardEuler && amp > 0.0 {
                    limits.push(advective(nu, amp));
                }
            }
            Problem::Kdv => {
                let b = self.param("b")?;
                self.param("a")?;
                if b == 0.0 {
                    return Err(ConfigError::invalid("params", "b must be non-zero"));
                }
                if self.scheme == Scheme::ForwardEuler {
                    limits.push(StepLimit {
                        name: "forward Euler with a dispersive term (unconditionally unstable)",
                        bound: 0.0,
                    });
                } else {
                    limits.push(StepLimit {
                        name: "dispersive C*dx^3/|b|",
                        bound: DISPERSIVE_C * h * h * h / b.abs(),
                    });
                }
            }
            Problem::ChafeeInfante => {
                self.param("a")?;
                limits.push(diffusive(1.0));
            }
            Problem::PdeDivide => {
                limits.push(diffusive(0.25));
                if self.scheme == Scheme::ForwardEuler {
                    limits.push(advective(0.25, 1.0 / self.x_min));
                }
            }
            Problem::PdeCompound => {
                if amp > 0.0 {
                    limits.push(diffusive(amp));
                }
            }
        }
        Ok(limits)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        self.check_shape()?;
        for lim in self.step_limits()? {
            if self.dt_internal > lim.bound {
                return Err(SolverError::Unstable {
                    limit: lim.name,
                    dt: self.dt_internal,
                    bound: lim.bound,
                });
            }
        }
        Ok(())
    }

    /// The same stored grid solved on a grid twice as fine in space, with the
    /// internal step divided by the smallest power of two (at least 2) that
    /// keeps it stable.
    pub fn refined(&self) -> SolverConfig {
        let mut cfg = self.clone();
        cfg.refine *= 2;
        let mut factor = 2;
        loop {
            cfg.dt_internal = self.dt_internal / factor as f64;
            cfg.subsample_every = self.subsample_every * factor;
            cfg.sync_t_max();
            if cfg.validate().is_ok() || factor >= 1 << 12 {
                return cfg;
            }
            factor *= 2;
        }
    }
}

const GHOST: usize = 2;

/// Central differences on a field padded with `GHOST` cells on each side.
struct Stencil {
    n: usize,
    periodic: bool,
    inv_h: f64,
}

impl Stencil {
    /// Copies `u` into `pad`, wrapping for periodic grids; Dirichlet ghosts stay 0.
    fn fill(&self, pad: &mut [f64], u: &[f64]) {
        let n = self.n;
        pad[GHOST..GHOST + n].copy_from_slice(u);
        if self.periodic {
            for g in 0..GHOST {
                pad[g] = u[n - GHOST + g];
                pad[GHOST + n + g] = u[g];
            }
        }
    }

    #[inline]
    fn d1(&self, p: &[f64], i: usize) -> f64 {
        let c = i + GHOST;
        (p[c + 1] - p[c - 1]) * 0.5 * self.inv_h
    }

    #[inline]
    fn d2(&self, p: &[f64], i: usize) -> f64 {
        let c = i + GHOST;
        (p[c + 1] - 2.0 * p[c] + p[c - 1]) * self.inv_h * self.inv_h
    }

    #[inline]
    fn d3(&self, p: &[f64], i: usize) -> f64 {
        let c = i + GHOST;
        (p[c + 2] - 2.0 * p[c + 1] + 2.0 * p[c - 1] - p[c - 2]) * 0.5 * self.inv_h.powi(3)
    }
}

/// Right-hand side of one problem on the internal grid.
struct Rhs {
    problem: Problem,
    st: Stencil,
    x: Vec<f64>,
    p1: f64,
    p2: f64,
    pad_u: Vec<f64>,
    pad_f: Vec<f64>,
    flux: Vec<f64>,
}

impl Rhs {
    fn new(cfg: &SolverConfig) -> Result<Rhs, ConfigError> {
        let (p1, p2) = match cfg.problem {
            Problem::Burgers => (cfg.param("nu")?, 0.0),
            Problem::Kdv => (cfg.param("a")?, cfg.param("b")?),
            Problem::ChafeeInfante => (cfg.param("a")?, 0.0),
            Problem::PdeDivide | Problem::PdeCompound => (0.0, 0.0),
        };
        let n = cfg.internal_nx();
        Ok(Rhs {
            problem: cfg.problem,
            st: Stencil {
                n,
                periodic: cfg.problem.boundary() == Boundary::Periodic,
                inv_h: 1.0 / cfg.dx_internal(),
            },
            x: cfg.internal_x(),
            p1,
            p2,
            pad_u: vec![0.0; n + 2 * GHOST],
            pad_f: vec![0.0; n + 2 * GHOST],
            flux: vec![0.0; n],
        })
    }

    fn eval(&mut self, u: &[f64], out: &mut [f64]) {
        let n = self.st.n;
        let (lo, hi) = if self.st.periodic { (0, n) } else { (1, n - 1) };
        let st = &self.st;
        st.fill(&mut self.pad_u, u);
        let pu = &self.pad_u;
        match self.problem {
            Problem::Burgers | Problem::Kdv | Problem::PdeCompound => {
                // u*u_x = (u^2/2)_x and (u*u_x)_x = (u^2/2)_xx
                for (f, &v) in self.flux.iter_mut().zip(u) {
                    *f = 0.5 * v * v;
                }
                st.fill(&mut self.pad_f, &self.flux);
                let pf = &self.pad_f;
                for i in lo..hi {
                    out[i] = match self.problem {
                        Problem::Burgers => -st.d1(pf, i) + self.p1 * st.d2(pu, i),
                        Problem::Kdv => self.p1 * st.d1(pf, i) + self.p2 * st.d3(pu, i),
                        _ => st.d2(pf, i),
                    };
                }
            }
            Problem::ChafeeInfante => {
                for i in lo..hi {
                    out[i] = st.d2(pu, i) - self.p1 * (u[i] - u[i] * u[i] * u[i]);
                }
            }
            Problem::PdeDivide => {
                for i in lo..hi {
                    out[i] = -st.d1(pu, i) / self.x[i] + 0.25 * st.d2(pu, i);
                }
            }
        }
        if !self.st.periodic {
            out[0] = 0.0;
            out[n - 1] = 0.0;
        }
    }
}

struct Stepper {
    rhs: Rhs,
    scheme: Scheme,
    dt: f64,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Stepper {
    fn step(&mut self, u: &mut [f64]) {
        let dt = self.dt;
        match self.scheme {
            Scheme::ForwardEuler => {
                self.rhs.eval(u, &mut self.k[0]);
                for (v, d) in u.iter_mut().zip(&self.k[0]) {
                    *v += dt * d;
                }
            }
            Scheme::Rk4 => {
                let [k1, k2, k3, k4] = &mut self.k;
                let tmp = &mut self.tmp;
                self.rhs.eval(u, k1);
                for ((t, &v), &d) in tmp.iter_mut().zip(u.iter()).zip(k1.iter()) {
                    *t = v + 0.5 * dt * d;
                }
                self.rhs.eval(tmp, k2);
                for ((t, &v), &d) in tmp.iter_mut().zip(u.iter()).zip(k2.iter()) {
                    *t = v + 0.5 * dt * d;
                }
                self.rhs.eval(tmp, k3);
                for ((t, &v), &d) in tmp.iter_mut().zip(u.iter()).zip(k3.iter()) {
                    *t = v + dt * d;
                }
                self.rhs.eval(tmp, k4);
                for (i, v) in u.iter_mut().enumerate() {
                    *v += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
    }
}

/// Integrates the configured problem and returns the stored grid as a dataset.
pub fn solve(cfg: &SolverConfig) -> Result<Dataset, SolverError> {
    cfg.validate()?;
    let n = cfg.internal_nx();
    let mut stepper = Stepper {
        rhs: Rhs::new(cfg)?,
        scheme: cfg.scheme,
        dt: cfg.dt_internal,
        k: std::array::from_fn(|_| vec![0.0; n]),
        tmp: vec![0.0; n],
    };
    let xs = cfg.internal_x();
    let x = Array1::from_shape_fn(cfg.nx, |i| xs[i * cfg.refine]);
    let t = Array1::from_shape_fn(cfg.nt_store, |j| {
        (j * cfg.subsample_every) as f64 * cfg.dt_internal
    });
    let mut u = cfg.initial_profile();
    let mut out = Array2::zeros((cfg.nx, cfg.nt_store));
    let store = |out: &mut Array2<f64>, u: &[f64], j: usize| {
        for i in 0..cfg.nx {
            out[[i, j]] = u[i * cfg.refine];
        }
    };
    store(&mut out, &u, 0);
    for j in 1..cfg.nt_store {
        for _ in 0..cfg.subsample_every {
            stepper.step(&mut u);
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::BlowUp {
                step: j * cfg.subsample_every,
            });
        }
        store(&mut out, &u, j);
    }
    let info = DatasetInfo {
        problem: cfg.problem.name().to_string(),
        params: cfg.params.iter().map(|(k, v)| (k.clone(), *v)).collect(),
        notes: vec![
            ("equation".into(), cfg.problem.equation().into()),
            ("ic".into(), cfg.problem.initial_condition_label().into()),
            (
                "bc".into(),
                match cfg.problem.boundary() {
                    Boundary::Periodic => "periodic".into(),
                    Boundary::Dirichlet => "dirichlet u=0".into(),
                },
            ),
            ("scheme".into(), cfg.scheme.name().into()),
            ("dt_internal".into(), format!("{:e}", cfg.dt_internal)),
            ("refine".into(), cfg.refine.to_string()),
        ],
    };
    Ok(make_dataset(out, x, t)?.with_info(info))
}
