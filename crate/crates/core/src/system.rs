//! Plant models: the linear delay system, the scalar nonlinear benchmark and
//! user-supplied nonlinear dynamics.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::norm::{induced_norm, vec_norm};
use crate::tuner::LipschitzConstants;
use crate::window::HistoryWindow;

/// A discrete-time delay system `x(k+1) = f(x_k, u(k))` with static
/// feedback `u = p(x)`.
pub trait DelaySystem: Send + Sync {
    fn tau(&self) -> usize;
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    /// One step of the open-loop dynamics.
    fn step(&self, window: &HistoryWindow, u: &DVector<f64>) -> Result<DVector<f64>>;
    /// Feedback law `p`.
    fn feedback(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
}

fn check_window(window: &HistoryWindow, tau: usize, dim: usize) -> Result<()> {
    if window.tau() != tau {
        return Err(Error::DimensionMismatch {
            what: "history window length",
            expected: tau + 1,
            found: window.len(),
        });
    }
    if window.dim() != dim {
        return Err(Error::DimensionMismatch {
            what: "history window state",
            expected: dim,
            found: window.dim(),
        });
    }
    Ok(())
}

fn check_len(what: &'static str, v: &DVector<f64>, expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

/// `x(k+1) = A1 x(k) + A2 x(k - tau) + B u(k)`, `u = K x`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearDelaySystem {
    a1: DMatrix<f64>,
    a2: DMatrix<f64>,
    b: DMatrix<f64>,
    k: DMatrix<f64>,
    tau: usize,
}

impl LinearDelaySystem {
    pub fn new(
        a1: DMatrix<f64>,
        a2: DMatrix<f64>,
        b: DMatrix<f64>,
        k: DMatrix<f64>,
        tau: usize,
    ) -> Result<Self> {
        let n = a1.nrows();
        if n == 0 {
            return Err(Error::invalid("A1 must be non-empty"));
        }
        let shape = |what: &'static str, m: &DMatrix<f64>, rows: usize, cols: usize| {
            if m.nrows() != rows {
                return Err(Error::DimensionMismatch { what, expected: rows, found: m.nrows() });
            }
            if m.ncols() != cols {
                return Err(Error::DimensionMismatch { what, expected: cols, found: m.ncols() });
            }
            Ok(())
        };
        shape("A1", &a1, n, n)?;
        shape("A2", &a2, n, n)?;
        let m = b.ncols();
        if m == 0 {
            return Err(Error::invalid("B must have at least one column"));
        }
        shape("B", &b, n, m)?;
        shape("K", &k, m, n)?;
        let finite = [&a1, &a2, &b, &k].iter().all(|m| m.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(Error::invalid("system matrices must be finite"));
        }
        Ok(Self { a1, a2, b, k, tau })
    }

    /// Builds the system from row-major nested arrays.
    pub fn from_rows(
        a1: &[Vec<f64>],
        a2: &[Vec<f64>],
        b: &[Vec<f64>],
        k: &[Vec<f64>],
        tau: usize,
    ) -> Result<Self> {
        Self::new(
            matrix_from_rows("A1", a1)?,
            matrix_from_rows("A2", a2)?,
            matrix_from_rows("B", b)?,
            matrix_from_rows("K", k)?,
            tau,
        )
    }

    pub fn a1(&self) -> &DMatrix<f64> {
        &self.a1
    }
    pub fn a2(&self) -> &DMatrix<f64> {
        &self.a2
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn k(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn bk(&self) -> DMatrix<f64> {
        &self.b * &self.k
    }

    /// `A1 + BK`.
    pub fn closed_loop(&self) -> DMatrix<f64> {
        &self.a1 + self.bk()
    }

    /// `||I - A1||`, `||A2||`, `||BK||`: Lipschitz constants of `phi(0) - f(phi, Kx)`.
    pub fn residual_lipschitz(&self) -> (f64, f64, f64) {
        let n = self.a1.nrows();
        (
            induced_norm(&(DMatrix::identity(n, n) - &self.a1)),
            induced_norm(&self.a2),
            induced_norm(&self.bk()),
        )
    }

    pub fn eval_linear(&self, window: &HistoryWindow, u: &DVector<f64>) -> Result<DVector<f64>> {
        check_window(window, self.tau, self.a1.nrows())?;
        check_len("input", u, self.b.ncols())?;
        Ok(&self.a1 * window.current() + &self.a2 * window.delayed() + &self.b * u)
    }
}

impl DelaySystem for LinearDelaySystem {
    fn tau(&self) -> usize {
        self.tau
    }
    fn state_dim(&self) -> usize {
        self.a1.nrows()
    }
    fn input_dim(&self) -> usize {
        self.b.ncols()
    }
    fn step(&self, window: &HistoryWindow, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.eval_linear(window, u)
    }
    fn feedback(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("state", x, self.a1.nrows())?;
        Ok(&self.k * x)
    }
}

pub fn matrix_from_rows(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(Error::config(name, "matrix must be non-empty"));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::config(name, "rows have unequal lengths"));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Scalar benchmark
/// `x(k+1) = A1 x(k) + A2 cos(x(k)) sin(x(k-1)) + B u(k)`, `u = K x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Example2Params {
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
    pub k: f64,
}

impl Example2Params {
    pub const BENCHMARK: Example2Params = Example2Params {
        a1: 1.0,
        a2: 0.05,
        b: 2.0,
        k: -0.3,
    };

    pub fn eval_example2(&self, window: &HistoryWindow, u: f64) -> Result<f64> {
        if window.dim() != 1 {
            return Err(Error::invalid(format!(
                "scalar benchmark needs a scalar window, got dimension {}",
                window.dim()
            )));
        }
        check_window(window, 1, 1)?;
        let x = window.current()[0];
        let xd = window.delayed()[0];
        Ok(self.a1 * x + self.a2 * x.cos() * xd.sin() + self.b * u)
    }

    /// Constants for `|phi(0) - f(phi, Kx)|`: `|1 - A1|`, `|A2|`, `|BK|`.
    pub fn residual_lipschitz(&self) -> (f64, f64, f64) {
        ((1.0 - self.a1).abs(), self.a2.abs(), (self.b * self.k).abs())
    }
}

impl DelaySystem for Example2Params {
    fn tau(&self) -> usize {
        1
    }
    fn state_dim(&self) -> usize {
        1
    }
    fn input_dim(&self) -> usize {
        1
    }
    fn step(&self, window: &HistoryWindow, u: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("input", u, 1)?;
        Ok(DVector::from_element(1, self.eval_example2(window, u[0])?))
    }
    fn feedback(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("state", x, 1)?;
        Ok(DVector::from_element(1, self.k * x[0]))
    }
}

pub type DynamicsFn = Arc<dyn Fn(&HistoryWindow, &DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type FeedbackFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

/// User-supplied dynamics and feedback with declared Lipschitz constants.
#[derive(Clone)]
pub struct NonlinearDelaySystem {
    dynamics: DynamicsFn,
    feedback: FeedbackFn,
    tau: usize,
    state_dim: usize,
    input_dim: usize,
    pub lipschitz: LipschitzConstants,
}

impl fmt::Debug for NonlinearDelaySystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearDelaySystem")
            .field("tau", &self.tau)
            .field("state_dim", &self.state_dim)
            .field("input_dim", &self.input_dim)
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

impl NonlinearDelaySystem {
    /// Rejects dynamics without the trivial solution (`f(0,0) != 0` or `p(0) != 0`).
    pub fn new(
        tau: usize,
        state_dim: usize,
        input_dim: usize,
        dynamics: DynamicsFn,
        feedback: FeedbackFn,
        lipschitz: LipschitzConstants,
    ) -> Result<Self> {
        if state_dim == 0 || input_dim == 0 {
            return Err(Error::invalid("state and input dimensions must be positive"));
        }
        let sys = Self {
            dynamics,
            feedback,
            tau,
            state_dim,
            input_dim,
            lipschitz,
        };
        let zero_window = HistoryWindow::zeros(tau, state_dim)?;
        let f0 = sys.step(&zero_window, &DVector::zeros(input_dim))?;
        if vec_norm(&f0) != 0.0 {
            return Err(Error::invalid("dynamics must satisfy f(0, 0) = 0"));
        }
        let p0 = sys.feedback(&DVector::zeros(state_dim))?;
        if vec_norm(&p0) != 0.0 {
            return Err(Error::invalid("feedback must satisfy p(0) = 0"));
        }
        Ok(sys)
    }
}

impl DelaySystem for NonlinearDelaySystem {
    fn tau(&self) -> usize {
        self.tau
    }
    fn state_dim(&self) -> usize {
        self.state_dim
    }
    fn input_dim(&self) -> usize {
        self.input_dim
    }
    fn step(&self, window: &HistoryWindow, u: &DVector<f64>) -> Result<DVector<f64>> {
        check_window(window, self.tau, self.state_dim)?;
        check_len("input", u, self.input_dim)?;
        let next = (self.dynamics)(window, u);
        check_len("dynamics output", &next, self.state_dim)?;
        Ok(next)
    }
    fn feedback(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("state", x, self.state_dim)?;
        let u = (self.feedback)(x);
        check_len("feedback output", &u, self.input_dim)?;
        Ok(u)
    }
}

/// The linear benchmark plant with its benchmark gain.
pub fn example1_system() -> LinearDelaySystem {
    LinearDelaySystem::from_rows(
        &[vec![0.95, 0.0], vec![0.01, 1.05]],
        &[vec![0.0, -0.01], vec![-0.01, 0.0]],
        &[vec![3.0, 0.2], vec![0.5, 1.0]],
        &[vec![-0.1621, 0.0324], vec![0.0810, -0.4862]],
        1,
    )
    .expect("benchmark matrices are consistent")
}
