//! Parametrized forms for the kernel, initial function and costs.
//!
//! Every form is a closed, named family whose constants are plain numbers in
//! the configuration file. Norms are max norms throughout.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Dense row-major matrix, serialized as an array of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, String> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 {
            return Err("matrix must have at least one row and one column".into());
        }
        if rows.iter().any(|row| row.len() != c) {
            return Err("matrix rows have unequal lengths".into());
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err("matrix entries must be finite".into());
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn scalar(v: f64) -> Self {
        Matrix {
            rows: 1,
            cols: 1,
            data: vec![v],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// Induced max-norm: largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.data
            .chunks(self.cols)
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `out += self * v`
    fn mul_add(&self, v: &[f64], out: &mut [f64]) {
        for (row, o) in self.data.chunks(self.cols).zip(out.iter_mut()) {
            *o += row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        }
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = String;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        Matrix::from_rows(rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.data.chunks(m.cols).map(<[f64]>::to_vec).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearParams {
    pub a: Matrix,
    pub b: Matrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryDecayParams {
    pub kappa: f64,
    pub a: Matrix,
    pub b: Matrix,
}

/// Scalar logistic growth with a decaying memory weight `c·exp(−κ(t−s))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogisticParams {
    pub c: f64,
    pub kappa: f64,
    pub b: f64,
}

/// Built-in kernel library.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// f = a·x + b·u
    Linear(LinearParams),
    /// f = exp(−κ(t−s))·(a·x + b·u)
    MemoryDecay(MemoryDecayParams),
    /// f = c·exp(−κ(t−s))·x·(1−x) + b·u
    LogisticMemory(LogisticParams),
}

/// Caller-supplied kernel. The declared constants feed the relevant-set bound,
/// so they must hold on all of ℝⁿ × U.
pub trait KernelFn: Send + Sync + fmt::Debug {
    fn eval(&self, t: f64, s: f64, x: &[f64], u: &[f64], out: &mut [f64]);

    /// Lipschitz constant of `x ↦ f(t,s,x,u)`, uniform in (t,s,u).
    fn state_lipschitz(&self) -> f64;

    /// Upper bound on `|f(t,s,0,u)|` over the time triangle and the control box.
    fn bound_at_zero_state(&self) -> f64;
}

#[derive(Clone, Debug)]
pub enum Kernel {
    Builtin(KernelSpec),
    Custom(Arc<dyn KernelFn>),
}

impl Kernel {
    /// Writes f(t,s,x,u) into `out`. No domain checks.
    pub(crate) fn eval_into(&self, t: f64, s: f64, x: &[f64], u: &[f64], out: &mut [f64]) {
        match self {
            Kernel::Builtin(KernelSpec::Linear(p)) => {
                out.fill(0.0);
                p.a.mul_add(x, out);
                p.b.mul_add(u, out);
            }
            Kernel::Builtin(KernelSpec::MemoryDecay(p)) => {
                out.fill(0.0);
                p.a.mul_add(x, out);
                p.b.mul_add(u, out);
                let w = (-p.kappa * (t - s)).exp();
                out.iter_mut().for_each(|o| *o *= w);
            }
            Kernel::Builtin(KernelSpec::LogisticMemory(p)) => {
                let w = p.c * (-p.kappa * (t - s)).exp();
                out[0] = w * x[0] * (1.0 - x[0]) + p.b * u[0];
            }
            Kernel::Custom(k) => k.eval(t, s, x, u, out),
        }
    }

    /// Joint Lipschitz constant L_f in (x,u) on the ball of the given radius:
    /// `|f(x1,u1) − f(x2,u2)| ≤ L_f (|x1−x2| + |u1−u2|)`.
    ///
    /// Custom kernels only declare a state constant, which is returned as is.
    pub fn lipschitz_constant(&self, radius: f64) -> f64 {
        match self {
            Kernel::Builtin(KernelSpec::Linear(p)) => p.a.norm_inf().max(p.b.norm_inf()),
            Kernel::Builtin(KernelSpec::MemoryDecay(p)) => p.a.norm_inf().max(p.b.norm_inf()),
            Kernel::Builtin(KernelSpec::LogisticMemory(p)) => {
                (p.c.abs() * (1.0 + 2.0 * radius)).max(p.b.abs())
            }
            Kernel::Custom(k) => k.state_lipschitz(),
        }
    }

    pub fn spec(&self) -> Option<&KernelSpec> {
        match self {
            Kernel::Builtin(s) => Some(s),
            Kernel::Custom(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantVector {
    pub value: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineVector {
    pub offset: Vec<f64>,
    pub slope: Vec<f64>,
}

/// Initial function x0(t).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialFunction {
    Constant(ConstantVector),
    /// x0(t) = offset + slope·t
    Affine(AffineVector),
}

impl InitialFunction {
    pub fn dim(&self) -> usize {
        match self {
            InitialFunction::Constant(c) => c.value.len(),
            InitialFunction::Affine(a) => a.offset.len(),
        }
    }

    pub(crate) fn eval_into(&self, t: f64, out: &mut [f64]) {
        match self {
            InitialFunction::Constant(c) => out.copy_from_slice(&c.value),
            InitialFunction::Affine(a) => {
                for ((o, c0), c1) in out.iter_mut().zip(&a.offset).zip(&a.slope) {
                    *o = c0 + c1 * t;
                }
            }
        }
    }

    /// sup over [0, T] of |x0(t)|∞. Affine functions peak at an endpoint.
    pub fn sup_norm(&self, horizon: f64) -> f64 {
        match self {
            InitialFunction::Constant(c) => max_abs(&c.value),
            InitialFunction::Affine(a) => a
                .offset
                .iter()
                .zip(&a.slope)
                .map(|(c0, c1)| c0.abs().max((c0 + c1 * horizon).abs()))
                .fold(0.0, f64::max),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantScalar {
    pub value: f64,
}

/// F = state_weight·|x − state_target|² + control_weight·|u − control_target|²
/// with Euclidean squares; missing targets are zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticRunning {
    pub state_weight: f64,
    pub control_weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_target: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_target: Option<Vec<f64>>,
}

/// Running cost F(t,x,u).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum RunningCost {
    Zero,
    Constant(ConstantScalar),
    Quadratic(QuadraticRunning),
}

impl RunningCost {
    pub fn eval(&self, _t: f64, x: &[f64], u: &[f64]) -> f64 {
        match self {
            RunningCost::Zero => 0.0,
            RunningCost::Constant(c) => c.value,
            RunningCost::Quadratic(q) => {
                q.state_weight * dist_sq(x, q.state_target.as_deref())
                    + q.control_weight * dist_sq(u, q.control_target.as_deref())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearTerminal {
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticTerminal {
    pub weight: f64,
    pub target: Vec<f64>,
}

/// Terminal cost F0(x).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum TerminalCost {
    Zero,
    Constant(ConstantScalar),
    /// F0 = weights·x
    Linear(LinearTerminal),
    /// F0 = weight·|x − target|²
    Quadratic(QuadraticTerminal),
}

impl TerminalCost {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TerminalCost::Zero => 0.0,
            TerminalCost::Constant(c) => c.value,
            TerminalCost::Linear(l) => l.weights.iter().zip(x).map(|(w, v)| w * v).sum(),
            TerminalCost::Quadratic(q) => q.weight * dist_sq(x, Some(&q.target)),
        }
    }
}

fn dist_sq(v: &[f64], target: Option<&[f64]>) -> f64 {
    match target {
        Some(t) => v.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum(),
        None => v.iter().map(|a| a * a).sum(),
    }
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
