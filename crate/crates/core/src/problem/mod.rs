//! Continuous controlled Volterra problems
//!
//! ```text
//! x(t) = x0(t) + ∫₀ᵗ f(t, s, x(s), u(s)) ds,     J = F0(x(T)) + ∫₀ᵀ F(t, x(t), u(t)) dt
//! ```
//!
//! with controls valued in a box U and, for the discretization theory, an upper
//! bound L on their rate of variation.

mod bounds;
pub mod builtin;
mod forms;

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bounds::{relevant_radius_growth, relevant_radius_lipschitz, RelevantSet, RelevantSetMethod};
pub use forms::{
    AffineVector, ConstantScalar, ConstantVector, InitialFunction, Kernel, KernelFn, KernelSpec,
    LinearParams, LinearTerminal, LogisticParams, Matrix, MemoryDecayParams, QuadraticRunning,
    QuadraticTerminal, RunningCost, TerminalCost,
};

pub(crate) use forms::max_abs;

const MODULE: &str = "problem";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
}

/// On-disk problem description. Unknown fields are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kernel: KernelSpec,
    pub x0: InitialFunction,
    pub running_cost: RunningCost,
    pub terminal_cost: TerminalCost,
    pub horizon: f64,
    /// One `[lower, upper]` pair per control coordinate.
    pub control_box: Vec<[f64; 2]>,
    pub lipschitz_budget: f64,
    pub dims: Dims,
    /// Replaces the computed relevant-set radius when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevant_radius: Option<f64>,
}

/// A validated problem instance. Immutable; cheap to clone.
#[derive(Clone, Debug)]
pub struct VolterraProblem {
    kernel: Kernel,
    x0: InitialFunction,
    running_cost: RunningCost,
    terminal_cost: TerminalCost,
    horizon: f64,
    control_box: Vec<[f64; 2]>,
    lipschitz_budget: f64,
    dims: Dims,
    relevant_radius: Option<f64>,
}

impl VolterraProblem {
    pub fn from_config(cfg: ProblemConfig) -> Result<Self> {
        let ProblemConfig {
            kernel,
            x0,
            running_cost,
            terminal_cost,
            horizon,
            control_box,
            lipschitz_budget,
            dims,
            relevant_radius,
        } = cfg;
        validate_kernel(&kernel, dims)?;
        let p = VolterraProblem {
            kernel: Kernel::Builtin(kernel),
            x0,
            running_cost,
            terminal_cost,
            horizon,
            control_box,
            lipschitz_budget,
            dims,
            relevant_radius,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_config(serde_json::from_str(s)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Swaps in a caller-supplied kernel. The state dimension is unchanged.
    pub fn with_custom_kernel(mut self, kernel: Arc<dyn KernelFn>) -> Result<Self> {
        let (lip, g2) = (kernel.state_lipschitz(), kernel.bound_at_zero_state());
        if !(lip.is_finite() && lip >= 0.0 && g2.is_finite() && g2 >= 0.0) {
            return Err(Error::invalid(
                MODULE,
                "custom kernel constants must be finite and non-negative",
            ));
        }
        self.kernel = Kernel::Custom(kernel);
        Ok(self)
    }

    pub fn with_relevant_radius(mut self, radius: Option<f64>) -> Result<Self> {
        self.relevant_radius = radius;
        self.validate()?;
        Ok(self)
    }

    pub fn with_lipschitz_budget(mut self, budget: f64) -> Result<Self> {
        self.lipschitz_budget = budget;
        self.validate()?;
        Ok(self)
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        self.horizon = horizon;
        self.validate()?;
        Ok(self)
    }

    /// Returns the configuration this problem was built from, or `None` for a
    /// custom kernel.
    pub fn to_config(&self) -> Option<ProblemConfig> {
        Some(ProblemConfig {
            kernel: self.kernel.spec()?.clone(),
            x0: self.x0.clone(),
            running_cost: self.running_cost.clone(),
            terminal_cost: self.terminal_cost.clone(),
            horizon: self.horizon,
            control_box: self.control_box.clone(),
            lipschitz_budget: self.lipschitz_budget,
            dims: self.dims,
            relevant_radius: self.relevant_radius,
        })
    }

    fn validate(&self) -> Result<()> {
        let Dims { n, m } = self.dims;
        if n == 0 || m == 0 {
            return Err(Error::invalid(MODULE, "dims.n and dims.m must be at least 1"));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::invalid(
                MODULE,
                format!("horizon must be finite and positive, got {}", self.horizon),
            ));
        }
        if !(self.lipschitz_budget.is_finite() && self.lipschitz_budget >= 0.0) {
            return Err(Error::invalid(
                MODULE,
                format!("lipschitz_budget must be finite and non-negative, got {}", self.lipschitz_budget),
            ));
        }
        if self.control_box.len() != m {
            return Err(Error::invalid(
                MODULE,
                format!("control_box has {} intervals but dims.m = {m}", self.control_box.len()),
            ));
        }
        for (k, [a, b]) in self.control_box.iter().enumerate() {
            if !(a.is_finite() && b.is_finite() && a <= b) {
                return Err(Error::invalid(
                    MODULE,
                    format!("control_box[{k}] = [{a}, {b}] is not a finite interval with lower <= upper"),
                ));
            }
        }
        if self.x0.dim() != n {
            return Err(Error::invalid(MODULE, format!("x0 has dimension {} but dims.n = {n}", self.x0.dim())));
        }
        match &self.x0 {
            InitialFunction::Constant(c) => check_finite("x0.value", &c.value)?,
            InitialFunction::Affine(a) => {
                check_finite("x0.offset", &a.offset)?;
                check_finite("x0.slope", &a.slope)?;
                if a.slope.len() != n {
                    return Err(Error::invalid(MODULE, "x0.slope length must equal dims.n"));
                }
            }
        }
        match &self.running_cost {
            RunningCost::Zero => {}
            RunningCost::Constant(c) => check_finite("running_cost.value", &[c.value])?,
            RunningCost::Quadratic(q) => {
                check_finite("running_cost weights", &[q.state_weight, q.control_weight])?;
                check_len("running_cost.state_target", q.state_target.as_deref(), n)?;
                check_len("running_cost.control_target", q.control_target.as_deref(), m)?;
            }
        }
        match &self.terminal_cost {
            TerminalCost::Zero => {}
            TerminalCost::Constant(c) => check_finite("terminal_cost.value", &[c.value])?,
            TerminalCost::Linear(l) => check_len("terminal_cost.weights", Some(&l.weights), n)?,
            TerminalCost::Quadratic(q) => {
                check_finite("terminal_cost.weight", &[q.weight])?;
                check_len("terminal_cost.target", Some(&q.target), n)?;
            }
        }
        if let Some(r) = self.relevant_radius {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::invalid(MODULE, "relevant_radius must be finite and non-negative"));
            }
        }
        Ok(())
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn initial_function(&self) -> &InitialFunction {
        &self.x0
    }

    pub fn running_cost(&self) -> &RunningCost {
        &self.running_cost
    }

    pub fn terminal_cost(&self) -> &TerminalCost {
        &self.terminal_cost
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn control_box(&self) -> &[[f64; 2]] {
        &self.control_box
    }

    pub fn lipschitz_budget(&self) -> f64 {
        self.lipschitz_budget
    }

    pub fn state_dim(&self) -> usize {
        self.dims.n
    }

    pub fn control_dim(&self) -> usize {
        self.dims.m
    }

    pub fn manual_radius(&self) -> Option<f64> {
        self.relevant_radius
    }

    /// sup over U of |u|∞.
    pub fn control_sup(&self) -> f64 {
        self.control_box
            .iter()
            .map(|[a, b]| a.abs().max(b.abs()))
            .fold(0.0, f64::max)
    }

    /// Largest coordinate width of the control box.
    pub fn control_diameter(&self) -> f64 {
        self.control_box.iter().map(|[a, b]| b - a).fold(0.0, f64::max)
    }

    pub fn contains_control(&self, u: &[f64]) -> bool {
        u.len() == self.dims.m
            && u.iter()
                .zip(&self.control_box)
                .all(|(v, [a, b])| *a <= *v && *v <= *b)
    }

    /// f(t,s,x,u), rejecting points outside 0 ≤ s ≤ t ≤ T or mismatched dimensions.
    pub fn eval_kernel(&self, t: f64, s: f64, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        if !(0.0 <= s && s <= t && t <= self.horizon) {
            return Err(Error::invalid(
                MODULE,
                format!("kernel evaluated outside 0 <= s <= t <= T: t = {t}, s = {s}, T = {}", self.horizon),
            ));
        }
        if x.len() != self.dims.n || u.len() != self.dims.m {
            return Err(Error::invalid(
                MODULE,
                format!("expected x in R^{} and u in R^{}", self.dims.n, self.dims.m),
            ));
        }
        let mut out = vec![0.0; self.dims.n];
        self.kernel.eval_into(t, s, x, u, &mut out);
        Ok(out)
    }

    pub(crate) fn kernel_into(&self, t: f64, s: f64, x: &[f64], u: &[f64], out: &mut [f64]) {
        self.kernel.eval_into(t, s, x, u, out);
    }

    pub fn eval_x0(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dims.n];
        self.x0.eval_into(t, &mut out);
        out
    }

    pub(crate) fn x0_into(&self, t: f64, out: &mut [f64]) {
        self.x0.eval_into(t, out);
    }

    pub fn eval_running_cost(&self, t: f64, x: &[f64], u: &[f64]) -> f64 {
        self.running_cost.eval(t, x, u)
    }

    pub fn eval_terminal_cost(&self, x: &[f64]) -> f64 {
        self.terminal_cost.eval(x)
    }

    /// Is this the scalar built-in linear kernel with a constant initial
    /// function? Returns `(a, b, x0)` if so.
    pub fn as_scalar_linear(&self) -> Option<(f64, f64, f64)> {
        match (&self.kernel, &self.x0) {
            (Kernel::Builtin(KernelSpec::Linear(p)), InitialFunction::Constant(c))
                if self.dims.n == 1 && self.dims.m == 1 =>
            {
                Some((p.a.get(0, 0), p.b.get(0, 0), c.value[0]))
            }
            _ => None,
        }
    }
}

fn validate_kernel(kernel: &KernelSpec, Dims { n, m }: Dims) -> Result<()> {
    let check_ab = |a: &Matrix, b: &Matrix| -> Result<()> {
        if a.rows() != n || a.cols() != n {
            return Err(Error::invalid(MODULE, format!("kernel matrix a must be {n}x{n}")));
        }
        if b.rows() != n || b.cols() != m {
            return Err(Error::invalid(MODULE, format!("kernel matrix b must be {n}x{m}")));
        }
        Ok(())
    };
    match kernel {
        KernelSpec::Linear(p) => check_ab(&p.a, &p.b),
        KernelSpec::MemoryDecay(p) => {
            if !(p.kappa.is_finite() && p.kappa >= 0.0) {
                return Err(Error::invalid(MODULE, "memory_decay kappa must be finite and non-negative"));
            }
            check_ab(&p.a, &p.b)
        }
        KernelSpec::LogisticMemory(p) => {
            if n != 1 || m != 1 {
                return Err(Error::invalid(MODULE, "logistic_memory is scalar: requires n = m = 1"));
            }
            if !(p.kappa.is_finite() && p.kappa >= 0.0) {
                return Err(Error::invalid(MODULE, "logistic_memory kappa must be finite and non-negative"));
            }
            check_finite("logistic_memory params", &[p.c, p.b])
        }
    }
}

fn check_finite(what: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(MODULE, format!("{what} must be finite")))
    }
}

fn check_len(what: &str, v: Option<&[f64]>, len: usize) -> Result<()> {
    match v {
        Some(v) if v.len() != len => Err(Error::invalid(
            MODULE,
            format!("{what} has length {} but {len} was expected", v.len()),
        )),
        Some(v) => check_finite(what, v),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_linear(a: f64, b: f64) -> VolterraProblem {
        builtin::scalar_linear(a, b, 1.0, 1.0, (0.0, 1.0), 1.0)
    }

    #[test]
    fn zero_kernel_evaluates_to_zero() {
        let p = scalar_linear(0.0, 0.0);
        assert_eq!(p.eval_kernel(0.7, 0.2, &[3.0], &[1.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn identity_on_state() {
        let p = scalar_linear(1.0, 0.0);
        assert_eq!(p.eval_kernel(0.5, 0.5, &[2.0], &[0.3]).unwrap(), vec![2.0]);
    }

    #[test]
    fn memory_decay_at_equal_times() {
        let p = builtin::scalar_memory_decay(1.0, 1.0, 1.0);
        assert_eq!(p.eval_kernel(0.4, 0.4, &[1.0], &[1.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn kernel_domain_is_enforced() {
        let p = scalar_linear(1.0, 1.0);
        assert!(p.eval_kernel(0.2, 0.5, &[0.0], &[0.0]).is_err());
        assert!(p.eval_kernel(1.5, 0.5, &[0.0], &[0.0]).is_err());
        assert!(p.eval_kernel(0.5, -0.1, &[0.0], &[0.0]).is_err());
        assert!(p.eval_kernel(0.5, 0.1, &[0.0, 1.0], &[0.0]).is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let good = builtin::lq().to_config().unwrap();
        let mut v = serde_json::to_value(&good).unwrap();
        assert!(VolterraProblem::from_config(serde_json::from_value(v.clone()).unwrap()).is_ok());
        v["surprise"] = serde_json::json!(1);
        assert!(serde_json::from_value::<ProblemConfig>(v.clone()).is_err());
        let mut v = serde_json::to_value(&good).unwrap();
        v["kernel"]["params"]["extra"] = serde_json::json!(0.0);
        assert!(serde_json::from_value::<ProblemConfig>(v).is_err());
    }

    #[test]
    fn config_validation() {
        let base = builtin::lq().to_config().unwrap();
        let mut c = base.clone();
        c.horizon = 0.0;
        assert!(VolterraProblem::from_config(c).is_err());
        let mut c = base.clone();
        c.control_box = vec![[1.0, 0.0]];
        assert!(VolterraProblem::from_config(c).is_err());
        let mut c = base.clone();
        c.dims.n = 2;
        assert!(VolterraProblem::from_config(c).is_err());
        let mut c = base;
        c.lipschitz_budget = -1.0;
        assert!(VolterraProblem::from_config(c).is_err());
    }

    #[test]
    fn config_json_shape() {
        let text = r#"{
            "kernel": {"form": "memory_decay", "params": {"kappa": 1.0, "a": [[-0.5]], "b": [[1.0]]}},
            "x0": {"form": "affine", "params": {"offset": [1.0], "slope": [-0.5]}},
            "running_cost": {"form": "zero"},
            "terminal_cost": {"form": "linear", "params": {"weights": [2.0]}},
            "horizon": 2.0,
            "control_box": [[-1.0, 1.0]],
            "lipschitz_budget": 3.0,
            "dims": {"n": 1, "m": 1}
        }"#;
        let p = VolterraProblem::from_json_str(text).unwrap();
        assert_eq!(p.eval_x0(2.0), vec![0.0]);
        assert_eq!(p.eval_terminal_cost(&[1.5]), 3.0);
        assert_eq!(p.initial_function().sup_norm(2.0), 1.0);
    }
}
