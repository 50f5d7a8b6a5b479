//! Shipped problem instances. The same instances live as JSON under `configs/`.

use super::*;

fn scalar(v: f64) -> Matrix {
    Matrix::scalar(v)
}

fn build(cfg: ProblemConfig) -> VolterraProblem {
    VolterraProblem::from_config(cfg).expect("built-in problem is valid")
}

/// Scalar linear kernel `a·x + b·u`, constant x0, zero costs.
pub fn scalar_linear(a: f64, b: f64, x0: f64, horizon: f64, control: (f64, f64), lipschitz: f64) -> VolterraProblem {
    build(ProblemConfig {
        kernel: KernelSpec::Linear(LinearParams { a: scalar(a), b: scalar(b) }),
        x0: InitialFunction::Constant(ConstantVector { value: vec![x0] }),
        running_cost: RunningCost::Zero,
        terminal_cost: TerminalCost::Zero,
        horizon,
        control_box: vec![[control.0, control.1]],
        lipschitz_budget: lipschitz,
        dims: Dims { n: 1, m: 1 },
        relevant_radius: None,
    })
}

/// Scalar memory-decay kernel with x0 ≡ 0, zero costs, T = 1, U = [−1, 1].
pub fn scalar_memory_decay(kappa: f64, a: f64, b: f64) -> VolterraProblem {
    build(ProblemConfig {
        kernel: KernelSpec::MemoryDecay(MemoryDecayParams { kappa, a: scalar(a), b: scalar(b) }),
        x0: InitialFunction::Constant(ConstantVector { value: vec![0.0] }),
        running_cost: RunningCost::Zero,
        terminal_cost: TerminalCost::Zero,
        horizon: 1.0,
        control_box: vec![[-1.0, 1.0]],
        lipschitz_budget: 1.0,
        dims: Dims { n: 1, m: 1 },
        relevant_radius: None,
    })
}

/// Zero kernel and zero costs.
pub fn zero() -> VolterraProblem {
    scalar_linear(0.0, 0.0, 0.0, 1.0, (0.0, 1.0), 1.0)
}

/// Pure integrator with control penalty `u²` and terminal miss `(x − 1)²`;
/// T = 1, U = [0, 1], L = 4.
pub fn lq() -> VolterraProblem {
    build(ProblemConfig {
        kernel: KernelSpec::Linear(LinearParams { a: scalar(0.0), b: scalar(1.0) }),
        x0: InitialFunction::Constant(ConstantVector { value: vec![0.0] }),
        running_cost: RunningCost::Quadratic(QuadraticRunning {
            state_weight: 0.0,
            control_weight: 1.0,
            state_target: None,
            control_target: None,
        }),
        terminal_cost: TerminalCost::Quadratic(QuadraticTerminal { weight: 1.0, target: vec![1.0] }),
        horizon: 1.0,
        control_box: vec![[0.0, 1.0]],
        lipschitz_budget: 4.0,
        dims: Dims { n: 1, m: 1 },
        relevant_radius: None,
    })
}

/// Damped two-state oscillator driven through its second state.
pub fn linear_2d() -> VolterraProblem {
    build(ProblemConfig {
        kernel: KernelSpec::Linear(LinearParams {
            a: Matrix::from_rows(vec![vec![0.0, 1.0], vec![-1.0, -0.5]]).unwrap(),
            b: Matrix::from_rows(vec![vec![0.0], vec![1.0]]).unwrap(),
        }),
        x0: InitialFunction::Constant(ConstantVector { value: vec![1.0, 0.0] }),
        running_cost: RunningCost::Quadratic(QuadraticRunning {
            state_weight: 0.5,
            control_weight: 0.1,
            state_target: None,
            control_target: None,
        }),
        terminal_cost: TerminalCost::Quadratic(QuadraticTerminal { weight: 1.0, target: vec![0.0, 0.0] }),
        horizon: 1.0,
        control_box: vec![[-1.0, 1.0]],
        lipschitz_budget: 4.0,
        dims: Dims { n: 2, m: 1 },
        relevant_radius: None,
    })
}

/// Fading-memory linear kernel with a decreasing affine forcing term.
pub fn memory_decay() -> VolterraProblem {
    build(ProblemConfig {
        kernel: KernelSpec::MemoryDecay(MemoryDecayParams { kappa: 1.0, a: scalar(-0.5), b: scalar(1.0) }),
        x0: InitialFunction::Affine(AffineVector { offset: vec![1.0], slope: vec![-0.5] }),
        running_cost: RunningCost::Quadratic(QuadraticRunning {
            state_weight: 1.0,
            control_weight: 0.1,
            state_target: None,
            control_target: None,
        }),
        terminal_cost: TerminalCost::Quadratic(QuadraticTerminal { weight: 1.0, target: vec![0.0] }),
        horizon: 1.0,
        control_box: vec![[-1.0, 1.0]],
        lipschitz_budget: 4.0,
        dims: Dims { n: 1, m: 1 },
        relevant_radius: None,
    })
}

/// Population with logistic growth and memory, steered toward x = 0.5.
pub fn logistic_memory() -> VolterraProblem {
    build(ProblemConfig {
        kernel: KernelSpec::LogisticMemory(LogisticParams { c: 0.2, kappa: 0.5, b: 0.5 }),
        x0: InitialFunction::Constant(ConstantVector { value: vec![0.2] }),
        running_cost: RunningCost::Quadratic(QuadraticRunning {
            state_weight: 1.0,
            control_weight: 0.1,
            state_target: Some(vec![0.5]),
            control_target: None,
        }),
        terminal_cost: TerminalCost::Quadratic(QuadraticTerminal { weight: 0.5, target: vec![0.5] }),
        horizon: 1.0,
        control_box: vec![[0.0, 1.0]],
        lipschitz_budget: 4.0,
        dims: Dims { n: 1, m: 1 },
        relevant_radius: None,
    })
}

/// Unstable scalar system `a = b = 1`, x0 ≡ 1 on [0, 1] with U = [0, 1] and
/// L = 1, costed by `x² + u²` and `x(T)²`. Used for discretization-order studies.
pub fn convergence_linear() -> VolterraProblem {
    build(ProblemConfig {
        kernel: KernelSpec::Linear(LinearParams { a: scalar(1.0), b: scalar(1.0) }),
        x0: InitialFunction::Constant(ConstantVector { value: vec![1.0] }),
        running_cost: RunningCost::Quadratic(QuadraticRunning {
            state_weight: 1.0,
            control_weight: 1.0,
            state_target: None,
            control_target: None,
        }),
        terminal_cost: TerminalCost::Quadratic(QuadraticTerminal { weight: 1.0, target: vec![0.0] }),
        horizon: 1.0,
        control_box: vec![[0.0, 1.0]],
        lipschitz_budget: 1.0,
        dims: Dims { n: 1, m: 1 },
        relevant_radius: None,
    })
}

/// The single-control families exercised by the oracle checks.
pub fn families() -> Vec<(&'static str, VolterraProblem)> {
    vec![
        ("lq", lq()),
        ("linear_2d", linear_2d()),
        ("memory_decay", memory_decay()),
        ("logistic_memory", logistic_memory()),
    ]
}

/// Every shipped instance by name, including the degenerate and study problems.
pub fn all() -> Vec<(&'static str, VolterraProblem)> {
    let mut v = families();
    v.push(("zero", zero()));
    v.push(("convergence_linear", convergence_linear()));
    v
}

pub fn by_name(name: &str) -> Option<VolterraProblem> {
    all().into_iter().find(|(n, _)| *n == name).map(|(_, p)| p)
}
