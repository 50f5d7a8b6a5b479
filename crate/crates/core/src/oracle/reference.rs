//! Continuous-time references.
//!
//! For the scalar linear kernel `f = a·x + b·u` with constant `x0` the integral
//! equation is equivalent to `x' = a·x + b·u`, whose solution is known up to a
//! single quadrature. Everything else falls back to the Euler scheme on a much
//! finer grid.

use serde::Serialize;

use crate::discretize::{discrete_cost, discretize, forward_solve, sample, ControlSignal, Trajectory};
use crate::error::{Error, Result};
use crate::problem::VolterraProblem;

use super::MODULE;

/// Absolute tolerance for the quadratures behind [`linear_reference`].
pub const QUADRATURE_TOLERANCE: f64 = 1e-10;

const MAX_BISECTIONS: u32 = 24;

/// `∫_a^b f` by double-exponential quadrature, bisecting while the error
/// estimate exceeds `tol`.
pub(crate) fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn go(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        let out = quadrature::integrate(f, a, b, tol);
        if out.error_estimate <= tol && out.integral.is_finite() {
            return Ok(out.integral);
        }
        if depth == MAX_BISECTIONS {
            return Err(Error::numerical(
                MODULE,
                0,
                format!("quadrature on [{a}, {b}] did not reach tolerance {tol:e}"),
            ));
        }
        let mid = 0.5 * (a + b);
        Ok(go(f, a, mid, 0.5 * tol, depth + 1)? + go(f, mid, b, 0.5 * tol, depth + 1)?)
    }
    go(f, a, b, tol, 0)
}

/// Splits `[a, b]` at the signal's kinks and integrates each smooth piece.
pub(crate) fn integrate_piecewise(f: &dyn Fn(f64) -> f64, a: f64, b: f64, kinks: &[f64], tol: f64) -> Result<f64> {
    let mut cuts: Vec<f64> = std::iter::once(a)
        .chain(kinks.iter().copied().filter(|k| *k > a && *k < b))
        .chain(std::iter::once(b))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let pieces = (cuts.len() - 1).max(1) as f64;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += integrate(f, w[0], w[1], tol / pieces)?;
    }
    Ok(total)
}

/// A scalar trajectory sampled on a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampledTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
}

/// The linear system, for evaluating `x(t)` anywhere.
#[derive(Clone, Copy)]
pub struct LinearSolution<'u> {
    a: f64,
    b: f64,
    x0: f64,
    control: &'u dyn ControlSignal,
    kinks: &'u [f64],
}

impl LinearSolution<'_> {
    /// `e^{a t}·x0 + ∫₀ᵗ e^{a(t−s)}·b·u(s) ds`
    pub fn state(&self, t: f64) -> Result<f64> {
        let (a, b) = (self.a, self.b);
        let free = (a * t).exp() * self.x0;
        if b == 0.0 {
            return Ok(free);
        }
        let integrand = |s: f64| {
            let mut u = [0.0];
            self.control.value_into(s, &mut u);
            (a * (t - s)).exp() * b * u[0]
        };
        Ok(free + integrate_piecewise(&integrand, 0.0, t, self.kinks, QUADRATURE_TOLERANCE)?)
    }
}

fn check_scalar_control(u: &dyn ControlSignal) -> Result<()> {
    if u.dim() != 1 {
        return Err(Error::invalid(MODULE, "the linear reference needs a scalar control"));
    }
    Ok(())
}

/// `x(t_k)` at `t_k = k·T/samples`, `k = 0..=samples`, for `x' = a·x + b·u`,
/// `x(0) = x0c`.
pub fn linear_reference(
    a: f64,
    b: f64,
    x0c: f64,
    u: &dyn ControlSignal,
    horizon: f64,
    samples: usize,
) -> Result<SampledTrajectory> {
    check_scalar_control(u)?;
    if !(horizon > 0.0 && horizon.is_finite()) || samples == 0 {
        return Err(Error::invalid(MODULE, "linear reference needs T > 0 and at least one sample interval"));
    }
    let kinks = u.breakpoints();
    let sol = LinearSolution {
        a,
        b,
        x0: x0c,
        control: u,
        kinks: &kinks,
    };
    let times: Vec<f64> = (0..=samples).map(|k| horizon * k as f64 / samples as f64).collect();
    let states = times.iter().map(|&t| sol.state(t)).collect::<Result<Vec<_>>>()?;
    Ok(SampledTrajectory { times, states })
}

/// The problem's `(a, b, x0)` if it has the scalar linear kernel with a
/// constant initial function, otherwise a rejected-input error.
pub fn linear_coefficients(p: &VolterraProblem) -> Result<(f64, f64, f64)> {
    p.as_scalar_linear()
        .ok_or_else(|| Error::invalid(MODULE, "linear reference requires the scalar linear kernel with constant x0"))
}

/// [`linear_reference`] with coefficients taken from the problem.
pub fn linear_reference_for(p: &VolterraProblem, u: &dyn ControlSignal, samples: usize) -> Result<SampledTrajectory> {
    let (a, b, x0) = linear_coefficients(p)?;
    linear_reference(a, b, x0, u, p.horizon(), samples)
}

/// Continuous cost `∫₀ᵀ F(t, x(t), u(t)) dt + F0(x(T))` along the exact
/// solution of a scalar linear problem.
pub fn linear_reference_cost(p: &VolterraProblem, u: &dyn ControlSignal) -> Result<f64> {
    let (a, b, x0) = linear_coefficients(p)?;
    check_scalar_control(u)?;
    let kinks = u.breakpoints();
    let sol = LinearSolution {
        a,
        b,
        x0,
        control: u,
        kinks: &kinks,
    };
    let horizon = p.horizon();
    let failure = std::cell::Cell::new(None);
    let integrand = |t: f64| match sol.state(t) {
        Ok(x) => p.eval_running_cost(t, &[x], &u.value(t)),
        Err(e) => {
            failure.set(Some(e.to_string()));
            f64::NAN
        }
    };
    let running = integrate_piecewise(&integrand, 0.0, horizon, &kinks, QUADRATURE_TOLERANCE)?;
    if let Some(msg) = failure.take() {
        return Err(Error::numerical(MODULE, 0, msg));
    }
    Ok(running + p.eval_terminal_cost(&[sol.state(horizon)?]))
}

/// The Euler solution on `fine_steps` steps with `u` sampled at the fine
/// nodes, as a stand-in for the continuous solution.
pub fn fine_grid_reference(p: &VolterraProblem, u: &dyn ControlSignal, fine_steps: usize) -> Result<Trajectory> {
    Ok(fine_grid_solution(p, u, fine_steps)?.0)
}

/// Fine-grid trajectory together with its cost.
pub fn fine_grid_solution(p: &VolterraProblem, u: &dyn ControlSignal, fine_steps: usize) -> Result<(Trajectory, f64)> {
    if u.dim() != p.control_dim() {
        return Err(Error::invalid(MODULE, "control dimension differs from the problem"));
    }
    let dp = discretize(p, fine_steps)?;
    let c = sample(u, &dp.grid());
    let traj = forward_solve(&dp, &c)?;
    let cost = discrete_cost(&dp, &traj, &c)?;
    Ok((traj, cost))
}
