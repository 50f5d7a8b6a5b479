//! Euler discretization of a [`VolterraProblem`].
//!
//! On the uniform grid `t_i = i·h`, `h = T/N`, the discrete dynamics are
//!
//! ```text
//! x(i) = x0(t_i) + Σ_{j<i} φ(i, j, x(j), u(j)),     φ(i, j, x, u) = h·f(t_i, t_j, x, u)
//! ```
//!
//! and the discrete cost is `Σ_{i<N} Φ(i, x(i), u(i)) + Φ0(x(N))` with
//! `Φ = h·F(t_i, ·, ·)` and `Φ0 = F0` (left-endpoint rectangle rule).

mod control;

use crate::error::{Error, Result};
use crate::problem::{max_abs, VolterraProblem};

pub use control::{
    check_lipschitz_admissible, interpolate, sample, ConstantControl, ControlSignal, FnControl,
    InterpolatedControl, RampControl, BAND_TOLERANCE,
};

const MODULE: &str = "discretize";

/// Uniform time grid with `steps` intervals on `[0, horizon]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    steps: usize,
    horizon: f64,
}

impl Grid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid(MODULE, "step count N must be at least 1"));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid(MODULE, "horizon must be finite and positive"));
        }
        Ok(Grid { steps, horizon })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// `t_i`, computed as `T·i/N` so that `t_N == T` exactly.
    pub fn node(&self, i: usize) -> f64 {
        self.horizon * i as f64 / self.steps as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.node(i)).collect()
    }
}

/// A problem together with its grid. Borrow of the continuous problem.
#[derive(Clone, Copy, Debug)]
pub struct DiscreteProblem<'p> {
    problem: &'p VolterraProblem,
    grid: Grid,
}

pub fn discretize(problem: &VolterraProblem, steps: usize) -> Result<DiscreteProblem<'_>> {
    Ok(DiscreteProblem {
        problem,
        grid: Grid::new(problem.horizon(), steps)?,
    })
}

impl<'p> DiscreteProblem<'p> {
    pub fn problem(&self) -> &'p VolterraProblem {
        self.problem
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn steps(&self) -> usize {
        self.grid.steps
    }

    pub fn step(&self) -> f64 {
        self.grid.step()
    }

    pub fn state_dim(&self) -> usize {
        self.problem.state_dim()
    }

    pub fn control_dim(&self) -> usize {
        self.problem.control_dim()
    }

    /// φ(i, j, x, u) = h·f(t_i, t_j, x, u) for `0 ≤ j < i ≤ N`.
    pub fn phi(&self, i: usize, j: usize, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        if !(j < i && i <= self.steps()) {
            return Err(Error::invalid(
                MODULE,
                format!("phi requires 0 <= j < i <= N, got i = {i}, j = {j}, N = {}", self.steps()),
            ));
        }
        let mut out = self
            .problem
            .eval_kernel(self.grid.node(i), self.grid.node(j), x, u)?;
        let h = self.step();
        out.iter_mut().for_each(|v| *v *= h);
        Ok(out)
    }

    /// Φ(i, x, u) = h·F(t_i, x, u).
    pub fn stage_cost(&self, i: usize, x: &[f64], u: &[f64]) -> f64 {
        self.step() * self.problem.eval_running_cost(self.grid.node(i), x, u)
    }

    /// Φ0(x) = F0(x).
    pub fn terminal_cost(&self, x: &[f64]) -> f64 {
        self.problem.eval_terminal_cost(x)
    }

    pub(crate) fn x0_into(&self, i: usize, out: &mut [f64]) {
        self.problem.x0_into(self.grid.node(i), out);
    }

    /// Writes `x(i) = x0_i + Σ_{j<i} φ(i, j, x(j), u(j))` into `out`, summing in
    /// increasing j. Every state computation in the crate goes through here so
    /// that identical histories give bit-identical states.
    pub(crate) fn advance_state<'a, F>(
        &self,
        i: usize,
        x0_i: &[f64],
        mut past: F,
        scratch: &mut [f64],
        out: &mut [f64],
    ) where
        F: FnMut(usize) -> (&'a [f64], &'a [f64]),
    {
        let t = self.grid.node(i);
        let h = self.step();
        out.copy_from_slice(x0_i);
        for j in 0..i {
            let (x, u) = past(j);
            self.problem.kernel_into(t, self.grid.node(j), x, u, scratch);
            for (o, f) in out.iter_mut().zip(scratch.iter()) {
                *o += h * *f;
            }
        }
    }
}

/// Control values u(0..N−1), stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteControl {
    dim: usize,
    values: Vec<f64>,
}

impl DiscreteControl {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid(MODULE, "control rows must be non-empty and of equal length"));
        }
        Ok(DiscreteControl {
            dim,
            values: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_flat(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.is_empty() || !values.len().is_multiple_of(dim) {
            return Err(Error::invalid(MODULE, "flat control length must be a positive multiple of its dimension"));
        }
        Ok(DiscreteControl { dim, values })
    }

    pub fn constant(value: &[f64], len: usize) -> Self {
        DiscreteControl {
            dim: value.len(),
            values: value.repeat(len),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.dim)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    /// The first `len` values followed by the values of `tail` from index `len` on.
    pub fn splice(&self, len: usize, tail: &DiscreteControl) -> Result<DiscreteControl> {
        if self.dim != tail.dim || len > self.len() || len > tail.len() {
            return Err(Error::invalid(MODULE, "cannot splice controls of different shapes"));
        }
        let mut values = self.values[..len * self.dim].to_vec();
        values.extend_from_slice(&tail.values[len * self.dim..]);
        Ok(DiscreteControl { dim: self.dim, values })
    }
}

/// States x(0..N), stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    dim: usize,
    states: Vec<f64>,
}

impl Trajectory {
    pub fn from_flat(dim: usize, states: Vec<f64>) -> Result<Self> {
        if dim == 0 || states.is_empty() || !states.len().is_multiple_of(dim) {
            return Err(Error::invalid(MODULE, "flat trajectory length must be a positive multiple of its dimension"));
        }
        Ok(Trajectory { dim, states })
    }

    /// Number of stored states, N + 1.
    pub fn len(&self) -> usize {
        self.states.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks(self.dim)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.states().map(<[f64]>::to_vec).collect()
    }

    /// max_i |x(i)|∞
    pub fn sup_norm(&self) -> f64 {
        max_abs(&self.states)
    }
}

fn check_control(dp: &DiscreteProblem<'_>, c: &DiscreteControl) -> Result<()> {
    if c.len() != dp.steps() || c.dim() != dp.control_dim() {
        return Err(Error::invalid(
            MODULE,
            format!(
                "control has {} entries of dimension {}, expected {} of dimension {}",
                c.len(),
                c.dim(),
                dp.steps(),
                dp.control_dim()
            ),
        ));
    }
    if let Some(i) = c.rows().position(|u| !dp.problem.contains_control(u)) {
        return Err(Error::invalid(MODULE, format!("control value at stage {i} lies outside the control box")));
    }
    Ok(())
}

/// Solves the discrete Volterra equation for the given control, in increasing i.
pub fn forward_solve(dp: &DiscreteProblem<'_>, c: &DiscreteControl) -> Result<Trajectory> {
    check_control(dp, c)?;
    let n = dp.state_dim();
    let steps = dp.steps();
    let mut states = vec![0.0; (steps + 1) * n];
    let mut x0_i = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut next = vec![0.0; n];
    for i in 0..=steps {
        dp.x0_into(i, &mut x0_i);
        let (done, _) = states.split_at(i * n);
        dp.advance_state(i, &x0_i, |j| (&done[j * n..(j + 1) * n], c.get(j)), &mut scratch, &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(MODULE, i, "state became non-finite in forward solve"));
        }
        states[i * n..(i + 1) * n].copy_from_slice(&next);
    }
    Ok(Trajectory { dim: n, states })
}

fn check_pair(dp: &DiscreteProblem<'_>, traj: &Trajectory, c: &DiscreteControl) -> Result<()> {
    if traj.len() != dp.steps() + 1 || traj.dim() != dp.state_dim() {
        return Err(Error::invalid(MODULE, "trajectory length does not match the grid"));
    }
    if c.len() != dp.steps() || c.dim() != dp.control_dim() {
        return Err(Error::invalid(MODULE, "control length does not match the grid"));
    }
    Ok(())
}

/// `Φ0(x(N)) + Σ_{i=from}^{N−1} Φ(i, x(i), u(i))`, accumulated from the last
/// stage backwards (the order in which the value recursion adds terms).
pub fn tail_cost(dp: &DiscreteProblem<'_>, traj: &Trajectory, c: &DiscreteControl, from: usize) -> Result<f64> {
    check_pair(dp, traj, c)?;
    if from > dp.steps() {
        return Err(Error::invalid(MODULE, "tail start exceeds N"));
    }
    let mut cost = dp.terminal_cost(traj.state(dp.steps()));
    for i in (from..dp.steps()).rev() {
        cost += dp.stage_cost(i, traj.state(i), c.get(i));
    }
    if !cost.is_finite() {
        return Err(Error::numerical(MODULE, from, "cost became non-finite"));
    }
    Ok(cost)
}

/// `Σ_{i<upto} Φ(i, x(i), u(i))`.
pub fn head_cost(dp: &DiscreteProblem<'_>, traj: &Trajectory, c: &DiscreteControl, upto: usize) -> Result<f64> {
    check_pair(dp, traj, c)?;
    Ok((0..upto.min(dp.steps()))
        .map(|i| dp.stage_cost(i, traj.state(i), c.get(i)))
        .sum())
}

/// `J^h = h·Σ_{i<N} F(t_i, x(i), u(i)) + F0(x(N))`.
pub fn discrete_cost(dp: &DiscreteProblem<'_>, traj: &Trajectory, c: &DiscreteControl) -> Result<f64> {
    tail_cost(dp, traj, c, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::builtin;
    use crate::problem::*;
    use proptest::prelude::*;

    /// Spreadsheet-style unroll of the discrete equation, independent of `advance_state`.
    fn unroll_scalar(a: f64, b: f64, x0: f64, h: f64, u: &[f64]) -> Vec<f64> {
        let mut x = vec![x0];
        for i in 1..=u.len() {
            let mut xi = x0;
            for j in 0..i {
                xi += h * (a * x[j] + b * u[j]);
            }
            x.push(xi);
        }
        x
    }

    fn with_costs(p: &VolterraProblem, running: RunningCost, terminal: TerminalCost) -> VolterraProblem {
        let mut cfg = p.to_config().unwrap();
        cfg.running_cost = running;
        cfg.terminal_cost = terminal;
        VolterraProblem::from_config(cfg).unwrap()
    }

    #[test]
    fn grid_nodes() {
        let g = Grid::new(1.0, 4).unwrap();
        assert_eq!(g.step(), 0.25);
        assert_eq!(g.nodes(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(Grid::new(1.0, 0).is_err());
        let p = builtin::lq();
        assert!(discretize(&p, 0).is_err());
    }

    #[test]
    fn phi_includes_step() {
        let zero = builtin::zero();
        let d = discretize(&zero, 3).unwrap();
        assert_eq!(d.phi(2, 1, &[5.0], &[1.0]).unwrap(), vec![0.0]);
        let p = builtin::scalar_linear(1.0, 0.0, 1.0, 1.0, (0.0, 1.0), 1.0);
        let d = discretize(&p, 2).unwrap();
        assert_eq!(d.phi(1, 0, &[3.0], &[0.0]).unwrap(), vec![1.5]);
        assert!(d.phi(1, 1, &[3.0], &[0.0]).is_err());
        assert!(d.phi(3, 0, &[3.0], &[0.0]).is_err());
    }

    #[test]
    fn forward_solve_examples() {
        let zero = builtin::zero();
        let d = discretize(&zero, 5).unwrap();
        let t = forward_solve(&d, &DiscreteControl::constant(&[0.3], 5)).unwrap();
        assert!(t.states().all(|x| x == [0.0]));

        let p = builtin::scalar_linear(1.0, 0.0, 1.0, 1.0, (0.0, 1.0), 1.0);
        let d = discretize(&p, 2).unwrap();
        let t = forward_solve(&d, &DiscreteControl::constant(&[0.0], 2)).unwrap();
        assert_eq!(t.to_rows(), vec![vec![1.0], vec![1.5], vec![2.25]]);
        assert_eq!(unroll_scalar(1.0, 0.0, 1.0, 0.5, &[0.0, 0.0]), vec![1.0, 1.5, 2.25]);

        let p = builtin::scalar_linear(0.0, 1.0, 0.0, 1.0, (0.0, 1.0), 1.0);
        let d = discretize(&p, 4).unwrap();
        let t = forward_solve(&d, &DiscreteControl::constant(&[1.0], 4)).unwrap();
        for i in 0..=4 {
            assert!((t.state(i)[0] - i as f64 * 0.25).abs() < 1e-15);
        }
        assert_eq!(t.state(4), [1.0]);
    }

    #[test]
    fn forward_solve_rejects_bad_controls() {
        let p = builtin::lq();
        let d = discretize(&p, 3).unwrap();
        assert!(forward_solve(&d, &DiscreteControl::constant(&[0.5], 2)).is_err());
        assert!(forward_solve(&d, &DiscreteControl::constant(&[1.5], 3)).is_err());
    }

    #[test]
    fn forward_solve_reports_overflow_stage() {
        let p = builtin::scalar_linear(1e300, 0.0, 1e300, 1.0, (0.0, 1.0), 1.0);
        let d = discretize(&p, 3).unwrap();
        match forward_solve(&d, &DiscreteControl::constant(&[0.0], 3)) {
            Err(Error::Numerical { stage, .. }) => assert_eq!(stage, 1),
            other => panic!("expected numerical failure, got {other:?}"),
        }
    }

    #[test]
    fn cost_examples() {
        let base = builtin::scalar_linear(0.0, 0.0, 2.5, 1.0, (0.0, 3.0), 1.0);
        let p = with_costs(&base, RunningCost::Zero, TerminalCost::Linear(LinearTerminal { weights: vec![1.0] }));
        let d = discretize(&p, 3).unwrap();
        let c = DiscreteControl::constant(&[0.0], 3);
        let t = forward_solve(&d, &c).unwrap();
        assert_eq!(discrete_cost(&d, &t, &c).unwrap(), 2.5);

        let p = with_costs(&base, RunningCost::Constant(ConstantScalar { value: 1.0 }), TerminalCost::Zero);
        for n in [1, 3, 4, 8] {
            let d = discretize(&p, n).unwrap();
            let c = DiscreteControl::constant(&[0.0], n);
            let t = forward_solve(&d, &c).unwrap();
            assert!((discrete_cost(&d, &t, &c).unwrap() - 1.0).abs() < 1e-15);
        }

        let p = with_costs(
            &base,
            RunningCost::Quadratic(QuadraticRunning {
                state_weight: 0.0,
                control_weight: 1.0,
                state_target: None,
                control_target: None,
            }),
            TerminalCost::Zero,
        );
        let d = discretize(&p, 5).unwrap();
        let c = DiscreteControl::constant(&[2.0], 5);
        let t = forward_solve(&d, &c).unwrap();
        assert!((discrete_cost(&d, &t, &c).unwrap() - 4.0).abs() < 1e-14);

        let short = Trajectory::from_flat(1, vec![0.0; 3]).unwrap();
        assert!(discrete_cost(&d, &short, &c).is_err());
    }

    proptest! {
        #[test]
        fn forward_solve_matches_unroll(
            a in -2.0f64..2.0, b in -2.0f64..2.0, x0 in -1.0f64..1.0,
            u in proptest::collection::vec(0.0f64..1.0, 1..12),
        ) {
            let n = u.len();
            let p = builtin::scalar_linear(a, b, x0, 1.0, (0.0, 1.0), 1.0);
            let d = discretize(&p, n).unwrap();
            let c = DiscreteControl::from_flat(1, u.clone()).unwrap();
            let t = forward_solve(&d, &c).unwrap();
            let expect = unroll_scalar(a, b, x0, d.step(), &u);
            for (i, e) in expect.iter().enumerate() {
                prop_assert!((t.state(i)[0] - e).abs() <= 1e-12 * (1.0 + e.abs()));
            }
        }

        #[test]
        fn forward_solve_is_causal(
            u in proptest::collection::vec(-1.0f64..1.0, 2..10),
            v in proptest::collection::vec(-1.0f64..1.0, 10),
            k in 0usize..10,
        ) {
            let n = u.len();
            let k = k % n;
            let p = builtin::memory_decay();
            let d = discretize(&p, n).unwrap();
            let c1 = DiscreteControl::from_flat(1, u.clone()).unwrap();
            let mut changed = u.clone();
            changed[k..].copy_from_slice(&v[k..n]);
            let c2 = DiscreteControl::from_flat(1, changed).unwrap();
            let t1 = forward_solve(&d, &c1).unwrap();
            let t2 = forward_solve(&d, &c2).unwrap();
            for i in 0..=k {
                prop_assert_eq!(t1.state(i), t2.state(i));
            }
        }

        #[test]
        fn cost_is_additive(
            u in proptest::collection::vec(0.0f64..1.0, 1..10),
            split in 0usize..10,
        ) {
            let n = u.len();
            let split = split % (n + 1);
            let p = builtin::logistic_memory();
            let d = discretize(&p, n).unwrap();
            let c = DiscreteControl::from_flat(1, u).unwrap();
            let t = forward_solve(&d, &c).unwrap();
            let total = discrete_cost(&d, &t, &c).unwrap();
            let parts = head_cost(&d, &t, &c, split).unwrap() + tail_cost(&d, &t, &c, split).unwrap();
            prop_assert!((total - parts).abs() <= 1e-13 * (1.0 + total.abs()));
        }
    }
}
