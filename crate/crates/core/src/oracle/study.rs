use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use super::reference::{fine_grid_solution, linear_reference_cost, linear_reference_for};
use super::MODULE;
use crate::discretize::{discrete_cost, discretize, forward_solve, interpolate, sample, ControlSignal, Trajectory};
use crate::dp::{build_pool, solve, SweepOptions};
use crate::error::{Error, Result};
use crate::problem::{max_abs, VolterraProblem};

/// Fine-grid references use at least this many fine steps per coarse step.
pub const FINE_FACTOR: usize = 64;

const MAX_FINE_STEPS: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub steps: usize,
    pub h: f64,
    pub state_error: f64,
    pub cost_error: f64,
    /// Only set by the optimality-gap study.
    pub gap: Option<f64>,
}

/// Fitted slope of log(error) against log(h). Degenerate fits (some error is
/// zero) give the `inf` sentinel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Order(pub f64);

impl Order {
    pub const SENTINEL: Order = Order(f64::INFINITY);

    pub fn is_sentinel(&self) -> bool {
        self.0.is_infinite()
    }
}

impl Serialize for Order {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_sentinel() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

/// Least-squares slope of `log(error)` on `log(h)`.
pub fn fit_order(h: &[f64], errors: &[f64]) -> Order {
    if h.len() != errors.len() || h.len() < 2 || errors.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Order::SENTINEL;
    }
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Order::SENTINEL;
    }
    Order(sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    Linear,
    FineGrid,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub reference: ReferenceKind,
    pub rows: Vec<ConvergenceRow>,
    pub state_order: Order,
    pub cost_order: Order,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapStudy {
    #[serde(rename = "Q")]
    pub per_axis: usize,
    pub fine_steps: usize,
    /// Smallest surrogate cost across the runs.
    pub reference_cost: f64,
    pub rows: Vec<ConvergenceRow>,
}

fn check_steps_list(list: &[usize], min_len: usize) -> Result<()> {
    if list.len() < min_len {
        return Err(Error::invalid(MODULE, format!("N list needs at least {min_len} entries")));
    }
    if list[0] == 0 || list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(MODULE, "N list must be positive and strictly increasing"));
    }
    Ok(())
}

fn max_state_error(coarse: &Trajectory, reference: impl Fn(usize) -> Vec<f64>) -> f64 {
    (0..coarse.len())
        .map(|i| {
            let r = reference(i);
            max_abs(&coarse.state(i).iter().zip(&r).map(|(a, b)| a - b).collect::<Vec<_>>())
        })
        .fold(0.0, f64::max)
}

/// State and cost errors of the Euler scheme against the continuous solution
/// for each N. The exact linear solution is used when the problem admits it,
/// otherwise the Euler solution with `64·N` steps.
pub fn convergence_study(p: &VolterraProblem, u: &dyn ControlSignal, steps_list: &[usize], workers: usize) -> Result<ConvergenceStudy> {
    check_steps_list(steps_list, 3)?;
    if u.dim() != p.control_dim() {
        return Err(Error::invalid(MODULE, "control dimension differs from the problem"));
    }
    let linear = p.as_scalar_linear().is_some();
    let exact_cost = if linear { Some(linear_reference_cost(p, u)?) } else { None };
    let pool = build_pool(workers)?;
    let rows: Vec<Result<ConvergenceRow>> = pool.install(|| {
        steps_list
            .par_iter()
            .map(|&n| {
                let dp = discretize(p, n)?;
                let c = sample(u, &dp.grid());
                let traj = forward_solve(&dp, &c)?;
                let cost = discrete_cost(&dp, &traj, &c)?;
                let (state_error, reference_cost) = match exact_cost {
                    Some(j) => {
                        let exact = linear_reference_for(p, u, n)?;
                        (max_state_error(&traj, |i| vec![exact.states[i]]), j)
                    }
                    None => {
                        let fine_steps = FINE_FACTOR * n;
                        let (fine, j) = fine_grid_solution(p, u, fine_steps)?;
                        (max_state_error(&traj, |i| fine.state(i * FINE_FACTOR).to_vec()), j)
                    }
                };
                Ok(ConvergenceRow {
                    steps: n,
                    h: dp.step(),
                    state_error,
                    cost_error: (reference_cost - cost).abs(),
                    gap: None,
                })
            })
            .collect()
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let state_order = fit_order(&h, &rows.iter().map(|r| r.state_error).collect::<Vec<_>>());
    let cost_order = fit_order(&h, &rows.iter().map(|r| r.cost_error).collect::<Vec<_>>());
    Ok(ConvergenceStudy {
        reference: if linear { ReferenceKind::Linear } else { ReferenceKind::FineGrid },
        rows,
        state_order,
        cost_order,
    })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// For each N: solve under the Lipschitz band, interpolate the optimal control,
/// and cost it on a common fine grid. The gap is measured from the smallest of
/// those costs. The fine grid has `64·lcm(N list)` steps so that every coarse
/// node is a fine node.
pub fn optimality_gap_study(p: &VolterraProblem, per_axis: usize, steps_list: &[usize], opts: &SweepOptions) -> Result<GapStudy> {
    check_steps_list(steps_list, 1)?;
    let lcm = steps_list.iter().try_fold(1usize, |acc, &n| (acc / gcd(acc, n)).checked_mul(n));
    let fine_steps = lcm
        .and_then(|l| l.checked_mul(FINE_FACTOR))
        .filter(|f| *f <= MAX_FINE_STEPS)
        .ok_or_else(|| Error::capacity(MODULE, "fine grid steps 64*lcm(N list)", "more", MAX_FINE_STEPS))?;

    let mut runs = Vec::with_capacity(steps_list.len());
    for &n in steps_list {
        let report = solve(p, n, per_axis, true, opts)?;
        let grid = discretize(p, n)?.grid();
        let smooth = interpolate(&report.discrete_control, &grid, p.lipschitz_budget())?;
        let (fine, j) = fine_grid_solution(p, &smooth, fine_steps)?;
        let stride = fine_steps / n;
        let state_error = max_state_error(&report.discrete_trajectory, |i| fine.state(i * stride).to_vec());
        runs.push((n, grid.step(), state_error, (j - report.value).abs(), j));
    }
    let reference_cost = runs.iter().map(|r| r.4).fold(f64::INFINITY, f64::min);
    Ok(GapStudy {
        per_axis,
        fine_steps,
        reference_cost,
        rows: runs
            .into_iter()
            .map(|(steps, h, state_error, cost_error, j)| ConvergenceRow {
                steps,
                h,
                state_error,
                cost_error,
                gap: Some(j - reference_cost),
            })
            .collect(),
    })
}

/// `N,h,state_error,cost_error,gap`; the gap column is empty when absent.
pub fn write_rows_csv(rows: &[ConvergenceRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["N", "h", "state_error", "cost_error", "gap"])?;
    for r in rows {
        w.write_record([
            r.steps.to_string(),
            format!("{:.16e}", r.h),
            format!("{:.16e}", r.state_error),
            format!("{:.16e}", r.cost_error),
            r.gap.map(|g| format!("{g:.16e}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<stem>.csv` with the rows and `<stem>.json` with the full summary.
pub fn save_study<T: Serialize>(dir: &Path, stem: &str, rows: &[ConvergenceRow], summary: &T) -> Result<()> {
    write_rows_csv(rows, std::fs::File::create(dir.join(format!("{stem}.csv")))?)?;
    std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(summary)? + "\n")?;
    Ok(())
}
