use serde::Serialize;

use super::{backward_sweep, forward_reconstruct, quantize, ConstraintBand, ControlConstraint, Quantization, SweepOptions, ValueTable};
use crate::costmodel::OpCounts;
use crate::discretize::{discrete_cost, discretize, forward_solve, DiscreteControl, DiscreteProblem, Trajectory};
use crate::error::{Error, Result};
use crate::problem::{RelevantSet, VolterraProblem};

const MODULE: &str = "dp";

/// Relative agreement required between V(0, ∅) and the cost of the
/// reconstructed control.
pub const VALUE_COST_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveSettings {
    #[serde(rename = "N")]
    pub steps: usize,
    #[serde(rename = "Q")]
    pub per_axis: usize,
    #[serde(rename = "M")]
    pub controls: usize,
    pub band: bool,
    pub lipschitz_budget: f64,
    pub horizon: f64,
    pub step: f64,
}

/// Outcome of one discrete solve. The value table is kept for inspection but
/// not serialized.
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub value: f64,
    pub cost: f64,
    pub control: Vec<Vec<f64>>,
    pub control_indices: Vec<usize>,
    pub trajectory: Vec<Vec<f64>>,
    pub counts: OpCounts,
    pub settings: SolveSettings,
    pub relevant_set: Option<RelevantSet>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub discrete_control: DiscreteControl,
    #[serde(skip)]
    pub discrete_trajectory: Trajectory,
    #[serde(skip)]
    pub table: ValueTable,
}

/// Discretizes with N steps, quantizes with Q levels per axis and runs the
/// sweep and reconstruction, optionally under the Lipschitz band.
pub fn solve(problem: &VolterraProblem, steps: usize, per_axis: usize, use_band: bool, opts: &SweepOptions) -> Result<SolveReport> {
    let dp = discretize(problem, steps)?;
    let lattice = quantize(problem.control_box(), per_axis)?;
    let band = ConstraintBand::new(problem.lipschitz_budget(), dp.step());
    let constraint: Option<&dyn ControlConstraint> = if use_band { Some(&band) } else { None };
    let mut report = solve_discrete(&dp, &lattice, constraint, opts)?;
    report.settings.band = use_band;
    Ok(report)
}

/// [`solve`] on an already discretized problem with an arbitrary constraint.
pub fn solve_discrete(
    dp: &DiscreteProblem<'_>,
    lattice: &Quantization,
    constraint: Option<&dyn ControlConstraint>,
    opts: &SweepOptions,
) -> Result<SolveReport> {
    let table = backward_sweep(dp, lattice, constraint, opts)?;
    let control = forward_reconstruct(&table, dp, lattice, constraint)?;
    let trajectory = forward_solve(dp, &control)?;
    let cost = discrete_cost(dp, &trajectory, &control)?;
    let value = table.root_value();
    let scale = value.abs().max(cost.abs());
    if (value - cost).abs() > VALUE_COST_TOLERANCE * scale {
        return Err(Error::internal(
            MODULE,
            format!("V(0) = {value:e} differs from the reconstructed cost {cost:e}"),
        ));
    }

    let mut warnings = Vec::new();
    let relevant_set = match dp.problem().relevant_set() {
        Ok(set) => {
            if let Some(i) = trajectory.states().position(|x| !set.contains(x)) {
                warnings.push(format!(
                    "optimal trajectory leaves the relevant set (radius {}) at stage {i}",
                    set.radius
                ));
            }
            Some(set)
        }
        Err(e) => {
            warnings.push(format!("no relevant-set bound available: {e}"));
            None
        }
    };

    let control_indices = control
        .rows()
        .map(|u| lattice.index_of(u))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::internal(MODULE, "reconstructed control is off the lattice"))?;

    Ok(SolveReport {
        value,
        cost,
        control: control.to_rows(),
        control_indices,
        trajectory: trajectory.to_rows(),
        counts: table.counts(),
        settings: SolveSettings {
            steps: dp.steps(),
            per_axis: lattice.per_axis(),
            controls: lattice.count(),
            band: constraint.is_some(),
            lipschitz_budget: dp.problem().lipschitz_budget(),
            horizon: dp.problem().horizon(),
            step: dp.step(),
        },
        relevant_set,
        warnings,
        discrete_control: control,
        discrete_trajectory: trajectory,
        table,
    })
}
