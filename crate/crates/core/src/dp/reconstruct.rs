use super::sweep::{check_lattice, minimize_stage};
use super::{ConstraintContext, ControlConstraint, HistoryCode, Quantization, ValueTable};
use crate::costmodel::OpCounts;
use crate::discretize::{DiscreteControl, DiscreteProblem};
use crate::error::{Error, Result};

const MODULE: &str = "dp";

/// `x(i; i, β)`: the stage-i state driven by the prefix β alone.
pub fn prefix_state(dp: &DiscreteProblem<'_>, lattice: &Quantization, code: &HistoryCode) -> Result<Vec<f64>> {
    check_lattice(dp, lattice)?;
    let stage = code.stage();
    if stage > dp.steps() {
        return Err(Error::invalid(MODULE, format!("history stage {stage} exceeds N = {}", dp.steps())));
    }
    let digits = code.decode(lattice.count());
    let n = dp.state_dim();
    let mut states = vec![0.0; (stage + 1) * n];
    let mut x0_i = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut next = vec![0.0; n];
    for i in 0..=stage {
        dp.x0_into(i, &mut x0_i);
        let done = &states[..i * n];
        dp.advance_state(i, &x0_i, |j| (&done[j * n..(j + 1) * n], lattice.point(digits[j])), &mut scratch, &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(MODULE, i, "prefix state became non-finite"));
        }
        states[i * n..(i + 1) * n].copy_from_slice(&next);
    }
    Ok(states.split_off(stage * n))
}

/// Walks the table forward from the empty history, choosing at each stage the
/// ξ minimizing `V(i+1, u*⊗ξ) + Φ(i, x(i; i, u*), ξ)` (lowest index on ties).
///
/// States along the path are recomputed from scratch and every minimization is
/// redone, so a table built for another problem, lattice or constraint is
/// detected and rejected.
pub fn forward_reconstruct(
    table: &ValueTable,
    dp: &DiscreteProblem<'_>,
    lattice: &Quantization,
    constraint: Option<&dyn ControlConstraint>,
) -> Result<DiscreteControl> {
    check_lattice(dp, lattice)?;
    let steps = dp.steps();
    let controls = lattice.count();
    let n = dp.state_dim();
    if table.steps() != steps || table.controls() != controls || table.state_dim() != n {
        return Err(Error::invalid(
            MODULE,
            format!(
                "value table has N = {}, M = {}, n = {}; problem has N = {steps}, M = {controls}, n = {n}",
                table.steps(),
                table.controls(),
                table.state_dim()
            ),
        ));
    }
    let mismatch = |i: usize, what: &str| Error::invalid(MODULE, format!("value table does not match the problem at stage {i}: {what}"));

    let mut chosen = Vec::with_capacity(steps);
    let mut states = vec![0.0; (steps + 1) * n];
    let mut x0_i = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut code = 0usize;
    let mut counts = OpCounts::default();
    for i in 0..=steps {
        dp.x0_into(i, &mut x0_i);
        let done = &states[..i * n];
        dp.advance_state(i, &x0_i, |j| (&done[j * n..(j + 1) * n], lattice.point(chosen[j])), &mut scratch, &mut x);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(MODULE, i, "reconstructed state became non-finite"));
        }
        if x[..] != table.prefix_states(i)[code * n..(code + 1) * n] {
            return Err(mismatch(i, "prefix state differs"));
        }
        states[i * n..(i + 1) * n].copy_from_slice(&x);
        if i == steps {
            if dp.terminal_cost(&x).to_bits() != table.values(steps)[code].to_bits() {
                return Err(mismatch(i, "terminal value differs"));
            }
            break;
        }
        let ctx = ConstraintContext {
            stage: i,
            previous: chosen.last().copied(),
            state: &x,
        };
        let next = &table.values(i + 1)[code * controls..(code + 1) * controls];
        let (best, xi) = minimize_stage(dp, lattice, constraint, &ctx, next, &mut counts)
            .ok_or_else(|| Error::internal(MODULE, format!("no admissible control at stage {i}")))?;
        if best.to_bits() != table.values(i)[code].to_bits() || xi != table.argmin(i)[code] as usize {
            return Err(mismatch(i, "minimization differs from the stored value"));
        }
        chosen.push(xi);
        code = code * controls + xi;
    }
    let mut values = Vec::with_capacity(steps * lattice.dim());
    for &xi in &chosen {
        values.extend_from_slice(lattice.point(xi));
    }
    DiscreteControl::from_flat(lattice.dim(), values)
}
