use rand::rngs::ChaCha8Rng;
use rand::seq::IndexedRandom;
use rand::{RngExt, SeedableRng};
use serde::Serialize;

use super::MODULE;
use crate::discretize::{forward_solve, tail_cost, DiscreteControl, DiscreteProblem};
use crate::dp::{ConstraintContext, ControlConstraint, Quantization, ValueTable};
use crate::error::{Error, Result};

/// Slack on `V(i, β) ≤ J_{i,β}(tail)`, relative to `max(1, |J|)`.
pub const NECESSITY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct NecessityReport {
    pub seed: u64,
    pub histories: usize,
    pub tails_per_history: usize,
    /// Random tails whose cost fell below the tabulated value.
    pub violations: usize,
    /// Largest `V − J` seen over random tails (negative when all are above V).
    pub max_excess: f64,
    /// Histories where the greedy tail from the table did not attain V.
    pub attainment_failures: usize,
}

impl NecessityReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.attainment_failures == 0
    }
}

struct Walker<'a> {
    lattice: &'a Quantization,
    table: &'a ValueTable,
    constraint: Option<&'a dyn ControlConstraint>,
}

impl Walker<'_> {
    fn admissible(&self, stage: usize, code: usize, previous: Option<usize>) -> Vec<usize> {
        let n = self.table.state_dim();
        let ctx = ConstraintContext {
            stage,
            previous,
            state: &self.table.prefix_states(stage)[code * n..(code + 1) * n],
        };
        (0..self.lattice.count())
            .filter(|&xi| self.constraint.is_none_or(|c| c.admits(&ctx, self.lattice, xi)))
            .collect()
    }

    /// Extends `prefix` to N controls, choosing each next index with `pick`.
    fn extend(&self, prefix: &[usize], mut pick: impl FnMut(usize, usize, &[usize]) -> Result<usize>) -> Result<Vec<usize>> {
        let m = self.lattice.count();
        let mut seq = prefix.to_vec();
        let mut code = prefix.iter().fold(0usize, |c, &d| c * m + d);
        for stage in prefix.len()..self.table.steps() {
            let options = self.admissible(stage, code, seq.last().copied());
            if options.is_empty() {
                return Err(Error::internal(MODULE, format!("no admissible control at stage {stage}")));
            }
            let xi = pick(stage, code, &options)?;
            seq.push(xi);
            code = code * m + xi;
        }
        Ok(seq)
    }
}

fn to_control(lattice: &Quantization, seq: &[usize]) -> Result<DiscreteControl> {
    let mut flat = Vec::with_capacity(seq.len() * lattice.dim());
    for &d in seq {
        flat.extend_from_slice(lattice.point(d));
    }
    DiscreteControl::from_flat(lattice.dim(), flat)
}

/// Samples random stages and admissible histories β and checks that no random
/// admissible tail beats `V(i, β)`, and that following the stored argmins from
/// β attains it.
pub fn necessity_spot_check(
    dp: &DiscreteProblem<'_>,
    lattice: &Quantization,
    constraint: Option<&dyn ControlConstraint>,
    table: &ValueTable,
    histories: usize,
    tails: usize,
    seed: u64,
) -> Result<NecessityReport> {
    if table.steps() != dp.steps() || table.controls() != lattice.count() {
        return Err(Error::invalid(MODULE, "value table does not match the problem"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let walker = Walker { lattice, table, constraint };
    let steps = dp.steps();
    let mut report = NecessityReport {
        seed,
        histories,
        tails_per_history: tails,
        max_excess: f64::NEG_INFINITY,
        ..Default::default()
    };
    for _ in 0..histories {
        let stage = rng.random_range(0..steps);
        let full = walker.extend(&[], |_, _, opts| Ok(*opts.choose(&mut rng).expect("non-empty")))?;
        let prefix = &full[..stage];
        let code = prefix.iter().fold(0u64, |c, &d| c * lattice.count() as u64 + d as u64);
        let value = table.value(stage, code);

        for _ in 0..tails {
            let seq = walker.extend(prefix, |_, _, opts| Ok(*opts.choose(&mut rng).expect("non-empty")))?;
            let c = to_control(lattice, &seq)?;
            let j = tail_cost(dp, &forward_solve(dp, &c)?, &c, stage)?;
            let excess = value - j;
            report.max_excess = report.max_excess.max(excess);
            if excess > NECESSITY_TOLERANCE * j.abs().max(1.0) {
                report.violations += 1;
            }
        }

        let greedy = walker.extend(prefix, |i, code, _| Ok(table.argmin(i)[code] as usize))?;
        let c = to_control(lattice, &greedy)?;
        let j = tail_cost(dp, &forward_solve(dp, &c)?, &c, stage)?;
        if (j - value).abs() > NECESSITY_TOLERANCE * j.abs().max(1.0) {
            report.attainment_failures += 1;
        }
    }
    Ok(report)
}
