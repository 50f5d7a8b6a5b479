//! Backward value recursion over control histories.
//!
//! ```text
//! V(N, β) = Φ0(x(N; N, β))
//! V(i, β) = min_{ξ admissible} { V(i+1, β⊗ξ) + Φ(i, x(i; i, β), ξ) }
//! ```
//!
//! Every stage is a flat array indexed by [`HistoryCode`]. Entries within a
//! stage are independent, so each stage is split into contiguous chunks and
//! filled by a worker pool; the next stage is read-only meanwhile. Operation
//! counters are summed per chunk in chunk order.

use std::io::Write;

use rayon::prelude::*;
use rayon::ThreadPool;

use super::{ConstraintContext, ControlConstraint, Quantization};
use crate::costmodel::OpCounts;
use crate::discretize::DiscreteProblem;
use crate::error::{Error, Result};

const MODULE: &str = "dp";

/// Default cap on the total number of value-table entries, `Σ_i M^i`.
pub const DEFAULT_MEMORY_BUDGET: u64 = 1 << 31;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SweepOptions {
    pub workers: usize,
    /// Maximum value-table entries across all stages.
    pub memory_budget: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            workers: 1,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

impl SweepOptions {
    pub fn with_workers(workers: usize) -> Self {
        SweepOptions {
            workers,
            ..Default::default()
        }
    }
}

/// Value function and argmins for every stage, plus the prefix states
/// `x(i; i, β)` they were computed from.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueTable {
    steps: usize,
    controls: usize,
    state_dim: usize,
    values: Vec<Vec<f64>>,
    argmin: Vec<Vec<u32>>,
    states: Vec<Vec<f64>>,
    counts: OpCounts,
}

impl ValueTable {
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// M
    pub fn controls(&self) -> usize {
        self.controls
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    /// V(0, ∅)
    pub fn root_value(&self) -> f64 {
        self.values[0][0]
    }

    pub fn values(&self, stage: usize) -> &[f64] {
        &self.values[stage]
    }

    pub fn value(&self, stage: usize, code: u64) -> f64 {
        self.values[stage][code as usize]
    }

    pub fn argmin(&self, stage: usize) -> &[u32] {
        &self.argmin[stage]
    }

    pub fn prefix_states(&self, stage: usize) -> &[f64] {
        &self.states[stage]
    }

    pub fn counts(&self) -> OpCounts {
        self.counts
    }

    pub fn total_entries(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }

    /// Dumps all V values as little-endian f64, stage 0 first.
    pub fn write_binary(&self, mut out: impl Write) -> std::io::Result<()> {
        for stage in &self.values {
            for v in stage {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// `Σ_{i=0}^{N} M^i`, or `None` on overflow.
pub fn table_entries(steps: usize, controls: usize) -> Option<u128> {
    let mut total: u128 = 0;
    let mut size: u128 = 1;
    for i in 0..=steps {
        if i > 0 {
            size = size.checked_mul(controls as u128)?;
        }
        total = total.checked_add(size)?;
    }
    Some(total)
}

pub(crate) fn check_capacity(steps: usize, controls: usize, budget: u64) -> Result<()> {
    match table_entries(steps, controls) {
        Some(n) if n <= budget as u128 => Ok(()),
        Some(n) => Err(Error::capacity(MODULE, "value table entries", n, budget)),
        None => Err(Error::capacity(
            MODULE,
            "value table entries",
            format!("sum of {controls}^i for i <= {steps} (exceeds 2^128)"),
            budget,
        )),
    }
}

pub(crate) fn build_pool(workers: usize) -> Result<ThreadPool> {
    if workers == 0 {
        return Err(Error::invalid(MODULE, "worker count must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::internal(MODULE, format!("cannot start worker pool: {e}")))
}

fn chunk_entries(entries: usize, workers: usize) -> usize {
    entries.div_ceil(workers * 4).max(1)
}

pub(crate) fn check_lattice(dp: &DiscreteProblem<'_>, lattice: &Quantization) -> Result<()> {
    if lattice.dim() != dp.control_dim() {
        return Err(Error::invalid(MODULE, "quantization dimension differs from the control dimension"));
    }
    if (0..lattice.count()).any(|k| !dp.problem().contains_control(lattice.point(k))) {
        return Err(Error::invalid(MODULE, "quantization has points outside the control box"));
    }
    Ok(())
}

/// `M^k` for `k = 0..=steps`.
pub(crate) fn powers(controls: usize, steps: usize) -> Vec<usize> {
    std::iter::successors(Some(1usize), |p| p.checked_mul(controls))
        .take(steps + 1)
        .collect()
}

/// Fills `V(i, ·)` for all stages. See the module docs for the recursion.
pub fn backward_sweep(
    dp: &DiscreteProblem<'_>,
    lattice: &Quantization,
    constraint: Option<&dyn ControlConstraint>,
    opts: &SweepOptions,
) -> Result<ValueTable> {
    check_lattice(dp, lattice)?;
    let steps = dp.steps();
    let controls = lattice.count();
    check_capacity(steps, controls, opts.memory_budget)?;
    let pool = build_pool(opts.workers)?;
    let n = dp.state_dim();
    let pw = powers(controls, steps);
    let mut counts = OpCounts::default();

    // Prefix states, stage by stage. A stage-i history needs i kernel
    // evaluations against its ancestors' stored states.
    let mut states: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let mut x0_i = vec![0.0; n];
        dp.x0_into(i, &mut x0_i);
        counts.x0_evals += 1;
        let mut stage = vec![0.0; pw[i] * n];
        let done = &states;
        let per = chunk_entries(pw[i], opts.workers);
        let results: Vec<Result<OpCounts>> = pool.install(|| {
            stage
                .par_chunks_mut(per * n)
                .enumerate()
                .map(|(k, chunk)| {
                    let mut local = OpCounts::default();
                    let mut scratch = vec![0.0; n];
                    for (offset, out) in chunk.chunks_mut(n).enumerate() {
                        let code = k * per + offset;
                        dp.advance_state(
                            i,
                            &x0_i,
                            |j| {
                                let anc = code / pw[i - j];
                                let digit = (code / pw[i - 1 - j]) % controls;
                                (&done[j][anc * n..(anc + 1) * n], lattice.point(digit))
                            },
                            &mut scratch,
                            out,
                        );
                        local.f_evals += i as u64;
                        if out.iter().any(|v| !v.is_finite()) {
                            return Err(Error::numerical(MODULE, i, format!("prefix state of history {code} is non-finite")));
                        }
                    }
                    Ok(local)
                })
                .collect()
        });
        for r in results {
            counts += r?;
        }
        states.push(stage);
    }

    let mut values: Vec<Vec<f64>> = vec![Vec::new(); steps + 1];
    let mut argmin: Vec<Vec<u32>> = vec![Vec::new(); steps];

    let terminal: Vec<f64> = states[steps].chunks(n).map(|x| dp.terminal_cost(x)).collect();
    counts.phi_evals += terminal.len() as u64;
    if let Some(code) = terminal.iter().position(|v| !v.is_finite()) {
        return Err(Error::numerical(MODULE, steps, format!("terminal cost of history {code} is non-finite")));
    }
    values[steps] = terminal;

    for i in (0..steps).rev() {
        let next = &values[i + 1];
        let stage_states = &states[i];
        let mut v = vec![0.0; pw[i]];
        let mut arg = vec![0u32; pw[i]];
        let per = chunk_entries(pw[i], opts.workers);
        let results: Vec<Result<OpCounts>> = pool.install(|| {
            v.par_chunks_mut(per)
                .zip(arg.par_chunks_mut(per))
                .enumerate()
                .map(|(k, (vc, ac))| {
                    let mut local = OpCounts::default();
                    for (offset, (vo, ao)) in vc.iter_mut().zip(ac.iter_mut()).enumerate() {
                        let code = k * per + offset;
                        let x = &stage_states[code * n..(code + 1) * n];
                        let ctx = ConstraintContext {
                            stage: i,
                            previous: (i > 0).then_some(code % controls),
                            state: x,
                        };
                        let (best, xi) = minimize_stage(dp, lattice, constraint, &ctx, &next[code * controls..(code + 1) * controls], &mut local)
                            .ok_or_else(|| Error::internal(MODULE, format!("history {code} at stage {i} admits no control")))?;
                        if !best.is_finite() {
                            return Err(Error::numerical(MODULE, i, format!("value of history {code} is non-finite")));
                        }
                        *vo = best;
                        *ao = xi as u32;
                    }
                    Ok(local)
                })
                .collect()
        });
        for r in results {
            counts += r?;
        }
        values[i] = v;
        argmin[i] = arg;
    }

    Ok(ValueTable {
        steps,
        controls,
        state_dim: n,
        values,
        argmin,
        states,
        counts,
    })
}

/// `min_ξ { next[ξ] + Φ(i, x, ξ) }` over admissible ξ, lowest index on ties.
/// `next` holds `V(i+1, β⊗ξ)` for ξ = 0..M.
pub(crate) fn minimize_stage(
    dp: &DiscreteProblem<'_>,
    lattice: &Quantization,
    constraint: Option<&dyn ControlConstraint>,
    ctx: &ConstraintContext<'_>,
    next: &[f64],
    counts: &mut OpCounts,
) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (xi, tail) in next.iter().enumerate() {
        if let Some(c) = constraint {
            if !c.admits(ctx, lattice, xi) {
                continue;
            }
        }
        let candidate = tail + dp.stage_cost(ctx.stage, ctx.state, lattice.point(xi));
        counts.phi_evals += 1;
        match best {
            None => best = Some((candidate, xi)),
            Some((b, _)) => {
                counts.min_comparisons += 1;
                // NaN never wins; caught by the finiteness check on the result
                if candidate < b || b.is_nan() {
                    best = Some((candidate, xi));
                }
            }
        }
    }
    best
}
