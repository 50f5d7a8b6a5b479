use rayon::prelude::*;

use crate::discretize::{discrete_cost, forward_solve, DiscreteControl, DiscreteProblem};
use crate::dp::{build_pool, ConstraintContext, ControlConstraint, Quantization};
use crate::error::{Error, Result};

use super::MODULE;

/// Default cap on the number of sequences `M^N` enumerated.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerateOptions {
    pub workers: usize,
    pub cap: u64,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        EnumerateOptions {
            workers: 1,
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

impl EnumerateOptions {
    pub fn with_workers(workers: usize) -> Self {
        EnumerateOptions {
            workers,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Enumeration {
    pub control: DiscreteControl,
    pub indices: Vec<usize>,
    pub value: f64,
    /// Sequences that passed the constraint.
    pub admissible: u64,
}

fn digits_of(mut k: u64, steps: usize, controls: u64, out: &mut [usize]) {
    for d in out[..steps].iter_mut().rev() {
        *d = (k % controls) as usize;
        k /= controls;
    }
}

fn control_of(lattice: &Quantization, digits: &[usize]) -> Result<DiscreteControl> {
    let mut flat = Vec::with_capacity(digits.len() * lattice.dim());
    for &d in digits {
        flat.extend_from_slice(lattice.point(d));
    }
    DiscreteControl::from_flat(lattice.dim(), flat)
}

struct Best {
    value: f64,
    index: u64,
}

/// Minimum discrete cost over every admissible index sequence, found by
/// forward-solving each one. Sequences are visited in lexicographic order and
/// the first minimum wins, so ties go to the lexicographically smallest.
pub fn enumerate_min(
    dp: &DiscreteProblem<'_>,
    lattice: &Quantization,
    constraint: Option<&dyn ControlConstraint>,
    opts: &EnumerateOptions,
) -> Result<Enumeration> {
    if lattice.dim() != dp.control_dim() {
        return Err(Error::invalid(MODULE, "quantization dimension differs from the control dimension"));
    }
    let steps = dp.steps();
    let controls = lattice.count() as u64;
    let total = u32::try_from(steps)
        .ok()
        .and_then(|n| controls.checked_pow(n))
        .filter(|t| *t <= opts.cap)
        .ok_or_else(|| Error::capacity(MODULE, "enumerated sequences M^N", format!("{controls}^{steps}"), opts.cap))?;
    let pool = build_pool(opts.workers)?;

    let chunks = (opts.workers as u64 * 8).min(total).max(1);
    let per = total.div_ceil(chunks);
    let results: Vec<Result<(Option<Best>, u64)>> = pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut best: Option<Best> = None;
                let mut admissible = 0u64;
                let mut digits = vec![0usize; steps];
                for k in c * per..((c + 1) * per).min(total) {
                    digits_of(k, steps, controls, &mut digits);
                    let control = control_of(lattice, &digits)?;
                    let traj = forward_solve(dp, &control)?;
                    if let Some(band) = constraint {
                        let ok = (0..steps).all(|i| {
                            let ctx = ConstraintContext {
                                stage: i,
                                previous: i.checked_sub(1).map(|p| digits[p]),
                                state: traj.state(i),
                            };
                            band.admits(&ctx, lattice, digits[i])
                        });
                        if !ok {
                            continue;
                        }
                    }
                    admissible += 1;
                    let value = discrete_cost(dp, &traj, &control)?;
                    if best.as_ref().is_none_or(|b| value < b.value) {
                        best = Some(Best { value, index: k });
                    }
                }
                Ok((best, admissible))
            })
            .collect()
    });

    let mut best: Option<Best> = None;
    let mut admissible = 0;
    for r in results {
        let (b, n) = r?;
        admissible += n;
        if let Some(b) = b {
            if best.as_ref().is_none_or(|cur| b.value < cur.value) {
                best = Some(b);
            }
        }
    }
    let best = best.ok_or_else(|| Error::internal(MODULE, "no admissible control sequence"))?;
    let mut indices = vec![0; steps];
    digits_of(best.index, steps, controls, &mut indices);
    Ok(Enumeration {
        control: control_of(lattice, &indices)?,
        indices,
        value: best.value,
        admissible,
    })
}
