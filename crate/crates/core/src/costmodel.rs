//! Operation-count model of the value recursion.
//!
//! With `A` the per-history optimization cost and `C_Φ0 + i·C_Φ1` the cost of
//! one Φ evaluation at stage i, the cost of the stage-i sweep obeys
//!
//! ```text
//! φ(V; N) = M^{N+1}(C_Φ0 + N·C_Φ1)
//! φ(V; i) = φ(V; i+1) + M^{i+1}(C_Φ0 + i·C_Φ1) + M^i·A
//! total   = Σ_{i=1}^{N} φ(V; i)
//! ```
//!
//! [`predict_recursive`] evaluates this in checked 128-bit integers and is the
//! reference. [`predict_closed_form`] evaluates the published three-term
//! closed form exactly over the rationals so that the two can be compared.

use std::io::Write;
use std::ops::{Add, AddAssign};
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::dp::{solve, SweepOptions};
use crate::error::{Error, Result};
use crate::problem::VolterraProblem;

const MODULE: &str = "costmodel";

/// Operation tallies from an instrumented backward sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpCounts {
    pub f_evals: u64,
    pub phi_evals: u64,
    pub x0_evals: u64,
    pub min_comparisons: u64,
}

impl Add for OpCounts {
    type Output = OpCounts;

    fn add(mut self, rhs: OpCounts) -> OpCounts {
        self += rhs;
        self
    }
}

impl AddAssign for OpCounts {
    fn add_assign(&mut self, rhs: OpCounts) {
        self.f_evals += rhs.f_evals;
        self.phi_evals += rhs.phi_evals;
        self.x0_evals += rhs.x0_evals;
        self.min_comparisons += rhs.min_comparisons;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostParams {
    #[serde(rename = "N")]
    pub steps: u64,
    #[serde(rename = "M")]
    pub controls: u64,
    pub c_phi0: u64,
    pub c_phi1: u64,
    /// Per-history optimization plus interpolation cost.
    pub a: u64,
}

impl CostParams {
    /// C_Φ0 = 1, C_Φ1 = 0, A = 0: the total counts Φ evaluations.
    pub fn counting(steps: u64, controls: u64) -> Self {
        CostParams {
            steps,
            controls,
            c_phi0: 1,
            c_phi1: 0,
            a: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.controls < 1 {
            return Err(Error::invalid(MODULE, "M must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RecursivePrediction {
    /// φ(V; i) for i = 0..=N.
    pub stages: Vec<u128>,
    /// Σ_{i=1}^{N} φ(V; i)
    pub total: u128,
}

fn overflow(params: &CostParams) -> Error {
    Error::capacity(
        MODULE,
        "128-bit cost arithmetic",
        format!("N = {}, M = {}", params.steps, params.controls),
        "u128::MAX",
    )
}

pub fn predict_recursive(params: &CostParams) -> Result<RecursivePrediction> {
    params.validate()?;
    let ovf = || overflow(params);
    let n = params.steps as usize;
    let m = params.controls as u128;
    let pow = |k: u64| m.checked_pow(u32::try_from(k).map_err(|_| ovf())?).ok_or_else(ovf);
    let per_phi = |i: u64| -> Result<u128> {
        (params.c_phi1 as u128)
            .checked_mul(i as u128)
            .and_then(|v| v.checked_add(params.c_phi0 as u128))
            .ok_or_else(ovf)
    };

    let mut stages = vec![0u128; n + 1];
    stages[n] = pow(params.steps + 1)?.checked_mul(per_phi(params.steps)?).ok_or_else(ovf)?;
    for i in (0..n).rev() {
        let k = i as u64;
        let phi = pow(k + 1)?.checked_mul(per_phi(k)?).ok_or_else(ovf)?;
        let opt = pow(k)?.checked_mul(params.a as u128).ok_or_else(ovf)?;
        stages[i] = stages[i + 1]
            .checked_add(phi)
            .and_then(|v| v.checked_add(opt))
            .ok_or_else(ovf)?;
    }
    let total = stages[1..]
        .iter()
        .try_fold(0u128, |acc, v| acc.checked_add(*v))
        .ok_or_else(ovf)?;
    Ok(RecursivePrediction { stages, total })
}

/// The closed form, term by term, with `A₀` read as `A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedForm {
    pub c_phi0_term: BigRational,
    pub c_phi1_term: BigRational,
    pub a_term: BigRational,
}

impl ClosedForm {
    pub fn total(&self) -> BigRational {
        &self.c_phi0_term + &self.c_phi1_term + &self.a_term
    }
}

pub fn predict_closed_form(params: &CostParams) -> Result<ClosedForm> {
    params.validate()?;
    if params.controls < 2 {
        return Err(Error::invalid(MODULE, "the closed form divides by M - 1; use predict_recursive for M = 1"));
    }
    let n = BigInt::from(params.steps);
    let m = BigInt::from(params.controls);
    let mp = |k: u64| -> BigInt { num_traits::pow(m.clone(), k as usize) };
    let big_n = params.steps;
    let d: BigInt = &m - 1;
    let d2: BigInt = &d * &d;
    let d3: BigInt = &d2 * &d;
    let one = BigInt::from(1);
    let two = BigInt::from(2);

    let t0 = &n * mp(big_n + 2) - (&n + &one) * mp(big_n + 1) + &m;
    let t1 = &n * &n * mp(big_n + 3) - (&two * &n * &n + &two * &n - &one) * mp(big_n + 2)
        + (&n + &one) * (&n + &one) * mp(big_n + 1)
        - &m * &m
        - &m;
    let ta = (&n - &one) * mp(big_n + 1) - &n * mp(big_n) + &m;

    Ok(ClosedForm {
        c_phi0_term: BigRational::new(BigInt::from(params.c_phi0) * t0, d2.clone()),
        c_phi1_term: BigRational::new(BigInt::from(params.c_phi1) * t1, d3),
        a_term: BigRational::new(BigInt::from(params.a) * ta, d2),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComparisonRow {
    #[serde(rename = "N")]
    pub steps: u64,
    #[serde(rename = "M")]
    pub controls: u64,
    pub recursive_total: String,
    pub closed_form_total: String,
    /// closed form minus recursion
    pub delta: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComparisonTable {
    pub c_phi0: u64,
    pub c_phi1: u64,
    pub a: u64,
    /// The closed form's last coefficient is written A₀; it is evaluated as A.
    pub note: String,
    pub rows: Vec<ComparisonRow>,
    pub mismatches: usize,
}

/// Closed form against recursion for every `(N, M)` in the given ranges, with
/// the cost coefficients of `coeffs` (its N and M are ignored).
pub fn comparison_table(steps: impl IntoIterator<Item = u64>, controls: &[u64], coeffs: &CostParams) -> Result<ComparisonTable> {
    let mut rows = Vec::new();
    for n in steps {
        for &m in controls {
            let params = CostParams {
                steps: n,
                controls: m,
                ..*coeffs
            };
            let rec = BigRational::from_integer(BigInt::from(predict_recursive(&params)?.total));
            let closed = predict_closed_form(&params)?.total();
            let delta = &closed - &rec;
            rows.push(ComparisonRow {
                steps: n,
                controls: m,
                recursive_total: rec.to_string(),
                closed_form_total: closed.to_string(),
                delta: delta.to_string(),
            });
        }
    }
    let mismatches = rows.iter().filter(|r| r.delta != "0").count();
    Ok(ComparisonTable {
        c_phi0: coeffs.c_phi0,
        c_phi1: coeffs.c_phi1,
        a: coeffs.a,
        note: "A0 in the closed form is evaluated as A".into(),
        rows,
        mismatches,
    })
}

impl ComparisonTable {
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["N", "M", "recursive_total", "closed_form_total", "delta"])?;
        for r in &self.rows {
            w.write_record([
                r.steps.to_string(),
                r.controls.to_string(),
                r.recursive_total.clone(),
                r.closed_form_total.clone(),
                r.delta.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        self.write_csv(std::fs::File::create(dir.join(format!("{stem}.csv")))?)?;
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Counts the memoized sweep performs on an unconstrained lattice of M points:
/// `Σ_{i=0}^{N} i·M^i` kernel evaluations, `N + 1` evaluations of x0,
/// `Σ_{i=0}^{N−1} M^{i+1}` stage costs plus `M^N` terminal costs, and `M − 1`
/// comparisons for each of the `Σ_{i<N} M^i` minimizations.
pub fn predicted_counts(steps: u64, controls: u64) -> Result<OpCounts> {
    let params = CostParams::counting(steps, controls);
    params.validate()?;
    let ovf = || overflow(&params);
    let m = controls as u128;
    let mut f = 0u128;
    let mut phi = 0u128;
    let mut histories = 0u128;
    let mut size = 1u128;
    for i in 0..=steps as u128 {
        f = size.checked_mul(i).and_then(|v| v.checked_add(f)).ok_or_else(ovf)?;
        if i < steps as u128 {
            histories = histories.checked_add(size).ok_or_else(ovf)?;
            phi = size.checked_mul(m).and_then(|v| v.checked_add(phi)).ok_or_else(ovf)?;
        } else {
            phi = phi.checked_add(size).ok_or_else(ovf)?;
        }
        if i < steps as u128 {
            size = size.checked_mul(m).ok_or_else(ovf)?;
        }
    }
    let narrow = |v: u128| u64::try_from(v).map_err(|_| ovf());
    Ok(OpCounts {
        f_evals: narrow(f)?,
        phi_evals: narrow(phi)?,
        x0_evals: steps + 1,
        min_comparisons: narrow(histories * (m - 1))?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterComparison {
    pub counter: String,
    pub predicted: u128,
    pub measured: u128,
    pub equal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstrumentReport {
    #[serde(rename = "N")]
    pub steps: u64,
    #[serde(rename = "M")]
    pub controls: u64,
    pub measured: OpCounts,
    /// Against the sweep's own accounting ([`predicted_counts`]).
    pub accounting: Vec<CounterComparison>,
    /// Measured Φ evaluations against the recursive total in the counting
    /// configuration.
    pub recursive: CounterComparison,
}

impl InstrumentReport {
    pub fn accounting_matches(&self) -> bool {
        self.accounting.iter().all(|c| c.equal)
    }
}

fn compare(counter: &str, predicted: u128, measured: u128) -> CounterComparison {
    CounterComparison {
        counter: counter.into(),
        predicted,
        measured,
        equal: predicted == measured,
    }
}

/// Runs an unconstrained solve with counters on and sets the measured counts
/// against both predictions.
pub fn instrument_and_compare(problem: &VolterraProblem, steps: usize, per_axis: usize, opts: &SweepOptions) -> Result<InstrumentReport> {
    let report = solve(problem, steps, per_axis, false, opts)?;
    let measured = report.counts;
    let n = steps as u64;
    let m = report.settings.controls as u64;
    let predicted = predicted_counts(n, m)?;
    let recursive = predict_recursive(&CostParams::counting(n, m))?;
    Ok(InstrumentReport {
        steps: n,
        controls: m,
        measured,
        accounting: vec![
            compare("f_evals", predicted.f_evals.into(), measured.f_evals.into()),
            compare("phi_evals", predicted.phi_evals.into(), measured.phi_evals.into()),
            compare("x0_evals", predicted.x0_evals.into(), measured.x0_evals.into()),
            compare("min_comparisons", predicted.min_comparisons.into(), measured.min_comparisons.into()),
        ],
        recursive: compare("phi_evals", recursive.total, measured.phi_evals.into()),
    })
}
