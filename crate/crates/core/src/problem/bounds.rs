//! A priori bounds on the states a problem can reach (the relevant set).
//!
//! Both estimators come from Gronwall's inequality applied to the integral
//! equation; the discrete Euler recursion obeys the same bounds because
//! `(1 + hG)^(T/h) ≤ exp(GT)`.

use serde::{Deserialize, Serialize};

use super::{KernelSpec, VolterraProblem, Kernel};
use crate::error::{Error, Result};

const MODULE: &str = "problem";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelevantSetMethod {
    Growth,
    Lipschitz,
    User,
}

/// Max-norm ball `{x : |x|∞ ≤ radius}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelevantSet {
    pub radius: f64,
    pub method: RelevantSetMethod,
}

impl RelevantSet {
    pub fn contains(&self, x: &[f64]) -> bool {
        super::max_abs(x) <= self.radius
    }
}

fn check_args(args: &[(&str, f64)]) -> Result<()> {
    for (name, v) in args {
        if !(v.is_finite() && *v >= 0.0) {
            return Err(Error::invalid(
                MODULE,
                format!("{name} must be finite and non-negative, got {v}"),
            ));
        }
    }
    Ok(())
}

fn finite_radius(radius: f64, method: RelevantSetMethod) -> Result<RelevantSet> {
    if radius.is_finite() {
        Ok(RelevantSet { radius, method })
    } else {
        Err(Error::numerical(MODULE, 0, "relevant-set radius overflowed"))
    }
}

/// Radius under the linear growth condition `|f| ≤ G1|x| + G0`:
/// `(‖x0‖∞ + T·G0)·exp(G1·T)`.
pub fn relevant_radius_growth(g0: f64, g1: f64, x0_sup: f64, horizon: f64) -> Result<RelevantSet> {
    check_args(&[("G0", g0), ("G1", g1), ("x0_sup", x0_sup), ("T", horizon)])?;
    finite_radius((x0_sup + horizon * g0) * (g1 * horizon).exp(), RelevantSetMethod::Growth)
}

/// Radius when f is Lipschitz in x with constant Lf1 and `|f(t,s,0,u)| ≤ G2`:
/// `(G2·T + ‖x0‖∞)·exp(Lf1·T)`.
pub fn relevant_radius_lipschitz(g2: f64, lf1: f64, x0_sup: f64, horizon: f64) -> Result<RelevantSet> {
    check_args(&[("G2", g2), ("Lf1", lf1), ("x0_sup", x0_sup), ("T", horizon)])?;
    finite_radius((g2 * horizon + x0_sup) * (lf1 * horizon).exp(), RelevantSetMethod::Lipschitz)
}

impl VolterraProblem {
    /// The relevant set used by the solver: the manual override when one is
    /// configured, otherwise the growth bound for built-in kernels and the
    /// Lipschitz bound for custom ones.
    pub fn relevant_set(&self) -> Result<RelevantSet> {
        if let Some(radius) = self.manual_radius() {
            return Ok(RelevantSet {
                radius,
                method: RelevantSetMethod::User,
            });
        }
        let t = self.horizon();
        let x0_sup = self.initial_function().sup_norm(t);
        let u_sup = self.control_sup();
        match self.kernel() {
            Kernel::Builtin(KernelSpec::Linear(p)) => {
                relevant_radius_growth(p.b.norm_inf() * u_sup, p.a.norm_inf(), x0_sup, t)
            }
            // exp(−κ(t−s)) ≤ 1 on the time triangle
            Kernel::Builtin(KernelSpec::MemoryDecay(p)) => {
                relevant_radius_growth(p.b.norm_inf() * u_sup, p.a.norm_inf(), x0_sup, t)
            }
            Kernel::Builtin(KernelSpec::LogisticMemory(p)) => {
                logistic_radius(p.c.abs(), p.b.abs() * u_sup, x0_sup, t)
            }
            Kernel::Custom(k) => {
                relevant_radius_lipschitz(k.bound_at_zero_state(), k.state_lipschitz(), x0_sup, t)
            }
        }
    }
}

/// On the ball of radius R, `|c·x(1−x)| ≤ c(1+R)|x|`, so the growth bound with
/// G1 = c(1+R) is self-consistent once `(x0_sup + T·G0)·exp(c(1+R)T) ≤ R`.
/// Finds the smallest such R by fixed-point iteration from below.
fn logistic_radius(c: f64, g0: f64, x0_sup: f64, horizon: f64) -> Result<RelevantSet> {
    let base = x0_sup + horizon * g0;
    let g = |r: f64| base * (c * (1.0 + r) * horizon).exp();
    let mut r = base;
    for _ in 0..100_000 {
        let next = g(r);
        if !next.is_finite() || next > 1e12 {
            break;
        }
        if next - r <= 1e-13 * next.max(1.0) {
            // nudge above the fixed point until the bound closes
            for k in 0..60 {
                let candidate = next * (1.0 + 1e-12 * 2f64.powi(k)) + 1e-15;
                if g(candidate) <= candidate {
                    return Ok(RelevantSet {
                        radius: candidate,
                        method: RelevantSetMethod::Growth,
                    });
                }
            }
            break;
        }
        r = next;
    }
    Err(Error::invalid(
        MODULE,
        "logistic_memory growth bound has no finite fixed point; supply relevant_radius manually",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn growth_examples() {
        assert_eq!(relevant_radius_growth(0.0, 0.0, 3.0, 5.0).unwrap().radius, 3.0);
        assert_eq!(relevant_radius_growth(1.0, 0.0, 0.0, 2.0).unwrap().radius, 2.0);
        let r = relevant_radius_growth(1.0, 1.0, 1.0, 1.0).unwrap().radius;
        assert!((r - 5.436_563_656_918_09).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_examples() {
        assert_eq!(relevant_radius_lipschitz(0.0, 0.0, 4.0, 1.0).unwrap().radius, 4.0);
        assert_eq!(relevant_radius_lipschitz(2.0, 0.0, 0.0, 3.0).unwrap().radius, 6.0);
        let r = relevant_radius_lipschitz(1.0, 2.0, 1.0, 0.5).unwrap().radius;
        assert!((r - 4.077_422_742_688_567).abs() < 1e-12);
    }

    #[test]
    fn negative_inputs_rejected() {
        assert!(relevant_radius_growth(-1.0, 0.0, 0.0, 1.0).is_err());
        assert!(relevant_radius_lipschitz(0.0, f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn logistic_radius_is_a_closed_bound() {
        let r = logistic_radius(0.2, 0.5, 0.2, 1.0).unwrap().radius;
        assert!(0.7 * (0.2 * (1.0 + r)).exp() <= r);
        assert!(r < 1.2);
        assert!(logistic_radius(1.0, 0.5, 0.2, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn radii_monotone(
            a in proptest::array::uniform4(0.0f64..3.0),
            d in proptest::array::uniform4(0.0f64..3.0),
        ) {
            let b = [a[0] + d[0], a[1] + d[1], a[2] + d[2], a[3] + d[3]];
            let g_lo = relevant_radius_growth(a[0], a[1], a[2], a[3]).unwrap().radius;
            let g_hi = relevant_radius_growth(b[0], b[1], b[2], b[3]).unwrap().radius;
            prop_assert!(g_lo <= g_hi);
            let l_lo = relevant_radius_lipschitz(a[0], a[1], a[2], a[3]).unwrap().radius;
            let l_hi = relevant_radius_lipschitz(b[0], b[1], b[2], b[3]).unwrap().radius;
            prop_assert!(l_lo <= l_hi);
        }
    }
}
