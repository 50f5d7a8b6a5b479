//! Continuous-time control signals and the discrete ↔ continuous conversions.

use std::fmt;

use super::{DiscreteControl, Grid, MODULE};
use crate::error::{Error, Result};

/// Absolute slack on Lipschitz-band checks.
pub const BAND_TOLERANCE: f64 = 1e-12;

/// A control function on `[0, T]`.
pub trait ControlSignal: Sync {
    fn dim(&self) -> usize;

    fn value_into(&self, t: f64, out: &mut [f64]);

    fn value(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.value_into(t, &mut out);
        out
    }

    /// Times where the signal may have a kink. Quadrature splits there.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// `u(t) = value`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantControl(pub Vec<f64>);

impl ControlSignal for ConstantControl {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn value_into(&self, _t: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.0);
    }
}

/// Each coordinate starts at `start[k]` and moves at `rate` (signed) until it
/// saturates at the box boundary: `u_k(t) = clamp(start_k + rate·t, lo_k, hi_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RampControl {
    start: Vec<f64>,
    rate: f64,
    bounds: Vec<[f64; 2]>,
}

impl RampControl {
    pub fn new(start: Vec<f64>, rate: f64, bounds: Vec<[f64; 2]>) -> Result<Self> {
        if start.len() != bounds.len() || start.is_empty() {
            return Err(Error::invalid(MODULE, "ramp start and bounds must have the same non-zero length"));
        }
        if !rate.is_finite() {
            return Err(Error::invalid(MODULE, "ramp rate must be finite"));
        }
        Ok(RampControl { start, rate, bounds })
    }

    /// Rises from the lower corner of the box at rate `rate`.
    pub fn from_lower_corner(bounds: &[[f64; 2]], rate: f64) -> Result<Self> {
        Self::new(bounds.iter().map(|b| b[0]).collect(), rate, bounds.to_vec())
    }
}

impl ControlSignal for RampControl {
    fn dim(&self) -> usize {
        self.start.len()
    }

    fn value_into(&self, t: f64, out: &mut [f64]) {
        for ((o, s), [lo, hi]) in out.iter_mut().zip(&self.start).zip(&self.bounds) {
            *o = (s + self.rate * t).clamp(*lo, *hi);
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        if self.rate == 0.0 {
            return Vec::new();
        }
        let mut v: Vec<f64> = self
            .start
            .iter()
            .zip(&self.bounds)
            .flat_map(|(s, [lo, hi])| [(lo - s) / self.rate, (hi - s) / self.rate])
            .filter(|t| *t > 0.0)
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

/// Adapter for closures.
pub struct FnControl<F> {
    dim: usize,
    f: F,
    breakpoints: Vec<f64>,
}

impl<F> FnControl<F>
where
    F: Fn(f64, &mut [f64]) + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnControl {
            dim,
            f,
            breakpoints: Vec::new(),
        }
    }

    pub fn with_breakpoints(mut self, breakpoints: Vec<f64>) -> Self {
        self.breakpoints = breakpoints;
        self
    }
}

impl<F> fmt::Debug for FnControl<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnControl").field("dim", &self.dim).finish()
    }
}

impl<F> ControlSignal for FnControl<F>
where
    F: Fn(f64, &mut [f64]) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value_into(&self, t: f64, out: &mut [f64]) {
        (self.f)(t, out)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }
}

/// `u^h(i) = u(t_i)` for `i = 0..N−1`.
pub fn sample(signal: &dyn ControlSignal, grid: &Grid) -> DiscreteControl {
    let m = signal.dim();
    let mut values = vec![0.0; grid.steps() * m];
    for (i, row) in values.chunks_mut(m).enumerate() {
        signal.value_into(grid.node(i), row);
    }
    DiscreteControl { dim: m, values }
}

/// True iff `|u(i+1) − u(i)|∞ ≤ L·h + 1e−12` for every consecutive pair.
pub fn check_lipschitz_admissible(c: &DiscreteControl, lipschitz: f64, step: f64) -> bool {
    let band = lipschitz * step + BAND_TOLERANCE;
    c.values
        .chunks(c.dim)
        .zip(c.values.chunks(c.dim).skip(1))
        .all(|(a, b)| a.iter().zip(b).all(|(x, y)| (y - x).abs() <= band))
}

/// Piecewise-linear interpolant of a discrete control on its grid.
///
/// On `[t_i, t_{i+1}]`, `i ≤ N−2`, the control moves linearly from `u(i)` to
/// `u(i+1)`; on the last interval `[t_{N−1}, T]` it holds `u(N−1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpolatedControl {
    control: DiscreteControl,
    grid: Grid,
}

/// Builds the interpolant, rejecting controls that violate the Lipschitz band.
pub fn interpolate(c: &DiscreteControl, grid: &Grid, lipschitz: f64) -> Result<InterpolatedControl> {
    if c.len() != grid.steps() {
        return Err(Error::invalid(
            MODULE,
            format!("control has {} entries but the grid has {} steps", c.len(), grid.steps()),
        ));
    }
    if !check_lipschitz_admissible(c, lipschitz, grid.step()) {
        return Err(Error::invalid(
            MODULE,
            format!("control violates the Lipschitz band L*h = {}", lipschitz * grid.step()),
        ));
    }
    Ok(InterpolatedControl {
        control: c.clone(),
        grid: *grid,
    })
}

impl InterpolatedControl {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn discrete(&self) -> &DiscreteControl {
        &self.control
    }
}

impl ControlSignal for InterpolatedControl {
    fn dim(&self) -> usize {
        self.control.dim
    }

    fn value_into(&self, t: f64, out: &mut [f64]) {
        let n = self.grid.steps();
        let pos = (t / self.grid.horizon() * n as f64).clamp(0.0, n as f64);
        // snap positions within rounding of a node so nodes reproduce u(i) exactly
        let nearest = pos.round();
        let pos = if (pos - nearest).abs() <= 8.0 * f64::EPSILON * n as f64 { nearest } else { pos };
        if n == 1 || pos >= (n - 1) as f64 {
            out.copy_from_slice(self.control.get(n - 1));
            return;
        }
        let i = pos.floor() as usize;
        let theta = pos - i as f64;
        let (lo, hi) = (self.control.get(i), self.control.get(i + 1));
        if theta == 0.0 {
            out.copy_from_slice(lo);
            return;
        }
        for ((o, a), b) in out.iter_mut().zip(lo).zip(hi) {
            *o = a + theta * (b - a);
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        (1..self.grid.steps()).map(|i| self.grid.node(i)).collect()
    }
}
