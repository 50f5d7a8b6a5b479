use super::Quantization;
use crate::discretize::BAND_TOLERANCE;

/// What a constraint may look at when deciding whether ξ is allowed at a stage.
#[derive(Clone, Copy, Debug)]
pub struct ConstraintContext<'a> {
    pub stage: usize,
    /// β(i−1), absent at stage 0.
    pub previous: Option<usize>,
    /// x(i; i, β)
    pub state: &'a [f64],
}

/// Stage-wise admissible sets `u(i) ∈ Ξ(i, β, x)`. Every history must admit
/// at least one control.
pub trait ControlConstraint: Sync {
    fn admits(&self, ctx: &ConstraintContext<'_>, lattice: &Quantization, candidate: usize) -> bool;
}

/// Discrete Lipschitz band `|ξ − β(i−1)|∞ ≤ L·h`; unrestricted at stage 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstraintBand {
    pub lipschitz: f64,
    pub step: f64,
}

impl ConstraintBand {
    pub fn new(lipschitz: f64, step: f64) -> Self {
        ConstraintBand { lipschitz, step }
    }

    pub fn width(&self) -> f64 {
        self.lipschitz * self.step + BAND_TOLERANCE
    }
}

impl ControlConstraint for ConstraintBand {
    fn admits(&self, ctx: &ConstraintContext<'_>, lattice: &Quantization, candidate: usize) -> bool {
        match ctx.previous {
            None => true,
            Some(prev) => lattice.distance(prev, candidate) <= self.width(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::quantize;

    #[test]
    fn wide_band_admits_everything() {
        let q = quantize(&[[0.0, 1.0], [-2.0, 2.0]], 3).unwrap();
        let band = ConstraintBand::new(4.0, 1.0);
        for prev in 0..q.count() {
            let ctx = ConstraintContext { stage: 3, previous: Some(prev), state: &[] };
            assert!((0..q.count()).all(|c| band.admits(&ctx, &q, c)));
        }
    }

    #[test]
    fn zero_band_locks_to_previous() {
        let q = quantize(&[[0.0, 1.0]], 5).unwrap();
        let band = ConstraintBand::new(0.0, 0.1);
        let ctx = ConstraintContext { stage: 1, previous: Some(2), state: &[] };
        let allowed: Vec<_> = (0..5).filter(|&c| band.admits(&ctx, &q, c)).collect();
        assert_eq!(allowed, vec![2]);
        let first = ConstraintContext { stage: 0, previous: None, state: &[] };
        assert!((0..5).all(|c| band.admits(&first, &q, c)));
    }
}
