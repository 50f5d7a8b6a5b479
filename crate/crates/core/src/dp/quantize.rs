use crate::error::{Error, Result};

const MODULE: &str = "dp";

/// Uniform lattice on the control box: `Q` levels per coordinate, `M = Q^m` points.
///
/// Point index `k` has coordinate digits `(k / Q^c) % Q` for `c = 0..m`.
#[derive(Clone, Debug, PartialEq)]
pub struct Quantization {
    per_axis: usize,
    dim: usize,
    levels: Vec<Vec<f64>>,
    points: Vec<f64>,
}

/// Builds the lattice. With `Q = 1` each coordinate collapses to the midpoint
/// of its interval (the interval itself when it is degenerate).
pub fn quantize(control_box: &[[f64; 2]], per_axis: usize) -> Result<Quantization> {
    if per_axis < 1 {
        return Err(Error::invalid(MODULE, "Q must be at least 1"));
    }
    if control_box.is_empty() {
        return Err(Error::invalid(MODULE, "control box has no coordinates"));
    }
    let count = u32::try_from(per_axis)
        .ok()
        .and_then(|q| q.checked_pow(control_box.len() as u32))
        .ok_or_else(|| Error::capacity(MODULE, "quantized control count Q^m", format!("{per_axis}^{}", control_box.len()), u32::MAX))?
        as usize;
    let levels: Vec<Vec<f64>> = control_box
        .iter()
        .map(|&[a, b]| {
            if per_axis == 1 {
                vec![if a == b { a } else { 0.5 * (a + b) }]
            } else {
                let last = (per_axis - 1) as f64;
                (0..per_axis)
                    .map(|q| if q == per_axis - 1 { b } else { a + q as f64 * (b - a) / last })
                    .collect()
            }
        })
        .collect();
    let dim = control_box.len();
    let mut points = Vec::with_capacity(count * dim);
    for k in 0..count {
        let mut rest = k;
        for axis in &levels {
            points.push(axis[rest % per_axis]);
            rest /= per_axis;
        }
    }
    Ok(Quantization {
        per_axis,
        dim,
        levels,
        points,
    })
}

impl Quantization {
    /// Q
    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    /// M = Q^m
    pub fn count(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn levels(&self, axis: usize) -> &[f64] {
        &self.levels[axis]
    }

    pub fn point(&self, index: usize) -> &[f64] {
        &self.points[index * self.dim..(index + 1) * self.dim]
    }

    /// Inverse of [`point`](Self::point) on exact lattice values.
    pub fn index_of(&self, point: &[f64]) -> Option<usize> {
        if point.len() != self.dim {
            return None;
        }
        let mut index = 0;
        let mut weight = 1;
        for (axis, v) in self.levels.iter().zip(point) {
            let digit = axis.iter().position(|l| l == v)?;
            index += digit * weight;
            weight *= self.per_axis;
        }
        Some(index)
    }

    /// Largest coordinate distance between two lattice points.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.point(a)
            .iter()
            .zip(self.point(b))
            .fold(0.0, |d, (x, y)| d.max((x - y).abs()))
    }
}
