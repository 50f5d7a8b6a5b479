use crate::error::{Error, Result};

const MODULE: &str = "dp";

/// A quantized control prefix `β = (β(0), …, β(i−1))` packed as a base-M
/// integer with β(0) as the most significant digit.
///
/// With this layout the children `β⊗ξ` of a history occupy the contiguous
/// codes `code·M .. code·M + M`, and codes at the final stage sort in the
/// lexicographic order of their control sequences.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HistoryCode {
    stage: usize,
    code: u64,
}

impl HistoryCode {
    pub const EMPTY: HistoryCode = HistoryCode { stage: 0, code: 0 };

    pub fn new(stage: usize, code: u64, controls: usize) -> Result<Self> {
        let size = stage_size(stage, controls)?;
        if code >= size {
            return Err(Error::invalid(
                MODULE,
                format!("history code {code} out of range for stage {stage} with M = {controls}"),
            ));
        }
        Ok(HistoryCode { stage, code })
    }

    pub fn encode(indices: &[usize], controls: usize) -> Result<Self> {
        stage_size(indices.len(), controls)?;
        let mut code = 0u64;
        for &d in indices {
            if d >= controls {
                return Err(Error::invalid(MODULE, format!("control index {d} >= M = {controls}")));
            }
            code = code * controls as u64 + d as u64;
        }
        Ok(HistoryCode {
            stage: indices.len(),
            code,
        })
    }

    pub fn decode(&self, controls: usize) -> Vec<usize> {
        let m = controls as u64;
        let mut out = vec![0; self.stage];
        let mut rest = self.code;
        for slot in out.iter_mut().rev() {
            *slot = (rest % m) as usize;
            rest /= m;
        }
        out
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn code(&self) -> u64 {
        self.code
    }

    /// `β⊗ξ`
    pub fn child(&self, xi: usize, controls: usize) -> HistoryCode {
        HistoryCode {
            stage: self.stage + 1,
            code: self.code * controls as u64 + xi as u64,
        }
    }

    /// β(i−1), or `None` for the empty history.
    pub fn last(&self, controls: usize) -> Option<usize> {
        (self.stage > 0).then(|| (self.code % controls as u64) as usize)
    }
}

/// `M^stage`, the number of histories at a stage.
pub fn stage_size(stage: usize, controls: usize) -> Result<u64> {
    (controls as u64)
        .checked_pow(stage as u32)
        .ok_or_else(|| Error::capacity(MODULE, "history codes M^i", format!("{controls}^{stage}"), u64::MAX))
}
