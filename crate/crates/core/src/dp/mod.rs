//! History-parametrized dynamic programming on a quantized control lattice.

mod constraint;
mod history;
mod quantize;
mod reconstruct;
mod solve;
mod sweep;

pub use constraint::{ConstraintBand, ConstraintContext, ControlConstraint};
pub use history::{stage_size, HistoryCode};
pub use quantize::{quantize, Quantization};
pub use reconstruct::{forward_reconstruct, prefix_state};
pub use solve::{solve, solve_discrete, SolveReport, SolveSettings};
pub use sweep::{backward_sweep, table_entries, SweepOptions, ValueTable, DEFAULT_MEMORY_BUDGET};

pub(crate) use sweep::build_pool;
