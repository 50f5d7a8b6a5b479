//! Independent checks on the solver: brute-force enumeration of quantized
//! control sequences, continuous-time references, and convergence studies.

mod enumerate;
mod necessity;
mod reference;
mod study;

pub use enumerate::{enumerate_min, EnumerateOptions, Enumeration, DEFAULT_ENUMERATION_CAP};
pub use necessity::{necessity_spot_check, NecessityReport, NECESSITY_TOLERANCE};
pub use reference::{
    fine_grid_reference, fine_grid_solution, linear_coefficients, linear_reference, linear_reference_cost,
    linear_reference_for, LinearSolution, SampledTrajectory, QUADRATURE_TOLERANCE,
};
pub use study::{
    convergence_study, fit_order, optimality_gap_study, save_study, write_rows_csv, ConvergenceRow,
    ConvergenceStudy, GapStudy, Order, ReferenceKind, FINE_FACTOR,
};

const MODULE: &str = "oracle";
