//! Benchmark problems with closed-form elastic solutions, error measures and
//! parameter sweeps.

pub mod analytic;
mod cases;
pub mod invariants;
pub mod metrics;
mod sweep;

pub use cases::{run_case, BenchmarkCase, CaseId, CaseRun};
pub use metrics::{
    aid_metric, axisymmetry_ratio, condition_number, corner_extrapolation_error, e2_norm, fit_slope, line_error,
    line_samples, FieldSampler,
};
pub use sweep::{run_sweep, CellKey, CellResult, SlopeFit, SweepSpec, SweepTable, SWEEP_METRICS};
