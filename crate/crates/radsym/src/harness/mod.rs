//! Benchmark orchestration: model presets, the solver-comparison pipeline,
//! sparsity and asymmetry analyses, and result export.

pub mod bench;
pub mod config;
pub mod presets;
pub mod report;
pub mod sweep;

pub use bench::{run_pipeline, speedup_table, BenchOutcome, BenchmarkConfig, SolverKind, SpeedupRow};
pub use config::Config;
pub use presets::ModelPreset;
pub use report::RunRow;
pub use sweep::{
    asymmetry_metrics, default_grids, gram_diagonal, sparsity_sweep, AsymmetryMetrics,
    SweepResult,
};

// The flux-comparison metric lives with the pipeline but is part of the
// benchmarking surface.
pub use crate::solvers::pipeline::rmse;
