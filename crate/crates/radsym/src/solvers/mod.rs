//! Equation solvers: dense baselines and greedy sparse reconstruction.

pub mod dense;
pub mod greedy;
pub mod pipeline;

pub use dense::{inexact_newton_pcg, newton_raphson, DenseSolveReport, NewtonOptions, PcgOptions};
pub use greedy::{
    cgiht, cgstp, hard_threshold, iht, niht, subspace_pursuit, GreedyOptions, GreedyResult,
    SparsityPattern, StopReason,
};
pub use pipeline::{
    nonlinear_cs_solve, CsContext, GreedyAlgorithm, PipelineOptions, SolverReport, StageTimings,
};
