//! Benchmark orchestration: the full mesh → view-factor → basis → sampling
//! → solve pipeline over a list of solvers and seeds, with result export.

use super::config::Config;
use super::report::{self, RunRow};
use crate::balance::{BalanceSystem, ViewRef};
use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::mesh::{assemble_cavity, CavityModel};
use crate::sampling::build_plan;
use crate::solvers::dense::{inexact_newton_pcg, newton_raphson, NewtonOptions, PcgOptions};
use crate::solvers::pipeline::{
    nonlinear_cs_solve, rmse, CsContext, GreedyAlgorithm, PipelineOptions, SolverReport,
};
use crate::viewfactor::{assemble_view_matrix, source_term, ViewFactorMatrix};
use crate::{io, mesh::Region};
use ndarray::Array1;
use std::path::PathBuf;
use std::time::Instant;

/// A solver selectable in a benchmark run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    NewtonRaphson,
    Pcg,
    Greedy(GreedyAlgorithm),
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::NewtonRaphson => "nr",
            SolverKind::Pcg => "pcg",
            SolverKind::Greedy(g) => g.as_str(),
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nr" | "newton" | "newton-raphson" => Ok(SolverKind::NewtonRaphson),
            "pcg" => Ok(SolverKind::Pcg),
            other => Ok(SolverKind::Greedy(other.parse()?)),
        }
    }
}

/// Configuration of one benchmark invocation.
#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub config: Config,
    pub solvers: Vec<SolverKind>,
    /// Number of independent greedy runs; run `i` uses `sampling.seed + i`.
    pub seeds: u64,
    pub out_dir: Option<PathBuf>,
    /// Directory for the binary view-factor cache.
    pub cache_dir: Option<PathBuf>,
    /// Compute the dense reference even when no dense solver was requested,
    /// so greedy runs get RMSE columns.
    pub with_reference: bool,
    /// Worker threads for greedy seed runs (sequential by default so stage
    /// timings stay comparable).
    pub workers: usize,
}

impl BenchmarkConfig {
    pub fn new(config: Config) -> Self {
        BenchmarkConfig {
            config,
            solvers: vec![
                SolverKind::NewtonRaphson,
                SolverKind::Greedy(GreedyAlgorithm::Cgstp),
            ],
            seeds: 1,
            out_dir: None,
            cache_dir: None,
            with_reference: true,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            return Err(Error::Config("benchmark needs at least one solver".into()));
        }
        if self.seeds == 0 {
            return Err(Error::Config("benchmark needs at least one seed".into()));
        }
        Ok(())
    }
}

/// Everything a benchmark run produces.
pub struct BenchOutcome {
    pub model: CavityModel,
    pub rows: Vec<RunRow>,
    /// Dense reference flux (Newton–Raphson), when computed.
    pub reference: Option<Array1<f64>>,
    /// Greedy pipeline reports keyed by (solver, seed).
    pub reports: Vec<SolverReport>,
    /// True when at least one run failed.
    pub any_failure: bool,
}

fn full_view_matrix(
    model: &CavityModel,
    cache_dir: &Option<PathBuf>,
) -> Result<(ViewFactorMatrix, f64)> {
    let t0 = Instant::now();
    if let Some(dir) = cache_dir {
        std::fs::create_dir_all(dir)?;
        let path = io::view_factor_cache_path(dir, &model.geometry);
        if path.exists() {
            let v = io::read_square_matrix(&path)?;
            if v.nrows() == model.n() {
                return Ok((ViewFactorMatrix { v }, t0.elapsed().as_secs_f64()));
            }
        }
        let vf = assemble_view_matrix(model)?;
        io::write_square_matrix(&path, &vf.v)?;
        return Ok((vf, t0.elapsed().as_secs_f64()));
    }
    let vf = assemble_view_matrix(model)?;
    Ok((vf, t0.elapsed().as_secs_f64()))
}

/// Runs the configured solvers on the configured model.
///
/// Per-run failures are recorded as rows with an error status; remaining
/// runs continue. Artifacts (reports CSV, flux dumps, per-iteration logs,
/// plot-ready curves) are written under `out_dir` when one is given.
pub fn run_pipeline(bench: &BenchmarkConfig) -> Result<BenchOutcome> {
    bench.validate()?;
    let config = &bench.config;
    let params = config.material_params();
    params.validate()?;
    let model = assemble_cavity(config.cavity_geometry(), config.source_config())?;

    let wants_dense = bench
        .solvers
        .iter()
        .any(|s| matches!(s, SolverKind::NewtonRaphson | SolverKind::Pcg));
    let wants_greedy = bench
        .solvers
        .iter()
        .any(|s| matches!(s, SolverKind::Greedy(_)));
    let need_full_v = wants_dense || bench.with_reference;

    let mut rows: Vec<RunRow> = Vec::new();
    let mut reports: Vec<SolverReport> = Vec::new();
    let mut any_failure = false;
    let mut reference: Option<Array1<f64>> = None;

    // Dense stage: full V, source, Newton reference, optional PCG.
    let dense_fail = |rows: &mut Vec<RunRow>, solver: &str, err: &Error| {
        rows.push(RunRow::failed(&config.name, solver, 0, &err.to_string()));
    };
    if need_full_v {
        match full_view_matrix(&model, &bench.cache_dir) {
            Ok((vf, vf_time)) => {
                let s0 = Array1::from_vec(model.source.s0.clone());
                let e = source_term(&vf.v, s0.view())?;
                let system = BalanceSystem {
                    view: ViewRef::Full(vf.v.view()),
                    source: e.view(),
                    params,
                    basis: None,
                };
                let t0 = Instant::now();
                match newton_raphson(
                    &system,
                    &NewtonOptions {
                        tol: config.solve.nr_tol,
                        ..NewtonOptions::default()
                    },
                ) {
                    Ok((flux, rep)) => {
                        let total = t0.elapsed().as_secs_f64();
                        if bench.solvers.contains(&SolverKind::NewtonRaphson) {
                            rows.push(RunRow {
                                model: config.name.clone(),
                                solver: "nr".into(),
                                seed: 0,
                                status: "ok".into(),
                                outer_iterations: rep.iterations,
                                inner_iterations: 0,
                                residual: *rep.residual_history.last().unwrap(),
                                rmse_all: Some(0.0),
                                rmse_capsule: Some(0.0),
                                m: model.n(),
                                k_total: 0,
                                vf_s: vf_time,
                                basis_s: 0.0,
                                iter_s: total,
                                total_s: vf_time + total,
                            });
                        }
                        reference = Some(flux);
                    }
                    Err(e) => {
                        any_failure = true;
                        dense_fail(&mut rows, "nr", &e);
                    }
                }

                if bench.solvers.contains(&SolverKind::Pcg) {
                    let t0 = Instant::now();
                    match inexact_newton_pcg(
                        &system,
                        &PcgOptions {
                            tol: config.solve.pcg_tol,
                            inner_tol: config.solve.pcg_inner_tol,
                            ..PcgOptions::default()
                        },
                    ) {
                        Ok((flux, rep)) => {
                            let total = t0.elapsed().as_secs_f64();
                            let (rmse_all, rmse_capsule) = match &reference {
                                Some(r) => {
                                    let cap = model.region_range(Region::Capsule);
                                    (
                                        Some(rmse(flux.view(), r.view())?),
                                        Some(rmse(
                                            flux.slice(ndarray::s![cap.clone()]),
                                            r.slice(ndarray::s![cap]),
                                        )?),
                                    )
                                }
                                None => (None, None),
                            };
                            rows.push(RunRow {
                                model: config.name.clone(),
                                solver: "pcg".into(),
                                seed: 0,
                                status: "ok".into(),
                                outer_iterations: rep.iterations,
                                inner_iterations: rep.inner_iterations,
                                residual: *rep.residual_history.last().unwrap(),
                                rmse_all,
                                rmse_capsule,
                                m: model.n(),
                                k_total: 0,
                                vf_s: vf_time,
                                basis_s: 0.0,
                                iter_s: total,
                                total_s: vf_time + total,
                            });
                        }
                        Err(e) => {
                            any_failure = true;
                            dense_fail(&mut rows, "pcg", &e);
                        }
                    }
                }
            }
            Err(e) => {
                any_failure = true;
                for s in &bench.solvers {
                    if matches!(s, SolverKind::NewtonRaphson | SolverKind::Pcg) {
                        dense_fail(&mut rows, s.as_str(), &e);
                    }
                }
            }
        }
    }

    // Greedy stage: per seed, one sampling plan and context shared by all
    // greedy solvers.
    if wants_greedy {
        let t0 = Instant::now();
        let basis = BasisSet::build(&model, config.basis.l_terms)?;
        let basis_s = t0.elapsed().as_secs_f64();
        let greedy_solvers: Vec<GreedyAlgorithm> = bench
            .solvers
            .iter()
            .filter_map(|s| match s {
                SolverKind::Greedy(g) => Some(*g),
                _ => None,
            })
            .collect();
        let opts = PipelineOptions {
            outer_tol: config.solve.outer_tol,
            outer_max: config.solve.outer_max,
            ..PipelineOptions::default()
        };

        let seed_results: Vec<(Vec<RunRow>, Vec<SolverReport>)> = {
            let run_seed = |i: u64| -> (Vec<RunRow>, Vec<SolverReport>) {
                let mut rows = Vec::new();
                let mut reports = Vec::new();
                let seed = config.sampling.seed + i;
                let plan = match build_plan(&model, config.sampling.s, config.sample_overrides(), seed)
                {
                    Ok(p) => p,
                    Err(e) => {
                        for g in &greedy_solvers {
                            rows.push(RunRow::failed(&config.name, g.as_str(), seed, &e.to_string()));
                        }
                        return (rows, reports);
                    }
                };
                let ctx = match CsContext::prepare(&model, &basis, &plan, params, basis_s) {
                    Ok(c) => c,
                    Err(e) => {
                        for g in &greedy_solvers {
                            rows.push(RunRow::failed(&config.name, g.as_str(), seed, &e.to_string()));
                        }
                        return (rows, reports);
                    }
                };
                for &alg in &greedy_solvers {
                    match nonlinear_cs_solve(
                        &ctx,
                        alg,
                        config.solve.k,
                        &opts,
                        reference.as_ref().map(|r| r.view()),
                    ) {
                        Ok((_, rep)) => {
                            rows.push(RunRow::from_report(&config.name, &rep));
                            reports.push(rep);
                        }
                        Err(e) => {
                            rows.push(RunRow::failed(&config.name, alg.as_str(), seed, &e.to_string()));
                        }
                    }
                }
                (rows, reports)
            };

            if bench.workers > 1 {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(bench.workers)
                    .build()
                    .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
                pool.install(|| {
                    use rayon::prelude::*;
                    (0..bench.seeds).into_par_iter().map(run_seed).collect()
                })
            } else {
                (0..bench.seeds).map(run_seed).collect()
            }
        };
        for (mut r, mut rep) in seed_results {
            any_failure |= r.iter().any(|row| row.status != "ok");
            rows.append(&mut r);
            reports.append(&mut rep);
        }
    }

    let outcome = BenchOutcome {
        model,
        rows,
        reference,
        reports,
        any_failure,
    };
    if let Some(dir) = &bench.out_dir {
        report::write_outputs(dir, config, &outcome)?;
    }
    Ok(outcome)
}

/// One row of the speed comparison across solvers of a model.
#[derive(Debug, Clone)]
pub struct SpeedupRow {
    pub model: String,
    /// Dense baseline total time (seconds).
    pub baseline_total_s: f64,
    /// Which baseline the ratio is against ("pcg" when present, else "nr").
    pub baseline: String,
    /// Median CGSTP pipeline total time (seconds).
    pub cgstp_total_s: f64,
    /// Acceleration ratio `baseline / cgstp`.
    pub ratio: f64,
    /// Median iteration-phase time differences against CGSTP.
    pub delta_iht_s: Option<f64>,
    pub delta_cgiht_s: Option<f64>,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(v[v.len() / 2])
}

/// Builds the per-model speed comparison from benchmark rows.
///
/// Requires a dense baseline row (PCG preferred, Newton otherwise) and at
/// least one successful CGSTP run per model.
pub fn speedup_table(rows: &[RunRow]) -> Result<Vec<SpeedupRow>> {
    let mut models: Vec<String> = rows.iter().map(|r| r.model.clone()).collect();
    models.sort();
    models.dedup();
    let mut out = Vec::new();
    for model in models {
        let of_solver = |name: &str| -> Vec<&RunRow> {
            rows.iter()
                .filter(|r| r.model == model && r.solver == name && r.status == "ok")
                .collect()
        };
        let baseline_rows = {
            let pcg = of_solver("pcg");
            if pcg.is_empty() {
                ("nr", of_solver("nr"))
            } else {
                ("pcg", pcg)
            }
        };
        let cgstp = of_solver("cgstp");
        if baseline_rows.1.is_empty() || cgstp.is_empty() {
            return Err(Error::Config(format!(
                "model {model}: speedup table needs a dense baseline and CGSTP runs"
            )));
        }
        let baseline_total_s = baseline_rows.1[0].total_s;
        let cgstp_total_s = median(cgstp.iter().map(|r| r.total_s).collect()).unwrap();
        let cgstp_iter_s = median(cgstp.iter().map(|r| r.iter_s).collect()).unwrap();
        let delta = |name: &str| -> Option<f64> {
            median(of_solver(name).iter().map(|r| r.iter_s).collect())
                .map(|t| t - cgstp_iter_s)
        };
        out.push(SpeedupRow {
            model: model.clone(),
            baseline_total_s,
            baseline: baseline_rows.0.to_string(),
            cgstp_total_s,
            ratio: baseline_total_s / cgstp_total_s,
            delta_iht_s: delta("iht"),
            delta_cgiht_s: delta("cgiht"),
        });
    }
    Ok(out)
}
