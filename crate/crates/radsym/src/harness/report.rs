//! Result export: the run-report CSV, flux dumps, and per-iteration logs.

use super::bench::BenchOutcome;
use super::config::Config;
use crate::error::Result;
use crate::mesh::CavityModel;
use crate::solvers::pipeline::SolverReport;
use ndarray::ArrayView1;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// One report row: a (solver, seed) run or its recorded failure.
#[derive(Debug, Clone)]
pub struct RunRow {
    pub model: String,
    pub solver: String,
    pub seed: u64,
    /// "ok" or the error message.
    pub status: String,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Final relative residual of the solver's own system.
    pub residual: f64,
    pub rmse_all: Option<f64>,
    pub rmse_capsule: Option<f64>,
    /// Evaluated rows (sample count; `N` for dense solvers).
    pub m: usize,
    /// Total sparsity budget (zero for dense solvers).
    pub k_total: usize,
    pub vf_s: f64,
    pub basis_s: f64,
    pub iter_s: f64,
    pub total_s: f64,
}

impl RunRow {
    pub fn failed(model: &str, solver: &str, seed: u64, message: &str) -> RunRow {
        RunRow {
            model: model.to_string(),
            solver: solver.to_string(),
            seed,
            status: message.replace(',', ";").replace('\n', " "),
            outer_iterations: 0,
            inner_iterations: 0,
            residual: f64::NAN,
            rmse_all: None,
            rmse_capsule: None,
            m: 0,
            k_total: 0,
            vf_s: 0.0,
            basis_s: 0.0,
            iter_s: 0.0,
            total_s: 0.0,
        }
    }

    pub fn from_report(model: &str, report: &SolverReport) -> RunRow {
        RunRow {
            model: model.to_string(),
            solver: report.algorithm.clone(),
            seed: report.seed,
            status: "ok".into(),
            outer_iterations: report.outer_iterations,
            inner_iterations: report.inner_iterations,
            residual: *report.outer_residual_history.last().unwrap(),
            rmse_all: report.rmse_all,
            rmse_capsule: report.rmse_capsule,
            m: report.m,
            k_total: report.k.iter().sum(),
            vf_s: report.timings.view_factor_s,
            basis_s: report.timings.basis_s,
            iter_s: report.timings.iteration_s,
            total_s: report.timings.view_factor_s
                + report.timings.basis_s
                + report.timings.iteration_s,
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.9e}")).unwrap_or_default()
}

/// Writes the run-report CSV (one row per run or recorded failure).
/// Timing columns are wall-clock and machine-dependent.
pub fn write_reports_csv<W: Write>(rows: &[RunRow], mut out: W) -> Result<()> {
    writeln!(
        out,
        "model,solver,seed,status,outer_iterations,inner_iterations,residual,rmse_all,rmse_capsule,m,k_total,vf_s,basis_s,iter_s,total_s"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{:.9e},{},{},{},{},{:.3},{:.3},{:.3},{:.3}",
            r.model,
            r.solver,
            r.seed,
            r.status,
            r.outer_iterations,
            r.inner_iterations,
            r.residual,
            opt(r.rmse_all),
            opt(r.rmse_capsule),
            r.m,
            r.k_total,
            r.vf_s,
            r.basis_s,
            r.iter_s,
            r.total_s,
        )?;
    }
    Ok(())
}

/// Writes a flux vector as CSV with columns `index,region,flux`.
pub fn write_flux_csv<W: Write>(
    model: &CavityModel,
    flux: ArrayView1<f64>,
    mut out: W,
) -> Result<()> {
    writeln!(out, "index,region,flux")?;
    for (i, &f) in flux.iter().enumerate() {
        writeln!(out, "{},{},{:.12e}", i, model.region_of(i).as_str(), f)?;
    }
    Ok(())
}

/// Writes the outer-iteration history of one run: residual and, when a
/// reference was available, the RMSE trajectory.
pub fn write_outer_history_csv<W: Write>(report: &SolverReport, mut out: W) -> Result<()> {
    writeln!(out, "outer,residual,rmse")?;
    for (i, &res) in report.outer_residual_history.iter().enumerate() {
        let rmse = report
            .outer_rmse_history
            .as_ref()
            .and_then(|h| h.get(i))
            .map(|v| format!("{v:.9e}"))
            .unwrap_or_default();
        writeln!(out, "{i},{res:.9e},{rmse}")?;
    }
    Ok(())
}

/// Writes the per-iteration inner residual log: one `outer inner residual`
/// line per inner iteration.
pub fn write_inner_log<W: Write>(report: &SolverReport, mut out: W) -> Result<()> {
    for (outer, history) in report.inner_residual_histories.iter().enumerate() {
        for (inner, res) in history.iter().enumerate() {
            writeln!(out, "{} {} {:.9e}", outer + 1, inner, res)?;
        }
    }
    Ok(())
}

/// Writes all artifacts of a benchmark run under `dir`.
pub fn write_outputs(dir: &Path, config: &Config, outcome: &BenchOutcome) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.toml"), config.to_toml()?)?;
    write_reports_csv(&outcome.rows, BufWriter::new(File::create(dir.join("reports.csv"))?))?;
    if let Some(reference) = &outcome.reference {
        write_flux_csv(
            &outcome.model,
            reference.view(),
            BufWriter::new(File::create(dir.join("reference_flux.csv"))?),
        )?;
    }
    for report in &outcome.reports {
        let stem = format!("{}_seed{}", report.algorithm, report.seed);
        write_outer_history_csv(
            report,
            BufWriter::new(File::create(dir.join(format!("outer_{stem}.csv")))?),
        )?;
        write_inner_log(
            report,
            BufWriter::new(File::create(dir.join(format!("inner_{stem}.log")))?),
        )?;
    }
    if let Ok(table) = super::bench::speedup_table(&outcome.rows) {
        let mut out = BufWriter::new(File::create(dir.join("speedup.csv"))?);
        writeln!(
            out,
            "model,baseline,baseline_total_s,cgstp_total_s,ratio,delta_iht_s,delta_cgiht_s"
        )?;
        for r in table {
            writeln!(
                out,
                "{},{},{:.3},{:.3},{:.3},{},{}",
                r.model,
                r.baseline,
                r.baseline_total_s,
                r.cgstp_total_s,
                r.ratio,
                r.delta_iht_s.map(|v| format!("{v:.3}")).unwrap_or_default(),
                r.delta_cgiht_s.map(|v| format!("{v:.3}")).unwrap_or_default(),
            )?;
        }
    }
    Ok(())
}
