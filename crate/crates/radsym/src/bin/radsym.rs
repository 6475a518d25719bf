//! Command-line interface: mesh inspection, view-factor assembly, solver
//! runs, benchmark comparisons, and the sparsity/asymmetry analyses.
//!
//! Exit codes: 0 on success, 1 when any run failed, 2 on configuration or
//! usage errors.

use clap::{Args, Parser, Subcommand};
use ndarray::Array1;
use radsym::basis::BasisSet;
use radsym::error::Error;
use radsym::harness::{
    asymmetry_metrics, bench::SolverKind, default_grids, gram_diagonal, run_pipeline,
    sparsity_sweep, BenchmarkConfig, Config, ModelPreset,
};
use radsym::mesh::{assemble_cavity, dump_mesh_csv, Region};
use radsym::viewfactor::assemble_view_matrix;
use radsym::{io as rio, Result};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "radsym",
    about = "Radiation-flux symmetry analysis for cylinder-to-sphere cavity models",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Built-in model preset (s2-1, s2-2, s3-1, s3-2).
    #[arg(long)]
    model: Option<String>,
    /// TOML configuration file (overrides --model).
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ModelArgs {
    fn resolve(&self) -> Result<Config> {
        if let Some(path) = &self.config {
            return Config::load(path);
        }
        if let Some(name) = &self.model {
            let preset: ModelPreset = name.parse()?;
            return Ok(preset.config());
        }
        Err(Error::Config("pass --model <preset> or --config <file>".into()))
    }
}

#[derive(Args, Clone)]
struct SolveTuning {
    /// Per-region sparsity budgets, e.g. 30,35,35,100.
    #[arg(long)]
    k: Option<String>,
    /// Per-region sample counts, e.g. 150,150,150,400.
    #[arg(long)]
    samples: Option<String>,
}

fn parse_quad(text: &str, what: &str) -> Result<[usize; 4]> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err(Error::Config(format!(
            "{what} needs four comma-separated values (capsule, top face, bottom face, wall)"
        )));
    }
    let mut out = [0usize; 4];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = p
            .trim()
            .parse()
            .map_err(|e| Error::Config(format!("{what}: {e}")))?;
    }
    Ok(out)
}

impl SolveTuning {
    fn apply(&self, config: &mut Config) -> Result<()> {
        if let Some(k) = &self.k {
            config.solve.k = parse_quad(k, "--k")?;
        }
        if let Some(samples) = &self.samples {
            config.sampling.overrides = parse_quad(samples, "--samples")?;
        }
        Ok(())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build the mesh and print the per-region element counts.
    Mesh {
        #[command(flatten)]
        model: ModelArgs,
        /// Write the mesh as CSV under this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assemble the full view-factor matrix and report its invariants.
    Viewfactor {
        #[command(flatten)]
        model: ModelArgs,
        /// Cache directory for the binary matrix dump.
        #[arg(long = "cache-vf")]
        cache_vf: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one solver on a model.
    Solve {
        #[command(flatten)]
        model: ModelArgs,
        /// Solver: nr, pcg, iht, niht, cgiht, sp or cgstp.
        #[arg(long, default_value = "cgstp")]
        solver: String,
        /// Independent runs (seed, seed+1, ...).
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        /// Skip the dense reference solve (greedy runs lose RMSE columns).
        #[arg(long)]
        no_reference: bool,
        #[command(flatten)]
        tuning: SolveTuning,
        #[arg(long = "cache-vf")]
        cache_vf: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare solvers across seeds and export report tables.
    Bench {
        #[command(flatten)]
        model: ModelArgs,
        /// Comma-separated solver list.
        #[arg(long, default_value = "nr,pcg,iht,cgiht,cgstp")]
        solver: String,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        /// Worker threads for greedy seed runs.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[command(flatten)]
        tuning: SolveTuning,
        #[arg(long = "cache-vf")]
        cache_vf: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Representation-error curves and coefficient-magnitude rankings of
    /// the reference flux.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "cache-vf")]
        cache_vf: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Capsule drive-asymmetry metrics of the reference flux.
    Asymmetry {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "cache-vf")]
        cache_vf: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the effective TOML configuration of a preset.
    Config {
        #[command(flatten)]
        model: ModelArgs,
    },
}

fn reference_outcome(
    config: Config,
    cache_vf: Option<PathBuf>,
) -> Result<radsym::harness::BenchOutcome> {
    let bench = BenchmarkConfig {
        solvers: vec![SolverKind::NewtonRaphson],
        seeds: 1,
        out_dir: None,
        cache_dir: cache_vf,
        with_reference: true,
        workers: 1,
        config,
    };
    run_pipeline(&bench)
}

fn print_rows(rows: &[radsym::harness::RunRow]) {
    println!(
        "{:<8} {:<7} {:>5} {:>7} {:>9} {:>12} {:>12} {:>9} {:>9}  {}",
        "model", "solver", "seed", "outer", "inner", "residual", "rmse", "iter_s", "total_s", "status"
    );
    for r in rows {
        println!(
            "{:<8} {:<7} {:>5} {:>7} {:>9} {:>12.3e} {:>12} {:>9.2} {:>9.2}  {}",
            r.model,
            r.solver,
            r.seed,
            r.outer_iterations,
            r.inner_iterations,
            r.residual,
            r.rmse_all.map(|v| format!("{v:.3e}")).unwrap_or_default(),
            r.iter_s,
            r.total_s,
            r.status
        );
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Mesh { model, out } => {
            let config = model.resolve()?;
            let model = assemble_cavity(config.cavity_geometry(), config.source_config())?;
            println!("model {}: {} elements", config.name, model.n());
            for region in Region::ALL {
                let range = model.region_range(region);
                println!(
                    "  {:<16} {:>8} [{}..{})",
                    region.as_str(),
                    range.len(),
                    range.start,
                    range.end
                );
            }
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                let path = dir.join(format!("mesh_{}.csv", config.name));
                dump_mesh_csv(&model, BufWriter::new(File::create(&path)?))?;
                println!("mesh written to {}", path.display());
            }
            Ok(true)
        }
        Command::Viewfactor { model, cache_vf, out } => {
            let config = model.resolve()?;
            let model = assemble_cavity(config.cavity_geometry(), config.source_config())?;
            let vf = assemble_view_matrix(&model)?;
            let n = vf.n();
            // Kernel symmetry defect and row-sum summary.
            let areas = model.areas();
            let mut defect: f64 = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    let a = vf.v[[i, j]] * areas[i];
                    let b = vf.v[[j, i]] * areas[j];
                    let scale = a.abs().max(b.abs());
                    if scale > 0.0 {
                        defect = defect.max((a - b).abs() / scale);
                    }
                }
            }
            let sums: Vec<f64> = vf.v.rows().into_iter().map(|r| r.sum()).collect();
            let min = sums.iter().cloned().fold(f64::MAX, f64::min);
            let max = sums.iter().cloned().fold(f64::MIN, f64::max);
            println!("view-factor matrix {n}x{n}");
            println!("  kernel symmetry defect: {defect:.3e}");
            println!("  row sums in [{min:.4}, {max:.4}] (losses through the entrance holes)");
            if let Some(dir) = cache_vf {
                std::fs::create_dir_all(&dir)?;
                let path = rio::view_factor_cache_path(&dir, &model.geometry);
                rio::write_square_matrix(&path, &vf.v)?;
                println!("cached to {}", path.display());
            }
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                let path = dir.join(format!("vf_{}.bin", config.name));
                rio::write_square_matrix(&path, &vf.v)?;
                println!("written to {}", path.display());
            }
            Ok(true)
        }
        Command::Solve {
            model,
            solver,
            seeds,
            no_reference,
            tuning,
            cache_vf,
            out,
        } => {
            let mut config = model.resolve()?;
            tuning.apply(&mut config)?;
            let kind: SolverKind = solver.parse()?;
            let bench = BenchmarkConfig {
                solvers: vec![kind],
                seeds,
                out_dir: out,
                cache_dir: cache_vf,
                with_reference: !no_reference && matches!(kind, SolverKind::Greedy(_)),
                workers: 1,
                config,
            };
            let outcome = run_pipeline(&bench)?;
            print_rows(&outcome.rows);
            Ok(!outcome.any_failure)
        }
        Command::Bench {
            model,
            solver,
            seeds,
            workers,
            tuning,
            cache_vf,
            out,
        } => {
            let mut config = model.resolve()?;
            tuning.apply(&mut config)?;
            let mut solvers = Vec::new();
            for name in solver.split(',') {
                solvers.push(name.trim().parse::<SolverKind>()?);
            }
            let bench = BenchmarkConfig {
                solvers,
                seeds,
                out_dir: out,
                cache_dir: cache_vf,
                with_reference: true,
                workers,
                config,
            };
            let outcome = run_pipeline(&bench)?;
            print_rows(&outcome.rows);
            if let Ok(table) = radsym::harness::speedup_table(&outcome.rows) {
                for row in table {
                    println!(
                        "speedup {}: {}/cgstp total {:.2}x (baseline {:.1}s vs {:.1}s)",
                        row.model, row.baseline, row.ratio, row.baseline_total_s, row.cgstp_total_s
                    );
                }
            }
            Ok(!outcome.any_failure)
        }
        Command::Sweep { model, cache_vf, out } => {
            let config = model.resolve()?;
            let l_terms = config.basis.l_terms;
            let outcome = reference_outcome(config, cache_vf)?;
            let reference = outcome
                .reference
                .as_ref()
                .ok_or_else(|| Error::Config("reference solve failed".into()))?;
            let basis = BasisSet::build(&outcome.model, l_terms)?;
            let grids = default_grids(&basis);
            let sweep = sparsity_sweep(&outcome.model, &basis, reference.view(), &grids)?;
            println!(
                "significant coefficients (|c| > 1e-3): capsule {}, faces {}/{}, wall {}",
                sweep.counts_above_threshold[0],
                sweep.counts_above_threshold[1],
                sweep.counts_above_threshold[2],
                sweep.counts_above_threshold[3],
            );
            for curve in &sweep.curves {
                let last = curve.points.last().unwrap();
                println!(
                    "  {:<16} error at L={:>5}: {:.3e}",
                    curve.region.as_str(),
                    last.0,
                    last.1
                );
            }
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                radsym::harness::sweep::write_sweep_csv(
                    &sweep,
                    BufWriter::new(File::create(dir.join("sweep.csv"))?),
                )?;
                radsym::harness::sweep::write_magnitudes_csv(
                    &sweep,
                    BufWriter::new(File::create(dir.join("magnitudes.csv"))?),
                )?;
                println!("curves written to {}", dir.display());
            }
            Ok(true)
        }
        Command::Asymmetry { model, cache_vf, out } => {
            let config = model.resolve()?;
            let l_terms = config.basis.l_terms;
            let outcome = reference_outcome(config, cache_vf)?;
            let reference = outcome
                .reference
                .as_ref()
                .ok_or_else(|| Error::Config("reference solve failed".into()))?;
            let model = &outcome.model;
            let basis = BasisSet::build(model, l_terms)?;
            let capsule = model.region_range(Region::Capsule);
            let weights: Array1<f64> = model
                .elements_in(Region::Capsule)
                .iter()
                .map(|e| e.area)
                .collect();
            let fit = radsym::basis::fit_coefficients(
                &basis.y,
                reference.slice(ndarray::s![capsule]),
                weights.view(),
            )?;
            let gram = gram_diagonal(model, &basis, 0);
            let metrics = asymmetry_metrics(fit.coefficients.view(), gram.view())?;
            let through35 = metrics.cumulative_energy.get(34).copied().unwrap_or(1.0);
            println!("max relative mode amplitude: {:.4e}", metrics.max_asymmetry);
            println!("cumulative energy through 35 modes: {:.6}", through35);
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                let mut w = BufWriter::new(File::create(dir.join("asymmetry.csv"))?);
                writeln!(w, "mode,amplitude,cumulative_energy")?;
                for (i, (a, ce)) in metrics
                    .amplitudes
                    .iter()
                    .zip(&metrics.cumulative_energy)
                    .enumerate()
                {
                    writeln!(w, "{i},{a:.9e},{ce:.9e}")?;
                }
                println!("modes written to {}", dir.display());
            }
            Ok(true)
        }
        Command::Config { model } => {
            let config = model.resolve()?;
            print!("{}", config.to_toml()?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ (Error::Config(_) | Error::Parse(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
