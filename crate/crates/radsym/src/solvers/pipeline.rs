//! The sparse-reconstruction pipeline: linearize the energy balance at the
//! current coefficients on the sampled rows, recover a blockwise-sparse
//! update with a greedy solver, and relinearize until the coefficients
//! settle.
//!
//! Only the sampled rows of the exchange matrix are ever assembled; the
//! sensing matrix is refreshed each outer iteration by rescaling the cached
//! `Φ(I − V)Ψ` with the current nonlinear diagonal. The initial point is the
//! constant-term-only fit matching the sampled-row mean of the one-bounce
//! estimate `B⁰ = E`, which keeps the starting flux strictly positive.

use crate::balance::MaterialParams;
use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::mesh::{CavityModel, Region};
use crate::sampling::SamplePlan;
use crate::solvers::greedy::{self, GreedyOptions, GreedyResult, SparsityPattern};
use crate::viewfactor::{assemble_view_rows, ViewFactorRows};
use ndarray::{Array1, Array2, ArrayView1, Axis};
use std::time::Instant;

/// Relative root-mean-square error
/// `sqrt(mean((b − b_ref)²)) / sqrt(mean(b_ref²))`.
pub fn rmse(b: ArrayView1<f64>, b_ref: ArrayView1<f64>) -> Result<f64> {
    if b.len() != b_ref.len() {
        return Err(Error::Dimension(format!(
            "rmse: lengths {} and {} differ",
            b.len(),
            b_ref.len()
        )));
    }
    let ref_ms = b_ref.dot(&b_ref) / b_ref.len() as f64;
    if ref_ms == 0.0 {
        return Err(Error::Domain("rmse: reference vector has zero norm".into()));
    }
    let diff = &b.to_owned() - &b_ref;
    Ok((diff.dot(&diff) / b.len() as f64 / ref_ms).sqrt())
}

/// Greedy reconstruction algorithm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreedyAlgorithm {
    Iht,
    Niht,
    Cgiht,
    Sp,
    Cgstp,
}

impl GreedyAlgorithm {
    pub const ALL: [GreedyAlgorithm; 5] = [
        GreedyAlgorithm::Iht,
        GreedyAlgorithm::Niht,
        GreedyAlgorithm::Cgiht,
        GreedyAlgorithm::Sp,
        GreedyAlgorithm::Cgstp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GreedyAlgorithm::Iht => "iht",
            GreedyAlgorithm::Niht => "niht",
            GreedyAlgorithm::Cgiht => "cgiht",
            GreedyAlgorithm::Sp => "sp",
            GreedyAlgorithm::Cgstp => "cgstp",
        }
    }

    /// Pursuit-family algorithms use least-squares refreshes and need far
    /// smaller iteration budgets than the thresholding family.
    fn is_pursuit(self) -> bool {
        matches!(self, GreedyAlgorithm::Sp | GreedyAlgorithm::Cgstp)
    }
}

impl std::str::FromStr for GreedyAlgorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "iht" => Ok(GreedyAlgorithm::Iht),
            "niht" => Ok(GreedyAlgorithm::Niht),
            "cgiht" => Ok(GreedyAlgorithm::Cgiht),
            "sp" => Ok(GreedyAlgorithm::Sp),
            "cgstp" => Ok(GreedyAlgorithm::Cgstp),
            other => Err(Error::Parse(format!("unknown greedy algorithm '{other}'"))),
        }
    }
}

/// Options of the outer relinearization loop.
#[derive(Debug, Clone, Copy)]
pub struct PipelineOptions {
    /// Stop when the relative coefficient change falls below this.
    pub outer_tol: f64,
    pub outer_max: usize,
    /// Stop when the sampled nonlinear residual has not improved by
    /// `outer_stagnation_rtol` in this many consecutive outer iterations.
    pub outer_stagnation_window: usize,
    pub outer_stagnation_rtol: f64,
    /// Inner iteration budget for the thresholding family (IHT/NIHT/CGIHT).
    pub inner_max_thresholding: usize,
    /// Inner iteration budget for the pursuit family (SP/CGSTP).
    pub inner_max_pursuit: usize,
    /// Inner relative residual tolerance.
    pub inner_tol: f64,
    /// Inner stagnation window (thresholding family).
    pub inner_stagnation_window: usize,
    pub inner_stagnation_rtol: f64,
    /// Fixed IHT step; `None` selects `1/(1.05·σ_max)²`.
    pub iht_mu: Option<f64>,
    /// Abort an inner solve whose residual grows past this multiple of its best.
    pub divergence_factor: f64,
    /// Maximum halvings of a coefficient update that leaves the domain.
    pub max_dampings: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            outer_tol: 1e-6,
            outer_max: 50,
            outer_stagnation_window: 3,
            outer_stagnation_rtol: 1e-3,
            inner_max_thresholding: 5000,
            inner_max_pursuit: 200,
            inner_tol: 1e-8,
            inner_stagnation_window: 25,
            inner_stagnation_rtol: 1e-6,
            iht_mu: None,
            divergence_factor: 10.0,
            max_dampings: 30,
        }
    }
}

impl PipelineOptions {
    fn greedy_options(&self, algorithm: GreedyAlgorithm) -> GreedyOptions {
        GreedyOptions {
            max_iter: if algorithm.is_pursuit() {
                self.inner_max_pursuit
            } else {
                self.inner_max_thresholding
            },
            tol: self.inner_tol,
            stagnation_window: self.inner_stagnation_window,
            stagnation_rtol: self.inner_stagnation_rtol,
            divergence_factor: self.divergence_factor,
        }
    }
}

/// Per-stage wall-clock breakdown of one run.
#[derive(Debug, Clone, Copy, Default)]
pub struct StageTimings {
    pub view_factor_s: f64,
    pub basis_s: f64,
    pub iteration_s: f64,
}

/// Full record of one pipeline run.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub algorithm: String,
    pub seed: u64,
    /// Per-region sparsity budgets (capsule, top face, bottom face, wall).
    pub k: [usize; 4],
    /// Number of sampled rows.
    pub m: usize,
    /// Total coefficient count of the basis.
    pub l_total: usize,
    pub outer_iterations: usize,
    /// Total inner iterations across all outer iterations.
    pub inner_iterations: usize,
    /// Relative sampled nonlinear residual after each outer iteration,
    /// including the initial point.
    pub outer_residual_history: Vec<f64>,
    /// Inner relative residual histories, one per outer iteration.
    pub inner_residual_histories: Vec<Vec<f64>>,
    /// Relative RMSE of the reconstructed flux against the reference, when
    /// a reference was supplied.
    pub rmse_all: Option<f64>,
    /// Same, restricted to the capsule region.
    pub rmse_capsule: Option<f64>,
    /// RMSE against the reference after each outer iteration.
    pub outer_rmse_history: Option<Vec<f64>>,
    pub timings: StageTimings,
    /// Domain-clamp activations during residual evaluations.
    pub clamp_events: usize,
    /// Update halvings forced by out-of-domain iterates.
    pub damping_events: usize,
}

/// Precomputed sampled-row quantities shared by every solver and seed run
/// on the same `(model, basis, plan)`.
pub struct CsContext<'a> {
    pub model: &'a CavityModel,
    pub basis: &'a BasisSet,
    pub plan: &'a SamplePlan,
    /// Sampled rows `ΦV` of the exchange matrix.
    pub v_rows: ViewFactorRows,
    /// Source on the sampled rows, `E_Φ = (ΦV)·S⁰`.
    pub e_rows: Array1<f64>,
    /// Sampled basis rows `ΦΨ`.
    pub psi_rows: Array2<f64>,
    /// Cached `Φ(I − V)Ψ`.
    pub a_base: Array2<f64>,
    pub params: MaterialParams,
    /// Wall time spent assembling the sampled exchange rows.
    pub view_factor_s: f64,
    /// Wall time spent building the basis (reported, measured by the caller).
    pub basis_s: f64,
}

impl<'a> CsContext<'a> {
    pub fn prepare(
        model: &'a CavityModel,
        basis: &'a BasisSet,
        plan: &'a SamplePlan,
        params: MaterialParams,
        basis_s: f64,
    ) -> Result<Self> {
        params.validate()?;
        if plan.n_total != model.n() {
            return Err(Error::Dimension(format!(
                "plan was drawn for {} elements, model has {}",
                plan.n_total,
                model.n()
            )));
        }
        let t0 = Instant::now();
        let v_rows = assemble_view_rows(model, &plan.indices)?;
        let view_factor_s = t0.elapsed().as_secs_f64();
        let s0: Array1<f64> = Array1::from_vec(model.source.s0.clone());
        let e_rows = v_rows.v.dot(&s0);
        let psi_rows = basis.rows_dense(&plan.indices)?;
        let a_base = &psi_rows - &basis.premul(v_rows.v.view())?;
        Ok(CsContext {
            model,
            basis,
            plan,
            v_rows,
            e_rows,
            psi_rows,
            a_base,
            params,
            view_factor_s,
            basis_s,
        })
    }

    /// Sampled nonlinear residual `f_Φ(c)` with domain clamping.
    fn residual_rows(&self, flux_full: &Array1<f64>, eps_b: f64, clamps: &mut usize) -> Array1<f64> {
        let c = self.params.c_const();
        let inv_beta = 1.0 / self.params.beta;
        let v_flux = self.v_rows.v.dot(flux_full);
        let flux_rows: Array1<f64> = self.plan.indices.iter().map(|&i| flux_full[i]).collect();
        let powed = flux_rows.mapv(|x| {
            let xc = if x < eps_b {
                *clamps += 1;
                eps_b
            } else {
                x
            };
            c * xc.powf(inv_beta)
        });
        &flux_rows - &v_flux + powed - &self.e_rows
    }

    /// Constant-term-only starting point: per region, the constant
    /// coefficient reproducing the sampled-row mean of `E`.
    fn initial_coefficients(&self) -> Result<Array1<f64>> {
        let mut c0 = Array1::zeros(self.basis.l_total());
        for idx in 0..4usize {
            let range = self.model.region_ranges[idx].clone();
            let mut sum = 0.0;
            let mut count = 0usize;
            for (pos, &g) in self.plan.indices.iter().enumerate() {
                if range.contains(&g) {
                    sum += self.e_rows[pos];
                    count += 1;
                }
            }
            if count == 0 {
                return Err(Error::Config(format!(
                    "sampling plan has no rows in region {}",
                    Region::ALL[idx].as_str()
                )));
            }
            let mean = sum / count as f64;
            if mean <= 0.0 {
                return Err(Error::Domain(format!(
                    "sampled mean source in region {} is non-positive",
                    Region::ALL[idx].as_str()
                )));
            }
            // The first column of every family is its constant term.
            let const_value = self.basis.block(idx)[[0, 0]];
            c0[self.basis.col_range(idx).start] = mean / const_value;
        }
        Ok(c0)
    }
}

fn run_greedy(
    algorithm: GreedyAlgorithm,
    a: &Array2<f64>,
    y: &Array1<f64>,
    pattern: &SparsityPattern,
    opts: &PipelineOptions,
) -> Result<GreedyResult> {
    let gopts = opts.greedy_options(algorithm);
    match algorithm {
        GreedyAlgorithm::Iht => greedy::iht(a.view(), y.view(), pattern, opts.iht_mu, &gopts),
        GreedyAlgorithm::Niht => greedy::niht(a.view(), y.view(), pattern, &gopts),
        GreedyAlgorithm::Cgiht => greedy::cgiht(a.view(), y.view(), pattern, &gopts),
        GreedyAlgorithm::Sp => greedy::subspace_pursuit(a.view(), y.view(), pattern, &gopts),
        GreedyAlgorithm::Cgstp => greedy::cgstp(a.view(), y.view(), pattern, &gopts),
    }
}

/// Solves the sampled nonlinear balance for blockwise-sparse coefficients by
/// outer relinearization around the current iterate.
///
/// `k` are the per-region sparsity budgets. When `reference` is supplied the
/// report carries the flux RMSE (all elements and capsule-only) and its
/// per-outer-iteration history.
pub fn nonlinear_cs_solve(
    ctx: &CsContext,
    algorithm: GreedyAlgorithm,
    k: [usize; 4],
    opts: &PipelineOptions,
    reference: Option<ArrayView1<f64>>,
) -> Result<(Array1<f64>, SolverReport)> {
    let basis = ctx.basis;
    let blocks: Vec<_> = (0..4)
        .map(|idx| (basis.col_range(idx), k[idx]))
        .collect();
    for (range, kb) in &blocks {
        if *kb == 0 || *kb > range.len() {
            return Err(Error::Config(format!(
                "sparsity budget {kb} invalid for block of {} terms",
                range.len()
            )));
        }
    }
    let pattern = SparsityPattern::Blocks(blocks);

    let t0 = Instant::now();
    let mut clamp_events = 0usize;
    let mut damping_events = 0usize;
    let mean_e = ctx.e_rows.sum() / ctx.e_rows.len() as f64;
    if !(mean_e > 0.0) {
        return Err(Error::Domain("sampled source has non-positive mean".into()));
    }
    let eps_b = 1e-12 * mean_e;
    let e_norm = ctx.e_rows.dot(&ctx.e_rows).sqrt();

    let mut c_star = ctx.initial_coefficients()?;
    let mut flux_full = basis.mul(c_star.view())?;
    let mut f_rows = ctx.residual_rows(&flux_full, eps_b, &mut clamp_events);
    let mut outer_residuals = vec![f_rows.dot(&f_rows).sqrt() / e_norm];
    let mut inner_histories: Vec<Vec<f64>> = Vec::new();
    let mut outer_rmse_history = reference.map(|_| Vec::new());
    if let (Some(hist), Some(r)) = (outer_rmse_history.as_mut(), reference) {
        hist.push(rmse(flux_full.view(), r)?);
    }

    let c_const = ctx.params.c_const();
    let beta = ctx.params.beta;
    let mut inner_total = 0usize;
    let mut outer_done = 0usize;
    let mut best_outer_res = outer_residuals[0];
    let mut best_outer_iter = 0usize;

    for outer in 1..=opts.outer_max {
        // Sensing matrix at the current point: A = Φ(I−V)Ψ + diag(w)·ΦΨ.
        let w: Array1<f64> = ctx.plan.indices.iter().map(|&i| {
            let x = flux_full[i].max(eps_b);
            (c_const / beta) * x.powf(1.0 / beta - 1.0)
        }).collect();
        let a = &ctx.a_base + &(&ctx.psi_rows * &w.view().insert_axis(Axis(1)));
        let y = a.dot(&c_star) - &f_rows;

        let result = run_greedy(algorithm, &a, &y, &pattern, opts)?;
        inner_total += result.iterations;
        inner_histories.push(result.residual_history.clone());

        // Damping: halve the update until the sampled flux is positive.
        let mut candidate = result.c;
        let mut accepted = false;
        for _ in 0..=opts.max_dampings {
            let flux_cand = basis.mul(candidate.view())?;
            let feasible = ctx
                .plan
                .indices
                .iter()
                .all(|&i| flux_cand[i] > 0.0);
            if feasible {
                flux_full = flux_cand;
                accepted = true;
                break;
            }
            damping_events += 1;
            candidate = &c_star + &((&candidate - &c_star) * 0.5);
        }
        if !accepted {
            return Err(Error::IterateOutOfDomain(format!(
                "coefficient update kept the sampled flux non-positive after {} halvings",
                opts.max_dampings
            )));
        }

        let delta = {
            let d = &candidate - &c_star;
            d.dot(&d).sqrt() / c_star.dot(&c_star).sqrt().max(f64::MIN_POSITIVE)
        };
        c_star = candidate;
        f_rows = ctx.residual_rows(&flux_full, eps_b, &mut clamp_events);
        let res = f_rows.dot(&f_rows).sqrt() / e_norm;
        outer_residuals.push(res);
        if let (Some(hist), Some(r)) = (outer_rmse_history.as_mut(), reference) {
            hist.push(rmse(flux_full.view(), r)?);
        }
        outer_done = outer;

        if res < best_outer_res * (1.0 - opts.outer_stagnation_rtol) {
            best_outer_res = res;
            best_outer_iter = outer;
        }
        if delta < opts.outer_tol {
            break;
        }
        if outer - best_outer_iter >= opts.outer_stagnation_window {
            break;
        }
    }

    let iteration_s = t0.elapsed().as_secs_f64();
    let (rmse_all, rmse_capsule) = match reference {
        Some(r) => {
            let all = rmse(flux_full.view(), r)?;
            let capsule_range = ctx.model.region_range(Region::Capsule);
            let cap = rmse(
                flux_full.slice(ndarray::s![capsule_range.clone()]),
                r.slice(ndarray::s![capsule_range]),
            )?;
            (Some(all), Some(cap))
        }
        None => (None, None),
    };

    let report = SolverReport {
        algorithm: algorithm.as_str().to_string(),
        seed: ctx.plan.seed,
        k,
        m: ctx.plan.m(),
        l_total: basis.l_total(),
        outer_iterations: outer_done,
        inner_iterations: inner_total,
        outer_residual_history: outer_residuals,
        inner_residual_histories: inner_histories,
        rmse_all,
        rmse_capsule,
        outer_rmse_history,
        timings: StageTimings {
            view_factor_s: ctx.view_factor_s,
            basis_s: ctx.basis_s,
            iteration_s,
        },
        clamp_events,
        damping_events,
    };
    Ok((c_star, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::arr1;

    #[test]
    fn rmse_basic_properties() {
        let b = arr1(&[1.0, 2.0, 3.0]);
        assert_eq!(rmse(b.view(), b.view()).unwrap(), 0.0);
        let double = &b * 2.0;
        assert_relative_eq!(rmse(double.view(), b.view()).unwrap(), 1.0, epsilon = 1e-15);
        let zero = Array1::zeros(3);
        assert!(rmse(b.view(), zero.view()).is_err());
        assert!(rmse(b.view(), arr1(&[1.0]).view()).is_err());
    }

    #[test]
    fn algorithm_parsing_round_trip() {
        for alg in GreedyAlgorithm::ALL {
            let parsed: GreedyAlgorithm = alg.as_str().parse().unwrap();
            assert_eq!(parsed, alg);
        }
        assert!("omp".parse::<GreedyAlgorithm>().is_err());
    }
}
