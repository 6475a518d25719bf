//! Dense baseline solvers for the flux-form energy balance.
//!
//! Both solvers iterate Newton steps on
//! `g(B) = (I − V)B + C·B∘^(1/β) − E` with Jacobian
//! `J = I − V + diag[(C/β)·B^(1/β−1)]`:
//!
//! - [`newton_raphson`] solves each step with a dense LU factorization and
//!   half-step backtracking when the residual norm would grow;
//! - [`inexact_newton_pcg`] solves each step approximately by conjugate
//!   gradients on the normal equations `JᵀJ ΔB = −Jᵀg` with a Jacobi
//!   (diagonal) preconditioner, never materializing `J`.
//!
//! Iterates are kept in the domain of the fractional power by clamping at
//! `ε_B = 1e-12 · mean(E)`; activations are counted in the report.

use crate::balance::{BalanceSystem, ViewRef};
use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use ndarray_linalg::{FactorizeInto, Solve};

/// Options for the dense Newton solver.
#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    /// Convergence threshold on `‖g(B)‖₂ / ‖E‖₂`.
    pub tol: f64,
    pub max_iter: usize,
    pub max_backtracks: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iter: 50,
            max_backtracks: 30,
        }
    }
}

/// Options for the inexact Newton / PCG solver.
#[derive(Debug, Clone, Copy)]
pub struct PcgOptions {
    /// Outer convergence threshold on `‖g(B)‖₂ / ‖E‖₂`.
    pub tol: f64,
    /// Inner relative residual target for each linear solve.
    pub inner_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub max_backtracks: usize,
}

impl Default for PcgOptions {
    fn default() -> Self {
        PcgOptions {
            tol: 1e-8,
            inner_tol: 1e-3,
            max_outer: 40,
            max_inner: 2000,
            max_backtracks: 30,
        }
    }
}

/// Outcome of a dense solve.
#[derive(Debug, Clone)]
pub struct DenseSolveReport {
    /// Newton (outer) iterations taken.
    pub iterations: usize,
    /// Relative residual after each outer iteration, including the start.
    pub residual_history: Vec<f64>,
    /// Times the domain clamp activated.
    pub clamp_events: usize,
    /// Total inner PCG iterations (zero for the direct solver).
    pub inner_iterations: usize,
    /// Inner solves that hit their budget before the inner tolerance.
    pub inner_stagnations: usize,
}

struct FluxProblem<'a> {
    v: ArrayView2<'a, f64>,
    e: ArrayView1<'a, f64>,
    c: f64,
    inv_beta: f64,
    eps_b: f64,
    e_norm: f64,
}

impl<'a> FluxProblem<'a> {
    fn new(system: &BalanceSystem<'a>) -> Result<Self> {
        system.validate()?;
        let v = match system.view {
            ViewRef::Full(v) => v,
            ViewRef::Rows { .. } => {
                return Err(Error::Config(
                    "dense baseline solvers require the full view-factor matrix".into(),
                ))
            }
        };
        let e = system.source;
        let mean_e = e.sum() / e.len() as f64;
        if !(mean_e > 0.0) {
            return Err(Error::Domain("source vector has non-positive mean".into()));
        }
        Ok(FluxProblem {
            v,
            e,
            c: system.params.c_const(),
            inv_beta: 1.0 / system.params.beta,
            eps_b: 1e-12 * mean_e,
            e_norm: e.dot(&e).sqrt(),
        })
    }

    /// Clamps the iterate into the fractional-power domain, counting events.
    fn clamp(&self, b: &mut Array1<f64>, events: &mut usize) {
        for x in b.iter_mut() {
            if *x < self.eps_b {
                *x = self.eps_b;
                *events += 1;
            }
        }
    }

    fn residual(&self, b: &Array1<f64>) -> Array1<f64> {
        let vb = self.v.dot(b);
        b - &vb + b.mapv(|x| self.c * x.powf(self.inv_beta)) - &self.e.to_owned()
    }

    fn rel_norm(&self, g: &Array1<f64>) -> f64 {
        g.dot(g).sqrt() / self.e_norm
    }

    /// Diagonal of the Jacobian's nonlinear part at `b`.
    fn nonlinear_diag(&self, b: &Array1<f64>) -> Array1<f64> {
        b.mapv(|x| self.c * self.inv_beta * x.powf(self.inv_beta - 1.0))
    }

    /// Starting point: a few sweeps of the classic radiosity fixed point
    /// `B ← λ(B)∘(E + V·B)`, which lands inside Newton's quadratic basin at
    /// the cost of one matrix-vector product per sweep.
    fn initial_guess(&self, events: &mut usize) -> Array1<f64> {
        let mean_e = self.e.sum() / self.e.len() as f64;
        let floor = 1e-3 * mean_e;
        let mut b = self.e.mapv(|x| x.max(floor));
        self.clamp(&mut b, events);
        for _ in 0..40 {
            let vb = self.v.dot(&b);
            let mut next: Array1<f64> = (&self.e.to_owned() + &vb)
                .iter()
                .zip(b.iter())
                .map(|(&income, &bi)| income / (1.0 + self.c * bi.powf(self.inv_beta - 1.0)))
                .collect();
            self.clamp(&mut next, events);
            let diff = (&next - &b).mapv(f64::abs).sum() / next.sum().max(f64::MIN_POSITIVE);
            b = next;
            if diff < 1e-3 {
                break;
            }
        }
        b
    }
}

/// Newton–Raphson with a dense direct linear solve per step and half-step
/// backtracking when the residual increases.
pub fn newton_raphson(
    system: &BalanceSystem,
    opts: &NewtonOptions,
) -> Result<(Array1<f64>, DenseSolveReport)> {
    let problem = FluxProblem::new(system)?;
    let n = problem.v.nrows();
    let mut clamp_events = 0;
    let mut b = problem.initial_guess(&mut clamp_events);
    let mut g = problem.residual(&b);
    let mut rel = problem.rel_norm(&g);
    let mut history = vec![rel];

    for iter in 1..=opts.max_iter {
        if rel < opts.tol {
            return Ok((
                b,
                DenseSolveReport {
                    iterations: iter - 1,
                    residual_history: history,
                    clamp_events,
                    inner_iterations: 0,
                    inner_stagnations: 0,
                },
            ));
        }
        // J = I − V + diag(C/β · B^{1/β−1}), factored in place.
        let mut jac = Array2::zeros((n, n));
        jac.assign(&problem.v);
        jac.mapv_inplace(|x| -x);
        let diag = problem.nonlinear_diag(&b);
        for i in 0..n {
            jac[[i, i]] += 1.0 + diag[i];
        }
        let lu = jac
            .factorize_into()
            .map_err(|e| Error::Singular(format!("Newton matrix factorization failed: {e}")))?;
        let mut step = lu
            .solve(&g)
            .map_err(|e| Error::Singular(format!("Newton solve failed: {e}")))?;
        step.mapv_inplace(|x| -x);

        // Half-step backtracking on residual growth.
        let mut accepted = false;
        for _ in 0..=opts.max_backtracks {
            let mut candidate = &b + &step;
            problem.clamp(&mut candidate, &mut clamp_events);
            let g_new = problem.residual(&candidate);
            let rel_new = problem.rel_norm(&g_new);
            if rel_new < rel || rel_new < opts.tol {
                b = candidate;
                g = g_new;
                rel = rel_new;
                accepted = true;
                break;
            }
            step.mapv_inplace(|x| 0.5 * x);
        }
        history.push(rel);
        if !accepted {
            return Err(Error::NoConvergence {
                iterations: iter,
                residual: rel,
            });
        }
    }
    if rel < opts.tol {
        Ok((
            b,
            DenseSolveReport {
                iterations: opts.max_iter,
                residual_history: history,
                clamp_events,
                inner_iterations: 0,
                inner_stagnations: 0,
            },
        ))
    } else {
        Err(Error::NoConvergence {
            iterations: opts.max_iter,
            residual: rel,
        })
    }
}

/// One Jacobi-preconditioned CG solve of `JᵀJ x = Jᵀ rhs` where
/// `J·x = x − Vx + diag·x` is applied matrix-free. Returns the step and the
/// iterations used, or `None` in the iteration count slot if the inner
/// budget was exhausted.
fn pcg_normal_equations(
    problem: &FluxProblem,
    diag: &Array1<f64>,
    v_colsq: &Array1<f64>,
    rhs: &Array1<f64>,
    inner_tol: f64,
    max_inner: usize,
) -> Result<(Array1<f64>, usize, bool)> {
    let n = rhs.len();
    let apply_j = |x: &Array1<f64>| -> Array1<f64> {
        let vx = problem.v.dot(x);
        x - &vx + x * diag
    };
    let apply_jt = |x: &Array1<f64>| -> Array1<f64> {
        let vtx = problem.v.t().dot(x);
        x - &vtx + x * diag
    };
    // diag(JᵀJ)_j = (1 + D_j)² + Σ_i V_ij² (the V diagonal is zero).
    let precond: Array1<f64> = (0..n)
        .map(|j| 1.0 / ((1.0 + diag[j]).powi(2) + v_colsq[j]).max(f64::MIN_POSITIVE))
        .collect();

    let rhs_norm = rhs.dot(rhs).sqrt();
    if rhs_norm == 0.0 {
        return Ok((Array1::zeros(n), 0, false));
    }
    let mut x = Array1::zeros(n);
    let mut u = rhs.clone(); // u = rhs − Jx
    let mut r_ne = apply_jt(&u);
    let mut z = &r_ne * &precond;
    let mut p = z.clone();
    let mut rz = r_ne.dot(&z);
    for it in 1..=max_inner {
        let jp = apply_j(&p);
        let w = apply_jt(&jp);
        let pw = p.dot(&w);
        if pw <= 0.0 || !pw.is_finite() {
            return Ok((x, it, true));
        }
        let alpha = rz / pw;
        x.scaled_add(alpha, &p);
        u.scaled_add(-alpha, &jp);
        if u.dot(&u).sqrt() / rhs_norm < inner_tol {
            return Ok((x, it, false));
        }
        r_ne.scaled_add(-alpha, &w);
        z = &r_ne * &precond;
        let rz_new = r_ne.dot(&z);
        let beta = rz_new / rz;
        rz = rz_new;
        p = &z + &(&p * beta);
    }
    Ok((x, max_inner, true))
}

/// Inexact Newton with a Jacobi-preconditioned conjugate-gradient inner
/// solver on the normal equations. Reported iterations are the outer Newton
/// steps.
pub fn inexact_newton_pcg(
    system: &BalanceSystem,
    opts: &PcgOptions,
) -> Result<(Array1<f64>, DenseSolveReport)> {
    let problem = FluxProblem::new(system)?;
    let n = problem.v.nrows();
    let mut clamp_events = 0;
    let mut b = problem.initial_guess(&mut clamp_events);
    let mut g = problem.residual(&b);
    let mut rel = problem.rel_norm(&g);
    let mut history = vec![rel];
    let mut inner_total = 0;
    let mut inner_stagnations = 0;

    // Column sums of V², reused across outer iterations.
    let v_colsq: Array1<f64> = (0..n)
        .map(|j| {
            let col = problem.v.column(j);
            col.dot(&col)
        })
        .collect();

    for iter in 1..=opts.max_outer {
        if rel < opts.tol {
            return Ok((
                b,
                DenseSolveReport {
                    iterations: iter - 1,
                    residual_history: history,
                    clamp_events,
                    inner_iterations: inner_total,
                    inner_stagnations,
                },
            ));
        }
        let diag = problem.nonlinear_diag(&b);
        let rhs = g.mapv(|x| -x);
        let (mut step, inner_used, stalled) = pcg_normal_equations(
            &problem,
            &diag,
            &v_colsq,
            &rhs,
            opts.inner_tol,
            opts.max_inner,
        )?;
        inner_total += inner_used;
        if stalled {
            inner_stagnations += 1;
        }

        let mut accepted = false;
        for _ in 0..=opts.max_backtracks {
            let mut candidate = &b + &step;
            problem.clamp(&mut candidate, &mut clamp_events);
            let g_new = problem.residual(&candidate);
            let rel_new = problem.rel_norm(&g_new);
            if rel_new < rel || rel_new < opts.tol {
                b = candidate;
                g = g_new;
                rel = rel_new;
                accepted = true;
                break;
            }
            step.mapv_inplace(|x| 0.5 * x);
        }
        history.push(rel);
        if !accepted {
            return Err(Error::NoConvergence {
                iterations: iter,
                residual: rel,
            });
        }
    }
    if rel < opts.tol {
        Ok((
            b,
            DenseSolveReport {
                iterations: opts.max_outer,
                residual_history: history,
                clamp_events,
                inner_iterations: inner_total,
                inner_stagnations,
            },
        ))
    } else {
        Err(Error::NoConvergence {
            iterations: opts.max_outer,
            residual: rel,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balance::MaterialParams;
    use approx::assert_relative_eq;
    use ndarray::arr1;

    /// Scalar root of `b − v·b + C b^{1/β} = e` by bisection, for the
    /// diagonal-only (V = 0) comparison.
    fn scalar_root(e: f64, c: f64, inv_beta: f64) -> f64 {
        let f = |b: f64| b + c * b.powf(inv_beta) - e;
        let (mut lo, mut hi) = (1e-12, e.max(1.0) * 2.0);
        assert!(f(lo) < 0.0 && f(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn newton_matches_scalar_roots_for_diagonal_system() {
        let n = 12;
        let v = Array2::zeros((n, n));
        let e: Array1<f64> = (0..n).map(|i| 0.3 + 0.25 * i as f64).collect();
        let params = MaterialParams::default();
        let system = BalanceSystem {
            view: ViewRef::Full(v.view()),
            source: e.view(),
            params,
            basis: None,
        };
        let (b, report) = newton_raphson(&system, &NewtonOptions::default()).unwrap();
        let c = params.c_const();
        for i in 0..n {
            let want = scalar_root(e[i], c, 1.0 / params.beta);
            assert_relative_eq!(b[i], want, max_relative = 1e-12);
        }
        assert!(report.iterations <= 8);
        assert!(*report.residual_history.last().unwrap() < 1e-10);
    }

    #[test]
    fn pcg_agrees_with_newton_on_coupled_system() {
        // Small coupled system with a contractive V.
        let n = 24;
        let mut v = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    v[[i, j]] = 0.7 / (n as f64 - 1.0);
                }
            }
        }
        let e: Array1<f64> = (0..n).map(|i| 1.0 + 0.1 * (i as f64).sin()).collect();
        let params = MaterialParams::default();
        let system = BalanceSystem {
            view: ViewRef::Full(v.view()),
            source: e.view(),
            params,
            basis: None,
        };
        let (b_nr, _) = newton_raphson(&system, &NewtonOptions::default()).unwrap();
        let (b_pcg, report) = inexact_newton_pcg(&system, &PcgOptions::default()).unwrap();
        let diff = (&b_nr - &b_pcg).dot(&(&b_nr - &b_pcg)).sqrt() / b_nr.dot(&b_nr).sqrt();
        assert!(diff < 1e-5, "PCG vs NR relative difference {diff}");
        assert!(report.iterations <= 20);
    }

    #[test]
    fn newton_rejects_row_sampled_view() {
        let v = Array2::zeros((2, 4));
        let rows = [0usize, 2];
        let e = arr1(&[1.0, 1.0]);
        let system = BalanceSystem {
            view: ViewRef::Rows {
                rows: &rows,
                v: v.view(),
            },
            source: e.view(),
            params: MaterialParams::default(),
            basis: None,
        };
        assert!(newton_raphson(&system, &NewtonOptions::default()).is_err());
    }
}
