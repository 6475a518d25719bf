//! Greedy sparse reconstruction solvers for `min ‖y − Ac‖₂ s.t. ‖c‖₀ ≤ K`.
//!
//! Five algorithms share the hard-thresholding operator `H_K` (keep the `K`
//! largest-magnitude entries, ties broken toward the lowest index):
//!
//! - `iht`: fixed-step iteration `c ← H_K[c + μ Aᵀ(y − Ac)]`; when no step is
//!   given, `μ = 1/(1.05·σ_max)²` so the implicitly rescaled operator has
//!   spectral norm below one.
//! - `niht`: adaptive step `μ = ‖g_T‖²/‖A g_T‖²` from the gradient restricted
//!   to the current support, with step-halving when the support changes and
//!   the normalized descent condition fails.
//! - `cgiht`: conjugate search direction, restarted (`χ = 0`) whenever the
//!   support changes.
//! - `subspace_pursuit`: candidate union of the previous support and the `K`
//!   strongest correlations, backtracking least-squares refinement.
//! - `cgstp`: CGIHT's conjugate directions combined with SP-style support
//!   refinement — candidate support from the thresholded conjugate step,
//!   least-squares solve on the union, top-`K` truncation, and a final
//!   least-squares re-solve on the pruned support.
//!
//! Sparsity can be global or blockwise: a blockwise pattern keeps the top
//! `K_b` entries within each coefficient block independently.
//!
//! All solvers stop on relative residual tolerance, on stagnation (no
//! sufficient residual improvement inside a trailing window, or no strict
//! decrease for the pursuit family), or at the iteration budget; a residual
//! that grows past `divergence_factor ×` the best seen aborts with a
//! diagnostic.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use ndarray_linalg::{LeastSquaresSvd, SolveC};
use std::ops::Range;

/// Sparsity budget: one global `K` or a per-block budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SparsityPattern {
    Global(usize),
    /// Disjoint column ranges with their budgets.
    Blocks(Vec<(Range<usize>, usize)>),
}

impl SparsityPattern {
    pub fn total_k(&self) -> usize {
        match self {
            SparsityPattern::Global(k) => *k,
            SparsityPattern::Blocks(blocks) => blocks.iter().map(|(_, k)| k).sum(),
        }
    }

    fn validate(&self, l: usize) -> Result<()> {
        match self {
            SparsityPattern::Global(k) => {
                if *k == 0 || *k > l {
                    return Err(Error::Config(format!(
                        "sparsity K = {k} must lie in 1..={l}"
                    )));
                }
            }
            SparsityPattern::Blocks(blocks) => {
                for (range, k) in blocks {
                    if range.end > l || range.start >= range.end {
                        return Err(Error::Config(format!(
                            "sparsity block {range:?} invalid for {l} columns"
                        )));
                    }
                    if *k == 0 || *k > range.len() {
                        return Err(Error::Config(format!(
                            "block {range:?} budget {k} must lie in 1..={}",
                            range.len()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Indices of the `k` largest-magnitude entries of `v[range]`, ties broken
/// toward the lowest index. Returned indices are global and sorted.
fn top_k_indices(v: ArrayView1<f64>, range: Range<usize>, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = range.collect();
    idx.sort_unstable_by(|&a, &b| {
        v[b].abs()
            .partial_cmp(&v[a].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

/// Support of `H_K(v)` for the pattern: global indices, sorted.
pub fn threshold_support(v: ArrayView1<f64>, pattern: &SparsityPattern) -> Vec<usize> {
    match pattern {
        SparsityPattern::Global(k) => top_k_indices(v, 0..v.len(), *k),
        SparsityPattern::Blocks(blocks) => {
            let mut out = Vec::new();
            for (range, k) in blocks {
                out.extend(top_k_indices(v, range.clone(), *k));
            }
            out.sort_unstable();
            out
        }
    }
}

/// Hard-thresholding operator for a pattern: keeps the per-block top-`K`
/// magnitudes and zeroes the rest.
pub fn hard_threshold_pattern(v: ArrayView1<f64>, pattern: &SparsityPattern) -> Array1<f64> {
    let support = threshold_support(v, pattern);
    let mut out = Array1::zeros(v.len());
    for i in support {
        out[i] = v[i];
    }
    out
}

/// `H_K`: keeps the `k` largest-magnitude entries of `v`, zeroes the rest.
/// Ties are broken toward the lowest index.
pub fn hard_threshold(v: ArrayView1<f64>, k: usize) -> Result<Array1<f64>> {
    if k == 0 || k > v.len() {
        return Err(Error::Config(format!(
            "hard threshold requires 0 < K <= {}, got {k}",
            v.len()
        )));
    }
    Ok(hard_threshold_pattern(v, &SparsityPattern::Global(k)))
}

/// Why a greedy solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Relative residual fell below tolerance.
    Tolerance,
    /// No sufficient residual improvement (converged to the algorithm's
    /// fixed point at this sparsity).
    Stagnation,
    /// Iteration budget exhausted.
    MaxIter,
}

/// Options shared by the greedy solvers.
#[derive(Debug, Clone, Copy)]
pub struct GreedyOptions {
    pub max_iter: usize,
    /// Stop when `‖y − Ac‖/‖y‖` falls below this.
    pub tol: f64,
    /// Stop when no iteration in the trailing window improved the best
    /// residual by a relative `stagnation_rtol`.
    pub stagnation_window: usize,
    pub stagnation_rtol: f64,
    /// Abort when the residual exceeds this multiple of the best seen.
    pub divergence_factor: f64,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        GreedyOptions {
            max_iter: 5000,
            tol: 1e-8,
            stagnation_window: 25,
            stagnation_rtol: 1e-6,
            divergence_factor: 10.0,
        }
    }
}

/// Outcome of a greedy solve.
#[derive(Debug, Clone)]
pub struct GreedyResult {
    pub c: Array1<f64>,
    pub iterations: usize,
    /// Relative residual per iteration, including the starting point
    /// (length `iterations + 1`).
    pub residual_history: Vec<f64>,
    pub stop: StopReason,
}

/// Tracks best-so-far residual for stagnation and divergence detection.
struct Watchdog {
    best: f64,
    best_iter: usize,
    opts: GreedyOptions,
}

impl Watchdog {
    fn new(initial: f64, opts: GreedyOptions) -> Self {
        Watchdog {
            best: initial,
            best_iter: 0,
            opts,
        }
    }

    /// Returns `Some(stop)` when iteration should end, `Err` on divergence.
    fn check(&mut self, iter: usize, res: f64) -> Result<Option<StopReason>> {
        if res < self.opts.tol {
            return Ok(Some(StopReason::Tolerance));
        }
        if res > self.opts.divergence_factor * self.best.max(self.opts.tol) {
            return Err(Error::Diverged(format!(
                "residual {res:.3e} grew past {}x the best {:.3e} at iteration {iter}",
                self.opts.divergence_factor, self.best
            )));
        }
        if res < self.best * (1.0 - self.opts.stagnation_rtol) {
            self.best = res;
            self.best_iter = iter;
        }
        if iter - self.best_iter >= self.opts.stagnation_window {
            return Ok(Some(StopReason::Stagnation));
        }
        Ok(None)
    }
}

/// Largest singular value of `A` by power iteration on `AᵀA`
/// (deterministic start vector).
pub fn spectral_norm(a: ArrayView2<f64>) -> f64 {
    let l = a.ncols();
    if l == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let mut v = Array1::from_shape_fn(l, |i| ((i * 2654435761 + 12345) % 1000) as f64 / 1000.0 + 0.5);
    let mut sigma = 0.0;
    for _ in 0..80 {
        let av = a.dot(&v);
        let atav = a.t().dot(&av);
        let n = atav.dot(&atav).sqrt();
        if n == 0.0 {
            return 0.0;
        }
        sigma = av.dot(&av).sqrt() / v.dot(&v).sqrt();
        v = atav / n;
    }
    sigma
}

/// Dense matrix of the columns of `a` selected by `support`.
fn gather_columns(a: ArrayView2<f64>, support: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((a.nrows(), support.len()));
    for (jj, &j) in support.iter().enumerate() {
        out.column_mut(jj).assign(&a.column(j));
    }
    out
}

/// Least-squares solve restricted to a support set; returns a full-length
/// vector that is zero off the support.
///
/// Uses the normal equations with a Cholesky solve; a rank-deficient
/// restriction falls back to a minimum-norm SVD solve (the regularized
/// path), which is reported through the returned flag.
fn ls_on_support(
    a: ArrayView2<f64>,
    y: ArrayView1<f64>,
    support: &[usize],
) -> Result<(Array1<f64>, bool)> {
    let mut c = Array1::zeros(a.ncols());
    if support.is_empty() {
        return Ok((c, false));
    }
    let at = gather_columns(a, support);
    let gram = at.t().dot(&at);
    let rhs = at.t().dot(&y);
    match gram.solvec(&rhs) {
        Ok(sol) => {
            for (&j, &v) in support.iter().zip(sol.iter()) {
                c[j] = v;
            }
            Ok((c, false))
        }
        Err(_) => {
            let sol = at
                .least_squares(&y)
                .map_err(|e| Error::Linalg(format!("restricted least squares failed: {e}")))?;
            for (&j, &v) in support.iter().zip(sol.solution.iter()) {
                c[j] = v;
            }
            Ok((c, true))
        }
    }
}

/// Product `A·v` exploiting that `v` is zero off `support`.
fn a_times_sparse(a: ArrayView2<f64>, v: ArrayView1<f64>, support: &[usize]) -> Array1<f64> {
    let mut out = Array1::zeros(a.nrows());
    for &j in support {
        if v[j] != 0.0 {
            out.scaled_add(v[j], &a.column(j));
        }
    }
    out
}

fn restrict(v: ArrayView1<f64>, support: &[usize]) -> Array1<f64> {
    let mut out = Array1::zeros(v.len());
    for &j in support {
        out[j] = v[j];
    }
    out
}

fn common_checks(a: ArrayView2<f64>, y: ArrayView1<f64>, pattern: &SparsityPattern) -> Result<()> {
    if a.nrows() != y.len() {
        return Err(Error::Dimension(format!(
            "A has {} rows but y has {}",
            a.nrows(),
            y.len()
        )));
    }
    pattern.validate(a.ncols())
}

/// Iterative hard thresholding with a fixed step.
///
/// `mu = None` selects `1/(1.05·σ_max(A))²`, the largest fixed step under
/// which the iteration is a contraction on the data term.
pub fn iht(
    a: ArrayView2<f64>,
    y: ArrayView1<f64>,
    pattern: &SparsityPattern,
    mu: Option<f64>,
    opts: &GreedyOptions,
) -> Result<GreedyResult> {
    common_checks(a, y, pattern)?;
    let y_norm = y.dot(&y).sqrt();
    if y_norm == 0.0 {
        return Ok(GreedyResult {
            c: Array1::zeros(a.ncols()),
            iterations: 0,
            residual_history: vec![0.0],
            stop: StopReason::Tolerance,
        });
    }
    let mu = match mu {
        Some(m) if m > 0.0 => m,
        Some(m) => {
            return Err(Error::Config(format!("IHT step must be positive, got {m}")));
        }
        None => {
            let sigma = spectral_norm(a);
            1.0 / (1.05 * sigma).powi(2)
        }
    };

    let mut c = Array1::zeros(a.ncols());
    let mut r = y.to_owned();
    let mut history = vec![1.0];
    let mut watchdog = Watchdog::new(1.0, *opts);
    let mut stop = StopReason::MaxIter;
    let mut iterations = opts.max_iter;
    for n in 1..=opts.max_iter {
        let g = a.t().dot(&r);
        let step = &c + &(g * mu);
        c = hard_threshold_pattern(step.view(), pattern);
        r = &y.to_owned() - &a.dot(&c);
        let res = r.dot(&r).sqrt() / y_norm;
        history.push(res);
        if let Some(reason) = watchdog.check(n, res)? {
            stop = reason;
            iterations = n;
            break;
        }
    }
    Ok(GreedyResult {
        c,
        iterations,
        residual_history: history,
        stop,
    })
}

/// Normalized IHT: adaptive step from the support-restricted gradient with
/// a step-halving safeguard on support changes.
pub fn niht(
    a: ArrayView2<f64>,
    y: ArrayView1<f64>,
    pattern: &SparsityPattern,
    opts: &GreedyOptions,
) -> Result<GreedyResult> {
    common_checks(a, y, pattern)?;
    let y_norm = y.dot(&y).sqrt();
    if y_norm == 0.0 {
        return Ok(GreedyResult {
            c: Array1::zeros(a.ncols()),
            iterations: 0,
            residual_history: vec![0.0],
            stop: StopReason::Tolerance,
        });
    }
    let mut c = Array1::zeros(a.ncols());
    let corr = a.t().dot(&y);
    let mut support = threshold_support(corr.view(), pattern);
    let mut r = y.to_owned();
    let mut history = vec![1.0];
    let mut watchdog = Watchdog::new(1.0, *opts);
    let mut stop = StopReason::MaxIter;
    let mut iterations = opts.max_iter;

    for n in 1..=opts.max_iter {
        let g = a.t().dot(&r);
        let g_t = restrict(g.view(), &support);
        let ag = a_times_sparse(a, g_t.view(), &support);
        let denom = ag.dot(&ag);
        let g_t_sq = g_t.dot(&g_t);
        if denom == 0.0 || g_t_sq == 0.0 {
            stop = StopReason::Stagnation;
            iterations = n - 1;
            break;
        }
        let mut mu = g_t_sq / denom;
        let mut next = hard_threshold_pattern((&c + &(&g * mu)).view(), pattern);
        let mut next_support = threshold_support(next.view(), pattern);
        // Safeguard: if the support moved, the normalized step must satisfy
        // μ ≤ (1−ε)·‖Δc‖²/‖AΔc‖²; halve until it does.
        let mut halvings = 0;
        while next_support != support && halvings < 60 {
            let dc = &next - &c;
            let adc = a.dot(&dc);
            let bound = (1.0 - 0.01) * dc.dot(&dc) / adc.dot(&adc).max(f64::MIN_POSITIVE);
            if mu <= bound {
                break;
            }
            mu *= 0.5;
            next = hard_threshold_pattern((&c + &(&g * mu)).view(), pattern);
            next_support = threshold_support(next.view(), pattern);
            halvings += 1;
        }
        c = next;
        support = next_support;
        r = &y.to_owned() - &a.dot(&c);
        let res = r.dot(&r).sqrt() / y_norm;
        history.push(res);
        if let Some(reason) = watchdog.check(n, res)? {
            stop = reason;
            iterations = n;
            break;
        }
    }
    Ok(GreedyResult {
        c,
        iterations,
        residual_history: history,
        stop,
    })
}

/// Conjugate-gradient IHT, restarted on support change.
pub fn cgiht(
    a: ArrayView2<f64>,
    y: ArrayView1<f64>,
    pattern: &SparsityPattern,
    opts: &GreedyOptions,
) -> Result<GreedyResult> {
    common_checks(a, y, pattern)?;
    let y_norm = y.dot(&y).sqrt();
    if y_norm == 0.0 {
        return Ok(GreedyResult {
            c: Array1::zeros(a.ncols()),
            iterations: 0,
            residual_history: vec![0.0],
            stop: StopReason::Tolerance,
        });
    }
    let mut c = Array1::zeros(a.ncols());
    let corr = a.t().dot(&y);
    let mut support = threshold_support(corr.view(), pattern);
    let mut prev_support: Option<Vec<usize>> = None;
    let mut d: Array1<f64> = Array1::zeros(a.ncols());
    let mut r = y.to_owned();
    let mut history = vec![1.0];
    let mut watchdog = Watchdog::new(1.0, *opts);
    let mut stop = StopReason::MaxIter;
    let mut iterations = opts.max_iter;

    for n in 1..=opts.max_iter {
        let g = a.t().dot(&r);
        let chi = if prev_support.as_deref() != Some(&support[..]) {
            0.0
        } else {
            let g_t = restrict(g.view(), &support);
            let d_t = restrict(d.view(), &support);
            let ag = a_times_sparse(a, g_t.view(), &support);
            let ad = a_times_sparse(a, d_t.view(), &support);
            let denom = ad.dot(&ad);
            if denom == 0.0 {
                0.0
            } else {
                -ag.dot(&ad) / denom
            }
        };
        d = &g + &(&d * chi);
        let g_t = restrict(g.view(), &support);
        let d_t = restrict(d.view(), &support);
        let ad_t = a_times_sparse(a, d_t.view(), &support);
        let denom = ad_t.dot(&ad_t);
        if denom == 0.0 {
            stop = StopReason::Stagnation;
            iterations = n - 1;
            break;
        }
        let alpha = g_t.dot(&g_t) / denom;
        let next = hard_threshold_pattern((&c + &(&d * alpha)).view(), pattern);
        prev_support = Some(support);
        support = threshold_support(next.view(), pattern);
        c = next;
        r = &y.to_owned() - &a.dot(&c);
        let res = r.dot(&r).sqrt() / y_norm;
        history.push(res);
        if let Some(reason) = watchdog.check(n, res)? {
            stop = reason;
            iterations = n;
            break;
        }
    }
    Ok(GreedyResult {
        c,
        iterations,
        residual_history: history,
        stop,
    })
}

fn union_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out.sort_unstable();
    out.dedup();
    out
}

/// Subspace pursuit with blockwise sparsity.
pub fn subspace_pursuit(
    a: ArrayView2<f64>,
    y: ArrayView1<f64>,
    pattern: &SparsityPattern,
    opts: &GreedyOptions,
) -> Result<GreedyResult> {
    common_checks(a, y, pattern)?;
    let y_norm = y.dot(&y).sqrt();
    if y_norm == 0.0 {
        return Ok(GreedyResult {
            c: Array1::zeros(a.ncols()),
            iterations: 0,
            residual_history: vec![0.0],
            stop: StopReason::Tolerance,
        });
    }
    let corr = a.t().dot(&y);
    let mut support = threshold_support(corr.view(), pattern);
    let (mut c, _) = ls_on_support(a, y, &support)?;
    let mut r = &y.to_owned() - &a.dot(&c);
    let mut res = r.dot(&r).sqrt() / y_norm;
    let mut history = vec![res];
    let mut stop = StopReason::MaxIter;
    let mut iterations = opts.max_iter;

    for n in 1..=opts.max_iter {
        if res < opts.tol {
            stop = StopReason::Tolerance;
            iterations = n - 1;
            break;
        }
        let corr = a.t().dot(&r);
        let additions = threshold_support(corr.view(), pattern);
        let candidate = union_sorted(&support, &additions);
        let (c_hat, _) = ls_on_support(a, y, &candidate)?;
        let new_support = threshold_support(c_hat.view(), pattern);
        let (c_new, _) = ls_on_support(a, y, &new_support)?;
        let r_new = &y.to_owned() - &a.dot(&c_new);
        let res_new = r_new.dot(&r_new).sqrt() / y_norm;
        if res_new >= res {
            // Backtracking acceptance rule: keep the previous iterate.
            stop = StopReason::Stagnation;
            iterations = n - 1;
            break;
        }
        support = new_support;
        c = c_new;
        r = r_new;
        res = res_new;
        history.push(res);
    }
    Ok(GreedyResult {
        c,
        iterations,
        residual_history: history,
        stop,
    })
}

/// Conjugate-gradient subspace thresholding pursuit.
///
/// Steps 1–4 follow the restarted conjugate-direction update of `cgiht`;
/// the candidate support unites the thresholded conjugate step with the
/// previous support; a least-squares solve on the candidate is truncated to
/// the per-block top-`K` and re-solved on the pruned support.
pub fn cgstp(
    a: ArrayView2<f64>,
    y: ArrayView1<f64>,
    pattern: &SparsityPattern,
    opts: &GreedyOptions,
) -> Result<GreedyResult> {
    common_checks(a, y, pattern)?;
    let y_norm = y.dot(&y).sqrt();
    if y_norm == 0.0 {
        return Ok(GreedyResult {
            c: Array1::zeros(a.ncols()),
            iterations: 0,
            residual_history: vec![0.0],
            stop: StopReason::Tolerance,
        });
    }
    let corr = a.t().dot(&y);
    let mut support = threshold_support(corr.view(), pattern);
    let mut prev_support: Option<Vec<usize>> = None;
    let mut d: Array1<f64> = Array1::zeros(a.ncols());
    let mut c = Array1::zeros(a.ncols());
    let mut r = y.to_owned();
    let mut res = 1.0;
    let mut history = vec![res];
    let mut stop = StopReason::MaxIter;
    let mut iterations = opts.max_iter;

    for n in 1..=opts.max_iter {
        if res < opts.tol {
            stop = StopReason::Tolerance;
            iterations = n - 1;
            break;
        }
        let g = a.t().dot(&r);
        let chi = if prev_support.as_deref() != Some(&support[..]) {
            0.0
        } else {
            let g_t = restrict(g.view(), &support);
            let d_t = restrict(d.view(), &support);
            let ag = a_times_sparse(a, g_t.view(), &support);
            let ad = a_times_sparse(a, d_t.view(), &support);
            let denom = ad.dot(&ad);
            if denom == 0.0 {
                0.0
            } else {
                -ag.dot(&ad) / denom
            }
        };
        d = &g + &(&d * chi);
        let g_t = restrict(g.view(), &support);
        let d_t = restrict(d.view(), &support);
        let ad_t = a_times_sparse(a, d_t.view(), &support);
        let denom = ad_t.dot(&ad_t);
        let mu = if denom == 0.0 { 0.0 } else { g_t.dot(&g_t) / denom };

        let stepped = &c + &(&d * mu);
        let candidate = union_sorted(&threshold_support(stepped.view(), pattern), &support);
        let (c_hat, _) = ls_on_support(a, y, &candidate)?;
        let new_support = threshold_support(c_hat.view(), pattern);
        let (c_new, _) = ls_on_support(a, y, &new_support)?;
        let r_new = &y.to_owned() - &a.dot(&c_new);
        let res_new = r_new.dot(&r_new).sqrt() / y_norm;
        if res_new >= res {
            stop = StopReason::Stagnation;
            iterations = n - 1;
            break;
        }
        prev_support = Some(support);
        support = new_support;
        c = c_new;
        r = r_new;
        res = res_new;
        history.push(res);
    }
    Ok(GreedyResult {
        c,
        iterations,
        residual_history: history,
        stop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr1;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hard_threshold_examples() {
        let v = arr1(&[3.0, -1.0, 4.0, 0.5]);
        let t = hard_threshold(v.view(), 2).unwrap();
        assert_eq!(t, arr1(&[3.0, 0.0, 4.0, 0.0]));
        // K = L is the identity.
        assert_eq!(hard_threshold(v.view(), 4).unwrap(), v);
        // Ties break toward the lowest index.
        let ties = arr1(&[1.0, 1.0, 1.0]);
        assert_eq!(hard_threshold(ties.view(), 2).unwrap(), arr1(&[1.0, 1.0, 0.0]));
        assert!(hard_threshold(v.view(), 0).is_err());
        assert!(hard_threshold(v.view(), 5).is_err());
    }

    #[test]
    fn hard_threshold_idempotent() {
        let v = arr1(&[0.1, -5.0, 2.0, 0.0, 3.0, -3.0]);
        let once = hard_threshold(v.view(), 3).unwrap();
        let twice = hard_threshold(once.view(), 3).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn blockwise_threshold_respects_budgets() {
        let v = arr1(&[5.0, 4.0, 3.0, 0.1, 0.2, 0.3]);
        let pattern = SparsityPattern::Blocks(vec![(0..3, 1), (3..6, 2)]);
        let t = hard_threshold_pattern(v.view(), &pattern);
        assert_eq!(t, arr1(&[5.0, 0.0, 0.0, 0.0, 0.2, 0.3]));
    }

    fn gaussian_instance(
        m: usize,
        l: usize,
        k: usize,
        seed: u64,
    ) -> (Array2<f64>, Array1<f64>, Array1<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Array2::zeros((m, l));
        for v in a.iter_mut() {
            *v = rng.sample::<f64, _>(rand_distr::StandardNormal) / (m as f64).sqrt();
        }
        let mut c0 = Array1::zeros(l);
        let mut placed = 0;
        while placed < k {
            let j = rng.gen_range(0..l);
            if c0[j] == 0.0 {
                c0[j] = if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
                    * (0.5 + rng.gen_range(0.0..1.0));
                placed += 1;
            }
        }
        let y = a.dot(&c0);
        (a, y, c0)
    }

    #[test]
    fn iht_recovers_synthetic_sparse_signal() {
        // Well-conditioned random instance, M = 4K·log10(L).
        let (m, l, k) = (240, 500, 20);
        let (a, y, c0) = gaussian_instance(m, l, k, 7);
        let opts = GreedyOptions {
            max_iter: 4000,
            ..GreedyOptions::default()
        };
        let r = iht(a.view(), y.view(), &SparsityPattern::Global(k), None, &opts).unwrap();
        let err = (&r.c - &c0).dot(&(&r.c - &c0)).sqrt() / c0.dot(&c0).sqrt();
        assert!(err < 1e-6, "IHT relative error {err}");
    }

    #[test]
    fn iht_with_full_support_converges_to_least_squares() {
        // K = L and a small step: plain Landweber iteration to the LS solution.
        let (m, l) = (60, 10);
        let (a, y, _) = gaussian_instance(m, l, 5, 3);
        let opts = GreedyOptions {
            max_iter: 20000,
            tol: 1e-12,
            stagnation_window: 1000,
            stagnation_rtol: 1e-13,
            ..GreedyOptions::default()
        };
        let r = iht(a.view(), y.view(), &SparsityPattern::Global(l), None, &opts).unwrap();
        let (ls, _) = ls_on_support(a.view(), y.view(), &(0..l).collect::<Vec<_>>()).unwrap();
        let err = (&r.c - &ls).dot(&(&r.c - &ls)).sqrt() / ls.dot(&ls).sqrt();
        assert!(err < 1e-6, "distance from LS solution {err}");
    }

    #[test]
    fn niht_beats_iht_on_iterations() {
        let (m, l, k) = (240, 500, 20);
        let mut iht_total = 0usize;
        let mut niht_total = 0usize;
        for seed in 0..5 {
            let (a, y, _) = gaussian_instance(m, l, k, 100 + seed);
            let opts = GreedyOptions {
                max_iter: 4000,
                ..GreedyOptions::default()
            };
            let pattern = SparsityPattern::Global(k);
            iht_total += iht(a.view(), y.view(), &pattern, None, &opts).unwrap().iterations;
            niht_total += niht(a.view(), y.view(), &pattern, &opts).unwrap().iterations;
        }
        assert!(
            niht_total < iht_total,
            "NIHT {niht_total} vs IHT {iht_total} total iterations"
        );
    }

    #[test]
    fn niht_identity_single_step() {
        // K = 1, A = I: one step recovers the largest entry of y.
        let a = Array2::eye(5);
        let y = arr1(&[0.1, -2.0, 0.3, 0.0, 1.0]);
        let opts = GreedyOptions::default();
        let r = niht(a.view(), y.view(), &SparsityPattern::Global(1), &opts).unwrap();
        assert_eq!(r.c, arr1(&[0.0, -2.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn niht_orthonormal_support_exact_in_one_step() {
        // Fixed support with orthonormal columns: μ = 1 reaches the
        // restricted minimizer immediately.
        let mut a = Array2::zeros((6, 3));
        a[[0, 0]] = 1.0;
        a[[1, 1]] = 1.0;
        a[[2, 2]] = 1.0;
        let y = arr1(&[2.0, -1.5, 0.0, 0.0, 0.0, 0.0]);
        let r = niht(
            a.view(),
            y.view(),
            &SparsityPattern::Global(2),
            &GreedyOptions::default(),
        )
        .unwrap();
        assert!((r.c[0] - 2.0).abs() < 1e-12 && (r.c[1] + 1.5).abs() < 1e-12);
        assert!(r.residual_history.last().unwrap() < &1e-12);
    }

    #[test]
    fn cgiht_matches_cg_on_fixed_support() {
        // With the support fixed, CGIHT is conjugate-gradient on the
        // restricted normal equations; compare iterates against a textbook
        // CGNR oracle.
        let (m, t) = (40, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut at = Array2::zeros((m, t));
        for v in at.iter_mut() {
            *v = rng.sample::<f64, _>(rand_distr::StandardNormal);
        }
        // Target lies in the span, supported on all t columns; K = t keeps
        // the support constant from the first iteration on.
        let x0 = arr1(&[1.0, -2.0, 0.5, 3.0, -1.0, 2.0]);
        let y = at.dot(&x0);

        // Embed into a wider matrix with tiny noise columns that never enter
        // the support.
        let l = 10;
        let mut a = Array2::zeros((m, l));
        for j in 0..t {
            a.column_mut(j).assign(&at.column(j));
        }
        for j in t..l {
            a[[j % m, j]] = 1e-9;
        }

        let opts = GreedyOptions {
            max_iter: 5,
            tol: 1e-30,
            stagnation_window: 100,
            stagnation_rtol: 1e-15,
            divergence_factor: 1e6,
        };
        let got = cgiht(a.view(), y.view(), &SparsityPattern::Global(t), &opts).unwrap();

        // Textbook CGNR on AᵀA x = Aᵀy, same iteration count.
        let ata = at.t().dot(&at);
        let aty = at.t().dot(&y);
        let mut x: Array1<f64> = Array1::zeros(t);
        let mut g = &aty - &ata.dot(&x);
        let mut dir = g.clone();
        for _ in 0..got.iterations {
            let adir = ata.dot(&dir);
            let alpha = g.dot(&g) / dir.dot(&adir);
            x = &x + &(&dir * alpha);
            let g_new = &g - &(&adir * alpha);
            let beta = g_new.dot(&g_new) / g.dot(&g);
            dir = &g_new + &(&dir * beta);
            g = g_new;
        }
        for j in 0..t {
            assert!(
                (got.c[j] - x[j]).abs() < 1e-10,
                "CGIHT iterate {} vs CG {} at column {j}",
                got.c[j],
                x[j]
            );
        }
    }

    #[test]
    fn cgiht_restarts_on_support_change() {
        // A two-phase instance: the initial support from Aᵀy is wrong, so an
        // early iteration must change support and the restart path (χ = 0)
        // must be taken. We verify recovery still succeeds.
        let (m, l, k) = (80, 120, 4);
        let (a, y, c0) = gaussian_instance(m, l, k, 23);
        let opts = GreedyOptions {
            max_iter: 2000,
            ..GreedyOptions::default()
        };
        let r = cgiht(a.view(), y.view(), &SparsityPattern::Global(k), &opts).unwrap();
        let err = (&r.c - &c0).dot(&(&r.c - &c0)).sqrt() / c0.dot(&c0).sqrt();
        assert!(err < 1e-6, "CGIHT relative error {err}");
    }

    #[test]
    fn sp_exact_recovery_and_monotonicity() {
        let (m, l, k) = (240, 500, 20);
        let (a, y, c0) = gaussian_instance(m, l, k, 5);
        let opts = GreedyOptions {
            max_iter: 100,
            ..GreedyOptions::default()
        };
        let r = subspace_pursuit(a.view(), y.view(), &SparsityPattern::Global(k), &opts).unwrap();
        let err = (&r.c - &c0).dot(&(&r.c - &c0)).sqrt() / c0.dot(&c0).sqrt();
        assert!(err < 1e-8, "SP relative error {err}");
        for w in r.residual_history.windows(2) {
            assert!(w[1] <= w[0], "accepted SP residuals must not increase");
        }
    }

    #[test]
    fn sp_identity_terminates_quickly() {
        // y in the span of K columns of an orthogonal A: exact support in at
        // most K iterations.
        let a = Array2::eye(30);
        let mut y = Array1::zeros(30);
        y[3] = 2.0;
        y[17] = -1.0;
        y[22] = 0.5;
        let opts = GreedyOptions::default();
        let r = subspace_pursuit(a.view(), y.view(), &SparsityPattern::Global(3), &opts).unwrap();
        assert!(r.iterations <= 3);
        assert!(r.residual_history.last().unwrap() < &1e-12);
        assert_eq!(r.c, y);
    }

    #[test]
    fn cgstp_exact_recovery() {
        let (m, l, k) = (240, 500, 20);
        let (a, y, c0) = gaussian_instance(m, l, k, 29);
        let opts = GreedyOptions {
            max_iter: 200,
            ..GreedyOptions::default()
        };
        let r = cgstp(a.view(), y.view(), &SparsityPattern::Global(k), &opts).unwrap();
        let err = (&r.c - &c0).dot(&(&r.c - &c0)).sqrt() / c0.dot(&c0).sqrt();
        assert!(err < 1e-8, "CGSTP relative error {err}");
        // Support-restricted optimality of the final least-squares solve.
        let support: Vec<usize> = (0..l).filter(|&j| r.c[j] != 0.0).collect();
        let resid = &y - &a.dot(&r.c);
        for &j in &support {
            assert!(a.column(j).dot(&resid).abs() < 1e-9);
        }
    }

    #[test]
    fn greedy_iterates_respect_sparsity() {
        let (m, l, k) = (60, 100, 7);
        let (a, y, _) = gaussian_instance(m, l, k, 31);
        let pattern = SparsityPattern::Global(k);
        let opts = GreedyOptions {
            max_iter: 50,
            ..GreedyOptions::default()
        };
        for result in [
            iht(a.view(), y.view(), &pattern, None, &opts).unwrap(),
            niht(a.view(), y.view(), &pattern, &opts).unwrap(),
            cgiht(a.view(), y.view(), &pattern, &opts).unwrap(),
            subspace_pursuit(a.view(), y.view(), &pattern, &opts).unwrap(),
            cgstp(a.view(), y.view(), &pattern, &opts).unwrap(),
        ] {
            let nnz = result.c.iter().filter(|&&v| v != 0.0).count();
            assert!(nnz <= k, "support size {nnz} exceeds K = {k}");
            assert_eq!(result.residual_history.len(), result.iterations + 1);
        }
    }
}
