//! Annular Zernike polynomials.
//!
//! The radial components `R_{2j+k}^k(r, r̃)` are orthogonal over `[r̃, 1]`
//! with weight `r`; they are built by the Gram–Schmidt recurrence over the
//! auxiliary polynomials `Q_j^k(r²)` and normalization constants `H_j^k`:
//!
//! - `k = 0`: `R_{2j}^0(r, r̃) = P_j[2(r² − r̃²)/(1 − r̃²) − 1]` (Legendre
//!   composition), with `Q_j^0 = R_{2j}^0` and `H_j^0 = (1 − r̃²)/(2(2j+1))`.
//! - `k > 0`: `Q_j^k` is a weighted combination of the level-`(k−1)`
//!   polynomials and `R_{2j+k}^k = sqrt[(1−r̃²)/(2(2j+k+1)H_j^k)]·r^k·Q_j^k(r²)`.
//! - `k < 0` reuses `|k|`.
//!
//! At `r̃ = 0` the family reduces to the classical circle polynomials. The
//! degree-equals-frequency term has the closed form
//! `R_k^k = r^k / sqrt(Σ_{i=0}^{k} r̃^{2i})`, which the recurrence reproduces
//! and the unit tests cross-check.
//!
//! Internally every `Q_j^k` is stored as a coefficient vector over the
//! level-0 basis `{P_i(u)}` with `u = 2(τ − r̃²)/(1 − r̃²) − 1`, `τ = r²`,
//! so evaluation is a stable Legendre-table dot product.

use super::lf::legendre_table;
use crate::error::{Error, Result};

/// Checks the annular Zernike order constraints: `l ≥ |k|`, `l − |k|` even.
pub fn validate_order(l: u32, k: i32) -> Result<()> {
    let ka = k.unsigned_abs();
    if l < ka || (l - ka) % 2 != 0 {
        return Err(Error::InvalidOrder(format!(
            "annular Zernike order (l={l}, k={k}) requires l >= |k| with l - |k| even"
        )));
    }
    Ok(())
}

/// Precomputed radial recurrence tables for one inner-radius ratio.
#[derive(Debug, Clone)]
pub struct AnnularRadialTable {
    eps: f64,
    max_degree: usize,
    /// `coeffs[k][j]` = coefficients of `Q_j^k` over `{P_i(u)}`, length `j+1`.
    coeffs: Vec<Vec<Vec<f64>>>,
    /// `norm[k][j]` = `sqrt[(1−r̃²)/(2(2j+k+1) H_j^k)]`.
    norm: Vec<Vec<f64>>,
}

impl AnnularRadialTable {
    /// Builds tables for all orders with `2j + k ≤ max_degree`.
    pub fn new(eps: f64, max_degree: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::Domain(format!(
                "inner-radius ratio must lie in [0, 1), got {eps}"
            )));
        }
        let eps2 = eps * eps;
        let one_m = 1.0 - eps2;
        // u-coordinate of τ = 0; P_i evaluated there feeds the recurrence.
        let u0 = -(1.0 + eps2) / one_m;
        let p_at_zero = legendre_table(max_degree + 1, u0);

        // Level k is built to index max_degree − k: evaluation needs
        // (max_degree − k)/2 and every H_j^k reaches one index deeper into
        // level k−1.
        let j_top = |k: usize| -> usize { max_degree - k };
        let mut coeffs: Vec<Vec<Vec<f64>>> = Vec::with_capacity(max_degree + 1);
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(max_degree + 1);
        let mut q_zero: Vec<Vec<f64>> = Vec::with_capacity(max_degree + 1);

        let j0 = j_top(0);
        let mut level0 = Vec::with_capacity(j0 + 1);
        let mut h0 = Vec::with_capacity(j0 + 1);
        let mut z0 = Vec::with_capacity(j0 + 1);
        for j in 0..=j0 {
            let mut c = vec![0.0; j + 1];
            c[j] = 1.0;
            level0.push(c);
            h0.push(one_m / (2.0 * (2 * j + 1) as f64));
            z0.push(p_at_zero[j]);
        }
        coeffs.push(level0);
        h.push(h0);
        q_zero.push(z0);

        for k in 1..=max_degree {
            let jt = j_top(k);
            let mut level = Vec::with_capacity(jt + 1);
            let mut hk = Vec::with_capacity(jt + 1);
            let mut zk = Vec::with_capacity(jt + 1);
            for j in 0..=jt {
                let a = 2.0 * ((2 * j + 2 * k) as f64 - 1.0) / ((j + k) as f64 * one_m);
                let prev_h = h[k - 1][j];
                let prev_z = q_zero[k - 1][j];
                if prev_z == 0.0 {
                    return Err(Error::Linalg(format!(
                        "annular recurrence breakdown: Q_{j}^{}(0) = 0 at r̃ = {eps}",
                        k - 1
                    )));
                }
                let factor = a * prev_h / prev_z;
                let mut c = vec![0.0; j + 1];
                for i in 0..=j {
                    let w = factor * q_zero[k - 1][i] / h[k - 1][i];
                    for (ci, &pc) in c.iter_mut().zip(&coeffs[k - 1][i]) {
                        *ci += w * pc;
                    }
                }
                let z = c
                    .iter()
                    .enumerate()
                    .map(|(i, &ci)| ci * p_at_zero[i])
                    .sum::<f64>();
                let h_jk = -a * (q_zero[k - 1][j + 1] / prev_z) * prev_h;
                if !(h_jk > 0.0) {
                    return Err(Error::Linalg(format!(
                        "annular recurrence breakdown: H_{j}^{k} = {h_jk} at r̃ = {eps}"
                    )));
                }
                level.push(c);
                hk.push(h_jk);
                zk.push(z);
            }
            coeffs.push(level);
            h.push(hk);
            q_zero.push(zk);
        }

        let mut norm = Vec::with_capacity(max_degree + 1);
        for (k, hk) in h.iter().enumerate() {
            let nk: Vec<f64> = hk
                .iter()
                .enumerate()
                .map(|(j, &hv)| (one_m / (2.0 * (2 * j + k + 1) as f64 * hv)).sqrt())
                .collect();
            norm.push(nk);
        }
        Ok(AnnularRadialTable {
            eps,
            max_degree,
            coeffs,
            norm,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn check_r(&self, r: f64) -> Result<()> {
        if r < self.eps - 1e-12 || r > 1.0 + 1e-12 {
            return Err(Error::Domain(format!(
                "radial coordinate {r} outside [{}, 1]",
                self.eps
            )));
        }
        Ok(())
    }

    /// Radial polynomial `R_{2j+k}^k(r, r̃)`.
    pub fn radial(&self, j: usize, k: usize, r: f64) -> Result<f64> {
        if 2 * j + k > self.max_degree {
            return Err(Error::InvalidOrder(format!(
                "order 2j+k = {} exceeds table degree {}",
                2 * j + k,
                self.max_degree
            )));
        }
        self.check_r(r)?;
        let tau = r * r;
        let eps2 = self.eps * self.eps;
        let u = 2.0 * (tau - eps2) / (1.0 - eps2) - 1.0;
        let p = legendre_table(j, u);
        if k == 0 {
            return Ok(p[j]);
        }
        let q: f64 = self.coeffs[k][j]
            .iter()
            .zip(&p)
            .map(|(&c, &pi)| c * pi)
            .sum();
        Ok(self.norm[k][j] * r.powi(k as i32) * q)
    }

    /// Full annular Zernike polynomial `U_l^k(r, r̃; φ)`.
    pub fn eval(&self, l: u32, k: i32, r: f64, phi: f64) -> Result<f64> {
        validate_order(l, k)?;
        let ka = k.unsigned_abs() as usize;
        let j = (l as usize - ka) / 2;
        let radial = self.radial(j, ka, r)?;
        let angular = if k >= 0 {
            (ka as f64 * phi).cos()
        } else {
            (ka as f64 * phi).sin()
        };
        Ok(radial * angular)
    }
}

/// Radial annular Zernike polynomial `R_{2j+k}^k(r, r̃)`.
///
/// Convenience scalar entry point; matrix assembly builds one
/// [`AnnularRadialTable`] and reuses it.
pub fn zernike_annular_radial(j: u32, k: u32, r: f64, r_tilde: f64) -> Result<f64> {
    let table = AnnularRadialTable::new(r_tilde, (2 * j + k) as usize)?;
    table.radial(j as usize, k as usize, r)
}

/// Annular Zernike polynomial `U_l^k(r, r̃; φ)` (negative `k` selects the
/// sine branch; the radial part uses `|k|`).
pub fn zernike_annular(l: u32, k: i32, r: f64, r_tilde: f64, phi: f64) -> Result<f64> {
    validate_order(l, k)?;
    let table = AnnularRadialTable::new(r_tilde, l as usize)?;
    table.eval(l, k, r, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Classical circle Zernike radial polynomial by the factorial sum.
    fn circle_radial_oracle(n: usize, m: usize, r: f64) -> f64 {
        assert!(n >= m && (n - m) % 2 == 0);
        let fact = |x: usize| -> f64 { (1..=x).map(|i| i as f64).product::<f64>().max(1.0) };
        let half = (n - m) / 2;
        (0..=half)
            .map(|s| {
                let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
                sign * fact(n - s) / (fact(s) * fact((n + m) / 2 - s) * fact(half - s))
                    * r.powi((n - 2 * s) as i32)
            })
            .sum()
    }

    /// Composite Simpson quadrature of `f` over `[a, b]`.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn reduces_to_legendre_composition_at_k0() {
        // j=1, k=0, r̃=0: P₁(2r²−1) = 2r²−1, so R(1) = 1.
        assert_relative_eq!(
            zernike_annular_radial(1, 0, 1.0, 0.0).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            zernike_annular_radial(1, 0, 0.5, 0.0).unwrap(),
            2.0 * 0.25 - 1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn matches_circle_oracle_at_zero_inner_radius() {
        for n in 0..=12usize {
            for m in (n % 2..=n).step_by(2) {
                let j = (n - m) / 2;
                for &r in &[0.0, 0.15, 0.5, 0.85, 1.0] {
                    let got = zernike_annular_radial(j as u32, m as u32, r, 0.0).unwrap();
                    let want = circle_radial_oracle(n, m, r);
                    assert_relative_eq!(got, want, epsilon = 1e-10, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn degree_equals_frequency_closed_form() {
        // R_k^k(r, r̃) = r^k / sqrt(Σ_{i=0}^k r̃^{2i}).
        for &eps in &[0.0f64, 0.3, 0.475] {
            for k in 0..=8u32 {
                let denom: f64 = (0..=k).map(|i| eps.powi(2 * i as i32)).sum::<f64>().sqrt();
                for &r in &[eps.max(0.05), 0.6, 1.0] {
                    let got = zernike_annular_radial(0, k, r, eps).unwrap();
                    assert_relative_eq!(
                        got,
                        r.powi(k as i32) / denom,
                        max_relative = 1e-10,
                        epsilon = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn radial_orthogonality_under_quadrature() {
        // ∫_r̃^1 R_{2j+k}^k R_{2j'+k}^k r dr = δ_{jj'} (1−r̃²)/(2(2j+k+1)).
        let eps = 0.475;
        let max_degree = 24;
        let table = AnnularRadialTable::new(eps, max_degree).unwrap();
        for k in [0usize, 1, 3, 8, 16] {
            let jmax = (max_degree - k) / 2;
            for j in 0..=jmax {
                for jp in 0..=j {
                    let integral = simpson(
                        |r| table.radial(j, k, r).unwrap() * table.radial(jp, k, r).unwrap() * r,
                        eps,
                        1.0,
                        4000,
                    );
                    if j == jp {
                        let expected =
                            (1.0 - eps * eps) / (2.0 * (2 * j + k + 1) as f64);
                        assert_relative_eq!(integral, expected, max_relative = 1e-6);
                    } else {
                        assert!(
                            integral.abs() < 1e-8,
                            "k={k} j={j} j'={jp}: off-diagonal {integral}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn angular_branch_and_order_validation() {
        // (0,0) is constant; sine branch vanishes at φ=0.
        assert_relative_eq!(zernike_annular(0, 0, 0.7, 0.3, 1.234).unwrap(), 1.0);
        assert_eq!(zernike_annular(3, -1, 0.7, 0.3, 0.0).unwrap(), 0.0);
        assert!(zernike_annular(2, 1, 0.5, 0.0, 0.0).is_err());
        assert!(zernike_annular(1, 2, 0.5, 0.0, 0.0).is_err());
        assert!(zernike_annular_radial(1, 0, 0.2, 0.475).is_err());
    }
}
