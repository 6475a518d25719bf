//! Real spherical harmonics.
//!
//! `Y_m^k(θ,φ) = N_m^k · P_m^|k|(cos θ) · {cos kφ for k ≥ 0, sin |k|φ for k < 0}`
//! with `N_m^k = sqrt((2m+1)(m−|k|)! / (4π (m+|k|)!))`.
//!
//! The associated Legendre functions are evaluated by the stable three-term
//! recurrence with the Condon–Shortley phase omitted, so `P_k^k ≥ 0` on
//! `(0, π)`. Note the normalization makes the `k = 0` harmonics unit-norm on
//! the sphere while the `k ≠ 0` ones carry norm `1/√2`; the basis is
//! orthogonal (diagonal Gram), not orthonormal.

use crate::error::{Error, Result};

/// Associated Legendre table `P_m^k(x)` for all `0 ≤ k ≤ m ≤ m_max`,
/// flattened as `table[m(m+1)/2 + k]`.
///
/// `sin_t` must equal `sqrt(1 − x²)` (nonnegative); it is passed explicitly
/// so callers on a θ-grid avoid the cancellation in recomputing it.
pub fn assoc_legendre_table(m_max: usize, x: f64, sin_t: f64) -> Vec<f64> {
    let len = (m_max + 1) * (m_max + 2) / 2;
    let mut p = vec![0.0; len];
    let idx = |m: usize, k: usize| m * (m + 1) / 2 + k;
    p[0] = 1.0;
    // Diagonal: P_k^k = (2k−1)!! sin^k, then first superdiagonal.
    for k in 1..=m_max {
        p[idx(k, k)] = p[idx(k - 1, k - 1)] * (2.0 * k as f64 - 1.0) * sin_t;
    }
    for k in 0..m_max {
        p[idx(k + 1, k)] = x * (2.0 * k as f64 + 1.0) * p[idx(k, k)];
    }
    // Upward in degree: (m−k) P_m^k = x(2m−1) P_{m−1}^k − (m+k−1) P_{m−2}^k.
    for k in 0..=m_max {
        for m in (k + 2)..=m_max {
            let (mf, kf) = (m as f64, k as f64);
            p[idx(m, k)] =
                (x * (2.0 * mf - 1.0) * p[idx(m - 1, k)] - (mf + kf - 1.0) * p[idx(m - 2, k)])
                    / (mf - kf);
        }
    }
    p
}

/// Normalization constant `sqrt((2m+1)(m−k)! / (4π (m+k)!))` for `0 ≤ k ≤ m`.
pub fn sh_norm(m: u32, k: u32) -> f64 {
    let mut ratio = 1.0; // (m−k)!/(m+k)! = Π_{i=m−k+1}^{m+k} 1/i
    for i in (m - k + 1)..=(m + k) {
        ratio /= i as f64;
    }
    ((2.0 * m as f64 + 1.0) * ratio / (4.0 * std::f64::consts::PI)).sqrt()
}

/// Real spherical harmonic of degree `m` and signed order `k`.
pub fn spherical_harmonic(m: u32, k: i32, theta: f64, phi: f64) -> Result<f64> {
    let ka = k.unsigned_abs();
    if ka > m {
        return Err(Error::InvalidOrder(format!(
            "spherical harmonic requires |k| <= m, got m={m}, k={k}"
        )));
    }
    let x = theta.cos();
    let s = theta.sin();
    let table = assoc_legendre_table(m as usize, x, s);
    let p = table[m as usize * (m as usize + 1) / 2 + ka as usize];
    let angular = if k >= 0 {
        (ka as f64 * phi).cos()
    } else {
        (ka as f64 * phi).sin()
    };
    Ok(sh_norm(m, ka) * p * angular)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    /// Coefficients of the Legendre polynomial P_m in the monomial basis,
    /// by the Bonnet recurrence on coefficient vectors (exact in f64 for
    /// the degrees used here).
    fn legendre_coeffs(m: usize) -> Vec<f64> {
        let mut p0 = vec![1.0];
        if m == 0 {
            return p0;
        }
        let mut p1 = vec![0.0, 1.0];
        for n in 1..m {
            let mut next = vec![0.0; n + 2];
            for (i, &c) in p1.iter().enumerate() {
                next[i + 1] += (2.0 * n as f64 + 1.0) * c / (n as f64 + 1.0);
            }
            for (i, &c) in p0.iter().enumerate() {
                next[i] -= n as f64 * c / (n as f64 + 1.0);
            }
            p0 = std::mem::replace(&mut p1, next);
        }
        p1
    }

    /// Rodrigues-style oracle: P_m^k(x) = (1−x²)^{k/2} d^k/dx^k P_m(x),
    /// via exact polynomial differentiation of the P_m coefficients.
    fn assoc_legendre_oracle(m: usize, k: usize, x: f64) -> f64 {
        let mut c = legendre_coeffs(m);
        for _ in 0..k {
            c = c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &v)| i as f64 * v)
                .collect();
            if c.is_empty() {
                return 0.0;
            }
        }
        let poly: f64 = c.iter().rev().fold(0.0, |acc, &v| acc * x + v);
        (1.0 - x * x).powf(k as f64 / 2.0) * poly
    }

    #[test]
    fn constant_term_normalization() {
        let y = spherical_harmonic(0, 0, 0.7, 1.3).unwrap();
        assert_relative_eq!(y, 1.0 / (4.0 * PI).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(y, 0.28209479177387814, epsilon = 1e-15);
    }

    #[test]
    fn y10_at_pole() {
        let y = spherical_harmonic(1, 0, 0.0, 0.42).unwrap();
        assert_relative_eq!(y, (3.0 / (4.0 * PI)).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(y, 0.4886025119029199, epsilon = 1e-12);
    }

    #[test]
    fn sine_branch_matches_rodrigues_oracle() {
        let (theta, phi) = (PI / 2.0, PI / 2.0);
        let y = spherical_harmonic(1, -1, theta, phi).unwrap();
        let expected = sh_norm(1, 1) * assoc_legendre_oracle(1, 1, theta.cos()) * (phi).sin();
        assert_relative_eq!(y, expected, epsilon = 1e-14);
    }

    #[test]
    fn table_matches_oracle_through_degree_10() {
        for &theta in &[0.3f64, 1.1, 2.0, 2.9] {
            let x = theta.cos();
            let table = assoc_legendre_table(10, x, theta.sin());
            for m in 0..=10usize {
                for k in 0..=m {
                    let got = table[m * (m + 1) / 2 + k];
                    let want = assoc_legendre_oracle(m, k, x);
                    assert_relative_eq!(got, want, max_relative = 1e-9, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn rejects_invalid_order() {
        assert!(spherical_harmonic(2, 3, 0.5, 0.5).is_err());
        assert!(spherical_harmonic(2, -3, 0.5, 0.5).is_err());
    }

    #[test]
    fn latitude_sum_is_phi_independent() {
        // Σ_k Y_m^k(θ,φ)² must not depend on φ.
        for m in 0..=5u32 {
            for &theta in &[0.4, 1.0, 1.9] {
                let at = |phi: f64| -> f64 {
                    (-(m as i32)..=m as i32)
                        .map(|k| spherical_harmonic(m, k, theta, phi).unwrap().powi(2))
                        .sum()
                };
                let base = at(0.1);
                for &phi in &[0.9, 2.3, 4.4, 5.9] {
                    assert_relative_eq!(at(phi), base, max_relative = 1e-10);
                }
            }
        }
    }
}
