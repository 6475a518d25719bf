//! Legendre–Fourier polynomials for the cylindrical wall.
//!
//! `W(z, φ) = P_l(z) · F_k(φ)` with `F_k = cos kφ` for `k ≥ 0` and
//! `sin |k|φ` for `k < 0`; the normalized axial coordinate lives on
//! `[-1, 1]`. The degree of a term is `n = l + |k|`.

use crate::error::{Error, Result};

/// Legendre polynomials `P_0(x) .. P_{l_max}(x)` by the Bonnet recurrence.
pub fn legendre_table(l_max: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(l_max + 1);
    p.push(1.0);
    if l_max == 0 {
        return p;
    }
    p.push(x);
    for n in 1..l_max {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * x * p[n] - nf * p[n - 1]) / (nf + 1.0);
        p.push(next);
    }
    p
}

/// Legendre polynomial `P_l(x)`.
pub fn legendre(l: usize, x: f64) -> f64 {
    legendre_table(l, x)[l]
}

/// Fourier factor: `cos kφ` for `k ≥ 0`, `sin |k|φ` for `k < 0`.
#[inline]
pub fn fourier_factor(k: i32, phi: f64) -> f64 {
    let ka = k.unsigned_abs() as f64;
    if k >= 0 {
        (ka * phi).cos()
    } else {
        (ka * phi).sin()
    }
}

/// Legendre–Fourier polynomial `P_l(z)·F_k(φ)` on `z ∈ [-1, 1]`.
pub fn legendre_fourier(l: u32, k: i32, z: f64, phi: f64) -> Result<f64> {
    if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&z) {
        return Err(Error::Domain(format!("z = {z} outside [-1, 1]")));
    }
    Ok(legendre(l as usize, z) * fourier_factor(k, phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn first_terms() {
        // Constant, z, and (3z²−1)/2 terms of the sequence.
        assert_eq!(legendre_fourier(0, 0, 0.3, 1.7).unwrap(), 1.0);
        assert_eq!(legendre_fourier(1, 0, 0.3, 0.2).unwrap(), 0.3);
        assert_relative_eq!(
            legendre_fourier(2, 0, 0.5, 9.9).unwrap(),
            (3.0 * 0.25 - 1.0) / 2.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(legendre_fourier(2, 0, 0.5, 0.0).unwrap(), -0.125);
    }

    #[test]
    fn separability() {
        // W(l,k,z,φ) = W(l,0,z,0) · F_k(φ) for k ≥ 0.
        for l in 0..6u32 {
            for k in 0..6i32 {
                for &(z, phi) in &[(0.2, 0.7), (-0.9, 3.0), (0.0, 5.5)] {
                    let w = legendre_fourier(l, k, z, phi).unwrap();
                    let axial = legendre_fourier(l, 0, z, 0.0).unwrap();
                    assert_relative_eq!(w, axial * fourier_factor(k, phi), epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn rejects_out_of_range_z() {
        assert!(legendre_fourier(1, 0, 1.5, 0.0).is_err());
    }

    #[test]
    fn legendre_recurrence_values() {
        assert_relative_eq!(legendre(3, 0.4), 0.5 * (5.0 * 0.4f64.powi(3) - 3.0 * 0.4));
        assert_relative_eq!(legendre(4, -1.0), 1.0);
        assert_relative_eq!(legendre(10, 1.0), 1.0, epsilon = 1e-12);
    }
}
