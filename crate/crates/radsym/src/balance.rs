//! The nonlinear energy-balance system.
//!
//! Each element's emitted flux `B_i` balances the direct source flux `E_i`
//! and the flux received from every other element, attenuated by the
//! flux-dependent wall albedo
//!
//! ```text
//! λ(B) = 1 / (1 + υ^{-1/β} · B^{1/β - 1} · t^{-α/β}),
//! ```
//!
//! which in vector form reads `(I − V)B + C·B∘^(1/β) = E` with
//! `C = υ^{-1/β} t^{-α/β}` and `∘` the Hadamard (elementwise) power. In the
//! sparse-coefficient form the unknown is `c` with `B = Ψc`:
//! `f(c) = (I − V)(Ψc) + C(Ψc)∘^(1/β) − E`, whose Jacobian is
//! `f_c = (I − V)Ψ + diag[(C/β)(Ψc)∘^(1/β−1)]·Ψ`. Both forms can be
//! evaluated on all rows or on a sampled row subset.

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

/// Wall material constants and the (fixed) radiation time snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    pub upsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Radiation time of the evaluated snapshot.
    pub time: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            upsilon: 4.87,
            alpha: 8.0 / 13.0,
            beta: 16.0 / 13.0,
            time: 1.0,
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        if self.upsilon <= 0.0 {
            return Err(Error::Config(format!("upsilon must be positive, got {}", self.upsilon)));
        }
        if self.beta <= 1.0 {
            return Err(Error::Config(format!("beta must exceed 1, got {}", self.beta)));
        }
        if self.time <= 0.0 {
            return Err(Error::Config(format!("time must be positive, got {}", self.time)));
        }
        Ok(())
    }

    /// The derived constant `C = υ^{-1/β} · t^{-α/β}`.
    pub fn c_const(&self) -> f64 {
        self.upsilon.powf(-1.0 / self.beta) * self.time.powf(-self.alpha / self.beta)
    }
}

/// Flux-dependent albedo `λ = 1/(1 + C·B^{1/β−1})`, strictly inside (0, 1).
pub fn albedo(b: f64, params: &MaterialParams) -> Result<f64> {
    params.validate()?;
    if b <= 0.0 {
        return Err(Error::Domain(format!(
            "albedo requires positive flux, got {b}"
        )));
    }
    let c = params.c_const();
    Ok(1.0 / (1.0 + c * b.powf(1.0 / params.beta - 1.0)))
}

/// View-factor rows available to a balance system: the full matrix or a
/// sampled subset of its rows.
#[derive(Debug, Clone, Copy)]
pub enum ViewRef<'a> {
    Full(ArrayView2<'a, f64>),
    Rows {
        rows: &'a [usize],
        v: ArrayView2<'a, f64>,
    },
}

impl<'a> ViewRef<'a> {
    /// Number of evaluated rows.
    pub fn n_rows(&self) -> usize {
        match self {
            ViewRef::Full(v) => v.nrows(),
            ViewRef::Rows { v, .. } => v.nrows(),
        }
    }

    /// Number of columns (the full element count `N`).
    pub fn n_cols(&self) -> usize {
        match self {
            ViewRef::Full(v) => v.ncols(),
            ViewRef::Rows { v, .. } => v.ncols(),
        }
    }

    /// Global element indices of the evaluated rows.
    pub fn row_indices(&self) -> Vec<usize> {
        match self {
            ViewRef::Full(v) => (0..v.nrows()).collect(),
            ViewRef::Rows { rows, .. } => rows.to_vec(),
        }
    }

    fn matrix(&self) -> ArrayView2<'a, f64> {
        match self {
            ViewRef::Full(v) => *v,
            ViewRef::Rows { v, .. } => *v,
        }
    }

    /// Restriction of a full-length vector to the evaluated rows.
    pub fn select(&self, full: ArrayView1<f64>) -> Array1<f64> {
        match self {
            ViewRef::Full(_) => full.to_owned(),
            ViewRef::Rows { rows, .. } => rows.iter().map(|&r| full[r]).collect(),
        }
    }
}

/// Everything needed to evaluate the energy balance: exchange rows, source
/// on those rows, material constants, and (for the sparse form) the basis.
pub struct BalanceSystem<'a> {
    pub view: ViewRef<'a>,
    /// Source vector restricted to the evaluated rows.
    pub source: ArrayView1<'a, f64>,
    pub params: MaterialParams,
    pub basis: Option<&'a BasisSet>,
}

impl<'a> BalanceSystem<'a> {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.source.len() != self.view.n_rows() {
            return Err(Error::Dimension(format!(
                "source has {} entries but view evaluates {} rows",
                self.source.len(),
                self.view.n_rows()
            )));
        }
        if let Some(basis) = self.basis {
            if basis.n_rows() != self.view.n_cols() {
                return Err(Error::Dimension(format!(
                    "basis covers {} elements but view has {} columns",
                    basis.n_rows(),
                    self.view.n_cols()
                )));
            }
        }
        Ok(())
    }

    fn basis(&self) -> Result<&'a BasisSet> {
        self.basis
            .ok_or_else(|| Error::Config("operation requires a basis set".into()))
    }
}

fn check_positive(rows: &[usize], b: ArrayView1<f64>, what: &str) -> Result<()> {
    for &r in rows {
        if b[r] <= 0.0 {
            return Err(Error::IterateOutOfDomain(format!(
                "{what} is non-positive ({}) at element {r}",
                b[r]
            )));
        }
    }
    Ok(())
}

/// Residual of the flux-form balance, evaluated on the system's rows:
/// `r = B_Φ − (V B)_Φ + C·B_Φ^{1/β} − E_Φ` for a full-length flux vector `B`.
pub fn residual_full(b: ArrayView1<f64>, system: &BalanceSystem) -> Result<Array1<f64>> {
    system.validate()?;
    if b.len() != system.view.n_cols() {
        return Err(Error::Dimension(format!(
            "flux vector has {} entries, expected {}",
            b.len(),
            system.view.n_cols()
        )));
    }
    let rows = system.view.row_indices();
    check_positive(&rows, b, "flux")?;
    let c = system.params.c_const();
    let inv_beta = 1.0 / system.params.beta;
    let vb = system.view.matrix().dot(&b);
    let b_rows = system.view.select(b);
    Ok(&b_rows - &vb + b_rows.mapv(|x| c * x.powf(inv_beta)) - &system.source)
}

/// Residual of the sparse-coefficient form `f(c)` on the system's rows.
pub fn residual_sparse(c: ArrayView1<f64>, system: &BalanceSystem) -> Result<Array1<f64>> {
    let basis = system.basis()?;
    let flux = basis.mul(c)?;
    residual_full(flux.view(), system)
}

/// Jacobian of the sparse form at `c*`:
/// `f_c = (I − V)Ψ + diag[(C/β)(Ψc*)^{1/β−1}]·Ψ`, on the system's rows.
pub fn jacobian(c_star: ArrayView1<f64>, system: &BalanceSystem) -> Result<Array2<f64>> {
    system.validate()?;
    let basis = system.basis()?;
    let flux = basis.mul(c_star)?;
    let rows = system.view.row_indices();
    check_positive(&rows, flux.view(), "expansion-point flux")?;

    let c = system.params.c_const();
    let beta = system.params.beta;
    let diag: Array1<f64> = rows
        .iter()
        .map(|&r| (c / beta) * flux[r].powf(1.0 / beta - 1.0))
        .collect();

    // (I − V)Ψ restricted to rows: Ψ_rows − (V_rows)Ψ, blockwise.
    let psi_rows = basis.rows_dense(&rows)?;
    let v_psi = basis.premul(system.view.matrix())?;
    let mut jac = &psi_rows - &v_psi;
    jac += &(&psi_rows * &diag.insert_axis(Axis(1)));
    Ok(jac)
}

/// First-order expansion of the sparse residual at `c*` on the sampled rows:
/// the linear system `A c = y` with `A = Φ f_c` and
/// `y = Φ(f_c c* − f(c*))`.
#[derive(Debug, Clone)]
pub struct LinearizedSystem {
    pub a: Array2<f64>,
    pub y: Array1<f64>,
    pub expansion_point: Array1<f64>,
}

/// Linearizes the sparse balance at `c*` on the system's rows.
pub fn linearize(c_star: ArrayView1<f64>, system: &BalanceSystem) -> Result<LinearizedSystem> {
    let a = jacobian(c_star, system)?;
    let f = residual_sparse(c_star, system)?;
    let y = a.dot(&c_star) - f;
    Ok(LinearizedSystem {
        a,
        y,
        expansion_point: c_star.to_owned(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::arr1;

    #[test]
    fn albedo_reference_value() {
        let p = MaterialParams::default();
        // Direct evaluation of the defining formula.
        let expected = 1.0 / (1.0 + 4.87_f64.powf(-13.0 / 16.0));
        assert_relative_eq!(albedo(1.0, &p).unwrap(), expected, epsilon = 1e-15);
        assert_relative_eq!(albedo(1.0, &p).unwrap(), 0.7835, epsilon = 1e-4);
    }

    #[test]
    fn albedo_limits_and_monotonicity() {
        let p = MaterialParams::default();
        let mut prev = 0.0;
        for &b in &[1e-6, 1e-3, 1.0, 1e3, 1e9] {
            let l = albedo(b, &p).unwrap();
            assert!(l > 0.0 && l < 1.0);
            assert!(l > prev, "albedo must increase with flux");
            prev = l;
        }
        assert!(albedo(1e12, &p).unwrap() > 0.99);
        assert!(albedo(0.0, &p).is_err());
        assert!(albedo(-1.0, &p).is_err());
    }

    #[test]
    fn residual_identity_with_zero_view() {
        // V = 0, B = 1: residual = 1 + C − E exactly.
        let v = Array2::zeros((3, 3));
        let e = arr1(&[0.5, 1.0, 2.0]);
        let params = MaterialParams::default();
        let system = BalanceSystem {
            view: ViewRef::Full(v.view()),
            source: e.view(),
            params,
            basis: None,
        };
        let b = Array1::ones(3);
        let r = residual_full(b.view(), &system).unwrap();
        let c = params.c_const();
        for i in 0..3 {
            assert_relative_eq!(r[i], 1.0 + c - e[i], epsilon = 1e-15);
        }
        // Doubling E at fixed B changes the residual by exactly −E.
        let e2 = &e * 2.0;
        let system2 = BalanceSystem {
            view: ViewRef::Full(v.view()),
            source: e2.view(),
            params,
            basis: None,
        };
        let r2 = residual_full(b.view(), &system2).unwrap();
        for i in 0..3 {
            assert_relative_eq!(r[i] - r2[i], e[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn residual_rejects_nonpositive_flux() {
        let v = Array2::zeros((2, 2));
        let e = arr1(&[1.0, 1.0]);
        let system = BalanceSystem {
            view: ViewRef::Full(v.view()),
            source: e.view(),
            params: MaterialParams::default(),
            basis: None,
        };
        let b = arr1(&[1.0, 0.0]);
        assert!(matches!(
            residual_full(b.view(), &system),
            Err(Error::IterateOutOfDomain(_))
        ));
    }

    #[test]
    fn c_const_value() {
        let p = MaterialParams::default();
        assert_relative_eq!(p.c_const(), 4.87_f64.powf(-13.0 / 16.0), epsilon = 1e-15);
        // t dependence: C(t) = υ^{-1/β} t^{-α/β}.
        let p2 = MaterialParams { time: 2.0, ..p };
        assert_relative_eq!(
            p2.c_const(),
            4.87_f64.powf(-13.0 / 16.0) * 2.0_f64.powf(-0.5),
            epsilon = 1e-15
        );
    }
}
