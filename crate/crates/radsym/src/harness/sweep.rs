//! Sparsity and symmetry analyses of a reference flux: representation-error
//! curves over term counts, coefficient-magnitude rankings, and capsule
//! drive-asymmetry metrics.

use crate::basis::{self, BasisSet, FitResult};
use crate::error::{Error, Result};
use crate::mesh::{CavityModel, Region};
use crate::solvers::pipeline::rmse;
use ndarray::{s, Array1, ArrayView1};
use std::io::Write;

/// One representation-error curve: relative RMSE of the best fit against
/// the term count.
#[derive(Debug, Clone)]
pub struct SweepCurve {
    pub region: Region,
    /// `(term count, relative representation error)` per grid point.
    pub points: Vec<(usize, f64)>,
}

/// Result of a sparsity sweep over one reference flux.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub curves: Vec<SweepCurve>,
    /// Per region: fitted coefficient magnitudes at full term count, sorted
    /// descending (the magnitude-ranking curve).
    pub magnitude_ranking: [Vec<f64>; 4],
    /// Per region: count of coefficients with magnitude above `1e-3`.
    pub counts_above_threshold: [usize; 4],
    /// Per region: the full-L fit itself.
    pub fits: [FitResult; 4],
}

/// Magnitude threshold for the "significant coefficient" counts.
pub const SIGNIFICANT_COEF: f64 = 1e-3;

/// Default term-count grids per region: complete-degree counts of each
/// family up to the block's full size.
pub fn default_grids(basis: &BasisSet) -> [Vec<usize>; 4] {
    let mut grids: [Vec<usize>; 4] = Default::default();
    for idx in 0..4 {
        let l_max = basis.maps[idx].len();
        let mut grid = Vec::new();
        let mut degree = 0usize;
        loop {
            let count = match basis.maps[idx].family {
                basis::BasisFamily::SphericalHarmonic | basis::BasisFamily::LegendreFourier => {
                    (degree + 1) * (degree + 1)
                }
                basis::BasisFamily::AnnularZernike => (degree + 1) * (degree + 2) / 2,
            };
            if count >= l_max {
                grid.push(l_max);
                break;
            }
            grid.push(count);
            degree += 1;
        }
        grids[idx] = grid;
    }
    grids
}

/// Fits the reference flux region by region and sweeps the representation
/// error over the term-count grid.
///
/// The fit at each grid point uses the leading columns of the block
/// (complete-degree prefixes under the block's term ordering) with element
/// areas as weights; the reported error is the relative RMSE between the
/// reconstruction and the reference on that region.
pub fn sparsity_sweep(
    model: &CavityModel,
    basis: &BasisSet,
    reference: ArrayView1<f64>,
    grids: &[Vec<usize>; 4],
) -> Result<SweepResult> {
    if reference.len() != model.n() {
        return Err(Error::Dimension(format!(
            "reference flux has {} entries, model has {}",
            reference.len(),
            model.n()
        )));
    }
    let mut curves = Vec::new();
    let mut magnitude_ranking: [Vec<f64>; 4] = Default::default();
    let mut counts = [0usize; 4];
    let mut fits: Vec<FitResult> = Vec::with_capacity(4);

    for (idx, region) in Region::ALL.into_iter().enumerate() {
        let range = model.region_range(region);
        let values = reference.slice(s![range.clone()]);
        let weights: Array1<f64> = model.elements_in(region).iter().map(|e| e.area).collect();
        let block = basis.block(idx);

        let mut points = Vec::new();
        for &l in &grids[idx] {
            let l = l.min(block.ncols());
            let sub = block.slice(s![.., ..l]);
            let fit = basis::fit_coefficients(&sub.to_owned(), values, weights.view())?;
            let recon = sub.dot(&fit.coefficients);
            points.push((l, rmse(recon.view(), values)?));
        }
        curves.push(SweepCurve { region, points });

        let full = basis::fit_coefficients(block, values, weights.view())?;
        let mut mags: Vec<f64> = full.coefficients.iter().map(|c| c.abs()).collect();
        counts[idx] = mags.iter().filter(|&&m| m > SIGNIFICANT_COEF).count();
        mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
        magnitude_ranking[idx] = mags;
        fits.push(full);
    }
    let fits: [FitResult; 4] = fits.try_into().map_err(|_| Error::Dimension("fit count".into()))?;
    Ok(SweepResult {
        curves,
        magnitude_ranking,
        counts_above_threshold: counts,
        fits,
    })
}

/// Capsule drive-asymmetry metrics from spherical-harmonic coefficients.
#[derive(Debug, Clone)]
pub struct AsymmetryMetrics {
    /// Relative mode amplitudes `a_n = |c_n| / c_0` (so `a_0 = 1`).
    pub amplitudes: Vec<f64>,
    /// Cumulative energy fraction through each mode index, where a mode's
    /// energy is `c_n² · G_nn` with `G` the area-weighted Gram diagonal.
    pub cumulative_energy: Vec<f64>,
    /// Largest relative amplitude over modes `1..`.
    pub max_asymmetry: f64,
}

/// Computes relative mode amplitudes and cumulative energy fractions for a
/// capsule coefficient vector.
///
/// `gram_diag` is the area-weighted Gram diagonal of the capsule block
/// (`G_nn = Σ_i ζ_i Y_in²`), which makes the energy measure independent of
/// the basis normalization; the metrics are invariant under uniform scaling
/// of the flux.
pub fn asymmetry_metrics(
    c_capsule: ArrayView1<f64>,
    gram_diag: ArrayView1<f64>,
) -> Result<AsymmetryMetrics> {
    if c_capsule.len() != gram_diag.len() {
        return Err(Error::Dimension(format!(
            "coefficients ({}) and Gram diagonal ({}) differ",
            c_capsule.len(),
            gram_diag.len()
        )));
    }
    if c_capsule.is_empty() || c_capsule[0] == 0.0 {
        return Err(Error::Domain(
            "asymmetry metrics require a nonzero mean-flux coefficient".into(),
        ));
    }
    let c0 = c_capsule[0].abs();
    let amplitudes: Vec<f64> = c_capsule.iter().map(|c| c.abs() / c0).collect();
    let energies: Vec<f64> = c_capsule
        .iter()
        .zip(gram_diag)
        .map(|(c, g)| c * c * g)
        .collect();
    let total: f64 = energies.iter().sum();
    if total <= 0.0 {
        return Err(Error::Domain("zero total mode energy".into()));
    }
    let mut acc = 0.0;
    let cumulative_energy: Vec<f64> = energies
        .iter()
        .map(|e| {
            acc += e;
            acc / total
        })
        .collect();
    let max_asymmetry = amplitudes[1..].iter().cloned().fold(0.0, f64::max);
    Ok(AsymmetryMetrics {
        amplitudes,
        cumulative_energy,
        max_asymmetry,
    })
}

/// Area-weighted Gram diagonal of a basis block.
pub fn gram_diagonal(model: &CavityModel, basis: &BasisSet, idx: usize) -> Array1<f64> {
    let block = basis.block(idx);
    let region = Region::ALL[idx];
    let weights: Array1<f64> = model.elements_in(region).iter().map(|e| e.area).collect();
    let mut diag = Array1::zeros(block.ncols());
    for (row, &w) in block.outer_iter().zip(weights.iter()) {
        for (d, &v) in diag.iter_mut().zip(row) {
            *d += w * v * v;
        }
    }
    diag
}

/// Writes sweep curves as CSV: `region,terms,representation_error`.
pub fn write_sweep_csv<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    writeln!(out, "region,terms,representation_error")?;
    for curve in &result.curves {
        for &(l, err) in &curve.points {
            writeln!(out, "{},{},{:.9e}", curve.region.as_str(), l, err)?;
        }
    }
    Ok(())
}

/// Writes coefficient magnitude rankings as CSV: `region,rank,magnitude`.
pub fn write_magnitudes_csv<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    writeln!(out, "region,rank,magnitude")?;
    for (idx, region) in Region::ALL.into_iter().enumerate() {
        for (rank, m) in result.magnitude_ranking[idx].iter().enumerate() {
            writeln!(out, "{},{},{:.9e}", region.as_str(), rank, m)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{assemble_cavity, CavityGeometry, MeshResolution, SourceConfig};
    use approx::assert_relative_eq;

    fn toy_model() -> CavityModel {
        let geometry = CavityGeometry {
            cavity_radius: 400.0,
            cavity_half_height: 850.0,
            capsule_radius: 120.0,
            leh_radius: 190.0,
            resolutions: MeshResolution {
                dtheta_s: 30f64.to_radians(),
                dphi_s: 45f64.to_radians(),
                dr: 105.0,
                dphi_u: 20f64.to_radians(),
                dz: 212.5,
                dphi_w: 36f64.to_radians(),
                wall_counts: None,
            },
        };
        assemble_cavity(geometry, SourceConfig::default()).unwrap()
    }

    #[test]
    fn uniform_flux_has_zero_asymmetry() {
        let model = toy_model();
        let basis = BasisSet::build(&model, [16, 15, 15, 16]).unwrap();
        let flux = Array1::from_elem(model.n(), 2.5);
        let weights: Array1<f64> = model
            .elements_in(Region::Capsule)
            .iter()
            .map(|e| e.area)
            .collect();
        let fit = basis::fit_coefficients(
            &basis.y,
            flux.slice(s![model.region_range(Region::Capsule)]),
            weights.view(),
        )
        .unwrap();
        let gram = gram_diagonal(&model, &basis, 0);
        let metrics = asymmetry_metrics(fit.coefficients.view(), gram.view()).unwrap();
        assert_relative_eq!(metrics.amplitudes[0], 1.0);
        assert!(metrics.max_asymmetry < 1e-10);
        assert!(metrics.cumulative_energy[0] > 1.0 - 1e-12);
    }

    #[test]
    fn injected_mode_amplitude_recovered() {
        let model = toy_model();
        let basis = BasisSet::build(&model, [16, 15, 15, 16]).unwrap();
        // Flux shaped as Y₀-term plus 2% of the (2,0) mode (index 6).
        let mut c = Array1::zeros(16);
        c[0] = 10.0;
        c[6] = 0.2;
        let flux_capsule = basis.y.dot(&c);
        let weights: Array1<f64> = model
            .elements_in(Region::Capsule)
            .iter()
            .map(|e| e.area)
            .collect();
        let fit = basis::fit_coefficients(&basis.y, flux_capsule.view(), weights.view()).unwrap();
        let gram = gram_diagonal(&model, &basis, 0);
        let metrics = asymmetry_metrics(fit.coefficients.view(), gram.view()).unwrap();
        assert_relative_eq!(metrics.amplitudes[6], 0.02, max_relative = 1e-6);
        // Scaling invariance.
        let scaled = &flux_capsule * 7.0;
        let fit2 = basis::fit_coefficients(&basis.y, scaled.view(), weights.view()).unwrap();
        let m2 = asymmetry_metrics(fit2.coefficients.view(), gram.view()).unwrap();
        assert_relative_eq!(m2.amplitudes[6], metrics.amplitudes[6], max_relative = 1e-9);
    }

    #[test]
    fn constant_term_projection_error_is_region_deviation() {
        let model = toy_model();
        let basis = BasisSet::build(&model, [9, 6, 6, 9]).unwrap();
        // Synthetic smooth flux.
        let flux: Array1<f64> = (0..model.n()).map(|i| 1.0 + 0.1 * (i as f64 * 0.01).sin()).collect();
        let grids: [Vec<usize>; 4] = [vec![1, 9], vec![1, 6], vec![1, 6], vec![1, 9]];
        let sweep = sparsity_sweep(&model, &basis, flux.view(), &grids).unwrap();
        // Error decreases with more terms.
        for curve in &sweep.curves {
            assert!(curve.points[0].1 >= curve.points.last().unwrap().1);
        }
    }
}
