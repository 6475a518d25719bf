//! Orthogonal polynomial bases and the block-diagonal sparse representation.
//!
//! The flux over the whole cavity is represented as `B = Ψ c` where `Ψ` is
//! block diagonal with one block per region: spherical harmonics on the
//! capsule, annular Zernike polynomials on each end face, Legendre–Fourier
//! polynomials on the wall. Blocks are stored separately and never
//! materialized into a dense `N × L_total` matrix; every product is
//! evaluated blockwise.

pub mod lf;
pub mod sh;
pub mod zernike;

use crate::error::{Error, Result};
use crate::mesh::{CavityModel, Region, SurfaceElement};
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use ndarray_linalg::{LeastSquaresSvd, SolveC};
use std::io::Write;
use std::ops::Range;

/// The three polynomial families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisFamily {
    SphericalHarmonic,
    AnnularZernike,
    LegendreFourier,
}

impl BasisFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            BasisFamily::SphericalHarmonic => "SH",
            BasisFamily::AnnularZernike => "AZ",
            BasisFamily::LegendreFourier => "LF",
        }
    }
}

/// Maps a linear term index `n` to the order pair of its polynomial:
/// `(m, k)` for spherical harmonics, `(l, k)` for annular Zernike and
/// Legendre–Fourier terms.
#[derive(Debug, Clone, PartialEq)]
pub struct TermIndexMap {
    pub family: BasisFamily,
    pub entries: Vec<(u32, i32)>,
}

impl TermIndexMap {
    /// Spherical harmonics ordered by degree `m`, then `k` from `−m` to `m`.
    /// The count through degree `m` is `(m+1)²`.
    pub fn spherical(l_terms: usize) -> Self {
        let mut entries = Vec::with_capacity(l_terms);
        'outer: for m in 0u32.. {
            for k in -(m as i32)..=m as i32 {
                if entries.len() == l_terms {
                    break 'outer;
                }
                entries.push((m, k));
            }
        }
        TermIndexMap {
            family: BasisFamily::SphericalHarmonic,
            entries,
        }
    }

    /// Annular Zernike terms ordered by degree `l`, then frequency `k` from
    /// `−l` to `l` in steps of two. The count through degree `n` is
    /// `(n+1)(n+2)/2`.
    pub fn annular(l_terms: usize) -> Self {
        let mut entries = Vec::with_capacity(l_terms);
        'outer: for l in 0u32.. {
            let mut k = -(l as i32);
            while k <= l as i32 {
                if entries.len() == l_terms {
                    break 'outer;
                }
                entries.push((l, k));
                k += 2;
            }
        }
        TermIndexMap {
            family: BasisFamily::AnnularZernike,
            entries,
        }
    }

    /// Legendre–Fourier terms ordered by degree `n = l + |k|`; within a
    /// degree the axial order `l` ascends and the sine branch precedes the
    /// cosine branch. The count through degree `n` is `(n+1)²`.
    pub fn legendre_fourier(l_terms: usize) -> Self {
        Self::legendre_fourier_capped(l_terms, u32::MAX)
    }

    /// Like [`TermIndexMap::legendre_fourier`] but skips terms whose
    /// azimuthal frequency exceeds `max_abs_k`.
    ///
    /// On a uniform azimuthal grid of `n_φ` midpoint cells, frequencies
    /// above `n_φ/2` alias exactly onto lower ones, producing duplicated
    /// basis columns; capping at the mesh Nyquist limit keeps the block full
    /// rank. The degree sweep still stops where the uncapped enumeration of
    /// `l_terms` terms would stop, so the result may hold fewer than
    /// `l_terms` entries.
    pub fn legendre_fourier_capped(l_terms: usize, max_abs_k: u32) -> Self {
        let mut entries = Vec::with_capacity(l_terms);
        let max_degree = (l_terms as f64).sqrt().ceil() as u32; // (d+1)² terms through degree d
        let mut uncapped = 0usize;
        'outer: for n in 0u32..=max_degree {
            for l in 0..=n {
                let k = (n - l) as i32;
                let pairs: &[(u32, i32)] = if k == 0 {
                    &[(n, 0)]
                } else {
                    &[(l, -k), (l, k)]
                };
                for &(pl, pk) in pairs {
                    if uncapped == l_terms {
                        break 'outer;
                    }
                    uncapped += 1;
                    if pk.unsigned_abs() <= max_abs_k {
                        entries.push((pl, pk));
                    }
                }
            }
        }
        TermIndexMap {
            family: BasisFamily::LegendreFourier,
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest degree appearing in the map.
    pub fn max_degree(&self) -> u32 {
        self.entries
            .iter()
            .map(|&(a, b)| match self.family {
                BasisFamily::LegendreFourier => a + b.unsigned_abs(),
                _ => a,
            })
            .max()
            .unwrap_or(0)
    }

    /// Writes the map as CSV with columns `n,family,p,q`.
    pub fn export_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,family,p,q")?;
        for (n, (p, q)) in self.entries.iter().enumerate() {
            writeln!(out, "{},{},{},{}", n, self.family.as_str(), p, q)?;
        }
        Ok(())
    }
}

fn fill_sh_row(map: &TermIndexMap, norms: &[f64], theta: f64, phi: f64, out: &mut [f64]) {
    let m_max = map.max_degree() as usize;
    let table = sh::assoc_legendre_table(m_max, theta.cos(), theta.sin());
    for (slot, (&(m, k), &norm)) in out.iter_mut().zip(map.entries.iter().zip(norms)) {
        let ka = k.unsigned_abs() as usize;
        let p = table[m as usize * (m as usize + 1) / 2 + ka];
        let angular = if k >= 0 {
            (ka as f64 * phi).cos()
        } else {
            (ka as f64 * phi).sin()
        };
        *slot = norm * p * angular;
    }
}

/// Evaluates one basis block: one row per element (at its intrinsic
/// coordinates), one column per term of `map`.
pub fn build_block(
    elements: &[SurfaceElement],
    map: &TermIndexMap,
    r_tilde: f64,
) -> Result<Array2<f64>> {
    let rows = elements.len();
    let cols = map.len();
    let mut out = Array2::zeros((rows, cols));
    match map.family {
        BasisFamily::SphericalHarmonic => {
            let norms: Vec<f64> = map
                .entries
                .iter()
                .map(|&(m, k)| sh::sh_norm(m, k.unsigned_abs()))
                .collect();
            for (mut row, e) in out.outer_iter_mut().zip(elements) {
                let (theta, phi) = e.coords;
                fill_sh_row(map, &norms, theta, phi, row.as_slice_mut().unwrap());
            }
        }
        BasisFamily::AnnularZernike => {
            let table = zernike::AnnularRadialTable::new(r_tilde, map.max_degree() as usize)?;
            for (mut row, e) in out.outer_iter_mut().zip(elements) {
                let (r, phi) = e.coords;
                for (slot, &(l, k)) in row.iter_mut().zip(&map.entries) {
                    *slot = table.eval(l, k, r, phi)?;
                }
            }
        }
        BasisFamily::LegendreFourier => {
            let l_max = map.max_degree() as usize;
            for (mut row, e) in out.outer_iter_mut().zip(elements) {
                let (z, phi) = e.coords;
                if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&z) {
                    return Err(Error::Domain(format!("wall coordinate z = {z} outside [-1, 1]")));
                }
                let p = lf::legendre_table(l_max, z);
                for (slot, &(l, k)) in row.iter_mut().zip(&map.entries) {
                    *slot = p[l as usize] * lf::fourier_factor(k, phi);
                }
            }
        }
    }
    Ok(out)
}

/// Builds the basis matrix of one region with the region's default term
/// ordering (no frequency cap).
pub fn build_basis_matrix(model: &CavityModel, region: Region, l_terms: usize) -> Result<Array2<f64>> {
    let map = default_map(region, l_terms);
    build_block(model.elements_in(region), &map, model.geometry.r_tilde())
}

fn default_map(region: Region, l_terms: usize) -> TermIndexMap {
    match region {
        Region::Capsule => TermIndexMap::spherical(l_terms),
        Region::EndFaceTop | Region::EndFaceBottom => TermIndexMap::annular(l_terms),
        Region::Wall => TermIndexMap::legendre_fourier(l_terms),
    }
}

/// The block-diagonal sparse basis `Ψ` with per-region index maps.
#[derive(Debug, Clone)]
pub struct BasisSet {
    pub y: Array2<f64>,
    pub u_top: Array2<f64>,
    pub u_bot: Array2<f64>,
    pub w: Array2<f64>,
    pub maps: [TermIndexMap; 4],
    pub r_tilde: f64,
    /// Element (row) range of each block in model ordering.
    pub row_ranges: [Range<usize>; 4],
}

impl BasisSet {
    /// Builds all four blocks for a model.
    ///
    /// `l_terms` are the requested term counts per block (capsule, top face,
    /// bottom face, wall); the wall map is capped at the azimuthal Nyquist
    /// frequency of the wall mesh, so its effective count may be smaller.
    pub fn build(model: &CavityModel, l_terms: [usize; 4]) -> Result<BasisSet> {
        let (_, n_phi_w) = model.geometry.wall_counts()?;
        let maps = [
            TermIndexMap::spherical(l_terms[0]),
            TermIndexMap::annular(l_terms[1]),
            TermIndexMap::annular(l_terms[2]),
            TermIndexMap::legendre_fourier_capped(l_terms[3], (n_phi_w / 2) as u32),
        ];
        let r_tilde = model.geometry.r_tilde();
        let blocks: Vec<Array2<f64>> = Region::ALL
            .iter()
            .zip(&maps)
            .map(|(&region, map)| build_block(model.elements_in(region), map, r_tilde))
            .collect::<Result<_>>()?;
        let mut it = blocks.into_iter();
        Self::assemble_block_basis(
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
            maps,
            model.region_ranges.clone(),
            r_tilde,
        )
    }

    /// Assembles a basis set from prebuilt blocks, checking that block row
    /// counts match the model's region ranges.
    pub fn assemble_block_basis(
        y: Array2<f64>,
        u_top: Array2<f64>,
        u_bot: Array2<f64>,
        w: Array2<f64>,
        maps: [TermIndexMap; 4],
        row_ranges: [Range<usize>; 4],
        r_tilde: f64,
    ) -> Result<BasisSet> {
        for (i, (block, range)) in [&y, &u_top, &u_bot, &w].iter().zip(&row_ranges).enumerate() {
            if block.nrows() != range.len() {
                return Err(Error::Dimension(format!(
                    "block {i} has {} rows but its region has {} elements",
                    block.nrows(),
                    range.len()
                )));
            }
            if block.ncols() != maps[i].len() {
                return Err(Error::Dimension(format!(
                    "block {i} has {} columns but its index map has {} terms",
                    block.ncols(),
                    maps[i].len()
                )));
            }
        }
        Ok(BasisSet {
            y,
            u_top,
            u_bot,
            w,
            maps,
            r_tilde,
            row_ranges,
        })
    }

    pub fn block(&self, idx: usize) -> &Array2<f64> {
        match idx {
            0 => &self.y,
            1 => &self.u_top,
            2 => &self.u_bot,
            3 => &self.w,
            _ => panic!("block index {idx} out of range"),
        }
    }

    /// Total number of rows (elements).
    pub fn n_rows(&self) -> usize {
        self.row_ranges[3].end
    }

    /// Total number of columns `L = L_S + 2 L_u + L_w`.
    pub fn l_total(&self) -> usize {
        self.maps.iter().map(|m| m.len()).sum()
    }

    /// Column range of block `idx` within the full coefficient vector.
    pub fn col_range(&self, idx: usize) -> Range<usize> {
        let mut start = 0;
        for i in 0..idx {
            start += self.maps[i].len();
        }
        start..start + self.maps[idx].len()
    }

    /// Blockwise product `Ψ · c` over all rows.
    pub fn mul(&self, c: ArrayView1<f64>) -> Result<Array1<f64>> {
        if c.len() != self.l_total() {
            return Err(Error::Dimension(format!(
                "coefficient vector has length {} but basis has {} terms",
                c.len(),
                self.l_total()
            )));
        }
        let mut out = Array1::zeros(self.n_rows());
        for idx in 0..4 {
            let cb = c.slice(s![self.col_range(idx)]);
            let rows = self.row_ranges[idx].clone();
            out.slice_mut(s![rows]).assign(&self.block(idx).dot(&cb));
        }
        Ok(out)
    }

    /// Dense `|rows| × L` matrix of selected basis rows (zero off-block).
    pub fn rows_dense(&self, rows: &[usize]) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((rows.len(), self.l_total()));
        for (mut out_row, &r) in out.outer_iter_mut().zip(rows) {
            let idx = self
                .row_ranges
                .iter()
                .position(|range| range.contains(&r))
                .ok_or_else(|| Error::Dimension(format!("row {r} outside all blocks")))?;
            let local = r - self.row_ranges[idx].start;
            out_row
                .slice_mut(s![self.col_range(idx)])
                .assign(&self.block(idx).row(local));
        }
        Ok(out)
    }

    /// Blockwise product `M · Ψ` for a matrix with `N` columns.
    pub fn premul(&self, m: ArrayView2<f64>) -> Result<Array2<f64>> {
        if m.ncols() != self.n_rows() {
            return Err(Error::Dimension(format!(
                "matrix has {} columns but basis has {} rows",
                m.ncols(),
                self.n_rows()
            )));
        }
        let mut out = Array2::zeros((m.nrows(), self.l_total()));
        for idx in 0..4 {
            let rows = self.row_ranges[idx].clone();
            let product = m.slice(s![.., rows]).dot(self.block(idx));
            out.slice_mut(s![.., self.col_range(idx)]).assign(&product);
        }
        Ok(out)
    }
}

/// Result of a weighted least-squares projection onto a basis block.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub coefficients: Array1<f64>,
    /// Effective rank of the weighted block.
    pub rank: usize,
    /// Columns with (near-)zero weighted norm; their coefficients are zero.
    pub degenerate_columns: Vec<usize>,
}

/// Weighted least-squares fit of `values` onto the columns of `block`,
/// minimizing `Σ_i w_i (values_i − (block c)_i)²`.
///
/// Rank-deficient blocks (duplicated or vanishing columns) fall back to a
/// minimum-norm SVD solve; degenerate columns are reported.
pub fn fit_coefficients(
    block: &Array2<f64>,
    values: ArrayView1<f64>,
    weights: ArrayView1<f64>,
) -> Result<FitResult> {
    let (rows, cols) = block.dim();
    if values.len() != rows || weights.len() != rows {
        return Err(Error::Dimension(format!(
            "fit: block is {rows}x{cols}, values {} and weights {}",
            values.len(),
            weights.len()
        )));
    }
    if cols == 0 {
        return Ok(FitResult {
            coefficients: Array1::zeros(0),
            rank: 0,
            degenerate_columns: vec![],
        });
    }
    let sqrt_w = weights.mapv(f64::sqrt);
    let wb = block * &sqrt_w.view().insert_axis(ndarray::Axis(1));
    let wv = &values.to_owned() * &sqrt_w;

    let col_norms: Vec<f64> = (0..cols).map(|j| wb.column(j).dot(&wb.column(j)).sqrt()).collect();
    let max_norm = col_norms.iter().cloned().fold(0.0, f64::max);
    let degenerate: Vec<usize> = col_norms
        .iter()
        .enumerate()
        .filter(|(_, &n)| n <= 1e-12 * max_norm)
        .map(|(j, _)| j)
        .collect();

    // Normal equations on the well-scaled columns; SVD fallback when the
    // Gram matrix is not positive definite (e.g. duplicated columns).
    let keep: Vec<usize> = (0..cols).filter(|j| !degenerate.contains(j)).collect();
    let wbk = if degenerate.is_empty() {
        wb.clone()
    } else {
        let mut sub = Array2::zeros((rows, keep.len()));
        for (jj, &j) in keep.iter().enumerate() {
            sub.column_mut(jj).assign(&wb.column(j));
        }
        sub
    };
    let gram = wbk.t().dot(&wbk);
    let rhs = wbk.t().dot(&wv);
    match gram.solvec(&rhs) {
        Ok(ck) => {
            let mut coefficients = Array1::zeros(cols);
            for (jj, &j) in keep.iter().enumerate() {
                coefficients[j] = ck[jj];
            }
            Ok(FitResult {
                coefficients,
                rank: keep.len(),
                degenerate_columns: degenerate,
            })
        }
        Err(_) => {
            let sol = wb
                .least_squares(&wv)
                .map_err(|e| Error::Linalg(format!("least-squares fallback failed: {e}")))?;
            Ok(FitResult {
                coefficients: sol.solution,
                rank: sol.rank as usize,
                degenerate_columns: degenerate,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sh_map_counts_and_order() {
        let map = TermIndexMap::spherical(9);
        assert_eq!(map.entries.len(), 9);
        assert_eq!(map.entries[0], (0, 0));
        assert_eq!(map.entries[1], (1, -1));
        assert_eq!(map.entries[2], (1, 0));
        assert_eq!(map.entries[3], (1, 1));
        assert_eq!(map.entries[4], (2, -2));
        // (m+1)² terms through degree m.
        assert_eq!(TermIndexMap::spherical(400).max_degree(), 19);
    }

    #[test]
    fn az_map_constraints() {
        let map = TermIndexMap::annular(325);
        assert_eq!(map.max_degree(), 24);
        for &(l, k) in &map.entries {
            assert!(l >= k.unsigned_abs());
            assert_eq!((l - k.unsigned_abs()) % 2, 0);
        }
        // Count through degree n is (n+1)(n+2)/2.
        assert_eq!(TermIndexMap::annular(15).max_degree(), 4);
    }

    #[test]
    fn lf_map_matches_published_sequence() {
        let map = TermIndexMap::legendre_fourier(9);
        let expect = [
            (0, 0),
            (0, -1),
            (0, 1),
            (1, 0),
            (0, -2),
            (0, 2),
            (1, -1),
            (1, 1),
            (2, 0),
        ];
        assert_eq!(map.entries, expect);
        assert_eq!(TermIndexMap::legendre_fourier(1225).max_degree(), 34);
    }

    #[test]
    fn lf_nyquist_cap_drops_aliased_terms() {
        let full = TermIndexMap::legendre_fourier(1225);
        let capped = TermIndexMap::legendre_fourier_capped(1225, 8);
        assert!(capped.len() < full.len());
        assert!(capped.entries.iter().all(|&(_, k)| k.unsigned_abs() <= 8));
        // Degree sweep stops at the uncapped map's degree.
        assert_eq!(capped.max_degree(), 34);
        // Σ_{n≤8} (2n+1) + 26·17 terms survive.
        assert_eq!(capped.len(), 81 + 26 * 17);
    }

    #[test]
    fn fit_reproduces_basis_column() {
        use crate::mesh::build_capsule_mesh;
        let elements = build_capsule_mesh(1.0, 15f64.to_radians(), 15f64.to_radians()).unwrap();
        let map = TermIndexMap::spherical(16);
        let block = build_block(&elements, &map, 0.0).unwrap();
        let weights: Array1<f64> = elements.iter().map(|e| e.area).collect();
        for n in [0usize, 3, 7, 15] {
            let values = block.column(n).to_owned();
            let fit = fit_coefficients(&block, values.view(), weights.view()).unwrap();
            for j in 0..16 {
                let expect = if j == n { 1.0 } else { 0.0 };
                assert_relative_eq!(fit.coefficients[j], expect, epsilon = 1e-8);
            }
        }
        // Zero flux fits to zero coefficients.
        let zero = Array1::zeros(elements.len());
        let fit = fit_coefficients(&block, zero.view(), weights.view()).unwrap();
        assert!(fit.coefficients.iter().all(|&c| c.abs() < 1e-14));
    }

    #[test]
    fn fit_handles_duplicate_columns() {
        // Two identical columns: minimum-norm fit splits the weight.
        let mut block = Array2::zeros((8, 2));
        for i in 0..8 {
            block[[i, 0]] = (i as f64 + 1.0).sin();
            block[[i, 1]] = block[[i, 0]];
        }
        let values = block.column(0).to_owned() * 2.0;
        let weights = Array1::ones(8);
        let fit = fit_coefficients(&block, values.view(), weights.view()).unwrap();
        assert!(fit.rank < 2);
        assert_relative_eq!(fit.coefficients[0] + fit.coefficients[1], 2.0, epsilon = 1e-8);
    }
}
