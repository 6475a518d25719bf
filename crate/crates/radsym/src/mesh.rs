//! Discrete surface meshes for the cylinder-to-sphere cavity model.
//!
//! The radiating interior consists of three region kinds:
//! a spherical capsule at the origin, two annular end faces at `z = ±h`
//! (annular because of the laser entrance holes), and the cylindrical wall.
//! Every region is meshed on a regular grid in its intrinsic coordinates,
//! with element centroids at cell centers mapped onto the surface and areas
//! given by the exact surface-patch formulas (not flat-quad approximations),
//! so that per-region area sums telescope to the analytic surface areas.
//!
//! Element ordering in the assembled model is capsule, end-face-top,
//! end-face-bottom, wall; the per-region index ranges partition `[0, N)`.

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use std::f64::consts::PI;
use std::io::Write;
use std::ops::Range;

/// Radiating region of the cavity interior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Capsule,
    EndFaceTop,
    EndFaceBottom,
    Wall,
}

impl Region {
    pub const ALL: [Region; 4] = [
        Region::Capsule,
        Region::EndFaceTop,
        Region::EndFaceBottom,
        Region::Wall,
    ];

    /// Index of the region in model ordering (capsule, top, bottom, wall).
    pub fn index(self) -> usize {
        match self {
            Region::Capsule => 0,
            Region::EndFaceTop => 1,
            Region::EndFaceBottom => 2,
            Region::Wall => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Capsule => "capsule",
            Region::EndFaceTop => "end_face_top",
            Region::EndFaceBottom => "end_face_bottom",
            Region::Wall => "wall",
        }
    }
}

impl std::str::FromStr for Region {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "capsule" => Ok(Region::Capsule),
            "end_face_top" => Ok(Region::EndFaceTop),
            "end_face_bottom" => Ok(Region::EndFaceBottom),
            "wall" => Ok(Region::Wall),
            other => Err(Error::Parse(format!("unknown region '{other}'"))),
        }
    }
}

/// One discrete mesh patch.
///
/// `coords` stores the region-intrinsic surface coordinates:
/// `(θ, φ)` in radians for capsule elements, `(r, φ)` with the physical
/// radius normalized so the annulus maps to `[r̃, 1]` for end-face elements,
/// and `(z/h, φ)` with the axial coordinate normalized to `[-1, 1]` for wall
/// elements.
///
/// `extent` holds the physical side lengths of the patch along its two
/// parameter directions; near-pair view-factor quadrature uses it to place
/// sub-centroid grids on the patch.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceElement {
    /// Patch centroid, mapped onto the surface.
    pub centroid: Vec3,
    /// Unit normal pointing into the cavity interior.
    pub normal: Vec3,
    /// Exact patch area.
    pub area: f64,
    pub region: Region,
    /// Region-intrinsic coordinates (see type docs).
    pub coords: (f64, f64),
    /// Physical patch side lengths along the two parameter directions.
    pub extent: (f64, f64),
}

impl SurfaceElement {
    /// Copy of this element with the normal reversed.
    ///
    /// Used to turn an outward-radiating sphere mesh into the interior of a
    /// closed spherical enclosure for self-consistency tests.
    pub fn with_flipped_normal(mut self) -> Self {
        self.normal = geom::scale(self.normal, -1.0);
        self
    }

    /// Midpoint grid of `n_u × n_v` sub-centroids (with surface normals)
    /// covering the patch, reconstructed from the element's region, centroid
    /// and extents. Elements with zero extents (point-like synthetic
    /// patches) return the centroid itself.
    pub fn subpoints(&self, n_u: usize, n_v: usize, out: &mut Vec<(Vec3, Vec3)>) {
        out.clear();
        if self.extent.0 == 0.0 || self.extent.1 == 0.0 {
            out.push((self.centroid, self.normal));
            return;
        }
        let (n_u, n_v) = (n_u.max(1), n_v.max(1));
        match self.region {
            Region::Capsule => {
                let radius = geom::norm(self.centroid);
                let (theta_c, phi_c) = self.coords;
                let dtheta = self.extent.0 / radius;
                let dphi = self.extent.1 / (radius * theta_c.sin()).max(f64::MIN_POSITIVE);
                // Outward unit normal, flipped if the element's is inward.
                let sign = geom::dot(self.normal, self.centroid).signum();
                for a in 0..n_u {
                    let theta = theta_c + dtheta * ((a as f64 + 0.5) / n_u as f64 - 0.5);
                    for b in 0..n_v {
                        let phi = phi_c + dphi * ((b as f64 + 0.5) / n_v as f64 - 0.5);
                        let dir = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
                        out.push((geom::scale(dir, radius), geom::scale(dir, sign)));
                    }
                }
            }
            Region::EndFaceTop | Region::EndFaceBottom => {
                let z = self.centroid[2];
                let rho_c = (self.centroid[0] * self.centroid[0]
                    + self.centroid[1] * self.centroid[1])
                    .sqrt();
                let phi_c = self.coords.1;
                let dr = self.extent.0;
                let dphi = self.extent.1 / rho_c.max(f64::MIN_POSITIVE);
                for a in 0..n_u {
                    let rho = rho_c + dr * ((a as f64 + 0.5) / n_u as f64 - 0.5);
                    for b in 0..n_v {
                        let phi = phi_c + dphi * ((b as f64 + 0.5) / n_v as f64 - 0.5);
                        out.push(([rho * phi.cos(), rho * phi.sin(), z], self.normal));
                    }
                }
            }
            Region::Wall => {
                let radius = (self.centroid[0] * self.centroid[0]
                    + self.centroid[1] * self.centroid[1])
                    .sqrt();
                let z_c = self.centroid[2];
                let phi_c = self.coords.1;
                let dz = self.extent.0;
                let dphi = self.extent.1 / radius;
                // Inward unit normal, flipped if the element's is outward.
                let sign = -geom::dot(
                    self.normal,
                    [self.centroid[0], self.centroid[1], 0.0],
                )
                .signum();
                for a in 0..n_u {
                    let z = z_c + dz * ((a as f64 + 0.5) / n_u as f64 - 0.5);
                    for b in 0..n_v {
                        let phi = phi_c + dphi * ((b as f64 + 0.5) / n_v as f64 - 0.5);
                        out.push((
                            [radius * phi.cos(), radius * phi.sin(), z],
                            [-sign * phi.cos(), -sign * phi.sin(), 0.0],
                        ));
                    }
                }
            }
        }
    }
}

/// Grid resolutions for the three regions.
///
/// Angles are radians, lengths in the same unit as the geometry (µm by
/// convention). Each step must evenly divide its domain; `wall_counts`, when
/// set, overrides the wall derivation with explicit `(n_z, n_phi)` cell
/// counts (the axial and azimuthal steps are then derived from the counts).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshResolution {
    pub dtheta_s: f64,
    pub dphi_s: f64,
    pub dr: f64,
    pub dphi_u: f64,
    pub dz: f64,
    pub dphi_w: f64,
    pub wall_counts: Option<(usize, usize)>,
}

/// Physical dimensions and mesh resolutions of the cavity model.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityGeometry {
    pub cavity_radius: f64,
    /// Half the cavity length (wall spans `z ∈ [-h, h]`).
    pub cavity_half_height: f64,
    pub capsule_radius: f64,
    /// Laser-entrance-hole radius: inner radius of the annular end faces.
    pub leh_radius: f64,
    pub resolutions: MeshResolution,
}

impl CavityGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.capsule_radius > 0.0 && self.capsule_radius < self.cavity_radius) {
            return Err(Error::Config(format!(
                "capsule radius {} must lie in (0, cavity radius {})",
                self.capsule_radius, self.cavity_radius
            )));
        }
        if !(self.leh_radius > 0.0 && self.leh_radius < self.cavity_radius) {
            return Err(Error::Config(format!(
                "LEH radius {} must lie in (0, cavity radius {})",
                self.leh_radius, self.cavity_radius
            )));
        }
        if self.cavity_half_height <= 0.0 {
            return Err(Error::Config("cavity half-height must be positive".into()));
        }
        let r = &self.resolutions;
        for (name, v) in [
            ("dtheta_s", r.dtheta_s),
            ("dphi_s", r.dphi_s),
            ("dr", r.dr),
            ("dphi_u", r.dphi_u),
        ] {
            if v <= 0.0 {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if r.wall_counts.is_none() && (r.dz <= 0.0 || r.dphi_w <= 0.0) {
            return Err(Error::Config("wall resolutions must be positive".into()));
        }
        Ok(())
    }

    /// Inner-radius ratio `r̃ = leh_radius / cavity_radius` of the end faces.
    pub fn r_tilde(&self) -> f64 {
        self.leh_radius / self.cavity_radius
    }

    /// Wall cell counts `(n_z, n_phi)`, honoring an explicit override.
    pub fn wall_counts(&self) -> Result<(usize, usize)> {
        match self.resolutions.wall_counts {
            Some(c) => Ok(c),
            None => {
                let nz = divide_evenly(2.0 * self.cavity_half_height, self.resolutions.dz, "dz")?;
                let np = divide_evenly(2.0 * PI, self.resolutions.dphi_w, "dphi_w")?;
                Ok((nz, np))
            }
        }
    }
}

/// Intensity profile of a laser spot on the wall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpotProfile {
    Uniform,
    Gaussian,
}

/// Construction parameters of the primary source.
///
/// The beams enter through the two entrance holes and land on the wall as
/// two rings of spots, one per hole side, at axial positions
/// `±ring_z_fraction·h`. Each spot is an ellipse in `(z, R·φ)` of the given
/// half-extents; per-beam power is deposited with the chosen profile and
/// normalized so each beam contributes exactly `beam_power` in total.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SourceConfig {
    pub beams_per_ring: usize,
    /// Spot-ring axial center as a fraction of the half-height, in (0, 1).
    pub ring_z_fraction: f64,
    /// Azimuth of the first spot of the top ring, radians.
    pub top_ring_phase: f64,
    /// Azimuth of the first spot of the bottom ring, radians.
    pub bottom_ring_phase: f64,
    /// Spot half-extent along z as a fraction of the half-height.
    pub spot_half_z_fraction: f64,
    /// Spot half-extent in azimuth, radians.
    pub spot_half_phi: f64,
    /// Power per beam (flux · area units).
    pub beam_power: f64,
    pub profile: SpotProfile,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig {
            beams_per_ring: 4,
            ring_z_fraction: 0.55,
            top_ring_phase: 0.0,
            bottom_ring_phase: PI / 4.0,
            spot_half_z_fraction: 0.22,
            spot_half_phi: 35.0_f64.to_radians(),
            beam_power: 1.0,
            profile: SpotProfile::Gaussian,
        }
    }
}

/// Realized primary source: per-element converted flux plus its parameters.
#[derive(Debug, Clone)]
pub struct SourceSpec {
    /// Primary source flux per element (power/area), zero off the wall.
    pub s0: Vec<f64>,
    pub config: SourceConfig,
}

/// Assembled cavity model: ordered element list with per-region ranges.
#[derive(Debug, Clone)]
pub struct CavityModel {
    pub elements: Vec<SurfaceElement>,
    pub region_ranges: [Range<usize>; 4],
    pub geometry: CavityGeometry,
    pub source: SourceSpec,
}

impl CavityModel {
    /// Total element count.
    pub fn n(&self) -> usize {
        self.elements.len()
    }

    pub fn region_range(&self, region: Region) -> Range<usize> {
        self.region_ranges[region.index()].clone()
    }

    pub fn region_len(&self, region: Region) -> usize {
        self.region_range(region).len()
    }

    pub fn elements_in(&self, region: Region) -> &[SurfaceElement] {
        &self.elements[self.region_range(region)]
    }

    /// Region containing global element index `i`.
    pub fn region_of(&self, i: usize) -> Region {
        for r in Region::ALL {
            if self.region_range(r).contains(&i) {
                return r;
            }
        }
        unreachable!("index {i} outside all region ranges")
    }

    /// The capsule occluder as (center, radius).
    pub fn capsule_sphere(&self) -> (Vec3, f64) {
        ([0.0, 0.0, 0.0], self.geometry.capsule_radius)
    }

    /// Element areas as a vector.
    pub fn areas(&self) -> Vec<f64> {
        self.elements.iter().map(|e| e.area).collect()
    }
}

/// Checks that `step` divides `domain` to within a relative slack of 1e-9
/// and returns the cell count.
fn divide_evenly(domain: f64, step: f64, name: &str) -> Result<usize> {
    if step <= 0.0 {
        return Err(Error::Config(format!("{name} must be positive, got {step}")));
    }
    let ratio = domain / step;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::Config(format!(
            "{name} = {step} does not evenly divide its domain {domain} (ratio {ratio})"
        )));
    }
    Ok(n as usize)
}

/// Spherical capsule mesh on a regular `(θ, φ)` grid.
///
/// Element `(i, j)` is centered at `θ = (i+½)Δθ, φ = (j+½)Δφ`; normals point
/// radially outward from the sphere center (into the cavity); areas are the
/// exact spherical patch areas `R²·Δφ·(cos θ_lo − cos θ_hi)`.
pub fn build_capsule_mesh(radius: f64, dtheta: f64, dphi: f64) -> Result<Vec<SurfaceElement>> {
    if radius <= 0.0 {
        return Err(Error::Config(format!("capsule radius must be positive, got {radius}")));
    }
    let n_theta = divide_evenly(PI, dtheta, "dtheta")?;
    let n_phi = divide_evenly(2.0 * PI, dphi, "dphi")?;
    let mut elements = Vec::with_capacity(n_theta * n_phi);
    let on_sphere = |theta: f64, phi: f64| -> (Vec3, Vec3) {
        let n = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
        (geom::scale(n, radius), n)
    };
    for i in 0..n_theta {
        let theta_lo = i as f64 * dtheta;
        let theta_hi = theta_lo + dtheta;
        let theta_c = theta_lo + 0.5 * dtheta;
        let area = radius * radius * dphi * (theta_lo.cos() - theta_hi.cos());
        for j in 0..n_phi {
            let phi_c = (j as f64 + 0.5) * dphi;
            let (centroid, normal) = on_sphere(theta_c, phi_c);
            let mut subpatches = [([0.0; 3], [0.0; 3]); 4];
            let mut s = 0;
            for dt in [-0.25, 0.25] {
                for dp in [-0.25, 0.25] {
                    subpatches[s] = on_sphere(theta_c + dt * dtheta, phi_c + dp * dphi);
                    s += 1;
                }
            }
            elements.push(SurfaceElement {
                centroid,
                normal,
                area,
                region: Region::Capsule,
                coords: (theta_c, phi_c),
                subpatches,
            });
        }
    }
    Ok(elements)
}

/// Which end face of the cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceSide {
    Top,
    Bottom,
}

/// Annular end-face mesh in the plane `z = axial_z`.
///
/// Normals point axially into the cavity (`-z` for the top face, `+z` for
/// the bottom). The stored radial coordinate is normalized by `outer_r`, so
/// the physical annulus `[hole_r, outer_r]` maps to `[r̃, 1]` with
/// `r̃ = hole_r / outer_r`.
pub fn build_end_face_mesh(
    outer_r: f64,
    hole_r: f64,
    dr: f64,
    dphi_u: f64,
    side: FaceSide,
    axial_z: f64,
) -> Result<Vec<SurfaceElement>> {
    if hole_r >= outer_r {
        return Err(Error::Config(format!(
            "hole radius {hole_r} must be smaller than outer radius {outer_r}"
        )));
    }
    if hole_r < 0.0 {
        return Err(Error::Config(format!("hole radius must be nonnegative, got {hole_r}")));
    }
    let n_r = divide_evenly(outer_r - hole_r, dr, "dr")?;
    let n_phi = divide_evenly(2.0 * PI, dphi_u, "dphi_u")?;
    let (region, nz) = match side {
        FaceSide::Top => (Region::EndFaceTop, -1.0),
        FaceSide::Bottom => (Region::EndFaceBottom, 1.0),
    };
    let normal = [0.0, 0.0, nz];
    let mut elements = Vec::with_capacity(n_r * n_phi);
    for k in 0..n_r {
        let rho_c = hole_r + (k as f64 + 0.5) * dr;
        // Exact annular patch area: ½·Δφ·(ρ_hi² − ρ_lo²) = ρ_c·Δr·Δφ.
        let area = rho_c * dr * dphi_u;
        for j in 0..n_phi {
            let phi_c = (j as f64 + 0.5) * dphi_u;
            let centroid = [rho_c * phi_c.cos(), rho_c * phi_c.sin(), axial_z];
            let mut subpatches = [([0.0; 3], [0.0; 3]); 4];
            let mut s = 0;
            for drs in [-0.25, 0.25] {
                for dps in [-0.25, 0.25] {
                    let rho = rho_c + drs * dr;
                    let phi = phi_c + dps * dphi_u;
                    subpatches[s] = ([rho * phi.cos(), rho * phi.sin(), axial_z], normal);
                    s += 1;
                }
            }
            elements.push(SurfaceElement {
                centroid,
                normal,
                area,
                region,
                coords: (rho_c / outer_r, phi_c),
                subpatches,
            });
        }
    }
    Ok(elements)
}

/// Cylindrical wall mesh from explicit cell counts.
///
/// Normals point radially inward; the axial coordinate is stored normalized
/// to `[-1, 1]`. Areas are exact: `R·Δz·Δφ`.
pub fn build_wall_mesh_counts(
    radius: f64,
    half_height: f64,
    n_z: usize,
    n_phi: usize,
) -> Result<Vec<SurfaceElement>> {
    if radius <= 0.0 || half_height <= 0.0 {
        return Err(Error::Config("wall radius and half-height must be positive".into()));
    }
    if n_z == 0 || n_phi == 0 {
        return Err(Error::Config("wall cell counts must be nonzero".into()));
    }
    let dz = 2.0 * half_height / n_z as f64;
    let dphi = 2.0 * PI / n_phi as f64;
    let area = radius * dz * dphi;
    let mut elements = Vec::with_capacity(n_z * n_phi);
    let at = |z: f64, phi: f64| -> (Vec3, Vec3) {
        (
            [radius * phi.cos(), radius * phi.sin(), z],
            [-phi.cos(), -phi.sin(), 0.0],
        )
    };
    for k in 0..n_z {
        let z_c = -half_height + (k as f64 + 0.5) * dz;
        for j in 0..n_phi {
            let phi_c = (j as f64 + 0.5) * dphi;
            let (centroid, normal) = at(z_c, phi_c);
            let mut subpatches = [([0.0; 3], [0.0; 3]); 4];
            let mut s = 0;
            for dzs in [-0.25, 0.25] {
                for dps in [-0.25, 0.25] {
                    subpatches[s] = at(z_c + dzs * dz, phi_c + dps * dphi);
                    s += 1;
                }
            }
            elements.push(SurfaceElement {
                centroid,
                normal,
                area,
                region: Region::Wall,
                coords: (z_c / half_height, phi_c),
                subpatches,
            });
        }
    }
    Ok(elements)
}

/// Cylindrical wall mesh from step sizes (each must divide its domain).
pub fn build_wall_mesh(radius: f64, half_height: f64, dz: f64, dphi_w: f64) -> Result<Vec<SurfaceElement>> {
    let n_z = divide_evenly(2.0 * half_height, dz, "dz")?;
    let n_phi = divide_evenly(2.0 * PI, dphi_w, "dphi_w")?;
    build_wall_mesh_counts(radius, half_height, n_z, n_phi)
}

/// Builds the three region meshes and assembles them into one indexed model,
/// realizing the primary source on the wall.
pub fn assemble_cavity(geometry: CavityGeometry, source: SourceConfig) -> Result<CavityModel> {
    geometry.validate()?;
    let res = geometry.resolutions;
    let capsule = build_capsule_mesh(geometry.capsule_radius, res.dtheta_s, res.dphi_s)?;
    let top = build_end_face_mesh(
        geometry.cavity_radius,
        geometry.leh_radius,
        res.dr,
        res.dphi_u,
        FaceSide::Top,
        geometry.cavity_half_height,
    )?;
    let bottom = build_end_face_mesh(
        geometry.cavity_radius,
        geometry.leh_radius,
        res.dr,
        res.dphi_u,
        FaceSide::Bottom,
        -geometry.cavity_half_height,
    )?;
    let (n_z, n_phi_w) = geometry.wall_counts()?;
    let wall = build_wall_mesh_counts(
        geometry.cavity_radius,
        geometry.cavity_half_height,
        n_z,
        n_phi_w,
    )?;

    let (n_s, n_u, n_w) = (capsule.len(), top.len(), wall.len());
    let region_ranges = [
        0..n_s,
        n_s..n_s + n_u,
        n_s + n_u..n_s + 2 * n_u,
        n_s + 2 * n_u..n_s + 2 * n_u + n_w,
    ];
    let mut elements = capsule;
    elements.extend(top);
    elements.extend(bottom);
    elements.extend(wall);

    let s0 = realize_source(&elements, region_ranges[3].clone(), &source)?;
    Ok(CavityModel {
        elements,
        region_ranges,
        geometry,
        source: SourceSpec { s0, config: source },
    })
}

/// Wrapped angular distance in `[0, π]`.
fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Deposits the beam spots on the wall elements and returns the per-element
/// primary flux `S⁰` (power/area), normalized so each beam contributes
/// exactly `beam_power` of total power.
fn realize_source(
    elements: &[SurfaceElement],
    wall_range: Range<usize>,
    config: &SourceConfig,
) -> Result<Vec<f64>> {
    if config.beams_per_ring == 0 {
        return Err(Error::Config("source must have at least one beam per ring".into()));
    }
    if !(config.ring_z_fraction > 0.0 && config.ring_z_fraction < 1.0) {
        return Err(Error::Config(format!(
            "ring_z_fraction must lie in (0,1), got {}",
            config.ring_z_fraction
        )));
    }
    if config.spot_half_z_fraction <= 0.0 || config.spot_half_phi <= 0.0 {
        return Err(Error::Config("spot half-extents must be positive".into()));
    }
    if config.beam_power <= 0.0 {
        return Err(Error::Config("beam power must be positive".into()));
    }

    let mut s0 = vec![0.0; elements.len()];
    let mut spots: Vec<(f64, f64)> = Vec::new(); // (z_center normalized, phi_center)
    let step = 2.0 * PI / config.beams_per_ring as f64;
    for b in 0..config.beams_per_ring {
        spots.push((config.ring_z_fraction, config.top_ring_phase + b as f64 * step));
        spots.push((-config.ring_z_fraction, config.bottom_ring_phase + b as f64 * step));
    }

    for (z0, phi0) in spots {
        let mut weights = vec![0.0; wall_range.len()];
        let mut total = 0.0;
        for (w, idx) in weights.iter_mut().zip(wall_range.clone()) {
            let e = &elements[idx];
            let (zn, phi) = e.coords;
            let uz = (zn - z0) / config.spot_half_z_fraction;
            let up = angle_distance(phi, phi0) / config.spot_half_phi;
            let g = match config.profile {
                SpotProfile::Uniform => {
                    if uz * uz + up * up <= 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                SpotProfile::Gaussian => (-0.5 * (uz * uz + up * up)).exp(),
            };
            *w = g;
            total += g * e.area;
        }
        if total <= 0.0 {
            return Err(Error::Config(format!(
                "beam spot at (z/h={z0}, phi={phi0}) deposits no power on the wall mesh"
            )));
        }
        let scale = config.beam_power / total;
        for (w, idx) in weights.iter().zip(wall_range.clone()) {
            s0[idx] += w * scale;
        }
    }
    Ok(s0)
}

/// Writes the mesh as CSV with columns
/// `index,region,cx,cy,cz,nx,ny,nz,area,u,v`.
pub fn dump_mesh_csv<W: Write>(model: &CavityModel, mut out: W) -> Result<()> {
    writeln!(out, "index,region,cx,cy,cz,nx,ny,nz,area,u,v")?;
    for (i, e) in model.elements.iter().enumerate() {
        writeln!(
            out,
            "{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            i,
            e.region.as_str(),
            e.centroid[0],
            e.centroid[1],
            e.centroid[2],
            e.normal[0],
            e.normal[1],
            e.normal[2],
            e.area,
            e.coords.0,
            e.coords.1,
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    #[test]
    fn capsule_element_count_matches_grid() {
        let m = build_capsule_mesh(1.0, deg(5.0), deg(5.0)).unwrap();
        assert_eq!(m.len(), 36 * 72);
        assert_eq!(m.len(), 2592);
        let fine = build_capsule_mesh(1.0, deg(2.5), deg(2.5)).unwrap();
        assert_eq!(fine.len(), 10368);
    }

    #[test]
    fn capsule_rejects_non_dividing_resolution() {
        assert!(build_capsule_mesh(1.0, deg(7.0), deg(5.0)).is_err());
        assert!(build_capsule_mesh(1.0, deg(5.0), deg(11.0)).is_err());
    }

    #[test]
    fn capsule_area_sums_to_sphere() {
        let r = 120.0;
        let m = build_capsule_mesh(r, deg(5.0), deg(5.0)).unwrap();
        let total: f64 = m.iter().map(|e| e.area).sum();
        let exact = 4.0 * PI * r * r;
        // Patch areas telescope, so the sum is exact up to rounding.
        assert_relative_eq!(total, exact, max_relative = 1e-12);
        assert!(total > 0.0);
        for e in &m {
            assert!(e.area > 0.0);
            assert_relative_eq!(geom::norm(e.normal), 1.0, epsilon = 1e-12);
            assert!(e.coords.0 >= 0.0 && e.coords.0 <= PI);
            assert!(e.coords.1 >= 0.0 && e.coords.1 < 2.0 * PI);
        }
    }

    #[test]
    fn end_face_counts_and_area() {
        // 14 radial rings × 144 sectors, as in the coarse S2 end face.
        let m = build_end_face_mesh(400.0, 190.0, 15.0, deg(2.5), FaceSide::Top, 850.0).unwrap();
        assert_eq!(m.len(), 2016);
        let total: f64 = m.iter().map(|e| e.area).sum();
        let exact = PI * (400.0_f64.powi(2) - 190.0_f64.powi(2));
        assert_relative_eq!(total, exact, max_relative = 1e-12);
        let rt = 190.0 / 400.0;
        for e in &m {
            assert_eq!(e.normal, [0.0, 0.0, -1.0]);
            assert!(e.coords.0 > rt && e.coords.0 < 1.0);
            assert_eq!(e.centroid[2], 850.0);
        }
    }

    #[test]
    fn end_face_disk_limit() {
        let m = build_end_face_mesh(10.0, 0.0, 1.0, deg(30.0), FaceSide::Bottom, -5.0).unwrap();
        assert_eq!(m.len(), 10 * 12);
        let total: f64 = m.iter().map(|e| e.area).sum();
        assert_relative_eq!(total, PI * 100.0, max_relative = 1e-12);
    }

    #[test]
    fn end_face_rejects_bad_hole() {
        assert!(build_end_face_mesh(10.0, 10.0, 1.0, deg(30.0), FaceSide::Top, 1.0).is_err());
        assert!(build_end_face_mesh(10.0, 12.0, 1.0, deg(30.0), FaceSide::Top, 1.0).is_err());
    }

    #[test]
    fn wall_area_and_topmost_row() {
        let (r, h) = (400.0, 850.0);
        let m = build_wall_mesh(r, h, 42.5, deg(5.0)).unwrap();
        assert_eq!(m.len(), 40 * 72);
        let total: f64 = m.iter().map(|e| e.area).sum();
        assert_relative_eq!(total, 2.0 * PI * r * 2.0 * h, max_relative = 1e-12);
        let zmax = m.iter().map(|e| e.coords.0).fold(f64::MIN, f64::max);
        let dz = 42.5;
        assert_relative_eq!(zmax, 1.0 - dz / (2.0 * h), epsilon = 1e-12);
        for e in &m {
            // Inward normal: capsule center lies in the open half-space.
            assert!(geom::dot(e.normal, geom::scale(e.centroid, -1.0)) > 0.0);
        }
    }

    fn small_geometry() -> CavityGeometry {
        CavityGeometry {
            cavity_radius: 400.0,
            cavity_half_height: 850.0,
            capsule_radius: 120.0,
            leh_radius: 190.0,
            resolutions: MeshResolution {
                dtheta_s: deg(30.0),
                dphi_s: deg(45.0),
                dr: 105.0,
                dphi_u: deg(20.0),
                dz: 212.5,
                dphi_w: deg(36.0),
                wall_counts: None,
            },
        }
    }

    #[test]
    fn assemble_partitions_and_source() {
        let model = assemble_cavity(small_geometry(), SourceConfig::default()).unwrap();
        let n: usize = model.region_ranges.iter().map(|r| r.len()).sum();
        assert_eq!(n, model.n());
        assert_eq!(model.region_range(Region::Capsule).start, 0);
        assert_eq!(model.region_range(Region::Wall).end, model.n());
        // Ranges are contiguous and ordered.
        for w in model.region_ranges.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
        // Source is nonnegative, zero off the wall, and sums to total beam power.
        let wall = model.region_range(Region::Wall);
        let mut power = 0.0;
        for (i, (&s, e)) in model.source.s0.iter().zip(&model.elements).enumerate() {
            assert!(s >= 0.0);
            if !wall.contains(&i) {
                assert_eq!(s, 0.0);
            }
            power += s * e.area;
        }
        let expected = 8.0 * model.source.config.beam_power;
        assert_relative_eq!(power, expected, max_relative = 1e-10);
    }

    #[test]
    fn assemble_mirror_symmetry_of_faces() {
        let model = assemble_cavity(small_geometry(), SourceConfig::default()).unwrap();
        let top = model.elements_in(Region::EndFaceTop);
        let bottom = model.elements_in(Region::EndFaceBottom);
        assert_eq!(top.len(), bottom.len());
        for (t, b) in top.iter().zip(bottom) {
            assert_eq!(t.centroid[0], b.centroid[0]);
            assert_eq!(t.centroid[1], b.centroid[1]);
            assert_eq!(t.centroid[2], -b.centroid[2]);
        }
    }

    #[test]
    fn normals_face_cavity_interior() {
        let model = assemble_cavity(small_geometry(), SourceConfig::default()).unwrap();
        for (i, e) in model.elements.iter().enumerate() {
            let to_center = geom::scale(e.centroid, -1.0);
            match model.region_of(i) {
                // Capsule normals point away from the capsule center.
                Region::Capsule => assert!(geom::dot(e.normal, to_center) < 0.0),
                _ => assert!(geom::dot(e.normal, to_center) > 0.0),
            }
        }
    }

    #[test]
    fn capsule_area_error_shrinks_under_refinement() {
        // With exact patch areas the sum telescopes; check the *element-level*
        // midpoint-vs-exact area deviation halves (or better) under 2× refinement.
        let coarse = build_capsule_mesh(1.0, deg(10.0), deg(10.0)).unwrap();
        let fine = build_capsule_mesh(1.0, deg(5.0), deg(5.0)).unwrap();
        let max_dev = |mesh: &[SurfaceElement], dt: f64, dp: f64| -> f64 {
            mesh.iter()
                .map(|e| {
                    let midpoint = e.coords.0.sin() * dt * dp;
                    (e.area - midpoint).abs() / e.area
                })
                .fold(0.0, f64::max)
        };
        let dev_c = max_dev(&coarse, deg(10.0), deg(10.0));
        let dev_f = max_dev(&fine, deg(5.0), deg(5.0));
        assert!(dev_f < 0.5 * dev_c * 1.01, "dev_f={dev_f} dev_c={dev_c}");
    }
}
