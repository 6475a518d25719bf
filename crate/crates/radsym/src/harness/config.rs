//! Run configuration: a single TOML file describing geometry, mesh
//! resolutions, source, material constants, basis sizes, sampling, and
//! solver settings.
//!
//! Angles are given in degrees in the file and converted to radians
//! internally; lengths are in arbitrary but consistent units (µm by
//! convention).

use crate::balance::MaterialParams;
use crate::error::{Error, Result};
use crate::mesh::{CavityGeometry, MeshResolution, SourceConfig, SpotProfile};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GeometrySection {
    pub cavity_radius: f64,
    pub cavity_half_height: f64,
    pub capsule_radius: f64,
    pub leh_radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MeshSection {
    pub dtheta_s_deg: f64,
    pub dphi_s_deg: f64,
    pub dr: f64,
    pub dphi_u_deg: f64,
    pub dz: f64,
    pub dphi_w_deg: f64,
    /// Explicit wall cell counts `(n_z, n_phi)`; overrides `dz`/`dphi_w_deg`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_counts: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SourceSection {
    pub beams_per_ring: usize,
    pub ring_z_fraction: f64,
    pub top_ring_phase_deg: f64,
    pub bottom_ring_phase_deg: f64,
    pub spot_half_z_fraction: f64,
    pub spot_half_phi_deg: f64,
    pub beam_power: f64,
    pub profile: SpotProfile,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MaterialSection {
    pub upsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub time: f64,
}

impl Default for MaterialSection {
    fn default() -> Self {
        let m = MaterialParams::default();
        MaterialSection {
            upsilon: m.upsilon,
            alpha: m.alpha,
            beta: m.beta,
            time: m.time,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BasisSection {
    /// Requested term counts per block (capsule, top face, bottom face, wall).
    pub l_terms: [usize; 4],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SamplingSection {
    /// Per-region sparsity levels for the `s·log₁₀ N` heuristic.
    pub s: [f64; 4],
    /// Per-region sample-count floors (the rounded-up sample numbers).
    pub overrides: [usize; 4],
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SolveSection {
    /// Per-region sparsity budgets (capsule, top face, bottom face, wall).
    pub k: [usize; 4],
    pub outer_tol: f64,
    pub outer_max: usize,
    pub nr_tol: f64,
    pub pcg_tol: f64,
    pub pcg_inner_tol: f64,
}

impl Default for SolveSection {
    fn default() -> Self {
        SolveSection {
            k: [30, 35, 35, 100],
            outer_tol: 1e-6,
            outer_max: 50,
            nr_tol: 1e-10,
            pcg_tol: 1e-8,
            pcg_inner_tol: 1e-3,
        }
    }
}

/// The full run configuration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Config {
    /// Label used in report rows and output names.
    pub name: String,
    pub geometry: GeometrySection,
    pub mesh: MeshSection,
    pub source: SourceSection,
    #[serde(default)]
    pub material: MaterialSection,
    pub basis: BasisSection,
    pub sampling: SamplingSection,
    #[serde(default)]
    pub solve: SolveSection,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn cavity_geometry(&self) -> CavityGeometry {
        CavityGeometry {
            cavity_radius: self.geometry.cavity_radius,
            cavity_half_height: self.geometry.cavity_half_height,
            capsule_radius: self.geometry.capsule_radius,
            leh_radius: self.geometry.leh_radius,
            resolutions: MeshResolution {
                dtheta_s: self.mesh.dtheta_s_deg.to_radians(),
                dphi_s: self.mesh.dphi_s_deg.to_radians(),
                dr: self.mesh.dr,
                dphi_u: self.mesh.dphi_u_deg.to_radians(),
                dz: self.mesh.dz,
                dphi_w: self.mesh.dphi_w_deg.to_radians(),
                wall_counts: self.mesh.wall_counts,
            },
        }
    }

    pub fn source_config(&self) -> SourceConfig {
        SourceConfig {
            beams_per_ring: self.source.beams_per_ring,
            ring_z_fraction: self.source.ring_z_fraction,
            top_ring_phase: self.source.top_ring_phase_deg.to_radians(),
            bottom_ring_phase: self.source.bottom_ring_phase_deg.to_radians(),
            spot_half_z_fraction: self.source.spot_half_z_fraction,
            spot_half_phi: self.source.spot_half_phi_deg.to_radians(),
            beam_power: self.source.beam_power,
            profile: self.source.profile,
        }
    }

    pub fn material_params(&self) -> MaterialParams {
        MaterialParams {
            upsilon: self.material.upsilon,
            alpha: self.material.alpha,
            beta: self.material.beta,
            time: self.material.time,
        }
    }

    /// Per-region sample-count overrides as options for the plan builder.
    pub fn sample_overrides(&self) -> [Option<usize>; 4] {
        let o = self.sampling.overrides;
        [Some(o[0]), Some(o[1]), Some(o[2]), Some(o[3])]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::presets::ModelPreset;

    #[test]
    fn config_round_trips_through_toml() {
        let config = ModelPreset::S21.config();
        let text = config.to_toml().unwrap();
        let back: Config = toml::from_str(&text).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn geometry_conversion_uses_radians() {
        let config = ModelPreset::S21.config();
        let geom = config.cavity_geometry();
        assert!((geom.resolutions.dtheta_s - 5f64.to_radians()).abs() < 1e-15);
        assert_eq!(geom.resolutions.wall_counts, Some((197, 16)));
    }
}
