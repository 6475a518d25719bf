//! Built-in model configurations.
//!
//! Four presets reproduce the published benchmark meshes exactly:
//!
//! | preset | capsule | end faces | wall | total |
//! |--------|---------|-----------|------|-------|
//! | s2-1   | 2592 (5°×5°)     | 2016×2 (Δr 15, 2.5°)   | 3152 (197×16)  | 9776  |
//! | s2-2   | 10368 (2.5°×2.5°)| 8064×2 (Δr 7.5, 1.25°) | 12456 (173×72) | 38952 |
//! | s3-1   | 2592 (5°×5°)     | 4320×2 (Δr 15, 2.5°)   | 9504 (Δz 30, 5°)  | 20736 |
//! | s3-2   | 10368 (2.5°×2.5°)| 17280×2 (Δr 7.5, 1.25°)| 38016 (Δz 15, 2.5°)| 82944 |
//!
//! The S2 wall counts do not factor over their nominal 5°/2.5° azimuthal
//! steps, so those two presets pin explicit `(n_z, n_phi)` wall counts; the
//! S3 walls derive cleanly from their step sizes.
//!
//! Physical dimensions are representative defaults chosen so the radial
//! ring counts work out (they are not published values): the S2 cavity is
//! 400 µm in radius with 850 µm half-height, a 120 µm capsule and 190 µm
//! entrance holes; the S3 cavity is 800 µm in radius with 1980 µm
//! half-height and 350 µm holes. Source spots and per-beam power are
//! likewise representative defaults, calibrated so the reference solve has
//! unit-scale flux.

use super::config::*;
use crate::error::{Error, Result};

/// The four benchmark model presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelPreset {
    S21,
    S22,
    S31,
    S32,
}

impl ModelPreset {
    pub const ALL: [ModelPreset; 4] = [
        ModelPreset::S21,
        ModelPreset::S22,
        ModelPreset::S31,
        ModelPreset::S32,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelPreset::S21 => "s2-1",
            ModelPreset::S22 => "s2-2",
            ModelPreset::S31 => "s3-1",
            ModelPreset::S32 => "s3-2",
        }
    }

    /// Expected total element count of the preset mesh.
    pub fn element_count(self) -> usize {
        match self {
            ModelPreset::S21 => 9776,
            ModelPreset::S22 => 38952,
            ModelPreset::S31 => 20736,
            ModelPreset::S32 => 82944,
        }
    }

    pub fn config(self) -> Config {
        let (geometry, mesh) = match self {
            ModelPreset::S21 => (
                s2_geometry(),
                MeshSection {
                    dtheta_s_deg: 5.0,
                    dphi_s_deg: 5.0,
                    dr: 15.0,
                    dphi_u_deg: 2.5,
                    dz: 30.0,
                    dphi_w_deg: 5.0,
                    wall_counts: Some((197, 16)),
                },
            ),
            ModelPreset::S22 => (
                s2_geometry(),
                MeshSection {
                    dtheta_s_deg: 2.5,
                    dphi_s_deg: 2.5,
                    dr: 7.5,
                    dphi_u_deg: 1.25,
                    dz: 15.0,
                    dphi_w_deg: 2.5,
                    wall_counts: Some((173, 72)),
                },
            ),
            ModelPreset::S31 => (
                s3_geometry(),
                MeshSection {
                    dtheta_s_deg: 5.0,
                    dphi_s_deg: 5.0,
                    dr: 15.0,
                    dphi_u_deg: 2.5,
                    dz: 30.0,
                    dphi_w_deg: 5.0,
                    wall_counts: None,
                },
            ),
            ModelPreset::S32 => (
                s3_geometry(),
                MeshSection {
                    dtheta_s_deg: 2.5,
                    dphi_s_deg: 2.5,
                    dr: 7.5,
                    dphi_u_deg: 1.25,
                    dz: 15.0,
                    dphi_w_deg: 2.5,
                    wall_counts: None,
                },
            ),
        };
        let wall_samples = match self {
            ModelPreset::S21 => 400,
            ModelPreset::S22 => 450,
            ModelPreset::S31 => 350,
            ModelPreset::S32 => 400,
        };
        let face_samples = match self {
            ModelPreset::S32 => 200,
            _ => 150,
        };
        Config {
            name: self.as_str().to_string(),
            geometry,
            mesh,
            source: default_source(),
            material: MaterialSection::default(),
            basis: BasisSection {
                l_terms: [400, 325, 325, 1225],
            },
            sampling: SamplingSection {
                s: [30.0, 35.0, 35.0, 100.0],
                overrides: [150, face_samples, face_samples, wall_samples],
                seed: 7,
            },
            solve: SolveSection::default(),
        }
    }
}

impl std::str::FromStr for ModelPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s2-1" | "s21" => Ok(ModelPreset::S21),
            "s2-2" | "s22" => Ok(ModelPreset::S22),
            "s3-1" | "s31" => Ok(ModelPreset::S31),
            "s3-2" | "s32" => Ok(ModelPreset::S32),
            other => Err(Error::Parse(format!(
                "unknown model preset '{other}' (expected s2-1, s2-2, s3-1 or s3-2)"
            ))),
        }
    }
}

fn s2_geometry() -> GeometrySection {
    GeometrySection {
        cavity_radius: 400.0,
        cavity_half_height: 850.0,
        capsule_radius: 120.0,
        leh_radius: 190.0,
    }
}

fn s3_geometry() -> GeometrySection {
    GeometrySection {
        cavity_radius: 800.0,
        cavity_half_height: 1980.0,
        capsule_radius: 120.0,
        leh_radius: 350.0,
    }
}

fn default_source() -> SourceSection {
    SourceSection {
        beams_per_ring: 4,
        ring_z_fraction: 0.55,
        top_ring_phase_deg: 0.0,
        bottom_ring_phase_deg: 45.0,
        spot_half_z_fraction: 0.22,
        spot_half_phi_deg: 35.0,
        beam_power: 1.0,
        profile: crate::mesh::SpotProfile::Gaussian,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::assemble_cavity;

    #[test]
    fn preset_element_counts_are_exact() {
        for preset in ModelPreset::ALL {
            let config = preset.config();
            let model = assemble_cavity(config.cavity_geometry(), config.source_config()).unwrap();
            assert_eq!(
                model.n(),
                preset.element_count(),
                "preset {} produced {} elements",
                preset.as_str(),
                model.n()
            );
        }
    }

    #[test]
    fn preset_sample_totals_match_published_numbers() {
        let totals = [(ModelPreset::S21, 850), (ModelPreset::S22, 900), (ModelPreset::S31, 800), (ModelPreset::S32, 950)];
        for (preset, want) in totals {
            let c = preset.config();
            let got: usize = c.sampling.overrides.iter().sum();
            assert_eq!(got, want, "preset {}", preset.as_str());
        }
    }

    #[test]
    fn preset_parsing() {
        assert_eq!("s2-1".parse::<ModelPreset>().unwrap(), ModelPreset::S21);
        assert_eq!("S3-2".parse::<ModelPreset>().unwrap(), ModelPreset::S32);
        assert!("s4-1".parse::<ModelPreset>().is_err());
    }
}
