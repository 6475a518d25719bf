//! Measurement-row selection: sample-count heuristic, Latin hypercube index
//! sampling, and assembly of per-region plans.
//!
//! The row-selection operator is represented as a sorted index set; it is
//! never materialized as a 0/1 matrix.

use crate::error::{Error, Result};
use crate::mesh::{CavityModel, Region};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::{BufRead, Write};

/// Number of measurement rows for a region of `n` elements with sparsity
/// `s`: `ceil(s·log₁₀ n)`, raised to `floor_override` when provided.
pub fn sample_count(s: f64, n: usize, floor_override: Option<usize>) -> usize {
    assert!(n > 1, "sample_count requires a region of more than one element");
    let base = (s * (n as f64).log10()).ceil() as usize;
    match floor_override {
        Some(f) => base.max(f),
        None => base,
    }
}

fn lhs_indices_with_rng(n: usize, m: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
    if m > n {
        return Err(Error::Config(format!(
            "cannot draw {m} distinct indices from a region of {n}"
        )));
    }
    // One uniform draw per stratum [floor(s·n/m), floor((s+1)·n/m)).
    let mut out = Vec::with_capacity(m);
    for s in 0..m {
        let lo = s * n / m;
        let hi = (s + 1) * n / m;
        out.push(rng.gen_range(lo..hi.max(lo + 1)));
    }
    Ok(out)
}

/// Latin hypercube draw of `m` distinct indices from `[0, n)`:
/// the range is split into `m` equal strata and one index is drawn uniformly
/// from each. Deterministic for a given seed.
pub fn lhs_indices(n: usize, m: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    lhs_indices_with_rng(n, m, &mut rng)
}

/// A frozen measurement plan: per-region counts and the global sorted index
/// list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePlan {
    /// Counts per region (capsule, top face, bottom face, wall).
    pub counts: [usize; 4],
    /// Global element indices, sorted ascending and distinct.
    pub indices: Vec<usize>,
    pub seed: u64,
    /// Total element count of the model the plan was drawn for.
    pub n_total: usize,
}

impl SamplePlan {
    /// Total number of sampled rows.
    pub fn m(&self) -> usize {
        self.indices.len()
    }

    /// Sampling rate `M / N`.
    pub fn rate(&self) -> f64 {
        self.m() as f64 / self.n_total as f64
    }

    /// Writes the plan as CSV with columns `region,local_index,global_index`.
    pub fn export_csv<W: Write>(&self, model: &CavityModel, mut out: W) -> Result<()> {
        writeln!(out, "region,local_index,global_index")?;
        for &g in &self.indices {
            let region = model.region_of(g);
            let local = g - model.region_range(region).start;
            writeln!(out, "{},{},{}", region.as_str(), local, g)?;
        }
        Ok(())
    }

    /// Reads a plan written by [`SamplePlan::export_csv`].
    pub fn import_csv<R: BufRead>(model: &CavityModel, input: R) -> Result<SamplePlan> {
        let mut counts = [0usize; 4];
        let mut indices = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            if lineno == 0 {
                continue; // header
            }
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.trim().split(',').collect();
            if parts.len() != 3 {
                return Err(Error::Parse(format!("plan line {lineno}: expected 3 fields")));
            }
            let region: Region = parts[0].parse()?;
            let global: usize = parts[2]
                .parse()
                .map_err(|e| Error::Parse(format!("plan line {lineno}: {e}")))?;
            if !model.region_range(region).contains(&global) {
                return Err(Error::Parse(format!(
                    "plan line {lineno}: index {global} not in region {}",
                    region.as_str()
                )));
            }
            counts[region.index()] += 1;
            indices.push(global);
        }
        indices.sort_unstable();
        indices.dedup();
        if indices.len() != counts.iter().sum::<usize>() {
            return Err(Error::Parse("plan contains duplicate indices".into()));
        }
        Ok(SamplePlan {
            counts,
            indices,
            seed: 0,
            n_total: model.n(),
        })
    }
}

/// Draws a per-region Latin hypercube plan.
///
/// `s` are the per-region sparsity levels fed to the `s·log₁₀ N` heuristic
/// and `overrides` the per-region floor counts (the paper-style rounded-up
/// sample numbers). Draws are sequential per region from one seeded
/// generator, so a plan is reproducible from `(model, s, overrides, seed)`.
pub fn build_plan(
    model: &CavityModel,
    s: [f64; 4],
    overrides: [Option<usize>; 4],
    seed: u64,
) -> Result<SamplePlan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0usize; 4];
    let mut indices = Vec::new();
    for region in Region::ALL {
        let i = region.index();
        let range = model.region_range(region);
        let m = sample_count(s[i], range.len(), overrides[i]);
        if m > range.len() {
            return Err(Error::Config(format!(
                "region {} has {} elements but {m} samples requested",
                region.as_str(),
                range.len()
            )));
        }
        counts[i] = m;
        let local = lhs_indices_with_rng(range.len(), m, &mut rng)?;
        indices.extend(local.into_iter().map(|l| l + range.start));
    }
    indices.sort_unstable();
    Ok(SamplePlan {
        counts,
        indices,
        seed,
        n_total: model.n(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_count_heuristic() {
        // ceil(30·log10(2592)) = 103, raised to 150 by the override.
        assert_eq!(sample_count(30.0, 2592, None), 103);
        assert_eq!(sample_count(30.0, 2592, Some(150)), 150);
        assert_eq!(sample_count(35.0, 2016, None), 116);
        assert_eq!(sample_count(35.0, 2016, Some(150)), 150);
        assert_eq!(sample_count(100.0, 3152, None), 350);
        assert_eq!(sample_count(100.0, 3152, Some(400)), 400);
    }

    #[test]
    fn lhs_saturated_and_single() {
        assert_eq!(lhs_indices(7, 7, 1).unwrap(), vec![0, 1, 2, 3, 4, 5, 6]);
        let one = lhs_indices(100, 1, 42).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one[0] < 100);
        assert!(lhs_indices(5, 6, 0).is_err());
    }

    #[test]
    fn lhs_stratification() {
        // One sample per stratum of width n/m whenever m divides n.
        let (n, m) = (120, 24);
        let idx = lhs_indices(n, m, 9).unwrap();
        assert_eq!(idx.len(), m);
        for (s, &i) in idx.iter().enumerate() {
            assert!(i >= s * n / m && i < (s + 1) * n / m, "sample {i} outside stratum {s}");
        }
    }

    #[test]
    fn lhs_deterministic_under_seed() {
        assert_eq!(lhs_indices(1000, 64, 7).unwrap(), lhs_indices(1000, 64, 7).unwrap());
        assert_ne!(lhs_indices(1000, 64, 7).unwrap(), lhs_indices(1000, 64, 8).unwrap());
    }
}
