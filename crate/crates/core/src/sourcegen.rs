//! Mass-conservation source model and a synthetic ground-truth fixture.
//!
//! The source assumes the deposited line height equals the nozzle gap, so
//! `W = F * A / (S * h)` with `A` the filament cross-section. The synthetic
//! target `alpha * W^p + offset` is a monotone, concave distortion of it that
//! stands in for measured widths.

use std::f64::consts::PI;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, Origin, Sample};
use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SourceGenError {
    #[error("inputs must be positive (f = {f}, s = {s})")]
    NonPositiveInput { f: f64, s: f64 },
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Constants of the analytical source model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceModelConfig {
    /// Filament diameter, mm.
    pub filament_diameter: f64,
    /// Nozzle-to-platen distance, mm.
    pub h: f64,
}

impl SourceModelConfig {
    pub fn new(h: f64) -> Self {
        SourceModelConfig { filament_diameter: 1.75, h }
    }

    /// Filament cross-sectional area `pi d^2 / 4`, mm^2.
    pub fn area(&self) -> f64 {
        PI * self.filament_diameter * self.filament_diameter / 4.0
    }

    pub fn validate(&self) -> Result<(), SourceGenError> {
        if !(self.filament_diameter > 0.0 && self.h > 0.0) {
            return Err(SourceGenError::InvalidConfig("filament diameter and h must be positive".into()));
        }
        Ok(())
    }
}

impl Default for SourceModelConfig {
    fn default() -> Self {
        SourceModelConfig::new(0.7)
    }
}

/// `W = F A / (S h)`.
pub fn source_width(f: f64, s: f64, cfg: &SourceModelConfig) -> Result<f64, SourceGenError> {
    if !(f > 0.0 && s > 0.0) {
        return Err(SourceGenError::NonPositiveInput { f, s });
    }
    Ok(f * cfg.area() / (s * cfg.h))
}

/// Equidistant process grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Feed rate range, mm/min.
    pub f_range: (f64, f64),
    /// Stage speed range, mm/min.
    pub s_range: (f64, f64),
    pub n_f: usize,
    pub n_s: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { f_range: (153.0, 729.0), s_range: (350.0, 725.0), n_f: 16, n_s: 16 }
    }
}

impl GridSpec {
    /// Grid for the shared source pool: 16 x 13 per height, 624 across three heights.
    pub fn source_pool() -> Self {
        GridSpec { n_s: 13, ..GridSpec::default() }
    }

    pub fn validate(&self) -> Result<(), SourceGenError> {
        for (name, (lo, hi)) in [("f", self.f_range), ("s", self.s_range)] {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(SourceGenError::InvalidRange(format!("{name} range ({lo}, {hi}) must satisfy 0 < min < max")));
            }
        }
        if self.n_f < 2 || self.n_s < 2 {
            return Err(SourceGenError::InvalidRange(format!(
                "need at least 2 levels per axis, got {} x {}",
                self.n_f, self.n_s
            )));
        }
        Ok(())
    }

    pub fn f_levels(&self) -> Vec<f64> {
        levels(self.f_range, self.n_f)
    }

    pub fn s_levels(&self) -> Vec<f64> {
        levels(self.s_range, self.n_s)
    }

    /// `(cell index, f, s)` in f-major order.
    fn cells(&self) -> Vec<(usize, f64, f64)> {
        let (fs, ss) = (self.f_levels(), self.s_levels());
        let mut out = Vec::with_capacity(fs.len() * ss.len());
        for (i, &f) in fs.iter().enumerate() {
            for (j, &s) in ss.iter().enumerate() {
                out.push((i * ss.len() + j, f, s));
            }
        }
        out
    }
}

fn levels((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
        .collect()
}

/// One source sample per grid cell.
pub fn generate_source_grid(grid: &GridSpec, cfg: &SourceModelConfig) -> Result<Dataset, SourceGenError> {
    grid.validate()?;
    cfg.validate()?;
    let samples = grid
        .cells()
        .into_iter()
        .map(|(_, f, s)| Ok(Sample::new(f, s, cfg.h, source_width(f, s, cfg)?, Origin::Source)))
        .collect::<Result<Vec<_>, SourceGenError>>()?;
    Dataset::new(samples).map_err(|e| SourceGenError::InvalidConfig(e.to_string()))
}

/// Parameters of the synthetic ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTargetConfig {
    pub alpha: f64,
    /// Exponent in (0, 1].
    pub p: f64,
    /// Additive offset, mm.
    pub offset: f64,
    /// Standard deviation of Gaussian measurement noise, mm.
    pub noise_std: f64,
    /// Allowed `(min, max)` of `source_width / h`; cells outside are unstable.
    pub stability_band: (f64, f64),
    pub seed: u64,
}

impl SyntheticTargetConfig {
    /// Default fixture for a nozzle height. Nonlinearity grows as `h` shrinks.
    pub fn for_height(h: f64) -> Self {
        let (alpha, p) = if h < 0.775 {
            (1.1, 0.55)
        } else if h < 1.025 {
            (1.05, 0.7)
        } else {
            (1.0, 0.85)
        };
        SyntheticTargetConfig {
            alpha,
            p,
            offset: 0.1 * h,
            noise_std: 0.02,
            stability_band: (0.5, 4.0),
            seed: 0,
        }
    }

    /// Target equals source exactly on every cell.
    pub fn identity() -> Self {
        SyntheticTargetConfig {
            alpha: 1.0,
            p: 1.0,
            offset: 0.0,
            noise_std: 0.0,
            stability_band: (0.0, f64::MAX),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SourceGenError> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(SourceGenError::InvalidConfig(format!("p must lie in (0, 1], got {}", self.p)));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(SourceGenError::InvalidConfig(format!("noise_std must be >= 0, got {}", self.noise_std)));
        }
        if !(self.stability_band.0 <= self.stability_band.1) {
            return Err(SourceGenError::InvalidConfig("stability band must be ordered".into()));
        }
        Ok(())
    }

    pub fn is_stable(&self, width_over_h: f64) -> bool {
        width_over_h >= self.stability_band.0 && width_over_h <= self.stability_band.1
    }
}

/// Noise-free synthetic width `alpha * W_source^p + offset`.
pub fn synthetic_truth(f: f64, s: f64, src: &SourceModelConfig, syn: &SyntheticTargetConfig) -> Result<f64, SourceGenError> {
    let w = source_width(f, s, src)?;
    Ok(syn.alpha * w.powf(syn.p) + syn.offset)
}

/// Synthetic measurements on the grid, with unstable cells removed.
///
/// Noise for each cell is drawn from a stream addressed by the cell index,
/// so the dataset does not depend on generation order.
pub fn generate_synthetic_target(
    grid: &GridSpec,
    src: &SourceModelConfig,
    syn: &SyntheticTargetConfig,
) -> Result<Dataset, SourceGenError> {
    grid.validate()?;
    src.validate()?;
    syn.validate()?;
    let noise = if syn.noise_std > 0.0 {
        Some(Normal::new(0.0, syn.noise_std).map_err(|e| SourceGenError::InvalidConfig(e.to_string()))?)
    } else {
        None
    };
    let mut samples = Vec::new();
    for (cell, f, s) in grid.cells() {
        if !syn.is_stable(source_width(f, s, src)? / src.h) {
            continue;
        }
        let mut w = synthetic_truth(f, s, src, syn)?;
        if let Some(dist) = &noise {
            w += dist.sample(&mut rng::stream(syn.seed, &[cell as u64]));
        }
        samples.push(Sample::new(f, s, src.h, w.max(0.0), Origin::Target));
    }
    Dataset::new(samples).map_err(|e| SourceGenError::InvalidConfig(e.to_string()))
}
