//! Run configuration (TOML).
//!
//! ```toml
//! sound_speed = 343.0        # m/s, converts Hz to wavenumbers
//! alpha = 0.5                # Burton–Miller coupling
//! observations = 26          # 26 → Lebedev rule, otherwise Fibonacci lattice
//! fd_step = 0.003            # optional; default 1e-3 × bounding-box diagonal
//! tolerance = 1e-8           # stop a band once J < tolerance
//! max_iterations = 50        # per band
//! snr_db = 10.0              # optional; omitted means noise-free
//! seed = 1
//! stagnation_tol = 1e-3
//! stagnation_window = 3
//!
//! [[stage]]
//! frequencies_hz = [110.0]
//! incidences = 6             # count (Fibonacci coverage) or [[theta, phi], ...]
//! mh_count = 10
//! band_size = 10
//! vertex_factor = 1.0        # optional; control-vertex budget relative to the previous stage
//! ```

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bem::{fibonacci, from_angles, lebedev26, DirectionSet};
use crate::error::{Error, Result};
use crate::mesh::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Incidences {
    Count(usize),
    Angles(Vec<[f64; 2]>),
}

impl Incidences {
    pub fn directions(&self) -> Vec<Vec3> {
        match self {
            Incidences::Count(n) => fibonacci(*n).directions,
            Incidences::Angles(a) => a.iter().map(|[t, p]| from_angles(*t, *p)).collect(),
        }
    }

    fn len(&self) -> usize {
        match self {
            Incidences::Count(n) => *n,
            Incidences::Angles(a) => a.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub frequencies_hz: Vec<f64>,
    pub incidences: Incidences,
    pub mh_count: usize,
    pub band_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex_factor: Option<f64>,
}

fn default_sound_speed() -> f64 {
    343.0
}
fn default_alpha() -> f64 {
    0.5
}
fn default_observations() -> usize {
    26
}
fn default_tolerance() -> f64 {
    1e-8
}
fn default_max_iterations() -> usize {
    50
}
fn default_stagnation_tol() -> f64 {
    1e-3
}
fn default_stagnation_window() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionConfig {
    #[serde(default = "default_sound_speed")]
    pub sound_speed: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_observations")]
    pub observations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_stagnation_tol")]
    pub stagnation_tol: f64,
    #[serde(default = "default_stagnation_window")]
    pub stagnation_window: usize,
    #[serde(rename = "stage")]
    pub stages: Vec<StageConfig>,
}

impl ReconstructionConfig {
    /// Single-stage configuration with defaults.
    pub fn single_stage(frequencies_hz: Vec<f64>, incidences: Incidences, mh_count: usize, band_size: usize) -> Self {
        Self {
            sound_speed: default_sound_speed(),
            alpha: default_alpha(),
            observations: default_observations(),
            fd_step: None,
            tolerance: default_tolerance(),
            max_iterations: default_max_iterations(),
            snr_db: None,
            seed: 0,
            stagnation_tol: default_stagnation_tol(),
            stagnation_window: default_stagnation_window(),
            stages: vec![StageConfig { frequencies_hz, incidences, mh_count, band_size, vertex_factor: None }],
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.stages.is_empty() {
            return bad("at least one [[stage]] is required".into());
        }
        if !(self.sound_speed > 0.0) {
            return bad(format!("sound_speed must be positive, got {}", self.sound_speed));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if self.observations < 4 {
            return bad("observations must be at least 4".into());
        }
        if let Some(t) = self.fd_step {
            if !(t > 0.0) {
                return bad(format!("fd_step must be positive, got {t}"));
            }
        }
        if !(self.tolerance > 0.0) || !(self.stagnation_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.max_iterations == 0 || self.stagnation_window == 0 {
            return bad("max_iterations and stagnation_window must be positive".into());
        }
        if let Some(s) = self.snr_db {
            if !s.is_finite() {
                return bad("snr_db must be finite (omit it for noise-free data)".into());
            }
        }
        let mut last_max = 0.0;
        for (i, s) in self.stages.iter().enumerate() {
            if s.frequencies_hz.is_empty() || s.frequencies_hz.iter().any(|f| !(*f > 0.0)) {
                return bad(format!("stage {i}: frequencies must be nonempty and positive"));
            }
            let max = s.frequencies_hz.iter().cloned().fold(0.0, f64::max);
            if max < last_max {
                return bad(format!("stage {i}: stages must be ordered by increasing frequency"));
            }
            last_max = max;
            if s.incidences.len() == 0 {
                return bad(format!("stage {i}: no incident directions"));
            }
            if s.mh_count == 0 || s.band_size == 0 {
                return bad(format!("stage {i}: mh_count and band_size must be positive"));
            }
            if let Some(v) = s.vertex_factor {
                if !(v > 0.0) {
                    return bad(format!("stage {i}: vertex_factor must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn wavenumbers(&self, stage: usize) -> Vec<f64> {
        self.stages[stage].frequencies_hz.iter().map(|f| 2.0 * PI * f / self.sound_speed).collect()
    }

    pub fn observation_set(&self) -> DirectionSet {
        if self.observations == 26 {
            lebedev26()
        } else {
            fibonacci(self.observations)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_defaults() {
        let text = r#"
            seed = 3
            snr_db = 10.0
            [[stage]]
            frequencies_hz = [100.0, 120.0]
            incidences = 4
            mh_count = 10
            band_size = 5
            [[stage]]
            frequencies_hz = [150.0]
            incidences = [[0.5, 0.1], [1.0, 2.0]]
            mh_count = 20
            band_size = 10
            vertex_factor = 2.0
        "#;
        let cfg = ReconstructionConfig::from_toml(text).unwrap();
        assert_eq!(cfg.alpha, 0.5);
        assert_eq!(cfg.stages[1].incidences.directions().len(), 2);
        assert_eq!(ReconstructionConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ReconstructionConfig::from_toml("stage = []").is_err());
        assert!(ReconstructionConfig::from_toml("bogus = 1\n[[stage]]\nfrequencies_hz=[1.0]\nincidences=1\nmh_count=1\nband_size=1").is_err());
        let descending = "[[stage]]\nfrequencies_hz=[2.0]\nincidences=1\nmh_count=1\nband_size=1\n[[stage]]\nfrequencies_hz=[1.0]\nincidences=1\nmh_count=1\nband_size=1";
        assert!(matches!(ReconstructionConfig::from_toml(descending), Err(Error::Config(_))));
    }
}
