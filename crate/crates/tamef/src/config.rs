//! Run configuration: defaults, then the `--config` JSON file, then flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tamef_core::{BanachFiber, DEFAULT_DEGREE, DEFAULT_N_MAX, MAX_EXPONENT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub seed: u64,
    pub out: PathBuf,
    /// Truncation degree `K`.
    pub k: usize,
    pub nmax: usize,
    /// Command-specific tolerance; `None` keeps the command default.
    pub tol: Option<f64>,
    pub probes: usize,
    pub fiber_dim: usize,

    pub grading_a: String,
    pub grading_b: String,
    pub r_max: usize,

    pub map: String,
    pub grading: String,

    pub constraint: String,
    /// Fixed coordinates, zero-padded.
    pub x: Vec<f64>,
    pub y0: Option<Vec<f64>>,
    /// Solved coordinates; default `0..m`.
    pub y_coords: Option<Vec<usize>>,
    pub max_iter: usize,

    /// Extra chart base points.
    pub points: Vec<Vec<f64>>,
    pub seeds: usize,
    pub transition_probes: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            seed: 0,
            out: PathBuf::from("out"),
            k: DEFAULT_DEGREE,
            nmax: DEFAULT_N_MAX,
            tol: None,
            probes: 512,
            fiber_dim: 1,
            grading_a: "l1".into(),
            grading_b: "linf".into(),
            r_max: 2,
            map: "identity".into(),
            grading: "l1".into(),
            constraint: "sphere:0".into(),
            x: Vec::new(),
            y0: None,
            y_coords: None,
            max_iter: 50,
            points: Vec::new(),
            seeds: 16,
            transition_probes: 32,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.k.saturating_mul(self.nmax) > MAX_EXPONENT {
            return Err(format!("k·nmax = {} exceeds {MAX_EXPONENT}", self.k * self.nmax));
        }
        if self.probes == 0 {
            return Err("probes must be positive".into());
        }
        if self.fiber_dim == 0 {
            return Err("fiber_dim must be positive".into());
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(format!("tol must be positive and finite, got {t}"));
            }
        }
        Ok(())
    }

    pub fn fiber(&self) -> BanachFiber {
        BanachFiber::real_euclidean(self.fiber_dim).expect("fiber_dim validated")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_overrides_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"seed": 9, "k": 16, "map": "shift_up"}"#).unwrap();
        let c = RunConfig::from_file(&p).unwrap();
        assert_eq!((c.seed, c.k, c.map.as_str(), c.nmax), (9, 16, "shift_up", DEFAULT_N_MAX));
        std::fs::write(&p, r#"{"sed": 9}"#).unwrap();
        assert!(RunConfig::from_file(&p).is_err());
    }

    #[test]
    fn validation() {
        assert!(RunConfig::default().validate().is_ok());
        assert!(RunConfig { k: 64, nmax: 8, ..Default::default() }.validate().is_err());
        assert!(RunConfig { probes: 0, ..Default::default() }.validate().is_err());
        assert!(RunConfig { tol: Some(-1.0), ..Default::default() }.validate().is_err());
    }
}
