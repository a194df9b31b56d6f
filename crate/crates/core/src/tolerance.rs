use serde::{Deserialize, Serialize};

/// Combined absolute/relative slack for inequality checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const DEFAULT: Tolerance = Tolerance { abs: 1e-9, rel: 1e-9 };

    pub const fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel }
    }

    /// Allowed excess over `bound`.
    pub fn slack(&self, bound: f64) -> f64 {
        self.abs + self.rel * libm::fabs(bound)
    }

    /// `true` when `lhs ≤ bound` within tolerance.
    pub fn le(&self, lhs: f64, bound: f64) -> bool {
        lhs <= bound + self.slack(bound)
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::DEFAULT
    }
}
