//! Tameness certificates `(r, b, C(n))` and the empirical search that
//! produces them.
//!
//! An empirical certificate is evidence over a probe set, never a proof. On a
//! truncated space every finite ratio is bounded, so unboundedness is judged
//! from how the maximal ratio grows when the probes are truncated at a
//! quarter, half and all of the degree: sustained growth by more than
//! [`GROWTH_FACTOR`] at both steps marks the index as unbounded.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Tolerance};

/// Per-step growth of the maximal ratio that counts as unbounded.
pub const GROWTH_FACTOR: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    Empirical,
    /// Obtained by substituting other certificates into each other.
    Derived,
}

/// `Linear`: `‖Φf‖_n ≤ C(n)‖f‖_{n+r}`; `Affine`: `‖Φf‖_n ≤ C(n)(1+‖f‖_{n+r})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundForm {
    Linear,
    Affine,
}

impl BoundForm {
    fn denominator(self, norm: f64) -> f64 {
        match self {
            BoundForm::Linear => norm,
            BoundForm::Affine => 1.0 + norm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelConstant {
    pub n: usize,
    pub c: f64,
    /// Largest probe ratio at this level; `None` for analytic constants.
    pub max_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TamenessCertificate {
    pub r: usize,
    pub b: usize,
    /// Top index of the underlying gradings; constants exist for
    /// `b ≤ n ≤ n_max - r` only.
    pub n_max: usize,
    pub form: BoundForm,
    pub provenance: Provenance,
    pub constants: Vec<LevelConstant>,
    pub probe_count: usize,
    pub max_ratio_observed: Option<f64>,
}

impl TamenessCertificate {
    /// Certificate with constants `c(n)` for `n = b..=n_max-r`.
    pub fn analytic(r: usize, b: usize, n_max: usize, form: BoundForm, c: impl Fn(usize) -> f64) -> Result<Self> {
        if r > n_max || b > n_max - r {
            return Err(Error::invalid("certificate has no admissible level"));
        }
        let constants = (b..=n_max - r).map(|n| LevelConstant { n, c: c(n), max_ratio: None }).collect();
        let cert = TamenessCertificate {
            r,
            b,
            n_max,
            form,
            provenance: Provenance::Analytic,
            constants,
            probe_count: 0,
            max_ratio_observed: None,
        };
        cert.check_constants()?;
        Ok(cert)
    }

    pub fn constant(&self, n: usize) -> Option<f64> {
        self.constants.iter().find(|lc| lc.n == n).map(|lc| lc.c)
    }

    pub fn levels(&self) -> impl Iterator<Item = usize> + '_ {
        self.constants.iter().map(|lc| lc.n)
    }

    pub(crate) fn check_constants(&self) -> Result<()> {
        if self.constants.iter().any(|lc| !(lc.c > 0.0) || !lc.c.is_finite()) {
            return Err(Error::invalid("certificate constants must be positive and finite"));
        }
        Ok(())
    }

    /// Re-checks the certified inequality on every probe of `table`.
    pub fn validate(&self, table: &RatioTable, tol: Tolerance) -> Vec<CertificateViolation> {
        let mut out = Vec::new();
        for lc in &self.constants {
            for (i, p) in table.probes.iter().enumerate() {
                let (Some(&lhs), Some(&rhs)) = (p.lhs.get(lc.n), p.rhs.get(lc.n + self.r)) else {
                    continue;
                };
                let bound = lc.c * self.form.denominator(rhs);
                if !tol.le(lhs, bound) {
                    out.push(CertificateViolation { probe: i, n: lc.n, lhs, bound });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateViolation {
    pub probe: usize,
    pub n: usize,
    pub lhs: f64,
    pub bound: f64,
}

/// Evidence that no shift `r ≤ r_max` bounds the ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureWitness {
    pub r: usize,
    pub n: usize,
    /// Probe maximizing the ratio at `(n, r)`.
    pub probe: usize,
    pub ratio: f64,
    /// `(truncation degree, max ratio)` showing the growth.
    pub profile: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum Certification {
    Certified(TamenessCertificate),
    Failed(FailureWitness),
}

impl Certification {
    pub fn certificate(&self) -> Option<&TamenessCertificate> {
        match self {
            Certification::Certified(c) => Some(c),
            Certification::Failed(_) => None,
        }
    }

    pub fn witness(&self) -> Option<&FailureWitness> {
        match self {
            Certification::Certified(_) => None,
            Certification::Failed(w) => Some(w),
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, Certification::Certified(_))
    }
}

/// Seminorm values of one probe: `lhs[n]` for the bounded side and
/// `rhs[m]` for the bounding side, both for `n, m = 0..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeNorms {
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
}

/// All probes evaluated after truncation at `degree`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioTable {
    pub degree: usize,
    pub probes: Vec<ProbeNorms>,
}

impl RatioTable {
    fn ratio(&self, probe: usize, n: usize, r: usize, form: BoundForm) -> Option<f64> {
        let p = &self.probes[probe];
        let lhs = p.lhs[n];
        let den = form.denominator(p.rhs[n + r]);
        if den == 0.0 {
            return if lhs == 0.0 { None } else { Some(f64::INFINITY) };
        }
        Some(lhs / den)
    }

    /// Largest ratio and the probe attaining it; excluded (0/0) probes are
    /// skipped.
    pub fn max_ratio(&self, n: usize, r: usize, form: BoundForm) -> (f64, Option<usize>) {
        let mut best = (0.0, None);
        for i in 0..self.probes.len() {
            if let Some(q) = self.ratio(i, n, r, form) {
                if q.is_nan() || best.1.is_none() || q > best.0 {
                    best = (if q.is_nan() { f64::INFINITY } else { q }, Some(i));
                }
            }
        }
        best
    }
}

/// Truncation degrees used for the growth profile of degree `k`.
pub fn profile_degrees(k: usize) -> Vec<usize> {
    let mut out: Vec<usize> = [k.div_ceil(4), k.div_ceil(2), k].into_iter().collect();
    out.dedup();
    if k < 4 {
        out = alloc::vec![k];
    }
    out
}

/// Sustained growth test on an ascending sequence of maxima.
pub fn grows_without_bound(values: &[f64], tol: Tolerance) -> bool {
    if values.iter().any(|v| !v.is_finite()) {
        return true;
    }
    if values.len() < 3 {
        return false;
    }
    let grows = |a: f64, b: f64| b > GROWTH_FACTOR * a + tol.slack(a);
    let last = &values[values.len() - 3..];
    grows(last[0], last[1]) && grows(last[1], last[2])
}

pub(crate) struct Search<'a> {
    /// Ascending truncation degrees; the last table is the full probe set.
    pub tables: &'a [RatioTable],
    pub form: BoundForm,
    pub r_max: usize,
    pub b: usize,
    pub n_max: usize,
    pub tol: Tolerance,
}

impl Search<'_> {
    fn full(&self) -> &RatioTable {
        self.tables.last().expect("at least one table")
    }

    fn profile(&self, n: usize, r: usize) -> Vec<(usize, f64)> {
        self.tables.iter().map(|t| (t.degree, t.max_ratio(n, r, self.form).0)).collect()
    }

    /// Ratios at exactly shift `r`; `None` if some level is unbounded.
    fn at_shift(&self, r: usize) -> core::result::Result<TamenessCertificate, (usize, Vec<(usize, f64)>)> {
        let mut constants = Vec::new();
        for n in self.b..=self.n_max - r {
            let profile = self.profile(n, r);
            let values: Vec<f64> = profile.iter().map(|p| p.1).collect();
            if grows_without_bound(&values, self.tol) {
                return Err((n, profile));
            }
            let observed = self.full().max_ratio(n, r, self.form).0;
            constants.push(LevelConstant { n, c: observed.max(f64::MIN_POSITIVE), max_ratio: Some(observed) });
        }
        let max_ratio_observed = constants.iter().filter_map(|lc| lc.max_ratio).reduce(f64::max);
        Ok(TamenessCertificate {
            r,
            b: self.b,
            n_max: self.n_max,
            form: self.form,
            provenance: Provenance::Empirical,
            constants,
            probe_count: self.full().probes.len(),
            max_ratio_observed,
        })
    }

    pub fn run(&self) -> Result<Certification> {
        if self.b > self.n_max {
            return Err(Error::range("b", self.b as f64, self.n_max as f64));
        }
        let top = self.r_max.min(self.n_max - self.b);
        let mut last_failure = None;
        for r in 0..=top {
            match self.at_shift(r) {
                Ok(cert) => return Ok(Certification::Certified(cert)),
                Err(fail) => last_failure = Some((r, fail)),
            }
        }
        let (r, (n, profile)) = last_failure.expect("loop runs at least once");
        let (ratio, probe) = self.full().max_ratio(n, r, self.form);
        Ok(Certification::Failed(FailureWitness { r, n, probe: probe.unwrap_or(0), ratio, profile }))
    }

    /// Certificate at a fixed shift without the growth test.
    pub fn fixed(&self, r: usize) -> Result<TamenessCertificate> {
        if r > self.n_max || self.b > self.n_max - r {
            return Err(Error::invalid("shift leaves no admissible level"));
        }
        let no_profile = Search { tables: core::slice::from_ref(self.full()), ..*self };
        no_profile.at_shift(r).map_err(|_| Error::invalid("infinite ratio at fixed shift"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn profile_degrees_for_common_truncations() {
        assert_eq!(profile_degrees(32), vec![8, 16, 32]);
        assert_eq!(profile_degrees(16), vec![4, 8, 16]);
        assert_eq!(profile_degrees(2), vec![2]);
    }

    #[test]
    fn growth_test() {
        let tol = Tolerance::DEFAULT;
        assert!(grows_without_bound(&[9.0, 17.0, 33.0], tol));
        assert!(!grows_without_bound(&[1.5, 1.58, 1.58198], tol));
        assert!(!grows_without_bound(&[1.0, 3.0, 3.1], tol));
        assert!(grows_without_bound(&[1.0, f64::INFINITY], tol));
        assert!(!grows_without_bound(&[1e10], tol));
    }

    #[test]
    fn analytic_certificate_levels() {
        let c = TamenessCertificate::analytic(1, 0, 6, BoundForm::Linear, |_| 2.0).unwrap();
        assert_eq!(c.levels().collect::<Vec<_>>(), vec![0, 1, 2, 3, 4, 5]);
        assert!(TamenessCertificate::analytic(0, 0, 3, BoundForm::Linear, |_| 0.0).is_err());
        assert!(TamenessCertificate::analytic(4, 0, 3, BoundForm::Linear, |_| 1.0).is_err());
    }

    #[test]
    fn zero_over_zero_is_excluded() {
        let t = RatioTable {
            degree: 0,
            probes: vec![ProbeNorms { lhs: vec![0.0], rhs: vec![0.0] }, ProbeNorms { lhs: vec![1.0], rhs: vec![2.0] }],
        };
        assert_eq!(t.max_ratio(0, 0, BoundForm::Linear), (0.5, Some(1)));
        assert_eq!(t.max_ratio(0, 0, BoundForm::Affine), (1.0 / 3.0, Some(1)));
    }
}
