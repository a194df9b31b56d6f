//! Seminorm families on truncated sequences.
//!
//! The two standard gradings of `Σ(B)` are
//!
//! ```text
//! ‖f‖_{l1,n}   = Σ_k e^{nk} ‖f_k‖_B
//! ‖f‖_{linf,n} = max_k e^{nk} ‖f_k‖_B
//! ```
//!
//! and `‖f‖_{l2,n} = (Σ_k e^{2nk} ‖f_k‖²)^{1/2}` is the metric grading used
//! for spheres.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::fiber::NormKind;
use crate::sequence::TruncatedSequence;
use crate::{Error, Result, Tolerance, MAX_EXPONENT};

fn check_exponent(f: &TruncatedSequence, n: usize) -> Result<()> {
    if n.saturating_mul(f.degree()) > MAX_EXPONENT {
        return Err(Error::range("n*K", (n * f.degree()) as f64, MAX_EXPONENT as f64));
    }
    Ok(())
}

#[inline]
fn weight(n: usize, k: usize) -> f64 {
    libm::exp((n * k) as f64)
}

/// `Σ_k e^{nk}‖f_k‖_B`, summed in ascending `k`.
pub fn seminorm_l1(f: &TruncatedSequence, n: usize) -> Result<f64> {
    check_exponent(f, n)?;
    let mut acc = 0.0;
    for (k, norm) in f.coefficient_norms().enumerate() {
        acc += weight(n, k) * norm;
    }
    Ok(acc)
}

/// `max_k e^{nk}‖f_k‖_B`.
pub fn seminorm_linf(f: &TruncatedSequence, n: usize) -> Result<f64> {
    check_exponent(f, n)?;
    Ok(f.coefficient_norms().enumerate().map(|(k, norm)| weight(n, k) * norm).fold(0.0, f64::max))
}

/// `(Σ_k e^{2nk}‖f_k‖²)^{1/2}`.
pub fn seminorm_l2(f: &TruncatedSequence, n: usize) -> Result<f64> {
    check_exponent(f, n)?;
    let mut acc = 0.0;
    for (k, norm) in f.coefficient_norms().enumerate() {
        let t = weight(n, k) * norm;
        acc += t * t;
    }
    Ok(libm::sqrt(acc))
}

pub type SeminormFn = dyn Fn(&TruncatedSequence, usize) -> Result<f64> + Send + Sync;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradingKind {
    L1,
    Linf,
    Custom,
}

/// An indexed family `{‖·‖_n : n = 0..=n_max}` of seminorm evaluators.
#[derive(Clone)]
pub struct Grading {
    name: String,
    kind: GradingKind,
    n_max: usize,
    metric: bool,
    custom: Option<Arc<SeminormFn>>,
}

impl fmt::Debug for Grading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grading").field("name", &self.name).field("kind", &self.kind).field("n_max", &self.n_max).finish()
    }
}

impl Grading {
    pub fn l1(n_max: usize) -> Self {
        Grading { name: "l1".into(), kind: GradingKind::L1, n_max, metric: false, custom: None }
    }

    pub fn linf(n_max: usize) -> Self {
        Grading { name: "linf".into(), kind: GradingKind::Linf, n_max, metric: false, custom: None }
    }

    /// Weighted `l2` grading `⟨f,f⟩_n^{1/2}`; induced by an inner product on
    /// Euclidean fibers.
    pub fn l2(n_max: usize) -> Self {
        let mut g = Self::custom("l2", n_max, seminorm_l2);
        g.metric = true;
        g
    }

    pub fn custom(
        name: impl Into<String>,
        n_max: usize,
        eval: impl Fn(&TruncatedSequence, usize) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        Grading { name: name.into(), kind: GradingKind::Custom, n_max, metric: false, custom: Some(Arc::new(eval)) }
    }

    /// `‖f‖_n := e^{-n}·‖f‖_{l1,0}`. Strictly decreasing in `n`, so it is
    /// not a grading; kept as a negative control.
    pub fn decreasing(n_max: usize) -> Self {
        Self::custom("decreasing", n_max, |f, n| Ok(libm::exp(-(n as f64)) * seminorm_l1(f, 0)?))
    }

    /// Resolves `l1`, `linf`, `l2` and `decreasing`.
    pub fn by_name(name: &str, n_max: usize) -> Result<Self> {
        match name {
            "l1" => Ok(Self::l1(n_max)),
            "linf" => Ok(Self::linf(n_max)),
            "l2" => Ok(Self::l2(n_max)),
            "decreasing" => Ok(Self::decreasing(n_max)),
            other => Err(Error::invalid(alloc::format!("unknown grading '{other}'"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> GradingKind {
        self.kind
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Same family restricted to (or extended to) a different top index.
    pub fn with_n_max(&self, n_max: usize) -> Self {
        Grading { n_max, ..self.clone() }
    }

    /// Whether the seminorm is induced by an inner product; requires a
    /// Euclidean fiber as well, see [`Grading::is_metric_on`].
    pub fn is_metric(&self) -> bool {
        self.metric
    }

    pub fn is_metric_on(&self, norm: NormKind) -> bool {
        self.metric && norm == NormKind::Euclidean
    }

    pub fn eval(&self, f: &TruncatedSequence, n: usize) -> Result<f64> {
        if n > self.n_max {
            return Err(Error::range("seminorm index", n as f64, self.n_max as f64));
        }
        match (&self.kind, &self.custom) {
            (GradingKind::L1, _) => seminorm_l1(f, n),
            (GradingKind::Linf, _) => seminorm_linf(f, n),
            (GradingKind::Custom, Some(eval)) => eval(f, n),
            (GradingKind::Custom, None) => unreachable!("custom grading without evaluator"),
        }
    }

    /// `[‖f‖_0, …, ‖f‖_{n_max}]`.
    pub fn profile(&self, f: &TruncatedSequence) -> Result<Vec<f64>> {
        (0..=self.n_max).map(|n| self.eval(f, n)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityViolation {
    pub probe: usize,
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradingValidation {
    pub grading: String,
    pub probe_count: usize,
    /// `(probe, n)` with `‖f‖_n > ‖f‖_{n+1} + tol`.
    pub monotonicity: Vec<MonotonicityViolation>,
    /// Nonzero probes on which every seminorm vanishes.
    pub definiteness: Vec<usize>,
}

impl GradingValidation {
    pub fn passed(&self) -> bool {
        self.monotonicity.is_empty() && self.definiteness.is_empty()
    }
}

/// Checks `‖f‖_0 ≤ ‖f‖_1 ≤ …` and definiteness on every probe.
pub fn validate_grading(g: &Grading, probes: &[TruncatedSequence], tol: Tolerance) -> Result<GradingValidation> {
    if probes.is_empty() {
        return Err(Error::invalid("grading validation needs at least one probe"));
    }
    let mut monotonicity = Vec::new();
    let mut definiteness = Vec::new();
    for (i, f) in probes.iter().enumerate() {
        let values = g.profile(f)?;
        for (n, w) in values.windows(2).enumerate() {
            if !tol.le(w[0], w[1]) {
                monotonicity.push(MonotonicityViolation { probe: i, n, lower: w[0], upper: w[1] });
            }
        }
        if !f.is_zero() && values.iter().all(|&v| v == 0.0) {
            definiteness.push(i);
        }
    }
    Ok(GradingValidation { grading: g.name().to_string(), probe_count: probes.len(), monotonicity, definiteness })
}
