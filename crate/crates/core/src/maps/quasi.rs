//! Two-sided affine norm comparison for maps between single-norm spaces.
//!
//! With one norm on each side a tame isomorphism with tame inverse is a
//! quasi-isometry: `(1/C₂)‖f‖ − 1 ≤ ‖Φ(f)‖ ≤ C₁(1+‖f‖)`. `C₁` bounds
//! `‖Φf‖/(1+‖f‖)` and `C₂` bounds `‖Φ⁻¹g‖/(1+‖g‖)`. Boundedness is judged by
//! the growth of the maximal ratio over the probe shells `‖f‖ ≤ ρ/100`,
//! `ρ/10`, `ρ`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Element, TameMapDescriptor};
use crate::certificate::grows_without_bound;
use crate::{Error, Result, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiIsometryWitness {
    pub probe: usize,
    /// `‖f‖` of the probe.
    pub norm: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiIsometryReport {
    /// `max ‖Φf‖/(1+‖f‖)`.
    pub c1: f64,
    /// `max ‖f‖/(1+‖Φf‖)`.
    pub c2: f64,
    /// `max ‖Φf‖/‖f‖` over nonzero probes.
    pub c1_linear: Option<f64>,
    /// `max ‖f‖/‖Φf‖` over probes with nonzero image.
    pub c2_linear: Option<f64>,
    pub upper_bounded: bool,
    pub lower_bounded: bool,
    /// Probe attaining `c1` when the upper bound grows.
    pub upper_witness: Option<QuasiIsometryWitness>,
    pub lower_witness: Option<QuasiIsometryWitness>,
    pub upper_shells: Vec<f64>,
    pub lower_shells: Vec<f64>,
    pub probe_count: usize,
}

impl QuasiIsometryReport {
    pub fn is_quasi_isometry(&self) -> bool {
        self.upper_bounded && self.lower_bounded
    }
}

fn shells(args: &[f64], ratios: &[f64]) -> Vec<f64> {
    let rho = args.iter().copied().fold(0.0, f64::max);
    [rho / 100.0, rho / 10.0, rho]
        .iter()
        .filter_map(|&cut| {
            args.iter().zip(ratios).filter(|(a, _)| **a <= cut).map(|(_, r)| *r).reduce(f64::max)
        })
        .collect()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub fn quasi_isometry_check(
    map: &TameMapDescriptor,
    inverse: &TameMapDescriptor,
    probes: &[Element],
    tol: Tolerance,
) -> Result<QuasiIsometryReport> {
    if probes.is_empty() {
        return Err(Error::invalid("empty probe set"));
    }
    if map.domain().n_max() != 0 || map.codomain().n_max() != 0 {
        return Err(Error::invalid("quasi-isometry check needs single-norm spaces (n_max = 0)"));
    }
    if !inverse.domain().compatible(map.codomain()) || !inverse.codomain().compatible(map.domain()) {
        return Err(Error::invalid("inverse does not map the codomain back to the domain"));
    }
    let (mut nf, mut ng) = (Vec::with_capacity(probes.len()), Vec::with_capacity(probes.len()));
    for (i, f) in probes.iter().enumerate() {
        let g = map.apply(f)?;
        let back = inverse.apply(&g)?;
        let norm_f = map.domain().norm(f, 0)?;
        let error = map.domain().norm(&back.try_add(f, -1.0)?, 0)?;
        if error > tol.slack(norm_f) {
            return Err(Error::InconsistentInverse { probe: i, error });
        }
        nf.push(norm_f);
        ng.push(map.codomain().norm(&g, 0)?);
    }
    let upper: Vec<f64> = nf.iter().zip(&ng).map(|(f, g)| g / (1.0 + f)).collect();
    let lower: Vec<f64> = nf.iter().zip(&ng).map(|(f, g)| f / (1.0 + g)).collect();
    let linear = |num: &[f64], den: &[f64]| {
        num.iter().zip(den).filter(|(_, d)| **d > 0.0).map(|(n, d)| n / d).reduce(f64::max)
    };
    let upper_shells = shells(&nf, &upper);
    let lower_shells = shells(&nf, &lower);
    let upper_bounded = !grows_without_bound(&upper_shells, tol);
    let lower_bounded = !grows_without_bound(&lower_shells, tol);
    let witness = |ratios: &[f64], norms: &[f64]| {
        let probe = argmax(ratios);
        QuasiIsometryWitness { probe, norm: norms[probe], ratio: ratios[probe] }
    };
    Ok(QuasiIsometryReport {
        c1: upper.iter().copied().fold(0.0, f64::max),
        c2: lower.iter().copied().fold(0.0, f64::max),
        c1_linear: linear(&ng, &nf),
        c2_linear: linear(&nf, &ng),
        upper_bounded,
        lower_bounded,
        upper_witness: (!upper_bounded).then(|| witness(&upper, &nf)),
        lower_witness: (!lower_bounded).then(|| witness(&lower, &nf)),
        upper_shells,
        lower_shells,
        probe_count: probes.len(),
    })
}
