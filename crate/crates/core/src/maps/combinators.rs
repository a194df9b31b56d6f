//! Certificate algebra for projections, finite products and compositions.

use alloc::vec::Vec;

use super::GradedSpace;
use crate::certificate::{BoundForm, LevelConstant, Provenance, TamenessCertificate};
use crate::{Error, Result};

/// Projection onto factor `i` (1-based) of `space`: `(0, 0, 1)`.
pub fn certify_projection(i: usize, space: &GradedSpace) -> Result<TamenessCertificate> {
    if i == 0 || i > space.factor_count() {
        return Err(Error::range("factor index", i as f64, space.factor_count() as f64));
    }
    TamenessCertificate::analytic(0, 0, space.n_max(), BoundForm::Linear, |_| 1.0)
}

/// `(max r_i, max b_i, Σ C_i(n))` for `f ↦ (Φ_1 f, …, Φ_k f)`.
pub fn combine_product(certs: &[TamenessCertificate]) -> Result<TamenessCertificate> {
    let first = certs.first().ok_or_else(|| Error::invalid("no certificates to combine"))?;
    if certs.len() == 1 {
        return Ok(first.clone());
    }
    let n_max = first.n_max;
    if certs.iter().any(|c| c.n_max != n_max) {
        return Err(Error::invalid("certificates cover different index ranges"));
    }
    let r = certs.iter().map(|c| c.r).max().expect("nonempty");
    let b = certs.iter().map(|c| c.b).max().expect("nonempty");
    if b > n_max - r {
        return Err(Error::invalid("combined certificate has no admissible level"));
    }
    let form = if certs.iter().any(|c| c.form == BoundForm::Affine) { BoundForm::Affine } else { BoundForm::Linear };
    let mut constants = Vec::new();
    for n in b..=n_max - r {
        let mut c = 0.0;
        for cert in certs {
            c += cert.constant(n).ok_or_else(|| Error::invalid("certificate is silent at a combined level"))?;
        }
        constants.push(LevelConstant { n, c, max_ratio: None });
    }
    let out = TamenessCertificate {
        r,
        b,
        n_max,
        form,
        provenance: combined_provenance(certs),
        constants,
        probe_count: certs.iter().map(|c| c.probe_count).max().unwrap_or(0),
        max_ratio_observed: None,
    };
    out.check_constants()?;
    Ok(out)
}

fn combined_provenance(certs: &[TamenessCertificate]) -> Provenance {
    if certs.iter().any(|c| c.provenance == Provenance::Empirical) {
        Provenance::Empirical
    } else if certs.iter().any(|c| c.provenance == Provenance::Derived) {
        Provenance::Derived
    } else {
        Provenance::Analytic
    }
}

/// `outer ∘ inner` for linear certificates:
/// `(r_o + r_i, max(b_o, b_i), C_o(n)·C_i(n + r_o))`.
///
/// Affine bounds do not substitute into each other without tracking the
/// region of the inner map, so those compositions are left to direct
/// certification.
pub fn certify_composition(outer: &TamenessCertificate, inner: &TamenessCertificate) -> Result<TamenessCertificate> {
    if outer.form != BoundForm::Linear || inner.form != BoundForm::Linear {
        return Err(Error::EmpiricalOnly);
    }
    if outer.n_max != inner.n_max {
        return Err(Error::invalid("certificates cover different index ranges"));
    }
    let n_max = outer.n_max;
    let r = outer.r + inner.r;
    let b = outer.b.max(inner.b);
    if r > n_max || b > n_max - r {
        return Err(Error::invalid(alloc::format!("composed shift {r} leaves no level below {n_max}")));
    }
    let mut constants = Vec::new();
    for n in b..=n_max - r {
        let (Some(co), Some(ci)) = (outer.constant(n), inner.constant(n + outer.r)) else {
            continue;
        };
        constants.push(LevelConstant { n, c: co * ci, max_ratio: None });
    }
    if constants.is_empty() {
        return Err(Error::invalid("composed certificate has no admissible level"));
    }
    let out = TamenessCertificate {
        r,
        b,
        n_max,
        form: BoundForm::Linear,
        provenance: Provenance::Derived,
        constants,
        probe_count: outer.probe_count.max(inner.probe_count),
        max_ratio_observed: None,
    };
    out.check_constants()?;
    Ok(out)
}
