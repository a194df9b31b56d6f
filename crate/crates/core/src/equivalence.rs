//! Empirical tame equivalence of two gradings.

use alloc::vec::Vec;

use crate::certificate::{profile_degrees, BoundForm, Certification, ProbeNorms, RatioTable, Search};
use crate::exec::{Executor, Sequential};
use crate::grading::Grading;
use crate::sequence::TruncatedSequence;
use crate::{Error, Result, Tolerance};

#[derive(Debug, Clone)]
pub struct GradingEquivalence {
    /// `‖f‖_{a,n} ≤ C(n)‖f‖_{b,n+r}`.
    pub forward: Certification,
    /// `‖f‖_{b,n} ≤ C(n)‖f‖_{a,n+r}`.
    pub backward: Certification,
    /// Full-degree tables used for the two directions, kept for
    /// re-validation.
    pub forward_table: RatioTable,
    pub backward_table: RatioTable,
}

impl GradingEquivalence {
    pub fn is_equivalent(&self) -> bool {
        self.forward.is_certified() && self.backward.is_certified()
    }
}

fn tables<E: Executor>(
    lhs: &Grading,
    rhs: &Grading,
    probes: &[TruncatedSequence],
    exec: &E,
) -> Result<Vec<RatioTable>> {
    let degree = probes.iter().map(TruncatedSequence::degree).max().unwrap_or(0);
    let mut out = Vec::new();
    for j in profile_degrees(degree) {
        let rows = exec.map_indexed(probes.len(), |i| -> Result<ProbeNorms> {
            let f = probes[i].truncated(j);
            Ok(ProbeNorms { lhs: lhs.profile(&f)?, rhs: rhs.profile(&f)? })
        });
        out.push(RatioTable { degree: j, probes: rows.into_iter().collect::<Result<_>>()? });
    }
    Ok(out)
}

pub fn certify_grading_equivalence(
    a: &Grading,
    b: &Grading,
    probes: &[TruncatedSequence],
    r_max: usize,
) -> Result<GradingEquivalence> {
    certify_grading_equivalence_with(a, b, probes, r_max, Tolerance::DEFAULT, &Sequential)
}

pub fn certify_grading_equivalence_with<E: Executor>(
    a: &Grading,
    b: &Grading,
    probes: &[TruncatedSequence],
    r_max: usize,
    tol: Tolerance,
    exec: &E,
) -> Result<GradingEquivalence> {
    if a.n_max() != b.n_max() {
        return Err(Error::invalid(alloc::format!(
            "gradings must share an index range (0..={} vs 0..={})",
            a.n_max(),
            b.n_max()
        )));
    }
    let n_max = a.n_max();
    if r_max > n_max {
        return Err(Error::range("r_max", r_max as f64, n_max as f64));
    }
    if probes.is_empty() || probes.iter().all(TruncatedSequence::is_zero) {
        return Err(Error::invalid("probe set is empty or all zero"));
    }
    let direction = |lhs: &Grading, rhs: &Grading| -> Result<(Certification, RatioTable)> {
        let ts = tables(lhs, rhs, probes, exec)?;
        let search = Search { tables: &ts, form: BoundForm::Linear, r_max, b: 0, n_max, tol };
        let outcome = search.run()?;
        Ok((outcome, ts.into_iter().last().expect("nonempty")))
    };
    let (forward, forward_table) = direction(a, b)?;
    let (backward, backward_table) = direction(b, a)?;
    Ok(GradingEquivalence { forward, backward, forward_table, backward_table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::BanachFiber;
    use crate::geometric_constant;
    use crate::probes::{generate, ProbeConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn probes(count: usize, degree: usize) -> Vec<TruncatedSequence> {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        generate(BanachFiber::real_euclidean(2).unwrap(), degree, &ProbeConfig { count, ..Default::default() }, &mut rng)
    }

    #[test]
    fn linf_bounded_by_l1_without_shift() {
        let ps = probes(200, 32);
        let eq = certify_grading_equivalence(&Grading::linf(6), &Grading::l1(6), &ps, 2).unwrap();
        let cert = eq.forward.certificate().expect("linf <= l1");
        assert_eq!((cert.r, cert.b), (0, 0));
        // oracle: termwise max of summands ≤ their sum, attained by monomials
        for lc in &cert.constants {
            assert!(lc.c <= 1.0);
            assert_eq!(lc.c, 1.0);
        }
        assert!(cert.validate(&eq.forward_table, Tolerance::DEFAULT).is_empty());
    }

    #[test]
    fn l1_needs_one_shift_over_linf() {
        let ps = probes(300, 32);
        let eq = certify_grading_equivalence(&Grading::l1(6), &Grading::linf(6), &ps, 2).unwrap();
        let cert = eq.forward.certificate().expect("l1 <= C linf_{n+1}");
        assert_eq!(cert.r, 1);
        // oracle: Σ_{k≥0} e^{-k} by explicit partial sums
        let oracle: f64 = (0..200).map(|k| libm::exp(-(k as f64))).sum();
        assert!((oracle - geometric_constant()).abs() < 1e-14);
        assert!(cert.max_ratio_observed.unwrap() <= oracle + 1e-9);
        assert!(cert.validate(&eq.forward_table, Tolerance::DEFAULT).is_empty());
    }

    #[test]
    fn identical_gradings_are_zero_zero_one() {
        let ps = probes(64, 16);
        let eq = certify_grading_equivalence(&Grading::l1(4), &Grading::l1(4), &ps, 1).unwrap();
        for c in [&eq.forward, &eq.backward] {
            let cert = c.certificate().unwrap();
            assert_eq!((cert.r, cert.b), (0, 0));
            assert!(cert.constants.iter().all(|lc| lc.c == 1.0));
        }
    }

    #[test]
    fn decreasing_family_is_not_equivalent() {
        let ps = probes(128, 32);
        let eq = certify_grading_equivalence(&Grading::l1(6), &Grading::decreasing(6), &ps, 2).unwrap();
        let w = eq.forward.witness().expect("l1 over decreasing is unbounded");
        assert_eq!(w.r, 2);
        assert!(w.n >= 1);
        // the ratio at the witness level grows like e^{n·j} with the truncation degree j
        let ratios: Vec<f64> = w.profile.iter().map(|p| p.1).collect();
        assert!(ratios.windows(2).all(|p| p[1] > 10.0 * p[0]));
        // direct evaluation at the witness probe reproduces the reported ratio
        let f = &ps[w.probe];
        let direct = Grading::l1(6).eval(f, w.n).unwrap() / Grading::decreasing(6).eval(f, w.n + w.r).unwrap();
        assert!((direct - w.ratio).abs() <= 1e-12 * w.ratio);
    }

    #[test]
    fn mismatched_ranges_and_degenerate_probes_are_rejected() {
        let ps = probes(8, 8);
        assert!(matches!(
            certify_grading_equivalence(&Grading::l1(4), &Grading::linf(5), &ps, 1),
            Err(Error::InvalidInput(_))
        ));
        let zeros = alloc::vec![TruncatedSequence::zeros(BanachFiber::real_line(), 4); 3];
        assert!(matches!(
            certify_grading_equivalence(&Grading::l1(4), &Grading::linf(4), &zeros, 1),
            Err(Error::InvalidInput(_))
        ));
        assert!(certify_grading_equivalence(&Grading::l1(4), &Grading::linf(4), &ps, 5).is_err());
    }
}
