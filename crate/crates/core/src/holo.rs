//! Coefficient sequences as entire functions `f(z) = Σ f_k z^k`.
//!
//! Disk sup-norms are estimated on the boundary circle (maximum modulus).
//! Coefficients are recovered from boundary samples by the discrete Cauchy
//! integral
//!
//! ```text
//! f_k ≈ (1/M) Σ_j f(R ω^j) R^{-k} ω^{-jk},   ω = e^{2πi/M},
//! ```
//!
//! which is exact for polynomials of degree `< M`.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fiber::{BanachFiber, FiberPoint};
use crate::grading::seminorm_linf;
use crate::sequence::TruncatedSequence;
use crate::{Error, Result, Tolerance};

/// Default number of boundary samples.
pub const DEFAULT_SAMPLES: usize = 256;

/// Tolerance on imaginary parts for the real-form check.
pub const REAL_FORM_TOL: f64 = 1e-12;

/// Closed disk `B(0, e^level)` sampled at `samples` boundary points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskSpec {
    level: usize,
    samples: usize,
    radius: f64,
}

impl DiskSpec {
    pub fn new(level: usize, samples: usize) -> Result<Self> {
        if samples < 8 {
            return Err(Error::invalid("a disk needs at least 8 boundary samples"));
        }
        Ok(DiskSpec { level, samples, radius: libm::exp(level as f64) })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `R·ω^j` for `j = 0..M`.
    pub fn boundary_points(&self) -> Vec<Complex64> {
        circle_points(self.radius, self.samples)
    }
}

/// `j/M` turns reduced mod `M` keeps the twiddles exact at `j·k ≡ 0`.
fn root_of_unity(j: usize, m: usize) -> Complex64 {
    let theta = TAU * ((j % m) as f64) / m as f64;
    Complex64::new(libm::cos(theta), libm::sin(theta))
}

pub fn circle_points(radius: f64, samples: usize) -> Vec<Complex64> {
    (0..samples).map(|j| root_of_unity(j, samples) * radius).collect()
}

/// Horner evaluation of `Σ_{k≤K} f_k z^k`, coordinatewise on the fiber.
/// `|z|` may not exceed `e^{n_max}`.
pub fn eval_series(f: &TruncatedSequence, z: Complex64, n_max: usize) -> Result<FiberPoint> {
    let guard = libm::exp(n_max as f64);
    if !(z.norm() <= guard) {
        return Err(Error::range("|z|", z.norm(), guard));
    }
    Ok(horner(f, z))
}

fn horner(f: &TruncatedSequence, z: Complex64) -> FiberPoint {
    let coeffs = f.coefficients();
    let mut acc: Vec<Complex64> = coeffs[coeffs.len() - 1].0.clone();
    for c in coeffs.iter().rev().skip(1) {
        for (a, &ck) in acc.iter_mut().zip(c.iter()) {
            *a = *a * z + ck;
        }
    }
    FiberPoint(acc)
}

/// `f(R ω^j)` for the disk's boundary nodes.
pub fn boundary_samples(f: &TruncatedSequence, disk: &DiskSpec) -> Vec<FiberPoint> {
    disk.boundary_points().into_iter().map(|z| horner(f, z)).collect()
}

/// Max of `‖f(z)‖` over the boundary nodes; a lower estimate of the disk
/// supremum.
pub fn sup_norm_disk(f: &TruncatedSequence, disk: &DiskSpec) -> f64 {
    let fiber = f.fiber().complexified();
    boundary_samples(f, disk).iter().map(|v| fiber.norm(v)).fold(0.0, f64::max)
}

/// Discrete Cauchy integral over `M = values.len()` samples on the circle of
/// radius `radius`. Needs `M ≥ 2K + 2`.
pub fn coefficients_from_boundary(
    values: &[FiberPoint],
    radius: f64,
    degree: usize,
    fiber: BanachFiber,
) -> Result<TruncatedSequence> {
    let m = values.len();
    let needed = 2 * degree + 2;
    if m < needed {
        return Err(Error::Aliasing { samples: m, degree, needed });
    }
    if !(radius > 0.0) {
        return Err(Error::invalid("recovery radius must be positive"));
    }
    let fiber = fiber.complexified();
    for v in values {
        fiber.check(v)?;
    }
    let mut coefficients = Vec::with_capacity(degree + 1);
    for k in 0..=degree {
        let mut acc = alloc::vec![Complex64::new(0.0, 0.0); fiber.dim()];
        for (j, v) in values.iter().enumerate() {
            let w = root_of_unity(j * k, m).conj();
            for (a, &x) in acc.iter_mut().zip(v.iter()) {
                *a += x * w;
            }
        }
        let scale = 1.0 / (m as f64 * libm::pow(radius, k as f64));
        coefficients.push(FiberPoint(acc.into_iter().map(|a| a * scale).collect()));
    }
    TruncatedSequence::new(fiber, coefficients)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyBoundReport {
    /// `‖f‖_{linf,n} = max_k e^{nk}‖f_k‖`.
    pub bound_lhs: f64,
    /// Sampled `sup_{|z|=e^n} ‖f(z)‖`.
    pub bound_rhs: f64,
    pub slack: f64,
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub holds: bool,
}

/// Checks `max_k e^{nk}‖f_k‖ ≤ sup_{B(0,e^n)}‖f‖`. With `M > K` samples the
/// discrete inequality holds exactly, so any failure is roundoff.
pub fn verify_cauchy_bound(f: &TruncatedSequence, n: usize, samples: usize, tol: Tolerance) -> Result<CauchyBoundReport> {
    let disk = DiskSpec::new(n, samples)?;
    let bound_lhs = seminorm_linf(f, n)?;
    let bound_rhs = sup_norm_disk(f, &disk);
    let slack = bound_rhs - bound_lhs;
    Ok(CauchyBoundReport { bound_lhs, bound_rhs, slack, n, m: samples, holds: tol.le(bound_lhs, bound_rhs) })
}

/// All coefficients real within [`REAL_FORM_TOL`]; equivalent to
/// `conj(f(z)) = f(conj z)` for power series.
pub fn check_real_form(f: &TruncatedSequence) -> bool {
    f.coefficients().iter().all(|c| c.iter().all(|z| libm::fabs(z.im) <= REAL_FORM_TOL))
}

/// Sampled conjugation symmetry `conj(f(z)) = f(conj z)`.
pub fn conjugation_symmetric_at(f: &TruncatedSequence, points: &[Complex64]) -> bool {
    let fiber = f.fiber().complexified();
    points.iter().all(|&z| {
        let lhs = horner(f, z).conj();
        let rhs = horner(f, z.conj());
        let scale: f64 = f.coefficient_norms().enumerate().map(|(k, c)| c * libm::pow(z.norm(), k as f64)).sum();
        let diff = lhs.zip_with(&rhs, |a, b| a - b);
        fiber.norm(&diff) <= 4.0 * REAL_FORM_TOL * (1.0 + scale)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::{NormKind, ScalarField};
    use crate::grading::seminorm_l1;
    use crate::probes::{decaying, generate, ProbeConfig};
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn inverse_factorials(k: usize) -> Vec<f64> {
        let mut out = vec![1.0];
        for i in 1..=k {
            let last = *out.last().unwrap();
            out.push(last / i as f64);
        }
        out
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_series_evaluates_to_its_coefficient() {
        let fiber = BanachFiber::real_euclidean(2).unwrap();
        let mut coeffs = vec![fiber.zero(); 5];
        coeffs[0] = FiberPoint::from_real(&[2.0, -1.0]);
        let f = TruncatedSequence::new(fiber, coeffs).unwrap();
        let v = eval_series(&f, c(3.0, -2.0), 8).unwrap();
        assert_eq!(v, FiberPoint(vec![c(2.0, 0.0), c(-1.0, 0.0)]));
    }

    #[test]
    fn truncated_exponential_at_one() {
        // oracle: remainder of the exponential series after 32 terms is below 1/33!
        let f = TruncatedSequence::real_scalars(&inverse_factorials(32)).unwrap();
        let v = eval_series(&f, c(1.0, 0.0), 8).unwrap();
        assert!((v[0].re - core::f64::consts::E).abs() < 1e-12);
        assert_eq!(v[0].im, 0.0);
    }

    #[test]
    fn identity_series() {
        let f = TruncatedSequence::real_scalars(&[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(eval_series(&f, c(2.0, 1.0), 8).unwrap()[0], c(2.0, 1.0));
    }

    #[test]
    fn evaluation_guard() {
        let f = TruncatedSequence::real_scalars(&[1.0]).unwrap();
        assert!(eval_series(&f, c(libm::exp(2.0) * 1.001, 0.0), 2).is_err());
    }

    #[test]
    fn sup_norm_examples() {
        let e = TruncatedSequence::real_scalars(&inverse_factorials(32)).unwrap();
        let sup = sup_norm_disk(&e, &DiskSpec::new(0, 256).unwrap());
        assert!((sup - core::f64::consts::E).abs() < 1e-12);

        let z = TruncatedSequence::real_scalars(&[0.0, 1.0]).unwrap();
        let sup = sup_norm_disk(&z, &DiskSpec::new(1, 64).unwrap());
        assert!((sup - core::f64::consts::E).abs() < 1e-14);

        let b = TruncatedSequence::real_scalars(&[-4.5, 0.0, 0.0]).unwrap();
        assert_eq!(sup_norm_disk(&b, &DiskSpec::new(3, 16).unwrap()), 4.5);
        assert!(DiskSpec::new(0, 4).is_err());
    }

    #[test]
    fn constant_is_recovered() {
        let values = vec![FiberPoint(vec![c(3.0, 0.0)]); 12];
        let f = coefficients_from_boundary(&values, 2.5, 4, BanachFiber::real_line()).unwrap();
        assert!((f.coefficients()[0][0] - c(3.0, 0.0)).norm() < 1e-15);
        for k in 1..=4 {
            assert!(f.coefficients()[k][0].norm() < 1e-15);
        }
    }

    #[test]
    fn z_squared_against_direct_quadrature() {
        // direct quadrature oracle: (1/16) Σ_j ω^{2j} ω^{-jk} = δ_{k2}
        let values: Vec<FiberPoint> = circle_points(1.0, 16).into_iter().map(|z| FiberPoint(vec![z * z])).collect();
        let f = coefficients_from_boundary(&values, 1.0, 4, BanachFiber::real_line()).unwrap();
        let expected = [0.0, 0.0, 1.0, 0.0, 0.0];
        for (k, want) in expected.iter().enumerate() {
            assert!((f.coefficients()[k][0] - c(*want, 0.0)).norm() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn too_few_samples_alias() {
        let values = vec![FiberPoint(vec![c(1.0, 0.0)]); 9];
        assert!(matches!(
            coefficients_from_boundary(&values, 1.0, 4, BanachFiber::real_line()),
            Err(Error::Aliasing { needed: 10, .. })
        ));
    }

    #[test]
    fn polynomial_round_trip_degree_sixteen() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let f = decaying(BanachFiber::real_line().complexified(), 16, 1.0, &mut rng);
            let disk = DiskSpec::new(1, 64).unwrap();
            let values = boundary_samples(&f, &disk);
            let g = coefficients_from_boundary(&values, disk.radius(), 16, *f.fiber()).unwrap();
            for (a, b) in f.coefficients().iter().zip(g.coefficients()) {
                assert!((a[0] - b[0]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn round_trip_error_in_recovery_level_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let fiber = BanachFiber::new(2, ScalarField::Complex, NormKind::Euclidean).unwrap();
        let probes = generate(fiber, 32, &ProbeConfig { count: 60, ..Default::default() }, &mut rng);
        for f in probes {
            let disk = DiskSpec::new(1, 4 * 32).unwrap();
            let g = coefficients_from_boundary(&boundary_samples(&f, &disk), disk.radius(), 32, fiber).unwrap();
            let diff = &g - &f;
            let rel = seminorm_l1(&diff, 1).unwrap() / seminorm_l1(&f, 1).unwrap();
            assert!(rel <= 1e-8, "relative error {rel}");
        }
    }

    #[test]
    fn cauchy_bound_examples() {
        let tol = Tolerance::DEFAULT;
        let b = TruncatedSequence::real_scalars(&[2.0, 0.0, 0.0]).unwrap();
        let r = verify_cauchy_bound(&b, 2, 64, tol).unwrap();
        assert!(r.holds);
        assert_eq!(r.slack, 0.0);

        let e = TruncatedSequence::real_scalars(&inverse_factorials(32)).unwrap();
        let r = verify_cauchy_bound(&e, 0, 256, tol).unwrap();
        assert_eq!(r.bound_lhs, 1.0);
        assert!((r.slack - (core::f64::consts::E - 1.0)).abs() < 1e-12);

        let mut top = vec![0.0; 17];
        top[16] = 1.0;
        let m = TruncatedSequence::real_scalars(&top).unwrap();
        let r = verify_cauchy_bound(&m, 1, 64, tol).unwrap();
        assert!(r.holds);
        assert!(r.slack.abs() <= 1e-12 * r.bound_rhs);
        assert!((r.bound_lhs - libm::exp(16.0)).abs() <= 1e-12 * r.bound_lhs);
    }

    #[test]
    fn sup_norm_is_monotone_in_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let f = decaying(BanachFiber::real_euclidean(2).unwrap(), 12, 0.5, &mut rng);
            let sups: Vec<f64> = (0..=5).map(|n| sup_norm_disk(&f, &DiskSpec::new(n, 128).unwrap())).collect();
            assert!(sups.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn real_form_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let real = decaying(BanachFiber::real_line(), 8, 1.0, &mut rng).complexified();
        let zs: Vec<Complex64> = (0..32).map(|_| c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
        assert!(check_real_form(&real));
        assert!(conjugation_symmetric_at(&real, &zs));

        let i_const = TruncatedSequence::complex_scalars(&[c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        assert!(!check_real_form(&i_const));
        assert!(!conjugation_symmetric_at(&i_const, &[c(0.0, 0.0)]));

        let f = TruncatedSequence::complex_scalars(&[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert!(!check_real_form(&f));
        let at_one = eval_series(&f, c(1.0, 0.0), 1).unwrap()[0];
        assert_eq!(at_one, c(1.0, 1.0));
        assert_eq!(at_one.conj(), c(1.0, -1.0));
        assert!(!conjugation_symmetric_at(&f, &[c(1.0, 0.0)]));
    }

    proptest::proptest! {
        #[test]
        fn real_form_matches_sampled_symmetry(
            re in proptest::collection::vec(-3.0..3.0f64, 1..12),
            im_scale in proptest::prop_oneof![proptest::strategy::Just(0.0), 1e-3..1.0f64],
            seed in 0u64..1000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let coeffs: Vec<Complex64> = re.iter().map(|&x| c(x, im_scale * rng.gen_range(-1.0..1.0))).collect();
            let f = TruncatedSequence::complex_scalars(&coeffs).unwrap();
            let zs = circle_points(1.3, 24);
            let nontrivial = coeffs.iter().any(|z| z.im.abs() > REAL_FORM_TOL);
            proptest::prop_assume!(!nontrivial || coeffs.iter().any(|z| z.im.abs() > 1e-4));
            proptest::prop_assert_eq!(check_real_form(&f), conjugation_symmetric_at(&f, &zs));
        }

        #[test]
        fn cauchy_bound_holds_for_probes(seed in 0u64..500, n in 0usize..=5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = decaying(BanachFiber::real_euclidean(2).unwrap(), 24, 1.5, &mut rng);
            let r = verify_cauchy_bound(&f, n, 64, Tolerance::DEFAULT).unwrap();
            proptest::prop_assert!(r.holds, "{:?}", r);
        }
    }
}
