//! Seeded probe families.
//!
//! A probe set starts with the axis monomials `e_k` and is filled up with
//! random sequences whose coefficients decay like `e^{-αk}`, cycling `α`
//! through the configured rates.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::fiber::{BanachFiber, FiberPoint, ScalarField};
use crate::sequence::TruncatedSequence;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub count: usize,
    pub decay_rates: Vec<f64>,
    pub include_monomials: bool,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { count: 512, decay_rates: alloc::vec![0.5, 1.0, 2.0], include_monomials: true }
    }
}

fn uniform_scalar<R: Rng + ?Sized>(rng: &mut R, field: ScalarField) -> Complex64 {
    let re = rng.gen_range(-1.0..1.0);
    match field {
        ScalarField::Real => Complex64::new(re, 0.0),
        ScalarField::Complex => Complex64::new(re, rng.gen_range(-1.0..1.0)),
    }
}

/// One random sequence with coefficient envelope `e^{-αk}`.
pub fn decaying<R: Rng + ?Sized>(fiber: BanachFiber, degree: usize, alpha: f64, rng: &mut R) -> TruncatedSequence {
    let coefficients = (0..=degree)
        .map(|k| {
            let envelope = libm::exp(-alpha * k as f64);
            FiberPoint((0..fiber.dim()).map(|_| uniform_scalar(rng, fiber.field()) * envelope).collect())
        })
        .collect();
    TruncatedSequence::new(fiber, coefficients).expect("generated coefficients match the fiber")
}

pub fn generate<R: Rng + ?Sized>(
    fiber: BanachFiber,
    degree: usize,
    config: &ProbeConfig,
    rng: &mut R,
) -> Vec<TruncatedSequence> {
    let mut out = Vec::with_capacity(config.count);
    if config.include_monomials {
        for k in 0..=degree {
            if out.len() == config.count {
                return out;
            }
            out.push(TruncatedSequence::monomial(fiber, degree, k, k % fiber.dim()).expect("index within degree"));
        }
    }
    let rates: &[f64] = if config.decay_rates.is_empty() { &[1.0] } else { &config.decay_rates };
    let mut i = 0;
    while out.len() < config.count {
        out.push(decaying(fiber, degree, rates[i % rates.len()], rng));
        i += 1;
    }
    out
}

/// Uniform direction on the unit sphere of `ℝ^dim` (normalized Gaussian
/// vector via Box–Muller).
pub fn unit_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim)
            .map(|_| {
                let u1: f64 = 1.0 - rng.gen::<f64>();
                let u2: f64 = rng.gen();
                libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
            })
            .collect();
        let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        if norm > 1e-12 {
            v.iter_mut().for_each(|x| *x /= norm);
            return v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn same_seed_same_probes() {
        let fiber = BanachFiber::real_euclidean(2).unwrap().complexified();
        let cfg = ProbeConfig { count: 40, ..Default::default() };
        let a = generate(fiber, 8, &cfg, &mut ChaCha8Rng::seed_from_u64(9));
        let b = generate(fiber, 8, &cfg, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        assert_eq!(a.len(), 40);
    }

    #[test]
    fn monomials_come_first() {
        let cfg = ProbeConfig { count: 20, ..Default::default() };
        let ps = generate(BanachFiber::real_line(), 4, &cfg, &mut ChaCha8Rng::seed_from_u64(1));
        for k in 0..=4 {
            let norms: Vec<f64> = ps[k].coefficient_norms().collect();
            assert_eq!(norms.iter().filter(|&&x| x != 0.0).count(), 1);
            assert_eq!(norms[k], 1.0);
        }
    }

    #[test]
    fn decay_envelope_is_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = decaying(BanachFiber::real_line(), 20, 2.0, &mut rng);
        for (k, norm) in s.coefficient_norms().enumerate() {
            assert!(norm <= libm::exp(-2.0 * k as f64));
        }
    }

    #[test]
    fn directions_are_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = unit_direction(17, &mut rng);
        let n: f64 = d.iter().map(|x| x * x).sum();
        assert!((n - 1.0).abs() < 1e-12);
    }
}
