//! Truncated elements of the sequence space `Σ(B)`.
//!
//! Coefficients with index above the truncation degree `K` are exactly zero,
//! so every seminorm of a truncated sequence is finite.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Sub};

use num_complex::Complex64;

use crate::fiber::{BanachFiber, FiberPoint, ScalarField};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSequence {
    fiber: BanachFiber,
    coefficients: Vec<FiberPoint>,
}

impl TruncatedSequence {
    /// `coefficients[k]` is `f_k` for `k = 0..=K`.
    pub fn new(fiber: BanachFiber, coefficients: Vec<FiberPoint>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::invalid("a truncated sequence needs at least the coefficient f_0"));
        }
        for c in &coefficients {
            fiber.check(c)?;
        }
        Ok(TruncatedSequence { fiber, coefficients })
    }

    pub fn zeros(fiber: BanachFiber, degree: usize) -> Self {
        TruncatedSequence { fiber, coefficients: vec![fiber.zero(); degree + 1] }
    }

    /// Scalar sequence in `Σ(ℝ)`.
    pub fn real_scalars(values: &[f64]) -> Result<Self> {
        let coefficients = values.iter().map(|&x| FiberPoint::from_real(&[x])).collect();
        Self::new(BanachFiber::real_line(), coefficients)
    }

    /// Scalar sequence in `Σ(ℂ)`.
    pub fn complex_scalars(values: &[Complex64]) -> Result<Self> {
        let fiber = BanachFiber::real_line().complexified();
        let coefficients = values.iter().map(|&z| FiberPoint(vec![z])).collect();
        Self::new(fiber, coefficients)
    }

    /// `e_k` along fiber coordinate `coord`.
    pub fn monomial(fiber: BanachFiber, degree: usize, k: usize, coord: usize) -> Result<Self> {
        if k > degree {
            return Err(Error::range("monomial index", k as f64, degree as f64));
        }
        if coord >= fiber.dim() {
            return Err(Error::range("fiber coordinate", coord as f64, (fiber.dim() - 1) as f64));
        }
        let mut s = Self::zeros(fiber, degree);
        s.coefficients[k].0[coord] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn fiber(&self) -> &BanachFiber {
        &self.fiber
    }

    /// Truncation degree `K`.
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[FiberPoint] {
        &self.coefficients
    }

    pub fn coefficient(&self, k: usize) -> Option<&FiberPoint> {
        self.coefficients.get(k)
    }

    /// `‖f_k‖_B` for every `k`.
    pub fn coefficient_norms(&self) -> impl Iterator<Item = f64> + '_ {
        self.coefficients.iter().map(|c| self.fiber.norm(c))
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(FiberPoint::is_zero)
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.scaled_complex(Complex64::new(s, 0.0))
    }

    /// Scalar multiple. A non-real factor on a real fiber moves the result to
    /// the complexified fiber.
    pub fn scaled_complex(&self, s: Complex64) -> Self {
        let fiber = if s.im != 0.0 { self.fiber.complexified() } else { self.fiber };
        TruncatedSequence { fiber, coefficients: self.coefficients.iter().map(|c| c.scaled(s)).collect() }
    }

    /// Copy with every coefficient above `degree` set to zero; the truncation
    /// degree of the result is unchanged.
    pub fn truncated(&self, degree: usize) -> Self {
        let mut out = self.clone();
        for c in out.coefficients.iter_mut().skip(degree + 1) {
            *c = self.fiber.zero();
        }
        out
    }

    /// Same coefficients seen in `Σ(B_ℂ)`.
    pub fn complexified(&self) -> Self {
        TruncatedSequence { fiber: self.fiber.complexified(), coefficients: self.coefficients.clone() }
    }

    /// Flattened real coordinates, `k`-major. Complex fibers contribute
    /// (re, im) pairs.
    pub fn to_real_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity((self.degree() + 1) * self.fiber.real_dim());
        for c in &self.coefficients {
            for z in c.iter() {
                out.push(z.re);
                if self.fiber.field() == ScalarField::Complex {
                    out.push(z.im);
                }
            }
        }
        out
    }

    pub fn from_real_vec(fiber: BanachFiber, degree: usize, values: &[f64]) -> Result<Self> {
        let per = fiber.real_dim();
        let expected = (degree + 1) * per;
        if values.len() != expected {
            return Err(Error::Dimension { expected, found: values.len() });
        }
        let coefficients = values
            .chunks(per)
            .map(|chunk| match fiber.field() {
                ScalarField::Real => FiberPoint::from_real(chunk),
                ScalarField::Complex => {
                    FiberPoint(chunk.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect())
                }
            })
            .collect();
        Ok(TruncatedSequence { fiber, coefficients })
    }

    /// Entrywise combination; fails on fiber or degree mismatch.
    pub fn try_zip(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.fiber.dim() != other.fiber.dim() || self.fiber.norm_kind() != other.fiber.norm_kind() {
            return Err(Error::invalid("sequences live over different fibers"));
        }
        if self.degree() != other.degree() {
            return Err(Error::Dimension { expected: self.degree() + 1, found: other.degree() + 1 });
        }
        let field = if self.fiber.field() == ScalarField::Complex || other.fiber.field() == ScalarField::Complex {
            self.fiber.complexified()
        } else {
            self.fiber
        };
        let coefficients = self.coefficients.iter().zip(&other.coefficients).map(|(a, b)| a.zip_with(b, &f)).collect();
        Ok(TruncatedSequence { fiber: field, coefficients })
    }

    /// Replaces the coefficient list, keeping the fiber. Used by map
    /// evaluators that reindex coefficients.
    pub fn with_coefficients(&self, coefficients: Vec<FiberPoint>) -> Result<Self> {
        Self::new(self.fiber, coefficients)
    }
}

/// # Panics
///
/// Panics when the operands have different fibers or degrees; use
/// [`TruncatedSequence::try_zip`] for a fallible version.
impl Add for &TruncatedSequence {
    type Output = TruncatedSequence;

    fn add(self, rhs: &TruncatedSequence) -> TruncatedSequence {
        self.try_zip(rhs, |a, b| a + b).expect("incompatible sequences")
    }
}

impl Sub for &TruncatedSequence {
    type Output = TruncatedSequence;

    fn sub(self, rhs: &TruncatedSequence) -> TruncatedSequence {
        self.try_zip(rhs, |a, b| a - b).expect("incompatible sequences")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::NormKind;

    #[test]
    fn construction_checks_fiber_dimension() {
        let fiber = BanachFiber::real_euclidean(2).unwrap();
        let bad = vec![FiberPoint::from_real(&[1.0])];
        assert!(TruncatedSequence::new(fiber, bad).is_err());
        assert!(TruncatedSequence::new(fiber, Vec::new()).is_err());
    }

    #[test]
    fn zeros_have_k_plus_one_entries() {
        let s = TruncatedSequence::zeros(BanachFiber::real_line(), 7);
        assert_eq!(s.coefficients().len(), 8);
        assert_eq!(s.degree(), 7);
        assert!(s.is_zero());
    }

    #[test]
    fn real_vec_round_trip_complex_fiber() {
        let fiber = BanachFiber::new(2, ScalarField::Complex, NormKind::Sum).unwrap();
        let values: Vec<f64> = (0..12).map(|i| i as f64 * 0.5 - 2.0).collect();
        let s = TruncatedSequence::from_real_vec(fiber, 2, &values).unwrap();
        assert_eq!(s.to_real_vec(), values);
        assert_eq!(s.coefficient(1).unwrap()[0], Complex64::new(0.0, 0.5));
    }

    #[test]
    fn truncation_keeps_degree() {
        let s = TruncatedSequence::real_scalars(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let t = s.truncated(1);
        assert_eq!(t.degree(), 3);
        assert_eq!(t.to_real_vec(), vec![1.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn mismatched_addition_is_an_error() {
        let a = TruncatedSequence::real_scalars(&[1.0, 2.0]).unwrap();
        let b = TruncatedSequence::real_scalars(&[1.0]).unwrap();
        assert!(a.try_zip(&b, |x, y| x + y).is_err());
    }
}
