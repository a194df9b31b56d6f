//! Finite-dimensional Banach fibers `B` and their points.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Index;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarField {
    Real,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Euclidean,
    Supremum,
    Sum,
}

/// `B = 𝕂^dim` with one of three norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BanachFiber {
    dim: usize,
    field: ScalarField,
    norm: NormKind,
}

impl BanachFiber {
    pub fn new(dim: usize, field: ScalarField, norm: NormKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("fiber dimension must be at least 1"));
        }
        Ok(BanachFiber { dim, field, norm })
    }

    /// `ℝ` with its absolute value.
    pub fn real_line() -> Self {
        BanachFiber { dim: 1, field: ScalarField::Real, norm: NormKind::Euclidean }
    }

    pub fn real_euclidean(dim: usize) -> Result<Self> {
        Self::new(dim, ScalarField::Real, NormKind::Euclidean)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn field(&self) -> ScalarField {
        self.field
    }

    pub fn norm_kind(&self) -> NormKind {
        self.norm
    }

    /// Same coordinates and norm over `ℂ`.
    pub fn complexified(&self) -> Self {
        BanachFiber { field: ScalarField::Complex, ..*self }
    }

    /// Real coordinates per fiber point: `dim` for real fibers, `2·dim`
    /// (re, im pairs) for complex ones.
    pub fn real_dim(&self) -> usize {
        match self.field {
            ScalarField::Real => self.dim,
            ScalarField::Complex => 2 * self.dim,
        }
    }

    pub fn norm(&self, p: &FiberPoint) -> f64 {
        debug_assert_eq!(p.len(), self.dim);
        match self.norm {
            NormKind::Euclidean => libm::sqrt(p.iter().map(|c| c.norm_sqr()).sum::<f64>()),
            NormKind::Supremum => p.iter().map(|c| c.norm()).fold(0.0, f64::max),
            NormKind::Sum => p.iter().map(|c| c.norm()).sum(),
        }
    }

    pub fn zero(&self) -> FiberPoint {
        FiberPoint(vec![Complex64::new(0.0, 0.0); self.dim])
    }

    /// Checks length and, for real fibers, that imaginary parts vanish.
    pub fn check(&self, p: &FiberPoint) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, found: p.len() });
        }
        if self.field == ScalarField::Real && p.iter().any(|c| c.im != 0.0) {
            return Err(Error::invalid("real fiber point has a nonzero imaginary part"));
        }
        Ok(())
    }
}

/// Coordinates of an element of `B`. Real fibers store zero imaginary parts.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FiberPoint(pub Vec<Complex64>);

impl FiberPoint {
    pub fn from_real(values: &[f64]) -> Self {
        FiberPoint(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Complex64> {
        self.0.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        FiberPoint(self.0.iter().map(|c| c * s).collect())
    }

    pub fn conj(&self) -> Self {
        FiberPoint(self.0.iter().map(|c| c.conj()).collect())
    }

    pub(crate) fn zip_with(&self, other: &FiberPoint, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        FiberPoint(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }
}

impl Index<usize> for FiberPoint {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}
