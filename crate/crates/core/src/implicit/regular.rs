//! Surjectivity of `Dφ(p)` and the splitting `F = F₀ ⊕ B̄`.
//!
//! `p` is regular when `Dφ(p)` has full rank `m`. In finite dimensions the
//! kernel `F₀` is then automatically complemented; the complement `B̄` is its
//! orthogonal complement in the weighted product, i.e. the span of the
//! `W`-gradients `W⁻¹∇φ_i`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ConstraintMap;
use crate::{Error, Result};

/// Relative singular-value threshold for the rank decision.
pub const RANK_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularPointReport {
    pub point: Vec<f64>,
    /// Rows of the `m × D` Jacobian.
    pub jacobian: Vec<Vec<f64>>,
    /// Singular values of `J W^{-1/2}`, descending.
    pub singular_values: Vec<f64>,
    pub regular: bool,
    /// `D − m` vectors, orthonormal in the weighted product; empty unless
    /// regular.
    pub kernel_basis: Vec<Vec<f64>>,
    /// `m` vectors spanning the weighted row space; empty unless regular.
    pub complement_basis: Vec<Vec<f64>>,
    pub inner_product_level: usize,
}

impl RegularPointReport {
    pub fn sigma_min(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    pub fn jacobian_matrix(&self) -> DMatrix<f64> {
        let m = self.jacobian.len();
        let d = self.jacobian.first().map_or(0, Vec::len);
        DMatrix::from_fn(m, d, |i, j| self.jacobian[i][j])
    }
}

pub(crate) fn weighted_jacobian(j: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let mut out = j.clone();
    for (c, w) in weights.iter().enumerate() {
        out.column_mut(c).scale_mut(1.0 / libm::sqrt(*w));
    }
    out
}

pub(crate) fn singular_values(m: DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn is_regular_point(c: &ConstraintMap, p: &[f64]) -> Result<RegularPointReport> {
    let j = c.jacobian(p)?;
    let (m, d) = (c.target_dim(), c.dim());
    let jw = weighted_jacobian(&j, c.weights());
    let sv = singular_values(jw.clone());
    let smax = sv.first().copied().unwrap_or(0.0);
    let regular = sv.len() == m && smax > 0.0 && sv.iter().all(|&s| s > RANK_THRESHOLD * smax);
    let (mut kernel, mut complement) = (Vec::new(), Vec::new());
    if regular {
        let mut stacked = DMatrix::zeros(d, m + d);
        stacked.view_mut((0, 0), (d, m)).copy_from(&jw.transpose());
        stacked.view_mut((0, m), (d, d)).fill_with_identity();
        let q = stacked.qr().q();
        let unweight = |col: usize| -> Vec<f64> {
            q.column(col).iter().zip(c.weights()).map(|(x, w)| x / libm::sqrt(*w)).collect()
        };
        complement = (0..m).map(unweight).collect();
        kernel = (m..d).map(unweight).collect();
    }
    Ok(RegularPointReport {
        point: p.to_vec(),
        jacobian: (0..m).map(|i| j.row(i).iter().copied().collect()).collect(),
        singular_values: sv,
        regular,
        kernel_basis: kernel,
        complement_basis: complement,
        inner_product_level: c.level(),
    })
}

/// `q = base + X x + Y y` with `x ∈ ℝ^{D−m}`, `y ∈ ℝ^m`.
///
/// Coordinates of `q` are recovered as `Xᵀ M (q − base)`, `Yᵀ M (q − base)`
/// where `M` is the diagonal metric in which the columns of `[X Y]` are
/// orthonormal.
#[derive(Debug, Clone, PartialEq)]
pub struct Splitting {
    base: DVector<f64>,
    x_basis: DMatrix<f64>,
    y_basis: DMatrix<f64>,
    metric: DVector<f64>,
}

impl Splitting {
    /// Kernel/complement splitting at a regular point, centred there.
    pub fn from_report(report: &RegularPointReport, c: &ConstraintMap) -> Result<Self> {
        if !report.regular {
            return Err(Error::NotRegular { sigma_min: report.sigma_min(), sigma_max: report.sigma_max() });
        }
        let d = report.point.len();
        let cols = |vs: &[Vec<f64>]| DMatrix::from_fn(d, vs.len(), |i, j| vs[j][i]);
        Ok(Splitting {
            base: DVector::from_column_slice(&report.point),
            x_basis: cols(&report.kernel_basis),
            y_basis: cols(&report.complement_basis),
            metric: DVector::from_column_slice(c.weights()),
        })
    }

    /// `y` = the listed coordinates, `x` = the remaining ones in order;
    /// centred at the origin.
    pub fn coordinates(dim: usize, y_coords: &[usize]) -> Result<Self> {
        let mut seen = alloc::vec![false; dim];
        for &i in y_coords {
            if i >= dim || seen[i] {
                return Err(Error::invalid("y coordinates must be distinct and in range"));
            }
            seen[i] = true;
        }
        if y_coords.is_empty() {
            return Err(Error::invalid("at least one y coordinate is needed"));
        }
        let x_coords: Vec<usize> = (0..dim).filter(|i| !seen[*i]).collect();
        let unit_cols = |idx: &[usize]| DMatrix::from_fn(dim, idx.len(), |i, j| if idx[j] == i { 1.0 } else { 0.0 });
        Ok(Splitting {
            base: DVector::zeros(dim),
            x_basis: unit_cols(&x_coords),
            y_basis: unit_cols(y_coords),
            metric: DVector::from_element(dim, 1.0),
        })
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn x_dim(&self) -> usize {
        self.x_basis.ncols()
    }

    pub fn y_dim(&self) -> usize {
        self.y_basis.ncols()
    }

    pub fn base(&self) -> &[f64] {
        self.base.as_slice()
    }

    pub fn x_basis(&self) -> &DMatrix<f64> {
        &self.x_basis
    }

    pub fn y_basis(&self) -> &DMatrix<f64> {
        &self.y_basis
    }

    pub(crate) fn check(&self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != self.x_dim() {
            return Err(Error::Dimension { expected: self.x_dim(), found: x.len() });
        }
        if y.len() != self.y_dim() {
            return Err(Error::Dimension { expected: self.y_dim(), found: y.len() });
        }
        Ok(())
    }

    /// `X x + Y y` without the base point.
    pub fn embed(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check(x, y)?;
        let v = &self.x_basis * DVector::from_column_slice(x) + &self.y_basis * DVector::from_column_slice(y);
        Ok(v.as_slice().to_vec())
    }

    pub fn point(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let v = self.embed(x, y)?;
        Ok(v.iter().zip(self.base.iter()).map(|(a, b)| a + b).collect())
    }

    /// Coordinates of a displacement `v` (no base point).
    pub fn unembed(&self, v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if v.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), found: v.len() });
        }
        let mv = DVector::from_column_slice(v).component_mul(&self.metric);
        let x = self.x_basis.tr_mul(&mv);
        let y = self.y_basis.tr_mul(&mv);
        Ok((x.as_slice().to_vec(), y.as_slice().to_vec()))
    }

    pub fn coords(&self, q: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if q.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), found: q.len() });
        }
        let v: Vec<f64> = q.iter().zip(self.base.iter()).map(|(a, b)| a - b).collect();
        self.unembed(&v)
    }
}
