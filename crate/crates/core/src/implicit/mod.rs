//! Constraints `φ: F → ℝ^m`, regular points and the implicit function
//! theorem in the truncated model.
//!
//! A truncated element of `Σ(ℝ^d)` is a vector in `ℝ^D`, `D = (K+1)·d`,
//! with coordinates ordered `k`-major as in
//! [`TruncatedSequence::to_real_vec`]. The target of every constraint is the
//! Banach space `ℝ^m`, so after a splitting `F = F₀ × ℝ^m` the map
//! `Φ(x,y) = (x, φ(x,y))` has the explicit inverse family
//! `VΦ(k′,k″) = (k′, ∂yφ⁻¹(k″ − ∂xφ k′))` and `ψ` is computed by ordinary
//! Newton iteration in `y`. No smoothing operators are needed.
//!
//! Orthogonality is taken in the level-`n` inner product
//! `⟨f,g⟩_n = Σ_k e^{2nk}⟨f_k, g_k⟩`, represented by the diagonal weight
//! vector `W`.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::fiber::{BanachFiber, ScalarField};
use crate::sequence::TruncatedSequence;
use crate::{Error, Result, MAX_EXPONENT};

mod chart;
mod newton;
mod regular;

pub use chart::{build_chart, Chart, ChartOptions};
pub use newton::{
    apply_dphi, apply_vphi, find_fiber_point, is_regular_value, kantorovich, solve_implicit, FiberSolve,
    FoundPreimage, ImplicitSolution, KantorovichReport, NewtonOptions, RegularValueReport, KANTOROVICH_BOUND,
};
pub use regular::{is_regular_point, RegularPointReport, Splitting, RANK_THRESHOLD};

/// Real coordinates of `Σ(ℝ^d)` truncated at degree `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceLayout {
    fiber: BanachFiber,
    degree: usize,
}

impl SequenceLayout {
    pub fn new(fiber: BanachFiber, degree: usize) -> Result<Self> {
        if fiber.field() != ScalarField::Real {
            return Err(Error::invalid("constraints act on real sequence spaces"));
        }
        Ok(SequenceLayout { fiber, degree })
    }

    /// `Σ(ℝ)` truncated at `degree`.
    pub fn scalar(degree: usize) -> Self {
        SequenceLayout { fiber: BanachFiber::real_line(), degree }
    }

    pub fn fiber(&self) -> BanachFiber {
        self.fiber
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `D = (K+1)·d`.
    pub fn dim(&self) -> usize {
        (self.degree + 1) * self.fiber.dim()
    }

    /// Coefficient index of coordinate `i`.
    pub fn k_of(&self, i: usize) -> usize {
        i / self.fiber.dim()
    }

    /// `e^{2nk}` per coordinate.
    pub fn weights(&self, n: usize) -> Result<Vec<f64>> {
        if n * self.degree > MAX_EXPONENT {
            return Err(Error::range("n·K", (n * self.degree) as f64, MAX_EXPONENT as f64));
        }
        Ok((0..self.dim()).map(|i| libm::exp(2.0 * (n * self.k_of(i)) as f64)).collect())
    }

    pub fn to_sequence(&self, q: &[f64]) -> Result<TruncatedSequence> {
        TruncatedSequence::from_real_vec(self.fiber, self.degree, q)
    }

    pub fn from_sequence(&self, f: &TruncatedSequence) -> Result<Vec<f64>> {
        if f.fiber().field() != ScalarField::Real || f.fiber().dim() != self.fiber.dim() || f.degree() != self.degree {
            return Err(Error::invalid("sequence does not match the constraint layout"));
        }
        Ok(f.to_real_vec())
    }

    /// Unit vector `e_k` in fiber coordinate `c`.
    pub fn unit(&self, k: usize, c: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        v[k * self.fiber.dim() + c] = 1.0;
        v
    }
}

/// `c · Π q_i^{p_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    /// `(coordinate, power)` pairs; empty for a constant.
    #[serde(default)]
    pub powers: Vec<(usize, u32)>,
}

/// Polynomial map `ℝ^domain_dim → ℝ^m`, one term list per output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub domain_dim: usize,
    pub outputs: Vec<Vec<Monomial>>,
}

impl Polynomial {
    fn check(&self) -> Result<()> {
        if self.outputs.is_empty() {
            return Err(Error::invalid("polynomial constraint has no outputs"));
        }
        for m in self.outputs.iter().flatten() {
            if let Some(&(i, _)) = m.powers.iter().find(|(i, _)| *i >= self.domain_dim) {
                return Err(Error::range("polynomial coordinate", i as f64, (self.domain_dim - 1) as f64));
            }
        }
        Ok(())
    }

    fn eval(&self, q: &[f64]) -> Vec<f64> {
        self.outputs
            .iter()
            .map(|terms| terms.iter().map(|t| t.coef * t.powers.iter().map(|&(i, p)| libm::pow(q[i], p as f64)).product::<f64>()).sum())
            .collect()
    }

    fn jacobian(&self, q: &[f64]) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.outputs.len(), self.domain_dim);
        for (row, terms) in self.outputs.iter().enumerate() {
            for t in terms {
                for (slot, &(i, p)) in t.powers.iter().enumerate() {
                    if p == 0 {
                        continue;
                    }
                    let rest: f64 = t
                        .powers
                        .iter()
                        .enumerate()
                        .filter(|(s, _)| *s != slot)
                        .map(|(_, &(i2, p2))| libm::pow(q[i2], p2 as f64))
                        .product();
                    j[(row, i)] += t.coef * p as f64 * libm::pow(q[i], (p - 1) as f64) * rest;
                }
            }
        }
        j
    }
}

pub type ConstraintFn = dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync;
pub type JacobianFn = dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync;

#[derive(Clone)]
pub enum ConstraintKind {
    /// `φ_i(q) = ⟨q,q⟩_{n_i} − 1`.
    Spheres { levels: Vec<usize> },
    /// `φ(q) = A q − c`.
    Affine { matrix: DMatrix<f64>, offset: DVector<f64> },
    Polynomial(Polynomial),
    Custom { eval: Arc<ConstraintFn>, jacobian: Option<Arc<JacobianFn>> },
}

impl fmt::Debug for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintKind::Spheres { levels } => f.debug_struct("Spheres").field("levels", levels).finish(),
            ConstraintKind::Affine { matrix, offset } => {
                f.debug_struct("Affine").field("matrix", matrix).field("offset", offset).finish()
            }
            ConstraintKind::Polynomial(p) => f.debug_tuple("Polynomial").field(p).finish(),
            ConstraintKind::Custom { jacobian, .. } => {
                f.debug_struct("Custom").field("supplied_jacobian", &jacobian.is_some()).finish()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMode {
    Supplied,
    FiniteDifference,
}

#[derive(Debug, Clone)]
pub struct ConstraintMap {
    name: String,
    layout: SequenceLayout,
    target_dim: usize,
    kind: ConstraintKind,
    mode: JacobianMode,
    level: usize,
    weights: Vec<f64>,
}

impl ConstraintMap {
    fn build(name: String, layout: SequenceLayout, target_dim: usize, kind: ConstraintKind) -> Result<Self> {
        if target_dim == 0 {
            return Err(Error::invalid("constraint target must be nonzero-dimensional"));
        }
        if target_dim > layout.dim() {
            return Err(Error::invalid(format!(
                "target dimension {target_dim} exceeds the space dimension {}",
                layout.dim()
            )));
        }
        let weights = layout.weights(0)?;
        Ok(ConstraintMap { name, layout, target_dim, kind, mode: JacobianMode::Supplied, level: 0, weights })
    }

    /// Unit sphere `⟨q,q⟩_n = 1`; the splitting uses the level-`n` product.
    pub fn sphere(layout: SequenceLayout, level: usize) -> Result<Self> {
        Self::spheres(layout, &[level])
    }

    /// Intersection of unit spheres at strictly increasing levels; the
    /// splitting uses the lowest level.
    pub fn spheres(layout: SequenceLayout, levels: &[usize]) -> Result<Self> {
        if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("sphere levels must be nonempty and strictly increasing"));
        }
        for &n in levels {
            layout.weights(n)?;
        }
        let name = if levels.len() == 1 {
            format!("sphere:{}", levels[0])
        } else {
            format!("spheres:{}", join(levels))
        };
        let c = Self::build(name, layout, levels.len(), ConstraintKind::Spheres { levels: levels.to_vec() })?;
        c.with_level(levels[0])
    }

    /// `φ(q) = Σ a_i q_i`; missing coefficients are zero.
    pub fn linear(layout: SequenceLayout, coeffs: &[f64]) -> Result<Self> {
        let c = Self::affine(layout, &[coeffs.to_vec()], &[0.0])?;
        Ok(c.with_name(format!("linear:{}", join(coeffs))))
    }

    /// `φ(q) = A q − c`; rows are zero-padded to `D`.
    pub fn affine(layout: SequenceLayout, rows: &[Vec<f64>], offset: &[f64]) -> Result<Self> {
        let d = layout.dim();
        if rows.is_empty() || rows.len() != offset.len() {
            return Err(Error::invalid("affine constraint needs one offset per row"));
        }
        if let Some(r) = rows.iter().find(|r| r.len() > d) {
            return Err(Error::Dimension { expected: d, found: r.len() });
        }
        let matrix = DMatrix::from_fn(rows.len(), d, |i, j| rows[i].get(j).copied().unwrap_or(0.0));
        let offset = DVector::from_column_slice(offset);
        let name = format!(
            "affine:{}|{}",
            rows.iter().map(|r| join(r)).collect::<Vec<_>>().join(";"),
            join(offset.as_slice())
        );
        Self::build(name, layout, rows.len(), ConstraintKind::Affine { matrix, offset })
    }

    /// Polynomial constraint on `Σ(ℝ)` truncated at `domain_dim − 1`.
    pub fn polynomial(name: impl Into<String>, poly: Polynomial) -> Result<Self> {
        if poly.domain_dim == 0 {
            return Err(Error::invalid("polynomial domain must be nonempty"));
        }
        poly.check()?;
        let layout = SequenceLayout::scalar(poly.domain_dim - 1);
        let m = poly.outputs.len();
        Self::build(name.into(), layout, m, ConstraintKind::Polynomial(poly))
    }

    pub fn custom(
        name: impl Into<String>,
        layout: SequenceLayout,
        target_dim: usize,
        eval: impl Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
        jacobian: Option<Arc<JacobianFn>>,
    ) -> Result<Self> {
        let mode = if jacobian.is_some() { JacobianMode::Supplied } else { JacobianMode::FiniteDifference };
        let kind = ConstraintKind::Custom { eval: Arc::new(eval), jacobian };
        Ok(Self::build(name.into(), layout, target_dim, kind)?.with_mode(mode))
    }

    pub fn with_mode(mut self, mode: JacobianMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Inner-product level used for splittings and weighted norms.
    pub fn with_level(mut self, level: usize) -> Result<Self> {
        self.weights = self.layout.weights(level)?;
        self.level = level;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn layout(&self) -> SequenceLayout {
        self.layout
    }

    pub fn kind(&self) -> &ConstraintKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn mode(&self) -> JacobianMode {
        self.mode
    }

    /// Level whose weights set the metric of the fiber-point search: the
    /// top level for sphere intersections, whose tails must be damped,
    /// otherwise the inner-product level.
    pub fn search_level(&self) -> usize {
        match &self.kind {
            ConstraintKind::Spheres { levels } => levels.iter().copied().max().unwrap_or(self.level),
            _ => self.level,
        }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Diagonal of `W` at the inner-product level.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `‖v‖_W = (Σ w_i v_i²)^{1/2}`.
    pub fn weighted_norm(&self, v: &[f64]) -> f64 {
        libm::sqrt(v.iter().zip(&self.weights).map(|(x, w)| w * x * x).sum())
    }

    fn check_len(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), found: q.len() });
        }
        Ok(())
    }

    pub fn eval(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.check_len(q)?;
        let out = match &self.kind {
            ConstraintKind::Spheres { levels } => {
                let mut out = Vec::with_capacity(levels.len());
                for &n in levels {
                    let w = self.layout.weights(n)?;
                    out.push(q.iter().zip(&w).map(|(x, w)| w * x * x).sum::<f64>() - 1.0);
                }
                out
            }
            ConstraintKind::Affine { matrix, offset } => {
                (matrix * DVector::from_column_slice(q) - offset).as_slice().to_vec()
            }
            ConstraintKind::Polynomial(p) => p.eval(q),
            ConstraintKind::Custom { eval, .. } => eval(q)?,
        };
        if out.len() != self.target_dim {
            return Err(Error::Evaluation(format!(
                "constraint returned {} values, expected {}",
                out.len(),
                self.target_dim
            )));
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation("constraint value is not finite".into()));
        }
        Ok(out)
    }

    pub fn eval_sequence(&self, f: &TruncatedSequence) -> Result<Vec<f64>> {
        self.eval(&self.layout.from_sequence(f)?)
    }

    /// `m × D` Jacobian according to the Jacobian mode.
    pub fn jacobian(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        match self.mode {
            JacobianMode::FiniteDifference => self.jacobian_fd(q),
            JacobianMode::Supplied => self.jacobian_supplied(q),
        }
    }

    /// Analytic Jacobian; falls back to finite differences for custom
    /// constraints without one.
    pub fn jacobian_supplied(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        self.check_len(q)?;
        let j = match &self.kind {
            ConstraintKind::Spheres { levels } => {
                let mut j = DMatrix::zeros(levels.len(), self.dim());
                for (row, &n) in levels.iter().enumerate() {
                    let w = self.layout.weights(n)?;
                    for i in 0..self.dim() {
                        j[(row, i)] = 2.0 * w[i] * q[i];
                    }
                }
                j
            }
            ConstraintKind::Affine { matrix, .. } => matrix.clone(),
            ConstraintKind::Polynomial(p) => p.jacobian(q),
            ConstraintKind::Custom { jacobian: Some(jac), .. } => jac(q)?,
            ConstraintKind::Custom { jacobian: None, .. } => return self.jacobian_fd(q),
        };
        if j.nrows() != self.target_dim || j.ncols() != self.dim() {
            return Err(Error::Evaluation(format!(
                "Jacobian has shape {}×{}, expected {}×{}",
                j.nrows(),
                j.ncols(),
                self.target_dim,
                self.dim()
            )));
        }
        Ok(j)
    }

    /// Central differences with step `1e-6·(1+|q_j|)`.
    pub fn jacobian_fd(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        self.check_len(q)?;
        let mut j = DMatrix::zeros(self.target_dim, self.dim());
        let mut work = q.to_vec();
        for col in 0..self.dim() {
            let h = 1e-6 * (1.0 + libm::fabs(q[col]));
            work[col] = q[col] + h;
            let plus = self.eval(&work)?;
            work[col] = q[col] - h;
            let minus = self.eval(&work)?;
            work[col] = q[col];
            for row in 0..self.target_dim {
                j[(row, col)] = (plus[row] - minus[row]) / (2.0 * h);
            }
        }
        Ok(j)
    }

    /// `max |J_supplied − J_fd| / max |J_supplied|`.
    pub fn jacobian_crosscheck(&self, q: &[f64]) -> Result<f64> {
        let a = self.jacobian_supplied(q)?;
        let b = self.jacobian_fd(q)?;
        let scale = a.amax();
        let diff = (a - b).amax();
        Ok(if scale == 0.0 { diff } else { diff / scale })
    }

    /// Lipschitz bound for `q ↦ J(q)W^{-1/2}` in the weighted norm on a ball
    /// of the given radius around `q`. Exact for spheres and affine maps;
    /// otherwise the Frobenius norm of the second-derivative tensor, estimated
    /// by differencing Jacobians along `W`-unit coordinate directions.
    pub fn jacobian_lipschitz(&self, q: &[f64], radius: f64) -> Result<f64> {
        self.check_len(q)?;
        match &self.kind {
            ConstraintKind::Spheres { levels } => {
                let mut acc = 0.0;
                for &n in levels {
                    let w = self.layout.weights(n)?;
                    let ratio = w.iter().zip(&self.weights).map(|(a, b)| a / b).fold(0.0, f64::max);
                    acc += 4.0 * ratio * ratio;
                }
                Ok(libm::sqrt(acc))
            }
            ConstraintKind::Affine { .. } => Ok(0.0),
            _ => {
                let h = radius.max(1e-6);
                let inv_sqrt: Vec<f64> = self.weights.iter().map(|w| 1.0 / libm::sqrt(*w)).collect();
                let mut acc = 0.0;
                let mut work = q.to_vec();
                for col in 0..self.dim() {
                    let step = h * inv_sqrt[col];
                    work[col] = q[col] + step;
                    let plus = self.jacobian(&work)?;
                    work[col] = q[col] - step;
                    let minus = self.jacobian(&work)?;
                    work[col] = q[col];
                    let mut d = (plus - minus) / (2.0 * h);
                    for (c, s) in inv_sqrt.iter().enumerate() {
                        d.column_mut(c).scale_mut(*s);
                    }
                    acc += d.norm_squared();
                }
                Ok(libm::sqrt(acc))
            }
        }
    }
}

fn join(v: &[impl fmt::Display]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests;
