//! `DΦ`, `VΦ`, the Newton solve for `y = ψ(x)` and preimage search.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::regular::{is_regular_point, singular_values, weighted_jacobian, RegularPointReport};
use super::{ConstraintMap, Splitting};
use crate::{Error, Result};

/// `∂yφ` counts as singular below this relative singular value.
const BLOCK_THRESHOLD: f64 = 1e-12;

/// Largest admissible `h = β L η` for a verified preimage.
pub const KANTOROVICH_BOUND: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    /// Stop once `‖φ‖₂ ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Step halvings allowed when the residual does not decrease.
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-12, max_iter: 50, max_halvings: 20 }
    }
}

fn norm2(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

fn partials(c: &ConstraintMap, split: &Splitting, q: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let j = c.jacobian(q)?;
    Ok((&j * split.x_basis(), &j * split.y_basis()))
}

fn solve_block(block: &DMatrix<f64>, rhs: &DVector<f64>, history: &[f64]) -> Result<DVector<f64>> {
    let sv = singular_values(block.clone());
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.last().copied().unwrap_or(0.0);
    if !(smax > 0.0) || smin <= BLOCK_THRESHOLD * smax {
        return Err(Error::SingularBlock { residual_history: history.to_vec() });
    }
    block.clone().lu().solve(rhs).ok_or_else(|| Error::SingularBlock { residual_history: history.to_vec() })
}

/// `DΦ(x,y)(h′,h″) = (h′, ∂xφ h′ + ∂yφ h″)`.
pub fn apply_dphi(
    c: &ConstraintMap,
    split: &Splitting,
    x: &[f64],
    y: &[f64],
    h1: &[f64],
    h2: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    split.check(h1, h2)?;
    let (jx, jy) = partials(c, split, &split.point(x, y)?)?;
    let out = jx * DVector::from_column_slice(h1) + jy * DVector::from_column_slice(h2);
    Ok((h1.to_vec(), out.as_slice().to_vec()))
}

/// `VΦ(x,y)(k′,k″) = (k′, ∂yφ⁻¹(k″ − ∂xφ k′))`.
pub fn apply_vphi(
    c: &ConstraintMap,
    split: &Splitting,
    x: &[f64],
    y: &[f64],
    k1: &[f64],
    k2: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    split.check(k1, k2)?;
    let (jx, jy) = partials(c, split, &split.point(x, y)?)?;
    let rhs = DVector::from_column_slice(k2) - jx * DVector::from_column_slice(k1);
    let h2 = solve_block(&jy, &rhs, &[])?;
    Ok((k1.to_vec(), h2.as_slice().to_vec()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicitSolution {
    pub y: Vec<f64>,
    /// `‖φ(x, y_i)‖₂` for every iterate, starting with `y₀`.
    pub residual_history: Vec<f64>,
    /// `y₀, y₁, …`.
    pub iterates: Vec<Vec<f64>>,
}

impl ImplicitSolution {
    pub fn iterations(&self) -> usize {
        self.iterates.len() - 1
    }
}

/// Newton iteration `y ← y − ∂yφ⁻¹ φ(x,y)` with step halving.
pub fn solve_implicit(
    c: &ConstraintMap,
    split: &Splitting,
    x: &[f64],
    y0: &[f64],
    opts: &NewtonOptions,
) -> Result<ImplicitSolution> {
    split.check(x, y0)?;
    let residual = |y: &[f64]| -> Result<Vec<f64>> { c.eval(&split.point(x, y)?) };
    let mut y = y0.to_vec();
    let mut r = residual(&y)?;
    let mut history = alloc::vec![norm2(&r)];
    let mut iterates = alloc::vec![y.clone()];
    loop {
        let rn = *history.last().expect("nonempty");
        if rn <= opts.tol {
            return Ok(ImplicitSolution { y, residual_history: history, iterates });
        }
        if iterates.len() > opts.max_iter {
            return Err(Error::NonConvergence { residual_history: history });
        }
        let (_, jy) = partials(c, split, &split.point(x, &y)?)?;
        let delta = solve_block(&jy, &DVector::from_column_slice(&r), &history)?;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = y.iter().zip(delta.iter()).map(|(a, d)| a - t * d).collect();
            if let Ok(rt) = residual(&trial) {
                if norm2(&rt) < rn {
                    accepted = Some((trial, rt));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((ny, nr)) = accepted else {
            return Err(Error::NonConvergence { residual_history: history });
        };
        y = ny;
        r = nr;
        history.push(norm2(&r));
        iterates.push(y.clone());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberSolve {
    pub point: Vec<f64>,
    pub residual_history: Vec<f64>,
}

/// Minimum-norm Newton steps `δ = W⁻¹Jᵀ(JW⁻¹Jᵀ + μI)⁻¹(φ(q) − g)` from
/// `seed`, with step halving and a small Levenberg–Marquardt shift `μ` so
/// that steps stay defined near rank-deficient points. `W` holds the weights
/// of [`ConstraintMap::search_level`].
pub fn find_fiber_point(c: &ConstraintMap, target: &[f64], seed: &[f64], opts: &NewtonOptions) -> Result<FiberSolve> {
    if target.len() != c.target_dim() {
        return Err(Error::Dimension { expected: c.target_dim(), found: target.len() });
    }
    let residual = |q: &[f64]| -> Result<Vec<f64>> {
        Ok(c.eval(q)?.iter().zip(target).map(|(a, b)| a - b).collect())
    };
    let inv_w: Vec<f64> = c.layout().weights(c.search_level())?.iter().map(|w| 1.0 / w).collect();
    let mut q = seed.to_vec();
    let mut r = residual(&q)?;
    let mut history = alloc::vec![norm2(&r)];
    for _ in 0..opts.max_iter {
        let rn = *history.last().expect("nonempty");
        if rn <= opts.tol {
            break;
        }
        let j = c.jacobian(&q)?;
        let mut jw = j.clone();
        for (col, s) in inv_w.iter().enumerate() {
            jw.column_mut(col).scale_mut(*s);
        }
        let mut gram = &jw * j.transpose();
        let mu = 1e-14 * gram.trace().max(f64::MIN_POSITIVE);
        for i in 0..gram.nrows() {
            gram[(i, i)] += mu;
        }
        let Some(z) = gram.lu().solve(&DVector::from_column_slice(&r)) else {
            return Err(Error::SingularBlock { residual_history: history });
        };
        let delta = jw.tr_mul(&z);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = q.iter().zip(delta.iter()).map(|(a, d)| a - t * d).collect();
            if let Ok(rt) = residual(&trial) {
                if norm2(&rt) < rn {
                    accepted = Some((trial, rt));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((nq, nr)) = accepted else {
            return Err(Error::NonConvergence { residual_history: history });
        };
        q = nq;
        r = nr;
        history.push(norm2(&r));
    }
    if *history.last().expect("nonempty") > opts.tol {
        return Err(Error::NonConvergence { residual_history: history });
    }
    Ok(FiberSolve { point: q, residual_history: history })
}

/// Newton–Kantorovich data at `q` for `φ(q) = g`: `β = 1/σ_min(JW^{-1/2})`,
/// `η = β‖φ(q) − g‖`, `L` the Jacobian Lipschitz bound, `h = βLη`. With
/// `h ≤ 1/4` a regular solution exists within `2η` of `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KantorovichReport {
    pub beta: f64,
    pub eta: f64,
    pub lipschitz: f64,
    pub h: f64,
    pub passed: bool,
}

pub fn kantorovich(c: &ConstraintMap, q: &[f64], target: &[f64]) -> Result<KantorovichReport> {
    let r: Vec<f64> = c.eval(q)?.iter().zip(target).map(|(a, b)| a - b).collect();
    let sv = singular_values(weighted_jacobian(&c.jacobian(q)?, c.weights()));
    let smin = if sv.len() == c.target_dim() { sv.last().copied().unwrap_or(0.0) } else { 0.0 };
    let beta = if smin > 0.0 { 1.0 / smin } else { f64::INFINITY };
    let eta = beta * norm2(&r);
    let lipschitz = c.jacobian_lipschitz(q, (2.0 * eta).min(1.0))?;
    let h = if eta == 0.0 { 0.0 } else { beta * lipschitz * eta };
    let passed = beta.is_finite() && h <= KANTOROVICH_BOUND;
    Ok(KantorovichReport { beta, eta, lipschitz, h, passed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoundPreimage {
    pub seed: usize,
    pub point: Vec<f64>,
    pub residual: f64,
    pub kantorovich: KantorovichReport,
    pub report: RegularPointReport,
    /// Rank test and Kantorovich check both pass.
    pub regular: bool,
}

/// Evidence about `g` gathered from Newton searches started at `seeds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularValueReport {
    pub target: Vec<f64>,
    pub seed_count: usize,
    /// Distinct converged points, in seed order.
    pub points: Vec<FoundPreimage>,
    /// Seeds whose search did not converge.
    pub unconverged: Vec<usize>,
}

impl RegularValueReport {
    /// `None` when no seed converged: no evidence either way. Otherwise
    /// whether every found point is regular; the fiber is never enumerated.
    pub fn verdict(&self) -> Option<bool> {
        (!self.points.is_empty()).then(|| self.points.iter().all(|p| p.regular))
    }

    pub fn regular_points(&self) -> impl Iterator<Item = &FoundPreimage> {
        self.points.iter().filter(|p| p.regular)
    }
}

/// Points closer than this in the weighted norm are merged.
const DUPLICATE_DISTANCE: f64 = 1e-8;

pub fn is_regular_value(
    c: &ConstraintMap,
    target: &[f64],
    seeds: &[Vec<f64>],
    opts: &NewtonOptions,
) -> Result<RegularValueReport> {
    let mut points: Vec<FoundPreimage> = Vec::new();
    let mut unconverged = Vec::new();
    for (i, seed) in seeds.iter().enumerate() {
        let solve = match find_fiber_point(c, target, seed, opts) {
            Ok(s) => s,
            Err(Error::NonConvergence { .. } | Error::SingularBlock { .. } | Error::Evaluation(_)) => {
                unconverged.push(i);
                continue;
            }
            Err(e) => return Err(e),
        };
        let duplicate = points.iter().any(|p| {
            let d: Vec<f64> = p.point.iter().zip(&solve.point).map(|(a, b)| a - b).collect();
            c.weighted_norm(&d) < DUPLICATE_DISTANCE
        });
        if duplicate {
            continue;
        }
        let report = is_regular_point(c, &solve.point)?;
        let kantorovich = kantorovich(c, &solve.point, target)?;
        points.push(FoundPreimage {
            seed: i,
            residual: *solve.residual_history.last().expect("nonempty"),
            regular: report.regular && kantorovich.passed,
            point: solve.point,
            kantorovich,
            report,
        });
    }
    Ok(RegularValueReport { target: target.to_vec(), seed_count: seeds.len(), points, unconverged })
}
