//! Local straightening charts `q ↦ (P_{F₀}(q − p), φ(q))`.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::newton::{solve_implicit, NewtonOptions};
use super::regular::{is_regular_point, RegularPointReport, Splitting};
use super::ConstraintMap;
use crate::probes::unit_direction;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartOptions {
    pub newton: NewtonOptions,
    /// Largest validity radius tried.
    pub radius_cap: f64,
    /// Random test directions for the radius search, in addition to `±`
    /// the complement directions.
    pub directions: usize,
    pub bisection_steps: usize,
    /// Round-trip error allowed inside the validity radius.
    pub round_trip_tol: f64,
    pub seed: u64,
}

impl Default for ChartOptions {
    fn default() -> Self {
        ChartOptions {
            newton: NewtonOptions::default(),
            radius_cap: 1.0,
            directions: 16,
            bisection_steps: 30,
            round_trip_tol: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Chart {
    constraint: ConstraintMap,
    split: Splitting,
    report: RegularPointReport,
    radius: f64,
    newton: NewtonOptions,
}

impl Chart {
    pub fn base_point(&self) -> &[f64] {
        self.split.base()
    }

    pub fn report(&self) -> &RegularPointReport {
        &self.report
    }

    pub fn splitting(&self) -> &Splitting {
        &self.split
    }

    pub fn constraint(&self) -> &ConstraintMap {
        &self.constraint
    }

    pub fn validity_radius(&self) -> f64 {
        self.radius
    }

    pub fn newton_options(&self) -> NewtonOptions {
        self.newton
    }

    /// `(u, t) = (P_{F₀}(q − p), φ(q))`.
    pub fn forward(&self, q: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (u, _) = self.split.coords(q)?;
        Ok((u, self.constraint.eval(q)?))
    }

    /// Solves `φ(p + X u + Y y) = t` for `y` from `y = 0`.
    pub fn inverse(&self, u: &[f64], t: &[f64]) -> Result<Vec<f64>> {
        if t.len() != self.constraint.target_dim() {
            return Err(Error::Dimension { expected: self.constraint.target_dim(), found: t.len() });
        }
        let target: Vec<f64> = t.to_vec();
        let shifted = shift_target(&self.constraint, target);
        let y0 = alloc::vec![0.0; self.split.y_dim()];
        let sol = solve_implicit(&shifted, &self.split, u, &y0, &self.newton)?;
        self.split.point(u, &sol.y)
    }

    /// `‖inverse(forward(q)) − q‖_W`.
    pub fn round_trip_error(&self, q: &[f64]) -> Result<f64> {
        let (u, t) = self.forward(q)?;
        let back = self.inverse(&u, &t)?;
        let d: Vec<f64> = back.iter().zip(q).map(|(a, b)| a - b).collect();
        Ok(self.constraint.weighted_norm(&d))
    }

    /// `‖q − p‖_W ≤ radius`.
    pub fn contains(&self, q: &[f64]) -> bool {
        let d: Vec<f64> = q.iter().zip(self.split.base()).map(|(a, b)| a - b).collect();
        q.len() == self.split.dim() && self.constraint.weighted_norm(&d) <= self.radius
    }

    /// Chart coordinates `(u, t)` as the vector `X u + Y t` of the ambient
    /// space.
    pub fn embed(&self, u: &[f64], t: &[f64]) -> Result<Vec<f64>> {
        self.split.embed(u, t)
    }

    pub fn unembed(&self, v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.split.unembed(v)
    }
}

/// `q ↦ φ(q) − t`.
fn shift_target(c: &ConstraintMap, t: Vec<f64>) -> ConstraintMap {
    if t.iter().all(|v| *v == 0.0) {
        return c.clone();
    }
    let inner = c.clone();
    let jac_source = c.clone();
    let shifted = ConstraintMap::custom(
        c.name(),
        c.layout(),
        c.target_dim(),
        move |q| Ok(inner.eval(q)?.iter().zip(&t).map(|(a, b)| a - b).collect()),
        Some(alloc::sync::Arc::new(move |q: &[f64]| jac_source.jacobian(q))),
    )
    .expect("same shape as the original constraint");
    shifted.with_level(c.level()).expect("level already validated")
}

/// Chart at the regular point `p` with an empirically bisected validity
/// radius.
pub fn build_chart(c: &ConstraintMap, p: &[f64], opts: &ChartOptions) -> Result<Chart> {
    let report = is_regular_point(c, p)?;
    let split = Splitting::from_report(&report, c)?;
    let mut chart = Chart { constraint: c.clone(), split, report, radius: 0.0, newton: opts.newton };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut dirs: Vec<Vec<f64>> = (0..opts.directions)
        .map(|_| {
            let u = unit_direction(c.dim(), &mut rng);
            let v: Vec<f64> = u.iter().zip(c.weights()).map(|(x, w)| x / libm::sqrt(*w)).collect();
            let n = c.weighted_norm(&v);
            v.into_iter().map(|x| x / n).collect()
        })
        .collect();
    for col in chart.report.complement_basis.clone() {
        dirs.push(col.iter().map(|x| -x).collect());
        dirs.push(col);
    }
    let ok = |chart: &Chart, rho: f64| {
        dirs.iter().all(|d| {
            let q: Vec<f64> = p.iter().zip(d).map(|(a, b)| a + rho * b).collect();
            matches!(chart.round_trip_error(&q), Ok(e) if e <= opts.round_trip_tol)
        })
    };
    chart.radius = if ok(&chart, opts.radius_cap) {
        opts.radius_cap
    } else {
        let (mut lo, mut hi) = (0.0, opts.radius_cap);
        for _ in 0..opts.bisection_steps {
            let mid = 0.5 * (lo + hi);
            if ok(&chart, mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    Ok(chart)
}
