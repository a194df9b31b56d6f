//! Atlases of co-finite-type submanifolds `φ⁻¹(0)`, chart transitions and
//! maps into submanifolds.
//!
//! A submanifold lives in a one-factor [`GradedSpace`] over a real fiber;
//! its points are stored in the flattened coordinates of a
//! [`SequenceLayout`]. Chart coordinates `(u, t)` are represented inside the
//! same space as the vector `X u + Y t`, so chart transitions and
//! chart-composed maps are ordinary maps between graded spaces and are
//! certified with [`certify_tame`].

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certificate::{Certification, TamenessCertificate};
use crate::exec::{Executor, Sequential};
use crate::fiber::ScalarField;
use crate::implicit::{
    build_chart, find_fiber_point, is_regular_value, Chart, ChartOptions, ConstraintMap, RegularValueReport,
    SequenceLayout,
};
use crate::maps::{certify_tame, CertifyOptions, Element, GradedSpace, Linearity, ProbeRegion, TameMapDescriptor};
use crate::{Error, Result};

/// Residual allowed at chart base points and image points.
pub const DEFAULT_MANIFOLD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct AtlasOptions {
    pub chart: ChartOptions,
    /// Base points added to the default ones.
    pub extra_points: Vec<Vec<f64>>,
    /// Newton seeds for sphere intersections.
    pub seeds: usize,
    /// Charts kept from a sphere-intersection search.
    pub max_charts: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for AtlasOptions {
    fn default() -> Self {
        AtlasOptions {
            chart: ChartOptions::default(),
            extra_points: Vec::new(),
            seeds: 16,
            max_charts: 2,
            seed: 0,
            tol: DEFAULT_MANIFOLD_TOL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Submanifold {
    constraint: ConstraintMap,
    ambient: GradedSpace,
    charts: Vec<Chart>,
    tol: f64,
}

fn layout_of(ambient: &GradedSpace) -> Result<SequenceLayout> {
    if ambient.factor_count() != 1 {
        return Err(Error::invalid("the ambient space must have exactly one factor"));
    }
    SequenceLayout::new(ambient.factors()[0], ambient.degree())
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(libm::fabs(*x)))
}

impl Submanifold {
    /// `φ⁻¹(0)` with charts at the given base points.
    pub fn new(constraint: ConstraintMap, ambient: GradedSpace, points: &[Vec<f64>], opts: &AtlasOptions) -> Result<Self> {
        let layout = layout_of(&ambient)?;
        if layout != constraint.layout() {
            return Err(Error::invalid("constraint and ambient space use different layouts"));
        }
        let mut m = Submanifold { constraint, ambient, charts: Vec::new(), tol: opts.tol };
        for p in points {
            m.add_chart(p, &opts.chart)?;
        }
        Ok(m)
    }

    /// Adds a chart at `p`, which must lie on the fiber and be regular.
    pub fn add_chart(&mut self, p: &[f64], opts: &ChartOptions) -> Result<()> {
        let residual = self.residual(p)?;
        if residual > self.tol {
            return Err(Error::OffManifold { residual });
        }
        let chart_opts = ChartOptions { seed: opts.seed.wrapping_add(self.charts.len() as u64), ..*opts };
        self.charts.push(build_chart(&self.constraint, p, &chart_opts)?);
        Ok(())
    }

    pub fn constraint(&self) -> &ConstraintMap {
        &self.constraint
    }

    pub fn ambient(&self) -> &GradedSpace {
        &self.ambient
    }

    pub fn layout(&self) -> SequenceLayout {
        self.constraint.layout()
    }

    pub fn codimension(&self) -> usize {
        self.constraint.target_dim()
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// `max_i |φ_i(q)|`.
    pub fn residual(&self, q: &[f64]) -> Result<f64> {
        Ok(max_abs(&self.constraint.eval(q)?))
    }

    pub fn contains(&self, q: &[f64]) -> Result<bool> {
        Ok(self.residual(q)? <= self.tol)
    }

    pub fn to_element(&self, q: &[f64]) -> Result<Element> {
        Ok(Element::single(self.layout().to_sequence(q)?))
    }

    pub fn from_element(&self, x: &Element) -> Result<Vec<f64>> {
        self.ambient.check(x)?;
        self.layout().from_sequence(x.factor(0))
    }

    pub fn document(&self) -> AtlasDocument {
        AtlasDocument {
            constraint: self.constraint.name().into(),
            codimension: self.codimension(),
            inner_product_level: self.constraint.level(),
            degree: self.layout().degree(),
            fiber_dim: self.layout().fiber().dim(),
            tol: self.tol,
            charts: self
                .charts
                .iter()
                .map(|c| ChartDocument {
                    base_point: c.base_point().to_vec(),
                    bases: ChartBases {
                        kernel: c.report().kernel_basis.clone(),
                        complement: c.report().complement_basis.clone(),
                    },
                    radius: c.validity_radius(),
                    singular_values: c.report().singular_values.clone(),
                })
                .collect(),
        }
    }
}

/// Serialized form of an atlas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasDocument {
    pub constraint: String,
    pub codimension: usize,
    pub inner_product_level: usize,
    pub degree: usize,
    pub fiber_dim: usize,
    pub tol: f64,
    pub charts: Vec<ChartDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartDocument {
    pub base_point: Vec<f64>,
    pub bases: ChartBases,
    pub radius: f64,
    pub singular_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartBases {
    pub kernel: Vec<Vec<f64>>,
    pub complement: Vec<Vec<f64>>,
}

fn check_sphere_ambient(ambient: &GradedSpace, levels: &[usize]) -> Result<SequenceLayout> {
    let layout = layout_of(ambient)?;
    let fiber = layout.fiber();
    if fiber.field() != ScalarField::Real || !ambient.grading().is_metric_on(fiber.norm_kind()) {
        return Err(Error::UnsupportedGrading(format!(
            "spheres need an inner-product grading on a real Euclidean fiber, got '{}'",
            ambient.grading().name()
        )));
    }
    for &n in levels {
        if n > ambient.n_max() {
            return Err(Error::range("sphere level", n as f64, ambient.n_max() as f64));
        }
    }
    Ok(layout)
}

/// Default base points `e₀` and the next basis vector scaled to the level-`n`
/// sphere.
pub fn default_sphere_points(layout: SequenceLayout, level: usize) -> Result<Vec<Vec<f64>>> {
    let e0 = layout.unit(0, 0);
    let second = if layout.fiber().dim() >= 2 {
        layout.unit(0, 1)
    } else if layout.degree() >= 1 {
        let mut v = layout.unit(1, 0);
        let w = layout.weights(level)?;
        v[1] /= libm::sqrt(w[1]);
        v
    } else {
        return Ok(alloc::vec![e0]);
    };
    Ok(alloc::vec![e0, second])
}

/// `S^n = {x : ⟨x,x⟩_n = 1}` with charts at the default and extra points.
pub fn make_sphere(level: usize, ambient: &GradedSpace, opts: &AtlasOptions) -> Result<Submanifold> {
    let layout = check_sphere_ambient(ambient, &[level])?;
    let constraint = ConstraintMap::sphere(layout, level)?;
    let mut points = default_sphere_points(layout, level)?;
    points.extend(opts.extra_points.iter().cloned());
    Submanifold::new(constraint, ambient.clone(), &points, opts)
}

/// Seeds with random decaying coefficients in every coordinate.
fn intersection_seeds(layout: SequenceLayout, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..layout.dim()).map(|i| rng.gen_range(-1.0..1.0) * libm::exp(-(layout.k_of(i) as f64))).collect())
        .collect()
}

fn intersection_constraint(levels: &[usize], ambient: &GradedSpace) -> Result<ConstraintMap> {
    let layout = check_sphere_ambient(ambient, levels)?;
    if levels.len() > layout.degree() {
        return Err(Error::invalid(format!(
            "{} levels exceed the truncation degree {}",
            levels.len(),
            layout.degree()
        )));
    }
    ConstraintMap::spheres(layout, levels)
}

/// Newton search evidence for `φ = (⟨x,x⟩_{n_i} − 1)_i` from seeded starts.
pub fn sphere_intersection_evidence(
    levels: &[usize],
    ambient: &GradedSpace,
    opts: &AtlasOptions,
) -> Result<RegularValueReport> {
    let c = intersection_constraint(levels, ambient)?;
    let seeds = intersection_seeds(c.layout(), opts.seeds, opts.seed);
    is_regular_value(&c, &alloc::vec![0.0; c.target_dim()], &seeds, &opts.chart.newton)
}

/// Intersection of the level spheres; charts at regular points found from
/// seeded Newton searches. Fails with a summary of the search when no
/// regular point is found.
pub fn make_sphere_intersection(levels: &[usize], ambient: &GradedSpace, opts: &AtlasOptions) -> Result<Submanifold> {
    if levels.len() == 1 {
        return make_sphere(levels[0], ambient, opts);
    }
    let c = intersection_constraint(levels, ambient)?;
    let evidence = sphere_intersection_evidence(levels, ambient, opts)?;
    let mut points: Vec<Vec<f64>> = evidence.regular_points().take(opts.max_charts).map(|p| p.point.clone()).collect();
    if points.is_empty() {
        return Err(Error::ConstructionFailure(evidence_summary(&evidence)));
    }
    points.extend(opts.extra_points.iter().cloned());
    Submanifold::new(c, ambient.clone(), &points, opts)
}

pub fn evidence_summary(e: &RegularValueReport) -> String {
    let rank_deficient = e.points.iter().filter(|p| !p.report.regular).count();
    let unverified = e.points.iter().filter(|p| p.report.regular && !p.kantorovich.passed).count();
    let max_rank = e
        .points
        .iter()
        .map(|p| p.report.singular_values.iter().filter(|s| **s > crate::implicit::RANK_THRESHOLD * p.report.sigma_max()).count())
        .max()
        .unwrap_or(0);
    format!(
        "no regular point among {} seeds: {} distinct fiber points ({} rank-deficient, {} failing the Kantorovich check, max rank {} of {}), {} unconverged",
        e.seed_count,
        e.points.len(),
        rank_deficient,
        unverified,
        max_rank,
        e.target.len(),
        e.unconverged.len()
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionStatus {
    Passed,
    Failed,
    EmptyOverlap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub chart_i: usize,
    pub chart_j: usize,
    pub status: TransitionStatus,
    pub probes: usize,
    /// Largest round-trip error through either chart, weighted norm.
    pub max_error: f64,
    pub certificate: Option<TamenessCertificate>,
    /// Violations of the certificate on its own probes.
    pub violations: usize,
    /// Evaluation failures, e.g. Newton non-convergence inside a chart.
    pub failures: usize,
}

impl TransitionReport {
    pub fn r(&self) -> Option<usize> {
        self.certificate.as_ref().map(|c| c.r)
    }

    pub fn b(&self) -> Option<usize> {
        self.certificate.as_ref().map(|c| c.b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionOptions {
    pub probes: usize,
    /// Sampling attempts per requested probe.
    pub attempts: usize,
    /// Size of the random perturbation of interpolated points.
    pub spread: f64,
    pub round_trip_tol: f64,
    pub certify: CertifyOptions,
    pub seed: u64,
}

impl Default for TransitionOptions {
    fn default() -> Self {
        TransitionOptions {
            probes: 32,
            attempts: 20,
            spread: 0.2,
            round_trip_tol: 1e-8,
            certify: CertifyOptions { r_max: 0, profile: false, ..CertifyOptions::default() },
            seed: 0,
        }
    }
}

/// Fiber points in both validity balls, from projections of perturbed
/// interpolations between the two base points.
pub fn overlap_probes(m: &Submanifold, i: usize, j: usize, opts: &TransitionOptions) -> Result<Vec<Vec<f64>>> {
    let (a, b) = (&m.charts[i], &m.charts[j]);
    let c = m.constraint();
    let layout = m.layout();
    let stream = opts.seed ^ ((i as u64) << 32 | j as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    let target = alloc::vec![0.0; c.target_dim()];
    let mut out: Vec<Vec<f64>> = Vec::new();
    for _ in 0..opts.probes * opts.attempts {
        if out.len() == opts.probes {
            break;
        }
        let s: f64 = rng.gen_range(0.0..1.0);
        let seed: Vec<f64> = a
            .base_point()
            .iter()
            .zip(b.base_point())
            .zip(c.weights())
            .enumerate()
            .map(|(k, ((x, y), w))| {
                let noise = opts.spread * rng.gen_range(-1.0..1.0) * libm::exp(-(layout.k_of(k) as f64));
                (1.0 - s) * x + s * y + noise / libm::sqrt(*w)
            })
            .collect();
        let Ok(solve) = find_fiber_point(c, &target, &seed, &a.newton_options()) else {
            continue;
        };
        if a.contains(&solve.point) && b.contains(&solve.point) && m.residual(&solve.point)? <= m.tol {
            out.push(solve.point);
        }
    }
    Ok(out)
}

/// `τ(v) = ι_j(fwd_j(inv_i(ι_i⁻¹ v)))` as a map of the ambient space.
pub fn transition_map(m: &Submanifold, i: usize, j: usize) -> TameMapDescriptor {
    let (a, b) = (m.charts[i].clone(), m.charts[j].clone());
    let layout = m.layout();
    let space = m.ambient().clone();
    TameMapDescriptor::new(
        format!("transition:{i}->{j}"),
        space.clone(),
        space,
        Linearity::Nonlinear,
        move |x: &Element| {
            let v = layout.from_sequence(x.factor(0))?;
            let (u, t) = a.unembed(&v)?;
            let q = a.inverse(&u, &t)?;
            let (u2, t2) = b.forward(&q)?;
            Ok(Element::single(layout.to_sequence(&b.embed(&u2, &t2)?)?))
        },
    )
}

fn chart_vector(m: &Submanifold, chart: &Chart, q: &[f64]) -> Result<Element> {
    let (u, t) = chart.forward(q)?;
    m.to_element(&chart.embed(&u, &t)?)
}

fn region_for(m: &Submanifold, probes: &[Element]) -> Result<ProbeRegion> {
    let level = m.ambient().n_max();
    let mut radius: f64 = 0.0;
    for p in probes {
        radius = radius.max(m.ambient().norm(p, level)?);
    }
    Ok(ProbeRegion { level, radius: radius * (1.0 + 1e-9) + f64::MIN_POSITIVE })
}

fn verify_pair(m: &Submanifold, i: usize, j: usize, opts: &TransitionOptions) -> Result<TransitionReport> {
    let points = overlap_probes(m, i, j, opts)?;
    let mut report = TransitionReport {
        chart_i: i,
        chart_j: j,
        status: TransitionStatus::EmptyOverlap,
        probes: points.len(),
        max_error: 0.0,
        certificate: None,
        violations: 0,
        failures: 0,
    };
    if points.is_empty() {
        return Ok(report);
    }
    let (a, b) = (&m.charts[i], &m.charts[j]);
    let mut probes = Vec::with_capacity(points.len());
    for q in &points {
        match (a.round_trip_error(q), b.round_trip_error(q), chart_vector(m, a, q)) {
            (Ok(ea), Ok(eb), Ok(v)) => {
                report.max_error = report.max_error.max(ea).max(eb);
                probes.push(v);
            }
            _ => report.failures += 1,
        }
    }
    if probes.is_empty() {
        report.status = TransitionStatus::Failed;
        return Ok(report);
    }
    let map = transition_map(m, i, j).with_region(region_for(m, &probes)?);
    let cert = match certify_tame(&map, &probes, &opts.certify) {
        Ok(c) => c,
        Err(Error::NonConvergence { .. } | Error::SingularBlock { .. }) => {
            report.failures += 1;
            report.status = TransitionStatus::Failed;
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    if let Certification::Certified(c) = &cert.outcome {
        report.violations = c.validate(&cert.table, opts.certify.tol).len();
        report.certificate = Some(c.clone());
    }
    let passed = report.certificate.is_some()
        && report.violations == 0
        && report.failures == 0
        && report.max_error <= opts.round_trip_tol;
    report.status = if passed { TransitionStatus::Passed } else { TransitionStatus::Failed };
    Ok(report)
}

/// One report per chart pair `i < j`; pairs without sampled overlap are
/// reported as [`TransitionStatus::EmptyOverlap`].
pub fn verify_transitions(m: &Submanifold, opts: &TransitionOptions) -> Result<Vec<TransitionReport>> {
    verify_transitions_with(m, opts, &Sequential)
}

pub fn verify_transitions_with<E: Executor>(
    m: &Submanifold,
    opts: &TransitionOptions,
    exec: &E,
) -> Result<Vec<TransitionReport>> {
    let n = m.charts.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    exec.map_indexed(pairs.len(), |k| verify_pair(m, pairs[k].0, pairs[k].1, opts)).into_iter().collect()
}

/// Per-chart restriction `h ↦ ι(fwd(f(h)))` on the probes whose image lies
/// in the chart's validity ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartRestrictionReport {
    pub chart: usize,
    pub probes: usize,
    /// Largest `|t|` of the chart coordinates of image points.
    pub max_normal_coordinate: f64,
    pub certification: Option<Certification>,
    pub violations: usize,
}

impl ChartRestrictionReport {
    pub fn validated(&self) -> bool {
        self.probes == 0 || (matches!(&self.certification, Some(c) if c.is_certified()) && self.violations == 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntoSubmanifoldReport {
    pub map: String,
    pub probes: usize,
    pub max_residual: f64,
    pub ambient: Certification,
    pub ambient_violations: usize,
    pub restrictions: Vec<ChartRestrictionReport>,
}

impl IntoSubmanifoldReport {
    /// The ambient certificate, which is what tameness into the
    /// submanifold requires, together with every chart restriction.
    pub fn passed(&self) -> bool {
        self.ambient.is_certified() && self.ambient_violations == 0 && self.restrictions.iter().all(|r| r.validated())
    }
}

/// Certifies `f` as a map into the ambient space after checking that its
/// image lies on `m`, then certifies the chart-composed restrictions.
pub fn certify_map_into_submanifold(
    f: &TameMapDescriptor,
    m: &Submanifold,
    probes: &[Element],
    opts: &CertifyOptions,
) -> Result<IntoSubmanifoldReport> {
    if !f.codomain().compatible(m.ambient()) {
        return Err(Error::invalid("map codomain differs from the ambient space"));
    }
    let mut images = Vec::with_capacity(probes.len());
    let mut max_residual: f64 = 0.0;
    for (i, h) in probes.iter().enumerate() {
        let q = m.from_element(&f.apply(h)?)?;
        let residual = m.residual(&q)?;
        if residual > m.tol {
            return Err(Error::NotIntoSubmanifold { probe: i, residual });
        }
        max_residual = max_residual.max(residual);
        images.push(q);
    }
    let ambient = certify_tame(f, probes, opts)?;
    let ambient_violations = ambient.outcome.certificate().map_or(0, |c| c.validate(&ambient.table, opts.tol).len());

    let mut restrictions = Vec::with_capacity(m.charts.len());
    for (ci, chart) in m.charts.iter().enumerate() {
        let inside: Vec<usize> = (0..probes.len()).filter(|&i| chart.contains(&images[i])).collect();
        let mut report =
            ChartRestrictionReport { chart: ci, probes: inside.len(), max_normal_coordinate: 0.0, certification: None, violations: 0 };
        if !inside.is_empty() {
            for &i in &inside {
                let (_, t) = chart.forward(&images[i])?;
                report.max_normal_coordinate = report.max_normal_coordinate.max(max_abs(&t));
            }
            let restricted = restriction_map(f, m, chart.clone());
            let sub: Vec<Element> = inside.iter().map(|&i| probes[i].clone()).collect();
            let cert = certify_tame(&restricted, &sub, opts)?;
            report.violations = cert.outcome.certificate().map_or(0, |c| c.validate(&cert.table, opts.tol).len());
            report.certification = Some(cert.outcome);
        }
        restrictions.push(report);
    }
    Ok(IntoSubmanifoldReport {
        map: f.name().into(),
        probes: probes.len(),
        max_residual,
        ambient: ambient.outcome,
        ambient_violations,
        restrictions,
    })
}

fn restriction_map(f: &TameMapDescriptor, m: &Submanifold, chart: Chart) -> TameMapDescriptor {
    let inner = f.clone();
    let layout = m.layout();
    TameMapDescriptor::new(
        format!("{}|chart", f.name()),
        f.domain().clone(),
        m.ambient().clone(),
        f.linearity(),
        move |h: &Element| {
            let q = layout.from_sequence(inner.apply(h)?.factor(0))?;
            let (u, t) = chart.forward(&q)?;
            Ok(Element::single(layout.to_sequence(&chart.embed(&u, &t)?)?))
        },
    )
    .with_region(f.region())
}
