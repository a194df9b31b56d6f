//! Maps between graded spaces and their tameness certificates.
//!
//! A [`GradedSpace`] is a finite product `Σ(B_1) × … × Σ(B_k)` of truncated
//! sequence spaces sharing one grading and one truncation degree; the product
//! carries the sum grading `‖(f_1,…,f_k)‖_n = Σ_i ‖f_i‖_n`.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::certificate::{profile_degrees, BoundForm, Certification, ProbeNorms, RatioTable, Search, TamenessCertificate};
use crate::exec::{Executor, Sequential};
use crate::fiber::BanachFiber;
use crate::grading::Grading;
use crate::probes::{generate, ProbeConfig};
use crate::sequence::TruncatedSequence;
use crate::{Error, Result, Tolerance};

mod combinators;
mod quasi;
mod registry;

pub use combinators::{certify_composition, certify_projection, combine_product};
pub use quasi::{quasi_isometry_check, QuasiIsometryReport, QuasiIsometryWitness};
pub use registry::{build_map, MapSpec, REGISTRY_NAMES};

/// Radius of the default probe region.
pub const DEFAULT_REGION_RADIUS: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct GradedSpace {
    factors: Vec<BanachFiber>,
    degree: usize,
    grading: Grading,
}

impl GradedSpace {
    pub fn new(fiber: BanachFiber, degree: usize, grading: Grading) -> Self {
        GradedSpace { factors: alloc::vec![fiber], degree, grading }
    }

    /// `self^k`.
    pub fn power(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("a product needs at least one factor"));
        }
        let factors = (0..k).flat_map(|_| self.factors.iter().copied()).collect();
        Ok(GradedSpace { factors, ..self.clone() })
    }

    pub fn product(spaces: &[GradedSpace]) -> Result<Self> {
        let first = spaces.first().ok_or_else(|| Error::invalid("a product needs at least one factor"))?;
        for s in spaces {
            if s.degree != first.degree || !same_grading(&s.grading, &first.grading) {
                return Err(Error::invalid("product factors must share degree and grading"));
            }
        }
        let factors = spaces.iter().flat_map(|s| s.factors.iter().copied()).collect();
        Ok(GradedSpace { factors, ..first.clone() })
    }

    pub fn factors(&self) -> &[BanachFiber] {
        &self.factors
    }

    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn grading(&self) -> &Grading {
        &self.grading
    }

    pub fn n_max(&self) -> usize {
        self.grading.n_max()
    }

    pub fn compatible(&self, other: &GradedSpace) -> bool {
        self.factors == other.factors && self.degree == other.degree && same_grading(&self.grading, &other.grading)
    }

    pub fn check(&self, x: &Element) -> Result<()> {
        if x.0.len() != self.factors.len() {
            return Err(Error::Dimension { expected: self.factors.len(), found: x.0.len() });
        }
        for (f, fiber) in x.0.iter().zip(&self.factors) {
            if f.degree() != self.degree {
                return Err(Error::Dimension { expected: self.degree + 1, found: f.degree() + 1 });
            }
            if f.fiber().dim() != fiber.dim() || f.fiber().norm_kind() != fiber.norm_kind() {
                return Err(Error::invalid("element lies over a different fiber"));
            }
            for c in f.coefficients() {
                fiber.check(c)?;
            }
        }
        Ok(())
    }

    pub fn norm(&self, x: &Element, n: usize) -> Result<f64> {
        x.0.iter().map(|f| self.grading.eval(f, n)).sum()
    }

    pub fn profile(&self, x: &Element) -> Result<Vec<f64>> {
        (0..=self.n_max()).map(|n| self.norm(x, n)).collect()
    }

    pub fn zero(&self) -> Element {
        Element(self.factors.iter().map(|&fiber| TruncatedSequence::zeros(fiber, self.degree)).collect())
    }

    /// Seeded probes; factor `i` of probe `j` is the `j`-th probe of an
    /// independent stream for that factor.
    pub fn probes<R: Rng + ?Sized>(&self, config: &ProbeConfig, rng: &mut R) -> Vec<Element> {
        let per_factor: Vec<Vec<TruncatedSequence>> =
            self.factors.iter().map(|&fiber| generate(fiber, self.degree, config, rng)).collect();
        (0..config.count).map(|j| Element(per_factor.iter().map(|ps| ps[j].clone()).collect())).collect()
    }
}

fn same_grading(a: &Grading, b: &Grading) -> bool {
    a.name() == b.name() && a.n_max() == b.n_max()
}

/// Point of a [`GradedSpace`], one sequence per factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Element(pub Vec<TruncatedSequence>);

impl Element {
    pub fn single(f: TruncatedSequence) -> Self {
        Element(alloc::vec![f])
    }

    pub fn factor(&self, i: usize) -> &TruncatedSequence {
        &self.0[i]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(TruncatedSequence::is_zero)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Element(self.0.iter().map(|f| f.scaled(s)).collect())
    }

    pub fn truncated(&self, degree: usize) -> Self {
        Element(self.0.iter().map(|f| f.truncated(degree)).collect())
    }

    pub fn try_add(&self, other: &Element, s: f64) -> Result<Self> {
        if self.0.len() != other.0.len() {
            return Err(Error::Dimension { expected: self.0.len(), found: other.0.len() });
        }
        self.0.iter().zip(&other.0).map(|(a, b)| a.try_zip(b, |x, y| x + y * s)).collect::<Result<_>>().map(Element)
    }

    pub fn concat(parts: Vec<Element>) -> Self {
        Element(parts.into_iter().flat_map(|e| e.0).collect())
    }
}

pub type Evaluator = dyn Fn(&Element) -> Result<Element> + Send + Sync;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linearity {
    Linear,
    Nonlinear,
}

/// Ball `‖f‖_level ≤ radius` the probes are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRegion {
    pub level: usize,
    pub radius: f64,
}

impl Default for ProbeRegion {
    fn default() -> Self {
        ProbeRegion { level: 0, radius: DEFAULT_REGION_RADIUS }
    }
}

#[derive(Clone)]
pub struct TameMapDescriptor {
    name: String,
    domain: GradedSpace,
    codomain: GradedSpace,
    linearity: Linearity,
    region: ProbeRegion,
    eval: Arc<Evaluator>,
}

impl fmt::Debug for TameMapDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TameMapDescriptor")
            .field("name", &self.name)
            .field("linearity", &self.linearity)
            .field("region", &self.region)
            .finish()
    }
}

impl TameMapDescriptor {
    /// `eval` must be pure.
    pub fn new(
        name: impl Into<String>,
        domain: GradedSpace,
        codomain: GradedSpace,
        linearity: Linearity,
        eval: impl Fn(&Element) -> Result<Element> + Send + Sync + 'static,
    ) -> Self {
        TameMapDescriptor {
            name: name.into(),
            domain,
            codomain,
            linearity,
            region: ProbeRegion::default(),
            eval: Arc::new(eval),
        }
    }

    pub fn with_region(mut self, region: ProbeRegion) -> Self {
        self.region = region;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &GradedSpace {
        &self.domain
    }

    pub fn codomain(&self) -> &GradedSpace {
        &self.codomain
    }

    pub fn linearity(&self) -> Linearity {
        self.linearity
    }

    pub fn region(&self) -> ProbeRegion {
        self.region
    }

    pub(crate) fn evaluator(&self) -> Arc<Evaluator> {
        self.eval.clone()
    }

    /// Evaluates and checks that the value lies in the codomain.
    pub fn apply(&self, x: &Element) -> Result<Element> {
        self.domain.check(x)?;
        let y = (self.eval)(x)?;
        self.codomain.check(&y)?;
        Ok(y)
    }

    pub fn in_region(&self, x: &Element, tol: Tolerance) -> Result<bool> {
        Ok(tol.le(self.domain.norm(x, self.region.level)?, self.region.radius))
    }

    /// Scales probes outside the region radially onto its boundary.
    pub fn fit_to_region(&self, probes: &[Element]) -> Result<Vec<Element>> {
        probes
            .iter()
            .map(|x| {
                let norm = self.domain.norm(x, self.region.level)?;
                Ok(if norm > self.region.radius { x.scaled(self.region.radius / norm) } else { x.clone() })
            })
            .collect()
    }

    /// Additivity and homogeneity on consecutive probe pairs; returns the
    /// largest defect relative to `1 + ‖Φ(f)‖ + ‖Φ(g)‖` at level 0.
    pub fn linearity_defect(&self, probes: &[Element]) -> Result<f64> {
        let mut worst = 0.0f64;
        for pair in probes.windows(2) {
            let (f, g) = (&pair[0], &pair[1]);
            let (pf, pg) = (self.apply(f)?, self.apply(g)?);
            let scale = 1.0 + self.codomain.norm(&pf, 0)? + self.codomain.norm(&pg, 0)?;
            let sum = self.apply(&f.try_add(g, 1.0)?)?;
            let additive = self.codomain.norm(&sum.try_add(&pf.try_add(&pg, 1.0)?, -1.0)?, 0)?;
            let homogeneous = self.codomain.norm(&self.apply(&f.scaled(-2.5))?.try_add(&pf, 2.5)?, 0)?;
            worst = worst.max(additive / scale).max(homogeneous / scale);
        }
        Ok(worst)
    }
}

impl BoundForm {
    pub fn for_linearity(l: Linearity) -> Self {
        match l {
            Linearity::Linear => BoundForm::Linear,
            Linearity::Nonlinear => BoundForm::Affine,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub r_max: usize,
    pub b: usize,
    /// Judge unboundedness from truncation profiles. Turn off when probes do
    /// not survive truncation (e.g. points of a proper subspace).
    pub profile: bool,
    pub tol: Tolerance,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { r_max: 2, b: 0, profile: true, tol: Tolerance::DEFAULT }
    }
}

fn map_tables<E: Executor>(
    map: &TameMapDescriptor,
    probes: &[Element],
    opts: &CertifyOptions,
    exec: &E,
) -> Result<Vec<RatioTable>> {
    if probes.is_empty() {
        return Err(Error::invalid("empty probe set"));
    }
    if map.domain.n_max() != map.codomain.n_max() {
        return Err(Error::invalid(alloc::format!(
            "domain and codomain gradings must share an index range (0..={} vs 0..={})",
            map.domain.n_max(),
            map.codomain.n_max()
        )));
    }
    let n_max = map.domain.n_max();
    if opts.r_max > n_max {
        return Err(Error::range("r_max", opts.r_max as f64, n_max as f64));
    }
    for x in probes {
        map.domain.check(x)?;
        if !map.in_region(x, opts.tol)? {
            return Err(Error::invalid("probe lies outside the probe region"));
        }
    }
    let degrees = if opts.profile { profile_degrees(map.domain.degree()) } else { alloc::vec![map.domain.degree()] };
    let mut out = Vec::with_capacity(degrees.len());
    for j in degrees {
        let rows = exec.map_indexed(probes.len(), |i| -> Result<ProbeNorms> {
            let x = probes[i].truncated(j);
            let y = map.apply(&x)?;
            Ok(ProbeNorms { lhs: map.codomain.profile(&y)?, rhs: map.domain.profile(&x)? })
        });
        out.push(RatioTable { degree: j, probes: rows.into_iter().collect::<Result<_>>()? });
    }
    Ok(out)
}

/// Outcome of [`certify_tame`] together with the full-degree ratio table.
#[derive(Debug, Clone)]
pub struct MapCertification {
    pub outcome: Certification,
    pub table: RatioTable,
}

/// Smallest `r ≤ r_max` with bounded ratios `‖Φf‖_n / (1+‖f‖_{n+r})`
/// (`‖f‖_{n+r}` for linear maps).
pub fn certify_tame(map: &TameMapDescriptor, probes: &[Element], opts: &CertifyOptions) -> Result<MapCertification> {
    certify_tame_with(map, probes, opts, &Sequential)
}

pub fn certify_tame_with<E: Executor>(
    map: &TameMapDescriptor,
    probes: &[Element],
    opts: &CertifyOptions,
    exec: &E,
) -> Result<MapCertification> {
    let tables = map_tables(map, probes, opts, exec)?;
    let search = Search {
        tables: &tables,
        form: BoundForm::for_linearity(map.linearity),
        r_max: opts.r_max,
        b: opts.b,
        n_max: map.domain.n_max(),
        tol: opts.tol,
    };
    let outcome = search.run()?;
    Ok(MapCertification { outcome, table: tables.into_iter().last().expect("nonempty") })
}

/// Certificate at the given shift using the full-degree probes only.
pub fn certify_tame_fixed(
    map: &TameMapDescriptor,
    probes: &[Element],
    r: usize,
    form: BoundForm,
    opts: &CertifyOptions,
) -> Result<(TamenessCertificate, RatioTable)> {
    let tables = map_tables(map, probes, &CertifyOptions { profile: false, r_max: 0, ..*opts }, &Sequential)?;
    let search = Search { tables: &tables, form, r_max: r, b: opts.b, n_max: map.domain.n_max(), tol: opts.tol };
    let cert = search.fixed(r)?;
    Ok((cert, tables.into_iter().next().expect("nonempty")))
}

/// Central difference `(Φ(f+εh) − Φ(f−εh))/(2ε)` with default
/// `ε = 1e-6·(1+‖f‖_b)`, `b` the region level.
pub fn directional_derivative(
    map: &TameMapDescriptor,
    f: &Element,
    h: &Element,
    step: Option<f64>,
) -> Result<Element> {
    let norm_f = map.domain.norm(f, map.region.level)?;
    let eps = step.unwrap_or(1e-6 * (1.0 + norm_f));
    if !(eps.is_finite() && eps > f64::EPSILON * (1.0 + norm_f)) {
        return Err(Error::invalid(alloc::format!("finite-difference step {eps:e} underflows")));
    }
    let plus = map.apply(&f.try_add(h, eps)?)?;
    let minus = map.apply(&f.try_add(h, -eps)?)?;
    Ok(plus.try_add(&minus, -1.0)?.scaled(0.5 / eps))
}
