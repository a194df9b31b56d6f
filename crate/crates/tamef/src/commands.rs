//! The four batch commands. Each writes its outputs into `cfg.out` and
//! returns the process exit code.

use std::fmt;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tamef_core::atlas::{
    evidence_summary, make_sphere, make_sphere_intersection, sphere_intersection_evidence, AtlasDocument,
    AtlasOptions, TransitionOptions, TransitionReport, TransitionStatus,
};
use tamef_core::equivalence::certify_grading_equivalence_with;
use tamef_core::implicit::{
    solve_implicit, ChartOptions, NewtonOptions, RegularValueReport, SequenceLayout, Splitting,
};
use tamef_core::maps::{build_map, certify_tame_with, CertifyOptions, Element, GradedSpace, MapSpec};
use tamef_core::probes::{generate, ProbeConfig};
use tamef_core::certificate::RatioTable;
use tamef_core::{Certification, Error, Grading, Tolerance};

use crate::config::RunConfig;
use crate::exec::RayonExecutor;
use crate::format::{csv_table, fmt_f64, fmt_opt, tagged, to_json, write_atomic, SequenceDocument};
use crate::registry::ConstraintSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
/// A certification produced a failure witness, or a transition failed.
pub const EXIT_WITNESS: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_CONSTRUCTION: i32 = 4;
pub const EXIT_USAGE: i32 = 64;

pub const COMMANDS: [&str; 4] = ["certify-gradings", "certify-map", "solve", "atlas"];

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_)
            | Error::Range { .. }
            | Error::Dimension { .. }
            | Error::UnsupportedGrading(_)
            | Error::Aliasing { .. }
            | Error::OffManifold { .. }
            | Error::NotRegular { .. } => EXIT_USAGE,
            Error::ConstructionFailure(_) => EXIT_CONSTRUCTION,
            Error::NonConvergence { .. } | Error::SingularBlock { .. } => EXIT_NONCONVERGENCE,
            _ => EXIT_INTERNAL,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError { code: EXIT_INTERNAL, message: format!("i/o error: {e}") }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError { code: EXIT_INTERNAL, message: format!("json error: {e}") }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError { code: EXIT_INTERNAL, message: format!("csv error: {e}") }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

struct Out<'a> {
    cfg: &'a RunConfig,
    files: Vec<PathBuf>,
}

impl Out<'_> {
    fn json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<(), CliError> {
        let path = self.cfg.out.join(name);
        write_atomic(&path, to_json(&tagged(self.cfg.seed, body))?.as_bytes())?;
        self.files.push(path);
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let path = self.cfg.out.join(name);
        write_atomic(&path, csv_table(self.cfg.seed, header, rows)?.as_bytes())?;
        self.files.push(path);
        Ok(())
    }

    fn finish(self, code: i32, summary: String) -> Outcome {
        Outcome { code, summary, files: self.files }
    }
}

fn executor() -> Result<RayonExecutor, CliError> {
    RayonExecutor::from_env().map_err(|e| CliError { code: EXIT_INTERNAL, message: format!("thread pool: {e}") })
}

fn rng(cfg: &RunConfig) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed)
}

fn probe_config(cfg: &RunConfig) -> ProbeConfig {
    ProbeConfig { count: cfg.probes, ..ProbeConfig::default() }
}

fn tolerance(cfg: &RunConfig) -> Tolerance {
    let t = cfg.tol.unwrap_or(Tolerance::DEFAULT.abs);
    Tolerance::new(t, t)
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate().map_err(CliError::usage)?;
    let mut out = Out { cfg, files: Vec::new() };
    out.json(&format!("run_{}.json", cfg.command), cfg)?;
    match cfg.command.as_str() {
        "certify-gradings" => cmd_certify_gradings(out),
        "certify-map" => cmd_certify_map(out),
        "solve" => cmd_solve(out),
        "atlas" => cmd_atlas(out),
        other => Err(CliError::usage(format!("unknown command '{other}' (expected one of {})", COMMANDS.join(", ")))),
    }
}

fn certificate_rows(c: &Certification) -> Vec<Vec<String>> {
    c.certificate()
        .map(|cert| {
            cert.constants.iter().map(|lc| vec![lc.n.to_string(), fmt_f64(lc.c), fmt_opt(lc.max_ratio)]).collect()
        })
        .unwrap_or_default()
}

const CERT_HEADER: [&str; 3] = ["n", "C_n", "max_ratio"];

#[derive(Serialize)]
struct DirectionDoc<'a> {
    bounded: &'a str,
    bounding: &'a str,
    probe_count: usize,
    violations: usize,
    #[serde(flatten)]
    certification: &'a Certification,
}

#[derive(Serialize)]
struct WitnessDoc<'a> {
    subject: &'a str,
    witness: &'a tamef_core::FailureWitness,
    probe: Vec<SequenceDocument>,
}

fn violations(c: &Certification, table: &RatioTable, tol: Tolerance) -> usize {
    c.certificate().map_or(0, |cert| cert.validate(table, tol).len())
}

fn cmd_certify_gradings(mut out: Out<'_>) -> Result<Outcome, CliError> {
    let cfg = out.cfg;
    let a = Grading::by_name(&cfg.grading_a, cfg.nmax)?;
    let b = Grading::by_name(&cfg.grading_b, cfg.nmax)?;
    let probes = generate(cfg.fiber(), cfg.k, &probe_config(cfg), &mut rng(cfg));
    let tol = tolerance(cfg);
    let eq = certify_grading_equivalence_with(&a, &b, &probes, cfg.r_max, tol, &executor()?)?;
    let directions = [
        ("forward", a.name(), b.name(), &eq.forward, &eq.forward_table),
        ("backward", b.name(), a.name(), &eq.backward, &eq.backward_table),
    ];
    let mut summary = Vec::new();
    for (label, bounded, bounding, cert, table) in directions {
        let doc = DirectionDoc {
            bounded,
            bounding,
            probe_count: probes.len(),
            violations: violations(cert, table, tol),
            certification: cert,
        };
        out.json(&format!("{label}.json"), &doc)?;
        out.csv(&format!("{label}.csv"), &CERT_HEADER, &certificate_rows(cert))?;
        match cert {
            Certification::Certified(c) => summary.push(format!("{bounded} <= C {bounding}: r = {}, b = {}", c.r, c.b)),
            Certification::Failed(w) => {
                let doc = WitnessDoc {
                    subject: &format!("{bounded} <= C {bounding}"),
                    witness: w,
                    probe: vec![SequenceDocument::from(&probes[w.probe])],
                };
                out.json(&format!("{label}_witness.json"), &doc)?;
                summary.push(format!("{bounded} <= C {bounding}: no shift r <= {} (witness probe {})", cfg.r_max, w.probe));
            }
        }
    }
    let code = if eq.is_equivalent() { EXIT_OK } else { EXIT_WITNESS };
    Ok(out.finish(code, summary.join("\n")))
}

#[derive(Serialize)]
struct MapDoc<'a> {
    map: &'a str,
    grading: &'a str,
    probe_count: usize,
    violations: usize,
    #[serde(flatten)]
    certification: &'a Certification,
}

fn element_doc(x: &Element) -> Vec<SequenceDocument> {
    x.0.iter().map(SequenceDocument::from).collect()
}

fn cmd_certify_map(mut out: Out<'_>) -> Result<Outcome, CliError> {
    let cfg = out.cfg;
    let grading = Grading::by_name(&cfg.grading, cfg.nmax)?;
    let space = GradedSpace::new(cfg.fiber(), cfg.k, grading);
    let spec = MapSpec::parse(&cfg.map)?;
    let map = build_map(&spec, &space)?;
    let probes = map.fit_to_region(&map.domain().probes(&probe_config(cfg), &mut rng(cfg)))?;
    let opts = CertifyOptions { r_max: cfg.r_max, tol: tolerance(cfg), ..CertifyOptions::default() };
    let res = certify_tame_with(&map, &probes, &opts, &executor()?)?;
    let name = spec.to_string();
    let doc = MapDoc {
        map: &name,
        grading: &cfg.grading,
        probe_count: probes.len(),
        violations: violations(&res.outcome, &res.table, opts.tol),
        certification: &res.outcome,
    };
    out.json("certificate.json", &doc)?;
    out.csv("certificate.csv", &CERT_HEADER, &certificate_rows(&res.outcome))?;
    let (code, summary) = match &res.outcome {
        Certification::Certified(c) => (EXIT_OK, format!("{name}: r = {}, b = {}, {:?}", c.r, c.b, c.form)),
        Certification::Failed(w) => {
            let doc = WitnessDoc { subject: &name, witness: w, probe: element_doc(&probes[w.probe]) };
            out.json("witness.json", &doc)?;
            (EXIT_WITNESS, format!("{name}: no shift r <= {} (witness probe {})", cfg.r_max, w.probe))
        }
    };
    Ok(out.finish(code, summary))
}

#[derive(Serialize)]
struct SolutionDoc<'a> {
    constraint: &'a str,
    status: &'a str,
    diagnostic: Option<String>,
    tol: f64,
    y_coords: &'a [usize],
    x: &'a [f64],
    y0: &'a [f64],
    y: Option<Vec<f64>>,
    point: Option<Vec<f64>>,
    residual: f64,
    iterations: usize,
}

fn history_rows(h: &[f64]) -> Vec<Vec<String>> {
    h.iter().enumerate().map(|(i, r)| vec![i.to_string(), fmt_f64(*r)]).collect()
}

fn cmd_solve(mut out: Out<'_>) -> Result<Outcome, CliError> {
    let cfg = out.cfg;
    let spec = ConstraintSpec::parse(&cfg.constraint)?;
    let c = spec.build(SequenceLayout::new(cfg.fiber(), cfg.k)?)?;
    let m = c.target_dim();
    let y_coords = cfg.y_coords.clone().unwrap_or_else(|| (0..m).collect());
    if y_coords.len() != m {
        return Err(CliError::usage(format!("{} y coordinates given for a constraint with {m} outputs", y_coords.len())));
    }
    let split = Splitting::coordinates(c.dim(), &y_coords)?;
    if cfg.x.len() > split.x_dim() {
        return Err(CliError::usage(format!("x has {} entries, at most {} allowed", cfg.x.len(), split.x_dim())));
    }
    let mut x = cfg.x.clone();
    x.resize(split.x_dim(), 0.0);
    let y0 = cfg.y0.clone().unwrap_or_else(|| vec![1.0; m]);
    if y0.len() != m {
        return Err(CliError::usage(format!("y0 has {} entries, expected {m}", y0.len())));
    }
    let tol = cfg.tol.unwrap_or(1e-12);
    let opts = NewtonOptions { tol, max_iter: cfg.max_iter, ..NewtonOptions::default() };
    let name = c.name().to_string();
    let mut doc = SolutionDoc {
        constraint: &name,
        status: "converged",
        diagnostic: None,
        tol,
        y_coords: &y_coords,
        x: &x,
        y0: &y0,
        y: None,
        point: None,
        residual: f64::NAN,
        iterations: 0,
    };
    let (code, history, summary) = match solve_implicit(&c, &split, &x, &y0, &opts) {
        Ok(sol) => {
            doc.residual = *sol.residual_history.last().expect("nonempty");
            doc.iterations = sol.iterations();
            doc.point = Some(split.point(&x, &sol.y)?);
            let summary = format!("{name}: y = {:?} after {} iterations", sol.y, sol.iterations());
            doc.y = Some(sol.y);
            let code = if doc.residual <= tol { EXIT_OK } else { EXIT_NONCONVERGENCE };
            (code, sol.residual_history, summary)
        }
        Err(e @ (Error::SingularBlock { .. } | Error::NonConvergence { .. })) => {
            let (status, history) = match &e {
                Error::SingularBlock { residual_history } => ("singular_block", residual_history.clone()),
                Error::NonConvergence { residual_history } => ("non_convergence", residual_history.clone()),
                _ => unreachable!(),
            };
            doc.status = status;
            doc.diagnostic = Some(e.to_string());
            doc.residual = history.last().copied().unwrap_or(f64::NAN);
            doc.iterations = history.len().saturating_sub(1);
            (EXIT_NONCONVERGENCE, history, format!("{name}: {e}"))
        }
        Err(e) => return Err(e.into()),
    };
    out.json("solution.json", &doc)?;
    out.csv("history.csv", &["iter", "residual"], &history_rows(&history))?;
    Ok(out.finish(code, summary))
}

#[derive(Serialize)]
struct AtlasOut<'a> {
    #[serde(flatten)]
    atlas: &'a AtlasDocument,
    transitions: &'a [TransitionReport],
}

#[derive(Serialize)]
struct EvidenceDoc<'a> {
    constraint: &'a str,
    summary: &'a str,
    evidence: &'a RegularValueReport,
}

fn status_name(s: TransitionStatus) -> &'static str {
    match s {
        TransitionStatus::Passed => "passed",
        TransitionStatus::Failed => "failed",
        TransitionStatus::EmptyOverlap => "empty_overlap",
    }
}

fn cmd_atlas(mut out: Out<'_>) -> Result<Outcome, CliError> {
    let cfg = out.cfg;
    let spec = ConstraintSpec::parse(&cfg.constraint)?;
    let levels = match &spec {
        ConstraintSpec::Sphere(n) => vec![*n],
        ConstraintSpec::Spheres(l) => l.clone(),
        _ => return Err(CliError::usage("atlas supports sphere:<n> and spheres:<n1,n2,…> constraints")),
    };
    let ambient = GradedSpace::new(cfg.fiber(), cfg.k, Grading::l2(cfg.nmax));
    let opts = AtlasOptions {
        chart: ChartOptions { seed: cfg.seed, ..ChartOptions::default() },
        extra_points: cfg.points.clone(),
        seeds: cfg.seeds,
        seed: cfg.seed,
        tol: cfg.tol.unwrap_or(tamef_core::atlas::DEFAULT_MANIFOLD_TOL),
        ..AtlasOptions::default()
    };
    let name = spec.to_string();
    let built = if levels.len() == 1 {
        make_sphere(levels[0], &ambient, &opts)
    } else {
        make_sphere_intersection(&levels, &ambient, &opts)
    };
    let m = match built {
        Ok(m) => m,
        Err(Error::ConstructionFailure(_)) => {
            let evidence = sphere_intersection_evidence(&levels, &ambient, &opts)?;
            let summary = evidence_summary(&evidence);
            out.json("evidence.json", &EvidenceDoc { constraint: &name, summary: &summary, evidence: &evidence })?;
            return Ok(out.finish(EXIT_CONSTRUCTION, format!("{name}: construction failed: {summary}")));
        }
        Err(e) => return Err(e.into()),
    };
    let topts = TransitionOptions { probes: cfg.transition_probes, seed: cfg.seed, ..TransitionOptions::default() };
    let reports = tamef_core::atlas::verify_transitions_with(&m, &topts, &executor()?)?;
    let doc = m.document();
    out.json("atlas.json", &AtlasOut { atlas: &doc, transitions: &reports })?;
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.chart_i.to_string(),
                r.chart_j.to_string(),
                status_name(r.status).into(),
                r.probes.to_string(),
                fmt_f64(r.max_error),
                r.r().map(|v| v.to_string()).unwrap_or_default(),
                r.b().map(|v| v.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    out.csv("transitions.csv", &["chart_i", "chart_j", "status", "probes", "max_error", "r", "b"], &rows)?;
    let failed = reports.iter().filter(|r| r.status == TransitionStatus::Failed).count();
    let passed = reports.iter().filter(|r| r.status == TransitionStatus::Passed).count();
    let code = if failed == 0 { EXIT_OK } else { EXIT_WITNESS };
    Ok(out.finish(
        code,
        format!("{name}: {} charts, {passed} passing and {failed} failing transition pairs", m.charts().len()),
    ))
}
