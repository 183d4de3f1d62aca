//! Problem documents, task dispatch, SVG ray diagrams and the self-test suite.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use wildstokes::curves;
use wildstokes::dualpoisson::{class_invariant, kostant_check, reality_check, KostantReport, REALITY_TOL};
use wildstokes::isoflow::{integrate_report, isomonodromy_check, loop_action_report, FlowReport, IsomonodromyReport, PathSpec, DEFAULT_TOL};
use wildstokes::kmgraphs::{
    cartan_matrix, enumerate_graphs, graph_from_partition, painleve_recognize, root_classify, CartanMatrix, Graph, Painleve,
    Partition, RootClass,
};
use wildstokes::liecore::{diagonal_part, max_norm, CartanElement, ComplexMatrix};
use wildstokes::linalg::{char_poly, eigenvalues};
use wildstokes::numap::{connection_matrix, is_resonant, monodromy, nu_report, ConnectionProblem, NuReport, Precision};
use wildstokes::springer::{diagram_check, fiber_over, DiagramReport, Fiber};
use wildstokes::stokescomb::{positive_system, PositiveSystem, SectorDecomposition, SingularDirection, ANGLE_TOL};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Directions,
    Nu,
    Flow,
    Braid,
    Graphs,
    Springer,
    Curves,
    Selftest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub schema_version: String,
    pub task: Task,
    #[serde(default = "empty_object")]
    pub payload: Value,
    #[serde(default)]
    pub seed: u64,
}

fn empty_object() -> Value {
    json!({})
}

impl ProblemDocument {
    pub fn new(task: Task, payload: Value, seed: u64) -> Self {
        ProblemDocument { schema_version: SCHEMA_VERSION.into(), task, payload, seed }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let doc: ProblemDocument = serde_json::from_str(text).map_err(|e| CliError::Malformed(e.to_string()))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(CliError::Malformed(format!("unsupported schema version {:?}", doc.schema_version)));
        }
        Ok(doc)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error(transparent)]
    Core(#[from] wildstokes::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Malformed(_) => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        use wildstokes::Error as E;
        match self {
            CliError::Malformed(_) => "malformed_input",
            CliError::Io(_) => "io",
            CliError::Core(e) => match e {
                E::DegenerateInput(_) => "degenerate_input",
                E::Precision(_) => "precision",
                E::MalformedBundle(_) => "malformed_bundle",
                E::Path(_) => "path",
                E::Chamber(_) => "chamber",
                E::Resonance(_) => "resonance",
                E::UnsupportedScale(_) => "unsupported_scale",
                E::InvalidPoint(_) => "invalid_point",
                E::Singular(_) => "singular",
                E::InvalidArgument(_) => "invalid_argument",
            },
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "error": { "kind": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() } })
    }
}

/// Files produced by one run. `passed` is false when a check inside the task
/// failed; the report is still written and the process exits with status 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub json: String,
    pub svg: Option<String>,
    pub passed: bool,
}

fn payload<T: for<'de> Deserialize<'de>>(doc: &ProblemDocument) -> Result<T, CliError> {
    serde_json::from_value(doc.payload.clone()).map_err(|e| CliError::Malformed(format!("{:?} payload: {e}", doc.task)))
}

fn finish(doc: &ProblemDocument, precision: Value, result: Value, svg: Option<String>, passed: bool) -> Result<Outcome, CliError> {
    let out = json!({
        "schema_version": SCHEMA_VERSION,
        "task": doc.task,
        "seed": doc.seed,
        "precision": precision,
        "passed": passed,
        "result": result,
    });
    let mut text = serde_json::to_string_pretty(&out).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    Ok(Outcome { json: text, svg, passed })
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

pub fn run(doc: &ProblemDocument) -> Result<Outcome, CliError> {
    if doc.schema_version != SCHEMA_VERSION {
        return Err(CliError::Malformed(format!("unsupported schema version {:?}", doc.schema_version)));
    }
    match doc.task {
        Task::Directions => run_directions(doc),
        Task::Nu => run_nu(doc),
        Task::Flow => run_flow(doc),
        Task::Braid => run_braid(doc),
        Task::Graphs => run_graphs(doc),
        Task::Springer => run_springer(doc),
        Task::Curves => run_curves(doc),
        Task::Selftest => run_selftest(doc),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DirectionsPayload {
    a0: CartanElement,
    #[serde(default = "default_angle_tol")]
    angle_tol: f64,
    #[serde(default)]
    base_sector: usize,
}

fn default_angle_tol() -> f64 {
    ANGLE_TOL
}

#[derive(Serialize)]
struct DirectionsResult {
    directions: Vec<SingularDirection>,
    support_size: usize,
    positive_system: Option<PositiveSystem>,
}

fn run_directions(doc: &ProblemDocument) -> Result<Outcome, CliError> {
    let p: DirectionsPayload = payload(doc)?;
    let sectors = SectorDecomposition::new(&p.a0, p.angle_tol)?;
    let ps = if sectors.count() > 0 { Some(positive_system(&sectors, p.base_sector)?) } else { None };
    let res = DirectionsResult {
        support_size: sectors.directions.iter().map(|d| d.support.len()).sum(),
        directions: sectors.directions.clone(),
        positive_system: ps,
    };
    let svg = render_stokes_svg(&sectors.directions).ok();
    finish(doc, json!({ "angle_tol": p.angle_tol }), to_value(&res), svg, true)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NuPayload {
    a0: CartanElement,
    #[serde(with = "wildstokes::serde_complex::matrix")]
    b: ComplexMatrix,
    #[serde(default)]
    precision: Precision,
    #[serde(default)]
    base_sector: usize,
    #[serde(default = "yes")]
    monodromy: bool,
    #[serde(default)]
    connection_matrix: bool,
}

fn yes() -> bool {
    true
}

#[derive(Serialize)]
struct NuResult {
    #[serde(flatten)]
    report: NuReport,
    #[serde(with = "wildstokes::serde_complex::vec")]
    class_invariant: Vec<Complex64>,
    /// Real positive spectrum check, present for skew-Hermitian B.
    #[serde(skip_serializing_if = "Option::is_none")]
    reality: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_matrix")]
    monodromy: Option<ComplexMatrix>,
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_vec")]
    monodromy_spectrum: Option<Vec<Complex64>>,
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_matrix")]
    connection_matrix: Option<ComplexMatrix>,
}

mod opt_matrix {
    use super::*;
    pub fn serialize<S: serde::Serializer>(m: &Option<ComplexMatrix>, s: S) -> Result<S::Ok, S::Error> {
        m.as_ref().map(wildstokes::serde_complex::matrix_to_rows).serialize(s)
    }
}

mod opt_vec {
    use super::*;
    pub fn serialize<S: serde::Serializer>(v: &Option<Vec<Complex64>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|v| v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()).serialize(s)
    }
}

fn is_skew_hermitian(b: &ComplexMatrix) -> bool {
    max_norm(&(b + b.adjoint())) <= 1e-12 * max_norm(b).max(1.0)
}

fn run_nu(doc: &ProblemDocument) -> Result<Outcome, CliError> {
    let p: NuPayload = payload(doc)?;
    let problem = ConnectionProblem::new(p.a0, p.b, p.precision)?;
    let report = nu_report(&problem, p.base_sector)?;
    let (mono, mono_spec) = if p.monodromy {
        let m = monodromy(&problem, p.base_sector)?;
        let s = eigenvalues(&m)?;
        (Some(m), Some(s))
    } else {
        (None, None)
    };
    let conn = if p.connection_matrix { Some(connection_matrix(&problem, p.base_sector, None)?) } else { None };
    let reality = if is_skew_hermitian(&problem.b) { Some(reality_check(&report.dual, REALITY_TOL)?) } else { None };
    let svg = render_stokes_svg(&report.bundle.directions).ok();
    let passed = report.spectrum_mismatch < 1e-6 && reality != Some(false);
    let res = NuResult {
        class_invariant: class_invariant(&report.dual)?,
        report,
        reality,
        monodromy: mono,
        monodromy_spectrum: mono_spec,
        connection_matrix: conn,
    };
    finish(doc, to_value(&problem.resolved_precision()), to_value(&res), svg, passed)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowPayload {
    path: PathSpec,
    #[serde(with = "wildstokes::serde_complex::matrix")]
    b0: ComplexMatrix,
    #[serde(default = "default_flow_tol")]
    tol: f64,
    #[serde(default)]
    isomonodromy: bool,
    #[serde(default)]
    precision: Precision,
}

fn default_flow_tol() -> f64 {
    DEFAULT_TOL
}

#[derive(Serialize)]
struct FlowResult {
    flow: FlowReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    isomonodromy: Option<IsomonodromyReport>,
}

fn run_flow(doc: &ProblemDocument) -> Result<Outcome, CliError> {
    let p: FlowPayload = payload(doc)?;
    let flow = integrate_report(&p.path, &p.b0, p.tol)?;
    let iso = if p.isomonodromy { Some(isomonodromy_check(&p.path, &p.b0, &p.precision)?) } else { None };
    let passed = flow.spectrum_drift < 1e-10 && flow.diagonal_drift < 1e-10 && iso.as_ref().is_none_or(|r| r.passed);
    let mut prec = json!({ "tol": p.tol, "wall_clearance": p.path.clearance() });
    if p.isomonodromy {
        prec["stokes"] = to_value(&p.precision);
    }
    finish(doc, prec, to_value(&FlowResult { flow, isomonodromy: iso }), None, passed)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BraidPayload {
    #[serde(rename = "loop")]
    lp: PathSpec,
    #[serde(with = "wildstokes::serde_complex::matrix")]
    b0: ComplexMatrix,
    #[serde(default = "default_flow_tol")]
    tol: f64,
    #[serde(default)]
    precision: Precision,
    #[serde(default)]
    base_sector: usize,
}

/// Quantities a braid acts trivially on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fingerprint {
    #[serde(with = "wildstokes::serde_complex::vec")]
    pub char_poly: Vec<Complex64>,
    pub diagonal: CartanElement,
    #[serde(with = "opt_vec", skip_serializing_if = "Option::is_none")]
    pub class_invariant: Option<Vec<Complex64>>,
}

pub fn fingerprint(a0: &CartanElement, b: &ComplexMatrix, precision: &Precision, base: usize) -> Result<Fingerprint, CliError> {
    let ci = if is_resonant(b)? {
        None
    } else {
        let problem = ConnectionProblem::new(a0.clone(), b.clone(), *precision)?;
        Some(class_invariant(&nu_report(&problem, base)?.dual)?)
    };
    Ok(Fingerprint { char_poly: char_poly(b), diagonal: diagonal_part(b), class_invariant: ci })
}

fn vec_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let s = a.iter().map(|z| z.norm()).fold(1.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / s
}

#[derive(Serialize)]
struct BraidResult {
    flow: FlowReport,
    before: Fingerprint,
    after: Fingerprint,
    fingerprint_deviation: f64,
    /// max |B(1) − B0|, nonzero when the loop acts nontrivially
    displacement: f64,
}

fn run_braid(doc: &ProblemDocument) -> Result<Outcome, CliError> {
    let p: BraidPayload = payload(doc)?;
    let flow = loop_action_report(&p.lp, &p.b0, p.tol)?;
    let a0 = &p.lp.waypoints[0];
    let before = fingerprint(a0, &p.b0, &p.precision, p.base_sector)?;
    let after = fingerprint(a0, &flow.b_final, &p.precision, p.base_sector)?;
    let mut dev = vec_distance(&before.char_poly, &after.char_poly).max(vec_distance(&before.diagonal.diag, &after.diagonal.diag));
    if let (Some(x), Some(y)) = (&before.class_invariant, &after.class_invariant) {
        dev = dev.max(vec_distance(x, y));
    }
    let res = BraidResult { displacement: max_norm(&(&flow.b_final - &p.b0)), flow, before, after, fingerprint_deviation: dev };
    let prec = json!({ "tol": p.tol, "wall_clearance": p.lp.clearance(), "stokes": p.precision });
    finish(doc, prec, to_value(&res), None, dev < 1e-7)
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct GraphsPayload {
    #[serde(default)]
    enumerate: Option<usize>,
    #[serde(default)]
    exclude_stars: bool,
    #[serde(default)]
    exclude_discrete: bool,
    #[serde(default)]
    partition: Option<Partition>,
    #[serde(default)]
    adjacency: Option<Graph>,
    #[serde(default)]
    cartan: bool,
    #[serde(default)]
    classify: Option<Vec<i64>>,
}

#[derive(Serialize)]
struct GraphEntry {
    #[serde(skip_serializing_if = "Option::is_none")]
    part_sizes: Option<Partition>,
    adjacency: Graph,
    painleve: Option<Painleve>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cartan: Option<CartanMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    null_vectors: Option<Vec<Vec<i64>>>,
}

fn entry(part: Option<Partition>, g: Graph, cartan: bool) -> GraphEntry {
    let c = cartan.then(|| cartan_matrix(&g));
    GraphEntry {
        part_sizes: part,
        painleve: painleve_recognize(&g),
        null_vectors: c.as_ref().map(|c| c.null_vectors()),
        cartan: c,
        adjacency: g,
    }
}

#[derive(Serialize)]
struct Classification {
    vector: Vec<i64>,
    class: RootClass,
}

#[derive(Serialize)]
struct GraphsResult {
    #[serde(skip_serializing_if = "Option::is_none")]
    count: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    graphs: Vec<GraphEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    graph: Option<GraphEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    classification: Option<Classification>,
}

fn run_graphs(doc: &ProblemDocument) -> Result<Outcome, CliError> {
    let p: GraphsPayload = payload(doc)?;
    let mut res = GraphsResult { count: None, graphs: Vec::new(), graph: None, classification: None };
    if let Some(n) = p.enumerate {
        if n == 0 {
            return Err(wildstokes::Error::InvalidArgument("enumerate needs N ≥ 1".into()).into());
        }
        res.graphs = enumerate_graphs(n, p.exclude_stars, p.exclude_discrete)
            .into_iter()
            .map(|g| entry(Some(g.part_sizes), g.adjacency, p.cartan))
            .collect();
        res.count = Some(res.graphs.len());
    }
    let single = match (p.partition, p.adjacency) {
        (Some(_), Some(_)) => return Err(CliError::Malformed("give either a partition or an adjacency matrix".into())),
        (Some(part), None) => Some((Some(part.clone()), graph_from_partition(&part).adjacency)),
        (None, Some(g)) => Some((None, g)),
        (None, None) => None,
    };
    if let Some(v) = p.classify {
        let Some((_, g)) = &single else {
            return Err(CliError::Malformed("classify needs a partition or an adjacency matrix".into()));
        };
        let class = root_classify(&v, &cartan_matrix(g))?;
        res.classification = Some(Classification { vector: v, class });
    }
    if let Some((part, g)) = single {
        res.graph = Some(entry(part, g, p.cartan));
    }
    if p.enumerate.is_none() && res.graph.is_none() {
        return Err(CliError::Malformed("graphs task needs enumerate, partition or adjacency".into()));
    }
    finish(doc, json!({ "exact": true }), to_value(&res), None, true)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpringerPayload {
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default = "yes")]
    check: bool,
    #[serde(default, with = "opt_matrix_de")]
    matrix: Option<ComplexMatrix>,
}

mod opt_matrix_de {
    use super::*;
    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<ComplexMatrix>, D::Error> {
        let rows: Option<Vec<Vec<[f64; 2]>>> = Option::deserialize(d)?;
        rows.map(|r| wildstokes::serde_complex::rows_to_matrix(r).map_err(serde::de::Error::custom)).transpose()
    }
}

fn default_n() -> usize {
    3
}

fn default_samples() -> usize {
    1000
}

#[derive(Serialize)]
struct SpringerResult {
    #[serde(skip_serializing_if = "Option::is_none")]
    diagram: Option<DiagramReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fiber: Option<Fiber>,
}

fn run_springer(doc: &ProblemDocument) -> Result<Outcome, CliError> {
    let p: SpringerPayload = payload(doc)?;
    let diagram = if p.check { Some(diagram_check(p.samples, doc.seed, p.n)?) } else { None };
    let fiber = p.matrix.as_ref().map(fiber_over).transpose()?;
    let passed = diagram.as_ref().is_none_or(|d| d.passed());
    let prec = json!({ "tolerance": wildstokes::springer::DIAGRAM_TOL, "stability_tolerance": wildstokes::springer::STABILITY_TOL });
    finish(doc, prec, to_value(&SpringerResult { diagram, fiber }), None, passed)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CurvesPayload {
    #[serde(default = "yes")]
    #[allow(dead_code)]
    verify: bool,
}

fn run_curves(doc: &ProblemDocument) -> Result<Outcome, CliError> {
    let _: CurvesPayload = payload(doc)?;
    let rep = curves::verify();
    let passed = rep.passed();
    finish(doc, json!({ "exact": true }), to_value(&rep), None, passed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestEntry {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, f: impl FnOnce() -> Result<(bool, String), CliError>) -> SelftestEntry {
    let (passed, detail) = f().unwrap_or_else(|e| (false, e.to_string()));
    SelftestEntry { name: name.into(), passed, detail }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Quick end-to-end checks of every module.
pub fn selftest(seed: u64) -> Vec<SelftestEntry> {
    let b2 = ComplexMatrix::from_row_slice(2, 2, &[c(0.3, 0.1), c(0.7, -0.2), c(-0.4, 0.5), c(-0.1, 0.2)]);
    vec![
        check("gl2 singular directions", || {
            let s = SectorDecomposition::new(&CartanElement::from_real(&[1.0, -1.0]), ANGLE_TOL)?;
            let ok = s.count() == 2 && (s.directions[1].angle - s.directions[0].angle - std::f64::consts::PI).abs() < 1e-12;
            Ok((ok, format!("{} directions", s.count())))
        }),
        check("eigenvalue identity", || {
            let a0 = CartanElement::new(vec![c(0.0, 0.0), c(1.0, 0.2), c(0.3, 1.1)]);
            let b = ComplexMatrix::from_fn(3, 3, |i, j| c(0.2 * (i as f64) - 0.1 * (j as f64), 0.05 * ((i * j) as f64) + 0.1));
            let rep = nu_report(&ConnectionProblem::new(a0, b, Precision::default())?, 0)?;
            Ok((rep.spectrum_mismatch < 1e-6, format!("mismatch {:e}", rep.spectrum_mismatch)))
        }),
        check("trivial Stokes data", || {
            let d = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.3, 0.0), c(-0.2, 0.1)]));
            let rep = nu_report(&ConnectionProblem::new(CartanElement::from_real(&[1.0, -1.0]), d, Precision::default())?, 0)?;
            let dev = rep.bundle.factors.iter().map(|k| max_norm(&(k - ComplexMatrix::identity(2, 2)))).fold(0.0, f64::max);
            Ok((dev < 1e-10, format!("max deviation {dev:e}")))
        }),
        check("kostant convexity", || {
            let r: KostantReport = kostant_check(&[0.7, -0.2, -0.5], 500, seed)?;
            Ok((r.passed() && r.vertex_proximity <= 1e-3, format!("{} violations", r.violations)))
        }),
        check("gl2 braid loop", || {
            let pts: Vec<CartanElement> = (0..=32)
                .map(|k| {
                    let z = Complex64::from_polar(0.5, std::f64::consts::TAU * (k % 32) as f64 / 32.0);
                    CartanElement::new(vec![z, -z])
                })
                .collect();
            let rep = loop_action_report(&PathSpec::new(pts), &b2, 1e-12)?;
            let f = (c(0.0, std::f64::consts::TAU) * (b2[(0, 0)] - b2[(1, 1)])).exp();
            let err = (rep.b_final[(0, 1)] - b2[(0, 1)] * f).norm().max((rep.b_final[(1, 0)] - b2[(1, 0)] / f).norm());
            Ok((err < 1e-8, format!("closed-form error {err:e}")))
        }),
        check("graph enumeration", || {
            let n = enumerate_graphs(6, true, true).len();
            let labels = [vec![1, 1, 1], vec![2, 2], vec![1, 4]]
                .into_iter()
                .map(|p| Partition::new(p).map(|p| painleve_recognize(&graph_from_partition(&p).adjacency)))
                .collect::<Result<Vec<_>, _>>()?;
            let ok = n == 18 && labels == [Some(Painleve::IV), Some(Painleve::V), Some(Painleve::VI)];
            Ok((ok, format!("{n} graphs")))
        }),
        check("springer diagram", || {
            let r = diagram_check(200, seed, 3)?;
            Ok((r.passed(), format!("max distance {:e}", r.max_distance)))
        }),
        check("curve artifacts", || {
            let r = curves::verify();
            Ok((r.passed(), format!("discriminant {}", r.elliptic_discriminant)))
        }),
    ]
}

fn run_selftest(doc: &ProblemDocument) -> Result<Outcome, CliError> {
    let entries = selftest(doc.seed);
    let passed = entries.iter().all(|e| e.passed);
    finish(doc, to_value(&Precision::default()), to_value(&entries), None, passed)
}

/// Ray diagram of the singular directions, one labeled ray per direction.
pub fn render_stokes_svg(directions: &[SingularDirection]) -> Result<String, CliError> {
    if directions.is_empty() {
        return Err(wildstokes::Error::DegenerateInput("no singular directions to draw".into()).into());
    }
    let (size, cx, cy, len) = (480.0, 240.0, 240.0, 170.0);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#);
    let _ = writeln!(s, r#"<rect width="{size}" height="{size}" fill="white"/>"#);
    let _ = writeln!(s, r##"<circle cx="{cx}" cy="{cy}" r="{len}" fill="none" stroke="#cccccc"/>"##);
    let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="black"/>"#);
    for (k, d) in directions.iter().enumerate() {
        let (x, y) = (cx + len * d.angle.cos(), cy - len * d.angle.sin());
        let (lx, ly) = (cx + (len + 28.0) * d.angle.cos(), cy - (len + 28.0) * d.angle.sin());
        let support: Vec<String> = d.support.iter().map(|r| r.to_string()).collect();
        let _ = writeln!(
            s,
            r#"<line id="d{k}" x1="{cx}" y1="{cy}" x2="{x:.4}" y2="{y:.4}" stroke="black" stroke-width="1.5"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{lx:.4}" y="{ly:.4}" font-family="monospace" font-size="11" text-anchor="middle">d{k} {}</text>"#,
            support.join(" ")
        );
        let _ = writeln!(s, "<!-- d{k}: angle {:.12} -->", d.angle);
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Write atomically: a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.flush().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn emit_stokes_svg(directions: &[SingularDirection], path: &Path) -> Result<(), CliError> {
    write_atomic(path, &render_stokes_svg(directions)?)
}
