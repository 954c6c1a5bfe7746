//! Built-in acceptance suites behind `solab selftest`.
//!
//! Every suite records named measurements against fixed bounds; a suite passes
//! when all of its measurements do. The report is deterministic for a given seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::connection::dual_connection;
use crate::curvature::ricci_at;
use crate::fields::{finite_diff_oracle, Expr, ScalarField, TensorField};
use crate::geometry::{parse_geometry, GeometrySpec, Model};
use crate::hypersurface::{
    eta_type, eta_umbilical_decompose, shape_at, torse_forming_rhs, EtaUmbilical,
};
use crate::pointwise::{generalized_eigen, MetricAtPoint, MetricField, Slot, TensorAtPoint};
use crate::report::{
    convention_hash, format_sci, quantize, to_canonical_json, CheckDetails, ENGINE_VERSION,
    SCHEMA_VERSION,
};
use crate::soliton::{
    eta_einstein_residual, generalized_residual, hessian_at, soliton_report, statistical_check,
    torse_defect, torse_forming_check, vaisman_verify, Classification, Roots, SolitonData,
};
use crate::verify::{quantity_at, run_verify, sample_points, verify_catalog, Check, VerifyOptions};

type Step<T> = std::result::Result<T, Box<dyn std::error::Error>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
    Above,
}

impl Bound {
    fn symbol(self) -> &'static str {
        match self {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
            Bound::Above => ">",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub label: String,
    /// `None` when the measured value is not finite.
    pub value: Option<f64>,
    pub bound: Bound,
    pub limit: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    /// Engine error that stopped the suite early.
    pub error: Option<String>,
    pub measurements: Vec<Measurement>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub schema_version: u32,
    pub engine_version: String,
    pub convention_hash: String,
    pub seed: u64,
    pub criteria: Vec<Criterion>,
    pub passed: bool,
}

impl SelftestReport {
    pub fn to_json(&self) -> String {
        to_canonical_json(self).expect("selftest reports serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.criteria {
            let mark = if c.passed { "pass" } else { "FAIL" };
            out.push_str(&format!("{mark}  {:>2}. {}\n", c.id, c.name));
            if let Some(e) = &c.error {
                out.push_str(&format!("        error: {e}\n"));
            }
            for m in &c.measurements {
                let v = m.value.map_or("non-finite".to_string(), format_sci);
                let mark = if m.passed { " " } else { "!" };
                out.push_str(&format!(
                    "      {mark} {}: {v} {} {}\n",
                    m.label,
                    m.bound.symbol(),
                    format_sci(m.limit)
                ));
            }
        }
        let total = self.criteria.len();
        let ok = self.criteria.iter().filter(|c| c.passed).count();
        out.push_str(&format!("{ok}/{total} suites passed\n"));
        out
    }
}

#[derive(Default)]
struct Sheet {
    items: Vec<Measurement>,
}

impl Sheet {
    fn push(&mut self, label: impl Into<String>, value: f64, bound: Bound, limit: f64) {
        let passed = match bound {
            Bound::AtMost => value <= limit,
            Bound::AtLeast => value >= limit,
            Bound::Above => value > limit,
        };
        self.items.push(Measurement {
            label: label.into(),
            value: value.is_finite().then_some(value),
            bound,
            limit,
            passed,
        });
    }

    fn at_most(&mut self, label: impl Into<String>, value: f64, limit: f64) {
        self.push(label, value, Bound::AtMost, limit);
    }

    fn at_least(&mut self, label: impl Into<String>, value: f64, limit: f64) {
        self.push(label, value, Bound::AtLeast, limit);
    }

    fn above(&mut self, label: impl Into<String>, value: f64, limit: f64) {
        self.push(label, value, Bound::Above, limit);
    }

    fn holds(&mut self, label: impl Into<String>, ok: bool) {
        self.push(label, if ok { 1.0 } else { 0.0 }, Bound::AtLeast, 1.0);
    }
}

type Suite = fn(&mut Sheet, &mut ChaCha8Rng, u64) -> Step<()>;

const SUITES: [(u32, &str, Suite); 13] = [
    (1, "cigar reproduction", cigar),
    (2, "cylinder reproduction", cylinder),
    (3, "gaussian family", gaussian),
    (4, "einstein sphere", einstein_sphere),
    (5, "identity suites on gradient solitons", identities),
    (6, "cone entry", cone),
    (7, "vaisman structure", vaisman),
    (8, "weyl shift probe", weyl),
    (9, "torse-forming identity", torse),
    (10, "curvature identities", curvature),
    (11, "statistical suite", statistical),
    (12, "hypersurface suite", hypersurface),
    (13, "jet oracle", jet_oracle),
];

/// Ids of the suites, in run order.
pub fn suite_ids() -> Vec<u32> {
    SUITES.iter().map(|s| s.0).collect()
}

/// Runs one suite; `None` for an unknown id.
pub fn run_suite(id: u32, seed: u64) -> Option<Criterion> {
    let &(id, name, suite) = SUITES.iter().find(|s| s.0 == id)?;
    let mut sheet = Sheet::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9).wrapping_add(id.into()));
    let error = suite(&mut sheet, &mut rng, seed)
        .err()
        .map(|e| e.to_string());
    let passed = error.is_none() && sheet.items.iter().all(|m| m.passed);
    Some(Criterion {
        id,
        name: name.into(),
        passed,
        error,
        measurements: sheet.items,
    })
}

pub fn run_selftest(seed: u64) -> SelftestReport {
    let criteria: Vec<Criterion> = SUITES.iter().filter_map(|s| run_suite(s.0, seed)).collect();
    let report = SelftestReport {
        schema_version: SCHEMA_VERSION,
        engine_version: ENGINE_VERSION.into(),
        convention_hash: convention_hash(),
        seed,
        passed: criteria.iter().all(|c| c.passed),
        criteria,
    };
    quantize(&report).expect("selftest reports round-trip")
}

const TOL: f64 = 1e-9;
const IDENTITY_TOL: f64 = 1e-8;

/// Largest absolute value; NaN wins so a broken value cannot hide.
fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |w, v| {
        if w.is_nan() || v.is_nan() {
            f64::NAN
        } else {
            w.max(v.abs())
        }
    })
}

fn least(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::INFINITY, |w, v| {
        if w.is_nan() || v.is_nan() {
            f64::NAN
        } else {
            w.min(v)
        }
    })
}

fn entry(call: &str) -> Step<(GeometrySpec, Model<f64>)> {
    let spec = GeometrySpec::from_file(catalog::get_call(call)?.geometry)?;
    let model = spec.build::<f64>()?;
    Ok((spec, model))
}

fn points(spec: &GeometrySpec, count: usize, seed: u64) -> Step<Vec<Vec<f64>>> {
    let mut spec = spec.clone();
    spec.sample.points.clear();
    spec.sample.count = count;
    Ok(sample_points(&spec, seed)?)
}

fn gradient_data(m: &Model<f64>) -> Step<SolitonData<f64>> {
    let f = m.potential.clone().ok_or("entry has no potential")?;
    Ok(SolitonData::gradient(
        m.metric.clone(),
        f,
        m.lambda.unwrap_or(0.0),
    ))
}

fn double_root(r: &Roots<f64>) -> Option<f64> {
    match *r {
        Roots::Double(x) => Some(x),
        _ => None,
    }
}

fn uniform_box(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

fn coords(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

/// A random quadratic in `coords` with coefficients in `[-1, 1]`.
fn quadratic(rng: &mut ChaCha8Rng, coords: &[String]) -> String {
    let mut s = format!("({:.4})", rng.gen_range(-1.0..1.0));
    for (i, a) in coords.iter().enumerate() {
        s.push_str(&format!(" + ({:.4})*{a}", rng.gen_range(-1.0..1.0)));
        for b in &coords[i..] {
            s.push_str(&format!(" + ({:.4})*{a}*{b}", rng.gen_range(-1.0..1.0)));
        }
    }
    s
}

/// `δ_ij + eps·p_ij` for random symmetric quadratics `p_ij`, row-major.
fn perturbed_metric(rng: &mut ChaCha8Rng, coords: &[String], eps: f64) -> Vec<Vec<String>> {
    let n = coords.len();
    let mut rows = vec![vec![String::new(); n]; n];
    for i in 0..n {
        for j in i..n {
            let delta = if i == j { "1" } else { "0" };
            let e = format!("{delta} + {eps}*({})", quadratic(rng, coords));
            rows[i][j] = e.clone();
            rows[j][i] = e;
        }
    }
    rows
}

fn toml_list(items: &[String]) -> String {
    let quoted: Vec<String> = items.iter().map(|s| format!("\"{s}\"")).collect();
    format!("[{}]", quoted.join(", "))
}

fn cigar(s: &mut Sheet, rng: &mut ChaCha8Rng, _seed: u64) -> Step<()> {
    let (_, m) = entry("cigar")?;
    let o = [0.0, 0.0];
    for (name, target) in [
        ("laplacian", -4.0),
        ("norm_h2", 8.0),
        ("gauss", 2.0),
        ("norm_ric2", 8.0),
        ("scalar_r", 4.0),
    ] {
        let v = quantity_at(&m, name, &o)?;
        s.at_most(
            format!("|{name} - ({target})| at the origin"),
            (v - target).abs(),
            TOL,
        );
    }
    s.holds("lambda = 0", m.lambda == Some(0.0));
    s.at_most(
        "gradient residual norm2 at the origin",
        quantity_at(&m, "residual_norm2", &o)?,
        1e-18,
    );
    let d = gradient_data(&m)?;
    let f = m.potential.as_ref().ok_or("cigar has a potential")?;
    let (mut hess, mut margin, mut lowest) = (0.0f64, 0.0f64, f64::INFINITY);
    let mut drawn = 0;
    while drawn < 20 {
        let p = uniform_box(rng, 2, -2.0, 2.0);
        let r2 = p[0] * p[0] + p[1] * p[1];
        if r2 >= 4.0 {
            continue;
        }
        drawn += 1;
        let w = (1.0 + r2) * (1.0 + r2);
        let h = hessian_at(&m.metric, f, &p)?;
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { -2.0 / w } else { 0.0 };
                hess = worst([hess, h.get(&[i, j]) - target]);
            }
        }
        let r = soliton_report(&d, &p)?;
        margin = worst([margin, r.margin13 - 8.0 / w]);
        lowest = least([lowest, r.margin13]);
    }
    s.at_most(
        "max |H_f + 2/(1+r^2)^2 delta| at 20 points, r^2 < 4",
        hess,
        TOL,
    );
    s.at_most("max |margin13 - 8/(1+r^2)^2|", margin, TOL);
    s.above("min margin13", lowest, 0.0);
    Ok(())
}

fn cylinder(s: &mut Sheet, _rng: &mut ChaCha8Rng, seed: u64) -> Step<()> {
    let opts = VerifyOptions {
        seed: Some(seed),
        ..Default::default()
    };
    let rep = verify_catalog("cylinder(3)", &opts)?;
    let (_, m) = entry("cylinder(3)")?;
    s.holds("lambda = -1/2", m.lambda == Some(-0.5));
    match &rep.report.checks["gradient"].details {
        Some(CheckDetails::Gradient { points }) => s.at_most(
            "max gradient residual norm2",
            worst(points.iter().map(|p| p.norm2)),
            1e-18,
        ),
        _ => return Err("gradient check produced no details".into()),
    }
    match &rep.report.checks["lambda"].details {
        Some(CheckDetails::Lambda { classification, .. }) => s.holds(
            "classified as shrinking",
            *classification == Classification::Shrinking,
        ),
        _ => return Err("lambda check produced no details".into()),
    }
    let pts = &rep.report.points;
    for (name, target) in [
        ("laplacian", 0.5),
        ("norm_h2", 0.25),
        ("norm_ric2", 0.5),
        ("scalar_r", 1.0),
    ] {
        let err = pts
            .iter()
            .map(|p| quantity_at(&m, name, p).map(|v| v - target))
            .collect::<Result<Vec<_>, _>>()?;
        s.at_most(format!("max |{name} - {target}|"), worst(err), TOL);
    }
    for (q, printed) in [("norm_ric2", 0.25), ("scalar_r", 0.5)] {
        let flagged = rep
            .report
            .paper_claims
            .iter()
            .any(|c| c.quantity == q && c.printed == printed && !c.matched);
        s.holds(
            format!("printed {q} = {printed} recorded as unmatched"),
            flagged,
        );
    }
    Ok(())
}

fn gaussian(s: &mut Sheet, _rng: &mut ChaCha8Rng, seed: u64) -> Step<()> {
    let (mut disc, mut root, mut all_double) = (0.0f64, 0.0f64, true);
    for n in 1..=4 {
        for lambda in [-1.0, 0.5, 2.0] {
            let (spec, m) = entry(&format!("gaussian({n}, {lambda})"))?;
            let d = gradient_data(&m)?;
            for p in points(&spec, 5, seed)? {
                let a = soliton_report(&d, &p)?.lambda_analysis;
                disc = worst([disc, a.disc12]);
                match double_root(&a.roots11) {
                    Some(r) => root = worst([root, r - lambda]),
                    None => all_double = false,
                }
            }
        }
    }
    s.at_most(
        "max |disc12| over n = 1..4, lambda in {-1, 0.5, 2}",
        disc,
        TOL,
    );
    s.holds("roots11 is a double root everywhere", all_double);
    s.at_most("max |double root - lambda|", root, TOL);
    Ok(())
}

fn einstein_sphere(s: &mut Sheet, _rng: &mut ChaCha8Rng, seed: u64) -> Step<()> {
    let (spec, m) = entry("einstein_sphere")?;
    s.holds("lambda = -1", m.lambda == Some(-1.0));
    let d = gradient_data(&m)?;
    let (mut margin, mut root, mut all_double) = (0.0f64, 0.0f64, true);
    for p in points(&spec, 20, seed)? {
        let r = soliton_report(&d, &p)?;
        margin = worst([margin, r.margin19]);
        match double_root(&r.lambda_analysis.roots17) {
            Some(x) => root = worst([root, x + 1.0]),
            None => all_double = false,
        }
    }
    s.at_most("max |margin19|", margin, TOL);
    s.holds("roots17 is a double root everywhere", all_double);
    s.at_most("max |double root + 1|", root, TOL);
    Ok(())
}

const GRADIENT_ENTRIES: [&str; 8] = [
    "gaussian",
    "gaussian(3, -1)",
    "einstein_sphere",
    "cone",
    "cone(4, 3)",
    "cigar",
    "cylinder",
    "cylinder(5)",
];

fn identities(s: &mut Sheet, _rng: &mut ChaCha8Rng, seed: u64) -> Step<()> {
    let (mut id10, mut tr16) = (0.0f64, 0.0f64);
    let (mut disc12, mut disc18) = (f64::INFINITY, f64::INFINITY);
    let (mut left, mut right) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for call in GRADIENT_ENTRIES {
        let (spec, m) = entry(call)?;
        let d = gradient_data(&m)?;
        for p in points(&spec, 100, seed)? {
            let r = soliton_report(&d, &p)?;
            let a = &r.lambda_analysis;
            id10 = worst([id10, r.identity10_residual]);
            tr16 = worst([tr16, a.trace16_residual]);
            disc12 = least([disc12, a.disc12]);
            disc18 = least([disc18, a.disc18]);
            left = -least([-left, -(r.double20.left - r.double20.mid)]);
            right = -least([-right, -(r.double20.mid - r.double20.right)]);
        }
    }
    let over = GRADIENT_ENTRIES.len();
    s.at_most(
        format!("max |identity10 residual|, 100 points on {over} entries"),
        id10,
        TOL,
    );
    s.at_most("max |trace16 residual|", tr16, TOL);
    s.at_least("min disc12", disc12, -TOL);
    s.at_least("min disc18", disc18, -TOL);
    s.at_most("max (left - mid) of the double inequality", left, TOL);
    s.at_most("max (mid - right) of the double inequality", right, TOL);
    Ok(())
}

fn cone(s: &mut Sheet, _rng: &mut ChaCha8Rng, seed: u64) -> Step<()> {
    let (spec, m) = entry("cone")?;
    s.holds("lambda = 1", m.lambda == Some(1.0));
    let d = gradient_data(&m)?;
    let (mut eig, mut ric, mut res) = (0.0f64, 0.0f64, 0.0f64);
    for p in points(&spec, 20, seed)? {
        let r = soliton_report(&d, &p)?;
        eig = worst(std::iter::once(eig).chain(r.spectrum.eigenvalues.iter().map(|e| e + 1.0)));
        ric = worst([
            ric,
            ricci_at(&m.levi_civita, &m.metric, &p)?.ricci.max_abs(),
        ]);
        res = worst([res, r.residual6_norm2]);
    }
    s.at_most("max |hessian eigenvalue + 1|", eig, TOL);
    s.at_most("max |Ric_ij|", ric, IDENTITY_TOL);
    s.at_most("max gradient residual norm2", res, 1e-16);
    Ok(())
}

fn vaisman(s: &mut Sheet, _rng: &mut ChaCha8Rng, seed: u64) -> Step<()> {
    let (spec, m) = entry("hopf")?;
    let (j, u) = m.vaisman.as_ref().ok_or("hopf has a vaisman section")?;
    let pts = points(&spec, 20, seed)?;
    let r = vaisman_verify(&m.metric, j, u, &pts)?;
    s.holds("premises hold at 20 points with c = 1", true);
    s.at_most("max soliton residual norm2", r.max_soliton_norm2, TOL);
    s.at_most(
        "max |recurrence factor - 2u|",
        r.max_recurrence_error.unwrap_or(f64::NAN),
        TOL,
    );
    s.at_most("max torsion formula error", r.max_torsion_error, TOL);
    Ok(())
}

const WEYL_CASES: [(&str, &str); 3] = [
    (
        "flat plane, eta = dx",
        r#"[manifold]
name = "flat plane"
coords = ["x", "y"]
[metric]
conformal = "1"
[soliton]
lambda = 0.3
mu = 0.2
[connection]
kind = "weyl"
eta = ["1", "0"]
[sample]
box = [[-1, 1], [-1, 1]]
"#,
    ),
    (
        "flat space, constant eta",
        r#"[manifold]
name = "flat space"
coords = ["x", "y", "z"]
[metric]
conformal = "1"
[soliton]
lambda = -0.7
mu = 1.1
[connection]
kind = "weyl"
eta = ["0.3", "-0.5", "0.2"]
[sample]
box = [[-1, 1], [-1, 1], [-1, 1]]
"#,
    ),
    (
        "round cylinder, eta = dt",
        r#"[manifold]
name = "round cylinder"
coords = ["th", "ph", "t"]
[metric]
diagonal = ["2", "2*sin(th)^2", "1"]
[soliton]
lambda = -0.5
mu = 0.0
[connection]
kind = "weyl"
eta = ["0", "0", "1"]
[sample]
box = [[0.2, 2.9], [0, 6.2], [-2, 2]]
"#,
    ),
];

fn weyl(s: &mut Sheet, _rng: &mut ChaCha8Rng, seed: u64) -> Step<()> {
    for (name, text) in WEYL_CASES {
        let spec = parse_geometry(text)?;
        let opts = VerifyOptions {
            checks: Some(vec![Check::Weyl]),
            seed: Some(seed),
            ..Default::default()
        };
        let rep = run_verify(&spec, &opts)?;
        let c = &rep.checks["weyl"];
        if let Some(e) = &c.error {
            return Err(format!("{name}: {e}").into());
        }
        let Some(CheckDetails::Weyl { shift }) = &c.details else {
            return Err(format!("{name}: weyl check produced no details").into());
        };
        s.at_most(
            format!("{name}: |delta_lambda + |xi|^2/2|"),
            (shift.delta_lambda + shift.xi_norm2 / 2.0).abs(),
            IDENTITY_TOL,
        );
        s.at_most(
            format!("{name}: |delta_mu|"),
            shift.delta_mu.abs(),
            IDENTITY_TOL,
        );
        s.at_most(
            format!("{name}: residual-equivalence gap"),
            shift.identity_residual,
            TOL,
        );
        let flagged = rep
            .paper_claims
            .iter()
            .any(|c| c.quantity == "weyl_delta_mu" && c.printed == 0.5 && !c.matched);
        s.holds(
            format!("{name}: printed mu + 1/2 flagged as unmatched"),
            flagged,
        );
    }
    Ok(())
}

fn torse(s: &mut Sheet, rng: &mut ChaCha8Rng, seed: u64) -> Step<()> {
    let mut gap = 0.0f64;
    for k in 0..50 {
        let n = 2 + k % 2;
        let c = coords(n);
        let rows = perturbed_metric(rng, &c, 0.05);
        let g: Vec<Expr> = rows
            .iter()
            .flatten()
            .map(|e| Expr::parse(e, &c))
            .collect::<Result<_, _>>()?;
        let g = MetricField::from_exprs(n, g);
        let xi: Vec<Expr> = (0..n)
            .map(|_| Expr::parse(&quadratic(rng, &c), &c))
            .collect::<Result<_, _>>()?;
        let xi = TensorField::from_exprs(n, vec![Slot::Up], xi);
        let lambda = rng.gen_range(-1.0..1.0);
        let f = rng.gen_range(-1.0..1.0);
        let p = uniform_box(rng, n, -0.5, 0.5);
        let r22 = generalized_residual(&SolitonData::vector(g.clone(), xi.clone(), lambda), &p)?.0;
        let r32 = eta_einstein_residual(&g, &xi, lambda, f, &p)?.0;
        let defect = torse_defect(&g, &xi, f, &p)?;
        gap = worst([gap, r22.sub(&r32).max_abs_diff(&defect)]);
    }
    s.at_most(
        "max |(residual22 - residual32) - torse defect| over 50 instances",
        gap,
        1e-10,
    );

    let (spec, m) = entry("torse_special")?;
    let xi = m
        .vector_field()
        .ok_or("torse_special has a vector field")??;
    let pts = points(&spec, 20, seed)?;
    let fits = torse_forming_check(&m.metric, &xi, &pts)?;
    let mut gamma = 0.0f64;
    for fit in &fits {
        let flat = m
            .metric
            .at(&fit.point, 0)?
            .lower(xi.at(&fit.point)?.components());
        gamma =
            worst(std::iter::once(gamma).chain(fit.gamma.iter().zip(&flat).map(|(a, b)| a - b)));
    }
    s.at_most(
        "torse_special: max |f|",
        worst(fits.iter().map(|f| f.f)),
        TOL,
    );
    s.at_most("torse_special: max |gamma - xi_flat|", gamma, TOL);
    Ok(())
}

fn curvature_gaps(s: &mut Sheet, name: &str, spec: &GeometrySpec, pts: Vec<Vec<f64>>) -> Step<()> {
    let opts = VerifyOptions {
        checks: Some(vec![Check::Curvature]),
        points: Some(pts),
        ..Default::default()
    };
    let rep = run_verify(spec, &opts)?;
    let c = &rep.checks["curvature"];
    if let Some(e) = &c.error {
        return Err(format!("{name}: {e}").into());
    }
    let Some(CheckDetails::Curvature { points }) = &c.details else {
        return Err(format!("{name}: curvature check produced no details").into());
    };
    let gap = |f: fn(&crate::report::CurvaturePoint) -> Option<f64>| {
        worst(points.iter().map(|p| f(p).unwrap_or(f64::NAN)))
    };
    s.at_most(
        format!("{name}: max |d d xi - Riem xi|"),
        gap(|p| p.second_derivative_gap),
        IDENTITY_TOL,
    );
    s.at_most(
        format!("{name}: max |d Q + div Riem|"),
        gap(|p| p.divergence_gap),
        IDENTITY_TOL,
    );
    Ok(())
}

const UNIT_SPHERE_WEAK: &str = r#"[manifold]
name = "unit sphere, xi = d/dth"
coords = ["th", "ph"]
[metric]
diagonal = ["1", "sin(th)^2"]
[soliton]
xi = ["1", "0"]
[sample]
box = [[0.2, 2.9], [0, 6.2]]
"#;

fn curvature(s: &mut Sheet, rng: &mut ChaCha8Rng, seed: u64) -> Step<()> {
    for call in ["cigar", "einstein_sphere"] {
        let (spec, _) = entry(call)?;
        let pts = points(&spec, 20, seed)?;
        curvature_gaps(s, call, &spec, pts)?;
    }
    let c = coords(3);
    let rows: Vec<String> = perturbed_metric(rng, &c, 0.05)
        .iter()
        .map(|r| toml_list(r))
        .collect();
    let text = format!(
        "[manifold]\nname = \"perturbed\"\ncoords = {}\n[metric]\ncomponents = [{}]\n",
        toml_list(&c),
        rows.join(", ")
    );
    let spec = parse_geometry(&text)?;
    let pts = (0..20).map(|_| uniform_box(rng, 3, -0.5, 0.5)).collect();
    curvature_gaps(s, "perturbed metric", &spec, pts)?;

    let spec = parse_geometry(UNIT_SPHERE_WEAK)?;
    let opts = VerifyOptions {
        checks: Some(vec![Check::Weak]),
        seed: Some(seed),
        points: Some(points(&spec, 20, seed)?),
        ..Default::default()
    };
    let rep = run_verify(&spec, &opts)?;
    let Some(CheckDetails::Weak { points }) = &rep.checks["weak"].details else {
        return Err("weak check produced no details".into());
    };
    s.at_most(
        "unit sphere: max |weak residual norm2 - 2|",
        worst(points.iter().map(|p| p.norm2 - 2.0)),
        IDENTITY_TOL,
    );
    Ok(())
}

fn statistical(s: &mut Sheet, _rng: &mut ChaCha8Rng, seed: u64) -> Step<()> {
    for kappa in [0.5, 1.0, 2.0] {
        let (spec, m) = entry(&format!("statistical_flat({kappa})"))?;
        let xi = m.vector_field().ok_or("statistical_flat has xi")??;
        let pts = points(&spec, 20, seed)?;
        let r = statistical_check(
            &m.metric,
            m.active_connection(),
            &xi,
            m.lambda.unwrap_or(0.0),
            &pts,
        )?;
        s.at_most(
            format!("kappa = {kappa}: duality residual"),
            r.duality_residual,
            1e-10,
        );
        s.at_most(
            format!("kappa = {kappa}: mean residual"),
            r.mean_residual,
            1e-12,
        );
    }

    // Levi-Civita is self-dual; routing it through the deformation path must
    // not change a single bit of the residual
    let (spec, m) = entry("cylinder(3)")?;
    let lc = &m.levi_civita;
    let zero = lc.coefficient_field().scaled(0.0);
    let deformed = lc.offset(&zero, true)?;
    let xi = m.vector_field().ok_or("cylinder has a potential")??;
    let lambda = m.lambda.unwrap_or(0.0);
    let plain = gradient_data(&m)?;
    let routed = SolitonData::vector(m.metric.clone(), xi, lambda).with_connection(deformed);
    let (mut identical, mut dual_gap) = (true, 0.0f64);
    let dual = dual_connection(&m.metric, lc)?;
    for p in points(&spec, 20, seed)? {
        let a = generalized_residual(&plain, &p)?;
        let b = generalized_residual(&routed, &p)?;
        identical &= a.1.to_bits() == b.1.to_bits()
            && a.0
                .components()
                .iter()
                .zip(b.0.components())
                .all(|(x, y)| x == y);
        dual_gap = worst([
            dual_gap,
            dual.coefficients_at(&p)?
                .max_abs_diff(&lc.coefficients_at(&p)?),
        ]);
    }
    s.at_most(
        "cylinder: |dual of Levi-Civita - Levi-Civita|",
        dual_gap,
        1e-12,
    );
    s.holds(
        "cylinder: self-dual residual identical bit for bit",
        identical,
    );
    Ok(())
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Step<MetricAtPoint<f64>> {
    let b: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            g[i * n + j] = (0..n).map(|k| b[k * n + i] * b[k * n + j]).sum::<f64>()
                + if i == j { 1.0 } else { 0.0 };
        }
    }
    Ok(MetricAtPoint::from_components(n, g)?)
}

/// `∇ξ` solving the shape-soliton equation for `A`, compared to the torse-forming form.
fn torse_gap(
    a: &TensorAtPoint<f64>,
    m: &MetricAtPoint<f64>,
    d: &EtaUmbilical<f64>,
    lambda: f64,
) -> f64 {
    let n = m.dim();
    let nabla_xi = a
        .scale(-1.0)
        .add_scaled(-lambda, &TensorAtPoint::identity(n));
    torse_forming_rhs(m, d, lambda).max_abs_diff(&nabla_xi)
}

fn hypersurface(s: &mut Sheet, rng: &mut ChaCha8Rng, seed: u64) -> Step<()> {
    let shapes = |call: &str| -> Step<Vec<_>> {
        let (spec, m) = entry(call)?;
        let imm = m.immersion.ok_or("entry has an immersion")?;
        points(&spec, 20, seed)?
            .iter()
            .map(|p| Ok(shape_at::<f64>(&imm, p)?))
            .collect()
    };
    let sphere = shapes("sphere")?;
    s.at_most(
        "sphere: max |A + I|",
        worst(
            sphere
                .iter()
                .map(|x| x.shape.add(&TensorAtPoint::identity(2)).max_abs()),
        ),
        TOL,
    );
    let (mut principal, mut split, mut torse) = (0.0f64, 0.0f64, 0.0f64);
    for x in shapes("cylinder_surface")? {
        let e = generalized_eigen(&x.second_form, &x.metric)?.eigenvalues;
        principal = worst([principal, e[0] + 1.0, e[1]]);
        let d = eta_umbilical_decompose(&x.shape, &x.metric)?;
        split = worst([split, d.sigma + 1.0, d.rho]);
        torse = worst([
            torse,
            torse_gap(&x.shape, &x.metric, &d, rng.gen_range(-1.0..1.0)),
        ]);
    }
    s.at_most(
        "cylinder: max distance of principal curvatures from {-1, 0}",
        principal,
        TOL,
    );
    s.at_most("cylinder: max |(sigma, rho) - (-1, 0)|", split, TOL);
    s.at_most(
        "plane: max |A|",
        worst(shapes("plane")?.iter().map(|x| x.shape.max_abs())),
        TOL,
    );

    let mut recovered = 0.0f64;
    for k in 0..50 {
        let n = 3 + k % 2;
        let m = random_spd(rng, n)?;
        let sigma = rng.gen_range(-2.0..2.0);
        let rho = sigma + rng.gen_range(0.1..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let len = m.inner(&v, &v).sqrt();
        let xi: Vec<f64> = v.iter().map(|c| c / len).collect();
        let a = eta_type(&m, sigma, rho, &xi);
        let d = eta_umbilical_decompose(&a, &m)?;
        recovered = worst([recovered, d.sigma - sigma, d.rho - rho]);
        torse = worst([torse, torse_gap(&a, &m, &d, rng.gen_range(-1.0..1.0))]);
    }
    s.at_most(
        "synthetic: max |(sigma, rho) recovered - planted|",
        recovered,
        TOL,
    );
    s.at_most(
        "max |torse-forming form - nabla xi| for shape solitons",
        torse,
        TOL,
    );
    Ok(())
}

/// A random expression over `coords`, defined on all of `R^n`.
fn random_expr(rng: &mut ChaCha8Rng, coords: &[String], depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.7) {
            coords[rng.gen_range(0..coords.len())].clone()
        } else {
            format!("{:.2}", rng.gen_range(0.5..1.5))
        };
    }
    let pick = rng.gen_range(0..13);
    let a = random_expr(rng, coords, depth - 1);
    let mut b = || random_expr(rng, coords, depth - 1);
    match pick {
        0 => format!("({a} + {})", b()),
        1 => format!("({a} - {})", b()),
        2 => format!("({a} * {})", b()),
        3 => format!("({a} / (1 + ({})^2))", b()),
        4 => format!("({a})^2"),
        5 => format!("({a})^3"),
        6 => format!("sin({a})"),
        7 => format!("cos({a})"),
        8 => format!("exp(0.5*({a}))"),
        9 => format!("atan({a})"),
        10 => format!("tanh({a})"),
        11 => format!("log(1 + ({a})^2)"),
        _ => format!("sqrt(1 + ({a})^2)"),
    }
}

/// Relative and absolute allowance for a jet partial of each order.
const JET_ALLOWANCE: [(f64, f64); 4] = [(0.0, 0.0), (1e-6, 1e-8), (1e-6, 1e-8), (1e-4, 1e-6)];

fn jet_oracle(s: &mut Sheet, rng: &mut ChaCha8Rng, _seed: u64) -> Step<()> {
    let mut ratio = [0.0f64; 4];
    let mut failing = [0usize; 4];
    let mut total = [0usize; 4];
    for _ in 0..200 {
        let n = rng.gen_range(1..=3);
        let c = coords(n);
        let text = random_expr(rng, &c, 3);
        let field = ScalarField::parse(&text, &c)?;
        let p = uniform_box(rng, n, -1.0, 1.0);
        let jet = field.eval_jet(&p, 3)?;
        let mut multi = Vec::new();
        for i in 0..n {
            multi.push(vec![i]);
            for j in i..n {
                multi.push(vec![i, j]);
                for k in j..n {
                    multi.push(vec![i, j, k]);
                }
            }
        }
        for idx in multi {
            let order = idx.len();
            let exact = jet.partial_value(&idx);
            let fd = finite_diff_oracle(&field, &p, &idx)?;
            let (rel, abs) = JET_ALLOWANCE[order];
            let r = (exact - fd).abs() / (rel * exact.abs()).max(abs);
            total[order] += 1;
            if !(r <= 1.0) {
                failing[order] += 1;
            }
            ratio[order] = worst([ratio[order], r]);
        }
    }
    for order in 1..=3 {
        let (rel, abs) = JET_ALLOWANCE[order];
        s.at_most(
            format!(
                "order {order}: worst |jet - fd| / max({rel:e}|jet|, {abs:e}); {} of {} partials outside",
                failing[order], total[order]
            ),
            ratio[order],
            1.0,
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measurements_compare_with_their_bound() {
        let mut s = Sheet::default();
        s.at_most("a", 1.0, 1.0);
        s.above("b", 0.0, 0.0);
        s.at_most("c", f64::NAN, 1.0);
        s.holds("d", true);
        let passed: Vec<bool> = s.items.iter().map(|m| m.passed).collect();
        assert_eq!(passed, [true, false, false, true]);
        assert_eq!(s.items[2].value, None);
    }

    #[test]
    fn worst_propagates_nan() {
        assert_eq!(worst([1.0, -3.0, 2.0]), 3.0);
        assert!(worst([1.0, f64::NAN, 2.0]).is_nan());
        assert_eq!(least([1.0, -3.0]), -3.0);
    }

    #[test]
    fn random_expressions_parse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = coords(3);
        for _ in 0..100 {
            let e = random_expr(&mut rng, &c, 3);
            ScalarField::parse(&e, &c).unwrap();
        }
    }
}
