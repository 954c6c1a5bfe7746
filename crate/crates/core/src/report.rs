//! Verification reports and their canonical JSON form.
//!
//! Canonical JSON has sorted object keys and prints every float as `%.12e`.
//! Reports are quantized through that form when built, so
//! `parse(emit(r)) == r` holds field for field.

use std::collections::BTreeMap;
use std::io;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::Expected;
use crate::hypersurface::EtaUmbilical;
use crate::soliton::{
    Classification, SolitonReport, StatisticalReport, TorseFit, VaismanReport, WeylShift,
};

/// Version of the report layout; bump on any incompatible change.
pub const SCHEMA_VERSION: u32 = 1;

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Sign and index conventions; reports carry their hash so that results
/// computed under different conventions are never compared silently.
pub const CONVENTIONS: &str = "\
christoffel: nabla_{d_i} d_j = Gamma^k_ij d_k, stored [k][i][j]
covariant derivative: derivative slot appended last
torsion: T^k_ij = Gamma^k_ij - Gamma^k_ji
riemann: R^l_kij = d_i Gamma^l_jk - d_j Gamma^l_ik + Gamma^l_im Gamma^m_jk - Gamma^l_jm Gamma^m_ik, stored [l][k][i][j]
ricci: Ric_ij = R^l_ilj; Q = g^-1 Ric
soliton: H_f + Ric + lambda g = 0; lambda < 0 shrinking, 0 steady, > 0 expanding
generalized soliton: nabla xi + F + lambda I + mu eta (x) xi = 0
shape operator: A X = -D_X nu, nu = orientation * normalized generalized cross product of the coordinate tangents
eta-umbilical: A = sigma I + (rho - sigma) eta (x) xi
";

/// SHA-256 of [`CONVENTIONS`], hex encoded.
pub fn convention_hash() -> String {
    Sha256::digest(CONVENTIONS.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Writes `%.12e` floats, matching C's `printf`.
pub fn format_sci(v: f64) -> String {
    let s = format!("{v:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent always present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        if v.is_finite() {
            w.write_all(format_sci(v).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(v))
    }
}

/// Canonical JSON text of `value`.
pub fn to_canonical_json<S: Serialize>(value: &S) -> serde_json::Result<String> {
    // going through `Value` sorts every object by key
    let tree = serde_json::to_value(value)?;
    let mut out = Vec::new();
    tree.serialize(&mut serde_json::Serializer::with_formatter(
        &mut out,
        SciFormatter,
    ))?;
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

/// Rounds every float of `value` to what its canonical JSON records.
pub fn quantize<S: Serialize + DeserializeOwned>(value: &S) -> serde_json::Result<S> {
    serde_json::from_str(&to_canonical_json(value)?)
}

/// Outcome of one named check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub passed: bool,
    /// Engine error that stopped the check, if any.
    pub error: Option<String>,
    pub details: Option<CheckDetails>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResidual {
    pub point: Vec<f64>,
    pub norm2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityPoint {
    pub point: Vec<f64>,
    pub margin13: f64,
    pub margin19: f64,
    pub disc12: f64,
    pub disc18: f64,
    pub left: f64,
    pub mid: f64,
    pub right: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaPoint {
    pub point: Vec<f64>,
    pub report: SolitonReport<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapePoint {
    pub point: Vec<f64>,
    /// Principal curvatures, ascending.
    pub principal: Vec<f64>,
    pub self_adjoint_gap: f64,
    /// `None` when the shape operator is not eta-umbilical.
    pub eta_umbilical: Option<EtaUmbilical<f64>>,
    /// Norm² of `∇ξ + A + λI` when soliton data is present.
    pub soliton_norm2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvaturePoint {
    pub point: Vec<f64>,
    pub scalar_r: f64,
    pub norm_ric2: f64,
    pub gauss: Option<f64>,
    /// `max |d∇d∇ξ − Riem(·,·)ξ|` over the vector field or the coordinate fields.
    /// `None` when the metric jets are too short to differentiate the curvature.
    pub second_derivative_gap: Option<f64>,
    /// `max |d∇Q + div Riem|`.
    pub divergence_gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakPoint {
    pub point: Vec<f64>,
    pub norm2: f64,
    pub route_gap: f64,
}

/// Check-specific payloads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckDetails {
    Gradient {
        points: Vec<PointResidual>,
    },
    Lambda {
        points: Vec<LambdaPoint>,
        constant_roots: Vec<f64>,
        classification: Classification,
    },
    Inequalities {
        points: Vec<InequalityPoint>,
    },
    Generalized {
        points: Vec<PointResidual>,
    },
    Vaisman {
        report: VaismanReport<f64>,
    },
    Weyl {
        shift: WeylShift<f64>,
    },
    Torse {
        fits: Vec<TorseFit<f64>>,
    },
    Statistical {
        report: StatisticalReport<f64>,
    },
    Weak {
        points: Vec<WeakPoint>,
    },
    Shape {
        points: Vec<ShapePoint>,
    },
    Curvature {
        points: Vec<CurvaturePoint>,
    },
}

/// A value printed in the source text next to what the engine computes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaperClaim {
    pub quantity: String,
    pub point: Option<Vec<f64>>,
    pub printed: f64,
    pub text: String,
    pub engine: Option<f64>,
    pub matched: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryInfo {
    pub name: String,
    pub dim: usize,
    pub coords: Vec<String>,
}

/// Full output of a verification run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub engine_version: String,
    pub convention_hash: String,
    pub geometry: GeometryInfo,
    pub seed: u64,
    pub tolerance: f64,
    pub points: Vec<Vec<f64>>,
    pub checks: BTreeMap<String, CheckReport>,
    /// Commentary only; never affects `passed`.
    pub paper_claims: Vec<PaperClaim>,
    pub passed: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        to_canonical_json(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Human-readable summary, one line per check.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{} (dim {}, {} points, tol {})\n",
            self.geometry.name,
            self.geometry.dim,
            self.points.len(),
            format_sci(self.tolerance)
        );
        for (name, c) in &self.checks {
            let status = if c.passed { "pass" } else { "FAIL" };
            s.push_str(&format!("  {status:4}  {name}"));
            if let Some(e) = &c.error {
                s.push_str(&format!(": {e}"));
            } else if let Some(d) = &c.details {
                s.push_str(&summary(d));
            }
            s.push('\n');
        }
        for c in &self.paper_claims {
            let engine = c.engine.map_or("n/a".to_string(), format_sci);
            let tag = if c.matched { "matches" } else { "differs" };
            s.push_str(&format!(
                "  note  {}: printed {} ({}), engine {engine}, {tag}\n",
                c.quantity,
                c.text,
                format_sci(c.printed)
            ));
        }
        s.push_str(if self.passed { "PASS\n" } else { "FAIL\n" });
        s
    }
}

fn worst<I: IntoIterator<Item = f64>>(it: I) -> String {
    format_sci(it.into_iter().fold(0.0, f64::max))
}

fn summary(d: &CheckDetails) -> String {
    match d {
        CheckDetails::Gradient { points } | CheckDetails::Generalized { points } => {
            format!(
                ": max residual norm2 {}",
                worst(points.iter().map(|p| p.norm2))
            )
        }
        CheckDetails::Lambda {
            constant_roots,
            classification,
            ..
        } => {
            let roots: Vec<String> = constant_roots.iter().map(|&r| format_sci(r)).collect();
            format!(": {classification:?}, roots [{}]", roots.join(", ")).to_lowercase()
        }
        CheckDetails::Inequalities { points } => {
            let m13 = points
                .iter()
                .map(|p| p.margin13)
                .fold(f64::INFINITY, f64::min);
            let m19 = points
                .iter()
                .map(|p| p.margin19)
                .fold(f64::INFINITY, f64::min);
            format!(
                ": min margin13 {}, min margin19 {}",
                format_sci(m13),
                format_sci(m19)
            )
        }
        CheckDetails::Vaisman { report } => format!(
            ": soliton {}, recurrence {}, torsion {}",
            format_sci(report.max_soliton_norm2),
            report.max_recurrence_error.map_or("n/a".into(), format_sci),
            format_sci(report.max_torsion_error)
        ),
        CheckDetails::Weyl { shift } => format!(
            ": delta lambda {}, delta mu {}",
            format_sci(shift.delta_lambda),
            format_sci(shift.delta_mu)
        ),
        CheckDetails::Torse { fits } => format!(
            ": max fit residual {}",
            worst(fits.iter().map(|f| f.residual))
        ),
        CheckDetails::Statistical { report } => format!(
            ": duality {}, mean {}, statistical soliton {}",
            format_sci(report.duality_residual),
            format_sci(report.mean_residual),
            report.statistical_soliton
        ),
        CheckDetails::Weak { points } => {
            format!(": max norm2 {}", worst(points.iter().map(|p| p.norm2)))
        }
        CheckDetails::Shape { points } => {
            format!(
                ": max self-adjoint gap {}",
                worst(points.iter().map(|p| p.self_adjoint_gap))
            )
        }
        CheckDetails::Curvature { points } => {
            if points.iter().all(|p| p.second_derivative_gap.is_none()) {
                return ": identities skipped, metric jets too short".into();
            }
            format!(
                ": identity gaps {} / {}",
                worst(points.iter().filter_map(|p| p.second_derivative_gap)),
                worst(points.iter().filter_map(|p| p.divergence_gap))
            )
        }
    }
}

/// One expected catalog value, as reproduced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedOutcome {
    pub expected: Expected,
    pub engine: Option<f64>,
    pub error: Option<String>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogReport {
    pub call: String,
    pub outcomes: Vec<ExpectedOutcome>,
    pub report: Report,
    pub passed: bool,
}

impl CatalogReport {
    pub fn to_json(&self) -> String {
        to_canonical_json(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.call);
        for o in &self.outcomes {
            let e = &o.expected;
            let mark = if o.passed { "pass" } else { "FAIL" };
            let engine = match (&o.engine, &o.error) {
                (Some(v), _) => format_sci(*v),
                (None, Some(err)) => format!("error: {err}"),
                (None, None) => "missing".into(),
            };
            out.push_str(&format!(
                "  {mark}  expect {} = {} (tol {}): engine {engine}\n",
                e.quantity,
                format_sci(e.value),
                format_sci(e.tolerance)
            ));
        }
        out.push_str(&self.report.to_text());
        out
    }
}
