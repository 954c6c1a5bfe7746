//! Runs the soliton, curvature and hypersurface checks requested for a geometry.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::catalog;
use crate::curvature::{
    div_riemann_at, ext_cov_deriv_at, ext_cov_deriv_field, ricci_at, ricci_endomorphism_field,
    riemann_apply,
};
use crate::error::Error;
use crate::fields::TensorField;
use crate::geometry::{ConnectionSpec, GeometryError, GeometrySpec, Model};
use crate::hypersurface::{
    eta_umbilical_decompose, self_adjoint_gap, shape_at, shape_soliton_residual,
};
use crate::pointwise::{generalized_eigen, norm2, Slot};
use crate::report::{
    quantize, CatalogReport, CheckDetails, CheckReport, CurvaturePoint, ExpectedOutcome,
    GeometryInfo, InequalityPoint, LambdaPoint, PaperClaim, PointResidual, Report, ShapePoint,
    WeakPoint, ENGINE_VERSION, SCHEMA_VERSION,
};
use crate::soliton::{
    constant_roots, generalized_residual, gradient_residual, soliton_report, statistical_check,
    torse_forming_check, vaisman_verify, weak_soliton_residual, weyl_shift_probe, Classification,
    SolitonData, SolitonReport,
};

/// Sample seed used unless `SOLAB_SEED` says otherwise.
pub const DEFAULT_SEED: u64 = 0x5EED;
/// Bound on residual norms and identities unless overridden.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Bound on the two curvature identities, which differentiate third-order jets.
pub const IDENTITY_TOL: f64 = 1e-8;
const MAX_DRAWS_PER_POINT: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Check {
    Gradient,
    Lambda,
    Inequalities,
    Generalized,
    Vaisman,
    Weyl,
    Torse,
    Statistical,
    Weak,
    Shape,
    Curvature,
}

impl Check {
    pub const ALL: [Check; 11] = [
        Check::Gradient,
        Check::Lambda,
        Check::Inequalities,
        Check::Generalized,
        Check::Vaisman,
        Check::Weyl,
        Check::Torse,
        Check::Statistical,
        Check::Weak,
        Check::Shape,
        Check::Curvature,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Gradient => "gradient",
            Check::Lambda => "lambda",
            Check::Inequalities => "inequalities",
            Check::Generalized => "generalized",
            Check::Vaisman => "vaisman",
            Check::Weyl => "weyl",
            Check::Torse => "torse",
            Check::Statistical => "statistical",
            Check::Weak => "weak",
            Check::Shape => "shape",
            Check::Curvature => "curvature",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| VerifyError::UnknownCheck(s.into()))
    }
}

/// Input problems; these never produce a report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
    #[error("check `{check}` needs {missing}")]
    Incompatible { check: Check, missing: &'static str },
    #[error("invalid point specification `{text}`: {message}")]
    BadPoint { text: String, message: String },
    #[error("no in-domain point found after {draws} draws")]
    Sampling { draws: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("cannot build geometry: {0}")]
    Build(Error),
}

impl From<catalog::CatalogError> for VerifyError {
    fn from(e: catalog::CatalogError) -> Self {
        VerifyError::Geometry(e.into())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyOptions {
    /// Overrides the checks named in the file or inferred from it.
    pub checks: Option<Vec<Check>>,
    /// Replaces the default sample.
    pub points: Option<Vec<Vec<f64>>>,
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
}

/// `SOLAB_SEED` as decimal or `0x` hexadecimal, else [`DEFAULT_SEED`].
pub fn seed_from_env() -> u64 {
    std::env::var("SOLAB_SEED")
        .ok()
        .and_then(|s| parse_seed(&s))
        .unwrap_or(DEFAULT_SEED)
}

pub fn parse_seed(s: &str) -> Option<u64> {
    let s = s.trim();
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => s.parse().ok(),
    }
}

/// Listed points followed by `count` random points from the sampling box.
pub fn sample_points(spec: &GeometrySpec, seed: u64) -> Result<Vec<Vec<f64>>, VerifyError> {
    let s = &spec.sample;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = s.points.clone();
    let mut draws = 0;
    while out.len() < s.points.len() + s.count {
        if draws >= MAX_DRAWS_PER_POINT * s.count.max(1) {
            return Err(VerifyError::Sampling { draws });
        }
        draws += 1;
        let p: Vec<f64> = s
            .bounds
            .iter()
            .map(|&[lo, hi]| lo + (hi - lo) * rng.gen::<f64>())
            .collect();
        if let Some([lo, hi]) = s.norm_range {
            let r = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(lo..=hi).contains(&r) {
                continue;
            }
        }
        out.push(p);
    }
    Ok(out)
}

/// Reads `x=0.5,y=-1` into a point of `spec`.
pub fn parse_at(spec: &GeometrySpec, text: &str) -> Result<Vec<f64>, VerifyError> {
    let bad = |message: String| VerifyError::BadPoint {
        text: text.into(),
        message,
    };
    let mut values: Vec<Option<f64>> = vec![None; spec.dim()];
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| bad(format!("`{part}` is not name=value")))?;
        let i = spec
            .coords
            .iter()
            .position(|c| c == k.trim())
            .ok_or_else(|| bad(format!("unknown coordinate `{k}`")))?;
        values[i] = Some(
            v.trim()
                .parse()
                .map_err(|_| bad(format!("`{v}` is not a number")))?,
        );
    }
    values
        .into_iter()
        .zip(&spec.coords)
        .map(|(v, c)| v.ok_or_else(|| bad(format!("missing coordinate `{c}`"))))
        .collect()
}

/// Reads a grid: either `k` points per axis across the sampling box, or
/// `x=lo:hi:k,y=lo:hi:k` naming every coordinate.
pub fn parse_grid(spec: &GeometrySpec, text: &str) -> Result<Vec<Vec<f64>>, VerifyError> {
    let bad = |message: String| VerifyError::BadPoint {
        text: text.into(),
        message,
    };
    let n = spec.dim();
    let axes: Vec<(f64, f64, usize)> = if let Ok(k) = text.trim().parse::<usize>() {
        spec.sample
            .bounds
            .iter()
            .map(|&[lo, hi]| (lo, hi, k))
            .collect()
    } else {
        let mut axes = vec![None; n];
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, range) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("`{part}` is not name=lo:hi:k")))?;
            let i = spec
                .coords
                .iter()
                .position(|c| c == name.trim())
                .ok_or_else(|| bad(format!("unknown coordinate `{name}`")))?;
            let f: Vec<&str> = range.split(':').collect();
            let parsed = match f.as_slice() {
                [lo, hi, k] => lo
                    .parse()
                    .ok()
                    .zip(hi.parse().ok())
                    .zip(k.parse().ok())
                    .map(|((a, b), c)| (a, b, c)),
                _ => None,
            };
            axes[i] = Some(parsed.ok_or_else(|| bad(format!("`{range}` is not lo:hi:k")))?);
        }
        axes.into_iter()
            .zip(&spec.coords)
            .map(|(a, c)| a.ok_or_else(|| bad(format!("missing coordinate `{c}`"))))
            .collect::<Result<_, _>>()?
    };
    if axes.iter().any(|a| a.2 == 0) {
        return Err(bad("every axis needs at least one point".into()));
    }
    let mut out = vec![vec![]];
    for (lo, hi, k) in axes {
        let ticks: Vec<f64> = (0..k)
            .map(|i| {
                if k == 1 {
                    0.5 * (lo + hi)
                } else {
                    lo + (hi - lo) * i as f64 / (k - 1) as f64
                }
            })
            .collect();
        out = out
            .into_iter()
            .flat_map(|p: Vec<f64>| ticks.iter().map(move |&t| [p.clone(), vec![t]].concat()))
            .collect();
    }
    Ok(out)
}

/// Checks implied by the sections present in `spec`.
pub fn default_checks(spec: &GeometrySpec) -> Vec<Check> {
    let mut out = Vec::new();
    let vector = spec.xi.is_some() || spec.eta.is_some();
    if spec.potential.is_some() && spec.lambda.is_some() {
        out.extend([Check::Gradient, Check::Lambda, Check::Inequalities]);
    }
    if vector && spec.potential.is_none() && spec.lambda.is_some() {
        out.push(Check::Generalized);
    }
    if spec.vaisman.is_some() {
        out.push(Check::Vaisman);
    }
    match spec.connection {
        ConnectionSpec::Weyl { .. } => out.push(Check::Weyl),
        ConnectionSpec::Deform { .. } | ConnectionSpec::Explicit { .. }
            if vector || spec.potential.is_some() =>
        {
            out.push(Check::Statistical)
        }
        _ => {}
    }
    if spec.immersion.is_some() {
        out.push(Check::Shape);
    }
    out.push(Check::Curvature);
    out
}

fn requirements(spec: &GeometrySpec, check: Check) -> Result<(), VerifyError> {
    let vector = spec.xi.is_some() || spec.eta.is_some() || spec.potential.is_some();
    let need = |ok: bool, missing| {
        if ok {
            Ok(())
        } else {
            Err(VerifyError::Incompatible { check, missing })
        }
    };
    match check {
        Check::Gradient | Check::Lambda | Check::Inequalities => {
            need(spec.potential.is_some(), "a [potential] section")?;
            need(spec.lambda.is_some(), "soliton.lambda")
        }
        Check::Generalized => {
            need(vector, "soliton.xi, soliton.eta or a potential")?;
            need(spec.lambda.is_some(), "soliton.lambda")
        }
        Check::Vaisman => need(spec.vaisman.is_some(), "a [vaisman] section"),
        Check::Weyl => need(
            matches!(spec.connection, ConnectionSpec::Weyl { .. }),
            "connection.kind = \"weyl\"",
        ),
        Check::Torse | Check::Weak | Check::Statistical => {
            need(vector, "soliton.xi, soliton.eta or a potential")
        }
        Check::Shape => need(spec.immersion.is_some(), "an [immersion] section"),
        Check::Curvature => Ok(()),
    }
}

/// Runs the requested checks at the sample points of `spec`.
pub fn run_verify(spec: &GeometrySpec, opts: &VerifyOptions) -> Result<Report, VerifyError> {
    let checks = match (&opts.checks, &spec.checks) {
        (Some(c), _) => c.clone(),
        (None, Some(names)) => names.iter().map(|s| s.parse()).collect::<Result<_, _>>()?,
        (None, None) => default_checks(spec),
    };
    for &c in &checks {
        requirements(spec, c)?;
    }
    let seed = opts.seed.unwrap_or_else(seed_from_env);
    let points = match &opts.points {
        Some(p) => {
            if let Some(bad) = p.iter().find(|p| p.len() != spec.dim()) {
                return Err(VerifyError::BadPoint {
                    text: format!("{bad:?}"),
                    message: format!("expected {} coordinates", spec.dim()),
                });
            }
            p.clone()
        }
        None => sample_points(spec, seed)?,
    };
    let tol = opts
        .tolerance
        .or(spec.tolerance)
        .unwrap_or(DEFAULT_TOLERANCE);
    let model = spec.build::<f64>().map_err(VerifyError::Build)?;
    let ctx = Ctx {
        spec,
        model: &model,
        points: &points,
        tol,
    };

    let mut reports = BTreeMap::new();
    let mut claims = Vec::new();
    for &c in &checks {
        let outcome = match ctx.run(c, &mut claims) {
            Ok((passed, details)) => CheckReport {
                passed,
                error: None,
                details: Some(details),
            },
            Err(e) => CheckReport {
                passed: false,
                error: Some(e.to_string()),
                details: None,
            },
        };
        reports.insert(c.name().to_string(), outcome);
    }
    for c in &spec.claims {
        let at = c.point.clone().or_else(|| points.first().cloned());
        let engine = at
            .as_ref()
            .and_then(|p| quantity_at(&model, &c.quantity, p).ok());
        claims.push(PaperClaim {
            quantity: c.quantity.clone(),
            point: at,
            printed: c.printed,
            text: c.text.clone(),
            engine,
            matched: engine.is_some_and(|v| close(v, c.printed, tol)),
        });
    }
    let report = Report {
        schema_version: SCHEMA_VERSION,
        engine_version: ENGINE_VERSION.into(),
        convention_hash: crate::report::convention_hash(),
        geometry: GeometryInfo {
            name: spec.name.clone(),
            dim: spec.dim(),
            coords: spec.coords.clone(),
        },
        seed,
        tolerance: tol,
        points,
        passed: reports.values().all(|c| c.passed),
        checks: reports,
        paper_claims: claims,
    };
    Ok(quantize(&report).expect("reports round-trip through JSON"))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol.max(1e-12) * 1f64.max(b.abs())
}

struct Ctx<'a> {
    spec: &'a GeometrySpec,
    model: &'a Model<f64>,
    points: &'a [Vec<f64>],
    tol: f64,
}

type CheckResult = crate::Result<(bool, CheckDetails)>;

impl Ctx<'_> {
    fn run(&self, check: Check, claims: &mut Vec<PaperClaim>) -> CheckResult {
        match check {
            Check::Gradient => self.gradient(),
            Check::Lambda => self.lambda(),
            Check::Inequalities => self.inequalities(),
            Check::Generalized => self.generalized(),
            Check::Vaisman => self.vaisman(),
            Check::Weyl => self.weyl(claims),
            Check::Torse => self.torse(),
            Check::Statistical => self.statistical(),
            Check::Weak => self.weak(),
            Check::Shape => self.shape(),
            Check::Curvature => self.curvature(),
        }
    }

    fn gradient(&self) -> CheckResult {
        let d = gradient_data(self.model)?;
        let points = self
            .points
            .iter()
            .map(|p| {
                Ok(PointResidual {
                    point: p.clone(),
                    norm2: gradient_residual(&d, p)?.1,
                })
            })
            .collect::<crate::Result<Vec<_>>>()?;
        let passed = points.iter().all(|r| r.norm2 <= self.tol);
        Ok((passed, CheckDetails::Gradient { points }))
    }

    fn reports(&self) -> crate::Result<Vec<SolitonReport<f64>>> {
        let d = gradient_data(self.model)?;
        self.points.iter().map(|p| soliton_report(&d, p)).collect()
    }

    fn lambda(&self) -> CheckResult {
        let lambda = self.model.lambda.unwrap_or(0.0);
        let reports = self.reports()?;
        let scale = 1f64.max(lambda.abs());
        let passed = reports.iter().all(|r| {
            let a = &r.lambda_analysis;
            let member = |d: Option<f64>| d.is_some_and(|d| d <= self.tol * scale);
            member(a.roots11.distance(lambda))
                && member(a.roots17.distance(lambda))
                && r.identity10_residual.abs() <= self.tol
                && a.trace16_residual.abs() <= self.tol
        });
        let analyses: Vec<_> = reports.iter().map(|r| r.lambda_analysis.clone()).collect();
        let points = self
            .points
            .iter()
            .cloned()
            .zip(reports)
            .map(|(point, report)| LambdaPoint { point, report })
            .collect();
        Ok((
            passed,
            CheckDetails::Lambda {
                points,
                constant_roots: constant_roots(&analyses),
                classification: Classification::of(lambda),
            },
        ))
    }

    fn inequalities(&self) -> CheckResult {
        let t = self.tol;
        let points: Vec<_> = self
            .points
            .iter()
            .zip(self.reports()?)
            .map(|(p, r)| InequalityPoint {
                point: p.clone(),
                margin13: r.margin13,
                margin19: r.margin19,
                disc12: r.lambda_analysis.disc12,
                disc18: r.lambda_analysis.disc18,
                left: r.double20.left,
                mid: r.double20.mid,
                right: r.double20.right,
            })
            .collect();
        let passed = points.iter().all(|q| {
            q.margin13 >= -t
                && q.margin19 >= -t
                && q.disc12 >= -t
                && q.disc18 >= -t
                && q.left <= q.mid + t
                && q.mid <= q.right + t
        });
        Ok((passed, CheckDetails::Inequalities { points }))
    }

    fn generalized(&self) -> CheckResult {
        let d = vector_data(self.model)?;
        let points = self
            .points
            .iter()
            .map(|p| {
                Ok(PointResidual {
                    point: p.clone(),
                    norm2: generalized_residual(&d, p)?.1,
                })
            })
            .collect::<crate::Result<Vec<_>>>()?;
        let passed = points.iter().all(|r| r.norm2 <= self.tol);
        Ok((passed, CheckDetails::Generalized { points }))
    }

    fn vaisman(&self) -> CheckResult {
        let (j, u) = self
            .model
            .vaisman
            .as_ref()
            .expect("checked by requirements");
        let report = vaisman_verify(&self.model.metric, j, u, self.points)?;
        Ok((report.passed, CheckDetails::Vaisman { report }))
    }

    fn weyl(&self, claims: &mut Vec<PaperClaim>) -> CheckResult {
        let ConnectionSpec::Weyl { eta } = &self.spec.connection else {
            unreachable!("checked by requirements")
        };
        let m = self.model;
        let eta = TensorField::from_exprs(self.spec.dim(), vec![Slot::Down], eta.clone());
        let f = match &m.endomorphism {
            Some(f) => f.clone(),
            None => ricci_endomorphism_field(&m.levi_civita, &m.metric)?,
        };
        let shift = weyl_shift_probe(
            &m.metric,
            &eta,
            &f,
            m.lambda.unwrap_or(0.0),
            m.mu.unwrap_or(0.0),
            self.points,
        )?;
        let at = self.points.first().cloned();
        claims.push(PaperClaim {
            quantity: "weyl_delta_mu".into(),
            point: at.clone(),
            printed: 0.5,
            text: "mu + 1/2".into(),
            engine: Some(shift.delta_mu),
            matched: close(shift.delta_mu, 0.5, self.tol),
        });
        let printed = -shift.xi_norm2 / 2.0;
        claims.push(PaperClaim {
            quantity: "weyl_delta_lambda".into(),
            point: at,
            printed,
            text: "lambda - |xi|^2/2".into(),
            engine: Some(shift.delta_lambda),
            matched: close(shift.delta_lambda, printed, self.tol),
        });
        let passed = shift.fit_residual <= self.tol && shift.identity_residual <= self.tol;
        Ok((passed, CheckDetails::Weyl { shift }))
    }

    fn torse(&self) -> CheckResult {
        let xi = vector_field(self.model)?;
        let fits = torse_forming_check(&self.model.metric, &xi, self.points)?;
        Ok((true, CheckDetails::Torse { fits }))
    }

    fn statistical(&self) -> CheckResult {
        let m = self.model;
        let xi = vector_field(m)?;
        let report = statistical_check(
            &m.metric,
            m.active_connection(),
            &xi,
            m.lambda.unwrap_or(0.0),
            self.points,
        )?;
        let passed = report.duality_residual <= self.tol && report.mean_residual <= self.tol;
        Ok((passed, CheckDetails::Statistical { report }))
    }

    fn weak(&self) -> CheckResult {
        let xi = vector_field(self.model)?;
        let points = self
            .points
            .iter()
            .map(|p| {
                let w = weak_soliton_residual(&self.model.metric, &xi, p)?;
                Ok(WeakPoint {
                    point: p.clone(),
                    norm2: w.norm2,
                    route_gap: w.route_gap,
                })
            })
            .collect::<crate::Result<Vec<_>>>()?;
        let passed = points.iter().all(|w| w.route_gap <= IDENTITY_TOL);
        Ok((passed, CheckDetails::Weak { points }))
    }

    fn shape(&self) -> CheckResult {
        let m = self.model;
        let imm = m.immersion.as_ref().expect("checked by requirements");
        let xi = m.vector_field().transpose()?;
        let mut points = Vec::with_capacity(self.points.len());
        for p in self.points {
            let s = shape_at(imm, p)?;
            let principal = generalized_eigen(&s.second_form, &s.metric)?.eigenvalues;
            let soliton_norm2 = match (&xi, m.lambda) {
                (Some(x), Some(l)) => Some(shape_soliton_residual(imm, x, l, p)?.1),
                _ => None,
            };
            points.push(ShapePoint {
                point: p.clone(),
                principal,
                self_adjoint_gap: self_adjoint_gap(&s.shape, &s.metric),
                eta_umbilical: eta_umbilical_decompose(&s.shape, &s.metric).ok(),
                soliton_norm2,
            });
        }
        let passed = points.iter().all(|s| {
            s.self_adjoint_gap <= self.tol && s.soliton_norm2.is_none_or(|r| r <= self.tol)
        });
        Ok((passed, CheckDetails::Shape { points }))
    }

    fn curvature(&self) -> CheckResult {
        let m = self.model;
        let n = self.spec.dim();
        let lc = &m.levi_civita;
        // both identities differentiate the curvature once more
        let identities = m.metric.max_order() >= 3;
        let fields: Vec<TensorField<f64>> = match m.vector_field() {
            Some(x) => vec![x?],
            None => (0..n)
                .map(|k| {
                    TensorField::constant(
                        n,
                        vec![Slot::Up],
                        (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect(),
                    )
                })
                .collect(),
        };
        let (dd, dq) = if identities {
            let dd: Vec<TensorField<f64>> = fields
                .iter()
                .map(|x| ext_cov_deriv_field(lc, x))
                .collect::<crate::Result<_>>()?;
            let dq = ext_cov_deriv_field(lc, &ricci_endomorphism_field(lc, &m.metric)?)?;
            (dd, Some(dq))
        } else {
            (vec![], None)
        };
        let mut points = Vec::with_capacity(self.points.len());
        for p in self.points {
            let curv = ricci_at(lc, &m.metric, p)?;
            let g = m.metric.at(p, 0)?;
            let (mut second, mut divergence) = (None, None);
            if let Some(dq) = &dq {
                let mut worst = 0.0f64;
                for (x, d) in fields.iter().zip(&dd) {
                    let lhs = ext_cov_deriv_at(lc, d, p)?;
                    let rhs = riemann_apply(&curv.riemann, x.at(p)?.components());
                    worst = worst.max(lhs.max_abs_diff(&rhs));
                }
                second = Some(worst);
                divergence = Some(dq.at(p)?.add(&div_riemann_at(lc, &m.metric, p)?).max_abs());
            }
            points.push(CurvaturePoint {
                point: p.clone(),
                scalar_r: curv.scalar,
                norm_ric2: norm2(&curv.ricci, &g)?,
                gauss: curv.gauss,
                second_derivative_gap: second,
                divergence_gap: divergence,
            });
        }
        let within = |v: Option<f64>| v.is_none_or(|v| v <= IDENTITY_TOL);
        let passed = points
            .iter()
            .all(|c| within(c.second_derivative_gap) && within(c.divergence_gap));
        Ok((passed, CheckDetails::Curvature { points }))
    }
}

fn gradient_data(m: &Model<f64>) -> crate::Result<SolitonData<f64>> {
    let f = m
        .potential
        .clone()
        .ok_or_else(|| Error::Invalid("no potential".into()))?;
    let mut d = SolitonData::gradient(m.metric.clone(), f, m.lambda.unwrap_or(0.0));
    if let Some(mu) = m.mu {
        d = d.with_mu(mu);
    }
    Ok(d)
}

fn vector_field(m: &Model<f64>) -> crate::Result<TensorField<f64>> {
    m.vector_field()
        .unwrap_or_else(|| Err(Error::Invalid("no vector field".into())))
}

/// Generalized-soliton data under the active connection.
fn vector_data(m: &Model<f64>) -> crate::Result<SolitonData<f64>> {
    let mut d = match &m.potential {
        Some(f) => SolitonData::gradient(m.metric.clone(), f.clone(), m.lambda.unwrap_or(0.0)),
        None => SolitonData::vector(m.metric.clone(), vector_field(m)?, m.lambda.unwrap_or(0.0)),
    };
    if let Some(mu) = m.mu {
        d = d.with_mu(mu);
    }
    if let Some(f) = &m.endomorphism {
        d = d.with_endomorphism(f.clone());
    }
    if let Some(c) = &m.connection {
        d = d.with_connection(c.clone());
    }
    Ok(d)
}

/// Names accepted by [`quantity_at`].
pub const QUANTITIES: &[&str] = &[
    "lambda",
    "residual_norm2",
    "laplacian",
    "norm_h2",
    "norm_ric2",
    "scalar_r",
    "gauss",
    "disc12",
    "disc18",
    "margin13",
    "margin19",
    "identity10_residual",
    "trace16_residual",
    "hessian_eig_min",
    "hessian_eig_max",
    "principal_min",
    "principal_max",
    "sigma",
    "rho",
    "vaisman_soliton_norm2",
    "vaisman_recurrence_error",
    "vaisman_torsion_error",
    "duality_residual",
    "mean_residual",
    "torse_f",
    "torse_gamma_defect",
    "weak_norm2",
];

/// Evaluates a named scalar of the standard report at `p`.
pub fn quantity_at(m: &Model<f64>, name: &str, p: &[f64]) -> crate::Result<f64> {
    let missing = |what: &str| Error::Invalid(format!("quantity `{name}` needs {what}"));
    let pts = [p.to_vec()];
    match name {
        "lambda" => m.lambda.ok_or_else(|| missing("soliton.lambda")),
        "residual_norm2" => Ok(gradient_residual(&gradient_data(m)?, p)?.1),
        "norm_ric2" | "scalar_r" | "gauss" if m.potential.is_none() => {
            let c = ricci_at(&m.levi_civita, &m.metric, p)?;
            match name {
                "norm_ric2" => norm2(&c.ricci, &m.metric.at(p, 0)?),
                "scalar_r" => Ok(c.scalar),
                _ => c.gauss.ok_or_else(|| missing("dimension two")),
            }
        }
        "laplacian"
        | "norm_h2"
        | "norm_ric2"
        | "scalar_r"
        | "gauss"
        | "disc12"
        | "disc18"
        | "margin13"
        | "margin19"
        | "identity10_residual"
        | "trace16_residual"
        | "hessian_eig_min"
        | "hessian_eig_max" => {
            let r = soliton_report(&gradient_data(m)?, p)?;
            let eig = &r.spectrum.eigenvalues;
            Ok(match name {
                "laplacian" => r.laplacian,
                "norm_h2" => r.norm_h2,
                "norm_ric2" => r.norm_ric2,
                "scalar_r" => r.scalar_r,
                "gauss" => r.gauss.ok_or_else(|| missing("dimension two"))?,
                "disc12" => r.lambda_analysis.disc12,
                "disc18" => r.lambda_analysis.disc18,
                "margin13" => r.margin13,
                "margin19" => r.margin19,
                "identity10_residual" => r.identity10_residual,
                "trace16_residual" => r.lambda_analysis.trace16_residual,
                "hessian_eig_min" => eig[0],
                _ => eig[eig.len() - 1],
            })
        }
        "principal_min" | "principal_max" | "sigma" | "rho" => {
            let imm = m
                .immersion
                .as_ref()
                .ok_or_else(|| missing("an immersion"))?;
            let s = shape_at(imm, p)?;
            match name {
                "principal_min" | "principal_max" => {
                    let e = generalized_eigen(&s.second_form, &s.metric)?.eigenvalues;
                    Ok(if name == "principal_min" {
                        e[0]
                    } else {
                        e[e.len() - 1]
                    })
                }
                _ => {
                    let d = eta_umbilical_decompose(&s.shape, &s.metric)?;
                    Ok(if name == "sigma" { d.sigma } else { d.rho })
                }
            }
        }
        "vaisman_soliton_norm2" | "vaisman_recurrence_error" | "vaisman_torsion_error" => {
            let (j, u) = m
                .vaisman
                .as_ref()
                .ok_or_else(|| missing("a [vaisman] section"))?;
            let r = vaisman_verify(&m.metric, j, u, &pts)?;
            match name {
                "vaisman_soliton_norm2" => Ok(r.max_soliton_norm2),
                "vaisman_recurrence_error" => r
                    .max_recurrence_error
                    .ok_or(Error::Invalid("connection is not recurrent".into())),
                _ => Ok(r.max_torsion_error),
            }
        }
        "duality_residual" | "mean_residual" => {
            let r = statistical_check(
                &m.metric,
                m.active_connection(),
                &vector_field(m)?,
                m.lambda.unwrap_or(0.0),
                &pts,
            )?;
            Ok(if name == "duality_residual" {
                r.duality_residual
            } else {
                r.mean_residual
            })
        }
        "torse_f" | "torse_gamma_defect" => {
            let xi = vector_field(m)?;
            let fit = torse_forming_check(&m.metric, &xi, &pts)?.remove(0);
            if name == "torse_f" {
                return Ok(fit.f);
            }
            let flat = m.metric.at(p, 0)?.lower(xi.at(p)?.components());
            Ok(fit
                .gamma
                .iter()
                .zip(&flat)
                .fold(0.0, |w, (g, e)| w.max((g - e).abs())))
        }
        "weak_norm2" => Ok(weak_soliton_residual(&m.metric, &vector_field(m)?, p)?.norm2),
        _ => Err(Error::Invalid(format!("unknown quantity `{name}`"))),
    }
}

/// Verifies a catalog entry and reproduces its expected values.
pub fn verify_catalog(call: &str, opts: &VerifyOptions) -> Result<CatalogReport, VerifyError> {
    let inst = catalog::get_call(call)?;
    let spec = GeometrySpec::from_file(inst.geometry.clone())?;
    let report = run_verify(&spec, opts)?;
    let model = spec.build::<f64>().map_err(VerifyError::Build)?;
    let outcomes: Vec<ExpectedOutcome> = inst
        .expected
        .iter()
        .map(|e| match quantity_at(&model, &e.quantity, &e.point) {
            Ok(v) => ExpectedOutcome {
                expected: e.clone(),
                engine: Some(v),
                error: None,
                passed: (v - e.value).abs() <= e.tolerance,
            },
            Err(err) => ExpectedOutcome {
                expected: e.clone(),
                engine: None,
                error: Some(err.to_string()),
                passed: false,
            },
        })
        .collect();
    let passed = report.passed && outcomes.iter().all(|o| o.passed);
    Ok(quantize(&CatalogReport {
        call: inst.call,
        outcomes,
        report,
        passed,
    })
    .expect("reports round-trip through JSON"))
}
