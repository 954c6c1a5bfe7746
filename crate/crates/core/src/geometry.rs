//! Geometry definition files.
//!
//! A file is TOML with the sections `[manifold]`, `[metric]`, `[potential]`,
//! `[soliton]`, `[connection]`, `[vaisman]`, `[immersion]`, `[sample]`,
//! `[verify]` and `[[claims]]`. Every expression is a quoted string in the
//! expression grammar of [`crate::fields`], over the names in `manifold.coords`.
//! Tensor indices in `[connection]` component lists are 1-based.
//!
//! ```toml
//! [manifold]
//! name = "cigar"
//! coords = ["x", "y"]
//!
//! [metric]
//! conformal = "1/(1+x^2+y^2)"
//!
//! [potential]
//! f = "-log(1+x^2+y^2)"
//!
//! [soliton]
//! lambda = 0.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{self, CatalogError};
use crate::connection::{
    deform_connection, levi_civita, weyl_connection, ConnectionField, DeformTerm,
};
use crate::fields::{Expr, TensorField};
use crate::hypersurface::{induced_metric, Immersion};
use crate::pointwise::{MetricField, Slot};
use crate::scalar::Real;

/// Failure to read, parse or validate a geometry file.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}, column {col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

impl GeometryError {
    fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        GeometryError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Raw file contents, before expressions are compiled.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryFile {
    #[serde(default)]
    pub manifold: ManifoldSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soliton: Option<SolitonSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection: Option<ConnectionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vaisman: Option<VaismanSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub immersion: Option<ImmersionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub claims: Vec<ClaimEntry>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<String>>,
    /// A catalog entry such as `"cylinder(3)"` whose sections this file overrides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extends: Option<String>,
}

/// Exactly one of `components` (full rows or upper-triangle rows), `diagonal`
/// or `conformal` (a factor times the identity).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conformal: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub f: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// Vector field components `ξ^i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<Vec<String>>,
    /// Covector components `η_i`; `ξ = η♯` when `xi` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<String>>,
    /// Endomorphism rows `F^i_j`; defaults to the Ricci endomorphism.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endomorphism: Option<Vec<Vec<String>>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionKind {
    #[default]
    LeviCivita,
    Weyl,
    Deform,
    Explicit,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionSection {
    pub kind: ConnectionKind,
    /// Weyl 1-form; falls back to `soliton.eta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<String>>,
    /// Deformation terms added to the Levi-Civita connection.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<TermEntry>,
    /// Christoffel symbols `Γ^k_ij`: for `explicit` the full list of nonzero
    /// symbols, for `deform` additional offsets.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<ComponentEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    /// `coeff · α ⊗ F` (`F = I` when absent): `Γ^k_ij += coeff α_i F^k_j`.
    AlphaF,
    /// `coeff · I ⊗ α`: `Γ^k_ij += coeff α_j δ^k_i`.
    IdAlpha,
    /// `coeff · g ⊗ ξ`: `Γ^k_ij += coeff g_ij ξ^k`.
    GXi,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermEntry {
    pub kind: TermKind,
    #[serde(default = "one")]
    pub coeff: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<Vec<String>>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentEntry {
    pub upper: usize,
    pub lower: [usize; 2],
    pub value: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VaismanSection {
    /// Rows `J^i_j`.
    pub j: Vec<Vec<String>>,
    /// Lee form `u_i`.
    pub u: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImmersionSection {
    /// Ambient components `X^a`, `dim + 1` of them.
    pub x: Vec<String>,
    #[serde(default = "plus_one")]
    pub orientation: i8,
}

fn plus_one() -> i8 {
    1
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSection {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Vec<f64>>,
    /// Per-coordinate `[lo, hi]` bounds for random points; `[-1, 1]` by default.
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<[f64; 2]>>,
    /// Accepted range of the Euclidean norm of the coordinate vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

/// A value printed in the source text, compared against the engine but never
/// failing a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimEntry {
    pub quantity: String,
    pub printed: f64,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
}

/// How the connection of a spec is assembled.
#[derive(Clone, Debug, PartialEq)]
pub enum ConnectionSpec {
    LeviCivita,
    Weyl {
        eta: Vec<Expr>,
    },
    Deform {
        terms: Vec<TermSpec>,
        offsets: Vec<(usize, Expr)>,
    },
    Explicit {
        gamma: Vec<Expr>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TermSpec {
    pub kind: TermKind,
    pub coeff: f64,
    /// `α` for [`TermKind::AlphaF`] and [`TermKind::IdAlpha`], `ξ` for [`TermKind::GXi`].
    pub field: Vec<Expr>,
    pub f: Option<Vec<Expr>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleSpec {
    pub points: Vec<Vec<f64>>,
    pub bounds: Vec<[f64; 2]>,
    pub norm_range: Option<[f64; 2]>,
    pub count: usize,
}

/// Default number of random sample points.
pub const DEFAULT_SAMPLE_COUNT: usize = 8;

/// A validated geometry with every expression compiled.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometrySpec {
    pub name: String,
    pub coords: Vec<String>,
    /// Row-major `g_ij`; induced from the immersion when one is given.
    pub metric: Option<Vec<Expr>>,
    pub potential: Option<Expr>,
    pub xi: Option<Vec<Expr>>,
    pub eta: Option<Vec<Expr>>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub endomorphism: Option<Vec<Expr>>,
    pub connection: ConnectionSpec,
    pub vaisman: Option<(Vec<Expr>, Vec<Expr>)>,
    pub immersion: Option<Immersion>,
    pub sample: SampleSpec,
    pub checks: Option<Vec<String>>,
    pub tolerance: Option<f64>,
    pub claims: Vec<ClaimEntry>,
    /// The merged file this spec was compiled from.
    pub source: GeometryFile,
}

/// Reads, merges and validates a geometry file.
pub fn load_geometry(path: impl AsRef<Path>) -> Result<GeometrySpec, GeometryError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| GeometryError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_geometry(&text)
}

/// Parses geometry text; see the module docs for the format.
pub fn parse_geometry(text: &str) -> Result<GeometrySpec, GeometryError> {
    let file: GeometryFile = toml::from_str(text).map_err(|e| {
        let (line, col) = e.span().map(|s| line_col(text, s.start)).unwrap_or((1, 1));
        GeometryError::Parse {
            line,
            col,
            message: e.message().to_string(),
        }
    })?;
    GeometrySpec::from_file(file)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before
        .rfind('\n')
        .map_or(before.len(), |i| before.len() - i - 1)
        + 1;
    (line, col)
}

/// Overlays `file` on the catalog entry it extends, if any.
fn merge_extends(file: GeometryFile) -> Result<GeometryFile, GeometryError> {
    let Some(call) = file.manifold.extends.clone() else {
        return Ok(file);
    };
    let mut base = catalog::get_call(&call)?.geometry;
    let m = file.manifold;
    base.manifold.name = m.name.or(base.manifold.name);
    base.manifold.dim = m.dim.or(base.manifold.dim);
    base.manifold.coords = m.coords.or(base.manifold.coords);
    base.manifold.extends = Some(call);
    macro_rules! overlay {
        ($($s:ident),*) => { $( if file.$s.is_some() { base.$s = file.$s; } )* };
    }
    overlay!(metric, potential, soliton, connection, vaisman, immersion, sample, verify);
    if !file.claims.is_empty() {
        base.claims = file.claims;
    }
    Ok(base)
}

struct Compiler<'a> {
    coords: &'a [String],
}

impl Compiler<'_> {
    fn dim(&self) -> usize {
        self.coords.len()
    }

    fn expr(&self, field: &str, text: &str) -> Result<Expr, GeometryError> {
        Expr::parse(text, self.coords).map_err(|e| GeometryError::field(field, e.to_string()))
    }

    fn vector(
        &self,
        field: &str,
        items: &[String],
        len: usize,
    ) -> Result<Vec<Expr>, GeometryError> {
        if items.len() != len {
            return Err(GeometryError::field(
                field,
                format!("expected {len} entries, found {}", items.len()),
            ));
        }
        items
            .iter()
            .enumerate()
            .map(|(i, s)| self.expr(&format!("{field}[{i}]"), s))
            .collect()
    }

    fn matrix(&self, field: &str, rows: &[Vec<String>]) -> Result<Vec<Expr>, GeometryError> {
        let n = self.dim();
        if rows.len() != n {
            return Err(GeometryError::field(
                field,
                format!("expected {n} rows, found {}", rows.len()),
            ));
        }
        let mut out = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            out.extend(self.vector(&format!("{field}[{i}]"), row, n)?);
        }
        Ok(out)
    }

    fn metric(&self, m: &MetricSection) -> Result<Vec<Expr>, GeometryError> {
        let n = self.dim();
        let given = [
            m.components.is_some(),
            m.diagonal.is_some(),
            m.conformal.is_some(),
        ];
        if given.iter().filter(|&&b| b).count() != 1 {
            return Err(GeometryError::field(
                "metric",
                "give exactly one of components, diagonal, conformal",
            ));
        }
        let zero = Expr::num(0.0);
        if let Some(c) = &m.conformal {
            let e = self.expr("metric.conformal", c)?;
            return Ok((0..n * n)
                .map(|k| {
                    if k / n == k % n {
                        e.clone()
                    } else {
                        zero.clone()
                    }
                })
                .collect());
        }
        if let Some(d) = &m.diagonal {
            let d = self.vector("metric.diagonal", d, n)?;
            return Ok((0..n * n)
                .map(|k| {
                    if k / n == k % n {
                        d[k / n].clone()
                    } else {
                        zero.clone()
                    }
                })
                .collect());
        }
        let rows = m.components.as_ref().expect("one option is set");
        if rows.len() != n {
            return Err(GeometryError::field(
                "metric.components",
                format!("expected {n} rows, found {}", rows.len()),
            ));
        }
        let upper = rows.iter().enumerate().all(|(i, r)| r.len() == n - i) && n > 1;
        let mut g = vec![zero; n * n];
        for (i, row) in rows.iter().enumerate() {
            let field = format!("metric.components[{i}]");
            let (start, len) = if upper { (i, n - i) } else { (0, n) };
            let row = self.vector(&field, row, len)?;
            for (k, e) in row.into_iter().enumerate() {
                let j = start + k;
                if upper {
                    g[j * n + i] = e.clone();
                }
                g[i * n + j] = e;
            }
        }
        if !upper {
            for i in 0..n {
                for j in i + 1..n {
                    if g[i * n + j] != g[j * n + i] {
                        return Err(GeometryError::field(
                            format!("metric.components[{i}][{j}]"),
                            "metric must be symmetric",
                        ));
                    }
                }
            }
        }
        Ok(g)
    }

    fn connection(
        &self,
        c: &ConnectionSection,
        eta: Option<&Vec<Expr>>,
    ) -> Result<ConnectionSpec, GeometryError> {
        let n = self.dim();
        let components = |field: &str| -> Result<Vec<(usize, Expr)>, GeometryError> {
            c.components
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let field = format!("{field}[{i}]");
                    let idx = [e.upper, e.lower[0], e.lower[1]];
                    if idx.iter().any(|&k| k == 0 || k > n) {
                        return Err(GeometryError::field(
                            field,
                            format!("indices are 1-based and at most {n}"),
                        ));
                    }
                    let flat = (e.upper - 1) * n * n + (e.lower[0] - 1) * n + (e.lower[1] - 1);
                    Ok((flat, self.expr(&format!("{field}.value"), &e.value)?))
                })
                .collect()
        };
        match c.kind {
            ConnectionKind::LeviCivita => {
                if !c.terms.is_empty() || !c.components.is_empty() {
                    return Err(GeometryError::field(
                        "connection",
                        "levi_civita takes no terms or components",
                    ));
                }
                Ok(ConnectionSpec::LeviCivita)
            }
            ConnectionKind::Weyl => {
                let eta = match (&c.eta, eta) {
                    (Some(e), _) => self.vector("connection.eta", e, n)?,
                    (None, Some(e)) => e.clone(),
                    (None, None) => {
                        return Err(GeometryError::field(
                            "connection.eta",
                            "weyl connection needs eta",
                        ))
                    }
                };
                Ok(ConnectionSpec::Weyl { eta })
            }
            ConnectionKind::Deform => {
                let mut terms = Vec::with_capacity(c.terms.len());
                for (i, t) in c.terms.iter().enumerate() {
                    let field = format!("connection.terms[{i}]");
                    let (key, src) = match t.kind {
                        TermKind::AlphaF | TermKind::IdAlpha => ("alpha", &t.alpha),
                        TermKind::GXi => ("xi", &t.xi),
                    };
                    let src = src
                        .as_ref()
                        .ok_or_else(|| GeometryError::field(&field, format!("{key} required")))?;
                    let f = match (&t.f, t.kind) {
                        (Some(f), TermKind::AlphaF) => Some(self.matrix(&format!("{field}.f"), f)?),
                        (Some(_), _) => {
                            return Err(GeometryError::field(&field, "only alpha_f terms take f"))
                        }
                        (None, _) => None,
                    };
                    terms.push(TermSpec {
                        kind: t.kind,
                        coeff: t.coeff,
                        field: self.vector(&format!("{field}.{key}"), src, n)?,
                        f,
                    });
                }
                Ok(ConnectionSpec::Deform {
                    terms,
                    offsets: components("connection.components")?,
                })
            }
            ConnectionKind::Explicit => {
                let mut gamma = vec![Expr::num(0.0); n * n * n];
                for (k, e) in components("connection.components")? {
                    gamma[k] = e;
                }
                Ok(ConnectionSpec::Explicit { gamma })
            }
        }
    }
}

impl GeometrySpec {
    /// Validates a parsed file, resolving `extends` first.
    pub fn from_file(file: GeometryFile) -> Result<Self, GeometryError> {
        let file = merge_extends(file)?;
        let coords = file
            .manifold
            .coords
            .clone()
            .ok_or_else(|| GeometryError::field("coords", "coords required"))?;
        if coords.is_empty() {
            return Err(GeometryError::field(
                "coords",
                "at least one coordinate required",
            ));
        }
        for (i, c) in coords.iter().enumerate() {
            if coords[..i].contains(c) {
                return Err(GeometryError::field(
                    "coords",
                    format!("duplicate coordinate `{c}`"),
                ));
            }
        }
        let n = coords.len();
        if let Some(d) = file.manifold.dim {
            if d != n {
                return Err(GeometryError::field(
                    "dim",
                    format!("dim = {d} but {n} coords given"),
                ));
            }
        }
        let cx = Compiler { coords: &coords };

        let immersion = match &file.immersion {
            Some(im) => {
                let x = cx.vector("immersion.x", &im.x, n + 1)?;
                Some(
                    Immersion::new(n, x, im.orientation)
                        .map_err(|e| GeometryError::field("immersion", e.to_string()))?,
                )
            }
            None => None,
        };
        let metric = match (&file.metric, &immersion) {
            (Some(_), Some(_)) => {
                return Err(GeometryError::field(
                    "metric",
                    "an immersion induces the metric; remove [metric]",
                ))
            }
            (Some(m), None) => Some(cx.metric(m)?),
            (None, Some(_)) => None,
            (None, None) => {
                return Err(GeometryError::field(
                    "metric",
                    "metric or immersion required",
                ))
            }
        };
        let potential = file
            .potential
            .as_ref()
            .map(|p| cx.expr("potential.f", &p.f))
            .transpose()?;
        let sol = file.soliton.clone().unwrap_or_default();
        let xi = sol
            .xi
            .as_ref()
            .map(|v| cx.vector("soliton.xi", v, n))
            .transpose()?;
        let eta = sol
            .eta
            .as_ref()
            .map(|v| cx.vector("soliton.eta", v, n))
            .transpose()?;
        if potential.is_some() && xi.is_some() {
            return Err(GeometryError::field(
                "soliton.xi",
                "give either a potential or xi, not both",
            ));
        }
        let endomorphism = sol
            .endomorphism
            .as_ref()
            .map(|m| cx.matrix("soliton.endomorphism", m))
            .transpose()?;
        let connection = match &file.connection {
            Some(c) => cx.connection(c, eta.as_ref())?,
            None => ConnectionSpec::LeviCivita,
        };
        let vaisman = match &file.vaisman {
            Some(v) => Some((
                cx.matrix("vaisman.j", &v.j)?,
                cx.vector("vaisman.u", &v.u, n)?,
            )),
            None => None,
        };
        let s = file.sample.clone().unwrap_or_default();
        for (i, p) in s.points.iter().enumerate() {
            if p.len() != n {
                return Err(GeometryError::field(
                    format!("sample.points[{i}]"),
                    format!("expected {n} coordinates"),
                ));
            }
        }
        let bounds = s.bounds.unwrap_or_else(|| vec![[-1.0, 1.0]; n]);
        if bounds.len() != n || bounds.iter().any(|b| !(b[0] <= b[1])) {
            return Err(GeometryError::field(
                "sample.box",
                format!("expected {n} intervals [lo, hi] with lo <= hi"),
            ));
        }
        if let Some([lo, hi]) = s.norm_range {
            if !(0.0 <= lo && lo <= hi) {
                return Err(GeometryError::field(
                    "sample.norm_range",
                    "expected 0 <= lo <= hi",
                ));
            }
        }
        let verify = file.verify.clone().unwrap_or_default();
        if let Some(t) = verify.tolerance {
            if !(t > 0.0) {
                return Err(GeometryError::field("verify.tolerance", "must be positive"));
            }
        }
        for (i, c) in file.claims.iter().enumerate() {
            if let Some(p) = &c.point {
                if p.len() != n {
                    return Err(GeometryError::field(
                        format!("claims[{i}].point"),
                        format!("expected {n} coordinates"),
                    ));
                }
            }
        }
        Ok(GeometrySpec {
            name: file
                .manifold
                .name
                .clone()
                .unwrap_or_else(|| "unnamed".into()),
            coords,
            metric,
            potential,
            xi,
            eta,
            lambda: sol.lambda,
            mu: sol.mu,
            endomorphism,
            connection,
            vaisman,
            immersion,
            sample: SampleSpec {
                points: s.points,
                bounds,
                norm_range: s.norm_range,
                count: s.count.unwrap_or(DEFAULT_SAMPLE_COUNT),
            },
            checks: verify.checks,
            tolerance: verify.tolerance,
            claims: file.claims.clone(),
            source: file,
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Instantiates the engine objects over the scalar `T`.
    pub fn build<T: Real>(&self) -> crate::Result<Model<T>> {
        let n = self.dim();
        let metric = match (&self.metric, &self.immersion) {
            (Some(g), _) => MetricField::from_exprs(n, g.clone()),
            (None, Some(im)) => induced_metric(im),
            (None, None) => unreachable!("validated on load"),
        };
        let vector = |e: &Vec<Expr>, slot| TensorField::from_exprs(n, vec![slot], e.clone());
        let potential = self
            .potential
            .as_ref()
            .map(|e| TensorField::from_exprs(n, vec![], vec![e.clone()]));
        let eta = self.eta.as_ref().map(|e| vector(e, Slot::Down));
        let xi = match (&self.xi, &eta, &potential) {
            (Some(x), _, _) => Some(vector(x, Slot::Up)),
            (None, Some(e), None) => Some(metric.sharp(e)?),
            _ => None,
        };
        let endo =
            |e: &Vec<Expr>| TensorField::from_exprs(n, vec![Slot::Up, Slot::Down], e.clone());
        let endomorphism = self.endomorphism.as_ref().map(endo);
        let lc = levi_civita(&metric);
        let connection = match &self.connection {
            ConnectionSpec::LeviCivita => None,
            ConnectionSpec::Weyl { eta } => {
                Some(weyl_connection(&metric, &vector(eta, Slot::Down))?)
            }
            ConnectionSpec::Deform { terms, offsets } => {
                // terms with textually equal fields share one field, so that
                // paired α⊗I and I⊗α terms are recognized as symmetric
                let mut cache: Vec<(Vec<Expr>, Slot, TensorField<T>)> = Vec::new();
                let mut shared = |e: &Vec<Expr>, slot: Slot| {
                    if let Some((_, _, f)) = cache.iter().find(|(k, s, _)| k == e && *s == slot) {
                        return f.clone();
                    }
                    let f = vector(e, slot);
                    cache.push((e.clone(), slot, f.clone()));
                    f
                };
                let mut out = Vec::with_capacity(terms.len());
                for t in terms {
                    let c = T::lit(t.coeff);
                    out.push(match t.kind {
                        TermKind::AlphaF => DeformTerm::AlphaTensorF {
                            coeff: c,
                            alpha: shared(&t.field, Slot::Down),
                            f: t.f.as_ref().map(endo),
                        },
                        TermKind::IdAlpha => DeformTerm::IdTensorAlpha {
                            coeff: c,
                            alpha: shared(&t.field, Slot::Down),
                        },
                        TermKind::GXi => DeformTerm::GTensorXi {
                            coeff: c,
                            metric: metric.clone(),
                            xi: shared(&t.field, Slot::Up),
                        },
                    });
                }
                let mut conn = deform_connection(&lc, out)?;
                if !offsets.is_empty() {
                    let mut gamma = vec![Expr::num(0.0); n * n * n];
                    for (k, e) in offsets {
                        gamma[*k] = e.clone();
                    }
                    let sym = (0..n).all(|k| {
                        (0..n).all(|i| {
                            (0..n).all(|j| {
                                gamma[k * n * n + i * n + j] == gamma[k * n * n + j * n + i]
                            })
                        })
                    });
                    let delta =
                        TensorField::from_exprs(n, vec![Slot::Up, Slot::Down, Slot::Down], gamma);
                    conn = conn.offset(&delta, sym)?;
                }
                Some(conn)
            }
            ConnectionSpec::Explicit { gamma } => Some(ConnectionField::explicit(n, gamma.clone())),
        };
        let vaisman = self
            .vaisman
            .as_ref()
            .map(|(j, u)| (endo(j), vector(u, Slot::Down)));
        Ok(Model {
            metric,
            levi_civita: lc,
            potential,
            xi,
            eta,
            lambda: self.lambda.map(T::lit),
            mu: self.mu.map(T::lit),
            endomorphism,
            connection,
            vaisman,
            immersion: self.immersion.clone(),
        })
    }
}

/// Engine objects built from a [`GeometrySpec`].
#[derive(Clone, Debug)]
pub struct Model<T> {
    pub metric: MetricField<T>,
    pub levi_civita: ConnectionField<T>,
    pub potential: Option<TensorField<T>>,
    /// `ξ` from `soliton.xi`, else `η♯`; `None` for gradient data.
    pub xi: Option<TensorField<T>>,
    pub eta: Option<TensorField<T>>,
    pub lambda: Option<T>,
    pub mu: Option<T>,
    pub endomorphism: Option<TensorField<T>>,
    /// `None` means Levi-Civita.
    pub connection: Option<ConnectionField<T>>,
    pub vaisman: Option<(TensorField<T>, TensorField<T>)>,
    pub immersion: Option<Immersion>,
}

impl<T: Real> Model<T> {
    /// `ξ`, or `∇f` for gradient data.
    pub fn vector_field(&self) -> Option<crate::Result<TensorField<T>>> {
        match (&self.xi, &self.potential) {
            (Some(x), _) => Some(Ok(x.clone())),
            (None, Some(f)) => Some(self.metric.gradient(f)),
            (None, None) => None,
        }
    }

    pub fn active_connection(&self) -> &ConnectionField<T> {
        self.connection.as_ref().unwrap_or(&self.levi_civita)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CIGAR: &str = r#"
[manifold]
name = "cigar"
coords = ["x", "y"]

[metric]
conformal = "1/(1+x^2+y^2)"

[potential]
f = "-log(1+x^2+y^2)"

[soliton]
lambda = 0.0
"#;

    #[test]
    fn cigar_file_loads() {
        let s = parse_geometry(CIGAR).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.lambda, Some(0.0));
        let m = s.build::<f64>().unwrap();
        let g = m.metric.at(&[1.0, 0.0], 0).unwrap();
        assert_eq!(g.g(), &[0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn coords_required() {
        let e = parse_geometry("[metric]\nconformal = \"1\"\n").unwrap_err();
        assert_eq!(e, GeometryError::field("coords", "coords required"));
        assert!(e.to_string().contains("coords required"));
    }

    #[test]
    fn toml_errors_carry_position() {
        let e = parse_geometry("[manifold]\ncoords = [\"x\"\n").unwrap_err();
        assert!(
            matches!(
                e,
                GeometryError::Parse { line: 2, .. } | GeometryError::Parse { line: 3, .. }
            ),
            "{e:?}"
        );
    }

    #[test]
    fn expression_errors_name_the_field() {
        let text = CIGAR.replace("-log(1+x^2+y^2)", "-log(1+z^2)");
        match parse_geometry(&text).unwrap_err() {
            GeometryError::Validation { field, .. } => assert_eq!(field, "potential.f"),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn upper_triangle_metric() {
        let text = "[manifold]\ncoords = [\"x\", \"y\"]\n[metric]\ncomponents = [[\"2\", \"x\"], [\"3\"]]\n";
        let s = parse_geometry(text).unwrap();
        let g = s.build::<f64>().unwrap().metric.at(&[0.5, 0.0], 0).unwrap();
        assert_eq!(g.g(), &[2.0, 0.5, 0.5, 3.0]);
    }

    #[test]
    fn asymmetric_full_metric_rejected() {
        let text = "[manifold]\ncoords = [\"x\", \"y\"]\n[metric]\ncomponents = [[\"1\", \"x\"], [\"0\", \"1\"]]\n";
        assert!(matches!(
            parse_geometry(text),
            Err(GeometryError::Validation { .. })
        ));
    }

    #[test]
    fn immersion_excludes_metric() {
        let text = "[manifold]\ncoords = [\"u\", \"v\"]\n[metric]\nconformal = \"1\"\n[immersion]\nx = [\"u\", \"v\", \"0\"]\n";
        match parse_geometry(text).unwrap_err() {
            GeometryError::Validation { field, .. } => assert_eq!(field, "metric"),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn extends_overrides_sections() {
        let s =
            parse_geometry("[manifold]\nextends = \"cylinder(3)\"\n[soliton]\nlambda = -0.25\n")
                .unwrap();
        assert_eq!(s.dim(), 3);
        assert_eq!(s.lambda, Some(-0.25));
        assert!(s.potential.is_some());
    }

    #[test]
    fn shared_alpha_gives_symmetric_deformation() {
        let text = r#"
[manifold]
coords = ["x", "y"]
[metric]
conformal = "1"
[connection]
kind = "deform"
terms = [
  { kind = "alpha_f", coeff = -0.5, alpha = ["1", "0"] },
  { kind = "id_alpha", coeff = -0.5, alpha = ["1", "0"] },
]
"#;
        let m = parse_geometry(text).unwrap().build::<f64>().unwrap();
        assert!(m.connection.unwrap().is_symmetric());
    }
}
