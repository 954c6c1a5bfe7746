//! Built-in geometries with the values the engine must reproduce on them.
//!
//! Entries are addressed as calls, `cylinder(3)` or `gaussian(n=2, lambda=1)`,
//! and expand to a [`GeometryFile`] plus a list of [`Expected`] values.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    ClaimEntry, ComponentEntry, ConnectionKind, ConnectionSection, GeometryFile, ImmersionSection,
    ManifoldSection, MetricSection, PotentialSection, SampleSection, SolitonSection,
    VaismanSection, VerifySection,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("unknown catalog entry `{name}`")]
    UnknownEntry { name: String },
    #[error("parameter `{param}` of `{entry}` is {value}, outside {range}")]
    ParamOutOfRange {
        entry: String,
        param: String,
        value: f64,
        range: String,
    },
    #[error("`{entry}` has no parameter `{param}`")]
    UnknownParam { entry: String, param: String },
    #[error("cannot read catalog call `{call}`: {message}")]
    BadCall { call: String, message: String },
}

/// Where an expected value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    /// Printed in the source text of the example.
    Published,
    /// Worked out independently of the engine.
    Computed,
}

/// A value the standard report must reproduce.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expected {
    pub quantity: String,
    pub point: Vec<f64>,
    pub value: f64,
    pub origin: Origin,
    pub tolerance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Param {
    pub name: &'static str,
    pub default: f64,
    pub min: f64,
    pub max: f64,
    /// Excludes `min` itself.
    pub open_min: bool,
    pub integer: bool,
}

impl Param {
    const fn int(name: &'static str, default: f64, min: f64, max: f64) -> Self {
        Param {
            name,
            default,
            min,
            max,
            open_min: false,
            integer: true,
        }
    }

    const fn real(name: &'static str, default: f64, min: f64, max: f64) -> Self {
        Param {
            name,
            default,
            min,
            max,
            open_min: false,
            integer: false,
        }
    }

    const fn positive(name: &'static str, default: f64, max: f64) -> Self {
        Param {
            name,
            default,
            min: 0.0,
            max,
            open_min: true,
            integer: false,
        }
    }

    fn admits(&self, v: f64) -> bool {
        let lower = if self.open_min {
            v > self.min
        } else {
            v >= self.min
        };
        lower && v <= self.max && (!self.integer || v.fract() == 0.0)
    }

    fn range(&self) -> String {
        let kind = if self.integer { "integers in " } else { "" };
        let open = if self.open_min { '(' } else { '[' };
        format!("{kind}{open}{}, {}]", self.min, self.max)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EntryInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static [Param],
}

/// An expanded entry.
#[derive(Clone, Debug, PartialEq)]
pub struct CatalogInstance {
    pub name: String,
    /// Canonical call with every parameter spelled out.
    pub call: String,
    pub params: BTreeMap<String, f64>,
    pub geometry: GeometryFile,
    pub expected: Vec<Expected>,
}

impl CatalogInstance {
    /// The geometry as a loadable file, headed by the expected values as comments.
    pub fn to_toml(&self) -> String {
        let mut out = format!("# {}\n", self.call);
        for e in &self.expected {
            let at: Vec<String> = e.point.iter().map(|x| x.to_string()).collect();
            out.push_str(&format!(
                "# expect {} = {} at ({}) within {:e} [{}]\n",
                e.quantity,
                e.value,
                at.join(", "),
                e.tolerance,
                match e.origin {
                    Origin::Published => "published",
                    Origin::Computed => "computed",
                }
            ));
        }
        out.push('\n');
        out.push_str(&toml::to_string(&self.geometry).expect("geometry files serialize"));
        out
    }
}

const HALF_TURN: f64 = PI - 0.2;

static ENTRIES: &[EntryInfo] = &[
    EntryInfo {
        name: "gaussian",
        summary: "flat space with f = -(lambda/2)|x|^2",
        params: &[Param::int("n", 2.0, 1.0, 8.0), Param::real("lambda", 1.0, -10.0, 10.0)],
    },
    EntryInfo {
        name: "einstein_sphere",
        summary: "unit round 2-sphere, f = 0, lambda = -1; its only Hessian-free potentials are constants",
        params: &[Param::int("n", 2.0, 2.0, 2.0), Param::real("r", 1.0, 1.0, 1.0)],
    },
    EntryInfo {
        name: "cone",
        summary: "ds^2 + (C-s)^2 round S^(n-1), f = Cs - s^2/2, lambda = 1, Ricci-flat",
        params: &[Param::int("n", 3.0, 3.0, 6.0), Param::positive("c", 2.0, 100.0)],
    },
    EntryInfo { name: "cigar", summary: "Hamilton's cigar, steady", params: &[] },
    EntryInfo {
        name: "cylinder",
        summary: "2(n-2) round S^(n-1) x R, f = t^2/4, lambda = -1/2",
        params: &[Param::int("n", 3.0, 3.0, 6.0)],
    },
    EntryInfo { name: "hopf", summary: "R^4 minus the origin with g = |x|^-2 delta, Vaisman with c = 1", params: &[] },
    EntryInfo {
        name: "statistical_flat",
        summary: "flat plane with the connection Levi-Civita + (Gamma^1_11 = kappa)",
        params: &[Param::real("kappa", 1.0, -10.0, 10.0)],
    },
    EntryInfo { name: "torse_special", summary: "flat half-plane x > 0 with xi = -(1/x) d/dx", params: &[] },
    EntryInfo { name: "sphere", summary: "round sphere of radius r in R^3", params: &[Param::positive("r", 1.0, 100.0)] },
    EntryInfo {
        name: "cylinder_surface",
        summary: "circular cylinder of radius r in R^3",
        params: &[Param::positive("r", 1.0, 100.0)],
    },
    EntryInfo { name: "plane", summary: "the plane z = 0 in R^3", params: &[] },
];

pub fn entries() -> &'static [EntryInfo] {
    ENTRIES
}

/// One call argument, optionally named.
pub type CallArg = (Option<String>, f64);

/// Splits `name(a, b)` or `name(k=a)` into its parts; `name` alone has no arguments.
pub fn parse_call(call: &str) -> Result<(String, Vec<CallArg>), CatalogError> {
    let bad = |message: &str| CatalogError::BadCall {
        call: call.into(),
        message: message.into(),
    };
    let call_t = call.trim();
    let (name, args) = match call_t.find('(') {
        None => (call_t, ""),
        Some(i) => {
            let rest = call_t[i + 1..]
                .strip_suffix(')')
                .ok_or_else(|| bad("missing closing parenthesis"))?;
            (call_t[..i].trim(), rest)
        }
    };
    if name.is_empty() {
        return Err(bad("missing entry name"));
    }
    let mut out = Vec::new();
    for arg in args.split(',').map(str::trim).filter(|a| !a.is_empty()) {
        let (key, value) = match arg.split_once('=') {
            Some((k, v)) => (Some(k.trim().to_string()), v.trim()),
            None => (None, arg),
        };
        let v: f64 = value
            .parse()
            .map_err(|_| bad(&format!("`{value}` is not a number")))?;
        out.push((key, v));
    }
    Ok((name.to_string(), out))
}

/// Expands a call such as `"cylinder(3)"`.
pub fn get_call(call: &str) -> Result<CatalogInstance, CatalogError> {
    let (name, args) = parse_call(call)?;
    let info = info(&name)?;
    let mut params = BTreeMap::new();
    for (i, (key, v)) in args.into_iter().enumerate() {
        let key = match key {
            Some(k) => k,
            None => match info.params.get(i) {
                Some(p) => p.name.to_string(),
                None => {
                    return Err(CatalogError::BadCall {
                        call: call.into(),
                        message: format!("`{name}` takes {} parameters", info.params.len()),
                    })
                }
            },
        };
        params.insert(key, v);
    }
    get(&name, &params)
}

fn info(name: &str) -> Result<&'static EntryInfo, CatalogError> {
    ENTRIES
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| CatalogError::UnknownEntry { name: name.into() })
}

/// Expands `name` with `params`; missing parameters take their defaults.
pub fn get(name: &str, params: &BTreeMap<String, f64>) -> Result<CatalogInstance, CatalogError> {
    let info = info(name)?;
    if let Some(k) = params
        .keys()
        .find(|k| !info.params.iter().any(|p| p.name == *k))
    {
        return Err(CatalogError::UnknownParam {
            entry: name.into(),
            param: k.clone(),
        });
    }
    let mut resolved = BTreeMap::new();
    for p in info.params {
        let v = params.get(p.name).copied().unwrap_or(p.default);
        if !p.admits(v) {
            return Err(CatalogError::ParamOutOfRange {
                entry: name.into(),
                param: p.name.into(),
                value: v,
                range: p.range(),
            });
        }
        resolved.insert(p.name.to_string(), v);
    }
    let arg = |k: &str| resolved[k];
    let (mut geometry, expected) = match name {
        "gaussian" => gaussian(arg("n") as usize, arg("lambda")),
        "einstein_sphere" => einstein_sphere(),
        "cone" => cone(arg("n") as usize, arg("c")),
        "cigar" => cigar(),
        "cylinder" => cylinder(arg("n") as usize),
        "hopf" => hopf(),
        "statistical_flat" => statistical_flat(arg("kappa")),
        "torse_special" => torse_special(),
        "sphere" => sphere(arg("r")),
        "cylinder_surface" => cylinder_surface(arg("r")),
        "plane" => plane(),
        _ => unreachable!("every listed entry is built"),
    };
    let args: Vec<String> = info.params.iter().map(|p| num(resolved[p.name])).collect();
    let call = format!("{name}({})", args.join(", "));
    geometry.manifold.name = Some(call.clone());
    Ok(CatalogInstance {
        name: name.into(),
        call,
        params: resolved,
        geometry,
        expected,
    })
}

/// Shortest decimal text of `v` that reads back exactly.
fn num(v: f64) -> String {
    format!("{v:?}").trim_end_matches(".0").to_string()
}

/// `v` as an expression operand.
fn operand(v: f64) -> String {
    if v < 0.0 {
        format!("({})", num(v))
    } else {
        num(v)
    }
}

fn strings<const N: usize>(items: [&str; N]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn numbered(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// Diagonal of the round unit metric on `S^m` in the angles `th1..thm`.
fn round_sphere(m: usize) -> Vec<String> {
    (0..m)
        .map(|k| {
            if k == 0 {
                "1".to_string()
            } else {
                (1..=k)
                    .map(|i| format!("sin(th{i})^2"))
                    .collect::<Vec<_>>()
                    .join("*")
            }
        })
        .collect()
}

fn manifold(coords: Vec<String>) -> ManifoldSection {
    ManifoldSection {
        name: None,
        dim: Some(coords.len()),
        coords: Some(coords),
        extends: None,
    }
}

fn sample(bounds: Vec<[f64; 2]>) -> Option<SampleSection> {
    Some(SampleSection {
        bounds: Some(bounds),
        ..Default::default()
    })
}

fn soliton(lambda: f64) -> Option<SolitonSection> {
    Some(SolitonSection {
        lambda: Some(lambda),
        ..Default::default()
    })
}

fn gradient_checks() -> Option<VerifySection> {
    checks(&["gradient", "lambda", "inequalities", "curvature"])
}

fn checks(names: &[&str]) -> Option<VerifySection> {
    Some(VerifySection {
        checks: Some(names.iter().map(|s| s.to_string()).collect()),
        tolerance: None,
    })
}

fn expect(quantity: &str, point: &[f64], value: f64, origin: Origin, tolerance: f64) -> Expected {
    Expected {
        quantity: quantity.into(),
        point: point.to_vec(),
        value,
        origin,
        tolerance,
    }
}

use Origin::{Computed, Published};

fn gaussian(n: usize, lambda: f64) -> (GeometryFile, Vec<Expected>) {
    let x = numbered("x", n);
    let sq = x
        .iter()
        .map(|c| format!("{c}^2"))
        .collect::<Vec<_>>()
        .join("+");
    let g = GeometryFile {
        manifold: manifold(x),
        metric: Some(MetricSection {
            conformal: Some("1".into()),
            ..Default::default()
        }),
        potential: Some(PotentialSection {
            f: format!("-({}/2)*({sq})", operand(lambda)),
        }),
        soliton: soliton(lambda),
        sample: sample(vec![[-1.0, 1.0]; n]),
        verify: gradient_checks(),
        ..Default::default()
    };
    let p: Vec<f64> = (0..n).map(|i| 0.3 - 0.2 * i as f64).collect();
    let nf = n as f64;
    let e = vec![
        expect("disc12", &p, 0.0, Published, 1e-9),
        expect("laplacian", &p, -nf * lambda, Computed, 1e-9),
        expect("norm_h2", &p, nf * lambda * lambda, Computed, 1e-9),
        expect("margin19", &p, nf * lambda * lambda, Published, 1e-9),
        expect("residual_norm2", &p, 0.0, Computed, 1e-18),
    ];
    (g, e)
}

fn einstein_sphere() -> (GeometryFile, Vec<Expected>) {
    let g = GeometryFile {
        manifold: manifold(strings(["th", "ph"])),
        metric: Some(MetricSection {
            diagonal: Some(strings(["1", "sin(th)^2"])),
            ..Default::default()
        }),
        potential: Some(PotentialSection { f: "0".into() }),
        soliton: soliton(-1.0),
        sample: sample(vec![[0.2, HALF_TURN], [0.0, 2.0 * PI]]),
        verify: gradient_checks(),
        ..Default::default()
    };
    let p = [1.0, 0.5];
    let e = vec![
        expect("margin19", &p, 0.0, Published, 1e-9),
        expect("scalar_r", &p, 2.0, Computed, 1e-9),
        expect("gauss", &p, 1.0, Computed, 1e-9),
        expect("norm_ric2", &p, 2.0, Computed, 1e-9),
        expect("residual_norm2", &p, 0.0, Computed, 1e-18),
    ];
    (g, e)
}

fn cone(n: usize, c: f64) -> (GeometryFile, Vec<Expected>) {
    let mut coords = vec!["s".to_string()];
    coords.extend(numbered("th", n - 1));
    let warp = format!("({}-s)^2", num(c));
    let mut diag = vec!["1".to_string()];
    diag.extend(
        round_sphere(n - 1)
            .into_iter()
            .map(|h| format!("{warp}*{h}")),
    );
    let mut bounds = vec![[c - 2.0, c - 0.1]];
    bounds.extend(vec![[0.2, HALF_TURN]; n - 1]);
    let g = GeometryFile {
        manifold: manifold(coords),
        metric: Some(MetricSection {
            diagonal: Some(diag),
            ..Default::default()
        }),
        potential: Some(PotentialSection {
            f: format!("{}*s-s^2/2", num(c)),
        }),
        soliton: soliton(1.0),
        sample: sample(bounds),
        verify: gradient_checks(),
        ..Default::default()
    };
    let mut p = vec![c - 1.0];
    p.extend((0..n - 1).map(|i| 1.0 + 0.1 * i as f64));
    let e = vec![
        expect("hessian_eig_min", &p, -1.0, Published, 1e-9),
        expect("hessian_eig_max", &p, -1.0, Published, 1e-9),
        expect("norm_ric2", &p, 0.0, Published, 1e-8),
        expect("laplacian", &p, -(n as f64), Computed, 1e-9),
        expect("residual_norm2", &p, 0.0, Computed, 1e-16),
    ];
    (g, e)
}

fn cigar() -> (GeometryFile, Vec<Expected>) {
    let g = GeometryFile {
        manifold: manifold(strings(["x", "y"])),
        metric: Some(MetricSection {
            conformal: Some("1/(1+x^2+y^2)".into()),
            ..Default::default()
        }),
        potential: Some(PotentialSection {
            f: "-log(1+x^2+y^2)".into(),
        }),
        soliton: soliton(0.0),
        sample: Some(SampleSection {
            bounds: Some(vec![[-2.0, 2.0]; 2]),
            norm_range: Some([0.0, 1.99]),
            ..Default::default()
        }),
        verify: gradient_checks(),
        ..Default::default()
    };
    let o = [0.0, 0.0];
    let e = vec![
        expect("laplacian", &o, -4.0, Published, 1e-9),
        expect("gauss", &o, 2.0, Published, 1e-9),
        expect("lambda", &o, 0.0, Published, 0.0),
        expect("norm_h2", &o, 8.0, Published, 1e-9),
        expect("norm_ric2", &o, 8.0, Published, 1e-9),
        expect("scalar_r", &o, 4.0, Published, 1e-9),
        expect("disc12", &o, 16.0, Computed, 1e-9),
        expect("margin13", &o, 8.0, Computed, 1e-9),
        expect("margin19", &o, 8.0, Computed, 1e-9),
        expect("residual_norm2", &o, 0.0, Published, 1e-18),
    ];
    (g, e)
}

fn cylinder(n: usize) -> (GeometryFile, Vec<Expected>) {
    let m = n - 1;
    let mut coords = numbered("th", m);
    coords.push("t".into());
    let scale = num(2.0 * (n as f64 - 2.0));
    let mut diag: Vec<String> = round_sphere(m)
        .into_iter()
        .map(|h| format!("{scale}*{h}"))
        .collect();
    diag.push("1".into());
    let mut bounds = vec![[0.2, HALF_TURN]; m];
    bounds.push([-2.0, 2.0]);
    let mut p: Vec<f64> = (0..m).map(|i| 1.0 + 0.1 * i as f64).collect();
    p.push(0.5);
    let nf = n as f64;
    let g = GeometryFile {
        manifold: manifold(coords),
        metric: Some(MetricSection {
            diagonal: Some(diag),
            ..Default::default()
        }),
        potential: Some(PotentialSection { f: "t^2/4".into() }),
        soliton: soliton(-0.5),
        sample: sample(bounds),
        verify: gradient_checks(),
        claims: vec![
            ClaimEntry {
                quantity: "norm_ric2".into(),
                printed: 0.25,
                text: "|Ric|^2 = 1/4".into(),
                point: Some(p.clone()),
            },
            ClaimEntry {
                quantity: "scalar_r".into(),
                printed: (nf - 2.0) / 2.0,
                text: "R = (n-2)/2".into(),
                point: Some(p.clone()),
            },
        ],
        ..Default::default()
    };
    let e = vec![
        expect("lambda", &p, -0.5, Published, 0.0),
        expect("laplacian", &p, 0.5, Published, 1e-9),
        expect("norm_h2", &p, 0.25, Published, 1e-9),
        expect("norm_ric2", &p, (nf - 1.0) / 4.0, Computed, 1e-9),
        expect("scalar_r", &p, (nf - 1.0) / 2.0, Computed, 1e-9),
        expect("residual_norm2", &p, 0.0, Published, 1e-18),
    ];
    (g, e)
}

fn hopf() -> (GeometryFile, Vec<Expected>) {
    let r2 = "(x1^2+x2^2+x3^2+x4^2)";
    let g = GeometryFile {
        manifold: manifold(numbered("x", 4)),
        metric: Some(MetricSection {
            conformal: Some(format!("1/{r2}")),
            ..Default::default()
        }),
        vaisman: Some(VaismanSection {
            j: vec![
                strings(["0", "-1", "0", "0"]),
                strings(["1", "0", "0", "0"]),
                strings(["0", "0", "0", "-1"]),
                strings(["0", "0", "1", "0"]),
            ],
            u: (1..=4).map(|i| format!("-x{i}/{r2}")).collect(),
        }),
        sample: Some(SampleSection {
            bounds: Some(vec![[-2.0, 2.0]; 4]),
            norm_range: Some([0.5, 2.0]),
            ..Default::default()
        }),
        verify: checks(&["vaisman"]),
        ..Default::default()
    };
    let p = [0.5, 0.3, -0.4, 0.6];
    let e = vec![
        expect("vaisman_soliton_norm2", &p, 0.0, Published, 1e-9),
        expect("vaisman_recurrence_error", &p, 0.0, Published, 1e-9),
        expect("vaisman_torsion_error", &p, 0.0, Published, 1e-9),
    ];
    (g, e)
}

fn statistical_flat(kappa: f64) -> (GeometryFile, Vec<Expected>) {
    let g = GeometryFile {
        manifold: manifold(strings(["x", "y"])),
        metric: Some(MetricSection {
            conformal: Some("1".into()),
            ..Default::default()
        }),
        soliton: Some(SolitonSection {
            lambda: Some(0.0),
            xi: Some(strings(["0", "0"])),
            ..Default::default()
        }),
        connection: Some(ConnectionSection {
            kind: ConnectionKind::Deform,
            components: vec![ComponentEntry {
                upper: 1,
                lower: [1, 1],
                value: operand(kappa),
            }],
            ..Default::default()
        }),
        sample: sample(vec![[-1.0, 1.0]; 2]),
        verify: checks(&["statistical"]),
        ..Default::default()
    };
    let p = [0.2, -0.3];
    let e = vec![
        expect("duality_residual", &p, 0.0, Computed, 1e-10),
        expect("mean_residual", &p, 0.0, Computed, 1e-12),
    ];
    (g, e)
}

fn torse_special() -> (GeometryFile, Vec<Expected>) {
    let g = GeometryFile {
        manifold: manifold(strings(["x", "y"])),
        metric: Some(MetricSection {
            conformal: Some("1".into()),
            ..Default::default()
        }),
        soliton: Some(SolitonSection {
            xi: Some(strings(["-1/x", "0"])),
            ..Default::default()
        }),
        sample: sample(vec![[0.5, 2.0], [-1.0, 1.0]]),
        verify: checks(&["torse"]),
        ..Default::default()
    };
    let p = [1.0, 0.0];
    let e = vec![
        expect("torse_f", &p, 0.0, Computed, 1e-9),
        expect("torse_gamma_defect", &p, 0.0, Computed, 1e-9),
    ];
    (g, e)
}

fn immersion(coords: [&str; 2], x: [String; 3], bounds: Vec<[f64; 2]>) -> GeometryFile {
    GeometryFile {
        manifold: manifold(strings(coords)),
        immersion: Some(ImmersionSection {
            x: x.to_vec(),
            orientation: 1,
        }),
        sample: sample(bounds),
        verify: checks(&["shape", "curvature"]),
        ..Default::default()
    }
}

fn shape_expectations(p: &[f64], lo: f64, hi: f64) -> Vec<Expected> {
    vec![
        expect("principal_min", p, lo, Computed, 1e-9),
        expect("principal_max", p, hi, Computed, 1e-9),
        expect("sigma", p, lo, Computed, 1e-9),
        expect("rho", p, hi, Computed, 1e-9),
    ]
}

fn sphere(r: f64) -> (GeometryFile, Vec<Expected>) {
    let r_ = num(r);
    let g = immersion(
        ["th", "ph"],
        [
            format!("{r_}*sin(th)*cos(ph)"),
            format!("{r_}*sin(th)*sin(ph)"),
            format!("{r_}*cos(th)"),
        ],
        vec![[0.2, HALF_TURN], [0.0, 2.0 * PI]],
    );
    (g, shape_expectations(&[1.0, 0.5], -1.0 / r, -1.0 / r))
}

fn cylinder_surface(r: f64) -> (GeometryFile, Vec<Expected>) {
    let r_ = num(r);
    let g = immersion(
        ["u", "v"],
        [format!("{r_}*cos(u)"), format!("{r_}*sin(u)"), "v".into()],
        vec![[0.0, 2.0 * PI], [-1.0, 1.0]],
    );
    (g, shape_expectations(&[0.3, -0.5], -1.0 / r, 0.0))
}

fn plane() -> (GeometryFile, Vec<Expected>) {
    let g = immersion(
        ["x", "y"],
        ["x".into(), "y".into(), "0".into()],
        vec![[-1.0, 1.0]; 2],
    );
    (g, shape_expectations(&[0.3, -0.5], 0.0, 0.0))
}
