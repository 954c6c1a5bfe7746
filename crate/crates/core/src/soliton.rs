//! Soliton verifiers.
//!
//! Sign convention: a gradient soliton satisfies `H_f + Ric + λg = 0`, so
//! `λ < 0` is shrinking, `λ = 0` steady and `λ > 0` expanding.

use serde::{Deserialize, Serialize};

use crate::connection::{
    cov_deriv_at, deform_connection, dual_connection, duality_residual, fit, levi_civita,
    recurrence_factor, torsion_at, weyl_connection, ConnectionField, DeformTerm,
};
use crate::curvature::{
    div_riemann_at, ext_cov_deriv_at, ext_cov_deriv_field, ricci_at, ricci_endomorphism_field,
    riemann_apply,
};
use crate::error::{Error, Result};
use crate::fields::TensorField;
use crate::pointwise::{
    generalized_eigen, norm2, FrameSpectrum, MetricAtPoint, MetricField, Slot, TensorAtPoint,
};
use crate::scalar::Real;

/// Below this g-norm a vector field is treated as vanishing.
pub const ZERO_VECTOR_TOL: f64 = 1e-8;
/// Relative residual accepted by the torse-forming fit.
pub const TORSE_TOL: f64 = 1e-8;
/// Relative width under which a discriminant counts as zero.
pub const DOUBLE_ROOT_TOL: f64 = 1e-9;
/// Spread over the sample under which a pointwise root counts as constant.
pub const CONSTANCY_TOL: f64 = 1e-8;
/// Tolerance for the Vaisman premises and conclusions.
pub const VAISMAN_TOL: f64 = 1e-9;
/// Tolerance for the equality flags and Ricci symmetry.
pub const FLAG_TOL: f64 = 1e-9;

/// The data of a (generalized) soliton on a chart.
#[derive(Clone, Debug)]
pub struct SolitonData<T> {
    pub metric: MetricField<T>,
    /// Rank-0 potential `f`; when present `ξ = ∇f`.
    pub potential: Option<TensorField<T>>,
    pub xi: Option<TensorField<T>>,
    pub lambda: T,
    pub mu: Option<T>,
    /// The endomorphism `F`; defaults to the Ricci endomorphism of the active connection.
    pub endomorphism: Option<TensorField<T>>,
    /// Defaults to the Levi-Civita connection of the metric.
    pub connection: Option<ConnectionField<T>>,
}

impl<T: Real> SolitonData<T> {
    pub fn gradient(metric: MetricField<T>, potential: TensorField<T>, lambda: T) -> Self {
        SolitonData {
            metric,
            potential: Some(potential),
            xi: None,
            lambda,
            mu: None,
            endomorphism: None,
            connection: None,
        }
    }

    pub fn vector(metric: MetricField<T>, xi: TensorField<T>, lambda: T) -> Self {
        SolitonData {
            metric,
            potential: None,
            xi: Some(xi),
            lambda,
            mu: None,
            endomorphism: None,
            connection: None,
        }
    }

    pub fn with_mu(mut self, mu: T) -> Self {
        self.mu = Some(mu);
        self
    }

    pub fn with_endomorphism(mut self, f: TensorField<T>) -> Self {
        self.endomorphism = Some(f);
        self
    }

    pub fn with_connection(mut self, c: ConnectionField<T>) -> Self {
        self.connection = Some(c);
        self
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn potential(&self) -> Result<&TensorField<T>> {
        self.potential
            .as_ref()
            .ok_or_else(|| Error::Invalid("soliton data has no potential".into()))
    }

    /// `ξ`, either given or as `∇f`.
    pub fn xi_field(&self) -> Result<TensorField<T>> {
        match (&self.xi, &self.potential) {
            (Some(_), Some(_)) => Err(Error::Invalid(
                "give either a potential or a vector field, not both".into(),
            )),
            (Some(xi), None) => {
                self.metric.field().check_chart(xi)?;
                xi.expect_variance(&[Slot::Up], "xi")?;
                Ok(xi.clone())
            }
            (None, Some(f)) => {
                f.expect_variance(&[], "potential")?;
                self.metric.gradient(f)
            }
            (None, None) => Err(Error::Invalid(
                "soliton data needs a potential or a vector field".into(),
            )),
        }
    }

    pub fn active_connection(&self) -> ConnectionField<T> {
        self.connection
            .clone()
            .unwrap_or_else(|| levi_civita(&self.metric))
    }
}

/// Hessian `H_f = ∇df` as a `(0,2)` tensor at `p`.
pub fn hessian_at<T: Real>(
    g: &MetricField<T>,
    f: &TensorField<T>,
    p: &[T],
) -> Result<TensorAtPoint<T>> {
    cov_deriv_at(&levi_civita(g), &f.differential(), p)
}

/// `H_f + Ric + λg` at `p` (Levi-Civita connection) and its squared norm.
pub fn gradient_residual<T: Real>(d: &SolitonData<T>, p: &[T]) -> Result<(TensorAtPoint<T>, T)> {
    let lc = levi_civita(&d.metric);
    let h = cov_deriv_at(&lc, &d.potential()?.differential(), p)?;
    let curv = ricci_at(&lc, &d.metric, p)?;
    let m = d.metric.at(p, 0)?;
    let r = h.add(&curv.ricci).add_scaled(d.lambda, &m.metric_tensor());
    let n2 = norm2(&r, &m)?;
    Ok((r, n2))
}

/// Real roots of a quadratic `n x² + 2b x + c` read off its reduced discriminant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "lowercase")]
pub enum Roots<T> {
    None,
    Double(T),
    Distinct(T, T),
}

impl<T: Real> Roots<T> {
    /// Roots of `a x² + 2b x + c` with reduced discriminant `disc = b² − ac`.
    fn solve(a: T, b: T, disc: T) -> Self {
        let width = T::lit(DOUBLE_ROOT_TOL) * T::one().max(b * b);
        if disc.abs() <= width {
            Roots::Double(-b / a)
        } else if disc < T::zero() {
            Roots::None
        } else {
            let s = disc.sqrt();
            Roots::Distinct((-b - s) / a, (-b + s) / a)
        }
    }

    pub fn values(&self) -> Vec<T> {
        match *self {
            Roots::None => vec![],
            Roots::Double(r) => vec![r],
            Roots::Distinct(a, b) => vec![a, b],
        }
    }

    /// Distance from `x` to the nearest root, if any.
    pub fn distance(&self, x: T) -> Option<T> {
        self.values()
            .into_iter()
            .map(|r| (r - x).abs())
            .reduce(T::min)
    }
}

/// The two λ-quadratics and their companions at a point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaAnalysis<T> {
    /// `(n, 2Δf, ‖H_f‖² − ‖Ric‖²)`.
    pub coeffs11: [T; 3],
    pub roots11: Roots<T>,
    /// `(Δf)² − n(‖H_f‖² − ‖Ric‖²)`.
    pub disc12: T,
    /// `(n, 2R, ‖Ric‖² − ‖H_f‖²)`.
    pub coeffs17: [T; 3],
    pub roots17: Roots<T>,
    /// `R² − n(‖Ric‖² − ‖H_f‖²)`.
    pub disc18: T,
    /// `−2Δf/n − λ`.
    pub companion11: T,
    /// `−2R/n − λ`.
    pub companion17: T,
    /// `Δf + R + nλ`.
    pub trace16_residual: T,
}

impl<T: Real> LambdaAnalysis<T> {
    fn new(n: usize, laplacian: T, h2: T, ric2: T, scalar: T, lambda: T) -> Self {
        let nt = T::lit(n as f64);
        let two = T::lit(2.0);
        let disc12 = laplacian * laplacian - nt * (h2 - ric2);
        let disc18 = scalar * scalar - nt * (ric2 - h2);
        LambdaAnalysis {
            coeffs11: [nt, two * laplacian, h2 - ric2],
            roots11: Roots::solve(nt, laplacian, disc12),
            disc12,
            coeffs17: [nt, two * scalar, ric2 - h2],
            roots17: Roots::solve(nt, scalar, disc18),
            disc18,
            companion11: -two * laplacian / nt - lambda,
            companion17: -two * scalar / nt - lambda,
            trace16_residual: laplacian + scalar + nt * lambda,
        }
    }

    /// Value of the first quadratic at `x`.
    pub fn eval11(&self, x: T) -> T {
        let [a, b, c] = self.coeffs11;
        a * x * x + b * x + c
    }

    /// Value of the companion quadratic at `x`.
    pub fn eval17(&self, x: T) -> T {
        let [a, b, c] = self.coeffs17;
        a * x * x + b * x + c
    }
}

/// Roots shared by every analysis within [`CONSTANCY_TOL`]; only these are
/// candidates for a soliton constant over the sample.
pub fn constant_roots<T: Real>(analyses: &[LambdaAnalysis<T>]) -> Vec<T> {
    let Some(first) = analyses.first() else {
        return vec![];
    };
    first
        .roots11
        .values()
        .into_iter()
        .filter(|&r| {
            analyses.iter().all(|a| {
                a.roots11
                    .distance(r)
                    .is_some_and(|d| d <= T::lit(CONSTANCY_TOL))
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Shrinking,
    Steady,
    Expanding,
}

impl Classification {
    pub fn of<T: Real>(lambda: T) -> Self {
        if lambda < T::zero() {
            Classification::Shrinking
        } else if lambda > T::zero() {
            Classification::Expanding
        } else {
            Classification::Steady
        }
    }
}

/// The three members of the double inequality `left ≤ mid ≤ right`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleInequality<T> {
    /// `‖H_f‖² − (Δf)²/n`.
    pub left: T,
    /// `‖Ric‖²`.
    pub mid: T,
    /// `‖H_f‖² + R²/n`.
    pub right: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicFlags {
    pub hessian_equals_ricci: bool,
    pub hessian_equals_minus_ricci: bool,
    pub laplacian_zero: bool,
    pub scalar_zero: bool,
}

/// Everything the gradient-soliton analysis produces at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonReport<T> {
    pub residual6_norm2: T,
    pub spectrum: FrameSpectrum<T>,
    pub laplacian: T,
    pub norm_h2: T,
    pub norm_ric2: T,
    pub scalar_r: T,
    /// Gauss curvature, in dimension two.
    pub gauss: Option<T>,
    /// `‖Ric‖² − (‖H_f‖² + 2λΔf + nλ²)`.
    pub identity10_residual: T,
    pub lambda_analysis: LambdaAnalysis<T>,
    /// `‖Ric‖² − (‖H_f‖² − (Δf)²/n)`.
    pub margin13: T,
    /// `‖H_f‖² − (‖Ric‖² − R²/n)`.
    pub margin19: T,
    pub double20: DoubleInequality<T>,
    pub harmonic: HarmonicFlags,
    /// Norm² of the tensor residual with λ replaced by the companion value,
    /// reported when the first discriminant is positive.
    pub companion_tensor_norm2: Option<T>,
    pub classification: Classification,
}

/// Hessian, curvature and λ-analysis of a gradient soliton at `p`.
pub fn soliton_report<T: Real>(d: &SolitonData<T>, p: &[T]) -> Result<SolitonReport<T>> {
    let n = d.dim();
    let nt = T::lit(n as f64);
    let lc = levi_civita(&d.metric);
    let h = cov_deriv_at(&lc, &d.potential()?.differential(), p)?;
    let h = symmetrized(&h);
    let curv = ricci_at(&lc, &d.metric, p)?;
    let m = d.metric.at(p, 0)?;
    let g = m.metric_tensor();
    let lambda = d.lambda;

    let residual = h.add(&curv.ricci).add_scaled(lambda, &g);
    let residual6_norm2 = norm2(&residual, &m)?;
    let spectrum = generalized_eigen(&h, &m)?;
    let laplacian = trace_g(&h, &m);
    let norm_h2 = norm2(&h, &m)?;
    let norm_ric2 = norm2(&curv.ricci, &m)?;
    let scalar_r = curv.scalar;
    let two = T::lit(2.0);

    let analysis = LambdaAnalysis::new(n, laplacian, norm_h2, norm_ric2, scalar_r, lambda);
    let companion_tensor_norm2 = if analysis.disc12 > T::zero() {
        let r = h.add(&curv.ricci).add_scaled(analysis.companion11, &g);
        Some(norm2(&r, &m)?)
    } else {
        None
    };
    let left = norm_h2 - laplacian * laplacian / nt;
    let right = norm_h2 + scalar_r * scalar_r / nt;
    let tol = T::lit(FLAG_TOL);
    Ok(SolitonReport {
        residual6_norm2,
        spectrum,
        laplacian,
        norm_h2,
        norm_ric2,
        scalar_r,
        gauss: curv.gauss,
        identity10_residual: norm_ric2
            - (norm_h2 + two * lambda * laplacian + nt * lambda * lambda),
        lambda_analysis: analysis,
        margin13: norm_ric2 - left,
        margin19: right - norm_ric2,
        double20: DoubleInequality {
            left,
            mid: norm_ric2,
            right,
        },
        harmonic: HarmonicFlags {
            hessian_equals_ricci: h.max_abs_diff(&curv.ricci) <= tol,
            hessian_equals_minus_ricci: h.add(&curv.ricci).max_abs() <= tol,
            laplacian_zero: laplacian.abs() <= tol,
            scalar_zero: scalar_r.abs() <= tol,
        },
        companion_tensor_norm2,
        classification: Classification::of(lambda),
    })
}

fn symmetrized<T: Real>(h: &TensorAtPoint<T>) -> TensorAtPoint<T> {
    let n = h.dim();
    let mut out = h.clone();
    for i in 0..n {
        for j in 0..n {
            out.set(&[i, j], (h.get(&[i, j]) + h.get(&[j, i])) * T::lit(0.5));
        }
    }
    out
}

fn trace_g<T: Real>(h: &TensorAtPoint<T>, m: &MetricAtPoint<T>) -> T {
    let n = h.dim();
    let gi = m.g_inv();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            s += gi[i * n + j] * h.get(&[i, j]);
        }
    }
    s
}

/// `η ⊗ ξ` as the endomorphism `X ↦ η(X) ξ` with `η = ξ♭`.
fn eta_xi<T: Real>(m: &MetricAtPoint<T>, xi: &[T]) -> TensorAtPoint<T> {
    TensorAtPoint::outer_endomorphism(&m.lower(xi), xi)
}

/// `∇̃ξ + F + λI + μ η⊗ξ` at `p` as a `(1,1)` tensor, and its squared norm.
pub fn generalized_residual<T: Real>(d: &SolitonData<T>, p: &[T]) -> Result<(TensorAtPoint<T>, T)> {
    let n = d.dim();
    let conn = d.active_connection();
    let xi = d.xi_field()?;
    let f = match &d.endomorphism {
        Some(f) => f.clone(),
        None => ricci_endomorphism_field(&conn, &d.metric)?,
    };
    f.expect_variance(&[Slot::Up, Slot::Down], "F")?;
    let m = d.metric.at(p, 0)?;
    let mut r = cov_deriv_at(&conn, &xi, p)?
        .add(&f.at(p)?)
        .add_scaled(d.lambda, &TensorAtPoint::identity(n));
    if let Some(mu) = d.mu {
        r = r.add_scaled(mu, &eta_xi(&m, xi.at(p)?.components()));
    }
    let n2 = norm2(&r, &m)?;
    Ok((r, n2))
}

/// Pointwise torse-forming coefficients `∇ξ = fI + γ⊗ξ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorseFit<T> {
    pub point: Vec<T>,
    pub f: T,
    pub gamma: Vec<T>,
    pub residual: T,
}

/// Fits `∇ξ` onto `span{I, (·)⊗ξ}` at every point of `points`.
pub fn torse_forming_check<T: Real>(
    g: &MetricField<T>,
    xi: &TensorField<T>,
    points: &[Vec<T>],
) -> Result<Vec<TorseFit<T>>> {
    let n = g.dim();
    if n < 2 {
        return Err(Error::Invalid(
            "torse-forming decomposition is not unique in dimension one".into(),
        ));
    }
    let lc = levi_civita(g);
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let m = g.at(p, 0)?;
        let x = xi.at(p)?.into_components();
        let norm = m.inner(&x, &x).sqrt();
        if norm < T::lit(ZERO_VECTOR_TOL) {
            return Err(Error::ZeroVector {
                norm: norm.as_f64(),
            });
        }
        let d = cov_deriv_at(&lc, xi, p)?;
        // unknowns (f, γ_1..γ_n); row (a, b): f δ^a_b + γ_b ξ^a = M^a_b
        let cols = n + 1;
        let mut a = vec![T::zero(); n * n * cols];
        for r in 0..n {
            for c in 0..n {
                let row = r * n + c;
                if r == c {
                    a[row * cols] = T::one();
                }
                a[row * cols + 1 + c] = x[r];
            }
        }
        let (sol, res) = fit(&a, n * n, cols, d.components()).ok_or(Error::Singular)?;
        let scale = d.frobenius().max(T::one());
        let residual = res / scale;
        if residual > T::tol(TORSE_TOL) {
            return Err(Error::NotTorseForming {
                residual: residual.as_f64(),
            });
        }
        out.push(TorseFit {
            point: p.clone(),
            f: sol[0],
            gamma: sol[1..].to_vec(),
            residual,
        });
    }
    Ok(out)
}

/// `Q + (λ + f)I + η⊗ξ` at `p` and its squared norm.
pub fn eta_einstein_residual<T: Real>(
    g: &MetricField<T>,
    xi: &TensorField<T>,
    lambda: T,
    f: T,
    p: &[T],
) -> Result<(TensorAtPoint<T>, T)> {
    let n = g.dim();
    let m = g.at(p, 0)?;
    let q = ricci_at(&levi_civita(g), g, p)?.q;
    let x = xi.at(p)?.into_components();
    let r = q
        .add_scaled(lambda + f, &TensorAtPoint::identity(n))
        .add(&eta_xi(&m, &x));
    let n2 = norm2(&r, &m)?;
    Ok((r, n2))
}

/// The torse-forming defect `∇ξ − fI − η⊗ξ` at `p`.
pub fn torse_defect<T: Real>(
    g: &MetricField<T>,
    xi: &TensorField<T>,
    f: T,
    p: &[T],
) -> Result<TensorAtPoint<T>> {
    let n = g.dim();
    let m = g.at(p, 0)?;
    let x = xi.at(p)?.into_components();
    let d = cov_deriv_at(&levi_civita(g), xi, p)?;
    Ok(d.add_scaled(-f, &TensorAtPoint::identity(n))
        .sub(&eta_xi(&m, &x)))
}

/// Per-point outcome of the Vaisman verification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VaismanPoint<T> {
    pub point: Vec<T>,
    /// Norm² of `∇̃V + J`.
    pub soliton_norm2: T,
    /// `max |η − 2u|` for the recurrence factor `η`; `None` when `∇̃g` is not recurrent.
    pub recurrence_error: Option<T>,
    /// Largest deviation of the torsion from `I⊗u + J⊗v − u⊗I − v⊗J`.
    pub torsion_error: T,
    /// `|T̃(U, V)|`.
    pub torsion_uv: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VaismanReport<T> {
    pub points: Vec<VaismanPoint<T>>,
    pub max_soliton_norm2: T,
    /// `None` when some point is not recurrent.
    pub max_recurrence_error: Option<T>,
    pub max_torsion_error: T,
    pub passed: bool,
}

/// Checks the Vaisman premises for `(g, J, u)` with `c = 1` at every point,
/// then verifies the conclusions about `∇̃ = ∇ − [u⊗I + v⊗J]`.
pub fn vaisman_verify<T: Real>(
    g: &MetricField<T>,
    j: &TensorField<T>,
    u: &TensorField<T>,
    points: &[Vec<T>],
) -> Result<VaismanReport<T>> {
    let n = g.dim();
    g.field().check_chart(j)?;
    g.field().check_chart(u)?;
    j.expect_variance(&[Slot::Up, Slot::Down], "J")?;
    u.expect_variance(&[Slot::Down], "u")?;
    let lc = levi_civita(g);
    let big_u = g.sharp(u)?;
    let big_v = apply_field(j, &big_u);
    let v = g.flat(&big_v)?;
    let id = TensorAtPoint::identity(n);

    type Premise<'a, T> = (&'a str, Box<dyn Fn(&[T]) -> Result<T> + 'a>);
    let premises: [Premise<T>; 4] = [
        (
            "J^2 = -I",
            Box::new(|p| {
                let jp = j.at(p)?;
                Ok(compose(&jp, &jp).add(&id).max_abs())
            }),
        ),
        (
            "g(JX, JY) = g(X, Y)",
            Box::new(|p| {
                let jp = j.at(p)?;
                let m = g.at(p, 0)?;
                let mut worst = T::zero();
                for a in 0..n {
                    for b in 0..n {
                        let ja: Vec<T> = (0..n).map(|k| jp.get(&[k, a])).collect();
                        let jb: Vec<T> = (0..n).map(|k| jp.get(&[k, b])).collect();
                        worst = worst.max((m.inner(&ja, &jb) - m.g()[a * n + b]).abs());
                    }
                }
                Ok(worst)
            }),
        ),
        (
            "|u| = 1",
            Box::new(|p| {
                let m = g.at(p, 0)?;
                let up = u.at(p)?.into_components();
                Ok((m.inner(&m.raise(&up), &m.raise(&up)) - T::one()).abs())
            }),
        ),
        (
            "nabla_X V = u(X)V - v(X)U - JX",
            Box::new(|p| {
                let dv = cov_deriv_at(&lc, &big_v, p)?;
                let (uu, vv) = (
                    big_u.at(p)?.into_components(),
                    big_v.at(p)?.into_components(),
                );
                let (up, vp) = (u.at(p)?.into_components(), v.at(p)?.into_components());
                let rhs = TensorAtPoint::outer_endomorphism(&up, &vv)
                    .sub(&TensorAtPoint::outer_endomorphism(&vp, &uu))
                    .sub(&j.at(p)?);
                let scale = T::one().max(dv.max_abs());
                Ok(dv.max_abs_diff(&rhs) / scale)
            }),
        ),
    ];
    for (name, check) in &premises {
        let mut worst: Option<(T, &Vec<T>)> = None;
        for p in points {
            let r = check(p)?;
            if worst.is_none_or(|(w, _)| r > w) {
                worst = Some((r, p));
            }
        }
        if let Some((r, p)) = worst {
            if !(r <= T::lit(VAISMAN_TOL)) {
                return Err(Error::PremiseViolated {
                    premise: (*name).to_string(),
                    point: p.iter().map(|x| x.as_f64()).collect(),
                    residual: r.as_f64(),
                });
            }
        }
    }

    let conn = deform_connection(
        &lc,
        vec![
            DeformTerm::AlphaTensorF {
                coeff: -T::one(),
                alpha: u.clone(),
                f: None,
            },
            DeformTerm::AlphaTensorF {
                coeff: -T::one(),
                alpha: v.clone(),
                f: Some(j.clone()),
            },
        ],
    )?;
    let data = SolitonData::vector(g.clone(), big_v.clone(), T::zero())
        .with_endomorphism(j.clone())
        .with_connection(conn.clone());
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let (_, soliton_norm2) = generalized_residual(&data, p)?;
        let up = u.at(p)?.into_components();
        let recurrence_error = recurrence_factor(&conn, g, p)?.eta().map(|eta| {
            eta.iter()
                .zip(&up)
                .fold(T::zero(), |w, (&e, &x)| w.max((e - x - x).abs()))
        });
        let tors = torsion_at(&conn, p)?;
        let vp = v.at(p)?.into_components();
        let jp = j.at(p)?;
        let mut expected = TensorAtPoint::zeros(n, vec![Slot::Up, Slot::Down, Slot::Down]);
        for k in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let delta = |x: usize, y: usize| if x == y { T::one() } else { T::zero() };
                    let t = up[b] * delta(k, a) + vp[b] * jp.get(&[k, a])
                        - up[a] * delta(k, b)
                        - vp[a] * jp.get(&[k, b]);
                    expected.set(&[k, a, b], t);
                }
            }
        }
        let (uu, vv) = (
            big_u.at(p)?.into_components(),
            big_v.at(p)?.into_components(),
        );
        let mut tuv = T::zero();
        for k in 0..n {
            let mut s = T::zero();
            for a in 0..n {
                for b in 0..n {
                    s += tors.get(&[k, a, b]) * uu[a] * vv[b];
                }
            }
            tuv = tuv.max(s.abs());
        }
        out.push(VaismanPoint {
            point: p.clone(),
            soliton_norm2,
            recurrence_error,
            torsion_error: tors.max_abs_diff(&expected),
            torsion_uv: tuv,
        });
    }
    let max = |f: fn(&VaismanPoint<T>) -> T| out.iter().map(f).fold(T::zero(), T::max);
    let max_soliton_norm2 = max(|r| r.soliton_norm2);
    let max_recurrence_error = out
        .iter()
        .map(|r| r.recurrence_error)
        .try_fold(T::zero(), |w, e| e.map(|e| w.max(e)));
    let max_torsion_error = max(|r| r.torsion_error);
    let tol = T::lit(VAISMAN_TOL);
    Ok(VaismanReport {
        passed: max_soliton_norm2 <= tol
            && max_recurrence_error.is_some_and(|e| e <= tol)
            && max_torsion_error <= tol,
        points: out,
        max_soliton_norm2,
        max_recurrence_error,
        max_torsion_error,
    })
}

fn compose<T: Real>(a: &TensorAtPoint<T>, b: &TensorAtPoint<T>) -> TensorAtPoint<T> {
    let n = a.dim();
    let mut out = TensorAtPoint::zeros(n, vec![Slot::Up, Slot::Down]);
    for i in 0..n {
        for j in 0..n {
            let s = (0..n).fold(T::zero(), |s, k| s + a.get(&[i, k]) * b.get(&[k, j]));
            out.set(&[i, j], s);
        }
    }
    out
}

/// The vector field `F(X)`.
fn apply_field<T: Real>(f: &TensorField<T>, x: &TensorField<T>) -> TensorField<T> {
    let n = f.dim();
    let (f, x) = (f.clone(), x.clone());
    let top = f.max_order().min(x.max_order());
    TensorField::from_fn(n, vec![Slot::Up], top, move |p, order| {
        let fj = f.jets(p, order)?;
        let xj = x.jets(p, order)?;
        Ok((0..n)
            .map(|a| {
                let mut s = &fj[a * n] * &xj[0];
                for b in 1..n {
                    s = s + &fj[a * n + b] * &xj[b];
                }
                s
            })
            .collect())
    })
}

/// Fitted shift between the Weyl and Levi-Civita generalized residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylShift<T> {
    pub delta_lambda: T,
    pub delta_mu: T,
    /// Euclidean norm of the fit residual over all points.
    pub fit_residual: T,
    /// Largest gap between the residual under `∇̃` at `(λ, μ)` and under `∇` at `(λ + Δλ, μ + Δμ)`.
    pub identity_residual: T,
    /// `‖ξ‖²` over the sample (constant by premise).
    pub xi_norm2: T,
}

/// Fits `∇̃ξ − ∇ξ = Δλ·I + Δμ·η⊗ξ` for the Weyl connection of `(g, η)`, `ξ = η♯`.
pub fn weyl_shift_probe<T: Real>(
    g: &MetricField<T>,
    eta: &TensorField<T>,
    f: &TensorField<T>,
    lambda: T,
    mu: T,
    points: &[Vec<T>],
) -> Result<WeylShift<T>> {
    let n = g.dim();
    if points.is_empty() {
        return Err(Error::Invalid(
            "weyl shift probe needs at least one point".into(),
        ));
    }
    let xi = g.sharp(eta)?;
    let mut norms = Vec::with_capacity(points.len());
    for p in points {
        let x = xi.at(p)?.into_components();
        norms.push(g.at(p, 0)?.inner(&x, &x));
    }
    let norm_of = |v: T| v.max(T::zero()).sqrt();
    let hi = norms
        .iter()
        .copied()
        .map(norm_of)
        .fold(T::neg_infinity(), T::max);
    let lo = norms
        .iter()
        .copied()
        .map(norm_of)
        .fold(T::infinity(), T::min);
    if hi - lo > T::lit(1e-8) {
        return Err(Error::NonConstantNorm {
            spread: (hi - lo).as_f64(),
        });
    }
    let lc = levi_civita(g);
    let weyl = weyl_connection(g, eta)?;
    let use_mu = hi >= T::lit(ZERO_VECTOR_TOL);
    let cols = if use_mu { 2 } else { 1 };
    let mut a = Vec::new();
    let mut b = Vec::new();
    let id = TensorAtPoint::identity(n);
    for p in points {
        let m = g.at(p, 0)?;
        let d = cov_deriv_at(&weyl, &xi, p)?.sub(&cov_deriv_at(&lc, &xi, p)?);
        let ex = eta_xi(&m, xi.at(p)?.components());
        for k in 0..n * n {
            a.push(id.components()[k]);
            if use_mu {
                a.push(ex.components()[k]);
            }
            b.push(d.components()[k]);
        }
    }
    let (sol, fit_residual) = fit(&a, b.len(), cols, &b).ok_or(Error::Singular)?;
    let delta_lambda = sol[0];
    let delta_mu = if use_mu { sol[1] } else { T::zero() };
    let tilde = SolitonData::vector(g.clone(), xi.clone(), lambda)
        .with_mu(mu)
        .with_endomorphism(f.clone())
        .with_connection(weyl);
    let plain = SolitonData::vector(g.clone(), xi.clone(), lambda + delta_lambda)
        .with_mu(mu + delta_mu)
        .with_endomorphism(f.clone())
        .with_connection(lc);
    let mut identity_residual = T::zero();
    for p in points {
        let (r1, _) = generalized_residual(&tilde, p)?;
        let (r2, _) = generalized_residual(&plain, p)?;
        identity_residual = identity_residual.max(r1.max_abs_diff(&r2));
    }
    let xi_norm2 = norms.iter().fold(T::zero(), |s, &v| s + v) / T::lit(norms.len() as f64);
    Ok(WeylShift {
        delta_lambda,
        delta_mu,
        fit_residual,
        identity_residual,
        xi_norm2,
    })
}

/// Outcome of the statistical-structure check over a sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatisticalReport<T> {
    pub duality_residual: T,
    /// `max |½(Γ̃ + Γ̃*) − Γ|` against the Levi-Civita coefficients.
    pub mean_residual: T,
    /// `max |ric̃_ij − ric̃_ji|`.
    pub ricci_asymmetry: T,
    pub ricci_symmetric: bool,
    /// Largest norm² of the residual under `∇̃`.
    pub residual_norm2: T,
    /// Largest norm² under the dual connection.
    pub dual_residual_norm2: T,
    /// Largest norm² under the mean connection, with its own Ricci endomorphism.
    pub mean_residual_norm2: T,
    pub statistical_soliton: bool,
}

/// Builds the dual of a torsion-free `conn` and evaluates the soliton residual
/// under the connection, its dual and their mean.
pub fn statistical_check<T: Real>(
    g: &MetricField<T>,
    conn: &ConnectionField<T>,
    xi: &TensorField<T>,
    lambda: T,
    points: &[Vec<T>],
) -> Result<StatisticalReport<T>> {
    let mut torsion = T::zero();
    for p in points {
        torsion = torsion.max(torsion_at(conn, p)?.max_abs());
    }
    if torsion > T::lit(1e-10) {
        return Err(Error::NotTorsionFree {
            torsion: torsion.as_f64(),
        });
    }
    let dual = dual_connection(g, conn)?;
    let mean = conn.mean(&dual)?;
    let lc = levi_civita(g);
    let residual_under = |c: &ConnectionField<T>, p: &[T]| -> Result<T> {
        let d = SolitonData::vector(g.clone(), xi.clone(), lambda).with_connection(c.clone());
        Ok(generalized_residual(&d, p)?.1)
    };
    let mut r = StatisticalReport {
        duality_residual: T::zero(),
        mean_residual: T::zero(),
        ricci_asymmetry: T::zero(),
        ricci_symmetric: false,
        residual_norm2: T::zero(),
        dual_residual_norm2: T::zero(),
        mean_residual_norm2: T::zero(),
        statistical_soliton: false,
    };
    for p in points {
        r.duality_residual = r.duality_residual.max(duality_residual(g, conn, &dual, p)?);
        r.mean_residual = r.mean_residual.max(
            mean.coefficients_at(p)?
                .max_abs_diff(&lc.coefficients_at(p)?),
        );
        let ric = ricci_at(conn, g, p)?.ricci;
        r.ricci_asymmetry = r
            .ricci_asymmetry
            .max(ric.max_abs_diff(&ric.swap_slots(0, 1)?));
        r.residual_norm2 = r.residual_norm2.max(residual_under(conn, p)?);
        r.dual_residual_norm2 = r.dual_residual_norm2.max(residual_under(&dual, p)?);
        r.mean_residual_norm2 = r.mean_residual_norm2.max(residual_under(&mean, p)?);
    }
    let tol = T::lit(FLAG_TOL);
    r.ricci_symmetric = r.ricci_asymmetry <= tol;
    r.statistical_soliton =
        r.ricci_symmetric && r.residual_norm2 <= tol && r.dual_residual_norm2 <= tol;
    Ok(r)
}

/// The weak-soliton residual `W(X, Y) = Riem(X, Y)ξ − (d₂∘δ∇Riem)(X, Y)` for
/// the Levi-Civita connection, computed two ways.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakResidual<T> {
    pub residual: TensorAtPoint<T>,
    pub norm2: T,
    /// Largest gap between the curvature route and `d∇d∇ξ + d∇Q`.
    pub route_gap: T,
}

pub fn weak_soliton_residual<T: Real>(
    g: &MetricField<T>,
    xi: &TensorField<T>,
    p: &[T],
) -> Result<WeakResidual<T>> {
    let lc = levi_civita(g);
    let m = g.at(p, 0)?;
    let curv = ricci_at(&lc, g, p)?;
    let x = xi.at(p)?.into_components();
    let residual = riemann_apply(&curv.riemann, &x).sub(&div_riemann_at(&lc, g, p)?);
    let dd = ext_cov_deriv_at(&lc, &ext_cov_deriv_field(&lc, xi)?, p)?;
    let dq = ext_cov_deriv_at(&lc, &ricci_endomorphism_field(&lc, g)?, p)?;
    let route_gap = dd.add(&dq).max_abs_diff(&residual);
    let norm2 = norm2(&residual, &m)?;
    Ok(WeakResidual {
        residual,
        norm2,
        route_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Expr, ScalarField};

    fn parse(src: &[&str], coords: &[&str]) -> Vec<Expr> {
        src.iter()
            .map(|s| ScalarField::parse(s, coords).unwrap().expr().clone())
            .collect()
    }

    fn cigar() -> SolitonData<f64> {
        let c = ["x", "y"];
        let g =
            MetricField::from_exprs(2, parse(&["1/(1+x^2+y^2)", "0", "0", "1/(1+x^2+y^2)"], &c));
        let f = TensorField::scalar(&ScalarField::parse("-log(1+x^2+y^2)", &c).unwrap());
        SolitonData::gradient(g, f, 0.0)
    }

    #[test]
    fn cigar_report_at_origin() {
        let r = soliton_report(&cigar(), &[0.0, 0.0]).unwrap();
        assert!(r.residual6_norm2 <= 1e-18);
        assert!((r.laplacian + 4.0).abs() < 1e-12);
        assert!((r.norm_h2 - 8.0).abs() < 1e-12);
        assert!((r.norm_ric2 - 8.0).abs() < 1e-12);
        assert!((r.scalar_r - 4.0).abs() < 1e-12);
        match r.lambda_analysis.roots11 {
            Roots::Distinct(a, b) => assert!(a.abs() < 1e-12 && (b - 4.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert!((r.margin13 - 8.0).abs() < 1e-12 && (r.margin19 - 8.0).abs() < 1e-12);
        assert_eq!(r.classification, Classification::Steady);
    }

    #[test]
    fn torse_special_half_plane() {
        let g = MetricField::<f64>::euclidean(2);
        let xi = TensorField::from_exprs(2, vec![Slot::Up], parse(&["-1/x", "0"], &["x", "y"]));
        let fits = torse_forming_check(&g, &xi, &[vec![2.0, 0.3]]).unwrap();
        assert!(fits[0].f.abs() < 1e-12);
        assert!((fits[0].gamma[0] + 0.5).abs() < 1e-12 && fits[0].gamma[1].abs() < 1e-12);
    }

    #[test]
    fn shear_field_is_torse_forming_away_from_its_zeros() {
        let g = MetricField::<f64>::euclidean(2);
        let xi = TensorField::from_exprs(2, vec![Slot::Up], parse(&["0", "x"], &["x", "y"]));
        let fits = torse_forming_check(&g, &xi, &[vec![2.0, 0.0]]).unwrap();
        assert!(fits[0].f.abs() < 1e-12);
        assert!((fits[0].gamma[0] - 0.5).abs() < 1e-12 && fits[0].gamma[1].abs() < 1e-12);
        let err = torse_forming_check(&g, &xi, &[vec![0.0, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::ZeroVector { .. }));
    }

    #[test]
    fn rotation_field_is_not_torse_forming() {
        let g = MetricField::<f64>::euclidean(2);
        let xi = TensorField::from_exprs(2, vec![Slot::Up], parse(&["-y", "x"], &["x", "y"]));
        let err = torse_forming_check(&g, &xi, &[vec![1.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::NotTorseForming { .. }), "{err:?}");
    }

    #[test]
    fn weyl_shift_flat() {
        let g = MetricField::<f64>::euclidean(2);
        let c = ["x", "y"];
        let eta = TensorField::from_exprs(2, vec![Slot::Down], parse(&["1", "0"], &c));
        let f = TensorField::zero(2, vec![Slot::Up, Slot::Down]);
        let s =
            weyl_shift_probe(&g, &eta, &f, 0.3, 0.0, &[vec![0.0, 0.0], vec![1.0, -2.0]]).unwrap();
        assert!((s.delta_lambda + 0.5).abs() < 1e-12);
        assert!(s.delta_mu.abs() < 1e-12);
        assert!(s.identity_residual < 1e-12);
    }

    #[test]
    fn flat_r4_fails_the_vaisman_premise() {
        let c = ["a", "b", "c", "d"];
        let g = MetricField::<f64>::euclidean(4);
        let j = TensorField::from_exprs(
            4,
            vec![Slot::Up, Slot::Down],
            parse(
                &[
                    "0", "-1", "0", "0", "1", "0", "0", "0", "0", "0", "0", "-1", "0", "0", "1",
                    "0",
                ],
                &c,
            ),
        );
        let u = TensorField::from_exprs(4, vec![Slot::Down], parse(&["1", "0", "0", "0"], &c));
        match vaisman_verify(&g, &j, &u, &[vec![0.1, 0.2, 0.3, 0.4]]) {
            Err(Error::PremiseViolated { premise, .. }) => assert!(premise.starts_with("nabla")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sphere_weak_residual_with_unit_vector() {
        let c = ["t", "p"];
        let g = MetricField::from_exprs(2, parse(&["1", "0", "0", "sin(t)^2"], &c));
        let xi = TensorField::from_exprs(2, vec![Slot::Up], parse(&["1", "0"], &c));
        let w = weak_soliton_residual(&g, &xi, &[1.0f64, 0.5]).unwrap();
        assert!((w.norm2 - 2.0).abs() < 1e-10, "{}", w.norm2);
        assert!(w.route_gap < 1e-10);
    }
}
