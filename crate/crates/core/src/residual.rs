//! The (p,q)-harmonic hypersurface system, classification and parameter solves.
//!
//! The evaluator works with the factor-stripped system
//!
//! ```text
//! eq1 = c1 fΔf + c2 |∇f|² + c3 f²|A|² + c4 f² Ric(η,η) + c5 f⁴
//! eq2 = d1 A(∇f) + d2 f (Ricci η)ᵀ + d3 f ∇f
//! ```
//!
//! whose zero set agrees with that of the full bitension field wherever
//! `f ≠ 0`.

use std::ops::Neg;

use nalgebra::DVector;
use num_traits::{FromPrimitive, Num};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::immersion::{DerivativeConfig, GeometricSample, GridSpec, ImmersionChart, SamplePath};
use crate::numerics::roots;

/// Exponents `p, q > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PQParams {
    p: f64,
    q: f64,
}

impl PQParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p > 1.0 && q > 1.0 && p.is_finite() && q.is_finite()) {
            return Err(GeomError::InvalidParameter(format!(
                "need p > 1 and q > 1, got p = {p}, q = {q}"
            )));
        }
        Ok(Self { p, q })
    }

    /// Unvalidated pair, for solver iterates that may wander outside `p, q > 1`.
    pub(crate) fn raw(p: f64, q: f64) -> Self {
        Self { p, q }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn pq(&self) -> f64 {
        self.p * self.q
    }

    pub fn is_admissible(&self) -> bool {
        self.p > 1.0 && self.q > 1.0
    }
}

/// Coefficients of the two equations, in the order documented on the module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoefficientSet<T> {
    pub c1: T,
    pub c2: T,
    pub c3: T,
    pub c4: T,
    pub c5: T,
    pub d1: T,
    pub d2: T,
    pub d3: T,
}

/// Coefficients for any number type; with `Ratio<i64>` the result is exact.
pub fn coefficients<T>(p: T, q: T, m: usize) -> CoefficientSet<T>
where
    T: Num + Copy + FromPrimitive + Neg<Output = T>,
{
    let one = T::one();
    let two = one + one;
    let mm = T::from_usize(m).expect("dimension fits the number type");
    CoefficientSet {
        c1: -(q - one),
        c2: -((q - one) * (q - two)),
        c3: one,
        c4: -one,
        c5: mm * (p - two),
        d1: two * (q - one),
        d2: -two,
        d3: mm + (p - two) * q,
    }
}

pub fn coefficients_f64(params: &PQParams, m: usize) -> CoefficientSet<f64> {
    coefficients(params.p, params.q, m)
}

/// Values of both equations at one point; `eq2` is in chart coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub eq1: f64,
    pub eq2: Vec<f64>,
}

impl Residual {
    /// `g`-norm of the tangential equation.
    pub fn eq2_norm(&self, sample: &GeometricSample) -> f64 {
        sample.norm2(&self.eq2).max(0.0).sqrt()
    }

    /// Component of `eq2` along `grad f` (zero when `grad f` vanishes).
    pub fn eq2_signed(&self, sample: &GeometricSample) -> f64 {
        let gn = sample.grad_f_norm2.sqrt();
        if gn <= 1e-300 {
            return 0.0;
        }
        let g = sample.metric_matrix();
        let e = DVector::from_column_slice(&self.eq2);
        let d = DVector::from_column_slice(&sample.grad_f);
        (e.transpose() * g * d)[(0, 0)] / gn
    }
}

/// General ambient: uses the Ricci data carried by the sample.
pub fn residual(sample: &GeometricSample, params: &PQParams) -> Residual {
    let k = coefficients_f64(params, sample.m);
    let f = sample.f;
    let f2 = f * f;
    let eq1 = k.c1 * f * sample.laplacian_f
        + k.c2 * sample.grad_f_norm2
        + k.c3 * f2 * sample.norm_a2
        + k.c4 * f2 * sample.ric_eta_eta
        + k.c5 * f2 * f2;
    let eq2 = (0..sample.m)
        .map(|i| {
            k.d1 * sample.a_grad_f[i]
                + k.d2 * f * sample.ricci_eta_top[i]
                + k.d3 * f * sample.grad_f[i]
        })
        .collect();
    Residual { eq1, eq2 }
}

fn with_ricci(sample: &GeometricSample, ric: f64) -> GeometricSample {
    GeometricSample {
        ric_eta_eta: ric,
        ricci_eta_top: vec![0.0; sample.m],
        ..sample.clone()
    }
}

/// Space form `N^{m+1}(c)`: `Ric(η,η) = mc`, `(Ricci η)ᵀ = 0`.
pub fn residual_spaceform(sample: &GeometricSample, params: &PQParams, c: f64) -> Residual {
    residual(&with_ricci(sample, sample.m as f64 * c), params)
}

/// Einstein ambient with scalar curvature `s`: `Ric(η,η) = s/(m+1)`.
pub fn residual_einstein(sample: &GeometricSample, params: &PQParams, s: f64) -> Residual {
    residual(&with_ricci(sample, s / (sample.m as f64 + 1.0)), params)
}

/// Constant mean curvature forced on a totally umbilical proper solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum UmbilicSolution {
    /// `|f|` of the proper solution.
    Proper(f64),
    /// Non-positive scalar curvature: only minimal hypersurfaces qualify.
    MinimalOnly,
}

pub fn umbilic_f(params: &PQParams, m: usize, s: f64) -> UmbilicSolution {
    if s > 0.0 {
        let m = m as f64;
        UmbilicSolution::Proper((s / (m * (m + 1.0) * (params.p - 1.0))).sqrt())
    } else {
        UmbilicSolution::MinimalOnly
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Minimal,
    ProperPQHarmonic,
    NotPQHarmonic,
    /// `|f|` is below tolerance on part of the grid only.
    MixedSignF,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::Minimal => "minimal",
            Classification::ProperPQHarmonic => "proper",
            Classification::NotPQHarmonic => "not",
            Classification::MixedSignF => "mixed",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "minimal" => Some(Classification::Minimal),
            "proper" => Some(Classification::ProperPQHarmonic),
            "not" => Some(Classification::NotPQHarmonic),
            "mixed" => Some(Classification::MixedSignF),
            _ => None,
        }
    }

    /// Shared decision rule for surfaces (`mag` = `|f|`) and curves (`mag` = `k`).
    pub fn decide(min_mag: f64, max_mag: f64, max_residual: f64, tol: f64) -> Self {
        if max_mag < tol {
            Classification::Minimal
        } else if min_mag < tol {
            Classification::MixedSignF
        } else if max_residual < tol {
            Classification::ProperPQHarmonic
        } else {
            Classification::NotPQHarmonic
        }
    }
}

/// Which Ricci data the classifier feeds into the system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AmbientRicci {
    #[default]
    SpaceForm,
    Einstein {
        scalar_curvature: f64,
    },
}

pub const DEFAULT_TOL_ANALYTIC: f64 = 1e-6;
pub const DEFAULT_TOL_STENCIL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    pub grid: GridSpec,
    /// Overrides the path-dependent default.
    pub tol: Option<f64>,
    pub deriv: DerivativeConfig,
    pub ambient: AmbientRicci,
}

impl ClassifyConfig {
    pub fn new(points_per_axis: usize) -> Self {
        Self {
            grid: GridSpec::new(points_per_axis),
            tol: None,
            deriv: DerivativeConfig::default(),
            ambient: AmbientRicci::SpaceForm,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = Some(tol);
        self
    }

    pub fn with_path(mut self, path: SamplePath) -> Self {
        self.deriv.path = path;
        self
    }

    pub fn effective_path(&self, chart: &ImmersionChart) -> SamplePath {
        match self.deriv.path {
            SamplePath::Auto if chart.has_analytic() => SamplePath::Analytic,
            SamplePath::Auto => SamplePath::Stencil,
            p => p,
        }
    }

    pub fn effective_tol(&self, chart: &ImmersionChart) -> f64 {
        self.tol.unwrap_or(match self.effective_path(chart) {
            SamplePath::Analytic => DEFAULT_TOL_ANALYTIC,
            _ => DEFAULT_TOL_STENCIL,
        })
    }
}

fn evaluate(
    sample: &GeometricSample,
    params: &PQParams,
    c: f64,
    ambient: AmbientRicci,
) -> Residual {
    match ambient {
        AmbientRicci::SpaceForm => residual_spaceform(sample, params, c),
        AmbientRicci::Einstein { scalar_curvature } => {
            residual_einstein(sample, params, scalar_curvature)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResidual {
    pub u: Vec<f64>,
    pub f: f64,
    pub eq1: f64,
    pub eq2_norm: f64,
    /// Full tangential residual in chart coefficients.
    pub eq2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub points: Vec<PointResidual>,
    pub max_abs_eq1: f64,
    pub max_eq2_norm: f64,
    pub min_abs_f: f64,
    pub max_abs_f: f64,
    pub classification: Classification,
    pub tolerance: f64,
    pub path: SamplePath,
}

fn report_from(
    points: &[Vec<f64>],
    samples: &[GeometricSample],
    params: &PQParams,
    c: f64,
    ambient: AmbientRicci,
    tol: f64,
    path: SamplePath,
) -> ResidualReport {
    let rows: Vec<PointResidual> = points
        .iter()
        .zip(samples)
        .map(|(u, s)| {
            let r = evaluate(s, params, c, ambient);
            PointResidual {
                u: u.clone(),
                f: s.f,
                eq1: r.eq1,
                eq2_norm: r.eq2_norm(s),
                eq2: r.eq2,
            }
        })
        .collect();
    let max_abs_eq1 = rows.iter().map(|r| r.eq1.abs()).fold(0.0, f64::max);
    let max_eq2_norm = rows.iter().map(|r| r.eq2_norm).fold(0.0, f64::max);
    let min_abs_f = rows.iter().map(|r| r.f.abs()).fold(f64::INFINITY, f64::min);
    let max_abs_f = rows.iter().map(|r| r.f.abs()).fold(0.0, f64::max);
    let classification =
        Classification::decide(min_abs_f, max_abs_f, max_abs_eq1.max(max_eq2_norm), tol);
    ResidualReport {
        points: rows,
        max_abs_eq1,
        max_eq2_norm,
        min_abs_f,
        max_abs_f,
        classification,
        tolerance: tol,
        path,
    }
}

/// Evaluate the system on a grid and classify the chart.
pub fn classify(
    chart: &ImmersionChart,
    params: &PQParams,
    cfg: &ClassifyConfig,
) -> Result<ResidualReport> {
    let mut deriv = cfg.deriv;
    deriv.path = cfg.effective_path(chart);
    let points = chart.grid(&cfg.grid, &deriv)?;
    let samples = chart.sample_grid(&points, &deriv)?;
    let c = chart.space_form().curvature();
    Ok(report_from(
        &points,
        &samples,
        params,
        c,
        cfg.ambient,
        cfg.effective_tol(chart),
        deriv.path,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvePOutcome {
    pub p: f64,
    /// `max(|eq1|, eq2_norm)` over the grid at `p`.
    pub objective: f64,
    pub refined_by_bisection: bool,
}

/// Find the `p` that annihilates the system on the grid, `q` fixed.
pub fn solve_p(
    chart: &ImmersionChart,
    q: f64,
    cfg: &ClassifyConfig,
    bracket: (f64, f64),
) -> Result<SolvePOutcome> {
    let (lo, hi) = bracket;
    if !(lo < hi) {
        return Err(GeomError::InvalidParameter(format!(
            "empty bracket [{lo}, {hi}]"
        )));
    }
    PQParams::new(lo.max(1.0 + f64::EPSILON), q)?;
    let mut deriv = cfg.deriv;
    deriv.path = cfg.effective_path(chart);
    let tol = cfg.effective_tol(chart);
    let points = chart.grid(&cfg.grid, &deriv)?;
    let samples = chart.sample_grid(&points, &deriv)?;
    let max_f = samples.iter().map(|s| s.f.abs()).fold(0.0, f64::max);
    if max_f < tol {
        return Err(GeomError::MinimalOnly);
    }
    let c = chart.space_form().curvature();
    let ambient = cfg.ambient;
    let eval_all = |p: f64| -> Vec<(f64, f64)> {
        let params = PQParams::raw(p, q);
        samples
            .iter()
            .map(|s| {
                let r = evaluate(s, &params, c, ambient);
                (r.eq1, r.eq2_norm(s))
            })
            .collect()
    };
    let objective = |p: f64| {
        eval_all(p)
            .iter()
            .map(|(a, b)| a.abs().max(*b))
            .fold(0.0, f64::max)
    };
    let mean_eq1 = |p: f64| {
        let v = eval_all(p);
        v.iter().map(|(a, _)| a).sum::<f64>() / v.len() as f64
    };

    let width = hi - lo;
    let (mut p, _) = roots::golden_section(objective, lo, hi, 1e-12 * width);
    let mut refined = false;
    let eq2_max = eval_all(p).iter().map(|(_, b)| *b).fold(0.0, f64::max);
    if eq2_max < tol {
        let mut delta = 1e-6 * width;
        while delta < width {
            let a = (p - delta).max(lo);
            let b = (p + delta).min(hi);
            if mean_eq1(a).signum() != mean_eq1(b).signum() {
                p = roots::bisection(mean_eq1, a, b, 1e-15 * p.abs().max(1.0))?;
                refined = true;
                break;
            }
            delta *= 2.0;
        }
    }
    let best = objective(p);
    if !(best < tol) {
        return Err(GeomError::NoRootInBracket { lo, hi, best });
    }
    Ok(SolvePOutcome {
        p,
        objective: best,
        refined_by_bisection: refined,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSolution {
    pub p: f64,
    pub theta: f64,
    pub q: f64,
    pub iterations: usize,
    pub max_residual: f64,
    pub admissible: bool,
}

impl PairSolution {
    /// Turn an out-of-range solution into an error.
    pub fn require_admissible(self) -> Result<Self> {
        if self.admissible {
            Ok(self)
        } else {
            Err(GeomError::Inadmissible {
                p: self.p,
                q: self.q,
            })
        }
    }
}

pub const NEWTON_MAX_ITER: usize = 100;
/// A solved `p` must clear 1 by this much to count as admissible; solver
/// accuracy is of the same order, so `p = 1 + 1e-8` is treated as `p = 1`.
pub const ADMISSIBILITY_MARGIN: f64 = 1e-6;

/// Solve for `(p, θ)` in a one-parameter chart family, `q` fixed.
///
/// Newton runs on `(mean eq1, mean eq2·∇f/|∇f|)` over the grid, starting
/// from the bracket midpoints, then the full grid is re-checked.
pub fn solve_param_pair(
    family: &(dyn Fn(f64) -> Result<ImmersionChart> + Sync),
    q: f64,
    theta_bracket: (f64, f64),
    p_bracket: (f64, f64),
    cfg: &ClassifyConfig,
) -> Result<PairSolution> {
    if !(q > 1.0) {
        return Err(GeomError::InvalidParameter(format!("need q > 1, got {q}")));
    }
    let probe = family(0.5 * (theta_bracket.0 + theta_bracket.1))?;
    let tol = cfg.effective_tol(&probe);
    let ambient = cfg.ambient;
    let system = |x: &DVector<f64>| -> Result<DVector<f64>> {
        let (p, theta) = (x[0], x[1]);
        let chart = family(theta)?;
        let mut deriv = cfg.deriv;
        deriv.path = cfg.effective_path(&chart);
        let points = chart.grid(&cfg.grid, &deriv)?;
        let params = PQParams::raw(p, q);
        let c = chart.space_form().curvature();
        let sums = points
            .par_iter()
            .map(|u| {
                let s = chart.geometric_sample(u, &deriv)?;
                let r = evaluate(&s, &params, c, ambient);
                Ok((r.eq1, r.eq2_signed(&s)))
            })
            .collect::<Result<Vec<_>>>()?;
        let n = sums.len() as f64;
        Ok(DVector::from_vec(vec![
            sums.iter().map(|s| s.0).sum::<f64>() / n,
            sums.iter().map(|s| s.1).sum::<f64>() / n,
        ]))
    };
    let x0 = DVector::from_vec(vec![
        0.5 * (p_bracket.0 + p_bracket.1),
        0.5 * (theta_bracket.0 + theta_bracket.1),
    ]);
    let out = roots::newton_fd(system, x0, 1e-4 * tol, NEWTON_MAX_ITER)?;
    let (p, theta) = (out.x[0], out.x[1]);
    let chart = family(theta)?;
    let report = classify(
        &chart,
        &PQParams::raw(p, q),
        &ClassifyConfig {
            tol: Some(tol),
            ..cfg.clone()
        },
    )?;
    let max_residual = report.max_abs_eq1.max(report.max_eq2_norm);
    if !(max_residual < tol) {
        return Err(GeomError::PostVerification {
            residual: max_residual,
            tol,
        });
    }
    Ok(PairSolution {
        p,
        theta,
        q,
        iterations: out.iterations,
        max_residual,
        admissible: p > 1.0 + ADMISSIBILITY_MARGIN,
    })
}
