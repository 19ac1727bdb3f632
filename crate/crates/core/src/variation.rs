//! Discretized (p,q)-energy of curves and a numerical first-variation check.
//!
//! The energy integrates `(1/q)|τ_p(γ)|^q` against `dt` on the parameter
//! interval; the domain metric stays fixed while the curve varies.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::curves::{CurveChart, CurveConfig, CurveJetFn, CurveMapFn};
use crate::error::{GeomError, Result};
use crate::numerics::quad;
use crate::residual::PQParams;
use crate::spaceform::{AmbientVector, CurveJet, SpaceForm};

pub const MIN_NODES: usize = 16;
/// `|τ_p|` below which `|τ_p|^{q-2}` is treated as singular for `q < 2`.
pub const TENSION_FLOOR: f64 = 1e-6;
/// Speed below which `|γ'|^{p-2}` is treated as singular for `p < 2`.
pub const SPEED_FLOOR: f64 = 1e-10;
pub const DEFAULT_EPS_STEPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// Uniform composite-Simpson discretization of a curve's parameter interval.
#[derive(Debug, Clone)]
pub struct DiscretizedCurve {
    curve: CurveChart,
    ts: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscretizedCurve {
    /// `k` intervals (even, at least 16); `k + 1` nodes including both ends.
    pub fn new(curve: CurveChart, k: usize) -> Result<Self> {
        if k < MIN_NODES || !k.is_multiple_of(2) {
            return Err(GeomError::InvalidParameter(format!(
                "node count must be even and >= {MIN_NODES}, got {k}"
            )));
        }
        let (a, b) = curve.domain();
        let h = (b - a) / k as f64;
        let ts: Vec<f64> = (0..=k).map(|i| a + h * i as f64).collect();
        for &t in &ts {
            curve.space_form().check_point(&curve.point(t))?;
        }
        let weights = quad::simpson_weights(k, h)?;
        Ok(Self { curve, ts, weights })
    }

    pub fn curve(&self) -> &CurveChart {
        &self.curve
    }

    pub fn nodes(&self) -> &[f64] {
        &self.ts
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn with_curve(&self, curve: CurveChart) -> Self {
        Self {
            curve,
            ts: self.ts.clone(),
            weights: self.weights.clone(),
        }
    }
}

fn tension_from_jet(sf: &SpaceForm, jet: &CurveJet, p: f64) -> Result<AmbientVector> {
    let vel = sf.project_tangent(&jet.pos, &jet.vel);
    let s = sf.norm(&vel);
    if p < 2.0 && !(s > SPEED_FLOOR) {
        return Err(GeomError::SingularFactor(format!(
            "|γ'|^(p-2) with speed {s:e} and p = {p}"
        )));
    }
    let acc = sf.project_tangent(&jet.pos, &jet.acc);
    let l = s.powf(p - 2.0);
    let dl = (p - 2.0) * s.powf(p - 4.0) * sf.inner(&vel, &acc);
    let out = acc * l + vel * dl;
    if out.iter().any(|x| !x.is_finite()) {
        return Err(GeomError::Numeric(format!(
            "non-finite p-tension at speed {s:e}"
        )));
    }
    Ok(out)
}

/// p-tension `τ_p(γ) = ∇_t(|γ'|^{p-2} γ')`.
pub fn tension_p(curve: &CurveChart, t: f64, p: f64, cfg: &CurveConfig) -> Result<AmbientVector> {
    tension_from_jet(curve.space_form(), &curve.jet(t, cfg), p)
}

/// `E_{p,q}(γ) = ∫ (1/q)|τ_p(γ)|^q dt` by composite Simpson.
pub fn energy_pq(curve: &DiscretizedCurve, params: &PQParams, cfg: &CurveConfig) -> Result<f64> {
    let sf = curve.curve.space_form();
    let q = params.q();
    let mut e = 0.0;
    for (t, w) in curve.ts.iter().zip(&curve.weights) {
        let tp = tension_p(&curve.curve, *t, params.p(), cfg)?;
        e += w * sf.norm(&tp).powf(q) / q;
    }
    if !e.is_finite() {
        return Err(GeomError::Numeric("non-finite energy".into()));
    }
    Ok(e)
}

/// (p,q)-tension of a curve:
/// `τ_pq = -L|τ_p|^{q-2} R(τ_p, γ')γ' - ∇_t(L ∇_t W) - (p-2)∇_t(|γ'|^{p-4}<∇_t W, γ'>γ')`
/// with `L = |γ'|^{p-2}`, `W = |τ_p|^{q-2} τ_p`.
pub fn tension_pq_curve(
    curve: &CurveChart,
    t: f64,
    params: &PQParams,
    cfg: &CurveConfig,
) -> Result<AmbientVector> {
    let sf = *curve.space_form();
    let (p, q) = (params.p(), params.q());
    let h = cfg.step_rel * curve.length_of_domain();
    let e = sf.embedding_dim();
    let nan = || DVector::from_element(e, f64::NAN);

    let w_of = |s: f64| -> Result<AmbientVector> {
        let tp = tension_p(curve, s, p, cfg)?;
        let n = sf.norm(&tp);
        if q < 2.0 && !(n > TENSION_FLOOR) {
            return Err(GeomError::SingularFactor(format!(
                "|τ_p|^(q-2) with |τ_p| = {n:e} and q = {q}"
            )));
        }
        Ok(tp * n.powf(q - 2.0))
    };
    // surface guard errors at t itself before entering the stencils
    w_of(t)?;
    let dw_of = |s: f64| -> AmbientVector {
        sf.covariant_derivative(
            |x| curve.point(x),
            |x| w_of(x).unwrap_or_else(|_| nan()),
            s,
            h,
        )
        .unwrap_or_else(|_| nan())
    };
    let speed_and_vel = |s: f64| {
        let j = curve.jet(s, cfg);
        let v = sf.project_tangent(&j.pos, &j.vel);
        (sf.norm(&v), v)
    };
    let second = sf.covariant_derivative(
        |x| curve.point(x),
        |x| {
            let (s, _) = speed_and_vel(x);
            dw_of(x) * s.powf(p - 2.0)
        },
        t,
        h,
    )?;
    let third = if p == 2.0 {
        DVector::zeros(e)
    } else {
        sf.covariant_derivative(
            |x| curve.point(x),
            |x| {
                let (s, v) = speed_and_vel(x);
                let coef = s.powf(p - 4.0) * sf.inner(&dw_of(x), &v);
                v * coef
            },
            t,
            h,
        )? * (p - 2.0)
    };
    let jet = curve.jet(t, cfg);
    let tp = tension_from_jet(&sf, &jet, p)?;
    let (s, v) = speed_and_vel(t);
    let l = s.powf(p - 2.0);
    let n = sf.norm(&tp);
    let rc = sf.curvature_unchecked(&tp, &v, &v);
    let out = rc * (-l * n.powf(q - 2.0)) - second - third;
    if out.iter().any(|x| !x.is_finite()) {
        return Err(GeomError::Numeric(format!(
            "non-finite (p,q)-tension at t = {t}"
        )));
    }
    Ok(out)
}

/// Compactly supported variation field `φ(t) Π_γ(w)`.
///
/// `φ` is the standard bump `exp(1 - 1/(1 - s²))`, `s = (t - centre)/halfwidth`,
/// and `Π_γ` projects the fixed ambient vector `w` onto `T_γ N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationField {
    pub centre: f64,
    pub halfwidth: f64,
    pub direction: Vec<f64>,
}

impl VariationField {
    pub fn bump(centre: f64, halfwidth: f64, direction: Vec<f64>) -> Result<Self> {
        if !(halfwidth > 0.0) || direction.iter().any(|x| !x.is_finite()) {
            return Err(GeomError::InvalidParameter(
                "bump needs halfwidth > 0 and a finite direction".into(),
            ));
        }
        Ok(Self {
            centre,
            halfwidth,
            direction,
        })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.centre - self.halfwidth, self.centre + self.halfwidth)
    }

    /// `(φ, φ', φ'')` in `t`.
    fn profile(&self, t: f64) -> (f64, f64, f64) {
        let hw = self.halfwidth;
        let s = (t - self.centre) / hw;
        let d = 1.0 - s * s;
        if d <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let phi = (1.0 - 1.0 / d).exp();
        let g1 = -2.0 * s / (d * d);
        let g2 = -(2.0 + 6.0 * s * s) / (d * d * d);
        (phi, g1 * phi / hw, (g2 + g1 * g1) * phi / (hw * hw))
    }

    /// Field value and its first two `t`-derivatives along the curve jet.
    pub fn jet(&self, sf: &SpaceForm, curve: &CurveJet, t: f64) -> CurveJet {
        let w = DVector::from_column_slice(&self.direction);
        let (phi, dphi, ddphi) = self.profile(t);
        let c = sf.curvature();
        let (g, g1, g2) = (&curve.pos, &curve.vel, &curve.acc);
        let (ip0, ip1, ip2) = if c == 0.0 {
            (0.0, 0.0, 0.0)
        } else {
            (sf.inner(g, &w), sf.inner(g1, &w), sf.inner(g2, &w))
        };
        let pi0 = &w - g * (c * ip0);
        let pi1 = -(g * ip1 + g1 * ip0) * c;
        let pi2 = -(g * ip2 + g1 * (2.0 * ip1) + g2 * ip0) * c;
        CurveJet {
            pos: &pi0 * phi,
            vel: &pi1 * phi + &pi0 * dphi,
            acc: &pi2 * phi + &pi1 * (2.0 * dphi) + &pi0 * ddphi,
        }
    }

    pub fn value(&self, sf: &SpaceForm, curve: &CurveJet, t: f64) -> AmbientVector {
        self.jet(sf, curve, t).pos
    }
}

/// `γ_ε = retract(γ + ε v)` with an exact jet.
pub fn varied_curve(
    curve: &CurveChart,
    field: &VariationField,
    eps: f64,
    cfg: &CurveConfig,
) -> Result<CurveChart> {
    let sf = *curve.space_form();
    let (base, f, c) = (curve.clone(), field.clone(), *cfg);
    let jet: CurveJetFn = Arc::new(move |t| {
        let g = base.jet(t, &c);
        let v = f.jet(&sf, &g, t);
        let y = CurveJet {
            pos: &g.pos + &v.pos * eps,
            vel: &g.vel + &v.vel * eps,
            acc: &g.acc + &v.acc * eps,
        };
        sf.retract_jet(&y).unwrap_or_else(|_| {
            let nan = DVector::from_element(y.pos.len(), f64::NAN);
            CurveJet {
                pos: nan.clone(),
                vel: nan.clone(),
                acc: nan,
            }
        })
    });
    let j2 = jet.clone();
    let map: CurveMapFn = Arc::new(move |t| j2(t).pos);
    Ok(CurveChart::new(
        format!("{}+{eps:e}v", curve.name()),
        sf,
        curve.domain(),
        map,
    )?
    .with_jet(jet))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationCheckReport {
    /// Richardson-extrapolated `d/dε E(γ_ε)` at `ε = 0`.
    pub lhs: f64,
    /// `-∫ <v, τ_pq> dt`.
    pub rhs: f64,
    pub rel_error: f64,
    /// `log_r |D1 - D2| / |D2 - D3|`; `None` with fewer than three steps or
    /// when the sequence is step independent.
    pub observed_order: Option<f64>,
    /// All central differences agree to roundoff: the energy is quadratic in
    /// `ε` along this variation and there is no truncation term to measure.
    pub step_independent: bool,
    pub eps: Vec<f64>,
    pub derivatives: Vec<f64>,
    pub field_sup_norm: f64,
}

/// Compare the numerical derivative of the energy along `γ_ε` with `-∫<v, τ_pq>`.
///
/// `steps` are central-difference steps before scaling by `1/‖v‖_∞`, in
/// decreasing order with a constant ratio.
pub fn first_variation_check(
    curve: &DiscretizedCurve,
    field: &VariationField,
    params: &PQParams,
    steps: &[f64],
    cfg: &CurveConfig,
) -> Result<VariationCheckReport> {
    let chart = &curve.curve;
    let sf = *chart.space_form();
    let (a, b) = chart.domain();
    let (lo, hi) = field.support();
    if !(lo > a && hi < b) {
        return Err(GeomError::InvalidParameter(format!(
            "variation support [{lo}, {hi}] must lie inside the open interval ({a}, {b})"
        )));
    }
    if field.direction.len() != sf.embedding_dim() {
        return Err(GeomError::Contract(format!(
            "direction has {} components, ambient has {}",
            field.direction.len(),
            sf.embedding_dim()
        )));
    }
    if steps.len() < 2 || steps.windows(2).any(|w| !(w[1] < w[0] && w[1] > 0.0)) {
        return Err(GeomError::InvalidParameter(
            "need at least two positive decreasing steps".into(),
        ));
    }
    let values: Vec<AmbientVector> = curve
        .ts
        .iter()
        .map(|&t| field.value(&sf, &chart.jet(t, cfg), t))
        .collect();
    let sup = values.iter().map(|v| sf.norm(v)).fold(0.0, f64::max);
    if !(sup > 0.0) {
        return Err(GeomError::InvalidParameter(
            "variation field vanishes on every node".into(),
        ));
    }

    let mut derivatives = Vec::with_capacity(steps.len());
    let mut eps_list = Vec::with_capacity(steps.len());
    for &h in steps {
        let eps = h / sup;
        let plus = energy_pq(
            &curve.with_curve(varied_curve(chart, field, eps, cfg)?),
            params,
            cfg,
        )?;
        let minus = energy_pq(
            &curve.with_curve(varied_curve(chart, field, -eps, cfg)?),
            params,
            cfg,
        )?;
        derivatives.push((plus - minus) / (2.0 * eps));
        eps_list.push(eps);
    }
    let n = derivatives.len();
    let r2 = (steps[n - 2] / steps[n - 1]).powi(2);
    let lhs = (r2 * derivatives[n - 1] - derivatives[n - 2]) / (r2 - 1.0);
    let spread = derivatives
        .iter()
        .map(|d| (d - derivatives[n - 1]).abs())
        .fold(0.0, f64::max);
    let step_independent =
        spread <= 1e-10 * derivatives.iter().map(|d| d.abs()).fold(0.0, f64::max);
    let observed_order = if n >= 3 && !step_independent {
        let (d1, d2, d3) = (derivatives[n - 3], derivatives[n - 2], derivatives[n - 1]);
        let ratio = ((d1 - d2) / (d2 - d3)).abs();
        let base = steps[n - 3] / steps[n - 2];
        let order = ratio.ln() / base.ln();
        order.is_finite().then_some(order)
    } else {
        None
    };

    let mut rhs = 0.0;
    for ((&t, w), v) in curve.ts.iter().zip(&curve.weights).zip(&values) {
        if t <= lo || t >= hi {
            continue;
        }
        let tpq = tension_pq_curve(chart, t, params, cfg)?;
        rhs -= w * sf.inner(v, &tpq);
    }
    let rel_error = (lhs - rhs).abs() / rhs.abs().max(1e-14);
    Ok(VariationCheckReport {
        lhs,
        rhs,
        rel_error,
        observed_order,
        step_independent,
        eps: eps_list,
        derivatives,
        field_sup_norm: sup,
    })
}
