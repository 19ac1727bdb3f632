//! Frenet curves in 3-dimensional space forms and their (p,q)-harmonic system.
//!
//! The binormal completes `(T, N)` so that `det[P, T, N, B] > 0` on the
//! embedded models (`det[T, N, B] > 0` in `R^3`). With that choice the
//! helix `(cos α cos at, cos α sin at, sin α cos bt, sin α sin bt)` has
//! torsion `+ab`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::numerics::{fd, quad, roots};
use crate::residual::{Classification, PQParams};
use crate::spaceform::{AmbientPoint, AmbientVector, CurveJet, Model, SpaceForm};

/// Below this geodesic curvature the Frenet frame is undefined.
pub const K_THRESHOLD: f64 = 1e-8;
const UNIT_SPEED_TOL: f64 = 1e-8;
const MIN_SPEED: f64 = 1e-10;

pub type CurveMapFn = Arc<dyn Fn(f64) -> AmbientPoint + Send + Sync>;
pub type CurveJetFn = Arc<dyn Fn(f64) -> CurveJet + Send + Sync>;

/// Step sizes for curve derivatives, relative to the parameter interval length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveConfig {
    /// Derivatives of the map when no exact jet is supplied.
    pub jet_step_rel: f64,
    /// Derivatives of frame fields, `k` and `τ`.
    pub step_rel: f64,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self {
            jet_step_rel: 1e-2,
            step_rel: 1e-3,
        }
    }
}

#[derive(Clone)]
pub struct CurveChart {
    name: String,
    sf: SpaceForm,
    domain: (f64, f64),
    map: CurveMapFn,
    jet: Option<CurveJetFn>,
    unit_speed: bool,
}

impl fmt::Debug for CurveChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CurveChart")
            .field("name", &self.name)
            .field("sf", &self.sf)
            .field("domain", &self.domain)
            .field("exact_jet", &self.jet.is_some())
            .field("unit_speed", &self.unit_speed)
            .finish()
    }
}

impl CurveChart {
    pub fn new(
        name: impl Into<String>,
        sf: SpaceForm,
        domain: (f64, f64),
        map: CurveMapFn,
    ) -> Result<Self> {
        if sf.dim() != 3 {
            return Err(GeomError::InvalidParameter(format!(
                "curves live in 3-dimensional space forms, got dimension {}",
                sf.dim()
            )));
        }
        if !(domain.0 < domain.1) {
            return Err(GeomError::InvalidParameter(format!(
                "empty interval {domain:?}"
            )));
        }
        Ok(Self {
            name: name.into(),
            sf,
            domain,
            map,
            jet: None,
            unit_speed: false,
        })
    }

    pub fn with_jet(mut self, jet: CurveJetFn) -> Self {
        self.jet = Some(jet);
        self
    }

    /// Claim unit speed; the claim is checked on 64 sample points.
    pub fn with_unit_speed(mut self, cfg: &CurveConfig) -> Result<Self> {
        let (a, b) = self.domain;
        for i in 0..64 {
            let t = a + (b - a) * (i as f64 + 0.5) / 64.0;
            let s = self.speed(t, cfg);
            if (s - 1.0).abs() > UNIT_SPEED_TOL {
                return Err(GeomError::Contract(format!(
                    "curve '{}' has speed {s} at t = {t}",
                    self.name
                )));
            }
        }
        self.unit_speed = true;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space_form(&self) -> &SpaceForm {
        &self.sf
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn length_of_domain(&self) -> f64 {
        self.domain.1 - self.domain.0
    }

    pub fn is_unit_speed(&self) -> bool {
        self.unit_speed
    }

    pub fn has_exact_jet(&self) -> bool {
        self.jet.is_some()
    }

    pub fn point(&self, t: f64) -> AmbientPoint {
        (self.map)(t)
    }

    pub fn jet(&self, t: f64, cfg: &CurveConfig) -> CurveJet {
        if let Some(j) = &self.jet {
            return j(t);
        }
        let h = cfg.jet_step_rel * self.length_of_domain();
        CurveJet {
            pos: (self.map)(t),
            vel: fd::first(|s| (self.map)(t + s), h),
            acc: fd::second(|s| (self.map)(t + s), h),
        }
    }

    /// `|γ'(t)|`; without an exact jet the velocity uses the finer `step_rel` stencil.
    pub fn speed(&self, t: f64, cfg: &CurveConfig) -> f64 {
        let (pos, vel) = match &self.jet {
            Some(j) => {
                let j = j(t);
                (j.pos, j.vel)
            }
            None => {
                let h = cfg.step_rel * self.length_of_domain();
                ((self.map)(t), fd::first(|s| (self.map)(t + s), h))
            }
        };
        self.sf.norm(&self.sf.project_tangent(&pos, &vel))
    }

    /// Arc length over the whole parameter interval.
    pub fn length(&self, cfg: &CurveConfig) -> f64 {
        let (a, b) = self.domain;
        quad::adaptive_simpson(&|t| self.speed(t, cfg), a, b, 1e-13 * (b - a))
    }

    fn frame_step(&self, cfg: &CurveConfig) -> f64 {
        cfg.step_rel * self.length_of_domain()
    }

    fn reach(&self, cfg: &CurveConfig) -> f64 {
        let jet = if self.jet.is_some() {
            0.0
        } else {
            fd::REACH * cfg.jet_step_rel * self.length_of_domain()
        };
        2.0 * fd::REACH * self.frame_step(cfg) + jet
    }
}

/// `(T, N, B, k, τ)` with arc-length derivatives of `k` and `τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrenetApparatus {
    pub t: Vec<f64>,
    pub n: Vec<f64>,
    pub b: Vec<f64>,
    pub k: f64,
    pub tau: f64,
    pub k_prime: f64,
    pub k_second: f64,
    pub tau_prime: f64,
}

struct Frame {
    t: AmbientVector,
    n: AmbientVector,
    b: AmbientVector,
    k: f64,
}

fn frame_at(curve: &CurveChart, s: f64, cfg: &CurveConfig) -> Result<Frame> {
    let sf = &curve.sf;
    let jet = curve.jet(s, cfg);
    let t = sf.project_tangent(&jet.pos, &jet.vel);
    let acc = sf.project_tangent(&jet.pos, &jet.acc);
    // remove the tangential part left by a not-exactly-unit speed
    let acc = &acc - &t * (sf.inner(&acc, &t) / sf.inner(&t, &t));
    let k = sf.norm(&acc);
    if !(k >= K_THRESHOLD) {
        return Err(GeomError::FrameUndefined { k });
    }
    let n = acc / k;
    let b = match sf.model() {
        Model::Euclidean => sf.oriented_complement(&[&t, &n])?,
        _ => sf.oriented_complement(&[&jet.pos, &t, &n])?,
    };
    Ok(Frame { t, n, b, k })
}

/// `(T, N, B, k)` at `t` without the derivative data of [`frenet`].
pub fn frenet_frame(
    curve: &CurveChart,
    t: f64,
    cfg: &CurveConfig,
) -> Result<(AmbientVector, AmbientVector, AmbientVector, f64)> {
    let f = frame_at(curve, t, cfg)?;
    Ok((f.t, f.n, f.b, f.k))
}

fn nan_vec(len: usize) -> DVector<f64> {
    DVector::from_element(len, f64::NAN)
}

fn torsion_at(curve: &CurveChart, s: f64, cfg: &CurveConfig) -> Result<f64> {
    let fr = frame_at(curve, s, cfg)?;
    let e = curve.sf.embedding_dim();
    let dn = curve.sf.covariant_derivative(
        |x| curve.point(x),
        |x| {
            frame_at(curve, x, cfg)
                .map(|f| f.n)
                .unwrap_or_else(|_| nan_vec(e))
        },
        s,
        curve.frame_step(cfg),
    )?;
    let tau = curve.sf.inner(&dn, &fr.b);
    if !tau.is_finite() {
        return Err(GeomError::FrameUndefined { k: 0.0 });
    }
    Ok(tau)
}

/// Frenet apparatus of a unit-speed curve at parameter `t`.
pub fn frenet(curve: &CurveChart, t: f64, cfg: &CurveConfig) -> Result<FrenetApparatus> {
    if !curve.unit_speed {
        return Err(GeomError::Contract(format!(
            "curve '{}' is not unit speed; reparametrize first",
            curve.name
        )));
    }
    let reach = curve.reach(cfg);
    if t - reach < curve.domain.0 || t + reach > curve.domain.1 {
        return Err(GeomError::BoundaryProximity {
            point: vec![t],
            margin: reach,
        });
    }
    let fr = frame_at(curve, t, cfg)?;
    let tau = torsion_at(curve, t, cfg)?;
    let h = curve.frame_step(cfg);
    let k_of = |s: f64| frame_at(curve, s, cfg).map(|f| f.k).unwrap_or(f64::NAN);
    let tau_of = |s: f64| torsion_at(curve, s, cfg).unwrap_or(f64::NAN);
    let k_prime = fd::first(|s| k_of(t + s), h);
    let k_second = fd::second(|s| k_of(t + s), h);
    let tau_prime = fd::first(|s| tau_of(t + s), h);
    if ![k_prime, k_second, tau_prime].iter().all(|x| x.is_finite()) {
        return Err(GeomError::FrameUndefined { k: fr.k });
    }
    let to_vec = |v: &AmbientVector| v.iter().copied().collect();
    Ok(FrenetApparatus {
        t: to_vec(&fr.t),
        n: to_vec(&fr.n),
        b: to_vec(&fr.b),
        k: fr.k,
        tau,
        k_prime,
        k_second,
        tau_prime,
    })
}

/// Residuals `(r1, r2, r3)` of the curve system along `(T, N, B)`.
pub fn curve_system_residual(fr: &FrenetApparatus, params: &PQParams, c: f64) -> Result<[f64; 3]> {
    let (k, k1, k2, tau, tau1) = (fr.k, fr.k_prime, fr.k_second, fr.tau, fr.tau_prime);
    if !(k >= K_THRESHOLD) {
        return Err(GeomError::FrameUndefined { k });
    }
    let (p, q) = (params.p(), params.q());
    let r1 = (p * q - 1.0) * k.powf(q - 1.0) * k1;
    let r2 = c * k.powf(q - 1.0)
        + (q - 1.0) * (q - 2.0) * k.powf(q - 3.0) * k1 * k1
        + (q - 1.0) * k.powf(q - 2.0) * k2
        - k.powf(q + 1.0)
        - k.powf(q - 1.0) * tau * tau
        - (p - 2.0) * k.powf(q + 1.0);
    let r3 = 2.0 * (q - 1.0) * k.powf(q - 2.0) * k1 * tau + k.powf(q - 1.0) * tau1;
    let r = [r1, r2, r3];
    if r.iter().any(|x| !x.is_finite()) {
        return Err(GeomError::Numeric(format!(
            "curve residual overflow at k = {k:e}, q = {q}"
        )));
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormP {
    pub p: f64,
    /// `p > 1`, i.e. `c - τ² > 0`.
    pub admissible: bool,
}

/// The unique `p` making a constant-`(k, τ)` curve proper (p,q)-harmonic.
pub fn p_closed_form(k: f64, tau: f64, c: f64) -> Result<ClosedFormP> {
    if !(k > 0.0) {
        return Err(GeomError::InvalidParameter(format!("need k > 0, got {k}")));
    }
    let p = (c - tau * tau) / (k * k) + 1.0;
    Ok(ClosedFormP {
        p,
        admissible: p > 1.0,
    })
}

/// Unit-speed reparametrization by inverting the cumulative arc length.
pub fn reparametrize_arclength(curve: &CurveChart, cfg: &CurveConfig) -> Result<CurveChart> {
    let (a, b) = curve.domain;
    let panels = 64;
    let knots: Vec<f64> = (0..=panels)
        .map(|i| a + (b - a) * i as f64 / panels as f64)
        .collect();
    for i in 0..=4 * panels {
        let t = a + (b - a) * i as f64 / (4 * panels) as f64;
        let s = curve.speed(t, cfg);
        if !(s > MIN_SPEED) {
            return Err(GeomError::Domain(format!(
                "speed {s:e} vanishes at t = {t}"
            )));
        }
    }
    let base = curve.clone();
    let cfg_v = *cfg;
    let speed = move |t: f64| base.speed(t, &cfg_v);
    let tol = 1e-15 * (b - a);
    let mut cumulative = vec![0.0];
    for w in knots.windows(2) {
        let seg = quad::adaptive_simpson(&speed, w[0], w[1], tol);
        cumulative.push(cumulative.last().unwrap() + seg);
    }
    let total = *cumulative.last().unwrap();
    let inverse = {
        let speed = speed.clone();
        let knots = knots.clone();
        let cumulative = cumulative.clone();
        Arc::new(move |s: f64| -> f64 {
            if s <= 0.0 {
                return knots[0] + s / speed(knots[0]);
            }
            if s >= total {
                return knots[panels] + (s - total) / speed(knots[panels]);
            }
            let i = cumulative.partition_point(|&c| c <= s).clamp(1, panels) - 1;
            let (t0, t1) = (knots[i], knots[i + 1]);
            let target = s - cumulative[i];
            roots::monotone_newton(
                |t| quad::adaptive_simpson(&speed, t0, t, tol) - target,
                &speed,
                t0,
                t1,
                1e-15 * (b - a),
            )
            .unwrap_or(f64::NAN)
        })
    };
    let sf = curve.sf;
    let map_src = curve.clone();
    let inv = inverse.clone();
    let map: CurveMapFn = Arc::new(move |s| map_src.point(inv(s)));
    let jet_src = curve.clone();
    let jet_cfg = *cfg;
    let jet: CurveJetFn = Arc::new(move |s| {
        let t = inverse(s);
        let j = jet_src.jet(t, &jet_cfg);
        // chain rule with dt/ds = 1/|γ'|
        let v = sf.project_tangent(&j.pos, &j.vel);
        let sp2 = sf.inner(&v, &v);
        let sp = sp2.sqrt();
        let dsp = sf.inner(&j.vel, &j.acc) / sp;
        CurveJet {
            pos: j.pos,
            vel: &j.vel / sp,
            acc: &j.acc / sp2 - &j.vel * (dsp / (sp2 * sp)),
        }
    });
    CurveChart::new(format!("{}@arclength", curve.name), sf, (0.0, total), map)?
        .with_jet(jet)
        .with_unit_speed(cfg)
}

/// Helix in the unit 3-sphere with its closed-form invariants.
#[derive(Debug, Clone)]
pub struct Helix {
    pub chart: CurveChart,
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
    /// Factor applied to `(a, b)` to restore unit speed (1 when none was needed).
    pub rescale: f64,
    pub k: f64,
    pub tau: f64,
    pub p: f64,
    pub admissible: bool,
}

pub fn helix(alpha: f64, a: f64, b: f64) -> Result<Helix> {
    if !(alpha > 0.0 && alpha < std::f64::consts::FRAC_PI_2) {
        return Err(GeomError::InvalidParameter(format!(
            "alpha = {alpha} outside (0, pi/2)"
        )));
    }
    if (a - 1.0).abs() < 1e-12 || (b - 1.0).abs() < 1e-12 {
        return Err(GeomError::InvalidParameter(
            "a = 1 or b = 1 gives a geodesic (k = 0)".into(),
        ));
    }
    if !(a > b && b > 0.0) {
        return Err(GeomError::InvalidParameter(format!(
            "need a > b > 0, got a = {a}, b = {b}"
        )));
    }
    let (ca, sa) = (alpha.cos(), alpha.sin());
    let speed2 = a * a * ca * ca + b * b * sa * sa;
    let rescale = if (speed2 - 1.0).abs() > 1e-10 {
        1.0 / speed2.sqrt()
    } else {
        1.0
    };
    let (a, b) = (a * rescale, b * rescale);
    if !(a > 1.0 && b < 1.0) {
        return Err(GeomError::InvalidParameter(format!(
            "unit-speed helix needs a > 1 > b, got a = {a}, b = {b}"
        )));
    }
    let k = ((a * a - 1.0) * (1.0 - b * b)).sqrt();
    let tau = a * b;
    let p = (a * a + b * b - 2.0 * a * a * b * b) / ((a * a - 1.0) * (1.0 - b * b));
    let admissible = tau * tau < 1.0 && p > 1.0;
    let map: CurveMapFn = Arc::new(move |t| {
        DVector::from_vec(vec![
            ca * (a * t).cos(),
            ca * (a * t).sin(),
            sa * (b * t).cos(),
            sa * (b * t).sin(),
        ])
    });
    let jet: CurveJetFn = Arc::new(move |t| {
        let (c1, s1) = ((a * t).cos(), (a * t).sin());
        let (c2, s2) = ((b * t).cos(), (b * t).sin());
        CurveJet {
            pos: DVector::from_vec(vec![ca * c1, ca * s1, sa * c2, sa * s2]),
            vel: DVector::from_vec(vec![-a * ca * s1, a * ca * c1, -b * sa * s2, b * sa * c2]),
            acc: DVector::from_vec(vec![
                -a * a * ca * c1,
                -a * a * ca * s1,
                -b * b * sa * c2,
                -b * b * sa * s2,
            ]),
        }
    });
    let chart = CurveChart::new(
        "helix",
        SpaceForm::unit_sphere(3),
        (0.0, 2.0 * std::f64::consts::PI),
        map,
    )?
    .with_jet(jet)
    .with_unit_speed(&CurveConfig::default())?;
    Ok(Helix {
        chart,
        alpha,
        a,
        b,
        rescale,
        k,
        tau,
        p,
        admissible,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub k: f64,
    pub tau: f64,
    pub residual: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveReport {
    pub points: Vec<CurvePoint>,
    pub max_abs_residual: [f64; 3],
    pub min_k: f64,
    pub max_k: f64,
    pub classification: Classification,
    pub tolerance: f64,
}

/// Classify a unit-speed curve on `samples` interior points.
///
/// Points where the frame is undefined count as geodesic (`k = 0`, zero
/// residual); a curve geodesic everywhere is reported as `Minimal`.
pub fn classify_curve(
    curve: &CurveChart,
    params: &PQParams,
    samples: usize,
    tol: f64,
    cfg: &CurveConfig,
) -> Result<CurveReport> {
    if samples < 4 {
        return Err(GeomError::InvalidParameter(format!(
            "need at least 4 samples, got {samples}"
        )));
    }
    let (a, b) = curve.domain;
    let margin = 2.0 * curve.reach(cfg);
    let c = curve.sf.curvature();
    let ts: Vec<f64> = (0..samples)
        .map(|i| a + margin + (b - a - 2.0 * margin) * i as f64 / (samples - 1) as f64)
        .collect();
    let points = ts
        .par_iter()
        .map(|&t| match frenet(curve, t, cfg) {
            Ok(fr) => Ok(CurvePoint {
                t,
                k: fr.k,
                tau: fr.tau,
                residual: curve_system_residual(&fr, params, c)?,
            }),
            Err(GeomError::FrameUndefined { .. }) => Ok(CurvePoint {
                t,
                k: 0.0,
                tau: 0.0,
                residual: [0.0; 3],
            }),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut max_abs_residual = [0.0f64; 3];
    for p in &points {
        for (m, r) in max_abs_residual.iter_mut().zip(p.residual) {
            *m = m.max(r.abs());
        }
    }
    let min_k = points.iter().map(|p| p.k).fold(f64::INFINITY, f64::min);
    let max_k = points.iter().map(|p| p.k).fold(0.0, f64::max);
    let worst = max_abs_residual.iter().copied().fold(0.0, f64::max);
    let classification = Classification::decide(min_k, max_k, worst, tol.max(K_THRESHOLD));
    Ok(CurveReport {
        points,
        max_abs_residual,
        min_k,
        max_k,
        classification,
        tolerance: tol,
    })
}
