//! Built-in charts with exact jets, closed-form geometry and expected outcomes.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;
use serde::Serialize;

use crate::curves::{self, CurveChart, CurveConfig, CurveJetFn, CurveMapFn, Helix};
use crate::error::{GeomError, Result};
use crate::immersion::{GeometricSample, ImmersionChart, Orientation, ParamBox, SurfaceJet};
use crate::spaceform::{CurveJet, SpaceForm};

/// Smallest admissible lower bound of the cone's radial parameter.
pub const CONE_U_MIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryKind {
    Hypersurface,
    Curve,
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub kind: EntryKind,
    pub ambient: &'static str,
    pub params: &'static [&'static str],
    pub expectation: &'static str,
}

pub fn entries() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "sphere-in-sphere",
            kind: EntryKind::Hypersurface,
            ambient: "S^{m+1}",
            params: &["m", "a2"],
            expectation: "proper (p,q)-harmonic iff p = 1/b^2 with b^2 = 1 - a^2, any q; f = -b/a",
        },
        CatalogEntry {
            name: "cone",
            kind: EntryKind::Hypersurface,
            ambient: "R^3",
            params: &["r"],
            expectation: "proper (p,q)-harmonic iff (p, r) = (2(1-1/q), 1/sqrt(q(q-1))); admissible (p > 1) only for q > 2",
        },
        CatalogEntry {
            name: "plane",
            kind: EntryKind::Hypersurface,
            ambient: "R^3",
            params: &[],
            expectation: "minimal for every (p,q)",
        },
        CatalogEntry {
            name: "great-sphere",
            kind: EntryKind::Hypersurface,
            ambient: "S^{m+1}",
            params: &["m"],
            expectation: "minimal for every (p,q)",
        },
        CatalogEntry {
            name: "helix",
            kind: EntryKind::Curve,
            ambient: "S^3",
            params: &["alpha", "a", "b"],
            expectation: "k = sqrt((a^2-1)(1-b^2)), tau = ab, proper iff p = (a^2+b^2-2a^2b^2)/((a^2-1)(1-b^2)) > 1",
        },
        CatalogEntry {
            name: "circle",
            kind: EntryKind::Curve,
            ambient: "R^3",
            params: &["rho"],
            expectation: "k = 1/rho, tau = 0; closed-form p = 1, so never proper for p > 1",
        },
        CatalogEntry {
            name: "great-circle",
            kind: EntryKind::Curve,
            ambient: "S^3",
            params: &[],
            expectation: "geodesic (k = 0): minimal for every (p,q)",
        },
    ]
}

/// One factor of a hyperspherical coordinate product.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Trig {
    One,
    Cos,
    Sin,
}

impl Trig {
    /// Value and first two derivatives at `x`.
    fn eval(self, x: f64) -> [f64; 3] {
        match self {
            Trig::One => [1.0, 0.0, 0.0],
            Trig::Cos => [x.cos(), -x.sin(), -x.cos()],
            Trig::Sin => [x.sin(), x.cos(), -x.sin()],
        }
    }
}

/// Factors of the unit `m`-sphere chart `y(θ) ∈ R^{m+1}`:
/// `y_1 = cos θ_1`, `y_2 = sin θ_1 cos θ_2`, …, `y_{m+1} = sin θ_1 ⋯ sin θ_m`.
fn sphere_factors(m: usize) -> Vec<Vec<Trig>> {
    (0..=m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    if j < i {
                        Trig::Sin
                    } else if j == i {
                        Trig::Cos
                    } else {
                        Trig::One
                    }
                })
                .collect()
        })
        .collect()
}

fn unit_sphere_jet(factors: &[Vec<Trig>], th: &[f64]) -> SurfaceJet {
    let m = th.len();
    let e = factors.len();
    let vals: Vec<Vec<[f64; 3]>> = factors
        .iter()
        .map(|row| row.iter().zip(th).map(|(f, &x)| f.eval(x)).collect())
        .collect();
    // product over j of vals[i][j][order_j]
    let prod = |i: usize, orders: &dyn Fn(usize) -> usize| {
        (0..m).map(|j| vals[i][j][orders(j)]).product::<f64>()
    };
    let point = DVector::from_fn(e, |i, _| prod(i, &|_| 0));
    let d1 = (0..m)
        .map(|a| DVector::from_fn(e, |i, _| prod(i, &|j| usize::from(j == a))))
        .collect();
    let d2 = (0..m)
        .map(|a| {
            (0..m)
                .map(|b| {
                    DVector::from_fn(e, |i, _| {
                        prod(i, &|j| usize::from(j == a) + usize::from(j == b))
                    })
                })
                .collect()
        })
        .collect();
    SurfaceJet { point, d1, d2 }
}

/// Diagonal of the round metric in hyperspherical angles: `Π_{j<a} sin² θ_j`.
fn round_metric(th: &[f64]) -> Vec<f64> {
    let mut acc = 1.0;
    th.iter()
        .map(|x| {
            let g = acc;
            acc *= x.sin().powi(2);
            g
        })
        .collect()
}

fn diag(v: &[f64]) -> Vec<Vec<f64>> {
    (0..v.len())
        .map(|i| {
            (0..v.len())
                .map(|j| if i == j { v[i] } else { 0.0 })
                .collect()
        })
        .collect()
}

fn sphere_domain(m: usize) -> Result<ParamBox> {
    let mut lo = vec![0.4; m];
    let mut hi = vec![PI - 0.4; m];
    lo[m - 1] = 0.0;
    hi[m - 1] = 6.0;
    ParamBox::new(lo, hi)
}

/// `S^m(a) ⊂ S^{m+1}`: `X = (a y, b)` with `b = √(1 - a²)` and normal `(b y, -a)`.
pub fn sphere_in_sphere(m: usize, a2: f64) -> Result<ImmersionChart> {
    if !(1..=16).contains(&m) {
        return Err(GeomError::InvalidParameter(format!(
            "sphere-in-sphere needs 1 <= m <= 16, got {m}"
        )));
    }
    if !(a2 > 0.0 && a2 < 1.0) {
        return Err(GeomError::InvalidParameter(format!(
            "sphere-in-sphere needs 0 < a^2 < 1, got {a2}"
        )));
    }
    round_sphere("sphere-in-sphere", m, a2)
}

/// Equatorial `S^m ⊂ S^{m+1}` (`a = 1`), totally geodesic.
pub fn great_sphere(m: usize) -> Result<ImmersionChart> {
    if !(1..=16).contains(&m) {
        return Err(GeomError::InvalidParameter(format!(
            "great-sphere needs 1 <= m <= 16, got {m}"
        )));
    }
    round_sphere("great-sphere", m, 1.0)
}

fn round_sphere(name: &str, m: usize, a2: f64) -> Result<ImmersionChart> {
    let a = a2.sqrt();
    let b = (1.0 - a2).max(0.0).sqrt();
    let factors = Arc::new(sphere_factors(m));
    let lift = move |j: SurfaceJet| {
        let e = j.point.len();
        let embed = |v: &DVector<f64>, last: f64| {
            let mut w = DVector::zeros(e + 1);
            w.rows_mut(0, e).copy_from(&(v * a));
            w[e] = last;
            w
        };
        SurfaceJet {
            point: embed(&j.point, b),
            d1: j.d1.iter().map(|v| embed(v, 0.0)).collect(),
            d2: j
                .d2
                .iter()
                .map(|row| row.iter().map(|v| embed(v, 0.0)).collect())
                .collect(),
        }
    };
    let fj = factors.clone();
    let jet = Arc::new(move |u: &[f64]| lift(unit_sphere_jet(&fj, u)));
    let jm = jet.clone();
    let map = Arc::new(move |u: &[f64]| jm(u).point);
    let fr = factors.clone();
    let reference = Arc::new(move |u: &[f64]| {
        let y = unit_sphere_jet(&fr, u).point;
        let e = y.len();
        let mut w = DVector::zeros(e + 1);
        w.rows_mut(0, e).copy_from(&(y * b));
        w[e] = -a;
        w
    });
    let f = -b / a;
    let analytic = Arc::new(move |u: &[f64]| GeometricSample {
        m,
        f,
        grad_f: vec![0.0; m],
        grad_f_norm2: 0.0,
        laplacian_f: 0.0,
        norm_a2: m as f64 * f * f,
        a_grad_f: vec![0.0; m],
        ric_eta_eta: m as f64,
        ricci_eta_top: vec![0.0; m],
        metric: diag(&round_metric(u).iter().map(|g| a2 * g).collect::<Vec<_>>()),
    });
    Ok(
        ImmersionChart::new(name, SpaceForm::unit_sphere(m + 1), sphere_domain(m)?, map)?
            .with_jet(jet)
            .with_orientation(Orientation::Reference(reference))
            .with_analytic(analytic),
    )
}

/// The family `θ = a ↦ S^m(θ) ⊂ S^{m+1}`.
pub fn sphere_family(m: usize) -> impl Fn(f64) -> Result<ImmersionChart> + Sync {
    move |a| sphere_in_sphere(m, a * a)
}

/// Cone `X(u, v) = (r u cos v, r u sin v, u)` in `R^3`, `u ∈ [0.5, 2]`.
pub fn cone(r: f64) -> Result<ImmersionChart> {
    cone_on(r, 0.5, 2.0)
}

pub fn cone_on(r: f64, u_lo: f64, u_hi: f64) -> Result<ImmersionChart> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(GeomError::InvalidParameter(format!(
            "cone needs r > 0, got {r}"
        )));
    }
    if !(u_lo >= CONE_U_MIN) {
        return Err(GeomError::InvalidParameter(format!(
            "cone domain must keep u >= {CONE_U_MIN} away from the apex"
        )));
    }
    let jet = Arc::new(move |x: &[f64]| {
        let (u, v) = (x[0], x[1]);
        let (c, s) = (v.cos(), v.sin());
        let vec3 = |a: f64, b: f64, z: f64| DVector::from_vec(vec![a, b, z]);
        SurfaceJet {
            point: vec3(r * u * c, r * u * s, u),
            d1: vec![vec3(r * c, r * s, 1.0), vec3(-r * u * s, r * u * c, 0.0)],
            d2: vec![
                vec![vec3(0.0, 0.0, 0.0), vec3(-r * s, r * c, 0.0)],
                vec![vec3(-r * s, r * c, 0.0), vec3(-r * u * c, -r * u * s, 0.0)],
            ],
        }
    });
    let jm = jet.clone();
    let map = Arc::new(move |x: &[f64]| jm(x).point);
    let w = 1.0 + r * r;
    let analytic = Arc::new(move |x: &[f64]| {
        let u = x[0];
        let big_c = 1.0 / (2.0 * r * w.sqrt());
        let df_du = -big_c / (u * u);
        GeometricSample {
            m: 2,
            f: big_c / u,
            grad_f: vec![df_du / w, 0.0],
            grad_f_norm2: df_du * df_du / w,
            laplacian_f: big_c / (w * u * u * u),
            norm_a2: 1.0 / (r * r * w * u * u),
            a_grad_f: vec![0.0, 0.0],
            ric_eta_eta: 0.0,
            ricci_eta_top: vec![0.0, 0.0],
            metric: diag(&[w, r * r * u * u]),
        }
    });
    Ok(ImmersionChart::new(
        "cone",
        SpaceForm::euclidean(3),
        ParamBox::new(vec![u_lo, 0.0], vec![u_hi, 2.0 * PI])?,
        map,
    )?
    .with_jet(jet)
    .with_analytic(analytic))
}

/// The family `θ = r ↦ cone(r)`.
pub fn cone_family() -> impl Fn(f64) -> Result<ImmersionChart> + Sync {
    cone
}

/// Closed-form `(p, r)` of the proper cone at exponent `q`.
pub fn cone_expected(q: f64) -> (f64, f64) {
    (2.0 * (1.0 - 1.0 / q), 1.0 / (q * (q - 1.0)).sqrt())
}

/// Closed-form `p = 1/b²` of the proper sphere family.
pub fn sphere_expected_p(a2: f64) -> f64 {
    1.0 / (1.0 - a2)
}

/// `X(u, v) = (u, v, 0)` on `[-1, 1]²`.
pub fn plane() -> Result<ImmersionChart> {
    let jet = Arc::new(|x: &[f64]| {
        let z = DVector::zeros(3);
        SurfaceJet {
            point: DVector::from_vec(vec![x[0], x[1], 0.0]),
            d1: vec![
                DVector::from_vec(vec![1.0, 0.0, 0.0]),
                DVector::from_vec(vec![0.0, 1.0, 0.0]),
            ],
            d2: vec![vec![z.clone(), z.clone()], vec![z.clone(), z]],
        }
    });
    let map = Arc::new(|x: &[f64]| DVector::from_vec(vec![x[0], x[1], 0.0]));
    let analytic = Arc::new(|_: &[f64]| GeometricSample {
        m: 2,
        f: 0.0,
        grad_f: vec![0.0; 2],
        grad_f_norm2: 0.0,
        laplacian_f: 0.0,
        norm_a2: 0.0,
        a_grad_f: vec![0.0; 2],
        ric_eta_eta: 0.0,
        ricci_eta_top: vec![0.0; 2],
        metric: diag(&[1.0, 1.0]),
    });
    Ok(ImmersionChart::new(
        "plane",
        SpaceForm::euclidean(3),
        ParamBox::new(vec![-1.0; 2], vec![1.0; 2])?,
        map,
    )?
    .with_jet(jet)
    .with_analytic(analytic))
}

/// Unit-speed circle of radius `rho` in the plane `z = 0` of `R^3`.
pub fn circle(rho: f64) -> Result<CurveChart> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(GeomError::InvalidParameter(format!(
            "circle needs rho > 0, got {rho}"
        )));
    }
    let jet: CurveJetFn = Arc::new(move |t| {
        let (c, s) = ((t / rho).cos(), (t / rho).sin());
        CurveJet {
            pos: DVector::from_vec(vec![rho * c, rho * s, 0.0]),
            vel: DVector::from_vec(vec![-s, c, 0.0]),
            acc: DVector::from_vec(vec![-c / rho, -s / rho, 0.0]),
        }
    });
    let jm = jet.clone();
    let map: CurveMapFn = Arc::new(move |t| jm(t).pos);
    CurveChart::new(
        "circle",
        SpaceForm::euclidean(3),
        (0.0, 2.0 * PI * rho),
        map,
    )?
    .with_jet(jet)
    .with_unit_speed(&CurveConfig::default())
}

/// `t ↦ (cos t, sin t, 0, 0)` in the unit 3-sphere.
pub fn great_circle() -> Result<CurveChart> {
    let jet: CurveJetFn = Arc::new(|t| {
        let (c, s) = (t.cos(), t.sin());
        CurveJet {
            pos: DVector::from_vec(vec![c, s, 0.0, 0.0]),
            vel: DVector::from_vec(vec![-s, c, 0.0, 0.0]),
            acc: DVector::from_vec(vec![-c, -s, 0.0, 0.0]),
        }
    });
    let jm = jet.clone();
    let map: CurveMapFn = Arc::new(move |t| jm(t).pos);
    CurveChart::new(
        "great-circle",
        SpaceForm::unit_sphere(3),
        (0.0, 2.0 * PI),
        map,
    )?
    .with_jet(jet)
    .with_unit_speed(&CurveConfig::default())
}

pub fn helix(alpha: f64, a: f64, b: f64) -> Result<Helix> {
    curves::helix(alpha, a, b)
}

fn take(params: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    params
        .get(key)
        .copied()
        .ok_or_else(|| GeomError::InvalidParameter(format!("missing parameter '{key}'")))
}

fn take_dim(params: &BTreeMap<String, f64>, key: &str, default: usize) -> Result<usize> {
    match params.get(key) {
        None => Ok(default),
        Some(&x) if x >= 1.0 && x.fract() == 0.0 => Ok(x as usize),
        Some(&x) => Err(GeomError::InvalidParameter(format!(
            "'{key}' must be a positive integer, got {x}"
        ))),
    }
}

/// Build a hypersurface builtin by name.
pub fn hypersurface(name: &str, params: &BTreeMap<String, f64>) -> Result<ImmersionChart> {
    match name {
        "sphere-in-sphere" => sphere_in_sphere(take_dim(params, "m", 2)?, take(params, "a2")?),
        "great-sphere" => great_sphere(take_dim(params, "m", 2)?),
        "cone" => cone(take(params, "r")?),
        "plane" => plane(),
        other => Err(GeomError::InvalidParameter(format!(
            "unknown hypersurface builtin '{other}'"
        ))),
    }
}

/// Build a curve builtin by name. Helices also return their closed-form data.
pub fn curve(name: &str, params: &BTreeMap<String, f64>) -> Result<(CurveChart, Option<Helix>)> {
    match name {
        "helix" => {
            let h = helix(
                take(params, "alpha")?,
                take(params, "a")?,
                take(params, "b")?,
            )?;
            Ok((h.chart.clone(), Some(h)))
        }
        "circle" => Ok((circle(take(params, "rho")?)?, None)),
        "great-circle" => Ok((great_circle()?, None)),
        other => Err(GeomError::InvalidParameter(format!(
            "unknown curve builtin '{other}'"
        ))),
    }
}

pub fn is_curve(name: &str) -> bool {
    entries()
        .iter()
        .any(|e| e.name == name && e.kind == EntryKind::Curve)
}
