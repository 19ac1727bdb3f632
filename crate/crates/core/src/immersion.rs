//! Pointwise geometry of a parametrized hypersurface patch.
//!
//! Conventions: `B_ij = h(∇_{∂i} ∂j X, η)`, `A = g⁻¹ B`, `f = tr(A) / m`,
//! `Δf = (1/√det g) ∂_a(√det g g^{ab} ∂_b f)`. With these, the round
//! hypersphere `S^m(a) ⊂ S^{m+1}` with its outward-tilted normal has
//! `A = -(1/r) Id` and the cone in `R^3` has positive `f` and `Δf`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::numerics::fd;
use crate::spaceform::{AmbientPoint, AmbientVector, Model, SpaceForm};

/// Smallest admissible `det g`.
pub const DET_G_MIN: f64 = 1e-10;

pub type MapFn = Arc<dyn Fn(&[f64]) -> AmbientPoint + Send + Sync>;
pub type JetFn = Arc<dyn Fn(&[f64]) -> SurfaceJet + Send + Sync>;
pub type NormalFn = Arc<dyn Fn(&[f64]) -> AmbientVector + Send + Sync>;
pub type AnalyticFn = Arc<dyn Fn(&[f64]) -> GeometricSample + Send + Sync>;

/// Map value with first and second partial derivatives.
#[derive(Debug, Clone)]
pub struct SurfaceJet {
    pub point: AmbientPoint,
    pub d1: Vec<AmbientVector>,
    /// Symmetric: `d2[a][b] = ∂_a ∂_b X`.
    pub d2: Vec<Vec<AmbientVector>>,
}

#[derive(Clone)]
pub enum Orientation {
    /// `det[P, ∂_1 X, …, ∂_m X, η] > 0` (drop `P` in the Euclidean model).
    Natural,
    Flipped,
    /// Pick the sign with `h(η, reference) > 0`.
    Reference(NormalFn),
}

impl fmt::Debug for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Orientation::Natural => write!(f, "Natural"),
            Orientation::Flipped => write!(f, "Flipped"),
            Orientation::Reference(_) => write!(f, "Reference"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ParamBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(GeomError::InvalidParameter(format!(
                "bad domain box {lo:?} .. {hi:?}"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn width(&self, a: usize) -> f64 {
        self.hi[a] - self.lo[a]
    }
}

/// Which route `geometric_sample` takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SamplePath {
    /// Closed forms when the chart has them, stencil otherwise.
    #[default]
    Auto,
    Analytic,
    Stencil,
}

/// Finite-difference settings of the derivative engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeConfig {
    /// Step for derivatives of `f` and of the metric, relative to each axis width.
    pub step_rel: f64,
    /// Step for derivatives of the map itself when the chart has no exact jet.
    pub jet_step_rel: f64,
    pub path: SamplePath,
}

impl Default for DerivativeConfig {
    fn default() -> Self {
        Self {
            step_rel: 1e-3,
            jet_step_rel: 1e-2,
            path: SamplePath::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstFundamental {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub det_g: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapePacket {
    pub eta: AmbientVector,
    /// Second fundamental form `B_ij`.
    pub b: DMatrix<f64>,
    /// Shape operator `A = g⁻¹ B` acting on chart coefficients.
    pub a: DMatrix<f64>,
    pub f: f64,
    pub norm_a2: f64,
}

/// Every pointwise quantity the residual system consumes.
///
/// Tangent vectors are stored as chart-basis coefficients; `metric` is kept
/// so that they can be measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometricSample {
    pub m: usize,
    pub f: f64,
    pub grad_f: Vec<f64>,
    pub grad_f_norm2: f64,
    pub laplacian_f: f64,
    pub norm_a2: f64,
    pub a_grad_f: Vec<f64>,
    pub ric_eta_eta: f64,
    pub ricci_eta_top: Vec<f64>,
    pub metric: Vec<Vec<f64>>,
}

impl GeometricSample {
    pub fn metric_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.m, self.m, |i, j| self.metric[i][j])
    }

    /// `g(x, x)` for chart coefficients.
    pub fn norm2(&self, x: &[f64]) -> f64 {
        let g = self.metric_matrix();
        let v = DVector::from_column_slice(x);
        (v.transpose() * g * &v)[(0, 0)]
    }

    /// The same point seen with the opposite unit normal.
    pub fn flipped(&self) -> Self {
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        Self {
            f: -self.f,
            grad_f: neg(&self.grad_f),
            laplacian_f: -self.laplacian_f,
            ricci_eta_top: neg(&self.ricci_eta_top),
            ..self.clone()
        }
    }

    pub fn is_finite(&self) -> bool {
        let scalars = [
            self.f,
            self.grad_f_norm2,
            self.laplacian_f,
            self.norm_a2,
            self.ric_eta_eta,
        ];
        scalars.iter().all(|x| x.is_finite())
            && self
                .grad_f
                .iter()
                .chain(&self.a_grad_f)
                .chain(&self.ricci_eta_top)
                .all(|x| x.is_finite())
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// Everything computable at one parameter point from the map's 2-jet.
#[derive(Debug, Clone)]
struct Local {
    ff: FirstFundamental,
    shape: ShapePacket,
}

/// A parametrized hypersurface patch in a space form.
#[derive(Clone)]
pub struct ImmersionChart {
    name: String,
    sf: SpaceForm,
    domain: ParamBox,
    map: MapFn,
    jet: Option<JetFn>,
    orientation: Orientation,
    analytic: Option<AnalyticFn>,
}

impl fmt::Debug for ImmersionChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImmersionChart")
            .field("name", &self.name)
            .field("sf", &self.sf)
            .field("domain", &self.domain)
            .field("exact_jet", &self.jet.is_some())
            .field("orientation", &self.orientation)
            .field("analytic", &self.analytic.is_some())
            .finish()
    }
}

impl ImmersionChart {
    pub fn new(
        name: impl Into<String>,
        sf: SpaceForm,
        domain: ParamBox,
        map: MapFn,
    ) -> Result<Self> {
        if domain.dim() + 1 != sf.dim() {
            return Err(GeomError::InvalidParameter(format!(
                "hypersurface of dimension {} in ambient of dimension {}",
                domain.dim(),
                sf.dim()
            )));
        }
        Ok(Self {
            name: name.into(),
            sf,
            domain,
            map,
            jet: None,
            orientation: Orientation::Natural,
            analytic: None,
        })
    }

    pub fn with_jet(mut self, jet: JetFn) -> Self {
        self.jet = Some(jet);
        self
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn with_analytic(mut self, analytic: AnalyticFn) -> Self {
        self.analytic = Some(analytic);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space_form(&self) -> &SpaceForm {
        &self.sf
    }

    pub fn m(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &ParamBox {
        &self.domain
    }

    pub fn has_analytic(&self) -> bool {
        self.analytic.is_some()
    }

    pub fn has_exact_jet(&self) -> bool {
        self.jet.is_some()
    }

    pub fn point(&self, u: &[f64]) -> AmbientPoint {
        (self.map)(u)
    }

    /// Per-axis step of the outer stencil (derivatives of `f` and `g`).
    pub fn steps(&self, cfg: &DerivativeConfig) -> Vec<f64> {
        (0..self.m())
            .map(|a| cfg.step_rel * self.domain.width(a))
            .collect()
    }

    /// How far any evaluation of `geometric_sample` reaches from `u`, per axis.
    pub fn stencil_reach(&self, cfg: &DerivativeConfig) -> Vec<f64> {
        (0..self.m())
            .map(|a| {
                let w = self.domain.width(a);
                let jet = if self.jet.is_some() {
                    0.0
                } else {
                    fd::REACH * cfg.jet_step_rel * w
                };
                fd::REACH * cfg.step_rel * w + jet
            })
            .collect()
    }

    /// Default sampling margin: two stencil widths.
    pub fn margin(&self, cfg: &DerivativeConfig) -> Vec<f64> {
        self.stencil_reach(cfg)
            .into_iter()
            .map(|r| 2.0 * r)
            .collect()
    }

    fn check_interior(&self, u: &[f64], reach: &[f64]) -> Result<()> {
        if u.len() != self.m() {
            return Err(GeomError::Contract(format!(
                "parameter point has {} coordinates, chart needs {}",
                u.len(),
                self.m()
            )));
        }
        for a in 0..self.m() {
            if u[a] - reach[a] < self.domain.lo[a] || u[a] + reach[a] > self.domain.hi[a] {
                return Err(GeomError::BoundaryProximity {
                    point: u.to_vec(),
                    margin: reach[a],
                });
            }
        }
        Ok(())
    }

    /// The map's 2-jet, exact when the chart supplies one.
    pub fn jet(&self, u: &[f64], cfg: &DerivativeConfig) -> SurfaceJet {
        if let Some(j) = &self.jet {
            return j(u);
        }
        let m = self.m();
        let h: Vec<f64> = (0..m)
            .map(|a| cfg.jet_step_rel * self.domain.width(a))
            .collect();
        let shifted = |pairs: &[(usize, f64)]| {
            let mut v = u.to_vec();
            for &(a, s) in pairs {
                v[a] += s;
            }
            (self.map)(&v)
        };
        let d1: Vec<_> = (0..m)
            .map(|a| fd::first(|s| shifted(&[(a, s)]), h[a]))
            .collect();
        let mut d2 = vec![vec![DVector::zeros(0); m]; m];
        for a in 0..m {
            d2[a][a] = fd::second(|s| shifted(&[(a, s)]), h[a]);
            for b in 0..a {
                let mixed =
                    fd::mixed(|s, r| shifted(&[(a, s * h[a]), (b, r * h[b])]), 1.0) / (h[a] * h[b]);
                d2[a][b] = mixed.clone();
                d2[b][a] = mixed;
            }
        }
        SurfaceJet {
            point: (self.map)(u),
            d1,
            d2,
        }
    }

    fn metric_from_jet(&self, jet: &SurfaceJet) -> Result<FirstFundamental> {
        let m = self.m();
        // the ambient derivative of an on-model map is tangent; projecting strips FD noise
        let d1: Vec<_> = jet
            .d1
            .iter()
            .map(|d| self.sf.project_tangent(&jet.point, d))
            .collect();
        let g = DMatrix::from_fn(m, m, |i, j| self.sf.inner(&d1[i], &d1[j]));
        let det_g = g.determinant();
        if !(det_g > DET_G_MIN) {
            return Err(GeomError::DegenerateImmersion { det_g });
        }
        let g_inv = g
            .clone()
            .try_inverse()
            .ok_or(GeomError::DegenerateImmersion { det_g })?;
        Ok(FirstFundamental { g, g_inv, det_g })
    }

    fn normal_from_jet(&self, u: &[f64], jet: &SurfaceJet) -> Result<AmbientVector> {
        let mut span: Vec<&DVector<f64>> = Vec::with_capacity(self.m() + 1);
        if self.sf.model() != Model::Euclidean {
            span.push(&jet.point);
        }
        span.extend(jet.d1.iter());
        let eta = self.sf.oriented_complement(&span)?;
        Ok(match &self.orientation {
            Orientation::Natural => eta,
            Orientation::Flipped => -eta,
            Orientation::Reference(r) => {
                if self.sf.inner(&eta, &r(u)) < 0.0 {
                    -eta
                } else {
                    eta
                }
            }
        })
    }

    fn local(&self, u: &[f64], cfg: &DerivativeConfig) -> Result<Local> {
        let jet = self.jet(u, cfg);
        self.sf.check_point(&jet.point)?;
        let ff = self.metric_from_jet(&jet)?;
        let eta = self.normal_from_jet(u, &jet)?;
        let m = self.m();
        let b = DMatrix::from_fn(m, m, |i, j| self.sf.inner(&jet.d2[i][j], &eta));
        let b = (&b + b.transpose()) * 0.5;
        let a = &ff.g_inv * &b;
        let f = a.trace() / m as f64;
        // |A|^2 as the squared spectrum of L⁻¹ B L⁻ᵀ with g = L Lᵀ
        let chol = nalgebra::Cholesky::new(ff.g.clone())
            .ok_or(GeomError::DegenerateImmersion { det_g: ff.det_g })?;
        let l_inv = chol
            .l()
            .try_inverse()
            .ok_or(GeomError::DegenerateImmersion { det_g: ff.det_g })?;
        let sym = &l_inv * &b * l_inv.transpose();
        let norm_a2 = sym.symmetric_eigenvalues().iter().map(|l| l * l).sum();
        Ok(Local {
            ff,
            shape: ShapePacket {
                eta,
                b,
                a,
                f,
                norm_a2,
            },
        })
    }

    pub fn first_fundamental(&self, u: &[f64], cfg: &DerivativeConfig) -> Result<FirstFundamental> {
        let jet = self.jet(u, cfg);
        self.metric_from_jet(&jet)
    }

    pub fn unit_normal(&self, u: &[f64], cfg: &DerivativeConfig) -> Result<AmbientVector> {
        let jet = self.jet(u, cfg);
        self.metric_from_jet(&jet)?;
        self.normal_from_jet(u, &jet)
    }

    pub fn shape_packet(&self, u: &[f64], cfg: &DerivativeConfig) -> Result<ShapePacket> {
        Ok(self.local(u, cfg)?.shape)
    }

    /// The closed-form sample, if the chart carries one.
    pub fn analytic_sample(&self, u: &[f64]) -> Option<GeometricSample> {
        self.analytic.as_ref().map(|a| a(u))
    }

    /// Sample by the route selected in `cfg`.
    pub fn geometric_sample(&self, u: &[f64], cfg: &DerivativeConfig) -> Result<GeometricSample> {
        match (cfg.path, &self.analytic) {
            (SamplePath::Stencil, _) | (SamplePath::Auto, None) => self.stencil_sample(u, cfg),
            (_, Some(a)) => {
                self.check_interior(u, &vec![0.0; self.m()])?;
                Ok(a(u))
            }
            (SamplePath::Analytic, None) => Err(GeomError::Contract(format!(
                "chart '{}' has no closed-form geometry",
                self.name
            ))),
        }
    }

    /// Sample from finite differences of `f` and `√det g g⁻¹` on a local stencil.
    pub fn stencil_sample(&self, u: &[f64], cfg: &DerivativeConfig) -> Result<GeometricSample> {
        self.check_interior(u, &self.stencil_reach(cfg))?;
        let m = self.m();
        let h = self.steps(cfg);
        let at = |pairs: &[(usize, f64)]| {
            let mut v = u.to_vec();
            for &(a, s) in pairs {
                v[a] += s;
            }
            v
        };
        let centre = self.local(u, cfg)?;
        // errors inside the stencil surface as NaN and are caught below
        let f_at = |pairs: &[(usize, f64)]| {
            self.local(&at(pairs), cfg)
                .map(|l| l.shape.f)
                .unwrap_or(f64::NAN)
        };
        let dens_at = |pairs: &[(usize, f64)]| {
            self.local(&at(pairs), cfg)
                .map(|l| l.ff.g_inv * l.ff.det_g.sqrt())
                .unwrap_or_else(|_| DMatrix::from_element(m, m, f64::NAN))
        };

        let df = DVector::from_iterator(m, (0..m).map(|a| fd::first(|s| f_at(&[(a, s)]), h[a])));
        let mut hess = DMatrix::zeros(m, m);
        for a in 0..m {
            hess[(a, a)] = fd::second(|s| f_at(&[(a, s)]), h[a]);
            for b in 0..a {
                let v =
                    fd::mixed(|s, r| f_at(&[(a, s * h[a]), (b, r * h[b])]), 1.0) / (h[a] * h[b]);
                hess[(a, b)] = v;
                hess[(b, a)] = v;
            }
        }
        // Σ_a ∂_a(√det g g^{ab})
        let mut div_density = DVector::zeros(m);
        for a in 0..m {
            let d = fd::first(|s| dens_at(&[(a, s)]), h[a]);
            for b in 0..m {
                div_density[b] += d[(a, b)];
            }
        }
        let ff = &centre.ff;
        let sqrt_det = ff.det_g.sqrt();
        let laplacian_f = (&ff.g_inv * &hess).trace() + div_density.dot(&df) / sqrt_det;
        let grad = &ff.g_inv * &df;
        let grad_f_norm2 = df.dot(&grad).max(0.0);
        let a_grad = &centre.shape.a * &grad;
        let (ric, _) = self.sf.ricci_data(&centre.shape.eta);
        let sample = GeometricSample {
            m,
            f: centre.shape.f,
            grad_f: grad.iter().copied().collect(),
            grad_f_norm2,
            laplacian_f,
            norm_a2: centre.shape.norm_a2,
            a_grad_f: a_grad.iter().copied().collect(),
            ric_eta_eta: ric,
            ricci_eta_top: vec![0.0; m],
            metric: matrix_rows(&ff.g),
        };
        if !sample.is_finite() {
            return Err(GeomError::Numeric(format!(
                "non-finite stencil sample at {u:?}"
            )));
        }
        Ok(sample)
    }

    /// Uniform grid with `n` points per axis, shrunk by `margin` on each side.
    pub fn grid(&self, spec: &GridSpec, cfg: &DerivativeConfig) -> Result<Vec<Vec<f64>>> {
        if spec.points_per_axis < 4 {
            return Err(GeomError::InvalidParameter(format!(
                "grid needs at least 4 points per axis, got {}",
                spec.points_per_axis
            )));
        }
        let min_margin = self.margin(cfg);
        let margin: Vec<f64> = match &spec.margin {
            Some(mg) => {
                if mg.len() != self.m() || mg.iter().zip(&min_margin).any(|(a, b)| a < b) {
                    return Err(GeomError::InvalidParameter(format!(
                        "margins {mg:?} below two stencil widths {min_margin:?}"
                    )));
                }
                mg.clone()
            }
            None => min_margin,
        };
        let axes: Vec<Vec<f64>> = (0..self.m())
            .map(|a| {
                let lo = self.domain.lo[a] + margin[a];
                let hi = self.domain.hi[a] - margin[a];
                let n = spec.points_per_axis;
                (0..n)
                    .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                    .collect()
            })
            .collect();
        if axes
            .iter()
            .zip(&margin)
            .enumerate()
            .any(|(a, (_, mg))| 2.0 * mg >= self.domain.width(a))
        {
            return Err(GeomError::InvalidParameter(
                "margins exceed the domain".into(),
            ));
        }
        let mut points = vec![Vec::new()];
        for axis in &axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&x| {
                        let mut q = p.clone();
                        q.push(x);
                        q
                    })
                })
                .collect();
        }
        Ok(points)
    }

    /// Samples on a grid, evaluated in parallel; order follows `points`.
    pub fn sample_grid(
        &self,
        points: &[Vec<f64>],
        cfg: &DerivativeConfig,
    ) -> Result<Vec<GeometricSample>> {
        points
            .par_iter()
            .map(|u| self.geometric_sample(u, cfg))
            .collect()
    }
}

/// Sampling grid: points per axis and optional per-axis margins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points_per_axis: usize,
    pub margin: Option<Vec<f64>>,
}

impl GridSpec {
    pub fn new(points_per_axis: usize) -> Self {
        Self {
            points_per_axis,
            margin: None,
        }
    }
}
