//! Ambient space forms `N^n(c)` in embedding coordinates.
//!
//! * `c = 0`: Euclidean `R^n`, points carry `n` coordinates.
//! * `c > 0`: the hypersphere `|P|^2 = 1/c` inside flat `R^{n+1}`.
//! * `c < 0`: the upper sheet of `<<P,P>> = 1/c` in Minkowski `R^{n,1}`
//!   (last coordinate timelike and positive).
//!
//! On the embedded models the Levi-Civita connection is the ambient
//! derivative followed by the (Minkowski-)orthogonal projection onto `T_P N`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::numerics::fd;

pub type AmbientPoint = DVector<f64>;
pub type AmbientVector = DVector<f64>;

/// Absolute tolerance (scaled by coordinate size) for `<P, V> = 0`.
pub const TANGENCY_TOL: f64 = 1e-10;
/// Tolerance for the model constraint on points.
pub const MODEL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Euclidean,
    SphereEmbedded,
    Hyperboloid,
}

impl Model {
    pub fn from_curvature(c: f64) -> Self {
        if c > 0.0 {
            Model::SphereEmbedded
        } else if c < 0.0 {
            Model::Hyperboloid
        } else {
            Model::Euclidean
        }
    }
}

/// Position with first and second derivatives along a curve parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveJet {
    pub pos: DVector<f64>,
    pub vel: DVector<f64>,
    pub acc: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceForm {
    dim: usize,
    curvature: f64,
    model: Model,
}

impl SpaceForm {
    pub fn new(dim: usize, curvature: f64) -> Result<Self> {
        if dim < 2 {
            return Err(GeomError::InvalidParameter(format!(
                "ambient dimension {dim} < 2"
            )));
        }
        if !curvature.is_finite() {
            return Err(GeomError::InvalidParameter(
                "curvature must be finite".into(),
            ));
        }
        Ok(Self {
            dim,
            curvature,
            model: Model::from_curvature(curvature),
        })
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::new(dim, 0.0).expect("dim >= 2")
    }

    pub fn unit_sphere(dim: usize) -> Self {
        Self::new(dim, 1.0).expect("dim >= 2")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    pub fn model(&self) -> Model {
        self.model
    }

    /// Number of coordinates carried by points and vectors.
    pub fn embedding_dim(&self) -> usize {
        match self.model {
            Model::Euclidean => self.dim,
            _ => self.dim + 1,
        }
    }

    /// The ambient bilinear form, without any tangency check.
    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        match self.model {
            Model::Hyperboloid => {
                let last = x.len() - 1;
                x.rows(0, last).dot(&y.rows(0, last)) - x[last] * y[last]
            }
            _ => x.dot(y),
        }
    }

    /// Length of a tangent (spacelike) vector.
    pub fn norm(&self, x: &AmbientVector) -> f64 {
        self.inner(x, x).max(0.0).sqrt()
    }

    fn check_len(&self, v: &DVector<f64>, what: &str) -> Result<()> {
        if v.len() != self.embedding_dim() {
            return Err(GeomError::Contract(format!(
                "{what} has {} coordinates, model needs {}",
                v.len(),
                self.embedding_dim()
            )));
        }
        Ok(())
    }

    pub fn check_point(&self, p: &AmbientPoint) -> Result<()> {
        self.check_len(p, "point")?;
        if p.iter().any(|x| !x.is_finite()) {
            return Err(GeomError::OffModel("non-finite coordinate".into()));
        }
        if self.model == Model::Euclidean {
            return Ok(());
        }
        let target = 1.0 / self.curvature;
        let val = self.inner(p, p);
        let scale = p.norm_squared().max(1.0);
        if (val - target).abs() > MODEL_TOL * scale {
            return Err(GeomError::OffModel(format!(
                "<P,P> = {val}, expected {target}"
            )));
        }
        if self.model == Model::Hyperboloid && p[p.len() - 1] <= 0.0 {
            return Err(GeomError::OffModel("point on the lower sheet".into()));
        }
        Ok(())
    }

    pub fn check_tangent(&self, p: &AmbientPoint, v: &AmbientVector) -> Result<()> {
        self.check_len(v, "vector")?;
        if self.model == Model::Euclidean {
            return Ok(());
        }
        let d = self.inner(p, v);
        if d.abs() > TANGENCY_TOL * (p.norm() * v.norm()).max(1.0) {
            return Err(GeomError::Contract(format!(
                "vector not tangent: <P,V> = {d:e}"
            )));
        }
        Ok(())
    }

    /// `h_P(X, Y)` for tangent vectors at `P`.
    pub fn metric(&self, p: &AmbientPoint, x: &AmbientVector, y: &AmbientVector) -> Result<f64> {
        self.check_tangent(p, x)?;
        self.check_tangent(p, y)?;
        Ok(self.inner(x, y))
    }

    /// Orthogonal projection of an ambient vector onto `T_P N`.
    pub fn project_tangent(&self, p: &AmbientPoint, v: &DVector<f64>) -> AmbientVector {
        match self.model {
            Model::Euclidean => v.clone(),
            _ => v - p * (self.inner(p, v) / self.inner(p, p)),
        }
    }

    /// `R(X,Y)Z = c [h(Y,Z) X - h(X,Z) Y]`.
    pub fn curvature_tensor(
        &self,
        p: &AmbientPoint,
        x: &AmbientVector,
        y: &AmbientVector,
        z: &AmbientVector,
    ) -> Result<AmbientVector> {
        for v in [x, y, z] {
            self.check_tangent(p, v)?;
        }
        Ok(self.curvature_unchecked(x, y, z))
    }

    pub(crate) fn curvature_unchecked(
        &self,
        x: &AmbientVector,
        y: &AmbientVector,
        z: &AmbientVector,
    ) -> AmbientVector {
        let c = self.curvature;
        x * (c * self.inner(y, z)) - y * (c * self.inner(x, z))
    }

    /// `(Ric(η,η), (Ricci η)^T)` for a unit normal of a hypersurface.
    pub fn ricci_data(&self, _eta: &AmbientVector) -> (f64, AmbientVector) {
        let m = (self.dim - 1) as f64;
        (m * self.curvature, DVector::zeros(self.embedding_dim()))
    }

    /// `∇_{d/dt} V` at `t0`: ambient derivative of `V`, projected onto `T_{P(t0)} N`.
    pub fn covariant_derivative(
        &self,
        curve: impl Fn(f64) -> AmbientPoint,
        field: impl Fn(f64) -> AmbientVector,
        t0: f64,
        step: f64,
    ) -> Result<AmbientVector> {
        if !(step.is_finite() && step >= 1e-10 * t0.abs().max(1.0)) || t0 + 0.25 * step == t0 {
            return Err(GeomError::Numeric(format!(
                "derivative step {step:e} underflows at t = {t0}"
            )));
        }
        let dv = fd::first(|s| field(t0 + s), step);
        if dv.iter().any(|x| !x.is_finite()) {
            return Err(GeomError::Numeric("non-finite covariant derivative".into()));
        }
        Ok(self.project_tangent(&curve(t0), &dv))
    }

    /// Nearest-point normalization onto the model.
    pub fn retract(&self, raw: &DVector<f64>) -> Result<AmbientPoint> {
        self.check_len(raw, "raw point")?;
        match self.model {
            Model::Euclidean => Ok(raw.clone()),
            _ => {
                let rho = self.normalizer(raw)?;
                Ok(raw / rho)
            }
        }
    }

    fn normalizer(&self, y: &DVector<f64>) -> Result<f64> {
        let s = self.curvature * self.inner(y, y);
        if !(s > 1e-300) || !s.is_finite() {
            return Err(GeomError::Domain(format!(
                "cannot retract point with <y,y> = {:e}",
                self.inner(y, y)
            )));
        }
        if self.model == Model::Hyperboloid && y[y.len() - 1] <= 0.0 {
            return Err(GeomError::Domain(
                "raw point lies on the lower sheet".into(),
            ));
        }
        Ok(s.sqrt())
    }

    /// Retraction applied to a curve jet, differentiated exactly.
    pub fn retract_jet(&self, y: &CurveJet) -> Result<CurveJet> {
        if self.model == Model::Euclidean {
            return Ok(y.clone());
        }
        let c = self.curvature;
        let rho = self.normalizer(&y.pos)?;
        let yy1 = self.inner(&y.pos, &y.vel);
        let d1 = c * yy1 / rho;
        let d2 = (c * (self.inner(&y.vel, &y.vel) + self.inner(&y.pos, &y.acc)) - d1 * d1) / rho;
        let pos = &y.pos / rho;
        let vel = &y.vel / rho - &y.pos * (d1 / (rho * rho));
        let acc = &y.acc / rho - &y.vel * (2.0 * d1 / (rho * rho)) - &y.pos * (d2 / (rho * rho))
            + &y.pos * (2.0 * d1 * d1 / (rho * rho * rho));
        Ok(CurveJet { pos, vel, acc })
    }

    /// Positively oriented completion of `embedding_dim - 1` vectors.
    ///
    /// Returns the unit vector `w` orthogonal (in the ambient form) to every
    /// input with `det[v_1, ..., v_k, w] > 0`.
    pub fn oriented_complement(&self, vectors: &[&DVector<f64>]) -> Result<AmbientVector> {
        let e = self.embedding_dim();
        if vectors.len() + 1 != e {
            return Err(GeomError::Contract(format!(
                "completion needs {} vectors, got {}",
                e - 1,
                vectors.len()
            )));
        }
        let mut mat = DMatrix::zeros(e, e);
        for (i, v) in vectors.iter().enumerate() {
            mat.set_row(i, &v.transpose());
        }
        let mut w = DVector::zeros(e);
        for i in 0..e {
            let mut m = mat.clone();
            let mut row = nalgebra::RowDVector::zeros(e);
            row[i] = 1.0;
            m.set_row(e - 1, &row);
            w[i] = m.determinant();
        }
        if self.model == Model::Hyperboloid {
            w[e - 1] = -w[e - 1];
        }
        let n2 = self.inner(&w, &w);
        if !(n2 > 0.0) {
            return Err(GeomError::DegenerateImmersion { det_g: n2 });
        }
        Ok(w / n2.sqrt())
    }
}
