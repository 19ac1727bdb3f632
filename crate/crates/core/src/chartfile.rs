//! Declarative chart files (TOML).
//!
//! A file names a builtin with parameters:
//!
//! ```toml
//! builtin = "cone"
//! [params]
//! r = "1/sqrt(6)"
//! ```
//!
//! or gives the map as expressions in the chart coordinates:
//!
//! ```toml
//! kind = "hypersurface"          # or "curve"
//! coords = ["u", "v"]
//! domain = [[0.5, 2.0], [0, "2*pi"]]
//! map = ["r*u*cos(v)", "r*u*sin(v)", "u"]
//! orientation = "natural"        # or "flipped"
//! [ambient]
//! curvature = 0                  # dimension defaults to m + 1 (3 for curves)
//! [constants]
//! r = "1/sqrt(6)"
//! ```
//!
//! Numbers may be written as TOML numbers or as expression strings.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DVector;
use serde::Deserialize;

use crate::catalog;
use crate::curves::{CurveChart, CurveConfig, CurveMapFn, Helix};
use crate::error::{GeomError, Result};
use crate::expr;
use crate::immersion::{ImmersionChart, Orientation, ParamBox};
use crate::spaceform::SpaceForm;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Expr(String),
}

impl Value {
    pub fn resolve(&self, consts: &BTreeMap<String, f64>) -> Result<f64> {
        match self {
            Value::Num(x) => Ok(*x),
            Value::Expr(s) => expr::eval_with(s, consts),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ChartKind {
    #[default]
    Hypersurface,
    Curve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OrientationSpec {
    #[default]
    Natural,
    Flipped,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbientSpec {
    pub curvature: Value,
    pub dimension: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartFile {
    pub builtin: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default)]
    pub kind: ChartKind,
    pub name: Option<String>,
    pub ambient: Option<AmbientSpec>,
    pub coords: Option<Vec<String>>,
    pub domain: Option<Vec<[Value; 2]>>,
    #[serde(default)]
    pub constants: BTreeMap<String, Value>,
    pub map: Option<Vec<String>>,
    #[serde(default)]
    pub orientation: OrientationSpec,
    /// Curves only: the map is already parametrized by arc length.
    #[serde(default)]
    pub unit_speed: bool,
}

pub enum LoadedChart {
    Hypersurface(ImmersionChart),
    Curve {
        chart: CurveChart,
        helix: Option<Helix>,
    },
}

impl std::fmt::Debug for LoadedChart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LoadedChart::Hypersurface(c) => f.debug_tuple("Hypersurface").field(c).finish(),
            LoadedChart::Curve { chart, .. } => f.debug_tuple("Curve").field(chart).finish(),
        }
    }
}

pub fn load(path: &Path) -> Result<LoadedChart> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GeomError::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<LoadedChart> {
    let file: ChartFile =
        toml::from_str(text).map_err(|e| GeomError::Parse(one_line(&e.to_string())))?;
    file.build()
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Constants may refer to each other in any order; resolve until a fixed point.
fn resolve_constants(raw: &BTreeMap<String, Value>) -> Result<BTreeMap<String, f64>> {
    let mut done = BTreeMap::new();
    let mut pending: Vec<(&String, &Value)> = raw.iter().collect();
    while !pending.is_empty() {
        let before = pending.len();
        let mut last_err = None;
        pending.retain(|(k, v)| match v.resolve(&done) {
            Ok(x) => {
                done.insert((*k).clone(), x);
                false
            }
            Err(e) => {
                last_err = Some(e);
                true
            }
        });
        if pending.len() == before {
            return Err(last_err.unwrap());
        }
    }
    Ok(done)
}

impl ChartFile {
    pub fn build(&self) -> Result<LoadedChart> {
        let consts = resolve_constants(&self.constants)?;
        if let Some(name) = &self.builtin {
            if self.map.is_some() {
                return Err(GeomError::Parse(
                    "give either 'builtin' or 'map', not both".into(),
                ));
            }
            let params = self
                .params
                .iter()
                .map(|(k, v)| Ok((k.clone(), v.resolve(&consts)?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            return if catalog::is_curve(name) {
                let (chart, helix) = catalog::curve(name, &params)?;
                Ok(LoadedChart::Curve { chart, helix })
            } else {
                Ok(LoadedChart::Hypersurface(catalog::hypersurface(
                    name, &params,
                )?))
            };
        }
        let map = self
            .map
            .as_ref()
            .ok_or_else(|| GeomError::Parse("chart file needs 'builtin' or 'map'".into()))?;
        let coords: Vec<String> = match (&self.coords, self.kind) {
            (Some(c), _) => c.clone(),
            (None, ChartKind::Curve) => vec!["t".into()],
            (None, ChartKind::Hypersurface) => vec!["u".into(), "v".into()],
        };
        let domain = self
            .domain
            .as_ref()
            .ok_or_else(|| GeomError::Parse("expression chart needs 'domain'".into()))?;
        if domain.len() != coords.len() {
            return Err(GeomError::Parse(format!(
                "{} coordinates but {} domain intervals",
                coords.len(),
                domain.len()
            )));
        }
        let (lo, hi): (Vec<f64>, Vec<f64>) = domain
            .iter()
            .map(|[a, b]| Ok((a.resolve(&consts)?, b.resolve(&consts)?)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        let ambient = self
            .ambient
            .as_ref()
            .ok_or_else(|| GeomError::Parse("expression chart needs [ambient]".into()))?;
        let c = ambient.curvature.resolve(&consts)?;
        let default_dim = match self.kind {
            ChartKind::Curve => 3,
            ChartKind::Hypersurface => coords.len() + 1,
        };
        let sf = SpaceForm::new(ambient.dimension.unwrap_or(default_dim), c)?;
        if map.len() != sf.embedding_dim() {
            return Err(GeomError::Parse(format!(
                "map has {} components, the ambient model needs {}",
                map.len(),
                sf.embedding_dim()
            )));
        }
        let names: Vec<&str> = coords.iter().map(String::as_str).collect();
        let exprs = Arc::new(
            map.iter()
                .map(|m| expr::compile(m, &names, &consts))
                .collect::<Result<Vec<_>>>()?,
        );
        let name = self.name.clone().unwrap_or_else(|| "expression".into());
        match self.kind {
            ChartKind::Hypersurface => {
                let f = Arc::new(move |u: &[f64]| {
                    DVector::from_iterator(exprs.len(), exprs.iter().map(|e| e.eval(u)))
                });
                let orientation = match self.orientation {
                    OrientationSpec::Natural => Orientation::Natural,
                    OrientationSpec::Flipped => Orientation::Flipped,
                };
                let chart = ImmersionChart::new(name, sf, ParamBox::new(lo, hi)?, f)?
                    .with_orientation(orientation);
                Ok(LoadedChart::Hypersurface(chart))
            }
            ChartKind::Curve => {
                if coords.len() != 1 {
                    return Err(GeomError::Parse(
                        "a curve has exactly one coordinate".into(),
                    ));
                }
                let f: CurveMapFn = Arc::new(move |t| {
                    DVector::from_iterator(exprs.len(), exprs.iter().map(|e| e.eval(&[t])))
                });
                let mut chart = CurveChart::new(name, sf, (lo[0], hi[0]), f)?;
                if self.unit_speed {
                    chart = chart.with_unit_speed(&CurveConfig::default())?;
                }
                Ok(LoadedChart::Curve { chart, helix: None })
            }
        }
    }
}
