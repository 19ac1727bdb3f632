use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context};
use pqharm_core::catalog::{self, EntryKind};
use pqharm_core::chartfile::{self, LoadedChart};
use pqharm_core::curves::{self, CurveChart, CurveConfig, CurveReport, Helix};
use pqharm_core::immersion::{ImmersionChart, SamplePath};
use pqharm_core::residual::{self, AmbientRicci, ClassifyConfig, ResidualReport};
use pqharm_core::variation::{self, DiscretizedCurve, VariationField};
use pqharm_core::{GeomError, PQParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::args::*;
use crate::report::{Engine, Report};

/// What a successful run tells the shell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Match,
    Mismatch,
}

impl Outcome {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Match
        } else {
            Outcome::Mismatch
        }
    }
}

const MIN_GRID: usize = 4;
const CURVE_TOL: f64 = 1e-6;
const CURVE_SAMPLES: usize = 64;
const SURFACE_GRID: usize = 8;
/// Below this (relative to `‖v‖∞`) the tension is treated as zero and the
/// energy derivative itself must vanish.
const CRITICAL_FRACTION: f64 = 1e-5;

enum Target {
    Surface(ImmersionChart),
    Curve {
        chart: CurveChart,
        helix: Option<Helix>,
    },
}

fn selector_params(sel: &Selector) -> BTreeMap<String, f64> {
    [
        ("m", sel.m),
        ("a2", sel.a2),
        ("r", sel.r),
        ("alpha", sel.alpha),
        ("a", sel.a),
        ("b", sel.b),
        ("rho", sel.rho),
    ]
    .into_iter()
    .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
    .collect()
}

fn build_builtin(name: &str, params: &BTreeMap<String, f64>) -> anyhow::Result<Target> {
    let entry = catalog::entries()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| anyhow!("unknown builtin '{name}'; run `pqharm catalog`"))?;
    if let Some(k) = params.keys().find(|k| !entry.params.contains(&k.as_str())) {
        bail!(
            "builtin '{name}' takes no parameter '{k}' (accepts: {})",
            entry.params.join(", ")
        );
    }
    Ok(match entry.kind {
        EntryKind::Hypersurface => Target::Surface(catalog::hypersurface(name, params)?),
        EntryKind::Curve => {
            let (chart, helix) = catalog::curve(name, params)?;
            Target::Curve { chart, helix }
        }
    })
}

fn load(sel: &Selector) -> anyhow::Result<Target> {
    let params = selector_params(sel);
    match (&sel.builtin, &sel.chart) {
        (Some(name), None) => build_builtin(name, &params),
        (None, Some(path)) => {
            if !params.is_empty() {
                bail!("parameter flags apply to --builtin only; put parameters in the chart file");
            }
            Ok(match chartfile::load(path)? {
                LoadedChart::Hypersurface(c) => Target::Surface(c),
                LoadedChart::Curve { chart, helix } => Target::Curve { chart, helix },
            })
        }
        _ => bail!("give exactly one of --builtin or --chart"),
    }
}

fn load_surface(sel: &Selector) -> anyhow::Result<ImmersionChart> {
    match load(sel)? {
        Target::Surface(c) => Ok(c),
        Target::Curve { chart, .. } => bail!("'{}' is a curve; use verify-curve", chart.name()),
    }
}

/// A unit-speed curve, reparametrized by arc length when needed.
fn load_curve(sel: &Selector, cfg: &CurveConfig) -> anyhow::Result<(CurveChart, Option<Helix>)> {
    match load(sel)? {
        Target::Curve { chart, helix } => Ok((unit_speed(chart, cfg)?, helix)),
        Target::Surface(c) => bail!("'{}' is a hypersurface; use verify-hypersurface", c.name()),
    }
}

fn unit_speed(chart: CurveChart, cfg: &CurveConfig) -> anyhow::Result<CurveChart> {
    if chart.is_unit_speed() {
        Ok(chart)
    } else {
        Ok(curves::reparametrize_arclength(&chart, cfg)?)
    }
}

fn check_grid(n: usize) -> anyhow::Result<()> {
    if n < MIN_GRID {
        bail!("grid needs at least {MIN_GRID} points, got {n}");
    }
    Ok(())
}

fn expect_label(e: Expect) -> &'static str {
    match e {
        Expect::Minimal => "minimal",
        Expect::Proper => "proper",
        Expect::Not => "not",
        Expect::Mixed => "mixed",
    }
}

fn classify_config(
    grid: usize,
    margin: Option<&NumList>,
    tol: Option<f64>,
    path: PathArg,
    einstein_s: Option<f64>,
) -> ClassifyConfig {
    let mut cfg = ClassifyConfig::new(grid).with_path(path.into());
    cfg.tol = tol;
    cfg.grid.margin = margin.map(|m| m.0.clone());
    if let Some(s) = einstein_s {
        cfg.ambient = AmbientRicci::Einstein {
            scalar_curvature: s,
        };
    }
    cfg
}

fn path_name(p: SamplePath) -> String {
    match p {
        SamplePath::Auto => "auto",
        SamplePath::Analytic => "analytic",
        SamplePath::Stencil => "stencil",
    }
    .to_string()
}

pub fn catalog(args: &CatalogArgs) -> anyhow::Result<Outcome> {
    let entries = catalog::entries();
    let points = serde_json::to_value(&entries)?;
    let summary = json!({ "count": entries.len() });
    let report = Report::new("catalog", args, points, summary, Engine::new(None, None));
    report.emit(
        args.output.out.as_deref(),
        &format!("catalog: {} builtins", entries.len()),
    )?;
    Ok(Outcome::Match)
}

fn surface_points(rep: &ResidualReport, verbose: bool) -> Value {
    Value::Array(
        rep.points
            .iter()
            .map(|r| {
                let mut row = json!({ "u": r.u, "f": r.f, "eq1": r.eq1, "eq2_norm": r.eq2_norm });
                if verbose {
                    row["eq2"] = json!(r.eq2);
                }
                row
            })
            .collect(),
    )
}

pub fn verify_hypersurface(args: &VerifyHypersurfaceArgs) -> anyhow::Result<Outcome> {
    check_grid(args.grid)?;
    let chart = load_surface(&args.selector)?;
    let params = PQParams::new(args.p, args.q)?;
    let cfg = classify_config(
        args.grid,
        args.margin.as_ref(),
        args.tol,
        args.path,
        args.einstein_s,
    );
    let rep = residual::classify(&chart, &params, &cfg)?;
    let label = rep.classification.label();
    let matched = args.expect.map(|e| expect_label(e) == label);
    let summary = json!({
        "chart": chart.name(),
        "m": chart.m(),
        "ambient_curvature": chart.space_form().curvature(),
        "p": args.p,
        "q": args.q,
        "classification": label,
        "max_abs_eq1": rep.max_abs_eq1,
        "max_eq2_norm": rep.max_eq2_norm,
        "min_abs_f": rep.min_abs_f,
        "max_abs_f": rep.max_abs_f,
        "expect": args.expect.map(expect_label),
        "matched": matched,
    });
    let engine = Engine::new(Some(rep.tolerance), Some(path_name(rep.path)));
    let report = Report::new(
        "verify-hypersurface",
        args,
        surface_points(&rep, args.verbose),
        summary,
        engine,
    );
    report.emit(
        args.output.out.as_deref(),
        &format!("{}: {label}", chart.name()),
    )?;
    Ok(Outcome::from_bool(matched.unwrap_or(true)))
}

/// `p` from the closed form when `(k, τ)` is constant over the samples.
fn constant_curvature_p(rep: &CurveReport, c: f64, tol: f64) -> Option<curves::ClosedFormP> {
    let spread = |f: fn(&curves::CurvePoint) -> f64| {
        let lo = rep.points.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = rep.points.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    if rep.min_k < tol || spread(|p| p.k) > tol || spread(|p| p.tau) > tol {
        return None;
    }
    let n = rep.points.len() as f64;
    let k = rep.points.iter().map(|p| p.k).sum::<f64>() / n;
    let tau = rep.points.iter().map(|p| p.tau).sum::<f64>() / n;
    curves::p_closed_form(k, tau, c).ok()
}

fn helix_json(h: &Helix) -> Value {
    json!({
        "alpha": h.alpha, "a": h.a, "b": h.b, "rescale": h.rescale,
        "k": h.k, "tau": h.tau, "p": h.p, "admissible": h.admissible,
    })
}

pub fn verify_curve(args: &VerifyCurveArgs) -> anyhow::Result<Outcome> {
    check_grid(args.grid)?;
    let ccfg = CurveConfig::default();
    let (chart, helix) = load_curve(&args.selector, &ccfg)?;
    let params = PQParams::new(args.p, args.q)?;
    let rep = curves::classify_curve(&chart, &params, args.grid, args.tol, &ccfg)?;
    let label = rep.classification.label();
    let matched = args.expect.map(|e| expect_label(e) == label);
    let c = chart.space_form().curvature();
    let summary = json!({
        "curve": chart.name(),
        "ambient_curvature": c,
        "p": args.p,
        "q": args.q,
        "classification": label,
        "max_abs_residual": rep.max_abs_residual,
        "min_k": rep.min_k,
        "max_k": rep.max_k,
        "closed_form_p": constant_curvature_p(&rep, c, args.tol),
        "helix": helix.as_ref().map(helix_json),
        "expect": args.expect.map(expect_label),
        "matched": matched,
    });
    let points = serde_json::to_value(&rep.points)?;
    let engine = Engine::new(Some(rep.tolerance), None);
    let report = Report::new("verify-curve", args, points, summary, engine);
    report.emit(
        args.output.out.as_deref(),
        &format!("{}: {label}", chart.name()),
    )?;
    Ok(Outcome::from_bool(matched.unwrap_or(true)))
}

/// Solver outcomes that answer the question negatively rather than
/// indicating a broken configuration.
fn is_solver_failure(e: &GeomError) -> bool {
    matches!(
        e,
        GeomError::NoRootInBracket { .. }
            | GeomError::NonConvergence { .. }
            | GeomError::PostVerification { .. }
            | GeomError::MinimalOnly
            | GeomError::Inadmissible { .. }
    )
}

const DEFAULT_P_BRACKET: (f64, f64) = (1.01, 10.0);
const DEFAULT_PAIR_P_BRACKET: (f64, f64) = (1.2, 1.8);
const DEFAULT_CONE_R_BRACKET: (f64, f64) = (0.3, 0.7);

pub fn solve(args: &SolveArgs) -> anyhow::Result<Outcome> {
    check_grid(args.grid)?;
    let unknowns: Vec<&str> = args.unknowns.split(',').map(str::trim).collect();
    let cfg = classify_config(args.grid, None, args.tol, args.path, None);
    let target = match unknowns.as_slice() {
        ["p"] => load(&args.selector)?,
        ["p", "r"] => {
            if args.selector.builtin.as_deref() != Some("cone") {
                bail!("unknowns p,r need --builtin cone");
            }
            if args.selector.r.is_some() {
                bail!("r is an unknown here; drop --r");
            }
            let family = catalog::cone_family();
            let p_br = args.p_bracket.unwrap_or(DEFAULT_PAIR_P_BRACKET);
            let r_br = args.theta_bracket.unwrap_or(DEFAULT_CONE_R_BRACKET);
            let result = residual::solve_param_pair(&family, args.q, r_br, p_br, &cfg);
            let probe = family(0.5 * (r_br.0 + r_br.1))?;
            let engine = Engine::new(
                Some(cfg.effective_tol(&probe)),
                Some(path_name(cfg.effective_path(&probe))),
            );
            let (summary, ok, headline) = match result {
                Ok(s) => (
                    json!({
                        "status": "solved", "unknowns": ["p", "r"], "p": s.p, "r": s.theta, "q": s.q,
                        "iterations": s.iterations, "max_residual": s.max_residual, "admissible": s.admissible,
                    }),
                    s.admissible,
                    format!(
                        "cone: p = {:.6}, r = {:.6}{}",
                        s.p,
                        s.theta,
                        if s.admissible { "" } else { " (inadmissible)" }
                    ),
                ),
                Err(e) if is_solver_failure(&e) => (
                    json!({ "status": "failed", "unknowns": ["p", "r"], "reason": e.to_string() }),
                    false,
                    format!("cone: {e}"),
                ),
                Err(e) => return Err(e.into()),
            };
            let report = Report::new("solve", args, Value::Array(vec![]), summary, engine);
            report.emit(args.output.out.as_deref(), &headline)?;
            return Ok(Outcome::from_bool(ok));
        }
        _ => bail!(
            "unsupported --unknowns '{}' (expected 'p' or 'p,r')",
            args.unknowns
        ),
    };
    match target {
        Target::Surface(chart) => solve_surface_p(args, &chart, &cfg),
        Target::Curve { chart, helix } => {
            solve_curve_p(args, unit_speed(chart, &CurveConfig::default())?, helix)
        }
    }
}

fn solve_surface_p(
    args: &SolveArgs,
    chart: &ImmersionChart,
    cfg: &ClassifyConfig,
) -> anyhow::Result<Outcome> {
    let bracket = args.p_bracket.unwrap_or(DEFAULT_P_BRACKET);
    let engine = Engine::new(
        Some(cfg.effective_tol(chart)),
        Some(path_name(cfg.effective_path(chart))),
    );
    let (summary, ok, headline) = match residual::solve_p(chart, args.q, cfg, bracket) {
        Ok(s) => (
            json!({
                "status": "solved", "unknowns": ["p"], "p": s.p, "q": args.q,
                "objective": s.objective, "refined_by_bisection": s.refined_by_bisection, "admissible": true,
            }),
            true,
            format!("{}: p = {:.6}", chart.name(), s.p),
        ),
        Err(e) if is_solver_failure(&e) => (
            json!({ "status": "failed", "unknowns": ["p"], "reason": e.to_string() }),
            false,
            format!("{}: {e}", chart.name()),
        ),
        Err(e) => return Err(e.into()),
    };
    let report = Report::new("solve", args, Value::Array(vec![]), summary, engine);
    report.emit(args.output.out.as_deref(), &headline)?;
    Ok(Outcome::from_bool(ok))
}

fn solve_curve_p(
    args: &SolveArgs,
    chart: CurveChart,
    helix: Option<Helix>,
) -> anyhow::Result<Outcome> {
    let ccfg = CurveConfig::default();
    let tol = args.tol.unwrap_or(CURVE_TOL);
    // any admissible p works for sampling k and τ; the residual is not used
    let probe = PQParams::new(2.0, args.q)?;
    let rep = curves::classify_curve(&chart, &probe, CURVE_SAMPLES, tol, &ccfg)?;
    let c = chart.space_form().curvature();
    let closed = constant_curvature_p(&rep, c, tol);
    let (summary, ok, headline) = match closed {
        Some(cf) => (
            json!({
                "status": "solved", "unknowns": ["p"], "p": cf.p, "q": args.q, "admissible": cf.admissible,
                "k": rep.max_k, "helix": helix.as_ref().map(helix_json),
            }),
            cf.admissible,
            format!(
                "{}: p = {:.6}{}",
                chart.name(),
                cf.p,
                if cf.admissible { "" } else { " (inadmissible)" }
            ),
        ),
        None => {
            let reason = if rep.max_k < tol {
                "curve is a geodesic; no proper solution exists"
            } else {
                "curvature and torsion are not constant; no closed-form p"
            };
            (
                json!({ "status": "failed", "unknowns": ["p"], "reason": reason }),
                false,
                format!("{}: {reason}", chart.name()),
            )
        }
    };
    let report = Report::new(
        "solve",
        args,
        Value::Array(vec![]),
        summary,
        Engine::new(Some(tol), None),
    );
    report.emit(args.output.out.as_deref(), &headline)?;
    Ok(Outcome::from_bool(ok))
}

struct SweepRow {
    value: f64,
    eq1: Option<f64>,
    eq2: Option<f64>,
    label: String,
    error: Option<String>,
}

fn sweep_one(
    args: &SweepArgs,
    value: f64,
    kind_is_curve: bool,
) -> anyhow::Result<(f64, f64, String)> {
    let mut sel = args.selector.clone();
    let (mut p, mut q) = (args.p, args.q);
    match args.param.as_str() {
        "p" => p = Some(value),
        "q" => q = Some(value),
        "m" => sel.m = Some(value),
        "a2" => sel.a2 = Some(value),
        "r" => sel.r = Some(value),
        "alpha" => sel.alpha = Some(value),
        "a" => sel.a = Some(value),
        "b" => sel.b = Some(value),
        "rho" => sel.rho = Some(value),
        other => bail!("cannot sweep '{other}'"),
    }
    let p = p.context("--p is required unless p is swept")?;
    let q = q.context("--q is required unless q is swept")?;
    let params = PQParams::new(p, q)?;
    if kind_is_curve {
        let ccfg = CurveConfig::default();
        let (chart, _) = load_curve(&sel, &ccfg)?;
        let tol = args.tol.unwrap_or(CURVE_TOL);
        let rep = curves::classify_curve(
            &chart,
            &params,
            args.grid.unwrap_or(CURVE_SAMPLES),
            tol,
            &ccfg,
        )?;
        let [r1, r2, r3] = rep.max_abs_residual;
        Ok((r2, r1.max(r3), rep.classification.label().to_string()))
    } else {
        let grid = args.grid.unwrap_or(SURFACE_GRID);
        let chart = load_surface(&sel)?;
        let cfg = classify_config(grid, None, args.tol, args.path, None);
        let rep = residual::classify(&chart, &params, &cfg)?;
        Ok((
            rep.max_abs_eq1,
            rep.max_eq2_norm,
            rep.classification.label().to_string(),
        ))
    }
}

pub fn sweep(args: &SweepArgs) -> anyhow::Result<Outcome> {
    if args.steps == 0 {
        bail!("--steps must be positive");
    }
    if let Some(g) = args.grid {
        check_grid(g)?;
    }
    let swept_builtin = !matches!(args.param.as_str(), "p" | "q");
    if swept_builtin && args.selector.builtin.is_none() {
        bail!("only p and q can be swept on a chart file");
    }
    let kind_is_curve = match &args.selector.builtin {
        Some(name) => catalog::is_curve(name),
        None => matches!(load(&args.selector)?, Target::Curve { .. }),
    };
    let values: Vec<f64> = (0..args.steps)
        .map(|i| {
            if args.steps == 1 {
                args.from
            } else {
                args.from + (args.to - args.from) * i as f64 / (args.steps - 1) as f64
            }
        })
        .collect();
    let rows: Vec<SweepRow> = values
        .iter()
        .map(|&value| match sweep_one(args, value, kind_is_curve) {
            Ok((eq1, eq2, label)) => SweepRow {
                value,
                eq1: Some(eq1),
                eq2: Some(eq2),
                label,
                error: None,
            },
            Err(e) => SweepRow {
                value,
                eq1: None,
                eq2: None,
                label: "error".into(),
                error: Some(e.to_string()),
            },
        })
        .collect();
    if let Some(path) = &args.csv {
        let mut w = csv::Writer::from_path(path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        w.write_record(["param", "max_eq1", "max_eq2", "classification"])?;
        for r in &rows {
            let fmt = |x: Option<f64>| x.map(|x| format!("{x:e}")).unwrap_or_default();
            w.write_record([r.value.to_string(), fmt(r.eq1), fmt(r.eq2), r.label.clone()])?;
        }
        w.flush()?;
    }
    let points = Value::Array(
        rows.iter()
            .map(|r| json!({ "param": r.value, "max_eq1": r.eq1, "max_eq2": r.eq2, "classification": r.label, "error": r.error }))
            .collect(),
    );
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    let summary = json!({ "param": args.param, "values": rows.len(), "errors": failed });
    let report = Report::new("sweep", args, points, summary, Engine::new(args.tol, None));
    report.emit(
        args.output.out.as_deref(),
        &format!(
            "sweep {}: {} values, {failed} errors",
            args.param,
            rows.len()
        ),
    )?;
    Ok(Outcome::Match)
}

fn random_bump(
    rng: &mut ChaCha8Rng,
    domain: (f64, f64),
    dim: usize,
) -> anyhow::Result<VariationField> {
    let (a, b) = domain;
    let len = b - a;
    let hw = len * rng.random_range(0.3..0.45);
    let slack = 1e-3 * len;
    let centre = rng.random_range(a + hw + slack..b - hw - slack);
    let direction: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    Ok(VariationField::bump(centre, hw, direction)?)
}

pub fn variation_check(args: &VariationArgs) -> anyhow::Result<Outcome> {
    let ccfg = CurveConfig::default();
    let (chart, _) = load_curve(&args.selector, &ccfg)?;
    let params = PQParams::new(args.p, args.q)?;
    let dim = chart.space_form().embedding_dim();
    let domain = chart.domain();
    let dcurve = DiscretizedCurve::new(chart, args.nodes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut rows = Vec::with_capacity(args.bumps);
    let mut passed = 0;
    let mut max_rel = 0.0f64;
    for _ in 0..args.bumps {
        let field = random_bump(&mut rng, domain, dim)?;
        let rep =
            variation::first_variation_check(&dcurve, &field, &params, &args.eps_steps.0, &ccfg)?;
        let bound = CRITICAL_FRACTION * rep.field_sup_norm;
        let critical = rep.rhs.abs() <= bound;
        let pass = if critical {
            rep.lhs.abs() <= bound
        } else {
            rep.rel_error <= args.tol
        };
        if !critical {
            max_rel = max_rel.max(rep.rel_error);
        }
        passed += pass as usize;
        rows.push(json!({
            "centre": field.centre,
            "halfwidth": field.halfwidth,
            "direction": field.direction,
            "lhs": rep.lhs,
            "rhs": rep.rhs,
            "rel_error": rep.rel_error,
            "observed_order": rep.observed_order,
            "step_independent": rep.step_independent,
            "eps": rep.eps,
            "derivatives": rep.derivatives,
            "field_sup_norm": rep.field_sup_norm,
            "critical": critical,
            "pass": pass,
        }));
    }
    let all = passed == args.bumps;
    let summary = json!({
        "curve": dcurve.curve().name(),
        "p": args.p,
        "q": args.q,
        "bumps": args.bumps,
        "passed": passed,
        "max_rel_error": max_rel,
        "tolerance": args.tol,
        "all_pass": all,
    });
    let report = Report::new(
        "variation-check",
        args,
        Value::Array(rows),
        summary,
        Engine::new(Some(args.tol), None),
    );
    report.emit(
        args.output.out.as_deref(),
        &format!("variation-check: {passed} of {} bumps pass", args.bumps),
    )?;
    Ok(Outcome::from_bool(all))
}
