//! Acceptance criteria, one PASS/FAIL line each.

mod common;

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use num_rational::Ratio;
use pqharm_core::catalog;
use pqharm_core::curves::{classify_curve, frenet, p_closed_form, CurveConfig};
use pqharm_core::immersion::{
    DerivativeConfig, GeometricSample, ImmersionChart, Orientation, SamplePath,
};
use pqharm_core::residual::{
    classify, coefficients, residual, residual_spaceform, solve_p, solve_param_pair, umbilic_f,
    ClassifyConfig, UmbilicSolution,
};
use pqharm_core::variation::{first_variation_check, DiscretizedCurve, DEFAULT_EPS_STEPS};
use pqharm_core::{Classification, PQParams, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_bump, VARIATION_NODES};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(checks: &[(bool, String)]) -> Outcome {
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.0)
        .map(|c| c.1.as_str())
        .collect();
    if failed.is_empty() {
        Outcome {
            pass: true,
            detail: checks
                .iter()
                .map(|c| c.1.as_str())
                .collect::<Vec<_>>()
                .join("; "),
        }
    } else {
        Outcome {
            pass: false,
            detail: failed.join("; "),
        }
    }
}

fn max_residual(chart: &ImmersionChart, params: &PQParams, cfg: &ClassifyConfig) -> Result<f64> {
    let r = classify(chart, params, cfg)?;
    Ok(r.max_abs_eq1.max(r.max_eq2_norm))
}

fn sphere_in_sphere() -> Result<Outcome> {
    let mut checks = Vec::new();
    let start = Instant::now();
    let chart = catalog::sphere_in_sphere(2, 0.5)?;
    let grid = ClassifyConfig::new(16);
    for q in [1.5, 2.0, 3.0] {
        let params = PQParams::new(2.0, q)?;
        let an = max_residual(
            &chart,
            &params,
            &grid.clone().with_path(SamplePath::Analytic),
        )?;
        let st = max_residual(
            &chart,
            &params,
            &grid.clone().with_path(SamplePath::Stencil),
        )?;
        checks.push((an <= 1e-10, format!("q={q} analytic {an:.1e}")));
        checks.push((st <= 1e-4, format!("q={q} stencil {st:.1e}")));
    }
    let p = solve_p(&chart, 2.0, &grid, (1.05, 10.0))?.p;
    let elapsed = start.elapsed().as_secs_f64();
    checks.push(((p - 2.0).abs() <= 1e-6, format!("solve_p {p:.9}")));
    checks.push((elapsed < 1.0, format!("16x16 runtime {elapsed:.2}s")));
    let p7 = solve_p(
        &catalog::sphere_in_sphere(2, 0.7)?,
        2.0,
        &grid,
        (1.05, 10.0),
    )?
    .p;
    checks.push((
        (p7 - 10.0 / 3.0).abs() <= 1e-6,
        format!("a2=0.7 solve_p {p7:.9}"),
    ));
    Ok(outcome(&checks))
}

fn cone() -> Result<Outcome> {
    let mut checks = Vec::new();
    let chart = catalog::cone(1.0 / 6f64.sqrt())?;
    let params = PQParams::new(4.0 / 3.0, 3.0)?;
    let grid = ClassifyConfig::new(16);
    let an = max_residual(
        &chart,
        &params,
        &grid.clone().with_path(SamplePath::Analytic),
    )?;
    let st = max_residual(
        &chart,
        &params,
        &grid.clone().with_path(SamplePath::Stencil),
    )?;
    checks.push((an <= 1e-10, format!("analytic {an:.1e}")));
    checks.push((st <= 1e-3, format!("stencil {st:.1e}")));
    let family = catalog::cone_family();
    let sol = solve_param_pair(
        &family,
        3.0,
        (0.3, 0.7),
        (1.2, 1.8),
        &ClassifyConfig::new(8),
    )?;
    checks.push((
        (sol.p - 4.0 / 3.0).abs() <= 1e-6
            && (sol.theta - 0.408_248_29).abs() <= 1e-6
            && sol.iterations <= 100,
        format!(
            "solve (p, r) = ({:.8}, {:.8}) in {} steps",
            sol.p, sol.theta, sol.iterations
        ),
    ));
    let q2 = solve_param_pair(
        &family,
        2.0,
        (0.3, 0.7),
        (1.2, 1.8),
        &ClassifyConfig::new(8),
    )?;
    checks.push((
        !q2.admissible,
        format!("q=2 gives p = {:.6}, admissible = {}", q2.p, q2.admissible),
    ));
    Ok(outcome(&checks))
}

fn helix() -> Result<Outcome> {
    let mut checks = Vec::new();
    let h = catalog::helix(PI / 4.0, 7f64.sqrt() / 2.0, 0.5)?;
    let cfg = CurveConfig::default();
    let (a, b) = h.chart.domain();
    let pad = 1e-2 * (b - a);
    let (mut dk, mut dtau) = (0.0f64, 0.0f64);
    for i in 0..512 {
        let t = a + pad + (b - a - 2.0 * pad) * i as f64 / 511.0;
        let fr = frenet(&h.chart, t, &cfg)?;
        dk = dk.max((fr.k - 0.75).abs());
        dtau = dtau.max((fr.tau - 0.661_438).abs());
    }
    checks.push((dk <= 1e-6, format!("max |k - 0.75| {dk:.1e}")));
    checks.push((dtau <= 1e-6, format!("max |tau - 0.661438| {dtau:.1e}")));
    let p = p_closed_form(h.k, h.tau, 1.0)?.p;
    checks.push(((p - 2.0).abs() <= 1e-5, format!("p_closed_form {p:.12}")));
    let r = classify_curve(&h.chart, &PQParams::new(2.0, 2.0)?, 64, 1e-6, &cfg)?;
    let worst = r.max_abs_residual.iter().copied().fold(0.0, f64::max);
    checks.push((worst <= 1e-6, format!("SYS residual {worst:.1e}")));
    Ok(outcome(&checks))
}

fn ou_reduction() -> Result<Outcome> {
    let mut checks = Vec::new();
    for m in 1..=6i64 {
        let k = coefficients(
            Ratio::from_integer(2i64),
            Ratio::from_integer(2),
            m as usize,
        );
        let got = [k.c1, k.c2, k.c3, k.c4, k.c5, k.d1, k.d2, k.d3];
        let want = [-1, 0, 1, -1, 0, 2, -2, m].map(Ratio::from_integer);
        checks.push((got == want, format!("m={m}")));
    }
    Ok(outcome(&checks))
}

fn umbilic() -> Result<Outcome> {
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let b: f64 = rng.random_range(0.1..0.9);
        let p = 1.0 / (b * b);
        match umbilic_f(&PQParams::new(p, 2.0)?, 2, 6.0) {
            UmbilicSolution::Proper(f) => worst = worst.max((f * f - b * b / (1.0 - b * b)).abs()),
            UmbilicSolution::MinimalOnly => worst = f64::INFINITY,
        }
    }
    checks.push((
        worst <= 1e-12,
        format!("max |f^2 - b^2/(1-b^2)| {worst:.1e}"),
    ));
    let nonpos = [0.0, -1.0, -6.0].iter().all(|&s| {
        umbilic_f(&PQParams::new(2.0, 2.0).unwrap(), 2, s) == UmbilicSolution::MinimalOnly
    });
    checks.push((nonpos, "S <= 0 gives minimal-only".into()));
    Ok(outcome(&checks))
}

fn nonexistence() -> Result<Outcome> {
    let mut worst = f64::NEG_INFINITY;
    for c in [0.0, -1.0] {
        for i in 0..50 {
            for j in 0..50 {
                let k = 0.1 + 4.9 * i as f64 / 49.0;
                let tau = 5.0 * j as f64 / 49.0;
                worst = worst.max(p_closed_form(k, tau, c)?.p);
            }
        }
    }
    Ok(outcome(&[(
        worst <= 1.0 + 1e-12,
        format!("max p_closed_form {worst}"),
    )]))
}

fn first_variation() -> Result<Outcome> {
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    let cfg = CurveConfig::default();
    let h = catalog::helix(PI / 4.0, 7f64.sqrt() / 2.0, 0.5)?;
    let curves = [
        (
            "circle",
            DiscretizedCurve::new(catalog::circle(1.0)?, VARIATION_NODES)?,
            None,
        ),
        (
            "helix",
            DiscretizedCurve::new(h.chart.clone(), VARIATION_NODES)?,
            Some(h.p),
        ),
    ];
    for (name, d, critical_p) in &curves {
        let dim = d.curve().space_form().embedding_dim();
        for (p, q) in [(2.0, 2.0), (3.0, 2.0), (2.0, 3.0), (1.5, 2.5)] {
            let critical = critical_p.is_some_and(|cp| (cp - p).abs() < 1e-12);
            let (mut worst_rel, mut worst_order, mut worst_lhs) = (0.0f64, 0.0f64, 0.0f64);
            let mut flat = 0;
            let mut ok = true;
            for _ in 0..5 {
                let f = random_bump(&mut rng, d.curve().domain(), dim);
                let r =
                    first_variation_check(d, &f, &PQParams::new(p, q)?, &DEFAULT_EPS_STEPS, &cfg)?;
                if critical {
                    worst_lhs = worst_lhs.max(r.lhs.abs() / r.field_sup_norm);
                    ok &= r.lhs.abs() <= 1e-5 * r.field_sup_norm;
                } else {
                    worst_rel = worst_rel.max(r.rel_error);
                    ok &= r.rel_error <= 1e-4;
                }
                match r.observed_order {
                    Some(o) => {
                        worst_order = worst_order.max((o - 2.0).abs());
                        ok &= (o - 2.0).abs() <= 0.2;
                    }
                    None if r.step_independent => flat += 1,
                    None => ok = false,
                }
            }
            let what = if critical {
                format!("{name} ({p},{q}) critical max |lhs|/|v| {worst_lhs:.1e}")
            } else {
                format!("{name} ({p},{q}) max rel {worst_rel:.1e}")
            };
            let order = if flat == 5 {
                "step-independent".to_string()
            } else {
                format!("max |order-2| {worst_order:.2}")
            };
            checks.push((ok, format!("{what}, {order}")));
        }
    }
    Ok(outcome(&checks))
}

fn orientation() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfg = DerivativeConfig::default();
    let base = catalog::cone(0.45)?;
    let map = {
        let c = base.clone();
        Arc::new(move |u: &[f64]| c.point(u))
    };
    let natural = ImmersionChart::new("cone-fd", *base.space_form(), base.domain().clone(), map)?;
    let flipped = natural.clone().with_orientation(Orientation::Flipped);
    let margin = natural.margin(&cfg);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let params = PQParams::new(rng.random_range(1.1..4.0), rng.random_range(1.1..4.0))?;
        let (a, b, c): (GeometricSample, GeometricSample, f64) = if i % 2 == 0 {
            let u: Vec<f64> = (0..2)
                .map(|k| {
                    rng.random_range(
                        natural.domain().lo[k] + margin[k]..natural.domain().hi[k] - margin[k],
                    )
                })
                .collect();
            (
                natural.stencil_sample(&u, &cfg)?,
                flipped.stencil_sample(&u, &cfg)?,
                0.0,
            )
        } else {
            let s = catalog::sphere_in_sphere(3, rng.random_range(0.2..0.8))?
                .stencil_sample(&[1.0, 1.5, 2.0 + 0.1 * i as f64], &cfg)?;
            (s.clone(), s.flipped(), 1.0)
        };
        let (ra, rb) = (
            residual_spaceform(&a, &params, c),
            residual_spaceform(&b, &params, c),
        );
        let (ga, gb) = (residual(&a, &params), residual(&b, &params));
        worst = worst
            .max((ra.eq1 - rb.eq1).abs())
            .max((ga.eq1 - gb.eq1).abs());
        for (x, y) in ra.eq2.iter().zip(&rb.eq2).chain(ga.eq2.iter().zip(&gb.eq2)) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(outcome(&[(
        worst <= 1e-12,
        format!("max residual change {worst:.1e} over 20 samples"),
    )]))
}

fn minimal() -> Result<Outcome> {
    let mut checks = Vec::new();
    let params = PQParams::new(2.5, 3.0)?;
    let charts = [
        catalog::plane()?,
        catalog::great_sphere(2)?,
        catalog::great_sphere(4)?,
    ];
    for chart in &charts {
        let r = classify(
            chart,
            &params,
            &ClassifyConfig::new(6).with_path(SamplePath::Analytic),
        )?;
        let ok = r.classification == Classification::Minimal
            && r.max_abs_eq1 == 0.0
            && r.max_eq2_norm == 0.0;
        checks.push((
            ok,
            format!(
                "{} m={} {}",
                chart.name(),
                chart.m(),
                r.classification.label()
            ),
        ));
    }
    Ok(outcome(&checks))
}

type Criterion = fn() -> Result<Outcome>;

fn main() {
    let criteria: [(&str, Criterion); 9] = [
        ("sphere-in-sphere", sphere_in_sphere),
        ("cone", cone),
        ("helix", helix),
        ("biharmonic reduction", ou_reduction),
        ("totally umbilical", umbilic),
        ("nonexistence", nonexistence),
        ("first variation", first_variation),
        ("orientation invariance", orientation),
        ("minimal cases", minimal),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run().unwrap_or_else(|e| Outcome {
            pass: false,
            detail: format!("error: {e}"),
        });
        if !o.pass {
            failures += 1;
        }
        println!(
            "criterion {} {:<24} {} ({:.2}s) {}",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
