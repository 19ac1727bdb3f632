use std::sync::Arc;

use approx::assert_relative_eq;
use nalgebra::DVector;
use pqharm_core::catalog;
use pqharm_core::immersion::{
    DerivativeConfig, GeometricSample, GridSpec, ImmersionChart, Orientation, ParamBox, SamplePath,
};
use pqharm_core::residual::{residual_spaceform, PQParams};
use pqharm_core::{GeomError, SpaceForm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg() -> DerivativeConfig {
    DerivativeConfig::default()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[test]
fn plane_metric_and_normal() {
    let p = catalog::plane().unwrap();
    let u = [0.1, -0.2];
    let ff = p.first_fundamental(&u, &cfg()).unwrap();
    assert_eq!(ff.g, nalgebra::DMatrix::identity(2, 2));
    assert_eq!(
        p.unit_normal(&u, &cfg()).unwrap(),
        DVector::from_vec(vec![0.0, 0.0, 1.0])
    );
    let sp = p.shape_packet(&u, &cfg()).unwrap();
    assert_eq!(sp.f, 0.0);
    assert!(sp.a.iter().all(|x| *x == 0.0));
}

#[test]
fn cone_reference_values() {
    let r = 1.0 / 6f64.sqrt();
    let c = catalog::cone(r).unwrap();
    let u = [1.0, 2.0];
    let ff = c.first_fundamental(&u, &cfg()).unwrap();
    assert_relative_eq!(ff.g[(0, 0)], 7.0 / 6.0, epsilon = 1e-14);
    assert_relative_eq!(ff.g[(1, 1)], 1.0 / 6.0, epsilon = 1e-14);
    assert!(ff.g[(0, 1)].abs() < 1e-15);

    let eta = c.unit_normal(&u, &cfg()).unwrap();
    let want = DVector::from_vec(vec![-u[1].cos(), -u[1].sin(), r]) / (1.0 + r * r).sqrt();
    assert!((eta - want).norm() < 1e-14);

    let sp = c.shape_packet(&u, &cfg()).unwrap();
    assert_relative_eq!(sp.f, 3.0 / 7f64.sqrt(), epsilon = 1e-13);
    assert_relative_eq!(sp.norm_a2, 36.0 / 7.0, epsilon = 1e-12);

    let s = c.stencil_sample(&u, &cfg()).unwrap();
    assert!(
        rel(s.laplacian_f, 18.0 / (7.0 * 7f64.sqrt())) < 1e-4,
        "{}",
        s.laplacian_f
    );
    assert!(rel(s.grad_f_norm2, 54.0 / 49.0) < 1e-4);
    assert!(s.a_grad_f.iter().all(|x| x.abs() < 1e-6));
}

#[test]
fn cone_laplacian_is_positive_along_u() {
    let r = 0.6;
    let c = catalog::cone(r).unwrap();
    for u in [0.7, 1.0, 1.5, 1.9] {
        let s = c.stencil_sample(&[u, 1.0], &cfg()).unwrap();
        let want = 1.0 / (2.0 * r * (1.0 + r * r).powf(1.5) * u.powi(3));
        assert!(
            (s.laplacian_f - want).abs() / want < 1e-4,
            "u={u}: {} vs {want}",
            s.laplacian_f
        );
    }
}

#[test]
fn round_sphere_reference_values() {
    let s = catalog::sphere_in_sphere(2, 0.5).unwrap();
    let u = [1.1, 2.3];
    let ff = s.first_fundamental(&u, &cfg()).unwrap();
    assert_relative_eq!(ff.det_g, 0.25 * u[0].sin().powi(2), epsilon = 1e-14);
    let sp = s.shape_packet(&u, &cfg()).unwrap();
    assert!((sp.a.clone() + nalgebra::DMatrix::identity(2, 2)).norm() < 1e-12);
    assert_relative_eq!(sp.f, -1.0, epsilon = 1e-13);
    assert_relative_eq!(sp.norm_a2, 2.0, epsilon = 1e-12);

    // η = (1/r)(x, -a²/b), r = 1
    let x = s.point(&u);
    let eta = s.unit_normal(&u, &cfg()).unwrap();
    let want = DVector::from_vec(vec![x[0], x[1], x[2], -0.5 / 0.5f64.sqrt()]);
    assert!((eta - want).norm() < 1e-13);

    let a = s.analytic_sample(&u).unwrap();
    assert_eq!(
        (a.m, a.f, a.laplacian_f, a.norm_a2, a.ric_eta_eta),
        (2, -1.0 + 0.0, 0.0, 2.0, 2.0)
    );
    assert!((a.f + 1.0).abs() < 1e-15);
}

#[test]
fn constant_f_chart_has_flat_f() {
    let s = catalog::sphere_in_sphere(3, 0.3).unwrap();
    let sample = s.stencil_sample(&[1.2, 1.4, 3.0], &cfg()).unwrap();
    assert!(sample.grad_f.iter().all(|x| x.abs() < 1e-8));
    assert!(sample.laplacian_f.abs() < 1e-6);
}

fn assert_samples_agree(a: &GeometricSample, s: &GeometricSample, what: &str) {
    let pairs = [
        (a.f, s.f),
        (a.grad_f_norm2, s.grad_f_norm2),
        (a.laplacian_f, s.laplacian_f),
        (a.norm_a2, s.norm_a2),
        (a.ric_eta_eta, s.ric_eta_eta),
    ];
    for (x, y) in pairs {
        assert!(rel(y, x) < 1e-4, "{what}: {x} vs {y}");
    }
    for (x, y) in a
        .grad_f
        .iter()
        .zip(&s.grad_f)
        .chain(a.a_grad_f.iter().zip(&s.a_grad_f))
    {
        assert!(rel(*y, *x) < 1e-4, "{what}: {x} vs {y}");
    }
    for (ra, rs) in a.metric.iter().zip(&s.metric) {
        for (x, y) in ra.iter().zip(rs) {
            assert!(rel(*y, *x) < 1e-10, "{what}: metric {x} vs {y}");
        }
    }
}

#[test]
fn stencil_matches_analytic_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let charts = [
        catalog::cone(1.0 / 6f64.sqrt()).unwrap(),
        catalog::cone(0.9).unwrap(),
        catalog::sphere_in_sphere(2, 0.5).unwrap(),
        catalog::sphere_in_sphere(3, 0.7).unwrap(),
        catalog::plane().unwrap(),
        catalog::great_sphere(2).unwrap(),
    ];
    for chart in &charts {
        let margin = chart.margin(&cfg());
        for _ in 0..100 {
            let u: Vec<f64> = (0..chart.m())
                .map(|a| {
                    rng.random_range(
                        chart.domain().lo[a] + margin[a]..chart.domain().hi[a] - margin[a],
                    )
                })
                .collect();
            let an = chart.analytic_sample(&u).unwrap();
            let st = chart.stencil_sample(&u, &cfg()).unwrap();
            assert_samples_agree(&an, &st, chart.name());
        }
    }
}

#[test]
fn orientation_flip_leaves_residuals_unchanged() {
    let r = 0.45;
    let base = catalog::cone(r).unwrap();
    let map = {
        let c = base.clone();
        Arc::new(move |u: &[f64]| c.point(u))
    };
    let natural = ImmersionChart::new(
        "cone-fd",
        SpaceForm::euclidean(3),
        base.domain().clone(),
        map,
    )
    .unwrap();
    let flipped = natural.clone().with_orientation(Orientation::Flipped);
    let params = PQParams::new(1.7, 2.6).unwrap();
    for u in [[0.8, 1.0], [1.3, 4.0], [1.7, 0.4]] {
        let a = natural.stencil_sample(&u, &cfg()).unwrap();
        let b = flipped.stencil_sample(&u, &cfg()).unwrap();
        assert!((a.f + b.f).abs() < 1e-12);
        let ra = residual_spaceform(&a, &params, 0.0);
        let rb = residual_spaceform(&b, &params, 0.0);
        assert!((ra.eq1 - rb.eq1).abs() < 1e-12);
        for (x, y) in ra.eq2.iter().zip(&rb.eq2) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn degenerate_chart_is_rejected() {
    let map = Arc::new(|u: &[f64]| DVector::from_vec(vec![u[0] + u[1], u[0] + u[1], 0.0]));
    let c = ImmersionChart::new(
        "flat",
        SpaceForm::euclidean(3),
        ParamBox::new(vec![0.0; 2], vec![1.0; 2]).unwrap(),
        map,
    )
    .unwrap();
    assert!(matches!(
        c.first_fundamental(&[0.5, 0.5], &cfg()),
        Err(GeomError::DegenerateImmersion { .. })
    ));
    assert!(matches!(
        c.stencil_sample(&[0.5, 0.5], &cfg()),
        Err(GeomError::DegenerateImmersion { .. })
    ));
}

#[test]
fn off_model_chart_is_rejected() {
    let map = Arc::new(|u: &[f64]| DVector::from_vec(vec![u[0], u[1], 0.0, 2.0]));
    let c = ImmersionChart::new(
        "off",
        SpaceForm::unit_sphere(3),
        ParamBox::new(vec![0.0; 2], vec![1.0; 2]).unwrap(),
        map,
    )
    .unwrap();
    assert!(matches!(
        c.shape_packet(&[0.5, 0.5], &cfg()),
        Err(GeomError::OffModel(_))
    ));
}

#[test]
fn boundary_proximity_is_rejected() {
    let c = catalog::cone(0.5).unwrap();
    let r = c.stencil_sample(&[0.5 + 1e-6, 1.0], &cfg());
    assert!(matches!(r, Err(GeomError::BoundaryProximity { .. })));
    let a = c.geometric_sample(
        &[2.5, 1.0],
        &DerivativeConfig {
            path: SamplePath::Analytic,
            ..cfg()
        },
    );
    assert!(matches!(a, Err(GeomError::BoundaryProximity { .. })));
}

#[test]
fn grid_respects_margins() {
    let c = catalog::cone(0.5).unwrap();
    let pts = c.grid(&GridSpec::new(8), &cfg()).unwrap();
    assert_eq!(pts.len(), 64);
    let m = c.margin(&cfg());
    assert!(pts
        .iter()
        .all(|p| p[0] >= 0.5 + m[0] - 1e-15 && p[0] <= 2.0 - m[0] + 1e-15));
    assert!(c.grid(&GridSpec::new(3), &cfg()).is_err());
    let tight = GridSpec {
        points_per_axis: 8,
        margin: Some(vec![1e-6, 1e-6]),
    };
    assert!(c.grid(&tight, &cfg()).is_err());
    // every grid point is far enough from the boundary for the stencil
    assert!(c
        .sample_grid(
            &pts,
            &DerivativeConfig {
                path: SamplePath::Stencil,
                ..cfg()
            }
        )
        .is_ok());
}

#[test]
fn gradient_is_richardson_consistent() {
    let c = catalog::cone(0.5).unwrap();
    let u = [1.2, 2.0];
    let s = c.stencil_sample(&u, &cfg()).unwrap();
    let h = 0.5 * c.steps(&cfg())[0];
    let f = |x: f64| c.shape_packet(&[x, u[1]], &cfg()).unwrap().f;
    let central = (f(u[0] + h) - f(u[0] - h)) / (2.0 * h);
    // g^{uu} = 1/(1+r²) maps ∂_u f onto the chart gradient
    let df = s.grad_f[0] * 1.25;
    let err_h = (central - df).abs();
    let central2 = (f(u[0] + 2.0 * h) - f(u[0] - 2.0 * h)) / (4.0 * h);
    let err_2h = (central2 - df).abs();
    let order = (err_2h / err_h).log2();
    assert!((order - 2.0).abs() < 0.2, "order {order}");
}
