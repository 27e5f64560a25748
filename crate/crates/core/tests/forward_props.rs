use std::f64::consts::PI;

use nrt_core::forward::{
    add_noise, annulus_multiplier, flux_residual, response_trace, solve_dirichlet, solve_mixed_bvp, MixedSolver,
};
use nrt_core::geometry::{Curve2D, CurveShape, Point, SceneGeometry};
use nrt_core::indicator::IdentityChecker;
use nrt_core::spectral::resample;
use nrt_core::validate::{random_probe, rich_data, test_scenes};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn circle(r: f64, c: [f64; 2], n: usize) -> Curve2D {
    Curve2D::new(CurveShape::Circle { radius: r, center: c }, n).unwrap()
}

fn kite_scene(n: usize) -> SceneGeometry {
    let kite = Curve2D::new(CurveShape::Kite { scale: 0.2, center: [0.1, 0.1], fold: 0.65, stretch: 1.5 }, n).unwrap();
    SceneGeometry::new(circle(1.0, [0.0, 0.0], n), kite, None).unwrap()
}

fn data(c: &Curve2D, f: impl Fn(f64) -> f64) -> Vec<f64> {
    c.params().iter().map(|&t| f(t)).collect()
}

#[test]
fn neumann_trace_is_resolution_independent() {
    let f = |t: f64| t.cos() + 0.3 * (3.0 * t).sin();
    let coarse = kite_scene(256);
    let fine = kite_scene(512);
    let q256 = solve_mixed_bvp(&coarse, &data(&coarse.outer, f)).unwrap().dnu_u;
    let q512 = solve_mixed_bvp(&fine, &data(&fine.outer, f)).unwrap().dnu_u;
    let down = resample(&q512, 256);
    let norm = q256.iter().map(|v| v * v).sum::<f64>().sqrt();
    let err = q256.iter().zip(&down).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    assert!(err <= 1e-8 * norm, "relative difference {}", err / norm);
}

#[test]
fn annulus_oracle_higher_modes() {
    let scene = SceneGeometry::new(circle(1.0, [0.0, 0.0], 256), circle(0.5, [0.0, 0.0], 256), None).unwrap();
    for m in 1..=6u32 {
        let q = MixedSolver::new(&scene).unwrap().solve(&data(&scene.outer, |t| (m as f64 * t).sin())).unwrap().dnu_u;
        let lam = annulus_multiplier(1.0, 0.5, m).unwrap();
        for (q, t) in q.iter().zip(scene.outer.params()) {
            assert!((q - lam * (m as f64 * t).sin()).abs() < 1e-10 * lam, "m={m}");
        }
    }
}

#[test]
fn dirichlet_to_neumann_on_the_disk() {
    let outer = circle(1.0, [0.0, 0.0], 128);
    for m in 1..=8 {
        let q = solve_dirichlet(&outer, &data(&outer, |t| (m as f64 * t).cos())).unwrap();
        for (q, t) in q.iter().zip(outer.params()) {
            assert!((q - m as f64 * (m as f64 * t).cos()).abs() < 1e-10 * m as f64);
        }
    }
}

/// Cavity field: u on ∂D for the annulus is (r + R1²/r)·cos θ scaled.
#[test]
fn cavity_trace_matches_annulus_solution() {
    let scene = SceneGeometry::new(circle(1.0, [0.0, 0.0], 256), circle(0.5, [0.0, 0.0], 256), None).unwrap();
    let sol = MixedSolver::new(&scene).unwrap().solve(&data(&scene.outer, f64::cos)).unwrap();
    let a = 1.0 / (1.0 + 0.25);
    for (u, p) in sol.u_cavity.iter().zip(scene.cavity.points()) {
        let exact = a * (0.5 + 0.25 / 0.5) * p.y.atan2(p.x).cos();
        assert!((u - exact).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fluxes_vanish_for_random_data(coeffs in prop::collection::vec(-1.0f64..1.0, 8), which in 0usize..3) {
        let (_, scene) = test_scenes(128).unwrap().swap_remove(which);
        let f: Vec<f64> = scene
            .outer
            .params()
            .iter()
            .map(|t| coeffs.iter().enumerate().map(|(k, c)| c * ((k / 2 + 1) as f64 * t + (k % 2) as f64 * PI / 2.0).cos()).sum())
            .collect();
        prop_assume!(f.iter().any(|v| v.abs() > 1e-3));
        let cauchy = solve_mixed_bvp(&scene, &f).unwrap();
        let trace = response_trace(&cauchy, &scene.outer).unwrap();
        let v = solve_dirichlet(&scene.outer, &f).unwrap();
        prop_assert!(cauchy.flux_residual() <= 1e-8);
        prop_assert!(flux_residual(scene.outer.weights(), &v) <= 1e-8);
        prop_assert!(trace.flux_residual(&scene.outer) <= 1e-8);
    }
}

#[test]
fn key_identity_on_perturbed_scenes() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for (cx, cy, r) in [(0.3, 0.2, 0.15), (-0.25, 0.1, 0.35), (0.0, -0.4, 0.2)] {
        let scene = SceneGeometry::new(circle(1.0, [0.0, 0.0], 256), circle(r, [cx, cy], 256), None).unwrap();
        let checker = IdentityChecker::new(&scene, &rich_data(&scene.outer)).unwrap();
        for _ in 0..20 {
            let c = checker.check(&random_probe(&mut rng)).unwrap();
            assert!(c.residual <= 1e-6, "({cx}, {cy}, {r}): {c:?}");
        }
    }
}

#[test]
fn noise_is_seeded_and_flux_free() {
    let scene = kite_scene(256);
    let cauchy = solve_mixed_bvp(&scene, &data(&scene.outer, f64::cos)).unwrap();
    let a = add_noise(&cauchy, 0.01, 7).unwrap();
    let b = add_noise(&cauchy, 0.01, 7).unwrap();
    let c = add_noise(&cauchy, 0.01, 8).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.dnu_u, c.dnu_u);
    assert!(a.flux_residual() <= 1e-8);
    let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
    let diff: Vec<f64> = a.dnu_u.iter().zip(&cauchy.dnu_u).map(|(x, y)| x - y).collect();
    let ratio = rms(&diff) / rms(&cauchy.dnu_u);
    assert!((0.007..0.013).contains(&ratio), "noise level {ratio}");
}

#[test]
fn interior_point_probe_is_singular() {
    let outer = circle(1.0, [0.0, 0.0], 64);
    let p = nrt_core::probes::Probe::monopole(Point::new(0.2, 0.0));
    assert!(nrt_core::probes::check_admissible(&p, &outer).is_err());
}
