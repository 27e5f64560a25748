//! Self-check suites run by `nrt validate`: annulus oracle, key identity,
//! flux balance, and homogeneity of the indicator.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::forward::{
    annulus_multiplier, flux_residual, response_trace, solve_mixed_bvp, DirichletSolver, MixedSolver, TOL_FLUX,
};
use crate::geometry::{Curve2D, CurveShape, Point, SceneGeometry, TestDomain};
use crate::indicator::{gram_matrix, indicator_value, indicator_value_eps, response_vector, IdentityChecker};
use crate::probes::{build_basis, BasisConfig, Parity, Probe, DEFAULT_TRUNCATION};

pub const TOL_ORACLE: f64 = 1e-8;
pub const TOL_IDENTITY: f64 = 1e-6;
pub const TOL_HAND_IDENTITY: f64 = 1e-8;
pub const TOL_HOMOGENEITY: f64 = 1e-12;
/// `c·f` pushed through the forward solve: LU rounding (~1e-16) is amplified
/// by the truncated pseudo-inverse, so the end-to-end check is looser.
pub const TOL_HOMOGENEITY_PIPELINE: f64 = 1e-10;
/// Random probes per scene in the key-identity suite.
pub const IDENTITY_PROBES: usize = 50;

#[derive(Debug, Clone, Copy, Default)]
pub struct ValidateOptions {
    /// Fault injection: perturb the quadrature weights used by the flux check.
    pub corrupt_weights: bool,
}

#[derive(Debug, Clone)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(suite: &'static str, name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { suite, name: name.into(), value, tolerance, passed: value <= tolerance }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<13} {:<46} {:.3e} (tol {:.0e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.value,
            self.tolerance
        )
    }
}

fn circle(r: f64, c: [f64; 2], n: usize) -> Result<Curve2D> {
    Curve2D::new(CurveShape::Circle { radius: r, center: c }, n)
}

/// Unit disk with a concentric disk, an offset disk, and a kite cavity.
pub fn test_scenes(n: usize) -> Result<Vec<(&'static str, SceneGeometry)>> {
    let outer = circle(1.0, [0.0, 0.0], n)?;
    let kite = Curve2D::new(CurveShape::Kite { scale: 0.2, center: [0.1, 0.1], fold: 0.65, stretch: 1.5 }, n)?;
    Ok(vec![
        ("concentric", SceneGeometry::new(outer.clone(), circle(0.5, [0.0, 0.0], n)?, None)?),
        ("offset disk", SceneGeometry::new(outer.clone(), circle(0.3, [0.2, -0.1], n)?, None)?),
        ("kite", SceneGeometry::new(outer, kite, None)?),
    ])
}

/// `f(t) = Σ_{m=1}^{8} (cos mt + sin mt)/m`: every low mode is excited, so no
/// probe pairs with the data trivially.
pub fn rich_data(outer: &Curve2D) -> Vec<f64> {
    outer
        .params()
        .iter()
        .map(|t| (1..=8).map(|m| ((m as f64 * t).cos() + (m as f64 * t).sin()) / m as f64).sum())
        .collect()
}

/// Random probe regular on the closed unit disk's neighbourhood.
pub fn random_probe(rng: &mut ChaCha8Rng) -> Probe {
    let angle = rng.random_range(0.0..2.0 * PI);
    let dist = rng.random_range(1.2..2.0);
    let source = Point::new(dist * angle.cos(), dist * angle.sin());
    match rng.random_range(0..3) {
        0 => {
            let parity = if rng.random_bool(0.5) { Parity::Cos } else { Parity::Sin };
            Probe::poly(rng.random_range(1..=8), parity, Point::zeros())
        }
        1 => Probe::monopole(source),
        _ => {
            let phi = rng.random_range(0.0..2.0 * PI);
            Probe::dipole(source, Point::new(phi.cos(), phi.sin()))
        }
    }
}

fn oracle_suite(out: &mut Vec<Check>) -> Result<()> {
    for n in [128, 256] {
        let scene = SceneGeometry::new(circle(1.0, [0.0, 0.0], n)?, circle(0.5, [0.0, 0.0], n)?, None)?;
        let modes = [(1u32, 1.0, 0.0), (2, 0.0, 0.5), (3, 0.3, -0.2)];
        let f: Vec<f64> = scene
            .outer
            .params()
            .iter()
            .map(|t| modes.iter().map(|&(m, a, b)| a * (m as f64 * t).cos() + b * (m as f64 * t).sin()).sum())
            .collect();
        let mut exact = vec![0.0; n];
        for &(m, a, b) in &modes {
            let lam = annulus_multiplier(1.0, 0.5, m)?;
            for (e, t) in exact.iter_mut().zip(scene.outer.params()) {
                *e += lam * (a * (m as f64 * t).cos() + b * (m as f64 * t).sin());
            }
        }
        let q = MixedSolver::new(&scene)?.solve(&f)?.dnu_u;
        let w = scene.outer.weights();
        let err: f64 = q.iter().zip(&exact).zip(w).map(|((q, e), w)| w * (q - e).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = exact.iter().zip(w).map(|(e, w)| w * e * e).sum::<f64>().sqrt();
        out.push(Check::new("oracle", format!("annulus R1=0.5, modes 1-3, N={n}"), err / norm, TOL_ORACLE));
    }
    Ok(())
}

fn identity_suite(out: &mut Vec<Check>) -> Result<()> {
    // concentric, f = cos t, z = Re ζ: both sides equal −0.4π
    let scene = SceneGeometry::new(circle(1.0, [0.0, 0.0], 256)?, circle(0.5, [0.0, 0.0], 256)?, None)?;
    let f: Vec<f64> = scene.outer.params().iter().map(|t| t.cos()).collect();
    let hand = IdentityChecker::new(&scene, &f)?.check(&Probe::poly(1, Parity::Cos, Point::zeros()))?;
    let target = -0.4 * PI;
    let dev = ((hand.lhs - target).abs()).max((hand.rhs - target).abs()) / target.abs();
    out.push(Check::new("key-identity", "hand case LHS = RHS = -0.4π", dev, TOL_HAND_IDENTITY));

    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    for (name, scene) in test_scenes(256)? {
        let checker = IdentityChecker::new(&scene, &rich_data(&scene.outer))?;
        let mut worst: f64 = 0.0;
        for _ in 0..IDENTITY_PROBES {
            worst = worst.max(checker.check(&random_probe(&mut rng))?.residual);
        }
        out.push(Check::new("key-identity", format!("{name}: max over {IDENTITY_PROBES} probes"), worst, TOL_IDENTITY));
    }
    Ok(())
}

fn corrupted(weights: &[f64], ts: &[f64]) -> Vec<f64> {
    weights.iter().zip(ts).map(|(w, t)| w * (1.0 + 0.2 * t.cos())).collect()
}

fn flux_suite(out: &mut Vec<Check>, opts: ValidateOptions) -> Result<()> {
    for (name, scene) in test_scenes(256)? {
        let f = rich_data(&scene.outer);
        let u = MixedSolver::new(&scene)?.solve(&f)?.dnu_u;
        let v = DirichletSolver::new(&scene.outer)?.solve(&f)?.dnu_v;
        let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        let weights = if opts.corrupt_weights {
            corrupted(scene.outer.weights(), scene.outer.params())
        } else {
            scene.outer.weights().to_vec()
        };
        for (field, q) in [("u", &u), ("v", &v), ("w", &w)] {
            out.push(Check::new("flux-balance", format!("{name}: ∂_ν{field}"), flux_residual(&weights, q), TOL_FLUX));
        }
    }
    Ok(())
}

fn homogeneity_suite(out: &mut Vec<Check>) -> Result<()> {
    let scene = &test_scenes(256)?[2].1;
    let outer = &scene.outer;
    let basis = build_basis(&BasisConfig::default(), outer)?;
    let f = rich_data(outer);
    let domains = [
        ("containing", TestDomain::disk(0, Point::new(0.1, 0.1), 0.4)?),
        ("disjoint", TestDomain::disk(1, Point::new(-0.45, -0.3), 0.3)?),
    ];
    let base = response_trace(&solve_mixed_bvp(scene, &f)?, outer)?;
    let r = response_vector(&base, &basis, outer)?;
    for (label, g) in &domains {
        let gram = gram_matrix(&basis, g)?;
        let i1 = indicator_value(&r, &gram, DEFAULT_TRUNCATION)?.value;
        for c in [2.5, -3.0] {
            let rc: Vec<f64> = r.iter().map(|v| c * v).collect();
            let ic = indicator_value(&rc, &gram, DEFAULT_TRUNCATION)?.value;
            let dev = (ic - c.abs() * i1).abs() / (c.abs() * i1);
            out.push(Check::new("homogeneity", format!("{label}: I1({c}·r) = |{c}|·I1(r)"), dev, TOL_HOMOGENEITY));

            let cf: Vec<f64> = f.iter().map(|v| c * v).collect();
            let rc = response_vector(&response_trace(&solve_mixed_bvp(scene, &cf)?, outer)?, &basis, outer)?;
            let ic = indicator_value(&rc, &gram, DEFAULT_TRUNCATION)?.value;
            let dev = (ic - c.abs() * i1).abs() / (c.abs() * i1);
            out.push(Check::new("homogeneity", format!("{label}: I1({c}·f) = |{c}|·I1(f), via solver"), dev, TOL_HOMOGENEITY_PIPELINE));
        }
        for eps in [0.1, 10.0] {
            let ie = indicator_value_eps(&r, &gram, DEFAULT_TRUNCATION, eps)?.value;
            let dev = (ie - eps * i1).abs() / (eps * i1);
            out.push(Check::new("homogeneity", format!("{label}: I_ε = ε·I1, ε={eps}"), dev, TOL_HOMOGENEITY));
        }
    }
    Ok(())
}

/// Runs every suite; solver errors abort, failed checks are reported.
pub fn run_all(opts: ValidateOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    oracle_suite(&mut out)?;
    identity_suite(&mut out)?;
    flux_suite(&mut out, opts)?;
    homogeneity_suite(&mut out)?;
    Ok(out)
}
