//! Boundary integral solvers for the cavity problem
//!
//! ```text
//! Δu = 0 in Ω∖D̄,   u = f on ∂Ω,   ∂_ν u = 0 on ∂D
//! ```
//!
//! and for the cavity-free Dirichlet problem, plus Cauchy data handling.
//!
//! Both use Green's representation on the boundary of the field region,
//! `½u(x) = ∫ Φ ∂_n u − u ∂_n Φ dS`, discretized by Nyström quadrature with
//! Kress's product rule for the logarithmic singularity. The kernel is
//! `Φ(x, y) = −(1/2π) ln(|x − y|/L)` with `L = 2·diam(Ω)`: the added constant
//! integrates against a zero-flux field to nothing, and keeps the single-layer
//! operator on ∂Ω injective for every curve (its logarithmic capacity is at
//! most `diam/2 < L`).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, LU};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Curve2D, Point, SceneGeometry};
use crate::spectral;

/// Default relative tolerance for the zero-total-flux invariant.
pub const TOL_FLUX: f64 = 1e-8;

/// Default synthesis and inversion node counts.
pub const SYNTHESIS_NODES: usize = 512;
pub const INVERSION_NODES: usize = 256;

fn log_scale(outer: &Curve2D) -> f64 {
    2.0 * outer.diameter()
}

/// Kress weights `R_|i−j|` for `∫ ln(4 sin²((t−τ)/2)) φ(τ) dτ` on `2n` nodes.
fn kress_weights(nodes: usize) -> Vec<f64> {
    let n = nodes / 2;
    let nf = n as f64;
    (0..nodes)
        .map(|k| {
            let s = k as f64 * PI / nf;
            let sum: f64 = (1..n).map(|m| (m as f64 * s).cos() / m as f64).sum();
            -2.0 * PI / nf * sum - PI / (nf * nf) * (nf * s).cos()
        })
        .collect()
}

/// `S q (x_i) = ∫_Γ Φ(x_i, y) q(y) dS_y` for targets and density on the same curve.
fn single_layer_self(curve: &Curve2D, scale: f64) -> DMatrix<f64> {
    let n = curve.len();
    let r = kress_weights(n);
    let h = PI / (n / 2) as f64;
    let m1 = -0.25 / PI;
    let pts = curve.points();
    let t = curve.params();
    DMatrix::from_fn(n, n, |i, j| {
        let speed = curve.speeds()[j];
        let m2 = if i == j {
            -(0.5 / PI) * (speed / scale).ln()
        } else {
            let kernel = -(0.5 / PI) * ((pts[i] - pts[j]).norm() / scale).ln();
            let s = 0.5 * (t[i] - t[j]);
            kernel - m1 * (4.0 * s.sin() * s.sin()).ln()
        };
        let d = i.abs_diff(j);
        (r[d] * m1 + h * m2) * speed
    })
}

/// `Σ_j ∂_{n_y}Φ(x_i, y_j) w_j φ_j` on one curve; `orientation` is `+1` when the
/// field region lies inside the curve and `−1` when it lies outside.
fn double_layer_self(curve: &Curve2D, orientation: f64) -> DMatrix<f64> {
    let n = curve.len();
    let pts = curve.points();
    let h = 2.0 * PI / n as f64;
    DMatrix::from_fn(n, n, |i, j| {
        let k = if i == j {
            curve.curvature_term(i) / (4.0 * PI)
        } else {
            let d = pts[i] - pts[j];
            let tan = curve.tangents()[j];
            // n_j |x'_j| = (x₂', −x₁')
            (0.5 / PI) * (tan.y * d.x - tan.x * d.y) / d.norm_squared()
        };
        orientation * h * k
    })
}

fn single_layer_cross(targets: &[Point], source: &Curve2D, scale: f64) -> DMatrix<f64> {
    let pts = source.points();
    let w = source.weights();
    DMatrix::from_fn(targets.len(), source.len(), |i, j| {
        -(0.5 / PI) * ((targets[i] - pts[j]).norm() / scale).ln() * w[j]
    })
}

fn double_layer_cross(targets: &[Point], source: &Curve2D, orientation: f64) -> DMatrix<f64> {
    let pts = source.points();
    let nrm = source.normals();
    let w = source.weights();
    DMatrix::from_fn(targets.len(), source.len(), |i, j| {
        let d = targets[i] - pts[j];
        orientation * (0.5 / PI) * nrm[j].dot(&d) / d.norm_squared() * w[j]
    })
}

fn check_samples(curve: &Curve2D, f: &[f64]) -> Result<()> {
    if f.len() != curve.len() {
        return invalid(format!("expected {} boundary samples, got {}", curve.len(), f.len()));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return invalid("boundary samples must be finite");
    }
    Ok(())
}

/// Whether the samples satisfy `stddev(f) > 1e-10·(|mean f| + 1)`.
pub fn is_nonconstant(f: &[f64]) -> bool {
    let n = f.len() as f64;
    let mean = f.iter().sum::<f64>() / n;
    let var = f.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() > 1e-10 * (mean.abs() + 1.0)
}

fn nonconstant(f: &[f64]) -> Result<()> {
    if is_nonconstant(f) {
        Ok(())
    } else {
        invalid("boundary data f must be a non-constant function")
    }
}

fn factorize(matrix: DMatrix<f64>, what: &str) -> Result<LU<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let lu = matrix.lu();
    let u = lu.u();
    let diag = u.diagonal();
    let max = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = diag.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if !(min > 1e-14 * max) {
        return Err(Error::Solver(format!(
            "{what} system is numerically singular (pivot ratio {:.3e})",
            min / max
        )));
    }
    if min < 1e-8 * max {
        log::warn!("{what} system is poorly conditioned (pivot ratio {:.3e}); are the curves nearly touching?", min / max);
    }
    Ok(lu)
}

/// Dirichlet-to-Neumann solver on Ω without the cavity; the factorization is
/// built once and shared by every right-hand side.
pub struct DirichletSolver {
    outer: Curve2D,
    scale: f64,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    dlp: DMatrix<f64>,
}

/// Solution of the cavity-free Dirichlet problem on ∂Ω.
#[derive(Debug, Clone)]
pub struct DirichletSolution {
    pub f: Vec<f64>,
    pub dnu_v: Vec<f64>,
}

impl DirichletSolver {
    pub fn new(outer: &Curve2D) -> Result<Self> {
        let scale = log_scale(outer);
        let slp = single_layer_self(outer, scale);
        let dlp = double_layer_self(outer, 1.0);
        let lu = factorize(slp, "Dirichlet")?;
        Ok(Self { outer: outer.clone(), scale, lu, dlp })
    }

    pub fn outer(&self) -> &Curve2D {
        &self.outer
    }

    pub fn solve(&self, f: &[f64]) -> Result<DirichletSolution> {
        check_samples(&self.outer, f)?;
        let fv = DVector::from_column_slice(f);
        let rhs = &fv * 0.5 + &self.dlp * &fv;
        let q = self.lu.solve(&rhs).ok_or_else(|| Error::Solver("Dirichlet solve failed".into()))?;
        Ok(DirichletSolution { f: f.to_vec(), dnu_v: q.iter().cloned().collect() })
    }

    /// Harmonic extension `v(x)` at interior points via Green's representation
    /// (trapezoid rule; accurate away from the boundary).
    pub fn evaluate_interior(&self, solution: &DirichletSolution, points: &[Point]) -> Vec<f64> {
        let s = single_layer_cross(points, &self.outer, self.scale);
        let d = double_layer_cross(points, &self.outer, 1.0);
        let q = DVector::from_column_slice(&solution.dnu_v);
        let f = DVector::from_column_slice(&solution.f);
        (s * q - d * f).iter().cloned().collect()
    }
}

/// Neumann trace `∂_ν v` of the harmonic extension of `f` into Ω.
pub fn solve_dirichlet(outer: &Curve2D, f: &[f64]) -> Result<Vec<f64>> {
    Ok(DirichletSolver::new(outer)?.solve(f)?.dnu_v)
}

/// Solver for the cavity problem with a factorized system per scene.
pub struct MixedSolver {
    scene: SceneGeometry,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    rhs_outer: DMatrix<f64>,
    rhs_cavity: DMatrix<f64>,
}

/// Full solution of the cavity problem. `u_cavity` (the trace of `u` on ∂D)
/// is for diagnostics and identity checks only; the inversion never sees it.
#[derive(Debug, Clone)]
pub struct MixedSolution {
    pub f: Vec<f64>,
    pub dnu_u: Vec<f64>,
    pub u_cavity: Vec<f64>,
}

impl MixedSolver {
    pub fn new(scene: &SceneGeometry) -> Result<Self> {
        let outer = &scene.outer;
        let cavity = &scene.cavity;
        let (no, nd) = (outer.len(), cavity.len());
        let scale = log_scale(outer);
        // unknowns: q = ∂_ν u on ∂Ω, φ = u on ∂D. The region normal on ∂D points into D.
        let mut a = DMatrix::<f64>::zeros(no + nd, no + nd);
        a.view_mut((0, 0), (no, no)).copy_from(&single_layer_self(outer, scale));
        a.view_mut((0, no), (no, nd)).copy_from(&(-double_layer_cross(outer.points(), cavity, -1.0)));
        a.view_mut((no, 0), (nd, no)).copy_from(&single_layer_cross(cavity.points(), outer, scale));
        let mut dd = -double_layer_self(cavity, -1.0);
        for i in 0..nd {
            dd[(i, i)] -= 0.5;
        }
        a.view_mut((no, no), (nd, nd)).copy_from(&dd);
        let mut rhs_outer = double_layer_self(outer, 1.0);
        for i in 0..no {
            rhs_outer[(i, i)] += 0.5;
        }
        let rhs_cavity = double_layer_cross(cavity.points(), outer, 1.0);
        let lu = factorize(a, "mixed boundary value")?;
        Ok(Self { scene: scene.clone(), lu, rhs_outer, rhs_cavity })
    }

    pub fn scene(&self) -> &SceneGeometry {
        &self.scene
    }

    /// Solves without the non-constant check on `f`.
    pub fn solve_unchecked(&self, f: &[f64]) -> Result<MixedSolution> {
        check_samples(&self.scene.outer, f)?;
        let (no, nd) = (self.scene.outer.len(), self.scene.cavity.len());
        let fv = DVector::from_column_slice(f);
        let mut rhs = DVector::<f64>::zeros(no + nd);
        rhs.rows_mut(0, no).copy_from(&(&self.rhs_outer * &fv));
        rhs.rows_mut(no, nd).copy_from(&(&self.rhs_cavity * &fv));
        let x = self.lu.solve(&rhs).ok_or_else(|| Error::Solver("mixed solve failed".into()))?;
        Ok(MixedSolution {
            f: f.to_vec(),
            dnu_u: x.rows(0, no).iter().cloned().collect(),
            u_cavity: x.rows(no, nd).iter().cloned().collect(),
        })
    }

    pub fn solve(&self, f: &[f64]) -> Result<MixedSolution> {
        nonconstant(f)?;
        self.solve_unchecked(f)
    }
}

/// Full cavity solve including the trace of `u` on ∂D (diagnostic interface).
pub fn solve_mixed_full(scene: &SceneGeometry, f: &[f64]) -> Result<MixedSolution> {
    MixedSolver::new(scene)?.solve(f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyMeta {
    pub n_nodes: usize,
    pub noise: f64,
    pub seed: u64,
}

/// Dirichlet samples `f` and measured Neumann samples `∂_ν u` on ∂Ω.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyData {
    pub t: Vec<f64>,
    pub f: Vec<f64>,
    pub dnu_u: Vec<f64>,
    pub weights: Vec<f64>,
    pub meta: CauchyMeta,
}

/// `|Σ wᵢ qᵢ| / Σ wᵢ |qᵢ|` (zero when `q ≡ 0`).
pub fn flux_residual(weights: &[f64], q: &[f64]) -> f64 {
    let net: f64 = weights.iter().zip(q).map(|(w, v)| w * v).sum();
    let l1: f64 = weights.iter().zip(q).map(|(w, v)| w * v.abs()).sum();
    if l1 == 0.0 {
        0.0
    } else {
        net.abs() / l1
    }
}

/// Subtract the weighted mean so that `Σ wᵢ qᵢ = 0`.
fn project_zero_flux(weights: &[f64], q: &mut [f64]) {
    let net: f64 = weights.iter().zip(q.iter()).map(|(w, v)| w * v).sum();
    let total: f64 = weights.iter().sum();
    let shift = net / total;
    q.iter_mut().for_each(|v| *v -= shift);
}

impl CauchyData {
    pub fn flux_residual(&self) -> f64 {
        flux_residual(&self.weights, &self.dnu_u)
    }

    /// Checks the array lengths, the non-constant `f` requirement, and the
    /// zero-flux balance at `tol_flux`.
    pub fn validate(&self, tol_flux: f64) -> Result<()> {
        let n = self.t.len();
        if n == 0 || self.f.len() != n || self.dnu_u.len() != n || self.weights.len() != n {
            return invalid(format!(
                "Cauchy data arrays disagree in length (t {}, f {}, dnu_u {}, weights {})",
                n,
                self.f.len(),
                self.dnu_u.len(),
                self.weights.len()
            ));
        }
        if self.meta.n_nodes != n {
            return invalid(format!("meta.n_nodes = {} but there are {n} samples", self.meta.n_nodes));
        }
        if n % 2 != 0 {
            return invalid("Cauchy data needs an even number of nodes");
        }
        for (j, t) in self.t.iter().enumerate() {
            if (t - 2.0 * PI * j as f64 / n as f64).abs() > 1e-9 {
                return invalid(format!("Cauchy data t[{j}] is not on the equispaced grid"));
            }
        }
        nonconstant(&self.f)?;
        let r = self.flux_residual();
        if r > tol_flux {
            return invalid(format!("Neumann data violates flux balance: relative net flux {r:.3e} > {tol_flux:.1e}"));
        }
        Ok(())
    }

    /// `f` and `∂_ν u` resampled onto the nodes of `outer` (same parametrization,
    /// possibly different node count) by trigonometric interpolation.
    pub fn resampled_to(&self, outer: &Curve2D) -> (Vec<f64>, Vec<f64>) {
        let n = outer.len();
        (spectral::resample(&self.f, n), spectral::resample(&self.dnu_u, n))
    }
}

fn package(outer: &Curve2D, f: Vec<f64>, dnu_u: Vec<f64>) -> CauchyData {
    CauchyData {
        t: outer.params().to_vec(),
        f,
        dnu_u,
        weights: outer.weights().to_vec(),
        meta: CauchyMeta { n_nodes: outer.len(), noise: 0.0, seed: 0 },
    }
}

/// Cauchy data `(f, ∂_ν u)` on ∂Ω for the cavity problem.
pub fn solve_mixed_bvp(scene: &SceneGeometry, f: &[f64]) -> Result<CauchyData> {
    let sol = solve_mixed_full(scene, f)?;
    Ok(package(&scene.outer, sol.f, sol.dnu_u))
}

/// Same as [`solve_mixed_bvp`] but accepts constant `f`.
#[doc(hidden)]
pub fn solve_mixed_bvp_unchecked(scene: &SceneGeometry, f: &[f64]) -> Result<CauchyData> {
    let sol = MixedSolver::new(scene)?.solve_unchecked(f)?;
    Ok(package(&scene.outer, sol.f, sol.dnu_u))
}

/// Multipliers `λ_m = m(R₀^{2m} − R₁^{2m}) / (R₀(R₀^{2m} + R₁^{2m}))` mapping
/// the Fourier modes of `f` to those of `∂_ν u` on concentric circles.
pub fn annulus_multiplier(r0: f64, r1: f64, m: u32) -> Result<f64> {
    if !(r1 > 0.0 && r1 < r0) {
        return invalid(format!("annulus needs 0 < R₁ < R₀, got R₀={r0}, R₁={r1}"));
    }
    if m == 0 {
        return Ok(0.0);
    }
    let q = (r1 / r0).powi(2 * m as i32);
    Ok(m as f64 * (1.0 - q) / (r0 * (1.0 + q)))
}

/// Fourier coefficients `(a_m, b_m)` of `∂_ν u` from those of `f`.
pub fn annulus_oracle(r0: f64, r1: f64, coeffs: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    coeffs
        .iter()
        .enumerate()
        .map(|(m, (a, b))| annulus_multiplier(r0, r1, m as u32).map(|l| (l * a, l * b)))
        .collect()
}

/// `∂_ν w = ∂_ν u − ∂_ν v` on the nodes of a given outer discretization.
#[derive(Debug, Clone)]
pub struct ResponseTrace {
    pub dnu_w: Vec<f64>,
    pub provenance: String,
}

impl ResponseTrace {
    pub fn flux_residual(&self, outer: &Curve2D) -> f64 {
        flux_residual(outer.weights(), &self.dnu_w)
    }
}

/// Response trace on the nodes of `outer`. The measured data are resampled to
/// `outer` when the node counts differ and re-projected to zero net flux;
/// the background field is solved on `outer`.
pub fn response_trace(cauchy: &CauchyData, outer: &Curve2D) -> Result<ResponseTrace> {
    response_trace_with(cauchy, &DirichletSolver::new(outer)?)
}

pub fn response_trace_with(cauchy: &CauchyData, solver: &DirichletSolver) -> Result<ResponseTrace> {
    let outer = solver.outer();
    let n = cauchy.t.len();
    if n == 0 || cauchy.f.len() != n || cauchy.dnu_u.len() != n {
        return invalid("Cauchy data arrays disagree in length");
    }
    let (f, mut dnu_u) = cauchy.resampled_to(outer);
    if n != outer.len() {
        project_zero_flux(outer.weights(), &mut dnu_u);
    }
    let bg = solver.solve(&f)?;
    let dnu_w: Vec<f64> = dnu_u.iter().zip(&bg.dnu_v).map(|(u, v)| u - v).collect();
    let r = flux_residual(outer.weights(), &dnu_w);
    if r > TOL_FLUX {
        log::warn!("response trace net flux {r:.3e} exceeds {TOL_FLUX:.0e}");
    }
    Ok(ResponseTrace {
        dnu_w,
        provenance: format!(
            "cauchy: {} nodes (noise {}, seed {}); background: Dirichlet solve on {} nodes",
            n,
            cauchy.meta.noise,
            cauchy.meta.seed,
            outer.len()
        ),
    })
}

/// Perturb the Neumann samples by Gaussian noise with standard deviation
/// `δ·RMS(∂_ν u)`, then restore zero net flux. Deterministic per seed.
pub fn add_noise(cauchy: &CauchyData, level: f64, seed: u64) -> Result<CauchyData> {
    if !(level >= 0.0 && level.is_finite()) {
        return invalid(format!("noise level must be ≥ 0, got {level}"));
    }
    let mut out = cauchy.clone();
    out.meta.noise = level;
    out.meta.seed = seed;
    if level == 0.0 {
        return Ok(out);
    }
    let n = cauchy.dnu_u.len() as f64;
    let rms = (cauchy.dnu_u.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let normal = Normal::new(0.0, level * rms).map_err(|e| Error::Invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise: Vec<f64> = (0..cauchy.dnu_u.len()).map(|_| normal.sample(&mut rng)).collect();
    project_zero_flux(&cauchy.weights, &mut noise);
    out.dnu_u.iter_mut().zip(&noise).for_each(|(q, e)| *q += e);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CurveShape;

    fn circle(r: f64, c: [f64; 2], n: usize) -> Curve2D {
        Curve2D::new(CurveShape::Circle { radius: r, center: c }, n).unwrap()
    }

    fn concentric(r1: f64, n: usize) -> SceneGeometry {
        SceneGeometry::new(circle(1.0, [0.0, 0.0], n), circle(r1, [0.0, 0.0], n), None).unwrap()
    }

    #[test]
    fn annulus_multipliers() {
        assert!((annulus_multiplier(1.0, 0.5, 1).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(annulus_multiplier(1.0, 0.5, 0).unwrap(), 0.0);
        assert!((annulus_multiplier(1.0, 0.5, 2).unwrap() - 1.875 / 1.0625).abs() < 1e-15);
        assert!(annulus_multiplier(1.0, 1.0, 1).is_err());
        assert!((annulus_multiplier(1.0, 1e-3, 1).unwrap() - (1.0 - 1e-6) / (1.0 + 1e-6)).abs() < 1e-15);
    }

    #[test]
    fn kress_weights_integrate_log_kernel() {
        // ∫₀^{2π} ln(4 sin²(τ/2)) cos(mτ) dτ = −2π/m for m ≥ 1, 0 for m = 0
        let n = 32;
        let r = kress_weights(n);
        for m in 0..n / 2 {
            let approx: f64 = (0..n).map(|j| r[j] * (m as f64 * 2.0 * PI * j as f64 / n as f64).cos()).sum();
            let exact = if m == 0 { 0.0 } else { -2.0 * PI / m as f64 };
            assert!((approx - exact).abs() < 1e-12, "m={m}: {approx} vs {exact}");
        }
    }

    #[test]
    fn dirichlet_disk_dtn() {
        let c = circle(1.0, [0.0, 0.0], 64);
        for m in [1.0, 3.0] {
            let f: Vec<f64> = c.params().iter().map(|t| (m * t).cos()).collect();
            let q = solve_dirichlet(&c, &f).unwrap();
            for (qi, t) in q.iter().zip(c.params()) {
                assert!((qi - m * (m * t).cos()).abs() < 1e-11);
            }
        }
        let q = solve_dirichlet(&c, &vec![2.5; 64]).unwrap();
        assert!(q.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn dirichlet_interior_evaluation() {
        let c = Curve2D::new(CurveShape::Ellipse { a: 1.0, b: 0.7, center: [0.0, 0.0] }, 128).unwrap();
        let exact = |p: &Point| p.x * p.x - p.y * p.y + 0.3 * p.y;
        let f: Vec<f64> = c.points().iter().map(exact).collect();
        let solver = DirichletSolver::new(&c).unwrap();
        let sol = solver.solve(&f).unwrap();
        let pts = [Point::new(0.1, 0.2), Point::new(-0.4, 0.1), Point::new(0.5, -0.3)];
        for (p, v) in pts.iter().zip(solver.evaluate_interior(&sol, &pts)) {
            assert!((v - exact(p)).abs() < 1e-10, "{v} vs {}", exact(p));
        }
    }

    #[test]
    fn mixed_matches_annulus_oracle() {
        let scene = concentric(0.5, 128);
        let f: Vec<f64> = scene.outer.params().iter().map(|t| t.cos() + 0.5 * (2.0 * t).sin()).collect();
        let sol = solve_mixed_full(&scene, &f).unwrap();
        let l2 = annulus_multiplier(1.0, 0.5, 2).unwrap();
        for (q, t) in sol.dnu_u.iter().zip(scene.outer.params()) {
            assert!((q - (0.6 * t.cos() + 0.5 * l2 * (2.0 * t).sin())).abs() < 1e-10);
        }
        // u(R₁, θ) = 0.8 cos θ + 0.5·u₂(R₁) sin 2θ with u₂(r) = α(r² + R₁⁴/r²), α = 1/(1 + R₁⁴)
        let u2 = 2.0 * 0.25 / (1.0 + 0.0625);
        for (u, t) in sol.u_cavity.iter().zip(scene.cavity.params()) {
            assert!((u - (0.8 * t.cos() + 0.5 * u2 * (2.0 * t).sin())).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_data_gives_zero_flux_and_is_rejected_publicly() {
        let scene = concentric(0.5, 64);
        let f = vec![1.0; 64];
        assert!(matches!(solve_mixed_bvp(&scene, &f), Err(Error::Invalid(_))));
        let data = solve_mixed_bvp_unchecked(&scene, &f).unwrap();
        assert!(data.dnu_u.iter().all(|q| q.abs() < 1e-12));
        let sol = MixedSolver::new(&scene).unwrap().solve_unchecked(&f).unwrap();
        assert!(sol.u_cavity.iter().all(|u| (u - 1.0).abs() < 1e-12));
    }

    #[test]
    fn noise_is_deterministic_and_flux_free() {
        let scene = concentric(0.5, 64);
        let f: Vec<f64> = scene.outer.params().iter().map(|t| t.cos()).collect();
        let data = solve_mixed_bvp(&scene, &f).unwrap();
        assert_eq!(add_noise(&data, 0.0, 3).unwrap().dnu_u, data.dnu_u);
        let a = add_noise(&data, 0.01, 7).unwrap();
        let b = add_noise(&data, 0.01, 7).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_ne!(a.dnu_u, data.dnu_u);
        assert!(a.flux_residual() <= TOL_FLUX);
        assert!(add_noise(&data, -0.1, 7).is_err());
    }

    #[test]
    fn response_trace_concentric() {
        let scene = concentric(0.5, 128);
        let f: Vec<f64> = scene.outer.params().iter().map(|t| t.cos()).collect();
        let data = solve_mixed_bvp(&scene, &f).unwrap();
        let inv = circle(1.0, [0.0, 0.0], 64);
        let tr = response_trace(&data, &inv).unwrap();
        for (w, t) in tr.dnu_w.iter().zip(inv.params()) {
            assert!((w + 0.4 * t.cos()).abs() < 1e-10);
        }
        assert!(tr.flux_residual(&inv) < 1e-10);
    }
}
