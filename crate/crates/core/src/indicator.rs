//! The no-response indicator over a finite probe span.
//!
//! For probe coefficients `c`, the response functional is `cᵀr` with
//! `r_k = ∫_{∂Ω} ∂_ν w · g_k dS`, and the constraint `‖Σ c_k z_k‖_{H¹(G)} ≤ ε`
//! reads `cᵀMc ≤ ε²` for the H¹(G) Gram matrix `M`. The supremum of `|cᵀr|`
//! over that ellipsoid is `ε·√(rᵀM⁺r)`, where `M⁺` is the eigenvalue-truncated
//! pseudo-inverse.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::forward::{MixedSolver, DirichletSolver, ResponseTrace};
use crate::geometry::{Curve2D, SceneGeometry, TestDomain};
use crate::probes::{check_admissible, probe_trace, Probe, ProbeBasis};

/// `r_k = Σ_i w_i ∂_ν w(x_i) g_k(x_i)` over the nodes of `outer`.
pub fn response_vector(trace: &ResponseTrace, basis: &ProbeBasis, outer: &Curve2D) -> Result<Vec<f64>> {
    if trace.dnu_w.len() != outer.len() {
        return invalid(format!(
            "response trace has {} samples but the boundary has {} nodes",
            trace.dnu_w.len(),
            outer.len()
        ));
    }
    basis
        .probes
        .iter()
        .map(|p| {
            let g = probe_trace(p, outer)?;
            Ok(g.iter().zip(&trace.dnu_w).zip(outer.weights()).map(|((g, q), w)| w * q * g).sum())
        })
        .collect()
}

/// `M_jk = ∫_G z_j z_k + ∇z_j·∇z_k dx` by the domain's quadrature.
pub fn gram_matrix(basis: &ProbeBasis, domain: &TestDomain) -> Result<DMatrix<f64>> {
    for p in &basis.probes {
        p.check_regular_on(domain)?;
    }
    let q = &domain.quadrature;
    let n = basis.len();
    let mut a = DMatrix::<f64>::zeros(3 * q.points.len(), n);
    for (k, p) in basis.probes.iter().enumerate() {
        let mut col = a.column_mut(k);
        for (j, (x, w)) in q.points.iter().zip(&q.weights).enumerate() {
            let (v, g) = p.eval(x)?;
            let sw = w.sqrt();
            col[3 * j] = sw * v;
            col[3 * j + 1] = sw * g.x;
            col[3 * j + 2] = sw * g.y;
        }
    }
    let mut m = a.tr_mul(&a);
    for j in 0..n {
        for k in j + 1..n {
            let s = 0.5 * (m[(j, k)] + m[(k, j)]);
            m[(j, k)] = s;
            m[(k, j)] = s;
        }
    }
    Ok(m)
}

/// Indicator value and the spectral diagnostics of its regularization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorValue {
    pub value: f64,
    pub rank: usize,
    /// Smallest retained Gram eigenvalue (0 when nothing is retained).
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub probe_count: usize,
}

impl IndicatorValue {
    pub fn zero_rank(&self) -> bool {
        self.rank == 0
    }
}

/// Truncated spectral decomposition of a Gram matrix.
pub struct TruncatedGram {
    eig: SymmetricEigen<f64, nalgebra::Dyn>,
    retained: Vec<usize>,
    lambda_max: f64,
}

impl TruncatedGram {
    pub fn new(gram: &DMatrix<f64>, truncation: f64) -> Result<Self> {
        if !gram.is_square() {
            return invalid("Gram matrix must be square");
        }
        if !(truncation > 0.0 && truncation < 1.0) {
            return invalid(format!("truncation must lie in (0, 1), got {truncation}"));
        }
        let eig = SymmetricEigen::new(gram.clone());
        let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let retained = if lambda_max > 0.0 {
            (0..eig.eigenvalues.len()).filter(|&i| eig.eigenvalues[i] >= truncation * lambda_max).collect()
        } else {
            Vec::new()
        };
        Ok(Self { eig, retained, lambda_max })
    }

    /// `M⁺r` restricted to the retained eigenspace.
    pub fn pseudo_solve(&self, r: &DVector<f64>) -> DVector<f64> {
        let mut c = DVector::zeros(r.len());
        for &i in &self.retained {
            let v = self.eig.eigenvectors.column(i);
            c += v * (v.dot(r) / self.eig.eigenvalues[i]);
        }
        c
    }

    /// `rᵀM⁺r`.
    pub fn quadratic_form(&self, r: &DVector<f64>) -> f64 {
        self.retained
            .iter()
            .map(|&i| {
                let p = self.eig.eigenvectors.column(i).dot(r);
                p * p / self.eig.eigenvalues[i]
            })
            .sum()
    }

    fn summary(&self, value: f64) -> IndicatorValue {
        let lambda_min = self.retained.iter().map(|&i| self.eig.eigenvalues[i]).fold(f64::INFINITY, f64::min);
        IndicatorValue {
            value,
            rank: self.retained.len(),
            lambda_min: if self.retained.is_empty() { 0.0 } else { lambda_min },
            lambda_max: self.lambda_max,
            probe_count: self.eig.eigenvalues.len(),
        }
    }
}

/// `I₁ = √(Σ_{λ_i ≥ τλ_max} (v_iᵀr)²/λ_i)`.
pub fn indicator_value(r: &[f64], gram: &DMatrix<f64>, truncation: f64) -> Result<IndicatorValue> {
    if r.len() != gram.nrows() {
        return invalid(format!("response vector has {} entries for a {}-probe Gram matrix", r.len(), gram.nrows()));
    }
    let tg = TruncatedGram::new(gram, truncation)?;
    let rv = DVector::from_column_slice(r);
    Ok(tg.summary(tg.quadratic_form(&rv).sqrt()))
}

/// `I_ε = sup{|cᵀr| : cᵀMc ≤ ε²}` evaluated at its maximizer
/// `c* = ε M⁺r / √(rᵀM⁺r)`.
pub fn indicator_value_eps(r: &[f64], gram: &DMatrix<f64>, truncation: f64, eps: f64) -> Result<IndicatorValue> {
    if !(eps > 0.0 && eps.is_finite()) {
        return invalid(format!("ε must be > 0, got {eps}"));
    }
    if r.len() != gram.nrows() {
        return invalid("response vector and Gram matrix sizes differ");
    }
    let tg = TruncatedGram::new(gram, truncation)?;
    let rv = DVector::from_column_slice(r);
    let qf = tg.quadratic_form(&rv);
    if qf == 0.0 {
        return Ok(tg.summary(0.0));
    }
    // c*ᵀr in eigen-coordinates (V is orthogonal), avoiding the cancellation
    // of forming c* = V Λ⁺ Vᵀ r explicitly
    let scale = eps / qf.sqrt();
    let value: f64 = tg
        .retained
        .iter()
        .map(|&i| {
            let p = tg.eig.eigenvectors.column(i).dot(&rv);
            (scale * p / tg.eig.eigenvalues[i]) * p
        })
        .sum();
    Ok(tg.summary(value.abs()))
}

/// Both sides of `∫_{∂Ω} ∂_ν w·g dS = −∫_{∂D} u·∂_ν z_g dS`.
#[derive(Debug, Clone, Copy)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs − rhs|` relative to the larger L¹ norm of the two integrands, so
    /// that pairings which vanish by symmetry do not inflate the ratio.
    pub residual: f64,
}

/// Reusable solvers for repeated identity checks on one scene.
pub struct IdentityChecker {
    scene: SceneGeometry,
    trace: ResponseTrace,
    u_cavity: Vec<f64>,
}

impl IdentityChecker {
    pub fn new(scene: &SceneGeometry, f: &[f64]) -> Result<Self> {
        let sol = MixedSolver::new(scene)?.solve(f)?;
        let bg = DirichletSolver::new(&scene.outer)?.solve(f)?;
        let dnu_w = sol.dnu_u.iter().zip(&bg.dnu_v).map(|(u, v)| u - v).collect();
        Ok(Self {
            scene: scene.clone(),
            trace: ResponseTrace { dnu_w, provenance: "identity check".into() },
            u_cavity: sol.u_cavity,
        })
    }

    pub fn check(&self, probe: &Probe) -> Result<IdentityCheck> {
        let outer = &self.scene.outer;
        let cavity = &self.scene.cavity;
        check_admissible(probe, outer)?;
        let g = probe_trace(probe, outer)?;
        let (mut lhs, mut lhs_l1) = (0.0, 0.0);
        for ((g, q), w) in g.iter().zip(&self.trace.dnu_w).zip(outer.weights()) {
            lhs += w * q * g;
            lhs_l1 += (w * q * g).abs();
        }
        let (mut rhs, mut rhs_l1) = (0.0, 0.0);
        for ((p, n), (u, w)) in cavity.points().iter().zip(cavity.normals()).zip(self.u_cavity.iter().zip(cavity.weights())) {
            let term = w * u * probe.normal_derivative(p, n)?;
            rhs -= term;
            rhs_l1 += term.abs();
        }
        let scale = lhs_l1.max(rhs_l1);
        let residual = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
        Ok(IdentityCheck { lhs, rhs, residual })
    }
}

pub fn key_identity_check(scene: &SceneGeometry, f: &[f64], probe: &Probe) -> Result<IdentityCheck> {
    IdentityChecker::new(scene, f)?.check(probe)
}
