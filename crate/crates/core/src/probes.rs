//! Harmonic probe functions: harmonic polynomials and the 2D singular
//! solutions (monopole `E₂` and dipole `F_a`) with exterior sources.
//!
//! A probe is harmonic in Ω, so its boundary trace `g` has the probe itself
//! as harmonic extension `z_g`; no PDE solve is needed on the inversion side.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{default_clearance, Curve2D, Point, TestDomain};

/// Closest a point may come to a probe singularity.
pub const SINGULARITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Cos,
    Sin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ProbeKind {
    /// `Re` or `Im` of `((x₁−c₁) + i(x₂−c₂))^degree`.
    HarmonicPoly { degree: u32, parity: Parity, center: [f64; 2] },
    /// `E₂(x, y) = −(1/2π) ln|x − y|`.
    Monopole { source: [f64; 2] },
    /// `F_a(x, y) = a·∇ₓE₂(x, y) = −(1/2π) a·(x − y)/|x − y|²`.
    Dipole { source: [f64; 2], direction: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub kind: ProbeKind,
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl Probe {
    pub fn poly(degree: u32, parity: Parity, center: Point) -> Self {
        Self { kind: ProbeKind::HarmonicPoly { degree, parity, center: [center.x, center.y] }, scale: 1.0 }
    }

    pub fn constant() -> Self {
        Self::poly(0, Parity::Cos, Point::zeros())
    }

    pub fn monopole(source: Point) -> Self {
        Self { kind: ProbeKind::Monopole { source: [source.x, source.y] }, scale: 1.0 }
    }

    /// Dipole with unit direction `direction / |direction|`.
    pub fn dipole(source: Point, direction: Point) -> Self {
        let a = direction.normalize();
        Self { kind: ProbeKind::Dipole { source: [source.x, source.y], direction: [a.x, a.y] }, scale: 1.0 }
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.scale *= factor;
        self
    }

    pub fn singularity(&self) -> Option<Point> {
        match &self.kind {
            ProbeKind::HarmonicPoly { .. } => None,
            ProbeKind::Monopole { source } | ProbeKind::Dipole { source, .. } => Some(Point::new(source[0], source[1])),
        }
    }

    #[cfg(test)]
    fn is_constant(&self) -> bool {
        matches!(self.kind, ProbeKind::HarmonicPoly { degree: 0, .. })
    }

    /// Value and gradient at `x`.
    pub fn eval(&self, x: &Point) -> Result<(f64, Point)> {
        let (v, g) = match &self.kind {
            ProbeKind::HarmonicPoly { degree, parity, center } => {
                let m = *degree;
                let z = Complex::new(x.x - center[0], x.y - center[1]);
                if m == 0 {
                    let v = if *parity == Parity::Cos { 1.0 } else { 0.0 };
                    (v, Point::zeros())
                } else {
                    let zm1 = z.powu(m - 1);
                    let zm = zm1 * z;
                    let dz = zm1 * m as f64;
                    // d/dx ζ^m = m ζ^{m−1}, d/dy ζ^m = i m ζ^{m−1}
                    match parity {
                        Parity::Cos => (zm.re, Point::new(dz.re, -dz.im)),
                        Parity::Sin => (zm.im, Point::new(dz.im, dz.re)),
                    }
                }
            }
            ProbeKind::Monopole { source } => {
                let d = x - Point::new(source[0], source[1]);
                let r2 = self.check_distance(&d)?;
                (-(0.5 / PI) * 0.5 * r2.ln(), -(0.5 / PI) * d / r2)
            }
            ProbeKind::Dipole { source, direction } => {
                let d = x - Point::new(source[0], source[1]);
                let a = Point::new(direction[0], direction[1]);
                let r2 = self.check_distance(&d)?;
                let ad = a.dot(&d);
                let v = -(0.5 / PI) * ad / r2;
                let g = -(0.5 / PI) * (a / r2 - 2.0 * ad * d / (r2 * r2));
                (v, g)
            }
        };
        Ok((self.scale * v, self.scale * g))
    }

    fn check_distance(&self, d: &Point) -> Result<f64> {
        let r2 = d.norm_squared();
        if r2.sqrt() < SINGULARITY_TOL {
            return Err(Error::Singularity(format!(
                "probe evaluated within {:e} of its source",
                r2.sqrt()
            )));
        }
        Ok(r2)
    }

    pub fn value(&self, x: &Point) -> Result<f64> {
        self.eval(x).map(|(v, _)| v)
    }

    pub fn normal_derivative(&self, x: &Point, normal: &Point) -> Result<f64> {
        self.eval(x).map(|(_, g)| g.dot(normal))
    }

    /// `‖probe‖²_{H¹(G)}` by the domain's quadrature.
    pub fn h1_norm_squared(&self, domain: &TestDomain) -> Result<f64> {
        let mut acc = 0.0;
        for (p, w) in domain.quadrature.points.iter().zip(&domain.quadrature.weights) {
            let (v, g) = self.eval(p)?;
            acc += w * (v * v + g.norm_squared());
        }
        Ok(acc)
    }

    pub fn h1_norm(&self, domain: &TestDomain) -> Result<f64> {
        self.h1_norm_squared(domain).map(f64::sqrt)
    }

    /// Rejects probes whose singularity lies in `Ḡ`.
    pub fn check_regular_on(&self, domain: &TestDomain) -> Result<()> {
        if let Some(y) = self.singularity() {
            let d = (y - domain.center).norm();
            if d <= domain.radius + SINGULARITY_TOL {
                return Err(Error::Singularity(format!(
                    "probe source ({}, {}) lies in the closed test disk {} (center ({}, {}), radius {})",
                    y.x, y.y, domain.id, domain.center.x, domain.center.y, domain.radius
                )));
            }
        }
        Ok(())
    }
}

/// Value and gradient of `probe` at each point.
pub fn eval_probe(probe: &Probe, points: &[Point]) -> Result<Vec<(f64, Point)>> {
    points.iter().map(|p| probe.eval(p)).collect()
}

/// Rejects probes whose singularity lies in `Ω̄` (they are not harmonic in Ω).
pub fn check_admissible(probe: &Probe, boundary: &Curve2D) -> Result<()> {
    if let Some(y) = probe.singularity() {
        let d = boundary.distance_to(&y);
        if d < SINGULARITY_TOL || boundary.contains(&y)? {
            return Err(Error::Singularity(format!(
                "probe source ({}, {}) lies in the closed domain; it is not admissible as boundary data",
                y.x, y.y
            )));
        }
    }
    Ok(())
}

/// Boundary trace `g_i = z(x(t_i))` of an admissible probe.
pub fn probe_trace(probe: &Probe, boundary: &Curve2D) -> Result<Vec<f64>> {
    check_admissible(probe, boundary)?;
    boundary.points().iter().map(|p| probe.value(p)).collect()
}

/// Probe family selection. Serialized as the basis block of the run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisConfig {
    pub max_poly_degree: u32,
    pub n_sources: usize,
    #[serde(default = "default_r_ext_factor")]
    pub r_ext_factor: f64,
    #[serde(default = "default_dipoles")]
    pub dipoles: bool,
    /// Minimum distance of exterior sources from ∂Ω; defaults to the scene
    /// clearance (2% of the diameter).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standoff: Option<f64>,
}

fn default_r_ext_factor() -> f64 {
    1.5
}

fn default_dipoles() -> bool {
    true
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self { max_poly_degree: 12, n_sources: 16, r_ext_factor: 1.5, dipoles: true, standoff: None }
    }
}

#[derive(Debug, Clone)]
pub struct ProbeBasis {
    pub probes: Vec<Probe>,
    pub config: BasisConfig,
    /// Expansion center of the polynomials and of the source circle.
    pub center: Point,
    pub source_radius: f64,
}

impl ProbeBasis {
    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }

    pub fn empty() -> Self {
        Self { probes: Vec::new(), config: BasisConfig { max_poly_degree: 0, n_sources: 0, ..Default::default() }, center: Point::zeros(), source_radius: 0.0 }
    }

    /// Traces of every probe on `boundary`, one row per probe.
    pub fn traces(&self, boundary: &Curve2D) -> Result<Vec<Vec<f64>>> {
        self.probes.iter().map(|p| probe_trace(p, boundary)).collect()
    }
}

/// Deterministic basis: constant, `Re/Im ζ^m` for `m = 1..=M`, monopoles at
/// angles `2πk/N_src` on the source circle, then a radial and a tangential
/// dipole per source.
pub fn build_basis(config: &BasisConfig, outer: &Curve2D) -> Result<ProbeBasis> {
    let center = outer.centroid();
    let max_r = outer.max_radius_about(&center);
    let standoff = config.standoff.unwrap_or_else(|| default_clearance(outer));
    let source_radius = config.r_ext_factor * max_r;
    if config.n_sources > 0 && !(source_radius > max_r + standoff) {
        return invalid(format!(
            "source radius {source_radius:.4} (r_ext_factor {}) must exceed the boundary radius {max_r:.4} plus standoff {standoff:.4}",
            config.r_ext_factor
        ));
    }
    let mut probes = vec![Probe::poly(0, Parity::Cos, center)];
    for m in 1..=config.max_poly_degree {
        probes.push(Probe::poly(m, Parity::Cos, center));
        probes.push(Probe::poly(m, Parity::Sin, center));
    }
    let dirs: Vec<Point> = (0..config.n_sources)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / config.n_sources as f64;
            Point::new(a.cos(), a.sin())
        })
        .collect();
    for e in &dirs {
        probes.push(Probe::monopole(center + source_radius * e));
    }
    if config.dipoles {
        for e in &dirs {
            let y = center + source_radius * e;
            probes.push(Probe::dipole(y, *e));
            probes.push(Probe::dipole(y, Point::new(-e.y, e.x)));
        }
    }
    for p in &probes {
        if p.singularity().is_some() && outer.distance_to(&p.singularity().unwrap()) < standoff {
            return invalid("exterior source closer to the boundary than the standoff");
        }
    }
    Ok(ProbeBasis { probes, config: config.clone(), center, source_radius })
}

/// Dipole at `y` in direction `a`, scaled by `(ε/2)(‖F_a(·,y)‖_{H¹(G)} + 1)⁻¹`
/// so that its H¹(G) norm stays below `ε/2`.
pub fn normalized_dipole(y: Point, a: Point, domain: &TestDomain, eps: f64) -> Result<Probe> {
    if !(eps > 0.0 && eps.is_finite()) {
        return invalid(format!("ε must be > 0, got {eps}"));
    }
    if a.norm() == 0.0 {
        return invalid("dipole direction must be nonzero");
    }
    let probe = Probe::dipole(y, a);
    probe.check_regular_on(domain)?;
    let norm = probe.h1_norm(domain)?;
    Ok(probe.scaled(0.5 * eps / (norm + 1.0)))
}

/// Outcome of a least-squares fit in H¹(K).
#[derive(Debug, Clone)]
pub struct RungeFit {
    pub coefficients: Vec<f64>,
    /// `‖Σ c_k p_k − target‖_{H¹(K)}`.
    pub residual: f64,
    pub target_norm: f64,
    pub rank: usize,
    /// Set when the normal matrix needed truncation.
    pub rank_deficient: bool,
}

impl RungeFit {
    pub fn relative_residual(&self) -> f64 {
        self.residual / self.target_norm
    }
}

/// Default relative eigenvalue cutoff for Gram systems.
pub const DEFAULT_TRUNCATION: f64 = 1e-12;

/// Best H¹(K) approximation of `target` (singular somewhere outside `K̄`) from
/// the span of `basis`, with the normal equations solved by an eigenvalue
/// truncated pseudo-inverse at relative cutoff `truncation`.
pub fn runge_fit(target: &Probe, basis: &ProbeBasis, domain: &TestDomain, truncation: f64) -> Result<RungeFit> {
    target.check_regular_on(domain)?;
    for p in &basis.probes {
        p.check_regular_on(domain)?;
    }
    let q = &domain.quadrature;
    let t_vals: Vec<(f64, Point)> = eval_probe(target, &q.points)?;
    let target_norm = q.weights.iter().zip(&t_vals).map(|(w, (v, g))| w * (v * v + g.norm_squared())).sum::<f64>().sqrt();
    let n = basis.len();
    if n == 0 {
        return Ok(RungeFit { coefficients: vec![], residual: target_norm, target_norm, rank: 0, rank_deficient: false });
    }
    let rows = 3 * q.points.len();
    let mut a = DMatrix::<f64>::zeros(rows, n);
    for (k, p) in basis.probes.iter().enumerate() {
        for (j, (x, w)) in q.points.iter().zip(&q.weights).enumerate() {
            let (v, g) = p.eval(x)?;
            let sw = w.sqrt();
            a[(3 * j, k)] = sw * v;
            a[(3 * j + 1, k)] = sw * g.x;
            a[(3 * j + 2, k)] = sw * g.y;
        }
    }
    let mut b = DVector::<f64>::zeros(rows);
    for (j, ((v, g), w)) in t_vals.iter().zip(&q.weights).enumerate() {
        let sw = w.sqrt();
        b[3 * j] = sw * v;
        b[3 * j + 1] = sw * g.x;
        b[3 * j + 2] = sw * g.y;
    }
    let gram = a.tr_mul(&a);
    let rhs = a.tr_mul(&b);
    let eig = SymmetricEigen::new(gram);
    let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut c = DVector::<f64>::zeros(n);
    let mut rank = 0;
    if lambda_max > 0.0 {
        for i in 0..n {
            let lam = eig.eigenvalues[i];
            if lam >= truncation * lambda_max {
                let v = eig.eigenvectors.column(i);
                c += v * (v.dot(&rhs) / lam);
                rank += 1;
            }
        }
    }
    let residual = (&a * &c - &b).norm();
    Ok(RungeFit { coefficients: c.iter().cloned().collect(), residual, target_norm, rank, rank_deficient: rank < n })
}
