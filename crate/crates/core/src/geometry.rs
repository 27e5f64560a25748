//! Closed boundary curves, the scene (outer boundary plus cavity), and disk
//! test domains with their area quadrature.

use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spectral;

pub type Point = Vector2<f64>;

/// Distance below which a point is treated as lying on a curve.
pub const ON_CURVE_TOL: f64 = 1e-9;

/// Analytic (or tabulated) parametrization `t ↦ x(t)`, `t ∈ [0, 2π)`,
/// traversed counter-clockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum CurveShape {
    Circle {
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    Ellipse {
        a: f64,
        b: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// `scale · (cos t + fold·cos 2t − fold, stretch·sin t) + center`.
    Kite {
        scale: f64,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default = "default_kite_fold")]
        fold: f64,
        #[serde(default = "default_kite_stretch")]
        stretch: f64,
    },
    /// Radial curve `r(t) = radius·sqrt(cos² t + waist·sin² t)`; `waist < 1`
    /// pinches the curve along the vertical axis.
    Peanut {
        radius: f64,
        waist: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// Rows `[t, x1, x2]` sampled on an equispaced `t` grid.
    SampleTable { table: Vec<[f64; 3]> },
}

fn default_kite_fold() -> f64 {
    0.65
}

fn default_kite_stretch() -> f64 {
    1.5
}

/// JSON record `{"kind": ..., "params": {...}, "nodes": N}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    #[serde(flatten)]
    pub shape: CurveShape,
    pub nodes: usize,
}

impl CurveSpec {
    pub fn build(&self) -> Result<Curve2D> {
        Curve2D::new(self.shape.clone(), self.nodes)
    }
}

impl CurveShape {
    fn validate(&self) -> Result<()> {
        let finite = |v: f64, name: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                invalid(format!("{name} must be finite"))
            }
        };
        match self {
            CurveShape::Circle { radius, center } => {
                finite(center[0], "center")?;
                finite(center[1], "center")?;
                if !(radius.is_finite() && *radius > 0.0) {
                    return invalid(format!("circle radius must be > 0, got {radius}"));
                }
            }
            CurveShape::Ellipse { a, b, center } => {
                finite(center[0], "center")?;
                finite(center[1], "center")?;
                if !(a.is_finite() && b.is_finite() && *a > 0.0 && *b > 0.0) {
                    return invalid(format!("ellipse semi-axes must be > 0, got a={a}, b={b}"));
                }
            }
            CurveShape::Kite { scale, center, fold, stretch } => {
                finite(center[0], "center")?;
                finite(center[1], "center")?;
                if !(scale.is_finite() && *scale > 0.0) {
                    return invalid(format!("kite scale must be > 0, got {scale}"));
                }
                if !(fold.is_finite() && (0.0..=1.0).contains(fold)) {
                    return invalid(format!("kite fold must lie in [0, 1], got {fold}"));
                }
                if !(stretch.is_finite() && *stretch > 0.0) {
                    return invalid(format!("kite stretch must be > 0, got {stretch}"));
                }
            }
            CurveShape::Peanut { radius, waist, center } => {
                finite(center[0], "center")?;
                finite(center[1], "center")?;
                if !(radius.is_finite() && *radius > 0.0) {
                    return invalid(format!("peanut radius must be > 0, got {radius}"));
                }
                if !(waist.is_finite() && *waist > 0.0 && *waist <= 1.0) {
                    return invalid(format!("peanut waist must lie in (0, 1], got {waist}"));
                }
            }
            CurveShape::SampleTable { table } => {
                let m = table.len();
                if m < 16 || m % 2 != 0 {
                    return invalid(format!("sample table needs an even number ≥ 16 of rows, got {m}"));
                }
                for (j, row) in table.iter().enumerate() {
                    let expected = 2.0 * PI * j as f64 / m as f64;
                    if (row[0] - expected).abs() > 1e-9 {
                        return invalid(format!(
                            "sample table row {j}: t = {} but the equispaced grid expects {expected}",
                            row[0]
                        ));
                    }
                    if !(row[1].is_finite() && row[2].is_finite()) {
                        return invalid(format!("sample table row {j} is not finite"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Position, first and second derivative at parameters `ts` (equispaced,
    /// `ts[j] = 2πj/N`).
    fn sample(&self, ts: &[f64]) -> (Vec<Point>, Vec<Point>, Vec<Point>) {
        let n = ts.len();
        let mut x = Vec::with_capacity(n);
        let mut d1 = Vec::with_capacity(n);
        let mut d2 = Vec::with_capacity(n);
        match self {
            CurveShape::Circle { radius, center } => {
                let c = Point::new(center[0], center[1]);
                for &t in ts {
                    let (s, co) = t.sin_cos();
                    x.push(c + *radius * Point::new(co, s));
                    d1.push(*radius * Point::new(-s, co));
                    d2.push(-*radius * Point::new(co, s));
                }
            }
            CurveShape::Ellipse { a, b, center } => {
                let c = Point::new(center[0], center[1]);
                for &t in ts {
                    let (s, co) = t.sin_cos();
                    x.push(c + Point::new(a * co, b * s));
                    d1.push(Point::new(-a * s, b * co));
                    d2.push(Point::new(-a * co, -b * s));
                }
            }
            CurveShape::Kite { scale, center, fold, stretch } => {
                let c = Point::new(center[0], center[1]);
                for &t in ts {
                    let (s, co) = t.sin_cos();
                    let (s2, c2) = (2.0 * t).sin_cos();
                    x.push(c + *scale * Point::new(co + fold * c2 - fold, stretch * s));
                    d1.push(*scale * Point::new(-s - 2.0 * fold * s2, stretch * co));
                    d2.push(*scale * Point::new(-co - 4.0 * fold * c2, -stretch * s));
                }
            }
            CurveShape::Peanut { radius, waist, center } => {
                let c = Point::new(center[0], center[1]);
                let k = 1.0 - waist;
                for &t in ts {
                    let (s, co) = t.sin_cos();
                    let (s2, c2) = (2.0 * t).sin_cos();
                    let g = co * co + waist * s * s;
                    let g1 = -k * s2;
                    let g2 = -2.0 * k * c2;
                    let sq = g.sqrt();
                    let r = radius * sq;
                    let r1 = radius * g1 / (2.0 * sq);
                    let r2 = radius * (g2 / (2.0 * sq) - g1 * g1 / (4.0 * g * sq));
                    let e = Point::new(co, s);
                    let e_perp = Point::new(-s, co);
                    x.push(c + r * e);
                    d1.push(r1 * e + r * e_perp);
                    d2.push(r2 * e + 2.0 * r1 * e_perp - r * e);
                }
            }
            CurveShape::SampleTable { table } => {
                let x1: Vec<f64> = table.iter().map(|r| r[1]).collect();
                let x2: Vec<f64> = table.iter().map(|r| r[2]).collect();
                let (x1, x2) = (spectral::resample(&x1, n), spectral::resample(&x2, n));
                let (x1d, x2d) = (spectral::derivative(&x1, 1), spectral::derivative(&x2, 1));
                let (x1dd, x2dd) = (spectral::derivative(&x1, 2), spectral::derivative(&x2, 2));
                for j in 0..n {
                    x.push(Point::new(x1[j], x2[j]));
                    d1.push(Point::new(x1d[j], x2d[j]));
                    d2.push(Point::new(x1dd[j], x2dd[j]));
                }
            }
        }
        (x, d1, d2)
    }
}

/// A smooth closed curve sampled at `N` equispaced parameter nodes.
///
/// Normals point out of the region the curve encloses. Arclength weights are
/// the trapezoid weights `(2π/N)|x'(t_i)|`.
#[derive(Debug, Clone)]
pub struct Curve2D {
    shape: CurveShape,
    params: Vec<f64>,
    points: Vec<Point>,
    tangents: Vec<Point>,
    second: Vec<Point>,
    normals: Vec<Point>,
    speeds: Vec<f64>,
    weights: Vec<f64>,
}

impl Curve2D {
    pub fn new(shape: CurveShape, nodes: usize) -> Result<Self> {
        if nodes < 16 || nodes % 2 != 0 {
            return invalid(format!("node count must be even and ≥ 16, got {nodes}"));
        }
        shape.validate()?;
        let params: Vec<f64> = (0..nodes).map(|j| 2.0 * PI * j as f64 / nodes as f64).collect();
        let (points, tangents, second) = shape.sample(&params);
        let h = 2.0 * PI / nodes as f64;
        let mut normals = Vec::with_capacity(nodes);
        let mut speeds = Vec::with_capacity(nodes);
        for d in &tangents {
            let speed = d.norm();
            if !(speed > 0.0 && speed.is_finite()) {
                return invalid("curve parametrization has a vanishing tangent");
            }
            speeds.push(speed);
            normals.push(Point::new(d.y, -d.x) / speed);
        }
        let weights = speeds.iter().map(|s| h * s).collect();
        let curve = Self { shape, params, points, tangents, second, normals, speeds, weights };
        if curve.signed_area() <= 0.0 {
            return invalid("curve must be traversed counter-clockwise");
        }
        if let Some((i, j)) = curve.find_self_intersection() {
            return invalid(format!("curve self-intersects (segments {i} and {j})"));
        }
        Ok(curve)
    }

    /// Same shape rediscretized at a different node count.
    pub fn resampled(&self, nodes: usize) -> Result<Self> {
        Self::new(self.shape.clone(), nodes)
    }

    pub fn spec(&self) -> CurveSpec {
        CurveSpec { shape: self.shape.clone(), nodes: self.len() }
    }

    pub fn shape(&self) -> &CurveShape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn tangents(&self) -> &[Point] {
        &self.tangents
    }

    pub fn normals(&self) -> &[Point] {
        &self.normals
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(x₁''x₂' − x₂''x₁')/|x'|²` at node `i`; the diagonal limit of the
    /// double-layer kernel is this value over `4π`.
    pub fn curvature_term(&self, i: usize) -> f64 {
        let d = self.tangents[i];
        let dd = self.second[i];
        (dd.x * d.y - dd.y * d.x) / d.norm_squared()
    }

    pub fn perimeter(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Shoelace area of the node polygon.
    pub fn signed_area(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let (a, b) = (self.points[i], self.points[(i + 1) % n]);
                a.x * b.y - b.x * a.y
            })
            .sum::<f64>()
            * 0.5
    }

    /// Area centroid of the node polygon.
    pub fn centroid(&self) -> Point {
        let n = self.len();
        let mut c = Point::zeros();
        let mut area = 0.0;
        for i in 0..n {
            let (a, b) = (self.points[i], self.points[(i + 1) % n]);
            let cross = a.x * b.y - b.x * a.y;
            area += cross;
            c += (a + b) * cross;
        }
        c / (3.0 * area)
    }

    /// `(xmin, ymin, xmax, ymax)` of the nodes.
    pub fn bbox(&self) -> [f64; 4] {
        let mut bb = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for p in &self.points {
            bb[0] = bb[0].min(p.x);
            bb[1] = bb[1].min(p.y);
            bb[2] = bb[2].max(p.x);
            bb[3] = bb[3].max(p.y);
        }
        bb
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                d = d.max((a - b).norm());
            }
        }
        d
    }

    /// Largest node distance from `center`.
    pub fn max_radius_about(&self, center: &Point) -> f64 {
        self.points.iter().map(|p| (p - center).norm()).fold(0.0, f64::max)
    }

    /// Distance from `p` to the node polygon.
    pub fn distance_to(&self, p: &Point) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| point_segment_distance(p, &self.points[i], &self.points[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Winding number of the node polygon around `p`.
    pub fn winding_number(&self, p: &Point) -> i32 {
        let n = self.len();
        let mut wn = 0;
        for i in 0..n {
            let a = self.points[i];
            let b = self.points[(i + 1) % n];
            let side = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
            if a.y <= p.y {
                if b.y > p.y && side > 0.0 {
                    wn += 1;
                }
            } else if b.y <= p.y && side < 0.0 {
                wn -= 1;
            }
        }
        wn
    }

    /// True iff the curve winds once around `p`; points within
    /// [`ON_CURVE_TOL`] of the curve are rejected as ambiguous.
    pub fn contains(&self, p: &Point) -> Result<bool> {
        let distance = self.distance_to(p);
        if distance < ON_CURVE_TOL {
            return Err(Error::AmbiguousPoint { x: p.x, y: p.y, distance });
        }
        Ok(self.winding_number(p) == 1)
    }

    /// Closed-set membership: points on the curve count as inside.
    pub fn contains_closed(&self, p: &Point) -> bool {
        self.contains(p).unwrap_or(true)
    }

    fn find_self_intersection(&self) -> Option<(usize, usize)> {
        let n = self.len();
        let seg = |i: usize| (self.points[i], self.points[(i + 1) % n]);
        for i in 0..n {
            let (a, b) = seg(i);
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (c, d) = seg(j);
                if segments_intersect(&a, &b, &c, &d) {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

/// Point-in-curve query on a [`Curve2D`].
pub fn point_in_curve(curve: &Curve2D, p: &Point) -> Result<bool> {
    curve.contains(p)
}

pub fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let s = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + s * ab)).norm()
}

fn orient(a: &Point, b: &Point, c: &Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

pub fn segments_intersect(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    if a.x.max(b.x) < c.x.min(d.x)
        || c.x.max(d.x) < a.x.min(b.x)
        || a.y.max(b.y) < c.y.min(d.y)
        || c.y.max(d.y) < a.y.min(b.y)
    {
        return false;
    }
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    let on = |p: &Point, q: &Point, r: &Point, o: f64| {
        o == 0.0 && r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

/// Default clearance: 2% of the outer boundary's diameter.
pub fn default_clearance(outer: &Curve2D) -> f64 {
    0.02 * outer.diameter()
}

/// Outer boundary ∂Ω and the (ground-truth) cavity boundary ∂D.
#[derive(Debug, Clone)]
pub struct SceneGeometry {
    pub outer: Curve2D,
    pub cavity: Curve2D,
    pub clearance: f64,
}

impl SceneGeometry {
    pub fn new(outer: Curve2D, cavity: Curve2D, clearance: Option<f64>) -> Result<Self> {
        let clearance = clearance.unwrap_or_else(|| default_clearance(&outer));
        if !(clearance.is_finite() && clearance >= 0.0) {
            return invalid(format!("clearance must be ≥ 0, got {clearance}"));
        }
        for (i, p) in cavity.points().iter().enumerate() {
            if !outer.contains(p).unwrap_or(false) {
                return invalid(format!("cavity node {i} at ({}, {}) is not inside the outer boundary", p.x, p.y));
            }
            let d = outer.distance_to(p);
            if d < clearance.max(f64::MIN_POSITIVE) {
                return invalid(format!(
                    "cavity node {i} is {d:.3e} from the outer boundary (clearance {clearance:.3e})"
                ));
            }
        }
        Ok(Self { outer, cavity, clearance })
    }

    pub fn with_nodes(&self, outer_nodes: usize, cavity_nodes: usize) -> Result<Self> {
        Ok(Self {
            outer: self.outer.resampled(outer_nodes)?,
            cavity: self.cavity.resampled(cavity_nodes)?,
            clearance: self.clearance,
        })
    }
}

/// Tensor-product area rule on a disk.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Polar rule on `disk(center, radius)`: Gauss–Legendre in `r` (with the
/// Jacobian `r` folded into the weights) times the trapezoid rule in angle.
pub fn disk_quadrature(center: Point, radius: f64, radial_order: usize, angular_order: usize) -> Result<Quadrature> {
    if radial_order < 4 || angular_order < 4 {
        return invalid(format!(
            "quadrature orders must be ≥ 4, got radial {radial_order}, angular {angular_order}"
        ));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return invalid(format!("disk radius must be > 0, got {radius}"));
    }
    let (xs, ws) = gauss_legendre(radial_order);
    let dtheta = 2.0 * PI / angular_order as f64;
    let mut points = Vec::with_capacity(radial_order * angular_order);
    let mut weights = Vec::with_capacity(radial_order * angular_order);
    for (x, w) in xs.iter().zip(&ws) {
        let r = 0.5 * radius * (x + 1.0);
        let wr = 0.5 * radius * w * r * dtheta;
        for k in 0..angular_order {
            let (s, c) = (k as f64 * dtheta).sin_cos();
            points.push(center + r * Point::new(c, s));
            weights.push(wr);
        }
    }
    Ok(Quadrature { points, weights })
}

/// Default H¹(G) quadrature orders (radial × angular).
pub const DEFAULT_QUAD_ORDERS: (usize, usize) = (16, 64);

/// A disk test domain `G = disk(center, radius)` with its area quadrature.
#[derive(Debug, Clone)]
pub struct TestDomain {
    pub id: u64,
    pub center: Point,
    pub radius: f64,
    pub quadrature: Quadrature,
}

impl TestDomain {
    pub fn disk(id: u64, center: Point, radius: f64) -> Result<Self> {
        Self::disk_with_orders(id, center, radius, DEFAULT_QUAD_ORDERS.0, DEFAULT_QUAD_ORDERS.1)
    }

    pub fn disk_with_orders(id: u64, center: Point, radius: f64, radial: usize, angular: usize) -> Result<Self> {
        let quadrature = disk_quadrature(center, radius, radial, angular)?;
        Ok(Self { id, center, radius, quadrature })
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    /// Closed-disk membership.
    pub fn contains_closed(&self, p: &Point) -> bool {
        (p - self.center).norm() <= self.radius
    }

    /// Whether `Ḡ ⊂ Ω` with at least `clearance` to spare.
    pub fn fits_inside(&self, outer: &Curve2D, clearance: f64) -> bool {
        outer.contains(&self.center).unwrap_or(false) && outer.distance_to(&self.center) >= self.radius + clearance
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.quadrature.points.iter().zip(&self.quadrature.weights).map(|(p, w)| w * f(p)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(r: f64, n: usize) -> Curve2D {
        Curve2D::new(CurveShape::Circle { radius: r, center: [0.0, 0.0] }, n).unwrap()
    }

    fn kite(n: usize) -> Curve2D {
        Curve2D::new(CurveShape::Kite { scale: 0.35, center: [0.0, 0.0], fold: 0.65, stretch: 1.5 }, n).unwrap()
    }

    #[test]
    fn circle_nodes_and_weights() {
        let c = circle(1.0, 64);
        assert_eq!(c.len(), 64);
        for (i, (p, w)) in c.points().iter().zip(c.weights()).enumerate() {
            let t = 2.0 * PI * i as f64 / 64.0;
            assert!((p - Point::new(t.cos(), t.sin())).norm() < 1e-15);
            assert!((w - 2.0 * PI / 64.0).abs() < 1e-15);
        }
        assert!((c.perimeter() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn normals_are_unit_and_outward() {
        for curve in [circle(1.0, 32), kite(128)] {
            let centroid = curve.centroid();
            for (i, n) in curve.normals().iter().enumerate() {
                assert!((n.norm() - 1.0).abs() < 1e-12);
                let probe = curve.points()[i] + 1e-4 * n;
                assert!(!curve.contains(&probe).unwrap(), "normal {i} points inward");
            }
            if let CurveShape::Circle { .. } = curve.shape() {
                for (p, n) in curve.points().iter().zip(curve.normals()) {
                    assert!(n.dot(&(p - centroid)) > 0.0);
                }
            }
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(Curve2D::new(CurveShape::Circle { radius: -1.0, center: [0.0, 0.0] }, 64).is_err());
        assert!(Curve2D::new(CurveShape::Circle { radius: 1.0, center: [0.0, 0.0] }, 15).is_err());
        assert!(Curve2D::new(CurveShape::Circle { radius: 1.0, center: [0.0, 0.0] }, 18).is_ok());
        assert!(Curve2D::new(CurveShape::Peanut { radius: 1.0, waist: 1.5, center: [0.0, 0.0] }, 64).is_err());
    }

    #[test]
    fn self_intersecting_table_rejected() {
        // figure-eight (lemniscate of Gerono)
        let m = 64;
        let table: Vec<[f64; 3]> = (0..m)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / m as f64;
                [t, t.sin(), (2.0 * t).sin() / 2.0]
            })
            .collect();
        let err = Curve2D::new(CurveShape::SampleTable { table }, 64).unwrap_err();
        assert!(matches!(err, Error::Invalid(_)));
    }

    #[test]
    fn sample_table_matches_analytic_ellipse() {
        let m = 64;
        let table: Vec<[f64; 3]> = (0..m)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / m as f64;
                [t, 0.8 * t.cos(), 0.5 * t.sin()]
            })
            .collect();
        let tab = Curve2D::new(CurveShape::SampleTable { table }, 128).unwrap();
        let ell = Curve2D::new(CurveShape::Ellipse { a: 0.8, b: 0.5, center: [0.0, 0.0] }, 128).unwrap();
        for i in 0..128 {
            assert!((tab.points()[i] - ell.points()[i]).norm() < 1e-13);
            assert!((tab.normals()[i] - ell.normals()[i]).norm() < 1e-12);
            assert!((tab.curvature_term(i) - ell.curvature_term(i)).abs() < 1e-10);
        }
    }

    #[test]
    fn peanut_derivatives_match_spectral() {
        let c = Curve2D::new(CurveShape::Peanut { radius: 0.5, waist: 0.3, center: [0.1, 0.0] }, 256).unwrap();
        let x1: Vec<f64> = c.points().iter().map(|p| p.x).collect();
        let d2 = spectral::derivative(&x1, 2);
        for i in 0..256 {
            assert!((c.tangents()[i].x - spectral::derivative(&x1, 1)[i]).abs() < 1e-9);
            assert!((c.second[i].x - d2[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn point_membership_basic() {
        let c = circle(1.0, 64);
        assert!(point_in_curve(&c, &Point::new(0.0, 0.0)).unwrap());
        assert!(!point_in_curve(&c, &Point::new(2.0, 0.0)).unwrap());
        assert!(matches!(c.contains(&Point::new(1.0, 0.0)), Err(Error::AmbiguousPoint { .. })));
        let k = kite(128);
        assert!(point_in_curve(&k, &k.centroid()).unwrap());
    }

    #[test]
    fn scene_rejects_cavity_touching_outer() {
        let outer = circle(1.0, 64);
        let cavity = Curve2D::new(CurveShape::Circle { radius: 0.5, center: [0.49, 0.0] }, 64).unwrap();
        assert!(SceneGeometry::new(outer.clone(), cavity, None).is_err());
        let ok = Curve2D::new(CurveShape::Circle { radius: 0.5, center: [0.1, 0.0] }, 64).unwrap();
        assert!(SceneGeometry::new(outer, ok, None).is_ok());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(6);
        let sum: f64 = w.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
        let i10: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((i10 - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn disk_quadrature_examples() {
        let g = TestDomain::disk(0, Point::zeros(), 0.6).unwrap();
        assert!((g.integrate(|_| 1.0) - 0.36 * PI).abs() < 1e-12);
        assert!((g.integrate(|p| p.norm_squared()) - PI * 0.6f64.powi(4) / 2.0).abs() < 1e-12);
        assert!(g.integrate(|p| p.x).abs() < 1e-14);
        assert!(disk_quadrature(Point::zeros(), 0.6, 3, 8).is_err());
    }

    #[test]
    fn disk_quadrature_radial_exactness() {
        // ∫ r^k over the disk = 2π ρ^{k+2}/(k+2); n-point rule integrates r^k·r exactly for k+1 ≤ 2n−1
        let n = 5;
        let q = disk_quadrature(Point::new(0.2, -0.1), 0.7, n, 8).unwrap();
        for k in 0..=(2 * n - 2) {
            let approx: f64 = q
                .points
                .iter()
                .zip(&q.weights)
                .map(|(p, w)| w * (p - Point::new(0.2, -0.1)).norm().powi(k as i32))
                .sum();
            let exact = 2.0 * PI * 0.7f64.powi(k as i32 + 2) / (k as f64 + 2.0);
            assert!((approx - exact).abs() < 1e-13 * exact.max(1.0), "k={k}");
        }
    }
}
