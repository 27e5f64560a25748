//! Indicator sweep over a disk family, no-response classification, and the
//! rasterized intersection of accepted disks.

use base64::Engine;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::forward::ResponseTrace;
use crate::geometry::{default_clearance, Curve2D, Point, TestDomain, DEFAULT_QUAD_ORDERS};
use crate::indicator::{gram_matrix, indicator_value, response_vector, IndicatorValue};
use crate::probes::{build_basis, BasisConfig, DEFAULT_TRUNCATION};

/// Guard for the logarithm of exact zeros.
pub const EPS_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub nx: usize,
    pub ny: usize,
    pub radii: Vec<f64>,
    #[serde(default)]
    pub basis: BasisConfig,
    /// Relative eigenvalue cutoff; when absent, `δ²` under noise `δ` and
    /// `1e-12` otherwise (see [`SweepConfig::effective_truncation`]).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
    #[serde(default = "default_quad_radial")]
    pub quad_radial: usize,
    #[serde(default = "default_quad_angular")]
    pub quad_angular: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clearance: Option<f64>,
}

fn default_quad_radial() -> usize {
    DEFAULT_QUAD_ORDERS.0
}

fn default_quad_angular() -> usize {
    DEFAULT_QUAD_ORDERS.1
}

impl SweepConfig {
    pub fn new(nx: usize, ny: usize, radii: Vec<f64>, basis: BasisConfig) -> Self {
        Self {
            nx,
            ny,
            radii,
            basis,
            truncation: None,
            quad_radial: DEFAULT_QUAD_ORDERS.0,
            quad_angular: DEFAULT_QUAD_ORDERS.1,
            clearance: None,
        }
    }

    pub fn effective_truncation(&self, noise: f64) -> f64 {
        match self.truncation {
            Some(t) => t,
            None if noise > 0.0 => (noise * noise).max(DEFAULT_TRUNCATION),
            None => DEFAULT_TRUNCATION,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return invalid("sweep grid must have nx, ny ≥ 1");
        }
        if self.radii.is_empty() {
            return invalid("sweep radius list is empty");
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return invalid("sweep radii must be positive");
        }
        if self.radii.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("sweep radii must be strictly increasing");
        }
        if let Some(t) = self.truncation {
            if !(t > 0.0 && t < 1.0) {
                return invalid(format!("truncation must lie in (0, 1), got {t}"));
            }
        }
        if self.quad_radial < 4 || self.quad_angular < 4 {
            return invalid("quadrature orders must be ≥ 4");
        }
        Ok(())
    }

    /// Every `(center, radius)` of the family in sweep order (radius, then
    /// row, then column) with its identifier and admissibility.
    pub fn candidates(&self, outer: &Curve2D) -> Vec<(u64, Point, f64, bool)> {
        let clearance = self.clearance.unwrap_or_else(|| default_clearance(outer));
        let [x0, y0, x1, y1] = outer.bbox();
        let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            let (lo, hi) = (lo + clearance, hi - clearance);
            if n == 1 {
                vec![0.5 * (lo + hi)]
            } else {
                (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
            }
        };
        let xs = axis(x0, x1, self.nx);
        let ys = axis(y0, y1, self.ny);
        let mut out = Vec::with_capacity(self.radii.len() * xs.len() * ys.len());
        let mut id = 0;
        for &rho in &self.radii {
            for &y in &ys {
                for &x in &xs {
                    let c = Point::new(x, y);
                    let ok = outer.contains(&c).unwrap_or(false) && outer.distance_to(&c) >= rho + clearance;
                    out.push((id, c, rho, ok));
                    id += 1;
                }
            }
        }
        out
    }

    pub fn domains(&self, outer: &Curve2D) -> Result<Vec<TestDomain>> {
        self.candidates(outer)
            .into_iter()
            .filter(|c| c.3)
            .map(|(id, c, rho, _)| TestDomain::disk_with_orders(id, c, rho, self.quad_radial, self.quad_angular))
            .collect()
    }
}

/// One row of the indicator table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorResult {
    pub domain_id: u64,
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    pub indicator: f64,
    pub rank: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl IndicatorResult {
    pub fn new(domain: &TestDomain, v: &IndicatorValue) -> Self {
        Self {
            domain_id: domain.id,
            cx: domain.center.x,
            cy: domain.center.y,
            radius: domain.radius,
            indicator: v.value,
            rank: v.rank,
            lambda_min: v.lambda_min,
            lambda_max: v.lambda_max,
        }
    }

    pub fn center(&self) -> Point {
        Point::new(self.cx, self.cy)
    }
}

/// Indicator for every admissible disk of the family, in family order. The
/// response vector is formed once; Gram matrices are built in parallel.
pub fn sweep(trace: &ResponseTrace, cfg: &SweepConfig, outer: &Curve2D, truncation: f64) -> Result<Vec<IndicatorResult>> {
    cfg.validate()?;
    let basis = build_basis(&cfg.basis, outer)?;
    let r = response_vector(trace, &basis, outer)?;
    let candidates = cfg.candidates(outer);
    for (id, c, rho, ok) in &candidates {
        if !ok {
            log::debug!("skipping disk {id} at ({:.4}, {:.4}) radius {rho}: not inside the domain with clearance", c.x, c.y);
        }
    }
    let domains = cfg.domains(outer)?;
    log::info!(
        "sweep: {} admissible of {} candidate disks, {} probes",
        domains.len(),
        candidates.len(),
        basis.len()
    );
    if domains.is_empty() {
        return invalid("no admissible test domain: every disk of the family leaves the domain; reduce the radii");
    }
    domains
        .par_iter()
        .map(|g| {
            let m = gram_matrix(&basis, g)?;
            let v = indicator_value(&r, &m, truncation)?;
            Ok(IndicatorResult::new(g, &v))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum ClassifyMethod {
    /// Split the sorted `log₁₀(I₁ + ε_floor)` at the largest gap and accept the
    /// lower group; falls back to `fallback_threshold` when all values lie
    /// within one decade.
    LargestGap { fallback_threshold: f64 },
    FixedThreshold { threshold: f64 },
}

/// Default threshold used when the largest-gap split is degenerate.
pub const DEFAULT_FALLBACK_THRESHOLD: f64 = 1e-8;

impl Default for ClassifyMethod {
    fn default() -> Self {
        ClassifyMethod::LargestGap { fallback_threshold: DEFAULT_FALLBACK_THRESHOLD }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub accepted: Vec<u64>,
    /// `"largest-gap"`, `"fixed-threshold"` or `"fallback-threshold"`.
    pub method: String,
    /// Accept iff `I₁ ≤ threshold`.
    pub threshold: f64,
    /// Width of the split gap in decades (largest-gap only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_decades: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

pub fn classify(results: &[IndicatorResult], method: ClassifyMethod) -> Result<Classification> {
    let fixed = |threshold: f64, method: &str, warning: Option<String>| Classification {
        accepted: results.iter().filter(|r| r.indicator <= threshold).map(|r| r.domain_id).collect(),
        method: method.into(),
        threshold,
        gap_decades: None,
        warning,
    };
    match method {
        ClassifyMethod::FixedThreshold { threshold } => Ok(fixed(threshold, "fixed-threshold", None)),
        ClassifyMethod::LargestGap { fallback_threshold } => {
            if results.len() < 2 {
                return invalid("largest-gap classification needs at least two results");
            }
            let mut logs: Vec<f64> = results.iter().map(|r| (r.indicator + EPS_FLOOR).log10()).collect();
            logs.sort_by(|a, b| a.total_cmp(b));
            let spread = logs[logs.len() - 1] - logs[0];
            if spread <= 1.0 {
                let msg = format!(
                    "all indicator values lie within a factor {:.3} of each other; falling back to threshold {fallback_threshold:e}",
                    10f64.powf(spread)
                );
                log::warn!("{msg}");
                return Ok(fixed(fallback_threshold, "fallback-threshold", Some(msg)));
            }
            let (split, gap) = logs
                .windows(2)
                .enumerate()
                .map(|(i, w)| (i, w[1] - w[0]))
                .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
            let threshold = 10f64.powf(0.5 * (logs[split] + logs[split + 1]));
            let mut c = fixed(threshold, "largest-gap", None);
            c.gap_decades = Some(gap);
            Ok(c)
        }
    }
}

/// Raster of `Ω ∩ ⋂ Ḡ` over accepted disks.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionMask {
    /// `[xmin, ymin, xmax, ymax]`.
    pub bbox: [f64; 4],
    pub nx: usize,
    pub ny: usize,
    /// Row-major, row `j` at `y = ymin + (j + ½)·dy`.
    pub pixels: Vec<bool>,
    pub accepted: Vec<u64>,
    pub threshold: Classification,
}

/// A closed disk from the accepted set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub id: u64,
    pub center: Point,
    pub radius: f64,
}

impl Disk {
    pub fn contains_closed(&self, p: &Point) -> bool {
        (p - self.center).norm() <= self.radius
    }
}

impl From<&IndicatorResult> for Disk {
    fn from(r: &IndicatorResult) -> Self {
        Disk { id: r.domain_id, center: r.center(), radius: r.radius }
    }
}

impl ReconstructionMask {
    pub fn pixel_center(&self, i: usize, j: usize) -> Point {
        let dx = (self.bbox[2] - self.bbox[0]) / self.nx as f64;
        let dy = (self.bbox[3] - self.bbox[1]) / self.ny as f64;
        Point::new(self.bbox[0] + (i as f64 + 0.5) * dx, self.bbox[1] + (j as f64 + 0.5) * dy)
    }

    pub fn pixel_area(&self) -> f64 {
        (self.bbox[2] - self.bbox[0]) * (self.bbox[3] - self.bbox[1]) / (self.nx * self.ny) as f64
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.pixels[j * self.nx + i]
    }

    pub fn count(&self) -> usize {
        self.pixels.iter().filter(|p| **p).count()
    }

    pub fn area(&self) -> f64 {
        self.count() as f64 * self.pixel_area()
    }

    /// Pixels packed MSB-first, 8 per byte, then base64.
    pub fn packed_pixels(&self) -> String {
        let mut bytes = vec![0u8; self.pixels.len().div_ceil(8)];
        for (k, &p) in self.pixels.iter().enumerate() {
            if p {
                bytes[k / 8] |= 0x80 >> (k % 8);
            }
        }
        base64::engine::general_purpose::STANDARD.encode(bytes)
    }

    pub fn unpack_pixels(encoded: &str, count: usize) -> Result<Vec<bool>> {
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(encoded)
            .map_err(|e| Error::Invalid(format!("mask pixels are not valid base64: {e}")))?;
        if bytes.len() != count.div_ceil(8) {
            return invalid("mask pixel payload has the wrong length");
        }
        Ok((0..count).map(|k| bytes[k / 8] & (0x80 >> (k % 8)) != 0).collect())
    }

    pub fn to_json(&self) -> MaskJson {
        MaskJson {
            bbox: self.bbox,
            resolution: [self.nx, self.ny],
            pixels: self.packed_pixels(),
            accepted: self.accepted.clone(),
            threshold: self.threshold.clone(),
        }
    }

    pub fn from_json(m: &MaskJson) -> Result<Self> {
        let [nx, ny] = m.resolution;
        Ok(Self {
            bbox: m.bbox,
            nx,
            ny,
            pixels: Self::unpack_pixels(&m.pixels, nx * ny)?,
            accepted: m.accepted.clone(),
            threshold: m.threshold.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskJson {
    pub bbox: [f64; 4],
    pub resolution: [usize; 2],
    pub pixels: String,
    pub accepted: Vec<u64>,
    pub threshold: Classification,
}

/// Pixel `p` is set iff `p ∈ Ḡ` for every accepted disk and `p ∈ Ω̄`.
pub fn intersect_mask(accepted: &[Disk], resolution: (usize, usize), outer: &Curve2D, classification: Classification) -> Result<ReconstructionMask> {
    if accepted.is_empty() {
        return Err(Error::EmptyAccepted(
            "no test disk was classified as no-response; enlarge the radius list so that some disks can cover the cavity".into(),
        ));
    }
    let (nx, ny) = resolution;
    if nx == 0 || ny == 0 {
        return invalid("mask resolution must be positive");
    }
    let mut mask = ReconstructionMask {
        bbox: outer.bbox(),
        nx,
        ny,
        pixels: vec![false; nx * ny],
        accepted: accepted.iter().map(|d| d.id).collect(),
        threshold: classification,
    };
    let pixels: Vec<bool> = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let p = mask.pixel_center(k % nx, k / nx);
            accepted.iter().all(|d| d.contains_closed(&p)) && outer.contains_closed(&p)
        })
        .collect();
    mask.pixels = pixels;
    Ok(mask)
}

/// Rasterize the closed region bounded by `curve` on the mask grid.
pub fn rasterize_curve(curve: &Curve2D, bbox: [f64; 4], nx: usize, ny: usize) -> Vec<bool> {
    let dx = (bbox[2] - bbox[0]) / nx as f64;
    let dy = (bbox[3] - bbox[1]) / ny as f64;
    (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let p = Point::new(bbox[0] + ((k % nx) as f64 + 0.5) * dx, bbox[1] + ((k / nx) as f64 + 0.5) * dy);
            curve.contains_closed(&p)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub jaccard: f64,
    pub hausdorff: f64,
    pub area_ratio: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub empty_mask: bool,
}

/// Jaccard index and area ratio over pixels; symmetric Hausdorff distance
/// between boundary pixel centers of the mask and the nodes of ∂D.
pub fn metrics(mask: &ReconstructionMask, truth: &Curve2D) -> Result<Metrics> {
    let [tx0, ty0, tx1, ty1] = truth.bbox();
    let [x0, y0, x1, y1] = mask.bbox;
    if tx0 < x0 || ty0 < y0 || tx1 > x1 || ty1 > y1 {
        return invalid("true cavity extends outside the mask bounding box");
    }
    let truth_px = rasterize_curve(truth, mask.bbox, mask.nx, mask.ny);
    let inter = mask.pixels.iter().zip(&truth_px).filter(|(a, b)| **a && **b).count();
    let union = mask.pixels.iter().zip(&truth_px).filter(|(a, b)| **a || **b).count();
    let truth_count = truth_px.iter().filter(|p| **p).count();
    let jaccard = if union == 0 { 0.0 } else { inter as f64 / union as f64 };
    let area_ratio = mask.count() as f64 / truth_count.max(1) as f64;
    let boundary = mask_boundary(mask);
    if boundary.is_empty() {
        return Ok(Metrics { jaccard: 0.0, hausdorff: f64::INFINITY, area_ratio, empty_mask: true });
    }
    let to_nodes = boundary
        .iter()
        .map(|p| truth.points().iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let to_mask = truth
        .points()
        .iter()
        .map(|q| boundary.iter().map(|p| (p - q).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    Ok(Metrics { jaccard, hausdorff: to_nodes.max(to_mask), area_ratio, empty_mask: false })
}

/// Centers of set pixels with an unset 4-neighbour (or on the raster edge).
pub fn mask_boundary(mask: &ReconstructionMask) -> Vec<Point> {
    let mut out = Vec::new();
    for j in 0..mask.ny {
        for i in 0..mask.nx {
            if !mask.get(i, j) {
                continue;
            }
            let edge = i == 0 || j == 0 || i + 1 == mask.nx || j + 1 == mask.ny;
            if edge || !mask.get(i - 1, j) || !mask.get(i + 1, j) || !mask.get(i, j - 1) || !mask.get(i, j + 1) {
                out.push(mask.pixel_center(i, j));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CurveShape;
    use std::f64::consts::PI;

    fn result(id: u64, v: f64) -> IndicatorResult {
        IndicatorResult { domain_id: id, cx: 0.0, cy: 0.0, radius: 0.1, indicator: v, rank: 1, lambda_min: 1.0, lambda_max: 1.0 }
    }

    fn unit_disk() -> Curve2D {
        Curve2D::new(CurveShape::Circle { radius: 1.0, center: [0.0, 0.0] }, 256).unwrap()
    }

    #[test]
    fn largest_gap_split() {
        let rs: Vec<_> = [1e-3, 2e-3, 5e2, 8e2].iter().enumerate().map(|(i, v)| result(i as u64, *v)).collect();
        let c = classify(&rs, ClassifyMethod::default()).unwrap();
        assert_eq!(c.accepted, vec![0, 1]);
        assert!(c.threshold > 2e-3 && c.threshold < 5e2);
        assert!(c.warning.is_none());
    }

    #[test]
    fn degenerate_gap_falls_back() {
        let rs: Vec<_> = (0..4).map(|i| result(i, 3.0)).collect();
        let c = classify(&rs, ClassifyMethod::LargestGap { fallback_threshold: 5.0 }).unwrap();
        assert!(c.warning.is_some());
        assert_eq!(c.method, "fallback-threshold");
        assert_eq!(c.accepted.len(), 4);
        assert!(classify(&rs[..1], ClassifyMethod::default()).is_err());
        let t = classify(&rs, ClassifyMethod::FixedThreshold { threshold: 1.0 }).unwrap();
        assert!(t.accepted.is_empty());
    }

    fn lens_area(r: f64, d: f64) -> f64 {
        2.0 * r * r * (d / (2.0 * r)).acos() - 0.5 * d * (4.0 * r * r - d * d).sqrt()
    }

    #[test]
    fn lens_mask_area() {
        let outer = unit_disk();
        let disks = [
            Disk { id: 0, center: Point::zeros(), radius: 0.6 },
            Disk { id: 1, center: Point::new(0.1, 0.0), radius: 0.6 },
        ];
        let cls = classify(&[result(0, 0.0), result(1, 0.0)], ClassifyMethod::FixedThreshold { threshold: 1.0 }).unwrap();
        let mask = intersect_mask(&disks, (256, 256), &outer, cls).unwrap();
        let exact = lens_area(0.6, 0.1);
        // boundary-pixel bound: perimeter × pixel diagonal
        let h = 2.0 / 256.0;
        let tol = 2.0 * PI * 0.6 * h * std::f64::consts::SQRT_2;
        assert!((mask.area() - exact).abs() < tol, "{} vs {exact}", mask.area());
        assert!(intersect_mask(&[], (8, 8), &outer, classify(&[result(0, 1.0)], ClassifyMethod::FixedThreshold { threshold: 0.0 }).unwrap()).is_err());
    }

    #[test]
    fn mask_json_roundtrip() {
        let outer = unit_disk();
        let disks = [Disk { id: 3, center: Point::new(0.2, 0.1), radius: 0.5 }];
        let cls = classify(&[result(3, 0.0)], ClassifyMethod::FixedThreshold { threshold: 1.0 }).unwrap();
        let mask = intersect_mask(&disks, (37, 21), &outer, cls).unwrap();
        let back = ReconstructionMask::from_json(&mask.to_json()).unwrap();
        assert_eq!(back, mask);
    }

    #[test]
    fn metrics_examples() {
        let outer = unit_disk();
        let truth = Curve2D::new(CurveShape::Circle { radius: 0.5, center: [0.0, 0.0] }, 256).unwrap();
        let cls = classify(&[result(0, 0.0)], ClassifyMethod::FixedThreshold { threshold: 1.0 }).unwrap();
        let exact = intersect_mask(&[Disk { id: 0, center: Point::zeros(), radius: 0.5 }], (128, 128), &outer, cls.clone()).unwrap();
        let m = metrics(&exact, &truth).unwrap();
        assert!(m.jaccard >= 0.97, "{m:?}");
        let whole = intersect_mask(&[Disk { id: 0, center: Point::zeros(), radius: 2.0 }], (128, 128), &outer, cls.clone()).unwrap();
        let m = metrics(&whole, &truth).unwrap();
        assert!((m.jaccard - 0.25).abs() < 0.01, "{m:?}");
        let far = intersect_mask(&[Disk { id: 0, center: Point::new(0.75, 0.0), radius: 0.2 }], (128, 128), &outer, cls).unwrap();
        assert_eq!(metrics(&far, &truth).unwrap().jaccard, 0.0);
    }

    #[test]
    fn sweep_candidates_respect_clearance() {
        let outer = unit_disk();
        let cfg = SweepConfig::new(8, 8, vec![0.2, 0.4], BasisConfig::default());
        let cands = cfg.candidates(&outer);
        assert_eq!(cands.len(), 128);
        let clearance = default_clearance(&outer);
        for (_, c, rho, ok) in cands {
            if ok {
                assert!(c.norm() + rho + clearance <= 1.0 + 1e-3);
            }
        }
        let bad = SweepConfig::new(8, 8, vec![0.4, 0.2], BasisConfig::default());
        assert!(bad.validate().is_err());
    }
}
