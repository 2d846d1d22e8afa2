//! Test geometries: 4-corner Cantor clouds, sampled curves and constraint grids.

use crate::error::{invalid, Error, Result};
use crate::geometry::Point;
use crate::io::{MeasureFile, WeightConvention};
use crate::measures::DiscreteMeasure;
use crate::numeric::{kahan_sum, KdTree};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Environment variable overriding the atom-count guard.
pub const MAX_POINTS_ENV: &str = "CAPFLOW_MAX_POINTS";
pub const DEFAULT_MAX_POINTS: u128 = 100_000;

/// Resource guards for generated clouds and constraint grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_points: u128,
    pub max_grid: u128,
}

impl Default for Limits {
    fn default() -> Self {
        Self::with_max_points(DEFAULT_MAX_POINTS)
    }
}

impl Limits {
    /// Grid limit is ten times the atom limit.
    pub fn with_max_points(max_points: u128) -> Self {
        Self {
            max_points,
            max_grid: max_points.saturating_mul(10),
        }
    }

    /// Reads [`MAX_POINTS_ENV`]; unparsable values fall back to the default.
    pub fn from_env() -> Self {
        std::env::var(MAX_POINTS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<u128>().ok())
            .map_or_else(Self::default, Self::with_max_points)
    }
}

/// Planar similarity `p -> scale * R(rotation) p + translation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub scale: f64,
    /// radians
    pub rotation: f64,
    pub translation: [f64; 2],
}

impl Default for Similarity {
    fn default() -> Self {
        Self {
            scale: 1.0,
            rotation: 0.0,
            translation: [0.0, 0.0],
        }
    }
}

impl Similarity {
    pub fn scaling(scale: f64) -> Self {
        Self {
            scale,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(invalid(format!("scale must be positive, got {}", self.scale)));
        }
        if !self.rotation.is_finite() || self.translation.iter().any(|t| !t.is_finite()) {
            return Err(invalid("transform must be finite"));
        }
        Ok(())
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let (s, c) = if self.rotation == 0.0 {
            (0.0, 1.0)
        } else {
            self.rotation.sin_cos()
        };
        let x = c * p[0] - s * p[1];
        let y = s * p[0] + c * p[1];
        vec![
            self.scale * x + self.translation[0],
            self.scale * y + self.translation[1],
        ]
    }

    /// `self` after `inner`.
    pub fn compose(&self, inner: &Similarity) -> Similarity {
        let t = self.apply(&inner.translation);
        Similarity {
            scale: self.scale * inner.scale,
            rotation: self.rotation + inner.rotation,
            translation: [t[0], t[1]],
        }
    }
}

/// Kind-specific shape parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetKind {
    /// Self-similar 4-corner construction on the unit square.
    Cantor4 { ratio: f64 },
    /// `[0, length] x {0}`.
    Segment { length: f64 },
    /// Circle of the given radius about the origin.
    Circle { radius: f64 },
    /// Graph of the tent `t -> slope |t - 1/2|` over `[0, 1]`.
    LipschitzGraph { slope: f64 },
    /// Externally supplied cloud.
    Custom { name: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetSpec {
    #[serde(flatten)]
    pub kind: SetKind,
    /// Generation for Cantor clouds, sample count for curves.
    pub resolution: u64,
    #[serde(default)]
    pub transform: Similarity,
}

impl SetSpec {
    pub fn cantor4(generation: u64, ratio: f64) -> Self {
        Self {
            kind: SetKind::Cantor4 { ratio },
            resolution: generation,
            transform: Similarity::default(),
        }
    }

    pub fn segment(n: u64) -> Self {
        Self {
            kind: SetKind::Segment { length: 1.0 },
            resolution: n,
            transform: Similarity::default(),
        }
    }

    pub fn circle(n: u64) -> Self {
        Self {
            kind: SetKind::Circle { radius: 1.0 },
            resolution: n,
            transform: Similarity::default(),
        }
    }

    pub fn lipschitz_graph(n: u64, slope: f64) -> Self {
        Self {
            kind: SetKind::LipschitzGraph { slope },
            resolution: n,
            transform: Similarity::default(),
        }
    }

    pub fn with_transform(mut self, t: Similarity) -> Self {
        self.transform = t;
        self
    }

    /// Short identifier used in experiment tables.
    pub fn label(&self) -> String {
        let base = match &self.kind {
            SetKind::Cantor4 { .. } => "cantor4".to_string(),
            SetKind::Segment { .. } => "segment".to_string(),
            SetKind::Circle { .. } => "circle".to_string(),
            SetKind::LipschitzGraph { .. } => "lipschitz_graph".to_string(),
            SetKind::Custom { name } => name.clone(),
        };
        if self.transform.scale != 1.0 {
            format!("{base}@x{}", self.transform.scale)
        } else {
            base
        }
    }

    pub fn generate(&self) -> Result<PointCloud> {
        self.generate_with(&Limits::from_env())
    }

    pub fn generate_with(&self, limits: &Limits) -> Result<PointCloud> {
        match &self.kind {
            SetKind::Cantor4 { ratio } => {
                cantor4_with(self.resolution, *ratio, &self.transform, limits)
            }
            SetKind::Segment { .. } | SetKind::Circle { .. } | SetKind::LipschitzGraph { .. } => {
                sample_curve_with(&self.kind, self.resolution, &self.transform, limits)
            }
            SetKind::Custom { .. } => Err(invalid("custom sets are loaded from files")),
        }
    }
}

/// Weighted sample standing in for a set and its length measure.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub d: usize,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub convention: WeightConvention,
    pub provenance: SetSpec,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        kahan_sum(self.weights.iter().copied())
    }

    pub fn coords(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.0.clone()).collect()
    }

    /// The cloud as a measure carrying its sample weights.
    pub fn to_measure(&self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::new(self.d, self.points.clone(), self.weights.clone())
    }

    /// Smallest pairwise distance (0 for fewer than two points).
    pub fn min_spacing(&self) -> f64 {
        if self.len() < 2 {
            return 0.0;
        }
        let coords = self.coords();
        let tree = KdTree::new(&coords);
        coords
            .iter()
            .enumerate()
            .filter_map(|(k, c)| tree.nearest(c, Some(k)).map(|(_, r)| r))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_file(&self) -> MeasureFile {
        MeasureFile {
            d: self.d,
            atoms: self.coords(),
            masses: self.weights.clone(),
            weights: Some(self.convention),
            provenance: serde_json::to_value(&self.provenance).ok(),
            run: None,
        }
    }

    /// Reads a cloud back; files without a recognizable provenance become `custom`.
    pub fn from_file(file: MeasureFile, name: &str) -> Result<Self> {
        let convention = file.weights.unwrap_or(WeightConvention::Unspecified);
        let provenance = file
            .provenance
            .clone()
            .and_then(|v| serde_json::from_value::<SetSpec>(v).ok())
            .unwrap_or_else(|| SetSpec {
                kind: SetKind::Custom {
                    name: name.to_string(),
                },
                resolution: file.atoms.len() as u64,
                transform: Similarity::default(),
            });
        let mu = file.into_measure()?;
        Ok(Self {
            d: mu.dim(),
            points: mu.atoms().to_vec(),
            weights: mu.masses().to_vec(),
            convention,
            provenance,
        })
    }
}

fn guard(what: &'static str, requested: u128, limit: u128) -> Result<()> {
    if requested > limit {
        Err(Error::ResourceLimit {
            what,
            requested,
            limit,
        })
    } else {
        Ok(())
    }
}

/// Centers of the `4^generation` squares of the 4-corner construction, probability weights.
pub fn cantor4(generation: u64, ratio: f64, transform: &Similarity) -> Result<PointCloud> {
    cantor4_with(generation, ratio, transform, &Limits::from_env())
}

pub fn cantor4_with(
    generation: u64,
    ratio: f64,
    transform: &Similarity,
    limits: &Limits,
) -> Result<PointCloud> {
    if !(ratio > 0.0 && ratio <= 0.5) {
        return Err(invalid(format!("cantor ratio must lie in (0, 1/2], got {ratio}")));
    }
    transform.validate()?;
    let count = if generation >= 64 {
        u128::MAX
    } else {
        4u128.checked_pow(generation as u32).unwrap_or(u128::MAX)
    };
    guard("cantor4 cloud", count, limits.max_points)?;
    let mut corners = vec![[0.0f64, 0.0f64]];
    let mut side = 1.0;
    for _ in 0..generation {
        let shift = side * (1.0 - ratio);
        corners = corners
            .iter()
            .flat_map(|c| {
                [
                    [c[0], c[1]],
                    [c[0] + shift, c[1]],
                    [c[0], c[1] + shift],
                    [c[0] + shift, c[1] + shift],
                ]
            })
            .collect();
        side *= ratio;
    }
    let half = side / 2.0;
    let w = 1.0 / count as f64;
    let points = corners
        .iter()
        .map(|c| Point(transform.apply(&[c[0] + half, c[1] + half])))
        .collect();
    Ok(PointCloud {
        d: 2,
        points,
        weights: vec![w; count as usize],
        convention: WeightConvention::Probability,
        provenance: SetSpec {
            kind: SetKind::Cantor4 { ratio },
            resolution: generation,
            transform: transform.clone(),
        },
    })
}

/// `n` points equispaced in arclength with weights `length / n`.
pub fn sample_curve(kind: &SetKind, n: u64, transform: &Similarity) -> Result<PointCloud> {
    sample_curve_with(kind, n, transform, &Limits::from_env())
}

pub fn sample_curve_with(
    kind: &SetKind,
    n: u64,
    transform: &Similarity,
    limits: &Limits,
) -> Result<PointCloud> {
    if n < 2 {
        return Err(invalid(format!("curve samples need n >= 2, got {n}")));
    }
    transform.validate()?;
    guard("curve sample", n as u128, limits.max_points)?;
    let nf = n as f64;
    let last = (n - 1) as f64;
    let (raw, length): (Vec<[f64; 2]>, f64) = match kind {
        SetKind::Segment { length } => {
            if !(*length > 0.0 && length.is_finite()) {
                return Err(invalid(format!("segment length must be positive, got {length}")));
            }
            let pts = (0..n).map(|k| [*length * (k as f64 / last), 0.0]).collect();
            (pts, *length)
        }
        SetKind::Circle { radius } => {
            if !(*radius > 0.0 && radius.is_finite()) {
                return Err(invalid(format!("circle radius must be positive, got {radius}")));
            }
            let pts = (0..n)
                .map(|k| {
                    let t = 2.0 * PI * (k as f64) / nf;
                    [radius * t.cos(), radius * t.sin()]
                })
                .collect();
            (pts, 2.0 * PI * radius)
        }
        SetKind::LipschitzGraph { slope } => {
            if !(slope.is_finite() && *slope >= 0.0) {
                return Err(invalid(format!("graph slope must be finite and >= 0, got {slope}")));
            }
            let stretch = (1.0 + slope * slope).sqrt();
            let total = stretch;
            let pts = (0..n)
                .map(|k| {
                    let s = total * (k as f64 / last);
                    let t = if s <= total / 2.0 {
                        s / stretch
                    } else {
                        0.5 + (s - total / 2.0) / stretch
                    };
                    [t, slope * (t - 0.5).abs()]
                })
                .collect();
            (pts, total)
        }
        SetKind::Cantor4 { .. } | SetKind::Custom { .. } => {
            return Err(invalid("sample_curve needs a segment, circle or lipschitz_graph"))
        }
    };
    let points = raw.iter().map(|p| Point(transform.apply(p))).collect();
    let w = transform.scale * length / nf;
    Ok(PointCloud {
        d: 2,
        points,
        weights: vec![w; n as usize],
        convention: WeightConvention::Length,
        provenance: SetSpec {
            kind: kind.clone(),
            resolution: n,
            transform: transform.clone(),
        },
    })
}

/// Grid of spacing `h` over the bounding box of `cloud` padded by `pad`, with
/// every point strictly closer than `delta` to the cloud removed. Also returns
/// each kept point's distance to the nearest cloud point.
pub fn constraint_grid_with_dist(
    cloud: &PointCloud,
    h: f64,
    pad: f64,
    delta: f64,
    limits: &Limits,
) -> Result<(Vec<Point>, Vec<f64>)> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid(format!("grid spacing must be positive, got {h}")));
    }
    if !(pad >= 0.0 && pad.is_finite()) {
        return Err(invalid(format!("grid padding must be nonnegative, got {pad}")));
    }
    if !(delta >= 0.0) {
        return Err(invalid(format!("separation must be nonnegative, got {delta}")));
    }
    if cloud.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    let d = cloud.d;
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in &cloud.points {
        for c in 0..d {
            lo[c] = lo[c].min(p.0[c]);
            hi[c] = hi[c].max(p.0[c]);
        }
    }
    let counts: Vec<u128> = (0..d)
        .map(|c| {
            let extent = (hi[c] - lo[c]) + 2.0 * pad;
            (extent / h * (1.0 + 1e-12)).floor() as u128 + 1
        })
        .collect();
    let total = counts.iter().try_fold(1u128, |acc, &k| acc.checked_mul(k)).unwrap_or(u128::MAX);
    guard("constraint grid", total, limits.max_grid)?;
    let origin: Vec<f64> = lo.iter().map(|l| l - pad).collect();
    let tree = KdTree::new(&cloud.coords());
    let mut points = Vec::new();
    let mut dists = Vec::new();
    let mut index = vec![0u128; d];
    let mut coord = vec![0.0; d];
    for _ in 0..total {
        for c in 0..d {
            coord[c] = origin[c] + index[c] as f64 * h;
        }
        let (_, r) = tree.nearest(&coord, None).expect("cloud is nonempty");
        if r >= delta {
            points.push(Point(coord.clone()));
            dists.push(r);
        }
        for c in 0..d {
            index[c] += 1;
            if index[c] < counts[c] {
                break;
            }
            index[c] = 0;
        }
    }
    Ok((points, dists))
}

pub fn constraint_grid(cloud: &PointCloud, h: f64, pad: f64, delta: f64) -> Result<Vec<Point>> {
    Ok(constraint_grid_with_dist(cloud, h, pad, delta, &Limits::from_env())?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single_atom() -> PointCloud {
        PointCloud {
            d: 2,
            points: vec![Point(vec![0.0, 0.0])],
            weights: vec![1.0],
            convention: WeightConvention::Probability,
            provenance: SetSpec::cantor4(0, 0.25),
        }
    }

    #[test]
    fn cantor_small_generations() {
        let c0 = cantor4(0, 0.25, &Similarity::default()).unwrap();
        assert_eq!(c0.points, vec![Point(vec![0.5, 0.5])]);
        assert_eq!(c0.weights, vec![1.0]);
        let c1 = cantor4(1, 0.25, &Similarity::default()).unwrap();
        assert_eq!(c1.len(), 4);
        assert!(c1.weights.iter().all(|&w| w == 0.25));
        let mut xs: Vec<f64> = c1.points.iter().map(|p| p.0[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs, vec![0.125, 0.125, 0.875, 0.875]);
    }

    #[test]
    fn cantor_counts_and_spacing() {
        for g in 1..=5u64 {
            let c = cantor4(g, 0.25, &Similarity::default()).unwrap();
            assert_eq!(c.len() as u64, 4u64.pow(g as u32));
            assert_relative_eq!(c.total_weight(), 1.0, max_relative = 1e-12);
            // sibling centers sit (1 - ratio) * parent side apart
            let expected = 0.75 * 0.25f64.powi(g as i32 - 1);
            assert_relative_eq!(c.min_spacing(), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn cantor_guard_and_domain() {
        let tight = Limits::with_max_points(16);
        assert!(matches!(
            cantor4_with(3, 0.25, &Similarity::default(), &tight),
            Err(Error::ResourceLimit { .. })
        ));
        assert!(cantor4(2, 0.6, &Similarity::default()).is_err());
        assert!(cantor4(2, 0.0, &Similarity::default()).is_err());
    }

    #[test]
    fn curve_examples() {
        let seg = SetSpec::segment(2).generate().unwrap();
        assert_eq!(seg.points, vec![Point(vec![0.0, 0.0]), Point(vec![1.0, 0.0])]);
        assert_eq!(seg.weights, vec![0.5, 0.5]);

        let circ = SetSpec::circle(4).generate().unwrap();
        assert_eq!(circ.len(), 4);
        assert!(circ.weights.iter().all(|&w| w == 2.0 * PI / 4.0));
        assert_relative_eq!(circ.points[1].0[1], 1.0);

        let g = SetSpec::lipschitz_graph(100, 0.5).generate().unwrap();
        // arclength quadrature of the graph on a fine grid through the kink
        let f = |t: f64| 0.5 * (t - 0.5f64).abs();
        let polyline: f64 = (0..1000)
            .map(|k| {
                let (t0, t1) = (k as f64 / 1000.0, (k + 1) as f64 / 1000.0);
                (t1 - t0).hypot(f(t1) - f(t0))
            })
            .sum();
        assert!((g.total_weight() - polyline).abs() <= 1e-3);
        assert_relative_eq!(g.total_weight(), 1.25f64.sqrt(), max_relative = 1e-12);

        assert!(SetSpec::circle(1).generate().is_err());
        assert!(sample_curve(&SetKind::Segment { length: 0.0 }, 10, &Similarity::default()).is_err());
    }

    #[test]
    fn transforms_are_equivariant() {
        let t = Similarity {
            scale: 2.0,
            rotation: 0.3,
            translation: [1.0, -1.0],
        };
        let moved = SetSpec::cantor4(2, 0.25).with_transform(t.clone()).generate().unwrap();
        let base = SetSpec::cantor4(2, 0.25).generate().unwrap();
        for (a, b) in moved.points.iter().zip(&base.points) {
            assert_eq!(a.0, t.apply(&b.0));
        }
        let seg = SetSpec::segment(10).with_transform(Similarity::scaling(3.0)).generate().unwrap();
        assert_relative_eq!(seg.total_weight(), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = SetSpec::circle(50).generate().unwrap();
        let b = SetSpec::circle(50).generate().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_examples() {
        let g = constraint_grid(&single_atom(), 1.0, 1.0, 0.0).unwrap();
        assert_eq!(g.len(), 9);
        assert!(constraint_grid(&single_atom(), 1.0, 1.0, 2.0).unwrap().is_empty());

        let cloud = SetSpec::circle(40).generate().unwrap();
        let h = 0.1;
        let grid = constraint_grid(&cloud, h, 0.2, 0.5 * h).unwrap();
        assert!(!grid.is_empty());
        for y in &grid {
            let near = cloud.points.iter().map(|p| p.dist(y)).fold(f64::INFINITY, f64::min);
            assert!(near >= 0.5 * h);
        }
        let tight = Limits::with_max_points(1);
        assert!(matches!(
            constraint_grid_with_dist(&cloud, 0.001, 0.0, 0.0, &tight),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn spec_serializes_with_kind_tag() {
        let s = SetSpec::cantor4(3, 0.25);
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v["kind"], "cantor4");
        assert_eq!(v["ratio"], 0.25);
        let back: SetSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
    }
}
