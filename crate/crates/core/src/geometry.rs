//! Points, triangles and Menger curvature.
//!
//! Axis indices are zero-based throughout the library.

use crate::error::{Error, Result};
use crate::numeric::{exactly_parallel, DoubleDouble as DD};
use serde::{Deserialize, Serialize};

/// A point of `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "points need d >= 2, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coordinate".into()));
        }
        Ok(Self(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn sub(&self, other: &Point) -> Vec<f64> {
        self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        crate::numeric::dist(&self.0, &other.0)
    }

    pub fn scaled(&self, lambda: f64) -> Point {
        Point(self.0.iter().map(|c| c * lambda).collect())
    }

    pub fn translated(&self, v: &[f64]) -> Point {
        Point(self.0.iter().zip(v).map(|(c, t)| c + t).collect())
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

/// Ordered triple of points sharing a dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Triple {
    pub x: Point,
    pub y: Point,
    pub z: Point,
}

impl Triple {
    pub fn new(x: Point, y: Point, z: Point) -> Result<Self> {
        let d = x.dim();
        for p in [&y, &z] {
            if p.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: p.dim(),
                });
            }
        }
        Ok(Self { x, y, z })
    }

    /// Shorthand for tests and examples; panics on dimension mismatch.
    pub fn from_coords(x: &[f64], y: &[f64], z: &[f64]) -> Self {
        Self::new(x.to_vec().into(), y.to_vec().into(), z.to_vec().into())
            .expect("triple dimensions agree")
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    /// Fails with `DegenerateTriple` when two points coincide exactly.
    pub fn ensure_distinct(&self) -> Result<()> {
        if self.x == self.y || self.y == self.z || self.x == self.z {
            Err(Error::DegenerateTriple)
        } else {
            Ok(())
        }
    }

    /// Difference vectors `a = y - x`, `b = z - y` (so `a + b = z - x`).
    pub fn differences(&self) -> (Vec<f64>, Vec<f64>) {
        (self.y.sub(&self.x), self.z.sub(&self.y))
    }

    /// Side lengths `(|x-y|, |y-z|, |x-z|)`.
    pub fn sides(&self) -> (f64, f64, f64) {
        (
            self.x.dist(&self.y),
            self.y.dist(&self.z),
            self.x.dist(&self.z),
        )
    }

    pub fn permuted(&self, order: [usize; 3]) -> Triple {
        let pts = [&self.x, &self.y, &self.z];
        Triple {
            x: pts[order[0]].clone(),
            y: pts[order[1]].clone(),
            z: pts[order[2]].clone(),
        }
    }

    pub fn map(&self, f: impl Fn(&Point) -> Point) -> Triple {
        Triple {
            x: f(&self.x),
            y: f(&self.y),
            z: f(&self.z),
        }
    }

    /// True when the three points lie on one line, decided exactly.
    pub fn is_exactly_collinear(&self) -> bool {
        let (a, b) = self.differences();
        exactly_parallel(&a, &b)
    }
}

/// All six orderings of a triple.
pub const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

fn check_axis(axis: usize, dim: usize) -> Result<()> {
    if axis >= dim {
        Err(Error::AxisOutOfRange { axis, dim })
    } else {
        Ok(())
    }
}

/// `L(x,y,z)`: the longest side of the triangle.
pub fn largest_side(t: &Triple) -> Result<f64> {
    t.ensure_distinct()?;
    let (s1, s2, s3) = t.sides();
    Ok(s1.max(s2).max(s3))
}

/// `M_i = max(|y_i - x_i|, |z_i - y_i|, |z_i - x_i|)`.
pub fn coordinate_spread(t: &Triple, axis: usize) -> Result<f64> {
    check_axis(axis, t.dim())?;
    let (x, y, z) = (t.x.0[axis], t.y.0[axis], t.z.0[axis]);
    Ok((y - x).abs().max((z - y).abs()).max((z - x).abs()))
}

/// Triangle area from the Gram determinant of `a = y - x`, `b = z - y`,
/// evaluated through its 2x2 minors on exact coordinate differences.
pub fn triangle_area(t: &Triple) -> Result<f64> {
    t.ensure_distinct()?;
    let d = t.dim();
    let a: Vec<DD> = (0..d).map(|i| DD::diff(t.y.0[i], t.x.0[i])).collect();
    let b: Vec<DD> = (0..d).map(|i| DD::diff(t.z.0[i], t.y.0[i])).collect();
    let mut acc = DD::ZERO;
    for i in 0..d {
        for j in (i + 1)..d {
            let m = a[i].mul(b[j]).sub(a[j].mul(b[i]));
            acc = acc.add(m.mul(m));
        }
    }
    Ok(0.5 * acc.sqrt().to_f64())
}

/// Menger curvature `c(x,y,z) = 4 area / (|x-y| |y-z| |x-z|)`, the inverse circumradius.
pub fn menger_curvature(t: &Triple) -> Result<f64> {
    let area = triangle_area(t)?;
    if area == 0.0 {
        return Ok(0.0);
    }
    let (s1, s2, s3) = t.sides();
    Ok(4.0 * area / (s1 * s2 * s3))
}

/// Sum over the six orderings of `1 / ((z2 - z1) * conj(z3 - z1))` for planar
/// points read as complex numbers. The result is real and equals `c^2`.
pub fn melnikov_sum(t: &Triple) -> Result<f64> {
    if t.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: t.dim(),
        });
    }
    t.ensure_distinct()?;
    // conj(u) v / (|u|^2 |v|^2) with u = z2 - z1, v = z3 - z1, in double-double
    let zs = [&t.x, &t.y, &t.z].map(|p| [p.0[0], p.0[1]]);
    let (mut re, mut im) = (DD::ZERO, DD::ZERO);
    let mut magnitude = 0.0;
    for [s1, s2, s3] in PERMUTATIONS {
        let u = [0, 1].map(|i| DD::diff(zs[s2][i], zs[s1][i]));
        let v = [0, 1].map(|i| DD::diff(zs[s3][i], zs[s1][i]));
        let uu = u[0].mul(u[0]).add(u[1].mul(u[1]));
        let vv = v[0].mul(v[0]).add(v[1].mul(v[1]));
        let den = uu.mul(vv);
        let tr = u[0].mul(v[0]).add(u[1].mul(v[1])).div(den);
        let ti = u[0].mul(v[1]).sub(u[1].mul(v[0])).div(den);
        magnitude += (tr.to_f64().powi(2) + ti.to_f64().powi(2)).sqrt();
        re = re.add(tr);
        im = im.add(ti);
    }
    let (re, im) = (re.to_f64(), im.to_f64());
    if im.abs() > 1e-9 * magnitude.max(re.abs()) {
        return Err(Error::NumericInconsistency(format!(
            "imaginary residue {im} against real part {re}"
        )));
    }
    Ok(re)
}

/// Squared curvature from the side lengths of a triangle whose side `|a+b|`
/// has been normalized to one.
pub fn curvature_sq_unit_base(a_len: f64, b_len: f64) -> f64 {
    (b_len + a_len - 1.0) * (b_len + 1.0 - a_len) * (a_len + 1.0 - b_len) * (b_len + 1.0 + a_len)
        / (a_len * a_len * b_len * b_len)
}

/// The side-length product form of `c^2` for an arbitrary triple: lengths are
/// normalised by `|x - z|` and the product is evaluated in double-double, since
/// the factor `|a| + |b| - 1` cancels badly for flat triangles.
pub fn curvature_sq_from_sides(t: &Triple) -> Result<f64> {
    t.ensure_distinct()?;
    let d = t.dim();
    let len = |p: &Point, q: &Point| {
        (0..d)
            .map(|i| DD::diff(p.0[i], q.0[i]))
            .fold(DD::ZERO, |acc, c| acc.add(c.mul(c)))
            .sqrt()
    };
    let base = len(&t.x, &t.z);
    let a = len(&t.x, &t.y).div(base);
    let b = len(&t.y, &t.z).div(base);
    let one = DD::ONE;
    let num = b.add(a).sub(one).mul(b.add(one).sub(a)).mul(a.add(one).sub(b)).mul(b.add(one).add(a));
    let unit = num.div(a.mul(a).mul(b).mul(b)).to_f64();
    Ok(unit / (base.to_f64() * base.to_f64()))
}

/// Angle between the hyperplane `{x_axis = 0}` and the line through `p` and `q`.
pub fn line_hyperplane_angle(p: &Point, q: &Point, axis: usize) -> Result<f64> {
    check_axis(axis, p.dim())?;
    if p == q {
        return Err(Error::DegenerateTriple);
    }
    let ratio = (p.0[axis] - q.0[axis]).abs() / p.dist(q);
    Ok(ratio.min(1.0).asin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    fn tri(x: [f64; 2], y: [f64; 2], z: [f64; 2]) -> Triple {
        Triple::from_coords(&x, &y, &z)
    }

    #[test]
    fn largest_side_examples() {
        assert_relative_eq!(
            largest_side(&tri([0., 0.], [1., 0.], [0., 1.])).unwrap(),
            SQRT_2
        );
        assert_eq!(largest_side(&tri([0., 0.], [2., 0.], [4., 0.])).unwrap(), 4.0);
        assert!(matches!(
            largest_side(&tri([0., 0.], [0., 0.], [1., 0.])),
            Err(Error::DegenerateTriple)
        ));
    }

    #[test]
    fn coordinate_spread_examples() {
        assert_eq!(coordinate_spread(&tri([0., 0.], [0., 1.], [1., 1.]), 0).unwrap(), 1.0);
        assert_eq!(coordinate_spread(&tri([0., 0.], [0., 1.], [0., 2.]), 0).unwrap(), 0.0);
        assert_eq!(coordinate_spread(&tri([0., 0.], [3., 4.], [6., 0.]), 1).unwrap(), 4.0);
        assert!(matches!(
            coordinate_spread(&tri([0., 0.], [3., 4.], [6., 0.]), 2),
            Err(Error::AxisOutOfRange { axis: 2, dim: 2 })
        ));
    }

    #[test]
    fn area_and_curvature_examples() {
        assert_relative_eq!(triangle_area(&tri([0., 0.], [1., 0.], [0., 1.])).unwrap(), 0.5);
        assert_eq!(triangle_area(&tri([0., 0.], [1., 1.], [3., 3.])).unwrap(), 0.0);
        assert_relative_eq!(
            menger_curvature(&tri([1., 0.], [0., 1.], [-1., 0.])).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            menger_curvature(&tri([0., 0.], [1., 0.], [0., 1.])).unwrap(),
            SQRT_2,
            max_relative = 1e-15
        );
        assert_eq!(menger_curvature(&tri([0., 0.], [1., 2.], [2., 4.])).unwrap(), 0.0);
    }

    #[test]
    fn melnikov_examples() {
        let m = melnikov_sum(&tri([0., 0.], [1., 0.], [0., 1.])).unwrap();
        assert_relative_eq!(m, 2.0, max_relative = 1e-14);
        let collinear = melnikov_sum(&tri([0., 0.], [1., 0.], [2., 0.])).unwrap();
        assert!(collinear.abs() < 1e-15);
        let t3 = Triple::from_coords(&[0., 0., 0.], &[1., 0., 0.], &[0., 1., 0.]);
        assert!(matches!(
            melnikov_sum(&t3),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn side_product_form_on_flat_triangle() {
        let t = tri([0., 0.], [0.5, 1e-7], [1., 0.]);
        let c2 = menger_curvature(&t).unwrap().powi(2);
        assert_relative_eq!(curvature_sq_from_sides(&t).unwrap(), c2, max_relative = 1e-12);
        let big = t.map(|p| p.scaled(3.0));
        assert_relative_eq!(curvature_sq_from_sides(&big).unwrap(), c2 / 9.0, max_relative = 1e-12);
    }

    #[test]
    fn angle_examples() {
        let o = Point(vec![0., 0.]);
        assert_eq!(line_hyperplane_angle(&o, &Point(vec![1., 0.]), 1).unwrap(), 0.0);
        assert_relative_eq!(
            line_hyperplane_angle(&o, &Point(vec![0., 1.]), 1).unwrap(),
            FRAC_PI_2
        );
        assert_relative_eq!(
            line_hyperplane_angle(&o, &Point(vec![1., 1.]), 0).unwrap(),
            FRAC_PI_4,
            max_relative = 1e-15
        );
        assert!(line_hyperplane_angle(&o, &o, 0).is_err());
    }

    #[test]
    fn collinearity_is_exact() {
        assert!(tri([0., 0.], [1., 1.], [2., 2.]).is_exactly_collinear());
        assert!(!tri([0., 0.], [1., 1.], [2., 2.0000000001]).is_exactly_collinear());
    }

    #[test]
    fn point_validation() {
        assert!(Point::new(vec![1.0]).is_err());
        assert!(Point::new(vec![1.0, f64::NAN]).is_err());
        assert!(Point::new(vec![1.0, 2.0]).is_ok());
    }
}
