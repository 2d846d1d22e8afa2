//! Low-level numerical helpers: compensated summation, deterministic
//! partitioned reductions, double-double arithmetic and exact predicates.

use rayon::prelude::*;
use std::ops::Range;

/// Partition count used when callers do not pin one explicitly.
pub const DEFAULT_PARTITIONS: usize = 16;

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// Folds another partial sum in (value and compensation both carried).
    pub fn merge(&mut self, other: &KahanSum) {
        self.add(other.sum);
        self.add(other.comp);
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn kahan_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<KahanSum>().value()
}

/// Splits `0..len` into `partitions` contiguous chunks (some possibly empty).
pub fn partition_ranges(len: usize, partitions: usize) -> Vec<Range<usize>> {
    let parts = partitions.max(1);
    (0..parts)
        .map(|p| (p * len / parts)..((p + 1) * len / parts))
        .collect()
}

/// Sums `body` over the leading index in `0..len` using a fixed partition
/// count. Each partition accumulates with compensation; partials are merged
/// in partition order, so the result depends only on `partitions`.
pub fn partitioned_sum<F>(len: usize, partitions: usize, body: F) -> f64
where
    F: Fn(usize, &mut KahanSum) + Sync,
{
    let partials: Vec<KahanSum> = partition_ranges(len, partitions)
        .into_par_iter()
        .map(|range| {
            let mut acc = KahanSum::new();
            for i in range {
                body(i, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = KahanSum::new();
    for p in &partials {
        total.merge(p);
    }
    total.value()
}

/// Error-free product: returns `(p, e)` with `p = fl(a*b)` and `a*b = p + e` exactly.
#[inline]
pub fn two_product(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Error-free sum.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Exact test of `a*b == c*d` in real arithmetic (no overflow/underflow assumed).
#[inline]
pub fn products_equal(a: f64, b: f64, c: f64, d: f64) -> bool {
    two_product(a, b) == two_product(c, d)
}

/// Exact collinearity of vectors `u` and `v`: every 2x2 minor vanishes.
pub fn exactly_parallel(u: &[f64], v: &[f64]) -> bool {
    let d = u.len();
    for i in 0..d {
        for j in (i + 1)..d {
            if !products_equal(u[i], v[j], u[j], v[i]) {
                return false;
            }
        }
    }
    true
}

/// Double-double number `hi + lo`, roughly 106 bits of significand.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };
    pub const ONE: DoubleDouble = DoubleDouble { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let (s, e) = two_sum(hi, lo);
        Self { hi: s, lo: e }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let r = Self::renorm(s, e + t);
        Self::renorm(r.hi, r.lo + f)
    }

    pub fn sub(self, o: Self) -> Self {
        self.add(o.neg())
    }

    pub fn mul(self, o: Self) -> Self {
        let (p, e) = two_product(self.hi, o.hi);
        Self::renorm(p, e + (self.hi * o.lo + self.lo * o.hi))
    }

    pub fn mul_f64(self, x: f64) -> Self {
        self.mul(Self::from_f64(x))
    }

    pub fn div(self, o: Self) -> Self {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul_f64(q1));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul_f64(q2));
        let q3 = r.hi / o.hi;
        Self::renorm(q1, q2).add(Self::from_f64(q3))
    }

    /// Exact difference of two doubles.
    pub fn diff(a: f64, b: f64) -> Self {
        let (s, e) = two_sum(a, -b);
        Self { hi: s, lo: e }
    }

    /// Square root by one Newton step from the `f64` root.
    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Self::ZERO;
        }
        let s = self.hi.sqrt();
        let r = self.sub(Self::from_f64(s).mul_f64(s));
        Self::from_f64(s).add(Self::from_f64(r.hi / (2.0 * s)))
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            self.neg()
        } else {
            self
        }
    }
}

/// Static 2-d/3-d/... kd-tree over a point set, used for nearest-atom queries.
#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    points: Vec<Vec<f64>>,
    // (point index, split axis) in implicit balanced-tree order
    nodes: Vec<(usize, usize)>,
}

impl KdTree {
    pub fn new(points: &[Vec<f64>]) -> Self {
        let dim = points.first().map_or(0, Vec::len);
        let mut idx: Vec<usize> = (0..points.len()).collect();
        let mut nodes = vec![(usize::MAX, 0); points.len()];
        Self::build(points, dim, &mut idx, 0, &mut nodes, 0);
        Self {
            dim,
            points: points.to_vec(),
            nodes,
        }
    }

    // Node layout: subtree for slice idx[..] stored at nodes[offset..offset+len],
    // root at the median position.
    fn build(
        points: &[Vec<f64>],
        dim: usize,
        idx: &mut [usize],
        offset: usize,
        nodes: &mut [(usize, usize)],
        depth: usize,
    ) {
        if idx.is_empty() {
            return;
        }
        let axis = if dim == 0 { 0 } else { depth % dim };
        let mid = idx.len() / 2;
        idx.select_nth_unstable_by(mid, |&a, &b| {
            points[a][axis]
                .partial_cmp(&points[b][axis])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        nodes[offset + mid] = (idx[mid], axis);
        let (left, right) = idx.split_at_mut(mid);
        Self::build(points, dim, left, offset, nodes, depth + 1);
        Self::build(points, dim, &mut right[1..], offset + mid + 1, nodes, depth + 1);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nearest point to `q`, optionally skipping index `skip`. Returns `(index, distance)`.
    pub fn nearest(&self, q: &[f64], skip: Option<usize>) -> Option<(usize, f64)> {
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(q, skip, 0, self.nodes.len(), &mut best);
        (best.0 != usize::MAX).then(|| (best.0, best.1.sqrt()))
    }

    fn search(
        &self,
        q: &[f64],
        skip: Option<usize>,
        lo: usize,
        hi: usize,
        best: &mut (usize, f64),
    ) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let (pi, axis) = self.nodes[mid];
        let p = &self.points[pi];
        if skip != Some(pi) {
            let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 < best.1 || (d2 == best.1 && pi < best.0) {
                *best = (pi, d2);
            }
        }
        if self.dim == 0 {
            return;
        }
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(q, skip, near.0, near.1, best);
        if diff * diff <= best.1 {
            self.search(q, skip, far.0, far.1, best);
        }
    }
}

/// Euclidean distance between two coordinate slices.
#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Derives a child seed from a root seed and an index (SplitMix64 finalizer).
pub fn mix_seed(root: u64, index: u64) -> u64 {
    let mut z = root ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
