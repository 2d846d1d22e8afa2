//! Three-point symmetrizations of the kernels and a Monte-Carlo harness that
//! records empirical constants for their two-sided bounds.

use crate::error::{Error, Result};
use crate::geometry::{
    coordinate_spread, largest_side, line_hyperplane_angle, menger_curvature, Point, Triple,
};
use crate::kernels::{component_with_norm, norm, KernelParams};
use crate::numeric::{exactly_parallel, mix_seed, partition_ranges};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Shared subexpressions of a triple in the variables `a = y - x`,
/// `b = z - y`, `s = a + b`.
pub(crate) struct DiffFrame<'a> {
    a: &'a [f64],
    b: &'a [f64],
    s: &'a [f64],
    ra: f64,
    rb: f64,
    rs: f64,
    collinear: bool,
}

impl<'a> DiffFrame<'a> {
    pub(crate) fn new(a: &'a [f64], b: &'a [f64], s: &'a [f64], alpha: f64) -> Self {
        let collinear = alpha == 1.0 && exactly_parallel(a, b);
        Self {
            a,
            b,
            s,
            ra: norm(a),
            rb: norm(b),
            rs: norm(s),
            collinear,
        }
    }

    /// `(K(s)K(a), K(s)K(b), K(a)K(b))` for one axis; `p^i` is `t0 + t1 - t2`.
    #[inline]
    pub(crate) fn terms(&self, params: &KernelParams, axis: usize) -> (f64, f64, f64) {
        let ka = component_with_norm(params, axis, self.a, self.ra);
        let kb = component_with_norm(params, axis, self.b, self.rb);
        let ks = component_with_norm(params, axis, self.s, self.rs);
        (ks * ka, ks * kb, ka * kb)
    }

    #[inline]
    pub(crate) fn component(&self, params: &KernelParams, axis: usize) -> f64 {
        // p^i_{1,n} vanishes on collinear triples; skip the rounding residue
        if self.collinear {
            return 0.0;
        }
        let (t0, t1, t2) = self.terms(params, axis);
        t0 + t1 - t2
    }

    #[inline]
    pub(crate) fn total(&self, params: &KernelParams) -> f64 {
        if self.collinear {
            return 0.0;
        }
        (0..params.d).map(|i| self.component(params, i)).sum()
    }
}

/// Permutation quantity for coordinate slices, no validation.
#[inline]
pub(crate) fn perm_total_raw(params: &KernelParams, x: &[f64], y: &[f64], z: &[f64]) -> f64 {
    let d = x.len();
    let mut buf = [0.0f64; 24];
    if d > 8 {
        return perm_total_alloc(params, x, y, z);
    }
    let (a, rest) = buf.split_at_mut(8);
    let (b, s) = rest.split_at_mut(8);
    for k in 0..d {
        a[k] = y[k] - x[k];
        b[k] = z[k] - y[k];
        s[k] = z[k] - x[k];
    }
    DiffFrame::new(&a[..d], &b[..d], &s[..d], params.alpha).total(params)
}

fn perm_total_alloc(params: &KernelParams, x: &[f64], y: &[f64], z: &[f64]) -> f64 {
    let a: Vec<f64> = y.iter().zip(x).map(|(p, q)| p - q).collect();
    let b: Vec<f64> = z.iter().zip(y).map(|(p, q)| p - q).collect();
    let s: Vec<f64> = z.iter().zip(x).map(|(p, q)| p - q).collect();
    DiffFrame::new(&a, &b, &s, params.alpha).total(params)
}

fn check_triple(params: &KernelParams, t: &Triple) -> Result<()> {
    if t.dim() != params.d {
        return Err(Error::DimensionMismatch {
            expected: params.d,
            found: t.dim(),
        });
    }
    t.ensure_distinct()
}

struct OwnedFrame {
    a: Vec<f64>,
    b: Vec<f64>,
    s: Vec<f64>,
}

impl OwnedFrame {
    fn of(t: &Triple) -> Self {
        Self {
            a: t.y.sub(&t.x),
            b: t.z.sub(&t.y),
            s: t.z.sub(&t.x),
        }
    }

    fn frame(&self, alpha: f64) -> DiffFrame<'_> {
        DiffFrame::new(&self.a, &self.b, &self.s, alpha)
    }
}

/// `p^i(x,y,z) = K^i(x-y)K^i(x-z) + K^i(y-x)K^i(y-z) + K^i(z-x)K^i(z-y)`.
pub fn perm_component(params: &KernelParams, axis: usize, t: &Triple) -> Result<f64> {
    check_triple(params, t)?;
    if axis >= params.d {
        return Err(Error::AxisOutOfRange {
            axis,
            dim: params.d,
        });
    }
    let owned = OwnedFrame::of(t);
    Ok(owned.frame(params.alpha).component(params, axis))
}

/// `p(x,y,z) = sum_i p^i(x,y,z)`.
pub fn perm_total(params: &KernelParams, t: &Triple) -> Result<f64> {
    check_triple(params, t)?;
    let owned = OwnedFrame::of(t);
    Ok(owned.frame(params.alpha).total(params))
}

/// Ratios attached to one permutation component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermReport {
    pub value: f64,
    /// `p^i L^{2alpha+2n} / M_i^{2n}`; `+inf` when `M_i = 0`.
    pub lower_ratio: f64,
    /// `p^i L^{2alpha}`
    pub upper_ratio: f64,
    /// `sum_{i != axis} p^i / c^2`, only for `alpha = 1` and non-collinear triples.
    pub curvature_ratio: Option<f64>,
}

/// Fills a [`PermReport`] for component `axis`; `axis` doubles as the excluded
/// hyperplane index of the curvature ratio.
pub fn bound_report(params: &KernelParams, t: &Triple, axis: usize) -> Result<PermReport> {
    let value = perm_component(params, axis, t)?;
    let big_l = largest_side(t)?;
    let spread = coordinate_spread(t, axis)?;
    let two_n = 2 * params.n as i32;
    let lower_ratio = if spread == 0.0 {
        f64::INFINITY
    } else {
        value * big_l.powf(2.0 * params.alpha) * (big_l / spread).powi(two_n)
    };
    let upper_ratio = value * big_l.powf(2.0 * params.alpha);
    let curvature_ratio = if params.alpha == 1.0 {
        let c = menger_curvature(t)?;
        if c > 0.0 {
            let mut acc = 0.0;
            for i in (0..params.d).filter(|&i| i != axis) {
                acc += perm_component(params, i, t)?;
            }
            Some(acc / (c * c))
        } else {
            None
        }
    } else {
        None
    };
    Ok(PermReport {
        value,
        lower_ratio,
        upper_ratio,
        curvature_ratio,
    })
}

/// Sum of the three angles between `{x_axis = 0}` and the lines through pairs of the triple.
pub fn angle_sum_to_hyperplane(t: &Triple, axis: usize) -> Result<f64> {
    Ok(line_hyperplane_angle(&t.x, &t.y, axis)?
        + line_hyperplane_angle(&t.x, &t.z, axis)?
        + line_hyperplane_angle(&t.y, &t.z, axis)?)
}

// ---------------------------------------------------------------------------
// Monte-Carlo harness

/// Minimum pairwise distance accepted by the generic sampler.
pub const MIN_SEPARATION: f64 = 1e-3;
/// Largest accepted `L / min side`.
pub const MAX_ASPECT: f64 = 1e3;

fn unit_ball_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if p.iter().map(|c| c * c).sum::<f64>() <= 1.0 {
            return p;
        }
    }
}

/// Uniform triple in the unit ball, rejecting near-coincident and needle
/// triples. Deterministic in `(seed, index)`.
pub fn sample_triple(seed: u64, index: u64, d: usize) -> Triple {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, index));
    loop {
        let t = Triple {
            x: Point(unit_ball_point(&mut rng, d)),
            y: Point(unit_ball_point(&mut rng, d)),
            z: Point(unit_ball_point(&mut rng, d)),
        };
        let (s1, s2, s3) = t.sides();
        let lo = s1.min(s2).min(s3);
        let hi = s1.max(s2).max(s3);
        if lo >= MIN_SEPARATION && hi / lo <= MAX_ASPECT {
            return t;
        }
    }
}

/// Degenerate regimes targeted by the stratified sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stratum {
    /// Exactly collinear: points on a line through the ball.
    Collinear,
    /// Collinear up to a transverse perturbation of relative size `1e-6`.
    NearCollinear,
    /// All three points share coordinate `axis` exactly.
    AxisDegenerate { axis: usize },
}

/// Triple from a degenerate stratum. Collinear triples are built as
/// `x + t v` with dyadic `t`, so collinearity holds exactly in floating point.
pub fn sample_stratified(seed: u64, index: u64, d: usize, stratum: Stratum) -> Triple {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed ^ 0x5eed_57a7, index));
    match stratum {
        Stratum::Collinear | Stratum::NearCollinear => {
            // 2^-20 grid coordinates: base + t*dir below is computed without rounding
            let dyadic = |c: f64| (c * 1_048_576.0).round() / 1_048_576.0;
            let base: Vec<f64> = unit_ball_point(&mut rng, d)
                .iter()
                .map(|c| dyadic(c * 0.5))
                .collect();
            let dir: Vec<f64> = unit_ball_point(&mut rng, d)
                .iter()
                .map(|c| dyadic(c * 0.25))
                .collect();
            // distinct dyadic multiples keep the exact-collinearity structure
            let mut ts = [0.0f64; 3];
            loop {
                for t in ts.iter_mut() {
                    *t = (rng.gen_range(-64i32..=64) as f64) / 32.0;
                }
                if ts[0] != ts[1] && ts[1] != ts[2] && ts[0] != ts[2] {
                    break;
                }
            }
            let pts: Vec<Vec<f64>> = ts
                .iter()
                .map(|t| base.iter().zip(&dir).map(|(b, v)| b + t * v).collect())
                .collect();
            let mut t = Triple {
                x: Point(pts[0].clone()),
                y: Point(pts[1].clone()),
                z: Point(pts[2].clone()),
            };
            if stratum == Stratum::NearCollinear {
                let eps = 1e-6 * largest_side(&t).unwrap_or(1.0);
                let kick = unit_ball_point(&mut rng, d);
                t.y = Point(t.y.0.iter().zip(&kick).map(|(c, k)| c + eps * k).collect());
            }
            t
        }
        Stratum::AxisDegenerate { axis } => loop {
            let mut t = Triple {
                x: Point(unit_ball_point(&mut rng, d)),
                y: Point(unit_ball_point(&mut rng, d)),
                z: Point(unit_ball_point(&mut rng, d)),
            };
            let c = t.x.0[axis];
            t.y.0[axis] = c;
            t.z.0[axis] = c;
            if t.ensure_distinct().is_ok() {
                break t;
            }
        },
    }
}

/// Harness configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub params: KernelParams,
    pub samples: u64,
    pub seed: u64,
    /// First sample index; lets callers split one stream into disjoint halves.
    pub offset: u64,
    pub theta0: f64,
    pub partitions: usize,
}

/// Aggregated empirical constants over a batch of random triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermEnvelope {
    pub samples: u64,
    /// min over triples and axes of the finite lower ratios
    pub min_lower_ratio: f64,
    pub max_upper_ratio: f64,
    /// `min p L^{2alpha}` (empirical `A`)
    pub a_emp: f64,
    /// `max p L^{2alpha}` (empirical `B`)
    pub b_emp: f64,
    /// components below `-1e-12` times their largest term magnitude
    pub sign_violations: u64,
    /// negative components (any magnitude), recorded for `alpha < 1`
    pub negative_components: u64,
    pub components: u64,
    /// per hyperplane axis `j`: min of `sum_{i != j} p^i / c^2` over triples whose
    /// three line-to-hyperplane angles sum to at least `theta0` (`alpha = 1` only)
    pub curvature_floor: Vec<Option<f64>>,
    pub curvature_samples: Vec<u64>,
}

impl PermEnvelope {
    fn empty(d: usize) -> Self {
        Self {
            samples: 0,
            min_lower_ratio: f64::INFINITY,
            max_upper_ratio: f64::NEG_INFINITY,
            a_emp: f64::INFINITY,
            b_emp: f64::NEG_INFINITY,
            sign_violations: 0,
            negative_components: 0,
            components: 0,
            curvature_floor: vec![None; d],
            curvature_samples: vec![0; d],
        }
    }

    fn merge(&mut self, o: &PermEnvelope) {
        self.samples += o.samples;
        self.min_lower_ratio = self.min_lower_ratio.min(o.min_lower_ratio);
        self.max_upper_ratio = self.max_upper_ratio.max(o.max_upper_ratio);
        self.a_emp = self.a_emp.min(o.a_emp);
        self.b_emp = self.b_emp.max(o.b_emp);
        self.sign_violations += o.sign_violations;
        self.negative_components += o.negative_components;
        self.components += o.components;
        for j in 0..self.curvature_floor.len() {
            self.curvature_floor[j] = match (self.curvature_floor[j], o.curvature_floor[j]) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
            self.curvature_samples[j] += o.curvature_samples[j];
        }
    }

    fn record(&mut self, params: &KernelParams, t: &Triple, theta0: f64) {
        let d = params.d;
        let owned = OwnedFrame::of(t);
        let frame = owned.frame(params.alpha);
        let big_l = frame.ra.max(frame.rb).max(frame.rs);
        let scale = big_l.powf(2.0 * params.alpha);
        let two_n = 2 * params.n as i32;
        let mut comps = [0.0f64; 8];
        let mut total = 0.0;
        for i in 0..d {
            let (t0, t1, t2) = frame.terms(params, i);
            let v = frame.component(params, i);
            let mag = t0.abs().max(t1.abs()).max(t2.abs());
            if v < -1e-12 * mag {
                self.sign_violations += 1;
            }
            if v < 0.0 {
                self.negative_components += 1;
            }
            self.components += 1;
            let upper = v * scale;
            self.max_upper_ratio = self.max_upper_ratio.max(upper);
            let spread = coordinate_spread(t, i).expect("axis in range");
            if spread > 0.0 {
                self.min_lower_ratio = self
                    .min_lower_ratio
                    .min(upper * (big_l / spread).powi(two_n));
            }
            if i < comps.len() {
                comps[i] = v;
            }
            total += v;
        }
        self.a_emp = self.a_emp.min(total * scale);
        self.b_emp = self.b_emp.max(total * scale);
        if params.alpha == 1.0 && d <= comps.len() {
            let c = menger_curvature(t).expect("distinct triple");
            if c > 0.0 {
                for j in 0..d {
                    let ok = angle_sum_to_hyperplane(t, j).expect("distinct triple") >= theta0;
                    if ok {
                        let ratio = (total - comps[j]) / (c * c);
                        self.curvature_floor[j] =
                            Some(self.curvature_floor[j].map_or(ratio, |f| f.min(ratio)));
                        self.curvature_samples[j] += 1;
                    }
                }
            }
        }
        self.samples += 1;
    }
}

/// Runs the generic sampler over `samples` triples starting at `offset`.
pub fn run_harness(cfg: &HarnessConfig) -> Result<PermEnvelope> {
    let d = cfg.params.d;
    if d > 8 {
        return Err(Error::InvalidParameter("harness supports d <= 8".into()));
    }
    if cfg.samples == 0 {
        return Err(Error::InvalidParameter("samples must be positive".into()));
    }
    let parts = partition_ranges(cfg.samples as usize, cfg.partitions);
    let partials: Vec<PermEnvelope> = parts
        .into_par_iter()
        .map(|range| {
            let mut env = PermEnvelope::empty(d);
            for k in range {
                let t = sample_triple(cfg.seed, cfg.offset + k as u64, d);
                env.record(&cfg.params, &t, cfg.theta0);
            }
            env
        })
        .collect();
    let mut env = PermEnvelope::empty(d);
    for p in &partials {
        env.merge(p);
    }
    Ok(env)
}

/// Largest `|p^i|` after scale normalization (`L = 1`) over a batch of
/// degenerate-stratum triples, for every axis.
pub fn stratified_max_abs(
    params: &KernelParams,
    stratum: Stratum,
    samples: u64,
    seed: u64,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..samples {
        let t = sample_stratified(seed, k, params.d, stratum);
        let big_l = largest_side(&t)?;
        let scale = big_l.powf(2.0 * params.alpha);
        let axes: Vec<usize> = match stratum {
            Stratum::AxisDegenerate { axis } => vec![axis],
            _ => (0..params.d).collect(),
        };
        for i in axes {
            worst = worst.max((perm_component(params, i, &t)? * scale).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(alpha: f64, n: u32, d: usize) -> KernelParams {
        KernelParams::new(alpha, n, d).unwrap()
    }

    // Direct three-term evaluation of the definition, independent of DiffFrame.
    fn naive_component(params: &KernelParams, axis: usize, t: &Triple) -> f64 {
        let k = |v: Vec<f64>| {
            crate::kernels::kernel_component(params, axis, &Point(v)).unwrap()
        };
        let (x, y, z) = (&t.x, &t.y, &t.z);
        k(x.sub(y)) * k(x.sub(z)) + k(y.sub(x)) * k(y.sub(z)) + k(z.sub(x)) * k(z.sub(y))
    }

    #[test]
    fn axis_aligned_example() {
        let t = Triple::from_coords(&[0., 0.], &[0., 1.], &[1., 1.]);
        let v = perm_component(&params(1.0, 1, 2), 0, &t).unwrap();
        assert_relative_eq!(v, 0.5, max_relative = 1e-15);
        // closed form b_i^{2e} / (|b|^{e+alpha} |a+b|^{e+alpha}) with a_i = 0
        for (alpha, n) in [(0.5, 1), (0.3, 2), (1.0, 3)] {
            let e = 2 * n as i32 - 1;
            let expected = 1.0 / (2f64.sqrt()).powf(e as f64 + alpha);
            let v = perm_component(&params(alpha, n, 2), 0, &t).unwrap();
            assert_relative_eq!(v, expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn vanishing_cases_alpha_one() {
        for n in 1..=3 {
            let p = params(1.0, n, 2);
            let t = Triple::from_coords(&[0., 0.], &[1., 1.], &[2., 2.]);
            assert_eq!(perm_component(&p, 0, &t).unwrap(), 0.0);
            assert_eq!(perm_total(&p, &t).unwrap(), 0.0);
            let flat = Triple::from_coords(&[0.3, 0.1], &[0.3, 0.7], &[0.3, -0.4]);
            assert_eq!(perm_component(&p, 0, &flat).unwrap(), 0.0);
        }
    }

    #[test]
    fn matches_naive_definition() {
        for k in 0..200 {
            for (alpha, n, d) in [(0.3, 1, 2), (0.7, 2, 3), (1.0, 3, 4)] {
                let p = params(alpha, n, d);
                let t = sample_triple(11, k, d);
                for i in 0..d {
                    let fast = perm_component(&p, i, &t).unwrap();
                    let slow = naive_component(&p, i, &t);
                    let mag = slow.abs().max(1e-300);
                    assert!((fast - slow).abs() <= 1e-12 * mag.max(1.0), "{fast} {slow}");
                }
            }
        }
    }

    #[test]
    fn total_positive_example() {
        let t = Triple::from_coords(&[0., 0.], &[1., 0.], &[0., 1.]);
        let p = params(1.0, 1, 2);
        let total = perm_total(&p, &t).unwrap();
        let by_hand = naive_component(&p, 0, &t) + naive_component(&p, 1, &t);
        assert!(total > 0.0);
        assert_relative_eq!(total, by_hand, max_relative = 1e-14);
    }

    #[test]
    fn bound_report_examples() {
        let t = Triple::from_coords(&[0., 0.], &[0., 1.], &[1., 1.]);
        let r = bound_report(&params(0.5, 1, 2), &t, 0).unwrap();
        // p = 2^{-3/4}; L = sqrt 2, M = 1: lower = p * 2^{3/2} = 2^{3/4}
        assert_relative_eq!(r.lower_ratio, 2f64.powf(0.75), max_relative = 1e-14);
        assert_relative_eq!(r.upper_ratio, 2f64.powf(-0.25), max_relative = 1e-14);
        assert_eq!(r.curvature_ratio, None);

        let line = Triple::from_coords(&[0., 0.], &[1., 1.], &[2., 2.]);
        let r = bound_report(&params(1.0, 2, 2), &line, 1).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.curvature_ratio, None);

        let flat = Triple::from_coords(&[0., 0.], &[1., 0.], &[2., 0.5]);
        let r = bound_report(&params(0.5, 1, 2), &Triple::from_coords(&[0., 0.], &[1., 0.], &[2., 0.]), 1)
            .unwrap();
        assert!(r.lower_ratio.is_infinite());
        assert!(bound_report(&params(1.0, 1, 2), &flat, 1).unwrap().curvature_ratio.unwrap() > 0.0);
    }

    #[test]
    fn degenerate_triple_rejected() {
        let t = Triple::from_coords(&[0., 0.], &[0., 0.], &[1., 1.]);
        assert!(matches!(
            perm_component(&params(0.5, 1, 2), 0, &t),
            Err(Error::DegenerateTriple)
        ));
    }

    #[test]
    fn sampler_respects_rejection_rules() {
        for k in 0..500 {
            let t = sample_triple(5, k, 3);
            let (a, b, c) = t.sides();
            let lo = a.min(b).min(c);
            assert!(lo >= MIN_SEPARATION);
            assert!(a.max(b).max(c) / lo <= MAX_ASPECT);
            assert_eq!(t, sample_triple(5, k, 3));
        }
    }

    #[test]
    fn stratified_collinear_is_exact() {
        for k in 0..200 {
            let t = sample_stratified(1, k, 3, Stratum::Collinear);
            assert!(t.is_exactly_collinear(), "{t:?}");
            assert!(t.ensure_distinct().is_ok());
        }
    }

    #[test]
    fn harness_partition_invariance() {
        let cfg = HarnessConfig {
            params: params(1.0, 2, 3),
            samples: 2_000,
            seed: 9,
            offset: 0,
            theta0: 0.3,
            partitions: 4,
        };
        let a = run_harness(&cfg).unwrap();
        let b = run_harness(&HarnessConfig { partitions: 7, ..cfg.clone() }).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sign_violations, 0);
        assert_eq!(a.samples, 2_000);
        assert!(a.curvature_floor.iter().all(|f| f.unwrap() > 0.0));
    }
}
