//! Finite positive measures and the potentials and energies built on them.
//!
//! Every energy drops the diagonal: an atom never interacts with itself, and
//! a potential evaluated at an atom sees the measure with that atom removed.

use crate::error::{invalid, Error, Result};
use crate::geometry::Point;
use crate::kernels::{component_with_norm, norm, KernelParams};
use crate::numeric::{dist, kahan_sum, partitioned_sum, KahanSum, DEFAULT_PARTITIONS};
use crate::symmetrization::perm_total_raw;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Atoms with nonnegative masses in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    d: usize,
    atoms: Vec<Point>,
    masses: Vec<f64>,
    total_mass: f64,
}

impl DiscreteMeasure {
    pub fn new(d: usize, atoms: Vec<Point>, masses: Vec<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::Validation(format!("dimension must be >= 2, got {d}")));
        }
        if atoms.len() != masses.len() {
            return Err(Error::Validation(format!(
                "{} atoms but {} masses",
                atoms.len(),
                masses.len()
            )));
        }
        for (k, a) in atoms.iter().enumerate() {
            if a.dim() != d {
                return Err(Error::Validation(format!(
                    "atom {k} has dimension {}, expected {d}",
                    a.dim()
                )));
            }
            if a.0.iter().any(|c| !c.is_finite()) {
                return Err(Error::Validation(format!("atom {k} has a non-finite coordinate")));
            }
        }
        if let Some(k) = masses.iter().position(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::Validation(format!(
                "mass {k} is {}, masses must be finite and nonnegative",
                masses[k]
            )));
        }
        let mut order: Vec<usize> = (0..atoms.len()).collect();
        order.sort_by(|&i, &j| lex_cmp(&atoms[i].0, &atoms[j].0));
        if let Some(w) = order.windows(2).find(|w| atoms[w[0]] == atoms[w[1]]) {
            return Err(Error::Validation(format!(
                "atoms {} and {} coincide",
                w[0].min(w[1]),
                w[0].max(w[1])
            )));
        }
        let total_mass = kahan_sum(masses.iter().copied());
        Ok(Self {
            d,
            atoms,
            masses,
            total_mass,
        })
    }

    pub fn empty(d: usize) -> Self {
        Self {
            d,
            atoms: Vec::new(),
            masses: Vec::new(),
            total_mass: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Same atoms, new masses.
    pub fn with_masses(&self, masses: Vec<f64>) -> Result<Self> {
        Self::new(self.d, self.atoms.clone(), masses)
    }

    /// Applies `f` to every atom (must keep atoms distinct).
    pub fn map_atoms(&self, f: impl Fn(&Point) -> Point) -> Result<Self> {
        Self::new(self.d, self.atoms.iter().map(f).collect(), self.masses.clone())
    }

    /// Restriction to the closed ball `B(center, r)`.
    pub fn restrict_to_ball(&self, center: &Point, r: f64) -> Self {
        let (atoms, masses) = self
            .atoms
            .iter()
            .zip(&self.masses)
            .filter(|(a, _)| a.dist(center) <= r)
            .map(|(a, m)| (a.clone(), *m))
            .unzip();
        Self::new(self.d, atoms, masses).expect("restriction of a valid measure")
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        if x.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: x.dim(),
            });
        }
        Ok(())
    }

}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

/// `(s, p)` of the nonlinear potential theory, with `q = p/(p-1)` and `gamma = 2 - sp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WolffParams {
    pub s: f64,
    pub p: f64,
}

impl WolffParams {
    pub fn new(s: f64, p: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(invalid(format!("s must be positive, got {s}")));
        }
        if !(p > 1.0 && p.is_finite()) {
            return Err(invalid(format!("p must exceed 1, got {p}")));
        }
        if s * p > 2.0 {
            return Err(invalid(format!("s*p must not exceed 2, got {}", s * p)));
        }
        Ok(Self { s, p })
    }

    /// The parameters tied to homogeneity `alpha`: `s = 2(2-alpha)/3`, `p = 3/2`.
    pub fn for_alpha(alpha: f64) -> Result<Self> {
        Self::new(2.0 * (2.0 - alpha) / 3.0, 1.5)
    }

    pub fn q(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn gamma(&self) -> f64 {
        2.0 - self.s * self.p
    }

    /// Exponent `gamma (q - 1)` of the radial integral.
    pub fn beta(&self) -> f64 {
        self.gamma() * (self.q() - 1.0)
    }

    fn require_positive_gamma(&self) -> Result<()> {
        if self.gamma() > 0.0 {
            Ok(())
        } else {
            Err(invalid(format!(
                "Wolff potential needs 2 - s*p > 0, got {}",
                self.gamma()
            )))
        }
    }
}

/// Masses of a measure sorted by distance from a base point, ties merged.
/// `radii[k]` is strictly increasing and `cumulative[k] = mu(B(x, radii[k]))`.
#[derive(Debug, Clone, Default)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl RadialProfile {
    pub fn from_pairs(mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.retain(|&(_, m)| m > 0.0);
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        let mut radii: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut cumulative = Vec::with_capacity(pairs.len());
        let mut acc = KahanSum::new();
        for (r, m) in pairs {
            acc.add(m);
            if radii.last() == Some(&r) {
                *cumulative.last_mut().unwrap() = acc.value();
            } else {
                radii.push(r);
                cumulative.push(acc.value());
            }
        }
        Self { radii, cumulative }
    }

    /// Profile of `mu` seen from `x`, optionally dropping atoms located at `x`.
    pub fn of(mu: &DiscreteMeasure, x: &[f64], exclude_self: bool) -> Self {
        let pairs = mu
            .atoms
            .iter()
            .zip(&mu.masses)
            .map(|(a, &m)| (dist(&a.0, x), m))
            .filter(|&(r, _)| !(exclude_self && r == 0.0))
            .collect();
        Self::from_pairs(pairs)
    }

    /// `sup_r mu(B(x,r)) / r^alpha`; infinite if positive mass sits at distance 0.
    pub fn sup_growth(&self, alpha: f64) -> f64 {
        self.sup_growth_at(alpha).0
    }

    /// As [`sup_growth`](Self::sup_growth), also returning the index of the maximizing radius.
    pub fn sup_growth_at(&self, alpha: f64) -> (f64, Option<usize>) {
        let mut best = (0.0, None);
        for (k, (&r, &m)) in self.radii.iter().zip(&self.cumulative).enumerate() {
            let v = if r == 0.0 { f64::INFINITY } else { m / r.powf(alpha) };
            if v > best.0 {
                best = (v, Some(k));
            }
        }
        best
    }

    /// `int_0^inf (mu(B(x,r)) / r^gamma)^{q-1} dr/r` in closed form:
    /// `(1/beta) sum_k (M_k^{q-1} - M_{k-1}^{q-1}) r_k^{-beta}` with `beta = gamma(q-1)`.
    pub fn wolff_integral(&self, wp: &WolffParams) -> f64 {
        let q1 = wp.q() - 1.0;
        let beta = wp.beta();
        let mut acc = KahanSum::new();
        let mut prev = 0.0;
        for (&r, &m) in self.radii.iter().zip(&self.cumulative) {
            let cur = m.powf(q1);
            if r == 0.0 {
                return f64::INFINITY;
            }
            acc.add((cur - prev) * r.powf(-beta));
            prev = cur;
        }
        acc.value() / beta
    }
}

/// `mu(B(x, r))` for the closed ball.
pub fn ball_mass(mu: &DiscreteMeasure, x: &Point, r: f64) -> Result<f64> {
    mu.check_point(x)?;
    if !(r >= 0.0) {
        return Err(invalid(format!("radius must be nonnegative, got {r}")));
    }
    Ok(kahan_sum(
        mu.atoms
            .iter()
            .zip(&mu.masses)
            .filter(|(a, _)| a.dist(x) <= r)
            .map(|(_, m)| *m),
    ))
}

/// `M_alpha mu(x) = sup_{r>0} mu(B(x,r)) / r^alpha`.
pub fn maximal_growth(mu: &DiscreteMeasure, x: &Point, alpha: f64, exclude_self: bool) -> Result<f64> {
    mu.check_point(x)?;
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid(format!("alpha must lie in (0, 2), got {alpha}")));
    }
    Ok(RadialProfile::of(mu, &x.0, exclude_self).sup_growth(alpha))
}

/// Wolff potential `W^mu_{s,p}(x)`.
pub fn wolff_potential(
    mu: &DiscreteMeasure,
    x: &Point,
    wp: &WolffParams,
    exclude_self: bool,
) -> Result<f64> {
    mu.check_point(x)?;
    wp.require_positive_gamma()?;
    Ok(RadialProfile::of(mu, &x.0, exclude_self).wolff_integral(wp))
}

/// Wolff energy `sum_j m_j W^{mu - atom_j}(x_j)`.
pub fn wolff_energy(mu: &DiscreteMeasure, wp: &WolffParams) -> Result<f64> {
    wolff_energy_partitioned(mu, wp, DEFAULT_PARTITIONS)
}

pub fn wolff_energy_partitioned(
    mu: &DiscreteMeasure,
    wp: &WolffParams,
    partitions: usize,
) -> Result<f64> {
    wp.require_positive_gamma()?;
    Ok(partitioned_sum(mu.len(), partitions, |j, acc| {
        let m = mu.masses[j];
        if m > 0.0 {
            acc.add(m * RadialProfile::of(mu, &mu.atoms[j].0, true).wolff_integral(wp));
        }
    }))
}

fn check_params(mu: &DiscreteMeasure, params: &KernelParams) -> Result<()> {
    if params.d != mu.d {
        return Err(Error::DimensionMismatch {
            expected: mu.d,
            found: params.d,
        });
    }
    Ok(())
}

/// `p^2(mu)(x) = sum over ordered pairs (y, z) of distinct atoms, both
/// different from x, of p(x,y,z) m_y m_z`. Direct O(N^2) double loop.
pub fn perm_potential_sq(mu: &DiscreteMeasure, x: &Point, params: &KernelParams) -> Result<f64> {
    mu.check_point(x)?;
    check_params(mu, params)?;
    Ok(perm_potential_sq_direct(mu, &x.0, params))
}

fn perm_potential_sq_direct(mu: &DiscreteMeasure, x: &[f64], params: &KernelParams) -> f64 {
    let others: Vec<usize> = (0..mu.len())
        .filter(|&k| mu.atoms[k].0 != x && mu.masses[k] > 0.0)
        .collect();
    let mut acc = KahanSum::new();
    for (a, &j) in others.iter().enumerate() {
        for &k in &others[a + 1..] {
            let p = perm_total_raw(params, x, &mu.atoms[j].0, &mu.atoms[k].0);
            acc.add(2.0 * p * mu.masses[j] * mu.masses[k]);
        }
    }
    acc.value()
}

/// Energy of `U = M_alpha mu + p^2(mu)`: `sum_j m_j (M_alpha^{mu - atom_j}(x_j) + p^2(mu)(x_j))`.
pub fn sym_energy(mu: &DiscreteMeasure, params: &KernelParams) -> Result<f64> {
    sym_energy_partitioned(mu, params, DEFAULT_PARTITIONS)
}

pub fn sym_energy_partitioned(
    mu: &DiscreteMeasure,
    params: &KernelParams,
    partitions: usize,
) -> Result<f64> {
    check_params(mu, params)?;
    let (growth, perm) = sym_energy_parts(mu, params, partitions);
    Ok(growth + perm)
}

/// `(growth part, permutation part)` of [`sym_energy`].
pub fn sym_energy_parts(mu: &DiscreteMeasure, params: &KernelParams, partitions: usize) -> (f64, f64) {
    let growth = partitioned_sum(mu.len(), partitions, |j, acc| {
        let m = mu.masses[j];
        if m > 0.0 {
            acc.add(m * RadialProfile::of(mu, &mu.atoms[j].0, true).sup_growth(params.alpha));
        }
    });
    let perm = partitioned_triple_sum(mu, params, partitions);
    (growth, perm)
}

/// `sum over ordered triples of distinct atoms of p(x,y,z) m_x m_y m_z`,
/// evaluated once per unordered triple (times 6) in lexicographic order.
fn partitioned_triple_sum(mu: &DiscreteMeasure, params: &KernelParams, partitions: usize) -> f64 {
    let n = mu.len();
    let atoms = &mu.atoms;
    let m = &mu.masses;
    partitioned_sum(n, partitions, |i, acc| {
        if m[i] == 0.0 {
            return;
        }
        for j in (i + 1)..n {
            if m[j] == 0.0 {
                continue;
            }
            let mij = m[i] * m[j];
            for k in (j + 1)..n {
                if m[k] == 0.0 {
                    continue;
                }
                let p = perm_total_raw(params, &atoms[i].0, &atoms[j].0, &atoms[k].0);
                acc.add(6.0 * p * mij * m[k]);
            }
        }
    })
}

/// `p_{1,n}(mu) = sum over ordered distinct atom triples of p_{1,n}(x,y,z) m_x m_y m_z`.
pub fn triple_perm_energy(mu: &DiscreteMeasure, n: u32) -> Result<f64> {
    triple_perm_energy_partitioned(mu, n, DEFAULT_PARTITIONS)
}

pub fn triple_perm_energy_partitioned(mu: &DiscreteMeasure, n: u32, partitions: usize) -> Result<f64> {
    let params = KernelParams::new(1.0, n, mu.d)?;
    Ok(partitioned_triple_sum(mu, &params, partitions))
}

/// Dense table of `K^i(x_j - x_k)` for a fixed atom set, used for the
/// O(N^2) evaluation of permutation energies.
///
/// With `S_i(x) = sum_{y != x} m_y K^i(x - y)` and
/// `Q_i(x) = sum_{y != x} m_y^2 K^i(x - y)^2`, the ordered triple sum equals
/// `3 sum_x m_x sum_i (S_i(x)^2 - Q_i(x))`, because each of the three products
/// in `p^i` contributes the same total once summed over all orderings.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    n: usize,
    d: usize,
    // values[(i * n + j) * n + k] = K^i(x_j - x_k), zero on the diagonal
    values: Vec<f64>,
}

impl KernelMatrix {
    pub fn new(atoms: &[Point], params: &KernelParams) -> Self {
        let n = atoms.len();
        let d = params.d;
        let mut values = vec![0.0; d * n * n];
        let mut diff = vec![0.0; d];
        for j in 0..n {
            for k in (j + 1)..n {
                for (c, slot) in diff.iter_mut().enumerate() {
                    *slot = atoms[j].0[c] - atoms[k].0[c];
                }
                let r = norm(&diff);
                for i in 0..d {
                    let v = component_with_norm(params, i, &diff, r);
                    values[(i * n + j) * n + k] = v;
                    values[(i * n + k) * n + j] = -v;
                }
            }
        }
        Self { n, d, values }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    fn row(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.n + j) * self.n;
        &self.values[start..start + self.n]
    }

    /// `(S, Q)` laid out as `[i * n + j]`.
    pub fn sums(&self, masses: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let mut s = vec![0.0; self.d * n];
        let mut q = vec![0.0; self.d * n];
        for i in 0..self.d {
            for j in 0..n {
                let row = self.row(i, j);
                let mut acc_s = KahanSum::new();
                let mut acc_q = KahanSum::new();
                for (k, &kv) in row.iter().enumerate() {
                    let t = masses[k] * kv;
                    acc_s.add(t);
                    acc_q.add(t * t);
                }
                s[i * n + j] = acc_s.value();
                q[i * n + j] = acc_q.value();
            }
        }
        (s, q)
    }

    /// `p^2(mu)(x_j)` for every atom `j`.
    pub fn perm_potential_sq_all(&self, masses: &[f64]) -> Vec<f64> {
        let (s, q) = self.sums(masses);
        self.perm_potential_sq_from_sums(masses, &s, &q)
    }

    pub(crate) fn perm_potential_sq_from_sums(&self, masses: &[f64], s: &[f64], q: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|j| {
                let mut acc = KahanSum::new();
                for i in 0..self.d {
                    let sj = s[i * n + j];
                    acc.add(sj * sj - q[i * n + j]);
                    // K(x_k - x_j) = -K(x_j - x_k)
                    let row = self.row(i, j);
                    for k in 0..n {
                        if k == j {
                            continue;
                        }
                        let kkj = -row[k];
                        acc.add(2.0 * masses[k] * kkj * (s[i * n + k] - masses[j] * kkj));
                    }
                }
                acc.value()
            })
            .collect()
    }

    /// Ordered triple sum `sum m_x m_y m_z p(x,y,z)` through the `S^2 - Q` identity.
    pub fn triple_energy(&self, masses: &[f64]) -> f64 {
        let (s, q) = self.sums(masses);
        Self::triple_energy_from_sums(self.n, self.d, masses, &s, &q)
    }

    pub(crate) fn triple_energy_from_sums(n: usize, d: usize, masses: &[f64], s: &[f64], q: &[f64]) -> f64 {
        let mut acc = KahanSum::new();
        for j in 0..n {
            for i in 0..d {
                let sj = s[i * n + j];
                acc.add(3.0 * masses[j] * (sj * sj - q[i * n + j]));
            }
        }
        acc.value()
    }
}

/// [`sym_energy`] evaluated with the O(N^2) identity; agrees with the direct
/// route up to rounding.
pub fn sym_energy_fast(mu: &DiscreteMeasure, params: &KernelParams) -> Result<f64> {
    check_params(mu, params)?;
    let growth = partitioned_sum(mu.len(), DEFAULT_PARTITIONS, |j, acc| {
        let m = mu.masses[j];
        if m > 0.0 {
            acc.add(m * RadialProfile::of(mu, &mu.atoms[j].0, true).sup_growth(params.alpha));
        }
    });
    let km = KernelMatrix::new(&mu.atoms, params);
    Ok(growth + km.triple_energy(&mu.masses))
}

/// Per-ball ratios `p_{1,n}(mu restricted to B) / diam(B)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearGrowthReport {
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

pub fn linear_growth_check(
    mu: &DiscreteMeasure,
    n: u32,
    balls: &[(Point, f64)],
) -> Result<LinearGrowthReport> {
    let mut ratios = Vec::with_capacity(balls.len());
    for (center, r) in balls {
        mu.check_point(center)?;
        if !(*r > 0.0) {
            return Err(invalid(format!("ball radius must be positive, got {r}")));
        }
        let local = mu.restrict_to_ball(center, *r);
        ratios.push(triple_perm_energy(&local, n)? / (2.0 * r));
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(LinearGrowthReport { ratios, max_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pt(x: f64, y: f64) -> Point {
        Point(vec![x, y])
    }

    fn two_atoms() -> DiscreteMeasure {
        DiscreteMeasure::new(2, vec![pt(0., 0.), pt(1., 0.)], vec![0.5, 0.5]).unwrap()
    }

    fn unit_point_mass() -> DiscreteMeasure {
        DiscreteMeasure::new(2, vec![pt(0., 0.)], vec![1.0]).unwrap()
    }

    #[test]
    fn validation() {
        assert!(DiscreteMeasure::new(2, vec![pt(0., 0.)], vec![-1.0]).is_err());
        assert!(DiscreteMeasure::new(2, vec![pt(0., 0.), pt(0., 0.)], vec![1.0, 1.0]).is_err());
        assert!(DiscreteMeasure::new(2, vec![pt(0., 0.)], vec![]).is_err());
        assert!(DiscreteMeasure::new(3, vec![pt(0., 0.)], vec![1.0]).is_err());
        assert_eq!(two_atoms().total_mass(), 1.0);
    }

    #[test]
    fn ball_mass_examples() {
        let mu = unit_point_mass();
        assert_eq!(ball_mass(&mu, &pt(0., 0.), 0.0).unwrap(), 1.0);
        assert_eq!(ball_mass(&mu, &pt(2., 0.), 1.0).unwrap(), 0.0);
        assert_eq!(ball_mass(&two_atoms(), &pt(0., 0.), 1.0).unwrap(), 1.0);
    }

    #[test]
    fn maximal_growth_examples() {
        let mu = DiscreteMeasure::new(2, vec![pt(0., 0.)], vec![3.0]).unwrap();
        let v = maximal_growth(&mu, &pt(2., 0.), 0.5, false).unwrap();
        assert_relative_eq!(v, 3.0 / 2f64.sqrt(), max_relative = 1e-15);
        assert!(maximal_growth(&mu, &pt(0., 0.), 0.5, false).unwrap().is_infinite());
        assert_eq!(maximal_growth(&mu, &pt(0., 0.), 0.5, true).unwrap(), 0.0);
    }

    #[test]
    fn maximal_growth_square_matches_scan() {
        let mu = DiscreteMeasure::new(
            2,
            vec![pt(0., 0.), pt(1., 0.), pt(0., 1.), pt(1., 1.)],
            vec![1.0; 4],
        )
        .unwrap();
        let x = pt(0.5, 0.5);
        // scan oracle over the candidate radii
        let scan = mu
            .atoms()
            .iter()
            .map(|a| {
                let r = a.dist(&x);
                ball_mass(&mu, &x, r).unwrap() / r
            })
            .fold(0.0, f64::max);
        let v = maximal_growth(&mu, &x, 1.0, false).unwrap();
        assert_relative_eq!(v, scan, max_relative = 1e-15);
        assert_relative_eq!(v, 4.0 * 2f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn wolff_potential_examples() {
        let wp = WolffParams::new(1.0, 1.5).unwrap();
        assert_eq!(wp.gamma(), 0.5);
        let mu = unit_point_mass();
        assert_relative_eq!(
            wolff_potential(&mu, &pt(1., 0.), &wp, false).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            wolff_potential(&mu, &pt(2., 0.), &wp, false).unwrap(),
            0.5,
            max_relative = 1e-15
        );
        assert_eq!(
            wolff_potential(&DiscreteMeasure::empty(2), &pt(1., 0.), &wp, false).unwrap(),
            0.0
        );
        assert!(wolff_potential(&mu, &pt(0., 0.), &wp, false).unwrap().is_infinite());
        let flat = WolffParams::new(1.0, 2.0).unwrap();
        assert!(wolff_potential(&mu, &pt(1., 0.), &flat, false).is_err());
        assert!(WolffParams::new(1.5, 2.0).is_err());
    }

    #[test]
    fn wolff_energy_examples() {
        let wp = WolffParams::new(1.0, 1.5).unwrap();
        assert_eq!(wolff_energy(&unit_point_mass(), &wp).unwrap(), 0.0);
        assert_relative_eq!(wolff_energy(&two_atoms(), &wp).unwrap(), 0.25, max_relative = 1e-15);
        let big = two_atoms().map_atoms(|p| p.scaled(3.0)).unwrap();
        // E(lambda mu) = lambda^{-gamma(q-1)} E(mu), gamma(q-1) = 1
        assert_relative_eq!(wolff_energy(&big, &wp).unwrap(), 0.25 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn perm_potential_examples() {
        let params = KernelParams::new(1.0, 2, 2).unwrap();
        assert_eq!(
            perm_potential_sq(&two_atoms(), &pt(0., 0.), &params).unwrap(),
            0.0
        );
        let line = DiscreteMeasure::new(2, vec![pt(0., 0.), pt(1., 1.), pt(2., 2.)], vec![1.0; 3])
            .unwrap();
        assert_eq!(perm_potential_sq(&line, &pt(3., 3.), &params).unwrap(), 0.0);
    }

    #[test]
    fn perm_potential_matches_naive_loop() {
        let params = KernelParams::new(0.5, 1, 2).unwrap();
        let mu = DiscreteMeasure::new(2, vec![pt(0., 0.), pt(1., 0.2), pt(0.3, 1.)], vec![1.0; 3])
            .unwrap();
        let x = pt(-0.4, 0.7);
        let mut naive = 0.0;
        for (j, y) in mu.atoms().iter().enumerate() {
            for (k, z) in mu.atoms().iter().enumerate() {
                if j != k {
                    let t = crate::geometry::Triple::new(x.clone(), y.clone(), z.clone()).unwrap();
                    naive += crate::symmetrization::perm_total(&params, &t).unwrap();
                }
            }
        }
        let v = perm_potential_sq(&mu, &x, &params).unwrap();
        assert_relative_eq!(v, naive, max_relative = 1e-14);
    }

    #[test]
    fn small_measures_vanish() {
        let params = KernelParams::new(0.5, 1, 2).unwrap();
        assert_eq!(sym_energy(&unit_point_mass(), &params).unwrap(), 0.0);
        assert_eq!(triple_perm_energy(&two_atoms(), 1).unwrap(), 0.0);
    }

    #[test]
    fn collinear_triple_energy_is_exactly_zero() {
        let atoms: Vec<Point> = (0..10).map(|k| pt(k as f64 * 0.1, k as f64 * 0.2)).collect();
        let mu = DiscreteMeasure::new(2, atoms, vec![0.1; 10]).unwrap();
        assert_eq!(triple_perm_energy(&mu, 1).unwrap(), 0.0);
        assert_eq!(triple_perm_energy(&mu, 3).unwrap(), 0.0);
    }

    #[test]
    fn linear_growth_examples() {
        let atoms: Vec<Point> = (0..8).map(|k| pt(k as f64 / 7.0, 0.0)).collect();
        let seg = DiscreteMeasure::new(2, atoms, vec![0.125; 8]).unwrap();
        let rep = linear_growth_check(&seg, 1, &[(pt(0.5, 0.), 0.3), (pt(0.2, 0.), 1.0)]).unwrap();
        assert_eq!(rep.ratios, vec![0.0, 0.0]);

        let circle: Vec<Point> = (0..4)
            .map(|k| {
                let t = k as f64 * std::f64::consts::FRAC_PI_2;
                pt(t.cos(), t.sin())
            })
            .collect();
        let mu = DiscreteMeasure::new(2, circle, vec![1.0; 4]).unwrap();
        let rep = linear_growth_check(&mu, 1, &[(pt(0., 0.), 5.0)]).unwrap();
        assert_relative_eq!(rep.max_ratio, triple_perm_energy(&mu, 1).unwrap() / 10.0);
        assert!(linear_growth_check(&mu, 1, &[(pt(0., 0.), 0.0)]).is_err());
    }
}
