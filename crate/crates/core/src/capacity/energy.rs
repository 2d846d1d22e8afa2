//! Energy-side capacity estimates: maximize `1 / E(mu)^{p-1}` (Wolff) or
//! `1 / E(mu)` (symmetrized energy) over probability masses on the support.
//!
//! Both energies here carry a self term: atom `j` sees its own mass at radius
//! `rho_j`, half the distance to its nearest neighbour. Without it the
//! minimizer over the simplex collapses onto a single atom, whose energy is 0.

use super::{CapacityEstimate, Diagnostics, Method, SolverStatus};
use crate::error::{invalid, Error, Result};
use crate::kernels::KernelParams;
use crate::measures::{KernelMatrix, WolffParams};
use crate::numeric::{dist, mix_seed, KdTree};
use crate::geometry::Point;
use crate::sets::PointCloud;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Atom count above which the dense neighbour tables are refused.
const MAX_ENERGY_ATOMS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub steps: usize,
    /// random starts in addition to the uniform one
    pub random_starts: usize,
    pub seed: u64,
    pub rel_tol: f64,
    pub eta0: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            random_starts: 4,
            seed: 0,
            rel_tol: 1e-6,
            eta0: 1.0,
        }
    }
}

/// Half the nearest-neighbour distance of each point.
pub fn regularization_radii(points: &[Vec<f64>]) -> Vec<f64> {
    let tree = KdTree::new(points);
    points
        .iter()
        .enumerate()
        .map(|(k, p)| tree.nearest(p, Some(k)).map_or(f64::INFINITY, |(_, r)| r / 2.0))
        .collect()
}

/// Per atom: itself at `rho_j`, then every other atom by increasing distance.
struct Neighbors {
    n: usize,
    order: Vec<u32>,
    radius: Vec<f64>,
}

impl Neighbors {
    fn new(points: &[Vec<f64>]) -> Self {
        let n = points.len();
        let rho = regularization_radii(points);
        let mut order = Vec::with_capacity(n * n);
        let mut radius = Vec::with_capacity(n * n);
        let mut row: Vec<(f64, u32)> = Vec::with_capacity(n);
        for j in 0..n {
            row.clear();
            row.extend(
                (0..n)
                    .filter(|&k| k != j)
                    .map(|k| (dist(&points[j], &points[k]), k as u32)),
            );
            row.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            order.push(j as u32);
            radius.push(rho[j]);
            for &(r, k) in &row {
                order.push(k);
                radius.push(r);
            }
        }
        Self { n, order, radius }
    }

    #[inline]
    fn row(&self, j: usize) -> (&[u32], &[f64]) {
        let s = j * self.n;
        (&self.order[s..s + self.n], &self.radius[s..s + self.n])
    }
}

#[inline]
fn pow_fast(x: f64, e: f64) -> f64 {
    if e == 1.0 {
        x
    } else if e == 2.0 {
        x * x
    } else {
        x.powf(e)
    }
}

fn check_support(points: &[Vec<f64>], min: usize) -> Result<()> {
    if points.len() < min {
        return Err(invalid(format!(
            "support needs at least {min} atoms, got {}",
            points.len()
        )));
    }
    if points.len() > MAX_ENERGY_ATOMS {
        return Err(Error::ResourceLimit {
            what: "energy optimizer",
            requested: points.len() as u128,
            limit: MAX_ENERGY_ATOMS as u128,
        });
    }
    Ok(())
}

/// An energy on the simplex with a (sub)gradient.
pub trait Objective {
    fn len(&self) -> usize;
    /// Energy at `m`; fills `grad` with `dE/dm`.
    fn value_grad(&self, m: &[f64], grad: &mut [f64]) -> f64;

    fn energy(&self, m: &[f64]) -> f64 {
        let mut g = vec![0.0; self.len()];
        self.value_grad(m, &mut g)
    }
}

/// Regularized Wolff energy `sum_j m_j W_j`.
pub struct WolffObjective {
    nb: Neighbors,
    rpow: Vec<f64>,
    q1: f64,
    beta: f64,
}

impl WolffObjective {
    pub fn new(points: &[Vec<f64>], wp: &WolffParams) -> Result<Self> {
        if !(wp.gamma() > 0.0) {
            return Err(invalid(format!(
                "Wolff energy needs 2 - s*p > 0, got {}",
                wp.gamma()
            )));
        }
        check_support(points, 2)?;
        let nb = Neighbors::new(points);
        let beta = wp.beta();
        let rpow = nb.radius.iter().map(|r| r.powf(-beta)).collect();
        Ok(Self {
            nb,
            rpow,
            q1: wp.q() - 1.0,
            beta,
        })
    }
}

impl Objective for WolffObjective {
    fn len(&self) -> usize {
        self.nb.n
    }

    fn value_grad(&self, m: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.nb.n;
        let mut cum = vec![0.0; n];
        let mut w = vec![0.0; n];
        grad.iter_mut().for_each(|g| *g = 0.0);
        for j in 0..n {
            let (order, _) = self.nb.row(j);
            let rp = &self.rpow[j * n..(j + 1) * n];
            let mut acc = 0.0;
            let mut prev = 0.0;
            let mut total = 0.0;
            for t in 0..n {
                acc += m[order[t] as usize];
                cum[t] = acc;
                let cur = pow_fast(acc, self.q1);
                total += (cur - prev) * rp[t];
                prev = cur;
            }
            w[j] = total / self.beta;
            let mj = m[j];
            if mj > 0.0 {
                let scale = mj * self.q1 / self.beta;
                let mut suffix = 0.0;
                for t in (0..n).rev() {
                    let next = if t + 1 < n { rp[t + 1] } else { 0.0 };
                    suffix += pow_fast(cum[t], self.q1 - 1.0) * (rp[t] - next);
                    grad[order[t] as usize] += scale * suffix;
                }
            }
        }
        let mut e = 0.0;
        for j in 0..n {
            e += m[j] * w[j];
            grad[j] += w[j];
        }
        e
    }
}

/// Regularized symmetrized energy `sum_j m_j (M_alpha mu(x_j) + p^2(mu)(x_j))`.
pub struct SymObjective {
    nb: Neighbors,
    rpow: Vec<f64>,
    km: KernelMatrix,
}

impl SymObjective {
    pub fn new(points: &[Vec<f64>], params: &KernelParams) -> Result<Self> {
        check_support(points, 3)?;
        if points.iter().any(|p| p.len() != params.d) {
            return Err(Error::DimensionMismatch {
                expected: params.d,
                found: points[0].len(),
            });
        }
        let nb = Neighbors::new(points);
        let rpow = nb.radius.iter().map(|&r| params.radial(r)).collect();
        let atoms: Vec<Point> = points.iter().cloned().map(Point).collect();
        let km = KernelMatrix::new(&atoms, params);
        Ok(Self { nb, rpow, km })
    }

    /// `(growth part, permutation part)` at `m`.
    pub fn parts(&self, m: &[f64]) -> (f64, f64) {
        let mut g = vec![0.0; self.nb.n];
        let growth = self.growth(m, &mut g);
        (growth, self.km.triple_energy(m))
    }

    fn growth(&self, m: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.nb.n;
        let mut e = 0.0;
        for j in 0..n {
            let (order, radius) = self.nb.row(j);
            let rp = &self.rpow[j * n..(j + 1) * n];
            let mut acc = 0.0;
            let mut best = 0.0;
            let mut best_t = 0;
            for t in 0..n {
                acc += m[order[t] as usize];
                let v = acc * rp[t];
                if v > best {
                    best = v;
                    best_t = t;
                }
            }
            grad[j] += best;
            e += m[j] * best;
            if m[j] > 0.0 && best > 0.0 {
                let r_star = radius[best_t];
                let add = m[j] * rp[best_t];
                for t in 0..n {
                    if radius[t] > r_star {
                        break;
                    }
                    grad[order[t] as usize] += add;
                }
            }
        }
        e
    }
}

impl Objective for SymObjective {
    fn len(&self) -> usize {
        self.nb.n
    }

    fn value_grad(&self, m: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let growth = self.growth(m, grad);
        let n = self.nb.n;
        let (s, q) = self.km.sums(m);
        let p2 = self.km.perm_potential_sq_from_sums(m, &s, &q);
        for (g, p) in grad.iter_mut().zip(&p2) {
            *g += 3.0 * p;
        }
        growth + KernelMatrix::triple_energy_from_sums(n, self.km.dim(), m, &s, &q)
    }
}

struct RunResult {
    masses: Vec<f64>,
    energy: f64,
    accepted: u64,
    converged: bool,
}

fn normalize(m: &mut [f64]) {
    let total: f64 = m.iter().sum();
    m.iter_mut().for_each(|v| *v /= total);
}

/// Multiplicative-weights descent from `start`; never accepts a worse point.
fn descend(obj: &dyn Objective, start: Vec<f64>, cfg: &OptimizerConfig) -> RunResult {
    let n = obj.len();
    let mut m = start;
    normalize(&mut m);
    let mut grad = vec![0.0; n];
    let mut energy = obj.value_grad(&m, &mut grad);
    let mut trial = vec![0.0; n];
    let mut trial_grad = vec![0.0; n];
    let mut eta = cfg.eta0;
    let mut accepted = 0;
    let mut converged = false;
    for _ in 0..cfg.steps {
        let avg: f64 = m.iter().zip(&grad).map(|(a, b)| a * b).sum();
        if !(avg > 0.0 && avg.is_finite()) {
            converged = true;
            break;
        }
        for j in 0..n {
            trial[j] = m[j] * (-eta * grad[j] / avg).max(-50.0).exp();
        }
        normalize(&mut trial);
        let e = obj.value_grad(&trial, &mut trial_grad);
        if e <= energy {
            let rel = (energy - e) / energy;
            std::mem::swap(&mut m, &mut trial);
            std::mem::swap(&mut grad, &mut trial_grad);
            energy = e;
            accepted += 1;
            eta = (eta * 1.5).min(cfg.eta0 * 64.0);
            if rel < cfg.rel_tol {
                converged = true;
                break;
            }
        } else {
            eta *= 0.5;
            if eta < 1e-12 {
                converged = true;
                break;
            }
        }
    }
    RunResult {
        masses: m,
        energy,
        accepted,
        converged,
    }
}

/// Uniform start plus `cfg.random_starts` seeded random ones; best energy wins
/// (first start on ties).
fn multistart(obj: &dyn Objective, cfg: &OptimizerConfig) -> (RunResult, Vec<f64>, u64) {
    let n = obj.len();
    let mut starts = vec![vec![1.0; n]];
    for s in 0..cfg.random_starts {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, s as u64));
        starts.push((0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect());
    }
    let mut best: Option<RunResult> = None;
    let mut energies = Vec::new();
    let mut total_steps = 0;
    for start in starts {
        let run = descend(obj, start, cfg);
        energies.push(run.energy);
        total_steps += run.accepted;
        if best.as_ref().map_or(true, |b| run.energy < b.energy) {
            best = Some(run);
        }
    }
    (best.expect("at least one start"), energies, total_steps)
}

fn estimate(
    obj: &dyn Objective,
    cfg: &OptimizerConfig,
    method: Method,
    to_value: impl Fn(f64) -> f64,
) -> CapacityEstimate {
    let (best, energies, steps) = multistart(obj, cfg);
    let mut diag = Diagnostics::new(if best.converged {
        SolverStatus::Converged
    } else {
        SolverStatus::IterationLimit
    });
    diag.iterations = steps;
    diag.energy = Some(best.energy);
    diag.start_values = energies.iter().map(|&e| to_value(e)).collect();
    let value = if best.energy > 0.0 && best.energy.is_finite() {
        to_value(best.energy)
    } else {
        diag.status = SolverStatus::Degenerate;
        if best.energy == 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    };
    diag.notes.push("self term at half the nearest-neighbour distance".into());
    CapacityEstimate {
        value,
        method,
        diagnostics: diag,
        masses: best.masses,
    }
}

/// `sup 1 / E_{s,p}(mu)^{p-1}` over probability masses on the support.
pub fn riesz_capacity_wolff(support: &PointCloud, wp: &WolffParams, opt_steps: usize) -> Result<CapacityEstimate> {
    riesz_capacity_wolff_with(
        support,
        wp,
        &OptimizerConfig {
            steps: opt_steps,
            ..OptimizerConfig::default()
        },
    )
}

pub fn riesz_capacity_wolff_with(
    support: &PointCloud,
    wp: &WolffParams,
    cfg: &OptimizerConfig,
) -> Result<CapacityEstimate> {
    let obj = WolffObjective::new(&support.coords(), wp)?;
    let p1 = wp.p - 1.0;
    Ok(estimate(&obj, cfg, Method::WolffEnergy, |e| 1.0 / e.powf(p1)))
}

/// `sup 1 / E_{alpha,n}(mu)` over probability masses on the support.
pub fn gamma_plus_energy(support: &PointCloud, params: &KernelParams, opt_steps: usize) -> Result<CapacityEstimate> {
    gamma_plus_energy_with(
        support,
        params,
        &OptimizerConfig {
            steps: opt_steps,
            ..OptimizerConfig::default()
        },
    )
}

pub fn gamma_plus_energy_with(
    support: &PointCloud,
    params: &KernelParams,
    cfg: &OptimizerConfig,
) -> Result<CapacityEstimate> {
    if support.d != params.d {
        return Err(Error::DimensionMismatch {
            expected: support.d,
            found: params.d,
        });
    }
    let obj = SymObjective::new(&support.coords(), params)?;
    Ok(estimate(&obj, cfg, Method::SymEnergy, |e| 1.0 / e))
}
