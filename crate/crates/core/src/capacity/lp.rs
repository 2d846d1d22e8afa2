//! Positive-measure capacity as a linear program over atom masses, with the
//! sup-norm constraint enforced on a separated grid by cutting planes.

use super::simplex::{LpOutcome, Simplex};
use super::{CapacityEstimate, Diagnostics, Method, SolverStatus};
use crate::error::{invalid, Error, Result};
use crate::geometry::Point;
use crate::kernels::{norm, KernelParams};
use crate::numeric::KdTree;
use crate::sets::{constraint_grid_with_dist, Limits, PointCloud};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LPConfig {
    /// Grid spacing; `None` uses the smallest atom spacing of the support.
    pub h: Option<f64>,
    /// `delta = delta_factor * h`.
    pub delta_factor: f64,
    /// Bounding-box padding in units of `h`.
    pub pad_factor: f64,
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub max_rounds: usize,
    pub max_pivots: u64,
    /// Cuts added per round; 0 picks `max(64, atoms)`.
    pub cuts_per_round: usize,
}

impl Default for LPConfig {
    fn default() -> Self {
        Self {
            h: None,
            delta_factor: 0.5,
            pad_factor: 2.0,
            feas_tol: 1e-7,
            opt_tol: 1e-7,
            max_rounds: 200,
            max_pivots: 2_000_000,
            cuts_per_round: 0,
        }
    }
}

impl LPConfig {
    fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if let Some(h) = self.h {
            if !positive(h) {
                return Err(invalid(format!("grid spacing must be positive, got {h}")));
            }
        }
        if !positive(self.delta_factor) {
            return Err(invalid("separation factor must be positive"));
        }
        if !(self.pad_factor >= 0.0 && self.pad_factor.is_finite()) {
            return Err(invalid("padding factor must be nonnegative"));
        }
        if !positive(self.feas_tol) || !positive(self.opt_tol) {
            return Err(invalid("tolerances must be positive"));
        }
        Ok(())
    }
}

/// `(K^1(y - x), .., K^d(y - x))` written into `out`.
#[inline]
fn kernel_at(params: &KernelParams, y: &[f64], x: &[f64], out: &mut [f64]) {
    let mut diff = [0.0f64; 8];
    let d = y.len();
    for c in 0..d {
        diff[c] = y[c] - x[c];
    }
    let r = norm(&diff[..d]);
    let rad = params.radial(r);
    let e = params.exponent();
    for c in 0..d {
        out[c] = (diff[c] / r).powi(e) * rad;
    }
}

/// Potential components at `y` of the atoms listed in `support` (index, mass).
fn potential(params: &KernelParams, y: &[f64], atoms: &[Vec<f64>], support: &[(usize, f64)], out: &mut [f64]) {
    let d = y.len();
    let mut k = [0.0f64; 8];
    out[..d].iter_mut().for_each(|v| *v = 0.0);
    for &(j, m) in support {
        kernel_at(params, y, &atoms[j], &mut k[..d]);
        for c in 0..d {
            out[c] += m * k[c];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct RowKey {
    point: usize,
    axis: usize,
    positive: bool,
}

fn row_coeffs(params: &KernelParams, y: &[f64], atoms: &[Vec<f64>], key: RowKey) -> Vec<f64> {
    let d = y.len();
    let mut k = [0.0f64; 8];
    let sign = if key.positive { 1.0 } else { -1.0 };
    atoms
        .iter()
        .map(|x| {
            kernel_at(params, y, x, &mut k[..d]);
            sign * k[key.axis]
        })
        .collect()
}

/// `max sum m_j` over `m >= 0` with `|sum_j m_j K^i(y_k - x_j)| <= 1` at every
/// grid point `y_k` at distance `>= delta` from the support.
pub fn gamma_plus_lp(support: &PointCloud, params: &KernelParams, cfg: &LPConfig) -> Result<CapacityEstimate> {
    gamma_plus_lp_with(support, params, cfg, &Limits::from_env())
}

pub fn gamma_plus_lp_with(
    support: &PointCloud,
    params: &KernelParams,
    cfg: &LPConfig,
    limits: &Limits,
) -> Result<CapacityEstimate> {
    cfg.validate()?;
    if support.is_empty() {
        return Err(invalid("support must be nonempty"));
    }
    if support.d != params.d {
        return Err(Error::DimensionMismatch {
            expected: support.d,
            found: params.d,
        });
    }
    let n = support.len();
    let d = support.d;
    let h = match cfg.h {
        Some(h) => h,
        None if n >= 2 => support.min_spacing(),
        None => return Err(invalid("a single atom needs an explicit grid spacing")),
    };
    let delta = cfg.delta_factor * h;
    let (grid, _) = constraint_grid_with_dist(support, h, cfg.pad_factor * h, delta, limits)?;
    let mut est = solve(params, support.coords(), grid.into_iter().map(|p| p.0).collect(), cfg)?;
    if d > 2 {
        est.diagnostics.notes.push("d > 2 is experimental".into());
    }
    Ok(est)
}

/// Same LP with an explicitly supplied constraint grid (used as given,
/// apart from points coinciding with an atom).
pub fn gamma_plus_lp_on_grid(
    support: &PointCloud,
    params: &KernelParams,
    grid: &[Point],
    cfg: &LPConfig,
) -> Result<CapacityEstimate> {
    cfg.validate()?;
    if support.is_empty() {
        return Err(invalid("support must be nonempty"));
    }
    if support.d != params.d || grid.iter().any(|p| p.dim() != support.d) {
        return Err(Error::DimensionMismatch {
            expected: support.d,
            found: params.d,
        });
    }
    solve(params, support.coords(), grid.iter().map(|p| p.0.clone()).collect(), cfg)
}

fn solve(params: &KernelParams, atoms: Vec<Vec<f64>>, grid: Vec<Vec<f64>>, cfg: &LPConfig) -> Result<CapacityEstimate> {
    let n = atoms.len();
    let d = params.d;
    if d > 8 {
        return Err(invalid("the LP estimator supports d <= 8"));
    }
    let atom_tree = KdTree::new(&atoms);
    // coincident grid points are singular for the kernel
    let (grid, near): (Vec<Vec<f64>>, Vec<f64>) = grid
        .into_iter()
        .map(|p| {
            let r = atom_tree.nearest(&p, None).map_or(f64::INFINITY, |(_, r)| r);
            (p, r)
        })
        .filter(|(_, r)| *r > 0.0)
        .unzip();
    let mut diag = Diagnostics::new(SolverStatus::IterationLimit);
    diag.grid_points = grid.len() as u64;
    if grid.is_empty() {
        diag.status = SolverStatus::Degenerate;
        diag.notes.push("no constraint points survive the separation filter".into());
        return Ok(CapacityEstimate {
            value: f64::INFINITY,
            method: Method::Lp,
            diagnostics: diag,
            masses: vec![f64::INFINITY; n],
        });
    }

    let mut simplex = Simplex::new(&vec![1.0; n], cfg.opt_tol * 1e-3);
    let mut working: BTreeSet<RowKey> = BTreeSet::new();

    // seed: for each atom the nearest grid point, on its dominant axis
    let grid_tree = KdTree::new(&grid);
    let mut kv = [0.0f64; 8];
    for x in &atoms {
        let (k, _) = grid_tree.nearest(x, None).expect("grid is nonempty");
        kernel_at(params, &grid[k], x, &mut kv[..d]);
        let axis = (0..d)
            .max_by(|&a, &b| kv[a].abs().total_cmp(&kv[b].abs()).then(b.cmp(&a)))
            .unwrap();
        working.insert(RowKey {
            point: k,
            axis,
            positive: kv[axis] >= 0.0,
        });
    }
    for key in &working {
        simplex.add_row(&row_coeffs(params, &grid[key.point], &atoms, *key), 1.0);
    }

    let cuts_per_round = if cfg.cuts_per_round == 0 {
        n.max(64)
    } else {
        cfg.cuts_per_round
    };
    let rad_near: Vec<f64> = near.iter().map(|&r| params.radial(r)).collect();
    // screening: |P(y_k)| <= last_abs[k] + |m - history[last_round[k]]|_1 * r_k^-alpha
    let mut history: Vec<Vec<f64>> = vec![vec![0.0; n]];
    let mut last_round = vec![0usize; grid.len()];
    let mut last_abs = vec![0.0f64; grid.len()];

    let mut outcome = simplex.primal(cfg.max_pivots);
    let mut masses = vec![0.0; n];
    let mut max_abs = 0.0f64;
    let mut rounds = 0u64;
    loop {
        if outcome != LpOutcome::Optimal {
            diag.status = match outcome {
                LpOutcome::PivotLimit => SolverStatus::IterationLimit,
                _ => SolverStatus::NumericalFailure,
            };
            diag.notes.push(format!("simplex stopped: {outcome:?}"));
            break;
        }
        rounds += 1;
        masses = simplex.solution();
        let support_list: Vec<(usize, f64)> = masses
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0.0)
            .map(|(j, &m)| (j, m))
            .collect();
        let drift: Vec<f64> = history
            .iter()
            .map(|old| old.iter().zip(&masses).map(|(a, b)| (a - b).abs()).sum())
            .collect();
        let round_id = history.len();
        history.push(masses.clone());

        let mut violations: Vec<(f64, RowKey)> = Vec::new();
        let mut pv = [0.0f64; 8];
        max_abs = 0.0;
        for k in 0..grid.len() {
            let bound = last_abs[k] + drift[last_round[k]] * rad_near[k];
            if bound <= 1.0 {
                max_abs = max_abs.max(last_abs[k].min(bound));
                continue;
            }
            potential(params, &grid[k], &atoms, &support_list, &mut pv[..d]);
            let mut point_max = 0.0f64;
            for (axis, &v) in pv[..d].iter().enumerate() {
                point_max = point_max.max(v.abs());
                if v.abs() - 1.0 > cfg.feas_tol {
                    violations.push((
                        v.abs() - 1.0,
                        RowKey {
                            point: k,
                            axis,
                            positive: v > 0.0,
                        },
                    ));
                }
            }
            last_abs[k] = point_max;
            last_round[k] = round_id;
            max_abs = max_abs.max(point_max);
        }
        if violations.is_empty() {
            diag.status = SolverStatus::Optimal;
            break;
        }
        if rounds as usize >= cfg.max_rounds {
            diag.status = SolverStatus::IterationLimit;
            break;
        }
        violations.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut added = 0;
        for (_, key) in &violations {
            if added >= cuts_per_round {
                break;
            }
            if working.insert(*key) {
                simplex.add_row(&row_coeffs(params, &grid[key.point], &atoms, *key), 1.0);
                added += 1;
            }
        }
        if added == 0 {
            // every violated row is already enforced: rounding drift in the tableau
            diag.status = SolverStatus::NumericalFailure;
            diag.notes.push("violations persist on enforced rows".into());
            break;
        }
        outcome = simplex.reoptimize(cfg.max_pivots);
    }

    let value: f64 = masses.iter().sum();
    let dual_obj: f64 = simplex.duals().iter().sum();
    diag.iterations = rounds;
    diag.pivots = simplex.pivots;
    diag.constraints = simplex.num_rows() as u64;
    diag.max_violation = (max_abs - 1.0).max(0.0);
    diag.duality_gap = Some((dual_obj - value).abs() / value.max(1.0));
    if diag.status == SolverStatus::Optimal && diag.duality_gap.unwrap() > cfg.opt_tol {
        diag.notes.push("duality gap above tolerance".into());
        diag.status = SolverStatus::NumericalFailure;
    }
    Ok(CapacityEstimate {
        value,
        method: Method::Lp,
        diagnostics: diag,
        masses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::io::WeightConvention;
    use crate::sets::SetSpec;
    use approx::assert_relative_eq;

    fn cloud(points: Vec<Vec<f64>>) -> PointCloud {
        let n = points.len();
        PointCloud {
            d: 2,
            points: points.into_iter().map(Point).collect(),
            weights: vec![1.0 / n as f64; n],
            convention: WeightConvention::Probability,
            provenance: SetSpec::cantor4(0, 0.25),
        }
    }

    #[test]
    fn single_atom_matches_closed_form() {
        let params = KernelParams::new(0.5, 1, 2).unwrap();
        let support = cloud(vec![vec![0.3, -0.2]]);
        for h in [0.2, 0.1] {
            let cfg = LPConfig {
                h: Some(h),
                ..LPConfig::default()
            };
            let est = gamma_plus_lp(&support, &params, &cfg).unwrap();
            assert_eq!(est.status(), SolverStatus::Optimal);
            // one variable: m* = 1 / max |K^i(y_k - x)|
            let grid = crate::sets::constraint_grid(&support, h, 2.0 * h, 0.5 * h).unwrap();
            let worst = grid
                .iter()
                .flat_map(|y| {
                    let diff = Point(y.sub(&support.points[0]));
                    crate::kernels::kernel_vector(&params, &diff).unwrap()
                })
                .map(f64::abs)
                .fold(0.0, f64::max);
            assert_relative_eq!(est.value, 1.0 / worst, max_relative = 1e-9);
        }
    }

    #[test]
    fn single_atom_value_shrinks_with_delta() {
        let params = KernelParams::new(0.5, 1, 2).unwrap();
        let support = cloud(vec![vec![0.0, 0.0]]);
        let run = |h: f64| {
            let cfg = LPConfig {
                h: Some(h),
                ..LPConfig::default()
            };
            gamma_plus_lp(&support, &params, &cfg).unwrap().value
        };
        assert!(run(0.05) < run(0.1));
    }

    #[test]
    fn nested_supports_are_monotone() {
        let params = KernelParams::new(0.5, 1, 2).unwrap();
        let big = cloud(vec![
            vec![0.0, 0.0],
            vec![0.25, 0.0],
            vec![0.5, 0.1],
            vec![0.75, 0.0],
            vec![1.0, 0.2],
        ]);
        let small = cloud(big.coords()[..3].to_vec());
        let cfg = LPConfig::default();
        let grid = crate::sets::constraint_grid(&big, 0.05, 0.1, 0.025).unwrap();
        let e_big = gamma_plus_lp_on_grid(&big, &params, &grid, &cfg).unwrap();
        let e_small = gamma_plus_lp_on_grid(&small, &params, &grid, &cfg).unwrap();
        assert_eq!(e_big.status(), SolverStatus::Optimal);
        assert_eq!(e_small.status(), SolverStatus::Optimal);
        assert!(e_small.value <= e_big.value * (1.0 + 1e-9));
    }

    #[test]
    fn masses_satisfy_constraints() {
        let params = KernelParams::new(0.7, 2, 2).unwrap();
        let support = SetSpec::circle(24).generate().unwrap();
        let cfg = LPConfig::default();
        let est = gamma_plus_lp(&support, &params, &cfg).unwrap();
        assert_eq!(est.status(), SolverStatus::Optimal);
        assert!(est.value > 0.0);
        assert!(est.diagnostics.max_violation <= cfg.feas_tol);
        assert!(est.diagnostics.duality_gap.unwrap() <= cfg.opt_tol);
        let h = support.min_spacing();
        let grid = crate::sets::constraint_grid(&support, h, 2.0 * h, 0.5 * h).unwrap();
        for y in &grid {
            let mut acc = vec![0.0; 2];
            for (x, m) in support.points.iter().zip(&est.masses) {
                let k = crate::kernels::kernel_vector(&params, &Point(y.sub(x))).unwrap();
                acc[0] += m * k[0];
                acc[1] += m * k[1];
            }
            assert!(acc.iter().all(|v| v.abs() <= 1.0 + 1e-6));
        }
    }
}
