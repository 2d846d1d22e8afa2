//! Dense condensed-tableau simplex for `max c.x  s.t.  A x <= b, x >= 0`
//! with rows appended on the fly (cutting planes).
//!
//! Tableau convention: `basic_r = rhs_r - sum_c t[r][c] * nonbasic_c` and
//! `z = obj[last] - sum_c obj[c] * nonbasic_c`. Variables `0..n` are the
//! structural ones; `n + r` is the slack of row `r`.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal,
    Unbounded,
    Infeasible,
    PivotLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Row(usize),
    Col(usize),
}

const PIVOT_TOL: f64 = 1e-11;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_RUN: usize = 64;

#[derive(Debug, Clone)]
pub struct Simplex {
    n: usize,
    // t[r] has n + 1 entries, the last one being the right-hand side
    t: Vec<Vec<f64>>,
    obj: Vec<f64>,
    col_var: Vec<usize>,
    row_var: Vec<usize>,
    slot: Vec<Slot>,
    pub pivots: u64,
    pub tol: f64,
}

impl Simplex {
    /// Empty tableau for `max c.x`, `x >= 0`, no rows yet.
    pub fn new(c: &[f64], tol: f64) -> Self {
        let n = c.len();
        let mut obj: Vec<f64> = c.iter().map(|v| -v).collect();
        obj.push(0.0);
        Self {
            n,
            t: Vec::new(),
            obj,
            col_var: (0..n).collect(),
            row_var: Vec::new(),
            slot: (0..n).map(Slot::Col).collect(),
            pivots: 0,
            tol,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_rows(&self) -> usize {
        self.t.len()
    }

    pub fn objective(&self) -> f64 {
        self.obj[self.n]
    }

    /// Appends `a.x <= b`, re-expressed in the current nonbasic variables.
    pub fn add_row(&mut self, a: &[f64], b: f64) {
        assert_eq!(a.len(), self.n);
        let mut row = vec![0.0; self.n + 1];
        row[self.n] = b;
        for (j, &aj) in a.iter().enumerate() {
            if aj == 0.0 {
                continue;
            }
            match self.slot[j] {
                Slot::Col(c) => row[c] += aj,
                Slot::Row(r) => {
                    for (dst, src) in row.iter_mut().zip(&self.t[r]) {
                        *dst -= aj * src;
                    }
                }
            }
        }
        let r = self.t.len();
        let label = self.n + r;
        self.t.push(row);
        self.row_var.push(label);
        self.slot.push(Slot::Row(r));
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let n = self.n;
        let p = self.t[r][s];
        let inv = 1.0 / p;
        {
            let row = &mut self.t[r];
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[s] = inv;
        }
        let prow = std::mem::take(&mut self.t[r]);
        let update = |row: &mut Vec<f64>| {
            let f = row[s];
            if f == 0.0 {
                return;
            }
            for (dst, src) in row.iter_mut().zip(&prow) {
                *dst -= f * src;
            }
            row[s] = -f * inv;
        };
        for (i, row) in self.t.iter_mut().enumerate() {
            if i != r {
                update(row);
            }
        }
        update(&mut self.obj);
        self.t[r] = prow;
        debug_assert_eq!(self.t[r].len(), n + 1);

        let leaving = self.row_var[r];
        let entering = self.col_var[s];
        self.row_var[r] = entering;
        self.col_var[s] = leaving;
        self.slot[entering] = Slot::Row(r);
        self.slot[leaving] = Slot::Col(s);
        self.pivots += 1;
    }

    /// Primal simplex from a primal-feasible tableau.
    pub fn primal(&mut self, max_pivots: u64) -> LpOutcome {
        let n = self.n;
        let mut degenerate = 0usize;
        loop {
            if self.pivots >= max_pivots {
                return LpOutcome::PivotLimit;
            }
            let bland = degenerate >= DEGENERATE_RUN;
            let mut enter: Option<usize> = None;
            for c in 0..n {
                let v = self.obj[c];
                if v < -self.tol {
                    enter = match enter {
                        None => Some(c),
                        Some(e) if bland => {
                            if self.col_var[c] < self.col_var[e] {
                                Some(c)
                            } else {
                                Some(e)
                            }
                        }
                        Some(e) => {
                            if v < self.obj[e] {
                                Some(c)
                            } else {
                                Some(e)
                            }
                        }
                    };
                }
            }
            let Some(s) = enter else {
                return LpOutcome::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.t.iter().enumerate() {
                let a = row[s];
                if a > PIVOT_TOL {
                    let ratio = row[n].max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr || (ratio == lr && self.row_var[i] < self.row_var[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else {
                return LpOutcome::Unbounded;
            };
            if ratio == 0.0 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, s);
        }
    }

    /// Dual simplex from a dual-feasible tableau (all reduced costs `>= -tol`).
    pub fn dual(&mut self, max_pivots: u64) -> LpOutcome {
        let n = self.n;
        loop {
            if self.pivots >= max_pivots {
                return LpOutcome::PivotLimit;
            }
            let mut leave: Option<usize> = None;
            for (i, row) in self.t.iter().enumerate() {
                if row[n] < -self.tol && leave.map_or(true, |l| row[n] < self.t[l][n]) {
                    leave = Some(i);
                }
            }
            let Some(r) = leave else {
                return LpOutcome::Optimal;
            };
            let mut enter: Option<(usize, f64)> = None;
            for c in 0..n {
                let a = self.t[r][c];
                if a < -PIVOT_TOL {
                    let ratio = self.obj[c].max(0.0) / -a;
                    enter = match enter {
                        None => Some((c, ratio)),
                        Some((ec, er)) => {
                            if ratio < er || (ratio == er && self.col_var[c] < self.col_var[ec]) {
                                Some((c, ratio))
                            } else {
                                Some((ec, er))
                            }
                        }
                    };
                }
            }
            let Some((s, _)) = enter else {
                return LpOutcome::Infeasible;
            };
            self.pivot(r, s);
        }
    }

    /// Restores optimality after rows were appended: dual phase, then a
    /// primal clean-up, repeated while either side is violated.
    pub fn reoptimize(&mut self, max_pivots: u64) -> LpOutcome {
        for _ in 0..16 {
            match self.dual(max_pivots) {
                LpOutcome::Optimal => {}
                other => return other,
            }
            let dual_ok = self.obj[..self.n].iter().all(|&v| v >= -self.tol);
            if dual_ok {
                return LpOutcome::Optimal;
            }
            match self.primal(max_pivots) {
                LpOutcome::Optimal => {}
                other => return other,
            }
            let primal_ok = self.t.iter().all(|row| row[self.n] >= -self.tol);
            if primal_ok {
                return LpOutcome::Optimal;
            }
        }
        LpOutcome::PivotLimit
    }

    /// Current values of the structural variables.
    pub fn solution(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| match self.slot[j] {
                Slot::Row(r) => self.t[r][self.n].max(0.0),
                Slot::Col(_) => 0.0,
            })
            .collect()
    }

    /// Dual values of the rows, in insertion order.
    pub fn duals(&self) -> Vec<f64> {
        (0..self.t.len())
            .map(|r| match self.slot[self.n + r] {
                Slot::Col(c) => self.obj[c].max(0.0),
                Slot::Row(_) => 0.0,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), z = 36
        let mut s = Simplex::new(&[3.0, 5.0], 1e-12);
        s.add_row(&[1.0, 0.0], 4.0);
        s.add_row(&[0.0, 2.0], 12.0);
        s.add_row(&[3.0, 2.0], 18.0);
        assert_eq!(s.primal(100), LpOutcome::Optimal);
        assert_relative_eq!(s.objective(), 36.0, max_relative = 1e-12);
        let x = s.solution();
        assert_relative_eq!(x[0], 2.0, max_relative = 1e-12);
        assert_relative_eq!(x[1], 6.0, max_relative = 1e-12);
        let y = s.duals();
        let dual_obj = 4.0 * y[0] + 12.0 * y[1] + 18.0 * y[2];
        assert_relative_eq!(dual_obj, 36.0, max_relative = 1e-12);
    }

    #[test]
    fn cut_then_reoptimize() {
        let mut s = Simplex::new(&[1.0, 1.0], 1e-12);
        s.add_row(&[1.0, 0.0], 1.0);
        s.add_row(&[0.0, 1.0], 1.0);
        assert_eq!(s.primal(100), LpOutcome::Optimal);
        assert_relative_eq!(s.objective(), 2.0);
        s.add_row(&[1.0, 2.0], 2.0);
        assert_eq!(s.reoptimize(100), LpOutcome::Optimal);
        assert_relative_eq!(s.objective(), 1.5, max_relative = 1e-12);
        assert_eq!(s.solution(), vec![1.0, 0.5]);
    }

    #[test]
    fn unbounded_detected() {
        let mut s = Simplex::new(&[1.0, 1.0], 1e-12);
        s.add_row(&[1.0, -1.0], 1.0);
        assert_eq!(s.primal(100), LpOutcome::Unbounded);
    }
}
