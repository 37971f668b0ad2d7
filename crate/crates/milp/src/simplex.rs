//! Dense bounded-variable primal simplex used to bound branch-and-bound nodes.
//!
//! Structural columns live in `[0, 1]`; variables fixed by branching are
//! substituted into the right-hand side before the tableau is built. Phase one
//! drives artificial columns to zero, phase two maximizes the model objective.
//! Pricing is Dantzig's rule, switching to Bland's rule after a run of
//! degenerate pivots.

use crate::error::MilpError;
use crate::model::{MilpModel, RowSense};

/// Branching state of one binary variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Fix {
    Free,
    Zero,
    One,
}

impl Fix {
    fn value(self) -> f64 {
        match self {
            Fix::One => 1.0,
            _ => 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub enum LpOutcome {
    Optimal { values: Vec<f64>, objective: f64 },
    Infeasible,
}

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const DEGENERATE_RUN: usize = 40;

struct NormalRow {
    coeffs: Vec<(usize, f64)>,
    sense: RowSense,
    rhs: f64,
}

/// Solves the LP relaxation of `model` with the given variable fixings.
pub fn solve_relaxation(model: &MilpModel, fixes: &[Fix]) -> Result<LpOutcome, MilpError> {
    let n = model.num_vars();
    assert_eq!(fixes.len(), n);
    let free: Vec<usize> = (0..n).filter(|&j| fixes[j] == Fix::Free).collect();
    let mut col_of = vec![usize::MAX; n];
    for (k, &j) in free.iter().enumerate() {
        col_of[j] = k;
    }

    let mut rows = Vec::with_capacity(model.num_constraints());
    for c in model.constraints() {
        let mut rhs = c.rhs;
        let mut coeffs = Vec::with_capacity(c.coeffs.len());
        for (v, a) in &c.coeffs {
            if fixes[v.0] == Fix::Free {
                coeffs.push((col_of[v.0], *a));
            } else {
                rhs -= a * fixes[v.0].value();
            }
        }
        let (lo, hi) = coeffs.iter().fold((0.0, 0.0), |(lo, hi), (_, a)| {
            (lo + f64::min(*a, 0.0), hi + f64::max(*a, 0.0))
        });
        let infeasible = match c.sense {
            RowSense::Le => lo > rhs + FEAS_TOL,
            RowSense::Ge => hi < rhs - FEAS_TOL,
            RowSense::Eq => lo > rhs + FEAS_TOL || hi < rhs - FEAS_TOL,
        };
        if infeasible {
            return Ok(LpOutcome::Infeasible);
        }
        if coeffs.is_empty() {
            continue;
        }
        // Rows that can never bind are dropped.
        let redundant = match c.sense {
            RowSense::Le => hi <= rhs,
            RowSense::Ge => lo >= rhs,
            RowSense::Eq => false,
        };
        if redundant {
            continue;
        }
        let (coeffs, sense, rhs) = if rhs < 0.0 {
            let flipped = match c.sense {
                RowSense::Le => RowSense::Ge,
                RowSense::Ge => RowSense::Le,
                RowSense::Eq => RowSense::Eq,
            };
            (coeffs.into_iter().map(|(k, a)| (k, -a)).collect(), flipped, -rhs)
        } else {
            (coeffs, c.sense, rhs)
        };
        rows.push(NormalRow { coeffs, sense, rhs });
    }

    let objective = model.objective_dense();
    let cost: Vec<f64> = free.iter().map(|&j| objective[j]).collect();
    let values_free = match Tableau::build(free.len(), &rows).solve(&cost)? {
        Some(v) => v,
        None => return Ok(LpOutcome::Infeasible),
    };

    let mut values: Vec<f64> = fixes.iter().map(|f| f.value()).collect();
    for (k, &j) in free.iter().enumerate() {
        values[j] = values_free[k].clamp(0.0, 1.0);
    }
    let objective = values.iter().zip(objective).map(|(x, c)| x * c).sum();
    Ok(LpOutcome::Optimal { values, objective })
}

struct Tableau {
    m: usize,
    ncols: usize,
    structural: usize,
    a: Vec<f64>,
    x_b: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    at_upper: Vec<bool>,
    upper: Vec<f64>,
    artificial: Vec<bool>,
    d: Vec<f64>,
}

impl Tableau {
    fn build(structural: usize, rows: &[NormalRow]) -> Self {
        let m = rows.len();
        let mut extra = 0;
        for r in rows {
            extra += match r.sense {
                RowSense::Le | RowSense::Eq => 1,
                RowSense::Ge => 2,
            };
        }
        let ncols = structural + extra;
        let mut a = vec![0.0; m * ncols];
        let mut upper = vec![f64::INFINITY; ncols];
        upper[..structural].fill(1.0);
        let mut artificial = vec![false; ncols];
        let mut basis = Vec::with_capacity(m);
        let mut x_b = Vec::with_capacity(m);
        let mut next = structural;
        for (i, r) in rows.iter().enumerate() {
            let row = &mut a[i * ncols..(i + 1) * ncols];
            for (k, v) in &r.coeffs {
                row[*k] += v;
            }
            match r.sense {
                RowSense::Le => {
                    row[next] = 1.0;
                    basis.push(next);
                    next += 1;
                }
                RowSense::Ge => {
                    row[next] = -1.0;
                    row[next + 1] = 1.0;
                    artificial[next + 1] = true;
                    basis.push(next + 1);
                    next += 2;
                }
                RowSense::Eq => {
                    row[next] = 1.0;
                    artificial[next] = true;
                    basis.push(next);
                    next += 1;
                }
            }
            x_b.push(r.rhs);
        }
        let mut is_basic = vec![false; ncols];
        for &b in &basis {
            is_basic[b] = true;
        }
        Self {
            m,
            ncols,
            structural,
            a,
            x_b,
            basis,
            is_basic,
            at_upper: vec![false; ncols],
            upper,
            artificial,
            d: vec![0.0; ncols],
        }
    }

    fn set_costs(&mut self, cost: &[f64]) {
        for j in 0..self.ncols {
            if self.is_basic[j] {
                self.d[j] = 0.0;
                continue;
            }
            let mut dj = cost[j];
            for i in 0..self.m {
                let cb = cost[self.basis[i]];
                if cb != 0.0 {
                    dj -= cb * self.a[i * self.ncols + j];
                }
            }
            self.d[j] = dj;
        }
    }

    /// Returns the structural values at the optimum, or `None` if infeasible.
    fn solve(mut self, objective: &[f64]) -> Result<Option<Vec<f64>>, MilpError> {
        if self.artificial.iter().any(|&x| x) {
            let phase1: Vec<f64> = self.artificial.iter().map(|&art| if art { -1.0 } else { 0.0 }).collect();
            self.set_costs(&phase1);
            self.iterate()?;
            let infeasibility: f64 = (0..self.m)
                .filter(|&i| self.artificial[self.basis[i]])
                .map(|i| self.x_b[i])
                .sum();
            if infeasibility > FEAS_TOL {
                return Ok(None);
            }
            self.evict_artificials();
        }
        let mut cost = vec![0.0; self.ncols];
        cost[..self.structural].copy_from_slice(objective);
        self.set_costs(&cost);
        self.iterate()?;

        let mut values = vec![0.0; self.structural];
        for j in 0..self.structural {
            if !self.is_basic[j] && self.at_upper[j] {
                values[j] = self.upper[j];
            }
        }
        for i in 0..self.m {
            let b = self.basis[i];
            if b < self.structural {
                values[b] = self.x_b[i];
            }
        }
        Ok(Some(values))
    }

    fn evict_artificials(&mut self) {
        for j in 0..self.ncols {
            if self.artificial[j] {
                self.upper[j] = 0.0;
            }
        }
        for r in 0..self.m {
            if !self.artificial[self.basis[r]] {
                continue;
            }
            let row = &self.a[r * self.ncols..(r + 1) * self.ncols];
            let mut best: Option<(usize, f64)> = None;
            for (j, &v) in row.iter().enumerate() {
                if self.artificial[j] || self.is_basic[j] || v.abs() <= 1e-7 {
                    continue;
                }
                if best.map_or(true, |(_, bv)| v.abs() > bv) {
                    best = Some((j, v.abs()));
                }
            }
            // A row with no eligible column is redundant; its artificial stays
            // basic, pinned at zero.
            if let Some((j, _)) = best {
                let value = if self.at_upper[j] { self.upper[j] } else { 0.0 };
                let leaving = self.basis[r];
                self.pivot(r, j);
                self.x_b[r] = value;
                self.is_basic[leaving] = false;
                self.at_upper[leaving] = false;
                self.is_basic[j] = true;
                self.at_upper[j] = false;
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let nc = self.ncols;
        let p = self.a[r * nc + j];
        for v in &mut self.a[r * nc..(r + 1) * nc] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.a[r * nc..(r + 1) * nc].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * nc + j];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * nc..(i + 1) * nc];
            for (v, pr) in row.iter_mut().zip(&pivot_row) {
                if *pr != 0.0 {
                    *v -= f * pr;
                }
            }
            row[j] = 0.0;
        }
        let dj = self.d[j];
        if dj != 0.0 {
            for (dv, pr) in self.d.iter_mut().zip(&pivot_row) {
                if *pr != 0.0 {
                    *dv -= dj * pr;
                }
            }
        }
        self.d[j] = 0.0;
        self.basis[r] = j;
    }

    fn iterate(&mut self) -> Result<(), MilpError> {
        let max_iter = 10_000 + 50 * (self.m + self.ncols);
        let mut degenerate = 0usize;
        let mut bland = false;
        for _ in 0..max_iter {
            let mut entering: Option<usize> = None;
            let mut best = 0.0;
            for j in 0..self.ncols {
                if self.is_basic[j] || self.upper[j] <= 0.0 {
                    continue;
                }
                let dj = self.d[j];
                let eligible = if self.at_upper[j] { dj < -COST_TOL } else { dj > COST_TOL };
                if !eligible {
                    continue;
                }
                if bland {
                    entering = Some(j);
                    break;
                }
                if dj.abs() > best {
                    best = dj.abs();
                    entering = Some(j);
                }
            }
            let Some(j) = entering else {
                return Ok(());
            };
            let dir = if self.at_upper[j] { -1.0 } else { 1.0 };

            let mut theta = self.upper[j];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_alpha = 0.0;
            for i in 0..self.m {
                let alpha = self.a[i * self.ncols + j];
                let rate = -dir * alpha;
                let limit = if rate < -PIVOT_TOL {
                    (self.x_b[i] / -rate).max(0.0)
                } else if rate > PIVOT_TOL {
                    let ub = self.upper[self.basis[i]];
                    if !ub.is_finite() {
                        continue;
                    }
                    ((ub - self.x_b[i]) / rate).max(0.0)
                } else {
                    continue;
                };
                let better = match leave {
                    _ if limit < theta - 1e-12 => true,
                    Some((li, _)) if limit <= theta + 1e-12 => {
                        if bland {
                            self.basis[i] < self.basis[li]
                        } else {
                            alpha.abs() > leave_alpha
                        }
                    }
                    _ => false,
                };
                if better {
                    theta = limit;
                    leave = Some((i, rate < 0.0));
                    leave_alpha = alpha.abs();
                }
            }
            if !theta.is_finite() {
                // Impossible with bounded structurals; treat as a numerical breakdown.
                return Err(MilpError::Numerical(0));
            }

            if theta > 0.0 {
                for i in 0..self.m {
                    let alpha = self.a[i * self.ncols + j];
                    if alpha != 0.0 {
                        self.x_b[i] -= dir * alpha * theta;
                        if self.x_b[i] < 0.0 && self.x_b[i] > -FEAS_TOL {
                            self.x_b[i] = 0.0;
                        }
                    }
                }
            }
            match leave {
                Some((r, to_lower)) => {
                    let start = if self.at_upper[j] { self.upper[j] } else { 0.0 };
                    let leaving = self.basis[r];
                    self.pivot(r, j);
                    self.x_b[r] = start + dir * theta;
                    self.is_basic[leaving] = false;
                    self.at_upper[leaving] = !to_lower;
                    self.is_basic[j] = true;
                    self.at_upper[j] = false;
                }
                None => {
                    self.at_upper[j] = !self.at_upper[j];
                }
            }

            if theta <= 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate = 0;
                bland = false;
            }
        }
        Err(MilpError::Numerical(max_iter))
    }
}
