//! LP relaxation back-ends.
//!
//! Two independent engines sit behind [`LpBackend`]: a sparse revised
//! simplex from `microlp` (used by branch-and-bound, with warm starts), and
//! a small dense bounded-variable tableau simplex using Bland's rule, kept
//! as an independent route for cross-checking.

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use thiserror::Error;

use super::milp::{Milp, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LpOutcome {
    fn without(status: LpStatus) -> Self {
        LpOutcome {
            status,
            x: Vec::new(),
            objective: f64::NAN,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("column {0} has no finite lower bound")]
    UnboundedBelow(usize),
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("LP engine failure: {0}")]
    Engine(String),
}

pub trait LpBackend {
    fn name(&self) -> &'static str;
    /// Solve the relaxation with column bounds `lo`/`hi` replacing the model's.
    fn solve(&self, model: &Milp, lo: &[f64], hi: &[f64]) -> Result<LpOutcome, LpError>;
}

/// Sparse revised simplex from the `microlp` crate.
pub struct MicroLp;

/// Builds a microlp problem for the relaxation.
pub(crate) fn to_microlp(
    model: &Milp,
    lo: &[f64],
    hi: &[f64],
) -> (Problem, Vec<microlp::Variable>) {
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = model
        .columns
        .iter()
        .enumerate()
        .map(|(j, c)| p.add_var(c.cost, (lo[j], hi[j])))
        .collect();
    for r in &model.rows {
        let mut e = LinearExpr::empty();
        for &(j, a) in &r.coefs {
            e.add(vars[j], a);
        }
        let op = match r.sense {
            Sense::Le => ComparisonOp::Le,
            Sense::Ge => ComparisonOp::Ge,
            Sense::Eq => ComparisonOp::Eq,
        };
        p.add_constraint(e, op, r.rhs);
    }
    (p, vars)
}

impl LpBackend for MicroLp {
    fn name(&self) -> &'static str {
        "microlp"
    }

    fn solve(&self, model: &Milp, lo: &[f64], hi: &[f64]) -> Result<LpOutcome, LpError> {
        if lo.iter().zip(hi).any(|(l, h)| l > h) {
            return Ok(LpOutcome::without(LpStatus::Infeasible));
        }
        let (p, vars) = to_microlp(model, lo, hi);
        match p.solve() {
            Ok(outcome) => {
                let sol = outcome
                    .into_solution()
                    .map_err(|_| LpError::Engine("solve interrupted".into()))?;
                Ok(LpOutcome {
                    status: LpStatus::Optimal,
                    x: vars.iter().map(|v| sol[*v]).collect(),
                    objective: sol.objective(),
                })
            }
            Err(microlp::Error::Infeasible) => Ok(LpOutcome::without(LpStatus::Infeasible)),
            Err(microlp::Error::Unbounded) => Ok(LpOutcome::without(LpStatus::Unbounded)),
            Err(e) => Err(LpError::Engine(e.to_string())),
        }
    }
}

/// Dense bounded-variable two-phase tableau simplex with Bland's rule.
/// Intended for small problems; every column needs a finite lower bound.
pub struct DenseSimplex {
    pub max_iter: usize,
}

impl Default for DenseSimplex {
    fn default() -> Self {
        DenseSimplex { max_iter: 200_000 }
    }
}

const PIV_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;

struct Tableau {
    m: usize,
    n: usize,
    /// B⁻¹A, row-major m × n.
    t: Vec<f64>,
    /// Values of the basic variables.
    xb: Vec<f64>,
    basis: Vec<usize>,
    /// For nonbasic columns: true when at the upper bound.
    at_upper: Vec<bool>,
    is_basic: Vec<bool>,
    upper: Vec<f64>,
}

impl Tableau {
    fn reduced_costs(&self, c: &[f64]) -> Vec<f64> {
        let mut d = c.to_vec();
        for i in 0..self.m {
            let cb = c[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.n..(i + 1) * self.n];
                for j in 0..self.n {
                    d[j] -= cb * row[j];
                }
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let n = self.n;
        let piv = self.t[r * n + q];
        for j in 0..n {
            self.t[r * n + j] /= piv;
        }
        let prow: Vec<f64> = self.t[r * n..(r + 1) * n].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * n + q];
            if f != 0.0 {
                let row = &mut self.t[i * n..(i + 1) * n];
                for j in 0..n {
                    row[j] -= f * prow[j];
                }
            }
        }
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
    }

    /// Runs simplex iterations for cost `c`; returns false if unbounded.
    fn optimise(&mut self, c: &[f64], iters: &mut usize, max_iter: usize) -> Result<bool, LpError> {
        loop {
            *iters += 1;
            if *iters > max_iter {
                return Err(LpError::IterationLimit(max_iter));
            }
            let d = self.reduced_costs(c);
            // Bland: lowest-index improving column.
            let entering = (0..self.n).find(|&j| {
                !self.is_basic[j]
                    && self.upper[j] > 0.0
                    && ((!self.at_upper[j] && d[j] < -COST_TOL)
                        || (self.at_upper[j] && d[j] > COST_TOL))
            });
            let Some(q) = entering else {
                return Ok(true);
            };
            let dir = if self.at_upper[q] { -1.0 } else { 1.0 };
            let mut theta = self.upper[q];
            let mut leave: Option<(usize, bool)> = None;
            for i in 0..self.m {
                let alpha = dir * self.t[i * self.n + q];
                let b = self.basis[i];
                let (lim, to_upper) = if alpha > PIV_TOL {
                    (self.xb[i].max(0.0) / alpha, false)
                } else if alpha < -PIV_TOL && self.upper[b].is_finite() {
                    ((self.upper[b] - self.xb[i]).max(0.0) / -alpha, true)
                } else {
                    continue;
                };
                // Ties go to the lowest basic index; a tie with the entering
                // column's own bound is resolved as a flip.
                let tie = theta.is_finite() && (lim - theta).abs() <= 1e-12 * theta.abs().max(1.0);
                let better = if tie {
                    leave.is_some_and(|(li, _)| b < self.basis[li])
                } else {
                    lim < theta
                };
                if better {
                    theta = lim;
                    leave = Some((i, to_upper));
                }
            }
            if !theta.is_finite() {
                return Ok(false);
            }
            for i in 0..self.m {
                self.xb[i] -= theta * dir * self.t[i * self.n + q];
            }
            match leave {
                None => {
                    // Bound flip of the entering column.
                    self.at_upper[q] = !self.at_upper[q];
                }
                Some((r, to_upper)) => {
                    let start = if self.at_upper[q] { self.upper[q] } else { 0.0 };
                    let leaving = self.basis[r];
                    self.pivot(r, q);
                    self.xb[r] = start + dir * theta;
                    self.at_upper[leaving] = to_upper;
                    self.at_upper[q] = false;
                }
            }
        }
    }
}

impl LpBackend for DenseSimplex {
    fn name(&self) -> &'static str {
        "dense-bland"
    }

    fn solve(&self, model: &Milp, lo: &[f64], hi: &[f64]) -> Result<LpOutcome, LpError> {
        let ncol = model.columns.len();
        if lo.iter().zip(hi).any(|(l, h)| l > &(h + 1e-12)) {
            return Ok(LpOutcome::without(LpStatus::Infeasible));
        }
        if let Some(j) = (0..ncol).find(|&j| !lo[j].is_finite()) {
            return Err(LpError::UnboundedBelow(j));
        }
        // Free columns (lo < hi) become y = x − lo ∈ [0, hi − lo].
        let free: Vec<usize> = (0..ncol).filter(|&j| hi[j] > lo[j]).collect();
        let mut pos = vec![usize::MAX; ncol];
        for (k, &j) in free.iter().enumerate() {
            pos[j] = k;
        }
        let nf = free.len();
        let m = model.rows.len();
        let mut rows: Vec<(Vec<(usize, f64)>, Sense, f64)> = Vec::with_capacity(m);
        for r in &model.rows {
            let mut rhs = r.rhs;
            let mut coefs = Vec::new();
            for &(j, a) in &r.coefs {
                rhs -= a * lo[j];
                if pos[j] != usize::MAX {
                    coefs.push((pos[j], a));
                }
            }
            let (coefs, sense, rhs) = if rhs < 0.0 {
                let s = match r.sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
                (coefs.into_iter().map(|(k, a)| (k, -a)).collect(), s, -rhs)
            } else {
                (coefs, r.sense, rhs)
            };
            rows.push((coefs, sense, rhs));
        }
        // Columns: structural | slack/surplus per row | artificial per non-≤ row.
        let n_art = rows.iter().filter(|r| r.1 != Sense::Le).count();
        let n = nf + m + n_art;
        let mut t = vec![0.0; m * n];
        let mut upper = vec![f64::INFINITY; n];
        for (k, &j) in free.iter().enumerate() {
            upper[k] = hi[j] - lo[j];
        }
        let mut basis = vec![0; m];
        let mut xb = vec![0.0; m];
        let mut art = nf + m;
        let mut art_cols = Vec::new();
        for (i, (coefs, sense, rhs)) in rows.iter().enumerate() {
            for &(k, a) in coefs {
                t[i * n + k] += a;
            }
            let slack = nf + i;
            match sense {
                Sense::Le => {
                    t[i * n + slack] = 1.0;
                    basis[i] = slack;
                }
                Sense::Ge => {
                    t[i * n + slack] = -1.0;
                    t[i * n + art] = 1.0;
                    basis[i] = art;
                    art_cols.push(art);
                    art += 1;
                }
                Sense::Eq => {
                    upper[slack] = 0.0;
                    t[i * n + art] = 1.0;
                    basis[i] = art;
                    art_cols.push(art);
                    art += 1;
                }
            }
            xb[i] = *rhs;
        }
        let mut is_basic = vec![false; n];
        for &b in &basis {
            is_basic[b] = true;
        }
        let mut tab = Tableau {
            m,
            n,
            t,
            xb,
            basis,
            at_upper: vec![false; n],
            is_basic,
            upper,
        };
        let mut iters = 0;
        if !art_cols.is_empty() {
            let mut c1 = vec![0.0; n];
            for &a in &art_cols {
                c1[a] = 1.0;
            }
            tab.optimise(&c1, &mut iters, self.max_iter)?;
            let infeas: f64 = (0..m)
                .filter(|&i| c1[tab.basis[i]] > 0.0)
                .map(|i| tab.xb[i])
                .sum();
            let scale = rows.iter().map(|r| r.2).fold(1.0, f64::max);
            if infeas > FEAS_TOL * scale {
                return Ok(LpOutcome::without(LpStatus::Infeasible));
            }
            // Drive zero-valued artificials out of the basis where possible.
            for i in 0..m {
                if c1[tab.basis[i]] > 0.0 {
                    if let Some(q) = (0..nf + m).find(|&q| {
                        !tab.is_basic[q]
                            && tab.t[i * n + q].abs() > 1e-7
                            && tab.upper[q] > 0.0
                            && !tab.at_upper[q]
                    }) {
                        tab.pivot(i, q);
                        tab.xb[i] = 0.0;
                    }
                }
            }
            for &a in &art_cols {
                tab.upper[a] = 0.0;
            }
        }
        let mut c2 = vec![0.0; n];
        for (k, &j) in free.iter().enumerate() {
            c2[k] = model.columns[j].cost;
        }
        if !tab.optimise(&c2, &mut iters, self.max_iter)? {
            return Ok(LpOutcome::without(LpStatus::Unbounded));
        }
        let mut y = vec![0.0; n];
        for q in 0..n {
            if !tab.is_basic[q] && tab.at_upper[q] {
                y[q] = tab.upper[q];
            }
        }
        for i in 0..m {
            y[tab.basis[i]] = tab.xb[i];
        }
        let x: Vec<f64> = (0..ncol)
            .map(|j| {
                if pos[j] == usize::MAX {
                    lo[j]
                } else {
                    lo[j] + y[pos[j]]
                }
            })
            .collect();
        Ok(LpOutcome {
            status: LpStatus::Optimal,
            objective: model.objective(&x),
            x,
        })
    }
}
