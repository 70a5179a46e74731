//! Branch-and-bound over integer columns with warm-started LP relaxations.

use std::rc::Rc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::lp::{to_microlp, LpBackend, LpError, LpStatus, MicroLp};
use super::milp::Milp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BnbOptions {
    /// Relative optimality gap at which the search stops.
    pub gap_tol: f64,
    pub time_limit_s: Option<f64>,
    pub node_limit: usize,
    pub int_tol: f64,
    /// Jump to the best-bound open node after this many dives without an
    /// incumbent improvement.
    pub restart_every: usize,
    /// Run the rounding heuristic every this many nodes (and at the root).
    pub heuristic_every: usize,
}

impl Default for BnbOptions {
    fn default() -> Self {
        BnbOptions {
            gap_tol: 1e-4,
            time_limit_s: None,
            node_limit: 1_000_000,
            int_tol: 1e-6,
            restart_every: 50,
            heuristic_every: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MilpStatus {
    /// Incumbent within the requested gap.
    Optimal,
    TimeLimit,
    NodeLimit,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpResult {
    pub status: MilpStatus,
    pub x: Option<Vec<f64>>,
    pub objective: f64,
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
    /// Number of nodes that were split on a fractional column.
    pub branchings: usize,
    pub root_bound: f64,
}

struct OpenNode {
    /// Warm-start state; dropped for nodes deep in the stack to bound memory.
    parent: Option<Rc<microlp::Solution>>,
    /// Every fixing on the path from the root, this node's own last.
    fixes: Rc<Vec<(usize, f64)>>,
    bound: f64,
}

/// Open nodes that keep their parent's LP state.
const WARM_NODES: usize = 24;

fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    if !incumbent.is_finite() {
        return f64::INFINITY;
    }
    ((incumbent - bound) / incumbent.abs().max(1e-9)).max(0.0)
}

/// Applies `fixes` to a solved LP in order; `None` if it turns infeasible.
fn replay(
    mut sol: microlp::Solution,
    vars: &[microlp::Variable],
    fixes: &[(usize, f64)],
) -> Result<Option<microlp::Solution>, LpError> {
    for &(j, v) in fixes {
        sol = match sol.fix_var(vars[j], v) {
            Ok(outcome) => match outcome.into_solution() {
                Ok(s) => s,
                Err(_) => return Err(LpError::Engine("LP interrupted".into())),
            },
            Err(microlp::Error::Infeasible) => return Ok(None),
            Err(e) => return Err(LpError::Engine(e.to_string())),
        };
    }
    Ok(Some(sol))
}

/// Solves the LP with every integer column fixed to `x`'s rounded values.
fn complete(model: &Milp, ints: &[usize], x: &[f64]) -> Result<Option<(Vec<f64>, f64)>, LpError> {
    let mut lo: Vec<f64> = model.columns.iter().map(|c| c.lo).collect();
    let mut hi: Vec<f64> = model.columns.iter().map(|c| c.hi).collect();
    for &j in ints {
        let v = x[j].round().clamp(lo[j], hi[j]);
        lo[j] = v;
        hi[j] = v;
    }
    let out = MicroLp.solve(model, &lo, &hi)?;
    Ok((out.status == LpStatus::Optimal).then_some((out.x, out.objective)))
}

/// Minimises `model` by depth-first branch-and-bound on the most fractional
/// integer column, returning to the best-bound node periodically. `start`
/// seeds the incumbent (its integer part is completed by an LP solve).
pub fn branch_and_bound(
    model: &Milp,
    opts: &BnbOptions,
    start: Option<&[f64]>,
) -> Result<MilpResult, LpError> {
    let t0 = Instant::now();
    let deadline = opts.time_limit_s.map(|s| t0 + Duration::from_secs_f64(s));
    let ints = model.integer_columns();
    let lo: Vec<f64> = model.columns.iter().map(|c| c.lo).collect();
    let hi: Vec<f64> = model.columns.iter().map(|c| c.hi).collect();
    let (problem, vars) = to_microlp(model, &lo, &hi);

    let mut result = MilpResult {
        status: MilpStatus::Infeasible,
        x: None,
        objective: f64::INFINITY,
        bound: f64::NEG_INFINITY,
        gap: f64::INFINITY,
        nodes: 0,
        branchings: 0,
        root_bound: f64::NAN,
    };
    let root = match problem.solve() {
        Ok(outcome) => outcome
            .into_solution()
            .map_err(|_| LpError::Engine("root LP interrupted".into()))?,
        Err(microlp::Error::Infeasible) => return Ok(result),
        Err(microlp::Error::Unbounded) => {
            result.status = MilpStatus::Unbounded;
            return Ok(result);
        }
        Err(e) => return Err(LpError::Engine(e.to_string())),
    };
    result.root_bound = root.objective();

    let mut inc_x: Option<Vec<f64>> = None;
    let mut inc_obj = f64::INFINITY;
    let offer = |x: Vec<f64>, obj: f64, inc_x: &mut Option<Vec<f64>>, inc_obj: &mut f64| -> bool {
        if obj < *inc_obj - 1e-9 * obj.abs().max(1.0) {
            *inc_obj = obj;
            *inc_x = Some(x);
            true
        } else {
            false
        }
    };
    if let Some(s) = start {
        if let Some((x, obj)) = complete(model, &ints, s)? {
            offer(x, obj, &mut inc_x, &mut inc_obj);
        }
    }

    let values = |sol: &microlp::Solution| -> Vec<f64> {
        vars.iter().map(|v| sol.var_value_raw(*v)).collect()
    };
    let most_fractional = |x: &[f64]| -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for &j in &ints {
            let f = x[j] - x[j].floor();
            let dist = f.min(1.0 - f);
            if dist > opts.int_tol && best.is_none_or(|(_, d)| dist > d + 1e-12) {
                best = Some((j, dist));
            }
        }
        best.map(|(j, _)| j)
    };
    let prune_level = |inc: f64| -> f64 {
        if inc.is_finite() {
            inc - opts.gap_tol * inc.abs().max(1e-9)
        } else {
            f64::INFINITY
        }
    };

    let root_sol = Rc::new(root.clone());
    let mut open: Vec<OpenNode> = Vec::new();
    let mut pending_root = Some(root);
    let mut current_fixes: Rc<Vec<(usize, f64)>> = Rc::new(Vec::new());
    let mut since_improvement = 0usize;
    let mut stopped: Option<MilpStatus> = None;
    loop {
        let sol = if let Some(r) = pending_root.take() {
            r
        } else {
            let Some(node) = open.pop() else { break };
            if node.bound >= prune_level(inc_obj) {
                continue;
            }
            if deadline.is_some_and(|d| Instant::now() >= d) {
                open.push(node);
                stopped = Some(MilpStatus::TimeLimit);
                break;
            }
            if result.nodes >= opts.node_limit {
                open.push(node);
                stopped = Some(MilpStatus::NodeLimit);
                break;
            }
            let (base, todo) = match &node.parent {
                Some(p) => ((**p).clone(), &node.fixes[node.fixes.len() - 1..]),
                None => ((*root_sol).clone(), &node.fixes[..]),
            };
            match replay(base, &vars, todo)? {
                Some(s) => {
                    current_fixes = node.fixes.clone();
                    s
                }
                None => continue,
            }
        };
        result.nodes += 1;
        let obj = sol.objective();
        if obj >= prune_level(inc_obj) {
            continue;
        }
        let x = values(&sol);
        if result.nodes == 1 || result.nodes % opts.heuristic_every.max(1) == 0 {
            // Round up: committing extra units rarely breaks feasibility.
            let rounded: Vec<f64> = x
                .iter()
                .map(|v| (v - opts.int_tol).ceil().max(v.round()))
                .collect();
            if let Some((hx, hobj)) = complete(model, &ints, &rounded)? {
                if offer(hx, hobj, &mut inc_x, &mut inc_obj) {
                    since_improvement = 0;
                }
            }
        }
        match most_fractional(&x) {
            None => {
                let mut xi = x;
                for &j in &ints {
                    xi[j] = xi[j].round();
                }
                if offer(xi, obj, &mut inc_x, &mut inc_obj) {
                    since_improvement = 0;
                }
            }
            Some(j) => {
                result.branchings += 1;
                since_improvement += 1;
                let parent = Rc::new(sol);
                let down = x[j].floor();
                for value in [down, down + 1.0] {
                    let mut fixes = (*current_fixes).clone();
                    fixes.push((j, value));
                    open.push(OpenNode {
                        parent: Some(parent.clone()),
                        fixes: Rc::new(fixes),
                        bound: obj,
                    });
                }
                if open.len() > WARM_NODES {
                    let end = open.len() - WARM_NODES;
                    for n in &mut open[end.saturating_sub(2)..end] {
                        n.parent = None;
                    }
                }
            }
        }
        // Global bound and early exit on gap.
        let open_bound = open.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
        if inc_obj.is_finite() && relative_gap(inc_obj, open_bound.min(inc_obj)) <= opts.gap_tol {
            break;
        }
        if since_improvement >= opts.restart_every.max(1) && !open.is_empty() {
            let k = (0..open.len())
                .min_by(|&a, &b| open[a].bound.total_cmp(&open[b].bound))
                .expect("non-empty");
            let node = open.remove(k);
            open.push(node);
            since_improvement = 0;
        }
    }
    let open_bound = open.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    result.bound = open_bound.min(inc_obj);
    if !result.bound.is_finite() {
        result.bound = result.root_bound;
    }
    result.objective = inc_obj;
    result.gap = relative_gap(inc_obj, result.bound);
    result.status = match (&inc_x, stopped) {
        (None, None) => MilpStatus::Infeasible,
        (_, Some(s)) if result.gap > opts.gap_tol => s,
        _ => MilpStatus::Optimal,
    };
    result.x = inc_x;
    Ok(result)
}
