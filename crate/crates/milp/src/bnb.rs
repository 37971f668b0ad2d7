//! Best-first branch and bound.
//!
//! Nodes are ordered by bound, then by creation order, so a solve is fully
//! deterministic for a given model and limits. The branching variable is the
//! most fractional one; ties go to the largest absolute objective
//! coefficient and then to the lowest index.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::coverage::CoverageStructure;
use crate::error::MilpError;
use crate::model::MilpModel;
use crate::simplex::{solve_relaxation, Fix, LpOutcome};
use crate::solution::{relative_gap, MilpSolution, SolveStatus};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveLimits {
    pub node_cap: u64,
    pub time_cap: Option<Duration>,
    /// Relative gap at which the search may stop early (0 = prove optimality).
    pub gap_target: f64,
}

impl Default for SolveLimits {
    fn default() -> Self {
        Self { node_cap: 2_000_000, time_cap: None, gap_target: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BoundMode {
    #[default]
    LpRelaxation,
    /// Coefficient-sorting bound; only valid on coverage-structured models.
    Combinatorial,
}

struct Node {
    bound: f64,
    id: u64,
    fixes: Vec<Fix>,
    values: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound).then_with(|| other.id.cmp(&self.id))
    }
}

struct Incumbent {
    assignment: Vec<bool>,
    objective: f64,
}

fn prunable(integral: bool, bound: f64, incumbent: Option<&Incumbent>) -> bool {
    let Some(inc) = incumbent else { return false };
    if integral {
        (bound + 1e-6).floor() <= inc.objective
    } else {
        bound <= inc.objective + 1e-9 * inc.objective.abs().max(1.0)
    }
}

/// Solves `model` to proven optimality using LP-relaxation bounds.
pub fn solve_exact(model: &MilpModel, limits: &SolveLimits) -> Result<MilpSolution, MilpError> {
    solve_exact_with(model, limits, BoundMode::LpRelaxation)
}

pub fn solve_exact_with(
    model: &MilpModel,
    limits: &SolveLimits,
    mode: BoundMode,
) -> Result<MilpSolution, MilpError> {
    model.validate()?;
    match mode {
        BoundMode::LpRelaxation => lp_branch_and_bound(model, limits),
        BoundMode::Combinatorial => {
            let cs = CoverageStructure::detect(model)?;
            coverage_branch_and_bound(model, &cs, limits)
        }
    }
}

fn lp_branch_and_bound(model: &MilpModel, limits: &SolveLimits) -> Result<MilpSolution, MilpError> {
    let start = Instant::now();
    let n = model.num_vars();
    let integral = model.has_integral_objective();
    let objective = model.objective_dense();

    let mut incumbent: Option<Incumbent> = None;
    let mut heap = BinaryHeap::new();
    let mut next_id = 0u64;
    let mut nodes = 0u64;

    let root = vec![Fix::Free; n];
    match solve_relaxation(model, &root)? {
        LpOutcome::Infeasible => return Ok(MilpSolution::infeasible(1)),
        LpOutcome::Optimal { values, objective: bound } => {
            heap.push(Node { bound, id: next_id, fixes: root, values });
            next_id += 1;
        }
    }

    while let Some(node) = heap.pop() {
        nodes += 1;
        if prunable(integral, node.bound, incumbent.as_ref()) {
            // Best-first: every remaining node has a bound no larger.
            heap.clear();
            break;
        }
        let open_bound = match &incumbent {
            Some(inc) => node.bound.max(inc.objective),
            None => node.bound,
        };
        if nodes > limits.node_cap || limits.time_cap.is_some_and(|cap| start.elapsed() > cap) {
            return Err(limits_error(incumbent, open_bound, nodes));
        }
        if let Some(inc) = &incumbent {
            if limits.gap_target > 0.0 && relative_gap(inc.objective, open_bound) <= limits.gap_target {
                return Ok(MilpSolution {
                    status: SolveStatus::GapLimit,
                    assignment: inc.assignment.clone(),
                    objective_value: inc.objective,
                    bound: open_bound,
                    gap: relative_gap(inc.objective, open_bound),
                    nodes,
                });
            }
        }

        if let Some(assignment) = integral_assignment(&node.values, &node.fixes, model) {
            let obj = model.objective_value(&assignment);
            if incumbent.as_ref().map_or(true, |inc| obj > inc.objective) {
                incumbent = Some(Incumbent { assignment, objective: obj });
            }
            continue;
        }
        let Some(var) = branching_variable(&node, objective, model) else {
            continue;
        };
        for value in [Fix::One, Fix::Zero] {
            let mut fixes = node.fixes.clone();
            fixes[var] = value;
            let LpOutcome::Optimal { values, objective: bound } = solve_relaxation(model, &fixes)? else {
                continue;
            };
            let bound = bound.min(node.bound);
            if prunable(integral, bound, incumbent.as_ref()) {
                continue;
            }
            heap.push(Node { bound, id: next_id, fixes, values });
            next_id += 1;
        }
    }

    Ok(match incumbent {
        Some(inc) => MilpSolution {
            status: SolveStatus::Optimal,
            assignment: inc.assignment,
            objective_value: inc.objective,
            bound: inc.objective,
            gap: 0.0,
            nodes,
        },
        None => MilpSolution::infeasible(nodes),
    })
}

fn limits_error(incumbent: Option<Incumbent>, bound: f64, nodes: u64) -> MilpError {
    MilpError::LimitsExceeded {
        incumbent: incumbent.map(|inc| {
            Box::new(MilpSolution {
                status: SolveStatus::Feasible,
                gap: relative_gap(inc.objective, bound),
                objective_value: inc.objective,
                assignment: inc.assignment,
                bound,
                nodes,
            })
        }),
        bound,
    }
}

/// Rounds an LP point if it is integral and the rounding satisfies every row.
fn integral_assignment(values: &[f64], fixes: &[Fix], model: &MilpModel) -> Option<Vec<bool>> {
    let mut out = Vec::with_capacity(values.len());
    for (x, f) in values.iter().zip(fixes) {
        match f {
            Fix::One => out.push(true),
            Fix::Zero => out.push(false),
            Fix::Free => {
                if *x <= 1e-6 {
                    out.push(false);
                } else if *x >= 1.0 - 1e-6 {
                    out.push(true);
                } else {
                    return None;
                }
            }
        }
    }
    model.is_feasible(&out).then_some(out)
}

fn branching_variable(node: &Node, objective: &[f64], model: &MilpModel) -> Option<usize> {
    let mut best: Option<(usize, f64, f64)> = None;
    for (j, (x, f)) in node.values.iter().zip(&node.fixes).enumerate() {
        if *f != Fix::Free {
            continue;
        }
        let frac = (x - x.round()).abs();
        if frac <= 1e-6 {
            continue;
        }
        let dist = (x - 0.5).abs();
        let weight = objective[j].abs();
        let better = match best {
            None => true,
            Some((_, bd, bw)) => dist < bd - 1e-9 || ((dist - bd).abs() <= 1e-9 && weight > bw),
        };
        if better {
            best = Some((j, dist, weight));
        }
    }
    if let Some((j, _, _)) = best {
        return Some(j);
    }
    // Integral LP point whose rounding violates a row (numerical noise):
    // branch on the first free variable.
    let rounded: Vec<bool> = node.values.iter().map(|x| *x >= 0.5).collect();
    if model.is_feasible(&rounded) {
        None
    } else {
        node.fixes.iter().position(|f| *f == Fix::Free)
    }
}

struct CoverNode {
    bound: f64,
    id: u64,
    fixed: Vec<Option<bool>>,
}

impl PartialEq for CoverNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for CoverNode {}
impl PartialOrd for CoverNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for CoverNode {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound).then_with(|| other.id.cmp(&self.id))
    }
}

fn coverage_branch_and_bound(
    model: &MilpModel,
    cs: &CoverageStructure,
    limits: &SolveLimits,
) -> Result<MilpSolution, MilpError> {
    let start = Instant::now();
    let integral = model.has_integral_objective();
    let nloc = cs.num_locations();
    if cs.cardinality > nloc {
        return Ok(MilpSolution::infeasible(0));
    }

    let mut seed = cs.greedy();
    cs.swap_improve(&mut seed);
    let assignment = cs.assignment(model, &seed);
    let mut incumbent = Some(Incumbent { objective: model.objective_value(&assignment), assignment });

    let mut heap = BinaryHeap::new();
    let root = vec![None; nloc];
    let mut next_id = 0u64;
    if let Some(bound) = cs.completion_bound(&root) {
        heap.push(CoverNode { bound, id: next_id, fixed: root });
        next_id += 1;
    }
    let mut nodes = 0u64;
    while let Some(node) = heap.pop() {
        nodes += 1;
        if prunable(integral, node.bound, incumbent.as_ref()) {
            heap.clear();
            break;
        }
        let open_bound = node.bound.max(incumbent.as_ref().map_or(f64::NEG_INFINITY, |i| i.objective));
        if nodes > limits.node_cap || limits.time_cap.is_some_and(|cap| start.elapsed() > cap) {
            return Err(limits_error(incumbent, open_bound, nodes));
        }
        if let Some(inc) = &incumbent {
            if limits.gap_target > 0.0 && relative_gap(inc.objective, open_bound) <= limits.gap_target {
                return Ok(MilpSolution {
                    status: SolveStatus::GapLimit,
                    assignment: inc.assignment.clone(),
                    objective_value: inc.objective,
                    bound: open_bound,
                    gap: relative_gap(inc.objective, open_bound),
                    nodes,
                });
            }
        }

        let ones = node.fixed.iter().filter(|f| **f == Some(true)).count();
        let free = node.fixed.iter().filter(|f| f.is_none()).count();
        if ones == cs.cardinality || ones + free == cs.cardinality {
            // Leaf: the completion is forced.
            let fill = ones + free == cs.cardinality && ones != cs.cardinality;
            let selected: Vec<bool> = node.fixed.iter().map(|f| *f == Some(true) || (fill && f.is_none())).collect();
            let assignment = cs.assignment(model, &selected);
            let obj = model.objective_value(&assignment);
            if incumbent.as_ref().map_or(true, |inc| obj > inc.objective) {
                incumbent = Some(Incumbent { assignment, objective: obj });
            }
            continue;
        }
        let Some(s) = cs.best_free_location(&node.fixed) else { continue };
        for value in [true, false] {
            let mut fixed = node.fixed.clone();
            fixed[s] = Some(value);
            if let Some(bound) = cs.completion_bound(&fixed) {
                let bound = bound.min(node.bound);
                if !prunable(integral, bound, incumbent.as_ref()) {
                    heap.push(CoverNode { bound, id: next_id, fixed });
                    next_id += 1;
                }
            }
        }
    }

    Ok(match incumbent {
        Some(inc) => MilpSolution {
            status: SolveStatus::Optimal,
            assignment: inc.assignment,
            objective_value: inc.objective,
            bound: inc.objective,
            gap: 0.0,
            nodes,
        },
        None => MilpSolution::infeasible(nodes),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RowSense;

    #[test]
    fn picks_heavier_of_two_exclusive_variables() {
        let mut m = MilpModel::new("t");
        let x1 = m.add_binary("x1");
        let x2 = m.add_binary("x2");
        m.set_objective(x1, 1.0);
        m.set_objective(x2, 2.0);
        m.add_constraint("c", [(x1, 1.0), (x2, 1.0)], RowSense::Le, 1.0);
        let sol = solve_exact(&m, &SolveLimits::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.objective_value, 2.0);
        assert!(sol.value(x2) && !sol.value(x1));
        assert_eq!(sol.gap, 0.0);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut m = MilpModel::new("t");
        let x1 = m.add_binary("x1");
        m.add_constraint("lo", [(x1, 1.0)], RowSense::Ge, 1.0);
        m.add_constraint("hi", [(x1, 1.0)], RowSense::Le, 0.0);
        let sol = solve_exact(&m, &SolveLimits::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn node_cap_reports_limits() {
        // Odd-cycle packing has a fractional root, so one node is not enough.
        let mut m = MilpModel::new("t");
        let v: Vec<_> = (0..5).map(|i| m.add_binary(format!("v{i}"))).collect();
        for i in 0..5 {
            m.set_objective(v[i], 1.0);
            m.add_constraint(format!("e{i}"), [(v[i], 1.0), (v[(i + 1) % 5], 1.0)], RowSense::Le, 1.0);
        }
        let limits = SolveLimits { node_cap: 1, ..Default::default() };
        match solve_exact(&m, &limits) {
            Err(MilpError::LimitsExceeded { bound, .. }) => assert!(bound >= 2.0),
            other => panic!("expected limits error, got {other:?}"),
        }
        let sol = solve_exact(&m, &SolveLimits::default()).unwrap();
        assert_eq!(sol.objective_value, 2.0);
    }
}
