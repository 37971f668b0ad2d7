//! Non-exact solves for models too large to close by branch and bound.

use crate::coverage::CoverageStructure;
use crate::error::MilpError;
use crate::model::MilpModel;
use crate::simplex::{solve_relaxation, Fix, LpOutcome};
use crate::solution::{relative_gap, MilpSolution, SolveStatus};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StructureHint {
    /// Maximal-coverage shape: greedy fill to the cardinality, then swaps.
    CoverageCardinality,
    /// Anything else: LP-guided diving.
    Generic,
}

/// Greedy + swap for coverage models, LP diving otherwise. The returned
/// bound comes from the root LP relaxation.
pub fn solve_heuristic(model: &MilpModel, hint: StructureHint) -> Result<MilpSolution, MilpError> {
    model.validate()?;
    match hint {
        StructureHint::CoverageCardinality => {
            let cs = CoverageStructure::detect(model)?;
            if cs.cardinality > cs.num_locations() {
                return Ok(MilpSolution::infeasible(0));
            }
            let mut selected = cs.greedy();
            cs.swap_improve(&mut selected);
            let assignment = cs.assignment(model, &selected);
            let objective = model.objective_value(&assignment);
            let bound = root_bound(model)
                .or_else(|| cs.completion_bound(&vec![None; cs.num_locations()]))
                .unwrap_or(objective)
                .max(objective);
            Ok(finish(model, assignment, objective, bound, 0))
        }
        StructureHint::Generic => dive(model),
    }
}

fn root_bound(model: &MilpModel) -> Option<f64> {
    match solve_relaxation(model, &vec![Fix::Free; model.num_vars()]) {
        Ok(LpOutcome::Optimal { objective, .. }) => Some(objective),
        _ => None,
    }
}

fn finish(model: &MilpModel, assignment: Vec<bool>, objective: f64, bound: f64, nodes: u64) -> MilpSolution {
    let closed = if model.has_integral_objective() {
        (bound + 1e-6).floor() <= objective
    } else {
        bound <= objective + 1e-9 * objective.abs().max(1.0)
    };
    let (status, bound) = if closed { (SolveStatus::Optimal, objective) } else { (SolveStatus::Feasible, bound) };
    MilpSolution { status, gap: relative_gap(objective, bound), assignment, objective_value: objective, bound, nodes }
}

/// Fixes the most decided fractional variable to its rounding, re-solving
/// the relaxation each time; flips the last fixing once on infeasibility.
fn dive(model: &MilpModel) -> Result<MilpSolution, MilpError> {
    let n = model.num_vars();
    let mut fixes = vec![Fix::Free; n];
    let bound = match solve_relaxation(model, &fixes)? {
        LpOutcome::Infeasible => return Ok(MilpSolution::infeasible(1)),
        LpOutcome::Optimal { objective, .. } => objective,
    };
    let mut solves = 1u64;
    let budget = 4 * n as u64 + 16;
    while solves < budget {
        let values = match solve_relaxation(model, &fixes)? {
            LpOutcome::Optimal { values, .. } => values,
            LpOutcome::Infeasible => return Err(MilpError::NoFeasibleFound),
        };
        solves += 1;
        let rounded: Vec<bool> = values.iter().map(|x| *x >= 0.5).collect();
        let integral = values.iter().all(|x| (x - x.round()).abs() <= 1e-6);
        if integral && model.is_feasible(&rounded) {
            let obj = model.objective_value(&rounded);
            return Ok(finish(model, rounded, obj, bound.max(obj), solves));
        }
        // Most decided free variable, preferring fractional ones.
        let pick = (0..n)
            .filter(|&j| fixes[j] == Fix::Free)
            .min_by(|&a, &b| {
                let fa = (values[a] - values[a].round()).abs();
                let fb = (values[b] - values[b].round()).abs();
                let ka = (fa <= 1e-6, fa);
                let kb = (fb <= 1e-6, fb);
                ka.partial_cmp(&kb).unwrap().then(a.cmp(&b))
            });
        let Some(j) = pick else {
            return Err(MilpError::NoFeasibleFound);
        };
        let first = if values[j] >= 0.5 { Fix::One } else { Fix::Zero };
        fixes[j] = first;
        if let LpOutcome::Infeasible = solve_relaxation(model, &fixes)? {
            fixes[j] = if first == Fix::One { Fix::Zero } else { Fix::One };
            if let LpOutcome::Infeasible = solve_relaxation(model, &fixes)? {
                return Err(MilpError::NoFeasibleFound);
            }
            solves += 1;
        }
        solves += 1;
    }
    Err(MilpError::NoFeasibleFound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RowSense;

    #[test]
    fn generic_dive_finds_feasible_point() {
        let mut m = MilpModel::new("g");
        let v: Vec<_> = (0..4).map(|i| m.add_binary(format!("v{i}"))).collect();
        for (i, w) in [3.0, 2.0, 2.0, 1.0].iter().enumerate() {
            m.set_objective(v[i], *w);
        }
        m.add_constraint("cap", v.iter().map(|x| (*x, 1.0)), RowSense::Le, 2.0);
        m.add_constraint("pair", [(v[0], 1.0), (v[1], 1.0)], RowSense::Le, 1.0);
        let sol = solve_heuristic(&m, StructureHint::Generic).unwrap();
        assert!(m.is_feasible(&sol.assignment));
        assert!(sol.bound >= sol.objective_value);
    }

    #[test]
    fn coverage_hint_on_generic_model_is_rejected() {
        let mut m = MilpModel::new("g");
        let a = m.add_binary("a");
        m.add_constraint("c", [(a, 1.0)], RowSense::Le, 1.0);
        assert!(matches!(
            solve_heuristic(&m, StructureHint::CoverageCardinality),
            Err(MilpError::StructureMismatch(_))
        ));
    }
}
