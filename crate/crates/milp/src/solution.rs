use crate::model::{MilpModel, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    Unbounded,
    /// Search stopped because the relative gap fell below the requested target.
    GapLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilpSolution {
    pub status: SolveStatus,
    /// One entry per model variable. Empty when infeasible.
    pub assignment: Vec<bool>,
    /// Objective in scaled model units.
    pub objective_value: f64,
    /// Proven upper bound on the optimum, in the same units.
    pub bound: f64,
    pub gap: f64,
    pub nodes: u64,
}

impl MilpSolution {
    pub fn infeasible(nodes: u64) -> Self {
        Self {
            status: SolveStatus::Infeasible,
            assignment: Vec::new(),
            objective_value: f64::NEG_INFINITY,
            bound: f64::NEG_INFINITY,
            gap: 0.0,
            nodes,
        }
    }

    pub fn value(&self, var: VarId) -> bool {
        self.assignment[var.0]
    }

    pub fn is_solved(&self) -> bool {
        matches!(self.status, SolveStatus::Optimal | SolveStatus::Feasible | SolveStatus::GapLimit)
    }

    /// Objective divided by the model's reward scale.
    pub fn unscaled_objective(&self, model: &MilpModel) -> f64 {
        self.objective_value / model.objective_scale()
    }

    pub fn unscaled_bound(&self, model: &MilpModel) -> f64 {
        self.bound / model.objective_scale()
    }
}

/// Relative gap between an incumbent and a bound, zero when they coincide.
pub fn relative_gap(objective: f64, bound: f64) -> f64 {
    let diff = (bound - objective).max(0.0);
    if diff == 0.0 {
        0.0
    } else {
        diff / objective.abs().max(1e-9)
    }
}
