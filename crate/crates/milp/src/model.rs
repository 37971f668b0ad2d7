//! Binary integer program representation.
//!
//! Every variable is binary and the objective is always maximized. Rows are
//! stored sparse; duplicate entries are merged and explicit zeros dropped when
//! a row is added, so two models built from the same terms compare equal.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use crate::error::MilpError;

/// Index of a variable inside a [`MilpModel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Binary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

impl RowSense {
    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            RowSense::Le => lhs <= rhs + tol,
            RowSense::Ge => lhs >= rhs - tol,
            RowSense::Eq => (lhs - rhs).abs() <= tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl Constraint {
    pub fn lhs(&self, assignment: &[bool]) -> f64 {
        self.coeffs
            .iter()
            .filter(|(v, _)| assignment[v.0])
            .map(|(_, a)| *a)
            .sum()
    }
}

/// A maximization problem over binary variables.
#[derive(Clone, Debug, PartialEq)]
pub struct MilpModel {
    pub name: String,
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Vec<f64>,
    /// Factor the objective coefficients were multiplied by before rounding.
    /// Divide solver objective values by this to recover model units.
    objective_scale: f64,
    metadata: BTreeMap<String, String>,
}

impl Default for MilpModel {
    fn default() -> Self {
        Self::new("model")
    }
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            objective_scale: 1.0,
            metadata: BTreeMap::new(),
        }
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.variables.push(Variable { name: name.into(), kind: VarKind::Binary });
        self.objective.push(0.0);
        VarId(self.variables.len() - 1)
    }

    /// Adds a row and returns its index. Terms on the same variable are summed.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        sense: RowSense,
        rhs: f64,
    ) -> usize {
        let mut merged: BTreeMap<VarId, f64> = BTreeMap::new();
        for (v, a) in terms {
            *merged.entry(v).or_insert(0.0) += a;
        }
        let coeffs = merged.into_iter().filter(|(_, a)| *a != 0.0).collect();
        self.constraints.push(Constraint { name: name.into(), coeffs, sense, rhs });
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, var: VarId, coeff: f64) {
        self.objective[var.0] = coeff;
    }

    pub fn add_objective(&mut self, var: VarId, coeff: f64) {
        self.objective[var.0] += coeff;
    }

    pub fn objective_coeff(&self, var: VarId) -> f64 {
        self.objective[var.0]
    }

    /// Nonzero objective terms in variable order.
    pub fn objective_terms(&self) -> impl Iterator<Item = (VarId, f64)> + '_ {
        self.objective
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| (VarId(i), *c))
    }

    pub(crate) fn objective_dense(&self) -> &[f64] {
        &self.objective
    }

    pub fn objective_scale(&self) -> f64 {
        self.objective_scale
    }

    pub fn set_objective_scale(&mut self, scale: f64) {
        self.objective_scale = scale;
        self.metadata.insert("objective_scale".into(), format!("{scale}"));
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn set_metadata(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.metadata.insert(key.into(), value.into());
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn objective_value(&self, assignment: &[bool]) -> f64 {
        self.objective
            .iter()
            .zip(assignment)
            .filter(|(_, on)| **on)
            .map(|(c, _)| *c)
            .sum()
    }

    /// Whether every row holds. Integral rows are checked exactly.
    pub fn is_feasible(&self, assignment: &[bool]) -> bool {
        self.first_violated(assignment).is_none()
    }

    pub fn first_violated(&self, assignment: &[bool]) -> Option<usize> {
        assert_eq!(assignment.len(), self.num_vars(), "assignment length mismatch");
        self.constraints.iter().position(|c| {
            let integral = c.rhs.fract() == 0.0 && c.coeffs.iter().all(|(_, a)| a.fract() == 0.0);
            let tol = if integral { 0.0 } else { 1e-9 };
            !c.sense.holds(c.lhs(assignment), c.rhs, tol)
        })
    }

    /// True when every objective coefficient is an integer, which lets the
    /// solver round LP bounds down.
    pub fn has_integral_objective(&self) -> bool {
        self.objective.iter().all(|c| c.fract() == 0.0)
    }

    pub fn validate(&self) -> Result<(), MilpError> {
        let n = self.num_vars();
        let mut names = HashSet::new();
        for v in &self.variables {
            if v.name.is_empty() || v.name.contains(char::is_whitespace) {
                return Err(MilpError::InvalidModel(format!("bad variable name {:?}", v.name)));
            }
            if !names.insert(v.name.as_str()) {
                return Err(MilpError::InvalidModel(format!("duplicate variable {}", v.name)));
            }
        }
        let mut row_names = HashSet::new();
        for c in &self.constraints {
            if c.name.is_empty() || c.name.contains(char::is_whitespace) {
                return Err(MilpError::InvalidModel(format!("bad row name {:?}", c.name)));
            }
            if !row_names.insert(c.name.as_str()) {
                return Err(MilpError::InvalidModel(format!("duplicate row {}", c.name)));
            }
            if !c.rhs.is_finite() {
                return Err(MilpError::InvalidModel(format!("row {} has non-finite rhs", c.name)));
            }
            for (v, a) in &c.coeffs {
                if v.0 >= n {
                    return Err(MilpError::InvalidModel(format!(
                        "row {} references undeclared variable {v}",
                        c.name
                    )));
                }
                if !a.is_finite() {
                    return Err(MilpError::InvalidModel(format!("row {} has non-finite coefficient", c.name)));
                }
            }
        }
        if let Some(i) = self.objective.iter().position(|c| !c.is_finite()) {
            return Err(MilpError::InvalidModel(format!(
                "objective coefficient of {} is not finite",
                self.variables[i].name
            )));
        }
        Ok(())
    }
}
