//! Recognition and fast evaluation of maximal-coverage models.
//!
//! A coverage model has one cardinality row `sum(z) = P` over the location
//! variables and, for every item `x`, a single coupling row
//! `sum(a_s * z_s) - k * x >= 0` with `a_s >= 0`, `k > 0`. The objective sits
//! on the item variables only.

use crate::error::MilpError;
use crate::model::{MilpModel, RowSense, VarId};

#[derive(Clone, Debug)]
pub struct CoverageItem {
    pub var: VarId,
    pub weight: f64,
    /// Coverage needed before the item may switch on.
    pub threshold: f64,
    /// `(location index, coefficient)` pairs.
    pub covers: Vec<(usize, f64)>,
}

impl CoverageItem {
    /// Every single covering location meets the threshold on its own.
    fn is_unit(&self) -> bool {
        self.covers.iter().all(|(_, a)| *a >= self.threshold - 1e-12)
    }
}

#[derive(Clone, Debug)]
pub struct CoverageStructure {
    pub locations: Vec<VarId>,
    pub cardinality: usize,
    pub items: Vec<CoverageItem>,
    by_location: Vec<Vec<(usize, f64)>>,
}

impl CoverageStructure {
    pub fn detect(model: &MilpModel) -> Result<Self, MilpError> {
        let n = model.num_vars();
        let mismatch = |msg: &str| MilpError::StructureMismatch(msg.to_string());

        let card_rows: Vec<usize> = model
            .constraints()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.sense == RowSense::Eq)
            .map(|(i, _)| i)
            .collect();
        if card_rows.len() != 1 {
            return Err(mismatch("expected exactly one equality (cardinality) row"));
        }
        let card = &model.constraints()[card_rows[0]];
        if card.coeffs.iter().any(|(_, a)| *a != 1.0) || card.rhs < 0.0 || card.rhs.fract() != 0.0 {
            return Err(mismatch("cardinality row must be sum(z) = P with unit coefficients"));
        }
        let mut loc_index = vec![usize::MAX; n];
        let locations: Vec<VarId> = card.coeffs.iter().map(|(v, _)| *v).collect();
        for (k, v) in locations.iter().enumerate() {
            loc_index[v.0] = k;
        }

        let mut item_of = vec![usize::MAX; n];
        let mut items: Vec<CoverageItem> = Vec::new();
        for (ri, c) in model.constraints().iter().enumerate() {
            if ri == card_rows[0] {
                continue;
            }
            if c.sense != RowSense::Ge || c.rhs != 0.0 {
                return Err(mismatch("coupling rows must read sum(a z) - k x >= 0"));
            }
            let mut item: Option<(VarId, f64)> = None;
            let mut covers = Vec::new();
            for (v, a) in &c.coeffs {
                if loc_index[v.0] != usize::MAX {
                    if *a < 0.0 {
                        return Err(mismatch("negative location coefficient in coupling row"));
                    }
                    covers.push((loc_index[v.0], *a));
                } else {
                    if item.is_some() || *a >= 0.0 {
                        return Err(mismatch("coupling row needs exactly one item with negative coefficient"));
                    }
                    item = Some((*v, -*a));
                }
            }
            let Some((var, threshold)) = item else {
                return Err(mismatch("coupling row without an item variable"));
            };
            if item_of[var.0] != usize::MAX {
                return Err(mismatch("item appears in more than one coupling row"));
            }
            item_of[var.0] = items.len();
            items.push(CoverageItem { var, weight: model.objective_coeff(var), threshold, covers });
        }
        for j in 0..n {
            if loc_index[j] != usize::MAX {
                if model.objective_coeff(VarId(j)) != 0.0 {
                    return Err(mismatch("objective must not weight location variables"));
                }
            } else if item_of[j] == usize::MAX {
                // Uncoupled variable: free to take its best value.
                item_of[j] = items.len();
                items.push(CoverageItem {
                    var: VarId(j),
                    weight: model.objective_coeff(VarId(j)),
                    threshold: 0.0,
                    covers: Vec::new(),
                });
            }
        }

        let mut by_location = vec![Vec::new(); locations.len()];
        for (ii, item) in items.iter().enumerate() {
            for (s, a) in &item.covers {
                by_location[*s].push((ii, *a));
            }
        }
        Ok(Self { locations, cardinality: card.rhs as usize, items, by_location })
    }

    pub fn num_locations(&self) -> usize {
        self.locations.len()
    }

    fn coverage_counts(&self, selected: &[bool]) -> Vec<f64> {
        let mut counts = vec![0.0; self.items.len()];
        for (s, on) in selected.iter().enumerate() {
            if *on {
                for (ii, a) in &self.by_location[s] {
                    counts[*ii] += a;
                }
            }
        }
        counts
    }

    fn covered(item: &CoverageItem, count: f64) -> bool {
        item.weight > 0.0 && count >= item.threshold - 1e-9
    }

    /// Objective of the best item assignment for a location selection.
    pub fn value(&self, selected: &[bool]) -> f64 {
        let counts = self.coverage_counts(selected);
        self.items
            .iter()
            .zip(&counts)
            .filter(|(it, c)| Self::covered(it, **c))
            .map(|(it, _)| it.weight)
            .sum()
    }

    /// Full model assignment for a location selection.
    pub fn assignment(&self, model: &MilpModel, selected: &[bool]) -> Vec<bool> {
        let mut out = vec![false; model.num_vars()];
        for (s, on) in selected.iter().enumerate() {
            out[self.locations[s].0] = *on;
        }
        let counts = self.coverage_counts(selected);
        for (it, c) in self.items.iter().zip(&counts) {
            out[it.var.0] = Self::covered(it, *c);
        }
        out
    }

    fn gain(&self, counts: &[f64], s: usize) -> f64 {
        self.by_location[s]
            .iter()
            .filter(|(ii, a)| {
                let it = &self.items[*ii];
                !Self::covered(it, counts[*ii]) && Self::covered(it, counts[*ii] + a)
            })
            .map(|(ii, _)| self.items[*ii].weight)
            .sum()
    }

    /// Greedy marginal-gain selection of `cardinality` locations. Ties go to
    /// the lowest location index.
    pub fn greedy(&self) -> Vec<bool> {
        let mut selected = vec![false; self.num_locations()];
        let mut counts = vec![0.0; self.items.len()];
        for _ in 0..self.cardinality.min(self.num_locations()) {
            let mut best: Option<(usize, f64)> = None;
            for s in 0..self.num_locations() {
                if selected[s] {
                    continue;
                }
                let g = self.gain(&counts, s);
                if best.map_or(true, |(_, bg)| g > bg + 1e-12) {
                    best = Some((s, g));
                }
            }
            let (s, _) = best.expect("location available");
            selected[s] = true;
            for (ii, a) in &self.by_location[s] {
                counts[*ii] += a;
            }
        }
        selected
    }

    /// Pairwise swap local search; applies the first improving swap found in
    /// index order until none remains. Never lowers the value.
    pub fn swap_improve(&self, selected: &mut [bool]) -> usize {
        let mut counts = self.coverage_counts(selected);
        let mut swaps = 0;
        let cap = 100_000;
        'outer: while swaps < cap {
            for out in 0..selected.len() {
                if !selected[out] {
                    continue;
                }
                for inn in 0..selected.len() {
                    if selected[inn] {
                        continue;
                    }
                    if self.swap_delta(&counts, out, inn) > 1e-9 {
                        for (ii, a) in &self.by_location[out] {
                            counts[*ii] -= a;
                        }
                        for (ii, a) in &self.by_location[inn] {
                            counts[*ii] += a;
                        }
                        selected[out] = false;
                        selected[inn] = true;
                        swaps += 1;
                        continue 'outer;
                    }
                }
            }
            break;
        }
        swaps
    }

    fn swap_delta(&self, counts: &[f64], out: usize, inn: usize) -> f64 {
        let mut touched: Vec<(usize, f64)> = Vec::new();
        for (ii, a) in &self.by_location[out] {
            touched.push((*ii, -a));
        }
        for (ii, a) in &self.by_location[inn] {
            touched.push((*ii, *a));
        }
        touched.sort_by_key(|(ii, _)| *ii);
        let mut delta = 0.0;
        let mut k = 0;
        while k < touched.len() {
            let ii = touched[k].0;
            let mut change = 0.0;
            while k < touched.len() && touched[k].0 == ii {
                change += touched[k].1;
                k += 1;
            }
            let it = &self.items[ii];
            let before = Self::covered(it, counts[ii]);
            let after = Self::covered(it, counts[ii] + change);
            if before != after {
                delta += if after { it.weight } else { -it.weight };
            }
        }
        delta
    }

    /// Upper bound on the value of any completion of a partial selection.
    /// `fixed` holds `Some(true)`/`Some(false)` for decided locations.
    /// Returns `None` when no completion can meet the cardinality.
    pub fn completion_bound(&self, fixed: &[Option<bool>]) -> Option<f64> {
        let ones = fixed.iter().filter(|f| **f == Some(true)).count();
        let free = fixed.iter().filter(|f| f.is_none()).count();
        if ones > self.cardinality || ones + free < self.cardinality {
            return None;
        }
        let remaining = self.cardinality - ones;
        let all: Vec<bool> = fixed.iter().map(|f| *f != Some(false)).collect();
        let mut bound = self.value(&all);
        if self.items.iter().all(CoverageItem::is_unit) {
            // Submodular case: current value plus the best `remaining`
            // singleton gains.
            let chosen: Vec<bool> = fixed.iter().map(|f| *f == Some(true)).collect();
            let counts = self.coverage_counts(&chosen);
            let mut gains: Vec<f64> = (0..fixed.len())
                .filter(|&s| fixed[s].is_none())
                .map(|s| self.gain(&counts, s))
                .collect();
            gains.sort_by(|a, b| b.total_cmp(a));
            let top: f64 = gains.iter().take(remaining).sum();
            bound = bound.min(self.value(&chosen) + top);
        }
        Some(bound)
    }

    pub(crate) fn best_free_location(&self, fixed: &[Option<bool>]) -> Option<usize> {
        let chosen: Vec<bool> = fixed.iter().map(|f| *f == Some(true)).collect();
        let counts = self.coverage_counts(&chosen);
        let mut best: Option<(usize, f64)> = None;
        for s in 0..fixed.len() {
            if fixed[s].is_some() {
                continue;
            }
            let g = self.gain(&counts, s);
            if best.map_or(true, |(_, bg)| g > bg + 1e-12) {
                best = Some((s, g));
            }
        }
        best.map(|(s, _)| s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Three locations, items covered by {0}, {0,1}, {2}.
    fn small() -> MilpModel {
        let mut m = MilpModel::new("cov");
        let z: Vec<VarId> = (0..3).map(|s| m.add_binary(format!("z{s}"))).collect();
        m.add_constraint("card", z.iter().map(|v| (*v, 1.0)), RowSense::Eq, 1.0);
        let covers = [vec![0], vec![0, 1], vec![2]];
        let weights = [1.0, 1.0, 3.0];
        for (i, cov) in covers.iter().enumerate() {
            let x = m.add_binary(format!("x{i}"));
            m.set_objective(x, weights[i]);
            let mut terms: Vec<(VarId, f64)> = cov.iter().map(|s| (z[*s], 1.0)).collect();
            terms.push((x, -1.0));
            m.add_constraint(format!("cov{i}"), terms, RowSense::Ge, 0.0);
        }
        m
    }

    #[test]
    fn detects_structure_and_values() {
        let m = small();
        let cs = CoverageStructure::detect(&m).unwrap();
        assert_eq!(cs.cardinality, 1);
        assert_eq!(cs.num_locations(), 3);
        assert_eq!(cs.value(&[true, false, false]), 2.0);
        assert_eq!(cs.value(&[false, false, true]), 3.0);
        let sel = cs.greedy();
        assert_eq!(sel, vec![false, false, true]);
        let a = cs.assignment(&m, &sel);
        assert!(m.is_feasible(&a));
        assert_eq!(m.objective_value(&a), 3.0);
    }

    #[test]
    fn rejects_non_coverage_model() {
        let mut m = MilpModel::new("x");
        let a = m.add_binary("a");
        m.add_constraint("le", [(a, 1.0)], RowSense::Le, 1.0);
        assert!(matches!(CoverageStructure::detect(&m), Err(MilpError::StructureMismatch(_))));
    }

    #[test]
    fn completion_bound_dominates_completions() {
        let cs = CoverageStructure::detect(&small()).unwrap();
        let b = cs.completion_bound(&[None, None, None]).unwrap();
        assert!(b >= 3.0);
        assert!(cs.completion_bound(&[Some(true), Some(true), None]).is_none());
        assert_eq!(cs.completion_bound(&[Some(false), None, Some(false)]), Some(1.0));
    }
}
