#![allow(dead_code)]

use binprog::{MilpModel, RowSense, VarId};
use rand::Rng;

/// Dense random binary program with small integer data.
pub fn random_model<R: Rng>(rng: &mut R, n: usize) -> MilpModel {
    let mut m = MilpModel::new("rand");
    let vars: Vec<VarId> = (0..n).map(|i| m.add_binary(format!("v{i}"))).collect();
    for &v in &vars {
        m.set_objective(v, rng.gen_range(-4..=12) as f64);
    }
    let rows = rng.gen_range(1..=6);
    for r in 0..rows {
        let mut coeffs: Vec<(VarId, f64)> = Vec::new();
        for &v in &vars {
            if rng.gen_bool(0.6) {
                coeffs.push((v, rng.gen_range(-3..=5) as f64));
            }
        }
        let sense = match rng.gen_range(0..6) {
            0 => RowSense::Ge,
            1 => RowSense::Eq,
            _ => RowSense::Le,
        };
        let total: f64 = coeffs.iter().map(|(_, a)| a.max(0.0)).sum();
        let rhs = match sense {
            RowSense::Le => (total * rng.gen_range(0.2..0.7)).round(),
            RowSense::Ge => (total * rng.gen_range(0.0..0.3)).round(),
            RowSense::Eq => rng.gen_range(0..=3) as f64,
        };
        m.add_constraint(format!("r{r}"), coeffs, sense, rhs);
    }
    m
}

/// Best objective over all 2^n assignments, or None if none is feasible.
pub fn enumerate(model: &MilpModel) -> Option<f64> {
    let n = model.num_vars();
    assert!(n <= 20);
    let mut best: Option<f64> = None;
    let mut a = vec![false; n];
    for mask in 0u32..(1 << n) {
        for (j, slot) in a.iter_mut().enumerate() {
            *slot = mask >> j & 1 == 1;
        }
        if model.is_feasible(&a) {
            let v = model.objective_value(&a);
            if best.map_or(true, |b| v > b) {
                best = Some(v);
            }
        }
    }
    best
}

/// Maximal-coverage model: `s` locations choose exactly `p`; each item is
/// covered when at least `threshold` of its eligible locations are chosen.
pub fn coverage_model<R: Rng>(rng: &mut R, s: usize, p: usize, items: usize, max_threshold: usize) -> MilpModel {
    let mut m = MilpModel::new("cover");
    let z: Vec<VarId> = (0..s).map(|i| m.add_binary(format!("z{i}"))).collect();
    m.add_constraint("card", z.iter().map(|&v| (v, 1.0)), RowSense::Eq, p as f64);
    for k in 0..items {
        let x = m.add_binary(format!("x{k}"));
        m.set_objective(x, rng.gen_range(1..=20) as f64);
        let eligible: Vec<VarId> = z.iter().copied().filter(|_| rng.gen_bool(0.25)).collect();
        let threshold = rng.gen_range(1..=max_threshold).min(eligible.len().max(1));
        let mut coeffs: Vec<(VarId, f64)> = eligible.iter().map(|&v| (v, 1.0)).collect();
        coeffs.push((x, -(threshold as f64)));
        m.add_constraint(format!("cov{k}"), coeffs, RowSense::Ge, 0.0);
    }
    m
}
