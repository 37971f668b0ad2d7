mod common;

use binprog::{
    parse_mps, solve_exact, solve_heuristic, write_mps_string, CoverageStructure, MilpModel, RowSense,
    SolveLimits, StructureHint, VarId,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arb_model() -> impl Strategy<Value = MilpModel> {
    (1usize..8, 0usize..5, any::<u64>()).prop_flat_map(|(n, rows, seed)| {
        let coeff = prop_oneof![(-50i32..50).prop_map(|k| k as f64 * 0.125), -1e3f64..1e3];
        (
            prop::collection::vec(coeff.clone(), n),
            prop::collection::vec((prop::collection::vec(coeff.clone(), n), 0u8..3, coeff), rows),
            Just(seed),
        )
            .prop_map(move |(obj, rows, seed)| {
                let mut m = MilpModel::new(format!("m{}", seed % 1000));
                let vars: Vec<VarId> = (0..n).map(|i| m.add_binary(format!("column_number_{i}"))).collect();
                for (v, c) in vars.iter().zip(obj) {
                    m.set_objective(*v, c);
                }
                for (r, (coeffs, sense, rhs)) in rows.into_iter().enumerate() {
                    let sense = [RowSense::Le, RowSense::Ge, RowSense::Eq][sense as usize];
                    m.add_constraint(format!("row{r}"), vars.iter().copied().zip(coeffs), sense, rhs);
                }
                if seed % 2 == 0 {
                    m.set_objective_scale(1e6);
                    m.set_metadata("origin", "proptest");
                }
                m
            })
    })
}

proptest! {
    #[test]
    fn mps_round_trip_is_identity(model in arb_model()) {
        let text = write_mps_string(&model).unwrap();
        let back = parse_mps(&text).unwrap();
        prop_assert_eq!(back, model);
    }

    #[test]
    fn exact_bound_dominates_and_assignment_feasible(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = common::random_model(&mut rng, 8);
        let sol = solve_exact(&model, &SolveLimits::default()).unwrap();
        prop_assert!(sol.bound >= sol.objective_value);
        if sol.is_solved() {
            prop_assert!(model.is_feasible(&sol.assignment));
        }
    }

    #[test]
    fn swap_never_decreases(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = common::coverage_model(&mut rng, 10, 3, 15, 2);
        let cs = CoverageStructure::detect(&model).unwrap();
        let mut sel = cs.greedy();
        let before = cs.value(&sel);
        cs.swap_improve(&mut sel);
        prop_assert!(cs.value(&sel) >= before);
        prop_assert_eq!(sel.iter().filter(|b| **b).count(), 3);
    }
}

#[test]
fn greedy_meets_approximation_ratio_on_unit_thresholds() {
    let ratio = 1.0 - (-1.0f64).exp();
    for seed in 0..40u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = common::coverage_model(&mut rng, 12, 3, 20, 1);
        let exact = solve_exact(&model, &SolveLimits::default()).unwrap();
        let cs = CoverageStructure::detect(&model).unwrap();
        let greedy = cs.value(&cs.greedy());
        assert!(greedy >= ratio * exact.objective_value - 1e-9, "seed {seed}");
        let heur = solve_heuristic(&model, StructureHint::CoverageCardinality).unwrap();
        assert!(heur.objective_value >= greedy);
        assert!(heur.bound >= exact.objective_value - 1e-6);
        assert!(model.is_feasible(&heur.assignment));
    }
}

#[test]
fn selecting_every_location_is_exact() {
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = common::coverage_model(&mut rng, 6, 6, 12, 3);
        let exact = solve_exact(&model, &SolveLimits::default()).unwrap();
        let heur = solve_heuristic(&model, StructureHint::CoverageCardinality).unwrap();
        assert_eq!(heur.objective_value, exact.objective_value);
    }
}
