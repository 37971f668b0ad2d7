mod common;

use binprog::{solve_exact, solve_exact_with, BoundMode, MilpError, SolveLimits, SolveStatus};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn hundred_random_models_match_enumeration() {
    let limits = SolveLimits::default();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = common::random_model(&mut rng, 12);
        let sol = solve_exact(&model, &limits).unwrap();
        match common::enumerate(&model) {
            None => assert_eq!(sol.status, SolveStatus::Infeasible, "seed {seed}"),
            Some(best) => {
                assert_eq!(sol.status, SolveStatus::Optimal, "seed {seed}");
                assert_eq!(sol.objective_value, best, "seed {seed}");
                assert_eq!(sol.gap, 0.0);
                assert!(model.is_feasible(&sol.assignment));
            }
        }
    }
}

#[test]
fn solves_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let model = common::random_model(&mut rng, 14);
    let a = solve_exact(&model, &SolveLimits::default()).unwrap();
    let b = solve_exact(&model, &SolveLimits::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn combinatorial_bound_matches_enumeration_on_coverage() {
    for seed in 0..30u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let model = common::coverage_model(&mut rng, 8, 3, 10, 2);
        let best = common::enumerate(&model).unwrap();
        for mode in [BoundMode::LpRelaxation, BoundMode::Combinatorial] {
            let sol = solve_exact_with(&model, &SolveLimits::default(), mode).unwrap();
            assert_eq!(sol.objective_value, best, "seed {seed} {mode:?}");
            assert_eq!(sol.status, SolveStatus::Optimal);
        }
    }
}

#[test]
fn node_cap_reports_incumbent_and_valid_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let model = common::coverage_model(&mut rng, 16, 4, 40, 2);
    let best = solve_exact(&model, &SolveLimits::default()).unwrap().objective_value;
    let limits = SolveLimits { node_cap: 2, ..SolveLimits::default() };
    match solve_exact(&model, &limits) {
        Ok(sol) => assert_eq!(sol.objective_value, best),
        Err(MilpError::LimitsExceeded { incumbent, bound }) => {
            assert!(bound >= best - 1e-9);
            if let Some(inc) = incumbent {
                assert!(inc.objective_value <= best);
                assert!(model.is_feasible(&inc.assignment));
            }
        }
        Err(e) => panic!("{e}"),
    }
}
