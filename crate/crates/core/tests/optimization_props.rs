mod common;

use binprog::{parse_mps, solve_exact, write_mps_string, SolveLimits};
use lasercon::access::{FeasibilityTensor, TensorVariant};
use lasercon::baselines::{best_walker, enumerate_patterns, generate_walker, sample_pairs, WalkerPattern};
use lasercon::formulations::{
    build_clsp, build_esp_subproblem, build_mclp, clsp_tree_from_scenario, solve_clsp, ClspNode, ClspTree, SolverMode,
    XDeclaration,
};
use lasercon::scenario::SlotGrid;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tensor(t: usize, s: usize, d: usize, bits: &[bool]) -> FeasibilityTensor {
    let mut w = FeasibilityTensor::new(t, s, d, TensorVariant::WPrime);
    let mut it = bits.iter().cycle();
    for ti in 0..t {
        for si in 0..s {
            for di in 0..d {
                w.set(ti, si, di, *it.next().unwrap());
            }
        }
    }
    w
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mclp_model_size(t in 1usize..5, s in 1usize..8, d in 1usize..5, bits in prop::collection::vec(any::<bool>(), 1..64)) {
        let p = s.min(2);
        let w = tensor(t, s, d, &bits);
        let (_, model) = build_mclp(w, vec![1.5; t * d], vec![1; t * d], p).unwrap();
        prop_assert_eq!(model.num_vars(), s + t * d);
        prop_assert_eq!(model.num_constraints(), 1 + t * d);
        let back = parse_mps(&write_mps_string(&model).unwrap()).unwrap();
        prop_assert_eq!(back.num_vars(), model.num_vars());
        prop_assert_eq!(back.num_constraints(), model.num_constraints());
    }

    #[test]
    fn esp_solution_is_conflict_free(seed in any::<u64>()) {
        use rand::Rng;
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let platforms = r.gen_range(1..=5);
        let mut cands = Vec::new();
        for d in 0..r.gen_range(1..=5) {
            for _ in 0..r.gen_range(0..=4) {
                let members: Vec<usize> = (0..platforms).filter(|_| r.gen_bool(0.5)).collect();
                if !members.is_empty() {
                    cands.push(esp_candidate(d, members, r.gen_range(-5.0..10.0)));
                }
            }
        }
        let (sub, model) = build_esp_subproblem(0, platforms, cands.clone());
        let sol = solve_exact(&model, &SolveLimits::default()).unwrap();
        let chosen = sub.decode(&sol.assignment);
        prop_assert!(sub.is_conflict_free(&chosen));
        let mut seen = vec![false; platforms];
        for &j in &chosen {
            for &p in &cands[j].slot.engagers {
                prop_assert!(!seen[p]);
                seen[p] = true;
            }
        }
    }

    #[test]
    fn walker_shape(o in 1usize..7, mult in 1usize..4, f_raw in 0usize..7, sma in 6800.0..8000.0f64, inc in 0.0..3.0f64) {
        let p = o * mult;
        let f = f_raw % o;
        let els = generate_walker(&WalkerPattern::new(p, o, f, sma, inc).unwrap());
        prop_assert_eq!(els.len(), p);
        prop_assert!(els.iter().all(|e| e.sma == sma && e.inc == inc && e.ecc == 0.0));
        let mut raans: Vec<f64> = els.iter().map(|e| e.raan).collect();
        raans.sort_by(f64::total_cmp);
        raans.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        prop_assert_eq!(raans.len(), o);
        for (k, r) in raans.iter().enumerate() {
            prop_assert!((r - 2.0 * std::f64::consts::PI * k as f64 / o as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn pattern_count_is_divisor_sum(p in 1usize..60) {
        let sigma: usize = (1..=p).filter(|o| p % o == 0).sum();
        prop_assert_eq!(enumerate_patterns(p).len(), sigma);
    }
}

fn esp_candidate(d: usize, engagers: Vec<usize>, reward: f64) -> lasercon::formulations::ScoredCandidate {
    use lasercon::ablation::DeltaV;
    use lasercon::access::CandidateSlot;
    use lasercon::astro::StateVector;
    use lasercon::reward::RewardBreakdown;
    let zero = StateVector::new(Default::default(), Default::default(), 0);
    lasercon::formulations::ScoredCandidate {
        slot: CandidateSlot { debris: d, step: 0, engagers, dv: DeltaV::zero(), resulting_state: zero, resulting_periapsis: 0.0 },
        terms: RewardBreakdown { alpha_dh: reward, ..Default::default() },
    }
}

#[test]
fn clsp_decodes_consistent_schedules() {
    let mut r = ChaCha8Rng::seed_from_u64(77);
    for case in 0..15 {
        let scn = common::random_micro_scenario(&mut r);
        let env = scn.environment();
        let tree = clsp_tree_from_scenario(&scn, &env, 20_000).unwrap();
        for decl in [XDeclaration::Compact, XDeclaration::Full] {
            let (inst, model) = build_clsp(tree.clone(), decl).unwrap();
            let (sol, raw) = solve_clsp(&inst, &model, SolverMode::Exact, &SolveLimits::default()).unwrap();
            assert!(model.is_feasible(&raw.assignment), "case {case}");
            assert_eq!(sol.slots.len(), scn.platform_count, "case {case}");
            let (ns, nd) = (tree.slots, tree.debris.len());
            for (d, path) in sol.paths.iter().enumerate() {
                assert_eq!(path.len(), tree.steps, "case {case}: path of debris {d} is cut");
                for (t, &node) in path.iter().enumerate() {
                    assert_eq!(tree.debris[d][node].step, t);
                    if t > 0 {
                        assert_eq!(tree.debris[d][node].parent, Some(path[t - 1]));
                    }
                }
            }
            for e in &sol.engagements {
                for &s in &e.slots {
                    assert!(sol.slots.contains(&s), "case {case}: engager {s} not placed");
                    assert!(raw.value(inst.y[(e.step * ns + s) * nd + e.debris]));
                }
            }
        }
    }
}

#[test]
fn clsp_without_engagements_is_zero() {
    let root = ClspNode { step: 0, parent: None, engagers: Vec::new(), reward: 0.0 };
    let chain = vec![
        root,
        ClspNode { step: 1, parent: Some(0), engagers: Vec::new(), reward: 0.0 },
        ClspNode { step: 2, parent: Some(1), engagers: Vec::new(), reward: 0.0 },
    ];
    let tree = ClspTree { slots: 2, steps: 3, platform_count: 1, debris: vec![chain] };
    let (inst, model) = build_clsp(tree, XDeclaration::Compact).unwrap();
    let (sol, raw) = solve_clsp(&inst, &model, SolverMode::Exact, &SolveLimits::default()).unwrap();
    assert_eq!(sol.objective, 0.0);
    assert_eq!(raw.gap, 0.0);
    assert!(sol.engagements.is_empty());
}

#[test]
fn compact_and_full_agree_on_illustrative_instance() {
    let tree = lasercon::formulations::illustrative_tree();
    let mut objectives = Vec::new();
    for decl in [XDeclaration::Compact, XDeclaration::Full] {
        let (inst, model) = build_clsp(tree.clone(), decl).unwrap();
        let (sol, _) = solve_clsp(&inst, &model, SolverMode::Exact, &SolveLimits::default()).unwrap();
        objectives.push(sol.objective);
        assert_eq!(sol.slots, vec![1, 2]);
    }
    assert_eq!(objectives[0], objectives[1]);
}

#[test]
fn walker_search_is_deterministic_and_complete() {
    let scn = common::micro_scenario();
    let env = scn.environment();
    let grid = SlotGrid { altitudes: vec![600.0, 621.863, 700.0], inclinations: vec![50.0, 60.0], raans: vec![0.0], arg_lats: vec![0.0] };
    let pairs = sample_pairs(&grid, scn.constants.r_earth, 4, 11);
    assert_eq!(pairs, sample_pairs(&grid, scn.constants.r_earth, 4, 11));
    assert_eq!(pairs.len(), 4);
    let patterns = enumerate_patterns(scn.platform_count);
    let (best, table) = best_walker(&scn, &env, &pairs, &patterns).unwrap();
    let (best2, table2) = best_walker(&scn, &env, &pairs, &patterns).unwrap();
    assert_eq!(best, best2);
    assert_eq!(table, table2);
    assert_eq!(table.len(), pairs.len() * patterns.len());
    assert!(table.iter().all(|w| w.score <= best.score));
}
