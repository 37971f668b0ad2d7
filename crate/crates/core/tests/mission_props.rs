mod common;

use std::path::Path;

use lasercon::formulations::SolverMode;
use lasercon::scenario::{rng_stream, sample_debris_field, AltitudeHistogram, Scenario, ScenarioConfig, SlotGrid, STREAM_DEBRIS};
use lasercon::scheduler::{design_and_schedule, run_mission, SchedulerOptions};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn histogram() -> AltitudeHistogram {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/small_debris_histogram.csv");
    AltitudeHistogram::parse_csv(&std::fs::read_to_string(&path).unwrap(), "histogram").unwrap()
}

fn chi_square_p(observed: &[f64], expected: &[f64]) -> f64 {
    let (mut stat, mut df) = (0.0, 0usize);
    for (o, e) in observed.iter().zip(expected) {
        if *e > 0.0 {
            stat += (o - e).powi(2) / e;
            df += 1;
        }
    }
    ChiSquared::new((df - 1) as f64).unwrap().sf(stat)
}

#[test]
fn sampled_altitudes_follow_the_histogram() {
    let hist = histogram();
    let k = lasercon::astro::AstroConstants::default();
    let n = 40_000;
    let field = sample_debris_field(&hist, n, &mut rng_stream(5, STREAM_DEBRIS), 1.0, 1.0, "x", &k);
    // Merge sparse bins so every expected count is at least 5.
    let total: f64 = hist.bins.iter().map(|b| b.freq).sum();
    let mut edges = Vec::new();
    let mut expected = Vec::new();
    let mut acc = 0.0;
    for b in &hist.bins {
        acc += b.freq / total * n as f64;
        if acc >= 5.0 {
            edges.push(b.bin_hi_km);
            expected.push(acc);
            acc = 0.0;
        }
    }
    *expected.last_mut().unwrap() += acc;
    *edges.last_mut().unwrap() = f64::INFINITY;
    let mut observed = vec![0.0; edges.len()];
    for d in &field {
        let alt = d.elements.sma - k.r_earth;
        observed[edges.iter().position(|&e| alt < e).unwrap()] += 1.0;
    }
    let p = chi_square_p(&observed, &expected);
    assert!(p > 1e-3, "altitude chi-square p = {p}");

    let mut inc = vec![0.0; 18];
    for d in &field {
        inc[((d.elements.inc.to_degrees() / 10.0) as usize).min(17)] += 1.0;
    }
    let p = chi_square_p(&inc, &[n as f64 / 18.0; 18]);
    assert!(p > 1e-3, "inclination chi-square p = {p}");
}

#[test]
fn same_seed_same_field() {
    let a = Scenario::from_preset("small_debris").unwrap();
    let b = Scenario::from_preset("small_debris").unwrap();
    assert_eq!(a.debris, b.debris);
    assert_eq!(a.debris.len(), 820);
    assert!(a.debris.iter().all(|d| d.resolvable() && d.elements.sma > a.constants.r_earth));
    let mut cfg = ScenarioConfig::preset("small_debris").unwrap();
    cfg.seed = 1;
    let c = Scenario::resolve(cfg, Path::new(".")).unwrap();
    assert_ne!(a.debris, c.debris);
}

#[test]
fn presets_resolve() {
    for name in lasercon::scenario::preset_names() {
        let scn = Scenario::from_preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(scn.slots.len(), SlotGrid::from_config(&scn.config.slot_grid).len(), "{name}");
        assert!(!scn.debris.is_empty(), "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn slot_catalog_is_axis_product(na in 1usize..4, ni in 1usize..4, nr in 1usize..5, nu in 1usize..5) {
        let grid = SlotGrid {
            altitudes: (0..na).map(|i| 400.0 + 50.0 * i as f64).collect(),
            inclinations: (0..ni).map(|i| 10.0 + 30.0 * i as f64).collect(),
            raans: (0..nr).map(|i| 40.0 * i as f64).collect(),
            arg_lats: (0..nu).map(|i| 30.0 * i as f64).collect(),
        };
        prop_assert_eq!(grid.elements(&Default::default()).len(), na * ni * nr * nu);
    }

    #[test]
    fn histogram_field_is_reproducible(seed in any::<u64>(), count in 1usize..200) {
        let hist = histogram();
        let k = lasercon::astro::AstroConstants::default();
        let a = sample_debris_field(&hist, count, &mut rng_stream(seed, STREAM_DEBRIS), 1.0, 1.0, "d", &k);
        let b = sample_debris_field(&hist, count, &mut rng_stream(seed, STREAM_DEBRIS), 1.0, 1.0, "d", &k);
        prop_assert_eq!(&a, &b);
        for d in &a {
            prop_assert!(d.resolvable());
            prop_assert!(d.elements.ecc == 0.0 && (0.0..std::f64::consts::PI).contains(&d.elements.inc));
        }
    }
}

#[test]
fn mission_invariants() {
    let mut r = ChaCha8Rng::seed_from_u64(31);
    for case in 0..12 {
        let mut v = common::random_micro_value(&mut r, 25);
        v["schedule_with_w_prime"] = json!(case % 2 == 0);
        let scn = common::resolve_value(v);
        let env = scn.environment();
        let opts = SchedulerOptions::from_scenario(&scn);
        let (placement, state) = design_and_schedule(&scn, &env, SolverMode::Exact, &opts).unwrap();

        let sum: f64 = state.events.iter().map(|e| e.reward()).sum();
        assert!((sum - state.v).abs() <= 1e-6 * (1 + state.events.len()) as f64, "case {case}: {sum} vs {}", state.v);
        let step_sum: f64 = state.step_values.iter().sum();
        assert!((step_sum - state.v).abs() <= 1e-9 * state.v.abs().max(1.0));

        for e in &state.events {
            assert!(!e.engagers.is_empty());
            let rec = &state.debris[e.debris];
            if let Some(gone) = rec.deorbited_at {
                assert!(e.step <= gone, "case {case}: debris {} engaged after deorbit", e.debris);
            }
            if scn.config.schedule_with_w_prime {
                assert!(e.periapsis_after <= e.periapsis_before, "case {case}: periapsis raised");
            }
        }
        let mut per_step = std::collections::BTreeMap::new();
        for e in &state.events {
            for &p in &e.engagers {
                assert!(per_step.insert((e.step, p), e.debris).is_none(), "case {case}: platform {p} double-booked");
            }
        }

        let platforms: Vec<_> = placement.slots.iter().map(|&s| scn.slots[s]).collect();
        let again = run_mission(&scn, &env, &platforms, &opts).unwrap();
        assert_eq!(again.events, state.events, "case {case}: not deterministic");
        assert_eq!(again.v, state.v);
    }
}
