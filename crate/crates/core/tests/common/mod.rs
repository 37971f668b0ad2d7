#![allow(dead_code)]

use std::path::Path;

use lasercon::ablation::{FluenceMode, LaserSpec};
use lasercon::astro::{AstroConstants, StateVector};
use lasercon::formulations::ScoredCandidate;
use lasercon::scenario::{preset_text, Scenario, ScenarioConfig};
use nalgebra::Vector3;
use rand::Rng;
use serde_json::{json, Value};

pub fn common_laser() -> LaserSpec {
    LaserSpec {
        d_eff: 1.5,
        t_tot: 1.0,
        b_sq: 2.0,
        zeta: 1.27,
        wavelength: 355e-9,
        c_m: 99.0,
        eta: 0.5,
        prf: 56.0,
        engage_duration: 10.0,
        cool_duration: 120.0,
        u_min: 175.0,
        u_max: 325.0,
        fluence_mode: FluenceMode::ConstantFluence { phi_opt: 8500.0 },
    }
}

pub fn random_energy_laser<R: Rng>(rng: &mut R) -> LaserSpec {
    LaserSpec {
        d_eff: rng.gen_range(0.5..4.0),
        t_tot: rng.gen_range(0.5..1.0),
        b_sq: rng.gen_range(1.0..3.0),
        zeta: rng.gen_range(1.0..2.5),
        wavelength: rng.gen_range(300e-9..1100e-9),
        c_m: rng.gen_range(10.0..120.0),
        eta: rng.gen_range(0.1..1.0),
        prf: rng.gen_range(1.0..100.0),
        engage_duration: rng.gen_range(1.0..60.0),
        cool_duration: rng.gen_range(0.0..200.0),
        u_min: 1.0,
        u_max: 5000.0,
        fluence_mode: FluenceMode::ConstantEnergy { pulse_energy: rng.gen_range(10.0..1e4) },
    }
}

/// Point at radius `r` in a random direction inside a cone around `axis`.
pub fn point_near<R: Rng>(rng: &mut R, axis: Vector3<f64>, spread: f64, r: f64) -> Vector3<f64> {
    let jitter = Vector3::new(rng.gen_range(-spread..spread), rng.gen_range(-spread..spread), rng.gen_range(-spread..spread));
    (axis.normalize() + jitter).normalize() * r
}

pub fn state_at(r: Vector3<f64>) -> StateVector {
    StateVector::new(r, Vector3::zeros(), 0)
}

/// Independent line-of-sight plus range test.
pub fn los_oracle(p: &Vector3<f64>, d: &Vector3<f64>, eps: f64, u_min: f64, u_max: f64, k: &AstroConstants) -> bool {
    let shell = k.r_earth + eps;
    let (rs, rd) = (p.norm(), d.norm());
    if rs <= shell || rd <= shell {
        return false;
    }
    let u = (p - d).norm();
    (rs * rs - shell * shell).sqrt() + (rd * rd - shell * shell).sqrt() - u > 0.0 && u >= u_min && u <= u_max
}

/// Best total reward over all conflict-free choices of at most one
/// candidate per debris.
pub fn esp_brute_force(candidates: &[ScoredCandidate]) -> f64 {
    let mut debris: Vec<usize> = candidates.iter().map(|c| c.slot.debris).collect();
    debris.sort_unstable();
    debris.dedup();
    fn go(i: usize, debris: &[usize], cands: &[ScoredCandidate], used: u64) -> f64 {
        if i == debris.len() {
            return 0.0;
        }
        let mut best = go(i + 1, debris, cands, used);
        for c in cands.iter().filter(|c| c.slot.debris == debris[i]) {
            let mask = c.slot.engagers.iter().fold(0u64, |m, &p| m | 1 << p);
            if mask & used == 0 {
                best = best.max(c.reward() + go(i + 1, debris, cands, used | mask));
            }
        }
        best
    }
    go(0, &debris, candidates, 0)
}

pub fn micro_config() -> ScenarioConfig {
    ScenarioConfig::from_json(preset_text("micro_mission").unwrap(), "micro_mission").unwrap()
}

pub fn micro_scenario() -> Scenario {
    Scenario::resolve(micro_config(), Path::new(".")).unwrap()
}

/// Co-orbital micro scenario: at most six slots, four steps, three debris,
/// each debris trailing some slot by a few degrees so engagements exist.
pub fn random_micro_scenario<R: Rng>(rng: &mut R) -> Scenario {
    let steps = rng.gen_range(2..=4);
    resolve_value(random_micro_value(rng, steps))
}

pub fn resolve_value(v: Value) -> Scenario {
    let cfg = ScenarioConfig::from_json(&v.to_string(), "random-micro").unwrap();
    Scenario::resolve(cfg, Path::new(".")).unwrap()
}

pub fn random_micro_value<R: Rng>(rng: &mut R, steps: usize) -> Value {
    let mut v: Value = serde_json::from_str(preset_text("micro_mission").unwrap()).unwrap();
    let raans: Vec<f64> = if rng.gen_bool(0.5) { vec![0.0] } else { vec![0.0, 90.0] };
    let per_plane = if raans.len() == 1 { rng.gen_range(2..=6) } else { rng.gen_range(1..=3) };
    let lats: Vec<f64> = (0..per_plane).map(|j| 12.0 * j as f64).collect();
    let n_slots = raans.len() * lats.len();
    let n_debris = rng.gen_range(1..=3);
    let objects: Vec<Value> = (0..n_debris)
        .map(|i| {
            let raan = raans[rng.gen_range(0..raans.len())];
            let lat = lats[rng.gen_range(0..lats.len())] - rng.gen_range(1.5..2.6);
            let mut o = json!({
                "id": format!("d{i}"),
                "sma_km": 7000.0 + rng.gen_range(-3.0..3.0),
                "ecc": 0.0,
                "inc_deg": 50.0,
                "raan_deg": raan,
                "argp_deg": 0.0,
                "anomaly_deg": (lat + 360.0) % 360.0,
            });
            if rng.gen_bool(0.5) {
                o["rho_kg_m2"] = json!(rng.gen_range(0.2..3.0));
            } else {
                o["mass_kg"] = json!(rng.gen_range(1.0..500.0));
            }
            o
        })
        .collect();
    v["steps"] = json!(steps);
    v["slot_grid"]["raan_deg"] = json!(raans);
    v["slot_grid"]["arg_lat_deg"] = json!(lats);
    v["debris"][0]["objects"] = json!(objects);
    v["assets"] = json!([]);
    v["platform_count"] = json!(rng.gen_range(1..=n_slots.min(2)));
    v
}
