//! Walker-Delta reference constellations and the brute-force search over
//! patterns and (altitude, inclination) pairs.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::astro::OrbitElements;
use crate::formulations::{build_gating, build_mclp, mclp_rewards, FormulationError};
use crate::scenario::{build_slot_states, rng_stream, Environment, Scenario, SlotGrid, STREAM_WALKER_PAIRS};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("invalid Walker pattern {p}/{o}/{f}: {msg}")]
    InvalidPattern { p: usize, o: usize, f: usize, msg: String },
    #[error("no (sma, inc) pairs to evaluate")]
    NoPairs,
    #[error(transparent)]
    Formulation(#[from] FormulationError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkerPattern {
    pub p_total: usize,
    pub o_planes: usize,
    pub f_phase: usize,
    /// km
    pub sma: f64,
    /// rad
    pub inc: f64,
}

impl WalkerPattern {
    pub fn new(p_total: usize, o_planes: usize, f_phase: usize, sma: f64, inc: f64) -> Result<Self, BaselineError> {
        let bad = |msg: &str| BaselineError::InvalidPattern { p: p_total, o: o_planes, f: f_phase, msg: msg.into() };
        if p_total == 0 || o_planes == 0 || p_total % o_planes != 0 {
            return Err(bad("plane count must divide the satellite count"));
        }
        if f_phase >= o_planes {
            return Err(bad("phasing must be below the plane count"));
        }
        if !(sma.is_finite() && sma > 0.0) || !(0.0..=std::f64::consts::PI).contains(&inc) {
            return Err(bad("orbit size or inclination out of range"));
        }
        Ok(Self { p_total, o_planes, f_phase, sma, inc })
    }

    pub fn label(&self) -> String {
        format!("{}/{}/{}", self.p_total, self.o_planes, self.f_phase)
    }
}

/// Plane `k` sits at RAAN `360k/O`; satellite `j` in it at argument of
/// latitude `360j/(P/O) + 360Fk/P`.
pub fn generate_walker(pat: &WalkerPattern) -> Vec<OrbitElements> {
    let per_plane = pat.p_total / pat.o_planes;
    let mut out = Vec::with_capacity(pat.p_total);
    for k in 0..pat.o_planes {
        let raan = 360.0 * k as f64 / pat.o_planes as f64;
        for j in 0..per_plane {
            let u = 360.0 * j as f64 / per_plane as f64 + 360.0 * (pat.f_phase * k) as f64 / pat.p_total as f64;
            out.push(
                OrbitElements::new(pat.sma, 0.0, pat.inc, raan.to_radians(), 0.0, (u % 360.0).to_radians())
                    .expect("validated pattern"),
            );
        }
    }
    out
}

/// Every `(O, F)` with `O | P` and `0 ≤ F < O`.
pub fn enumerate_patterns(p_total: usize) -> Vec<(usize, usize)> {
    (1..=p_total).filter(|o| p_total % o == 0).flat_map(|o| (0..o).map(move |f| (o, f))).collect()
}

/// Up to `count` distinct (sma km, inc rad) pairs drawn from the slot grid.
pub fn sample_pairs(grid: &SlotGrid, r_earth: f64, count: usize, seed: u64) -> Vec<(f64, f64)> {
    let all: Vec<(f64, f64)> = grid
        .altitudes
        .iter()
        .flat_map(|&a| grid.inclinations.iter().map(move |&i| (r_earth + a, i.to_radians())))
        .collect();
    let mut rng = rng_stream(seed, STREAM_WALKER_PAIRS);
    let mut picks: Vec<usize> = sample(&mut rng, all.len(), count.min(all.len())).into_vec();
    picks.sort_unstable();
    picks.into_iter().map(|i| all[i]).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkerScore {
    pub pattern: WalkerPattern,
    pub score: f64,
}

/// Constellation configuration reward of fixed platform orbits: the MCLP
/// objective with every platform's location variable fixed to one.
pub fn score_constellation(scn: &Scenario, env: &Environment, platforms: &[OrbitElements]) -> Result<f64, BaselineError> {
    let states = build_slot_states(platforms, &scn.grid, &scn.constants);
    let (_, wp) = build_gating(scn, &states, &env.debris_states)?;
    let (rewards, thresholds) = mclp_rewards(scn, env)?;
    let (inst, _) = build_mclp(wp, rewards, thresholds, platforms.len())?;
    Ok(inst.score_placement(&(0..platforms.len()).collect::<Vec<_>>()))
}

/// Scores every pattern at every pair; returns the best and the full table
/// in evaluation order (pair-major).
pub fn best_walker(
    scn: &Scenario,
    env: &Environment,
    pairs: &[(f64, f64)],
    patterns: &[(usize, usize)],
) -> Result<(WalkerScore, Vec<WalkerScore>), BaselineError> {
    if pairs.is_empty() || patterns.is_empty() {
        return Err(BaselineError::NoPairs);
    }
    let p = scn.platform_count;
    let configs: Vec<WalkerPattern> = pairs
        .iter()
        .flat_map(|&(sma, inc)| patterns.iter().map(move |&(o, f)| WalkerPattern::new(p, o, f, sma, inc)))
        .collect::<Result<_, _>>()?;
    let table: Vec<WalkerScore> = configs
        .par_iter()
        .map(|pat| Ok(WalkerScore { pattern: *pat, score: score_constellation(scn, env, &generate_walker(pat))? }))
        .collect::<Result<_, BaselineError>>()?;
    let key = |w: &WalkerScore| (w.pattern.sma, w.pattern.inc, w.pattern.o_planes, w.pattern.f_phase);
    let best = table
        .iter()
        .min_by(|a, b| {
            b.score.total_cmp(&a.score).then_with(|| {
                let (ka, kb) = (key(a), key(b));
                ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(ka.2.cmp(&kb.2)).then(ka.3.cmp(&kb.3))
            })
        })
        .cloned()
        .expect("non-empty table");
    Ok((best, table))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_counts() {
        assert_eq!(enumerate_patterns(10).len(), 18);
        assert_eq!(enumerate_patterns(1), vec![(1, 0)]);
        assert_eq!(enumerate_patterns(6).len(), 12);
    }

    #[test]
    fn four_two_one() {
        let pat = WalkerPattern::new(4, 2, 1, 7000.0, 0.9).unwrap();
        let els = generate_walker(&pat);
        let deg: Vec<(f64, f64)> = els.iter().map(|e| (e.raan.to_degrees().round(), e.anomaly.to_degrees().round())).collect();
        assert_eq!(deg, vec![(0.0, 0.0), (0.0, 180.0), (180.0, 90.0), (180.0, 270.0)]);
    }

    #[test]
    fn rejects_bad_patterns() {
        assert!(WalkerPattern::new(10, 3, 0, 7000.0, 0.5).is_err());
        assert!(WalkerPattern::new(10, 5, 5, 7000.0, 0.5).is_err());
    }
}
