//! Myopic engagement loop and mission metrics.

use std::fs;
use std::io;
use std::path::Path;

use binprog::SolveLimits;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::access::periapsis_or_zero;
use crate::astro::{OrbitElements, StateVector};
use crate::formulations::{
    debris_candidates, mclp_from_scenario, solve_esp, solve_mclp, EspMethod, Fate, FormulationError, Placement, ScoredCandidate,
    SolverMode, Track,
};
use crate::reward::RewardBreakdown;
use crate::scenario::{build_slot_states, Environment, Scenario};

pub const METRICS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SchedulerError {
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DebrisRecord {
    pub id: String,
    pub track: Track,
    /// Periapsis radius at the epoch, km.
    pub periapsis_epoch: f64,
    pub periapsis_now: f64,
    pub engaged_count: usize,
    pub deorbited_at: Option<usize>,
    pub ejected: bool,
}

impl DebrisRecord {
    pub fn is_active(&self) -> bool {
        self.deorbited_at.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngagementEvent {
    pub step: usize,
    pub debris: usize,
    pub debris_id: String,
    /// Platform indices, ascending.
    pub engagers: Vec<usize>,
    /// m/s, ECI
    pub dv: [f64; 3],
    pub periapsis_before: f64,
    pub periapsis_after: f64,
    pub terms: RewardBreakdown,
}

impl EngagementEvent {
    pub fn reward(&self) -> f64 {
        self.terms.total()
    }

    pub fn dv_magnitude(&self) -> f64 {
        self.dv.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// A step whose subproblem was not closed by the exact search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverNote {
    pub step: usize,
    pub method: EspMethod,
    pub candidates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissionState {
    /// Last step processed.
    pub step: usize,
    pub platforms: Vec<OrbitElements>,
    pub debris: Vec<DebrisRecord>,
    pub v: f64,
    pub step_values: Vec<f64>,
    pub events: Vec<EngagementEvent>,
    pub notes: Vec<SolverNote>,
}

#[derive(Clone, Copy, Debug)]
pub struct SchedulerOptions {
    pub limits: SolveLimits,
    /// Candidate count above which a step is solved greedily.
    pub max_exact_candidates: usize,
}

impl SchedulerOptions {
    pub fn from_scenario(scn: &Scenario) -> Self {
        Self { limits: scn.config.solver.limits(), max_exact_candidates: scn.config.solver.esp_exact_max_candidates }
    }
}

/// Runs the mission with platforms held on `platforms`. Engagements happen
/// at steps `0..T-1`; each one relocates the debris for the following step.
pub fn run_mission(
    scn: &Scenario,
    env: &Environment,
    platforms: &[OrbitElements],
    opts: &SchedulerOptions,
) -> Result<MissionState, SchedulerError> {
    let k = &scn.constants;
    let platform_states = build_slot_states(platforms, &scn.grid, k);
    let mut debris: Vec<DebrisRecord> = scn
        .debris
        .iter()
        .zip(&env.debris_states)
        .map(|(b, hist)| {
            let h = periapsis_or_zero(&hist[0], k);
            DebrisRecord {
                id: b.id.clone(),
                track: Track::initial(b.elements),
                periapsis_epoch: h,
                periapsis_now: h,
                engaged_count: 0,
                deorbited_at: None,
                ejected: false,
            }
        })
        .collect();
    let mut state = MissionState {
        step: 0,
        platforms: platforms.to_vec(),
        debris: Vec::new(),
        v: 0.0,
        step_values: Vec::new(),
        events: Vec::new(),
        notes: Vec::new(),
    };

    for t in 0..scn.grid.steps - 1 {
        state.step = t;
        let pool: Vec<(usize, StateVector)> = platform_states.iter().enumerate().map(|(p, h)| (p, h[t])).collect();
        let per_debris: Vec<Vec<ScoredCandidate>> = debris
            .par_iter()
            .enumerate()
            .map(|(d, rec)| {
                if !rec.is_active() || pool.is_empty() {
                    return Ok(Vec::new());
                }
                debris_candidates(scn, env, d, &rec.track, t, &pool)
            })
            .collect::<Result<_, FormulationError>>()?;
        let candidates: Vec<ScoredCandidate> = per_debris.into_iter().flatten().collect();
        if candidates.is_empty() {
            state.step_values.push(0.0);
            continue;
        }
        let outcome = solve_esp(t, platforms.len(), &candidates, opts.max_exact_candidates, &opts.limits)?;
        if outcome.method != EspMethod::Exact {
            state.notes.push(SolverNote { step: t, method: outcome.method, candidates: candidates.len() });
        }
        for &j in &outcome.chosen {
            let c = &candidates[j];
            let rec = &mut debris[c.slot.debris];
            let before = rec.periapsis_now;
            rec.engaged_count += 1;
            rec.periapsis_now = c.slot.resulting_periapsis;
            match Track::after_impulse(&c.slot.resulting_state, scn) {
                Fate::Active(tr) => rec.track = tr,
                Fate::Deorbited(tr) => {
                    rec.track = tr;
                    rec.deorbited_at = Some(t);
                }
                Fate::Ejected => {
                    rec.deorbited_at = Some(t);
                    rec.ejected = true;
                }
            }
            state.events.push(EngagementEvent {
                step: t,
                debris: c.slot.debris,
                debris_id: rec.id.clone(),
                engagers: c.slot.engagers.clone(),
                dv: [c.slot.dv.vec.x, c.slot.dv.vec.y, c.slot.dv.vec.z],
                periapsis_before: before,
                periapsis_after: c.slot.resulting_periapsis,
                terms: c.terms,
            });
        }
        state.v += outcome.objective;
        state.step_values.push(outcome.objective);
    }
    state.step = scn.grid.steps - 1;
    state.debris = debris;
    Ok(state)
}

/// Places platforms on the slot grid by MCLP, then runs the mission there.
pub fn design_and_schedule(
    scn: &Scenario,
    env: &Environment,
    mode: SolverMode,
    opts: &SchedulerOptions,
) -> Result<(Placement, MissionState), SchedulerError> {
    let (inst, model) = mclp_from_scenario(scn, env)?;
    let placement = solve_mclp(&inst, &model, mode, &opts.limits)?;
    let platforms: Vec<OrbitElements> = placement.slots.iter().map(|&s| scn.slots[s]).collect();
    let state = run_mission(scn, env, &platforms, opts)?;
    Ok((placement, state))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub schema_version: u32,
    /// Debris remediation capacity: total reward collected.
    pub v: f64,
    pub engagements: usize,
    /// Distinct debris engaged at least once.
    pub engaged: usize,
    pub deorbited: usize,
    pub ejected: usize,
    /// Periapsis reduction summed over engaged debris that stayed in orbit, km.
    pub nudging_km: f64,
    pub reward_terms: RewardBreakdown,
    pub solver_notes: usize,
}

pub fn derive_metrics(state: &MissionState) -> Metrics {
    let engaged = state.debris.iter().filter(|d| d.engaged_count > 0).count();
    let deorbited = state.debris.iter().filter(|d| d.deorbited_at.is_some() && !d.ejected).count();
    let ejected = state.debris.iter().filter(|d| d.ejected).count();
    let nudging_km = state
        .debris
        .iter()
        .filter(|d| d.engaged_count > 0 && d.deorbited_at.is_none())
        .fold(0.0, |acc, d| acc + d.periapsis_epoch - d.periapsis_now);
    let reward_terms = state.events.iter().fold(RewardBreakdown::default(), |acc, e| RewardBreakdown {
        c0: acc.c0 + e.terms.c0,
        c: acc.c + e.terms.c,
        alpha_dh: acc.alpha_dh + e.terms.alpha_dh,
        beta_m: acc.beta_m + e.terms.beta_m,
    });
    Metrics {
        schema_version: METRICS_SCHEMA_VERSION,
        v: state.v,
        engagements: state.events.len(),
        engaged,
        deorbited,
        ejected,
        nudging_km,
        reward_terms,
        solver_notes: state.notes.len(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimelineRow {
    pub step: usize,
    /// Distinct debris engaged so far.
    pub cum_engagements: usize,
    pub cum_deorbits: usize,
}

pub fn timeline(state: &MissionState, steps: usize) -> Vec<TimelineRow> {
    let mut first = vec![usize::MAX; state.debris.len()];
    for e in &state.events {
        first[e.debris] = first[e.debris].min(e.step);
    }
    let mut engaged_at = vec![0usize; steps];
    let mut deorbit_at = vec![0usize; steps];
    for &f in first.iter().filter(|&&f| f < steps) {
        engaged_at[f] += 1;
    }
    for d in &state.debris {
        if let Some(s) = d.deorbited_at.filter(|&s| s < steps) {
            deorbit_at[s] += 1;
        }
    }
    let (mut ce, mut cd) = (0, 0);
    (0..steps)
        .map(|step| {
            ce += engaged_at[step];
            cd += deorbit_at[step];
            TimelineRow { step, cum_engagements: ce, cum_deorbits: cd }
        })
        .collect()
}

#[derive(Serialize)]
struct EngagementRow<'a> {
    step: usize,
    debris: &'a str,
    engagers: String,
    dv_mps: f64,
    h_before_km: f64,
    h_after_km: f64,
    c0: f64,
    c: f64,
    alpha_dh: f64,
    beta_m: f64,
    reward: f64,
}

pub fn write_engagements_csv(path: &Path, events: &[EngagementEvent]) -> Result<(), SchedulerError> {
    let label = path.display().to_string();
    let mut w = csv::Writer::from_path(path).map_err(|source| SchedulerError::Csv { path: label.clone(), source })?;
    for e in events {
        let engagers = e.engagers.iter().map(usize::to_string).collect::<Vec<_>>().join(";");
        w.serialize(EngagementRow {
            step: e.step,
            debris: &e.debris_id,
            engagers,
            dv_mps: e.dv_magnitude(),
            h_before_km: e.periapsis_before,
            h_after_km: e.periapsis_after,
            c0: e.terms.c0,
            c: e.terms.c,
            alpha_dh: e.terms.alpha_dh,
            beta_m: e.terms.beta_m,
            reward: e.reward(),
        })
        .map_err(|source| SchedulerError::Csv { path: label.clone(), source })?;
    }
    if events.is_empty() {
        // Header only, so empty runs still produce a well-formed file.
        drop(w);
        fs::write(
            path,
            "step,debris,engagers,dv_mps,h_before_km,h_after_km,c0,c,alpha_dh,beta_m,reward\n",
        )
        .map_err(|source| SchedulerError::Io { path: label.clone(), source })?;
        return Ok(());
    }
    w.flush().map_err(|source| SchedulerError::Io { path: label, source })
}

pub fn write_timeline_csv(path: &Path, rows: &[TimelineRow]) -> Result<(), SchedulerError> {
    let label = path.display().to_string();
    let mut w = csv::Writer::from_path(path).map_err(|source| SchedulerError::Csv { path: label.clone(), source })?;
    for r in rows {
        w.serialize(r).map_err(|source| SchedulerError::Csv { path: label.clone(), source })?;
    }
    w.flush().map_err(|source| SchedulerError::Io { path: label, source })
}

pub fn write_metrics_json(path: &Path, metrics: &Metrics) -> Result<(), SchedulerError> {
    let text = serde_json::to_string_pretty(metrics).expect("metrics serialize") + "\n";
    fs::write(path, text).map_err(|source| SchedulerError::Io { path: path.display().to_string(), source })
}
