//! Reward terms for relocating a debris object, conjunction screening
//! against valuable assets, and the placement-phase reward.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::access::CandidateSlot;
use crate::astro::{elements_to_state, propagate_dt, state_to_elements, AstroConstants, OrbitElements, StateVector, TimeGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardError {
    #[error("conjunction window ends at step {t_max}, after the debris' closest approach at step {tca}")]
    WindowAfterTca { t_max: usize, tca: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Conjunction incentive while scheduling.
    pub g0: f64,
    /// Conjunction incentive in the placement problem.
    pub g0_mclp: f64,
    /// Look-ahead penalty magnitude.
    pub g: f64,
    /// Penalty factor for raising periapsis.
    pub g_h: f64,
    /// Deorbit radius threshold, km from the Earth's centre.
    pub h_star: f64,
    /// Extra steps checked by the look-ahead.
    pub tau_lookahead: usize,
    /// Steps `[t_min, t_max]` during which engaging a conjunction debris pays
    /// the incentive. `None` means from the start up to the closest approach.
    pub window: Option<(usize, usize)>,
    /// Mass normalizer, kg. Resolved to the heaviest debris when absent.
    pub m_max: Option<f64>,
    /// Per-debris windows (by debris index) that take precedence over
    /// `window`. Filled in when a scenario is resolved.
    #[serde(skip)]
    pub debris_windows: BTreeMap<usize, (usize, usize)>,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            g0: 1e4,
            g0_mclp: 1e6,
            g: 1e6,
            g_h: 1e6,
            h_star: 6378.137 + 100.0,
            tau_lookahead: 0,
            window: None,
            m_max: None,
            debris_windows: BTreeMap::new(),
        }
    }
}

impl RewardConfig {
    pub fn validate(&self, r_earth: f64) -> Vec<String> {
        let mut errs = Vec::new();
        for (name, v) in [("g0", self.g0), ("g0_mclp", self.g0_mclp), ("g", self.g), ("g_h", self.g_h)] {
            if !(v.is_finite() && v > 0.0) {
                errs.push(format!("reward.{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !v.is_finite() {
                errs.push(format!("reward.{name} must be finite"));
            }
        }
        if !(self.h_star.is_finite() && self.h_star > r_earth) {
            errs.push(format!("reward.h_star is a radius and must exceed {r_earth} km, got {}", self.h_star));
        }
        for (lo, hi) in self.window.iter().chain(self.debris_windows.values()) {
            if lo > hi {
                errs.push(format!("reward window start {lo} is after its end {hi}"));
            }
        }
        if let Some(m) = self.m_max {
            if !(m.is_finite() && m > 0.0) {
                errs.push(format!("reward.m_max must be positive, got {m}"));
            }
        }
        errs
    }

    pub fn m_max_or(&self, fallback: f64) -> f64 {
        self.m_max.unwrap_or(fallback)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValuableAsset {
    pub id: String,
    pub elements: OrbitElements,
    /// km
    pub sphere_radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjunctionReport {
    pub debris: usize,
    pub asset: usize,
    pub tca_step: usize,
    pub miss_distance: f64,
    pub conjunction: bool,
}

/// Closest grid-sampled approach of every (debris, asset) pair.
pub fn screen_conjunctions(
    debris: &[Vec<StateVector>],
    assets: &[ValuableAsset],
    asset_states: &[Vec<StateVector>],
) -> Vec<ConjunctionReport> {
    let mut out = Vec::with_capacity(debris.len() * assets.len());
    for (d, dh) in debris.iter().enumerate() {
        for (a, (asset, ah)) in assets.iter().zip(asset_states).enumerate() {
            let (tca_step, miss_distance) = dh
                .iter()
                .zip(ah)
                .enumerate()
                .map(|(t, (x, y))| (t, (x.r - y.r).norm()))
                .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
            out.push(ConjunctionReport { debris: d, asset: a, tca_step, miss_distance, conjunction: miss_distance < asset.sphere_radius });
        }
    }
    out
}

/// Earliest closest-approach step among the conjunctions of debris `d`.
pub fn first_conjunction(d: usize, reports: &[ConjunctionReport]) -> Option<usize> {
    reports.iter().filter(|r| r.debris == d && r.conjunction).map(|r| r.tca_step).min()
}

/// Incentive window for debris `d` whose first conjunction is at `tca`.
pub fn window_for(d: usize, tca: usize, cfg: &RewardConfig) -> Result<(usize, usize), RewardError> {
    match cfg.debris_windows.get(&d).copied().or(cfg.window) {
        Some((_, hi)) if hi > tca => Err(RewardError::WindowAfterTca { t_max: hi, tca }),
        Some(w) => Ok(w),
        None => Ok((0, tca)),
    }
}

pub fn c0_term_with(g0: f64, d: usize, t: usize, reports: &[ConjunctionReport], cfg: &RewardConfig) -> Result<f64, RewardError> {
    let Some(tca) = first_conjunction(d, reports) else {
        return Ok(0.0);
    };
    let (lo, hi) = window_for(d, tca, cfg)?;
    Ok(if (lo..=hi).contains(&t) { g0 } else { 0.0 })
}

pub fn c0_term(d: usize, t: usize, reports: &[ConjunctionReport], cfg: &RewardConfig) -> Result<f64, RewardError> {
    c0_term_with(cfg.g0, d, t, reports, cfg)
}

/// −G when the relocated debris, coasting without J2 from its engagement
/// step, passes within an asset's sphere during the next `τ + 1` steps.
pub fn lookahead_penalty(
    candidate: &CandidateSlot,
    assets: &[ValuableAsset],
    asset_states: &[Vec<StateVector>],
    cfg: &RewardConfig,
    grid: &TimeGrid,
    k: &AstroConstants,
) -> f64 {
    if assets.is_empty() || candidate.is_idle() {
        return 0.0;
    }
    let Ok(el) = state_to_elements(&candidate.resulting_state, k) else {
        return 0.0;
    };
    let kep = k.keplerian();
    let first = candidate.step + 1;
    let last = (first + cfg.tau_lookahead).min(grid.steps - 1);
    for t in first..=last {
        let dt = (t - candidate.step) as f64 * grid.step_size;
        let pos = elements_to_state(&propagate_dt(&el, dt, &kep), &kep, t).r;
        for (asset, hist) in assets.iter().zip(asset_states) {
            if (pos - hist[t].r).norm() < asset.sphere_radius {
                return -cfg.g;
            }
        }
    }
    0.0
}

pub fn delta_h_term(h_before: f64, h_after: f64, cfg: &RewardConfig) -> f64 {
    let gamma = if h_after > h_before { -cfg.g_h } else { 1.0 };
    (gamma * (cfg.h_star / h_after).powi(3)).min(1.0)
}

pub fn mass_term(mass: f64, engaged: bool, m_max: f64) -> f64 {
    if engaged {
        mass / m_max
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub c0: f64,
    pub c: f64,
    pub alpha_dh: f64,
    pub beta_m: f64,
}

impl RewardBreakdown {
    pub fn total(&self) -> f64 {
        self.c0 + self.c + self.alpha_dh + self.beta_m
    }
}

/// Inputs shared by every candidate of one debris at one step.
pub struct RewardContext<'a> {
    pub cfg: &'a RewardConfig,
    pub reports: &'a [ConjunctionReport],
    pub assets: &'a [ValuableAsset],
    pub asset_states: &'a [Vec<StateVector>],
    pub grid: &'a TimeGrid,
    pub k: &'a AstroConstants,
    pub periapsis_before: f64,
    pub mass: f64,
    pub m_max: f64,
}

pub fn full_reward(candidate: &CandidateSlot, ctx: &RewardContext) -> Result<RewardBreakdown, RewardError> {
    if candidate.is_idle() {
        return Ok(RewardBreakdown::default());
    }
    Ok(RewardBreakdown {
        c0: c0_term(candidate.debris, candidate.step, ctx.reports, ctx.cfg)?,
        c: lookahead_penalty(candidate, ctx.assets, ctx.asset_states, ctx.cfg, ctx.grid, ctx.k),
        alpha_dh: ctx.cfg.alpha * delta_h_term(ctx.periapsis_before, candidate.resulting_periapsis, ctx.cfg),
        beta_m: ctx.cfg.beta * mass_term(ctx.mass, true, ctx.m_max),
    })
}

pub fn mclp_reward(d: usize, t: usize, reports: &[ConjunctionReport], cfg: &RewardConfig, mass: f64, m_max: f64) -> Result<f64, RewardError> {
    Ok(c0_term_with(cfg.g0_mclp, d, t, reports, cfg)? + mass_term(mass, true, m_max))
}
