//! The three optimization models: joint location-scheduling (CLSP),
//! placement only (MCLP) and the per-step engagement subproblem (ESP).

use std::collections::BTreeMap;

use binprog::{
    solve_exact, solve_exact_with, solve_heuristic, BoundMode, MilpError, MilpModel, MilpSolution, RowSense,
    SolveLimits, SolveStatus, StructureHint, VarId,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ablation::{apply_engagement, engagement_dv};
use crate::access::{build_w, build_w_prime, engageable, enumerate_candidate_slots, periapsis_or_zero, AccessError, CandidateSlot, FeasibilityTensor, TensorVariant};
use crate::astro::{elements_to_state, propagate_dt, state_to_elements, AstroError, OrbitElements, StateVector};
use crate::reward::{full_reward, mclp_reward, RewardBreakdown, RewardContext, RewardError};
use crate::scenario::{Environment, Scenario};

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error("instance too large: {what} is {measured}, limit {limit}")]
    InstanceTooLarge { what: &'static str, measured: usize, limit: usize },
    #[error("inconsistent instance: {0}")]
    Shape(String),
    #[error(transparent)]
    Access(#[from] AccessError),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error(transparent)]
    Astro(#[from] AstroError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMode {
    #[default]
    Exact,
    Heuristic,
}

/// Factor that makes rewards integral at micro-unit resolution, or 1 when
/// the scaled objective could lose precision.
pub fn reward_scale(rewards: impl IntoIterator<Item = f64>) -> f64 {
    let total: f64 = rewards.into_iter().map(f64::abs).sum();
    if total * 1e6 < 2f64.powi(50) {
        1e6
    } else {
        1.0
    }
}

fn scaled(r: f64, scale: f64) -> f64 {
    if scale == 1.0 {
        r
    } else {
        (r * scale).round()
    }
}

/// Orbit of a debris object since its last engagement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub elements: OrbitElements,
    pub epoch_step: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Fate {
    Active(Track),
    /// Periapsis at or below the threshold.
    Deorbited(Track),
    /// Post-engagement state is unbound.
    Ejected,
}

impl Track {
    pub fn initial(elements: OrbitElements) -> Self {
        Self { elements, epoch_step: 0 }
    }

    pub fn state_at(&self, step: usize, scn: &Scenario) -> StateVector {
        let dt = step.saturating_sub(self.epoch_step) as f64 * scn.grid.step_size;
        elements_to_state(&propagate_dt(&self.elements, dt, &scn.constants), &scn.constants, step)
    }

    pub fn periapsis(&self) -> f64 {
        self.elements.periapsis_radius()
    }

    /// Outcome of an impulse that left the debris in `after`.
    pub fn after_impulse(after: &StateVector, scn: &Scenario) -> Fate {
        match state_to_elements(after, &scn.constants) {
            Ok(elements) => {
                let track = Track { elements, epoch_step: after.epoch_step };
                if periapsis_or_zero(after, &scn.constants) <= scn.reward.h_star {
                    Fate::Deorbited(track)
                } else {
                    Fate::Active(track)
                }
            }
            Err(_) => Fate::Ejected,
        }
    }
}

/// A scored engagement option for one debris.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredCandidate {
    pub slot: CandidateSlot,
    pub terms: RewardBreakdown,
}

impl ScoredCandidate {
    pub fn reward(&self) -> f64 {
        self.terms.total()
    }
}

/// Engagement options for debris `d` at `step` from a pool of
/// `(id, platform state)` pairs: every engageable subset up to the engager
/// cap, scored. The no-engagement option is implicit.
pub fn debris_candidates(
    scn: &Scenario,
    env: &Environment,
    d: usize,
    track: &Track,
    step: usize,
    pool: &[(usize, StateVector)],
) -> Result<Vec<ScoredCandidate>, FormulationError> {
    let k = &scn.constants;
    let params = scn.access_params(d);
    let spec = scn.laser_for(d);
    let body = &scn.debris[d];
    let state = track.state_at(step, scn);
    let before = periapsis_or_zero(&state, k);
    let mut usable = Vec::new();
    for (id, p) in pool {
        if !engageable(p, &state, &params, k) {
            continue;
        }
        if scn.config.schedule_with_w_prime {
            let solo = apply_engagement(&state, &engagement_dv(spec, body, p, &state).map_err(AccessError::from)?);
            if periapsis_or_zero(&solo, k) > before {
                continue;
            }
        }
        usable.push((*id, *p));
    }
    if usable.is_empty() {
        return Ok(Vec::new());
    }
    let ctx = RewardContext {
        cfg: &scn.reward,
        reports: &env.reports,
        assets: &scn.assets,
        asset_states: &env.asset_states,
        grid: &scn.grid,
        k,
        periapsis_before: before,
        mass: body.effective_mass(),
        m_max: scn.m_max(),
    };
    enumerate_candidate_slots(d, body, &state, step, &usable, scn.engager_cap, spec, k)?
        .into_iter()
        .filter(|c| !c.is_idle())
        .map(|slot| Ok(ScoredCandidate { terms: full_reward(&slot, &ctx)?, slot }))
        .collect()
}

/// W and W′ for arbitrary platform trajectories, honouring each debris'
/// laser profile.
pub fn build_gating(
    scn: &Scenario,
    platforms: &[Vec<StateVector>],
    debris: &[Vec<StateVector>],
) -> Result<(FeasibilityTensor, FeasibilityTensor), FormulationError> {
    let steps = scn.grid.steps;
    let mut w = FeasibilityTensor::new(steps, platforms.len(), debris.len(), TensorVariant::W);
    let mut wp = FeasibilityTensor::new(steps, platforms.len(), debris.len(), TensorVariant::WPrime);
    for (li, spec) in scn.lasers.iter().enumerate() {
        let members: Vec<usize> = (0..debris.len()).filter(|&d| scn.debris_laser[d] == li).collect();
        if members.is_empty() || platforms.is_empty() {
            continue;
        }
        let hist: Vec<Vec<StateVector>> = members.iter().map(|&d| debris[d].clone()).collect();
        let bodies: Vec<_> = members.iter().map(|&d| scn.debris[d].clone()).collect();
        let params = scn.access_params(members[0]);
        let sub_w = build_w(platforms, &hist, &params, &scn.constants)?;
        let sub_wp = build_w_prime(&sub_w, platforms, &hist, &bodies, spec, &scn.constants)?;
        for t in 0..steps {
            for s in 0..platforms.len() {
                for (j, &d) in members.iter().enumerate() {
                    w.set(t, s, d, sub_w.get(t, s, j));
                    wp.set(t, s, d, sub_wp.get(t, s, j));
                }
            }
        }
    }
    Ok((w, wp))
}

/// Placement problem data. Rewards and thresholds are indexed `t·D + d`.
#[derive(Clone, Debug)]
pub struct MclpInstance {
    pub gating: FeasibilityTensor,
    pub rewards: Vec<f64>,
    pub thresholds: Vec<usize>,
    pub platform_count: usize,
    pub z: Vec<VarId>,
    pub x: Vec<VarId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub slots: Vec<usize>,
    /// Constellation configuration reward.
    pub pi: f64,
    pub status: String,
    pub gap: f64,
}

/// MCLP model: `Σ_s W′_tsd z_s ≥ S_td x_td`, `Σ z = P`, maximize `Σ R_td x_td`.
pub fn build_mclp(
    gating: FeasibilityTensor,
    rewards: Vec<f64>,
    thresholds: Vec<usize>,
    platform_count: usize,
) -> Result<(MclpInstance, MilpModel), FormulationError> {
    let (steps, slots, debris) = (gating.steps, gating.slots, gating.debris);
    if rewards.len() != steps * debris || thresholds.len() != steps * debris {
        return Err(FormulationError::Shape("MCLP rewards/thresholds must have T·D entries".into()));
    }
    if thresholds.contains(&0) {
        return Err(FormulationError::Shape("coverage thresholds must be at least 1".into()));
    }
    let scale = reward_scale(rewards.iter().copied());
    let mut m = MilpModel::new("mclp");
    m.set_objective_scale(scale);
    let z: Vec<VarId> = (0..slots).map(|s| m.add_binary(format!("z_{s}"))).collect();
    let mut x = Vec::with_capacity(steps * debris);
    for t in 0..steps {
        for d in 0..debris {
            let v = m.add_binary(format!("x_{t}_{d}"));
            m.set_objective(v, scaled(rewards[t * debris + d], scale));
            x.push(v);
        }
    }
    for t in 0..steps {
        for d in 0..debris {
            let i = t * debris + d;
            let terms = (0..slots)
                .filter(|&s| gating.get(t, s, d))
                .map(|s| (z[s], 1.0))
                .chain(std::iter::once((x[i], -(thresholds[i] as f64))));
            m.add_constraint(format!("cover_{t}_{d}"), terms, RowSense::Ge, 0.0);
        }
    }
    m.add_constraint("cardinality", z.iter().map(|&v| (v, 1.0)), RowSense::Eq, platform_count as f64);
    Ok((MclpInstance { gating, rewards, thresholds, platform_count, z, x }, m))
}

impl MclpInstance {
    pub fn slots(&self) -> usize {
        self.gating.slots
    }

    /// Reward collected by a fixed set of slots.
    pub fn score_placement(&self, chosen: &[usize]) -> f64 {
        let (steps, debris) = (self.gating.steps, self.gating.debris);
        let mut total = 0.0;
        for t in 0..steps {
            for d in 0..debris {
                let i = t * debris + d;
                let cover = chosen.iter().filter(|&&s| self.gating.get(t, s, d)).count();
                if cover >= self.thresholds[i] && self.rewards[i] > 0.0 {
                    total += self.rewards[i];
                }
            }
        }
        total
    }

    pub fn decode(&self, sol: &MilpSolution) -> Placement {
        self.decode_assignment(&sol.assignment, &format!("{:?}", sol.status), sol.gap)
    }

    /// Placement from a raw assignment, e.g. one read back from an external solver.
    pub fn decode_assignment(&self, assignment: &[bool], status: &str, gap: f64) -> Placement {
        let slots: Vec<usize> = self.z.iter().enumerate().filter(|(_, v)| assignment[v.0]).map(|(s, _)| s).collect();
        Placement { pi: self.score_placement(&slots), slots, status: status.to_string(), gap }
    }
}

/// Placement rewards and coverage thresholds, indexed `t·D + d`.
pub fn mclp_rewards(scn: &Scenario, env: &Environment) -> Result<(Vec<f64>, Vec<usize>), FormulationError> {
    let nd = scn.debris.len();
    let mut rewards = Vec::with_capacity(scn.grid.steps * nd);
    let mut thresholds = Vec::with_capacity(scn.grid.steps * nd);
    for t in 0..scn.grid.steps {
        for (d, body) in scn.debris.iter().enumerate() {
            rewards.push(mclp_reward(d, t, &env.reports, &scn.reward, body.effective_mass(), scn.m_max())?);
            thresholds.push(scn.coverage_thresholds[d]);
        }
    }
    Ok((rewards, thresholds))
}

/// MCLP over the scenario's slot grid, gated by W′.
pub fn mclp_from_scenario(scn: &Scenario, env: &Environment) -> Result<(MclpInstance, MilpModel), FormulationError> {
    let (_, wp) = build_gating(scn, &env.slot_states, &env.debris_states)?;
    let (rewards, thresholds) = mclp_rewards(scn, env)?;
    build_mclp(wp, rewards, thresholds, scn.platform_count)
}

/// Solves an MCLP model; the heuristic path is greedy plus swaps.
pub fn solve_mclp(
    inst: &MclpInstance,
    model: &MilpModel,
    mode: SolverMode,
    limits: &SolveLimits,
) -> Result<Placement, FormulationError> {
    if inst.platform_count > inst.slots() {
        return Err(FormulationError::Shape(format!(
            "cannot place {} platforms on {} slots",
            inst.platform_count,
            inst.slots()
        )));
    }
    let sol = match mode {
        SolverMode::Exact => match solve_exact_with(model, limits, BoundMode::Combinatorial) {
            Ok(sol) => sol,
            Err(MilpError::LimitsExceeded { incumbent: Some(inc), .. }) => *inc,
            Err(e) => return Err(e.into()),
        },
        SolverMode::Heuristic => solve_heuristic(model, StructureHint::CoverageCardinality)?,
    };
    Ok(inst.decode(&sol))
}

/// One per-step engagement subproblem.
#[derive(Clone, Debug)]
pub struct EspSubproblem {
    pub step: usize,
    pub platforms: usize,
    pub candidates: Vec<ScoredCandidate>,
    /// One variable per candidate.
    pub x: Vec<VarId>,
    /// `(platform, debris)` engagement variables.
    pub y: BTreeMap<(usize, usize), VarId>,
}

/// ESP model over the given candidates: each platform engages at most one
/// debris (29), a slot needs its whole engager set (30), each debris takes at
/// most one slot (31).
pub fn build_esp_subproblem(step: usize, platforms: usize, candidates: Vec<ScoredCandidate>) -> (EspSubproblem, MilpModel) {
    let scale = reward_scale(candidates.iter().map(ScoredCandidate::reward));
    let mut m = MilpModel::new(format!("esp_{step}"));
    m.set_objective_scale(scale);
    let mut y = BTreeMap::new();
    for c in &candidates {
        for &p in &c.slot.engagers {
            y.entry((p, c.slot.debris)).or_insert_with(|| m.add_binary(format!("y_{p}_{}", c.slot.debris)));
        }
    }
    let x: Vec<VarId> = candidates
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let v = m.add_binary(format!("x_{}_{j}", c.slot.debris));
            m.set_objective(v, scaled(c.reward(), scale));
            v
        })
        .collect();
    for p in 0..platforms {
        let terms: Vec<(VarId, f64)> = y.range((p, 0)..(p + 1, 0)).map(|(_, v)| (*v, 1.0)).collect();
        if !terms.is_empty() {
            m.add_constraint(format!("platform_{p}"), terms, RowSense::Le, 1.0);
        }
    }
    for (j, c) in candidates.iter().enumerate() {
        let terms = std::iter::once((x[j], c.slot.engagers.len() as f64))
            .chain(c.slot.engagers.iter().map(|p| (y[&(*p, c.slot.debris)], -1.0)));
        m.add_constraint(format!("link_{j}"), terms, RowSense::Le, 0.0);
    }
    let mut by_debris: BTreeMap<usize, Vec<(VarId, f64)>> = BTreeMap::new();
    for (j, c) in candidates.iter().enumerate() {
        by_debris.entry(c.slot.debris).or_default().push((x[j], 1.0));
    }
    for (d, terms) in by_debris {
        m.add_constraint(format!("one_slot_{d}"), terms, RowSense::Le, 1.0);
    }
    (EspSubproblem { step, platforms, candidates, x, y }, m)
}

impl EspSubproblem {
    pub fn decode(&self, assignment: &[bool]) -> Vec<usize> {
        self.x.iter().enumerate().filter(|(_, v)| assignment[v.0]).map(|(j, _)| j).collect()
    }

    pub fn value(&self, chosen: &[usize]) -> f64 {
        chosen.iter().map(|&j| self.candidates[j].reward()).sum()
    }

    /// No platform fires twice and no debris takes two slots.
    pub fn is_conflict_free(&self, chosen: &[usize]) -> bool {
        let mut platforms = vec![false; self.platforms];
        let mut debris = std::collections::BTreeSet::new();
        for &j in chosen {
            let c = &self.candidates[j].slot;
            if !debris.insert(c.debris) {
                return false;
            }
            for &p in &c.engagers {
                if std::mem::replace(&mut platforms[p], true) {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EspMethod {
    Exact,
    /// Exact search hit its limits; best incumbent applied.
    Incumbent,
    Greedy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EspOutcome {
    /// Indices into the candidate list, ascending.
    pub chosen: Vec<usize>,
    pub objective: f64,
    pub method: EspMethod,
}

/// Highest reward first, skipping anything that conflicts with an earlier
/// pick; non-positive candidates are never taken.
pub fn greedy_esp(candidates: &[ScoredCandidate], platforms: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..candidates.len()).filter(|&j| candidates[j].reward() > 0.0).collect();
    order.sort_by(|&a, &b| candidates[b].reward().total_cmp(&candidates[a].reward()).then(a.cmp(&b)));
    let mut busy = vec![false; platforms];
    let mut done = std::collections::BTreeSet::new();
    let mut chosen = Vec::new();
    for j in order {
        let c = &candidates[j].slot;
        if done.contains(&c.debris) || c.engagers.iter().any(|&p| busy[p]) {
            continue;
        }
        done.insert(c.debris);
        for &p in &c.engagers {
            busy[p] = true;
        }
        chosen.push(j);
    }
    chosen.sort_unstable();
    chosen
}

/// Solves the step's subproblem. Candidates with non-positive reward are
/// dropped (idle always scores zero), then debris linked through shared
/// platforms are solved together, one component at a time.
pub fn solve_esp(
    step: usize,
    platforms: usize,
    candidates: &[ScoredCandidate],
    max_exact: usize,
    limits: &SolveLimits,
) -> Result<EspOutcome, FormulationError> {
    let useful: Vec<usize> = (0..candidates.len()).filter(|&j| candidates[j].reward() > 0.0).collect();
    if useful.len() > max_exact {
        let chosen = greedy_esp(candidates, platforms);
        let objective = chosen.iter().map(|&j| candidates[j].reward()).sum();
        return Ok(EspOutcome { chosen, objective, method: EspMethod::Greedy });
    }
    // Union-find over platforms; each candidate joins its engagers.
    let mut parent: Vec<usize> = (0..platforms).collect();
    fn find(parent: &mut [usize], a: usize) -> usize {
        let mut r = a;
        while parent[r] != r {
            r = parent[r];
        }
        let mut c = a;
        while parent[c] != r {
            let next = parent[c];
            parent[c] = r;
            c = next;
        }
        r
    }
    // Debris also tie their candidates together.
    let mut debris_root: BTreeMap<usize, usize> = BTreeMap::new();
    for &j in &useful {
        let c = &candidates[j].slot;
        let first = c.engagers[0];
        for &p in &c.engagers[1..] {
            let (a, b) = (find(&mut parent, first), find(&mut parent, p));
            parent[a] = b;
        }
        if let Some(&other) = debris_root.get(&c.debris) {
            let (a, b) = (find(&mut parent, first), find(&mut parent, other));
            parent[a] = b;
        } else {
            debris_root.insert(c.debris, first);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &j in &useful {
        let root = find(&mut parent, candidates[j].slot.engagers[0]);
        groups.entry(root).or_default().push(j);
    }
    let mut chosen = Vec::new();
    let mut method = EspMethod::Exact;
    for members in groups.into_values() {
        let local: Vec<ScoredCandidate> = members.iter().map(|&j| candidates[j].clone()).collect();
        if local.len() == 1 {
            chosen.push(members[0]);
            continue;
        }
        let (sub, model) = build_esp_subproblem(step, platforms, local);
        let sol = match solve_exact(&model, limits) {
            Ok(sol) => sol,
            Err(MilpError::LimitsExceeded { incumbent: Some(inc), .. }) => {
                method = EspMethod::Incumbent;
                *inc
            }
            Err(MilpError::LimitsExceeded { incumbent: None, .. }) => {
                method = EspMethod::Incumbent;
                let greedy = greedy_esp(&sub.candidates, platforms);
                chosen.extend(greedy.into_iter().map(|j| members[j]));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        if sol.status != SolveStatus::Optimal && method == EspMethod::Exact {
            method = EspMethod::Incumbent;
        }
        chosen.extend(sub.decode(&sol.assignment).into_iter().map(|j| members[j]));
    }
    chosen.sort_unstable();
    let objective = chosen.iter().map(|&j| candidates[j].reward()).sum();
    Ok(EspOutcome { chosen, objective, method })
}

/// A node of one debris' relocation tree: the orbit the debris occupies at
/// `step`, reached from `parent` through the engagement `engagers` (slot
/// ids; empty for the no-engagement orbit) worth `reward`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClspNode {
    pub step: usize,
    pub parent: Option<usize>,
    pub engagers: Vec<usize>,
    pub reward: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClspTree {
    pub slots: usize,
    pub steps: usize,
    pub platform_count: usize,
    /// Per debris; node 0 is the root at step 0 and children follow their
    /// parents.
    pub debris: Vec<Vec<ClspNode>>,
}

impl ClspTree {
    pub fn node_count(&self) -> usize {
        self.debris.iter().map(Vec::len).sum()
    }

    pub fn validate(&self) -> Result<(), FormulationError> {
        for (d, nodes) in self.debris.iter().enumerate() {
            let bad = |msg: String| Err(FormulationError::Shape(format!("debris {d}: {msg}")));
            match nodes.first() {
                Some(root) if root.step == 0 && root.parent.is_none() => {}
                _ => return bad("tree must start with a root at step 0".into()),
            }
            for (i, n) in nodes.iter().enumerate().skip(1) {
                let Some(p) = n.parent.filter(|&p| p < i) else {
                    return bad(format!("node {i} must follow its parent"));
                };
                if nodes[p].step + 1 != n.step || n.step >= self.steps {
                    return bad(format!("node {i} is not one step after its parent"));
                }
                if n.engagers.iter().any(|&s| s >= self.slots) || n.engagers.windows(2).any(|w| w[0] >= w[1]) {
                    return bad(format!("node {i} has invalid engagers"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XDeclaration {
    /// Relocation variables only along tree edges.
    #[default]
    Compact,
    /// Every pair of same-debris nodes in consecutive steps; pairs that are
    /// not tree edges carry a prohibitive negative reward.
    Full,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClspArc {
    pub debris: usize,
    pub step: usize,
    pub from: usize,
    pub to: usize,
    pub var: VarId,
    pub feasible: bool,
}

#[derive(Clone, Debug)]
pub struct ClspInstance {
    pub tree: ClspTree,
    pub z: Vec<VarId>,
    /// Indexed `(t·S + s)·D + d`.
    pub y: Vec<VarId>,
    pub w: Vec<bool>,
    pub arcs: Vec<ClspArc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClspEngagement {
    pub step: usize,
    pub debris: usize,
    pub slots: Vec<usize>,
    pub reward: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClspSolution {
    pub slots: Vec<usize>,
    /// Node ids visited by each debris, one per step.
    pub paths: Vec<Vec<usize>>,
    pub engagements: Vec<ClspEngagement>,
    pub objective: f64,
}

pub fn build_clsp(tree: ClspTree, decl: XDeclaration) -> Result<(ClspInstance, MilpModel), FormulationError> {
    tree.validate()?;
    let (ns, nt, nd) = (tree.slots, tree.steps, tree.debris.len());
    let w_index = |t: usize, s: usize, d: usize| (t * ns + s) * nd + d;
    let mut w = vec![false; nt * ns * nd];
    for (d, nodes) in tree.debris.iter().enumerate() {
        for n in nodes.iter().skip(1) {
            for &s in &n.engagers {
                w[w_index(n.step - 1, s, d)] = true;
            }
        }
    }
    let penalty = -(1.0 + tree.debris.iter().flatten().map(|n| n.reward.abs()).sum::<f64>());
    let scale = reward_scale(tree.debris.iter().flatten().map(|n| n.reward).chain([penalty]));

    let mut m = MilpModel::new("clsp");
    m.set_objective_scale(scale);
    let z: Vec<VarId> = (0..ns).map(|s| m.add_binary(format!("z_{s}"))).collect();
    let mut y = Vec::with_capacity(nt * ns * nd);
    for t in 0..nt {
        for s in 0..ns {
            for d in 0..nd {
                y.push(m.add_binary(format!("y_{t}_{s}_{d}")));
            }
        }
    }
    let mut arcs = Vec::new();
    for (d, nodes) in tree.debris.iter().enumerate() {
        for t in 0..nt.saturating_sub(1) {
            let here: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].step == t).collect();
            let next: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].step == t + 1).collect();
            for &i in &here {
                for &j in &next {
                    let feasible = nodes[j].parent == Some(i);
                    if !feasible && decl == XDeclaration::Compact {
                        continue;
                    }
                    let var = m.add_binary(format!("x_{t}_{d}_{i}_{j}"));
                    m.set_objective(var, scaled(if feasible { nodes[j].reward } else { penalty }, scale));
                    arcs.push(ClspArc { debris: d, step: t, from: i, to: j, var, feasible });
                }
            }
        }
    }

    for t in 0..nt {
        for s in 0..ns {
            for d in 0..nd {
                let i = w_index(t, s, d);
                let wz = if w[i] { vec![(z[s], -1.0)] } else { Vec::new() };
                m.add_constraint(format!("couple_{t}_{s}_{d}"), wz.into_iter().chain([(y[i], 1.0)]), RowSense::Le, 0.0);
            }
        }
    }
    for t in 0..nt {
        for s in 0..ns {
            m.add_constraint(format!("limit_{t}_{s}"), (0..nd).map(|d| (y[w_index(t, s, d)], 1.0)), RowSense::Le, 1.0);
        }
    }
    for d in 0..nd {
        let terms: Vec<(VarId, f64)> = arcs.iter().filter(|a| a.debris == d && a.from == 0).map(|a| (a.var, 1.0)).collect();
        m.add_constraint(format!("source_{d}"), terms, RowSense::Eq, 1.0);
    }
    for (d, nodes) in tree.debris.iter().enumerate() {
        for (i, n) in nodes.iter().enumerate() {
            if n.step == 0 || n.step + 1 >= nt {
                continue;
            }
            let terms = arcs
                .iter()
                .filter(|a| a.debris == d && (a.to == i || a.from == i))
                .map(|a| (a.var, if a.to == i { 1.0 } else { -1.0 }));
            m.add_constraint(format!("balance_{d}_{i}"), terms, RowSense::Eq, 0.0);
        }
    }
    for a in &arcs {
        let target = &tree.debris[a.debris][a.to];
        if target.engagers.is_empty() {
            continue;
        }
        let terms = std::iter::once((a.var, target.engagers.len() as f64))
            .chain(target.engagers.iter().map(|&s| (y[w_index(a.step, s, a.debris)], -1.0)));
        m.add_constraint(format!("engage_{}_{}_{}_{}", a.step, a.debris, a.from, a.to), terms, RowSense::Le, 0.0);
    }
    m.add_constraint("cardinality", z.iter().map(|&v| (v, 1.0)), RowSense::Eq, tree.platform_count as f64);
    Ok((ClspInstance { tree, z, y, w, arcs }, m))
}

impl ClspInstance {
    pub fn decode(&self, assignment: &[bool]) -> ClspSolution {
        let slots = self.z.iter().enumerate().filter(|(_, v)| assignment[v.0]).map(|(s, _)| s).collect();
        let mut paths = Vec::new();
        let mut engagements = Vec::new();
        let mut objective = 0.0;
        for (d, nodes) in self.tree.debris.iter().enumerate() {
            let mut path = vec![0];
            let mut at = 0;
            for t in 0..self.tree.steps.saturating_sub(1) {
                let Some(arc) = self.arcs.iter().find(|a| a.debris == d && a.step == t && a.from == at && assignment[a.var.0]) else {
                    break;
                };
                let n = &nodes[arc.to];
                if !n.engagers.is_empty() {
                    engagements.push(ClspEngagement { step: t, debris: d, slots: n.engagers.clone(), reward: n.reward });
                }
                objective += n.reward;
                at = arc.to;
                path.push(at);
            }
            paths.push(path);
        }
        ClspSolution { slots, paths, engagements, objective }
    }
}

/// The illustrative three-slot, three-step instance with two platforms:
/// the left debris is reachable from slot 0, the centre one from slots 1
/// and 2, the right one from slot 2. Its optimum is 7.50, placing slots 1
/// and 2.
pub fn illustrative_tree() -> ClspTree {
    fn node(step: usize, parent: usize, engagers: &[usize], reward: f64) -> ClspNode {
        ClspNode { step, parent: Some(parent), engagers: engagers.to_vec(), reward }
    }
    let root = ClspNode { step: 0, parent: None, engagers: Vec::new(), reward: 0.0 };
    let left = vec![
        root.clone(),
        node(1, 0, &[], 0.0),
        node(1, 0, &[0], 1.25),
        node(2, 1, &[], 0.0),
        node(2, 2, &[], 0.0),
        node(2, 2, &[0], 1.5),
        node(2, 2, &[1], 1.0),
        node(2, 2, &[0, 1], 2.75),
    ];
    let centre = vec![
        root.clone(),
        node(1, 0, &[], 0.0),
        node(1, 0, &[1], 1.0),
        node(1, 0, &[2], 0.75),
        node(1, 0, &[1, 2], 3.0),
        node(2, 1, &[], 0.0),
        node(2, 1, &[0], 1.0),
        node(2, 1, &[1], 1.75),
        node(2, 1, &[0, 1], 3.0),
        node(2, 2, &[], 0.0),
        node(2, 3, &[], 0.0),
        node(2, 4, &[], 0.0),
        node(2, 4, &[1], 2.0),
        node(2, 4, &[2], 1.75),
        node(2, 4, &[1, 2], 4.5),
    ];
    let right = vec![
        root,
        node(1, 0, &[], 0.0),
        node(1, 0, &[2], 1.5),
        node(2, 1, &[], 0.0),
        node(2, 1, &[2], 2.25),
        node(2, 2, &[], 0.0),
    ];
    ClspTree { slots: 3, steps: 3, platform_count: 2, debris: vec![left, centre, right] }
}

/// Expands every debris' relocation tree over the scenario's slot grid,
/// using the same candidate generation and rewards as the scheduler.
pub fn clsp_tree_from_scenario(scn: &Scenario, env: &Environment, max_nodes: usize) -> Result<ClspTree, FormulationError> {
    let (ns, nt) = (scn.slots.len(), scn.grid.steps);
    let tsd = nt * ns * scn.debris.len();
    if tsd > max_nodes.saturating_mul(16) {
        return Err(FormulationError::InstanceTooLarge { what: "T·S·D", measured: tsd, limit: max_nodes.saturating_mul(16) });
    }
    let mut trees = Vec::with_capacity(scn.debris.len());
    let mut total = 0usize;
    for (d, body) in scn.debris.iter().enumerate() {
        let mut nodes = vec![ClspNode { step: 0, parent: None, engagers: Vec::new(), reward: 0.0 }];
        // Orbit reached at each node; `None` once deorbited or ejected.
        let mut tracks: Vec<Option<Track>> = vec![Some(Track::initial(body.elements))];
        let mut frontier = vec![0usize];
        for t in 0..nt - 1 {
            let mut next = Vec::new();
            for &i in &frontier {
                nodes.push(ClspNode { step: t + 1, parent: Some(i), engagers: Vec::new(), reward: 0.0 });
                tracks.push(tracks[i]);
                next.push(nodes.len() - 1);
                let Some(track) = tracks[i] else { continue };
                let pool: Vec<(usize, StateVector)> = (0..ns).map(|s| (s, env.slot_states[s][t])).collect();
                for c in debris_candidates(scn, env, d, &track, t, &pool)? {
                    let fate = match Track::after_impulse(&c.slot.resulting_state, scn) {
                        Fate::Active(tr) => Some(tr),
                        Fate::Deorbited(_) | Fate::Ejected => None,
                    };
                    nodes.push(ClspNode { step: t + 1, parent: Some(i), reward: c.reward(), engagers: c.slot.engagers });
                    tracks.push(fate);
                    next.push(nodes.len() - 1);
                }
                if total + nodes.len() > max_nodes {
                    return Err(FormulationError::InstanceTooLarge {
                        what: "candidate tree nodes",
                        measured: total + nodes.len(),
                        limit: max_nodes,
                    });
                }
            }
            frontier = next;
        }
        total += nodes.len();
        trees.push(nodes);
    }
    Ok(ClspTree { slots: ns, steps: nt, platform_count: scn.platform_count, debris: trees })
}

/// Solves a CLSP model exactly (or by LP diving) and decodes it.
pub fn solve_clsp(
    inst: &ClspInstance,
    model: &MilpModel,
    mode: SolverMode,
    limits: &SolveLimits,
) -> Result<(ClspSolution, MilpSolution), FormulationError> {
    let sol = match mode {
        SolverMode::Exact => match solve_exact(model, limits) {
            Ok(sol) => sol,
            Err(MilpError::LimitsExceeded { incumbent: Some(inc), .. }) => *inc,
            Err(e) => return Err(e.into()),
        },
        SolverMode::Heuristic => solve_heuristic(model, StructureHint::Generic)?,
    };
    if !sol.is_solved() {
        return Err(FormulationError::Shape(format!("CLSP solve ended {:?}", sol.status)));
    }
    Ok((inst.decode(&sol.assignment), sol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn illustrative_counts() {
        let tree = illustrative_tree();
        let t1 = tree.debris.iter().flatten().filter(|n| n.step == 1).count();
        let t2 = tree.debris.iter().flatten().filter(|n| n.step == 2).count();
        assert_eq!((t1, t2), (8, 18));
        let (_, m) = build_clsp(tree, XDeclaration::Full).unwrap();
        assert_eq!((m.num_vars(), m.num_constraints()), (94, 85));
    }

    #[test]
    fn esp_prefers_joint_slot() {
        let zero = StateVector::new(Default::default(), Default::default(), 0);
        let cand = |engagers: Vec<usize>, r: f64| ScoredCandidate {
            slot: CandidateSlot {
                debris: 0,
                step: 0,
                engagers,
                dv: crate::ablation::DeltaV::zero(),
                resulting_state: zero,
                resulting_periapsis: 0.0,
            },
            terms: RewardBreakdown { alpha_dh: r, ..Default::default() },
        };
        let cands = vec![cand(vec![0], 1.0), cand(vec![1], 1.5), cand(vec![0, 1], 3.0)];
        let out = solve_esp(0, 2, &cands, 5000, &SolveLimits::default()).unwrap();
        assert_eq!(out.chosen, vec![2]);
        assert_eq!(out.objective, 3.0);
    }
}
