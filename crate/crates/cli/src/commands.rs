use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use binprog::{export_mps, read_solution, MilpModel};
use lasercon::astro::OrbitElements;
use lasercon::baselines::{best_walker, enumerate_patterns, generate_walker, sample_pairs};
use lasercon::formulations::{
    build_clsp, build_gating, build_mclp, clsp_tree_from_scenario, illustrative_tree, mclp_from_scenario, mclp_rewards,
    solve_clsp, solve_mclp, ClspTree, MclpInstance, Placement, SolverMode, XDeclaration,
};
use lasercon::scenario::{load_scenario, parse_catalog, preset_names, preset_text, Environment, Scenario, ScenarioConfig, SlotGrid};
use lasercon::scheduler::{derive_metrics, run_mission, timeline, write_engagements_csv, MissionState, SchedulerOptions};
use serde::Serialize;
use serde_json::json;

use crate::output::{sha256_hex, Outputs};
use crate::{Common, SolverArg};

const SCHEMA_VERSION: u32 = 1;

struct Loaded {
    scn: Scenario,
    hash: String,
}

fn init_threads(c: &Common) -> Result<()> {
    if let Some(n) = c.threads {
        ensure!(n > 0, "--threads must be positive");
        // A second call in the same process is harmless; keep the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn load(c: &Common) -> Result<Loaded> {
    init_threads(c)?;
    let Some(source) = c.config.as_deref() else { bail!("--config is required") };
    let (mut cfg, base) = match source.strip_prefix("preset:") {
        Some(name) => (ScenarioConfig::preset(name)?, PathBuf::from(".")),
        None => {
            let path = Path::new(source);
            (load_scenario(path)?, path.parent().map(Path::to_path_buf).unwrap_or_default())
        }
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(steps) = c.steps {
        cfg.steps = steps;
    }
    if let Some(p) = c.platforms {
        cfg.platform_count = p;
    }
    if let Some(cap) = c.engager_cap {
        cfg.engager_cap = Some(cap);
    }
    let hash = sha256_hex(cfg.to_json().as_bytes());
    let scn = Scenario::resolve(cfg, &base)?;
    Ok(Loaded { scn, hash })
}

fn mode(c: &Common) -> SolverMode {
    match c.solver {
        SolverArg::Heuristic => SolverMode::Heuristic,
        _ => SolverMode::Exact,
    }
}

#[derive(Serialize)]
struct PlacementRow {
    id: String,
    sma_km: f64,
    ecc: f64,
    inc_deg: f64,
    raan_deg: f64,
    argp_deg: f64,
    anomaly_deg: f64,
}

const PLACEMENT_HEADER: &[&str] = &["id", "sma_km", "ecc", "inc_deg", "raan_deg", "argp_deg", "anomaly_deg"];

fn placement_rows(ids: impl Iterator<Item = String>, elements: &[OrbitElements]) -> Vec<PlacementRow> {
    ids.zip(elements)
        .map(|(id, e)| PlacementRow {
            id,
            sma_km: e.sma,
            ecc: e.ecc,
            inc_deg: e.inc.to_degrees(),
            raan_deg: e.raan.to_degrees(),
            argp_deg: e.argp.to_degrees(),
            anomaly_deg: e.anomaly.to_degrees(),
        })
        .collect()
}

fn export(out: &mut Outputs, name: &str, model: &MilpModel) -> Result<()> {
    export_mps(model, out.path(name))?;
    out.record(name);
    Ok(())
}

fn import(path: &Path, model: &MilpModel) -> Result<Vec<bool>> {
    let assignment = read_solution(path, model).with_context(|| format!("reading {}", path.display()))?;
    ensure!(model.is_feasible(&assignment), "{} does not satisfy the model's constraints", path.display());
    Ok(assignment)
}

/// Returns `None` when the model was only exported.
fn place(c: &Common, scn: &Scenario, inst: &MclpInstance, model: &MilpModel, out: &mut Outputs) -> Result<Option<Placement>> {
    if c.solver == SolverArg::ExportOnly {
        export(out, "design.mps", model)?;
        return Ok(None);
    }
    let placement = match &c.solution {
        Some(path) => inst.decode_assignment(&import(path, model)?, "Imported", f64::NAN),
        None => solve_mclp(inst, model, mode(c), &scn.config.solver.limits())?,
    };
    let elements: Vec<OrbitElements> = placement.slots.iter().map(|&s| scn.slots[s]).collect();
    let rows = placement_rows(placement.slots.iter().map(|s| format!("slot_{s}")), &elements);
    out.write_csv("placement.csv", &rows, PLACEMENT_HEADER)?;
    out.write_json(
        "design.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "pi": placement.pi,
            "status": placement.status,
            "gap": if placement.gap.is_finite() { json!(placement.gap) } else { json!(null) },
            "platform_count": scn.platform_count,
            "slots": placement.slots,
            "variables": model.num_vars(),
            "constraints": model.num_constraints(),
        }),
    )?;
    Ok(Some(placement))
}

fn write_mission(out: &mut Outputs, scn: &Scenario, state: &MissionState) -> Result<()> {
    write_engagements_csv(&out.path("engagements.csv"), &state.events)?;
    out.record("engagements.csv");
    out.write_json("metrics.json", &derive_metrics(state))?;
    out.write_csv("timeline.csv", &timeline(state, scn.grid.steps), &["step", "cum_engagements", "cum_deorbits"])
}

pub fn design(c: &Common) -> Result<()> {
    let Loaded { scn, hash } = load(c)?;
    let mut out = Outputs::create(&c.out, "design", hash, Some(scn.seed))?;
    let env = scn.environment();
    let (inst, model) = mclp_from_scenario(&scn, &env)?;
    if let Some(p) = place(c, &scn, &inst, &model, &mut out)? {
        println!("pi = {} on slots {:?} ({})", p.pi, p.slots, p.status);
    }
    out.finish()
}

fn read_placement(path: &Path) -> Result<Vec<OrbitElements>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let records = parse_catalog(&text, &path.display().to_string())?;
    records.iter().map(|r| r.elements().map_err(anyhow::Error::msg)).collect()
}

pub fn schedule(c: &Common, placement: &Path) -> Result<()> {
    ensure!(c.solver != SolverArg::ExportOnly, "each step's subproblem depends on the previous solve; export the design model instead");
    let Loaded { scn, hash } = load(c)?;
    let platforms = read_placement(placement)?;
    let mut out = Outputs::create(&c.out, "schedule", hash, Some(scn.seed))?;
    let env = scn.environment();
    let state = run_mission(&scn, &env, &platforms, &SchedulerOptions::from_scenario(&scn))?;
    write_mission(&mut out, &scn, &state)?;
    println!("V = {} over {} engagements", state.v, state.events.len());
    out.finish()
}

pub fn run(c: &Common) -> Result<()> {
    let Loaded { scn, hash } = load(c)?;
    let mut out = Outputs::create(&c.out, "run", hash, Some(scn.seed))?;
    let env = scn.environment();
    let (inst, model) = mclp_from_scenario(&scn, &env)?;
    let Some(p) = place(c, &scn, &inst, &model, &mut out)? else {
        return out.finish();
    };
    let platforms: Vec<OrbitElements> = p.slots.iter().map(|&s| scn.slots[s]).collect();
    let state = run_mission(&scn, &env, &platforms, &SchedulerOptions::from_scenario(&scn))?;
    write_mission(&mut out, &scn, &state)?;
    println!("pi = {}, V = {} over {} engagements", p.pi, state.v, state.events.len());
    out.finish()
}

pub fn clsp(c: &Common, topology: Option<&Path>, illustrative: bool, full: bool) -> Result<()> {
    init_threads(c)?;
    let (tree, hash, seed): (ClspTree, String, Option<u64>) = if illustrative {
        (illustrative_tree(), sha256_hex(b"illustrative"), None)
    } else if let Some(path) = topology {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let tree = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        (tree, sha256_hex(text.as_bytes()), None)
    } else {
        let Loaded { scn, hash } = load(c)?;
        let env: Environment = scn.environment();
        (clsp_tree_from_scenario(&scn, &env, scn.config.solver.clsp_max_tree)?, hash, Some(scn.seed))
    };
    let limits = match c.config.as_deref() {
        Some(_) if !illustrative && topology.is_none() => load(c)?.scn.config.solver.limits(),
        _ => binprog::SolveLimits::default(),
    };
    let mut out = Outputs::create(&c.out, "clsp", hash, seed)?;
    let decl = if full { XDeclaration::Full } else { XDeclaration::Compact };
    let (inst, model) = build_clsp(tree, decl)?;
    if c.solver == SolverArg::ExportOnly {
        export(&mut out, "clsp.mps", &model)?;
        return out.finish();
    }
    let (sol, status, gap) = match &c.solution {
        Some(path) => (inst.decode(&import(path, &model)?), "Imported".to_string(), None),
        None => {
            let (sol, raw) = solve_clsp(&inst, &model, mode(c), &limits)?;
            (sol, format!("{:?}", raw.status), Some(raw.gap))
        }
    };
    out.write_json(
        "clsp.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "objective": sol.objective,
            "status": status,
            "gap": gap,
            "variables": model.num_vars(),
            "constraints": model.num_constraints(),
            "slots": sol.slots,
            "paths": sol.paths,
            "engagements": sol.engagements,
        }),
    )?;
    println!(
        "objective = {:.2}, {} variables, {} constraints, gap {}",
        sol.objective,
        model.num_vars(),
        model.num_constraints(),
        gap.map_or("n/a".into(), |g| format!("{:.2}%", g * 100.0))
    );
    out.finish()
}

#[derive(Serialize)]
struct SweepRow {
    p: usize,
    pi: f64,
    v: f64,
    engagements: usize,
    engaged: usize,
    deorbited: usize,
    nudging_km: f64,
    status: String,
}

pub fn sweep(c: &Common, p_values: &[usize]) -> Result<()> {
    ensure!(!p_values.is_empty(), "--p-values must list at least one platform count");
    ensure!(c.solver != SolverArg::ExportOnly, "sweep solves every platform count; use design --solver export-only per count");
    let Loaded { scn, hash } = load(c)?;
    let mut out = Outputs::create(&c.out, "sweep", hash, Some(scn.seed))?;
    let env = scn.environment();
    let (_, wp) = build_gating(&scn, &env.slot_states, &env.debris_states)?;
    let (rewards, thresholds) = mclp_rewards(&scn, &env)?;
    let opts = SchedulerOptions::from_scenario(&scn);
    let mut rows = Vec::new();
    for &p in p_values {
        ensure!(p <= scn.slots.len(), "P = {p} exceeds the {} slots", scn.slots.len());
        let (inst, model) = build_mclp(wp.clone(), rewards.clone(), thresholds.clone(), p)?;
        let placement = solve_mclp(&inst, &model, mode(c), &opts.limits)?;
        let platforms: Vec<OrbitElements> = placement.slots.iter().map(|&s| scn.slots[s]).collect();
        let m = derive_metrics(&run_mission(&scn, &env, &platforms, &opts)?);
        println!("P = {p}: pi = {}, V = {}", placement.pi, m.v);
        rows.push(SweepRow {
            p,
            pi: placement.pi,
            v: m.v,
            engagements: m.engagements,
            engaged: m.engaged,
            deorbited: m.deorbited,
            nudging_km: m.nudging_km,
            status: placement.status,
        });
    }
    out.write_csv("sweep.csv", &rows, &[])?;
    out.finish()
}

#[derive(Serialize)]
struct WalkerRow {
    pattern: String,
    sma_km: f64,
    inc_deg: f64,
    planes: usize,
    phasing: usize,
    score: f64,
}

fn parse_pattern(s: &str) -> Result<(usize, usize)> {
    let (o, f) = s.split_once('/').with_context(|| format!("pattern {s:?} is not O/F"))?;
    Ok((o.trim().parse()?, f.trim().parse()?))
}

pub fn walker(c: &Common, n_pairs: usize, patterns: &[String], schedule: bool) -> Result<()> {
    ensure!(c.solver != SolverArg::ExportOnly, "the Walker search scores constellations directly and builds no model");
    let Loaded { scn, hash } = load(c)?;
    let mut out = Outputs::create(&c.out, "walker", hash, Some(scn.seed))?;
    let env = scn.environment();
    let grid = SlotGrid::from_config(&scn.config.slot_grid);
    let pairs = sample_pairs(&grid, scn.constants.r_earth, n_pairs, scn.seed);
    let patterns: Vec<(usize, usize)> = if patterns.is_empty() {
        enumerate_patterns(scn.platform_count)
    } else {
        patterns.iter().map(|p| parse_pattern(p)).collect::<Result<_>>()?
    };
    let (best, table) = best_walker(&scn, &env, &pairs, &patterns)?;
    let rows: Vec<WalkerRow> = table
        .iter()
        .map(|w| WalkerRow {
            pattern: w.pattern.label(),
            sma_km: w.pattern.sma,
            inc_deg: w.pattern.inc.to_degrees(),
            planes: w.pattern.o_planes,
            phasing: w.pattern.f_phase,
            score: w.score,
        })
        .collect();
    out.write_csv("walker.csv", &rows, &[])?;
    let elements = generate_walker(&best.pattern);
    out.write_csv("placement.csv", &placement_rows((0..elements.len()).map(|k| format!("walker_{k}")), &elements), PLACEMENT_HEADER)?;
    let mut report = json!({
        "schema_version": SCHEMA_VERSION,
        "pattern": best.pattern.label(),
        "sma_km": best.pattern.sma,
        "inc_deg": best.pattern.inc.to_degrees(),
        "pi": best.score,
        "evaluated": table.len(),
    });
    if schedule {
        let state = run_mission(&scn, &env, &elements, &SchedulerOptions::from_scenario(&scn))?;
        report["v"] = json!(state.v);
        write_mission(&mut out, &scn, &state)?;
    }
    out.write_json("walker.json", &report)?;
    println!("best {} at {:.2} km / {:.3} deg: pi = {}", best.pattern.label(), best.pattern.sma, best.pattern.inc.to_degrees(), best.score);
    out.finish()
}

pub fn preset(name: Option<&str>) -> Result<()> {
    match name {
        None => preset_names().iter().for_each(|n| println!("{n}")),
        Some(n) => print!("{}", preset_text(n).with_context(|| format!("unknown preset {n:?}"))?),
    }
    Ok(())
}
