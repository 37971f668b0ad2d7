//! Scenario files, bundled presets, synthetic debris fields and the
//! platform slot grid.
//!
//! A scenario is a JSON document. Angles are written in degrees and
//! converted on load; file references are resolved relative to the
//! scenario file, or against the bundled data set when prefixed with
//! `builtin:`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ablation::{DebrisBody, LaserSpec};
use crate::access::{default_engager_cap, AccessParams};
use crate::astro::{state_history, AstroConstants, OrbitElements, StateVector, TimeGrid};
use crate::reward::{screen_conjunctions, ConjunctionReport, RewardConfig, ValuableAsset};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}:{line}:{column}: {msg}")]
    Parse { path: String, line: usize, column: usize, msg: String },
    #[error("invalid scenario:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: record {record}: {msg}")]
    Csv { path: String, record: usize, msg: String },
    #[error("unknown bundled resource `{0}`")]
    UnknownBuiltin(String),
}

/// Deterministic RNG for one purpose (`stream`) under a scenario seed.
/// Draws on different streams never interfere, so the order in which
/// components consume randomness cannot change results.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub const STREAM_DEBRIS: u64 = 0x100;
pub const STREAM_WALKER_PAIRS: u64 = 0x200;

mod builtin {
    pub const FILES: &[(&str, &str)] = &[
        ("small_debris_histogram.csv", include_str!("../data/small_debris_histogram.csv")),
        ("large_debris_catalog.csv", include_str!("../data/large_debris_catalog.csv")),
        ("valuable_assets.csv", include_str!("../data/valuable_assets.csv")),
    ];
    pub const PRESETS: &[(&str, &str)] = &[
        ("small_debris", include_str!("../presets/small_debris.json")),
        ("large_debris", include_str!("../presets/large_debris.json")),
        ("mixed", include_str!("../presets/mixed.json")),
        ("range_dependent", include_str!("../presets/range_dependent.json")),
        ("micro_mission", include_str!("../presets/micro_mission.json")),
    ];
}

pub fn preset_names() -> Vec<&'static str> {
    builtin::PRESETS.iter().map(|(n, _)| *n).collect()
}

pub fn preset_text(name: &str) -> Option<&'static str> {
    builtin::PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

fn read_source(source: &str, base: &Path) -> Result<(String, String), ScenarioError> {
    if let Some(name) = source.strip_prefix("builtin:") {
        let text = builtin::FILES
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| t.to_string())
            .ok_or_else(|| ScenarioError::UnknownBuiltin(source.to_string()))?;
        return Ok((source.to_string(), text));
    }
    let path = base.join(source);
    let label = path.display().to_string();
    let text = fs::read_to_string(&path).map_err(|source| ScenarioError::Io { path: label.clone(), source })?;
    Ok((label, text))
}

/// Slot-grid axis: explicit values or `{"linspace": [start, stop, count]}`
/// (both ends included).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Values(Vec<f64>),
    Linspace { linspace: (f64, f64, usize) },
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::Values(v) => v.clone(),
            Axis::Linspace { linspace: (a, b, n) } => match *n {
                0 => Vec::new(),
                1 => vec![*a],
                n => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotGridConfig {
    /// Altitude above the reference radius, km.
    pub altitude_km: Axis,
    pub inclination_deg: Axis,
    pub raan_deg: Axis,
    pub arg_lat_deg: Axis,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlotGrid {
    pub altitudes: Vec<f64>,
    pub inclinations: Vec<f64>,
    pub raans: Vec<f64>,
    pub arg_lats: Vec<f64>,
}

impl SlotGrid {
    pub fn from_config(cfg: &SlotGridConfig) -> Self {
        Self {
            altitudes: cfg.altitude_km.values(),
            inclinations: cfg.inclination_deg.values(),
            raans: cfg.raan_deg.values(),
            arg_lats: cfg.arg_lat_deg.values(),
        }
    }

    pub fn len(&self) -> usize {
        self.altitudes.len() * self.inclinations.len() * self.raans.len() * self.arg_lats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Circular slot orbits, altitude-major order.
    pub fn elements(&self, k: &AstroConstants) -> Vec<OrbitElements> {
        let mut out = Vec::with_capacity(self.len());
        for &alt in &self.altitudes {
            for &inc in &self.inclinations {
                for &raan in &self.raans {
                    for &u in &self.arg_lats {
                        out.push(
                            OrbitElements::circular_deg(k.r_earth + alt, inc, raan, u).expect("validated slot axes"),
                        );
                    }
                }
            }
        }
        out
    }
}

/// One row of a debris or asset catalog.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogRecord {
    pub id: String,
    pub sma_km: f64,
    pub ecc: f64,
    pub inc_deg: f64,
    pub raan_deg: f64,
    pub argp_deg: f64,
    pub anomaly_deg: f64,
    #[serde(default)]
    pub mass_kg: Option<f64>,
    #[serde(default)]
    pub rho_kg_m2: Option<f64>,
}

impl CatalogRecord {
    pub fn elements(&self) -> Result<OrbitElements, String> {
        OrbitElements::new(
            self.sma_km,
            self.ecc,
            self.inc_deg.to_radians(),
            self.raan_deg.to_radians(),
            self.argp_deg.to_radians(),
            self.anomaly_deg.to_radians(),
        )
        .map_err(|e| format!("{}: {e}", self.id))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DebrisGroup {
    /// Circular orbits sampled from an altitude histogram.
    Histogram {
        source: String,
        count: usize,
        surface_density: f64,
        #[serde(default = "default_cross_section")]
        cross_section: f64,
        #[serde(default = "default_laser")]
        laser: String,
    },
    /// Element table from a CSV file.
    Catalog {
        source: String,
        #[serde(default = "default_cross_section")]
        cross_section: f64,
        #[serde(default = "default_laser")]
        laser: String,
    },
    Inline {
        objects: Vec<CatalogRecord>,
        #[serde(default = "default_cross_section")]
        cross_section: f64,
        #[serde(default = "default_laser")]
        laser: String,
    },
}

impl DebrisGroup {
    fn laser(&self) -> &str {
        match self {
            DebrisGroup::Histogram { laser, .. } | DebrisGroup::Catalog { laser, .. } | DebrisGroup::Inline { laser, .. } => laser,
        }
    }
}

fn default_cross_section() -> f64 {
    1.0
}

pub const DEFAULT_LASER: &str = "default";

fn default_laser() -> String {
    DEFAULT_LASER.into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AssetGroup {
    Catalog { source: String, sphere_radius_km: f64 },
    Inline { objects: Vec<CatalogRecord>, sphere_radius_km: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub node_cap: u64,
    pub time_cap_s: Option<f64>,
    pub gap_target: f64,
    /// Above this many candidate slots in one step the scheduler switches
    /// from the exact subproblem solve to greedy selection.
    pub esp_exact_max_candidates: usize,
    /// Largest candidate tree (nodes over all debris) the joint model accepts.
    pub clsp_max_tree: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { node_cap: 2_000_000, time_cap_s: None, gap_target: 0.0, esp_exact_max_candidates: 5000, clsp_max_tree: 20_000 }
    }
}

impl SolverConfig {
    pub fn limits(&self) -> binprog::SolveLimits {
        binprog::SolveLimits {
            node_cap: self.node_cap,
            time_cap: self.time_cap_s.map(std::time::Duration::from_secs_f64),
            gap_target: self.gap_target,
        }
    }
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn default_epoch() -> DateTime<Utc> {
    DateTime::parse_from_rfc3339("2024-02-26T04:30:51Z").unwrap().with_timezone(&Utc)
}

fn default_coverage() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_epoch")]
    pub epoch: DateTime<Utc>,
    pub step_size_s: f64,
    pub steps: usize,
    pub laser: LaserSpec,
    /// Further laser profiles, selected per debris group by name. The
    /// primary `laser` is named `default`.
    #[serde(default)]
    pub extra_lasers: BTreeMap<String, LaserSpec>,
    #[serde(default)]
    pub epsilon_km: f64,
    #[serde(default)]
    pub reward: RewardConfig,
    pub slot_grid: SlotGridConfig,
    #[serde(default)]
    pub debris: Vec<DebrisGroup>,
    #[serde(default)]
    pub assets: Vec<AssetGroup>,
    pub platform_count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Largest engager subset per candidate slot; `null` picks a size-based
    /// default.
    #[serde(default)]
    pub engager_cap: Option<usize>,
    /// Platforms that must engage a debris for it to count as covered.
    #[serde(default = "default_coverage")]
    pub coverage_threshold: usize,
    #[serde(default)]
    pub coverage_threshold_overrides: BTreeMap<String, usize>,
    /// Conjunction incentive windows `[t_min, t_max]` for individual debris,
    /// by id. Debris not listed use `reward.window`.
    #[serde(default)]
    pub conjunction_windows: BTreeMap<String, (usize, usize)>,
    /// Restrict scheduling to engagements whose solo push does not raise
    /// periapsis.
    #[serde(default)]
    pub schedule_with_w_prime: bool,
}

impl ScenarioConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, ScenarioError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            path: origin.to_string(),
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })?;
        let errs = cfg.validate();
        if errs.is_empty() {
            Ok(cfg)
        } else {
            Err(ScenarioError::Validation(errs))
        }
    }

    pub fn preset(name: &str) -> Result<Self, ScenarioError> {
        let text = preset_text(name).ok_or_else(|| ScenarioError::UnknownBuiltin(name.to_string()))?;
        Self::from_json(text, &format!("preset:{name}"))
    }

    /// Every violated invariant, in field order.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            errs.push(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if !(self.step_size_s.is_finite() && self.step_size_s > 0.0) {
            errs.push(format!("step_size_s must be positive, got {}", self.step_size_s));
        }
        if self.steps < 2 {
            errs.push(format!("steps must be at least 2, got {}", self.steps));
        }
        for (name, spec) in self.named_lasers() {
            let prefix = if name == DEFAULT_LASER { "laser.".to_string() } else { format!("extra_lasers.{name}.") };
            errs.extend(spec.validate().into_iter().map(|e| e.replacen("laser.", &prefix, 1)));
            if spec.engage_duration > self.step_size_s {
                errs.push(format!("{prefix}engage_duration exceeds step_size_s"));
            }
        }
        if self.extra_lasers.contains_key(DEFAULT_LASER) {
            errs.push(format!("extra_lasers may not redefine `{DEFAULT_LASER}`"));
        }
        if !(self.epsilon_km.is_finite() && self.epsilon_km >= 0.0) {
            errs.push(format!("epsilon_km must be non-negative, got {}", self.epsilon_km));
        }
        errs.extend(self.reward.validate(AstroConstants::default().r_earth));
        let grid = SlotGrid::from_config(&self.slot_grid);
        let axes = [
            ("altitude_km", &grid.altitudes),
            ("inclination_deg", &grid.inclinations),
            ("raan_deg", &grid.raans),
            ("arg_lat_deg", &grid.arg_lats),
        ];
        for (name, values) in axes {
            if values.is_empty() {
                errs.push(format!("slot_grid.{name} is empty"));
            }
            if values.iter().any(|v| !v.is_finite()) {
                errs.push(format!("slot_grid.{name} has non-finite values"));
            }
        }
        if grid.altitudes.iter().any(|a| *a <= 0.0) {
            errs.push("slot_grid.altitude_km values must be positive".into());
        }
        if grid.inclinations.iter().any(|i| !(0.0..=180.0).contains(i)) {
            errs.push("slot_grid.inclination_deg values must be within [0, 180]".into());
        }
        if self.platform_count > grid.len() {
            errs.push(format!("platform_count {} exceeds the {} available slots", self.platform_count, grid.len()));
        }
        for (i, g) in self.debris.iter().enumerate() {
            if g.laser() != DEFAULT_LASER && !self.extra_lasers.contains_key(g.laser()) {
                errs.push(format!("debris[{i}] uses unknown laser profile `{}`", g.laser()));
            }
            match g {
                DebrisGroup::Histogram { surface_density, cross_section, .. } => {
                    if !(surface_density.is_finite() && *surface_density > 0.0) {
                        errs.push(format!("debris[{i}].surface_density must be positive"));
                    }
                    if !(cross_section.is_finite() && *cross_section > 0.0) {
                        errs.push(format!("debris[{i}].cross_section must be positive"));
                    }
                }
                DebrisGroup::Catalog { cross_section, .. } | DebrisGroup::Inline { cross_section, .. } => {
                    if !(cross_section.is_finite() && *cross_section > 0.0) {
                        errs.push(format!("debris[{i}].cross_section must be positive"));
                    }
                }
            }
        }
        for (i, a) in self.assets.iter().enumerate() {
            let r = match a {
                AssetGroup::Catalog { sphere_radius_km, .. } | AssetGroup::Inline { sphere_radius_km, .. } => *sphere_radius_km,
            };
            if !(r.is_finite() && r > 0.0) {
                errs.push(format!("assets[{i}].sphere_radius_km must be positive"));
            }
        }
        if self.coverage_threshold == 0 {
            errs.push("coverage_threshold must be at least 1".into());
        }
        for (id, v) in &self.coverage_threshold_overrides {
            if *v == 0 {
                errs.push(format!("coverage_threshold_overrides.{id} must be at least 1"));
            }
        }
        if self.engager_cap == Some(0) {
            errs.push("engager_cap must be at least 1 when set".into());
        }
        if let Some(t) = self.solver.time_cap_s {
            if !(t.is_finite() && t > 0.0) {
                errs.push("solver.time_cap_s must be positive".into());
            }
        }
        errs
    }

    /// `default` first, then the extra profiles in name order.
    pub fn named_lasers(&self) -> Vec<(&str, &LaserSpec)> {
        std::iter::once((DEFAULT_LASER, &self.laser))
            .chain(self.extra_lasers.iter().map(|(n, l)| (n.as_str(), l)))
            .collect()
    }

    /// Pretty JSON with every default written out.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig, ScenarioError> {
    let path = path.as_ref();
    let label = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: label.clone(), source })?;
    ScenarioConfig::from_json(&text, &label)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_lo_km: f64,
    pub bin_hi_km: f64,
    pub freq: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AltitudeHistogram {
    pub bins: Vec<HistogramBin>,
}

impl AltitudeHistogram {
    pub fn new(bins: Vec<HistogramBin>) -> Result<Self, Vec<String>> {
        let mut errs = Vec::new();
        if bins.is_empty() {
            errs.push("histogram has no bins".to_string());
        }
        for (i, b) in bins.iter().enumerate() {
            if !(b.freq.is_finite() && b.freq >= 0.0) {
                errs.push(format!("bin {i}: frequency must be non-negative"));
            }
            if !(b.bin_lo_km.is_finite() && b.bin_lo_km > 0.0 && b.bin_hi_km > b.bin_lo_km) {
                errs.push(format!("bin {i}: needs 0 < lo < hi"));
            }
        }
        if bins.iter().map(|b| b.freq).sum::<f64>() <= 0.0 {
            errs.push("histogram frequencies sum to zero".into());
        }
        if errs.is_empty() {
            Ok(Self { bins })
        } else {
            Err(errs)
        }
    }

    pub fn parse_csv(text: &str, origin: &str) -> Result<Self, ScenarioError> {
        let bins = parse_csv_records::<HistogramBin>(text, origin)?;
        Self::new(bins).map_err(|e| ScenarioError::Validation(e.into_iter().map(|m| format!("{origin}: {m}")).collect()))
    }
}

fn parse_csv_records<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<Vec<T>, ScenarioError> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    reader
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| ScenarioError::Csv { path: origin.to_string(), record: i + 1, msg: e.to_string() }))
        .collect()
}

pub fn parse_catalog(text: &str, origin: &str) -> Result<Vec<CatalogRecord>, ScenarioError> {
    parse_csv_records(text, origin)
}

/// Circular debris orbits: altitude uniform inside a histogram-drawn bin,
/// RAAN and argument of latitude uniform on [0°, 360°), inclination uniform
/// on [0°, 180°).
pub fn sample_debris_field<R: Rng>(
    hist: &AltitudeHistogram,
    count: usize,
    rng: &mut R,
    surface_density: f64,
    cross_section: f64,
    id_prefix: &str,
    k: &AstroConstants,
) -> Vec<DebrisBody> {
    let weights = WeightedIndex::new(hist.bins.iter().map(|b| b.freq)).expect("validated histogram");
    (0..count)
        .map(|i| {
            let bin = &hist.bins[weights.sample(rng)];
            let alt = rng.gen_range(bin.bin_lo_km..bin.bin_hi_km);
            let raan: f64 = rng.gen_range(0.0..360.0);
            let argp: f64 = rng.gen_range(0.0..360.0);
            let arg_lat: f64 = rng.gen_range(0.0..360.0);
            let inc: f64 = rng.gen_range(0.0..180.0);
            // Circular orbits have no perigee; the draw keeps the stream layout fixed.
            let _ = argp;
            DebrisBody {
                id: format!("{id_prefix}{i:04}"),
                mass: None,
                surface_density: Some(surface_density),
                cross_section,
                elements: OrbitElements::circular_deg(k.r_earth + alt, inc, raan, arg_lat).expect("sampled elements are valid"),
            }
        })
        .collect()
}

/// A fully resolved scenario ready for the formulations.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub constants: AstroConstants,
    pub grid: TimeGrid,
    pub laser_names: Vec<String>,
    pub lasers: Vec<LaserSpec>,
    pub reward: RewardConfig,
    pub slots: Vec<OrbitElements>,
    pub debris: Vec<DebrisBody>,
    /// Index into `lasers` for each debris.
    pub debris_laser: Vec<usize>,
    pub assets: Vec<ValuableAsset>,
    pub platform_count: usize,
    pub seed: u64,
    pub engager_cap: Option<usize>,
    pub coverage_thresholds: Vec<usize>,
}

impl Scenario {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let cfg = load_scenario(path)?;
        let base: PathBuf = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::resolve(cfg, &base)
    }

    pub fn from_preset(name: &str) -> Result<Self, ScenarioError> {
        Self::resolve(ScenarioConfig::preset(name)?, Path::new("."))
    }

    pub fn resolve(config: ScenarioConfig, base: &Path) -> Result<Self, ScenarioError> {
        let errs = config.validate();
        if !errs.is_empty() {
            return Err(ScenarioError::Validation(errs));
        }
        let k = AstroConstants::default();
        let grid = TimeGrid::new(config.epoch, config.step_size_s, config.steps).expect("validated grid");
        let laser_names: Vec<String> = config.named_lasers().iter().map(|(n, _)| n.to_string()).collect();
        let lasers: Vec<LaserSpec> = config.named_lasers().iter().map(|(_, l)| **l).collect();
        let slots = SlotGrid::from_config(&config.slot_grid).elements(&k);

        let mut debris = Vec::new();
        let mut debris_laser = Vec::new();
        let mut errs = Vec::new();
        for (gi, group) in config.debris.iter().enumerate() {
            let laser = laser_names.iter().position(|n| n == group.laser()).expect("validated laser name");
            let before = debris.len();
            match group {
                DebrisGroup::Histogram { source, count, surface_density, cross_section, .. } => {
                    let (origin, text) = read_source(source, base)?;
                    let hist = AltitudeHistogram::parse_csv(&text, &origin)?;
                    let mut rng = rng_stream(config.seed, STREAM_DEBRIS + gi as u64);
                    debris.extend(sample_debris_field(&hist, *count, &mut rng, *surface_density, *cross_section, &format!("s{gi}-"), &k));
                }
                DebrisGroup::Catalog { source, cross_section, .. } => {
                    let (origin, text) = read_source(source, base)?;
                    for rec in parse_catalog(&text, &origin)? {
                        push_record(&rec, *cross_section, &mut debris, &mut errs);
                    }
                }
                DebrisGroup::Inline { objects, cross_section, .. } => {
                    for rec in objects {
                        push_record(rec, *cross_section, &mut debris, &mut errs);
                    }
                }
            }
            debris_laser.extend(std::iter::repeat(laser).take(debris.len() - before));
        }
        let mut seen = std::collections::HashSet::new();
        for d in &debris {
            if !seen.insert(d.id.as_str()) {
                errs.push(format!("duplicate debris id `{}`", d.id));
            }
        }

        let mut assets = Vec::new();
        for group in &config.assets {
            let (records, radius) = match group {
                AssetGroup::Catalog { source, sphere_radius_km } => {
                    let (origin, text) = read_source(source, base)?;
                    (parse_catalog(&text, &origin)?, *sphere_radius_km)
                }
                AssetGroup::Inline { objects, sphere_radius_km } => (objects.clone(), *sphere_radius_km),
            };
            for rec in records {
                match rec.elements() {
                    Ok(elements) => assets.push(ValuableAsset { id: rec.id.clone(), elements, sphere_radius: radius }),
                    Err(e) => errs.push(format!("asset {e}")),
                }
            }
        }
        for id in config.coverage_threshold_overrides.keys() {
            if !debris.iter().any(|d| &d.id == id) {
                errs.push(format!("coverage_threshold_overrides names unknown debris `{id}`"));
            }
        }
        let mut reward = config.reward.clone();
        for (id, &(lo, hi)) in &config.conjunction_windows {
            match debris.iter().position(|d| &d.id == id) {
                Some(i) if lo <= hi => {
                    reward.debris_windows.insert(i, (lo, hi));
                }
                Some(_) => errs.push(format!("conjunction_windows.{id}: start {lo} is after end {hi}")),
                None => errs.push(format!("conjunction_windows names unknown debris `{id}`")),
            }
        }
        if !errs.is_empty() {
            return Err(ScenarioError::Validation(errs));
        }

        if reward.m_max.is_none() {
            let heaviest = debris.iter().map(DebrisBody::effective_mass).fold(0.0, f64::max);
            reward.m_max = Some(if heaviest > 0.0 { heaviest } else { 1.0 });
        }
        let coverage_thresholds = debris
            .iter()
            .map(|d| config.coverage_threshold_overrides.get(&d.id).copied().unwrap_or(config.coverage_threshold))
            .collect();
        let engager_cap = config.engager_cap.or_else(|| default_engager_cap(slots.len(), debris.len()));
        Ok(Self {
            constants: k,
            grid,
            laser_names,
            lasers,
            reward,
            platform_count: config.platform_count,
            seed: config.seed,
            engager_cap,
            coverage_thresholds,
            slots,
            debris,
            debris_laser,
            assets,
            config,
        })
    }

    pub fn access_params(&self, d: usize) -> AccessParams {
        AccessParams::from_laser(&self.lasers[self.debris_laser[d]], self.config.epsilon_km)
    }

    pub fn laser_for(&self, d: usize) -> &LaserSpec {
        &self.lasers[self.debris_laser[d]]
    }

    pub fn m_max(&self) -> f64 {
        self.reward.m_max.unwrap_or(1.0)
    }
}

/// Precomputed trajectories of everything that does not depend on
/// decisions: candidate slots, unperturbed debris, assets.
#[derive(Clone, Debug)]
pub struct Environment {
    /// `[slot][t]`
    pub slot_states: Vec<Vec<StateVector>>,
    /// `[debris][t]`, assuming no engagement.
    pub debris_states: Vec<Vec<StateVector>>,
    pub asset_states: Vec<Vec<StateVector>>,
    pub reports: Vec<ConjunctionReport>,
}

impl Scenario {
    pub fn environment(&self) -> Environment {
        let k = &self.constants;
        let slot_states = build_slot_states(&self.slots, &self.grid, k);
        let debris_el: Vec<OrbitElements> = self.debris.iter().map(|d| d.elements).collect();
        let debris_states = build_slot_states(&debris_el, &self.grid, k);
        let asset_el: Vec<OrbitElements> = self.assets.iter().map(|a| a.elements).collect();
        let asset_states = build_slot_states(&asset_el, &self.grid, k);
        let reports = screen_conjunctions(&debris_states, &self.assets, &asset_states);
        Environment { slot_states, debris_states, asset_states, reports }
    }
}

fn push_record(rec: &CatalogRecord, cross_section: f64, out: &mut Vec<DebrisBody>, errs: &mut Vec<String>) {
    match rec.elements() {
        Ok(elements) => {
            let body = DebrisBody {
                id: rec.id.clone(),
                mass: rec.mass_kg,
                surface_density: rec.rho_kg_m2,
                cross_section,
                elements,
            };
            if body.resolvable() {
                out.push(body);
            } else {
                errs.push(format!("debris {} needs mass_kg or rho_kg_m2", rec.id));
            }
        }
        Err(e) => errs.push(format!("debris {e}")),
    }
}

/// J2-propagated states of each orbit at every grid step, `[object][t]`.
pub fn build_slot_states(elements: &[OrbitElements], grid: &TimeGrid, k: &AstroConstants) -> Vec<Vec<StateVector>> {
    elements.par_iter().map(|el| state_history(el, grid, 0, k)).collect()
}
