//! Who can shoot whom: line of sight, range gating and the feasibility
//! tensors, plus enumeration of post-engagement candidate orbits.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ablation::{apply_engagement, compose_dva, engagement_dv, AblationError, DebrisBody, DeltaV, LaserSpec};
use crate::astro::{AstroConstants, StateVector};

#[derive(Debug, Error)]
pub enum AccessError {
    #[error("radius {radius} km is inside the occlusion shell ({shell} km)")]
    BelowShell { radius: f64, shell: f64 },
    #[error(transparent)]
    Ablation(#[from] AblationError),
    #[error("state arrays have inconsistent shapes: {0}")]
    Shape(String),
    #[error("tensor cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccessParams {
    /// Occlusion bias above the Earth's surface, km.
    #[serde(default)]
    pub epsilon: f64,
    pub u_min: f64,
    pub u_max: f64,
}

impl AccessParams {
    pub fn from_laser(spec: &LaserSpec, epsilon: f64) -> Self {
        Self { epsilon, u_min: spec.u_min, u_max: spec.u_max }
    }
}

/// Positive when the segment between two objects at radii `r_s`, `r_d`
/// and separation `u` clears the occlusion sphere.
pub fn los_indicator(r_s: f64, r_d: f64, u: f64, params: &AccessParams, k: &AstroConstants) -> Result<f64, AccessError> {
    let shell = k.r_earth + params.epsilon;
    for radius in [r_s, r_d] {
        if radius <= shell {
            return Err(AccessError::BelowShell { radius, shell });
        }
    }
    Ok((r_s * r_s - shell * shell).sqrt() + (r_d * r_d - shell * shell).sqrt() - u)
}

pub fn engageable(platform: &StateVector, debris: &StateVector, params: &AccessParams, k: &AstroConstants) -> bool {
    let u = (debris.r - platform.r).norm();
    let los = matches!(los_indicator(platform.r.norm(), debris.r.norm(), u, params, k), Ok(q) if q > 0.0);
    los && params.u_min <= u && u <= params.u_max
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TensorVariant {
    W,
    WPrime,
}

/// Bit-packed boolean tensor indexed `[t][s][d]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeasibilityTensor {
    pub steps: usize,
    pub slots: usize,
    pub debris: usize,
    pub variant: TensorVariant,
    bits: Vec<u64>,
}

const CACHE_MAGIC: &[u8; 4] = b"LWTC";
const CACHE_VERSION: u32 = 1;

impl FeasibilityTensor {
    pub fn new(steps: usize, slots: usize, debris: usize, variant: TensorVariant) -> Self {
        let n = steps * slots * debris;
        Self { steps, slots, debris, variant, bits: vec![0; n.div_ceil(64)] }
    }

    fn index(&self, t: usize, s: usize, d: usize) -> usize {
        debug_assert!(t < self.steps && s < self.slots && d < self.debris);
        (t * self.slots + s) * self.debris + d
    }

    pub fn get(&self, t: usize, s: usize, d: usize) -> bool {
        let i = self.index(t, s, d);
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, t: usize, s: usize, d: usize, value: bool) {
        let i = self.index(t, s, d);
        if value {
            self.bits[i / 64] |= 1 << (i % 64);
        } else {
            self.bits[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Slots that can engage debris `d` at step `t`.
    pub fn engagers(&self, t: usize, d: usize) -> Vec<usize> {
        (0..self.slots).filter(|&s| self.get(t, s, d)).collect()
    }

    pub fn is_subset_of(&self, other: &FeasibilityTensor) -> bool {
        self.bits.len() == other.bits.len() && self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    fn from_slabs(steps: usize, slots: usize, debris: usize, variant: TensorVariant, slabs: Vec<Vec<bool>>) -> Self {
        let mut out = Self::new(steps, slots, debris, variant);
        for (t, slab) in slabs.into_iter().enumerate() {
            for (i, on) in slab.into_iter().enumerate() {
                if on {
                    out.set(t, i / debris, i % debris, true);
                }
            }
        }
        out
    }

    /// Writes `magic | version | variant | dims | key | payload`.
    pub fn write_cache(&self, path: impl AsRef<Path>, key: &[u8; 32]) -> Result<(), AccessError> {
        let mut buf = Vec::with_capacity(64 + self.bits.len() * 8);
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        buf.push(match self.variant {
            TensorVariant::W => 0,
            TensorVariant::WPrime => 1,
        });
        for dim in [self.steps, self.slots, self.debris] {
            buf.extend_from_slice(&(dim as u64).to_le_bytes());
        }
        buf.extend_from_slice(key);
        for w in &self.bits {
            buf.extend_from_slice(&w.to_le_bytes());
        }
        let path = path.as_ref();
        let tmp = path.with_extension("tmp");
        fs::File::create(&tmp)?.write_all(&buf)?;
        fs::rename(tmp, path)?;
        Ok(())
    }

    /// Reads a cache file; `Ok(None)` when it was written for another key.
    pub fn read_cache(path: impl AsRef<Path>, key: &[u8; 32]) -> Result<Option<Self>, AccessError> {
        let buf = fs::read(path)?;
        let bad = |m: &str| AccessError::Cache(m.to_string());
        if buf.len() < 4 + 4 + 1 + 24 + 32 || &buf[..4] != CACHE_MAGIC {
            return Err(bad("not a feasibility tensor cache"));
        }
        let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
        if version != CACHE_VERSION {
            return Err(AccessError::Cache(format!("unsupported cache version {version}")));
        }
        let variant = match buf[8] {
            0 => TensorVariant::W,
            1 => TensorVariant::WPrime,
            v => return Err(AccessError::Cache(format!("unknown variant tag {v}"))),
        };
        let dim = |i: usize| u64::from_le_bytes(buf[9 + 8 * i..17 + 8 * i].try_into().unwrap()) as usize;
        let (steps, slots, debris) = (dim(0), dim(1), dim(2));
        if &buf[33..65] != key {
            return Ok(None);
        }
        let mut out = Self::new(steps, slots, debris, variant);
        let payload = &buf[65..];
        if payload.len() != out.bits.len() * 8 {
            return Err(bad("payload length does not match dimensions"));
        }
        for (w, chunk) in out.bits.iter_mut().zip(payload.chunks_exact(8)) {
            *w = u64::from_le_bytes(chunk.try_into().unwrap());
        }
        Ok(Some(out))
    }
}

fn check_shapes(platforms: &[Vec<StateVector>], debris: &[Vec<StateVector>]) -> Result<usize, AccessError> {
    let steps = platforms.first().or(debris.first()).map_or(0, Vec::len);
    if platforms.iter().chain(debris).any(|h| h.len() != steps) {
        return Err(AccessError::Shape("every history must cover the same number of steps".into()));
    }
    Ok(steps)
}

/// W tensor over `platforms[s][t]` and `debris[d][t]`, built one time slab
/// per task.
pub fn build_w(
    platforms: &[Vec<StateVector>],
    debris: &[Vec<StateVector>],
    params: &AccessParams,
    k: &AstroConstants,
) -> Result<FeasibilityTensor, AccessError> {
    let steps = check_shapes(platforms, debris)?;
    let (ns, nd) = (platforms.len(), debris.len());
    let slabs: Vec<Vec<bool>> = (0..steps)
        .into_par_iter()
        .map(|t| {
            let mut slab = Vec::with_capacity(ns * nd);
            for p in platforms {
                for d in debris {
                    slab.push(engageable(&p[t], &d[t], params, k));
                }
            }
            slab
        })
        .collect();
    Ok(FeasibilityTensor::from_slabs(steps, ns, nd, TensorVariant::W, slabs))
}

/// W′: the subset of W where a solo engagement does not raise periapsis.
pub fn build_w_prime(
    w: &FeasibilityTensor,
    platforms: &[Vec<StateVector>],
    debris: &[Vec<StateVector>],
    bodies: &[DebrisBody],
    spec: &LaserSpec,
    k: &AstroConstants,
) -> Result<FeasibilityTensor, AccessError> {
    check_shapes(platforms, debris)?;
    if bodies.len() != debris.len() || w.slots != platforms.len() || w.debris != debris.len() {
        return Err(AccessError::Shape("tensor, platform and debris counts disagree".into()));
    }
    let slabs: Result<Vec<Vec<bool>>, AccessError> = (0..w.steps)
        .into_par_iter()
        .map(|t| {
            let mut slab = vec![false; w.slots * w.debris];
            for (s, p) in platforms.iter().enumerate() {
                for (d, hist) in debris.iter().enumerate() {
                    if !w.get(t, s, d) {
                        continue;
                    }
                    let before = &hist[t];
                    let dv = engagement_dv(spec, &bodies[d], &p[t], before)?;
                    let after = apply_engagement(before, &dv);
                    slab[s * w.debris + d] = periapsis_or_zero(&after, k) <= periapsis_or_zero(before, k);
                }
            }
            Ok(slab)
        })
        .collect();
    Ok(FeasibilityTensor::from_slabs(w.steps, w.slots, w.debris, TensorVariant::WPrime, slabs?))
}

pub(crate) fn periapsis_or_zero(sv: &StateVector, k: &AstroConstants) -> f64 {
    sv.periapsis_radius(k).unwrap_or(0.0)
}

/// Unlimited subsets for small problems, three engagers otherwise.
pub fn default_engager_cap(slots: usize, debris: usize) -> Option<usize> {
    if slots * debris <= 64 {
        None
    } else {
        Some(3)
    }
}

/// All subsets of `0..n` with 1..=cap members, by size then lexicographic.
pub fn engager_subsets(n: usize, cap: Option<usize>) -> Vec<Vec<usize>> {
    let max = cap.unwrap_or(n).min(n);
    let mut out = Vec::new();
    for size in 1..=max {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            out.push(idx.clone());
            let Some(pos) = (0..size).rev().find(|&i| idx[i] != i + n - size) else {
                break;
            };
            idx[pos] += 1;
            for j in pos + 1..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSlot {
    pub debris: usize,
    pub step: usize,
    /// Sorted engager ids; empty for the no-engagement slot.
    pub engagers: Vec<usize>,
    pub dv: DeltaV,
    pub resulting_state: StateVector,
    pub resulting_periapsis: f64,
}

impl CandidateSlot {
    pub fn is_idle(&self) -> bool {
        self.engagers.is_empty()
    }
}

/// The no-engagement slot followed by one slot per engager subset.
/// `engagers` pairs an engager id with its state at `step`.
pub fn enumerate_candidate_slots(
    debris_idx: usize,
    body: &DebrisBody,
    debris_state: &StateVector,
    step: usize,
    engagers: &[(usize, StateVector)],
    cap: Option<usize>,
    spec: &LaserSpec,
    k: &AstroConstants,
) -> Result<Vec<CandidateSlot>, AccessError> {
    let solo: Vec<DeltaV> = engagers
        .iter()
        .map(|(_, p)| engagement_dv(spec, body, p, debris_state))
        .collect::<Result<_, _>>()?;
    let mut out = vec![CandidateSlot {
        debris: debris_idx,
        step,
        engagers: Vec::new(),
        dv: DeltaV::zero(),
        resulting_state: *debris_state,
        resulting_periapsis: periapsis_or_zero(debris_state, k),
    }];
    for subset in engager_subsets(engagers.len(), cap) {
        let parts: Vec<DeltaV> = subset.iter().map(|&i| solo[i]).collect();
        let dv = compose_dva(&parts);
        let resulting_state = apply_engagement(debris_state, &dv);
        let mut ids: Vec<usize> = subset.iter().map(|&i| engagers[i].0).collect();
        ids.sort_unstable();
        out.push(CandidateSlot {
            debris: debris_idx,
            step,
            engagers: ids,
            dv,
            resulting_periapsis: periapsis_or_zero(&resulting_state, k),
            resulting_state,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> AccessParams {
        AccessParams { epsilon: 0.0, u_min: 175.0, u_max: 325.0 }
    }

    #[test]
    fn los_examples() {
        let k = AstroConstants::default();
        let q = los_indicator(7000.0, 7000.0, 200.0, &params(), &k).unwrap();
        let expected = 2.0 * (7000f64.powi(2) - 6378.137f64.powi(2)).sqrt() - 200.0;
        assert_eq!(q, expected);
        assert!(los_indicator(7000.0, 7000.0, 14000.0, &params(), &k).unwrap() < 0.0);
        let tangent = 2.0 * (7000f64.powi(2) - 6378.137f64.powi(2)).sqrt();
        assert!(los_indicator(7000.0, 7000.0, tangent, &params(), &k).unwrap() <= 0.0);
        assert!(matches!(los_indicator(6000.0, 7000.0, 10.0, &params(), &k), Err(AccessError::BelowShell { .. })));
    }

    #[test]
    fn subset_counts() {
        assert_eq!(engager_subsets(2, None), vec![vec![0], vec![1], vec![0, 1]]);
        assert_eq!(engager_subsets(3, Some(2)).len(), 6);
        assert_eq!(engager_subsets(0, None).len(), 0);
        assert_eq!(engager_subsets(5, None).len(), 31);
    }

    #[test]
    fn tensor_bits() {
        let mut w = FeasibilityTensor::new(3, 4, 5, TensorVariant::W);
        w.set(2, 3, 4, true);
        w.set(0, 0, 0, true);
        assert!(w.get(2, 3, 4) && w.get(0, 0, 0) && !w.get(1, 1, 1));
        assert_eq!(w.count_ones(), 2);
        w.set(0, 0, 0, false);
        assert_eq!(w.engagers(2, 4), vec![3]);
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        let mut w = FeasibilityTensor::new(7, 3, 5, TensorVariant::WPrime);
        for i in 0..7 {
            w.set(i, i % 3, (i * 2) % 5, true);
        }
        let key = [7u8; 32];
        w.write_cache(&path, &key).unwrap();
        assert_eq!(FeasibilityTensor::read_cache(&path, &key).unwrap(), Some(w));
        assert_eq!(FeasibilityTensor::read_cache(&path, &[0u8; 32]).unwrap(), None);
    }
}
