//! Pulsed-laser momentum transfer.
//!
//! Units: ranges in km, fluence in J/m², coupling in N/MW, Δv in m/s.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::astro::{OrbitElements, StateVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AblationError {
    #[error("range {range_km} km outside [{u_min}, {u_max}] km")]
    RangeViolation { range_km: f64, u_min: f64, u_max: f64 },
    #[error("debris {0} has neither a surface density nor a mass")]
    UnresolvableBody(String),
    #[error("platform and debris are closer than 1 m")]
    ZeroBaseline,
    #[error("invalid laser spec: {0}")]
    InvalidSpec(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum FluenceMode {
    /// Pulse energy is adjusted so the on-target fluence stays at `phi_opt`.
    ConstantFluence { phi_opt: f64 },
    /// Fixed pulse energy; fluence falls off with the square of range.
    ConstantEnergy { pulse_energy: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserSpec {
    /// Effective mirror diameter, m.
    pub d_eff: f64,
    pub t_tot: f64,
    /// Beam quality B².
    pub b_sq: f64,
    pub zeta: f64,
    /// Wavelength, m.
    pub wavelength: f64,
    /// Momentum coupling, N/MW.
    pub c_m: f64,
    pub eta: f64,
    /// Pulse repetition frequency, Hz.
    pub prf: f64,
    /// Seconds of firing per engagement.
    pub engage_duration: f64,
    pub cool_duration: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub fluence_mode: FluenceMode,
}

impl LaserSpec {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let positive = [
            ("d_eff", self.d_eff),
            ("t_tot", self.t_tot),
            ("b_sq", self.b_sq),
            ("zeta", self.zeta),
            ("wavelength", self.wavelength),
            ("c_m", self.c_m),
            ("eta", self.eta),
            ("prf", self.prf),
            ("engage_duration", self.engage_duration),
            ("cool_duration", self.cool_duration),
            ("u_min", self.u_min),
            ("u_max", self.u_max),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                errs.push(format!("laser.{name} must be positive, got {v}"));
            }
        }
        if self.u_min >= self.u_max {
            errs.push(format!("laser.u_min ({}) must be below laser.u_max ({})", self.u_min, self.u_max));
        }
        if self.eta > 1.0 {
            errs.push(format!("laser.eta must be in (0, 1], got {}", self.eta));
        }
        let mode_value = match self.fluence_mode {
            FluenceMode::ConstantFluence { phi_opt } => ("phi_opt", phi_opt),
            FluenceMode::ConstantEnergy { pulse_energy } => ("pulse_energy", pulse_energy),
        };
        if !(mode_value.1.is_finite() && mode_value.1 > 0.0) {
            errs.push(format!("laser.fluence_mode.{} must be positive, got {}", mode_value.0, mode_value.1));
        }
        errs
    }

    pub fn in_range(&self, range_km: f64) -> bool {
        self.u_min <= range_km && range_km <= self.u_max
    }

    /// Coupling coefficient in N·s/J.
    pub fn coupling_si(&self) -> f64 {
        self.c_m * 1e-6
    }

    pub fn pulses_per_engagement(&self) -> u64 {
        (self.engage_duration * self.prf).round() as u64
    }

    pub fn step_length(&self) -> f64 {
        self.engage_duration + self.cool_duration
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DebrisBody {
    pub id: String,
    /// kg
    pub mass: Option<f64>,
    /// kg/m²
    pub surface_density: Option<f64>,
    /// m², used with `mass`.
    pub cross_section: f64,
    pub elements: OrbitElements,
}

impl DebrisBody {
    pub fn resolvable(&self) -> bool {
        self.surface_density.is_some_and(|r| r > 0.0) || self.mass.is_some_and(|m| m > 0.0)
    }

    /// Mass used for the mass reward term; falls back to ρ·A.
    pub fn effective_mass(&self) -> f64 {
        match (self.mass, self.surface_density) {
            (Some(m), _) => m,
            (None, Some(rho)) => rho * self.cross_section,
            (None, None) => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaV {
    /// m/s, ECI
    pub vec: Vector3<f64>,
    pub magnitude: f64,
}

impl DeltaV {
    pub fn new(vec: Vector3<f64>) -> Self {
        Self { vec, magnitude: vec.norm() }
    }

    pub fn zero() -> Self {
        Self::new(Vector3::zeros())
    }
}

pub fn fluence(spec: &LaserSpec, range_km: f64) -> Result<f64, AblationError> {
    if !spec.in_range(range_km) {
        return Err(AblationError::RangeViolation { range_km, u_min: spec.u_min, u_max: spec.u_max });
    }
    Ok(match spec.fluence_mode {
        FluenceMode::ConstantFluence { phi_opt } => phi_opt,
        FluenceMode::ConstantEnergy { pulse_energy } => {
            let u = range_km * 1e3;
            4.0 * pulse_energy * spec.d_eff.powi(2) * spec.t_tot
                / (PI * spec.b_sq.powi(2) * spec.zeta.powi(2) * spec.wavelength.powi(2) * u * u)
        }
    })
}

pub fn per_pulse_dv(spec: &LaserSpec, body: &DebrisBody, range_km: f64) -> Result<f64, AblationError> {
    let phi = fluence(spec, range_km)?;
    let impulse_per_area = spec.eta * spec.coupling_si() * phi;
    match (body.surface_density, body.mass) {
        (Some(rho), _) if rho > 0.0 => Ok(impulse_per_area / rho),
        (_, Some(m)) if m > 0.0 => Ok(impulse_per_area * body.cross_section / m),
        _ => Err(AblationError::UnresolvableBody(body.id.clone())),
    }
}

/// Δv imparted by one platform over one engagement window, pushing the
/// debris along the platform-to-debris line.
pub fn engagement_dv(
    spec: &LaserSpec,
    body: &DebrisBody,
    platform: &StateVector,
    debris: &StateVector,
) -> Result<DeltaV, AblationError> {
    let baseline = debris.r - platform.r;
    let range = baseline.norm();
    if range < 1e-3 {
        return Err(AblationError::ZeroBaseline);
    }
    let per_pulse = per_pulse_dv(spec, body, range)?;
    let n = spec.pulses_per_engagement() as f64;
    Ok(DeltaV::new(baseline / range * (n * per_pulse)))
}

pub fn compose_dva(contributions: &[DeltaV]) -> DeltaV {
    DeltaV::new(contributions.iter().fold(Vector3::zeros(), |acc, dv| acc + dv.vec))
}

/// Instantaneous impulse: position kept, velocity (km/s) bumped by Δv (m/s).
pub fn apply_engagement(state: &StateVector, dv: &DeltaV) -> StateVector {
    StateVector { r: state.r, v: state.v + dv.vec / 1000.0, epoch_step: state.epoch_step }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::astro::{elements_to_state, AstroConstants};

    fn spec(mode: FluenceMode) -> LaserSpec {
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
            fluence_mode: mode,
        }
    }

    fn plate(rho: f64) -> DebrisBody {
        DebrisBody {
            id: "d".into(),
            mass: None,
            surface_density: Some(rho),
            cross_section: 1.0,
            elements: OrbitElements::new(7000.0, 0.0, 0.5, 0.0, 0.0, 0.0).unwrap(),
        }
    }

    #[test]
    fn constant_fluence_ignores_range() {
        let s = spec(FluenceMode::ConstantFluence { phi_opt: 8500.0 });
        assert_eq!(fluence(&s, 250.0).unwrap(), 8500.0);
        assert!(matches!(fluence(&s, 400.0), Err(AblationError::RangeViolation { .. })));
    }

    #[test]
    fn density_scales_inverse() {
        let s = spec(FluenceMode::ConstantFluence { phi_opt: 8500.0 });
        let a = per_pulse_dv(&s, &plate(1.0), 200.0).unwrap();
        let b = per_pulse_dv(&s, &plate(2.0), 200.0).unwrap();
        assert!((a - 2.0 * b).abs() < 1e-15);
    }

    #[test]
    fn unresolvable_body() {
        let s = spec(FluenceMode::ConstantFluence { phi_opt: 8500.0 });
        let mut d = plate(1.0);
        d.surface_density = None;
        assert!(matches!(per_pulse_dv(&s, &d, 200.0), Err(AblationError::UnresolvableBody(_))));
    }

    #[test]
    fn radial_geometry_gives_radial_push() {
        let s = spec(FluenceMode::ConstantFluence { phi_opt: 8500.0 });
        let k = AstroConstants::default();
        let d = elements_to_state(&OrbitElements::new(7000.0, 0.0, 0.3, 0.2, 0.0, 1.0).unwrap(), &k, 0);
        let p = StateVector::new(d.r * (6800.0 / 7000.0), d.v, 0);
        let dv = engagement_dv(&s, &plate(1.0), &p, &d).unwrap();
        let radial = d.r.normalize();
        assert!((dv.vec.normalize() - radial).norm() < 1e-12);
        assert!((dv.magnitude - 560.0 * 0.5 * 99e-6 * 8500.0).abs() < 1e-9);
    }

    #[test]
    fn impulse_keeps_position() {
        let k = AstroConstants::default();
        let d = elements_to_state(&OrbitElements::new(7000.0, 0.0, 0.3, 0.2, 0.0, 1.0).unwrap(), &k, 3);
        let out = apply_engagement(&d, &DeltaV::new(Vector3::new(1.0, -2.0, 3.0)));
        assert_eq!(out.r, d.r);
        assert_eq!(apply_engagement(&d, &DeltaV::zero()), d);
    }
}
