//! Two-body orbits with secular J2 drift.
//!
//! Elements are osculating Keplerian elements in km and radians. For
//! circular orbits (`ecc < CIRCULAR_ECC`) the argument of perigee is pinned
//! to zero and `anomaly` carries the argument of latitude, which is how
//! constellation slot tables are usually written.

use std::f64::consts::{PI, TAU};

use chrono::{DateTime, Utc};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CIRCULAR_ECC: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AstroError {
    #[error("invalid elements: {0}")]
    InvalidElements(String),
    #[error("state is not elliptic (ecc = {ecc})")]
    HyperbolicState { ecc: f64 },
    #[error("state is rectilinear (zero angular momentum)")]
    RectilinearState,
    #[error("step range {from}..{to} outside a grid of {steps} steps")]
    StepOutOfRange { from: usize, to: usize, steps: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AstroConstants {
    pub mu: f64,
    pub r_earth: f64,
    pub j2: f64,
}

impl Default for AstroConstants {
    fn default() -> Self {
        Self { mu: 398_600.441_8, r_earth: 6_378.137, j2: 1.082_626_68e-3 }
    }
}

impl AstroConstants {
    /// Same gravity field with the J2 term switched off.
    pub fn keplerian(self) -> Self {
        Self { j2: 0.0, ..self }
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Signed difference `a - b` folded into (-π, π].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitElements {
    pub sma: f64,
    pub ecc: f64,
    pub inc: f64,
    pub raan: f64,
    pub argp: f64,
    /// True anomaly, or argument of latitude on circular orbits.
    pub anomaly: f64,
}

impl OrbitElements {
    pub fn new(sma: f64, ecc: f64, inc: f64, raan: f64, argp: f64, anomaly: f64) -> Result<Self, AstroError> {
        if !(sma.is_finite() && sma > 0.0) {
            return Err(AstroError::InvalidElements(format!("sma must be positive, got {sma}")));
        }
        if !(ecc.is_finite() && (0.0..1.0).contains(&ecc)) {
            return Err(AstroError::InvalidElements(format!("ecc must be in [0, 1), got {ecc}")));
        }
        if !(inc.is_finite() && (0.0..=PI).contains(&inc)) {
            return Err(AstroError::InvalidElements(format!("inc must be in [0, pi], got {inc}")));
        }
        if ![raan, argp, anomaly].iter().all(|a| a.is_finite()) {
            return Err(AstroError::InvalidElements("angles must be finite".into()));
        }
        let circular = ecc < CIRCULAR_ECC;
        Ok(Self {
            sma,
            ecc,
            inc,
            raan: wrap_angle(raan),
            argp: if circular { 0.0 } else { wrap_angle(argp) },
            anomaly: if circular { wrap_angle(argp + anomaly) } else { wrap_angle(anomaly) },
        })
    }

    /// Circular orbit from altitude and angles in degrees.
    pub fn circular_deg(sma: f64, inc_deg: f64, raan_deg: f64, arg_lat_deg: f64) -> Result<Self, AstroError> {
        Self::new(sma, 0.0, inc_deg.to_radians(), raan_deg.to_radians(), 0.0, arg_lat_deg.to_radians())
    }

    pub fn is_circular(&self) -> bool {
        self.ecc < CIRCULAR_ECC
    }

    pub fn semi_latus_rectum(&self) -> f64 {
        self.sma * (1.0 - self.ecc * self.ecc)
    }

    pub fn periapsis_radius(&self) -> f64 {
        self.sma * (1.0 - self.ecc)
    }

    pub fn apoapsis_radius(&self) -> f64 {
        self.sma * (1.0 + self.ecc)
    }

    pub fn mean_motion(&self, k: &AstroConstants) -> f64 {
        (k.mu / self.sma.powi(3)).sqrt()
    }

    pub fn period(&self, k: &AstroConstants) -> f64 {
        TAU / self.mean_motion(k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub r: Vector3<f64>,
    pub v: Vector3<f64>,
    pub epoch_step: usize,
}

impl StateVector {
    pub fn new(r: Vector3<f64>, v: Vector3<f64>, epoch_step: usize) -> Self {
        Self { r, v, epoch_step }
    }

    pub fn specific_energy(&self, k: &AstroConstants) -> f64 {
        0.5 * self.v.norm_squared() - k.mu / self.r.norm()
    }

    /// Periapsis radius of the osculating conic, valid for any eccentricity.
    pub fn periapsis_radius(&self, k: &AstroConstants) -> Result<f64, AstroError> {
        let h = self.r.cross(&self.v).norm();
        if h == 0.0 || h <= 1e-12 * self.r.norm() * self.v.norm() {
            return Err(AstroError::RectilinearState);
        }
        let e = eccentricity_vector(self, k).norm();
        Ok(h * h / (k.mu * (1.0 + e)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub epoch: DateTime<Utc>,
    /// Seconds between consecutive steps.
    pub step_size: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(epoch: DateTime<Utc>, step_size: f64, steps: usize) -> Result<Self, AstroError> {
        if !(step_size.is_finite() && step_size > 0.0) {
            return Err(AstroError::InvalidElements(format!("step_size must be positive, got {step_size}")));
        }
        if steps < 2 {
            return Err(AstroError::InvalidElements(format!("a grid needs at least 2 steps, got {steps}")));
        }
        Ok(Self { epoch, step_size, steps })
    }

    pub fn time_of(&self, step: usize) -> f64 {
        step as f64 * self.step_size
    }
}

fn rotation(raan: f64, inc: f64, argp: f64) -> nalgebra::Matrix3<f64> {
    let (so, co) = raan.sin_cos();
    let (si, ci) = inc.sin_cos();
    let (sw, cw) = argp.sin_cos();
    nalgebra::Matrix3::new(
        co * cw - so * sw * ci,
        -co * sw - so * cw * ci,
        so * si,
        so * cw + co * sw * ci,
        -so * sw + co * cw * ci,
        -co * si,
        sw * si,
        cw * si,
        ci,
    )
}

pub fn elements_to_state(el: &OrbitElements, k: &AstroConstants, epoch_step: usize) -> StateVector {
    let p = el.semi_latus_rectum();
    let (sn, cn) = el.anomaly.sin_cos();
    let radius = p / (1.0 + el.ecc * cn);
    let r_pf = Vector3::new(radius * cn, radius * sn, 0.0);
    let vk = (k.mu / p).sqrt();
    let v_pf = Vector3::new(-vk * sn, vk * (el.ecc + cn), 0.0);
    let rot = rotation(el.raan, el.inc, el.argp);
    StateVector { r: rot * r_pf, v: rot * v_pf, epoch_step }
}

fn eccentricity_vector(sv: &StateVector, k: &AstroConstants) -> Vector3<f64> {
    let r = sv.r.norm();
    ((sv.v.norm_squared() - k.mu / r) * sv.r - sv.r.dot(&sv.v) * sv.v) / k.mu
}

pub fn state_to_elements(sv: &StateVector, k: &AstroConstants) -> Result<OrbitElements, AstroError> {
    let r = sv.r.norm();
    let h_vec = sv.r.cross(&sv.v);
    let h = h_vec.norm();
    if r == 0.0 || h <= 1e-12 * r * sv.v.norm() || h == 0.0 {
        return Err(AstroError::RectilinearState);
    }
    let e_vec = eccentricity_vector(sv, k);
    let ecc = e_vec.norm();
    let energy = sv.specific_energy(k);
    if ecc >= 1.0 || energy >= 0.0 {
        return Err(AstroError::HyperbolicState { ecc });
    }
    let sma = -k.mu / (2.0 * energy);
    let h_hat = h_vec / h;
    let inc = h_hat.z.clamp(-1.0, 1.0).acos();
    let node = Vector3::z().cross(&h_vec);
    let (raan, n_hat) = if node.norm() > 1e-11 * h {
        (node.y.atan2(node.x), node.normalize())
    } else {
        (0.0, Vector3::x())
    };
    let in_plane = h_hat.cross(&n_hat);
    let angle_from = |axis: &Vector3<f64>, perp: &Vector3<f64>, v: &Vector3<f64>| v.dot(perp).atan2(v.dot(axis));
    if ecc < CIRCULAR_ECC {
        let u = angle_from(&n_hat, &in_plane, &sv.r);
        return OrbitElements::new(sma, ecc, inc, raan, 0.0, u);
    }
    let argp = angle_from(&n_hat, &in_plane, &e_vec);
    let e_hat = e_vec / ecc;
    let nu = angle_from(&e_hat, &h_hat.cross(&e_hat), &sv.r);
    OrbitElements::new(sma, ecc, inc, raan, argp, nu)
}

/// Eccentric anomaly for mean anomaly `m`; Newton with a bisection
/// fallback, residual below 1e-12.
pub fn solve_kepler(m: f64, ecc: f64) -> f64 {
    let m = wrap_angle(m);
    if ecc == 0.0 {
        return m;
    }
    let f = |e: f64| e - ecc * e.sin() - m;
    let mut e = if ecc > 0.8 { PI } else { m + ecc * m.sin() };
    for _ in 0..50 {
        let r = f(e);
        if r.abs() < 1e-13 {
            return e;
        }
        let step = r / (1.0 - ecc * e.cos());
        e -= step;
        if !e.is_finite() || !(-0.5..=TAU + 0.5).contains(&e) {
            break;
        }
    }
    if e.is_finite() && f(e).abs() < 1e-12 {
        return e;
    }
    let (mut lo, mut hi) = (0.0, TAU);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

pub fn true_to_mean(nu: f64, ecc: f64) -> f64 {
    let e_anom = 2.0 * (((1.0 - ecc) / (1.0 + ecc)).sqrt() * (0.5 * nu).tan()).atan();
    wrap_angle(e_anom - ecc * e_anom.sin())
}

pub fn mean_to_true(m: f64, ecc: f64) -> f64 {
    let e_anom = solve_kepler(m, ecc);
    let (s, c) = (0.5 * e_anom).sin_cos();
    wrap_angle(2.0 * ((1.0 + ecc).sqrt() * s).atan2((1.0 - ecc).sqrt() * c))
}

/// First-order secular rates (rad/s) of RAAN, argument of perigee and mean
/// anomaly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecularRates {
    pub raan_dot: f64,
    pub argp_dot: f64,
    pub mean_anomaly_dot: f64,
}

pub fn secular_rates(el: &OrbitElements, k: &AstroConstants) -> SecularRates {
    let n = el.mean_motion(k);
    let p = el.semi_latus_rectum();
    let f = k.j2 * (k.r_earth / p).powi(2);
    // cos(pi/2) is 6e-17 in floating point; polar orbits must not precess.
    let ci = if el.inc == PI / 2.0 { 0.0 } else { el.inc.cos() };
    let ci2 = ci * ci;
    SecularRates {
        raan_dot: -1.5 * n * f * ci,
        argp_dot: 0.75 * n * f * (5.0 * ci2 - 1.0),
        mean_anomaly_dot: n + 0.75 * n * f * (1.0 - el.ecc * el.ecc).sqrt() * (3.0 * ci2 - 1.0),
    }
}

/// Advances elements by `dt` seconds under secular J2.
pub fn propagate_dt(el: &OrbitElements, dt: f64, k: &AstroConstants) -> OrbitElements {
    let rates = secular_rates(el, k);
    let raan = wrap_angle(el.raan + rates.raan_dot * dt);
    if el.is_circular() {
        let u = wrap_angle(el.anomaly + (rates.argp_dot + rates.mean_anomaly_dot) * dt);
        return OrbitElements { raan, argp: 0.0, anomaly: u, ..*el };
    }
    let argp = wrap_angle(el.argp + rates.argp_dot * dt);
    let m = true_to_mean(el.anomaly, el.ecc) + rates.mean_anomaly_dot * dt;
    OrbitElements { raan, argp, anomaly: mean_to_true(m, el.ecc), ..*el }
}

pub fn propagate_j2(
    el: &OrbitElements,
    grid: &TimeGrid,
    from_step: usize,
    to_step: usize,
    k: &AstroConstants,
) -> Result<OrbitElements, AstroError> {
    if from_step > to_step || to_step >= grid.steps {
        return Err(AstroError::StepOutOfRange { from: from_step, to: to_step, steps: grid.steps });
    }
    Ok(propagate_dt(el, (to_step - from_step) as f64 * grid.step_size, k))
}

/// States at every grid step from `from_step` on (entries before it are
/// copies of the initial state).
pub fn state_history(el: &OrbitElements, grid: &TimeGrid, from_step: usize, k: &AstroConstants) -> Vec<StateVector> {
    (0..grid.steps)
        .map(|t| {
            let dt = t.saturating_sub(from_step) as f64 * grid.step_size;
            elements_to_state(&propagate_dt(el, dt, k), k, t)
        })
        .collect()
}
