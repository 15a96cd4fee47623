//! Two-variable ionic models: ionic current, gating right-hand side, their
//! partial derivatives and the exponential gating update.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IonicModel {
    #[serde(rename = "fitzhugh-nagumo")]
    FitzHughNagumo,
    #[serde(rename = "rogers-mcculloch")]
    RogersMcCulloch,
    AlievPanfilov,
}

impl IonicModel {
    pub const ALL: [IonicModel; 3] = [
        IonicModel::FitzHughNagumo,
        IonicModel::RogersMcCulloch,
        IonicModel::AlievPanfilov,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IonicModel::FitzHughNagumo => "fitzhugh-nagumo",
            IonicModel::RogersMcCulloch => "rogers-mcculloch",
            IonicModel::AlievPanfilov => "aliev-panfilov",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IonicParams {
    pub kind: IonicModel,
    pub a: f64,
    /// Ignored by FitzHugh-Nagumo.
    pub b: f64,
    pub kappa: f64,
    pub eps: f64,
}

impl IonicParams {
    /// Defaults a = 0.13, b = 1, κ = 4, ε = 0.01.
    pub fn new(kind: IonicModel) -> Self {
        IonicParams {
            kind,
            a: 0.13,
            b: 1.0,
            kappa: 4.0,
            eps: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a < 1.0) {
            return Err(Error::validation("a", format!("{} is outside (0, 1)", self.a)));
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::validation("b", format!("{} is not positive", self.b)));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::validation("kappa", format!("{} is not positive", self.kappa)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::validation("eps", format!("{} is not positive", self.eps)));
        }
        Ok(())
    }

    fn b_eff(&self) -> f64 {
        match self.kind {
            IonicModel::FitzHughNagumo => 1.0,
            _ => self.b,
        }
    }
}

/// Ionic current `I_ion(φ, w)`.
#[inline]
pub fn i_ion(p: &IonicParams, phi: f64, w: f64) -> f64 {
    let a = p.a;
    match p.kind {
        IonicModel::FitzHughNagumo => phi * phi * phi - (a + 1.0) * phi * phi + a * phi + w,
        _ => {
            let b = p.b;
            b * phi * phi * phi - (a + 1.0) * b * phi * phi + a * b * phi + phi * w
        }
    }
}

/// Gating source `s(φ)` with `∂w/∂t + ε w = ε s(φ)`.
#[inline]
pub fn gate_source(p: &IonicParams, phi: f64) -> f64 {
    match p.kind {
        IonicModel::AlievPanfilov => p.kappa * ((p.a + 1.0) * phi - phi * phi),
        _ => p.kappa * phi,
    }
}

#[inline]
pub fn gate_source_derivative(p: &IonicParams, phi: f64) -> f64 {
    match p.kind {
        IonicModel::AlievPanfilov => p.kappa * (p.a + 1.0 - 2.0 * phi),
        _ => p.kappa,
    }
}

/// `G(φ, w) = ε w − ε s(φ)`
#[inline]
pub fn g_gate(p: &IonicParams, phi: f64, w: f64) -> f64 {
    p.eps * w - p.eps * gate_source(p, phi)
}

/// `(∂I_ion/∂φ, ∂I_ion/∂w)`
#[inline]
pub fn d_i_ion(p: &IonicParams, phi: f64, w: f64) -> (f64, f64) {
    let a = p.a;
    let b = p.b_eff();
    match p.kind {
        IonicModel::FitzHughNagumo => (3.0 * phi * phi - 2.0 * (a + 1.0) * phi + a, 1.0),
        _ => (
            3.0 * b * phi * phi - 2.0 * (a + 1.0) * b * phi + a * b + w,
            phi,
        ),
    }
}

/// `(∂G/∂φ, ∂G/∂w)`
#[inline]
pub fn d_g(p: &IonicParams, phi: f64, _w: f64) -> (f64, f64) {
    (-p.eps * gate_source_derivative(p, phi), p.eps)
}

/// Exponential integrator for the gating ODE over one step, with the source
/// evaluated at the mean of the two endpoint samples.
#[inline]
pub fn gating_exact_update(p: &IonicParams, w_prev: f64, phi_prev: f64, phi_next: f64, dt: f64) -> f64 {
    let e = (-p.eps * dt).exp();
    e * w_prev + (1.0 - e) * gate_source(p, 0.5 * (phi_prev + phi_next))
}

/// Both sides of the factorisation of the cubic difference
/// `f(φ1) − f(φ2) = (φ1 − φ2)(φ1² + φ1φ2 + φ2² − (a+1)(φ1+φ2) + a)` with
/// `f(φ) = φ³ − (a+1)φ² + aφ`.
pub fn cubic_difference_sides(phi1: f64, phi2: f64, a: f64) -> (f64, f64) {
    let f = |p: f64| p * p * p - (a + 1.0) * p * p + a * p;
    let lhs = f(phi1) - f(phi2);
    let rhs = (phi1 - phi2) * (phi1 * phi1 + phi1 * phi2 + phi2 * phi2 - (a + 1.0) * (phi1 + phi2) + a);
    (lhs, rhs)
}
