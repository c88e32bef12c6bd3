//! Semiclassical estimates of the half-flux and zero-flux gaps.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::spectra::CircuitParams;

/// Apéry's constant ζ(3).
pub const ZETA_3: f64 = 1.202_056_903_159;

/// Ratio below which a "much smaller than" condition is considered met.
pub const VALIDITY_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityCheck {
    pub ratio: f64,
    pub pass: bool,
}

impl ValidityCheck {
    fn new(ratio: f64) -> Self {
        ValidityCheck {
            ratio,
            pass: ratio < VALIDITY_THRESHOLD,
        }
    }
}

/// Advisory checks of the semiclassical regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WkbValidity {
    /// `E_C / E_J`.
    pub charging_over_josephson: ValidityCheck,
    /// `max(Δ2π, Δ4π) / E_L`.
    pub gap_over_inductive: ValidityCheck,
    /// `E_L / ω_p`.
    pub inductive_over_plasma: ValidityCheck,
}

impl WkbValidity {
    pub fn all_pass(&self) -> bool {
        self.charging_over_josephson.pass && self.gap_over_inductive.pass && self.inductive_over_plasma.pass
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WkbGaps {
    /// GHz.
    pub delta_2pi: f64,
    /// GHz.
    pub delta_4pi: f64,
    pub validity: WkbValidity,
}

fn check(cp: &CircuitParams) -> Result<()> {
    cp.validate()?;
    if cp.e_j.is_nan() || cp.e_j <= 0.0 {
        return Err(CoreError::invalid("e_j", "WKB gaps need E_J > 0"));
    }
    Ok(())
}

fn delta_2pi_unchecked(cp: &CircuitParams) -> f64 {
    let wp = cp.plasma_frequency();
    let prefactor = 4.0 * wp * (2.0 * cp.e_j / (PI * PI * cp.e_c)).powf(0.25);
    let exponent = -(8.0 * cp.e_j / cp.e_c).sqrt() + 14.0 * ZETA_3 * cp.e_l / wp;
    prefactor * exponent.exp()
}

fn delta_4pi_unchecked(cp: &CircuitParams) -> f64 {
    let wp = cp.plasma_frequency();
    let d2 = delta_2pi_unchecked(cp);
    let base = 8.0 * (8.0 * cp.e_j / cp.e_c).sqrt();
    let power = 2.0 * cp.e_l * PI * PI / wp;
    d2 * d2 / (4.0 * PI * PI * cp.e_l) * base.powf(power)
}

/// Half-flux gap `Δ2π` in GHz.
pub fn wkb_delta_2pi(cp: &CircuitParams) -> Result<f64> {
    check(cp)?;
    Ok(delta_2pi_unchecked(cp))
}

/// Zero-flux bi-fluxon gap `Δ4π` in GHz.
pub fn wkb_delta_4pi(cp: &CircuitParams) -> Result<f64> {
    check(cp)?;
    Ok(delta_4pi_unchecked(cp))
}

pub fn wkb_validity(cp: &CircuitParams) -> Result<WkbValidity> {
    check(cp)?;
    let gap = delta_2pi_unchecked(cp).max(delta_4pi_unchecked(cp));
    Ok(WkbValidity {
        charging_over_josephson: ValidityCheck::new(cp.e_c / cp.e_j),
        gap_over_inductive: ValidityCheck::new(gap / cp.e_l),
        inductive_over_plasma: ValidityCheck::new(cp.e_l / cp.plasma_frequency()),
    })
}

pub fn wkb_gaps(cp: &CircuitParams) -> Result<WkbGaps> {
    Ok(WkbGaps {
        delta_2pi: wkb_delta_2pi(cp)?,
        delta_4pi: wkb_delta_4pi(cp)?,
        validity: wkb_validity(cp)?,
    })
}
