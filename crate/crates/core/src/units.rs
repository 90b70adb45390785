// SPDX-License-Identifier: Apache-2.0

//! Physical constants and the boundary unit convention.
//!
//! Internally every frequency and rate is an angular frequency in rad/s and
//! energies are expressed as angular frequencies with ħ = 1 (E/ħ). Inputs may
//! be tagged as ordinary frequencies (value = ω/2π); the conversion happens
//! once, here.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant, J·s (CODATA 2018, exact).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Planck constant, J·s (exact).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant, J/K (exact).
pub const K_B: f64 = 1.380_649e-23;
/// Elementary charge, C (exact).
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Superconducting flux quantum h/2e, Wb.
pub const PHI_0: f64 = PLANCK / (2.0 * E_CHARGE);

/// Energy in joule to angular frequency (rad/s).
#[inline]
pub fn joule_to_angular(e: f64) -> f64 {
    e / HBAR
}

/// Angular frequency (rad/s) to energy in joule.
#[inline]
pub fn angular_to_joule(w: f64) -> f64 {
    w * HBAR
}

/// Ordinary frequency in Hz to rad/s.
#[inline]
pub fn hz(f: f64) -> f64 {
    TAU * f
}

/// Shorthand for a MHz-tagged ordinary frequency.
#[inline]
pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e6
}

/// Shorthand for a GHz-tagged ordinary frequency.
#[inline]
pub fn ghz(f: f64) -> f64 {
    TAU * f * 1e9
}

/// rad/s back to ordinary frequency in Hz.
#[inline]
pub fn over_2pi(w: f64) -> f64 {
    w / TAU
}

/// Unit tag carried by frequency-valued inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FreqUnit {
    #[serde(rename = "Hz")]
    Hz,
    #[serde(rename = "kHz")]
    KHz,
    #[serde(rename = "MHz")]
    MHz,
    #[serde(rename = "GHz")]
    GHz,
    #[serde(rename = "rad_s")]
    RadPerSecond,
}

impl FreqUnit {
    fn scale(self) -> f64 {
        match self {
            FreqUnit::Hz => TAU,
            FreqUnit::KHz => TAU * 1e3,
            FreqUnit::MHz => TAU * 1e6,
            FreqUnit::GHz => TAU * 1e9,
            FreqUnit::RadPerSecond => 1.0,
        }
    }

    /// Tagged input value to internal rad/s.
    pub fn to_internal(self, value: f64) -> f64 {
        value * self.scale()
    }

    /// Internal rad/s back to a value in this unit.
    pub fn from_internal(self, omega: f64) -> f64 {
        omega / self.scale()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnergyUnit {
    J,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TemperatureUnit {
    K,
    #[serde(rename = "mK")]
    MilliK,
}

impl TemperatureUnit {
    pub fn to_kelvin(self, value: f64) -> f64 {
        match self {
            TemperatureUnit::K => value,
            TemperatureUnit::MilliK => value * 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InductanceUnit {
    H,
    #[serde(rename = "nH")]
    NanoH,
    #[serde(rename = "pH")]
    PicoH,
}

impl InductanceUnit {
    pub fn to_henry(self, value: f64) -> f64 {
        match self {
            InductanceUnit::H => value,
            InductanceUnit::NanoH => value * 1e-9,
            InductanceUnit::PicoH => value * 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurrentUnit {
    A,
    #[serde(rename = "uA")]
    MicroA,
    #[serde(rename = "nA")]
    NanoA,
    #[serde(rename = "pA")]
    PicoA,
}

impl CurrentUnit {
    pub fn to_ampere(self, value: f64) -> f64 {
        match self {
            CurrentUnit::A => value,
            CurrentUnit::MicroA => value * 1e-6,
            CurrentUnit::NanoA => value * 1e-9,
            CurrentUnit::PicoA => value * 1e-12,
        }
    }
}

/// `{"value": .., "unit": ..}` as it appears in parameter files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tagged<U> {
    pub value: f64,
    pub unit: U,
}

pub type Frequency = Tagged<FreqUnit>;
pub type Energy = Tagged<EnergyUnit>;
pub type Temperature = Tagged<TemperatureUnit>;
pub type Inductance = Tagged<InductanceUnit>;
pub type Current = Tagged<CurrentUnit>;

impl Frequency {
    pub fn rad_s(omega: f64) -> Self {
        Tagged {
            value: omega,
            unit: FreqUnit::RadPerSecond,
        }
    }

    #[allow(clippy::self_named_constructors)]
    pub fn tagged(value: f64, unit: FreqUnit) -> Self {
        Tagged { value, unit }
    }

    pub fn angular(&self) -> Result<f64> {
        check_value(self.value)?;
        Ok(self.unit.to_internal(self.value))
    }
}

impl Energy {
    pub fn joule(value: f64) -> Self {
        Tagged {
            value,
            unit: EnergyUnit::J,
        }
    }

    pub fn angular(&self) -> Result<f64> {
        check_value(self.value)?;
        Ok(joule_to_angular(self.value))
    }

    pub fn joules(&self) -> Result<f64> {
        check_value(self.value)
    }
}

impl Temperature {
    pub fn kelvin(&self) -> Result<f64> {
        check_value(self.value)?;
        Ok(self.unit.to_kelvin(self.value))
    }
}

impl Inductance {
    pub fn henry(&self) -> Result<f64> {
        check_value(self.value)?;
        Ok(self.unit.to_henry(self.value))
    }
}

impl Current {
    pub fn ampere(&self) -> Result<f64> {
        check_value(self.value)?;
        Ok(self.unit.to_ampere(self.value))
    }
}

fn check_value(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite("value"))
    }
}
