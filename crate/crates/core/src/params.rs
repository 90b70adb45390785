// SPDX-License-Identifier: Apache-2.0

//! Parameter types for the undriven TLS, its drives, the flux bias and the
//! readout tank, together with the derived scalars (gap, detuning, Rabi
//! frequency, equilibrium polarization).
//!
//! All frequencies are angular (rad/s) with ħ = 1. The Bloch equations are
//! written with Δ_ε/ħ; here that is simply `gap()`.

use serde::{Deserialize, Serialize};

use crate::error::{finite, Error, Result};
use crate::units::{joule_to_angular, HBAR, K_B};

/// How the equilibrium polarization Z₀ = −tanh(x) is argued.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolarizationConvention {
    /// x = ħΔ_ε / k_B T, the convention of this readout model.
    #[default]
    FullGap,
    /// x = ħΔ_ε / 2k_B T, the canonical two-level thermal population difference.
    HalfGap,
}

/// Sign of the term in the slow ⟨σ_X⟩, ⟨σ_Y⟩ response that is driven
/// directly by the probe (the `2 g P_Z Z₀` term), and of the adiabatic
/// tank shift that descends from it.
///
/// Written with `+2 g P_Z Z₀`, the closed forms carry the opposite sign to
/// what the Bloch equations produce. `Bloch` is the sign the time-domain
/// integration confirms; `Reversed` keeps the `+` arrangement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectTermSign {
    #[default]
    Bloch,
    Reversed,
}

impl DirectTermSign {
    /// Multiplier applied to `+2 P_Z Z₀`.
    pub fn factor(self) -> f64 {
        match self {
            DirectTermSign::Bloch => -1.0,
            DirectTermSign::Reversed => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Conventions {
    #[serde(default)]
    pub polarization: PolarizationConvention,
    #[serde(default)]
    pub direct_term: DirectTermSign,
}

/// The undriven two-level system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlsParams {
    /// Tunnelling amplitude Δ, rad/s.
    pub delta: f64,
    /// Bias ε, rad/s.
    pub epsilon: f64,
    /// Bath temperature, K.
    pub temperature: f64,
    /// Dephasing rate Γ, rad/s.
    pub gamma_phi: f64,
    /// Relaxation rate Γ_Z, rad/s.
    pub gamma_z: f64,
    #[serde(default)]
    pub conventions: Conventions,
}

impl TlsParams {
    pub fn new(delta: f64, epsilon: f64, temperature: f64, gamma_phi: f64, gamma_z: f64) -> Result<Self> {
        let p = TlsParams {
            delta,
            epsilon,
            temperature,
            gamma_phi,
            gamma_z,
            conventions: Conventions::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_conventions(mut self, conventions: Conventions) -> Self {
        self.conventions = conventions;
        self
    }

    pub fn with_direct_term(mut self, sign: DirectTermSign) -> Self {
        self.conventions.direct_term = sign;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        finite("delta", self.delta)?;
        finite("epsilon", self.epsilon)?;
        finite("temperature", self.temperature)?;
        finite("gamma_phi", self.gamma_phi)?;
        finite("gamma_z", self.gamma_z)?;
        if self.delta <= 0.0 {
            return Err(Error::invalid("delta", "tunnelling amplitude must be positive"));
        }
        if self.gamma_phi < 0.0 {
            return Err(Error::invalid("gamma_phi", "rate must be non-negative"));
        }
        if self.gamma_z < 0.0 {
            return Err(Error::invalid("gamma_z", "rate must be non-negative"));
        }
        if self.temperature < 0.0 {
            return Err(Error::invalid("temperature", "must be non-negative"));
        }
        Ok(())
    }

    /// Level splitting Δ_ε, rad/s.
    pub fn gap(&self) -> f64 {
        self.delta.hypot(self.epsilon)
    }

    pub fn eps_over_delta(&self) -> f64 {
        self.epsilon / self.delta
    }

    /// Equilibrium polarization Z₀ under the configured convention.
    pub fn z0(&self) -> f64 {
        polarization(self.gap(), self.temperature, self.conventions.polarization)
    }
}

/// Level splitting sqrt(Δ² + ε²).
pub fn eigenbasis_gap(delta: f64, epsilon: f64) -> Result<f64> {
    finite("delta", delta)?;
    finite("epsilon", epsilon)?;
    if delta <= 0.0 {
        return Err(Error::invalid("delta", "tunnelling amplitude must be positive"));
    }
    Ok(delta.hypot(epsilon))
}

/// Z₀ = −tanh(ħΔ_ε / k_B T); −1 at T = 0.
pub fn equilibrium_polarization(delta_eps: f64, temperature: f64) -> f64 {
    polarization(delta_eps, temperature, PolarizationConvention::FullGap)
}

pub fn polarization(delta_eps: f64, temperature: f64, convention: PolarizationConvention) -> f64 {
    if delta_eps == 0.0 {
        return 0.0;
    }
    if temperature <= 0.0 {
        return -delta_eps.signum();
    }
    let x = HBAR * delta_eps / (K_B * temperature);
    let x = match convention {
        PolarizationConvention::FullGap => x,
        PolarizationConvention::HalfGap => 0.5 * x,
    };
    -x.tanh()
}

/// Ω_R = sqrt(δ² + f²).
pub fn rabi_frequency(detuning: f64, f: f64) -> f64 {
    detuning.hypot(f)
}

/// Flux bias of a persistent-current qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxSpec {
    /// f_X = Φ_X/Φ₀ − 1/2.
    pub f_x: f64,
    /// Josephson energy, J.
    pub e_j: f64,
    /// Persistent current, A.
    pub i_q: f64,
}

impl FluxSpec {
    pub fn new(f_x: f64, e_j: f64, i_q: f64) -> Result<Self> {
        finite("f_x", f_x)?;
        finite("e_j", e_j)?;
        finite("i_q", i_q)?;
        if e_j <= 0.0 {
            return Err(Error::invalid("e_j", "must be positive"));
        }
        if i_q <= 0.0 {
            return Err(Error::invalid("i_q", "must be positive"));
        }
        Ok(FluxSpec { f_x, e_j, i_q })
    }
}

/// ε = E_J f_X / ħ.
pub fn flux_to_bias(flux: &FluxSpec) -> f64 {
    joule_to_angular(flux.e_j * flux.f_x)
}

/// High-frequency carrier plus low-frequency probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    /// Reduced carrier amplitude f = ΔF/ħΔ_ε, rad/s.
    pub f: f64,
    /// Carrier frequency ω₀, rad/s.
    pub omega0: f64,
    /// Reduced probe amplitude g₀, rad/s.
    pub g0: f64,
    /// Probe frequency ω, rad/s.
    pub omega: f64,
}

impl DriveParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("f", self.f), ("omega0", self.omega0), ("g0", self.g0), ("omega", self.omega)] {
            finite(name, v)?;
        }
        if self.f < 0.0 {
            return Err(Error::invalid("f", "must be non-negative"));
        }
        if self.g0 < 0.0 {
            return Err(Error::invalid("g0", "must be non-negative"));
        }
        if self.omega0 <= 0.0 {
            return Err(Error::invalid("omega0", "must be positive"));
        }
        if self.omega <= 0.0 {
            return Err(Error::invalid("omega", "must be positive"));
        }
        Ok(())
    }

    /// δ = ω₀ − Δ_ε.
    pub fn detuning(&self, tls: &TlsParams) -> f64 {
        self.omega0 - tls.gap()
    }

    pub fn rabi(&self, tls: &TlsParams) -> f64 {
        rabi_frequency(self.detuning(tls), self.f)
    }

    /// Warning text when the carrier leaves the weak-drive regime (f/Δ > 0.1).
    pub fn weak_drive_warning(&self, tls: &TlsParams) -> Option<String> {
        let ratio = self.f / tls.delta;
        (ratio > 0.1).then(|| format!("f/Δ = {ratio:.3} exceeds 0.1; the Bloch-type equations assume f ≪ Δ"))
    }
}

/// Readout tank circuit inductively coupled to the qubit loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TankParams {
    /// Resonance ω_T = (L_T C_T)^(-1/2), rad/s.
    pub omega_t: f64,
    /// Quality factor Q_T.
    pub q_t: f64,
    /// Tank inductance L_T, H.
    pub l_t: f64,
    /// Dimensionless coupling k.
    pub k: f64,
    /// Qubit loop inductance L_q, H.
    pub l_q: f64,
    /// Persistent current I_q, A.
    pub i_q: f64,
    /// Bias current amplitude I₀, A.
    pub i0: f64,
}

impl TankParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega_t", self.omega_t),
            ("q_t", self.q_t),
            ("l_t", self.l_t),
            ("k", self.k),
            ("l_q", self.l_q),
            ("i_q", self.i_q),
            ("i0", self.i0),
        ] {
            finite(name, v)?;
        }
        if self.omega_t <= 0.0 {
            return Err(Error::invalid("omega_t", "must be positive"));
        }
        if self.q_t <= 0.0 {
            return Err(Error::invalid("q_t", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.k) {
            return Err(Error::invalid("k", "coupling must lie in [0, 1)"));
        }
        if self.l_t <= 0.0 {
            return Err(Error::invalid("l_t", "must be positive"));
        }
        if self.l_q <= 0.0 {
            return Err(Error::invalid("l_q", "must be positive"));
        }
        Ok(())
    }

    /// γ_T = ω_T / Q_T.
    pub fn gamma_t(&self) -> f64 {
        self.omega_t / self.q_t
    }

    /// M = k sqrt(L_q L_T).
    pub fn mutual(&self) -> f64 {
        self.k * (self.l_q * self.l_t).sqrt()
    }

    pub fn c_t(&self) -> f64 {
        1.0 / (self.omega_t * self.omega_t * self.l_t)
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k = k;
        self
    }
}
