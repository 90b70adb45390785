// SPDX-License-Identifier: Apache-2.0

//! Tank-circuit readout: effective detuning ξ, effective damping Γ_T, and the
//! measured amplitude V_T and phase χ of V = V_T cos(ωt + χ) relative to the
//! bias current I₀ cos ωt.
//!
//! Three paths are provided. The closed forms for Δ·δ ≫ f² and for δ = 0, and
//! the self-consistent solve of the frequency-domain tank equation that feeds
//! the probe back through the RWA transfer functions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{rabi_frequency, TankParams, TlsParams};
use crate::rwa::{self, RwaInputs};
use crate::units::HBAR;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonanceFns {
    pub f1: f64,
    pub f2: f64,
    pub d: f64,
}

pub fn resonance_functions(omega: f64, omega_r: f64, f: f64, gamma_phi: f64, gamma_z: f64) -> ResonanceFns {
    let (g, gz) = (gamma_phi, gamma_z);
    let w2 = omega * omega;
    let f2_ = f * f;
    let core = omega_r * omega_r + g * g - w2;
    let f1 = (2.0 * g * gz + w2) * core + 2.0 * w2 * g * (gz - 2.0 * g) - 2.0 * f2_ * g * (gz - g);
    let f2 = gz * core + f2_ * (g - gz) - 2.0 * g * (omega_r * omega_r + g * g + 2.0 * g * gz);
    let d = (core * core + 4.0 * w2 * g * g) * (w2 + gz * gz) + f2_ * f2_ * (gz - g).powi(2)
        - 2.0 * f2_ * (gz - g) * (gz * core - 2.0 * w2 * g);
    ResonanceFns { f1, f2, d }
}

/// k²ω_T²(L_qI_q²/ħ)Δ²/Δ_ε³, rad²/s².
pub fn adiabatic_prefactor(tls: &TlsParams, tank: &TankParams) -> f64 {
    let gap = tls.gap();
    let energy = tank.l_q * tank.i_q * tank.i_q / HBAR;
    tank.k * tank.k * tank.omega_t * tank.omega_t * energy * tls.delta * tls.delta / (gap * gap * gap)
}

/// Closed form valid for Δ·δ ≫ f².
pub fn xi_gamma_general(tls: &TlsParams, tank: &TankParams, f: f64, delta: f64, omega: f64) -> Result<(f64, f64)> {
    xi_gamma_general_with(tls, tank, f, delta, omega, resonance_functions)
}

/// Closed form with caller-supplied f1, f2, d (used for mutation checks).
pub fn xi_gamma_general_with(
    tls: &TlsParams,
    tank: &TankParams,
    f: f64,
    delta: f64,
    omega: f64,
    resonance: impl Fn(f64, f64, f64, f64, f64) -> ResonanceFns,
) -> Result<(f64, f64)> {
    let g = tls.gamma_phi;
    let rf = resonance(omega, rabi_frequency(delta, f), f, g, tls.gamma_z);
    if !(rf.d.abs() >= 1e-30) {
        return Err(Error::Singular {
            factor: "d(omega)",
            magnitude: rf.d.abs(),
        });
    }
    let pref = adiabatic_prefactor(tls, tank);
    let pz0 = rwa::pz(delta, f, g, tls.gamma_z).value * tls.z0();
    let r = tls.eps_over_delta();
    let lorentz = delta * delta + g * g;
    let rabi = if f == 0.0 || lorentz == 0.0 {
        0.0
    } else {
        r * r * f * f * tls.gap() * delta / lorentz
    };
    let s = tls.conventions.direct_term.factor();
    let xi = tank.omega_t * tank.omega_t - omega * omega - 2.0 * pref * pz0 * (s + rabi * rf.f1 / rf.d);
    let gamma_t = tank.gamma_t() - 2.0 * pref * pz0 * rabi * rf.f2 / rf.d;
    Ok((xi, gamma_t))
}

/// Closed form at zero carrier detuning.
pub fn xi_gamma_resonant(tls: &TlsParams, tank: &TankParams, f: f64, omega: f64) -> Result<(f64, f64)> {
    let g = tls.gamma_phi;
    if g == 0.0 && f > 0.0 {
        return Err(Error::Singular {
            factor: "Gamma",
            magnitude: 0.0,
        });
    }
    let pref = adiabatic_prefactor(tls, tank);
    let p0z0 = p0(f, g, tls.gamma_z) * tls.z0();
    let r = tls.eps_over_delta();
    let lor = g * g + omega * omega;
    let rabi = if f == 0.0 { 0.0 } else { r * r * f * f / lor };
    let s = tls.conventions.direct_term.factor();
    let xi = tank.omega_t * tank.omega_t - omega * omega - 2.0 * pref * p0z0 * (s + rabi);
    let gamma_t = if f == 0.0 {
        tank.gamma_t()
    } else {
        tank.gamma_t() + 2.0 * pref * p0z0 * rabi / g
    };
    Ok((xi, gamma_t))
}

/// P₀ = Γ_ZΓ/(Γ_ZΓ + f²).
pub fn p0(f: f64, gamma_phi: f64, gamma_z: f64) -> f64 {
    rwa::pz(0.0, f, gamma_phi, gamma_z).value
}

/// V_T = ωω_T²L_TI₀/sqrt(ξ² + ω²Γ_T²) and χ = atan2(ξ, ωΓ_T).
pub fn amplitude_phase(xi: f64, gamma_t_eff: f64, tank: &TankParams, omega: f64) -> Result<(f64, f64)> {
    let im = omega * gamma_t_eff;
    let mag = xi.hypot(im);
    if mag == 0.0 || !mag.is_finite() {
        return Err(Error::Singular {
            factor: "xi and Gamma_T (undefined phase)",
            magnitude: mag,
        });
    }
    let v_t = omega * tank.omega_t * tank.omega_t * tank.l_t * tank.i0 / mag;
    Ok((v_t, xi.atan2(im)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    General,
    ResonantDelta0,
    FullLinearResponse,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::General => "general",
            Regime::ResonantDelta0 => "resonant_delta0",
            Regime::FullLinearResponse => "full_linear_response",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReadoutPoint {
    pub xi: f64,
    pub gamma_t_eff: f64,
    pub v_t: f64,
    pub chi: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FullResponse {
    pub v: Complex64,
    pub point: ReadoutPoint,
}

/// Self-consistent solve with g(ω) = ΔMI_qI_T(ω)/ħΔ_ε and I_T = −iV/ωL_T.
pub fn full_linear_response(tls: &TlsParams, tank: &TankParams, f: f64, delta: f64, omega: f64) -> Result<FullResponse> {
    tank.validate()?;
    let den = effective_denominator(tls, tank, f, delta, omega)?;
    let wt2 = tank.omega_t * tank.omega_t;
    if den.norm() <= 1e-15 * (wt2 + omega * omega) {
        return Err(Error::Singular {
            factor: "effective tank denominator (resonance collision)",
            magnitude: den.norm(),
        });
    }
    let v = Complex64::new(0.0, omega * wt2 * tank.l_t * tank.i0) / den;
    let xi = den.re;
    let gamma_t_eff = den.im / omega;
    let (v_t, chi) = amplitude_phase(xi, gamma_t_eff, tank, omega)?;
    Ok(FullResponse {
        v,
        point: ReadoutPoint {
            xi,
            gamma_t_eff,
            v_t,
            chi,
            regime: Regime::FullLinearResponse,
        },
    })
}

/// D(ω) with V(ω)·D(ω) = iωω_T²L_TI₀.
pub fn effective_denominator(tls: &TlsParams, tank: &TankParams, f: f64, delta: f64, omega: f64) -> Result<Complex64> {
    denominator(tls, tank, f, delta, omega, true)
}

/// D(ω) without the B-quadrature feedback and the Γ(Γ+iω)/Δ_ε² factor.
/// The closed form for Δ·δ ≫ f² is exactly this truncation.
pub fn leading_order_denominator(tls: &TlsParams, tank: &TankParams, f: f64, delta: f64, omega: f64) -> Result<Complex64> {
    denominator(tls, tank, f, delta, omega, false)
}

/// (ξ, Γ_T) from the truncated denominator.
pub fn xi_gamma_leading_order(tls: &TlsParams, tank: &TankParams, f: f64, delta: f64, omega: f64) -> Result<(f64, f64)> {
    let d = leading_order_denominator(tls, tank, f, delta, omega)?;
    Ok((d.re, d.im / omega))
}

fn denominator(tls: &TlsParams, tank: &TankParams, f: f64, delta: f64, omega: f64, full: bool) -> Result<Complex64> {
    let resp = rwa::slow_response(&RwaInputs {
        tls: *tls,
        f,
        delta,
        omega,
    })?;
    let gap = tls.gap();
    let r = tls.eps_over_delta();
    let gw = Complex64::new(tls.gamma_phi, omega);
    let direct = Complex64::from(tls.conventions.direct_term.factor() * 2.0 * resp.p_z * tls.z0());
    // −εΓ_Z Z + ΔΓX + Δ_εΔY with the Γ parts of X and Y cancelled by hand.
    let (b1, a_factor) = if full {
        (direct - r * f * resp.b, 1.0 + tls.gamma_phi * gw / (gap * gap))
    } else {
        (direct, Complex64::from(1.0))
    };
    let k_term = tls.delta * (r * f * resp.a * a_factor + Complex64::new(0.0, omega) * b1 / gap) - tls.epsilon * tls.gamma_z * resp.z;
    let c = tank.k * tank.k * tank.omega_t * tank.omega_t * (tank.l_q * tank.i_q * tank.i_q / HBAR) * tls.delta / (gap * gap);
    let wt2 = tank.omega_t * tank.omega_t;
    Ok(Complex64::new(wt2 - omega * omega, omega * tank.gamma_t()) + Complex64::new(0.0, c / omega) * k_term)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeThresholds {
    /// General closed form when Δ|δ| ≥ ratio·f².
    pub general_ratio: f64,
    /// Resonant closed form when |δ| ≤ fraction·Γ.
    pub resonant_fraction: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        RegimeThresholds {
            general_ratio: 100.0,
            resonant_fraction: 0.01,
        }
    }
}

impl RegimeThresholds {
    pub fn select(&self, tls: &TlsParams, f: f64, delta: f64) -> Regime {
        if delta.abs() <= self.resonant_fraction * tls.gamma_phi {
            Regime::ResonantDelta0
        } else if tls.delta * delta.abs() >= self.general_ratio * f * f {
            Regime::General
        } else {
            Regime::FullLinearResponse
        }
    }
}

/// Evaluate with the path chosen by `thresholds`.
pub fn readout_point(
    tls: &TlsParams,
    tank: &TankParams,
    f: f64,
    delta: f64,
    omega: f64,
    thresholds: &RegimeThresholds,
) -> Result<ReadoutPoint> {
    let regime = thresholds.select(tls, f, delta);
    let (xi, gamma_t_eff) = match regime {
        Regime::ResonantDelta0 => xi_gamma_resonant(tls, tank, f, omega)?,
        Regime::General => xi_gamma_general(tls, tank, f, delta, omega)?,
        Regime::FullLinearResponse => return Ok(full_linear_response(tls, tank, f, delta, omega)?.point),
    };
    let (v_t, chi) = amplitude_phase(xi, gamma_t_eff, tank, omega)?;
    Ok(ReadoutPoint {
        xi,
        gamma_t_eff,
        v_t,
        chi,
        regime,
    })
}

/// Warning when the general closed form is used outside Δ·δ ≫ f².
pub fn general_regime_warning(tls: &TlsParams, f: f64, delta: f64) -> Option<String> {
    let ratio = tls.delta * delta.abs() / (f * f);
    (ratio < 10.0).then(|| format!("Delta*delta/f^2 = {ratio:.3} is below 10; the general closed form is unreliable"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::DirectTermSign;
    use crate::units::{ghz, mhz};
    use rand::{Rng, SeedableRng};

    fn tank(k: f64) -> TankParams {
        TankParams {
            omega_t: mhz(6.0),
            q_t: 2000.0,
            l_t: 100e-9,
            k,
            l_q: 40e-12,
            i_q: 280e-9,
            i0: 1e-12,
        }
    }

    fn tls(eps_ratio: f64) -> TlsParams {
        TlsParams::new(ghz(1.0), eps_ratio * ghz(1.0), 0.01, mhz(4.0), mhz(0.1)).unwrap()
    }

    #[test]
    fn equal_rates_drop_correction_terms() {
        let (w, wr, f, g) = (2.0, 3.0, 1.5, 0.4);
        let r = resonance_functions(w, wr, f, g, g);
        let core = wr * wr + g * g - w * w;
        assert!((r.f1 - ((2.0 * g * g + w * w) * core - 2.0 * w * w * g * g)).abs() < 1e-12);
        assert!((r.d - (core * core + 4.0 * w * w * g * g) * (w * w + g * g)).abs() < 1e-9);
        let z = resonance_functions(0.0, wr, 0.0, g, 0.7);
        assert!((z.d - (wr * wr + g * g).powi(2) * 0.49).abs() < 1e-12);
    }

    #[test]
    fn resonance_functions_match_s() {
        // d = |s|², f1 = Re((2Γ+iω) s̄), ω f2 = Im((2Γ+iω) s̄).
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let (w, wr, f, g, gz) = (
                rng.gen_range(0.0..5.0),
                rng.gen_range(0.0..5.0),
                rng.gen_range(0.0..3.0),
                rng.gen_range(0.01..2.0),
                rng.gen_range(0.01..2.0),
            );
            let s = rwa::s_denominator(w, wr, g, gz, f);
            let rf = resonance_functions(w, wr, f, g, gz);
            let p = Complex64::new(2.0 * g, w) * s.conj();
            let scale = s.norm_sqr().max(1e-12);
            assert!((rf.d - s.norm_sqr()).abs() <= 1e-10 * scale);
            assert!((rf.f1 - p.re).abs() <= 1e-10 * p.norm().max(1e-12));
            assert!((w * rf.f2 - p.im).abs() <= 1e-10 * p.norm().max(1e-12));
        }
    }

    #[test]
    fn decoupled_tank_is_bare() {
        let t = tank(0.0);
        let w = mhz(5.9);
        let (xi, gt) = xi_gamma_general(&tls(0.5), &t, mhz(1.0), mhz(50.0), w).unwrap();
        assert_eq!(xi, t.omega_t * t.omega_t - w * w);
        assert_eq!(gt, t.gamma_t());
        let full = full_linear_response(&tls(0.5), &t, mhz(1.0), mhz(50.0), w).unwrap();
        let bare =
            Complex64::new(0.0, w * t.omega_t * t.omega_t * t.l_t * t.i0) / Complex64::new(t.omega_t * t.omega_t - w * w, w * t.gamma_t());
        assert!((full.v - bare).norm() <= 1e-14 * bare.norm());
    }

    #[test]
    fn zero_drive_is_inductive() {
        let p = tls(0.3);
        let t = tank(0.03);
        let w = t.omega_t;
        let (xi, gt) = xi_gamma_general(&p, &t, 0.0, mhz(50.0), w).unwrap();
        assert_eq!(gt, t.gamma_t());
        let adiabatic = t.omega_t * t.omega_t - w * w + 2.0 * adiabatic_prefactor(&p, &t) * p.z0();
        assert!((xi - adiabatic).abs() <= 1e-12 * adiabatic.abs());
        let (xr, gr) = xi_gamma_resonant(&p, &t, 0.0, w).unwrap();
        assert_eq!(gr, t.gamma_t());
        assert!((xr - xi).abs() <= 1e-12 * xi.abs());
        let full = full_linear_response(&p, &t, 0.0, mhz(50.0), w).unwrap().point;
        assert!((full.xi - xi).abs() <= 1e-9 * xi.abs());
        assert!((full.gamma_t_eff - gt).abs() <= 1e-9 * gt);
    }

    #[test]
    fn resonant_path_matches_full_solve() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let p = TlsParams::new(
                ghz(1.0),
                rng.gen_range(-1.0..1.0) * ghz(0.5),
                0.01,
                mhz(rng.gen_range(0.5..10.0)),
                mhz(rng.gen_range(0.01..1.0)),
            )
            .unwrap();
            let t = tank(rng.gen_range(0.0..0.05));
            let (f, w) = (mhz(rng.gen_range(0.0..5.0)), mhz(rng.gen_range(1.0..12.0)));
            let (xi, gt) = xi_gamma_resonant(&p, &t, f, w).unwrap();
            let full = full_linear_response(&p, &t, f, 0.0, w).unwrap().point;
            assert!((full.xi - xi).abs() <= 1e-9 * xi.abs());
            assert!((full.gamma_t_eff - gt).abs() <= 1e-9 * gt.abs());
        }
    }

    fn general_draw(rng: &mut impl Rng) -> (TlsParams, TankParams, f64, f64, f64) {
        let p = TlsParams::new(
            ghz(1.0),
            rng.gen_range(-1.0..1.0) * ghz(1.0),
            0.01,
            mhz(rng.gen_range(0.5..10.0)),
            mhz(rng.gen_range(0.01..1.0)),
        )
        .unwrap();
        let delta = mhz(rng.gen_range(1.0..50.0)) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let f = (p.delta * delta.abs() / 100.0).sqrt() * rng.gen_range(0.0..1.0);
        (p, tank(0.03), f, delta, mhz(rng.gen_range(1.0..20.0)))
    }

    #[test]
    fn general_form_is_leading_order_solve() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let (p, t, f, delta, w) = general_draw(&mut rng);
            let (xi, gt) = xi_gamma_general(&p, &t, f, delta, w).unwrap();
            let (xl, gl) = xi_gamma_leading_order(&p, &t, f, delta, w).unwrap();
            let wt2 = t.omega_t * t.omega_t;
            assert!((xi - xl).abs() <= 1e-9 * wt2.max(xi.abs()));
            assert!((gt - gl).abs() <= 1e-9 * gt.abs());
        }
    }

    #[test]
    fn perturbed_f1_breaks_leading_order_identity() {
        let mutated = |w: f64, wr: f64, f: f64, g: f64, gz: f64| {
            let mut r = resonance_functions(w, wr, f, g, gz);
            r.f1 *= 1.01;
            r
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut worst: f64 = 0.0;
        for _ in 0..300 {
            let (p, t, f, delta, w) = general_draw(&mut rng);
            let (xi, _) = xi_gamma_general_with(&p, &t, f, delta, w, mutated).unwrap();
            let (xl, _) = xi_gamma_leading_order(&p, &t, f, delta, w).unwrap();
            worst = worst.max((xi - xl).abs() / (t.omega_t * t.omega_t).max(xl.abs()));
        }
        assert!(worst > 1e-6, "{worst}");
    }

    #[test]
    fn reversed_sign_flips_adiabatic_shift() {
        let p = tls(0.3);
        let q = p.with_direct_term(DirectTermSign::Reversed);
        let t = tank(0.03);
        let (a, _) = xi_gamma_resonant(&p, &t, 0.0, t.omega_t).unwrap();
        let (b, _) = xi_gamma_resonant(&q, &t, 0.0, t.omega_t).unwrap();
        assert!((a + b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn detuning_sign_flips_damping_correction() {
        let p = tls(0.5);
        let t = tank(0.03);
        let (f, w) = (mhz(1.0), mhz(5.0));
        let (_, up) = xi_gamma_general(&p, &t, f, mhz(50.0), w).unwrap();
        let (_, down) = xi_gamma_general(&p, &t, f, -mhz(50.0), w).unwrap();
        let g = t.gamma_t();
        assert!(((up - g) + (down - g)).abs() <= 1e-9 * (up - g).abs());
    }

    #[test]
    fn phase_conventions() {
        let t = tank(0.0);
        let w = t.omega_t;
        let (v, chi) = amplitude_phase(0.0, t.gamma_t(), &t, w).unwrap();
        assert_eq!(chi, 0.0);
        assert!((v - t.omega_t * t.omega_t * t.l_t * t.i0 / t.gamma_t()).abs() <= 1e-12 * v);
        let (v, chi) = amplitude_phase(1e30, t.gamma_t(), &t, w).unwrap();
        assert!((chi - std::f64::consts::FRAC_PI_2).abs() < 1e-12 && v < 1e-20);
        let (_, chi) = amplitude_phase(-1e30, t.gamma_t(), &t, w).unwrap();
        assert!((chi + std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(amplitude_phase(0.0, 0.0, &t, w).is_err());
    }

    #[test]
    fn dispatcher_thresholds() {
        let p = tls(0.5);
        let th = RegimeThresholds::default();
        assert_eq!(th.select(&p, mhz(1.0), 0.0), Regime::ResonantDelta0);
        assert_eq!(th.select(&p, mhz(1.0), mhz(50.0)), Regime::General);
        assert_eq!(th.select(&p, mhz(10.0), mhz(0.5)), Regime::FullLinearResponse);
        let pt = readout_point(&p, &tank(0.03), mhz(1.0), 0.0, mhz(6.0), &th).unwrap();
        assert_eq!(pt.regime, Regime::ResonantDelta0);
    }

    #[test]
    fn flux_symmetry() {
        let t = tank(0.03);
        for eps in [0.1, 0.4] {
            let a = readout_point(&tls(eps), &t, mhz(1.0), 0.0, t.omega_t, &RegimeThresholds::default()).unwrap();
            let b = readout_point(&tls(-eps), &t, mhz(1.0), 0.0, t.omega_t, &RegimeThresholds::default()).unwrap();
            assert_eq!(a.chi, b.chi);
        }
    }
}
