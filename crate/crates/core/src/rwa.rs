// SPDX-License-Identifier: Apache-2.0

//! Rotating-wave linear response of the slow envelopes to the probe g.
//!
//! Convention: g(t) = Re[g(ω)e^{iωt}], every response is a complex transfer
//! value per unit g(ω). The slow envelopes are defined by
//! σ_Y = Y + A cos ω₀t + B sin ω₀t and σ_X = X + C cos ω₀t + D sin ω₀t.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{rabi_frequency, TlsParams};

/// Relative magnitude below which a denominator counts as singular.
pub const SINGULAR_REL: f64 = 1e-12;

/// Non-equilibrium polarization factor P_Z and whether it hit 0/0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Polarization {
    pub value: f64,
    /// Set when numerator and denominator both vanish; `value` is then 1.
    pub degenerate: bool,
}

/// P_Z = Γ_Z(Γ² + δ²) / (Γ_Z(Γ² + δ²) + f²Γ).
pub fn pz(delta: f64, f: f64, gamma_phi: f64, gamma_z: f64) -> Polarization {
    let num = gamma_z * (gamma_phi * gamma_phi + delta * delta);
    let den = num + f * f * gamma_phi;
    if den == 0.0 {
        Polarization {
            value: 1.0,
            degenerate: true,
        }
    } else {
        Polarization {
            value: num / den,
            degenerate: false,
        }
    }
}

/// s(ω) = (Ω_R − ω + iΓ)(Ω_R + ω − iΓ)(iω + Γ_Z) − f²(Γ_Z − Γ).
pub fn s_denominator(omega: f64, omega_r: f64, gamma_phi: f64, gamma_z: f64, f: f64) -> Complex64 {
    let g = Complex64::new(0.0, gamma_phi);
    (omega_r - omega + g) * (omega_r + omega - g) * Complex64::new(gamma_z, omega) - f * f * (gamma_z - gamma_phi)
}

fn s_scale(omega: f64, omega_r: f64, gamma_phi: f64, gamma_z: f64, f: f64) -> f64 {
    (omega_r * omega_r + omega * omega + gamma_phi * gamma_phi) * (omega.abs() + gamma_z) + f * f * (gamma_z - gamma_phi).abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwaInputs {
    pub tls: TlsParams,
    pub f: f64,
    /// δ = ω₀ − Δ_ε.
    pub delta: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlowResponse {
    pub z: Complex64,
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
    pub y: Complex64,
    pub x: Complex64,
    pub p_z: f64,
    pub omega_r: f64,
    pub delta: f64,
}

pub fn slow_response(inp: &RwaInputs) -> Result<SlowResponse> {
    let RwaInputs { tls, f, delta, omega } = *inp;
    tls.validate()?;
    for (name, v) in [("f", f), ("delta", delta), ("omega", omega)] {
        crate::error::finite(name, v)?;
    }
    let gamma = tls.gamma_phi;
    let gz = tls.gamma_z;
    let gap = tls.gap();
    let r = tls.eps_over_delta();
    let omega_r = rabi_frequency(delta, f);

    let s = s_denominator(omega, omega_r, gamma, gz, f);
    if s.norm() <= SINGULAR_REL * s_scale(omega, omega_r, gamma, gz, f) {
        return Err(Error::Singular {
            factor: "s(omega)",
            magnitude: s.norm(),
        });
    }
    let gw = Complex64::new(gamma, omega);
    let q = delta * delta + gw * gw;
    if q.norm() <= SINGULAR_REL * (delta * delta + gamma * gamma + omega * omega) {
        return Err(Error::Singular {
            factor: "delta^2 + (Gamma + i omega)^2",
            magnitude: q.norm(),
        });
    }
    let lorentz = delta * delta + gamma * gamma;
    if lorentz == 0.0 {
        return Err(Error::Singular {
            factor: "delta^2 + Gamma^2",
            magnitude: 0.0,
        });
    }
    let p = pz(delta, f, gamma, gz);
    let pz0 = p.value * tls.z0();
    let two_gw = Complex64::new(2.0 * gamma, omega);

    let lead = delta / lorentz;
    let z = 2.0 * r * f * f * pz0 * lead * two_gw / s;
    let a = 2.0 * r * f * pz0 * lead * two_gw * Complex64::new(gz, omega) / s;
    let braces = (delta * delta / lorentz) * f * f * two_gw / s - Complex64::new(delta * delta - gamma * gamma, -omega * gamma) / lorentz;
    let b = -2.0 * r * f * pz0 / q * braces;

    // The direct g term enters as s·2P_ZZ₀ with s = −1 (Bloch-consistent) or +1.
    let direct = tls.conventions.direct_term.factor() * 2.0 * pz0;
    let b1 = direct - r * f * b;
    let y = r * f * a / gap + b1 * gw / (gap * gap);
    let x = r * f * a * gw / (gap * gap) - b1 / gap;

    Ok(SlowResponse {
        z,
        a,
        b,
        c: b,
        d: -a,
        y,
        x,
        p_z: p.value,
        omega_r,
        delta,
    })
}

/// Warnings for inputs outside the regime where the dropped terms are small.
pub fn validity_warnings(inp: &RwaInputs) -> Vec<String> {
    let gap = inp.tls.gap();
    let mut out = Vec::new();
    for (name, v) in [("f", inp.f), ("Gamma", inp.tls.gamma_phi), ("Gamma_Z", inp.tls.gamma_z)] {
        if v > 0.01 * gap {
            out.push(format!(
                "{name}/Delta_eps = {:.3e} exceeds 1e-2; RWA truncation error is not small",
                v / gap
            ));
        }
    }
    if pz(inp.delta, inp.f, inp.tls.gamma_phi, inp.tls.gamma_z).degenerate {
        out.push("P_Z is 0/0 (no relaxation, no drive); set to 1".into());
    }
    out
}

/// Batch evaluation over an ω grid; each point fails independently.
pub fn response_table(tls: &TlsParams, f: f64, delta: f64, omegas: &[f64]) -> Vec<(f64, Result<SlowResponse>)> {
    omegas
        .iter()
        .map(|&omega| {
            let inp = RwaInputs {
                tls: *tls,
                f,
                delta,
                omega,
            };
            (omega, slow_response(&inp))
        })
        .collect()
}

/// CSV `omega,Re(Z),Im(Z),...,Re(X),Im(X),p_z`; failed rows carry NaN.
pub fn write_response_csv<W: Write>(rows: &[(f64, Result<SlowResponse>)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "omega", "Re(Z)", "Im(Z)", "Re(A)", "Im(A)", "Re(B)", "Im(B)", "Re(Y)", "Im(Y)", "Re(X)", "Im(X)", "p_z",
    ])?;
    for (omega, r) in rows {
        let mut rec = vec![format!("{omega:.16e}")];
        match r {
            Ok(s) => {
                for c in [s.z, s.a, s.b, s.y, s.x] {
                    rec.push(format!("{:.16e}", c.re));
                    rec.push(format!("{:.16e}", c.im));
                }
                rec.push(format!("{:.16e}", s.p_z));
            }
            Err(_) => rec.extend(std::iter::repeat_n("NaN".to_string(), 11)),
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::DirectTermSign;
    use crate::units::{ghz, mhz};
    use proptest::prelude::*;

    fn tls(eps_ratio: f64) -> TlsParams {
        TlsParams::new(ghz(1.0), eps_ratio * ghz(1.0), 0.01, mhz(4.0), mhz(0.1)).unwrap()
    }

    #[test]
    fn pz_examples() {
        assert_eq!(pz(0.3, 0.0, 2.0, 5.0).value, 1.0);
        let half = pz(0.0, 2.0, 1.0, 4.0);
        assert!((half.value - 0.5).abs() < 1e-15);
        // Rate ratios are unit independent: work in MHz.
        let p0 = pz(0.0, 0.5, 4.0, 0.1).value;
        assert!((p0 - 0.4 / 0.65).abs() < 1e-12);
        assert!((p0 - 0.6154).abs() < 1e-4);
        let degenerate = pz(0.0, 0.0, 3.0, 0.0);
        assert!(degenerate.degenerate);
        assert_eq!(degenerate.value, 1.0);
    }

    #[test]
    fn s_equal_rates_factor() {
        let (w, wr, g, f) = (3.1, 2.2, 0.7, 1.3);
        let s = s_denominator(w, wr, g, g, f);
        let factored = Complex64::new(wr * wr - w * w + g * g, 2.0 * w * g) * Complex64::new(g, w);
        assert!((s - factored).norm() <= 1e-12 * factored.norm());
        let s0 = s_denominator(0.0, wr, g, 0.4, 0.0);
        assert!((s0 - Complex64::new(0.4 * (wr * wr + g * g), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn resonance_nulls_and_identities() {
        let p = tls(0.5);
        let f = 1e-3 * p.gap();
        for i in 0..100 {
            let omega = f * (0.1 + 9.9 * i as f64 / 99.0);
            let r = slow_response(&RwaInputs {
                tls: p,
                f,
                delta: 0.0,
                omega,
            })
            .unwrap();
            assert!(r.z.norm() < 1e-12 && r.a.norm() < 1e-12);
            assert_eq!(r.c, r.b);
            assert_eq!(r.d, -r.a);
        }
    }

    #[test]
    fn zero_bias_leaves_direct_terms() {
        let p = tls(0.0);
        let f = 1e-3 * p.gap();
        let r = slow_response(&RwaInputs {
            tls: p,
            f,
            delta: mhz(3.0),
            omega: mhz(2.0),
        })
        .unwrap();
        assert_eq!(r.z.norm(), 0.0);
        assert_eq!(r.a.norm(), 0.0);
        assert_eq!(r.b.norm(), 0.0);
        let pz0 = r.p_z * p.z0();
        let gap = p.gap();
        let x_direct = 2.0 * pz0 / gap;
        assert!((r.x - x_direct).norm() < 1e-12 * x_direct.abs());
    }

    #[test]
    fn reversed_direct_term_flips_sign() {
        let p = tls(0.0);
        let q = p.with_direct_term(DirectTermSign::Reversed);
        let inp = RwaInputs {
            tls: p,
            f: mhz(1.0),
            delta: mhz(3.0),
            omega: mhz(2.0),
        };
        let a = slow_response(&inp).unwrap();
        let b = slow_response(&RwaInputs { tls: q, ..inp }).unwrap();
        assert!((a.x + b.x).norm() < 1e-15 * a.x.norm());
        assert!((a.y + b.y).norm() < 1e-15 * a.y.norm());
    }

    #[test]
    fn b_is_continuous_through_resonance() {
        let p = tls(0.5);
        let f = mhz(1.0);
        let at = |delta: f64| {
            slow_response(&RwaInputs {
                tls: p,
                f,
                delta,
                omega: mhz(2.5),
            })
            .unwrap()
            .b
        };
        let b0 = at(0.0);
        for side in [1.0, -1.0] {
            let b = at(side * 1e-6 * p.gamma_phi);
            assert!((b - b0).norm() <= 1e-6 * b0.norm());
        }
    }

    #[test]
    fn restructured_b_equals_expanded_form() {
        let p = tls(0.5);
        let (f, delta, omega) = (mhz(1.0), mhz(3.0), mhz(2.0));
        let r = slow_response(&RwaInputs { tls: p, f, delta, omega }).unwrap();
        let (g, gz) = (p.gamma_phi, p.gamma_z);
        let s = s_denominator(omega, rabi_frequency(delta, f), g, gz, f);
        let pz0 = pz(delta, f, g, gz).value * p.z0();
        let gw = Complex64::new(g, omega);
        let expanded = -2.0 * p.eps_over_delta() * f * pz0 * delta / (delta * delta + g * g) / (delta * delta + gw * gw)
            * (f * f * delta * Complex64::new(2.0 * g, omega) / s - Complex64::new(delta * delta - g * g, -omega * g) / delta);
        assert!((r.b - expanded).norm() <= 1e-12 * expanded.norm());
    }

    #[test]
    fn singular_point_is_named() {
        let p = TlsParams::new(ghz(1.0), 0.0, 0.0, 0.0, 0.0).unwrap();
        // Γ = Γ_Z = 0, f = 0: s(ω = Ω_R) = 0.
        let e = slow_response(&RwaInputs {
            tls: p,
            f: 0.0,
            delta: mhz(2.0),
            omega: mhz(2.0),
        })
        .unwrap_err();
        assert!(matches!(e, Error::Singular { factor: "s(omega)", .. }));
    }

    #[test]
    fn csv_layout() {
        let p = tls(0.5);
        let rows = response_table(&p, mhz(1.0), mhz(3.0), &[mhz(1.0), mhz(2.0)]);
        let mut buf = Vec::new();
        write_response_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "omega,Re(Z),Im(Z),Re(A),Im(A),Re(B),Im(B),Re(Y),Im(Y),Re(X),Im(X),p_z"
        );
        assert_eq!(lines.count(), 2);
    }

    proptest! {
        #[test]
        fn s_matches_expanded_form(w in 0.0f64..10.0, wr in 0.0f64..10.0, g in 0.0f64..3.0, gz in 0.0f64..3.0, f in 0.0f64..5.0) {
            let s = s_denominator(w, wr, g, gz, f);
            let alt = Complex64::new(wr * wr - w * w + g * g, 2.0 * w * g) * Complex64::new(gz, w) - f * f * (gz - g);
            prop_assert!((s - alt).norm() <= 1e-12 * s_scale(w, wr, g, gz, f).max(1e-300));
        }

        #[test]
        fn responses_scale_with_pz_z0(t in 0.005f64..0.2, eps in 0.1f64..2.0) {
            // Z₀ enters only through the product P_Z Z₀: doubling Z₀ doubles every entry.
            let base = TlsParams::new(ghz(1.0), eps * ghz(1.0), t, mhz(4.0), mhz(0.1)).unwrap();
            let inp = RwaInputs { tls: base, f: mhz(1.0), delta: mhz(3.0), omega: mhz(2.0) };
            let r = slow_response(&inp).unwrap();
            let z0 = base.z0();
            prop_assume!(z0.abs() > 1e-3);
            let scale = 1.0 / z0;
            // Compare against an independent Z₀ = −1 evaluation at T = 0.
            let cold = slow_response(&RwaInputs { tls: TlsParams { temperature: 0.0, ..base }, ..inp }).unwrap();
            for (u, v) in [(r.z, cold.z), (r.a, cold.a), (r.b, cold.b), (r.x, cold.x), (r.y, cold.y)] {
                prop_assert!((u * (-scale) - v).norm() <= 1e-10 * v.norm().max(1e-300));
            }
        }
    }
}
