//! Closed-form and asymptotic reference solutions.
//!
//! These are independent of the integrators and are used to check them.
//! For a base mode u₀ = A·e^{−iS} with A²Ṡ = ½, the squeezed family has
//! σ = cosh 2r·σ₀ + sinh 2r·(σ₀ cos(δ + 2S) − ½ sin(δ + 2S)); every
//! formula below is an instance of that identity.

use num_complex::Complex64;

use crate::error::{Result, VacuaError};
use crate::mode::{ModeState, SqueezeParams};
use crate::profiles::FrequencyProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleId {
    /// Constant frequency ω = k.
    ConstOmega,
    /// Late-time σ for ω = k√(1 + tanh Ht).
    Tanh1Asym,
    /// Late-time σ for ω = k√(1 + Ht).
    SqrtLinearAsym,
    /// Exact mode for ω = k/(1 + 2Ht), k > H.
    InverseLinearExact,
    /// σ for ω = k/(1 + 2Ht), k > H (exact for the squeezed family).
    InverseLinearAsym,
    /// Exact mode for ω = k/(1 + H²t²).
    LorentzianExact,
    /// Exact σ for ω = k/(1 + H²t²).
    LorentzianSigma,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleParams {
    pub k: f64,
    pub h: f64,
}

impl OracleId {
    /// The frequency profile this oracle describes.
    pub fn profile(self, p: OracleParams) -> FrequencyProfile {
        let OracleParams { k, h } = p;
        match self {
            OracleId::ConstOmega => FrequencyProfile::Constant { omega: k },
            OracleId::Tanh1Asym => FrequencyProfile::Tanh1 { k, h },
            OracleId::SqrtLinearAsym => FrequencyProfile::SqrtLinear { k, h },
            OracleId::InverseLinearExact | OracleId::InverseLinearAsym => {
                FrequencyProfile::InverseLinear { k, h }
            }
            OracleId::LorentzianExact | OracleId::LorentzianSigma => {
                FrequencyProfile::Lorentzian { k, h }
            }
        }
    }
}

fn inverse_linear_root(p: OracleParams) -> Result<f64> {
    if p.k <= p.h {
        return Err(VacuaError::Regime(format!(
            "k = {} must exceed H = {}; otherwise σ does not oscillate",
            p.k, p.h
        )));
    }
    Ok((p.k * p.k - p.h * p.h).sqrt())
}

/// σ(t) of the squeezed family (r, δ) from the printed asymptotic formulas.
pub fn sigma_asymptote(id: OracleId, sp: SqueezeParams, p: OracleParams, t: f64) -> Result<f64> {
    let OracleParams { k, h } = p;
    let s2r = (2.0 * sp.r).sinh();
    let delta = sp.delta;
    match id {
        OracleId::ConstOmega => Ok(-0.5 * (2.0 * k * t + delta).sin() * s2r),
        OracleId::Tanh1Asym => Ok(-0.5 * (2.0 * 2f64.sqrt() * k * t + delta).sin() * s2r),
        OracleId::SqrtLinearAsym => {
            let base = 1.0 + h * t;
            if !(base > 0.0) {
                return Err(VacuaError::domain("sqrt-linear asymptote", t));
            }
            let phase = 4.0 * k * base.powf(1.5) / (3.0 * h) + delta;
            Ok(-0.25 * (phase.cos() + 3f64.sqrt() * phase.sin()) * s2r)
        }
        OracleId::InverseLinearExact | OracleId::InverseLinearAsym => {
            let root = inverse_linear_root(p)?;
            let base = 1.0 + 2.0 * h * t;
            if !(base > 0.0) {
                return Err(VacuaError::domain("inverse-linear asymptote", t));
            }
            let phase = delta + root * base.ln() / h;
            let (ch, sh) = (sp.r.cosh(), sp.r.sinh());
            Ok(
                (h * ch * ch + h * sh * sh - root * phase.sin() * s2r + h * phase.cos() * s2r)
                    / (2.0 * root),
            )
        }
        OracleId::LorentzianExact | OracleId::LorentzianSigma => {
            Ok(sigma_exact_lorentzian(sp, k, h, t))
        }
    }
}

/// Closed-form base mode u₀ and its derivative, normalized to W = i.
pub fn exact_mode(id: OracleId, p: OracleParams, t: f64) -> Result<ModeState> {
    let OracleParams { k, h } = p;
    let i = Complex64::new(0.0, 1.0);
    match id {
        OracleId::ConstOmega => {
            let u = Complex64::from_polar(1.0 / (2.0 * k).sqrt(), -k * t);
            Ok(ModeState::new(t, u, -i * k * u))
        }
        OracleId::InverseLinearExact | OracleId::InverseLinearAsym => {
            let root = inverse_linear_root(p)?;
            let base = 1.0 + 2.0 * h * t;
            if !(base > 0.0) {
                return Err(VacuaError::domain("inverse-linear exact mode", t));
            }
            let nu = root / (2.0 * h);
            // base^{1/2 − iν} / (√2 (k² − H²)^{1/4})
            let u =
                Complex64::from_polar(base.sqrt() / (2f64.sqrt() * root.sqrt()), -nu * base.ln());
            let du = u * Complex64::new(0.5, -nu) * (2.0 * h / base);
            Ok(ModeState::new(t, u, du))
        }
        OracleId::LorentzianExact | OracleId::LorentzianSigma => {
            let q = (h * h + k * k).sqrt();
            let s = 1.0 + h * h * t * t;
            let u =
                Complex64::from_polar(s.sqrt() / (2f64.sqrt() * q.sqrt()), -q * (h * t).atan() / h);
            let du = u * Complex64::new(h * h * t / s, -q / s);
            Ok(ModeState::new(t, u, du))
        }
        OracleId::Tanh1Asym | OracleId::SqrtLinearAsym => Err(VacuaError::Regime(format!(
            "{id:?} has no elementary closed-form mode"
        ))),
    }
}

/// σ(t) of the squeezed Lorentzian family; valid for all t.
pub fn sigma_exact_lorentzian(sp: SqueezeParams, k: f64, h: f64, t: f64) -> f64 {
    let q = (h * h + k * k).sqrt();
    let phase = sp.delta + 2.0 * q * (h * t).atan() / h;
    let secular = t * h * h / (2.0 * q);
    secular * (2.0 * sp.r).cosh()
        + (secular * phase.cos() - 0.5 * phase.sin()) * (2.0 * sp.r).sinh()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(r: f64, delta: f64) -> SqueezeParams {
        SqueezeParams::new(r, delta).unwrap()
    }

    const UNIT: OracleParams = OracleParams { k: 1.0, h: 1.0 };

    #[test]
    fn tanh1_asymptote_values() {
        assert_eq!(
            sigma_asymptote(OracleId::Tanh1Asym, sq(0.0, 0.0), UNIT, 12.3).unwrap(),
            0.0
        );
        let t = std::f64::consts::FRAC_PI_2 / (2.0 * 2f64.sqrt());
        let s = sigma_asymptote(OracleId::Tanh1Asym, sq(0.25, 0.0), UNIT, t).unwrap();
        assert!((s - (-0.5 * 0.5f64.sinh())).abs() < 1e-14);
        assert!((s + 0.26055).abs() < 1e-5);
    }

    #[test]
    fn inverse_linear_constant_term() {
        let p = OracleParams { k: 1.0, h: 0.1 };
        let s = sigma_asymptote(OracleId::InverseLinearAsym, sq(0.0, 0.0), p, 500.0).unwrap();
        assert!((s - 0.1 / (2.0 * 0.99f64.sqrt())).abs() < 1e-15);
        assert!((s - 0.050252).abs() < 1e-6);
        assert!(matches!(
            sigma_asymptote(
                OracleId::InverseLinearAsym,
                sq(0.0, 0.0),
                OracleParams { k: 0.1, h: 0.2 },
                1.0
            ),
            Err(VacuaError::Regime(_))
        ));
    }

    #[test]
    fn exact_mode_values() {
        let m = exact_mode(OracleId::ConstOmega, OracleParams { k: 2.0, h: 0.0 }, 0.0).unwrap();
        assert_eq!(m.u, Complex64::new(0.5, 0.0));
        assert!((m.du - Complex64::new(0.0, -1.0)).norm() < 1e-15);

        let m = exact_mode(
            OracleId::InverseLinearExact,
            OracleParams { k: 1.0, h: 0.1 },
            0.0,
        )
        .unwrap();
        assert!((m.u.norm() - 1.0 / (2f64.sqrt() * 0.99f64.powf(0.25))).abs() < 1e-15);
        assert!((m.u.norm() - 0.70888).abs() < 1e-5);

        let m = exact_mode(OracleId::LorentzianExact, UNIT, 0.0).unwrap();
        assert!((m.u.norm() - 1.0 / (2f64.sqrt() * 2f64.powf(0.25))).abs() < 1e-15);
        assert!((m.u.norm() - 0.59460).abs() < 1e-5);

        assert!(exact_mode(
            OracleId::InverseLinearExact,
            OracleParams { k: 1.0, h: 2.0 },
            0.0
        )
        .is_err());
    }

    #[test]
    fn lorentzian_sigma_values() {
        let s = sigma_exact_lorentzian(sq(0.0, 0.0), 1.0, 1.0, 1.0);
        assert!((s - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!((s - 0.35355).abs() < 1e-5);
        for t in [-3.0, 0.5, 7.0] {
            let s = sigma_exact_lorentzian(sq(0.0, 1.7), 1.0, 0.6, t);
            assert!((s - t * 0.36 / (2.0 * 1.36f64.sqrt())).abs() < 1e-15);
        }
    }

    /// Mode-equation residual of the closed forms, by central differences of u̇.
    #[test]
    fn exact_modes_solve_their_equations() {
        let cases = [
            (
                OracleId::ConstOmega,
                OracleParams { k: 1.7, h: 0.0 },
                vec![-2.0, 0.0, 3.0],
            ),
            (
                OracleId::InverseLinearExact,
                OracleParams { k: 1.0, h: 0.1 },
                vec![-2.0, 0.0, 10.0, 200.0],
            ),
            (
                OracleId::LorentzianExact,
                UNIT,
                vec![-4.0, -0.3, 0.0, 2.0, 9.0],
            ),
            (
                OracleId::LorentzianExact,
                OracleParams { k: 0.7, h: 1.9 },
                vec![-1.0, 0.4, 3.0],
            ),
        ];
        let step = 1e-4;
        for (id, p, ts) in cases {
            let profile = id.profile(p);
            for t in ts {
                let m = exact_mode(id, p, t).unwrap();
                assert!(
                    (m.wronskian() - Complex64::new(0.0, 1.0)).norm() < 1e-12,
                    "{id:?} W at {t}"
                );
                let ddu = (exact_mode(id, p, t + step).unwrap().du
                    - exact_mode(id, p, t - step).unwrap().du)
                    / (2.0 * step);
                let du_fd = (exact_mode(id, p, t + step).unwrap().u
                    - exact_mode(id, p, t - step).unwrap().u)
                    / (2.0 * step);
                let w2 = profile.omega_sq(t).unwrap();
                let residual = (ddu + m.u * w2).norm();
                assert!(residual < 1e-7, "{id:?} residual {residual:e} at {t}");
                assert!((du_fd - m.du).norm() < 1e-7, "{id:?} du at {t}");
            }
        }
    }

    /// σ of the squeezed closed-form mode matches the closed-form σ.
    #[test]
    fn squeezed_exact_modes_match_sigma_formulas() {
        for (r, delta) in [(0.0, 0.0), (0.3, 1.0), (1.1, 4.0)] {
            let sp = sq(r, delta);
            for t in [-5.0, -1.0, 0.0, 2.5, 5.0] {
                let m = sp.transform(&exact_mode(OracleId::LorentzianExact, UNIT, t).unwrap());
                let s = sigma_exact_lorentzian(sp, 1.0, 1.0, t);
                assert!(
                    (m.sigma() - s).abs() < 1e-12 * (1.0 + s.abs()),
                    "r={r} t={t}"
                );
            }
            let p = OracleParams { k: 1.0, h: 0.1 };
            for t in [0.0, 3.0, 40.0] {
                let m = sp.transform(&exact_mode(OracleId::InverseLinearExact, p, t).unwrap());
                let s = sigma_asymptote(OracleId::InverseLinearAsym, sp, p, t).unwrap();
                assert!((m.sigma() - s).abs() < 1e-12, "r={r} t={t}");
            }
        }
    }
}
