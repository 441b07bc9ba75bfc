//! Run configuration: strict JSON schema, validated before any numerics.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, VacuaError};
use crate::profiles::{FrequencyProfile, FrwSign, ScaleFactor, StepRamp, TabulatedProfile};
use crate::search::{Parametrization, SearchSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    /// ü + ω²(t)u = 0 with a built-in or tabulated profile.
    #[default]
    Boson,
    /// Spinor mode with a time-dependent mass m·a(τ).
    Fermion,
    /// Conformal-time scalar field on a prescribed background.
    ScalarFrw,
    /// Metric perturbation Φ of the scalar-field universe.
    ConstrainedPhi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileId {
    Constant,
    #[default]
    Tanh1,
    Tanh2,
    SqrtLinear,
    InverseLinear,
    Lorentzian,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleFactorId {
    SinhGamma,
    StepRamp,
    Exponential,
    Constant,
}

/// Which equation produces the trajectory written by `solve`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolvePath {
    #[default]
    Mode,
    Sigma,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub k: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub m: f64,
    pub gamma: f64,
    /// Squeeze applied to the seed state.
    pub r: f64,
    pub delta: f64,
    /// Explicit vacuum candidate (θ₀, θ̇₀) at the anchor instead of the default seed.
    pub theta0: Option<f64>,
    pub dtheta0: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            k: 1.0,
            h: 1.0,
            m: 1.0 / 16.0,
            gamma: 1.0 / 50.0,
            r: 0.0,
            delta: 0.0,
            theta0: None,
            dtheta0: 0.0,
        }
    }
}

impl Params {
    pub fn get(&self, name: &str) -> Result<f64> {
        match name {
            "k" => Ok(self.k),
            "H" | "h" => Ok(self.h),
            "m" => Ok(self.m),
            "gamma" => Ok(self.gamma),
            "r" => Ok(self.r),
            "delta" => Ok(self.delta),
            "theta0" => self
                .theta0
                .ok_or_else(|| VacuaError::Config("theta0 is not set".into())),
            "dtheta0" => Ok(self.dtheta0),
            _ => Err(VacuaError::Config(format!("unknown parameter '{name}'"))),
        }
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "k" => self.k = value,
            "H" | "h" => self.h = value,
            "m" => self.m = value,
            "gamma" => self.gamma = value,
            "r" => self.r = value,
            "delta" => self.delta = value,
            "theta0" => self.theta0 = Some(value),
            "dtheta0" => self.dtheta0 = value,
            _ => return Err(VacuaError::Config(format!("unknown parameter '{name}'"))),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: System,
    pub profile: ProfileId,
    /// Defaults to sinh_gamma for the constrained oscillator, step_ramp otherwise.
    pub scale_factor: Option<ScaleFactorId>,
    pub step_ramp: StepRamp,
    /// Two-column `t,omega` CSV for the custom profile.
    pub custom_profile: Option<PathBuf>,
    pub params: Params,
    pub span: Option<[f64; 2]>,
    /// Seed time; defaults per system and profile.
    pub anchor: Option<f64>,
    pub tol: f64,
    pub samples: usize,
    pub frw_sign: FrwSign,
    pub path: SolvePath,
    pub search: Option<SearchSpec>,
    pub sweep: Option<SweepSpec>,
    pub output: OutputPaths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: System::Boson,
            profile: ProfileId::Tanh1,
            scale_factor: None,
            step_ramp: StepRamp::default(),
            custom_profile: None,
            params: Params::default(),
            span: None,
            anchor: None,
            tol: 1e-10,
            samples: 2000,
            frw_sign: FrwSign::Plus,
            path: SolvePath::Mode,
            search: None,
            sweep: None,
            output: OutputPaths::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| VacuaError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| VacuaError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn scale_factor_id(&self) -> ScaleFactorId {
        self.scale_factor.unwrap_or(match self.system {
            System::ConstrainedPhi => ScaleFactorId::SinhGamma,
            _ => ScaleFactorId::StepRamp,
        })
    }

    pub fn scale_factor(&self) -> ScaleFactor {
        let gamma = self.params.gamma;
        match self.scale_factor_id() {
            ScaleFactorId::SinhGamma => ScaleFactor::SinhGamma { gamma },
            ScaleFactorId::StepRamp => ScaleFactor::StepRamp(self.step_ramp),
            ScaleFactorId::Exponential => ScaleFactor::Exponential { gamma },
            ScaleFactorId::Constant => ScaleFactor::Constant { value: 1.0 },
        }
    }

    /// Frequency profile of the boson or scalar-field systems.
    pub fn frequency_profile(&self) -> Result<FrequencyProfile> {
        let Params { k, h, m, .. } = self.params;
        let p = match self.system {
            System::ScalarFrw => FrequencyProfile::ScalarFrw {
                k,
                m,
                scale: self.scale_factor(),
                sign: self.frw_sign,
            },
            System::Boson => match self.profile {
                ProfileId::Constant => FrequencyProfile::Constant { omega: k },
                ProfileId::Tanh1 => FrequencyProfile::Tanh1 { k, h },
                ProfileId::Tanh2 => FrequencyProfile::Tanh2 { k, h },
                ProfileId::SqrtLinear => FrequencyProfile::SqrtLinear { k, h },
                ProfileId::InverseLinear => FrequencyProfile::InverseLinear { k, h },
                ProfileId::Lorentzian => FrequencyProfile::Lorentzian { k, h },
                ProfileId::Custom => {
                    let path = self.custom_profile.as_ref().ok_or_else(|| {
                        VacuaError::Config("the custom profile needs custom_profile".into())
                    })?;
                    let text = std::fs::read_to_string(path)?;
                    FrequencyProfile::Custom(TabulatedProfile::from_csv(&text)?)
                }
            },
            _ => {
                return Err(VacuaError::Config(format!(
                    "{:?} has no frequency profile",
                    self.system
                )))
            }
        };
        p.validate()?;
        Ok(p)
    }

    /// Domain of the selected system's coefficients.
    fn domain(&self) -> Result<(f64, f64)> {
        match self.system {
            System::Boson | System::ScalarFrw => Ok(self.frequency_profile()?.domain()),
            System::Fermion | System::ConstrainedPhi => Ok(self.scale_factor().domain()),
        }
    }

    pub fn resolved_span(&self) -> Result<(f64, f64)> {
        if let Some([a, b]) = self.span {
            return Ok((a, b));
        }
        let h = self.params.h;
        let g = self.params.gamma;
        let span = match self.system {
            System::Boson => match self.profile {
                ProfileId::Tanh1 => (-10.0 / h, 30.0 / h),
                ProfileId::Tanh2 => (-40.0 / h, 40.0 / h),
                ProfileId::SqrtLinear | ProfileId::InverseLinear => (0.0, 50.0 / h),
                ProfileId::Lorentzian => (-50.0 / h, 50.0 / h),
                ProfileId::Constant => (0.0, 100.0),
                ProfileId::Custom => self.domain()?,
            },
            _ => match self.scale_factor_id() {
                ScaleFactorId::SinhGamma => (0.2 / g, 8.0 / g),
                ScaleFactorId::StepRamp => (-60.0, 20.0),
                ScaleFactorId::Exponential | ScaleFactorId::Constant => (0.0, 100.0),
            },
        };
        Ok(span)
    }

    /// Seed time: the asymptotic side where ω tends to a non-zero constant, else the span start.
    pub fn resolved_anchor(&self) -> Result<f64> {
        if let Some(a) = self.anchor {
            return Ok(a);
        }
        let (lo, hi) = self.resolved_span()?;
        if self.system == System::Boson
            && self.profile != ProfileId::Custom
            && self.params.theta0.is_none()
        {
            let p = self.frequency_profile()?;
            if p.omega_in().is_none() && p.omega_out().is_some() {
                return Ok(hi.max(10.0 / p.rate()));
            }
        }
        Ok(lo)
    }

    /// Checks the configuration without running any integration.
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(VacuaError::Config(format!(
                    "{name} must be finite, got {v}"
                )))
            }
        };
        let Params {
            k,
            h,
            m,
            gamma,
            r,
            delta,
            theta0,
            dtheta0,
        } = self.params;
        for (name, v) in [
            ("k", k),
            ("H", h),
            ("m", m),
            ("gamma", gamma),
            ("r", r),
            ("delta", delta),
            ("dtheta0", dtheta0),
        ] {
            finite(name, v)?;
        }
        if r < 0.0 {
            return Err(VacuaError::Config(format!(
                "r must be non-negative, got {r}"
            )));
        }
        if let Some(t) = theta0 {
            if !(t > 0.0 && t.is_finite()) {
                return Err(VacuaError::Config(format!(
                    "theta0 must be positive, got {t}"
                )));
            }
        }
        if !(self.tol > 0.0 && self.tol <= 1e-3) {
            return Err(VacuaError::Config(format!(
                "tol must lie in (0, 1e-3], got {}",
                self.tol
            )));
        }
        if self.samples < 2 {
            return Err(VacuaError::Config(format!(
                "samples must be at least 2, got {}",
                self.samples
            )));
        }
        match self.system {
            System::Boson | System::ScalarFrw => {
                self.frequency_profile().map_err(config_error)?;
            }
            System::Fermion | System::ConstrainedPhi => {
                if !(k > 0.0) {
                    return Err(VacuaError::Config(format!("k must be positive, got {k}")));
                }
                if self.system == System::Fermion && !(m >= 0.0) {
                    return Err(VacuaError::Config(format!(
                        "m must be non-negative, got {m}"
                    )));
                }
                self.scale_factor().validate().map_err(config_error)?;
            }
        }
        if self.path == SolvePath::Sigma && self.system == System::ConstrainedPhi {
            return Err(VacuaError::Config(
                "the constrained oscillator has no σ-equation path".into(),
            ));
        }
        let (lo, hi) = self.resolved_span()?;
        let domain = self.domain()?;
        let inside = |t: f64| {
            t.is_finite()
                && t >= domain.0
                && t <= domain.1
                && (t > domain.0 || domain.0 == f64::NEG_INFINITY)
        };
        if !(hi > lo) || !inside(lo) || !inside(hi) {
            return Err(VacuaError::Config(format!(
                "span [{lo}, {hi}] is empty or leaves the domain ({}, {})",
                domain.0, domain.1
            )));
        }
        let anchor = self.resolved_anchor()?;
        if !inside(anchor) {
            return Err(VacuaError::Config(format!(
                "anchor {anchor} lies outside the domain"
            )));
        }
        if let Some(spec) = &self.search {
            spec.validate()?;
            let (a, b) = spec.objective.metric_window();
            if !inside(a) || !inside(b) {
                return Err(VacuaError::Config(format!(
                    "window [{a}, {b}] leaves the domain"
                )));
            }
            let theta_only = matches!(self.system, System::Fermion | System::ConstrainedPhi);
            if theta_only && spec.parametrization == Parametrization::SigmaInit {
                return Err(VacuaError::Config(format!(
                    "{:?} supports the theta_init and squeeze_r_delta parametrizations only",
                    self.system
                )));
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(VacuaError::Config("sweep has no values".into()));
            }
            let mut probe = self.params;
            for &v in &sweep.values {
                probe.set(&sweep.param, v)?;
            }
        }
        Ok(())
    }
}

fn config_error(e: VacuaError) -> VacuaError {
    match e {
        VacuaError::Config(_) => e,
        other => VacuaError::Config(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
        assert_eq!(RunConfig::default().resolved_anchor().unwrap(), 30.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json(r#"{"system": "boson", "colour": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"params": {"k": 1, "kappa": 2}}"#).is_err());
        let c =
            RunConfig::from_json(r#"{"system": "fermion", "params": {"k": 2, "H": 0.5}}"#).unwrap();
        assert_eq!(
            (c.system, c.params.k, c.params.h),
            (System::Fermion, 2.0, 0.5)
        );
    }

    #[test]
    fn out_of_domain_spans_fail() {
        let c = RunConfig {
            profile: ProfileId::InverseLinear,
            span: Some([-10.0, 10.0]),
            ..RunConfig::default()
        };
        assert!(matches!(c.validate(), Err(VacuaError::Config(_))));
        let c = RunConfig {
            span: Some([5.0, 5.0]),
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
        let c = RunConfig {
            params: Params {
                k: -1.0,
                ..Params::default()
            },
            ..RunConfig::default()
        };
        assert!(matches!(c.validate(), Err(VacuaError::Config(_))));
    }

    #[test]
    fn sinh_default_span() {
        let c = RunConfig {
            system: System::ConstrainedPhi,
            ..RunConfig::default()
        };
        c.validate().unwrap();
        let (a, b) = c.resolved_span().unwrap();
        assert!((a - 10.0).abs() < 1e-12 && (b - 400.0).abs() < 1e-9);
    }
}
