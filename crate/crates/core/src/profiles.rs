//! Analytic frequency profiles ω(t) and scale factors a(τ).
//!
//! Every built-in profile carries hand-written closed-form derivatives. The
//! σ equations divide by ω̇, so numerically differentiated coefficients are
//! never used in the engines; finite differences only appear in
//! [`validate_derivatives`].

use serde::{Deserialize, Serialize};

use crate::error::{Result, VacuaError};

/// ω together with its first two time derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyValue {
    pub omega: f64,
    pub domega: f64,
    pub ddomega: f64,
}

/// Sign in front of a″/a in the conformal-time scalar-field frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FrwSign {
    /// ω² = k² + m²a² + a″/a
    #[default]
    Plus,
    /// ω² = k² + m²a² − a″/a
    Minus,
}

impl FrwSign {
    fn factor(self) -> f64 {
        match self {
            FrwSign::Plus => 1.0,
            FrwSign::Minus => -1.0,
        }
    }
}

/// Driving profiles of the oscillator ü + ω²(t)u = 0.
#[derive(Debug, Clone, PartialEq)]
pub enum FrequencyProfile {
    /// ω ≡ omega.
    Constant { omega: f64 },
    /// ω = k√(1 + tanh Ht); a single global vacuum.
    Tanh1 { k: f64, h: f64 },
    /// ω = k√(2 + tanh Ht); distinct in- and out-vacua.
    Tanh2 { k: f64, h: f64 },
    /// ω = k√(1 + Ht), defined for t > −1/H.
    SqrtLinear { k: f64, h: f64 },
    /// ω = k/(1 + 2Ht), defined for t > −1/(2H).
    InverseLinear { k: f64, h: f64 },
    /// ω = k/(1 + H²t²).
    Lorentzian { k: f64, h: f64 },
    /// Conformal-time scalar field mode: ω² = k² + m²a² ± a″/a.
    ScalarFrw {
        k: f64,
        m: f64,
        scale: ScaleFactor,
        sign: FrwSign,
    },
    /// Tabulated ω(t) with monotone cubic interpolation.
    Custom(TabulatedProfile),
}

impl FrequencyProfile {
    pub fn name(&self) -> &'static str {
        match self {
            FrequencyProfile::Constant { .. } => "constant",
            FrequencyProfile::Tanh1 { .. } => "tanh1",
            FrequencyProfile::Tanh2 { .. } => "tanh2",
            FrequencyProfile::SqrtLinear { .. } => "sqrt-linear",
            FrequencyProfile::InverseLinear { .. } => "inverse-linear",
            FrequencyProfile::Lorentzian { .. } => "lorentzian",
            FrequencyProfile::ScalarFrw { .. } => "scalar-frw",
            FrequencyProfile::Custom(_) => "custom",
        }
    }

    /// Open interval on which the profile is defined.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            FrequencyProfile::SqrtLinear { h, .. } => (-1.0 / h, f64::INFINITY),
            FrequencyProfile::InverseLinear { h, .. } => (-0.5 / h, f64::INFINITY),
            FrequencyProfile::ScalarFrw { scale, .. } => scale.domain(),
            FrequencyProfile::Custom(tab) => (tab.t[0], tab.t[tab.t.len() - 1]),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn in_domain(&self, t: f64) -> bool {
        let (lo, hi) = self.domain();
        match self {
            // tabulated data is valid on the closed interval
            FrequencyProfile::Custom(_) => t >= lo && t <= hi,
            _ => t > lo && t < hi,
        }
    }

    fn check(&self, t: f64) -> Result<()> {
        if t.is_finite() && self.in_domain(t) {
            Ok(())
        } else {
            Err(VacuaError::domain(self.name(), t))
        }
    }

    /// Validates parameters once, before any numerics run.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(VacuaError::Parameter(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        match self {
            FrequencyProfile::Constant { omega } => positive("omega", *omega),
            FrequencyProfile::Tanh1 { k, h }
            | FrequencyProfile::Tanh2 { k, h }
            | FrequencyProfile::SqrtLinear { k, h }
            | FrequencyProfile::InverseLinear { k, h }
            | FrequencyProfile::Lorentzian { k, h } => {
                positive("k", *k)?;
                positive("H", *h)
            }
            FrequencyProfile::ScalarFrw { k, m, scale, .. } => {
                positive("k", *k)?;
                if !(*m >= 0.0) {
                    return Err(VacuaError::Parameter(format!(
                        "m must be non-negative, got {m}"
                    )));
                }
                scale.validate()
            }
            FrequencyProfile::Custom(_) => Ok(()),
        }
    }

    /// ω² at `t`. For the scalar FRW oscillator this may be negative.
    pub fn omega_sq(&self, t: f64) -> Result<f64> {
        match self {
            FrequencyProfile::ScalarFrw { k, m, scale, sign } => {
                let a = scale.eval(t)?;
                Ok(k * k + m * m * a.a * a.a + sign.factor() * a.d2 / a.a)
            }
            _ => Ok(self.eval(t)?.omega.powi(2)),
        }
    }

    /// ω, ω̇, ω̈ at `t`.
    pub fn eval(&self, t: f64) -> Result<FrequencyValue> {
        self.check(t)?;
        let v = match *self {
            FrequencyProfile::Constant { omega } => FrequencyValue {
                omega,
                domega: 0.0,
                ddomega: 0.0,
            },
            FrequencyProfile::Tanh1 { k, h } => tanh_profile(k, h, 1.0, t),
            FrequencyProfile::Tanh2 { k, h } => tanh_profile(k, h, 2.0, t),
            FrequencyProfile::SqrtLinear { k, h } => {
                let s = 1.0 + h * t;
                let r = s.sqrt();
                FrequencyValue {
                    omega: k * r,
                    domega: k * h / (2.0 * r),
                    ddomega: -k * h * h / (4.0 * s * r),
                }
            }
            FrequencyProfile::InverseLinear { k, h } => {
                let s = 1.0 + 2.0 * h * t;
                FrequencyValue {
                    omega: k / s,
                    domega: -2.0 * h * k / (s * s),
                    ddomega: 8.0 * h * h * k / (s * s * s),
                }
            }
            FrequencyProfile::Lorentzian { k, h } => {
                let h2 = h * h;
                let s = 1.0 + h2 * t * t;
                FrequencyValue {
                    omega: k / s,
                    domega: -2.0 * h2 * t * k / (s * s),
                    ddomega: k * (6.0 * h2 * h2 * t * t - 2.0 * h2) / (s * s * s),
                }
            }
            FrequencyProfile::ScalarFrw {
                k,
                m,
                ref scale,
                sign,
            } => {
                let a = scale.eval_full(t)?;
                let s = sign.factor();
                let m2 = m * m;
                let w = k * k + m2 * a.a * a.a + s * a.d2 / a.a;
                if !(w > 0.0) {
                    return Err(VacuaError::Regime(format!(
                        "scalar FRW frequency squared {w} is not positive at t = {t}"
                    )));
                }
                let w1 = 2.0 * m2 * a.a * a.d1 + s * (a.d3 * a.a - a.d2 * a.d1) / (a.a * a.a);
                let w2 = 2.0 * m2 * (a.d1 * a.d1 + a.a * a.d2)
                    + s * ((a.d4 * a.a - a.d2 * a.d2) / (a.a * a.a)
                        - 2.0 * a.d1 * (a.d3 * a.a - a.d2 * a.d1) / (a.a * a.a * a.a));
                let omega = w.sqrt();
                FrequencyValue {
                    omega,
                    domega: w1 / (2.0 * omega),
                    ddomega: w2 / (2.0 * omega) - w1 * w1 / (4.0 * omega * w),
                }
            }
            FrequencyProfile::Custom(ref tab) => tab.eval(t),
        };
        Ok(v)
    }

    /// Limit of ω as t → +∞ when it exists.
    pub fn omega_out(&self) -> Option<f64> {
        match *self {
            FrequencyProfile::Constant { omega } => Some(omega),
            FrequencyProfile::Tanh1 { k, .. } => Some(k * 2f64.sqrt()),
            FrequencyProfile::Tanh2 { k, .. } => Some(k * 3f64.sqrt()),
            _ => None,
        }
    }

    /// Limit of ω as t → −∞ when it exists and is non-zero.
    pub fn omega_in(&self) -> Option<f64> {
        match *self {
            FrequencyProfile::Constant { omega } => Some(omega),
            FrequencyProfile::Tanh2 { k, .. } => Some(k),
            _ => None,
        }
    }

    /// Characteristic rate of change, used for default anchor times.
    pub fn rate(&self) -> f64 {
        match *self {
            FrequencyProfile::Tanh1 { h, .. }
            | FrequencyProfile::Tanh2 { h, .. }
            | FrequencyProfile::SqrtLinear { h, .. }
            | FrequencyProfile::InverseLinear { h, .. }
            | FrequencyProfile::Lorentzian { h, .. } => h,
            _ => 1.0,
        }
    }
}

/// ω = k√(c + tanh Ht), written so that c = 1 does not cancel for Ht ≪ 0.
fn tanh_profile(k: f64, h: f64, c: f64, t: f64) -> FrequencyValue {
    let x = h * t;
    let th = x.tanh();
    let s = if c == 1.0 {
        2.0 / (1.0 + (-2.0 * x).exp())
    } else {
        c + th
    };
    let sech2 = 1.0 / x.cosh().powi(2);
    let s1 = h * sech2;
    let s2 = -2.0 * h * h * th * sech2;
    let r = s.sqrt();
    FrequencyValue {
        omega: k * r,
        domega: k * s1 / (2.0 * r),
        ddomega: k * (s2 / (2.0 * r) - s1 * s1 / (4.0 * s * r)),
    }
}

/// a and its first three derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFactorValue {
    pub a: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// a and its first four derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFactorJet {
    pub a: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
}

/// Constants of the step-and-ramp conformal scale factor
/// a(τ) = τ/(1 + e^{shift − τ}) + plateau·(1 − (τ + offset)/(1 + e^{τ + cutoff}))⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRamp {
    pub shift: f64,
    pub plateau: f64,
    pub offset: f64,
    pub cutoff: f64,
}

impl Default for StepRamp {
    fn default() -> Self {
        Self {
            shift: 3.0,
            plateau: 4.0,
            offset: 15.0,
            cutoff: 25.0,
        }
    }
}

/// Prescribed expansion histories.
#[derive(Debug, Clone, PartialEq)]
pub enum ScaleFactor {
    /// a = sinh(γt), t > 0.
    SinhGamma { gamma: f64 },
    /// The illustrative step-and-ramp history in conformal time.
    StepRamp(StepRamp),
    /// a = e^{γt}.
    Exponential { gamma: f64 },
    /// a ≡ value.
    Constant { value: f64 },
}

/// Logistic function and its first four derivatives.
fn logistic_jet(x: f64) -> [f64; 5] {
    let g = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    // 1 − g without cancellation
    let gc = if x >= 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    };
    let g1 = g * gc;
    [
        g,
        g1,
        g1 * (1.0 - 2.0 * g),
        g1 * (1.0 - 6.0 * g + 6.0 * g * g),
        g1 * (1.0 - 14.0 * g + 36.0 * g * g - 24.0 * g * g * g),
    ]
}

impl ScaleFactor {
    pub fn name(&self) -> &'static str {
        match self {
            ScaleFactor::SinhGamma { .. } => "sinh",
            ScaleFactor::StepRamp(_) => "step-ramp",
            ScaleFactor::Exponential { .. } => "exponential",
            ScaleFactor::Constant { .. } => "constant",
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            ScaleFactor::SinhGamma { .. } => (0.0, f64::INFINITY),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ScaleFactor::SinhGamma { gamma } | ScaleFactor::Exponential { gamma }
                if !(gamma > 0.0) =>
            {
                Err(VacuaError::Parameter(format!(
                    "gamma must be positive, got {gamma}"
                )))
            }
            ScaleFactor::Constant { value } if !(value > 0.0) => Err(VacuaError::Parameter(
                format!("scale factor must be positive, got {value}"),
            )),
            _ => Ok(()),
        }
    }

    /// (a, a′, a″, a‴) at τ.
    pub fn eval(&self, tau: f64) -> Result<ScaleFactorValue> {
        let j = self.eval_full(tau)?;
        Ok(ScaleFactorValue {
            a: j.a,
            d1: j.d1,
            d2: j.d2,
            d3: j.d3,
        })
    }

    /// (a, …, a⁗) at τ.
    pub fn eval_full(&self, tau: f64) -> Result<ScaleFactorJet> {
        let (lo, hi) = self.domain();
        if !(tau > lo && tau < hi) {
            return Err(VacuaError::domain(self.name(), tau));
        }
        let jet = match *self {
            ScaleFactor::SinhGamma { gamma } => {
                let (s, c) = ((gamma * tau).sinh(), (gamma * tau).cosh());
                let g2 = gamma * gamma;
                ScaleFactorJet {
                    a: s,
                    d1: gamma * c,
                    d2: g2 * s,
                    d3: g2 * gamma * c,
                    d4: g2 * g2 * s,
                }
            }
            ScaleFactor::Exponential { gamma } => {
                let e = (gamma * tau).exp();
                ScaleFactorJet {
                    a: e,
                    d1: gamma * e,
                    d2: gamma.powi(2) * e,
                    d3: gamma.powi(3) * e,
                    d4: gamma.powi(4) * e,
                }
            }
            ScaleFactor::Constant { value } => ScaleFactorJet {
                a: value,
                d1: 0.0,
                d2: 0.0,
                d3: 0.0,
                d4: 0.0,
            },
            ScaleFactor::StepRamp(p) => step_ramp(&p, tau),
        };
        if !(jet.a > 0.0) {
            return Err(VacuaError::Regime(format!(
                "scale factor {} is not positive at {tau}",
                jet.a
            )));
        }
        Ok(jet)
    }
}

fn step_ramp(p: &StepRamp, tau: f64) -> ScaleFactorJet {
    // first term: τ·g(τ − shift)
    let g = logistic_jet(tau - p.shift);
    let first: [f64; 5] = std::array::from_fn(|n| {
        if n == 0 {
            tau * g[0]
        } else {
            n as f64 * g[n - 1] + tau * g[n]
        }
    });

    // second term: plateau / D with D = 1 − (τ + offset)·h, h(τ) = g(−(τ + cutoff))
    let hl = logistic_jet(-(tau + p.cutoff));
    let h: [f64; 5] = std::array::from_fn(|n| if n % 2 == 0 { hl[n] } else { -hl[n] });
    let s = tau + p.offset;
    let d: [f64; 5] = std::array::from_fn(|n| {
        if n == 0 {
            1.0 - s * h[0]
        } else {
            -(n as f64) * h[n - 1] - s * h[n]
        }
    });
    let f = 1.0 / d[0];
    let (f2, f3, f4, f5) = (f * f, f * f * f, f.powi(4), f.powi(5));
    let inv = [
        f,
        -d[1] * f2,
        -d[2] * f2 + 2.0 * d[1] * d[1] * f3,
        -d[3] * f2 + 6.0 * d[1] * d[2] * f3 - 6.0 * d[1].powi(3) * f4,
        -d[4] * f2 + (8.0 * d[1] * d[3] + 6.0 * d[2] * d[2]) * f3 - 36.0 * d[1] * d[1] * d[2] * f4
            + 24.0 * d[1].powi(4) * f5,
    ];
    let a: [f64; 5] = std::array::from_fn(|n| first[n] + p.plateau * inv[n]);
    ScaleFactorJet {
        a: a[0],
        d1: a[1],
        d2: a[2],
        d3: a[3],
        d4: a[4],
    }
}

/// Tabulated ω(t) interpolated with a Fritsch–Carlson monotone cubic.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedProfile {
    t: Vec<f64>,
    omega: Vec<f64>,
    slope: Vec<f64>,
}

impl TabulatedProfile {
    pub fn new(t: Vec<f64>, omega: Vec<f64>) -> Result<Self> {
        if t.len() != omega.len() || t.len() < 2 {
            return Err(VacuaError::Parameter(
                "tabulated profile needs at least two (t, omega) rows".into(),
            ));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(VacuaError::Parameter(
                "tabulated t must be strictly increasing".into(),
            ));
        }
        if omega.iter().any(|w| !(*w > 0.0)) {
            return Err(VacuaError::Parameter(
                "tabulated omega must be positive".into(),
            ));
        }
        let n = t.len();
        let secant: Vec<f64> = (0..n - 1)
            .map(|i| (omega[i + 1] - omega[i]) / (t[i + 1] - t[i]))
            .collect();
        let mut slope = vec![0.0; n];
        slope[0] = secant[0];
        slope[n - 1] = secant[n - 2];
        for i in 1..n - 1 {
            slope[i] = if secant[i - 1] * secant[i] <= 0.0 {
                0.0
            } else {
                (secant[i - 1] + secant[i]) / 2.0
            };
        }
        for i in 0..n - 1 {
            if secant[i] == 0.0 {
                slope[i] = 0.0;
                slope[i + 1] = 0.0;
                continue;
            }
            let alpha = slope[i] / secant[i];
            let beta = slope[i + 1] / secant[i];
            let norm = alpha * alpha + beta * beta;
            if norm > 9.0 {
                let tau = 3.0 / norm.sqrt();
                slope[i] = tau * alpha * secant[i];
                slope[i + 1] = tau * beta * secant[i];
            }
        }
        Ok(Self { t, omega, slope })
    }

    /// Parses a two-column `t,omega` CSV with a header row.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| VacuaError::Config("empty profile CSV".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["t", "omega"] {
            return Err(VacuaError::Config(format!(
                "expected header `t,omega`, got `{header}`"
            )));
        }
        let (mut t, mut w) = (Vec::new(), Vec::new());
        for (i, line) in lines.enumerate() {
            let mut it = line.split(',').map(str::trim);
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|v| v.parse().ok()).ok_or_else(|| {
                    VacuaError::Config(format!("bad profile row {}: `{line}`", i + 2))
                })
            };
            t.push(parse(it.next())?);
            w.push(parse(it.next())?);
        }
        Self::new(t, w)
    }

    fn eval(&self, t: f64) -> FrequencyValue {
        let n = self.t.len();
        let i = self.t.partition_point(|&x| x <= t).clamp(1, n - 1) - 1;
        let h = self.t[i + 1] - self.t[i];
        let s = (t - self.t[i]) / h;
        let (y0, y1) = (self.omega[i], self.omega[i + 1]);
        let (m0, m1) = (self.slope[i] * h, self.slope[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let omega = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1;
        let d1 = (6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * m1;
        let d2 = (12.0 * s - 6.0) * y0
            + (6.0 * s - 4.0) * m0
            + (-12.0 * s + 6.0) * y1
            + (6.0 * s - 2.0) * m1;
        FrequencyValue {
            omega,
            domega: d1 / h,
            ddomega: d2 / (h * h),
        }
    }
}

/// Anything with closed-form derivatives that [`validate_derivatives`] can check.
pub trait AnalyticDerivatives {
    /// Value followed by its analytic derivatives, lowest order first.
    fn jet(&self, t: f64) -> Result<Vec<f64>>;
}

impl AnalyticDerivatives for FrequencyProfile {
    fn jet(&self, t: f64) -> Result<Vec<f64>> {
        let v = self.eval(t)?;
        Ok(vec![v.omega, v.domega, v.ddomega])
    }
}

impl AnalyticDerivatives for ScaleFactor {
    fn jet(&self, t: f64) -> Result<Vec<f64>> {
        let j = self.eval_full(t)?;
        Ok(vec![j.a, j.d1, j.d2, j.d3, j.d4])
    }
}

/// Worst relative disagreement between each analytic derivative and the
/// fourth-order central difference of the next-lower analytic derivative.
///
/// Errors are normalized per derivative order by the largest analytic
/// magnitude on the grid; an order that vanishes identically is compared in
/// absolute terms.
pub fn validate_derivatives<P: AnalyticDerivatives + ?Sized>(
    target: &P,
    grid: &[f64],
    h: f64,
) -> Result<f64> {
    let mut worst: Vec<f64> = Vec::new();
    let mut scale: Vec<f64> = Vec::new();
    for &t in grid {
        let centre = target.jet(t)?;
        let stencil = [
            target.jet(t - 2.0 * h)?,
            target.jet(t - h)?,
            target.jet(t + h)?,
            target.jet(t + 2.0 * h)?,
        ];
        let orders = centre.len() - 1;
        if worst.is_empty() {
            worst = vec![0.0; orders];
            scale = vec![0.0; orders];
        }
        for n in 0..orders {
            let fd = (stencil[0][n] - 8.0 * stencil[1][n] + 8.0 * stencil[2][n] - stencil[3][n])
                / (12.0 * h);
            worst[n] = f64::max(worst[n], (centre[n + 1] - fd).abs());
            scale[n] = f64::max(scale[n], centre[n + 1].abs());
        }
    }
    Ok(worst
        .iter()
        .zip(&scale)
        .map(|(&e, &s)| if s > 0.0 { e / s } else { e })
        .fold(0.0, f64::max))
}
