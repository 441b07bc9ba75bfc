//! Vacuum selection: functionals of σ̇, their minimization over initial data,
//! and classification of the minimizers.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VacuaError};
use crate::mode::{sigma_with, solve_mode, ModeEquation, ModeState, SqueezeParams};
use crate::ode::uniform_grid;
use crate::optimize::{minimize, OptimizerSettings};
use crate::quadrature::{resolved_samples, simpson};
use crate::sigma::theta_from_sigma;

/// Oscillation-metric threshold below which σ counts as non-oscillating.
pub const VACUUM_THRESHOLD: f64 = 1e-2;

const MIN_WINDOW_SAMPLES: usize = 32;
const MIN_METRIC_SAMPLES: usize = 64;
const THETA_BOUNDS: (f64, f64) = (1e-3, 1e3);
const DTHETA_BOUND: f64 = 10.0;
const R_MAX: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parametrization {
    /// (r, δ) of a Bogolubov transform of a base mode.
    SqueezeRDelta,
    /// (ln θ₀, θ̇₀) at the window start.
    ThetaInit,
    /// (σ, σ̇) at the window start.
    SigmaInit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowSide {
    /// Anchored towards t → −∞.
    Early,
    /// Anchored towards t → +∞.
    Late,
    #[default]
    Central,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Objective {
    /// ∫σ̇² over [lo, hi]; with `centered`, ∫(σ̇ − ⟨σ̇⟩)².
    Window {
        lo: f64,
        hi: f64,
        #[serde(default)]
        centered: bool,
    },
    /// Tail ratio against a squeezed reference, extrapolated in T.
    Ratio {
        t0: f64,
        t_list: Vec<f64>,
        r0: f64,
        delta0: f64,
    },
}

impl Objective {
    /// Interval on which the oscillation metric of the minimizer is judged.
    pub fn metric_window(&self) -> (f64, f64) {
        match self {
            Objective::Window { lo, hi, .. } => (*lo, *hi),
            Objective::Ratio { t_list, .. } => (t_list[0], t_list[t_list.len() - 1]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Objective::Window { lo, hi, .. } => {
                if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
                    return Err(VacuaError::Config(format!("window [{lo}, {hi}] is empty")));
                }
            }
            Objective::Ratio { t0, t_list, r0, .. } => {
                if t_list.is_empty() {
                    return Err(VacuaError::Config("T list is empty".into()));
                }
                if t_list[0] <= *t0 || t_list.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(VacuaError::Config(
                        "T list must increase strictly from t0".into(),
                    ));
                }
                if !(*r0 > 0.0) {
                    return Err(VacuaError::Config(
                        "reference squeeze r0 must be positive".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    pub parametrization: Parametrization,
    pub objective: Objective,
    #[serde(default)]
    pub side: WindowSide,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
    /// Quadrature samples per window; resolved from the frequency if absent.
    #[serde(default)]
    pub samples: Option<usize>,
}

impl SearchSpec {
    pub fn validate(&self) -> Result<()> {
        self.objective.validate()?;
        self.optimizer.validate()?;
        if let Some(n) = self.samples {
            if n < MIN_METRIC_SAMPLES {
                return Err(VacuaError::Config(format!(
                    "need at least {MIN_METRIC_SAMPLES} samples, got {n}"
                )));
            }
        }
        if self.parametrization == Parametrization::SqueezeRDelta {
            return Ok(());
        }
        if matches!(self.objective, Objective::Ratio { .. }) {
            return Err(VacuaError::Config(
                "the ratio functional is defined over squeeze parameters".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    OutVacuum,
    InVacuum,
    ApproximateVacuum,
    NoVacuum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub metric: f64,
    pub sign_changes: usize,
}

impl OscillationReport {
    pub fn passes(&self) -> bool {
        self.metric < VACUUM_THRESHOLD
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub parametrization: Parametrization,
    /// Optimal parameters after folding into their bounds.
    pub params: Vec<f64>,
    pub anchor: f64,
    /// [Re u, Im u, Re u̇, Im u̇] at the anchor.
    pub initial: [f64; 4],
    pub z_min: f64,
    pub oscillation: OscillationReport,
    pub classification: Classification,
    pub evaluations: usize,
    pub converged: bool,
}

impl SearchResult {
    pub fn initial_state(&self) -> ModeState {
        let [a, b, c, d] = self.initial;
        ModeState::new(self.anchor, Complex64::new(a, b), Complex64::new(c, d))
    }
}

/// Degree of the polynomial trend removed by [`oscillation_metric`].
pub const TREND_DEGREE: usize = 7;
/// Degree of the fit to ln(scale) used as the normalizing envelope.
pub const ENVELOPE_DEGREE: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricOptions {
    pub degree: usize,
    /// Degree of the polynomial fitted to ln(scale) to form the envelope.
    pub envelope_degree: usize,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            degree: TREND_DEGREE,
            envelope_degree: ENVELOPE_DEGREE,
        }
    }
}

/// Residual of the least-squares fit by Legendre polynomials P₀…P_d on x ∈ [−1, 1].
fn polynomial_residual(x: &[f64], y: &[f64], degree: usize) -> Vec<f64> {
    let n = degree + 1;
    let basis = |x: f64| {
        let mut p = vec![1.0; n];
        if n > 1 {
            p[1] = x;
        }
        for j in 2..n {
            p[j] = ((2 * j - 1) as f64 * x * p[j - 1] - (j - 1) as f64 * p[j - 2]) / j as f64;
        }
        p
    };
    let mut a = vec![vec![0.0f64; n + 1]; n];
    for (&xi, &yi) in x.iter().zip(y) {
        let p = basis(xi);
        for r in 0..n {
            for c in 0..n {
                a[r][c] += p[r] * p[c];
            }
            a[r][n] += p[r] * yi;
        }
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        let pivot = a[col].clone();
        for (row, line) in a.iter_mut().enumerate() {
            if row != col && pivot[col] != 0.0 {
                let f = line[col] / pivot[col];
                for (v, p) in line.iter_mut().zip(&pivot).skip(col) {
                    *v -= f * p;
                }
            }
        }
    }
    let coef: Vec<f64> = (0..n)
        .map(|i| {
            if a[i][i] != 0.0 {
                a[i][n] / a[i][i]
            } else {
                0.0
            }
        })
        .collect();
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let p = basis(xi);
            yi - (0..n).map(|i| coef[i] * p[i]).sum::<f64>()
        })
        .collect()
}

/// Peak-to-peak size of the oscillating part of σ on `window`.
///
/// σ is divided by a smooth envelope of `scale` (the natural choice is
/// √(|u|²|u̇|²), which bounds |σ|): the exponential of a degree
/// [`ENVELOPE_DEGREE`] least-squares fit to ln(scale). A polynomial trend of degree [`TREND_DEGREE`]
/// is removed and the metric is the peak-to-peak range of the remainder.
/// Without `scale`, the RMS of the fitted trend is the divisor. The report also counts strict sign changes of the discrete σ̇.
pub fn oscillation_metric(
    t: &[f64],
    sigma: &[f64],
    scale: Option<&[f64]>,
    window: (f64, f64),
) -> Result<OscillationReport> {
    oscillation_metric_with(t, sigma, scale, window, MetricOptions::default())
}

pub fn oscillation_metric_with(
    t: &[f64],
    sigma: &[f64],
    scale: Option<&[f64]>,
    window: (f64, f64),
    options: MetricOptions,
) -> Result<OscillationReport> {
    let idx: Vec<usize> = (0..t.len())
        .filter(|&i| t[i] >= window.0 && t[i] <= window.1)
        .collect();
    if idx.len() < MIN_METRIC_SAMPLES {
        return Err(VacuaError::Parameter(format!(
            "oscillation metric needs {MIN_METRIC_SAMPLES} samples in [{}, {}], got {}",
            window.0,
            window.1,
            idx.len()
        )));
    }
    let (lo, hi) = (t[idx[0]], t[idx[idx.len() - 1]]);
    let half = 0.5 * (hi - lo);
    let x: Vec<f64> = idx.iter().map(|&i| (t[i] - lo) / half - 1.0).collect();
    let rms = |v: &mut dyn Iterator<Item = f64>| {
        (v.map(|a| a * a).sum::<f64>() / idx.len() as f64).sqrt()
    };
    let y: Vec<f64> = match scale {
        Some(s) => {
            let ln: Vec<f64> = idx
                .iter()
                .map(|&i| s[i].abs().max(f64::MIN_POSITIVE).ln())
                .collect();
            let rough = polynomial_residual(&x, &ln, options.envelope_degree);
            idx.iter()
                .zip(ln.iter().zip(&rough))
                .map(|(&i, (l, r))| sigma[i] / (l - r).exp())
                .collect()
        }
        None => idx.iter().map(|&i| sigma[i]).collect(),
    };
    let resid = polynomial_residual(&x, &y, options.degree);
    let divisor = match scale {
        Some(_) => 1.0,
        None => rms(&mut y.iter().zip(&resid).map(|(a, b)| a - b)).max(f64::MIN_POSITIVE),
    };
    let (mn, mx) = resid
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let roundoff = 64.0 * f64::EPSILON * y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let metric = if mx - mn > roundoff {
        (mx - mn) / divisor
    } else {
        0.0
    };

    let mut sign_changes = 0;
    let mut last = 0.0f64;
    for w in idx.windows(2) {
        let d = sigma[w[1]] - sigma[w[0]];
        if d != 0.0 {
            if last != 0.0 && d.signum() != last.signum() {
                sign_changes += 1;
            }
            last = d;
        }
    }
    Ok(OscillationReport {
        metric,
        sign_changes,
    })
}

fn is_uniform(t: &[f64]) -> bool {
    let h = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    t.windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs())
}

/// ∫σ̇² over `window` from samples; Simpson on uniform grids, trapezoid otherwise.
pub fn functional_window(t: &[f64], dsigma: &[f64], window: (f64, f64)) -> Result<f64> {
    integrate_window(t, dsigma, window, false)
}

/// ∫(σ̇ − ⟨σ̇⟩)² over `window`.
pub fn functional_window_centered(t: &[f64], dsigma: &[f64], window: (f64, f64)) -> Result<f64> {
    integrate_window(t, dsigma, window, true)
}

fn integrate_window(t: &[f64], dsigma: &[f64], window: (f64, f64), centered: bool) -> Result<f64> {
    let (lo, hi) = window;
    let span_lo = t.first().copied().unwrap_or(f64::NAN);
    let span_hi = t.last().copied().unwrap_or(f64::NAN);
    let slack = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
    if !(hi > lo) || !(lo >= span_lo - slack) || !(hi <= span_hi + slack) {
        return Err(VacuaError::Window {
            lo,
            hi,
            span_lo,
            span_hi,
        });
    }
    let idx: Vec<usize> = (0..t.len())
        .filter(|&i| t[i] >= lo - slack && t[i] <= hi + slack)
        .collect();
    if idx.len() < MIN_WINDOW_SAMPLES {
        return Err(VacuaError::Parameter(format!(
            "window functional needs {MIN_WINDOW_SAMPLES} samples, got {}",
            idx.len()
        )));
    }
    let ts: Vec<f64> = idx.iter().map(|&i| t[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| dsigma[i]).collect();
    let integrate = |y: &[f64]| -> Result<f64> {
        if is_uniform(&ts) {
            simpson(y, ts[1] - ts[0])
        } else {
            Ok(ts
                .windows(2)
                .zip(y.windows(2))
                .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1]))
                .sum())
        }
    };
    let mean = if centered {
        integrate(&ys)? / (ts[ts.len() - 1] - ts[0])
    } else {
        0.0
    };
    let sq: Vec<f64> = ys.iter().map(|v| (v - mean).powi(2)).collect();
    Ok(integrate(&sq)?.max(0.0))
}

/// Two solutions through the anchor with (u, u̇) = (1, 0) and (0, 1), sampled on a grid.
///
/// Any mode of the equation is u(t₁)·f + u̇(t₁)·g, so candidates are evaluated
/// without further integration.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    pub anchor: f64,
    pub t: Vec<f64>,
    f: Vec<ModeState>,
    g: Vec<ModeState>,
    omega_sq: Vec<Complex64>,
    friction: Vec<f64>,
}

impl ModeBasis {
    pub fn new<E: ModeEquation + ?Sized>(
        eq: &E,
        anchor: f64,
        grid: Vec<f64>,
        tol: f64,
    ) -> Result<Self> {
        if grid.is_empty() {
            return Err(VacuaError::Parameter("empty grid".into()));
        }
        let lo = grid[0].min(anchor);
        let hi = grid[grid.len() - 1].max(anchor);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let fs = solve_mode(eq, ModeState::new(anchor, one, zero), (lo, hi), tol)?;
        let gs = solve_mode(eq, ModeState::new(anchor, zero, one), (lo, hi), tol)?;
        let mut f = Vec::with_capacity(grid.len());
        let mut g = Vec::with_capacity(grid.len());
        let mut omega_sq = Vec::with_capacity(grid.len());
        let mut friction = Vec::with_capacity(grid.len());
        for &t in &grid {
            f.push(fs.state_at(t)?);
            g.push(gs.state_at(t)?);
            let (w2, p) = eq.coefficients(t)?;
            omega_sq.push(w2);
            friction.push(p);
        }
        Ok(Self {
            anchor,
            t: grid,
            f,
            g,
            omega_sq,
            friction,
        })
    }

    pub fn state(&self, i: usize, init: &ModeState) -> ModeState {
        let (f, g) = (&self.f[i], &self.g[i]);
        ModeState::new(
            self.t[i],
            init.u * f.u + init.du * g.u,
            init.u * f.du + init.du * g.du,
        )
    }

    /// (σ, σ̇, √(|u|²|u̇|²)) along the grid for the mode through `init` at the anchor.
    pub fn sigma_series(&self, init: &ModeState) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.t.len();
        let (mut s, mut ds, mut sc) = (
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        );
        for i in 0..n {
            let st = self.state(i, init);
            let (a, b) = sigma_with(&st, self.omega_sq[i], self.friction[i]);
            s.push(a);
            ds.push(b);
            sc.push(st.uncertainty_product().sqrt());
        }
        (s, ds, sc)
    }
}

/// Maps raw optimizer coordinates to an initial state at the anchor.
struct CandidateMap<'a, E: ModeEquation + ?Sized> {
    eq: &'a E,
    parametrization: Parametrization,
    anchor: f64,
    base: ModeState,
}

fn squeeze_from(x: &[f64]) -> SqueezeParams {
    let r = x[0].abs().min(R_MAX);
    SqueezeParams {
        r,
        delta: x[1].rem_euclid(TAU),
    }
}

impl<E: ModeEquation + ?Sized> CandidateMap<'_, E> {
    fn folded(&self, x: &[f64]) -> Vec<f64> {
        match self.parametrization {
            Parametrization::SqueezeRDelta => {
                let sp = squeeze_from(x);
                vec![sp.r, sp.delta]
            }
            Parametrization::ThetaInit => vec![
                x[0].exp().clamp(THETA_BOUNDS.0, THETA_BOUNDS.1),
                x[1].clamp(-DTHETA_BOUND, DTHETA_BOUND),
            ],
            Parametrization::SigmaInit => x.to_vec(),
        }
    }

    fn state(&self, x: &[f64]) -> Result<ModeState> {
        match self.parametrization {
            Parametrization::SqueezeRDelta => Ok(squeeze_from(x).transform(&self.base)),
            Parametrization::ThetaInit => {
                let p = self.folded(x);
                self.eq.candidate(self.anchor, p[0], p[1])
            }
            Parametrization::SigmaInit => {
                let (w2, p) = self.eq.coefficients(self.anchor)?;
                let x0 = self.eq.normalization(self.anchor)?;
                let (theta, dtheta) = theta_from_sigma(x[0], x[1] + p * x[0], w2.re, x0)?;
                self.eq.candidate(self.anchor, theta, dtheta)
            }
        }
    }

    /// Coordinates of the base state, used as the search start.
    fn start(&self, objective: &Objective) -> Result<Vec<f64>> {
        match self.parametrization {
            Parametrization::SqueezeRDelta => Ok(match objective {
                Objective::Ratio { r0, delta0, .. } => vec![*r0, *delta0],
                Objective::Window { .. } => vec![0.3, 0.0],
            }),
            Parametrization::ThetaInit => {
                let theta = self.base.u.norm();
                let dtheta = self.base.sigma() / theta;
                Ok(vec![theta.ln(), dtheta])
            }
            Parametrization::SigmaInit => {
                let (w2, p) = self.eq.coefficients(self.anchor)?;
                let (s, ds) = sigma_with(&self.base, w2, p);
                Ok(vec![s, ds])
            }
        }
    }
}

fn max_rate<E: ModeEquation + ?Sized>(eq: &E, lo: f64, hi: f64) -> Result<f64> {
    let mut m = 0.0f64;
    for t in uniform_grid(lo, hi, 257) {
        let (w2, _) = eq.coefficients(t)?;
        m = m.max(w2.norm().sqrt());
    }
    // σ oscillates at twice the mode frequency
    Ok(2.0 * m)
}

/// Window grid with enough points to resolve σ.
pub fn window_grid<E: ModeEquation + ?Sized>(
    eq: &E,
    lo: f64,
    hi: f64,
    samples: Option<usize>,
) -> Result<Vec<f64>> {
    let n = match samples {
        Some(n) => n,
        None => resolved_samples(hi - lo, max_rate(eq, lo, hi)?, 2001, 400_001),
    };
    Ok(uniform_grid(lo, hi, n))
}

/// Extrapolated value and the raw ratios at each T.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioValue {
    pub ratios: Vec<f64>,
    pub extrapolated: f64,
}

/// The tail ratio functional over squeezed states of a base mode.
///
/// Numerator and reference are evaluated through the same basis, so the
/// reference parameters give exactly 1.
pub struct RatioFunctional {
    basis: ModeBasis,
    base: ModeState,
    t0: f64,
    t_list: Vec<f64>,
    /// Grid index ranges of the quadrature segments [t0,T₁], [T₁,T₂], …
    segments: Vec<(usize, usize)>,
    reference_integrals: Vec<f64>,
}

/// T₁, 2T₁, 4T₁ with T₁ spanning 20 periods of `omega`.
pub fn default_t_list(omega: f64) -> Vec<f64> {
    let t1 = 20.0 * TAU / omega;
    vec![t1, 2.0 * t1, 4.0 * t1]
}

impl RatioFunctional {
    pub fn new<E: ModeEquation + ?Sized>(
        eq: &E,
        base: ModeState,
        reference: SqueezeParams,
        t0: f64,
        t_list: &[f64],
        tol: f64,
    ) -> Result<Self> {
        Objective::Ratio {
            t0,
            t_list: t_list.to_vec(),
            r0: reference.r.max(f64::MIN_POSITIVE),
            delta0: reference.delta,
        }
        .validate()?;
        if !eq.real_coefficients() {
            return Err(VacuaError::Config(
                "squeezing needs a real-coefficient mode equation".into(),
            ));
        }
        let mut grid = Vec::new();
        let mut segments = Vec::new();
        let mut start = t0;
        for &t in t_list {
            let seg = uniform_grid(
                start,
                t,
                resolved_samples(t - start, max_rate(eq, start, t)?, 129, 400_001),
            );
            let first = if grid.is_empty() { 0 } else { grid.len() - 1 };
            if !grid.is_empty() {
                grid.pop();
            }
            grid.extend(seg);
            segments.push((first, grid.len()));
            start = t;
        }
        let basis = ModeBasis::new(eq, base.t, grid, tol)?;
        let mut me = Self {
            basis,
            base,
            t0,
            t_list: t_list.to_vec(),
            segments,
            reference_integrals: Vec::new(),
        };
        me.reference_integrals = me.cumulative(reference)?;
        if let Some(&smallest) = me.reference_integrals.iter().min_by(|a, b| a.total_cmp(b)) {
            if smallest < 1e-14 {
                return Err(VacuaError::ReferenceDegenerate(smallest));
            }
        }
        Ok(me)
    }

    fn cumulative(&self, sp: SqueezeParams) -> Result<Vec<f64>> {
        let (_, ds, _) = self.basis.sigma_series(&sp.transform(&self.base));
        let sq: Vec<f64> = ds.iter().map(|v| v * v).collect();
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.segments.len());
        for &(a, b) in &self.segments {
            let h = self.basis.t[a + 1] - self.basis.t[a];
            acc += simpson(&sq[a..b], h)?;
            out.push(acc);
        }
        Ok(out)
    }

    /// Ratio at each T and its extrapolation assuming an O(1/(T − t₀)) correction.
    pub fn evaluate(&self, sp: SqueezeParams) -> Result<RatioValue> {
        let num = self.cumulative(sp)?;
        let ratios: Vec<f64> = num
            .iter()
            .zip(&self.reference_integrals)
            .map(|(n, d)| n / d)
            .collect();
        let n = ratios.len();
        let extrapolated = if n >= 2 {
            let lp = self.t_list[n - 2] - self.t0;
            let ll = self.t_list[n - 1] - self.t0;
            ((ll * ratios[n - 1] - lp * ratios[n - 2]) / (ll - lp)).max(0.0)
        } else {
            ratios[0]
        };
        Ok(RatioValue {
            ratios,
            extrapolated,
        })
    }

    pub fn basis(&self) -> &ModeBasis {
        &self.basis
    }
}

fn classify(report: &OscillationReport, side: WindowSide) -> Classification {
    if !report.passes() {
        return Classification::NoVacuum;
    }
    match side {
        WindowSide::Early => Classification::InVacuum,
        WindowSide::Late => Classification::OutVacuum,
        WindowSide::Central => Classification::ApproximateVacuum,
    }
}

/// A prepared search: basis, objective and candidate map.
pub struct Search<'a, E: ModeEquation + ?Sized> {
    spec: SearchSpec,
    map: CandidateMap<'a, E>,
    basis: Option<ModeBasis>,
    ratio: Option<RatioFunctional>,
}

impl<'a, E: ModeEquation + ?Sized> Search<'a, E> {
    /// `base` is the state squeezed by [`Parametrization::SqueezeRDelta`]
    /// and the starting point of the other parametrizations.
    pub fn new(eq: &'a E, base: ModeState, spec: SearchSpec, tol: f64) -> Result<Self> {
        spec.validate()?;
        if spec.parametrization == Parametrization::SqueezeRDelta && !eq.real_coefficients() {
            return Err(VacuaError::Config(
                "squeeze parametrization needs a real-coefficient mode equation".into(),
            ));
        }
        match &spec.objective {
            Objective::Ratio {
                t0,
                t_list,
                r0,
                delta0,
            } => {
                let reference = SqueezeParams::new(*r0, *delta0)?;
                let ratio = RatioFunctional::new(eq, base, reference, *t0, t_list, tol)?;
                Ok(Self {
                    map: CandidateMap {
                        eq,
                        parametrization: spec.parametrization,
                        anchor: base.t,
                        base,
                    },
                    spec,
                    basis: None,
                    ratio: Some(ratio),
                })
            }
            Objective::Window { lo, hi, .. } => {
                let grid = window_grid(eq, *lo, *hi, spec.samples)?;
                let anchor = if spec.parametrization == Parametrization::SqueezeRDelta {
                    base.t
                } else {
                    *lo
                };
                let anchored = if base.t == anchor {
                    base
                } else {
                    let span = (base.t.min(anchor), base.t.max(anchor));
                    solve_mode(eq, base, span, tol)?.state_at(anchor)?
                };
                let basis = ModeBasis::new(eq, anchor, grid, tol)?;
                Ok(Self {
                    map: CandidateMap {
                        eq,
                        parametrization: spec.parametrization,
                        anchor,
                        base: anchored,
                    },
                    spec,
                    basis: Some(basis),
                    ratio: None,
                })
            }
        }
    }

    pub fn basis(&self) -> &ModeBasis {
        match (&self.basis, &self.ratio) {
            (Some(b), _) => b,
            (None, Some(r)) => r.basis(),
            _ => unreachable!("search always owns a basis"),
        }
    }

    /// Objective at raw optimizer coordinates; infeasible points give +∞.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        let init = self.map.state(x)?;
        match (&self.spec.objective, &self.ratio) {
            (Objective::Ratio { .. }, Some(r)) => Ok(r.evaluate(squeeze_from(x))?.extrapolated),
            (Objective::Window { lo, hi, centered }, _) => {
                let b = self.basis();
                let (_, ds, _) = b.sigma_series(&init);
                integrate_window(&b.t, &ds, (*lo, *hi), *centered)
            }
            _ => unreachable!("ratio objective owns a ratio functional"),
        }
    }

    /// Oscillation report on the metric window for a state at the anchor.
    pub fn oscillation(&self, init: &ModeState) -> Result<OscillationReport> {
        let b = self.basis();
        let (s, _, sc) = b.sigma_series(init);
        oscillation_metric(&b.t, &s, Some(&sc), self.spec.objective.metric_window())
    }

    pub fn run(&self) -> Result<SearchResult> {
        let start = self.map.start(&self.spec.objective)?;
        let f = |x: &[f64]| self.objective(x).unwrap_or(f64::INFINITY);
        let best = minimize(f, &start, &self.spec.optimizer)?;
        let init = self.map.state(&best.x)?;
        let oscillation = self.oscillation(&init)?;
        Ok(SearchResult {
            parametrization: self.spec.parametrization,
            params: self.map.folded(&best.x),
            anchor: self.map.anchor,
            initial: [init.u.re, init.u.im, init.du.re, init.du.im],
            z_min: best.value.max(0.0),
            classification: classify(&oscillation, self.spec.side),
            oscillation,
            evaluations: best.evaluations,
            converged: best.converged,
        })
    }
}

/// Minimizes the functional of `spec` for modes of `eq`.
pub fn minimize_functional<E: ModeEquation + ?Sized>(
    eq: &E,
    base: ModeState,
    spec: &SearchSpec,
    tol: f64,
) -> Result<SearchResult> {
    Search::new(eq, base, spec.clone(), tol)?.run()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowCandidate {
    pub side: WindowSide,
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub centered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub window: WindowCandidate,
    pub result: SearchResult,
    pub classification: Classification,
    /// Largest and smallest metric over generic unit-scale states in the window.
    pub probe_metric_max: f64,
    pub probe_metric_min: f64,
    /// Every probe was already non-oscillating.
    pub flat_landscape: bool,
    /// Whether this window's minimizer passes the metric in each candidate window.
    pub passes_in: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VacuumReport {
    pub windows: Vec<WindowReport>,
    /// One minimizer is non-oscillating in every candidate window.
    pub global_vacuum: bool,
}

/// Generic unit-scale states at `t`: θ ∈ {½, 1, 2}·√X, θ̇ ∈ {−½, 0, ½}·√X.
fn probe_states<E: ModeEquation + ?Sized>(eq: &E, t: f64) -> Result<Vec<ModeState>> {
    let unit = eq.normalization(t)?.sqrt();
    let mut out = Vec::new();
    for theta in [0.5, 1.0, 2.0] {
        for dtheta in [-0.5, 0.0, 0.5] {
            if let Ok(s) = eq.candidate(t, theta * unit, dtheta * unit) {
                out.push(s);
            }
        }
    }
    Ok(out)
}

/// Minimizes the window functional in each candidate window and classifies the minimizers.
pub fn classify_vacuum<E: ModeEquation + ?Sized>(
    eq: &E,
    base: ModeState,
    windows: &[WindowCandidate],
    parametrization: Parametrization,
    optimizer: &OptimizerSettings,
    tol: f64,
) -> Result<VacuumReport> {
    let mut searches = Vec::with_capacity(windows.len());
    let mut results = Vec::with_capacity(windows.len());
    for w in windows {
        let spec = SearchSpec {
            parametrization,
            objective: Objective::Window {
                lo: w.lo,
                hi: w.hi,
                centered: w.centered,
            },
            side: w.side,
            optimizer: *optimizer,
            samples: None,
        };
        let search = Search::new(eq, base, spec, tol)?;
        results.push(search.run()?);
        searches.push(search);
    }
    let lo = windows.iter().map(|w| w.lo).fold(f64::INFINITY, f64::min);
    let hi = windows
        .iter()
        .map(|w| w.hi)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut reports = Vec::with_capacity(windows.len());
    for ((w, search), result) in windows.iter().zip(&searches).zip(results) {
        let init = result.initial_state();
        let mut probe_max = 0.0f64;
        let mut probe_min = f64::INFINITY;
        for p in probe_states(eq, init.t)? {
            let m = search.oscillation(&p)?.metric;
            probe_max = probe_max.max(m);
            probe_min = probe_min.min(m);
        }
        let flat = probe_max < VACUUM_THRESHOLD;
        let classification = if flat {
            Classification::NoVacuum
        } else {
            result.classification
        };
        let sol = solve_mode(eq, init, (lo.min(init.t), hi.max(init.t)), tol)?;
        let mut passes_in = Vec::with_capacity(windows.len());
        for other in windows {
            let traj = sol.sample(eq, &window_grid(eq, other.lo, other.hi, None)?)?;
            let rep = oscillation_metric(
                &traj.times(),
                &traj.sigma(),
                Some(&traj.uncertainty_scale()),
                (other.lo, other.hi),
            )?;
            passes_in.push(rep.passes());
        }
        reports.push(WindowReport {
            window: *w,
            result,
            classification,
            probe_metric_max: probe_max,
            probe_metric_min: probe_min,
            flat_landscape: flat,
            passes_in,
        });
    }
    let global_vacuum = reports.len() > 1
        && reports.iter().any(|r| {
            r.classification != Classification::NoVacuum && r.passes_in.iter().all(|&p| p)
        });
    Ok(VacuumReport {
        windows: reports,
        global_vacuum,
    })
}

/// |β| between two unit-Wronskian modes of a real equation at the same time.
pub fn bogolubov_beta(a: &ModeState, b: &ModeState) -> f64 {
    (a.u * b.du - a.du * b.u).norm()
}
