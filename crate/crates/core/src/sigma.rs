//! Direct integration of σ through its third-order equation.
//!
//! Along any solution of ü + ω²u = 0, σ = Re(u̇u*) obeys
//!
//! σ‴ − σ̈(ω̇/ω + ω̈/ω̇) + 4σ̇ω² + σ(8ωω̇ − 4ω²ω̈/ω̇) = 0,
//!
//! and with A = 4σω² + σ̈ the quantity A(A − 2σ̇ω̇/ω)/ω̇² − 4σ² is an
//! integral of motion equal to 1 for unit-Wronskian modes. Since
//! A = −2ωω̇|u|², the physical root of that quadratic is the one with
//! sign(A) = −sign(ω̇), which is [`Branch::Minus`] for either sign of ω̇.

use crate::error::{Result, VacuaError};
use crate::mode::{solve_mode, ModeState};
use crate::ode::{uniform_grid, Dopri5};
use crate::profiles::FrequencyProfile;

/// Root of the integral-of-motion quadratic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    Plus,
    /// Positive |u|²; the physical root.
    #[default]
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaState {
    pub t: f64,
    pub sigma: f64,
    pub dsigma: f64,
    pub d2sigma: f64,
}

/// Relative |ω̇| below which the σ equation is considered singular.
pub const SINGULAR_FRACTION: f64 = 1e-6;

fn singular(t: f64, domega: f64) -> VacuaError {
    VacuaError::Singularity {
        t,
        reason: format!("omega-dot = {domega:e} vanishes; use the mode equation"),
    }
}

/// σ̈ from the integral of motion with conserved value `invariant`.
pub fn close_sigma_accel_with(
    sigma: f64,
    dsigma: f64,
    omega: f64,
    domega: f64,
    branch: Branch,
    invariant: f64,
) -> Result<f64> {
    if domega == 0.0 {
        return Err(singular(f64::NAN, domega));
    }
    if !(omega > 0.0) {
        return Err(VacuaError::Parameter(format!(
            "omega must be positive, got {omega}"
        )));
    }
    let disc = omega * omega * (invariant + 4.0 * sigma * sigma);
    let root = (dsigma * dsigma + disc).sqrt();
    // dσ ± root without cancellation
    let m = match branch {
        Branch::Plus if dsigma >= 0.0 => dsigma + root,
        Branch::Plus => -disc / (dsigma - root),
        Branch::Minus if dsigma <= 0.0 => dsigma - root,
        Branch::Minus => -disc / (dsigma + root),
    };
    let a = domega / omega * m;
    Ok(a - 4.0 * sigma * omega * omega)
}

/// σ̈ on the unit-Wronskian surface.
pub fn close_sigma_accel(
    sigma: f64,
    dsigma: f64,
    omega: f64,
    domega: f64,
    branch: Branch,
) -> Result<f64> {
    close_sigma_accel_with(sigma, dsigma, omega, domega, branch, 1.0)
}

/// Integral of motion minus its physical value 1.
pub fn constraint_residual(s: &SigmaState, omega: f64, domega: f64) -> Result<f64> {
    Ok(constraint_value(s, omega, domega)? - 1.0)
}

/// (1/(ωω̇²))(4σω² + σ̈)(4σω³ + σ̈ω − 2σ̇ω̇) − 4σ².
pub fn constraint_value(s: &SigmaState, omega: f64, domega: f64) -> Result<f64> {
    if domega == 0.0 {
        return Err(singular(s.t, domega));
    }
    let q = (4.0 * s.sigma * omega * omega + s.d2sigma) / domega;
    Ok(q * (q - 2.0 * s.dsigma / omega) - 4.0 * s.sigma * s.sigma)
}

/// σ and σ̇ from the polar form u = θe^{iφ}.
pub fn sigma_from_theta(theta: f64, dtheta: f64, dphi: f64, omega: f64) -> Result<(f64, f64)> {
    if !(theta > 0.0) {
        return Err(VacuaError::Parameter(format!(
            "theta must be positive, got {theta}"
        )));
    }
    Ok((
        theta * dtheta,
        dtheta * dtheta + theta * theta * (dphi * dphi - omega * omega),
    ))
}

/// φ̇ = −X/(2θ²), fixed by the Wronskian.
pub fn phase_rate(theta: f64, normalization: f64) -> f64 {
    -normalization / (2.0 * theta * theta)
}

/// Inverse of [`sigma_from_theta`] on the W = iX surface; requires ω² > 0.
///
/// With ρ = θ², ω²ρ² + σ̇ρ − (σ² + X²/4) = 0 has exactly one positive root.
pub fn theta_from_sigma(
    sigma: f64,
    dsigma: f64,
    omega_sq: f64,
    normalization: f64,
) -> Result<(f64, f64)> {
    if !(omega_sq > 0.0) {
        return Err(VacuaError::Regime(format!(
            "sigma-parametrized data needs a positive frequency squared, got {omega_sq}"
        )));
    }
    let c = sigma * sigma + normalization * normalization / 4.0;
    let root = (dsigma * dsigma + 4.0 * omega_sq * c).sqrt();
    let rho = if dsigma <= 0.0 {
        (root - dsigma) / (2.0 * omega_sq)
    } else {
        2.0 * c / (root + dsigma)
    };
    let theta = rho.sqrt();
    Ok((theta, sigma / theta))
}

/// Initial σ-state at `t` with σ̈ closed from the constraint.
pub fn sigma_initial(
    profile: &FrequencyProfile,
    t: f64,
    sigma: f64,
    dsigma: f64,
    branch: Branch,
) -> Result<SigmaState> {
    let v = profile.eval(t)?;
    let d2sigma = close_sigma_accel(sigma, dsigma, v.omega, v.domega, branch)
        .map_err(|_| singular(t, v.domega))?;
    Ok(SigmaState {
        t,
        sigma,
        dsigma,
        d2sigma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaSample {
    pub state: SigmaState,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SigmaTrajectory {
    pub samples: Vec<SigmaSample>,
}

impl SigmaTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.state.t).collect()
    }

    pub fn sigma(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.state.sigma).collect()
    }

    /// max |residual(t) − residual(t₀)|.
    pub fn residual_drift(&self) -> f64 {
        let Some(first) = self.samples.first() else {
            return 0.0;
        };
        self.samples
            .iter()
            .map(|s| (s.residual - first.residual).abs())
            .fold(0.0, f64::max)
    }
}

/// ε_sing = 10⁻⁶·max|ω̇| over a sampling of the span.
pub fn singularity_threshold(profile: &FrequencyProfile, span: (f64, f64)) -> Result<f64> {
    let mut max = 0.0f64;
    for t in uniform_grid(span.0, span.1, 4001) {
        max = max.max(profile.eval(t)?.domega.abs());
    }
    Ok(SINGULAR_FRACTION * max)
}

/// Samples lying in an exclusion zone: a run of |rate| < eps around a zero
/// of `rate`. Decaying tails without a zero keep bounded coefficients and stay
/// regular. Both neighbours of a sign change are always excluded.
fn excluded(values: &[f64], eps: f64) -> Vec<bool> {
    let n = values.len();
    let mut out = vec![false; n];
    for i in 0..n {
        let crossing = values[i] == 0.0 || (i > 0 && values[i].signum() != values[i - 1].signum());
        if !crossing {
            continue;
        }
        let mut lo = if i > 0 && values[i] != 0.0 { i - 1 } else { i };
        let mut hi = i;
        while lo > 0 && values[lo - 1].abs() < eps {
            lo -= 1;
        }
        while hi + 1 < n && values[hi + 1].abs() < eps {
            hi += 1;
        }
        out[lo..=hi].iter_mut().for_each(|e| *e = true);
    }
    out
}

/// First point from `from` towards `to` inside an exclusion zone of `rate`;
/// sign changes between samples are located by bisection.
pub(crate) fn first_singular_point<F: Fn(f64) -> Result<f64>>(
    rate: F,
    from: f64,
    to: f64,
    eps: f64,
) -> Result<Option<f64>> {
    let grid = uniform_grid(from, to, 4001);
    let values: Vec<f64> = grid.iter().map(|&t| rate(t)).collect::<Result<_>>()?;
    let Some(j) = excluded(&values, eps).iter().position(|&e| e) else {
        return Ok(None);
    };
    if values[j].abs() < eps || j + 1 == grid.len() {
        return Ok(Some(grid[j]));
    }
    let (mut a, mut b, mut va) = (grid[j], grid[j + 1], values[j]);
    for _ in 0..100 {
        let mid = 0.5 * (a + b);
        let vm = rate(mid)?;
        if vm.signum() == va.signum() {
            a = mid;
            va = vm;
        } else {
            b = mid;
        }
    }
    Ok(Some(0.5 * (a + b)))
}

/// Grid points where the σ equation may be used.
pub(crate) fn regular_mask<F: Fn(f64) -> Result<f64>>(
    rate: F,
    grid: &[f64],
    eps: f64,
) -> Result<Vec<bool>> {
    let values: Vec<f64> = grid.iter().map(|&t| rate(t)).collect::<Result<_>>()?;
    Ok(excluded(&values, eps).into_iter().map(|e| !e).collect())
}

/// σ and its derivatives shrink with ω̇ in decaying tails, so the error
/// control is relative.
pub(crate) fn sigma_solver(tol: f64) -> Dopri5 {
    Dopri5::with_tolerance(tol, tol * 1e-12)
}

fn sigma_rhs(profile: &FrequencyProfile) -> impl Fn(f64, &[f64; 3]) -> [f64; 3] + '_ {
    move |t, y| {
        let Ok(v) = profile.eval(t) else {
            return [f64::NAN; 3];
        };
        if v.domega == 0.0 {
            return [f64::NAN; 3];
        }
        let (w, dw, ddw) = (v.omega, v.domega, v.ddomega);
        let jerk = y[2] * (dw / w + ddw / dw)
            - 4.0 * y[1] * w * w
            - y[0] * (8.0 * w * dw - 4.0 * w * w * ddw / dw);
        [y[1], y[2], jerk]
    }
}

/// Integrates the σ equation over `span`, sampling `samples` uniform points.
///
/// Fails with [`VacuaError::Singularity`] at the first point of an exclusion
/// zone: |ω̇| < 10⁻⁶·max|ω̇| on the span around a zero of ω̇.
pub fn integrate_sigma(
    profile: &FrequencyProfile,
    init: SigmaState,
    span: (f64, f64),
    tol: f64,
    samples: usize,
) -> Result<SigmaTrajectory> {
    let eps = singularity_threshold(profile, span)?;
    integrate_sigma_with_threshold(profile, init, span, tol, samples, eps)
}

pub fn integrate_sigma_with_threshold(
    profile: &FrequencyProfile,
    init: SigmaState,
    span: (f64, f64),
    tol: f64,
    samples: usize,
    eps: f64,
) -> Result<SigmaTrajectory> {
    let (t_a, t_b) = span;
    if !(t_b > t_a) || !(init.t >= t_a && init.t <= t_b) {
        return Err(VacuaError::Parameter(format!(
            "initial time {} must lie in a non-empty span [{t_a}, {t_b}]",
            init.t
        )));
    }
    for t in [t_a, t_b] {
        if !profile.in_domain(t) {
            return Err(VacuaError::domain(profile.name(), t));
        }
    }
    let rate = |t: f64| profile.eval(t).map(|v| v.domega);
    for end in [t_a, t_b] {
        if let Some(t) = first_singular_point(rate, init.t, end, eps)? {
            return Err(singular(t, rate(t)?));
        }
    }

    let solver = sigma_solver(tol);
    let y0 = [init.sigma, init.dsigma, init.d2sigma];
    let backward = if init.t > t_a {
        Some(solver.solve(sigma_rhs(profile), init.t, y0, t_a)?)
    } else {
        None
    };
    let forward = if init.t < t_b {
        Some(solver.solve(sigma_rhs(profile), init.t, y0, t_b)?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(samples);
    for t in uniform_grid(t_a, t_b, samples) {
        let y = if t >= init.t {
            forward.as_ref().map_or(y0, |f| f.eval(t))
        } else {
            backward.as_ref().map_or(y0, |b| b.eval(t))
        };
        let state = SigmaState {
            t,
            sigma: y[0],
            dsigma: y[1],
            d2sigma: y[2],
        };
        let v = profile.eval(t)?;
        out.push(SigmaSample {
            state,
            residual: constraint_residual(&state, v.omega, v.domega)?,
        });
    }
    Ok(SigmaTrajectory { samples: out })
}

/// Where a σ sample came from in [`sigma_with_fallback`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaSource {
    SigmaEquation,
    ModeEquation,
}

/// σ over `span` from the σ equation wherever |ω̇| ≥ ε_sing, and from the
/// mode equation inside the exclusion zones.
///
/// Every σ-equation segment is re-seeded from the mode solution at its start,
/// with σ̈ closed on the [`Branch::Minus`] root.
pub fn sigma_with_fallback(
    profile: &FrequencyProfile,
    init: ModeState,
    span: (f64, f64),
    tol: f64,
    samples: usize,
) -> Result<Vec<(f64, f64, SigmaSource)>> {
    let eps = singularity_threshold(profile, span)?;
    let mode = solve_mode(profile, init, span, tol)?;
    let grid = uniform_grid(span.0, span.1, samples);
    let regular = regular_mask(|t| profile.eval(t).map(|v| v.domega), &grid, eps)?;
    let mut out = Vec::with_capacity(samples);
    let mut i = 0;
    while i < grid.len() {
        if !regular[i] {
            out.push((
                grid[i],
                mode.state_at(grid[i])?.sigma(),
                SigmaSource::ModeEquation,
            ));
            i += 1;
            continue;
        }
        let start = i;
        while i < grid.len() && regular[i] {
            i += 1;
        }
        let seg = &grid[start..i];
        if seg.len() < 2 {
            out.push((
                seg[0],
                mode.state_at(seg[0])?.sigma(),
                SigmaSource::ModeEquation,
            ));
            continue;
        }
        let s0 = mode.state_at(seg[0])?;
        let v = profile.eval(seg[0])?;
        let (sig, dsig) = crate::mode::sigma_of_mode(&s0, v.omega);
        let init = SigmaState {
            t: seg[0],
            sigma: sig,
            dsigma: dsig,
            d2sigma: close_sigma_accel(sig, dsig, v.omega, v.domega, Branch::Minus)?,
        };
        // the segment's own end points are regular by construction
        let traj = integrate_sigma_with_threshold(
            profile,
            init,
            (seg[0], seg[seg.len() - 1]),
            tol,
            seg.len(),
            eps * 0.5,
        )?;
        out.extend(
            traj.samples
                .iter()
                .map(|s| (s.state.t, s.state.sigma, SigmaSource::SigmaEquation)),
        );
    }
    Ok(out)
}
