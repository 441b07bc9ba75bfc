//! Fermionic mode χ″ + (k² + M² − iM′)χ = 0 with M = m·a(τ), its
//! normalization k²|χ|² + |Mχ + iχ′|² = 1, and the third-order equation for
//! σ = Re(χ′χ*).

use num_complex::Complex64;

use crate::error::{Result, VacuaError};
use crate::mode::{solve_mode, ModeEquation, ModeSolution, ModeState, ModeTrajectory};
use crate::ode::uniform_grid;
use crate::profiles::ScaleFactor;
use crate::sigma::{
    first_singular_point, regular_mask, Branch, SigmaSample, SigmaSource, SigmaState,
    SigmaTrajectory, SINGULAR_FRACTION,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassValue {
    pub m: f64,
    pub dm: f64,
    pub ddm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FermionEquation {
    pub scale: ScaleFactor,
    pub m: f64,
    pub k: f64,
}

impl FermionEquation {
    pub fn new(scale: ScaleFactor, m: f64, k: f64) -> Result<Self> {
        scale.validate()?;
        if !(m >= 0.0) || !m.is_finite() {
            return Err(VacuaError::Parameter(format!(
                "mass must be non-negative, got {m}"
            )));
        }
        if !(k > 0.0) || !k.is_finite() {
            return Err(VacuaError::Parameter(format!(
                "k must be positive, got {k}"
            )));
        }
        Ok(Self { scale, m, k })
    }

    /// M = m·a and its first two derivatives.
    pub fn mass(&self, tau: f64) -> Result<MassValue> {
        let a = self.scale.eval(tau)?;
        Ok(MassValue {
            m: self.m * a.a,
            dm: self.m * a.d1,
            ddm: self.m * a.d2,
        })
    }

    /// Ω² = k² + M².
    pub fn omega_sq(&self, tau: f64) -> Result<f64> {
        Ok(self.k * self.k + self.mass(tau)?.m.powi(2))
    }

    /// k²|χ|² + (Mχ* − iχ′*)(Mχ + iχ′) − 1.
    pub fn normalization_residual(&self, s: &ModeState) -> Result<f64> {
        let mm = self.mass(s.t)?.m;
        let w = s.u * mm + Complex64::i() * s.du;
        Ok(self.k * self.k * s.u.norm_sqr() + w.norm_sqr() - 1.0)
    }

    /// Positive-frequency state of the instantaneous Hamiltonian:
    /// χ = c, χ′ = −iΩc with c² = 1/(2Ω(Ω + M)).
    pub fn vacuum_seed(&self, tau: f64) -> Result<ModeState> {
        let mm = self.mass(tau)?.m;
        let omega = self.omega_sq(tau)?.sqrt();
        let c = 1.0 / (2.0 * omega * (omega + mm)).sqrt();
        Ok(ModeState::new(
            tau,
            Complex64::new(c, 0.0),
            Complex64::new(0.0, -omega * c),
        ))
    }

    /// σ″ along the mode equation: −4Ω²σ + 2M′(Im(χ*χ′) − M|χ|²).
    pub fn sigma_accel(&self, s: &ModeState) -> Result<f64> {
        let mv = self.mass(s.t)?;
        let om2 = self.k * self.k + mv.m * mv.m;
        let j = (s.u.conj() * s.du).im;
        Ok(-4.0 * om2 * s.sigma() + 2.0 * mv.dm * (j - mv.m * s.u.norm_sqr()))
    }

    /// (σ, σ′, σ″) of a mode state.
    pub fn sigma_state(&self, s: &ModeState) -> Result<SigmaState> {
        let om2 = self.omega_sq(s.t)?;
        Ok(SigmaState {
            t: s.t,
            sigma: s.sigma(),
            dsigma: s.du.norm_sqr() - om2 * s.u.norm_sqr(),
            d2sigma: self.sigma_accel(s)?,
        })
    }
}

impl ModeEquation for FermionEquation {
    fn label(&self) -> String {
        format!("fermion on {}", self.scale.name())
    }

    fn domain(&self) -> (f64, f64) {
        self.scale.domain()
    }

    fn coefficients(&self, t: f64) -> Result<(Complex64, f64)> {
        let mv = self.mass(t)?;
        Ok((Complex64::new(self.k * self.k + mv.m * mv.m, -mv.dm), 0.0))
    }

    fn defect(&self, s: &ModeState) -> Result<f64> {
        Ok(self.normalization_residual(s)?.abs())
    }

    /// χ = c > 0, χ′ = b + iy with y = Mc − √(1 − k²c² − b²).
    fn candidate(&self, t: f64, c: f64, b: f64) -> Result<ModeState> {
        if !(c > 0.0) || !c.is_finite() || !b.is_finite() {
            return Err(VacuaError::Parameter(format!(
                "|chi| must be positive, got {c}"
            )));
        }
        let rest = 1.0 - self.k * self.k * c * c - b * b;
        if rest < 0.0 {
            return Err(VacuaError::Parameter(format!(
                "no normalized state with |chi| = {c}, Re chi' = {b}"
            )));
        }
        let y = self.mass(t)?.m * c - rest.sqrt();
        Ok(ModeState::new(
            t,
            Complex64::new(c, 0.0),
            Complex64::new(b, y),
        ))
    }

    fn real_coefficients(&self) -> bool {
        self.m == 0.0
    }
}

/// σ = Re(χ′χ*).
pub fn fermion_sigma(s: &ModeState) -> f64 {
    s.sigma()
}

fn singular(t: f64, dm: f64) -> VacuaError {
    VacuaError::Singularity {
        t,
        reason: format!("M' = {dm:e} vanishes; use the mode equation"),
    }
}

/// σ″ from the fermionic constraint
/// (Ω²/M′²)A² − 2(M/M′)σ′A + 4k²σ² + σ′² = 1, A = σ″ + 4Ω²σ.
///
/// [`Branch::Minus`] is the smaller root X = Mσ′ − √(M²σ′² − Ω²(4k²σ² + σ′² − 1))
/// of A = (M′/Ω²)X, the one carried by positive-frequency data.
pub fn close_fermion_sigma_accel(
    sigma: f64,
    dsigma: f64,
    mass: f64,
    dmass: f64,
    k: f64,
    branch: Branch,
) -> Result<f64> {
    if dmass == 0.0 {
        return Err(singular(f64::NAN, dmass));
    }
    let om2 = k * k + mass * mass;
    let c = 4.0 * k * k * sigma * sigma + dsigma * dsigma - 1.0;
    let p = mass * dsigma;
    let disc = p * p - om2 * c;
    if disc < 0.0 {
        return Err(VacuaError::Regime(format!(
            "(sigma, sigma') = ({sigma}, {dsigma}) violates the normalization bound"
        )));
    }
    let root = disc.sqrt();
    // A = (M′/Ω²)X with X² − 2pX + Ω²c = 0; p ± root without cancellation
    let m = match (branch, p >= 0.0) {
        (Branch::Plus, true) => p + root,
        (Branch::Plus, false) => om2 * c / (p - root),
        (Branch::Minus, true) => om2 * c / (p + root),
        (Branch::Minus, false) => p - root,
    };
    let a = dmass / om2 * m;
    Ok(a - 4.0 * om2 * sigma)
}

/// Left side of the fermionic constraint minus 1.
pub fn fermion_constraint_residual(s: &SigmaState, mass: f64, dmass: f64, k: f64) -> Result<f64> {
    if dmass == 0.0 {
        return Err(singular(s.t, dmass));
    }
    let om2 = k * k + mass * mass;
    let q = (s.d2sigma + 4.0 * om2 * s.sigma) / dmass;
    Ok(om2 * q * q - 2.0 * mass * s.dsigma * q
        + 4.0 * k * k * s.sigma * s.sigma
        + s.dsigma * s.dsigma
        - 1.0)
}

/// Integrates the fermionic mode equation and samples `samples` points.
pub fn integrate_fermion_mode(
    eq: &FermionEquation,
    init: ModeState,
    span: (f64, f64),
    tol: f64,
    samples: usize,
) -> Result<ModeTrajectory> {
    let sol = solve_fermion_mode(eq, init, span, tol)?;
    sol.sample(eq, &uniform_grid(span.0, span.1, samples))
}

pub fn solve_fermion_mode(
    eq: &FermionEquation,
    init: ModeState,
    span: (f64, f64),
    tol: f64,
) -> Result<ModeSolution> {
    solve_mode(eq, init, span, tol)
}

/// ε_sing = 10⁻⁶·max|M′| over a sampling of the span.
pub fn fermion_singularity_threshold(eq: &FermionEquation, span: (f64, f64)) -> Result<f64> {
    let mut max = 0.0f64;
    for t in uniform_grid(span.0, span.1, 4001) {
        max = max.max(eq.mass(t)?.dm.abs());
    }
    Ok(SINGULAR_FRACTION * max)
}

/// Integrates σ‴ − σ″M″/M′ + 4Ω²σ′ + (12MM′ − 4M″k²/M′ − 4M²M″/M′)σ = 0.
pub fn integrate_fermion_sigma(
    eq: &FermionEquation,
    init: SigmaState,
    span: (f64, f64),
    tol: f64,
    samples: usize,
) -> Result<SigmaTrajectory> {
    let eps = fermion_singularity_threshold(eq, span)?;
    integrate_fermion_sigma_with_threshold(eq, init, span, tol, samples, eps)
}

fn integrate_fermion_sigma_with_threshold(
    eq: &FermionEquation,
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
    let rate = |t: f64| eq.mass(t).map(|v| v.dm);
    for end in [t_a, t_b] {
        if let Some(t) = first_singular_point(rate, init.t, end, eps)? {
            return Err(singular(t, rate(t)?));
        }
    }
    let k2 = eq.k * eq.k;
    let rhs = |t: f64, y: &[f64; 3]| -> [f64; 3] {
        let Ok(mv) = eq.mass(t) else {
            return [f64::NAN; 3];
        };
        if mv.dm == 0.0 {
            return [f64::NAN; 3];
        }
        let (m, dm, ddm) = (mv.m, mv.dm, mv.ddm);
        let r = ddm / dm;
        let jerk =
            y[2] * r - 4.0 * (k2 + m * m) * y[1] - (12.0 * m * dm - 4.0 * r * (k2 + m * m)) * y[0];
        [y[1], y[2], jerk]
    };
    let solver = crate::sigma::sigma_solver(tol);
    let y0 = [init.sigma, init.dsigma, init.d2sigma];
    let backward = if init.t > t_a {
        Some(solver.solve(rhs, init.t, y0, t_a)?)
    } else {
        None
    };
    let forward = if init.t < t_b {
        Some(solver.solve(rhs, init.t, y0, t_b)?)
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
        let mv = eq.mass(t)?;
        out.push(SigmaSample {
            state,
            residual: fermion_constraint_residual(&state, mv.m, mv.dm, eq.k)?,
        });
    }
    Ok(SigmaTrajectory { samples: out })
}

/// σ over `span` from the fermionic σ equation where |M′| ≥ ε_sing, and
/// from the mode equation inside the exclusion zones around M′ = 0.
pub fn fermion_sigma_with_fallback(
    eq: &FermionEquation,
    init: ModeState,
    span: (f64, f64),
    tol: f64,
    samples: usize,
) -> Result<Vec<(f64, f64, SigmaSource)>> {
    let eps = fermion_singularity_threshold(eq, span)?;
    let mode = solve_mode(eq, init, span, tol)?;
    let grid = uniform_grid(span.0, span.1, samples);
    let regular = regular_mask(|t| eq.mass(t).map(|v| v.dm), &grid, eps)?;
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
        let s0 = eq.sigma_state(&mode.state_at(seg[0])?)?;
        let traj = integrate_fermion_sigma_with_threshold(
            eq,
            s0,
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
