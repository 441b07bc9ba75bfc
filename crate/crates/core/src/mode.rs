//! Complex mode functions of ü + p(t)u̇ + ω²(t)u = 0.
//!
//! A mode is carried as (u, u̇). For the standard oscillator the Wronskian
//! W = u·u̇* − u*·u̇ equals i; equations with friction p = −d ln X/dt carry
//! W = iX(t) instead. σ = Re(u̇u*) is half the time derivative of |u|².

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Result, VacuaError};
use crate::ode::{uniform_grid, DenseSolution, Dopri5};
use crate::profiles::FrequencyProfile;

pub const DEFAULT_SAMPLES: usize = 2000;

/// Mode amplitude and velocity at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState {
    pub t: f64,
    pub u: Complex64,
    pub du: Complex64,
}

impl ModeState {
    pub fn new(t: f64, u: Complex64, du: Complex64) -> Self {
        Self { t, u, du }
    }

    pub fn wronskian(&self) -> Complex64 {
        self.u * self.du.conj() - self.u.conj() * self.du
    }

    /// σ = Re(u̇·u*).
    pub fn sigma(&self) -> f64 {
        (self.du * self.u.conj()).re
    }

    /// |u|²·|u̇|², equal to σ² + X²/4 for a normalized mode.
    pub fn uncertainty_product(&self) -> f64 {
        self.u.norm_sqr() * self.du.norm_sqr()
    }

    pub(crate) fn to_array(self) -> [f64; 4] {
        [self.u.re, self.u.im, self.du.re, self.du.im]
    }

    pub(crate) fn from_array(t: f64, y: &[f64; 4]) -> Self {
        Self {
            t,
            u: Complex64::new(y[0], y[1]),
            du: Complex64::new(y[2], y[3]),
        }
    }
}

/// Bogolubov parameters (r, δ) of a squeezed vacuum.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SqueezeParams {
    pub r: f64,
    pub delta: f64,
}

impl SqueezeParams {
    /// Normalizes δ into [0, 2π).
    pub fn new(r: f64, delta: f64) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() || !delta.is_finite() {
            return Err(VacuaError::Parameter(format!(
                "invalid squeeze parameters r = {r}, delta = {delta}"
            )));
        }
        Ok(Self {
            r,
            delta: delta.rem_euclid(TAU),
        })
    }

    pub fn vacuum() -> Self {
        Self { r: 0.0, delta: 0.0 }
    }

    /// u ↦ cosh r·u + sinh r·e^{iδ}·u*, applied to amplitude and velocity alike.
    pub fn transform(&self, s: &ModeState) -> ModeState {
        let c = self.r.cosh();
        let sp = Complex64::from_polar(self.r.sinh(), self.delta);
        ModeState {
            t: s.t,
            u: s.u * c + sp * s.u.conj(),
            du: s.du * c + sp * s.du.conj(),
        }
    }
}

/// Coefficients of a linear second-order mode equation.
pub trait ModeEquation: Sync {
    /// Human-readable name used in diagnostics.
    fn label(&self) -> String;

    /// Open interval on which the coefficients exist.
    fn domain(&self) -> (f64, f64);

    /// (ω², p) in ü + p·u̇ + ω²·u = 0. ω² may be complex.
    fn coefficients(&self, t: f64) -> Result<(Complex64, f64)>;

    /// X(t) in W = iX(t); 1 for the standard oscillator.
    fn normalization(&self, _t: f64) -> Result<f64> {
        Ok(1.0)
    }

    /// Deviation of `s` from the conserved normalization of this equation.
    fn defect(&self, s: &ModeState) -> Result<f64> {
        Ok(wronskian_defect(s, self.normalization(s.t)?))
    }

    /// Normalized vacuum candidate at `t` from two real coordinates.
    fn candidate(&self, t: f64, theta: f64, dtheta: f64) -> Result<ModeState> {
        vacuum_candidate_initial(t, theta, dtheta, self.normalization(t)?)
    }

    /// Whether u* solves the equation whenever u does.
    fn real_coefficients(&self) -> bool {
        true
    }

    /// Smallest mode magnitude expected on `span`; scales the absolute tolerance.
    fn magnitude_floor(&self, _span: (f64, f64)) -> Result<f64> {
        Ok(1.0)
    }
}

impl ModeEquation for FrequencyProfile {
    fn label(&self) -> String {
        self.name().to_string()
    }

    fn domain(&self) -> (f64, f64) {
        FrequencyProfile::domain(self)
    }

    fn coefficients(&self, t: f64) -> Result<(Complex64, f64)> {
        if !self.in_domain(t) {
            return Err(VacuaError::domain(self.name(), t));
        }
        Ok((Complex64::new(self.omega_sq(t)?, 0.0), 0.0))
    }
}

/// Mode equation assembled from closures, for tests and ad-hoc systems.
pub struct ClosureEquation<W, P>
where
    W: Fn(f64) -> Complex64 + Sync,
    P: Fn(f64) -> f64 + Sync,
{
    pub omega_sq: W,
    pub friction: P,
}

impl<W, P> ModeEquation for ClosureEquation<W, P>
where
    W: Fn(f64) -> Complex64 + Sync,
    P: Fn(f64) -> f64 + Sync,
{
    fn label(&self) -> String {
        "closure".into()
    }

    fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    fn coefficients(&self, t: f64) -> Result<(Complex64, f64)> {
        Ok(((self.omega_sq)(t), (self.friction)(t)))
    }
}

/// θ-parametrized vacuum candidate: u = θ₀, u̇ = θ̇₀ − iX₀/(2θ₀), so W = iX₀.
pub fn vacuum_candidate_initial(t: f64, theta0: f64, dtheta0: f64, x0: f64) -> Result<ModeState> {
    if !(theta0 > 0.0) || !theta0.is_finite() {
        return Err(VacuaError::Parameter(format!(
            "theta0 must be positive, got {theta0}"
        )));
    }
    if !(x0 > 0.0) || !x0.is_finite() {
        return Err(VacuaError::Parameter(format!(
            "normalization X0 must be positive, got {x0}"
        )));
    }
    Ok(ModeState {
        t,
        u: Complex64::new(theta0, 0.0),
        du: Complex64::new(dtheta0, -x0 / (2.0 * theta0)),
    })
}

/// First-order adiabatic vacuum at `t`: θ = 1/√(2ω), θ̇ = −ω̇θ/(2ω).
pub fn adiabatic_seed(profile: &FrequencyProfile, t: f64) -> Result<ModeState> {
    let v = profile.eval(t)?;
    let theta = 1.0 / (2.0 * v.omega).sqrt();
    vacuum_candidate_initial(t, theta, -v.domega * theta / (2.0 * v.omega), 1.0)
}

/// σ and its time derivative for a mode of ü + ω²u = 0.
///
/// σ̇ = |u̇|² − ω²|u|², the exact derivative of σ along solutions (twice the
/// mean kinetic-minus-potential energy).
pub fn sigma_of_mode(s: &ModeState, omega: f64) -> (f64, f64) {
    sigma_with(s, Complex64::new(omega * omega, 0.0), 0.0)
}

/// σ and σ̇ for ü + p·u̇ + ω²·u = 0 with possibly complex ω².
pub fn sigma_with(s: &ModeState, omega_sq: Complex64, friction: f64) -> (f64, f64) {
    let sigma = s.sigma();
    let dsigma = s.du.norm_sqr() - friction * sigma - omega_sq.re * s.u.norm_sqr();
    (sigma, dsigma)
}

/// |u·u̇* − u*·u̇ − iX|.
pub fn wronskian_defect(s: &ModeState, x: f64) -> f64 {
    (s.wronskian() - Complex64::new(0.0, x)).norm()
}

/// One sample of a mode trajectory together with the coefficients at that time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSample {
    pub state: ModeState,
    pub omega_sq: Complex64,
    pub friction: f64,
    pub normalization: f64,
    pub sigma: f64,
    pub dsigma: f64,
    pub defect: f64,
}

impl ModeSample {
    fn build(
        state: ModeState,
        omega_sq: Complex64,
        friction: f64,
        normalization: f64,
        defect: f64,
    ) -> Self {
        let (sigma, dsigma) = sigma_with(&state, omega_sq, friction);
        Self {
            state,
            omega_sq,
            friction,
            normalization,
            sigma,
            dsigma,
            defect,
        }
    }
}

/// Mode samples on a strictly increasing time grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModeTrajectory {
    pub samples: Vec<ModeSample>,
}

impl ModeTrajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.state.t).collect()
    }

    pub fn sigma(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.sigma).collect()
    }

    pub fn dsigma(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.dsigma).collect()
    }

    /// √(|u|²|u̇|²) per sample; the natural scale of σ.
    pub fn uncertainty_scale(&self) -> Vec<f64> {
        self.samples
            .iter()
            .map(|s| s.state.uncertainty_product().sqrt())
            .collect()
    }

    pub fn max_defect(&self) -> f64 {
        self.samples.iter().map(|s| s.defect).fold(0.0, f64::max)
    }
}

/// Dense solution of a mode equation, possibly extending both ways from its seed.
#[derive(Debug, Clone)]
pub struct ModeSolution {
    seed: ModeState,
    backward: Option<DenseSolution<4>>,
    forward: Option<DenseSolution<4>>,
}

impl ModeSolution {
    pub fn span(&self) -> (f64, f64) {
        let lo = self.backward.as_ref().map_or(self.seed.t, |b| b.t_end());
        let hi = self.forward.as_ref().map_or(self.seed.t, |f| f.t_end());
        (lo, hi)
    }

    pub fn state_at(&self, t: f64) -> Result<ModeState> {
        let (lo, hi) = self.span();
        if !(t >= lo && t <= hi) {
            return Err(VacuaError::Window {
                lo: t,
                hi: t,
                span_lo: lo,
                span_hi: hi,
            });
        }
        let y = if t >= self.seed.t {
            match &self.forward {
                Some(f) => f.eval(t),
                None => self.seed.to_array(),
            }
        } else {
            match &self.backward {
                Some(b) => b.eval(t),
                None => self.seed.to_array(),
            }
        };
        Ok(ModeState::from_array(t, &y))
    }

    /// Samples the solution on `grid` (strictly increasing, inside the span).
    pub fn sample<E: ModeEquation + ?Sized>(&self, eq: &E, grid: &[f64]) -> Result<ModeTrajectory> {
        let mut samples = Vec::with_capacity(grid.len());
        for &t in grid {
            let state = self.state_at(t)?;
            let (w2, p) = eq.coefficients(t)?;
            let x = eq.normalization(t)?;
            let defect = eq.defect(&state)?;
            samples.push(ModeSample::build(state, w2, p, x, defect));
        }
        Ok(ModeTrajectory { samples })
    }

    pub fn step_count(&self) -> usize {
        self.backward.as_ref().map_or(0, |b| b.step_count())
            + self.forward.as_ref().map_or(0, |f| f.step_count())
    }
}

fn check_span<E: ModeEquation + ?Sized>(eq: &E, t_a: f64, t_b: f64) -> Result<()> {
    let (lo, hi) = eq.domain();
    for t in [t_a, t_b] {
        if !t.is_finite() || t <= lo || t >= hi {
            return Err(VacuaError::domain(eq.label(), t));
        }
    }
    Ok(())
}

/// Integrator settings for a tolerance `tol`: rtol = tol/10 and
/// atol = tol/1000 scaled by the expected mode magnitude `floor` (at most 1).
pub fn solver_for(tol: f64, floor: f64) -> Dopri5 {
    Dopri5::with_tolerance(0.1 * tol, 1e-3 * tol * floor.min(1.0))
}

/// Integrates the mode equation from `init` over `[t_a, t_b]`; `init.t` may
/// lie anywhere inside the span.
pub fn solve_mode<E: ModeEquation + ?Sized>(
    eq: &E,
    init: ModeState,
    span: (f64, f64),
    tol: f64,
) -> Result<ModeSolution> {
    let (t_a, t_b) = span;
    if !(t_b > t_a) {
        return Err(VacuaError::Parameter(format!("empty span [{t_a}, {t_b}]")));
    }
    if !(init.t >= t_a && init.t <= t_b) {
        return Err(VacuaError::Parameter(format!(
            "initial time {} outside span [{t_a}, {t_b}]",
            init.t
        )));
    }
    if !(tol > 0.0) {
        return Err(VacuaError::Parameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    check_span(eq, t_a, t_b)?;
    let floor = eq.magnitude_floor(span)?;
    let solver = solver_for(tol, floor);
    let rhs = |t: f64, y: &[f64; 4]| -> [f64; 4] {
        match eq.coefficients(t) {
            Ok((w2, p)) => {
                let u = Complex64::new(y[0], y[1]);
                let du = Complex64::new(y[2], y[3]);
                let acc = -w2 * u - du * p;
                [y[2], y[3], acc.re, acc.im]
            }
            Err(_) => [f64::NAN; 4],
        }
    };
    let y0 = init.to_array();
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
    Ok(ModeSolution {
        seed: init,
        backward,
        forward,
    })
}

/// Integrates and samples on a uniform grid of `samples` points over the span.
pub fn integrate_mode<E: ModeEquation + ?Sized>(
    eq: &E,
    init: ModeState,
    span: (f64, f64),
    tol: f64,
    samples: usize,
) -> Result<ModeTrajectory> {
    let sol = solve_mode(eq, init, span, tol)?;
    sol.sample(eq, &uniform_grid(span.0, span.1, samples))
}

/// Applies a Bogolubov transformation sample by sample.
pub fn apply_bogolubov(traj: &ModeTrajectory, sp: SqueezeParams) -> ModeTrajectory {
    let samples = traj
        .samples
        .iter()
        .map(|s| {
            let state = sp.transform(&s.state);
            let defect = wronskian_defect(&state, s.normalization);
            ModeSample::build(state, s.omega_sq, s.friction, s.normalization, defect)
        })
        .collect();
    ModeTrajectory { samples }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

    #[test]
    fn candidate_initial_examples() {
        let s = vacuum_candidate_initial(0.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(s.u, Complex64::new(1.0, 0.0));
        assert_eq!(s.du, Complex64::new(0.0, -0.5));
        assert_eq!(s.wronskian(), I);
        assert_eq!(wronskian_defect(&s, 1.0), 0.0);

        let s = vacuum_candidate_initial(0.0, 2.0, 0.3, 4e-4).unwrap();
        assert_eq!(s.du, Complex64::new(0.3, -1e-4));
        assert!((s.wronskian() - I * 4e-4).norm() < 1e-20);

        assert!(vacuum_candidate_initial(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(vacuum_candidate_initial(0.0, -1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn constant_frequency_candidate_is_the_vacuum() {
        let w: f64 = 2.5;
        let s = vacuum_candidate_initial(0.0, 1.0 / (2.0 * w).sqrt(), 0.0, 1.0).unwrap();
        assert!((s.du - (-I * w * s.u)).norm() < 1e-15);
        let (sig, dsig) = sigma_of_mode(&s, w);
        assert_eq!(sig, 0.0);
        assert!(dsig.abs() < 1e-15);
    }

    #[test]
    fn sigma_of_mode_arithmetic() {
        let s = ModeState::new(0.0, Complex64::new(1.0, 0.0), Complex64::new(0.0, -0.5));
        let (sig, dsig) = sigma_of_mode(&s, 1.0);
        assert_eq!(sig, 0.0);
        assert_eq!(dsig, 0.25 - 1.0);
    }

    #[test]
    fn constant_frequency_vacuum_evolution() {
        let p = FrequencyProfile::Constant { omega: 1.0 };
        let init = ModeState::new(
            0.0,
            Complex64::new(0.5f64.sqrt(), 0.0),
            Complex64::new(0.0, -(0.5f64.sqrt())),
        );
        let traj = integrate_mode(&p, init, (0.0, 20.0), 1e-10, 401).unwrap();
        for s in &traj.samples {
            let exact = Complex64::from_polar(0.5f64.sqrt(), -s.state.t);
            assert!((s.state.u - exact).norm() < 1e-8);
            assert!(s.sigma.abs() < 1e-9 && s.dsigma.abs() < 1e-9);
        }
        assert!(traj.max_defect() < 1e-8);
    }

    #[test]
    fn wronskian_conserved_at_tight_tolerance() {
        let p = FrequencyProfile::Tanh1 { k: 1.0, h: 1.0 };
        let init = adiabatic_seed(&p, 10.0).unwrap();
        let traj = integrate_mode(&p, init, (-10.0, 30.0), 1e-10, 2000).unwrap();
        assert!(traj.max_defect() < 1e-8, "{}", traj.max_defect());
    }

    #[test]
    fn bogolubov_identity_and_wronskian() {
        let p = FrequencyProfile::Tanh1 { k: 1.0, h: 1.0 };
        let traj = integrate_mode(
            &p,
            adiabatic_seed(&p, 10.0).unwrap(),
            (-5.0, 10.0),
            1e-10,
            200,
        )
        .unwrap();
        let same = apply_bogolubov(&traj, SqueezeParams::new(0.0, 1.3).unwrap());
        assert_eq!(same.samples, traj.samples);
        let sq = apply_bogolubov(&traj, SqueezeParams::new(0.7, 2.0).unwrap());
        for (a, b) in traj.samples.iter().zip(&sq.samples) {
            assert!((a.state.wronskian() - b.state.wronskian()).norm() < 1e-12);
        }
    }

    #[test]
    fn integration_rejects_spans_outside_domain() {
        let p = FrequencyProfile::InverseLinear { k: 1.0, h: 0.1 };
        let init = vacuum_candidate_initial(0.0, 0.7, 0.0, 1.0).unwrap();
        assert!(matches!(
            integrate_mode(&p, init, (-6.0, 10.0), 1e-10, 10),
            Err(VacuaError::Domain { .. })
        ));
    }

    #[test]
    fn singular_coefficient_is_reported_with_location() {
        // coefficient undefined past t = 1 while the span claims to reach 2
        let eq = ClosureEquation {
            omega_sq: |t: f64| Complex64::new(if t < 1.0 { 1.0 } else { f64::NAN }, 0.0),
            friction: |_t: f64| 0.0,
        };
        let init = vacuum_candidate_initial(0.0, 0.7, 0.0, 1.0).unwrap();
        match integrate_mode(&eq, init, (0.0, 2.0), 1e-10, 10) {
            Err(VacuaError::Integration { t, .. }) => assert!((t - 1.0).abs() < 0.05, "t = {t}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn uncertainty_identity_holds_for_normalized_states(
            theta in 0.05f64..5.0, dtheta in -3.0f64..3.0, r in 0.0f64..1.5, delta in 0.0f64..6.3
        ) {
            let s = vacuum_candidate_initial(0.0, theta, dtheta, 1.0).unwrap();
            let s = SqueezeParams::new(r, delta).unwrap().transform(&s);
            let lhs = s.uncertainty_product() - s.sigma().powi(2);
            prop_assert!((lhs - 0.25).abs() < 1e-9 * (1.0 + s.uncertainty_product()));
        }

        #[test]
        fn bogolubov_group_property(
            theta in 0.1f64..3.0, dtheta in -2.0f64..2.0, r in 0.0f64..2.0, delta in 0.0f64..6.3
        ) {
            let s = vacuum_candidate_initial(0.0, theta, dtheta, 1.0).unwrap();
            let fwd = SqueezeParams { r, delta };
            let back = SqueezeParams { r: -r, delta };
            let out = back.transform(&fwd.transform(&s));
            prop_assert!((out.u - s.u).norm() < 1e-12 * (1.0 + s.u.norm()) * r.cosh().powi(2));
            prop_assert!((out.du - s.du).norm() < 1e-12 * (1.0 + s.du.norm()) * r.cosh().powi(2));
        }
    }
}
