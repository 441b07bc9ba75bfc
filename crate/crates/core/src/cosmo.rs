//! Cosmological oscillators: the scalar field on a prescribed FRW background,
//! and the metric perturbation Φ with its gauge map to the field perturbation.
//!
//! The Φ mode obeys Φ̈ − Φ̇ d/dt ln X + QΦ = 0 with X = ȧ²/a³ − ä/a²,
//! Y = ȧ²/a² − ä/a and Q = k²/a² − 2Y − (ȧ/a)Ẏ/Y, so its Wronskian is iX(t).

use num_complex::Complex64;

use crate::error::{Result, VacuaError};
use crate::mode::{integrate_mode, ModeEquation, ModeState, ModeTrajectory};
use crate::ode::uniform_grid;
use crate::profiles::{FrequencyProfile, FrwSign, ScaleFactor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Background {
    pub t: f64,
    pub a: f64,
    pub da: f64,
    pub dda: f64,
    pub ddda: f64,
    /// ȧ/a.
    pub hubble: f64,
    /// φ̇ = √(Y/3).
    pub dphi: f64,
    pub x: f64,
    pub dx: f64,
    pub y: f64,
    pub dy: f64,
    /// X vanishes identically to rounding, as for an exponential a(t).
    pub degenerate: bool,
}

/// Background combinations at `t`; closed forms without cancellation for sinh.
pub fn background_quantities(sf: &ScaleFactor, t: f64) -> Result<Background> {
    let v = sf.eval(t)?;
    let (a, da, dda, ddda) = (v.a, v.d1, v.d2, v.d3);
    if !(a > 0.0) {
        return Err(VacuaError::Regime(format!(
            "scale factor {a} is not positive at t = {t}"
        )));
    }
    let (x, dx, y, dy, degenerate) = match *sf {
        ScaleFactor::SinhGamma { gamma } => {
            let (s, c) = ((gamma * t).sinh(), (gamma * t).cosh());
            let g2 = gamma * gamma;
            (
                g2 / (s * s * s),
                -3.0 * g2 * gamma * c / (s * s * s * s),
                g2 / (s * s),
                -2.0 * g2 * gamma * c / (s * s * s),
                false,
            )
        }
        _ => {
            let h = da / a;
            let x = da * da / (a * a * a) - dda / (a * a);
            let dx = 4.0 * da * dda / (a * a * a)
                - 3.0 * da * da * da / (a * a * a * a)
                - ddda / (a * a);
            let y = h * h - dda / a;
            let dy = 3.0 * da * dda / (a * a) - 2.0 * h * h * h - ddda / a;
            let size = (da * da / (a * a * a)).abs().max((dda / (a * a)).abs());
            (x, dx, y, dy, x.abs() <= 1e-12 * size)
        }
    };
    if y < 0.0 {
        return Err(VacuaError::Regime(format!(
            "background field velocity is imaginary at t = {t} (radicand {y:e})"
        )));
    }
    Ok(Background {
        t,
        a,
        da,
        dda,
        ddda,
        hubble: da / a,
        dphi: (y / 3.0).sqrt(),
        x,
        dx,
        y,
        dy,
        degenerate,
    })
}

/// Φ-mode equation with friction −Ẋ/X and normalization X(t).
#[derive(Debug, Clone, PartialEq)]
pub struct PhiEquation {
    pub scale: ScaleFactor,
    pub k: f64,
}

impl PhiEquation {
    pub fn new(scale: ScaleFactor, k: f64) -> Result<Self> {
        scale.validate()?;
        if !(k > 0.0) || !k.is_finite() {
            return Err(VacuaError::Parameter(format!(
                "k must be positive, got {k}"
            )));
        }
        Ok(Self { scale, k })
    }

    pub fn background(&self, t: f64) -> Result<Background> {
        let bg = background_quantities(&self.scale, t)?;
        if bg.degenerate || !(bg.x > 0.0) || !(bg.y > 0.0) {
            return Err(VacuaError::Singularity {
                t,
                reason: format!(
                    "X = {:e}, Y = {:e}: the friction logarithms are undefined",
                    bg.x, bg.y
                ),
            });
        }
        Ok(bg)
    }

    /// (Q, p) of Φ̈ + pΦ̇ + QΦ = 0.
    pub fn q_and_friction(&self, bg: &Background) -> (f64, f64) {
        let q = self.k * self.k / (bg.a * bg.a) - 2.0 * bg.y - bg.hubble * bg.dy / bg.y;
        (q, -bg.dx / bg.x)
    }
}

impl ModeEquation for PhiEquation {
    fn label(&self) -> String {
        format!("metric perturbation on {}", self.scale.name())
    }

    fn domain(&self) -> (f64, f64) {
        self.scale.domain()
    }

    fn coefficients(&self, t: f64) -> Result<(Complex64, f64)> {
        let bg = self.background(t)?;
        let (q, p) = self.q_and_friction(&bg);
        Ok((Complex64::new(q, 0.0), p))
    }

    fn normalization(&self, t: f64) -> Result<f64> {
        Ok(self.background(t)?.x)
    }

    fn defect(&self, s: &ModeState) -> Result<f64> {
        let x = self.normalization(s.t)?;
        Ok((s.wronskian() / Complex64::new(0.0, x) - 1.0).norm())
    }

    fn magnitude_floor(&self, span: (f64, f64)) -> Result<f64> {
        let mut lo = f64::INFINITY;
        for t in uniform_grid(span.0, span.1, 257) {
            let bg = self.background(t)?;
            let (q, _) = self.q_and_friction(&bg);
            lo = lo.min((bg.x / (2.0 * q.abs().sqrt().max(1e-300))).sqrt());
        }
        Ok(lo)
    }
}

/// Vacuum candidate u(t₀) = α, u̇(t₀) = β − iX(t₀)/(2α).
pub fn phi_candidate(eq: &PhiEquation, t0: f64, alpha: f64, beta: f64) -> Result<ModeState> {
    eq.candidate(t0, alpha, beta)
}

/// Adiabatic-like seed: α = √(X/(2√Q)), β = 0.
pub fn phi_adiabatic_seed(eq: &PhiEquation, t0: f64) -> Result<ModeState> {
    let bg = eq.background(t0)?;
    let (q, _) = eq.q_and_friction(&bg);
    if !(q > 0.0) {
        return Err(VacuaError::Regime(format!(
            "Q = {q} is not positive at t = {t0}"
        )));
    }
    phi_candidate(eq, t0, (bg.x / (2.0 * q.sqrt())).sqrt(), 0.0)
}

/// Integrates the Φ mode; `defect` of each sample is |W/(iX) − 1|.
pub fn integrate_phi_mode(
    eq: &PhiEquation,
    init: ModeState,
    span: (f64, f64),
    tol: f64,
    samples: usize,
) -> Result<ModeTrajectory> {
    integrate_mode(eq, init, span, tol, samples)
}

/// Field-perturbation mode U = (u̇ + (ȧ/a)u)/(3φ̇) at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaSample {
    pub t: f64,
    pub u: Complex64,
    pub du: Complex64,
    /// Re(U̇U*).
    pub sigma: f64,
}

impl ThetaSample {
    pub fn uncertainty_scale(&self) -> f64 {
        (self.u.norm_sqr() * self.du.norm_sqr()).sqrt()
    }
}

/// U and U̇ from a Φ state, eliminating Φ̈ through the mode equation.
pub fn theta_mode_at(eq: &PhiEquation, s: &ModeState) -> Result<ThetaSample> {
    let bg = eq.background(s.t)?;
    if !(bg.dphi > 0.0) {
        return Err(VacuaError::Singularity {
            t: s.t,
            reason: "background field velocity vanishes".into(),
        });
    }
    let (q, p) = eq.q_and_friction(&bg);
    let h = bg.hubble;
    let dh = -bg.y;
    let acc = -s.du * p - s.u * q;
    let norm = 3.0 * bg.dphi;
    let u = (s.du + s.u * h) / norm;
    let du = (acc + s.u * dh + s.du * h) / norm - u * (bg.dy / (2.0 * bg.y));
    Ok(ThetaSample {
        t: s.t,
        u,
        du,
        sigma: (du * u.conj()).re,
    })
}

pub fn theta_mode_from_phi(eq: &PhiEquation, traj: &ModeTrajectory) -> Result<Vec<ThetaSample>> {
    traj.samples
        .iter()
        .map(|s| theta_mode_at(eq, &s.state))
        .collect()
}

/// Scalar-field mode u″ + (k² + m²a² ± a″/a)u = 0 on a prescribed background.
pub fn scalar_frw_profile(
    scale: ScaleFactor,
    k: f64,
    m: f64,
    sign: FrwSign,
) -> Result<FrequencyProfile> {
    let p = FrequencyProfile::ScalarFrw { k, m, scale, sign };
    p.validate()?;
    Ok(p)
}

#[allow(clippy::too_many_arguments)]
pub fn scalar_frw_mode(
    scale: ScaleFactor,
    k: f64,
    m: f64,
    sign: FrwSign,
    init: ModeState,
    span: (f64, f64),
    tol: f64,
    samples: usize,
) -> Result<ModeTrajectory> {
    let p = scalar_frw_profile(scale, k, m, sign)?;
    integrate_mode(&p, init, span, tol, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode::wronskian_defect;
    use crate::profiles::StepRamp;

    const GAMMA: f64 = 1.0 / 50.0;

    fn sinh() -> ScaleFactor {
        ScaleFactor::SinhGamma { gamma: GAMMA }
    }

    #[test]
    fn sinh_background_at_unit_sinh() {
        let t = 50.0 * 1f64.asinh();
        let bg = background_quantities(&sinh(), t).unwrap();
        assert!((bg.x - GAMMA * GAMMA).abs() < 1e-15);
        assert!((bg.dphi - GAMMA / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sinh_closed_forms_match_generic_formulas() {
        // the same combinations through the generic path of an equivalent table-free factor
        for t in uniform_grid(10.0, 100.0, 10) {
            let bg = background_quantities(&sinh(), t).unwrap();
            let (a, da, dda, ddda) = (bg.a, bg.da, bg.dda, bg.ddda);
            let x = da * da / a.powi(3) - dda / (a * a);
            let y = (da / a).powi(2) - dda / a;
            let dx = 4.0 * da * dda / a.powi(3) - 3.0 * da.powi(3) / a.powi(4) - ddda / (a * a);
            let dy = 3.0 * da * dda / (a * a) - 2.0 * (da / a).powi(3) - ddda / a;
            assert!((bg.x - x).abs() < 1e-9 * x);
            assert!((bg.y - y).abs() < 1e-9 * y);
            assert!((bg.dx - dx).abs() < 1e-8 * dx.abs());
            assert!((bg.dy - dy).abs() < 1e-8 * dy.abs());
            let s = (GAMMA * t).sinh();
            assert!((bg.y - GAMMA * GAMMA / (s * s)).abs() < 1e-15);
        }
    }

    #[test]
    fn exponential_background_is_degenerate() {
        let bg = background_quantities(&ScaleFactor::Exponential { gamma: 0.3 }, 1.0).unwrap();
        assert!(bg.degenerate);
        let eq = PhiEquation::new(ScaleFactor::Exponential { gamma: 0.3 }, 1.0).unwrap();
        assert!(matches!(
            eq.coefficients(1.0),
            Err(VacuaError::Singularity { .. })
        ));
    }

    #[test]
    fn sinh_mode_coefficients() {
        let eq = PhiEquation::new(sinh(), 1.0).unwrap();
        for t in [10.0, 40.0, 200.0] {
            let (w2, p) = eq.coefficients(t).unwrap();
            let (s, c) = ((GAMMA * t).sinh(), (GAMMA * t).cosh());
            assert!((w2.re - (1.0 / (s * s) + 2.0 * GAMMA * GAMMA)).abs() < 1e-12 * w2.re);
            assert!((p - 3.0 * GAMMA * c / s).abs() < 1e-12 * p);
        }
    }

    #[test]
    fn candidate_has_wronskian_ix() {
        let eq = PhiEquation::new(sinh(), 1.0).unwrap();
        let s = phi_candidate(&eq, 20.0, 0.03, 0.01).unwrap();
        let x = eq.normalization(20.0).unwrap();
        assert!(wronskian_defect(&s, x) < 1e-18);
    }

    #[test]
    fn wronskian_follows_x() {
        let eq = PhiEquation::new(sinh(), 1.0).unwrap();
        let init = phi_adiabatic_seed(&eq, 20.0).unwrap();
        let traj = integrate_phi_mode(&eq, init, (20.0, 400.0), 1e-10, 2001).unwrap();
        assert!(traj.max_defect() < 1e-8, "{:e}", traj.max_defect());
    }

    #[test]
    fn zero_mode_maps_to_zero() {
        let eq = PhiEquation::new(sinh(), 1.0).unwrap();
        let s = ModeState::new(30.0, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        let th = theta_mode_at(&eq, &s).unwrap();
        assert_eq!(
            (th.u, th.du, th.sigma),
            (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 0.0)
        );
    }

    #[test]
    fn theta_derivative_matches_finite_difference() {
        let eq = PhiEquation::new(sinh(), 1.0).unwrap();
        let sol = crate::mode::solve_mode(
            &eq,
            phi_adiabatic_seed(&eq, 20.0).unwrap(),
            (20.0, 60.0),
            1e-12,
        )
        .unwrap();
        let h = 1e-4;
        let at = |t: f64| theta_mode_at(&eq, &sol.state_at(t).unwrap()).unwrap();
        let t = 35.0;
        let fd = (at(t + h).u - at(t - h).u) / (2.0 * h);
        assert!(
            (fd - at(t).du).norm() < 1e-7 * at(t).du.norm(),
            "{fd} vs {}",
            at(t).du
        );
    }

    #[test]
    fn flat_space_massless_scalar() {
        let k = 0.8f64;
        let seed = ModeState::new(
            0.0,
            Complex64::new(1.0 / (2.0 * k).sqrt(), 0.0),
            Complex64::new(0.0, -(k / 2.0f64).sqrt()),
        );
        let traj = scalar_frw_mode(
            ScaleFactor::Constant { value: 1.0 },
            k,
            0.0,
            FrwSign::Plus,
            seed,
            (0.0, 20.0),
            1e-11,
            201,
        )
        .unwrap();
        assert!(traj.samples.iter().all(|s| s.sigma.abs() < 1e-9));
    }

    #[test]
    fn ramp_scalar_conserves_wronskian() {
        let p = scalar_frw_profile(
            ScaleFactor::StepRamp(StepRamp::default()),
            1.0,
            1.0 / 16.0,
            FrwSign::Plus,
        )
        .unwrap();
        let seed = crate::mode::adiabatic_seed(&p, 20.0).unwrap();
        let traj = integrate_mode(&p, seed, (-40.0, 20.0), 1e-10, 3001).unwrap();
        assert!(traj.max_defect() < 1e-8, "{:e}", traj.max_defect());
    }
}
