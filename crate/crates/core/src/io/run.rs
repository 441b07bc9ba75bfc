//! Executes validated configurations: trajectories, searches, sweeps and the invariant suite.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::config::{RunConfig, SolvePath, System};
use super::csv::{fermion_table, mode_table, phi_table, sigma_table, Table};
use crate::cosmo::{phi_adiabatic_seed, theta_mode_from_phi, PhiEquation};
use crate::error::{Result, VacuaError};
use crate::fermion::{integrate_fermion_sigma, FermionEquation};
use crate::mode::{
    adiabatic_seed, solve_mode, ModeEquation, ModeSolution, ModeState, ModeTrajectory,
    SqueezeParams,
};
use crate::ode::uniform_grid;
use crate::profiles::{FrequencyProfile, ScaleFactor};
use crate::search::{
    classify_vacuum, minimize_functional, oscillation_metric, Objective, WindowCandidate,
};
use crate::sigma::{integrate_sigma, sigma_initial, Branch, SigmaState};

/// The mode equation selected by a configuration.
pub enum SystemEquation {
    Profile(FrequencyProfile),
    Fermion(FermionEquation),
    Phi(PhiEquation),
}

impl SystemEquation {
    pub fn from_config(c: &RunConfig) -> Result<Self> {
        Ok(match c.system {
            System::Boson | System::ScalarFrw => SystemEquation::Profile(c.frequency_profile()?),
            System::Fermion => SystemEquation::Fermion(FermionEquation::new(
                c.scale_factor(),
                c.params.m,
                c.params.k,
            )?),
            System::ConstrainedPhi => {
                SystemEquation::Phi(PhiEquation::new(c.scale_factor(), c.params.k)?)
            }
        })
    }

    pub fn as_dyn(&self) -> &dyn ModeEquation {
        match self {
            SystemEquation::Profile(p) => p,
            SystemEquation::Fermion(f) => f,
            SystemEquation::Phi(p) => p,
        }
    }

    /// Default seed at `t`: the adiabatic or instantaneous vacuum of the system.
    pub fn seed(&self, t: f64) -> Result<ModeState> {
        match self {
            SystemEquation::Profile(p) => adiabatic_seed(p, t),
            SystemEquation::Fermion(f) => f.vacuum_seed(t),
            SystemEquation::Phi(p) => phi_adiabatic_seed(p, t),
        }
    }

    /// CSV table of a mode trajectory in the format of this system.
    pub fn table(&self, traj: &ModeTrajectory) -> Result<Table> {
        match self {
            SystemEquation::Profile(_) => Ok(mode_table(traj)),
            SystemEquation::Fermion(f) => fermion_table(f, traj),
            SystemEquation::Phi(p) => phi_table(p, traj),
        }
    }
}

/// Initial state at the anchor: seed or explicit candidate, then the configured squeeze.
pub fn initial_state(c: &RunConfig, eq: &SystemEquation) -> Result<ModeState> {
    let anchor = c.resolved_anchor()?;
    let s = match c.params.theta0 {
        Some(theta) => eq.as_dyn().candidate(anchor, theta, c.params.dtheta0)?,
        None => eq.seed(anchor)?,
    };
    if c.params.r == 0.0 {
        return Ok(s);
    }
    if !eq.as_dyn().real_coefficients() {
        return Err(VacuaError::Config(
            "a squeeze needs an equation with real coefficients".into(),
        ));
    }
    Ok(SqueezeParams::new(c.params.r, c.params.delta)?.transform(&s))
}

fn covering_solution(
    eq: &dyn ModeEquation,
    init: ModeState,
    span: (f64, f64),
    tol: f64,
) -> Result<ModeSolution> {
    solve_mode(eq, init, (span.0.min(init.t), span.1.max(init.t)), tol)
}

/// Turning points of `y`, ignoring steps below 10⁻¹⁰·max|y|.
pub fn turning_points(y: &[f64]) -> usize {
    let floor = 1e-10 * y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut n = 0;
    let mut last = 0.0f64;
    for w in y.windows(2) {
        let d = w[1] - w[0];
        if d.abs() > floor {
            if last != 0.0 && d.signum() != last.signum() {
                n += 1;
            }
            last = d;
        }
    }
    n
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub table: Option<Table>,
    pub results: serde_json::Value,
}

/// Integrates one trajectory over the configured span.
pub fn solve(c: &RunConfig) -> Result<RunOutput> {
    c.validate()?;
    let eq = SystemEquation::from_config(c)?;
    let span = c.resolved_span()?;
    let init = initial_state(c, &eq)?;
    let sol = covering_solution(eq.as_dyn(), init, span, c.tol)?;
    let grid = uniform_grid(span.0, span.1, c.samples);
    match c.path {
        SolvePath::Mode => {
            let traj = sol.sample(eq.as_dyn(), &grid)?;
            let sigma = traj.sigma();
            let results = json!({
                "system": c.system,
                "path": c.path,
                "span": [span.0, span.1],
                "anchor": init.t,
                "samples": traj.len(),
                "steps": sol.step_count(),
                "max_defect": traj.max_defect(),
                "sigma_first": sigma.first(),
                "sigma_last": sigma.last(),
                "sigma_turning_points": turning_points(&sigma),
            });
            Ok(RunOutput {
                table: Some(eq.table(&traj)?),
                results,
            })
        }
        SolvePath::Sigma => {
            let s0 = sol.state_at(span.0)?;
            let traj = match &eq {
                SystemEquation::Profile(p) => {
                    let (sigma, dsigma) =
                        crate::mode::sigma_with(&s0, eq.as_dyn().coefficients(span.0)?.0, 0.0);
                    let init = sigma_initial(p, span.0, sigma, dsigma, Branch::Minus)?;
                    integrate_sigma(p, init, span, c.tol, c.samples)?
                }
                SystemEquation::Fermion(f) => {
                    let init: SigmaState = f.sigma_state(&s0)?;
                    integrate_fermion_sigma(f, init, span, c.tol, c.samples)?
                }
                SystemEquation::Phi(_) => {
                    return Err(VacuaError::Config(
                        "the constrained oscillator has no σ-equation path".into(),
                    ))
                }
            };
            let sigma = traj.sigma();
            let results = json!({
                "system": c.system,
                "path": c.path,
                "span": [span.0, span.1],
                "anchor": init.t,
                "samples": traj.samples.len(),
                "residual_drift": traj.residual_drift(),
                "sigma_first": sigma.first(),
                "sigma_last": sigma.last(),
                "sigma_turning_points": turning_points(&sigma),
            });
            Ok(RunOutput {
                table: Some(sigma_table(&traj)),
                results,
            })
        }
    }
}

/// Minimizes the configured functional and classifies the minimizer.
///
/// The table holds the optimal trajectory over the metric window.
pub fn vacuum(c: &RunConfig) -> Result<RunOutput> {
    c.validate()?;
    let spec = c
        .search
        .as_ref()
        .ok_or_else(|| VacuaError::Config("vacuum needs a search specification".into()))?;
    let eq = SystemEquation::from_config(c)?;
    let base = initial_state(c, &eq)?;
    let (results, optimum) = match &spec.objective {
        Objective::Window { lo, hi, centered } => {
            let window = WindowCandidate {
                side: spec.side,
                lo: *lo,
                hi: *hi,
                centered: *centered,
            };
            let report = classify_vacuum(
                eq.as_dyn(),
                base,
                &[window],
                spec.parametrization,
                &spec.optimizer,
                c.tol,
            )?;
            let w = report.windows.into_iter().next().expect("one window");
            let init = w.result.initial_state();
            (
                serde_json::to_value(&w).map_err(|e| VacuaError::Io(e.to_string()))?,
                init,
            )
        }
        Objective::Ratio { .. } => {
            let r = minimize_functional(eq.as_dyn(), base, spec, c.tol)?;
            let init = r.initial_state();
            (
                serde_json::to_value(&r).map_err(|e| VacuaError::Io(e.to_string()))?,
                init,
            )
        }
    };
    let (lo, hi) = spec.objective.metric_window();
    let sol = covering_solution(eq.as_dyn(), optimum, (lo, hi), c.tol)?;
    let traj = sol.sample(eq.as_dyn(), &uniform_grid(lo, hi, c.samples.max(64)))?;
    let mut results = json!({ "system": c.system, "search": results });
    if let SystemEquation::Phi(p) = &eq {
        let theta = theta_mode_from_phi(p, &traj)?;
        let t: Vec<f64> = theta.iter().map(|s| s.t).collect();
        let sigma: Vec<f64> = theta.iter().map(|s| s.sigma).collect();
        let scale: Vec<f64> = theta.iter().map(|s| s.uncertainty_scale()).collect();
        let induced = oscillation_metric(&t, &sigma, Some(&scale), (lo, hi))?;
        results["induced_oscillation"] =
            serde_json::to_value(induced).map_err(|e| VacuaError::Io(e.to_string()))?;
    }
    Ok(RunOutput {
        table: Some(eq.table(&traj)?),
        results,
    })
}

/// Runs `solve` (or `vacuum` when a search is configured) for every sweep value.
///
/// Points run concurrently; the output keeps the order of the values.
pub fn sweep(c: &RunConfig) -> Result<Vec<(f64, RunOutput)>> {
    c.validate()?;
    let s = c
        .sweep
        .as_ref()
        .ok_or_else(|| VacuaError::Config("sweep needs a parameter and values".into()))?;
    let configs: Vec<(f64, RunConfig)> = s
        .values
        .iter()
        .map(|&v| {
            let mut point = c.clone();
            point.sweep = None;
            point.params.set(&s.param, v)?;
            Ok((v, point))
        })
        .collect::<Result<_>>()?;
    configs
        .par_iter()
        .map(|(v, point)| {
            let out = if point.search.is_some() {
                vacuum(point)?
            } else {
                solve(point)?
            };
            Ok((*v, out))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            pass: value < limit,
        }
    }
}

/// Invariant suite: Wronskian conservation and the uncertainty identity on
/// every built-in profile, σ-path agreement, spinor normalization and the
/// constrained-oscillator Wronskian.
pub fn validation_checks(tol: f64) -> Result<Vec<Check>> {
    let cases = [
        (
            "tanh1",
            FrequencyProfile::Tanh1 { k: 1.0, h: 1.0 },
            (-10.0, 30.0),
            30.0,
        ),
        (
            "tanh2",
            FrequencyProfile::Tanh2 { k: 1.0, h: 1.0 },
            (-40.0, 40.0),
            -40.0,
        ),
        (
            "sqrt-linear",
            FrequencyProfile::SqrtLinear { k: 1.0, h: 1.0 },
            (0.0, 50.0),
            0.0,
        ),
        (
            "inverse-linear",
            FrequencyProfile::InverseLinear { k: 1.0, h: 0.1 },
            (0.0, 500.0),
            0.0,
        ),
        (
            "lorentzian",
            FrequencyProfile::Lorentzian { k: 1.0, h: 1.0 },
            (-50.0, 50.0),
            -50.0,
        ),
    ];
    let mut checks: Vec<Check> = cases
        .par_iter()
        .map(|(name, p, span, anchor)| {
            let sol = solve_mode(p, adiabatic_seed(p, *anchor)?, *span, tol)?;
            let traj = sol.sample(p, &uniform_grid(span.0, span.1, 2000))?;
            let identity = traj
                .samples
                .iter()
                .map(|s| (s.state.uncertainty_product() - s.sigma * s.sigma - 0.25).abs())
                .fold(0.0, f64::max);
            Ok(vec![
                Check::below(format!("{name} wronskian defect"), traj.max_defect(), 1e-8),
                Check::below(format!("{name} uncertainty identity"), identity, 1e-9),
            ])
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let p = FrequencyProfile::Tanh1 { k: 1.0, h: 1.0 };
    let seed = solve_mode(&p, adiabatic_seed(&p, 10.0)?, (-5.0, 10.0), tol)?;
    let s0 = seed.state_at(-5.0)?;
    let (sigma, dsigma) = crate::mode::sigma_of_mode(&s0, p.eval(-5.0)?.omega);
    let straj = integrate_sigma(
        &p,
        sigma_initial(&p, -5.0, sigma, dsigma, Branch::Minus)?,
        (-5.0, 10.0),
        tol,
        1501,
    )?;
    let diff = straj
        .samples
        .iter()
        .map(|s| Ok((s.state.sigma - seed.state_at(s.state.t)?.sigma()).abs()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(Check::below("tanh1 sigma path vs mode path", diff, 1e-6));
    checks.push(Check::below(
        "tanh1 constraint drift",
        straj.residual_drift(),
        1e-8,
    ));

    let fe = FermionEquation::new(ScaleFactor::StepRamp(Default::default()), 1.0 / 16.0, 1.0)?;
    let ftraj = crate::fermion::integrate_fermion_mode(
        &fe,
        fe.vacuum_seed(-60.0)?,
        (-60.0, 20.0),
        tol,
        2000,
    )?;
    checks.push(Check::below(
        "fermion normalization",
        ftraj.max_defect(),
        1e-8,
    ));
    let massless = FermionEquation::new(ScaleFactor::StepRamp(Default::default()), 0.0, 1.0)?;
    let mtraj = crate::fermion::integrate_fermion_mode(
        &massless,
        massless.vacuum_seed(-60.0)?,
        (-60.0, 20.0),
        tol,
        2000,
    )?;
    let msig = mtraj
        .samples
        .iter()
        .map(|s| s.state.sigma().abs())
        .fold(0.0, f64::max);
    checks.push(Check::below("massless fermion sigma", msig, 1e-10));

    let phi = PhiEquation::new(ScaleFactor::SinhGamma { gamma: 0.02 }, 1.0)?;
    let ptraj = crate::cosmo::integrate_phi_mode(
        &phi,
        phi_adiabatic_seed(&phi, 20.0)?,
        (20.0, 400.0),
        tol,
        2000,
    )?;
    checks.push(Check::below(
        "constrained oscillator W/(iX)",
        ptraj.max_defect(),
        1e-8,
    ));
    Ok(checks)
}
