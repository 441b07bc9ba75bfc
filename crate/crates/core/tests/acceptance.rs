use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use vacua::cosmo::{
    integrate_phi_mode, phi_adiabatic_seed, scalar_frw_profile, theta_mode_from_phi, PhiEquation,
};
use vacua::fermion::{
    fermion_sigma_with_fallback, integrate_fermion_mode, solve_fermion_mode, FermionEquation,
};
use vacua::mode::{adiabatic_seed, solve_mode, ModeState, SqueezeParams};
use vacua::ode::uniform_grid;
use vacua::optimize::OptimizerSettings;
use vacua::oracles::{exact_mode, sigma_exact_lorentzian, OracleId, OracleParams};
use vacua::profiles::{FrequencyProfile, FrwSign, ScaleFactor, StepRamp};
use vacua::search::{
    classify_vacuum, default_t_list, minimize_functional, oscillation_metric, Classification,
    Objective, Parametrization, RatioFunctional, SearchSpec, WindowCandidate, WindowSide,
    VACUUM_THRESHOLD,
};
use vacua::sigma::{integrate_sigma, sigma_initial, Branch};

const TOL: f64 = 1e-10;

fn report(n: usize, name: &str, pass: bool, detail: String) {
    println!(
        "criterion {n:>2} {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} {name} failed: {detail}");
}

fn max_by<T>(items: impl IntoIterator<Item = T>, f: impl Fn(T) -> f64) -> f64 {
    items.into_iter().map(f).fold(0.0, f64::max)
}

fn sci(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.1e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn builtin_cases() -> Vec<(&'static str, FrequencyProfile, (f64, f64), f64)> {
    vec![
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
            "sqrt_linear",
            FrequencyProfile::SqrtLinear { k: 1.0, h: 1.0 },
            (0.0, 50.0),
            0.0,
        ),
        (
            "inverse_linear",
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
    ]
}

fn window_spec(lo: f64, hi: f64, side: WindowSide) -> SearchSpec {
    SearchSpec {
        parametrization: Parametrization::ThetaInit,
        objective: Objective::Window {
            lo,
            hi,
            centered: false,
        },
        side,
        optimizer: OptimizerSettings::default(),
        samples: None,
    }
}

fn ramp() -> ScaleFactor {
    ScaleFactor::StepRamp(StepRamp::default())
}

const RAMP_WINDOWS: [(f64, f64, WindowSide); 3] = [
    (-60.0, -30.0, WindowSide::Early),
    (-18.0, -2.0, WindowSide::Central),
    (5.0, 20.0, WindowSide::Late),
];

#[test]
fn c01_wronskian_conservation() {
    let mut worst = (0.0f64, Duration::ZERO);
    let mut detail = Vec::new();
    for (name, p, span, anchor) in builtin_cases() {
        let start = Instant::now();
        let sol = solve_mode(&p, adiabatic_seed(&p, anchor).unwrap(), span, TOL).unwrap();
        let traj = sol.sample(&p, &uniform_grid(span.0, span.1, 2000)).unwrap();
        let elapsed = start.elapsed();
        let defect = traj.max_defect();
        worst = (worst.0.max(defect), worst.1.max(elapsed));
        detail.push(format!(
            "{name} {defect:.1e} in {:.3}s",
            elapsed.as_secs_f64()
        ));
    }
    let pass = worst.0 < 1e-8 && worst.1 < Duration::from_secs(1);
    report(1, "wronskian conservation", pass, detail.join(", "));
}

#[test]
fn c02_uncertainty_identity() {
    let mut detail = Vec::new();
    let mut worst = 0.0f64;
    for (name, p, span, anchor) in builtin_cases() {
        let sol = solve_mode(&p, adiabatic_seed(&p, anchor).unwrap(), span, TOL).unwrap();
        let traj = sol.sample(&p, &uniform_grid(span.0, span.1, 2000)).unwrap();
        let err = max_by(&traj.samples, |s| {
            (s.state.uncertainty_product() - s.sigma * s.sigma - 0.25).abs()
        });
        worst = worst.max(err);
        detail.push(format!("{name} {err:.1e}"));
    }
    report(2, "uncertainty identity", worst < 1e-9, detail.join(", "));
}

#[test]
fn c03_sigma_path_matches_mode_path() {
    let p = FrequencyProfile::Tanh1 { k: 1.0, h: 1.0 };
    let span = (-5.0, 10.0);
    let sol = solve_mode(&p, adiabatic_seed(&p, 10.0).unwrap(), span, TOL).unwrap();
    let s0 = sol.state_at(span.0).unwrap();
    let (sigma, dsigma) = vacua::mode::sigma_of_mode(&s0, p.eval(span.0).unwrap().omega);
    let init = sigma_initial(&p, span.0, sigma, dsigma, Branch::Minus).unwrap();
    let traj = integrate_sigma(&p, init, span, TOL, 1501).unwrap();
    let diff = max_by(&traj.samples, |s| {
        (s.state.sigma - sol.state_at(s.state.t).unwrap().sigma()).abs()
    });
    let drift = traj.residual_drift();
    report(
        3,
        "sigma ODE vs mode ODE",
        diff < 1e-6 && drift < 1e-8,
        format!("max|dsigma| {diff:.1e}, constraint drift {drift:.1e}"),
    );
}

#[test]
fn c04_tanh1_vacuum_recovery() {
    let start = Instant::now();
    let p = FrequencyProfile::Tanh1 { k: 1.0, h: 1.0 };
    let base = adiabatic_seed(&p, 10.0).unwrap();
    let r0 = 2f64.ln();
    let t_list = default_t_list(2f64.sqrt());
    let spec = SearchSpec {
        parametrization: Parametrization::SqueezeRDelta,
        objective: Objective::Ratio {
            t0: -10.0,
            t_list: t_list.clone(),
            r0,
            delta0: 0.0,
        },
        side: WindowSide::Late,
        optimizer: OptimizerSettings::default(),
        samples: None,
    };
    let res = minimize_functional(&p, base, &spec, TOL).unwrap();
    let functional = RatioFunctional::new(
        &p,
        base,
        SqueezeParams::new(r0, 0.0).unwrap(),
        -10.0,
        &t_list,
        TOL,
    )
    .unwrap();
    let mut worst_rel = 0.0f64;
    for r in [0.25, 0.5, 1.0] {
        let z = functional
            .evaluate(SqueezeParams::new(r, 0.0).unwrap())
            .unwrap()
            .extrapolated;
        let expected = (2.0 * r).sinh().powi(2) / (2.0 * r0).sinh().powi(2);
        worst_rel = worst_rel.max((z / expected - 1.0).abs());
    }
    let elapsed = start.elapsed();
    let r_star = res.params[0];
    let pass = r_star <= 1e-3
        && res.z_min <= 1e-4
        && worst_rel < 0.02
        && elapsed < Duration::from_secs(30);
    report(
        4,
        "tanh1 vacuum recovery",
        pass,
        format!(
            "r* {r_star:.1e}, Z* {:.1e}, worst Z(r) error {:.2}%, {:.2}s",
            res.z_min,
            100.0 * worst_rel,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn c05_inverse_linear_constant() {
    let (k, h) = (1.0, 0.1);
    let p = FrequencyProfile::InverseLinear { k, h };
    let op = OracleParams { k, h };
    let t_end = 100.0 / (2.0 * h);
    let sol = solve_mode(
        &p,
        exact_mode(OracleId::InverseLinearExact, op, 0.0).unwrap(),
        (0.0, t_end),
        TOL,
    )
    .unwrap();
    let mut mode_err = 0.0f64;
    for t in uniform_grid(0.0, t_end, 2001) {
        let got = sol.state_at(t).unwrap();
        let want = exact_mode(OracleId::InverseLinearExact, op, t).unwrap();
        mode_err = mode_err.max((got.u - want.u).norm() / want.u.norm());
        mode_err = mode_err.max((got.du - want.du).norm() / want.du.norm());
    }
    let sigma = sol.state_at(t_end).unwrap().sigma();
    let expected = h / (2.0 * (k * k - h * h).sqrt());
    let pass =
        (sigma - expected).abs() < 1e-3 && (expected - 0.050252).abs() < 1e-6 && mode_err < 1e-8;
    report(
        5,
        "inverse-linear late sigma",
        pass,
        format!(
            "sigma(2Ht=100) {sigma:.6} vs {expected:.6}, exact-mode relative error {mode_err:.1e}"
        ),
    );
}

#[test]
fn c06_lorentzian() {
    let (k, h) = (1.0, 1.0);
    let p = FrequencyProfile::Lorentzian { k, h };
    let op = OracleParams { k, h };
    let span = (-50.0, 50.0);
    let base = exact_mode(OracleId::LorentzianExact, op, span.0).unwrap();
    let mut sigma_err = 0.0f64;
    for r in [0.0, 0.3] {
        let sp = SqueezeParams::new(r, 0.0).unwrap();
        let sol = solve_mode(&p, sp.transform(&base), span, TOL).unwrap();
        for t in uniform_grid(span.0, span.1, 2001) {
            let got = sol.state_at(t).unwrap().sigma();
            sigma_err = sigma_err.max((got - sigma_exact_lorentzian(sp, k, h, t)).abs());
        }
    }

    let seed = exact_mode(OracleId::LorentzianExact, op, -3.0).unwrap();
    let classify = |side, lo, hi, centered| {
        let w = WindowCandidate {
            side,
            lo,
            hi,
            centered,
        };
        let rep = classify_vacuum(
            &p,
            seed,
            &[w],
            Parametrization::ThetaInit,
            &OptimizerSettings::default(),
            TOL,
        )
        .unwrap();
        rep.windows[0].classification
    };
    let late = classify(WindowSide::Late, 20.0, 60.0, false);
    let central = classify(WindowSide::Central, -3.0, 3.0, true);
    let pass = sigma_err < 1e-6
        && late == Classification::NoVacuum
        && central == Classification::ApproximateVacuum;
    report(
        6,
        "lorentzian closed form and classification",
        pass,
        format!(
            "max sigma error {sigma_err:.1e}, late [20,60] {late:?}, central [-3,3] {central:?}"
        ),
    );
}

#[test]
fn c07_tanh2_two_vacua() {
    let p = FrequencyProfile::Tanh2 { k: 1.0, h: 1.0 };
    let windows = [
        WindowCandidate {
            side: WindowSide::Early,
            lo: -40.0,
            hi: -5.0,
            centered: false,
        },
        WindowCandidate {
            side: WindowSide::Late,
            lo: 5.0,
            hi: 40.0,
            centered: false,
        },
    ];
    let rep = classify_vacuum(
        &p,
        adiabatic_seed(&p, 0.0).unwrap(),
        &windows,
        Parametrization::ThetaInit,
        &OptimizerSettings::default(),
        TOL,
    )
    .unwrap();
    let (a, b) = (&rep.windows[0], &rep.windows[1]);
    let pass = a.passes_in == [true, false]
        && b.passes_in == [false, true]
        && a.classification == Classification::InVacuum
        && b.classification == Classification::OutVacuum
        && !rep.global_vacuum;
    report(
        7,
        "tanh2 in and out vacua",
        pass,
        format!(
            "in {:?} metric {:.1e} passes {:?}; out {:?} metric {:.1e} passes {:?}",
            a.classification,
            a.result.oscillation.metric,
            a.passes_in,
            b.classification,
            b.result.oscillation.metric,
            b.passes_in
        ),
    );
}

#[test]
fn c08_scalar_frw_windows() {
    let start = Instant::now();
    let p = scalar_frw_profile(ramp(), 1.0, 1.0 / 16.0, FrwSign::Plus).unwrap();
    let mut metrics = Vec::new();
    for (lo, hi, side) in RAMP_WINDOWS {
        let res = minimize_functional(
            &p,
            adiabatic_seed(&p, lo).unwrap(),
            &window_spec(lo, hi, side),
            TOL,
        )
        .unwrap();
        metrics.push(res.oscillation.metric);
    }
    let elapsed = start.elapsed();
    let pass = metrics.iter().all(|m| *m < VACUUM_THRESHOLD) && elapsed < Duration::from_secs(120);
    report(
        8,
        "scalar FRW windowed vacua",
        pass,
        format!("metrics [{}], {:.2}s", sci(&metrics), elapsed.as_secs_f64()),
    );
}

#[test]
fn c09_fermion() {
    let eq = FermionEquation::new(ramp(), 1.0 / 16.0, 1.0).unwrap();
    let span = (-60.0, 20.0);
    let seed = eq.vacuum_seed(span.0).unwrap();
    let norm = integrate_fermion_mode(&eq, seed, span, TOL, 4000)
        .unwrap()
        .max_defect();

    let sol = solve_fermion_mode(&eq, seed, span, TOL).unwrap();
    let path = fermion_sigma_with_fallback(&eq, seed, span, TOL, 2001).unwrap();
    let path_err = max_by(&path, |(t, s, _)| {
        (s - sol.state_at(*t).unwrap().sigma()).abs()
    });

    let mut metrics = Vec::new();
    for (lo, hi, side) in RAMP_WINDOWS {
        let res = minimize_functional(
            &eq,
            eq.vacuum_seed(lo).unwrap(),
            &window_spec(lo, hi, side),
            TOL,
        )
        .unwrap();
        metrics.push(res.oscillation.metric);
    }

    let massless = FermionEquation::new(ramp(), 0.0, 1.0).unwrap();
    let mtraj = integrate_fermion_mode(
        &massless,
        massless.vacuum_seed(span.0).unwrap(),
        span,
        TOL,
        2000,
    )
    .unwrap();
    let massless_sigma = max_by(&mtraj.samples, |s| s.state.sigma().abs());

    let pass = norm < 1e-8
        && path_err < 1e-6
        && metrics.iter().all(|m| *m < VACUUM_THRESHOLD)
        && massless_sigma < 1e-10;
    report(
        9,
        "fermion",
        pass,
        format!(
            "normalization {norm:.1e}, sigma paths {path_err:.1e}, window metrics [{}], massless sigma {massless_sigma:.1e}",
            sci(&metrics)
        ),
    );
}

fn theta_metric(eq: &PhiEquation, init: ModeState, window: (f64, f64)) -> (f64, f64) {
    let traj = integrate_phi_mode(eq, init, window, TOL, 8001).unwrap();
    let m1 = oscillation_metric(
        &traj.times(),
        &traj.sigma(),
        Some(&traj.uncertainty_scale()),
        window,
    )
    .unwrap();
    let theta = theta_mode_from_phi(eq, &traj).unwrap();
    let t: Vec<f64> = theta.iter().map(|s| s.t).collect();
    let sigma: Vec<f64> = theta.iter().map(|s| s.sigma).collect();
    let scale: Vec<f64> = theta.iter().map(|s| s.uncertainty_scale()).collect();
    let m2 = oscillation_metric(&t, &sigma, Some(&scale), window).unwrap();
    (m1.metric, m2.metric)
}

#[test]
fn c10_constrained_oscillator() {
    let start = Instant::now();
    let eq = PhiEquation::new(ScaleFactor::SinhGamma { gamma: 0.02 }, 1.0).unwrap();
    let wronskian = integrate_phi_mode(
        &eq,
        phi_adiabatic_seed(&eq, 20.0).unwrap(),
        (20.0, 400.0),
        TOL,
        4000,
    )
    .unwrap()
    .max_defect();
    let (lo, hi) = (20.0, 120.0);
    let res = minimize_functional(
        &eq,
        phi_adiabatic_seed(&eq, lo).unwrap(),
        &window_spec(lo, hi, WindowSide::Late),
        TOL,
    )
    .unwrap();
    let (m1, m2) = theta_metric(&eq, res.initial_state(), (lo, hi));
    let elapsed = start.elapsed();
    let pass = wronskian < 1e-8
        && m1 < VACUUM_THRESHOLD
        && m2 < VACUUM_THRESHOLD
        && elapsed < Duration::from_secs(60);
    report(
        10,
        "constrained oscillator",
        pass,
        format!(
            "W/(iX) defect {wronskian:.1e}, sigma1 {m1:.1e}, sigma2 {m2:.1e}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    );
}

fn vacua(dir: &Path, args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_vacua"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "vacua {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn content_hash(path: &Path) -> String {
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["content_sha256"].as_str().unwrap().to_string()
}

fn run_once() -> Vec<(String, Vec<u8>)> {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    vacua(
        d,
        &[
            "solve",
            "--profile",
            "tanh1",
            "--samples",
            "500",
            "--out",
            "solve.csv",
            "--manifest",
            "solve.json",
        ],
    );
    vacua(
        d,
        &[
            "vacuum",
            "--profile",
            "tanh2",
            "--window",
            "5",
            "40",
            "--csv",
            "vacuum.csv",
            "--out",
            "vacuum.json",
        ],
    );
    vacua(
        d,
        &[
            "sweep",
            "--profile",
            "tanh2",
            "--t0",
            "-10",
            "--t1",
            "10",
            "--samples",
            "200",
            "--param",
            "k",
            "--values",
            "0.5,1,2",
            "--out",
            "sweep",
        ],
    );
    let mut out = Vec::new();
    for f in [
        "solve.csv",
        "vacuum.csv",
        "sweep/point_000.csv",
        "sweep/point_002.csv",
    ] {
        out.push((f.to_string(), std::fs::read(d.join(f)).unwrap()));
    }
    for f in ["solve.json", "vacuum.json", "sweep/manifest.json"] {
        out.push((f.to_string(), content_hash(&d.join(f)).into_bytes()));
    }
    out
}

#[test]
fn c11_determinism() {
    let first = run_once();
    let second = run_once();
    let differing: Vec<&str> = first
        .iter()
        .zip(&second)
        .filter(|(a, b)| a != b)
        .map(|(a, _)| a.0.as_str())
        .collect();
    report(
        11,
        "determinism",
        differing.is_empty() && first.len() == 7,
        format!(
            "{} artifacts compared, differing {differing:?}",
            first.len()
        ),
    );
}
