//! Command-line surface: `solve`, `vacuum`, `sweep`, `plot` and `validate`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::json;

use crate::error::{Result, VacuaError};
use crate::io::config::{ProfileId, RunConfig, ScaleFactorId, SolvePath, SweepSpec, System};
use crate::io::csv::Table;
use crate::io::manifest::{artifact, Artifact, RunManifest};
use crate::io::run::{self, SystemEquation};
use crate::io::svg::{self, Series};
use crate::optimize::OptimizerSettings;
use crate::profiles::FrwSign;
use crate::search::{default_t_list, Objective, Parametrization, SearchSpec, WindowSide};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Parses an enum through its serde name; dashes and underscores are interchangeable.
fn parse_name<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
        .map_err(|_| format!("unknown value '{s}'"))
}

fn parse_space(s: &str) -> std::result::Result<Parametrization, String> {
    match s {
        "theta" => Ok(Parametrization::ThetaInit),
        "sigma" => Ok(Parametrization::SigmaInit),
        "squeeze" => Ok(Parametrization::SqueezeRDelta),
        other => parse_name(other),
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "vacua",
    version,
    about = "Vacuum states of driven oscillators by functional minimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one trajectory and write it as CSV.
    #[command(allow_negative_numbers = true)]
    Solve(SolveArgs),
    /// Minimize the vacuum functional and write a run manifest.
    #[command(allow_negative_numbers = true)]
    Vacuum(VacuumArgs),
    /// Repeat solve or vacuum over a grid of one parameter.
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Render CSV columns as an SVG line chart.
    Plot(PlotArgs),
    /// Run the invariant suite.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Default)]
struct SystemArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_name::<System>)]
    system: Option<System>,
    #[arg(long, value_parser = parse_name::<ProfileId>)]
    profile: Option<ProfileId>,
    #[arg(long = "custom-profile")]
    custom_profile: Option<PathBuf>,
    #[arg(long = "scale-factor", value_parser = parse_name::<ScaleFactorId>)]
    scale_factor: Option<ScaleFactorId>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long = "H")]
    h: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    theta0: Option<f64>,
    #[arg(long)]
    dtheta0: Option<f64>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    t1: Option<f64>,
    #[arg(long)]
    anchor: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long = "frw-sign", value_parser = parse_name::<FrwSign>)]
    frw_sign: Option<FrwSign>,
}

#[derive(Args, Debug, Default)]
struct SearchArgs {
    /// Functional window [lo, hi].
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    window: Option<Vec<f64>>,
    /// Tail-ratio functional starting at this time instead of a window.
    #[arg(long = "ratio-t0")]
    ratio_t0: Option<f64>,
    /// Reference squeeze of the ratio functional.
    #[arg(long, default_value_t = std::f64::consts::LN_2)]
    r0: f64,
    #[arg(long, default_value_t = 0.0)]
    delta0: f64,
    /// theta, sigma or squeeze.
    #[arg(long, value_parser = parse_space)]
    space: Option<Parametrization>,
    /// early, late or central; inferred from the window sign when absent.
    #[arg(long, value_parser = parse_name::<WindowSide>)]
    side: Option<WindowSide>,
    /// Use ∫(σ̇ − ⟨σ̇⟩)² instead of ∫σ̇².
    #[arg(long)]
    centered: bool,
    #[arg(long)]
    restarts: Option<usize>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// mode or sigma.
    #[arg(long, value_parser = parse_name::<SolvePath>)]
    path: Option<SolvePath>,
    /// Trajectory CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VacuumArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Run manifest (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV of the optimal trajectory over the window.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long)]
    param: Option<String>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    values: Option<Vec<f64>>,
    /// Output directory for point CSVs and manifest.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// CSV files; every (file, y column) pair becomes one polyline.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    x: String,
    #[arg(long, required = true)]
    y: Vec<String>,
    /// Plot the square of each y column.
    #[arg(long)]
    square: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// JSON report of every check.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_config(a: &SystemArgs) -> Result<RunConfig> {
    let mut c = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = a.system {
        c.system = v;
    }
    if let Some(v) = a.profile {
        c.profile = v;
    }
    if let Some(v) = &a.custom_profile {
        c.custom_profile = Some(v.clone());
    }
    if let Some(v) = a.scale_factor {
        c.scale_factor = Some(v);
    }
    for (name, v) in [
        ("k", a.k),
        ("H", a.h),
        ("m", a.m),
        ("gamma", a.gamma),
        ("r", a.r),
        ("delta", a.delta),
        ("theta0", a.theta0),
        ("dtheta0", a.dtheta0),
    ] {
        if let Some(v) = v {
            c.params.set(name, v)?;
        }
    }
    if a.t0.is_some() || a.t1.is_some() {
        let (lo, hi) = c.resolved_span()?;
        c.span = Some([a.t0.unwrap_or(lo), a.t1.unwrap_or(hi)]);
    }
    if let Some(v) = a.anchor {
        c.anchor = Some(v);
    }
    if let Some(v) = a.tol {
        c.tol = v;
    }
    if let Some(v) = a.samples {
        c.samples = v;
    }
    if let Some(v) = a.frw_sign {
        c.frw_sign = v;
    }
    Ok(c)
}

fn apply_search(c: &mut RunConfig, s: &SearchArgs) -> Result<()> {
    let mut spec = c.search.clone();
    if let Some(w) = &s.window {
        let (lo, hi) = (w[0], w[1]);
        let side = s.side.unwrap_or(if hi <= 0.0 {
            WindowSide::Early
        } else if lo >= 0.0 {
            WindowSide::Late
        } else {
            WindowSide::Central
        });
        spec = Some(SearchSpec {
            parametrization: s.space.unwrap_or(Parametrization::ThetaInit),
            objective: Objective::Window {
                lo,
                hi,
                centered: s.centered,
            },
            side,
            optimizer: OptimizerSettings::default(),
            samples: None,
        });
    } else if let Some(t0) = s.ratio_t0 {
        let eq = SystemEquation::from_config(c)?;
        let omega = match &eq {
            SystemEquation::Profile(p) => {
                p.omega_out().unwrap_or(p.eval(c.resolved_anchor()?)?.omega)
            }
            _ => {
                return Err(VacuaError::Config(
                    "the ratio functional needs a boson profile".into(),
                ))
            }
        };
        spec = Some(SearchSpec {
            parametrization: Parametrization::SqueezeRDelta,
            objective: Objective::Ratio {
                t0,
                t_list: default_t_list(omega).into_iter().map(|t| t + t0).collect(),
                r0: s.r0,
                delta0: s.delta0,
            },
            side: s.side.unwrap_or(WindowSide::Late),
            optimizer: OptimizerSettings::default(),
            samples: None,
        });
    } else if let Some(spec) = spec.as_mut() {
        if let Some(p) = s.space {
            spec.parametrization = p;
        }
        if let Some(side) = s.side {
            spec.side = side;
        }
    }
    if let (Some(spec), Some(n)) = (spec.as_mut(), s.restarts) {
        spec.optimizer.restarts = n;
    }
    c.search = spec;
    Ok(())
}

fn write_table(table: &Table, path: &Path) -> Result<Artifact> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let sha = table.write(path)?;
    Ok(artifact(path, sha))
}

fn write_manifest(
    command: &str,
    c: &RunConfig,
    results: serde_json::Value,
    artifacts: Vec<Artifact>,
    start: Instant,
    path: &Path,
) -> Result<RunManifest> {
    let m = RunManifest::new(
        command,
        c,
        results,
        artifacts,
        start.elapsed().as_secs_f64(),
    )?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    m.write(path)?;
    Ok(m)
}

fn cmd_solve(a: SolveArgs) -> Result<()> {
    let start = Instant::now();
    let mut c = build_config(&a.system)?;
    if let Some(p) = a.path {
        c.path = p;
    }
    if let Some(out) = &a.out {
        c.output.csv = Some(out.clone());
    }
    if let Some(m) = &a.manifest {
        c.output.manifest = Some(m.clone());
    }
    let out = run::solve(&c)?;
    let mut artifacts = Vec::new();
    if let (Some(path), Some(table)) = (&c.output.csv, &out.table) {
        let art = write_table(table, path)?;
        println!(
            "wrote {} ({} rows, sha256 {})",
            path.display(),
            table.rows.len(),
            art.sha256
        );
        artifacts.push(art);
    }
    println!("{}", out.results);
    if let Some(path) = c.output.manifest.clone() {
        write_manifest("solve", &c, out.results, artifacts, start, &path)?;
    }
    Ok(())
}

fn cmd_vacuum(a: VacuumArgs) -> Result<()> {
    let start = Instant::now();
    let mut c = build_config(&a.system)?;
    apply_search(&mut c, &a.search)?;
    if let Some(out) = &a.out {
        c.output.manifest = Some(out.clone());
    }
    if let Some(csv) = &a.csv {
        c.output.csv = Some(csv.clone());
    }
    let out = run::vacuum(&c)?;
    let mut artifacts = Vec::new();
    if let (Some(path), Some(table)) = (&c.output.csv, &out.table) {
        artifacts.push(write_table(table, path)?);
    }
    let search = &out.results["search"];
    let classification = search
        .get("classification")
        .unwrap_or(&serde_json::Value::Null);
    let result = search.get("result").unwrap_or(search);
    println!(
        "classification {} params {} z_min {} metric {}",
        classification, result["params"], result["z_min"], result["oscillation"]["metric"]
    );
    if let Some(path) = c.output.manifest.clone() {
        write_manifest("vacuum", &c, out.results, artifacts, start, &path)?;
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let start = Instant::now();
    let mut c = build_config(&a.system)?;
    apply_search(&mut c, &a.search)?;
    if let (Some(param), Some(values)) = (&a.param, &a.values) {
        c.sweep = Some(SweepSpec {
            param: param.clone(),
            values: values.clone(),
        });
    } else if a.param.is_some() || a.values.is_some() {
        return Err(VacuaError::Config(
            "--param and --values go together".into(),
        ));
    }
    let points = run::sweep(&c)?;
    std::fs::create_dir_all(&a.out)?;
    let mut artifacts = Vec::new();
    let mut results = Vec::new();
    for (i, (value, out)) in points.iter().enumerate() {
        if let Some(table) = &out.table {
            artifacts.push(write_table(
                table,
                &a.out.join(format!("point_{i:03}.csv")),
            )?);
        }
        results.push(json!({ "index": i, "value": value, "results": out.results }));
    }
    println!("wrote {} points to {}", points.len(), a.out.display());
    write_manifest(
        "sweep",
        &c,
        serde_json::Value::Array(results),
        artifacts,
        start,
        &a.out.join("manifest.json"),
    )?;
    Ok(())
}

fn cmd_plot(a: PlotArgs) -> Result<()> {
    let mut series = Vec::new();
    for input in &a.inputs {
        let table = Table::read(input)?;
        let x = table.column(&a.x)?;
        for y in &a.y {
            let mut values = table.column(y)?;
            if a.square {
                values.iter_mut().for_each(|v| *v *= *v);
            }
            let stem = input
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            series.push(Series {
                label: if a.inputs.len() > 1 {
                    format!("{stem}: {y}")
                } else {
                    y.clone()
                },
                x: x.clone(),
                y: values,
            });
        }
    }
    let y_label = if a.square {
        format!("{}²", a.y.join(", "))
    } else {
        a.y.join(", ")
    };
    let text = svg::render(&series, &a.x, &y_label)?;
    std::fs::write(&a.out, text)?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> Result<bool> {
    let checks = run::validation_checks(a.tol)?;
    for c in &checks {
        println!(
            "{} {}: {:e} (limit {:e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.limit
        );
    }
    if let Some(out) = &a.out {
        let text =
            serde_json::to_string_pretty(&checks).map_err(|e| VacuaError::Io(e.to_string()))?;
        std::fs::write(out, text + "\n")?;
    }
    Ok(checks.iter().all(|c| c.pass))
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("VACUA_THREADS") else {
        return Ok(());
    };
    let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        VacuaError::Config(format!(
            "VACUA_THREADS must be a positive integer, got '{v}'"
        ))
    })?;
    // a pool built earlier in the process stays in place
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn exit_code(e: &VacuaError) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(a).map(|_| true),
        Command::Vacuum(a) => cmd_vacuum(a).map(|_| true),
        Command::Sweep(a) => cmd_sweep(a).map(|_| true),
        Command::Plot(a) => cmd_plot(a).map(|_| true),
        Command::Validate(a) => cmd_validate(a),
    };
    match outcome {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_NUMERICAL,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
