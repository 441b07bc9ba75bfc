//! Derivative-free minimization: Nelder–Mead with deterministic restarts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VacuaError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSettings {
    /// Edge length of the initial simplex in parameter units.
    pub simplex_scale: f64,
    /// Stop once the simplex diameter falls below this.
    pub xtol: f64,
    /// Stop once the spread of objective values falls below this.
    pub ftol: f64,
    pub restarts: usize,
    pub max_evaluations: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            simplex_scale: 0.1,
            xtol: 1e-8,
            ftol: 1e-15,
            restarts: 8,
            max_evaluations: 2000,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        if self.restarts < 1 {
            return Err(VacuaError::Config("restarts must be at least 1".into()));
        }
        if !(self.simplex_scale > 0.0) || !(self.xtol > 0.0) || !(self.ftol >= 0.0) {
            return Err(VacuaError::Config(
                "simplex scale and tolerances must be positive".into(),
            ));
        }
        if self.max_evaluations < 4 {
            return Err(VacuaError::Config("max_evaluations too small".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// i-th element of the van der Corput sequence in `base`.
pub fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Restart starting points: `start` itself, then Halton points within ±2 simplex scales.
pub fn restart_seeds(start: &[f64], settings: &OptimizerSettings) -> Vec<Vec<f64>> {
    (0..settings.restarts)
        .map(|i| {
            start
                .iter()
                .enumerate()
                .map(|(d, &x)| {
                    if i == 0 {
                        x
                    } else {
                        x + 2.0
                            * settings.simplex_scale
                            * (2.0 * halton(i, PRIMES[d % PRIMES.len()]) - 1.0)
                    }
                })
                .collect()
        })
        .collect()
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Single Nelder–Mead run from `x0` with standard coefficients.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    settings: &OptimizerSettings,
) -> Minimum {
    let n = x0.len();
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        sanitize(f(x))
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0);
    simplex.push((x0.to_vec(), v0));
    for d in 0..n {
        let mut x = x0.to_vec();
        x[d] += settings.simplex_scale;
        let v = eval(&x);
        simplex.push((x, v));
    }
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < settings.xtol || (worst.is_finite() && (worst - best).abs() <= settings.ftol)
        {
            converged = true;
            break;
        }
        if evals.get() >= settings.max_evaluations {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|(x, _)| x[d]).sum::<f64>() / n as f64)
            .collect();
        let along = |c: f64, worst: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(worst)
                .map(|(m, w)| m + c * (m - w))
                .collect()
        };
        let xr = along(1.0, &simplex[n].0);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(2.0, &simplex[n].0);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = along(0.5, &simplex[n].0);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-0.5, &simplex[n].0);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < fr.min(simplex[n].1) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = x_best
                .iter()
                .zip(&vertex.0)
                .map(|(b, v)| b + 0.5 * (v - b))
                .collect();
            let v = eval(&x);
            *vertex = (x, v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        evaluations: evals.get(),
        converged,
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Nelder–Mead from every restart seed, run concurrently, merged in seed order.
///
/// Values within 1e-10 of each other tie; the smaller parameter norm wins.
/// Fails with [`VacuaError::Convergence`] only when no restart converged.
pub fn minimize<F: Fn(&[f64]) -> f64 + Sync>(
    f: F,
    start: &[f64],
    settings: &OptimizerSettings,
) -> Result<Minimum> {
    settings.validate()?;
    let runs: Vec<Minimum> = restart_seeds(start, settings)
        .par_iter()
        .map(|seed| nelder_mead(&f, seed, settings))
        .collect();
    let evaluations = runs.iter().map(|m| m.evaluations).sum();
    let any_converged = runs.iter().any(|m| m.converged);
    let mut best: Option<&Minimum> = None;
    for m in &runs {
        best = match best {
            None => Some(m),
            Some(b) if m.value < b.value - 1e-10 => Some(m),
            Some(b) if (m.value - b.value).abs() <= 1e-10 && norm(&m.x) < norm(&b.x) => Some(m),
            keep => keep,
        };
    }
    let best = best.expect("at least one restart");
    if !any_converged || !best.value.is_finite() {
        return Err(VacuaError::Convergence {
            best_params: best.x.clone(),
            best_value: best.value,
            evaluations,
        });
    }
    Ok(Minimum {
        x: best.x.clone(),
        value: best.value,
        evaluations,
        converged: best.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_values() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(3, 2), 0.75);
        assert!((halton(2, 3) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let s = OptimizerSettings {
            max_evaluations: 5000,
            ..Default::default()
        };
        let m = minimize(f, &[-1.2, 1.0], &s).unwrap();
        assert!(
            (m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6,
            "{:?}",
            m.x
        );
    }

    #[test]
    fn tie_breaks_on_norm() {
        // two symmetric minima at ±1; every seed lands on one of them
        let f = |x: &[f64]| (x[0] * x[0] - 1.0).powi(2);
        let s = OptimizerSettings {
            simplex_scale: 1.0,
            ..Default::default()
        };
        let a = minimize(f, &[0.0], &s).unwrap();
        let b = minimize(f, &[0.0], &s).unwrap();
        assert_eq!(a, b);
        assert!((a.x[0].abs() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn nan_objective_reports_convergence_error() {
        let s = OptimizerSettings {
            restarts: 2,
            max_evaluations: 50,
            ..Default::default()
        };
        match minimize(|_: &[f64]| f64::NAN, &[0.0, 0.0], &s) {
            Err(VacuaError::Convergence { evaluations, .. }) => assert!(evaluations > 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_restarts_rejected() {
        let s = OptimizerSettings {
            restarts: 0,
            ..Default::default()
        };
        assert!(matches!(
            minimize(|x: &[f64]| x[0], &[0.0], &s),
            Err(VacuaError::Config(_))
        ));
    }
}
