//! Embedded Dormand–Prince 5(4) integrator with continuous (dense) output.
//!
//! The state is a fixed-size real array; complex mode equations are passed
//! in as their real and imaginary components. Steps are accepted under a
//! mixed absolute/relative error norm, and every accepted step keeps the
//! five coefficient vectors of the order-4 continuous extension so the
//! solution can be evaluated anywhere inside the span.

use crate::error::{Result, VacuaError};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-size controller settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on |h|; `f64::INFINITY` leaves it free.
    pub h_max: f64,
    pub max_steps: usize,
    pub safety: f64,
    pub fac_min: f64,
    pub fac_max: f64,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
            safety: 0.9,
            fac_min: 0.2,
            fac_max: 10.0,
        }
    }
}

#[derive(Debug, Clone)]
struct DenseStep<const N: usize> {
    t: f64,
    h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    fn eval(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t) / self.h;
        let theta1 = 1.0 - theta;
        let r = &self.rcont;
        std::array::from_fn(|i| {
            r[0][i] + theta * (r[1][i] + theta1 * (r[2][i] + theta * (r[3][i] + theta1 * r[4][i])))
        })
    }
}

/// Solution of an initial-value problem that can be evaluated anywhere in its span.
#[derive(Debug, Clone)]
pub struct DenseSolution<const N: usize> {
    t_start: f64,
    t_end: f64,
    y_start: [f64; N],
    steps: Vec<DenseStep<N>>,
    pub evaluations: usize,
}

impl<const N: usize> DenseSolution<N> {
    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    /// Accepted step boundaries, starting with the initial time.
    pub fn step_times(&self) -> Vec<f64> {
        let mut ts = Vec::with_capacity(self.steps.len() + 1);
        ts.push(self.t_start);
        ts.extend(self.steps.iter().map(|s| s.t + s.h));
        ts
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = ordered(self.t_start, self.t_end);
        t >= lo && t <= hi
    }

    /// Evaluates the continuous extension at `t`; `t` must lie inside the span.
    pub fn eval(&self, t: f64) -> [f64; N] {
        if self.steps.is_empty() {
            return self.y_start;
        }
        let forward = self.t_end >= self.t_start;
        // first step whose right end reaches past t
        let idx = if forward {
            self.steps.partition_point(|s| s.t + s.h < t)
        } else {
            self.steps.partition_point(|s| s.t + s.h > t)
        };
        let step = &self.steps[idx.min(self.steps.len() - 1)];
        step.eval(t)
    }

    pub fn final_state(&self) -> [f64; N] {
        self.eval(self.t_end)
    }
}

fn ordered(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Dopri5 {
    pub fn with_tolerance(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    fn error_norm<const N: usize>(&self, y0: &[f64; N], y1: &[f64; N], err: &[f64; N]) -> f64 {
        let mut acc = 0.0;
        for i in 0..N {
            let sc = self.atol + self.rtol * y0[i].abs().max(y1[i].abs());
            let e = err[i] / sc;
            acc += e * e;
        }
        (acc / N as f64).sqrt()
    }

    fn initial_step<const N: usize, F>(
        &self,
        f: &mut F,
        t0: f64,
        y0: &[f64; N],
        f0: &[f64; N],
        dir: f64,
    ) -> f64
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let scale = |i: usize| self.atol + self.rtol * y0[i].abs();
        let norm = |v: &[f64; N]| {
            (v.iter()
                .enumerate()
                .map(|(i, x)| (x / scale(i)).powi(2))
                .sum::<f64>()
                / N as f64)
                .sqrt()
        };
        let d0 = norm(y0);
        let d1 = norm(f0);
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h0 = h0.min(self.h_max);
        let y1: [f64; N] = std::array::from_fn(|i| y0[i] + dir * h0 * f0[i]);
        let f1 = f(t0 + dir * h0, &y1);
        let diff: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
        let d2 = norm(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.h_max)
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
    pub fn solve<const N: usize, F>(
        &self,
        mut f: F,
        t0: f64,
        y0: [f64; N],
        t1: f64,
    ) -> Result<DenseSolution<N>>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        if !(self.rtol > 0.0 && self.atol >= 0.0) {
            return Err(VacuaError::Parameter(format!(
                "tolerances must be positive (rtol = {}, atol = {})",
                self.rtol, self.atol
            )));
        }
        if y0.iter().any(|v| !v.is_finite()) {
            return Err(VacuaError::Integration {
                t: t0,
                reason: "non-finite initial state".into(),
            });
        }
        let mut sol = DenseSolution {
            t_start: t0,
            t_end: t1,
            y_start: y0,
            steps: Vec::new(),
            evaluations: 0,
        };
        if t1 == t0 {
            return Ok(sol);
        }
        let dir = if t1 > t0 { 1.0 } else { -1.0 };
        let span = (t1 - t0).abs();

        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y);
        sol.evaluations += 1;
        if k1.iter().any(|v| !v.is_finite()) {
            return Err(VacuaError::Integration {
                t,
                reason: "right-hand side is not finite".into(),
            });
        }
        let mut h = self.initial_step(&mut f, t, &y, &k1, dir).min(span);
        sol.evaluations += 1;
        let mut last_rejected = false;

        for _ in 0..self.max_steps {
            let remaining = (t1 - t).abs();
            if remaining <= 1e-14 * t1.abs().max(1.0) {
                return Ok(sol);
            }
            let mut last = false;
            if h >= remaining {
                h = remaining;
                last = true;
            }
            if h < 1e-13 * t.abs().max(1.0) {
                return Err(VacuaError::Integration {
                    t,
                    reason: format!("step size underflow (h = {h:e})"),
                });
            }
            let hs = dir * h;

            let y2: [f64; N] = std::array::from_fn(|i| y[i] + hs * A21 * k1[i]);
            let k2 = f(t + C2 * hs, &y2);
            let y3: [f64; N] = std::array::from_fn(|i| y[i] + hs * (A31 * k1[i] + A32 * k2[i]));
            let k3 = f(t + C3 * hs, &y3);
            let y4: [f64; N] =
                std::array::from_fn(|i| y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]));
            let k4 = f(t + C4 * hs, &y4);
            let y5: [f64; N] = std::array::from_fn(|i| {
                y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
            });
            let k5 = f(t + C5 * hs, &y5);
            let y6: [f64; N] = std::array::from_fn(|i| {
                y[i] + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
            });
            let t_new = if last { t1 } else { t + hs };
            let k6 = f(t + hs, &y6);
            let y_new: [f64; N] = std::array::from_fn(|i| {
                y[i] + hs * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i])
            });
            let k7 = f(t_new, &y_new);
            sol.evaluations += 6;

            let err: [f64; N] = std::array::from_fn(|i| {
                hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            });
            let en = self.error_norm(&y, &y_new, &err);

            if !en.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                // shrink hard and retry; a persistently non-finite field ends in underflow
                h *= 0.1;
                last_rejected = true;
                continue;
            }

            if en <= 1.0 {
                let ydiff: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
                let bspl: [f64; N] = std::array::from_fn(|i| hs * k1[i] - ydiff[i]);
                let rc4: [f64; N] = std::array::from_fn(|i| ydiff[i] - hs * k7[i] - bspl[i]);
                let rc5: [f64; N] = std::array::from_fn(|i| {
                    hs * (D1 * k1[i]
                        + D3 * k3[i]
                        + D4 * k4[i]
                        + D5 * k5[i]
                        + D6 * k6[i]
                        + D7 * k7[i])
                });
                sol.steps.push(DenseStep {
                    t,
                    h: t_new - t,
                    rcont: [y, ydiff, bspl, rc4, rc5],
                });
                t = t_new;
                y = y_new;
                k1 = k7;
                if last {
                    return Ok(sol);
                }
                let mut fac = self.safety * en.max(1e-10).powf(-0.2);
                fac = fac.clamp(self.fac_min, if last_rejected { 1.0 } else { self.fac_max });
                h = (h * fac).min(self.h_max);
                last_rejected = false;
            } else {
                let fac = (self.safety * en.powf(-0.2)).max(self.fac_min);
                h *= fac;
                last_rejected = true;
            }
        }
        Err(VacuaError::Integration {
            t,
            reason: format!("exceeded {} steps", self.max_steps),
        })
    }
}

/// Uniform grid of `n` points covering `[a, b]` inclusive.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let h = (b - a) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { b } else { a + h * i as f64 })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let sol = Dopri5::default()
            .solve(|_t, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 5.0)
            .unwrap();
        let y = sol.final_state()[0];
        assert!((y - (-5.0f64).exp()).abs() < 1e-10);
        // dense output between steps
        for &t in &[0.37, 1.9, 4.41] {
            assert!((sol.eval(t)[0] - (-t).exp()).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn harmonic_oscillator_backward() {
        // y = (cos t, -sin t) integrated from 10 down to -3
        let y0 = [10.0f64.cos(), -10.0f64.sin()];
        let sol = Dopri5::default()
            .solve(|_t, y: &[f64; 2]| [y[1], -y[0]], 10.0, y0, -3.0)
            .unwrap();
        for &t in &[9.5, 4.0, 0.0, -2.99, -3.0] {
            let y = sol.eval(t);
            assert!((y[0] - t.cos()).abs() < 1e-8, "t = {t}: {}", y[0] - t.cos());
            assert!((y[1] + t.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_span_returns_initial_state() {
        let sol = Dopri5::default()
            .solve(|_t, y: &[f64; 1]| [y[0]], 1.0, [2.0], 1.0)
            .unwrap();
        assert_eq!(sol.eval(1.0), [2.0]);
        assert_eq!(sol.step_count(), 0);
    }

    #[test]
    fn blow_up_reports_location() {
        // y' = y^2, y(0) = 1 blows up at t = 1
        let err = Dopri5::default()
            .solve(|_t, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0)
            .unwrap_err();
        match err {
            VacuaError::Integration { t, .. } => assert!((t - 1.0).abs() < 1e-3, "t = {t}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn grid_endpoints_are_exact() {
        let g = uniform_grid(-1.0, 0.3, 7);
        assert_eq!(g.len(), 7);
        assert_eq!(g[0], -1.0);
        assert_eq!(g[6], 0.3);
    }
}
