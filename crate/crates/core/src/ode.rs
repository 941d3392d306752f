//! Adaptive Dormand–Prince 5(4) integrator for small complex linear systems,
//! with the standard 4th-order continuous extension used for sampling on a
//! fixed time grid.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// `None` selects the starting step automatically.
    pub initial_step: Option<f64>,
    pub max_step: f64,
    pub max_steps: u64,
    /// Spacing of the output grid.
    pub sample_interval: f64,
    /// Largest `|‖c‖² − 1|` tolerated at any sample.
    pub sample_drift_bound: f64,
    /// Largest `|‖c‖² − 1|` tolerated at the final time.
    pub final_drift_bound: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-13,
            initial_step: None,
            max_step: 1.0,
            max_steps: 50_000_000,
            sample_interval: 1.0,
            sample_drift_bound: 1e-6,
            final_drift_bound: 1e-8,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("rtol", self.rtol)?;
        positive("atol", self.atol)?;
        positive("sample_interval", self.sample_interval)?;
        positive("sample_drift_bound", self.sample_drift_bound)?;
        positive("final_drift_bound", self.final_drift_bound)?;
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidParams(format!("max_step must be positive, got {}", self.max_step)));
        }
        if let Some(h) = self.initial_step {
            positive("initial_step", h)?;
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidParams("max_steps must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn with_sample_interval(mut self, dt: f64) -> Self {
        self.sample_interval = dt;
        self
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub accepted: u64,
    pub rejected: u64,
    pub evaluations: u64,
}

// Dormand–Prince tableau.
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
// continuous extension
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

type State<const N: usize> = [C64; N];

fn combine<const N: usize>(y: &State<N>, h: f64, terms: &[(f64, &State<N>)]) -> State<N> {
    let mut out = *y;
    for (coef, k) in terms {
        if *coef == 0.0 {
            continue;
        }
        let s = h * coef;
        for i in 0..N {
            out[i] += k[i] * s;
        }
    }
    out
}

fn error_norm<const N: usize>(err: &State<N>, y0: &State<N>, y1: &State<N>, rtol: f64, atol: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sc = atol + rtol * y0[i].norm().max(y1[i].norm());
        acc += (err[i].norm() / sc).powi(2);
    }
    (acc / N as f64).sqrt()
}

fn initial_step<const N: usize, F>(f: &mut F, t0: f64, y0: &State<N>, f0: &State<N>, cfg: &IntegratorConfig) -> f64
where
    F: FnMut(f64, &State<N>) -> State<N>,
{
    let sc: Vec<f64> = y0.iter().map(|y| cfg.atol + cfg.rtol * y.norm()).collect();
    let rms = |v: &State<N>| (v.iter().zip(&sc).map(|(x, s)| (x.norm() / s).powi(2)).sum::<f64>() / N as f64).sqrt();
    let d0 = rms(y0);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(cfg.max_step);
    let y1 = combine(y0, h0, &[(1.0, f0)]);
    let f1 = f(t0 + h0, &y1);
    let mut diff = [C64::new(0.0, 0.0); N];
    for i in 0..N {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(1.0 / 5.0) };
    (100.0 * h0).min(h1).min(cfg.max_step)
}

/// Integrate `dy/dt = f(t, y)` from `t0` to `t_end`, calling `on_sample` at
/// `t0 + k·sample_interval` for every grid point up to `t_end` and once more
/// at `t_end` when it is off the grid. Sample values come from the dense
/// output; the step sequence does not depend on the sampling grid.
///
/// `on_sample` may abort the run by returning an error.
pub fn integrate_sampled<const N: usize, F, S>(
    mut f: F,
    t0: f64,
    y0: State<N>,
    t_end: f64,
    cfg: &IntegratorConfig,
    mut on_sample: S,
) -> Result<IntegratorStats>
where
    F: FnMut(f64, &State<N>) -> State<N>,
    S: FnMut(f64, &State<N>) -> Result<()>,
{
    cfg.validate()?;
    if !(t_end > t0) || !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!("t_end must exceed t0 = {t0}, got {t_end}")));
    }
    let span = t_end - t0;
    let n_grid = (span / cfg.sample_interval + 1e-9).floor() as u64;
    let grid_time = |k: u64| -> f64 {
        if k > n_grid {
            t_end
        } else {
            t0 + k as f64 * cfg.sample_interval
        }
    };
    let last_sample = if t_end - grid_time(n_grid) > 1e-9 * cfg.sample_interval { n_grid + 1 } else { n_grid };
    let sample_time = |k: u64| if k == last_sample { t_end } else { grid_time(k) };

    let mut stats = IntegratorStats::default();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    stats.evaluations += 1;

    on_sample(t0, &y0)?;
    let mut next_sample = 1u64;

    let mut h = match cfg.initial_step {
        Some(h) => h.min(cfg.max_step),
        None => {
            stats.evaluations += 1;
            initial_step(&mut f, t, &y, &k1, cfg)
        }
    };
    let mut reject_streak = false;

    while next_sample <= last_sample {
        if stats.accepted + stats.rejected >= cfg.max_steps {
            return Err(Error::Integration {
                t,
                reason: format!("maximum number of steps ({}) exceeded", cfg.max_steps),
            });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        if !(h > f64::EPSILON * t.abs().max(1.0)) {
            return Err(Error::Integration { t, reason: format!("step size underflow (h = {h:e})") });
        }

        let k2 = f(t + C2 * h, &combine(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &combine(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &combine(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + C5 * h, &combine(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + h, &combine(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = combine(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let t_new = if last { t_end } else { t + h };
        let k7 = f(t_new, &y_new);
        stats.evaluations += 6;

        let err_vec =
            combine(&[C64::new(0.0, 0.0); N], h, &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)]);
        let err = error_norm(&err_vec, &y, &y_new, cfg.rtol, cfg.atol);
        if !err.is_finite() {
            return Err(Error::Integration { t, reason: "non-finite error estimate".into() });
        }

        if err <= 1.0 {
            stats.accepted += 1;
            // dense output on [t, t_new]
            while next_sample <= last_sample && sample_time(next_sample) <= t_new {
                let ts = sample_time(next_sample);
                let ys = if next_sample == last_sample && last {
                    y_new
                } else {
                    let theta = (ts - t) / h;
                    let theta1 = 1.0 - theta;
                    let mut ys = [C64::new(0.0, 0.0); N];
                    for i in 0..N {
                        let ydiff = y_new[i] - y[i];
                        let bspl = k1[i] * h - ydiff;
                        let r4 = ydiff - k7[i] * h - bspl;
                        let r5 = (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * h;
                        ys[i] = y[i] + (ydiff + (bspl + (r4 + r5 * theta1) * theta) * theta1) * theta;
                    }
                    ys
                };
                on_sample(ts, &ys)?;
                next_sample += 1;
            }
            t = t_new;
            y = y_new;
            k1 = k7;
            let mut fac = SAFETY * err.max(1e-10).powf(-0.2);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if reject_streak {
                fac = fac.min(1.0);
            }
            reject_streak = false;
            h = (h * fac).min(cfg.max_step);
        } else {
            stats.rejected += 1;
            reject_streak = true;
            let fac = (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
            h *= fac;
        }
    }
    Ok(stats)
}

/// Convenience wrapper collecting every sample.
pub fn integrate<const N: usize, F>(
    f: F,
    t0: f64,
    y0: State<N>,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<(Vec<f64>, Vec<State<N>>, IntegratorStats)>
where
    F: FnMut(f64, &State<N>) -> State<N>,
{
    let mut times = Vec::new();
    let mut states = Vec::new();
    let stats = integrate_sampled(f, t0, y0, t_end, cfg, |t, y| {
        times.push(t);
        states.push(*y);
        Ok(())
    })?;
    Ok((times, states, stats))
}
