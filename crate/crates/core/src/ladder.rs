//! Three-level Ξ ladder `|2∥0⊥⟩ – |1∥0⊥⟩ – |0∥0⊥⟩` coupled through mode b,
//! and its two-photon effective model.
//!
//! In the excitation-conserving manifold
//! `{|2∥0⊥, 0_b⟩, |1∥0⊥, 1_b⟩, |0∥0⊥, 2_b⟩}` the single-photon coupling `g`
//! picks up the bosonic factors `√1` and `√2`, and the intermediate state is
//! detuned by `Δ` from the outer pair. Eliminating it gives a direct coupling
//! `√2 g²/Δ` between the outer states together with level shifts `g²/Δ` and
//! `2g²/Δ`. The unequal shifts detune the outer pair by `g²/Δ`, which is of
//! the same order as the coupling and caps the transfer near 0.89; with
//! [`LadderParams::compensate_stark`] set, the `|0∥0⊥, 2_b⟩` level is offset
//! by `−g²/Δ` so the dressed outer levels stay resonant, which is the regime
//! the pure two-photon Hamiltonian describes.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::Matrix3;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{integrate_sampled, IntegratorConfig, IntegratorStats};
use crate::series::find_peaks;

const DETUNING_TOL: f64 = 1e-12;
const WEAK_COUPLING_WARN: f64 = 0.1;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderParams {
    pub g: f64,
    /// `Δ = ω − δa = δb − ω`.
    pub delta: f64,
    /// Gap `|0∥0⊥⟩ → |1∥0⊥⟩`.
    pub delta_a: f64,
    /// Gap `|1∥0⊥⟩ → |2∥0⊥⟩`.
    pub delta_b: f64,
    /// Photon frequency of mode b.
    pub omega: f64,
    pub compensate_stark: bool,
}

impl LadderParams {
    /// Build from the level gaps and photon frequency; both definitions of `Δ`
    /// must agree.
    pub fn new(g: f64, delta_a: f64, delta_b: f64, omega: f64) -> Result<Self> {
        let d1 = omega - delta_a;
        let d2 = delta_b - omega;
        let scale = 1.0f64.max(omega.abs()).max(delta_a.abs()).max(delta_b.abs());
        if (d1 - d2).abs() > DETUNING_TOL * scale {
            return Err(Error::InvalidParams(format!("ω − δa = {d1} and δb − ω = {d2} must be equal")));
        }
        let p = Self { g, delta: d1, delta_a, delta_b, omega, compensate_stark: true };
        p.validate()?;
        Ok(p)
    }

    /// Build from `g`, `Δ` and `ω`, placing the gaps at `ω ∓ Δ`.
    pub fn from_detuning(g: f64, delta: f64, omega: f64) -> Result<Self> {
        let p = Self { g, delta, delta_a: omega - delta, delta_b: omega + delta, omega, compensate_stark: true };
        p.validate()?;
        Ok(p)
    }

    pub fn with_compensation(mut self, on: bool) -> Self {
        self.compensate_stark = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("g", self.g),
            ("Delta", self.delta),
            ("delta_a", self.delta_a),
            ("delta_b", self.delta_b),
            ("omega", self.omega),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite, got {v}")));
            }
        }
        if self.g < 0.0 {
            return Err(Error::InvalidParams(format!("g must be non-negative, got {}", self.g)));
        }
        if self.delta == 0.0 {
            return Err(Error::InvalidParams("Delta must be nonzero".into()));
        }
        let scale = 1.0f64.max(self.omega.abs()).max(self.delta_a.abs()).max(self.delta_b.abs());
        if ((self.omega - self.delta_a) - self.delta).abs() > DETUNING_TOL * scale
            || ((self.delta_b - self.omega) - self.delta).abs() > DETUNING_TOL * scale
        {
            return Err(Error::InvalidParams(format!(
                "Delta = {} inconsistent with ω − δa = {} and δb − ω = {}",
                self.delta,
                self.omega - self.delta_a,
                self.delta_b - self.omega
            )));
        }
        if self.g_over_delta() > WEAK_COUPLING_WARN {
            log::warn!("g/Δ = {} is not small; adiabatic elimination is unreliable", self.g_over_delta());
        }
        Ok(())
    }

    pub fn g_over_delta(&self) -> f64 {
        (self.g / self.delta).abs()
    }

    /// Effective two-photon coupling `Ωb = g²/Δ`.
    pub fn omega_b(&self) -> f64 {
        self.g * self.g / self.delta
    }

    /// Nominal effective Rabi rate `√2 Ωb`.
    pub fn effective_rabi_rate(&self) -> f64 {
        SQRT_2 * self.omega_b().abs()
    }

    /// One full effective Rabi period, `2π / (√2 Ωb)`.
    pub fn effective_period(&self) -> f64 {
        2.0 * PI / self.effective_rabi_rate()
    }

    /// Level offsets `(E1, E2, E3)` relative to `|2∥0⊥, 0_b⟩`.
    fn offsets(&self) -> [f64; 3] {
        let e1 = self.delta_a + self.delta_b;
        let e2 = self.delta_a + self.omega;
        let mut e3 = 2.0 * self.omega;
        if self.compensate_stark {
            e3 -= self.omega_b();
        }
        [0.0, e2 - e1, e3 - e1]
    }
}

/// Amplitudes over `{|2∥0⊥, 0_b⟩, |1∥0⊥, 1_b⟩, |0∥0⊥, 2_b⟩}`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderState(pub [C64; 3]);

impl LadderState {
    pub fn upper() -> Self {
        Self([C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn populations(&self) -> [f64; 3] {
        self.0.map(|c| c.norm_sqr())
    }
}

/// Sampled run of an `N`-amplitude model.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledRun<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[C64; N]>,
    pub norm_drift: Vec<f64>,
    pub stats: IntegratorStats,
}

impl<const N: usize> SampledRun<N> {
    pub fn population(&self, k: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[k].norm_sqr()).collect()
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.norm_drift.iter().copied().fold(0.0, f64::max)
    }
}

fn norm_of<const N: usize>(s: &[C64; N]) -> f64 {
    s.iter().map(|c| c.norm_sqr()).sum()
}

fn check_initial<const N: usize>(s0: &[C64; N]) -> Result<()> {
    let norm = norm_of(s0);
    if (norm - 1.0).abs() > crate::state::NORM_TOL || !norm.is_finite() {
        return Err(Error::Normalization { norm, tol: crate::state::NORM_TOL });
    }
    Ok(())
}

fn run_sampled<const N: usize, F>(f: F, s0: [C64; N], t_end: f64, cfg: &IntegratorConfig) -> Result<SampledRun<N>>
where
    F: FnMut(f64, &[C64; N]) -> [C64; N],
{
    check_initial(&s0)?;
    let mut run =
        SampledRun { times: Vec::new(), states: Vec::new(), norm_drift: Vec::new(), stats: Default::default() };
    run.stats = integrate_sampled(f, 0.0, s0, t_end, cfg, |t, s| {
        let drift = (norm_of(s) - 1.0).abs();
        if !(drift <= cfg.sample_drift_bound) {
            return Err(Error::Stability { t, drift, bound: cfg.sample_drift_bound });
        }
        run.times.push(t);
        run.states.push(*s);
        run.norm_drift.push(drift);
        Ok(())
    })?;
    let last = *run.norm_drift.last().expect("at least one sample");
    if last > cfg.final_drift_bound {
        return Err(Error::Stability { t: t_end, drift: last, bound: cfg.final_drift_bound });
    }
    Ok(run)
}

/// Integrate the full three-level ladder in the interaction picture:
///
/// ```text
/// ċ1 = −i g e^{i(E1−E2)t} c2
/// ċ2 = −i [g e^{i(E2−E1)t} c1 + √2 g e^{i(E2−E3)t} c3]
/// ċ3 = −i √2 g e^{i(E3−E2)t} c2
/// ```
pub fn simulate_ladder_full(
    p: &LadderParams,
    s0: &LadderState,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<SampledRun<3>> {
    p.validate()?;
    let [e1, e2, e3] = p.offsets();
    let (w12, w23) = (e1 - e2, e2 - e3);
    let g = p.g;
    let g2 = SQRT_2 * p.g;
    let mi = C64::new(0.0, -1.0);
    run_sampled(
        move |t, c: &[C64; 3]| {
            let a = C64::from_polar(g, w12 * t);
            let b = C64::from_polar(g2, w23 * t);
            [mi * a * c[1], mi * (a.conj() * c[0] + b * c[2]), mi * b.conj() * c[1]]
        },
        s0.0,
        t_end,
        cfg,
    )
}

/// Exact interaction-picture amplitudes of the full ladder at the given times,
/// from the eigendecomposition of the time-independent rotating-frame
/// Hamiltonian.
pub fn ladder_full_exact(p: &LadderParams, s0: &LadderState, times: &[f64]) -> Result<Vec<LadderState>> {
    p.validate()?;
    check_initial(&s0.0)?;
    let e = p.offsets();
    let g2 = SQRT_2 * p.g;
    let h = Matrix3::new(e[0], p.g, 0.0, p.g, e[1], g2, 0.0, g2, e[2]);
    let eig = h.symmetric_eigen();
    let v = eig.eigenvectors;
    let coeffs: Vec<C64> = (0..3).map(|k| (0..3).map(|j| s0.0[j] * v[(j, k)]).sum()).collect();
    Ok(times
        .iter()
        .map(|&t| {
            let mut out = [C64::new(0.0, 0.0); 3];
            for (j, slot) in out.iter_mut().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..3 {
                    acc += coeffs[k] * v[(j, k)] * C64::from_polar(1.0, -eig.eigenvalues[k] * t);
                }
                *slot = acc * C64::from_polar(1.0, e[j] * t);
            }
            LadderState(out)
        })
        .collect())
}

/// Two-level effective model `{|2∥0⊥, 0_b⟩, |0∥0⊥, 2_b⟩}` with coupling
/// `√2 Ωb`.
pub fn simulate_ladder_effective(
    omega_b: f64,
    s0: [C64; 2],
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<SampledRun<2>> {
    if !omega_b.is_finite() {
        return Err(Error::InvalidParams(format!("Omega_b must be finite, got {omega_b}")));
    }
    let k = C64::new(0.0, -SQRT_2 * omega_b);
    run_sampled(move |_, c: &[C64; 2]| [k * c[1], k * c[0]], s0, t_end, cfg)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FullSolver {
    /// Adaptive integration of the interaction-picture equations.
    Integrated,
    /// Closed-form propagation with the rotating-frame eigenbasis.
    Exact,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions {
    pub samples: usize,
    pub solver: FullSolver,
    pub integrator: IntegratorConfig,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self { samples: 20_000, solver: FullSolver::Integrated, integrator: IntegratorConfig::default() }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderComparison {
    pub g_over_delta: f64,
    pub t_end: f64,
    pub compensate_stark: bool,
    pub omega_b: f64,
    /// `√2 Ωb`.
    pub rabi_rate_nominal: f64,
    /// `π / (2 t*)` with `t*` the first population maximum of
    /// `|0∥0⊥, 2_b⟩` in the full model, when one occurs before `t_end`.
    pub rabi_rate_measured: Option<f64>,
    /// Population of `|0∥0⊥, 2_b⟩` at that maximum.
    pub peak_transfer: Option<f64>,
    /// Largest `|ΔP|` over both outer levels and all samples.
    pub max_population_discrepancy: f64,
    pub max_intermediate_population: f64,
}

/// Run both models on a common grid and compare their outer-level
/// populations, starting from `|2∥0⊥, 0_b⟩`.
pub fn compare_effective_vs_full(p: &LadderParams, t_end: f64, opts: &CompareOptions) -> Result<LadderComparison> {
    p.validate()?;
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!("t_end must be positive, got {t_end}")));
    }
    if opts.samples < 2 {
        return Err(Error::InvalidArgument("at least two samples are needed".into()));
    }
    let cfg = IntegratorConfig { sample_interval: t_end / opts.samples as f64, ..opts.integrator };
    let s0 = LadderState::upper();
    let (times, full): (Vec<f64>, Vec<[f64; 3]>) = match opts.solver {
        FullSolver::Integrated => {
            let run = simulate_ladder_full(p, &s0, t_end, &cfg)?;
            let pops = run.states.iter().map(|s| s.map(|c| c.norm_sqr())).collect();
            (run.times, pops)
        }
        FullSolver::Exact => {
            let n = (t_end / cfg.sample_interval + 1e-9).floor() as usize;
            let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * cfg.sample_interval).collect();
            if t_end - times[n] > 1e-9 * cfg.sample_interval {
                times.push(t_end);
            }
            let states = ladder_full_exact(p, &s0, &times)?;
            (times, states.iter().map(|s| s.populations()).collect())
        }
    };
    let eff = simulate_ladder_effective(p.omega_b(), [C64::new(1.0, 0.0), C64::new(0.0, 0.0)], t_end, &cfg)?;
    debug_assert_eq!(eff.times.len(), times.len());

    let mut max_disc: f64 = 0.0;
    let mut max_mid: f64 = 0.0;
    for (pf, se) in full.iter().zip(&eff.states) {
        max_disc = max_disc.max((pf[0] - se[0].norm_sqr()).abs()).max((pf[2] - se[1].norm_sqr()).abs());
        max_mid = max_mid.max(pf[1]);
    }
    let lower: Vec<f64> = full.iter().map(|p| p[2]).collect();
    let first_peak = find_peaks(&times, &lower, 0.05).into_iter().next();

    Ok(LadderComparison {
        g_over_delta: p.g_over_delta(),
        t_end,
        compensate_stark: p.compensate_stark,
        omega_b: p.omega_b(),
        rabi_rate_nominal: p.effective_rabi_rate(),
        rabi_rate_measured: first_peak.map(|pk| PI / (2.0 * pk.time)),
        peak_transfer: first_peak.map(|pk| pk.value),
        max_population_discrepancy: max_disc,
        max_intermediate_population: max_mid,
    })
}
