//! Chirped-level interaction-picture dynamics of the four-state system.
//!
//! The level `|0∥ 1⊥⟩` is swept up and `|2∥ 0⊥⟩` down linearly in time:
//!
//! ```text
//! ω01(t) = ω01(0) (1 + v1 t)        r01(t) = ω01(0) (t + v1 t²/2)
//! ω20(t) = ω20(0) (1 − v2 t)        r20(t) = ω20(0) (t − v2 t²/2)
//! ```
//!
//! and the amplitudes obey `dc/dt = −i M(t) c` with the Hermitian coupling
//! matrix
//!
//! ```text
//!        ⎡ 0             Ωa e^{iφa}   0             0            ⎤
//! M(t) = ⎢ Ωa e^{−iφa}   0            Ω e^{iφΩ}     0            ⎥
//!        ⎢ 0             Ω e^{−iφΩ}   0             √2 Ωb e^{−iφb}⎥
//!        ⎣ 0             0            √2 Ωb e^{iφb} 0            ⎦
//! ```
//!
//! where `φa = (ω00 + ωa) t − r01`, `φΩ = r01 − r20`, `φb = (ω00 + 2ωb) t − r20`.

use std::f64::consts::SQRT_2;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{integrate_sampled, IntegratorConfig, IntegratorStats};
use crate::state::Amplitudes;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Up => 1.0,
            Direction::Down => -1.0,
        }
    }
}

/// `ω0 (1 ± v t)`.
pub fn chirped_frequency(omega0: f64, v: f64, t: f64, direction: Direction) -> f64 {
    omega0 * (1.0 + direction.sign() * v * t)
}

/// `ω0 (t ± v t²/2)`, the time integral of [`chirped_frequency`] from 0.
pub fn phase_r(omega0: f64, v: f64, t: f64, direction: Direction) -> f64 {
    omega0 * (t + direction.sign() * 0.5 * v * t * t)
}

/// Physical rates and frequencies, in units where `Ω = 1` sets the time scale.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Coupling `|0∥1⊥⟩ ↔ |2∥0⊥⟩`.
    pub omega: f64,
    /// Photon-a coupling `|0∥0⊥⟩ ↔ |0∥1⊥⟩`.
    pub omega_a: f64,
    /// Effective two-photon coupling `g²/Δ`.
    pub omega_b: f64,
    /// Incident photon frequency.
    pub freq_a: f64,
    /// Emitted photon frequency.
    pub freq_b: f64,
    pub omega01_0: f64,
    pub omega20_0: f64,
    /// Ground level frequency; gauge-fixed to 0 by default.
    pub omega00: f64,
    pub v1: f64,
    pub v2: f64,
}

impl ModelParams {
    /// Committed parameter set for photon-pair generation (`v1 = v2`).
    ///
    /// Diabatic energies `E1 = ωa`, `E2 = ω01(t)`, `E3 = ω20(t)`, `E4 = 2ωb`:
    /// `E2` rises through `E1`, meets the falling `E3`, and `E3` then passes
    /// `E1` and reaches `E4`. Each coupled crossing is slow enough to be
    /// adiabatic, and the uncoupled `E3`/`E1` crossing happens with `E2` far
    /// above, which keeps the second-order leak back into state 1 small.
    pub fn pair_generation() -> Self {
        Self {
            omega: 1.0,
            omega_a: 0.05,
            omega_b: 0.05,
            freq_a: 41.0,
            freq_b: 20.25,
            omega01_0: 40.0,
            omega20_0: 80.0,
            omega00: 0.0,
            v1: 6.25e-5,
            v2: 6.25e-5,
        }
    }

    /// Committed parameter set for entanglement transfer (`v1 = 2 v2`).
    ///
    /// `E2` starts below `E1` and sweeps up through it while `E3` starts above
    /// `E4` and sweeps down through it, both crossings at the same time. `E2`
    /// stays above `E3` throughout, so the strong `Ω` coupling never becomes
    /// resonant.
    pub fn transfer() -> Self {
        Self {
            omega: 1.0,
            omega_a: 0.05,
            omega_b: 0.05,
            freq_a: 23.75,
            freq_b: 4.53125,
            omega01_0: 20.0,
            omega20_0: 10.0,
            omega00: 0.0,
            v1: 1.25e-4,
            v2: 6.25e-5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("Omega", self.omega),
            ("Omega_a", self.omega_a),
            ("Omega_b", self.omega_b),
            ("omega_a", self.freq_a),
            ("omega_b", self.freq_b),
            ("omega01_0", self.omega01_0),
            ("omega20_0", self.omega20_0),
            ("omega00", self.omega00),
            ("v1", self.v1),
            ("v2", self.v2),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite, got {v}")));
            }
        }
        // Ω = 0 is admitted so that the uncoupled limit can be run directly.
        if self.omega < 0.0 || self.omega_a < 0.0 || self.omega_b < 0.0 {
            return Err(Error::InvalidParams(format!(
                "couplings must be non-negative, got Omega = {}, Omega_a = {}, Omega_b = {}",
                self.omega, self.omega_a, self.omega_b
            )));
        }
        if self.v1 < 0.0 || self.v2 < 0.0 {
            return Err(Error::InvalidParams(format!(
                "chirp rates must be non-negative, got v1 = {}, v2 = {}",
                self.v1, self.v2
            )));
        }
        Ok(())
    }

    pub fn r01(&self, t: f64) -> f64 {
        phase_r(self.omega01_0, self.v1, t, Direction::Up)
    }

    pub fn r20(&self, t: f64) -> f64 {
        phase_r(self.omega20_0, self.v2, t, Direction::Down)
    }

    /// `(φa, φΩ, φb)` at time `t`. The linear and quadratic parts are grouped
    /// before evaluation so that large `ω t` terms cancel exactly.
    pub fn phases(&self, t: f64) -> (f64, f64, f64) {
        let t2 = 0.5 * t * t;
        let phi_a = (self.omega00 + self.freq_a - self.omega01_0) * t - self.omega01_0 * self.v1 * t2;
        let phi_o = (self.omega01_0 - self.omega20_0) * t + (self.omega01_0 * self.v1 + self.omega20_0 * self.v2) * t2;
        let phi_b = (self.omega00 + 2.0 * self.freq_b - self.omega20_0) * t + self.omega20_0 * self.v2 * t2;
        (phi_a, phi_o, phi_b)
    }

    /// Diabatic energies `(E1, E2, E3, E4)` of the four basis states.
    pub fn diabatic_energies(&self, t: f64) -> [f64; 4] {
        [
            self.omega00 + self.freq_a,
            chirped_frequency(self.omega01_0, self.v1, t, Direction::Up),
            chirped_frequency(self.omega20_0, self.v2, t, Direction::Down),
            self.omega00 + 2.0 * self.freq_b,
        ]
    }

    /// Times at which neighbouring diabatic energies cross, if they do for
    /// `t > 0`: `(E1/E2, E2/E3, E3/E4)`.
    pub fn diabatic_crossings(&self) -> [Option<f64>; 3] {
        let [e1, _, _, e4] = self.diabatic_energies(0.0);
        let solve = |num: f64, rate: f64| if rate > 0.0 && num / rate > 0.0 { Some(num / rate) } else { None };
        [
            solve(e1 - self.omega01_0, self.omega01_0 * self.v1),
            solve(self.omega20_0 - self.omega01_0, self.omega01_0 * self.v1 + self.omega20_0 * self.v2),
            solve(self.omega20_0 - e4, self.omega20_0 * self.v2),
        ]
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::pair_generation()
    }
}

/// `M(t)` with `dc/dt = −i M c`.
pub fn coupling_matrix(t: f64, p: &ModelParams) -> [[C64; 4]; 4] {
    let (phi_a, phi_o, phi_b) = p.phases(t);
    let ea = C64::from_polar(p.omega_a, phi_a);
    let eo = C64::from_polar(p.omega, phi_o);
    let eb = C64::from_polar(SQRT_2 * p.omega_b, phi_b);
    let z = C64::new(0.0, 0.0);
    [[z, ea, z, z], [ea.conj(), z, eo, z], [z, eo.conj(), z, eb.conj()], [z, z, eb, z]]
}

/// Right-hand side `dc/dt`.
pub fn rhs(t: f64, c: &Amplitudes, p: &ModelParams) -> Amplitudes {
    Amplitudes(rhs_raw(t, &c.0, p))
}

fn rhs_raw(t: f64, c: &[C64; 4], p: &ModelParams) -> [C64; 4] {
    let m = coupling_matrix(t, p);
    let mi = C64::new(0.0, -1.0);
    [
        mi * (m[0][1] * c[1]),
        mi * (m[1][0] * c[0] + m[1][2] * c[2]),
        mi * (m[2][1] * c[1] + m[2][3] * c[3]),
        mi * (m[3][2] * c[2]),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub amplitudes: Vec<Amplitudes>,
    /// `|‖c‖² − 1|` at each sample.
    pub norm_drift: Vec<f64>,
    pub stats: IntegratorStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &Amplitudes)> {
        Some((*self.times.last()?, self.amplitudes.last()?))
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.norm_drift.iter().copied().fold(0.0, f64::max)
    }

    /// Population series of basis state `k` (0-based).
    pub fn population(&self, k: usize) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.0[k].norm_sqr()).collect()
    }
}

/// Integrate the amplitude equations from `t = 0` to `t_end`.
///
/// No renormalization is applied. A sample whose norm drift exceeds
/// `cfg.sample_drift_bound` aborts with [`Error::Stability`]; so does a final
/// drift above `cfg.final_drift_bound`.
pub fn integrate(c0: &Amplitudes, p: &ModelParams, t_end: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    p.validate()?;
    cfg.validate()?;
    c0.check_normalized(crate::state::NORM_TOL)?;
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!("t_end must be positive, got {t_end}")));
    }
    let mut traj =
        Trajectory { times: Vec::new(), amplitudes: Vec::new(), norm_drift: Vec::new(), stats: Default::default() };
    let stats = integrate_sampled(
        |t, c| rhs_raw(t, c, p),
        0.0,
        c0.0,
        t_end,
        cfg,
        |t, c| {
            let amp = Amplitudes(*c);
            let drift = amp.norm_drift();
            if !(drift <= cfg.sample_drift_bound) {
                return Err(Error::Stability { t, drift, bound: cfg.sample_drift_bound });
            }
            traj.times.push(t);
            traj.amplitudes.push(amp);
            traj.norm_drift.push(drift);
            Ok(())
        },
    )?;
    traj.stats = stats;
    let final_drift = *traj.norm_drift.last().expect("at least one sample");
    if final_drift > cfg.final_drift_bound {
        return Err(Error::Stability { t: t_end, drift: final_drift, bound: cfg.final_drift_bound });
    }
    Ok(traj)
}
