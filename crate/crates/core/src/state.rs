//! The four-state support of the SQUID + field system and its two-level
//! factor decomposition.

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance on `|‖c‖² − 1|` for an amplitude vector to count as
/// normalized.
pub const NORM_TOL: f64 = 1e-9;

/// Interaction-picture amplitudes over the ordered basis
///
/// 1. `|1⟩_a |0⟩_b |0∥ 0⊥⟩` (incident photon, SQUID in ground level)
/// 2. `|0⟩_a |0⟩_b |0∥ 1⊥⟩`
/// 3. `|0⟩_a |0⟩_b |2∥ 0⊥⟩`
/// 4. `|0⟩_a |2⟩_b |0∥ 0⊥⟩` (photon pair emitted, SQUID back in ground level)
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Amplitudes(pub [C64; 4]);

impl Amplitudes {
    pub const DIM: usize = 4;

    pub fn new(c1: C64, c2: C64, c3: C64, c4: C64) -> Self {
        Self([c1, c2, c3, c4])
    }

    /// Single basis state `k` (0-based).
    pub fn basis(k: usize) -> Self {
        let mut c = [C64::new(0.0, 0.0); 4];
        c[k] = C64::new(1.0, 0.0);
        Self(c)
    }

    /// One photon in mode a, SQUID in `|0∥ 0⊥⟩`.
    pub fn single_photon() -> Self {
        Self::basis(0)
    }

    /// Equal superposition of `|0∥ 1⊥⟩` and `|2∥ 0⊥⟩` with the field in vacuum.
    pub fn squid_bell() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(C64::new(0.0, 0.0), C64::new(h, 0.0), C64::new(h, 0.0), C64::new(0.0, 0.0))
    }

    /// `(|1⟩_a|0⟩_b + |0⟩_a|2⟩_b) |0∥ 0⊥⟩ / √2`, the end point of the
    /// entanglement-transfer protocol.
    pub fn field_bell() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(C64::new(h, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(h, 0.0))
    }

    /// `Σ |c_k|²`.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm_drift(&self) -> f64 {
        (self.norm() - 1.0).abs()
    }

    pub fn populations(&self) -> [f64; 4] {
        self.0.map(|c| c.norm_sqr())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > tol || !norm.is_finite() {
            return Err(Error::Normalization { norm, tol });
        }
        Ok(())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Amplitudes) -> C64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|⟨target|self⟩|²`.
    pub fn fidelity(&self, target: &Amplitudes) -> f64 {
        target.inner(self).norm_sqr()
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|c| c.conj()))
    }
}

impl From<[C64; 4]> for Amplitudes {
    fn from(c: [C64; 4]) -> Self {
        Self(c)
    }
}

/// Two-level factors of the global basis.
///
/// Each of the four populated basis states is labelled by one bit per factor:
///
/// | state | A | B | P | T |
/// |-------|---|---|---|---|
/// | 1     | 1 | 0 | 0 | 0 |
/// | 2     | 0 | 0 | 0 | 1 |
/// | 3     | 0 | 0 | 1 | 0 |
/// | 4     | 0 | 1 | 0 | 0 |
///
/// Under this labelling the field reduction `(A, B)` and the SQUID reduction
/// `(T, P)` are ordinary partial traces.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Factor {
    /// Photon occupancy of mode a, `{0, 1}`.
    A,
    /// Pair occupancy of mode b, `{0 photons, 2 photons}`.
    B,
    /// Parallel SQUID mode, `{0∥, 2∥}`.
    P,
    /// Transverse SQUID mode, `{0⊥, 1⊥}`.
    T,
}

const LABELS: [[u8; 4]; 4] = [
    // A  B  P  T
    [1, 0, 0, 0],
    [0, 0, 0, 1],
    [0, 0, 1, 0],
    [0, 1, 0, 0],
];

impl Factor {
    pub const ALL: [Factor; 4] = [Factor::A, Factor::B, Factor::P, Factor::T];

    fn index(self) -> usize {
        match self {
            Factor::A => 0,
            Factor::B => 1,
            Factor::P => 2,
            Factor::T => 3,
        }
    }

    /// Bit carried by basis state `state` (0-based) on this factor.
    pub fn bit(self, state: usize) -> u8 {
        LABELS[state][self.index()]
    }

    /// Four-bit `(A, B, P, T)` label of a basis state.
    pub fn label(state: usize) -> [u8; 4] {
        LABELS[state]
    }

    pub fn name(self) -> &'static str {
        match self {
            Factor::A => "A",
            Factor::B => "B",
            Factor::P => "P",
            Factor::T => "T",
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Factor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Factor::A),
            "B" | "b" => Ok(Factor::B),
            "P" | "p" => Ok(Factor::P),
            "T" | "t" => Ok(Factor::T),
            other => Err(Error::InvalidArgument(format!("unknown factor `{other}`"))),
        }
    }
}
