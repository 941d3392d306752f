//! Two-factor reduced density matrices.
//!
//! A [`PairDensityMatrix`] is stored over the product basis of its two retained
//! factors `(first, second)`, with row/column index `bit(first) + 2·bit(second)`:
//!
//! | index | first | second |
//! |-------|-------|--------|
//! | 0     | 0     | 0      |
//! | 1     | 1     | 0      |
//! | 2     | 0     | 1      |
//! | 3     | 1     | 1      |
//!
//! With this layout `partial_trace(c, (A, B))` is entrywise the field matrix
//! over `{|0_a 0_b⟩, |1_a 0_b⟩, |0_a 2_b⟩, |1_a 2_b⟩}` and
//! `partial_trace(c, (T, P))` is the SQUID matrix over
//! `{|0∥0⊥⟩, |0∥1⊥⟩, |2∥0⊥⟩, |2∥1⊥⟩}`. The `|11⟩` row and column are kept even
//! though the dynamics never populates them.

use nalgebra::Matrix4;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{Amplitudes, Factor, NORM_TOL};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairDensityMatrix {
    factors: (Factor, Factor),
    data: [[C64; 4]; 4],
}

fn pair_index(first: u8, second: u8) -> usize {
    first as usize + 2 * second as usize
}

impl PairDensityMatrix {
    /// Validated constructor: Hermitian, unit trace and positive semidefinite
    /// within the module tolerances.
    pub fn new(factors: (Factor, Factor), data: [[C64; 4]; 4]) -> Result<Self> {
        if factors.0 == factors.1 {
            return Err(Error::InvalidArgument(format!(
                "retained factors must differ, got ({}, {})",
                factors.0, factors.1
            )));
        }
        let rho = Self { factors, data };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_parts_unchecked(factors: (Factor, Factor), data: [[C64; 4]; 4]) -> Self {
        Self { factors, data }
    }

    pub fn factors(&self) -> (Factor, Factor) {
        self.factors
    }

    pub fn data(&self) -> &[[C64; 4]; 4] {
        &self.data
    }

    /// Entry at 0-based `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row][col]
    }

    pub fn trace(&self) -> C64 {
        (0..4).map(|i| self.data[i][i]).sum()
    }

    pub fn to_matrix(&self) -> Matrix4<C64> {
        Matrix4::from_fn(|i, j| self.data[i][j])
    }

    pub fn from_matrix(factors: (Factor, Factor), m: &Matrix4<C64>) -> Result<Self> {
        let mut data = [[ZERO; 4]; 4];
        for (i, row) in data.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = m[(i, j)];
            }
        }
        Self::new(factors, data)
    }

    pub fn hermiticity_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                err = err.max((self.data[i][j] - self.data[j][i].conj()).norm());
            }
        }
        err
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let m = self.to_matrix();
        let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
        let eig = herm.symmetric_eigenvalues();
        let mut ev = [eig[0], eig[1], eig[2], eig[3]];
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        let mut p = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                p += (self.data[i][j] * self.data[j][i]).re;
            }
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!("not Hermitian: max|ρ − ρ†| = {herm:e}")));
        }
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} ≠ 1")));
        }
        let min = self.eigenvalues()[0];
        if min < -PSD_TOL {
            return Err(Error::InvalidDensityMatrix(format!("not positive semidefinite: smallest eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// Single-factor marginal, tracing out the other retained factor. The
    /// result is over `{|0⟩, |1⟩}` of `keep`.
    pub fn marginal(&self, keep: Factor) -> Result<[[C64; 2]; 2]> {
        let keep_first = if keep == self.factors.0 {
            true
        } else if keep == self.factors.1 {
            false
        } else {
            return Err(Error::InvalidArgument(format!(
                "factor {keep} is not retained in ({}, {})",
                self.factors.0, self.factors.1
            )));
        };
        let mut out = [[ZERO; 2]; 2];
        for a in 0..2u8 {
            for b in 0..2u8 {
                for other in 0..2u8 {
                    let (i, j) = if keep_first {
                        (pair_index(a, other), pair_index(b, other))
                    } else {
                        (pair_index(other, a), pair_index(other, b))
                    };
                    out[a as usize][b as usize] += self.data[i][j];
                }
            }
        }
        Ok(out)
    }

    /// Conjugate by a local unitary `U ⊗ V`, where `U` acts on the first
    /// retained factor and `V` on the second.
    pub fn local_unitary(&self, u: &[[C64; 2]; 2], v: &[[C64; 2]; 2]) -> Result<Self> {
        // first factor is the low bit
        let w = Matrix4::from_fn(|i, j| u[i & 1][j & 1] * v[i >> 1][j >> 1]);
        let m = w * self.to_matrix() * w.adjoint();
        Self::from_matrix(self.factors, &m)
    }
}

/// Reduced density matrix of `|ψ⟩⟨ψ|` over the two retained factors using the
/// default normalization tolerance.
pub fn partial_trace(c: &Amplitudes, keep: (Factor, Factor)) -> Result<PairDensityMatrix> {
    partial_trace_tol(c, keep, NORM_TOL)
}

/// As [`partial_trace`] with an explicit normalization tolerance. The result
/// is divided by `‖c‖²`, so integrator drift below `tol` does not leak into
/// the trace.
///
/// Only four global basis states carry amplitude, so the reduction is a sum
/// over the 16 pairs `(k, l)`: the pair contributes `c_k c_l*` at
/// `(index(k), index(l))` when `k` and `l` agree on both traced factors.
pub fn partial_trace_tol(c: &Amplitudes, keep: (Factor, Factor), tol: f64) -> Result<PairDensityMatrix> {
    let (x, y) = keep;
    if x == y {
        return Err(Error::InvalidArgument(format!("retained factors must differ, got ({x}, {y})")));
    }
    c.check_normalized(tol)?;
    let norm = c.norm();
    let traced: Vec<Factor> = Factor::ALL.into_iter().filter(|f| *f != x && *f != y).collect();

    let mut data = [[ZERO; 4]; 4];
    for k in 0..Amplitudes::DIM {
        for l in 0..Amplitudes::DIM {
            if traced.iter().any(|f| f.bit(k) != f.bit(l)) {
                continue;
            }
            let i = pair_index(x.bit(k), y.bit(k));
            let j = pair_index(x.bit(l), y.bit(l));
            data[i][j] += c.0[k] * c.0[l].conj() / norm;
        }
    }
    Ok(PairDensityMatrix::from_parts_unchecked(keep, data))
}
