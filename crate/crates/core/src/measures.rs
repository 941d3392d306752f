//! Entanglement and coherence measures on two-factor reduced states.

use nalgebra::{Matrix4, SVD};
use num_complex::Complex64 as C64;

use crate::density::PairDensityMatrix;
use crate::error::{Error, Result};
use crate::state::Amplitudes;

/// Eigenvalues of ρ below this are treated as exact zeros when forming √ρ.
/// Without it, rounding-level eigenvalues (~1e-17) turn into ~3e-9 errors in
/// the concurrence of rank-deficient states.
pub const RANK_TOL: f64 = 1e-14;

/// Negative R eigenvalues down to this magnitude are rounding noise.
pub const R_NOISE_TOL: f64 = 1e-10;

/// Below this an R eigenvalue signals a corrupted density matrix.
pub const R_INVALID_TOL: f64 = 1e-8;

const CONCURRENCE_SLACK: f64 = 1e-12;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `σ_y ⊗ σ_y` in the canonical basis: antidiagonal `(−1, +1, +1, −1)`.
pub fn spin_flip_operator() -> Matrix4<C64> {
    let mut y = Matrix4::zeros();
    y[(0, 3)] = c(-1.0);
    y[(1, 2)] = c(1.0);
    y[(2, 1)] = c(1.0);
    y[(3, 0)] = c(-1.0);
    y
}

/// `R = ρ (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)`, conjugation entrywise.
pub fn r_matrix(rho: &PairDensityMatrix) -> Matrix4<C64> {
    let y = spin_flip_operator();
    let m = rho.to_matrix();
    m * y * m.map(|z| z.conj()) * y
}

fn check_r_eigenvalue(lambda: f64) -> Result<f64> {
    if lambda < -R_INVALID_TOL {
        return Err(Error::NumericalValidity(format!("eigenvalue {lambda:e} of R is negative beyond rounding")));
    }
    Ok(if (-R_NOISE_TOL..0.0).contains(&lambda) { 0.0 } else { lambda.max(0.0) })
}

/// Square roots of the eigenvalues of `R`, descending.
///
/// Computed through the Hermitian equivalent: with `A = √ρ`, the eigenvalues
/// of `R` are the squared singular values of `A (σ_y⊗σ_y) A*`, so their
/// square roots come straight out of an SVD without squaring and
/// un-squaring.
pub fn sqrt_r_eigenvalues(rho: &PairDensityMatrix) -> Result<[f64; 4]> {
    let m = rho.to_matrix();
    let herm = (m + m.adjoint()) * c(0.5);
    let eig = herm.symmetric_eigen();
    let mut sqrt_diag = Matrix4::<C64>::zeros();
    for k in 0..4 {
        let mu = eig.eigenvalues[k];
        if mu < -R_INVALID_TOL {
            return Err(Error::NumericalValidity(format!(
                "density matrix eigenvalue {mu:e} is negative beyond rounding"
            )));
        }
        sqrt_diag[(k, k)] = c(if mu > RANK_TOL { mu.sqrt() } else { 0.0 });
    }
    let v = &eig.eigenvectors;
    let sqrt_rho = v * sqrt_diag * v.adjoint();
    let b = sqrt_rho * spin_flip_operator() * sqrt_rho.map(|z| z.conj());
    let svd = SVD::new(b, false, false);
    let mut s = [svd.singular_values[0], svd.singular_values[1], svd.singular_values[2], svd.singular_values[3]];
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Eigenvalues of `R` from a general (non-Hermitian) complex eigensolver,
/// descending. Independent of [`sqrt_r_eigenvalues`]; used as a cross-check.
pub fn r_eigenvalues_general(rho: &PairDensityMatrix) -> Result<[f64; 4]> {
    let r = r_matrix(rho);
    let ev =
        r.eigenvalues().ok_or_else(|| Error::NumericalValidity("Schur decomposition of R did not converge".into()))?;
    let mut out = [0.0; 4];
    for (k, z) in ev.iter().enumerate() {
        if z.im.abs() > R_INVALID_TOL {
            return Err(Error::NumericalValidity(format!("R has complex eigenvalue {z}")));
        }
        out[k] = check_r_eigenvalue(z.re)?;
    }
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

/// Wootters concurrence `max(0, √λ₁ − √λ₂ − √λ₃ − √λ₄)`.
pub fn concurrence(rho: &PairDensityMatrix) -> Result<f64> {
    let s = sqrt_r_eigenvalues(rho)?;
    let value = s[0] - s[1] - s[2] - s[3];
    Ok(value.clamp(0.0, 1.0))
}

/// Entanglement of formation as a function of concurrence,
/// `−x₊ log₂ x₊ − x₋ log₂ x₋` with `x± = (1 ± √(1 − C²))/2`.
pub fn eof_from_concurrence(concurrence: f64) -> Result<f64> {
    if !(-CONCURRENCE_SLACK..=1.0 + CONCURRENCE_SLACK).contains(&concurrence) || concurrence.is_nan() {
        return Err(Error::InvalidArgument(format!("concurrence {concurrence} outside [0, 1]")));
    }
    let cc = concurrence.clamp(0.0, 1.0);
    if cc == 0.0 {
        return Ok(0.0);
    }
    let root = (1.0 - cc * cc).sqrt();
    let term = |x: f64| if x <= 0.0 { 0.0 } else { x * x.log2() };
    let e = -term((1.0 + root) / 2.0) - term((1.0 - root) / 2.0);
    Ok(e.clamp(0.0, 1.0))
}

pub fn entanglement_of_formation(rho: &PairDensityMatrix) -> Result<f64> {
    eof_from_concurrence(concurrence(rho)?)
}

/// l1-norm of coherence in the canonical product basis: sum of magnitudes of
/// the off-diagonal entries.
pub fn l1_coherence(rho: &PairDensityMatrix) -> f64 {
    let d = rho.data();
    let mut total = 0.0;
    for (i, row) in d.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            if i != j {
                total += z.norm();
            }
        }
    }
    total
}

pub fn populations(c: &Amplitudes) -> [f64; 4] {
    c.populations()
}
