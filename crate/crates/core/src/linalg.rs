//! Small dense-matrix tests: spectral radius and the P-matrix property.
//!
//! Nonnegative matrices go through a shifted power iteration that brackets the
//! Perron root with Collatz–Wielandt bounds; anything else (or a bracket that
//! fails to close) falls back to a dense eigen-solve.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative width at which the Perron bracket is accepted.
const PERRON_TOL: f64 = 1e-12;
const PERRON_MAX_ITER: usize = 10_000;

/// Largest size for which the general P-matrix test enumerates minors.
pub const MAX_ENUMERATION_SIZE: usize = 20;

fn check_square(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::usage(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

pub fn is_nonnegative(m: &DMatrix<f64>) -> bool {
    m.iter().all(|&v| v >= 0.0)
}

/// Nonpositive off-diagonal entries.
pub fn is_z_matrix(m: &DMatrix<f64>) -> bool {
    m.nrows() == m.ncols()
        && (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] <= 0.0))
}

/// Lower and upper bounds on the Perron root of a nonnegative matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PerronBracket {
    lower: f64,
    upper: f64,
}

/// Runs the shifted power iteration until `stop` accepts the bracket or the
/// iteration cap is hit. Returns the last bracket and whether `stop` fired.
fn perron_bracket(a: &DMatrix<f64>, mut stop: impl FnMut(PerronBracket) -> bool) -> (PerronBracket, bool) {
    let n = a.nrows();
    let mut x = nalgebra::DVector::from_element(n, 1.0);
    let row_max = a.row_iter().map(|r| r.sum()).fold(0.0, f64::max);
    if row_max == 0.0 {
        let b = PerronBracket { lower: 0.0, upper: 0.0 };
        return (b, true);
    }
    // The shift breaks the ±ρ cycling of periodic matrices and keeps x > 0.
    let shift = 0.5 * row_max;
    let mut bracket = PerronBracket {
        lower: 0.0,
        upper: row_max,
    };
    for _ in 0..PERRON_MAX_ITER {
        let ax = a * &x;
        let mut lower = f64::INFINITY;
        let mut upper = 0.0_f64;
        for i in 0..n {
            let r = ax[i] / x[i];
            lower = lower.min(r);
            upper = upper.max(r);
        }
        bracket = PerronBracket {
            lower: lower.max(bracket.lower),
            upper: upper.min(bracket.upper),
        };
        if stop(bracket) {
            return (bracket, true);
        }
        let mut next = ax + &x * shift;
        let norm = next.max();
        if !(norm > 0.0 && norm.is_finite()) {
            break;
        }
        next /= norm;
        if next.iter().any(|&v| v <= 0.0) {
            break;
        }
        x = next;
    }
    (bracket, false)
}

fn dense_spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Maximum absolute eigenvalue.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    let n = check_square(m)?;
    if n == 0 {
        return Ok(0.0);
    }
    if is_nonnegative(m) {
        let (b, ok) = perron_bracket(m, |b| b.upper - b.lower <= PERRON_TOL * b.upper);
        if ok {
            return Ok(0.5 * (b.lower + b.upper));
        }
    }
    Ok(dense_spectral_radius(m))
}

/// Decides `ρ(a) < 1` for a nonnegative matrix. The bracket usually settles
/// the verdict long before it is tight.
pub fn spectral_radius_below_one(a: &DMatrix<f64>) -> Result<bool> {
    let n = check_square(a)?;
    if n == 0 {
        return Ok(true);
    }
    if !is_nonnegative(a) {
        return Ok(dense_spectral_radius(a) < 1.0);
    }
    let (b, ok) = perron_bracket(a, |b| {
        b.upper < 1.0 || b.lower >= 1.0 || b.upper - b.lower <= PERRON_TOL * b.upper
    });
    if ok {
        if b.upper < 1.0 {
            return Ok(true);
        }
        if b.lower >= 1.0 {
            return Ok(false);
        }
        return Ok(0.5 * (b.lower + b.upper) < 1.0);
    }
    Ok(dense_spectral_radius(a) < 1.0)
}

/// Normalized off-diagonal part `D⁻¹N` of a Z-matrix `A = D − N` with
/// positive diagonal `D`.
pub fn jacobi_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { -m[(i, j)] / m[(i, i)] })
}

/// True iff every principal minor is positive.
///
/// Z-matrices use the M-matrix characterization (positive diagonal and
/// `ρ(D⁻¹N) < 1`), which is exact. Other matrices are enumerated up to
/// [`MAX_ENUMERATION_SIZE`].
pub fn is_p_matrix(m: &DMatrix<f64>) -> Result<bool> {
    let n = check_square(m)?;
    if is_z_matrix(m) {
        if (0..n).any(|i| !(m[(i, i)] > 0.0)) {
            return Ok(false);
        }
        return spectral_radius_below_one(&jacobi_part(m));
    }
    if n > MAX_ENUMERATION_SIZE {
        return Err(Error::UnsupportedSize(format!(
            "general P-matrix test limited to {MAX_ENUMERATION_SIZE}x{MAX_ENUMERATION_SIZE}, got {n}x{n}"
        )));
    }
    all_principal_minors_positive(m)
}

/// Brute-force check over all `2^n − 1` principal minors.
pub fn all_principal_minors_positive(m: &DMatrix<f64>) -> Result<bool> {
    let n = check_square(m)?;
    if n > MAX_ENUMERATION_SIZE {
        return Err(Error::UnsupportedSize(format!("cannot enumerate minors of a {n}x{n} matrix")));
    }
    let mut idx = Vec::with_capacity(n);
    for mask in 1u32..(1u32 << n) {
        idx.clear();
        idx.extend((0..n).filter(|k| mask & (1 << k) != 0));
        let k = idx.len();
        let sub = DMatrix::from_fn(k, k, |r, c| m[(idx[r], idx[c])]);
        if !(sub.determinant() > 0.0) {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::usage("ragged matrix rows"));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}
