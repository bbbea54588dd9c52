//! Small numeric building blocks shared across modules: a dense linear solver,
//! scalar root bracketing/bisection, and seed derivation for parallel work.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NumericError {
    #[error("linear system is singular or ill-conditioned (pivot {pivot:.3e})")]
    Singular { pivot: f64 },
    #[error("bisection bracket does not straddle a root")]
    BadBracket,
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
///
/// `a` is row-major, `n x n`. Returns an error when a pivot falls below
/// `n * max|A| * 1e-14`, which doubles as a cheap rank check for the
/// weighted least-squares systems built elsewhere in the crate.
pub fn solve_dense(a: &[f64], b: &[f64], n: usize) -> Result<Vec<f64>, NumericError> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    let tol = scale * (n as f64) * 1e-14;

    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if m[row * n + col].abs() > m[piv * n + col].abs() {
                piv = row;
            }
        }
        let pval = m[piv * n + col];
        if pval.abs() <= tol {
            return Err(NumericError::Singular { pivot: pval });
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            rhs.swap(col, piv);
        }
        for row in col + 1..n {
            let f = m[row * n + col] / m[col * n + col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[row * n + k] -= f * m[col * n + k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= m[row * n + k] * x[k];
        }
        x[row] = acc / m[row * n + row];
    }
    Ok(x)
}

/// Bisect a monotone function until the bracket shrinks below `tol` (absolute).
///
/// `f(lo)` and `f(hi)` must have opposite signs (zero counts as either side).
pub fn bisect(
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    f: impl Fn(f64) -> f64,
) -> Result<f64, NumericError> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(NumericError::BadBracket);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Derive a per-item seed from a base seed and an index (splitmix64 step).
///
/// Used to hand independent, reproducible RNG streams to parallel work items.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9e3779b97f4a7c15)
        .wrapping_add(index.wrapping_mul(0xbf58476d1ce4e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
