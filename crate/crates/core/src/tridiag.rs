//! Thomas algorithm for tridiagonal systems.

/// Solves `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]` in place,
/// leaving the solution in `rhs`. `lower[0]` and `upper[n-1]` are ignored.
/// `scratch` must have the same length as `rhs`.
///
/// No pivoting: the caller is responsible for a nonsingular leading-minor
/// sequence (diagonally dominant or M-matrix systems are fine).
pub fn solve_in_place(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &mut [f64],
    scratch: &mut [f64],
) {
    let n = rhs.len();
    debug_assert!(lower.len() == n && diag.len() == n && upper.len() == n && scratch.len() == n);
    if n == 0 {
        return;
    }
    scratch[0] = upper[0] / diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let den = diag[i] - lower[i] * scratch[i - 1];
        scratch[i] = upper[i] / den;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / den;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
}
