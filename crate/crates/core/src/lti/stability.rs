use nalgebra::DMatrix;
use num_complex::Complex64;

pub const DEFAULT_MARGIN: f64 = 1e-6;

/// Spectrum of `a`. The matrix is diagonally balanced first: the Schur
/// iteration returns spurious right-half-plane roots for high-order
/// companion forms without it.
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<Complex64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let d = super::h2::balance_scaling(a);
    let b = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * d[j] / d[i]);
    b.complex_eigenvalues().iter().copied().collect()
}

/// Largest real part over the spectrum; `-inf` for an empty matrix, `+inf`
/// if the matrix contains non-finite entries.
pub fn max_real_eig(a: &DMatrix<f64>) -> f64 {
    if a.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    eigenvalues(a)
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// True iff every eigenvalue has real part below `-margin`.
pub fn is_hurwitz(a: &DMatrix<f64>, margin: f64) -> bool {
    max_real_eig(a) < -margin
}

/// Damping ratio `-Re λ / |λ|`.
pub fn damping_ratio(l: Complex64) -> f64 {
    let m = l.norm();
    if m == 0.0 {
        return 0.0;
    }
    -l.re / m
}

/// The eigenvalue (upper half-plane) closest to `j·omega`.
pub fn mode_near(a: &DMatrix<f64>, omega: f64) -> Option<Complex64> {
    let target = Complex64::new(0.0, omega);
    eigenvalues(a)
        .into_iter()
        .filter(|l| l.im > 0.0)
        .min_by(|x, y| (x - target).norm().total_cmp(&(y - target).norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_cases() {
        assert!(is_hurwitz(&DMatrix::from_element(1, 1, -1.0), DEFAULT_MARGIN));
        assert!(!is_hurwitz(&DMatrix::from_element(1, 1, 0.0), DEFAULT_MARGIN));
    }

    #[test]
    fn margin_is_strict() {
        let a = DMatrix::from_element(1, 1, -1e-7);
        assert!(!is_hurwitz(&a, DEFAULT_MARGIN));
        assert!(is_hurwitz(&a, 0.0));
    }

    #[test]
    fn oscillator_mode() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -4.0, -0.4]);
        let l = mode_near(&a, 2.0).unwrap();
        assert!((damping_ratio(l) - 0.1).abs() < 1e-12);
    }
}
