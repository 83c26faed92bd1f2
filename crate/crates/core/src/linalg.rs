//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DVector, Dyn};

use crate::error::{Error, Result};
use crate::scalar::{creal, lit, CMat, Real};

/// Condition number above which a Hermitian matrix is regularized before
/// factorization.
pub const CONDITION_LIMIT: f64 = 1e12;

pub fn identity<T: Real>(n: usize) -> CMat<T> {
    CMat::<T>::identity(n, n)
}

/// `(m + mᴴ) / 2`.
pub fn hermitian_part<T: Real>(m: &CMat<T>) -> CMat<T> {
    let half = creal(lit::<T>(0.5));
    (m + m.adjoint()) * half
}

/// Real part of the trace.
pub fn trace_re<T: Real>(m: &CMat<T>) -> T {
    let mut acc = T::zero();
    for i in 0..m.nrows().min(m.ncols()) {
        acc += m[(i, i)].re;
    }
    acc
}

/// `Re Tr(aᴴ b)`, the real Frobenius inner product.
pub fn re_inner<T: Real>(a: &CMat<T>, b: &CMat<T>) -> T {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (x, y)| acc + x.re * y.re + x.im * y.im)
}

/// Squared Frobenius norm.
pub fn fro2<T: Real>(m: &CMat<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues<T: Real>(m: &CMat<T>) -> DVector<T> {
    let h = hermitian_part(m);
    let mut ev = h.symmetric_eigenvalues();
    ev.as_mut_slice()
        .sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

/// Cholesky factor of a Hermitian positive-definite matrix.
pub struct HpdFactor<T: Real> {
    chol: Cholesky<nalgebra::Complex<T>, Dyn>,
}

impl<T: Real> HpdFactor<T> {
    /// Factors `m` (its Hermitian part), adding `floor·I` first when the
    /// condition number exceeds [`CONDITION_LIMIT`].
    pub fn new(m: &CMat<T>, floor: T, what: &str) -> Result<Self> {
        let mut h = hermitian_part(m);
        let ev = hermitian_eigenvalues(&h);
        let n = h.nrows();
        if n > 0 {
            let lo = ev[0];
            let hi = ev[n - 1];
            if lo + floor <= T::zero() {
                return Err(Error::Singularity(what.to_string()));
            }
            if lo <= T::zero() || hi > lo * lit::<T>(CONDITION_LIMIT) {
                for i in 0..n {
                    h[(i, i)].re += floor;
                }
            }
        }
        let chol = Cholesky::new(h).ok_or_else(|| Error::Singularity(what.to_string()))?;
        Ok(Self { chol })
    }

    pub fn solve(&self, b: &CMat<T>) -> CMat<T> {
        self.chol.solve(b)
    }

    pub fn inverse(&self) -> CMat<T> {
        hermitian_part(&self.chol.inverse())
    }

    /// `ln det` of the factored matrix.
    pub fn log_det(&self) -> T {
        let l = self.chol.l_dirty();
        let mut acc = T::zero();
        for i in 0..l.nrows() {
            acc += l[(i, i)].re.ln();
        }
        acc * lit(2.0)
    }

    /// `L⁻¹ s L⁻ᴴ` for Hermitian `s`, the whitened form of `s`.
    pub fn whiten(&self, s: &CMat<T>) -> CMat<T> {
        let l = self.chol.l();
        let y = l
            .solve_lower_triangular(s)
            .expect("Cholesky factor has a nonzero diagonal");
        let m = l
            .solve_lower_triangular(&y.adjoint())
            .expect("Cholesky factor has a nonzero diagonal");
        hermitian_part(&m)
    }
}

/// `ln det(I + D⁻¹ S)` given the factor of `D` and Hermitian PSD `S`.
pub fn log_det_i_plus<T: Real>(d: &HpdFactor<T>, s: &CMat<T>) -> T {
    let m = d.whiten(s);
    let n = m.nrows();
    let shifted = &m + identity::<T>(n);
    match Cholesky::new(shifted) {
        Some(c) => {
            let l = c.l_dirty();
            let mut acc = T::zero();
            for i in 0..n {
                acc += l[(i, i)].re.ln();
            }
            acc * lit(2.0)
        }
        None => {
            // S slightly indefinite from rounding: clip eigenvalues at zero.
            let ev = hermitian_eigenvalues(&m);
            ev.iter()
                .fold(T::zero(), |acc, &mu| acc + (T::one() + mu.max(T::zero())).ln())
        }
    }
}

/// Product `a · b · aᴴ`.
pub fn sandwich<T: Real>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    a * b * a.adjoint()
}

/// Gram matrix `a · aᴴ`.
pub fn gram<T: Real>(a: &CMat<T>) -> CMat<T> {
    a * a.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    #[test]
    fn log_det_matches_eigen_route() {
        let d = CMat::<f64>::from_row_slice(
            2,
            2,
            &[cx(2.0, 0.0), cx(0.3, 0.1), cx(0.3, -0.1), cx(1.5, 0.0)],
        );
        let s = CMat::<f64>::from_row_slice(
            2,
            2,
            &[cx(1.0, 0.0), cx(0.2, -0.4), cx(0.2, 0.4), cx(0.7, 0.0)],
        );
        let f = HpdFactor::new(&d, 1e-12, "d").unwrap();
        let direct = log_det_i_plus(&f, &s);
        let m = identity::<f64>(2) + f.solve(&s);
        let det = m.determinant();
        assert!((direct - det.re.ln()).abs() < 1e-12);
        assert!(det.im.abs() < 1e-12);
    }

    #[test]
    fn ill_conditioned_matrix_is_regularized() {
        let d = CMat::<f64>::from_diagonal(&DVector::from_vec(vec![
            cx(1.0, 0.0),
            cx(1e-14, 0.0),
        ]));
        let f = HpdFactor::new(&d, 1e-12, "d").unwrap();
        let inv = f.inverse();
        assert!((inv[(1, 1)].re - 1.0 / (1e-14 + 1e-12)).abs() / inv[(1, 1)].re < 1e-9);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let d = CMat::<f64>::from_diagonal(&DVector::from_vec(vec![
            cx(1.0, 0.0),
            cx(-1.0, 0.0),
        ]));
        assert!(matches!(
            HpdFactor::new(&d, 1e-12, "d"),
            Err(Error::Singularity(_))
        ));
    }
}
