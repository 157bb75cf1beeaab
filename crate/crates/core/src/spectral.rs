//! Eigendecomposition of upper-triangular matrices by back substitution,
//! triangular inversion, and the chain-sum reference formulas.

use crate::error::{Error, Result};
use crate::scalar::{Matrix, Mode, Scalar};

/// Largest matrix the exponential chain-sum oracles accept.
pub const PATH_SUM_MAX: usize = 10;

/// Relative tolerance for treating two float eigenvalues as equal.
pub const FLOAT_DISTINCT_TOL: f64 = 1e-9;

/// `T = P D P^-1` with `P` unit upper triangular.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDecomposition<S> {
    pub eigenvalues: Vec<S>,
    pub p: Matrix<S>,
    pub p_inv: Matrix<S>,
}

impl<S: Scalar> SpectralDecomposition<S> {
    pub fn of(t: &Matrix<S>) -> Result<Self> {
        let (eigenvalues, p) = eigvecs_triangular(t)?;
        let p_inv = invert_triangular(&p)?;
        Ok(Self { eigenvalues, p, p_inv })
    }

    pub fn size(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `P D^i P^-1`.
    pub fn power(&self, i: u64) -> Result<Matrix<S>> {
        matrix_power_spectral(self, i)
    }
}

fn require_triangular<S: Scalar>(t: &Matrix<S>) -> Result<()> {
    if !t.is_square() {
        return Err(Error::Dimension("expected a square matrix".into()));
    }
    let tol = match S::MODE {
        Mode::Exact => 0.0,
        Mode::Float => 1e-10,
    };
    match t.first_subdiagonal_nonzero(tol) {
        Some((row, col)) => Err(Error::NotTriangular { row, col }),
        None => Ok(()),
    }
}

fn same_eigenvalue<S: Scalar>(a: &S, b: &S) -> bool {
    a.approx_eq(b, FLOAT_DISTINCT_TOL)
}

/// Eigenvalues (the diagonal) and the unit-diagonal modal matrix `P` of an
/// upper-triangular `t`.
///
/// Column `a` solves `(T - λ_a I) v = 0` upwards from `v^a = 1`. If a row
/// above has the same diagonal value the entry is set to zero when the
/// equation is already satisfied there, and rejected otherwise.
pub fn eigvecs_triangular<S: Scalar>(t: &Matrix<S>) -> Result<(Vec<S>, Matrix<S>)> {
    require_triangular(t)?;
    let n = t.rows();
    let lambda = t.diag();
    let mut p = Matrix::identity(n);
    for a in 0..n {
        for b in (0..a).rev() {
            let mut s = S::zero();
            let mut size = 0.0f64;
            for j in b + 1..=a {
                let v: &S = &p[(j, a)];
                if v.is_zero() || t[(b, j)].is_zero() {
                    continue;
                }
                let term = t[(b, j)].clone() * v.clone();
                size = size.max(term.magnitude());
                s = s + term;
            }
            if same_eigenvalue(&lambda[b], &lambda[a]) {
                if s.is_negligible(size, FLOAT_DISTINCT_TOL) {
                    continue;
                }
                return Err(Error::RepeatedEigenvalue {
                    value: lambda[a].render(),
                    first: b,
                    second: a,
                });
            }
            p[(b, a)] = -s / (lambda[b].clone() - lambda[a].clone());
        }
    }
    Ok((lambda, p))
}

/// Inverse of an upper-triangular matrix by column-wise back substitution.
pub fn invert_triangular<S: Scalar>(u: &Matrix<S>) -> Result<Matrix<S>> {
    require_triangular(u)?;
    let n = u.rows();
    let diag_inv = (0..n)
        .map(|i| u[(i, i)].recip().ok_or(Error::Singular { index: i }))
        .collect::<Result<Vec<_>>>()?;
    let mut x = Matrix::zeros(n, n);
    for j in 0..n {
        x[(j, j)] = diag_inv[j].clone();
        for i in (0..j).rev() {
            let mut s = S::zero();
            for l in i + 1..=j {
                if !u[(i, l)].is_zero() && !x[(l, j)].is_zero() {
                    s = s + u[(i, l)].clone() * x[(l, j)].clone();
                }
            }
            x[(i, j)] = -s * diag_inv[i].clone();
        }
    }
    Ok(x)
}

/// `P D^i P^-1`.
pub fn matrix_power_spectral<S: Scalar>(dec: &SpectralDecomposition<S>, i: u64) -> Result<Matrix<S>> {
    let powers: Vec<S> = dec.eigenvalues.iter().map(|l| l.powu(i)).collect();
    dec.p.mul(&Matrix::diagonal(&powers))?.mul(&dec.p_inv)
}

fn check_oracle_size<S: Scalar>(t: &Matrix<S>) -> Result<()> {
    if t.rows() > PATH_SUM_MAX {
        return Err(Error::SizeGuard(format!(
            "chain-sum oracle limited to {PATH_SUM_MAX}x{PATH_SUM_MAX}, got {}",
            t.rows()
        )));
    }
    require_triangular(t)
}

/// Calls `f` with every strictly increasing chain `from < .. < to`.
fn for_each_chain(from: usize, to: usize, mut f: impl FnMut(&[usize])) {
    let inner = to - from - 1;
    let mut chain = Vec::with_capacity(inner + 2);
    for mask in 0u32..(1 << inner) {
        chain.clear();
        chain.push(from);
        chain.extend((0..inner).filter(|b| mask & (1 << b) != 0).map(|b| from + 1 + b));
        chain.push(to);
        f(&chain);
    }
}

/// Entry `v_{lp1}^{l0}` of the eigenvector for `λ_{lp1}` as the signed sum
/// over increasing index chains `l0 -> .. -> lp1` of
/// `prod T_{l_j l_{j+1}} / (T_{l_j l_j} - λ_{lp1})`.
pub fn path_sum_eigvec_entry<S: Scalar>(t: &Matrix<S>, l0: usize, lp1: usize) -> Result<S> {
    check_oracle_size(t)?;
    if l0 > lp1 {
        return Ok(S::zero());
    }
    if l0 == lp1 {
        return Ok(S::one());
    }
    let lambda = t[(lp1, lp1)].clone();
    let mut acc = S::zero();
    let mut failed = None;
    for_each_chain(l0, lp1, |chain| {
        let mut term = S::one();
        for w in chain.windows(2) {
            let denom = t[(w[0], w[0])].clone() - lambda.clone();
            if denom.is_zero() {
                failed = Some(w[0]);
                return;
            }
            term = -(term * t[(w[0], w[1])].clone() / denom);
        }
        acc = acc.clone() + term;
    });
    match failed {
        Some(first) => Err(Error::RepeatedEigenvalue {
            value: lambda.render(),
            first,
            second: lp1,
        }),
        None => Ok(acc),
    }
}

/// Entry `(k, m)` of `U^-1` as `1/U_mm` times the signed chain sum of
/// `prod U_{l_j l_{j+1}} / U_{l_j l_j}`.
pub fn path_sum_inverse_entry<S: Scalar>(u: &Matrix<S>, k: usize, m: usize) -> Result<S> {
    check_oracle_size(u)?;
    if k > m {
        return Ok(S::zero());
    }
    let last = u[(m, m)].recip().ok_or(Error::Singular { index: m })?;
    if k == m {
        return Ok(last);
    }
    if let Some(index) = (k..m).find(|&i| u[(i, i)].is_zero()) {
        return Err(Error::Singular { index });
    }
    let mut acc = S::zero();
    for_each_chain(k, m, |chain| {
        let mut term = S::one();
        for w in chain.windows(2) {
            term = -(term * u[(w[0], w[1])].clone() / u[(w[0], w[0])].clone());
        }
        acc = acc.clone() + term;
    });
    Ok(acc * last)
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;
    use num_rational::BigRational;

    use super::*;
    use crate::scalar::q;

    fn mat(rows: &[&[i64]]) -> Matrix<BigRational> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| q(v, 1)).collect()).collect()).unwrap()
    }

    fn t35() -> Matrix<BigRational> {
        mat(&[
            &[1, 0, 0, 0, 0, 0],
            &[0, 2, 0, 87, 67, 13],
            &[0, 0, 3, -212, -164, -32],
            &[0, 0, 0, 4, 0, 0],
            &[0, 0, 0, 0, 6, 0],
            &[0, 0, 0, 0, 0, 9],
        ])
    }

    #[test]
    fn example_3_5_modal_matrix() {
        let dec = SpectralDecomposition::of(&t35()).unwrap();
        let col = |a: usize| (0..6).map(|b| dec.p[(b, a)].clone()).collect::<Vec<_>>();
        assert_eq!(col(3), vec![q(0, 1), q(87, 2), q(-212, 1), q(1, 1), q(0, 1), q(0, 1)]);
        assert_eq!(col(4)[1..3], [q(67, 4), q(-164, 3)]);
        assert_eq!(col(5)[1..3], [q(13, 7), q(-16, 3)]);
        let pi = &dec.p_inv;
        assert_eq!(pi[(1, 3)], q(-87, 2));
        assert_eq!(pi[(1, 4)], q(-67, 4));
        assert_eq!(pi[(1, 5)], q(-13, 7));
        assert_eq!(pi[(2, 3)], q(212, 1));
        assert_eq!(pi[(2, 4)], q(164, 3));
        assert_eq!(pi[(2, 5)], q(16, 3));
        let rebuilt = dec
            .p
            .mul(&Matrix::diagonal(&dec.eigenvalues))
            .unwrap()
            .mul(&dec.p_inv)
            .unwrap();
        assert_eq!(rebuilt, t35());
    }

    #[test]
    fn logistic_modal_entries() {
        // r = 2, N = 3
        let t = mat(&[&[1, 0, 0, 0], &[0, 2, -2, 0], &[0, 0, 4, -8], &[0, 0, 0, 8]]);
        let (_, p) = eigvecs_triangular(&t).unwrap();
        assert_eq!(p[(1, 2)], q(-1, 1));
        assert_eq!(p[(2, 3)], q(-2, 1));
        assert_eq!(p[(1, 3)], q(2, 3));
    }

    #[test]
    fn diagonal_gives_identity() {
        let d = Matrix::diagonal(&[q(1, 1), q(5, 1), q(-2, 1)]);
        assert_eq!(eigvecs_triangular(&d).unwrap().1, Matrix::identity(3));
        assert_eq!(
            invert_triangular(&Matrix::<BigRational>::identity(4)).unwrap(),
            Matrix::identity(4)
        );
    }

    #[test]
    fn repeated_eigenvalue_with_coupling_is_rejected() {
        // F = x^3 + 2x^2 + x unshifted, N = 3
        let t = mat(&[&[1, 0, 0, 0], &[0, 1, 2, 1], &[0, 0, 1, 4], &[0, 0, 0, 1]]);
        assert!(matches!(
            eigvecs_triangular(&t),
            Err(Error::RepeatedEigenvalue {
                first: 1,
                second: 2,
                ..
            })
        ));
    }

    #[test]
    fn repeated_eigenvalue_without_coupling_is_accepted() {
        let t = mat(&[&[1, 0, 0], &[0, 3, 5], &[0, 0, 1]]);
        let dec = SpectralDecomposition::of(&t).unwrap();
        assert_eq!(dec.p[(0, 2)], q(0, 1));
        assert_eq!(
            dec.power(4).unwrap(),
            crate::carleman::matrix_power_direct(&t, 4).unwrap()
        );
    }

    #[test]
    fn two_by_two_inverse() {
        let u = mat(&[&[2, 3], &[0, 5]]);
        let inv = invert_triangular(&u).unwrap();
        assert_eq!(
            inv,
            Matrix::from_rows(vec![vec![q(1, 2), q(-3, 10)], vec![q(0, 1), q(1, 5)]]).unwrap()
        );
        for (k, m) in [(0, 0), (0, 1), (1, 1), (1, 0)] {
            assert_eq!(path_sum_inverse_entry(&u, k, m).unwrap(), inv[(k, m)]);
        }
        assert!(matches!(
            invert_triangular(&mat(&[&[1, 1], &[0, 0]])),
            Err(Error::Singular { index: 1 })
        ));
    }

    #[test]
    fn chain_sums_match_back_substitution() {
        let t = t35();
        let (_, p) = eigvecs_triangular(&t).unwrap();
        assert_eq!(path_sum_eigvec_entry(&t, 1, 3).unwrap(), q(87, 2));
        assert_eq!(path_sum_eigvec_entry(&t, 4, 2).unwrap(), q(0, 1));
        assert_eq!(path_sum_eigvec_entry(&t, 2, 2).unwrap(), q(1, 1));
        let inv = invert_triangular(&p).unwrap();
        for a in 0..6 {
            for b in 0..6 {
                assert_eq!(path_sum_eigvec_entry(&t, a, b).unwrap(), p[(a, b)]);
                assert_eq!(path_sum_inverse_entry(&p, a, b).unwrap(), inv[(a, b)]);
            }
        }
        assert!(matches!(
            path_sum_eigvec_entry(&Matrix::<BigRational>::identity(11), 0, 1),
            Err(Error::SizeGuard(_))
        ));
    }

    #[test]
    fn spectral_power_matches_direct() {
        let dec = SpectralDecomposition::of(&t35()).unwrap();
        assert_eq!(dec.power(0).unwrap(), Matrix::identity(6));
        assert_eq!(dec.power(1).unwrap(), t35());
        assert_eq!(
            dec.power(3).unwrap(),
            crate::carleman::matrix_power_direct(&t35(), 3).unwrap()
        );
    }

    #[test]
    fn non_triangular_input_is_rejected() {
        assert!(matches!(
            eigvecs_triangular(&mat(&[&[1, 0], &[1, 2]])),
            Err(Error::NotTriangular { row: 1, col: 0 })
        ));
    }

    #[test]
    fn float_reconstruction() {
        let t = t35().map(Scalar::to_complex);
        let dec = SpectralDecomposition::<Complex64>::of(&t).unwrap();
        let rebuilt = dec.power(1).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!((rebuilt[(i, j)] - t[(i, j)]).norm() <= 1e-9 * t.max_magnitude());
            }
        }
    }
}
