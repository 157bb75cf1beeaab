//! Univariate root finding: rational-root search for exact mode and
//! Durand-Kerner simultaneous iteration for float mode.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Mode, Poly, Scalar};
use crate::error::{Error, Result};

const DK_MAX_ITERS: usize = 500;
const DK_RESIDUAL: f64 = 1e-12;
const DK_SEED: u64 = 0x5e_ed0f_d04b;
// trial-division budget per integer when enumerating divisors
const DIVISOR_BUDGET: u128 = 10_000_000;

/// All roots of a univariate polynomial.
///
/// Exact mode returns the distinct rational roots in ascending order (an
/// empty list when there are none). Float mode returns every complex root
/// with multiplicity, polished by Newton steps.
pub fn roots_univariate<S: Scalar>(p: &Poly<S>) -> Result<Vec<S>> {
    let coeffs = p.univariate_coeffs()?;
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    match S::MODE {
        Mode::Exact => {
            let rat: Vec<BigRational> = coeffs
                .iter()
                .map(|c| c.as_rational().cloned().expect("exact mode scalar"))
                .collect();
            Ok(rational_roots(&rat).iter().map(S::from_rational).collect())
        }
        Mode::Float => {
            let cx: Vec<Complex64> = coeffs.iter().map(Scalar::to_complex).collect();
            Ok(durand_kerner(&cx)
                .into_iter()
                .map(|z| S::from_complex(z).expect("float mode scalar"))
                .collect())
        }
    }
}

/// Distinct rational roots of `sum c_j x^j`, ascending.
pub fn rational_roots(coeffs: &[BigRational]) -> Vec<BigRational> {
    let mut c: Vec<BigRational> = coeffs.to_vec();
    while c.last().is_some_and(Zero::is_zero) {
        c.pop();
    }
    if c.len() <= 1 {
        return Vec::new();
    }
    let mut roots = Vec::new();
    let lead_zeros = c.iter().take_while(|x| Zero::is_zero(*x)).count();
    if lead_zeros > 0 {
        roots.push(Zero::zero());
        c.drain(..lead_zeros);
    }
    if c.len() > 1 {
        let ints = integer_coefficients(&c);
        let a0 = ints[0].abs();
        let an = ints[ints.len() - 1].abs();
        if let (Some(ps), Some(qs)) = (divisors(&a0), divisors(&an)) {
            let mut seen = std::collections::BTreeSet::new();
            for p in &ps {
                for q in &qs {
                    for sign in [1, -1] {
                        let cand = BigRational::new(p * BigInt::from(sign), q.clone());
                        if seen.insert(cand.clone()) && Zero::is_zero(&horner(&c, &cand)) {
                            roots.push(cand);
                        }
                    }
                }
            }
        }
    }
    roots.sort();
    roots.dedup();
    roots
}

fn horner(c: &[BigRational], x: &BigRational) -> BigRational {
    c.iter().rev().fold(<BigRational as Zero>::zero(), |acc, a| acc * x + a)
}

/// Scales rational coefficients to coprime integers.
fn integer_coefficients(c: &[BigRational]) -> Vec<BigInt> {
    let lcm = c.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = c
        .iter()
        .map(|x| (x * BigRational::from_integer(lcm.clone())).to_integer())
        .collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return ints;
    }
    ints.into_iter().map(|x| x / &g).collect()
}

/// Positive divisors of `n > 0`; `None` if the trial-division budget runs out.
fn divisors(n: &BigInt) -> Option<Vec<BigInt>> {
    let n = n.to_u128()?;
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d: u128 = 1;
    while d * d <= n {
        if d > DIVISOR_BUDGET {
            return None;
        }
        if n % d == 0 {
            small.push(BigInt::from(d));
            if d * d != n {
                large.push(BigInt::from(n / d));
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    Some(small)
}

fn eval_c(c: &[Complex64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, a| acc * z + a)
}

fn eval_dc(c: &[Complex64], z: Complex64) -> Complex64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, (j, a)| acc * z + a * j as f64)
}

/// All complex roots (with multiplicity) of `sum c_j x^j`.
pub fn durand_kerner(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut c = coeffs.to_vec();
    while c.last().is_some_and(|x| x.norm() == 0.0) {
        c.pop();
    }
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let lead = c[n];
    let monic: Vec<Complex64> = c.iter().map(|x| x / lead).collect();
    // Fujiwara bound on root magnitude
    let radius = (0..n)
        .map(|j| (monic[j].norm()).powf(1.0 / (n - j) as f64))
        .fold(0.0, f64::max)
        .max(1e-3)
        * 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(DK_SEED);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let jitter: f64 = rng.gen_range(-0.25..0.25);
            let theta = std::f64::consts::TAU * (k as f64 + 0.25 + jitter) / n as f64;
            Complex64::from_polar(radius * 0.5, theta)
        })
        .collect();
    let scale = monic.iter().map(|x| x.norm()).fold(1.0, f64::max);
    for _ in 0..DK_MAX_ITERS {
        let mut worst = 0.0f64;
        for k in 0..n {
            let pk = eval_c(&monic, z[k]);
            worst = worst.max(pk.norm());
            let denom = (0..n)
                .filter(|&j| j != k)
                .fold(Complex64::new(1.0, 0.0), |acc, j| acc * (z[k] - z[j]));
            if denom.norm() > 0.0 {
                z[k] -= pk / denom;
            }
        }
        if worst <= DK_RESIDUAL * scale {
            break;
        }
    }
    for zk in &mut z {
        for _ in 0..8 {
            let p = eval_c(&monic, *zk);
            let dp = eval_dc(&monic, *zk);
            if dp.norm() == 0.0 || p.norm() == 0.0 {
                break;
            }
            let next = *zk - p / dp;
            if eval_c(&monic, next).norm() < p.norm() {
                *zk = next;
            } else {
                break;
            }
        }
        let snap = 1e-12 * (1.0 + zk.norm());
        if zk.im.abs() <= snap {
            zk.im = 0.0;
        }
        if zk.re.abs() <= snap {
            zk.re = 0.0;
        }
    }
    z.sort_by(|a, b| a.total_cmp(b));
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    fn rat(c: &[i64]) -> Vec<BigRational> {
        c.iter().map(|&v| q(v, 1)).collect()
    }

    #[test]
    fn shifted_fixed_point_equation() {
        // d^3 + 2d^2 + d - d
        assert_eq!(rational_roots(&rat(&[0, 0, 2, 1])), vec![q(-2, 1), q(0, 1)]);
    }

    #[test]
    fn linear_and_fractional_roots() {
        assert_eq!(rational_roots(&rat(&[-1, 1])), vec![q(1, 1)]);
        // 6x^2 - 5x + 1 = (2x-1)(3x-1)
        assert_eq!(rational_roots(&rat(&[1, -5, 6])), vec![q(1, 3), q(1, 2)]);
        // x^2 - 2 has none
        assert!(rational_roots(&rat(&[-2, 0, 1])).is_empty());
        let half = vec![q(0, 1), q(-1, 2), q(3, 4)];
        assert_eq!(rational_roots(&half), vec![q(0, 1), q(2, 3)]);
    }

    #[test]
    fn zero_polynomial_is_an_error() {
        let p: Poly<BigRational> = Poly::zero(1);
        assert!(matches!(roots_univariate(&p), Err(Error::ZeroPolynomial)));
    }

    #[test]
    fn imaginary_unit_roots() {
        let p = Poly::from_univariate(&[
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]);
        let r = roots_univariate(&p).unwrap();
        assert_eq!(r.len(), 2);
        let mut ims: Vec<f64> = r.iter().map(|z| z.im).collect();
        ims.sort_by(f64::total_cmp);
        assert!((ims[0] + 1.0).abs() < 1e-12 && (ims[1] - 1.0).abs() < 1e-12);
        assert!(r.iter().all(|z| z.re.abs() < 1e-12));
    }

    #[test]
    fn float_roots_have_small_residuals() {
        let c: Vec<Complex64> = [3.0, -7.0, 0.5, 2.0, 1.0]
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        for z in durand_kerner(&c) {
            assert!(eval_c(&c, z).norm() <= 1e-9 * 2.0, "residual at {z}");
        }
    }
}
