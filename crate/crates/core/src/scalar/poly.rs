//! Sparse multivariate polynomials with canonical zero-stripped storage.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use super::{Matrix, Scalar};
use crate::error::{Error, Result};

/// Exponent vector of a monomial.
///
/// The `Ord` impl is the graded order used for every basis in the crate:
/// total degree ascending, then lexicographically *descending* in the
/// exponent of variable 1, then variable 2, and so on. For two variables up
/// to degree 2 this lists `1, x, y, x^2, xy, y^2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, index: usize) -> Self {
        let mut e = vec![0; nvars];
        e[index] = 1;
        Monomial(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Value of the monomial at `z`; `z.len()` must equal `nvars`.
    pub fn eval<S: Scalar>(&self, z: &[S]) -> S {
        self.0
            .iter()
            .zip(z)
            .filter(|(&e, _)| e > 0)
            .fold(S::one(), |acc, (&e, x)| acc * x.powu(e as u64))
    }

    /// Non-decreasing variable-index tuple, e.g. `x0 * x1^2 -> [0, 1, 1]`.
    pub fn index_tuple(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(i, &e)| std::iter::repeat_n(i, e as usize))
            .collect()
    }

    pub fn from_index_tuple(nvars: usize, tuple: &[usize]) -> Self {
        let mut e = vec![0; nvars];
        for &i in tuple {
            e[i] += 1;
        }
        Monomial(e)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return f.write_str("1");
        }
        let mut first = true;
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                f.write_str("*")?;
            }
            first = false;
            write!(f, "x{}", i + 1)?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// Sparse polynomial; no stored coefficient is ever zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<S> {
    nvars: usize,
    terms: BTreeMap<Monomial, S>,
}

impl<S: Scalar> Poly<S> {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: S) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(Monomial::one(nvars), c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, S::one())
    }

    pub fn var(nvars: usize, index: usize) -> Self {
        let mut p = Self::zero(nvars);
        p.terms.insert(Monomial::var(nvars, index), S::one());
        p
    }

    pub fn monomial(m: Monomial, c: S) -> Self {
        let mut p = Self::zero(m.nvars());
        p.add_term(m, c);
        p
    }

    /// Builds a canonical polynomial, summing repeated monomials.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Monomial, S)>) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (m, c) in terms {
            if m.nvars() != nvars {
                return Err(Error::Arity {
                    expected: nvars,
                    found: m.nvars(),
                });
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub fn var_count(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, S> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Same as [`Poly::is_zero`].
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> S {
        self.terms.get(m).cloned().unwrap_or_else(S::zero)
    }

    pub fn constant_term(&self) -> S {
        self.coeff(&Monomial::one(self.nvars))
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::total_degree).max()
    }

    /// Adds `c * m` in place, keeping the map canonical.
    pub fn add_term(&mut self, m: Monomial, c: S) {
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&m) {
            Some(old) => {
                let sum = old + c;
                if !sum.is_zero() {
                    self.terms.insert(m, sum);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    fn check_arity(&self, other: &Self) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::Arity {
                expected: self.nvars,
                found: other.nvars,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_arity(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn scale(&self, s: &S) -> Self {
        if s.is_zero() {
            return Self::zero(self.nvars);
        }
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.clone() * s.clone());
        }
        out
    }

    /// Product with every term of total degree above `max_degree` dropped.
    pub fn mul_truncated(&self, other: &Self, max_degree: u32) -> Result<Self> {
        self.check_arity(other)?;
        let mut out = Self::zero(self.nvars);
        for (ma, ca) in &self.terms {
            let da = ma.total_degree();
            if da > max_degree {
                continue;
            }
            for (mb, cb) in &other.terms {
                if da + mb.total_degree() > max_degree {
                    continue;
                }
                out.add_term(ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.mul_truncated(other, u32::MAX)
    }

    /// `self^e` truncated at `max_degree`; `p^0 = 1`.
    pub fn pow_truncated(&self, mut e: u32, max_degree: u32) -> Result<Self> {
        let mut acc = Self::one(self.nvars).truncated(max_degree);
        let mut base = self.truncated(max_degree);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_truncated(&base, max_degree)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_truncated(&base, max_degree)?;
            }
        }
        Ok(acc)
    }

    pub fn truncated(&self, max_degree: u32) -> Self {
        Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.total_degree() <= max_degree)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Drops coefficients that are rounding noise relative to the largest
    /// coefficient. A no-op in exact mode.
    pub fn chopped(&self, tol: f64) -> Self {
        let scale = self.terms.values().map(Scalar::magnitude).fold(0.0, f64::max);
        Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| !c.is_negligible(scale, tol))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Substitutes `subs[j]` for variable `j`, truncating at `max_degree`.
    ///
    /// All substituted polynomials must share a variable count, which becomes
    /// the variable count of the result.
    pub fn compose(&self, subs: &[Poly<S>], max_degree: u32) -> Result<Self> {
        if subs.len() != self.nvars {
            return Err(Error::Arity {
                expected: self.nvars,
                found: subs.len(),
            });
        }
        let target = match subs.first() {
            Some(p) => p.nvars,
            None => 0,
        };
        if let Some(bad) = subs.iter().find(|p| p.nvars != target) {
            return Err(Error::Arity {
                expected: target,
                found: bad.nvars,
            });
        }
        // powers[j][e] = subs[j]^e, grown lazily
        let mut powers: Vec<Vec<Poly<S>>> = vec![vec![Poly::one(target)]; self.nvars];
        let mut out = Poly::zero(target);
        for (m, c) in &self.terms {
            let mut term = Poly::constant(target, c.clone());
            for (j, &e) in m.exponents().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[j].len() <= e as usize {
                    let next = powers[j]
                        .last()
                        .expect("power table starts non-empty")
                        .mul_truncated(&subs[j], max_degree)?;
                    powers[j].push(next);
                }
                term = term.mul_truncated(&powers[j][e as usize], max_degree)?;
                if term.is_zero() {
                    break;
                }
            }
            out = out.add(&term)?;
        }
        Ok(out.truncated(max_degree))
    }

    /// `p(A z' + B)` expanded over the primed variables and truncated.
    pub fn substitute_affine(&self, a: &Matrix<S>, b: &[S], max_degree: u32) -> Result<Self> {
        let k = self.nvars;
        if a.rows() != k || a.cols() != k || b.len() != k {
            return Err(Error::Dimension(format!(
                "affine substitution into {k} variables needs a {k}x{k} matrix and {k}-vector, got {}x{} and {}",
                a.rows(),
                a.cols(),
                b.len()
            )));
        }
        let linear: Vec<Poly<S>> = (0..k)
            .map(|p| {
                let mut lp = Poly::constant(k, b[p].clone());
                for q in 0..k {
                    lp.add_term(Monomial::var(k, q), a[(p, q)].clone());
                }
                lp
            })
            .collect();
        self.compose(&linear, max_degree)
    }

    /// Evaluates at `z` using per-variable power tables over the sorted terms.
    pub fn eval(&self, z: &[S]) -> Result<S> {
        if z.len() != self.nvars {
            return Err(Error::Arity {
                expected: self.nvars,
                found: z.len(),
            });
        }
        let max_exp = self
            .terms
            .keys()
            .flat_map(|m| m.exponents().iter().copied())
            .max()
            .unwrap_or(0) as usize;
        let table: Vec<Vec<S>> = z
            .iter()
            .map(|x| {
                let mut row = Vec::with_capacity(max_exp + 1);
                row.push(S::one());
                for e in 1..=max_exp {
                    row.push(row[e - 1].clone() * x.clone());
                }
                row
            })
            .collect();
        let mut acc = S::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (j, &e) in m.exponents().iter().enumerate() {
                if e > 0 {
                    t = t * table[j][e as usize].clone();
                }
            }
            acc = acc + t;
        }
        Ok(acc)
    }

    /// Partial derivative with respect to variable `var`.
    pub fn derivative(&self, var: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.exponents()[var];
            if e == 0 {
                continue;
            }
            let mut exps = m.exponents().to_vec();
            exps[var] -= 1;
            out.add_term(Monomial::new(exps), c.clone() * S::from_i64(e as i64));
        }
        out
    }

    /// Coefficients `c_0..c_m` of a univariate polynomial.
    pub fn univariate_coeffs(&self) -> Result<Vec<S>> {
        if self.nvars != 1 {
            return Err(Error::Arity {
                expected: 1,
                found: self.nvars,
            });
        }
        let deg = self.degree().unwrap_or(0) as usize;
        let mut out = vec![S::zero(); deg + 1];
        for (m, c) in &self.terms {
            out[m.exponents()[0] as usize] = c.clone();
        }
        Ok(out)
    }

    pub fn from_univariate(coeffs: &[S]) -> Self {
        let mut p = Self::zero(1);
        for (e, c) in coeffs.iter().enumerate() {
            p.add_term(Monomial::new(vec![e as u32]), c.clone());
        }
        p
    }

    pub fn map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Poly<T> {
        let mut out = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }
}
