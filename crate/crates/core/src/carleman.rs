//! Non-redundant monomial basis and the truncated Carleman transition
//! matrix.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::recurrence::PolySystem;
use crate::scalar::{Matrix, Monomial, Poly, Scalar};

/// Largest basis the crate will build.
pub const MAX_BASIS_SIZE: usize = 1_000_000;

/// All monomials in `k` variables of total degree `<= order`, in graded
/// order (see [`Monomial`]'s `Ord`).
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialBasis {
    k: usize,
    order: u32,
    monomials: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
}

/// `binomial(n, r)`, or `None` past `usize`.
pub fn binomial(n: usize, r: usize) -> Option<usize> {
    let r = r.min(n.checked_sub(r)?);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

impl MonomialBasis {
    pub fn new(k: usize, order: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::Dimension("basis needs at least one variable".into()));
        }
        let size = binomial(order as usize + k, k)
            .filter(|&s| s <= MAX_BASIS_SIZE)
            .ok_or_else(|| {
                Error::SizeGuard(format!(
                    "basis for k={k}, N={order} exceeds {MAX_BASIS_SIZE} monomials; lower --order"
                ))
            })?;
        let mut monomials = Vec::with_capacity(size);
        for d in 0..=order {
            push_degree(k, d, &mut Vec::with_capacity(k), &mut monomials);
        }
        debug_assert_eq!(monomials.len(), size);
        let index = monomials.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        Ok(Self {
            k,
            order,
            monomials,
            index,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn monomial(&self, i: usize) -> &Monomial {
        &self.monomials[i]
    }

    pub fn index_of(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m).copied()
    }

    /// `ỹ(z)`: every basis monomial evaluated at `z`.
    pub fn evaluate<S: Scalar>(&self, z: &[S]) -> Vec<S> {
        self.monomials.iter().map(|m| m.eval(z)).collect()
    }
}

// exponent vectors of exactly degree `d`, first variable's exponent descending
fn push_degree(k: usize, d: u32, prefix: &mut Vec<u32>, out: &mut Vec<Monomial>) {
    if prefix.len() == k - 1 {
        let mut e = prefix.clone();
        e.push(d);
        out.push(Monomial::new(e));
        return;
    }
    for e in (0..=d).rev() {
        prefix.push(e);
        push_degree(k, d - e, prefix, out);
        prefix.pop();
    }
}

/// Truncated transition matrix: row `a` holds the basis coordinates of the
/// image of basis monomial `a` under one step of the map.
#[derive(Clone, Debug, PartialEq)]
pub struct CarlemanMatrix<S> {
    basis: MonomialBasis,
    entries: Matrix<S>,
}

impl<S: Scalar> CarlemanMatrix<S> {
    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn entries(&self) -> &Matrix<S> {
        &self.entries
    }

    pub fn into_entries(self) -> Matrix<S> {
        self.entries
    }

    pub fn size(&self) -> usize {
        self.basis.len()
    }

    pub fn is_triangular(&self) -> bool {
        self.entries.is_upper_triangular(0.0)
    }

    pub fn eigenvalues(&self) -> Vec<S> {
        self.entries.diag()
    }

    pub fn power(&self, i: u64) -> Result<Self> {
        Ok(Self {
            basis: self.basis.clone(),
            entries: matrix_power_direct(&self.entries, i)?,
        })
    }

    /// `{"k", "N", "basis", "rows", "triangular", "eigenvalues"}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "k": self.basis.k(),
            "N": self.basis.order(),
            "basis": self.basis.monomials().iter().map(|m| m.exponents().to_vec()).collect::<Vec<_>>(),
            "rows": self.entries.to_json(),
            "triangular": self.is_triangular(),
            "eigenvalues": self.eigenvalues().iter().map(Scalar::to_json).collect::<Vec<_>>(),
        })
    }
}

/// Builds the transition matrix of a depth-one system on `basis`.
///
/// Each row is the truncated product `prod_s F_s^{e_s}`, obtained from an
/// already-built row of one degree less times a single `F_s`.
pub fn build_transition<S: Scalar>(system: &PolySystem<S>, basis: &MonomialBasis) -> Result<CarlemanMatrix<S>> {
    if system.depth() != 1 {
        return Err(Error::DepthMismatch(system.depth()));
    }
    let k = basis.k();
    if system.k() != k {
        return Err(Error::Arity {
            expected: k,
            found: system.k(),
        });
    }
    let n = basis.order();
    let maps: Vec<Poly<S>> = system.polys().iter().map(|p| p.truncated(n)).collect();
    let size = basis.len();
    let mut images: Vec<Poly<S>> = Vec::with_capacity(size);
    let mut entries = Matrix::zeros(size, size);
    for (a, m) in basis.monomials().iter().enumerate() {
        let image = match m.exponents().iter().position(|&e| e > 0) {
            None => Poly::one(k),
            Some(s) => {
                let mut parent = m.exponents().to_vec();
                parent[s] -= 1;
                let p = basis.index_of(&Monomial::new(parent)).expect("parent has lower degree");
                images[p].mul_truncated(&maps[s], n)?
            }
        };
        for (mono, c) in image.terms() {
            let b = basis.index_of(mono).expect("truncated image stays in the basis");
            entries[(a, b)] = c.clone();
        }
        images.push(image);
    }
    Ok(CarlemanMatrix {
        basis: basis.clone(),
        entries,
    })
}

/// Univariate entry `T_ab` from the constrained multinomial sum: over all
/// `k_0..k_m >= 0` with `sum k_l = a` and `sum l k_l = b`,
/// `a! / prod k_l! * prod c_l^{k_l}`.
pub fn multinomial_entry<S: Scalar>(c: &[S], a: usize, b: usize) -> S {
    fn rec<S: Scalar>(c: &[S], l: usize, left: usize, weight: usize, coeff: S, acc: &mut S) {
        if l == c.len() {
            if left == 0 && weight == 0 {
                *acc = acc.clone() + coeff;
            }
            return;
        }
        for kl in 0..=left {
            if l * kl > weight {
                break;
            }
            // multinomial built incrementally: choose kl of the remaining `left`
            let choose = binomial(left, kl).expect("small");
            let term = coeff.clone() * S::from_i64(choose as i64) * c[l].powu(kl as u64);
            if term.is_zero() && kl > 0 {
                continue;
            }
            rec(c, l + 1, left - kl, weight - l * kl, term, acc);
        }
    }
    let mut acc = S::zero();
    rec(c, 0, a, b, S::one(), &mut acc);
    acc
}

/// Exponent vector at position `kron_index` of the redundant vector
/// `(1, z, z⊗z, z⊗z⊗z, ..)`; several positions share a monomial.
pub fn kron_index_map(k: usize, kron_index: usize) -> Monomial {
    let mut exps = vec![0u32; k];
    let (mut start, mut block, mut degree) = (0usize, 1usize, 0u32);
    while kron_index >= start + block {
        start += block;
        block *= k;
        degree += 1;
    }
    let mut offset = kron_index - start;
    // digit j (most significant first) selects the j-th factor's variable
    for j in (0..degree).rev() {
        let place = k.pow(j);
        exps[offset / place] += 1;
        offset %= place;
    }
    Monomial::new(exps)
}

/// `m^i` by repeated squaring.
pub fn matrix_power_direct<S: Scalar>(m: &Matrix<S>, mut i: u64) -> Result<Matrix<S>> {
    if !m.is_square() {
        return Err(Error::Dimension("power of a non-square matrix".into()));
    }
    let mut acc = Matrix::identity(m.rows());
    let mut base = m.clone();
    while i > 0 {
        if i & 1 == 1 {
            acc = acc.mul(&base)?;
        }
        i >>= 1;
        if i > 0 {
            base = base.mul(&base)?;
        }
    }
    Ok(acc)
}
