//! Seeded generators shared by the acceptance and property suites.
#![allow(dead_code)]

use carleman_core::recurrence::{check_shift_admissible, PolySystem};
use carleman_core::scalar::q;
use carleman_core::{Matrix, Monomial, Poly};
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type R = BigRational;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rational with numerator in `-5..=5` and denominator in `1..=5`.
pub fn small_rational(rng: &mut impl Rng) -> R {
    q(rng.gen_range(-5..=5), rng.gen_range(1..=5))
}

pub fn nonzero_rational(rng: &mut impl Rng) -> R {
    loop {
        let r = small_rational(rng);
        if r != q(0, 1) {
            return r;
        }
    }
}

/// `k` pairwise distinct nonzero small rationals.
pub fn distinct_diagonal(rng: &mut impl Rng, k: usize) -> Vec<R> {
    let mut out: Vec<R> = Vec::new();
    while out.len() < k {
        let r = nonzero_rational(rng);
        if !out.contains(&r) {
            out.push(r);
        }
    }
    out
}

fn names(k: usize) -> Vec<String> {
    ["u", "v", "w"][..k].iter().map(|s| s.to_string()).collect()
}

/// Zero-constant-term system with an upper-triangular linear part whose
/// diagonal is pairwise distinct, plus sparse terms of degree `2..=degree`.
pub fn triangular_system(rng: &mut impl Rng, k: usize, degree: u32) -> PolySystem<R> {
    let diag = distinct_diagonal(rng, k);
    let mut polys = Vec::with_capacity(k);
    for (p, d) in diag.iter().enumerate() {
        let mut poly = Poly::monomial(Monomial::var(k, p), d.clone());
        for s in p + 1..k {
            if rng.gen_bool(0.5) {
                poly.add_term(Monomial::var(k, s), small_rational(rng));
            }
        }
        for _ in 0..rng.gen_range(1..=4) {
            let deg = rng.gen_range(2..=degree.max(2));
            let mut e = vec![0u32; k];
            for _ in 0..deg {
                e[rng.gen_range(0..k)] += 1;
            }
            poly.add_term(Monomial::new(e), small_rational(rng));
        }
        polys.push(poly);
    }
    PolySystem::new(names(k), 1, polys).unwrap()
}

/// A triangular system whose spectrum gives distinct monomial products up
/// to `order`, so the truncated transition matrix is diagonalizable.
pub fn admissible_system(rng: &mut impl Rng, k: usize, degree: u32, order: u32) -> PolySystem<R> {
    loop {
        let s = triangular_system(rng, k, degree);
        if check_shift_admissible(&s, order, 12).map(|r| r.pass).unwrap_or(false) {
            return s;
        }
    }
}

/// Arbitrary system of the given depth with small rational coefficients
/// (constant terms allowed).
pub fn random_system(rng: &mut impl Rng, k: usize, depth: usize, degree: u32) -> PolySystem<R> {
    let nv = k * depth;
    let polys = (0..k)
        .map(|_| {
            let mut poly = Poly::zero(nv);
            for _ in 0..rng.gen_range(1..=5) {
                let deg = rng.gen_range(0..=degree);
                let mut e = vec![0u32; nv];
                for _ in 0..deg {
                    e[rng.gen_range(0..nv)] += 1;
                }
                poly.add_term(Monomial::new(e), small_rational(rng));
            }
            // make the declared depth visible
            let lag = (depth - 1) * k + rng.gen_range(0..k);
            let m = Monomial::var(nv, lag);
            poly.add_term(m.clone(), nonzero_rational(rng));
            if poly.coeff(&m) == q(0, 1) {
                poly.add_term(m, q(1, 1));
            }
            poly
        })
        .collect();
    PolySystem::new(names(k), depth, polys).unwrap()
}

/// Upper-triangular matrix with pairwise distinct nonzero diagonal.
pub fn triangular_matrix(rng: &mut impl Rng, n: usize) -> Matrix<R> {
    let mut diag: Vec<R> = (1..=n as i64 + 4).flat_map(|a| [q(a, 1), q(-a, 1), q(a, 2)]).collect();
    diag.sort();
    diag.dedup();
    diag.shuffle(rng);
    let mut rows = vec![vec![q(0, 1); n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] = diag[i].clone();
        for x in row.iter_mut().skip(i + 1) {
            if rng.gen_bool(0.7) {
                *x = small_rational(rng);
            }
        }
    }
    Matrix::from_rows(rows).unwrap()
}
