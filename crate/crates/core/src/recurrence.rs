//! Recurrence systems, depth reduction, fixed-point shifts, affine
//! changes of variables and the admissibility gate.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::carleman::MonomialBasis;
use crate::error::{Error, Result};
use crate::scalar::{durand_kerner, rational_roots, Matrix, Mode, Monomial, Poly, Scalar};

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_DEDUP: f64 = 1e-8;
const NEWTON_MAX_ITERS: usize = 100;
const NEWTON_RANDOM_SEEDS: usize = 8;
const ROOT_CLUSTER: f64 = 1e-6;
const CHOP_TOL: f64 = 1e-13;
const DISTINCT_TOL: f64 = 1e-9;
const TRIANGULAR_TOL: f64 = 1e-10;

/// `k` polynomial recurrences of depth `n` over `n*k` lagged variables.
///
/// Variable `(j-1)*k + l` stands for `u^l` at step `i-j`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolySystem<S> {
    names: Vec<String>,
    depth: usize,
    polys: Vec<Poly<S>>,
}

impl<S: Scalar> PolySystem<S> {
    pub fn new(names: Vec<String>, depth: usize, polys: Vec<Poly<S>>) -> Result<Self> {
        let k = names.len();
        if k == 0 || depth == 0 {
            return Err(Error::Dimension(
                "a system needs at least one variable and depth >= 1".into(),
            ));
        }
        if polys.len() != k {
            return Err(Error::Arity {
                expected: k,
                found: polys.len(),
            });
        }
        if let Some(p) = polys.iter().find(|p| p.var_count() != k * depth) {
            return Err(Error::Arity {
                expected: k * depth,
                found: p.var_count(),
            });
        }
        Ok(Self { names, depth, polys })
    }

    /// Depth-one system with default names `u1..uk`.
    pub fn from_polys(polys: Vec<Poly<S>>) -> Result<Self> {
        let names = if polys.len() == 1 {
            vec!["u".to_string()]
        } else {
            (1..=polys.len()).map(|i| format!("u{i}")).collect()
        };
        Self::new(names, 1, polys)
    }

    pub fn k(&self) -> usize {
        self.names.len()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn polys(&self) -> &[Poly<S>] {
        &self.polys
    }

    pub fn mode(&self) -> Mode {
        S::MODE
    }

    pub fn max_degree(&self) -> u32 {
        self.polys.iter().filter_map(Poly::degree).max().unwrap_or(0)
    }

    fn require_depth_one(&self) -> Result<()> {
        if self.depth != 1 {
            return Err(Error::DepthMismatch(self.depth));
        }
        Ok(())
    }

    pub fn constant_terms(&self) -> Vec<S> {
        self.polys.iter().map(Poly::constant_term).collect()
    }

    /// True when every constant term vanishes (to `tol` in float mode).
    pub fn is_shifted(&self, tol: f64) -> bool {
        self.first_nonzero_constant(tol).is_none()
    }

    fn first_nonzero_constant(&self, tol: f64) -> Option<usize> {
        let scale = self.coefficient_scale();
        self.polys
            .iter()
            .position(|p| !p.constant_term().is_negligible(scale, tol))
    }

    fn coefficient_scale(&self) -> f64 {
        self.polys
            .iter()
            .flat_map(|p| p.terms().values())
            .map(Scalar::magnitude)
            .fold(0.0, f64::max)
    }

    /// `^1C`: entry `(p, q)` is the coefficient of variable `q` in `F_p`.
    pub fn linear_part(&self) -> Result<Matrix<S>> {
        self.require_depth_one()?;
        let k = self.k();
        let rows = self
            .polys
            .iter()
            .map(|p| (0..k).map(|q| p.coeff(&Monomial::var(k, q))).collect())
            .collect();
        Matrix::from_rows(rows)
    }

    pub fn coeff_arrays(&self) -> Result<CoeffArrays<S>> {
        self.require_depth_one()?;
        let k = self.k();
        let mut higher: BTreeMap<usize, BTreeMap<Vec<usize>, Vec<S>>> = BTreeMap::new();
        for (p, poly) in self.polys.iter().enumerate() {
            for (m, c) in poly.terms() {
                let d = m.total_degree() as usize;
                if d < 2 {
                    continue;
                }
                higher
                    .entry(d)
                    .or_default()
                    .entry(m.index_tuple())
                    .or_insert_with(|| vec![S::zero(); k])[p] = c.clone();
            }
        }
        Ok(CoeffArrays {
            k,
            constant: self.constant_terms(),
            linear: self.linear_part()?,
            higher,
        })
    }

    /// One application of the map to a full state vector of length `n*k`
    /// (depth-one systems) or to a lag-ordered history (any depth).
    pub fn step(&self, z: &[S]) -> Result<Vec<S>> {
        self.polys.iter().map(|p| p.eval(z)).collect()
    }

    pub fn map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> T + Copy) -> PolySystem<T> {
        PolySystem {
            names: self.names.clone(),
            depth: self.depth,
            polys: self.polys.iter().map(|p| p.map_coeffs(f)).collect(),
        }
    }
}

/// Coefficient-array view of a depth-one system.
///
/// `higher[j]` maps non-decreasing index tuples `l_1 <= .. <= l_j` to the
/// `k`-vector of coefficients of `z_{l_1} .. z_{l_j}`; decreasing tuples are
/// never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffArrays<S> {
    pub k: usize,
    pub constant: Vec<S>,
    pub linear: Matrix<S>,
    pub higher: BTreeMap<usize, BTreeMap<Vec<usize>, Vec<S>>>,
}

impl<S: Scalar> CoeffArrays<S> {
    /// `^jC_p` entry for a sorted tuple; zero if absent.
    pub fn get(&self, p: usize, tuple: &[usize]) -> S {
        match tuple.len() {
            0 => self.constant[p].clone(),
            1 => self.linear[(p, tuple[0])].clone(),
            j => self
                .higher
                .get(&j)
                .and_then(|m| m.get(tuple))
                .map_or_else(S::zero, |v| v[p].clone()),
        }
    }

    pub fn to_polys(&self) -> Vec<Poly<S>> {
        let k = self.k;
        (0..k)
            .map(|p| {
                let mut poly = Poly::constant(k, self.constant[p].clone());
                for q in 0..k {
                    poly.add_term(Monomial::var(k, q), self.linear[(p, q)].clone());
                }
                for by_tuple in self.higher.values() {
                    for (tuple, v) in by_tuple {
                        poly.add_term(Monomial::from_index_tuple(k, tuple), v[p].clone());
                    }
                }
                poly
            })
            .collect()
    }
}

/// Invertible affine change of variables `z = A z' + B`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformParams<S> {
    a: Matrix<S>,
    b: Vec<S>,
    a_inv: Matrix<S>,
}

impl<S: Scalar> TransformParams<S> {
    pub fn new(a: Matrix<S>, b: Vec<S>) -> Result<Self> {
        if !a.is_square() || a.rows() != b.len() {
            return Err(Error::Dimension(format!(
                "transform needs a square matrix matching the shift length, got {}x{} and {}",
                a.rows(),
                a.cols(),
                b.len()
            )));
        }
        let a_inv = a.inverse()?;
        if S::MODE == Mode::Float {
            let det = a.determinant()?;
            if det.magnitude() <= 1e-12 * a.max_magnitude().powi(a.rows() as i32).max(f64::MIN_POSITIVE) {
                return Err(Error::Singular { index: 0 });
            }
        }
        Ok(Self { a, b, a_inv })
    }

    pub fn identity(k: usize) -> Self {
        Self {
            a: Matrix::identity(k),
            b: vec![S::zero(); k],
            a_inv: Matrix::identity(k),
        }
    }

    pub fn shift(b: Vec<S>) -> Self {
        let k = b.len();
        Self {
            a: Matrix::identity(k),
            b,
            a_inv: Matrix::identity(k),
        }
    }

    pub fn a(&self) -> &Matrix<S> {
        &self.a
    }

    pub fn b(&self) -> &[S] {
        &self.b
    }

    pub fn a_inv(&self) -> &Matrix<S> {
        &self.a_inv
    }

    pub fn k(&self) -> usize {
        self.b.len()
    }

    pub fn is_identity(&self) -> bool {
        self.a == Matrix::identity(self.k()) && self.b.iter().all(Scalar::is_zero)
    }

    /// The reverse change `z' = A^-1 z - A^-1 B`.
    pub fn inverse(&self) -> Self {
        let shifted = self.a_inv.mul_vec(&self.b).expect("square transform");
        Self {
            a: self.a_inv.clone(),
            b: shifted.into_iter().map(|x| -x).collect(),
            a_inv: self.a.clone(),
        }
    }

    /// `self` followed by `inner` (`z' = A2 z'' + B2`):
    /// `z = A1 A2 z'' + (A1 B2 + B1)`.
    pub fn then(&self, inner: &Self) -> Result<Self> {
        let a = self.a.mul(&inner.a)?;
        let b = self
            .a
            .mul_vec(&inner.b)?
            .into_iter()
            .zip(&self.b)
            .map(|(x, y)| x + y.clone())
            .collect();
        let a_inv = inner.a_inv.mul(&self.a_inv)?;
        Ok(Self { a, b, a_inv })
    }

    /// Original coordinates from transformed ones.
    pub fn forward(&self, z_prime: &[S]) -> Result<Vec<S>> {
        Ok(self
            .a
            .mul_vec(z_prime)?
            .into_iter()
            .zip(&self.b)
            .map(|(x, y)| x + y.clone())
            .collect())
    }

    /// Transformed coordinates from original ones.
    pub fn backward(&self, z: &[S]) -> Result<Vec<S>> {
        let diff: Vec<S> = z.iter().zip(&self.b).map(|(x, y)| x.clone() - y.clone()).collect();
        self.a_inv.mul_vec(&diff)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "A": self.a.to_json(),
            "B": self.b.iter().map(Scalar::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let a = Matrix::from_json(v.get("A").ok_or_else(|| Error::Json("transform lacks `A`".into()))?)?;
        let b = v
            .get("B")
            .and_then(|b| b.as_array())
            .ok_or_else(|| Error::Json("transform lacks `B` array".into()))?
            .iter()
            .map(S::from_json)
            .collect::<Result<Vec<_>>>()?;
        Self::new(a, b)
    }
}

/// Rewrites a depth-`n` system as a depth-one system over `n*k` variables.
///
/// The state at step `i` is `(u_i, u_{i-1}, .., u_{i-n+1})`; the first `k`
/// equations are the original maps and the rest shift the history down.
pub fn reduce_depth<S: Scalar>(system: &PolySystem<S>) -> PolySystem<S> {
    let (k, n) = (system.k(), system.depth());
    if n == 1 {
        return system.clone();
    }
    let nv = n * k;
    let mut names = system.names.clone();
    let mut polys = system.polys.clone();
    for j in 1..n {
        for l in 0..k {
            names.push(format!("{}_{j}", system.names[l]));
            polys.push(Poly::var(nv, (j - 1) * k + l));
        }
    }
    PolySystem { names, depth: 1, polys }
}

/// Fixed points `B` with `F(B) = B` of a depth-one system.
///
/// Univariate systems use root finding on `F(d) - d`. For `k > 1`, exact
/// mode only knows `B = 0` (when the constant terms vanish) and verified
/// user `candidates`; float mode runs damped Newton from the origin,
/// the candidates and eight seeded random points in `[-1, 1]^k`.
pub fn fixed_points<S: Scalar>(system: &PolySystem<S>, candidates: &[Vec<S>], seed: u64) -> Result<Vec<Vec<S>>> {
    system.require_depth_one()?;
    let k = system.k();
    if k == 1 {
        let g = system.polys[0].sub(&Poly::var(1, 0))?;
        if g.is_zero() {
            // identity map: every point is fixed
            return Ok(vec![vec![S::zero()]]);
        }
        let coeffs = g.univariate_coeffs()?;
        let mut roots = match S::MODE {
            Mode::Exact => {
                let rat: Vec<BigRational> = coeffs
                    .iter()
                    .map(|c| c.as_rational().cloned().expect("exact scalar"))
                    .collect();
                rational_roots(&rat).iter().map(S::from_rational).collect()
            }
            Mode::Float => {
                let cx: Vec<Complex64> = coeffs.iter().map(Scalar::to_complex).collect();
                cluster_roots(durand_kerner(&cx))
                    .into_iter()
                    .map(|z| S::from_complex(z).expect("float scalar"))
                    .collect::<Vec<S>>()
            }
        };
        for c in candidates {
            if c.len() == 1 && is_fixed_point(system, c)? && !roots.iter().any(|r| r.approx_eq(&c[0], NEWTON_DEDUP)) {
                roots.push(c[0].clone());
            }
        }
        return Ok(roots.into_iter().map(|r| vec![r]).collect());
    }
    let mut found: Vec<Vec<S>> = Vec::new();
    let push = |found: &mut Vec<Vec<S>>, b: Vec<S>| {
        if !found.iter().any(|f| distance(f, &b) <= NEWTON_DEDUP) {
            found.push(b);
        }
    };
    match S::MODE {
        Mode::Exact => {
            if system.constant_terms().iter().all(Scalar::is_zero) {
                push(&mut found, vec![S::zero(); k]);
            }
            for c in candidates {
                if c.len() == k && is_fixed_point(system, c)? {
                    push(&mut found, c.clone());
                }
            }
            if found.is_empty() {
                return Err(Error::ShiftNotFound);
            }
        }
        Mode::Float => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut seeds = vec![vec![S::zero(); k]];
            seeds.extend(candidates.iter().filter(|c| c.len() == k).cloned());
            for _ in 0..NEWTON_RANDOM_SEEDS {
                seeds.push(
                    (0..k)
                        .map(|_| S::from_complex(Complex64::new(rng.gen_range(-1.0..=1.0), 0.0)).expect("float scalar"))
                        .collect(),
                );
            }
            for s in seeds {
                if let Some(b) = newton(system, s)? {
                    push(&mut found, b);
                }
            }
        }
    }
    Ok(found)
}

fn distance<S: Scalar>(a: &[S], b: &[S]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.clone() - y.clone()).magnitude().powi(2))
        .sum::<f64>()
        .sqrt()
}

fn residual<S: Scalar>(system: &PolySystem<S>, b: &[S]) -> Result<Vec<S>> {
    Ok(system.step(b)?.into_iter().zip(b).map(|(f, x)| f - x.clone()).collect())
}

fn norm<S: Scalar>(v: &[S]) -> f64 {
    v.iter().map(|x| x.magnitude().powi(2)).sum::<f64>().sqrt()
}

/// `F(B) = B` exactly, or to the Newton tolerance in float mode.
pub fn is_fixed_point<S: Scalar>(system: &PolySystem<S>, b: &[S]) -> Result<bool> {
    if b.len() != system.k() {
        return Err(Error::Arity {
            expected: system.k(),
            found: b.len(),
        });
    }
    let g = residual(system, b)?;
    Ok(match S::MODE {
        Mode::Exact => g.iter().all(Scalar::is_zero),
        Mode::Float => norm(&g) <= NEWTON_TOL * (1.0 + norm(b)),
    })
}

fn newton<S: Scalar>(system: &PolySystem<S>, mut x: Vec<S>) -> Result<Option<Vec<S>>> {
    let k = system.k();
    let jac_polys: Vec<Vec<Poly<S>>> = system
        .polys
        .iter()
        .map(|p| (0..k).map(|q| p.derivative(q)).collect())
        .collect();
    let mut g = residual(system, &x)?;
    for _ in 0..NEWTON_MAX_ITERS {
        let gn = norm(&g);
        if !gn.is_finite() {
            return Ok(None);
        }
        if gn <= NEWTON_TOL {
            return Ok(Some(x));
        }
        let mut rows = Vec::with_capacity(k);
        for (p, row) in jac_polys.iter().enumerate() {
            let mut r = Vec::with_capacity(k);
            for (q, d) in row.iter().enumerate() {
                let v = d.eval(&x)?;
                r.push(if p == q { v - S::one() } else { v });
            }
            rows.push(r);
        }
        let Ok(delta) = Matrix::from_rows(rows)?.solve(&g) else {
            return Ok(None);
        };
        let mut step = S::one();
        let half = S::from_rational(&crate::scalar::q(1, 2));
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<S> = x
                .iter()
                .zip(&delta)
                .map(|(xi, di)| xi.clone() - step.clone() * di.clone())
                .collect();
            let gt = residual(system, &trial)?;
            if norm(&gt) < gn {
                x = trial;
                g = gt;
                accepted = true;
                break;
            }
            step = step * half.clone();
        }
        if !accepted {
            return Ok(None);
        }
    }
    Ok((norm(&g) <= NEWTON_TOL).then_some(x))
}

/// Averages float roots that belong to one cluster (multiple roots come
/// back from simultaneous iteration as slightly separated copies).
fn cluster_roots(mut roots: Vec<Complex64>) -> Vec<Complex64> {
    let mut out: Vec<(Complex64, usize)> = Vec::new();
    roots.sort_by(|a, b| a.total_cmp(b));
    for r in roots {
        match out
            .iter_mut()
            .find(|(c, n)| (c / *n as f64 - r).norm() <= ROOT_CLUSTER * (1.0 + r.norm()))
        {
            Some((sum, n)) => {
                *sum += r;
                *n += 1;
            }
            None => out.push((r, 1)),
        }
    }
    let mut roots: Vec<Complex64> = out.into_iter().map(|(s, n)| s / n as f64).collect();
    roots.sort_by(|a, b| a.total_cmp(b));
    roots
}

/// The primed system `z'_i = A^-1 (F(A z'_{i-1} + B) - B)`.
pub fn apply_affine<S: Scalar>(system: &PolySystem<S>, t: &TransformParams<S>) -> Result<PolySystem<S>> {
    system.require_depth_one()?;
    let k = system.k();
    if t.k() != k {
        return Err(Error::Dimension(format!(
            "transform of size {} for a system of {k} variables",
            t.k()
        )));
    }
    let substituted = system
        .polys
        .iter()
        .zip(t.b())
        .map(|(p, bp)| {
            let g = p.substitute_affine(t.a(), t.b(), u32::MAX)?;
            g.sub(&Poly::constant(k, bp.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let polys = (0..k)
        .map(|p| {
            let mut acc = Poly::zero(k);
            for (q, g) in substituted.iter().enumerate() {
                acc = acc.add(&g.scale(&t.a_inv()[(p, q)]))?;
            }
            Ok(acc.chopped(CHOP_TOL))
        })
        .collect::<Result<Vec<_>>>()?;
    PolySystem::new(system.names.clone(), 1, polys)
}

/// Eigenvalues of the linear part, with multiplicity, in [`Scalar::total_cmp`]
/// order.
pub fn linear_eigenvalues<S: Scalar>(system: &PolySystem<S>) -> Result<Vec<S>> {
    matrix_eigenvalues(&system.linear_part()?)
}

fn matrix_eigenvalues<S: Scalar>(c: &Matrix<S>) -> Result<Vec<S>> {
    let mut vals = if c.is_upper_triangular(0.0) {
        c.diag()
    } else {
        let cp = char_poly(c);
        match S::MODE {
            Mode::Exact => {
                let rat: Vec<BigRational> = cp
                    .iter()
                    .map(|x| x.as_rational().cloned().expect("exact scalar"))
                    .collect();
                let vals = rational_roots_with_multiplicity(&rat);
                if vals.len() != c.rows() {
                    return Err(Error::TriangularizationUnavailable(
                        "linear part has irrational or complex eigenvalues".into(),
                    ));
                }
                vals.iter().map(S::from_rational).collect()
            }
            Mode::Float => {
                let cx: Vec<Complex64> = cp.iter().map(Scalar::to_complex).collect();
                durand_kerner(&cx)
                    .into_iter()
                    .map(|z| S::from_complex(z).expect("float scalar"))
                    .collect()
            }
        }
    };
    vals.sort_by(Scalar::total_cmp);
    Ok(vals)
}

/// Characteristic polynomial `det(xI - C)` as coefficients `c_0..c_k`
/// (Faddeev-LeVerrier).
pub fn char_poly<S: Scalar>(c: &Matrix<S>) -> Vec<S> {
    let n = c.rows();
    let mut coeffs = vec![S::zero(); n + 1];
    coeffs[n] = S::one();
    let mut m = Matrix::zeros(n, n);
    for step in 1..=n {
        // M_step = C M_{step-1} + c_{n-step+1} I
        let mut next = c.mul(&m).expect("square");
        for i in 0..n {
            next[(i, i)] = next[(i, i)].clone() + coeffs[n - step + 1].clone();
        }
        m = next;
        let cm = c.mul(&m).expect("square");
        let trace = (0..n).fold(S::zero(), |acc, i| acc + cm[(i, i)].clone());
        coeffs[n - step] = -trace / S::from_i64(step as i64);
    }
    coeffs
}

fn rational_roots_with_multiplicity(coeffs: &[BigRational]) -> Vec<BigRational> {
    let mut out = Vec::new();
    for r in rational_roots(coeffs) {
        let mut c = coeffs.to_vec();
        loop {
            // synthetic division by (x - r)
            let n = c.len() - 1;
            let mut q = vec![<BigRational as Zero>::zero(); n];
            let mut acc = <BigRational as Zero>::zero();
            for j in (0..=n).rev() {
                acc = acc * &r + &c[j];
                if j > 0 {
                    q[j - 1] = acc.clone();
                }
            }
            if !Zero::is_zero(&acc) || n == 0 {
                break;
            }
            out.push(r.clone());
            c = q;
            if c.len() <= 1 {
                break;
            }
        }
    }
    out
}

/// Result of the shift admissibility check.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityReport<S> {
    /// Linear-part eigenvalues.
    pub eigenvalues: Vec<S>,
    pub max_power: u32,
    /// All products `prod lambda_p^{a_p}` over exponent vectors of total
    /// degree `<= max_power` (including the empty product 1) are distinct.
    pub pass: bool,
    /// First colliding pair of exponent vectors and their common value.
    pub collision: Option<(Monomial, Monomial, S)>,
    /// `(eigenvalue index, q)` with `lambda^q = 1`, `q <= root_of_unity_bound`.
    pub roots_of_unity: Vec<(usize, u32)>,
    /// Two-variable number-theoretic advisory; never gates.
    pub heuristic: Option<String>,
}

impl<S: Scalar> AdmissibilityReport<S> {
    pub fn summary(&self) -> String {
        let eig = self
            .eigenvalues
            .iter()
            .map(Scalar::render)
            .collect::<Vec<_>>()
            .join(", ");
        let mut s = format!(
            "eigenvalues {{{eig}}}: {} (distinct products up to degree {})",
            if self.pass { "PASS" } else { "FAIL" },
            self.max_power
        );
        if let Some((a, b, v)) = &self.collision {
            s.push_str(&format!(
                "; exponents {:?} and {:?} both give {}",
                a.exponents(),
                b.exponents(),
                v.render()
            ));
        }
        for (idx, q) in &self.roots_of_unity {
            s.push_str(&format!(
                "; eigenvalue {} is a root of unity (order {q})",
                self.eigenvalues[*idx].render()
            ));
        }
        if let Some(h) = &self.heuristic {
            s.push_str(&format!("; heuristic: {h}"));
        }
        s
    }
}

/// Checks that a shifted system's linear spectrum keeps the truncated
/// transition matrix diagonalizable up to `max_power`.
pub fn check_shift_admissible<S: Scalar>(
    system: &PolySystem<S>,
    max_power: u32,
    root_of_unity_bound: u32,
) -> Result<AdmissibilityReport<S>> {
    system.require_depth_one()?;
    if let Some(equation) = system.first_nonzero_constant(DISTINCT_TOL) {
        return Err(Error::NotShifted { equation });
    }
    let eigenvalues = linear_eigenvalues(system)?;
    let k = system.k();
    let basis = MonomialBasis::new(k, max_power)?;
    let products: Vec<(Monomial, S)> = basis
        .monomials()
        .iter()
        .map(|m| (m.clone(), m.eval(&eigenvalues)))
        .collect();
    let mut collision = None;
    'outer: for (i, (ma, va)) in products.iter().enumerate() {
        for (mb, vb) in &products[i + 1..] {
            if va.approx_eq(vb, DISTINCT_TOL) {
                collision = Some((ma.clone(), mb.clone(), va.clone()));
                break 'outer;
            }
        }
    }
    let mut roots_of_unity = Vec::new();
    for (idx, lam) in eigenvalues.iter().enumerate() {
        if let Some(q) = (1..=root_of_unity_bound).find(|&q| lam.powu(q as u64).approx_eq(&S::one(), DISTINCT_TOL)) {
            roots_of_unity.push((idx, q));
        }
    }
    let heuristic = (k == 2).then(|| two_variable_heuristic(eigenvalues[0].to_complex(), eigenvalues[1].to_complex()));
    Ok(AdmissibilityReport {
        eigenvalues,
        max_power,
        pass: collision.is_none(),
        collision,
        roots_of_unity,
        heuristic,
    })
}

/// Whether `x` looks rational: a continued-fraction convergent with a small
/// denominator reproduces it to near machine precision.
fn looks_rational(x: f64) -> Option<(i64, i64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    for _ in 0..20 {
        let a = r.floor();
        if a.abs() > 1e9 {
            break;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1).and_then(|v| v.checked_add(h0))?;
        let k2 = a.checked_mul(k1).and_then(|v| v.checked_add(k0))?;
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if k1 > 1000 {
            return None;
        }
        if (x - h1 as f64 / k1 as f64).abs() <= 1e-12 * (1.0 + x.abs()) {
            return Some((h1, k1));
        }
        let frac = r - r.floor();
        if frac.abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    None
}

fn two_variable_heuristic(l0: Complex64, l1: Complex64) -> String {
    let (r0, t0) = l0.to_polar();
    let (r1, t1) = l1.to_polar();
    if r0 == 0.0 || r1 == 0.0 || (r0 - 1.0).abs() < 1e-15 {
        return "inconclusive (zero or unit-modulus eigenvalue)".into();
    }
    let log_ratio = r1.ln() / r0.ln();
    if looks_rational(log_ratio).is_none() {
        return "log-modulus ratio appears irrational: sufficient condition satisfied".into();
    }
    let denom = t1 - t0 * log_ratio;
    if denom.abs() < 1e-15 {
        return "phase condition degenerate: sufficient condition not established".into();
    }
    match looks_rational(std::f64::consts::PI / denom) {
        None => "phase ratio appears irrational: sufficient condition satisfied".into(),
        Some(_) => "log-modulus and phase ratios appear rational: sufficient condition not established".into(),
    }
}

/// A fixed point together with its admissibility verdict.
#[derive(Clone, Debug)]
pub struct ShiftCandidate<S> {
    pub shift: Vec<S>,
    pub report: std::result::Result<AdmissibilityReport<S>, Error>,
}

impl<S: Scalar> ShiftCandidate<S> {
    pub fn passes(&self) -> bool {
        matches!(&self.report, Ok(r) if r.pass)
    }
}

/// Candidates in selection order plus the index of the chosen one.
#[derive(Clone, Debug)]
pub struct ShiftSelection<S> {
    pub candidates: Vec<ShiftCandidate<S>>,
    pub chosen: usize,
}

impl<S: Scalar> ShiftSelection<S> {
    pub fn chosen_shift(&self) -> &[S] {
        &self.candidates[self.chosen].shift
    }
}

/// Orders fixed points by smallest norm, then positive-before-negative,
/// then lexicographically, and picks the first admissible one. When none
/// passes the smallest is chosen and diagonalization has the final word.
pub fn select_shift<S: Scalar>(
    system: &PolySystem<S>,
    fixed: Vec<Vec<S>>,
    max_power: u32,
    root_of_unity_bound: u32,
) -> Result<ShiftSelection<S>> {
    if fixed.is_empty() {
        return Err(Error::ShiftNotFound);
    }
    let mut fixed = fixed;
    fixed.sort_by(|a, b| shift_order(a, b));
    let candidates: Vec<ShiftCandidate<S>> = fixed
        .into_iter()
        .map(|shift| {
            let report = apply_affine(system, &TransformParams::shift(shift.clone()))
                .and_then(|s| check_shift_admissible(&s, max_power, root_of_unity_bound));
            ShiftCandidate { shift, report }
        })
        .collect();
    let chosen = candidates
        .iter()
        .position(ShiftCandidate::passes)
        .or_else(|| candidates.iter().position(|c| c.report.is_ok()))
        .unwrap_or(0);
    Ok(ShiftSelection { candidates, chosen })
}

fn shift_order<S: Scalar>(a: &[S], b: &[S]) -> Ordering {
    let sign = |v: &[S]| -> i8 {
        v.iter().find(|x| !x.is_zero()).map_or(0, |x| match x.as_rational() {
            Some(r) => i8::from(r.is_negative()),
            None => i8::from(x.to_complex().re < 0.0),
        })
    };
    let norm2 = |v: &[S]| -> Option<BigRational> {
        v.iter()
            .map(|x| x.as_rational().map(|r| r * r))
            .sum::<Option<BigRational>>()
    };
    let by_norm = match (norm2(a), norm2(b)) {
        (Some(x), Some(y)) => x.cmp(&y),
        _ => norm(a).total_cmp(&norm(b)),
    };
    by_norm.then_with(|| sign(a).cmp(&sign(b))).then_with(|| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Brings the linear part of a shifted system to upper-triangular form.
///
/// Already-triangular parts keep `A = I`. Otherwise, with pairwise distinct
/// eigenvalues `A` holds eigenvectors (ascending by eigenvalue, first nonzero
/// entry 1) and the linear part becomes diagonal; with repeated eigenvalues
/// one eigenvector at a time is deflated (Schur-style, Householder
/// reflections in float mode).
pub fn triangularize_linear<S: Scalar>(system: &PolySystem<S>) -> Result<(PolySystem<S>, TransformParams<S>)> {
    system.require_depth_one()?;
    if let Some(equation) = system.first_nonzero_constant(DISTINCT_TOL) {
        return Err(Error::NotShifted { equation });
    }
    let c = system.linear_part()?;
    let k = c.rows();
    if c.is_upper_triangular(0.0) {
        return Ok((system.clone(), TransformParams::identity(k)));
    }
    let a = triangularizing_matrix(&c)?;
    let t = TransformParams::new(a, vec![S::zero(); k])?;
    let transformed = apply_affine(system, &t)?;
    let lin = transformed.linear_part()?;
    if let Some((row, col)) = lin.first_subdiagonal_nonzero(TRIANGULAR_TOL) {
        return Err(Error::NotTriangular { row, col });
    }
    Ok((zero_subdiagonal(transformed), t))
}

/// Drops float noise strictly below the diagonal of the linear part.
fn zero_subdiagonal<S: Scalar>(mut system: PolySystem<S>) -> PolySystem<S> {
    if S::MODE == Mode::Exact {
        return system;
    }
    let k = system.k();
    for (p, poly) in system.polys.iter_mut().enumerate() {
        for q in 0..p {
            let m = Monomial::var(k, q);
            let c = poly.coeff(&m);
            poly.add_term(m, -c);
        }
    }
    system
}

/// Invertible `A` with `A^-1 C A` upper triangular.
pub fn triangularizing_matrix<S: Scalar>(c: &Matrix<S>) -> Result<Matrix<S>> {
    let k = c.rows();
    let eig = matrix_eigenvalues(c)?;
    let distinct = eig
        .iter()
        .enumerate()
        .all(|(i, a)| eig[i + 1..].iter().all(|b| !a.approx_eq(b, DISTINCT_TOL)));
    if distinct {
        let vecs = eig.iter().map(|lam| eigenvector(c, lam)).collect::<Result<Vec<_>>>()?;
        let rows = (0..k).map(|i| vecs.iter().map(|v| v[i].clone()).collect()).collect();
        return Matrix::from_rows(rows);
    }
    deflate(c, &eig)
}

fn deflate<S: Scalar>(c: &Matrix<S>, eig: &[S]) -> Result<Matrix<S>> {
    let k = c.rows();
    if k == 1 {
        return Ok(Matrix::identity(1));
    }
    let v = eigenvector(c, &eig[0])?;
    let q = match S::MODE {
        Mode::Exact => {
            // columns: v, then unit vectors except at v's pivot
            let pivot = v.iter().position(|x| !x.is_zero()).expect("nonzero eigenvector");
            let mut q = Matrix::zeros(k, k);
            for i in 0..k {
                q[(i, 0)] = v[i].clone();
            }
            for (col, j) in (0..k).filter(|&j| j != pivot).enumerate() {
                q[(j, col + 1)] = S::one();
            }
            q
        }
        Mode::Float => householder_with_first_column(&v),
    };
    let reduced = q.inverse()?.mul(c)?.mul(&q)?;
    let inner = deflate(
        &reduced.trailing_block(1),
        &matrix_eigenvalues(&reduced.trailing_block(1))?,
    )?;
    let mut embed = Matrix::identity(k);
    for i in 0..k - 1 {
        for j in 0..k - 1 {
            embed[(i + 1, j + 1)] = inner[(i, j)].clone();
        }
    }
    q.mul(&embed)
}

/// Unitary reflector whose first column is parallel to `v`.
fn householder_with_first_column<S: Scalar>(v: &[S]) -> Matrix<S> {
    let k = v.len();
    let vc: Vec<Complex64> = v.iter().map(Scalar::to_complex).collect();
    let nv = vc.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let phase = if vc[0].norm() > 0.0 {
        vc[0] / vc[0].norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    // H e1 = -phase * v/|v|; w = v + phase |v| e1
    let mut w = vc.clone();
    w[0] += phase * nv;
    let wn = w.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let mut h = Matrix::identity(k);
    if wn == 0.0 {
        return h;
    }
    for i in 0..k {
        for j in 0..k {
            let e = -(w[i] * w[j].conj()) * (2.0 / wn);
            h[(i, j)] = h[(i, j)].clone() + S::from_complex(e).expect("float scalar");
        }
    }
    h
}

/// A null vector of `C - lambda I`, first nonzero entry scaled to 1.
fn eigenvector<S: Scalar>(c: &Matrix<S>, lambda: &S) -> Result<Vec<S>> {
    let k = c.rows();
    let mut m = c.clone();
    for i in 0..k {
        m[(i, i)] = m[(i, i)].clone() - lambda.clone();
    }
    let scale = c.max_magnitude().max(lambda.magnitude()).max(1.0);
    if S::MODE == Mode::Float {
        return float_eigenvector(&m, scale);
    }
    // exact reduced row echelon form
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..k {
        if row == k {
            break;
        }
        let Some(p) = (row..k).find(|&r| !m[(r, col)].is_zero()) else {
            continue;
        };
        m.swap_rows(row, p);
        let piv = m[(row, col)].clone();
        for j in 0..k {
            m[(row, j)] = m[(row, j)].clone() / piv.clone();
        }
        for r in 0..k {
            if r != row && !m[(r, col)].is_zero() {
                let f = m[(r, col)].clone();
                for j in 0..k {
                    let t = m[(row, j)].clone() * f.clone();
                    m[(r, j)] = m[(r, j)].clone() - t;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    let free = match (0..k).find(|j| !pivots.contains(j)) {
        Some(f) => f,
        None => {
            return Err(Error::TriangularizationUnavailable(format!(
                "{} is not an eigenvalue of the linear part",
                lambda.render()
            )))
        }
    };
    let mut v = vec![S::zero(); k];
    v[free] = S::one();
    for (r, &pc) in pivots.iter().enumerate() {
        v[pc] = -m[(r, free)].clone();
    }
    let lead = v.iter().find(|x| !x.is_zero()).cloned().expect("free entry is one");
    Ok(v.into_iter().map(|x| x / lead.clone()).collect())
}

/// Inverse iteration on `m = C - lambda I`, nudged off the exact eigenvalue so
/// the solve stays nonsingular. Rank decisions never depend on a pivot cutoff.
fn float_eigenvector<S: Scalar>(m: &Matrix<S>, scale: f64) -> Result<Vec<S>> {
    let k = m.rows();
    let real = |x: f64| S::from_complex(Complex64::new(x, 0.0)).expect("float scalar");
    // irrational start entries: a rational matrix cannot hide the target
    // direction from them, and the residual check catches the rest
    let starts = [
        0.618_033_988_749_894_9,
        0.414_213_562_373_095_1,
        0.732_050_807_568_877_3,
    ];
    for (attempt, nudge) in [1e-10, 1e-7, 1e-4].into_iter().enumerate() {
        let mut shifted = m.clone();
        for i in 0..k {
            shifted[(i, i)] = shifted[(i, i)].clone() - real(nudge * scale);
        }
        let phi = starts[attempt];
        let mut v: Vec<S> = (0..k).map(|i| real(0.5 + (phi * (i + 1) as f64).fract())).collect();
        let mut ok = true;
        for _ in 0..4 {
            let Ok(next) = shifted.solve(&v) else {
                ok = false;
                break;
            };
            let nmax = next.iter().map(Scalar::magnitude).fold(0.0, f64::max);
            if !nmax.is_finite() || nmax == 0.0 {
                ok = false;
                break;
            }
            v = next.into_iter().map(|x| x * real(1.0 / nmax)).collect();
        }
        let residual = m.mul_vec(&v)?.iter().map(Scalar::magnitude).fold(0.0, f64::max);
        if ok && residual <= 1e-6 * scale {
            let lead = v
                .iter()
                .find(|x| x.magnitude() > 1e-9)
                .cloned()
                .expect("normalized vector has a unit entry");
            return Ok(v.into_iter().map(|x| x / lead.clone()).collect());
        }
    }
    Err(Error::TriangularizationUnavailable(
        "eigenvector iteration did not converge".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_system;
    use crate::scalar::q;

    type R = BigRational;

    fn sys(text: &str) -> PolySystem<R> {
        parse_system(text).unwrap()
    }

    fn mat(rows: &[&[i64]]) -> Matrix<R> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| q(v, 1)).collect()).collect()).unwrap()
    }

    const EX35: &str = "vars: u, v\n\
        u[i] = 8*u[i-1] + 10*v[i-1] + u[i-1]^2 + 3*u[i-1]*v[i-1] + v[i-1]^2\n\
        v[i] = -3*u[i-1] - 3*v[i-1] + u[i-1]^2 - u[i-1]*v[i-1] + v[i-1]^2";

    #[test]
    fn fibonacci_reduction() {
        let s = sys("vars: u\nu[i] = u[i-1] + u[i-2]");
        let r = reduce_depth(&s);
        assert_eq!((r.k(), r.depth()), (2, 1));
        assert_eq!(r.polys()[1], Poly::var(2, 0));
        let mut state = vec![q(1, 1), q(1, 1)];
        let mut hist = (q(1, 1), q(1, 1));
        for _ in 0..10 {
            state = r.step(&state).unwrap();
            hist = (hist.0.clone() + hist.1.clone(), hist.0);
            assert_eq!(state[0], hist.0);
        }
    }

    #[test]
    fn reduction_is_identity_at_depth_one() {
        let s = sys("vars: u\nu[i] = 2*u[i-1]");
        assert_eq!(reduce_depth(&s), s);
    }

    #[test]
    fn nonlinear_depth_two_reduction() {
        let s = sys("vars: u\nu[i] = 2*u[i-1] + 3*u[i-2] + u[i-1]*u[i-2]");
        let r = reduce_depth(&s);
        let mut state = vec![q(1, 1), q(0, 1)];
        let (mut a, mut b) = (q(1, 1), q(0, 1));
        for _ in 0..10 {
            state = r.step(&state).unwrap();
            let next = q(2, 1) * a.clone() + q(3, 1) * b.clone() + a.clone() * b.clone();
            b = a;
            a = next;
            assert_eq!(state, vec![a.clone(), b.clone()]);
        }
    }

    #[test]
    fn univariate_fixed_points() {
        let s = sys("vars: u\nu[i] = u[i-1]^3 + 2*u[i-1]^2 + u[i-1]");
        assert_eq!(fixed_points(&s, &[], 0).unwrap(), vec![vec![q(-2, 1)], vec![q(0, 1)]]);
        let s = sys("vars: u\nu[i] = 2*u[i-1] - 2*u[i-1]^2");
        assert_eq!(fixed_points(&s, &[], 0).unwrap(), vec![vec![q(0, 1)], vec![q(1, 2)]]);
    }

    #[test]
    fn multivariate_exact_fixed_points() {
        assert_eq!(fixed_points(&sys(EX35), &[], 0).unwrap(), vec![vec![q(0, 1), q(0, 1)]]);
        let s = sys("vars: u, v\nu[i] = u[i-1]*v[i-1] + 1\nv[i] = v[i-1]");
        assert!(matches!(fixed_points(&s, &[], 0), Err(Error::ShiftNotFound)));
        let found = fixed_points(&s, &[vec![q(-1, 1), q(2, 1)]], 0).unwrap();
        assert_eq!(found, vec![vec![q(-1, 1), q(2, 1)]]);
    }

    #[test]
    fn float_newton_finds_fixed_points() {
        let s: PolySystem<Complex64> =
            parse_system("vars: u, v\nu[i] = 0.5*u[i-1] + v[i-1]^2 + 0.25\nv[i] = 0.5*v[i-1]").unwrap();
        let found = fixed_points(&s, &[], 7).unwrap();
        assert!(!found.is_empty());
        for b in &found {
            assert!(is_fixed_point(&s, b).unwrap());
        }
        assert!(found.iter().any(|b| (b[0] - Complex64::new(0.5, 0.0)).norm() < 1e-9));
    }

    #[test]
    fn example_2_3_shift() {
        let s = sys("vars: u\nu[i] = u[i-1]^3 + 2*u[i-1]^2 + u[i-1]");
        let shifted = apply_affine(&s, &TransformParams::shift(vec![q(-2, 1)])).unwrap();
        assert_eq!(shifted, sys("vars: u\nu[i] = u[i-1]^3 - 4*u[i-1]^2 + 5*u[i-1]"));
    }

    #[test]
    fn example_3_5_transformed_arrays() {
        let t = TransformParams::new(mat(&[&[-5, -2], &[3, 1]]), vec![q(0, 1), q(0, 1)]).unwrap();
        let out = apply_affine(&sys(EX35), &t).unwrap();
        let arr = out.coeff_arrays().unwrap();
        assert_eq!(arr.linear, mat(&[&[2, 0], &[0, 3]]));
        let expect = [([0, 0], 87, -212), ([0, 1], 67, -164), ([1, 1], 13, -32)];
        for (tuple, c0, c1) in expect {
            assert_eq!(arr.get(0, &tuple), q(c0, 1));
            assert_eq!(arr.get(1, &tuple), q(c1, 1));
        }
        assert_eq!(arr.get(0, &[1, 0]), q(0, 1));
        assert_eq!(arr.to_polys(), out.polys().to_vec());
    }

    #[test]
    fn affine_round_trip() {
        let s = sys(EX35);
        let t = TransformParams::new(mat(&[&[1, 2], &[-3, -5]]), vec![q(1, 2), q(-3, 1)]).unwrap();
        let back = apply_affine(&apply_affine(&s, &t).unwrap(), &t.inverse()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn singular_transform_is_rejected() {
        assert!(TransformParams::new(mat(&[&[1, 2], &[2, 4]]), vec![q(0, 1); 2]).is_err());
    }

    #[test]
    fn admissibility() {
        let s = sys("vars: u\nu[i] = 2*u[i-1] - 2*u[i-1]^2");
        assert!(check_shift_admissible(&s, 6, 12).unwrap().pass);
        let r = check_shift_admissible(&sys(EX35), 2, 12).unwrap();
        assert_eq!(r.eigenvalues, vec![q(2, 1), q(3, 1)]);
        assert!(r.pass);
        let s = sys("vars: u\nu[i] = u[i-1]^3 + 2*u[i-1]^2 + u[i-1]");
        let r = check_shift_admissible(&s, 3, 12).unwrap();
        assert!(!r.pass);
        assert_eq!(r.roots_of_unity, vec![(0, 1)]);
        let s = sys("vars: u\nu[i] = 1 + u[i-1]");
        assert!(matches!(
            check_shift_admissible(&s, 3, 12),
            Err(Error::NotShifted { equation: 0 })
        ));
    }

    #[test]
    fn shift_selection_prefers_admissible() {
        let s = sys("vars: u\nu[i] = u[i-1]^3 + 2*u[i-1]^2 + u[i-1]");
        let sel = select_shift(&s, fixed_points(&s, &[], 0).unwrap(), 6, 12).unwrap();
        assert_eq!(sel.candidates[0].shift, vec![q(0, 1)]);
        assert!(!sel.candidates[0].passes());
        assert_eq!(sel.chosen_shift(), &[q(-2, 1)]);
        let s = sys("vars: u\nu[i] = 2*u[i-1] - 2*u[i-1]^2");
        let sel = select_shift(&s, fixed_points(&s, &[], 0).unwrap(), 6, 12).unwrap();
        assert_eq!(sel.chosen_shift(), &[q(0, 1)]);
    }

    #[test]
    fn triangularize_example_3_5() {
        let (out, t) = triangularize_linear(&sys(EX35)).unwrap();
        let lin = out.linear_part().unwrap();
        assert!(lin.is_upper_triangular(0.0));
        assert_eq!(lin.diag(), vec![q(2, 1), q(3, 1)]);
        let c = sys(EX35).linear_part().unwrap();
        assert_eq!(t.a_inv().mul(&c).unwrap().mul(t.a()).unwrap(), lin);
    }

    #[test]
    fn triangularize_swap() {
        let s = sys("vars: u, v\nu[i] = v[i-1]\nv[i] = u[i-1]");
        let (out, t) = triangularize_linear(&s).unwrap();
        assert_eq!(out.linear_part().unwrap(), mat(&[&[-1, 0], &[0, 1]]));
        assert_eq!(
            t.a(),
            &Matrix::from_rows(vec![vec![q(1, 1), q(1, 1)], vec![q(-1, 1), q(1, 1)]]).unwrap()
        );
    }

    #[test]
    fn triangularize_identity_when_already_triangular() {
        let s = sys("vars: u, v\nu[i] = 2*u[i-1] + v[i-1]\nv[i] = 3*v[i-1]");
        let (out, t) = triangularize_linear(&s).unwrap();
        assert!(t.is_identity());
        assert_eq!(out, s);
    }

    #[test]
    fn triangularize_repeated_eigenvalue_by_deflation() {
        // [[2,1],[-1,0]] has the double eigenvalue 1 and a single eigenvector
        let s = sys("vars: u, v\nu[i] = 2*u[i-1] + v[i-1]\nv[i] = -u[i-1]");
        let (out, _) = triangularize_linear(&s).unwrap();
        let lin = out.linear_part().unwrap();
        assert!(lin.is_upper_triangular(0.0));
        assert_eq!(lin.diag(), vec![q(1, 1), q(1, 1)]);
    }

    #[test]
    fn irrational_spectrum_in_exact_mode() {
        let s = sys("vars: u, v\nu[i] = u[i-1] + v[i-1]\nv[i] = u[i-1]");
        assert!(matches!(
            triangularize_linear(&s),
            Err(Error::TriangularizationUnavailable(_))
        ));
        let f: PolySystem<Complex64> = parse_system("vars: u, v\nu[i] = u[i-1] + v[i-1]\nv[i] = u[i-1]").unwrap();
        let (out, _) = triangularize_linear(&f).unwrap();
        let d = out.linear_part().unwrap().diag();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((d[0].re - (1.0 - phi)).abs() < 1e-12 && (d[1].re - phi).abs() < 1e-12);
    }

    #[test]
    fn float_rotation_is_triangularized() {
        let f: PolySystem<Complex64> = parse_system("vars: u, v\nu[i] = -v[i-1]\nv[i] = u[i-1] + u[i-1]^2").unwrap();
        let (out, t) = triangularize_linear(&f).unwrap();
        assert!(out.linear_part().unwrap().is_upper_triangular(0.0));
        let back = apply_affine(&out, &t.inverse()).unwrap();
        for (a, b) in back.polys().iter().zip(f.polys()) {
            let diff = a.sub(b).unwrap();
            assert!(diff.terms().values().all(|c| c.norm() < 1e-12));
        }
    }

    #[test]
    fn char_poly_of_example() {
        assert_eq!(
            char_poly(&mat(&[&[8, 10], &[-3, -3]])),
            vec![q(6, 1), q(-5, 1), q(1, 1)]
        );
        assert_eq!(
            rational_roots_with_multiplicity(&[q(1, 1), q(-2, 1), q(1, 1)]),
            vec![q(1, 1), q(1, 1)]
        );
    }

    #[test]
    fn rationality_heuristic() {
        assert_eq!(looks_rational(0.75), Some((3, 4)));
        assert_eq!(looks_rational(std::f64::consts::LN_2), None);
    }
}
