//! End-to-end pipeline from a recurrence system to verified closed forms,
//! plus the brute-force symbolic-iteration oracles.

use std::collections::{BTreeMap, BTreeSet};

use crate::carleman::{build_transition, CarlemanMatrix, MonomialBasis};
use crate::error::{Error, Result, SolveError, Stage, StageExt};
use crate::parser::split_sign;
use crate::recurrence::{
    apply_affine, fixed_points, is_fixed_point, reduce_depth, select_shift, triangularize_linear, PolySystem,
    ShiftSelection, TransformParams,
};
use crate::scalar::{Matrix, Mode, Monomial, Poly, Scalar};
use crate::spectral::SpectralDecomposition;

/// Default truncation order.
pub const DEFAULT_ORDER: u32 = 6;
/// Largest intermediate polynomial the oracles will expand.
pub const ORACLE_TERM_LIMIT: usize = 1_000_000;

const MERGE_TOL: f64 = 1e-9;
const CONSTANT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum ShiftSpec<S> {
    /// Pick an admissible fixed point.
    Auto,
    /// Require a zero constant term; no shift.
    None,
    Explicit(Vec<S>),
}

#[derive(Clone, Debug)]
pub struct SolveOptions<S> {
    pub order: u32,
    pub shift: ShiftSpec<S>,
    /// Explicit `A` in `z = A z' + B`; `None` triangularizes automatically.
    pub matrix_a: Option<Matrix<S>>,
    pub max_verify_power: u32,
    pub seed: u64,
    /// Float-mode relative tolerance for verification.
    pub tolerance: f64,
    /// Largest `q` tried in the root-of-unity advisory.
    pub root_of_unity_bound: u32,
}

impl<S: Scalar> Default for SolveOptions<S> {
    fn default() -> Self {
        Self {
            order: DEFAULT_ORDER,
            shift: ShiftSpec::Auto,
            matrix_a: None,
            max_verify_power: 5,
            seed: 0,
            tolerance: 1e-8,
            root_of_unity_bound: 12,
        }
    }
}

impl<S: Scalar> SolveOptions<S> {
    pub fn with_order(order: u32) -> Self {
        Self {
            order,
            ..Self::default()
        }
    }
}

/// `sum_m coeff_m * base_m^i` with distinct bases and nonzero coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpSum<S> {
    terms: Vec<(S, S)>,
}

impl<S: Scalar> ExpSum<S> {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    /// Merges equal bases (within `1e-9` relative in float mode), drops zero
    /// coefficients and sorts by base.
    pub fn from_terms(terms: impl IntoIterator<Item = (S, S)>) -> Self {
        let mut merged: Vec<(S, S)> = Vec::new();
        for (base, coeff) in terms {
            match merged.iter_mut().find(|(b, _)| b.approx_eq(&base, MERGE_TOL)) {
                Some((_, c)) => *c = c.clone() + coeff,
                None => merged.push((base, coeff)),
            }
        }
        let scale = merged.iter().map(|(_, c)| c.magnitude()).fold(0.0, f64::max);
        merged.retain(|(_, c)| !c.is_zero() && (S::MODE == Mode::Exact || c.magnitude() > 1e-15 * scale));
        merged.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { terms: merged }
    }

    pub fn terms(&self) -> &[(S, S)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, i: u64) -> S {
        self.terms
            .iter()
            .fold(S::zero(), |acc, (b, c)| acc + c.clone() * b.powu(i))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(self.terms.iter().chain(&other.terms).cloned())
    }

    pub fn scale(&self, s: &S) -> Self {
        Self::from_terms(self.terms.iter().map(|(b, c)| (b.clone(), c.clone() * s.clone())))
    }

    /// ASCII rendering with ascending bases, e.g. `-5*2^i + 6*3^i`.
    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (idx, (base, coeff)) in self.terms.iter().enumerate() {
            let (neg, mag) = split_sign(coeff);
            if idx == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let power = if *base == S::one() {
                None
            } else {
                let b = base.render();
                let b = if b.starts_with('-') || b.contains('/') {
                    format!("({b})")
                } else {
                    b
                };
                Some(format!("{b}^i"))
            };
            match (power, mag == S::one()) {
                (None, _) => out.push_str(&mag.render()),
                (Some(p), true) => out.push_str(&p),
                (Some(p), false) => {
                    out.push_str(&mag.render());
                    out.push('*');
                    out.push_str(&p);
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.terms
                .iter()
                .map(|(b, c)| serde_json::json!({"base": b.to_json(), "coeff": c.to_json()}))
                .collect(),
        )
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let arr = v
            .as_array()
            .ok_or_else(|| Error::Json(format!("expected expsum array, found {v}")))?;
        let terms = arr
            .iter()
            .map(|t| {
                let base = S::from_json(
                    t.get("base")
                        .ok_or_else(|| Error::Json("expsum term lacks `base`".into()))?,
                )?;
                let coeff = S::from_json(
                    t.get("coeff")
                        .ok_or_else(|| Error::Json("expsum term lacks `coeff`".into()))?,
                )?;
                Ok((base, coeff))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_terms(terms))
    }
}

/// Coefficient functions per variable: initial-condition monomial ↦ ExpSum.
pub type CoefficientMap<S> = BTreeMap<Monomial, ExpSum<S>>;

/// Closed form of the (depth-reduced) system.
///
/// `original[p]` expresses variable `p` at step `i` in the original
/// coordinates of the initial state; `transformed[s]` does the same for the
/// triangularized coordinates `z' = A^-1 (z - B)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedFormSolution<S> {
    /// Names of the reduced variables (original names first).
    pub names: Vec<String>,
    /// Variable count before depth reduction.
    pub k: usize,
    pub depth: usize,
    pub order: u32,
    pub transform: TransformParams<S>,
    pub offsets: Vec<S>,
    pub original: Vec<CoefficientMap<S>>,
    pub transformed: Vec<CoefficientMap<S>>,
}

impl<S: Scalar> ClosedFormSolution<S> {
    pub fn mode(&self) -> Mode {
        S::MODE
    }

    /// Number of state variables of the reduced system.
    pub fn state_len(&self) -> usize {
        self.names.len()
    }

    pub fn coefficient(&self, variable: usize, monomial: &Monomial) -> Option<&ExpSum<S>> {
        self.original[variable].get(monomial)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let vars = |maps: &[CoefficientMap<S>], with_offset: bool| -> Vec<serde_json::Value> {
            maps.iter()
                .enumerate()
                .map(|(p, map)| {
                    let terms: Vec<_> = map
                        .iter()
                        .map(|(m, e)| serde_json::json!({"monomial": m.exponents(), "expsum": e.to_json()}))
                        .collect();
                    let mut v = serde_json::json!({"name": self.names[p], "terms": terms});
                    if with_offset {
                        v["offset"] = self.offsets[p].to_json();
                    }
                    v
                })
                .collect()
        };
        serde_json::json!({
            "variables": vars(&self.original, true),
            "transformed_variables": vars(&self.transformed, false),
            "transform": self.transform.to_json(),
            "order": self.order,
            "mode": S::MODE.name(),
            "k": self.k,
            "depth": self.depth,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let mode = v.get("mode").and_then(|m| m.as_str()).unwrap_or("");
        if mode != S::MODE.name() {
            return Err(Error::Json(format!(
                "solution mode `{mode}` does not match `{}`",
                S::MODE
            )));
        }
        type Vars<S> = (Vec<String>, Vec<S>, Vec<CoefficientMap<S>>);
        let read_vars = |key: &str| -> Result<Vars<S>> {
            let arr = v
                .get(key)
                .and_then(|a| a.as_array())
                .ok_or_else(|| Error::Json(format!("solution lacks `{key}`")))?;
            let mut names = Vec::new();
            let mut offsets = Vec::new();
            let mut maps = Vec::new();
            for var in arr {
                names.push(var.get("name").and_then(|n| n.as_str()).unwrap_or("").to_string());
                offsets.push(match var.get("offset") {
                    Some(o) => S::from_json(o)?,
                    None => S::zero(),
                });
                let mut map = CoefficientMap::new();
                for term in var.get("terms").and_then(|t| t.as_array()).into_iter().flatten() {
                    let exps = term
                        .get("monomial")
                        .and_then(|m| m.as_array())
                        .ok_or_else(|| Error::Json("term lacks `monomial`".into()))?
                        .iter()
                        .map(|e| {
                            e.as_u64()
                                .map(|e| e as u32)
                                .ok_or_else(|| Error::Json(format!("bad exponent {e}")))
                        })
                        .collect::<Result<Vec<u32>>>()?;
                    let e = ExpSum::from_json(
                        term.get("expsum")
                            .ok_or_else(|| Error::Json("term lacks `expsum`".into()))?,
                    )?;
                    map.insert(Monomial::new(exps), e);
                }
                maps.push(map);
            }
            Ok((names, offsets, maps))
        };
        let (names, offsets, original) = read_vars("variables")?;
        let transformed = match v.get("transformed_variables") {
            Some(_) => read_vars("transformed_variables")?.2,
            None => vec![CoefficientMap::new(); names.len()],
        };
        let order = v
            .get("order")
            .and_then(|o| o.as_u64())
            .ok_or_else(|| Error::Json("solution lacks `order`".into()))? as u32;
        let transform = TransformParams::from_json(
            v.get("transform")
                .ok_or_else(|| Error::Json("solution lacks `transform`".into()))?,
        )?;
        if transform.k() != names.len() || transformed.len() != names.len() {
            return Err(Error::Json(
                "solution variable count does not match its transform".into(),
            ));
        }
        let k = v.get("k").and_then(|x| x.as_u64()).map_or(names.len(), |x| x as usize);
        let depth = v.get("depth").and_then(|x| x.as_u64()).map_or(1, |x| x as usize);
        Ok(Self {
            names,
            k,
            depth,
            order,
            transform,
            offsets,
            original,
            transformed,
        })
    }
}

/// Everything the pipeline decides before diagonalization.
#[derive(Clone, Debug)]
pub struct Prepared<S> {
    pub reduced: PolySystem<S>,
    /// Shift candidates and choice, when the shift was chosen automatically.
    pub selection: Option<ShiftSelection<S>>,
    pub transform: TransformParams<S>,
    /// The reduced system in triangularized coordinates.
    pub transformed: PolySystem<S>,
}

/// Depth reduction, shift and linear triangularization.
pub fn prepare<S: Scalar>(system: &PolySystem<S>, opts: &SolveOptions<S>) -> Result<Prepared<S>, SolveError> {
    if opts.order == 0 {
        return Err(SolveError::new(
            Stage::Transition,
            Error::Dimension("truncation order must be at least 1".into()),
        ));
    }
    let reduced = reduce_depth(system);
    let k = reduced.k();
    let mut selection = None;
    let shift = match &opts.shift {
        ShiftSpec::None => {
            if !reduced.is_shifted(CONSTANT_TOL) {
                let equation = reduced
                    .constant_terms()
                    .iter()
                    .position(|c| !c.is_negligible(1.0, CONSTANT_TOL))
                    .unwrap_or(0);
                return Err(SolveError::new(Stage::Shift, Error::NotShifted { equation }));
            }
            vec![S::zero(); k]
        }
        ShiftSpec::Explicit(b) => {
            if b.len() != k {
                return Err(SolveError::new(
                    Stage::Shift,
                    Error::Arity {
                        expected: k,
                        found: b.len(),
                    },
                ));
            }
            if !is_fixed_point(&reduced, b).at(Stage::Shift)? {
                return Err(SolveError::new(
                    Stage::Shift,
                    Error::InvalidShift(format!(
                        "F(B) != B for B = ({})",
                        b.iter().map(Scalar::render).collect::<Vec<_>>().join(", ")
                    )),
                ));
            }
            b.clone()
        }
        ShiftSpec::Auto => {
            let fixed = fixed_points(&reduced, &[], opts.seed).at(Stage::Shift)?;
            let sel = select_shift(&reduced, fixed, opts.order, opts.root_of_unity_bound).at(Stage::Shift)?;
            let b = sel.chosen_shift().to_vec();
            selection = Some(sel);
            b
        }
    };
    let shift_t = TransformParams::shift(shift);
    let shifted = without_constants(apply_affine(&reduced, &shift_t).at(Stage::Transform)?);
    let (transformed, linear_t) = match &opts.matrix_a {
        None => triangularize_linear(&shifted).at(Stage::Triangularization)?,
        Some(a) => {
            let t = TransformParams::new(a.clone(), vec![S::zero(); k]).at(Stage::Triangularization)?;
            let out = apply_affine(&shifted, &t).at(Stage::Transform)?;
            let tol = match S::MODE {
                Mode::Exact => 0.0,
                Mode::Float => 1e-10,
            };
            if let Some((row, col)) = out
                .linear_part()
                .at(Stage::Triangularization)?
                .first_subdiagonal_nonzero(tol)
            {
                return Err(SolveError::new(
                    Stage::Triangularization,
                    Error::NotTriangular { row, col },
                ));
            }
            (out, t)
        }
    };
    let transform = shift_t.then(&linear_t).at(Stage::Transform)?;
    Ok(Prepared {
        reduced,
        selection,
        transform,
        transformed: without_constants(transformed),
    })
}

/// Float noise in constant terms would break triangularity; they are
/// verified negligible before this point.
fn without_constants<S: Scalar>(system: PolySystem<S>) -> PolySystem<S> {
    if S::MODE == Mode::Exact {
        return system;
    }
    let k = system.k();
    let polys = system
        .polys()
        .iter()
        .map(|p| {
            let mut p = p.clone();
            let c = p.constant_term();
            if c.is_negligible(1.0, CONSTANT_TOL) {
                p.add_term(Monomial::one(k), -c);
            }
            p
        })
        .collect();
    PolySystem::new(system.names().to_vec(), 1, polys).expect("shape unchanged")
}

/// Transition matrix of the prepared system at `order`.
pub fn transition<S: Scalar>(prepared: &Prepared<S>, order: u32) -> Result<CarlemanMatrix<S>, SolveError> {
    let basis = MonomialBasis::new(prepared.transformed.k(), order).at(Stage::Transition)?;
    build_transition(&prepared.transformed, &basis).at(Stage::Transition)
}

/// Runs the whole pipeline.
pub fn solve<S: Scalar>(system: &PolySystem<S>, opts: &SolveOptions<S>) -> Result<ClosedFormSolution<S>, SolveError> {
    let prepared = prepare(system, opts)?;
    let t = transition(&prepared, opts.order)?;
    let dec = SpectralDecomposition::of(t.entries()).at(Stage::Diagonalization)?;
    let transformed = assemble_transformed(&t, &dec);
    let original = pull_back(&transformed, &prepared.transform, t.basis()).at(Stage::Assembly)?;
    Ok(ClosedFormSolution {
        names: prepared.reduced.names().to_vec(),
        k: system.k(),
        depth: system.depth(),
        order: opts.order,
        offsets: prepared.transform.b().to_vec(),
        transform: prepared.transform,
        original,
        transformed,
    })
}

/// Row `s+1` of `P D^i P^-1`: the coefficient of basis monomial `l` is
/// `sum_j P[s+1][j] P^-1[j][l] λ_j^i`.
fn assemble_transformed<S: Scalar>(t: &CarlemanMatrix<S>, dec: &SpectralDecomposition<S>) -> Vec<CoefficientMap<S>> {
    let basis = t.basis();
    (0..basis.k())
        .map(|s| {
            let row = s + 1;
            let mut map = CoefficientMap::new();
            for l in row..basis.len() {
                let e = ExpSum::from_terms((row..=l).filter_map(|j| {
                    let (pv, pi) = (&dec.p[(row, j)], &dec.p_inv[(j, l)]);
                    (!pv.is_zero() && !pi.is_zero()).then(|| (dec.eigenvalues[j].clone(), pv.clone() * pi.clone()))
                }));
                if !e.is_zero() {
                    map.insert(basis.monomial(l).clone(), e);
                }
            }
            map
        })
        .collect()
}

/// Rewrites transformed-coordinate coefficient functions in the original
/// coordinates: `z_i = A z'_i + B` with `z'_0 = A^-1 (z_0 - B)`.
fn pull_back<S: Scalar>(
    transformed: &[CoefficientMap<S>],
    t: &TransformParams<S>,
    basis: &MonomialBasis,
) -> Result<Vec<CoefficientMap<S>>> {
    let k = t.k();
    let order = basis.order();
    let neg_shift: Vec<S> = t.a_inv().mul_vec(t.b())?.into_iter().map(|x| -x).collect();
    let trivial = t.is_identity();
    let mut images: BTreeMap<Monomial, Poly<S>> = BTreeMap::new();
    for map in transformed {
        for m in map.keys() {
            if !images.contains_key(m) {
                let mono = Poly::monomial(m.clone(), S::one());
                let img = if trivial {
                    mono
                } else {
                    mono.substitute_affine(t.a_inv(), &neg_shift, order)?.chopped(1e-14)
                };
                images.insert(m.clone(), img);
            }
        }
    }
    let mut in_primed: Vec<BTreeMap<Monomial, ExpSum<S>>> = Vec::with_capacity(k);
    for map in transformed {
        let mut acc: BTreeMap<Monomial, Vec<(S, S)>> = BTreeMap::new();
        for (m, e) in map {
            for (target, c) in images[m].terms() {
                let slot = acc.entry(target.clone()).or_default();
                slot.extend(e.terms().iter().map(|(b, x)| (b.clone(), x.clone() * c.clone())));
            }
        }
        in_primed.push(
            acc.into_iter()
                .map(|(m, terms)| (m, ExpSum::from_terms(terms)))
                .collect(),
        );
    }
    Ok((0..k)
        .map(|p| {
            let mut acc: BTreeMap<Monomial, Vec<(S, S)>> = BTreeMap::new();
            for (s, map) in in_primed.iter().enumerate() {
                let a = &t.a()[(p, s)];
                if a.is_zero() {
                    continue;
                }
                for (m, e) in map {
                    acc.entry(m.clone())
                        .or_default()
                        .extend(e.terms().iter().map(|(b, x)| (b.clone(), x.clone() * a.clone())));
                }
            }
            acc.into_iter()
                .map(|(m, terms)| (m, ExpSum::from_terms(terms)))
                .filter(|(_, e)| !e.is_zero())
                .collect()
        })
        .collect())
}

fn guard_terms<S: Scalar>(polys: &[Poly<S>]) -> Result<()> {
    let total: usize = polys.iter().map(Poly::len).sum();
    if total > ORACLE_TERM_LIMIT {
        return Err(Error::SizeGuard(format!(
            "symbolic iteration exceeded {ORACLE_TERM_LIMIT} terms"
        )));
    }
    Ok(())
}

/// `F` composed `i` times with itself, as polynomials in the initial
/// values, truncated at total degree `order` after every step. Systems with
/// a nonzero constant term are composed untruncated (bounded by a term
/// guard) and truncated at the end.
pub fn oracle_iterate_symbolic<S: Scalar>(system: &PolySystem<S>, i: u32, order: u32) -> Result<Vec<Poly<S>>> {
    if system.depth() != 1 {
        return Err(Error::DepthMismatch(system.depth()));
    }
    let k = system.k();
    let exact_truncation = system.constant_terms().iter().all(Scalar::is_zero);
    let cap = if exact_truncation { order } else { u32::MAX };
    let mut current: Vec<Poly<S>> = (0..k).map(|p| Poly::var(k, p)).collect();
    for _ in 0..i {
        current = system
            .polys()
            .iter()
            .map(|f| f.compose(&current, cap))
            .collect::<Result<Vec<_>>>()?;
        guard_terms(&current)?;
    }
    Ok(current.into_iter().map(|p| p.truncated(order)).collect())
}

/// Symbolic iteration of a depth-`n` system directly on its history.
///
/// Returns, for each reduced variable `j*k + l`, the polynomial for
/// `u^l` at step `n-1+i-j` in terms of the initial history, whose variable
/// `j*k + l` is `u^l_{n-1-j}`. Zero-constant-term systems only.
pub fn oracle_iterate_history<S: Scalar>(system: &PolySystem<S>, i: u32, order: u32) -> Result<Vec<Poly<S>>> {
    let (k, n) = (system.k(), system.depth());
    let nv = n * k;
    // seq[t] holds the k polynomials of step t
    let mut seq: Vec<Vec<Poly<S>>> = (0..n)
        .map(|t| (0..k).map(|l| Poly::var(nv, (n - 1 - t) * k + l)).collect())
        .collect();
    for t in n..n + i as usize {
        let lagged: Vec<Poly<S>> = (1..=n).flat_map(|j| seq[t - j].iter().cloned()).collect();
        let next = system
            .polys()
            .iter()
            .map(|f| f.compose(&lagged, order))
            .collect::<Result<Vec<_>>>()?;
        guard_terms(&next)?;
        seq.push(next);
    }
    let last = n - 1 + i as usize;
    Ok((0..n)
        .flat_map(|j| seq[last - j].iter().map(|p| p.truncated(order)).collect::<Vec<_>>())
        .collect())
}

/// One compared coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyEntry<S> {
    pub step: u32,
    pub variable: usize,
    pub monomial: Monomial,
    pub expected: S,
    pub actual: S,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport<S> {
    /// `"original"` or `"transformed"`.
    pub coordinates: &'static str,
    pub entries: Vec<VerifyEntry<S>>,
    pub max_discrepancy: f64,
}

impl<S: Scalar> VerificationReport<S> {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    /// `(step, passed, total)` per step, ascending.
    pub fn per_step(&self) -> Vec<(u32, usize, usize)> {
        let mut out: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
        for e in &self.entries {
            let slot = out.entry(e.step).or_default();
            slot.1 += 1;
            if e.pass {
                slot.0 += 1;
            }
        }
        out.into_iter().map(|(s, (p, t))| (s, p, t)).collect()
    }

    pub fn failures(&self) -> impl Iterator<Item = &VerifyEntry<S>> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

/// Compares every coefficient function at `i = 0..=max_verify_power`
/// against symbolic iteration.
///
/// Without a shift the original-coordinate coefficients are checked (on the
/// history of depth-`n` systems); with a shift the truncated pull-back is
/// lossy, so the transformed-coordinate coefficients are checked against
/// iteration of the transformed system instead.
pub fn verify<S: Scalar>(
    sol: &ClosedFormSolution<S>,
    system: &PolySystem<S>,
    opts: &SolveOptions<S>,
) -> Result<VerificationReport<S>> {
    let reduced = reduce_depth(system);
    if reduced.k() != sol.state_len() {
        return Err(Error::Arity {
            expected: reduced.k(),
            found: sol.state_len(),
        });
    }
    let shifted = !sol.transform.b().iter().all(Scalar::is_zero);
    let (coords, maps, offsets): (_, &[CoefficientMap<S>], Vec<S>) = if shifted {
        ("transformed", &sol.transformed, vec![S::zero(); reduced.k()])
    } else {
        ("original", &sol.original, sol.offsets.clone())
    };
    let transformed_system = if shifted {
        Some(apply_affine(&reduced, &sol.transform)?)
    } else {
        None
    };
    let mut entries = Vec::new();
    let mut max_discrepancy = 0.0f64;
    for i in 0..=opts.max_verify_power {
        let oracle = match &transformed_system {
            Some(ts) => oracle_iterate_symbolic(ts, i, sol.order)?,
            None if system.depth() > 1 => oracle_iterate_history(system, i, sol.order)?,
            None => oracle_iterate_symbolic(&reduced, i, sol.order)?,
        };
        for (p, poly) in oracle.iter().enumerate() {
            let monomials: BTreeSet<&Monomial> = poly.terms().keys().chain(maps[p].keys()).collect();
            let one = Monomial::one(reduced.k());
            let monomials: BTreeSet<&Monomial> = if offsets[p].is_zero() {
                monomials
            } else {
                monomials.into_iter().chain(std::iter::once(&one)).collect()
            };
            for m in monomials {
                let expected = poly.coeff(m);
                let mut actual = maps[p].get(m).map_or_else(S::zero, |e| e.eval(i as u64));
                if m.is_one() {
                    actual = actual + offsets[p].clone();
                }
                let diff = (actual.clone() - expected.clone()).magnitude();
                let (pass, disc) = match S::MODE {
                    Mode::Exact => (actual == expected, diff),
                    Mode::Float => {
                        let rel = diff / expected.magnitude().max(1.0);
                        (rel <= opts.tolerance, rel)
                    }
                };
                max_discrepancy = max_discrepancy.max(disc);
                entries.push(VerifyEntry {
                    step: i,
                    variable: p,
                    monomial: m.clone(),
                    expected,
                    actual,
                    pass,
                });
            }
        }
    }
    Ok(VerificationReport {
        coordinates: coords,
        entries,
        max_discrepancy,
    })
}

/// Truncated-series value of the reduced state after `i` steps from `z0`.
pub fn eval_closed_form<S: Scalar>(sol: &ClosedFormSolution<S>, i: u64, z0: &[S]) -> Result<Vec<S>> {
    if z0.len() != sol.state_len() {
        return Err(Error::Arity {
            expected: sol.state_len(),
            found: z0.len(),
        });
    }
    Ok(sol
        .original
        .iter()
        .zip(&sol.offsets)
        .map(|(map, off)| map.iter().fold(off.clone(), |acc, (m, e)| acc + e.eval(i) * m.eval(z0)))
        .collect())
}

/// Reduced initial state `(u_{n-1}, .., u_0)` from a history `u_0..u_{n-1}`.
pub fn state_from_history<S: Scalar>(history: &[Vec<S>]) -> Vec<S> {
    history.iter().rev().flatten().cloned().collect()
}

/// `u_i` by plain iteration from the history `u_0..u_{n-1}`.
pub fn eval_direct<S: Scalar>(system: &PolySystem<S>, i: usize, history: &[Vec<S>]) -> Result<Vec<S>> {
    let (k, n) = (system.k(), system.depth());
    if history.len() != n || history.iter().any(|h| h.len() != k) {
        return Err(Error::Arity {
            expected: n * k,
            found: history.iter().map(Vec::len).sum(),
        });
    }
    if i < n {
        return Ok(history[i].clone());
    }
    let mut window: Vec<Vec<S>> = history.to_vec();
    for _ in n..=i {
        let lagged: Vec<S> = window.iter().rev().flatten().cloned().collect();
        let next = system.step(&lagged)?;
        window.remove(0);
        window.push(next);
    }
    Ok(window.pop().expect("depth >= 1"))
}

/// `u_i` from the closed form, given the history `u_0..u_{n-1}`.
pub fn eval_closed_form_history<S: Scalar>(
    sol: &ClosedFormSolution<S>,
    i: usize,
    history: &[Vec<S>],
) -> Result<Vec<S>> {
    let n = sol.depth;
    if i + 1 < n {
        return Ok(history[i].clone());
    }
    let state = eval_closed_form(sol, (i + 1 - n) as u64, &state_from_history(history))?;
    Ok(state[..sol.k].to_vec())
}
