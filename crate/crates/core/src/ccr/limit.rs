//! The limit law of a U-statistic as a polynomial in canonical variables.
//!
//! With `F̂_1, …, F̂_{d²−1}` the `(·,·)_ρ`-orthonormal generators and
//! `K_c = Σ_i k(i) F̂_{i_1} ⊗ ⋯ ⊗ F̂_{i_c}`, the limit of
//! `n^{c/2}(U_n − θ)` is
//!
//! ```text
//! U = binom(r,c) Σ_m k_m S[Π_a He_{m_a}(G(F̂_a))]
//! ```
//!
//! where `k_m` sums `k(i)` over the ordered tuples with multiplicities `m` and
//! `He` are the monic probabilists' Hermite polynomials, orthogonal for the
//! unit variance every `G(F̂_a)` has.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ccr::fock::{diag_expect, for_each_node, FockRep, DEFAULT_TRUNC};
use crate::ccr::hermite::{hermite_prob, hermite_prob_coeffs};
use crate::ccr::wick::wick_moment;
use crate::ccr::{CCRBasis, Generator};
use crate::error::{Error, Result};
use crate::hoeffding::DegeneracyReport;
use crate::linalg::{binomial, kron_all, trace_of_product, Budget};
use crate::operator::sites::power;
use crate::operator::Kernel;
use crate::{CMatrix, C64};

/// Largest generator count accepted from JSON (`d ≤ 32`).
pub const MAX_JSON_GENERATORS: usize = 32 * 32 - 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitTerm {
    /// Multiplicity of every normalized generator.
    pub m: Vec<usize>,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitPolynomial {
    pub c: usize,
    pub binom_factor: f64,
    pub terms: Vec<LimitTerm>,
}

impl LimitPolynomial {
    pub fn validate(&self) -> Result<()> {
        if self.c == 0 {
            return Err(Error::InvalidInput("limit polynomial order must be at least 1".into()));
        }
        if !self.binom_factor.is_finite() {
            return Err(Error::InvalidInput("binom_factor must be finite".into()));
        }
        let Some(first) = self.terms.first() else {
            return Ok(());
        };
        let g = first.m.len();
        let d = ((g + 1) as f64).sqrt().round() as usize;
        if d < 2 || d * d != g + 1 || g > MAX_JSON_GENERATORS {
            return Err(Error::InvalidInput(format!("{g} generators is not d² − 1 for a supported d")));
        }
        for t in &self.terms {
            if t.m.len() != g {
                return Err(Error::InvalidInput("terms disagree on the number of generators".into()));
            }
            let total = t.m.iter().try_fold(0usize, |acc, &x| acc.checked_add(x));
            if total != Some(self.c) {
                return Err(Error::InvalidInput(format!("multiplicities must sum to c = {}", self.c)));
            }
            if !t.coeff.is_finite() {
                return Err(Error::InvalidInput("coefficients must be finite".into()));
            }
        }
        Ok(())
    }

    /// Parses and validates the JSON form.
    pub fn from_json(s: &str) -> Result<Self> {
        let p: LimitPolynomial = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("limit polynomial serializes")
    }

    pub fn n_generators(&self) -> Option<usize> {
        self.terms.first().map(|t| t.m.len())
    }

    fn check_basis(&self, basis: &CCRBasis) -> Result<()> {
        self.validate()?;
        match self.n_generators() {
            Some(g) if g != basis.len() => {
                Err(Error::DimensionMismatch(format!("polynomial over {g} generators, basis has {}", basis.len())))
            }
            _ => Ok(()),
        }
    }
}

/// Expands `K_c` over the normalized basis and collects multiplicities.
pub fn kernel_to_limit(kernel: &Kernel, report: &DegeneracyReport, basis: &CCRBasis) -> Result<LimitPolynomial> {
    let c = report.c.ok_or(Error::FullyDegenerate)?;
    if kernel.d() != basis.d() || report.r() != kernel.r() {
        return Err(Error::DimensionMismatch("kernel, report and basis disagree".into()));
    }
    let d = basis.d();
    let normalized = basis.normalized_list();
    let g = normalized.len();
    let mut full = vec![CMatrix::identity(d, d)];
    full.extend(normalized);
    let gram = DMatrix::from_fn(g + 1, g + 1, |a, b| trace_of_product(&full[a], &full[b]).re);
    let inv = gram.try_inverse().ok_or_else(|| Error::Numerical("generator Gram matrix is singular".into()))?;
    let dual: Vec<CMatrix> = (1..=g)
        .map(|a| {
            let mut acc = CMatrix::zeros(d, d);
            for (b, fb) in full.iter().enumerate() {
                acc += fb.scale(inv[(a, b)]);
            }
            acc
        })
        .collect();
    let kc = report.component(c).kernel.matrix();
    let mut collected: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut tuple = vec![0usize; c];
    loop {
        let factors: Vec<&CMatrix> = tuple.iter().map(|&i| &dual[i]).collect();
        let k = trace_of_product(&kron_all(&factors), kc);
        let mut m = vec![0usize; g];
        for &i in &tuple {
            m[i] += 1;
        }
        *collected.entry(m).or_insert(0.0) += k.re;
        let mut pos = 0;
        loop {
            if pos == c {
                break;
            }
            tuple[pos] += 1;
            if tuple[pos] < g {
                break;
            }
            tuple[pos] = 0;
            pos += 1;
        }
        if pos == c {
            break;
        }
    }
    let scale = collected.values().fold(0.0f64, |a, v| a.max(v.abs()));
    // Reverse lexicographic order on m lists classical-heavy terms first.
    let mut terms: Vec<LimitTerm> = collected
        .into_iter()
        .filter(|(_, v)| v.abs() > 1e-12 * scale.max(1e-300))
        .map(|(m, coeff)| LimitTerm { m, coeff })
        .collect();
    terms.reverse();
    Ok(LimitPolynomial { c, binom_factor: binomial(kernel.r(), c), terms })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentMethod {
    Wick,
    Fock,
}

#[derive(Debug, Clone, Copy)]
pub struct LimitOptions {
    pub trunc: usize,
    pub budget: Budget,
    /// Largest total degree `p·c` either route expands.
    pub max_degree: usize,
    /// Largest number of distinct words the Wick route keeps.
    pub max_words: usize,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions { trunc: DEFAULT_TRUNC, budget: Budget::default(), max_degree: 24, max_words: 1 << 20 }
    }
}

/// `φ(U^p)`.
pub fn limit_moment(u: &LimitPolynomial, basis: &CCRBasis, p: u32, method: MomentMethod, opts: LimitOptions) -> Result<f64> {
    u.check_basis(basis)?;
    if p == 0 {
        return Err(Error::InvalidInput("moment order must be at least 1".into()));
    }
    let degree = p as usize * u.c;
    if degree > opts.max_degree {
        return Err(Error::BudgetExceeded { dim: degree, max_dim: opts.max_degree, required_bytes: 0 });
    }
    if u.terms.is_empty() {
        return Ok(0.0);
    }
    match method {
        MomentMethod::Wick => wick_limit_moment(u, basis, p, opts),
        MomentMethod::Fock => {
            let fl = FockLimit::build(u, basis, opts.trunc, degree / 2 + 1, opts.budget)?;
            Ok(fl.moment(p, degree + 1))
        }
    }
}

type WordPoly = HashMap<Vec<u16>, f64>;

fn block_key(basis: &CCRBasis, a: u16) -> (usize, u16) {
    match basis.generator(a as usize).expect("index checked") {
        Generator::Classical(_) => (0, a),
        Generator::Q(o) | Generator::P(o) => (o + 1, 0),
    }
}

/// Moves commuting letters into a fixed order: classical letters first and
/// sorted, then each oscillator's letters in their original relative order.
fn canonical(basis: &CCRBasis, mut w: Vec<u16>) -> Vec<u16> {
    w.sort_by_key(|&a| block_key(basis, a));
    w
}

fn multiply(basis: &CCRBasis, a: &WordPoly, b: &WordPoly, max_words: usize) -> Result<WordPoly> {
    let mut out = WordPoly::new();
    for (wa, ca) in a {
        for (wb, cb) in b {
            let mut w = wa.clone();
            w.extend_from_slice(wb);
            *out.entry(canonical(basis, w)).or_insert(0.0) += ca * cb;
        }
        if out.len() > max_words {
            return Err(Error::BudgetExceeded { dim: out.len(), max_dim: max_words, required_bytes: 0 });
        }
    }
    out.retain(|_, v| *v != 0.0);
    Ok(out)
}

/// All words with `i` letters `q` and `j` letters `p`.
fn shuffles(q: u16, p: u16, i: usize, j: usize) -> Vec<Vec<u16>> {
    if i == 0 && j == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    if i > 0 {
        for mut w in shuffles(q, p, i - 1, j) {
            w.insert(0, q);
            out.push(w);
        }
    }
    if j > 0 {
        for mut w in shuffles(q, p, i, j - 1) {
            w.insert(0, p);
            out.push(w);
        }
    }
    out
}

fn term_words(basis: &CCRBasis, term: &LimitTerm, max_words: usize) -> Result<WordPoly> {
    let mut acc: WordPoly = HashMap::from([(Vec::new(), 1.0)]);
    for a in 0..basis.n_classical() {
        let m = term.m[a];
        if m == 0 {
            continue;
        }
        let poly: WordPoly = hermite_prob_coeffs(m as u32)
            .into_iter()
            .enumerate()
            .filter(|(_, h)| *h != 0.0)
            .map(|(i, h)| (vec![a as u16; i], h))
            .collect();
        acc = multiply(basis, &acc, &poly, max_words)?;
    }
    for o in 0..basis.n_oscillators() {
        let qa = basis.n_classical() + 2 * o;
        let (mq, mp) = (term.m[qa], term.m[qa + 1]);
        if mq == 0 && mp == 0 {
            continue;
        }
        let hq = hermite_prob_coeffs(mq as u32);
        let hp = hermite_prob_coeffs(mp as u32);
        let mut poly = WordPoly::new();
        for (i, ci) in hq.iter().enumerate() {
            for (j, cj) in hp.iter().enumerate() {
                let w = ci * cj / binomial(i + j, i);
                if w == 0.0 {
                    continue;
                }
                for word in shuffles(qa as u16, qa as u16 + 1, i, j) {
                    *poly.entry(word).or_insert(0.0) += w;
                }
            }
        }
        acc = multiply(basis, &acc, &poly, max_words)?;
    }
    Ok(acc)
}

fn wick_limit_moment(u: &LimitPolynomial, basis: &CCRBasis, p: u32, opts: LimitOptions) -> Result<f64> {
    let mut upoly = WordPoly::new();
    for t in &u.terms {
        for (w, c) in term_words(basis, t, opts.max_words)? {
            *upoly.entry(w).or_insert(0.0) += u.binom_factor * t.coeff * c;
        }
    }
    upoly.retain(|_, v| *v != 0.0);
    let mut acc = upoly.clone();
    for _ in 1..p {
        acc = multiply(basis, &acc, &upoly, opts.max_words)?;
    }
    let two_point = basis.two_point(&basis.normalized_list());
    let mut words: Vec<(&Vec<u16>, &f64)> = acc.iter().collect();
    words.sort_by(|a, b| a.0.cmp(b.0));
    let mut total = C64::new(0.0, 0.0);
    for (w, c) in words {
        let idx: Vec<usize> = w.iter().map(|&a| a as usize).collect();
        total += wick_moment(&idx, &two_point)? * *c;
    }
    Ok(total.re)
}

/// A limit polynomial realised on truncated oscillators, with the classical
/// variables left as arguments.
#[derive(Debug, Clone)]
pub struct FockLimit {
    dim: usize,
    weights: Vec<f64>,
    /// Classical generators that occur, as basis indices.
    classical: Vec<usize>,
    terms: Vec<FockTerm>,
}

#[derive(Debug, Clone)]
struct FockTerm {
    coeff: f64,
    classical_m: Vec<u32>,
    op: Option<CMatrix>,
}

impl FockLimit {
    pub fn build(u: &LimitPolynomial, basis: &CCRBasis, trunc: usize, pad: usize, budget: Budget) -> Result<Self> {
        u.check_basis(basis)?;
        let nc = basis.n_classical();
        let active_osc: Vec<usize> = (0..basis.n_oscillators())
            .filter(|&o| u.terms.iter().any(|t| t.m[nc + 2 * o] + t.m[nc + 2 * o + 1] > 0))
            .collect();
        let classical: Vec<usize> = (0..nc).filter(|&a| u.terms.iter().any(|t| t.m[a] > 0)).collect();
        let reps: Vec<FockRep> = active_osc.iter().map(|_| FockRep::padded(trunc, pad)).collect();
        let dim = reps.iter().try_fold(1usize, |acc, r| acc.checked_mul(r.dim())).unwrap_or(usize::MAX);
        budget.check(dim)?;
        let mut weights = vec![1.0];
        for (rep, &o) in reps.iter().zip(&active_osc) {
            let w = rep.thermal_weights(basis.oscillator_pairs[o].sigma_sq)?;
            weights = weights.iter().flat_map(|a| w.iter().map(move |b| a * b)).collect();
        }
        let mut terms = Vec::with_capacity(u.terms.len());
        for t in &u.terms {
            let classical_m: Vec<u32> = classical.iter().map(|&a| t.m[a] as u32).collect();
            let has_osc = active_osc.iter().any(|&o| t.m[nc + 2 * o] + t.m[nc + 2 * o + 1] > 0);
            let op = has_osc.then(|| {
                let factors: Vec<CMatrix> = reps
                    .iter()
                    .zip(&active_osc)
                    .map(|(rep, &o)| {
                        let s = basis.oscillator_pairs[o].sigma_sq.sqrt();
                        let hq = hermite_prob_coeffs(t.m[nc + 2 * o] as u32);
                        let hp = hermite_prob_coeffs(t.m[nc + 2 * o + 1] as u32);
                        rep.symmetric_poly(&hq, &hp, s)
                    })
                    .collect();
                let refs: Vec<&CMatrix> = factors.iter().collect();
                kron_all(&refs)
            });
            terms.push(FockTerm { coeff: u.binom_factor * t.coeff, classical_m, op });
        }
        Ok(FockLimit { dim, weights, classical, terms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Product thermal weights of the oscillator levels.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of classical variables the polynomial depends on.
    pub fn n_classical(&self) -> usize {
        self.classical.len()
    }

    fn classical_factor(t: &FockTerm, z: &[f64]) -> f64 {
        t.classical_m.iter().zip(z).map(|(&m, &x)| hermite_prob(m, x)).product()
    }

    /// The oscillator operator `U(z)` at whitened classical values `z`.
    pub fn operator_at(&self, z: &[f64]) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for t in &self.terms {
            let w = t.coeff * Self::classical_factor(t, z);
            match &t.op {
                Some(op) => out += op.scale(w),
                None => {
                    for i in 0..self.dim {
                        out[(i, i)] += C64::new(w, 0.0);
                    }
                }
            }
        }
        out
    }

    /// `Some((f, X))` when no term mixes classical and oscillator variables,
    /// so that `U = f(z) + X`.
    pub fn split(&self) -> Option<(impl Fn(&[f64]) -> f64 + '_, CMatrix)> {
        if self.terms.iter().any(|t| t.op.is_some() && t.classical_m.iter().any(|&m| m > 0)) {
            return None;
        }
        let mut x = CMatrix::zeros(self.dim, self.dim);
        for t in &self.terms {
            if let Some(op) = &t.op {
                x += op.scale(t.coeff);
            }
        }
        let f = move |z: &[f64]| {
            self.terms.iter().filter(|t| t.op.is_none()).map(|t| t.coeff * Self::classical_factor(t, z)).sum()
        };
        Some((f, x))
    }

    /// `φ(U^p)` with `k` Gauss–Hermite points per classical variable.
    pub fn moment(&self, p: u32, k: usize) -> f64 {
        let mut acc = 0.0;
        for_each_node(self.classical.len(), k, |z, w| {
            let x = self.operator_at(z);
            acc += w * diag_expect(&self.weights, &power(&x, p)).re;
        });
        acc
    }
}
