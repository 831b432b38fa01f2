//! `U_n` as a polynomial in fluctuation operators `F_n(A)` and empirical
//! averages `P_n(B)`.
//!
//! For a kernel `S(A_1,…,A_l)` with centered factors,
//! `n^{-l/2} l! binom(n,l) U_n = D(A_1,…,A_l) / n^{l/2}`, where `D` sums the
//! symmetric product over pairwise distinct sites. `D` is expanded by
//!
//! ```text
//! D(X_1..X_m) = S(ΣX_1, …, ΣX_m) − Σ_{π ≠ finest} D(merge_π(X))
//! ```
//!
//! where `merge_π` replaces every non-singleton block by the symmetric product
//! of its members. A leaf `A_i` contributes `√n F_n(A_i)` and any merged block
//! `B` contributes `n P_n(B)`, so a term with `s` leaves among `k` arguments
//! carries `n^{-t/2}` with `t = l + s − 2k ≥ 0`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{binomial, factorial, Budget};
use crate::operator::sites;
use crate::operator::{symmetric_product, symmetrize_kernel, DensityMatrix, HermitianOperator};
use crate::ustat::UStatistic;
use crate::{CMatrix, C64};

/// One-site operator built from the factors by nested symmetric products.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum BlockOp {
    /// `A_i`, 0-based.
    Factor(usize),
    /// Symmetric product of the children, sorted.
    Sym(Vec<BlockOp>),
}

impl BlockOp {
    fn sym(mut children: Vec<BlockOp>) -> BlockOp {
        children.sort();
        BlockOp::Sym(children)
    }

    fn matrix(&self, factors: &[&CMatrix]) -> CMatrix {
        match self {
            BlockOp::Factor(i) => factors[*i].clone(),
            BlockOp::Sym(children) => {
                let mats: Vec<CMatrix> = children.iter().map(|c| c.matrix(factors)).collect();
                let refs: Vec<&CMatrix> = mats.iter().collect();
                symmetric_product(&refs)
            }
        }
    }
}

impl fmt::Display for BlockOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockOp::Factor(i) => write!(f, "A{}", i + 1),
            BlockOp::Sym(children) if children.len() == 2 => {
                for (j, c) in children.iter().enumerate() {
                    if j > 0 {
                        write!(f, "∘")?;
                    }
                    match c {
                        BlockOp::Sym(cc) if cc.len() == 2 => write!(f, "({c})")?,
                        _ => write!(f, "{c}")?,
                    }
                }
                Ok(())
            }
            BlockOp::Sym(children) => {
                write!(f, "S(")?;
                for (j, c) in children.iter().enumerate() {
                    if j > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum FluctuationSymbol {
    /// `F_n(A_i)`.
    Fluct(usize),
    /// `P_n(B)`.
    Avg(BlockOp),
}

impl fmt::Display for FluctuationSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FluctuationSymbol::Fluct(i) => write!(f, "F(A{})", i + 1),
            FluctuationSymbol::Avg(b) => write!(f, "P({b})"),
        }
    }
}

/// `coeff · n^{-t/2} · S(symbols)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluctuationTerm {
    pub t: u32,
    pub coeff: f64,
    pub symbols: Vec<FluctuationSymbol>,
}

impl fmt::Display for FluctuationTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mag = self.coeff.abs();
        if (mag - 1.0).abs() > 1e-12 {
            write!(f, "{mag} ")?;
        }
        if self.t > 0 {
            write!(f, "n^(-{}/2) ", self.t)?;
        }
        match self.symbols.len() {
            1 => write!(f, "{}", self.symbols[0]),
            2 => write!(f, "{}∘{}", self.symbols[0], self.symbols[1]),
            _ => {
                write!(f, "S(")?;
                for (j, s) in self.symbols.iter().enumerate() {
                    if j > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{s}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// `n^{-l/2} l! binom(n,l) U_n` as a sum of terms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluctuationForm {
    pub l: usize,
    pub terms: Vec<FluctuationTerm>,
}

impl fmt::Display for FluctuationForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, term) in self.terms.iter().enumerate() {
            let neg = term.coeff < 0.0;
            match (j, neg) {
                (0, true) => write!(f, "-{term}")?,
                (0, false) => write!(f, "{term}")?,
                (_, true) => write!(f, " - {term}")?,
                (_, false) => write!(f, " + {term}")?,
            }
        }
        Ok(())
    }
}

type Expansion = BTreeMap<Vec<BlockOp>, f64>;

fn set_partitions(m: usize) -> Vec<Vec<Vec<usize>>> {
    fn rec(i: usize, m: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == m {
            out.push(cur.clone());
            return;
        }
        for b in 0..cur.len() {
            cur[b].push(i);
            rec(i + 1, m, cur, out);
            cur[b].pop();
        }
        cur.push(vec![i]);
        rec(i + 1, m, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    rec(0, m, &mut Vec::new(), &mut out);
    out
}

fn distinct_sum(args: &[BlockOp], memo: &mut HashMap<Vec<BlockOp>, Expansion>) -> Expansion {
    let mut key = args.to_vec();
    key.sort();
    if let Some(e) = memo.get(&key) {
        return e.clone();
    }
    let mut out = Expansion::new();
    out.insert(key.clone(), 1.0);
    for partition in set_partitions(key.len()) {
        if partition.len() == key.len() {
            continue;
        }
        let merged: Vec<BlockOp> = partition
            .iter()
            .map(|block| match block.as_slice() {
                [single] => key[*single].clone(),
                _ => BlockOp::sym(block.iter().map(|&i| key[i].clone()).collect()),
            })
            .collect();
        for (k, v) in distinct_sum(&merged, memo) {
            *out.entry(k).or_insert(0.0) -= v;
        }
    }
    out.retain(|_, v| *v != 0.0);
    memo.insert(key, out.clone());
    out
}

fn term_from_args(l: usize, args: Vec<BlockOp>, coeff: f64) -> FluctuationTerm {
    let s = args.iter().filter(|a| matches!(a, BlockOp::Factor(_))).count();
    let k = args.len();
    let mut symbols: Vec<FluctuationSymbol> = args
        .into_iter()
        .map(|a| match a {
            BlockOp::Factor(i) => FluctuationSymbol::Fluct(i),
            other => FluctuationSymbol::Avg(other),
        })
        .collect();
    symbols.sort();
    FluctuationTerm { t: (l + s - 2 * k) as u32, coeff, symbols }
}

fn sort_terms(terms: &mut [FluctuationTerm]) {
    terms.sort_by(|a, b| a.t.cmp(&b.t).then(b.symbols.len().cmp(&a.symbols.len())).then(a.symbols.cmp(&b.symbols)));
}

/// The partition expansion for any `l ≥ 1`.
pub fn general_form(l: usize) -> FluctuationForm {
    let args: Vec<BlockOp> = (0..l).map(BlockOp::Factor).collect();
    let mut memo = HashMap::new();
    let mut terms: Vec<FluctuationTerm> =
        distinct_sum(&args, &mut memo).into_iter().map(|(a, c)| term_from_args(l, a, c)).collect();
    sort_terms(&mut terms);
    FluctuationForm { l, terms }
}

/// The compact forms for `l ≤ 3`; three nested pair averages collapse into
/// `3 P_n(S(A_1,A_2,A_3))`.
pub fn closed_form(l: usize) -> Option<FluctuationForm> {
    use BlockOp::{Factor, Sym};
    use FluctuationSymbol::{Avg, Fluct};
    let term = |t, coeff, symbols| FluctuationTerm { t, coeff, symbols };
    let pair = |i, j| Avg(Sym(vec![Factor(i), Factor(j)]));
    let terms = match l {
        1 => vec![term(0, 1.0, vec![Fluct(0)])],
        2 => vec![term(0, 1.0, vec![Fluct(0), Fluct(1)]), term(0, -1.0, vec![pair(0, 1)])],
        3 => {
            let mut terms = vec![
                term(0, 1.0, vec![Fluct(0), Fluct(1), Fluct(2)]),
                term(0, -1.0, vec![Fluct(2), pair(0, 1)]),
                term(0, -1.0, vec![Fluct(1), pair(0, 2)]),
                term(0, -1.0, vec![Fluct(0), pair(1, 2)]),
                term(1, 2.0, vec![Avg(Sym(vec![Factor(0), Factor(1), Factor(2)]))]),
            ];
            for t in &mut terms {
                t.symbols.sort();
            }
            terms
        }
        _ => return None,
    };
    let mut terms = terms;
    sort_terms(&mut terms);
    Some(FluctuationForm { l, terms })
}

impl FluctuationForm {
    /// Evaluates the form on `n` sites with the given one-site factors.
    pub fn evaluate(&self, factors: &[&CMatrix], n: usize) -> CMatrix {
        let d = factors[0].nrows();
        let dim = sites::pow(d, n);
        let nf = n as f64;
        let mut cache: HashMap<FluctuationSymbol, CMatrix> = HashMap::new();
        let mut acc = CMatrix::zeros(dim, dim);
        for term in &self.terms {
            for s in &term.symbols {
                cache.entry(s.clone()).or_insert_with(|| {
                    let (one_site, w) = match s {
                        FluctuationSymbol::Fluct(i) => (factors[*i].clone(), 1.0 / nf.sqrt()),
                        FluctuationSymbol::Avg(b) => (b.matrix(factors), 1.0 / nf),
                    };
                    collective(&one_site, d, n, w)
                });
            }
            let mats: Vec<&CMatrix> = term.symbols.iter().map(|s| &cache[s]).collect();
            let w = term.coeff * nf.powf(-(term.t as f64) / 2.0);
            acc += symmetric_product(&mats).scale(w);
        }
        acc
    }
}

/// `w · Σ_k A^{(k)}`.
fn collective(a: &CMatrix, d: usize, n: usize, w: f64) -> CMatrix {
    let dim = sites::pow(d, n);
    let mut out = CMatrix::zeros(dim, dim);
    for k in 0..n {
        sites::embed_into(&mut out, a, d, n, &[k], C64::new(w, 0.0));
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct FluctuationOptions {
    /// Largest `l` the partition recursion accepts.
    pub max_order: usize,
    pub budget: Budget,
}

impl Default for FluctuationOptions {
    fn default() -> Self {
        FluctuationOptions { max_order: 6, budget: Budget::default() }
    }
}

#[derive(Debug, Clone)]
pub struct FluctuationAssembly {
    pub form: FluctuationForm,
    /// The evaluated form, `n^{-l/2} l! binom(n,l) U_n`.
    pub scaled: HermitianOperator,
    pub ustat: UStatistic,
}

/// Builds `U_n` for the kernel `S(A_1,…,A_l)` through its fluctuation form.
pub fn assemble_fluctuation(factors: &[HermitianOperator], rho: &DensityMatrix, n: usize, opts: FluctuationOptions) -> Result<FluctuationAssembly> {
    let l = factors.len();
    if l == 0 {
        return Err(Error::InvalidInput("at least one factor is required".into()));
    }
    if l > opts.max_order {
        return Err(Error::InvalidInput(format!("order {l} exceeds the partition recursion limit {}", opts.max_order)));
    }
    if n < l {
        return Err(Error::InvalidInput(format!("n = {n} is smaller than the kernel order {l}")));
    }
    let d = rho.d();
    for (i, a) in factors.iter().enumerate() {
        if a.dim() != d {
            return Err(Error::DimensionMismatch(format!("factor {} has dimension {}, state has {d}", i + 1, a.dim())));
        }
        let mean = rho.expect(a.matrix()).re;
        if mean.abs() > 1e-10 * a.frobenius().max(1.0) {
            return Err(Error::InvalidInput(format!("factor {} is not centered: Tr(ρA) = {mean}", i + 1)));
        }
    }
    opts.budget.check_power(d, n)?;
    let kernel = symmetrize_kernel(factors)?;
    let form = closed_form(l).unwrap_or_else(|| general_form(l));
    let mats: Vec<&CMatrix> = factors.iter().map(|a| a.matrix()).collect();
    let scaled = HermitianOperator::from_arithmetic(form.evaluate(&mats, n))?;
    let norm = (n as f64).powf(l as f64 / 2.0) / (factorial(l) * binomial(n, l));
    let ustat = UStatistic::from_parts(n, kernel, scaled.scale(norm));
    Ok(FluctuationAssembly { form, scaled, ustat })
}
