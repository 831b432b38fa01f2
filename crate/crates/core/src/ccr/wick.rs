//! Moments of the quasifree state by pair partitions.
//!
//! For an ordered word `X_1 ⋯ X_L` of canonical variables,
//! `φ(X_1 ⋯ X_L) = Σ_pairings Π C(X_a, X_b)` with `a < b` in each pair and
//! `C` the ordered two-point function.

use std::collections::HashMap;

use crate::ccr::CCRBasis;
use crate::error::{Error, Result};
use crate::{CMatrix, C64};

/// Longest word accepted; the memo table has up to `2^L` entries.
pub const MAX_WICK_LEN: usize = 24;

/// `φ(word)` for the two-point matrix `c`, indexed by the letters of `word`.
pub fn wick_moment(word: &[usize], c: &CMatrix) -> Result<C64> {
    let len = word.len();
    if len > MAX_WICK_LEN {
        return Err(Error::BudgetExceeded { dim: len, max_dim: MAX_WICK_LEN, required_bytes: (1u128 << len) * 16 });
    }
    if let Some(&bad) = word.iter().find(|&&a| a >= c.nrows()) {
        return Err(Error::InvalidInput(format!("unknown generator index {bad}")));
    }
    if len % 2 == 1 {
        return Ok(C64::new(0.0, 0.0));
    }
    let mut memo: HashMap<u32, C64> = HashMap::new();
    Ok(pairings(word, c, (1u32 << len) - 1, &mut memo))
}

fn pairings(word: &[usize], c: &CMatrix, mask: u32, memo: &mut HashMap<u32, C64>) -> C64 {
    if mask == 0 {
        return C64::new(1.0, 0.0);
    }
    if let Some(v) = memo.get(&mask) {
        return *v;
    }
    let first = mask.trailing_zeros() as usize;
    let rest = mask & !(1 << first);
    let mut acc = C64::new(0.0, 0.0);
    let mut m = rest;
    while m != 0 {
        let j = m.trailing_zeros() as usize;
        m &= m - 1;
        let cij = c[(word[first], word[j])];
        if cij.re != 0.0 || cij.im != 0.0 {
            acc += cij * pairings(word, c, rest & !(1 << j), memo);
        }
    }
    memo.insert(mask, acc);
    acc
}

/// `φ(G(F_{a_1}) ⋯ G(F_{a_L}))` over the raw basis list.
pub fn quasifree_moment_wick(word: &[usize], basis: &CCRBasis) -> Result<C64> {
    let c = basis.two_point(&basis.basis_list());
    wick_moment(word, &c)
}
