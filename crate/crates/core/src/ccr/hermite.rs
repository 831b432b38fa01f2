//! Hermite polynomials.
//!
//! `H_m` is the physicists' family (weight `e^{−x²}`, norm `2^m m!`); `He_m`
//! is the monic probabilists' family (weight `e^{−x²/2}`, norm `m!`), related
//! by `H_m(x) = 2^{m/2} He_m(√2 x)`.

use crate::linalg::matmul;
use crate::CMatrix;

/// `H_m(x)` by the three-term recurrence.
pub fn hermite(m: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * x);
    if m == 0 {
        return prev;
    }
    for k in 1..m {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `He_m(x)`.
pub fn hermite_prob(m: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if m == 0 {
        return prev;
    }
    for k in 1..m {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn coeffs(m: u32, lead: f64, lower: f64) -> Vec<f64> {
    // p_{k+1} = lead·x·p_k − lower·k·p_{k−1}
    let mut prev = vec![1.0];
    if m == 0 {
        return prev;
    }
    let mut cur = vec![0.0, lead];
    for k in 1..m as usize {
        let mut next = vec![0.0; k + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += lead * c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= lower * k as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Monomial coefficients of `H_m`, lowest degree first.
pub fn hermite_coeffs(m: u32) -> Vec<f64> {
    coeffs(m, 2.0, 2.0)
}

/// Monomial coefficients of `He_m`, lowest degree first.
pub fn hermite_prob_coeffs(m: u32) -> Vec<f64> {
    coeffs(m, 1.0, 1.0)
}

/// `H_m(X/scale)` for a square matrix `X`.
pub fn hermite_op(m: u32, x: &CMatrix, scale: f64) -> CMatrix {
    let dim = x.nrows();
    let y = x.unscale(scale);
    let mut prev = CMatrix::identity(dim, dim);
    if m == 0 {
        return prev;
    }
    let mut cur = y.scale(2.0);
    for k in 1..m {
        let next = matmul(&y, &cur).scale(2.0) - prev.scale(2.0 * k as f64);
        prev = cur;
        cur = next;
    }
    cur
}
