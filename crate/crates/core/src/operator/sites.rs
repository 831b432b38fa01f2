//! Index arithmetic on `(C^d)^{⊗n}`.
//!
//! Sites are 0-based here. Site 0 is the leftmost tensor factor, so a basis
//! index `x` has digits `x = Σ_s x_s d^{n-1-s}`.

use crate::linalg::{matmul, trace_of_product};
use crate::{CMatrix, C64};

pub(crate) fn pow(d: usize, n: usize) -> usize {
    d.pow(n as u32)
}

pub(crate) fn stride(d: usize, n: usize, site: usize) -> usize {
    pow(d, n - 1 - site)
}

pub(crate) fn digit(x: usize, d: usize, n: usize, site: usize) -> usize {
    (x / stride(d, n, site)) % d
}

/// Adds `scale · K^{(sites)}` to `target`, where `K` acts on `sites.len()`
/// factors and its `j`-th factor is placed on `sites[j]`.
///
/// Only the `d^n · d^r` structurally nonzero entries are touched.
pub(crate) fn embed_into(target: &mut CMatrix, k: &CMatrix, d: usize, n: usize, sites: &[usize], scale: C64) {
    let r = sites.len();
    let dim = pow(d, n);
    let kdim = pow(d, r);
    debug_assert_eq!(k.nrows(), kdim);
    let strides: Vec<usize> = sites.iter().map(|&s| stride(d, n, s)).collect();
    // Offsets of every local index inside the global index.
    let offsets: Vec<usize> = (0..kdim)
        .map(|local| {
            let mut rem = local;
            let mut off = 0;
            for j in (0..r).rev() {
                off += (rem % d) * strides[j];
                rem /= d;
            }
            off
        })
        .collect();
    for x in 0..dim {
        let mut xb = 0;
        let mut base = x;
        for j in 0..r {
            let dig = (x / strides[j]) % d;
            xb = xb * d + dig;
            base -= dig * strides[j];
        }
        for (yb, off) in offsets.iter().enumerate() {
            let v = k[(xb, yb)];
            if v.re != 0.0 || v.im != 0.0 {
                target[(x, base + off)] += scale * v;
            }
        }
    }
}

pub(crate) fn embed(k: &CMatrix, d: usize, n: usize, sites: &[usize]) -> CMatrix {
    let dim = pow(d, n);
    let mut out = CMatrix::zeros(dim, dim);
    embed_into(&mut out, k, d, n, sites, C64::new(1.0, 0.0));
    out
}

/// Applies the site permutation `s ↦ perm[s]` by conjugation: the tensor
/// factor living on site `s` of `m` ends up on site `perm[s]`.
pub(crate) fn permute_sites(m: &CMatrix, d: usize, n: usize, perm: &[usize]) -> CMatrix {
    let dim = pow(d, n);
    let map: Vec<usize> = (0..dim)
        .map(|x| (0..n).map(|s| digit(x, d, n, s) * stride(d, n, perm[s])).sum())
        .collect();
    let mut out = CMatrix::zeros(dim, dim);
    for y in 0..dim {
        for x in 0..dim {
            out[(map[x], map[y])] = m[(x, y)];
        }
    }
    out
}

/// Contracts site `site` against the one-site state `rho`, returning an
/// operator on the remaining `n-1` sites.
pub(crate) fn contract_site(m: &CMatrix, d: usize, n: usize, site: usize, rho: &CMatrix) -> CMatrix {
    let st = stride(d, n, site);
    let new_dim = pow(d, n - 1);
    // Index on n-1 sites -> index on n sites with digit 0 at `site`.
    let lift = |i: usize| {
        let hi = i / st;
        let lo = i % st;
        hi * st * d + lo
    };
    let diagonal = (0..d).all(|a| (0..d).all(|b| a == b || rho[(a, b)] == C64::new(0.0, 0.0)));
    let mut out = CMatrix::zeros(new_dim, new_dim);
    for j in 0..new_dim {
        let bj = lift(j);
        for i in 0..new_dim {
            let bi = lift(i);
            let mut acc = C64::new(0.0, 0.0);
            if diagonal {
                for a in 0..d {
                    acc += rho[(a, a)] * m[(bi + a * st, bj + a * st)];
                }
            } else {
                for a in 0..d {
                    for b in 0..d {
                        acc += rho[(b, a)] * m[(bi + a * st, bj + b * st)];
                    }
                }
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Contracts every site not in `keep` against `rho`; `keep` must be sorted.
/// The result acts on `keep.len()` sites in their original order.
pub(crate) fn trace_out(m: &CMatrix, d: usize, n: usize, keep: &[usize], rho: &CMatrix) -> CMatrix {
    let mut cur = m.clone();
    let mut cur_n = n;
    for s in (0..n).rev() {
        if !keep.contains(&s) {
            cur = contract_site(&cur, d, cur_n, s, rho);
            cur_n -= 1;
        }
    }
    cur
}

/// `op^{(site)} · m`.
pub(crate) fn apply_left(m: &CMatrix, d: usize, n: usize, site: usize, op: &CMatrix) -> CMatrix {
    let dim = pow(d, n);
    let st = stride(d, n, site);
    let mut out = CMatrix::zeros(dim, dim);
    for x in 0..dim {
        let a = (x / st) % d;
        let base = x - a * st;
        for b in 0..d {
            let w = op[(a, b)];
            if w.re == 0.0 && w.im == 0.0 {
                continue;
            }
            let src = base + b * st;
            for y in 0..dim {
                out[(x, y)] += w * m[(src, y)];
            }
        }
    }
    out
}

/// The product state `ρ^{⊗n}` represented without forming the dense matrix.
#[derive(Debug, Clone)]
pub struct ProductState {
    rho: CMatrix,
    d: usize,
    n: usize,
    /// Diagonal of `ρ^{⊗n}` when `ρ` is diagonal in the computational basis.
    diag: Option<Vec<f64>>,
}

impl ProductState {
    pub fn new(rho: &CMatrix, n: usize) -> Self {
        let d = rho.nrows();
        let is_diag = (0..d).all(|a| (0..d).all(|b| a == b || rho[(a, b)] == C64::new(0.0, 0.0)));
        let diag = is_diag.then(|| {
            let dim = pow(d, n);
            (0..dim)
                .map(|x| (0..n).map(|s| rho[(digit(x, d, n, s), digit(x, d, n, s))].re).product())
                .collect()
        });
        ProductState { rho: rho.clone(), d, n, diag }
    }

    pub fn dim(&self) -> usize {
        pow(self.d, self.n)
    }

    /// `Tr(ρ^{⊗n} X)`.
    pub fn expect(&self, x: &CMatrix) -> C64 {
        match &self.diag {
            Some(w) => w.iter().enumerate().map(|(i, wi)| x[(i, i)] * *wi).sum(),
            None => trace_out(x, self.d, self.n, &[], &self.rho)[(0, 0)],
        }
    }

    /// `ρ^{⊗n} X`.
    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        match &self.diag {
            Some(w) => {
                let mut out = x.clone();
                for (i, wi) in w.iter().enumerate() {
                    for j in 0..out.ncols() {
                        out[(i, j)] *= *wi;
                    }
                }
                out
            }
            None => {
                let mut out = x.clone();
                for s in 0..self.n {
                    out = apply_left(&out, self.d, self.n, s, &self.rho);
                }
                out
            }
        }
    }

    /// `Tr(ρ^{⊗n} X Y)`.
    pub fn expect_product(&self, x: &CMatrix, y: &CMatrix) -> C64 {
        trace_of_product(&self.apply(x), y)
    }

    /// `Tr(ρ^{⊗n} X^p)` by repeated squaring into two factors.
    pub fn expect_power(&self, x: &CMatrix, p: u32) -> C64 {
        match p {
            0 => C64::new(1.0, 0.0),
            1 => self.expect(x),
            2 => self.expect_product(x, x),
            _ => {
                let left = power(x, p.div_ceil(2));
                let right = power(x, p / 2);
                self.expect_product(&left, &right)
            }
        }
    }

    /// Dense `ρ^{⊗n}`; only for small `n`.
    pub fn dense(&self) -> CMatrix {
        let mut acc = CMatrix::identity(1, 1);
        for _ in 0..self.n {
            acc = acc.kronecker(&self.rho);
        }
        acc
    }
}

pub(crate) fn power(x: &CMatrix, p: u32) -> CMatrix {
    let mut acc = CMatrix::identity(x.nrows(), x.ncols());
    let mut base = x.clone();
    let mut e = p;
    let mut first = true;
    while e > 0 {
        if e & 1 == 1 {
            acc = if first { base.clone() } else { matmul(&acc, &base) };
            first = false;
        }
        e >>= 1;
        if e > 0 {
            base = matmul(&base, &base);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius;

    fn sz() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0)])
    }

    fn sx() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
    }

    #[test]
    fn embed_matches_kronecker() {
        let id = CMatrix::identity(2, 2);
        let e = embed(&sz(), 2, 3, &[1]);
        assert!(frobenius(&(e - id.kronecker(&sz()).kronecker(&id))) < 1e-15);
        let k = sx().kronecker(&sz());
        let e = embed(&k, 2, 3, &[0, 2]);
        let expected = sx().kronecker(&id).kronecker(&sz());
        assert!(frobenius(&(e - expected)) < 1e-15);
    }

    #[test]
    fn permute_moves_factor() {
        let id = CMatrix::identity(2, 2);
        let m = sz().kronecker(&id).kronecker(&sx());
        // site 0 -> 2, site 2 -> 0
        let p = permute_sites(&m, 2, 3, &[2, 1, 0]);
        assert!(frobenius(&(p - sx().kronecker(&id).kronecker(&sz()))) < 1e-15);
    }

    #[test]
    fn contraction_against_state() {
        let rho = CMatrix::from_row_slice(2, 2, &[C64::new(0.75, 0.0), C64::new(0.1, 0.05), C64::new(0.1, -0.05), C64::new(0.25, 0.0)]);
        let m = sx().kronecker(&sz());
        let c = contract_site(&m, 2, 2, 0, &rho);
        let tr = (&rho * sx()).trace();
        assert!(frobenius(&(c - sz() * tr)) < 1e-15);
        let c = contract_site(&m, 2, 2, 1, &rho);
        let tr = (&rho * sz()).trace();
        assert!(frobenius(&(c - sx() * tr)) < 1e-15);
    }

    #[test]
    fn product_state_paths_agree() {
        let rho_d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(0.7, 0.0), C64::new(0.3, 0.0)]));
        let rho_g = CMatrix::from_row_slice(2, 2, &[C64::new(0.7, 0.0), C64::new(0.1, 0.1), C64::new(0.1, -0.1), C64::new(0.3, 0.0)]);
        let x = sx().kronecker(&sz()).kronecker(&sx()) + sz().kronecker(&sz()).kronecker(&CMatrix::identity(2, 2));
        for rho in [rho_d, rho_g] {
            let ps = ProductState::new(&rho, 3);
            let dense = ps.dense();
            assert!((ps.expect(&x) - (&dense * &x).trace()).norm() < 1e-14);
            assert!((ps.expect_product(&x, &x) - (&dense * &x * &x).trace()).norm() < 1e-13);
            assert!((ps.expect_power(&x, 3) - (&dense * &x * &x * &x).trace()).norm() < 1e-12);
        }
    }
}
