//! Truncated Fock representation of one oscillator and moment evaluation on
//! products of thermal states and classical Gaussians.
//!
//! A thermal state is kept on the first `trunc` number levels and operators
//! act on `trunc + pad` levels. A word of length `L` started and ended on a
//! level `k < trunc` never climbs above `k + L/2`, so with `pad > L/2` the only
//! error left is the discarded thermal tail `e^{−β·trunc}`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::ccr::hermite::hermite_coeffs;
use crate::ccr::{CCRBasis, Generator};
use crate::error::{Error, Result};
use crate::linalg::{binomial, matmul};
use crate::{CMatrix, C64};

pub const DEFAULT_TRUNC: usize = 64;
/// Largest thermal mass allowed beyond the truncation.
pub const THERMAL_TAIL_TOL: f64 = 1e-12;
/// Largest `n + m` accepted by [`hermite_orthogonality_check`].
pub const HERMITE_CHECK_MAX_ORDER: u32 = 6;

/// `β = 2 artanh(1/(2σ²))`, the inverse temperature of variance `σ²`.
pub fn thermal_beta(sigma_sq: f64) -> Result<f64> {
    if !(sigma_sq > 0.5) || !sigma_sq.is_finite() {
        return Err(Error::InvalidInput(format!("thermal variance must exceed 1/2, got {sigma_sq}")));
    }
    Ok(2.0 * (1.0 / (2.0 * sigma_sq)).atanh())
}

#[derive(Debug, Clone)]
pub struct FockRep {
    trunc: usize,
    pad: usize,
    q: CMatrix,
    p: CMatrix,
    number: CMatrix,
}

impl FockRep {
    pub fn new(trunc: usize) -> Self {
        Self::padded(trunc, 0)
    }

    /// Operators on `trunc + pad` levels; states live on the first `trunc`.
    pub fn padded(trunc: usize, pad: usize) -> Self {
        let dim = trunc + pad;
        let mut a = CMatrix::zeros(dim, dim);
        for k in 1..dim {
            a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
        }
        let ad = a.adjoint();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let q = (&a + &ad).scale(s);
        let p = (&a - &ad) * C64::new(0.0, -s);
        let number = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |k, _| C64::new(k as f64, 0.0)));
        FockRep { trunc, pad, q, p, number }
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    pub fn dim(&self) -> usize {
        self.trunc + self.pad
    }

    pub fn q(&self) -> &CMatrix {
        &self.q
    }

    pub fn p(&self) -> &CMatrix {
        &self.p
    }

    pub fn number(&self) -> &CMatrix {
        &self.number
    }

    /// Largest entry of `[Q,P] − i` on the leading `dim−1` levels.
    pub fn commutator_defect(&self) -> f64 {
        let c = matmul(&self.q, &self.p) - matmul(&self.p, &self.q);
        let n = self.dim() - 1;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { C64::new(0.0, 1.0) } else { C64::new(0.0, 0.0) };
                worst = worst.max((c[(i, j)] - want).norm());
            }
        }
        worst
    }

    /// Geometric weights `∝ e^{−βk}` on the first `trunc` levels, zero on the
    /// padding, summing to 1.
    pub fn thermal_weights(&self, sigma_sq: f64) -> Result<Vec<f64>> {
        let beta = thermal_beta(sigma_sq)?;
        let tail = (-beta * self.trunc as f64).exp();
        if tail >= THERMAL_TAIL_TOL {
            let need = (-(THERMAL_TAIL_TOL.ln()) / beta).ceil();
            return Err(Error::Truncation(format!(
                "thermal tail {tail:.2e} at truncation {} for σ² = {sigma_sq}; at least {need} levels are needed",
                self.trunc
            )));
        }
        let mut w: Vec<f64> = (0..self.dim()).map(|k| if k < self.trunc { (-beta * k as f64).exp() } else { 0.0 }).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        Ok(w)
    }

    pub fn thermal(&self, sigma_sq: f64) -> Result<CMatrix> {
        let w = self.thermal_weights(sigma_sq)?;
        Ok(CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(w.len(), w.iter().map(|&x| C64::new(x, 0.0)))))
    }

    /// `|0⟩⟨0|`.
    pub fn vacuum(&self) -> CMatrix {
        let mut v = CMatrix::zeros(self.dim(), self.dim());
        v[(0, 0)] = C64::new(1.0, 0.0);
        v
    }

    /// Symmetric ordering `S[f(Q/s) g(P/s)]` for coefficient vectors `f, g`
    /// (lowest degree first).
    pub fn symmetric_poly(&self, f: &[f64], g: &[f64], scale: f64) -> CMatrix {
        let dim = self.dim();
        let (na, nb) = (f.len(), g.len());
        // words[i][j]: sum of all words with i letters Q and j letters P.
        let mut words: Vec<Vec<CMatrix>> = vec![Vec::with_capacity(nb); na];
        for i in 0..na {
            for j in 0..nb {
                let w = if i == 0 && j == 0 {
                    CMatrix::identity(dim, dim)
                } else {
                    let mut acc = CMatrix::zeros(dim, dim);
                    if i > 0 {
                        acc += matmul(&self.q, &words[i - 1][j]);
                    }
                    if j > 0 {
                        acc += matmul(&self.p, &words[i][j - 1]);
                    }
                    acc
                };
                words[i].push(w);
            }
        }
        let mut out = CMatrix::zeros(dim, dim);
        for (i, fi) in f.iter().enumerate() {
            for (j, gj) in g.iter().enumerate() {
                let c = fi * gj;
                if c == 0.0 {
                    continue;
                }
                let w = c / binomial(i + j, i) / scale.powi((i + j) as i32);
                out += words[i][j].scale(w);
            }
        }
        out
    }

    /// `S[(Q/s)^a (P/s)^b]`.
    pub fn symmetric_monomial(&self, a: usize, b: usize, scale: f64) -> CMatrix {
        let mut f = vec![0.0; a + 1];
        f[a] = 1.0;
        let mut g = vec![0.0; b + 1];
        g[b] = 1.0;
        self.symmetric_poly(&f, &g, scale)
    }
}

/// `Tr(diag(w) X)`.
pub(crate) fn diag_expect(w: &[f64], x: &CMatrix) -> C64 {
    w.iter().enumerate().map(|(k, wk)| x[(k, k)] * *wk).sum()
}

/// Residual of the noncommutative Hermite orthogonality at orders `(n, m)`.
///
/// Returns the largest `|⟨X, Y⟩_φ| / (‖X‖_φ ‖Y‖_φ)` with
/// `X = S[H_n(Q/√2σ) H_m(P/√2σ)]` and `Y = S[Q^a P^b]` over `a + b < n + m`,
/// where `⟨A, B⟩_φ = Tr(φ_σ A* B)`.
pub fn hermite_orthogonality_check(n: u32, m: u32, sigma_sq: f64, trunc: usize) -> Result<f64> {
    if n + m > HERMITE_CHECK_MAX_ORDER {
        return Err(Error::InvalidInput(format!("n + m = {} exceeds the maximum {HERMITE_CHECK_MAX_ORDER}", n + m)));
    }
    let order = (n + m) as usize;
    let rep = FockRep::padded(trunc, order + 1);
    let w = rep.thermal_weights(sigma_sq)?;
    let scale = (2.0 * sigma_sq).sqrt();
    let x = rep.symmetric_poly(&hermite_coeffs(n), &hermite_coeffs(m), scale);
    let xd = x.adjoint();
    let norm_x = diag_expect(&w, &matmul(&xd, &x)).re.sqrt();
    let mut worst = 0.0f64;
    for total in 0..order {
        for a in 0..=total {
            let y = rep.symmetric_monomial(a, total - a, 1.0);
            let norm_y = diag_expect(&w, &matmul(&y.adjoint(), &y)).re.sqrt();
            let inner = diag_expect(&w, &matmul(&xd, &y));
            worst = worst.max(inner.norm() / (norm_x * norm_y));
        }
    }
    Ok(worst)
}

/// Nodes and weights of the `k`-point Gauss–Hermite rule for the standard
/// normal density; exact for polynomials of degree `≤ 2k−1`.
pub fn gauss_hermite(k: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(k >= 1, "quadrature needs at least one node");
    let jacobi = DMatrix::from_fn(k, k, |i, j| if i + 1 == j || j + 1 == i { (i.max(j) as f64).sqrt() } else { 0.0 });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..k).map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Iterates a tensor grid of `k^dims` Gauss–Hermite nodes.
pub(crate) fn for_each_node(dims: usize, k: usize, mut f: impl FnMut(&[f64], f64)) {
    let (nodes, weights) = gauss_hermite(k);
    let mut idx = vec![0usize; dims];
    let mut z = vec![0.0; dims];
    loop {
        let mut w = 1.0;
        for (a, &i) in idx.iter().enumerate() {
            z[a] = nodes[i];
            w *= weights[i];
        }
        f(&z, w);
        let mut a = 0;
        loop {
            if a == dims {
                return;
            }
            idx[a] += 1;
            if idx[a] < k {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FockOptions {
    pub trunc: usize,
    /// Gauss–Hermite points per classical dimension; defaults to degree + 1.
    pub quad_points: Option<usize>,
}

impl Default for FockOptions {
    fn default() -> Self {
        FockOptions { trunc: DEFAULT_TRUNC, quad_points: None }
    }
}

/// `φ(G(F_{a_1}) ⋯ G(F_{a_L}))` over the raw basis, evaluated on truncated
/// thermal oscillators and Gauss–Hermite quadrature against `N(0, V)`.
pub fn fock_moment(word: &[usize], basis: &CCRBasis, opts: FockOptions) -> Result<C64> {
    let nosc = basis.n_oscillators();
    let nc = basis.n_classical();
    let mut per_osc: Vec<Vec<bool>> = vec![Vec::new(); nosc];
    let mut classical: Vec<usize> = Vec::new();
    for &a in word {
        match basis.generator(a)? {
            Generator::Classical(i) => classical.push(i),
            Generator::Q(o) => per_osc[o].push(true),
            Generator::P(o) => per_osc[o].push(false),
        }
    }
    let mut value = C64::new(1.0, 0.0);
    for (o, letters) in per_osc.iter().enumerate() {
        if letters.is_empty() {
            continue;
        }
        let rep = FockRep::padded(opts.trunc, letters.len() / 2 + 1);
        let w = rep.thermal_weights(basis.oscillator_pairs[o].sigma_sq)?;
        let mut prod = CMatrix::identity(rep.dim(), rep.dim());
        for &is_q in letters.iter().rev() {
            prod = matmul(if is_q { rep.q() } else { rep.p() }, &prod);
        }
        value *= diag_expect(&w, &prod);
    }
    if !classical.is_empty() {
        let deg = classical.len();
        let k = opts.quad_points.unwrap_or(deg + 1);
        if k == 0 || 2 * k - 1 < deg {
            return Err(Error::InvalidInput(format!("{k} quadrature points cannot integrate degree {deg} exactly")));
        }
        let l = basis.cholesky();
        let mut acc = 0.0;
        for_each_node(nc, k, |z, w| {
            let g: f64 = classical.iter().map(|&i| (0..=i).map(|j| l[(i, j)] * z[j]).sum::<f64>()).product();
            acc += w * g;
        });
        value *= acc;
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccr::build_ccr_basis;
    use crate::ccr::hermite::hermite_op;
    use crate::operator::DensityMatrix;

    #[test]
    fn beta_inverts_variance() {
        let b = thermal_beta(1.0).unwrap();
        assert!((1.0 / (2.0 * (b / 2.0).tanh()) - 1.0).abs() < 1e-14);
        assert!(thermal_beta(0.5).is_err());
        assert!(thermal_beta(0.3).is_err());
    }

    #[test]
    fn thermal_second_moments() {
        let rep = FockRep::padded(60, 2);
        let w = rep.thermal_weights(1.0).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let q2 = diag_expect(&w, &matmul(rep.q(), rep.q()));
        let p2 = diag_expect(&w, &matmul(rep.p(), rep.p()));
        assert!((q2.re - 1.0).abs() < 1e-10 && (p2.re - 1.0).abs() < 1e-10);
        assert!(FockRep::new(10).thermal_weights(2.0).is_err());
    }

    #[test]
    fn canonical_commutator() {
        assert!(FockRep::new(40).commutator_defect() < 1e-10);
    }

    #[test]
    fn vacuum_hermite_norm() {
        let rep = FockRep::new(20);
        let h2 = hermite_op(2, rep.q(), 1.0);
        let v = diag_expect(&[1.0], &matmul(&h2, &h2));
        assert!((v.re - 8.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_hermite_norms() {
        let rep = FockRep::padded(64, 6);
        let w = rep.thermal_weights(1.0).unwrap();
        let s = 2f64.sqrt();
        for n in 0..=4u32 {
            for m in 0..=4u32 {
                let hn = hermite_op(n, rep.q(), s);
                let hm = hermite_op(m, rep.q(), s);
                let v = diag_expect(&w, &matmul(&hn, &hm)).re;
                let want = if n == m { 2f64.powi(m as i32) * (1..=m).map(f64::from).product::<f64>() } else { 0.0 };
                assert!((v - want).abs() < 1e-9 * want.max(1.0), "({n},{m}) {v}");
            }
        }
    }

    #[test]
    fn gauss_hermite_moments() {
        let (x, w) = gauss_hermite(5);
        let m = |p: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum::<f64>();
        assert!((m(0) - 1.0).abs() < 1e-14);
        assert!((m(2) - 1.0).abs() < 1e-13);
        assert!((m(4) - 3.0).abs() < 1e-12);
        assert!((m(8) - 105.0).abs() < 1e-9);
        assert!(m(3).abs() < 1e-13);
    }

    #[test]
    fn orthogonality_examples() {
        assert!(hermite_orthogonality_check(1, 0, 1.0, 64).unwrap() < 1e-12);
        assert!(hermite_orthogonality_check(1, 1, 1.0, 64).unwrap() < 1e-8);
        assert!(hermite_orthogonality_check(4, 3, 1.0, 64).is_err());
    }

    #[test]
    fn fock_moment_basics() {
        let rho = DensityMatrix::diagonal(&[0.75, 0.25]).unwrap();
        let b = build_ccr_basis(&rho).unwrap();
        let opts = FockOptions::default();
        assert!((fock_moment(&[1, 1], &b, opts).unwrap().re - 1.0).abs() < 1e-10);
        let qp = fock_moment(&[1, 2], &b, opts).unwrap();
        assert!(qp.re.abs() < 1e-10 && (qp.im - 0.5).abs() < 1e-10);
        assert!((fock_moment(&[0, 0], &b, opts).unwrap().re - 0.1875).abs() < 1e-14);
        assert!((fock_moment(&[0, 0, 0, 0], &b, opts).unwrap().re - 3.0 * 0.1875f64.powi(2)).abs() < 1e-14);
        assert!(fock_moment(&[0, 0, 0, 0], &b, FockOptions { quad_points: Some(2), ..opts }).is_err());
        assert!(fock_moment(&[3], &b, opts).is_err());
    }
}
