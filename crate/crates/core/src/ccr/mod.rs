//! The CCR limit structure attached to a faithful state `ρ`.
//!
//! Fluctuations `F_n(A)` converge to canonical variables `G(A)` whose
//! two-point function is `Tr(ρAB) = (A,B)_ρ + iω(A,B)` with
//! `ω(A,B) = Tr(ρ[A,B])/(2i)`, so `[G(A),G(B)] = 2iω(A,B)`. In the eigenbasis
//! of `ρ` the centered matrices split into `d−1` classical generators commuting
//! with `ρ` and `d(d−1)/2` oscillator pairs `(t_{j,k}, t_{k,j})`.
//!
//! Generators are indexed `0..d²−1`: classical ones first, then for every pair
//! `j<k` in lexicographic order its `q` followed by its `p`.

pub mod fock;
pub mod hermite;
pub mod limit;
pub mod wick;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::DensityMatrix;
use crate::{CMatrix, C64};

pub use fock::{fock_moment, gauss_hermite, hermite_orthogonality_check, thermal_beta, FockOptions, FockRep};
pub use hermite::{hermite, hermite_coeffs, hermite_op, hermite_prob, hermite_prob_coeffs};
pub use limit::{kernel_to_limit, limit_moment, LimitOptions, LimitPolynomial, LimitTerm, MomentMethod};
pub use wick::{quasifree_moment_wick, wick_moment};

/// Minimum eigenvalue gap (and minimum eigenvalue) accepted by
/// [`build_ccr_basis`].
pub const DEFAULT_GAP_TOL: f64 = 1e-9;

/// `ω(A,B) = Tr(ρ[A,B])/(2i)`.
pub fn commutator_form(a: &CMatrix, b: &CMatrix, rho: &DensityMatrix) -> f64 {
    let comm = a * b - b * a;
    (rho.expect(&comm) / C64::new(0.0, 2.0)).re
}

#[derive(Debug, Clone)]
pub struct OscillatorPair {
    /// 1-based eigenvalue indices, `j < k`.
    pub j: usize,
    pub k: usize,
    /// `t_{j,k}`.
    pub q_gen: CMatrix,
    /// `t_{k,j}`.
    pub p_gen: CMatrix,
    /// `‖t_{j,k}‖²_ρ = (μ_j+μ_k)/(2|μ_j−μ_k|)`.
    pub sigma_sq: f64,
}

/// What a generator index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Classical(usize),
    Q(usize),
    P(usize),
}

#[derive(Debug, Clone)]
pub struct CCRBasis {
    rho: DensityMatrix,
    /// `d_i = −μ_i 1 + E_{i,i}` in the computational basis.
    pub classical_gens: Vec<CMatrix>,
    /// `V_{ij} = δ_{ij} μ_i − μ_i μ_j`.
    pub classical_cov: DMatrix<f64>,
    pub oscillator_pairs: Vec<OscillatorPair>,
    /// Lower Cholesky factor of `V`.
    chol: DMatrix<f64>,
}

/// Matrix unit `E_{a,b}` (0-based) in the eigenbasis, rotated back.
fn eig_unit(rho: &DensityMatrix, a: usize, b: usize) -> CMatrix {
    let v = rho.eigenvectors();
    let ca = v.column(a);
    let cb = v.column(b);
    ca * cb.adjoint()
}

/// Builds the classical and oscillator generators for a strictly positive
/// state with simple spectrum.
pub fn build_ccr_basis(rho: &DensityMatrix) -> Result<CCRBasis> {
    build_ccr_basis_with(rho, DEFAULT_GAP_TOL)
}

pub fn build_ccr_basis_with(rho: &DensityMatrix, gap_tol: f64) -> Result<CCRBasis> {
    if !(gap_tol > 0.0) {
        return Err(Error::InvalidInput(format!("gap tolerance must be positive, got {gap_tol}")));
    }
    let d = rho.d();
    if d < 2 {
        return Err(Error::InvalidInput("the CCR construction needs d ≥ 2".into()));
    }
    rho.require_nondegenerate(gap_tol)?;
    let mu = rho.eigenvalues();
    let id = CMatrix::identity(d, d);
    let classical_gens: Vec<CMatrix> = (0..d - 1).map(|i| eig_unit(rho, i, i) - id.scale(mu[i])).collect();
    let classical_cov = DMatrix::from_fn(d - 1, d - 1, |i, j| if i == j { mu[i] - mu[i] * mu[j] } else { -mu[i] * mu[j] });
    let chol = classical_cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("classical covariance is not positive definite".into()))?
        .l();
    let i = C64::new(0.0, 1.0);
    let mut oscillator_pairs = Vec::with_capacity(d * (d - 1) / 2);
    for j in 0..d {
        for k in j + 1..d {
            let ejk = eig_unit(rho, j, k);
            let ekj = eig_unit(rho, k, j);
            let t_jk = (&ejk - &ekj) * i;
            let t_kj = &ejk + &ekj;
            let norm = (2.0 * (mu[j] - mu[k]).abs()).sqrt();
            oscillator_pairs.push(OscillatorPair {
                j: j + 1,
                k: k + 1,
                q_gen: t_jk.unscale(norm),
                p_gen: t_kj.unscale(norm),
                sigma_sq: (mu[j] + mu[k]) / (2.0 * (mu[j] - mu[k]).abs()),
            });
        }
    }
    Ok(CCRBasis { rho: rho.clone(), classical_gens, classical_cov, oscillator_pairs, chol })
}

impl CCRBasis {
    pub fn d(&self) -> usize {
        self.rho.d()
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn n_classical(&self) -> usize {
        self.classical_gens.len()
    }

    pub fn n_oscillators(&self) -> usize {
        self.oscillator_pairs.len()
    }

    /// `d² − 1`.
    pub fn len(&self) -> usize {
        self.n_classical() + 2 * self.n_oscillators()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn generator(&self, a: usize) -> Result<Generator> {
        let nc = self.n_classical();
        if a < nc {
            Ok(Generator::Classical(a))
        } else if a < self.len() {
            let o = (a - nc) / 2;
            Ok(if (a - nc) % 2 == 0 { Generator::Q(o) } else { Generator::P(o) })
        } else {
            Err(Error::InvalidInput(format!("generator index {a} out of range 0..{}", self.len())))
        }
    }

    /// Lower Cholesky factor `L` with `L Lᵀ = V`.
    pub fn cholesky(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// `F_1, …, F_{d²−1}`: classical generators, then `q, p` per pair.
    pub fn basis_list(&self) -> Vec<CMatrix> {
        let mut out = self.classical_gens.clone();
        for pair in &self.oscillator_pairs {
            out.push(pair.q_gen.clone());
            out.push(pair.p_gen.clone());
        }
        out
    }

    /// The `(·,·)_ρ`-orthonormal basis: classical generators whitened by
    /// `L^{-1}`, oscillator generators divided by `σ`.
    pub fn normalized_list(&self) -> Vec<CMatrix> {
        let nc = self.n_classical();
        let linv = self.chol.clone().try_inverse().expect("Cholesky factor is invertible");
        let mut out: Vec<CMatrix> = (0..nc)
            .map(|a| {
                let mut acc = CMatrix::zeros(self.d(), self.d());
                for i in 0..=a {
                    acc += self.classical_gens[i].scale(linv[(a, i)]);
                }
                acc
            })
            .collect();
        for pair in &self.oscillator_pairs {
            let s = pair.sigma_sq.sqrt();
            out.push(pair.q_gen.unscale(s));
            out.push(pair.p_gen.unscale(s));
        }
        out
    }

    /// `C_{ab} = Tr(ρ F_a F_b)` over the given generators.
    pub fn two_point(&self, gens: &[CMatrix]) -> CMatrix {
        CMatrix::from_fn(gens.len(), gens.len(), |a, b| self.rho.expect(&(&gens[a] * &gens[b])))
    }

    /// `σ²` of the oscillator behind generator `a`, if any.
    pub fn sigma_sq_of(&self, a: usize) -> Option<f64> {
        match self.generator(a).ok()? {
            Generator::Q(o) | Generator::P(o) => Some(self.oscillator_pairs[o].sigma_sq),
            Generator::Classical(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius;
    use crate::operator::{covariance_raw, HermitianOperator};

    fn close(a: &CMatrix, b: &CMatrix) -> bool {
        frobenius(&(a - b)) < 1e-14
    }

    #[test]
    fn qubit_basis() {
        let rho = DensityMatrix::diagonal(&[0.75, 0.25]).unwrap();
        let b = build_ccr_basis(&rho).unwrap();
        assert_eq!(b.len(), 3);
        let d1 = HermitianOperator::diagonal(&[0.25, -0.75]).into_matrix();
        assert!(close(&b.classical_gens[0], &d1));
        assert!((b.classical_cov[(0, 0)] - 0.1875).abs() < 1e-15);
        let pair = &b.oscillator_pairs[0];
        assert!(close(&pair.q_gen, &HermitianOperator::pauli_y().scale(-1.0).into_matrix()));
        assert!(close(&pair.p_gen, HermitianOperator::pauli_x().matrix()));
        assert!((pair.sigma_sq - 1.0).abs() < 1e-15);
        assert!((commutator_form(&pair.q_gen, &pair.p_gen, &rho) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sigma_sq_formula() {
        for lambda in [0.6, 0.75, 0.9] {
            let rho = DensityMatrix::diagonal(&[lambda, 1.0 - lambda]).unwrap();
            let b = build_ccr_basis(&rho).unwrap();
            assert!((b.oscillator_pairs[0].sigma_sq - 1.0 / (2.0 * (2.0 * lambda - 1.0))).abs() < 1e-13);
        }
        let s = |eps: f64| {
            let rho = DensityMatrix::diagonal(&[0.5 + eps, 0.5 - eps]).unwrap();
            build_ccr_basis(&rho).unwrap().oscillator_pairs[0].sigma_sq
        };
        assert!(s(0.01) > 10.0 * s(0.1) - 1e-9);
    }

    #[test]
    fn refuses_degenerate_states() {
        assert!(matches!(build_ccr_basis(&DensityMatrix::diagonal(&[0.5, 0.5]).unwrap()), Err(Error::DegenerateSpectrum(_))));
        assert!(build_ccr_basis(&DensityMatrix::diagonal(&[1.0, 0.0]).unwrap()).is_err());
        assert!(build_ccr_basis_with(&DensityMatrix::diagonal(&[0.6, 0.4]).unwrap(), 0.3).is_err());
    }

    #[test]
    fn ortho_symplectic_for_rotated_qutrit() {
        let u = {
            let h = HermitianOperator::from_real_rows(3, &[0.3, 0.1, -0.4, 0.1, 0.0, 0.7, -0.4, 0.7, -0.2]).unwrap();
            let e = crate::linalg::eigh(h.matrix()).unwrap();
            e.vectors
        };
        let rho = DensityMatrix::from_spectrum(&[0.6, 0.3, 0.1], &u).unwrap();
        let b = build_ccr_basis(&rho).unwrap();
        let gens = b.basis_list();
        let nc = b.n_classical();
        for (x, fa) in gens.iter().enumerate() {
            assert!(rho.expect(fa).norm() < 1e-14);
            for (y, fb) in gens.iter().enumerate() {
                let (cov, _) = covariance_raw(fa, fb, rho.matrix());
                let omega = commutator_form(fa, fb, &rho);
                let want_cov = match (x < nc, y < nc) {
                    (true, true) => b.classical_cov[(x, y)],
                    _ if x == y => b.sigma_sq_of(x).unwrap(),
                    _ => 0.0,
                };
                assert!((cov - want_cov).abs() < 1e-12, "({x},{y}) cov {cov}");
                let want_omega = if x >= nc && y == x + 1 && (x - nc) % 2 == 0 {
                    0.5
                } else if y >= nc && x == y + 1 && (y - nc) % 2 == 0 {
                    -0.5
                } else {
                    0.0
                };
                assert!((omega - want_omega).abs() < 1e-12, "({x},{y}) ω {omega}");
            }
        }
        let normed = b.normalized_list();
        let c = b.two_point(&normed);
        for x in 0..b.len() {
            for y in 0..b.len() {
                let want = if x == y { 1.0 } else { 0.0 };
                assert!((c[(x, y)].re - want).abs() < 1e-12);
            }
        }
    }
}
