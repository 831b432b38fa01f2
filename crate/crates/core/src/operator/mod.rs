//! Dense operator algebra on `(C^d)^{⊗m}`.

pub mod json;
pub(crate) mod sites;

use itertools::Itertools;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh, factorial, frobenius, hermitian_part, kron_all, matmul, max_asymmetry};
use crate::{CMatrix, C64};

pub use sites::ProductState;

/// Entrywise tolerance for accepting a matrix as selfadjoint.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Asymmetry allowed to accumulate in arithmetic chains before projecting.
pub const DRIFT_TOL: f64 = 1e-10;
/// Frobenius tolerance of the kernel permutation-symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// A selfadjoint matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    /// Accepts `m` if it is square, finite and selfadjoint to within
    /// [`HERMITIAN_TOL`] entrywise.
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::checked(m, HERMITIAN_TOL)
    }

    /// Accepts the result of an arithmetic chain: the asymmetry may be up to
    /// [`DRIFT_TOL`] (relative to the largest entry) and is projected away.
    pub fn from_arithmetic(m: CMatrix) -> Result<Self> {
        let scale = m.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
        Self::checked(m, DRIFT_TOL * scale)
    }

    fn checked(m: CMatrix, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!("operator must be square and nonempty, got {}x{}", m.nrows(), m.ncols())));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("operator has non-finite entries".into()));
        }
        let asym = max_asymmetry(&m);
        if asym > tol {
            return Err(Error::NotSelfAdjoint(asym));
        }
        Ok(HermitianOperator { matrix: hermitian_part(&m) })
    }

    pub fn from_real_rows(dim: usize, rows: &[f64]) -> Result<Self> {
        Self::new(CMatrix::from_row_slice(dim, dim, &rows.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>()))
    }

    pub fn identity(dim: usize) -> Self {
        HermitianOperator { matrix: CMatrix::identity(dim, dim) }
    }

    pub fn scalar(dim: usize, value: f64) -> Self {
        HermitianOperator { matrix: CMatrix::identity(dim, dim).scale(value) }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let v = DVector::from_iterator(values.len(), values.iter().map(|&x| C64::new(x, 0.0)));
        HermitianOperator { matrix: CMatrix::from_diagonal(&v) }
    }

    pub fn pauli_x() -> Self {
        Self::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn pauli_y() -> Self {
        let z = C64::new(0.0, 0.0);
        let i = C64::new(0.0, 1.0);
        HermitianOperator { matrix: CMatrix::from_row_slice(2, 2, &[z, -i, i, z]) }
    }

    pub fn pauli_z() -> Self {
        Self::diagonal(&[1.0, -1.0])
    }

    /// `E_{j,k} + E_{k,j}` or `i E_{j,k} − i E_{k,j}` style unit matrices are
    /// built from this (0-based indices).
    pub fn unit(dim: usize, j: usize, k: usize, value: C64) -> CMatrix {
        let mut m = CMatrix::zeros(dim, dim);
        m[(j, k)] = value;
        m
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn frobenius(&self) -> f64 {
        frobenius(&self.matrix)
    }

    pub fn scale(&self, x: f64) -> Self {
        HermitianOperator { matrix: self.matrix.scale(x) }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_dim(self, other)?;
        Ok(HermitianOperator { matrix: &self.matrix + &other.matrix })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        same_dim(self, other)?;
        Ok(HermitianOperator { matrix: &self.matrix - &other.matrix })
    }

    /// Jordan product `(AB + BA)/2`.
    pub fn jordan(&self, other: &Self) -> Result<Self> {
        same_dim(self, other)?;
        let ab = matmul(&self.matrix, &other.matrix);
        Ok(HermitianOperator { matrix: hermitian_part(&ab) })
    }

    pub fn kron(&self, other: &Self) -> Self {
        HermitianOperator { matrix: self.matrix.kronecker(&other.matrix) }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        frobenius(&(&self.matrix - &other.matrix))
    }
}

fn same_dim(a: &HermitianOperator, b: &HermitianOperator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", a.dim(), b.dim())));
    }
    Ok(())
}

/// A one-site density matrix with its spectral decomposition.
///
/// `eigenvalues` are sorted descending; column `i` of `eigenvectors` is the
/// eigenvector of `eigenvalues[i]`. These eigenvalues serve both as the
/// weights of the spectral decomposition and as the thermal parameters of
/// the CCR construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl DensityMatrix {
    pub const TOL: f64 = 1e-12;

    pub fn new(m: CMatrix) -> Result<Self> {
        let h = HermitianOperator::new(m)?;
        let m = h.into_matrix();
        let d = m.nrows();
        let tr = m.trace();
        if (tr.re - 1.0).abs() > Self::TOL || tr.im.abs() > Self::TOL {
            return Err(Error::InvalidInput(format!("density matrix trace {} differs from 1", tr.re)));
        }
        let is_diag = (0..d).all(|a| (0..d).all(|b| a == b || m[(a, b)] == C64::new(0.0, 0.0)));
        let (eigenvalues, eigenvectors) = if is_diag {
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&a, &b| m[(b, b)].re.total_cmp(&m[(a, a)].re));
            let vals = order.iter().map(|&i| m[(i, i)].re).collect();
            let vecs = CMatrix::from_fn(d, d, |r, c| if r == order[c] { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
            (vals, vecs)
        } else {
            let e = eigh(&m)?;
            let vals: Vec<f64> = e.values.iter().rev().copied().collect();
            let mut vecs = CMatrix::from_fn(d, d, |r, c| e.vectors[(r, d - 1 - c)]);
            // Fix the phase: largest-modulus component real positive.
            for c in 0..d {
                let (mut best, mut idx) = (0.0, 0);
                for r in 0..d {
                    if vecs[(r, c)].norm() > best + 1e-12 {
                        best = vecs[(r, c)].norm();
                        idx = r;
                    }
                }
                let phase = vecs[(idx, c)].conj() / vecs[(idx, c)].norm();
                for r in 0..d {
                    vecs[(r, c)] *= phase;
                }
            }
            (vals, vecs)
        };
        if let Some(&min) = eigenvalues.last() {
            if min < -Self::TOL {
                return Err(Error::InvalidInput(format!("density matrix has negative eigenvalue {min:.3e}")));
            }
        }
        Ok(DensityMatrix { matrix: m, eigenvalues, eigenvectors })
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::new(HermitianOperator::diagonal(values).into_matrix())
    }

    /// `U diag(values) U†` for a unitary `U`.
    pub fn from_spectrum(values: &[f64], unitary: &CMatrix) -> Result<Self> {
        let d = values.len();
        if unitary.nrows() != d || unitary.ncols() != d {
            return Err(Error::DimensionMismatch(format!("rotation must be {d}x{d}")));
        }
        let defect = frobenius(&(unitary.adjoint() * unitary - CMatrix::identity(d, d)));
        if defect > 1e-10 {
            return Err(Error::InvalidInput(format!("rotation is not unitary (defect {defect:.3e})")));
        }
        let diag = HermitianOperator::diagonal(values).into_matrix();
        let m = unitary * diag * unitary.adjoint();
        Self::new(hermitian_part(&m))
    }

    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidInput("zero state vector".into()));
        }
        let v = DVector::from_iterator(psi.len(), psi.iter().map(|z| z / norm));
        Self::new(hermitian_part(&(&v * v.adjoint())))
    }

    pub fn d(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.d();
        (0..d).all(|a| (0..d).all(|b| a == b || self.matrix[(a, b)] == C64::new(0.0, 0.0)))
    }

    pub fn purity(&self) -> f64 {
        crate::linalg::trace_of_product(&self.matrix, &self.matrix).re
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        (self.purity() - 1.0).abs() <= tol
    }

    /// Requires `λ_1 > … > λ_d > 0` with every gap (and `λ_d`) above `gap_tol`.
    pub fn require_nondegenerate(&self, gap_tol: f64) -> Result<()> {
        let ev = &self.eigenvalues;
        if ev[ev.len() - 1] <= gap_tol {
            return Err(Error::DegenerateSpectrum(format!("state is not strictly positive (smallest eigenvalue {:.3e})", ev[ev.len() - 1])));
        }
        for w in ev.windows(2) {
            if w[0] - w[1] <= gap_tol {
                return Err(Error::DegenerateSpectrum(format!("eigenvalue gap {:.3e} below tolerance {gap_tol:.1e}", w[0] - w[1])));
            }
        }
        Ok(())
    }

    /// `Tr(ρ A)`.
    pub fn expect(&self, a: &CMatrix) -> C64 {
        crate::linalg::trace_of_product(&self.matrix, a)
    }

    pub fn product_state(&self, n: usize) -> ProductState {
        ProductState::new(&self.matrix, n)
    }
}

/// A selfadjoint, permutation-symmetric operator on `(C^d)^{⊗r}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    d: usize,
    r: usize,
    op: HermitianOperator,
}

impl Kernel {
    pub fn new(d: usize, r: usize, op: HermitianOperator) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidInput("site dimension must be positive".into()));
        }
        if Some(op.dim()) != crate::linalg::checked_pow(d, r) {
            return Err(Error::DimensionMismatch(format!("kernel of order {r} on C^{d} needs dimension {}, got {}", d.pow(r as u32), op.dim())));
        }
        let dev = symmetry_defect(op.matrix(), d, r);
        if dev > SYMMETRY_TOL * op.frobenius().max(1.0) {
            return Err(Error::NotSymmetric(dev));
        }
        Ok(Kernel { d, r, op })
    }

    /// Order-0 kernel `θ` (a 1×1 matrix).
    pub fn scalar(d: usize, theta: f64) -> Self {
        Kernel { d, r: 0, op: HermitianOperator::scalar(1, theta) }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    /// `θ = Tr(ρ^{⊗r} K)`.
    pub fn mean(&self, rho: &DensityMatrix) -> Result<f64> {
        if rho.d() != self.d {
            return Err(Error::DimensionMismatch(format!("state on C^{} vs kernel on C^{}", rho.d(), self.d)));
        }
        Ok(rho.product_state(self.r).expect(self.matrix()).re)
    }
}

/// Largest Frobenius deviation under adjacent transpositions.
pub fn symmetry_defect(m: &CMatrix, d: usize, r: usize) -> f64 {
    let mut worst = 0.0f64;
    for s in 0..r.saturating_sub(1) {
        let mut perm: Vec<usize> = (0..r).collect();
        perm.swap(s, s + 1);
        let p = sites::permute_sites(m, d, r, &perm);
        worst = worst.max(frobenius(&(p - m)));
    }
    worst
}

/// An unordered subset of `{1, …, n}`, stored as strictly increasing 1-based
/// indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SiteSubset {
    n: usize,
    indices: Vec<usize>,
}

impl SiteSubset {
    pub fn new(n: usize, indices: Vec<usize>) -> Result<Self> {
        for w in indices.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidInput(format!("site indices must be strictly increasing: {indices:?}")));
            }
        }
        if indices.iter().any(|&i| i == 0 || i > n) {
            return Err(Error::InvalidInput(format!("site indices {indices:?} outside 1..={n}")));
        }
        Ok(SiteSubset { n, indices })
    }

    pub fn empty(n: usize) -> Self {
        SiteSubset { n, indices: Vec::new() }
    }

    pub fn full(n: usize) -> Self {
        SiteSubset { n, indices: (1..=n).collect() }
    }

    /// All subsets of size `r`, in lexicographic order.
    pub fn all_of_size(n: usize, r: usize) -> impl Iterator<Item = SiteSubset> {
        (1..=n).combinations(r).map(move |indices| SiteSubset { n, indices })
    }

    /// All subsets of this subset.
    pub fn subsets(&self) -> impl Iterator<Item = SiteSubset> + '_ {
        self.indices.iter().copied().powerset().map(move |indices| SiteSubset { n: self.n, indices })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub(crate) fn zero_based(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i - 1).collect()
    }

    pub fn intersection(&self, other: &SiteSubset) -> SiteSubset {
        let indices = self.indices.iter().copied().filter(|i| other.indices.contains(i)).collect();
        SiteSubset { n: self.n, indices }
    }
}

/// `K^{(β)}`: the kernel acting on the sites of `β` and as the identity
/// elsewhere.
pub fn embed(kernel: &Kernel, beta: &SiteSubset, n: usize) -> Result<HermitianOperator> {
    if n < kernel.r() {
        return Err(Error::InvalidInput(format!("n = {n} is smaller than the kernel order {}", kernel.r())));
    }
    if beta.len() != kernel.r() {
        return Err(Error::DimensionMismatch(format!("subset of size {} for kernel of order {}", beta.len(), kernel.r())));
    }
    if beta.n() != n {
        return Err(Error::DimensionMismatch(format!("subset drawn from {} sites, embedding into {n}", beta.n())));
    }
    let m = sites::embed(kernel.matrix(), kernel.d(), n, &beta.zero_based());
    Ok(HermitianOperator { matrix: m })
}

/// `(1/k!) Σ_τ X_{τ(1)} ⋯ X_{τ(k)}` on raw matrices.
pub fn symmetric_product(ops: &[&CMatrix]) -> CMatrix {
    let k = ops.len();
    let dim = ops[0].nrows();
    if k == 1 {
        return ops[0].clone();
    }
    let mut acc = CMatrix::zeros(dim, dim);
    for perm in (0..k).permutations(k) {
        let mut prod = ops[perm[0]].clone();
        for &i in &perm[1..] {
            prod = matmul(&prod, ops[i]);
        }
        acc += prod;
    }
    acc.scale(1.0 / factorial(k))
}

/// Symmetric (Weyl) ordering of a list of operators.
pub fn symmetrize(ops: &[HermitianOperator]) -> Result<HermitianOperator> {
    let first = ops.first().ok_or_else(|| Error::InvalidInput("cannot symmetrize an empty list".into()))?;
    if ops.iter().any(|o| o.dim() != first.dim()) {
        return Err(Error::DimensionMismatch("symmetrize needs operators of equal dimension".into()));
    }
    let mats: Vec<&CMatrix> = ops.iter().map(|o| o.matrix()).collect();
    HermitianOperator::from_arithmetic(symmetric_product(&mats))
}

/// `(1/r!) Σ_τ A_{τ(1)} ⊗ ⋯ ⊗ A_{τ(r)}`.
pub fn symmetrize_kernel(ops: &[HermitianOperator]) -> Result<Kernel> {
    let first = ops.first().ok_or_else(|| Error::InvalidInput("cannot build a kernel from an empty list".into()))?;
    let d = first.dim();
    if ops.iter().any(|o| o.dim() != d) {
        return Err(Error::DimensionMismatch("kernel factors must share the site dimension".into()));
    }
    let r = ops.len();
    let dim = d.pow(r as u32);
    let mut acc = CMatrix::zeros(dim, dim);
    for perm in (0..r).permutations(r) {
        let factors: Vec<&CMatrix> = perm.iter().map(|&i| ops[i].matrix()).collect();
        acc += kron_all(&factors);
    }
    let op = HermitianOperator::from_arithmetic(acc.scale(1.0 / factorial(r)))?;
    Kernel::new(d, r, op)
}

/// The pair `((A,B)_ρ, σ(A,B))` with `(A,B)_ρ = Tr(ρ (AB+BA)/2)` and
/// `σ(A,B) = (i/2) Tr(ρ [A,B])`.
pub fn state_covariance(a: &HermitianOperator, b: &HermitianOperator, rho: &DensityMatrix) -> Result<(f64, f64)> {
    if a.dim() != rho.d() || b.dim() != rho.d() {
        return Err(Error::DimensionMismatch(format!("operators of dimension {}/{} against a state on C^{}", a.dim(), b.dim(), rho.d())));
    }
    Ok(covariance_raw(a.matrix(), b.matrix(), rho.matrix()))
}

/// Unchecked variant of [`state_covariance`] on raw matrices.
pub(crate) fn covariance_raw(a: &CMatrix, b: &CMatrix, rho: &CMatrix) -> (f64, f64) {
    let ab = a * b;
    let ba = b * a;
    let sym = crate::linalg::trace_of_product(rho, &(&ab + &ba)) * 0.5;
    let anti = crate::linalg::trace_of_product(rho, &(&ab - &ba)) * C64::new(0.0, 0.5);
    debug_assert!(sym.im.abs() < 1e-9 && anti.im.abs() < 1e-9);
    (sym.re, anti.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rho() -> DensityMatrix {
        DensityMatrix::diagonal(&[0.75, 0.25]).unwrap()
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.5, 0.0), C64::new(0.0, 0.0)]);
        assert!(matches!(HermitianOperator::new(m), Err(Error::NotSelfAdjoint(_))));
        let m = CMatrix::from_row_slice(1, 1, &[C64::new(f64::NAN, 0.0)]);
        assert!(HermitianOperator::new(m).is_err());
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::diagonal(&[0.5, 0.6]).is_err());
        assert!(DensityMatrix::diagonal(&[1.2, -0.2]).is_err());
        let r = DensityMatrix::diagonal(&[0.25, 0.75]).unwrap();
        assert_eq!(r.eigenvalues(), &[0.75, 0.25]);
        assert!(r.require_nondegenerate(1e-9).is_ok());
        assert!(DensityMatrix::diagonal(&[0.5, 0.5]).unwrap().require_nondegenerate(1e-9).is_err());
        assert!(DensityMatrix::diagonal(&[1.0, 0.0]).unwrap().require_nondegenerate(1e-9).is_err());
    }

    #[test]
    fn rotated_state_spectrum() {
        let s = 0.5f64.sqrt();
        let u = CMatrix::from_row_slice(2, 2, &[C64::new(s, 0.0), C64::new(s, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0)]);
        let r = DensityMatrix::from_spectrum(&[0.8, 0.2], &u).unwrap();
        assert!((r.eigenvalues()[0] - 0.8).abs() < 1e-12);
        let v = r.eigenvectors();
        let back = v * HermitianOperator::diagonal(r.eigenvalues()).matrix() * v.adjoint();
        assert!(frobenius(&(back - r.matrix())) < 1e-12);
    }

    #[test]
    fn embed_identity_and_single_site() {
        let k = symmetrize_kernel(&[HermitianOperator::pauli_x(), HermitianOperator::pauli_y()]).unwrap();
        let e = embed(&k, &SiteSubset::full(2), 2).unwrap();
        assert!(e.distance(k.op()) < 1e-15);
        let kz = Kernel::new(2, 1, HermitianOperator::pauli_z()).unwrap();
        let e = embed(&kz, &SiteSubset::new(2, vec![2]).unwrap(), 2).unwrap();
        let expected = HermitianOperator::identity(2).kron(&HermitianOperator::pauli_z());
        assert!(e.distance(&expected) < 1e-15);
    }

    #[test]
    fn embed_errors() {
        let kz = Kernel::new(2, 1, HermitianOperator::pauli_z()).unwrap();
        assert!(embed(&kz, &SiteSubset::new(3, vec![1, 2]).unwrap(), 3).is_err());
        let k = symmetrize_kernel(&[HermitianOperator::pauli_x(), HermitianOperator::pauli_x()]).unwrap();
        assert!(embed(&k, &SiteSubset::new(1, vec![1]).unwrap(), 1).is_err());
        assert!(SiteSubset::new(3, vec![2, 1]).is_err());
        assert!(SiteSubset::new(3, vec![0]).is_err());
        assert!(SiteSubset::new(3, vec![4]).is_err());
    }

    #[test]
    fn symmetrize_examples() {
        let x = HermitianOperator::pauli_x();
        let y = HermitianOperator::pauli_y();
        assert!(symmetrize(&[x.clone()]).unwrap().distance(&x) < 1e-15);
        assert!(symmetrize(&[x.clone(), y.clone()]).unwrap().frobenius() < 1e-15);
        assert!(symmetrize(&[]).is_err());
        assert!(symmetrize(&[x.clone(), HermitianOperator::identity(3)]).is_err());
    }

    #[test]
    fn symmetrize_kernel_examples() {
        let x = HermitianOperator::pauli_x();
        let y = HermitianOperator::pauli_y();
        let k = symmetrize_kernel(&[x.clone(), y.clone()]).unwrap();
        let expected = x.kron(&y).add(&y.kron(&x)).unwrap().scale(0.5);
        assert!(k.op().distance(&expected) < 1e-15);
        let kk = symmetrize_kernel(&[x.clone(), x.clone()]).unwrap();
        assert!(kk.op().distance(&x.kron(&x)) < 1e-15);
        assert!(symmetrize_kernel(&[x, HermitianOperator::identity(3)]).is_err());
    }

    #[test]
    fn kernel_rejects_asymmetric() {
        let op = HermitianOperator::pauli_x().kron(&HermitianOperator::pauli_z());
        assert!(matches!(Kernel::new(2, 2, op.clone()), Err(Error::NotSymmetric(_))));
        assert!(Kernel::new(2, 3, op).is_err());
    }

    #[test]
    fn covariance_examples() {
        let x = HermitianOperator::pauli_x();
        let y = HermitianOperator::pauli_y();
        let (c, s) = state_covariance(&x, &x, &rho()).unwrap();
        assert!((c - 1.0).abs() < 1e-15 && s.abs() < 1e-15);
        let (c, s) = state_covariance(&x, &y, &rho()).unwrap();
        assert!(c.abs() < 1e-15 && (s + 0.5).abs() < 1e-15);
        let a = HermitianOperator::from_real_rows(2, &[0.3, 0.2, 0.2, -1.1]).unwrap();
        let (c, s) = state_covariance(&a, &HermitianOperator::identity(2), &rho()).unwrap();
        assert!((c - (0.75 * 0.3 - 0.25 * 1.1)).abs() < 1e-15 && s.abs() < 1e-15);
        assert!(state_covariance(&a, &HermitianOperator::identity(3), &rho()).is_err());
    }
}
