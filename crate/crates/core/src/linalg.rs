//! Dense linear-algebra helpers shared by every module.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::{CMatrix, C64};

/// Maximum total Hilbert-space dimension a computation may allocate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_dim: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_dim: 1 << 14 }
    }
}

impl Budget {
    pub fn new(max_dim: usize) -> Self {
        Budget { max_dim }
    }

    /// Fails with [`Error::BudgetExceeded`] when `dim` is over the limit.
    pub fn check(&self, dim: usize) -> Result<()> {
        if dim > self.max_dim {
            return Err(Error::BudgetExceeded {
                dim,
                max_dim: self.max_dim,
                required_bytes: (dim as u128) * (dim as u128) * 16,
            });
        }
        Ok(())
    }

    /// Checks `d^n` without overflowing.
    pub fn check_power(&self, d: usize, n: usize) -> Result<usize> {
        let dim = checked_pow(d, n).ok_or(Error::BudgetExceeded {
            dim: usize::MAX,
            max_dim: self.max_dim,
            required_bytes: u128::MAX,
        })?;
        self.check(dim)?;
        Ok(dim)
    }
}

pub fn checked_pow(d: usize, n: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..n {
        acc = acc.checked_mul(d)?;
    }
    Some(acc)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entrywise deviation from selfadjointness.
pub fn max_asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(M + M†)/2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn is_real(m: &CMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

fn split(m: &CMatrix) -> (DMatrix<f64>, DMatrix<f64>) {
    (m.map(|z| z.re), m.map(|z| z.im))
}

fn join(re: &DMatrix<f64>, im: &DMatrix<f64>) -> CMatrix {
    CMatrix::from_fn(re.nrows(), re.ncols(), |i, j| C64::new(re[(i, j)], im[(i, j)]))
}

/// Complex matrix product.
///
/// Large products are split into real products, which dispatch to the
/// blocked `f64` gemm kernel.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    if a.nrows() < 32 && b.ncols() < 32 {
        return a * b;
    }
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let a_real = ai.iter().all(|x| *x == 0.0);
    let b_real = bi.iter().all(|x| *x == 0.0);
    match (a_real, b_real) {
        (true, true) => (&ar * &br).map(|x| C64::new(x, 0.0)),
        (true, false) => join(&(&ar * &br), &(&ar * &bi)),
        (false, true) => join(&(&ar * &br), &(&ai * &br)),
        (false, false) => {
            let re = &ar * &br - &ai * &bi;
            let im = &ar * &bi + &ai * &br;
            join(&re, &im)
        }
    }
}

/// `Tr(A B)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_all(ops: &[&CMatrix]) -> CMatrix {
    let mut acc = CMatrix::identity(1, 1);
    for op in ops {
        acc = acc.kronecker(op);
    }
    acc
}

/// Spectral decomposition of a selfadjoint matrix, eigenvalues ascending.
///
/// Real symmetric inputs take the real path, which is markedly cheaper.
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn eigh(m: &CMatrix) -> Result<Eigh> {
    let n = m.nrows();
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite entry in eigendecomposition input".into()));
    }
    let (values, vectors) = if is_real(m) {
        let re = m.map(|z| z.re);
        let eig = SymmetricEigen::new(re);
        (eig.eigenvalues.iter().copied().collect::<Vec<_>>(), eig.eigenvectors.map(|x| C64::new(x, 0.0)))
    } else {
        let eig = SymmetricEigen::new(hermitian_part(m));
        (eig.eigenvalues.iter().copied().collect::<Vec<_>>(), eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors = CMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    Ok(Eigh { values: sorted_values, vectors: sorted_vectors })
}
