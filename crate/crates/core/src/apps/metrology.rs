//! Overlap of two evolutions generated by an `r`-body Hamiltonian
//! `H_n = binom(n,r) U_n` with couplings `g n^{−r+1/2}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hoeffding::kernel_components;
use crate::linalg::{binomial, eigh, factorial, Budget};
use crate::operator::{DensityMatrix, Kernel};
use crate::ustat::assemble_direct;
use crate::{CMatrix, C64};

/// Purity and centering tolerance.
pub const METROLOGY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OverlapResult {
    pub n: usize,
    pub overlap_re: f64,
    pub overlap_im: f64,
    /// `exp(−t²(g1−g2)² ξ_1 / (2((r−1)!)²))`.
    pub limit: f64,
}

impl OverlapResult {
    pub fn overlap(&self) -> C64 {
        C64::new(self.overlap_re, self.overlap_im)
    }

    pub fn gap(&self) -> f64 {
        (self.overlap() - C64::new(self.limit, 0.0)).norm()
    }
}

/// `Tr(ρ_0^{⊗n} exp(i t (g1−g2) n^{−r+1/2} H_n))` and its coherent-state
/// limit.
pub fn metrology_overlap(k: &Kernel, rho0: &DensityMatrix, t: f64, g1: f64, g2: f64, n: usize, budget: Budget) -> Result<OverlapResult> {
    if ![t, g1, g2].iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidInput("t, g1 and g2 must be finite".into()));
    }
    if !rho0.is_pure(METROLOGY_TOL) {
        return Err(Error::InvalidInput("initial state must be pure".into()));
    }
    let report = kernel_components(k, rho0, None)?;
    let scale = k.op().frobenius().max(1.0);
    if report.theta.abs() > METROLOGY_TOL * scale {
        return Err(Error::InvalidInput(format!("kernel is not centered at the initial state (θ = {:.3e})", report.theta)));
    }
    if report.c != Some(1) {
        return Err(Error::InvalidInput("kernel is degenerate at the initial state, ξ_1 = 0".into()));
    }
    let r = k.r();
    let xi1 = report.xi1();
    let dg = g1 - g2;
    let limit = (-(t * t * dg * dg * xi1) / (2.0 * factorial(r - 1).powi(2))).exp();
    let angle = t * dg * (n as f64).powf(0.5 - r as f64) * binomial(n, r);
    let overlap = if angle == 0.0 {
        budget.check_power(k.d(), n)?;
        C64::new(1.0, 0.0)
    } else {
        let u = assemble_direct(k, n, budget)?;
        let eig = eigh(u.op().matrix())?;
        let psi1 = rho0.eigenvectors().column(0).into_owned();
        let mut psi = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for _ in 0..n {
            psi = psi.kronecker(&psi1);
        }
        let amps = eig.vectors.adjoint() * &psi;
        eig.values
            .iter()
            .zip(amps.iter())
            .map(|(e, a)| C64::from_polar(a.norm_sqr(), angle * e))
            .sum()
    };
    Ok(OverlapResult { n, overlap_re: overlap.re, overlap_im: overlap.im, limit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::HermitianOperator;

    fn setup() -> (Kernel, DensityMatrix) {
        let x = HermitianOperator::pauli_x();
        let z = HermitianOperator::pauli_z();
        let k = Kernel::new(2, 2, z.kron(&x).add(&x.kron(&z)).unwrap().scale(0.5)).unwrap();
        let h = C64::new(0.5f64.sqrt(), 0.0);
        (k, DensityMatrix::pure(&[h, h]).unwrap())
    }

    #[test]
    fn equal_couplings_give_one() {
        let (k, rho0) = setup();
        let r = metrology_overlap(&k, &rho0, 1.0, 0.3, 0.3, 6, Budget::default()).unwrap();
        assert_eq!(r.overlap(), C64::new(1.0, 0.0));
        let r0 = metrology_overlap(&k, &rho0, 0.0, 0.3, 0.8, 6, Budget::default()).unwrap();
        assert_eq!(r0.overlap(), C64::new(1.0, 0.0));
    }

    #[test]
    fn limit_value_and_symmetry() {
        let (k, rho0) = setup();
        let a = metrology_overlap(&k, &rho0, 1.0, 0.5, 0.0, 6, Budget::default()).unwrap();
        let b = metrology_overlap(&k, &rho0, 1.0, 0.0, 0.5, 6, Budget::default()).unwrap();
        assert!((a.limit - (-0.25f64 * 0.25 / 2.0).exp()).abs() < 1e-12);
        assert!((a.overlap() - b.overlap().conj()).norm() < 1e-12);
        assert!(a.overlap().norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn rejects_mixed_and_uncentered() {
        let (k, _) = setup();
        let mixed = DensityMatrix::diagonal(&[0.75, 0.25]).unwrap();
        assert!(metrology_overlap(&k, &mixed, 1.0, 0.5, 0.0, 4, Budget::default()).is_err());
        let z = HermitianOperator::pauli_z();
        let up = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let kz = Kernel::new(2, 2, z.kron(&z)).unwrap();
        assert!(metrology_overlap(&kz, &up, 1.0, 0.5, 0.0, 4, Budget::default()).is_err());
    }
}
