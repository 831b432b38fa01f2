//! U-statistics `U_n = binom(n,r)^{-1} Σ_β K^{(β)}` and their exact moments
//! under `ρ^{⊗n}`.

pub mod classical;
pub mod fluctuation;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hoeffding::DegeneracyReport;
use crate::linalg::{binomial, eigh, Budget};
use crate::operator::sites;
use crate::operator::{DensityMatrix, HermitianOperator, Kernel, SiteSubset};
use crate::{CMatrix, C64};

pub use classical::{classical_mc_oracle, ClassicalKernel, McEstimate};
pub use fluctuation::{assemble_fluctuation, BlockOp, FluctuationAssembly, FluctuationForm, FluctuationOptions, FluctuationSymbol, FluctuationTerm};

/// Above this moment order, moments come from one eigendecomposition instead
/// of dense powers.
pub const POWER_CUTOFF: u32 = 4;

#[derive(Debug, Clone)]
pub struct UStatistic {
    n: usize,
    kernel: Kernel,
    op: HermitianOperator,
}

impl UStatistic {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub(crate) fn from_parts(n: usize, kernel: Kernel, op: HermitianOperator) -> Self {
        UStatistic { n, kernel, op }
    }

    /// Exact `Tr(ρ^{⊗n} (s·(U_n − θ))^p)` for each `p` in `ps`, where `s` is
    /// the scaling factor at this `n`.
    pub fn centered_moments(&self, rho: &DensityMatrix, ps: &[u32], scaling: Scaling) -> Result<Vec<f64>> {
        check_state(rho, &self.kernel)?;
        if ps.iter().any(|&p| p == 0) {
            return Err(Error::InvalidInput("moment order must be at least 1".into()));
        }
        let theta = self.kernel.mean(rho)?;
        let factor = scaling.factor(self.n);
        let dim = self.op.dim();
        let x: CMatrix = (self.op.matrix() - CMatrix::identity(dim, dim).scale(theta)).scale(factor);
        let state = rho.product_state(self.n);
        let max_p = ps.iter().copied().max().unwrap_or(1);
        if max_p <= POWER_CUTOFF {
            return Ok(ps.iter().map(|&p| state.expect_power(&x, p).re).collect());
        }
        let eig = eigh(&x)?;
        let weighted = state.apply(&eig.vectors);
        let weights: Vec<f64> = (0..dim)
            .map(|k| (0..dim).map(|i| eig.vectors[(i, k)].conj() * weighted[(i, k)]).sum::<C64>().re)
            .collect();
        Ok(ps
            .iter()
            .map(|&p| eig.values.iter().zip(&weights).map(|(lam, w)| w * lam.powi(p as i32)).sum())
            .collect())
    }
}

/// Normalisation applied to `U_n − θ` before taking moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Scaling {
    /// `n^{c/2}`.
    Root { c: u32 },
    /// `n − 1`, the exact normalisation for degenerate order-2 kernels.
    NMinusOne,
}

impl Scaling {
    pub fn factor(&self, n: usize) -> f64 {
        match *self {
            Scaling::Root { c } => (n as f64).powf(c as f64 / 2.0),
            Scaling::NMinusOne => n as f64 - 1.0,
        }
    }

    pub fn exponent(&self) -> u32 {
        match *self {
            Scaling::Root { c } => c,
            Scaling::NMinusOne => 2,
        }
    }
}

fn check_state(rho: &DensityMatrix, kernel: &Kernel) -> Result<()> {
    if rho.d() != kernel.d() {
        return Err(Error::DimensionMismatch(format!("state on C^{} vs kernel on C^{}", rho.d(), kernel.d())));
    }
    Ok(())
}

/// `U_n` as the normalised sum of the kernel over all `binom(n,r)` subsets.
pub fn assemble_direct(kernel: &Kernel, n: usize, budget: Budget) -> Result<UStatistic> {
    let r = kernel.r();
    if n < r {
        return Err(Error::InvalidInput(format!("n = {n} is smaller than the kernel order {r}")));
    }
    let d = kernel.d();
    let dim = budget.check_power(d, n)?;
    let mut acc = CMatrix::zeros(dim, dim);
    let w = C64::new(1.0 / binomial(n, r), 0.0);
    for beta in SiteSubset::all_of_size(n, r) {
        sites::embed_into(&mut acc, kernel.matrix(), d, n, &beta.zero_based(), w);
    }
    let op = HermitianOperator::from_arithmetic(acc)?;
    Ok(UStatistic { n, kernel: kernel.clone(), op })
}

/// `Tr(ρ^{⊗n} U_n²) − θ²`.
pub fn variance_exact(u: &UStatistic, rho: &DensityMatrix) -> Result<f64> {
    check_state(rho, u.kernel())?;
    let theta = u.kernel().mean(rho)?;
    let second = rho.product_state(u.n()).expect_product(u.op().matrix(), u.op().matrix()).re;
    Ok(second - theta * theta)
}

/// `Σ_{l=1}^r binom(r,l)² binom(n,l)^{-1} E_ρ(K_l²)`.
pub fn variance_formula(report: &DegeneracyReport, n: usize) -> Result<f64> {
    let r = report.r();
    if n < r {
        return Err(Error::InvalidInput(format!("n = {n} is smaller than the kernel order {r}")));
    }
    Ok((1..=r)
        .map(|l| binomial(r, l).powi(2) / binomial(n, l) * report.components[l].norm_sq)
        .sum())
}

/// Exact `p`-th moment of the scaled, centered U-statistic.
pub fn centered_moment(kernel: &Kernel, rho: &DensityMatrix, n: usize, p: u32, scaling: Scaling, budget: Budget) -> Result<f64> {
    check_state(rho, kernel)?;
    let u = assemble_direct(kernel, n, budget)?;
    Ok(u.centered_moments(rho, &[p], scaling)?[0])
}
