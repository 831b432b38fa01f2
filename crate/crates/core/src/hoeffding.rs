//! Conditional expectations onto site subsets and the quantum Hoeffding
//! decomposition.
//!
//! `E(·|A)` contracts every site outside `A` against `ρ` and re-embeds the
//! result as an operator acting trivially off `A`. The Hoeffding projection
//! `P_A` is the inclusion–exclusion sum `Σ_{B⊂A} (-1)^{|A|-|B|} E(·|B)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{frobenius, hermitian_part};
use crate::operator::json::MatrixJson;
use crate::operator::sites;
use crate::operator::{DensityMatrix, HermitianOperator, Kernel, SiteSubset};
use crate::CMatrix;

fn check_dims(h: &HermitianOperator, a: &SiteSubset, rho: &DensityMatrix) -> Result<()> {
    let want = crate::linalg::checked_pow(rho.d(), a.n());
    if want != Some(h.dim()) {
        return Err(Error::DimensionMismatch(format!(
            "operator of dimension {} is not on {} sites of C^{}",
            h.dim(),
            a.n(),
            rho.d()
        )));
    }
    Ok(())
}

fn cond_expectation_raw(h: &CMatrix, a: &SiteSubset, rho: &DensityMatrix) -> CMatrix {
    let d = rho.d();
    let n = a.n();
    let keep = a.zero_based();
    let reduced = sites::trace_out(h, d, n, &keep, rho.matrix());
    sites::embed(&reduced, d, n, &keep)
}

/// `E(H|A)`.
pub fn cond_expectation(h: &HermitianOperator, a: &SiteSubset, rho: &DensityMatrix) -> Result<HermitianOperator> {
    check_dims(h, a, rho)?;
    HermitianOperator::from_arithmetic(cond_expectation_raw(h.matrix(), a, rho))
}

/// `P_A(H) = Σ_{B⊂A} (-1)^{|A|-|B|} E(H|B)`.
pub fn hoeffding_project(h: &HermitianOperator, a: &SiteSubset, rho: &DensityMatrix) -> Result<HermitianOperator> {
    check_dims(h, a, rho)?;
    let dim = h.dim();
    let mut acc = CMatrix::zeros(dim, dim);
    for b in a.subsets() {
        let term = cond_expectation_raw(h.matrix(), &b, rho);
        if (a.len() - b.len()) % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    HermitianOperator::from_arithmetic(acc)
}

/// The order-`l` Hoeffding component `K_l = P_{1..l}(K)` as a kernel on its
/// own `l` sites.
#[derive(Debug, Clone)]
pub struct HoeffdingComponent {
    pub l: usize,
    pub kernel: Kernel,
    /// `Tr(ρ^{⊗l} K_l²)`.
    pub norm_sq: f64,
}

#[derive(Debug, Clone)]
pub struct DegeneracyReport {
    /// First order with a nonvanishing component; `None` when the kernel is a
    /// multiple of the identity.
    pub c: Option<usize>,
    pub theta: f64,
    pub components: Vec<HoeffdingComponent>,
    pub tolerance: f64,
}

impl DegeneracyReport {
    pub fn r(&self) -> usize {
        self.components.len() - 1
    }

    pub fn is_fully_degenerate(&self) -> bool {
        self.c.is_none()
    }

    pub fn component(&self, l: usize) -> &HoeffdingComponent {
        &self.components[l]
    }

    /// `ξ_1 = Tr(ρ K_1²)`.
    pub fn xi1(&self) -> f64 {
        self.components.get(1).map_or(0.0, |c| c.norm_sq)
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Comp {
            l: usize,
            norm_sq: f64,
            kernel: MatrixJson,
        }
        #[derive(Serialize)]
        struct Report {
            theta: f64,
            c: Option<usize>,
            components: Vec<Comp>,
        }
        let report = Report {
            theta: self.theta,
            c: self.c,
            components: self
                .components
                .iter()
                .map(|c| Comp { l: c.l, norm_sq: c.norm_sq, kernel: MatrixJson::from_matrix(c.kernel.matrix()) })
                .collect(),
        };
        serde_json::to_value(report).expect("report serializes")
    }
}

/// Computes `K_0, …, K_r` and the degeneracy order.
///
/// `tol` defaults to `1e-9 · ‖K‖_F`; a component counts as nonvanishing when
/// its Frobenius norm reaches `tol`.
pub fn kernel_components(kernel: &Kernel, rho: &DensityMatrix, tol: Option<f64>) -> Result<DegeneracyReport> {
    if rho.d() != kernel.d() {
        return Err(Error::DimensionMismatch(format!("state on C^{} vs kernel on C^{}", rho.d(), kernel.d())));
    }
    let tol = tol.unwrap_or(1e-9 * kernel.op().frobenius());
    if tol <= 0.0 || !tol.is_finite() {
        return Err(Error::InvalidInput(format!("degeneracy tolerance must be positive, got {tol}")));
    }
    let d = kernel.d();
    let r = kernel.r();
    let theta = kernel.mean(rho)?;
    let mut components = vec![HoeffdingComponent { l: 0, kernel: Kernel::scalar(d, theta), norm_sq: theta * theta }];
    let mut c = None;
    for l in 1..=r {
        let a = SiteSubset::new(r, (1..=l).collect())?;
        let projected = hoeffding_project(kernel.op(), &a, rho)?;
        let keep: Vec<usize> = (0..l).collect();
        let reduced = sites::trace_out(projected.matrix(), d, r, &keep, rho.matrix());
        let op = HermitianOperator::from_arithmetic(hermitian_part(&reduced))?;
        let norm_sq = rho.product_state(l).expect_product(op.matrix(), op.matrix()).re;
        if c.is_none() && frobenius(op.matrix()) >= tol {
            c = Some(l);
        }
        components.push(HoeffdingComponent { l, kernel: Kernel::new(d, l, op)?, norm_sq });
    }
    Ok(DegeneracyReport { c, theta, components, tolerance: tol })
}
