//! Statistical applications of order-2 degenerate kernels: distance kernels
//! for state testing, Born-rule measurement simulation and the metrology
//! overlap of an `r`-body Hamiltonian.

pub mod metrology;
pub mod testing;

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ccr::DEFAULT_GAP_TOL;
use crate::error::{Error, Result};
use crate::linalg::{eigh, kron, Eigh};
use crate::operator::{DensityMatrix, HermitianOperator, Kernel};
use crate::{CMatrix, C64};

pub use metrology::{metrology_overlap, OverlapResult};
pub use testing::{goodness_limit_forms, limit_interval, run_test, GoodnessLimit, LimitSampler, TestResult, TestSpec};

/// Largest allowed probability mass deficit in a Born distribution.
pub const BORN_MASS_TOL: f64 = 1e-8;

/// `T_{j,k}` for 0-based `j ≠ k` built from the columns of `v`.
fn t_matrix(v: &CMatrix, j: usize, k: usize) -> CMatrix {
    let (a, b) = (j.min(k), j.max(k));
    let eab = v.column(a) * v.column(b).adjoint();
    let eba = v.column(b) * v.column(a).adjoint();
    if j < k {
        (eab - eba) * C64::new(0.0, 1.0)
    } else {
        eab + eba
    }
}

/// Order-2 kernel with `Tr(σ^{⊗2} K) = ‖σ − ρ‖²_2` for every state `σ`.
///
/// Built in the eigenbasis of `ρ`; the off-diagonal part carries weight ½
/// because `T_{j,k}` and `T_{k,j}` each see `2|σ_{jk}|`.
pub fn goodness_kernel(rho: &DensityMatrix) -> Result<Kernel> {
    rho.require_nondegenerate(DEFAULT_GAP_TOL)?;
    let d = rho.d();
    let v = rho.eigenvectors();
    let id = CMatrix::identity(d, d);
    let mut k = CMatrix::zeros(d * d, d * d);
    for (i, &lam) in rho.eigenvalues().iter().enumerate() {
        let a = id.scale(lam) - v.column(i) * v.column(i).adjoint();
        k += kron(&a, &a);
    }
    for j in 0..d {
        for l in 0..d {
            if j != l {
                let t = t_matrix(v, j, l);
                k += kron(&t, &t).scale(0.5);
            }
        }
    }
    Kernel::new(d, 2, HermitianOperator::from_arithmetic(k)?)
}

/// Order-2 kernel on pairs `C^d ⊗ C^d` with
/// `Tr((σ_1⊗σ_2)^{⊗2} K) = ‖σ_1 − σ_2‖²_2`.
pub fn homogeneity_kernel(d: usize) -> Result<Kernel> {
    if d < 2 {
        return Err(Error::InvalidInput(format!("homogeneity kernel needs d ≥ 2, got {d}")));
    }
    let id = CMatrix::identity(d, d);
    let diff = |a: &CMatrix| kron(a, &id) - kron(&id, a);
    let mut k = CMatrix::zeros(d.pow(4), d.pow(4));
    for i in 0..d {
        let e = HermitianOperator::unit(d, i, i, C64::new(1.0, 0.0));
        let a = diff(&e);
        k += kron(&a, &a);
    }
    for j in 0..d {
        for l in 0..d {
            if j != l {
                let a = diff(&t_matrix(&id, j, l));
                k += kron(&a, &a).scale(0.5);
            }
        }
    }
    Kernel::new(d * d, 2, HermitianOperator::from_arithmetic(k)?)
}

/// Outcome law of a projective measurement: distinct eigenvalues, ascending,
/// with their probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct BornDistribution {
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
}

impl BornDistribution {
    /// Groups eigenvalues closer than `1e-9 · max(1, max|e|)` and sums the
    /// weights `⟨v_k|ρ|v_k⟩` supplied by `state_apply(V) = ρV`.
    pub(crate) fn from_eigh(eig: &Eigh, state_apply: impl Fn(&CMatrix) -> CMatrix) -> Result<Self> {
        let dim = eig.values.len();
        let weighted = state_apply(&eig.vectors);
        let raw: Vec<f64> = (0..dim)
            .map(|k| (0..dim).map(|i| eig.vectors[(i, k)].conj() * weighted[(i, k)]).sum::<C64>().re)
            .collect();
        let total: f64 = raw.iter().sum();
        if (total - 1.0).abs() > BORN_MASS_TOL || raw.iter().any(|&p| p < -BORN_MASS_TOL) {
            return Err(Error::Numerical(format!("Born probabilities sum to {total}")));
        }
        let scale = eig.values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let mut values: Vec<f64> = Vec::new();
        let mut probs: Vec<f64> = Vec::new();
        for (&e, &p) in eig.values.iter().zip(&raw) {
            match values.last() {
                Some(&last) if (e - last).abs() <= 1e-9 * scale => *probs.last_mut().expect("paired") += p,
                _ => {
                    values.push(e);
                    probs.push(p);
                }
            }
        }
        for p in &mut probs {
            *p = p.max(0.0);
        }
        Ok(BornDistribution { values, probs })
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `P(X ∉ [a, b])`.
    pub fn prob_outside(&self, a: f64, b: f64) -> f64 {
        self.values.iter().zip(&self.probs).filter(|(v, _)| **v < a || **v > b).map(|(_, p)| p).sum()
    }

    /// Smallest outcome whose cumulative probability reaches `q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let target = q * self.total_mass();
        let mut acc = 0.0;
        for (v, p) in self.values.iter().zip(&self.probs) {
            acc += p;
            if acc >= target {
                return *v;
            }
        }
        *self.values.last().expect("nonempty distribution")
    }

    /// `reps` independent outcomes from one ChaCha8 stream.
    pub fn sample(&self, reps: usize, seed: u64, stream: u64) -> Result<Vec<f64>> {
        let index = WeightedIndex::new(&self.probs).map_err(|e| Error::Numerical(format!("Born weights: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok((0..reps).map(|_| self.values[index.sample(&mut rng)]).collect())
    }
}

pub fn born_distribution(o: &HermitianOperator, state: &DensityMatrix) -> Result<BornDistribution> {
    if o.dim() != state.d() {
        return Err(Error::DimensionMismatch(format!("observable on dimension {} vs state on {}", o.dim(), state.d())));
    }
    let eig = eigh(o.matrix())?;
    BornDistribution::from_eigh(&eig, |v| state.matrix() * v)
}

/// Born-rule outcomes of measuring `o` in `state`, deterministic in `seed`.
pub fn simulate_measurement(o: &HermitianOperator, state: &DensityMatrix, replicates: usize, seed: u64) -> Result<Vec<f64>> {
    born_distribution(o, state)?.sample(replicates, seed, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hoeffding::kernel_components;
    use crate::linalg::Budget;
    use crate::operator::symmetrize_kernel;
    use crate::ustat::assemble_direct;

    fn frob_sq(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
        (a.matrix() - b.matrix()).iter().map(|z| z.norm_sqr()).sum()
    }

    #[test]
    fn goodness_is_unbiased_and_degenerate() {
        let rho = DensityMatrix::diagonal(&[0.75, 0.25]).unwrap();
        let k = goodness_kernel(&rho).unwrap();
        let sigma = DensityMatrix::diagonal(&[0.7, 0.3]).unwrap();
        assert!((k.mean(&sigma).unwrap() - 0.005).abs() < 1e-14);
        assert!(k.mean(&rho).unwrap().abs() < 1e-14);
        let plus = DensityMatrix::pure(&[C64::new(0.5f64.sqrt(), 0.0), C64::new(0.0, 0.5f64.sqrt())]).unwrap();
        assert!((k.mean(&plus).unwrap() - frob_sq(&plus, &rho)).abs() < 1e-12);
        let rep = kernel_components(&k, &rho, None).unwrap();
        assert_eq!(rep.c, Some(2));
        assert!(rep.component(1).kernel.op().frobenius() < 1e-10);
    }

    #[test]
    fn homogeneity_is_unbiased() {
        let k = homogeneity_kernel(2).unwrap();
        let s1 = DensityMatrix::diagonal(&[0.75, 0.25]).unwrap();
        let s2 = DensityMatrix::diagonal(&[0.7, 0.3]).unwrap();
        let joint = DensityMatrix::new(kron(s1.matrix(), s2.matrix())).unwrap();
        assert!((k.mean(&joint).unwrap() - 0.005).abs() < 1e-14);
        let same = DensityMatrix::new(kron(s1.matrix(), s1.matrix())).unwrap();
        assert!(k.mean(&same).unwrap().abs() < 1e-14);
        assert!(homogeneity_kernel(1).is_err());
    }

    #[test]
    fn born_on_diagonal_state() {
        let rho = DensityMatrix::diagonal(&[0.75, 0.25]).unwrap();
        let dist = born_distribution(&HermitianOperator::pauli_z(), &rho).unwrap();
        assert_eq!(dist.values, vec![-1.0, 1.0]);
        assert!((dist.probs[0] - 0.25).abs() < 1e-15 && (dist.probs[1] - 0.75).abs() < 1e-15);
        let a = simulate_measurement(&HermitianOperator::pauli_z(), &rho, 1000, 3).unwrap();
        let b = simulate_measurement(&HermitianOperator::pauli_z(), &rho, 1000, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn born_of_two_site_pauli_statistic() {
        let rho = DensityMatrix::diagonal(&[0.75, 0.25]).unwrap();
        let k = symmetrize_kernel(&[HermitianOperator::pauli_x(), HermitianOperator::pauli_y()]).unwrap();
        let u = assemble_direct(&k, 2, Budget::default()).unwrap();
        let rho2 = DensityMatrix::new(kron(rho.matrix(), rho.matrix())).unwrap();
        let dist = born_distribution(u.op(), &rho2).unwrap();
        assert_eq!(dist.values.len(), 3);
        let expect = [0.3125, 0.375, 0.3125];
        for ((v, p), (ev, ep)) in dist.values.iter().zip(&dist.probs).zip([-1.0, 0.0, 1.0].iter().zip(expect)) {
            assert!((v - ev).abs() < 1e-12 && (p - ep).abs() < 1e-12);
        }
        assert!((dist.quantile(0.5) - 0.0).abs() < 1e-12);
        assert!((dist.prob_outside(-0.5, 0.5) - 0.625).abs() < 1e-12);
    }
}
