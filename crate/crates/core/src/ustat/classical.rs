//! Classical U-statistics of i.i.d. draws from a finite distribution, used to
//! cross-check kernels that are diagonal together with the state.

use itertools::Itertools;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::Kernel;
use crate::ustat::Scaling;

/// A symmetric function `h : {0..d-1}^r → R`, stored with the first argument
/// as the most significant digit.
#[derive(Debug, Clone)]
pub struct ClassicalKernel {
    d: usize,
    r: usize,
    table: Vec<f64>,
}

impl ClassicalKernel {
    pub fn new(d: usize, r: usize, table: Vec<f64>) -> Result<Self> {
        if d == 0 || table.len() != d.pow(r as u32) {
            return Err(Error::DimensionMismatch(format!("table of length {} is not indexed by {{0..{d}}}^{r}", table.len())));
        }
        if table.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("kernel table has non-finite entries".into()));
        }
        let h = ClassicalKernel { d, r, table };
        for idx in 0..h.table.len() {
            let args = h.digits(idx);
            for perm in args.iter().copied().permutations(r) {
                if (h.eval(&perm) - h.table[idx]).abs() > 1e-12 * (1.0 + h.table[idx].abs()) {
                    return Err(Error::NotSymmetric((h.eval(&perm) - h.table[idx]).abs()));
                }
            }
        }
        Ok(h)
    }

    pub fn from_fn(d: usize, r: usize, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let table = (0..d.pow(r as u32))
            .map(|idx| f(&digits(idx, d, r)))
            .collect();
        ClassicalKernel::new(d, r, table)
    }

    /// The function read off the diagonal of a kernel in the computational
    /// basis; the kernel must be diagonal.
    pub fn from_diagonal_kernel(k: &Kernel) -> Result<Self> {
        let m = k.matrix();
        let dim = m.nrows();
        let off = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| m[(i, j)].norm())
            .fold(0.0, f64::max);
        if off > 1e-12 {
            return Err(Error::InvalidInput(format!("kernel is not diagonal (off-diagonal entry {off})")));
        }
        ClassicalKernel::new(k.d(), k.r(), (0..dim).map(|i| m[(i, i)].re).collect())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn r(&self) -> usize {
        self.r
    }

    fn digits(&self, idx: usize) -> Vec<usize> {
        digits(idx, self.d, self.r)
    }

    pub fn eval(&self, args: &[usize]) -> f64 {
        self.table[args.iter().fold(0, |acc, &a| acc * self.d + a)]
    }

    /// `E h(X_1,…,X_r)` under i.i.d. `X_i ~ λ`.
    pub fn mean(&self, lambda: &[f64]) -> f64 {
        (0..self.table.len())
            .map(|idx| self.digits(idx).iter().map(|&a| lambda[a]).product::<f64>() * self.table[idx])
            .sum()
    }

    /// `binom(n,r)^{-1} Σ_{i_1<…<i_r} h(x_{i_1},…,x_{i_r})`.
    pub fn ustat(&self, sample: &[usize]) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for combo in (0..sample.len()).combinations(self.r) {
            let args: Vec<usize> = combo.iter().map(|&i| sample[i]).collect();
            total += self.eval(&args);
            count += 1;
        }
        total / count as f64
    }
}

fn digits(mut idx: usize, d: usize, r: usize) -> Vec<usize> {
    let mut out = vec![0; r];
    for j in (0..r).rev() {
        out[j] = idx % d;
        idx /= d;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Monte-Carlo estimate of `E[(s·(U_n − θ))^p]` for i.i.d. samples from `λ`.
///
/// Replicate `i` draws from a ChaCha8 stream keyed by `(seed, i)`, so the
/// result does not depend on scheduling.
pub fn classical_mc_oracle(
    h: &ClassicalKernel,
    lambda: &[f64],
    n: usize,
    p: u32,
    scaling: Scaling,
    replicates: usize,
    seed: u64,
) -> Result<McEstimate> {
    if replicates < 2 {
        return Err(Error::InvalidInput(format!("at least 2 replicates are required, got {replicates}")));
    }
    if lambda.len() != h.d() {
        return Err(Error::DimensionMismatch(format!("distribution on {} points vs kernel on {}", lambda.len(), h.d())));
    }
    if lambda.iter().any(|&x| !(x >= 0.0)) || (lambda.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput("λ must be a probability vector".into()));
    }
    if n < h.r() {
        return Err(Error::InvalidInput(format!("n = {n} is smaller than the kernel order {}", h.r())));
    }
    let theta = h.mean(lambda);
    let factor = scaling.factor(n);
    let dist = WeightedIndex::new(lambda).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let values: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let sample: Vec<usize> = (0..n).map(|_| dist.sample(&mut rng)).collect();
            (factor * (h.ustat(&sample) - theta)).powi(p as i32)
        })
        .collect();
    let m = replicates as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(McEstimate { estimate: mean, std_error: (var / m).sqrt() })
}
