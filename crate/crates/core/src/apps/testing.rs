//! Goodness-of-fit test for a fixed state built on the distance kernel.
//!
//! The statistic `s(n)·U_n` is measured projectively; `H_0` is accepted when
//! the outcome falls in an interval `[a, b]`. By default the interval holds the
//! equal-tail `α` quantiles of the limit law, sampled on the truncated
//! oscillator representation.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::apps::{goodness_kernel, BornDistribution};
use crate::ccr::fock::DEFAULT_TRUNC;
use crate::ccr::limit::FockLimit;
use crate::ccr::{build_ccr_basis, kernel_to_limit, CCRBasis, LimitPolynomial, LimitTerm};
use crate::error::{Error, Result};
use crate::hoeffding::kernel_components;
use crate::linalg::{eigh, Budget};
use crate::operator::DensityMatrix;
use crate::ustat::{assemble_direct, Scaling};

/// Draws per independent random stream when sampling the limit law.
pub const SAMPLE_CHUNK: usize = 8192;

/// Stream offsets keep the limit sampler and the two test samplers disjoint.
const NULL_STREAM: u64 = 1;
const ALT_STREAM: u64 = 2;
const LIMIT_STREAM_BASE: u64 = 1 << 32;

#[derive(Debug, Clone)]
pub struct TestSpec {
    pub null_state: DensityMatrix,
    pub alpha: f64,
    pub n: usize,
    /// Acceptance interval; `None` derives it from the limit law.
    pub interval: Option<(f64, f64)>,
    pub mc_replicates: usize,
    pub seed: u64,
    pub limit_draws: usize,
    pub scaling: Scaling,
    pub trunc: usize,
    pub budget: Budget,
}

impl TestSpec {
    pub fn new(null_state: DensityMatrix, alpha: f64, n: usize) -> Self {
        TestSpec {
            null_state,
            alpha,
            n,
            interval: None,
            mc_replicates: 10_000,
            seed: 0,
            limit_draws: 1_000_000,
            scaling: Scaling::Root { c: 2 },
            trunc: DEFAULT_TRUNC,
            budget: Budget::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidInput(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        if self.n < 2 {
            return Err(Error::InvalidInput(format!("sample size must be at least 2, got {}", self.n)));
        }
        if self.mc_replicates < 2 || self.limit_draws < 2 {
            return Err(Error::InvalidInput("at least 2 replicates and 2 limit draws are required".into()));
        }
        if let Some((a, b)) = self.interval {
            if !(a < b) {
                return Err(Error::InvalidInput(format!("interval [{a}, {b}] is empty")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TestResult {
    pub n: usize,
    pub interval: (f64, f64),
    pub alpha_hat: f64,
    pub alpha_se: f64,
    /// Exact finite-n type I error of the interval.
    pub alpha_exact: f64,
    pub beta_hat: Option<f64>,
    pub beta_se: Option<f64>,
    pub beta_exact: Option<f64>,
    /// `‖σ − ρ‖²_2` for the alternative.
    pub theta_true: Option<f64>,
}

fn binomial_se(p: f64, reps: usize) -> f64 {
    (p * (1.0 - p) / reps as f64).sqrt()
}

fn outside_fraction(draws: &[f64], (a, b): (f64, f64)) -> f64 {
    draws.iter().filter(|&&x| x < a || x > b).count() as f64 / draws.len() as f64
}

/// The two forms of the null limit law of the goodness statistic, in the
/// normalized generator basis.
#[derive(Debug, Clone, Serialize)]
pub struct GoodnessLimit {
    /// Derived from the kernel's order-2 component.
    pub kernel_form: LimitPolynomial,
    /// `Σ_i (G_i² − λ_i(1−λ_i)) + Σ_{j<k} (Q² + P² − 2σ²)/σ²`.
    pub display_form: LimitPolynomial,
    /// Largest coefficient difference between the two.
    pub max_abs_diff: f64,
}

fn display_form(basis: &CCRBasis) -> LimitPolynomial {
    let nc = basis.n_classical();
    let g = basis.len();
    let l = basis.cholesky();
    let mut rows: Vec<Vec<f64>> = (0..nc).map(|i| (0..nc).map(|a| l[(i, a)]).collect()).collect();
    rows.push((0..nc).map(|a| (0..nc).map(|i| l[(i, a)]).sum()).collect());
    let mut coeffs: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for row in &rows {
        for a in 0..nc {
            for b in a..nc {
                let mut m = vec![0; g];
                m[a] += 1;
                m[b] += 1;
                let w = if a == b { row[a] * row[a] } else { 2.0 * row[a] * row[b] };
                *coeffs.entry(m).or_insert(0.0) += w;
            }
        }
    }
    for o in 0..basis.n_oscillators() {
        for gen in [nc + 2 * o, nc + 2 * o + 1] {
            let mut m = vec![0; g];
            m[gen] = 2;
            coeffs.insert(m, 1.0);
        }
    }
    let mut terms: Vec<LimitTerm> = coeffs.into_iter().map(|(m, coeff)| LimitTerm { m, coeff }).collect();
    terms.reverse();
    LimitPolynomial { c: 2, binom_factor: 1.0, terms }
}

fn max_coeff_diff(a: &LimitPolynomial, b: &LimitPolynomial) -> f64 {
    let mut map: BTreeMap<&[usize], f64> = BTreeMap::new();
    for t in &a.terms {
        *map.entry(&t.m).or_insert(0.0) += a.binom_factor * t.coeff;
    }
    for t in &b.terms {
        *map.entry(&t.m).or_insert(0.0) -= b.binom_factor * t.coeff;
    }
    map.values().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn goodness_limit_forms(rho: &DensityMatrix) -> Result<GoodnessLimit> {
    let k = goodness_kernel(rho)?;
    let report = kernel_components(&k, rho, None)?;
    let basis = build_ccr_basis(rho)?;
    let kernel_form = kernel_to_limit(&k, &report, &basis)?;
    let display_form = display_form(&basis);
    let max_abs_diff = max_coeff_diff(&kernel_form, &display_form);
    Ok(GoodnessLimit { kernel_form, display_form, max_abs_diff })
}

/// Draws from a limit law whose terms each involve either classical variables
/// only or a single oscillator.
#[derive(Debug, Clone)]
pub struct LimitSampler {
    classical: Option<FockLimit>,
    oscillators: Vec<BornDistribution>,
}

impl LimitSampler {
    pub fn new(u: &LimitPolynomial, basis: &CCRBasis, trunc: usize, budget: Budget) -> Result<Self> {
        u.validate()?;
        let nc = basis.n_classical();
        let mut classical_terms = Vec::new();
        let mut osc_terms: BTreeMap<usize, Vec<LimitTerm>> = BTreeMap::new();
        for t in &u.terms {
            let has_classical = t.m[..nc].iter().any(|&x| x > 0);
            let oscs: Vec<usize> = (0..basis.n_oscillators()).filter(|&o| t.m[nc + 2 * o] + t.m[nc + 2 * o + 1] > 0).collect();
            match (has_classical, oscs.as_slice()) {
                (true, []) => classical_terms.push(t.clone()),
                (false, [o]) => osc_terms.entry(*o).or_default().push(t.clone()),
                _ => {
                    return Err(Error::InvalidInput(
                        "limit law couples several independent blocks; sampling needs separable terms".into(),
                    ))
                }
            }
        }
        let sub = |terms: Vec<LimitTerm>| LimitPolynomial { c: u.c, binom_factor: u.binom_factor, terms };
        let pad = u.c / 2 + 1;
        let classical = if classical_terms.is_empty() {
            None
        } else {
            Some(FockLimit::build(&sub(classical_terms), basis, trunc, pad, budget)?)
        };
        let mut oscillators = Vec::with_capacity(osc_terms.len());
        for (_, terms) in osc_terms {
            let fl = FockLimit::build(&sub(terms), basis, trunc, pad, budget)?;
            let eig = eigh(&fl.operator_at(&[]))?;
            let w = fl.weights().to_vec();
            oscillators.push(BornDistribution::from_eigh(&eig, |v| {
                let mut out = v.clone();
                for (i, wi) in w.iter().enumerate() {
                    out.row_mut(i).scale_mut(*wi);
                }
                out
            })?);
        }
        Ok(LimitSampler { classical, oscillators })
    }

    /// `draws` samples; chunk `i` of [`SAMPLE_CHUNK`] draws uses its own
    /// stream, so the output does not depend on the thread count.
    pub fn sample(&self, draws: usize, seed: u64) -> Result<Vec<f64>> {
        let indices: Vec<WeightedIndex<f64>> = self
            .oscillators
            .iter()
            .map(|d| WeightedIndex::new(&d.probs).map_err(|e| Error::Numerical(format!("oscillator weights: {e}"))))
            .collect::<Result<_>>()?;
        let chunks = draws.div_ceil(SAMPLE_CHUNK);
        let out: Vec<Vec<f64>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(LIMIT_STREAM_BASE + c as u64);
                let len = SAMPLE_CHUNK.min(draws - c * SAMPLE_CHUNK);
                let nz = self.classical.as_ref().map_or(0, |f| f.n_classical());
                let mut z = vec![0.0; nz];
                (0..len)
                    .map(|_| {
                        let mut x = 0.0;
                        if let Some(f) = &self.classical {
                            for zi in z.iter_mut() {
                                *zi = StandardNormal.sample(&mut rng);
                            }
                            x += f.operator_at(&z)[(0, 0)].re;
                        }
                        for (dist, idx) in self.oscillators.iter().zip(&indices) {
                            x += dist.values[idx.sample(&mut rng)];
                        }
                        x
                    })
                    .collect()
            })
            .collect();
        Ok(out.concat())
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Equal-tail `α` interval of the null limit law of the goodness statistic.
pub fn limit_interval(rho: &DensityMatrix, alpha: f64, draws: usize, seed: u64, trunc: usize, budget: Budget) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) || draws < 2 {
        return Err(Error::InvalidInput("alpha must lie in (0,1) with at least 2 draws".into()));
    }
    let forms = goodness_limit_forms(rho)?;
    let basis = build_ccr_basis(rho)?;
    let sampler = LimitSampler::new(&forms.kernel_form, &basis, trunc, budget)?;
    let mut xs = sampler.sample(draws, seed)?;
    xs.sort_by(f64::total_cmp);
    Ok((quantile_sorted(&xs, alpha / 2.0), quantile_sorted(&xs, 1.0 - alpha / 2.0)))
}

/// Exact law of the measured statistic `s(n)·U_n` under `state^{⊗n}`.
pub fn statistic_distribution(spec: &TestSpec, state: &DensityMatrix) -> Result<BornDistribution> {
    let k = goodness_kernel(&spec.null_state)?;
    let u = assemble_direct(&k, spec.n, spec.budget)?;
    let x = u.op().matrix().scale(spec.scaling.factor(spec.n));
    let eig = eigh(&x)?;
    let ps = state.product_state(spec.n);
    BornDistribution::from_eigh(&eig, |v| ps.apply(v))
}

pub fn run_test(spec: &TestSpec, alternative: Option<&DensityMatrix>) -> Result<TestResult> {
    spec.validate()?;
    let rho = &spec.null_state;
    if let Some(s) = alternative {
        if s.d() != rho.d() {
            return Err(Error::DimensionMismatch("alternative and null live on different spaces".into()));
        }
    }
    let interval = match spec.interval {
        Some(i) => i,
        None => limit_interval(rho, spec.alpha, spec.limit_draws, spec.seed, spec.trunc, spec.budget)?,
    };
    let k = goodness_kernel(rho)?;
    let u = assemble_direct(&k, spec.n, spec.budget)?;
    let eig = eigh(&u.op().matrix().scale(spec.scaling.factor(spec.n)))?;
    let null = BornDistribution::from_eigh(&eig, |v| rho.product_state(spec.n).apply(v))?;
    let alpha_hat = outside_fraction(&null.sample(spec.mc_replicates, spec.seed, NULL_STREAM)?, interval);
    let mut result = TestResult {
        n: spec.n,
        interval,
        alpha_hat,
        alpha_se: binomial_se(alpha_hat, spec.mc_replicates),
        alpha_exact: null.prob_outside(interval.0, interval.1),
        beta_hat: None,
        beta_se: None,
        beta_exact: None,
        theta_true: None,
    };
    if let Some(sigma) = alternative {
        let alt = BornDistribution::from_eigh(&eig, |v| sigma.product_state(spec.n).apply(v))?;
        let beta_hat = 1.0 - outside_fraction(&alt.sample(spec.mc_replicates, spec.seed, ALT_STREAM)?, interval);
        result.beta_hat = Some(beta_hat);
        result.beta_se = Some(binomial_se(beta_hat, spec.mc_replicates));
        result.beta_exact = Some(1.0 - alt.prob_outside(interval.0, interval.1));
        let diff: DMatrix<_> = sigma.matrix() - rho.matrix();
        result.theta_true = Some(diff.iter().map(|z| z.norm_sqr()).sum());
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rho() -> DensityMatrix {
        DensityMatrix::diagonal(&[0.75, 0.25]).unwrap()
    }

    #[test]
    fn kernel_form_halves_the_oscillator_part() {
        let forms = goodness_limit_forms(&rho()).unwrap();
        let osc: Vec<&LimitTerm> = forms.kernel_form.terms.iter().filter(|t| t.m[0] == 0).collect();
        assert_eq!(osc.len(), 2);
        for t in osc {
            assert!((t.coeff - 0.5).abs() < 1e-12);
        }
        let classical = forms.kernel_form.terms.iter().find(|t| t.m[0] == 2).unwrap();
        let display = forms.display_form.terms.iter().find(|t| t.m[0] == 2).unwrap();
        assert!((classical.coeff - display.coeff).abs() < 1e-12);
        assert!((forms.max_abs_diff - 0.5).abs() < 1e-12);
    }

    #[test]
    fn whole_line_interval_never_rejects() {
        let mut spec = TestSpec::new(rho(), 0.05, 4);
        spec.interval = Some((f64::NEG_INFINITY, f64::INFINITY));
        spec.mc_replicates = 500;
        let r = run_test(&spec, Some(&rho())).unwrap();
        assert_eq!(r.alpha_hat, 0.0);
        assert_eq!(r.beta_hat, Some(1.0));
        assert_eq!(r.theta_true, Some(0.0));
    }

    #[test]
    fn limit_sampler_matches_limit_moments() {
        let forms = goodness_limit_forms(&rho()).unwrap();
        let basis = build_ccr_basis(&rho()).unwrap();
        let s = LimitSampler::new(&forms.kernel_form, &basis, DEFAULT_TRUNC, Budget::default()).unwrap();
        let xs = s.sample(200_000, 7).unwrap();
        let m2 = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        let exact = crate::ccr::limit_moment(&forms.kernel_form, &basis, 2, crate::ccr::MomentMethod::Wick, Default::default()).unwrap();
        assert!((m2 - exact).abs() < 0.05 * exact, "{m2} vs {exact}");
        assert_eq!(xs, s.sample(200_000, 7).unwrap());
    }

    #[test]
    fn invalid_specs() {
        let mut spec = TestSpec::new(rho(), 1.5, 4);
        assert!(run_test(&spec, None).is_err());
        spec.alpha = 0.05;
        spec.interval = Some((1.0, 0.0));
        assert!(run_test(&spec, None).is_err());
    }
}
