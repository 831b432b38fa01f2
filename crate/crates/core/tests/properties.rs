use proptest::prelude::*;

use qustat::apps::{goodness_kernel, homogeneity_kernel, metrology_overlap, run_test, TestSpec};
use qustat::ccr::{build_ccr_basis, hermite_orthogonality_check, hermite_prob_coeffs, FockRep, kernel_to_limit, limit_moment, LimitOptions, MomentMethod};
use qustat::hoeffding::{cond_expectation, hoeffding_project, kernel_components};
use qustat::linalg::{binomial, kron, Budget};
use qustat::operator::{embed, state_covariance, symmetrize, symmetrize_kernel};
use qustat::ustat::assemble_direct;
use qustat::{CMatrix, DensityMatrix, HermitianOperator, Kernel, SiteSubset, C64};

const TOL: f64 = 1e-9;

fn complex_entries(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 2 * d * d)
}

fn raw(d: usize, v: &[f64]) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| C64::new(v[2 * (i * d + j)], v[2 * (i * d + j) + 1]))
}

fn herm(d: usize, v: &[f64]) -> HermitianOperator {
    let a = raw(d, v);
    HermitianOperator::from_arithmetic((&a + a.adjoint()).scale(0.5)).unwrap()
}

/// Full-rank state `(B B† + 0.1)/tr`.
fn state(d: usize, v: &[f64]) -> DensityMatrix {
    let b = raw(d, v);
    let m = &b * b.adjoint() + CMatrix::identity(d, d).scale(0.1);
    let tr = m.trace().re;
    let m = m.unscale(tr);
    DensityMatrix::new((&m + m.adjoint()).scale(0.5)).unwrap()
}

fn gap(rho: &DensityMatrix) -> f64 {
    rho.eigenvalues().windows(2).map(|w| (w[0] - w[1]).abs()).fold(f64::INFINITY, f64::min)
}

fn fro(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn expect_n(rho: &DensityMatrix, n: usize, m: &CMatrix) -> C64 {
    rho.product_state(n).expect(m)
}

/// Permutation operator exchanging sites `s` and `s+1` (0-based).
fn swap_sites(d: usize, n: usize, s: usize) -> CMatrix {
    let dim = d.pow(n as u32);
    let mut p = CMatrix::zeros(dim, dim);
    for a in 0..dim {
        let mut digits: Vec<usize> = (0..n).map(|k| (a / d.pow((n - 1 - k) as u32)) % d).collect();
        digits.swap(s, s + 1);
        let b = digits.iter().fold(0, |acc, &x| acc * d + x);
        p[(b, a)] = C64::new(1.0, 0.0);
    }
    p
}

fn pair_kernel(d: usize, a: &[f64], b: &[f64]) -> Kernel {
    let (a, b) = (herm(d, a), herm(d, b));
    let sym = symmetrize_kernel(&[a.clone(), b.clone()]).unwrap();
    let op = sym.op().add(&a.kron(&a)).unwrap();
    Kernel::new(d, 2, op).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn embed_scales_frobenius_norm(a in complex_entries(2), b in complex_entries(2), n in 2usize..5) {
        let k = pair_kernel(2, &a, &b);
        let scale = 2f64.powf((n as f64 - 2.0) / 2.0);
        for beta in SiteSubset::all_of_size(n, 2) {
            let e = embed(&k, &beta, n).unwrap();
            prop_assert!((e.frobenius() - scale * k.op().frobenius()).abs() < TOL * e.frobenius().max(1.0));
        }
    }

    #[test]
    fn disjoint_embeddings_commute(a in complex_entries(3), b in complex_entries(3), i in 1usize..4, j in 1usize..4) {
        prop_assume!(i != j);
        let ka = Kernel::new(3, 1, herm(3, &a)).unwrap();
        let kb = Kernel::new(3, 1, herm(3, &b)).unwrap();
        let ea = embed(&ka, &SiteSubset::new(3, vec![i]).unwrap(), 3).unwrap();
        let eb = embed(&kb, &SiteSubset::new(3, vec![j]).unwrap(), 3).unwrap();
        let comm = ea.matrix() * eb.matrix() - eb.matrix() * ea.matrix();
        prop_assert!(fro(&comm) < TOL);
    }

    #[test]
    fn symmetric_product_ignores_order(a in complex_entries(2), b in complex_entries(2), c in complex_entries(2)) {
        let (a, b, c) = (herm(2, &a), herm(2, &b), herm(2, &c));
        let x = symmetrize(&[a.clone(), b.clone(), c.clone()]).unwrap();
        let y = symmetrize(&[c, a, b]).unwrap();
        prop_assert!(x.distance(&y) < TOL);
    }

    #[test]
    fn bilinear_form_is_symmetric_and_positive(a in complex_entries(3), b in complex_entries(3), s in complex_entries(3)) {
        let (a, b, rho) = (herm(3, &a), herm(3, &b), state(3, &s));
        let (ab, sab) = state_covariance(&a, &b, &rho).unwrap();
        let (ba, sba) = state_covariance(&b, &a, &rho).unwrap();
        let (aa, saa) = state_covariance(&a, &a, &rho).unwrap();
        prop_assert!((ab - ba).abs() < TOL);
        prop_assert!((sab + sba).abs() < TOL);
        prop_assert!(aa >= -TOL && saa.abs() < TOL);
        // |σ(A,B)|² ≤ (A,A)(B,B).
        let (bb, _) = state_covariance(&b, &b, &rho).unwrap();
        prop_assert!(sab * sab <= aa * bb + TOL);
    }

    #[test]
    fn kernel_mean_is_site_independent(a in complex_entries(2), b in complex_entries(2), s in complex_entries(2)) {
        let (k, rho) = (pair_kernel(2, &a, &b), state(2, &s));
        let theta = k.mean(&rho).unwrap();
        for beta in SiteSubset::all_of_size(4, 2) {
            let e = embed(&k, &beta, 4).unwrap();
            prop_assert!((expect_n(&rho, 4, e.matrix()).re - theta).abs() < TOL);
        }
    }

    #[test]
    fn hoeffding_projection_is_idempotent(h in prop::collection::vec(-1.0f64..1.0, 2 * 64 * 64), s in complex_entries(2)) {
        let (h, rho) = (herm(8, &h), state(2, &s));
        for a in SiteSubset::full(3).subsets() {
            let p = hoeffding_project(&h, &a, &rho).unwrap();
            let pp = hoeffding_project(&p, &a, &rho).unwrap();
            prop_assert!(p.distance(&pp) < TOL * h.frobenius());
        }
    }

    #[test]
    fn conditional_expectation_keeps_diagonal_operators_diagonal(h in prop::collection::vec(-1.0f64..1.0, 8), l in 0.05f64..0.95) {
        let h = HermitianOperator::diagonal(&h);
        let rho = DensityMatrix::diagonal(&[l, 1.0 - l]).unwrap();
        for a in SiteSubset::full(3).subsets() {
            let e = cond_expectation(&h, &a, &rho).unwrap();
            let m = e.matrix();
            let off: f64 = (0..8).flat_map(|i| (0..8).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| m[(i, j)].norm()).sum();
            prop_assert!(off < TOL);
        }
    }

    #[test]
    fn ustat_splits_into_orthogonal_components(a in complex_entries(2), b in complex_entries(2), s in complex_entries(2), n in 3usize..6) {
        let (k, rho) = (pair_kernel(2, &a, &b), state(2, &s));
        let report = kernel_components(&k, &rho, None).unwrap();
        let u = assemble_direct(&k, n, Budget::default()).unwrap();
        let dim = u.op().dim();
        let parts: Vec<CMatrix> = (1..=2)
            .map(|l| assemble_direct(&report.component(l).kernel, n, Budget::default()).unwrap().op().matrix().scale(binomial(2, l)))
            .collect();
        let sum = CMatrix::identity(dim, dim).scale(report.theta) + &parts[0] + &parts[1];
        prop_assert!(fro(&(u.op().matrix() - sum)) < TOL * u.op().frobenius().max(1.0));
        let cross = expect_n(&rho, n, &(&parts[0] * &parts[1]));
        prop_assert!(cross.norm() < TOL * k.op().frobenius().powi(2).max(1.0));
    }

    #[test]
    fn ustat_commutes_with_adjacent_transpositions(a in complex_entries(2), b in complex_entries(2), n in 2usize..6) {
        let k = pair_kernel(2, &a, &b);
        let u = assemble_direct(&k, n, Budget::default()).unwrap();
        for s in 0..n - 1 {
            let p = swap_sites(2, n, s);
            let conj = &p * u.op().matrix() * p.transpose();
            prop_assert!(fro(&(conj - u.op().matrix())) < TOL * u.op().frobenius());
        }
    }

    #[test]
    fn degenerate_limit_second_moment(a in complex_entries(2), b in complex_entries(2), s in complex_entries(2)) {
        let rho = state(2, &s);
        prop_assume!(gap(&rho) > 0.05);
        let k = pair_kernel(2, &a, &b);
        let k2 = kernel_components(&k, &rho, None).unwrap().component(2).kernel.clone();
        let report = kernel_components(&k2, &rho, None).unwrap();
        prop_assume!(report.c == Some(2));
        let basis = build_ccr_basis(&rho).unwrap();
        let u = kernel_to_limit(&k2, &report, &basis).unwrap();
        let target = 2.0 * report.component(2).norm_sq;
        let wick = limit_moment(&u, &basis, 2, MomentMethod::Wick, LimitOptions::default()).unwrap();
        prop_assert!((wick - target).abs() < 1e-8 * target.max(1.0));
    }

    #[test]
    fn hermite_operators_are_orthogonal(n in 0u32..4, m in 0u32..4, sigma_sq in 0.6f64..2.0) {
        prop_assume!(n != m);
        let residual = hermite_orthogonality_check(n, m, sigma_sq, 64).unwrap();
        prop_assert!(residual < 1e-7);
    }

    #[test]
    fn completing_a_monomial_gives_the_hermite_product(a in 0usize..4, b in 0usize..4, sigma_sq in 0.6f64..2.0) {
        prop_assume!(a + b >= 1 && a + b <= 4);
        let fock = FockRep::padded(64, 4);
        let w = fock.thermal_weights(sigma_sq).unwrap();
        // Tr(φ X Y) from the diagonal of X Y only.
        let ip = |x: &CMatrix, y: &CMatrix| -> C64 {
            (0..w.len()).filter(|&k| w[k] > 0.0).map(|k| (x.row(k) * y.column(k))[(0, 0)] * w[k]).sum()
        };
        let lower: Vec<CMatrix> = (0..a + b)
            .flat_map(|deg| (0..=deg).map(move |i| (i, deg - i)))
            .map(|(i, j)| fock.symmetric_monomial(i, j, 1.0))
            .collect();
        let target = fock.symmetric_monomial(a, b, 1.0);
        let k = lower.len();
        let gram = CMatrix::from_fn(k, k, |i, j| ip(&lower[i], &lower[j]));
        let rhs = nalgebra::DVector::from_fn(k, |i, _| ip(&lower[i], &target));
        let coef = gram.lu().solve(&rhs).unwrap();
        let mut projected = target.clone();
        for (c, m) in coef.iter().zip(&lower) {
            projected -= m * *c;
        }
        let sigma = sigma_sq.sqrt();
        let hermite = fock
            .symmetric_poly(&hermite_prob_coeffs(a as u32), &hermite_prob_coeffs(b as u32), sigma)
            .scale(sigma.powi((a + b) as i32));
        let diff = &projected - &hermite;
        let norm = ip(&hermite, &hermite).re.sqrt();
        let residual = ip(&diff, &diff).re.max(0.0).sqrt();
        prop_assert!(residual < 1e-7 * norm.max(1.0), "residual {residual:e}");
    }

    #[test]
    fn oscillator_generators_satisfy_ccr_in_mean(s in complex_entries(3)) {
        let rho = state(3, &s);
        prop_assume!(gap(&rho) > 0.05);
        let basis = build_ccr_basis(&rho).unwrap();
        let gens = basis.basis_list();
        let c = basis.two_point(&gens);
        let nc = basis.n_classical();
        for o in 0..basis.n_oscillators() {
            let (q, p) = (nc + 2 * o, nc + 2 * o + 1);
            // Tr(ρ[q,p]) = i.
            prop_assert!((c[(q, p)] - c[(p, q)] - C64::new(0.0, 1.0)).norm() < TOL);
            let sigma_sq = basis.sigma_sq_of(q).unwrap();
            prop_assert!((c[(q, q)].re - sigma_sq).abs() < TOL && (c[(p, p)].re - sigma_sq).abs() < TOL);
        }
        for a in 0..gens.len() {
            prop_assert!(rho.expect(&gens[a]).norm() < TOL);
            for b in 0..gens.len() {
                let (sym, _) = state_covariance(
                    &HermitianOperator::new(gens[a].clone()).unwrap(),
                    &HermitianOperator::new(gens[b].clone()).unwrap(),
                    &rho,
                ).unwrap();
                prop_assert!((c[(a, b)].re - sym).abs() < TOL);
            }
        }
    }

    #[test]
    fn goodness_kernel_is_unbiased(r in complex_entries(3), s in complex_entries(3)) {
        let (rho, sigma) = (state(3, &r), state(3, &s));
        prop_assume!(gap(&rho) > 1e-3);
        let k = goodness_kernel(&rho).unwrap();
        let dist = fro(&(sigma.matrix() - rho.matrix())).powi(2);
        prop_assert!((k.mean(&sigma).unwrap() - dist).abs() < 1e-10);
    }

    #[test]
    fn homogeneity_kernel_is_unbiased(r in complex_entries(2), s in complex_entries(2)) {
        let (s1, s2) = (state(2, &r), state(2, &s));
        let k = homogeneity_kernel(2).unwrap();
        let pair = DensityMatrix::new(kron(s1.matrix(), s2.matrix())).unwrap();
        let dist = fro(&(s1.matrix() - s2.matrix())).powi(2);
        prop_assert!((k.mean(&pair).unwrap() - dist).abs() < 1e-10);
    }

    #[test]
    fn metrology_overlap_is_bounded_and_conjugate_symmetric(t in -2.0f64..2.0, g1 in -1.0f64..1.0, g2 in -1.0f64..1.0) {
        let (x, z) = (HermitianOperator::pauli_x(), HermitianOperator::pauli_z());
        let k = Kernel::new(2, 2, z.kron(&x).add(&x.kron(&z)).unwrap().scale(0.5)).unwrap();
        let h = C64::new(0.5f64.sqrt(), 0.0);
        let plus = DensityMatrix::pure(&[h, h]).unwrap();
        let a = metrology_overlap(&k, &plus, t, g1, g2, 5, Budget::default()).unwrap();
        let b = metrology_overlap(&k, &plus, t, g2, g1, 5, Budget::default()).unwrap();
        prop_assert!(a.overlap().norm() <= 1.0 + 1e-12);
        prop_assert!((a.overlap() - b.overlap().conj()).norm() < 1e-12);
        prop_assert!(a.limit > 0.0 && a.limit <= 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn test_estimates_track_exact_error_rates(l in 0.6f64..0.9, n in 3usize..7, seed in any::<u64>()) {
        let rho = DensityMatrix::diagonal(&[l, 1.0 - l]).unwrap();
        let sigma = DensityMatrix::diagonal(&[0.5, 0.5]).unwrap();
        let mut spec = TestSpec::new(rho, 0.05, n);
        spec.interval = Some((-1.0, 2.0));
        spec.mc_replicates = 4000;
        spec.seed = seed;
        let res = run_test(&spec, Some(&sigma)).unwrap();
        let se = (res.alpha_exact * (1.0 - res.alpha_exact) / 4000.0).sqrt().max(1e-3);
        prop_assert!((res.alpha_hat - res.alpha_exact).abs() < 5.0 * se);
        let (beta_hat, beta_exact) = (res.beta_hat.unwrap(), res.beta_exact.unwrap());
        let se = (beta_exact * (1.0 - beta_exact) / 4000.0).sqrt().max(1e-3);
        prop_assert!((beta_hat - beta_exact).abs() < 5.0 * se);
        prop_assert!((res.theta_true.unwrap() - 2.0 * (l - 0.5).powi(2)).abs() < 1e-12);
    }
}
