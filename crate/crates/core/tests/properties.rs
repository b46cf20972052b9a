use std::collections::BTreeMap;

use matnorm::cli::io::{table_from_csv, table_to_csv};
use matnorm::densities::{
    latent_roots_logpdf, matnorm_logpdf, sample_cov_logpdf, CovDensityParams, LatentRootsVariant,
};
use matnorm::hypergeom::{
    phyq_one, phyq_two, phyq_two_eigen, zero_f_zero_two_shifted, HypergeomSpec,
};
use matnorm::matvar::{sample_haar_orthogonal, MatNormSpec, RandomSource};
use matnorm::partitions::{dim_sym_rep, ln_mv_gamma, partitions_of, pochhammer_partition};
use matnorm::verify::stats::ks_two_sample;
use matnorm::verify::{ReportFile, VerificationReport};
use matnorm::zonal::{build_zonal_table, zonal_eval, zonal_unit, ZonalArg};
use matnorm::Partition;
use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

fn random_symmetric(m: usize, scale: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(m, m, |_, _| rng.random_range(-scale..scale));
    (&g + g.transpose()) * 0.5
}

fn random_pd(m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
    &g * g.transpose() + DMatrix::identity(m, m) * 0.2
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::from(1), |acc, i| acc * BigInt::from(i))
}

/// `n!` over the product of hook lengths.
fn hook_dim(lambda: &Partition) -> BigInt {
    let parts = lambda.parts();
    let mut hooks = BigInt::from(1);
    for (i, &row) in parts.iter().enumerate() {
        for j in 0..row {
            let arm = row - j - 1;
            let leg = parts[i + 1..].iter().filter(|&&p| p > j).count();
            hooks *= BigInt::from(arm + leg + 1);
        }
    }
    factorial(lambda.weight()) / hooks
}

/// Number of distinct monomials of pattern `lambda` in `m` variables.
fn monomial_count(lambda: &Partition, m: usize) -> BigInt {
    if lambda.len() > m {
        return BigInt::from(0);
    }
    let mut mult = BTreeMap::new();
    for &p in lambda.parts() {
        *mult.entry(p).or_insert(0usize) += 1;
    }
    factorial(m)
        / mult
            .values()
            .fold(factorial(m - lambda.len()), |acc, &c| acc * factorial(c))
}

/// Partition numbers p(0..=20).
const PARTITION_NUMBERS: [usize; 21] = [
    1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77, 101, 135, 176, 231, 297, 385, 490, 627,
];

#[test]
fn partitions_are_strictly_decreasing_and_counted() {
    for (k, &count) in PARTITION_NUMBERS.iter().enumerate().skip(1) {
        let ps = partitions_of(k, k);
        assert_eq!(ps.len(), count, "k = {k}");
        for w in ps.windows(2) {
            // the first differing part is larger in the earlier partition
            let (a, b) = (w[0].parts(), w[1].parts());
            let l = (0..a.len().min(b.len()))
                .find(|&i| a[i] != b[i])
                .expect("distinct partitions differ");
            assert!(a[l] > b[l], "{} !> {}", w[0], w[1]);
        }
    }
}

#[test]
fn doubled_dimensions_match_hook_lengths() {
    // every partition of 2k, squared dimensions sum to (2k)!
    for k in 1..=4 {
        let total: BigInt = partitions_of(2 * k, 2 * k)
            .iter()
            .map(|l| hook_dim(l) * hook_dim(l))
            .sum();
        assert_eq!(total, factorial(2 * k));
        for kappa in partitions_of(k, k) {
            assert_eq!(
                BigInt::from(dim_sym_rep(&kappa)),
                hook_dim(&kappa.doubled())
            );
        }
    }
}

#[test]
fn zonal_sum_rule_to_degree_ten() {
    for k in 1..=10 {
        let t = build_zonal_table(k, k).unwrap();
        for lambda in partitions_of(k, k) {
            let sum: BigRational = t
                .rows()
                .iter()
                .map(|r| t.coefficient(&r.kappa, &lambda))
                .sum();
            let denom = lambda
                .parts()
                .iter()
                .fold(BigInt::from(1), |acc, &p| acc * factorial(p));
            assert_eq!(
                sum,
                BigRational::new(factorial(k), denom),
                "k = {k}, lambda = {lambda}"
            );
        }
    }
}

#[test]
fn table_at_ones_reproduces_zonal_unit() {
    for k in 1..=6 {
        for m in 1..=5 {
            let t = build_zonal_table(k, m).unwrap();
            for row in t.rows() {
                let at_ones: BigRational = row
                    .coeffs
                    .iter()
                    .map(|(lam, c)| c * BigRational::from_integer(monomial_count(lam, m)))
                    .sum();
                assert_eq!(
                    at_ones,
                    zonal_unit(&row.kappa, m).value,
                    "k = {k}, m = {m}, kappa = {}",
                    row.kappa
                );
            }
        }
    }
}

#[test]
fn haar_trace_is_invariant_under_rotation() {
    let mut rng = RandomSource::new(3, 0);
    let q = sample_haar_orthogonal(3, &mut RandomSource::new(99, 1));
    let (mut plain, mut rotated) = (Vec::new(), Vec::new());
    for _ in 0..10_000 {
        plain.push(sample_haar_orthogonal(3, &mut rng).trace());
        rotated.push((&q * sample_haar_orthogonal(3, &mut rng)).trace());
    }
    let (_, p) = ks_two_sample(&plain, &rotated);
    assert!(p > 0.01, "KS p = {p}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn empty_pochhammer_is_one(a in -50.0f64..50.0) {
        prop_assert_eq!(pochhammer_partition(a, &Partition::empty()), 1.0);
    }

    #[test]
    fn multivariate_gamma_low_dimensions(t in 0.6f64..30.0) {
        let g1 = ln_mv_gamma(1, t, &Partition::empty()).unwrap();
        prop_assert!((g1 - ln_gamma(t)).abs() <= 1e-12 * (1.0 + g1.abs()));
        let g2 = ln_mv_gamma(2, t, &Partition::empty()).unwrap();
        let want = 0.5 * std::f64::consts::PI.ln() + ln_gamma(t) + ln_gamma(t - 0.5);
        prop_assert!((g2 - want).abs() <= 1e-12 * (1.0 + want.abs()));
    }

    #[test]
    fn zonal_orthogonal_invariance(seed in any::<u64>(), m in 1usize..=4, k in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_symmetric(m, 1.0, &mut rng);
        let h = sample_haar_orthogonal(m, &mut RandomSource::new(seed, 7));
        let rotated = &h * &x * h.transpose();
        let t = build_zonal_table(k, m).unwrap();
        for row in t.rows() {
            let c = zonal_eval(&t, &row.kappa, ZonalArg::Matrix(&x)).unwrap();
            let cr = zonal_eval(&t, &row.kappa, ZonalArg::Matrix(&rotated)).unwrap();
            prop_assert!((c - cr).abs() <= 1e-9 * (1.0 + c.abs()), "kappa {}: {} vs {}", row.kappa, c, cr);
        }
    }

    #[test]
    fn zonal_homogeneity(seed in any::<u64>(), m in 1usize..=4, k in 1usize..=5, c in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..2.0)).collect();
        let scaled: Vec<f64> = y.iter().map(|v| c * v).collect();
        let t = build_zonal_table(k, m).unwrap();
        for row in t.rows() {
            let base = t.eval_eigenvalues(&row.kappa, &y).unwrap();
            let s = t.eval_eigenvalues(&row.kappa, &scaled).unwrap();
            let want = c.powi(k as i32) * base;
            prop_assert!((s - want).abs() <= 1e-12 * want.abs());
        }
    }

    #[test]
    fn zonal_vanishes_above_rank(seed in any::<u64>(), k in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = 4;
        let rank = rng.random_range(1..k.min(m));
        let mut d = vec![0.0; m];
        for v in d.iter_mut().take(rank) {
            *v = rng.random_range(0.2..2.0);
        }
        let x = DMatrix::from_diagonal(&DVector::from_vec(d));
        let t = build_zonal_table(k, m).unwrap();
        for row in t.rows().iter().filter(|r| r.kappa.len() > rank) {
            prop_assert_eq!(zonal_eval(&t, &row.kappa, ZonalArg::Matrix(&x)).unwrap(), 0.0);
        }
    }

    #[test]
    fn table_csv_round_trip(k in 1usize..=6, m in 1usize..=4) {
        let t = build_zonal_table(k, m).unwrap();
        let csv = table_to_csv(&t);
        let back = table_from_csv(&csv, m).unwrap();
        prop_assert_eq!(table_to_csv(&back), csv);
        for (r1, r2) in t.rows().iter().zip(back.rows()) {
            prop_assert_eq!(&r1.coeffs, &r2.coeffs);
        }
    }

    #[test]
    fn series_tail_is_small_inside_unit_ball(seed in any::<u64>(), m in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = random_symmetric(m, 1.0, &mut rng);
        let rho = x.symmetric_eigenvalues().amax();
        if rho > 1.0 {
            x /= rho;
        }
        for spec in [
            HypergeomSpec::new(vec![], vec![], 30),
            HypergeomSpec::new(vec![0.7], vec![2.3], 30),
            HypergeomSpec::new(vec![1.5, 0.5], vec![2.5, 3.0], 30),
        ] {
            let r = phyq_one(&spec, &x, m).unwrap();
            prop_assert!(r.last_layer <= 1e-10 * r.value.abs(), "tail {} value {}", r.last_layer, r.value);
        }
    }

    #[test]
    fn two_argument_series_identities(seed in any::<u64>(), m in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_symmetric(m, 0.4, &mut rng);
        let y = random_symmetric(m, 0.4, &mut rng);
        let spec = HypergeomSpec::new(vec![0.8], vec![1.7], 20);
        let xy = phyq_two(&spec, &x, &y, m).unwrap().value;
        let yx = phyq_two(&spec, &y, &x, m).unwrap().value;
        prop_assert!((xy - yx).abs() <= 1e-12 * (1.0 + xy.abs()));
        let one = phyq_one(&spec, &x, m).unwrap().value;
        let with_identity = phyq_two(&spec, &x, &DMatrix::identity(m, m), m).unwrap().value;
        prop_assert!((one - with_identity).abs() <= 1e-12 * (1.0 + one.abs()));
    }

    #[test]
    fn shifted_zero_f_zero_agrees_with_plain(seed in any::<u64>(), m in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(-0.6..0.6)).collect();
        let y: Vec<f64> = (0..m).map(|_| rng.random_range(-0.6..0.6)).collect();
        let plain = phyq_two_eigen(&HypergeomSpec::new(vec![], vec![], 30), &x, &y, m).unwrap().value;
        let shifted = zero_f_zero_two_shifted(&x, &y, m, 30).unwrap().ln_value();
        prop_assert!((shifted - plain.ln()).abs() <= 1e-10);
    }

    #[test]
    fn t3_density_matches_precision_form(seed in any::<u64>(), m in 1usize..=3, n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_pd(m, &mut rng), random_pd(n, &mut rng));
        let x = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let t3 = matnorm_logpdf(&MatNormSpec::T3 { a: a.clone(), b: b.clone() }, &x).unwrap();
        let t2 = matnorm_logpdf(
            &MatNormSpec::T2 { a: vec![a.clone()], b: vec![b.clone()], alpha: DMatrix::from_element(1, 1, 1.0) },
            &x,
        )
        .unwrap();
        prop_assert!((t3 - t2).abs() <= 1e-9 * (1.0 + t3.abs()));
    }

    #[test]
    fn sample_cov_density_split_invariance(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_pd(2, &mut rng);
        let a = random_pd(2, &mut rng);
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, rng.random_range(0.5..1.5)]));
        let values: Vec<f64> = [1.0, 2.0, 4.0]
            .iter()
            .map(|&split| sample_cov_logpdf(&s, &CovDensityParams::new(a.clone(), b.clone(), split, 40)).unwrap().log_value)
            .collect();
        for v in &values[1..] {
            prop_assert!((v - values[0]).abs() <= 1e-6 * (1.0 + values[0].abs()), "{:?}", values);
        }
    }

    #[test]
    fn latent_roots_scalar_scale_closed_form(seed in any::<u64>(), sigma2 in 0.3f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, n) = (2usize, 5usize);
        let mut l: [f64; 2] = [rng.random_range(0.1..8.0), rng.random_range(0.1..8.0)];
        l.sort_by(|a, b| b.total_cmp(a));
        prop_assume!(l[0] - l[1] > 1e-3);
        let got = latent_roots_logpdf(&l, &(DMatrix::identity(m, m) * sigma2), &DMatrix::identity(n, n), 30, LatentRootsVariant::WishartReduced)
            .unwrap()
            .log_value;
        // pi^{m^2/2} / (2^{mn/2} sigma^{mn} Gamma_m(n/2) Gamma_m(m/2)) prod l^((n-m-1)/2) etr(-L / (2 sigma^2)) (l1 - l2)
        let ln_g2 = |t: f64| 0.5 * std::f64::consts::PI.ln() + ln_gamma(t) + ln_gamma(t - 0.5);
        let (mf, nf) = (m as f64, n as f64);
        let want = mf * mf / 2.0 * std::f64::consts::PI.ln()
            - mf * nf / 2.0 * 2f64.ln()
            - mf * nf / 2.0 * sigma2.ln()
            - ln_g2(nf / 2.0)
            - ln_g2(mf / 2.0)
            + (nf - mf - 1.0) / 2.0 * (l[0].ln() + l[1].ln())
            - (l[0] + l[1]) / (2.0 * sigma2)
            + (l[0] - l[1]).ln();
        prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()), "{} vs {}", got, want);
    }

    #[test]
    fn report_json_round_trip(xs in proptest::collection::vec(-1e3f64..1e3, 0..20), target in -1e3f64..1e3, seed in any::<u64>()) {
        let r = VerificationReport::from_samples("prop.case", &xs, target, seed, 3, "mean");
        if xs.len() >= 2 {
            prop_assert!(r.std_error.is_finite() && r.std_error > 0.0);
        }
        let file = ReportFile::new("prop", seed, vec![r]);
        let text = file.to_json_lines();
        let back = ReportFile::from_json_lines(&text).unwrap();
        prop_assert_eq!(back.to_json_lines(), text);
        let b = &back.reports[0];
        if b.z_score.is_finite() {
            prop_assert_eq!(b.z_score, (b.estimate - b.target) / b.std_error);
        }
    }
}
