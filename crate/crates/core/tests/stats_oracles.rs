mod common;

use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use slidedx::stats::distributions::{normal_cdf, t_cdf, t_quantile};
use slidedx::stats::{permutation_test, welch_test, wmw_exact_p_value, wmw_statistics, wmw_test};

#[test]
fn normal_cdf_matches_quadrature_grid() {
    for i in 0..100 {
        let z = -6.0 + 12.0 * i as f64 / 99.0;
        assert_abs_diff_eq!(normal_cdf(z), normal_cdf_quadrature(z), epsilon = 1e-6);
    }
}

#[test]
fn t_cdf_matches_quadrature_grid() {
    let dfs = [1.0, 2.5, 4.0, 7.3, 15.0, 40.0];
    for i in 0..100 {
        let t = -8.0 + 16.0 * i as f64 / 99.0;
        let nu = dfs[i % dfs.len()];
        assert_abs_diff_eq!(t_cdf(t, nu), t_cdf_quadrature(t, nu), epsilon = 1e-6);
    }
}

#[test]
fn t_quantile_table_value() {
    assert_abs_diff_eq!(t_quantile(0.975, 10.0), 2.2281, epsilon = 1e-3);
}

#[test]
fn welch_matches_reference_package() {
    let cases = welch_reference();
    assert!(cases.len() >= 100);
    for c in &cases {
        let o = welch_test(&c.x1, &c.x2, 0.05).unwrap();
        assert_abs_diff_eq!(o.statistic, c.t, epsilon = 1e-9);
        assert_abs_diff_eq!(o.df.unwrap(), c.df, epsilon = 1e-9);
        assert_abs_diff_eq!(o.p_value, c.p, epsilon = 1e-9);
        assert_eq!(o.reject, c.p < 0.05);
    }
}

#[test]
fn wmw_exact_matches_enumeration_4_by_4() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for case in 0..60 {
        // coarse values force ties in about half the cases
        let levels = if case % 2 == 0 { 5.0 } else { 1000.0 };
        let mut draw = || (rng.random::<f64>() * levels).floor() / levels;
        let x1: Vec<f64> = (0..4).map(|_| draw()).collect();
        let x2: Vec<f64> = (0..4).map(|_| draw()).collect();
        let want = wmw_exact_by_enumeration(&x1, &x2);
        assert_abs_diff_eq!(wmw_exact_p_value(&x1, &x2).unwrap(), want, epsilon = 1e-12);
    }
}

#[test]
fn wmw_exact_matches_enumeration_unbalanced() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for (n1, n2) in [(2, 7), (3, 5), (5, 6), (6, 4)] {
        let x1: Vec<f64> = (0..n1).map(|_| (rng.random::<f64>() * 6.0).floor()).collect();
        let x2: Vec<f64> = (0..n2).map(|_| (rng.random::<f64>() * 6.0).floor()).collect();
        assert_abs_diff_eq!(
            wmw_exact_p_value(&x1, &x2).unwrap(),
            wmw_exact_by_enumeration(&x1, &x2),
            epsilon = 1e-12
        );
    }
}

#[test]
fn wmw_u_from_pair_counts() {
    // U1 as defined counts pairs (a in X1, b in X2) with a > b, ties counted 1/2
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..50 {
        let x1: Vec<f64> = (0..rng.random_range(2..12)).map(|_| (rng.random::<f64>() * 8.0).floor()).collect();
        let x2: Vec<f64> = (0..rng.random_range(2..12)).map(|_| (rng.random::<f64>() * 8.0).floor()).collect();
        let mut pairs = 0.0;
        for a in &x1 {
            for b in &x2 {
                pairs += if a < b { 1.0 } else if a == b { 0.5 } else { 0.0 };
            }
        }
        let st = wmw_statistics(&x1, &x2);
        assert_abs_diff_eq!(st.u1, pairs, epsilon = 1e-9);
    }
}

#[test]
fn wmw_normal_approximation_reference() {
    // SciPy mannwhitneyu(method="asymptotic", use_continuity=False)
    let o = wmw_test(&[0.1, 0.4, 0.35, 0.8], &[0.2, 0.9, 0.7, 0.65], 0.05).unwrap();
    assert_abs_diff_eq!(o.p_value, 0.3864762307712327, epsilon = 1e-12);
}

#[test]
fn permutation_within_three_standard_errors_of_exact() {
    let m = 9999;
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for case in 0..40u64 {
        let n1 = rng.random_range(2..=5);
        let n2 = rng.random_range(2..=(10 - n1));
        let shift = rng.random::<f64>() * 0.6;
        let x1: Vec<f64> = (0..n1).map(|_| rng.random::<f64>()).collect();
        let x2: Vec<f64> = (0..n2).map(|_| rng.random::<f64>() + shift).collect();
        let exact = permutation_exact(&x1, &x2);
        let got = permutation_test(&x1, &x2, 0.05, m, case).unwrap().p_value;
        let expected = (1.0 + m as f64 * exact) / (m as f64 + 1.0);
        let se = (exact * (1.0 - exact) / m as f64).sqrt() * m as f64 / (m as f64 + 1.0);
        assert!(
            (got - expected).abs() <= 3.0 * se + 1e-12,
            "case {case}: n = ({n1}, {n2}), exact {exact}, mc {got}, se {se}"
        );
    }
}

#[test]
fn permutation_null_p_values_not_anticonservative() {
    // Under H0, P(p <= α) <= α. With 1000 simulations, the count of p <= 0.05
    // must stay below the one-sided 99.9% binomial bound for rate 0.05 (about 74).
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let mut small = 0;
    for sim in 0..1000u64 {
        let x1: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
        let x2: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
        if permutation_test(&x1, &x2, 0.05, 199, sim).unwrap().p_value <= 0.05 {
            small += 1;
        }
    }
    let bound = 1000.0 * 0.05 + 3.09 * (1000.0f64 * 0.05 * 0.95).sqrt();
    assert!((small as f64) <= bound, "{small} null p-values <= 0.05");
}
