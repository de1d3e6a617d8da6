//! Test-side oracles, written independently of the library code.
#![allow(dead_code)]

use std::path::PathBuf;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Standard normal CDF by integrating the density from 0.
pub fn normal_cdf_quadrature(z: f64) -> f64 {
    let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    0.5 + z.signum() * simpson(pdf, 0.0, z.abs(), 4000)
}

/// Student-t CDF. With `t = sqrt(ν) tan θ` the density becomes
/// `c_ν cos^(ν-1) θ` on `(-π/2, π/2)`, which is smooth for `ν >= 1`; the
/// normalising constant is obtained by integrating over the full range.
pub fn t_cdf_quadrature(t: f64, nu: f64) -> f64 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let g = |th: f64| th.cos().powf(nu - 1.0);
    let total = simpson(g, -half_pi, half_pi, 20_000);
    let theta = (t / nu.sqrt()).atan();
    simpson(g, -half_pi, theta, 20_000) / total
}

/// All `k`-subsets of `0..n` as index vectors.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Ranks by counting: rank(x) = #{y < x} + (#{y == x} + 1) / 2.
pub fn naive_midranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|x| {
            let less = v.iter().filter(|y| *y < x).count() as f64;
            let eq = v.iter().filter(|y| *y == x).count() as f64;
            less + (eq + 1.0) / 2.0
        })
        .collect()
}

/// Exact two-sided rank-sum p-value by listing every split of the pooled ranks.
pub fn wmw_exact_by_enumeration(x1: &[f64], x2: &[f64]) -> f64 {
    let pooled: Vec<f64> = x1.iter().chain(x2).copied().collect();
    let ranks = naive_midranks(&pooled);
    let (n, k) = (pooled.len(), x1.len());
    let centre = k as f64 * (n as f64 + 1.0) / 2.0;
    let observed: f64 = ranks[..k].iter().sum();
    let dev = (observed - centre).abs();
    let splits = subsets(n, k);
    let extreme = splits
        .iter()
        .filter(|s| (s.iter().map(|&i| ranks[i]).sum::<f64>() - centre).abs() >= dev - 1e-9)
        .count();
    extreme as f64 / splits.len() as f64
}

/// Exact permutation p-value of |mean difference| over all splits.
pub fn permutation_exact(x1: &[f64], x2: &[f64]) -> f64 {
    let pooled: Vec<f64> = x1.iter().chain(x2).copied().collect();
    let (n, k) = (pooled.len(), x1.len());
    let stat = |idx: &[usize]| {
        let a: f64 = idx.iter().map(|&i| pooled[i]).sum();
        let total: f64 = pooled.iter().sum();
        (a / k as f64 - (total - a) / (n - k) as f64).abs()
    };
    let s0 = stat(&(0..k).collect::<Vec<_>>());
    let splits = subsets(n, k);
    let hits = splits.iter().filter(|s| stat(s) >= s0 * (1.0 - 1e-10)).count();
    hits as f64 / splits.len() as f64
}

pub struct WelchCase {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

/// Frozen reference results from an external statistics package.
pub fn welch_reference() -> Vec<WelchCase> {
    let text = std::fs::read_to_string(fixture("welch_reference.txt")).unwrap();
    let nums = |s: &str| s.split(',').map(|v| v.trim().parse::<f64>().unwrap()).collect::<Vec<_>>();
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(';').collect();
            WelchCase {
                x1: nums(f[0]),
                x2: nums(f[1]),
                t: f[2].trim().parse().unwrap(),
                df: f[3].trim().parse().unwrap(),
                p: f[4].trim().parse().unwrap(),
            }
        })
        .collect()
}
