//! Small statistical helpers for the verification suites.

use statrs::function::gamma::gamma_lr;

pub use super::report::mean_se;

/// `P(chi^2_k <= x)`.
pub fn chi_square_cdf(x: f64, k: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(k / 2.0, x / 2.0)
    }
}

/// Kolmogorov survival function `Q(t) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 t^2)`.
pub fn kolmogorov_q(t: f64) -> f64 {
    if t < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * t * t).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value of a KS statistic `d` with effective sample size
/// `n`, using the `sqrt(n) + 0.12 + 0.11 / sqrt(n)` correction.
pub fn ks_pvalue(d: f64, n: f64) -> f64 {
    let sn = n.sqrt();
    kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)
}

/// One-sample KS statistic and p-value against `cdf`.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    (d, ks_pvalue(d, n))
}

/// Two-sample KS statistic and p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len(), xb.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = xa[i].min(xb[j]);
        while i < na && xa[i] <= x {
            i += 1;
        }
        while j < nb && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    (d, ks_pvalue(d, ne))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `int_a^b f` by `n`-point Gauss-Legendre.
pub fn integrate(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    rule: &(Vec<f64>, Vec<f64>),
) -> f64 {
    let (h, c) = ((b - a) / 2.0, (a + b) / 2.0);
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(x, w)| w * f(c + h * x))
        .sum::<f64>()
        * h
}

/// Empirical quantile by linear interpolation of the sorted sample.
pub fn quantile(samples: &[f64], q: f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    if xs.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (xs.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    xs[lo] + (xs[hi] - xs[lo]) * (pos - lo as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_cdf_values() {
        // chi^2_2 is exponential with mean 2
        assert!((chi_square_cdf(2.0, 2.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
        assert_eq!(chi_square_cdf(-1.0, 3.0), 0.0);
    }

    #[test]
    fn kolmogorov_known_points() {
        assert!((kolmogorov_q(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_q(1.628) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let rule = gauss_legendre(8);
        assert!((rule.1.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let v = integrate(|x| x.powi(14) + 3.0 * x.powi(3), 0.0, 1.0, &rule);
        assert!((v - (1.0 / 15.0 + 0.75)).abs() < 1e-14);
        let one = gauss_legendre(1);
        assert_eq!(one.0, vec![0.0]);
        assert!((one.1[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn ks_uniform_sample() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let (d, p) = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0));
        assert!(d <= 0.0005 + 1e-12);
        assert!(p > 0.99);
        let (d2, p2) = ks_two_sample(&xs, &xs);
        assert_eq!(d2, 0.0);
        assert!(p2 > 0.99);
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5), 2.0);
        assert_eq!(quantile(&[0.0, 1.0], 0.25), 0.25);
    }
}
