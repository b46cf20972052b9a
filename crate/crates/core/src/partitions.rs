//! Integer partitions and the partition-indexed special functions built on
//! them: symmetric-group dimensions, generalized Pochhammer symbols and the
//! generalized multivariate gamma function.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// A non-increasing sequence of positive integers.
///
/// Ordering is the lexicographic order on the parts, which for two
/// partitions of the same weight agrees with comparing the zero-padded
/// vectors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Partition(Vec<usize>);

impl Partition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "partition parts must be positive: {parts:?}"
            )));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(format!(
                "partition parts must be non-increasing: {parts:?}"
            )));
        }
        Ok(Partition(parts))
    }

    /// Builds a partition from arbitrary non-negative parts: zeros are
    /// dropped and the rest sorted descending.
    pub fn from_unsorted(mut parts: Vec<usize>) -> Self {
        parts.retain(|&p| p > 0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Partition(parts)
    }

    pub fn empty() -> Self {
        Partition(Vec::new())
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn weight(&self) -> usize {
        self.0.iter().sum()
    }

    /// Number of non-zero parts.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Part `i` (zero-based), zero beyond the length.
    pub fn part(&self, i: usize) -> usize {
        self.0.get(i).copied().unwrap_or(0)
    }

    /// The partition with every part doubled.
    pub fn doubled(&self) -> Partition {
        Partition(self.0.iter().map(|p| 2 * p).collect())
    }

    /// `(1, 1, ..., 1)` with `k` ones.
    pub fn column(k: usize) -> Partition {
        Partition(vec![1; k])
    }

    /// Multiplicities of each distinct part value.
    pub fn multiplicities(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.0.len() {
            let mut j = i;
            while j < self.0.len() && self.0[j] == self.0[i] {
                j += 1;
            }
            out.push(j - i);
            i = j;
        }
        out
    }
}

impl fmt::Display for Partition {
    /// Dash-joined parts, `()` for the empty partition.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "()");
        }
        let s: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        write!(f, "{}", s.join("-"))
    }
}

impl FromStr for Partition {
    type Err = Error;

    /// Accepts `2-1`, `2,1`, `(2,1)` and `()`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches('(').trim_end_matches(')');
        if t.trim().is_empty() {
            return Ok(Partition::empty());
        }
        let parts = t
            .split(['-', ','])
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad partition '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Partition::new(parts)
    }
}

/// All partitions of `k` with at most `max_parts` parts, in descending
/// lexicographic order. `k = 0` yields the single empty partition.
pub fn partitions_of(k: usize, max_parts: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fill(k, k, max_parts, &mut current, &mut out);
    out
}

fn fill(rest: usize, cap: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
    if rest == 0 {
        out.push(Partition(cur.clone()));
        return;
    }
    if slots == 0 {
        return;
    }
    // the remaining slots must be able to absorb `rest` with parts <= first
    let lo = rest.div_ceil(slots);
    for first in (lo..=cap.min(rest)).rev() {
        cur.push(first);
        fill(rest - first, first, slots - 1, cur, out);
        cur.pop();
    }
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// Dimension of the irreducible representation of the symmetric group on
/// `2k` symbols indexed by `2 kappa`, computed exactly from
/// `(2k)! prod_{i<j}(l_i - l_j) / prod_i l_i!` with `l_i = 2 k_i + r - i`.
pub fn dim_sym_rep(kappa: &Partition) -> BigUint {
    let r = kappa.len();
    let k = kappa.weight();
    let l: Vec<usize> = (0..r).map(|i| 2 * kappa.parts()[i] + r - (i + 1)).collect();
    let mut num = factorial(2 * k);
    for i in 0..r {
        for j in (i + 1)..r {
            num *= BigUint::from(l[i] - l[j]);
        }
    }
    let den = l
        .iter()
        .fold(BigUint::one(), |acc, &li| acc * factorial(li));
    debug_assert!((&num % &den).is_zero());
    num / den
}

/// Generalized rising factorial `(a)^kappa = prod_i (a - (i-1)/2)_{k_i}`.
pub fn pochhammer_partition(a: f64, kappa: &Partition) -> f64 {
    let mut acc = 1.0;
    for (i, &ki) in kappa.parts().iter().enumerate() {
        let base = a - i as f64 / 2.0;
        for s in 0..ki {
            acc *= base + s as f64;
        }
    }
    acc
}

/// `(ln |(a)^kappa|, sign)`. A zero factor gives `(-inf, 0.0)`.
pub fn ln_pochhammer_partition(a: f64, kappa: &Partition) -> (f64, f64) {
    let mut ln = 0.0;
    let mut sign = 1.0;
    for (i, &ki) in kappa.parts().iter().enumerate() {
        let base = a - i as f64 / 2.0;
        for s in 0..ki {
            let f = base + s as f64;
            if f == 0.0 {
                return (f64::NEG_INFINITY, 0.0);
            }
            if f < 0.0 {
                sign = -sign;
            }
            ln += f.abs().ln();
        }
    }
    (ln, sign)
}

/// Exact generalized rising factorial for a rational base.
pub fn pochhammer_rational(a: &BigRational, kappa: &Partition) -> BigRational {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut acc = BigRational::one();
    for (i, &ki) in kappa.parts().iter().enumerate() {
        let base = a - &half * BigInt::from(i);
        for s in 0..ki {
            acc *= &base + BigRational::from_integer(BigInt::from(s));
        }
    }
    acc
}

fn check_mv_gamma_domain(m: usize, t: f64, kappa: &Partition) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "multivariate gamma needs m >= 1".into(),
        ));
    }
    if kappa.len() > m {
        return Err(Error::InvalidArgument(format!(
            "partition {kappa} has more than m = {m} parts"
        )));
    }
    for i in 0..m {
        let arg = t + kappa.part(i) as f64 - i as f64 / 2.0;
        if !(arg > 0.0) {
            return Err(Error::Domain(format!(
                "multivariate gamma argument t + k_{} - {}/2 = {arg} is not positive",
                i + 1,
                i
            )));
        }
    }
    Ok(())
}

/// `ln Gamma_m(t, kappa) = m(m-1)/4 ln(pi) + sum_i ln Gamma(t + k_i - (i-1)/2)`.
pub fn ln_mv_gamma(m: usize, t: f64, kappa: &Partition) -> Result<f64> {
    check_mv_gamma_domain(m, t, kappa)?;
    let pi_term = (m * (m - 1)) as f64 / 4.0 * std::f64::consts::PI.ln();
    let s: f64 = (0..m)
        .map(|i| ln_gamma(t + kappa.part(i) as f64 - i as f64 / 2.0))
        .sum();
    Ok(pi_term + s)
}

/// Generalized multivariate gamma `Gamma_m(t, kappa)`; the empty partition
/// gives the ordinary multivariate gamma `Gamma_m(t)`.
pub fn mv_gamma(m: usize, t: f64, kappa: &Partition) -> Result<f64> {
    ln_mv_gamma(m, t, kappa).map(f64::exp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p(v: &[usize]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    /// Hook-length formula: n! / prod of hook lengths.
    fn hook_dim(lambda: &Partition) -> BigUint {
        let parts = lambda.parts();
        let n = lambda.weight();
        let mut hooks = BigUint::one();
        for (i, &row) in parts.iter().enumerate() {
            for j in 0..row {
                let arm = row - j - 1;
                let leg = parts[i + 1..].iter().filter(|&&r| r > j).count();
                hooks *= BigUint::from(arm + leg + 1);
            }
        }
        factorial(n) / hooks
    }

    #[test]
    fn enumerates_small_cases() {
        assert_eq!(partitions_of(3, 2), vec![p(&[3]), p(&[2, 1])]);
        assert_eq!(partitions_of(4, 2), vec![p(&[4]), p(&[3, 1]), p(&[2, 2])]);
        assert_eq!(partitions_of(0, 5), vec![Partition::empty()]);
        assert_eq!(partitions_of(3, 0), Vec::<Partition>::new());
    }

    #[test]
    fn partition_counts_match_table() {
        // p(k) for k = 0..=20
        let table = [
            1usize, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77, 101, 135, 176, 231, 297, 385, 490,
            627,
        ];
        for (k, &expect) in table.iter().enumerate() {
            assert_eq!(partitions_of(k, k.max(1)).len(), expect, "p({k})");
        }
    }

    #[test]
    fn order_is_strictly_descending() {
        for k in 1..=12 {
            for m in 1..=k {
                let ps = partitions_of(k, m);
                for w in ps.windows(2) {
                    assert!(w[0] > w[1]);
                }
                assert!(ps.iter().all(|q| q.len() <= m && q.weight() == k));
            }
        }
    }

    #[test]
    fn dim_sym_rep_examples() {
        assert_eq!(dim_sym_rep(&p(&[1])), BigUint::from(1u32));
        assert_eq!(dim_sym_rep(&p(&[1, 1])), BigUint::from(2u32));
        assert_eq!(dim_sym_rep(&p(&[2, 1])), BigUint::from(9u32));
    }

    #[test]
    fn dim_sym_rep_matches_hook_length() {
        for k in 1..=8 {
            for kappa in partitions_of(k, k) {
                assert_eq!(dim_sym_rep(&kappa), hook_dim(&kappa.doubled()), "{kappa}");
            }
        }
    }

    #[test]
    fn squared_dimensions_sum_to_factorial() {
        for k in 1..=4 {
            let n = 2 * k;
            let total = partitions_of(n, n)
                .iter()
                .fold(BigUint::zero(), |acc, lam| {
                    let d = hook_dim(lam);
                    acc + &d * &d
                });
            assert_eq!(total, factorial(n));
        }
    }

    #[test]
    fn pochhammer_examples() {
        assert_eq!(pochhammer_partition(3.0, &p(&[1])), 3.0);
        assert_eq!(pochhammer_partition(3.0, &p(&[2, 1])), 30.0);
        assert_eq!(pochhammer_partition(0.5, &Partition::empty()), 1.0);
        // lattice zero: (1/2)^(1,1) = (1/2)(0)
        assert_eq!(pochhammer_partition(0.5, &p(&[1, 1])), 0.0);
        let (ln, sign) = ln_pochhammer_partition(3.0, &p(&[2, 1]));
        assert!((ln.exp() * sign - 30.0).abs() < 1e-12);
        let (_, s) = ln_pochhammer_partition(-0.25, &p(&[1]));
        assert_eq!(s, -1.0);
    }

    #[test]
    fn pochhammer_rational_matches_float() {
        let a = BigRational::new(BigInt::from(5), BigInt::from(2));
        let v = pochhammer_rational(&a, &p(&[2]));
        assert_eq!(v, BigRational::new(BigInt::from(35), BigInt::from(4)));
    }

    #[test]
    fn mv_gamma_examples() {
        let g = mv_gamma(1, 2.5, &Partition::empty()).unwrap();
        assert!((g - 1.329_340_388_179_137).abs() < 1e-12);
        let g2 = mv_gamma(2, 2.0, &Partition::empty()).unwrap();
        let want = PI.sqrt() * 1.0 * (PI.sqrt() / 2.0);
        assert!((g2 - want).abs() < 1e-12 * want);
        let g3 = mv_gamma(1, 1.0, &p(&[3])).unwrap();
        assert!((g3 - 6.0).abs() < 1e-11);
    }

    #[test]
    fn mv_gamma_two_dim_recursion() {
        for &t in &[0.75, 1.0, 2.3, 5.5] {
            let lhs = mv_gamma(2, t, &Partition::empty()).unwrap();
            let rhs = PI.sqrt()
                * statrs::function::gamma::gamma(t)
                * statrs::function::gamma::gamma(t - 0.5);
            assert!((lhs - rhs).abs() < 1e-10 * rhs.abs());
        }
    }

    #[test]
    fn mv_gamma_domain_error_names_index() {
        let e = mv_gamma(2, 0.4, &Partition::empty()).unwrap_err();
        match e {
            Error::Domain(msg) => assert!(msg.contains("k_2")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn display_and_parse() {
        assert_eq!(p(&[2, 1, 1]).to_string(), "2-1-1");
        assert_eq!("2-1-1".parse::<Partition>().unwrap(), p(&[2, 1, 1]));
        assert_eq!("(3,1)".parse::<Partition>().unwrap(), p(&[3, 1]));
        assert_eq!("()".parse::<Partition>().unwrap(), Partition::empty());
        assert!("1-2".parse::<Partition>().is_err());
    }

    proptest::proptest! {
        #[test]
        fn empty_pochhammer_is_one(a in -10.0f64..10.0) {
            proptest::prop_assert_eq!(pochhammer_partition(a, &Partition::empty()), 1.0);
        }
    }
}
