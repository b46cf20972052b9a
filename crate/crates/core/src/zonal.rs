//! Zonal polynomials on the monomial symmetric basis.
//!
//! Coefficients are generated by the triangular eigenfunction recurrence of
//! the Laplace-Beltrami operator (eigenvalue `rho_kappa = sum k_i (k_i - i)`),
//! starting from a unit leading coefficient, and every row is then rescaled
//! so that its value at the identity equals
//! `C_kappa(I_m) = 2^k (m/2)^kappa chi_{2 kappa}(1) / (2k-1)!!`.
//! All coefficients are exact rationals; floats only appear at evaluation.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matvar::linalg::sym_eig;
use crate::partitions::{dim_sym_rep, partitions_of, pochhammer_rational, Partition};

/// Upper bound on the number of basis partitions a table may carry.
/// Matches the cost of a full degree-20 table (p(20) = 627).
pub const MAX_BASIS: usize = 700;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    /// `sum_kappa C_kappa = (tr X)^k`.
    C,
    /// Coefficient of `M_(1^k)` pinned to `k!`.
    J,
    /// Leading coefficient `b_{kappa,kappa} = 1`.
    Leading1,
}

/// A value together with a flag saying it vanished structurally (a
/// partition longer than the number of available variables).
#[derive(Debug, Clone, PartialEq)]
pub struct Flagged<T> {
    pub value: T,
    pub vanishing: bool,
}

#[derive(Debug, Clone)]
pub struct ZonalRow {
    pub kappa: Partition,
    /// `(lambda, b_{kappa,lambda})`, lambda descending, zero entries omitted.
    pub coeffs: Vec<(Partition, BigRational)>,
    /// `(basis index, coefficient)` parallel to `coeffs`.
    float_coeffs: Vec<(usize, f64)>,
}

/// Coefficients of all zonal polynomials of one degree.
#[derive(Debug, Clone)]
pub struct ZonalTable {
    degree: usize,
    nvars: usize,
    row_parts: usize,
    normalization: Normalization,
    basis: Vec<Partition>,
    rows: Vec<ZonalRow>,
}

fn rho(p: &Partition) -> i64 {
    p.parts()
        .iter()
        .enumerate()
        .map(|(i, &k)| k as i64 * (k as i64 - (i as i64 + 1)))
        .sum()
}

fn big(n: usize) -> BigInt {
    BigInt::from(n)
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// `M_lambda(1, ..., 1)` with `n` ones: the number of distinct monomials.
pub fn monomial_at_ones(lambda: &Partition, n: usize) -> BigUint {
    let len = lambda.len();
    if len > n {
        return BigUint::zero();
    }
    let mut num = (n - len + 1..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i));
    for mult in lambda.multiplicities() {
        num /= factorial(mult);
    }
    num
}

/// Exact `C_kappa(I_m)`. Partitions longer than `m` give zero, flagged.
pub fn zonal_unit(kappa: &Partition, m: usize) -> Flagged<BigRational> {
    if kappa.len() > m {
        return Flagged {
            value: BigRational::zero(),
            vanishing: true,
        };
    }
    let k = kappa.weight();
    let half_m = BigRational::new(big(m), big(2));
    let poch = pochhammer_rational(&half_m, kappa);
    let chi = BigInt::from(dim_sym_rep(kappa));
    let double_fact = (1..k).fold(BigInt::one(), |acc, i| acc * big(2 * i + 1));
    let two_k = BigInt::one() << k;
    Flagged {
        value: poch * BigRational::new(two_k * chi, double_fact),
        vanishing: false,
    }
}

pub fn zonal_unit_f64(kappa: &Partition, m: usize) -> f64 {
    zonal_unit(kappa, m).value.to_f64().unwrap_or(f64::NAN)
}

/// Sum over distinct monomials with exponent pattern `lambda` in the
/// variables `y`, each monomial counted once.
///
/// A partition longer than `y` gives zero with the vanishing flag set.
pub fn monomial_eval(lambda: &Partition, y: &[f64]) -> Flagged<f64> {
    if lambda.len() > y.len() {
        return Flagged {
            value: 0.0,
            vanishing: true,
        };
    }
    let maxe = lambda.part(0);
    let pows = power_table(y, maxe);
    Flagged {
        value: monomial_with_powers(lambda, &pows),
        vanishing: false,
    }
}

fn power_table(y: &[f64], maxe: usize) -> Vec<Vec<f64>> {
    y.iter()
        .map(|&v| {
            let mut row = Vec::with_capacity(maxe + 1);
            let mut acc = 1.0;
            for _ in 0..=maxe {
                row.push(acc);
                acc *= v;
            }
            row
        })
        .collect()
}

fn monomial_with_powers(lambda: &Partition, pows: &[Vec<f64>]) -> f64 {
    let parts = lambda.parts();
    if parts.len() > pows.len() {
        return 0.0;
    }
    let mut values = Vec::new();
    let mut counts = Vec::new();
    for &p in parts {
        if values.last() == Some(&p) {
            *counts.last_mut().unwrap() += 1;
        } else {
            values.push(p);
            counts.push(1usize);
        }
    }
    assign(0, pows, &values, &mut counts, parts.len())
}

fn assign(
    var: usize,
    pows: &[Vec<f64>],
    values: &[usize],
    counts: &mut [usize],
    remaining: usize,
) -> f64 {
    if remaining == 0 {
        return 1.0;
    }
    if pows.len() - var < remaining {
        return 0.0;
    }
    let mut s = assign(var + 1, pows, values, counts, remaining);
    for d in 0..values.len() {
        if counts[d] > 0 {
            counts[d] -= 1;
            s += pows[var][values[d]] * assign(var + 1, pows, values, counts, remaining - 1);
            counts[d] += 1;
        }
    }
    s
}

/// Builds the normalization-C table of degree `k` for at most `m` variables.
pub fn build_zonal_table(k: usize, m: usize) -> Result<ZonalTable> {
    if k == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!(
            "zonal table needs k >= 1 and m >= 1 (got k = {k}, m = {m})"
        )));
    }
    ZonalTable::build(k, m, m)
}

impl ZonalTable {
    /// Table of degree `k` whose rows are the partitions with at most
    /// `row_parts` parts, expanded on monomials in `nvars` variables.
    /// `k = 0` yields the constant table.
    pub fn build(k: usize, row_parts: usize, nvars: usize) -> Result<ZonalTable> {
        if row_parts > nvars || nvars == 0 {
            return Err(Error::InvalidArgument(format!(
                "row bound {row_parts} must not exceed variable count {nvars}"
            )));
        }
        let basis = partitions_of(k, nvars);
        if basis.len() > MAX_BASIS {
            return Err(Error::InvalidArgument(format!(
                "degree {k} in {nvars} variables needs {} basis partitions (limit {MAX_BASIS})",
                basis.len()
            )));
        }
        let index: HashMap<Partition, usize> = basis
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, p)| (p, i))
            .collect();
        let rhos: Vec<i64> = basis.iter().map(rho).collect();

        let mut rows = Vec::new();
        for (ki, kappa) in basis.iter().enumerate() {
            if kappa.len() > row_parts {
                continue;
            }
            let mut c: Vec<BigRational> = vec![BigRational::zero(); basis.len()];
            c[ki] = BigRational::one();
            for li in ki + 1..basis.len() {
                let lambda = &basis[li];
                let l = lambda.parts();
                let mut acc = BigInt::zero();
                let mut acc_r = BigRational::zero();
                let mut any = false;
                for j in 1..l.len() {
                    for i in 0..j {
                        for t in 1..=l[j] {
                            let mut mu = l.to_vec();
                            mu[i] += t;
                            mu[j] -= t;
                            let mu = Partition::from_unsorted(mu);
                            let Some(&mi) = index.get(&mu) else { continue };
                            if mi < ki || c[mi].is_zero() {
                                continue;
                            }
                            let w = big(l[i] + 2 * t) - big(l[j]);
                            if c[mi].is_integer() {
                                acc += w * c[mi].numer();
                            } else {
                                acc_r += BigRational::from_integer(w) * &c[mi];
                            }
                            any = true;
                        }
                    }
                }
                if !any {
                    continue;
                }
                let total = acc_r + BigRational::from_integer(acc);
                if total.is_zero() {
                    continue;
                }
                let gap = rhos[ki] - rhos[li];
                if gap == 0 {
                    return Err(Error::Internal(format!(
                        "recurrence denominator vanished at kappa = {kappa}, lambda = {lambda}"
                    )));
                }
                c[li] = total / BigRational::from_integer(BigInt::from(gap));
            }

            let at_ones: BigRational = basis
                .iter()
                .zip(&c)
                .filter(|(_, b)| !b.is_zero())
                .map(|(lam, b)| b * BigRational::from_integer(monomial_at_ones(lam, nvars).into()))
                .sum();
            if at_ones.is_zero() {
                return Err(Error::Internal(format!(
                    "zonal row {kappa} vanishes at the identity; cannot rescale"
                )));
            }
            let scale = zonal_unit(kappa, nvars).value / at_ones;
            let coeffs: Vec<(Partition, BigRational)> = basis
                .iter()
                .zip(c)
                .filter(|(_, b)| !b.is_zero())
                .map(|(lam, b)| (lam.clone(), b * &scale))
                .collect();
            rows.push(ZonalRow {
                kappa: kappa.clone(),
                float_coeffs: Vec::new(),
                coeffs,
            });
        }

        let mut table = ZonalTable {
            degree: k,
            nvars,
            row_parts,
            normalization: Normalization::C,
            basis,
            rows,
        };
        table.check_sum_rule()?;
        table.refresh_float_coeffs();
        Ok(table)
    }

    /// Rebuilds a table from explicit rows; used when loading persisted
    /// tables. Rows must be listed with their coefficients.
    pub fn from_rows(
        degree: usize,
        nvars: usize,
        normalization: Normalization,
        rows: Vec<(Partition, Vec<(Partition, BigRational)>)>,
    ) -> Result<ZonalTable> {
        if nvars == 0 {
            return Err(Error::InvalidArgument("nvars must be positive".into()));
        }
        let basis = partitions_of(degree, nvars);
        let mut row_parts = 0;
        let mut out = Vec::new();
        for (kappa, coeffs) in rows {
            if kappa.weight() != degree || kappa.len() > nvars {
                return Err(Error::InvalidArgument(format!(
                    "row {kappa} does not fit degree {degree}, {nvars} variables"
                )));
            }
            for (lam, _) in &coeffs {
                if lam.weight() != degree || lam.len() > nvars || lam > &kappa {
                    return Err(Error::InvalidArgument(format!(
                        "coefficient ({kappa}, {lam}) violates triangularity or degree"
                    )));
                }
            }
            row_parts = row_parts.max(kappa.len());
            out.push(ZonalRow {
                kappa,
                coeffs,
                float_coeffs: Vec::new(),
            });
        }
        let mut t = ZonalTable {
            degree,
            nvars,
            row_parts,
            normalization,
            basis,
            rows: out,
        };
        t.refresh_float_coeffs();
        Ok(t)
    }

    fn refresh_float_coeffs(&mut self) {
        let index: HashMap<&Partition, usize> =
            self.basis.iter().enumerate().map(|(i, p)| (p, i)).collect();
        for row in &mut self.rows {
            row.float_coeffs = row
                .coeffs
                .iter()
                .map(|(lam, b)| (index[lam], b.to_f64().unwrap_or(f64::NAN)))
                .collect();
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn row_parts(&self) -> usize {
        self.row_parts
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn rows(&self) -> &[ZonalRow] {
        &self.rows
    }

    pub fn row(&self, kappa: &Partition) -> Option<&ZonalRow> {
        self.rows.iter().find(|r| &r.kappa == kappa)
    }

    pub fn coefficient(&self, kappa: &Partition, lambda: &Partition) -> BigRational {
        self.row(kappa)
            .and_then(|r| r.coeffs.iter().find(|(l, _)| l == lambda))
            .map(|(_, b)| b.clone())
            .unwrap_or_else(BigRational::zero)
    }

    /// Checks `sum_kappa b_{kappa,lambda} = k! / prod lambda_i!` exactly for
    /// every lambda whose dominating partitions are all rows of the table.
    pub fn check_sum_rule(&self) -> Result<()> {
        if self.normalization != Normalization::C {
            return Err(Error::InvalidArgument(
                "sum rule holds in normalization C only".into(),
            ));
        }
        let kfact = BigInt::from(factorial(self.degree));
        for lam in self.basis.iter().filter(|l| l.len() <= self.row_parts) {
            let total: BigRational = self
                .rows
                .iter()
                .filter_map(|r| {
                    r.coeffs
                        .iter()
                        .find(|(l, _)| l == lam)
                        .map(|(_, b)| b.clone())
                })
                .sum();
            let den = lam
                .parts()
                .iter()
                .fold(BigInt::one(), |acc, &p| acc * BigInt::from(factorial(p)));
            let want = BigRational::new(kfact.clone(), den);
            if total != want {
                return Err(Error::Internal(format!(
                    "sum rule fails at lambda = {lam}: {total} != {want}"
                )));
            }
        }
        Ok(())
    }

    /// Evaluates every row at the eigenvalue list `y`, returning values in
    /// row order. Exact zeros in `y` are ignored.
    pub fn eval_all(&self, y: &[f64]) -> Result<Vec<f64>> {
        let nz: Vec<f64> = y.iter().copied().filter(|v| *v != 0.0).collect();
        if nz.len() > self.nvars {
            return Err(Error::Dimension(format!(
                "{} non-zero eigenvalues exceed the table's {} variables",
                nz.len(),
                self.nvars
            )));
        }
        if self.degree == 0 {
            return Ok(vec![1.0; self.rows.len()]);
        }
        let pows = power_table(&nz, self.degree);
        let monomials: Vec<f64> = self
            .basis
            .iter()
            .map(|lam| monomial_with_powers(lam, &pows))
            .collect();
        Ok(self
            .rows
            .iter()
            .map(|r| r.float_coeffs.iter().map(|&(i, b)| b * monomials[i]).sum())
            .collect())
    }

    /// `C_kappa(y)` from an eigenvalue list.
    pub fn eval_eigenvalues(&self, kappa: &Partition, y: &[f64]) -> Result<f64> {
        let row = self.row(kappa).ok_or_else(|| {
            Error::InvalidArgument(format!("partition {kappa} is not a row of this table"))
        })?;
        let nz: Vec<f64> = y.iter().copied().filter(|v| *v != 0.0).collect();
        if nz.len() > self.nvars {
            return Err(Error::Dimension(format!(
                "{} non-zero eigenvalues exceed the table's {} variables",
                nz.len(),
                self.nvars
            )));
        }
        if self.degree == 0 {
            return Ok(1.0);
        }
        let pows = power_table(&nz, self.degree);
        Ok(row
            .float_coeffs
            .iter()
            .map(|&(i, b)| b * monomial_with_powers(&self.basis[i], &pows))
            .sum())
    }

    /// Changes the per-row scaling.
    pub fn convert_normalization(&self, target: Normalization) -> Result<ZonalTable> {
        let mut out = self.clone();
        let kfact = BigRational::from_integer(BigInt::from(factorial(self.degree)));
        let column = Partition::column(self.degree);
        for row in &mut out.rows {
            let pin = |coeffs: &[(Partition, BigRational)], lam: &Partition| {
                coeffs
                    .iter()
                    .find(|(l, _)| l == lam)
                    .map(|(_, b)| b.clone())
                    .unwrap_or_else(BigRational::zero)
            };
            let factor = match target {
                Normalization::Leading1 => {
                    let lead = pin(&row.coeffs, &row.kappa);
                    BigRational::one() / lead
                }
                Normalization::J => {
                    let b = pin(&row.coeffs, &column);
                    if b.is_zero() {
                        return Err(Error::Domain(format!(
                            "row {} has no M_(1^{}) coefficient in {} variables; J normalization needs m >= k",
                            row.kappa, self.degree, self.nvars
                        )));
                    }
                    &kfact / b
                }
                Normalization::C => {
                    let at_ones: BigRational = row
                        .coeffs
                        .iter()
                        .map(|(lam, b)| {
                            b * BigRational::from_integer(monomial_at_ones(lam, self.nvars).into())
                        })
                        .sum();
                    zonal_unit(&row.kappa, self.nvars).value / at_ones
                }
            };
            debug_assert!(factor.is_positive());
            for (_, b) in &mut row.coeffs {
                *b = &*b * &factor;
            }
        }
        out.normalization = target;
        out.refresh_float_coeffs();
        Ok(out)
    }
}

/// Argument accepted by [`zonal_eval`].
pub enum ZonalArg<'a> {
    Matrix(&'a DMatrix<f64>),
    Eigenvalues(&'a [f64]),
}

/// `C_kappa(X)`; matrix input is reduced to its eigenvalues.
pub fn zonal_eval(table: &ZonalTable, kappa: &Partition, x: ZonalArg<'_>) -> Result<f64> {
    match x {
        ZonalArg::Eigenvalues(y) => table.eval_eigenvalues(kappa, y),
        ZonalArg::Matrix(m) => {
            let (vals, _) = sym_eig(m)?;
            table.eval_eigenvalues(kappa, vals.as_slice())
        }
    }
}

type CacheKey = (usize, usize, usize);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<ZonalTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<ZonalTable>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Process-wide cache of immutable tables keyed by
/// `(degree, row_parts, nvars)`.
pub fn cached_table(k: usize, row_parts: usize, nvars: usize) -> Result<Arc<ZonalTable>> {
    let key = (k, row_parts, nvars);
    if let Some(t) = cache().lock().unwrap().get(&key) {
        return Ok(t.clone());
    }
    let table = Arc::new(ZonalTable::build(k, row_parts, nvars)?);
    cache().lock().unwrap().insert(key, table.clone());
    Ok(table)
}
