//! Random matrices: Haar-orthogonal draws, the four matrix normal types,
//! Wishart and multivariate Beta matrices.
//!
//! Samplers are pure functions of their specification and a
//! [`RandomSource`]; concurrent use needs distinct stream ids.

pub mod linalg;
pub mod rng;
pub mod spec;

use nalgebra::{DMatrix, DVector};
use rand_distr::{ChiSquared, Distribution};

use crate::error::{Error, Result};
pub use linalg::sym_eig;
pub use rng::RandomSource;
pub use spec::{MatNormSpec, TypeTag};

use linalg::{cholesky, sym_inv_sqrt, symmetrize, unvec_row_major};

/// `rows x cols` matrix of iid standard normals, filled row by row.
pub fn standard_normal_matrix(rows: usize, cols: usize, rng: &mut RandomSource) -> DMatrix<f64> {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.normal()).collect();
    DMatrix::from_row_slice(rows, cols, &data)
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// columns of Q sign-corrected so that R has a positive diagonal.
pub fn sample_haar_orthogonal(m: usize, rng: &mut RandomSource) -> DMatrix<f64> {
    let g = standard_normal_matrix(m, m, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..m {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// One draw with vectorized covariance equal to the inverse of the
/// assembled precision.
pub fn sample_matrix_normal(spec: &MatNormSpec, rng: &mut RandomSource) -> Result<DMatrix<f64>> {
    let sampler = MatNormSampler::new(spec)?;
    Ok(sampler.sample(rng))
}

/// Pre-factorized sampler for repeated draws from one specification.
#[derive(Debug, Clone)]
pub struct MatNormSampler {
    m: usize,
    n: usize,
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    /// `X = L_A Z L_B'`.
    Kronecker { la: DMatrix<f64>, lb: DMatrix<f64> },
    /// `vec X = L^{-T} z` with `P = L L'`.
    Precision { l: DMatrix<f64> },
}

impl MatNormSampler {
    pub fn new(spec: &MatNormSpec) -> Result<Self> {
        let (m, n) = spec.validate()?;
        let kind = match spec {
            MatNormSpec::T3 { a, b } => SamplerKind::Kronecker {
                la: cholesky(a)?.l(),
                lb: cholesky(b)?.l(),
            },
            _ => {
                let p = spec.assemble_precision()?;
                SamplerKind::Precision {
                    l: cholesky(&p)?.l(),
                }
            }
        };
        Ok(MatNormSampler { m, n, kind })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn sample(&self, rng: &mut RandomSource) -> DMatrix<f64> {
        match &self.kind {
            SamplerKind::Kronecker { la, lb } => {
                let z = standard_normal_matrix(self.m, self.n, rng);
                la * z * lb.transpose()
            }
            SamplerKind::Precision { l } => {
                let z = DVector::from_iterator(
                    self.m * self.n,
                    (0..self.m * self.n).map(|_| rng.normal()),
                );
                let v = l
                    .transpose()
                    .solve_upper_triangular(&z)
                    .expect("cholesky factor has a positive diagonal");
                unvec_row_major(&v, self.m, self.n)
            }
        }
    }
}

/// `W = L G G' L'` with `G` an `m x n` standard normal matrix and
/// `Sigma = L L'`.
pub fn sample_wishart(
    n: usize,
    sigma: &DMatrix<f64>,
    rng: &mut RandomSource,
) -> Result<DMatrix<f64>> {
    let m = linalg::check_square(sigma)?;
    if n < m {
        return Err(Error::Domain(format!(
            "Wishart degrees of freedom {n} below dimension {m} (singular Wishart)"
        )));
    }
    let l = cholesky(sigma)?.l();
    let lg = &l * standard_normal_matrix(m, n, rng);
    Ok(symmetrize(&(&lg * lg.transpose())))
}

/// Wishart draw for real degrees of freedom `dof > m - 1` by the Bartlett
/// decomposition.
pub fn sample_wishart_bartlett(
    dof: f64,
    sigma: &DMatrix<f64>,
    rng: &mut RandomSource,
) -> Result<DMatrix<f64>> {
    let m = linalg::check_square(sigma)?;
    if !(dof > m as f64 - 1.0) {
        return Err(Error::Domain(format!(
            "Wishart degrees of freedom {dof} must exceed m - 1 = {}",
            m - 1
        )));
    }
    let l = cholesky(sigma)?.l();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        let chi = ChiSquared::new(dof - i as f64).map_err(|e| Error::Domain(e.to_string()))?;
        t[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            t[(i, j)] = rng.normal();
        }
    }
    let lt = l * t;
    Ok(symmetrize(&(&lt * lt.transpose())))
}

/// `U = (W1 + W2)^{-1/2} W1 (W1 + W2)^{-1/2}` with independent
/// `W_i ~ W_m(n_i, I)`.
pub fn sample_mv_beta(
    n1: usize,
    n2: usize,
    m: usize,
    rng: &mut RandomSource,
) -> Result<DMatrix<f64>> {
    if n1 < m || n2 < m {
        return Err(Error::Domain(format!(
            "multivariate Beta needs n1, n2 >= m (got {n1}, {n2}, m = {m})"
        )));
    }
    let eye = DMatrix::identity(m, m);
    let w1 = sample_wishart(n1, &eye, rng)?;
    let w2 = sample_wishart(n2, &eye, rng)?;
    let r = sym_inv_sqrt(&(&w1 + &w2))?;
    Ok(symmetrize(&(&r * w1 * &r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matvar::linalg::{eigenvalues_of, vec_row_major};

    fn mean_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn haar_is_orthogonal() {
        let mut rng = RandomSource::new(5, 0);
        for m in 1..=6 {
            let h = sample_haar_orthogonal(m, &mut rng);
            assert!((&h * h.transpose() - DMatrix::identity(m, m)).norm() <= 1e-12);
        }
    }

    #[test]
    fn haar_one_dimensional_signs_balanced() {
        let mut rng = RandomSource::new(11, 0);
        let n = 10_000;
        let pos = (0..n)
            .filter(|_| sample_haar_orthogonal(1, &mut rng)[(0, 0)] > 0.0)
            .count() as f64;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((pos - n as f64 / 2.0).abs() <= 3.0 * sigma);
    }

    #[test]
    fn haar_first_entry_second_moment() {
        let mut rng = RandomSource::new(12, 0);
        let xs: Vec<f64> = (0..10_000)
            .map(|_| sample_haar_orthogonal(3, &mut rng)[(0, 0)].powi(2))
            .collect();
        let (mean, se) = mean_se(&xs);
        assert!((mean - 1.0 / 3.0).abs() <= 3.0 * se, "{mean} +- {se}");
    }

    #[test]
    fn t3_scalar_variance() {
        let spec = MatNormSpec::T3 {
            a: DMatrix::from_element(1, 1, 4.0),
            b: DMatrix::from_element(1, 1, 1.0),
        };
        let s = MatNormSampler::new(&spec).unwrap();
        let mut rng = RandomSource::new(3, 0);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| s.sample(&mut rng)[(0, 0)].powi(2))
            .collect();
        let (mean, se) = mean_se(&xs);
        assert!((mean - 4.0).abs() <= 3.0 * se, "{mean} +- {se}");
    }

    #[test]
    fn draws_are_deterministic() {
        let spec = MatNormSpec::T2 {
            a: vec![DMatrix::identity(2, 2)],
            b: vec![
                DMatrix::identity(2, 2),
                DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]),
            ],
            alpha: DMatrix::from_row_slice(1, 2, &[1.0, 0.5]),
        };
        let a = sample_matrix_normal(&spec, &mut RandomSource::new(9, 2)).unwrap();
        let b = sample_matrix_normal(&spec, &mut RandomSource::new(9, 2)).unwrap();
        assert_eq!(a, b);
        let w1 = sample_wishart(3, &DMatrix::identity(2, 2), &mut RandomSource::new(1, 1)).unwrap();
        let w2 = sample_wishart(3, &DMatrix::identity(2, 2), &mut RandomSource::new(1, 1)).unwrap();
        assert_eq!(w1, w2);
    }

    #[test]
    fn covariance_fidelity_t1half() {
        let spec = MatNormSpec::T1Half {
            a: vec![
                DMatrix::identity(2, 2),
                DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
            ],
            b: vec![
                DVector::from_vec(vec![1.0, 0.0]),
                DVector::from_vec(vec![0.6, 0.8]),
            ],
        };
        let cov = spec.covariance().unwrap();
        let s = MatNormSampler::new(&spec).unwrap();
        let mut rng = RandomSource::new(4, 0);
        let n = 50_000;
        let draws: Vec<DVector<f64>> = (0..n).map(|_| vec_row_major(&s.sample(&mut rng))).collect();
        for p in 0..4 {
            for q in 0..4 {
                let xs: Vec<f64> = draws.iter().map(|v| v[p] * v[q]).collect();
                let (mean, se) = mean_se(&xs);
                assert!(
                    (mean - cov[(p, q)]).abs() <= 5.0 * se,
                    "({p},{q}) {mean} vs {}",
                    cov[(p, q)]
                );
            }
        }
    }

    #[test]
    fn wishart_scalar_mean() {
        let mut rng = RandomSource::new(21, 0);
        let sigma = DMatrix::identity(1, 1);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| sample_wishart(3, &sigma, &mut rng).unwrap()[(0, 0)])
            .collect();
        let (mean, se) = mean_se(&xs);
        assert!((mean - 3.0).abs() <= 3.0 * se);
    }

    #[test]
    fn wishart_mean_matrix() {
        let mut rng = RandomSource::new(22, 0);
        let sigma = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let draws: Vec<DMatrix<f64>> = (0..100_000)
            .map(|_| sample_wishart(5, &sigma, &mut rng).unwrap())
            .collect();
        for i in 0..2 {
            for j in 0..2 {
                let xs: Vec<f64> = draws.iter().map(|w| w[(i, j)]).collect();
                let (mean, se) = mean_se(&xs);
                assert!(
                    (mean - 5.0 * sigma[(i, j)]).abs() <= 3.0 * se,
                    "({i},{j}) {mean}"
                );
            }
        }
    }

    #[test]
    fn bartlett_matches_integer_path_in_mean() {
        let mut rng = RandomSource::new(23, 0);
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
        let xs: Vec<f64> = (0..50_000)
            .map(|_| sample_wishart_bartlett(2.5, &sigma, &mut rng).unwrap()[(0, 1)])
            .collect();
        let (mean, se) = mean_se(&xs);
        assert!((mean - 2.5 * 0.3).abs() <= 3.0 * se);
    }

    #[test]
    fn singular_wishart_rejected() {
        let mut rng = RandomSource::new(1, 0);
        assert!(matches!(
            sample_wishart(1, &DMatrix::identity(2, 2), &mut rng),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn beta_scalar_mean_and_support() {
        let mut rng = RandomSource::new(31, 0);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| sample_mv_beta(4, 6, 1, &mut rng).unwrap()[(0, 0)])
            .collect();
        let (mean, se) = mean_se(&xs);
        assert!((mean - 0.4).abs() <= 3.0 * se);
        for _ in 0..1000 {
            let u = sample_mv_beta(4, 5, 3, &mut rng).unwrap();
            let ev = eigenvalues_of(&u);
            assert!(ev.iter().all(|&v| v > 0.0 && v < 1.0));
        }
    }
}
