//! Tensor-structured matrix normal specifications.
//!
//! Every type is reduced to one `mn x mn` precision matrix acting on the
//! row-major vectorization `(x11, ..., x1n, ..., xm1, ..., xmn)`. A term
//! `A^{-1} X C X'` of the exponent contributes `A^{-1} (x) C` in that
//! order. Rank-one column factors have no inverse and enter through their
//! Moore-Penrose pseudo-inverse `(b_i b_j')^+ = b_j b_i' / (|b_i|^2 |b_j|^2)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matvar::linalg::{check_pd, check_square, inverse_pd, min_eigenvalue, symmetrize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TypeTag {
    T1,
    T1Half,
    T2,
    T3,
}

impl fmt::Display for TypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TypeTag::T1 => "T1",
            TypeTag::T1Half => "T1half",
            TypeTag::T2 => "T2",
            TypeTag::T3 => "T3",
        };
        f.write_str(s)
    }
}

impl FromStr for TypeTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t1" => Ok(TypeTag::T1),
            "t1half" | "t1.5" | "t1_5" => Ok(TypeTag::T1Half),
            "t2" => Ok(TypeTag::T2),
            "t3" => Ok(TypeTag::T3),
            _ => Err(Error::Parse(format!("unknown matrix normal type '{s}'"))),
        }
    }
}

/// Zero-mean matrix normal law on `m x n` matrices.
#[derive(Debug, Clone, PartialEq)]
pub enum MatNormSpec {
    /// `etr(-1/2 A^{-1} X B^{-1} X')`.
    T3 { a: DMatrix<f64>, b: DMatrix<f64> },
    /// `etr(-1/2 sum_ij alpha_ij A_i^{-1} X B_j^{-1} X')`.
    T2 {
        a: Vec<DMatrix<f64>>,
        b: Vec<DMatrix<f64>>,
        alpha: DMatrix<f64>,
    },
    /// `etr(-1/2 sum_i A_i^{-1} X (b_i b_i')^+ X')`.
    T1Half {
        a: Vec<DMatrix<f64>>,
        b: Vec<DVector<f64>>,
    },
    /// `etr(-1/2 sum_ij A_ij^{-1} X (b_i b_j')^+ X')`, `a[i][j] = A_ij`.
    T1 {
        a: Vec<Vec<DMatrix<f64>>>,
        b: Vec<DVector<f64>>,
    },
}

fn rank_one_pinv(bi: &DVector<f64>, bj: &DVector<f64>) -> Result<DMatrix<f64>> {
    let s = bi.norm_squared() * bj.norm_squared();
    if s == 0.0 {
        return Err(Error::InvalidArgument(
            "rank-one factor must be non-zero".into(),
        ));
    }
    Ok(bj * bi.transpose() / s)
}

impl MatNormSpec {
    pub fn identity(m: usize, n: usize) -> Self {
        MatNormSpec::T3 {
            a: DMatrix::identity(m, m),
            b: DMatrix::identity(n, n),
        }
    }

    pub fn type_tag(&self) -> TypeTag {
        match self {
            MatNormSpec::T1 { .. } => TypeTag::T1,
            MatNormSpec::T1Half { .. } => TypeTag::T1Half,
            MatNormSpec::T2 { .. } => TypeTag::T2,
            MatNormSpec::T3 { .. } => TypeTag::T3,
        }
    }

    /// `(m, n)`: rows and columns of the random matrix.
    pub fn dims(&self) -> Result<(usize, usize)> {
        let (m, n) = match self {
            MatNormSpec::T3 { a, b } => (a.nrows(), b.nrows()),
            MatNormSpec::T2 { a, b, .. } => (
                a.first().map(|x| x.nrows()).unwrap_or(0),
                b.first().map(|x| x.nrows()).unwrap_or(0),
            ),
            MatNormSpec::T1Half { a, b } => (
                a.first().map(|x| x.nrows()).unwrap_or(0),
                b.first().map(|x| x.len()).unwrap_or(0),
            ),
            MatNormSpec::T1 { a, b } => (
                a.first()
                    .and_then(|r| r.first())
                    .map(|x| x.nrows())
                    .unwrap_or(0),
                b.first().map(|x| x.len()).unwrap_or(0),
            ),
        };
        if m == 0 || n == 0 {
            return Err(Error::InvalidArgument(
                "matrix normal spec has no factors".into(),
            ));
        }
        Ok((m, n))
    }

    /// Per-factor validation: shapes agree and every scale matrix is
    /// symmetric positive definite.
    pub fn validate(&self) -> Result<(usize, usize)> {
        let (m, n) = self.dims()?;
        let want = |x: &DMatrix<f64>, d: usize, what: &str| -> Result<()> {
            if check_square(x)? != d {
                return Err(Error::Dimension(format!("{what} must be {d}x{d}")));
            }
            check_pd(x).map_err(|e| Error::NotPositiveDefinite(format!("{what}: {e}")))
        };
        let want_vec = |v: &DVector<f64>, what: &str| -> Result<()> {
            if v.len() != n {
                return Err(Error::Dimension(format!("{what} must have length {n}")));
            }
            if v.norm_squared() == 0.0 {
                return Err(Error::InvalidArgument(format!("{what} must be non-zero")));
            }
            Ok(())
        };
        match self {
            MatNormSpec::T3 { a, b } => {
                want(a, m, "A")?;
                want(b, n, "B")?;
            }
            MatNormSpec::T2 { a, b, alpha } => {
                for (i, ai) in a.iter().enumerate() {
                    want(ai, m, &format!("A_{}", i + 1))?;
                }
                for (j, bj) in b.iter().enumerate() {
                    want(bj, n, &format!("B_{}", j + 1))?;
                }
                if alpha.shape() != (a.len(), b.len()) {
                    return Err(Error::Dimension(format!(
                        "alpha must be {}x{}",
                        a.len(),
                        b.len()
                    )));
                }
            }
            MatNormSpec::T1Half { a, b } => {
                if a.len() != b.len() {
                    return Err(Error::Dimension("T1half needs one b_i per A_i".into()));
                }
                for (i, ai) in a.iter().enumerate() {
                    want(ai, m, &format!("A_{}", i + 1))?;
                    want_vec(&b[i], &format!("b_{}", i + 1))?;
                }
            }
            MatNormSpec::T1 { a, b } => {
                let r = b.len();
                if a.len() != r || a.iter().any(|row| row.len() != r) {
                    return Err(Error::Dimension(format!(
                        "T1 needs an {r}x{r} grid of A_ij"
                    )));
                }
                for (i, bi) in b.iter().enumerate() {
                    want_vec(bi, &format!("b_{}", i + 1))?;
                }
                for (i, row) in a.iter().enumerate() {
                    for (j, aij) in row.iter().enumerate() {
                        want(aij, m, &format!("A_{}{}", i + 1, j + 1))?;
                    }
                }
            }
        }
        Ok((m, n))
    }

    /// Precision (inverse covariance) of the row-major vectorization.
    pub fn assemble_precision(&self) -> Result<DMatrix<f64>> {
        let (m, n) = self.validate()?;
        let mut p = DMatrix::zeros(m * n, m * n);
        match self {
            MatNormSpec::T3 { a, b } => {
                p = inverse_pd(a)?.kronecker(&inverse_pd(b)?);
            }
            MatNormSpec::T2 { a, b, alpha } => {
                let binv = b.iter().map(inverse_pd).collect::<Result<Vec<_>>>()?;
                for (i, ai) in a.iter().enumerate() {
                    let ainv = inverse_pd(ai)?;
                    for (j, bj) in binv.iter().enumerate() {
                        p += ainv.kronecker(bj) * alpha[(i, j)];
                    }
                }
            }
            MatNormSpec::T1Half { a, b } => {
                for (ai, bi) in a.iter().zip(b) {
                    p += inverse_pd(ai)?.kronecker(&rank_one_pinv(bi, bi)?);
                }
            }
            MatNormSpec::T1 { a, b } => {
                for (i, row) in a.iter().enumerate() {
                    for (j, aij) in row.iter().enumerate() {
                        p += inverse_pd(aij)?.kronecker(&rank_one_pinv(&b[i], &b[j])?);
                    }
                }
            }
        }
        let p = symmetrize(&p);
        if nalgebra::Cholesky::new(p.clone()).is_none() {
            return Err(Error::IndefinitePrecision {
                min_eigenvalue: min_eigenvalue(&p),
            });
        }
        Ok(p)
    }

    /// Covariance of the row-major vectorization.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        let p = self.assemble_precision()?;
        inverse_pd(&p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m1(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn t3_identity_precision() {
        let p = MatNormSpec::identity(2, 3).assemble_precision().unwrap();
        assert_eq!(p, DMatrix::identity(6, 6));
    }

    #[test]
    fn t3_scalar_precision() {
        let s = MatNormSpec::T3 {
            a: m1(4.0),
            b: m1(1.0),
        };
        let p = s.assemble_precision().unwrap();
        assert!((p[(0, 0)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn t1half_scalar_precision() {
        let s = MatNormSpec::T1Half {
            a: vec![m1(1.0)],
            b: vec![DVector::from_element(1, 1.0)],
        };
        assert!((s.assemble_precision().unwrap()[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn t3_kronecker_order_is_row_major() {
        // Cov(x_ij, x_kl) = A_ik B_jl
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let b = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
        let cov = MatNormSpec::T3 {
            a: a.clone(),
            b: b.clone(),
        }
        .covariance()
        .unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let got = cov[(i * 2 + j, k * 2 + l)];
                        assert!((got - a[(i, k)] * b[(j, l)]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn indefinite_precision_reported() {
        // a single rank-one column factor leaves the precision singular for n = 2
        let s = MatNormSpec::T1Half {
            a: vec![m1(1.0)],
            b: vec![DVector::from_vec(vec![1.0, 0.0])],
        };
        match s.assemble_precision() {
            Err(Error::IndefinitePrecision { min_eigenvalue }) => {
                assert!(min_eigenvalue.abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_pd_factor_rejected() {
        let s = MatNormSpec::T3 {
            a: DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]),
            b: m1(1.0),
        };
        assert!(matches!(s.validate(), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn type_tag_round_trip() {
        for t in [TypeTag::T1, TypeTag::T1Half, TypeTag::T2, TypeTag::T3] {
            assert_eq!(t.to_string().parse::<TypeTag>().unwrap(), t);
        }
    }
}
