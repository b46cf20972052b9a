//! Log-densities and transforms: matrix normal laws, the density of
//! `S = XX'`, its moment generating function, latent-root densities and the
//! Wishart law.

use std::f64::consts::{LN_2, PI};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergeom::{phyq_two_eigen, zero_f_zero_two_shifted, HypergeomSpec};
use crate::matvar::linalg::{
    check_pd, check_square, check_symmetric, eigenvalues_of, inverse_pd, is_identity, ln_det_pd,
    sym_sqrt, vec_row_major,
};
use crate::matvar::MatNormSpec;
use crate::partitions::{ln_mv_gamma, Partition};

/// Relative tail above which a series-based density carries a warning.
pub const TAIL_WARNING: f64 = 1e-6;

/// Log-density with the truncation diagnostic of its series factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesDensity {
    pub log_value: f64,
    /// `last_layer / |series value|`; zero when no series was needed.
    pub relative_tail: f64,
    pub warning: Option<String>,
}

impl SeriesDensity {
    fn exact(log_value: f64) -> Self {
        SeriesDensity {
            log_value,
            relative_tail: 0.0,
            warning: None,
        }
    }

    fn with_tail(log_value: f64, relative_tail: f64) -> Self {
        let warning = (relative_tail > TAIL_WARNING).then(|| {
            format!(
                "series truncation tail {relative_tail:.3e} exceeds {TAIL_WARNING:e} of the value"
            )
        });
        SeriesDensity {
            log_value,
            relative_tail,
            warning,
        }
    }
}

fn ln_mvg(m: usize, t: f64) -> Result<f64> {
    ln_mv_gamma(m, t, &Partition::empty())
}

/// Log-density of a zero-mean matrix normal law at the `m x n` matrix `x`.
pub fn matnorm_logpdf(spec: &MatNormSpec, x: &DMatrix<f64>) -> Result<f64> {
    let (m, n) = spec.validate()?;
    if x.shape() != (m, n) {
        return Err(Error::Dimension(format!(
            "X is {}x{}, spec is {m}x{n}",
            x.nrows(),
            x.ncols()
        )));
    }
    let mn = (m * n) as f64;
    match spec {
        MatNormSpec::T3 { a, b } => {
            let q = (inverse_pd(a)? * x * inverse_pd(b)? * x.transpose()).trace();
            Ok(-0.5 * mn * (2.0 * PI).ln()
                - 0.5 * n as f64 * ln_det_pd(a)?
                - 0.5 * m as f64 * ln_det_pd(b)?
                - 0.5 * q)
        }
        _ => {
            let p = spec.assemble_precision()?;
            let v = vec_row_major(x);
            let q = (v.transpose() * &p * &v)[(0, 0)];
            Ok(-0.5 * mn * (2.0 * PI).ln() + 0.5 * ln_det_pd(&p)? - 0.5 * q)
        }
    }
}

/// Standard Wishart `W_m(n, Sigma)` log-density; `n` may be real with
/// `n > m - 1`.
pub fn wishart_logpdf(w: &DMatrix<f64>, n: f64, sigma: &DMatrix<f64>) -> Result<f64> {
    let m = check_square(w)?;
    if check_square(sigma)? != m {
        return Err(Error::Dimension("W and Sigma differ in size".into()));
    }
    if !(n > m as f64 - 1.0) {
        return Err(Error::Domain(format!(
            "Wishart degrees of freedom {n} must exceed m - 1"
        )));
    }
    let mf = m as f64;
    let ln_det_w = ln_det_pd(w).map_err(|_| Error::Domain("W is not positive definite".into()))?;
    let tr = (inverse_pd(sigma)? * w).trace();
    Ok(0.5 * (n - mf - 1.0) * ln_det_w
        - 0.5 * tr
        - 0.5 * n * mf * LN_2
        - 0.5 * n * ln_det_pd(sigma)?
        - ln_mvg(m, n / 2.0)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovDensityParams {
    /// Row scale, `m x m`.
    pub a: DMatrix<f64>,
    /// Column scale, `n x n`.
    pub b: DMatrix<f64>,
    /// Number of columns of `X`.
    pub n: usize,
    /// Splitting scalar, `split > 0`.
    pub split: f64,
    /// Series truncation degree.
    pub trunc: usize,
}

impl CovDensityParams {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, split: f64, trunc: usize) -> Self {
        let n = b.nrows();
        CovDensityParams {
            a,
            b,
            n,
            split,
            trunc,
        }
    }

    fn validate(&self) -> Result<usize> {
        let m = check_square(&self.a)?;
        check_pd(&self.a)?;
        check_pd(&self.b)?;
        if self.b.nrows() != self.n {
            return Err(Error::Dimension(format!("B must be {0}x{0}", self.n)));
        }
        if self.n < m {
            return Err(Error::Domain(format!(
                "S = XX' needs n >= m (n = {}, m = {m})",
                self.n
            )));
        }
        if !(self.split > 0.0) {
            return Err(Error::Domain(format!(
                "splitting scalar must be positive, got {}",
                self.split
            )));
        }
        Ok(m)
    }
}

/// Log-density of `S = XX'` for `X ~ T3(A, B)`:
///
/// ```text
/// etr(-A^{-1}S/a) det(S)^{(n-m-1)/2} 0F0(I_n - (a/2) B^{-1}, A^{-1}S/a)
///   / [2^{mn/2} Gamma_m(n/2) det(A)^{n/2} det(B)^{m/2}]
/// ```
///
/// The two arguments have sizes `n` and `m`; the shorter spectrum is padded
/// with zeros and the integral runs over `O(n)`.
pub fn sample_cov_logpdf(s: &DMatrix<f64>, params: &CovDensityParams) -> Result<SeriesDensity> {
    let m = params.validate()?;
    if check_square(s)? != m {
        return Err(Error::Dimension(format!("S must be {m}x{m}")));
    }
    let ln_det_s = ln_det_pd(s).map_err(|_| Error::Domain("S is not positive definite".into()))?;
    let (mf, nf, a) = (m as f64, params.n as f64, params.split);
    let ainv = inverse_pd(&params.a)?;
    let base = -(&ainv * s).trace() / a + 0.5 * (nf - mf - 1.0) * ln_det_s
        - 0.5 * mf * nf * LN_2
        - ln_mvg(m, nf / 2.0)?
        - 0.5 * nf * ln_det_pd(&params.a)?
        - 0.5 * mf * ln_det_pd(&params.b)?;

    let x: Vec<f64> = eigenvalues_of(&inverse_pd(&params.b)?)
        .iter()
        .map(|beta_inv| 1.0 - 0.5 * a * beta_inv)
        .collect();
    if x.iter().all(|v| *v == 0.0) {
        return Ok(SeriesDensity::exact(base));
    }
    let root = sym_sqrt(&ainv)?;
    let y: Vec<f64> = eigenvalues_of(&(&root * s * &root))
        .iter()
        .map(|v| v / a)
        .collect();
    let f = zero_f_zero_two_shifted(&x, &y, params.n, params.trunc)?;
    if !(f.series.value > 0.0) {
        return Err(Error::Domain(format!(
            "truncated 0F0 series is non-positive ({}); increase the truncation",
            f.series.value
        )));
    }
    Ok(SeriesDensity::with_tail(
        base + f.ln_value(),
        f.series.relative_tail(),
    ))
}

/// Eigenvalues of `A^{1/2} R A^{1/2}` times those of `B`, checked for
/// existence of the moment generating function.
fn mgf_factors(
    r: &DMatrix<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_symmetric(r)?;
    check_pd(a)?;
    check_pd(b)?;
    if r.nrows() != a.nrows() {
        return Err(Error::Dimension("R and A differ in size".into()));
    }
    let root = sym_sqrt(a)?;
    let mu = eigenvalues_of(&(&root * r * &root));
    let beta = eigenvalues_of(b);
    let critical = beta
        .iter()
        .flat_map(|bj| mu.iter().map(move |mi| 1.0 - 2.0 * bj * mi))
        .fold(f64::INFINITY, f64::min);
    if !(critical > 0.0) {
        return Err(Error::Domain(format!(
            "moment generating function does not exist: I - 2 (RA (x) B) has eigenvalue {critical:e}"
        )));
    }
    Ok((mu, beta))
}

/// `log E etr(RS)` for `S = XX'`, `X ~ T3(A, B)`.
pub fn ln_mgf_s(r: &DMatrix<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let (mu, beta) = mgf_factors(r, a, b)?;
    Ok(-0.5
        * beta
            .iter()
            .map(|bj| mu.iter().map(|mi| (1.0 - 2.0 * bj * mi).ln()).sum::<f64>())
            .sum::<f64>())
}

/// `E etr(RS) = prod_j det(I_m - 2 beta_j R A)^{-1/2}` with `beta_j` the
/// eigenvalues of `B`.
pub fn mgf_s(r: &DMatrix<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if r.iter().all(|v| *v == 0.0) {
        mgf_factors(r, a, b)?;
        return Ok(1.0);
    }
    Ok(ln_mgf_s(r, a, b)?.exp())
}

/// The two closed forms printed alongside the moment generating function,
/// built from `T = I_n - B^{-1}/a`, `Z = I_m - aRA` and the eigenvalues
/// `phi_j` of `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgfPaperVariants {
    /// `1F0(n/2; T, Z^{-1}) / (det((2/a)B)^{m/2} det(T)^{n/2})`, or the
    /// reason it could not be evaluated.
    pub series_form: std::result::Result<f64, String>,
    /// `prod_j det(I_m - phi_j Z^{-1})^{-1/2}`.
    pub product_form: f64,
}

pub fn paper_variants(
    r: &DMatrix<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    split: f64,
    trunc: usize,
) -> Result<MgfPaperVariants> {
    check_symmetric(r)?;
    let m = check_square(a)?;
    let n = check_square(b)?;
    let binv = inverse_pd(b)?;
    let t = DMatrix::<f64>::identity(n, n) - &binv / split;
    let ra = r * a;
    let z = DMatrix::<f64>::identity(m, m) - &ra * split;
    let zinv = z
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Domain("Z = I - aRA is singular".into()))?;
    let phi = eigenvalues_of(&t);

    let product_form = phi
        .iter()
        .map(|p| {
            (DMatrix::<f64>::identity(m, m) - &zinv * *p)
                .determinant()
                .powf(-0.5)
        })
        .product();

    // Z^{-1} need not be symmetric; its eigenvalues are real when R A is
    // similar to a symmetric matrix, which holds for PD A.
    let zeig: Vec<f64> = {
        let root = sym_sqrt(a)?;
        let sym = DMatrix::<f64>::identity(m, m) - &root * r * &root * split;
        eigenvalues_of(&sym).iter().map(|v| 1.0 / v).collect()
    };
    let spec = HypergeomSpec::new(vec![n as f64 / 2.0], vec![], trunc);
    let series_form = phyq_two_eigen(&spec, &phi, &zeig, n)
        .map(|f| {
            let det_b = ((2.0 / split) * b).determinant();
            f.value / (det_b.powf(m as f64 / 2.0) * t.determinant().powf(n as f64 / 2.0))
        })
        .map_err(|e| e.to_string());
    Ok(MgfPaperVariants {
        series_form,
        product_form,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatentRootsVariant {
    /// The printed form with `0F0(A^{-1}, L B^{-1})`.
    Paper,
    /// The `B = I` Wishart eigenvalue density with `0F0(-A^{-1}/2, L)`.
    WishartReduced,
}

impl std::str::FromStr for LatentRootsVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(LatentRootsVariant::Paper),
            "wishart-reduced" | "wishart" => Ok(LatentRootsVariant::WishartReduced),
            _ => Err(Error::Parse(format!("unknown latent-root variant '{s}'"))),
        }
    }
}

/// Joint log-density of the ordered eigenvalues `l_1 > ... > l_m > 0` of
/// `S = XX'`, `X ~ T3(A, B)` with `n` columns.
///
/// For `m != n` the paper variant reads `L B^{-1}` through the leading
/// `m x m` block of `B^{-1}`, the nonzero spectrum of the zero-padded product.
pub fn latent_roots_logpdf(
    l: &[f64],
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    trunc: usize,
    variant: LatentRootsVariant,
) -> Result<SeriesDensity> {
    let m = check_square(a)?;
    let n = check_square(b)?;
    check_pd(a)?;
    check_pd(b)?;
    if l.len() != m {
        return Err(Error::Dimension(format!(
            "expected {m} latent roots, got {}",
            l.len()
        )));
    }
    if n < m {
        return Err(Error::Domain(format!(
            "latent roots need n >= m (n = {n}, m = {m})"
        )));
    }
    if l.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("latent roots must be positive".into()));
    }
    let mut vandermonde = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            let d = l[i] - l[j];
            if d <= 1e-12 * l[i].max(1.0) {
                return Err(Error::Domain(format!(
                    "latent roots must be strictly descending (l_{} = {}, l_{} = {})",
                    i + 1,
                    l[i],
                    j + 1,
                    l[j]
                )));
            }
            vandermonde += d.ln();
        }
    }
    let (mf, nf) = (m as f64, n as f64);
    let ln_det_l: f64 = l.iter().map(|v| v.ln()).sum();
    let mut base = 0.5 * mf * mf * PI.ln() + 0.5 * (nf - mf - 1.0) * ln_det_l + vandermonde
        - 0.5 * mf * nf * LN_2
        - ln_mvg(m, nf / 2.0)?
        - ln_mvg(m, mf / 2.0)?
        - 0.5 * nf * ln_det_pd(a)?;
    let ainv = eigenvalues_of(&inverse_pd(a)?);
    let f = match variant {
        LatentRootsVariant::WishartReduced => {
            if !is_identity(b, 1e-12 * nf) {
                return Err(Error::InvalidArgument(
                    "wishart-reduced variant requires B = I".into(),
                ));
            }
            let x: Vec<f64> = ainv.iter().map(|v| -0.5 * v).collect();
            zero_f_zero_two_shifted(&x, l, m, trunc)?
        }
        LatentRootsVariant::Paper => {
            base -= 0.5 * mf * ln_det_pd(b)?;
            let binv = inverse_pd(b)?;
            let block = binv.view((0, 0), (m, m)).clone_owned();
            let root_l = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                m,
                l.iter().map(|v| v.sqrt()),
            ));
            let y = eigenvalues_of(&(&root_l * block * &root_l));
            zero_f_zero_two_shifted(&ainv, &y, m, trunc)?
        }
    };
    if !(f.series.value > 0.0) {
        return Err(Error::Domain(format!(
            "truncated 0F0 series is non-positive ({}); increase the truncation",
            f.series.value
        )));
    }
    Ok(SeriesDensity::with_tail(
        base + f.ln_value(),
        f.series.relative_tail(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(v.to_vec()))
    }

    #[test]
    fn matnorm_standard_at_zero() {
        let v = matnorm_logpdf(&MatNormSpec::identity(2, 3), &DMatrix::zeros(2, 3)).unwrap();
        assert!((v + 3.0 * (2.0 * PI).ln()).abs() < 1e-14);
    }

    #[test]
    fn matnorm_scalar_normal() {
        let v = matnorm_logpdf(
            &MatNormSpec::T3 {
                a: s(4.0),
                b: s(1.0),
            },
            &s(2.0),
        )
        .unwrap();
        assert!((v - (-0.5 * (8.0 * PI).ln() - 0.5)).abs() < 1e-14);
    }

    #[test]
    fn matnorm_normalizes_on_grid() {
        let spec = MatNormSpec::T3 {
            a: s(4.0),
            b: s(1.0),
        };
        let h = 1e-3;
        let total: f64 = (-40_000..=40_000)
            .map(|i| matnorm_logpdf(&spec, &s(i as f64 * h)).unwrap().exp() * h)
            .sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn matnorm_t3_matches_precision_form() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let b = DMatrix::from_row_slice(3, 3, &[1.5, 0.2, 0.1, 0.2, 1.0, 0.0, 0.1, 0.0, 0.7]);
        let t2 = MatNormSpec::T2 {
            a: vec![a.clone()],
            b: vec![b.clone()],
            alpha: s(1.0),
        };
        let t3 = MatNormSpec::T3 { a, b };
        let x = DMatrix::from_row_slice(2, 3, &[0.3, -1.0, 0.5, 1.2, 0.1, -0.4]);
        let l3 = matnorm_logpdf(&t3, &x).unwrap();
        let l2 = matnorm_logpdf(&t2, &x).unwrap();
        assert!((l3 - l2).abs() < 1e-12);
    }

    #[test]
    fn wishart_scalar_chi_square() {
        let v = wishart_logpdf(&s(1.0), 2.0, &s(1.0)).unwrap();
        assert!((v - ((-0.5f64).exp() / 2.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn wishart_tail_decays() {
        let eye = DMatrix::identity(2, 2);
        let near = wishart_logpdf(&(&eye * 5.0), 5.0, &eye).unwrap();
        let far = wishart_logpdf(&(&eye * 50.0), 5.0, &eye).unwrap();
        assert!(near > far);
    }

    #[test]
    fn sample_cov_scalar_chi_square() {
        let p = CovDensityParams::new(s(1.0), DMatrix::identity(2, 2), 2.0, 20);
        let v = sample_cov_logpdf(&s(1.0), &p).unwrap();
        assert!((v.log_value - ((-0.5f64).exp() / 2.0).ln()).abs() < 1e-14);
        assert_eq!(v.relative_tail, 0.0);
    }

    #[test]
    fn sample_cov_reduces_to_wishart() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.4, 0.4, 1.0]);
        let w = DMatrix::from_row_slice(2, 2, &[3.0, -0.5, -0.5, 6.0]);
        let p = CovDensityParams::new(a.clone(), DMatrix::identity(5, 5), 2.0, 20);
        let v = sample_cov_logpdf(&w, &p).unwrap();
        assert!((v.log_value - wishart_logpdf(&w, 5.0, &a).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn sample_cov_scalar_b_is_exact() {
        // B = cI is a Wishart law with scale cA
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.4, 0.4, 1.0]);
        let w = DMatrix::from_row_slice(2, 2, &[3.0, -0.5, -0.5, 6.0]);
        for split in [1.0, 2.0, 4.0] {
            let p = CovDensityParams::new(a.clone(), DMatrix::identity(3, 3) * 1.5, split, 20);
            let v = sample_cov_logpdf(&w, &p).unwrap();
            let want = wishart_logpdf(&w, 3.0, &(&a * 1.5)).unwrap();
            assert!(
                (v.log_value - want).abs() < 1e-10,
                "{split}: {} vs {want}",
                v.log_value
            );
        }
    }

    #[test]
    fn sample_cov_rejects_non_pd() {
        let p = CovDensityParams::new(s(1.0), DMatrix::identity(2, 2), 2.0, 20);
        assert!(matches!(
            sample_cov_logpdf(&s(-1.0), &p),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn mgf_examples() {
        let one = s(1.0);
        assert_eq!(mgf_s(&s(0.0), &one, &one).unwrap(), 1.0);
        assert!((mgf_s(&s(0.1), &one, &one).unwrap() - 0.8f64.powf(-0.5)).abs() < 1e-14);
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let r = DMatrix::identity(2, 2) * 0.05;
        let want = (DMatrix::<f64>::identity(2, 2) - &a * 0.1)
            .determinant()
            .powf(-1.5);
        assert!((mgf_s(&r, &a, &DMatrix::identity(3, 3)).unwrap() - want).abs() < 1e-13);
        assert!(matches!(mgf_s(&s(0.5), &one, &one), Err(Error::Domain(_))));
    }

    #[test]
    fn mgf_printed_forms_disagree_with_scalar_mgf() {
        let one = s(1.0);
        let v = paper_variants(&s(0.1), &one, &one, 2.0, 60).unwrap();
        assert!((v.product_form - 0.375f64.powf(-0.5)).abs() < 1e-12);
        let truth = mgf_s(&s(0.1), &one, &one).unwrap();
        assert!((v.product_form / truth - 1.0).abs() > 0.1);
        assert!(v.series_form.is_ok());
    }

    #[test]
    fn latent_roots_scalar_chi_square() {
        let v = latent_roots_logpdf(
            &[1.3],
            &s(1.0),
            &DMatrix::identity(2, 2),
            10,
            LatentRootsVariant::WishartReduced,
        )
        .unwrap();
        assert!((v.log_value - ((-0.65f64).exp() / 2.0).ln()).abs() < 1e-13);
    }

    #[test]
    fn latent_roots_scalar_a_closed_form() {
        // A = s^2 I: 0F0 collapses to etr(-L / (2 s^2))
        let a = DMatrix::identity(2, 2) * 2.0;
        let l = [3.0, 1.0];
        let v = latent_roots_logpdf(
            &l,
            &a,
            &DMatrix::identity(4, 4),
            5,
            LatentRootsVariant::WishartReduced,
        )
        .unwrap();
        let want = 2.0 * PI.ln() + 0.5 * (3.0f64).ln() + 2.0f64.ln()
            - 4.0 * LN_2
            - ln_mvg(2, 2.0).unwrap()
            - ln_mvg(2, 1.0).unwrap()
            - 2.0 * (4.0f64).ln()
            - 1.0;
        assert!((v.log_value - want).abs() < 1e-12);
        assert_eq!(v.relative_tail, 0.0);
    }

    #[test]
    fn latent_roots_ties_rejected() {
        let r = latent_roots_logpdf(
            &[2.0, 2.0],
            &DMatrix::identity(2, 2),
            &DMatrix::identity(4, 4),
            5,
            LatentRootsVariant::Paper,
        );
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn latent_roots_reduced_needs_identity_b() {
        let r = latent_roots_logpdf(
            &[2.0, 1.0],
            &DMatrix::identity(2, 2),
            &diag(&[1.0, 2.0, 1.0]),
            5,
            LatentRootsVariant::WishartReduced,
        );
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn latent_roots_paper_variant_evaluates() {
        let r = latent_roots_logpdf(
            &[2.0, 1.0],
            &DMatrix::identity(2, 2),
            &diag(&[1.0, 2.0, 1.0]),
            30,
            LatentRootsVariant::Paper,
        )
        .unwrap();
        assert!(r.log_value.is_finite());
    }
}
