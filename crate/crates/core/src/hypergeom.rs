//! Hypergeometric functions of one and two matrix arguments as truncated
//! zonal series.
//!
//! ```text
//! pFq(a; b; X)    = sum_k sum_{kappa |- k} [prod (a_i)^kappa / prod (b_j)^kappa] C_kappa(X) / k!
//! pFq(a; b; X, Y) = sum_k sum_{kappa |- k} [...] C_kappa(X) C_kappa(Y) / (k! C_kappa(I_m))
//! ```
//!
//! Truncation is caller-supplied: every result carries its per-degree
//! layers and the absolute size of the last one.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::matvar::linalg::{
    check_pd, check_square, check_symmetric, eigenvalues_of, inverse_pd, ln_det_pd, sym_sqrt,
};
use crate::matvar::{sample_wishart_bartlett, RandomSource};
use crate::partitions::{ln_mv_gamma, pochhammer_partition, Partition};
use crate::verify::report::{Status, VerificationReport};
use crate::zonal::{cached_table, zonal_unit_f64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypergeomSpec {
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
    /// Highest degree kept in the series.
    pub trunc: usize,
}

impl HypergeomSpec {
    pub fn new(upper: Vec<f64>, lower: Vec<f64>, trunc: usize) -> Self {
        HypergeomSpec {
            upper,
            lower,
            trunc,
        }
    }

    pub fn p(&self) -> usize {
        self.upper.len()
    }

    pub fn q(&self) -> usize {
        self.lower.len()
    }

    /// Series coefficient `prod (a_i)^kappa / prod (b_j)^kappa / k!`.
    fn coefficient(&self, kappa: &Partition, ln_kfact: f64) -> f64 {
        let num: f64 = self
            .upper
            .iter()
            .map(|&a| pochhammer_partition(a, kappa))
            .product();
        let den: f64 = self
            .lower
            .iter()
            .map(|&b| pochhammer_partition(b, kappa))
            .product();
        num / den / ln_kfact.exp()
    }

    /// Rejects lower parameters that zero a denominator Pochhammer symbol
    /// for some partition of degree at most `trunc` with at most `m` parts.
    ///
    /// `(b)^kappa` vanishes iff `b = (i-1)/2 - s` with `s < k_i`, and the
    /// smallest such partition is `(s+1)^i`.
    pub fn check_poles(&self, m: usize) -> Result<()> {
        for (j, &b) in self.lower.iter().enumerate() {
            for i in 1..=m {
                let s = (i as f64 - 1.0) / 2.0 - b;
                if s < 0.0 || s.fract() != 0.0 {
                    continue;
                }
                let s = s as usize;
                if i * (s + 1) <= self.trunc {
                    return Err(Error::Pole {
                        param: j + 1,
                        value: b,
                        kappa: Partition::new(vec![s + 1; i]).unwrap().to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    fn check_convergence(&self, radius: f64) -> Result<()> {
        let (p, q) = (self.p(), self.q());
        if p > q + 1 {
            return Err(Error::Domain(format!(
                "{p}F{q} has zero radius of convergence"
            )));
        }
        if p == q + 1 && !(radius < 1.0) {
            return Err(Error::Domain(format!(
                "{p}F{q} series needs spectral radius < 1, got {radius}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypergeomResult {
    pub value: f64,
    /// Sum of absolute values of the degree-`trunc` terms.
    pub last_layer: f64,
    /// Per-degree sums, degree ascending.
    pub layers: Vec<f64>,
}

impl HypergeomResult {
    fn from_layers(layers: Vec<f64>, last_layer: f64) -> Self {
        HypergeomResult {
            value: layers.iter().sum(),
            last_layer,
            layers,
        }
    }

    fn one(trunc: usize) -> Self {
        let mut layers = vec![0.0; trunc + 1];
        layers[0] = 1.0;
        HypergeomResult::from_layers(layers, 0.0)
    }

    /// `last_layer / |value|`.
    pub fn relative_tail(&self) -> f64 {
        if self.value == 0.0 {
            return if self.last_layer == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
        }
        self.last_layer / self.value.abs()
    }
}

fn ln_factorial(k: usize) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

fn nonzero(y: &[f64]) -> Vec<f64> {
    y.iter().copied().filter(|v| *v != 0.0).collect()
}

fn spectral(y: &[f64]) -> f64 {
    y.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// One-argument series from an eigenvalue list of an `m x m` argument.
pub fn phyq_one_eigen(spec: &HypergeomSpec, y: &[f64], m: usize) -> Result<HypergeomResult> {
    if y.len() > m {
        return Err(Error::Dimension(format!(
            "{} eigenvalues for dimension {m}",
            y.len()
        )));
    }
    spec.check_convergence(spectral(y))?;
    spec.check_poles(m)?;
    let y = nonzero(y);
    if y.is_empty() {
        return Ok(HypergeomResult::one(spec.trunc));
    }
    let r = y.len();
    let mut layers = Vec::with_capacity(spec.trunc + 1);
    let mut last = 0.0;
    for k in 0..=spec.trunc {
        let table = cached_table(k, r, r)?;
        let vals = table.eval_all(&y)?;
        let lnf = ln_factorial(k);
        let mut layer = 0.0;
        let mut abs = 0.0;
        for (row, c) in table.rows().iter().zip(vals) {
            let term = spec.coefficient(&row.kappa, lnf) * c;
            layer += term;
            abs += term.abs();
        }
        layers.push(layer);
        last = abs;
    }
    Ok(HypergeomResult::from_layers(layers, last))
}

/// `pFq(a; b; X)` for a symmetric `m x m` matrix `X`.
pub fn phyq_one(spec: &HypergeomSpec, x: &DMatrix<f64>, m: usize) -> Result<HypergeomResult> {
    check_symmetric(x)?;
    if x.nrows() != m {
        return Err(Error::Dimension(format!(
            "X is {}x{}, expected {m}x{m}",
            x.nrows(),
            x.ncols()
        )));
    }
    phyq_one_eigen(spec, &eigenvalues_of(x), m)
}

/// Two-argument series from eigenvalue lists; the Haar integral runs over
/// `O(dim)` and shorter lists are padded with zeros.
pub fn phyq_two_eigen(
    spec: &HypergeomSpec,
    x: &[f64],
    y: &[f64],
    dim: usize,
) -> Result<HypergeomResult> {
    if x.len() > dim || y.len() > dim {
        return Err(Error::Dimension(format!(
            "eigenvalue lists of length {} and {} exceed dimension {dim}",
            x.len(),
            y.len()
        )));
    }
    spec.check_convergence(spectral(x) * spectral(y))?;
    spec.check_poles(dim)?;
    let x = nonzero(x);
    let y = nonzero(y);
    if x.is_empty() || y.is_empty() {
        return Ok(HypergeomResult::one(spec.trunc));
    }
    let rows = x.len().min(y.len());
    let nvars = x.len().max(y.len());
    let mut layers = Vec::with_capacity(spec.trunc + 1);
    let mut last = 0.0;
    for k in 0..=spec.trunc {
        let table = cached_table(k, rows, nvars)?;
        let cx = table.eval_all(&x)?;
        let cy = table.eval_all(&y)?;
        let lnf = ln_factorial(k);
        let mut layer = 0.0;
        let mut abs = 0.0;
        for (i, row) in table.rows().iter().enumerate() {
            let unit = zonal_unit_f64(&row.kappa, dim);
            let term = spec.coefficient(&row.kappa, lnf) * cx[i] * cy[i] / unit;
            layer += term;
            abs += term.abs();
        }
        layers.push(layer);
        last = abs;
    }
    Ok(HypergeomResult::from_layers(layers, last))
}

/// `pFq(a; b; X, Y)` for symmetric `m x m` matrices.
pub fn phyq_two(
    spec: &HypergeomSpec,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    m: usize,
) -> Result<HypergeomResult> {
    check_symmetric(x)?;
    check_symmetric(y)?;
    if x.nrows() != m || y.nrows() != m {
        return Err(Error::Dimension(format!("X and Y must both be {m}x{m}")));
    }
    phyq_two_eigen(spec, &eigenvalues_of(x), &eigenvalues_of(y), m)
}

/// `0F0(X, Y) = exp(log_scale) * series.value`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledHypergeom {
    pub series: HypergeomResult,
    pub log_scale: f64,
}

impl ScaledHypergeom {
    pub fn ln_value(&self) -> f64 {
        self.log_scale + self.series.value.ln()
    }
}

/// Two-argument `0F0` using `0F0(X, Y) = etr(cY) 0F0(X - cI, Y)`.
///
/// The shift is taken on whichever argument (padded to `dim`) minimizes
/// the product of spectral radii, centring its spectrum on zero; an
/// argument proportional to the identity collapses the series to 1.
pub fn zero_f_zero_two_shifted(
    x: &[f64],
    y: &[f64],
    dim: usize,
    trunc: usize,
) -> Result<ScaledHypergeom> {
    let pad = |v: &[f64]| {
        let mut p = v.to_vec();
        p.resize(dim, 0.0);
        p
    };
    if x.len() > dim || y.len() > dim {
        return Err(Error::Dimension(
            "eigenvalue list longer than dimension".into(),
        ));
    }
    let (xp, yp) = (pad(x), pad(y));
    let mid = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo + hi) / 2.0
    };
    let (cx, cy) = (mid(&xp), mid(&yp));
    let shifted = |v: &[f64], c: f64| v.iter().map(|e| e - c).collect::<Vec<_>>();
    let base = spectral(&xp) * spectral(&yp);
    let opt_x = spectral(&shifted(&xp, cx)) * spectral(&yp);
    let opt_y = spectral(&xp) * spectral(&shifted(&yp, cy));
    let spec = HypergeomSpec::new(vec![], vec![], trunc);
    let (series, log_scale) = if opt_x <= opt_y && opt_x < base {
        (
            phyq_two_eigen(&spec, &shifted(&xp, cx), &yp, dim)?,
            cx * yp.iter().sum::<f64>(),
        )
    } else if opt_y < base {
        (
            phyq_two_eigen(&spec, &xp, &shifted(&yp, cy), dim)?,
            cy * xp.iter().sum::<f64>(),
        )
    } else {
        (phyq_two_eigen(&spec, &xp, &yp, dim)?, 0.0)
    };
    Ok(ScaledHypergeom { series, log_scale })
}

/// Integrand of a Laplace-transform check.
#[derive(Debug, Clone)]
pub enum LaplaceIntegrand {
    /// `pFq(a; b; X)`; the transform is `Gamma_m(t) det(Z)^{-t} p+1Fq(a, t; b; Z^{-1})`.
    Hypergeom(HypergeomSpec),
    /// `C_kappa(XT)`; the transform is `Gamma_m(t, kappa) det(Z)^{-t} C_kappa(T Z^{-1})`.
    Zonal {
        kappa: Partition,
        t_matrix: DMatrix<f64>,
    },
}

/// Hill estimate of the tail index from the largest `k` order statistics
/// of `|x|`.
pub(crate) fn hill_tail_index(xs: &[f64]) -> f64 {
    let mut a: Vec<f64> = xs.iter().map(|v| v.abs()).filter(|v| *v > 0.0).collect();
    if a.len() < 50 {
        return f64::INFINITY;
    }
    a.sort_by(|p, q| q.total_cmp(p));
    let k = (a.len() / 20).max(10);
    let base = a[k];
    let s: f64 = a[..k].iter().map(|v| (v / base).ln()).sum();
    if s <= 0.0 {
        f64::INFINITY
    } else {
        k as f64 / s
    }
}

fn zonal_of_product(kappa: &Partition, left: &DMatrix<f64>, right: &DMatrix<f64>) -> Result<f64> {
    // eigenvalues of left * right via left^{1/2} right left^{1/2}
    let m = left.nrows();
    let root = sym_sqrt(left)?;
    let s = &root * right * &root;
    let table = cached_table(kappa.weight(), kappa.len().max(1).min(m), m)?;
    table.eval_eigenvalues(kappa, &eigenvalues_of(&s))
}

/// Importance-sampling check of a Laplace transform identity over positive
/// definite matrices.
///
/// Draws come from a Wishart proposal with `2t` degrees of freedom and
/// scale `Z^{-1}`, so the weight is `2^{mt} Gamma_m(t) det(Z)^{-t} etr(-ZX/2)`.
/// An estimated tail index below 2 (infinite variance) turns the report
/// inconclusive.
pub fn verify_laplace_recursion(
    integrand: &LaplaceIntegrand,
    t: f64,
    z: &DMatrix<f64>,
    n_draws: usize,
    seed: u64,
    stream: u64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let m = check_square(z)?;
    check_pd(z)?;
    if !(t > (m as f64 - 1.0) / 2.0) {
        return Err(Error::Domain(format!(
            "Laplace transform needs t > (m-1)/2, got t = {t}"
        )));
    }
    let ln_det_z = ln_det_pd(z)?;
    let zinv = inverse_pd(z)?;
    let ln_gm = ln_mv_gamma(m, t, &Partition::empty())?;

    let (target, provenance, id) = match integrand {
        LaplaceIntegrand::Hypergeom(spec) => {
            if spec.p() > spec.q() {
                return Err(Error::Domain(
                    "integrand series needs p <= q to be defined on all of X > 0".into(),
                ));
            }
            let mut up = spec.upper.clone();
            up.push(t);
            let lifted = HypergeomSpec::new(up, spec.lower.clone(), spec.trunc);
            let rhs = phyq_one(&lifted, &zinv, m)?;
            (
                (ln_gm - t * ln_det_z).exp() * rhs.value,
                format!(
                    "Gamma_m(t) det(Z)^-t {}F{}(a, t; b; Z^-1)",
                    spec.p() + 1,
                    spec.q()
                ),
                format!("laplace.{}F{}.m{m}", spec.p(), spec.q()),
            )
        }
        LaplaceIntegrand::Zonal { kappa, t_matrix } => {
            check_symmetric(t_matrix)?;
            let ln_gk = ln_mv_gamma(m, t, kappa)?;
            let c = zonal_of_product(kappa, &zinv, t_matrix)?;
            (
                (ln_gk - t * ln_det_z).exp() * c,
                "Gamma_m(t, kappa) det(Z)^-t C_kappa(T Z^-1)".to_string(),
                format!("laplace.zonal.{kappa}.m{m}"),
            )
        }
    };

    let mut rng = RandomSource::new(seed, stream);
    let ln_w0 = (m as f64) * t * std::f64::consts::LN_2 + ln_gm - t * ln_det_z;
    let mut samples = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        let x = sample_wishart_bartlett(2.0 * t, &zinv, &mut rng)?;
        let w = (ln_w0 - 0.5 * (z * &x).trace()).exp();
        let f = match integrand {
            LaplaceIntegrand::Hypergeom(spec) => {
                phyq_one_eigen(spec, &eigenvalues_of(&x), m)?.value
            }
            LaplaceIntegrand::Zonal { kappa, t_matrix } => zonal_of_product(kappa, &x, t_matrix)?,
        };
        samples.push(w * f);
    }
    let mut report =
        VerificationReport::from_samples(&id, &samples, target, seed, stream, &provenance);
    let alpha = hill_tail_index(&samples);
    report.set_extra("tail_index", alpha);
    if report.status != Status::Inconclusive && alpha < 2.0 {
        report.status = Status::Inconclusive;
        report.set_note("estimated tail index below 2: proposal variance may be infinite");
    }
    report.runtime_seconds = Some(start.elapsed().as_secs_f64());
    Ok(report)
}
