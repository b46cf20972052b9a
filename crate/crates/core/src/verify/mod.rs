//! Monte Carlo verification of the distribution-theoretic identities.
//!
//! Every check returns a [`VerificationReport`] with a z-score against a
//! closed-form target. Each check draws from its own [`RandomSource`]
//! stream, so checks may run concurrently and still reproduce exactly.

pub mod report;
pub mod stats;
mod suites;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_traits::ToPrimitive;
use serde_json::Value;

use crate::densities::{
    latent_roots_logpdf, mgf_s, paper_variants, sample_cov_logpdf, wishart_logpdf,
    CovDensityParams, LatentRootsVariant,
};
use crate::error::{Error, Result};
use crate::hypergeom::{phyq_one_eigen, phyq_two, HypergeomSpec};
use crate::matvar::linalg::{
    check_pd, check_square, check_symmetric, cholesky, eigenvalues_of, is_identity, sym_sqrt,
    vec_row_major,
};
use crate::matvar::{
    sample_haar_orthogonal, sample_mv_beta, sample_wishart, MatNormSampler, MatNormSpec,
    RandomSource, TypeTag,
};
use crate::partitions::{dim_sym_rep, partitions_of, pochhammer_partition, Partition};
use crate::zonal::{cached_table, zonal_unit_f64};

pub use report::{ReportFile, ReportHeader, Status, VerificationReport, SCHEMA_VERSION};
pub use suites::{run_suite, Suite};

/// Default Monte Carlo sample size.
pub const DEFAULT_DRAWS: usize = 100_000;

/// `C_kappa` at an eigenvalue list of an `m x m` matrix.
fn zonal_at(kappa: &Partition, y: &[f64], m: usize) -> Result<f64> {
    if kappa.is_empty() {
        return Ok(1.0);
    }
    if kappa.len() > m {
        return Ok(0.0);
    }
    cached_table(kappa.weight(), m, m)?.eval_eigenvalues(kappa, y)
}

/// Eigenvalues of `W X` for positive definite `W`, via `L' X L` with `W = L L'`.
fn product_eigenvalues(w: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    let l = cholesky(w)?.l();
    Ok(eigenvalues_of(&(l.transpose() * x * &l)))
}

fn timed(start: Instant, mut r: VerificationReport) -> VerificationReport {
    r.runtime_seconds = Some(start.elapsed().as_secs_f64());
    r
}

/// The three orthogonal-group integrals checked by [`verify_split_integrals`].
#[derive(Debug, Clone)]
pub enum SplitIntegral {
    /// `int [tr XH]^{2k} dH` for any `m x m` matrix `X`.
    TraceXH { x: DMatrix<f64>, k: usize },
    /// `int [tr AHBH']^k dH`, `A` positive definite, `B` symmetric.
    TraceAHBH {
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        k: usize,
    },
    /// `int C_kappa(AHBH') dH = C_kappa(A) C_kappa(B) / C_kappa(I)`.
    Zonal {
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        kappa: Partition,
    },
}

impl SplitIntegral {
    fn dim(&self) -> Result<usize> {
        match self {
            SplitIntegral::TraceXH { x, .. } => check_square(x),
            SplitIntegral::TraceAHBH { a, b, .. } | SplitIntegral::Zonal { a, b, .. } => {
                check_pd(a)?;
                check_symmetric(b)?;
                let m = check_square(a)?;
                if b.nrows() != m {
                    return Err(Error::Dimension("A and B differ in size".into()));
                }
                Ok(m)
            }
        }
    }

    pub fn default_id(&self) -> String {
        match self {
            SplitIntegral::TraceXH { k, .. } => format!("split.trace_xh.k{k}"),
            SplitIntegral::TraceAHBH { k, .. } => format!("split.trace_ahbh.k{k}"),
            SplitIntegral::Zonal { kappa, .. } => format!("split.zonal.{kappa}"),
        }
    }
}

/// Haar Monte Carlo check of an orthogonal-group integral.
///
/// The two trace integrals are printed with a `chi_{2kappa}(1)` weight in
/// each term. Both the weighted and unweighted sums are computed; the report
/// is scored against whichever the sample supports (smaller `|z|`), with
/// both candidates and the verdict in `extras`.
pub fn verify_split_integrals(
    item: &SplitIntegral,
    n_draws: usize,
    seed: u64,
    stream: u64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let m = item.dim()?;
    let mut rng = RandomSource::new(seed, stream);
    let eig = |s: &DMatrix<f64>| eigenvalues_of(s);

    let candidates: Option<(f64, f64)> = match item {
        SplitIntegral::TraceXH { x, k } => {
            let y = eig(&(x * x.transpose()));
            let mut with = 0.0;
            let mut without = 0.0;
            for kappa in partitions_of(*k, m) {
                let term = zonal_at(&kappa, &y, m)? / zonal_unit_f64(&kappa, m);
                with += dim_sym_rep(&kappa).to_f64().unwrap() * term;
                without += term;
            }
            Some((with, without))
        }
        SplitIntegral::TraceAHBH { a, b, k } => {
            let (ya, yb) = (eig(a), eig(b));
            let mut with = 0.0;
            let mut without = 0.0;
            for kappa in partitions_of(*k, m) {
                let term = zonal_at(&kappa, &ya, m)? * zonal_at(&kappa, &yb, m)?
                    / zonal_unit_f64(&kappa, m);
                with += dim_sym_rep(&kappa).to_f64().unwrap() * term;
                without += term;
            }
            Some((with, without))
        }
        SplitIntegral::Zonal { .. } => None,
    };

    let mut samples = Vec::with_capacity(n_draws);
    match item {
        SplitIntegral::TraceXH { x, k } => {
            for _ in 0..n_draws {
                let h = sample_haar_orthogonal(m, &mut rng);
                samples.push((x * h).trace().powi(2 * *k as i32));
            }
        }
        SplitIntegral::TraceAHBH { a, b, k } => {
            for _ in 0..n_draws {
                let h = sample_haar_orthogonal(m, &mut rng);
                samples.push((a * &h * b * h.transpose()).trace().powi(*k as i32));
            }
        }
        SplitIntegral::Zonal { a, b, kappa } => {
            let l = cholesky(a)?.l();
            for _ in 0..n_draws {
                let h = sample_haar_orthogonal(m, &mut rng);
                let s = l.transpose() * &h * b * h.transpose() * &l;
                samples.push(zonal_at(kappa, &eig(&s), m)?);
            }
        }
    }

    let id = item.default_id();
    let report = match (item, candidates) {
        (SplitIntegral::Zonal { a, b, kappa }, _) => {
            let target = zonal_at(kappa, &eig(a), m)? * zonal_at(kappa, &eig(b), m)?
                / zonal_unit_f64(kappa, m);
            VerificationReport::from_samples(
                &id,
                &samples,
                target,
                seed,
                stream,
                "C_kappa(A) C_kappa(B) / C_kappa(I_m)",
            )
        }
        (_, Some((with, without))) => {
            let r_with = VerificationReport::from_samples(&id, &samples, with, seed, stream, "");
            let r_without =
                VerificationReport::from_samples(&id, &samples, without, seed, stream, "");
            let pass_with = r_with.status == Status::Pass;
            let pass_without = r_without.status == Status::Pass;
            let supports = match (pass_with, pass_without) {
                (true, true) if with == without => "both (candidates coincide)",
                (true, true) => "both",
                (true, false) => "with_chi",
                (false, true) => "without_chi",
                (false, false) => "neither",
            };
            let (mut r, which) = if r_with.z_score.abs() <= r_without.z_score.abs() {
                (r_with.clone(), "with chi_{2kappa}(1)")
            } else {
                (r_without.clone(), "without chi_{2kappa}(1)")
            };
            r.provenance = format!(
                "sum over kappa |- k of [chi_{{2kappa}}(1)] C_kappa(..) C_kappa(..) / C_kappa(I_m); scored against the candidate {which}"
            );
            r.set_extra("target_with_chi", with);
            r.set_extra("target_without_chi", without);
            r.set_extra("z_with_chi", r_with.z_score);
            r.set_extra("z_without_chi", r_without.z_score);
            r.set_extra_value("supports", Value::String(supports.into()));
            r
        }
        _ => unreachable!(),
    };
    Ok(timed(start, report))
}

/// `E[C_kappa(WX)]` for `W ~ W_m(n, Sigma)` against `2^k (n/2)^kappa C_kappa(X)`.
///
/// The printed right side has no `Sigma`; with `Sigma != I` the report is
/// exploratory and records the `Sigma`-corrected target
/// `2^k (n/2)^kappa C_kappa(Sigma X)` as an extra.
pub fn verify_wishart_moment(
    kappa: &Partition,
    n: usize,
    x: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    n_draws: usize,
    seed: u64,
    stream: u64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    check_symmetric(x)?;
    let m = check_square(x)?;
    if check_square(sigma)? != m {
        return Err(Error::Dimension("Sigma and X differ in size".into()));
    }
    let k = kappa.weight();
    let scale = 2f64.powi(k as i32) * pochhammer_partition(n as f64 / 2.0, kappa);
    let target = scale * zonal_at(kappa, &eigenvalues_of(x), m)?;
    let mut rng = RandomSource::new(seed, stream);
    let mut samples = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        let w = sample_wishart(n, sigma, &mut rng)?;
        samples.push(zonal_at(kappa, &product_eigenvalues(&w, x)?, m)?);
    }
    let mut r = VerificationReport::from_samples(
        &format!("wishart.{kappa}.m{m}.n{n}"),
        &samples,
        target,
        seed,
        stream,
        "2^k (n/2)^kappa C_kappa(X)",
    );
    if !is_identity(sigma, 1e-14) {
        r.exploratory = true;
        let corrected = scale * zonal_at(kappa, &product_eigenvalues(sigma, x)?, m)?;
        r.set_extra("target_with_sigma", corrected);
        r.set_extra("z_with_sigma", (r.estimate - corrected) / r.std_error);
    }
    Ok(timed(start, r))
}

/// `E[C_kappa(UX)]` for multivariate Beta `U` against
/// `(n1/2)^kappa / ((n1+n2)/2)^kappa C_kappa(X)`.
pub fn verify_beta_moment(
    kappa: &Partition,
    n1: usize,
    n2: usize,
    x: &DMatrix<f64>,
    n_draws: usize,
    seed: u64,
    stream: u64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    check_symmetric(x)?;
    let m = check_square(x)?;
    let ratio = pochhammer_partition(n1 as f64 / 2.0, kappa)
        / pochhammer_partition((n1 + n2) as f64 / 2.0, kappa);
    let target = ratio * zonal_at(kappa, &eigenvalues_of(x), m)?;
    let mut rng = RandomSource::new(seed, stream);
    let mut samples = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        let u = sample_mv_beta(n1, n2, m, &mut rng)?;
        samples.push(zonal_at(kappa, &product_eigenvalues(&u, x)?, m)?);
    }
    let r = VerificationReport::from_samples(
        &format!("beta.{kappa}.m{m}.n{n1}_{n2}"),
        &samples,
        target,
        seed,
        stream,
        "(n1/2)^kappa / ((n1+n2)/2)^kappa C_kappa(X)",
    );
    Ok(timed(start, r))
}

/// Splitting scalar used for the printed moment generating function forms.
pub const MGF_VARIANT_SPLIT: f64 = 2.0;

/// `E etr(R XX')` under `T3(A, B)` against the determinant product, with
/// the two printed closed forms and their ratios to the truth as extras.
pub fn verify_mgf(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    r: &DMatrix<f64>,
    n_draws: usize,
    seed: u64,
    stream: u64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let target = mgf_s(r, a, b)?;
    let (m, n) = (a.nrows(), b.nrows());
    let sampler = MatNormSampler::new(&MatNormSpec::T3 {
        a: a.clone(),
        b: b.clone(),
    })?;
    let mut rng = RandomSource::new(seed, stream);
    let mut samples = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        let x = sampler.sample(&mut rng);
        samples.push((x.transpose() * r * &x).trace().exp());
    }
    let mut rep = VerificationReport::from_samples(
        &format!("mgf.m{m}.n{n}"),
        &samples,
        target,
        seed,
        stream,
        "prod_j det(I_m - 2 beta_j R A)^(-1/2)",
    );
    if mgf_s(&(r * 2.0), a, b).is_err() {
        rep.status = Status::Inconclusive;
        rep.set_note("E etr(2RS) does not exist: Monte Carlo variance is infinite");
    }
    let v = paper_variants(r, a, b, MGF_VARIANT_SPLIT, 60)?;
    rep.set_extra("paper_split", MGF_VARIANT_SPLIT);
    rep.set_extra("paper_product_form", v.product_form);
    rep.set_extra("paper_product_ratio", v.product_form / target);
    match v.series_form {
        Ok(s) => {
            rep.set_extra("paper_series_form", s);
            rep.set_extra("paper_series_ratio", s / target);
        }
        Err(e) => rep.set_extra_value(
            "paper_series_form",
            Value::String(format!("not evaluable: {e}")),
        ),
    }
    Ok(timed(start, rep))
}

fn offdiag(m: usize, diag: f64, off: f64) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |i, j| if i == j { diag } else { off })
}

/// A fixed valid specification of each type, used by the rank and
/// covariance checks.
pub fn reference_spec(tag: TypeTag, m: usize, n: usize) -> MatNormSpec {
    match tag {
        TypeTag::T3 => MatNormSpec::T3 {
            a: offdiag(m, 2.0, 0.5),
            b: offdiag(n, 1.0, 0.3),
        },
        TypeTag::T2 => MatNormSpec::T2 {
            a: vec![DMatrix::identity(m, m), offdiag(m, 2.0, 0.4)],
            b: vec![offdiag(n, 1.5, -0.3), DMatrix::identity(n, n)],
            alpha: DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.25, 0.75]),
        },
        TypeTag::T1Half => MatNormSpec::T1Half {
            a: (0..n)
                .map(|i| offdiag(m, 1.0 + 0.5 * i as f64, 0.2))
                .collect(),
            b: (0..n)
                .map(|i| {
                    let mut v = DVector::zeros(n);
                    v[i] += 1.0;
                    v[(i + 1) % n] += 0.5;
                    v
                })
                .collect(),
        },
        TypeTag::T1 => MatNormSpec::T1 {
            a: (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            if i == j {
                                offdiag(m, 1.0 + 0.25 * i as f64, 0.1)
                            } else {
                                DMatrix::identity(m, m) * 4.0
                            }
                        })
                        .collect()
                })
                .collect(),
            b: (0..n)
                .map(|i| {
                    let mut v = DVector::zeros(n);
                    v[i] = 1.0 + 0.5 * i as f64;
                    v
                })
                .collect(),
        },
    }
}

/// Counts draws whose `XX'` is positive definite, i.e. `X` has full
/// numerical row rank (singular values above `s_max max(m, n) eps`). The
/// target is every draw when `n >= m` and none otherwise. The extra
/// `rank_at_most_min_mn` counts draws with at most `min(m, n)` eigenvalues
/// of `XX'` above `1e-8 l_1`.
pub fn verify_rank(
    m: usize,
    n: usize,
    tag: TypeTag,
    n_draws: usize,
    seed: u64,
    stream: u64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let sampler = MatNormSampler::new(&reference_spec(tag, m, n))?;
    let mut rng = RandomSource::new(seed, stream);
    let mut pd = 0u64;
    let mut rank_ok = 0u64;
    for _ in 0..n_draws {
        let x = sampler.sample(&mut rng);
        let sv = x.singular_values();
        let tol = sv.max() * m.max(n) as f64 * f64::EPSILON;
        let rank = sv.iter().filter(|v| **v > tol).count();
        if rank == m {
            pd += 1;
        }
        let l = eigenvalues_of(&(&x * x.transpose()));
        if l.iter().filter(|v| **v > 1e-8 * l[0]).count() <= n.min(m) {
            rank_ok += 1;
        }
    }
    let target = if n >= m { n_draws as f64 } else { 0.0 };
    let mut r = VerificationReport::new(
        &format!("rank.{tag}.m{m}.n{n}"),
        seed,
        stream,
        "XX' positive definite in every draw iff n >= m",
    );
    r.n = n_draws as u64;
    r.estimate = pd as f64;
    r.target = target;
    r.std_error = 0.0;
    r.finalize_exact();
    r.set_extra("rank_at_most_min_mn", rank_ok as f64);
    Ok(timed(start, r))
}

/// Entrywise check of the empirical covariance of `vec X` (known zero
/// mean) against the inverse assembled precision. Scored on the entry with
/// the largest `|z|`; the default threshold is 5.
pub fn verify_covariance(
    spec: &MatNormSpec,
    n_draws: usize,
    seed: u64,
    stream: u64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let cov = spec.covariance()?;
    let sampler = MatNormSampler::new(spec)?;
    let (m, n) = sampler.dims();
    let d = m * n;
    let mut rng = RandomSource::new(seed, stream);
    let mut sum = DMatrix::<f64>::zeros(d, d);
    let mut sumsq = DMatrix::<f64>::zeros(d, d);
    for _ in 0..n_draws {
        let v = vec_row_major(&sampler.sample(&mut rng));
        for i in 0..d {
            for j in i..d {
                let p = v[i] * v[j];
                sum[(i, j)] += p;
                sumsq[(i, j)] += p * p;
            }
        }
    }
    let nf = n_draws as f64;
    let mut worst = (0, 0, 0.0f64, f64::NAN, f64::NAN);
    let mut zsum = 0.0;
    let mut count = 0.0;
    for i in 0..d {
        for j in i..d {
            let mean = sum[(i, j)] / nf;
            let var = (sumsq[(i, j)] / nf - mean * mean) * nf / (nf - 1.0);
            let se = (var / nf).sqrt();
            let z = (mean - cov[(i, j)]) / se;
            zsum += z.abs();
            count += 1.0;
            if !(z.abs() <= worst.2) {
                worst = (i, j, z.abs(), mean, se);
            }
        }
    }
    let mut r = VerificationReport::new(
        &format!("covariance.{}.m{m}.n{n}", spec.type_tag()),
        seed,
        stream,
        "inverse of the assembled precision, row-major vec; worst entry",
    );
    r.threshold = 5.0;
    r.n = n_draws as u64;
    r.estimate = worst.3;
    r.target = cov[(worst.0, worst.1)];
    r.std_error = worst.4;
    r.finalize();
    r.set_extra("worst_row", worst.0 as f64);
    r.set_extra("worst_col", worst.1 as f64);
    r.set_extra("mean_abs_z", zsum / count);
    Ok(timed(start, r))
}

/// Histogram of `s = XX'` for `m = 1` against the integrated sample
/// covariance density on equal-width bins over `[0, q_0.99]`. Scored on the
/// bin with the largest `|z|`.
pub fn verify_sample_cov_histogram(
    a: f64,
    b: &DMatrix<f64>,
    split: f64,
    bins: usize,
    n_draws: usize,
    seed: u64,
    stream: u64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let am = DMatrix::from_element(1, 1, a);
    let n = check_square(b)?;
    let sampler = MatNormSampler::new(&MatNormSpec::T3 {
        a: am.clone(),
        b: b.clone(),
    })?;
    let mut rng = RandomSource::new(seed, stream);
    let draws: Vec<f64> = (0..n_draws)
        .map(|_| sampler.sample(&mut rng).iter().map(|v| v * v).sum())
        .collect();
    let hi = stats::quantile(&draws, 0.99);
    let params = CovDensityParams::new(am, b.clone(), split, 40);
    let density = |s: f64| -> Result<f64> {
        Ok(sample_cov_logpdf(&DMatrix::from_element(1, 1, s), &params)?
            .log_value
            .exp())
    };
    let edges: Vec<f64> = (0..=bins).map(|i| hi * i as f64 / bins as f64).collect();
    let mut counts = vec![0u64; bins];
    for &s in &draws {
        if s < hi {
            counts[((s / hi) * bins as f64) as usize] += 1;
        }
    }
    let rule = stats::gauss_legendre(16);
    let nf = n_draws as f64;
    let mut worst: Option<(usize, f64, f64, f64)> = None;
    let mut total_p = 0.0;
    for i in 0..bins {
        // s = u^2 removes the s^{(n-2)/2} singularity at zero
        let mut err = None;
        let p = stats::integrate(
            |u| match density(u * u) {
                Ok(f) => 2.0 * u * f,
                Err(e) => {
                    err = Some(e);
                    f64::NAN
                }
            },
            edges[i].sqrt(),
            edges[i + 1].sqrt(),
            &rule,
        );
        if let Some(e) = err {
            return Err(e);
        }
        total_p += p;
        let expected = nf * p;
        let sd = (nf * p * (1.0 - p)).sqrt();
        let z = (counts[i] as f64 - expected) / sd;
        if worst.is_none_or(|w| z.abs() > ((w.1 - w.2) / w.3).abs()) {
            worst = Some((i, counts[i] as f64, expected, sd));
        }
    }
    let (bin, obs, expected, sd) = worst.ok_or_else(|| Error::InvalidArgument("no bins".into()))?;
    let mut r = VerificationReport::new(
        &format!("sample_cov.histogram.m1.n{n}"),
        seed,
        stream,
        "draw count per bin vs N * integral of the sample covariance density; worst bin",
    );
    r.n = n_draws as u64;
    r.estimate = obs;
    r.target = expected;
    r.std_error = sd;
    r.finalize();
    r.set_extra("worst_bin", bin as f64);
    r.set_extra("bins", bins as f64);
    r.set_extra("grid_upper", hi);
    r.set_extra("grid_probability", total_p);
    Ok(timed(start, r))
}

/// Invariance of the sample covariance log-density under the splitting
/// scalar: largest deviation from the value at `splits[0]`, tolerance
/// `tol`. Exploratory.
pub fn verify_split_invariance(
    s: &DMatrix<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    splits: &[f64],
    trunc: usize,
    tol: f64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut values = Vec::new();
    let mut notes = Vec::new();
    for &sp in splits {
        match sample_cov_logpdf(s, &CovDensityParams::new(a.clone(), b.clone(), sp, trunc)) {
            Ok(v) => values.push((sp, v.log_value, v.relative_tail)),
            Err(e) => notes.push(format!("a = {sp}: {e}")),
        }
    }
    let reference = values.first().map(|v| v.1).unwrap_or(f64::NAN);
    let dev = values
        .iter()
        .map(|v| (v.1 - reference).abs())
        .fold(0.0, f64::max);
    let mut r = VerificationReport::deterministic(
        &format!("sample_cov.split_invariance.m{}.n{}", a.nrows(), b.nrows()),
        splits.len() as u64,
        dev,
        0.0,
        tol,
        "max |log f(S; a) - log f(S; a0)| over the splitting scalars",
    );
    r.exploratory = true;
    for (sp, v, tail) in &values {
        r.set_extra(&format!("log_density_a{sp}"), *v);
        r.set_extra(&format!("relative_tail_a{sp}"), *tail);
    }
    if !notes.is_empty() {
        r.status = Status::Inconclusive;
        r.set_note(&notes.join("; "));
    }
    Ok(timed(start, r))
}

/// `sample_cov_logpdf(B = I, a = 2)` against `wishart_logpdf` on random
/// positive definite inputs; deterministic given the seed.
pub fn verify_wishart_reduction(
    m: usize,
    n: usize,
    cases: usize,
    tol: f64,
    seed: u64,
    stream: u64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut rng = RandomSource::new(seed, stream);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let g = crate::matvar::standard_normal_matrix(m, m + 2, &mut rng);
        let a = &g * g.transpose() / (m as f64 + 2.0) + DMatrix::identity(m, m) * 0.1;
        let w = sample_wishart(n, &a, &mut rng)?;
        let params = CovDensityParams::new(a.clone(), DMatrix::identity(n, n), 2.0, 20);
        let lhs = sample_cov_logpdf(&w, &params)?.log_value;
        let rhs = wishart_logpdf(&w, n as f64, &a)?;
        worst = worst.max((lhs - rhs).abs());
    }
    let mut r = VerificationReport::deterministic(
        &format!("sample_cov.wishart_reduction.m{m}.n{n}"),
        cases as u64,
        worst,
        0.0,
        tol,
        "max |sample_cov_logpdf(B = I, a = 2) - wishart_logpdf|",
    );
    r.seed = seed;
    r.stream = stream;
    Ok(timed(start, r))
}

/// `int int_{l1 > l2 > 0} f(l1, l2)` of the Wishart-reduced latent-root
/// density for `m = 2` by composite iterated Gauss-Legendre on
/// `[0, upper]`.
pub fn latent_roots_mass_m2(
    a: &DMatrix<f64>,
    n: usize,
    upper: f64,
    pieces: usize,
    trunc: usize,
) -> Result<f64> {
    let b = DMatrix::identity(n, n);
    let rule = stats::gauss_legendre(16);
    let f = |x: f64, y: f64| -> Result<f64> {
        Ok(
            latent_roots_logpdf(&[x, y], a, &b, trunc, LatentRootsVariant::WishartReduced)?
                .log_value
                .exp(),
        )
    };
    let mut total = 0.0;
    for p in 0..pieces {
        let (x0, x1) = (
            upper * p as f64 / pieces as f64,
            upper * (p + 1) as f64 / pieces as f64,
        );
        total += integrate_triangle_strip(&f, x0, x1, 0.0, f64::INFINITY, &rule)?;
    }
    Ok(total)
}

/// `int_{x0}^{x1} int_{y0}^{min(y1, x)} f(x, y) dy dx` with `x > y`, using
/// `sqrt` substitutions in both variables and a split of the outer range at
/// `y1`.
fn integrate_triangle_strip(
    f: &dyn Fn(f64, f64) -> Result<f64>,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    rule: &(Vec<f64>, Vec<f64>),
) -> Result<f64> {
    let lo = x0.max(y0);
    if lo >= x1 {
        return Ok(0.0);
    }
    let mut pieces = vec![];
    if y1 > lo && y1 < x1 {
        pieces.push((lo, y1));
        pieces.push((y1, x1));
    } else {
        pieces.push((lo, x1));
    }
    let mut total = 0.0;
    for (a, b) in pieces {
        let mut err = None;
        let v = stats::integrate(
            |u| {
                let x = u * u;
                let top = y1.min(x);
                if top <= y0 {
                    return 0.0;
                }
                let inner = stats::integrate(
                    |v| match f(x, v * v) {
                        Ok(val) => 2.0 * v * val,
                        Err(e) => {
                            err = Some(e);
                            f64::NAN
                        }
                    },
                    y0.sqrt(),
                    top.sqrt(),
                    rule,
                );
                2.0 * u * inner
            },
            a.sqrt(),
            b.sqrt(),
            rule,
        );
        if let Some(e) = err {
            return Err(e);
        }
        total += v;
    }
    Ok(total)
}

fn scalar_multiple_of_identity(s: &DMatrix<f64>) -> Option<f64> {
    let c = s[(0, 0)];
    is_identity(&(s / c), 1e-14 * s.nrows() as f64).then_some(c)
}

/// Eigenvalues of `S = XX'` under `T3(A, B)`, `m <= 2`.
///
/// Combines a z-test on the mean trace (target `tr A tr B`), a KS test of
/// the trace against `c chi^2_{mn}` when `A` and `B` are scalar multiples
/// of the identity, and, when `B = I` and `bins >= 2`, a joint histogram
/// test against the Wishart-reduced latent-root density. The report fails
/// if the z-test fails, the KS p-value is at most 0.01, or fewer than 95%
/// of occupied bins lie within 3 sigma.
pub fn verify_eigen_density(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    n_draws: usize,
    bins: usize,
    seed: u64,
    stream: u64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let m = check_square(a)?;
    let n = check_square(b)?;
    if m == 0 || m > 2 {
        return Err(Error::InvalidArgument(format!(
            "eigenvalue density check supports m <= 2, got {m}"
        )));
    }
    if n < m {
        return Err(Error::Domain("latent roots need n >= m".into()));
    }
    let sampler = MatNormSampler::new(&MatNormSpec::T3 {
        a: a.clone(),
        b: b.clone(),
    })?;
    let mut rng = RandomSource::new(seed, stream);
    let roots: Vec<Vec<f64>> = (0..n_draws)
        .map(|_| {
            let x = sampler.sample(&mut rng);
            eigenvalues_of(&(&x * x.transpose()))
        })
        .collect();
    let traces: Vec<f64> = roots.iter().map(|l| l.iter().sum()).collect();
    let mut r = VerificationReport::from_samples(
        &format!("eigen.m{m}.n{n}"),
        &traces,
        a.trace() * b.trace(),
        seed,
        stream,
        "mean of l1 + ... + lm vs tr A tr B; KS of the trace vs c chi^2_{mn}; joint histogram vs the B = I latent-root density",
    );
    let mut failed = Vec::new();

    match (
        scalar_multiple_of_identity(a),
        scalar_multiple_of_identity(b),
    ) {
        (Some(ca), Some(cb)) => {
            let c = ca * cb;
            let dof = (m * n) as f64;
            let (d, p) = stats::ks_one_sample(&traces, |t| stats::chi_square_cdf(t / c, dof));
            r.set_extra("ks_statistic", d);
            r.set_extra("ks_pvalue", p);
            if !(p > 0.01) {
                failed.push("KS p-value <= 0.01");
            }
        }
        _ => r.set_extra_value(
            "ks",
            Value::String("skipped: A or B not a multiple of I".into()),
        ),
    }

    if !is_identity(b, 1e-14 * n as f64) {
        r.set_extra_value("bins", Value::String("skipped: B != I".into()));
    } else if bins < 2 {
        r.set_note("single bin: histogram test is vacuous, KS only (reduced power)");
    } else {
        let (occupied, within) = eigen_histogram(&roots, a, n, bins, &mut r)?;
        let frac = if occupied == 0 {
            f64::NAN
        } else {
            within as f64 / occupied as f64
        };
        r.set_extra("bins_per_axis", bins as f64);
        r.set_extra("bins_occupied", occupied as f64);
        r.set_extra("bins_within_3sigma", within as f64);
        r.set_extra("bin_fraction", frac);
        if !(frac >= 0.95) {
            failed.push("fewer than 95% of occupied bins within 3 sigma");
        }
    }
    if r.status == Status::Pass && !failed.is_empty() {
        r.status = Status::Fail;
        r.set_note(&failed.join("; "));
    }
    Ok(timed(start, r))
}

/// `(occupied, within 3 sigma)` bin counts of the latent-root histogram.
fn eigen_histogram(
    roots: &[Vec<f64>],
    a: &DMatrix<f64>,
    n: usize,
    bins: usize,
    r: &mut VerificationReport,
) -> Result<(usize, usize)> {
    let m = a.nrows();
    let b = DMatrix::identity(n, n);
    let nf = roots.len() as f64;
    let rule = stats::gauss_legendre(12);
    let density = |l: &[f64]| -> Result<f64> {
        Ok(
            latent_roots_logpdf(l, a, &b, 40, LatentRootsVariant::WishartReduced)?
                .log_value
                .exp(),
        )
    };
    let score = |obs: u64, p: f64| -> bool {
        let sd = (nf * p * (1.0 - p)).sqrt();
        ((obs as f64 - nf * p) / sd).abs() <= 3.0
    };
    let mut occupied = 0;
    let mut within = 0;
    if m == 1 {
        let xs: Vec<f64> = roots.iter().map(|l| l[0]).collect();
        let hi = stats::quantile(&xs, 0.99);
        r.set_extra("grid_upper", hi);
        let mut counts = vec![0u64; bins];
        for &x in &xs {
            if x < hi {
                counts[((x / hi) * bins as f64) as usize] += 1;
            }
        }
        for (i, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let (e0, e1) = (
                hi * i as f64 / bins as f64,
                hi * (i + 1) as f64 / bins as f64,
            );
            let mut err = None;
            let p = stats::integrate(
                |u| match density(&[u * u]) {
                    Ok(f) => 2.0 * u * f,
                    Err(e) => {
                        err = Some(e);
                        f64::NAN
                    }
                },
                e0.sqrt(),
                e1.sqrt(),
                &rule,
            );
            if let Some(e) = err {
                return Err(e);
            }
            occupied += 1;
            if score(c, p) {
                within += 1;
            }
        }
        return Ok((occupied, within));
    }

    let l1: Vec<f64> = roots.iter().map(|l| l[0]).collect();
    let l2: Vec<f64> = roots.iter().map(|l| l[1]).collect();
    let (h1, h2) = (stats::quantile(&l1, 0.99), stats::quantile(&l2, 0.99));
    r.set_extra("grid_upper_l1", h1);
    r.set_extra("grid_upper_l2", h2);
    let mut counts = vec![0u64; bins * bins];
    for l in roots {
        if l[0] < h1 && l[1] < h2 {
            let i = ((l[0] / h1) * bins as f64) as usize;
            let j = ((l[1] / h2) * bins as f64) as usize;
            counts[i * bins + j] += 1;
        }
    }
    let f2 = |x: f64, y: f64| density(&[x, y]);
    for i in 0..bins {
        for j in 0..bins {
            let c = counts[i * bins + j];
            if c == 0 {
                continue;
            }
            let (x0, x1) = (
                h1 * i as f64 / bins as f64,
                h1 * (i + 1) as f64 / bins as f64,
            );
            let (y0, y1) = (
                h2 * j as f64 / bins as f64,
                h2 * (j + 1) as f64 / bins as f64,
            );
            let p = integrate_triangle_strip(&f2, x0, x1, y0, y1, &rule)?;
            occupied += 1;
            if score(c, p) {
                within += 1;
            }
        }
    }
    Ok((occupied, within))
}

/// Mean over Haar draws of `pFq(X^{1/2} H Y H' X^{1/2})` against the
/// two-argument series `pFq(X, Y)`, `X` positive semidefinite.
pub fn verify_haar_average(
    spec: &HypergeomSpec,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    n_draws: usize,
    seed: u64,
    stream: u64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let m = check_square(x)?;
    let target = phyq_two(spec, x, y, m)?.value;
    let root = sym_sqrt(x)?;
    let mut rng = RandomSource::new(seed, stream);
    let mut samples = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        let h = sample_haar_orthogonal(m, &mut rng);
        let s = &root * &h * y * h.transpose() * &root;
        samples.push(phyq_one_eigen(spec, &eigenvalues_of(&s), m)?.value);
    }
    let r = VerificationReport::from_samples(
        &format!("haar_average.{}F{}.m{m}", spec.p(), spec.q()),
        &samples,
        target,
        seed,
        stream,
        "pFq(a; b; X, Y) two-argument series",
    );
    Ok(timed(start, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(v.to_vec()))
    }

    #[test]
    fn split_zonal_trace_target() {
        let r = verify_split_integrals(
            &SplitIntegral::Zonal {
                a: diag(&[1.0, 2.0]),
                b: diag(&[3.0, 4.0]),
                kappa: Partition::new(vec![1]).unwrap(),
            },
            20_000,
            3,
            0,
        )
        .unwrap();
        assert!((r.target - 10.5).abs() < 1e-12);
        assert_eq!(r.status, Status::Pass, "{r:?}");
    }

    #[test]
    fn split_identity_b_zero_variance() {
        let r = verify_split_integrals(
            &SplitIntegral::Zonal {
                a: diag(&[1.0, 2.0]),
                b: DMatrix::identity(2, 2),
                kappa: Partition::new(vec![2]).unwrap(),
            },
            50,
            3,
            1,
        )
        .unwrap();
        assert_eq!(r.status, Status::Pass, "{r:?}");
    }

    #[test]
    fn split_trace_identity_constant() {
        let r = verify_split_integrals(
            &SplitIntegral::TraceAHBH {
                a: DMatrix::identity(2, 2),
                b: DMatrix::identity(2, 2),
                k: 1,
            },
            10,
            3,
            2,
        )
        .unwrap();
        assert_eq!(r.extra("target_with_chi"), Some(2.0));
        assert_eq!(r.extra("target_without_chi"), Some(2.0));
        assert_eq!(r.status, Status::Pass);
    }

    #[test]
    fn wishart_zero_and_beta_zero() {
        let z = DMatrix::zeros(2, 2);
        let k1 = Partition::new(vec![1]).unwrap();
        let r = verify_wishart_moment(&k1, 5, &z, &DMatrix::identity(2, 2), 100, 1, 0).unwrap();
        assert_eq!(r.status, Status::Pass);
        assert_eq!(r.target, 0.0);
        let r = verify_beta_moment(&k1, 4, 4, &z, 100, 1, 0).unwrap();
        assert_eq!(r.status, Status::Pass);
    }

    #[test]
    fn rank_small_cases() {
        let r = verify_rank(1, 1, TypeTag::T3, 1, 1, 0).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.status, Status::Pass);
        let r = verify_rank(3, 2, TypeTag::T3, 100, 1, 0).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert_eq!(r.status, Status::Pass);
    }

    #[test]
    fn reference_specs_are_valid() {
        for tag in [TypeTag::T1, TypeTag::T1Half, TypeTag::T2, TypeTag::T3] {
            for (m, n) in [(1, 1), (2, 2), (3, 2), (2, 3)] {
                reference_spec(tag, m, n).assemble_precision().unwrap();
            }
        }
    }

    #[test]
    fn mgf_zero_is_exact() {
        let r = verify_mgf(
            &DMatrix::identity(1, 1),
            &DMatrix::identity(1, 1),
            &DMatrix::zeros(1, 1),
            100,
            1,
            0,
        )
        .unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.status, Status::Pass);
        assert!(r.extra("paper_product_ratio").is_some());
    }

    #[test]
    fn latent_root_mass_is_one() {
        let mass = latent_roots_mass_m2(&DMatrix::identity(2, 2), 4, 80.0, 20, 10).unwrap();
        assert!((mass - 1.0).abs() < 1e-3, "{mass}");
    }

    #[test]
    fn eigen_single_bin_is_ks_only() {
        let r = verify_eigen_density(
            &DMatrix::identity(2, 2),
            &DMatrix::identity(4, 4),
            2000,
            1,
            5,
            0,
        )
        .unwrap();
        assert!(r.extras.contains_key("note"));
        assert!(r.extra("ks_pvalue").is_some());
    }
}
