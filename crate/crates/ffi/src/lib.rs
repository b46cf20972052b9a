//! C ABI over the `matnorm` library.
//!
//! Matrices cross the boundary as row-major `double` arrays with explicit
//! dimensions. Every function returns an [`MnStatus`]; on failure the
//! message is available from [`mn_last_error_message`] on the same thread.
//! Panics are caught and reported as [`MnStatus::Panic`].

use std::cell::RefCell;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use matnorm::matvar::{sample_haar_orthogonal, RandomSource};
use matnorm::zonal::zonal_unit_f64;
use matnorm::{
    build_zonal_table, phyq_one, phyq_two, Error, HypergeomSpec, MatNormSpec, Partition, ZonalTable,
};
use nalgebra::DMatrix;

/// Result code of every `mn_*` call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Pole = 4,
    Indefinite = 5,
    Internal = 6,
    Panic = 7,
}

/// Opaque zonal coefficient table.
pub struct MnZonalTable {
    table: ZonalTable,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> MnStatus {
    match e {
        Error::InvalidArgument(_)
        | Error::NotSymmetric(_)
        | Error::Dimension(_)
        | Error::Parse(_) => MnStatus::InvalidArgument,
        Error::Domain(_) | Error::Vanishing { .. } => MnStatus::Domain,
        Error::Pole { .. } => MnStatus::Pole,
        Error::NotPositiveDefinite(_) | Error::IndefinitePrecision { .. } => MnStatus::Indefinite,
        Error::Internal(_) | Error::Io(_) => MnStatus::Internal,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            MnStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            MnStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            MnStatus::Panic
        }
    }
}

unsafe fn input<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn matrix(
    p: *const f64,
    rows: usize,
    cols: usize,
    what: &'static str,
) -> Result<DMatrix<f64>, Failure> {
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension(format!("{what} has a zero dimension")).into());
    }
    Ok(DMatrix::from_row_slice(
        rows,
        cols,
        input(p, rows * cols, what)?,
    ))
}

unsafe fn partition(parts: *const usize, len: usize) -> Result<Partition, Failure> {
    if len == 0 {
        return Ok(Partition::empty());
    }
    if parts.is_null() {
        return Err(Failure::Null("parts"));
    }
    Ok(Partition::new(slice::from_raw_parts(parts, len).to_vec())?)
}

/// Copies the calling thread's last error message into `buf` (always
/// NUL-terminated when `len > 0`) and returns the full message length
/// excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mn_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds the exact table of `C_kappa` for all `kappa |- k` in `m`
/// variables. Release with [`mn_zonal_table_free`].
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mn_zonal_table_build(
    k: usize,
    m: usize,
    out: *mut *mut MnZonalTable,
) -> MnStatus {
    guard(|| {
        let out = output(out, "out")?;
        let table = build_zonal_table(k, m)?;
        *out = Box::into_raw(Box::new(MnZonalTable { table }));
        Ok(())
    })
}

/// # Safety
/// `table` must be null or come from [`mn_zonal_table_build`], and must not
/// be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mn_zonal_table_free(table: *mut MnZonalTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Number of partitions (rows) in the table.
///
/// # Safety
/// `table` must be a live table; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mn_zonal_table_rows(
    table: *const MnZonalTable,
    out: *mut usize,
) -> MnStatus {
    guard(|| {
        let t = table.as_ref().ok_or(Failure::Null("table"))?;
        *output(out, "out")? = t.table.rows().len();
        Ok(())
    })
}

/// `C_kappa` at a matrix with eigenvalues `eig[0..n_eig]`.
///
/// # Safety
/// `parts` and `eig` must point to `n_parts` and `n_eig` readable values;
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mn_zonal_table_eval(
    table: *const MnZonalTable,
    parts: *const usize,
    n_parts: usize,
    eig: *const f64,
    n_eig: usize,
    out: *mut f64,
) -> MnStatus {
    guard(|| {
        let t = table.as_ref().ok_or(Failure::Null("table"))?;
        let kappa = partition(parts, n_parts)?;
        let y = input(eig, n_eig, "eig")?;
        *output(out, "out")? = t.table.eval_eigenvalues(&kappa, y)?;
        Ok(())
    })
}

/// `C_kappa(I_m)`.
///
/// # Safety
/// `parts` must point to `n_parts` readable values; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mn_zonal_unit(
    parts: *const usize,
    n_parts: usize,
    m: usize,
    out: *mut f64,
) -> MnStatus {
    guard(|| {
        let kappa = partition(parts, n_parts)?;
        *output(out, "out")? = zonal_unit_f64(&kappa, m);
        Ok(())
    })
}

unsafe fn series_spec(
    a: *const f64,
    p: usize,
    b: *const f64,
    q: usize,
    trunc: usize,
) -> Result<HypergeomSpec, Failure> {
    Ok(HypergeomSpec::new(
        input(a, p, "a")?.to_vec(),
        input(b, q, "b")?.to_vec(),
        trunc,
    ))
}

/// One-argument `pFq(a; b; X)` for a symmetric `m x m` matrix `x`,
/// truncated at degree `trunc`. `tail` receives the absolute size of the
/// last degree layer.
///
/// # Safety
/// Array arguments must point to the stated number of readable values;
/// `value` and `tail` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mn_pfq(
    a: *const f64,
    p: usize,
    b: *const f64,
    q: usize,
    x: *const f64,
    m: usize,
    trunc: usize,
    value: *mut f64,
    tail: *mut f64,
) -> MnStatus {
    guard(|| {
        let spec = series_spec(a, p, b, q, trunc)?;
        let x = matrix(x, m, m, "x")?;
        let (value, tail) = (output(value, "value")?, output(tail, "tail")?);
        let r = phyq_one(&spec, &x, m)?;
        *value = r.value;
        *tail = r.last_layer;
        Ok(())
    })
}

/// Two-argument `pFq(a; b; X, Y)` for symmetric `m x m` matrices.
///
/// # Safety
/// As [`mn_pfq`], with `y` an `m x m` array.
#[no_mangle]
pub unsafe extern "C" fn mn_pfq_two(
    a: *const f64,
    p: usize,
    b: *const f64,
    q: usize,
    x: *const f64,
    y: *const f64,
    m: usize,
    trunc: usize,
    value: *mut f64,
    tail: *mut f64,
) -> MnStatus {
    guard(|| {
        let spec = series_spec(a, p, b, q, trunc)?;
        let x = matrix(x, m, m, "x")?;
        let y = matrix(y, m, m, "y")?;
        let (value, tail) = (output(value, "value")?, output(tail, "tail")?);
        let r = phyq_two(&spec, &x, &y, m)?;
        *value = r.value;
        *tail = r.last_layer;
        Ok(())
    })
}

/// Log density of `W_m(dof, sigma)` at `w`.
///
/// # Safety
/// `w` and `sigma` must point to `m * m` readable values; `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn mn_wishart_logpdf(
    w: *const f64,
    m: usize,
    dof: f64,
    sigma: *const f64,
    out: *mut f64,
) -> MnStatus {
    guard(|| {
        let w = matrix(w, m, m, "w")?;
        let sigma = matrix(sigma, m, m, "sigma")?;
        *output(out, "out")? = matnorm::densities::wishart_logpdf(&w, dof, &sigma)?;
        Ok(())
    })
}

/// Log density at the `m x n` matrix `x` of the matrix normal law with
/// row-major `Cov(x_ij, x_kl) = a_ik b_jl`.
///
/// # Safety
/// `x`, `a` and `b` must point to `m * n`, `m * m` and `n * n` readable
/// values; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mn_matnorm_logpdf_t3(
    x: *const f64,
    m: usize,
    n: usize,
    a: *const f64,
    b: *const f64,
    out: *mut f64,
) -> MnStatus {
    guard(|| {
        let x = matrix(x, m, n, "x")?;
        let spec = MatNormSpec::T3 {
            a: matrix(a, m, m, "a")?,
            b: matrix(b, n, n, "b")?,
        };
        *output(out, "out")? = matnorm::densities::matnorm_logpdf(&spec, &x)?;
        Ok(())
    })
}

/// Haar-distributed orthogonal `m x m` matrix written row-major to `out`.
/// Identical `(seed, stream)` give identical matrices.
///
/// # Safety
/// `out` must point to `m * m` writable values.
#[no_mangle]
pub unsafe extern "C" fn mn_sample_haar(
    m: usize,
    seed: u64,
    stream: u64,
    out: *mut f64,
) -> MnStatus {
    guard(|| {
        if m == 0 {
            return Err(Error::Dimension("m must be positive".into()).into());
        }
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let h = sample_haar_orthogonal(m, &mut RandomSource::new(seed, stream));
        let dst = slice::from_raw_parts_mut(out, m * m);
        for i in 0..m {
            for j in 0..m {
                dst[i * m + j] = h[(i, j)];
            }
        }
        Ok(())
    })
}
