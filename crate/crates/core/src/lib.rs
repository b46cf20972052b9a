//! Zonal polynomials, hypergeometric functions of matrix argument and the
//! distribution theory of matrix normal matrices.
//!
//! Modules, bottom up:
//!
//! * [`partitions`]: integer partitions, partition Pochhammer symbols and
//!   the multivariate gamma function;
//! * [`zonal`]: exact coefficient tables of `C_kappa` on monomials;
//! * [`hypergeom`]: truncated `pFq` series in one and two matrix arguments;
//! * [`matvar`]: random sources, Haar and matrix normal samplers, symmetric
//!   linear algebra;
//! * [`densities`]: density and transform evaluators;
//! * [`verify`]: Monte Carlo verification suites;
//! * [`cli`]: the `matnorm` command-line tool.

// `!(x > 0.0)` style guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod densities;
pub mod error;
pub mod hypergeom;
pub mod matvar;
pub mod partitions;
pub mod verify;
pub mod zonal;

pub use error::{Error, Result};
pub use hypergeom::{phyq_one, phyq_two, HypergeomResult, HypergeomSpec};
pub use matvar::{MatNormSpec, RandomSource, TypeTag};
pub use partitions::Partition;
pub use verify::{run_suite, Status, Suite, VerificationReport};
pub use zonal::{build_zonal_table, zonal_eval, Normalization, ZonalArg, ZonalTable};
