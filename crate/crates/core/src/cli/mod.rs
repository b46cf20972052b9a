//! The `matnorm` command-line tool.

pub mod io;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use crate::densities::{
    latent_roots_logpdf, matnorm_logpdf, mgf_s, sample_cov_logpdf, wishart_logpdf,
    CovDensityParams, LatentRootsVariant,
};
use crate::error::{Error, Result};
use crate::hypergeom::{phyq_one, phyq_two, HypergeomSpec};
use crate::matvar::linalg::check_symmetric;
use crate::matvar::{MatNormSampler, RandomSource, TypeTag};
use crate::partitions::Partition;
use crate::verify::{run_suite, ReportFile, Suite};
use crate::zonal::{build_zonal_table, cached_table, zonal_eval, ZonalArg};

#[derive(Debug, Parser)]
#[command(
    name = "matnorm",
    version,
    about = "Zonal polynomials, matrix-argument hypergeometric functions and matrix normal distributions"
)]
pub struct Cli {
    /// Random seed (64-bit).
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Series truncation degree.
    #[arg(long, global = true, default_value_t = 30)]
    pub trunc: usize,
    /// Output file (standard output when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the exact coefficient table of C_kappa on monomials as CSV.
    ZonalTable {
        /// Degree.
        #[arg(long)]
        k: usize,
        /// Number of variables.
        #[arg(long)]
        m: usize,
    },
    /// Evaluate a function or density and print the value and tail.
    Eval(Box<EvalArgs>),
    /// Draw matrix normal samples from a spec file.
    Sample {
        /// Type tag: T1, T1half, T2 or T3.
        #[arg(value_parser = parse_tag)]
        tag: TypeTag,
        /// Spec file (key = value lines).
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 1000)]
        n_draws: usize,
        #[arg(long, default_value_t = 0)]
        stream: u64,
    },
    /// Run a verification suite and write its JSON-lines report.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        /// Include wall-clock timings (reports are then not reproducible).
        #[arg(long)]
        timings: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Function {
    Zonal,
    #[value(name = "pFq")]
    Pfq,
    Matnorm,
    Wishart,
    SampleCov,
    Mgf,
    LatentRoots,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// `zonal`, `pFq` (or a concrete `0F0`, `1F1`, ...), `matnorm`,
    /// `wishart`, `sample-cov`, `mgf` or `latent-roots`.
    pub function: String,
    /// Primary argument (matrix file).
    #[arg(long)]
    pub x: PathBuf,
    /// Second argument of a two-argument series.
    #[arg(long)]
    pub y: Option<PathBuf>,
    /// Upper parameters (comma separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub a: Vec<f64>,
    /// Lower parameters (comma separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub b: Vec<f64>,
    /// Partition, e.g. `2-1`.
    #[arg(long)]
    pub kappa: Option<String>,
    /// Row scale matrix file (A or Sigma).
    #[arg(long)]
    pub row_scale: Option<PathBuf>,
    /// Column scale matrix file (B).
    #[arg(long)]
    pub col_scale: Option<PathBuf>,
    /// Degrees of freedom (Wishart).
    #[arg(long)]
    pub dof: Option<f64>,
    /// Splitting scalar of the sample covariance density.
    #[arg(long, default_value_t = 2.0)]
    pub split: f64,
    /// Matrix normal type and spec file for `matnorm`.
    #[arg(long, value_parser = parse_tag)]
    pub tag: Option<TypeTag>,
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Latent-root density variant: `paper` or `wishart-reduced`.
    #[arg(long, default_value = "wishart-reduced")]
    pub variant: String,
}

fn parse_tag(s: &str) -> std::result::Result<TypeTag, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    io::parse_matrix(&read(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn value_lines(value: f64, tail: f64) -> String {
    format!("{value:.14e}\ntail {tail:e}\n")
}

/// `pFq` with counts taken from a concrete name such as `1F1`.
fn series_counts(name: &str) -> Option<(usize, usize)> {
    let (p, q) = name.split_once(['F', 'f'])?;
    Some((p.parse().ok()?, q.parse().ok()?))
}

fn cmd_eval(args: &EvalArgs, trunc: usize) -> Result<String> {
    let x = read_matrix(&args.x)?;
    let need = |p: &Option<PathBuf>, what: &str| -> Result<DMatrix<f64>> {
        read_matrix(
            p.as_ref()
                .ok_or_else(|| Error::InvalidArgument(format!("--{what} is required")))?,
        )
    };
    let function = match args.function.as_str() {
        f if series_counts(f).is_some() => {
            let (p, q) = series_counts(f).unwrap();
            if args.a.len() != p || args.b.len() != q {
                return Err(Error::InvalidArgument(format!(
                    "{f} needs {p} upper and {q} lower parameters, got {} and {}",
                    args.a.len(),
                    args.b.len()
                )));
            }
            Function::Pfq
        }
        f => Function::from_str(f, true)
            .map_err(|_| Error::InvalidArgument(format!("unknown function '{f}'")))?,
    };
    match function {
        Function::Zonal => {
            check_symmetric(&x)?;
            let kappa: Partition = args
                .kappa
                .as_deref()
                .ok_or_else(|| Error::InvalidArgument("--kappa is required".into()))?
                .parse()?;
            let m = x.nrows();
            if kappa.len() > m {
                return Ok(value_lines(0.0, 0.0));
            }
            let v = if kappa.is_empty() {
                1.0
            } else {
                zonal_eval(
                    &*cached_table(kappa.weight(), m, m)?,
                    &kappa,
                    ZonalArg::Matrix(&x),
                )?
            };
            Ok(value_lines(v, 0.0))
        }
        Function::Pfq => {
            let spec = HypergeomSpec::new(args.a.clone(), args.b.clone(), trunc);
            let m = x.nrows();
            let r = match &args.y {
                Some(y) => phyq_two(&spec, &x, &read_matrix(y)?, m)?,
                None => phyq_one(&spec, &x, m)?,
            };
            Ok(value_lines(r.value, r.last_layer))
        }
        Function::Matnorm => {
            let tag = args
                .tag
                .ok_or_else(|| Error::InvalidArgument("--tag is required".into()))?;
            let spec_path = args
                .spec
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("--spec is required".into()))?;
            let spec = io::parse_spec(&read(spec_path)?, tag)?;
            Ok(value_lines(matnorm_logpdf(&spec, &x)?, 0.0))
        }
        Function::Wishart => {
            let sigma = need(&args.row_scale, "row-scale")?;
            let dof = args
                .dof
                .ok_or_else(|| Error::InvalidArgument("--dof is required".into()))?;
            Ok(value_lines(wishart_logpdf(&x, dof, &sigma)?, 0.0))
        }
        Function::SampleCov => {
            let params = CovDensityParams::new(
                need(&args.row_scale, "row-scale")?,
                need(&args.col_scale, "col-scale")?,
                args.split,
                trunc,
            );
            let v = sample_cov_logpdf(&x, &params)?;
            let mut s = format!("{:.14e}\ntail {:e}\n", v.log_value, v.relative_tail);
            if let Some(w) = v.warning {
                s.push_str(&format!("warning {w}\n"));
            }
            Ok(s)
        }
        Function::Mgf => {
            let v = mgf_s(
                &x,
                &need(&args.row_scale, "row-scale")?,
                &need(&args.col_scale, "col-scale")?,
            )?;
            Ok(value_lines(v, 0.0))
        }
        Function::LatentRoots => {
            let variant: LatentRootsVariant = args.variant.parse()?;
            if x.nrows() != 1 && x.ncols() != 1 {
                return Err(Error::InvalidArgument(
                    "latent roots are read as a single row or column".into(),
                ));
            }
            let l: Vec<f64> = x.iter().copied().collect();
            let v = latent_roots_logpdf(
                &l,
                &need(&args.row_scale, "row-scale")?,
                &need(&args.col_scale, "col-scale")?,
                trunc,
                variant,
            )?;
            Ok(value_lines(v.log_value, v.relative_tail))
        }
    }
}

fn cmd_sample(tag: TypeTag, spec: &Path, n_draws: usize, seed: u64, stream: u64) -> Result<String> {
    let spec = io::parse_spec(&read(spec)?, tag)?;
    let sampler = MatNormSampler::new(&spec)?;
    let mut rng = RandomSource::new(seed, stream);
    let draws: Vec<DMatrix<f64>> = (0..n_draws).map(|_| sampler.sample(&mut rng)).collect();
    Ok(io::samples_to_csv(tag, &draws, seed, stream))
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            if e.use_stderr() {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::ZonalTable { k, m } => {
            let table = build_zonal_table(*k, *m)?;
            emit(&cli.out, &io::table_to_csv(&table))?;
            Ok(0)
        }
        Command::Eval(args) => {
            let text = cmd_eval(args, cli.trunc)?;
            emit(&cli.out, &text)?;
            Ok(0)
        }
        Command::Sample {
            tag,
            spec,
            n_draws,
            stream,
        } => {
            let text = cmd_sample(*tag, spec, *n_draws, cli.seed, *stream)?;
            emit(&cli.out, &text)?;
            Ok(0)
        }
        Command::Verify { suite, timings } => {
            let mut reports = run_suite(*suite, cli.seed);
            if !timings {
                for r in &mut reports {
                    r.runtime_seconds = None;
                }
            }
            let file = ReportFile::new(suite.as_str(), cli.seed, reports);
            let text = file.to_json_lines();
            let summary: String = file
                .reports
                .iter()
                .map(|r| r.summary_line() + "\n")
                .collect();
            match &cli.out {
                Some(_) => {
                    emit(&cli.out, &text)?;
                    print!("{summary}");
                }
                None => {
                    emit(&None, &text)?;
                    eprint!("{summary}");
                }
            }
            Ok(if file.all_pass() { 0 } else { 1 })
        }
    }
}
