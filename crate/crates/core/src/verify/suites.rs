use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};

use super::*;
use crate::hypergeom::{verify_laplace_recursion, LaplaceIntegrand};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Theorem1,
    Transforms,
    Covariance,
    Mgf,
    Eigen,
    All,
}

impl Suite {
    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Theorem1 => "theorem1",
            Suite::Transforms => "transforms",
            Suite::Covariance => "covariance",
            Suite::Mgf => "mgf",
            Suite::Eigen => "eigen",
            Suite::All => "all",
        }
    }

    /// Stream ids of a suite start at this offset, so `all` reuses the
    /// streams of each member suite.
    fn stream_base(&self) -> u64 {
        match self {
            Suite::Theorem1 => 100,
            Suite::Transforms => 200,
            Suite::Covariance => 300,
            Suite::Mgf => 400,
            Suite::Eigen => 500,
            Suite::All => 0,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem1" => Ok(Suite::Theorem1),
            "transforms" => Ok(Suite::Transforms),
            "covariance" => Ok(Suite::Covariance),
            "mgf" => Ok(Suite::Mgf),
            "eigen" => Ok(Suite::Eigen),
            "all" => Ok(Suite::All),
            _ => Err(Error::InvalidArgument(format!(
                "unknown suite '{s}' (expected theorem1, transforms, covariance, mgf, eigen or all)"
            ))),
        }
    }
}

type Job = Box<dyn Fn(u64, u64) -> Result<VerificationReport> + Send + Sync>;

struct Case {
    id: &'static str,
    stream: u64,
    job: Job,
}

fn case(
    id: &'static str,
    stream: u64,
    job: impl Fn(u64, u64) -> Result<VerificationReport> + Send + Sync + 'static,
) -> Case {
    Case {
        id,
        stream,
        job: Box::new(job),
    }
}

fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_vec(v.to_vec()))
}

fn part(p: &[usize]) -> Partition {
    Partition::new(p.to_vec()).expect("suite partitions are valid")
}

fn theorem1(base: u64) -> Vec<Case> {
    let n = DEFAULT_DRAWS;
    let a = diag(&[1.0, 2.0]);
    let b = diag(&[3.0, 4.0]);
    let x4 = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.3, 2.0]);
    let eye = DMatrix::<f64>::identity(2, 2);
    let mut cases = Vec::new();
    for (i, (id, kappa)) in [
        ("theorem1.item6.kappa1", vec![1]),
        ("theorem1.item6.kappa2", vec![2]),
        ("theorem1.item6.kappa11", vec![1, 1]),
    ]
    .into_iter()
    .enumerate()
    {
        let (a, b) = (a.clone(), b.clone());
        cases.push(case(id, base + i as u64, move |seed, s| {
            verify_split_integrals(
                &SplitIntegral::Zonal {
                    a: a.clone(),
                    b: b.clone(),
                    kappa: part(&kappa),
                },
                n,
                seed,
                s,
            )
        }));
    }
    {
        let (a, eye) = (a.clone(), eye.clone());
        cases.push(case(
            "theorem1.item6.b_identity",
            base + 3,
            move |seed, s| {
                verify_split_integrals(
                    &SplitIntegral::Zonal {
                        a: a.clone(),
                        b: eye.clone(),
                        kappa: part(&[2]),
                    },
                    n,
                    seed,
                    s,
                )
            },
        ));
    }
    {
        let eye = eye.clone();
        cases.push(case("theorem1.item5.k1", base + 4, move |seed, s| {
            verify_split_integrals(
                &SplitIntegral::TraceAHBH {
                    a: eye.clone(),
                    b: eye.clone(),
                    k: 1,
                },
                n,
                seed,
                s,
            )
        }));
    }
    {
        let (a, b) = (a.clone(), b.clone());
        cases.push(case("theorem1.item5.k2", base + 5, move |seed, s| {
            verify_split_integrals(
                &SplitIntegral::TraceAHBH {
                    a: a.clone(),
                    b: b.clone(),
                    k: 2,
                },
                n,
                seed,
                s,
            )
        }));
    }
    for (i, k) in [1usize, 2].into_iter().enumerate() {
        let x = x4.clone();
        let id = if k == 1 {
            "theorem1.item4.k1"
        } else {
            "theorem1.item4.k2"
        };
        cases.push(case(id, base + 6 + i as u64, move |seed, s| {
            verify_split_integrals(&SplitIntegral::TraceXH { x: x.clone(), k }, n, seed, s)
        }));
    }
    {
        let eye = eye.clone();
        cases.push(case("theorem1.wishart.kappa1", base + 8, move |seed, s| {
            verify_wishart_moment(&part(&[1]), 5, &diag(&[1.0, 2.0]), &eye, n, seed, s)
        }));
    }
    {
        let eye = eye.clone();
        cases.push(case("theorem1.wishart.kappa2", base + 9, move |seed, s| {
            verify_wishart_moment(&part(&[2]), 5, &eye, &eye, n, seed, s)
        }));
    }
    {
        let eye = eye.clone();
        cases.push(case("theorem1.wishart.zero", base + 10, move |seed, s| {
            verify_wishart_moment(&part(&[1]), 5, &DMatrix::zeros(2, 2), &eye, n, seed, s)
        }));
    }
    cases.push(case(
        "theorem1.wishart.general_sigma",
        base + 11,
        move |seed, s| {
            let sigma = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
            verify_wishart_moment(&part(&[1]), 5, &diag(&[1.0, 2.0]), &sigma, n, seed, s)
        },
    ));
    {
        let eye = eye.clone();
        cases.push(case(
            "theorem1.beta.kappa1.m2",
            base + 12,
            move |seed, s| verify_beta_moment(&part(&[1]), 4, 4, &eye, n, seed, s),
        ));
    }
    cases.push(case(
        "theorem1.beta.kappa1.m1",
        base + 13,
        move |seed, s| {
            verify_beta_moment(
                &part(&[1]),
                4,
                6,
                &DMatrix::from_element(1, 1, 2.0),
                n,
                seed,
                s,
            )
        },
    ));
    cases.push(case("theorem1.beta.zero", base + 14, move |seed, s| {
        verify_beta_moment(&part(&[1]), 4, 4, &DMatrix::zeros(2, 2), n, seed, s)
    }));
    cases
}

fn transforms(base: u64) -> Vec<Case> {
    let laplace_n = 20_000;
    let haar_n = 10_000;
    vec![
        case("transforms.laplace.zonal.m1", base, move |seed, s| {
            verify_laplace_recursion(
                &LaplaceIntegrand::Zonal {
                    kappa: part(&[1]),
                    t_matrix: DMatrix::from_element(1, 1, 1.0),
                },
                2.0,
                &DMatrix::from_element(1, 1, 1.0),
                laplace_n,
                seed,
                s,
            )
        }),
        case("transforms.laplace.0F0.m1", base + 1, move |seed, s| {
            verify_laplace_recursion(
                &LaplaceIntegrand::Hypergeom(HypergeomSpec::new(vec![], vec![], 60)),
                1.0,
                &DMatrix::from_element(1, 1, 2.0),
                laplace_n,
                seed,
                s,
            )
        }),
        case("transforms.laplace.1F1.m1", base + 2, move |seed, s| {
            verify_laplace_recursion(
                &LaplaceIntegrand::Hypergeom(HypergeomSpec::new(vec![0.5], vec![1.5], 60)),
                1.0,
                &DMatrix::from_element(1, 1, 3.0),
                laplace_n,
                seed,
                s,
            )
        }),
        case("transforms.laplace.zonal.m2", base + 3, move |seed, s| {
            verify_laplace_recursion(
                &LaplaceIntegrand::Zonal {
                    kappa: part(&[2]),
                    t_matrix: DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]),
                },
                2.5,
                &diag(&[1.5, 2.5]),
                laplace_n,
                seed,
                s,
            )
        }),
        case("transforms.laplace.0F0.m2", base + 4, move |seed, s| {
            verify_laplace_recursion(
                &LaplaceIntegrand::Hypergeom(HypergeomSpec::new(vec![], vec![], 40)),
                1.5,
                &diag(&[2.5, 3.0]),
                laplace_n,
                seed,
                s,
            )
        }),
        case(
            "transforms.haar_average.1F1.m2",
            base + 5,
            move |seed, s| {
                verify_haar_average(
                    &HypergeomSpec::new(vec![0.5], vec![1.5], 20),
                    &diag(&[0.5, 0.3]),
                    &diag(&[0.8, -0.2]),
                    haar_n,
                    seed,
                    s,
                )
            },
        ),
        case(
            "transforms.haar_average.0F0.m3",
            base + 6,
            move |seed, s| {
                verify_haar_average(
                    &HypergeomSpec::new(vec![], vec![], 15),
                    &diag(&[0.4, 0.3, 0.1]),
                    &diag(&[1.0, 0.5, -0.5]),
                    haar_n,
                    seed,
                    s,
                )
            },
        ),
    ]
}

fn covariance(base: u64) -> Vec<Case> {
    let n = DEFAULT_DRAWS;
    let mut cases = vec![
        case("covariance.rank.T3.m3n3", base, |seed, s| {
            verify_rank(3, 3, TypeTag::T3, 10_000, seed, s)
        }),
        case("covariance.rank.T3.m3n2", base + 1, |seed, s| {
            verify_rank(3, 2, TypeTag::T3, 10_000, seed, s)
        }),
        case("covariance.rank.T2.m3n3", base + 2, |seed, s| {
            verify_rank(3, 3, TypeTag::T2, 10_000, seed, s)
        }),
    ];
    for (i, (id, tag)) in [
        ("covariance.fidelity.T1", TypeTag::T1),
        ("covariance.fidelity.T1half", TypeTag::T1Half),
        ("covariance.fidelity.T2", TypeTag::T2),
        ("covariance.fidelity.T3", TypeTag::T3),
    ]
    .into_iter()
    .enumerate()
    {
        cases.push(case(id, base + 3 + i as u64, move |seed, s| {
            verify_covariance(&reference_spec(tag, 2, 2), n, seed, s)
        }));
    }
    cases.push(case(
        "covariance.sample_cov_histogram",
        base + 7,
        move |seed, s| {
            verify_sample_cov_histogram(1.0, &DMatrix::identity(1, 1), 2.0, 20, n, seed, s)
        },
    ));
    cases.push(case("covariance.wishart_reduction", base + 8, |seed, s| {
        verify_wishart_reduction(2, 5, 100, 1e-10, seed, s)
    }));
    cases.push(case("covariance.split_invariance", base + 9, |_, _| {
        let sm = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.8]);
        verify_split_invariance(&sm, &a, &diag(&[1.0, 1.5]), &[2.0, 1.0, 4.0], 40, 1e-6)
    }));
    cases
}

fn mgf(base: u64) -> Vec<Case> {
    let n = DEFAULT_DRAWS;
    vec![
        case("mgf.zero", base, |seed, s| {
            verify_mgf(
                &diag(&[1.0]),
                &diag(&[1.0]),
                &DMatrix::zeros(1, 1),
                10_000,
                seed,
                s,
            )
        }),
        case("mgf.scalar", base + 1, move |seed, s| {
            verify_mgf(&diag(&[1.0]), &diag(&[1.0]), &diag(&[0.1]), n, seed, s)
        }),
        case("mgf.m2n3", base + 2, move |seed, s| {
            verify_mgf(
                &DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]),
                &DMatrix::identity(3, 3),
                &(DMatrix::identity(2, 2) * 0.05),
                n,
                seed,
                s,
            )
        }),
        case("mgf.m2n4", base + 3, move |seed, s| {
            verify_mgf(
                &DMatrix::identity(2, 2),
                &diag(&[1.0, 1.0, 2.0, 2.0]),
                &(DMatrix::identity(2, 2) * 0.05),
                n,
                seed,
                s,
            )
        }),
    ]
}

fn eigen(base: u64) -> Vec<Case> {
    let n = DEFAULT_DRAWS;
    vec![
        case("eigen.m2n4", base, move |seed, s| {
            verify_eigen_density(
                &DMatrix::identity(2, 2),
                &DMatrix::identity(4, 4),
                n,
                10,
                seed,
                s,
            )
        }),
        case("eigen.m1n3", base + 1, move |seed, s| {
            verify_eigen_density(&diag(&[2.0]), &DMatrix::identity(3, 3), n, 20, seed, s)
        }),
        case("eigen.m2n4.normalization", base + 2, |_, _| {
            let mass = latent_roots_mass_m2(&DMatrix::identity(2, 2), 4, 80.0, 20, 10)?;
            Ok(VerificationReport::deterministic(
                "eigen.m2n4.normalization",
                1,
                mass,
                1.0,
                1e-3,
                "quadrature of the B = I latent-root density over l1 > l2 > 0",
            ))
        }),
    ]
}

fn cases_for(suite: Suite) -> Vec<Case> {
    match suite {
        Suite::Theorem1 => theorem1(Suite::Theorem1.stream_base()),
        Suite::Transforms => transforms(Suite::Transforms.stream_base()),
        Suite::Covariance => covariance(Suite::Covariance.stream_base()),
        Suite::Mgf => mgf(Suite::Mgf.stream_base()),
        Suite::Eigen => eigen(Suite::Eigen.stream_base()),
        Suite::All => [
            Suite::Theorem1,
            Suite::Transforms,
            Suite::Covariance,
            Suite::Mgf,
            Suite::Eigen,
        ]
        .into_iter()
        .flat_map(cases_for)
        .collect(),
    }
}

/// Runs a suite's fixed test list. Cases run on worker threads, each on its
/// own stream, and are returned in suite order. A case that errors becomes
/// a failing report carrying the error message.
pub fn run_suite(suite: Suite, seed: u64) -> Vec<VerificationReport> {
    let cases = cases_for(suite);
    let results: Vec<Mutex<Option<VerificationReport>>> =
        cases.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(cases.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= cases.len() {
                    break;
                }
                let c = &cases[i];
                let mut r = match (c.job)(seed, c.stream) {
                    Ok(r) => r,
                    Err(e) => {
                        let mut r =
                            VerificationReport::new(c.id, seed, c.stream, "evaluation error");
                        r.status = Status::Fail;
                        r.set_note(&e.to_string());
                        r
                    }
                };
                r.test_id = c.id.to_string();
                r.seed = seed;
                r.stream = c.stream;
                *results[i].lock().unwrap() = Some(r);
            });
        }
    });
    results
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every case ran"))
        .collect()
}
