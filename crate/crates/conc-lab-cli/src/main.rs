//! Experiment runner: declarative configs, seeded reproducible runs,
//! JSON/CSV/Markdown reports with fixed exit codes (0 pass, 1 usage/config,
//! 2 check failure, 3 non-convergence/rejection).

mod config;
mod errors;
mod experiments;
mod report;

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use config::*;
use errors::{exit_code_for, CliError, CliResult};

#[derive(Parser)]
#[command(name = "conc-lab", version, about = "concentration-of-measure experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GlobalOpts {
    /// master seed for every stream in the run
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// worker threads (0 = logical cores); env CONC_LAB_THREADS as fallback
    #[arg(long)]
    threads: Option<usize>,
    /// output directory for reports and artifacts
    #[arg(long, default_value = "out")]
    out: String,
    /// report format: json, csv (adds curve exports) or md (adds markdown)
    #[arg(long, default_value = "json")]
    format: OutputFormat,
    /// run name (report file stem)
    #[arg(long)]
    name: Option<String>,
    /// write the equivalent config file and exit without running
    #[arg(long)]
    dump_config: Option<PathBuf>,
}

impl GlobalOpts {
    fn apply(&self, default_name: &str, experiment: Experiment) -> ExperimentConfig {
        ExperimentConfig {
            name: self.name.clone().unwrap_or_else(|| default_name.into()),
            seed: self.seed,
            threads: self.threads.unwrap_or(0),
            out_dir: self.out.clone(),
            format: self.format.clone(),
            experiment,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Tail-exponent and envelope checks for a sampler family
    Tail {
        #[command(flatten)]
        global: GlobalOpts,
        #[arg(long, default_value = "gaussian")]
        model: ModelFamily,
        #[arg(long, value_delimiter = ',', default_value = "256")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value = "random_unit")]
        observation: String,
        #[arg(long, value_delimiter = ',', default_value = "1.7,2.3")]
        q_range: Vec<f64>,
        #[arg(long, default_value_t = 5)]
        fits: usize,
        #[arg(long)]
        check_envelope: bool,
        #[arg(long)]
        lq_exponent: Option<f64>,
    },
    /// Observable-diameter checks, including the replicated counterexample
    Diameter {
        #[command(flatten)]
        global: GlobalOpts,
        #[arg(long, default_value = "gaussian")]
        model: ModelFamily,
        #[arg(long, value_delimiter = ',', default_value = "64,1024")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 30_000)]
        n: usize,
        #[arg(long)]
        replicate_scalar: bool,
        /// lo,hi for the dimension-free expectation
        #[arg(long, value_delimiter = ',', default_value = "0.9,1.1")]
        range: Vec<f64>,
        /// instead expect normalized-sum spread >= factor * sqrt(dim)
        #[arg(long)]
        sqrt_dim_factor: Option<f64>,
    },
    /// Entry-wise product tails or sample-covariance diameter scaling
    Product {
        #[command(flatten)]
        global: GlobalOpts,
        #[arg(long, default_value = "scalars")]
        mode: String,
        /// scalar mode: factor counts, e.g. 2,3
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        factors: Vec<usize>,
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        /// covariance mode: square dimensions
        #[arg(long, value_delimiter = ',', default_value = "128,256,512")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 2.0)]
        stability: f64,
    },
    /// Bilinear-form variance identity, far-tail exponent, envelope pass
    HansonWright {
        #[command(flatten)]
        global: GlobalOpts,
        #[arg(long, default_value_t = 500)]
        dim: usize,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        matrices: usize,
    },
    /// X D Y^T functionals: diameter scaling or mean-gap comparison
    Xdy {
        #[command(flatten)]
        global: GlobalOpts,
        #[arg(long, default_value = "action")]
        mode: String,
        #[arg(long, value_delimiter = ',', default_value = "64,128,256")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 3.0)]
        stability: f64,
        #[arg(long, default_value_t = 16)]
        p_fixed: usize,
    },
    /// Norm growth against the norm degree across spaces
    NormDegree {
        #[command(flatten)]
        global: GlobalOpts,
        #[arg(long, default_value_t = 2_000)]
        trials: usize,
        #[arg(long, default_value_t = 2.0)]
        stability: f64,
        #[arg(long, default_value_t = 256)]
        gamma_oracle_dim: usize,
    },
    /// Resolvent deterministic equivalent, scaling and rank-one identities
    Resolvent {
        #[command(flatten)]
        global: GlobalOpts,
        #[arg(long, default_value_t = 100)]
        p: usize,
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[arg(long, default_value_t = 0.3)]
        d: f64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0.1)]
        rel_error_max: f64,
        #[arg(long, value_delimiter = ',', default_value = "100,200,400")]
        scaling_ns: Vec<usize>,
        #[arg(long, default_value_t = 1_000)]
        loo_draws: usize,
    },
    /// Robust-regression fixed point and leave-one-out coupling
    Robust {
        #[command(flatten)]
        global: GlobalOpts,
        #[arg(long, default_value_t = 0.2)]
        amplitude: f64,
        #[arg(long, default_value_t = 1.0)]
        offset: f64,
        /// p:n pairs
        #[arg(long, value_delimiter = ',', default_value = "50:200,100:400,200:800")]
        shapes: Vec<String>,
        #[arg(long, default_value_t = 2.0)]
        coupling_ratio_max: f64,
    },
    /// Centered-moment bounds for gaussian, laplace and product observations
    Moments {
        #[command(flatten)]
        global: GlobalOpts,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
        orders: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "4,4")]
        constants: Vec<f64>,
    },
    /// Run a single experiment from a config file
    Run {
        #[arg(long)]
        config: PathBuf,
        /// override the config's output directory
        #[arg(long)]
        out: Option<String>,
        /// override the config's seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run every config in a directory and emit a summary table
    Reproduce {
        /// directory of *.toml experiment configs
        suite: PathBuf,
        #[arg(long, default_value = "out")]
        out: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn pair(v: &[f64], what: &str) -> CliResult<[f64; 2]> {
    if v.len() != 2 {
        return Err(CliError::Config(format!("{what} needs exactly two values")));
    }
    Ok([v[0], v[1]])
}

fn build_config(cmd: &Command) -> CliResult<Option<(ExperimentConfig, Option<PathBuf>)>> {
    let built = match cmd {
        Command::Tail {
            global,
            model,
            dims,
            n,
            observation,
            q_range,
            fits,
            check_envelope,
            lq_exponent,
        } => {
            let obs = match observation.as_str() {
                "random_unit" => ObservationKind::RandomUnit,
                "coordinate" => ObservationKind::Coordinate,
                other => {
                    return Err(CliError::Config(format!(
                        "unknown observation '{other}' (random_unit|coordinate)"
                    )))
                }
            };
            Some((
                global.apply(
                    "tail",
                    Experiment::Tail(TailConfig {
                        model: model.clone(),
                        lq_exponent: *lq_exponent,
                        dims: dims.clone(),
                        n_samples: *n,
                        observation: obs,
                        q_range: pair(q_range, "--q-range")?,
                        fits_per_dim: *fits,
                        envelope_constants: [2.0, std::f64::consts::SQRT_2],
                        fit_window: [1e-3, 1e-1],
                        confidence_delta: 0.05,
                        check_envelope: *check_envelope,
                    }),
                ),
                global.dump_config.clone(),
            ))
        }
        Command::Diameter {
            global,
            model,
            dims,
            n,
            replicate_scalar,
            range,
            sqrt_dim_factor,
        } => {
            let expect = match sqrt_dim_factor {
                Some(f) => DiameterExpectation::SqrtDim { factor: *f },
                None => {
                    let r = pair(range, "--range")?;
                    DiameterExpectation::OrderOne { lo: r[0], hi: r[1] }
                }
            };
            Some((
                global.apply(
                    "diameter",
                    Experiment::Diameter(DiameterConfig {
                        model: model.clone(),
                        dims: dims.clone(),
                        n_samples: *n,
                        observations: 16,
                        replicate_scalar: *replicate_scalar,
                        expect,
                    }),
                ),
                global.dump_config.clone(),
            ))
        }
        Command::Product {
            global,
            mode,
            factors,
            n,
            dims,
            trials,
            stability,
        } => {
            let experiment = match mode.as_str() {
                "scalars" => Experiment::Product(ProductConfig {
                    mode: ProductMode::Scalars,
                    factor_checks: factors
                        .iter()
                        .map(|m| FactorCheck {
                            m: *m,
                            q_range: [2.0 / *m as f64 - 0.2, 2.0 / *m as f64 + 0.2],
                        })
                        .collect(),
                    n_samples: *n,
                    dims: Vec::new(),
                    trials: 0,
                    stability_factor: 0.0,
                    fit_window: [1e-3, 1e-1],
                }),
                "covariance" => Experiment::Product(ProductConfig {
                    mode: ProductMode::Covariance,
                    factor_checks: Vec::new(),
                    n_samples: 0,
                    dims: dims.clone(),
                    trials: *trials,
                    stability_factor: *stability,
                    fit_window: [1e-3, 1e-1],
                }),
                other => {
                    return Err(CliError::Config(format!(
                        "unknown product mode '{other}' (scalars|covariance)"
                    )))
                }
            };
            Some((global.apply("product", experiment), global.dump_config.clone()))
        }
        Command::HansonWright {
            global,
            dim,
            n,
            matrices,
        } => Some((
            global.apply(
                "hanson_wright",
                Experiment::HansonWright(HansonWrightConfig {
                    dim: *dim,
                    n_samples: *n,
                    n_matrices: *matrices,
                    variance_ratio_range: [0.95, 1.05],
                    far_tail_q_range: [0.8, 1.2],
                    envelope_constants: [4.0, 4.0],
                    fit_window: [1e-3, 1e-1],
                }),
            ),
            global.dump_config.clone(),
        )),
        Command::Xdy {
            global,
            mode,
            dims,
            trials,
            stability,
            p_fixed,
        } => {
            let m = match mode.as_str() {
                "action" => XdyMode::Action,
                "mean" => XdyMode::Mean,
                other => {
                    return Err(CliError::Config(format!(
                        "unknown xdy mode '{other}' (action|mean)"
                    )))
                }
            };
            Some((
                global.apply(
                    "xdy",
                    Experiment::Xdy(XdyConfig {
                        mode: m,
                        dims: dims.clone(),
                        trials: *trials,
                        observations: 16,
                        stability_factor: *stability,
                        p_fixed: *p_fixed,
                    }),
                ),
                global.dump_config.clone(),
            ))
        }
        Command::NormDegree {
            global,
            trials,
            stability,
            gamma_oracle_dim,
        } => Some((
            global.apply(
                "norm_degree",
                Experiment::NormDegree(NormDegreeConfig {
                    cases: vec![
                        NormCaseConfig {
                            case: NormCase::Euclidean,
                            dims: vec![64, 256, 1024],
                        },
                        NormCaseConfig {
                            case: NormCase::Sup,
                            dims: vec![256, 1024, 4096],
                        },
                        NormCaseConfig {
                            case: NormCase::Spectral,
                            dims: vec![64, 128, 200],
                        },
                        NormCaseConfig {
                            case: NormCase::Frobenius,
                            dims: vec![32, 64, 128],
                        },
                        NormCaseConfig {
                            case: NormCase::Diag,
                            dims: vec![32, 64, 128],
                        },
                    ],
                    trials: *trials,
                    stability_factor: *stability,
                    gamma_oracle_dim: *gamma_oracle_dim,
                    gamma_oracle_rel_tol: 0.01,
                }),
            ),
            global.dump_config.clone(),
        )),
        Command::Resolvent {
            global,
            p,
            n,
            d,
            trials,
            rel_error_max,
            scaling_ns,
            loo_draws,
        } => Some((
            global.apply(
                "resolvent",
                Experiment::Resolvent(ResolventConfig {
                    p: *p,
                    n: *n,
                    d_value: *d,
                    trials: *trials,
                    rel_error_max: *rel_error_max,
                    scaling_ns: scaling_ns.clone(),
                    scaling_ratio_factor: 3.0,
                    loo_draws: *loo_draws,
                    loo_tolerance: 1e-8,
                }),
            ),
            global.dump_config.clone(),
        )),
        Command::Robust {
            global,
            amplitude,
            offset,
            shapes,
            coupling_ratio_max,
        } => {
            let parsed: CliResult<Vec<[usize; 2]>> = shapes
                .iter()
                .map(|s| {
                    let (p, n) = s.split_once(':').ok_or_else(|| {
                        CliError::Config(format!("shape '{s}' must be p:n"))
                    })?;
                    Ok([
                        p.parse::<usize>()
                            .map_err(|e| CliError::Config(e.to_string()))?,
                        n.parse::<usize>()
                            .map_err(|e| CliError::Config(e.to_string()))?,
                    ])
                })
                .collect();
            Some((
                global.apply(
                    "robust",
                    Experiment::Robust(RobustConfig {
                        amplitude: *amplitude,
                        offset: *offset,
                        shapes: parsed?,
                        coupling_ratio_max: *coupling_ratio_max,
                        tolerance: 1e-12,
                        max_iterations: 500,
                    }),
                ),
                global.dump_config.clone(),
            ))
        }
        Command::Moments {
            global,
            n,
            orders,
            constants,
        } => Some((
            global.apply(
                "moments",
                Experiment::Moments(MomentsConfig {
                    n_samples: *n,
                    envelope_constants: pair(constants, "--constants")?,
                    orders: orders.clone(),
                }),
            ),
            global.dump_config.clone(),
        )),
        Command::Run { .. } | Command::Reproduce { .. } => None,
    };
    Ok(built)
}

fn init_threads(threads: usize) {
    // flag/config value wins; CONC_LAB_THREADS is the fallback; 0 keeps the
    // default pool (all logical cores)
    let resolved = if threads > 0 {
        threads
    } else {
        std::env::var("CONC_LAB_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(0)
    };
    if resolved > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(resolved)
            .build_global();
    }
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn execute(cfg: &ExperimentConfig) -> CliResult<report::RunReport> {
    let started = now_ms();
    let t0 = std::time::Instant::now();
    let run_report = experiments::run(cfg)?;
    report::write_report(cfg, &run_report, started, t0.elapsed().as_millis())?;
    Ok(run_report)
}

fn print_report(r: &report::RunReport) {
    for c in &r.checks {
        println!(
            "[{}] {} - {}: {}",
            if c.pass { "PASS" } else { "FAIL" },
            r.name,
            c.name,
            c.detail
        );
    }
    println!(
        "{}: {}",
        r.name,
        if r.pass { "ALL CHECKS PASS" } else { "CHECK FAILURE" }
    );
}

fn run_single(cfg: ExperimentConfig) -> i32 {
    init_threads(cfg.threads);
    match execute(&cfg) {
        Ok(r) => {
            print_report(&r);
            if r.pass {
                0
            } else {
                2
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn reproduce(suite: &Path, out: &str, seed: Option<u64>, threads: Option<usize>) -> i32 {
    let mut entries: Vec<PathBuf> = match std::fs::read_dir(suite) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect(),
        Err(e) => {
            eprintln!("error: cannot read suite directory {}: {e}", suite.display());
            return 1;
        }
    };
    entries.sort();
    if let Some(t) = threads {
        init_threads(t);
    }
    let mut rows = Vec::new();
    let mut exit = 0i32;
    for path in &entries {
        let cfg = match ExperimentConfig::load(path) {
            Ok(mut cfg) => {
                cfg.out_dir = out.to_string();
                if let Some(s) = seed {
                    cfg.seed = s;
                }
                cfg
            }
            Err(e) => {
                eprintln!("error in {}: {e}", path.display());
                return 1;
            }
        };
        match execute(&cfg) {
            Ok(r) => {
                print_report(&r);
                if !r.pass {
                    exit = exit.max(2);
                }
                rows.push((
                    path.file_name().unwrap().to_string_lossy().into_owned(),
                    r.experiment.clone(),
                    r.description.clone(),
                    r.pass,
                ));
            }
            Err(e) => {
                eprintln!("error in {}: {e}", path.display());
                exit = exit.max(exit_code_for(&e));
                rows.push((
                    path.file_name().unwrap().to_string_lossy().into_owned(),
                    "-".into(),
                    format!("run error: {e}"),
                    false,
                ));
            }
        }
    }
    let mut summary = String::from("| config | experiment | check | result |\n|---|---|---|---|\n");
    for (file, kind, desc, pass) in &rows {
        summary.push_str(&format!(
            "| {file} | {kind} | {desc} | {} |\n",
            if *pass { "PASS" } else { "FAIL" }
        ));
    }
    let _ = std::fs::create_dir_all(out);
    if let Err(e) = std::fs::write(Path::new(out).join("summary.md"), summary.as_bytes()) {
        eprintln!("error writing summary: {e}");
        return 1;
    }
    println!("{} configs, exit {exit}", rows.len());
    exit
}

fn main() {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Run {
            config,
            out,
            seed,
            threads,
        } => match ExperimentConfig::load(config) {
            Ok(mut cfg) => {
                if let Some(o) = out {
                    cfg.out_dir = o.clone();
                }
                if let Some(s) = seed {
                    cfg.seed = *s;
                }
                if let Some(t) = threads {
                    cfg.threads = *t;
                }
                run_single(cfg)
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        Command::Reproduce {
            suite,
            out,
            seed,
            threads,
        } => reproduce(suite, out, *seed, *threads),
        other => match build_config(other) {
            Ok(Some((cfg, dump))) => {
                if let Some(path) = dump {
                    match cfg.to_toml_string() {
                        Ok(text) => {
                            if let Err(e) = std::fs::write(&path, text) {
                                eprintln!("error: {e}");
                                std::process::exit(1);
                            }
                            println!("wrote {}", path.display());
                            0
                        }
                        Err(e) => {
                            eprintln!("error: {e}");
                            1
                        }
                    }
                } else {
                    run_single(cfg)
                }
            }
            Ok(None) => unreachable!("run/reproduce handled above"),
            Err(e) => {
                eprintln!("error: {e}");
                exit_code_for(&e)
            }
        },
    };
    std::process::exit(code);
}
