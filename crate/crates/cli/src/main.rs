//! `ksl` — kernel interpolation toolkit front end.
//!
//! Exit codes: 0 success, 1 validation error (single-line,
//! machine-parsable, prefixed `ksl: <class>:`), 2 numerical failure
//! (prefixed `ksl: numerical:` with the solver diagnostic).

mod ingest;

use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ingest::{find_duplicate, ingest_csv, Ingested};
use ksl_core::bounds::{ae_noise_free, ae_noisy, ae_trans_native, BoundConfig, BoundReport};
use ksl_core::error::CoreError;
use ksl_core::experiments::{manifest_json, records_to_csv, run_experiment, ExperimentConfig};
use ksl_core::gram::gram_matrix;
use ksl_core::interpolation::{fit, predict, KernelModel, LabeledSet, RidgeScaling};
use ksl_core::kernels::Kernel;
use ksl_core::linalg::eigenvalues_sym;
use ksl_core::operator_diag::{estimate_q, estimate_r, estimate_w};
use ksl_core::sampling::{separation_prob_bound, separation_radius};
use ksl_core::spectrum::{log_spaced_grid, SpectralProfile};

#[derive(Parser)]
#[command(
    name = "ksl",
    version,
    about = "Kernel interpolation, spectrum profiles, and error bounds",
    after_help = "Env: KSL_THREADS caps worker threads (same as --threads).\n\
                  Defaults: run with --defaults-out defaults.json to dump every default."
)]
struct Cli {
    /// Worker thread cap for experiments (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the seed (experiment: replaces master_seed)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log one line per setting to stderr
    #[arg(short, long, global = true)]
    verbose: bool,
    /// Write a JSON file documenting every default value, then exit
    #[arg(long, value_name = "PATH")]
    defaults_out: Option<String>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelName {
    Gaussian,
    Sobolev,
}

#[derive(Args, Clone)]
struct KernelFlags {
    /// Kernel family
    #[arg(long, value_enum, default_value = "gaussian")]
    kernel: KernelName,
    /// Gaussian shape parameter a in exp(-a ||x-y||^2)
    #[arg(long, default_value_t = 0.025)]
    a: f64,
    /// Sobolev smoothness tau (must exceed d/2)
    #[arg(long, default_value_t = 2.0)]
    tau: f64,
}

impl KernelFlags {
    fn build(&self, d: usize) -> Result<Kernel, CoreError> {
        match self.kernel {
            KernelName::Gaussian => Kernel::gaussian(self.a),
            KernelName::Sobolev => Kernel::sobolev(self.tau, d),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScalingName {
    Unscaled,
    TimesM,
}

impl From<ScalingName> for RidgeScaling {
    fn from(s: ScalingName) -> Self {
        match s {
            ScalingName::Unscaled => RidgeScaling::Unscaled,
            ScalingName::TimesM => RidgeScaling::TimesM,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, conditioning, and N(lambda)/A(lambda) of the kernel matrix
    Spectrum {
        /// Points CSV (header x1..xd)
        #[arg(long)]
        data: String,
        #[command(flatten)]
        kernel: KernelFlags,
        /// "default" or a comma-separated list of positive lambdas
        #[arg(long, default_value = "default")]
        lambda_grid: String,
        /// Output path (stdout when absent)
        #[arg(long)]
        out: Option<String>,
    },
    /// Fit a (regularized) kernel interpolant and write the model JSON
    Fit {
        /// Labeled CSV (header x1..xd,y)
        #[arg(long)]
        data: String,
        #[command(flatten)]
        kernel: KernelFlags,
        /// Ridge parameter; 0 interpolates exactly
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long, value_enum, default_value = "unscaled")]
        ridge_scaling: ScalingName,
        /// Model output path
        #[arg(long, default_value = "model.json")]
        out: String,
    },
    /// Evaluate a fitted model at new points (CSV column y_hat)
    Predict {
        /// Model JSON written by `fit`
        #[arg(long)]
        model: String,
        /// Points CSV (header x1..xd; a y column is ignored)
        #[arg(long)]
        points: String,
        #[arg(long)]
        out: Option<String>,
    },
    /// Spectrum-based error bounds for a point set
    Bounds {
        #[arg(long)]
        data: String,
        #[command(flatten)]
        kernel: KernelFlags,
        /// Smoothness exponent r (> 0; r < 1/2 uses the trans-native form)
        #[arg(long, default_value_t = 0.5)]
        r: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        h_norm: f64,
        /// Noise scale; adds the noisy-data term when positive
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Multiply in the explicit constants and log factors
        #[arg(long)]
        include_constants: bool,
        /// Literal reading of the trans-native leading factor
        #[arg(long)]
        trans_native_literal: bool,
        #[arg(long)]
        out: Option<String>,
    },
    /// Separation radius and the probabilistic separation bound
    Separation {
        #[arg(long)]
        data: String,
        /// Threshold t for P(q >= t); bound omitted when absent
        #[arg(long)]
        t: Option<f64>,
        /// Domain volume for the bound
        #[arg(long, default_value_t = 1.0)]
        vol: f64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Run a configured study and write its CSV + manifest
    Experiment {
        /// Experiment config JSON
        #[arg(long)]
        config: String,
        /// Records CSV output path (default: <experiment>.csv)
        #[arg(long)]
        out: Option<String>,
        /// Manifest path (default: <out>.manifest.json)
        #[arg(long)]
        manifest: Option<String>,
    },
    /// Operator-difference estimates between a sample and a reference set
    OperatorDiag {
        #[arg(long)]
        data: String,
        /// Reference points CSV (the denser comparison set)
        #[arg(long)]
        reference: String,
        #[command(flatten)]
        kernel: KernelFlags,
        #[arg(long, default_value_t = 0.01)]
        lambda: f64,
        #[arg(long)]
        out: Option<String>,
    },
}

/// Validation failures raised by the front end itself.
enum CliError {
    Usage(String),
    Core(CoreError),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

/// (exit code, message-class prefix) for a core error.
fn classify(e: &CoreError) -> (u8, &'static str) {
    match e {
        CoreError::NumericallySingular { .. }
        | CoreError::NotPositiveDefinite { .. }
        | CoreError::NotSymmetric { .. }
        | CoreError::Overflow(_)
        | CoreError::AllFitsFailed(_) => (2, "numerical"),
        CoreError::CsvParse { .. } => (1, "csv"),
        CoreError::Json(_) => (1, "json"),
        CoreError::DimensionMismatch { .. } => (1, "dimension"),
        CoreError::Io(_) => (1, "io"),
        _ => (1, "invalid"),
    }
}

fn fail(e: CliError) -> ExitCode {
    match e {
        CliError::Usage(msg) => {
            eprintln!("ksl: usage: {}", msg.replace('\n', " "));
            ExitCode::from(1)
        }
        CliError::Core(e) => {
            let (code, class) = classify(&e);
            eprintln!("ksl: {class}: {}", e.to_string().replace('\n', " "));
            ExitCode::from(code)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let first = e.to_string();
            let line = first.lines().next().unwrap_or("bad invocation").to_string();
            return fail(CliError::Usage(line));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn read_file(path: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Core(CoreError::Io(e)))
}

fn emit(out: &Option<String>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Core(CoreError::Io(e))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn resolve_threads(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("KSL_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(0)
}

fn parse_lambda_grid(text: &str) -> Result<Vec<f64>, CliError> {
    if text == "default" {
        return Ok(SpectralProfile::default_lambda_grid());
    }
    let mut grid = Vec::new();
    for cell in text.split(',') {
        let v: f64 = cell
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("bad lambda-grid entry `{cell}`")))?;
        if !(v > 0.0) {
            return Err(CliError::Usage(format!(
                "lambda-grid entries must be positive, got {v}"
            )));
        }
        grid.push(v);
    }
    if grid.is_empty() {
        return Err(CliError::Usage("empty lambda grid".into()));
    }
    Ok(grid)
}

fn labeled_or_err(ing: Ingested, what: &str) -> Result<LabeledSet, CliError> {
    match ing {
        Ingested::Labeled(l) => Ok(l),
        Ingested::Unlabeled(_) => Err(CliError::Usage(format!(
            "{what} needs a labeled CSV (header x1..xd,y)"
        ))),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = resolve_threads(cli.threads);
    if let Some(path) = &cli.defaults_out {
        write_defaults(path)?;
        if cli.command.is_none() {
            return Ok(());
        }
    }
    let Some(command) = cli.command else {
        return Err(CliError::Usage(
            "a subcommand is required (see --help)".into(),
        ));
    };
    match command {
        Command::Spectrum {
            data,
            kernel,
            lambda_grid,
            out,
        } => {
            let set = match ingest_csv(&read_file(&data)?)? {
                Ingested::Unlabeled(s) => s,
                Ingested::Labeled(l) => l.sample,
            };
            let k = kernel.build(set.dim())?;
            let grid = parse_lambda_grid(&lambda_grid)?;
            let gram = gram_matrix(&k, &set)?;
            let eigs = eigenvalues_sym(&gram)?;
            let profile = SpectralProfile::from_eigenvalues(eigs, grid)?;
            if cli.verbose {
                eprintln!(
                    "spectrum: m={} cond={:.3e} min_eig={:.3e}",
                    profile.m, profile.cond, profile.min_eig
                );
            }
            emit(&out, &serde_json::to_string_pretty(&profile).unwrap())
        }
        Command::Fit {
            data,
            kernel,
            lambda,
            ridge_scaling,
            out,
        } => {
            let labeled = labeled_or_err(ingest_csv(&read_file(&data)?)?, "fit")?;
            if let Some((i, j)) = find_duplicate(&labeled.sample) {
                if lambda == 0.0 {
                    return Err(CliError::Usage(format!(
                        "duplicate points (rows {} and {}) make the lambda=0 system singular",
                        i + 1,
                        j + 1
                    )));
                }
                eprintln!(
                    "ksl: warning: duplicate points at rows {} and {}",
                    i + 1,
                    j + 1
                );
            }
            let k = kernel.build(labeled.sample.dim())?;
            let model = fit(&labeled, &k, lambda, ridge_scaling.into())?;
            if cli.verbose {
                eprintln!(
                    "fit: m={} lambda={} residual={:.3e} truncated={}",
                    labeled.len(),
                    lambda,
                    model.solve_residual,
                    model.truncation_flag
                );
            }
            fs::write(&out, model.to_json()).map_err(|e| CliError::Core(CoreError::Io(e)))?;
            Ok(())
        }
        Command::Predict { model, points, out } => {
            let model = KernelModel::from_json(&read_file(&model)?)?;
            let set = match ingest_csv(&read_file(&points)?)? {
                Ingested::Unlabeled(s) => s,
                Ingested::Labeled(l) => l.sample,
            };
            let preds = predict(&model, &set)?;
            let mut text = String::from("y_hat\n");
            for v in preds {
                text.push_str(&format!("{v}\n"));
            }
            emit(&out, text.trim_end())
        }
        Command::Bounds {
            data,
            kernel,
            r,
            delta,
            h_norm,
            noise,
            include_constants,
            trans_native_literal,
            out,
        } => {
            let set = match ingest_csv(&read_file(&data)?)? {
                Ingested::Unlabeled(s) => s,
                Ingested::Labeled(l) => l.sample,
            };
            let k = kernel.build(set.dim())?;
            let gram = gram_matrix(&k, &set)?;
            let eigs = eigenvalues_sym(&gram)?;
            let profile =
                SpectralProfile::from_eigenvalues(eigs, SpectralProfile::default_lambda_grid())?;
            let mut cfg = BoundConfig::new(r);
            cfg.delta = delta;
            cfg.h_norm = h_norm;
            cfg.kappa = k.kappa();
            cfg.include_constants = include_constants;
            cfg.trans_native_literal = trans_native_literal;
            cfg.lambda_grid = log_spaced_grid(60, 1e-8, 10.0);
            cfg.mu_grid = cfg.lambda_grid.clone();
            let main_bound = if r < 0.5 {
                ae_trans_native(&profile, &cfg)?
            } else {
                ae_noise_free(&profile, &cfg)?
            };
            let noisy = if noise > 0.0 {
                Some(ae_noisy(&profile, &cfg, noise)?)
            } else {
                None
            };
            #[derive(Serialize)]
            struct BoundsOut {
                m: usize,
                cond: f64,
                min_eig: f64,
                r: f64,
                bound: BoundReport,
                noisy: Option<BoundReport>,
            }
            let report = BoundsOut {
                m: profile.m,
                cond: profile.cond,
                min_eig: profile.min_eig,
                r,
                bound: main_bound,
                noisy,
            };
            emit(&out, &serde_json::to_string_pretty(&report).unwrap())
        }
        Command::Separation { data, t, vol, out } => {
            let set = match ingest_csv(&read_file(&data)?)? {
                Ingested::Unlabeled(s) => s,
                Ingested::Labeled(l) => l.sample,
            };
            let q = separation_radius(&set)?;
            #[derive(Serialize)]
            struct SepOut {
                m: usize,
                d: usize,
                q_sep: f64,
                t: Option<f64>,
                bound: Option<f64>,
                vacuous: Option<bool>,
            }
            let mut rep = SepOut {
                m: set.len(),
                d: set.dim(),
                q_sep: q,
                t,
                bound: None,
                vacuous: None,
            };
            if let Some(t) = t {
                let b = separation_prob_bound(set.len(), set.dim(), vol, t)?;
                rep.bound = Some(b.value);
                rep.vacuous = Some(b.vacuous);
            }
            emit(&out, &serde_json::to_string_pretty(&rep).unwrap())
        }
        Command::Experiment {
            config,
            out,
            manifest,
        } => {
            let mut cfg: ExperimentConfig = serde_json::from_str(&read_file(&config)?)
                .map_err(|e| CliError::Core(CoreError::Json(e)))?;
            cfg.apply_defaults();
            if let Some(seed) = cli.seed {
                cfg.master_seed = seed;
            }
            if threads > 0 {
                cfg.threads = threads;
            }
            if cli.verbose {
                eprintln!(
                    "experiment {}: dims={:?} ms={:?} trials={}",
                    cfg.experiment.name(),
                    cfg.dims,
                    cfg.ms,
                    cfg.trials
                );
            }
            let records = run_experiment(&cfg)?;
            let csv = records_to_csv(&records, cfg.with_operator_diag);
            let out_path = out.unwrap_or_else(|| format!("{}.csv", cfg.experiment.name()));
            fs::write(&out_path, csv).map_err(|e| CliError::Core(CoreError::Io(e)))?;
            let manifest_path = manifest.unwrap_or_else(|| format!("{out_path}.manifest.json"));
            fs::write(&manifest_path, manifest_json(&cfg, records.len()))
                .map_err(|e| CliError::Core(CoreError::Io(e)))?;
            if cli.verbose {
                eprintln!("wrote {} records to {out_path}", records.len());
            }
            Ok(())
        }
        Command::OperatorDiag {
            data,
            reference,
            kernel,
            lambda,
            out,
        } => {
            let d_set = match ingest_csv(&read_file(&data)?)? {
                Ingested::Unlabeled(s) => s,
                Ingested::Labeled(l) => l.sample,
            };
            let ref_set = match ingest_csv(&read_file(&reference)?)? {
                Ingested::Unlabeled(s) => s,
                Ingested::Labeled(l) => l.sample,
            };
            let k = kernel.build(d_set.dim())?;
            #[derive(Serialize)]
            struct DiagOut {
                m: usize,
                reference_size: usize,
                lambda: f64,
                r_hat: f64,
                q_hat: f64,
                w_hat: f64,
            }
            let rep = DiagOut {
                m: d_set.len(),
                reference_size: ref_set.len(),
                lambda,
                r_hat: estimate_r(&d_set, &ref_set, &k)?,
                q_hat: estimate_q(&d_set, &ref_set, &k, lambda)?,
                w_hat: estimate_w(&d_set, &ref_set, &k, lambda)?,
            };
            emit(&out, &serde_json::to_string_pretty(&rep).unwrap())
        }
    }
}

/// Dumps every front-end and experiment default to one JSON document.
fn write_defaults(path: &str) -> Result<(), CliError> {
    use ksl_core::experiments::ExperimentKind;
    #[derive(Serialize)]
    struct Defaults {
        kernel: serde_json::Value,
        lambda: f64,
        ridge_scaling: &'static str,
        bounds: BoundConfig,
        experiment: std::collections::BTreeMap<&'static str, ExperimentConfig>,
    }
    let mut experiment = std::collections::BTreeMap::new();
    for kind in [
        ExperimentKind::Fig2,
        ExperimentKind::Sim1,
        ExperimentKind::Sim2,
        ExperimentKind::Sim3,
    ] {
        experiment.insert(kind.name(), ExperimentConfig::new(kind));
    }
    let d = Defaults {
        kernel: serde_json::json!({"family": "gaussian", "a": 0.025, "tau": 2.0}),
        lambda: 0.0,
        ridge_scaling: "unscaled",
        bounds: BoundConfig::new(0.5),
        experiment,
    };
    fs::write(path, serde_json::to_string_pretty(&d).unwrap())
        .map_err(|e| CliError::Core(CoreError::Io(e)))
}
