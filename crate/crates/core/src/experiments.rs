//! End-to-end experiment harness: point-geometry / conditioning sweeps
//! and the three interpolation studies, with deterministic seeded
//! trials and CSV/manifest output.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{ae_noise_free, ae_noisy, BoundConfig};
use crate::error::{CoreError, Result};
use crate::gram::{cross_matrix, gram_matrix};
use crate::interpolation::{fit, holdout_select, LabeledSet, RidgeScaling};
use crate::kernels::Kernel;
use crate::linalg::eigenvalues_sym;
use crate::operator_diag::{estimate_p_u, estimate_r};
use crate::rng::{derive_seed, Xoshiro256pp};
use crate::sampling::{fill_distance_estimate, sample_uniform, separation_radius};
use crate::spectrum::SpectralProfile;

/// Which study to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    /// separation radius and condition number across dimensions
    Fig2,
    /// error bound vs. test error as m grows, fixed d
    Sim1,
    /// error bound vs. test error across (d, m)
    Sim2,
    /// test error across the ridge grid, with hold-out bandwidth choice
    Sim3,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Fig2 => "fig2",
            ExperimentKind::Sim1 => "sim1",
            ExperimentKind::Sim2 => "sim2",
            ExperimentKind::Sim3 => "sim3",
        }
    }
    fn tag(self) -> u64 {
        match self {
            ExperimentKind::Fig2 => 1,
            ExperimentKind::Sim1 => 2,
            ExperimentKind::Sim2 => 3,
            ExperimentKind::Sim3 => 4,
        }
    }
}

fn default_trials() -> usize {
    20
}
fn default_test_size() -> usize {
    500
}
fn default_gamma() -> f64 {
    0.05
}
fn default_gamma_grid() -> Vec<f64> {
    // Anchored at the baseline bandwidth 0.05 and extended upward;
    // narrower bandwidths over-smooth on [-1,1]^d at high d.
    vec![0.05, 0.1, 0.2, 0.4, 0.8]
}
fn default_sim3_lambda_grid() -> Vec<f64> {
    vec![0.0, 0.01, 0.02, 0.04, 0.08, 0.16, 0.32, 0.64, 1.28, 2.56]
}
fn default_r_smooth() -> f64 {
    0.5
}
fn default_seed() -> u64 {
    20240501
}

/// Full experiment description; JSON-serializable so a run is
/// reproducible from its manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// dimensions to sweep; defaults depend on the experiment
    #[serde(default)]
    pub dims: Vec<usize>,
    /// sample sizes to sweep; defaults depend on the experiment
    #[serde(default)]
    pub ms: Vec<usize>,
    /// Gaussian bandwidth gamma in the exp(-gamma ||.||^2 / 2)
    /// convention of the studies; the kernel parameter is a = gamma/2
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// hold-out grid of gamma values (sim3)
    #[serde(default = "default_gamma_grid")]
    pub gamma_grid: Vec<f64>,
    /// ridge values including 0 (sim3)
    #[serde(default = "default_sim3_lambda_grid")]
    pub lambda_grid: Vec<f64>,
    /// uniform noise half-width for the noisy sim3 variant
    #[serde(default)]
    pub noise_level: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_test_size")]
    pub test_size: usize,
    #[serde(default = "default_r_smooth")]
    pub r_smooth: f64,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    /// probes for the fill-distance estimate; 0 skips it (NaN column)
    #[serde(default)]
    pub fill_probes: usize,
    /// attach operator-difference estimates (r_hat, p_hat, u_hat)
    #[serde(default)]
    pub with_operator_diag: bool,
    /// lambda at which the operator estimates are evaluated
    #[serde(default = "default_operator_lambda")]
    pub operator_lambda: f64,
    /// worker threads; 0 uses the rayon default
    #[serde(default)]
    pub threads: usize,
}

fn default_operator_lambda() -> f64 {
    0.01
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        let mut cfg = ExperimentConfig {
            experiment,
            dims: vec![],
            ms: vec![],
            gamma: default_gamma(),
            gamma_grid: default_gamma_grid(),
            lambda_grid: default_sim3_lambda_grid(),
            noise_level: 0.0,
            trials: default_trials(),
            test_size: default_test_size(),
            r_smooth: default_r_smooth(),
            master_seed: default_seed(),
            fill_probes: 0,
            with_operator_diag: false,
            operator_lambda: default_operator_lambda(),
            threads: 0,
        };
        cfg.apply_defaults();
        cfg
    }

    /// Fills empty sweep lists with the per-study defaults.
    pub fn apply_defaults(&mut self) {
        match self.experiment {
            ExperimentKind::Fig2 => {
                if self.dims.is_empty() {
                    self.dims = vec![2, 10, 25, 50, 100];
                }
                if self.ms.is_empty() {
                    self.ms = vec![500];
                }
                if self.trials == 0 {
                    self.trials = 10;
                }
            }
            ExperimentKind::Sim1 => {
                if self.dims.is_empty() {
                    self.dims = vec![8, 32, 128];
                }
                if self.ms.is_empty() {
                    self.ms = (5..=15).map(|k| k * 100).collect();
                }
            }
            ExperimentKind::Sim2 => {
                if self.dims.is_empty() {
                    self.dims = (1..=10).map(|k| k * 50).collect();
                }
                if self.ms.is_empty() {
                    self.ms = vec![300, 600, 900];
                }
            }
            ExperimentKind::Sim3 => {
                if self.dims.is_empty() {
                    self.dims = vec![200];
                }
                if self.ms.is_empty() {
                    self.ms = (5..=15).step_by(2).map(|k| k * 100).collect();
                }
            }
        }
        if self.trials == 0 {
            self.trials = default_trials();
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&d| d == 0) || self.ms.iter().any(|&m| m == 0) {
            return Err(CoreError::InvalidParameter(
                "dims and ms must be positive".into(),
            ));
        }
        if !(self.gamma > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if self.trials == 0 || self.test_size == 0 {
            return Err(CoreError::InvalidParameter(
                "trials and test_size must be positive".into(),
            ));
        }
        Ok(())
    }

    /// FNV-1a hash of the canonical JSON, recorded in the manifest.
    pub fn config_hash(&self) -> u64 {
        let text = serde_json::to_string(self).expect("config serialization");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }
}

/// One CSV row. Summary rows use trial = -1 and carry the mean in
/// q_sep / cond and twice the standard deviation in h_fill / min_eig.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub experiment: String,
    pub d: usize,
    pub m: usize,
    pub trial: i64,
    pub seed: u64,
    pub q_sep: f64,
    pub h_fill: f64,
    pub cond: f64,
    pub min_eig: f64,
    pub ae: f64,
    pub rmse_test: f64,
    pub lambda: f64,
    pub gamma_star: f64,
    pub runtime_ms: f64,
    /// operator estimates, present when requested
    pub r_hat: f64,
    pub p_hat: f64,
    pub u_hat: f64,
}

impl TrialRecord {
    fn blank(experiment: &str, d: usize, m: usize, trial: i64, seed: u64) -> Self {
        TrialRecord {
            experiment: experiment.into(),
            d,
            m,
            trial,
            seed,
            q_sep: f64::NAN,
            h_fill: f64::NAN,
            cond: f64::NAN,
            min_eig: f64::NAN,
            ae: f64::NAN,
            rmse_test: f64::NAN,
            lambda: f64::NAN,
            gamma_star: f64::NAN,
            runtime_ms: 0.0,
            r_hat: f64::NAN,
            p_hat: f64::NAN,
            u_hat: f64::NAN,
        }
    }
}

/// CSV header matching the TrialRecord field order.
pub fn csv_header(with_operator_diag: bool) -> String {
    let base = "experiment,d,m,trial,seed,q_sep,h_fill,cond,min_eig,AE,RMSE_test,lambda,gamma_star,runtime_ms";
    if with_operator_diag {
        format!("{base},r_hat,p_hat,u_hat")
    } else {
        base.into()
    }
}

/// Renders records as CSV (shortest round-trip decimal formatting).
pub fn records_to_csv(records: &[TrialRecord], with_operator_diag: bool) -> String {
    let mut out = csv_header(with_operator_diag);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.d,
            r.m,
            r.trial,
            r.seed,
            r.q_sep,
            r.h_fill,
            r.cond,
            r.min_eig,
            r.ae,
            r.rmse_test,
            r.lambda,
            r.gamma_star,
            r.runtime_ms
        ));
        if with_operator_diag {
            out.push_str(&format!(",{},{},{}", r.r_hat, r.p_hat, r.u_hat));
        }
        out.push('\n');
    }
    out
}

/// The target family of the studies: f*(x) = sum_j c_j exp(-x_j^2).
pub fn target_function(c: Vec<f64>) -> impl Fn(&[f64]) -> f64 {
    move |x: &[f64]| {
        assert_eq!(x.len(), c.len(), "target function dimension mismatch");
        c.iter().zip(x).map(|(cj, xj)| cj * (-xj * xj).exp()).sum()
    }
}

/// Runs `jobs` closures on an indexed pool, preserving order, with the
/// configured thread count. Deterministic regardless of thread count.
fn run_indexed<T: Send>(
    threads: usize,
    n: usize,
    job: impl Fn(usize) -> T + Sync,
) -> Vec<T> {
    let exec = || (0..n).into_par_iter().map(|i| job(i)).collect();
    if threads == 0 {
        exec()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool")
            .install(exec)
    }
}

fn mean_and_2std(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    if vals.len() < 2 {
        return (mean, 0.0);
    }
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, 2.0 * var.sqrt())
}

fn now_ms() -> f64 {
    use std::time::{SystemTime, UNIX_EPOCH};
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64() * 1e3)
        .unwrap_or(0.0)
}

/// Separation radius and condition number across dimensions, m fixed,
/// points uniform on [0,1]^d, kernel exp(-||x-y||^2 / 2). Appends one
/// summary row (trial = -1) per dimension.
pub fn run_fig2(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    if cfg.experiment != ExperimentKind::Fig2 {
        return Err(CoreError::InvalidParameter(
            "config is not a fig2 config".into(),
        ));
    }
    cfg.validate()?;
    let kernel = Kernel::gaussian(0.5)?;
    let m = cfg.ms[0];
    let mut settings = Vec::new();
    for &d in &cfg.dims {
        for trial in 0..cfg.trials {
            settings.push((d, trial));
        }
    }
    let rows = run_indexed(cfg.threads, settings.len(), |i| -> Result<TrialRecord> {
        let (d, trial) = settings[i];
        let t0 = now_ms();
        let seed = derive_seed(
            cfg.master_seed,
            &[cfg.experiment.tag(), d as u64, m as u64, trial as u64],
        );
        let s = sample_uniform(m, d, 0.0, 1.0, seed)?;
        let mut rec = TrialRecord::blank("fig2", d, m, trial as i64, seed);
        rec.q_sep = separation_radius(&s)?;
        if cfg.fill_probes > 0 {
            rec.h_fill = fill_distance_estimate(&s, cfg.fill_probes, derive_seed(seed, &[99]))?;
        }
        let g = gram_matrix(&kernel, &s)?;
        let eigs = eigenvalues_sym(&g)?;
        let top = eigs[0];
        let min = *eigs.last().unwrap();
        rec.min_eig = min;
        // clamp to the roundoff floor: tiny negative eigenvalues are
        // noise at machine precision for near-singular Gram matrices
        rec.cond = top / min.max(f64::EPSILON * top);
        rec.runtime_ms = now_ms() - t0;
        Ok(rec)
    });
    let mut records: Vec<TrialRecord> = rows.into_iter().collect::<Result<_>>()?;
    // summary rows per dimension
    let mut summaries = Vec::new();
    for &d in &cfg.dims {
        let qs: Vec<f64> = records
            .iter()
            .filter(|r| r.d == d && r.trial >= 0)
            .map(|r| r.q_sep)
            .collect();
        let conds: Vec<f64> = records
            .iter()
            .filter(|r| r.d == d && r.trial >= 0)
            .map(|r| r.cond)
            .collect();
        let (qm, qs2) = mean_and_2std(&qs);
        let (cm, cs2) = mean_and_2std(&conds);
        let mut rec = TrialRecord::blank("fig2", d, m, -1, cfg.master_seed);
        rec.q_sep = qm;
        rec.h_fill = qs2;
        rec.cond = cm;
        rec.min_eig = cs2;
        summaries.push(rec);
    }
    records.extend(summaries);
    Ok(records)
}

/// Shared per-trial pipeline of the interpolation studies: sample,
/// build the target, fit, and report geometry, spectrum, AE and RMSE.
struct TrialOutput {
    rec: TrialRecord,
    #[allow(dead_code)] // consumed by the cross-check tests
    profile: SpectralProfile,
}

#[allow(clippy::too_many_arguments)]
fn interpolation_trial(
    cfg: &ExperimentConfig,
    name: &str,
    d: usize,
    m: usize,
    trial: usize,
    noisy: bool,
) -> Result<TrialOutput> {
    let t0 = now_ms();
    let kernel = Kernel::gaussian(cfg.gamma / 2.0)?;
    let seed = derive_seed(
        cfg.master_seed,
        &[cfg.experiment.tag(), d as u64, m as u64, trial as u64],
    );
    let s = sample_uniform(m, d, -1.0, 1.0, seed)?;
    let coeff_seed = derive_seed(seed, &[1]);
    let mut crng = Xoshiro256pp::new(coeff_seed);
    let c: Vec<f64> = (0..d).map(|_| crng.uniform(-1.0, 1.0)).collect();
    let f_star = target_function(c);
    let mut y: Vec<f64> = s.points().map(|p| f_star(p)).collect();
    if noisy && cfg.noise_level > 0.0 {
        let mut nrng = Xoshiro256pp::new(derive_seed(seed, &[2]));
        for v in y.iter_mut() {
            *v += nrng.uniform(-cfg.noise_level, cfg.noise_level);
        }
    }
    let mut rec = TrialRecord::blank(name, d, m, trial as i64, seed);
    rec.q_sep = separation_radius(&s)?;
    if cfg.fill_probes > 0 {
        rec.h_fill = fill_distance_estimate(&s, cfg.fill_probes, derive_seed(seed, &[99]))?;
    }

    let g = gram_matrix(&kernel, &s)?;
    let eigs = eigenvalues_sym(&g)?;
    let profile = SpectralProfile::from_eigenvalues(eigs, SpectralProfile::default_lambda_grid())?;
    rec.cond = profile.cond;
    rec.min_eig = profile.min_eig;

    let bcfg = BoundConfig::new(cfg.r_smooth);
    rec.ae = if noisy && cfg.noise_level > 0.0 {
        match ae_noisy(&profile, &bcfg, cfg.noise_level) {
            Ok(rep) => rep.value,
            Err(_) => f64::NAN, // singular spectrum: stability term undefined
        }
    } else {
        ae_noise_free(&profile, &bcfg)?.value
    };

    // fit at lambda = 0 and evaluate on fresh noise-free test points
    let data = LabeledSet::new(s.clone(), y.clone())?;
    let model = fit(&data, &kernel, 0.0, RidgeScaling::Unscaled)?;
    let test = sample_uniform(cfg.test_size, d, -1.0, 1.0, derive_seed(seed, &[3]))?;
    let preds = crate::interpolation::predict(&model, &test)?;
    let sse: f64 = test
        .points()
        .zip(&preds)
        .map(|(p, yh)| {
            let t = f_star(p) - yh;
            t * t
        })
        .sum();
    rec.rmse_test = (sse / cfg.test_size as f64).sqrt();
    rec.lambda = 0.0;

    if cfg.with_operator_diag {
        let ref_size = (10 * m).min(5000 - m.min(4000));
        let rf = sample_uniform(ref_size, d, -1.0, 1.0, derive_seed(seed, &[4]))?;
        rec.r_hat = estimate_r(&s, &rf, &kernel)?;
        let (p_hat, u_hat) = estimate_p_u(&s, &rf, &kernel, cfg.operator_lambda, &f_star, &y)?;
        rec.p_hat = p_hat;
        rec.u_hat = u_hat;
    }
    rec.runtime_ms = now_ms() - t0;
    Ok(TrialOutput { rec, profile })
}

/// Error bound vs. test error across the configured (d, m) sweep.
fn run_interpolation_sweep(cfg: &ExperimentConfig, name: &str) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let mut settings = Vec::new();
    for &d in &cfg.dims {
        for &m in &cfg.ms {
            for trial in 0..cfg.trials {
                settings.push((d, m, trial));
            }
        }
    }
    let rows = run_indexed(cfg.threads, settings.len(), |i| {
        let (d, m, trial) = settings[i];
        interpolation_trial(cfg, name, d, m, trial, false).map(|o| o.rec)
    });
    rows.into_iter().collect()
}

pub fn run_sim1(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    if cfg.experiment != ExperimentKind::Sim1 {
        return Err(CoreError::InvalidParameter(
            "config is not a sim1 config".into(),
        ));
    }
    run_interpolation_sweep(cfg, "sim1")
}

pub fn run_sim2(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    if cfg.experiment != ExperimentKind::Sim2 {
        return Err(CoreError::InvalidParameter(
            "config is not a sim2 config".into(),
        ));
    }
    run_interpolation_sweep(cfg, "sim2")
}

/// Ridge sweep with hold-out bandwidth selection; runs the noise-free
/// variant always and the noisy variant when noise_level > 0. One row
/// per (d, m, trial, lambda).
pub fn run_sim3(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    if cfg.experiment != ExperimentKind::Sim3 {
        return Err(CoreError::InvalidParameter(
            "config is not a sim3 config".into(),
        ));
    }
    cfg.validate()?;
    let variants: Vec<bool> = if cfg.noise_level > 0.0 {
        vec![false, true]
    } else {
        vec![false]
    };
    let mut settings = Vec::new();
    for &noisy in &variants {
        for &d in &cfg.dims {
            for &m in &cfg.ms {
                for trial in 0..cfg.trials {
                    settings.push((noisy, d, m, trial));
                }
            }
        }
    }
    let rows = run_indexed(cfg.threads, settings.len(), |i| -> Result<Vec<TrialRecord>> {
        let (noisy, d, m, trial) = settings[i];
        let name = if noisy { "sim3_noisy" } else { "sim3" };
        let t0 = now_ms();
        let seed = derive_seed(
            cfg.master_seed,
            &[
                cfg.experiment.tag(),
                d as u64,
                m as u64,
                trial as u64,
                noisy as u64,
            ],
        );
        let s = sample_uniform(m, d, -1.0, 1.0, seed)?;
        let mut crng = Xoshiro256pp::new(derive_seed(seed, &[1]));
        let c: Vec<f64> = (0..d).map(|_| crng.uniform(-1.0, 1.0)).collect();
        let f_star = target_function(c);
        let mut y: Vec<f64> = s.points().map(|p| f_star(p)).collect();
        if noisy {
            let mut nrng = Xoshiro256pp::new(derive_seed(seed, &[2]));
            for v in y.iter_mut() {
                *v += nrng.uniform(-cfg.noise_level, cfg.noise_level);
            }
        }
        let data = LabeledSet::new(s.clone(), y.clone())?;

        // hold-out bandwidth selection at lambda = 0
        let hold = holdout_select(
            &data,
            |g| Kernel::gaussian(g / 2.0),
            &cfg.gamma_grid,
            0.0,
            RidgeScaling::Unscaled,
            derive_seed(seed, &[5]),
        )?;
        let kernel = Kernel::gaussian(hold.gamma_star / 2.0)?;

        // shared geometry / spectrum / AE for the trial
        let q_sep = separation_radius(&s)?;
        let g = gram_matrix(&kernel, &s)?;
        let eigs = eigenvalues_sym(&g)?;
        let profile =
            SpectralProfile::from_eigenvalues(eigs, SpectralProfile::default_lambda_grid())?;
        let bcfg = BoundConfig::new(cfg.r_smooth);
        let ae = if noisy {
            match ae_noisy(&profile, &bcfg, cfg.noise_level) {
                Ok(rep) => rep.value,
                Err(_) => f64::NAN,
            }
        } else {
            ae_noise_free(&profile, &bcfg)?.value
        };

        // test material shared across the ridge grid
        let test = sample_uniform(cfg.test_size, d, -1.0, 1.0, derive_seed(seed, &[3]))?;
        let f_test: Vec<f64> = test.points().map(|p| f_star(p)).collect();
        let cross = cross_matrix(&kernel, &test, &s)?;

        let mut out = Vec::with_capacity(cfg.lambda_grid.len());
        for &lam in &cfg.lambda_grid {
            let model = fit(&data, &kernel, lam, RidgeScaling::Unscaled)?;
            let mut sse = 0.0;
            for (ti, ft) in f_test.iter().enumerate() {
                let mut pred = 0.0;
                for (j, a) in model.coefficients.iter().enumerate() {
                    pred += a * cross[ti * m + j];
                }
                let t = pred - ft;
                sse += t * t;
            }
            let mut rec = TrialRecord::blank(name, d, m, trial as i64, seed);
            rec.q_sep = q_sep;
            rec.cond = profile.cond;
            rec.min_eig = profile.min_eig;
            rec.ae = ae;
            rec.rmse_test = (sse / cfg.test_size as f64).sqrt();
            rec.lambda = lam;
            rec.gamma_star = hold.gamma_star;
            rec.runtime_ms = now_ms() - t0;
            out.push(rec);
        }
        Ok(out)
    });
    let mut records = Vec::new();
    for batch in rows {
        records.extend(batch?);
    }
    Ok(records)
}

/// Dispatches on the configured experiment kind.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    match cfg.experiment {
        ExperimentKind::Fig2 => run_fig2(cfg),
        ExperimentKind::Sim1 => run_sim1(cfg),
        ExperimentKind::Sim2 => run_sim2(cfg),
        ExperimentKind::Sim3 => run_sim3(cfg),
    }
}

/// Reproducibility manifest written beside each CSV.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub config: &'a ExperimentConfig,
    pub config_hash: String,
    pub master_seed: u64,
    pub crate_version: &'static str,
    pub records: usize,
}

pub fn manifest_json(cfg: &ExperimentConfig, records: usize) -> String {
    let m = RunManifest {
        config: cfg,
        config_hash: format!("{:016x}", cfg.config_hash()),
        master_seed: cfg.master_seed,
        crate_version: env!("CARGO_PKG_VERSION"),
        records,
    };
    serde_json::to_string_pretty(&m).expect("manifest serialization")
}
