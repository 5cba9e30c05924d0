//! Kernel interpolation (ridgeless), ridge-regularized fitting,
//! prediction, and hold-out bandwidth selection.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::gram::gram_matrix;
use crate::kernels::Kernel;
use crate::linalg::solve_spd;
use crate::rng::Xoshiro256pp;
use crate::sampling::{sq_dist, SampleSet};

/// Sample points with responses.
#[derive(Debug, Clone)]
pub struct LabeledSet {
    pub sample: SampleSet,
    pub y: Vec<f64>,
}

impl LabeledSet {
    pub fn new(sample: SampleSet, y: Vec<f64>) -> Result<Self> {
        if y.len() != sample.len() {
            return Err(CoreError::DimensionMismatch {
                expected: sample.len(),
                got: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite("response value".into()));
        }
        Ok(LabeledSet { sample, y })
    }

    pub fn len(&self) -> usize {
        self.sample.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample.is_empty()
    }
}

/// How the ridge term enters the normal equations: (K + lambda I) a = y
/// ("unscaled", the quasi-interpolation form) or (K + lambda m I) a = y
/// ("times_m", the usual ridge-regression scaling).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RidgeScaling {
    #[default]
    Unscaled,
    TimesM,
}

impl RidgeScaling {
    pub fn factor(self, m: usize) -> f64 {
        match self {
            RidgeScaling::Unscaled => 1.0,
            RidgeScaling::TimesM => m as f64,
        }
    }
}

/// Fitted kernel expansion f(x) = sum_i a_i K(x_i, x).
#[derive(Debug, Clone)]
pub struct KernelModel {
    pub kernel: Kernel,
    pub centers: SampleSet,
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    pub ridge_scaling: RidgeScaling,
    /// relative residual of the coefficient solve
    pub solve_residual: f64,
    /// true when the solver regularized by spectral truncation
    pub truncation_flag: bool,
}

#[derive(Serialize, Deserialize)]
struct ModelOnDisk {
    kernel: Kernel,
    d: usize,
    centers: Vec<Vec<f64>>,
    coefficients: Vec<f64>,
    lambda: f64,
    #[serde(default)]
    ridge_scaling: RidgeScaling,
    #[serde(default)]
    solve_residual: f64,
    #[serde(default)]
    truncation_flag: bool,
}

impl KernelModel {
    pub fn to_json(&self) -> String {
        let disk = ModelOnDisk {
            kernel: self.kernel,
            d: self.centers.dim(),
            centers: self.centers.points().map(|p| p.to_vec()).collect(),
            coefficients: self.coefficients.clone(),
            lambda: self.lambda,
            ridge_scaling: self.ridge_scaling,
            solve_residual: self.solve_residual,
            truncation_flag: self.truncation_flag,
        };
        serde_json::to_string_pretty(&disk).expect("model serialization")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let disk: ModelOnDisk =
            serde_json::from_str(text).map_err(CoreError::Json)?;
        let m = disk.centers.len();
        if m == 0 {
            return Err(CoreError::Empty("model centers".into()));
        }
        let mut flat = Vec::with_capacity(m * disk.d);
        for p in &disk.centers {
            if p.len() != disk.d {
                return Err(CoreError::DimensionMismatch {
                    expected: disk.d,
                    got: p.len(),
                });
            }
            flat.extend_from_slice(p);
        }
        if disk.coefficients.len() != m {
            return Err(CoreError::DimensionMismatch {
                expected: m,
                got: disk.coefficients.len(),
            });
        }
        Ok(KernelModel {
            kernel: disk.kernel,
            centers: SampleSet::from_points(flat, m, disk.d)?,
            coefficients: disk.coefficients,
            lambda: disk.lambda,
            ridge_scaling: disk.ridge_scaling,
            solve_residual: disk.solve_residual,
            truncation_flag: disk.truncation_flag,
        })
    }
}

/// Solves (K + lambda s I) a = y for the expansion coefficients;
/// lambda = 0 is exact interpolation.
pub fn fit(
    data: &LabeledSet,
    kernel: &Kernel,
    lambda: f64,
    scaling: RidgeScaling,
) -> Result<KernelModel> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(CoreError::InvalidParameter(format!(
            "lambda must be a finite nonnegative real, got {lambda}"
        )));
    }
    let mut k = gram_matrix(kernel, &data.sample)?;
    if lambda > 0.0 {
        k.shift_diagonal(lambda * scaling.factor(data.len()));
    }
    let sol = solve_spd(&k, &data.y)?;
    Ok(KernelModel {
        kernel: *kernel,
        centers: data.sample.clone(),
        coefficients: sol.x,
        lambda,
        ridge_scaling: scaling,
        solve_residual: sol.residual,
        truncation_flag: sol.truncated,
    })
}

/// Evaluates the model at each query point.
pub fn predict(model: &KernelModel, points: &SampleSet) -> Result<Vec<f64>> {
    if points.dim() != model.centers.dim() {
        return Err(CoreError::DimensionMismatch {
            expected: model.centers.dim(),
            got: points.dim(),
        });
    }
    let mut out = Vec::with_capacity(points.len());
    for x in points.points() {
        let mut acc = 0.0;
        for (c, a) in model.centers.points().zip(&model.coefficients) {
            acc += a * model.kernel.eval_sq_dist(sq_dist(c, x))?;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Root-mean-square prediction error on a labeled test set.
pub fn rmse(model: &KernelModel, test: &LabeledSet) -> Result<f64> {
    if test.is_empty() {
        return Err(CoreError::Empty("test set".into()));
    }
    let pred = predict(model, &test.sample)?;
    let ss: f64 = pred
        .iter()
        .zip(&test.y)
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    Ok((ss / test.len() as f64).sqrt())
}

/// One row of the hold-out table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GammaRow {
    pub gamma: f64,
    /// validation RMSE; NaN when the fit failed for this gamma
    pub rmse: f64,
}

/// Hold-out selection result.
#[derive(Debug, Clone, Serialize)]
pub struct HoldoutResult {
    pub gamma_star: f64,
    pub table: Vec<GammaRow>,
}

/// Splits the data into halves by a seeded shuffle (training gets
/// ceil(m/2)), fits one model per grid value, and picks the gamma with
/// the smallest validation RMSE; ties go to the smaller gamma.
pub fn holdout_select(
    data: &LabeledSet,
    build_kernel: impl Fn(f64) -> Result<Kernel>,
    gamma_grid: &[f64],
    lambda: f64,
    scaling: RidgeScaling,
    seed: u64,
) -> Result<HoldoutResult> {
    if data.len() < 4 {
        return Err(CoreError::InvalidParameter(
            "hold-out needs at least 4 points".into(),
        ));
    }
    if gamma_grid.is_empty() {
        return Err(CoreError::Empty("gamma grid".into()));
    }
    let m = data.len();
    let d = data.sample.dim();
    let mut idx: Vec<usize> = (0..m).collect();
    let mut rng = Xoshiro256pp::new(seed);
    rng.shuffle(&mut idx);
    let n_tr = m.div_ceil(2);
    let take = |ids: &[usize]| -> Result<LabeledSet> {
        let mut flat = Vec::with_capacity(ids.len() * d);
        let mut y = Vec::with_capacity(ids.len());
        for &i in ids {
            flat.extend_from_slice(data.sample.point(i));
            y.push(data.y[i]);
        }
        LabeledSet::new(SampleSet::from_points(flat, ids.len(), d)?, y)
    };
    let train = take(&idx[..n_tr])?;
    let valid = take(&idx[n_tr..])?;

    let mut table = Vec::with_capacity(gamma_grid.len());
    let mut failures = Vec::new();
    let mut best: Option<(f64, f64)> = None;
    for &g in gamma_grid {
        let row = build_kernel(g)
            .and_then(|k| fit(&train, &k, lambda, scaling))
            .and_then(|model| rmse(&model, &valid));
        match row {
            Ok(v) => {
                table.push(GammaRow { gamma: g, rmse: v });
                let better = match best {
                    None => true,
                    Some((_, bv)) => v < bv,
                };
                if better {
                    best = Some((g, v));
                }
            }
            Err(e) => {
                failures.push(format!("gamma={g}: {e}"));
                table.push(GammaRow {
                    gamma: g,
                    rmse: f64::NAN,
                });
            }
        }
    }
    match best {
        Some((gamma_star, _)) => Ok(HoldoutResult { gamma_star, table }),
        None => Err(CoreError::AllFitsFailed(failures.join("; "))),
    }
}
