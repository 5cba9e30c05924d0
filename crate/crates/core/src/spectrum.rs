//! Spectral quantities of the kernel matrix: empirical and theoretical
//! effective dimension, the error functional A(m, lambda), certified
//! concentration bounds, and minimal-eigenvalue lower bounds.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::gamma::{ln_factorial, ln_gamma};
use crate::kernels::{Kernel, KernelFamily};
use crate::quad::adaptive_simpson;

/// Empirical effective dimension N(lambda) = sum sigma_l / (sigma_l + m lambda)
/// over the kernel-matrix eigenvalues.
pub fn effective_dimension_empirical(eigenvalues: &[f64], m: usize, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(CoreError::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let ml = m as f64 * lambda;
    let mut n = 0.0;
    for &s in eigenvalues {
        if s > 0.0 {
            n += s / (s + ml);
        }
    }
    Ok(n)
}

/// The spectrum error functional:
/// (1/(m lambda) + 1/sqrt(m lambda)) * max{1, sqrt(N(lambda))}.
pub fn a_d_lambda(eigenvalues: &[f64], m: usize, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) || m == 0 {
        return Err(CoreError::InvalidParameter(format!(
            "need lambda > 0 and m >= 1, got lambda={lambda}, m={m}"
        )));
    }
    let ml = m as f64 * lambda;
    let n = effective_dimension_empirical(eigenvalues, m, lambda)?;
    Ok((1.0 / ml + 1.0 / ml.sqrt()) * n.sqrt().max(1.0))
}

/// Eigenvalue decay model for the theoretical effective dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum DecaySpec {
    /// sigma_l <= c0 l^{-beta}, beta > 1
    Algebraic { beta: f64, c0: f64 },
    /// sigma_l <= c0 exp(-alpha l^{1/d})
    Exponential { alpha: f64, d: usize, c0: f64 },
}

/// Calibrated constant for the multi-log integral bound and the
/// exponential-decay effective dimension: 1.25 x the maximal ratio of
/// the integral to d! alpha^{-d} max(log(1/lambda),1)^d over the grid
/// alpha in {0.5,1,2}, d in {1,2,3}, lambda in [1e-6, 0.5].
pub const C1_MULTILOG: f64 = 2.0854;

/// Upper bound on the effective dimension under a spectral decay model.
///
/// Algebraic: closed form of the integral comparison,
/// c0^{1/beta} pi / (beta sin(pi/beta)) * lambda^{-1/beta}.
/// Exponential: C1 d! alpha^{-d} max(log(c0/lambda), 1)^d.
pub fn effective_dimension_theoretical(spec: DecaySpec, lambda: f64) -> Result<f64> {
    match spec {
        DecaySpec::Algebraic { beta, c0 } => {
            if !(beta > 1.0) || !(c0 > 0.0) {
                return Err(CoreError::InvalidParameter(format!(
                    "algebraic decay needs beta > 1, c0 > 0, got beta={beta}, c0={c0}"
                )));
            }
            if !(lambda > 0.0) {
                return Err(CoreError::InvalidParameter(format!(
                    "lambda must be positive, got {lambda}"
                )));
            }
            let pi = std::f64::consts::PI;
            let c1 = c0.powf(1.0 / beta) * pi / (beta * (pi / beta).sin());
            Ok(c1 * lambda.powf(-1.0 / beta))
        }
        DecaySpec::Exponential { alpha, d, c0 } => {
            if !(alpha > 0.0) || d == 0 || !(c0 > 0.0) {
                return Err(CoreError::InvalidParameter(format!(
                    "exponential decay needs alpha > 0, d >= 1, c0 > 0, got alpha={alpha}, d={d}, c0={c0}"
                )));
            }
            if !(lambda > 0.0 && lambda <= c0) {
                return Err(CoreError::InvalidParameter(format!(
                    "exponential mode needs 0 < lambda <= c0, got lambda={lambda}"
                )));
            }
            let df = d as f64;
            // log space: d! and alpha^{-d} both explode for large d
            let ln_val = C1_MULTILOG.ln() + ln_factorial(d as u64) - df * alpha.ln()
                + df * (c0 / lambda).ln().max(1.0).ln();
            Ok(ln_val.exp())
        }
    }
}

/// The sample-complexity functional (2 kappa / sqrt(m)) (kappa / sqrt(m lambda) + sqrt(N)).
pub fn b_m_lambda(m: usize, lambda: f64, kappa: f64, n_lambda: f64) -> Result<f64> {
    if m == 0 || !(lambda > 0.0) || !(kappa > 0.0) || !(n_lambda >= 0.0) {
        return Err(CoreError::InvalidParameter(format!(
            "need m >= 1, lambda > 0, kappa > 0, N >= 0; got m={m}, lambda={lambda}, kappa={kappa}, N={n_lambda}"
        )));
    }
    let mf = m as f64;
    Ok(2.0 * kappa / mf.sqrt() * (kappa / (mf * lambda).sqrt() + n_lambda.sqrt()))
}

/// High-probability bounds on the four operator-comparison quantities,
/// expressed through the error functional A.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedBounds {
    pub q_bound: f64,
    pub w_bound: f64,
    pub p_bound: f64,
    pub u_bound: f64,
}

/// Evaluates the composite concentration bounds at confidence 1 - delta:
/// Q = sqrt(2)(2 kappa(kappa+8) A + 1) log^2(8/delta), and the
/// sqrt(lambda) A forms for W, P, U.
pub fn certified_bounds(
    a: f64,
    lambda: f64,
    delta: f64,
    kappa: f64,
    big_m: f64,
    f_inf: f64,
) -> Result<CertifiedBounds> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CoreError::InvalidParameter(format!(
            "delta must lie in (0,1), got {delta}"
        )));
    }
    if !(lambda > 0.0) || !(kappa > 0.0) || !(big_m > 0.0) || !(f_inf > 0.0) || !(a >= 0.0) {
        return Err(CoreError::InvalidParameter(
            "lambda, kappa, M, f_inf must be positive and A nonnegative".into(),
        ));
    }
    let log2 = (8.0 / delta).ln().powi(2);
    let kk8 = kappa * (kappa + 8.0);
    let sl = lambda.sqrt();
    Ok(CertifiedBounds {
        q_bound: 2f64.sqrt() * (2.0 * kk8 * a + 1.0) * log2,
        w_bound: 2.0 * kk8 * sl * a * log2,
        p_bound: 4.0 * big_m * (kappa + 8.0) * sl * a * log2,
        u_bound: 2.0 * (f_inf * (kappa + 8.0) / kappa) * sl * a * log2,
    })
}

/// ln of the deterministic lower bound on sigma_m(K)/m given the
/// separation radius q.
///
/// `squared_gaussian_exponent` switches the Gaussian formula from
/// exp(-u) to exp(-u^2) with u = 6.38 d / (q sqrt(a)); the unsquared
/// form is the default.
pub fn ln_min_eig_lower_bound(
    kernel: &Kernel,
    q: f64,
    d: usize,
    squared_gaussian_exponent: bool,
) -> Result<f64> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(CoreError::InvalidParameter(format!(
            "separation radius must be positive, got {q}"
        )));
    }
    if d == 0 {
        return Err(CoreError::InvalidParameter("d must be >= 1".into()));
    }
    let df = d as f64;
    let ln2 = std::f64::consts::LN_2;
    let ln_pi = std::f64::consts::PI.ln();
    match kernel.family() {
        KernelFamily::Gaussian { a } => {
            let u = 6.38 * df / (q * a.sqrt());
            let expo = if squared_gaussian_exponent { u * u } else { u };
            Ok(-(2.0 * df + 1.0) * ln2 - ln_gamma(df / 2.0 + 1.0) + df * u.ln() - expo)
        }
        KernelFamily::Sobolev { tau, d: kd } => {
            if kd != d {
                return Err(CoreError::DimensionMismatch {
                    expected: kd,
                    got: d,
                });
            }
            let p = 2.0 * tau - df; // > 0 by kernel validation
            Ok(p * q.ln() - (2.0 * tau + 2.0 * df + 1.0) * ln2 - 0.5 * df * ln_pi
                - ln_gamma(df / 2.0 + 1.0)
                - p * (6.38 * df).ln()
                - tau * (q * q / (162.8 * df * df)).ln_1p())
        }
    }
}

/// Linear-space variant of [`ln_min_eig_lower_bound`]; may underflow to
/// zero, which remains a valid lower bound.
pub fn min_eig_lower_bound(
    kernel: &Kernel,
    q: f64,
    d: usize,
    squared_gaussian_exponent: bool,
) -> Result<f64> {
    Ok(ln_min_eig_lower_bound(kernel, q, d, squared_gaussian_exponent)?.exp())
}

/// Quadrature value and calibrated bound for the iterated-log integral
/// int_0^inf dt / (1 + lambda e^{alpha t^{1/d}}).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiLogCheck {
    pub integral: f64,
    pub bound: f64,
}

/// Computes the integral by substitution t = s^d and adaptive Simpson
/// quadrature, and the bound C1 d! alpha^{-d} max(log(1/lambda),1)^d.
pub fn multi_log_integral_check(alpha: f64, d: usize, lambda: f64) -> Result<MultiLogCheck> {
    if !(alpha > 0.0) || d == 0 {
        return Err(CoreError::InvalidParameter(format!(
            "need alpha > 0 and d >= 1, got alpha={alpha}, d={d}"
        )));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(CoreError::InvalidParameter(format!(
            "lemma range is 0 < lambda < 1, got {lambda}"
        )));
    }
    let df = d as f64;
    // integrand after t = s^d: d s^{d-1} / (1 + lambda e^{alpha s});
    // beyond s_max the tail is below e^{-60} of the head
    let s_max = ((1.0 / lambda).ln() + 60.0) / alpha;
    let f = move |s: f64| df * s.powi(d as i32 - 1) / (1.0 + lambda * (alpha * s).exp());
    let integral = adaptive_simpson(&f, 0.0, s_max, 1e-9);
    let bound =
        (C1_MULTILOG.ln() + ln_factorial(d as u64) - df * alpha.ln() + df * (1.0 / lambda).ln().max(1.0).ln())
            .exp();
    Ok(MultiLogCheck { integral, bound })
}

/// Spectrum summary of one kernel matrix: eigenvalues, conditioning, and
/// N(lambda), A(lambda) on a grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralProfile {
    pub eigenvalues: Vec<f64>,
    pub m: usize,
    /// sigma_1 / sigma_m; saturates at 1/eps when sigma_m is at or below
    /// roundoff so that near-singular matrices still report a number
    pub cond: f64,
    pub min_eig: f64,
    pub lambda_grid: Vec<f64>,
    pub n_d: Vec<f64>,
    pub a_d: Vec<f64>,
}

impl SpectralProfile {
    /// Builds the profile from kernel-matrix eigenvalues (any order) and
    /// a positive lambda grid.
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>, lambda_grid: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(CoreError::Empty("eigenvalues".into()));
        }
        eigenvalues.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let m = eigenvalues.len();
        let top = eigenvalues[0];
        let min_eig = *eigenvalues.last().unwrap();
        let cond = if top <= 0.0 {
            f64::INFINITY
        } else {
            top / min_eig.max(f64::EPSILON * top)
        };
        let mut n_d = Vec::with_capacity(lambda_grid.len());
        let mut a_d = Vec::with_capacity(lambda_grid.len());
        for &lam in &lambda_grid {
            n_d.push(effective_dimension_empirical(&eigenvalues, m, lam)?);
            a_d.push(a_d_lambda(&eigenvalues, m, lam)?);
        }
        Ok(SpectralProfile {
            eigenvalues,
            m,
            cond,
            min_eig,
            lambda_grid,
            n_d,
            a_d,
        })
    }

    /// Default grid: 40 log-spaced points in [1e-8, 10].
    pub fn default_lambda_grid() -> Vec<f64> {
        log_spaced_grid(40, 1e-8, 10.0)
    }
}

/// n log-spaced points from lo to hi inclusive.
pub fn log_spaced_grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let (ll, lh) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (ll + (lh - ll) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
