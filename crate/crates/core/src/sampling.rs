//! Random point sets, separation radius / fill distance, and the
//! probabilistic separation bounds for uniform and Gaussian samples.

use crate::error::{CoreError, Result};
use crate::gamma::ln_gamma;
use crate::rng::Xoshiro256pp;

/// Memory budget for a single sample set (coordinates).
const MAX_COORDS: usize = 50_000_000;

/// m points in [lo, hi]^d, with seed provenance.
#[derive(Debug, Clone)]
pub struct SampleSet {
    data: Vec<f64>,
    m: usize,
    d: usize,
    pub lo: f64,
    pub hi: f64,
    pub seed: u64,
}

impl SampleSet {
    /// Wraps existing coordinates (e.g. parsed from CSV). Box bounds are
    /// taken from the data envelope; seed is recorded as given.
    pub fn from_points(data: Vec<f64>, m: usize, d: usize) -> Result<Self> {
        if m == 0 || d == 0 {
            return Err(CoreError::Empty("sample set".into()));
        }
        assert_eq!(data.len(), m * d, "coordinate count mismatch");
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &data {
            if !v.is_finite() {
                return Err(CoreError::NonFinite("point coordinate".into()));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Ok(SampleSet {
            data,
            m,
            d,
            lo,
            hi,
            seed: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    /// CSV with header `x1,...,xd`; round-trip exact (shortest decimal
    /// that parses back to the same bits).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for j in 1..=self.d {
            if j > 1 {
                out.push(',');
            }
            out.push_str(&format!("x{j}"));
        }
        out.push('\n');
        for p in self.points() {
            for (j, v) in p.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&format!("{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Squared Euclidean distance.
#[inline]
pub fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for (a, b) in x.iter().zip(y) {
        let t = a - b;
        s += t * t;
    }
    s
}

/// m i.i.d. uniform points on [lo, hi]^d; bit-identical for identical
/// (seed, m, d, box).
pub fn sample_uniform(m: usize, d: usize, lo: f64, hi: f64, seed: u64) -> Result<SampleSet> {
    if m == 0 || d == 0 {
        return Err(CoreError::InvalidParameter("m and d must be >= 1".into()));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(CoreError::InvalidParameter(format!(
            "invalid box [{lo}, {hi}]"
        )));
    }
    if m.saturating_mul(d) > MAX_COORDS {
        return Err(CoreError::SizeBudget(format!(
            "m*d = {} exceeds coordinate budget {MAX_COORDS}",
            m * d
        )));
    }
    let mut rng = Xoshiro256pp::new(seed);
    let data: Vec<f64> = (0..m * d).map(|_| rng.uniform(lo, hi)).collect();
    Ok(SampleSet {
        data,
        m,
        d,
        lo,
        hi,
        seed,
    })
}

/// Separation radius q = (1/2) min_{j != k} ||x_j - x_k||, exact O(m^2 d)
/// pairwise scan.
pub fn separation_radius(s: &SampleSet) -> Result<f64> {
    if s.m < 2 {
        return Err(CoreError::InvalidParameter(
            "separation radius needs m >= 2".into(),
        ));
    }
    let mut min_sq = f64::INFINITY;
    for i in 0..s.m {
        let pi = s.point(i);
        for j in (i + 1)..s.m {
            let dq = sq_dist(pi, s.point(j));
            if dq < min_sq {
                min_sq = dq;
            }
        }
    }
    Ok(0.5 * min_sq.sqrt())
}

/// Monte-Carlo lower estimate of the fill distance: max over uniform
/// probe points of the distance to the nearest sample point. A lower
/// bound of the true h, tightening as probes grow.
pub fn fill_distance_estimate(s: &SampleSet, probes: usize, seed: u64) -> Result<f64> {
    if s.m == 0 {
        return Err(CoreError::Empty("sample set".into()));
    }
    if probes == 0 {
        return Err(CoreError::InvalidParameter("probes must be >= 1".into()));
    }
    let mut rng = Xoshiro256pp::new(seed);
    let mut h_sq = 0.0f64;
    let mut probe = vec![0.0; s.d];
    for _ in 0..probes {
        for c in probe.iter_mut() {
            *c = rng.uniform(s.lo, s.hi);
        }
        let mut near = f64::INFINITY;
        for p in s.points() {
            let dq = sq_dist(&probe, p);
            if dq < near {
                near = dq;
            }
        }
        if near > h_sq {
            h_sq = near;
        }
    }
    Ok(h_sq.sqrt())
}

/// A probability bound that may be vacuous (negative); returned as-is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbBound {
    pub value: f64,
    pub vacuous: bool,
}

/// Lower bound on P(q >= t) for m i.i.d. uniform points on a set of the
/// given volume: 1 - m^2 pi^{d/2} t^d / (2 vol Gamma(d/2 + 1)).
pub fn separation_prob_bound(m: usize, d: usize, vol: f64, t: f64) -> Result<ProbBound> {
    if m < 2 || d == 0 {
        return Err(CoreError::InvalidParameter("need m >= 2, d >= 1".into()));
    }
    if !(vol > 0.0) || !vol.is_finite() || !(t >= 0.0) || !t.is_finite() {
        return Err(CoreError::NonFinite("vol or t".into()));
    }
    if t == 0.0 {
        return Ok(ProbBound {
            value: 1.0,
            vacuous: false,
        });
    }
    // ball-volume term in log space: d can be large
    let ln_term = 2.0 * (m as f64).ln() + 0.5 * d as f64 * std::f64::consts::PI.ln()
        + d as f64 * t.ln()
        - (2.0 * vol).ln()
        - ln_gamma(d as f64 / 2.0 + 1.0);
    let value = 1.0 - ln_term.exp();
    Ok(ProbBound {
        value,
        vacuous: value < 0.0,
    })
}

/// Output of the Gaussian-sample separation lemma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSeparation {
    /// dimension threshold 2048 e^{4 pi} M^2 / sigma^2
    pub d0: f64,
    /// sigma sqrt(d) / 2
    pub q_lower: f64,
    pub confidence: f64,
    pub vacuous: bool,
}

/// Separation lower bound for m points with sub-Gaussian coordinates:
/// applies only for d > d0 (astronomical at desk scale), so this is a
/// formula evaluator.
pub fn gaussian_separation_bound(m: usize, d: usize, big_m: f64, sigma: f64) -> Result<GaussianSeparation> {
    if !(big_m > 0.0) || !(sigma > 0.0) {
        return Err(CoreError::InvalidParameter(
            "M and sigma must be positive".into(),
        ));
    }
    if m < 2 || d == 0 {
        return Err(CoreError::InvalidParameter("need m >= 2, d >= 1".into()));
    }
    let e4pi = (4.0 * std::f64::consts::PI).exp();
    let d0 = 2048.0 * e4pi * big_m * big_m / (sigma * sigma);
    let df = d as f64;
    let q_lower = sigma * df.sqrt() / 2.0;
    let m2 = (m * m) as f64;
    let confidence = 1.0
        - 8.0 * m2 * e4pi
            * ((-df / (96.0 * big_m * big_m)).exp()
                + (-sigma * sigma * df / (5824.0 * big_m * big_m)).exp());
    Ok(GaussianSeparation {
        d0,
        q_lower,
        confidence,
        vacuous: confidence < 0.0,
    })
}
