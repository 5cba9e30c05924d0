//! Dense symmetric linear algebra: eigendecomposition, SPD solves,
//! condition numbers. Desk scale only (dense O(m^3)).

use crate::error::{CoreError, Result};

/// Dense symmetric matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

/// Relative asymmetry tolerated on construction.
const SYMMETRY_TOL: f64 = 1e-12;

impl SymmetricMatrix {
    /// Validates symmetry (to 1e-12 relative) and finiteness, then
    /// symmetrizes exactly by averaging.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        assert_eq!(data.len(), n * n, "storage size mismatch");
        let mut scale = 0.0f64;
        for &v in &data {
            if !v.is_finite() {
                return Err(CoreError::NonFinite("matrix entry".into()));
            }
            scale = scale.max(v.abs());
        }
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((data[i * n + j] - data[j * n + i]).abs());
            }
        }
        if scale > 0.0 && worst / scale > SYMMETRY_TOL {
            return Err(CoreError::NotSymmetric {
                asymmetry: worst / scale,
            });
        }
        let mut data = data;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (data[i * n + j] + data[j * n + i]);
                data[i * n + j] = avg;
                data[j * n + i] = avg;
            }
        }
        Ok(SymmetricMatrix { n, data })
    }

    /// Builds from a symmetric generator f(i, j); only i <= j is evaluated.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                if !v.is_finite() {
                    return Err(CoreError::NonFinite(format!("entry ({i},{j})")));
                }
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Ok(SymmetricMatrix { n, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        SymmetricMatrix { n, data }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = diag[i];
        }
        SymmetricMatrix { n, data }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Adds c to the diagonal, in place.
    pub fn shift_diagonal(&mut self, c: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += c;
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for j in 0..n {
                acc += row[j] * x[j];
            }
            y[i] = acc;
        }
        y
    }
}

/// Eigendecomposition A = V diag(sigma) V^T with eigenvalues sorted
/// descending and orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// row-major n x n; column j is the eigenvector for eigenvalues[j]
    pub eigenvectors: Vec<f64>,
    pub n: usize,
}

impl EigenDecomposition {
    pub fn eigenvector(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.eigenvectors[i * self.n + j])
    }
}

const JACOBI_MAX_SWEEPS: usize = 64;
const JACOBI_OFFDIAG_TOL: f64 = 1e-13;
/// Above this order the Householder + QL path replaces Jacobi; the two
/// agree to the reconstruction tolerance and QL is far cheaper.
const JACOBI_MAX_ORDER: usize = 256;

/// Eigendecomposition of a symmetric matrix.
///
/// Cyclic Jacobi rotations up to order 256 (convergence when the
/// off-diagonal Frobenius norm falls below 1e-13 ||A||_F, hard cap of
/// 64 sweeps); Householder tridiagonalization with implicit-shift QL
/// above that. Deterministic for identical input bits; equal
/// eigenvalues keep the solver output order.
pub fn eigen_sym(a: &SymmetricMatrix) -> Result<EigenDecomposition> {
    if a.n > JACOBI_MAX_ORDER {
        return eigen_sym_ql(a);
    }
    eigen_sym_jacobi(a)
}

/// Jacobi path; exposed for cross-checking the QL path in tests.
pub fn eigen_sym_jacobi(a: &SymmetricMatrix) -> Result<EigenDecomposition> {
    let n = a.n;
    let mut m = a.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let norm = a.frobenius_norm();
    if n > 1 && norm > 0.0 {
        let tol = JACOBI_OFFDIAG_TOL * norm;
        for _sweep in 0..JACOBI_MAX_SWEEPS {
            let mut off = 0.0f64;
            for i in 0..n {
                for j in (i + 1)..n {
                    off += 2.0 * m[i * n + j] * m[i * n + j];
                }
            }
            if off.sqrt() < tol {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = m[p * n + p];
                    let aqq = m[q * n + q];
                    let theta = 0.5 * (aqq - app) / apq;
                    let t = if theta.abs() > 1e150 {
                        0.5 / theta
                    } else {
                        let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                        sign / (theta.abs() + (theta * theta + 1.0).sqrt())
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    // rows/columns p and q
                    for k in 0..n {
                        if k == p || k == q {
                            continue;
                        }
                        let akp = m[k * n + p];
                        let akq = m[k * n + q];
                        let new_kp = akp - s * (akq + tau * akp);
                        let new_kq = akq + s * (akp - tau * akq);
                        m[k * n + p] = new_kp;
                        m[p * n + k] = new_kp;
                        m[k * n + q] = new_kq;
                        m[q * n + k] = new_kq;
                    }
                    m[p * n + p] = app - t * apq;
                    m[q * n + q] = aqq + t * apq;
                    m[p * n + q] = 0.0;
                    m[q * n + p] = 0.0;
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = vkp - s * (vkq + tau * vkp);
                        v[k * n + q] = vkq + s * (vkp - tau * vkq);
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[j * n + j]
            .partial_cmp(&m[i * n + i])
            .unwrap()
            .then(i.cmp(&j))
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[i * n + i]).collect();
    let mut eigenvectors = vec![0.0; n * n];
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            eigenvectors[i * n + new_j] = v[i * n + old_j];
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
        n,
    })
}

/// Householder reduction to tridiagonal form with accumulation of the
/// orthogonal transformations in z (row-major, n x n).
fn tred2(z: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += z[i * n + k].abs();
            }
            if scale == 0.0 {
                e[i] = z[i * n + l];
            } else {
                for k in 0..=l {
                    z[i * n + k] /= scale;
                    h += z[i * n + k] * z[i * n + k];
                }
                let mut f = z[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z[i * n + l] = f - g;
                f = 0.0;
                for j in 0..=l {
                    z[j * n + i] = z[i * n + j] / h;
                    let mut g2 = 0.0;
                    for k in 0..=j {
                        g2 += z[j * n + k] * z[i * n + k];
                    }
                    for k in (j + 1)..=l {
                        g2 += z[k * n + j] * z[i * n + k];
                    }
                    e[j] = g2 / h;
                    f += e[j] * z[i * n + j];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let fj = z[i * n + j];
                    let gj = e[j] - hh * fj;
                    e[j] = gj;
                    for k in 0..=j {
                        z[j * n + k] -= fj * e[k] + gj * z[i * n + k];
                    }
                }
            }
        } else {
            e[i] = z[i * n + l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += z[i * n + k] * z[k * n + j];
                }
                for k in 0..i {
                    z[k * n + j] -= g * z[k * n + i];
                }
            }
        }
        d[i] = z[i * n + i];
        z[i * n + i] = 1.0;
        for j in 0..i {
            z[j * n + i] = 0.0;
            z[i * n + j] = 0.0;
        }
    }
}

/// Implicit-shift QL on a tridiagonal (d, e) with eigenvector rotation
/// accumulation in z; columns of z become the eigenvectors.
fn tql2(d: &mut [f64], e: &mut [f64], z: &mut [f64], n: usize) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut mm = l;
            while mm + 1 < n {
                let dd = d[mm].abs() + d[mm + 1].abs();
                if e[mm].abs() <= f64::EPSILON * dd {
                    break;
                }
                mm += 1;
            }
            if mm == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(CoreError::InvalidParameter(
                    "eigenvalue iteration failed to converge".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[mm] - d[l] + e[l] / (g + if g >= 0.0 { r } else { -r });
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut broke_early = false;
            for i in (l..mm).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[mm] = 0.0;
                    broke_early = i >= l;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[k * n + i + 1];
                    z[k * n + i + 1] = s * z[k * n + i] + c * f;
                    z[k * n + i] = c * z[k * n + i] - s * f;
                }
            }
            if broke_early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[mm] = 0.0;
        }
    }
    Ok(())
}

/// Full eigendecomposition via Householder + QL; used above the Jacobi
/// size cutoff and exposed for cross-checks.
pub fn eigen_sym_ql(a: &SymmetricMatrix) -> Result<EigenDecomposition> {
    let n = a.n;
    let mut z = a.data.clone();
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];
    if n == 1 {
        return Ok(EigenDecomposition {
            eigenvalues: vec![a.data[0]],
            eigenvectors: vec![1.0],
            n,
        });
    }
    tred2(&mut z, n, &mut d, &mut e);
    tql2(&mut d, &mut e, &mut z, n)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap().then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut eigenvectors = vec![0.0; n * n];
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            eigenvectors[i * n + new_j] = z[i * n + old_j];
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
        n,
    })
}

/// Eigenvalues only, sorted descending. Householder tridiagonalization
/// followed by implicit-shift QL; O(m^3) with a much smaller constant
/// than the full Jacobi decomposition, for spectrum-only workloads.
pub fn eigenvalues_sym(a: &SymmetricMatrix) -> Result<Vec<f64>> {
    let n = a.n;
    if n == 0 {
        return Ok(vec![]);
    }
    let mut m = a.data.clone();
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];
    // Householder reduction (NR tred2 without eigenvector accumulation)
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += m[i * n + k].abs();
            }
            if scale == 0.0 {
                e[i] = m[i * n + l];
            } else {
                for k in 0..=l {
                    m[i * n + k] /= scale;
                    h += m[i * n + k] * m[i * n + k];
                }
                let mut f = m[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                m[i * n + l] = f - g;
                f = 0.0;
                for j in 0..=l {
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += m[j * n + k] * m[i * n + k];
                    }
                    for k in (j + 1)..=l {
                        g += m[k * n + j] * m[i * n + k];
                    }
                    e[j] = g / h;
                    f += e[j] * m[i * n + j];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let fj = m[i * n + j];
                    let gj = e[j] - hh * fj;
                    e[j] = gj;
                    for k in 0..=j {
                        m[j * n + k] -= fj * e[k] + gj * m[i * n + k];
                    }
                }
            }
        } else {
            e[i] = m[i * n + l];
        }
        d[i] = h;
    }
    for i in 0..n {
        d[i] = m[i * n + i];
    }
    // implicit-shift QL on the tridiagonal (NR tqli without z)
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut mm = l;
            while mm + 1 < n {
                let dd = d[mm].abs() + d[mm + 1].abs();
                if e[mm].abs() <= f64::EPSILON * dd {
                    break;
                }
                mm += 1;
            }
            if mm == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(CoreError::InvalidParameter(
                    "eigenvalue iteration failed to converge".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[mm] - d[l] + e[l] / (g + if g >= 0.0 { r.abs() } else { -r.abs() });
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            for i in (l..mm).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[mm] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                f = 0.0;
                let _ = f;
            }
            if r == 0.0 && mm > l + 1 {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[mm] = 0.0;
        }
    }
    d.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(d)
}

/// Condition number sigma_1 / sigma_m of an SPD decomposition.
pub fn condition_number(dec: &EigenDecomposition) -> Result<f64> {
    let min = *dec.eigenvalues.last().ok_or_else(|| CoreError::Empty("eigenvalues".into()))?;
    if min <= 0.0 {
        return Err(CoreError::NotPositiveDefinite { min_eig: min });
    }
    Ok(dec.eigenvalues[0] / min)
}

/// Lower-triangular Cholesky factor of an SPD matrix, or None on breakdown.
pub fn cholesky(a: &SymmetricMatrix) -> Option<Vec<f64>> {
    let n = a.n;
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves L L^T x = b given the Cholesky factor.
pub fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        let mut sum = y[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[k * n + i] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    y
}

/// Result of an SPD solve.
#[derive(Debug, Clone)]
pub struct SpdSolution {
    pub x: Vec<f64>,
    /// relative residual ||Ax - b|| / ||b||
    pub residual: f64,
    /// true when the spectral fallback truncated small eigenvalues
    pub truncated: bool,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn relative_residual(a: &SymmetricMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let r: f64 = ax
        .iter()
        .zip(b)
        .map(|(ai, bi)| (ai - bi) * (ai - bi))
        .sum::<f64>()
        .sqrt();
    let nb = norm2(b);
    if nb == 0.0 {
        r
    } else {
        r / nb
    }
}

/// Spectral truncation threshold for the fallback solve, relative to sigma_1.
const TRUNCATION_REL: f64 = 1e-14;

/// Conditioning beyond which the directions near sigma_min carry mostly
/// amplified rounding noise and a plain solve degrades the solution.
const COND_LIMIT: f64 = 1e10;

/// Diagonal shift applied to noise-dominated systems, relative to sigma_1.
const JITTER_REL: f64 = 1e-11;

/// Upper bound on sigma_1 via the maximum absolute row sum.
fn row_sum_bound(a: &SymmetricMatrix) -> f64 {
    let n = a.n;
    let mut best = 0.0f64;
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            s += a.get(i, j).abs();
        }
        best = best.max(s);
    }
    best
}

/// Smallest-eigenvalue estimate by inverse power iteration on a Cholesky
/// factor. A rough value is enough: the caller compares against a
/// conditioning threshold with several orders of magnitude of margin.
fn min_eig_estimate(l: &[f64], n: usize) -> f64 {
    let scale = 1.0 / (n as f64).sqrt();
    let mut v: Vec<f64> = (0..n)
        .map(|i| if i % 2 == 0 { scale } else { -scale })
        .collect();
    let mut sigma = f64::INFINITY;
    for _ in 0..8 {
        let w = cholesky_solve(l, n, &v);
        let nw = norm2(&w);
        if !nw.is_finite() || nw == 0.0 {
            return 0.0;
        }
        sigma = 1.0 / nw;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
    }
    sigma
}

fn jittered_solve(a: &SymmetricMatrix, b: &[f64], tau: f64) -> Option<SpdSolution> {
    let mut shifted = a.clone();
    shifted.shift_diagonal(tau);
    let l = cholesky(&shifted)?;
    let x = cholesky_solve(&l, a.n, b);
    let res = relative_residual(a, &x, b);
    Some(SpdSolution {
        x,
        residual: res,
        truncated: true,
    })
}

/// Solves A x = b for SPD A. Attempts Cholesky with one step of
/// iterative refinement. Severely ill-conditioned systems (estimated
/// condition number above 1e10) are re-solved with a small diagonal
/// shift of 1e-11 sigma_1, since below that level the computed
/// directions are dominated by rounding noise; shifted solutions are
/// flagged as regularized. On Cholesky breakdown the shift is escalated,
/// and as a last resort a spectral pseudo-solve truncates eigenvalues
/// below 1e-14 sigma_1.
pub fn solve_spd(a: &SymmetricMatrix, b: &[f64]) -> Result<SpdSolution> {
    assert_eq!(b.len(), a.n, "rhs length mismatch");
    if norm2(b) == 0.0 {
        return Ok(SpdSolution {
            x: vec![0.0; a.n],
            residual: 0.0,
            truncated: false,
        });
    }
    let sigma1 = row_sum_bound(a);
    if let Some(l) = cholesky(a) {
        let min_eig = min_eig_estimate(&l, a.n);
        if min_eig > 0.0 && sigma1 / min_eig > COND_LIMIT {
            if let Some(sol) = jittered_solve(a, b, JITTER_REL * sigma1) {
                return Ok(sol);
            }
        }
        let mut x = cholesky_solve(&l, a.n, b);
        let mut res = relative_residual(a, &x, b);
        if res > 1e-12 {
            // one refinement step
            let ax = a.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let dx = cholesky_solve(&l, a.n, &r);
            let x2: Vec<f64> = x.iter().zip(&dx).map(|(xi, di)| xi + di).collect();
            let res2 = relative_residual(a, &x2, b);
            if res2 < res {
                x = x2;
                res = res2;
            }
        }
        return Ok(SpdSolution {
            x,
            residual: res,
            truncated: false,
        });
    }
    for mult in [1.0, 100.0, 10_000.0] {
        if let Some(sol) = jittered_solve(a, b, JITTER_REL * sigma1 * mult) {
            return Ok(sol);
        }
    }
    // spectral fallback
    let dec = eigen_sym(a)?;
    let sigma1 = dec.eigenvalues[0];
    if sigma1 <= 0.0 {
        return Err(CoreError::NumericallySingular {
            min_eig: *dec.eigenvalues.last().unwrap(),
        });
    }
    let thresh = TRUNCATION_REL * sigma1;
    let n = a.n;
    // x = V diag(1/sigma restricted) V^T b
    let mut vtb = vec![0.0; n];
    for j in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            acc += dec.eigenvectors[i * n + j] * b[i];
        }
        vtb[j] = acc;
    }
    let mut kept = 0usize;
    for j in 0..n {
        if dec.eigenvalues[j] > thresh {
            vtb[j] /= dec.eigenvalues[j];
            kept += 1;
        } else {
            vtb[j] = 0.0;
        }
    }
    if kept == 0 {
        return Err(CoreError::NumericallySingular {
            min_eig: *dec.eigenvalues.last().unwrap(),
        });
    }
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += dec.eigenvectors[i * n + j] * vtb[j];
        }
        x[i] = acc;
    }
    let res = relative_residual(a, &x, b);
    Ok(SpdSolution {
        x,
        residual: res,
        truncated: true,
    })
}
