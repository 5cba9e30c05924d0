//! Kernel (Gram) matrix assembly.

use crate::error::Result;
use crate::kernels::Kernel;
use crate::linalg::SymmetricMatrix;
use crate::sampling::{sq_dist, SampleSet};

/// Dense m x m matrix K(x_i, x_j) over one sample set.
pub fn gram_matrix(kernel: &Kernel, s: &SampleSet) -> Result<SymmetricMatrix> {
    if let Some(d) = kernel.expected_dim() {
        if d != s.dim() {
            return Err(crate::error::CoreError::DimensionMismatch {
                expected: d,
                got: s.dim(),
            });
        }
    }
    let m = s.len();
    let mut data = vec![0.0; m * m];
    let diag = kernel.diagonal();
    for i in 0..m {
        data[i * m + i] = diag;
        let pi = s.point(i);
        for j in (i + 1)..m {
            let v = kernel.eval_sq_dist(sq_dist(pi, s.point(j)))?;
            data[i * m + j] = v;
            data[j * m + i] = v;
        }
    }
    SymmetricMatrix::new(m, data)
}

/// Rectangular kernel matrix K(x_i, y_j), rows over `a`, columns over `b`.
pub fn cross_matrix(kernel: &Kernel, a: &SampleSet, b: &SampleSet) -> Result<Vec<f64>> {
    if a.dim() != b.dim() {
        return Err(crate::error::CoreError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let (ma, mb) = (a.len(), b.len());
    let mut out = vec![0.0; ma * mb];
    for i in 0..ma {
        let pi = a.point(i);
        for j in 0..mb {
            out[i * mb + j] = kernel.eval_sq_dist(sq_dist(pi, b.point(j)))?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigen_sym;
    use crate::sampling::sample_uniform;

    #[test]
    fn gram_is_positive_definite_for_distinct_points() {
        for seed in 0..5 {
            let s = sample_uniform(20, 3, 0.0, 1.0, seed).unwrap();
            for k in [Kernel::gaussian(0.5).unwrap(), Kernel::sobolev(2.5, 3).unwrap()] {
                let g = gram_matrix(&k, &s).unwrap();
                let dec = eigen_sym(&g).unwrap();
                assert!(
                    *dec.eigenvalues.last().unwrap() > 0.0,
                    "family {:?} seed {seed}",
                    k.family()
                );
            }
        }
    }

    #[test]
    fn cross_matrix_matches_pointwise_eval() {
        let a = sample_uniform(4, 2, 0.0, 1.0, 1).unwrap();
        let b = sample_uniform(3, 2, 0.0, 1.0, 2).unwrap();
        let k = Kernel::gaussian(1.3).unwrap();
        let c = cross_matrix(&k, &a, &b).unwrap();
        for i in 0..4 {
            for j in 0..3 {
                assert_eq!(c[i * 3 + j], k.eval(a.point(i), b.point(j)).unwrap());
            }
        }
    }

    #[test]
    fn sobolev_dimension_enforced() {
        let s = sample_uniform(5, 3, 0.0, 1.0, 1).unwrap();
        let k = Kernel::sobolev(2.0, 2).unwrap();
        assert!(gram_matrix(&k, &s).is_err());
    }
}
