//! Dense symmetric helpers for the multivariate Gaussian.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Jitter multipliers tried, in order, after a plain factorization fails.
pub(crate) const JITTER_STEPS: [f64; 3] = [1e-9, 1e-8, 1e-7];

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = A`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    /// Plain factorization; `None` if a pivot is not strictly positive.
    pub(crate) fn factor(a: &[f64], dim: usize) -> Option<Self> {
        debug_assert_eq!(a.len(), dim * dim);
        let mut l = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let mut s = a[i * dim + j];
                for k in 0..j {
                    s -= l[i * dim + k] * l[j * dim + k];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    l[i * dim + i] = libm::sqrt(s);
                } else {
                    l[i * dim + j] = s / l[j * dim + j];
                }
            }
        }
        Some(Self { dim, lower: l })
    }

    /// Factor `a`, retrying with `eps * trace(a) / d` added to the diagonal
    /// for each `eps` in [`JITTER_STEPS`]. Returns the factor together with
    /// the jitter that was applied (0 if none).
    pub(crate) fn factor_with_jitter(a: &[f64], dim: usize) -> Result<(Self, f64)> {
        if let Some(c) = Self::factor(a, dim) {
            return Ok((c, 0.0));
        }
        let scale = trace(a, dim) / dim as f64;
        let mut work = a.to_vec();
        for eps in JITTER_STEPS {
            let jitter = eps * scale;
            if !(jitter > 0.0) {
                break;
            }
            for i in 0..dim {
                work[i * dim + i] = a[i * dim + i] + jitter;
            }
            if let Some(c) = Self::factor(&work, dim) {
                return Ok((c, jitter));
            }
        }
        Err(Error::NotPositiveDefinite)
    }

    /// `ln |A| = 2 Σ ln L_ii`.
    pub(crate) fn log_det(&self) -> f64 {
        (0..self.dim)
            .map(|i| libm::log(self.lower[i * self.dim + i]))
            .sum::<f64>()
            * 2.0
    }

    /// `vᵀ A⁻¹ v` by forward substitution on `L z = v`.
    pub(crate) fn mahalanobis_sq(&self, v: &[f64]) -> f64 {
        let d = self.dim;
        let mut z = vec![0.0; d];
        let mut acc = 0.0;
        for i in 0..d {
            let row = &self.lower[i * d..i * d + i];
            let s = v[i] - row.iter().zip(&z[..i]).map(|(l, z)| l * z).sum::<f64>();
            z[i] = s / self.lower[i * d + i];
            acc += z[i] * z[i];
        }
        acc
    }
}

pub(crate) fn trace(a: &[f64], dim: usize) -> f64 {
    (0..dim).map(|i| a[i * dim + i]).sum()
}

/// Replace `a` by `(a + aᵀ) / 2`.
pub(crate) fn symmetrize(a: &mut [f64], dim: usize) {
    for i in 0..dim {
        for j in (i + 1)..dim {
            let m = 0.5 * (a[i * dim + j] + a[j * dim + i]);
            a[i * dim + j] = m;
            a[j * dim + i] = m;
        }
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns the eigenvalues and the eigenvectors as the columns of a
/// row-major matrix.
pub(crate) fn symmetric_eigen(a: &[f64], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut m = a.to_vec();
    let mut v = vec![0.0; dim * dim];
    for i in 0..dim {
        v[i * dim + i] = 1.0;
    }
    for _ in 0..100 {
        let off: f64 = (0..dim)
            .flat_map(|i| (0..dim).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * dim + j] * m[i * dim + j])
            .sum();
        let scale: f64 = (0..dim).map(|i| m[i * dim + i] * m[i * dim + i]).sum();
        if off <= f64::EPSILON * f64::EPSILON * scale || off == 0.0 {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = m[p * dim + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * dim + q] - m[p * dim + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..dim {
                    let mkp = m[k * dim + p];
                    let mkq = m[k * dim + q];
                    m[k * dim + p] = c * mkp - s * mkq;
                    m[k * dim + q] = s * mkp + c * mkq;
                }
                for k in 0..dim {
                    let mpk = m[p * dim + k];
                    let mqk = m[q * dim + k];
                    m[p * dim + k] = c * mpk - s * mqk;
                    m[q * dim + k] = s * mpk + c * mqk;
                }
                for k in 0..dim {
                    let vkp = v[k * dim + p];
                    let vkq = v[k * dim + q];
                    v[k * dim + p] = c * vkp - s * vkq;
                    v[k * dim + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..dim).map(|i| m[i * dim + i]).collect(), v)
}

/// Closest matrix to `a` (in the Gaussian likelihood sense) whose scaled
/// form `D^{-1/2} A D^{-1/2}` has every eigenvalue at least 1, where
/// `D = diag(floors)`. Returns `a` unchanged when it already satisfies this.
pub(crate) fn clip_scaled_eigenvalues(a: &mut [f64], dim: usize, floors: &[f64]) {
    let root: Vec<f64> = floors.iter().map(|&f| libm::sqrt(f)).collect();
    let mut b = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            b[i * dim + j] = a[i * dim + j] / (root[i] * root[j]);
        }
    }
    if Cholesky::factor(&shifted(&b, dim, -1.0), dim).is_some() {
        return;
    }
    let (values, vectors) = symmetric_eigen(&b, dim);
    for i in 0..dim {
        for j in i..dim {
            let s: f64 = (0..dim)
                .map(|k| vectors[i * dim + k] * values[k].max(1.0) * vectors[j * dim + k])
                .sum();
            let v = s * root[i] * root[j];
            a[i * dim + j] = v;
            a[j * dim + i] = v;
        }
    }
}

fn shifted(a: &[f64], dim: usize, by: f64) -> Vec<f64> {
    let mut out = a.to_vec();
    for i in 0..dim {
        out[i * dim + i] += by;
    }
    out
}
