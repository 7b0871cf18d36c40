//! Principal component analysis via a cyclic Jacobi eigendecomposition of
//! the feature covariance. Embedding dimensions are small (~64), so the
//! dense symmetric solve is cheap and fully deterministic.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct PcaProjection<T: Real> {
    /// k orthonormal direction vectors, rows of length dim, variance-descending.
    pub components: Vec<Vec<T>>,
    pub explained_variance: Vec<T>,
    pub explained_variance_ratio: Vec<T>,
    /// items x k scores, row-major.
    pub projected: Vec<T>,
    pub k: usize,
    pub labels: Vec<u8>,
}

impl<T: Real> PcaProjection<T> {
    pub fn projected_row(&self, i: usize) -> &[T] {
        &self.projected[i * self.k..(i + 1) * self.k]
    }

    /// CSV form: k score columns then the label.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (i, label) in self.labels.iter().enumerate() {
            for v in self.projected_row(i) {
                out.push_str(&format!("{},", v.to_f64_c()));
            }
            out.push_str(&format!("{label}\n"));
        }
        fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
    }
}

/// Top-k principal components of the mean-centered space.
pub fn pca<T: Real>(space: &EmbeddingSpace<T>, k: usize) -> Result<PcaProjection<T>> {
    space.validate()?;
    let n = space.rows();
    let dim = space.dim;
    if n == 0 {
        return Err(Error::EmptySpace);
    }
    if k == 0 || k > n.min(dim) {
        return Err(Error::KTooLarge { k, rows: n, dim });
    }

    let mut mean = vec![T::zero(); dim];
    for i in 0..n {
        for (m, &v) in mean.iter_mut().zip(space.row(i)) {
            *m += v;
        }
    }
    let inv_n = T::one() / T::from_f64_c(n as f64);
    for m in &mut mean {
        *m *= inv_n;
    }

    // covariance (dim x dim), normalized by n - 1
    let denom = T::from_f64_c(if n > 1 { (n - 1) as f64 } else { 1.0 });
    let mut cov = vec![T::zero(); dim * dim];
    let mut centered = vec![T::zero(); n * dim];
    for i in 0..n {
        for (d, &v) in space.row(i).iter().enumerate() {
            centered[i * dim + d] = v - mean[d];
        }
    }
    for i in 0..n {
        let row = &centered[i * dim..(i + 1) * dim];
        for a in 0..dim {
            let ra = row[a];
            for b in a..dim {
                cov[a * dim + b] += ra * row[b];
            }
        }
    }
    for a in 0..dim {
        for b in a..dim {
            let v = cov[a * dim + b] / denom;
            cov[a * dim + b] = v;
            cov[b * dim + a] = v;
        }
    }
    let total_variance: T = (0..dim).map(|d| cov[d * dim + d]).sum();

    let (eigvals, eigvecs) = jacobi_eigen(&cov, dim);

    // order by descending eigenvalue, deterministic tie-break on index
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eigvals[b].partial_cmp(&eigvals[a]).unwrap().then(a.cmp(&b)));

    let mut components = Vec::with_capacity(k);
    let mut explained = Vec::with_capacity(k);
    for &c in order.iter().take(k) {
        let mut comp: Vec<T> = (0..dim).map(|d| eigvecs[d * dim + c]).collect();
        // sign convention: largest-magnitude entry positive
        let lead = comp
            .iter()
            .enumerate()
            .max_by(|(i, a), (j, b)| a.abs().partial_cmp(&b.abs()).unwrap().then(j.cmp(i)))
            .map(|(i, _)| i)
            .unwrap();
        if comp[lead] < T::zero() {
            for v in &mut comp {
                *v = -*v;
            }
        }
        components.push(comp);
        explained.push(eigvals[c].max(T::zero()));
    }

    let ratio: Vec<T> = explained
        .iter()
        .map(|&v| if total_variance > T::zero() { v / total_variance } else { T::zero() })
        .collect();

    let mut projected = vec![T::zero(); n * k];
    for i in 0..n {
        let row = &centered[i * dim..(i + 1) * dim];
        for (c, comp) in components.iter().enumerate() {
            let mut acc = T::zero();
            for d in 0..dim {
                acc += row[d] * comp[d];
            }
            projected[i * k + c] = acc;
        }
    }

    Ok(PcaProjection {
        components,
        explained_variance: explained,
        explained_variance_ratio: ratio,
        projected,
        k,
        labels: space.labels.clone(),
    })
}

/// Cyclic Jacobi for a symmetric matrix; returns (eigenvalues, column
/// eigenvectors). Converges quadratically; 100 sweeps is far beyond need.
fn jacobi_eigen<T: Real>(matrix: &[T], dim: usize) -> (Vec<T>, Vec<T>) {
    let mut a = matrix.to_vec();
    let mut v = vec![T::zero(); dim * dim];
    for d in 0..dim {
        v[d * dim + d] = T::one();
    }
    let eps = T::from_f64_c(1e-30);
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..dim {
            for q in (p + 1)..dim {
                off += a[p * dim + q] * a[p * dim + q];
            }
        }
        if off <= eps {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = a[p * dim + q];
                if apq == T::zero() {
                    continue;
                }
                let app = a[p * dim + p];
                let aqq = a[q * dim + q];
                let theta = (aqq - app) / (T::from_f64_c(2.0) * apq);
                let t = {
                    let sign = if theta < T::zero() { -T::one() } else { T::one() };
                    sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for i in 0..dim {
                    let aip = a[i * dim + p];
                    let aiq = a[i * dim + q];
                    a[i * dim + p] = c * aip - s * aiq;
                    a[i * dim + q] = s * aip + c * aiq;
                }
                for j in 0..dim {
                    let apj = a[p * dim + j];
                    let aqj = a[q * dim + j];
                    a[p * dim + j] = c * apj - s * aqj;
                    a[q * dim + j] = s * apj + c * aqj;
                }
                for i in 0..dim {
                    let vip = v[i * dim + p];
                    let viq = v[i * dim + q];
                    v[i * dim + p] = c * vip - s * viq;
                    v[i * dim + q] = s * vip + c * viq;
                }
            }
        }
    }
    let eigvals = (0..dim).map(|d| a[d * dim + d]).collect();
    (eigvals, v)
}
