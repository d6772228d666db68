//! Principal component analysis with a whitened projection variant.
//!
//! `pca_fit` picks its eigenproblem by shape: the d×d sample covariance
//! when d <= n, otherwise the n×n Gram matrix (snapshot method), which
//! yields identical leading eigenpairs without materializing a huge
//! covariance. `GramProjector` goes one step further for very wide data
//! and never materializes the basis at all.

use crate::{DcpError, Result};
use nalgebra::{DMatrix, DVector};

/// Retained eigenvalues must exceed `WPCA_EIGENVALUE_FLOOR * lambda_1`
/// for whitened projection; below that the division amplifies noise.
pub const WPCA_EIGENVALUE_FLOOR: f64 = 1e-10;

/// Mean, column-orthonormal basis, and nonincreasing eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: DVector<f64>,
    /// d_in x d_out, columns are leading covariance eigenvectors.
    pub basis: DMatrix<f64>,
    /// Length d_out, nonnegative, nonincreasing.
    pub eigenvalues: DVector<f64>,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.basis.ncols()
    }
}

fn validate_fit(data: &DMatrix<f64>, d_out: usize) -> Result<()> {
    let (n, d) = (data.nrows(), data.ncols());
    if n < 2 {
        return Err(DcpError::DegenerateTraining(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    if d_out < 1 || d_out > (n - 1).min(d) {
        return Err(DcpError::Dimension(format!(
            "d_out {d_out} out of range 1..={} for {n} samples of dim {d}",
            (n - 1).min(d)
        )));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(DcpError::Input("non-finite training value".into()));
    }
    Ok(())
}

/// Eigenpairs of a symmetric PSD matrix, sorted by descending eigenvalue
/// (ties keep ascending original index), negatives clamped to zero.
fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let vectors = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

/// Fit PCA on `data` (rows are samples) keeping `d_out` components.
pub fn pca_fit(data: &DMatrix<f64>, d_out: usize) -> Result<PcaModel> {
    validate_fit(data, d_out)?;
    let (n, d) = (data.nrows(), data.ncols());
    let mean = data.row_mean().transpose();
    let mut centered = data.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }

    if d <= n {
        let cov = centered.transpose() * &centered / (n as f64 - 1.0);
        let (values, vectors) = sorted_eigen(cov);
        Ok(PcaModel {
            mean,
            basis: vectors.columns(0, d_out).into_owned(),
            eigenvalues: DVector::from_iterator(d_out, values.into_iter().take(d_out)),
        })
    } else {
        // Snapshot method: XXᵀ v = s v implies XᵀX (Xᵀv) = s (Xᵀv) with
        // ‖Xᵀv‖ = sqrt(s), so u = Xᵀv / sqrt(s) and lambda = s / (n-1).
        let gram = &centered * centered.transpose();
        let (values, vectors) = sorted_eigen(gram);
        let mut basis = DMatrix::zeros(d, d_out);
        let mut eigenvalues = DVector::zeros(d_out);
        for i in 0..d_out {
            let s = values[i];
            if s <= 1e-12 * values[0].max(1e-300) {
                return Err(DcpError::Conditioning(format!(
                    "component {i} is numerically rank-deficient (gram eigenvalue {s:e})"
                )));
            }
            let u = centered.transpose() * vectors.column(i) / s.sqrt();
            basis.set_column(i, &u);
            eigenvalues[i] = s / (n as f64 - 1.0);
        }
        Ok(PcaModel {
            mean,
            basis,
            eigenvalues,
        })
    }
}

fn check_input_dim(m: &PcaModel, x: &DVector<f64>) -> Result<()> {
    if x.len() != m.input_dim() {
        return Err(DcpError::Dimension(format!(
            "input has dim {}, model expects {}",
            x.len(),
            m.input_dim()
        )));
    }
    Ok(())
}

/// Mean-centered orthogonal projection onto the basis.
pub fn pca_project(m: &PcaModel, x: &DVector<f64>) -> Result<DVector<f64>> {
    check_input_dim(m, x)?;
    Ok(m.basis.transpose() * (x - &m.mean))
}

/// Projection with per-component variance normalization:
/// `y_i = u_iᵀ(x - mean) / sqrt(lambda_i)`.
pub fn wpca_project(m: &PcaModel, x: &DVector<f64>) -> Result<DVector<f64>> {
    check_input_dim(m, x)?;
    let floor = WPCA_EIGENVALUE_FLOOR * m.eigenvalues.max();
    let mut y = pca_project(m, x)?;
    for i in 0..y.len() {
        let lam = m.eigenvalues[i];
        if lam <= floor {
            return Err(DcpError::Conditioning(format!(
                "eigenvalue {i} = {lam:e} is below the whitening floor {floor:e}"
            )));
        }
        y[i] /= lam.sqrt();
    }
    Ok(y)
}

#[inline]
fn dot_f32(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

/// Whitened projector for very wide `f32` features, built from the Gram
/// matrix so the d x d_out basis is never materialized. Projections are
/// linear combinations of dot products against the training vectors, which
/// the caller keeps and passes back to [`GramProjector::project`].
pub struct GramProjector {
    mean: Vec<f64>,
    /// Row i = v_iᵀ / (sqrt(s_i) * sqrt(lambda_i)) over training samples.
    coeff: DMatrix<f64>,
    /// Per training vector: dot with the mean.
    train_dot_mean: Vec<f64>,
    mean_dot_mean: f64,
}

impl GramProjector {
    pub fn fit(train: &[Vec<f32>], d_out: usize) -> Result<Self> {
        let n = train.len();
        if n < 2 {
            return Err(DcpError::DegenerateTraining(format!(
                "need at least 2 samples, got {n}"
            )));
        }
        let d = train[0].len();
        if train.iter().any(|t| t.len() != d) {
            return Err(DcpError::Dimension("ragged training rows".into()));
        }
        if d_out < 1 || d_out > (n - 1).min(d) {
            return Err(DcpError::Dimension(format!(
                "d_out {d_out} out of range 1..={} for {n} samples of dim {d}",
                (n - 1).min(d)
            )));
        }

        let mut mean = vec![0.0f64; d];
        for t in train {
            for (m, &v) in mean.iter_mut().zip(t) {
                *m += v as f64;
            }
        }
        for m in mean.iter_mut() {
            *m /= n as f64;
        }
        let mean_dot_mean: f64 = mean.iter().map(|&v| v * v).sum();
        let train_dot_mean: Vec<f64> = train
            .iter()
            .map(|t| t.iter().zip(&mean).map(|(&x, &m)| x as f64 * m).sum())
            .collect();

        // Centered Gram, built from raw dot products:
        // (x_i - m)ᵀ(x_j - m) = x_iᵀx_j - a_i - a_j + mᵀm.
        let raw_rows = crate::par::map_range(n, |i| {
            (i..n).map(|j| dot_f32(&train[i], &train[j])).collect::<Vec<f64>>()
        });
        let mut gram = DMatrix::zeros(n, n);
        for (i, row) in raw_rows.iter().enumerate() {
            for (off, &raw) in row.iter().enumerate() {
                let j = i + off;
                let v = raw - train_dot_mean[i] - train_dot_mean[j] + mean_dot_mean;
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }

        let (values, vectors) = sorted_eigen(gram);
        let lambda_1 = values[0] / (n as f64 - 1.0);
        let floor = WPCA_EIGENVALUE_FLOOR * lambda_1;
        let mut coeff = DMatrix::zeros(d_out, n);
        for i in 0..d_out {
            let s = values[i];
            let lam = s / (n as f64 - 1.0);
            if lam <= floor {
                return Err(DcpError::Conditioning(format!(
                    "eigenvalue {i} = {lam:e} is below the whitening floor {floor:e}"
                )));
            }
            let scale = 1.0 / (s.sqrt() * lam.sqrt());
            for j in 0..n {
                coeff[(i, j)] = vectors[(j, i)] * scale;
            }
        }
        Ok(GramProjector {
            mean,
            coeff,
            train_dot_mean,
            mean_dot_mean,
        })
    }

    pub fn output_dim(&self) -> usize {
        self.coeff.nrows()
    }

    /// Whitened projection of `x`; `train` must be the same slice the
    /// projector was fitted on.
    pub fn project(&self, x: &[f32], train: &[Vec<f32>]) -> Result<DVector<f64>> {
        let n = self.coeff.ncols();
        if train.len() != n {
            return Err(DcpError::Dimension(format!(
                "projector was fitted on {n} training vectors, got {}",
                train.len()
            )));
        }
        if x.len() != self.mean.len() {
            return Err(DcpError::Dimension(format!(
                "input has dim {}, projector expects {}",
                x.len(),
                self.mean.len()
            )));
        }
        let x_dot_mean: f64 = x.iter().zip(&self.mean).map(|(&v, &m)| v as f64 * m).sum();
        let w = DVector::from_iterator(
            n,
            (0..n).map(|j| {
                dot_f32(&train[j], x) - self.train_dot_mean[j] - x_dot_mean + self.mean_dot_mean
            }),
        );
        Ok(&self.coeff * w)
    }

    /// Flat state for serialization: mean, coefficient matrix (row-major,
    /// d_out x n), per-train-vector mean dots, mean self-dot.
    pub fn to_parts(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>, f64) {
        let d_out = self.coeff.nrows();
        let n = self.coeff.ncols();
        let mut coeff = Vec::with_capacity(d_out * n);
        for i in 0..d_out {
            for j in 0..n {
                coeff.push(self.coeff[(i, j)]);
            }
        }
        (
            self.mean.clone(),
            coeff,
            self.train_dot_mean.clone(),
            self.mean_dot_mean,
        )
    }

    /// Inverse of [`GramProjector::to_parts`].
    pub fn from_parts(
        mean: Vec<f64>,
        coeff_row_major: Vec<f64>,
        train_dot_mean: Vec<f64>,
        mean_dot_mean: f64,
    ) -> Result<GramProjector> {
        let n = train_dot_mean.len();
        if n == 0 || coeff_row_major.len() % n != 0 {
            return Err(DcpError::Dimension(format!(
                "coefficient block of {} values does not tile {} training columns",
                coeff_row_major.len(),
                n
            )));
        }
        let d_out = coeff_row_major.len() / n;
        let coeff = DMatrix::from_row_iterator(d_out, n, coeff_row_major);
        Ok(GramProjector {
            mean,
            coeff,
            train_dot_mean,
            mean_dot_mean,
        })
    }
}
