//! Two-factor Gaussian identity model: `x = mean + F h + G w + noise`,
//! with `h` shared by all samples of one identity, `w` per sample, and
//! independent diagonal Gaussian noise.
//!
//! Fitting is exact EM over the stacked per-identity latent vector
//! `[h; w_1 .. w_n]`, so the marginal likelihood is nondecreasing.
//! Scoring compares the joint likelihood of two samples under a shared
//! `h` against independent ones.

use crate::{DcpError, Result};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::collections::BTreeMap;

const LN_2PI: f64 = 1.8378770664093453;

#[derive(Debug, Clone, PartialEq)]
pub struct PldaModel {
    pub mean: DVector<f64>,
    /// Between-identity basis F: d x d_h.
    pub between: DMatrix<f64>,
    /// Within-identity basis G: d x d_w.
    pub within: DMatrix<f64>,
    /// Diagonal noise variances, all positive.
    pub noise: DVector<f64>,
    /// Marginal log-likelihood before each update, plus one final value;
    /// nondecreasing by the EM guarantee.
    pub ll_trace: Vec<f64>,
}

impl PldaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Precompute the Gaussian factorizations used by LLR scoring.
    pub fn scorer(&self) -> Result<PldaScorer> {
        PldaScorer::new(self)
    }
}

/// Per-identity grouping of sample row indices, in first-appearance order
/// of the (sorted) label values.
fn group_by_label(labels: &[usize]) -> BTreeMap<usize, Vec<usize>> {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    groups
}

/// Factor columns from the top eigenpairs of a scatter matrix: column c is
/// sqrt(lambda_c) v_c. Directions with no usable variance fall back to a
/// seeded random unit vector at a small scale, so the EM start is always
/// full column rank.
fn factor_from_scatter(
    scatter: &DMatrix<f64>,
    k: usize,
    var_floor: f64,
    avg_var: f64,
    rng: &mut ChaCha8Rng,
) -> DMatrix<f64> {
    let d = scatter.nrows();
    let eig = scatter.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("scatter eigenvalues are finite")
            .then(a.cmp(&b))
    });
    let fallback_scale = (0.01 * avg_var).max(var_floor).sqrt();
    let mut cols = Vec::with_capacity(k);
    for &j in order.iter().take(k) {
        let lam = eig.eigenvalues[j];
        if lam > var_floor {
            cols.push(eig.eigenvectors.column(j) * lam.sqrt());
        } else {
            let v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let norm = v.norm().max(1e-300);
            cols.push(v * (fallback_scale / norm));
        }
    }
    DMatrix::from_columns(&cols)
}

/// Moment-matched starting point: F from the bias-corrected between-identity
/// scatter, G from the within-identity scatter, noise from the residual
/// within diagonal. EM then refines from a point already near the answer.
fn moment_init(
    centered: &DMatrix<f64>,
    identities: &[IdentityStats],
    d_h: usize,
    d_w: usize,
    var_floor: f64,
    avg_var: f64,
    rng: &mut ChaCha8Rng,
) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
    let d = centered.ncols();
    let n = centered.nrows();
    let n_ids = identities.len();
    let mut s_w = DMatrix::<f64>::zeros(d, d);
    let mut s_b = DMatrix::<f64>::zeros(d, d);
    for ident in identities {
        let ni = ident.rows.len();
        let mut mu = DVector::<f64>::zeros(d);
        for &r in &ident.rows {
            mu += centered.row(r).transpose();
        }
        mu /= ni as f64;
        for &r in &ident.rows {
            let dv = centered.row(r).transpose() - &mu;
            s_w += &dv * dv.transpose();
        }
        s_b += ni as f64 * (&mu * mu.transpose());
    }
    // Validation guarantees n > n_ids >= 2.
    s_w /= (n - n_ids) as f64;
    s_b /= (n_ids - 1) as f64;
    let m_bar = n as f64 / n_ids as f64;
    let between_hat = (&s_b - &s_w) / m_bar;

    let f = factor_from_scatter(&between_hat, d_h, var_floor, avg_var, rng);
    let g = factor_from_scatter(&s_w, d_w, var_floor, avg_var, rng);
    // Keep a visible noise floor so the first E-step is well conditioned.
    let noise_floor = (1e-4 * avg_var).max(var_floor);
    let sigma = DVector::from_fn(d, |j, _| {
        let explained: f64 = (0..d_w).map(|k| g[(j, k)] * g[(j, k)]).sum();
        (s_w[(j, j)] - explained).max(noise_floor)
    });
    (f, g, sigma)
}

struct IdentityStats {
    /// Sample row indices of this identity.
    rows: Vec<usize>,
}

/// Fit by EM. `labels[i]` names the identity of sample row `i`; label
/// values are arbitrary. The seed fixes the random orthonormal basis
/// initialization.
pub fn plda_fit(
    data: &DMatrix<f64>,
    labels: &[usize],
    d_h: usize,
    d_w: usize,
    iters: usize,
    seed: u64,
) -> Result<PldaModel> {
    let (n, d) = (data.nrows(), data.ncols());
    if labels.len() != n {
        return Err(DcpError::Dimension(format!(
            "{n} samples but {} labels",
            labels.len()
        )));
    }
    if n < 2 {
        return Err(DcpError::DegenerateTraining(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    if d_h < 1 || d_h > d || d_w < 1 || d_w > d {
        return Err(DcpError::Dimension(format!(
            "subspace dims ({d_h}, {d_w}) out of range 1..={d}"
        )));
    }
    if iters < 1 {
        return Err(DcpError::Config("need at least 1 EM iteration".into()));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(DcpError::Input("non-finite training value".into()));
    }
    let groups = group_by_label(labels);
    if groups.len() < 2 {
        return Err(DcpError::DegenerateTraining(
            "all samples share one identity".into(),
        ));
    }
    if groups.values().all(|g| g.len() < 2) {
        return Err(DcpError::DegenerateTraining(
            "no identity has a repeated sample; the within-identity factor is unlearnable".into(),
        ));
    }
    let identities: Vec<IdentityStats> = groups
        .into_values()
        .map(|rows| IdentityStats { rows })
        .collect();

    let mean = data.row_mean().transpose();
    let mut centered = data.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }

    // Per-dimension sample variance; also fixes the numerical floor.
    let mut sample_var = DVector::zeros(d);
    for j in 0..d {
        let col = centered.column(j);
        sample_var[j] = col.dot(&col) / (n as f64 - 1.0);
    }
    let max_var = sample_var.max().max(1e-300);
    let var_floor = 1e-10 * max_var;
    let avg_var = sample_var.sum() / d as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut f, mut g, mut sigma) =
        moment_init(&centered, &identities, d_h, d_w, var_floor, avg_var, &mut rng);

    // Diagonal of sum of squared residuals, constant across iterations.
    let sxx_diag = DVector::from_fn(d, |j, _| {
        let col = centered.column(j);
        col.dot(&col)
    });

    let q_dim = d_h + d_w;
    let mut ll_trace = Vec::with_capacity(iters + 1);

    for _ in 0..iters {
        let isig = sigma.map(|v| 1.0 / v);
        let f_is = DMatrix::from_fn(d, d_h, |j, k| f[(j, k)] * isig[j]);
        let g_is = DMatrix::from_fn(d, d_w, |j, k| g[(j, k)] * isig[j]);
        let p = f.transpose() * &f_is; // d_h x d_h
        let q = f.transpose() * &g_is; // d_h x d_w
        let r = g.transpose() * &g_is; // d_w x d_w
        let log_det_sigma: f64 = sigma.iter().map(|v| v.ln()).sum();

        // The stacked-latent normal matrix M depends only on the sample
        // count of the identity; cache by count.
        struct CachedM {
            chol: Cholesky<f64, Dyn>,
            inv: DMatrix<f64>,
            log_det: f64,
        }
        let mut m_cache: BTreeMap<usize, CachedM> = BTreeMap::new();

        let mut ll = 0.0;
        let mut s_xu = DMatrix::<f64>::zeros(d, q_dim);
        let mut s_uu = DMatrix::<f64>::zeros(q_dim, q_dim);

        for ident in &identities {
            let ni = ident.rows.len();
            let m_entry = m_cache.entry(ni).or_insert_with(|| {
                let q_total = d_h + ni * d_w;
                let mut m = DMatrix::<f64>::identity(q_total, q_total);
                let mut tl = m.view_mut((0, 0), (d_h, d_h));
                tl += &(&p * ni as f64);
                for j in 0..ni {
                    let off = d_h + j * d_w;
                    m.view_mut((0, off), (d_h, d_w)).copy_from(&q);
                    m.view_mut((off, 0), (d_w, d_h)).copy_from(&q.transpose());
                    let mut blk = m.view_mut((off, off), (d_w, d_w));
                    blk += &r;
                }
                let chol = Cholesky::new(m).expect("I + AᵀΣ⁻¹A is positive definite");
                let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
                let inv = chol.inverse();
                CachedM { chol, inv, log_det }
            });

            // Stacked E-step right-hand side and data quadratic.
            let q_total = d_h + ni * d_w;
            let mut b = DVector::<f64>::zeros(q_total);
            let mut quad_data = 0.0;
            let mut delta_sum_scaled = DVector::<f64>::zeros(d);
            for (j, &row) in ident.rows.iter().enumerate() {
                let delta = centered.row(row).transpose();
                let scaled = DVector::from_fn(d, |k, _| delta[k] * isig[k]);
                quad_data += delta.dot(&scaled);
                delta_sum_scaled += &scaled;
                b.rows_mut(d_h + j * d_w, d_w)
                    .copy_from(&(g.transpose() * &scaled));
            }
            b.rows_mut(0, d_h)
                .copy_from(&(f.transpose() * &delta_sum_scaled));

            let u_bar = m_entry.chol.solve(&b);
            let quad = quad_data - b.dot(&u_bar);
            ll += -0.5
                * (ni as f64 * d as f64 * LN_2PI
                    + ni as f64 * log_det_sigma
                    + m_entry.log_det
                    + quad);

            // Per-sample sufficient statistics for [h; w_j].
            let c = &m_entry.inv;
            for (j, &row) in ident.rows.iter().enumerate() {
                let off = d_h + j * d_w;
                let mut e = DVector::<f64>::zeros(q_dim);
                e.rows_mut(0, d_h).copy_from(&u_bar.rows(0, d_h));
                e.rows_mut(d_h, d_w).copy_from(&u_bar.rows(off, d_w));

                let mut euu = DMatrix::<f64>::zeros(q_dim, q_dim);
                euu.view_mut((0, 0), (d_h, d_h))
                    .copy_from(&c.view((0, 0), (d_h, d_h)));
                euu.view_mut((0, d_h), (d_h, d_w))
                    .copy_from(&c.view((0, off), (d_h, d_w)));
                euu.view_mut((d_h, 0), (d_w, d_h))
                    .copy_from(&c.view((off, 0), (d_w, d_h)));
                euu.view_mut((d_h, d_h), (d_w, d_w))
                    .copy_from(&c.view((off, off), (d_w, d_w)));
                euu += &e * e.transpose();

                s_uu += euu;
                let delta = centered.row(row).transpose();
                s_xu += &delta * e.transpose();
            }
        }
        ll_trace.push(ll);

        // M-step: joint update of [F G], then the noise diagonal.
        let s_uu_chol = Cholesky::new(s_uu.clone()).ok_or_else(|| {
            DcpError::Conditioning("latent moment matrix is not positive definite".into())
        })?;
        let w = &s_xu * s_uu_chol.inverse();
        f = w.columns(0, d_h).into_owned();
        g = w.columns(d_h, d_w).into_owned();
        sigma = DVector::from_fn(d, |k, _| {
            let explained: f64 = (0..q_dim).map(|c| w[(k, c)] * s_xu[(k, c)]).sum();
            ((sxx_diag[k] - explained) / n as f64).max(var_floor)
        });
    }

    // Likelihood of the final parameters, closing the trace.
    let final_ll = marginal_ll(&centered, &identities, &f, &g, &sigma);
    ll_trace.push(final_ll);

    Ok(PldaModel {
        mean,
        between: f,
        within: g,
        noise: sigma,
        ll_trace,
    })
}

fn marginal_ll(
    centered: &DMatrix<f64>,
    identities: &[IdentityStats],
    f: &DMatrix<f64>,
    g: &DMatrix<f64>,
    sigma: &DVector<f64>,
) -> f64 {
    let d = centered.ncols();
    let d_h = f.ncols();
    let d_w = g.ncols();
    let isig = sigma.map(|v| 1.0 / v);
    let f_is = DMatrix::from_fn(d, d_h, |j, k| f[(j, k)] * isig[j]);
    let g_is = DMatrix::from_fn(d, d_w, |j, k| g[(j, k)] * isig[j]);
    let p = f.transpose() * &f_is;
    let q = f.transpose() * &g_is;
    let r = g.transpose() * &g_is;
    let log_det_sigma: f64 = sigma.iter().map(|v| v.ln()).sum();

    let mut ll = 0.0;
    for ident in identities {
        let ni = ident.rows.len();
        let q_total = d_h + ni * d_w;
        let mut m = DMatrix::<f64>::identity(q_total, q_total);
        let mut tl = m.view_mut((0, 0), (d_h, d_h));
        tl += &(&p * ni as f64);
        for j in 0..ni {
            let off = d_h + j * d_w;
            m.view_mut((0, off), (d_h, d_w)).copy_from(&q);
            m.view_mut((off, 0), (d_w, d_h)).copy_from(&q.transpose());
            let mut blk = m.view_mut((off, off), (d_w, d_w));
            blk += &r;
        }
        let chol = Cholesky::new(m).expect("I + AᵀΣ⁻¹A is positive definite");
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();

        let mut b = DVector::<f64>::zeros(q_total);
        let mut quad_data = 0.0;
        let mut delta_sum_scaled = DVector::<f64>::zeros(d);
        for (j, &row) in ident.rows.iter().enumerate() {
            let delta = centered.row(row).transpose();
            let scaled = DVector::from_fn(d, |k, _| delta[k] * isig[k]);
            quad_data += delta.dot(&scaled);
            delta_sum_scaled += &scaled;
            b.rows_mut(d_h + j * d_w, d_w)
                .copy_from(&(g.transpose() * &scaled));
        }
        b.rows_mut(0, d_h)
            .copy_from(&(f.transpose() * &delta_sum_scaled));
        let u_bar = chol.solve(&b);
        let quad = quad_data - b.dot(&u_bar);
        ll += -0.5
            * (ni as f64 * d as f64 * LN_2PI + ni as f64 * log_det_sigma + log_det + quad);
    }
    ll
}

/// Precomputed factorizations for log-likelihood-ratio scoring.
pub struct PldaScorer {
    mean: DVector<f64>,
    chol_total: Cholesky<f64, Dyn>,
    chol_joint: Cholesky<f64, Dyn>,
    log_det_total: f64,
    log_det_joint: f64,
    dim: usize,
}

impl PldaScorer {
    fn new(m: &PldaModel) -> Result<Self> {
        let d = m.dim();
        let between = &m.between * m.between.transpose();
        let mut total = &between + &m.within * m.within.transpose();
        for j in 0..d {
            total[(j, j)] += m.noise[j];
        }
        let mut joint = DMatrix::<f64>::zeros(2 * d, 2 * d);
        joint.view_mut((0, 0), (d, d)).copy_from(&total);
        joint.view_mut((d, d), (d, d)).copy_from(&total);
        joint.view_mut((0, d), (d, d)).copy_from(&between);
        joint.view_mut((d, 0), (d, d)).copy_from(&between);

        let chol_total = Cholesky::new(total)
            .ok_or_else(|| DcpError::Conditioning("total covariance is not positive definite".into()))?;
        let chol_joint = Cholesky::new(joint).ok_or_else(|| {
            DcpError::Conditioning("same-identity joint covariance is not positive definite".into())
        })?;
        let log_det = |c: &Cholesky<f64, Dyn>| {
            2.0 * c.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
        };
        Ok(PldaScorer {
            mean: m.mean.clone(),
            log_det_total: log_det(&chol_total),
            log_det_joint: log_det(&chol_joint),
            chol_total,
            chol_joint,
            dim: d,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// log p(x1, x2 | same identity) - log p(x1) p(x2 | different).
    pub fn llr(&self, x1: &DVector<f64>, x2: &DVector<f64>) -> Result<f64> {
        let d = self.dim;
        if x1.len() != d || x2.len() != d {
            return Err(DcpError::Dimension(format!(
                "inputs of dim {} and {}, model expects {d}",
                x1.len(),
                x2.len()
            )));
        }
        let d1 = x1 - &self.mean;
        let d2 = x2 - &self.mean;
        let mut stacked = DVector::<f64>::zeros(2 * d);
        stacked.rows_mut(0, d).copy_from(&d1);
        stacked.rows_mut(d, d).copy_from(&d2);

        let quad_joint = stacked.dot(&self.chol_joint.solve(&stacked));
        let quad_1 = d1.dot(&self.chol_total.solve(&d1));
        let quad_2 = d2.dot(&self.chol_total.solve(&d2));

        let log_joint = -0.5 * (2.0 * d as f64 * LN_2PI + self.log_det_joint + quad_joint);
        let log_split = -0.5 * (2.0 * d as f64 * LN_2PI + 2.0 * self.log_det_total + quad_1 + quad_2);
        Ok(log_joint - log_split)
    }
}

/// One-off LLR; batch scoring should build [`PldaModel::scorer`] once.
pub fn plda_llr(m: &PldaModel, x1: &DVector<f64>, x2: &DVector<f64>) -> Result<f64> {
    m.scorer()?.llr(x1, x2)
}
