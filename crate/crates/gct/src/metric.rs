//! Learned Mahalanobis-style metric over feature differences.
//!
//! Given example pairs labeled "same subject" and "different subject", we
//! model the feature differences of each class as zero-mean Gaussians and
//! score a new difference by the log-likelihood ratio of the two models,
//! which reduces to a quadratic form `e' (S_s^-1 - S_d^-1) e`. Differences
//! come in sign pairs (swapping the images of a pair negates the
//! difference), so both classes are symmetric around zero and the second
//! moments are taken uncentered: the mean of the symmetrized population is
//! exactly zero.
//!
//! A PCA projection learned from all differences (both classes pooled)
//! reduces dimensionality first; the quadratic form is then projected onto
//! the cone of positive semidefinite matrices so the score is a genuine
//! squared pseudo-distance.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::config::MetricConfig;
use crate::error::{Error, Result};

/// A learned distance: PCA projection plus a PSD quadratic form on the
/// reduced space.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct LearnedMetric {
    /// `input_dim x reduced_dim`, orthonormal columns.
    projection: DMatrix<f64>,
    /// `reduced_dim x reduced_dim`, symmetric positive semidefinite.
    m: DMatrix<f64>,
}

impl LearnedMetric {
    /// Build a metric from an explicit projection and quadratic form. The
    /// form is symmetrized exactly; shapes must agree.
    pub fn from_parts(projection: DMatrix<f64>, form: DMatrix<f64>) -> Result<Self> {
        if projection.ncols() == 0 || projection.nrows() < projection.ncols() {
            return Err(Error::Dimension(format!(
                "projection must be tall, got {}x{}",
                projection.nrows(),
                projection.ncols()
            )));
        }
        if form.nrows() != projection.ncols() || form.ncols() != projection.ncols() {
            return Err(Error::Dimension(format!(
                "form is {}x{} but the reduced space has dim {}",
                form.nrows(),
                form.ncols(),
                projection.ncols()
            )));
        }
        if projection.iter().chain(form.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("metric parts must be finite".into()));
        }
        let m = (&form + form.transpose()) * 0.5;
        Ok(LearnedMetric { projection, m })
    }

    /// The metric whose squared pseudo-distance is plain squared Euclidean
    /// distance: identity projection, identity form. Useful as a baseline.
    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::from_parts(DMatrix::identity(dim, dim), DMatrix::identity(dim, dim))
    }

    pub fn input_dim(&self) -> usize {
        self.projection.nrows()
    }

    pub fn reduced_dim(&self) -> usize {
        self.projection.ncols()
    }

    pub fn projection(&self) -> &DMatrix<f64> {
        &self.projection
    }

    pub fn quadratic_form(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// Map a feature vector into the reduced space.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "metric expects {}-dim features, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        Ok(self.projection.transpose() * x)
    }

    /// Squared pseudo-distance between two feature vectors. Nonnegative and
    /// symmetric by construction.
    pub fn distance(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        Ok(self.distance_projected(&self.project(x)?, &self.project(y)?))
    }

    /// Squared pseudo-distance between vectors already in the reduced space.
    /// Callers that score one vector against many should project once and
    /// use this.
    pub fn distance_projected(&self, px: &DVector<f64>, py: &DVector<f64>) -> f64 {
        let e = px - py;
        // The form is PSD up to floating-point noise; never report a
        // negative squared distance.
        e.dot(&(&self.m * &e)).max(0.0)
    }
}

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue with
/// ties broken by original position.
fn sorted_symmetric_eigen(mat: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = mat.nrows();
    let eig = SymmetricEigen::new(mat);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Uncentered second moment `(1/N) sum e e'` of a set of difference
/// vectors.
fn second_moment(diffs: &[DVector<f64>], dim: usize) -> DMatrix<f64> {
    let mut sigma = DMatrix::zeros(dim, dim);
    for e in diffs {
        sigma.ger(1.0, e, e, 1.0);
    }
    sigma / diffs.len() as f64
}

fn collect_differences(
    pairs: &[(DVector<f64>, DVector<f64>)],
    dim: usize,
    label: &str,
) -> Result<Vec<DVector<f64>>> {
    let mut out = Vec::with_capacity(pairs.len());
    for (i, (x, y)) in pairs.iter().enumerate() {
        if x.len() != dim || y.len() != dim {
            return Err(Error::Dimension(format!(
                "{label} pair {i} has dims {}/{}, expected {dim}",
                x.len(),
                y.len()
            )));
        }
        let e = x - y;
        if e.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("{label} pair {i} has non-finite features")));
        }
        out.push(e);
    }
    Ok(out)
}

/// Learn a metric from labeled pairs.
///
/// `cfg.d_red` is clamped to the feature dimension; each class must supply
/// at least `d_red + 1` pairs after clamping so the class moments are not
/// trivially rank-deficient. `cfg.reg` is added to both class moments
/// before inversion.
pub fn learn_metric(
    similar: &[(DVector<f64>, DVector<f64>)],
    dissimilar: &[(DVector<f64>, DVector<f64>)],
    cfg: &MetricConfig,
) -> Result<LearnedMetric> {
    if similar.is_empty() || dissimilar.is_empty() {
        return Err(Error::InsufficientData(
            "metric learning needs pairs of both classes".into(),
        ));
    }
    let dim = similar[0].0.len();
    if dim == 0 {
        return Err(Error::Dimension("features must have nonzero dimension".into()));
    }
    let d_red = cfg.d_red.min(dim);
    if similar.len() <= d_red || dissimilar.len() <= d_red {
        return Err(Error::InsufficientData(format!(
            "need more than {d_red} pairs per class, got {} similar / {} dissimilar",
            similar.len(),
            dissimilar.len()
        )));
    }

    let sim_diffs = collect_differences(similar, dim, "similar")?;
    let dis_diffs = collect_differences(dissimilar, dim, "dissimilar")?;

    // PCA basis from the pooled differences of both classes.
    let mut pooled = second_moment(&sim_diffs, dim) * (sim_diffs.len() as f64);
    pooled += second_moment(&dis_diffs, dim) * (dis_diffs.len() as f64);
    pooled /= (sim_diffs.len() + dis_diffs.len()) as f64;
    let (_, basis) = sorted_symmetric_eigen(pooled);
    let mut projection = DMatrix::from_fn(dim, d_red, |r, c| basis[(r, c)]);
    // Canonical sign: make the largest-magnitude component of each axis
    // positive so repeated runs produce identical projections.
    for mut col in projection.column_iter_mut() {
        let mut lead = 0usize;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[lead].abs() {
                lead = i;
            }
        }
        if col[lead] < 0.0 {
            col.neg_mut();
        }
    }

    let reduce = |diffs: &[DVector<f64>]| -> Vec<DVector<f64>> {
        diffs.iter().map(|e| projection.transpose() * e).collect()
    };
    let reg = DMatrix::identity(d_red, d_red) * cfg.reg;
    let sigma_s = second_moment(&reduce(&sim_diffs), d_red) + &reg;
    let sigma_d = second_moment(&reduce(&dis_diffs), d_red) + &reg;

    let inv_s = Cholesky::new(sigma_s)
        .ok_or_else(|| Error::Singular("same-class moment is not positive definite".into()))?
        .inverse();
    let inv_d = Cholesky::new(sigma_d)
        .ok_or_else(|| Error::Singular("different-class moment is not positive definite".into()))?
        .inverse();

    // Project the likelihood-ratio form onto the PSD cone: clamp negative
    // eigenvalues, rebuild, and symmetrize exactly.
    let raw = inv_s - inv_d;
    let symmetric = (&raw + raw.transpose()) * 0.5;
    let (values, vectors) = sorted_symmetric_eigen(symmetric);
    let mut m = DMatrix::zeros(d_red, d_red);
    for (i, &v) in values.iter().enumerate() {
        if v > 0.0 {
            let col = vectors.column(i);
            m.ger(v, &col, &col, 1.0);
        }
    }
    let m = (&m + m.transpose()) * 0.5;

    Ok(LearnedMetric { projection, m })
}
