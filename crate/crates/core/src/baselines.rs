//! PCA baseline for comparison runs.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::linalg::symmetric_eigen;
use crate::{Dataset, Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel<T> {
    pub mean: Array1<T>,
    /// D × d, orthonormal columns ordered by decreasing variance.
    pub components: Array2<T>,
    /// Sample variance along each component (descending).
    pub explained_variance: Array1<T>,
    /// Sum of the sample variances of all D coordinates.
    pub total_variance: T,
}

impl<T: Scalar> PcaModel<T> {
    pub fn transform(&self, x: ArrayView2<'_, T>) -> Array2<T> {
        (&x - &self.mean).dot(&self.components)
    }

    pub fn inverse_transform(&self, y: ArrayView2<'_, T>) -> Array2<T> {
        y.dot(&self.components.t()) + &self.mean
    }

    pub fn explained_variance_ratio(&self) -> Array1<T> {
        self.explained_variance.mapv(|v| v / self.total_variance)
    }
}

/// Fits the top `d_target` principal directions by eigendecomposition of the
/// sample covariance and returns the centered projection.
///
/// Each component is sign-fixed so that its largest-magnitude coordinate is
/// positive.
pub fn pca_fit_transform<T: Scalar>(d: &Dataset<T>, d_target: usize) -> Result<(PcaModel<T>, Array2<T>)> {
    let (n, dim) = d.points.dim();
    if d_target < 1 || d_target > n.min(dim) {
        return Err(Error::Dimension(format!(
            "PCA target dimension {d_target} must be in 1..={}",
            n.min(dim)
        )));
    }
    let mean = d.points.mean_axis(Axis(0)).expect("non-empty dataset");
    let centered = &d.points - &mean;
    let cov = centered.t().dot(&centered) / T::of((n - 1) as f64);
    let total_variance = cov.diag().iter().copied().fold(T::zero(), |a, b| a + b);
    let (values, vectors) = symmetric_eigen(cov.view())?;

    let mut components = vectors.slice(ndarray::s![.., ..d_target]).to_owned();
    for mut col in components.columns_mut() {
        let pivot = col
            .iter()
            .copied()
            .fold(T::zero(), |best, v| if v.abs() > best.abs() { v } else { best });
        if pivot < T::zero() {
            col.mapv_inplace(|v| -v);
        }
    }
    let explained_variance = values
        .slice(ndarray::s![..d_target])
        .mapv(|v| v.max(T::zero()));
    let embedding = centered.dot(&components);
    Ok((
        PcaModel {
            mean,
            components,
            explained_variance,
            total_variance,
        },
        embedding,
    ))
}
