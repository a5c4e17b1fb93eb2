//! Embedding quality: leave-one-out 1-NN error, trustworthiness, continuity.
//!
//! Ranks are 1-based positions in the distance order from point `i`, ties
//! broken by lower index. Trustworthiness penalizes low-dimensional
//! neighbors by their high-dimensional rank; continuity penalizes
//! high-dimensional neighbors by their low-dimensional rank.

use std::cmp::Ordering;

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::squared_distance;
use crate::{Error, Result, Scalar};

pub const DEFAULT_K: usize = 12;

/// Flat summary written to `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub one_nn_error: Option<f64>,
    pub trustworthiness: Option<f64>,
    pub continuity: Option<f64>,
    #[serde(rename = "k")]
    pub k_metric: usize,
    pub final_potential: Option<f64>,
    pub iterations: usize,
    pub runtime_ms: u64,
}

fn contiguous<'a, T: Scalar>(m: &'a ndarray::CowArray<'a, T, ndarray::Ix2>) -> &'a [T] {
    m.as_slice().expect("standard layout")
}

/// Fraction of points whose nearest other point carries a different label.
pub fn one_nn_error<T: Scalar>(y: ArrayView2<'_, T>, labels: Option<&[i64]>) -> Result<f64> {
    let labels = labels.ok_or(Error::MissingLabels)?;
    let (n, dim) = y.dim();
    if n < 2 {
        return Err(Error::InvalidArgument("1-NN error needs at least 2 points".into()));
    }
    if labels.len() != n {
        return Err(Error::Dimension(format!("{} labels for {n} points", labels.len())));
    }
    let y = y.as_standard_layout();
    let flat = contiguous(&y);
    let wrong: usize = (0..n)
        .into_par_iter()
        .filter(|&i| {
            let yi = &flat[i * dim..(i + 1) * dim];
            let mut best = (T::infinity(), usize::MAX);
            for j in (0..n).filter(|&j| j != i) {
                let d = squared_distance(yi, &flat[j * dim..(j + 1) * dim]);
                if d < best.0 {
                    best = (d, j);
                }
            }
            labels[best.1] != labels[i]
        })
        .count();
    Ok(wrong as f64 / n as f64)
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k < 1 || 2 * k >= n.saturating_sub(1) {
        return Err(Error::InvalidArgument(format!(
            "k must satisfy 1 <= k < (n-1)/2; got k = {k} with n = {n}"
        )));
    }
    Ok(())
}

/// Other points ordered by distance from `i` and their 1-based ranks.
fn order_and_ranks<T: Scalar>(flat: &[T], dim: usize, n: usize, i: usize) -> (Vec<usize>, Vec<usize>) {
    let xi = &flat[i * dim..(i + 1) * dim];
    let dist: Vec<T> = (0..n)
        .map(|j| squared_distance(xi, &flat[j * dim..(j + 1) * dim]))
        .collect();
    let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
    order.sort_by(|&a, &b| {
        dist[a]
            .partial_cmp(&dist[b])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut rank = vec![0usize; n];
    for (pos, &j) in order.iter().enumerate() {
        rank[j] = pos + 1;
    }
    (order, rank)
}

/// `(T(k), C(k))` of `low` as an embedding of `high`.
pub fn trustworthiness_continuity<T: Scalar>(
    high: ArrayView2<'_, T>,
    low: ArrayView2<'_, T>,
    k: usize,
) -> Result<(f64, f64)> {
    let n = high.nrows();
    if low.nrows() != n {
        return Err(Error::Dimension(format!(
            "high-dimensional data has {n} rows, embedding {}",
            low.nrows()
        )));
    }
    check_k(n, k)?;
    let (dh, dl) = (high.ncols(), low.ncols());
    let high = high.as_standard_layout();
    let low = low.as_standard_layout();
    let (fh, fl) = (contiguous(&high), contiguous(&low));

    let (trust_pen, cont_pen) = (0..n)
        .into_par_iter()
        .map(|i| {
            let (order_h, rank_h) = order_and_ranks(fh, dh, n, i);
            let (order_l, rank_l) = order_and_ranks(fl, dl, n, i);
            let t: u64 = order_l[..k]
                .iter()
                .filter(|&&j| rank_h[j] > k)
                .map(|&j| (rank_h[j] - k) as u64)
                .sum();
            let c: u64 = order_h[..k]
                .iter()
                .filter(|&&j| rank_l[j] > k)
                .map(|&j| (rank_l[j] - k) as u64)
                .sum();
            (t, c)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    let (nf, kf) = (n as f64, k as f64);
    let scale = 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0));
    Ok((1.0 - scale * trust_pen as f64, 1.0 - scale * cont_pen as f64))
}

pub fn trustworthiness<T: Scalar>(high: ArrayView2<'_, T>, low: ArrayView2<'_, T>, k: usize) -> Result<f64> {
    trustworthiness_continuity(high, low, k).map(|(t, _)| t)
}

pub fn continuity<T: Scalar>(high: ArrayView2<'_, T>, low: ArrayView2<'_, T>, k: usize) -> Result<f64> {
    trustworthiness_continuity(high, low, k).map(|(_, c)| c)
}
