//! Small dense kernels: thin QR and symmetric eigendecomposition.
//!
//! Both are written against [`Scalar`] so the whole pipeline stays generic;
//! the matrices they see are D × d and D × D, small next to the point cloud.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::{Error, Result, Scalar};

#[inline]
pub fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| {
        let d = x - y;
        acc + d * d
    })
}

#[inline]
pub fn distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    squared_distance(a, b).sqrt()
}

pub fn norm<T: Scalar>(v: ArrayView1<'_, T>) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
}

/// Orthonormal basis of the column space of `a` (rows ≥ cols), by modified
/// Gram–Schmidt with one reorthogonalization pass.
pub fn thin_qr_q<T: Scalar>(a: ArrayView2<'_, T>) -> Result<Array2<T>> {
    let (rows, cols) = a.dim();
    if cols > rows {
        return Err(Error::Dimension(format!(
            "thin QR needs rows >= cols, got {rows} x {cols}"
        )));
    }
    let mut q = a.to_owned();
    for j in 0..cols {
        let original = norm(q.column(j));
        for _pass in 0..2 {
            for p in 0..j {
                let proj = q.column(p).dot(&q.column(j));
                let basis = q.column(p).to_owned();
                q.column_mut(j).scaled_add(-proj, &basis);
            }
        }
        let len = norm(q.column(j));
        if len <= original * T::epsilon() * T::of(16.0) || len == T::zero() {
            return Err(Error::Numerical(format!(
                "column {j} is linearly dependent on the previous ones"
            )));
        }
        q.column_mut(j).mapv_inplace(|x| x / len);
    }
    Ok(q)
}

/// Eigenpairs of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(values, vectors)` with eigenvectors as columns, sorted by
/// descending eigenvalue.
pub fn symmetric_eigen<T: Scalar>(m: ArrayView2<'_, T>) -> Result<(Array1<T>, Array2<T>)> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Dimension(format!(
            "eigendecomposition needs a square matrix, got {} x {}",
            n,
            m.ncols()
        )));
    }
    let mut a = m.to_owned();
    let mut v = Array2::<T>::eye(n);
    let scale = a.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
    let tol = T::epsilon() * scale;

    for _sweep in 0..100 {
        let off = off_diagonal_norm(&a);
        if off <= tol || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (T::of(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    if off_diagonal_norm(&a) > tol * T::of(1e3) {
        return Err(Error::Numerical("Jacobi eigensolver did not converge".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[[j, j]]
            .partial_cmp(&a[[i, i]])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = Array1::from_iter(order.iter().map(|&i| a[[i, i]]));
    let vectors = v.select(Axis(1), &order);
    Ok((values, vectors))
}

fn off_diagonal_norm<T: Scalar>(a: &Array2<T>) -> T {
    let mut s = T::zero();
    for ((i, j), &x) in a.indexed_iter() {
        if i != j {
            s += x * x;
        }
    }
    s.sqrt()
}
