//! Row-major tensor helpers shared by the interpolation and network code.

use nalgebra::DMatrix;

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

/// Fibers along `axis` as columns of a `shape[axis] × (len / shape[axis])`
/// matrix. Fiber order is (outer, inner) row-major.
pub(crate) fn unfold(data: &[f64], shape: &[usize], axis: usize) -> DMatrix<f64> {
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut m = DMatrix::zeros(n, outer * inner);
    for o in 0..outer {
        for i in 0..n {
            let base = (o * n + i) * inner;
            for j in 0..inner {
                m[(i, o * inner + j)] = data[base + j];
            }
        }
    }
    m
}

/// Inverse of [`unfold`]; `shape[axis]` must equal `m.nrows()`.
pub(crate) fn fold(m: &DMatrix<f64>, shape: &[usize], axis: usize) -> Vec<f64> {
    let n = shape[axis];
    debug_assert_eq!(n, m.nrows());
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut out = vec![0.0; outer * n * inner];
    for o in 0..outer {
        for i in 0..n {
            let base = (o * n + i) * inner;
            for j in 0..inner {
                out[base + j] = m[(i, o * inner + j)];
            }
        }
    }
    out
}

/// `out[.., i, ..] = Σ_j mat[i, j] · data[.., j, ..]` along `axis`.
pub(crate) fn mode_product(
    data: &[f64],
    shape: &[usize],
    axis: usize,
    mat: &DMatrix<f64>,
) -> (Vec<f64>, Vec<usize>) {
    let prod = mat * unfold(data, shape, axis);
    let mut new_shape = shape.to_vec();
    new_shape[axis] = mat.nrows();
    (fold(&prod, &new_shape, axis), new_shape)
}

/// Reorder the axes: output axis `k` is input axis `perm[k]`.
pub(crate) fn permute(data: &[f64], shape: &[usize], perm: &[usize]) -> (Vec<f64>, Vec<usize>) {
    let new_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
    let in_strides = strides(shape);
    let total: usize = shape.iter().product();
    let mut out = vec![0.0; total];
    let mut idx = vec![0usize; shape.len()];
    for slot in out.iter_mut() {
        let src: usize = idx
            .iter()
            .zip(perm)
            .map(|(&i, &p)| i * in_strides[p])
            .sum();
        *slot = data[src];
        for k in (0..idx.len()).rev() {
            idx[k] += 1;
            if idx[k] < new_shape[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    (out, new_shape)
}

/// Visit every multi-index of `shape` in row-major order.
pub(crate) fn for_each_index(shape: &[usize], mut f: impl FnMut(&[usize])) {
    let total: usize = shape.iter().product();
    let mut idx = vec![0usize; shape.len()];
    for _ in 0..total {
        f(&idx);
        for k in (0..idx.len()).rev() {
            idx[k] += 1;
            if idx[k] < shape[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}
