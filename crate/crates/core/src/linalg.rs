//! Thin SVD through faer. nalgebra's implicit-shift SVD mishandles some
//! nearly rank-deficient 2×2 bidiagonal blocks and returns wrong singular
//! vectors, which breaks nested interpolation on exactly rank-one samples.

use faer::Mat;
use nalgebra::DMatrix;

pub(crate) struct ThinSvd {
    /// `rows × k`, `k = min(rows, cols)`.
    pub u: DMatrix<f64>,
    /// Decreasing.
    pub sigma: Vec<f64>,
    /// `cols × k`.
    pub v: DMatrix<f64>,
}

pub(crate) fn thin_svd(m: &DMatrix<f64>) -> ThinSvd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return ThinSvd {
            u: DMatrix::zeros(rows, 0),
            sigma: Vec::new(),
            v: DMatrix::zeros(cols, 0),
        };
    }
    let a = Mat::from_fn(rows, cols, |i, j| m[(i, j)]);
    let svd = a.thin_svd().expect("SVD of a finite matrix");
    let s = svd.S().column_vector();
    let (u, v) = (svd.U(), svd.V());
    ThinSvd {
        u: DMatrix::from_fn(rows, k, |i, j| u[(i, j)]),
        sigma: (0..k).map(|j| s[j]).collect(),
        v: DMatrix::from_fn(cols, k, |i, j| v[(i, j)]),
    }
}
