//! Finite-difference derivatives on nonuniform grids (Fornberg weights).
//!
//! Used only for cross-checks of analytically carried derivatives.

use crate::scalar::Real;

/// Weights `w[k][j]` such that `Σ_j w[k][j] v(xs[j])` approximates the k-th derivative at `z`,
/// for `k = 0..=order`.
pub fn fornberg_weights<T: Real>(z: T, xs: &[T], order: usize) -> Vec<Vec<T>> {
    let n = xs.len();
    let mut c = vec![vec![T::zero(); n]; order + 1];
    let mut c1 = T::one();
    let mut c4 = xs[0] - z;
    c[0][0] = T::one();
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = T::one();
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 = c2 * c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (T::int(k as i64) * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - T::int(k as i64) * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// `order`-th derivative of samples `v` on the strictly monotone grid `x`, using a
/// `width`-point stencil centered where possible and shifted inward at the ends.
pub fn derivative<T: Real>(x: &[T], v: &[T], order: usize, width: usize) -> Vec<T> {
    let n = x.len();
    assert_eq!(n, v.len(), "grid and values must have equal length");
    let w = width.min(n);
    assert!(w > order, "stencil too small for derivative order");
    let half = w / 2;
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(half).min(n - w);
            let xs = &x[start..start + w];
            let wts = fornberg_weights(x[i], xs, order);
            wts[order].iter().zip(&v[start..start + w]).fold(T::zero(), |acc, (a, b)| acc + *a * *b)
        })
        .collect()
}
