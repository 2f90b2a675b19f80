//! Small numerical helpers: Kronecker products, matrix vectorization
//! (column-stacking convention), Laguerre recurrences and log-factorials.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

/// Kronecker product a (x) b of two dense complex matrices.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::<C64>::zeros((ra * rb, ca * cb));
    for ((i, j), &av) in a.indexed_iter() {
        if av == C64::new(0.0, 0.0) {
            continue;
        }
        for ((k, l), &bv) in b.indexed_iter() {
            out[[i * rb + k, j * cb + l]] = av * bv;
        }
    }
    out
}

/// Column-stacking vectorization: vec(M)[j*n + i] = M[i, j].
pub fn vec_mat(m: &Array2<C64>) -> Array1<C64> {
    let (n, nc) = m.dim();
    assert_eq!(n, nc, "vec_mat expects a square matrix");
    let mut v = Array1::<C64>::zeros(n * n);
    for j in 0..n {
        for i in 0..n {
            v[j * n + i] = m[[i, j]];
        }
    }
    v
}

/// Inverse of [`vec_mat`].
pub fn unvec(v: &ndarray::ArrayView1<C64>, n: usize) -> Array2<C64> {
    assert_eq!(v.len(), n * n, "unvec length mismatch");
    let mut m = Array2::<C64>::zeros((n, n));
    for j in 0..n {
        for i in 0..n {
            m[[i, j]] = v[j * n + i];
        }
    }
    m
}

/// (M + M^dagger) / 2.
pub fn hermitize(m: &Array2<C64>) -> Array2<C64> {
    let mt = m.t().mapv(|z| z.conj());
    (m + &mt) / C64::new(2.0, 0.0)
}

/// Largest entrywise deviation from Hermiticity, max |M - M^dagger|.
pub fn hermiticity_defect(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut d: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            d = d.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    d
}

pub fn trace(m: &Array2<C64>) -> C64 {
    m.diag().sum()
}

/// ln(k!) for k = 0..=n_max as a lookup table.
pub fn ln_factorials(n_max: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(n_max + 1);
    t.push(0.0);
    for k in 1..=n_max {
        t.push(t[k - 1] + (k as f64).ln());
    }
    t
}

/// Generalized Laguerre polynomials L_0^(k)(x) .. L_n^(k)(x) by the standard
/// three-term upward recurrence.
pub fn laguerre_row(n: usize, k: f64, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n == 0 {
        return out;
    }
    out.push(1.0 + k - x);
    for m in 1..n {
        let mf = m as f64;
        let next = ((2.0 * mf + 1.0 + k - x) * out[m] - (mf + k) * out[m - 1]) / (mf + 1.0);
        out.push(next);
    }
    out
}

/// Uniform grid of `n` points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let step = (b - a) / (n as f64 - 1.0);
    (0..n).map(|i| a + step * i as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn kron_against_hand_computation() {
        let a = array![[c(1.0, 0.0), c(2.0, 0.0)], [c(0.0, 1.0), c(0.0, 0.0)]];
        let b = array![[c(3.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(4.0, 0.0)]];
        let k = kron(&a, &b);
        assert_eq!(k[[0, 0]], c(3.0, 0.0));
        assert_eq!(k[[1, 1]], c(4.0, 0.0));
        assert_eq!(k[[0, 2]], c(6.0, 0.0));
        assert_eq!(k[[3, 3]], c(0.0, 0.0));
        assert_eq!(k[[2, 0]], c(0.0, 3.0));
    }

    #[test]
    fn vec_unvec_roundtrip_and_kron_identity() {
        // vec(A X B) = (B^T kron A) vec(X), column stacking
        let a = array![[c(1.0, 0.5), c(2.0, 0.0)], [c(0.0, 1.0), c(3.0, -1.0)]];
        let x = array![[c(0.5, 0.0), c(1.0, 2.0)], [c(-1.0, 0.0), c(0.0, 0.7)]];
        let b = array![[c(2.0, 0.0), c(0.0, -1.0)], [c(1.0, 1.0), c(0.5, 0.0)]];
        let axb = a.dot(&x).dot(&b);
        let big = kron(&b.t().to_owned(), &a);
        let v = big.dot(&vec_mat(&x));
        let back = unvec(&v.view(), 2);
        for i in 0..2 {
            for j in 0..2 {
                assert!((axb[[i, j]] - back[[i, j]]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn laguerre_known_values() {
        // L_2(x) = 1 - 2x + x^2/2, L_1^(1)(x) = 2 - x
        let r = laguerre_row(2, 0.0, 0.7);
        assert!((r[2] - (1.0 - 2.0 * 0.7 + 0.49 / 2.0)).abs() < 1e-14);
        let r1 = laguerre_row(1, 1.0, 0.3);
        assert!((r1[1] - (2.0 - 0.3)).abs() < 1e-14);
    }

    #[test]
    fn ln_factorial_table() {
        let t = ln_factorials(10);
        assert!((t[10] - (3628800.0f64).ln()).abs() < 1e-10);
    }
}
