//! Truncated Fock-space operators, in the lab frame or in a frame displaced
//! by a classical amplitude beta.
//!
//! Operators are the exact projections of their infinite-dimensional
//! counterparts onto the first N = n_max + 1 Fock states; the top level is
//! not renormalized. In a displaced frame the physical annihilation operator
//! is represented as b = beta * I + a, with a the lab-frame ladder matrix
//! acting on the fluctuation space.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{laguerre_row, ln_factorials};

/// Reference frame of a truncated Fock space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Frame {
    /// Number states of the physical oscillator mode.
    Lab,
    /// Number states of the fluctuation mode around a classical amplitude;
    /// physical amplitude = center + fluctuation.
    Displaced { re: f64, im: f64 },
}

impl Frame {
    pub fn displaced(center: C64) -> Self {
        Frame::Displaced { re: center.re, im: center.im }
    }

    /// Displacement of this frame's origin in phase space (0 for Lab).
    pub fn center(&self) -> C64 {
        match self {
            Frame::Lab => C64::new(0.0, 0.0),
            Frame::Displaced { re, im } => C64::new(*re, *im),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockSpace {
    pub n_max: usize,
    pub frame: Frame,
}

impl FockSpace {
    pub fn new(n_max: usize, frame: Frame) -> Result<Self> {
        if n_max < 2 {
            return Err(Error::invalid("n_max", format!("must be >= 2, got {n_max}")));
        }
        if let Frame::Displaced { re, im } = frame {
            if !(re.is_finite() && im.is_finite()) {
                return Err(Error::invalid("frame", "displaced center must be finite"));
            }
        }
        Ok(Self { n_max, frame })
    }

    pub fn lab(n_max: usize) -> Result<Self> {
        Self::new(n_max, Frame::Lab)
    }

    pub fn displaced(n_max: usize, center: C64) -> Result<Self> {
        Self::new(n_max, Frame::displaced(center))
    }

    /// Matrix dimension N = n_max + 1.
    pub fn dim(&self) -> usize {
        self.n_max + 1
    }
}

/// Dense complex matrix representing an operator on a [`FockSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    pub space: FockSpace,
    pub mat: Array2<C64>,
}

impl Operator {
    pub fn new(space: FockSpace, mat: Array2<C64>) -> Result<Self> {
        let d = space.dim();
        if mat.dim() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "operator is {:?}, space dimension is {d}",
                mat.dim()
            )));
        }
        Ok(Self { space, mat })
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Operator {
        Operator {
            space: self.space,
            mat: self.mat.t().mapv(|z| z.conj()),
        }
    }

    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        if self.space.dim() != other.space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.dim(),
                self.dim(),
                other.dim(),
                other.dim()
            )));
        }
        Ok(Operator {
            space: self.space,
            mat: self.mat.dot(&other.mat),
        })
    }
}

/// Lab-frame ladder matrix a with a[n-1, n] = sqrt(n).
fn lowering_matrix(dim: usize) -> Array2<C64> {
    let mut a = Array2::<C64>::zeros((dim, dim));
    for n in 1..dim {
        a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

pub fn identity(space: FockSpace) -> Operator {
    Operator {
        space,
        mat: Array2::<C64>::eye(space.dim()),
    }
}

/// Annihilation operator of the physical mode in the requested frame:
/// the bare ladder matrix in the lab frame, beta * I + a in a displaced one.
pub fn annihilation(space: FockSpace) -> Operator {
    let mut mat = lowering_matrix(space.dim());
    let beta = space.frame.center();
    if beta != C64::new(0.0, 0.0) {
        for n in 0..space.dim() {
            mat[[n, n]] += beta;
        }
    }
    Operator { space, mat }
}

/// Creation operator, adjoint of [`annihilation`].
pub fn creation(space: FockSpace) -> Operator {
    annihilation(space).adjoint()
}

/// Physical number operator b^dag b. In the lab frame this is exactly
/// diagonal with entries 0..n_max; in a displaced frame it carries the
/// center shift.
pub fn number_operator(space: FockSpace) -> Operator {
    match space.frame {
        Frame::Lab => {
            let mut mat = Array2::<C64>::zeros((space.dim(), space.dim()));
            for n in 0..space.dim() {
                mat[[n, n]] = C64::new(n as f64, 0.0);
            }
            Operator { space, mat }
        }
        Frame::Displaced { .. } => {
            let b = annihilation(space);
            b.adjoint().matmul(&b).expect("same space")
        }
    }
}

/// Normalized coherent-state vector |alpha> in the space's own frame
/// (`alpha` is the amplitude relative to the frame center). The truncated
/// vector is renormalized; `truncation_weight` reports the discarded tail
/// 1 - sum |c_n|^2 before renormalization.
pub fn coherent_vector(space: FockSpace, alpha: C64) -> (Array1<C64>, f64) {
    let d = space.dim();
    let mut v = Array1::<C64>::zeros(d);
    let a2 = alpha.norm_sqr();
    let lnf = ln_factorials(space.n_max);
    // c_n = alpha^n / sqrt(n!) * exp(-|alpha|^2/2), assembled in log space
    for n in 0..d {
        let ln_mag = if n == 0 {
            -a2 / 2.0
        } else {
            n as f64 * alpha.norm().ln() - 0.5 * lnf[n] - a2 / 2.0
        };
        let phase = alpha.arg() * n as f64;
        v[n] = C64::from_polar(ln_mag.exp(), phase);
    }
    let captured: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let tail = (1.0 - captured).max(0.0);
    if captured > 0.0 {
        v.mapv_inplace(|z| z / captured.sqrt());
    }
    (v, tail)
}

/// Rectangular change-of-basis matrix T with T[n, k] = <n| D(beta) |k>,
/// mapping a displaced-frame state (dimension `dim_from`) into the lab
/// frame (dimension `dim_to`): rho_lab = T rho T^dag.
pub fn displacement_matrix(beta: C64, dim_to: usize, dim_from: usize) -> Array2<C64> {
    let mut t = Array2::<C64>::zeros((dim_to, dim_from));
    let b2 = beta.norm_sqr();
    let lnf = ln_factorials(dim_to.max(dim_from));
    let ln_b = if beta.norm() > 0.0 { beta.norm().ln() } else { f64::NEG_INFINITY };
    for n in 0..dim_to {
        // generalized Laguerre values L_k^(|n-k|)(|beta|^2) for all k at fixed n
        // are cheapest row-wise; recurrence index runs over min(n, k)
        for k in 0..dim_from {
            let (lo, hi) = if n >= k { (k, n) } else { (n, k) };
            let d = (hi - lo) as f64;
            let lag = laguerre_row(lo, d, b2)[lo];
            let radial = if hi > lo { d * ln_b } else { 0.0 };
            let ln_mag = 0.5 * (lnf[lo] - lnf[hi]) + radial - b2 / 2.0;
            if !ln_mag.is_finite() {
                continue; // beta == 0 off-diagonal
            }
            let mag = ln_mag.exp() * lag;
            let elem = if n >= k {
                // <n|D|k> = sqrt(k!/n!) beta^(n-k) e^{-|b|^2/2} L_k^(n-k)(|b|^2)
                C64::from_polar(mag.abs(), beta.arg() * d) * mag.signum()
            } else {
                // <n|D|k> = sqrt(n!/k!) (-conj(beta))^(k-n) e^{-|b|^2/2} L_n^(k-n)(|b|^2)
                let mb = -beta.conj();
                C64::from_polar(mag.abs(), mb.arg() * d) * mag.signum()
            };
            t[[n, k]] = elem;
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rejects_tiny_spaces() {
        assert!(FockSpace::lab(1).is_err());
        assert!(FockSpace::lab(2).is_ok());
        assert!(FockSpace::displaced(3, c(f64::INFINITY, 0.0)).is_err());
    }

    #[test]
    fn ladder_matrix_entries() {
        let s = FockSpace::lab(2).unwrap();
        let a = annihilation(s);
        assert_eq!(a.mat[[0, 1]], c(1.0, 0.0));
        assert_abs_diff_eq!(a.mat[[1, 2]].re, 2.0f64.sqrt(), epsilon = 1e-15);
        assert_eq!(a.mat[[1, 0]], c(0.0, 0.0));
        let adag = a.adjoint();
        assert_eq!(adag.mat[[1, 0]], c(1.0, 0.0));
        assert_abs_diff_eq!(adag.mat[[2, 1]].re, 2.0f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn displaced_ladder_is_shifted_lab_ladder() {
        let lab = annihilation(FockSpace::lab(2).unwrap());
        let disp = annihilation(FockSpace::displaced(2, c(2.0, 0.0)).unwrap());
        for i in 0..3 {
            for j in 0..3 {
                let want = lab.mat[[i, j]] + if i == j { c(2.0, 0.0) } else { c(0.0, 0.0) };
                assert_eq!(disp.mat[[i, j]], want);
            }
        }
    }

    #[test]
    fn commutator_defect_vanishes_below_truncation_edge() {
        let s = FockSpace::lab(10).unwrap();
        let a = annihilation(s);
        let ad = a.adjoint();
        let comm = a.matmul(&ad).unwrap().mat - ad.matmul(&a).unwrap().mat;
        // [a, a^dag] = I exactly on rows/columns n < n_max
        for i in 0..10 {
            for j in 0..10 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(comm[[i, j]].re, want, epsilon = 1e-14);
                assert_abs_diff_eq!(comm[[i, j]].im, 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn number_operator_diagonal() {
        let s = FockSpace::lab(6).unwrap();
        let n = number_operator(s);
        for k in 0..7 {
            assert_eq!(n.mat[[k, k]], c(k as f64, 0.0));
        }
        let built = creation(s).matmul(&annihilation(s)).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                assert_abs_diff_eq!((n.mat[[i, j]] - built.mat[[i, j]]).norm(), 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn two_quantum_lowering_entries() {
        let s = FockSpace::lab(3).unwrap();
        let a = annihilation(s);
        let a2 = a.matmul(&a).unwrap();
        assert_abs_diff_eq!(a2.mat[[0, 2]].re, 2.0f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(a2.mat[[1, 3]].re, 6.0f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn coherent_vector_matches_poisson_amplitudes() {
        let s = FockSpace::lab(30).unwrap();
        let alpha = c(1.2, -0.4);
        let (v, tail) = coherent_vector(s, alpha);
        assert!(tail < 1e-12);
        // c_1 / c_0 = alpha
        let ratio = v[1] / v[0];
        assert_abs_diff_eq!(ratio.re, alpha.re, epsilon = 1e-12);
        assert_abs_diff_eq!(ratio.im, alpha.im, epsilon = 1e-12);
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn displacement_matrix_builds_coherent_state_from_vacuum() {
        let beta = c(1.5, 0.8);
        let t = displacement_matrix(beta, 40, 10);
        let (coh, _) = coherent_vector(FockSpace::lab(39).unwrap(), beta);
        for n in 0..40 {
            assert_abs_diff_eq!(t[[n, 0]].re, coh[n].re, epsilon = 1e-10);
            assert_abs_diff_eq!(t[[n, 0]].im, coh[n].im, epsilon = 1e-10);
        }
    }

    #[test]
    fn displacement_matrix_is_isometry_on_low_levels() {
        let beta = c(0.9, -1.1);
        let t = displacement_matrix(beta, 60, 12);
        let g = t.t().mapv(|z| z.conj()).dot(&t);
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(g[[i, j]].re, want, epsilon = 1e-9);
                assert_abs_diff_eq!(g[[i, j]].im, 0.0, epsilon = 1e-9);
            }
        }
    }
}
