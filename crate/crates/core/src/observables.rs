//! Observables of truncated-Fock-space states: Wigner densities, the phase
//! probability distribution P(phi), Wigner-negativity volume, quadrature
//! covariances and the rotated quadratures used to track phase deviations
//! around a synchronized steady state.
//!
//! Conventions: quadratures X1 = (b + b^dag)/sqrt(2), X2 = -i(b - b^dag)/
//! sqrt(2); the vacuum has variance 1/2 in both and its Wigner density is
//! W(x, p) = exp(-x^2 - p^2)/pi. Phase-space points map to amplitudes via
//! alpha = (x + i p)/sqrt(2).

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{annihilation, FockSpace, Operator};
use crate::lindblad::{auto_lab_frame, DensityMatrix};
use crate::util::trace;

/// Sampled Wigner density on a rectangular phase-space grid.
#[derive(Debug, Clone)]
pub struct WignerGrid {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    /// values[[i, j]] = W(xs[i], ps[j]).
    pub values: Array2<f64>,
}

impl WignerGrid {
    pub fn dx(&self) -> f64 {
        self.xs[1] - self.xs[0]
    }

    pub fn dp(&self) -> f64 {
        self.ps[1] - self.ps[0]
    }

    /// Riemann-sum mass, ~1 when the grid covers the state.
    pub fn mass(&self) -> f64 {
        self.values.sum() * self.dx() * self.dp()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Wigner transform from the Fock-basis density matrix, evaluated per grid
/// point with the standard ladder recurrences (exact per matrix element,
/// no FFT). Displaced-frame states are evaluated in physical coordinates by
/// shifting the grid into the frame.
pub fn wigner(rho: &DensityMatrix, xs: &[f64], ps: &[f64]) -> Result<WignerGrid> {
    if xs.len() < 2 || ps.len() < 2 {
        return Err(Error::invalid("grid", "need at least 2x2 points"));
    }
    for g in [xs, ps] {
        if g.windows(2).any(|w| w[1] <= w[0]) || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("grid", "must be finite and increasing"));
        }
    }
    let center = rho.space.frame.center();
    let d = rho.dim();
    let r = &rho.rho;
    let sqrt_n: Vec<f64> = (0..d).map(|n| (n as f64).sqrt()).collect();
    let rows: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|&x| {
            let mut row = Vec::with_capacity(ps.len());
            let mut wlist = vec![C64::new(0.0, 0.0); d];
            for &p in ps {
                let a = C64::new(x, p) / 2f64.sqrt() - center;
                let two_a = 2.0 * a;
                let two_ac = 2.0 * a.conj();
                wlist[0] = C64::new((-2.0 * a.norm_sqr()).exp() / std::f64::consts::PI, 0.0);
                for n in 1..d {
                    wlist[n] = two_a * wlist[n - 1] / sqrt_n[n];
                }
                let mut w = (r[[0, 0]] * wlist[0]).re;
                for n in 1..d {
                    w += 2.0 * (r[[0, n]] * wlist[n]).re;
                }
                for m in 1..d {
                    let temp = wlist[m];
                    wlist[m] = (two_ac * temp - sqrt_n[m] * wlist[m - 1]) / sqrt_n[m];
                    w += (r[[m, m]] * wlist[m]).re;
                    let mut prev = temp;
                    for n in (m + 1)..d {
                        let next = (two_a * wlist[n - 1] - sqrt_n[m] * prev) / sqrt_n[n];
                        prev = wlist[n];
                        wlist[n] = next;
                        w += 2.0 * (r[[m, n]] * wlist[n]).re;
                    }
                }
                row.push(w);
            }
            row
        })
        .collect();
    let mut values = Array2::<f64>::zeros((xs.len(), ps.len()));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    Ok(WignerGrid {
        xs: xs.to_vec(),
        ps: ps.to_vec(),
        values,
    })
}

/// Default symmetric grid covering a state of amplitude scale `amp`:
/// n x n points on [-(amp + 5), amp + 5] in both quadratures (amplitude in
/// |beta| units is scaled by sqrt(2) into quadrature units).
pub fn default_grid(amp: f64, n: usize) -> Vec<f64> {
    let half = (amp * 2f64.sqrt() + 5.0).max(5.0);
    crate::util::linspace(-half, half, n.max(2))
}

/// Integrated negative part of a Wigner density: sum |W| dx dp - 1,
/// clipped at zero.
pub fn negativity_volume(w: &WignerGrid) -> f64 {
    let total: f64 = w.values.iter().map(|v| v.abs()).sum();
    (total * w.dx() * w.dp() - 1.0).max(0.0)
}

/// Phase probability distribution P(phi) on a uniform grid over [0, 2 pi).
#[derive(Debug, Clone)]
pub struct PhaseDistribution {
    pub phis: Vec<f64>,
    pub values: Vec<f64>,
}

impl PhaseDistribution {
    pub fn dphi(&self) -> f64 {
        self.phis[1] - self.phis[0]
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dphi()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Peak position and height, refined by a quadratic fit through the
    /// maximum sample and its neighbours (periodic).
    pub fn peak(&self) -> (f64, f64) {
        let n = self.values.len();
        let (k, &vmax) = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let vm = self.values[(k + n - 1) % n];
        let vp = self.values[(k + 1) % n];
        let denom = vm - 2.0 * vmax + vp;
        if denom.abs() < 1e-300 {
            return (self.phis[k], vmax);
        }
        let shift = 0.5 * (vm - vp) / denom;
        let phi = self.phis[k] + shift * self.dphi();
        let height = vmax - 0.25 * (vm - vp) * shift;
        (phi.rem_euclid(2.0 * std::f64::consts::PI), height)
    }
}

/// P(phi) = sum_{n,m} e^{i(m-n)phi} <n|rho|m> / 2 pi, evaluated exactly on
/// the truncated space. Displaced-frame states are first re-expressed in
/// the lab frame (the phase is measured about the phase-space origin).
pub fn phase_distribution(rho: &DensityMatrix, n_phi: usize) -> Result<PhaseDistribution> {
    if n_phi < 8 {
        return Err(Error::invalid("n_phi", "need at least 8 angles"));
    }
    let (lab, _) = auto_lab_frame(rho)?;
    let d = lab.dim();
    let phis: Vec<f64> = (0..n_phi)
        .map(|j| 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64)
        .collect();
    let values: Vec<f64> = phis
        .par_iter()
        .map(|&phi| {
            // <phi| rho |phi> / 2 pi with |phi> = sum_n e^{i n phi} |n>
            let v: Vec<C64> = (0..d).map(|n| C64::from_polar(1.0, n as f64 * phi)).collect();
            let mut acc = C64::new(0.0, 0.0);
            for n in 0..d {
                let mut inner = C64::new(0.0, 0.0);
                for m in 0..d {
                    inner += lab.rho[[n, m]] * v[m];
                }
                acc += v[n].conj() * inner;
            }
            acc.re / (2.0 * std::f64::consts::PI)
        })
        .collect();
    Ok(PhaseDistribution { phis, values })
}

/// Expectation value Tr[rho O].
pub fn expectation(rho: &DensityMatrix, op: &Operator) -> Result<C64> {
    if op.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "operator dimension {} vs state {}",
            op.dim(),
            rho.dim()
        )));
    }
    Ok(trace(&op.mat.dot(&rho.rho)))
}

/// Central quadrature covariance matrix about the state's own mean, with
/// X1 = (db + db^dag)/sqrt(2), X2 = -i(db - db^dag)/sqrt(2), db = b - <b>.
/// Frame shifts cancel in central moments, so this works in any frame.
pub fn covariance_from_state(rho: &DensityMatrix) -> [[f64; 2]; 2] {
    let a = annihilation(FockSpace::lab(rho.space.n_max).expect("valid space"));
    let m = trace(&a.mat.dot(&rho.rho));
    let a2 = trace(&a.mat.dot(&a.mat).dot(&rho.rho)) - m * m;
    let adag_a =
        trace(&a.adjoint().mat.dot(&a.mat).dot(&rho.rho)).re - m.norm_sqr();
    let s11 = a2.re + adag_a + 0.5;
    let s22 = -a2.re + adag_a + 0.5;
    let s12 = a2.im;
    [[s11, s12], [s12, s22]]
}

/// Rotated quadratures at the synchronization angle phi_ss: the radial
/// deviation operator r and its perpendicular partner r_perp, built from
/// the fluctuation db = b - beta_ss (in the state's frame). With
/// x/x_zpf = b + b^dag and p/p_zpf = -i(b - b^dag),
///
///   r      =  cos(phi_ss) x/x_zpf + sin(phi_ss) p/p_zpf ,
///   r_perp =  sin(phi_ss) x/x_zpf - cos(phi_ss) p/p_zpf .
///
/// A coherent state at beta_ss e^{i d_phi} then gives
/// <r_perp> = -2 R_ss d_phi + O(d_phi^2).
#[derive(Debug, Clone)]
pub struct QuadratureFrame {
    pub phi_ss: f64,
    pub r_ss: f64,
    pub r_op: Operator,
    pub r_perp_op: Operator,
}

impl QuadratureFrame {
    pub fn new(space: FockSpace, beta_ss: C64) -> Result<Self> {
        let phi = beta_ss.arg();
        let b = annihilation(space);
        let d = space.dim();
        let mut db = b.mat.clone();
        for k in 0..d {
            db[[k, k]] -= beta_ss;
        }
        let db_dag = db.t().mapv(|z| z.conj());
        let x = &db + &db_dag;
        let p = (&db - &db_dag).mapv(|z| C64::new(0.0, -1.0) * z);
        let r = x.mapv(|z| z * phi.cos()) + p.mapv(|z| z * phi.sin());
        let r_perp = x.mapv(|z| z * phi.sin()) - p.mapv(|z| z * phi.cos());
        Ok(Self {
            phi_ss: phi,
            r_ss: beta_ss.norm(),
            r_op: Operator::new(space, r)?,
            r_perp_op: Operator::new(space, r_perp)?,
        })
    }
}

/// Per-snapshot phase deviation estimate and Var(r_perp).
#[derive(Debug, Clone)]
pub struct PhaseSeries {
    pub delta_phi: Vec<f64>,
    pub var_perp: Vec<f64>,
}

/// Estimate delta_phi(t) = -<r_perp>/(2 R_ss) and Var(r_perp) for each
/// snapshot (all in the frame's space).
pub fn phase_deviation_series(
    snapshots: &[DensityMatrix],
    frame: &QuadratureFrame,
) -> Result<PhaseSeries> {
    let mut delta_phi = Vec::with_capacity(snapshots.len());
    let mut var_perp = Vec::with_capacity(snapshots.len());
    let sq = frame.r_perp_op.matmul(&frame.r_perp_op)?;
    for s in snapshots {
        let mean = expectation(s, &frame.r_perp_op)?.re;
        let mean_sq = expectation(s, &sq)?.re;
        delta_phi.push(-mean / (2.0 * frame.r_ss));
        var_perp.push(mean_sq - mean * mean);
    }
    Ok(PhaseSeries { delta_phi, var_perp })
}

/// Fit ln y = a - rate * t by least squares; returns the decay rate.
/// Non-positive samples are skipped.
pub fn fit_decay_rate(times: &[f64], values: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    Some(-(n * sxy - sx * sy) / denom)
}
