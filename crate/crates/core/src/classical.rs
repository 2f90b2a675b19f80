//! Classical dynamics of the driven Van der Pol amplitude equation:
//! trajectory integration, closed-form bifurcation boundaries and the
//! synchronization phase diagram with limit-cycle / phase-self-oscillation
//! detection.
//!
//! The boundaries, as functions of detuning at fixed gamma1, gamma2 (with
//! v = gamma2 |beta_ss|^2 and s = sqrt(gamma1^2 - 12 Delta^2)):
//!
//! (i)  saddle-node folds of the amplitude cubic, from its double-root
//!      condition: gamma2 F^2 = (2 gamma1 -+ s)(gamma1^2 + 12 Delta^2
//!      +- gamma1 s) / 108, valid for gamma1^2 >= 12 Delta^2;
//! (ii) Belyakov-Devaney line (stable node -> stable focus, v = |Delta|):
//!      F^2 = (|Delta| - gamma1/2)^2 |Delta| / gamma2 + |Delta|^3 / gamma2,
//!      for |Delta| > gamma1/4;
//! (iii) Hopf line (Re lambda = 0, v = gamma1/4):
//!      F^2 = gamma1 Delta^2 / (4 gamma2) + gamma1^3 / (64 gamma2),
//!      for |Delta| > gamma1/4.

use ndarray::{array, Array1};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::effective::{classical_fixed_points, stable_fixed_point};
use crate::error::{Error, Result};
use crate::ode::{solve_at, OdeOptions};
use crate::params::SystemParams;

#[derive(Debug, Clone)]
pub struct ClassicalTrajectory {
    pub times: Vec<f64>,
    pub beta: Vec<C64>,
}

impl ClassicalTrajectory {
    pub fn amplitudes(&self) -> Vec<f64> {
        self.beta.iter().map(|b| b.norm()).collect()
    }

    pub fn phases(&self) -> Vec<f64> {
        self.beta.iter().map(|b| b.arg()).collect()
    }

    /// Continuous (unwrapped) phase along the trajectory.
    pub fn unwrapped_phases(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.beta.len());
        let mut prev = match self.beta.first() {
            Some(b) => b.arg(),
            None => return out,
        };
        let mut acc = prev;
        out.push(acc);
        for b in &self.beta[1..] {
            let a = b.arg();
            let mut d = a - prev;
            while d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            }
            while d < -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            acc += d;
            out.push(acc);
            prev = a;
        }
        out
    }
}

/// Integrate the amplitude equation from `beta0`, sampling at `times`.
pub fn integrate(
    p: &SystemParams,
    beta0: C64,
    times: &[f64],
    opts: &OdeOptions,
) -> Result<ClassicalTrajectory> {
    if !(beta0.re.is_finite() && beta0.im.is_finite()) {
        return Err(Error::invalid("beta0", "must be finite"));
    }
    let bound = 4.0 * p.limit_cycle_radius().max(beta0.norm()) + (p.drive / p.gamma2).cbrt() + 10.0;
    let f = |_t: f64, y: &Array1<C64>| {
        let b = y[0];
        array![crate::effective::amplitude_rhs(p, b)]
    };
    let snaps = solve_at(&f, &array![beta0], times, opts)?;
    let beta: Vec<C64> = snaps.iter().map(|s| s[0]).collect();
    if let Some(b) = beta.iter().find(|b| b.norm() > bound) {
        return Err(Error::Integration(format!(
            "trajectory escaped to |beta| = {:.3e} (bound {bound:.3e})",
            b.norm()
        )));
    }
    Ok(ClassicalTrajectory { times: times.to_vec(), beta })
}

/// The two saddle-node folds of the amplitude cubic at a given detuning.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SaddleNodeBoundary {
    /// F^2 where the stable node and the saddle annihilate (the
    /// synchronization -> limit-cycle transition at small drive).
    pub f_sq_lower: f64,
    /// F^2 of the inner fold (saddle and unstable spiral).
    pub f_sq_upper: f64,
}

/// Closed-form saddle-node boundary (i); requires gamma1^2 >= 12 Delta^2.
pub fn boundary_saddle_node(p: &SystemParams, delta: f64) -> Result<SaddleNodeBoundary> {
    let g1 = p.gamma1;
    let disc = g1 * g1 - 12.0 * delta * delta;
    if disc < 0.0 {
        return Err(Error::invalid(
            "detuning",
            format!("saddle-node fold needs gamma1^2 >= 12 Delta^2 (|Delta| <= {:.6})", g1 / 12f64.sqrt()),
        ));
    }
    let s = disc.sqrt();
    let e_low = (2.0 * g1 + s) * (g1 * g1 + 12.0 * delta * delta - g1 * s) / 108.0;
    let e_high = (2.0 * g1 - s) * (g1 * g1 + 12.0 * delta * delta + g1 * s) / 108.0;
    Ok(SaddleNodeBoundary {
        f_sq_lower: e_low / p.gamma2,
        f_sq_upper: e_high / p.gamma2,
    })
}

/// Closed-form Belyakov-Devaney boundary (ii); requires |Delta| > gamma1/4.
pub fn boundary_belyakov_devaney(p: &SystemParams, delta: f64) -> Result<f64> {
    let d = delta.abs();
    if d <= p.gamma1 / 4.0 {
        return Err(Error::invalid(
            "detuning",
            format!("node-to-focus line needs |Delta| > gamma1/4 = {:.6}", p.gamma1 / 4.0),
        ));
    }
    Ok((d - 0.5 * p.gamma1).powi(2) * d / p.gamma2 + d.powi(3) / p.gamma2)
}

/// Closed-form Hopf boundary (iii); requires |Delta| > gamma1/4.
pub fn boundary_hopf(p: &SystemParams, delta: f64) -> Result<f64> {
    if delta.abs() <= p.gamma1 / 4.0 {
        return Err(Error::invalid(
            "detuning",
            format!("Hopf line needs |Delta| > gamma1/4 = {:.6}", p.gamma1 / 4.0),
        ));
    }
    Ok(0.25 * p.gamma1 * delta * delta / p.gamma2 + p.gamma1.powi(3) / (64.0 * p.gamma2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagramLabel {
    SyncOverdamped,
    SyncUnderdamped,
    LimitCycle,
    PhaseSelfOscillation,
    Unresolved,
}

impl std::fmt::Display for DiagramLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DiagramLabel::SyncOverdamped => "sync-overdamped",
            DiagramLabel::SyncUnderdamped => "sync-underdamped",
            DiagramLabel::LimitCycle => "limit-cycle",
            DiagramLabel::PhaseSelfOscillation => "phase-self-oscillation",
            DiagramLabel::Unresolved => "unresolved",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiagramCell {
    pub drive: f64,
    pub detuning: f64,
    pub label: DiagramLabel,
    /// Winding number of the attractor around the phase-space origin per
    /// period (0 for fixed points and phase self-oscillations).
    pub winding: i32,
}

/// Attractor-detection controls for unresolved (no stable fixed point)
/// cells: integrate `transient` time units, then observe for `window` and
/// look for a recurrence on the Poincare section Im beta = Im beta_ref.
#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    pub transient: f64,
    pub window: f64,
    pub recurrence_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            transient: 50.0,
            window: 50.0,
            recurrence_tol: 1e-6,
        }
    }
}

/// Classify one (F, Delta) cell. Linear analysis decides synchronized
/// cells; it cannot split limit cycles from phase self-oscillations, so
/// unstable cells are integrated to their attractor and the winding number
/// of beta(t) around the origin over one detected period decides.
pub fn classify_cell(p: &SystemParams, opts: &ScanOptions) -> DiagramCell {
    if let Some(fp) = stable_fixed_point(p) {
        let label = if fp.underdamped() {
            DiagramLabel::SyncUnderdamped
        } else {
            DiagramLabel::SyncOverdamped
        };
        return DiagramCell { drive: p.drive, detuning: p.detuning, label, winding: 0 };
    }
    match attractor_winding(p, opts) {
        Some(w) if w != 0 => DiagramCell {
            drive: p.drive,
            detuning: p.detuning,
            label: DiagramLabel::LimitCycle,
            winding: w,
        },
        Some(_) => DiagramCell {
            drive: p.drive,
            detuning: p.detuning,
            label: DiagramLabel::PhaseSelfOscillation,
            winding: 0,
        },
        None => DiagramCell {
            drive: p.drive,
            detuning: p.detuning,
            label: DiagramLabel::Unresolved,
            winding: 0,
        },
    }
}

/// Integrate to the attractor and return the winding number per period, or
/// None when no periodic recurrence is found within the window.
fn attractor_winding(p: &SystemParams, opts: &ScanOptions) -> Option<i32> {
    // start near the (unstable) fixed point with a kick, falling back to a
    // generic point; avoids the unstable manifold taking long excursions
    let start = classical_fixed_points(p)
        .points
        .first()
        .map(|f| f.beta_ss + C64::new(0.1, 0.05) * (1.0 + f.beta_ss.norm()))
        .unwrap_or(C64::new(1.0, 0.3));
    let rot_rate = p.detuning.abs().max(p.gamma1);
    let dt = (0.05 * p.gamma1.recip()).min(0.3 / rot_rate);
    let ode = OdeOptions { rtol: 1e-11, atol: 1e-13, ..Default::default() };
    let tr = integrate(p, start, &[opts.transient], &ode).ok()?;
    let b_ref = *tr.beta.last()?;
    let n = (opts.window / dt).ceil() as usize;
    let times: Vec<f64> = (1..=n).map(|k| k as f64 * dt).collect();
    let traj = integrate(p, b_ref, &times, &ode).ok()?;
    let mut path = vec![b_ref];
    path.extend_from_slice(&traj.beta);

    // Poincare section Im beta = Im beta_ref, upward crossings; each
    // crossing state is refined by bisecting the integration time so the
    // recurrence test compares states on the section, not raw samples.
    let mut crossings: Vec<(usize, C64, f64)> = Vec::new(); // (sample k, state, time)
    for k in 1..path.len() {
        let f0 = path[k - 1].im - b_ref.im;
        let f1 = path[k].im - b_ref.im;
        if f0 <= 0.0 && f1 > 0.0 {
            let (state, tau) = refine_crossing(p, path[k - 1], dt, b_ref.im, &ode)?;
            crossings.push((k, state, (k as f64 - 1.0) * dt + tau));
        }
    }
    let scale = path.iter().map(|b| b.norm()).fold(0.0, f64::max).max(1.0);
    for w in crossings.windows(2) {
        let (k0, b0, _t0) = w[0];
        let (k1, b1, _t1) = w[1];
        if (b1 - b0).norm() <= opts.recurrence_tol * scale {
            let winding: f64 = path[k0 - 1..=k1]
                .windows(2)
                .map(|pair| {
                    let mut d = pair[1].arg() - pair[0].arg();
                    while d > std::f64::consts::PI {
                        d -= 2.0 * std::f64::consts::PI;
                    }
                    while d < -std::f64::consts::PI {
                        d += 2.0 * std::f64::consts::PI;
                    }
                    d
                })
                .sum::<f64>()
                / (2.0 * std::f64::consts::PI);
            return Some(winding.round() as i32);
        }
    }
    None
}

/// Bisect the time offset in [0, dt] at which Im beta crosses `target_im`
/// upward, starting from `b0`. Returns the state on the section.
fn refine_crossing(
    p: &SystemParams,
    b0: C64,
    dt: f64,
    target_im: f64,
    ode: &OdeOptions,
) -> Option<(C64, f64)> {
    let state_at = |tau: f64| -> Option<C64> {
        if tau == 0.0 {
            return Some(b0);
        }
        integrate(p, b0, &[tau], ode).ok().map(|t| t.beta[0])
    };
    let mut lo = 0.0;
    let mut hi = dt;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let s = state_at(mid)?;
        if s.im - target_im <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * dt.max(1.0) {
            break;
        }
    }
    let tau = 0.5 * (lo + hi);
    state_at(tau).map(|s| (s, tau))
}

/// Scan the (F, Delta) grid in parallel; cells come back row-major with
/// drive as the outer loop.
pub fn scan_phase_diagram(
    base: &SystemParams,
    drives: &[f64],
    detunings: &[f64],
    opts: &ScanOptions,
) -> Result<Vec<DiagramCell>> {
    for &f in drives {
        if !(f.is_finite() && f >= 0.0) {
            return Err(Error::invalid("drives", format!("bad drive {f}")));
        }
    }
    for &d in detunings {
        if !d.is_finite() {
            return Err(Error::invalid("detunings", format!("bad detuning {d}")));
        }
    }
    let grid: Vec<(f64, f64)> = drives
        .iter()
        .flat_map(|&f| detunings.iter().map(move |&d| (f, d)))
        .collect();
    let cells: Vec<DiagramCell> = grid
        .par_iter()
        .map(|&(f, d)| {
            let p = SystemParams { drive: f, detuning: d, ..*base };
            classify_cell(&p, opts)
        })
        .collect();
    Ok(cells)
}
