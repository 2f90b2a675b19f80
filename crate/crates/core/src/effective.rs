//! Closed-form analytics of the synchronized oscillator: classical fixed
//! points of the amplitude equation, linearization eigenvalues, squeezing
//! (Bogoliubov) rates, steady-state covariance from the Lyapunov equation,
//! the analytic fluctuation spectrum, and regime classification.
//!
//! The classical amplitude beta = <b> obeys
//!
//!   d beta/dt = i Delta beta + (gamma1/2) beta - gamma2 |beta|^2 beta - F.
//!
//! Fixed points satisfy beta_ss = F / (i Delta + gamma1/2 - gamma2 u) with
//! u = |beta_ss|^2 a real root of the cubic
//!
//!   gamma2^2 u^3 - gamma1 gamma2 u^2 + (gamma1^2/4 + Delta^2) u - F^2 = 0.
//!
//! Linearizing the quantum model around a stable fixed point gives a
//! squeezing Hamiltonian; its diagonalization yields an effective harmonic
//! mode with frequency Omega_eff = sqrt(Delta^2 - 4 A^2), A = gamma2 u / 2,
//! damping Gamma = 4 gamma2 u - gamma1 and up/down rates Gamma_up/down that
//! control the dephasing rate Gamma_deph = Gamma_up + Gamma_down.

use ndarray::{array, Array1, Array2};
use ndarray_linalg::Solve;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::spectrum::SpectrumTrace;

/// A fixed point of the classical amplitude equation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FixedPoint {
    /// Complex steady-state amplitude.
    pub beta_ss: C64,
    /// |beta_ss|^2 (root of the amplitude cubic).
    pub u: f64,
    /// Eigenvalues of the linearized flow, sorted by real part (descending).
    pub lambda: [C64; 2],
    pub stable: bool,
    /// |RHS of the amplitude equation| at beta_ss.
    pub residual: f64,
}

impl FixedPoint {
    pub fn r_ss(&self) -> f64 {
        self.beta_ss.norm()
    }

    pub fn phi_ss(&self) -> f64 {
        self.beta_ss.arg()
    }

    pub fn underdamped(&self) -> bool {
        self.lambda[0].im.abs() > 0.0
    }
}

/// Fixed points of the amplitude equation. With no drive the only fixed
/// point is the unstable origin and the free limit cycle is reported
/// through `free_lc_radius`.
#[derive(Debug, Clone, Serialize)]
pub struct FixedPointSet {
    pub points: Vec<FixedPoint>,
    /// sqrt(gamma1 / 2 gamma2) when F = 0, where the free limit cycle sits.
    pub free_lc_radius: Option<f64>,
}

/// Right-hand side of the classical amplitude equation.
pub fn amplitude_rhs(p: &SystemParams, beta: C64) -> C64 {
    C64::new(0.0, p.detuning) * beta + 0.5 * p.gamma1 * beta
        - p.gamma2 * beta.norm_sqr() * beta
        - p.drive
}

/// Linearization eigenvalues at amplitude-squared u = |beta_ss|^2:
/// lambda = -2 gamma2 u + gamma1/2 +- sqrt(gamma2^2 u^2 - Delta^2).
fn eigenvalues_at(p: &SystemParams, u: f64) -> [C64; 2] {
    let re = -2.0 * p.gamma2 * u + 0.5 * p.gamma1;
    let disc = C64::new(p.gamma2 * p.gamma2 * u * u - p.detuning * p.detuning, 0.0).sqrt();
    let l1 = C64::new(re, 0.0) + disc;
    let l2 = C64::new(re, 0.0) - disc;
    if l1.re >= l2.re {
        [l1, l2]
    } else {
        [l2, l1]
    }
}

/// Real roots of the normalized cubic v^3 + a v^2 + b v + c = 0.
fn cubic_real_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    // depressed form t^3 + p t + q with v = t - a/3
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let shift = -a / 3.0;
    let disc = (q / 2.0) * (q / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0);
    let mut roots = if disc > 0.0 {
        let s = (-q / 2.0 + disc.sqrt()).cbrt();
        let t = (-q / 2.0 - disc.sqrt()).cbrt();
        vec![s + t + shift]
    } else if p == 0.0 && q == 0.0 {
        vec![shift]
    } else {
        // three real roots (trigonometric form)
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift)
            .collect()
    };
    // Newton polish each root on the original cubic
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let f = ((*r + a) * *r + b) * *r + c;
            let df = (3.0 * *r + 2.0 * a) * *r + b;
            if df != 0.0 {
                *r -= f / df;
            }
        }
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots.dedup_by(|x, y| (*x - *y).abs() < 1e-12 * (1.0 + x.abs()));
    roots
}

/// All fixed points of the amplitude equation, classified by the
/// linear-stability eigenvalues. One or three fixed points exist; in the
/// synchronized regime at most one is stable.
pub fn classical_fixed_points(p: &SystemParams) -> FixedPointSet {
    if p.drive == 0.0 {
        let u = 0.0;
        let beta = C64::new(0.0, 0.0);
        let fp = FixedPoint {
            beta_ss: beta,
            u,
            lambda: eigenvalues_at(p, u),
            stable: false,
            residual: 0.0,
        };
        return FixedPointSet {
            points: vec![fp],
            free_lc_radius: Some(p.limit_cycle_radius()),
        };
    }
    // Solve in v = gamma2 u, which keeps coefficients O(gamma1^k):
    // v^3 - gamma1 v^2 + (gamma1^2/4 + Delta^2) v - gamma2 F^2 = 0.
    let b = p.gamma1 * p.gamma1 / 4.0 + p.detuning * p.detuning;
    let c = -p.gamma2 * p.drive * p.drive;
    let vs = cubic_real_roots(-p.gamma1, b, c);
    let mut points = Vec::new();
    for v in vs {
        if v < 0.0 {
            continue; // u = |beta|^2 must be nonnegative
        }
        let u = v / p.gamma2;
        let denom = C64::new(0.5 * p.gamma1 - v, p.detuning);
        if denom.norm() == 0.0 {
            continue;
        }
        let beta = p.drive / denom;
        let lambda = eigenvalues_at(p, u);
        let stable = lambda[0].re < 0.0;
        points.push(FixedPoint {
            beta_ss: beta,
            u,
            lambda,
            stable,
            residual: amplitude_rhs(p, beta).norm(),
        });
    }
    FixedPointSet { points, free_lc_radius: None }
}

/// The unique stable fixed point, if any. If numerical noise near a
/// saddle-node boundary yields two stable candidates, the one with the
/// smaller amplitude-equation residual wins.
pub fn stable_fixed_point(p: &SystemParams) -> Option<FixedPoint> {
    let set = classical_fixed_points(p);
    let mut stable: Vec<FixedPoint> = set.points.into_iter().filter(|f| f.stable).collect();
    stable.sort_by(|a, b| a.residual.partial_cmp(&b.residual).unwrap());
    stable.into_iter().next()
}

/// Squeezing transformation data and the rates of the diagonalized
/// fluctuation model. Fields tied to the harmonic (underdamped) form are
/// `None` when Delta^2 <= 4 A^2.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BogoliubovData {
    /// A >= 0 with A e^{i theta} = -i gamma2 beta_ss^2 / 2.
    pub amp: f64,
    pub theta: f64,
    /// Damping Gamma = Gamma_down - Gamma_up = 4 gamma2 |beta_ss|^2 - gamma1.
    pub gamma: f64,
    /// Delta^2 - 4 A^2 (sign decides under- vs overdamped).
    pub omega_eff_sq: f64,
    pub underdamped: bool,
    /// Squeeze parameter from tanh(2 chi) = 2A/Delta.
    pub chi: Option<f64>,
    pub omega_eff: Option<f64>,
    pub gamma_up: Option<f64>,
    pub gamma_down: Option<f64>,
    /// Dephasing rate Gamma_up + Gamma_down.
    pub gamma_deph: Option<f64>,
    /// Effective occupation of the diagonal mode, Gamma_up / Gamma.
    pub n_eff: Option<f64>,
    /// Langevin-bath occupation gamma1 / Gamma (non-diagonal basis).
    pub n_bar: f64,
}

/// Bogoliubov diagonalization of the linearized model around a fixed point.
/// Fails with [`Error::Unstable`] when Gamma <= 0.
pub fn bogoliubov(p: &SystemParams, fp: &FixedPoint) -> Result<BogoliubovData> {
    let b2 = fp.beta_ss * fp.beta_ss;
    let squeeze = C64::new(0.0, -1.0) * p.gamma2 * b2 / 2.0;
    let amp = squeeze.norm();
    let theta = squeeze.arg();
    let gamma = 4.0 * p.gamma2 * fp.u - p.gamma1;
    if gamma <= 0.0 {
        return Err(Error::Unstable { gamma });
    }
    let omega_eff_sq = p.detuning * p.detuning - 4.0 * amp * amp;
    let underdamped = omega_eff_sq > 0.0;
    let (chi, omega_eff, gamma_up, gamma_down, gamma_deph, n_eff) = if underdamped {
        let chi = 0.5 * (2.0 * amp / p.detuning).atanh();
        let (sh, ch) = (chi.sinh(), chi.cosh());
        let (sh2, ch2) = (sh * sh, ch * ch);
        let four_g2u = 4.0 * p.gamma2 * fp.u;
        let up = four_g2u * sh2 + p.gamma1 * ch2;
        let down = four_g2u * ch2 + p.gamma1 * sh2;
        (
            Some(chi),
            Some(omega_eff_sq.sqrt()),
            Some(up),
            Some(down),
            Some(up + down),
            Some(up / gamma),
        )
    } else {
        (None, None, None, None, None, None)
    };
    Ok(BogoliubovData {
        amp,
        theta,
        gamma,
        omega_eff_sq,
        underdamped,
        chi,
        omega_eff,
        gamma_up,
        gamma_down,
        gamma_deph,
        n_eff,
        n_bar: p.gamma1 / gamma,
    })
}

/// Steady-state covariance of the linearized model.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CovarianceResult {
    /// [[sigma_11, sigma_12], [sigma_12, sigma_22]].
    pub sigma: [[f64; 2]; 2],
    /// Eigenvalues sorted ascending; shot noise sits at 1/2.
    pub eigenvalues: [f64; 2],
    pub asymmetry: f64,
    pub below_shot_noise: bool,
    /// Orientation of the major axis, in (-pi/2, pi/2].
    pub principal_angle: f64,
    /// ||M sigma + sigma M^T + D|| (max entry) of the returned solution.
    pub residual: f64,
}

/// Drift and diffusion matrices of the quadrature covariance equation
/// d sigma/dt = M sigma + sigma M^T + D for the linearized model.
pub fn covariance_matrices(p: &SystemParams, fp: &FixedPoint) -> (Array2<f64>, Array2<f64>) {
    let r = C64::new(0.0, 0.5 * p.gamma2) * fp.beta_ss * fp.beta_ss;
    let two_re_r = 2.0 * r.re;
    let two_im_r = 2.0 * r.im;
    let decay = 0.5 * p.gamma1 - 2.0 * p.gamma2 * fp.u;
    let m = array![
        [-two_im_r + decay, two_re_r - p.detuning],
        [two_re_r + p.detuning, two_im_r + decay],
    ];
    let d_el = 0.5 * p.gamma1 + 2.0 * p.gamma2 * fp.u;
    let d = array![[d_el, 0.0], [0.0, d_el]];
    (m, d)
}

/// Solve M sigma + sigma M^T + D = 0 for the symmetric 2x2 steady-state
/// covariance and derive the squeezing metrics.
pub fn lyapunov_covariance(p: &SystemParams, fp: &FixedPoint) -> Result<CovarianceResult> {
    let gamma = 4.0 * p.gamma2 * fp.u - p.gamma1;
    if gamma <= 0.0 {
        return Err(Error::Unstable { gamma });
    }
    let (m, d) = covariance_matrices(p, fp);
    // Unknowns (s11, s12, s22):
    //   2 m11 s11 + 2 m12 s12            = -d11
    //   m21 s11 + (m11 + m22) s12 + m12 s22 = 0
    //   2 m21 s12 + 2 m22 s22            = -d22
    let a = array![
        [2.0 * m[[0, 0]], 2.0 * m[[0, 1]], 0.0],
        [m[[1, 0]], m[[0, 0]] + m[[1, 1]], m[[0, 1]]],
        [0.0, 2.0 * m[[1, 0]], 2.0 * m[[1, 1]]],
    ];
    let rhs: Array1<f64> = array![-d[[0, 0]], 0.0, -d[[1, 1]]];
    let sol = a
        .solve(&rhs)
        .map_err(|e| Error::SolverFailure(format!("Lyapunov system singular: {e}")))?;
    let (s11, s12, s22) = (sol[0], sol[1], sol[2]);
    let sigma = [[s11, s12], [s12, s22]];
    // residual of the returned solution
    let res = {
        let s = array![[s11, s12], [s12, s22]];
        let r = m.dot(&s) + s.dot(&m.t()) + &d;
        r.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
    };
    let mean = 0.5 * (s11 + s22);
    let half_diff = 0.5 * (s11 - s22);
    let radius = (half_diff * half_diff + s12 * s12).sqrt();
    let lo = mean - radius;
    let hi = mean + radius;
    // major-axis angle from the eigenvector of the largest eigenvalue
    let mut angle = 0.5 * (2.0 * s12).atan2(s11 - s22);
    if angle <= -std::f64::consts::FRAC_PI_2 {
        angle += std::f64::consts::PI;
    } else if angle > std::f64::consts::FRAC_PI_2 {
        angle -= std::f64::consts::PI;
    }
    Ok(CovarianceResult {
        sigma,
        eigenvalues: [lo, hi],
        asymmetry: hi / lo,
        below_shot_noise: lo < 0.5,
        principal_angle: angle,
        residual: res,
    })
}

/// Analytic fluctuation spectrum of the linearized (Langevin) model,
/// evaluated on `omegas`. Requires Gamma > 0 so the bath occupation
/// n_bar = gamma1 / Gamma is finite.
pub fn effective_spectrum(p: &SystemParams, fp: &FixedPoint, omegas: &[f64]) -> Result<SpectrumTrace> {
    let gamma = 4.0 * p.gamma2 * fp.u - p.gamma1;
    if gamma <= 0.0 {
        return Err(Error::Unstable { gamma });
    }
    let n_bar = p.gamma1 / gamma;
    let g2b4 = p.gamma2 * p.gamma2 * fp.u * fp.u; // gamma2^2 |beta|^4
    let omega_sq = p.detuning * p.detuning - g2b4; // can be negative (overdamped)
    let half_g_sq = 0.25 * gamma * gamma;
    let values: Vec<f64> = omegas
        .iter()
        .map(|&w| {
            let num = gamma * g2b4
                + n_bar
                    * gamma
                    * (half_g_sq + g2b4 + (w + p.detuning) * (w + p.detuning));
            let den = (w * w - omega_sq) * (w * w - omega_sq)
                + 2.0 * half_g_sq * (w * w + omega_sq)
                + half_g_sq * half_g_sq;
            num / den
        })
        .collect();
    Ok(SpectrumTrace {
        omegas: omegas.to_vec(),
        values,
        coherent_weight: fp.u,
        failures: Vec::new(),
    })
}

/// Classical second-order phase-equation parameters (Gamma, Omega_bare),
/// with Omega_eff^2 = Omega^2 - Gamma^2/4 = Delta^2 - gamma2^2 R_ss^4.
pub fn second_order_phase_params(p: &SystemParams, fp: &FixedPoint) -> (f64, f64) {
    let v = p.gamma2 * fp.u;
    let gamma = 4.0 * v - p.gamma1;
    let omega_sq =
        p.detuning * p.detuning + (v - 0.5 * p.gamma1) * (3.0 * v - 0.5 * p.gamma1);
    (gamma, omega_sq.max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeLabel {
    NoStableFixedPoint,
    Overdamped,
    Underdamped,
    QuantumCoherent,
}

impl std::fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RegimeLabel::NoStableFixedPoint => "no-stable-fixed-point",
            RegimeLabel::Overdamped => "overdamped",
            RegimeLabel::Underdamped => "underdamped",
            RegimeLabel::QuantumCoherent => "quantum-coherent",
        };
        f.write_str(s)
    }
}

/// Everything the effective model says about one parameter point.
#[derive(Debug, Clone, Serialize)]
pub struct EffectiveSummary {
    pub params: SystemParams,
    pub label: RegimeLabel,
    pub fixed_point: Option<FixedPoint>,
    pub rates: Option<BogoliubovData>,
    pub covariance: Option<CovarianceResult>,
    /// Coherence quality factor Omega_eff / Gamma_deph.
    pub quality: Option<f64>,
}

/// Classify the dynamical regime at `p` and bundle all effective-model
/// quantities.
pub fn classify_regime(p: &SystemParams) -> EffectiveSummary {
    let Some(fp) = stable_fixed_point(p) else {
        return EffectiveSummary {
            params: *p,
            label: RegimeLabel::NoStableFixedPoint,
            fixed_point: None,
            rates: None,
            covariance: None,
            quality: None,
        };
    };
    let rates = bogoliubov(p, &fp).ok();
    let covariance = lyapunov_covariance(p, &fp).ok();
    let (label, quality) = match &rates {
        None => (RegimeLabel::NoStableFixedPoint, None),
        Some(r) if !r.underdamped => (RegimeLabel::Overdamped, None),
        Some(r) => {
            let q = r.omega_eff.unwrap() / r.gamma_deph.unwrap();
            if q > 1.0 {
                (RegimeLabel::QuantumCoherent, Some(q))
            } else {
                (RegimeLabel::Underdamped, Some(q))
            }
        }
    };
    EffectiveSummary {
        params: *p,
        label,
        fixed_point: Some(fp),
        rates,
        covariance,
        quality,
    }
}
