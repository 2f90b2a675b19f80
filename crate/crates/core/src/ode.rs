//! Adaptive Dormand-Prince 5(4) integration of linear and nonlinear ODEs on
//! complex state vectors. Used for density-matrix propagation (on the
//! vectorized state) and for the classical amplitude equation.

use ndarray::Array1;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Initial step; estimated from the first derivative when None.
    pub h_init: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 50_000_000,
            h_init: None,
        }
    }
}

// Dormand-Prince coefficients (7 stages, FSAL).
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn err_norm(y: &Array1<C64>, y_new: &Array1<C64>, diff: &Array1<C64>, rtol: f64, atol: f64) -> f64 {
    let n = y.len() as f64;
    let mut acc = 0.0;
    for i in 0..y.len() {
        let scale = atol + rtol * y[i].norm().max(y_new[i].norm());
        let e = diff[i].norm() / scale;
        acc += e * e;
    }
    (acc / n).sqrt()
}

/// Integrate dy/dt = f(t, y) from `t0` to `t1`, returning y(t1).
pub fn integrate_to<F>(f: &F, y0: &Array1<C64>, t0: f64, t1: f64, opts: &OdeOptions) -> Result<Array1<C64>>
where
    F: Fn(f64, &Array1<C64>) -> Array1<C64>,
{
    if t1 < t0 {
        return Err(Error::Integration(format!("time runs backwards: {t0} -> {t1}")));
    }
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0.clone());
    }
    let mut y = y0.clone();
    let mut t = t0;
    let mut k0 = f(t, &y);
    let mut h = opts.h_init.unwrap_or_else(|| {
        let ynorm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(opts.atol);
        let dnorm = k0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if dnorm > 0.0 {
            (0.01 * ynorm / dnorm).min(span)
        } else {
            span
        }
    });
    let h_floor = span * 1e-14;
    let mut ks: Vec<Array1<C64>> = vec![Array1::zeros(y.len()); 7];

    for _step in 0..opts.max_steps {
        if t >= t1 {
            return Ok(y);
        }
        h = h.min(t1 - t);
        if h < h_floor {
            return Err(Error::Integration(format!(
                "step size underflow at t = {t:.6e} (h = {h:.3e})"
            )));
        }
        ks[0] = k0.clone();
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, &aj) in A[s - 1].iter().enumerate().take(s) {
                if aj != 0.0 {
                    ys.scaled_add(C64::new(h * aj, 0.0), &ks[j]);
                }
            }
            ks[s] = f(t + h * A[s - 1].iter().take(s).sum::<f64>(), &ys);
        }
        let mut y5 = y.clone();
        let mut ydiff = Array1::<C64>::zeros(y.len());
        for s in 0..7 {
            if B5[s] != 0.0 {
                y5.scaled_add(C64::new(h * B5[s], 0.0), &ks[s]);
            }
            let db = B5[s] - B4[s];
            if db != 0.0 {
                ydiff.scaled_add(C64::new(h * db, 0.0), &ks[s]);
            }
        }
        let err = err_norm(&y, &y5, &ydiff, opts.rtol, opts.atol);
        if err <= 1.0 {
            t += h;
            y = y5;
            k0 = ks[6].clone(); // FSAL
            if !y.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::Integration(format!("state blew up at t = {t:.6e}")));
            }
        }
        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
    }
    Err(Error::Integration(format!(
        "max step count {} exhausted at t = {t:.6e}",
        opts.max_steps
    )))
}

/// Integrate and record the state at each requested time. `times` must be
/// nonnegative and strictly increasing; integration starts at t = 0.
pub fn solve_at<F>(
    f: &F,
    y0: &Array1<C64>,
    times: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<Array1<C64>>>
where
    F: Fn(f64, &Array1<C64>) -> Array1<C64>,
{
    if times.is_empty() {
        return Ok(Vec::new());
    }
    if times[0] < 0.0 {
        return Err(Error::invalid("times", "must be nonnegative"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("times", "must be strictly increasing"));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut y = y0.clone();
    let mut t_prev = 0.0;
    for &t in times {
        y = integrate_to(f, &y, t_prev, t, opts)?;
        t_prev = t;
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let lam = C64::new(-2.0, 5.0);
        let f = |_t: f64, y: &Array1<C64>| y.mapv(|z| lam * z);
        let y0 = array![C64::new(1.0, 0.0)];
        let y1 = integrate_to(&f, &y0, 0.0, 1.3, &OdeOptions::default()).unwrap();
        let want = (lam * 1.3).exp();
        assert_abs_diff_eq!(y1[0].re, want.re, epsilon = 1e-9);
        assert_abs_diff_eq!(y1[0].im, want.im, epsilon = 1e-9);
    }

    #[test]
    fn harmonic_oscillator_energy_conserved() {
        // y'' = -y as 2d first-order system
        let f = |_t: f64, y: &Array1<C64>| array![y[1], -y[0]];
        let y0 = array![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let snaps = solve_at(&f, &y0, &[std::f64::consts::PI, 2.0 * std::f64::consts::PI], &OdeOptions::default()).unwrap();
        assert_abs_diff_eq!(snaps[0][0].re, -1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(snaps[1][0].re, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn rejects_decreasing_times() {
        let f = |_t: f64, y: &Array1<C64>| y.clone();
        let y0 = array![C64::new(1.0, 0.0)];
        assert!(solve_at(&f, &y0, &[1.0, 0.5], &OdeOptions::default()).is_err());
    }
}
