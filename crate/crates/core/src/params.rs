//! System parameters of the driven Van der Pol oscillator.
//!
//! The model is fixed by four rates: one-quantum gain `gamma1`, two-quantum
//! loss `gamma2`, drive strength `drive` (F), and drive detuning `detuning`
//! (Delta = omega_d - omega_0). Everything downstream treats them in units
//! of `gamma1`, i.e. configuration files specify gamma2/gamma1, F/gamma1 and
//! Delta/gamma1 with gamma1 = 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// One-quantum gain rate (> 0).
    pub gamma1: f64,
    /// Two-quantum loss rate (> 0).
    pub gamma2: f64,
    /// External drive strength F (>= 0).
    pub drive: f64,
    /// Detuning Delta = omega_d - omega_0 of the drive from the oscillator.
    pub detuning: f64,
}

impl SystemParams {
    pub fn new(gamma1: f64, gamma2: f64, drive: f64, detuning: f64) -> Result<Self> {
        if !(gamma1.is_finite() && gamma1 > 0.0) {
            return Err(Error::invalid("gamma1", format!("must be finite and > 0, got {gamma1}")));
        }
        if !(gamma2.is_finite() && gamma2 > 0.0) {
            return Err(Error::invalid("gamma2", format!("must be finite and > 0, got {gamma2}")));
        }
        if !(drive.is_finite() && drive >= 0.0) {
            return Err(Error::invalid("drive", format!("must be finite and >= 0, got {drive}")));
        }
        if !detuning.is_finite() {
            return Err(Error::invalid("detuning", format!("must be finite, got {detuning}")));
        }
        Ok(Self { gamma1, gamma2, drive, detuning })
    }

    /// Parameters in units of gamma1 (the convention of every scan and config).
    pub fn in_gamma1_units(gamma2: f64, drive: f64, detuning: f64) -> Result<Self> {
        Self::new(1.0, gamma2, drive, detuning)
    }

    /// Radius of the free-running limit cycle, sqrt(gamma1 / 2 gamma2).
    pub fn limit_cycle_radius(&self) -> f64 {
        (self.gamma1 / (2.0 * self.gamma2)).sqrt()
    }
}
