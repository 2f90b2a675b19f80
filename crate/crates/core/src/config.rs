//! Run configuration: a small TOML file with a `[params]` section plus
//! per-command blocks. All rates are in units of gamma1; the resolved
//! configuration is echoed into every output file for provenance.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{FockSpace, Frame};
use crate::params::SystemParams;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsBlock,
    #[serde(default)]
    pub truncation: TruncationBlock,
    #[serde(default)]
    pub resources: ResourcesBlock,
    #[serde(default)]
    pub steady: SteadyBlock,
    #[serde(default)]
    pub evolve: EvolveBlock,
    #[serde(default)]
    pub spectrum: SpectrumBlock,
    #[serde(default)]
    pub wigner: WignerBlock,
    #[serde(default)]
    pub effective: EffectiveBlock,
    #[serde(default)]
    pub classical_diagram: DiagramBlock,
    #[serde(default)]
    pub scan: ScanBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsBlock {
    /// Two-quantum loss rate over gamma1.
    pub gamma2: f64,
    /// Drive strength F over gamma1.
    pub drive: f64,
    /// Detuning Delta over gamma1.
    pub detuning: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationBlock {
    pub n_max: usize,
    /// "lab" or "displaced".
    pub frame: String,
    /// Displaced-frame center [re, im]; defaults to the stable classical
    /// fixed point when the frame is displaced and this is absent.
    pub center: Option<[f64; 2]>,
}

impl Default for TruncationBlock {
    fn default() -> Self {
        Self { n_max: 40, frame: "lab".into(), center: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourcesBlock {
    /// Memory budget for the dense superoperator and its factorizations.
    pub max_bytes: usize,
    /// Worker threads; 0 means one per CPU. The --workers flag and the
    /// QVDP_WORKERS variable override this.
    pub workers: usize,
}

impl Default for ResourcesBlock {
    fn default() -> Self {
        Self { max_bytes: crate::lindblad::DEFAULT_MEMORY_BUDGET, workers: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteadyBlock {
    /// Phase-distribution resolution.
    pub n_phi: usize,
}

impl Default for SteadyBlock {
    fn default() -> Self {
        Self { n_phi: 720 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveBlock {
    pub t_final: f64,
    pub n_snapshots: usize,
    /// "vacuum" | "steady" | "coherent" | "cat".
    pub initial: String,
    /// Physical amplitude of the coherent/cat center.
    pub initial_center: Option<[f64; 2]>,
    /// Cat lobe offset from the center.
    pub cat_offset: [f64; 2],
    /// Integrator tolerances.
    pub rtol: f64,
    pub atol: f64,
}

impl Default for EvolveBlock {
    fn default() -> Self {
        Self {
            t_final: 5.0,
            n_snapshots: 50,
            initial: "vacuum".into(),
            initial_center: None,
            cat_offset: [2.0, 0.0],
            rtol: 1e-8,
            atol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumBlock {
    /// "resolvent" or "eigen".
    pub method: String,
    pub n_omega: usize,
    /// Half-width of the grid; 0 picks 4 max(|Delta|, Omega_eff, Gamma_deph).
    pub omega_max: f64,
}

impl Default for SpectrumBlock {
    fn default() -> Self {
        Self { method: "resolvent".into(), n_omega: 2048, omega_max: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WignerBlock {
    pub n_grid: usize,
    /// Half-width of the quadrature grid; 0 picks amp sqrt(2) + 5.
    pub half_width: f64,
}

impl Default for WignerBlock {
    fn default() -> Self {
        Self { n_grid: 201, half_width: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffectiveBlock {
    /// Detuning sweep; the run's own detuning for a single point when
    /// n_delta = 1 and the bounds are left at zero.
    pub delta_min: f64,
    pub delta_max: f64,
    pub n_delta: usize,
}

impl Default for EffectiveBlock {
    fn default() -> Self {
        Self { delta_min: 0.0, delta_max: 0.0, n_delta: 1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagramBlock {
    pub f_min: f64,
    pub f_max: f64,
    pub n_f: usize,
    pub delta_min: f64,
    pub delta_max: f64,
    pub n_delta: usize,
}

impl Default for DiagramBlock {
    fn default() -> Self {
        Self { f_min: 0.05, f_max: 2.0, n_f: 21, delta_min: 0.0, delta_max: 1.5, n_delta: 21 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanBlock {
    pub f_min: f64,
    pub f_max: f64,
    pub n_f: usize,
    pub delta_min: f64,
    pub delta_max: f64,
    pub n_delta: usize,
    /// Log-spaced drive grid when true.
    pub log_f: bool,
}

impl Default for ScanBlock {
    fn default() -> Self {
        Self {
            f_min: 0.1,
            f_max: 100.0,
            n_f: 31,
            delta_min: 0.0,
            delta_max: 10.0,
            n_delta: 31,
            log_f: true,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::invalid("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::invalid("config", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.system_params()?;
        if self.truncation.n_max < 2 {
            return Err(Error::invalid("truncation.n_max", "must be >= 2"));
        }
        match self.truncation.frame.as_str() {
            "lab" | "displaced" => {}
            other => {
                return Err(Error::invalid(
                    "truncation.frame",
                    format!("expected \"lab\" or \"displaced\", got \"{other}\""),
                ));
            }
        }
        match self.spectrum.method.as_str() {
            "resolvent" | "eigen" => {}
            other => {
                return Err(Error::invalid(
                    "spectrum.method",
                    format!("expected \"resolvent\" or \"eigen\", got \"{other}\""),
                ));
            }
        }
        match self.evolve.initial.as_str() {
            "vacuum" | "steady" | "coherent" | "cat" => {}
            other => {
                return Err(Error::invalid(
                    "evolve.initial",
                    format!("expected vacuum|steady|coherent|cat, got \"{other}\""),
                ));
            }
        }
        if self.evolve.t_final <= 0.0 || !self.evolve.t_final.is_finite() {
            return Err(Error::invalid("evolve.t_final", "must be positive and finite"));
        }
        if self.evolve.n_snapshots == 0 {
            return Err(Error::invalid("evolve.n_snapshots", "must be >= 1"));
        }
        if self.steady.n_phi < 8 {
            return Err(Error::invalid("steady.n_phi", "must be >= 8"));
        }
        if self.spectrum.n_omega < 2 {
            return Err(Error::invalid("spectrum.n_omega", "must be >= 2"));
        }
        if self.wigner.n_grid < 2 {
            return Err(Error::invalid("wigner.n_grid", "must be >= 2"));
        }
        for (name, n) in [
            ("effective.n_delta", self.effective.n_delta),
            ("classical_diagram.n_f", self.classical_diagram.n_f),
            ("classical_diagram.n_delta", self.classical_diagram.n_delta),
            ("scan.n_f", self.scan.n_f),
            ("scan.n_delta", self.scan.n_delta),
        ] {
            if n == 0 {
                return Err(Error::invalid(name, "must be >= 1"));
            }
        }
        if self.scan.log_f && self.scan.f_min <= 0.0 {
            return Err(Error::invalid("scan.f_min", "must be > 0 for a log grid"));
        }
        Ok(())
    }

    pub fn system_params(&self) -> Result<SystemParams> {
        SystemParams::in_gamma1_units(self.params.gamma2, self.params.drive, self.params.detuning)
            .map_err(|e| match e {
                Error::InvalidInput { name, reason } => Error::InvalidInput {
                    name: format!("params.{name}"),
                    reason,
                },
                other => other,
            })
    }

    /// Fock space of the run; a displaced frame without an explicit center
    /// is anchored at the stable classical fixed point.
    pub fn fock_space(&self) -> Result<FockSpace> {
        let frame = match self.truncation.frame.as_str() {
            "lab" => Frame::Lab,
            "displaced" => {
                let center = match self.truncation.center {
                    Some([re, im]) => C64::new(re, im),
                    None => {
                        let p = self.system_params()?;
                        crate::effective::stable_fixed_point(&p)
                            .ok_or_else(|| {
                                Error::invalid(
                                    "truncation.center",
                                    "no stable classical fixed point to anchor the displaced frame; set truncation.center explicitly",
                                )
                            })?
                            .beta_ss
                    }
                };
                Frame::displaced(center)
            }
            _ => unreachable!("validated"),
        };
        FockSpace::new(self.truncation.n_max, frame)
    }

    /// Compact one-line JSON echo of the resolved configuration.
    pub fn echo_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_else(|_| "{}".into())
    }
}

/// Grid helpers shared by the scan commands.
pub fn lin_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    crate::util::linspace(a, b, n)
}

pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    crate::util::linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg =
            RunConfig::from_toml_str("[params]\ngamma2 = 0.1\ndrive = 4.0\ndetuning = 1.8\n")
                .unwrap();
        assert_eq!(cfg.truncation.n_max, 40);
        assert_eq!(cfg.truncation.frame, "lab");
        assert_eq!(cfg.spectrum.method, "resolvent");
        assert!(cfg.system_params().is_ok());
    }

    #[test]
    fn bad_values_name_the_offending_key() {
        let err =
            RunConfig::from_toml_str("[params]\ngamma2 = -0.1\ndrive = 4.0\ndetuning = 0.0\n")
                .unwrap_err();
        assert!(err.to_string().contains("gamma2"), "message: {err}");
        let err = RunConfig::from_toml_str(
            "[params]\ngamma2 = 0.1\ndrive = 1.0\ndetuning = 0.0\n[truncation]\nn_max = 1\nframe = \"lab\"\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("n_max"));
        let err = RunConfig::from_toml_str(
            "[params]\ngamma2 = 0.1\ndrive = 1.0\ndetuning = 0.0\n[spectrum]\nmethod = \"magic\"\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("spectrum.method"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = RunConfig::from_toml_str(
            "[params]\ngamma2 = 0.1\ndrive = 1.0\ndetuning = 0.0\nbogus = 1\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("bogus") || err.to_string().contains("unknown"));
    }

    #[test]
    fn displaced_frame_defaults_to_classical_fixed_point() {
        let cfg = RunConfig::from_toml_str(
            "[params]\ngamma2 = 0.1\ndrive = 4.0\ndetuning = 1.8\n[truncation]\nn_max = 20\nframe = \"displaced\"\n",
        )
        .unwrap();
        let space = cfg.fock_space().unwrap();
        let p = cfg.system_params().unwrap();
        let fp = crate::effective::stable_fixed_point(&p).unwrap();
        assert!((space.frame.center() - fp.beta_ss).norm() < 1e-12);
    }

    #[test]
    fn echo_roundtrips_through_json() {
        let cfg = RunConfig::from_toml_str(
            "[params]\ngamma2 = 0.2\ndrive = 2.0\ndetuning = -0.5\n[evolve]\nt_final = 2.0\n",
        )
        .unwrap();
        let echo = cfg.echo_json();
        let back: serde_json::Value = serde_json::from_str(&echo).unwrap();
        assert_eq!(back["params"]["gamma2"], 0.2);
        assert_eq!(back["evolve"]["t_final"], 2.0);
    }
}
