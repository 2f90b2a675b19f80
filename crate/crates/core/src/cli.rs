//! Command implementations behind the `qvdp` binary: each builds the
//! requested quantities from a [`RunConfig`] and writes deterministic CSV
//! (17-significant-digit floats) and JSON files into an output directory.
//! Every file embeds the resolved configuration and the crate version.

use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::Serialize;
use serde_json::json;

use crate::classical::{scan_phase_diagram, ScanOptions};
use crate::config::{lin_grid, log_grid, RunConfig};
use crate::effective::classify_regime;
use crate::error::{Error, Result};
use crate::hilbert::coherent_vector;
use crate::lindblad::{cat_state, mean_amplitude, mean_occupation, DensityMatrix, Liouvillian};
use crate::observables::{negativity_volume, phase_distribution, wigner};
use crate::ode::OdeOptions;
use crate::params::SystemParams;
use crate::spectrum::{default_omega_grid, spectrum_full, SpectrumMethod};
use crate::util::linspace;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Full-precision float formatting (17 significant digits round-trips f64).
fn fm(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv(
    path: &Path,
    command: &str,
    cfg: &RunConfig,
    header: &str,
    rows: impl Iterator<Item = String>,
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# qvdp {VERSION} {command}\n"));
    out.push_str(&format!("# config: {}\n", cfg.echo_json()));
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

fn write_json(path: &Path, command: &str, cfg: &RunConfig, results: serde_json::Value) -> Result<()> {
    let doc = json!({
        "version": VERSION,
        "command": command,
        "config": serde_json::from_str::<serde_json::Value>(&cfg.echo_json()).unwrap_or_default(),
        "results": results,
    });
    let mut f = std::fs::File::create(path)?;
    f.write_all(serde_json::to_string_pretty(&doc).unwrap().as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

fn build_liouvillian(cfg: &RunConfig) -> Result<Liouvillian> {
    let p = cfg.system_params()?;
    let space = cfg.fock_space()?;
    Liouvillian::full_with_budget(p, space, cfg.resources.max_bytes)
}

fn complex_json(z: C64) -> serde_json::Value {
    json!({ "re": z.re, "im": z.im })
}

/// `steady`: steady state, basic expectation values and P(phi).
pub fn cmd_steady(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let l = build_liouvillian(cfg)?;
    let ss = l.steady_state()?;
    let occ = l.truncation_check(&ss)?;
    let pd = phase_distribution(&ss, cfg.steady.n_phi)?;
    let (peak_phi, peak_height) = pd.peak();
    let b = mean_amplitude(&ss);

    let csv_path = out.join("phase_distribution.csv");
    write_csv(
        &csv_path,
        "steady",
        cfg,
        "phi_rad,p_per_rad",
        pd.phis.iter().zip(&pd.values).map(|(&phi, &v)| format!("{},{}", fm(phi), fm(v))),
    )?;
    let json_path = out.join("steady_summary.json");
    write_json(
        &json_path,
        "steady",
        cfg,
        json!({
            "mean_amplitude": complex_json(b),
            "occupation": mean_occupation(&ss),
            "purity": ss.purity(),
            "top_two_population": occ.top_two_population,
            "truncation_flagged": occ.flagged,
            "phase_peak_position_rad": peak_phi,
            "phase_peak_height_per_rad": peak_height,
            "phase_min_per_rad": pd.min(),
        }),
    )?;
    Ok(vec![csv_path, json_path])
}

fn initial_state(cfg: &RunConfig, l: &Liouvillian) -> Result<DensityMatrix> {
    let center = cfg
        .evolve
        .initial_center
        .map(|[re, im]| C64::new(re, im))
        .unwrap_or_else(|| l.space.frame.center());
    match cfg.evolve.initial.as_str() {
        "vacuum" => Ok(DensityMatrix::vacuum(l.space)),
        "steady" => l.steady_state(),
        "coherent" => {
            let (v, tail) = coherent_vector(l.space, center - l.space.frame.center());
            if tail > crate::lindblad::TRUNCATION_FLAG_LEVEL {
                return Err(Error::Truncation(format!(
                    "evolve.initial_center: coherent state loses weight {tail:.3e}"
                )));
            }
            DensityMatrix::pure(l.space, &v)
        }
        "cat" => {
            let offset = C64::new(cfg.evolve.cat_offset[0], cfg.evolve.cat_offset[1]);
            cat_state(l.space, center, offset)
        }
        _ => unreachable!("validated"),
    }
}

/// `evolve`: time evolution of expectation values from a chosen initial
/// state.
pub fn cmd_evolve(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let l = build_liouvillian(cfg)?;
    let rho0 = initial_state(cfg, &l)?;
    let n = cfg.evolve.n_snapshots;
    let times: Vec<f64> = (1..=n)
        .map(|k| cfg.evolve.t_final * k as f64 / n as f64)
        .collect();
    let opts = OdeOptions { rtol: cfg.evolve.rtol, atol: cfg.evolve.atol, ..Default::default() };
    let snaps = l.evolve(&rho0, &times, &opts)?;

    let mut rows = Vec::with_capacity(n + 1);
    let mut emit = |t: f64, s: &DensityMatrix| {
        let b = mean_amplitude(s);
        rows.push(format!(
            "{},{},{},{},{},{},{}",
            fm(t),
            fm(b.re),
            fm(b.im),
            fm(mean_occupation(s)),
            fm(s.purity()),
            fm((s.trace().re - 1.0).abs()),
            fm(s.edge_population()),
        ));
    };
    emit(0.0, &rho0);
    for (k, s) in snaps.iter().enumerate() {
        emit(times[k], s);
    }
    let csv_path = out.join("evolve_series.csv");
    write_csv(
        &csv_path,
        "evolve",
        cfg,
        "t_gamma1,re_mean_b,im_mean_b,occupation,purity,trace_defect,edge_population",
        rows.into_iter(),
    )?;
    let json_path = out.join("evolve_summary.json");
    let last = snaps.last().unwrap_or(&rho0);
    write_json(
        &json_path,
        "evolve",
        cfg,
        json!({
            "t_final": cfg.evolve.t_final,
            "initial": cfg.evolve.initial,
            "final_mean_amplitude": complex_json(mean_amplitude(last)),
            "final_occupation": mean_occupation(last),
            "final_edge_population": last.edge_population(),
        }),
    )?;
    Ok(vec![csv_path, json_path])
}

/// `spectrum`: incoherent emission spectrum of the steady state.
pub fn cmd_spectrum(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let p = cfg.system_params()?;
    let l = build_liouvillian(cfg)?;
    let ss = l.steady_state()?;
    let omegas = if cfg.spectrum.omega_max > 0.0 {
        linspace(-cfg.spectrum.omega_max, cfg.spectrum.omega_max, cfg.spectrum.n_omega)
    } else {
        default_omega_grid(&p, cfg.spectrum.n_omega)
    };
    let method = match cfg.spectrum.method.as_str() {
        "eigen" => SpectrumMethod::Eigen,
        _ => SpectrumMethod::Resolvent,
    };
    let tr = spectrum_full(&l, &ss, &omegas, method)?;
    if !tr.failures.is_empty() {
        return Err(Error::SolverFailure(format!(
            "resolvent solve failed at {} grid points (first at omega = {})",
            tr.failures.len(),
            tr.omegas[tr.failures[0]]
        )));
    }
    let csv_path = out.join("spectrum.csv");
    write_csv(
        &csv_path,
        "spectrum",
        cfg,
        "omega_gamma1,s_incoherent",
        tr.omegas.iter().zip(&tr.values).map(|(&w, &s)| format!("{},{}", fm(w), fm(s))),
    )?;
    let json_path = out.join("spectrum_summary.json");
    write_json(
        &json_path,
        "spectrum",
        cfg,
        json!({
            "coherent_weight": tr.coherent_weight,
            "integral": tr.integral(),
            "occupation": mean_occupation(&ss),
            "peaks": tr.peak_positions(0.05),
            "method": cfg.spectrum.method,
        }),
    )?;
    Ok(vec![csv_path, json_path])
}

/// `wigner`: steady-state Wigner density on a square grid.
pub fn cmd_wigner(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let l = build_liouvillian(cfg)?;
    let ss = l.steady_state()?;
    let half = if cfg.wigner.half_width > 0.0 {
        cfg.wigner.half_width
    } else {
        mean_amplitude(&ss).norm() * 2f64.sqrt() + 5.0
    };
    let grid = linspace(-half, half, cfg.wigner.n_grid);
    let w = wigner(&ss, &grid, &grid)?;
    let csv_path = out.join("wigner.csv");
    let values = &w.values;
    let xs = w.xs.clone();
    let ps = w.ps.clone();
    write_csv(
        &csv_path,
        "wigner",
        cfg,
        "x_quadrature,p_quadrature,w",
        xs.iter().enumerate().flat_map(|(i, &x)| {
            let ps = &ps;
            let values = values.row(i).to_owned();
            ps.iter()
                .enumerate()
                .map(move |(j, &p)| format!("{},{},{}", fm(x), fm(p), fm(values[j])))
                .collect::<Vec<_>>()
        }),
    )?;
    let json_path = out.join("wigner_summary.json");
    write_json(
        &json_path,
        "wigner",
        cfg,
        json!({
            "mass": w.mass(),
            "min_w": w.min_value(),
            "negativity_volume": negativity_volume(&w),
            "half_width": half,
        }),
    )?;
    Ok(vec![csv_path, json_path])
}

#[derive(Serialize)]
struct EffectiveRow {
    detuning: f64,
    label: String,
    stable: bool,
    re_beta: f64,
    im_beta: f64,
    r_ss: f64,
    phi_ss: f64,
    gamma: f64,
    omega_eff: f64,
    gamma_up: f64,
    gamma_down: f64,
    gamma_deph: f64,
    n_eff: f64,
    n_bar: f64,
    quality: f64,
    cov_min: f64,
    cov_max: f64,
    asymmetry: f64,
    below_shot_noise: bool,
}

fn effective_row(p: &SystemParams) -> EffectiveRow {
    let s = classify_regime(p);
    let nan = f64::NAN;
    let (re_b, im_b, r_ss, phi_ss, stable) = match &s.fixed_point {
        Some(fp) => (fp.beta_ss.re, fp.beta_ss.im, fp.r_ss(), fp.phi_ss(), fp.stable),
        None => (nan, nan, nan, nan, false),
    };
    let (gamma, omega_eff, up, down, deph, n_eff, n_bar) = match &s.rates {
        Some(r) => (
            r.gamma,
            r.omega_eff.unwrap_or(nan),
            r.gamma_up.unwrap_or(nan),
            r.gamma_down.unwrap_or(nan),
            r.gamma_deph.unwrap_or(nan),
            r.n_eff.unwrap_or(nan),
            r.n_bar,
        ),
        None => (nan, nan, nan, nan, nan, nan, nan),
    };
    let (cov_min, cov_max, asym, below) = match &s.covariance {
        Some(c) => (c.eigenvalues[0], c.eigenvalues[1], c.asymmetry, c.below_shot_noise),
        None => (nan, nan, nan, false),
    };
    EffectiveRow {
        detuning: p.detuning,
        label: s.label.to_string(),
        stable,
        re_beta: re_b,
        im_beta: im_b,
        r_ss,
        phi_ss,
        gamma,
        omega_eff,
        gamma_up: up,
        gamma_down: down,
        gamma_deph: deph,
        n_eff,
        n_bar,
        quality: s.quality.unwrap_or(nan),
        cov_min,
        cov_max,
        asymmetry: asym,
        below_shot_noise: below,
    }
}

fn effective_csv_line(f_value: Option<f64>, r: &EffectiveRow) -> String {
    let mut cols = Vec::new();
    if let Some(f) = f_value {
        cols.push(fm(f));
    }
    cols.extend([
        fm(r.detuning),
        r.label.clone(),
        r.stable.to_string(),
        fm(r.re_beta),
        fm(r.im_beta),
        fm(r.r_ss),
        fm(r.phi_ss),
        fm(r.gamma),
        fm(r.omega_eff),
        fm(r.gamma_up),
        fm(r.gamma_down),
        fm(r.gamma_deph),
        fm(r.n_eff),
        fm(r.n_bar),
        fm(r.quality),
        fm(r.cov_min),
        fm(r.cov_max),
        fm(r.asymmetry),
        r.below_shot_noise.to_string(),
    ]);
    cols.join(",")
}

const EFFECTIVE_COLS: &str = "detuning_gamma1,label,stable,re_beta_ss,im_beta_ss,r_ss,phi_ss_rad,gamma,omega_eff,gamma_up,gamma_down,gamma_deph,n_eff,n_bar,quality,cov_min,cov_max,asymmetry,below_shot_noise";

/// `effective`: closed-form model over a detuning sweep (single point when
/// the sweep block is left at its default).
pub fn cmd_effective(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let base = cfg.system_params()?;
    let deltas: Vec<f64> = if cfg.effective.n_delta == 1
        && cfg.effective.delta_min == 0.0
        && cfg.effective.delta_max == 0.0
    {
        vec![base.detuning]
    } else {
        lin_grid(cfg.effective.delta_min, cfg.effective.delta_max, cfg.effective.n_delta)
    };
    let rows: Vec<EffectiveRow> = deltas
        .iter()
        .map(|&d| effective_row(&SystemParams { detuning: d, ..base }))
        .collect();
    let csv_path = out.join("effective.csv");
    write_csv(
        &csv_path,
        "effective",
        cfg,
        EFFECTIVE_COLS,
        rows.iter().map(|r| effective_csv_line(None, r)),
    )?;
    let json_path = out.join("effective.json");
    write_json(
        &json_path,
        "effective",
        cfg,
        serde_json::to_value(&rows).unwrap_or_default(),
    )?;
    Ok(vec![csv_path, json_path])
}

/// `classical-diagram`: attractor classification over an (F, Delta) grid.
pub fn cmd_classical_diagram(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let base = cfg.system_params()?;
    let b = &cfg.classical_diagram;
    let drives = lin_grid(b.f_min, b.f_max, b.n_f);
    let deltas = lin_grid(b.delta_min, b.delta_max, b.n_delta);
    let cells = scan_phase_diagram(&base, &drives, &deltas, &ScanOptions::default())?;
    let csv_path = out.join("classical_diagram.csv");
    write_csv(
        &csv_path,
        "classical-diagram",
        cfg,
        "drive_gamma1,detuning_gamma1,label,winding",
        cells
            .iter()
            .map(|c| format!("{},{},{},{}", fm(c.drive), fm(c.detuning), c.label, c.winding)),
    )?;
    Ok(vec![csv_path])
}

/// `scan`: effective-model quantities over an (F, Delta) grid.
pub fn cmd_scan(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    use rayon::prelude::*;
    let base = cfg.system_params()?;
    let b = &cfg.scan;
    let drives = if b.log_f {
        log_grid(b.f_min, b.f_max, b.n_f)
    } else {
        lin_grid(b.f_min, b.f_max, b.n_f)
    };
    let deltas = lin_grid(b.delta_min, b.delta_max, b.n_delta);
    let grid: Vec<(f64, f64)> = drives
        .iter()
        .flat_map(|&f| deltas.iter().map(move |&d| (f, d)))
        .collect();
    let rows: Vec<(f64, EffectiveRow)> = grid
        .par_iter()
        .map(|&(f, d)| (f, effective_row(&SystemParams { drive: f, detuning: d, ..base })))
        .collect();
    let csv_path = out.join("scan.csv");
    write_csv(
        &csv_path,
        "scan",
        cfg,
        &format!("drive_gamma1,{EFFECTIVE_COLS}"),
        rows.iter().map(|(f, r)| effective_csv_line(Some(*f), r)),
    )?;
    Ok(vec![csv_path])
}

/// Dispatch by subcommand name (the binary's entry point).
pub fn run_command(name: &str, cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out)?;
    match name {
        "steady" => cmd_steady(cfg, out),
        "evolve" => cmd_evolve(cfg, out),
        "spectrum" => cmd_spectrum(cfg, out),
        "wigner" => cmd_wigner(cfg, out),
        "effective" => cmd_effective(cfg, out),
        "classical-diagram" => cmd_classical_diagram(cfg, out),
        "scan" => cmd_scan(cfg, out),
        other => Err(Error::invalid("command", format!("unknown command {other}"))),
    }
}

/// Process exit code for an error, as documented in the README:
/// 2 config, 3 resources, 4 solver/numerics.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidInput { .. } | Error::DimensionMismatch(_) | Error::Io(_) => 2,
        Error::ResourceLimit(_) => 3,
        _ => 4,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> RunConfig {
        RunConfig::from_toml_str(text).unwrap()
    }

    fn tmpdir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("qvdp-cli-test-{tag}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn steady_outputs_are_deterministic() {
        let c = cfg("[params]\ngamma2 = 0.1\ndrive = 0.0\ndetuning = 0.0\n[truncation]\nn_max = 20\nframe = \"lab\"\n[steady]\nn_phi = 64\n");
        let d1 = tmpdir("steady1");
        let d2 = tmpdir("steady2");
        cmd_steady(&c, &d1).unwrap();
        cmd_steady(&c, &d2).unwrap();
        for name in ["phase_distribution.csv", "steady_summary.json"] {
            let a = std::fs::read(d1.join(name)).unwrap();
            let b = std::fs::read(d2.join(name)).unwrap();
            assert_eq!(a, b, "{name} not byte-identical");
        }
        let text = std::fs::read_to_string(d1.join("phase_distribution.csv")).unwrap();
        assert!(text.starts_with("# qvdp"));
        assert!(text.contains("# config:"));
        assert!(text.lines().nth(2).unwrap().starts_with("phi_rad,"));
    }

    #[test]
    fn effective_sweep_columns_and_labels() {
        let c = cfg("[params]\ngamma2 = 0.1\ndrive = 1.0\ndetuning = 0.0\n[effective]\ndelta_min = 0.0\ndelta_max = 1.0\nn_delta = 5\n");
        let d = tmpdir("eff");
        cmd_effective(&c, &d).unwrap();
        let text = std::fs::read_to_string(d.join("effective.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3 + 5);
        assert!(lines[3].contains("sync") || lines[3].contains("overdamped"));
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(d.join("effective.json")).unwrap())
                .unwrap();
        assert_eq!(json["results"].as_array().unwrap().len(), 5);
        assert_eq!(json["config"]["params"]["gamma2"], 0.1);
    }

    #[test]
    fn spectrum_command_writes_grid() {
        let c = cfg("[params]\ngamma2 = 0.2\ndrive = 1.0\ndetuning = 0.5\n[truncation]\nn_max = 8\nframe = \"lab\"\n[spectrum]\nn_omega = 33\nomega_max = 6.0\nmethod = \"resolvent\"\n");
        let d = tmpdir("spec");
        cmd_spectrum(&c, &d).unwrap();
        let text = std::fs::read_to_string(d.join("spectrum.csv")).unwrap();
        assert_eq!(text.lines().count(), 3 + 33);
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(d.join("spectrum_summary.json")).unwrap())
                .unwrap();
        assert!(json["results"]["coherent_weight"].as_f64().unwrap() >= 0.0);
    }

    #[test]
    fn evolve_command_runs_cat_state() {
        let c = cfg("[params]\ngamma2 = 0.1\ndrive = 4.0\ndetuning = 1.8\n[truncation]\nn_max = 24\nframe = \"displaced\"\n[evolve]\nt_final = 0.5\nn_snapshots = 5\ninitial = \"cat\"\ncat_offset = [1.0, 0.0]\n");
        let d = tmpdir("evolve");
        cmd_evolve(&c, &d).unwrap();
        let text = std::fs::read_to_string(d.join("evolve_series.csv")).unwrap();
        assert_eq!(text.lines().count(), 3 + 6); // t = 0 plus 5 snapshots
    }

    #[test]
    fn exit_codes_map_error_classes() {
        assert_eq!(exit_code(&Error::invalid("x", "y")), 2);
        assert_eq!(exit_code(&Error::ResourceLimit("m".into())), 3);
        assert_eq!(exit_code(&Error::SolverFailure("s".into())), 4);
    }
}
