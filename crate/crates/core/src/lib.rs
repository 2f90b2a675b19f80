//! Simulation engine for a quantum Van der Pol oscillator synchronized to
//! an external drive: full Lindblad dynamics on a truncated Fock space,
//! steady states, Wigner and phase observables, emission spectra via the
//! quantum regression theorem, and the closed-form linearized model
//! (fixed points, squeezing rates, covariances, regime classification)
//! together with the classical bifurcation diagram.
//!
//! All rates are expressed in units of the one-quantum gain `gamma1`.
//!
//! Quick tour:
//!
//! ```
//! use qvdp::params::SystemParams;
//! use qvdp::hilbert::FockSpace;
//! use qvdp::lindblad::{Liouvillian, mean_occupation};
//!
//! let p = SystemParams::in_gamma1_units(0.1, 0.0, 0.0).unwrap();
//! let l = Liouvillian::full(p, FockSpace::lab(30).unwrap()).unwrap();
//! let ss = l.steady_state().unwrap();
//! // free limit cycle: <n> close to gamma1 / (2 gamma2)
//! assert!((mean_occupation(&ss) - 5.0).abs() < 1.5);
//! ```

extern crate openblas_src;

extern "C" {
    fn openblas_set_num_threads(num_threads: std::os::raw::c_int);
}

/// Force single-threaded BLAS. OpenBLAS's threaded factorizations place
/// large buffers on the calling thread's stack, which overflows the 2 MiB
/// stacks of test and worker threads; parallelism belongs to the task layer
/// (rayon) instead. Call once at process start (binaries and bindings do).
pub fn configure_blas() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    ONCE.call_once(|| unsafe { openblas_set_num_threads(1) });
}

pub mod classical;
pub mod cli;
pub mod config;
pub mod effective;
pub mod error;
pub mod hilbert;
pub mod lindblad;
pub mod observables;
pub mod ode;
pub mod params;
pub mod spectrum;
pub mod util;

pub use error::{Error, Result};
pub use params::SystemParams;
