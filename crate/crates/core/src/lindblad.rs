//! Liouvillian construction and density-matrix propagation for the driven
//! Van der Pol oscillator,
//!
//!   d rho/dt = -i [ -Delta b^dag b + i F (b - b^dag), rho ]
//!              + gamma1 D[b^dag] rho + gamma2 D[b^2] rho ,
//!
//! with D[O] rho = O rho O^dag - {O^dag O, rho}/2. The superoperator acts on
//! column-stacked density matrices: vec(A X B) = (B^T kron A) vec(X).
//!
//! In a displaced frame the Hamiltonian and both jump operators are built
//! verbatim from the shifted matrix b = beta I + a; no cross terms are
//! derived by hand.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Eigh, Norm, Solve, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{annihilation, coherent_vector, displacement_matrix, FockSpace, Frame, Operator};
use crate::ode::{solve_at, OdeOptions};
use crate::params::SystemParams;
use crate::util::{hermiticity_defect, hermitize, kron, trace, unvec, vec_mat};

/// Tolerances of the density-matrix invariants.
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-8;
pub const EIGENVALUE_TOL: f64 = 1e-8;

/// Default cap on the dense superoperator (all solver copies included).
pub const DEFAULT_MEMORY_BUDGET: usize = 6 * 1024 * 1024 * 1024;

/// Population threshold of the top two Fock levels above which a truncation
/// is considered insufficient.
pub const TRUNCATION_FLAG_LEVEL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub space: FockSpace,
    pub rho: Array2<C64>,
}

impl DensityMatrix {
    /// Wrap a matrix after checking the Hermiticity/trace/positivity
    /// invariants.
    pub fn new(space: FockSpace, rho: Array2<C64>) -> Result<Self> {
        let dm = Self { space, rho };
        dm.check_invariants()?;
        Ok(dm)
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn check_invariants(&self) -> Result<()> {
        let d = self.space.dim();
        if self.rho.dim() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "density matrix {:?} does not match space dimension {d}",
                self.rho.dim()
            )));
        }
        let herm = hermiticity_defect(&self.rho);
        if herm > HERMITICITY_TOL {
            return Err(Error::invalid("rho", format!("hermiticity defect {herm:.3e}")));
        }
        let tr = trace(&self.rho);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::invalid("rho", format!("trace {tr} != 1")));
        }
        let (eigs, _) = hermitize(&self.rho).eigh(UPLO::Upper)?;
        let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -EIGENVALUE_TOL {
            return Err(Error::invalid("rho", format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// Pure state |psi><psi| (psi is normalized first).
    pub fn pure(space: FockSpace, psi: &Array1<C64>) -> Result<Self> {
        if psi.len() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state vector length {} vs dimension {}",
                psi.len(),
                space.dim()
            )));
        }
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::invalid("psi", "zero vector"));
        }
        let v = psi.mapv(|z| z / norm);
        let mut rho = Array2::<C64>::zeros((space.dim(), space.dim()));
        for i in 0..space.dim() {
            for j in 0..space.dim() {
                rho[[i, j]] = v[i] * v[j].conj();
            }
        }
        Ok(Self { space, rho })
    }

    pub fn vacuum(space: FockSpace) -> Self {
        let mut rho = Array2::<C64>::zeros((space.dim(), space.dim()));
        rho[[0, 0]] = C64::new(1.0, 0.0);
        Self { space, rho }
    }

    pub fn fock(space: FockSpace, n: usize) -> Result<Self> {
        if n >= space.dim() {
            return Err(Error::invalid("n", format!("Fock level {n} outside dimension {}", space.dim())));
        }
        let mut rho = Array2::<C64>::zeros((space.dim(), space.dim()));
        rho[[n, n]] = C64::new(1.0, 0.0);
        Ok(Self { space, rho })
    }

    pub fn trace(&self) -> C64 {
        trace(&self.rho)
    }

    pub fn purity(&self) -> f64 {
        let sq = self.rho.dot(&self.rho);
        trace(&sq).re
    }

    /// Populations of the two highest Fock levels (truncation diagnostic).
    pub fn edge_population(&self) -> f64 {
        let d = self.dim();
        self.rho[[d - 1, d - 1]].re + self.rho[[d - 2, d - 2]].re
    }

    /// Re-express a displaced-frame state in the lab frame with `n_max_lab`
    /// levels (identity for lab-frame states of matching size). The result
    /// is renormalized; the trace lost to truncation is returned alongside.
    pub fn to_lab(&self, n_max_lab: usize) -> Result<(DensityMatrix, f64)> {
        let lab = FockSpace::lab(n_max_lab)?;
        let beta = self.space.frame.center();
        let t = displacement_matrix(beta, lab.dim(), self.dim());
        let rho_lab = t.dot(&self.rho).dot(&t.t().mapv(|z| z.conj()));
        let tr = trace(&rho_lab).re;
        if tr < 1.0 - 1e-3 {
            return Err(Error::Truncation(format!(
                "lab frame with n_max = {n_max_lab} captures only trace {tr:.6}"
            )));
        }
        let rho_lab = rho_lab.mapv(|z| z / tr);
        Ok((DensityMatrix { space: lab, rho: rho_lab }, 1.0 - tr))
    }
}

/// Even superposition of coherent states at physical amplitudes
/// center + offset and center - offset, as a pure density matrix.
/// Fails when the space cannot hold either lobe.
pub fn cat_state(space: FockSpace, center: C64, offset: C64) -> Result<DensityMatrix> {
    let shift = space.frame.center();
    let (v_plus, tail_p) = coherent_vector(space, center + offset - shift);
    let (v_minus, tail_m) = coherent_vector(space, center - offset - shift);
    let max_tail = tail_p.max(tail_m);
    if max_tail > TRUNCATION_FLAG_LEVEL {
        return Err(Error::Truncation(format!(
            "coherent lobe loses weight {max_tail:.3e} at n_max = {}",
            space.n_max
        )));
    }
    let psi = &v_plus + &v_minus;
    DensityMatrix::pure(space, &psi)
}

/// Occupancy report of [`truncation_check`].
#[derive(Debug, Clone, Copy)]
pub struct OccupancyReport {
    pub top_two_population: f64,
    pub flagged: bool,
}

/// Dense Liouvillian on the vectorized density matrix.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub space: FockSpace,
    pub params: SystemParams,
    pub mat: Array2<C64>,
    sparse: SparseMap,
}

/// CSR map of the (very sparse) superoperator, used for time stepping.
#[derive(Debug, Clone)]
struct SparseMap {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseMap {
    fn from_dense(m: &Array2<C64>) -> Self {
        let n = m.nrows();
        let mut row_start = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        for i in 0..n {
            for j in 0..n {
                let v = m[[i, j]];
                if v != C64::new(0.0, 0.0) {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_start.push(cols.len());
        }
        Self { row_start, cols, vals }
    }

    fn matvec(&self, x: &Array1<C64>) -> Array1<C64> {
        let n = self.row_start.len() - 1;
        let mut y = Array1::<C64>::zeros(n);
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_start[i]..self.row_start[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[i] = acc;
        }
        y
    }
}

/// Superoperator of a single dissipator D[o].
fn dissipator_superop(o: &Array2<C64>) -> Array2<C64> {
    let d = o.nrows();
    let odag = o.t().mapv(|z| z.conj());
    let odag_o = odag.dot(o);
    let eye = Array2::<C64>::eye(d);
    let half = C64::new(0.5, 0.0);
    let mut s = kron(&o.mapv(|z| z.conj()), o);
    s = s - kron(&eye, &odag_o) * half;
    s = s - kron(&odag_o.t().to_owned(), &eye) * half;
    s
}

/// Superoperator of -i [h, .].
fn hamiltonian_superop(h: &Array2<C64>) -> Array2<C64> {
    let d = h.nrows();
    let eye = Array2::<C64>::eye(d);
    let comm = kron(&eye, h) - kron(&h.t().to_owned(), &eye);
    comm.mapv(|z| C64::new(0.0, -1.0) * z)
}

fn check_budget(dim: usize, budget: usize) -> Result<()> {
    // dense matrix + LU copy + factorization workspace
    let bytes = 3usize
        .saturating_mul(dim * dim)
        .saturating_mul(dim * dim)
        .saturating_mul(16);
    if bytes > budget {
        return Err(Error::ResourceLimit(format!(
            "superoperator for dimension {dim} needs ~{:.1} GiB (budget {:.1} GiB); lower n_max or raise the budget",
            bytes as f64 / f64::powi(1024.0, 3),
            budget as f64 / f64::powi(1024.0, 3)
        )));
    }
    Ok(())
}

impl Liouvillian {
    /// Liouvillian of the full model in the frame carried by `space`.
    pub fn full(params: SystemParams, space: FockSpace) -> Result<Self> {
        Self::full_with_budget(params, space, DEFAULT_MEMORY_BUDGET)
    }

    pub fn full_with_budget(params: SystemParams, space: FockSpace, budget: usize) -> Result<Self> {
        check_budget(space.dim(), budget)?;
        let b = annihilation(space);
        let bdag = b.adjoint();
        let n_op = bdag.matmul(&b)?.mat;
        let b2 = b.matmul(&b)?.mat;
        // H = -Delta b^dag b + i F (b - b^dag)
        let drive_term = (&b.mat - &bdag.mat).mapv(|z| C64::new(0.0, params.drive) * z);
        let h = n_op.mapv(|z| -params.detuning * z) + drive_term;
        let mut l = hamiltonian_superop(&h);
        l = l + dissipator_superop(&bdag.mat) * C64::new(params.gamma1, 0.0);
        l = l + dissipator_superop(&b2) * C64::new(params.gamma2, 0.0);
        let sparse = SparseMap::from_dense(&l);
        Ok(Self { space, params, mat: l, sparse })
    }

    /// Liouvillian of the model linearized around a classical amplitude
    /// beta: squeezing Hamiltonian plus gain gamma1 D[a^dag] and loss
    /// 4 gamma2 |beta|^2 D[a] for the fluctuation mode. The space frame is
    /// Displaced(beta) so that physical operators read b = beta + a.
    pub fn linearized(params: SystemParams, beta: C64, n_max: usize) -> Result<Self> {
        Self::linearized_with_budget(params, beta, n_max, DEFAULT_MEMORY_BUDGET)
    }

    pub fn linearized_with_budget(
        params: SystemParams,
        beta: C64,
        n_max: usize,
        budget: usize,
    ) -> Result<Self> {
        let space = FockSpace::displaced(n_max, beta)?;
        check_budget(space.dim(), budget)?;
        let a = annihilation(FockSpace::lab(n_max)?); // fluctuation ladder
        let adag = a.adjoint();
        let n_op = adag.matmul(&a)?.mat;
        let a2 = a.matmul(&a)?.mat;
        let adag2 = adag.matmul(&adag)?.mat;
        let b_sq = beta * beta;
        // H_eff = -Delta a^dag a - i gamma2/2 (beta^2 a^dag^2 - conj(beta)^2 a^2)
        let h = n_op.mapv(|z| -params.detuning * z)
            + adag2.mapv(|z| C64::new(0.0, -0.5 * params.gamma2) * b_sq * z)
            + a2.mapv(|z| C64::new(0.0, 0.5 * params.gamma2) * b_sq.conj() * z);
        let mut l = hamiltonian_superop(&h);
        l = l + dissipator_superop(&adag.mat) * C64::new(params.gamma1, 0.0);
        l = l + dissipator_superop(&a.mat) * C64::new(4.0 * params.gamma2 * beta.norm_sqr(), 0.0);
        let sparse = SparseMap::from_dense(&l);
        Ok(Self { space, params, mat: l, sparse })
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Relative residual of the trace-preservation identity: vec(I)^dag L
    /// must vanish.
    pub fn trace_preservation_residual(&self) -> f64 {
        let d = self.dim();
        let n2 = d * d;
        let mut row = Array1::<C64>::zeros(n2);
        for col in 0..n2 {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..d {
                acc += self.mat[[k * d + k, col]];
            }
            row[col] = acc;
        }
        let lnorm = self.mat.norm_l2();
        if lnorm == 0.0 {
            return 0.0;
        }
        row.norm_l2() / lnorm
    }

    /// Action of the Liouvillian on a density matrix (sparse matvec).
    pub fn apply(&self, rho: &Array2<C64>) -> Array2<C64> {
        let v = vec_mat(rho);
        let w = self.sparse.matvec(&v);
        unvec(&w.view(), self.dim())
    }

    pub fn apply_vec(&self, v: &Array1<C64>) -> Array1<C64> {
        self.sparse.matvec(v)
    }

    /// Steady state by replacing one row of L with the trace constraint and
    /// solving the dense linear system (one step of iterative refinement,
    /// then Hermitization and trace normalization). The result is verified
    /// against ||L vec(rho)|| <= 1e-10 ||L||_F.
    pub fn steady_state(&self) -> Result<DensityMatrix> {
        let d = self.dim();
        let n2 = d * d;
        let mut m = self.mat.clone();
        for col in 0..n2 {
            m[[0, col]] = C64::new(0.0, 0.0);
        }
        for k in 0..d {
            m[[0, k * d + k]] = C64::new(1.0, 0.0);
        }
        let mut rhs = Array1::<C64>::zeros(n2);
        rhs[0] = C64::new(1.0, 0.0);
        let mut x = m
            .solve(&rhs)
            .map_err(|e| Error::SolverFailure(format!("steady-state LU solve failed: {e}")))?;
        // one refinement pass tightens ill-conditioned cases (slow phase
        // modes near F = 0)
        let resid = &rhs - &m.dot(&x);
        if let Ok(dx) = m.solve(&resid) {
            x = &x + &dx;
        }
        let rho_raw = unvec(&x.view(), d);
        let tr = trace(&rho_raw);
        if tr.norm() < 1e-12 {
            return Err(Error::SolverFailure("steady-state candidate has zero trace".into()));
        }
        let rho = hermitize(&rho_raw).mapv(|z| z / tr);
        let res = self.apply(&rho).norm_l2() / self.mat.norm_l2().max(f64::MIN_POSITIVE);
        if res > 1e-10 {
            return Err(Error::SolverFailure(format!(
                "steady-state residual {res:.3e} exceeds 1e-10 (possible degenerate null space)"
            )));
        }
        DensityMatrix::new(self.space, rho)
    }

    /// Steady state from the eigendecomposition of L (null-space route).
    /// Reports a degenerate null space when more than one eigenvalue lies
    /// within `null_tol * scale` of zero. Cross-check for moderate sizes.
    pub fn steady_state_eig(&self, null_tol: f64) -> Result<DensityMatrix> {
        let (eigs, vecs) = self.mat.eig()?;
        let scale = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut null_idx: Vec<usize> = (0..eigs.len())
            .filter(|&k| eigs[k].norm() <= null_tol * scale)
            .collect();
        if null_idx.is_empty() {
            let closest = (0..eigs.len())
                .min_by(|&a, &b| eigs[a].norm().partial_cmp(&eigs[b].norm()).unwrap())
                .unwrap();
            null_idx.push(closest);
        }
        if null_idx.len() > 1 {
            return Err(Error::DegenerateSteadyState { dim: null_idx.len(), tol: null_tol });
        }
        let v = vecs.column(null_idx[0]).to_owned();
        let rho_raw = unvec(&v.view(), self.dim());
        let tr = trace(&rho_raw);
        if tr.norm() < 1e-14 {
            return Err(Error::SolverFailure("null vector has zero trace".into()));
        }
        let rho = hermitize(&rho_raw).mapv(|z| z / tr);
        DensityMatrix::new(self.space, rho)
    }

    /// Propagate `rho0` and return a snapshot at each time in `times`
    /// (nonnegative, strictly increasing, measured from t = 0). Snapshots
    /// are checked against the density-matrix invariants with a trace-drift
    /// allowance of 1e-8 per unit gamma1 t; no renormalization is applied.
    pub fn evolve(
        &self,
        rho0: &DensityMatrix,
        times: &[f64],
        opts: &OdeOptions,
    ) -> Result<Vec<DensityMatrix>> {
        if rho0.space != self.space {
            return Err(Error::DimensionMismatch(
                "initial state lives in a different space than the Liouvillian".into(),
            ));
        }
        let y0 = vec_mat(&rho0.rho);
        let f = |_t: f64, y: &Array1<C64>| self.sparse.matvec(y);
        let raw = solve_at(&f, &y0, times, opts)?;
        let mut out = Vec::with_capacity(raw.len());
        for (k, v) in raw.into_iter().enumerate() {
            let rho = unvec(&v.view(), self.dim());
            let t = times[k] * self.params.gamma1;
            let tr = trace(&rho);
            let drift_tol = TRACE_TOL * (1.0 + t);
            if (tr.re - 1.0).abs() > drift_tol || tr.im.abs() > drift_tol {
                return Err(Error::Integration(format!(
                    "trace drifted to {tr} at gamma1 t = {t:.3} (tolerance {drift_tol:.3e})"
                )));
            }
            let herm = hermiticity_defect(&rho);
            if herm > HERMITICITY_TOL * (1.0 + t) {
                return Err(Error::Integration(format!(
                    "hermiticity defect {herm:.3e} at gamma1 t = {t:.3}"
                )));
            }
            out.push(DensityMatrix { space: self.space, rho });
        }
        Ok(out)
    }

    /// Populations of the top two Fock levels of `rho`, flagged when they
    /// exceed [`TRUNCATION_FLAG_LEVEL`].
    pub fn truncation_check(&self, rho: &DensityMatrix) -> Result<OccupancyReport> {
        if rho.space != self.space {
            return Err(Error::DimensionMismatch(
                "state and Liouvillian spaces differ".into(),
            ));
        }
        let pop = rho.edge_population();
        Ok(OccupancyReport {
            top_two_population: pop,
            flagged: pop > TRUNCATION_FLAG_LEVEL,
        })
    }

    /// Expectation value of an operator in a state (same space).
    pub fn expectation(op: &Operator, rho: &DensityMatrix) -> Result<C64> {
        if op.dim() != rho.dim() {
            return Err(Error::DimensionMismatch("operator vs state".into()));
        }
        Ok(trace(&op.mat.dot(&rho.rho)))
    }
}

/// Physical amplitude <b> of a state, including the frame center.
pub fn mean_amplitude(rho: &DensityMatrix) -> C64 {
    let b = annihilation(rho.space);
    trace(&b.mat.dot(&rho.rho))
}

/// Physical occupation <b^dag b>.
pub fn mean_occupation(rho: &DensityMatrix) -> f64 {
    let b = annihilation(rho.space);
    let bdag_b = b.adjoint().matmul(&b).expect("same space");
    trace(&bdag_b.mat.dot(&rho.rho)).re
}

/// Lab-frame representation helper: promote any state to the lab frame with
/// an automatically chosen dimension (enough to hold the displaced support).
pub fn auto_lab_frame(rho: &DensityMatrix) -> Result<(DensityMatrix, f64)> {
    match rho.space.frame {
        Frame::Lab => Ok((rho.clone(), 0.0)),
        Frame::Displaced { re, im } => {
            let beta = C64::new(re, im);
            let spread = (rho.space.n_max as f64).sqrt();
            let amp = beta.norm() + spread + 4.0;
            let n_max = (amp * amp).ceil() as usize + 8;
            rho.to_lab(n_max)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn params(g2: f64, f: f64, d: f64) -> SystemParams {
        SystemParams::in_gamma1_units(g2, f, d).unwrap()
    }

    fn random_density(dim: usize, rng: &mut StdRng) -> Array2<C64> {
        let g = Array2::from_shape_fn((dim, dim), |_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let rho = g.dot(&g.t().mapv(|z| z.conj()));
        let tr = trace(&rho);
        rho.mapv(|z| z / tr)
    }

    #[test]
    fn trace_preservation_of_random_liouvillians() {
        let mut rng = StdRng::seed_from_u64(3);
        for &(g2, f, d) in &[(0.1, 0.0, 0.0), (0.1, 4.0, 1.8), (0.5, 1.0, -0.7)] {
            let l = Liouvillian::full(params(g2, f, d), FockSpace::lab(7).unwrap()).unwrap();
            assert!(l.trace_preservation_residual() < 1e-12);
            // Tr[d rho/dt] = 0 for random Hermitian rho
            let rho = random_density(8, &mut rng);
            let drho = l.apply(&rho);
            assert!(trace(&drho).norm() < 1e-12);
        }
    }

    #[test]
    fn liouvillian_matches_direct_master_equation_action() {
        // Kronecker assembly against the operator-level right-hand side
        let p = params(0.3, 1.2, -0.8);
        let space = FockSpace::lab(5).unwrap();
        let l = Liouvillian::full(p, space).unwrap();
        let mut rng = StdRng::seed_from_u64(5);
        let rho = random_density(6, &mut rng);
        let lhs = l.apply(&rho);

        let b = annihilation(space).mat;
        let bdag = b.t().mapv(|z| z.conj());
        let n_op = bdag.dot(&b);
        let b2 = b.dot(&b);
        let h = n_op.mapv(|z| -p.detuning * z)
            + (&b - &bdag).mapv(|z| C64::new(0.0, p.drive) * z);
        let comm = h.dot(&rho) - rho.dot(&h);
        let diss = |o: &Array2<C64>, r: &Array2<C64>| {
            let odag = o.t().mapv(|z| z.conj());
            let oo = odag.dot(o);
            o.dot(r).dot(&odag) - (oo.dot(r) + r.dot(&oo)) * C64::new(0.5, 0.0)
        };
        let rhs = comm.mapv(|z| C64::new(0.0, -1.0) * z)
            + diss(&bdag, &rho) * C64::new(p.gamma1, 0.0)
            + diss(&b2, &rho) * C64::new(p.gamma2, 0.0);
        for i in 0..6 {
            for j in 0..6 {
                assert!((lhs[[i, j]] - rhs[[i, j]]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn free_limit_cycle_steady_state() {
        // gamma2/gamma1 = 0.1, no drive: <n> ~ gamma1/(2 gamma2) + corrections,
        // rotationally symmetric state
        let p = params(0.1, 0.0, 0.0);
        let l = Liouvillian::full(p, FockSpace::lab(40).unwrap()).unwrap();
        let ss = l.steady_state().unwrap();
        assert!(mean_amplitude(&ss).norm() <= 1e-8);
        let n = mean_occupation(&ss);
        let classical = 5.0;
        assert!((n - classical).abs() < 0.25 * classical, "<n> = {n}");
        assert!(!l.truncation_check(&ss).unwrap().flagged);
    }

    #[test]
    fn truncation_check_flags_tiny_space() {
        let p = params(0.1, 0.0, 0.0);
        let l = Liouvillian::full(p, FockSpace::lab(5).unwrap()).unwrap();
        let ss = l.steady_state().unwrap();
        assert!(l.truncation_check(&ss).unwrap().flagged);
    }

    #[test]
    fn steady_state_lu_and_eig_routes_agree() {
        let p = params(0.1, 4.0, 1.8);
        let l = Liouvillian::full(p, FockSpace::lab(12).unwrap()).unwrap();
        let a = l.steady_state().unwrap();
        let b = l.steady_state_eig(1e-9).unwrap();
        let diff = (&a.rho - &b.rho).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-9, "routes differ by {diff}");
    }

    #[test]
    fn evolve_fixed_point_stays_fixed() {
        let p = params(0.2, 1.0, 0.4);
        let l = Liouvillian::full(p, FockSpace::lab(10).unwrap()).unwrap();
        let ss = l.steady_state().unwrap();
        let snaps = l.evolve(&ss, &[0.5, 1.5], &OdeOptions::default()).unwrap();
        for s in snaps {
            let diff = (&s.rho - &ss.rho).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(diff < 1e-8, "fixed point drifted by {diff}");
        }
    }

    #[test]
    fn evolve_matches_independent_fixed_step_integrator() {
        // independent oracle: classic RK4 with a fixed step, acting on the
        // density matrix through the operator-level master equation
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..4 {
            let p = params(
                10f64.powf(rng.gen_range(-1.5..0.0)),
                rng.gen_range(0.0..2.0),
                rng.gen_range(-1.5..1.5),
            );
            let dim = 7;
            let space = FockSpace::lab(dim - 1).unwrap();
            let l = Liouvillian::full(p, space).unwrap();
            let rho0 = {
                let (v, _) = coherent_vector(space, c(0.6, -0.3));
                DensityMatrix::pure(space, &v).unwrap()
            };
            let fine = l
                .evolve(&rho0, &[1.0], &OdeOptions { rtol: 1e-11, atol: 1e-13, ..Default::default() })
                .unwrap();

            let b = annihilation(space).mat;
            let bdag = b.t().mapv(|z| z.conj());
            let b2 = b.dot(&b);
            let h = bdag.dot(&b).mapv(|z| -p.detuning * z)
                + (&b - &bdag).mapv(|z| C64::new(0.0, p.drive) * z);
            let rhs = |r: &Array2<C64>| {
                let diss = |o: &Array2<C64>, r: &Array2<C64>| {
                    let odag = o.t().mapv(|z| z.conj());
                    let oo = odag.dot(o);
                    o.dot(r).dot(&odag) - (oo.dot(r) + r.dot(&oo)) * C64::new(0.5, 0.0)
                };
                (h.dot(r) - r.dot(&h)).mapv(|z| C64::new(0.0, -1.0) * z)
                    + diss(&bdag, r) * C64::new(p.gamma1, 0.0)
                    + diss(&b2, r) * C64::new(p.gamma2, 0.0)
            };
            let steps = 4000usize;
            let dt = 1.0 / steps as f64;
            let mut r = rho0.rho.clone();
            for _ in 0..steps {
                let k1 = rhs(&r);
                let k2 = rhs(&(&r + &(&k1 * C64::new(0.5 * dt, 0.0))));
                let k3 = rhs(&(&r + &(&k2 * C64::new(0.5 * dt, 0.0))));
                let k4 = rhs(&(&r + &(&k3 * C64::new(dt, 0.0))));
                r = &r + &((&k1 + &(&k2 * C64::new(2.0, 0.0)) + &(&k3 * C64::new(2.0, 0.0)) + &k4) * C64::new(dt / 6.0, 0.0));
            }
            let diff = (&fine[0].rho - &r).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(diff < 1e-6, "adaptive vs fixed-step differ by {diff}");
        }
    }

    #[test]
    fn gain_only_relaxation_monotone() {
        // vacuum under gain + two-quantum loss approaches the limit-cycle
        // occupation monotonically
        let p = params(0.25, 0.0, 0.0);
        let l = Liouvillian::full(p, FockSpace::lab(18).unwrap()).unwrap();
        let rho0 = DensityMatrix::vacuum(l.space);
        let times: Vec<f64> = (1..=20).map(|k| k as f64).collect();
        let snaps = l.evolve(&rho0, &times, &OdeOptions::default()).unwrap();
        let ns: Vec<f64> = snaps.iter().map(mean_occupation).collect();
        for w in ns.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "occupation not monotone: {ns:?}");
        }
        let ss = l.steady_state().unwrap();
        assert!((ns.last().unwrap() - mean_occupation(&ss)).abs() < 5e-3);
    }

    #[test]
    fn hermiticity_preserved_under_evolution() {
        let p = params(0.1, 2.0, 0.7);
        let l = Liouvillian::full(p, FockSpace::lab(9).unwrap()).unwrap();
        let mut rng = StdRng::seed_from_u64(23);
        let rho0 = DensityMatrix::new(l.space, random_density(10, &mut rng)).unwrap();
        let snaps = l.evolve(&rho0, &[0.3, 1.1, 2.9], &OdeOptions::default()).unwrap();
        for s in snaps {
            assert!(hermiticity_defect(&s.rho) < 1e-10);
        }
    }

    #[test]
    fn cat_state_construction() {
        // zero offset reduces to a coherent state (purity one)
        let space = FockSpace::lab(25).unwrap();
        let coh = cat_state(space, c(1.0, 0.5), c(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(coh.purity(), 1.0, epsilon = 1e-10);
        assert!((mean_amplitude(&coh) - c(1.0, 0.5)).norm() < 1e-9);
        // even cat at the origin: populations on even levels only
        let cat = cat_state(space, c(0.0, 0.0), c(2.0, 0.0)).unwrap();
        for n in (1..26).step_by(2) {
            assert!(cat.rho[[n, n]].norm() < 1e-12);
        }
        // displaced-frame cat holds the lobes relative to the frame center
        let disp = FockSpace::displaced(20, c(3.0, -1.0)).unwrap();
        let cat_d = cat_state(disp, c(3.0, -1.0), c(2.0, 0.0)).unwrap();
        assert!((mean_amplitude(&cat_d).im - (-1.0)).abs() < 1e-6);
        // too small a space errors
        assert!(cat_state(FockSpace::lab(6).unwrap(), c(0.0, 0.0), c(2.5, 0.0)).is_err());
    }

    #[test]
    fn frame_equivalence_of_steady_state() {
        let p = params(0.1, 4.0, 1.8);
        let lab = Liouvillian::full(p, FockSpace::lab(40).unwrap()).unwrap();
        let ss_lab = lab.steady_state().unwrap();
        let beta = crate::effective::stable_fixed_point(&p).unwrap().beta_ss;
        let disp = Liouvillian::full(p, FockSpace::displaced(36, beta).unwrap()).unwrap();
        let ss_disp = disp.steady_state().unwrap();
        let b_lab = mean_amplitude(&ss_lab);
        let b_disp = mean_amplitude(&ss_disp);
        assert!(
            (b_lab - b_disp).norm() < 5e-6,
            "frames disagree: {b_lab} vs {b_disp}"
        );
        let n_lab = mean_occupation(&ss_lab);
        let n_disp = mean_occupation(&ss_disp);
        assert!((n_lab - n_disp).abs() < 1e-4 * n_lab.max(1.0));
    }

    #[test]
    fn displaced_frame_states_convert_to_lab() {
        let beta = c(2.0, 1.0);
        let disp = FockSpace::displaced(12, beta).unwrap();
        let vac = DensityMatrix::vacuum(disp); // coherent |beta> physically
        let (lab, lost) = vac.to_lab(30).unwrap();
        assert!(lost < 1e-8);
        assert!((mean_amplitude(&lab) - beta).norm() < 1e-7);
        assert_abs_diff_eq!(lab.purity(), 1.0, epsilon = 1e-7);
    }

    #[test]
    fn memory_budget_enforced() {
        let p = params(0.1, 0.0, 0.0);
        let err = Liouvillian::full_with_budget(p, FockSpace::lab(40).unwrap(), 1024 * 1024);
        assert!(matches!(err, Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn invalid_density_matrices_rejected() {
        let space = FockSpace::lab(3).unwrap();
        let mut bad = Array2::<C64>::zeros((4, 4));
        bad[[0, 0]] = c(0.7, 0.0);
        bad[[1, 1]] = c(0.4, 0.0); // trace 1.1
        assert!(DensityMatrix::new(space, bad.clone()).is_err());
        bad[[1, 1]] = c(0.3, 0.0);
        bad[[0, 1]] = c(0.5, 0.0); // not Hermitian
        assert!(DensityMatrix::new(space, bad.clone()).is_err());
        bad[[1, 0]] = c(0.5, 0.0); // Hermitian but indefinite
        assert!(DensityMatrix::new(space, bad).is_err());
        let ok = array![
            [c(0.6, 0.0), c(0.2, 0.1), c(0.0, 0.0), c(0.0, 0.0)],
            [c(0.2, -0.1), c(0.4, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]
        ];
        assert!(DensityMatrix::new(space, ok).is_ok());
    }
}
