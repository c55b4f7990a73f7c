//! Open-system evolution with a single jump channel between the two lowest
//! eigenstates,
//!
//! ```text
//! dρ/dt = -i[H, ρ] + γ (L ρ L† - ½{L†L, ρ}),   L = |ψ₁⟩⟨ψ₂| + |ψ₂⟩⟨ψ₁|
//! ```
//!
//! integrated with fixed-step classical RK4. The default frame is the
//! interaction picture of `H`, where the coherent part is exact and the step
//! only has to resolve `γ` and the doublet splitting. The literal site-basis
//! integration is kept as [`Frame::Site`].

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::spectral::{spectrum, SpectralResult};

/// Steps satisfy `h ≤ STEP_FACTOR / (fastest rate of the generator)`.
pub const STEP_FACTOR: f64 = 0.01;
/// A single step may not move the trace by more than this.
pub const TRACE_DRIFT_TOL: f64 = 1e-6;
const MAX_HALVINGS: u32 = 24;
/// Entries of the jump operator in the eigenbasis below this are basis-change
/// round-off and are dropped.
const JUMP_NOISE: f64 = 1e-13;

type CMat = DMatrix<Complex64>;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub rho: CMat,
    pub time: f64,
}

impl DensityMatrix {
    /// `|k⟩⟨k|` at `t = 0` (`site` 0-based).
    pub fn pure_site(n_sites: usize, site: usize) -> Self {
        let mut rho = CMat::zeros(n_sites, n_sites);
        rho[(site, site)] = Complex64::new(1.0, 0.0);
        Self { rho, time: 0.0 }
    }

    /// `|φ⟩⟨φ|` for a real normalized vector.
    pub fn pure_real(phi: &[f64]) -> Self {
        let n = phi.len();
        let rho = CMat::from_fn(n, n, |i, j| Complex64::new(phi[i] * phi[j], 0.0));
        Self { rho, time: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn population(&self, site: usize) -> f64 {
        self.rho[(site, site)].re
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.rho)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.rho
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

fn hermiticity_error(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn symmetrize(m: &mut CMat) {
    let adj = m.adjoint();
    *m = (&*m + adj).scale(0.5);
}

/// `L = |ψ₁⟩⟨ψ₂| + |ψ₂⟩⟨ψ₁|` in the site basis, with its rate.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpOperator {
    pub matrix: DMatrix<f64>,
    pub rate: f64,
}

impl JumpOperator {
    pub fn new(spec: &SpectralResult, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::NegativeRate(rate));
        }
        let n = spec.dim();
        if n < 2 {
            return Err(Error::InvalidSpec(
                "need two eigenstates for the jump operator".into(),
            ));
        }
        let psi1 = spec.energy_vector(0);
        let psi2 = spec.energy_vector(1);
        let matrix = DMatrix::from_fn(n, n, |i, j| psi1[i] * psi2[j] + psi2[i] * psi1[j]);
        Ok(Self { matrix, rate })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Frame {
    /// Interaction picture of `H`; step bound from `γ` and the frequencies `L` couples.
    #[default]
    Interaction,
    /// Site basis with `H` shifted to its spectral midpoint; step bound from `‖H‖`.
    Site,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LindbladOptions {
    pub frame: Frame,
    /// Caps the step below the automatic bound.
    pub max_step: Option<f64>,
}

impl Default for LindbladOptions {
    fn default() -> Self {
        Self {
            frame: Frame::Interaction,
            max_step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LindbladTrace {
    pub times: Vec<f64>,
    /// Left-edge population `ρ₁₁`.
    pub rho_11: Vec<f64>,
    /// Right-edge population `ρ_NN`.
    pub rho_nn: Vec<f64>,
    /// `|tr ρ - 1|`.
    pub trace_error: Vec<f64>,
    /// Populations of `ψ₁` and `ψ₂`.
    pub pop_psi1: Vec<f64>,
    pub pop_psi2: Vec<f64>,
    /// `|⟨ψ₁|ρ|ψ₂⟩|`.
    pub coherence_12: Vec<f64>,
    /// Largest anti-Hermitian part seen before symmetrization.
    pub max_hermiticity_drift: f64,
    pub steps: usize,
    pub final_state: DensityMatrix,
}

/// Starts from `|↓↑…↑⟩⟨↓↑…↑|`.
pub fn lindblad_evolve(spec: &ChainSpec, rate: f64, times: &[f64]) -> Result<LindbladTrace> {
    lindblad_evolve_with(
        spec,
        rate,
        times,
        &DensityMatrix::pure_site(spec.n_sites(), 0),
        &LindbladOptions::default(),
    )
}

pub fn lindblad_evolve_with(
    spec: &ChainSpec,
    rate: f64,
    times: &[f64],
    initial: &DensityMatrix,
    opts: &LindbladOptions,
) -> Result<LindbladTrace> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::NegativeRate(rate));
    }
    if times.is_empty()
        || times.iter().any(|t| !t.is_finite())
        || times.windows(2).any(|w| w[1] < w[0])
        || times[0] < initial.time
    {
        return Err(Error::InvalidTimeGrid(
            "times must be finite, non-decreasing and start at or after the initial time".into(),
        ));
    }
    let n = spec.n_sites();
    if initial.dim() != n {
        return Err(Error::InvalidSpec(format!(
            "density matrix is {0}x{0}, chain has {n} sites",
            initial.dim()
        )));
    }
    let spec_res = spectrum(spec)?;
    let jump = JumpOperator::new(&spec_res, rate)?;
    let mut solver = Solver::new(&spec_res, &jump, initial, opts);

    let psi1 = spec_res.energy_vector(0).to_vec();
    let psi2 = spec_res.energy_vector(1).to_vec();
    let mut out = LindbladTrace {
        times: times.to_vec(),
        rho_11: Vec::with_capacity(times.len()),
        rho_nn: Vec::with_capacity(times.len()),
        trace_error: Vec::with_capacity(times.len()),
        pop_psi1: Vec::with_capacity(times.len()),
        pop_psi2: Vec::with_capacity(times.len()),
        coherence_12: Vec::with_capacity(times.len()),
        max_hermiticity_drift: 0.0,
        steps: 0,
        final_state: initial.clone(),
    };
    for &t in times {
        solver.advance(t)?;
        let rho = solver.site_rho();
        out.rho_11.push(rho[(0, 0)].re);
        out.rho_nn.push(rho[(n - 1, n - 1)].re);
        out.trace_error
            .push((rho.trace() - Complex64::new(1.0, 0.0)).norm());
        out.pop_psi1.push(expectation(&rho, &psi1, &psi1).re);
        out.pop_psi2.push(expectation(&rho, &psi2, &psi2).re);
        out.coherence_12
            .push(expectation(&rho, &psi1, &psi2).norm());
        out.final_state = DensityMatrix { rho, time: t };
    }
    out.max_hermiticity_drift = solver.max_drift;
    out.steps = solver.steps;
    Ok(out)
}

/// `⟨a|ρ|b⟩` for real vectors.
fn expectation(rho: &CMat, a: &[f64], b: &[f64]) -> Complex64 {
    let n = a.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += rho[(i, j)] * (a[i] * b[j]);
        }
    }
    acc
}

struct Solver {
    frame: Frame,
    rate: f64,
    /// Eigenvectors as columns (interaction frame) or identity (site frame).
    basis: DMatrix<f64>,
    omegas: Vec<f64>,
    /// Jump operator in the working basis (time-independent part).
    jump: CMat,
    /// Shifted Hamiltonian, site frame only.
    hamiltonian: CMat,
    rho: CMat,
    t0: f64,
    t: f64,
    h_max: f64,
    max_drift: f64,
    steps: usize,
}

impl Solver {
    fn new(
        spec: &SpectralResult,
        jump: &JumpOperator,
        initial: &DensityMatrix,
        opts: &LindbladOptions,
    ) -> Self {
        let n = spec.dim();
        let basis = DMatrix::from_fn(n, n, |i, a| spec.vectors[a][i]);
        let to_complex = |m: &DMatrix<f64>| m.map(|x| Complex64::new(x, 0.0));
        let span = spec.lambdas[n - 1] - spec.lambdas[0];

        let (jump_m, hamiltonian, rho, natural) = match opts.frame {
            Frame::Interaction => {
                let mut lt = basis.transpose() * &jump.matrix * &basis;
                lt.iter_mut().for_each(|x| {
                    if x.abs() < JUMP_NOISE {
                        *x = 0.0
                    }
                });
                let mut fastest: f64 = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        if lt[(a, b)] != 0.0 {
                            fastest = fastest.max((spec.omegas[a] - spec.omegas[b]).abs());
                        }
                    }
                }
                let bt = to_complex(&basis);
                let rho = bt.transpose() * &initial.rho * &bt;
                (to_complex(&lt), CMat::zeros(n, n), rho, fastest)
            }
            Frame::Site => {
                let mid = 0.5 * (spec.lambdas[n - 1] + spec.lambdas[0]);
                // H - c = -(A - mid); A rebuilt from its decomposition
                let mut h = DMatrix::<f64>::zeros(n, n);
                for (a, v) in spec.vectors.iter().enumerate() {
                    let w = -(spec.lambdas[a] - mid);
                    for i in 0..n {
                        for j in 0..n {
                            h[(i, j)] += w * v[i] * v[j];
                        }
                    }
                }
                (
                    to_complex(&jump.matrix),
                    to_complex(&h),
                    initial.rho.clone(),
                    0.5 * span,
                )
            }
        };
        let bound = natural.max(jump.rate);
        let mut h_max = if bound > 0.0 {
            STEP_FACTOR / bound
        } else {
            f64::INFINITY
        };
        if let Some(cap) = opts.max_step {
            h_max = h_max.min(cap);
        }
        Self {
            frame: opts.frame,
            rate: jump.rate,
            basis,
            omegas: spec.omegas.clone(),
            jump: jump_m,
            hamiltonian,
            rho,
            t0: initial.time,
            t: initial.time,
            h_max,
            max_drift: 0.0,
            steps: 0,
        }
    }

    /// `e^{i(Ω_a - Ω_b)τ}` applied entrywise.
    fn rotate(&self, m: &CMat, tau: f64) -> CMat {
        let n = m.nrows();
        CMat::from_fn(n, n, |a, b| {
            m[(a, b)] * Complex64::from_polar(1.0, (self.omegas[a] - self.omegas[b]) * tau)
        })
    }

    fn rhs(&self, t: f64, rho: &CMat) -> CMat {
        let l = match self.frame {
            Frame::Interaction => self.rotate(&self.jump, t - self.t0),
            Frame::Site => self.jump.clone(),
        };
        let ld = l.adjoint();
        let ldl = &ld * &l;
        let mut out = (&l * rho * &ld - (&ldl * rho + rho * &ldl).scale(0.5)).scale(self.rate);
        if self.frame == Frame::Site {
            let i = Complex64::new(0.0, 1.0);
            let comm = &self.hamiltonian * rho - rho * &self.hamiltonian;
            out -= comm * i;
        }
        out
    }

    fn rk4(&self, t: f64, rho: &CMat, h: f64) -> CMat {
        let k1 = self.rhs(t, rho);
        let k2 = self.rhs(t + 0.5 * h, &(rho + k1.scale(0.5 * h)));
        let k3 = self.rhs(t + 0.5 * h, &(rho + k2.scale(0.5 * h)));
        let k4 = self.rhs(t + h, &(rho + k3.scale(h)));
        rho + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0)
    }

    fn step(&mut self, h: f64, depth: u32) -> Result<()> {
        let next = self.rk4(self.t, &self.rho, h);
        let drift = (next.trace() - self.rho.trace()).norm();
        if drift > TRACE_DRIFT_TOL {
            if depth >= MAX_HALVINGS {
                return Err(Error::StepSizeFailure {
                    time: self.t,
                    drift,
                });
            }
            self.step(0.5 * h, depth + 1)?;
            return self.step(0.5 * h, depth + 1);
        }
        self.max_drift = self.max_drift.max(hermiticity_error(&next));
        self.rho = next;
        symmetrize(&mut self.rho);
        self.t += h;
        self.steps += 1;
        Ok(())
    }

    fn advance(&mut self, target: f64) -> Result<()> {
        let span = target - self.t;
        if span <= 0.0 {
            return Ok(());
        }
        if self.rate == 0.0 && self.frame == Frame::Interaction {
            // generator vanishes in this frame
            self.t = target;
            return Ok(());
        }
        let count = (span / self.h_max).ceil().max(1.0) as usize;
        let h = span / count as f64;
        for _ in 0..count {
            self.step(h, 0)?;
        }
        self.t = target;
        Ok(())
    }

    fn site_rho(&self) -> CMat {
        match self.frame {
            Frame::Site => self.rho.clone(),
            Frame::Interaction => {
                let eig = self.rotate(&self.rho, -(self.t - self.t0));
                let b = self.basis.map(|x| Complex64::new(x, 0.0));
                &b * eig * b.transpose()
            }
        }
    }
}
