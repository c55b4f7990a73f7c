//! Dense symmetric tridiagonal eigensolver.
//!
//! Eigenvalues come from Sturm-sequence bisection, eigenvectors from inverse
//! iteration with reorthogonalization inside clusters. Lowest-energy states of
//! `H_s = E₀ - A` are the *largest* eigenvalues of `A`; [`SpectralResult`]
//! keeps `A`'s ascending order and exposes the energies alongside.

use std::f64::consts::PI;

use crate::chain::{build_direct, ChainSpec, TridiagonalOperator};
use crate::error::{Error, Result};

/// Gaps below this (in units of `J₀`) count as closed.
pub const DEGENERACY_TOL: f64 = 1e-12;

const MAX_BISECTION_STEPS: usize = 256;
const MAX_INVERSE_ITERATIONS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    /// Eigenvalues `Λᵢ` of `A`, ascending.
    pub lambdas: Vec<f64>,
    /// Energies `Ωᵢ = E₀ - Λᵢ`, index-aligned with `lambdas` (so descending).
    pub omegas: Vec<f64>,
    /// Orthonormal eigenvectors over the site basis, aligned with `lambdas`.
    pub vectors: Vec<Vec<f64>>,
}

impl SpectralResult {
    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    /// Re-references the energies to offset `e0`.
    pub fn with_offset(mut self, e0: f64) -> Self {
        self.omegas = self.lambdas.iter().map(|l| e0 - l).collect();
        self
    }

    /// Index (into `lambdas`) of the `k`-th lowest energy state, `k = 0` being
    /// the ground state.
    pub fn energy_index(&self, k: usize) -> usize {
        self.dim() - 1 - k
    }

    /// Energies in ascending order.
    pub fn energies_ascending(&self) -> Vec<f64> {
        self.omegas.iter().rev().copied().collect()
    }

    /// Eigenvector of the `k`-th lowest energy state.
    pub fn energy_vector(&self, k: usize) -> &[f64] {
        &self.vectors[self.energy_index(k)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    /// `E₂ - E₁`.
    pub delta_e: f64,
    /// Two-level transfer time `π/ΔE` (`ħ = 1`); infinite when degenerate.
    pub t_tau: f64,
    pub degenerate: bool,
}

impl GapReport {
    pub fn from_gap(delta_e: f64, j0: f64) -> Self {
        let degenerate = delta_e < DEGENERACY_TOL * j0;
        let t_tau = if delta_e > 0.0 {
            PI / delta_e
        } else {
            f64::INFINITY
        };
        Self {
            delta_e,
            t_tau,
            degenerate,
        }
    }
}

struct Sturm<'a> {
    diag: &'a [f64],
    off: &'a [f64],
    pivmin: f64,
}

impl<'a> Sturm<'a> {
    fn new(op: &'a TridiagonalOperator) -> Self {
        let max_off = op.offdiag.iter().fold(1.0_f64, |m, e| m.max(e * e));
        Self {
            diag: &op.diag,
            off: &op.offdiag,
            pivmin: f64::MIN_POSITIVE * max_off,
        }
    }

    /// Number of eigenvalues of the unscaled matrix strictly below `x`.
    fn count_below(&self, x: f64) -> usize {
        let mut q = self.diag[0] - x;
        if q.abs() < self.pivmin {
            q = -self.pivmin;
        }
        let mut count = usize::from(q < 0.0);
        for i in 1..self.diag.len() {
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / q;
            if q.abs() < self.pivmin {
                q = -self.pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// `k`-th smallest eigenvalue (0-based) by bisection.
    fn eigenvalue(&self, k: usize, bounds: (f64, f64)) -> Result<f64> {
        let (mut lo, mut hi) = bounds;
        let width = (hi - lo).max(f64::MIN_POSITIVE);
        lo -= 2.0 * f64::EPSILON * width + self.pivmin;
        hi += 2.0 * f64::EPSILON * width + self.pivmin;
        for _ in 0..MAX_BISECTION_STEPS {
            let tol = 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + self.pivmin;
            if hi - lo <= tol {
                return Ok(0.5 * (lo + hi));
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return Ok(mid);
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Err(Error::ConvergenceFailure(format!(
            "bisection for eigenvalue {k} stalled in [{lo}, {hi}]"
        )))
    }
}

/// Eigenvalues of `op` (scaled), ascending.
pub fn eigenvalues(op: &TridiagonalOperator) -> Result<Vec<f64>> {
    let sturm = Sturm::new(op);
    let bounds = op.gershgorin();
    (0..op.dim())
        .map(|k| sturm.eigenvalue(k, bounds).map(|v| v * op.scale))
        .collect()
}

/// Selected eigenvalues by ascending index.
fn eigenvalues_at(op: &TridiagonalOperator, ks: &[usize]) -> Result<Vec<f64>> {
    let sturm = Sturm::new(op);
    let bounds = op.gershgorin();
    ks.iter()
        .map(|&k| sturm.eigenvalue(k, bounds).map(|v| v * op.scale))
        .collect()
}

/// LU factors of `T - σ` with partial pivoting.
struct ShiftedLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn factor(op: &TridiagonalOperator, shift: f64, tiny: f64) -> Self {
        let n = op.dim();
        let mut d: Vec<f64> = op.diag.iter().map(|a| a - shift).collect();
        let mut dl = op.offdiag.clone();
        let mut du = op.offdiag.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        for p in &mut d {
            if p.abs() < tiny {
                *p = if *p < 0.0 { -tiny } else { tiny };
            }
        }
        Self {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i] - self.dl[i] * b[i + 1];
                b[i] = b[i + 1];
                b[i + 1] = temp;
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Deterministic start vector with no special alignment to the chain's
/// symmetries.
fn start_vector(n: usize, seed: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let h = (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
                ^ (seed as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            let h = h ^ (h >> 31);
            0.5 + (h % 10_000) as f64 / 10_000.0
        })
        .collect()
}

/// Flips `v` so that its largest-magnitude entry (first one, on ties) is positive.
fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if let Some(x) = v.iter().find(|x| x.abs() >= max * (1.0 - 1e-9)) {
        if *x < 0.0 {
            v.iter_mut().for_each(|y| *y = -*y);
        }
    }
}

fn residual(op: &TridiagonalOperator, value: f64, v: &[f64]) -> f64 {
    let av = op.matvec(v);
    av.iter()
        .zip(v)
        .map(|(a, x)| (a - value * x).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Full spectrum and eigenvectors of `op`, with `Ω = -Λ` (`E₀ = 0`).
pub fn eigendecompose(op: &TridiagonalOperator) -> Result<SpectralResult> {
    let n = op.dim();
    let unscaled: Vec<f64> = eigenvalues(op)?.iter().map(|v| v / op.scale).collect();
    let norm = op.norm_inf() / op.scale.abs();
    let tiny = f64::EPSILON * norm.max(f64::MIN_POSITIVE);
    let cluster_gap = 1e-3 * norm;
    let target = 1e-12 * norm.max(1.0);
    let accept = 1e-9 * norm.max(f64::MIN_POSITIVE);

    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut cluster_start = 0;
    let mut last_shift = f64::NEG_INFINITY;
    let unit = TridiagonalOperator::new(op.diag.clone(), op.offdiag.clone(), 1.0);

    for (j, &value) in unscaled.iter().enumerate() {
        if j > 0 && value - unscaled[j - 1] > cluster_gap {
            cluster_start = j;
        }
        // keep shifts inside a cluster distinct so the factorizations differ
        let shift = if j > cluster_start {
            value.max(last_shift + 10.0 * tiny)
        } else {
            value
        };
        last_shift = shift;
        let lu = ShiftedLu::factor(&unit, shift, tiny);

        let mut v = start_vector(n, j);
        normalize(&mut v);
        let mut best = f64::INFINITY;
        for it in 0..MAX_INVERSE_ITERATIONS {
            lu.solve(&mut v);
            for prev in &vectors[cluster_start..j] {
                let c = dot(&v, prev);
                v.iter_mut().zip(prev).for_each(|(x, p)| *x -= c * p);
            }
            if normalize(&mut v) == 0.0 {
                v = start_vector(n, j + 7 * (it + 1));
                normalize(&mut v);
                continue;
            }
            best = residual(&unit, value, &v);
            if it >= 1 && best <= target {
                break;
            }
        }
        if !(best <= accept) {
            return Err(Error::ConvergenceFailure(format!(
                "inverse iteration for eigenvalue {j} left residual {best:e}"
            )));
        }
        vectors.push(v);
    }

    for v in &mut vectors {
        fix_sign(v);
    }
    let lambdas: Vec<f64> = unscaled.iter().map(|v| v * op.scale).collect();
    Ok(SpectralResult {
        omegas: lambdas.iter().map(|l| -l).collect(),
        lambdas,
        vectors,
    })
}

/// Spectrum of the chain's single-excitation operator with `Ω = E₀ - Λ`.
pub fn spectrum(spec: &ChainSpec) -> Result<SpectralResult> {
    Ok(eigendecompose(&build_direct(spec))?.with_offset(spec.e0()))
}

/// Gap between the two lowest energies, i.e. the two largest `Λ`.
pub fn energy_gap(spec: &ChainSpec) -> Result<GapReport> {
    let op = build_direct(spec);
    let n = op.dim();
    let top = eigenvalues_at(&op, &[n - 2, n - 1])?;
    Ok(GapReport::from_gap((top[1] - top[0]).max(0.0), spec.j0()))
}
