//! Closed-system evolution in the single-flip sector.
//!
//! States are propagated exactly through the spectral decomposition,
//! `|Ψ(t)⟩ = Σᵢ e^{-iΩᵢ(t-t₀)} |vᵢ⟩⟨vᵢ|Ψ(t₀)⟩`, so there is no time step.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::spectral::{energy_gap, spectrum, GapReport, SpectralResult};

const NORM_TOL: f64 = 1e-10;

/// Default number of samples in a time grid.
pub const DEFAULT_TIME_POINTS: usize = 2000;
/// Default grid span in units of the two-level transfer time.
pub const DEFAULT_SPAN_IN_T_TAU: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeState {
    pub amps: Vec<Complex64>,
    pub time: f64,
}

impl AmplitudeState {
    /// Spin flipped on `site` (0-based) at `t = 0`.
    pub fn site(n_sites: usize, site: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); n_sites];
        amps[site] = Complex64::new(1.0, 0.0);
        Self { amps, time: 0.0 }
    }

    /// `|↓↑…↑⟩`.
    pub fn left_edge(n_sites: usize) -> Self {
        Self::site(n_sites, 0)
    }

    /// `|↑…↑↓⟩`.
    pub fn right_edge(n_sites: usize) -> Self {
        Self::site(n_sites, n_sites - 1)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_norm(&self) -> Result<()> {
        let norm = self.norm_sqr();
        if (norm - 1.0).abs() <= NORM_TOL || (norm - 0.5).abs() <= NORM_TOL {
            Ok(())
        } else {
            Err(Error::NotNormalized(norm))
        }
    }
}

/// Edge fidelities `F_l(t)`, `F_r(t)` sampled on `times`.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityTrace {
    pub times: Vec<f64>,
    pub f_left: Vec<f64>,
    pub f_right: Vec<f64>,
}

impl FidelityTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_right(&self) -> f64 {
        self.f_right.iter().copied().fold(0.0, f64::max)
    }
}

/// `count` evenly spaced points on `[start, stop]`.
pub fn uniform_grid(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 || !(stop > start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::InvalidTimeGrid(format!(
            "need at least 2 points on a finite, increasing interval; got {count} on [{start}, {stop}]"
        )));
    }
    let step = (stop - start) / (count - 1) as f64;
    Ok((0..count).map(|i| start + step * i as f64).collect())
}

/// `[0, 1.5·π/ΔE]` with 2000 points, enough to resolve the first transfer.
pub fn default_time_grid(gap: &GapReport) -> Result<Vec<f64>> {
    if gap.degenerate {
        return Err(Error::DegenerateGap(gap.delta_e));
    }
    uniform_grid(0.0, DEFAULT_SPAN_IN_T_TAU * gap.t_tau, DEFAULT_TIME_POINTS)
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidTimeGrid(
            "times must be finite and non-empty".into(),
        ));
    }
    Ok(())
}

/// Precomputed decomposition for repeated propagation of one initial state.
pub struct Propagator {
    spectrum: SpectralResult,
    /// `⟨vᵢ|Ψ(t₀)⟩`.
    overlaps: Vec<Complex64>,
    t0: f64,
}

impl Propagator {
    pub fn new(spectrum: SpectralResult, initial: &AmplitudeState) -> Result<Self> {
        initial.check_norm()?;
        if initial.amps.len() != spectrum.dim() {
            return Err(Error::InvalidSpec(format!(
                "state has {} amplitudes, chain has {} sites",
                initial.amps.len(),
                spectrum.dim()
            )));
        }
        let overlaps = spectrum
            .vectors
            .iter()
            .map(|v| v.iter().zip(&initial.amps).map(|(x, a)| a * x).sum())
            .collect();
        Ok(Self {
            spectrum,
            overlaps,
            t0: initial.time,
        })
    }

    fn phases(&self, t: f64) -> Vec<Complex64> {
        let dt = t - self.t0;
        self.spectrum
            .omegas
            .iter()
            .zip(&self.overlaps)
            .map(|(w, c)| c * Complex64::from_polar(1.0, -w * dt))
            .collect()
    }

    pub fn amplitude(&self, site: usize, t: f64) -> Complex64 {
        self.phases(t)
            .iter()
            .zip(&self.spectrum.vectors)
            .map(|(p, v)| p * v[site])
            .sum()
    }

    pub fn state(&self, t: f64) -> AmplitudeState {
        let phases = self.phases(t);
        let n = self.spectrum.dim();
        let amps = (0..n)
            .map(|k| {
                phases
                    .iter()
                    .zip(&self.spectrum.vectors)
                    .map(|(p, v)| p * v[k])
                    .sum()
            })
            .collect();
        AmplitudeState { amps, time: t }
    }

    pub fn fidelities(&self, times: &[f64]) -> FidelityTrace {
        let last = self.spectrum.dim() - 1;
        let (f_left, f_right) = times
            .iter()
            .map(|&t| {
                (
                    self.amplitude(0, t).norm_sqr(),
                    self.amplitude(last, t).norm_sqr(),
                )
            })
            .unzip();
        FidelityTrace {
            times: times.to_vec(),
            f_left,
            f_right,
        }
    }
}

/// Exact edge fidelities of `initial` evolved under the chain Hamiltonian.
pub fn evolve(spec: &ChainSpec, initial: &AmplitudeState, times: &[f64]) -> Result<FidelityTrace> {
    check_times(times)?;
    if spec.delta() < 1.0 {
        log::warn!(
            "anisotropy {} < 1: edge states are not a two-level doublet",
            spec.delta()
        );
    }
    Ok(Propagator::new(spectrum(spec)?, initial)?.fidelities(times))
}

/// `F_l = ½[1 + cos(ΔE t)]`, `F_r = ½[1 - cos(ΔE t)]`.
pub fn two_level_fidelities(gap: &GapReport, times: &[f64]) -> Result<FidelityTrace> {
    check_times(times)?;
    if gap.degenerate {
        return Err(Error::DegenerateGap(gap.delta_e));
    }
    let (f_left, f_right) = times
        .iter()
        .map(|&t| {
            let c = (gap.delta_e * t).cos();
            (0.5 * (1.0 + c), 0.5 * (1.0 - c))
        })
        .unzip();
    Ok(FidelityTrace {
        times: times.to_vec(),
        f_left,
        f_right,
    })
}

/// Impurity prepared as `(|↑⟩ + |↓⟩)/√2` on the left site. Only the flipped
/// half moves; the all-up half is an eigenstate of its own sector, so both
/// fidelities are half those of the fully flipped run.
pub fn superposition_transfer(spec: &ChainSpec, times: &[f64]) -> Result<FidelityTrace> {
    let mut initial = AmplitudeState::left_edge(spec.n_sites());
    initial.amps[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    evolve(spec, &initial, times)
}

/// Peak detection parameters for [`transfer_time_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferTimeOptions {
    /// The peak must reach this fraction of the smoothed global maximum.
    pub threshold: f64,
    /// Half-width of the moving average, as a fraction of the trace span.
    pub smoothing: f64,
    /// A peak must dominate `±neighbourhood·span` of the smoothed trace.
    pub neighbourhood: f64,
    /// Below this raw `max F_r` the trace counts as no transfer.
    pub min_transfer: f64,
}

impl Default for TransferTimeOptions {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            smoothing: 0.02,
            neighbourhood: 0.1,
            min_transfer: 0.05,
        }
    }
}

/// Centered moving average with half-width `half_width` in time units.
fn moving_average(times: &[f64], values: &[f64], half_width: f64) -> Vec<f64> {
    let n = values.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    let (mut lo, mut hi) = (0, 0);
    (0..n)
        .map(|i| {
            while times[lo] < times[i] - half_width {
                lo += 1;
            }
            while hi + 1 < n && times[hi + 1] <= times[i] + half_width {
                hi += 1;
            }
            hi = hi.max(i);
            (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64
        })
        .collect()
}

/// Time of the first transfer peak in `series` (`F_r` or `ρ_NN`).
///
/// The series is smoothed to suppress the fast beating against states outside
/// the edge doublet; the result is the first point of the smoothed series
/// that is a maximum over its neighbourhood and reaches `threshold` of the
/// smoothed global maximum.
pub fn first_peak_time(times: &[f64], series: &[f64], opts: &TransferTimeOptions) -> Result<f64> {
    check_times(times)?;
    if times.len() != series.len() || times.len() < 3 {
        return Err(Error::InvalidTimeGrid(
            "series too short for peak detection".into(),
        ));
    }
    let raw_max = series.iter().copied().fold(0.0, f64::max);
    if raw_max < opts.min_transfer {
        return Err(Error::NoTransfer(raw_max));
    }
    let span = times[times.len() - 1] - times[0];
    let smooth = moving_average(times, series, opts.smoothing * span);
    let global = smooth.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let reach = opts.neighbourhood * span;
    let (mut lo, mut hi) = (0, 0);
    for i in 1..times.len() {
        while times[lo] < times[i] - reach {
            lo += 1;
        }
        while hi + 1 < times.len() && times[hi + 1] <= times[i] + reach {
            hi += 1;
        }
        hi = hi.max(i);
        if smooth[i] < opts.threshold * global {
            continue;
        }
        if smooth[lo..=hi].iter().all(|&v| v <= smooth[i]) {
            return Ok(times[i]);
        }
    }
    Err(Error::NoTransfer(raw_max))
}

/// Empirical transfer time read off the `F_r` trace with default options.
pub fn transfer_time(trace: &FidelityTrace) -> Result<f64> {
    transfer_time_with(trace, &TransferTimeOptions::default())
}

pub fn transfer_time_with(trace: &FidelityTrace, opts: &TransferTimeOptions) -> Result<f64> {
    first_peak_time(&trace.times, &trace.f_right, opts)
}

/// The two transfer-time estimates side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    pub gap: GapReport,
    /// `π/ΔE`.
    pub two_level: f64,
    /// Peak of the exact `F_r` trace on the default grid.
    pub exact: f64,
    pub max_f_right: f64,
}

/// Evolves `|↓↑…↑⟩` on the default grid and extracts both estimates.
pub fn transfer_report(spec: &ChainSpec) -> Result<TransferReport> {
    let gap = energy_gap(spec)?;
    let times = default_time_grid(&gap)?;
    let trace = evolve(spec, &AmplitudeState::left_edge(spec.n_sites()), &times)?;
    Ok(TransferReport {
        gap,
        two_level: PI / gap.delta_e,
        exact: transfer_time(&trace)?,
        max_f_right: trace.max_right(),
    })
}
