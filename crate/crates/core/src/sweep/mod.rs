//! Parameter sweeps over chain grids, written as CSV.

mod config;

pub use config::{ConfigError, ExperimentConfig, LayoutChoice, Mode, TimeGridSpec};

use rayon::prelude::*;

use crate::chain::{resolved_convention, ChainSpec};
use crate::charpoly::find_roots;
use crate::dynamics::{
    evolve, superposition_transfer, transfer_time, uniform_grid, AmplitudeState,
};
use crate::error::Error;
use crate::lindblad::lindblad_evolve;
use crate::spectral::{energy_gap, spectrum};

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("solver failed at {point}: {source}")]
    Solver { point: String, source: Error },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl SweepError {
    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            SweepError::Config(_) | SweepError::Io(_) => 2,
            SweepError::Solver { .. } => 3,
        }
    }
}

/// One grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub layout: LayoutChoice,
    pub delta: f64,
    pub beta: f64,
    pub rate: Option<f64>,
}

impl GridPoint {
    pub fn label(&self, n_sites: usize) -> String {
        let mut s = format!(
            "n_sites={n_sites} layout={} delta={} beta={}",
            self.layout.label, self.delta, self.beta
        );
        if let Some(r) = self.rate {
            s.push_str(&format!(" rate={r}"));
        }
        s
    }
}

/// Points in row-major order: layout, then delta, then beta, then rate.
pub fn grid_points(config: &ExperimentConfig, mode: Mode) -> Vec<GridPoint> {
    let rates: Vec<Option<f64>> = if mode == Mode::Lindblad {
        config.rates.iter().copied().map(Some).collect()
    } else {
        vec![None]
    };
    let mut points = Vec::new();
    for layout in &config.layouts {
        for &delta in &config.deltas {
            for &beta in &config.betas {
                for &rate in &rates {
                    points.push(GridPoint {
                        layout: layout.clone(),
                        delta,
                        beta,
                        rate,
                    });
                }
            }
        }
    }
    points
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub csv: String,
    /// Points outside tolerance (compare mode only).
    pub failures: Vec<String>,
}

#[derive(Debug, Default)]
struct PointOutput {
    meta: Vec<String>,
    rows: Vec<Vec<String>>,
    failure: Option<String>,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn coords(n_sites: usize, p: &GridPoint) -> Vec<String> {
    let mut v = vec![
        n_sites.to_string(),
        p.layout.label.clone(),
        p.layout.layout.n_wells().to_string(),
        num(p.delta),
        num(p.beta),
    ];
    if let Some(r) = p.rate {
        v.push(num(r));
    }
    v
}

fn header(config: &ExperimentConfig, mode: Mode, with_coords: bool) -> Vec<String> {
    let mut h: Vec<String> = Vec::new();
    if with_coords {
        h.extend(["n_sites", "layout", "n_wells", "delta", "beta"].map(String::from));
        if mode == Mode::Lindblad {
            h.push("rate".into());
        }
    }
    let n = config.n_sites;
    match mode {
        Mode::Spectrum | Mode::Roots => h.extend((1..=n).map(|i| format!("omega_{i}"))),
        Mode::Gap => h.extend(["delta_e", "t_tau", "degenerate"].map(String::from)),
        Mode::Sweep => {
            h.extend(["barrier_fraction", "delta_e", "t_tau", "degenerate"].map(String::from))
        }
        Mode::Compare => h.extend(["max_abs_diff", "pass"].map(String::from)),
        Mode::Dynamics | Mode::Superposition => {
            h.extend(["time", "f_left", "f_right"].map(String::from))
        }
        Mode::Lindblad => h.extend(["time", "rho_11", "rho_nn", "trace_error"].map(String::from)),
    }
    h
}

fn time_grid(config: &ExperimentConfig, spec: &ChainSpec) -> crate::Result<Vec<f64>> {
    let t_max = match config.time_grid.t_max {
        Some(t) => t,
        None => {
            let gap = energy_gap(spec)?;
            if gap.degenerate {
                return Err(Error::DegenerateGap(gap.delta_e));
            }
            crate::dynamics::DEFAULT_SPAN_IN_T_TAU * gap.t_tau
        }
    };
    uniform_grid(0.0, t_max, config.time_grid.points)
}

fn compute_point(
    config: &ExperimentConfig,
    mode: Mode,
    p: &GridPoint,
    with_coords: bool,
) -> crate::Result<PointOutput> {
    let spec = config.spec(&p.layout, p.delta, p.beta)?;
    let n = config.n_sites;
    let prefix = if with_coords {
        coords(n, p)
    } else {
        Vec::new()
    };
    let row = |extra: Vec<String>| {
        let mut r = prefix.clone();
        r.extend(extra);
        r
    };
    let mut out = PointOutput::default();
    match mode {
        Mode::Spectrum => {
            let res = spectrum(&spec)?;
            out.rows
                .push(row(res.energies_ascending().into_iter().map(num).collect()));
        }
        Mode::Roots => {
            let roots = find_roots(&spec)?;
            out.rows
                .push(row(roots.omegas.iter().rev().copied().map(num).collect()));
        }
        Mode::Gap | Mode::Sweep => {
            let gap = energy_gap(&spec)?;
            let mut extra = Vec::new();
            if mode == Mode::Sweep {
                extra.push(num(spec.barrier_fraction()));
            }
            extra.extend([
                num(gap.delta_e),
                num(gap.t_tau),
                u8::from(gap.degenerate).to_string(),
            ]);
            out.rows.push(row(extra));
        }
        Mode::Compare => {
            let direct = spectrum(&spec)?;
            let roots = find_roots(&spec)?;
            if roots.omegas.len() != direct.omegas.len() {
                return Err(Error::RootCountMismatch {
                    found: roots.omegas.len(),
                    expected: direct.omegas.len(),
                });
            }
            let diff = direct
                .omegas
                .iter()
                .zip(&roots.omegas)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let pass = diff <= config.tolerance * spec.j0();
            if !pass {
                out.failure = Some(format!(
                    "N={n} N_w={} delta={} beta={} max_abs_diff={diff:e}",
                    p.layout.layout.n_wells(),
                    p.delta,
                    p.beta
                ));
            }
            out.rows
                .push(row(vec![num(diff), u8::from(pass).to_string()]));
        }
        Mode::Dynamics | Mode::Superposition => {
            let times = time_grid(config, &spec)?;
            let trace = if mode == Mode::Dynamics {
                evolve(&spec, &AmplitudeState::left_edge(n), &times)?
            } else {
                superposition_transfer(&spec, &times)?
            };
            let gap = energy_gap(&spec)?;
            let exact = match transfer_time(&trace) {
                Ok(t) => num(t),
                Err(_) => "none".into(),
            };
            out.meta.push(format!(
                "# point: {} t_tau_two_level={} transfer_time_exact={exact} max_f_right={}",
                p.label(n),
                num(gap.t_tau),
                num(trace.max_right())
            ));
            for i in 0..trace.len() {
                out.rows.push(row(vec![
                    num(trace.times[i]),
                    num(trace.f_left[i]),
                    num(trace.f_right[i]),
                ]));
            }
        }
        Mode::Lindblad => {
            let times = time_grid(config, &spec)?;
            let rate = p.rate.unwrap_or(0.0);
            let trace = lindblad_evolve(&spec, rate, &times)?;
            out.meta.push(format!(
                "# point: {} steps={} max_hermiticity_drift={}",
                p.label(n),
                trace.steps,
                num(trace.max_hermiticity_drift)
            ));
            for i in 0..trace.times.len() {
                out.rows.push(row(vec![
                    num(trace.times[i]),
                    num(trace.rho_11[i]),
                    num(trace.rho_nn[i]),
                    num(trace.trace_error[i]),
                ]));
            }
        }
    }
    Ok(out)
}

/// Evaluates every grid point and renders the CSV. Output does not depend
/// on the thread count.
pub fn run(
    config: &ExperimentConfig,
    mode: Mode,
    threads: Option<usize>,
) -> Result<RunOutput, SweepError> {
    config.validate_for(mode)?;
    let points = grid_points(config, mode);
    let with_coords = !mode.is_time_series() || points.len() > 1;

    let compute = || -> Vec<crate::Result<PointOutput>> {
        points
            .par_iter()
            .map(|p| compute_point(config, mode, p, with_coords))
            .collect()
    };
    let results = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ConfigError::Parse(format!("thread pool: {e}")))?
            .install(compute),
        None => compute(),
    };

    let mut outputs = Vec::with_capacity(results.len());
    for (p, r) in points.iter().zip(results) {
        match r {
            Ok(o) => outputs.push(o),
            Err(source) => {
                return Err(SweepError::Solver {
                    point: p.label(config.n_sites),
                    source,
                })
            }
        }
    }

    let mut text = String::new();
    text.push_str(&format!(
        "# tool: xxz-transfer {}\n",
        env!("CARGO_PKG_VERSION")
    ));
    text.push_str(&format!("# mode: {mode}\n"));
    text.push_str(&format!("# nw_convention: {}\n", resolved_convention()));
    for line in &config.echo {
        text.push_str(&format!("# config: {line}\n"));
    }
    for o in &outputs {
        for m in &o.meta {
            text.push_str(m);
            text.push('\n');
        }
    }

    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let to_io = |e: csv::Error| std::io::Error::other(e.to_string());
    writer
        .write_record(header(config, mode, with_coords))
        .map_err(to_io)?;
    for o in &outputs {
        for r in &o.rows {
            writer.write_record(r).map_err(to_io)?;
        }
    }
    let body = writer
        .into_inner()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    text.push_str(&String::from_utf8(body).map_err(std::io::Error::other)?);

    Ok(RunOutput {
        csv: text,
        failures: outputs.into_iter().filter_map(|o| o.failure).collect(),
    })
}

/// Per-point agreement between the direct eigensolver and the polynomial roots.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparePoint {
    pub n_sites: usize,
    pub n_wells: usize,
    pub delta: f64,
    pub beta: f64,
    pub max_abs_diff: f64,
    pub pass: bool,
}

pub fn compare_paths(config: &ExperimentConfig) -> Result<Vec<ComparePoint>, SweepError> {
    config.validate_for(Mode::Compare)?;
    grid_points(config, Mode::Compare)
        .par_iter()
        .map(|p| {
            let label = p.label(config.n_sites);
            let wrap = |source| SweepError::Solver {
                point: label.clone(),
                source,
            };
            let spec = config.spec(&p.layout, p.delta, p.beta).map_err(wrap)?;
            let direct = spectrum(&spec).map_err(wrap)?;
            let roots = find_roots(&spec).map_err(wrap)?;
            let max_abs_diff = direct
                .omegas
                .iter()
                .zip(&roots.omegas)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            Ok(ComparePoint {
                n_sites: config.n_sites,
                n_wells: p.layout.layout.n_wells(),
                delta: p.delta,
                beta: p.beta,
                max_abs_diff,
                pass: roots.omegas.len() == direct.omegas.len()
                    && max_abs_diff <= config.tolerance * spec.j0(),
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}
