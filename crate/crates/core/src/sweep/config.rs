//! Flat key-value experiment documents.
//!
//! ```toml
//! mode = "gap"            # optional; must match the subcommand when given
//! n_sites = 6
//! delta = "1:10:91"       # scalar, list, or "start:stop:count"
//! beta = [0, 1, 9]
//! barriers = [3]          # or equal_wells = 2 (scalar or list), or layouts = [[3, 4], [2, 5]]
//! rate = 1e-3             # lindblad only
//! t_max = 2000.0          # time-series modes; default 1.5·π/ΔE per point
//! t_points = 2000
//! ```

use std::fmt;
use std::str::FromStr;

use serde::Deserialize;

use crate::chain::{BarrierLayout, ChainSpec};
use crate::dynamics::DEFAULT_TIME_POINTS;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Spectrum,
    Gap,
    Roots,
    Dynamics,
    Superposition,
    Lindblad,
    Sweep,
    Compare,
}

impl Mode {
    pub const ALL: [Mode; 8] = [
        Mode::Spectrum,
        Mode::Gap,
        Mode::Roots,
        Mode::Dynamics,
        Mode::Superposition,
        Mode::Lindblad,
        Mode::Sweep,
        Mode::Compare,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Spectrum => "spectrum",
            Mode::Gap => "gap",
            Mode::Roots => "roots",
            Mode::Dynamics => "dynamics",
            Mode::Superposition => "superposition",
            Mode::Lindblad => "lindblad",
            Mode::Sweep => "sweep",
            Mode::Compare => "compare",
        }
    }

    pub fn is_time_series(self) -> bool {
        matches!(self, Mode::Dynamics | Mode::Superposition | Mode::Lindblad)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| ConfigError::field("mode", format!("unknown mode `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(String),
    #[error("field `{field}`: {message}")]
    Field {
        field: &'static str,
        message: String,
    },
}

impl ConfigError {
    fn field(field: &'static str, message: impl Into<String>) -> Self {
        Self::Field {
            field,
            message: message.into(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum AxisDoc {
    Scalar(f64),
    List(Vec<f64>),
    Range(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CountDoc {
    Scalar(usize),
    List(Vec<usize>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    mode: Option<String>,
    n_sites: usize,
    delta: AxisDoc,
    beta: Option<AxisDoc>,
    j0: Option<f64>,
    e0: Option<f64>,
    barriers: Option<Vec<usize>>,
    equal_wells: Option<CountDoc>,
    layouts: Option<Vec<Vec<usize>>>,
    rate: Option<AxisDoc>,
    t_max: Option<f64>,
    t_points: Option<usize>,
    tolerance: Option<f64>,
    output: Option<String>,
}

fn parse_axis(field: &'static str, doc: AxisDoc) -> Result<Vec<f64>, ConfigError> {
    let values = match doc {
        AxisDoc::Scalar(v) => vec![v],
        AxisDoc::List(v) => v,
        AxisDoc::Range(s) => parse_range(field, &s)?,
    };
    if values.is_empty() {
        return Err(ConfigError::field(field, "axis is empty"));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(ConfigError::field(field, format!("non-finite value {bad}")));
    }
    Ok(values)
}

/// `"start:stop:count"`, both ends included.
fn parse_range(field: &'static str, text: &str) -> Result<Vec<f64>, ConfigError> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let [start, stop, count] = parts.as_slice() else {
        return Err(ConfigError::field(
            field,
            format!("expected \"start:stop:count\", got \"{text}\""),
        ));
    };
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| ConfigError::field(field, format!("`{s}` is not a number")))
    };
    let (start, stop) = (num(start)?, num(stop)?);
    let count: usize = count
        .parse()
        .map_err(|_| ConfigError::field(field, format!("`{count}` is not a point count")))?;
    Ok(match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect(),
    })
}

/// One layout axis entry, kept in the user's terms for the CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutChoice {
    pub layout: BarrierLayout,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGridSpec {
    pub t_max: Option<f64>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    pub n_sites: usize,
    pub deltas: Vec<f64>,
    pub betas: Vec<f64>,
    pub j0: f64,
    pub e0: f64,
    pub layouts: Vec<LayoutChoice>,
    pub rates: Vec<f64>,
    pub time_grid: TimeGridSpec,
    pub tolerance: f64,
    pub output: Option<String>,
    /// Non-comment lines of the source document, echoed into CSV headers.
    pub echo: Vec<String>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let doc: ConfigDoc = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let mode = doc.mode.as_deref().map(str::parse).transpose()?;
        let n_sites = doc.n_sites;
        if n_sites < 2 {
            return Err(ConfigError::field("n_sites", "need at least 2 sites"));
        }

        let layouts = match (doc.barriers, doc.equal_wells, doc.layouts) {
            (None, None, None) => vec![LayoutChoice {
                layout: BarrierLayout::homogeneous(),
                label: "none".into(),
            }],
            (Some(b), None, None) => vec![explicit_layout("barriers", n_sites, b)?],
            (None, None, Some(ls)) => {
                if ls.is_empty() {
                    return Err(ConfigError::field("layouts", "axis is empty"));
                }
                ls.into_iter()
                    .map(|b| explicit_layout("layouts", n_sites, b))
                    .collect::<Result<_, _>>()?
            }
            (None, Some(wells), None) => {
                let counts = match wells {
                    CountDoc::Scalar(k) => vec![k],
                    CountDoc::List(ks) => ks,
                };
                if counts.is_empty() {
                    return Err(ConfigError::field("equal_wells", "axis is empty"));
                }
                counts
                    .into_iter()
                    .map(|k| {
                        BarrierLayout::equal_wells(n_sites, k)
                            .map(|layout| LayoutChoice {
                                layout,
                                label: format!("wells={k}"),
                            })
                            .map_err(|e| ConfigError::field("equal_wells", e.to_string()))
                    })
                    .collect::<Result<_, _>>()?
            }
            _ => {
                return Err(ConfigError::field(
                    "barriers",
                    "give only one of `barriers`, `equal_wells`, `layouts`",
                ))
            }
        };

        let deltas = parse_axis("delta", doc.delta)?;
        let betas = match doc.beta {
            Some(b) => parse_axis("beta", b)?,
            None => vec![0.0],
        };
        let rates = match doc.rate {
            Some(r) => parse_axis("rate", r)?,
            None => Vec::new(),
        };
        if let Some(t) = doc.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return Err(ConfigError::field("t_max", "must be positive"));
            }
        }
        let points = doc.t_points.unwrap_or(DEFAULT_TIME_POINTS);
        if points < 2 {
            return Err(ConfigError::field("t_points", "need at least 2 points"));
        }
        let tolerance = doc.tolerance.unwrap_or(1e-9);
        if !(tolerance > 0.0) {
            return Err(ConfigError::field("tolerance", "must be positive"));
        }

        let config = Self {
            mode,
            n_sites,
            deltas,
            betas,
            j0: doc.j0.unwrap_or(1.0),
            e0: doc.e0.unwrap_or(0.0),
            layouts,
            rates,
            time_grid: TimeGridSpec {
                t_max: doc.t_max,
                points,
            },
            tolerance,
            output: doc.output,
            echo: text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(String::from)
                .collect(),
        };
        // every point must make a valid chain
        for layout in &config.layouts {
            for &delta in &config.deltas {
                for &beta in &config.betas {
                    config
                        .spec(layout, delta, beta)
                        .map_err(|e| ConfigError::field("delta", e.to_string()))?;
                }
            }
        }
        Ok(config)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn spec(&self, layout: &LayoutChoice, delta: f64, beta: f64) -> crate::Result<ChainSpec> {
        ChainSpec::with_units(
            self.n_sites,
            delta,
            self.j0,
            beta,
            layout.layout.clone(),
            self.e0,
        )
    }

    /// Checks the fields `mode` needs and that the config agrees with it.
    pub fn validate_for(&self, mode: Mode) -> Result<(), ConfigError> {
        if let Some(declared) = self.mode {
            if declared != mode {
                return Err(ConfigError::field(
                    "mode",
                    format!("config declares `{declared}` but `{mode}` was requested"),
                ));
            }
        }
        if mode == Mode::Lindblad && self.rates.is_empty() {
            return Err(ConfigError::field(
                "rate",
                "lindblad mode needs a decay rate",
            ));
        }
        if let Some(bad) = self.rates.iter().find(|r| **r < 0.0) {
            return Err(ConfigError::field(
                "rate",
                format!("negative decay rate {bad}"),
            ));
        }
        if matches!(mode, Mode::Roots | Mode::Compare) {
            for choice in &self.layouts {
                let ok = choice
                    .layout
                    .equal_well_count(self.n_sites)
                    .is_some_and(|k| self.n_sites / k >= 2);
                if !ok {
                    return Err(ConfigError::field(
                        "equal_wells",
                        format!(
                            "layout {} of {} sites is not an equal-well partition with wells of 2+ sites",
                            choice.label, self.n_sites
                        ),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn explicit_layout(
    field: &'static str,
    n_sites: usize,
    bonds: Vec<usize>,
) -> Result<LayoutChoice, ConfigError> {
    let layout = BarrierLayout::new(bonds).map_err(|e| ConfigError::field(field, e.to_string()))?;
    if let Some(&b) = layout.bonds().last() {
        if b >= n_sites {
            return Err(ConfigError::field(
                field,
                format!("bond {b} out of range 1..={}", n_sites - 1),
            ));
        }
    }
    Ok(LayoutChoice {
        label: layout.to_string(),
        layout,
    })
}
