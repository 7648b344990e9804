//! TOML experiment files with unit-suffixed physical quantities.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::Spanned;

use crate::error::{Error, Result};
use crate::units::{db_to_lin, dbm_to_w, dbw_to_w, lin_to_db, w_to_dbm};

/// Physical kind of a scenario key, which fixes the accepted units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Power, reported in dBm.
    Power,
    /// Power budget, reported in W.
    Budget,
    Distance,
    Frequency,
    /// Gain, noise figure or SNR given in dB, stored linear.
    Ratio,
    Count,
    Plain,
    Text,
}

impl Kind {
    /// Unit label used in result headers.
    pub fn display_unit(self) -> &'static str {
        match self {
            Kind::Power => "dBm",
            Kind::Budget => "W",
            Kind::Distance => "m",
            Kind::Frequency => "Hz",
            Kind::Ratio => "dB",
            Kind::Count | Kind::Plain | Kind::Text => "-",
        }
    }

    /// Converts a stored value to its display unit.
    pub fn to_display(self, si: f64) -> f64 {
        match self {
            Kind::Power => w_to_dbm(si),
            Kind::Ratio => lin_to_db(si),
            _ => si,
        }
    }

    pub fn from_display(self, shown: f64) -> f64 {
        match self {
            Kind::Power => dbm_to_w(shown),
            Kind::Ratio => db_to_lin(shown),
            _ => shown,
        }
    }

    fn units(self) -> &'static [(&'static str, fn(f64) -> f64)] {
        match self {
            Kind::Power | Kind::Budget => &[
                ("dBm", dbm_to_w),
                ("dBW", dbw_to_w),
                ("kW", |x| x * 1e3),
                ("mW", |x| x * 1e-3),
                ("uW", |x| x * 1e-6),
                ("W", |x| x),
            ],
            Kind::Distance => &[
                ("km", |x| x * 1e3),
                ("cm", |x| x * 1e-2),
                ("mm", |x| x * 1e-3),
                ("m", |x| x),
            ],
            Kind::Frequency => &[
                ("GHz", |x| x * 1e9),
                ("MHz", |x| x * 1e6),
                ("kHz", |x| x * 1e3),
                ("Hz", |x| x),
            ],
            Kind::Ratio => &[("dB", db_to_lin)],
            Kind::Count | Kind::Plain | Kind::Text => &[],
        }
    }

    fn unit_list(self) -> String {
        self.units()
            .iter()
            .map(|u| u.0)
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Which scenario family a key belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Siso,
    Mimo,
    Circuit,
}

/// Recognized scenario keys per family.
pub fn key_kind(family: Family, key: &str) -> Option<Kind> {
    use Kind::*;
    let kind = match (family, key) {
        (Family::Siso, "p_t" | "p_max" | "sigma2_tot" | "sigma2_rx") => Power,
        (Family::Siso, "p_element" | "p_tx_static" | "p_rx_static") => Budget,
        (Family::Siso, "g_max" | "noise_figure") => Ratio,
        (Family::Siso, "n" | "symbols") => Count,
        (Family::Siso, "f_c" | "bandwidth") => Frequency,
        (Family::Siso, "k1" | "k2" | "alpha" | "beta") => Plain,
        (Family::Siso, "d_v" | "d_h" | "d") => Distance,
        (Family::Siso, "tx_link" | "rx_link") => Text,
        (Family::Mimo, "m_t" | "m_r" | "streams" | "n" | "n_active" | "j_alt" | "population") => {
            Count
        }
        (Family::Mimo, "sigma2" | "p_t") => Power,
        (Family::Mimo, "p_ris") => Budget,
        (Family::Mimo, "f_r" | "f_s" | "rho") => Ratio,
        (Family::Mimo, "d_ris_tx" | "d_rx_ris" | "d_tx_rx") => Distance,
        (Family::Mimo, "exponent_direct" | "exponent_ris" | "active_fraction") => Plain,
        (Family::Mimo, "carrier") => Frequency,
        (Family::Circuit, "points") => Count,
        _ => return None,
    };
    Some(kind)
}

/// A resolved scenario value: SI units for physical quantities, linear for
/// ratios.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Text(String),
}

impl Value {
    pub fn number(&self) -> Option<f64> {
        match self {
            Value::Number(x) => Some(*x),
            Value::Text(_) => None,
        }
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Number(x) => write!(f, "{x:e}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

/// Problem size and trial-count preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Desk,
    Paper,
}

impl std::fmt::Display for Scale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scale::Desk => "desk",
            Scale::Paper => "paper",
        })
    }
}

/// Sweep override: the swept key and its values, stored like scenario values.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: String,
    pub values: Vec<f64>,
}

/// Scenario values as written, before they are checked against an experiment.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawOverrides {
    pub entries: BTreeMap<String, (toml::Value, Location)>,
    pub sweep: Option<RawSweep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawSweep {
    pub variable: String,
    pub location: Location,
    pub values: Option<Vec<(toml::Value, Location)>>,
    pub range: Option<(toml::Value, toml::Value, usize, Location)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    experiment: Option<String>,
    trials: Option<usize>,
    seed: Option<u64>,
    scale: Option<Scale>,
    output: Option<PathBuf>,
    scenario: Option<BTreeMap<String, Spanned<toml::Value>>>,
    sweep: Option<FileSweep>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSweep {
    variable: Spanned<String>,
    values: Option<Vec<Spanned<toml::Value>>>,
    start: Option<Spanned<toml::Value>>,
    stop: Option<toml::Value>,
    points: Option<usize>,
}

/// Contents of one experiment file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigFile {
    pub experiment: Option<String>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub scale: Option<Scale>,
    pub output: Option<PathBuf>,
    pub overrides: RawOverrides,
}

fn locate(text: &str, span: Range<usize>) -> Location {
    let before = &text[..span.start.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    Location { line, column }
}

/// Parses an experiment file. Syntax errors and unknown top-level keys are
/// reported with their line and column.
pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let file: FileConfig = toml::from_str(text).map_err(|e| {
        let at = e
            .span()
            .map(|s| format!(" at {}", locate(text, s)))
            .unwrap_or_default();
        Error::Config(format!("{}{at}", e.message()))
    })?;
    let entries = file
        .scenario
        .unwrap_or_default()
        .into_iter()
        .map(|(k, v)| {
            let loc = locate(text, v.span());
            (k, (v.into_inner(), loc))
        })
        .collect();
    let sweep = match file.sweep {
        None => None,
        Some(s) => {
            let location = locate(text, s.variable.span());
            let values = s.values.map(|vs| {
                vs.into_iter()
                    .map(|v| (v.get_ref().clone(), locate(text, v.span())))
                    .collect()
            });
            let range = match (s.start, s.stop, s.points) {
                (None, None, None) => None,
                (Some(start), Some(stop), Some(points)) => {
                    let loc = locate(text, start.span());
                    Some((start.into_inner(), stop, points, loc))
                }
                _ => {
                    return Err(Error::Config(format!(
                        "sweep at {location}: start, stop and points must be given together"
                    )))
                }
            };
            if values.is_some() == range.is_some() {
                return Err(Error::Config(format!(
                    "sweep at {location}: give either values or start/stop/points"
                )));
            }
            Some(RawSweep {
                variable: s.variable.into_inner(),
                location,
                values,
                range,
            })
        }
    };
    Ok(ConfigFile {
        experiment: file.experiment,
        trials: file.trials,
        seed: file.seed,
        scale: file.scale,
        output: file.output,
        overrides: RawOverrides { entries, sweep },
    })
}

pub fn read_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Parses `"<number> <unit>"` (space optional) into SI units.
pub fn parse_quantity(text: &str, kind: Kind) -> Result<f64> {
    let s = text.trim();
    for (unit, to_si) in kind.units() {
        if let Some(number) = s.strip_suffix(unit) {
            if let Ok(x) = number.trim().parse::<f64>() {
                if x.is_finite() {
                    return Ok(to_si(x));
                }
            }
        }
    }
    Err(Error::Config(format!(
        "cannot read '{s}' as a quantity in one of: {}",
        kind.unit_list()
    )))
}

/// Converts a TOML value to a stored scenario value of the given kind.
pub fn convert_value(key: &str, value: &toml::Value, kind: Kind, at: Location) -> Result<Value> {
    let fail = |msg: String| Error::Config(format!("{key} at {at}: {msg}"));
    match (kind, value) {
        (Kind::Text, toml::Value::String(s)) => Ok(Value::Text(s.clone())),
        (Kind::Text, _) => Err(fail("expected a string".into())),
        (Kind::Count, toml::Value::Integer(i)) if *i >= 0 => Ok(Value::Number(*i as f64)),
        (Kind::Count, _) => Err(fail("expected a non-negative integer".into())),
        (Kind::Plain, toml::Value::Integer(i)) => Ok(Value::Number(*i as f64)),
        (Kind::Plain, toml::Value::Float(x)) if x.is_finite() => Ok(Value::Number(*x)),
        (Kind::Plain, _) => Err(fail("expected a number".into())),
        (_, toml::Value::String(s)) => parse_quantity(s, kind)
            .map(Value::Number)
            .map_err(|e| fail(e.to_string())),
        (_, toml::Value::Integer(_) | toml::Value::Float(_)) => Err(fail(format!(
            "missing unit; write it as a string such as \"{value} {}\"",
            kind.units()[0].0
        ))),
        _ => Err(fail(format!(
            "expected a quantity string with a unit in: {}",
            kind.unit_list()
        ))),
    }
}
