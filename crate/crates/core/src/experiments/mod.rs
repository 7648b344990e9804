//! Seeded Monte Carlo experiments that regenerate the figure and table data
//! as CSV.
//!
//! An experiment sweeps one scenario key and evaluates a set of series
//! (curves) at each point. Every trial draws from its own random stream keyed
//! by `(seed, trial index)` and results are reduced in trial order, so output
//! bytes do not depend on thread scheduling.

pub mod config;
pub mod settings;
pub mod table;
pub mod trials;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::mimo_ao::SurfaceModel;
use crate::td_unitcell::{fit_envelope, CircuitParams};

pub use config::{
    key_kind, parse_config, read_config, ConfigFile, Family, Kind, Scale, SweepSpec, Value,
};
pub use settings::Setting;
pub use table::{emit_csv, parse_csv, Column, ResultTable};
use trials::{reduce, run_trial, Method, Prepared};

/// Registered experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExperimentInfo {
    pub id: &'static str,
    pub family: Family,
    pub description: &'static str,
}

pub const EXPERIMENTS: &[ExperimentInfo] = &[
    ExperimentInfo {
        id: "gamma-fit-table",
        family: Family::Siso,
        description: "Gamma shape and scale of the amplified-link SNR vs transmit power",
    },
    ExperimentInfo {
        id: "ber-vs-pt",
        family: Family::Siso,
        description: "Simulated and analytic BPSK error rate vs transmit power",
    },
    ExperimentInfo {
        id: "rate-vs-dh",
        family: Family::Siso,
        description: "Amplified and passive rates vs horizontal surface position",
    },
    ExperimentInfo {
        id: "rate-vs-n",
        family: Family::Siso,
        description: "Amplified-link rate and selected gain vs elements per surface",
    },
    ExperimentInfo {
        id: "ee-sweeps",
        family: Family::Siso,
        description: "Energy efficiency, rate and total power vs n, p_t or p_max",
    },
    ExperimentInfo {
        id: "envelope-fig",
        family: Family::Circuit,
        description: "Exact and fitted amplitude bounds vs phase",
    },
    ExperimentInfo {
        id: "rate-vs-rho",
        family: Family::Mimo,
        description: "MIMO rate of AO, PAI, GA and PSO vs normalized SNR",
    },
    ExperimentInfo {
        id: "rate-vs-distance",
        family: Family::Mimo,
        description:
            "MIMO rate of AO, PAI, GA and PSO vs receiver-surface distance at fixed normalized SNR",
    },
    ExperimentInfo {
        id: "rate-vs-pris",
        family: Family::Mimo,
        description: "MIMO AO rate vs surface power budget for several active-element fractions",
    },
];

pub fn experiment_info(id: &str) -> Result<&'static ExperimentInfo> {
    EXPERIMENTS.iter().find(|e| e.id == id).ok_or_else(|| {
        let known: Vec<&str> = EXPERIMENTS.iter().map(|e| e.id).collect();
        Error::Config(format!(
            "unknown experiment '{id}' (known: {})",
            known.join(", ")
        ))
    })
}

/// Default trial count per experiment and scale.
pub fn default_trials(id: &str, scale: Scale) -> usize {
    let (desk, paper) = match id {
        "gamma-fit-table" => (10_000, 100_000),
        "ber-vs-pt" => (1_000, 10_000),
        "envelope-fig" => (1, 1),
        "rate-vs-rho" | "rate-vs-distance" | "rate-vs-pris" => (50, 200),
        _ => (2_000, 10_000),
    };
    match scale {
        Scale::Desk => desk,
        Scale::Paper => paper,
    }
}

/// Fully resolved experiment request.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub id: String,
    pub trials: usize,
    pub seed: u64,
    pub scale: Scale,
    /// Scenario values in SI units (ratios linear).
    pub overrides: BTreeMap<String, Value>,
    pub sweep: Option<SweepSpec>,
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    /// Defaults for `id` at desk scale, seed 1.
    pub fn new(id: &str) -> Result<Self> {
        Self::with_scale(id, Scale::Desk)
    }

    pub fn with_scale(id: &str, scale: Scale) -> Result<Self> {
        experiment_info(id)?;
        Ok(Self {
            id: id.to_string(),
            trials: default_trials(id, scale),
            seed: 1,
            scale,
            overrides: BTreeMap::new(),
            sweep: None,
            output: None,
        })
    }

    pub fn family(&self) -> Result<Family> {
        Ok(experiment_info(&self.id)?.family)
    }

    /// Sets a scenario key from text as it would appear in a config file,
    /// e.g. `set("p_t", "30 dBm")` or `set("n", "64")`.
    pub fn set(&mut self, key: &str, text: &str) -> Result<()> {
        let kind = key_kind(self.family()?, key).ok_or_else(|| {
            Error::Config(format!("unknown scenario key '{key}' for {}", self.id))
        })?;
        let value = match kind {
            Kind::Text => Value::Text(text.to_string()),
            Kind::Count | Kind::Plain => Value::Number(
                text.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("{key}: '{text}' is not a number")))?,
            ),
            _ => Value::Number(config::parse_quantity(text, kind)?),
        };
        self.overrides.insert(key.to_string(), value);
        Ok(())
    }

    /// Resolves a parsed file. `id` supplies the experiment when the file
    /// does not name one and must agree with it when it does.
    pub fn from_config(file: ConfigFile, id: Option<&str>) -> Result<Self> {
        let id = match (file.experiment.as_deref(), id) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Config(format!(
                    "config names experiment '{a}' but '{b}' was requested"
                )))
            }
            (Some(a), _) | (None, Some(a)) => a.to_string(),
            (None, None) => return Err(Error::Config("no experiment named".into())),
        };
        let scale = file.scale.unwrap_or_default();
        let mut spec = Self::with_scale(&id, scale)?;
        let family = spec.family()?;
        if let Some(t) = file.trials {
            spec.trials = t;
        }
        if let Some(s) = file.seed {
            spec.seed = s;
        }
        spec.output = file.output;
        for (key, (value, at)) in &file.overrides.entries {
            let kind = key_kind(family, key).ok_or_else(|| {
                Error::Config(format!("unknown scenario key '{key}' at {at} for {id}"))
            })?;
            spec.overrides
                .insert(key.clone(), config::convert_value(key, value, kind, *at)?);
        }
        if let Some(raw) = &file.overrides.sweep {
            spec.sweep = Some(resolve_sweep(family, raw)?);
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the request without running it.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        build_plan(self).map(|_| ())
    }
}

fn resolve_sweep(family: Family, raw: &config::RawSweep) -> Result<SweepSpec> {
    let kind = key_kind(family, &raw.variable).ok_or_else(|| {
        Error::Config(format!(
            "sweep variable '{}' at {} is not a scenario key",
            raw.variable, raw.location
        ))
    })?;
    if kind == Kind::Text {
        return Err(Error::Config(format!(
            "sweep variable '{}' is not numeric",
            raw.variable
        )));
    }
    let num = |v: &toml::Value, at| -> Result<f64> {
        config::convert_value(&raw.variable, v, kind, at)?
            .number()
            .ok_or_else(|| Error::Config("non-numeric sweep value".into()))
    };
    let values = if let Some(list) = &raw.values {
        list.iter()
            .map(|(v, at)| num(v, *at))
            .collect::<Result<Vec<_>>>()?
    } else if let Some((start, stop, points, at)) = &raw.range {
        if *points < 1 {
            return Err(Error::Config(format!("sweep at {at}: points must be >= 1")));
        }
        let (a, b) = (
            kind.to_display(num(start, *at)?),
            kind.to_display(num(stop, *at)?),
        );
        linspace(a, b, *points)
            .into_iter()
            .map(|x| kind.from_display(x))
            .collect()
    } else {
        Vec::new()
    };
    if values.is_empty() {
        return Err(Error::Config(format!(
            "sweep at {} has no values",
            raw.location
        )));
    }
    Ok(SweepSpec {
        variable: raw.variable.clone(),
        values,
    })
}

/// Reads and resolves an experiment file that names its experiment.
pub fn load_config(path: &Path) -> Result<ExperimentSpec> {
    ExperimentSpec::from_config(read_config(path)?, None)
}

fn linspace(a: f64, b: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![a];
    }
    (0..points)
        .map(|i| a + (b - a) * i as f64 / (points - 1) as f64)
        .collect()
}

fn steps(a: f64, b: f64, step: f64) -> Vec<f64> {
    let count = ((b - a) / step).round() as usize + 1;
    (0..count).map(|i| a + step * i as f64).collect()
}

/// One curve: its label, the keyed values that define it, and its method.
#[derive(Debug, Clone)]
struct Series {
    label: String,
    assign: Vec<(String, Value)>,
    method: Method,
}

struct Plan {
    family: Family,
    base: Setting,
    sweep_key: String,
    sweep_kind: Kind,
    sweep_unit: String,
    /// Sweep values in SI units.
    points: Vec<f64>,
    series: Vec<Series>,
    circuit: Option<CircuitParams>,
}

/// Display-unit values of one key that define alternative curves.
struct Axis {
    key: &'static str,
    values: Vec<f64>,
}

fn label_part(key: &str, kind: Kind, shown: f64) -> String {
    let unit = kind.display_unit();
    let unit = if unit == "-" { "" } else { unit };
    format!("{key}{shown}{unit}")
}

/// Cross product of the axes the user has not pinned.
fn grid(family: Family, pinned: &BTreeSet<String>, axes: &[Axis], method: Method) -> Vec<Series> {
    let mut out = vec![Series {
        label: String::new(),
        assign: Vec::new(),
        method,
    }];
    for axis in axes.iter().filter(|a| !pinned.contains(a.key)) {
        let kind = key_kind(family, axis.key).expect("registered axis key");
        out = out
            .into_iter()
            .flat_map(|s| {
                axis.values.iter().map(move |&shown| {
                    let mut next = s.clone();
                    let part = label_part(axis.key, kind, shown);
                    next.label = if next.label.is_empty() {
                        part
                    } else {
                        format!("{}_{part}", next.label)
                    };
                    next.assign.push((
                        axis.key.to_string(),
                        Value::Number(kind.from_display(shown)),
                    ));
                    next
                })
            })
            .collect();
    }
    out
}

fn prefixed(mut series: Vec<Series>, prefix: &str) -> Vec<Series> {
    for s in &mut series {
        s.label = if s.label.is_empty() {
            prefix.to_string()
        } else {
            format!("{prefix}_{}", s.label)
        };
    }
    series
}

fn build_plan(spec: &ExperimentSpec) -> Result<Plan> {
    let info = experiment_info(&spec.id)?;
    let family = info.family;
    let mut base = Setting::base(family, spec.scale);
    let pinned: BTreeSet<String> = spec.overrides.keys().cloned().collect();
    let default_if_free = |base: &mut Setting, key: &str, value: Value| -> Result<()> {
        if !pinned.contains(key) {
            base.apply(key, &value)?;
        }
        Ok(())
    };
    match spec.id.as_str() {
        "gamma-fit-table" | "ber-vs-pt" => {
            default_if_free(&mut base, "tx_link", Value::Text("los".into()))?;
            default_if_free(&mut base, "rx_link", Value::Text("nlos".into()))?;
            if spec.id == "ber-vs-pt" {
                default_if_free(
                    &mut base,
                    "p_max",
                    Value::Number(crate::units::dbm_to_w(10.0)),
                )?;
            }
        }
        "rate-vs-distance" if !pinned.contains("p_t") => {
            default_if_free(&mut base, "rho", Value::Number(1e-3))?;
        }
        _ => {}
    }
    for (k, v) in &spec.overrides {
        base.apply(k, v)?;
    }
    if family == Family::Mimo && pinned.contains("rho") && pinned.contains("p_t") {
        return Err(Error::Config("set either rho or p_t, not both".into()));
    }
    let mut check = base.clone();
    check.finalize()?;

    let siso_n = [16.0, 32.0, 64.0, 96.0, 128.0, 192.0, 256.0, 384.0, 512.0];
    let p_t_grid = steps(-10.0, 30.0, 5.0);
    let (allowed, default_key): (&[&str], &str) = match spec.id.as_str() {
        "gamma-fit-table" | "ber-vs-pt" => (&["p_t"], "p_t"),
        "rate-vs-dh" => (&["d_h"], "d_h"),
        "rate-vs-n" => (&["n"], "n"),
        "ee-sweeps" => (&["n", "p_t", "p_max"], "n"),
        "envelope-fig" => (&[], "phase"),
        "rate-vs-rho" => (&["rho"], "rho"),
        "rate-vs-distance" => (&["d_rx_ris"], "d_rx_ris"),
        "rate-vs-pris" => (&["p_ris"], "p_ris"),
        _ => unreachable!("registered id"),
    };
    let sweep_key = match &spec.sweep {
        Some(s) if !allowed.contains(&s.variable.as_str()) => {
            return Err(Error::Config(format!(
                "{} cannot sweep '{}' (allowed: {})",
                spec.id,
                s.variable,
                if allowed.is_empty() {
                    "none".to_string()
                } else {
                    allowed.join(", ")
                }
            )))
        }
        Some(s) => s.variable.clone(),
        None => default_key.to_string(),
    };
    if pinned.contains(&sweep_key) {
        return Err(Error::Config(format!(
            "'{sweep_key}' is swept and cannot also be fixed in [scenario]"
        )));
    }

    let mut circuit = None;
    let (sweep_kind, sweep_unit, default_points): (Kind, String, Vec<f64>) =
        if family == Family::Circuit {
            let c = CircuitParams::active_default();
            let arc = crate::td_unitcell::support_arc(&c)?;
            let Setting::Circuit(cs) = &check else {
                unreachable!()
            };
            circuit = Some(c);
            (Kind::Plain, "rad".into(), linspace(arc.0, arc.1, cs.points))
        } else {
            let kind = key_kind(family, &sweep_key).expect("allowed sweep key is registered");
            let shown: Vec<f64> = match (spec.id.as_str(), sweep_key.as_str()) {
                (_, "p_t") if spec.id == "ee-sweeps" => steps(0.0, 40.0, 5.0),
                (_, "p_t") => p_t_grid.clone(),
                (_, "p_max") => steps(0.0, 50.0, 5.0),
                (_, "n") => siso_n.to_vec(),
                (_, "d_h") => {
                    let Setting::Siso(s) = &check else {
                        unreachable!()
                    };
                    linspace(0.0, s.scenario.geometry.d, 21)
                }
                (_, "rho") => steps(-30.0, 10.0, 10.0),
                (_, "d_rx_ris") => vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
                (_, "p_ris") => {
                    let Setting::Mimo(m) = &check else {
                        unreachable!()
                    };
                    let scale = m.scenario.n as f64 / 64.0;
                    linspace(0.9, 2.55, 12)
                        .into_iter()
                        .map(|p| p * scale)
                        .collect()
                }
                _ => unreachable!("allowed sweep key"),
            };
            let points = shown.into_iter().map(|x| kind.from_display(x)).collect();
            (kind, kind.display_unit().to_string(), points)
        };
    let points = match &spec.sweep {
        Some(s) => s.values.clone(),
        None => default_points,
    };

    let axis = |key: &'static str, values: &[f64]| Axis {
        key,
        values: values.to_vec(),
    };
    let series = match spec.id.as_str() {
        "gamma-fit-table" => grid(
            family,
            &pinned,
            &[axis("n", &[64.0, 256.0]), axis("p_max", &[10.0, 20.0])],
            Method::GammaFit,
        ),
        "ber-vs-pt" => grid(
            family,
            &pinned,
            &[axis("n", &[32.0, 64.0, 128.0])],
            Method::Ber,
        ),
        "rate-vs-dh" => grid(
            family,
            &pinned,
            &[axis("n", &[32.0, 64.0, 128.0])],
            Method::PlacementRates,
        ),
        "rate-vs-n" => grid(
            family,
            &pinned,
            &[axis("p_t", &[10.0, 20.0]), axis("p_max", &[10.0, 20.0])],
            Method::SizeRates,
        ),
        "ee-sweeps" => {
            let (curve_key, values): (&'static str, &[f64]) = if sweep_key == "p_max" {
                ("p_t", &[10.0, 20.0, 30.0])
            } else {
                ("p_max", &[10.0, 20.0, 50.0])
            };
            let mut out = prefixed(
                grid(
                    family,
                    &pinned,
                    &[axis(curve_key, values)],
                    Method::EnergyActive,
                ),
                "active",
            );
            let passive_axes: Vec<Axis> = if curve_key == "p_t" {
                vec![axis("p_t", values)]
            } else {
                Vec::new()
            };
            out.extend(prefixed(
                grid(family, &pinned, &passive_axes, Method::EnergyPassive),
                "passive",
            ));
            out
        }
        "envelope-fig" => vec![Series {
            label: String::new(),
            assign: Vec::new(),
            method: Method::Envelope,
        }],
        "rate-vs-rho" | "rate-vs-distance" => [
            ("ao", Method::Ao),
            ("pai", Method::Pai),
            ("ga", Method::Ga),
            ("pso", Method::Pso),
        ]
        .into_iter()
        .map(|(label, method)| Series {
            label: label.into(),
            assign: Vec::new(),
            method,
        })
        .collect(),
        "rate-vs-pris" => {
            let fractions = [0.25, 0.5, 0.75, 1.0];
            if pinned.contains("n_active") || pinned.contains("active_fraction") {
                vec![Series {
                    label: String::new(),
                    assign: Vec::new(),
                    method: Method::Ao,
                }]
            } else {
                fractions
                    .iter()
                    .map(|f| Series {
                        label: format!("nact{}pct", (f * 100.0) as u32),
                        assign: vec![("active_fraction".into(), Value::Number(*f))],
                        method: Method::Ao,
                    })
                    .collect()
            }
        }
        _ => unreachable!("registered id"),
    };
    Ok(Plan {
        family,
        base,
        sweep_key,
        sweep_kind,
        sweep_unit,
        points,
        series,
        circuit,
    })
}

impl Plan {
    fn columns(&self) -> Vec<Column> {
        let mut cols = vec![Column::new(self.sweep_key.clone(), self.sweep_unit.clone())];
        for s in &self.series {
            for m in s.method.metrics() {
                let name = if s.label.is_empty() {
                    m.name.to_string()
                } else {
                    format!("{}_{}", s.label, m.name)
                };
                if s.method.with_se() {
                    cols.push(Column::new(format!("{name}_mean"), m.unit));
                    cols.push(Column::new(format!("{name}_se"), m.unit));
                } else {
                    cols.push(Column::new(name, m.unit));
                }
            }
        }
        cols
    }

    fn prepare(&self, point: f64) -> Result<Vec<Prepared>> {
        self.series
            .iter()
            .map(|s| {
                if self.family == Family::Circuit {
                    let circuit = self
                        .circuit
                        .expect("circuit experiments carry their circuit");
                    return Ok(Prepared::Envelope {
                        fit: fit_envelope(&circuit)?,
                        circuit,
                        phase: point,
                    });
                }
                let mut setting = self.base.clone();
                for (k, v) in &s.assign {
                    setting.apply(k, v)?;
                }
                setting.apply(&self.sweep_key, &Value::Number(point))?;
                setting.finalize()?;
                Ok(match setting {
                    Setting::Siso(x) => Prepared::Siso(x),
                    Setting::Mimo(m) => {
                        let surface = SurfaceModel::from_scenario(&m.scenario)?;
                        surface.check_budget()?;
                        Prepared::Mimo(m, surface)
                    }
                    Setting::Circuit(_) => unreachable!("handled above"),
                })
            })
            .collect()
    }

    fn evaluate_point(&self, point: f64, trials: usize, seed: u64) -> Result<Vec<f64>> {
        let prepared = self.prepare(point)?;
        let pairs: Vec<(Method, &Prepared)> = self
            .series
            .iter()
            .map(|s| s.method)
            .zip(prepared.iter())
            .collect();
        let run = |t: usize| run_trial(&pairs, seed, t as u64);
        #[cfg(feature = "parallel")]
        let outcomes: Vec<Result<Vec<Vec<f64>>>> = {
            use rayon::prelude::*;
            (0..trials).into_par_iter().map(run).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let outcomes: Vec<Result<Vec<Vec<f64>>>> = (0..trials).map(run).collect();
        let mut per_trial = Vec::with_capacity(trials);
        for (t, outcome) in outcomes.into_iter().enumerate() {
            per_trial.push(outcome.map_err(|e| Error::AtIteration {
                iteration: t,
                source: Box::new(e),
            })?);
        }
        let mut row = Vec::new();
        for (k, s) in self.series.iter().enumerate() {
            let samples: Vec<Vec<f64>> = per_trial.iter().map(|t| t[k].clone()).collect();
            for (value, se) in reduce(s.method, &samples)? {
                row.push(value);
                if s.method.with_se() {
                    row.push(se);
                }
            }
        }
        Ok(row)
    }
}

fn build_version() -> String {
    format!(
        "{} ({})",
        env!("CARGO_PKG_VERSION"),
        env!("ACTIVE_RIS_GIT_DESCRIBE")
    )
}

/// Runs every sweep point. A point whose evaluation fails becomes a NaN row
/// with a failure note; the rest of the table is still produced.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    let start = Instant::now();
    let plan = build_plan(spec)?;
    let trials = if plan.family == Family::Circuit {
        1
    } else {
        spec.trials
    };
    let mut table = ResultTable::new(plan.columns());
    table.metadata = vec![
        ("experiment".into(), spec.id.clone()),
        ("version".into(), build_version()),
        ("seed".into(), spec.seed.to_string()),
        ("trials".into(), trials.to_string()),
        ("scale".into(), spec.scale.to_string()),
    ];
    for (k, v) in &spec.overrides {
        table
            .metadata
            .push((format!("scenario.{k}"), v.to_string()));
    }
    let width = table.columns.len();
    for (i, &point) in plan.points.iter().enumerate() {
        let shown = plan.sweep_kind.to_display(point);
        match plan.evaluate_point(point, trials, spec.seed) {
            Ok(values) => {
                let mut row = vec![shown];
                row.extend(values);
                table.push_row(row)?;
            }
            Err(e) => {
                let mut row = vec![f64::NAN; width];
                row[0] = shown;
                table.push_row(row)?;
                table.failures.push((i, e.to_string()));
            }
        }
    }
    table.wall_time = start.elapsed().as_secs_f64();
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_registered_experiment_plans() {
        for info in EXPERIMENTS {
            let spec = ExperimentSpec::new(info.id).unwrap();
            let plan = build_plan(&spec).unwrap();
            assert!(
                !plan.points.is_empty() && !plan.series.is_empty(),
                "{}",
                info.id
            );
            let cols = plan.columns();
            let names: BTreeSet<&str> = cols.iter().map(|c| c.name.as_str()).collect();
            assert_eq!(names.len(), cols.len(), "duplicate columns in {}", info.id);
        }
    }

    #[test]
    fn zero_trials_rejected() {
        let mut spec = ExperimentSpec::new("rate-vs-rho").unwrap();
        spec.trials = 0;
        assert!(matches!(run_experiment(&spec), Err(Error::Config(_))));
    }

    #[test]
    fn pinned_axis_collapses_series() {
        let mut spec = ExperimentSpec::new("gamma-fit-table").unwrap();
        spec.set("n", "64").unwrap();
        let plan = build_plan(&spec).unwrap();
        assert_eq!(plan.series.len(), 2);
        spec.set("p_max", "10 dBm").unwrap();
        let plan = build_plan(&spec).unwrap();
        assert_eq!(plan.series.len(), 1);
        assert_eq!(plan.columns()[1].name, "k_mean");
    }

    #[test]
    fn swept_key_cannot_be_fixed() {
        let mut spec = ExperimentSpec::new("ber-vs-pt").unwrap();
        spec.set("p_t", "10 dBm").unwrap();
        assert!(spec.validate().is_err());
    }

    #[test]
    fn sweep_variable_must_be_allowed() {
        let mut spec = ExperimentSpec::new("ee-sweeps").unwrap();
        spec.sweep = Some(SweepSpec {
            variable: "p_max".into(),
            values: vec![0.01, 0.1],
        });
        let plan = build_plan(&spec).unwrap();
        assert_eq!(plan.columns()[0].header(), "p_max[dBm]");
        spec.sweep = Some(SweepSpec {
            variable: "d_h".into(),
            values: vec![1.0],
        });
        assert!(spec.validate().is_err());
    }

    #[test]
    fn infeasible_point_is_marked_not_fatal() {
        let mut spec = ExperimentSpec::new("rate-vs-pris").unwrap();
        spec.trials = 1;
        spec.set("n", "4").unwrap();
        spec.set("m_t", "2").unwrap();
        spec.set("m_r", "2").unwrap();
        spec.set("streams", "1").unwrap();
        spec.set("active_fraction", "1").unwrap();
        spec.sweep = Some(SweepSpec {
            variable: "p_ris".into(),
            values: vec![0.01, 0.1],
        });
        let table = run_experiment(&spec).unwrap();
        assert_eq!(table.rows.len(), 2);
        assert_eq!(table.failures.len(), 1);
        assert_eq!(table.failures[0].0, 0);
        assert!(table.rows[0][1].is_nan() && table.rows[1][1].is_finite());
    }

    #[test]
    fn config_file_resolution() {
        let text = "experiment = \"rate-vs-dh\"\ntrials = 3\nseed = 9\n[scenario]\nd = \"100 m\"\nn = 64\n";
        let spec = ExperimentSpec::from_config(parse_config(text).unwrap(), None).unwrap();
        assert_eq!((spec.trials, spec.seed), (3, 9));
        let plan = build_plan(&spec).unwrap();
        assert_eq!(plan.points.last().copied(), Some(100.0));
        assert_eq!(plan.series.len(), 1);
        let bad =
            parse_config("experiment = \"rate-vs-dh\"\n[scenario]\nrho = \"3 dB\"\n").unwrap();
        assert!(ExperimentSpec::from_config(bad, None)
            .unwrap_err()
            .to_string()
            .contains("rho"));
        let other = parse_config("experiment = \"rate-vs-dh\"\n").unwrap();
        assert!(ExperimentSpec::from_config(other, Some("rate-vs-n")).is_err());
    }
}
