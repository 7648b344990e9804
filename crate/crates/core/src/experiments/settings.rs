//! Scenario families and how keyed values are applied to them.

use crate::channel::LosMode;
use crate::error::{Error, Result};
use crate::mimo_ao::{AoOptions, HeuristicOptions, MimoScenario};
use crate::power_ee::PowerModelParams;
use crate::siso_pa::SisoScenario;

use super::config::{Family, Scale, Value};

/// Two-surface amplifier link plus its power model.
#[derive(Debug, Clone, PartialEq)]
pub struct SisoSetting {
    pub scenario: SisoScenario,
    pub power: PowerModelParams,
    /// BPSK symbols simulated per trial.
    pub symbols: usize,
}

/// MIMO surface scenario plus solver settings. A normalized SNR, when set,
/// overrides the transmit power after all other keys are applied.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoSetting {
    pub scenario: MimoScenario,
    pub rho: Option<f64>,
    pub active_fraction: Option<f64>,
    pub n_active_set: bool,
    pub ao: AoOptions,
    pub heuristics: HeuristicOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSetting {
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Setting {
    Siso(SisoSetting),
    Mimo(MimoSetting),
    Circuit(CircuitSetting),
}

fn number(key: &str, value: &Value) -> Result<f64> {
    value
        .number()
        .ok_or_else(|| Error::Config(format!("{key}: expected a number")))
}

fn count(key: &str, value: &Value) -> Result<usize> {
    let x = number(key, value)?;
    if x < 0.0 || x.fract() != 0.0 {
        return Err(Error::Config(format!(
            "{key}: expected a non-negative integer, got {x}"
        )));
    }
    Ok(x as usize)
}

impl Setting {
    pub fn base(family: Family, scale: Scale) -> Self {
        match family {
            Family::Siso => Setting::Siso(SisoSetting {
                scenario: SisoScenario::default(),
                power: PowerModelParams::default(),
                symbols: 1000,
            }),
            Family::Mimo => Setting::Mimo(MimoSetting {
                scenario: match scale {
                    Scale::Desk => MimoScenario::desk(),
                    Scale::Paper => MimoScenario::default(),
                },
                rho: None,
                active_fraction: None,
                n_active_set: false,
                ao: AoOptions::default(),
                heuristics: HeuristicOptions::default(),
            }),
            Family::Circuit => Setting::Circuit(CircuitSetting { points: 256 }),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Setting::Siso(_) => Family::Siso,
            Setting::Mimo(_) => Family::Mimo,
            Setting::Circuit(_) => Family::Circuit,
        }
    }

    /// Applies one keyed value. Values are in SI units, ratios linear.
    pub fn apply(&mut self, key: &str, value: &Value) -> Result<()> {
        match self {
            Setting::Siso(s) => s.apply(key, value),
            Setting::Mimo(s) => s.apply(key, value),
            Setting::Circuit(s) => match key {
                "points" => {
                    s.points = count(key, value)?;
                    Ok(())
                }
                _ => Err(Error::Config(format!("unknown key '{key}'"))),
            },
        }
    }

    /// Resolves derived quantities and validates.
    pub fn finalize(&mut self) -> Result<()> {
        match self {
            Setting::Siso(s) => {
                s.scenario.validate()?;
                s.power.validate()?;
                if s.symbols == 0 {
                    return Err(Error::Config("symbols must be >= 1".into()));
                }
                Ok(())
            }
            Setting::Mimo(s) => s.finalize(),
            Setting::Circuit(s) => {
                if s.points < 2 {
                    return Err(Error::Config("points must be >= 2".into()));
                }
                Ok(())
            }
        }
    }
}

impl SisoSetting {
    fn apply(&mut self, key: &str, value: &Value) -> Result<()> {
        let s = &mut self.scenario;
        let p = &mut self.power;
        match key {
            "tx_link" | "rx_link" => {
                let Value::Text(text) = value else {
                    return Err(Error::Config(format!(
                        "{key}: expected random, los or nlos"
                    )));
                };
                let mode: LosMode = text.parse()?;
                if key == "tx_link" {
                    s.tx_link = mode;
                } else {
                    s.rx_link = mode;
                }
                return Ok(());
            }
            "n" => s.n = count(key, value)?,
            "symbols" => self.symbols = count(key, value)?,
            _ => {
                let x = number(key, value)?;
                match key {
                    "p_t" => s.p_t = x,
                    "p_max" => s.p_max = x,
                    "sigma2_tot" => s.sigma2_tot = x,
                    "sigma2_rx" => s.sigma2_rx = x,
                    "g_max" => s.g_max = x,
                    "noise_figure" => s.noise_figure = x,
                    "f_c" => s.f_c = x / 1e9,
                    "bandwidth" => s.bandwidth = x,
                    "k1" => s.k1 = x,
                    "k2" => s.k2 = x,
                    "d_v" => s.geometry.d_v = x,
                    "d_h" => s.geometry.d_h = x,
                    "d" => s.geometry.d = x,
                    "p_element" => p.p_element = x,
                    "p_tx_static" => p.p_tx_static = x,
                    "p_rx_static" => p.p_rx_static = x,
                    "alpha" => p.alpha = x,
                    "beta" => p.beta = x,
                    _ => return Err(Error::Config(format!("unknown key '{key}'"))),
                }
            }
        }
        Ok(())
    }
}

impl MimoSetting {
    fn apply(&mut self, key: &str, value: &Value) -> Result<()> {
        let s = &mut self.scenario;
        match key {
            "m_t" => s.m_t = count(key, value)?,
            "m_r" => s.m_r = count(key, value)?,
            "streams" => s.streams = count(key, value)?,
            "n" => s.n = count(key, value)?,
            "n_active" => {
                s.n_active = count(key, value)?;
                self.n_active_set = true;
            }
            "j_alt" => self.ao.j_alt = count(key, value)?,
            "population" => self.heuristics.population = count(key, value)?,
            _ => {
                let x = number(key, value)?;
                match key {
                    "sigma2" => s.sigma2 = x,
                    "p_t" => s.p_t = x,
                    "p_ris" => s.p_ris = x,
                    "f_r" => s.f_r = x,
                    "f_s" => s.f_s = x,
                    "rho" => self.rho = Some(x),
                    "d_ris_tx" => s.d_ris_tx = x,
                    "d_rx_ris" => s.d_rx_ris = x,
                    "d_tx_rx" => s.d_tx_rx = x,
                    "exponent_direct" => s.exponent_direct = x,
                    "exponent_ris" => s.exponent_ris = x,
                    "carrier" => s.carrier = x,
                    "active_fraction" => {
                        if !(0.0..=1.0).contains(&x) {
                            return Err(Error::Config(format!(
                                "active_fraction {x} outside [0, 1]"
                            )));
                        }
                        self.active_fraction = Some(x);
                    }
                    _ => return Err(Error::Config(format!("unknown key '{key}'"))),
                }
            }
        }
        Ok(())
    }

    fn finalize(&mut self) -> Result<()> {
        let s = &mut self.scenario;
        if let Some(f) = self.active_fraction {
            if self.n_active_set {
                return Err(Error::Config(
                    "set either n_active or active_fraction".into(),
                ));
            }
            s.n_active = (f * s.n as f64).round() as usize;
        } else if !self.n_active_set {
            s.n_active = s.n;
        }
        if let Some(rho) = self.rho {
            *s = s.with_rho(rho);
        }
        s.validate()?;
        if self.ao.j_alt == 0 || self.heuristics.population < 2 {
            return Err(Error::Config(
                "j_alt must be >= 1 and population >= 2".into(),
            ));
        }
        Ok(())
    }
}
