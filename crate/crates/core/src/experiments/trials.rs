//! Per-trial evaluation and per-point reduction of every series method.

use crate::error::{Error, Result};
use crate::mimo_ao::{
    ao_solve, ga_solve, pai_solve, pso_solve, sample_channels, AoState, HeuristicOptions,
    SurfaceModel,
};
use crate::power_ee::{energy_efficiency, total_power_active, total_power_passive};
use crate::rng::stream;
use crate::siso_pa::{bpsk_symbol_errors, rate, sample_trial};
use crate::stats::{bep_bpsk, fit_gamma_moments, mean_and_variance};
use crate::td_unitcell::{amplitude_bounds_exact, EnvelopeFit};
use crate::units::lin_to_db;

use super::settings::{MimoSetting, SisoSetting};

/// What a series computes in each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Moment-matched Gamma fit of the amplified-link SNR.
    GammaFit,
    /// Simulated and analytic BPSK error rates.
    Ber,
    /// Rates of the amplified link (optimal and fixed gain) and the passive
    /// baseline.
    PlacementRates,
    /// Amplified-link rate and selected gain.
    SizeRates,
    EnergyActive,
    EnergyPassive,
    /// Exact and fitted amplitude bounds at one phase.
    Envelope,
    Ao,
    Pai,
    Ga,
    Pso,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Metric {
    pub name: &'static str,
    pub unit: &'static str,
}

const RATE_UNIT: &str = "bit/s/Hz";

impl Method {
    pub fn metrics(self) -> &'static [Metric] {
        match self {
            Method::GammaFit => &[
                Metric {
                    name: "k",
                    unit: "-",
                },
                Metric {
                    name: "nu",
                    unit: "-",
                },
            ],
            Method::Ber => &[
                Metric {
                    name: "ber_sim",
                    unit: "-",
                },
                Metric {
                    name: "ber_theory",
                    unit: "-",
                },
            ],
            Method::PlacementRates => &[
                Metric {
                    name: "active",
                    unit: RATE_UNIT,
                },
                Metric {
                    name: "fixed_gain",
                    unit: RATE_UNIT,
                },
                Metric {
                    name: "passive",
                    unit: RATE_UNIT,
                },
            ],
            Method::SizeRates => &[
                Metric {
                    name: "rate",
                    unit: RATE_UNIT,
                },
                Metric {
                    name: "gain",
                    unit: "dB",
                },
            ],
            Method::EnergyActive | Method::EnergyPassive => &[
                Metric {
                    name: "ee",
                    unit: "bit/J",
                },
                Metric {
                    name: "rate",
                    unit: RATE_UNIT,
                },
                Metric {
                    name: "p_tot",
                    unit: "W",
                },
            ],
            Method::Envelope => &[
                Metric {
                    name: "alpha_min_exact",
                    unit: "-",
                },
                Metric {
                    name: "alpha_max_exact",
                    unit: "-",
                },
                Metric {
                    name: "alpha_min_fit",
                    unit: "-",
                },
                Metric {
                    name: "alpha_max_fit",
                    unit: "-",
                },
            ],
            Method::Ao | Method::Pai | Method::Ga | Method::Pso => &[Metric {
                name: "rate",
                unit: RATE_UNIT,
            }],
        }
    }

    /// Monte Carlo metrics carry a standard error; deterministic curves do
    /// not.
    pub fn with_se(self) -> bool {
        self != Method::Envelope
    }
}

/// One series fully resolved at one sweep point.
pub enum Prepared {
    Siso(SisoSetting),
    Mimo(MimoSetting, SurfaceModel),
    Envelope {
        fit: EnvelopeFit,
        circuit: crate::td_unitcell::CircuitParams,
        phase: f64,
    },
}

const GA_STREAM: u64 = 1 << 40;
const PSO_STREAM: u64 = 2 << 40;

fn siso_trial(method: Method, s: &SisoSetting, seed: u64, trial: u64) -> Result<Vec<f64>> {
    let mut rng = stream(seed, trial);
    let t = sample_trial(&s.scenario, &mut rng)?;
    let sc = &s.scenario;
    Ok(match method {
        Method::GammaFit => vec![t.snr_active],
        Method::Ber => {
            let errors = bpsk_symbol_errors(sc, &t, s.symbols, &mut rng);
            vec![errors as f64 / s.symbols as f64, t.snr_active]
        }
        Method::PlacementRates => vec![
            rate(t.snr_active),
            rate(t.snr_fixed_gain),
            rate(t.snr_passive),
        ],
        Method::SizeRates => vec![rate(t.snr_active), lin_to_db(t.amplifier.gain)],
        Method::EnergyActive => {
            let elements = sc.passive_elements();
            let p_tot =
                total_power_active(&s.power, sc.p_t, elements, t.amplifier.p_out, sc.p_max)?;
            let r = rate(t.snr_active);
            vec![energy_efficiency(r, sc.bandwidth, p_tot)?, r, p_tot]
        }
        Method::EnergyPassive => {
            let p_tot = total_power_passive(&s.power, sc.p_t, sc.passive_elements());
            let r = rate(t.snr_passive);
            vec![energy_efficiency(r, sc.bandwidth, p_tot)?, r, p_tot]
        }
        _ => {
            return Err(Error::InvalidParameter(format!(
                "{method:?} is not a SISO method"
            )))
        }
    })
}

/// Evaluates every series of one sweep point for one trial. MIMO series
/// share the trial's channel draw; the heuristics get the evaluation count
/// the alternating optimizer used on the same setting.
pub fn run_trial(series: &[(Method, &Prepared)], seed: u64, trial: u64) -> Result<Vec<Vec<f64>>> {
    let mut ao_cache: Vec<(usize, AoState)> = Vec::new();
    let mut out = Vec::with_capacity(series.len());
    for (k, (method, prepared)) in series.iter().enumerate() {
        let row = match prepared {
            Prepared::Siso(s) => siso_trial(*method, s, seed, trial)?,
            Prepared::Envelope {
                fit,
                circuit,
                phase,
            } => {
                let (lo, hi) = amplitude_bounds_exact(*phase, circuit)?;
                let env = &fit.envelope;
                vec![lo, hi, env.alpha_min(*phase), env.alpha_max(*phase)]
            }
            Prepared::Mimo(m, surface) => {
                let sc = &m.scenario;
                let channels = sample_channels(sc, &mut stream(seed, trial));
                let ao_for = |cache: &mut Vec<(usize, AoState)>| -> Result<AoState> {
                    let same = series.iter().position(|(_, p)| match p {
                        Prepared::Mimo(other, _) => other == m,
                        _ => false,
                    });
                    let key = same.unwrap_or(k);
                    if let Some((_, st)) = cache.iter().find(|(i, _)| *i == key) {
                        return Ok(st.clone());
                    }
                    let st = ao_solve(sc, &channels, surface, &m.ao)?;
                    cache.push((key, st.clone()));
                    Ok(st)
                };
                let heuristics = |ao: &AoState| HeuristicOptions {
                    evaluations: ao.evaluations.max(1),
                    ..m.heuristics
                };
                let state = match method {
                    Method::Ao => ao_for(&mut ao_cache)?,
                    Method::Pai => pai_solve(sc, &channels, surface, &m.ao)?,
                    Method::Ga => {
                        let ao = ao_for(&mut ao_cache)?;
                        ga_solve(
                            sc,
                            &channels,
                            surface,
                            &heuristics(&ao),
                            &mut stream(seed, GA_STREAM + trial),
                        )?
                    }
                    Method::Pso => {
                        let ao = ao_for(&mut ao_cache)?;
                        pso_solve(
                            sc,
                            &channels,
                            surface,
                            &heuristics(&ao),
                            &mut stream(seed, PSO_STREAM + trial),
                        )?
                    }
                    _ => {
                        return Err(Error::InvalidParameter(format!(
                            "{method:?} is not a MIMO method"
                        )))
                    }
                };
                vec![state.rate]
            }
        };
        out.push(row);
    }
    Ok(out)
}

/// Mean and standard error of the mean; the error is NaN below two samples.
pub fn mean_se(samples: &[f64]) -> (f64, f64) {
    let (mean, var) = mean_and_variance(samples);
    let n = samples.len() as f64;
    if samples.len() < 2 {
        return (mean, f64::NAN);
    }
    (mean, (var * n / (n - 1.0) / n).sqrt())
}

const BATCHES: usize = 10;

/// Standard error of a whole-sample statistic from its spread over
/// contiguous batches.
fn batch_se<F: Fn(&[f64]) -> Result<f64>>(samples: &[f64], statistic: F) -> f64 {
    let batches = BATCHES.min(samples.len() / 2);
    if batches < 2 {
        return f64::NAN;
    }
    let size = samples.len() / batches;
    let values: Result<Vec<f64>> = (0..batches)
        .map(|b| statistic(&samples[b * size..(b + 1) * size]))
        .collect();
    match values {
        Ok(v) => mean_se(&v).1,
        Err(_) => f64::NAN,
    }
}

/// Reduces per-trial outputs (ordered by trial index) to `(value, se)` per
/// metric.
pub fn reduce(method: Method, trials: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
    let column = |i: usize| -> Vec<f64> { trials.iter().map(|t| t[i]).collect() };
    let k_of = |x: &[f64]| fit_gamma_moments(x).map(|f| f.k);
    let nu_of = |x: &[f64]| fit_gamma_moments(x).map(|f| f.nu);
    let theory = |x: &[f64]| fit_gamma_moments(x).and_then(|f| bep_bpsk(&f));
    match method {
        Method::GammaFit => {
            let snr = column(0);
            let fit = fit_gamma_moments(&snr)?;
            Ok(vec![
                (fit.k, batch_se(&snr, k_of)),
                (fit.nu, batch_se(&snr, nu_of)),
            ])
        }
        Method::Ber => {
            let snr = column(1);
            Ok(vec![
                mean_se(&column(0)),
                (theory(&snr)?, batch_se(&snr, theory)),
            ])
        }
        Method::Envelope => Ok(trials[0].iter().map(|v| (*v, f64::NAN)).collect()),
        _ => Ok((0..method.metrics().len())
            .map(|i| mean_se(&column(i)))
            .collect()),
    }
}
