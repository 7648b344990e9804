use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use super::precoder::{eigenmode_precoder, optimize_precoder};
use super::rate::{
    lmmse_combiner, rate_and_gradient, rate_lmmse, EvalCounter, LinkModel, NoiseModel, RateGradient,
};
use super::scenario::{CMatrix, MimoChannels, MimoScenario};
use super::surface::{exact_alpha_bar, AmplitudeModel, SurfaceModel};
use crate::error::{Error, Result};
use crate::reflection::{exact_gamma, RisConfig};
use crate::td_unitcell::wrap_phase;

const ARMIJO: f64 = 1e-4;
const BACKTRACKS: usize = 30;
const FD_STEP: f64 = 1e-4;

/// Solver knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoOptions {
    /// Relative rate change that ends the outer loop.
    pub epsilon: f64,
    /// Maximum outer iterations.
    pub j_alt: usize,
    pub precoder_iterations: usize,
    pub phase_iterations: usize,
    pub sca_iterations: usize,
    /// Keep the initial surface configuration and optimize the precoder only.
    pub freeze_surface: bool,
}

impl Default for AoOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            j_alt: 8,
            precoder_iterations: 20,
            phase_iterations: 10,
            sca_iterations: 10,
            freeze_surface: false,
        }
    }
}

/// Result of a solver run. `config` uses exact-model normalized amplitudes;
/// `gamma` and `rate` are evaluated on the exact circuit model.
#[derive(Debug, Clone)]
pub struct AoState {
    pub v: CMatrix,
    pub w: CMatrix,
    pub config: RisConfig,
    pub gamma: Vec<Complex64>,
    pub rate: f64,
    /// Modeled objective after initialization and after every outer iteration.
    pub rate_trace: Vec<f64>,
    pub iteration: usize,
    pub evaluations: usize,
    pub ris_power: f64,
    /// Phase or amplitude steps that found no improving move.
    pub stalls: usize,
}

/// Optimization problem for a fixed channel draw under a given amplitude model.
pub struct SurfaceProblem<'a> {
    pub channels: &'a MimoChannels,
    pub surface: &'a SurfaceModel,
    pub noise: NoiseModel,
    pub model: AmplitudeModel,
    pub p_t: f64,
    pub counter: EvalCounter,
}

/// Phase and amplitude block outcome.
#[derive(Debug, Clone)]
pub struct BlockStep {
    pub config: RisConfig,
    pub rate: f64,
    pub stalled: bool,
}

fn phasors(phases: &[f64]) -> Vec<Complex64> {
    phases
        .iter()
        .map(|&p| Complex64::from_polar(1.0, p))
        .collect()
}

impl<'a> SurfaceProblem<'a> {
    pub fn new(
        scenario: &MimoScenario,
        channels: &'a MimoChannels,
        surface: &'a SurfaceModel,
        model: AmplitudeModel,
    ) -> Result<Self> {
        channels.validate()?;
        if channels.n_elements() != surface.n {
            return Err(Error::Dimension(format!(
                "{} channel elements, {} surface elements",
                channels.n_elements(),
                surface.n
            )));
        }
        Ok(Self {
            channels,
            surface,
            noise: NoiseModel::from(scenario),
            model,
            p_t: scenario.p_t,
            counter: EvalCounter::default(),
        })
    }

    pub fn gamma(&self, config: &RisConfig) -> Vec<Complex64> {
        self.surface
            .gamma(self.model, &phasors(&config.phases), &config.alpha_bar)
    }

    pub fn link(&self, config: &RisConfig) -> Result<LinkModel> {
        LinkModel::new(self.channels, &self.gamma(config), &self.noise)
    }

    pub fn rate(&self, v: &CMatrix, config: &RisConfig) -> Result<f64> {
        self.counter.tick();
        self.link(config)?.rate(v)
    }

    fn rate_gradient(&self, v: &CMatrix, config: &RisConfig) -> Result<RateGradient> {
        self.counter.tick();
        rate_and_gradient(v, &self.gamma(config), self.channels, &self.noise)
    }

    pub fn power(&self, config: &RisConfig) -> Result<f64> {
        self.surface
            .power(self.model, &config.phases, &config.alpha_bar)
    }

    /// Riemannian gradient of the rate on the unit-modulus phasors, along
    /// with the Euclidean one.
    pub fn phase_gradient(
        &self,
        v: &CMatrix,
        config: &RisConfig,
    ) -> Result<(f64, Vec<Complex64>, Vec<Complex64>)> {
        let rg = self.rate_gradient(v, config)?;
        let phi = phasors(&config.phases);
        let mut egrad = Vec::with_capacity(phi.len());
        let mut rgrad = Vec::with_capacity(phi.len());
        for n in 0..phi.len() {
            let (_, d_phi, _) =
                self.surface
                    .element_response(self.model, n, phi[n], config.alpha_bar[n]);
            let e = (rg.grad[n] * d_phi).conj();
            egrad.push(e);
            rgrad.push(e - (e * phi[n].conj()).re * phi[n]);
        }
        Ok((rg.rate, egrad, rgrad))
    }

    /// `d rate / d alpha_bar_n`; zero for passive elements.
    pub fn amplitude_gradient(&self, v: &CMatrix, config: &RisConfig) -> Result<(f64, Vec<f64>)> {
        let rg = self.rate_gradient(v, config)?;
        let phi = phasors(&config.phases);
        let grad = (0..phi.len())
            .map(|n| {
                if self.surface.is_active(n) {
                    let (_, _, d_ab) =
                        self.surface
                            .element_response(self.model, n, phi[n], config.alpha_bar[n]);
                    (rg.grad[n] * d_ab).re
                } else {
                    0.0
                }
            })
            .collect();
        Ok((rg.rate, grad))
    }
}

/// Largest uniform normalized amplitude of the active elements that fits the
/// budget at the given phases.
pub fn max_uniform_amplitude(problem: &SurfaceProblem, phases: &[f64]) -> Result<RisConfig> {
    let s = problem.surface;
    s.check_budget()?;
    let at = |level: f64| {
        let ab = (0..s.n)
            .map(|n| if s.is_active(n) { level } else { 0.0 })
            .collect();
        RisConfig {
            phases: phases.to_vec(),
            alpha_bar: ab,
        }
    };
    if s.within_budget(problem.power(&at(1.0))?) {
        return Ok(at(1.0));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if s.within_budget(problem.power(&at(mid))?) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(at(lo))
}

fn top_singular_pair(h: &CMatrix) -> (nalgebra::DVector<Complex64>, nalgebra::DVector<Complex64>) {
    let gram = h.adjoint() * h;
    let eig = SymmetricEigen::new(gram);
    let k = eig.eigenvalues.imax();
    let right = eig.eigenvectors.column(k).into_owned();
    let left = h * &right;
    let norm = left.norm();
    let left = if norm > 0.0 {
        left / Complex64::from(norm)
    } else {
        left
    };
    (left, right)
}

/// Phases that co-phase each cascaded path along the dominant beams of the
/// two surface links, rotated by `offset` relative to the direct path and
/// projected onto the attainable arcs.
pub fn aligned_phases(channels: &MimoChannels, surface: &SurfaceModel, offset: f64) -> Vec<f64> {
    let (_, tx_beam) = top_singular_pair(&channels.h1);
    let (rx_beam, _) = top_singular_pair(&channels.h2);
    let direct = rx_beam.dotc(&(&channels.h_d * &tx_beam));
    let reference = if direct.norm() > 0.0 {
        direct.arg()
    } else {
        0.0
    } + offset;
    let into = &channels.h1 * &tx_beam;
    let out = channels.h2.adjoint() * &rx_beam;
    (0..surface.n)
        .map(|n| {
            let path = out[n].conj() * into[n];
            let target = if path.norm() > 0.0 {
                reference - path.arg()
            } else {
                reference
            };
            surface.project_phase(n, wrap_phase(target))
        })
        .collect()
}

/// Riemannian gradient ascent over the phases with Armijo backtracking.
/// Candidate phasors are normalized and projected onto each element's arc;
/// candidates that break the power budget are rejected.
pub fn optimize_phases(
    problem: &SurfaceProblem,
    v: &CMatrix,
    config: &RisConfig,
    iterations: usize,
) -> Result<BlockStep> {
    let mut current = config.clone();
    let mut rate = problem.rate(v, &current)?;
    let mut stalled = true;
    let mut step_scale = 1.0;
    for _ in 0..iterations {
        let (_, egrad, rgrad) = problem.phase_gradient(v, &current)?;
        let peak = rgrad.iter().map(|g| g.norm()).fold(0.0, f64::max);
        if !(peak > 0.0) {
            break;
        }
        let phi = phasors(&current.phases);
        let mut t = step_scale * 0.5 / peak;
        let mut accepted = None;
        for _ in 0..BACKTRACKS {
            let phases: Vec<f64> = (0..phi.len())
                .map(|n| {
                    problem
                        .surface
                        .project_phase(n, (phi[n] + rgrad[n] * t).arg())
                })
                .collect();
            let candidate = RisConfig {
                phases,
                alpha_bar: current.alpha_bar.clone(),
            };
            let moved = phasors(&candidate.phases);
            let predicted: f64 = (0..phi.len())
                .map(|n| (egrad[n].conj() * (moved[n] - phi[n])).re)
                .sum();
            if predicted > 0.0 && problem.surface.within_budget(problem.power(&candidate)?) {
                let r = problem.rate(v, &candidate)?;
                if r > rate && r >= rate + ARMIJO * predicted {
                    accepted = Some((candidate, r));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, r)) => {
                let gain = r - rate;
                current = cand;
                rate = r;
                stalled = false;
                step_scale = (step_scale * 2.0).min(1.0);
                if gain <= 1e-9 * rate.abs() {
                    break;
                }
            }
            None => break,
        }
    }
    Ok(BlockStep {
        config: current,
        rate,
        stalled,
    })
}

/// Minimizer of `-s.x + (L/2)|x - x0|^2` over the box subject to
/// `slope.(x - x0) <= slack`.
fn linearized_step(
    x0: &[f64],
    s: &[f64],
    slope: &[f64],
    active: &[usize],
    l: f64,
    slack: f64,
) -> Vec<f64> {
    let at = |lambda: f64| -> Vec<f64> {
        let mut x = x0.to_vec();
        for &n in active {
            x[n] = (x0[n] + (s[n] - lambda * slope[n]) / l).clamp(0.0, 1.0);
        }
        x
    };
    let used = |x: &[f64]| -> f64 { active.iter().map(|&n| slope[n] * (x[n] - x0[n])).sum() };
    let free = at(0.0);
    if used(&free) <= slack {
        return free;
    }
    let mut hi = active
        .iter()
        .filter(|&&n| slope[n] > 0.0)
        .map(|&n| (s[n] + l * x0[n]) / slope[n])
        .fold(0.0, f64::max)
        .max(1e-300);
    if used(&at(hi)) > slack {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if used(&at(mid)) > slack {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    at(hi)
}

/// Successive convex approximation over the normalized amplitudes of the
/// active elements: proximal linearization of the rate, linearized power
/// constraint with finite-difference slopes, exact feasibility check.
pub fn optimize_amplitudes(
    problem: &SurfaceProblem,
    v: &CMatrix,
    config: &RisConfig,
    iterations: usize,
) -> Result<BlockStep> {
    let surface = problem.surface;
    surface.check_budget()?;
    let active: Vec<usize> = (0..surface.n_active).collect();
    let mut current = config.clone();
    for n in surface.n_active..surface.n {
        current.alpha_bar[n] = 0.0;
    }
    let mut rate = problem.rate(v, &current)?;
    let mut stalled = true;
    let mut curvature: Option<f64> = None;
    for _ in 0..iterations {
        let (_, grad) = problem.amplitude_gradient(v, &current)?;
        let peak = active.iter().map(|&n| grad[n].abs()).fold(0.0, f64::max);
        if !(peak > 0.0) {
            break;
        }
        let mut powers = vec![0.0; surface.n];
        let mut slope = vec![0.0; surface.n];
        for &n in &active {
            let (phase, ab) = (current.phases[n], current.alpha_bar[n]);
            let p = surface.element_power(problem.model, n, phase, ab)?;
            let (a, b) = if ab + FD_STEP <= 1.0 {
                (ab, ab + FD_STEP)
            } else {
                (ab - FD_STEP, ab)
            };
            let pa = if a == ab {
                p
            } else {
                surface.element_power(problem.model, n, phase, a)?
            };
            let pb = if b == ab {
                p
            } else {
                surface.element_power(problem.model, n, phase, b)?
            };
            powers[n] = p;
            slope[n] = ((pb - pa) / FD_STEP).max(1e-12);
        }
        let total: f64 = powers.iter().sum();
        let mut slack = surface.budget - total;
        let mut l = curvature.unwrap_or(2.0 * peak);
        let mut accepted = None;
        for _ in 0..BACKTRACKS {
            let x = linearized_step(
                &current.alpha_bar,
                &grad,
                &slope,
                &active,
                l,
                slack.max(0.0),
            );
            let moved = active
                .iter()
                .any(|&n| (x[n] - current.alpha_bar[n]).abs() > 1e-15);
            if !moved {
                break;
            }
            let candidate = RisConfig {
                phases: current.phases.clone(),
                alpha_bar: x,
            };
            let power = problem.power(&candidate)?;
            if !surface.within_budget(power) {
                slack -= power - surface.budget;
                l *= 2.0;
                continue;
            }
            let r = problem.rate(v, &candidate)?;
            if r > rate {
                accepted = Some((candidate, r));
                break;
            }
            l *= 2.0;
        }
        match accepted {
            Some((cand, r)) => {
                let gain = r - rate;
                current = cand;
                rate = r;
                stalled = false;
                curvature = Some(0.5 * l);
                if gain <= 1e-10 * rate.abs() {
                    break;
                }
            }
            None => break,
        }
    }
    Ok(BlockStep {
        config: current,
        rate,
        stalled,
    })
}

const INIT_ROTATIONS: usize = 8;

/// Best of several common rotations of the aligned phases, each with the
/// largest uniform amplitude and an eigenmode precoder.
fn initial_state(problem: &SurfaceProblem, streams: usize) -> Result<(CMatrix, RisConfig)> {
    let mut best: Option<(f64, CMatrix, RisConfig)> = None;
    for k in 0..INIT_ROTATIONS {
        let offset = std::f64::consts::TAU * k as f64 / INIT_ROTATIONS as f64;
        let phases = aligned_phases(problem.channels, problem.surface, offset);
        let config = max_uniform_amplitude(problem, &phases)?;
        let link = problem.link(&config)?;
        let v = eigenmode_precoder(&link.h_eff, streams, problem.p_t);
        problem.counter.tick();
        let rate = link.rate(&v)?;
        if best.as_ref().is_none_or(|b| rate > b.0) {
            best = Some((rate, v, config));
        }
    }
    let (_, v, config) = best.expect("at least one rotation");
    Ok((v, config))
}

fn at_iteration(iteration: usize) -> impl Fn(Error) -> Error {
    move |e| Error::AtIteration {
        iteration,
        source: Box::new(e),
    }
}

fn outer_step(
    problem: &SurfaceProblem,
    options: &AoOptions,
    v: &mut CMatrix,
    config: &mut RisConfig,
    stalls: &mut usize,
) -> Result<f64> {
    let link = problem.link(config)?;
    let pre = optimize_precoder(
        &link,
        v,
        problem.p_t,
        options.precoder_iterations,
        &problem.counter,
    )?;
    *v = pre.v;
    if options.freeze_surface {
        return Ok(pre.rate);
    }
    let ph = optimize_phases(problem, v, config, options.phase_iterations)?;
    let am = optimize_amplitudes(problem, v, &ph.config, options.sca_iterations)?;
    *stalls += ph.stalled as usize + am.stalled as usize;
    *config = am.config;
    Ok(am.rate)
}

/// Alternating optimization of precoder, phases and amplitudes under the
/// given amplitude model. Returns the modeled iterate and its trace.
fn alternate(
    problem: &SurfaceProblem,
    streams: usize,
    options: &AoOptions,
) -> Result<(CMatrix, RisConfig, Vec<f64>, usize, usize)> {
    let (mut v, mut config) = initial_state(problem, streams).map_err(at_iteration(0))?;
    let mut trace = vec![problem.rate(&v, &config).map_err(at_iteration(0))?];
    let mut stalls = 0;
    let mut iteration = 0;
    for j in 1..=options.j_alt.max(1) {
        iteration = j;
        let rate = outer_step(problem, options, &mut v, &mut config, &mut stalls)
            .map_err(at_iteration(j))?;
        let previous = *trace.last().expect("trace starts non-empty");
        trace.push(rate.max(previous));
        if (rate - previous).abs() <= options.epsilon * previous.abs() {
            break;
        }
    }
    Ok((v, config, trace, iteration, stalls))
}

fn finish(
    problem: &SurfaceProblem,
    v: CMatrix,
    config: RisConfig,
    trace: Vec<f64>,
    iteration: usize,
    stalls: usize,
) -> Result<AoState> {
    let surface = problem.surface;
    let gamma = exact_gamma(&config, &surface.circuits())?;
    let w = lmmse_combiner(&v, &gamma, problem.channels, &problem.noise)?;
    let rate = rate_lmmse(&v, &gamma, problem.channels, &problem.noise)?;
    let ris_power = surface.power(AmplitudeModel::Coupled, &config.phases, &config.alpha_bar)?;
    Ok(AoState {
        v,
        w,
        config,
        gamma,
        rate,
        rate_trace: trace,
        iteration,
        evaluations: problem.counter.get(),
        ris_power,
        stalls,
    })
}

/// Rate maximization over precoder, phases and amplitudes with the
/// phase-amplitude coupling captured by the fitted envelopes.
pub fn ao_solve(
    scenario: &MimoScenario,
    channels: &MimoChannels,
    surface: &SurfaceModel,
    options: &AoOptions,
) -> Result<AoState> {
    let problem = SurfaceProblem::new(scenario, channels, surface, AmplitudeModel::Coupled)?;
    let (v, config, trace, iteration, stalls) = alternate(&problem, scenario.streams, options)?;
    finish(&problem, v, config, trace, iteration, stalls)
}

/// Benchmark that treats amplitude and phase as independent. Its solution is
/// mapped back onto the circuit: each amplitude is clamped into the exact
/// bounds at its phase, and all active amplitudes are shrunk together until
/// the budget holds.
pub fn pai_solve(
    scenario: &MimoScenario,
    channels: &MimoChannels,
    surface: &SurfaceModel,
    options: &AoOptions,
) -> Result<AoState> {
    let problem = SurfaceProblem::new(scenario, channels, surface, AmplitudeModel::Independent)?;
    let (v, config, trace, iteration, stalls) = alternate(&problem, scenario.streams, options)?;
    let mut exact = config.clone();
    for n in 0..surface.n {
        exact.alpha_bar[n] = if surface.is_active(n) {
            let (lo, hi) = surface.independent_range(n);
            let a = lo + config.alpha_bar[n] * (hi - lo);
            exact_alpha_bar(config.phases[n], a, &surface.active.circuit)?
        } else {
            0.0
        };
    }
    let scaled = |c: f64| RisConfig {
        phases: exact.phases.clone(),
        alpha_bar: exact.alpha_bar.iter().map(|a| a * c).collect(),
    };
    let power_at =
        |c: f64| surface.power(AmplitudeModel::Coupled, &exact.phases, &scaled(c).alpha_bar);
    let mut physical = exact.clone();
    if !surface.within_budget(power_at(1.0)?) {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if surface.within_budget(power_at(mid)?) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        physical = scaled(lo);
    }
    finish(&problem, v, physical, trace, iteration, stalls)
}
