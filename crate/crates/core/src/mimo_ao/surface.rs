use num_complex::Complex64;

use super::scenario::MimoScenario;
use crate::error::{Error, Result};
use crate::reflection::{amplitude_sensitivity, element_coefficients, phase_sensitivity};
use crate::td_unitcell::{
    amplitude_bounds_detail, element_power, element_power_at, exact_amplitude, fit_envelope,
    power_for_resistance, project_to_arc, AmplitudeEnvelope, CircuitParams, EnvelopeFit,
    TunnelDiodeModel,
};

/// How the optimizer models a reflection coefficient from `(phi, alpha_bar)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmplitudeModel {
    /// Phase-dependent cosine envelopes.
    Coupled,
    /// Amplitude independent of phase, spanning the widest envelope range.
    Independent,
}

/// One element class: circuit, fitted envelope and attainable phase arc.
#[derive(Debug, Clone)]
pub struct ElementClass {
    pub circuit: CircuitParams,
    pub fit: EnvelopeFit,
}

impl ElementClass {
    pub fn new(circuit: CircuitParams) -> Result<Self> {
        Ok(Self {
            circuit,
            fit: fit_envelope(&circuit)?,
        })
    }

    pub fn envelope(&self) -> &AmplitudeEnvelope {
        &self.fit.envelope
    }

    pub fn arc(&self) -> (f64, f64) {
        self.fit.arc
    }
}

/// Envelope-fitted description of a hybrid surface: elements `0..n_active`
/// are active, the rest passive.
#[derive(Debug, Clone)]
pub struct SurfaceModel {
    pub n: usize,
    pub n_active: usize,
    pub active: ElementClass,
    pub passive: ElementClass,
    pub diode: TunnelDiodeModel,
    pub budget: f64,
}

impl SurfaceModel {
    pub fn from_scenario(scenario: &MimoScenario) -> Result<Self> {
        scenario.validate()?;
        Ok(Self {
            n: scenario.n,
            n_active: scenario.n_active,
            active: ElementClass::new(scenario.active_circuit)?,
            passive: ElementClass::new(scenario.passive_circuit)?,
            diode: scenario.diode,
            budget: scenario.p_ris,
        })
    }

    /// Same fitted classes for a scenario that differs only in sizes and budget.
    pub fn resized(&self, scenario: &MimoScenario) -> Self {
        Self {
            n: scenario.n,
            n_active: scenario.n_active,
            budget: scenario.p_ris,
            ..self.clone()
        }
    }

    pub fn is_active(&self, n: usize) -> bool {
        n < self.n_active
    }

    pub fn class(&self, n: usize) -> &ElementClass {
        if self.is_active(n) {
            &self.active
        } else {
            &self.passive
        }
    }

    pub fn circuits(&self) -> Vec<CircuitParams> {
        (0..self.n).map(|n| self.class(n).circuit).collect()
    }

    pub fn envelopes(&self) -> Vec<AmplitudeEnvelope> {
        (0..self.n).map(|n| *self.class(n).envelope()).collect()
    }

    /// Lowest bias power of an active element (at `alpha_bar = 0`).
    pub fn min_element_power(&self) -> f64 {
        element_power(&TunnelDiodeModel {
            m: 3.0,
            ..self.diode
        })
    }

    pub fn max_element_power(&self) -> f64 {
        element_power(&TunnelDiodeModel {
            m: 1.0,
            ..self.diode
        })
    }

    pub fn min_power(&self) -> f64 {
        self.n_active as f64 * self.min_element_power()
    }

    pub fn check_budget(&self) -> Result<()> {
        let minimum = self.min_power();
        if self.budget < minimum * (1.0 - 1e-9) {
            return Err(Error::InfeasibleBudget {
                budget: self.budget,
                minimum,
            });
        }
        Ok(())
    }

    pub fn within_budget(&self, power: f64) -> bool {
        power <= self.budget * (1.0 + 1e-9)
    }

    pub fn project_phase(&self, n: usize, phase: f64) -> f64 {
        project_to_arc(phase, self.class(n).arc())
    }

    /// Amplitude range `[min alpha_min, max alpha_max]` used by the
    /// independent model.
    pub fn independent_range(&self, n: usize) -> (f64, f64) {
        let e = self.class(n).envelope();
        (e.delta_min, e.beta_max)
    }

    /// Modeled reflection coefficient and its derivatives with respect to
    /// `phi` (holomorphic) and `alpha_bar`.
    pub fn element_response(
        &self,
        model: AmplitudeModel,
        n: usize,
        phi: Complex64,
        alpha_bar: f64,
    ) -> (Complex64, Complex64, Complex64) {
        match model {
            AmplitudeModel::Coupled => {
                let env = self.class(n).envelope();
                let k = element_coefficients(env, alpha_bar);
                let gamma = k.a * phi * phi + k.b * phi + k.c;
                (
                    gamma,
                    phase_sensitivity(&k, phi),
                    amplitude_sensitivity(env, phi),
                )
            }
            AmplitudeModel::Independent => {
                let (lo, hi) = self.independent_range(n);
                let a = lo + alpha_bar * (hi - lo);
                (a * phi, Complex64::from(a), (hi - lo) * phi)
            }
        }
    }

    pub fn gamma(
        &self,
        model: AmplitudeModel,
        phi: &[Complex64],
        alpha_bar: &[f64],
    ) -> Vec<Complex64> {
        (0..self.n)
            .map(|n| self.element_response(model, n, phi[n], alpha_bar[n]).0)
            .collect()
    }

    /// Bias power of element `n`; zero for passive elements. Under the
    /// independent model the requested amplitude is costed by the coupled
    /// envelope at the same phase, clamped to its range.
    pub fn element_power(
        &self,
        model: AmplitudeModel,
        n: usize,
        phase: f64,
        alpha_bar: f64,
    ) -> Result<f64> {
        if !self.is_active(n) {
            return Ok(0.0);
        }
        let ab = match model {
            AmplitudeModel::Coupled => alpha_bar,
            AmplitudeModel::Independent => {
                let env = self.class(n).envelope();
                let (lo, hi) = self.independent_range(n);
                let a = lo + alpha_bar * (hi - lo);
                let (a_min, a_max) = (env.alpha_min(phase), env.alpha_max(phase));
                if a_max > a_min {
                    ((a - a_min) / (a_max - a_min)).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            }
        };
        element_power_at(phase, ab.clamp(0.0, 1.0), &self.active.circuit, &self.diode)
    }

    pub fn power(&self, model: AmplitudeModel, phases: &[f64], alpha_bar: &[f64]) -> Result<f64> {
        (0..self.n_active)
            .map(|n| self.element_power(model, n, phases[n], alpha_bar[n]))
            .sum()
    }
}

/// Total bias power of the active elements (the first `n_active`) at the
/// given phases and normalized amplitudes, through the exact
/// amplitude-resistance-bias chain.
pub fn ris_power(
    alpha_bar: &[f64],
    phases: &[f64],
    n_active: usize,
    circuit: &CircuitParams,
    td: &TunnelDiodeModel,
) -> Result<f64> {
    if alpha_bar.len() != phases.len() || n_active > phases.len() {
        return Err(Error::Dimension(format!(
            "{} amplitudes, {} phases, {n_active} active",
            alpha_bar.len(),
            phases.len()
        )));
    }
    (0..n_active)
        .map(|n| element_power_at(phases[n], alpha_bar[n], circuit, td))
        .sum()
}

/// Exact normalized amplitude that realizes amplitude `alpha` at `phase`,
/// after clamping `alpha` into the exact bounds.
pub fn exact_alpha_bar(phase: f64, alpha: f64, circuit: &CircuitParams) -> Result<f64> {
    let b = amplitude_bounds_detail(phase, circuit)?;
    if b.alpha_max - b.alpha_min <= 1e-12 {
        return Ok(0.0);
    }
    Ok(((alpha - b.alpha_min) / (b.alpha_max - b.alpha_min)).clamp(0.0, 1.0))
}

/// Exact amplitude of element `n`, or its passive amplitude.
pub fn exact_element_amplitude(
    surface: &SurfaceModel,
    n: usize,
    phase: f64,
    alpha_bar: f64,
) -> Result<f64> {
    exact_amplitude(phase, alpha_bar, &surface.class(n).circuit)
}

/// Bias power of one active element set directly by its resistance.
pub fn power_of_resistance(r: f64, td: &TunnelDiodeModel) -> Result<f64> {
    power_for_resistance(r, td)
}
