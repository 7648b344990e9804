//! Reflection vector of an N-element surface under the phase-amplitude
//! coupling model, in the quadratic-in-phase form used by the optimizer.
//!
//! With unit-modulus phases `phi` and normalized amplitudes `alpha_bar`, each
//! element reflects `a_n phi_n^2 + b_n phi_n + c_n`, where
//! `a_n = 0.25 e^{j theta} (y + x alpha_bar_n)`, `c_n = conj(a_n)` rotated by
//! `e^{-j 2 theta}`, and `b_n` is real.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::td_unitcell::{self, AmplitudeEnvelope, CircuitParams};

/// Phases in radians and normalized amplitudes in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RisConfig {
    pub phases: Vec<f64>,
    pub alpha_bar: Vec<f64>,
}

impl RisConfig {
    pub fn new(phases: Vec<f64>, alpha_bar: Vec<f64>) -> Result<Self> {
        let cfg = Self { phases, alpha_bar };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.phases.len() != self.alpha_bar.len() {
            return Err(Error::Dimension(format!(
                "{} phases vs {} amplitudes",
                self.phases.len(),
                self.alpha_bar.len()
            )));
        }
        if let Some(i) = self.alpha_bar.iter().position(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidParameter(format!(
                "alpha_bar[{i}] = {} outside [0, 1]",
                self.alpha_bar[i]
            )));
        }
        if self.phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter("non-finite phase".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phase_vector(&self) -> Vec<Complex64> {
        self.phases
            .iter()
            .map(|&p| Complex64::from_polar(1.0, p))
            .collect()
    }
}

/// Per-element coefficients of `a phi^2 + b phi + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementCoefficients {
    pub a: Complex64,
    pub b: f64,
    pub c: Complex64,
}

fn x_and_y(env: &AmplitudeEnvelope) -> (f64, f64) {
    let y = env.delta_max - env.delta_min;
    let x = env.beta_max - env.beta_min - y;
    (x, y)
}

pub fn element_coefficients(env: &AmplitudeEnvelope, alpha_bar: f64) -> ElementCoefficients {
    let (x, y) = x_and_y(env);
    let w = 0.25 * (y + x * alpha_bar);
    ElementCoefficients {
        a: Complex64::from_polar(w, env.theta),
        b: 0.5 * y + env.delta_min + (0.5 * x + env.beta_min - env.delta_min) * alpha_bar,
        c: Complex64::from_polar(w, -env.theta),
    }
}

/// `d gamma_n / d alpha_bar_n` at phase `phi` (the model is affine in
/// `alpha_bar`).
pub fn amplitude_sensitivity(env: &AmplitudeEnvelope, phi: Complex64) -> Complex64 {
    let (x, _) = x_and_y(env);
    let slope_b = 0.5 * x + env.beta_min - env.delta_min;
    Complex64::from_polar(0.25 * x, env.theta) * phi * phi
        + slope_b * phi
        + Complex64::from_polar(0.25 * x, -env.theta)
}

/// `d gamma_n / d phi_n` treating `phi_n` as a complex variable.
pub fn phase_sensitivity(coef: &ElementCoefficients, phi: Complex64) -> Complex64 {
    2.0 * coef.a * phi + coef.b
}

fn check_envelopes(n: usize, envelopes: &[AmplitudeEnvelope]) -> Result<()> {
    if envelopes.len() != n && envelopes.len() != 1 {
        return Err(Error::Dimension(format!(
            "{} envelopes for {n} elements",
            envelopes.len()
        )));
    }
    Ok(())
}

fn envelope_of(envelopes: &[AmplitudeEnvelope], i: usize) -> &AmplitudeEnvelope {
    if envelopes.len() == 1 {
        &envelopes[0]
    } else {
        &envelopes[i]
    }
}

/// Reflection vector from unit-modulus phases. A single envelope is
/// broadcast to every element.
pub fn assemble_from_phasors(
    phi: &[Complex64],
    alpha_bar: &[f64],
    envelopes: &[AmplitudeEnvelope],
) -> Result<Vec<Complex64>> {
    if phi.len() != alpha_bar.len() {
        return Err(Error::Dimension(format!(
            "{} phases vs {} amplitudes",
            phi.len(),
            alpha_bar.len()
        )));
    }
    check_envelopes(phi.len(), envelopes)?;
    Ok(phi
        .iter()
        .zip(alpha_bar)
        .enumerate()
        .map(|(i, (&p, &ab))| {
            let k = element_coefficients(envelope_of(envelopes, i), ab);
            k.a * p * p + k.b * p + k.c
        })
        .collect())
}

/// Reflection vector under the cosine envelope model.
pub fn assemble_gamma(
    config: &RisConfig,
    envelopes: &[AmplitudeEnvelope],
) -> Result<Vec<Complex64>> {
    config.validate()?;
    assemble_from_phasors(&config.phase_vector(), &config.alpha_bar, envelopes)
}

/// Reflection vector under the exact circuit bounds. One circuit per
/// element, or a single circuit broadcast to all.
pub fn exact_gamma(config: &RisConfig, circuits: &[CircuitParams]) -> Result<Vec<Complex64>> {
    config.validate()?;
    let n = config.len();
    if circuits.len() != n && circuits.len() != 1 {
        return Err(Error::Dimension(format!(
            "{} circuits for {n} elements",
            circuits.len()
        )));
    }
    (0..n)
        .map(|i| {
            let circuit = if circuits.len() == 1 {
                &circuits[0]
            } else {
                &circuits[i]
            };
            let phase = config.phases[i];
            let alpha =
                td_unitcell::exact_amplitude(phase, config.alpha_bar[i], circuit).map_err(|e| {
                    match e {
                        Error::InfeasiblePhase { phase, .. } => Error::InfeasiblePhase {
                            phase,
                            element: Some(i),
                        },
                        other => other,
                    }
                })?;
            Ok(Complex64::from_polar(alpha, phase))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::td_unitcell::fit_envelope;
    use rand::Rng;

    fn sample_envelope() -> AmplitudeEnvelope {
        AmplitudeEnvelope {
            delta_min: 0.9,
            delta_max: 1.6,
            beta_min: 1.8,
            beta_max: 4.3,
            theta: 0.35,
        }
    }

    #[test]
    fn scalar_identity() {
        let env = sample_envelope();
        let mut rng = stream(4, 0);
        for _ in 0..100 {
            let p = rng.random_range(-4.0..4.0);
            let ab = rng.random::<f64>();
            let cfg = RisConfig::new(vec![p], vec![ab]).unwrap();
            let g = assemble_gamma(&cfg, &[env]).unwrap()[0];
            let expect = Complex64::from_polar(env.amplitude(p, ab), p);
            assert!((g - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn bounds_at_alpha_bar_extremes() {
        let env = sample_envelope();
        let phases: Vec<f64> = (0..32).map(|i| -3.0 + 0.19 * i as f64).collect();
        let lo = assemble_gamma(
            &RisConfig::new(phases.clone(), vec![0.0; 32]).unwrap(),
            &[env],
        )
        .unwrap();
        let hi = assemble_gamma(
            &RisConfig::new(phases.clone(), vec![1.0; 32]).unwrap(),
            &[env],
        )
        .unwrap();
        for (i, p) in phases.iter().enumerate() {
            assert!((lo[i].norm() - env.alpha_min(*p)).abs() < 1e-12);
            assert!((hi[i].norm() - env.alpha_max(*p)).abs() < 1e-12);
        }
    }

    fn dense_selection(n: usize) -> Vec<Vec<f64>> {
        // N^2 x N with D_i^T stacked: row i*N + i carries the single one of D_i
        let mut d = vec![vec![0.0; n]; n * n];
        for i in 0..n {
            d[i * n + i][i] = 1.0;
        }
        d
    }

    #[test]
    fn selection_tensor_identity() {
        let mut rng = stream(10, 0);
        for trial in 0..1000 {
            let n = 1 + trial % 7;
            let phi: Vec<Complex64> = (0..n)
                .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..6.3)))
                .collect();
            let kron: Vec<Complex64> = phi
                .iter()
                .flat_map(|&a| phi.iter().map(move |&b| a * b))
                .collect();
            let d = dense_selection(n);
            for col in 0..n {
                let v: Complex64 = (0..n * n).map(|row| d[row][col] * kron[row]).sum();
                assert!((v - phi[col] * phi[col]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_in_alpha_bar() {
        let env = sample_envelope();
        let mut rng = stream(12, 0);
        let n = 16;
        let phases: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let a1: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.5)).collect();
        let a2: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.5)).collect();
        let sum: Vec<f64> = a1.iter().zip(&a2).map(|(a, b)| a + b).collect();
        let g = |ab: &[f64]| {
            assemble_gamma(
                &RisConfig::new(phases.clone(), ab.to_vec()).unwrap(),
                &[env],
            )
            .unwrap()
        };
        let (g1, g2, g0, gs) = (g(&a1), g(&a2), g(&vec![0.0; n]), g(&sum));
        for i in 0..n {
            assert!((g1[i] + g2[i] - g0[i] - gs[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn sensitivities_match_finite_differences() {
        let env = sample_envelope();
        let phi = Complex64::from_polar(1.0, -0.7);
        let ab = 0.3;
        let f = |p: Complex64, a: f64| {
            let k = element_coefficients(&env, a);
            k.a * p * p + k.b * p + k.c
        };
        let h = 1e-6;
        let d_amp = (f(phi, ab + h) - f(phi, ab - h)) / (2.0 * h);
        assert!((d_amp - amplitude_sensitivity(&env, phi)).norm() < 1e-8);
        let d_phi = (f(phi + h, ab) - f(phi - h, ab)) / (2.0 * h);
        let k = element_coefficients(&env, ab);
        assert!((d_phi - phase_sensitivity(&k, phi)).norm() < 1e-8);
    }

    #[test]
    fn exact_matches_cosine_model_within_fit_error() {
        let circuit = CircuitParams::active_default();
        let fit = fit_envelope(&circuit).unwrap();
        let mut rng = stream(13, 0);
        for _ in 0..100 {
            let n = 4;
            let phases: Vec<f64> = (0..n)
                .map(|_| rng.random_range(fit.arc.0..fit.arc.1))
                .collect();
            let ab: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let cfg = RisConfig::new(phases, ab).unwrap();
            let a = assemble_gamma(&cfg, &[fit.envelope]).unwrap();
            let e = exact_gamma(&cfg, &[circuit]).unwrap();
            for (x, y) in a.iter().zip(&e) {
                assert!((x - y).norm() <= fit.max_error() + 1e-9);
            }
        }
    }

    #[test]
    fn exact_gamma_names_infeasible_element() {
        let circuit = CircuitParams::active_default();
        let cfg = RisConfig::new(vec![-1.0, 1.5], vec![0.5, 0.5]).unwrap();
        match exact_gamma(&cfg, &[circuit]) {
            Err(Error::InfeasiblePhase { element, .. }) => assert_eq!(element, Some(1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn matched_load_reflects_nothing() {
        // a resistive load equal to Z0 behind a huge shunt inductance
        let circuit = CircuitParams {
            l1: 1.0,
            ..CircuitParams::passive_default().with_resistance_range(377.0, 377.0)
        };
        let cap = 1.0 / (circuit.omega * circuit.omega * circuit.l2);
        let g = td_unitcell::element_reflection(cap, 377.0, &circuit).unwrap();
        assert!(g.norm() < 1e-6);
        let env = AmplitudeEnvelope::constant(0.0);
        let out = assemble_gamma(
            &RisConfig::new(vec![0.3, -2.0], vec![0.2, 0.9]).unwrap(),
            &[env],
        )
        .unwrap();
        assert!(out.iter().all(|g| g.norm() == 0.0));
    }

    #[test]
    fn passive_elements_do_not_amplify() {
        let circuit = CircuitParams::passive_default();
        let arc = td_unitcell::phase_arc(td_unitcell::PASSIVE_RESISTANCE, &circuit).unwrap();
        let phases: Vec<f64> = (0..20)
            .map(|i| arc.0 + (arc.1 - arc.0) * (i as f64 + 0.5) / 20.0)
            .collect();
        let cfg = RisConfig::new(phases, vec![0.5; 20]).unwrap();
        let g = exact_gamma(&cfg, &[circuit]).unwrap();
        assert!(g.iter().all(|x| x.norm() <= 1.0));
    }

    proptest::proptest! {
        #[test]
        fn magnitude_within_envelope_extremes(p in -10.0f64..10.0, ab in 0.0f64..=1.0) {
            let env = sample_envelope();
            let g = assemble_gamma(&RisConfig::new(vec![p], vec![ab]).unwrap(), &[env]).unwrap()[0];
            proptest::prop_assert!(g.norm() <= env.beta_max + 1e-12);
            proptest::prop_assert!(g.norm() >= env.delta_min - 1e-12);
        }
    }
}
