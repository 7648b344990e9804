//! Browser bindings for three interactive views: the unit-cell amplitude
//! envelope, the SISO rate versus surface placement, and a single-element
//! response probe. Results are flat `f64` arrays; the page reshapes them.

use active_ris::rng::stream;
use active_ris::siso_pa::{rate, sample_trial, SisoScenario};
use active_ris::td_unitcell::{
    element_reflection, exact_bound_curves, fit_envelope, is_stable, power_for_resistance,
    CircuitParams, TunnelDiodeModel,
};
use active_ris::units::dbm_to_w;
use active_ris::Result;
use wasm_bindgen::prelude::*;

fn to_js<T>(r: Result<T>) -> std::result::Result<T, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

/// Rows of `[phase, exact min, exact max, fitted min, fitted max]` across
/// the attainable phase arc, flattened.
pub fn envelope_rows(points: usize) -> Result<Vec<f64>> {
    let circuit = CircuitParams::active_default();
    let fit = fit_envelope(&circuit)?;
    let curves = exact_bound_curves(&circuit, fit.arc, points.max(2))?;
    Ok(curves
        .iter()
        .flat_map(|&(p, lo, hi)| [p, lo, hi, fit.envelope.alpha_min(p), fit.envelope.alpha_max(p)])
        .collect())
}

/// Rows of `[d_h, amplified rate, fixed-gain rate, passive rate]` averaged
/// over `trials` seeded draws, for `points` placements across `[0, d]`.
pub fn placement_rows(
    n: usize,
    p_t_dbm: f64,
    p_max_dbm: f64,
    d: f64,
    points: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let base = SisoScenario {
        n,
        p_t: dbm_to_w(p_t_dbm),
        p_max: dbm_to_w(p_max_dbm),
        ..SisoScenario::default()
    };
    let points = points.max(2);
    let trials = trials.max(1);
    let mut out = Vec::with_capacity(points * 4);
    for i in 0..points {
        let d_h = d * i as f64 / (points - 1) as f64;
        let mut sc = base;
        sc.geometry.d = d;
        sc.geometry.d_h = d_h;
        sc.validate()?;
        let mut acc = [0.0; 3];
        for t in 0..trials {
            let trial = sample_trial(&sc, &mut stream(seed, t as u64))?;
            acc[0] += rate(trial.snr_active);
            acc[1] += rate(trial.snr_fixed_gain);
            acc[2] += rate(trial.snr_passive);
        }
        out.push(d_h);
        out.extend(acc.iter().map(|a| a / trials as f64));
    }
    Ok(out)
}

/// `[amplitude, phase (rad), stable (0/1), bias power (mW)]` of one active
/// element at capacitance `c_pf` (pF) and resistance `r_ohm`.
pub fn element_probe(c_pf: f64, r_ohm: f64) -> Result<Vec<f64>> {
    let circuit = CircuitParams::active_default();
    let c = c_pf * 1e-12;
    let g = element_reflection(c, r_ohm, &circuit)?;
    let power = power_for_resistance(r_ohm, &TunnelDiodeModel::default())?;
    let stable = if is_stable(c, r_ohm, &circuit) { 1.0 } else { 0.0 };
    Ok(vec![g.norm(), g.arg(), stable, power * 1e3])
}

#[wasm_bindgen]
pub fn envelope(points: usize) -> std::result::Result<Vec<f64>, JsError> {
    to_js(envelope_rows(points))
}

#[wasm_bindgen]
pub fn placement(
    n: usize,
    p_t_dbm: f64,
    p_max_dbm: f64,
    d: f64,
    points: usize,
    trials: usize,
    seed: u64,
) -> std::result::Result<Vec<f64>, JsError> {
    to_js(placement_rows(n, p_t_dbm, p_max_dbm, d, points, trials, seed))
}

#[wasm_bindgen]
pub fn element(c_pf: f64, r_ohm: f64) -> std::result::Result<Vec<f64>, JsError> {
    to_js(element_probe(c_pf, r_ohm))
}
