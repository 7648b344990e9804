//! Tunnel-diode unit cell: transmission-line impedance, reflection
//! coefficient, tunneling I-V model and negative resistance, per-element bias
//! power, and the phase-dependent amplitude envelopes.
//!
//! Phases are handled in radians. Attainable phase sets are arcs given by a
//! `(lo, hi)` pair in unwrapped coordinates with `hi` in `(-pi, pi]`; a target
//! phase is attainable when some `2 pi` shift of it lies inside the arc.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Ohmic resistance of a passive (diode-less) element.
pub const PASSIVE_RESISTANCE: f64 = 1.5;

const PHASE_MATCH_TOL: f64 = 1e-7;
const ARC_SAMPLES: usize = 512;
const R_SCAN_POINTS: usize = 64;
const BISECTION_STEPS: usize = 200;

/// Element circuit: bottom/top inductances, free-space impedance, carrier,
/// and the tunable capacitance and resistance ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    pub l1: f64,
    pub l2: f64,
    pub z0: f64,
    pub omega: f64,
    pub c_range: (f64, f64),
    pub r_range: (f64, f64),
    /// Reject configurations with `Re{Z + Z0} <= 0`.
    pub enforce_stability: bool,
}

impl CircuitParams {
    /// 2.4 GHz cell with a tunnel diode spanning `m` in [1, 3] at `R0 = 1`.
    pub fn active_default() -> Self {
        let td = TunnelDiodeModel::default();
        Self {
            l1: 4.5e-9,
            l2: 0.7e-9,
            z0: 377.0,
            omega: TAU * 2.4e9,
            c_range: (0.85e-12, 6.25e-12),
            r_range: active_resistance_range(td.r0),
            enforce_stability: false,
        }
    }

    /// Same cell with a fixed Ohmic load instead of the diode.
    pub fn passive_default() -> Self {
        Self {
            r_range: (PASSIVE_RESISTANCE, PASSIVE_RESISTANCE),
            ..Self::active_default()
        }
    }

    pub fn with_resistance_range(self, lo: f64, hi: f64) -> Self {
        Self {
            r_range: (lo, hi),
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l1 > 0.0 && self.l2 > 0.0 && self.z0 > 0.0 && self.omega > 0.0) {
            return Err(Error::InvalidParameter(
                "L1, L2, Z0 and omega must be positive".into(),
            ));
        }
        let (c_lo, c_hi) = self.c_range;
        if !(c_lo > 0.0 && c_lo < c_hi) {
            return Err(Error::InvalidParameter(format!(
                "invalid capacitance range [{c_lo}, {c_hi}]"
            )));
        }
        let (r_lo, r_hi) = self.r_range;
        if !(r_lo <= r_hi) || !r_lo.is_finite() || !r_hi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "invalid resistance range [{r_lo}, {r_hi}]"
            )));
        }
        Ok(())
    }

    pub fn is_active(&self) -> bool {
        self.r_range.1 < 0.0
    }
}

/// Generalized tunneling-current model `I = (V/R0) exp(-(V/V0)^m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunnelDiodeModel {
    pub v0: f64,
    pub r0: f64,
    pub m: f64,
}

impl Default for TunnelDiodeModel {
    fn default() -> Self {
        Self {
            v0: 0.1,
            r0: 1.0,
            m: 1.0,
        }
    }
}

impl TunnelDiodeModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.1..=0.5).contains(&self.v0) {
            return Err(Error::InvalidParameter(format!(
                "V0 = {} V outside [0.1, 0.5]",
                self.v0
            )));
        }
        if !(self.r0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "R0 = {} must be positive",
                self.r0
            )));
        }
        if !(1.0..=3.0).contains(&self.m) {
            return Err(Error::InvalidParameter(format!(
                "m = {} outside [1, 3]",
                self.m
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionCoefficient {
    pub alpha: f64,
    /// Radians in `[0, 2 pi)`.
    pub phase: f64,
}

/// Wraps a phase into `(-pi, pi]`.
pub fn wrap_phase(phase: f64) -> f64 {
    let w = phase.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

pub fn impedance(c: f64, r: f64, circuit: &CircuitParams) -> Result<Complex64> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "capacitance {c} F must be positive"
        )));
    }
    let w = circuit.omega;
    let shunt = Complex64::new(0.0, w * circuit.l1);
    let series = Complex64::new(r, w * circuit.l2 - 1.0 / (w * c));
    let denom = shunt + series;
    if denom.norm() < 1e-12 {
        return Err(Error::ResonanceSingularity(denom.norm()));
    }
    Ok(shunt * series / denom)
}

/// `(Z - Z0) / (Z + Z0)` as a complex number.
pub fn reflection_complex(z: Complex64, z0: f64) -> Result<Complex64> {
    let denom = z + z0;
    if denom.norm() < 1e-9 {
        return Err(Error::Instability(denom.re));
    }
    Ok((z - z0) / denom)
}

pub fn reflection_coefficient(z: Complex64, z0: f64) -> Result<ReflectionCoefficient> {
    let g = reflection_complex(z, z0)?;
    Ok(ReflectionCoefficient {
        alpha: g.norm(),
        phase: g.arg().rem_euclid(TAU),
    })
}

/// Reflection coefficient of the element at `(C, R)`.
pub fn element_reflection(c: f64, r: f64, circuit: &CircuitParams) -> Result<Complex64> {
    reflection_complex(impedance(c, r, circuit)?, circuit.z0)
}

/// Stability criterion `Re{Z + Z0} > 0`.
pub fn is_stable(c: f64, r: f64, circuit: &CircuitParams) -> bool {
    impedance(c, r, circuit)
        .map(|z| z.re + circuit.z0 > 0.0)
        .unwrap_or(false)
}

/// Peak-point model `(I_p/V_p) V exp(1 - V/V_p)`.
pub fn tunneling_current_peak_model(v: f64, i_p: f64, v_p: f64) -> f64 {
    i_p / v_p * v * (1.0 - v / v_p).exp()
}

pub fn tunneling_current(v: f64, td: &TunnelDiodeModel) -> f64 {
    v / td.r0 * (-(v / td.v0).powf(td.m)).exp()
}

/// `dV/dI` of [`tunneling_current`].
pub fn differential_resistance(v: f64, td: &TunnelDiodeModel) -> Result<f64> {
    let x = (v / td.v0).powf(td.m);
    let denom = 1.0 - td.m * x;
    if denom.abs() < 1e-15 {
        return Err(Error::PeakSingularity(v));
    }
    Ok(td.r0 * x.exp() / denom)
}

/// Stable operating point: `(R_sp, V_r)` where `dR/dV = 0`.
pub fn stable_resistance(td: &TunnelDiodeModel) -> (f64, f64) {
    let m = td.m;
    let v_r = (1.0 / m + 1.0).powf(1.0 / m) * td.v0;
    let r_sp = -td.r0 / m * ((m + 1.0) / m).exp();
    (r_sp, v_r)
}

/// Bias power at the stable point, `(V0^2/R0) (1/m + 1)^(2/m)`.
pub fn element_power(td: &TunnelDiodeModel) -> f64 {
    td.v0 * td.v0 / td.r0 * (1.0 / td.m + 1.0).powf(2.0 / td.m)
}

/// `I_T(V_r) V_r` evaluated through the current model.
pub fn element_power_from_current(td: &TunnelDiodeModel) -> f64 {
    let (_, v_r) = stable_resistance(td);
    tunneling_current(v_r, td) * v_r
}

fn stable_resistance_at(m: f64, r0: f64) -> f64 {
    stable_resistance(&TunnelDiodeModel { v0: 0.1, r0, m }).0
}

/// Negative-resistance interval `[R_sp(m=1), R_sp(m=3)]`.
pub fn active_resistance_range(r0: f64) -> (f64, f64) {
    (stable_resistance_at(1.0, r0), stable_resistance_at(3.0, r0))
}

/// Inverts `R_sp(m)` on `m` in [1, 3]; `R_sp` is strictly increasing in `m`.
pub fn m_from_resistance(r_target: f64, r0: f64) -> Result<f64> {
    let (lo, hi) = active_resistance_range(r0);
    let slack = 1e-9 * lo.abs();
    if !(r_target >= lo - slack && r_target <= hi + slack) {
        return Err(Error::InfeasibleResistance {
            r: r_target,
            lo,
            hi,
        });
    }
    let (mut a, mut b) = (1.0, 3.0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (a + b);
        if stable_resistance_at(mid, r0) < r_target {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// Bias power of an element realizing negative resistance `r`.
pub fn power_for_resistance(r: f64, td: &TunnelDiodeModel) -> Result<f64> {
    let m = m_from_resistance(r, td.r0)?;
    Ok(element_power(&TunnelDiodeModel { m, ..*td }))
}

fn phase_matches(g: Complex64, target: f64) -> bool {
    g.norm() > 0.0 && wrap_phase(g.arg() - target).abs() < PHASE_MATCH_TOL
}

fn accept_capacitance(c: f64, r: f64, target: f64, circuit: &CircuitParams) -> bool {
    let (c_lo, c_hi) = circuit.c_range;
    let tol = 1e-12 * c_hi;
    if !(c >= c_lo - tol && c <= c_hi + tol) {
        return false;
    }
    if circuit.enforce_stability && !is_stable(c, r, circuit) {
        return false;
    }
    element_reflection(c, r, circuit)
        .map(|g| phase_matches(g, target))
        .unwrap_or(false)
}

/// Capacitance giving reflection phase `target` at resistance `r`, or `None`
/// when no real capacitance in range does.
///
/// Clearing denominators in `arg((Z - Z0)/(Z + Z0)) = phi` leaves a quadratic
/// in the series reactance `B = omega L2 - 1/(omega C)`; the root on the right
/// branch (phase `phi`, not `phi + pi`) is kept.
pub fn capacitance_for_phase(r: f64, target: f64, circuit: &CircuitParams) -> Option<f64> {
    let a = circuit.omega * circuit.l1;
    let z0 = circuit.z0;
    let (s, c) = target.sin_cos();
    let r2 = r * r;
    let a2 = 2.0 * z0 * a * c - (a * a - z0 * z0) * s;
    let a1 = 2.0 * a * z0 * (z0 * s + a * c);
    let a0 = -(a * a * r2 - z0 * z0 * r2 - z0 * z0 * a * a) * s + 2.0 * z0 * a * r2 * c;
    let scale = a2.abs().max(a1.abs() / a).max(a0.abs() / (a * a));
    let roots: Vec<f64> = if a2.abs() <= 1e-14 * scale {
        if a1 == 0.0 {
            vec![]
        } else {
            vec![-a0 / a1]
        }
    } else {
        let disc = a1 * a1 - 4.0 * a2 * a0;
        if disc < 0.0 {
            return None;
        }
        let q = -0.5 * (a1 + a1.signum() * disc.sqrt());
        let mut v = vec![q / a2];
        if q != 0.0 {
            v.push(a0 / q);
        }
        v
    };
    let w = circuit.omega;
    roots
        .into_iter()
        .filter_map(|b| {
            let denom = w * circuit.l2 - b;
            (denom > 0.0).then(|| 1.0 / (w * denom))
        })
        .find(|&cap| accept_capacitance(cap, r, target, circuit))
        .map(|cap| cap.clamp(circuit.c_range.0, circuit.c_range.1))
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (l, h) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (l + (h - l) * i as f64 / (n - 1) as f64).exp())
}

/// Unwrapped phase samples along the capacitance range at resistance `r`.
fn phase_track(r: f64, circuit: &CircuitParams) -> Result<Vec<(f64, f64)>> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(ARC_SAMPLES);
    for c in log_grid(circuit.c_range.0, circuit.c_range.1, ARC_SAMPLES) {
        let raw = element_reflection(c, r, circuit)?.arg();
        let ph = match out.last() {
            Some(&(_, prev)) => prev + wrap_phase(raw - prev),
            None => raw,
        };
        out.push((c, ph));
    }
    Ok(out)
}

/// Reference solver: scans the unwrapped phase along the capacitance range and
/// bisects the bracketing segment.
pub fn capacitance_for_phase_scan(r: f64, target: f64, circuit: &CircuitParams) -> Option<f64> {
    let track = phase_track(r, circuit).ok()?;
    for win in track.windows(2) {
        let ((c_a, p_a), (c_b, p_b)) = (win[0], win[1]);
        let (p_lo, p_hi) = if p_a < p_b { (p_a, p_b) } else { (p_b, p_a) };
        // shift the target into this segment's 2 pi window
        let k = ((p_lo - target) / TAU).ceil();
        let t = target + k * TAU;
        if t > p_hi {
            continue;
        }
        let err = |c: f64| -> f64 {
            let g = element_reflection(c, r, circuit)
                .map(|g| g.arg())
                .unwrap_or(f64::NAN);
            wrap_phase(g - t)
        };
        let (mut lo, mut hi) = (c_a, c_b);
        let f_lo = err(lo);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if (err(mid) > 0.0) == (f_lo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 * hi {
                break;
            }
        }
        let cap = 0.5 * (lo + hi);
        if accept_capacitance(cap, r, target, circuit) {
            return Some(cap);
        }
    }
    None
}

/// Attainable phase arc `(lo, hi)` at resistance `r` over the capacitance range.
pub fn phase_arc(r: f64, circuit: &CircuitParams) -> Result<(f64, f64)> {
    let track = phase_track(r, circuit)?;
    let first = track[0].1;
    let last = track[track.len() - 1].1;
    let (lo, hi) = if first < last {
        (first, last)
    } else {
        (last, first)
    };
    let shift = wrap_phase(hi) - hi;
    Ok((lo + shift, hi + shift))
}

/// Resistance interval over which `target` is attainable, or `None`.
pub fn feasible_resistance_range(target: f64, circuit: &CircuitParams) -> Option<(f64, f64)> {
    let (r_lo, r_hi) = circuit.r_range;
    let ok = |r: f64| capacitance_for_phase(r, target, circuit).is_some();
    if r_lo == r_hi {
        return ok(r_lo).then_some((r_lo, r_hi));
    }
    if ok(r_lo) && ok(r_hi) && ok(0.5 * (r_lo + r_hi)) {
        return Some((r_lo, r_hi));
    }
    let grid: Vec<f64> = (0..R_SCAN_POINTS)
        .map(|i| r_lo + (r_hi - r_lo) * i as f64 / (R_SCAN_POINTS - 1) as f64)
        .collect();
    let flags: Vec<bool> = grid.iter().map(|&r| ok(r)).collect();
    let start = flags.iter().position(|&f| f)?;
    let end = start + flags[start..].iter().take_while(|&&f| f).count() - 1;
    let refine = |mut inside: f64, mut outside: f64| {
        for _ in 0..60 {
            let mid = 0.5 * (inside + outside);
            if ok(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    let lo = if start == 0 {
        r_lo
    } else {
        refine(grid[start], grid[start - 1])
    };
    let hi = if end == R_SCAN_POINTS - 1 {
        r_hi
    } else {
        refine(grid[end], grid[end + 1])
    };
    Some((lo, hi))
}

/// `sqrt((X + (Z0 - R) tan phi) / (X + (Z0 + R) tan phi))` for `Z = R + jX`
/// whose reflection phase is `phi`. Singular at `phi = +-pi/2`.
pub fn amplitude_closed_form(z: Complex64, phase: f64, z0: f64) -> f64 {
    let t = phase.tan();
    ((z.im + (z0 - z.re) * t) / (z.im + (z0 + z.re) * t)).sqrt()
}

fn amplitude_at(r: f64, target: f64, circuit: &CircuitParams) -> Result<f64> {
    let cap = capacitance_for_phase(r, target, circuit).ok_or(Error::InfeasiblePhase {
        phase: target,
        element: None,
    })?;
    Ok(element_reflection(cap, r, circuit)?.norm())
}

/// Exact amplitude bounds at one phase together with the resistances that
/// realize them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeBounds {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub r_at_min: f64,
    pub r_at_max: f64,
}

/// Evaluates `|gamma|` at both ends of the feasible resistance interval. The
/// most negative resistance gives the larger amplitude.
pub fn amplitude_bounds_detail(target: f64, circuit: &CircuitParams) -> Result<AmplitudeBounds> {
    let (r_a, r_b) = feasible_resistance_range(target, circuit).ok_or(Error::InfeasiblePhase {
        phase: target,
        element: None,
    })?;
    let a_a = amplitude_at(r_a, target, circuit)?;
    let a_b = amplitude_at(r_b, target, circuit)?;
    Ok(if a_a <= a_b {
        AmplitudeBounds {
            alpha_min: a_a,
            alpha_max: a_b,
            r_at_min: r_a,
            r_at_max: r_b,
        }
    } else {
        AmplitudeBounds {
            alpha_min: a_b,
            alpha_max: a_a,
            r_at_min: r_b,
            r_at_max: r_a,
        }
    })
}

pub fn amplitude_bounds_exact(target: f64, circuit: &CircuitParams) -> Result<(f64, f64)> {
    let b = amplitude_bounds_detail(target, circuit)?;
    Ok((b.alpha_min, b.alpha_max))
}

/// `alpha_min + alpha_bar (alpha_max - alpha_min)`.
pub fn amplitude_from_normalized(alpha_min: f64, alpha_max: f64, alpha_bar: f64) -> f64 {
    alpha_min + alpha_bar * (alpha_max - alpha_min)
}

/// Exact amplitude at `(phase, alpha_bar)`.
pub fn exact_amplitude(phase: f64, alpha_bar: f64, circuit: &CircuitParams) -> Result<f64> {
    let (lo, hi) = amplitude_bounds_exact(phase, circuit)?;
    Ok(amplitude_from_normalized(lo, hi, alpha_bar))
}

/// Resistance realizing amplitude `alpha` at `phase`, by bisection between
/// the bound-realizing endpoints.
pub fn resistance_for_amplitude(phase: f64, alpha: f64, circuit: &CircuitParams) -> Result<f64> {
    let b = amplitude_bounds_detail(phase, circuit)?;
    let span = b.alpha_max - b.alpha_min;
    let tol = 1e-9 * b.alpha_max.max(1.0);
    if alpha < b.alpha_min - tol || alpha > b.alpha_max + tol {
        return Err(Error::ModelInversion { alpha, phase });
    }
    if span <= tol {
        return Ok(b.r_at_min);
    }
    let (mut at_low, mut at_high) = (b.r_at_min, b.r_at_max);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (at_low + at_high);
        let a = amplitude_at(mid, phase, circuit)?;
        if a < alpha {
            at_low = mid;
        } else {
            at_high = mid;
        }
        if (at_high - at_low).abs() < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (at_low + at_high))
}

/// Bias power of an active element configured at `(phase, alpha_bar)`.
pub fn element_power_at(
    phase: f64,
    alpha_bar: f64,
    circuit: &CircuitParams,
    td: &TunnelDiodeModel,
) -> Result<f64> {
    let alpha = exact_amplitude(phase, alpha_bar, circuit)?;
    let r = resistance_for_amplitude(phase, alpha, circuit)?;
    power_for_resistance(r, td)
}

/// Phases attainable at every resistance of the range: the intersection of
/// the endpoint arcs.
pub fn support_arc(circuit: &CircuitParams) -> Result<(f64, f64)> {
    let (r_lo, r_hi) = circuit.r_range;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for r in [r_lo, 0.5 * (r_lo + r_hi), r_hi] {
        let (a, b) = phase_arc(r, circuit)?;
        lo = lo.max(a);
        hi = hi.min(b);
    }
    if !(lo < hi) {
        return Err(Error::Degenerate(
            "resistance endpoints share no phase".into(),
        ));
    }
    // shave the endpoints so every arc phase solves for all resistances
    let pad = 1e-6 * (hi - lo);
    let (mut lo, mut hi) = (lo + pad, hi - pad);
    let all_ok = |p: f64| feasible_resistance_range(p, circuit) == Some(circuit.r_range);
    while !all_ok(lo) && lo < hi {
        lo += 1e-4 * (hi - lo);
    }
    while !all_ok(hi) && lo < hi {
        hi -= 1e-4 * (hi - lo);
    }
    Ok((lo, hi))
}

/// Projects a phase onto the arc `(lo, hi)`: the nearest arc point on the
/// circle.
pub fn project_to_arc(phase: f64, arc: (f64, f64)) -> f64 {
    let (lo, hi) = arc;
    let mid = 0.5 * (lo + hi);
    let p = mid + wrap_phase(phase - mid);
    if p >= lo && p <= hi {
        return p;
    }
    let d_lo = wrap_phase(p - lo).abs();
    let d_hi = wrap_phase(p - hi).abs();
    if d_lo <= d_hi {
        lo
    } else {
        hi
    }
}

/// Cosine model of the amplitude envelopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeEnvelope {
    pub delta_min: f64,
    pub delta_max: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    /// The envelopes peak at phase `-theta`.
    pub theta: f64,
}

impl AmplitudeEnvelope {
    /// Phase-independent envelope of constant amplitude `alpha`.
    pub fn constant(alpha: f64) -> Self {
        Self {
            delta_min: alpha,
            delta_max: alpha,
            beta_min: alpha,
            beta_max: alpha,
            theta: 0.0,
        }
    }

    pub fn alpha_min(&self, phase: f64) -> f64 {
        0.5 * (self.delta_max - self.delta_min) * ((phase + self.theta).cos() + 1.0)
            + self.delta_min
    }

    pub fn alpha_max(&self, phase: f64) -> f64 {
        0.5 * (self.beta_max - self.beta_min) * ((phase + self.theta).cos() + 1.0) + self.beta_min
    }

    pub fn amplitude(&self, phase: f64, alpha_bar: f64) -> f64 {
        amplitude_from_normalized(self.alpha_min(phase), self.alpha_max(phase), alpha_bar)
    }

    pub fn is_ordered(&self) -> bool {
        self.delta_min <= self.delta_max && self.beta_min <= self.beta_max
    }
}

/// Fitted envelope together with the phase arc it was fitted on and the
/// largest deviations from the exact bounds on the fitting grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeFit {
    pub envelope: AmplitudeEnvelope,
    pub arc: (f64, f64),
    pub max_error_min: f64,
    pub max_error_max: f64,
    /// Phases where the four extrema occur: argmin/argmax of alpha_min, then
    /// of alpha_max.
    pub extrema_phases: [f64; 4],
}

impl EnvelopeFit {
    /// Largest deviation of either approximate bound.
    pub fn max_error(&self) -> f64 {
        self.max_error_min.max(self.max_error_max)
    }
}

pub const ENVELOPE_GRID: usize = 1024;

/// Samples the exact bounds across the support arc.
pub fn exact_bound_curves(
    circuit: &CircuitParams,
    arc: (f64, f64),
    points: usize,
) -> Result<Vec<(f64, f64, f64)>> {
    (0..points)
        .map(|i| {
            let p = arc.0 + (arc.1 - arc.0) * i as f64 / (points - 1) as f64;
            let (lo, hi) = amplitude_bounds_exact(p, circuit)?;
            Ok((p, lo, hi))
        })
        .collect()
}

fn refine_extremum<F: Fn(f64) -> Result<f64>>(
    f: &F,
    phases: &[f64],
    values: &[f64],
    idx: usize,
    maximize: bool,
) -> Result<(f64, f64)> {
    let better = |a: f64, b: f64| if maximize { a > b } else { a < b };
    let (mut best_p, mut best_v) = (phases[idx], values[idx]);
    if idx == 0 || idx + 1 >= phases.len() {
        return Ok((best_p, best_v));
    }
    let (x0, x1, x2) = (phases[idx - 1], phases[idx], phases[idx + 1]);
    let (y0, y1, y2) = (values[idx - 1], values[idx], values[idx + 1]);
    let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    if denom == 0.0 {
        return Ok((best_p, best_v));
    }
    let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    if a != 0.0 {
        let vertex = (-b / (2.0 * a)).clamp(x0, x2);
        let v = f(vertex)?;
        if better(v, best_v) {
            best_p = vertex;
            best_v = v;
        }
    }
    Ok((best_p, best_v))
}

/// Fits the cosine envelope to the exact bounds over the support arc:
/// extrema from a dense grid with local quadratic refinement, and `theta`
/// from the peak of the upper bound.
pub fn fit_envelope(circuit: &CircuitParams) -> Result<EnvelopeFit> {
    let arc = support_arc(circuit)?;
    let curves = exact_bound_curves(circuit, arc, ENVELOPE_GRID)?;
    let phases: Vec<f64> = curves.iter().map(|c| c.0).collect();
    let mins: Vec<f64> = curves.iter().map(|c| c.1).collect();
    let maxs: Vec<f64> = curves.iter().map(|c| c.2).collect();
    let arg = |v: &[f64], max: bool| {
        v.iter()
            .enumerate()
            .max_by(|a, b| {
                if max {
                    a.1.total_cmp(b.1)
                } else {
                    b.1.total_cmp(a.1)
                }
            })
            .map(|(i, _)| i)
            .expect("non-empty grid")
    };
    let lower = |p: f64| amplitude_bounds_exact(p, circuit).map(|b| b.0);
    let upper = |p: f64| amplitude_bounds_exact(p, circuit).map(|b| b.1);
    let (p_dmin, delta_min) = refine_extremum(&lower, &phases, &mins, arg(&mins, false), false)?;
    let (p_dmax, delta_max) = refine_extremum(&lower, &phases, &mins, arg(&mins, true), true)?;
    let (p_bmin, beta_min) = refine_extremum(&upper, &phases, &maxs, arg(&maxs, false), false)?;
    let (p_bmax, beta_max) = refine_extremum(&upper, &phases, &maxs, arg(&maxs, true), true)?;
    let envelope = AmplitudeEnvelope {
        delta_min,
        delta_max,
        beta_min,
        beta_max,
        theta: -p_bmax,
    };
    let max_error_min = curves
        .iter()
        .map(|&(p, lo, _)| (envelope.alpha_min(p) - lo).abs())
        .fold(0.0, f64::max);
    let max_error_max = curves
        .iter()
        .map(|&(p, _, hi)| (envelope.alpha_max(p) - hi).abs())
        .fold(0.0, f64::max);
    Ok(EnvelopeFit {
        envelope,
        arc,
        max_error_min,
        max_error_max,
        extrema_phases: [p_dmin, p_dmax, p_bmin, p_bmax],
    })
}
