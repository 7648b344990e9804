use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;

use super::rate::{hpd_factor, EvalCounter, LinkModel};
use super::scenario::CMatrix;
use crate::error::Result;

/// Outcome of a precoder update.
#[derive(Debug, Clone)]
pub struct PrecoderStep {
    pub v: CMatrix,
    pub rate: f64,
    /// No inner iterate improved on the incoming precoder.
    pub stalled: bool,
}

/// Frobenius power `Tr{V^H V}`.
pub fn precoder_power(v: &CMatrix) -> f64 {
    v.norm_squared()
}

/// Scales `v` down onto the trace budget if it exceeds it.
pub fn clip_to_budget(v: &CMatrix, p_t: f64) -> CMatrix {
    let p = precoder_power(v);
    if p > p_t {
        v * Complex64::from((p_t / p).sqrt())
    } else {
        v.clone()
    }
}

/// Top right singular vectors of the effective channel with equal power per
/// stream.
pub fn eigenmode_precoder(h_eff: &CMatrix, streams: usize, p_t: f64) -> CMatrix {
    let m_t = h_eff.ncols();
    let gram = h_eff.adjoint() * h_eff;
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..m_t).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let scale = Complex64::from((p_t / streams as f64).sqrt());
    CMatrix::from_fn(m_t, streams, |r, c| eig.eigenvectors[(r, order[c])] * scale)
}

/// Solves `min_V sum_i w_i mse_i` under `Tr{V^H V} <= p_t` for fixed
/// receivers: `V = (A + mu I)^-1 B` with the multiplier `mu` found by
/// bisection on the trace.
fn weighted_mmse_transmitter(a: &CMatrix, b: &CMatrix, p_t: f64) -> CMatrix {
    let eig = SymmetricEigen::new(a.clone());
    let x = &eig.eigenvectors;
    let z = x.adjoint() * b;
    let row_power: Vec<f64> = (0..z.nrows()).map(|k| z.row(k).norm_squared()).collect();
    let lambda: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0)).collect();
    let trace_at = |mu: f64| -> f64 {
        row_power
            .iter()
            .zip(&lambda)
            .map(|(p, l)| if *p == 0.0 { 0.0 } else { p / (l + mu).powi(2) })
            .sum()
    };
    let l_max = lambda.iter().cloned().fold(0.0, f64::max);
    let mu = if lambda.iter().all(|l| *l > 1e-14 * l_max) && trace_at(0.0) <= p_t {
        0.0
    } else {
        let total: f64 = row_power.iter().sum();
        let (mut lo, mut hi) = (0.0, (total / p_t).sqrt().max(f64::MIN_POSITIVE));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if trace_at(mid) > p_t {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        hi
    };
    let scaled = CMatrix::from_fn(z.nrows(), z.ncols(), |r, c| {
        let d = lambda[r] + mu;
        if d > 0.0 {
            z[(r, c)] / d
        } else {
            Complex64::default()
        }
    });
    clip_to_budget(&(x * scaled), p_t)
}

/// Weighted-MMSE ascent on the per-stream LMMSE rate with the reflection
/// vector fixed. Alternates LMMSE receivers, inverse-MSE weights and the
/// closed-form transmitter; only improving iterates are kept.
pub fn optimize_precoder(
    link: &LinkModel,
    v_in: &CMatrix,
    p_t: f64,
    iterations: usize,
    counter: &EvalCounter,
) -> Result<PrecoderStep> {
    let streams = v_in.ncols();
    let mut best_v = clip_to_budget(v_in, p_t);
    counter.tick();
    let mut best_rate = link.rate(&best_v)?;
    let mut stalled = true;
    let mut v = if precoder_power(&best_v) == 0.0 || best_rate <= 0.0 {
        eigenmode_precoder(&link.h_eff, streams, p_t)
    } else {
        best_v.clone()
    };
    for _ in 0..iterations {
        let hv = &link.h_eff * &v;
        let cov = &hv * hv.adjoint() + &link.noise_cov;
        let u = hpd_factor(&cov)?.solve(&hv);
        let e = CMatrix::identity(streams, streams) - u.adjoint() * &hv;
        let weights = DVector::from_iterator(
            streams,
            (0..streams).map(|i| Complex64::from(1.0 / e[(i, i)].re.max(1e-300))),
        );
        let uw = &u * CMatrix::from_diagonal(&weights);
        let hu = link.h_eff.adjoint() * &u;
        let a = &hu * CMatrix::from_diagonal(&weights) * hu.adjoint();
        let b = link.h_eff.adjoint() * uw;
        v = weighted_mmse_transmitter(&a, &b, p_t);
        counter.tick();
        let rate = link.rate(&v)?;
        if rate > best_rate {
            let gain = rate - best_rate;
            best_rate = rate;
            best_v = v.clone();
            stalled = false;
            if gain <= 1e-10 * rate.abs() {
                break;
            }
        }
    }
    Ok(PrecoderStep {
        v: best_v,
        rate: best_rate,
        stalled,
    })
}
