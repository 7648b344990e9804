use std::cell::Cell;
use std::f64::consts::LN_2;

use nalgebra::{Cholesky, Dyn};
use num_complex::Complex64;

use super::scenario::{CMatrix, MimoChannels, MimoScenario};
use crate::error::{Error, Result};

const CONDITION_LIMIT: f64 = 1e12;

/// Noise powers at the receiver and at the surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma2: f64,
    pub f_r: f64,
    pub f_s: f64,
}

impl NoiseModel {
    pub fn receiver(&self) -> f64 {
        self.sigma2 * self.f_r
    }

    pub fn surface(&self) -> f64 {
        self.sigma2 * self.f_s
    }
}

impl From<&MimoScenario> for NoiseModel {
    fn from(s: &MimoScenario) -> Self {
        Self {
            sigma2: s.sigma2,
            f_r: s.f_r,
            f_s: s.f_s,
        }
    }
}

fn check_gamma(channels: &MimoChannels, gamma: &[Complex64]) -> Result<()> {
    channels.validate()?;
    if gamma.len() != channels.n_elements() {
        return Err(Error::Dimension(format!(
            "{} reflection coefficients for {} elements",
            gamma.len(),
            channels.n_elements()
        )));
    }
    Ok(())
}

fn check_precoder(channels: &MimoChannels, v: &CMatrix) -> Result<()> {
    if v.nrows() != channels.h_d.ncols() {
        return Err(Error::Dimension(format!(
            "precoder has {} rows, M_T = {}",
            v.nrows(),
            channels.h_d.ncols()
        )));
    }
    Ok(())
}

/// `H2 diag(gamma)`.
fn scale_columns(h2: &CMatrix, gamma: &[Complex64]) -> CMatrix {
    let mut out = h2.clone();
    for (mut col, g) in out.column_iter_mut().zip(gamma) {
        col *= *g;
    }
    out
}

/// `H_d + H2 diag(gamma) H1`.
pub fn effective_channel(channels: &MimoChannels, gamma: &[Complex64]) -> Result<CMatrix> {
    check_gamma(channels, gamma)?;
    Ok(&channels.h_d + scale_columns(&channels.h2, gamma) * &channels.h1)
}

/// Noise covariance at the receiver: amplified surface noise plus thermal
/// noise, `sigma^2 F_s H2 Gamma Gamma^H H2^H + sigma^2 F_r I`.
pub fn noise_covariance(
    channels: &MimoChannels,
    gamma: &[Complex64],
    noise: &NoiseModel,
) -> Result<CMatrix> {
    check_gamma(channels, gamma)?;
    let hg = scale_columns(&channels.h2, gamma);
    let m_r = channels.h2.nrows();
    Ok(&hg * hg.adjoint() * Complex64::from(noise.surface())
        + CMatrix::identity(m_r, m_r) * Complex64::from(noise.receiver()))
}

/// Cholesky factor of a Hermitian positive-definite matrix, with a small
/// diagonal lift when the factor reports a condition number above 1e12.
pub fn hpd_factor(m: &CMatrix) -> Result<Cholesky<Complex64, Dyn>> {
    let n = m.nrows();
    let trace: f64 = (0..n).map(|i| m[(i, i)].re).sum();
    let lift = 1e-12 * trace / n.max(1) as f64;
    if let Some(ch) = Cholesky::new(m.clone()) {
        let diag: Vec<f64> = (0..n).map(|i| ch.l_dirty()[(i, i)].re).collect();
        let hi = diag.iter().cloned().fold(0.0, f64::max);
        let lo = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if lo > 0.0 && (hi / lo).powi(2) <= CONDITION_LIMIT {
            return Ok(ch);
        }
    }
    let mut lifted = m.clone();
    for i in 0..n {
        lifted[(i, i)] += lift.max(f64::MIN_POSITIVE);
    }
    Cholesky::new(lifted)
        .ok_or_else(|| Error::Degenerate("covariance is not positive definite".into()))
}

/// LMMSE combiner `(H V V^H H^H + Q)^-1 H V`.
pub fn lmmse_combiner(
    v: &CMatrix,
    gamma: &[Complex64],
    channels: &MimoChannels,
    noise: &NoiseModel,
) -> Result<CMatrix> {
    check_precoder(channels, v)?;
    let h = effective_channel(channels, gamma)?;
    let q = noise_covariance(channels, gamma, noise)?;
    let hv = &h * v;
    let cov = &hv * hv.adjoint() + q;
    Ok(hpd_factor(&cov)?.solve(&hv))
}

/// Sum of per-stream rates decoded with combiner `w`.
pub fn rate_with_combiner(
    v: &CMatrix,
    w: &CMatrix,
    gamma: &[Complex64],
    channels: &MimoChannels,
    noise: &NoiseModel,
) -> Result<f64> {
    check_precoder(channels, v)?;
    if w.ncols() != v.ncols() || w.nrows() != channels.h2.nrows() {
        return Err(Error::Dimension(format!(
            "combiner {:?} for precoder {:?}",
            w.shape(),
            v.shape()
        )));
    }
    let h = effective_channel(channels, gamma)?;
    let hv = &h * v;
    let wh_h2g = w.adjoint() * scale_columns(&channels.h2, gamma);
    let gains = w.adjoint() * &hv;
    let mut rate = 0.0;
    for i in 0..v.ncols() {
        let signal = gains[(i, i)].norm_sqr();
        let interference: f64 = (0..v.ncols())
            .filter(|&j| j != i)
            .map(|j| gains[(i, j)].norm_sqr())
            .sum();
        let surface = noise.surface() * wh_h2g.row(i).norm_squared();
        let thermal = noise.receiver() * w.column(i).norm_squared();
        let denom = interference + surface + thermal;
        if denom > 0.0 {
            rate += (1.0 + signal / denom).log2();
        }
    }
    Ok(rate)
}

/// Per-stream LMMSE rate, each stream's SINR from its own
/// interference-plus-noise covariance.
pub fn rate_lmmse(
    v: &CMatrix,
    gamma: &[Complex64],
    channels: &MimoChannels,
    noise: &NoiseModel,
) -> Result<f64> {
    check_precoder(channels, v)?;
    let h = effective_channel(channels, gamma)?;
    let q = noise_covariance(channels, gamma, noise)?;
    let hv = &h * v;
    let total = &hv * hv.adjoint() + &q;
    let mut rate = 0.0;
    for i in 0..v.ncols() {
        let col = hv.column(i).into_owned();
        let cov = &total - &col * col.adjoint();
        let x = hpd_factor(&cov)?.solve(&col);
        rate += (1.0 + col.dotc(&x).re).log2();
    }
    Ok(rate)
}

/// Effective channel and noise covariance for a fixed reflection vector.
#[derive(Debug, Clone)]
pub struct LinkModel {
    pub h_eff: CMatrix,
    pub noise_cov: CMatrix,
    noise_factor: Cholesky<Complex64, Dyn>,
}

impl LinkModel {
    pub fn new(channels: &MimoChannels, gamma: &[Complex64], noise: &NoiseModel) -> Result<Self> {
        let h_eff = effective_channel(channels, gamma)?;
        let noise_cov = noise_covariance(channels, gamma, noise)?;
        let noise_factor = hpd_factor(&noise_cov)?;
        Ok(Self {
            h_eff,
            noise_cov,
            noise_factor,
        })
    }

    /// `(I + V^H H^H Q^-1 H V)^-1`, whose diagonal holds the per-stream
    /// minimum MSEs.
    pub fn mse_matrix(&self, v: &CMatrix) -> Result<CMatrix> {
        let a = &self.h_eff * v;
        let g = self.noise_factor.solve(&a);
        let d = v.ncols();
        let t = CMatrix::identity(d, d) + a.adjoint() * g;
        Ok(hpd_factor(&t)?.inverse())
    }

    /// `-sum_i log2 E_ii`, equal to [`rate_lmmse`].
    pub fn rate(&self, v: &CMatrix) -> Result<f64> {
        let e = self.mse_matrix(v)?;
        Ok(-(0..e.nrows()).map(|i| e[(i, i)].re.log2()).sum::<f64>())
    }

    pub fn solve_noise(&self, b: &CMatrix) -> CMatrix {
        self.noise_factor.solve(b)
    }
}

/// Rate together with its sensitivity to the reflection vector: for a
/// perturbation `d gamma`, `d rate = Re(sum_n grad_n d gamma_n)`.
#[derive(Debug, Clone)]
pub struct RateGradient {
    pub rate: f64,
    pub grad: Vec<Complex64>,
}

pub fn rate_and_gradient(
    v: &CMatrix,
    gamma: &[Complex64],
    channels: &MimoChannels,
    noise: &NoiseModel,
) -> Result<RateGradient> {
    check_precoder(channels, v)?;
    let link = LinkModel::new(channels, gamma, noise)?;
    let e = link.mse_matrix(v)?;
    let d = v.ncols();
    let rate = -(0..d).map(|i| e[(i, i)].re.log2()).sum::<f64>();
    let inv_diag = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        d,
        (0..d).map(|i| Complex64::from(1.0 / e[(i, i)].re)),
    ));
    let m = &e * inv_diag * &e;
    let g = link.solve_noise(&(&link.h_eff * v));
    let b = channels.h2.adjoint() * g;
    let h1vm = &channels.h1 * v * &m;
    let bm = &b * &m;
    let scale = 2.0 / LN_2;
    let grad = (0..gamma.len())
        .map(|n| {
            let mut p = Complex64::default();
            let mut q = Complex64::default();
            for k in 0..d {
                let bc = b[(n, k)].conj();
                p += h1vm[(n, k)] * bc;
                q += bm[(n, k)] * bc;
            }
            scale * (p - noise.surface() * q * gamma[n].conj())
        })
        .collect();
    Ok(RateGradient { rate, grad })
}

/// Objective-evaluation counter shared by a solver run.
#[derive(Debug, Default)]
pub struct EvalCounter(Cell<usize>);

impl EvalCounter {
    pub fn tick(&self) {
        self.0.set(self.0.get() + 1);
    }

    pub fn get(&self) -> usize {
        self.0.get()
    }
}
