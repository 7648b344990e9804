//! Gamma moment matching of SNR samples, the Gamma MGF, and MGF-based
//! symbol/bit error probabilities for M-PSK.

use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Shape `k` and scale `nu` of a Gamma distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaFit {
    pub k: f64,
    pub nu: f64,
}

impl GammaFit {
    pub fn new(k: f64, nu: f64) -> Result<Self> {
        if !(k > 0.0 && nu > 0.0 && k.is_finite() && nu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Gamma parameters must be finite and positive (k = {k}, nu = {nu})"
            )));
        }
        Ok(Self { k, nu })
    }

    pub fn mean(&self) -> f64 {
        self.k * self.nu
    }

    pub fn variance(&self) -> f64 {
        self.k * self.nu * self.nu
    }
}

/// Sample mean and (population) variance.
pub fn mean_and_variance(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Method-of-moments fit: `k = mean^2 / var`, `nu = var / mean`.
///
/// The variance is the population (1/n) second central moment, so the fitted
/// distribution reproduces the sample mean and variance exactly.
pub fn fit_gamma_moments(samples: &[f64]) -> Result<GammaFit> {
    if samples.len() < 2 {
        return Err(Error::Degenerate(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::InvalidParameter(
            "samples must be finite and non-negative".into(),
        ));
    }
    let (mean, var) = mean_and_variance(samples);
    if !(var > 0.0) || !(mean > 0.0) {
        return Err(Error::Degenerate(format!("zero variance (mean {mean})")));
    }
    GammaFit::new(mean * mean / var, var / mean)
}

pub fn gamma_pdf(x: f64, fit: &GammaFit) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    if x == 0.0 {
        return match fit.k.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => f64::INFINITY,
            Some(std::cmp::Ordering::Equal) => 1.0 / fit.nu,
            _ => 0.0,
        };
    }
    let ln = (fit.k - 1.0) * x.ln() - x / fit.nu - fit.k * fit.nu.ln() - ln_gamma(fit.k);
    ln.exp()
}

/// `(1 - nu s)^(-k)`, defined for `s < 1/nu`.
pub fn gamma_mgf(s: f64, fit: &GammaFit) -> Result<f64> {
    let limit = 1.0 / fit.nu;
    if !(s < limit) {
        return Err(Error::MgfDomain { s, limit });
    }
    // ln1p keeps precision when nu*s is tiny
    Ok((-fit.k * (-fit.nu * s).ln_1p()).exp())
}

/// Gaussian tail function Q(x).
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Conditional BPSK bit error probability at instantaneous SNR `snr`.
pub fn bpsk_ber_at_snr(snr: f64) -> f64 {
    q_function((2.0 * snr).sqrt())
}

const QUAD_ABS_TOL: f64 = 1e-10;
const QUAD_MAX_SUBDIVISIONS: usize = 2000;
/// Lower integration endpoint for the SEP integrals; the integrand vanishes
/// as x -> 0 because the MGF argument tends to -infinity.
const SEP_X_FLOOR: f64 = 1e-12;

/// M-PSK average symbol error probability through the Gamma MGF.
pub fn sep_mpsk(fit: &GammaFit, m: u32) -> Result<f64> {
    if m < 2 || !m.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "M = {m} must be a power of two >= 2"
        )));
    }
    let m_f = m as f64;
    let s2 = (std::f64::consts::PI / m_f).sin().powi(2);
    let upper = (m_f - 1.0) * std::f64::consts::PI / m_f;
    let integrand = |x: f64| {
        let sx = x.max(SEP_X_FLOOR).sin();
        // argument is always <= 0, inside the MGF domain
        (-fit.k * (fit.nu * s2 / (sx * sx)).ln_1p()).exp()
    };
    let v = integrate(
        integrand,
        SEP_X_FLOOR,
        upper,
        QUAD_ABS_TOL,
        QUAD_MAX_SUBDIVISIONS,
    )?;
    Ok((v / std::f64::consts::PI).clamp(0.0, 1.0))
}

/// BPSK average bit error probability `(1/pi) int_0^{pi/2} (1 + nu/sin^2 x)^(-k) dx`.
pub fn bep_bpsk(fit: &GammaFit) -> Result<f64> {
    let integrand = |x: f64| {
        let sx = x.max(SEP_X_FLOOR).sin();
        (-fit.k * (fit.nu / (sx * sx)).ln_1p()).exp()
    };
    let v = integrate(
        integrand,
        SEP_X_FLOOR,
        std::f64::consts::FRAC_PI_2,
        QUAD_ABS_TOL,
        QUAD_MAX_SUBDIVISIONS,
    )?;
    Ok((v / std::f64::consts::PI).clamp(0.0, 1.0))
}

/// Gray-coded approximation `P_b ~ P_s / log2 M`.
pub fn bep_from_sep(sep: f64, m: u32) -> Result<f64> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("M = {m} must be >= 2")));
    }
    Ok(sep / (m as f64).log2())
}

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * GK_WEIGHTS[7];
    let mut gauss = fc * G_WEIGHTS[3];
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += GK_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += G_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive Gauss–Kronrod quadrature with an absolute tolerance and a
/// hard cap on the number of subintervals.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<f64> {
    let (v, e) = gk15(&f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    loop {
        let total: f64 = intervals.iter().map(|iv| iv.2).sum();
        let err: f64 = intervals.iter().map(|iv| iv.3).sum();
        if err <= abs_tol {
            return Ok(total);
        }
        if intervals.len() >= max_subdivisions {
            return Err(Error::Quadrature {
                achieved: err,
                tolerance: abs_tol,
            });
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}
