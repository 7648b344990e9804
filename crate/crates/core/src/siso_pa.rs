//! Two passive surfaces joined by a single power amplifier: phase alignment,
//! gain selection under the amplifier limits, SNR and rate, plus the passive
//! single-surface baseline with the same total element count.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{self, ChannelVector, Geometry, LinkState, LosMode, RicianSpec};
use crate::error::{Error, Result};
use crate::rng::complex_normal;
use crate::units::{db_to_lin, dbm_to_w};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SisoScenario {
    /// Transmit power (W).
    pub p_t: f64,
    /// Amplifier saturation output power (W).
    pub p_max: f64,
    /// Amplifier maximum gain (linear).
    pub g_max: f64,
    /// Amplifier noise figure (linear).
    pub noise_figure: f64,
    /// Noise power at the amplifier input (W).
    pub sigma2_tot: f64,
    /// Noise power at the receiver (W).
    pub sigma2_rx: f64,
    /// Elements per surface.
    pub n: usize,
    /// Carrier (GHz).
    pub f_c: f64,
    /// Bandwidth (Hz).
    pub bandwidth: f64,
    pub k1: f64,
    pub k2: f64,
    pub geometry: Geometry,
    /// LoS handling of the Tx to first-surface hop.
    pub tx_link: LosMode,
    /// LoS handling of the second-surface to Rx hop.
    pub rx_link: LosMode,
}

impl Default for SisoScenario {
    fn default() -> Self {
        Self {
            p_t: dbm_to_w(30.0),
            p_max: dbm_to_w(30.0),
            g_max: db_to_lin(30.0),
            noise_figure: db_to_lin(5.0),
            sigma2_tot: dbm_to_w(-100.0),
            sigma2_rx: dbm_to_w(-100.0),
            n: 128,
            f_c: 28.0,
            bandwidth: 180e3,
            k1: 5.0,
            k2: 5.0,
            geometry: Geometry {
                d_v: 5.0,
                d_h: 5.0,
                d: 50.0,
            },
            tx_link: LosMode::Random,
            rx_link: LosMode::Random,
        }
    }
}

impl SisoScenario {
    pub fn validate(&self) -> Result<()> {
        let powers = [
            self.p_t,
            self.p_max,
            self.sigma2_tot,
            self.sigma2_rx,
            self.bandwidth,
        ];
        if powers.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidParameter(
                "powers and bandwidth must be positive".into(),
            ));
        }
        if !(self.g_max >= 1.0 && self.noise_figure >= 1.0) {
            return Err(Error::InvalidParameter("G_max and F must be >= 1".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter("N must be >= 1".into()));
        }
        if !(self.k1 >= 0.0 && self.k2 >= 0.0) {
            return Err(Error::InvalidParameter(
                "Rician factors must be >= 0".into(),
            ));
        }
        self.geometry.validate()
    }

    /// Element count of the passive surface in a like-for-like comparison.
    pub fn passive_elements(&self) -> usize {
        2 * self.n
    }
}

/// Unit-modulus weights of the two surfaces.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    pub phi: Vec<Complex64>,
    pub theta: Vec<Complex64>,
    /// Entries whose channel gain was exactly zero and got phase 0.
    pub undefined_phases: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplifierState {
    pub gain: f64,
    pub p_in: f64,
    pub p_out: f64,
}

fn conjugate_phases(h: &ChannelVector) -> (Vec<Complex64>, usize) {
    let mut zeros = 0;
    let w = h
        .gains
        .iter()
        .map(|g| {
            if g.norm() == 0.0 {
                zeros += 1;
                Complex64::new(1.0, 0.0)
            } else {
                g.conj() / g.norm()
            }
        })
        .collect();
    (w, zeros)
}

/// `phi_i = exp(-j arg h_i)`, `theta_i = exp(-j arg g_i)`.
pub fn optimal_phases(h: &ChannelVector, g: &ChannelVector) -> PhaseConfig {
    let (phi, z1) = conjugate_phases(h);
    let (theta, z2) = conjugate_phases(g);
    PhaseConfig {
        phi,
        theta,
        undefined_phases: z1 + z2,
    }
}

/// `w^T h`.
pub fn combine(weights: &[Complex64], h: &ChannelVector) -> Complex64 {
    weights.iter().zip(&h.gains).map(|(w, x)| w * x).sum()
}

/// Power at the amplifier input, `P_t |phi^T h|^2`.
pub fn pa_input_power(p_t: f64, phi: &[Complex64], h: &ChannelVector) -> f64 {
    p_t * combine(phi, h).norm_sqr()
}

/// `min(G_max, P_max / P_in)`: the SNR grows with the gain, so the tighter of
/// the two limits is active.
pub fn optimal_gain(p_in: f64, p_max: f64, g_max: f64) -> f64 {
    g_max.min(p_max / p_in)
}

pub fn amplifier_state(p_in: f64, p_max: f64, g_max: f64) -> AmplifierState {
    let gain = optimal_gain(p_in, p_max, g_max);
    AmplifierState {
        gain,
        p_in,
        p_out: gain * p_in,
    }
}

/// Received SNR with amplifier gain `gain`.
pub fn snr_active(
    scenario: &SisoScenario,
    h: &ChannelVector,
    g: &ChannelVector,
    config: &PhaseConfig,
    gain: f64,
) -> f64 {
    let n = scenario.n as f64;
    let hh = combine(&config.phi, h).norm_sqr();
    let gg = combine(&config.theta, g).norm_sqr();
    let signal = scenario.p_t * gain / n * hh * gg;
    let noise = gain * scenario.noise_figure / n * gg * scenario.sigma2_tot + scenario.sigma2_rx;
    signal / noise
}

/// Passes `symbols` through the two-surface link, adding amplifier-input and
/// receiver noise.
pub fn simulate_received_symbols<R: Rng + ?Sized>(
    scenario: &SisoScenario,
    h: &ChannelVector,
    g: &ChannelVector,
    config: &PhaseConfig,
    gain: f64,
    symbols: &[Complex64],
    rng: &mut R,
) -> Vec<Complex64> {
    let n = scenario.n as f64;
    let hh = combine(&config.phi, h);
    let gg = combine(&config.theta, g);
    let a_sig = (gain * scenario.p_t / n).sqrt() * hh * gg;
    let a_tot = (gain * scenario.noise_figure / n).sqrt() * gg * scenario.sigma2_tot.sqrt();
    let a_rx = scenario.sigma2_rx.sqrt();
    symbols
        .iter()
        .map(|s| a_sig * s + a_tot * complex_normal(rng) + a_rx * complex_normal(rng))
        .collect()
}

/// `log2(1 + snr)`.
pub fn rate(snr: f64) -> f64 {
    snr.ln_1p() / std::f64::consts::LN_2
}

/// Coherently combined single-surface SNR `P_t (sum |c_i|)^2 / sigma2_rx`
/// from cascaded per-element gains `c_i = h_i g_i`.
pub fn snr_passive_baseline(p_t: f64, cascade: &[Complex64], sigma2_rx: f64) -> f64 {
    let s: f64 = cascade.iter().map(|c| c.norm()).sum();
    p_t * s * s / sigma2_rx
}

/// One channel realization evaluated for the active design (optimal gain and
/// gain pinned at `G_max`) and for the passive baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct SisoTrial {
    pub h: ChannelVector,
    pub g: ChannelVector,
    pub tx_state: LinkState,
    pub rx_state: LinkState,
    pub config: PhaseConfig,
    pub amplifier: AmplifierState,
    pub snr_active: f64,
    /// SNR at `G = G_max` ignoring the output-power limit.
    pub snr_fixed_gain: f64,
    pub snr_passive: f64,
}

/// Draws both hops (active panels with `N` elements, passive panel with `2N`
/// sharing the same LoS states) and evaluates every design on them.
pub fn sample_trial<R: Rng + ?Sized>(scenario: &SisoScenario, rng: &mut R) -> Result<SisoTrial> {
    let (d1, d2) = channel::link_distances(&scenario.geometry)?;
    let tx_state = channel::draw_link_state(d1, scenario.f_c, scenario.k1, scenario.tx_link, rng)?;
    let rx_state = channel::draw_link_state(d2, scenario.f_c, scenario.k2, scenario.rx_link, rng)?;
    let draw = |state: &LinkState, n: usize, rng: &mut R| {
        let spec = RicianSpec::with_random_los(state.k, n, rng);
        channel::sample_channel(&spec, &state.path_loss, rng)
    };
    let h = draw(&tx_state, scenario.n, rng);
    let g = draw(&rx_state, scenario.n, rng);
    let n_pas = scenario.passive_elements();
    let hp = draw(&tx_state, n_pas, rng);
    let gp = draw(&rx_state, n_pas, rng);

    let config = optimal_phases(&h, &g);
    let p_in = pa_input_power(scenario.p_t, &config.phi, &h);
    let amplifier = amplifier_state(p_in, scenario.p_max, scenario.g_max);
    let snr_act = snr_active(scenario, &h, &g, &config, amplifier.gain);
    let snr_fixed = snr_active(scenario, &h, &g, &config, scenario.g_max);
    let cascade: Vec<Complex64> = hp.gains.iter().zip(&gp.gains).map(|(a, b)| a * b).collect();
    let snr_pas = snr_passive_baseline(scenario.p_t, &cascade, scenario.sigma2_rx);
    Ok(SisoTrial {
        h,
        g,
        tx_state,
        rx_state,
        config,
        amplifier,
        snr_active: snr_act,
        snr_fixed_gain: snr_fixed,
        snr_passive: snr_pas,
    })
}

/// Counts BPSK decision errors over `n_symbols` transmissions through the
/// trial's active link with coherent detection.
pub fn bpsk_symbol_errors<R: Rng + ?Sized>(
    scenario: &SisoScenario,
    trial: &SisoTrial,
    n_symbols: usize,
    rng: &mut R,
) -> usize {
    let symbols: Vec<Complex64> = (0..n_symbols)
        .map(|_| Complex64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0))
        .collect();
    let y = simulate_received_symbols(
        scenario,
        &trial.h,
        &trial.g,
        &trial.config,
        trial.amplifier.gain,
        &symbols,
        rng,
    );
    let reference = combine(&trial.config.phi, &trial.h) * combine(&trial.config.theta, &trial.g);
    y.iter()
        .zip(&symbols)
        .filter(|(r, s)| (**r * reference.conj()).re.signum() != s.re.signum())
        .count()
}
