use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::complex_normal;
use crate::td_unitcell::{CircuitParams, TunnelDiodeModel};
use crate::units::{db_to_lin, dbm_to_w, SPEED_OF_LIGHT};

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MimoScenario {
    pub m_t: usize,
    pub m_r: usize,
    /// Number of data streams.
    pub streams: usize,
    /// Surface elements.
    pub n: usize,
    /// Active elements; indices `0..n_active`, the rest are passive.
    pub n_active: usize,
    /// Thermal noise power (W).
    pub sigma2: f64,
    /// Receiver noise figure (linear).
    pub f_r: f64,
    /// Surface noise figure (linear).
    pub f_s: f64,
    /// Transmit power budget (W).
    pub p_t: f64,
    /// Surface bias power budget (W).
    pub p_ris: f64,
    pub d_ris_tx: f64,
    pub d_rx_ris: f64,
    pub d_tx_rx: f64,
    pub exponent_direct: f64,
    pub exponent_ris: f64,
    /// Carrier frequency (Hz).
    pub carrier: f64,
    pub active_circuit: CircuitParams,
    pub passive_circuit: CircuitParams,
    pub diode: TunnelDiodeModel,
}

impl Default for MimoScenario {
    /// Full-size setting: 8 antennas and streams, 64 active elements.
    fn default() -> Self {
        Self {
            m_t: 8,
            m_r: 8,
            streams: 8,
            n: 64,
            n_active: 64,
            sigma2: dbm_to_w(-113.93),
            f_r: db_to_lin(7.0),
            f_s: db_to_lin(2.0),
            p_t: dbm_to_w(-12.75),
            p_ris: 2.3,
            d_ris_tx: 40.0,
            d_rx_ris: 4.0,
            d_tx_rx: 40.2,
            exponent_direct: 5.0,
            exponent_ris: 2.0,
            carrier: 2.4e9,
            active_circuit: CircuitParams::active_default(),
            passive_circuit: CircuitParams::passive_default(),
            diode: TunnelDiodeModel::default(),
        }
    }
}

impl MimoScenario {
    /// Reduced setting for quick runs: 4 antennas and streams, 32 elements,
    /// budget scaled with the element count.
    pub fn desk() -> Self {
        let full = Self::default();
        Self {
            m_t: 4,
            m_r: 4,
            streams: 4,
            n: 32,
            n_active: 32,
            p_ris: full.p_ris * 0.5,
            ..full
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_t == 0 || self.m_r == 0 || self.streams == 0 || self.n == 0 {
            return Err(Error::InvalidParameter(
                "antenna, stream and element counts must be >= 1".into(),
            ));
        }
        if self.streams > self.m_t.min(self.m_r) {
            return Err(Error::InvalidParameter(format!(
                "{} streams exceed min(M_T, M_R) = {}",
                self.streams,
                self.m_t.min(self.m_r)
            )));
        }
        if self.n_active > self.n {
            return Err(Error::InvalidParameter(format!(
                "N_act = {} exceeds N = {}",
                self.n_active, self.n
            )));
        }
        let positive = [
            self.sigma2,
            self.f_r,
            self.f_s,
            self.p_t,
            self.p_ris,
            self.d_ris_tx,
            self.d_rx_ris,
            self.d_tx_rx,
            self.carrier,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(
                "powers, noise figures, distances and carrier must be positive".into(),
            ));
        }
        self.active_circuit.validate()?;
        self.passive_circuit.validate()?;
        self.diode.validate()
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier
    }

    /// Cascaded path loss `lambda^4 / (16 pi^2) (d_RIS,Tx d_Rx,RIS)^-2`.
    pub fn cascaded_path_loss(&self) -> f64 {
        cascaded_path_loss(self.wavelength(), self.d_ris_tx, self.d_rx_ris)
    }

    pub fn rho(&self) -> f64 {
        rho(
            self.p_t,
            self.wavelength(),
            self.d_ris_tx,
            self.d_rx_ris,
            self.sigma2,
            self.f_r,
        )
    }

    /// Same scenario with the transmit power set to reach normalized SNR `rho`.
    pub fn with_rho(self, rho: f64) -> Self {
        Self {
            p_t: rho * self.sigma2 * self.f_r / self.cascaded_path_loss(),
            ..self
        }
    }

    pub fn is_active(&self, element: usize) -> bool {
        element < self.n_active
    }
}

pub fn cascaded_path_loss(wavelength: f64, d_ris_tx: f64, d_rx_ris: f64) -> f64 {
    wavelength.powi(4) / (16.0 * std::f64::consts::PI.powi(2)) / (d_ris_tx * d_rx_ris).powi(2)
}

/// Normalized SNR `P_T P_L / (sigma^2 F_r)`.
pub fn rho(p_t: f64, wavelength: f64, d_ris_tx: f64, d_rx_ris: f64, sigma2: f64, f_r: f64) -> f64 {
    p_t * cascaded_path_loss(wavelength, d_ris_tx, d_rx_ris) / (sigma2 * f_r)
}

/// Per-link power gain `lambda^2 / (4 pi) d^-exponent`; the two surface hops
/// multiply to the cascaded path loss.
pub fn link_gain(wavelength: f64, distance: f64, exponent: f64) -> f64 {
    wavelength * wavelength / (4.0 * std::f64::consts::PI) * distance.powf(-exponent)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MimoChannels {
    /// `M_R x M_T` direct channel.
    pub h_d: CMatrix,
    /// `N x M_T` Tx to surface.
    pub h1: CMatrix,
    /// `M_R x N` surface to Rx.
    pub h2: CMatrix,
}

impl MimoChannels {
    pub fn n_elements(&self) -> usize {
        self.h1.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let (m_r, m_t) = self.h_d.shape();
        let n = self.h1.nrows();
        if self.h1.ncols() != m_t || self.h2.shape() != (m_r, n) {
            return Err(Error::Dimension(format!(
                "H_d {:?}, H1 {:?}, H2 {:?}",
                self.h_d.shape(),
                self.h1.shape(),
                self.h2.shape()
            )));
        }
        Ok(())
    }

    pub fn zeros(m_r: usize, m_t: usize, n: usize) -> Self {
        Self {
            h_d: CMatrix::zeros(m_r, m_t),
            h1: CMatrix::zeros(n, m_t),
            h2: CMatrix::zeros(m_r, n),
        }
    }
}

fn rayleigh<R: Rng + ?Sized>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> CMatrix {
    let s = gain.sqrt();
    CMatrix::from_fn(rows, cols, |_, _| s * complex_normal(rng))
}

/// Path-loss-scaled Rayleigh draws of the three links.
pub fn sample_channels<R: Rng + ?Sized>(scenario: &MimoScenario, rng: &mut R) -> MimoChannels {
    let lam = scenario.wavelength();
    let h_d = rayleigh(
        scenario.m_r,
        scenario.m_t,
        link_gain(lam, scenario.d_tx_rx, scenario.exponent_direct),
        rng,
    );
    let h1 = rayleigh(
        scenario.n,
        scenario.m_t,
        link_gain(lam, scenario.d_ris_tx, scenario.exponent_ris),
        rng,
    );
    let h2 = rayleigh(
        scenario.m_r,
        scenario.n,
        link_gain(lam, scenario.d_rx_ris, scenario.exponent_ris),
        rng,
    );
    MimoChannels { h_d, h1, h2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::units::lin_to_db;

    #[test]
    fn rho_scaling() {
        let lam = 0.125;
        let base = rho(1e-3, lam, 10.0, 5.0, 1e-12, 2.0);
        assert!((rho(1e-3, lam, 20.0, 10.0, 1e-12, 2.0) - base / 16.0).abs() < 1e-12 * base);
        assert!((rho(2e-3, lam, 10.0, 5.0, 1e-12, 2.0) - 2.0 * base).abs() < 1e-12 * base);
    }

    #[test]
    fn default_rho_value() {
        let r = lin_to_db(MimoScenario::default().rho());
        assert!((r + 8.0).abs() < 0.1, "{r}");
    }

    #[test]
    fn with_rho_round_trips() {
        let s = MimoScenario::desk().with_rho(db_to_lin(-10.0));
        assert!((lin_to_db(s.rho()) + 10.0).abs() < 1e-9);
    }

    #[test]
    fn link_gains_multiply_to_cascade() {
        let s = MimoScenario::default();
        let lam = s.wavelength();
        let prod = link_gain(lam, s.d_ris_tx, 2.0) * link_gain(lam, s.d_rx_ris, 2.0);
        assert!((prod - s.cascaded_path_loss()).abs() < 1e-12 * prod);
    }

    #[test]
    fn channel_shapes_and_power() {
        let s = MimoScenario::desk();
        let mut rng = stream(1, 0);
        let ch = sample_channels(&s, &mut rng);
        ch.validate().unwrap();
        assert_eq!(ch.h1.shape(), (32, 4));
        assert_eq!(ch.h2.shape(), (4, 32));
        let mut acc = 0.0;
        let draws = 400;
        for _ in 0..draws {
            acc += sample_channels(&s, &mut rng)
                .h2
                .iter()
                .map(|x| x.norm_sqr())
                .sum::<f64>();
        }
        let mean = acc / (draws * 4 * 32) as f64;
        let expect = link_gain(s.wavelength(), s.d_rx_ris, 2.0);
        assert!((mean - expect).abs() / expect < 0.05);
    }

    #[test]
    fn validation() {
        assert!(MimoScenario {
            streams: 5,
            ..MimoScenario::desk()
        }
        .validate()
        .is_err());
        assert!(MimoScenario {
            n_active: 33,
            ..MimoScenario::desk()
        }
        .validate()
        .is_err());
        MimoScenario::desk().validate().unwrap();
        MimoScenario::default().validate().unwrap();
    }
}
