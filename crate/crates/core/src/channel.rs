//! Link geometry, indoor-hotspot path loss and LoS probability, and
//! Rician/Rayleigh channel-vector sampling.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::complex_normal;
use crate::units::db_to_lin;

/// Placement of the surface relative to the terminals.
///
/// `d_v` is the vertical Tx–surface offset, `d_h` the horizontal offset of
/// the surface from the Tx, and `d` the Tx–Rx distance (all in meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub d_v: f64,
    pub d_h: f64,
    pub d: f64,
}

impl Geometry {
    pub fn new(d_v: f64, d_h: f64, d: f64) -> Result<Self> {
        let g = Self { d_v, d_h, d };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d_v > 0.0 && self.d > 0.0) || !self.d_v.is_finite() || !self.d.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "d_v = {} m and d = {} m must be positive",
                self.d_v, self.d
            )));
        }
        if !(0.0..=self.d).contains(&self.d_h) {
            return Err(Error::InvalidGeometry(format!(
                "d_h = {} m must lie in [0, d = {}] m",
                self.d_h, self.d
            )));
        }
        Ok(())
    }
}

/// Tx–surface and surface–Rx distances `(d1, d2)`.
pub fn link_distances(geom: &Geometry) -> Result<(f64, f64)> {
    geom.validate()?;
    let d1 = geom.d_v.hypot(geom.d_h);
    let d2 = geom.d_v.hypot(geom.d - geom.d_h);
    Ok((d1, d2))
}

fn check_range(d_n: f64, f_c: f64) -> Result<()> {
    if !(d_n >= 1.0) {
        return Err(Error::OutOfModelRange { distance: d_n });
    }
    if !(f_c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "carrier {f_c} GHz must be positive"
        )));
    }
    Ok(())
}

/// LoS path loss in dB, `d_n` in meters and `f_c` in GHz.
pub fn path_loss_los_db(d_n: f64, f_c: f64) -> Result<f64> {
    check_range(d_n, f_c)?;
    Ok(32.4 + 17.3 * d_n.log10() + 20.0 * f_c.log10())
}

/// NLoS path loss in dB; never below the LoS value at the same distance.
pub fn path_loss_nlos_db(d_n: f64, f_c: f64) -> Result<f64> {
    let los = path_loss_los_db(d_n, f_c)?;
    Ok(los.max(32.4 + 31.9 * d_n.log10() + 20.0 * f_c.log10()))
}

/// Indoor-hotspot LoS probability.
///
/// Continuous at 5 m. At 49 m the second branch ends at exp(-44/70.8) ≈
/// 0.5371 while the third starts at 0.54; the small jump is part of the model.
pub fn p_los(d_n: f64) -> f64 {
    if d_n <= 5.0 {
        1.0
    } else if d_n <= 49.0 {
        (-(d_n - 5.0) / 70.8).exp()
    } else {
        0.54 * (-(d_n - 49.0) / 211.7).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    pub value_db: f64,
    /// Power attenuation factor, `10^(value_db / 10)`.
    pub linear: f64,
}

impl PathLoss {
    pub fn from_db(value_db: f64) -> Self {
        Self {
            value_db,
            linear: db_to_lin(value_db),
        }
    }
}

/// How the LoS state of a hop is decided for each realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LosMode {
    /// Bernoulli draw with probability [`p_los`] per hop and realization.
    #[default]
    Random,
    /// Always LoS (Rician with the configured K).
    Los,
    /// Always NLoS (Rayleigh, NLoS path loss).
    Nlos,
}

impl std::str::FromStr for LosMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(LosMode::Random),
            "los" => Ok(LosMode::Los),
            "nlos" => Ok(LosMode::Nlos),
            other => Err(Error::Config(format!(
                "unknown LoS mode '{other}' (expected random, los or nlos)"
            ))),
        }
    }
}

/// Outcome of the LoS draw for one hop: it fixes both the Rician factor and
/// the path-loss branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    pub los: bool,
    pub k: f64,
    pub path_loss: PathLoss,
}

/// Draw the LoS state of a hop of length `d_n` with configured factor `k`.
pub fn draw_link_state<R: Rng + ?Sized>(
    d_n: f64,
    f_c: f64,
    k: f64,
    mode: LosMode,
    rng: &mut R,
) -> Result<LinkState> {
    let los = match mode {
        LosMode::Los => true,
        LosMode::Nlos => false,
        LosMode::Random => rng.random::<f64>() < p_los(d_n),
    };
    let (k, db) = if los {
        (k, path_loss_los_db(d_n, f_c)?)
    } else {
        (0.0, path_loss_nlos_db(d_n, f_c)?)
    };
    Ok(LinkState {
        los,
        k,
        path_loss: PathLoss::from_db(db),
    })
}

/// Rician structure of one hop: factor `k` and the deterministic unit-modulus
/// LoS gains, one per element.
#[derive(Debug, Clone, PartialEq)]
pub struct RicianSpec {
    pub k: f64,
    pub los_component: Vec<Complex64>,
}

impl RicianSpec {
    /// LoS gains `exp(j psi_i)` with `psi_i` uniform in [0, 2 pi), drawn once
    /// per realization.
    pub fn with_random_los<R: Rng + ?Sized>(k: f64, n_elements: usize, rng: &mut R) -> Self {
        let los_component = (0..n_elements)
            .map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU))
            .collect();
        Self { k, los_component }
    }

    pub fn n_elements(&self) -> usize {
        self.los_component.len()
    }
}

/// Complex per-element gains of one hop.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    pub gains: Vec<Complex64>,
}

impl ChannelVector {
    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn l1_norm(&self) -> f64 {
        self.gains.iter().map(|g| g.norm()).sum()
    }
}

/// `sqrt(1/lambda) (sqrt(K/(K+1)) los + sqrt(1/(K+1)) nlos)` per element.
pub fn sample_channel<R: Rng + ?Sized>(
    spec: &RicianSpec,
    path_loss: &PathLoss,
    rng: &mut R,
) -> ChannelVector {
    let scale = path_loss.linear.recip().sqrt();
    let (w_los, w_nlos) = if spec.k.is_infinite() {
        (1.0, 0.0)
    } else {
        (
            (spec.k / (spec.k + 1.0)).sqrt(),
            (1.0 / (spec.k + 1.0)).sqrt(),
        )
    };
    let gains = spec
        .los_component
        .iter()
        .map(|&los| scale * (w_los * los + w_nlos * complex_normal(rng)))
        .collect();
    ChannelVector { gains }
}

/// Draws the LoS state of a hop, its LoS phases and the channel vector.
pub fn sample_link<R: Rng + ?Sized>(
    d_n: f64,
    f_c: f64,
    k: f64,
    mode: LosMode,
    n_elements: usize,
    rng: &mut R,
) -> Result<(LinkState, ChannelVector)> {
    let state = draw_link_state(d_n, f_c, k, mode, rng)?;
    let spec = RicianSpec::with_random_los(state.k, n_elements, rng);
    let h = sample_channel(&spec, &state.path_loss, rng);
    Ok((state, h))
}
