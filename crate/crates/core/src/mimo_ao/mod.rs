//! MIMO link through a hybrid active/passive surface: channel model,
//! per-stream LMMSE rate, and the rate-maximization solvers.
//!
//! [`ao_solve`] alternates a weighted-MMSE precoder update, Riemannian
//! gradient ascent on the phases and successive convex approximation on the
//! normalized amplitudes. [`pai_solve`], [`ga_solve`] and [`pso_solve`] are
//! the baselines.

pub mod ao;
pub mod heuristics;
pub mod precoder;
pub mod rate;
pub mod scenario;
pub mod surface;

pub use ao::{
    ao_solve, optimize_amplitudes, optimize_phases, pai_solve, AoOptions, AoState, SurfaceProblem,
};
pub use heuristics::{ga_solve, pso_solve, HeuristicOptions};
pub use precoder::optimize_precoder;
pub use rate::{
    effective_channel, lmmse_combiner, rate_lmmse, rate_with_combiner, LinkModel, NoiseModel,
};
pub use scenario::{rho, sample_channels, CMatrix, MimoChannels, MimoScenario};
pub use surface::{ris_power, AmplitudeModel, SurfaceModel};
