//! Modeling, simulation and optimization of amplifying reconfigurable
//! intelligent surfaces.
//!
//! Two architectures are covered:
//!
//! * a SISO link through two back-to-back passive panels joined by a single
//!   power amplifier ([`siso_pa`], with error-probability analysis in
//!   [`stats`] and power/energy-efficiency accounting in [`power_ee`]);
//! * a MIMO link through a surface whose unit cells embed a tunnel diode
//!   biased in its negative-resistance region ([`td_unitcell`],
//!   [`reflection`], [`mimo_ao`]).
//!
//! [`experiments`] ties everything to seeded Monte Carlo sweeps that emit CSV.

pub mod channel;
pub mod error;
pub mod experiments;
pub mod mimo_ao;
pub mod power_ee;
pub mod reflection;
pub mod rng;
pub mod siso_pa;
pub mod stats;
pub mod td_unitcell;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64;
