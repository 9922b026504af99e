//! Small-amplitude periodic traveling waves of the KdV-Burgers-Fisher
//! equation `u_t + αuu_x + u_xxx = u_xx + ru(1−u)`, born at the Hopf point
//! `c₀ = −r`, and their Floquet spectra computed by Hill's method.

pub mod bloch;
pub mod cli;
pub mod error;
pub mod fourier;
pub mod hopf;
pub mod linalg;
pub mod model;
pub mod orbit;
pub mod spectrum;
pub mod verify;

pub use error::{Error, Result};
pub use model::{Params, StateVec};
pub use orbit::WaveProfile;

/// Tag written into every output file.
pub fn generator_tag() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}
