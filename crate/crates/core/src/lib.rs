//! Spectral laboratory for a rotating, gravity-stratified compressible flow
//! model and the limit systems it collapses onto under fast rotation and low
//! Mach number.
//!
//! The crate is organized around a single small-parameter family: Mach number
//! `eps^m`, Froude number `eps^(m/2)`, Rossby number `eps` on the flat torus
//! (with the vertical direction carried as an even/odd reflection). Modules:
//!
//! - [`thermo`]: equation of state, linearization coefficients, relative
//!   entropy, structural audits.
//! - [`equilibrium`]: static density profiles under centrifugal/gravity
//!   forcing and their convergence rates.
//! - [`spectral`]: FFT grids, parity-aware fields, derivative and projection
//!   operators.
//! - [`lp`]: dyadic frequency decomposition, Besov norms, Bernstein checks.
//! - [`waves`]: the fast acoustic–Coriolis wave operator, solved exactly per
//!   Fourier mode.
//! - [`limits`]: quasi-geostrophic and Oberbeck–Boussinesq limit solvers.
//! - [`primitive`]: the full compressible solver in deviation form.
//! - [`harness`]: configuration, deterministic data generation, sweeps and
//!   reports for convergence studies.
//!
//! ```
//! use nsflab::thermo::ThermoModel;
//! use nsflab::scaling::EpsilonScaling;
//!
//! let eos = ThermoModel::default();
//! let c = eos.linearization_coeffs().unwrap();
//! let scl = EpsilonScaling::new(0.1, 1.0).unwrap();
//! // acoustic propagation speed over the slow manifold
//! let speed = c.a_wave.sqrt() / scl.mach();
//! assert!(speed > 10.0);
//! ```

pub mod error;
pub mod equilibrium;
pub mod harness;
pub mod limits;
pub mod primitive;
pub mod lp;
pub mod ratefit;
pub mod scaling;
pub mod waves;
pub mod spectral;
pub mod thermo;

pub(crate) mod util;

pub use error::{Error, Result};
