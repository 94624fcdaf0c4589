//! Deterministic approximation of `log Z_Λ(λ)/|Λ|` for repulsive,
//! translation-invariant pair potentials in a box `Λ_n = [-n, n)^d`.
//!
//! The estimate has two parts:
//!
//! - [`cluster`] computes the Mayer coefficients `C_k(Λ_n)/|Λ_n|` as mesh
//!   sums over connected graphs ([`graphs`]) with certified or adaptive
//!   mesh widths.
//! - [`interpolation`] pulls `log Z` back through a polynomial map of the
//!   unit disk into a neighbourhood of `[0, 1]` and sums the composed
//!   Taylor series with a per-coefficient error budget.
//!
//! [`pipeline::approximate_logz`] ties the two together. [`oracle`] holds
//! independent references (Tonks gas, direct quadrature, Monte Carlo,
//! chain-integral thresholds) used by [`pipeline::verify_run`] and the tests.
//!
//! ```no_run
//! use gibbs_interp::{cluster::Mode, pipeline::{approximate_logz, ZeroFreeInput}, potential::Potential};
//!
//! let rods = Potential::hard_sphere(1, 0.5)?;
//! let zf = ZeroFreeInput::new(0.1, 0.7, 1.4)?;
//! let r = approximate_logz(&rods, 2, &zf, 0.05, Mode::Adaptive)?;
//! println!("{} ± {}", r.log_z_per_volume, r.epsilon / r.volume());
//! # Ok::<(), gibbs_interp::Error>(())
//! ```

pub mod cli;
pub mod cluster;
pub mod error;
pub mod graphs;
pub mod hexfloat;
pub mod interpolation;
pub mod oracle;
pub mod pipeline;
pub mod potential;
pub mod sum;

pub use error::{Error, Result};
