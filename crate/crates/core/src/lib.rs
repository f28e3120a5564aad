//! A numerical laboratory for the continuous-time extended Kalman-Bucy filter
//! on Langevin-type signals.
//!
//! The crate simulates the coupled signal / observation / filter / Riccati
//! system and confronts Monte-Carlo estimates with closed-form concentration,
//! moment and exponential-forgetting bounds.
//!
//! * [`linalg`]: small dense kernel (Jacobi eigensolver, PSD projection, square roots)
//! * [`models`]: drift families with their regularity constants, sensors
//! * [`dynamics`]: Euler-Maruyama signal, RK4 flow, EKF + stochastic Riccati, coupled runs
//! * [`bounds`]: every radius, rate and right-hand side as pure scalar math
//! * [`harness`]: seeded Monte-Carlo estimators, config, CSV/JSON output and the CLI

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod models;

pub use error::{Error, Result};
