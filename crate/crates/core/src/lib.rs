//! Numerical lab for complex-valued finite-time blow-up in u_t = Lap u + u^p with Re u > 0.

pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod field;
pub mod initial_data;
pub mod hermite;
pub mod jet;
pub mod lemmas;
pub mod monitor;
pub mod nonlinearity;
pub mod numerics;
pub mod params;
pub mod profiles;
pub mod reports;
pub mod shooting;

pub use error::{Error, Result};
pub use params::Params;
