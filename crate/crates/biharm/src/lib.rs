//! Simulation of the stochastic biharmonic wave equation driven by
//! microlocally isotropic Gaussian sources, and reconstruction of the source
//! strength from frequency-band averages and Monte Carlo measurement
//! statistics.

pub mod error;
pub mod estimators;
pub mod forward;
pub mod greens;
pub mod inverse;
pub mod randsrc;
pub mod specfun;

pub use error::{Error, Result};

/// Spatial dimension of the model; only 2 and 3 are supported.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn value(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    pub fn from_value(d: usize) -> Result<Dim> {
        match d {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            _ => Err(Error::Config(format!("unsupported dimension {d}"))),
        }
    }
}

impl std::fmt::Display for Dim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.value())
    }
}
