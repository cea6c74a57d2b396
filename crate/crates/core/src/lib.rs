pub mod biorthogonality;
pub mod cli;
pub mod coalescence;
pub mod diffop;
pub mod error;
pub mod fit;
pub mod identity;
pub mod jordan;
pub mod model;
pub mod observables;
pub mod quadrature;
pub mod report;
pub mod scattering;
pub mod scaled;
pub mod suites;

pub use error::{Error, Result};
pub use model::{ModelKind, ModelParams, SpectralFunction};
