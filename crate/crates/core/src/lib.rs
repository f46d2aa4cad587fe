pub mod error;
pub mod quadrature;
pub mod scalar;
pub mod spectral;
pub mod chain;
pub mod norms;
pub mod trace;
pub mod integrator;
pub mod oracle;
pub mod experiments;

pub use error::{Error, Result};

pub type Field = spectral::FourierField<f64>;
pub type Grid = spectral::EtaGrid<f64>;
pub type Profile = spectral::BumpProfile<f64>;
pub type Background = spectral::BackgroundState<f64>;
pub type Kernel = spectral::KernelSpec<f64>;
pub type Schedule = chain::ChainSchedule<f64>;
pub type Trace = trace::RunTrace<f64>;
