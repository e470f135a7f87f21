//! Open-system simulator for electron-transfer-driven entanglement pumping.
//!
//! A damped electron-transfer (ET) qubit–boson pair acts as a dissipative
//! control knob on a target register. The crate builds the Hamiltonians,
//! integrates the Lindblad master equation, solves the reduced three-level
//! model, and runs the pumping protocols.
//!
//! Numerics are generic over [`Real`] (`f32`/`f64`); the aliases below fix
//! `f64`, which is what the protocols and the CLI use.

pub mod error;
pub mod hilbert;
pub mod lindblad;
pub mod models;
pub mod protocol;
pub mod reduced;
pub mod scalar;
pub mod sparse;
pub mod states;

pub use error::{Error, Result};
pub use scalar::{Real, C};

pub type Operator = hilbert::Operator<f64>;
pub type StateVector = hilbert::StateVector<f64>;
pub type DensityMatrix = hilbert::DensityMatrix<f64>;
pub type EtParams = models::EtParams<f64>;
pub type BathParams = models::BathParams<f64>;
pub type LindbladModel = lindblad::LindbladModel<f64>;
pub type IntegratorConfig = lindblad::IntegratorConfig<f64>;
pub type TimeSeries = lindblad::TimeSeries<f64>;
pub type ReducedModel = reduced::ReducedModel<f64>;
pub type ProtocolSchedule = protocol::ProtocolSchedule<f64>;
pub type ProtocolRun = protocol::ProtocolRun<f64>;
pub type NoiseSpec = protocol::NoiseSpec<f64>;
