//! Simulation and contraction analysis of excitable neuron models: FitzHugh-Nagumo neurons,
//! an excitatory-inhibitory regulation network with an internal-model controller, and a
//! resonant linear oscillator.
//!
//! Numerical routines are generic over [`Real`] (`f32` or `f64`); the `*64` and `*32` aliases
//! below fix the scalar type.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod contraction;
pub mod error;
pub mod grid;
pub mod integrator;
pub mod models;
pub mod report;
pub mod scalar;
pub mod scenarios;
pub mod signals;

pub use analysis::{EventKind, EventTrain};
pub use contraction::{ContractionCertificate, DistanceCurve, Metric, RegionLabel};
pub use error::{Error, Result};
pub use grid::Grid;
pub use integrator::{integrate, integrate_ensemble, EnsembleRun, Trajectory};
pub use models::{
    EiNetworkParams, ExoDrivenNetwork, Exosystem, FhnParams, LtiParams, ModelSpec, NetworkState, NeuronState,
    SineDrivenLti, VectorField,
};
pub use scalar::Real;
pub use scenarios::{ScenarioField, ScenarioResult, ScenarioSpec};
pub use signals::{NoiseSegment, SampledPath, Signal};

pub type FhnParams64 = FhnParams<f64>;
pub type EiNetworkParams64 = EiNetworkParams<f64>;
pub type LtiParams64 = LtiParams<f64>;
pub type Signal64 = Signal<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type EnsembleRun64<M> = EnsembleRun<f64, M>;
pub type Certificate64 = ContractionCertificate<f64>;
pub type ModelSpec64 = ModelSpec<f64>;
pub type ScenarioSpec64 = ScenarioSpec<f64>;
pub type ScenarioResult64 = ScenarioResult<f64>;

pub type FhnParams32 = FhnParams<f32>;
pub type Signal32 = Signal<f32>;
pub type Trajectory32 = Trajectory<f32>;
pub type ScenarioSpec32 = ScenarioSpec<f32>;
