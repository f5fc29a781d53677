//! Exact state-vector simulation of a superconducting qubit coupled to a
//! one-dimensional chain of two-species two-level systems (hard-core bosons),
//! driven by a stochastic forward-time erasure sequence.
//!
//! The numerics are generic over [`Real`]; the aliases below fix the scalar
//! to `f64`, which every documented tolerance assumes.

pub mod analysis;
pub mod basis;
mod error;
pub mod fftie;
pub mod model;
pub mod propagation;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub use analysis::{FitResult, OffsetMode, ScalingResult, SeriesStats};
pub use basis::{Configuration, ModeLayout, Mode, SectorBasis, SectorSum};
pub use fftie::{
    Ensemble, FftieSchedule, FftieSystem, InitialState, QubitState, TimeAxis, Trajectory,
};
pub use model::{DiagonalOperator, HermitianOperator, ModelParams, SectorCouplingOperator};
pub use propagation::{Propagator, SpectralDecomposition, StateVector};

pub type ModelParamsF64 = ModelParams<f64>;
pub type HamiltonianF64 = HermitianOperator<f64>;
pub type DiagonalF64 = DiagonalOperator<f64>;
pub type SpectrumF64 = SpectralDecomposition<f64>;
pub type StateF64 = StateVector<f64>;
pub type ScheduleF64 = FftieSchedule<f64>;
pub type TrajectoryF64 = Trajectory<f64>;
pub type EnsembleF64 = Ensemble<f64>;
pub type SystemF64 = FftieSystem<f64>;
pub type FitF64 = FitResult<f64>;
pub type ScalingF64 = ScalingResult<f64>;

pub type ModelParamsF32 = ModelParams<f32>;
pub type StateF32 = StateVector<f32>;
pub type TrajectoryF32 = Trajectory<f32>;
