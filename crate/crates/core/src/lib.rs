//! Joint tracking of a beam direction and a complex channel coefficient for
//! a uniform linear phased array, from two pilots per slot.
//!
//! The numerical core ([`array`], [`estimation`], [`tracker`], [`analysis`],
//! [`scenario`], [`baselines`]) is generic over the real scalar type; the
//! Monte Carlo engine in [`harness`] runs in `f64`. The aliases below name
//! the common instantiations.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod array;
pub mod baselines;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod scalar;
pub mod scenario;
pub mod tracker;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ArrayConfigF64 = array::ArrayConfig<f64>;
pub type ArrayConfigF32 = array::ArrayConfig<f32>;
pub type ChannelStateF64 = array::ChannelState<f64>;
pub type ChannelStateF32 = array::ChannelState<f32>;
pub type BeamPairF64 = array::BeamPair<f64>;
pub type BeamPairF32 = array::BeamPair<f32>;
pub type ObservationF64 = array::Observation<f64>;
pub type ObservationF32 = array::Observation<f32>;
pub type FisherMatrixF64 = estimation::FisherMatrix<f64>;
pub type FisherMatrixF32 = estimation::FisherMatrix<f32>;
pub type TrackerStateF64 = tracker::TrackerState<f64>;
pub type TrackerStateF32 = tracker::TrackerState<f32>;
pub type StepScheduleF64 = tracker::StepSchedule<f64>;
pub type TrajectoryF64 = tracker::Trajectory<f64>;
