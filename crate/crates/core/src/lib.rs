//! Haptic effects for a stylus with two vibration motors and a torque motor.
//!
//! [`timeline`] is the shared representation; [`movement`] and [`rotation`]
//! synthesize effects into it, [`motor`] simulates the actuators it drives,
//! [`protocol`] carries effects over a byte stream and [`harness`] runs
//! simulated perception studies.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
mod grid;
pub mod harness;
pub mod motor;
pub mod movement;
pub mod protocol;
pub mod rotation;
pub mod timeline;

pub use error::EffectError;
pub use grid::Interpolation;
