//! Online entropy matching for test-time adaptation.
//!
//! A frozen empirical CDF of source entropies turns each test entropy into a
//! uniform score `u`. A betting martingale on `u` detects drift with an
//! anytime-valid false-alarm guarantee, its betting variable is learned by
//! scale-free online gradient descent, and the betting function doubles as
//! an estimate of the target CDF. Pushing `u` through that estimate and back
//! through the source pseudo-inverse yields pseudo-entropy targets for
//! self-training.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod betting;
pub mod ecdf;
pub mod engine;
pub mod error;
pub mod io;
pub mod losses;
pub mod presets;
pub mod sfogd;
pub mod streamgen;
pub mod toy;
pub mod transport;

pub use ecdf::EmpiricalCdf;
pub use engine::{Engine, EngineConfig, Mode, StepRecord, TransportPolicy};
pub use error::{Error, Result};
