//! Discrete-time nanogrid simulation and control: smooths the net PV-plus-load
//! power output of a small site using battery storage and EV charging control,
//! so per-minute output changes stay within a ramp-rate limit.
//!
//! The crate is organized along the data flow:
//!
//! - [`timeseries`] — power series ingestion, validation, resampling, and a
//!   synthetic cloudy-day generator.
//! - [`assets`] — battery and EV SoC dynamics with rate limits, efficiencies,
//!   and the EV departure-deadline charging floor.
//! - [`forecast`] — persistence, feedforward-network, and perfect-foresight
//!   forecasters for PV and load.
//! - [`target`] — reference curves: the real-time clamp rule, the centered
//!   moving-average curve, the variance-damped curve, and window tuning.
//! - [`control`] — the per-step dispatch optimizer and the three controllers
//!   (reactive, moving-average predictive, variance predictive).
//! - [`sim`] — violation metrics, traces, controller comparison, and the
//!   bundled default scenario.
//!
//! All model types are plain values without interior mutability; scenarios
//! and fitted forecasters can be shared freely across threads.

pub mod assets;
pub mod control;
pub mod error;
pub mod forecast;
pub mod sim;
pub mod target;
pub mod timeseries;

pub use error::{Error, Result};
