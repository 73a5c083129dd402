//! Behavioral simulator of an MRAM read path with dynamic bias optimization.
//!
//! The crate is organized bottom-up:
//!
//! - [`device`]: analytic MTJ read model (bias-dependent TMR, cell currents,
//!   sensing margin, optimal bias) and temperature interpolation.
//! - [`analog`]: margin-extraction chain turning a margin curve into the
//!   voltage the controller samples.
//! - [`controller`]: the DBO state machine (compare, FLIP/COARSE, pump).
//! - [`engine`]: transient driver, metrics, margin sweeps, accuracy maps.
//! - [`variation`]: process-variation Monte Carlo and BER estimation.
//! - [`config`], [`commands`], [`io`], [`plot`]: scenario files, the
//!   commands behind the `mram-dbo` binary, CSV output and SVG plots.
//!
//! See `examples/` for one runnable program per capability.

pub mod analog;
pub mod commands;
pub mod config;
pub mod controller;
pub mod device;
pub mod engine;
mod error;
pub mod io;
pub mod plot;
pub mod stats;
pub mod variation;

pub use analog::AnalogConfig;
pub use config::ScenarioConfig;
pub use controller::{DboConfig, DboState};
pub use device::{Bias, DeviceParams, ThermalModel};
pub use engine::{run_transient, ThermalSchedule};
pub use error::{Error, Result};
pub use variation::{estimate_ber, BerMode, VariationSpec};
