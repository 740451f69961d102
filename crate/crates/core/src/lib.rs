//! Trace-driven simulator for a hybrid SRAM/STT-RAM L1 data cache in front
//! of PCM main memory, with power-failure injection and the baselines it is
//! compared against.

pub mod baseline;
pub mod config;
pub mod energy;
pub mod golden;
pub mod error;
pub mod event;
pub mod intermittence;
pub mod model;
pub mod policy;
pub mod report;
pub mod rng;
pub mod sim;
pub mod tech;
pub mod trace;

pub use error::{AddressError, ConfigError, GeometryError, ReportError, SimError, TraceError};
pub use model::{Address, BlockMeta, CacheGeometry, Conf, ContentTag, Region, Threshold};
pub use sim::{run, run_detailed, sweep, Architecture, RunReport, SimConfig};
