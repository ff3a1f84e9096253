//! Transient simulation of series-switch high-voltage half-bridges driving
//! capacitive actuator loads.

pub mod analysis;
pub mod circuit;
pub mod devices;
pub mod electromech;
pub mod error;
pub mod mna;
pub mod scenario;
pub mod topology;
pub mod units;
pub mod waveform;

pub use circuit::{Circuit, Component, ComponentKind, NodeId};
pub use error::{Error, ParseError, Result};
pub use waveform::Waveform;
