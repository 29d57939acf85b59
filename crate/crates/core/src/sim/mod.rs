//! Synthetic wave flume: irregular incident waves, a moored floating box and
//! a gauge array upstream and downstream of it.

pub mod body;
pub mod flume;
pub mod mooring;
pub mod rk2;
pub mod transmission;
pub mod waves;

use thiserror::Error;

pub use body::{body_step, FloatBody, HydroCoefficients};
pub use flume::{generate_dataset, Flume, FlumeConfig};
pub use mooring::{mooring_step, MooringForces, MooringLine, MooringLineSpec, MooringState};
pub use rk2::Rk2;
pub use transmission::{downstream_elevation, MotionHistory, TransmissionModel};
pub use waves::{surface_elevation, synthesize_components, wavenumber, WaveComponent, WaveCondition};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("degenerate mooring geometry: segment {segment} has zero length")]
    DegenerateGeometry { segment: usize },
    #[error("{what} became unstable at node {node}, t = {t} s, dt = {dt} s")]
    Unstable { what: String, node: usize, t: f64, dt: f64 },
    #[error("simulation stopped after {rows} rows, last stable time {last_stable_time} s: {reason}")]
    Partial {
        last_stable_time: f64,
        rows: usize,
        reason: Box<SimError>,
        /// Rows recorded before the failure.
        partial: Option<Box<crate::data::Dataset>>,
    },
}
