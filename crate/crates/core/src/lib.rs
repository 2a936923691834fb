//! Compute core for systemic-risk visual analytics: a macroprudential data
//! cube, batch Self-Organizing Maps and Time Maps, co-occurrence networks
//! with force-directed layout, early-warning scoring, permalink state and
//! SVG rendering.
//!
//! Numerical types are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the `f64` instantiation used by the pipeline.

pub mod cube;
pub mod error;
pub mod ewm;
pub mod network;
pub mod pca;
pub mod scalar;
pub mod som;
pub mod sotm;
pub mod state;
pub mod svg;
pub mod time;

pub use cube::{ingest_events, ingest_observations, Axis, CubeSlice, EventRecord, PanelRow, Sample};
pub use error::{Error, ErrorKind, Result};
pub use network::{build_cooccurrence, fr_layout, pin_and_relax, CooccurrenceNetwork, OccurrenceRecord};
pub use scalar::Scalar;
pub use som::{GridCoord, Neighborhood};
pub use sotm::{AlluvialFlows, Assignments};
pub use state::{decode_state, encode_state, ViewId, ViewState};
pub use time::{TimePoint, TimeWindow};

pub type DataCube = cube::DataCube<f64>;
pub type SomModel = som::SomModel<f64>;
pub type SomConfig = som::TrainConfig<f64>;
pub type StateLayer = som::StateLayer<f64>;
pub type SotmModel = sotm::SotmModel<f64>;
pub type SotmConfig = sotm::SotmConfig<f64>;
pub type LayoutState = network::LayoutState<f64>;
pub type NetworkView = network::NetworkView<f64>;
pub type Frame = network::Frame<f64>;
pub type EwmModel = ewm::EwmModel<f64>;
pub type RiskSeries = ewm::RiskSeries<f64>;
pub type FitConfig = ewm::FitConfig<f64>;
