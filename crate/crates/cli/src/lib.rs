//! Pipeline, report generation and thread configuration behind the
//! `sweepcert` binary.

pub mod input;
pub mod pipeline;
pub mod report;
pub mod threads;

use sweepcert_core::{CertificateError, ConstructionError, FacetError, NetworkError, SimulatorError};
use thiserror::Error;

pub use input::NetworkInput;
pub use pipeline::{run_pipeline, Analysis, PipelineOptions, ScenarioFilter, Stage};
pub use report::{AnalysisReport, EXIT_NO_CERTIFICATE, EXIT_CERTIFIED, EXIT_ERROR};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("input: {0}")]
    Input(String),
    #[error("options: {0}")]
    Options(String),
    #[error("network: {0}")]
    Network(#[from] NetworkError),
    #[error("construction: {0}")]
    Construction(#[from] ConstructionError),
    #[error("facets: {0}")]
    Facets(#[from] FacetError),
    #[error("certificate: {0}")]
    Certificate(#[from] CertificateError),
    #[error("simulator: {0}")]
    Simulator(#[from] SimulatorError),
    #[error("output: {0}")]
    Output(String),
}
