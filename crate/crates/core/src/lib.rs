//! Finite-time stability certificates for polyhedral sweeping processes
//! arising from elastoplastic spring networks under displacement-controlled
//! loading.
//!
//! The pipeline runs
//! [`validate_network`] → [`build_process`] → [`enumerate_scenarios`] →
//! [`evaluate_scenario`] → [`assemble_certificate`], and [`simulate`]
//! cross-checks a certificate with the catching-up scheme.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod certificate;
pub mod construction;
pub mod facets;
pub mod geometry;
pub mod linalg;
pub mod network;
pub mod simulator;

pub use certificate::{
    assemble_certificate, compute_diameter_bound, compute_eps0, compute_li, compute_sigma, Certificate,
    CertificateError, CertificateKind, CertificateOptions,
};
pub use construction::{build_process, ConstructionError, SweepingProcess};
pub use facets::{
    enumerate_scenarios, evaluate_scenario, FacetError, Feasibility, Scenario, ScenarioEvaluation, Sign,
    SignedIndex,
};
pub use geometry::{AMetric, ConeSpec, GeometryError};
pub use network::{validate_network, Loading, NetworkError, NetworkSpec, ValidatedNetwork};
pub use simulator::{simulate, SimulationOptions, SimulatorError, TargetFacet, Trajectory};

/// Any failure of the pipeline, tagged by module.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("network: {0}")]
    Network(#[from] NetworkError),
    #[error("construction: {0}")]
    Construction(#[from] ConstructionError),
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
    #[error("facets: {0}")]
    Facets(#[from] FacetError),
    #[error("certificate: {0}")]
    Certificate(#[from] CertificateError),
    #[error("simulator: {0}")]
    Simulator(#[from] SimulatorError),
}
