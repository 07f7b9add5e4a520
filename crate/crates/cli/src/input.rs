//! JSON network documents. The schema lives in `schema/network.schema.json`.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sweepcert_core::network::{Loading, NetworkSpec};

use crate::PipelineError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadingInput {
    pub l0: f64,
    pub l1: f64,
}

/// The input document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkInput {
    pub m: usize,
    pub n: usize,
    /// Row-major, m rows of n entries.
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
    pub a: Vec<f64>,
    pub c_minus: Vec<f64>,
    pub c_plus: Vec<f64>,
    #[serde(rename = "R")]
    pub r: Vec<f64>,
    pub loading: LoadingInput,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
}

impl NetworkInput {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Input(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Input(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Convert to the core type; ragged `D` rows are rejected here.
    pub fn to_spec(&self) -> Result<NetworkSpec, PipelineError> {
        if self.d.len() != self.m {
            return Err(PipelineError::Input(format!(
                "D has {} rows, expected m = {}",
                self.d.len(),
                self.m
            )));
        }
        if let Some((i, row)) = self.d.iter().enumerate().find(|(_, r)| r.len() != self.n) {
            return Err(PipelineError::Input(format!(
                "D row {} has {} entries, expected n = {}",
                i + 1,
                row.len(),
                self.n
            )));
        }
        let flat: Vec<f64> = self.d.iter().flatten().copied().collect();
        Ok(NetworkSpec {
            m: self.m,
            n: self.n,
            kinematic: DMatrix::from_row_slice(self.m, self.n, &flat),
            stiffness: self.a.clone(),
            c_minus: self.c_minus.clone(),
            c_plus: self.c_plus.clone(),
            load_location: self.r.clone(),
            loading: Loading::new(self.loading.l0, self.loading.l1),
            period: self.period,
        })
    }

    pub fn from_spec(spec: &NetworkSpec) -> Self {
        let d = spec.kinematic.row_iter().map(|r| r.iter().copied().collect()).collect();
        Self {
            m: spec.m,
            n: spec.n,
            d,
            a: spec.stiffness.clone(),
            c_minus: spec.c_minus.clone(),
            c_plus: spec.c_plus.clone(),
            r: spec.load_location.clone(),
            loading: LoadingInput {
                l0: spec.loading.l0,
                l1: spec.loading.l1,
            },
            period: spec.period,
        }
    }
}
