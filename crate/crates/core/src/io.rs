//! JSON file formats. Complex numbers are `[re, im]` pairs; every versioned
//! document carries `"schema": 1`.

use serde::{Deserialize, Serialize};

use crate::discrete::ClassicalSet;
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector, Operator, StateVector, C64, NORM_TOL};
use crate::witness::Witness;

pub const SCHEMA_VERSION: u32 = 1;
/// Rows of a state-set file must have unit norm within this tolerance.
pub const FILE_NORM_TOL: f64 = 1e-9;

pub fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn pairs(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|&z| pair(z)).collect()
}

/// A vector given either as `[[re, im], ...]` or as real numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorSpec {
    Complex(Vec<[f64; 2]>),
    Real(Vec<f64>),
}

impl VectorSpec {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("vector: {e}")))
    }

    pub fn to_vector(&self) -> CVector {
        match self {
            VectorSpec::Complex(v) => CVector::from_iterator(v.len(), v.iter().map(|p| c(p[0], p[1]))),
            VectorSpec::Real(v) => CVector::from_iterator(v.len(), v.iter().map(|&x| c(x, 0.0))),
        }
    }

    /// Unit vector, rescaled if `normalize`; otherwise rejected when the norm
    /// is off by more than [`FILE_NORM_TOL`].
    pub fn to_state(&self, normalize: bool) -> Result<StateVector> {
        checked_state(self.to_vector(), normalize)
    }
}

fn checked_state(v: CVector, normalize: bool) -> Result<StateVector> {
    let norm = v.norm();
    if !normalize && (norm - 1.0).abs() > FILE_NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }
    if (norm - 1.0).abs() <= NORM_TOL {
        return StateVector::from_vector(v);
    }
    StateVector::normalize(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSetFile {
    pub dimension: usize,
    /// Each row complex pairs or plain reals.
    pub states: Vec<VectorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl StateSetFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("state set: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn from_states(states: &[StateVector], labels: Option<Vec<String>>) -> Self {
        Self {
            dimension: states.first().map_or(0, |s| s.dim()),
            states: states.iter().map(|s| VectorSpec::Complex(pairs(s.amplitudes()))).collect(),
            labels,
        }
    }

    pub fn to_states(&self, normalize: bool) -> Result<Vec<StateVector>> {
        if let Some(labels) = &self.labels {
            if labels.len() != self.states.len() {
                return Err(Error::Parse(format!(
                    "{} labels for {} states",
                    labels.len(),
                    self.states.len()
                )));
            }
        }
        self.states
            .iter()
            .map(|row| {
                let v = row.to_vector();
                if v.len() != self.dimension {
                    return Err(Error::DimensionMismatch {
                        expected: self.dimension,
                        found: v.len(),
                    });
                }
                checked_state(v, normalize)
            })
            .collect()
    }

    pub fn classical_set(&self, normalize: bool) -> Result<ClassicalSet> {
        ClassicalSet::new(self.to_states(normalize)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessFile {
    pub schema: u32,
    pub label: String,
    pub rows: usize,
    pub cols: usize,
    /// Row-major.
    pub entries: Vec<[f64; 2]>,
}

impl WitnessFile {
    pub fn from_witness(w: &Witness) -> Self {
        let m = w.operator().matrix();
        Self {
            schema: SCHEMA_VERSION,
            label: w.label().to_string(),
            rows: m.nrows(),
            cols: m.ncols(),
            entries: (0..m.nrows())
                .flat_map(|i| (0..m.ncols()).map(move |j| pair(m[(i, j)])))
                .collect(),
        }
    }

    pub fn to_witness(&self) -> Result<Witness> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Parse(format!("unsupported schema {}", self.schema)));
        }
        if self.entries.len() != self.rows * self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                found: self.entries.len(),
            });
        }
        let m = CMatrix::from_row_iterator(self.rows, self.cols, self.entries.iter().map(|p| c(p[0], p[1])));
        Witness::new(Operator::new(m), self.label.clone())
    }
}
