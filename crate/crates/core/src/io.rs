//! JSON file formats.
//!
//! States (`QSTATE` v1):
//!
//! ```json
//! { "version": 1, "dims": [2, 2], "matrix": [[[re, im], ...], ...] }
//! ```
//!
//! Channels:
//!
//! ```json
//! { "inDim": 4, "outDim": 4, "kraus": [ [[[re, im], ...], ...], ... ] }
//! ```
//!
//! Matrices are row-major. Floats are written in shortest round-trip form,
//! so reading back yields bit-identical values.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::state::{DensityMatrix, SubsystemLayout};

pub const QSTATE_VERSION: u32 = 1;

/// Row-major complex matrix as nested `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexMatrixJson(pub Vec<Vec<[f64; 2]>>);

impl From<&CMatrix> for ComplexMatrixJson {
    fn from(m: &CMatrix) -> Self {
        Self((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect())
    }
}

impl TryFrom<&ComplexMatrixJson> for CMatrix {
    type Error = Error;
    fn try_from(j: &ComplexMatrixJson) -> Result<Self> {
        let rows = j.0.len();
        let cols = j.0.first().map_or(0, Vec::len);
        if j.0.iter().any(|r| r.len() != cols) {
            return Err(Error::Format("ragged matrix rows".into()));
        }
        Ok(CMatrix::from_fn(rows, cols, |r, c| {
            let [re, im] = j.0[r][c];
            Complex64::new(re, im)
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QStateFile {
    pub version: u32,
    pub dims: Vec<usize>,
    pub matrix: ComplexMatrixJson,
}

impl QStateFile {
    pub fn from_state(rho: &DensityMatrix) -> Self {
        Self {
            version: QSTATE_VERSION,
            dims: rho.layout().dims().to_vec(),
            matrix: ComplexMatrixJson::from(rho.matrix()),
        }
    }

    /// Validates into a density matrix.
    pub fn into_state(self) -> Result<DensityMatrix> {
        if self.version != QSTATE_VERSION {
            return Err(Error::Format(format!("unsupported QSTATE version {}", self.version)));
        }
        let layout = SubsystemLayout::new(self.dims)?;
        let mat = CMatrix::try_from(&self.matrix)?;
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch { expected: mat.nrows(), found: mat.ncols() });
        }
        DensityMatrix::new(mat, layout)
    }
}

pub fn qstate_value(rho: &DensityMatrix) -> serde_json::Value {
    serde_json::to_value(QStateFile::from_state(rho)).expect("plain data serializes")
}

pub fn write_qstate(rho: &DensityMatrix) -> String {
    serde_json::to_string(&QStateFile::from_state(rho)).expect("plain data serializes")
}

pub fn read_qstate(text: &str) -> Result<DensityMatrix> {
    let file: QStateFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    file.into_state()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChannelFile {
    pub in_dim: usize,
    pub out_dim: usize,
    pub kraus: Vec<ComplexMatrixJson>,
}

impl ChannelFile {
    pub fn from_channel(ch: &KrausChannel) -> Self {
        Self { in_dim: ch.in_dim(), out_dim: ch.out_dim(), kraus: ch.kraus().iter().map(ComplexMatrixJson::from).collect() }
    }

    pub fn into_channel(self) -> Result<KrausChannel> {
        let kraus = self.kraus.iter().map(CMatrix::try_from).collect::<Result<Vec<_>>>()?;
        if let Some(k) = kraus.iter().find(|k| k.shape() != (self.out_dim, self.in_dim)) {
            return Err(Error::Format(format!(
                "Kraus operator is {}x{}, header says {}x{}",
                k.nrows(),
                k.ncols(),
                self.out_dim,
                self.in_dim
            )));
        }
        KrausChannel::new(kraus)
    }
}

pub fn write_channel(ch: &KrausChannel) -> String {
    serde_json::to_string(&ChannelFile::from_channel(ch)).expect("plain data serializes")
}

pub fn read_channel(text: &str) -> Result<KrausChannel> {
    let file: ChannelFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    file.into_channel()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use proptest::prelude::*;

    #[test]
    fn bell_file_shape() {
        let text = write_qstate(&generators::bell());
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["version"], 1);
        assert_eq!(v["dims"], serde_json::json!([2, 2]));
        assert!((v["matrix"][0][3][0].as_f64().unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(v["matrix"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(read_qstate("{"), Err(Error::Format(_))));
        let bad_version = r#"{"version":2,"dims":[2],"matrix":[[[0.5,0],[0,0]],[[0,0],[0.5,0]]]}"#;
        assert!(matches!(read_qstate(bad_version), Err(Error::Format(_))));
        let not_psd = r#"{"version":1,"dims":[2],"matrix":[[[1.5,0],[0,0]],[[0,0],[-0.5,0]]]}"#;
        assert!(matches!(read_qstate(not_psd), Err(Error::NotPsd(_))));
        let ragged = r#"{"version":1,"dims":[2],"matrix":[[[1,0]],[[0,0],[0,0]]]}"#;
        assert!(read_qstate(ragged).is_err());
    }

    #[test]
    fn channel_round_trip() {
        let ch = KrausChannel::random(4, 2, 3, 1).unwrap();
        let back = read_channel(&write_channel(&ch)).unwrap();
        assert_eq!(back, ch);
        let bad = r#"{"inDim":2,"outDim":2,"kraus":[[[[1,0],[0,0]],[[0,0],[0,0]]]]}"#;
        assert!(read_channel(bad).is_err());
    }

    proptest! {
        #[test]
        fn qstate_round_trip_is_exact(seed in any::<u64>(), rank in 1usize..=6) {
            let layout = SubsystemLayout::new(vec![2, 3]).unwrap();
            let rho = generators::ginibre_mixed(&layout, rank, seed).unwrap();
            let back = read_qstate(&write_qstate(&rho)).unwrap();
            prop_assert_eq!(back.layout(), rho.layout());
            prop_assert!(back.max_abs_diff(&rho) <= 1e-15);
        }
    }
}
