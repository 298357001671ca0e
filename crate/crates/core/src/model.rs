//! On-disk model documents shared by `fit-direct`, `fit-transfer` and `predict`.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::svr::SvrModel;
use crate::transfer::TransferEnsemble;

/// A fitted model tagged with how it was trained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelFile {
    Direct { model: SvrModel },
    Transfer { ensemble: TransferEnsemble },
}

impl ModelFile {
    pub fn predict(&self, f: f64, s: f64) -> f64 {
        match self {
            ModelFile::Direct { model } => model.predict(f, s),
            ModelFile::Transfer { ensemble } => ensemble.predict(f, s),
        }
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Vec<f64> {
        data.iter().map(|x| self.predict(x.f, x.s)).collect()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Reads `F_mm_per_min,S_mm_per_min` pairs; any other columns are ignored.
pub fn read_features<R: std::io::Read>(reader: R) -> Result<Vec<(f64, f64)>, crate::dataset::DatasetError> {
    use crate::dataset::{DatasetError, CSV_HEADER};
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    };
    let (fi, si) = (col(CSV_HEADER[0])?, col(CSV_HEADER[1])?);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut vals = [0.0; 2];
        for (k, (idx, name)) in [(fi, CSV_HEADER[0]), (si, CSV_HEADER[1])].into_iter().enumerate() {
            let v: f64 = rec
                .get(idx)
                .and_then(|c| c.trim().parse().ok())
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| DatasetError::NonNumericCell { row: i + 1, col: name.to_string() })?;
            if v <= 0.0 {
                return Err(DatasetError::NonPositiveValue { row: i + 1, col: name.to_string() });
            }
            vals[k] = v;
        }
        out.push((vals[0], vals[1]));
    }
    Ok(out)
}
