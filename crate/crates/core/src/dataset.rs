//! Process samples, datasets, feature scaling, splitting and error metrics.
//!
//! A [`Dataset`] is an ordered, immutable collection of `(F, S, h) -> W`
//! observations. Models are trained per nozzle height, so the feature vector
//! is `(F, S)` and `h` only selects which dataset a sample belongs to.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

/// Column names of the dataset CSV schema, in canonical order.
pub const CSV_HEADER: [&str; 4] = ["F_mm_per_min", "S_mm_per_min", "h_mm", "W_mm"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("non-numeric cell at row {row}, column `{col}`")]
    NonNumericCell { row: usize, col: String },
    #[error("non-positive value at row {row}, column `{col}`")]
    NonPositiveValue { row: usize, col: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid size: requested {requested} of {available}")]
    InvalidSize { requested: usize, available: usize },
    #[error("dataset is not a rectangular (f, s) grid")]
    NotAGrid,
    #[error("need between 2 and {available} levels, got {requested}")]
    TooFewLevels { requested: usize, available: usize },
    #[error("length mismatch: {0} predictions vs {1} truths")]
    LengthMismatch(usize, usize),
    #[error("no values to compare")]
    Empty,
    #[error("invalid sample {index}: {reason}")]
    InvalidSample { index: usize, reason: &'static str },
    #[error("csv: {0}")]
    Csv(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<csv::Error> for DatasetError {
    fn from(e: csv::Error) -> Self {
        DatasetError::Csv(e.to_string())
    }
}

impl From<std::io::Error> for DatasetError {
    fn from(e: std::io::Error) -> Self {
        DatasetError::Io(e.to_string())
    }
}

/// Where a sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    /// Cheap analytical process model.
    Source,
    /// Scarce ground-truth (experimental or synthetic) data.
    Target,
}

/// One observation of printed line width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Filament feed rate, mm/min.
    pub f: f64,
    /// Extruder (stage) speed, mm/min.
    pub s: f64,
    /// Nozzle-to-platen distance, mm.
    pub h: f64,
    /// Printed line width, mm.
    pub w: f64,
    pub origin: Origin,
}

impl Sample {
    pub fn new(f: f64, s: f64, h: f64, w: f64, origin: Origin) -> Self {
        Sample { f, s, h, w, origin }
    }

    fn check(&self) -> Result<(), &'static str> {
        if !(self.f.is_finite() && self.s.is_finite() && self.h.is_finite() && self.w.is_finite()) {
            return Err("non-finite field");
        }
        if self.f <= 0.0 || self.s <= 0.0 || self.h <= 0.0 {
            return Err("f, s and h must be positive");
        }
        if self.w < 0.0 {
            return Err("w must be non-negative");
        }
        Ok(())
    }
}

/// Immutable ordered collection of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    samples: Vec<Sample>,
}

impl Dataset {
    /// Validates every sample and builds the dataset. Order is preserved.
    pub fn new(samples: Vec<Sample>) -> Result<Self, DatasetError> {
        for (index, s) in samples.iter().enumerate() {
            s.check()
                .map_err(|reason| DatasetError::InvalidSample { index, reason })?;
        }
        Ok(Dataset { samples })
    }

    pub fn empty() -> Self {
        Dataset { samples: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn get(&self, i: usize) -> Option<&Sample> {
        self.samples.get(i)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sample> {
        self.samples.iter()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.w).collect()
    }

    /// Subset by index, in the order given.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i]).collect(),
        }
    }

    /// Concatenation `self ++ other`.
    pub fn concat(&self, other: &Dataset) -> Dataset {
        let mut samples = Vec::with_capacity(self.len() + other.len());
        samples.extend_from_slice(&self.samples);
        samples.extend_from_slice(&other.samples);
        Dataset { samples }
    }

    /// Same samples with every origin replaced.
    pub fn with_origin(&self, origin: Origin) -> Dataset {
        Dataset {
            samples: self.samples.iter().map(|s| Sample { origin, ..*s }).collect(),
        }
    }

    /// Distinct nozzle heights in ascending order.
    pub fn heights(&self) -> Vec<f64> {
        let mut hs: Vec<f64> = self.samples.iter().map(|s| s.h).collect();
        hs.sort_by(f64::total_cmp);
        hs.dedup();
        hs
    }

    /// Samples whose `h` equals the given value exactly.
    pub fn filter_h(&self, h: f64) -> Dataset {
        Dataset {
            samples: self.samples.iter().filter(|s| s.h == h).copied().collect(),
        }
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Sample;
    type IntoIter = std::slice::Iter<'a, Sample>;

    fn into_iter(self) -> Self::IntoIter {
        self.samples.iter()
    }
}

fn parse_cell(record: &csv::StringRecord, idx: usize, row: usize, col: &str) -> Result<f64, DatasetError> {
    let raw = record.get(idx).unwrap_or("").trim();
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| DatasetError::NonNumericCell { row, col: col.to_string() })
}

/// Reads a dataset CSV. Data rows are numbered from 1 in errors.
pub fn read_csv<R: Read>(reader: R, origin: Origin) -> Result<Dataset, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut cols = [0usize; 4];
    for (slot, name) in cols.iter_mut().zip(CSV_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))?;
    }
    let mut samples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let mut vals = [0.0; 4];
        for k in 0..4 {
            vals[k] = parse_cell(&record, cols[k], row, CSV_HEADER[k])?;
        }
        for k in 0..3 {
            if vals[k] <= 0.0 {
                return Err(DatasetError::NonPositiveValue { row, col: CSV_HEADER[k].to_string() });
            }
        }
        if vals[3] < 0.0 {
            return Err(DatasetError::NonPositiveValue { row, col: CSV_HEADER[3].to_string() });
        }
        samples.push(Sample::new(vals[0], vals[1], vals[2], vals[3], origin));
    }
    Dataset::new(samples)
}

/// Loads a CSV file; samples are tagged as [`Origin::Target`].
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    load_csv_as(path, Origin::Target)
}

pub fn load_csv_as(path: impl AsRef<Path>, origin: Origin) -> Result<Dataset, DatasetError> {
    let file = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(file), origin)
}

pub fn write_csv<W: Write>(writer: W, data: &Dataset) -> Result<(), DatasetError> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    wtr.write_record(CSV_HEADER)?;
    for s in data {
        wtr.write_record(&[s.f.to_string(), s.s.to_string(), s.h.to_string(), s.w.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_csv(path: impl AsRef<Path>, data: &Dataset) -> Result<(), DatasetError> {
    let file = std::fs::File::create(path)?;
    write_csv(std::io::BufWriter::new(file), data)
}

/// Per-feature standardization of `(f, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean_f: f64,
    pub mean_s: f64,
    pub std_f: f64,
    pub std_s: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    // Constant features become inert instead of dividing by zero.
    (mean, if std > 0.0 { std } else { 1.0 })
}

impl Scaler {
    /// Population mean and standard deviation of `f` and `s`.
    pub fn fit(data: &Dataset) -> Result<Scaler, DatasetError> {
        if data.is_empty() {
            return Err(DatasetError::EmptyDataset);
        }
        let (mean_f, std_f) = mean_std(data.iter().map(|s| s.f));
        let (mean_s, std_s) = mean_std(data.iter().map(|s| s.s));
        Ok(Scaler { mean_f, mean_s, std_f, std_s })
    }

    pub fn apply(&self, f: f64, s: f64) -> [f64; 2] {
        [(f - self.mean_f) / self.std_f, (s - self.mean_s) / self.std_s]
    }

    pub fn invert(&self, x: [f64; 2]) -> (f64, f64) {
        (x[0] * self.std_f + self.mean_f, x[1] * self.std_s + self.mean_s)
    }

    pub fn transform(&self, data: &Dataset) -> Vec<[f64; 2]> {
        data.iter().map(|s| self.apply(s.f, s.s)).collect()
    }
}

/// Convenience alias for [`Scaler::fit`].
pub fn fit_scaler(data: &Dataset) -> Result<Scaler, DatasetError> {
    Scaler::fit(data)
}

/// Index-level result of a random split; `train` and `test` partition `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndices {
    pub fn is_partition_of(&self, n: usize) -> bool {
        if self.train.len() + self.test.len() != n {
            return false;
        }
        let mut seen = vec![false; n];
        for &i in self.train.iter().chain(&self.test) {
            if i >= n || seen[i] {
                return false;
            }
            seen[i] = true;
        }
        true
    }
}

/// Shuffles `0..n` with the given generator and cuts off the first `n_train`.
pub fn random_split_indices<R: Rng + ?Sized>(n: usize, n_train: usize, rng: &mut R) -> Result<SplitIndices, DatasetError> {
    if n_train == 0 || n_train >= n {
        return Err(DatasetError::InvalidSize { requested: n_train, available: n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let test = idx.split_off(n_train);
    Ok(SplitIndices { train: idx, test })
}

/// Deterministic random partition into `n_train` training samples and the remainder.
pub fn random_split(data: &Dataset, n_train: usize, seed: u64) -> Result<(Dataset, Dataset), DatasetError> {
    let mut rng = rng::seeded(seed);
    let split = random_split_indices(data.len(), n_train, &mut rng)?;
    Ok((data.select(&split.train), data.select(&split.test)))
}

/// `round(linspace(0, levels - 1, k))`, rounding half away from zero.
pub fn equidistant_indices(levels: usize, k: usize) -> Vec<usize> {
    if k == 1 {
        return vec![0];
    }
    let last = (levels - 1) as f64;
    (0..k)
        .map(|i| (last * i as f64 / (k - 1) as f64).round() as usize)
        .collect()
}

fn distinct_sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Distinct `(s_levels, f_levels)` of a grid-structured dataset.
pub fn grid_levels(data: &Dataset) -> Result<(Vec<f64>, Vec<f64>), DatasetError> {
    let s_levels = distinct_sorted(data.iter().map(|x| x.s));
    let f_levels = distinct_sorted(data.iter().map(|x| x.f));
    let mut cells = HashSet::with_capacity(data.len());
    for x in data {
        if !cells.insert((x.f.to_bits(), x.s.to_bits())) {
            return Err(DatasetError::NotAGrid);
        }
    }
    if data.heights().len() > 1 {
        return Err(DatasetError::NotAGrid);
    }
    Ok((s_levels, f_levels))
}

/// Samples at the intersection of `n_s` equidistant S levels and `n_f`
/// equidistant F levels. Missing grid cells are skipped.
pub fn subgrid_select(data: &Dataset, n_s: usize, n_f: usize) -> Result<Dataset, DatasetError> {
    Ok(data.select(&subgrid_indices(data, n_s, n_f)?))
}

/// Index form of [`subgrid_select`], in dataset order.
pub fn subgrid_indices(data: &Dataset, n_s: usize, n_f: usize) -> Result<Vec<usize>, DatasetError> {
    let (s_levels, f_levels) = grid_levels(data)?;
    for (k, avail) in [(n_s, s_levels.len()), (n_f, f_levels.len())] {
        if k < 2 || k > avail {
            return Err(DatasetError::TooFewLevels { requested: k, available: avail });
        }
    }
    let keep_s: HashSet<u64> = equidistant_indices(s_levels.len(), n_s)
        .into_iter()
        .map(|i| s_levels[i].to_bits())
        .collect();
    let keep_f: HashSet<u64> = equidistant_indices(f_levels.len(), n_f)
        .into_iter()
        .map(|i| f_levels[i].to_bits())
        .collect();
    Ok(data
        .iter()
        .enumerate()
        .filter(|(_, x)| keep_s.contains(&x.s.to_bits()) && keep_f.contains(&x.f.to_bits()))
        .map(|(i, _)| i)
        .collect())
}

/// Root mean square error.
pub fn rmse(predictions: &[f64], truths: &[f64]) -> Result<f64, DatasetError> {
    if predictions.len() != truths.len() {
        return Err(DatasetError::LengthMismatch(predictions.len(), truths.len()));
    }
    if predictions.is_empty() {
        return Err(DatasetError::Empty);
    }
    let sse: f64 = predictions.iter().zip(truths).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sse / predictions.len() as f64).sqrt())
}
