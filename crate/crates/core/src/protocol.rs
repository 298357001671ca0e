//! Direct-vs-transfer benchmarking protocol.
//!
//! 1. Direct learning curve: for each training size, repeated random
//!    train/test splits of the target data, SVR fitted on target only.
//! 2. Plateau detection gives `n_direct` and the direct baseline RMSE.
//! 3. Transfer sweep: for each target sub-grid `(n_s, n_f)`, repeated
//!    TrAdaBoost.R2 fits with `n_direct` random source samples, each tested
//!    on `n_direct` random target samples outside the sub-grid. SVR
//!    hyperparameters are searched once per sub-grid.
//! 4. The smallest sub-grid whose mean RMSE does not exceed the direct
//!    baseline is reported together with both reduction percentages.
//!
//! [`run_benchmark`] evaluates only what the report depends on unless
//! [`BenchmarkConfig::exhaustive`] is set.
//!
//! Every repetition draws from its own random stream addressed by
//! `(phase, point, repetition)` and results are aggregated by index, so
//! outputs are bitwise identical for any number of worker threads.

use std::collections::HashSet;
use std::io::Write;

use rand::seq::{IndexedRandom, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{grid_levels, random_split_indices, rmse, subgrid_indices, Dataset, DatasetError};
use crate::rng;
use crate::svr::{accept_unconverged, fit_weighted_svr, GridSearch, SvrError, SvrParams};
use crate::transfer::{fit_tradaboost_r2, Loss, TransferConfig, TransferError};

const CURVE_STREAM: u64 = 1;
const SWEEP_STREAM: u64 = 2;
const SEARCH_STREAM: u64 = 3;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid training-size grid: {0}")]
    InvalidGrid(String),
    #[error("learning curve needs at least 3 points, got {0}")]
    TooShort(usize),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("train/test overlap in repetition {0}")]
    Leak(usize),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Svr(#[from] SvrError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> MeanStd {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

/// Runs `f` on a pool of `jobs` worker threads (all cores when `None`).
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    match builder.build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n_train: usize,
    pub mean_rmse: f64,
    pub std_rmse: f64,
    pub n_repetitions: usize,
    /// Hyperparameters used at this training size.
    pub params: SvrParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectLearningCurve {
    pub points: Vec<CurvePoint>,
}

impl DirectLearningCurve {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ProtocolError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        w.write_record(["n_train", "mean_rmse_mm", "std_rmse_mm", "n_repetitions", "c", "epsilon", "gamma"])?;
        for p in &self.points {
            w.write_record(&[
                p.n_train.to_string(),
                p.mean_rmse.to_string(),
                p.std_rmse.to_string(),
                p.n_repetitions.to_string(),
                p.params.c.to_string(),
                p.params.epsilon.to_string(),
                p.params.gamma.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `10, 20, ..., min(200, n_target - 50)`.
pub fn default_n_grid(n_target: usize) -> Vec<usize> {
    let hi = 200.min(n_target.saturating_sub(50));
    (1..).map(|k| 10 * k).take_while(|&n| n <= hi).collect()
}

/// Mean/std test RMSE of direct learning for each training size.
///
/// Hyperparameters are searched once per training size on the training set
/// of the first repetition and reused for every repetition.
pub fn direct_learning_curve(
    target: &Dataset,
    n_grid: &[usize],
    reps: usize,
    search: &GridSearch,
    seed: u64,
) -> Result<DirectLearningCurve, ProtocolError> {
    check_n_grid(target, n_grid, reps)?;
    let points = n_grid
        .iter()
        .enumerate()
        .map(|(pi, &n)| curve_point(target, n, pi, reps, search, seed))
        .collect::<Result<_, _>>()?;
    Ok(DirectLearningCurve { points })
}

fn check_n_grid(target: &Dataset, n_grid: &[usize], reps: usize) -> Result<(), ProtocolError> {
    if n_grid.is_empty() || reps == 0 {
        return Err(ProtocolError::InvalidGrid("need at least one size and one repetition".into()));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ProtocolError::InvalidGrid("sizes must be strictly increasing".into()));
    }
    let max = *n_grid.last().unwrap();
    if n_grid[0] < 2 || max >= target.len() {
        return Err(ProtocolError::InvalidGrid(format!(
            "sizes must lie in [2, {}), got {:?}",
            target.len(),
            n_grid
        )));
    }
    Ok(())
}

/// Curve point `pi` of training size `n`.
fn curve_point(
    target: &Dataset,
    n: usize,
    pi: usize,
    reps: usize,
    search: &GridSearch,
    seed: u64,
) -> Result<CurvePoint, ProtocolError> {
    let split_for = |r: usize| {
        let mut g = rng::stream(seed, &[CURVE_STREAM, pi as u64, r as u64]);
        random_split_indices(target.len(), n, &mut g)
    };
    let first = split_for(0)?;
    let first_train = target.select(&first.train);
    let params = search
        .run(&first_train, &vec![1.0; n], rng::derive_seed(seed, &[SEARCH_STREAM, CURVE_STREAM, pi as u64]))?
        .best;

    let errors = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<f64, ProtocolError> {
            let split = split_for(r)?;
            if !split.is_partition_of(target.len()) {
                return Err(ProtocolError::Leak(r));
            }
            let train = target.select(&split.train);
            let test = target.select(&split.test);
            let model = accept_unconverged(fit_weighted_svr(&train, &vec![1.0; n], &params, search.tol))?;
            Ok(rmse(&model.predict_dataset(&test), &test.targets())?)
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let stats = MeanStd::of(&errors);
    log::info!(
        "event=curve_point n_train={} mean_rmse={:.6} std_rmse={:.6} reps={} c={} epsilon={} gamma={}",
        n,
        stats.mean,
        stats.std,
        reps,
        params.c,
        params.epsilon,
        params.gamma
    );
    Ok(CurvePoint { n_train: n, mean_rmse: stats.mean, std_rmse: stats.std, n_repetitions: reps, params })
}

/// Direct-learning baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub n_direct: usize,
    pub rmse: MeanStd,
    /// `false` when the curve never flattened and the last point was taken.
    pub plateau: bool,
}

/// First training size after which the next two steps each improve the
/// mean RMSE by less than `rel_tol` (relative).
pub fn find_n_direct(curve: &DirectLearningCurve, rel_tol: f64) -> Result<Baseline, ProtocolError> {
    let pts = &curve.points;
    if pts.len() < 3 {
        return Err(ProtocolError::TooShort(pts.len()));
    }
    if let Some(i) = plateau_index(pts, rel_tol) {
        return Ok(Baseline {
            n_direct: pts[i].n_train,
            rmse: MeanStd { mean: pts[i].mean_rmse, std: pts[i].std_rmse },
            plateau: true,
        });
    }
    let last = pts.last().unwrap();
    Ok(Baseline {
        n_direct: last.n_train,
        rmse: MeanStd { mean: last.mean_rmse, std: last.std_rmse },
        plateau: false,
    })
}

fn plateau_index(pts: &[CurvePoint], rel_tol: f64) -> Option<usize> {
    let gain = |a: f64, b: f64| (a - b) / a;
    (0..pts.len().saturating_sub(2)).find(|&i| {
        gain(pts[i].mean_rmse, pts[i + 1].mean_rmse) < rel_tol && gain(pts[i + 1].mean_rmse, pts[i + 2].mean_rmse) < rel_tol
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    /// Target sub-grid sizes `(n_s, n_f)`. Empty selects [`default_subgrid_sizes`].
    pub subgrid_sizes: Vec<(usize, usize)>,
    pub eval_reps: usize,
    /// Test-set size; `None` uses `n_direct`.
    pub test_size: Option<usize>,
    pub n_iterations: usize,
    pub loss: Loss,
    pub search: GridSearch,
    pub search_data: SearchData,
    /// Fixed hyperparameters for every cell; `None` searches per cell.
    pub params: Option<SvrParams>,
}

/// Data the per-cell hyperparameter search runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchData {
    /// Target sub-grid alone; the union is used while the sub-grid has
    /// fewer than two samples per fold.
    Target,
    /// Uniform-weight union of the source subset and the target sub-grid.
    Union,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            subgrid_sizes: Vec::new(),
            eval_reps: 30,
            test_size: None,
            n_iterations: 30,
            loss: Loss::Linear,
            search: GridSearch::default(),
            search_data: SearchData::Target,
            params: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub n_s: usize,
    pub n_f: usize,
    pub n_t_actual: usize,
    pub mean_rmse_t: f64,
    pub std_rmse_t: f64,
    pub params: SvrParams,
    /// Mean number of boosting rounds kept per repetition.
    pub mean_rounds: f64,
    /// Repetitions where the first round already failed and the uniform
    /// union fit was used instead.
    pub fallback_reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferSweepResult {
    pub cells: Vec<SweepCell>,
    pub baseline: Baseline,
}

impl TransferSweepResult {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ProtocolError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        w.write_record([
            "n_s",
            "n_f",
            "n_t_actual",
            "mean_rmse_t_mm",
            "std_rmse_t_mm",
            "rmse_direct_mm",
            "n_direct",
            "c",
            "epsilon",
            "gamma",
        ])?;
        for c in &self.cells {
            w.write_record(&[
                c.n_s.to_string(),
                c.n_f.to_string(),
                c.n_t_actual.to_string(),
                c.mean_rmse_t.to_string(),
                c.std_rmse_t.to_string(),
                self.baseline.rmse.mean.to_string(),
                self.baseline.n_direct.to_string(),
                c.params.c.to_string(),
                c.params.epsilon.to_string(),
                c.params.gamma.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Near-square sub-grids `(k, k)`, `(k, k+1)`, `(k+1, k)` that fit the
/// target's levels, hold fewer than `n_direct` cells and leave room for the
/// test set.
pub fn default_subgrid_sizes(target: &Dataset, n_direct: usize, test_size: usize) -> Result<Vec<(usize, usize)>, ProtocolError> {
    let (s_levels, f_levels) = grid_levels(target)?;
    let budget = target.len().saturating_sub(test_size);
    let mut out = Vec::new();
    for k in 2..=s_levels.len().max(f_levels.len()) {
        for (ns, nf) in [(k, k), (k, k + 1), (k + 1, k)] {
            if ns <= s_levels.len() && nf <= f_levels.len() && ns * nf < n_direct && ns * nf <= budget {
                out.push((ns, nf));
            }
        }
    }
    Ok(sorted_cells(out))
}

fn sorted_cells(mut cells: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    cells.sort_by_key(|&(ns, nf)| (ns * nf, ns));
    cells.dedup();
    cells
}

/// Transfer learning on growing target sub-grids.
pub fn transfer_sweep(
    source_pool: &Dataset,
    target: &Dataset,
    baseline: &Baseline,
    cfg: &SweepConfig,
    seed: u64,
) -> Result<TransferSweepResult, ProtocolError> {
    if source_pool.is_empty() {
        return Err(ProtocolError::InsufficientData("source pool is empty".into()));
    }
    if cfg.eval_reps == 0 {
        return Err(ProtocolError::InvalidGrid("eval_reps must be at least 1".into()));
    }
    let sizes = sweep_sizes(source_pool, target, baseline, cfg)?;

    let cells = sizes
        .iter()
        .enumerate()
        .map(|(ci, &(n_s, n_f))| {
            let train_idx = subgrid_indices(target, n_s, n_f)?;
            sweep_cell(source_pool, target, baseline, cfg, (n_s, n_f, ci), &train_idx, seed)
        })
        .collect::<Result<_, _>>()?;
    Ok(TransferSweepResult { cells, baseline: *baseline })
}

fn sweep_sizes(
    source_pool: &Dataset,
    target: &Dataset,
    baseline: &Baseline,
    cfg: &SweepConfig,
) -> Result<Vec<(usize, usize)>, ProtocolError> {
    if source_pool.is_empty() {
        return Err(ProtocolError::InsufficientData("source pool is empty".into()));
    }
    if cfg.eval_reps == 0 {
        return Err(ProtocolError::InvalidGrid("eval_reps must be at least 1".into()));
    }
    let test_size = cfg.test_size.unwrap_or(baseline.n_direct);
    let sizes = if cfg.subgrid_sizes.is_empty() {
        default_subgrid_sizes(target, baseline.n_direct, test_size)?
    } else {
        sorted_cells(cfg.subgrid_sizes.clone())
    };
    if sizes.is_empty() {
        return Err(ProtocolError::InsufficientData("no sub-grid fits the target data".into()));
    }
    Ok(sizes)
}

/// One sweep cell: `eval_reps` transfer fits on the given target sub-grid.
/// `cell` is `(n_s, n_f, sweep index)`.
fn sweep_cell(
    source_pool: &Dataset,
    target: &Dataset,
    baseline: &Baseline,
    cfg: &SweepConfig,
    cell: (usize, usize, usize),
    train_idx: &[usize],
    seed: u64,
) -> Result<SweepCell, ProtocolError> {
    let (n_s, n_f, ci) = cell;
    let test_size = cfg.test_size.unwrap_or(baseline.n_direct);
    let n_source = baseline.n_direct.min(source_pool.len());
    let in_train: HashSet<usize> = train_idx.iter().copied().collect();
    let rest: Vec<usize> = (0..target.len()).filter(|i| !in_train.contains(i)).collect();
    if test_size == 0 || test_size > rest.len() {
        return Err(ProtocolError::InsufficientData(format!(
            "sub-grid {n_s}x{n_f} leaves {} target samples, test set needs {test_size}",
            rest.len()
        )));
    }
    let target_train = target.select(train_idx);

    let draw = |r: usize| {
        let mut g = rng::stream(seed, &[SWEEP_STREAM, ci as u64, r as u64]);
        let src: Vec<usize> = {
            let all: Vec<usize> = (0..source_pool.len()).collect();
            let mut picked: Vec<usize> = all.choose_multiple(&mut g, n_source).copied().collect();
            picked.sort_unstable();
            picked
        };
        let mut test = rest.clone();
        test.shuffle(&mut g);
        test.truncate(test_size);
        (src, test)
    };

    let params = match cfg.params {
        Some(p) => p,
        None => {
            let search_set = if cfg.search_data == SearchData::Target && target_train.len() >= 2 * cfg.search.k_folds {
                target_train.clone()
            } else {
                let (src0, _) = draw(0);
                source_pool.select(&src0).concat(&target_train)
            };
            cfg.search
                .run(&search_set, &vec![1.0; search_set.len()], rng::derive_seed(seed, &[SEARCH_STREAM, SWEEP_STREAM, ci as u64]))?
                .best
        }
    };
    let tcfg = TransferConfig { n_iterations: cfg.n_iterations, loss: cfg.loss, svr_params: params, tol: cfg.search.tol };

    let runs = (0..cfg.eval_reps)
        .into_par_iter()
        .map(|r| -> Result<(f64, usize, bool), ProtocolError> {
            let (src_idx, test_idx) = draw(r);
            if test_idx.iter().any(|i| in_train.contains(i)) {
                return Err(ProtocolError::Leak(r));
            }
            let source = source_pool.select(&src_idx);
            let test = target.select(&test_idx);
            let truths = test.targets();
            match fit_tradaboost_r2(&source, &target_train, &tcfg, seed) {
                Ok(ens) => Ok((rmse(&ens.predict_dataset(&test), &truths)?, ens.models.len(), false)),
                Err(TransferError::EnsembleEmpty(_)) => {
                    let union = source.concat(&target_train);
                    let m = accept_unconverged(fit_weighted_svr(&union, &vec![1.0; union.len()], &params, tcfg.tol))?;
                    Ok((rmse(&m.predict_dataset(&test), &truths)?, 1, true))
                }
                Err(e) => Err(e.into()),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;

    let errors: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let stats = MeanStd::of(&errors);
    let mean_rounds = runs.iter().map(|r| r.1 as f64).sum::<f64>() / runs.len() as f64;
    let fallback_reps = runs.iter().filter(|r| r.2).count();
    log::info!(
        "event=sweep_cell n_s={} n_f={} n_t={} mean_rmse_t={:.6} std_rmse_t={:.6} rounds={:.1} fallbacks={}",
        n_s,
        n_f,
        train_idx.len(),
        stats.mean,
        stats.std,
        mean_rounds,
        fallback_reps
    );
    Ok(SweepCell {
        n_s,
        n_f,
        n_t_actual: train_idx.len(),
        mean_rmse_t: stats.mean,
        std_rmse_t: stats.std,
        params,
        mean_rounds,
        fallback_reps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubgridSize {
    pub n_s: usize,
    pub n_f: usize,
    pub total: usize,
}

/// One row of the direct-vs-transfer comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub h_mm: f64,
    pub n_direct: usize,
    pub rmse_direct: MeanStd,
    pub n_t: SubgridSize,
    pub rmse_t: MeanStd,
    pub sample_reduction_pct: f64,
    pub rmse_reduction_pct: f64,
    /// Some cell matched the direct baseline.
    pub achieved: bool,
    /// The direct curve reached a plateau.
    pub plateau: bool,
}

/// `(n_direct - n_t) / n_direct * 100`.
pub fn sample_reduction_pct(n_direct: usize, n_t: usize) -> f64 {
    (n_direct as f64 - n_t as f64) / n_direct as f64 * 100.0
}

/// `(rmse_direct - rmse_t) / rmse_direct * 100`.
pub fn rmse_reduction_pct(rmse_direct: f64, rmse_t: f64) -> f64 {
    (rmse_direct - rmse_t) / rmse_direct * 100.0
}

/// Smallest sub-grid whose mean RMSE is at most the direct baseline. Ties
/// go to fewer S levels, then sweep order. Without a qualifying cell the
/// lowest-error cell is reported with `achieved = false`.
pub fn select_n_t(sweep: &TransferSweepResult, h_mm: f64) -> Option<BenchmarkReport> {
    let base = sweep.baseline;
    let qualifying = sweep
        .cells
        .iter()
        .enumerate()
        .filter(|(_, c)| c.mean_rmse_t <= base.rmse.mean)
        .min_by_key(|(i, c)| (c.n_t_actual, c.n_s, *i))
        .map(|(_, c)| c);
    let (cell, achieved) = match qualifying {
        Some(c) => (c, true),
        None => (
            sweep
                .cells
                .iter()
                .min_by(|a, b| a.mean_rmse_t.total_cmp(&b.mean_rmse_t))?,
            false,
        ),
    };
    Some(BenchmarkReport {
        h_mm,
        n_direct: base.n_direct,
        rmse_direct: base.rmse,
        n_t: SubgridSize { n_s: cell.n_s, n_f: cell.n_f, total: cell.n_t_actual },
        rmse_t: MeanStd { mean: cell.mean_rmse_t, std: cell.std_rmse_t },
        sample_reduction_pct: sample_reduction_pct(base.n_direct, cell.n_t_actual),
        rmse_reduction_pct: rmse_reduction_pct(base.rmse.mean, cell.mean_rmse_t),
        achieved,
        plateau: base.plateau,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    /// Training sizes of the direct curve. Empty selects [`default_n_grid`].
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub plateau_rel_tol: f64,
    pub search: GridSearch,
    pub sweep: SweepConfig,
    /// Evaluate every curve point and sweep cell. Otherwise the curve stops
    /// once the plateau is confirmed and the sweep skips cells that cannot
    /// beat the best qualifying one; the report is the same either way.
    pub exhaustive: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            n_grid: Vec::new(),
            reps: 1000,
            plateau_rel_tol: 0.01,
            search: GridSearch::default(),
            sweep: SweepConfig::default(),
            exhaustive: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkOutcome {
    pub curve: DirectLearningCurve,
    pub baseline: Baseline,
    pub sweep: TransferSweepResult,
    pub report: BenchmarkReport,
}

/// Full protocol for one nozzle height.
pub fn run_benchmark(
    source_pool: &Dataset,
    target: &Dataset,
    cfg: &BenchmarkConfig,
    seed: u64,
) -> Result<BenchmarkOutcome, ProtocolError> {
    let heights = target.heights();
    let h = match heights.as_slice() {
        [h] => *h,
        _ => return Err(ProtocolError::InsufficientData(format!("target must hold a single h, found {heights:?}"))),
    };
    let source_pool = source_pool.filter_h(h);
    if source_pool.is_empty() {
        return Err(ProtocolError::InsufficientData(format!("no source samples at h = {h}")));
    }
    let n_grid = if cfg.n_grid.is_empty() { default_n_grid(target.len()) } else { cfg.n_grid.clone() };
    if n_grid.len() < 3 {
        return Err(ProtocolError::InsufficientData(format!(
            "{} target samples give only {} curve points",
            target.len(),
            n_grid.len()
        )));
    }
    check_n_grid(target, &n_grid, cfg.reps)?;
    let mut points: Vec<CurvePoint> = Vec::with_capacity(n_grid.len());
    for (pi, &n) in n_grid.iter().enumerate() {
        points.push(curve_point(target, n, pi, cfg.reps, &cfg.search, seed)?);
        if !cfg.exhaustive && plateau_index(&points, cfg.plateau_rel_tol).is_some() {
            break;
        }
    }
    let curve = DirectLearningCurve { points };
    let baseline = find_n_direct(&curve, cfg.plateau_rel_tol)?;
    log::info!(
        "event=baseline h={} n_direct={} rmse_direct={:.6} plateau={}",
        h,
        baseline.n_direct,
        baseline.rmse.mean,
        baseline.plateau
    );

    let sizes = sweep_sizes(&source_pool, target, &baseline, &cfg.sweep)?;
    let mut cells: Vec<SweepCell> = Vec::with_capacity(sizes.len());
    // (n_t, n_s) of the best qualifying cell so far.
    let mut best: Option<(usize, usize)> = None;
    for (ci, &(n_s, n_f)) in sizes.iter().enumerate() {
        let train_idx = subgrid_indices(target, n_s, n_f)?;
        if !cfg.exhaustive && best.is_some_and(|b| (train_idx.len(), n_s) >= b) {
            continue;
        }
        let cell = sweep_cell(&source_pool, target, &baseline, &cfg.sweep, (n_s, n_f, ci), &train_idx, seed)?;
        if cell.mean_rmse_t <= baseline.rmse.mean && best.is_none_or(|b| (cell.n_t_actual, n_s) < b) {
            best = Some((cell.n_t_actual, n_s));
        }
        cells.push(cell);
    }
    let sweep = TransferSweepResult { cells, baseline };
    let report = select_n_t(&sweep, h).expect("sweep has at least one cell");
    Ok(BenchmarkOutcome { curve, baseline, sweep, report })
}

/// Shorthand used by examples and the CLI.
pub fn split_by_height(data: &Dataset) -> Vec<(f64, Dataset)> {
    data.heights().into_iter().map(|h| (h, data.filter_h(h))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn curve(means: &[f64]) -> DirectLearningCurve {
        DirectLearningCurve {
            points: means
                .iter()
                .enumerate()
                .map(|(i, &m)| CurvePoint {
                    n_train: 10 * (i + 1),
                    mean_rmse: m,
                    std_rmse: 0.01,
                    n_repetitions: 1,
                    params: SvrParams::default(),
                })
                .collect(),
        }
    }

    fn cell(n_s: usize, n_f: usize, n_t: usize, mean: f64) -> SweepCell {
        SweepCell {
            n_s,
            n_f,
            n_t_actual: n_t,
            mean_rmse_t: mean,
            std_rmse_t: 0.001,
            params: SvrParams::default(),
            mean_rounds: 30.0,
            fallback_reps: 0,
        }
    }

    #[test]
    fn plateau_rule() {
        let b = find_n_direct(&curve(&[0.20, 0.10, 0.095, 0.0949, 0.0948]), 0.01).unwrap();
        assert_eq!(b.n_direct, 30);
        assert_eq!(b.rmse.mean, 0.095);
        assert!(b.plateau);
        let steep: Vec<f64> = (0..6).map(|i| 0.9f64.powi(i)).collect();
        let b = find_n_direct(&curve(&steep), 0.01).unwrap();
        assert_eq!(b.n_direct, 60);
        assert!(!b.plateau);
        assert!(matches!(find_n_direct(&curve(&[0.1, 0.1]), 0.01), Err(ProtocolError::TooShort(2))));
    }

    #[test]
    fn pick_smallest_qualifying_cell() {
        let baseline = Baseline { n_direct: 150, rmse: MeanStd { mean: 0.104, std: 0.014 }, plateau: true };
        let sweep = TransferSweepResult { cells: vec![cell(6, 7, 42, 0.081), cell(8, 8, 66, 0.075)], baseline };
        let r = select_n_t(&sweep, 0.7).unwrap();
        assert!(r.achieved);
        assert_eq!(r.n_t.total, 42);
        assert_relative_eq!(r.sample_reduction_pct, 72.0, epsilon = 1e-12);
        assert!((r.rmse_reduction_pct - 22.1).abs() < 0.05);
    }

    #[test]
    fn no_qualifying_cell() {
        let baseline = Baseline { n_direct: 150, rmse: MeanStd { mean: 0.05, std: 0.01 }, plateau: true };
        let sweep = TransferSweepResult { cells: vec![cell(2, 2, 4, 0.2), cell(3, 3, 9, 0.1), cell(4, 4, 16, 0.15)], baseline };
        let r = select_n_t(&sweep, 0.85).unwrap();
        assert!(!r.achieved);
        assert_eq!(r.n_t.total, 9);
    }

    #[test]
    fn ties_prefer_fewer_s_levels() {
        let baseline = Baseline { n_direct: 100, rmse: MeanStd { mean: 0.1, std: 0.0 }, plateau: true };
        let sweep = TransferSweepResult { cells: vec![cell(3, 2, 6, 0.09), cell(2, 3, 6, 0.05)], baseline };
        assert_eq!(select_n_t(&sweep, 1.2).unwrap().n_t.n_s, 2);
    }

    #[test]
    fn default_grid_sizes() {
        assert_eq!(default_n_grid(256), (1..=20).map(|k| 10 * k).collect::<Vec<_>>());
        assert_eq!(default_n_grid(127), (1..=7).map(|k| 10 * k).collect::<Vec<_>>());
        assert!(default_n_grid(55).is_empty());
    }

    #[test]
    fn population_std() {
        let m = MeanStd::of(&[1.0, 3.0]);
        assert_eq!((m.mean, m.std), (2.0, 1.0));
    }
}
