//! Brute-force hyperparameter search by k-fold cross-validation.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{accept_unconverged, PreparedProblem, SolverOptions, SvrError, SvrParams, DEFAULT_TOL};
use crate::dataset::{rmse, Dataset};
use crate::rng;

/// `c x gamma x epsilon` = `{0.1, 1, 10, 100} x {0.01, 0.1, 1, 10} x {0.001, 0.01, 0.05}`.
pub fn default_grid() -> Vec<SvrParams> {
    let mut grid = Vec::with_capacity(48);
    for c in [0.1, 1.0, 10.0, 100.0] {
        for gamma in [0.01, 0.1, 1.0, 10.0] {
            for epsilon in [0.001, 0.01, 0.05] {
                grid.push(SvrParams { c, epsilon, gamma });
            }
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSearch {
    pub grid: Vec<SvrParams>,
    pub k_folds: usize,
    pub tol: f64,
}

impl Default for GridSearch {
    fn default() -> Self {
        GridSearch { grid: default_grid(), k_folds: 5, tol: DEFAULT_TOL }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub best: SvrParams,
    pub best_index: usize,
    /// Mean CV RMSE of every grid point, in grid order.
    pub scores: Vec<f64>,
}

impl GridSearch {
    /// Scores every grid point and returns the lowest mean CV RMSE; the first
    /// grid point wins ties.
    pub fn run(&self, train: &Dataset, weights: &[f64], seed: u64) -> Result<GridSearchResult, SvrError> {
        if self.grid.is_empty() {
            return Err(SvrError::EmptyGrid);
        }
        let k = self.k_folds;
        if k < 2 || train.len() < k {
            return Err(SvrError::TooFewSamples { needed: k.max(2), got: train.len() });
        }
        if weights.len() != train.len() {
            return Err(SvrError::WeightMismatch { expected: train.len(), got: weights.len() });
        }
        for p in &self.grid {
            p.validate()?;
        }

        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut rng::seeded(seed));
        let folds: Vec<(Vec<usize>, Vec<usize>)> = (0..k)
            .map(|fold| {
                let mut fit = Vec::new();
                let mut held = Vec::new();
                for (pos, &i) in order.iter().enumerate() {
                    if pos % k == fold {
                        held.push(i);
                    } else {
                        fit.push(i);
                    }
                }
                (fit, held)
            })
            .collect();

        let mut gammas: Vec<f64> = self.grid.iter().map(|p| p.gamma).collect();
        gammas.sort_by(f64::total_cmp);
        gammas.dedup();

        let opts = SolverOptions::with_tol(self.tol);
        let jobs: Vec<(usize, f64)> = (0..k).flat_map(|f| gammas.iter().map(move |&g| (f, g))).collect();
        // (fold, grid index, rmse) for every job.
        let per_job: Vec<Vec<(usize, f64)>> = jobs
            .par_iter()
            .map(|&(fold, gamma)| -> Result<Vec<(usize, f64)>, SvrError> {
                let (fit_idx, held_idx) = &folds[fold];
                let fit_set = train.select(fit_idx);
                let held_set = train.select(held_idx);
                let fit_w: Vec<f64> = fit_idx.iter().map(|&i| weights[i]).collect();
                let problem = PreparedProblem::new(&fit_set, gamma)?;
                let truths = held_set.targets();
                let mut out = Vec::new();
                for (gi, p) in self.grid.iter().enumerate().filter(|(_, p)| p.gamma == gamma) {
                    let model = accept_unconverged(problem.solve(&fit_w, p, &opts))?;
                    let preds = model.predict_dataset(&held_set);
                    out.push((gi, rmse(&preds, &truths)?));
                }
                Ok(out)
            })
            .collect::<Result<_, _>>()?;

        let mut sums = vec![0.0; self.grid.len()];
        // Accumulate fold by fold so the sum order never depends on scheduling.
        for fold_results in &per_job {
            for &(gi, e) in fold_results {
                sums[gi] += e;
            }
        }
        let scores: Vec<f64> = sums.iter().map(|s| s / k as f64).collect();
        let mut best_index = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s < scores[best_index] {
                best_index = i;
            }
        }
        Ok(GridSearchResult { best: self.grid[best_index], best_index, scores })
    }
}

/// Grid point with the lowest mean k-fold CV RMSE (first wins ties).
pub fn grid_search_cv(
    train: &Dataset,
    weights: &[f64],
    grid: &[SvrParams],
    k_folds: usize,
    seed: u64,
) -> Result<SvrParams, SvrError> {
    let search = GridSearch { grid: grid.to_vec(), k_folds, tol: DEFAULT_TOL };
    Ok(search.run(train, weights, seed)?.best)
}
