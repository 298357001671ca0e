//! Weighted epsilon-SVR with a Gaussian RBF kernel.
//!
//! Instance weights enter as per-sample box constraints
//! `C_i = c * w_i * N` on the dual, so a weighted fit minimizes the exactly
//! weighted epsilon-insensitive loss. Features are standardized with a
//! [`Scaler`] fitted on the training set and targets are centered before
//! solving; the mean is folded back into the bias.

mod kernel;
mod search;
mod solver;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError, Scaler};

pub use kernel::{gram_matrix, rbf_kernel, DENSE_GRAM_LIMIT};
pub(crate) use kernel::KernelMatrix;
pub use search::{default_grid, grid_search_cv, GridSearch, GridSearchResult};

/// Default KKT tolerance, in target units (mm).
pub const DEFAULT_TOL: f64 = 1e-3;
/// Outer-iteration cap of the SMO solver.
pub const DEFAULT_MAX_ITER: usize = 10_000_000;

#[derive(Debug, Error)]
pub enum SvrError {
    #[error("weights have length {got}, expected {expected}")]
    WeightMismatch { expected: usize, got: usize },
    #[error("invalid weights: {0}")]
    InvalidWeights(&'static str),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("solver hit {iterations} iterations with KKT violation {max_violation:e}")]
    DidNotConverge { iterations: usize, max_violation: f64, model: Box<SvrModel> },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Hyperparameters of the epsilon-SVR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    /// Regularization weight.
    pub c: f64,
    /// Half-width of the insensitive tube, mm.
    pub epsilon: f64,
    /// RBF width on standardized features.
    pub gamma: f64,
}

impl SvrParams {
    pub fn new(c: f64, epsilon: f64, gamma: f64) -> Self {
        SvrParams { c, epsilon, gamma }
    }

    pub fn validate(&self) -> Result<(), SvrError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(SvrError::InvalidParams(format!("c must be positive, got {}", self.c)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(SvrError::InvalidParams(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(SvrError::InvalidParams(format!("epsilon must be non-negative, got {}", self.epsilon)));
        }
        Ok(())
    }
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams { c: 10.0, epsilon: 0.01, gamma: 1.0 }
    }
}

/// Solver controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Record the dual objective after every outer iteration.
    pub record_objective: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER, record_objective: false }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions { tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitStats {
    pub iterations: usize,
    pub max_violation: f64,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objective_trace: Vec<f64>,
}

/// A trained epsilon-SVR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub params: SvrParams,
    pub scaler: Scaler,
    /// Standardized `(f, s)` of every sample with a nonzero coefficient.
    pub support_vectors: Vec<[f64; 2]>,
    /// `alpha_i - alpha*_i` for each support vector.
    pub dual_coefficients: Vec<f64>,
    /// Position of each support vector in the training set.
    pub support_indices: Vec<usize>,
    /// Bias in mm, including the target mean.
    pub bias: f64,
    pub stats: FitStats,
}

impl SvrModel {
    /// Predicted width in mm.
    pub fn predict(&self, f: f64, s: f64) -> f64 {
        let x = self.scaler.apply(f, s);
        self.predict_scaled(x)
    }

    pub(crate) fn predict_scaled(&self, x: [f64; 2]) -> f64 {
        let gamma = self.params.gamma;
        self.support_vectors
            .iter()
            .zip(&self.dual_coefficients)
            .map(|(&sv, &coef)| coef * rbf_kernel(x, sv, gamma))
            .sum::<f64>()
            + self.bias
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Vec<f64> {
        data.iter().map(|s| self.predict(s.f, s.s)).collect()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<SvrModel> {
        serde_json::from_str(text)
    }
}

/// Training set prepared for repeated solves at a fixed `gamma`: scaler,
/// standardized points, centered targets and the cached Gram matrix.
#[derive(Debug, Clone)]
pub struct PreparedProblem {
    scaler: Scaler,
    points: Vec<[f64; 2]>,
    target_mean: f64,
    centered: Vec<f64>,
    gamma: f64,
    kernel: KernelMatrix,
}

impl PreparedProblem {
    pub fn new(train: &Dataset, gamma: f64) -> Result<Self, SvrError> {
        if train.len() < 2 {
            return Err(SvrError::TooFewSamples { needed: 2, got: train.len() });
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(SvrError::InvalidParams(format!("gamma must be positive, got {gamma}")));
        }
        let scaler = Scaler::fit(train)?;
        let points = scaler.transform(train);
        let ys = train.targets();
        let target_mean = ys.iter().sum::<f64>() / ys.len() as f64;
        let centered = ys.iter().map(|y| y - target_mean).collect();
        let kernel = KernelMatrix::new(&points, gamma);
        Ok(PreparedProblem { scaler, points, target_mean, centered, gamma, kernel })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Solves the weighted dual. `params.gamma` must equal the prepared gamma.
    pub fn solve(&self, weights: &[f64], params: &SvrParams, opts: &SolverOptions) -> Result<SvrModel, SvrError> {
        self.solve_from(weights, params, opts, None)
    }

    /// Like [`PreparedProblem::solve`], starting SMO from the coefficients of
    /// an earlier model on the same training set.
    pub fn solve_from(
        &self,
        weights: &[f64],
        params: &SvrParams,
        opts: &SolverOptions,
        warm: Option<&SvrModel>,
    ) -> Result<SvrModel, SvrError> {
        params.validate()?;
        if params.gamma != self.gamma {
            return Err(SvrError::InvalidParams(format!(
                "prepared for gamma {}, asked to solve with {}",
                self.gamma, params.gamma
            )));
        }
        if !(opts.tol > 0.0) {
            return Err(SvrError::InvalidParams(format!("tol must be positive, got {}", opts.tol)));
        }
        let n = self.len();
        let upper = box_bounds(weights, n, params.c)?;
        let start = warm.map(|m| {
            let mut beta = vec![0.0; n];
            for (&i, &b) in m.support_indices.iter().zip(&m.dual_coefficients) {
                if i < n {
                    beta[i] = b;
                }
            }
            beta
        });
        let out = solver::solve(&solver::SolverInput {
            kernel: &self.kernel,
            targets: &self.centered,
            upper: &upper,
            epsilon: params.epsilon,
            tol: opts.tol,
            max_iter: opts.max_iter,
            record_objective: opts.record_objective,
            warm_start: start.as_deref(),
        });

        let mut support_vectors = Vec::new();
        let mut dual_coefficients = Vec::new();
        let mut support_indices = Vec::new();
        for (i, &b) in out.beta.iter().enumerate() {
            if b != 0.0 {
                support_vectors.push(self.points[i]);
                dual_coefficients.push(b);
                support_indices.push(i);
            }
        }
        let model = SvrModel {
            params: *params,
            scaler: self.scaler,
            support_vectors,
            dual_coefficients,
            support_indices,
            bias: self.target_mean - out.rho,
            stats: FitStats {
                iterations: out.iterations,
                max_violation: out.max_violation,
                converged: out.converged,
                objective_trace: out.objective_trace,
            },
        };
        if out.converged {
            Ok(model)
        } else {
            Err(SvrError::DidNotConverge {
                iterations: out.iterations,
                max_violation: out.max_violation,
                model: Box::new(model),
            })
        }
    }
}

/// Normalizes `weights` and returns `C_i = c * w_i * N`.
fn box_bounds(weights: &[f64], n: usize, c: f64) -> Result<Vec<f64>, SvrError> {
    if weights.len() != n {
        return Err(SvrError::WeightMismatch { expected: n, got: weights.len() });
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(SvrError::InvalidWeights("weights must be finite and non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(SvrError::InvalidWeights("weights must have a positive finite sum"));
    }
    let scale = c * n as f64;
    Ok(weights.iter().map(|w| (w / total) * scale).collect())
}

/// Fits a weighted epsilon-SVR. `weights` are normalized internally.
///
/// On hitting the iteration cap the partially converged model is returned
/// inside [`SvrError::DidNotConverge`].
pub fn fit_weighted_svr(train: &Dataset, weights: &[f64], params: &SvrParams, tol: f64) -> Result<SvrModel, SvrError> {
    fit_weighted_svr_with(train, weights, params, &SolverOptions::with_tol(tol))
}

pub fn fit_weighted_svr_with(
    train: &Dataset,
    weights: &[f64],
    params: &SvrParams,
    opts: &SolverOptions,
) -> Result<SvrModel, SvrError> {
    params.validate()?;
    if weights.len() != train.len() {
        return Err(SvrError::WeightMismatch { expected: train.len(), got: weights.len() });
    }
    PreparedProblem::new(train, params.gamma)?.solve(weights, params, opts)
}

/// Uniform-weight fit.
pub fn fit_svr(train: &Dataset, params: &SvrParams, tol: f64) -> Result<SvrModel, SvrError> {
    let w = vec![1.0 / train.len().max(1) as f64; train.len()];
    fit_weighted_svr(train, &w, params, tol)
}

/// Accepts a model that hit the iteration cap; other errors pass through.
pub fn accept_unconverged(result: Result<SvrModel, SvrError>) -> Result<SvrModel, SvrError> {
    match result {
        Err(SvrError::DidNotConverge { model, .. }) => Ok(*model),
        other => other,
    }
}

pub fn predict(model: &SvrModel, f: f64, s: f64) -> f64 {
    model.predict(f, s)
}

/// Epsilon-SVR dual objective `y'b - eps |b|_1 - 1/2 b'Kb` at the model's
/// coefficients, evaluated on the training set it was fitted on.
pub fn dual_objective(model: &SvrModel, train: &Dataset) -> f64 {
    let ys = train.targets();
    let mean = ys.iter().sum::<f64>() / ys.len().max(1) as f64;
    let gamma = model.params.gamma;
    let coefs = &model.dual_coefficients;
    let svs = &model.support_vectors;
    let mut linear = 0.0;
    let mut l1 = 0.0;
    for (&i, &b) in model.support_indices.iter().zip(coefs) {
        linear += (ys[i] - mean) * b;
        l1 += b.abs();
    }
    let mut quad = 0.0;
    for a in 0..coefs.len() {
        for b in 0..coefs.len() {
            quad += coefs[a] * coefs[b] * rbf_kernel(svs[a], svs[b], gamma);
        }
    }
    linear - model.params.epsilon * l1 - 0.5 * quad
}
