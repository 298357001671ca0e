//! TrAdaBoost.R2 instance-transfer boosting over weighted SVRs.
//!
//! Each round fits a weighted SVR on `source ++ target`, measures adjusted
//! errors on the union, and then shrinks the weight of badly fitted source
//! samples by a fixed factor while growing badly fitted target samples by
//! the round's error ratio. Predictions are the weighted median of the later
//! half of the rounds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, Origin};
use crate::svr::{PreparedProblem, SolverOptions, SvrError, SvrModel, SvrParams, DEFAULT_TOL};

/// Floor for a stored error ratio, keeping `ln(1/beta)` finite.
pub const BETA_FLOOR: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum TransferError {
    #[error("no samples")]
    Empty,
    #[error("all target weights are zero")]
    AllTargetWeightZero,
    #[error("the first round already had target error {0} >= 0.5")]
    EnsembleEmpty(f64),
    #[error("source and target have different heights")]
    HeightMismatch,
    #[error("length mismatch: {0}")]
    LengthMismatch(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Svr(#[from] SvrError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Loss {
    #[default]
    Linear,
    Square,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferConfig {
    pub n_iterations: usize,
    pub loss: Loss,
    pub svr_params: SvrParams,
    pub tol: f64,
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig { n_iterations: 30, loss: Loss::Linear, svr_params: SvrParams::default(), tol: DEFAULT_TOL }
    }
}

/// Adjusted errors in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedErrors {
    pub errors: Vec<f64>,
    /// Every residual was exactly zero.
    pub perfect_fit: bool,
}

/// Maps residuals through the loss after dividing by the largest one.
pub fn adjust_residuals(residuals: &[f64], loss: Loss) -> Result<AdjustedErrors, TransferError> {
    if residuals.is_empty() {
        return Err(TransferError::Empty);
    }
    let d = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    if d == 0.0 {
        return Ok(AdjustedErrors { errors: vec![0.0; residuals.len()], perfect_fit: true });
    }
    let errors = residuals
        .iter()
        .map(|r| {
            let x = r.abs() / d;
            match loss {
                Loss::Linear => x,
                Loss::Square => x * x,
                Loss::Exponential => 1.0 - (-x).exp(),
            }
        })
        .collect();
    Ok(AdjustedErrors { errors, perfect_fit: false })
}

/// Adjusted errors of `model` on every sample of `data`.
pub fn adjusted_errors(model: &SvrModel, data: &Dataset, loss: Loss) -> Result<AdjustedErrors, TransferError> {
    let residuals: Vec<f64> = data.iter().map(|s| (s.w - model.predict(s.f, s.s)).abs()).collect();
    adjust_residuals(&residuals, loss)
}

/// Fixed source discount `1 / (1 + sqrt(2 ln n / N))` for `n` source samples
/// and `N` boosting rounds.
pub fn source_beta(n_source: usize, n_iterations: usize) -> f64 {
    1.0 / (1.0 + (2.0 * (n_source as f64).ln() / n_iterations as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoostOutcome {
    Continue { weights: Vec<f64>, beta_t: f64, epsilon_t: f64 },
    /// Target error reached 0.5; the round is discarded.
    Stop { epsilon_t: f64 },
}

/// One weight update.
///
/// `epsilon_t` is the target-weighted mean adjusted error. Source weights are
/// multiplied by `beta_source^e`, target weights by `beta_t^-e`, then all
/// weights are renormalized.
pub fn boost_step(weights: &[f64], errors: &[f64], is_source: &[bool], beta_source: f64) -> Result<BoostOutcome, TransferError> {
    if weights.len() != errors.len() || weights.len() != is_source.len() {
        return Err(TransferError::LengthMismatch("weights, errors and source flags must align"));
    }
    let (mut tw, mut te) = (0.0, 0.0);
    for ((&w, &e), &src) in weights.iter().zip(errors).zip(is_source) {
        if !src {
            tw += w;
            te += w * e;
        }
    }
    if !(tw > 0.0) {
        return Err(TransferError::AllTargetWeightZero);
    }
    let epsilon_t = te / tw;
    if epsilon_t >= 0.5 {
        return Ok(BoostOutcome::Stop { epsilon_t });
    }
    let beta_t = (epsilon_t / (1.0 - epsilon_t)).max(BETA_FLOOR);
    let mut updated: Vec<f64> = weights
        .iter()
        .zip(errors)
        .zip(is_source)
        .map(|((&w, &e), &src)| if src { w * beta_source.powf(e) } else { w * beta_t.powf(-e) })
        .collect();
    let total: f64 = updated.iter().sum();
    for w in &mut updated {
        *w /= total;
    }
    Ok(BoostOutcome::Continue { weights: updated, beta_t, epsilon_t })
}

/// Why boosting stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Completed,
    TargetErrorTooLarge,
    PerfectFit,
}

/// Fitted TrAdaBoost.R2 ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferEnsemble {
    pub config: TransferConfig,
    pub models: Vec<SvrModel>,
    /// Error ratio `eps_t / (1 - eps_t)` of each stored round.
    pub beta_t: Vec<f64>,
    pub beta_source: f64,
    pub n_source: usize,
    pub n_target: usize,
    pub termination: Termination,
}

impl TransferEnsemble {
    pub fn predict(&self, f: f64, s: f64) -> f64 {
        weighted_median_predict(self, f, s)
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Vec<f64> {
        data.iter().map(|x| self.predict(x.f, x.s)).collect()
    }

    /// Rounds `ceil(T/2) ..= T` (1-indexed) as `(model, ln(1/beta_t))`.
    pub fn voting_members(&self) -> impl Iterator<Item = (&SvrModel, f64)> {
        let t = self.models.len();
        let first = t.div_ceil(2).max(1) - 1;
        self.models[first..]
            .iter()
            .zip(&self.beta_t[first..])
            .map(|(m, b)| (m, (1.0 / b).ln()))
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Smallest value whose cumulative weight (ascending by value) reaches half
/// of the total weight.
pub fn weighted_median(values: &[f64], weights: &[f64]) -> Option<f64> {
    if values.is_empty() || values.len() != weights.len() {
        return None;
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let half = 0.5 * weights.iter().sum::<f64>();
    let mut cum = 0.0;
    for &i in &order {
        cum += weights[i];
        if cum >= half {
            return Some(values[i]);
        }
    }
    order.last().map(|&i| values[i])
}

/// Weighted median of the later half of the ensemble.
pub fn weighted_median_predict(ensemble: &TransferEnsemble, f: f64, s: f64) -> f64 {
    let (preds, weights): (Vec<f64>, Vec<f64>) = ensemble.voting_members().map(|(m, w)| (m.predict(f, s), w)).unzip();
    weighted_median(&preds, &weights).expect("ensemble has at least one model")
}

/// Runs TrAdaBoost.R2. The procedure has no random draws; `seed` is
/// accepted so callers can thread one seed through the whole pipeline.
pub fn fit_tradaboost_r2(
    source: &Dataset,
    target: &Dataset,
    config: &TransferConfig,
    _seed: u64,
) -> Result<TransferEnsemble, TransferError> {
    if source.is_empty() || target.is_empty() {
        return Err(TransferError::Empty);
    }
    if config.n_iterations == 0 {
        return Err(TransferError::InvalidConfig("n_iterations must be at least 1".into()));
    }
    let (hs, ht) = (source.heights(), target.heights());
    if hs.len() != 1 || hs != ht {
        return Err(TransferError::HeightMismatch);
    }

    let union = source.with_origin(Origin::Source).concat(&target.with_origin(Origin::Target));
    let n = source.len();
    let is_source: Vec<bool> = (0..union.len()).map(|i| i < n).collect();
    let beta_source = source_beta(n, config.n_iterations);
    let problem = PreparedProblem::new(&union, config.svr_params.gamma)?;
    let opts = SolverOptions::with_tol(config.tol);

    let mut weights = vec![1.0 / union.len() as f64; union.len()];
    let mut models = Vec::new();
    let mut betas = Vec::new();
    let mut termination = Termination::Completed;

    for round in 0..config.n_iterations {
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        // Consecutive rounds differ only in the weights, so SMO starts from
        // the previous round's coefficients.
        let model = problem.solve_from(&weights, &config.svr_params, &opts, models.last())?;
        let adjusted = adjusted_errors(&model, &union, config.loss)?;
        if adjusted.perfect_fit {
            models.push(model);
            betas.push(BETA_FLOOR);
            termination = Termination::PerfectFit;
            break;
        }
        match boost_step(&weights, &adjusted.errors, &is_source, beta_source)? {
            BoostOutcome::Stop { epsilon_t } => {
                if round == 0 {
                    return Err(TransferError::EnsembleEmpty(epsilon_t));
                }
                termination = Termination::TargetErrorTooLarge;
                break;
            }
            BoostOutcome::Continue { weights: next, beta_t, .. } => {
                models.push(model);
                betas.push(beta_t);
                weights = next;
            }
        }
    }

    Ok(TransferEnsemble {
        config: *config,
        models,
        beta_t: betas,
        beta_source,
        n_source: n,
        n_target: target.len(),
        termination,
    })
}
