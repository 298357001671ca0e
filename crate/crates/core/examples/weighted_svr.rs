//! Fits a weighted epsilon-SVR to noisy synthetic measurements and shows how
//! per-sample weights pull the fit toward the samples that carry them.

use multifidelity::dataset::{random_split, rmse};
use multifidelity::sourcegen::{generate_synthetic_target, GridSpec, SourceModelConfig, SyntheticTargetConfig};
use multifidelity::svr::{fit_weighted_svr_with, SolverOptions, SvrParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = 0.85;
    let target = generate_synthetic_target(&GridSpec::default(), &SourceModelConfig::new(h), &SyntheticTargetConfig::for_height(h))?;
    let (train, test) = random_split(&target, 60, 7)?;
    let params = SvrParams::new(10.0, 0.01, 1.0);
    let opts = SolverOptions { record_objective: true, ..Default::default() };

    let uniform = fit_weighted_svr_with(&train, &vec![1.0; train.len()], &params, &opts)?;
    let trace = &uniform.stats.objective_trace;
    println!(
        "uniform weights: {} SMO iterations, dual objective {:.5} -> {:.5}, {} support vectors",
        uniform.stats.iterations,
        trace.first().copied().unwrap_or(0.0),
        trace.last().copied().unwrap_or(0.0),
        uniform.support_vectors.len()
    );
    println!("  test RMSE {:.4} mm", rmse(&uniform.predict_dataset(&test), &test.targets())?);

    // Up-weight the low-speed half of the training set.
    let weights: Vec<f64> = train.iter().map(|s| if s.s < 540.0 { 5.0 } else { 1.0 }).collect();
    let skewed = fit_weighted_svr_with(&train, &weights, &params, &opts)?;
    for (name, model) in [("uniform", &uniform), ("skewed", &skewed)] {
        let (slow, fast): (Vec<_>, Vec<_>) = test.iter().partition(|s| s.s < 540.0);
        let err = |set: &[&multifidelity::Sample]| {
            let p: Vec<f64> = set.iter().map(|s| model.predict(s.f, s.s)).collect();
            let t: Vec<f64> = set.iter().map(|s| s.w).collect();
            rmse(&p, &t)
        };
        println!("{name:>8}: RMSE low S {:.4} mm, high S {:.4} mm", err(&slow)?, err(&fast)?);
    }
    Ok(())
}
