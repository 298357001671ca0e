//! Brute-force k-fold cross-validated search over the default SVR grid.

use multifidelity::sourcegen::{generate_synthetic_target, GridSpec, SourceModelConfig, SyntheticTargetConfig};
use multifidelity::svr::GridSearch;
use multifidelity::dataset::random_split;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = 0.7;
    let target = generate_synthetic_target(&GridSpec::default(), &SourceModelConfig::new(h), &SyntheticTargetConfig::for_height(h))?;
    let (train, _) = random_split(&target, 80, 1)?;

    let search = GridSearch::default();
    let result = search.run(&train, &vec![1.0; train.len()], 42)?;

    let mut ranked: Vec<_> = search.grid.iter().zip(&result.scores).collect();
    ranked.sort_by(|a, b| a.1.total_cmp(b.1));
    println!("{:>8} {:>8} {:>8} {:>10}", "C", "epsilon", "gamma", "CV RMSE");
    for (p, score) in ranked.iter().take(8) {
        println!("{:>8} {:>8} {:>8} {:>10.5}", p.c, p.epsilon, p.gamma, score);
    }
    println!("best: {:?} ({} of {} grid points)", result.best, result.best_index + 1, search.grid.len());
    Ok(())
}
