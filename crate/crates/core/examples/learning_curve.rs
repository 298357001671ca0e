//! Direct learning curve with plateau detection.
//!
//! ```text
//! RUST_LOG=info cargo run --release --example learning_curve -- [h] [reps]
//! ```

use multifidelity::protocol::{default_n_grid, direct_learning_curve, find_n_direct};
use multifidelity::sourcegen::{generate_synthetic_target, GridSpec, SourceModelConfig, SyntheticTargetConfig};
use multifidelity::svr::GridSearch;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let h: f64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(0.85);
    let reps: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(50);

    let target = generate_synthetic_target(&GridSpec::default(), &SourceModelConfig::new(h), &SyntheticTargetConfig::for_height(h))?;
    let n_grid = default_n_grid(target.len());
    let curve = direct_learning_curve(&target, &n_grid, reps, &GridSearch::default(), 0)?;
    curve.write_csv(std::io::stdout())?;

    let baseline = find_n_direct(&curve, 0.01)?;
    eprintln!(
        "n_direct = {}, RMSE {:.4} +- {:.4} mm{}",
        baseline.n_direct,
        baseline.rmse.mean,
        baseline.rmse.std,
        if baseline.plateau { "" } else { " (no plateau, last point)" }
    );
    Ok(())
}
