//! TrAdaBoost.R2 on a small target sub-grid backed by the analytical source,
//! compared with an SVR trained on the same target samples alone, for a
//! growing number of source samples.

use multifidelity::dataset::{rmse, subgrid_indices};
use multifidelity::rng;
use multifidelity::sourcegen::*;
use multifidelity::svr::{fit_weighted_svr, SvrParams};
use multifidelity::transfer::{fit_tradaboost_r2, TransferConfig};
use rand::seq::SliceRandom;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = 0.7;
    let src_cfg = SourceModelConfig::new(h);
    let source = generate_source_grid(&GridSpec::source_pool(), &src_cfg)?;
    let target = generate_synthetic_target(&GridSpec::default(), &src_cfg, &SyntheticTargetConfig::for_height(h))?;

    let train_idx = subgrid_indices(&target, 5, 5)?;
    let train = target.select(&train_idx);
    let rest: Vec<usize> = (0..target.len()).filter(|i| !train_idx.contains(i)).collect();
    let test = target.select(&rest);

    let params = SvrParams::new(100.0, 0.01, 0.1);
    let cfg = TransferConfig { svr_params: params, ..Default::default() };
    let truth = test.targets();
    let direct = fit_weighted_svr(&train, &vec![1.0; train.len()], &params, cfg.tol)?;
    println!("target samples: {}, test samples: {}", train.len(), test.len());
    println!("direct: RMSE {:.4} mm", rmse(&direct.predict_dataset(&test), &truth)?);

    let mut order: Vec<usize> = (0..source.len()).collect();
    order.shuffle(&mut rng::seeded(1));
    for n_source in [25, 50, 100, source.len()] {
        let subset = source.select(&order[..n_source]);
        let ensemble = fit_tradaboost_r2(&subset, &train, &cfg, 0)?;
        println!(
            "transfer, {n_source:>3} source samples: RMSE {:.4} mm, {} rounds ({:?})",
            rmse(&ensemble.predict_dataset(&test), &truth)?,
            ensemble.models.len(),
            ensemble.termination
        );
    }
    Ok(())
}
