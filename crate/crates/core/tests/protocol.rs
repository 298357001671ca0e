use multifidelity::dataset::{random_split_indices, subgrid_indices};
use multifidelity::protocol::*;
use multifidelity::rng;
use multifidelity::sourcegen::*;
use multifidelity::svr::{GridSearch, SvrParams};
use multifidelity::Dataset;
use proptest::prelude::*;

const H: f64 = 0.85;

fn small_search() -> GridSearch {
    GridSearch { grid: vec![SvrParams::new(10.0, 0.01, 0.1), SvrParams::new(10.0, 0.01, 1.0)], k_folds: 5, tol: 1e-3 }
}

fn pool() -> Dataset {
    generate_source_grid(&GridSpec::source_pool(), &SourceModelConfig::new(H)).unwrap()
}

fn target(syn: &SyntheticTargetConfig) -> Dataset {
    let grid = GridSpec { n_f: 10, n_s: 10, ..GridSpec::default() };
    generate_synthetic_target(&grid, &SourceModelConfig::new(H), syn).unwrap()
}

/// Noisy fixture with every cell kept.
fn noisy() -> SyntheticTargetConfig {
    SyntheticTargetConfig { stability_band: (0.0, f64::MAX), ..SyntheticTargetConfig::for_height(H) }
}

fn small_benchmark() -> BenchmarkConfig {
    BenchmarkConfig {
        n_grid: vec![10, 20, 30],
        reps: 3,
        plateau_rel_tol: 0.01,
        search: small_search(),
        sweep: SweepConfig {
            subgrid_sizes: vec![(3, 3), (2, 2)],
            eval_reps: 3,
            test_size: Some(20),
            n_iterations: 5,
            search: small_search(),
            ..Default::default()
        },
        exhaustive: true,
    }
}

#[test]
fn curve_has_one_point_per_size() {
    let t = target(&noisy());
    let curve = direct_learning_curve(&t, &[10, 20], 2, &small_search(), 1).unwrap();
    assert_eq!(curve.points.len(), 2);
    for (p, n) in curve.points.iter().zip([10, 20]) {
        assert_eq!((p.n_train, p.n_repetitions), (n, 2));
        assert!(p.mean_rmse.is_finite() && p.mean_rmse > 0.0 && p.std_rmse >= 0.0);
        assert!(small_search().grid.contains(&p.params));
    }
    assert!(matches!(find_n_direct(&curve, 0.01), Err(ProtocolError::TooShort(2))));
}

#[test]
fn curve_rejects_bad_grids() {
    let t = target(&noisy());
    for grid in [vec![], vec![20, 10], vec![1, 5], vec![10, t.len()]] {
        assert!(direct_learning_curve(&t, &grid, 2, &small_search(), 1).is_err(), "{grid:?}");
    }
    assert!(direct_learning_curve(&t, &[10], 0, &small_search(), 1).is_err());
}

#[test]
fn noiseless_curve_does_not_rise() {
    let t = target(&SyntheticTargetConfig::identity());
    let curve = direct_learning_curve(&t, &[10, 30, 60], 4, &small_search(), 2).unwrap();
    for w in curve.points.windows(2) {
        assert!(w[1].mean_rmse <= w[0].mean_rmse + w[0].std_rmse, "{w:?}");
    }
}

#[test]
fn singleton_sweep() {
    let t = target(&noisy());
    let baseline = Baseline { n_direct: 30, rmse: MeanStd { mean: 0.05, std: 0.01 }, plateau: true };
    let cfg = SweepConfig { subgrid_sizes: vec![(2, 2)], eval_reps: 2, n_iterations: 4, search: small_search(), ..Default::default() };
    let r = transfer_sweep(&pool(), &t, &baseline, &cfg, 0).unwrap();
    assert_eq!(r.cells.len(), 1);
    let c = r.cells[0];
    assert_eq!((c.n_s, c.n_f, c.n_t_actual), (2, 2, 4));
    assert!(c.mean_rmse_t.is_finite());
    assert!(c.mean_rounds >= 1.0 && c.mean_rounds <= 4.0);
    assert_eq!(r.baseline, baseline);
}

#[test]
fn sweep_rejects_oversized_test_set() {
    let t = target(&noisy());
    let baseline = Baseline { n_direct: t.len(), rmse: MeanStd { mean: 0.05, std: 0.0 }, plateau: true };
    let cfg = SweepConfig { subgrid_sizes: vec![(2, 2)], eval_reps: 1, search: small_search(), ..Default::default() };
    assert!(matches!(transfer_sweep(&pool(), &t, &baseline, &cfg, 0), Err(ProtocolError::InsufficientData(_))));
}

#[test]
fn benchmark_is_identical_across_thread_counts() {
    let t = target(&noisy());
    let run = |jobs| with_jobs(Some(jobs), || run_benchmark(&pool(), &t, &small_benchmark(), 5).unwrap());
    let one = run(1);
    let four = run(4);
    assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&four).unwrap());
    assert_eq!(one.sweep.cells.len(), 2);
    // Cells come back in ascending size order regardless of the configured order.
    assert_eq!(one.sweep.cells[0].n_t_actual, 4);
    assert_eq!(one.report, select_n_t(&one.sweep, H).unwrap());
    assert_eq!(one.report.h_mm, H);
}

#[test]
fn early_stopping_matches_exhaustive_report() {
    let t = target(&noisy());
    let full = run_benchmark(&pool(), &t, &small_benchmark(), 3).unwrap();
    let fast = run_benchmark(&pool(), &t, &BenchmarkConfig { exhaustive: false, ..small_benchmark() }, 3).unwrap();
    assert_eq!(full.report, fast.report);
    assert!(fast.sweep.cells.len() <= full.sweep.cells.len());
}

#[test]
fn benchmark_input_checks() {
    let t = target(&noisy());
    let other = generate_source_grid(&GridSpec::source_pool(), &SourceModelConfig::new(1.2)).unwrap();
    assert!(matches!(run_benchmark(&other, &t, &small_benchmark(), 0), Err(ProtocolError::InsufficientData(_))));
    let grid = GridSpec { n_f: 10, n_s: 10, ..GridSpec::default() };
    let high = generate_synthetic_target(&grid, &SourceModelConfig::new(1.2), &SyntheticTargetConfig::for_height(1.2)).unwrap();
    let mixed = t.concat(&high);
    assert!(run_benchmark(&pool(), &mixed, &small_benchmark(), 0).is_err());
}

#[test]
fn report_arithmetic() {
    assert!((sample_reduction_pct(150, 42) - 72.0).abs() < 1e-12);
    assert!((rmse_reduction_pct(0.104, 0.081) - 22.115_384_615_384_6).abs() < 1e-9);
}

proptest! {
    #[test]
    fn splits_partition_the_data(n in 3usize..200, frac in 0.05f64..0.95, seed in any::<u64>()) {
        let n_train = ((n as f64 * frac) as usize).clamp(1, n - 1);
        let mut g = rng::seeded(seed);
        let split = random_split_indices(n, n_train, &mut g).unwrap();
        prop_assert!(split.is_partition_of(n));
        prop_assert_eq!(split.train.len(), n_train);
    }

    #[test]
    fn subgrids_are_unique_and_sized(ns in 2usize..=10, nf in 2usize..=10) {
        let t = target(&SyntheticTargetConfig::identity());
        let idx = subgrid_indices(&t, ns, nf).unwrap();
        prop_assert_eq!(idx.len(), ns * nf);
        prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn fixed_sweep_params_skip_the_search() {
    let t = target(&noisy());
    let baseline = Baseline { n_direct: 30, rmse: MeanStd { mean: 0.05, std: 0.01 }, plateau: true };
    let fixed = SvrParams::new(3.0, 0.02, 0.7);
    let cfg = SweepConfig { subgrid_sizes: vec![(2, 3)], eval_reps: 2, n_iterations: 3, params: Some(fixed), ..Default::default() };
    let r = transfer_sweep(&pool(), &t, &baseline, &cfg, 0).unwrap();
    assert_eq!(r.cells[0].params, fixed);
}
