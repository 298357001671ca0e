mod common;

use approx::assert_relative_eq;
use common::*;
use multifidelity::dataset::{Origin, Sample};
use multifidelity::rng;
use multifidelity::svr::{self, dual_objective, fit_weighted_svr_with, GridSearch, SolverOptions, SvrParams};
use multifidelity::Dataset;
use rand::Rng;

fn tight() -> SolverOptions {
    SolverOptions { tol: 1e-10, max_iter: 1_000_000, record_objective: false }
}

fn six_points() -> Instance {
    let pts = [(153.0, 350.0, 1.10), (300.0, 420.0, 1.31), (450.0, 500.0, 1.42), (600.0, 610.0, 1.39), (729.0, 725.0, 1.52), (380.0, 700.0, 0.98)];
    Instance {
        data: Dataset::new(pts.iter().map(|&(f, s, w)| Sample::new(f, s, 1.2, w, Origin::Target)).collect()).unwrap(),
        weights: vec![1.0; 6],
        c: 5.0,
        epsilon: 0.02,
        gamma: 0.8,
    }
}

#[test]
fn six_point_instance_matches_oracle() {
    let inst = six_points();
    let (sol, scaler, pts) = oracle_for(&inst);
    let params = SvrParams::new(inst.c, inst.epsilon, inst.gamma);
    let model = fit_weighted_svr_with(&inst.data, &inst.weights, &params, &tight()).unwrap();
    assert_eq!(model.scaler, scaler);
    assert_relative_eq!(dual_objective(&model, &inst.data), sol.objective, max_relative = 1e-6);
    for (i, s) in inst.data.iter().enumerate() {
        assert!((model.predict(s.f, s.s) - oracle_predict(&sol, &pts, inst.gamma, pts[i])).abs() < 1e-6);
    }
}

#[test]
fn random_instances_match_oracle() {
    let mut g = rng::seeded(11);
    for case in 0..30 {
        let n = 2 + case % 6;
        let inst = random_instance(&mut g, n, case % 2 == 1);
        let (sol, _, pts) = oracle_for(&inst);
        let params = SvrParams::new(inst.c, inst.epsilon, inst.gamma);
        let model = fit_weighted_svr_with(&inst.data, &inst.weights, &params, &tight()).unwrap();
        let ours = dual_objective(&model, &inst.data);
        assert!((ours - sol.objective).abs() <= 1e-6 * sol.objective.abs().max(1e-3), "case {case}: {ours} vs {}", sol.objective);
        for _ in 0..5 {
            let (f, s) = (g.random_range(150.0..730.0), g.random_range(350.0..725.0));
            let x = model.scaler.apply(f, s);
            assert!((model.predict(f, s) - oracle_predict(&sol, &pts, inst.gamma, x)).abs() < 1e-5, "case {case}");
        }
    }
}

#[test]
fn tiny_box_matches_oracle() {
    // Tiny C pushes every coefficient to a bound.
    let mut inst = six_points();
    inst.c = 1e-3;
    let (sol, _, _) = oracle_for(&inst);
    assert!(sol.bias.is_finite());
    let model = fit_weighted_svr_with(&inst.data, &inst.weights, &SvrParams::new(inst.c, inst.epsilon, inst.gamma), &tight()).unwrap();
    assert_relative_eq!(dual_objective(&model, &inst.data), sol.objective, max_relative = 1e-6);
}

#[test]
fn gram_matrices_are_psd() {
    let mut g = rng::seeded(5);
    for case in 0..20 {
        let n = 5 + case * 2;
        let pts: Vec<[f64; 2]> = (0..n).map(|_| [g.random_range(-2.0..2.0), g.random_range(-2.0..2.0)]).collect();
        let gamma = g.random_range(0.01..10.0);
        let flat = svr::gram_matrix(&pts, gamma);
        let k: Vec<Vec<f64>> = flat.chunks(n).map(|r| r.to_vec()).collect();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(k[i][j], k[j][i]);
            }
        }
        assert!(pivoted_cholesky_psd(&k, 1e-10), "case {case}");
    }
}

#[test]
fn pivoted_cholesky_rejects_indefinite() {
    let k = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
    assert!(!pivoted_cholesky_psd(&k, 1e-10));
}

#[test]
fn grid_search_recovers_known_gamma() {
    // Targets drawn from an RBF expansion with gamma* = 1 on standardized
    // features; the candidate gammas are one decade apart.
    let mut g = rng::seeded(8);
    let centers: Vec<([f64; 2], f64)> =
        (0..6).map(|_| ([g.random_range(-1.5..1.5), g.random_range(-1.5..1.5)], g.random_range(-1.0..1.0))).collect();
    let mut samples = Vec::new();
    for i in 0..9 {
        for j in 0..9 {
            let (f, s) = (153.0 + 72.0 * i as f64, 350.0 + 46.875 * j as f64);
            samples.push(Sample::new(f, s, 1.2, 0.0, Origin::Target));
        }
    }
    let raw = Dataset::new(samples).unwrap();
    let scaler = multifidelity::Scaler::fit(&raw).unwrap();
    let data = Dataset::new(
        raw.iter()
            .map(|s| {
                let x = scaler.apply(s.f, s.s);
                let w = 2.0 + centers.iter().map(|&(c, a)| a * gaussian(x, c, 1.0)).sum::<f64>();
                Sample::new(s.f, s.s, s.h, w, Origin::Target)
            })
            .collect(),
    )
    .unwrap();
    let gammas = [0.01, 0.1, 1.0, 10.0];
    let grid: Vec<SvrParams> = gammas.iter().map(|&gm| SvrParams::new(100.0, 0.001, gm)).collect();
    let search = GridSearch { grid, k_folds: 5, tol: 1e-4 };
    let r = search.run(&data, &vec![1.0; data.len()], 4).unwrap();
    let pos = gammas.iter().position(|&x| x == r.best.gamma).unwrap();
    assert!(pos.abs_diff(2) <= 1, "picked gamma {}", r.best.gamma);
}
