//! Shared fixtures for the integration tests, including the brute-force QP
//! oracle the SMO solver is checked against.
#![allow(dead_code)]

use multifidelity::dataset::{Origin, Sample, Scaler};
use multifidelity::Dataset;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Exact optimum of the epsilon-SVR dual
///
/// ```text
/// max  y'b - eps |b|_1 - 1/2 b'Kb   s.t.  sum b = 0,  -C_i <= b_i <= C_i
/// ```
///
/// found by enumerating, for every coefficient, one of five states
/// (`-C`, negative free, `0`, positive free, `+C`) and solving the KKT
/// system of the free coefficients on each face. The objective is strictly
/// concave on each sign region when `K` is positive definite, so the best
/// feasible stationary point over all faces is the global optimum.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub beta: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
}

pub fn dual_value(k: &[Vec<f64>], y: &[f64], eps: f64, beta: &[f64]) -> f64 {
    let n = y.len();
    let mut v = 0.0;
    for i in 0..n {
        v += y[i] * beta[i] - eps * beta[i].abs();
        for j in 0..n {
            v -= 0.5 * beta[i] * k[i][j] * beta[j];
        }
    }
    v
}

pub fn qp_oracle(k: &[Vec<f64>], y: &[f64], upper: &[f64], eps: f64) -> OracleSolution {
    let n = y.len();
    assert!(n <= 10, "oracle is exponential in n");
    let total = 5usize.pow(n as u32);
    let mut best: Option<(f64, Vec<f64>, Option<f64>)> = None;
    let mut state = vec![0u8; n];
    for code in 0..total {
        let mut c = code;
        for s in state.iter_mut() {
            *s = (c % 5) as u8;
            c /= 5;
        }
        let mut beta = vec![0.0; n];
        let mut free = Vec::new();
        let mut signs = Vec::new();
        for i in 0..n {
            match state[i] {
                0 => beta[i] = -upper[i],
                1 => {
                    free.push(i);
                    signs.push(-1.0);
                }
                2 => {}
                3 => {
                    free.push(i);
                    signs.push(1.0);
                }
                _ => beta[i] = upper[i],
            }
        }
        let fixed_sum: f64 = beta.iter().sum();
        let nu = if free.is_empty() {
            if fixed_sum.abs() > 1e-12 {
                continue;
            }
            None
        } else {
            // [K_FF 1; 1' 0] [b_F; nu] = [y_F - eps s_F - K_FX b_X; -sum b_X]
            let m = free.len();
            let mut a = vec![vec![0.0; m + 1]; m + 1];
            let mut rhs = vec![0.0; m + 1];
            for (r, &i) in free.iter().enumerate() {
                for (cidx, &j) in free.iter().enumerate() {
                    a[r][cidx] = k[i][j];
                }
                a[r][m] = 1.0;
                a[m][r] = 1.0;
                let kx: f64 = (0..n).map(|j| k[i][j] * beta[j]).sum();
                rhs[r] = y[i] - eps * signs[r] - kx;
            }
            rhs[m] = -fixed_sum;
            let Some(x) = solve_dense(a, rhs) else { continue };
            let mut ok = true;
            for (r, &i) in free.iter().enumerate() {
                let b = x[r];
                let inside = if signs[r] > 0.0 { b > 0.0 && b < upper[i] } else { b < 0.0 && b > -upper[i] };
                if !inside {
                    ok = false;
                    break;
                }
                beta[i] = b;
            }
            if !ok {
                continue;
            }
            Some(x[m])
        };
        let value = dual_value(k, y, eps, &beta);
        if best.as_ref().is_none_or(|b| value > b.0) {
            best = Some((value, beta, nu));
        }
    }
    let (objective, beta, nu) = best.expect("beta = 0 is always feasible");
    let bias = nu.unwrap_or_else(|| bias_interval_midpoint(k, y, upper, eps, &beta));
    OracleSolution { beta, bias, objective }
}

/// With no free coefficient the bias is any value in an interval; the
/// midpoint is returned.
fn bias_interval_midpoint(k: &[Vec<f64>], y: &[f64], upper: &[f64], eps: f64, beta: &[f64]) -> f64 {
    let n = y.len();
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..n {
        let kb: f64 = (0..n).map(|j| k[i][j] * beta[j]).sum();
        if beta[i] >= upper[i] {
            hi = hi.min(y[i] - eps - kb);
        } else if beta[i] <= -upper[i] {
            lo = lo.max(y[i] + eps - kb);
        } else {
            lo = lo.max(y[i] - eps - kb);
            hi = hi.min(y[i] + eps - kb);
        }
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo,
        (false, true) => hi,
        _ => 0.0,
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-13 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Pivoted Cholesky with diagonal jitter. Returns `false` as soon as a pivot
/// is negative beyond the jitter, i.e. the matrix is not PSD.
pub fn pivoted_cholesky_psd(k: &[Vec<f64>], jitter: f64) -> bool {
    let n = k.len();
    let mut a: Vec<Vec<f64>> = k.to_vec();
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += jitter;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut l = vec![vec![0.0; n]; n];
    for step in 0..n {
        let (p, &dmax) = perm[step..]
            .iter()
            .map(|&i| a[i][i])
            .collect::<Vec<_>>()
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .map(|(off, d)| (step + off, d))
            .unwrap();
        if dmax < -jitter {
            return false;
        }
        if dmax <= jitter {
            // Remaining block is numerically zero.
            return perm[step..].iter().all(|&i| a[i][i] >= -jitter);
        }
        perm.swap(step, p);
        let pi = perm[step];
        let d = dmax.sqrt();
        l[pi][step] = d;
        for &j in &perm[step + 1..] {
            l[j][step] = a[j][pi] / d;
        }
        for &i in &perm[step + 1..] {
            for &j in &perm[step + 1..] {
                a[i][j] -= l[i][step] * l[j][step];
            }
        }
    }
    true
}

/// `exp(-gamma |a - b|^2)`, written out independently of the library.
pub fn gaussian(a: [f64; 2], b: [f64; 2], gamma: f64) -> f64 {
    (-gamma * ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2))).exp()
}

pub fn gram(points: &[[f64; 2]], gamma: f64) -> Vec<Vec<f64>> {
    points.iter().map(|&p| points.iter().map(|&q| gaussian(p, q, gamma)).collect()).collect()
}

/// A random small regression instance on distinct `(f, s)` points.
pub struct Instance {
    pub data: Dataset,
    pub weights: Vec<f64>,
    pub c: f64,
    pub epsilon: f64,
    pub gamma: f64,
}

pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, weighted: bool) -> Instance {
    let mut samples: Vec<Sample> = Vec::with_capacity(n);
    while samples.len() < n {
        let f = rng.random_range(150.0..730.0);
        let s = rng.random_range(350.0..725.0);
        if samples.iter().any(|p| (p.f - f).abs() < 5.0 && (p.s - s).abs() < 5.0) {
            continue;
        }
        let w = 0.5 + f / s + rng.random_range(-0.3..0.3);
        samples.push(Sample::new(f, s, 0.85, w, Origin::Target));
    }
    let weights = if weighted { (0..n).map(|_| rng.random_range(0.2..1.0)).collect() } else { vec![1.0; n] };
    Instance {
        data: Dataset::new(samples).unwrap(),
        weights,
        c: rng.random_range(0.2..20.0),
        epsilon: rng.random_range(0.0..0.15),
        gamma: rng.random_range(0.1..3.0),
    }
}

/// Oracle solution for an instance, in the same standardized feature space
/// and box convention as the library.
pub fn oracle_for(inst: &Instance) -> (OracleSolution, Scaler, Vec<[f64; 2]>) {
    let scaler = Scaler::fit(&inst.data).unwrap();
    let pts = scaler.transform(&inst.data);
    let k = gram(&pts, inst.gamma);
    let n = inst.data.len();
    let total: f64 = inst.weights.iter().sum();
    let upper: Vec<f64> = inst.weights.iter().map(|w| inst.c * (w / total) * n as f64).collect();
    let y = inst.data.targets();
    (qp_oracle(&k, &y, &upper, inst.epsilon), scaler, pts)
}

pub fn oracle_predict(sol: &OracleSolution, pts: &[[f64; 2]], gamma: f64, x: [f64; 2]) -> f64 {
    sol.beta.iter().zip(pts).map(|(&b, &p)| b * gaussian(x, p, gamma)).sum::<f64>() + sol.bias
}
