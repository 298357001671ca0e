//! SMO solver for the epsilon-SVR dual.
//!
//! The dual is written over `2n` variables `a = (alpha, alpha*)` with signs
//! `y_t = +1` for `t < n` and `-1` otherwise:
//!
//! ```text
//! min  1/2 a'Qa + p'a   s.t.  y'a = 0,  0 <= a_t <= C_t
//! Q_st = y_s y_t K(x_s, x_t),  p_t = eps - y_t * target_t
//! ```
//!
//! Each outer iteration picks a violating pair (maximal violator plus
//! second-order partner), solves the
//! two-variable subproblem in closed form and clips it to the box. The
//! regression coefficients are `beta_i = alpha_i - alpha*_i`.

use super::kernel::KernelMatrix;

const TAU: f64 = 1e-12;

pub(crate) struct SolverInput<'a> {
    pub kernel: &'a KernelMatrix,
    /// Centered targets.
    pub targets: &'a [f64],
    /// Per-sample box bound `C_i`.
    pub upper: &'a [f64],
    pub epsilon: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub record_objective: bool,
    /// Starting coefficients `beta`; clipped to the box and repaired to
    /// satisfy `sum beta = 0`.
    pub warm_start: Option<&'a [f64]>,
}

#[derive(Debug, Clone)]
pub(crate) struct SolverOutput {
    pub beta: Vec<f64>,
    /// Decision function is `sum beta_j K(x, x_j) - rho` in centered units.
    pub rho: f64,
    pub iterations: usize,
    pub max_violation: f64,
    pub converged: bool,
    /// Dual objective (maximization form) after every outer iteration.
    pub objective_trace: Vec<f64>,
}

pub(crate) fn solve(input: &SolverInput<'_>) -> SolverOutput {
    let n = input.targets.len();
    let m = 2 * n;
    let eps = input.epsilon;
    let y = input.targets;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let idx = |t: usize| if t < n { t } else { t - n };
    let bound = |t: usize| input.upper[idx(t)];

    let mut alpha = vec![0.0; m];
    // f = K beta; the gradient of variable t is p_t + y_t f_idx(t).
    let mut f = vec![0.0; n];
    if let Some(start) = input.warm_start {
        warm_init(start, input.upper, &mut alpha);
        for k in 0..n {
            let beta = alpha[k] - alpha[k + n];
            if beta != 0.0 {
                for (fl, kl) in f.iter_mut().zip(input.kernel.row(k).iter()) {
                    *fl += beta * kl;
                }
            }
        }
    }
    let grad = |t: usize, f: &[f64]| if t < n { eps - y[t] + f[t] } else { eps + y[t - n] - f[t - n] };
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut violation;

    loop {
        // i: maximal violator in I_up. j: second-order choice in I_low
        // (largest guaranteed decrease).
        let mut g_max = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for k in 0..n {
            let r = y[k] - f[k];
            // alpha_k: -y G = r - eps; alpha*_k: -y G = r + eps.
            if alpha[k] < input.upper[k] && r - eps > g_max {
                g_max = r - eps;
                i_sel = k;
            }
            if alpha[k + n] > 0.0 && r + eps > g_max {
                g_max = r + eps;
                i_sel = k + n;
            }
        }
        let mut g_min = f64::INFINITY;
        let mut j_sel = usize::MAX;
        if i_sel != usize::MAX {
            let row_i = input.kernel.row(idx(i_sel));
            let kii = row_i[idx(i_sel)];
            let mut best = f64::INFINITY;
            let mut consider = |t: usize, v: f64, k: usize| {
                if v < g_min {
                    g_min = v;
                }
                let b = g_max - v;
                if b > 0.0 {
                    let mut a = kii + input.kernel.get(k, k) - 2.0 * row_i[k];
                    if a <= 0.0 {
                        a = TAU;
                    }
                    let gain = -(b * b) / a;
                    if gain < best {
                        best = gain;
                        j_sel = t;
                    }
                }
            };
            for k in 0..n {
                let r = y[k] - f[k];
                if alpha[k] > 0.0 {
                    consider(k, r - eps, k);
                }
                if alpha[k + n] < input.upper[k] {
                    consider(k + n, r + eps, k);
                }
            }
        }
        violation = if i_sel == usize::MAX || j_sel == usize::MAX { 0.0 } else { g_max - g_min };
        if violation <= input.tol {
            break;
        }
        if iterations >= input.max_iter {
            break;
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (yi, yj) = (sign(i), sign(j));
        let (ci, cj) = (bound(i), bound(j));
        let (gi, gj) = (grad(i, &f), grad(j, &f));
        let kij = input.kernel.get(idx(i), idx(j));
        let kii = input.kernel.get(idx(i), idx(i));
        let kjj = input.kernel.get(idx(j), idx(j));
        let q_ij = yi * yj * kij;
        let old_i = alpha[i];
        let old_j = alpha[j];

        if yi != yj {
            let mut quad = kii + kjj + 2.0 * q_ij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-gi - gj) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > ci - cj {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            let mut quad = kii + kjj - 2.0 * q_ij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (gi - gj) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > ci {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cj {
                if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        // Rounding in the pair update can leave a value a hair outside its box.
        alpha[i] = alpha[i].clamp(0.0, ci);
        alpha[j] = alpha[j].clamp(0.0, cj);

        let dbi = yi * (alpha[i] - old_i);
        let dbj = yj * (alpha[j] - old_j);
        let (a, b) = (idx(i), idx(j));
        if a == b {
            let row = input.kernel.row(a);
            let d = dbi + dbj;
            for (fk, rk) in f.iter_mut().zip(row.iter()) {
                *fk += d * rk;
            }
        } else {
            let row_a = input.kernel.row(a);
            let row_b = input.kernel.row(b);
            for ((fk, ra), rb) in f.iter_mut().zip(row_a.iter()).zip(row_b.iter()) {
                *fk += dbi * ra + dbj * rb;
            }
        }

        if input.record_objective {
            let l1: f64 = alpha.iter().sum();
            let mut lin = 0.0;
            let mut quad = 0.0;
            for k in 0..n {
                let beta = alpha[k] - alpha[k + n];
                lin += y[k] * beta;
                quad += beta * f[k];
            }
            trace.push(lin - eps * l1 - 0.5 * quad);
        }
    }

    // Bias from free variables, else midpoint of the feasible interval.
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..m {
        let yt = sign(t);
        let yg = yt * grad(t, &f);
        if alpha[t] >= bound(t) {
            if yt < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if yt > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else if lb.is_finite() {
        lb
    } else {
        0.0
    };

    let beta = (0..n).map(|i| alpha[i] - alpha[i + n]).collect();
    SolverOutput {
        beta,
        rho,
        iterations,
        max_violation: violation,
        converged: violation <= input.tol,
        objective_trace: trace,
    }
}

fn warm_init(start: &[f64], upper: &[f64], alpha: &mut [f64]) {
    let n = upper.len();
    let mut sum = 0.0;
    for k in 0..n {
        if start[k] > 0.0 {
            alpha[k] = start[k].min(upper[k]);
        } else if start[k] < 0.0 {
            alpha[k + n] = (-start[k]).min(upper[k]);
        }
        sum += alpha[k] - alpha[k + n];
    }
    // Shrink one side until the equality constraint holds again.
    let offset = if sum > 0.0 { 0 } else { n };
    let mut excess = sum.abs();
    for a in alpha[offset..offset + n].iter_mut() {
        if excess <= 0.0 {
            break;
        }
        let d = a.min(excess);
        *a -= d;
        excess -= d;
    }
}
