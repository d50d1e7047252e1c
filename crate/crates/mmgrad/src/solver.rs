//! Internal convex solver: a log-barrier Newton method for covering-type
//! programs
//!
//! ```text
//! minimize f(x)   subject to   a_i . x >= b_i,  x >= 0,
//! ```
//!
//! with nonnegative constraint coefficients, plus epigraph constraints
//! `t >= w (sum_j c_j x_j^p)^(1/p)` used by Morrey-norm minimization.
//! All paths are deterministic and single-threaded.

use nalgebra::{Cholesky, DMatrix, DVector};

/// Inner-solver KKT residual target for smooth objectives.
#[cfg_attr(not(test), allow(dead_code))]
pub const KKT_TOL: f64 = 1e-8;

/// A sparse `a . x >= rhs` row with nonnegative coefficients.
#[derive(Debug, Clone)]
pub struct Row {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// Epigraph cap `x[t_var] >= weight * (sum c_j x_j^p)^(1/p)`.
#[derive(Debug, Clone)]
pub struct PNormCap {
    pub weight: f64,
    pub terms: Vec<(usize, f64)>,
    pub p: f64,
    pub t_var: usize,
}

#[derive(Debug, Clone)]
pub enum Objective {
    /// `sum w_i x_i` with `w_i >= 0`.
    Linear(Vec<f64>),
    /// `sum w_i x_i^p` with `w_i >= 0` and `p` in `(1, inf)`.
    Power { weights: Vec<f64>, p: f64 },
}

impl Objective {
    fn value(&self, x: &[f64]) -> f64 {
        match self {
            Objective::Linear(w) => w.iter().zip(x).map(|(w, x)| w * x).sum(),
            Objective::Power { weights, p } => {
                weights.iter().zip(x).map(|(w, x)| w * x.powf(*p)).sum()
            }
        }
    }

    fn add_gradient(&self, x: &[f64], scale: f64, grad: &mut DVector<f64>) {
        match self {
            Objective::Linear(w) => {
                for (i, wi) in w.iter().enumerate() {
                    grad[i] += scale * wi;
                }
            }
            Objective::Power { weights, p } => {
                for (i, wi) in weights.iter().enumerate() {
                    grad[i] += scale * wi * p * x[i].powf(p - 1.0);
                }
            }
        }
    }

    fn add_hessian(&self, x: &[f64], scale: f64, hess: &mut DMatrix<f64>) {
        if let Objective::Power { weights, p } = self {
            for (i, wi) in weights.iter().enumerate() {
                hess[(i, i)] += scale * wi * p * (p - 1.0) * x[i].powf(p - 2.0);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub nvars: usize,
    pub objective: Objective,
    pub rows: Vec<Row>,
    pub caps: Vec<PNormCap>,
}

#[derive(Debug, Clone)]
#[cfg_attr(not(test), allow(dead_code))]
pub struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Stationarity residual of the Lagrangian at the returned point.
    pub kkt_residual: f64,
    pub newton_steps: usize,
}

struct CapEval {
    value: f64,
    grad: Vec<f64>,
}

fn eval_cap(cap: &PNormCap, x: &[f64]) -> CapEval {
    let s: f64 = cap.terms.iter().map(|&(j, c)| c * x[j].powf(cap.p)).sum();
    let h = cap.weight * s.powf(1.0 / cap.p);
    let mut grad = Vec::with_capacity(cap.terms.len() + 1);
    if s > 0.0 {
        let outer = cap.weight * s.powf(1.0 / cap.p - 1.0);
        for &(j, c) in &cap.terms {
            grad.push(outer * c * x[j].powf(cap.p - 1.0));
        }
    } else {
        grad.resize(cap.terms.len(), 0.0);
    }
    CapEval { value: h, grad }
}

/// Slack of every constraint at `x`; `None` if any slack is nonpositive.
fn slacks(problem: &Problem, x: &[f64]) -> Option<Vec<f64>> {
    let mut out = Vec::with_capacity(problem.rows.len() + problem.caps.len() + x.len());
    for row in &problem.rows {
        let s: f64 = row.terms.iter().map(|&(j, c)| c * x[j]).sum::<f64>() - row.rhs;
        if s <= 0.0 {
            return None;
        }
        out.push(s);
    }
    for cap in &problem.caps {
        let e = eval_cap(cap, x);
        let s = x[cap.t_var] - e.value;
        if s <= 0.0 {
            return None;
        }
        out.push(s);
    }
    for &xi in x {
        if xi <= 0.0 {
            return None;
        }
        out.push(xi);
    }
    Some(out)
}

fn barrier_value(problem: &Problem, tau: f64, x: &[f64]) -> Option<f64> {
    let s = slacks(problem, x)?;
    let logs: f64 = s.iter().map(|s| s.ln()).sum();
    Some(tau * problem.objective.value(x) - logs)
}

/// A strictly feasible starting point: a large constant vector.
fn strictly_feasible_start(problem: &Problem) -> Vec<f64> {
    let mut level = 1.0f64;
    for row in &problem.rows {
        let coef: f64 = row.terms.iter().map(|&(_, c)| c).sum();
        if coef > 0.0 && row.rhs > 0.0 {
            level = level.max(2.0 * row.rhs / coef);
        }
    }
    let mut x = vec![level; problem.nvars];
    if !problem.caps.is_empty() {
        let t_var = problem.caps[0].t_var;
        let mut t = 1.0f64;
        for cap in &problem.caps {
            t = t.max(2.0 * eval_cap(cap, &x).value + 1.0);
        }
        x[t_var] = t;
    }
    x
}

/// Solves the problem with a log-barrier method. Constraints of the
/// returned point hold strictly; the objective is within roughly
/// `m / tau_final` of the optimum.
pub fn solve(problem: &Problem) -> Solution {
    let n = problem.nvars;
    if n == 0 {
        return Solution { x: Vec::new(), objective: 0.0, kkt_residual: 0.0, newton_steps: 0 };
    }
    let m = (problem.rows.len() + problem.caps.len() + n) as f64;
    let mut x = strictly_feasible_start(problem);
    let mut tau = 1.0f64;
    let tau_max = (m / 1e-11).max(1e12);
    let mut newton_steps = 0usize;

    while tau <= tau_max {
        // Damped Newton on tau * f + barrier.
        for _ in 0..60 {
            let (grad, hess) = barrier_derivatives(problem, tau, &x);
            let grad_norm = grad.norm();
            let mut h = hess;
            // Ridge fallback keeps the factorization alive near-singular.
            let chol = loop {
                match Cholesky::new(h.clone()) {
                    Some(c) => break c,
                    None => {
                        for i in 0..n {
                            h[(i, i)] += 1e-10 * (1.0 + h[(i, i)].abs());
                        }
                    }
                }
            };
            let step = chol.solve(&grad);
            let decrement = grad.dot(&step);
            if decrement.abs() < 1e-13 && grad_norm < 1e-7 * tau.max(1.0) {
                break;
            }
            // Backtracking line search staying strictly feasible.
            let base = barrier_value(problem, tau, &x).expect("iterate left the interior");
            let mut alpha = 1.0f64;
            let mut accepted = false;
            for _ in 0..80 {
                let trial: Vec<f64> =
                    x.iter().zip(step.iter()).map(|(xi, si)| xi - alpha * si).collect();
                if let Some(v) = barrier_value(problem, tau, &trial) {
                    if v <= base - 0.25 * alpha * decrement + 1e-14 * base.abs() {
                        x = trial;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            newton_steps += 1;
            if !accepted {
                break;
            }
            if decrement < 1e-16 * (1.0 + base.abs()) {
                break;
            }
        }
        if m / tau < 1e-11 {
            break;
        }
        tau *= 8.0;
    }

    let kkt_residual = kkt_residual(problem, tau, &x);
    Solution { x: x.clone(), objective: problem.objective.value(&x), kkt_residual, newton_steps }
}

fn barrier_derivatives(
    problem: &Problem,
    tau: f64,
    x: &[f64],
) -> (DVector<f64>, DMatrix<f64>) {
    let n = problem.nvars;
    let mut grad = DVector::zeros(n);
    let mut hess = DMatrix::zeros(n, n);
    problem.objective.add_gradient(x, tau, &mut grad);
    problem.objective.add_hessian(x, tau, &mut hess);
    for row in &problem.rows {
        let s: f64 = row.terms.iter().map(|&(j, c)| c * x[j]).sum::<f64>() - row.rhs;
        let inv = 1.0 / s;
        for &(j, c) in &row.terms {
            grad[j] -= c * inv;
        }
        let inv2 = inv * inv;
        for &(j, cj) in &row.terms {
            for &(k, ck) in &row.terms {
                hess[(j, k)] += cj * ck * inv2;
            }
        }
    }
    for cap in &problem.caps {
        add_cap_derivatives(cap, x, &mut grad, &mut hess);
    }
    for (i, &xi) in x.iter().enumerate() {
        grad[i] -= 1.0 / xi;
        hess[(i, i)] += 1.0 / (xi * xi);
    }
    (grad, hess)
}

fn add_cap_derivatives(
    cap: &PNormCap,
    x: &[f64],
    grad: &mut DVector<f64>,
    hess: &mut DMatrix<f64>,
) {
    let e = eval_cap(cap, x);
    let s = x[cap.t_var] - e.value;
    let inv = 1.0 / s;
    let inv2 = inv * inv;
    // Slack gradient: +1 at t, -dh at the members.
    grad[cap.t_var] -= inv;
    for (k, &(j, _)) in cap.terms.iter().enumerate() {
        grad[j] += e.grad[k] * inv;
    }
    // Rank-one part grad_s grad_s^T / s^2.
    let mut idx: Vec<usize> = cap.terms.iter().map(|&(j, _)| j).collect();
    let mut gs: Vec<f64> = e.grad.iter().map(|g| -g).collect();
    idx.push(cap.t_var);
    gs.push(1.0);
    for (a, &ja) in idx.iter().enumerate() {
        for (b, &jb) in idx.iter().enumerate() {
            hess[(ja, jb)] += gs[a] * gs[b] * inv2;
        }
    }
    // Curvature of h itself: (p-1) w [S^(1/p-1) diag(c x^(p-2))
    //   - S^(1/p-2) (c x^(p-1))(c x^(p-1))^T], scaled by 1/s.
    let p = cap.p;
    let s_sum: f64 = cap.terms.iter().map(|&(j, c)| c * x[j].powf(p)).sum();
    if s_sum > 0.0 {
        let w = cap.weight;
        let outer1 = w * (p - 1.0) * s_sum.powf(1.0 / p - 1.0);
        let outer2 = w * (p - 1.0) * s_sum.powf(1.0 / p - 2.0);
        let v: Vec<f64> = cap.terms.iter().map(|&(j, c)| c * x[j].powf(p - 1.0)).collect();
        for (k, &(j, c)) in cap.terms.iter().enumerate() {
            hess[(j, j)] += outer1 * c * x[j].powf(p - 2.0) * inv;
            for (l, &(jl, _)) in cap.terms.iter().enumerate() {
                hess[(j, jl)] -= outer2 * v[k] * v[l] * inv;
            }
        }
    }
}

/// Stationarity residual with the barrier's implicit multipliers
/// `lambda_i = 1 / (tau s_i)`.
fn kkt_residual(problem: &Problem, tau: f64, x: &[f64]) -> f64 {
    let n = problem.nvars;
    let mut grad = DVector::zeros(n);
    problem.objective.add_gradient(x, 1.0, &mut grad);
    for row in &problem.rows {
        let s: f64 = row.terms.iter().map(|&(j, c)| c * x[j]).sum::<f64>() - row.rhs;
        let lambda = 1.0 / (tau * s);
        for &(j, c) in &row.terms {
            grad[j] -= lambda * c;
        }
    }
    for cap in &problem.caps {
        let e = eval_cap(cap, x);
        let s = x[cap.t_var] - e.value;
        let lambda = 1.0 / (tau * s);
        grad[cap.t_var] -= lambda;
        for (k, &(j, _)) in cap.terms.iter().enumerate() {
            grad[j] += lambda * e.grad[k];
        }
    }
    for (i, &xi) in x.iter().enumerate() {
        grad[i] -= 1.0 / (tau * xi);
    }
    grad.norm()
}

/// Exact minimizer of `max_i x_i` under covering rows: the optimal level
/// is the largest `rhs / sum(coefs)`, and the returned point is the
/// lexicographically least feasible point below that level.
pub fn solve_minimax(nvars: usize, rows: &[Row]) -> (Vec<f64>, f64) {
    let mut level = 0.0f64;
    for row in rows {
        let coef: f64 = row.terms.iter().map(|&(_, c)| c).sum();
        if coef > 0.0 {
            level = level.max(row.rhs / coef);
        }
    }
    let mut x = vec![0.0f64; nvars];
    for i in 0..nvars {
        let mut need = 0.0f64;
        for row in rows {
            let Some(&(_, ci)) = row.terms.iter().find(|&&(j, _)| j == i) else {
                continue;
            };
            let mut rest = 0.0;
            for &(j, c) in &row.terms {
                if j < i {
                    rest += c * x[j];
                } else if j > i {
                    rest += c * level;
                }
            }
            need = need.max((row.rhs - rest) / ci);
        }
        x[i] = need.max(0.0);
    }
    (x, level)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_row(i: usize, j: usize, rhs: f64) -> Row {
        Row { terms: vec![(i, 1.0), (j, 1.0)], rhs }
    }

    #[test]
    fn linear_two_variable_cover() {
        // min x + y s.t. x + y >= 1 has value 1.
        let problem = Problem {
            nvars: 2,
            objective: Objective::Linear(vec![1.0, 1.0]),
            rows: vec![pair_row(0, 1, 1.0)],
            caps: vec![],
        };
        let sol = solve(&problem);
        assert!((sol.objective - 1.0).abs() < 1e-8, "value {}", sol.objective);
        assert!(sol.kkt_residual < 1e-6);
    }

    #[test]
    fn quadratic_symmetric_optimum() {
        // min x^2 + y^2 s.t. x + y >= 2 -> x = y = 1, value 2.
        let problem = Problem {
            nvars: 2,
            objective: Objective::Power { weights: vec![1.0, 1.0], p: 2.0 },
            rows: vec![pair_row(0, 1, 2.0)],
            caps: vec![],
        };
        let sol = solve(&problem);
        assert!((sol.objective - 2.0).abs() < 1e-7);
        assert!((sol.x[0] - 1.0).abs() < 1e-5);
        assert!((sol.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn weighted_linear_prefers_cheap_variable() {
        // min x + 3y s.t. x + y >= 1 -> x = 1, y = 0.
        let problem = Problem {
            nvars: 2,
            objective: Objective::Linear(vec![1.0, 3.0]),
            rows: vec![pair_row(0, 1, 1.0)],
            caps: vec![],
        };
        let sol = solve(&problem);
        assert!((sol.objective - 1.0).abs() < 1e-7);
        assert!(sol.x[1] < 1e-6);
    }

    #[test]
    fn minimax_closed_form() {
        let rows = vec![pair_row(0, 1, 1.0), pair_row(1, 2, 0.4)];
        let (x, level) = solve_minimax(3, &rows);
        assert_eq!(level, 0.5);
        assert_eq!(x, vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn epigraph_minimizes_weighted_norm_level() {
        // Variables (x0, x1, t): minimize t subject to
        // x0 + x1 >= 2 and t >= sqrt(x0^2 + x1^2); optimum sqrt(2).
        let problem = Problem {
            nvars: 3,
            objective: Objective::Linear(vec![0.0, 0.0, 1.0]),
            rows: vec![pair_row(0, 1, 2.0)],
            caps: vec![PNormCap {
                weight: 1.0,
                terms: vec![(0, 1.0), (1, 1.0)],
                p: 2.0,
                t_var: 2,
            }],
        };
        let sol = solve(&problem);
        assert!((sol.objective - 2.0f64.sqrt()).abs() < 1e-6, "value {}", sol.objective);
    }
}
