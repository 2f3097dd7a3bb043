//! Soft-margin SVM trained by sequential minimal optimization on the dual.
//!
//! The solver picks the maximal-violating pair with a second-order working
//! -set rule on a bias-free gradient, the stopping test `m(alpha) <=
//! M(alpha) + tol` bounding the worst KKT violation at the midpoint bias.
//! Scans run in index order with ties to the lowest index, so training is
//! deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{CLEAN, NOISY};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Kernel {
    Rbf { gamma: f64 },
    Linear,
}

impl Kernel {
    pub fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        match self {
            Kernel::Rbf { gamma } => {
                let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
            Kernel::Linear => u.iter().zip(v).map(|(a, b)| a * b).sum(),
        }
    }
}

/// Trained model: support vectors with dual coefficients `alpha_i * y_i`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_x: Vec<Vec<f64>>,
    pub coef: Vec<f64>,
    pub bias: f64,
    pub kernel: Kernel,
    pub c: f64,
    pub converged: bool,
    pub max_kkt_violation: f64,
}

impl SvmModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_x
            .iter()
            .zip(&self.coef)
            .map(|(sv, c)| c * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }

    /// Ties on the boundary go to Noisy.
    pub fn predict(&self, x: &[f64]) -> u8 {
        if self.decision(x) >= 0.0 {
            NOISY
        } else {
            CLEAN
        }
    }

    pub fn predict_batch(&self, rows: &[Vec<f64>]) -> Vec<u8> {
        rows.iter().map(|r| self.predict(r)).collect()
    }
}

/// Raw SMO output over the training rows.
#[derive(Debug, Clone)]
pub struct SmoResult {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub max_kkt_violation: f64,
    pub iterations: usize,
}

// ridge for flat pair curvature (duplicate points)
const TAU: f64 = 1e-12;

struct Solver<'a> {
    gram: &'a [Vec<f64>],
    y: &'a [f64],
    c: f64,
    alpha: Vec<f64>,
    /// Bias-free decision per row: F_i = sum_j alpha_j y_j K_ij.
    f: Vec<f64>,
}

impl Solver<'_> {
    fn in_up_set(&self, i: usize) -> bool {
        (self.y[i] > 0.0 && self.alpha[i] < self.c) || (self.y[i] < 0.0 && self.alpha[i] > 0.0)
    }

    fn in_low_set(&self, i: usize) -> bool {
        (self.y[i] > 0.0 && self.alpha[i] > 0.0) || (self.y[i] < 0.0 && self.alpha[i] < self.c)
    }

    /// `y_i - F_i`: feasible biases satisfy `b >= max over the up set` and
    /// `b <= min over the low set`.
    fn bias_bound(&self, i: usize) -> f64 {
        self.y[i] - self.f[i]
    }

    /// Maximal up-set violator, then the low-set partner with the largest
    /// second-order gain. Returns None at optimality within `tol`.
    fn select_pair(&self, tol: f64) -> Option<(usize, usize)> {
        let n = self.y.len();
        let mut i_best: Option<(f64, usize)> = None;
        for i in 0..n {
            if self.in_up_set(i) {
                let v = self.bias_bound(i);
                if i_best.map_or(true, |(m, _)| v > m) {
                    i_best = Some((v, i));
                }
            }
        }
        let (m, i) = i_best?;
        let mut low_min = f64::INFINITY;
        let mut j_best: Option<(f64, usize)> = None;
        for t in 0..n {
            if self.in_low_set(t) {
                let vt = self.bias_bound(t);
                low_min = low_min.min(vt);
                let diff = m - vt;
                if diff > tol {
                    let mut curv =
                        self.gram[i][i] + self.gram[t][t] - 2.0 * self.gram[i][t];
                    if curv <= 0.0 {
                        curv = TAU;
                    }
                    let gain = diff * diff / curv;
                    if j_best.map_or(true, |(g, _)| gain > g) {
                        j_best = Some((gain, t));
                    }
                }
            }
        }
        if m - low_min <= tol {
            return None;
        }
        j_best.map(|(_, j)| (i, j))
    }

    /// Analytic two-variable update preserving `sum alpha_i y_i` and the
    /// box. Alphas within 1e-12*C of a bound snap onto it.
    fn step(&mut self, i1: usize, i2: usize) {
        let (a1_old, a2_old) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let e1 = self.f[i1] - self.y[i1];
        let e2 = self.f[i2] - self.y[i2];
        let s = y1 * y2;
        let (lo, hi) = if s < 0.0 {
            (
                (a2_old - a1_old).max(0.0),
                (self.c + a2_old - a1_old).min(self.c),
            )
        } else {
            (
                (a1_old + a2_old - self.c).max(0.0),
                (a1_old + a2_old).min(self.c),
            )
        };
        if lo >= hi {
            return;
        }
        let mut eta =
            self.gram[i1][i1] + self.gram[i2][i2] - 2.0 * self.gram[i1][i2];
        if eta <= 0.0 {
            eta = TAU;
        }
        // clamp to the pair box, then snap onto the global bounds: an alpha
        // left a hair inside 0 or C would keep its point in the violating
        // sets with a zero-width feasible box, cycling the solver
        let snap = 1e-12 * self.c;
        let mut a2 = (a2_old + y2 * (e1 - e2) / eta).clamp(lo, hi);
        if a2 < snap {
            a2 = 0.0;
        } else if a2 > self.c - snap {
            a2 = self.c;
        }
        let mut a1 = (a1_old + s * (a2_old - a2)).clamp(0.0, self.c);
        if a1 < snap {
            a1 = 0.0;
        } else if a1 > self.c - snap {
            a1 = self.c;
        }
        let d1 = y1 * (a1 - a1_old);
        let d2 = y2 * (a2 - a2_old);
        for k in 0..self.f.len() {
            self.f[k] += d1 * self.gram[i1][k] + d2 * self.gram[i2][k];
        }
        self.alpha[i1] = a1;
        self.alpha[i2] = a2;
    }

    /// Midpoint bias between the tightest up/low constraints.
    fn bias(&self) -> f64 {
        let n = self.y.len();
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for i in 0..n {
            if self.in_up_set(i) {
                lo = lo.max(self.bias_bound(i));
            }
            if self.in_low_set(i) {
                hi = hi.min(self.bias_bound(i));
            }
        }
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => 0.0,
        }
    }

    /// Exact worst KKT violation at a given bias.
    fn max_violation(&self, bias: f64) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.y.len() {
            let margin = self.y[i] * (self.f[i] + bias);
            let v = if self.alpha[i] <= 0.0 {
                (1.0 - margin).max(0.0)
            } else if self.alpha[i] >= self.c {
                (margin - 1.0).max(0.0)
            } else {
                (margin - 1.0).abs()
            };
            worst = worst.max(v);
        }
        worst
    }
}

/// Solve the dual on a precomputed kernel matrix. `y` entries are +/-1.
/// `max_passes` is in sweep-equivalents: the iteration cap is
/// `max_passes * n` pair updates.
pub fn svm_train_precomputed(
    gram: &[Vec<f64>],
    y: &[f64],
    c: f64,
    tol: f64,
    max_passes: usize,
) -> Result<SmoResult> {
    let n = y.len();
    if n < 2 || gram.len() != n {
        return Err(Error::rejected("kernel matrix and labels disagree"));
    }
    if !(c > 0.0) {
        return Err(Error::rejected(format!("C must be positive, got {c}")));
    }
    let mut solver = Solver {
        gram,
        y,
        c,
        alpha: vec![0.0; n],
        f: vec![0.0; n],
    };
    let max_iter = max_passes.saturating_mul(n).max(1000);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        match solver.select_pair(tol) {
            None => {
                converged = true;
                break;
            }
            Some((i, j)) => solver.step(i, j),
        }
        iterations += 1;
    }
    let bias = solver.bias();
    Ok(SmoResult {
        max_kkt_violation: solver.max_violation(bias),
        alpha: solver.alpha,
        bias,
        converged,
        iterations,
    })
}

/// Train on feature rows with class labels (0 = Clean maps to -1, 1 = Noisy
/// to +1). Non-convergence within the iteration cap returns the best iterate
/// with `converged = false`.
pub fn svm_train(
    x: &[Vec<f64>],
    y: &[u8],
    kernel: Kernel,
    c: f64,
    tol: f64,
    max_passes: usize,
) -> Result<SvmModel> {
    if x.len() != y.len() {
        return Err(Error::rejected("row/label count mismatch"));
    }
    if !(y.contains(&CLEAN) && y.contains(&NOISY)) {
        return Err(Error::rejected("SVM training needs both classes present"));
    }
    let n = x.len();
    let y_pm: Vec<f64> = y.iter().map(|&v| if v == NOISY { 1.0 } else { -1.0 }).collect();
    let mut gram = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let k = kernel.eval(&x[i], &x[j]);
            gram[i][j] = k;
            gram[j][i] = k;
        }
    }
    let result = svm_train_precomputed(&gram, &y_pm, c, tol, max_passes)?;
    let mut support_x = Vec::new();
    let mut coef = Vec::new();
    for i in 0..n {
        if result.alpha[i] > 0.0 {
            support_x.push(x[i].clone());
            coef.push(result.alpha[i] * y_pm[i]);
        }
    }
    Ok(SvmModel {
        support_x,
        coef,
        bias: result.bias,
        kernel,
        c,
        converged: result.converged,
        max_kkt_violation: result.max_kkt_violation,
    })
}
