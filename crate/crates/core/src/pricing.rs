//! The equilibrium price operator `T h = V h + g` on a finite grid and its
//! solution by successive approximation.

use crate::error::{param, Error, Result};
use crate::spectral::{ValuationMatrix, BOUNDARY_BAND};

/// Consecutive growing iterations required before declaring divergence.
const GROWTH_STREAK: usize = 50;
const GROWTH_FACTOR: f64 = 1.0 + 1e-6;
const TRACE_LEN: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct PricingProblem {
    v: ValuationMatrix,
    g_hat: Vec<f64>,
}

impl PricingProblem {
    pub fn new(v: ValuationMatrix, g_hat: Vec<f64>) -> Result<Self> {
        if g_hat.len() != v.len() {
            return param(format!("payoff has {} entries, valuation matrix {}", g_hat.len(), v.len()));
        }
        if g_hat.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return param("payoff must be finite and nonnegative");
        }
        if g_hat.iter().all(|g| *g == 0.0) {
            return param("payoff must be nonzero");
        }
        Ok(PricingProblem { v, g_hat })
    }

    /// Price-dividend problem: `g(x) = phi_weight(x)`, i.e. `h = V (h + 1)`.
    pub fn price_dividend(v: ValuationMatrix) -> Result<Self> {
        let g = v.weights().to_vec();
        Self::new(v, g)
    }

    pub fn valuation(&self) -> &ValuationMatrix {
        &self.v
    }

    pub fn payoff(&self) -> &[f64] {
        &self.g_hat
    }

    pub fn len(&self) -> usize {
        self.g_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g_hat.is_empty()
    }
}

/// `V h + g`.
pub fn apply_t(problem: &PricingProblem, h: &[f64]) -> Result<Vec<f64>> {
    if h.len() != problem.len() {
        return param(format!("h has {} entries, problem has {}", h.len(), problem.len()));
    }
    Ok(problem
        .v
        .apply(h)
        .into_iter()
        .zip(&problem.g_hat)
        .map(|(vh, g)| vh + g)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, max_iter: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricingSolution {
    pub h_star: Vec<f64>,
    /// `sup |h - T h|` at the returned `h_star`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub log_spectral_radius: f64,
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Successive approximation from `h = 0`.
pub fn solve_markov_solution(problem: &PricingProblem, opts: SolverOptions) -> Result<PricingSolution> {
    solve_from(problem, &vec![0.0; problem.len()], opts)
}

/// Successive approximation `h <- V h + g` from an arbitrary nonnegative start.
///
/// Divergence is declared only when the iterates keep growing and `ln r(V) >= 0`;
/// exponents in `(-1e-8, 0)` are too close to the boundary to call.
pub fn solve_from(problem: &PricingProblem, h0: &[f64], opts: SolverOptions) -> Result<PricingSolution> {
    if h0.len() != problem.len() {
        return param("start vector has the wrong length");
    }
    if h0.iter().any(|h| !(h.is_finite() && *h >= 0.0)) {
        return param("start vector must be finite and nonnegative");
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return param("tolerance must be positive and max_iter >= 1");
    }
    let r = problem.v.spectral_radius()?;
    let log_r = if r > 0.0 { r.ln() } else { f64::NEG_INFINITY };
    if log_r > -BOUNDARY_BAND && log_r < 0.0 {
        return Err(Error::Indeterminate {
            message: format!("ln r(V) = {log_r:e} is within {BOUNDARY_BAND:e} of the stability boundary"),
            log_spectral_radius: Some(log_r),
            residuals: Vec::new(),
        });
    }

    let pi = problem.v.chain().stationary();
    let norm = |h: &[f64]| -> f64 { h.iter().zip(pi).map(|(x, w)| x.abs() * w).sum() };

    let mut h = h0.to_vec();
    let mut prev_norm = norm(&h);
    let mut streak = 0usize;
    let mut trace: Vec<f64> = Vec::with_capacity(TRACE_LEN);

    for k in 1..=opts.max_iter {
        let next = apply_t(problem, &h)?;
        if next.iter().any(|x| !x.is_finite()) {
            return Err(if log_r >= 0.0 {
                Error::Instability {
                    message: format!("iterates overflowed after {k} steps; no finite solution exists"),
                    log_spectral_radius: Some(log_r),
                }
            } else {
                Error::Numerical(format!("iterates overflowed after {k} steps"))
            });
        }
        // `step` is the fixed-point residual of the current iterate
        let step = sup_diff(&next, &h);
        if step < opts.tol {
            return Ok(PricingSolution {
                residual: step,
                h_star: h,
                iterations: k - 1,
                converged: true,
                log_spectral_radius: log_r,
            });
        }
        h = next;
        if trace.len() == TRACE_LEN {
            trace.remove(0);
        }
        trace.push(step);

        let n = norm(&h);
        if n > prev_norm * GROWTH_FACTOR {
            streak += 1;
        } else {
            streak = 0;
        }
        prev_norm = n;
        if streak >= GROWTH_STREAK && log_r >= 0.0 {
            return Err(Error::Instability {
                message: format!(
                    "iterates grow without bound (ln r(V) = {log_r:.7e} >= 0); no finite solution exists"
                ),
                log_spectral_radius: Some(log_r),
            });
        }
    }
    Err(Error::Indeterminate {
        message: format!("neither converged nor diverged within {} iterations", opts.max_iter),
        log_spectral_radius: Some(log_r),
        residuals: trace,
    })
}

/// `sum_{k=0..K} V^k g`, accumulated Horner-style.
pub fn neumann_partial_sum(problem: &PricingProblem, k: usize) -> Result<Vec<f64>> {
    let mut s = problem.g_hat.clone();
    for i in 0..k {
        s = apply_t(problem, &s)?;
        if s.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!("partial sum overflowed at term {}", i + 1)));
        }
    }
    Ok(s)
}
