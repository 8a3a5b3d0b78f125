//! Valuation matrices on finite chains, their spectral radii, and the exact
//! finite-state stability exponents.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::markov::MarkovChain;
use crate::models::{DiscreteModel, PhiWeight};

/// Exponents within this distance of zero are reported as indeterminate.
pub const BOUNDARY_BAND: f64 = 1e-8;

const POWER_MAX_ITER: usize = 100_000;
const POWER_RATIO_TOL: f64 = 1e-13;
const POWER_VECTOR_TOL: f64 = 1e-10;
const MAX_BOND_PATHS: f64 = 1e6;

/// `V(x, y) = phi_weight(x) * P(x, y)` on a finite chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuationMatrix {
    v: DMatrix<f64>,
    weights: Vec<f64>,
    chain: MarkovChain,
}

impl ValuationMatrix {
    /// Builds `V` from per-state discount weights; `weights` must match the chain.
    pub fn from_weights(chain: &MarkovChain, weights: &[f64]) -> Result<Self> {
        if weights.len() != chain.len() {
            return param(format!(
                "{} weights supplied for a chain with {} states",
                weights.len(),
                chain.len()
            ));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return param("discount weights must be finite and nonnegative");
        }
        let p = chain.transition();
        let n = chain.len();
        let v = DMatrix::from_fn(n, n, |i, j| weights[i] * p[(i, j)]);
        Ok(ValuationMatrix { v, weights: weights.to_vec(), chain: chain.clone() })
    }

    pub fn from_discrete(model: &DiscreteModel) -> Result<Self> {
        Self::from_weights(&model.chain, &model.weights)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn chain(&self) -> &MarkovChain {
        &self.chain
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// The same chain with every weight multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let w: Vec<f64> = self.weights.iter().map(|w| w * c).collect();
        Self::from_weights(&self.chain, &w)
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        Ok(perron(&self.v, Some(self.chain.stationary()))?.radius)
    }

    /// `V h`.
    pub fn apply(&self, h: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.v[(i, j)] * h[j]).sum())
            .collect()
    }
}

/// Builds the valuation matrix of `model` on `chain`.
pub fn build_valuation_matrix(model: &impl PhiWeight, chain: &MarkovChain) -> Result<ValuationMatrix> {
    let w: Vec<f64> = chain.states().iter().map(|&x| model.phi_weight(x)).collect();
    ValuationMatrix::from_weights(chain, &w)
}

/// How the dominant eigenvalue was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusMethod {
    PowerIteration,
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerronResult {
    pub radius: f64,
    /// Dominant eigenvector (normalized to unit weighted 1-norm) when power iteration converged.
    pub vector: Option<Vec<f64>>,
    pub method: RadiusMethod,
    pub iterations: usize,
}

fn weighted_norm(x: &DVector<f64>, w: &[f64]) -> f64 {
    x.iter().zip(w).map(|(a, b)| a.abs() * b).sum()
}

/// Spectral radius by power iteration from `1`, normalized in the `weights`-weighted
/// 1-norm, falling back to a dense eigensolver when the iteration does not settle
/// (periodic chains, small spectral gaps) or the matrix has negative entries.
pub fn perron(m: &DMatrix<f64>, weights: Option<&[f64]>) -> Result<PerronResult> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return param(format!("spectral radius needs a square matrix, got {}x{}", m.nrows(), m.ncols()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let uniform = vec![1.0 / n as f64; n];
    let w: &[f64] = match weights {
        Some(w) if w.len() == n && w.iter().all(|v| *v > 0.0) => w,
        _ => &uniform,
    };

    if m.iter().all(|v| *v >= 0.0) {
        let mut x = DVector::from_element(n, 1.0);
        x /= weighted_norm(&x, w);
        let mut last = f64::NAN;
        for k in 1..=POWER_MAX_ITER {
            let y = m * &x;
            let ny = weighted_norm(&y, w);
            if ny == 0.0 {
                // V^k 1 = 0 with V >= 0 forces V^k = 0.
                return Ok(PerronResult { radius: 0.0, vector: None, method: RadiusMethod::PowerIteration, iterations: k });
            }
            let next = y / ny;
            let dx = (&next - &x).amax();
            let settled = (ny - last).abs() <= POWER_RATIO_TOL * ny && dx <= POWER_VECTOR_TOL * next.amax();
            x = next;
            last = ny;
            if settled {
                return Ok(PerronResult {
                    radius: ny,
                    vector: Some(x.iter().copied().collect()),
                    method: RadiusMethod::PowerIteration,
                    iterations: k,
                });
            }
        }
    }
    let radius = dense_spectral_radius(m)?;
    Ok(PerronResult { radius, vector: None, method: RadiusMethod::Dense, iterations: 0 })
}

/// Largest eigenvalue modulus from the full (complex) spectrum.
pub fn dense_spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() == 0 || m.nrows() != m.ncols() {
        return param("dense eigensolver needs a non-empty square matrix");
    }
    let eig = m.clone().complex_eigenvalues();
    let r = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::Numerical("dense eigensolver returned non-finite eigenvalues".into()))
    }
}

/// Spectral radius of a general square nonnegative matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    Ok(perron(m, None)?.radius)
}

/// Which route produced a stability exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Analytic,
    Spectral,
    #[serde(alias = "mc")]
    MonteCarlo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Analytic => "analytic",
            Method::Spectral => "spectral",
            Method::MonteCarlo => "monte-carlo",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Method::Analytic),
            "spectral" => Ok(Method::Spectral),
            "mc" | "monte-carlo" | "montecarlo" => Ok(Method::MonteCarlo),
            other => param(format!("unknown method '{other}' (expected analytic, spectral or mc)")),
        }
    }
}

/// Three-way stability verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
    Indeterminate,
}

impl Verdict {
    pub fn from_exponent(lphi: f64) -> Verdict {
        if !lphi.is_finite() {
            Verdict::Indeterminate
        } else if lphi < -BOUNDARY_BAND {
            Verdict::Stable
        } else if lphi > BOUNDARY_BAND {
            Verdict::Unstable
        } else {
            Verdict::Indeterminate
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "STABLE",
            Verdict::Unstable => "UNSTABLE",
            Verdict::Indeterminate => "INDETERMINATE",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub method: Method,
    pub lphi: f64,
    pub p: f64,
    pub std_error: Option<f64>,
    pub stable: bool,
}

impl StabilityReport {
    pub fn new(method: Method, lphi: f64, p: f64, std_error: Option<f64>) -> Self {
        StabilityReport { method, lphi, p, std_error, stable: lphi < 0.0 }
    }

    pub fn verdict(&self) -> Verdict {
        Verdict::from_exponent(self.lphi)
    }
}

/// `ln r(V)`. On a finite chain the exponent is the same for every order p, so `p` is recorded as 1.
pub fn lphi_from_matrix(v: &ValuationMatrix) -> Result<StabilityReport> {
    let r = v.spectral_radius()?;
    if r <= 0.0 {
        return Err(Error::Degeneracy("spectral radius is zero; the exponent is -infinity".into()));
    }
    Ok(StabilityReport::new(Method::Spectral, r.ln(), 1.0, None))
}

/// The sequence `a_n = (1/(n p)) ln sum_x pi(x) (V^n 1)(x)^p`, `n = 1..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialExponents {
    pub p: f64,
    pub values: Vec<f64>,
}

impl PartialExponents {
    pub fn last(&self) -> f64 {
        *self.values.last().expect("n_max >= 1")
    }

    /// One-step growth estimate `n a_n - (n-1) a_(n-1)` at the end of the sequence.
    ///
    /// It converges geometrically to the exponent, whereas `a_n` itself carries an
    /// `O(1/n)` offset from the initial condition.
    pub fn tail(&self) -> f64 {
        let n = self.values.len();
        if n == 1 {
            return self.values[0];
        }
        n as f64 * self.values[n - 1] - (n - 1) as f64 * self.values[n - 2]
    }
}

/// Exact partial exponents by repeated matrix-vector products, kept in log space.
pub fn lphi_p_exact(v: &ValuationMatrix, p: f64, n_max: usize) -> Result<PartialExponents> {
    if !(p.is_finite() && p >= 1.0) {
        return param(format!("order p must be >= 1, got {p}"));
    }
    if n_max == 0 {
        return param("n_max must be >= 1");
    }
    let pi = v.chain().stationary();
    let mut u = vec![1.0; v.len()];
    let mut log_scale = 0.0;
    let mut values = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        u = v.apply(&u);
        let s = u.iter().copied().fold(0.0, f64::max);
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::Numerical(format!("V^{n} 1 is zero or non-finite")));
        }
        u.iter_mut().for_each(|x| *x /= s);
        log_scale += s.ln();
        let moment: f64 = pi.iter().zip(&u).map(|(w, x)| w * x.powf(p)).sum();
        if moment <= 0.0 {
            return Err(Error::Degeneracy(format!("stationary mass of V^{n} 1 is zero")));
        }
        values.push((p * log_scale + moment.ln()) / (n as f64 * p));
    }
    Ok(PartialExponents { p, values })
}

/// `sum_x pi(x) ln phi_weight(x)`: the finite-state integrated exponent, computed from the
/// innovation-averaged weights.
pub fn integrated_exponent(model: &impl PhiWeight, chain: &MarkovChain) -> Result<f64> {
    let w: Vec<f64> = chain.states().iter().map(|&x| model.phi_weight(x)).collect();
    integrated_exponent_from_weights(&w, chain.stationary())
}

pub fn integrated_exponent_from_weights(weights: &[f64], pi: &[f64]) -> Result<f64> {
    if weights.len() != pi.len() {
        return param("weights and stationary distribution differ in length");
    }
    let mut acc = 0.0;
    for (w, p) in weights.iter().zip(pi) {
        if *w <= 0.0 {
            if *p > 0.0 {
                return Err(Error::Degeneracy("zero discount weight on a state with positive mass".into()));
            }
            continue;
        }
        acc += p * w.ln();
    }
    Ok(acc)
}

/// Largest gap between `V^n 1` and the brute-force sum over every length-`n` path of
/// discounted transition probabilities.
pub fn verify_bond_identity(v: &ValuationMatrix, n: usize) -> Result<f64> {
    let k = v.len();
    if (k as f64).powi(n as i32) > MAX_BOND_PATHS {
        return param(format!("{k}^{n} paths exceeds the enumeration budget of {MAX_BOND_PATHS}"));
    }
    let mut power = vec![1.0; k];
    for _ in 0..n {
        power = v.apply(&power);
    }
    let w = v.weights();
    let p = v.chain().transition();

    fn walk(state: usize, depth: usize, w: &[f64], p: &DMatrix<f64>) -> f64 {
        if depth == 0 {
            return 1.0;
        }
        (0..w.len())
            .filter(|&next| p[(state, next)] > 0.0)
            .map(|next| w[state] * p[(state, next)] * walk(next, depth - 1, w, p))
            .sum()
    }

    Ok((0..k)
        .map(|x| (walk(x, n, w, p) - power[x]).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{rouwenhorst, Ar1Spec};
    use crate::models::{CrraCvParams, HabitParams, ModelSpec};
    use approx::assert_abs_diff_eq;

    fn chain(n: usize, p: &[f64]) -> MarkovChain {
        MarkovChain::new((0..n).map(|i| i as f64).collect(), DMatrix::from_row_slice(n, n, p)).unwrap()
    }

    #[test]
    fn radius_examples() {
        assert_abs_diff_eq!(spectral_radius(&DMatrix::identity(3, 3)).unwrap(), 1.0, epsilon = 1e-14);
        let nil = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0]);
        assert_abs_diff_eq!(spectral_radius(&nil).unwrap(), 0.0, epsilon = 1e-14);
        let m = DMatrix::from_row_slice(2, 2, &[0.5, 0.3, 0.2, 0.4]);
        assert_abs_diff_eq!(spectral_radius(&m).unwrap(), 0.7, epsilon = 1e-12);
    }

    #[test]
    fn periodic_matrix_uses_fallback_or_converges() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.5, 0.0]);
        assert_abs_diff_eq!(spectral_radius(&m).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn build_examples() {
        let one = MarkovChain::new(vec![0.0], DMatrix::from_element(1, 1, 1.0)).unwrap();
        let v = ValuationMatrix::from_weights(&one, &[0.7]).unwrap();
        assert_eq!(v.matrix()[(0, 0)], 0.7);

        let c = chain(2, &[0.5, 0.5, 0.5, 0.5]);
        let v = ValuationMatrix::from_weights(&c, &[0.2, 0.6]).unwrap();
        assert_eq!(v.matrix().as_slice(), &[0.1, 0.3, 0.1, 0.3]); // column-major
        assert!(ValuationMatrix::from_weights(&c, &[0.2]).is_err());
    }

    #[test]
    fn one_state_exponent_is_log_beta() {
        let one = MarkovChain::new(vec![0.0], DMatrix::from_element(1, 1, 1.0)).unwrap();
        let v = ValuationMatrix::from_weights(&one, &[0.95]).unwrap();
        assert_abs_diff_eq!(lphi_from_matrix(&v).unwrap().lphi, 0.95f64.ln(), epsilon = 1e-15);
        let zero = ValuationMatrix::from_weights(&one, &[0.0]).unwrap();
        assert!(matches!(lphi_from_matrix(&zero), Err(Error::Degeneracy(_))));
    }

    #[test]
    fn benchmark_discretization_accuracy() {
        let f = CrraCvParams::benchmark().discretize(10).unwrap();
        let v = build_valuation_matrix(&f, &f.chain).unwrap();
        let l = lphi_from_matrix(&v).unwrap().lphi;
        assert!((l - -0.0031545).abs() < 1e-6, "{l}");
    }

    #[test]
    fn habit_discretization_tracks_closed_form() {
        let h = HabitParams::figure_defaults();
        let m = ModelSpec::Habit(h);
        let v = ValuationMatrix::from_discrete(&m.discretize(25).unwrap()).unwrap();
        let l = lphi_from_matrix(&v).unwrap().lphi;
        assert!((l - m.lphi_analytic().unwrap()).abs() < 1e-3, "{l}");
    }

    #[test]
    fn partial_exponents_constant_model() {
        let c = chain(3, &[0.2, 0.5, 0.3, 0.1, 0.1, 0.8, 0.6, 0.2, 0.2]);
        let v = ValuationMatrix::from_weights(&c, &[0.9, 0.9, 0.9]).unwrap();
        for p in [1.0, 2.0, 3.5] {
            let a = lphi_p_exact(&v, p, 50).unwrap();
            for x in &a.values {
                assert_abs_diff_eq!(*x, 0.9f64.ln(), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn partial_exponents_p1_is_weighted_norm() {
        let c = chain(2, &[0.7, 0.3, 0.4, 0.6]);
        let v = ValuationMatrix::from_weights(&c, &[0.8, 1.1]).unwrap();
        let a = lphi_p_exact(&v, 1.0, 5).unwrap();
        let mut u = vec![1.0, 1.0];
        for n in 1..=5 {
            u = v.apply(&u);
            let norm: f64 = c.stationary().iter().zip(&u).map(|(p, x)| p * x).sum();
            assert_abs_diff_eq!(a.values[n - 1], norm.ln() / n as f64, epsilon = 1e-14);
        }
        assert!(lphi_p_exact(&v, 0.5, 5).is_err());
        assert!(lphi_p_exact(&v, 1.0, 0).is_err());
    }

    #[test]
    fn p_independence_on_four_states() {
        let c = chain(4, &[0.1, 0.2, 0.3, 0.4, 0.25, 0.25, 0.25, 0.25, 0.6, 0.1, 0.1, 0.2, 0.05, 0.05, 0.1, 0.8]);
        let v = ValuationMatrix::from_weights(&c, &[0.97, 1.01, 0.99, 0.95]).unwrap();
        let a1 = lphi_p_exact(&v, 1.0, 400).unwrap();
        let a2 = lphi_p_exact(&v, 2.0, 400).unwrap();
        assert!((a1.tail() - a2.tail()).abs() < 1e-8);
        assert_abs_diff_eq!(a1.tail(), lphi_from_matrix(&v).unwrap().lphi, epsilon = 1e-10);
    }

    #[test]
    fn integrated_exponent_examples() {
        let c = chain(2, &[0.5, 0.5, 0.5, 0.5]);
        let e = std::f64::consts::E;
        assert_abs_diff_eq!(integrated_exponent_from_weights(&[e, 1.0 / e], c.stationary()).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(integrated_exponent_from_weights(&[0.9, 0.9], c.stationary()).unwrap(), 0.9f64.ln(), epsilon = 1e-15);
        assert!(integrated_exponent_from_weights(&[0.0, 1.0], c.stationary()).is_err());
    }

    #[test]
    fn bond_identity_small_cases() {
        let c2 = chain(2, &[0.3, 0.7, 0.6, 0.4]);
        let v2 = ValuationMatrix::from_weights(&c2, &[0.9, 1.05]).unwrap();
        assert!(verify_bond_identity(&v2, 1).unwrap() < 1e-15);
        assert!(verify_bond_identity(&v2, 3).unwrap() < 1e-13);
        let c3 = rouwenhorst(&Ar1Spec::new(0.6, 0.1, 0.0).unwrap(), 3).unwrap();
        let v3 = ValuationMatrix::from_weights(&c3, &[0.95, 1.0, 1.02]).unwrap();
        assert!(verify_bond_identity(&v3, 5).unwrap() < 1e-12);
        let c10 = rouwenhorst(&Ar1Spec::new(0.6, 0.1, 0.0).unwrap(), 10).unwrap();
        let v10 = ValuationMatrix::from_weights(&c10, &[1.0; 10]).unwrap();
        assert!(verify_bond_identity(&v10, 7).is_err());
    }

    #[test]
    fn method_and_verdict_strings() {
        assert_eq!("mc".parse::<Method>().unwrap(), Method::MonteCarlo);
        assert!("nope".parse::<Method>().is_err());
        assert_eq!(Verdict::from_exponent(-0.003), Verdict::Stable);
        assert_eq!(Verdict::from_exponent(0.0), Verdict::Indeterminate);
        assert_eq!(Verdict::from_exponent(0.01), Verdict::Unstable);
    }
}
