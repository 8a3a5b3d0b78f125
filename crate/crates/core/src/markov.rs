//! Finite-state Markov chains and the Rouwenhorst discretization of a
//! Gaussian AR(1).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::rng;

const ROW_SUM_TOL: f64 = 1e-12;

/// `X' = rho * X + b + sigma * eta`, `eta ~ N(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar1Spec {
    pub rho: f64,
    pub sigma: f64,
    #[serde(default)]
    pub b: f64,
}

impl Ar1Spec {
    pub fn new(rho: f64, sigma: f64, b: f64) -> Result<Self> {
        let spec = Ar1Spec { rho, sigma, b };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho.is_finite() && self.rho.abs() < 1.0) {
            return param(format!("AR(1) persistence must satisfy |rho| < 1, got {}", self.rho));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return param(format!("AR(1) innovation std must be > 0, got {}", self.sigma));
        }
        if !self.b.is_finite() {
            return param("AR(1) intercept must be finite");
        }
        Ok(())
    }

    pub fn stationary_mean(&self) -> f64 {
        self.b / (1.0 - self.rho)
    }

    pub fn stationary_variance(&self) -> f64 {
        self.sigma * self.sigma / (1.0 - self.rho * self.rho)
    }

    pub fn stationary_std(&self) -> f64 {
        self.stationary_variance().sqrt()
    }
}

/// A finite Markov chain on real-valued states.
///
/// Construction validates the transition matrix and computes the stationary
/// distribution once; the value is immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    states: Vec<f64>,
    p: DMatrix<f64>,
    pi: Vec<f64>,
}

impl MarkovChain {
    /// Builds a chain, validating `p` and requiring a unique stationary distribution.
    pub fn new(states: Vec<f64>, p: DMatrix<f64>) -> Result<Self> {
        let n = states.len();
        if n == 0 {
            return param("a Markov chain needs at least one state");
        }
        if p.nrows() != n || p.ncols() != n {
            return param(format!(
                "transition matrix is {}x{} but there are {} states",
                p.nrows(),
                p.ncols(),
                n
            ));
        }
        if states.iter().any(|x| !x.is_finite()) {
            return param("states must be finite");
        }
        if states.windows(2).any(|w| w[0] >= w[1]) {
            return param("states must be strictly increasing");
        }
        let pi = stationary_distribution(&p)?;
        Ok(MarkovChain { states, p, pi })
    }

    /// Builds a chain with a caller-supplied stationary distribution, for chains
    /// (such as ones with several absorbing states) whose invariant law is not unique.
    pub fn with_stationary(states: Vec<f64>, p: DMatrix<f64>, pi: Vec<f64>) -> Result<Self> {
        let n = states.len();
        if n == 0 || p.nrows() != n || p.ncols() != n || pi.len() != n {
            return param("states, transition matrix and stationary vector disagree in size");
        }
        if states.windows(2).any(|w| w[0] >= w[1]) {
            return param("states must be strictly increasing");
        }
        check_stochastic(&p)?;
        if pi.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return param("stationary vector must be nonnegative");
        }
        if (pi.iter().sum::<f64>() - 1.0).abs() > ROW_SUM_TOL {
            return param("stationary vector must sum to 1");
        }
        for j in 0..n {
            let pj: f64 = (0..n).map(|i| pi[i] * p[(i, j)]).sum();
            if (pj - pi[j]).abs() > 1e-10 {
                return param(format!("supplied distribution is not invariant at state {j}"));
            }
        }
        Ok(MarkovChain { states, p, pi })
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn is_irreducible(&self) -> bool {
        is_irreducible(&self.p)
    }

    /// Stationary mean, variance and lag-1 autocorrelation of the state value.
    pub fn moments(&self) -> ChainMoments {
        let n = self.len();
        let mean: f64 = (0..n).map(|i| self.pi[i] * self.states[i]).sum();
        let var: f64 = (0..n)
            .map(|i| self.pi[i] * (self.states[i] - mean).powi(2))
            .sum();
        let cov: f64 = (0..n)
            .map(|i| {
                let cond: f64 = (0..n)
                    .map(|j| self.p[(i, j)] * (self.states[j] - mean))
                    .sum();
                self.pi[i] * (self.states[i] - mean) * cond
            })
            .sum();
        ChainMoments {
            mean,
            variance: var,
            autocorrelation: if var > 0.0 { cov / var } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainMoments {
    pub mean: f64,
    pub variance: f64,
    pub autocorrelation: f64,
}

/// Rouwenhorst discretization of a Gaussian AR(1) on `n` evenly spaced states.
///
/// The grid spans the stationary mean plus or minus `sqrt(n - 1)` stationary
/// standard deviations and the chain reproduces the AR(1)'s mean, variance and
/// first-order autocorrelation exactly.
pub fn rouwenhorst(spec: &Ar1Spec, n: usize) -> Result<MarkovChain> {
    spec.validate()?;
    if n < 2 {
        return param(format!("Rouwenhorst needs n >= 2 states, got {n}"));
    }
    let p = (1.0 + spec.rho) / 2.0;
    let q = p;

    let mut mat = DMatrix::from_row_slice(2, 2, &[p, 1.0 - p, 1.0 - q, q]);
    for size in 3..=n {
        let prev = mat;
        let mut next = DMatrix::<f64>::zeros(size, size);
        for i in 0..size - 1 {
            for j in 0..size - 1 {
                let v = prev[(i, j)];
                next[(i, j)] += p * v;
                next[(i, j + 1)] += (1.0 - p) * v;
                next[(i + 1, j)] += (1.0 - q) * v;
                next[(i + 1, j + 1)] += q * v;
            }
        }
        for i in 1..size - 1 {
            for j in 0..size {
                next[(i, j)] /= 2.0;
            }
        }
        mat = next;
    }
    for mut row in mat.row_iter_mut() {
        let s: f64 = row.iter().sum();
        row /= s;
    }

    let half_span = ((n - 1) as f64).sqrt() * spec.stationary_std();
    let mean = spec.stationary_mean();
    let step = 2.0 * half_span / (n - 1) as f64;
    let states = (0..n)
        .map(|i| mean - half_span + step * i as f64)
        .collect();
    MarkovChain::new(states, mat)
}

fn check_stochastic(p: &DMatrix<f64>) -> Result<()> {
    if p.nrows() != p.ncols() || p.nrows() == 0 {
        return param(format!(
            "transition matrix must be square and non-empty, got {}x{}",
            p.nrows(),
            p.ncols()
        ));
    }
    for (i, row) in p.row_iter().enumerate() {
        if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return param(format!("row {i} has negative or non-finite entries"));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > ROW_SUM_TOL {
            return param(format!("row {i} sums to {s}, not 1"));
        }
    }
    Ok(())
}

/// `reach[i][j]` is true when `j` can be reached from `i` along positive entries
/// (every state reaches itself).
fn reachability(p: &DMatrix<f64>) -> Vec<Vec<bool>> {
    let n = p.nrows();
    let mut reach = vec![vec![false; n]; n];
    for (start, seen) in reach.iter_mut().enumerate() {
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if p[(i, j)] > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    reach
}

/// True iff the directed graph with an edge wherever `P(x, y) > 0` is strongly connected.
pub fn is_irreducible(p: &DMatrix<f64>) -> bool {
    if p.nrows() != p.ncols() || p.nrows() == 0 {
        return false;
    }
    reachability(p).iter().all(|row| row.iter().all(|&r| r))
}

/// Number of closed communicating classes.
fn closed_classes(p: &DMatrix<f64>) -> usize {
    let reach = reachability(p);
    let n = p.nrows();
    let mut class_of = vec![usize::MAX; n];
    let mut closed = 0;
    for i in 0..n {
        if class_of[i] != usize::MAX {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
        for &j in &members {
            class_of[j] = i;
        }
        let leaks = members
            .iter()
            .any(|&a| (0..n).any(|b| reach[a][b] && !reach[b][a]));
        if !leaks {
            closed += 1;
        }
    }
    closed
}

/// Stationary distribution of a row-stochastic matrix.
///
/// Solves `(P' - I) pi = 0` with the normalization replacing one equation, then
/// applies one power-iteration step `pi <- pi P`. Chains with more than one
/// closed class have no unique answer and yield [`Error::Degeneracy`].
pub fn stationary_distribution(p: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_stochastic(p)?;
    let n = p.nrows();
    let classes = closed_classes(p);
    if classes != 1 {
        return Err(Error::Degeneracy(format!(
            "transition matrix has {classes} closed classes; stationary distribution is not unique"
        )));
    }
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let mut a = p.transpose() - DMatrix::<f64>::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular system for stationary distribution".into()))?;

    let mut pi: Vec<f64> = sol.iter().map(|v| v.max(0.0)).collect();
    let refined: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|i| pi[i] * p[(i, j)]).sum())
        .collect();
    pi = refined;
    let total: f64 = pi.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Numerical("stationary distribution failed to normalize".into()));
    }
    pi.iter_mut().for_each(|v| *v /= total);
    Ok(pi)
}

/// How the first state of a simulated path is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    Stationary,
    Fixed(usize),
}

/// Simulates `length` states (including the initial one) as indices into `chain.states()`.
pub fn simulate_chain(
    chain: &MarkovChain,
    length: usize,
    seed: u64,
    init: InitialState,
) -> Result<Vec<usize>> {
    if let InitialState::Fixed(i) = init {
        if i >= chain.len() {
            return param(format!("initial index {i} out of range for {} states", chain.len()));
        }
    }
    if length == 0 {
        return Ok(Vec::new());
    }
    let sampler = ChainSampler::new(chain);
    let mut rng = rng::stream(seed, rng::domain::CHAIN, 0, 0);
    let mut x = match init {
        InitialState::Stationary => sampler.draw_initial(&mut rng),
        InitialState::Fixed(i) => i,
    };
    let mut path = Vec::with_capacity(length);
    path.push(x);
    for _ in 1..length {
        x = sampler.step(x, &mut rng);
        path.push(x);
    }
    Ok(path)
}

/// Inverse-CDF sampler over a chain's rows and stationary distribution.
#[derive(Debug, Clone)]
pub(crate) struct ChainSampler {
    cum_rows: Vec<Vec<f64>>,
    cum_pi: Vec<f64>,
}

fn cumulative(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

fn pick(cum: &[f64], u: f64) -> usize {
    let target = u * cum[cum.len() - 1];
    match cum.iter().position(|&c| c > target) {
        Some(i) => i,
        None => cum.len() - 1,
    }
}

impl ChainSampler {
    pub(crate) fn new(chain: &MarkovChain) -> Self {
        let p = chain.transition();
        let cum_rows = (0..chain.len())
            .map(|i| cumulative(p.row(i).iter().copied()))
            .collect();
        ChainSampler {
            cum_rows,
            cum_pi: cumulative(chain.stationary().iter().copied()),
        }
    }

    pub(crate) fn draw_initial<R: Rng>(&self, rng: &mut R) -> usize {
        pick(&self.cum_pi, rng.random::<f64>())
    }

    pub(crate) fn step<R: Rng>(&self, from: usize, rng: &mut R) -> usize {
        pick(&self.cum_rows[from], rng.random::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mat(n: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, v)
    }

    #[test]
    fn rouwenhorst_zero_persistence_two_states() {
        let c = rouwenhorst(&Ar1Spec::new(0.0, 1.0, 0.0).unwrap(), 2).unwrap();
        assert_eq!(c.states(), &[-1.0, 1.0]);
        for v in c.transition().iter() {
            assert_abs_diff_eq!(*v, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn rouwenhorst_half_persistence_two_states() {
        let c = rouwenhorst(&Ar1Spec::new(0.5, 1.0, 0.0).unwrap(), 2).unwrap();
        let expect = [0.75, 0.25, 0.25, 0.75];
        for (v, e) in c.transition().transpose().iter().zip(expect) {
            assert_abs_diff_eq!(*v, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn rouwenhorst_matches_ar1_moments() {
        for &(rho, sigma, b, n) in &[
            (0.979, 0.00034, 0.0, 10),
            (-0.14, 0.2, 0.03, 7),
            (0.5, 1.0, 1.0, 25),
            (0.0, 2.0, -1.0, 3),
        ] {
            let spec = Ar1Spec::new(rho, sigma, b).unwrap();
            let c = rouwenhorst(&spec, n).unwrap();
            let m = c.moments();
            let scale = spec.stationary_variance();
            assert_abs_diff_eq!(m.mean, spec.stationary_mean(), epsilon = 1e-10);
            assert_abs_diff_eq!(m.variance / scale, 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(m.autocorrelation, rho, epsilon = 1e-10);
            assert!(c.is_irreducible());
            let half = ((n - 1) as f64).sqrt() * spec.stationary_std();
            assert_abs_diff_eq!(c.states()[0], spec.stationary_mean() - half, epsilon = 1e-12);
            assert_abs_diff_eq!(c.states()[n - 1], spec.stationary_mean() + half, epsilon = 1e-12);
        }
    }

    #[test]
    fn rouwenhorst_rejects_bad_specs() {
        assert!(matches!(Ar1Spec::new(1.0, 1.0, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(Ar1Spec::new(0.5, 0.0, 0.0), Err(Error::Parameter(_))));
        let bad = Ar1Spec { rho: 0.5, sigma: -1.0, b: 0.0 };
        assert!(rouwenhorst(&bad, 5).is_err());
        let ok = Ar1Spec::new(0.5, 1.0, 0.0).unwrap();
        assert!(rouwenhorst(&ok, 1).is_err());
    }

    #[test]
    fn stationary_examples() {
        let pi = stationary_distribution(&mat(2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(pi[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(pi[1], 0.5, epsilon = 1e-14);

        let pi = stationary_distribution(&mat(2, &[0.9, 0.1, 0.5, 0.5])).unwrap();
        assert_abs_diff_eq!(pi[0], 5.0 / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(pi[1], 1.0 / 6.0, epsilon = 1e-14);

        assert!(matches!(
            stationary_distribution(&mat(2, &[1.0, 0.0, 0.0, 1.0])),
            Err(Error::Degeneracy(_))
        ));
        assert!(matches!(
            stationary_distribution(&mat(2, &[0.9, 0.2, 0.5, 0.5])),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn stationary_with_transient_state() {
        // state 1 is transient, state 0 absorbing
        let pi = stationary_distribution(&mat(2, &[1.0, 0.0, 0.5, 0.5])).unwrap();
        assert_abs_diff_eq!(pi[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(pi[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn irreducibility() {
        assert!(is_irreducible(&mat(2, &[0.5, 0.5, 0.5, 0.5])));
        assert!(!is_irreducible(&mat(2, &[1.0, 0.0, 0.5, 0.5])));
        assert!(is_irreducible(&mat(2, &[0.0, 1.0, 1.0, 0.0])));
    }

    #[test]
    fn chain_validation() {
        let p = mat(2, &[0.5, 0.5, 0.5, 0.5]);
        assert!(MarkovChain::new(vec![1.0, 0.0], p.clone()).is_err());
        assert!(MarkovChain::new(vec![0.0], p.clone()).is_err());
        assert!(MarkovChain::new(vec![0.0, 1.0], p).is_ok());
    }

    #[test]
    fn simulate_examples() {
        let c = rouwenhorst(&Ar1Spec::new(0.9, 1.0, 0.0).unwrap(), 5).unwrap();
        assert!(simulate_chain(&c, 0, 1, InitialState::Stationary).unwrap().is_empty());
        let a = simulate_chain(&c, 200, 42, InitialState::Stationary).unwrap();
        let b = simulate_chain(&c, 200, 42, InitialState::Stationary).unwrap();
        assert_eq!(a, b);
        assert!(simulate_chain(&c, 10, 1, InitialState::Fixed(5)).is_err());

        let absorbing =
            MarkovChain::with_stationary(vec![0.0, 1.0], mat(2, &[1.0, 0.0, 0.0, 1.0]), vec![0.5, 0.5])
                .unwrap();
        let path = simulate_chain(&absorbing, 5, 9, InitialState::Fixed(0)).unwrap();
        assert_eq!(path, vec![0, 0, 0, 0, 0]);
    }

    #[test]
    fn occupation_frequencies_approach_pi() {
        let c = MarkovChain::new(vec![0.0, 1.0, 2.0], mat(3, &[0.5, 0.3, 0.2, 0.1, 0.8, 0.1, 0.3, 0.3, 0.4]))
            .unwrap();
        let path = simulate_chain(&c, 1_000_000, 2024, InitialState::Stationary).unwrap();
        let mut counts = [0usize; 3];
        for &i in &path {
            counts[i] += 1;
        }
        for (k, &cnt) in counts.iter().enumerate() {
            let freq = cnt as f64 / path.len() as f64;
            assert!((freq - c.stationary()[k]).abs() < 0.01, "state {k}: {freq} vs {}", c.stationary()[k]);
        }
    }
}
