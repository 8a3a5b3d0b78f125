//! Monte Carlo estimation of stability exponents from simulated SDF paths.
//!
//! The estimator is `(1/n) ln((1/m) sum_j prod_i Phi_i^(j))`, computed from
//! per-path log products with a log-sum-exp. Each path draws from its own
//! counter-based stream keyed by `(seed, replication, path)`, and paths are
//! reduced in index order, so results are bitwise identical for any worker count.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::markov::ChainSampler;
use crate::models::{CrraCvParams, FiniteCrraParams, HabitParams, ModelSpec, PhiWeight, RiskNeutralParams};
use crate::numeric::{log_mean_exp, mean_sd};
use crate::recursive::{EzPathModel, WcSolution};
use crate::rng::{self, domain};
use crate::spectral::{Method, StabilityReport};

/// Anything that can simulate `ln prod_{t=1..n} Phi_t` from a starting state.
pub trait PathModel: Sync {
    type State: Copy + Send + Sync;

    /// Draw from (an approximation of) the stationary distribution.
    fn draw_initial<R: Rng>(&self, rng: &mut R) -> Self::State;

    fn log_product<R: Rng>(&self, start: Self::State, n: usize, rng: &mut R) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    /// Path length in periods.
    pub n: usize,
    /// Paths per estimate.
    pub m: usize,
    /// Order of the exponent; 1 gives the plain estimator.
    pub p: f64,
    /// Inner paths per outer initial draw; used only when `p != 1` (defaults to `m`).
    pub inner_m: Option<usize>,
    pub seed: u64,
    /// Independent estimates, for the across-replication mean and standard deviation.
    pub replications: usize,
    /// Worker threads; 0 uses the global pool. Never affects results.
    pub workers: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { n: 1000, m: 10_000, p: 1.0, inner_m: None, seed: 0, replications: 1, workers: 0 }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return param("Monte Carlo needs n >= 1 and m >= 1");
        }
        if !(self.p.is_finite() && self.p >= 1.0) {
            return param(format!("order p must be >= 1, got {}", self.p));
        }
        if self.replications == 0 {
            return param("replications must be >= 1");
        }
        if let Some(0) = self.inner_m {
            return param("inner_m must be >= 1");
        }
        Ok(())
    }

    fn inner(&self) -> usize {
        self.inner_m.unwrap_or(self.m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    /// Mean over replications.
    pub value: f64,
    /// Across-replication standard deviation; `None` with a single replication.
    pub std_dev: Option<f64>,
    pub n: usize,
    pub m: usize,
    pub p: f64,
    pub seed: u64,
    /// One estimate per replication.
    pub replicates: Vec<f64>,
}

impl McEstimate {
    /// Standard error of `value`.
    pub fn std_error(&self) -> Option<f64> {
        self.std_dev.map(|s| s / (self.replicates.len() as f64).sqrt())
    }

    pub fn to_report(&self) -> StabilityReport {
        StabilityReport::new(Method::MonteCarlo, self.value, self.p, self.std_error())
    }
}

pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn finish(cfg: &McConfig, replicates: Vec<f64>) -> Result<McEstimate> {
    if let Some(bad) = replicates.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "path products left the representable range even in log space (estimate {bad})"
        )));
    }
    let (value, std_dev) = mean_sd(&replicates);
    Ok(McEstimate { value, std_dev, n: cfg.n, m: cfg.m, p: cfg.p, seed: cfg.seed, replicates })
}

fn one_replication<M: PathModel>(model: &M, cfg: &McConfig, rep: usize) -> f64 {
    let logs: Vec<f64> = (0..cfg.m)
        .into_par_iter()
        .map(|j| {
            let mut rng = rng::stream(cfg.seed, domain::MC, rep as u64, j as u64);
            let x0 = model.draw_initial(&mut rng);
            model.log_product(x0, cfg.n, &mut rng)
        })
        .collect();
    log_mean_exp(&logs) / cfg.n as f64
}

fn one_nested_replication<M: PathModel>(model: &M, cfg: &McConfig, rep: usize) -> f64 {
    let inner = cfg.inner();
    let outer: Vec<f64> = (0..cfg.m)
        .into_par_iter()
        .map(|j| {
            let block = ((rep as u64) << 32) | j as u64;
            let mut rng = rng::stream(cfg.seed, domain::MC_NESTED, block, u64::MAX);
            let x0 = model.draw_initial(&mut rng);
            let logs: Vec<f64> = (0..inner)
                .map(|k| {
                    let mut r = rng::stream(cfg.seed, domain::MC_NESTED, block, k as u64);
                    model.log_product(x0, cfg.n, &mut r)
                })
                .collect();
            cfg.p * log_mean_exp(&logs)
        })
        .collect();
    log_mean_exp(&outer) / (cfg.n as f64 * cfg.p)
}

/// Plain estimator (p = 1).
pub fn estimate_lphi<M: PathModel>(model: &M, cfg: &McConfig) -> Result<McEstimate> {
    cfg.validate()?;
    if cfg.p != 1.0 {
        return param("estimate_lphi is the p = 1 estimator; use estimate_lphi_p for p > 1");
    }
    let reps = with_workers(cfg.workers, || {
        (0..cfg.replications)
            .into_par_iter()
            .map(|r| one_replication(model, cfg, r))
            .collect::<Vec<f64>>()
    })?;
    finish(cfg, reps)
}

/// Nested estimator `(1/(n p)) ln((1/m) sum_j E_j^p)` where `E_j` averages `inner_m`
/// products that share the j-th initial state. Biased for finite `inner_m`.
pub fn estimate_lphi_p<M: PathModel>(model: &M, cfg: &McConfig) -> Result<McEstimate> {
    cfg.validate()?;
    let reps = with_workers(cfg.workers, || {
        (0..cfg.replications)
            .into_par_iter()
            .map(|r| one_nested_replication(model, cfg, r))
            .collect::<Vec<f64>>()
    })?;
    finish(cfg, reps)
}

fn estimate_dispatch<M: PathModel>(model: &M, cfg: &McConfig) -> Result<McEstimate> {
    if cfg.p == 1.0 {
        estimate_lphi(model, cfg)
    } else {
        estimate_lphi_p(model, cfg)
    }
}

/// Monte Carlo estimate for any model family. EZ models need a solved
/// wealth-consumption ratio.
pub fn estimate_model(model: &ModelSpec, cfg: &McConfig, wc: Option<&WcSolution>) -> Result<McEstimate> {
    model.validate()?;
    match model {
        ModelSpec::RiskNeutral(p) => estimate_dispatch(p, cfg),
        ModelSpec::CrraCv(p) => estimate_dispatch(p, cfg),
        ModelSpec::FiniteCrra(p) => estimate_dispatch(&FinitePath::new(p), cfg),
        ModelSpec::Habit(p) => estimate_dispatch(p, cfg),
        ModelSpec::EzBy(_) | ModelSpec::EzSsy(_) => {
            let wc = wc.ok_or_else(|| {
                Error::Precondition("EZ models need a solved wealth-consumption ratio".into())
            })?;
            let path = EzPathModel::new(model, wc)?;
            estimate_dispatch(&path, cfg)
        }
    }
}

impl PathModel for RiskNeutralParams {
    type State = ();

    fn draw_initial<R: Rng>(&self, _rng: &mut R) {}

    fn log_product<R: Rng>(&self, _start: (), n: usize, _rng: &mut R) -> f64 {
        n as f64 * self.beta.ln()
    }
}

impl PathModel for CrraCvParams {
    type State = f64;

    fn draw_initial<R: Rng>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.state_process().stationary_std() * z
    }

    fn log_product<R: Rng>(&self, start: f64, n: usize, rng: &mut R) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let mut x = start;
        let mut state_sum = 0.0;
        for i in 0..n {
            state_sum += x;
            if i + 1 < n {
                let e: f64 = rng.sample(StandardNormal);
                x = self.rho * x + self.sigma * e;
            }
        }
        // The dividend and consumption shocks are iid normal and enter only through
        // their sum over the path, which is N(0, n * shock_variance).
        let e: f64 = rng.sample(StandardNormal);
        n as f64 * (self.beta.ln() + self.mu_d - self.gamma * self.mu_c)
            + (self.varphi - self.gamma) * state_sum
            + (n as f64 * self.shock_variance()).sqrt() * e
    }
}

impl PathModel for HabitParams {
    type State = f64;

    fn draw_initial<R: Rng>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        let ar = self.state_process();
        ar.stationary_mean() + ar.stationary_std() * z
    }

    fn log_product<R: Rng>(&self, start: f64, n: usize, rng: &mut R) -> f64 {
        let (b, k0, c) = (self.b(), self.k0(), self.state_loading());
        let mut x = start;
        let mut acc = 0.0;
        for i in 0..n {
            acc += c * x;
            if i + 1 < n {
                let e: f64 = rng.sample(StandardNormal);
                x = self.rho * x + b + self.sigma * e;
            }
        }
        n as f64 * k0.ln() + acc
    }
}

/// Path simulator for the CRRA model on a finite chain.
pub struct FinitePath<'a> {
    params: &'a FiniteCrraParams,
    sampler: ChainSampler,
    log_weights: Vec<f64>,
}

impl<'a> FinitePath<'a> {
    pub fn new(params: &'a FiniteCrraParams) -> Self {
        let log_weights = params
            .chain
            .states()
            .iter()
            .map(|&x| params.phi_weight(x).ln())
            .collect();
        FinitePath { params, sampler: ChainSampler::new(&params.chain), log_weights }
    }
}

impl PathModel for FinitePath<'_> {
    type State = usize;

    fn draw_initial<R: Rng>(&self, rng: &mut R) -> usize {
        self.sampler.draw_initial(rng)
    }

    fn log_product<R: Rng>(&self, start: usize, n: usize, rng: &mut R) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let s2 = self.params.shock_variance();
        let mut x = start;
        let mut acc = 0.0;
        for i in 0..n {
            acc += self.log_weights[x] - 0.5 * s2;
            if i + 1 < n {
                x = self.sampler.step(x, rng);
            }
        }
        let e: f64 = rng.sample(StandardNormal);
        acc + (n as f64 * s2).sqrt() * e
    }
}

/// One cell of the replication table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableCell {
    pub n: usize,
    pub m: usize,
    pub mean: f64,
    pub sd: Option<f64>,
}

pub const TABLE1_N: [usize; 3] = [250, 500, 750];
pub const TABLE1_M: [usize; 5] = [1000, 2000, 3000, 4000, 5000];

/// Mean and standard deviation of `replications` independent estimates for each
/// `(n, m)` pair, in row-major order over `n_list` then `m_list`.
pub fn run_table1(
    params: &CrraCvParams,
    n_list: &[usize],
    m_list: &[usize],
    replications: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<TableCell>> {
    if n_list.is_empty() || m_list.is_empty() {
        return param("table needs non-empty n and m lists");
    }
    params.validate()?;
    let mut cells = Vec::with_capacity(n_list.len() * m_list.len());
    for (i, &n) in n_list.iter().enumerate() {
        for (j, &m) in m_list.iter().enumerate() {
            let cfg = McConfig {
                n,
                m,
                p: 1.0,
                inner_m: None,
                seed: rng::derive_seed(seed, (i * m_list.len() + j) as u64),
                replications,
                workers,
            };
            let est = estimate_lphi(params, &cfg)?;
            cells.push(TableCell { n, m, mean: est.value, sd: est.std_dev });
        }
    }
    Ok(cells)
}
