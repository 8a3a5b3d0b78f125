//! Epstein-Zin wealth-consumption ratio and SDF path simulation for the
//! long-run risk models.
//!
//! The ratio solves `w = 1 + (K w^theta)^(1/theta)` with
//! `K g(x) = beta^theta exp{(1-gamma)(mu_c + z) + (1-gamma)^2 sigma_c(x)^2 / 2} E[g(X') | x]`.
//! The unknown is stored as `l = ln w` on a tensor grid; the conditional
//! expectation uses Gauss-Hermite nodes over the state innovations with
//! multilinear interpolation between grid points.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{param, Error, Result};
use crate::grid::{Axis, Grid};
use crate::models::{EzByParams, EzSsyParams, ModelSpec};
use crate::montecarlo::PathModel;
use crate::numeric::{log_expm1, log_sum_exp, sigmoid, softplus};
use crate::quadrature::{GaussHermite, TensorRule};
use crate::rng::{self, domain};

/// Dense Newton steps are skipped above this many grid points.
const NEWTON_MAX_POINTS: usize = 3000;

/// `w` above this is treated as divergence.
const LOG_W_MAX: f64 = 20.723; // ln 1e9

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WcKind {
    /// State `(z, sigma^2)`.
    By,
    /// State `(z, h_z, h_c)`; `h_d` does not enter the recursion.
    Ssy,
}

impl WcKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            WcKind::By => "ez_by",
            WcKind::Ssy => "ez_ssy",
        }
    }

    pub fn axis_names(&self) -> &'static [&'static str] {
        match self {
            WcKind::By => &["z", "sigma2"],
            WcKind::Ssy => &["z", "h_z", "h_c"],
        }
    }
}

/// Which function of `w` is interpolated between grid points inside the expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpSpace {
    /// Interpolate `ln w` (smooth; default).
    LogW,
    /// Interpolate `w^theta`, which keeps `K` linear on the grid.
    PowerW,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WcGridSpec {
    /// Points per state dimension (2 for BY, 3 for SSY).
    pub counts: Vec<usize>,
    /// Half-width of each axis in unconditional standard deviations.
    pub width_sd: f64,
    /// Gauss-Hermite nodes per innovation.
    pub gh_nodes: usize,
}

impl WcGridSpec {
    pub fn default_for(kind: WcKind) -> Self {
        match kind {
            WcKind::By => WcGridSpec { counts: vec![25, 15], width_sd: 6.0, gh_nodes: 7 },
            // The SSY recursion has no solution on the untruncated state space (lognormal
            // volatility makes E exp(c sigma^2) infinite), so w depends on this width.
            WcKind::Ssy => WcGridSpec { counts: vec![9, 5, 17], width_sd: 3.0, gh_nodes: 7 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WcOptions {
    /// Sup-norm tolerance on `w - (1 + (K w^theta)^(1/theta))`.
    pub tol: f64,
    pub max_iter: usize,
    /// Start from `w = 1 + epsilon`.
    pub epsilon: f64,
    /// Switch from plain successive approximation to Newton steps after `warmup` iterations.
    pub accelerate: bool,
    pub warmup: usize,
    pub interp: InterpSpace,
}

impl Default for WcOptions {
    fn default() -> Self {
        WcOptions {
            tol: 1e-8,
            max_iter: 10_000,
            epsilon: 1e-2,
            accelerate: true,
            warmup: 30,
            interp: InterpSpace::LogW,
        }
    }
}

/// Solved wealth-consumption ratio on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WcSolution {
    pub kind: WcKind,
    pub grid: Grid,
    /// `ln w` at each grid point (row-major).
    pub log_w: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// Values of the parameters the solution depends on, to detect stale reuse.
    pub fingerprint: Vec<f64>,
}

impl WcSolution {
    pub fn w(&self) -> Vec<f64> {
        self.log_w.iter().map(|l| l.exp()).collect()
    }

    /// Interpolated `ln w` at an arbitrary state (only the first `grid.dims()` coordinates are read).
    #[inline]
    pub fn log_w_at(&self, x: &[f64]) -> f64 {
        self.grid.interpolate(&self.log_w, x)
    }

    pub fn matches(&self, model: &ModelSpec) -> bool {
        let kind = match model {
            ModelSpec::EzBy(_) => WcKind::By,
            ModelSpec::EzSsy(_) => WcKind::Ssy,
            _ => return false,
        };
        kind == self.kind && model.wc_fingerprint().as_deref() == Some(&self.fingerprint[..])
    }
}

#[derive(Debug, Clone, Copy)]
enum Ez {
    By(EzByParams),
    Ssy(EzSsyParams),
}

impl Ez {
    fn from_model(model: &ModelSpec) -> Result<Self> {
        match model {
            ModelSpec::EzBy(p) => {
                p.validate()?;
                Ok(Ez::By(*p))
            }
            ModelSpec::EzSsy(p) => {
                p.validate()?;
                Ok(Ez::Ssy(*p))
            }
            other => param(format!("model family '{}' has no wealth-consumption recursion", other.family())),
        }
    }

    fn kind(&self) -> WcKind {
        match self {
            Ez::By(_) => WcKind::By,
            Ez::Ssy(_) => WcKind::Ssy,
        }
    }

    fn theta(&self) -> f64 {
        match self {
            Ez::By(p) => p.theta(),
            Ez::Ssy(p) => p.theta(),
        }
    }

    fn fingerprint(&self) -> Vec<f64> {
        match self {
            Ez::By(p) => p.wc_fingerprint(),
            Ez::Ssy(p) => p.wc_fingerprint(),
        }
    }

    fn innovations(&self) -> usize {
        match self {
            Ez::By(_) => 2,
            Ez::Ssy(_) => 3,
        }
    }
}

fn by_z_sd(p: &EzByParams) -> f64 {
    p.varphi_z * p.mean_variance().max(0.0).sqrt() / (1.0 - p.rho * p.rho).sqrt()
}

fn by_var_sd(p: &EzByParams) -> f64 {
    p.varphi_sigma / (1.0 - p.v * p.v).sqrt()
}

fn ssy_h_sd(rho: f64, sigma: f64) -> f64 {
    sigma / (1.0 - rho * rho).sqrt()
}

/// Unconditional sd of z: `Var z = E sigma_z^2 = (varphi_z bar_sigma)^2 E exp(2 h_z)`.
fn ssy_z_sd(p: &EzSsyParams) -> f64 {
    let var_h = ssy_h_sd(p.rho_hz, p.sigma_hz).powi(2);
    p.varphi_z * p.bar_sigma * var_h.exp()
}

fn build_grid(ez: &Ez, spec: &WcGridSpec) -> Result<Grid> {
    let dims = ez.innovations();
    if spec.counts.len() != dims {
        return param(format!("{} grid needs {} point counts, got {}", ez.kind().as_str(), dims, spec.counts.len()));
    }
    if !(spec.width_sd.is_finite() && spec.width_sd > 0.0) || spec.gh_nodes == 0 {
        return param("grid width must be positive and gh_nodes >= 1");
    }
    let w = spec.width_sd;
    let axes = match ez {
        Ez::By(p) => {
            let zs = by_z_sd(p);
            let mean = p.mean_variance();
            let vs = by_var_sd(p);
            vec![
                Axis::new(-w * zs, w * zs, spec.counts[0])?,
                Axis::new((mean - w * vs).max(0.0), mean + w * vs, spec.counts[1])?,
            ]
        }
        Ez::Ssy(p) => {
            let zs = ssy_z_sd(p);
            let hz = ssy_h_sd(p.rho_hz, p.sigma_hz);
            let hc = ssy_h_sd(p.rho_hc, p.sigma_hc);
            vec![
                Axis::new(-w * zs, w * zs, spec.counts[0])?,
                Axis::new(-w * hz, w * hz, spec.counts[1])?,
                Axis::new(-w * hc, w * hc, spec.counts[2])?,
            ]
        }
    };
    Grid::new(axes)
}

/// The discretized operator: prefactors, quadrature nodes and interpolation corners.
pub struct WcOperator {
    grid: Grid,
    theta: f64,
    interp: InterpSpace,
    log_prefactor: Vec<f64>,
    node_logw: Vec<f64>,
    nodes_per_point: usize,
    corner_stride: usize,
    corner_idx: Vec<u32>,
    corner_w: Vec<f64>,
}

impl WcOperator {
    pub fn new(model: &ModelSpec, spec: &WcGridSpec, interp: InterpSpace) -> Result<Self> {
        let ez = Ez::from_model(model)?;
        let grid = build_grid(&ez, spec)?;
        let gh = GaussHermite::new(spec.gh_nodes)?;
        let rule = TensorRule::new(&gh, ez.innovations());
        let theta = ez.theta();
        let q = rule.weights.len();
        let stride = 1usize << grid.dims();
        let n = grid.len();

        let mut log_prefactor = Vec::with_capacity(n);
        let mut corner_idx = vec![0u32; n * q * stride];
        let mut corner_w = vec![0f64; n * q * stride];
        let mut next = [0f64; 3];
        for i in 0..n {
            let x = grid.point(i);
            let pre = match &ez {
                Ez::By(p) => {
                    let g1 = 1.0 - p.gamma;
                    theta * p.beta.ln() + g1 * (p.mu_c + x[0]) + 0.5 * g1 * g1 * x[1].max(0.0)
                }
                Ez::Ssy(p) => {
                    let g1 = 1.0 - p.gamma;
                    let sc = p.varphi_c * p.bar_sigma * x[2].exp();
                    theta * p.beta.ln() + g1 * (p.mu_c + x[0]) + 0.5 * g1 * g1 * sc * sc
                }
            };
            log_prefactor.push(pre);
            for (k, eta) in rule.points.iter().enumerate() {
                match &ez {
                    Ez::By(p) => {
                        let sigma = x[1].max(0.0).sqrt();
                        next[0] = p.rho * x[0] + p.varphi_z * sigma * eta[0];
                        next[1] = (p.v * x[1] + p.d + p.varphi_sigma * eta[1]).max(0.0);
                    }
                    Ez::Ssy(p) => {
                        let sz = p.varphi_z * p.bar_sigma * x[1].exp();
                        next[0] = p.rho * x[0] + (1.0 - p.rho * p.rho).sqrt() * sz * eta[0];
                        next[1] = p.rho_hz * x[1] + p.sigma_hz * eta[1];
                        next[2] = p.rho_hc * x[2] + p.sigma_hc * eta[2];
                    }
                }
                let base = (i * q + k) * stride;
                let mut c = 0;
                grid.for_each_corner(&next[..grid.dims()], |idx, w| {
                    corner_idx[base + c] = idx as u32;
                    corner_w[base + c] = w;
                    c += 1;
                });
            }
        }
        Ok(WcOperator {
            grid,
            theta,
            interp,
            log_prefactor,
            node_logw: rule.weights.iter().map(|w| w.ln()).collect(),
            nodes_per_point: q,
            corner_stride: stride,
            corner_idx,
            corner_w,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.log_prefactor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_prefactor.is_empty()
    }

    /// `ln (K g)(x_i)` for `g = w^theta = exp(theta l)`, plus the normalized weight
    /// each grid value receives (for the Jacobian) when `sens` is given.
    fn log_kg_row(&self, i: usize, l: &[f64], terms: &mut Vec<f64>, sens: Option<&mut Vec<(usize, f64)>>) -> f64 {
        let q = self.nodes_per_point;
        let s = self.corner_stride;
        terms.clear();
        match self.interp {
            InterpSpace::LogW => {
                for k in 0..q {
                    let base = (i * q + k) * s;
                    let mut lhat = 0.0;
                    for c in 0..s {
                        lhat += self.corner_w[base + c] * l[self.corner_idx[base + c] as usize];
                    }
                    terms.push(self.node_logw[k] + self.theta * lhat);
                }
            }
            InterpSpace::PowerW => {
                for k in 0..q {
                    let base = (i * q + k) * s;
                    for c in 0..s {
                        let w = self.corner_w[base + c];
                        terms.push(if w > 0.0 {
                            self.node_logw[k] + w.ln() + self.theta * l[self.corner_idx[base + c] as usize]
                        } else {
                            f64::NEG_INFINITY
                        });
                    }
                }
            }
        }
        let lse = log_sum_exp(terms);
        if let Some(sens) = sens {
            sens.clear();
            for k in 0..q {
                let base = (i * q + k) * s;
                match self.interp {
                    InterpSpace::LogW => {
                        let share = (terms[k] - lse).exp();
                        for c in 0..s {
                            let w = self.corner_w[base + c];
                            if w > 0.0 {
                                sens.push((self.corner_idx[base + c] as usize, share * w));
                            }
                        }
                    }
                    InterpSpace::PowerW => {
                        for c in 0..s {
                            let t = terms[k * s + c];
                            if t > f64::NEG_INFINITY {
                                sens.push((self.corner_idx[base + c] as usize, (t - lse).exp()));
                            }
                        }
                    }
                }
            }
        }
        self.log_prefactor[i] + lse
    }

    /// The fixed-point map in log coordinates, `l -> ln(1 + (K e^(theta l))^(1/theta))`,
    /// optionally with its Jacobian.
    pub fn map(&self, l: &[f64], want_jacobian: bool) -> (Vec<f64>, Option<DMatrix<f64>>) {
        let n = self.len();
        let mut out = Vec::with_capacity(n);
        let mut jac = if want_jacobian { Some(DMatrix::<f64>::zeros(n, n)) } else { None };
        let mut terms = Vec::new();
        let mut sens = Vec::new();
        for i in 0..n {
            let lk = self.log_kg_row(i, l, &mut terms, if want_jacobian { Some(&mut sens) } else { None });
            let y = lk / self.theta;
            out.push(softplus(y));
            if let Some(j) = jac.as_mut() {
                // d l'_i / d l_j = (1 - 1/w'_i) * share_j
                let scale = sigmoid(y);
                for &(idx, share) in &sens {
                    j[(i, idx)] += scale * share;
                }
            }
        }
        (out, jac)
    }

    /// The linear operator `K` applied to `g` (interpolating `g` itself).
    pub fn apply_k(&self, g: &[f64]) -> Vec<f64> {
        let q = self.nodes_per_point;
        let s = self.corner_stride;
        (0..self.len())
            .map(|i| {
                let mut acc = 0.0;
                for k in 0..q {
                    let base = (i * q + k) * s;
                    let mut gi = 0.0;
                    for c in 0..s {
                        gi += self.corner_w[base + c] * g[self.corner_idx[base + c] as usize];
                    }
                    acc += self.node_logw[k].exp() * gi;
                }
                self.log_prefactor[i].exp() * acc
            })
            .collect()
    }
}

fn w_residual(l: &[f64], f: &[f64]) -> f64 {
    l.iter()
        .zip(f)
        .map(|(a, b)| (a.exp() - b.exp()).abs())
        .fold(0.0, f64::max)
}

/// Solves the wealth-consumption recursion for the BY or SSY model.
pub fn solve_wealth_consumption(model: &ModelSpec, spec: &WcGridSpec, opts: &WcOptions) -> Result<WcSolution> {
    let ez = Ez::from_model(model)?;
    if !(opts.tol > 0.0) || opts.max_iter == 0 || !(opts.epsilon > 0.0) {
        return param("wealth-consumption solver needs tol > 0, max_iter >= 1 and epsilon > 0");
    }
    let op = WcOperator::new(model, spec, opts.interp)?;
    let n = op.len();
    let mut l = vec![opts.epsilon.ln_1p(); n];
    let mut damping = 1.0;
    let mut last_sign = 0.0f64;

    let unstable = || Error::Instability {
        message: "no finite wealth-consumption ratio at these parameters".into(),
        log_spectral_radius: None,
    };

    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let newton = opts.accelerate && it > opts.warmup && n <= NEWTON_MAX_POINTS;
        let (f, jac) = op.map(&l, newton);
        if f.iter().any(|v| !v.is_finite() || *v > LOG_W_MAX) {
            return Err(unstable());
        }
        residual = w_residual(&l, &f);
        if !residual.is_finite() {
            return Err(unstable());
        }
        if residual < opts.tol {
            return Ok(WcSolution {
                kind: ez.kind(),
                grid: op.grid.clone(),
                log_w: l,
                residual,
                iterations: it - 1,
                fingerprint: ez.fingerprint(),
            });
        }

        if let Some(j) = jac {
            if let Some(next) = newton_step(&op, &l, &f, j, residual) {
                l = next;
                continue;
            }
        }
        // damp once the largest update changes sign (oscillation)
        let dmax = f
            .iter()
            .zip(&l)
            .map(|(a, b)| a - b)
            .fold(0.0f64, |acc, d| if d.abs() > acc.abs() { d } else { acc });
        let sign = dmax.signum();
        if last_sign != 0.0 && sign != last_sign {
            damping = 0.5;
        }
        last_sign = sign;
        for (li, fi) in l.iter_mut().zip(&f) {
            *li += damping * (fi - *li);
        }
    }
    Err(Error::Convergence { iterations: opts.max_iter, residual })
}

/// Newton step on `l - F(l) = 0` with backtracking; `None` if no step reduces the residual.
fn newton_step(op: &WcOperator, l: &[f64], f: &[f64], jac: DMatrix<f64>, residual: f64) -> Option<Vec<f64>> {
    let n = l.len();
    let a = DMatrix::<f64>::identity(n, n) - jac;
    let rhs = DVector::from_iterator(n, f.iter().zip(l).map(|(a, b)| a - b));
    let delta = a.lu().solve(&rhs)?;
    let mut step = 1.0;
    for _ in 0..12 {
        let cand: Vec<f64> = l.iter().zip(delta.iter()).map(|(a, d)| a + step * d).collect();
        if cand.iter().all(|v| v.is_finite() && *v > 0.0 && *v < LOG_W_MAX) {
            let (fc, _) = op.map(&cand, false);
            let rc = w_residual(&cand, &fc);
            if rc.is_finite() && rc < residual {
                return Some(cand);
            }
        }
        step *= 0.5;
    }
    None
}

/// `sum_t ln Phi_t` over one simulated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdfPathProduct {
    pub log_product: f64,
    pub n: usize,
}

/// Path simulator for the EZ models given a solved wealth-consumption ratio.
///
/// State layout: BY `(z, sigma^2)`, SSY `(z, h_z, h_c, h_d)`.
pub struct EzPathModel<'a> {
    ez: Ez,
    wc: &'a WcSolution,
    /// State transitions simulated (and discarded) after the approximate stationary draw.
    pub burn_in: usize,
}

impl<'a> EzPathModel<'a> {
    pub fn new(model: &ModelSpec, wc: &'a WcSolution) -> Result<Self> {
        let ez = Ez::from_model(model)?;
        if !wc.matches(model) {
            return Err(Error::Precondition(
                "wealth-consumption solution was computed for different parameters".into(),
            ));
        }
        if let Some(l) = wc.log_w.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::Domain(format!("wealth-consumption ratio exp({l}) is not > 1")));
        }
        Ok(EzPathModel { ez, wc, burn_in: 200 })
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    #[inline]
    fn transition<R: Rng>(&self, s: &mut [f64; 4], rng: &mut R) {
        match &self.ez {
            Ez::By(p) => {
                let sigma = s[1].max(0.0).sqrt();
                let ez: f64 = rng.sample(StandardNormal);
                let es: f64 = rng.sample(StandardNormal);
                s[0] = p.rho * s[0] + p.varphi_z * sigma * ez;
                s[1] = (p.v * s[1] + p.d + p.varphi_sigma * es).max(0.0);
            }
            Ez::Ssy(p) => {
                let sz = p.varphi_z * p.bar_sigma * s[1].exp();
                let u: f64 = rng.sample(StandardNormal);
                let xz: f64 = rng.sample(StandardNormal);
                let xc: f64 = rng.sample(StandardNormal);
                let xd: f64 = rng.sample(StandardNormal);
                s[0] = p.rho * s[0] + (1.0 - p.rho * p.rho).sqrt() * sz * u;
                s[1] = p.rho_hz * s[1] + p.sigma_hz * xz;
                s[2] = p.rho_hc * s[2] + p.sigma_hc * xc;
                s[3] = p.rho_hd * s[3] + p.sigma_hd * xd;
            }
        }
    }
}

impl PathModel for EzPathModel<'_> {
    type State = [f64; 4];

    fn draw_initial<R: Rng>(&self, rng: &mut R) -> [f64; 4] {
        let mut s = [0.0; 4];
        match &self.ez {
            Ez::By(p) => {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                s[0] = by_z_sd(p) * a;
                s[1] = (p.mean_variance() + by_var_sd(p) * b).max(0.0);
            }
            Ez::Ssy(p) => {
                let draws: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
                s[0] = ssy_z_sd(p) * draws[0];
                s[1] = ssy_h_sd(p.rho_hz, p.sigma_hz) * draws[1];
                s[2] = ssy_h_sd(p.rho_hc, p.sigma_hc) * draws[2];
                s[3] = ssy_h_sd(p.rho_hd, p.sigma_hd) * draws[3];
            }
        }
        for _ in 0..self.burn_in {
            self.transition(&mut s, rng);
        }
        s
    }

    fn log_product<R: Rng>(&self, start: [f64; 4], n: usize, rng: &mut R) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let theta = self.ez.theta();
        let mut s = start;
        let mut l_prev = self.wc.log_w_at(&s);
        let mut acc = 0.0;
        match &self.ez {
            Ez::By(p) => {
                let constant = theta * p.beta.ln() + p.mu_d - p.gamma * p.mu_c;
                // -gamma sigma eta_c + varphi_d sigma eta_d is sigma * N(0, gamma^2 + varphi_d^2)
                let shock_scale = (p.gamma * p.gamma + p.varphi_d * p.varphi_d).sqrt();
                for _ in 0..n {
                    let sigma = s[1].max(0.0).sqrt();
                    let e: f64 = rng.sample(StandardNormal);
                    acc += constant + (p.alpha - p.gamma) * s[0] + shock_scale * sigma * e;
                    let lm1 = log_expm1(l_prev);
                    self.transition(&mut s, rng);
                    let l_next = self.wc.log_w_at(&s);
                    acc += (theta - 1.0) * (l_next - lm1);
                    l_prev = l_next;
                }
            }
            Ez::Ssy(p) => {
                let constant = theta * p.beta.ln() + p.mu_d - p.gamma * p.mu_c;
                let dg = p.delta - p.gamma;
                for _ in 0..n {
                    let sc = p.varphi_c * p.bar_sigma * s[2].exp();
                    let sd = p.varphi_d * p.bar_sigma * s[3].exp();
                    let e: f64 = rng.sample(StandardNormal);
                    acc += constant + (p.alpha - p.gamma) * s[0] + (dg * dg * sc * sc + sd * sd).sqrt() * e;
                    let lm1 = log_expm1(l_prev);
                    self.transition(&mut s, rng);
                    let l_next = self.wc.log_w_at(&s);
                    acc += (theta - 1.0) * (l_next - lm1);
                    l_prev = l_next;
                }
            }
        }
        acc
    }
}

/// One simulated `ln prod Phi_t` starting from an approximate stationary draw.
pub fn simulate_sdf_log_product(model: &ModelSpec, wc: &WcSolution, n: usize, seed: u64) -> Result<SdfPathProduct> {
    let path = EzPathModel::new(model, wc)?;
    let mut rng = rng::stream(seed, domain::MC, u64::MAX, 0);
    let x0 = path.draw_initial(&mut rng);
    let log_product = path.log_product(x0, n, &mut rng);
    if !log_product.is_finite() {
        return Err(Error::Numerical("simulated log product is not finite".into()));
    }
    Ok(SdfPathProduct { log_product, n })
}
