//! SDF model parameterizations, the innovation-integrated one-step discount
//! weight, and the closed-form stability exponents.
//!
//! All rates are per period (monthly in the reference calibrations).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::markov::{rouwenhorst, Ar1Spec, MarkovChain};

/// Generates by-name access to the `f64` fields of a parameter struct, used by
/// parameter sweeps and the config layer.
macro_rules! named_params {
    ($ty:ty { $($field:ident),* $(,)? }) => {
        impl $ty {
            pub const PARAM_NAMES: &'static [&'static str] = &[$(stringify!($field)),*];

            pub fn get(&self, name: &str) -> Option<f64> {
                match name {
                    $(stringify!($field) => Some(self.$field),)*
                    _ => None,
                }
            }

            pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
                match name {
                    $(stringify!($field) => { self.$field = value; Ok(()) })*
                    _ => param(format!("unknown parameter '{}' for {}", name, stringify!($ty))),
                }
            }
        }
    };
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return param(format!("beta must lie in (0, 1), got {beta}"));
    }
    Ok(())
}

fn check_rho(name: &str, rho: f64) -> Result<()> {
    if !(rho.is_finite() && rho.abs() < 1.0) {
        return param(format!("{name} must satisfy |{name}| < 1, got {rho}"));
    }
    Ok(())
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return param(format!("{name} must be finite and >= 0, got {v}"));
    }
    Ok(())
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return param(format!("{name} must be finite, got {v}"));
    }
    Ok(())
}

/// Innovation-integrated one-step discount weight `E[Phi_{t+1} | X_t = x]`.
pub trait PhiWeight {
    fn phi_weight(&self, x: f64) -> f64;
}

/// `Phi = beta` in every state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskNeutralParams {
    pub beta: f64,
}

named_params!(RiskNeutralParams { beta });

impl RiskNeutralParams {
    /// Any positive beta is accepted so that the stability boundary `beta = 1` can be probed.
    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return param(format!("beta must be positive, got {}", self.beta));
        }
        Ok(())
    }
}

impl PhiWeight for RiskNeutralParams {
    fn phi_weight(&self, _x: f64) -> f64 {
        self.beta
    }
}

/// CRRA utility with constant-volatility consumption and dividend growth driven
/// by a Gaussian AR(1) state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrraCvParams {
    pub beta: f64,
    pub gamma: f64,
    pub mu_c: f64,
    pub mu_d: f64,
    pub sigma_c: f64,
    pub sigma_d: f64,
    pub rho: f64,
    pub sigma: f64,
    pub varphi: f64,
}

named_params!(CrraCvParams { beta, gamma, mu_c, mu_d, sigma_c, sigma_d, rho, sigma, varphi });

impl CrraCvParams {
    /// Consumption and dividend calibration of the constant-volatility benchmark
    /// with `gamma = 2.5`; the closed-form exponent is `-0.0031545`.
    pub fn benchmark() -> Self {
        CrraCvParams {
            beta: 0.998,
            gamma: 2.5,
            mu_c: 0.0015,
            mu_d: 0.0015,
            sigma_c: 0.0078,
            sigma_d: 0.035,
            rho: 0.979,
            sigma: 0.00034,
            varphi: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta)?;
        if !(self.gamma.is_finite() && self.gamma >= 0.0) || self.gamma == 1.0 {
            return param(format!("gamma must be >= 0 and != 1, got {}", self.gamma));
        }
        check_rho("rho", self.rho)?;
        check_nonneg("sigma", self.sigma)?;
        check_nonneg("sigma_c", self.sigma_c)?;
        check_nonneg("sigma_d", self.sigma_d)?;
        check_finite("mu_c", self.mu_c)?;
        check_finite("mu_d", self.mu_d)?;
        check_finite("varphi", self.varphi)
    }

    /// Variance of the iid lognormal part of `ln Phi`.
    pub fn shock_variance(&self) -> f64 {
        self.sigma_d * self.sigma_d + (self.gamma * self.sigma_c).powi(2)
    }

    pub fn state_process(&self) -> Ar1Spec {
        Ar1Spec { rho: self.rho, sigma: self.sigma, b: 0.0 }
    }

    /// Rouwenhorst discretization of the state, keeping the growth parameters.
    pub fn discretize(&self, n_states: usize) -> Result<FiniteCrraParams> {
        self.validate()?;
        let chain = rouwenhorst(&self.state_process(), n_states)?;
        Ok(FiniteCrraParams {
            beta: self.beta,
            gamma: self.gamma,
            mu_c: self.mu_c,
            mu_d: self.mu_d,
            sigma_c: self.sigma_c,
            sigma_d: self.sigma_d,
            varphi: self.varphi,
            chain,
        })
    }
}

fn crra_weight(beta: f64, gamma: f64, mu_c: f64, mu_d: f64, varphi: f64, shock_var: f64, x: f64) -> f64 {
    beta * (mu_d - gamma * mu_c + (varphi - gamma) * x + 0.5 * shock_var).exp()
}

impl PhiWeight for CrraCvParams {
    fn phi_weight(&self, x: f64) -> f64 {
        crra_weight(self.beta, self.gamma, self.mu_c, self.mu_d, self.varphi, self.shock_variance(), x)
    }
}

/// Closed-form exponent of the constant-volatility CRRA model; identical for every order p.
pub fn lphi_analytic_crra(params: &CrraCvParams) -> Result<f64> {
    params.validate()?;
    let p = params;
    let lr = (p.varphi - p.gamma) / (1.0 - p.rho);
    Ok(p.beta.ln() + p.mu_d - p.gamma * p.mu_c
        + 0.5 * p.sigma * p.sigma * lr * lr
        + 0.5 * p.shock_variance())
}

/// The CRRA model with the state following a finite Markov chain.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteCrraParams {
    pub beta: f64,
    pub gamma: f64,
    pub mu_c: f64,
    pub mu_d: f64,
    pub sigma_c: f64,
    pub sigma_d: f64,
    /// Dividend loading on the state; 1 recovers the `(1 - gamma) x` valuation matrix.
    pub varphi: f64,
    pub chain: MarkovChain,
}

impl FiniteCrraParams {
    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta)?;
        if !(self.gamma.is_finite() && self.gamma >= 0.0) || self.gamma == 1.0 {
            return param(format!("gamma must be >= 0 and != 1, got {}", self.gamma));
        }
        check_nonneg("sigma_c", self.sigma_c)?;
        check_nonneg("sigma_d", self.sigma_d)?;
        check_finite("mu_c", self.mu_c)?;
        check_finite("mu_d", self.mu_d)?;
        check_finite("varphi", self.varphi)
    }

    pub fn shock_variance(&self) -> f64 {
        self.sigma_d * self.sigma_d + (self.gamma * self.sigma_c).powi(2)
    }
}

impl PhiWeight for FiniteCrraParams {
    fn phi_weight(&self, x: f64) -> f64 {
        crra_weight(self.beta, self.gamma, self.mu_c, self.mu_d, self.varphi, self.shock_variance(), x)
    }
}

/// External habit model. `b` and `k0` are derived on every access.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HabitParams {
    pub beta: f64,
    pub gamma: f64,
    pub rho: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub x0: f64,
}

named_params!(HabitParams { beta, gamma, rho, sigma, alpha, x0 });

impl HabitParams {
    /// Fixed parameters of the habit stability contour figure, at `(beta, sigma) = (0.95, 0.1)`.
    pub fn figure_defaults() -> Self {
        HabitParams { beta: 0.95, gamma: 2.5, rho: -0.14, sigma: 0.1, alpha: 1.0, x0: 0.05 }
    }

    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta)?;
        check_rho("rho", self.rho)?;
        check_nonneg("sigma", self.sigma)?;
        check_finite("gamma", self.gamma)?;
        check_finite("alpha", self.alpha)?;
        check_finite("x0", self.x0)
    }

    /// State intercept `x0 + sigma^2 (1 - gamma)`.
    pub fn b(&self) -> f64 {
        self.x0 + self.sigma * self.sigma * (1.0 - self.gamma)
    }

    pub fn k0(&self) -> f64 {
        let g1 = 1.0 - self.gamma;
        self.beta * (self.b() * g1 + 0.5 * self.sigma * self.sigma * g1 * g1).exp()
    }

    /// Loading `(1 - gamma)(rho - alpha)` of `ln Phi` on the state.
    pub fn state_loading(&self) -> f64 {
        (1.0 - self.gamma) * (self.rho - self.alpha)
    }

    pub fn state_process(&self) -> Ar1Spec {
        Ar1Spec { rho: self.rho, sigma: self.sigma, b: self.b() }
    }

    pub fn discretize(&self, n_states: usize) -> Result<MarkovChain> {
        self.validate()?;
        rouwenhorst(&self.state_process(), n_states)
    }
}

impl PhiWeight for HabitParams {
    fn phi_weight(&self, x: f64) -> f64 {
        self.k0() * (self.state_loading() * x).exp()
    }
}

/// Closed-form second-order exponent of the habit model.
pub fn lphi_analytic_habit(params: &HabitParams) -> Result<f64> {
    params.validate()?;
    let c = params.state_loading();
    let one_minus_rho = 1.0 - params.rho;
    Ok(params.k0().ln()
        + c * params.b() / one_minus_rho
        + 0.5 * c * c * params.sigma * params.sigma / (one_minus_rho * one_minus_rho))
}

/// Epstein-Zin preferences with the long-run risk and stochastic volatility
/// dynamics of the Bansal-Yaron calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EzByParams {
    pub beta: f64,
    pub gamma: f64,
    pub psi: f64,
    pub mu_c: f64,
    pub mu_d: f64,
    pub alpha: f64,
    pub rho: f64,
    pub varphi_z: f64,
    pub v: f64,
    pub d: f64,
    pub varphi_sigma: f64,
    pub varphi_d: f64,
}

named_params!(EzByParams { beta, gamma, psi, mu_c, mu_d, alpha, rho, varphi_z, v, d, varphi_sigma, varphi_d });

impl EzByParams {
    pub fn benchmark() -> Self {
        EzByParams {
            beta: 0.998,
            gamma: 10.0,
            psi: 1.5,
            mu_c: 0.0015,
            mu_d: 0.0015,
            alpha: 3.0,
            rho: 0.979,
            varphi_z: 0.044,
            v: 0.987,
            d: 7.9092e-7,
            varphi_sigma: 2.3e-6,
            varphi_d: 4.5,
        }
    }

    pub fn theta(&self) -> f64 {
        ez_theta(self.gamma, self.psi)
    }

    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta)?;
        check_ez(self.gamma, self.psi)?;
        check_rho("rho", self.rho)?;
        check_rho("v", self.v)?;
        check_nonneg("varphi_z", self.varphi_z)?;
        check_nonneg("varphi_sigma", self.varphi_sigma)?;
        check_nonneg("varphi_d", self.varphi_d)?;
        check_finite("d", self.d)?;
        check_finite("mu_c", self.mu_c)?;
        check_finite("mu_d", self.mu_d)?;
        check_finite("alpha", self.alpha)?;
        if self.d / (1.0 - self.v) < 0.0 {
            return param("volatility recursion has a negative stationary mean d/(1-v)");
        }
        Ok(())
    }

    /// Unconditional mean of the variance state, ignoring the zero floor.
    pub fn mean_variance(&self) -> f64 {
        self.d / (1.0 - self.v)
    }

    /// Parameters that enter the wealth-consumption recursion.
    pub fn wc_fingerprint(&self) -> Vec<f64> {
        vec![self.beta, self.gamma, self.psi, self.mu_c, self.rho, self.varphi_z, self.v, self.d, self.varphi_sigma]
    }
}

/// Epstein-Zin preferences with the Schorfheide-Song-Yaron dynamics; the state
/// is `(z, h_z, h_c, h_d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EzSsyParams {
    pub beta: f64,
    pub gamma: f64,
    pub psi: f64,
    pub mu_c: f64,
    pub mu_d: f64,
    pub alpha: f64,
    pub delta: f64,
    pub rho: f64,
    pub varphi_z: f64,
    pub varphi_c: f64,
    pub varphi_d: f64,
    pub bar_sigma: f64,
    pub rho_hz: f64,
    pub sigma_hz: f64,
    pub rho_hc: f64,
    pub sigma_hc: f64,
    pub rho_hd: f64,
    pub sigma_hd: f64,
}

named_params!(EzSsyParams {
    beta, gamma, psi, mu_c, mu_d, alpha, delta, rho, varphi_z, varphi_c, varphi_d,
    bar_sigma, rho_hz, sigma_hz, rho_hc, sigma_hc, rho_hd, sigma_hd
});

impl EzSsyParams {
    /// Posterior-mean calibration.
    pub fn benchmark() -> Self {
        EzSsyParams {
            beta: 0.999,
            gamma: 8.89,
            psi: 1.97,
            mu_c: 0.0016,
            mu_d: 0.001,
            alpha: 3.65,
            delta: 1.47,
            rho: 0.987,
            varphi_z: 0.215,
            varphi_c: 1.0,
            varphi_d: 4.54,
            bar_sigma: 0.0032,
            rho_hz: 0.992,
            sigma_hz: 0.0039f64.sqrt(),
            rho_hc: 0.991,
            sigma_hc: 0.0096f64.sqrt(),
            rho_hd: 0.969,
            sigma_hd: 0.0447f64.sqrt(),
        }
    }

    pub fn theta(&self) -> f64 {
        ez_theta(self.gamma, self.psi)
    }

    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta)?;
        check_ez(self.gamma, self.psi)?;
        check_rho("rho", self.rho)?;
        check_rho("rho_hz", self.rho_hz)?;
        check_rho("rho_hc", self.rho_hc)?;
        check_rho("rho_hd", self.rho_hd)?;
        for (name, v) in [
            ("sigma_hz", self.sigma_hz),
            ("sigma_hc", self.sigma_hc),
            ("sigma_hd", self.sigma_hd),
            ("bar_sigma", self.bar_sigma),
            ("varphi_z", self.varphi_z),
            ("varphi_c", self.varphi_c),
            ("varphi_d", self.varphi_d),
        ] {
            check_nonneg(name, v)?;
        }
        for (name, v) in [("mu_c", self.mu_c), ("mu_d", self.mu_d), ("alpha", self.alpha), ("delta", self.delta)] {
            check_finite(name, v)?;
        }
        Ok(())
    }

    pub fn wc_fingerprint(&self) -> Vec<f64> {
        vec![
            self.beta, self.gamma, self.psi, self.mu_c, self.rho, self.varphi_z, self.varphi_c,
            self.bar_sigma, self.rho_hz, self.sigma_hz, self.rho_hc, self.sigma_hc,
        ]
    }
}

fn ez_theta(gamma: f64, psi: f64) -> f64 {
    (1.0 - gamma) / (1.0 - 1.0 / psi)
}

fn check_ez(gamma: f64, psi: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return param(format!("gamma must be finite and >= 0, got {gamma}"));
    }
    if !(psi.is_finite() && psi > 0.0) || psi == 1.0 {
        return param(format!("psi must be positive and != 1, got {psi}"));
    }
    let theta = ez_theta(gamma, psi);
    if !theta.is_finite() || theta == 0.0 {
        return param(format!("theta = (1-gamma)/(1-1/psi) must be finite and nonzero, got {theta}"));
    }
    Ok(())
}

/// Model family selector; all parameterizations in one tagged union.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    RiskNeutral(RiskNeutralParams),
    CrraCv(CrraCvParams),
    FiniteCrra(FiniteCrraParams),
    Habit(HabitParams),
    EzBy(EzByParams),
    EzSsy(EzSsyParams),
}

/// A model reduced to a finite chain and its per-state discount weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    pub chain: MarkovChain,
    pub weights: Vec<f64>,
}

impl DiscreteModel {
    pub fn new(model: &impl PhiWeight, chain: MarkovChain) -> Result<Self> {
        let weights: Vec<f64> = chain.states().iter().map(|&x| model.phi_weight(x)).collect();
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::Numerical(format!("discount weight {w} is not finite and positive")));
        }
        Ok(DiscreteModel { chain, weights })
    }
}

impl ModelSpec {
    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::RiskNeutral(_) => "risk_neutral",
            ModelSpec::CrraCv(_) => "crra_cv",
            ModelSpec::FiniteCrra(_) => "finite_crra",
            ModelSpec::Habit(_) => "habit",
            ModelSpec::EzBy(_) => "ez_by",
            ModelSpec::EzSsy(_) => "ez_ssy",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::RiskNeutral(p) => p.validate(),
            ModelSpec::CrraCv(p) => p.validate(),
            ModelSpec::FiniteCrra(p) => p.validate(),
            ModelSpec::Habit(p) => p.validate(),
            ModelSpec::EzBy(p) => p.validate(),
            ModelSpec::EzSsy(p) => p.validate(),
        }
    }

    pub fn has_closed_form(&self) -> bool {
        matches!(self, ModelSpec::RiskNeutral(_) | ModelSpec::CrraCv(_) | ModelSpec::Habit(_))
    }

    /// Closed-form exponent where one exists.
    pub fn lphi_analytic(&self) -> Result<f64> {
        match self {
            ModelSpec::RiskNeutral(p) => {
                p.validate()?;
                Ok(p.beta.ln())
            }
            ModelSpec::CrraCv(p) => lphi_analytic_crra(p),
            ModelSpec::Habit(p) => lphi_analytic_habit(p),
            other => param(format!("no closed form for model family '{}'", other.family())),
        }
    }

    /// Finite-state reduction: Rouwenhorst for AR(1)-driven models, the model's own
    /// chain for finite models, a single state for the risk-neutral case.
    pub fn discretize(&self, n_states: usize) -> Result<DiscreteModel> {
        self.validate()?;
        match self {
            ModelSpec::RiskNeutral(p) => {
                let chain = MarkovChain::new(vec![0.0], DMatrix::from_element(1, 1, 1.0))?;
                DiscreteModel::new(p, chain)
            }
            ModelSpec::CrraCv(p) => {
                let f = p.discretize(n_states)?;
                DiscreteModel::new(&f, f.chain.clone())
            }
            ModelSpec::FiniteCrra(p) => DiscreteModel::new(p, p.chain.clone()),
            ModelSpec::Habit(p) => DiscreteModel::new(p, p.discretize(n_states)?),
            other => param(format!(
                "model family '{}' has a multi-dimensional continuous state and no discretization; use Monte Carlo",
                other.family()
            )),
        }
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            ModelSpec::RiskNeutral(_) => RiskNeutralParams::PARAM_NAMES,
            ModelSpec::CrraCv(_) => CrraCvParams::PARAM_NAMES,
            ModelSpec::FiniteCrra(_) => &["beta", "gamma", "mu_c", "mu_d", "sigma_c", "sigma_d", "varphi"],
            ModelSpec::Habit(_) => HabitParams::PARAM_NAMES,
            ModelSpec::EzBy(_) => EzByParams::PARAM_NAMES,
            ModelSpec::EzSsy(_) => EzSsyParams::PARAM_NAMES,
        }
    }

    pub fn get_param(&self, name: &str) -> Option<f64> {
        match self {
            ModelSpec::RiskNeutral(p) => p.get(name),
            ModelSpec::CrraCv(p) => p.get(name),
            ModelSpec::FiniteCrra(p) => match name {
                "beta" => Some(p.beta),
                "gamma" => Some(p.gamma),
                "mu_c" => Some(p.mu_c),
                "mu_d" => Some(p.mu_d),
                "sigma_c" => Some(p.sigma_c),
                "sigma_d" => Some(p.sigma_d),
                "varphi" => Some(p.varphi),
                _ => None,
            },
            ModelSpec::Habit(p) => p.get(name),
            ModelSpec::EzBy(p) => p.get(name),
            ModelSpec::EzSsy(p) => p.get(name),
        }
    }

    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        match self {
            ModelSpec::RiskNeutral(p) => p.set(name, value),
            ModelSpec::CrraCv(p) => p.set(name, value),
            ModelSpec::FiniteCrra(p) => {
                let slot = match name {
                    "beta" => &mut p.beta,
                    "gamma" => &mut p.gamma,
                    "mu_c" => &mut p.mu_c,
                    "mu_d" => &mut p.mu_d,
                    "sigma_c" => &mut p.sigma_c,
                    "sigma_d" => &mut p.sigma_d,
                    "varphi" => &mut p.varphi,
                    _ => return param(format!("unknown parameter '{name}' for finite_crra")),
                };
                *slot = value;
                Ok(())
            }
            ModelSpec::Habit(p) => p.set(name, value),
            ModelSpec::EzBy(p) => p.set(name, value),
            ModelSpec::EzSsy(p) => p.set(name, value),
        }
    }

    /// Parameters that determine the wealth-consumption ratio; `None` for non-EZ models.
    pub fn wc_fingerprint(&self) -> Option<Vec<f64>> {
        match self {
            ModelSpec::EzBy(p) => Some(p.wc_fingerprint()),
            ModelSpec::EzSsy(p) => Some(p.wc_fingerprint()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn benchmark_crra_exponent() {
        let l = lphi_analytic_crra(&CrraCvParams::benchmark()).unwrap();
        assert!((l - -0.0031545).abs() <= 5e-8, "{l}");
    }

    #[test]
    fn risk_neutral_reduction() {
        let p = CrraCvParams {
            beta: 0.97,
            gamma: 0.0,
            mu_c: 0.0,
            mu_d: 0.0,
            sigma_c: 0.0,
            sigma_d: 0.0,
            rho: 0.5,
            sigma: 0.01,
            varphi: 0.0,
        };
        for x in [-1.0, 0.0, 2.5] {
            assert_abs_diff_eq!(p.phi_weight(x), 0.97, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(lphi_analytic_crra(&p).unwrap(), 0.97f64.ln(), epsilon = 1e-15);
        let rn = ModelSpec::RiskNeutral(RiskNeutralParams { beta: 0.97 });
        assert_abs_diff_eq!(rn.lphi_analytic().unwrap(), 0.97f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn crra_weight_at_zero_state() {
        let p = CrraCvParams::benchmark();
        let expect = 0.998 * (0.0015 - 2.5 * 0.0015 + (0.035f64.powi(2) + (2.5 * 0.0078f64).powi(2)) / 2.0).exp();
        assert_abs_diff_eq!(p.phi_weight(0.0), expect, epsilon = 1e-15);
    }

    #[test]
    fn crra_rejects_bad_params() {
        let mut p = CrraCvParams::benchmark();
        p.rho = 1.0;
        assert!(matches!(lphi_analytic_crra(&p), Err(Error::Parameter(_))));
        let mut p = CrraCvParams::benchmark();
        p.gamma = 1.0;
        assert!(p.validate().is_err());
        let mut p = CrraCvParams::benchmark();
        p.beta = 1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn crra_partial_derivatives() {
        let base = CrraCvParams::benchmark();
        let l0 = lphi_analytic_crra(&base).unwrap();
        let h = 1e-6;
        let mut up = base;
        up.mu_d += h;
        assert_abs_diff_eq!((lphi_analytic_crra(&up).unwrap() - l0) / h, 1.0, epsilon = 1e-8);
        let mut up = base;
        up.beta *= h.exp();
        assert_abs_diff_eq!((lphi_analytic_crra(&up).unwrap() - l0) / h, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn habit_degenerate_cases() {
        let mut p = HabitParams::figure_defaults();
        p.alpha = p.rho;
        for x in [-0.3, 0.0, 0.7] {
            assert_abs_diff_eq!(p.phi_weight(x), p.k0(), epsilon = 1e-15);
        }
        assert_abs_diff_eq!(lphi_analytic_habit(&p).unwrap(), p.k0().ln(), epsilon = 1e-15);

        let mut p = HabitParams::figure_defaults();
        p.gamma = 1.0;
        assert_abs_diff_eq!(p.k0(), p.beta, epsilon = 1e-15);
        assert_abs_diff_eq!(lphi_analytic_habit(&p).unwrap(), p.beta.ln(), epsilon = 1e-15);

        let mut p = HabitParams::figure_defaults();
        p.rho = -1.0;
        assert!(lphi_analytic_habit(&p).is_err());
    }

    #[test]
    fn habit_derived_fields_track_primitives() {
        let mut p = HabitParams::figure_defaults();
        let b0 = p.b();
        p.set("sigma", 0.2).unwrap();
        assert!(p.b() != b0);
        assert_abs_diff_eq!(p.b(), 0.05 + 0.04 * (1.0 - 2.5), epsilon = 1e-15);
    }

    #[test]
    fn habit_contour_sign_pattern() {
        // With the figure's fixed parameters the exponent reduces to ln(beta) + 2.25 sigma^2,
        // so the zero contour is sigma = sqrt(-ln(beta) / 2.25).
        for &beta in &[0.9, 0.95, 0.99] {
            let boundary = (-f64::ln(beta) / 2.25).sqrt();
            let mut p = HabitParams::figure_defaults();
            p.beta = beta;
            p.sigma = boundary * 0.95;
            assert!(lphi_analytic_habit(&p).unwrap() < 0.0);
            p.sigma = boundary * 1.05;
            assert!(lphi_analytic_habit(&p).unwrap() > 0.0);
        }
    }

    #[test]
    fn ez_theta_and_validation() {
        let by = EzByParams::benchmark();
        assert_abs_diff_eq!(by.theta(), -27.0, epsilon = 1e-12);
        by.validate().unwrap();
        let mut bad = by;
        bad.psi = 1.0;
        assert!(bad.validate().is_err());
        EzSsyParams::benchmark().validate().unwrap();
    }

    #[test]
    fn named_access() {
        let mut m = ModelSpec::EzSsy(EzSsyParams::benchmark());
        m.set_param("mu_d", 0.002).unwrap();
        assert_eq!(m.get_param("mu_d"), Some(0.002));
        assert!(m.set_param("nope", 1.0).is_err());
        assert!(m.get_param("nope").is_none());
    }

    #[test]
    fn discretize_families() {
        let d = ModelSpec::RiskNeutral(RiskNeutralParams { beta: 0.9 }).discretize(5).unwrap();
        assert_eq!(d.weights, vec![0.9]);
        let d = ModelSpec::CrraCv(CrraCvParams::benchmark()).discretize(5).unwrap();
        assert_eq!(d.chain.len(), 5);
        assert!(ModelSpec::EzBy(EzByParams::benchmark()).discretize(5).is_err());
    }
}
