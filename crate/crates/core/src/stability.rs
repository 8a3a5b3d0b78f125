//! One entry point that evaluates a model's stability exponent by a chosen method.

use crate::error::{param, Result};
use crate::models::ModelSpec;
use crate::montecarlo::{estimate_model, McConfig};
use crate::recursive::{solve_wealth_consumption, WcGridSpec, WcKind, WcOptions, WcSolution};
use crate::spectral::{lphi_from_matrix, Method, StabilityReport, ValuationMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    /// Rouwenhorst states for the spectral method on AR(1) models.
    pub n_states: usize,
    pub mc: McConfig,
    /// Grid for the wealth-consumption solve; `None` uses the per-model default.
    pub wc_grid: Option<WcGridSpec>,
    pub wc: WcOptions,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { n_states: 25, mc: McConfig::default(), wc_grid: None, wc: WcOptions::default() }
    }
}

impl EvalOptions {
    pub fn wc_grid_for(&self, model: &ModelSpec) -> Option<WcGridSpec> {
        let kind = match model {
            ModelSpec::EzBy(_) => WcKind::By,
            ModelSpec::EzSsy(_) => WcKind::Ssy,
            _ => return None,
        };
        Some(self.wc_grid.clone().unwrap_or_else(|| WcGridSpec::default_for(kind)))
    }
}

/// Checks that `method` can be applied to `model`.
pub fn check_method(model: &ModelSpec, method: Method) -> Result<()> {
    match method {
        Method::Analytic if !model.has_closed_form() => param(format!(
            "the analytic method needs a closed form, which model family '{}' lacks",
            model.family()
        )),
        Method::Spectral if matches!(model, ModelSpec::EzBy(_) | ModelSpec::EzSsy(_)) => param(format!(
            "the spectral method needs a finite or AR(1) state; use mc for '{}'",
            model.family()
        )),
        _ => Ok(()),
    }
}

/// Solves the wealth-consumption ratio when the model needs one.
pub fn solve_wc_if_needed(model: &ModelSpec, opts: &EvalOptions) -> Result<Option<WcSolution>> {
    match opts.wc_grid_for(model) {
        Some(grid) => solve_wealth_consumption(model, &grid, &opts.wc).map(Some),
        None => Ok(None),
    }
}

/// `L_Phi` of `model` by `method`. EZ models solve `w` first unless a matching solution is passed.
pub fn evaluate(model: &ModelSpec, method: Method, opts: &EvalOptions, wc: Option<&WcSolution>) -> Result<StabilityReport> {
    model.validate()?;
    check_method(model, method)?;
    match method {
        Method::Analytic => Ok(StabilityReport::new(Method::Analytic, model.lphi_analytic()?, 1.0, None)),
        Method::Spectral => {
            let d = model.discretize(opts.n_states)?;
            lphi_from_matrix(&ValuationMatrix::from_discrete(&d)?)
        }
        Method::MonteCarlo => {
            let owned;
            let wc = match wc {
                Some(w) if w.matches(model) => Some(w),
                _ => {
                    owned = solve_wc_if_needed(model, opts)?;
                    owned.as_ref()
                }
            };
            Ok(estimate_model(model, &opts.mc, wc)?.to_report())
        }
    }
}

/// One row of the discretization accuracy curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscPoint {
    pub n_states: usize,
    pub lphi: f64,
    pub abs_error: f64,
}

/// Spectral exponent on Rouwenhorst grids with `2..=n_max` states against the closed form.
pub fn discretization_curve(model: &ModelSpec, n_max: usize) -> Result<Vec<DiscPoint>> {
    if n_max < 2 {
        return param("the discretization curve needs n_max >= 2");
    }
    if !matches!(model, ModelSpec::CrraCv(_) | ModelSpec::Habit(_)) {
        return param(format!(
            "the discretization curve needs an AR(1) model with a closed form, not '{}'",
            model.family()
        ));
    }
    let exact = model.lphi_analytic()?;
    (2..=n_max)
        .map(|n| {
            let d = model.discretize(n)?;
            let lphi = lphi_from_matrix(&ValuationMatrix::from_discrete(&d)?)?.lphi;
            Ok(DiscPoint { n_states: n, lphi, abs_error: (lphi - exact).abs() })
        })
        .collect()
}
