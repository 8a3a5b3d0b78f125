//! Two-parameter grids of stability exponents (the data behind contour plots).

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::models::ModelSpec;
use crate::montecarlo::with_workers;
use crate::recursive::WcSolution;
use crate::rng::derive_seed;
use crate::spectral::{Method, Verdict};
use crate::stability::{check_method, evaluate, solve_wc_if_needed, EvalOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl SweepAxis {
    pub fn new(name: impl Into<String>, min: f64, max: f64, count: usize) -> Self {
        SweepAxis { name: name.into(), min, max, count }
    }

    /// Inclusive linspace.
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.max } else { self.min + step * i as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Base model; holds the fixed parameters.
    pub model: ModelSpec,
    pub x: SweepAxis,
    pub y: SweepAxis,
    pub method: Method,
    pub eval: EvalOptions,
    /// Master seed; cell `k` uses `derive_seed(seed, k)`.
    pub seed: u64,
    /// Cell-level worker threads; 0 uses the global pool.
    pub workers: usize,
}

impl SweepSpec {
    pub fn new(model: ModelSpec, x: SweepAxis, y: SweepAxis, method: Method) -> Self {
        SweepSpec { model, x, y, method, eval: EvalOptions::default(), seed: 0, workers: 0 }
    }

    /// Default axes for each family, covering the published benchmark points.
    pub fn default_axes(model: &ModelSpec) -> (SweepAxis, SweepAxis) {
        match model {
            ModelSpec::Habit(_) => (SweepAxis::new("beta", 0.90, 0.99, 20), SweepAxis::new("sigma", 0.02, 0.40, 20)),
            ModelSpec::EzBy(_) => (SweepAxis::new("alpha", 1.0, 5.0, 20), SweepAxis::new("mu_d", 0.0, 0.01, 20)),
            ModelSpec::EzSsy(_) => (SweepAxis::new("varphi_d", 2.5, 6.5, 20), SweepAxis::new("mu_d", 0.0, 0.005, 20)),
            ModelSpec::RiskNeutral(_) => (SweepAxis::new("beta", 0.9, 1.1, 20), SweepAxis::new("beta", 0.9, 1.1, 1)),
            _ => (SweepAxis::new("gamma", 0.5, 10.0, 20), SweepAxis::new("mu_d", 0.0, 0.01, 20)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        check_method(&self.model, self.method)?;
        for a in [&self.x, &self.y] {
            if a.count == 0 {
                return param(format!("sweep axis '{}' needs count >= 1", a.name));
            }
            if !(a.min.is_finite() && a.max.is_finite()) || a.min > a.max {
                return param(format!("sweep axis '{}' has an invalid range [{}, {}]", a.name, a.min, a.max));
            }
            if self.model.get_param(&a.name).is_none() {
                return param(format!(
                    "'{}' is not a parameter of {} (expected one of: {})",
                    a.name,
                    self.model.family(),
                    self.model.param_names().join(", ")
                ));
            }
        }
        Ok(())
    }

    fn cell_models(&self) -> Vec<Result<ModelSpec>> {
        let xs = self.x.values();
        let ys = self.y.values();
        let mut out = Vec::with_capacity(xs.len() * ys.len());
        for &x in &xs {
            for &y in &ys {
                let mut m = self.model.clone();
                let r = m
                    .set_param(&self.x.name, x)
                    .and_then(|_| m.set_param(&self.y.name, y))
                    .and_then(|_| m.validate())
                    .map(|_| m);
                out.push(r);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Ok(Verdict),
    /// Evaluation failed; holds the error kind tag.
    Failed(String),
}

impl fmt::Display for CellStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellStatus::Ok(Verdict::Stable) => f.write_str("stable"),
            CellStatus::Ok(Verdict::Unstable) => f.write_str("unstable"),
            CellStatus::Ok(Verdict::Indeterminate) => f.write_str("indeterminate"),
            CellStatus::Failed(kind) => write!(f, "error:{kind}"),
        }
    }
}

impl FromStr for CellStatus {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stable" => Ok(CellStatus::Ok(Verdict::Stable)),
            "unstable" => Ok(CellStatus::Ok(Verdict::Unstable)),
            "indeterminate" => Ok(CellStatus::Ok(Verdict::Indeterminate)),
            other => match other.strip_prefix("error:") {
                Some(kind) if !kind.is_empty() => Ok(CellStatus::Failed(kind.to_string())),
                _ => Err(Error::Format(format!("unknown cell status '{other}'"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub x: f64,
    pub y: f64,
    /// NaN when the cell failed.
    pub lphi: f64,
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub family: String,
    pub method: Method,
    pub x_name: String,
    pub y_name: String,
    pub seed: u64,
    /// Row-major: `y` varies fastest.
    pub cells: Vec<SweepCell>,
}

/// Evaluates every cell of the grid. Cell failures are recorded, not propagated.
///
/// Wealth-consumption ratios are solved once per distinct set of parameters that
/// enter the recursion, so sweeps over dividend parameters solve `w` once.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let models = spec.cell_models();

    let mut solutions: Vec<(Vec<f64>, Result<WcSolution>)> = Vec::new();
    if spec.method == Method::MonteCarlo {
        for m in models.iter().flatten() {
            if let Some(fp) = m.wc_fingerprint() {
                if !solutions.iter().any(|(f, _)| *f == fp) {
                    let sol = solve_wc_if_needed(m, &spec.eval).and_then(|s| {
                        s.ok_or_else(|| Error::Precondition("expected a wealth-consumption solution".into()))
                    });
                    solutions.push((fp, sol));
                }
            }
        }
    }

    let xs = spec.x.values();
    let ys = spec.y.values();
    let ny = ys.len();
    let cells = with_workers(spec.workers, || {
        models
            .par_iter()
            .enumerate()
            .map(|(k, m)| {
                let (x, y) = (xs[k / ny], ys[k % ny]);
                let outcome = m.as_ref().map_err(Clone::clone).and_then(|m| {
                    let mut eval = spec.eval.clone();
                    eval.mc.seed = derive_seed(spec.seed, k as u64);
                    let wc = match m.wc_fingerprint() {
                        Some(fp) => match solutions.iter().find(|(f, _)| *f == fp) {
                            Some((_, Ok(s))) => Some(s),
                            Some((_, Err(e))) => return Err(e.clone()),
                            None => None,
                        },
                        None => None,
                    };
                    evaluate(m, spec.method, &eval, wc)
                });
                match outcome {
                    Ok(r) if r.lphi.is_finite() => SweepCell { x, y, lphi: r.lphi, status: CellStatus::Ok(r.verdict()) },
                    Ok(_) => SweepCell { x, y, lphi: f64::NAN, status: CellStatus::Failed("numerical".into()) },
                    Err(e) => SweepCell { x, y, lphi: f64::NAN, status: CellStatus::Failed(e.kind().into()) },
                }
            })
            .collect::<Vec<_>>()
    })?;

    Ok(SweepResult {
        family: spec.model.family().to_string(),
        method: spec.method,
        x_name: spec.x.name.clone(),
        y_name: spec.y.name.clone(),
        seed: spec.seed,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{CrraCvParams, HabitParams};

    #[test]
    fn linspace_is_inclusive() {
        let a = SweepAxis::new("beta", 0.1, 0.3, 3);
        assert_eq!(a.values(), vec![0.1, 0.2, 0.3]);
        assert_eq!(SweepAxis::new("beta", 0.5, 0.9, 1).values(), vec![0.5]);
    }

    #[test]
    fn crra_slope_in_mu_d_is_one() {
        let spec = SweepSpec::new(
            ModelSpec::CrraCv(CrraCvParams::benchmark()),
            SweepAxis::new("gamma", 2.0, 3.0, 3),
            SweepAxis::new("mu_d", 0.0, 0.01, 6),
            Method::Analytic,
        );
        let r = run_sweep(&spec).unwrap();
        assert_eq!(r.cells.len(), 18);
        for row in r.cells.chunks(6) {
            for w in row.windows(2) {
                let slope = (w[1].lphi - w[0].lphi) / (w[1].y - w[0].y);
                assert!((slope - 1.0).abs() < 1e-12, "{slope}");
            }
        }
    }

    #[test]
    fn habit_box_contains_zero_contour() {
        let spec = SweepSpec::new(
            ModelSpec::Habit(HabitParams::figure_defaults()),
            SweepAxis::new("beta", 0.90, 0.99, 10),
            SweepAxis::new("sigma", 0.02, 0.40, 10),
            Method::Analytic,
        );
        let r = run_sweep(&spec).unwrap();
        assert!(r.cells.iter().any(|c| c.lphi < 0.0));
        assert!(r.cells.iter().any(|c| c.lphi > 0.0));
    }

    #[test]
    fn invalid_cells_are_recorded() {
        let spec = SweepSpec::new(
            ModelSpec::CrraCv(CrraCvParams::benchmark()),
            SweepAxis::new("beta", 0.5, 1.5, 3),
            SweepAxis::new("mu_d", 0.0, 0.0, 1),
            Method::Analytic,
        );
        let r = run_sweep(&spec).unwrap();
        assert_eq!(r.cells[2].status, CellStatus::Failed("parameter".into()));
        assert!(r.cells[2].lphi.is_nan());
        assert!(matches!(r.cells[0].status, CellStatus::Ok(_)));
    }

    #[test]
    fn unknown_axis_is_rejected() {
        let spec = SweepSpec::new(
            ModelSpec::CrraCv(CrraCvParams::benchmark()),
            SweepAxis::new("betta", 0.5, 0.9, 3),
            SweepAxis::new("mu_d", 0.0, 0.0, 1),
            Method::Analytic,
        );
        assert!(matches!(run_sweep(&spec), Err(Error::Parameter(_))));
    }

    #[test]
    fn status_round_trip() {
        for s in ["stable", "unstable", "indeterminate", "error:instability"] {
            assert_eq!(s.parse::<CellStatus>().unwrap().to_string(), s);
        }
        assert!("error:".parse::<CellStatus>().is_err());
    }
}
