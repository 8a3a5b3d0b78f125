//! Run configuration from TOML.
//!
//! ```toml
//! [crra_cv]          # exactly one model table; omitted keys keep the reference values
//! beta = 0.998
//!
//! [method]
//! name = "analytic"  # analytic | spectral | mc
//! n = 1000
//! m = 10000
//!
//! [output]
//! path = "out.csv"
//! ```
//!
//! Unknown tables and keys are errors, all reported at once.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::markov::MarkovChain;
use crate::models::{CrraCvParams, EzByParams, EzSsyParams, FiniteCrraParams, HabitParams, ModelSpec, RiskNeutralParams};
use crate::pricing::SolverOptions;
use crate::spectral::Method;
use crate::stability::EvalOptions;
use crate::sweep::SweepAxis;

pub const FAMILIES: [&str; 6] = ["risk_neutral", "crra_cv", "finite_crra", "habit", "ez_by", "ez_ssy"];

const METHOD_KEYS: &[&str] = &[
    "name", "n", "m", "p", "inner_m", "reps", "seed", "threads", "states", "tol", "max_iter", "scale",
    "wc_counts", "wc_width_sd", "wc_gh_nodes", "wc_tol", "wc_max_iter",
];
const OUTPUT_KEYS: &[&str] = &["path"];
const SWEEP_KEYS: &[&str] = &["x", "x_min", "x_max", "x_count", "y", "y_min", "y_max", "y_count"];
const FINITE_KEYS: &[&str] = &["states", "transition"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    /// `None` when the config leaves the method to the command line.
    pub method: Option<Method>,
    pub eval: EvalOptions,
    pub pricing: SolverOptions,
    /// Multiplier applied to the valuation matrix before pricing.
    pub scale: f64,
    pub output: Option<PathBuf>,
    pub sweep: Option<(SweepAxis, SweepAxis)>,
}

impl RunConfig {
    pub fn new(model: ModelSpec) -> Self {
        RunConfig {
            model,
            method: None,
            eval: EvalOptions::default(),
            pricing: SolverOptions::default(),
            scale: 1.0,
            output: None,
            sweep: None,
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| Error::Format(e.to_string()))?;
        let mut unknown = Vec::new();

        let families: Vec<&str> = FAMILIES.iter().copied().filter(|f| table.contains_key(*f)).collect();
        for key in table.keys() {
            if !FAMILIES.contains(&key.as_str()) && !["method", "output", "sweep"].contains(&key.as_str()) {
                unknown.push(key.clone());
            }
        }
        let family = match families.as_slice() {
            [one] => *one,
            [] => {
                if !unknown.is_empty() {
                    return Err(unknown_keys(&unknown));
                }
                return Err(Error::Format(format!("config needs one model table: [{}]", FAMILIES.join("], ["))));
            }
            many => return Err(Error::Format(format!("config has {} model tables ({}); use one", many.len(), many.join(", ")))),
        };
        let model_table = sub_table(&table, family)?;
        let model = parse_model(family, model_table, &mut unknown)?;
        let mut cfg = RunConfig::new(model);

        if let Some(t) = opt_table(&table, "method")? {
            collect_unknown("method", t, METHOD_KEYS, &mut unknown);
            cfg.apply_method(t)?;
        }
        if let Some(t) = opt_table(&table, "output")? {
            collect_unknown("output", t, OUTPUT_KEYS, &mut unknown);
            if let Some(v) = t.get("path") {
                cfg.output = Some(PathBuf::from(as_str(v, "output.path")?));
            }
        }
        if let Some(t) = opt_table(&table, "sweep")? {
            collect_unknown("sweep", t, SWEEP_KEYS, &mut unknown);
            let (dx, dy) = crate::sweep::SweepSpec::default_axes(&cfg.model);
            cfg.sweep = Some((parse_axis(t, "x", dx)?, parse_axis(t, "y", dy)?));
        }
        if !unknown.is_empty() {
            return Err(unknown_keys(&unknown));
        }
        cfg.model.validate()?;
        Ok(cfg)
    }

    fn apply_method(&mut self, t: &Table) -> Result<()> {
        if let Some(v) = t.get("name") {
            self.method = Some(as_str(v, "method.name")?.parse()?);
        }
        let mc = &mut self.eval.mc;
        if let Some(v) = t.get("n") {
            mc.n = as_usize(v, "method.n")?;
        }
        if let Some(v) = t.get("m") {
            mc.m = as_usize(v, "method.m")?;
        }
        if let Some(v) = t.get("p") {
            mc.p = as_f64(v, "method.p")?;
        }
        if let Some(v) = t.get("inner_m") {
            mc.inner_m = Some(as_usize(v, "method.inner_m")?);
        }
        if let Some(v) = t.get("reps") {
            mc.replications = as_usize(v, "method.reps")?;
        }
        if let Some(v) = t.get("seed") {
            mc.seed = as_u64(v, "method.seed")?;
        }
        if let Some(v) = t.get("threads") {
            mc.workers = as_usize(v, "method.threads")?;
        }
        if let Some(v) = t.get("states") {
            self.eval.n_states = as_usize(v, "method.states")?;
        }
        if let Some(v) = t.get("tol") {
            self.pricing.tol = as_f64(v, "method.tol")?;
        }
        if let Some(v) = t.get("max_iter") {
            self.pricing.max_iter = as_usize(v, "method.max_iter")?;
        }
        if let Some(v) = t.get("scale") {
            self.scale = as_f64(v, "method.scale")?;
        }
        if let Some(v) = t.get("wc_tol") {
            self.eval.wc.tol = as_f64(v, "method.wc_tol")?;
        }
        if let Some(v) = t.get("wc_max_iter") {
            self.eval.wc.max_iter = as_usize(v, "method.wc_max_iter")?;
        }
        let wc_keys = ["wc_counts", "wc_width_sd", "wc_gh_nodes"];
        if wc_keys.iter().any(|k| t.contains_key(*k)) {
            let mut grid = self.eval.wc_grid_for(&self.model).ok_or_else(|| {
                Error::Format(format!("wc_* grid keys apply only to ez_by and ez_ssy, not {}", self.model.family()))
            })?;
            if let Some(v) = t.get("wc_counts") {
                grid.counts = as_array(v, "method.wc_counts")?
                    .iter()
                    .map(|x| as_usize(x, "method.wc_counts"))
                    .collect::<Result<_>>()?;
            }
            if let Some(v) = t.get("wc_width_sd") {
                grid.width_sd = as_f64(v, "method.wc_width_sd")?;
            }
            if let Some(v) = t.get("wc_gh_nodes") {
                grid.gh_nodes = as_usize(v, "method.wc_gh_nodes")?;
            }
            self.eval.wc_grid = Some(grid);
        }
        Ok(())
    }
}

fn unknown_keys(keys: &[String]) -> Error {
    Error::Format(format!("unknown config keys: {}", keys.join(", ")))
}

fn collect_unknown(prefix: &str, t: &Table, allowed: &[&str], out: &mut Vec<String>) {
    for k in t.keys() {
        if !allowed.contains(&k.as_str()) {
            out.push(format!("{prefix}.{k}"));
        }
    }
}

fn sub_table<'a>(t: &'a Table, key: &str) -> Result<&'a Table> {
    t.get(key)
        .and_then(Value::as_table)
        .ok_or_else(|| Error::Format(format!("'{key}' must be a table")))
}

fn opt_table<'a>(t: &'a Table, key: &str) -> Result<Option<&'a Table>> {
    match t.get(key) {
        None => Ok(None),
        Some(_) => sub_table(t, key).map(Some),
    }
}

fn as_f64(v: &Value, what: &str) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::Format(format!("{what} must be a number"))),
    }
}

fn as_u64(v: &Value, what: &str) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        // seeds above i64::MAX can be given as strings
        Value::String(s) => s.parse().map_err(|_| Error::Format(format!("{what} must be a non-negative integer"))),
        _ => Err(Error::Format(format!("{what} must be a non-negative integer"))),
    }
}

fn as_usize(v: &Value, what: &str) -> Result<usize> {
    as_u64(v, what).map(|x| x as usize)
}

fn as_str<'a>(v: &'a Value, what: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::Format(format!("{what} must be a string")))
}

fn as_array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| Error::Format(format!("{what} must be an array")))
}

fn parse_axis(t: &Table, prefix: &str, default: SweepAxis) -> Result<SweepAxis> {
    let mut a = default;
    if let Some(v) = t.get(prefix) {
        a.name = as_str(v, &format!("sweep.{prefix}"))?.to_string();
    }
    if let Some(v) = t.get(&format!("{prefix}_min")) {
        a.min = as_f64(v, &format!("sweep.{prefix}_min"))?;
    }
    if let Some(v) = t.get(&format!("{prefix}_max")) {
        a.max = as_f64(v, &format!("sweep.{prefix}_max"))?;
    }
    if let Some(v) = t.get(&format!("{prefix}_count")) {
        a.count = as_usize(v, &format!("sweep.{prefix}_count"))?;
    }
    Ok(a)
}

fn set_scalars(model: &mut ModelSpec, family: &str, t: &Table, skip: &[&str], unknown: &mut Vec<String>) -> Result<()> {
    for (k, v) in t {
        if skip.contains(&k.as_str()) {
            continue;
        }
        if model.get_param(k).is_none() {
            unknown.push(format!("{family}.{k}"));
            continue;
        }
        model.set_param(k, as_f64(v, &format!("{family}.{k}"))?)?;
    }
    Ok(())
}

fn require(t: &Table, family: &str, keys: &[&str]) -> Result<()> {
    let missing: Vec<String> = keys.iter().filter(|k| !t.contains_key(**k)).map(|k| format!("{family}.{k}")).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Format(format!("missing required config keys: {}", missing.join(", "))))
    }
}

fn parse_model(family: &str, t: &Table, unknown: &mut Vec<String>) -> Result<ModelSpec> {
    let mut model = match family {
        "risk_neutral" => {
            require(t, family, &["beta"])?;
            ModelSpec::RiskNeutral(RiskNeutralParams { beta: f64::NAN })
        }
        "crra_cv" => ModelSpec::CrraCv(CrraCvParams::benchmark()),
        "habit" => ModelSpec::Habit(HabitParams::figure_defaults()),
        "ez_by" => ModelSpec::EzBy(EzByParams::benchmark()),
        "ez_ssy" => ModelSpec::EzSsy(EzSsyParams::benchmark()),
        "finite_crra" => {
            let scalars = ["beta", "gamma", "mu_c", "mu_d", "sigma_c", "sigma_d", "varphi"];
            require(t, family, &FINITE_KEYS.iter().chain(&["beta", "gamma"]).copied().collect::<Vec<_>>())?;
            let states: Vec<f64> = as_array(&t["states"], "finite_crra.states")?
                .iter()
                .map(|v| as_f64(v, "finite_crra.states"))
                .collect::<Result<_>>()?;
            let rows = as_array(&t["transition"], "finite_crra.transition")?;
            let n = states.len();
            if rows.len() != n {
                return Err(Error::Format(format!("transition has {} rows for {} states", rows.len(), n)));
            }
            let mut p = DMatrix::zeros(n, n);
            for (i, row) in rows.iter().enumerate() {
                let row = as_array(row, "finite_crra.transition")?;
                if row.len() != n {
                    return Err(Error::Format(format!("transition row {i} has {} entries for {} states", row.len(), n)));
                }
                for (j, v) in row.iter().enumerate() {
                    p[(i, j)] = as_f64(v, "finite_crra.transition")?;
                }
            }
            let chain = MarkovChain::new(states, p)?;
            let mut f = FiniteCrraParams {
                beta: f64::NAN,
                gamma: f64::NAN,
                mu_c: 0.0,
                mu_d: 0.0,
                sigma_c: 0.0,
                sigma_d: 0.0,
                varphi: 1.0,
                chain,
            };
            for k in t.keys() {
                if !scalars.contains(&k.as_str()) && !FINITE_KEYS.contains(&k.as_str()) {
                    unknown.push(format!("{family}.{k}"));
                }
            }
            for k in scalars {
                if let Some(v) = t.get(k) {
                    let x = as_f64(v, &format!("{family}.{k}"))?;
                    match k {
                        "beta" => f.beta = x,
                        "gamma" => f.gamma = x,
                        "mu_c" => f.mu_c = x,
                        "mu_d" => f.mu_d = x,
                        "sigma_c" => f.sigma_c = x,
                        "sigma_d" => f.sigma_d = x,
                        _ => f.varphi = x,
                    }
                }
            }
            return Ok(ModelSpec::FiniteCrra(f));
        }
        other => return Err(Error::Format(format!("unknown model family '{other}'"))),
    };
    set_scalars(&mut model, family, t, &[], unknown)?;
    Ok(model)
}
