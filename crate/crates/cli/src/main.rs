//! `sdfstab`: stability tests, price and wealth-consumption solvers, and the
//! replication artifacts (Table 1, discretization curve, parameter sweeps).
//!
//! Exit codes: 0 stable, 2 unstable, 3 indeterminate, 1 usage or parameter error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sdfstab::config::RunConfig;
use sdfstab::io;
use sdfstab::models::{CrraCvParams, ModelSpec};
use sdfstab::montecarlo::{run_table1, TABLE1_M, TABLE1_N};
use sdfstab::pricing::{solve_markov_solution, PricingProblem};
use sdfstab::recursive::solve_wealth_consumption;
use sdfstab::spectral::{Method, ValuationMatrix, Verdict};
use sdfstab::stability::{discretization_curve, evaluate};
use sdfstab::sweep::{run_sweep, SweepSpec};
use sdfstab::Error;

#[derive(Parser)]
#[command(name = "sdfstab", version, about = "Stability exponents of stochastic discount factors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute L_Phi and print the verdict.
    Lphi(Common),
    /// Solve for the price-dividend ratio on a finite or discretized state space.
    Solve(Common),
    /// Solve the Epstein-Zin wealth-consumption ratio and dump it as CSV.
    SolveWc(Common),
    /// Replicate the Monte Carlo table for the constant-volatility CRRA model.
    Table1(TableArgs),
    /// Spectral exponent against the closed form for 2..=N Rouwenhorst states.
    DiscCurve(Common),
    /// Evaluate L_Phi over a two-parameter grid.
    Sweep(Common),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// analytic, spectral or mc.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Path length for Monte Carlo.
    #[arg(long)]
    n: Option<usize>,
    /// Paths per Monte Carlo estimate.
    #[arg(long)]
    m: Option<usize>,
    /// Independent Monte Carlo replications.
    #[arg(long)]
    reps: Option<usize>,
    /// Discretization size (maximum size for disc-curve).
    #[arg(long)]
    states: Option<usize>,
    /// Solver tolerance (pricing, or the wealth-consumption solver for solve-wc).
    #[arg(long)]
    tol: Option<f64>,
    /// Previously solved wealth-consumption ratio (CSV from solve-wc) for EZ models.
    #[arg(long)]
    wc: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct TableArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated path lengths.
    #[arg(long = "n-list", value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    /// Comma-separated path counts.
    #[arg(long = "m-list", value_delimiter = ',')]
    m_list: Option<Vec<usize>>,
}

/// Failure carrying the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Instability { .. } => 2,
            Error::Indeterminate { .. } | Error::Convergence { .. } => 3,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Stable => 0,
        Verdict::Unstable => 2,
        Verdict::Indeterminate => 3,
    }
}

/// Seven significant decimals, as the reference tables print exponents.
fn fmt7(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-4 {
        format!("{x:.6e}")
    } else {
        format!("{x:.7}")
    }
}

fn load(common: &Common, default: Option<ModelSpec>) -> Result<RunConfig, Failure> {
    let mut cfg = match (&common.config, default) {
        (Some(path), _) => RunConfig::from_path(path)?,
        (None, Some(model)) => RunConfig::new(model),
        (None, None) => return Err(usage("--config <path> is required for this command")),
    };
    if let Some(m) = &common.method {
        cfg.method = Some(m.parse()?);
    }
    let mc = &mut cfg.eval.mc;
    if let Some(s) = common.seed {
        mc.seed = s;
    }
    if let Some(t) = common.threads {
        mc.workers = t;
    }
    if let Some(n) = common.n {
        mc.n = n;
    }
    if let Some(m) = common.m {
        mc.m = m;
    }
    if let Some(r) = common.reps {
        mc.replications = r;
    }
    if let Some(s) = common.states {
        cfg.eval.n_states = s;
    }
    if let Some(t) = common.tol {
        cfg.pricing.tol = t;
        cfg.eval.wc.tol = t;
    }
    if let Some(o) = &common.out {
        cfg.output = Some(o.clone());
    }
    Ok(cfg)
}

fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> sdfstab::Result<()>) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| Failure::from(Error::Io(format!("{}: {e}", p.display()))))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush().map_err(|e| Failure::from(Error::from(e)))?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
        }
    }
    Ok(())
}

fn default_method(model: &ModelSpec) -> Method {
    if model.has_closed_form() {
        Method::Analytic
    } else if matches!(model, ModelSpec::FiniteCrra(_)) {
        Method::Spectral
    } else {
        Method::MonteCarlo
    }
}

fn cmd_lphi(common: &Common) -> Result<u8, Failure> {
    let cfg = load(common, None)?;
    let method = cfg.method.unwrap_or_else(|| default_method(&cfg.model));
    let wc = match &common.wc {
        Some(p) => Some(io::read_wc(File::open(p).map_err(|e| Failure::from(Error::Io(format!("{}: {e}", p.display()))))?)?),
        None => None,
    };
    if let Some(w) = &wc {
        if !w.matches(&cfg.model) {
            return Err(Error::Precondition("the --wc solution was computed for different parameters".into()).into());
        }
    }
    let report = evaluate(&cfg.model, method, &cfg.eval, wc.as_ref())?;
    println!("model: {}", cfg.model.family());
    println!("method: {}", report.method);
    if report.method == Method::MonteCarlo {
        let mc = &cfg.eval.mc;
        println!("n: {}  m: {}  replications: {}  seed: {}", mc.n, mc.m, mc.replications, mc.seed);
    }
    println!("lphi: {}", fmt7(report.lphi));
    if let Some(se) = report.std_error {
        println!("std_error: {}", fmt7(se));
    }
    println!("{}", report.verdict());
    if let Some(path) = &cfg.output {
        with_output(Some(path), |w| io::write_report(w, &report))?;
    }
    Ok(verdict_code(report.verdict()))
}

fn cmd_solve(common: &Common) -> Result<u8, Failure> {
    let cfg = load(common, None)?;
    let d = cfg.model.discretize(cfg.eval.n_states)?;
    let v = ValuationMatrix::from_discrete(&d)?.scaled(cfg.scale)?;
    let problem = PricingProblem::price_dividend(v)?;
    let sol = solve_markov_solution(&problem, cfg.pricing)?;
    eprintln!(
        "converged in {} iterations, residual {:.3e}, ln r(V) = {}",
        sol.iterations,
        sol.residual,
        fmt7(sol.log_spectral_radius)
    );
    with_output(cfg.output.as_deref(), |w| io::write_pricing(w, d.chain.states(), &sol.h_star))?;
    Ok(0)
}

fn cmd_solve_wc(common: &Common) -> Result<u8, Failure> {
    let cfg = load(common, None)?;
    let grid = cfg
        .eval
        .wc_grid_for(&cfg.model)
        .ok_or_else(|| usage(format!("solve-wc needs ez_by or ez_ssy, not {}", cfg.model.family())))?;
    let sol = solve_wealth_consumption(&cfg.model, &grid, &cfg.eval.wc)?;
    eprintln!("converged in {} iterations, residual {:.3e}, {} grid points", sol.iterations, sol.residual, sol.log_w.len());
    with_output(cfg.output.as_deref(), |w| io::write_wc(w, &sol))?;
    Ok(0)
}

fn cmd_table1(args: &TableArgs) -> Result<u8, Failure> {
    let mut common = args.common.clone();
    if common.reps.is_none() {
        common.reps = Some(1000);
    }
    let cfg = load(&common, Some(ModelSpec::CrraCv(CrraCvParams::benchmark())))?;
    let ModelSpec::CrraCv(params) = cfg.model else {
        return Err(usage("table1 needs a crra_cv model"));
    };
    let n_list = args.n_list.clone().unwrap_or_else(|| TABLE1_N.to_vec());
    let m_list = args.m_list.clone().unwrap_or_else(|| TABLE1_M.to_vec());
    let mc = &cfg.eval.mc;
    let cells = run_table1(&params, &n_list, &m_list, mc.replications, mc.seed, mc.workers)?;
    with_output(cfg.output.as_deref(), |w| io::write_table1(w, &cells))?;
    Ok(0)
}

fn cmd_disc_curve(common: &Common) -> Result<u8, Failure> {
    let cfg = load(common, Some(ModelSpec::CrraCv(CrraCvParams::benchmark())))?;
    let n_max = common.states.unwrap_or(25);
    let points = discretization_curve(&cfg.model, n_max)?;
    with_output(cfg.output.as_deref(), |w| io::write_disc_curve(w, &points))?;
    Ok(0)
}

fn cmd_sweep(common: &Common) -> Result<u8, Failure> {
    let cfg = load(common, None)?;
    let method = cfg.method.unwrap_or_else(|| default_method(&cfg.model));
    let (x, y) = cfg.sweep.clone().unwrap_or_else(|| SweepSpec::default_axes(&cfg.model));
    let mut spec = SweepSpec::new(cfg.model.clone(), x, y, method);
    spec.seed = cfg.eval.mc.seed;
    spec.workers = cfg.eval.mc.workers;
    spec.eval = cfg.eval.clone();
    let result = run_sweep(&spec)?;
    let fixed: Vec<(String, String)> = cfg
        .model
        .param_names()
        .iter()
        .filter(|p| **p != spec.x.name && **p != spec.y.name)
        .filter_map(|p| cfg.model.get_param(p).map(|v| (p.to_string(), v.to_string())))
        .collect();
    with_output(cfg.output.as_deref(), |w| io::write_sweep(w, &result, &fixed))?;
    let failed = result.cells.iter().filter(|c| !c.lphi.is_finite()).count();
    if failed > 0 {
        eprintln!("{failed} of {} cells failed; see the status column", result.cells.len());
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Lphi(c) => cmd_lphi(c),
        Command::Solve(c) => cmd_solve(c),
        Command::SolveWc(c) => cmd_solve_wc(c),
        Command::Table1(a) => cmd_table1(a),
        Command::DiscCurve(c) => cmd_disc_curve(c),
        Command::Sweep(c) => cmd_sweep(c),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            if f.code == 2 {
                println!("{}", Verdict::Unstable);
            } else if f.code == 3 {
                println!("{}", Verdict::Indeterminate);
            }
            ExitCode::from(f.code)
        }
    }
}
