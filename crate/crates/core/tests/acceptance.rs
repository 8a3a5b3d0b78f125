//! End-to-end checks of the published numbers and the structural properties.
//! Prints one PASS/FAIL line per criterion and exits non-zero if any fails.
//!
//! Criteria 3 to 5 simulate about 2e10 SDF steps in total and take several
//! minutes on one core.

mod common;

use std::time::{Duration, Instant};

use sdfstab::models::{CrraCvParams, EzByParams, EzSsyParams, ModelSpec};
use sdfstab::montecarlo::{estimate_model, run_table1, McConfig, TABLE1_M, TABLE1_N};
use sdfstab::pricing::{neumann_partial_sum, solve_markov_solution, PricingProblem, SolverOptions};
use sdfstab::recursive::{solve_wealth_consumption, WcGridSpec, WcKind, WcOptions};
use sdfstab::spectral::{
    integrated_exponent_from_weights, lphi_from_matrix, lphi_p_exact, verify_bond_identity, Method, Verdict,
};
use sdfstab::stability::{discretization_curve, evaluate, EvalOptions};
use sdfstab::sweep::{run_sweep, SweepAxis, SweepSpec};
use sdfstab::Error;

// Table 1: means and (sd) by n (rows) and m (columns).
const T1_MEAN: [[f64; 5]; 3] = [
    [-0.0033183, -0.0032524, -0.0032434, -0.0032533, -0.0032353],
    [-0.0032045, -0.0032149, -0.0031948, -0.0031907, -0.0031922],
    [-0.0031985, -0.0031841, -0.0031748, -0.0031784, -0.0031890],
];
const T1_SD: [[f64; 5]; 3] = [
    [0.000099, 0.000065, 0.000056, 0.000047, 0.000042],
    [0.000080, 0.000058, 0.000045, 0.000040, 0.000036],
    [0.000080, 0.000054, 0.000044, 0.000041, 0.000038],
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion_1() -> Outcome {
    let m = ModelSpec::CrraCv(CrraCvParams::benchmark());
    let opts = EvalOptions::default();
    let l = evaluate(&m, Method::Analytic, &opts, None).unwrap().lphi;
    let mut best = Duration::MAX;
    for _ in 0..100 {
        let t = Instant::now();
        std::hint::black_box(evaluate(std::hint::black_box(&m), Method::Analytic, &opts, None).unwrap());
        best = best.min(t.elapsed());
    }
    let printed = format!("{l:.7}");
    let ok = (l - -0.0031545).abs() <= 5e-8 && printed == "-0.0031545" && best < Duration::from_millis(1);
    outcome(ok, format!("L = {l:.10e} (7 s.d.: {printed}), {best:?}"))
}

fn criterion_2() -> Outcome {
    let m = ModelSpec::CrraCv(CrraCvParams::benchmark());
    let t = Instant::now();
    let curve = discretization_curve(&m, 25).unwrap();
    let elapsed = t.elapsed();
    let tail: Vec<_> = curve.iter().filter(|p| p.n_states >= 7).collect();
    let max_err = tail.iter().map(|p| p.abs_error).fold(0.0, f64::max);
    let monotone = tail.windows(2).all(|w| w[1].abs_error <= w[0].abs_error);
    let ok = max_err < 1e-6 && monotone && elapsed < Duration::from_secs(1);
    outcome(ok, format!("max |error| over n = 7..25 is {max_err:.3e}, non-increasing: {monotone}, {elapsed:?}"))
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let cells = run_table1(&CrraCvParams::benchmark(), &TABLE1_N, &TABLE1_M, 1000, 20_240_101, 0).unwrap();
    let mut worst_mean: f64 = 0.0;
    let mut worst_ratio: f64 = 1.0;
    let mut ok = true;
    for (k, c) in cells.iter().enumerate() {
        let (i, j) = (k / 5, k % 5);
        let dm = (c.mean - T1_MEAN[i][j]).abs();
        let ratio = c.sd.unwrap() / T1_SD[i][j];
        worst_mean = worst_mean.max(dm);
        if (ratio.ln()).abs() > worst_ratio.ln().abs() {
            worst_ratio = ratio;
        }
        ok &= dm < 2e-4 && (0.5..=2.0).contains(&ratio);
    }
    outcome(ok, format!("worst |mean - reference| = {worst_mean:.2e}, worst sd ratio = {worst_ratio:.3}, {:?}", t.elapsed()))
}

fn ez_benchmark(model: ModelSpec, kind: WcKind, seed: u64) -> (f64, f64, Duration) {
    let t = Instant::now();
    let wc = solve_wealth_consumption(&model, &WcGridSpec::default_for(kind), &WcOptions::default()).unwrap();
    let cfg = McConfig { n: 1000, m: 10_000, replications: 100, seed, ..Default::default() };
    let e = estimate_model(&model, &cfg, Some(&wc)).unwrap();
    (e.value, e.std_dev.unwrap(), t.elapsed())
}

fn criterion_4() -> Outcome {
    let (mean, sd, dt) = ez_benchmark(ModelSpec::EzBy(EzByParams::benchmark()), WcKind::By, 4);
    let verdict = Verdict::from_exponent(mean);
    let ok = (-0.0059..=-0.0019).contains(&mean) && sd < 0.001 && verdict == Verdict::Stable;
    outcome(ok, format!("mean {mean:.6} sd {sd:.6} over 100 replications, {verdict}, {dt:?}"))
}

fn criterion_5() -> Outcome {
    let (mean, sd, dt) = ez_benchmark(ModelSpec::EzSsy(EzSsyParams::benchmark()), WcKind::Ssy, 5);
    let verdict = Verdict::from_exponent(mean);
    let sd_ok = sd >= 8e-4 / 4.0 && sd <= 8e-4 * 4.0;
    let ok = (-0.0030..=0.0010).contains(&mean) && sd_ok && verdict == Verdict::Stable;
    outcome(ok, format!("mean {mean:.6} sd {sd:.6} over 100 replications, {verdict}, {dt:?}"))
}

fn criterion_6() -> Outcome {
    let mut rng = common::rng(6);
    let mut worst_radius: f64 = 0.0;
    let mut worst_p: f64 = 0.0;
    for k in 0..100 {
        let n = 1 + k % 8;
        let v = common::random_valuation(&mut rng, n);
        let r = v.spectral_radius().unwrap();
        let a1 = lphi_p_exact(&v, 1.0, 600).unwrap().tail();
        let a2 = lphi_p_exact(&v, 2.0, 600).unwrap().tail();
        worst_radius = worst_radius.max((a1.exp() - r).abs());
        worst_p = worst_p.max((a1 - a2).abs());
    }
    let ok = worst_radius < 1e-6 && worst_p < 1e-6;
    outcome(ok, format!("max |exp(a_600) - r(V)| = {worst_radius:.2e}, max |p=1 - p=2| = {worst_p:.2e} over 100 matrices"))
}

fn criterion_7() -> Outcome {
    let mut rng = common::rng(7);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for states in 1..=3 {
        for _ in 0..40 {
            let v = common::random_valuation(&mut rng, states);
            for n in 0..=5 {
                worst = worst.max(verify_bond_identity(&v, n).unwrap());
                cases += 1;
            }
        }
    }
    outcome(worst < 1e-12, format!("max discrepancy {worst:.2e} over {cases} (chain, n) cases"))
}

fn criterion_8() -> Outcome {
    let mut rng = common::rng(8);
    let base = common::random_valuation(&mut rng, 5);
    let r = base.spectral_radius().unwrap();
    let opts = SolverOptions { tol: 1e-10, max_iter: 2_000_000 };

    let mut flips_ok = true;
    let mut summary = Vec::new();
    for i in -10i32..=10 {
        let target = 1.0 + 1e-4 * i as f64;
        let v = base.scaled(target / r).unwrap();
        let problem = PricingProblem::price_dividend(v).unwrap();
        let res = solve_markov_solution(&problem, opts);
        let expected_stable = target.ln() < -1e-8;
        let expected_unstable = target.ln() > 1e-8;
        let ok = match &res {
            Ok(s) => expected_stable && s.converged && s.residual < opts.tol,
            // inside the float band around ln r = 0 either non-convergent outcome is correct
            Err(Error::Indeterminate { .. }) => !expected_stable && !expected_unstable,
            Err(Error::Instability { .. }) if !expected_stable => true,
            Err(_) => false,
        };
        if !ok {
            let got = match &res {
                Ok(s) => format!("converged, residual {:.2e}", s.residual),
                Err(e) => e.kind().to_string(),
            };
            summary.push(format!("c r = {target:.4}: {got}"));
        }
        flips_ok &= ok;
    }

    let mut worst: f64 = 0.0;
    for target in [0.5, 0.8, 0.9, 0.95, 0.97, 0.98] {
        let v = base.scaled(target / r).unwrap();
        let problem = PricingProblem::price_dividend(v).unwrap();
        let s = solve_markov_solution(&problem, opts).unwrap();
        let neumann = neumann_partial_sum(&problem, 2000).unwrap();
        let d = s.h_star.iter().zip(&neumann).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(d);
    }
    let ok = flips_ok && worst < 1e-8;
    let mut detail = format!(
        "verdict flips at c r = 1 on a 1e-4 grid over [0.999, 1.001]: {flips_ok}; max |h* - Neumann(2000)| = {worst:.2e} for c r <= 0.98"
    );
    if !summary.is_empty() {
        detail.push_str(&format!(" ({})", summary.join("; ")));
    }
    outcome(ok, detail)
}

fn criterion_9() -> Outcome {
    let mut rng = common::rng(9);
    let mut min_slack = f64::INFINITY;
    for k in 0..100 {
        let n = 1 + k % 8;
        let chain = common::random_chain(&mut rng, n);
        let w = common::random_weights(&mut rng, n);
        let v = sdfstab::spectral::ValuationMatrix::from_weights(&chain, &w).unwrap();
        let l = lphi_from_matrix(&v).unwrap().lphi;
        let i = integrated_exponent_from_weights(&w, chain.stationary()).unwrap();
        min_slack = min_slack.min(l - i);
    }
    outcome(min_slack >= -1e-12, format!("min(L - I) = {min_slack:.3e} over 100 models"))
}

fn criterion_10() -> Outcome {
    let bits = |xs: &[f64]| xs.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    let mut same = true;

    let by = ModelSpec::EzBy(EzByParams::benchmark());
    let wc = solve_wealth_consumption(&by, &WcGridSpec::default_for(WcKind::By), &WcOptions::default()).unwrap();
    for model in [ModelSpec::CrraCv(CrraCvParams::benchmark()), by.clone()] {
        let run = |workers| {
            let cfg = McConfig { n: 200, m: 500, replications: 6, seed: 10, workers, ..Default::default() };
            estimate_model(&model, &cfg, Some(&wc)).unwrap()
        };
        same &= bits(&run(1).replicates) == bits(&run(8).replicates);
    }

    let t1 = |workers| run_table1(&CrraCvParams::benchmark(), &[50, 100], &[100, 200], 5, 3, workers).unwrap();
    let (a, b) = (t1(1), t1(8));
    same &= a.iter().zip(&b).all(|(x, y)| x.mean.to_bits() == y.mean.to_bits() && x.sd.map(f64::to_bits) == y.sd.map(f64::to_bits));

    let mut spec = SweepSpec::new(by, SweepAxis::new("alpha", 2.0, 4.0, 2), SweepAxis::new("mu_d", 0.001, 0.002, 2), Method::MonteCarlo);
    spec.eval.mc = McConfig { n: 100, m: 200, ..Default::default() };
    spec.seed = 10;
    let sweep = |workers| {
        let mut s = spec.clone();
        s.workers = workers;
        run_sweep(&s).unwrap()
    };
    let (a, b) = (sweep(1), sweep(8));
    same &= bits(&a.cells.iter().map(|c| c.lphi).collect::<Vec<_>>()) == bits(&b.cells.iter().map(|c| c.lphi).collect::<Vec<_>>());

    outcome(same, "Monte Carlo, Table 1 and sweep outputs bitwise equal with 1 and 8 workers".to_string())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("analytic exactness", criterion_1),
        ("discretization accuracy", criterion_2),
        ("Table 1 replication", criterion_3),
        ("BY benchmark", criterion_4),
        ("SSY benchmark", criterion_5),
        ("spectral-radius identity", criterion_6),
        ("bond-price identity", criterion_7),
        ("stability boundary sharpness", criterion_8),
        ("Jensen inequality", criterion_9),
        ("determinism across workers", criterion_10),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let o = f();
        println!("criterion {:>2} {} {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
