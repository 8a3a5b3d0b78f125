mod common;

use proptest::prelude::*;
use sdfstab::pricing::{solve_from, solve_markov_solution, PricingProblem, SolverOptions};
use sdfstab::spectral::{
    dense_spectral_radius, integrated_exponent_from_weights, lphi_from_matrix, perron, ValuationMatrix,
};

fn instance(seed: u64, n: usize, shrink: f64) -> ValuationMatrix {
    let mut rng = common::rng(seed);
    let chain = common::random_chain(&mut rng, n);
    let w: Vec<f64> = common::random_weights(&mut rng, n).iter().map(|x| x * shrink).collect();
    ValuationMatrix::from_weights(&chain, &w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stationary_law_is_invariant(seed in any::<u64>(), n in 1usize..12) {
        let mut rng = common::rng(seed);
        let chain = common::random_chain(&mut rng, n);
        let pi = chain.stationary();
        prop_assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let p = chain.transition();
        for j in 0..n {
            let mass: f64 = (0..n).map(|i| pi[i] * p[(i, j)]).sum();
            prop_assert!((mass - pi[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn perron_vector_is_positive_and_matches_dense(seed in any::<u64>(), n in 1usize..12) {
        let v = instance(seed, n, 1.0);
        let res = perron(v.matrix(), Some(v.chain().stationary())).unwrap();
        let dense = dense_spectral_radius(v.matrix()).unwrap();
        prop_assert!((res.radius - dense).abs() < 1e-9 * dense);
        if let Some(vec) = res.vector {
            prop_assert!(vec.iter().all(|x| *x > 0.0));
        }
    }

    // ln r(V) lies between the stationary mean of ln w and ln max w.
    #[test]
    fn exponent_is_bracketed_by_weights(seed in any::<u64>(), n in 1usize..12) {
        let v = instance(seed, n, 1.0);
        let l = lphi_from_matrix(&v).unwrap().lphi;
        let lower = integrated_exponent_from_weights(v.weights(), v.chain().stationary()).unwrap();
        let upper = v.weights().iter().cloned().fold(f64::MIN, f64::max).ln();
        prop_assert!(l >= lower - 1e-10, "{l} < {lower}");
        prop_assert!(l <= upper + 1e-10, "{l} > {upper}");
    }

    #[test]
    fn scaling_shifts_exponent_by_log(seed in any::<u64>(), n in 1usize..10, c in 0.1f64..3.0) {
        let v = instance(seed, n, 1.0);
        let base = lphi_from_matrix(&v).unwrap().lphi;
        let scaled = lphi_from_matrix(&v.scaled(c).unwrap()).unwrap().lphi;
        prop_assert!((scaled - base - c.ln()).abs() < 1e-9);
    }

    // The fixed point does not depend on where the iteration starts.
    #[test]
    fn pricing_fixed_point_is_unique(seed in any::<u64>(), n in 1usize..8, start in 0.0f64..50.0) {
        let v = instance(seed, n, 0.6);
        let problem = PricingProblem::price_dividend(v).unwrap();
        let opts = SolverOptions::default();
        let a = solve_markov_solution(&problem, opts).unwrap();
        let b = solve_from(&problem, &vec![start; n], opts).unwrap();
        prop_assert!(a.converged && b.converged);
        prop_assert!(a.residual < opts.tol && b.residual < opts.tol);
        prop_assert!(a.h_star.iter().all(|h| *h > 0.0));
        let gap = a.h_star.iter().zip(&b.h_star).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let scale = a.h_star.iter().cloned().fold(1.0, f64::max);
        prop_assert!(gap < 1e-7 * scale, "gap {gap}");
    }
}
