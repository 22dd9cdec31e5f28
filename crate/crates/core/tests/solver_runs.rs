use blockfw_core::diagnostics::{diagnose, identification_iteration, rate_fit, strict_complementarity};
use blockfw_core::domain::block_is_feasible;
use blockfw_core::globalopt::{mbh_run, perturb, MbhConfig};
use blockfw_core::problems::{gen_multistqp, gen_multistqp_with, MultiStqpParams};
use blockfw_core::rng::Stream;
use blockfw_core::solver::{run, Algorithm, RunTermination, Solver, StepOutcome};
use blockfw_core::{BlockLayout, BlockVector, Method, ProductSimplexDomain, QuadraticProblem, SolverConfig, Strategy};
use proptest::prelude::*;

/// Block-diagonal positive definite quadratic on `(Δ^5)^4` whose minimizer
/// is the interior point `center`.
fn strongly_convex_fixture() -> (QuadraticProblem, Vec<f64>) {
    let layout = BlockLayout::uniform(5, 4).unwrap();
    let n = 20;
    let mut a = vec![0.0; n * n];
    for i in 0..4 {
        for r in 0..5 {
            for c in 0..5 {
                let (gr, gc) = (5 * i + r, 5 * i + c);
                a[gr * n + gc] = if r == c { 2.0 + r as f64 * 0.5 + i as f64 } else { 0.3 / (1.0 + (r + c) as f64) };
            }
        }
    }
    let center: Vec<f64> = (0..4)
        .flat_map(|i| {
            let raw: Vec<f64> = (0..5).map(|j| 1.0 + ((i * 5 + j) % 3) as f64).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(move |v| v / s)
        })
        .collect();
    (QuadraticProblem::from_shifted_quadratic(layout, &a, &center).unwrap(), center)
}

fn config(strategy: Strategy, method: Method, use_ssc: bool) -> SolverConfig {
    SolverConfig { strategy, method, use_ssc, ..SolverConfig::default() }
}

fn assert_monotone_and_feasible(problem: &QuadraticProblem, result: &blockfw_core::RunResult) {
    assert!(result.max_increase() <= 1e-10, "f increased by {}", result.max_increase());
    let x = &result.final_point;
    for i in 0..problem.layout().num_blocks() {
        assert!(block_is_feasible(x.block(i)));
    }
}

#[test]
fn strongly_convex_run_reaches_the_minimizer() {
    let (p, center) = strongly_convex_fixture();
    let x0 = ProductSimplexDomain::new(p.layout().clone()).barycenter();
    for alg in Algorithm::ALL {
        let cfg = SolverConfig { tol: 1e-9, ..alg.config() };
        let r = run(&p, x0.clone(), &cfg).unwrap();
        assert_eq!(r.termination, RunTermination::Stationary, "{}", alg.id());
        assert!(r.trajectory.last().unwrap().max_gap <= 1e-9);
        assert_monotone_and_feasible(&p, &r);
        if alg.use_ssc() {
            let dist: f64 = r.final_point.as_slice().iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum();
            assert!(dist.sqrt() <= 1e-5, "{}: distance {}", alg.id(), dist.sqrt());
        }
    }
}

#[test]
fn zero_objective_is_stationary_at_start() {
    let layout = BlockLayout::uniform(3, 2).unwrap();
    let p = QuadraticProblem::new(layout.clone(), vec![0.0; 36]).unwrap();
    let r = run(&p, ProductSimplexDomain::new(layout).barycenter(), &SolverConfig::default()).unwrap();
    assert_eq!(r.termination, RunTermination::Stationary);
    assert_eq!(r.iterations(), 0);
    assert_eq!(r.trajectory.len(), 1);
    assert_eq!(r.trajectory[0].block_updates, 0);
}

#[test]
fn gradient_accounting_is_exact() {
    let p = gen_multistqp(8, 5, 3).unwrap();
    let x0 = ProductSimplexDomain::new(p.layout().clone()).barycenter();
    for (alg, per_iter) in [(Algorithm::GsafwSsc, 5), (Algorithm::PafwSsc, 5), (Algorithm::BcafwSsc, 1), (Algorithm::Bcfw, 1)] {
        let cfg = SolverConfig { max_iter: 40, ..alg.config() };
        let r = run(&p, x0.clone(), &cfg).unwrap();
        for row in &r.trajectory {
            assert_eq!(row.grad_evals, per_iter * row.k as u64, "{}", alg.id());
        }
    }
}

#[test]
fn budget_is_never_exceeded() {
    let p = gen_multistqp(8, 5, 3).unwrap();
    let x0 = ProductSimplexDomain::new(p.layout().clone()).barycenter();
    for alg in Algorithm::ALL {
        for budget in [1u64, 4, 5, 37, 100] {
            let cfg = SolverConfig { max_grad_evals: Some(budget), ..alg.config() };
            let r = run(&p, x0.clone(), &cfg).unwrap();
            assert!(r.grad_evals() <= budget, "{} spent {} of {}", alg.id(), r.grad_evals(), budget);
            assert_ne!(r.termination, RunTermination::MaxIterations);
        }
    }
}

#[test]
fn unselected_blocks_do_not_move() {
    let p = gen_multistqp(6, 4, 9).unwrap();
    let x0 = ProductSimplexDomain::new(p.layout().clone()).barycenter();
    for alg in [Algorithm::Bcfw, Algorithm::BcafwSsc, Algorithm::GsafwSsc] {
        let mut solver = Solver::new(&p, x0.clone(), alg.config()).unwrap();
        for _ in 0..30 {
            let before = solver.point().clone();
            if let StepOutcome::Stop(_) = solver.outer_step().unwrap() {
                break;
            }
            let after = solver.point();
            let changed: Vec<usize> = (0..4)
                .filter(|&i| before.block(i).iter().zip(after.block(i)).any(|(a, b)| a.to_bits() != b.to_bits()))
                .collect();
            assert!(changed.len() <= 1, "{}: blocks {changed:?} changed", alg.id());
        }
    }
}

#[test]
fn random_selection_frequency() {
    // a problem that never becomes stationary within the run: a single FW
    // step per iteration on a large block keeps every block gap positive
    let p = gen_multistqp(40, 4, 1).unwrap();
    let x0 = ProductSimplexDomain::new(p.layout().clone()).barycenter();
    let cfg = SolverConfig { max_iter: 10_000, tol: 0.0, ..Algorithm::Bcfw.config() };
    let mut solver = Solver::new(&p, x0, cfg).unwrap();
    let mut counts = [0usize; 4];
    let mut prev = solver.point().clone();
    let mut iterations = 0;
    while let StepOutcome::Continue = solver.outer_step().unwrap() {
        iterations += 1;
        let cur = solver.point();
        for (i, c) in counts.iter_mut().enumerate() {
            if prev.block(i) != cur.block(i) {
                *c += 1;
            }
        }
        prev = cur.clone();
    }
    // blocks can also stay put when their step is zero; count selections through moves
    let moved: usize = counts.iter().sum();
    assert!(moved as f64 > 0.9 * iterations as f64, "{moved} moves in {iterations} iterations");
    for c in counts {
        assert!((c as f64 / moved as f64 - 0.25).abs() < 0.02, "{counts:?}");
    }
}

#[test]
fn single_block_strategies_agree_bitwise() {
    let p = gen_multistqp(12, 1, 4).unwrap();
    let x0 = ProductSimplexDomain::new(p.layout().clone()).barycenter();
    let runs: Vec<_> = [Strategy::Parallel, Strategy::Random, Strategy::GaussSouthwell]
        .into_iter()
        .map(|s| run(&p, x0.clone(), &SolverConfig { seed: 17, ..config(s, Method::Afw, true) }).unwrap())
        .collect();
    for r in &runs[1..] {
        assert_eq!(r.trajectory, runs[0].trajectory);
        assert_eq!(r.final_point, runs[0].final_point);
    }
}

#[test]
fn sufficient_decrease_is_checked_on_every_chain() {
    for seed in 0..5 {
        let p = gen_multistqp(10, 4, seed).unwrap();
        let mut rng = Stream::new(seed);
        let x0 = ProductSimplexDomain::new(p.layout().clone()).sample_uniform(&mut rng);
        for alg in Algorithm::ALL.into_iter().filter(|a| a.use_ssc()) {
            let cfg = SolverConfig { check_descent: true, max_iter: 500, ..alg.config() };
            let r = run(&p, x0.clone(), &cfg).unwrap();
            assert!(r.max_descent_slack <= 1e-9, "{}: slack {}", alg.id(), r.max_descent_slack);
            assert!(r.max_descent_slack > f64::NEG_INFINITY);
            assert_eq!(r.ssc_cap_hits, 0);
        }
    }
}

#[test]
fn rate_fit_is_contracting_on_the_fixture() {
    let (p, _) = strongly_convex_fixture();
    let x0 = ProductSimplexDomain::new(p.layout().clone()).barycenter();
    let r = run(&p, x0, &SolverConfig { tol: 1e-12, ..Algorithm::PafwSsc.config() }).unwrap();
    let grad = p.eval_grad(&r.final_point).unwrap();
    let d = diagnose(&r, &grad);
    let fit = d.rate.expect("long enough run");
    assert!(fit.q_hat < 1.0);
    // interior minimizer: full support, identified from the start
    assert_eq!(d.final_l0, 20);
    assert_eq!(d.k_id, Some(0));
}

#[test]
fn identification_and_complementarity_agree_on_a_converged_run() {
    let p = gen_multistqp(10, 3, 21).unwrap();
    let x0 = ProductSimplexDomain::new(p.layout().clone()).barycenter();
    let r = run(&p, x0, &SolverConfig { tol: 1e-10, ..Algorithm::PafwSsc.config() }).unwrap();
    assert_eq!(r.termination, RunTermination::Stationary);
    let grad = p.eval_grad(&r.final_point).unwrap();
    // multipliers use grad f, the solver works with g = -grad f
    let sc = strict_complementarity(&r.final_point, &grad, 1e-6);
    let k = identification_iteration(&r.supports);
    if sc.iter().all(|&b| b) {
        let k = k.expect("support settles under strict complementarity");
        assert!(k <= r.supports.len() / 2 + 1);
    }
}

#[test]
fn rate_fit_of_a_noisy_geometric_sequence() {
    let mut rng = Stream::new(5);
    let gaps: Vec<f64> = (0..80).map(|k| 0.8f64.powi(k) * (1.0 + 0.01 * rng.normal())).collect();
    let fit = rate_fit(&gaps).unwrap();
    assert!((fit.q_hat - 0.8).abs() < 1e-3);
    assert!(fit.r_squared > 0.999);
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

/// `l = 3` has no admissible clique size, so the fixture fixes `p = 0.5`.
fn small_fixture() -> QuadraticProblem {
    gen_multistqp_with(&MultiStqpParams { edge_probability: Some(0.5), ..MultiStqpParams::new(3, 2, 7) }).unwrap()
}

// Golden values recorded from this implementation and frozen.
const FIXTURE_F: [u64; 2] = [0xbfd51d4ef853774f, 0xbfd928e1a00b59cd];
const FIXTURE_X1: [u64; 6] = [
    0x3fd05845305afb80, 0x3fd05845305afb80, 0x3fdf4f759f4a08ff,
    0x3fd6fc573419f523, 0x3fd2075197cc15bc, 0x3fd6fc573419f523,
];

#[test]
fn one_step_fixture() {
    let p = small_fixture();
    let x0 = ProductSimplexDomain::new(p.layout().clone()).barycenter();
    let cfg = SolverConfig { max_iter: 1, ..Algorithm::PafwSsc.config() };
    let r = run(&p, x0, &cfg).unwrap();
    let f: Vec<f64> = r.trajectory.iter().map(|row| row.f).collect();
    if std::env::var_os("BLOCKFW_PRINT_FIXTURES").is_some() {
        println!("f {:#018x?}", bits(&f));
        println!("x1 {:#018x?}", bits(r.final_point.as_slice()));
    }
    assert_eq!(bits(&f), FIXTURE_F);
    assert_eq!(bits(r.final_point.as_slice()), FIXTURE_X1);
    assert_eq!(p.eval_f(&r.final_point).unwrap(), f[1]);
    assert!(f[1] < f[0]);
}

const MBH_INCUMBENTS: [u64; 10] = [
    0xbfe2ef26e070f1e9, 0xbfe4fe28b941dd6f, 0xbfe4fe28b941dd6f, 0xbfe4fe28b941dd6f, 0xbfe4fe28b941dd6f,
    0xbfe4fe28b941dd6f, 0xbfe4fe28b941dd6f, 0xbfe4fe28b941dd6f, 0xbfe4fe28b941dd6f, 0xbfe4fe28b941dd6f,
];

#[test]
fn mbh_fixture() {
    let p = gen_multistqp(5, 3, 11).unwrap();
    let cfg = MbhConfig::new(Algorithm::BcafwSsc.config(), 11);
    let a = mbh_run(&p, &cfg).unwrap();
    let b = mbh_run(&p, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.lo_calls, 10);
    assert_eq!(a.incumbents.len(), 10);
    assert!(a.incumbents.windows(2).all(|w| w[1] <= w[0]));
    for (inc, local) in a.incumbents.iter().zip(&a.local_values) {
        assert!(inc <= local);
    }
    if std::env::var_os("BLOCKFW_PRINT_FIXTURES").is_some() {
        println!("mbh {:#018x?}", bits(&a.incumbents));
    }
    assert_eq!(bits(&a.incumbents), MBH_INCUMBENTS);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn runs_are_monotone_and_feasible(seed in any::<u64>(), alg in 0usize..6, l in 4usize..9, m in 1usize..5) {
        let p = gen_multistqp(l, m, seed).unwrap();
        let mut rng = Stream::new(seed);
        let x0 = ProductSimplexDomain::new(p.layout().clone()).sample_uniform(&mut rng);
        let cfg = SolverConfig { max_iter: 300, seed, ..Algorithm::ALL[alg].config() };
        let mut solver = Solver::new(&p, x0, cfg).unwrap();
        loop {
            let x = solver.point();
            for i in 0..m {
                prop_assert!(block_is_feasible(x.block(i)));
            }
            if let StepOutcome::Stop(_) = solver.outer_step().unwrap() {
                break;
            }
        }
        let r = solver.finish(RunTermination::Stationary);
        prop_assert!(r.max_increase() <= 1e-10);
    }

    #[test]
    fn perturbation_stays_in_the_neighborhood(seed in any::<u64>(), gamma in 0.01f64..=1.0) {
        let layout = BlockLayout::uniform(6, 3).unwrap();
        let domain = ProductSimplexDomain::new(layout);
        let mut rng = Stream::new(seed);
        let x = domain.sample_uniform(&mut rng);
        let y = perturb(&x, gamma, &mut rng);
        prop_assert!(domain.contains(&y));
        // y = x + gamma (z - x), so (y - x) / gamma + x lies on the domain
        let z: Vec<f64> = y.as_slice().iter().zip(x.as_slice()).map(|(a, b)| b + (a - b) / gamma).collect();
        let z = BlockVector::new(domain.layout().clone(), z).unwrap();
        for i in 0..3 {
            prop_assert!(z.block(i).iter().all(|&v| v >= -1e-9));
            prop_assert!((z.block(i).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}

