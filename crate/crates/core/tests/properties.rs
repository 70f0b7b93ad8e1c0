//! Property tests for the solver, prox maps, certificates, problems and the
//! sparse layer.

use proptest::prelude::*;

use ipiano_core::diagnostics::{fmt17, lyapunov_certificate, proximal_residual};
use ipiano_core::experiments::{certify, RuleKind};
use ipiano_core::linalg::{dist, dot, norm};
use ipiano_core::objective::Quadratic;
use ipiano_core::problems::{
    add_noise, salt_pepper_count, CompressionModel, MrfPrior, NoiseSpec, ToyProblem,
};
use ipiano_core::prox::{prox_l1, prox_shifted_l1, prox_weighted_quadratic, L1Norm, Zero};
use ipiano_core::solver::ipiano_step;
use ipiano_core::sparse::{assemble_laplacian, assemble_system, SparseLu};
use ipiano_core::{Composite, Image, Objective, SmoothTerm, Solver, SolverState, StepRule, StopCriterion};

const C1: f64 = 1e-8;
const C2: f64 = 1e-6;

fn rule_kind() -> impl Strategy<Value = RuleKind> {
    prop::sample::select(RuleKind::ALL.to_vec())
}

fn vec_in(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, n)
}

fn toy_run(kind: RuleKind, beta: f64, x0: Vec<f64>, iters: usize, keep: bool) -> (StepRule, ipiano_core::Solution) {
    let prob = ToyProblem::default();
    let rule = kind.build(beta, prob.lipschitz(), 1.0).unwrap();
    let sol = Solver::new(rule.clone())
        .stop(StopCriterion::iterations(iters).with_residual(1e-10))
        .keep_iterates(keep)
        .solve(&prob.objective(), x0)
        .unwrap();
    (rule, sol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Step-parameter laws, from the trace alone.
    #[test]
    fn step_parameters_obey_rule_laws(
        kind in rule_kind(),
        beta in 0.0..0.95f64,
        x0 in vec_in(2, -3.0, 4.0),
    ) {
        let (_, sol) = toy_run(kind, beta, x0, 400, false);
        let r = &sol.trace.records;
        for (n, rec) in r.iter().enumerate() {
            let round = 1e-12 * (1.0 / rec.alpha + rec.lipschitz);
            prop_assert!(rec.delta + round >= rec.gamma, "n={n}: {rec:?}");
            prop_assert!(rec.gamma + round >= C2, "n={n}: {rec:?}");
            prop_assert!(rec.alpha >= C1);
            prop_assert!((0.0..1.0).contains(&rec.beta));
            if n > 0 && kind != RuleKind::Lazy {
                prop_assert!(rec.delta <= r[n - 1].delta + round, "n={n}: {} > {}", rec.delta, r[n - 1].delta);
            }
        }
    }

    // The descent inequality holds at every accepted (L_n, x^{n+1}).
    #[test]
    fn backtracking_acceptance_holds(
        kind in prop::sample::select(vec![RuleKind::Backtracking, RuleKind::Lazy, RuleKind::General]),
        beta in 0.0..0.9f64,
        x0 in vec_in(2, -3.0, 4.0),
    ) {
        let prob = ToyProblem::default();
        let smooth = prob.smooth();
        let (_, sol) = toy_run(kind, beta, x0, 200, true);
        let xs = sol.trace.iterates.as_ref().unwrap();
        for (n, rec) in sol.trace.records.iter().enumerate() {
            let (x, x_next) = (&xs[n], &xs[n + 1]);
            let f = smooth.value(x).unwrap();
            let g = smooth.gradient(x).unwrap();
            let d: Vec<f64> = x_next.iter().zip(x).map(|(a, b)| a - b).collect();
            let bound = f + dot(&g, &d) + 0.5 * rec.lipschitz * dot(&d, &d);
            let slack = bound - smooth.value(x_next).unwrap();
            prop_assert!(slack >= -1e-12 * (1.0 + f.abs()), "n={n}: slack {slack:e}");
        }
    }

    #[test]
    fn lazy_from_true_constant_matches_constant_rule(
        beta in 0.0..0.95f64,
        scale in 1.0..10.0f64,
        x0 in vec_in(2, -3.0, 4.0),
    ) {
        let prob = ToyProblem::default();
        let obj = prob.objective();
        let l = scale * prob.lipschitz();
        let stop = StopCriterion::iterations(200);
        let lazy = Solver::new(StepRule::lazy(beta, l).relaxed(1.0)).stop(stop).solve(&obj, x0.clone()).unwrap();
        let constant = Solver::new(StepRule::constant(beta, l)).stop(stop).solve(&obj, x0).unwrap();
        prop_assert_eq!(lazy.trace.total_backtracks(), 0);
        prop_assert_eq!(&lazy.trace.records, &constant.trace.records);
        prop_assert_eq!(lazy.x, constant.x);
    }

    #[test]
    fn runs_are_deterministic(kind in rule_kind(), beta in 0.0..0.9f64, x0 in vec_in(2, -3.0, 4.0)) {
        let (_, a) = toy_run(kind, beta, x0.clone(), 300, false);
        let (_, b) = toy_run(kind, beta, x0, 300, false);
        prop_assert_eq!(a.trace.to_csv(), b.trace.to_csv());
        prop_assert_eq!(a.x, b.x);
    }

    // β = 0 is forward-backward; g ≡ 0 is the heavy-ball update.
    #[test]
    fn step_special_cases_are_exact(
        x in vec_in(4, -5.0, 5.0),
        x_prev in vec_in(4, -5.0, 5.0),
        center in vec_in(4, -5.0, 5.0),
        alpha in 0.01..1.0f64,
        beta in 0.0..0.99f64,
        lambda in 0.0..2.0f64,
    ) {
        let f = Quadratic::new(center, 1.7);
        let fb = Composite::new(f.clone(), L1Norm::new(lambda));
        let state = SolverState::new(&fb, x.clone()).unwrap();
        let grad = f.gradient(&x).unwrap();
        let next = ipiano_step(&state, &fb, alpha, 0.0).unwrap();
        let forward: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a - alpha * g).collect();
        prop_assert_eq!(&next.x_curr, &prox_l1(&forward, alpha * lambda).unwrap());

        let hb = Composite::new(f, Zero);
        let mut state = SolverState::new(&hb, x.clone()).unwrap();
        state.x_prev = x_prev.clone();
        let next = ipiano_step(&state, &hb, alpha, beta).unwrap();
        let heavy: Vec<f64> = x
            .iter()
            .zip(&grad)
            .zip(&x_prev)
            .map(|((a, g), p)| a - alpha * g + beta * (a - p))
            .collect();
        prop_assert_eq!(next.x_curr, heavy);
    }

    // Certificates and the summed step bound Σ Δ_n² ≤ h(x^0)/c2.
    #[test]
    fn toy_runs_certify(kind in rule_kind(), beta in 0.0..0.9f64, x0 in vec_in(2, -3.0, 4.0)) {
        let (rule, sol) = toy_run(kind, beta, x0, 500, true);
        let obj = ToyProblem::default().objective();
        for c in certify(&obj, &sol, &rule).unwrap() {
            prop_assert!(c.satisfied, "{c:?}");
        }
        let steps = sol.trace.step_norms();
        let bound = sol.trace.initial_energy() / rule.c2();
        let mut partial = 0.0;
        for d in steps {
            let next = partial + d * d;
            prop_assert!(next >= partial);
            prop_assert!(next <= bound * (1.0 + 1e-12));
            partial = next;
        }
    }

    #[test]
    fn toy_converges_to_a_local_minimizer(kind in rule_kind(), beta in 0.0..0.9f64, x0 in vec_in(2, -2.0, 3.0)) {
        let prob = ToyProblem::default();
        let (_, sol) = toy_run(kind, beta, x0, 20_000, false);
        let r = norm(&proximal_residual(&sol.x, &prob.objective()).unwrap());
        prop_assert!(r <= 1e-6, "residual {r:e}");
        let nearest = prob
            .stationary_points()
            .iter()
            .map(|m| dist(m, &sol.x))
            .fold(f64::INFINITY, f64::min);
        prop_assert!(nearest <= 1e-4, "{:?} is {nearest:e} from every minimizer", sol.x);
    }

    // Δ_n → 0 over a fixed horizon. Cutting runs at a residual tolerance can
    // put a late saddle escape into the last tenth.
    #[test]
    fn step_lengths_decay(kind in rule_kind(), beta in 0.0..0.9f64, x0 in vec_in(2, -2.0, 3.0)) {
        let prob = ToyProblem::default();
        let rule = kind.build(beta, prob.lipschitz(), 1.0).unwrap();
        let sol = Solver::new(rule)
            .stop(StopCriterion::iterations(5000))
            .solve(&prob.objective(), x0)
            .unwrap();
        let steps = sol.trace.step_norms();
        let k = steps.len() / 10;
        let first: f64 = steps[..k].iter().sum::<f64>() / k as f64;
        let last: f64 = steps[steps.len() - k..].iter().sum::<f64>() / k as f64;
        prop_assert!(last <= 0.1 * first, "first {first:e}, last {last:e}");
    }

    // Firm non-expansiveness: ‖P(x) − P(y)‖² ≤ ⟨P(x) − P(y), x − y⟩.
    #[test]
    fn prox_maps_are_firmly_nonexpansive(
        x in vec_in(8, -20.0, 20.0),
        y in vec_in(8, -20.0, 20.0),
        u0 in vec_in(8, -20.0, 20.0),
        tau in 0.0..10.0f64,
    ) {
        type Map = Box<dyn Fn(&[f64]) -> Vec<f64>>;
        let u = u0.clone();
        let v = u0.clone();
        let maps: [Map; 3] = [
            Box::new(move |z| prox_l1(z, tau).unwrap()),
            Box::new(move |z| prox_weighted_quadratic(z, &u, tau).unwrap()),
            Box::new(move |z| prox_shifted_l1(z, &v, tau).unwrap()),
        ];
        for p in &maps {
            let (px, py) = (p(&x), p(&y));
            let dp: Vec<f64> = px.iter().zip(&py).map(|(a, b)| a - b).collect();
            let dxy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            prop_assert!(dot(&dp, &dp) <= dot(&dp, &dxy) + 1e-12 * (1.0 + dot(&dxy, &dxy)));
        }
    }

    // (y − p)/τ ∈ ∂‖·‖₁(p), checked through its sign conditions.
    #[test]
    fn prox_l1_optimality(y in vec_in(16, -10.0, 10.0), tau in 1e-3..5.0f64) {
        let p = prox_l1(&y, tau).unwrap();
        for (&yi, &pi) in y.iter().zip(&p) {
            let s = yi - pi;
            let round = 4.0 * f64::EPSILON * yi.abs().max(tau);
            if pi > 0.0 {
                prop_assert!((s - tau).abs() <= round, "{s} vs {tau}");
            } else if pi < 0.0 {
                prop_assert!((s + tau).abs() <= round, "{s} vs {}", -tau);
            } else {
                prop_assert!(s.abs() <= tau);
            }
        }
    }

    #[test]
    fn laplacian_is_symmetric_and_negative_semidefinite(
        h in 1usize..10,
        w in 1usize..10,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let l = assemble_laplacian(h, w).unwrap();
        let t = l.transpose();
        prop_assert_eq!(l.row_offsets(), t.row_offsets());
        prop_assert_eq!(l.col_indices(), t.col_indices());
        prop_assert_eq!(l.values(), t.values());
        for i in 0..h * w {
            prop_assert!(l.row(i).map(|(_, v)| v).sum::<f64>().abs() <= 1e-14);
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<f64> = (0..h * w).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..h * w).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (lu, lv) = (l.matvec(&u).unwrap(), l.matvec(&v).unwrap());
        prop_assert!((dot(&lu, &v) - dot(&u, &lv)).abs() <= 1e-12 * (1.0 + dot(&lu, &v).abs()));
        prop_assert!(dot(&lu, &u) <= 1e-14);
    }

    #[test]
    fn sparse_solve_meets_tolerance(c in vec_in(64, 0.05, 1.0), b in vec_in(64, -100.0, 100.0)) {
        let l = assemble_laplacian(8, 8).unwrap();
        let a = assemble_system(&c, &l).unwrap();
        let tol = 1e-10;
        let x = SparseLu::new(a.clone()).unwrap().solve(&b, tol).unwrap();
        let ax = a.matvec(&x).unwrap();
        let r: Vec<f64> = ax.iter().zip(&b).map(|(p, q)| p - q).collect();
        prop_assert!(norm(&r) <= tol * norm(&b));
    }

    #[test]
    fn compression_energy_is_nonnegative(c in vec_in(64, -0.5, 1.5)) {
        let img = Image::synthetic(8, 8);
        let model = CompressionModel::new(img.data, 8, 8, 1.0).unwrap();
        match model.value(&c) {
            Ok(f) => prop_assert!(f >= 0.0),
            Err(e) => prop_assert!(e.is_numerical(), "{e}"),
        }
        prop_assert_eq!(model.value(&vec![1.0; 64]).unwrap(), 0.0);
    }

    #[test]
    fn mrf_prior_is_nonnegative(u in vec_in(100, -50.0, 300.0)) {
        let prior = MrfPrior::dct_subset(10, 10, 8).unwrap();
        prop_assert!(prior.value(&u).unwrap() >= 0.0);
    }

    #[test]
    fn lyapunov_holds_for_valid_quadratic_runs(
        center in vec_in(5, -5.0, 5.0),
        weight in 0.1..50.0f64,
        lambda in 0.0..3.0f64,
        beta in 0.0..0.95f64,
        x0 in vec_in(5, -10.0, 10.0),
    ) {
        let obj = Composite::new(Quadratic::new(center, weight), L1Norm::new(lambda));
        let sol = Solver::new(StepRule::constant(beta, weight))
            .stop(StopCriterion::iterations(200))
            .solve(&obj, x0)
            .unwrap();
        prop_assert!(lyapunov_certificate(&sol.trace).satisfied);
        prop_assert!(Objective::value(&obj, &sol.x).unwrap() <= sol.trace.initial_energy() + 1e-12);
    }

    #[test]
    fn csv_numbers_round_trip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(fmt17(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn salt_and_pepper_corrupts_exact_count(fraction in 0.0..1.0f64, seed in any::<u64>()) {
        let u = vec![128.0; 400];
        let noisy = add_noise(&u, NoiseSpec::SaltPepper { fraction }, seed).unwrap();
        let changed = noisy.iter().filter(|&&v| v != 128.0).count();
        prop_assert_eq!(changed, salt_pepper_count(400, fraction));
        prop_assert!(noisy.iter().all(|&v| v == 0.0 || v == 128.0 || v == 255.0));
    }
}
