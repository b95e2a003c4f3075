use proptest::prelude::*;

use meal_core::envelope::{EnvelopeContext, IterateState, PenaltyPlan, SubproblemSolver};
use meal_core::penalty;
use meal_core::problem::{LinearConstraint, Problem, QuadraticForm, SmoothFunction};
use meal_core::prox::{self, ProxFunction};
use meal_core::solvers;
use meal_core::{Matrix, Vector};

fn scalar_kinds() -> impl Strategy<Value = (ProxFunction, f64)> {
    prop_oneof![
        (0.0..3.0f64).prop_map(|w| (ProxFunction::l1(w).unwrap(), 10.0)),
        (0.1..2.0f64, 2.2..5.0f64).prop_map(|(l, a)| (ProxFunction::scad(l, a).unwrap(), 0.95 * (a - 1.0))),
        (0.1..2.0f64, 0.5..5.0f64).prop_map(|(l, a)| (ProxFunction::mcp(l, a).unwrap(), 0.95 * a)),
        (-3.0..0.0f64, 0.0..3.0f64)
            .prop_map(|(lo, hi)| (ProxFunction::box_indicator(vec![lo], vec![hi]).unwrap(), 10.0)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn scalar_prox_is_monotone((g, gmax) in scalar_kinds(), frac in 0.01..1.0f64, u in -8.0..8.0f64, d in 0.0..4.0f64) {
        let gamma = frac * gmax;
        let p = |v: f64| g.prox(gamma, &Vector::from_element(1, v)).unwrap()[0];
        prop_assert!(p(u + d) >= p(u) - 1e-12);
    }

    #[test]
    fn scalar_prox_beats_nearby_points((g, gmax) in scalar_kinds(), frac in 0.01..1.0f64, v in -8.0..8.0f64, t in -8.0..8.0f64) {
        let gamma = frac * gmax;
        let obj = |x: f64| g.coordinate_value(0, x).unwrap() + (x - v).powi(2) / (2.0 * gamma);
        let p = g.prox(gamma, &Vector::from_element(1, v)).unwrap()[0];
        prop_assert!(obj(p) <= obj(t) + 1e-10);
    }

    #[test]
    fn soft_threshold_is_odd(v in -10.0..10.0f64, t in 0.0..5.0f64) {
        prop_assert_eq!(prox::soft_threshold(-v, t), -prox::soft_threshold(v, t));
    }

    #[test]
    fn beta_inverts_alpha(alpha in 1e-3..10.0f64, gamma in 0.05..2.0f64, eta in 0.05..1.95f64, c in 1e-3..4.0f64) {
        let beta = penalty::beta_for_target_alpha(alpha, gamma, eta, c).unwrap();
        let back = penalty::alpha_from_beta(gamma, eta, beta, beta, c);
        // β carries a relative safety margin, so α lands just below the target
        prop_assert!(back <= alpha * (1.0 + 1e-12));
        prop_assert!(back >= alpha * (1.0 - 1e-5));
    }

    #[test]
    fn meal_fixed_points_are_kkt_points(seed in 0u64..1000) {
        let mut rng = meal_core::rng::UniformStream::new(seed);
        let n = 4;
        let g = rng.matrix(n, n).map(|t| 2.0 * t - 1.0);
        let q = g.transpose() * &g + Matrix::identity(n, n);
        let r = rng.vector(n);
        let a = rng.matrix(2, n);
        let b = rng.vector(2);
        let c = LinearConstraint::new(a.clone(), b.clone()).unwrap();
        let p = Problem::composite(c, SmoothFunction::Quadratic(QuadraticForm::new(q.clone(), r.clone(), 0.0).unwrap()), ProxFunction::zero()).unwrap();
        // KKT system [Q Aᵀ; A 0][x; λ] = [-r; b]
        let mut kkt = Matrix::zeros(n + 2, n + 2);
        kkt.view_mut((0, 0), (n, n)).copy_from(&q);
        kkt.view_mut((0, n), (n, 2)).copy_from(&a.transpose());
        kkt.view_mut((n, 0), (2, n)).copy_from(&a);
        let rhs = Vector::from_iterator(n + 2, (-&r).iter().copied().chain(b.iter().copied()));
        let sol = kkt.lu().solve(&rhs).unwrap();
        let x = sol.rows(0, n).into_owned();
        let lambda = sol.rows(n, 2).into_owned();
        let plan = PenaltyPlan::fixed(10.0, 0.5 / p.rho_total(), 1.0).unwrap();
        let ctx = EnvelopeContext::new(&p, plan, SubproblemSolver::DirectQP).unwrap();
        let state = IterateState::new(x.clone(), x.clone(), lambda.clone());
        let (next, report, _) = solvers::meal_step(&ctx, &state).unwrap();
        prop_assert!((&next.x - &x).norm() < 1e-8);
        prop_assert!((&next.lambda - &lambda).norm() < 1e-8);
        prop_assert!(report.stationarity_norm < 1e-8);
    }
}
