//! Property tests of the invariants the numerics rely on.

use hadamard_gap::eigensolve::{rellich_quotient_check, scaling_ratio, ProblemKind, RellichMode};
use hadamard_gap::modelspace::{ct_kappa, radial_laplacian, volume_weight};
use hadamard_gap::oracle::{central_difference, random_annular_bump, random_even_bump};
use hadamard_gap::quadrature::{integrate_radial, integration_by_parts, lp_functional, Functional};
use hadamard_gap::riccati::{sharp_constant, Family, FamilyParams};
use hadamard_gap::sharpness::{bound_e1, bound_e2, make_u_delta};
use hadamard_gap::specialfn::{bessel_i, bessel_j, first_zero_j, BesselOrder};
use hadamard_gap::{ModelSpace, RadialProfile};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn space() -> impl Strategy<Value = ModelSpace> {
    (2usize..8, prop_oneof![Just(0.0), 0.2f64..3.0]).prop_map(|(n, k)| ModelSpace::new(n, k).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ct_kappa_exceeds_kappa_and_decreases(kappa in 0.05f64..5.0, x in 1e-3f64..10.0, dx in 1e-2f64..2.0) {
        // strict comparisons are resolvable in f64 while coth(κt) − 1 ≫ ε
        let (t, dt) = (x / kappa, dx / kappa);
        let (c0, c1) = (ct_kappa(t, kappa).unwrap(), ct_kappa(t + dt, kappa).unwrap());
        prop_assert!(c1 > kappa && c1 < c0);
        prop_assert!(ct_kappa(t + 50.0 / kappa, kappa).unwrap() >= kappa);
    }

    #[test]
    fn volume_weight_increases(s in space(), t in 1e-3f64..10.0, dt in 1e-2f64..2.0) {
        prop_assert!(volume_weight(t + dt, &s).unwrap() > volume_weight(t, &s).unwrap());
    }

    #[test]
    fn tilted_weight_is_a_power_of_one_minus_exp(n in 2usize..8, kappa in 0.1f64..3.0, t in 1e-2f64..8.0) {
        let m = (n - 1) as f64;
        let tilted = (-m * kappa * t).exp() * (kappa * t).sinh().powf(m);
        let closed = ((1.0 - (-2.0 * kappa * t).exp()) / 2.0).powf(m);
        prop_assert!((tilted - closed).abs() <= 1e-12 * closed);
    }

    #[test]
    fn laplacian_of_a_constant_vanishes(s in space(), c in -5.0f64..5.0, t in 1e-2f64..10.0) {
        let u = RadialProfile::constant(c);
        prop_assert_eq!(radial_laplacian(&u, t, &s).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_is_exact_on_polynomials(n in 2usize..8, degree in 0i32..=10, a in 0.0f64..1.0, len in 0.1f64..3.0) {
        let s = ModelSpace::euclidean(n).unwrap();
        let b = a + len;
        let e = degree + n as i32;
        let exact = (b.powi(e) - a.powi(e)) / e as f64;
        let got = integrate_radial(|t| t.powi(degree), (a, b), &s, &[], 1e-13).unwrap();
        prop_assert!((got - exact).abs() <= 1e-12 * exact.abs().max(1.0), "{got} vs {exact}");
    }

    #[test]
    fn bessel_derivatives_follow_the_recurrences(mu in 0.0f64..6.0, x in 0.2f64..30.0) {
        let order = BesselOrder::new(mu).unwrap();
        let next = BesselOrder::new(mu + 1.0).unwrap();
        let h = 1e-4 * x.max(1.0);
        let dj = central_difference(|y| bessel_j(order, y).unwrap(), x, h);
        let di = central_difference(|y| bessel_i(order, y).unwrap(), x, h);
        let j = -bessel_j(next, x).unwrap() + mu / x * bessel_j(order, x).unwrap();
        let i = bessel_i(next, x).unwrap() + mu / x * bessel_i(order, x).unwrap();
        prop_assert!((dj - j).abs() <= 1e-7 * j.abs().max(1.0));
        prop_assert!((di - i).abs() <= 1e-7 * i.abs().max(1.0));
    }

    #[test]
    fn first_zero_increases_with_order(mu in 0.0f64..10.0, step in 0.05f64..2.0) {
        let z0 = first_zero_j(BesselOrder::new(mu).unwrap()).unwrap();
        let z1 = first_zero_j(BesselOrder::new(mu + step).unwrap()).unwrap();
        prop_assert!(z1 > z0);
    }

    #[test]
    fn clamped_constant_is_homogeneous_in_kappa(n in 2usize..9, kappa in 0.1f64..4.0, p in 1.2f64..4.0) {
        let params = |kappa| FamilyParams { n, kappa, p, ..Default::default() };
        let scaled = sharp_constant(Family::ClampedConstant, &params(kappa)).unwrap();
        let unit = sharp_constant(Family::ClampedConstant, &params(1.0)).unwrap();
        let expect = kappa.powf(2.0 * p) * unit;
        prop_assert!((scaled - expect).abs() <= 1e-12 * expect);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn integration_by_parts_holds_for_bumps(s in space(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_even_bump(&mut rng, 2.0, 3).unwrap();
        let v = random_annular_bump(&mut rng, 2.0, 4).unwrap();
        let check = integration_by_parts(&u, &v, &s).unwrap();
        prop_assert!(check.relative() < 1e-8, "{check:?}");
    }

    #[test]
    fn hardy_holds_for_bumps(seed in any::<u64>(), radius in 0.5f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_even_bump(&mut rng, radius, 2).unwrap();
        let check = rellich_quotient_check(&u, RellichMode::Hardy, 2.0, &ModelSpace::euclidean(5).unwrap()).unwrap();
        prop_assert!(check.pass && check.quotient >= 2.25, "{check:?}");
    }

    #[test]
    fn truncated_profile_respects_the_bounds(n in 2usize..5, kappa in 0.5f64..2.0, p in 1.5f64..3.0, delta in 8.0f64..64.0) {
        let s = ModelSpace::hyperbolic(n, kappa).unwrap();
        let u = make_u_delta(delta, &s, p).unwrap();
        let value = lp_functional(&u, p, Functional::Value, &s, None).unwrap();
        let laplacian = lp_functional(&u, p, Functional::Laplacian, &s, None).unwrap();
        prop_assert!(bound_e1(delta, n, kappa, p).unwrap() <= value);
        prop_assert!(laplacian <= bound_e2(delta, n, kappa, p).unwrap());
    }
}

#[test]
fn euclidean_eigenvalues_scale_with_the_radius() {
    for kind in [ProblemKind::Membrane, ProblemKind::Clamped] {
        for r in [0.5, 2.0] {
            let ratio = scaling_ratio(kind, 3, r, 256).unwrap();
            assert!((ratio - 1.0).abs() < 1e-6, "{kind:?} r={r}: {ratio}");
        }
    }
}
