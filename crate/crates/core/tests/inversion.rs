mod common;

use common::{cosine_field, reference_problem};
use fracinv::adjoint::solve_adjoint;
use fracinv::cli::{presets, synthesize_observation, Subdomain};
use fracinv::discretization::{inner_product, masked_inner_product, norm_l2, Field, SpaceTimeField};
use fracinv::forward::solve_forward;
use fracinv::inversion::{
    estimate_m, gradient, iterate, objective, power_iteration_trace, unit_uniform,
    weighted_time_integral, ReconstructionConfig,
};
use proptest::prelude::*;
use rand_core::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

fn edges() -> Subdomain {
    Subdomain::intervals(&[(0.0, 0.05), (0.95, 1.0)])
}

fn random_field(grid: fracinv::discretization::SpaceGrid, rng: &mut Xoshiro256PlusPlus) -> Field {
    Field::new(grid, (0..grid.len()).map(|_| 2.0 * unit_uniform(rng) - 1.0).collect()).unwrap()
}

#[test]
fn adjoint_pairing_holds_in_two_dimensions() {
    let spec = reference_problem(2, 9, 12, 0.4);
    let mask = Subdomain::Complement(fracinv::discretization::Region::rect([0.2, 0.8], [0.1, 0.9]))
        .mask(spec.grid())
        .unwrap();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
    for _ in 0..5 {
        let f = random_field(spec.grid(), &mut rng);
        let g = random_field(spec.grid(), &mut rng);
        let uf = solve_forward(&spec, &f).unwrap();
        let ug = solve_forward(&spec, &g).unwrap();
        let lhs = masked_inner_product(&ug, &uf, &mask).unwrap();
        let z = solve_adjoint(&spec, &uf, &mask).unwrap();
        let rhs = inner_product(&g, &weighted_time_integral(&spec, &z)).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1e-300));
    }
}

#[test]
fn gradient_matches_central_differences() {
    let spec = reference_problem(1, 21, 20, 0.5);
    let mask = edges().mask(spec.grid()).unwrap();
    let f_true = cosine_field(spec.grid(), &[2.0, -0.5, 0.3]);
    let obs = synthesize_observation(&spec, &f_true, &mask, 0.02, 9).unwrap();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
    let rho = 1e-3;
    for _ in 0..5 {
        let f = random_field(spec.grid(), &mut rng);
        let g = random_field(spec.grid(), &mut rng);
        let exact = 2.0 * inner_product(&gradient(&spec, &f, &obs, &mask, rho).unwrap(), &g).unwrap();
        let mut best = f64::INFINITY;
        for h in [1e-2, 1e-3, 1e-4] {
            let p = objective(&spec, &f.axpy(h, &g).unwrap(), &obs, &mask, rho).unwrap();
            let m = objective(&spec, &f.axpy(-h, &g).unwrap(), &obs, &mask, rho).unwrap();
            best = best.min(((p - m) / (2.0 * h) - exact).abs() / exact.abs());
        }
        assert!(best <= 1e-6, "relative gap {best:e}");
    }
}

#[test]
fn estimate_bounds_random_directions() {
    let spec = reference_problem(1, 21, 20, 0.5);
    let mask = edges().mask(spec.grid()).unwrap();
    let est = estimate_m(&spec, &mask, 50).unwrap();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(77);
    for _ in 0..20 {
        let f = random_field(spec.grid(), &mut rng);
        let f = f.scaled(1.0 / norm_l2(&f));
        let u = solve_forward(&spec, &f).unwrap();
        let af2 = masked_inner_product(&u, &u, &mask).unwrap();
        assert!(af2 <= 1.05 * est, "{af2} vs {est}");
    }
    let trace = power_iteration_trace(&spec, &mask, 30).unwrap();
    for w in trace.windows(2) {
        assert!(w[1] >= w[0] - 1e-12 * w[0].abs());
    }
}

#[test]
fn objective_decreases_with_safeguarded_step() {
    let spec = reference_problem(1, 41, 40, 0.5);
    let mask = edges().mask(spec.grid()).unwrap();
    let f_true = presets::Preset::Ex51b;
    let f_true = Field::from_fn(spec.grid(), |x| f_true.eval(x));
    let obs = synthesize_observation(&spec, &f_true, &mask, 0.02, 1).unwrap();
    let m = 1.2 * estimate_m(&spec, &mask, 50).unwrap();
    let cfg = ReconstructionConfig::new(1e-5, m, 1e-3, Field::constant(spec.grid(), 2.0), 200).unwrap();
    let res = iterate(&spec, &obs, &mask, &cfg, Some(&f_true)).unwrap();
    assert_eq!(res.phi_history.len(), res.iterations + 1);
    for w in res.phi_history.windows(2) {
        assert!(w[1] <= w[0] + 1e-10, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn noise_free_limit_on_edge_geometry() {
    // δ = 0, ρ = 1e-8 with preset ex51a
    let spec = reference_problem(1, 41, 40, 0.3);
    let mask = edges().mask(spec.grid()).unwrap();
    let f_true = Field::from_fn(spec.grid(), |x| presets::Preset::Ex51a.eval(x));
    let obs = synthesize_observation(&spec, &f_true, &mask, 0.0, 0).unwrap();
    let m = 1.2 * estimate_m(&spec, &mask, 50).unwrap();
    let cfg = ReconstructionConfig::new(1e-8, m, 1e-12, Field::constant(spec.grid(), 2.0), 500).unwrap();
    let res = iterate(&spec, &obs, &mask, &cfg, Some(&f_true)).unwrap();
    assert!(res.err.unwrap() < 0.02, "err {}", res.err.unwrap());
}

#[test]
fn fixed_point_and_scaling_covariance() {
    let spec = reference_problem(1, 21, 20, 0.5);
    let mask = edges().mask(spec.grid()).unwrap();
    let f_true = cosine_field(spec.grid(), &[1.5, 0.4]);
    let obs = synthesize_observation(&spec, &f_true, &mask, 0.01, 4).unwrap();
    let cfg = |f0: Field| ReconstructionConfig::new(1e-5, 5.0, 1e-3, f0, 25).unwrap();
    let base = iterate(&spec, &obs, &mask, &cfg(Field::constant(spec.grid(), 2.0)), None).unwrap();

    let c = -3.5;
    let mut scaled_obs = obs.clone();
    scaled_obs.values_mut().iter_mut().for_each(|v| *v *= c);
    let scaled = iterate(&spec, &scaled_obs, &mask, &cfg(Field::constant(spec.grid(), 2.0 * c)), None)
        .unwrap();
    assert_eq!(base.iterations, scaled.iterations);
    let gap = norm_l2(&scaled.f.axpy(-c, &base.f).unwrap());
    assert!(gap <= 1e-12 * norm_l2(&scaled.f), "{gap:e}");

    // a point where ∫μz dt = -ρ f is reproduced exactly
    let zero_obs = SpaceTimeField::zeros(spec.grid(), spec.tgrid());
    let r = iterate(&spec, &zero_obs, &mask, &cfg(Field::zeros(spec.grid())), None).unwrap();
    assert_eq!(r.iterations, 1);
    assert!(r.f.values().iter().all(|&v| v == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn inner_product_is_bilinear_and_symmetric(
        a in proptest::collection::vec(-5.0f64..5.0, 11),
        b in proptest::collection::vec(-5.0f64..5.0, 11),
        c in proptest::collection::vec(-5.0f64..5.0, 11),
        s in -3.0f64..3.0,
    ) {
        let grid = fracinv::discretization::SpaceGrid::new(1, 11).unwrap();
        let (a, b, c) = (Field::new(grid, a).unwrap(), Field::new(grid, b).unwrap(), Field::new(grid, c).unwrap());
        let lhs = inner_product(&a.axpy(s, &b).unwrap(), &c).unwrap();
        let rhs = inner_product(&a, &c).unwrap() + s * inner_product(&b, &c).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        let (ab, ba) = (inner_product(&a, &b).unwrap(), inner_product(&b, &a).unwrap());
        prop_assert!((ab - ba).abs() <= 1e-14 * (1.0 + ab.abs()));
        let sum = norm_l2(&a.axpy(1.0, &b).unwrap());
        prop_assert!(sum <= norm_l2(&a) + norm_l2(&b) + 1e-12);
        prop_assert!(inner_product(&a, &b).unwrap().abs() <= norm_l2(&a) * norm_l2(&b) + 1e-12);
    }

    #[test]
    fn forward_map_is_linear(
        a in proptest::collection::vec(-2.0f64..2.0, 11),
        b in proptest::collection::vec(-2.0f64..2.0, 11),
        s in -3.0f64..3.0,
        alpha in 0.1f64..0.95,
    ) {
        let spec = reference_problem(1, 11, 8, alpha);
        let (a, b) = (Field::new(spec.grid(), a).unwrap(), Field::new(spec.grid(), b).unwrap());
        let combined = solve_forward(&spec, &a.axpy(s, &b).unwrap()).unwrap();
        let ua = solve_forward(&spec, &a).unwrap();
        let ub = solve_forward(&spec, &b).unwrap();
        let scale = combined.norm_l2().max(ua.norm_l2()).max(1e-12);
        for ((x, y), z) in ua.values().iter().zip(ub.values()).zip(combined.values()) {
            prop_assert!((x + s * y - z).abs() <= 1e-11 * scale);
        }
    }
}
