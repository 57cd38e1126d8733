use super::*;
use approx::assert_relative_eq;
use proptest::prelude::*;

fn planar_quartic() -> Interaction {
    Interaction::PowerLaw(PowerLawPotential::new(4.0, 2.0, 2).unwrap())
}

fn config(m: usize, dt: f64) -> SimConfig {
    SimConfig { m, dt, dt_min: dt / 256.0, ..SimConfig::default() }
}

fn quadratic_attraction(dim: usize) -> Interaction {
    Interaction::Attractive { exponent: 2.0, dim }
}

#[test]
fn linear_attraction_matches_backward_euler_exactly() {
    let dt = 0.05;
    let solver = Solver::new(quadratic_attraction(2), config(21, dt)).unwrap();
    let s0 = init_from_density(Profile::UniformAnnulus { r1: 0.3, r2: 0.9 }, 21, 2).unwrap();
    let mut s = s0.clone();
    for n in 1..=20 {
        let (next, rep) = solver.step(&s).unwrap();
        s = next;
        assert!(rep.newton_iters <= 2);
        for (p, p0) in s.phi().iter().zip(s0.phi()) {
            let want = p0 / (1.0 + dt).powi(n);
            assert!((p - want).abs() <= 4.0 * f64::EPSILON * want, "{p} vs {want}");
        }
    }
    assert_relative_eq!(s.t(), 1.0, epsilon = 1e-12);
}

#[test]
fn linear_attraction_is_first_order() {
    let err = |dt: f64| {
        let mut cfg = config(11, dt);
        cfg.t_end = 1.0;
        let solver = Solver::new(quadratic_attraction(3), cfg).unwrap();
        let s0 = RadialState::shell(11, 1.0).unwrap();
        let sim = solver.simulate(s0);
        assert!(sim.failure.is_none());
        (sim.snapshots.last().unwrap().phi()[0] - (-1f64).exp()).abs()
    };
    let ratio = err(0.02) / err(0.01);
    assert!((1.8..=2.2).contains(&ratio), "ratio {ratio}");
}

#[test]
fn quartic_velocity_matches_polynomial_moments() {
    let solver = Solver::new(planar_quartic(), config(41, 1e-2)).unwrap();
    let s = init_from_density(Profile::UniformAnnulus { r1: 0.3, r2: 0.9 }, 41, 2).unwrap();
    let w = simpson_weights(41, 1.0 / 40.0).unwrap();
    let s2: f64 = s.phi().iter().zip(&w).map(|(p, wi)| wi * p * p).sum();
    let v = solver.rhs(&s).unwrap();
    for (vi, p) in v.iter().zip(s.phi()) {
        assert_relative_eq!(*vi, p - p.powi(3) - 2.0 * p * s2, epsilon = 1e-14);
    }
}

#[test]
fn simpson_rhs_converges_at_fourth_order() {
    let solver_for = |m: usize| Solver::new(planar_quartic(), config(m, 1e-2)).unwrap();
    let profile = Profile::UniformAnnulus { r1: 0.6, r2: 0.9 };
    // sampled in three dimensions so that φ² is not a polynomial in ξ
    let reference = solver_for(401).rhs(&init_from_density(profile, 401, 3).unwrap()).unwrap();
    let error = |m: usize| {
        let v = solver_for(m).rhs(&init_from_density(profile, m, 3).unwrap()).unwrap();
        let stride = 400 / (m - 1);
        v.iter().enumerate().map(|(i, vi)| (vi - reference[i * stride]).abs()).fold(0.0, f64::max)
    };
    let ratio = error(11) / error(21);
    assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn steady_shell_is_a_fixed_point() {
    let r = shell_radius(4.0, 2.0, 2).unwrap();
    let solver = Solver::new(planar_quartic(), config(21, 1e-2)).unwrap();
    let mut s = RadialState::shell(21, r).unwrap();
    assert!(solver.rhs(&s).unwrap().iter().all(|v| v.abs() < 1e-10));
    for _ in 0..1000 {
        let (next, rep) = solver.step(&s).unwrap();
        assert!(rep.newton_iters <= 1);
        s = next;
    }
    assert!(s.phi().iter().all(|p| (p - r).abs() < 1e-9));
}

#[test]
fn small_steps_follow_the_velocity() {
    let solver_for = |dt: f64| Solver::new(Interaction::PowerLaw(PowerLawPotential::new(3.0, 1.5, 3).unwrap()), config(21, dt)).unwrap();
    let s0 = init_from_density(Profile::UniformAnnulus { r1: 0.2, r2: 1.0 }, 21, 3).unwrap();
    let v = solver_for(1e-2).rhs(&s0).unwrap();
    let gap = |dt: f64| {
        let (s1, _) = solver_for(dt).step(&s0).unwrap();
        s1.phi().iter().zip(s0.phi()).zip(&v).map(|((a, b), vi)| ((a - b) / dt - vi).abs()).fold(0.0, f64::max)
    };
    let (g1, g2) = (gap(1e-3), gap(5e-4));
    assert!(g1 < 1e-2 && g2 < 0.6 * g1, "{g1} {g2}");
}

#[test]
fn ordering_is_preserved_without_rearrangement() {
    let mut cfg = config(51, 1e-3);
    cfg.enforce_monotone = false;
    let solver = Solver::new(planar_quartic(), cfg).unwrap();
    let mut s = init_from_density(Profile::UniformAnnulus { r1: 0.3, r2: 0.9 }, 51, 2).unwrap();
    for _ in 0..200 {
        s = solver.step(&s).unwrap().0;
        assert!(s.is_monotone());
    }
}

#[test]
fn singular_repulsion_steps_converge() {
    let p = PowerLawPotential::new(2.0, 1.0, 2).unwrap();
    let solver = Solver::new(Interaction::PowerLaw(p), config(41, 5e-2)).unwrap();
    let mut s = init_from_density(Profile::UniformAnnulus { r1: 0.3, r2: 0.9 }, 41, 2).unwrap();
    let e0 = solver.energy(&s).unwrap();
    for _ in 0..20 {
        let (next, rep) = solver.step(&s).unwrap();
        assert!(rep.newton_iters < 10);
        s = next;
    }
    assert!(solver.energy(&s).unwrap() < e0);
}

#[test]
fn profile_examples() {
    let s = init_from_density(Profile::UniformAnnulus { r1: 0.3, r2: 0.9 }, 9, 2).unwrap();
    for (p, x) in s.phi().iter().zip(s.xi()) {
        assert_relative_eq!(*p, (0.09 + x * 0.72).sqrt(), max_relative = 1e-15);
    }
    let s = init_from_density(Profile::UniformAnnulus { r1: 0.0, r2: 2.0 }, 9, 3).unwrap();
    assert_eq!((s.inner_radius(), s.outer_radius()), (0.0, 2.0));
    assert_relative_eq!(s.phi()[4], 2.0 * 0.5f64.cbrt(), max_relative = 1e-15);

    let s = init_from_density(Profile::ShellPerturbed { radius: 0.5, amp: 0.0, mode: 1 }, 9, 2).unwrap();
    assert!(s.phi().iter().all(|p| *p == 0.5));
    let s = init_from_density(Profile::ShellPerturbed { radius: 0.5, amp: 0.1, mode: 3 }, 9, 2).unwrap();
    assert_relative_eq!(s.inner_radius(), 0.4, max_relative = 1e-15);
    assert_relative_eq!(s.outer_radius(), 0.6, max_relative = 1e-15);

    assert!(init_from_density(Profile::UniformAnnulus { r1: 0.5, r2: 0.5 }, 9, 2).is_err());
    assert!(init_from_density(Profile::ShellPerturbed { radius: 0.5, amp: 0.6, mode: 1 }, 9, 2).is_err());
    assert!(init_from_density(Profile::ShellPerturbed { radius: 0.5, amp: 0.1, mode: 2 }, 9, 2).is_err());
    assert!(init_from_density(Profile::TruncatedGaussianRadial { center: 1.0, sigma: 0.0, cut: 3.0 }, 9, 2).is_err());
    assert!(init_from_density(Profile::UniformAnnulus { r1: 0.3, r2: 0.9 }, 8, 2).is_err());
}

#[test]
fn truncated_gaussian_inverts_its_distribution() {
    let (center, sigma, cut) = (1.0, 0.2, 3.0);
    let s = init_from_density(Profile::TruncatedGaussianRadial { center, sigma, cut }, 21, 2).unwrap();
    assert_relative_eq!(s.inner_radius(), 0.4, max_relative = 1e-14);
    assert_relative_eq!(s.outer_radius(), 1.6, max_relative = 1e-14);
    // trapezoid oracle of the radial mass with weight r
    let density = |r: f64| (-(r - center).powi(2) / (2.0 * sigma * sigma)).exp() * r;
    let cdf = |x: f64| {
        let n = 200_000;
        let h = (x - 0.4) / n as f64;
        (0..n).map(|k| 0.5 * h * (density(0.4 + k as f64 * h) + density(0.4 + (k + 1) as f64 * h))).sum::<f64>()
    };
    let total = cdf(1.6);
    for (p, x) in s.phi().iter().zip(s.xi()).skip(1).take(19) {
        assert!((cdf(*p) / total - x).abs() < 1e-8, "xi = {x}");
    }
}

#[test]
fn distances_and_moments() {
    let s = RadialState::shell(11, 0.7).unwrap();
    for alpha in [1.0, 2.0, 3.5, f64::INFINITY] {
        assert_eq!(wasserstein_to_shell(&s, 0.7, alpha).unwrap(), 0.0);
        assert_relative_eq!(wasserstein_to_shell(&s, 0.5, alpha).unwrap(), 0.2, max_relative = 1e-14);
    }
    assert!(wasserstein_to_shell(&s, 0.5, 0.5).is_err());
    let (gamma, theta) = gamma_theta(&s, 0.7);
    assert_eq!(gamma, 0.0);
    assert!(theta.abs() < 1e-15);
    let amp = 0.1;
    let s = init_from_density(Profile::ShellPerturbed { radius: 0.5, amp, mode: 1 }, 11, 2).unwrap();
    let (gamma, theta) = gamma_theta(&s, 0.5);
    assert_relative_eq!(gamma, 2.0 * amp, max_relative = 1e-14);
    assert!(theta.abs() < 1e-16);
}

#[test]
fn annulus_distance_matches_closed_form() {
    let (r1, r2): (f64, f64) = (0.3, 0.9);
    let s = init_from_density(Profile::UniformAnnulus { r1, r2 }, 201, 2).unwrap();
    let r = 0.6;
    let (a, b) = (r1 * r1, r2 * r2 - r1 * r1);
    let mean_sq = a + 0.5 * b;
    let mean = 2.0 / (3.0 * b) * ((a + b).powf(1.5) - a.powf(1.5));
    let exact = (mean_sq - 2.0 * r * mean + r * r).sqrt();
    assert_relative_eq!(wasserstein_to_shell(&s, r, 2.0).unwrap(), exact, max_relative = 1e-7);
    let d_inf = wasserstein_to_shell(&s, r, f64::INFINITY).unwrap();
    assert_relative_eq!(d_inf, 0.3, max_relative = 1e-15);
    assert!(d_inf >= exact);
}

#[test]
fn energy_examples() {
    let r = 3f64.sqrt() / 3.0;
    let solver = Solver::new(planar_quartic(), config(11, 1e-2)).unwrap();
    let point = RadialState::shell(11, r).unwrap();
    assert_relative_eq!(solver.energy(&point).unwrap(), -1.0 / 12.0, max_relative = 1e-13);
    let v = solver.rhs(&point).unwrap();
    assert!(solver.dissipation(&v).abs() < 1e-12);

    let attract = Solver::new(quadratic_attraction(3), config(11, 1e-2)).unwrap();
    let s = init_from_density(Profile::UniformAnnulus { r1: 0.2, r2: 0.8 }, 11, 3).unwrap();
    let w = simpson_weights(11, 0.1).unwrap();
    let half_second_moment = 0.5 * s.phi().iter().zip(&w).map(|(p, wi)| wi * p * p).sum::<f64>();
    assert_relative_eq!(attract.energy(&s).unwrap(), half_second_moment, max_relative = 1e-14);
}

#[test]
fn energy_gradient_is_weighted_velocity() {
    let p = PowerLawPotential::new(3.0, 1.5, 3).unwrap();
    let solver = Solver::new(Interaction::PowerLaw(p), config(11, 1e-2)).unwrap();
    let s = init_from_density(Profile::UniformAnnulus { r1: 0.2, r2: 1.0 }, 11, 3).unwrap();
    let v = solver.rhs(&s).unwrap();
    let w = simpson_weights(11, 0.1).unwrap();
    for i in [2, 5, 8] {
        let h = 1e-5;
        let shifted = |d: f64| {
            let mut phi = s.phi().to_vec();
            phi[i] += d;
            solver.energy(&RadialState::new(phi, 0.0).unwrap()).unwrap()
        };
        let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
        assert_relative_eq!(fd, -w[i] * v[i], max_relative = 1e-6, epsilon = 1e-10);
    }
}

#[test]
fn support_bound_examples() {
    let p = PowerLawPotential::new(4.0, 2.0, 2).unwrap();
    assert_relative_eq!(support_bound(&p, 0.9).unwrap(), 1.0, max_relative = 1e-14);
    assert_eq!(support_bound(&p, 1.3).unwrap(), 1.3);
    let s = init_from_density(Profile::UniformAnnulus { r1: 0.3, r2: 0.9 }, 11, 2).unwrap();
    assert!(support_bound_check(&s, &p, 0.9).unwrap());
    let q = PowerLawPotential::new(1.5, 0.5, 3).unwrap();
    let expected = psi_unit_for_test(1.5, 3).powf(1.0 / (0.5 - 1.5));
    assert_relative_eq!(support_bound(&q, 0.1).unwrap(), expected.max(0.1), max_relative = 1e-14);
}

fn psi_unit_for_test(c: f64, n: usize) -> f64 {
    crate::kernel::psi_at_one(c, n).unwrap()
}

#[test]
fn log_slope_fit() {
    let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
    let y: Vec<f64> = t.iter().map(|ti| 3.0 * (-0.7 * ti).exp()).collect();
    assert_relative_eq!(fit_log_slope(&t, &y, 1.0, 8.0).unwrap(), -0.7, max_relative = 1e-12);
    assert!(fit_log_slope(&t, &y, 100.0, 200.0).is_none());
}

#[test]
fn configuration_is_validated() {
    let bad = [
        SimConfig { m: 10, ..SimConfig::default() },
        SimConfig { m: 3, ..SimConfig::default() },
        SimConfig { dt_min: 1.0, ..SimConfig::default() },
        SimConfig { newton_tol: 0.0, ..SimConfig::default() },
        SimConfig { alpha: 0.5, ..SimConfig::default() },
    ];
    for cfg in bad {
        assert!(Solver::new(planar_quartic(), cfg).is_err());
    }
    assert!(Solver::new(Interaction::Attractive { exponent: -1.5, dim: 3 }, SimConfig::default()).is_err());
    let solver = Solver::new(planar_quartic(), config(11, 1e-2)).unwrap();
    assert!(solver.rhs(&RadialState::shell(13, 0.5).unwrap()).is_err());
}

#[test]
fn exhausted_step_halving_reports_failure() {
    let mut cfg = config(11, 1.0);
    cfg.newton_max_iter = 1;
    cfg.newton_tol = 1e-300;
    cfg.dt_min = 0.3;
    let solver = Solver::new(planar_quartic(), cfg).unwrap();
    let s = init_from_density(Profile::UniformAnnulus { r1: 0.3, r2: 0.9 }, 11, 2).unwrap();
    match solver.step(&s) {
        Err(Error::StepFailure { dt, residual, .. }) => {
            assert!(dt < 0.3 && residual > 0.0);
        }
        other => panic!("expected step failure, got {other:?}"),
    }
    let sim = solver.simulate(s);
    assert!(matches!(sim.failure, Some(Error::StepFailure { .. })));
    assert_eq!(sim.diagnostics.len(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn steps_keep_states_admissible(r1 in 0.0f64..0.5, width in 0.05f64..1.0, dt in 1e-3f64..5e-2) {
        let solver = Solver::new(planar_quartic(), config(15, dt)).unwrap();
        let s = init_from_density(Profile::UniformAnnulus { r1, r2: r1 + width }, 15, 2).unwrap();
        let (next, _) = solver.step(&s).unwrap();
        prop_assert!(next.is_monotone());
        prop_assert!(next.phi().iter().all(|p| *p >= 0.0));
        prop_assert_eq!(next.xi(), s.xi());
        prop_assert!(solver.energy(&next).unwrap() <= solver.energy(&s).unwrap() + 1e-12);
    }
}
