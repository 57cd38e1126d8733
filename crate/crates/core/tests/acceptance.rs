use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use shellflow::kernel::{self, ClosedForm, KernelContext};
use shellflow::solver::{
    fit_log_slope, init_from_density, support_bound, Interaction, Profile, RadialState, SimConfig, Simulation, Solver,
};
use shellflow::stability::{
    boundary_b, classify, instability_mode_probe, pair_energy, shell_radius, Regime,
};
use shellflow::PowerLawPotential;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Run {
    solver: Solver,
    sim: Simulation,
    initial_outer_radius: f64,
}

fn annulus(dim: usize, m: usize) -> RadialState {
    init_from_density(Profile::UniformAnnulus { r1: 0.3, r2: 0.9 }, m, dim).unwrap()
}

fn run(a: f64, b: f64, config: SimConfig) -> Run {
    let p = PowerLawPotential::new(a, b, 2).unwrap();
    let init = annulus(2, config.m);
    let initial_outer_radius = init.outer_radius();
    let solver = Solver::new(Interaction::PowerLaw(p), config).unwrap();
    let sim = solver.simulate(init);
    Run { solver, sim, initial_outer_radius }
}

/// Stable flow of `|x|^4/4 - |x|^2/2` in the plane.
fn run_stable() -> Run {
    run(4.0, 2.0, SimConfig { dt: 1e-2, t_end: 20.0, m: 201, dt_min: 1e-2 / 256.0, ..SimConfig::default() })
}

/// Flow of `|x|^2/2 - |x|` in the plane, whose shell is unstable.
fn run_unstable() -> Run {
    run(2.0, 1.0, SimConfig { dt: 0.1, t_end: 60.0, m: 201, dt_min: 0.1 / 256.0, ..SimConfig::default() })
}

fn shell_radius_stable() -> Outcome {
    let r = shell_radius(4.0, 2.0, 2).unwrap();
    let err = (r - 3f64.sqrt() / 3.0).abs();
    outcome(err <= 1e-12, format!("R = {r:.16}, |R - sqrt(3)/3| = {err:.2e}"))
}

fn shell_radius_unstable() -> Outcome {
    let r = shell_radius(2.0, 1.0, 2).unwrap();
    let err = (r - 2.0 / PI).abs();
    let printed = format!("{r:.4}");
    outcome(err <= 1e-12 && printed == "0.6366", format!("R = {r:.16} (rounds to {printed}), |R - 2/pi| = {err:.2e}"))
}

fn closed_form_vs_quadrature() -> Outcome {
    let p = PowerLawPotential::new(4.0, 2.0, 2).unwrap();
    let ctx = KernelContext::default().with_closed_form(ClosedForm::None);
    let mut worst = 0.0f64;
    for i in 0..20 {
        for j in 0..20 {
            let r = 0.1 + 1.9 * i as f64 / 19.0;
            let eta = 0.1 + 1.9 * j as f64 / 19.0;
            let w = kernel::omega(&p, r, eta, &ctx).unwrap().value;
            worst = worst.max((w - (-r * r * r - 2.0 * r * eta * eta + r)).abs());
        }
    }
    outcome(worst <= 1e-8, format!("max |omega_quad - (-r^3 - 2 r eta^2 + r)| = {worst:.2e} on 20x20"))
}

/// `ω(r, η) = -⨍ k'(|r e₁ - η y|) (r - η y₁)/|r e₁ - η y| dσ(y)` as a
/// midpoint sum over `m` equally spaced points of the unit circle.
fn ring_sum(p: &PowerLawPotential, r: f64, eta: f64, m: usize) -> f64 {
    let mut acc = 0.0;
    for j in 0..m {
        let theta = 2.0 * PI * (j as f64 + 0.5) / m as f64;
        let (s, c) = theta.sin_cos();
        let dx = r - eta * c;
        let dy = -eta * s;
        let dist = dx.hypot(dy);
        acc += p.k_prime(dist).unwrap() * dx / dist;
    }
    -acc / m as f64
}

fn direct_sum_oracle() -> Outcome {
    let ctx = KernelContext::default();
    let points = [
        (0.3, 0.7),
        (0.5, 1.2),
        (1.5, 0.4),
        (0.8, 0.2),
        (2.0, 1.0),
        (1.0, 2.5),
        (0.6, 0.9),
        (1.3, 1.1),
        (0.25, 1.75),
        (3.0, 0.5),
    ];
    let mut worst = 0.0f64;
    for &(a, b) in &[(4.0, 2.0), (2.0, 1.0)] {
        let p = PowerLawPotential::new(a, b, 2).unwrap();
        for &(r, eta) in &points {
            let w = kernel::omega(&p, r, eta, &ctx).unwrap().value;
            let oracle = ring_sum(&p, r, eta, 100_000);
            worst = worst.max((w - oracle).abs() / oracle.abs());
        }
    }
    outcome(worst <= 1e-4, format!("max relative deviation from the 1e5-point ring sum = {worst:.2e}"))
}

/// Central difference of `r ↦ ω(r, R)` at `R`. Near the diagonal `ω` has an
/// odd term proportional to `(r - R)|r - R|^γ` with `γ = b + N - 3`, which
/// biases the quotient by `K h^γ`; one Richardson step in `h` removes it.
fn richardson_d1(p: &PowerLawPotential, r: f64, ctx: &KernelContext) -> f64 {
    let w = |x: f64| kernel::omega(p, x, r, ctx).unwrap().value;
    let quotient = |h: f64| (w(r + h) - w(r - h)) / (2.0 * h);
    let h = 1e-4 * r;
    let q = 2f64.powf(p.b() + p.dim() as f64 - 3.0);
    (q * quotient(0.5 * h) - quotient(h)) / (q - 1.0)
}

fn bifurcation_boundary() -> Outcome {
    let mut worst = 0.0f64;
    for &a in &[2.5, 3.0, 4.0, 6.0] {
        worst = worst.max((boundary_b(a, 2).unwrap() - a / (a - 1.0)).abs());
    }
    let ctx = KernelContext::default();
    let mut disagreements = Vec::new();
    let mut compared = 0;
    let mut worst_fd = 0.0f64;
    for i in 0..15 {
        let a = 2.2 + 3.8 * i as f64 / 14.0;
        for j in 1..=15 {
            // C¹ region in the plane: 1 < b < a.
            let b = 1.0 + (a - 1.0) * j as f64 / 16.0;
            let rep = classify(a, b, 2).unwrap();
            if rep.regime == Regime::OnBoundary {
                continue;
            }
            let p = PowerLawPotential::new(a, b, 2).unwrap();
            let fd = richardson_d1(&p, rep.steady_radius, &ctx);
            compared += 1;
            worst_fd = worst_fd.max((fd - rep.d1_at_shell).abs() / rep.d1_at_shell.abs());
            if (fd > 0.0) != (rep.d1_at_shell > 0.0) {
                disagreements.push((a, b, fd, rep.d1_at_shell));
            }
        }
    }
    outcome(
        worst <= 1e-12 && disagreements.is_empty() && compared == 225,
        format!(
            "max |boundary_b - a/(a-1)| = {worst:.1e}; sign agreement on {}/{compared} grid points, \
             max relative gap to the difference quotient {worst_fd:.1e}{}",
            compared - disagreements.len(),
            if disagreements.is_empty() { String::new() } else { format!(", mismatches {disagreements:?}") }
        ),
    )
}

fn linear_exactness() -> Outcome {
    let attraction = Interaction::Attractive { exponent: 2.0, dim: 3 };
    let phi0 = annulus(3, 21);
    let evolve = |dt: f64| {
        let config = SimConfig { dt, t_end: 1.0, m: 21, dt_min: dt / 256.0, ..SimConfig::default() };
        let solver = Solver::new(attraction, config).unwrap();
        let mut s = phi0.clone();
        for _ in 0..(1.0 / dt).round() as usize {
            s = solver.step(&s).unwrap().0;
        }
        s
    };
    let coarse = evolve(0.01);
    let mut exact_err = 0.0f64;
    for (x, x0) in coarse.phi().iter().zip(phi0.phi()) {
        let expected = x0 / 1.01f64.powi(100);
        exact_err = exact_err.max((x - expected).abs() / expected);
    }
    let global = |s: &RadialState| {
        s.phi().iter().zip(phi0.phi()).map(|(x, x0)| (x - x0 * (-1.0f64).exp()).abs()).fold(0.0, f64::max)
    };
    let ratio = global(&coarse) / global(&evolve(0.005));
    outcome(
        exact_err <= 1e-13 && (1.8..=2.2).contains(&ratio),
        format!("max relative deviation from phi0/(1+dt)^n = {exact_err:.1e}; error ratio dt/(dt/2) = {ratio:.4}"),
    )
}

fn stable_convergence(run: &Run) -> Outcome {
    if let Some(e) = &run.sim.failure {
        return outcome(false, format!("run failed: {e}"));
    }
    let last = run.sim.diagnostics.last().unwrap();
    let t: Vec<f64> = run.sim.diagnostics.iter().map(|d| d.t).collect();
    let d2: Vec<f64> = run.sim.diagnostics.iter().map(|d| d.d_2).collect();
    let slope = fit_log_slope(&t, &d2, 1.0, 10.0).unwrap_or(f64::NAN);
    outcome(
        last.t >= 20.0 - 1e-9 && last.d_inf < 1e-3 && slope <= -0.5,
        format!("t = {:.2}: d_inf = {:.2e}; slope of ln d_2 on [1, 10] = {slope:.4}", last.t, last.d_inf),
    )
}

fn instability_behavior(run: &Run) -> Outcome {
    if let Some(e) = &run.sim.failure {
        return outcome(false, format!("run failed: {e}"));
    }
    let last = run.sim.diagnostics.last().unwrap();
    // Desk-scale thresholds: a visibly non-shell profile that has nearly stopped moving.
    outcome(
        last.max_velocity < 1e-3 && last.gamma > 0.05 && last.d_inf > 0.05,
        format!(
            "t = {:.1}: max|V| = {:.2e}, Gamma = {:.4}, d_inf(phi, 2/pi) = {:.4}",
            last.t, last.max_velocity, last.gamma, last.d_inf
        ),
    )
}

fn energy_decay(stable: &Run, unstable: &Run) -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for (name, run) in [("stable", stable), ("unstable", unstable)] {
        let cfg = run.solver.config();
        let slack = 10.0 * cfg.newton_tol * cfg.dt;
        let worst_rise = run.sim.diagnostics.windows(2).map(|w| w[1].energy - w[0].energy).fold(f64::NEG_INFINITY, f64::max);
        let max_diss = run.sim.diagnostics.iter().map(|d| d.dissipation).fold(f64::NEG_INFINITY, f64::max);
        pass &= run.sim.failure.is_none() && worst_rise <= slack && max_diss <= 0.0;
        notes.push(format!("{name}: max energy rise {worst_rise:.1e} (slack {slack:.0e}), max dissipation {max_diss:.1e}"));
    }
    let r = stable.solver.reference_radius();
    let e_min = stable.solver.energy(&RadialState::shell(stable.solver.config().m, r).unwrap()).unwrap();
    let half = stable.sim.diagnostics.len() / 2;
    let tail = &stable.sim.diagnostics[half..];
    let gaps: Vec<f64> = tail.iter().map(|d| d.energy - e_min).collect();
    let decreasing = gaps.iter().all(|g| *g > 0.0) && gaps.windows(2).all(|w| w[1] < w[0]);
    let t: Vec<f64> = tail.iter().map(|d| d.t).collect();
    let slope = fit_log_slope(&t, &gaps, 0.0, f64::INFINITY).unwrap_or(f64::NAN);
    pass &= decreasing;
    notes.push(format!("stable second half: ln(E - E_min) strictly decreasing = {decreasing}, fitted slope {slope:.4}"));
    outcome(pass, notes.join("; "))
}

fn energy_velocity_duality() -> Outcome {
    let ctx = KernelContext::default();
    let p = PowerLawPotential::new(4.0, 2.0, 2).unwrap();
    let grid = [0.3, 0.6, 0.9, 1.2, 1.5];
    let mut worst = 0.0f64;
    for &r in &grid {
        for &eta in &grid {
            let h = 1e-4;
            let e = |x: f64| pair_energy(&p, x, eta, &ctx).unwrap().value;
            let fd = (e(r + h) - e(r - h)) / (2.0 * h);
            let w = kernel::omega(&p, r, eta, &ctx).unwrap().value;
            worst = worst.max((fd + 0.5 * w).abs());
        }
    }
    let stable = {
        let p = PowerLawPotential::new(4.0, 2.0, 2).unwrap();
        let r = shell_radius(4.0, 2.0, 2).unwrap();
        instability_mode_probe(&p, r, 1e-2, 1e-3, &ctx).unwrap()
    };
    let unstable = {
        let p = PowerLawPotential::new(3.0, 1.2, 2).unwrap();
        let r = shell_radius(3.0, 1.2, 2).unwrap();
        instability_mode_probe(&p, r, 1e-2, 1e-4, &ctx).unwrap()
    };
    let regimes_ok = classify(4.0, 2.0, 2).unwrap().regime == Regime::RadiallyStable
        && classify(3.0, 1.2, 2).unwrap().regime == Regime::FatteningUnstable;
    outcome(
        worst <= 1e-6 && regimes_ok && stable.0 > 0.0 && stable.1 > 0.0 && unstable.0 < 0.0,
        format!(
            "max |dE/dr + omega/2| = {worst:.1e} on 5x5; (4,2,2) split {:.2e} shift {:.2e}; (3,1.2,2) split {:.2e}",
            stable.0, stable.1, unstable.0
        ),
    )
}

fn special_function_anchors() -> Outcome {
    let ctx = KernelContext::default();
    let quad = KernelContext::default().with_closed_form(ClosedForm::None);
    let mut origin_ok = true;
    let mut worst_asym = 0.0f64;
    for &dim in &[2usize, 3] {
        for &c in &[1.0, 2.0, 3.0, 4.0] {
            origin_ok &= kernel::psi(c, 0.0, dim, &ctx).unwrap() == 1.0;
            let s: f64 = 1e3;
            let scaled = s.powf(2.0 - c) * kernel::psi(c, s, dim, &quad).unwrap();
            let limit = (dim as f64 + c - 2.0) / dim as f64;
            worst_asym = worst_asym.max((scaled - limit).abs());
        }
    }
    let tol = 10.0 * quad.rel_tol().max(quad.abs_tol());
    let mut worst_one = 0.0f64;
    for &dim in &[2usize, 3] {
        for &c in &[0.5, 1.0, 2.0, 3.0, 4.0] {
            let closed = kernel::psi_at_one(c, dim).unwrap();
            let by_quad = kernel::psi(c, 1.0, dim, &quad).unwrap();
            worst_one = worst_one.max((closed - by_quad).abs() / closed);
        }
    }
    outcome(
        origin_ok && worst_asym <= 1e-3 && worst_one <= tol,
        format!(
            "psi(c, 0) = 1: {origin_ok}; max |s^(2-c) psi - (N+c-2)/N| at s = 1e3: {worst_asym:.1e}; \
             psi(1) closed form vs quadrature: {worst_one:.1e} (limit {tol:.0e})"
        ),
    )
}

fn support_confinement(stable: &Run, unstable: &Run) -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for (name, run) in [("stable", stable), ("unstable", unstable)] {
        let p = run.solver.interaction().power_law().unwrap();
        let bound = support_bound(p, run.initial_outer_radius).unwrap();
        let peak = run.sim.snapshots.iter().map(|s| s.outer_radius()).fold(0.0, f64::max);
        pass &= peak <= bound + 1e-8 && run.sim.diagnostics.iter().all(|d| d.support_ok);
        notes.push(format!("{name}: max phi(1, t) = {peak:.6} <= bound {bound:.6}"));
    }
    outcome(pass, notes.join("; "))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let (stable, unstable) = std::thread::scope(|scope| {
        let s = scope.spawn(run_stable);
        let u = scope.spawn(run_unstable);
        (s.join().unwrap(), u.join().unwrap())
    });
    let sim_time = start.elapsed();

    let results: Vec<(&str, Outcome)> = vec![
        ("steady radius, stable case", shell_radius_stable()),
        ("steady radius, unstable case", shell_radius_unstable()),
        ("closed form vs quadrature", closed_form_vs_quadrature()),
        ("direct-sum oracle", direct_sum_oracle()),
        ("bifurcation boundary", bifurcation_boundary()),
        ("exact linear case", linear_exactness()),
        ("stable convergence", stable_convergence(&stable)),
        ("instability behavior", instability_behavior(&unstable)),
        ("energy decay", energy_decay(&stable, &unstable)),
        ("energy/velocity duality", energy_velocity_duality()),
        ("special-function anchors", special_function_anchors()),
        ("support confinement", support_confinement(&stable, &unstable)),
    ];

    let mut failures = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("{} {:>2}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failures += usize::from(!o.pass);
    }
    println!(
        "simulations {:.1} s, total {:.1} s; {} passed, {failures} failed",
        sim_time.as_secs_f64(),
        start.elapsed().as_secs_f64(),
        results.len() - failures
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
