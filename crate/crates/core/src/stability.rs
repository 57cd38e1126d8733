//! Shell steady states and their radial stability.
//!
//! For the power law the shell radius and the derivatives of `ω` on the
//! diagonal have closed forms in terms of `ψ_c(1)` and `ψ_c'(1)/ψ_c(1)`, which
//! makes the classification exact. Generic potentials go through the
//! quadrature kernel.

use std::fmt;

use crate::error::{Error, Result};
use crate::kernel::{
    d1_omega_generic, d2_omega_generic, is_diagonal, omega, omega_generic, psi_prime_unit, psi_unit,
    KernelContext,
};
use crate::potential::{power_term, OmegaContinuity, PowerLawPotential, RadialPotentialDescriptor};
use crate::specfun::beta;

/// Radius of the unique shell steady state of `|x|^a/a - |x|^b/b`.
///
/// ```
/// let r = shellflow::stability::shell_radius(4.0, 2.0, 2).unwrap();
/// assert!((r - 3f64.sqrt() / 3.0).abs() < 1e-15);
/// ```
pub fn shell_radius(a: f64, b: f64, dim: usize) -> Result<f64> {
    PowerLawPotential::new(a, b, dim)?;
    if dim == 1 {
        return Ok(0.5);
    }
    let n = dim as f64;
    let half = 0.5 * (n - 1.0);
    let ratio = beta(0.5 * (b + n - 1.0), half)? / beta(0.5 * (a + n - 1.0), half)?;
    Ok(0.5 * ratio.powf(1.0 / (a - b)))
}

/// The exponent `b*(a, N)` separating fattening-unstable from radially
/// stable shells; equal to `a/(a-1)` in the plane and to 2 on the line.
pub fn boundary_b(a: f64, dim: usize) -> Result<f64> {
    let n = dim as f64;
    let denom = a + n - 3.0;
    if !(denom > 0.0) {
        return Err(Error::domain(format!("boundary_b requires a + N - 3 > 0, got a = {a}, N = {dim}")));
    }
    Ok((3.0 * a - n * a - 10.0 + 7.0 * n - n * n) / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `b <= 3 - N`: `∂₁ω(R, R) = +∞`, the shell is unstable.
    NonC1Blowup,
    /// `3 - N < b < b*`: `∂₁ω(R, R) > 0`.
    FatteningUnstable,
    /// `b* < b < a`.
    RadiallyStable,
    OnBoundary,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::NonC1Blowup => "NonC1Blowup",
            Regime::FatteningUnstable => "FatteningUnstable",
            Regime::RadiallyStable => "RadiallyStable",
            Regime::OnBoundary => "OnBoundary",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Classification of the shell steady state of a power-law potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub a: f64,
    pub b: f64,
    pub dim: usize,
    pub steady_radius: f64,
    pub regime: Regime,
    /// `NaN` when `a + N <= 3`.
    pub boundary_b: f64,
    /// `∂₁ω(R, R)`; `+∞` outside the `C¹` regime.
    pub d1_at_shell: f64,
    /// `d/dR ω(R, R) = (∂₁ + ∂₂)ω(R, R)`.
    pub shift_derivative: f64,
    /// `ω(R, R)`.
    pub c0_residual: f64,
    pub c1_satisfied: bool,
    pub c2_satisfied: bool,
}

/// `ψ_c(1)` and `ψ_c'(1)` for each exponent, as the diagonal derivatives
/// `((c-1)ψ_c(1) - ψ_c'(1)) r^{c-2}` and `ψ_c'(1) r^{c-2}` of `r^{c-1}ψ_c(η/r)`.
fn diagonal_term(c: f64, dim: usize, r: f64) -> Result<(f64, f64)> {
    let psi1 = psi_unit(c, dim)?;
    let dpsi1 = psi_prime_unit(c, dim)?;
    let scale = r.powf(c - 2.0);
    Ok((scale * ((c - 1.0) * psi1 - dpsi1), scale * dpsi1))
}

/// Classifies the shell `δ_{R_ab}` of `|x|^a/a - |x|^b/b` in `R^dim`.
pub fn classify(a: f64, b: f64, dim: usize) -> Result<StabilityReport> {
    let p = PowerLawPotential::new(a, b, dim)?;
    let r = shell_radius(a, b, dim)?;
    let n = dim as f64;
    let psi_a = psi_unit(a, dim)?;
    let psi_b = psi_unit(b, dim)?;
    let c0_residual = r.powf(b - 1.0) * psi_b - r.powf(a - 1.0) * psi_a;
    let shift_derivative = (b - a) * r.powf(b - 2.0) * psi_b;
    let boundary = if a + n - 3.0 > 0.0 { boundary_b(a, dim)? } else { f64::NAN };

    let (regime, d1_at_shell) = if p.regularity().omega_continuity_class != OmegaContinuity::C1 {
        (Regime::NonC1Blowup, f64::INFINITY)
    } else {
        let (b1, _) = diagonal_term(b, dim, r)?;
        let (a1, _) = diagonal_term(a, dim, r)?;
        let regime = if (b - boundary).abs() <= 1e-12 * boundary.abs().max(1.0) {
            Regime::OnBoundary
        } else if b < boundary {
            Regime::FatteningUnstable
        } else {
            Regime::RadiallyStable
        };
        (regime, b1 - a1)
    };
    Ok(StabilityReport {
        a,
        b,
        dim,
        steady_radius: r,
        regime,
        boundary_b: boundary,
        d1_at_shell,
        shift_derivative,
        c0_residual,
        c1_satisfied: d1_at_shell <= 0.0,
        c2_satisfied: shift_derivative <= 0.0,
    })
}

/// The fattening criterion `a - ψ_a'(1)/ψ_a(1) < b - ψ_b'(1)/ψ_b(1)`, true
/// exactly when `∂₁ω(R_ab, R_ab) > 0`. Requires the `C¹` regime.
pub fn fattening_criterion(a: f64, b: f64, dim: usize) -> Result<bool> {
    let ratio = |c: f64| Ok::<_, Error>(psi_prime_unit(c, dim)? / psi_unit(c, dim)?);
    Ok(a - ratio(a)? < b - ratio(b)?)
}

/// Regularly spaced `(a, b)` points of a bifurcation diagram: `a_steps`
/// values of `a` on `[a_min, a_max]` and, for each, `b_steps` interior points
/// of the admissible interval `(2 - N, a)`.
pub fn bifurcation_grid(a_min: f64, a_max: f64, a_steps: usize, b_steps: usize, dim: usize) -> Vec<(f64, f64)> {
    let floor = 2.0 - dim as f64;
    let mut out = Vec::with_capacity(a_steps * b_steps);
    for i in 0..a_steps {
        let a = if a_steps == 1 { a_min } else { a_min + (a_max - a_min) * i as f64 / (a_steps - 1) as f64 };
        for j in 1..=b_steps {
            out.push((a, floor + (a - floor) * j as f64 / (b_steps + 1) as f64));
        }
    }
    out
}

fn diagonal_map<'a>(
    d: &'a RadialPotentialDescriptor,
    dim: usize,
    ctx: &'a KernelContext,
) -> impl Fn(f64) -> Result<f64> + 'a {
    move |r| Ok(omega_generic(d, r, r, dim, ctx)?.value)
}

/// Every sign change of `F(r) = ω(r, r)` on `[lo, hi]`, located on a
/// log-spaced scan of `scan_points` radii and refined by bisection.
pub fn find_steady_radius(
    d: &RadialPotentialDescriptor,
    dim: usize,
    interval: (f64, f64),
    scan_points: usize,
    ctx: &KernelContext,
) -> Result<Vec<f64>> {
    let (lo, hi) = interval;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::domain(format!("invalid search interval [{lo}, {hi}]")));
    }
    if scan_points < 2 {
        return Err(Error::domain("need at least two scan points"));
    }
    let f = diagonal_map(d, dim, ctx);
    let ratio = (hi / lo).ln();
    let grid: Vec<f64> = (0..scan_points)
        .map(|i| lo * (ratio * i as f64 / (scan_points - 1) as f64).exp())
        .collect();
    let values: Vec<f64> = grid.iter().map(|&r| f(r)).collect::<Result<_>>()?;
    let mut roots = Vec::new();
    for i in 0..grid.len() {
        if values[i] == 0.0 {
            roots.push(grid[i]);
            continue;
        }
        if i + 1 < grid.len() && values[i + 1] != 0.0 && values[i].signum() != values[i + 1].signum() {
            let (mut x0, mut x1) = (grid[i], grid[i + 1]);
            let mut f0 = values[i];
            while x1 - x0 > 1e-14 * x1 {
                let m = 0.5 * (x0 + x1);
                let fm = f(m)?;
                if fm == 0.0 {
                    x0 = m;
                    x1 = m;
                    break;
                }
                if fm.signum() == f0.signum() {
                    x0 = m;
                    f0 = fm;
                } else {
                    x1 = m;
                }
            }
            roots.push(0.5 * (x0 + x1));
        }
    }
    Ok(roots)
}

/// `ω(R, R)`, `∂₁ω(R, R)` and `(∂₁ + ∂₂)ω(R, R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionValues {
    pub c0: f64,
    /// `+∞` outside the `C¹` regime.
    pub c1: f64,
    /// The derivative of the diagonal map, finite in every regime.
    pub c2: f64,
}

impl ConditionValues {
    pub fn balanced(&self, tol: f64) -> bool {
        self.c0.abs() <= tol
    }

    pub fn fattening_stable(&self) -> bool {
        self.c1 <= 0.0
    }

    pub fn shifting_stable(&self) -> bool {
        self.c2 <= 0.0
    }
}

/// Steady-state and stability conditions of the shell `δ_R` for the power law.
pub fn check_conditions(p: &PowerLawPotential, radius: f64) -> Result<ConditionValues> {
    if !(radius > 0.0) {
        return Err(Error::domain(format!("shell radius must be positive, got {radius}")));
    }
    let (a, b, n) = (p.a(), p.b(), p.dim());
    let c0 = radius.powf(b - 1.0) * psi_unit(b, n)? - radius.powf(a - 1.0) * psi_unit(a, n)?;
    let c2 = (b - 1.0) * radius.powf(b - 2.0) * psi_unit(b, n)? - (a - 1.0) * radius.powf(a - 2.0) * psi_unit(a, n)?;
    let c1 = if p.regularity().omega_continuity_class == OmegaContinuity::C1 {
        diagonal_term(b, n, radius)?.0 - diagonal_term(a, n, radius)?.0
    } else {
        f64::INFINITY
    };
    Ok(ConditionValues { c0, c1, c2 })
}

/// [`check_conditions`] for a generic potential, by quadrature; `c2` is
/// `∂₁ω + ∂₂ω` in the `C¹` regime and a central difference of the diagonal
/// map otherwise.
pub fn check_conditions_generic(
    d: &RadialPotentialDescriptor,
    radius: f64,
    dim: usize,
    ctx: &KernelContext,
) -> Result<ConditionValues> {
    if !(radius > 0.0) {
        return Err(Error::domain(format!("shell radius must be positive, got {radius}")));
    }
    let c0 = omega_generic(d, radius, radius, dim, ctx)?.value;
    if d.regularity(dim).omega_continuity_class == OmegaContinuity::C1 {
        let c1 = d1_omega_generic(d, radius, radius, dim, ctx)?;
        let c2 = c1 + d2_omega_generic(d, radius, radius, dim, ctx)?;
        Ok(ConditionValues { c0, c1, c2 })
    } else {
        let f = diagonal_map(d, dim, ctx);
        let h = 1e-5 * radius;
        let c2 = (-f(radius + 2.0 * h)? + 8.0 * f(radius + h)? - 8.0 * f(radius - h)? + f(radius - 2.0 * h)?)
            / (12.0 * h);
        Ok(ConditionValues { c0, c1: f64::INFINITY, c2 })
    }
}

/// Interaction energy `E(r, η) = E[δ_r, δ_η]` of two unit shells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEnergySample {
    pub r: f64,
    pub eta: f64,
    pub value: f64,
}

fn check_pair(r: f64, eta: f64) -> Result<()> {
    if !(r >= 0.0 && eta >= 0.0) || !(r.is_finite() && eta.is_finite()) || r.max(eta) == 0.0 {
        return Err(Error::domain(format!("pair energy needs finite r, eta >= 0, not both zero; got ({r}, {eta})")));
    }
    Ok(())
}

/// `E(r, η) = (1/2) ⨍⨍ W(r x - η y) dσ(x) dσ(y)`.
///
/// ```
/// use shellflow::{kernel::KernelContext, stability::pair_energy, PowerLawPotential};
///
/// let p = PowerLawPotential::new(4.0, 2.0, 2).unwrap();
/// let r = 3f64.sqrt() / 3.0;
/// let e = pair_energy(&p, r, r, &KernelContext::default()).unwrap();
/// assert!((e.value + 1.0 / 12.0).abs() < 1e-13);
/// ```
pub fn pair_energy(p: &PowerLawPotential, r: f64, eta: f64, ctx: &KernelContext) -> Result<PairEnergySample> {
    check_pair(r, eta)?;
    let (a, b, n) = (p.a(), p.b(), p.dim());
    if n >= 2 && is_diagonal(r, eta) && a != 0.0 && b != 0.0 {
        // ⨍ |r e₁ - r y|^c = 2 ψ_c(1) r^c
        let m = |c: f64| Ok::<_, Error>(2.0 * psi_unit(c, n)? * r.powf(c) / c);
        return Ok(PairEnergySample { r, eta, value: 0.5 * (m(a)? - m(b)?) });
    }
    let value = shell_mean(n, r, eta, ctx, |dist| power_term(a, dist) - power_term(b, dist))?;
    Ok(PairEnergySample { r, eta, value: 0.5 * value })
}

/// [`pair_energy`] for a generic potential.
pub fn pair_energy_generic(
    d: &RadialPotentialDescriptor,
    r: f64,
    eta: f64,
    dim: usize,
    ctx: &KernelContext,
) -> Result<PairEnergySample> {
    check_pair(r, eta)?;
    let value = shell_mean(dim, r, eta, ctx, |dist| d.k(dist))?;
    Ok(PairEnergySample { r, eta, value: 0.5 * value })
}

fn shell_mean(dim: usize, r: f64, eta: f64, ctx: &KernelContext, k: impl Fn(f64) -> f64) -> Result<f64> {
    let diff = r - eta;
    let big = r.max(eta);
    ctx.sphere_average(dim, Some(diff.abs() / big), |_, om| {
        k((diff * diff + 2.0 * r * eta * om).sqrt())
    })
}

/// Energy changes `(split, shift)` for the two perturbations of `δ_R`:
/// moving a fraction `epsilon` of the mass to radius `R + dr`, and moving
/// the whole shell there.
pub fn instability_mode_probe(
    p: &PowerLawPotential,
    radius: f64,
    dr: f64,
    epsilon: f64,
    ctx: &KernelContext,
) -> Result<(f64, f64)> {
    if !(radius > 0.0 && radius + dr > 0.0) {
        return Err(Error::domain("perturbed radii must stay positive"));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::domain(format!("mass fraction must lie in [0, 1], got {epsilon}")));
    }
    if dr == 0.0 {
        return Ok((0.0, 0.0));
    }
    let moved = radius + dr;
    let e_rr = pair_energy(p, radius, radius, ctx)?.value;
    let e_rm = pair_energy(p, radius, moved, ctx)?.value;
    let e_mm = pair_energy(p, moved, moved, ctx)?.value;
    let keep = 1.0 - epsilon;
    let split = (keep * keep - 1.0) * e_rr + 2.0 * epsilon * keep * e_rm + epsilon * epsilon * e_mm;
    Ok((split, e_mm - e_rr))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailHypothesis {
    /// `ω(r, η) <= 1/λ - λ r^α` for `η` within `λ` of the shell.
    UpperBound,
    /// `sup_{r ∈ [0, λ]} |∂₁ω(r, η)| <= (1 + η^α)/λ`.
    SlopeNearOrigin,
    /// `|ω(r, η)| <= (1 + r^α)(1 + η^α)/λ`.
    Growth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailViolation {
    pub hypothesis: TailHypothesis,
    pub r: f64,
    pub eta: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of sampling the tail-control hypotheses. Sampling can only
/// falsify them: an empty counterexample list means none was found.
#[derive(Debug, Clone, PartialEq)]
pub struct TailControlReport {
    pub alpha: f64,
    pub lambda: f64,
    pub samples: usize,
    pub counterexamples: Vec<TailViolation>,
}

impl TailControlReport {
    pub fn no_counterexample_found(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

impl fmt::Display for TailControlReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.no_counterexample_found() {
            write!(f, "no counterexample found in {} samples (alpha = {}, lambda = {})", self.samples, self.alpha, self.lambda)
        } else {
            write!(
                f,
                "{} counterexamples in {} samples (alpha = {}, lambda = {})",
                self.counterexamples.len(),
                self.samples,
                self.alpha,
                self.lambda
            )
        }
    }
}

/// Samples the tail-control hypotheses for the shell of `p` on `r_grid`,
/// with `eta_window` points across `[R - λ, R + λ] ∩ [0, ∞)` and as many
/// radii in `(0, λ]` for the slope condition.
pub fn check_tail_control(
    p: &PowerLawPotential,
    alpha: f64,
    lambda: f64,
    r_grid: &[f64],
    eta_window: usize,
    ctx: &KernelContext,
) -> Result<TailControlReport> {
    if !(alpha >= 1.0) {
        return Err(Error::domain(format!("alpha must be >= 1, got {alpha}")));
    }
    if !(lambda > 0.0) {
        return Err(Error::domain(format!("lambda must be positive, got {lambda}")));
    }
    let radius = shell_radius(p.a(), p.b(), p.dim())?;
    let window = eta_window.max(2);
    let (e_lo, e_hi) = ((radius - lambda).max(0.0), radius + lambda);
    let etas: Vec<f64> = (0..window).map(|i| e_lo + (e_hi - e_lo) * i as f64 / (window - 1) as f64).collect();
    let near: Vec<f64> = (1..=window).map(|i| lambda * i as f64 / window as f64).collect();
    let mut report = TailControlReport { alpha, lambda, samples: 0, counterexamples: Vec::new() };
    let record = |report: &mut TailControlReport, hypothesis, r, eta, lhs: f64, rhs: f64| {
        report.samples += 1;
        if !(lhs <= rhs) {
            report.counterexamples.push(TailViolation { hypothesis, r, eta, lhs, rhs });
        }
    };
    let positive = |r: f64| r.max(f64::MIN_POSITIVE);

    for &r in r_grid {
        for &eta in &etas {
            let w = omega(p, positive(r), eta, ctx)?.value;
            record(&mut report, TailHypothesis::UpperBound, r, eta, w, 1.0 / lambda - lambda * r.powf(alpha));
        }
    }
    for &eta in r_grid {
        let mut sup: f64 = 0.0;
        let mut arg = near[0];
        for &r in &near {
            let slope = match crate::kernel::d1_omega(p, r, eta, ctx) {
                Ok(v) => v.abs(),
                Err(Error::BlowUp(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            if !(slope <= sup) {
                sup = slope;
                arg = r;
            }
        }
        record(&mut report, TailHypothesis::SlopeNearOrigin, arg, eta, sup, (1.0 + eta.powf(alpha)) / lambda);
    }
    for &r in r_grid {
        for &eta in r_grid {
            let w = omega(p, positive(r), eta, ctx)?.value.abs();
            let bound = (1.0 + r.powf(alpha)) * (1.0 + eta.powf(alpha)) / lambda;
            record(&mut report, TailHypothesis::Growth, r, eta, w, bound);
        }
    }
    Ok(report)
}
