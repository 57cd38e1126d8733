use super::RadialState;
use crate::error::{Error, Result};
use crate::kernel::psi_unit;
use crate::quadrature::simpson_weights;
use crate::PowerLawPotential;

/// Per-snapshot summary of a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub t: f64,
    /// `d_∞(μ, δ_R) = max |φ - R|`.
    pub d_inf: f64,
    pub d_2: f64,
    /// `d_α` for the configured `α`.
    pub d_alpha: f64,
    /// Support diameter `φ(1) - φ(0)`.
    pub gamma: f64,
    /// Mean radius minus the reference radius.
    pub theta: f64,
    pub energy: f64,
    /// `-∫ V²`.
    pub dissipation: f64,
    /// `max |V|`.
    pub max_velocity: f64,
    /// Newton iterations spent on the step that produced this state.
    pub newton_iters: usize,
    /// Whether `φ(1)` respects the a-priori support bound.
    pub support_ok: bool,
}

/// Transport distance of order `alpha` (`f64::INFINITY` for the sup norm)
/// between the state and the shell `δ_R`.
///
/// ```
/// use shellflow::solver::{wasserstein_to_shell, RadialState};
///
/// let s = RadialState::new(vec![0.7; 9], 0.0).unwrap();
/// assert!((wasserstein_to_shell(&s, 0.5, 2.0).unwrap() - 0.2).abs() < 1e-15);
/// assert!((wasserstein_to_shell(&s, 0.5, f64::INFINITY).unwrap() - 0.2).abs() < 1e-15);
/// ```
pub fn wasserstein_to_shell(state: &RadialState, r_ref: f64, alpha: f64) -> Result<f64> {
    if !(alpha >= 1.0) {
        return Err(Error::domain(format!("transport order must be >= 1, got {alpha}")));
    }
    if !(r_ref >= 0.0) {
        return Err(Error::domain(format!("reference radius must be nonnegative, got {r_ref}")));
    }
    if alpha.is_infinite() {
        return Ok(state.phi().iter().map(|p| (p - r_ref).abs()).fold(0.0, f64::max));
    }
    let w = simpson_weights(state.len(), 1.0 / (state.len() - 1) as f64)?;
    let integral: f64 = state.phi().iter().zip(&w).map(|(p, wi)| wi * (p - r_ref).abs().powf(alpha)).sum();
    Ok(integral.max(0.0).powf(1.0 / alpha))
}

/// `(Γ, Θ)`: support diameter and mean radius minus `r_ref`.
pub fn gamma_theta(state: &RadialState, r_ref: f64) -> (f64, f64) {
    let w = simpson_weights(state.len(), 1.0 / (state.len() - 1) as f64)
        .expect("states always have a Simpson-compatible size");
    let mean: f64 = state.phi().iter().zip(&w).map(|(p, wi)| p * wi).sum();
    (state.outer_radius() - state.inner_radius(), mean - r_ref)
}

/// The a-priori bound `max(φ(1, 0), (K_a/K_b)^{1/(b-a)})` on the outer
/// support radius of a power-law flow.
pub fn support_bound(p: &PowerLawPotential, initial_outer_radius: f64) -> Result<f64> {
    let (a, b, n) = (p.a(), p.b(), p.dim());
    let (ka, kb) = if b >= 2.0 {
        (1.0, psi_unit(b, n)?)
    } else if a >= 2.0 {
        (1.0, 1.0)
    } else {
        (psi_unit(a, n)?, 1.0)
    };
    Ok(initial_outer_radius.max((ka / kb).powf(1.0 / (b - a))))
}

/// Whether `φ(1)` stays below [`support_bound`] computed from the initial
/// outer radius (with slack `1e-8`).
pub fn support_bound_check(state: &RadialState, p: &PowerLawPotential, initial_outer_radius: f64) -> Result<bool> {
    Ok(state.outer_radius() <= support_bound(p, initial_outer_radius)? + 1e-8)
}

/// Least-squares slope of `ln y` against `t` over samples with `t` in
/// `[t_min, t_max]` and `y > 0`; `None` with fewer than two samples.
pub fn fit_log_slope(t: &[f64], y: &[f64], t_min: f64, t_max: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(ti, yi)| **ti >= t_min && **ti <= t_max && **yi > 0.0)
        .map(|(ti, yi)| (*ti, yi.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}
