//! The spherical-mean profile `ψ_c(s)` and the radial velocity kernel
//! `ω(r, η)`: the velocity at radius `r` induced by a unit-mass shell of
//! radius `η`.
//!
//! For the power law, `ω(r, η) = r^{b-1} ψ_b(η/r) - r^{a-1} ψ_a(η/r)` with
//!
//! ```text
//! ψ_c(s) = σ_{N-1}/σ_N ∫_0^π (1 - s cos θ)(sin θ)^{N-2} (1 + s² - 2 s cos θ)^{(c-2)/2} dθ.
//! ```
//!
//! The integrand develops a peak of width `|1 - s|` at `θ = 0` as `s -> 1`
//! (an integrable singularity at `s = 1` when `c < 2`), so the angular
//! quadrature grades its panels geometrically toward `θ = 0` there. Values on
//! the diagonal `r = η` come from the Beta-function closed form of `ψ_c(1)`.

mod poly;
mod table;

pub use table::TabulatedKernel;

use crate::error::{Error, Result};
use crate::potential::{OmegaContinuity, PowerLawPotential, RadialPotentialDescriptor};
use crate::quadrature::{graded_breakpoints, integrate_adaptive, AdaptiveSettings, GaussLegendre};
use crate::specfun::{beta, sphere_area_ratio};

pub(crate) use poly::PlanarTerm;

/// Which exact forms may replace quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClosedForm {
    /// Always integrate numerically (diagonal values still use `ψ_c(1)`).
    None,
    /// Planar kernels with even integer exponents `>= 2` are polynomials;
    /// `ψ_2 ≡ 1` in every dimension.
    #[default]
    PolynomialN2EvenPowers,
}

/// Quadrature configuration shared by all kernel evaluations.
#[derive(Debug, Clone)]
pub struct KernelContext {
    quad_order: usize,
    abs_tol: f64,
    rel_tol: f64,
    peak_grading: bool,
    closed_form: ClosedForm,
    max_panels: usize,
    rule: GaussLegendre,
}

impl Default for KernelContext {
    fn default() -> Self {
        Self::new(16, 1e-13, 1e-13).expect("default kernel context is valid")
    }
}

impl KernelContext {
    pub fn new(quad_order: usize, abs_tol: f64, rel_tol: f64) -> Result<Self> {
        if quad_order < 4 {
            return Err(Error::domain(format!("quad_order must be >= 4, got {quad_order}")));
        }
        if !(abs_tol > 0.0 && rel_tol > 0.0) {
            return Err(Error::domain("quadrature tolerances must be positive"));
        }
        Ok(Self {
            quad_order,
            abs_tol,
            rel_tol,
            peak_grading: true,
            closed_form: ClosedForm::default(),
            max_panels: 4000,
            rule: GaussLegendre::new(quad_order),
        })
    }

    pub fn with_peak_grading(mut self, on: bool) -> Self {
        self.peak_grading = on;
        self
    }

    pub fn with_closed_form(mut self, closed_form: ClosedForm) -> Self {
        self.closed_form = closed_form;
        self
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn abs_tol(&self) -> f64 {
        self.abs_tol
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    pub fn peak_grading(&self) -> bool {
        self.peak_grading
    }

    pub fn closed_form(&self) -> ClosedForm {
        self.closed_form
    }

    /// Exact planar polynomial for the exponent `c`, if allowed and available.
    pub(crate) fn planar_term(&self, c: f64, dim: usize) -> Option<PlanarTerm> {
        match self.closed_form {
            ClosedForm::PolynomialN2EvenPowers if dim == 2 || c == 2.0 => PlanarTerm::new(c),
            _ => None,
        }
    }

    /// Average of `f(cos θ, 1 - cos θ)` over the unit sphere in `R^dim`, as a
    /// function of the polar angle. `peak` is the distance `|1 - s|` that
    /// sets the width of a feature at `θ = 0`, when there is one.
    pub(crate) fn sphere_average(
        &self,
        dim: usize,
        peak: Option<f64>,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<f64> {
        if dim == 1 {
            return Ok(0.5 * (f(1.0, 0.0) + f(-1.0, 2.0)));
        }
        let ratio = sphere_area_ratio(dim)?;
        let power = dim as i32 - 2;
        let integrand = |theta: f64| {
            let half = (0.5 * theta).sin();
            let one_minus_cos = 2.0 * half * half;
            let weight = if power == 0 { 1.0 } else { theta.sin().powi(power) };
            f(theta.cos(), one_minus_cos) * weight
        };
        let breakpoints = match peak {
            Some(d) if self.peak_grading && d < 0.1 => graded_breakpoints((d / 16.0).max(1e-15)),
            _ => vec![0.0, std::f64::consts::PI],
        };
        let settings = AdaptiveSettings {
            abs_tol: self.abs_tol / ratio,
            rel_tol: self.rel_tol,
            max_panels: self.max_panels,
        };
        let res = integrate_adaptive(&self.rule, integrand, &breakpoints, &settings)?;
        Ok(ratio * res.value)
    }
}

/// A value of `ω` together with the point where it was taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaValue {
    pub value: f64,
    pub r: f64,
    pub eta: f64,
    pub on_diagonal: bool,
}

impl OmegaValue {
    fn at(r: f64, eta: f64, value: f64) -> Self {
        Self { value, r, eta, on_diagonal: is_diagonal(r, eta) }
    }
}

pub(crate) fn is_diagonal(r: f64, eta: f64) -> bool {
    (r - eta).abs() < 1e-14 * r.max(eta)
}

/// `ψ_c(s)` in dimension `dim >= 2`; use [`psi_1d`] on the line.
pub fn psi(c: f64, s: f64, dim: usize, ctx: &KernelContext) -> Result<f64> {
    if dim < 2 {
        return Err(Error::domain("psi needs dim >= 2; use psi_1d for the line"));
    }
    let floor = 2.0 - dim as f64;
    if !(c > floor) {
        return Err(Error::domain(format!("psi requires c > 2 - N = {floor}, got {c}")));
    }
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::domain(format!("psi requires finite s >= 0, got {s}")));
    }
    if s == 0.0 {
        return Ok(1.0);
    }
    if let Some(term) = ctx.planar_term(c, dim) {
        return Ok(term.psi(s));
    }
    psi_quadrature(c, s, dim, ctx)
}

fn psi_quadrature(c: f64, s: f64, dim: usize, ctx: &KernelContext) -> Result<f64> {
    let e = 0.5 * (c - 2.0);
    let d = 1.0 - s;
    ctx.sphere_average(dim, Some(d.abs()), |_, om| {
        let a2 = d * d + 2.0 * s * om;
        let lin = d + s * om;
        if e == 0.0 {
            lin
        } else {
            lin * a2.powf(e)
        }
    })
}

/// The line analogue of `ψ_c`: the two-point average
/// `(1/2)[(1 - s)|1 - s|^{c-2} + (1 + s)^{c-1}]`, with the first term taken
/// as zero at `s = 1`.
pub fn psi_1d(c: f64, s: f64) -> f64 {
    let d = 1.0 - s;
    let near = if d == 0.0 { 0.0 } else { d.signum() * d.abs().powf(c - 1.0) };
    0.5 * (near + (1.0 + s).powf(c - 1.0))
}

/// Closed form `ψ_c(1) = σ_{N-1}/σ_N · 2^{c+N-3} B((c+N-1)/2, (N-1)/2)`.
pub fn psi_at_one(c: f64, dim: usize) -> Result<f64> {
    if dim < 2 {
        return Err(Error::domain("psi_at_one needs dim >= 2"));
    }
    let n = dim as f64;
    if !(c + n - 1.0 > 0.0) {
        return Err(Error::domain(format!("psi_at_one requires c + N - 1 > 0, got c = {c}, N = {dim}")));
    }
    let ratio = sphere_area_ratio(dim)?;
    Ok(ratio * 2f64.powf(c + n - 3.0) * beta(0.5 * (c + n - 1.0), 0.5 * (n - 1.0))?)
}

/// `ψ_c'(1) / ψ_c(1) = (c-2)(c+N-2) / (2(c+N-3))`; a pole at `c + N = 3`
/// marks the end of the `C¹` regime.
pub fn psi_prime_ratio_at_one(c: f64, dim: usize) -> Result<f64> {
    let n = dim as f64;
    let denom = c + n - 3.0;
    if !(denom > 0.0) {
        return Err(Error::BlowUp(format!(
            "psi'(1) diverges for c + N - 3 <= 0 (c = {c}, N = {dim})"
        )));
    }
    Ok((c - 2.0) * (c + n - 2.0) / (2.0 * denom))
}

/// `ψ_c(1)` in any dimension, including the line.
pub(crate) fn psi_unit(c: f64, dim: usize) -> Result<f64> {
    if dim == 1 {
        Ok(psi_1d(c, 1.0))
    } else {
        psi_at_one(c, dim)
    }
}

/// `ψ_c'(1)` in any dimension, when finite.
pub(crate) fn psi_prime_unit(c: f64, dim: usize) -> Result<f64> {
    Ok(psi_prime_ratio_at_one(c, dim)? * psi_unit(c, dim)?)
}

/// `r^{c-1} ψ_c(η/r)`: the magnitude of the velocity a shell of radius `η`
/// induces at radius `r` through the term `|x|^c/c`.
pub(crate) fn power_velocity(c: f64, r: f64, eta: f64, dim: usize, ctx: &KernelContext) -> Result<f64> {
    if eta == 0.0 {
        return Ok(r.powf(c - 1.0));
    }
    if let Some(term) = ctx.planar_term(c, dim) {
        return Ok(term.value(r, eta));
    }
    if is_diagonal(r, eta) {
        return Ok(r.powf(c - 1.0) * psi_unit(c, dim)?);
    }
    let s = eta / r;
    let psi_s = if dim == 1 { psi_1d(c, s) } else { psi_quadrature(c, s, dim, ctx)? };
    Ok(r.powf(c - 1.0) * psi_s)
}

fn check_point(r: f64, eta: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!("omega requires r > 0, got {r}")));
    }
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::domain(format!("omega requires eta >= 0, got {eta}")));
    }
    Ok(())
}

/// `ω(r, η)` for the power-law potential.
pub fn omega(p: &PowerLawPotential, r: f64, eta: f64, ctx: &KernelContext) -> Result<OmegaValue> {
    check_point(r, eta)?;
    let value = power_velocity(p.b(), r, eta, p.dim(), ctx)? - power_velocity(p.a(), r, eta, p.dim(), ctx)?;
    Ok(OmegaValue::at(r, eta, value))
}

/// `ω(r, η) = -⨍ ∇W(r e₁ - η y)·e₁ dσ(y)` for a generic radial potential.
pub fn omega_generic(
    d: &RadialPotentialDescriptor,
    r: f64,
    eta: f64,
    dim: usize,
    ctx: &KernelContext,
) -> Result<OmegaValue> {
    check_point(r, eta)?;
    if !d.regularity(dim).kprime_integrable_on_hypersurfaces {
        return Err(Error::Regime(format!(
            "k' is not integrable on hypersurfaces (near-origin exponent {} in N = {dim})",
            d.near_origin_exponent
        )));
    }
    if eta == 0.0 {
        return Ok(OmegaValue::at(r, eta, -d.k_prime(r)));
    }
    let diff = r - eta;
    let value = ctx.sphere_average(dim, Some((diff / r).abs()), |_, om| {
        let a2 = diff * diff + 2.0 * r * eta * om;
        if a2 == 0.0 {
            return 0.0;
        }
        let a = a2.sqrt();
        let x1 = diff + eta * om;
        -d.k_prime(a) * x1 / a
    })?;
    Ok(OmegaValue::at(r, eta, value))
}

fn fd_derivative(f: impl Fn(f64) -> Result<f64>, x: f64, h: f64) -> Result<f64> {
    if x - 2.0 * h > 0.0 {
        let (fp2, fp1, fm1, fm2) = (f(x + 2.0 * h)?, f(x + h)?, f(x - h)?, f(x - 2.0 * h)?);
        Ok((-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h))
    } else {
        // forward fourth-order stencil near the origin
        let v: Vec<f64> = (0..5).map(|k| f(x + k as f64 * h)).collect::<Result<_>>()?;
        Ok((-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h))
    }
}

fn diagonal_derivatives(p: &PowerLawPotential, r: f64) -> Result<(f64, f64)> {
    if p.regularity().omega_continuity_class != OmegaContinuity::C1 {
        return Err(Error::BlowUp(format!(
            "∂₁ω(r, r) = +∞ for b = {} <= 3 - N = {}",
            p.b(),
            3.0 - p.dim() as f64
        )));
    }
    let n = p.dim();
    let term = |c: f64| -> Result<(f64, f64)> {
        let psi1 = psi_unit(c, n)?;
        let dpsi1 = psi_prime_unit(c, n)?;
        let scale = r.powf(c - 2.0);
        Ok((scale * ((c - 1.0) * psi1 - dpsi1), scale * dpsi1))
    };
    let (b1, b2) = term(p.b())?;
    let (a1, a2) = term(p.a())?;
    Ok((b1 - a1, b2 - a2))
}

/// `∂ω/∂r` for the power law.
///
/// Exact on the polynomial path; on the diagonal it uses
/// `r^{b-2}[(b-1)ψ_b(1) - ψ_b'(1)] - r^{a-2}[(a-1)ψ_a(1) - ψ_a'(1)]` and fails
/// with [`Error::BlowUp`] outside the `C¹` regime; elsewhere it takes a
/// fourth-order central difference with step `1e-5 max(r, η, 1)`.
pub fn d1_omega(p: &PowerLawPotential, r: f64, eta: f64, ctx: &KernelContext) -> Result<f64> {
    check_point(r, eta)?;
    let (ta, tb) = (ctx.planar_term(p.a(), p.dim()), ctx.planar_term(p.b(), p.dim()));
    if let (Some(ta), Some(tb)) = (&ta, &tb) {
        return Ok(tb.d_r(r, eta) - ta.d_r(r, eta));
    }
    if is_diagonal(r, eta) {
        return Ok(diagonal_derivatives(p, r)?.0);
    }
    let h = 1e-5 * r.max(eta).max(1.0);
    fd_derivative(|x| Ok(omega(p, x, eta, ctx)?.value), r, h)
}

/// `∂ω/∂η` for the power law; same evaluation strategy as [`d1_omega`].
pub fn d2_omega(p: &PowerLawPotential, r: f64, eta: f64, ctx: &KernelContext) -> Result<f64> {
    check_point(r, eta)?;
    let (ta, tb) = (ctx.planar_term(p.a(), p.dim()), ctx.planar_term(p.b(), p.dim()));
    if let (Some(ta), Some(tb)) = (&ta, &tb) {
        return Ok(tb.d_eta(r, eta) - ta.d_eta(r, eta));
    }
    if is_diagonal(r, eta) {
        return Ok(diagonal_derivatives(p, r)?.1);
    }
    let h = 1e-5 * r.max(eta).max(1.0);
    fd_derivative(|y| Ok(omega(p, r, y, ctx)?.value), eta, h)
}

fn check_generic_derivative(
    d: &RadialPotentialDescriptor,
    r: f64,
    eta: f64,
    dim: usize,
) -> Result<()> {
    check_point(r, eta)?;
    let flags = d.regularity(dim);
    if !flags.kprime_integrable_on_hypersurfaces {
        return Err(Error::Regime("k' is not integrable on hypersurfaces".into()));
    }
    if is_diagonal(r, eta) && flags.omega_continuity_class != OmegaContinuity::C1 {
        return Err(Error::BlowUp("∂ω diverges on the diagonal outside the C¹ regime".into()));
    }
    Ok(())
}

/// `∂ω/∂r` for a generic potential, by quadrature of `-⨍ ∂²W/∂x₁²`.
pub fn d1_omega_generic(
    d: &RadialPotentialDescriptor,
    r: f64,
    eta: f64,
    dim: usize,
    ctx: &KernelContext,
) -> Result<f64> {
    check_generic_derivative(d, r, eta, dim)?;
    if eta == 0.0 {
        return Ok(-d.k_second(r));
    }
    let diff = r - eta;
    ctx.sphere_average(dim, Some((diff / r).abs()), |_, om| {
        let a2 = diff * diff + 2.0 * r * eta * om;
        if a2 == 0.0 {
            return 0.0;
        }
        let a = a2.sqrt();
        let x1 = diff + eta * om;
        let proj = x1 * x1 / a2;
        -(d.k_second(a) * proj + d.k_prime(a) / a * (1.0 - proj))
    })
}

/// `∂ω/∂η` for a generic potential, by quadrature of `⨍ ∇(∂W/∂x₁)·y`.
pub fn d2_omega_generic(
    d: &RadialPotentialDescriptor,
    r: f64,
    eta: f64,
    dim: usize,
    ctx: &KernelContext,
) -> Result<f64> {
    check_generic_derivative(d, r, eta, dim)?;
    let diff = r - eta;
    ctx.sphere_average(dim, Some((diff / r).abs()), |cos, om| {
        let a2 = diff * diff + 2.0 * r * eta * om;
        if a2 == 0.0 {
            return 0.0;
        }
        let a = a2.sqrt();
        let x1 = diff + eta * om;
        let xy = diff - r * om;
        let proj = x1 * xy / a2;
        d.k_second(a) * proj + d.k_prime(a) / a * (cos - proj)
    })
}
