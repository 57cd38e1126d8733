//! Fast evaluation of `ω`, its partial derivatives and the pair energy for
//! the time stepper.
//!
//! Each power term `|x|^c/c` is reduced to functions of the ratio
//! `u = min(r, η)/max(r, η) ∈ [0, 1]`, tabulated once as piecewise Chebyshev
//! interpolants on panels that halve in width toward `u = 1`:
//!
//! * `P(u) = ψ_c(u)` and `P'(u)`, used when `r >= η`;
//! * `Q(u) = u^{c-1} ψ_c(1/u)` and `Q'(u)`, used when `r < η`;
//! * `M(u) = ⨍ |e₁ - u y|^c / c` (or `⨍ ln|e₁ - u y|` for `c = 0`).
//!
//! On the innermost panel the interpolant is replaced by a power-law blend
//! toward the exact value at `u = 1`.

use std::f64::consts::PI;

use super::{psi_at_one, psi_prime_ratio_at_one, KernelContext, PlanarTerm};
use crate::error::{Error, Result};
use crate::potential::power_term;

const NODES: usize = 25;
const DYADIC: usize = 40;
const PANELS: usize = DYADIC + 1;
const SECANT_ZONE: f64 = 1e-9;
const SECANT_STEP: f64 = 1e-6;

fn panel_bounds(k: usize) -> (f64, f64) {
    match k {
        0 => (0.0, 0.5),
        k if k < DYADIC => (1.0 - 0.5f64.powi(k as i32), 1.0 - 0.5f64.powi(k as i32 + 1)),
        _ => (1.0 - 0.5f64.powi(DYADIC as i32), 1.0),
    }
}

/// Chebyshev basis values at one abscissa, shared by all tables.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Basis {
    panel: usize,
    t: [f64; NODES],
    /// `(1 - u) / width` on the innermost panel.
    w: f64,
}

impl Basis {
    fn unused() -> Self {
        Self { panel: 0, t: [0.0; NODES], w: 0.0 }
    }

    pub(crate) fn new(u: f64) -> Self {
        let gap = 1.0 - u;
        let panel = if u < 0.5 {
            0
        } else if gap <= 0.0 {
            DYADIC
        } else {
            ((-gap.log2()).floor() as usize).clamp(1, DYADIC)
        };
        let mut t = [0.0; NODES];
        let mut w = 0.0;
        if panel == DYADIC {
            w = gap.max(0.0) * 2f64.powi(DYADIC as i32);
        } else {
            let (lo, hi) = panel_bounds(panel);
            let x = ((2.0 * u - lo - hi) / (hi - lo)).clamp(-1.0, 1.0);
            t[0] = 1.0;
            t[1] = x;
            for k in 2..NODES {
                t[k] = 2.0 * x * t[k - 1] - t[k - 2];
            }
        }
        Self { panel, t, w }
    }
}

#[derive(Debug, Clone)]
struct ChebTable {
    coeffs: Vec<[f64; NODES]>,
    end_value: f64,
    edge_value: f64,
    end_exponent: f64,
}

impl ChebTable {
    fn build(
        f: impl Fn(f64) -> Result<f64>,
        end_value: f64,
        end_exponent: f64,
    ) -> Result<Self> {
        let n = NODES as f64;
        let mut coeffs = Vec::with_capacity(PANELS - 1);
        for k in 0..DYADIC {
            let (lo, hi) = panel_bounds(k);
            let mut values = [0.0; NODES];
            for (j, v) in values.iter_mut().enumerate() {
                let x = (PI * (j as f64 + 0.5) / n).cos();
                *v = f(0.5 * (lo + hi) + 0.5 * (hi - lo) * x)?;
            }
            let mut c = [0.0; NODES];
            for (m, cm) in c.iter_mut().enumerate() {
                let s: f64 = values
                    .iter()
                    .enumerate()
                    .map(|(j, v)| v * (PI * m as f64 * (j as f64 + 0.5) / n).cos())
                    .sum();
                *cm = 2.0 * s / n;
            }
            c[0] *= 0.5;
            coeffs.push(c);
        }
        let edge_value = coeffs[DYADIC - 1].iter().sum();
        Ok(Self { coeffs, end_value, edge_value, end_exponent })
    }

    #[inline]
    fn eval(&self, b: &Basis) -> f64 {
        if b.panel == DYADIC {
            if b.w == 0.0 {
                return self.end_value;
            }
            return self.end_value + (self.edge_value - self.end_value) * b.w.powf(self.end_exponent);
        }
        let c = &self.coeffs[b.panel];
        let mut s = 0.0;
        for k in 0..NODES {
            s += c[k] * b.t[k];
        }
        s
    }
}

#[derive(Debug, Clone)]
struct Tables {
    p: ChebTable,
    dp: ChebTable,
    q: ChebTable,
    dq: ChebTable,
}

impl Tables {
    fn build(c: f64, dim: usize, ctx: &KernelContext) -> Result<Self> {
        let e = 0.5 * (c - 2.0);
        let g = c - 2.0;
        let n = dim as f64;
        let psi1 = psi_at_one(c, dim)?;
        let smooth = c + n - 3.0 > 0.0;
        let dpsi1 = if smooth { psi_prime_ratio_at_one(c, dim)? * psi1 } else { f64::NAN };
        let value_exp = (c + n - 2.0).min(1.0);
        let slope_exp = (c + n - 3.0).clamp(f64::MIN_POSITIVE, 1.0);
        let pow = move |a2: f64, k: f64| if k == 0.0 { 1.0 } else { a2.powf(k) };

        let p = ChebTable::build(
            |u| {
                let d = 1.0 - u;
                ctx.sphere_average(dim, Some(d), |_, om| (d + u * om) * pow(d * d + 2.0 * u * om, e))
            },
            psi1,
            value_exp,
        )?;
        let dp = ChebTable::build(
            |u| {
                let d = 1.0 - u;
                ctx.sphere_average(dim, Some(d), |x, om| {
                    let a2 = d * d + 2.0 * u * om;
                    let lin = d + u * om;
                    -x * pow(a2, e) + lin * g * (om - d) * pow(a2, e - 1.0)
                })
            },
            dpsi1,
            slope_exp,
        )?;
        let q = ChebTable::build(
            |u| {
                let d = 1.0 - u;
                ctx.sphere_average(dim, Some(d), |_, om| (om - d) * pow(d * d + 2.0 * u * om, e))
            },
            psi1,
            value_exp,
        )?;
        let dq = ChebTable::build(
            |u| {
                let d = 1.0 - u;
                ctx.sphere_average(dim, Some(d), |_, om| {
                    let a2 = d * d + 2.0 * u * om;
                    let x1 = om - d;
                    pow(a2, e) + g * x1 * x1 * pow(a2, e - 1.0)
                })
            },
            (c - 1.0) * psi1 - dpsi1,
            slope_exp,
        )?;
        Ok(Self { p, dp, q, dq })
    }
}

fn energy_table(c: f64, dim: usize, ctx: &KernelContext) -> Result<ChebTable> {
    let mean = |u: f64| {
        let d = 1.0 - u;
        ctx.sphere_average(dim, Some(d), |_, om| {
            let a2 = d * d + 2.0 * u * om;
            if c == 0.0 {
                0.5 * a2.ln()
            } else {
                a2.powf(0.5 * c) / c
            }
        })
    };
    let end = if c == 0.0 { mean(1.0)? } else { 2.0 * psi_at_one(c, dim)? / c };
    ChebTable::build(mean, end, 1.0)
}

/// Exact `P, P', Q, Q'` of a planar polynomial term, ascending in `u`.
#[derive(Debug, Clone)]
struct PolyProfiles {
    p: Vec<f64>,
    dp: Vec<f64>,
    q: Vec<f64>,
    dq: Vec<f64>,
}

fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, v)| k as f64 * v).collect()
}

#[inline]
fn horner(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * u + v)
}

impl PolyProfiles {
    fn new(term: &PlanarTerm) -> Self {
        let p = term.coefficients().to_vec();
        let q: Vec<f64> = p.iter().rev().copied().collect();
        Self { dp: derivative(&p), dq: derivative(&q), p, q }
    }
}

#[derive(Debug, Clone)]
enum Profiles {
    Chebyshev(Box<Tables>),
    Polynomial(PolyProfiles),
}

impl Profiles {
    /// `(P, P', Q, Q')` at the ratio `u`.
    #[inline]
    fn eval(&self, basis: &Basis, u: f64) -> [f64; 4] {
        match self {
            Profiles::Chebyshev(t) => [t.p.eval(basis), t.dp.eval(basis), t.q.eval(basis), t.dq.eval(basis)],
            Profiles::Polynomial(t) => [horner(&t.p, u), horner(&t.dp, u), horner(&t.q, u), horner(&t.dq, u)],
        }
    }
}

#[derive(Debug, Clone)]
enum TermKind {
    /// `c = 2`: the velocity term is exactly `r`.
    Linear,
    /// The line, where the spherical mean is a two-point average.
    Line,
    Profiled(Profiles, ChebTable),
}

#[derive(Debug, Clone)]
struct Term {
    /// Coefficient of `|x|^c / c` in the potential.
    weight: f64,
    c: f64,
    smooth: bool,
    kind: TermKind,
}

impl Term {
    /// Velocity triples at `(big, small)` and `(small, big)`, with
    /// `big_pow = big^{c-2}` supplied by the caller.
    #[inline]
    fn velocity_pair(&self, big: f64, small: f64, big_pow: f64, basis: &Basis) -> [(f64, f64, f64); 2] {
        let c = self.c;
        match &self.kind {
            TermKind::Linear => [(big, 1.0, 0.0), (small, 1.0, 0.0)],
            TermKind::Line => [self.line_velocity(big, small), self.line_velocity(small, big)],
            TermKind::Profiled(prof, _) => {
                if big == 0.0 {
                    return [(0.0, 0.0, 0.0); 2];
                }
                let u = small / big;
                let [pv, dpv, qv, dqv] = prof.eval(basis, u);
                [
                    (big_pow * big * pv, big_pow * ((c - 1.0) * pv - u * dpv), big_pow * dpv),
                    (big_pow * big * qv, big_pow * dqv, big_pow * ((c - 1.0) * qv - u * dqv)),
                ]
            }
        }
    }

    fn line_velocity(&self, r: f64, eta: f64) -> (f64, f64, f64) {
        let c = self.c;
        let d = r - eta;
        let s = r + eta;
        let near = d.abs().powf(c - 2.0);
        let far = s.powf(c - 2.0);
        let value = 0.5 * (d * near + s * far);
        (value, 0.5 * (c - 1.0) * (near + far), 0.5 * (c - 1.0) * (far - near))
    }

    /// `r^{c-1} ψ_c(η/r)` and its partial derivatives in `r` and `η`.
    fn velocity(&self, r: f64, eta: f64, basis: &Basis) -> (f64, f64, f64) {
        let big = r.max(eta);
        let small = r.min(eta);
        let big_pow = if matches!(self.kind, TermKind::Profiled(..)) { big.powf(self.c - 2.0) } else { 0.0 };
        let [at_big, at_small] = self.velocity_pair(big, small, big_pow, basis);
        if r >= eta {
            at_big
        } else {
            at_small
        }
    }

    fn value_only(&self, r: f64, eta: f64) -> f64 {
        let basis = Basis::new(ratio(r, eta));
        self.velocity(r, eta, &basis).0
    }

    /// `⨍ |r e₁ - η y|^c / c`.
    fn energy(&self, r: f64, eta: f64, basis: &Basis) -> f64 {
        let c = self.c;
        match &self.kind {
            TermKind::Linear => 0.5 * (r * r + eta * eta),
            TermKind::Line => 0.5 * (power_term(c, (r - eta).abs()) + power_term(c, r + eta)),
            TermKind::Profiled(_, m) => {
                let big = r.max(eta);
                let mv = m.eval(basis);
                if c == 0.0 {
                    big.ln() + mv
                } else {
                    big.powf(c) * mv
                }
            }
        }
    }
}

fn ratio(r: f64, eta: f64) -> f64 {
    let big = r.max(eta);
    if big == 0.0 {
        1.0
    } else {
        r.min(eta) / big
    }
}

/// Precomputed kernel for a potential `Σ_k w_k |x|^{c_k}/c_k`.
///
/// ```
/// use shellflow::kernel::{omega, KernelContext, TabulatedKernel};
/// use shellflow::PowerLawPotential;
///
/// let p = PowerLawPotential::new(3.0, 1.5, 3).unwrap();
/// let ctx = KernelContext::default();
/// let fast = TabulatedKernel::power_law(&p, &ctx).unwrap();
/// let direct = omega(&p, 0.8, 0.5, &ctx).unwrap().value;
/// assert!((fast.omega(0.8, 0.5) - direct).abs() < 1e-11);
/// ```
#[derive(Debug, Clone)]
pub struct TabulatedKernel {
    dim: usize,
    terms: Vec<Term>,
    needs_basis: bool,
}

impl TabulatedKernel {
    /// Builds tables for `Σ_k w_k |x|^{c_k}/c_k`, given as `(w_k, c_k)` pairs.
    pub fn new(terms: &[(f64, f64)], dim: usize, ctx: &KernelContext) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        let n = dim as f64;
        let mut built = Vec::with_capacity(terms.len());
        for &(weight, c) in terms {
            if !(c > 2.0 - n) || !c.is_finite() {
                return Err(Error::domain(format!("exponent {c} must exceed 2 - N = {}", 2.0 - n)));
            }
            let kind = if c == 2.0 {
                TermKind::Linear
            } else if dim == 1 {
                TermKind::Line
            } else if let Some(t) = ctx.planar_term(c, dim) {
                TermKind::Profiled(Profiles::Polynomial(PolyProfiles::new(&t)), energy_table(c, dim, ctx)?)
            } else {
                let tables = Tables::build(c, dim, ctx)?;
                TermKind::Profiled(Profiles::Chebyshev(Box::new(tables)), energy_table(c, dim, ctx)?)
            };
            built.push(Term { weight, c, smooth: c + n - 3.0 > 0.0, kind });
        }
        let needs_basis = built
            .iter()
            .any(|t| matches!(t.kind, TermKind::Profiled(Profiles::Chebyshev(_), _)));
        Ok(Self { dim, terms: built, needs_basis })
    }

    /// Kernel of `|x|^a/a - |x|^b/b`.
    pub fn power_law(p: &crate::PowerLawPotential, ctx: &KernelContext) -> Result<Self> {
        Self::new(&[(1.0, p.a()), (-1.0, p.b())], p.dim(), ctx)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `ω(r, η)`.
    pub fn omega(&self, r: f64, eta: f64) -> f64 {
        let basis = Basis::new(ratio(r, eta));
        self.terms.iter().map(|t| -t.weight * t.velocity(r, eta, &basis).0).sum()
    }

    /// `(ω, ∂ω/∂r, ∂ω/∂η)` at `(r, η)`. Where a term is not `C¹` across the
    /// diagonal, derivatives within `1e-9` of it are replaced by centred
    /// secants of width `2e-6 max(r, η)`.
    pub fn omega_with_derivatives(&self, r: f64, eta: f64) -> (f64, f64, f64) {
        let u = ratio(r, eta);
        let basis = Basis::new(u);
        let (mut w, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for t in &self.terms {
            let (v, mut dr, mut de) = t.velocity(r, eta, &basis);
            if !t.smooth && 1.0 - u < SECANT_ZONE && r > 0.0 {
                let h = SECANT_STEP * r.max(eta);
                let (r_lo, e_lo) = ((r - h).max(0.0), (eta - h).max(0.0));
                dr = (t.value_only(r + h, eta) - t.value_only(r_lo, eta)) / (r + h - r_lo);
                de = (t.value_only(r, eta + h) - t.value_only(r, e_lo)) / (eta + h - e_lo);
            }
            w -= t.weight * v;
            d1 -= t.weight * dr;
            d2 -= t.weight * de;
        }
        (w, d1, d2)
    }

    /// Number of power terms; see [`TabulatedKernel::node_powers`].
    pub(crate) fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// `x^{c_k - 2}` for every term, the per-radius factor used by
    /// [`TabulatedKernel::pair_block`].
    pub(crate) fn node_powers(&self, x: f64, out: &mut [f64]) {
        for (o, t) in out.iter_mut().zip(&self.terms) {
            *o = if matches!(t.kind, TermKind::Profiled(..)) { x.powf(t.c - 2.0) } else { 0.0 };
        }
    }

    /// `(ω, ∂ω/∂r, ∂ω/∂η)` at `(big, small)` and at `(small, big)` with one
    /// shared table lookup; `big >= small` and `big_pows` from
    /// [`TabulatedKernel::node_powers`] at `big`.
    pub(crate) fn pair_block(&self, big: f64, small: f64, big_pows: &[f64]) -> [(f64, f64, f64); 2] {
        let u = ratio(big, small);
        let basis = if self.needs_basis { Basis::new(u) } else { Basis::unused() };
        let mut out = [(0.0, 0.0, 0.0); 2];
        for (t, &bp) in self.terms.iter().zip(big_pows) {
            let mut pair = t.velocity_pair(big, small, bp, &basis);
            if !t.smooth && 1.0 - u < SECANT_ZONE && big > 0.0 {
                let h = SECANT_STEP * big;
                for (k, (r, eta)) in [(big, small), (small, big)].into_iter().enumerate() {
                    pair[k].1 = (t.value_only(r + h, eta) - t.value_only((r - h).max(0.0), eta)) / (r + h - (r - h).max(0.0));
                    pair[k].2 = (t.value_only(r, eta + h) - t.value_only(r, (eta - h).max(0.0))) / (eta + h - (eta - h).max(0.0));
                }
            }
            for (o, p) in out.iter_mut().zip(pair) {
                o.0 -= t.weight * p.0;
                o.1 -= t.weight * p.1;
                o.2 -= t.weight * p.2;
            }
        }
        out
    }

    /// `⨍ W(r e₁ - η y) dσ(y)`, the interaction energy of two unit shells.
    pub fn pair_energy(&self, r: f64, eta: f64) -> f64 {
        let basis = Basis::new(ratio(r, eta));
        self.terms.iter().map(|t| t.weight * t.energy(r, eta, &basis)).sum()
    }
}
