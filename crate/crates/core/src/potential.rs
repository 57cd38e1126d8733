//! Radial interaction potentials `W(x) = k(|x|)`.
//!
//! The power-law family `k(r) = r^a/a - r^b/b` gets a dedicated value type
//! with closed-form derivatives. Anything else is described by a
//! [`RadialPotentialDescriptor`] carrying user-supplied derivative callables.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// `r^c / c`, with the logarithmic convention `ln r` for `c = 0`.
pub(crate) fn power_term(c: f64, r: f64) -> f64 {
    if c == 0.0 {
        r.ln()
    } else {
        r.powf(c) / c
    }
}

/// The repulsive-attractive power law `W(x) = |x|^a/a - |x|^b/b` in `R^dim`.
///
/// An exponent equal to zero stands for the logarithm (`|x|^0/0 -> ln|x|`),
/// which keeps `k'(r) = r^{a-1} - r^{b-1}` valid for every admissible pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawPotential {
    a: f64,
    b: f64,
    dim: usize,
}

impl PowerLawPotential {
    /// Requires `2 - dim < b < a` and `dim >= 1`.
    pub fn new(a: f64, b: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::domain(format!("exponents must be finite, got a = {a}, b = {b}")));
        }
        let floor = 2.0 - dim as f64;
        if !(b > floor) {
            return Err(Error::domain(format!(
                "repulsive exponent b = {b} must exceed 2 - N = {floor}"
            )));
        }
        if !(b < a) {
            return Err(Error::domain(format!("need b < a, got a = {a}, b = {b}")));
        }
        Ok(Self { a, b, dim })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `k(r) = r^a/a - r^b/b`.
    pub fn k(&self, r: f64) -> Result<f64> {
        if r < 0.0 || r.is_nan() {
            return Err(Error::domain(format!("k(r) requires r >= 0, got {r}")));
        }
        if r == 0.0 {
            if self.b <= 0.0 {
                return Err(Error::domain("k is singular at r = 0 for b <= 0"));
            }
            return Ok(0.0);
        }
        Ok(power_term(self.a, r) - power_term(self.b, r))
    }

    /// `k'(r) = r^{a-1} - r^{b-1}`.
    pub fn k_prime(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::domain(format!("k'(r) requires r > 0, got {r}")));
        }
        Ok(r.powf(self.a - 1.0) - r.powf(self.b - 1.0))
    }

    /// `k''(r) = (a-1) r^{a-2} - (b-1) r^{b-2}`.
    pub fn k_second(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::domain(format!("k''(r) requires r > 0, got {r}")));
        }
        Ok((self.a - 1.0) * r.powf(self.a - 2.0) - (self.b - 1.0) * r.powf(self.b - 2.0))
    }

    pub fn regularity(&self) -> RegularityFlags {
        RegularityFlags::from_origin_exponent(self.b, self.dim)
    }

    /// The same potential as a generic descriptor.
    pub fn descriptor(&self) -> RadialPotentialDescriptor {
        let (a, b) = (self.a, self.b);
        RadialPotentialDescriptor::new(
            move |r| power_term(a, r) - power_term(b, r),
            move |r| r.powf(a - 1.0) - r.powf(b - 1.0),
            move |r| (a - 1.0) * r.powf(a - 2.0) - (b - 1.0) * r.powf(b - 2.0),
            b,
            Some(1.0),
        )
    }
}

/// Continuity class of the kernel `ω` across the diagonal `r = η`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaContinuity {
    NotContinuous,
    ContinuousOnly,
    C1,
}

impl fmt::Display for OmegaContinuity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OmegaContinuity::NotContinuous => "not-continuous",
            OmegaContinuity::ContinuousOnly => "continuous-only",
            OmegaContinuity::C1 => "c1",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegularityFlags {
    pub kprime_integrable_on_hypersurfaces: bool,
    pub laplacian_integrable_on_hypersurfaces: bool,
    pub omega_continuity_class: OmegaContinuity,
}

impl RegularityFlags {
    /// Flags for a potential behaving like `r^p` at the origin in dimension `dim`.
    ///
    /// `k'` is integrable on hypersurfaces iff `p > 2 - N`, the Laplacian iff
    /// `p > 3 - N`; the boundary `p = 3 - N` stays in the continuous-only class.
    pub fn from_origin_exponent(p: f64, dim: usize) -> Self {
        let n = dim as f64;
        let kprime = p > 2.0 - n;
        let laplacian = p > 3.0 - n;
        let class = if laplacian {
            OmegaContinuity::C1
        } else if kprime {
            OmegaContinuity::ContinuousOnly
        } else {
            OmegaContinuity::NotContinuous
        };
        Self {
            kprime_integrable_on_hypersurfaces: kprime,
            laplacian_integrable_on_hypersurfaces: laplacian,
            omega_continuity_class: class,
        }
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A radial potential given by its profile `k` and the first two derivatives.
#[derive(Clone)]
pub struct RadialPotentialDescriptor {
    k: ScalarFn,
    k_prime: ScalarFn,
    k_second: ScalarFn,
    /// Leading power `p` with `k(r) ~ c r^p` as `r -> 0`.
    pub near_origin_exponent: f64,
    /// A radius beyond which `k' >= 0`, when known.
    pub attractive_beyond: Option<f64>,
}

impl fmt::Debug for RadialPotentialDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialPotentialDescriptor")
            .field("near_origin_exponent", &self.near_origin_exponent)
            .field("attractive_beyond", &self.attractive_beyond)
            .finish_non_exhaustive()
    }
}

impl RadialPotentialDescriptor {
    pub fn new(
        k: impl Fn(f64) -> f64 + Send + Sync + 'static,
        k_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        k_second: impl Fn(f64) -> f64 + Send + Sync + 'static,
        near_origin_exponent: f64,
        attractive_beyond: Option<f64>,
    ) -> Self {
        Self {
            k: Arc::new(k),
            k_prime: Arc::new(k_prime),
            k_second: Arc::new(k_second),
            near_origin_exponent,
            attractive_beyond,
        }
    }

    /// Purely attractive `k(r) = r^q / q` (`ln r` for `q = 0`).
    pub fn pure_attractive(q: f64) -> Self {
        Self::new(
            move |r| power_term(q, r),
            move |r| r.powf(q - 1.0),
            move |r| (q - 1.0) * r.powf(q - 2.0),
            q,
            Some(0.0),
        )
    }

    pub fn k(&self, r: f64) -> f64 {
        (self.k)(r)
    }

    pub fn k_prime(&self, r: f64) -> f64 {
        (self.k_prime)(r)
    }

    pub fn k_second(&self, r: f64) -> f64 {
        (self.k_second)(r)
    }

    pub fn regularity(&self, dim: usize) -> RegularityFlags {
        RegularityFlags::from_origin_exponent(self.near_origin_exponent, dim)
    }

    /// Checks `k_prime` and `k_second` against central differences of `k` and
    /// `k_prime` on the given radii (relative tolerance 1e-5).
    pub fn check_derivatives(&self, radii: &[f64]) -> Result<()> {
        for &r in radii {
            if !(r > 0.0) {
                return Err(Error::domain(format!("sample radius must be positive, got {r}")));
            }
            let h = 1e-5 * r;
            let fd1 = (self.k(r + h) - self.k(r - h)) / (2.0 * h);
            let fd2 = (self.k_prime(r + h) - self.k_prime(r - h)) / (2.0 * h);
            for (name, fd, exact) in [("k'", fd1, self.k_prime(r)), ("k''", fd2, self.k_second(r))] {
                let scale = exact.abs().max(1e-4);
                if (fd - exact).abs() > 1e-5 * scale {
                    return Err(Error::domain(format!(
                        "{name}({r}) = {exact} disagrees with finite difference {fd}"
                    )));
                }
            }
        }
        Ok(())
    }
}
