use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// A radial probability measure in mass coordinates: `phi[i]` is the
/// pseudo-inverse of the radial distribution function at `xi[i] = i/(M-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialState {
    xi: Vec<f64>,
    phi: Vec<f64>,
    t: f64,
}

/// Uniform mass grid with `m` nodes on `[0, 1]`, endpoints included.
pub(crate) fn mass_grid(m: usize) -> Vec<f64> {
    (0..m).map(|i| i as f64 / (m - 1) as f64).collect()
}

pub(crate) fn check_grid_size(m: usize) -> Result<()> {
    if m < 5 || m % 2 == 0 {
        return Err(Error::domain(format!("grid size must be odd and >= 5, got {m}")));
    }
    Ok(())
}

impl RadialState {
    /// Validates size, sign and monotonicity of `phi`.
    pub fn new(phi: Vec<f64>, t: f64) -> Result<Self> {
        check_grid_size(phi.len())?;
        if let Some(x) = phi.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::domain(format!("radii must be finite and nonnegative, found {x}")));
        }
        if phi.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::domain("radii must be non-decreasing in the mass coordinate"));
        }
        Ok(Self { xi: mass_grid(phi.len()), phi, t })
    }

    /// All mass on the sphere of radius `radius`.
    pub fn shell(m: usize, radius: f64) -> Result<Self> {
        Self::new(vec![radius; m], 0.0)
    }

    pub(crate) fn from_parts_unchecked(xi: Vec<f64>, phi: Vec<f64>, t: f64) -> Self {
        Self { xi, phi, t }
    }

    pub(crate) fn set_time(&mut self, t: f64) {
        self.t = t;
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// Inner support radius `φ(0)`.
    pub fn inner_radius(&self) -> f64 {
        self.phi[0]
    }

    /// Outer support radius `φ(1)`.
    pub fn outer_radius(&self) -> f64 {
        self.phi[self.phi.len() - 1]
    }

    pub fn is_monotone(&self) -> bool {
        self.phi.windows(2).all(|w| w[1] >= w[0])
    }
}

/// Radial initial data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// Constant density on the annulus `r1 <= |x| <= r2`.
    UniformAnnulus { r1: f64, r2: f64 },
    /// `φ(ξ) = R + amp (2ξ - 1)^mode` with odd `mode`.
    ShellPerturbed { radius: f64, amp: f64, mode: u32 },
    /// Density `exp(-(|x| - center)²/(2σ²))` restricted to
    /// `| |x| - center | <= cut σ`.
    TruncatedGaussianRadial { center: f64, sigma: f64, cut: f64 },
}

/// Samples the pseudo-inverse of the radial distribution of `profile` in
/// `R^dim` on an `m`-node mass grid.
///
/// ```
/// use shellflow::solver::{init_from_density, Profile};
///
/// let s = init_from_density(Profile::UniformAnnulus { r1: 0.3, r2: 0.9 }, 5, 2).unwrap();
/// let mid: f64 = (0.09f64 + 0.5 * (0.81 - 0.09)).sqrt();
/// assert!((s.phi()[2] - mid).abs() < 1e-15);
/// ```
pub fn init_from_density(profile: Profile, m: usize, dim: usize) -> Result<RadialState> {
    check_grid_size(m)?;
    if dim == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    let xi = mass_grid(m);
    let n = dim as f64;
    let phi: Vec<f64> = match profile {
        Profile::UniformAnnulus { r1, r2 } => {
            if !(r1 >= 0.0 && r2 > r1 && r2.is_finite()) {
                return Err(Error::domain(format!("annulus needs 0 <= r1 < r2, got ({r1}, {r2})")));
            }
            let (lo, hi) = (r1.powf(n), r2.powf(n));
            xi.iter()
                .enumerate()
                .map(|(i, x)| match i {
                    0 => r1,
                    i if i == m - 1 => r2,
                    _ => (lo + x * (hi - lo)).powf(1.0 / n),
                })
                .collect()
        }
        Profile::ShellPerturbed { radius, amp, mode } => {
            if !(radius > 0.0 && amp >= 0.0 && amp < radius) {
                return Err(Error::domain(format!("need 0 <= amp < R, got R = {radius}, amp = {amp}")));
            }
            if mode % 2 == 0 {
                return Err(Error::domain(format!("perturbation mode must be odd, got {mode}")));
            }
            xi.iter().map(|x| radius + amp * (2.0 * x - 1.0).powi(mode as i32)).collect()
        }
        Profile::TruncatedGaussianRadial { center, sigma, cut } => {
            if !(sigma > 0.0 && cut > 0.0 && center.is_finite()) {
                return Err(Error::domain(format!("need sigma > 0 and cut > 0, got sigma = {sigma}, cut = {cut}")));
            }
            let lo = (center - cut * sigma).max(0.0);
            let hi = center + cut * sigma;
            if !(hi > lo) {
                return Err(Error::domain("truncated Gaussian has empty support"));
            }
            let density = move |r: f64| (-(r - center).powi(2) / (2.0 * sigma * sigma)).exp() * r.powf(n - 1.0);
            invert_cdf(density, lo, hi, &xi)?
        }
    };
    RadialState::new(phi, 0.0)
}

/// Pseudo-inverse of the normalised distribution of a density on `[lo, hi]`.
fn invert_cdf(density: impl Fn(f64) -> f64, lo: f64, hi: f64, levels: &[f64]) -> Result<Vec<f64>> {
    const CELLS: usize = 2048;
    let rule = GaussLegendre::new(16);
    let h = (hi - lo) / CELLS as f64;
    let mut cumulative = Vec::with_capacity(CELLS + 1);
    cumulative.push(0.0);
    for k in 0..CELLS {
        let a = lo + k as f64 * h;
        let last = cumulative[k];
        cumulative.push(last + rule.integrate(&density, a, a + h));
    }
    let mass = cumulative[CELLS];
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::domain("profile has zero or non-finite mass"));
    }
    let mut out = Vec::with_capacity(levels.len());
    for &x in levels {
        let target = x * mass;
        if x <= 0.0 {
            out.push(lo);
            continue;
        }
        if x >= 1.0 {
            out.push(hi);
            continue;
        }
        let k = cumulative.partition_point(|&c| c < target).clamp(1, CELLS) - 1;
        let a = lo + k as f64 * h;
        let (mut left, mut right) = (a, a + h);
        for _ in 0..100 {
            let mid = 0.5 * (left + right);
            if cumulative[k] + rule.integrate(&density, a, mid) < target {
                left = mid;
            } else {
                right = mid;
            }
            if right - left <= 1e-15 * right.max(1.0) {
                break;
            }
        }
        out.push(0.5 * (left + right));
    }
    for i in 1..out.len() {
        out[i] = out[i].max(out[i - 1]);
    }
    Ok(out)
}
