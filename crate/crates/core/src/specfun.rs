//! Scalar special functions: `ln Γ`, the Beta function and unit-sphere areas.
//!
//! `ln Γ` uses the Stirling series after shifting the argument above 10, and a
//! Taylor series in ζ-values around the zeros at 1 and 2 so that the result
//! keeps its relative accuracy where `ln Γ` itself is small.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// ζ(k) for k = 2..=30.
const ZETA: [f64; 29] = [
    1.644_934_066_848_226_4,
    1.202_056_903_159_594_2,
    1.082_323_233_711_138_1,
    1.036_927_755_143_37,
    1.017_343_061_984_449_2,
    1.008_349_277_381_923,
    1.004_077_356_197_944_4,
    1.002_008_392_826_082_1,
    1.000_994_575_127_818,
    1.000_494_188_604_119_4,
    1.000_246_086_553_308,
    1.000_122_713_347_578_5,
    1.000_061_248_135_058_8,
    1.000_030_588_236_307,
    1.000_015_282_259_408_6,
    1.000_007_637_197_637_9,
    1.000_003_817_293_265,
    1.000_001_908_212_716_5,
    1.000_000_953_962_033_8,
    1.000_000_476_932_986_9,
    1.000_000_238_450_502_7,
    1.000_000_119_219_926,
    1.000_000_059_608_189,
    1.000_000_029_803_503_4,
    1.000_000_014_901_554_9,
    1.000_000_007_450_711_8,
    1.000_000_003_725_334,
    1.000_000_001_862_659_8,
    1.000_000_000_931_327_5,
];

/// B_{2k} / (2k (2k-1)) for k = 1..=10.
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
    43867.0 / 244_188.0,
    -174_611.0 / 125_400.0,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln Γ(1 + eps)` for `|eps| <= 1/4`.
fn ln_gamma_1p(eps: f64) -> f64 {
    let mut sum = 0.0;
    let mut pow = -eps;
    for k in 2..=40usize {
        pow *= -eps;
        let zeta = if k <= 30 { ZETA[k - 2] } else { 1.0 + 0.5f64.powi(k as i32) };
        // pow = (-1)^k eps^k
        sum += zeta * pow / k as f64;
    }
    -EULER_GAMMA * eps + sum
}

fn ln_gamma_stirling(z: f64) -> f64 {
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut corr = 0.0;
    let mut p = inv;
    for c in STIRLING {
        corr += c * p;
        p *= inv2;
    }
    (z - 0.5) * z.ln() - z + LN_SQRT_2PI + corr
}

/// Natural logarithm of the Gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("log_gamma requires x > 0, got {x}")));
    }
    if (x - 1.0).abs() <= 0.25 {
        return Ok(ln_gamma_1p(x - 1.0));
    }
    if (x - 2.0).abs() <= 0.25 {
        let eps = x - 2.0;
        return Ok(eps.ln_1p() + ln_gamma_1p(eps));
    }
    if x >= 10.0 {
        return Ok(ln_gamma_stirling(x));
    }
    let mut z = x;
    let mut prod = 1.0;
    while z < 10.0 {
        prod *= z;
        z += 1.0;
    }
    Ok(ln_gamma_stirling(z) - prod.ln())
}

/// Euler Beta function, evaluated in log space.
///
/// The arguments are ordered before summing so that `beta(x, y)` and
/// `beta(y, x)` are bitwise identical.
pub fn beta(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0) {
        return Err(Error::domain(format!("beta requires positive arguments, got ({x}, {y})")));
    }
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    Ok((log_gamma(lo)? + log_gamma(hi)? - log_gamma(lo + hi)?).exp())
}

/// Surface measure of the unit sphere in `R^dim`, i.e. `2 π^{dim/2} / Γ(dim/2)`.
pub fn sphere_area(dim: usize) -> Result<f64> {
    match dim {
        0 => Err(Error::domain("sphere_area requires dim >= 1")),
        1 => Ok(2.0),
        2 => Ok(2.0 * PI),
        // σ_{d+2} = 2π σ_d / d
        d => Ok(2.0 * PI * sphere_area(d - 2)? / (d - 2) as f64),
    }
}

/// `σ_{N-1} / σ_N`, the prefactor that turns a polar-angle integral into a
/// normalized sphere average. Requires `dim >= 2`.
pub fn sphere_area_ratio(dim: usize) -> Result<f64> {
    if dim < 2 {
        return Err(Error::domain("sphere_area_ratio requires dim >= 2"));
    }
    Ok(sphere_area(dim - 1)? / sphere_area(dim)?)
}
