//! Exact polynomial forms of `ψ_c` in the plane for even exponents `c >= 2`.
//!
//! `(1 - s x)(1 + s^2 - 2 s x)^{(c-2)/2}` is expanded as a polynomial in
//! `(s, x)` with `x = cos θ`, and each power of `x` is replaced by its mean
//! over `[0, π]`.

/// Coefficients `p_j` of `ψ_c(s) = Σ_j p_j s^j`, or `None` when `c` is not an
/// even integer `>= 2`.
pub(crate) fn planar_psi_coefficients(c: f64) -> Option<Vec<f64>> {
    if !(c >= 2.0) || c.fract() != 0.0 || (c as i64) % 2 != 0 || c > 60.0 {
        return None;
    }
    let m = (c as usize - 2) / 2;
    // poly[i][k]: coefficient of s^i x^k
    let mut poly = vec![vec![1.0]];
    for _ in 0..m {
        poly = multiply(&poly, &[(0, 0, 1.0), (2, 0, 1.0), (1, 1, -2.0)]);
    }
    poly = multiply(&poly, &[(0, 0, 1.0), (1, 1, -1.0)]);
    let coeffs = poly
        .iter()
        .map(|row| row.iter().enumerate().map(|(k, v)| v * cosine_moment(k)).sum())
        .collect();
    Some(coeffs)
}

fn multiply(poly: &[Vec<f64>], factor: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let max_i = poly.len() + factor.iter().map(|t| t.0).max().unwrap_or(0);
    let max_k = poly.iter().map(Vec::len).max().unwrap_or(0) + factor.iter().map(|t| t.1).max().unwrap_or(0);
    let mut out = vec![vec![0.0; max_k]; max_i];
    for (i, row) in poly.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            for &(di, dk, f) in factor {
                out[i + di][k + dk] += v * f;
            }
        }
    }
    out
}

/// `(1/π) ∫_0^π cos^k θ dθ`.
fn cosine_moment(k: usize) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    // (k-1)!! / k!!
    let mut m = 1.0;
    let mut j = 2;
    while j <= k {
        m *= (j - 1) as f64 / j as f64;
        j += 2;
    }
    m
}

/// The homogeneous polynomial `T(r, η) = r^{c-1} ψ_c(η/r) = Σ_j p_j r^{c-1-j} η^j`
/// and its partial derivatives.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PlanarTerm {
    degree: i32,
    coeffs: Vec<f64>,
}

impl PlanarTerm {
    pub(crate) fn new(c: f64) -> Option<Self> {
        let mut coeffs = planar_psi_coefficients(c)?;
        let degree = c as i32 - 1;
        debug_assert!(coeffs.iter().skip(degree as usize + 1).all(|p| *p == 0.0));
        coeffs.resize(degree as usize + 1, 0.0);
        Some(Self { degree, coeffs })
    }

    /// `(p_0, ..., p_{c-1})`.
    pub(crate) fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub(crate) fn psi(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, p| acc * s + p)
    }

    /// `(coefficient, power of r, power of η)` for the nonzero monomials.
    fn monomials(&self) -> impl Iterator<Item = (f64, i32, i32)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != 0.0)
            .map(move |(j, p)| (*p, self.degree - j as i32, j as i32))
    }

    pub(crate) fn value(&self, r: f64, eta: f64) -> f64 {
        self.monomials().map(|(p, i, j)| p * r.powi(i) * eta.powi(j)).sum()
    }

    pub(crate) fn d_r(&self, r: f64, eta: f64) -> f64 {
        self.monomials()
            .filter(|(_, i, _)| *i > 0)
            .map(|(p, i, j)| p * i as f64 * r.powi(i - 1) * eta.powi(j))
            .sum()
    }

    pub(crate) fn d_eta(&self, r: f64, eta: f64) -> f64 {
        self.monomials()
            .filter(|(_, _, j)| *j > 0)
            .map(|(p, i, j)| p * j as f64 * r.powi(i) * eta.powi(j - 1))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_forms() {
        assert_eq!(PlanarTerm::new(2.0).unwrap().coefficients(), &[1.0, 0.0]);
        assert_eq!(PlanarTerm::new(4.0).unwrap().coefficients(), &[1.0, 0.0, 2.0, 0.0]);
        let psi4 = planar_psi_coefficients(4.0).unwrap();
        let trimmed: Vec<f64> = psi4.into_iter().take(3).collect();
        assert_eq!(trimmed, vec![1.0, 0.0, 2.0]);
        assert!(planar_psi_coefficients(3.0).is_none());
        assert!(planar_psi_coefficients(1.0).is_none());
        assert!(planar_psi_coefficients(2.5).is_none());
    }

    #[test]
    fn quartic_term_matches_hand_expansion() {
        let t = PlanarTerm::new(4.0).unwrap();
        let (r, eta) = (0.7, 1.3);
        assert!((t.value(r, eta) - (r.powi(3) + 2.0 * r * eta * eta)).abs() < 1e-14);
        assert!((t.d_r(r, eta) - (3.0 * r * r + 2.0 * eta * eta)).abs() < 1e-14);
        assert!((t.d_eta(r, eta) - 4.0 * r * eta).abs() < 1e-14);
        assert_eq!(t.value(0.0, 2.0), 0.0);
    }
}
