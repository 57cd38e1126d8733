//! Panel Gauss-Legendre quadrature with global adaptive refinement, and
//! composite Simpson weights for the mass-coordinate grid.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are the roots of `P_n`, found by Newton's method from the
    /// Chebyshev-like initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integral of `f` over `[a, b]`, together with the integral of `|f|`.
    fn panel(&self, f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        let mut abs = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * x);
            sum += w * v;
            abs += w * v.abs();
        }
        (half * sum, half * abs)
    }

    /// Fixed-order rule on `[a, b]`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        self.panel(&f, a, b).0
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Sum over panels of `|coarse - refined|`; pessimistic for smooth panels.
    pub error: f64,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    abs: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Settings for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

fn make_panel(rule: &GaussLegendre, f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Panel {
    let (coarse, _) = rule.panel(f, a, b);
    let m = 0.5 * (a + b);
    let (l, la) = rule.panel(f, a, m);
    let (r, ra) = rule.panel(f, m, b);
    let value = l + r;
    Panel { a, b, value, abs: la + ra, error: (value - coarse).abs() }
}

/// Globally adaptive integration over the consecutive intervals defined by
/// `breakpoints` (at least two, increasing). The panel with the largest error
/// estimate is bisected until the total estimate drops below
/// `max(abs_tol, rel_tol |I|)` or reaches the rounding floor of `∫|f|`.
pub fn integrate_adaptive(
    rule: &GaussLegendre,
    f: impl Fn(f64) -> f64,
    breakpoints: &[f64],
    settings: &AdaptiveSettings,
) -> Result<QuadResult> {
    assert!(breakpoints.len() >= 2, "need at least one interval");
    let mut heap = BinaryHeap::with_capacity(breakpoints.len() * 2);
    for w in breakpoints.windows(2) {
        if w[1] > w[0] {
            heap.push(make_panel(rule, &f, w[0], w[1]));
        }
    }
    let floor_factor = 50.0 * f64::EPSILON;
    loop {
        let (mut value, mut error, mut abs) = (0.0, 0.0, 0.0);
        for p in heap.iter() {
            value += p.value;
            error += p.error;
            abs += p.abs;
        }
        let tol = settings.abs_tol.max(settings.rel_tol * value.abs());
        if error <= tol || error <= floor_factor * abs {
            if !value.is_finite() {
                return Err(Error::Quadrature { value, error });
            }
            return Ok(QuadResult { value, error });
        }
        if heap.len() >= settings.max_panels {
            return Err(Error::Quadrature { value, error });
        }
        let worst = heap.pop().expect("heap is never empty here");
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a && m < worst.b) {
            // interval exhausted at floating-point resolution
            return Err(Error::Quadrature { value, error });
        }
        heap.push(make_panel(rule, &f, worst.a, m));
        heap.push(make_panel(rule, &f, m, worst.b));
    }
}

/// Breakpoints on `[0, π]` refined geometrically toward `θ = 0`, down to the
/// scale `floor`.
pub(crate) fn graded_breakpoints(floor: f64) -> Vec<f64> {
    let mut pts = vec![PI];
    let mut x = PI;
    while x > floor {
        x *= 0.5;
        pts.push(x);
    }
    pts.push(0.0);
    pts.reverse();
    pts
}

/// Composite Simpson weights for `m` equispaced nodes (`m` odd, `m >= 3`)
/// with spacing `h`.
pub fn simpson_weights(m: usize, h: f64) -> Result<Vec<f64>> {
    if m < 3 || m % 2 == 0 {
        return Err(Error::domain(format!("Simpson rule needs an odd node count >= 3, got {m}")));
    }
    let mut w = vec![0.0; m];
    for (i, wi) in w.iter_mut().enumerate() {
        *wi = if i == 0 || i == m - 1 {
            h / 3.0
        } else if i % 2 == 1 {
            4.0 * h / 3.0
        } else {
            2.0 * h / 3.0
        };
    }
    Ok(w)
}
