//! Implicit time stepping of the radial flow in mass coordinates.
//!
//! The pseudo-inverse `φ(t, ξ)` of the radial distribution function evolves
//! by `∂φ/∂t (ξ) = ∫_0^1 ω(φ(ξ), φ(ξ̃)) dξ̃`. The integral is discretised with
//! composite Simpson weights on a uniform `ξ` grid and the resulting ODE
//! system is advanced by backward Euler, each step solved by Newton's method
//! with a dense Jacobian whose factorisation is reused while it still
//! contracts.

mod diagnostics;
mod state;

pub use diagnostics::{
    fit_log_slope, gamma_theta, support_bound, support_bound_check, wasserstein_to_shell, Diagnostics,
};
pub use state::{init_from_density, Profile, RadialState};

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{Error, Result};
use crate::kernel::{KernelContext, TabulatedKernel};
use crate::quadrature::simpson_weights;
use crate::stability::shell_radius;
use crate::PowerLawPotential;

/// The interaction driving a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interaction {
    PowerLaw(PowerLawPotential),
    /// `W(x) = |x|^q / q` (`ln|x|` for `q = 0`).
    Attractive { exponent: f64, dim: usize },
}

impl Interaction {
    pub fn dim(&self) -> usize {
        match self {
            Interaction::PowerLaw(p) => p.dim(),
            Interaction::Attractive { dim, .. } => *dim,
        }
    }

    /// `(w, c)` pairs with `W = Σ w |x|^c / c`.
    pub fn terms(&self) -> Vec<(f64, f64)> {
        match self {
            Interaction::PowerLaw(p) => vec![(1.0, p.a()), (-1.0, p.b())],
            Interaction::Attractive { exponent, .. } => vec![(1.0, *exponent)],
        }
    }

    /// Radius of the shell the flow is compared against: `R_ab` for the
    /// power law, the origin for pure attraction.
    pub fn reference_radius(&self) -> Result<f64> {
        match self {
            Interaction::PowerLaw(p) => shell_radius(p.a(), p.b(), p.dim()),
            Interaction::Attractive { .. } => Ok(0.0),
        }
    }

    pub fn power_law(&self) -> Option<&PowerLawPotential> {
        match self {
            Interaction::PowerLaw(p) => Some(p),
            Interaction::Attractive { .. } => None,
        }
    }
}

/// Time-stepping parameters.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Number of mass-grid nodes (odd, at least 5).
    pub m: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Smallest substep allowed when Newton fails and the step is halved.
    pub dt_min: f64,
    /// Record diagnostics every this many steps.
    pub output_every: usize,
    pub kernel: KernelContext,
    pub enforce_monotone: bool,
    /// Order of the transport distance reported as `d_alpha`.
    pub alpha: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            t_end: 20.0,
            m: 201,
            newton_tol: 1e-10,
            newton_max_iter: 30,
            dt_min: 1e-2 / 256.0,
            output_every: 10,
            kernel: KernelContext::default(),
            enforce_monotone: true,
            alpha: 1.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        state::check_grid_size(self.m)?;
        if !(self.dt > self.dt_min && self.dt_min > 0.0 && self.dt.is_finite()) {
            return Err(Error::domain(format!("need dt > dt_min > 0, got dt = {}, dt_min = {}", self.dt, self.dt_min)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::domain(format!("t_end must be finite and nonnegative, got {}", self.t_end)));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::domain("newton_tol must be positive"));
        }
        if self.newton_max_iter == 0 || self.output_every == 0 {
            return Err(Error::domain("newton_max_iter and output_every must be positive"));
        }
        if !(self.alpha >= 1.0) {
            return Err(Error::domain(format!("alpha must be >= 1, got {}", self.alpha)));
        }
        Ok(())
    }

    /// Number of steps of size `dt` that reach `t_end`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Bookkeeping for one accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepReport {
    pub newton_iters: usize,
    pub substeps: usize,
    pub monotone_repairs: usize,
}

/// Output of [`Solver::simulate`]; `failure` is set when a step failed and
/// the series stops early.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub diagnostics: Vec<Diagnostics>,
    pub snapshots: Vec<RadialState>,
    pub failure: Option<Error>,
    pub monotone_repairs: usize,
}

struct Workspace {
    pows: Vec<f64>,
    v: Vec<f64>,
    d1: Vec<f64>,
    d2: DMatrix<f64>,
    /// Factorised iteration matrix and the substep it was built for.
    lu: Option<(f64, LU<f64, Dyn, Dyn>)>,
}

impl Workspace {
    fn new(m: usize, terms: usize) -> Self {
        Self {
            pows: vec![0.0; m * terms],
            v: vec![0.0; m],
            d1: vec![0.0; m],
            d2: DMatrix::zeros(m, m),
            lu: None,
        }
    }
}

/// Backward-Euler integrator for one interaction and configuration.
///
/// ```
/// use shellflow::solver::{Interaction, RadialState, SimConfig, Solver};
///
/// let config = SimConfig { m: 11, ..SimConfig::default() };
/// let solver = Solver::new(Interaction::Attractive { exponent: 2.0, dim: 3 }, config).unwrap();
/// let s0 = RadialState::shell(11, 1.0).unwrap();
/// let (s1, _) = solver.step(&s0).unwrap();
/// assert!((s1.phi()[0] - 1.0 / 1.01).abs() < 1e-15);
/// ```
#[derive(Debug, Clone)]
pub struct Solver {
    interaction: Interaction,
    kernel: TabulatedKernel,
    config: SimConfig,
    weights: Vec<f64>,
    r_ref: f64,
}

impl Solver {
    pub fn new(interaction: Interaction, config: SimConfig) -> Result<Self> {
        config.validate()?;
        let dim = interaction.dim();
        if let Interaction::Attractive { exponent, .. } = interaction {
            if !(exponent > 2.0 - dim as f64) {
                return Err(Error::domain(format!("attractive exponent {exponent} must exceed 2 - N")));
            }
        }
        let kernel = TabulatedKernel::new(&interaction.terms(), dim, &config.kernel)?;
        let weights = simpson_weights(config.m, 1.0 / (config.m - 1) as f64)?;
        let r_ref = interaction.reference_radius()?;
        Ok(Self { interaction, kernel, config, weights, r_ref })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn interaction(&self) -> &Interaction {
        &self.interaction
    }

    pub fn reference_radius(&self) -> f64 {
        self.r_ref
    }

    pub fn kernel(&self) -> &TabulatedKernel {
        &self.kernel
    }

    fn check_size(&self, state: &RadialState) -> Result<()> {
        if state.len() != self.config.m {
            return Err(Error::domain(format!("state has {} nodes, solver expects {}", state.len(), self.config.m)));
        }
        Ok(())
    }

    /// Velocities and, when `jacobian` is set, the partial derivative sums.
    fn evaluate(&self, phi: &[f64], ws: &mut Workspace, jacobian: bool) {
        let m = phi.len();
        let nt = self.kernel.term_count();
        for (i, &p) in phi.iter().enumerate() {
            self.kernel.node_powers(p, &mut ws.pows[i * nt..(i + 1) * nt]);
        }
        ws.v.iter_mut().for_each(|x| *x = 0.0);
        ws.d1.iter_mut().for_each(|x| *x = 0.0);
        let w = &self.weights;
        for i in 0..m {
            for j in i..m {
                let (bi, si) = if phi[i] >= phi[j] { (i, j) } else { (j, i) };
                let [at_big, at_small] = self.kernel.pair_block(phi[bi], phi[si], &ws.pows[bi * nt..(bi + 1) * nt]);
                ws.v[bi] += w[si] * at_big.0;
                ws.d1[bi] += w[si] * at_big.1;
                if jacobian {
                    ws.d2[(bi, si)] = at_big.2;
                }
                if i != j {
                    ws.v[si] += w[bi] * at_small.0;
                    ws.d1[si] += w[bi] * at_small.1;
                    if jacobian {
                        ws.d2[(si, bi)] = at_small.2;
                    }
                }
            }
        }
    }

    /// `V(ξ_i) = Σ_j w_j ω(φ_i, φ_j)`.
    pub fn rhs(&self, state: &RadialState) -> Result<Vec<f64>> {
        self.check_size(state)?;
        let mut ws = Workspace::new(state.len(), self.kernel.term_count());
        self.evaluate(state.phi(), &mut ws, false);
        Ok(ws.v)
    }

    /// Solves `Φ - prev - h V(Φ) = 0`; on failure returns the last residual.
    fn factor(&self, h: f64, ws: &mut Workspace) -> bool {
        let m = ws.v.len();
        let mut jac = DMatrix::<f64>::zeros(m, m);
        for j in 0..m {
            let wj = h * self.weights[j];
            for i in 0..m {
                jac[(i, j)] = -wj * ws.d2[(i, j)];
            }
        }
        for i in 0..m {
            jac[(i, i)] += 1.0 - h * ws.d1[i];
        }
        let lu = jac.lu();
        let ok = lu.is_invertible();
        ws.lu = ok.then_some((h, lu));
        ok
    }

    fn residual(&self, x: &[f64], prev: &[f64], h: f64, ws: &Workspace) -> (Vec<f64>, f64) {
        let g: Vec<f64> = (0..x.len()).map(|i| x[i] - prev[i] - h * ws.v[i]).collect();
        let res = g.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        (g, res)
    }

    fn solve_implicit(&self, prev: &[f64], h: f64, ws: &mut Workspace) -> std::result::Result<(Vec<f64>, usize), f64> {
        let cfg = &self.config;
        if ws.lu.as_ref().is_some_and(|(lu_h, _)| *lu_h != h) {
            ws.lu = None;
        }
        let mut x = prev.to_vec();
        let mut clipped = vec![0.0; x.len()];
        let mut last = f64::INFINITY;
        let mut stagnant = 0;
        let mut damped = false;
        let mut fresh = false;
        for iter in 0..=cfg.newton_max_iter {
            for (c, xi) in clipped.iter_mut().zip(&x) {
                *c = xi.max(0.0);
            }
            let want_jacobian = !damped && ws.lu.is_none();
            self.evaluate(&clipped, ws, want_jacobian);
            let (mut g, mut res) = self.residual(&x, prev, h, ws);
            if !res.is_finite() {
                ws.lu = None;
                return Err(res);
            }
            if res < cfg.newton_tol {
                return Ok((x, iter));
            }
            if iter == cfg.newton_max_iter {
                ws.lu = None;
                return Err(res);
            }
            if !damped && !fresh && ws.lu.is_some() && res > 0.5 * last {
                self.evaluate(&clipped, ws, true);
                (g, res) = self.residual(&x, prev, h, ws);
                ws.lu = None;
            }
            if fresh && res > 0.9 * last {
                stagnant += 1;
                if stagnant >= 2 && !damped {
                    log::debug!("Newton stagnated at residual {res:e}; switching to damped fixed point");
                    damped = true;
                    ws.lu = None;
                }
            } else {
                stagnant = 0;
            }
            last = res;
            if !damped {
                fresh = ws.lu.is_none();
                if fresh && !self.factor(h, ws) {
                    log::debug!("singular Newton matrix; switching to damped fixed point");
                    damped = true;
                }
            }
            if !damped {
                let (_, lu) = ws.lu.as_ref().expect("factorisation present");
                match lu.solve(&DVector::from_vec(g.clone())) {
                    Some(delta) if delta.iter().all(|d| d.is_finite()) => {
                        for (xi, d) in x.iter_mut().zip(delta.iter()) {
                            *xi -= d;
                        }
                        continue;
                    }
                    _ => {
                        log::debug!("Newton solve failed; switching to damped fixed point");
                        damped = true;
                        ws.lu = None;
                    }
                }
            }
            for (xi, gi) in x.iter_mut().zip(&g) {
                *xi -= 0.5 * gi;
            }
        }
        ws.lu = None;
        Err(last)
    }

    /// Clamps small undershoots, rejects corrupt states and restores
    /// monotonicity when configured to.
    fn admit(&self, x: &mut [f64], t: f64) -> Result<usize> {
        for v in x.iter_mut() {
            if v.is_nan() {
                return Err(Error::StateCorruption { t, reason: "NaN radius".into() });
            }
            if *v < -1e-12 {
                return Err(Error::StateCorruption { t, reason: format!("negative radius {v:e}") });
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let worst = x.windows(2).map(|w| w[0] - w[1]).fold(0.0f64, f64::max);
        if self.config.enforce_monotone && worst > 0.0 {
            x.sort_by(f64::total_cmp);
            if worst > 1e-12 {
                log::warn!("t = {t}: monotone rearrangement applied (ordering violation {worst:e})");
                return Ok(1);
            }
        }
        Ok(0)
    }

    /// Advances the state by `dt`, halving the substep on Newton failure.
    pub fn step(&self, state: &RadialState) -> Result<(RadialState, StepReport)> {
        self.check_size(state)?;
        let mut ws = Workspace::new(state.len(), self.kernel.term_count());
        self.step_with(state, &mut ws)
    }

    fn step_with(&self, state: &RadialState, ws: &mut Workspace) -> Result<(RadialState, StepReport)> {
        let cfg = &self.config;
        let mut x = state.phi().to_vec();
        let mut report = StepReport::default();
        let mut t = state.t();
        let mut remaining = cfg.dt;
        let mut h = cfg.dt;
        while remaining > 1e-12 * cfg.dt {
            h = h.min(remaining);
            match self.solve_implicit(&x, h, ws) {
                Ok((mut next, iters)) => {
                    t += h;
                    report.monotone_repairs += self.admit(&mut next, t)?;
                    report.newton_iters += iters;
                    report.substeps += 1;
                    remaining -= h;
                    x = next;
                    h = (2.0 * h).min(cfg.dt);
                }
                Err(residual) => {
                    h *= 0.5;
                    if h < cfg.dt_min {
                        return Err(Error::StepFailure { t, dt: h, residual });
                    }
                    log::debug!("t = {t}: Newton failed (residual {residual:e}), retrying with dt = {h:e}");
                }
            }
        }
        let next = RadialState::from_parts_unchecked(state.xi().to_vec(), x, state.t() + cfg.dt);
        Ok((next, report))
    }

    /// `E = Σ_i Σ_j w_i w_j E(φ_i, φ_j)` with the shell-pair energy
    /// `E(r, η) = (1/2) ⨍ W(r e₁ - η y)`, summed with compensation.
    pub fn energy(&self, state: &RadialState) -> Result<f64> {
        self.check_size(state)?;
        let phi = state.phi();
        let w = &self.weights;
        let mut sum = 0.0;
        let mut comp = 0.0;
        for i in 0..phi.len() {
            for j in i..phi.len() {
                let mult = if i == j { 1.0 } else { 2.0 };
                let term = mult * w[i] * w[j] * 0.5 * self.kernel.pair_energy(phi[i], phi[j]);
                let s = sum + term;
                comp += if sum.abs() >= term.abs() { (sum - s) + term } else { (term - s) + sum };
                sum = s;
            }
        }
        Ok(sum + comp)
    }

    /// `-Σ_i w_i V_i²`.
    pub fn dissipation(&self, velocities: &[f64]) -> f64 {
        -velocities.iter().zip(&self.weights).map(|(v, w)| w * v * v).sum::<f64>()
    }

    /// Diagnostics of `state`, with the support bound taken relative to the
    /// initial outer radius.
    pub fn diagnostics(&self, state: &RadialState, newton_iters: usize, initial_outer_radius: f64) -> Result<Diagnostics> {
        let v = self.rhs(state)?;
        let (gamma, theta) = gamma_theta(state, self.r_ref);
        let support_ok = match self.interaction.power_law() {
            Some(p) => support_bound_check(state, p, initial_outer_radius)?,
            None => state.outer_radius() <= initial_outer_radius + 1e-8,
        };
        Ok(Diagnostics {
            t: state.t(),
            d_inf: wasserstein_to_shell(state, self.r_ref, f64::INFINITY)?,
            d_2: wasserstein_to_shell(state, self.r_ref, 2.0)?,
            d_alpha: wasserstein_to_shell(state, self.r_ref, self.config.alpha)?,
            gamma,
            theta,
            energy: self.energy(state)?,
            dissipation: self.dissipation(&v),
            max_velocity: v.iter().fold(0.0f64, |acc, x| acc.max(x.abs())),
            newton_iters,
            support_ok,
        })
    }

    /// Runs from `init` to `t_end`, recording diagnostics and a snapshot at
    /// the start, every `output_every` steps and at the end.
    pub fn simulate(&self, init: RadialState) -> Simulation {
        let mut sim = Simulation { diagnostics: Vec::new(), snapshots: Vec::new(), failure: None, monotone_repairs: 0 };
        let outer0 = init.outer_radius();
        let record = |sim: &mut Simulation, state: &RadialState, iters: usize| -> Result<()> {
            let d = self.diagnostics(state, iters, outer0)?;
            if !d.support_ok {
                log::warn!("t = {}: outer radius {} exceeds the a-priori support bound", d.t, state.outer_radius());
            }
            sim.diagnostics.push(d);
            sim.snapshots.push(state.clone());
            Ok(())
        };
        if let Err(e) = self.check_size(&init).and_then(|_| record(&mut sim, &init, 0)) {
            sim.failure = Some(e);
            return sim;
        }
        let steps = self.config.steps();
        let t0 = init.t();
        let mut ws = Workspace::new(init.len(), self.kernel.term_count());
        let mut state = init;
        for n in 1..=steps {
            match self.step_with(&state, &mut ws) {
                Ok((next, report)) => {
                    sim.monotone_repairs += report.monotone_repairs;
                    state = next;
                    state.set_time(t0 + n as f64 * self.config.dt);
                    if n % self.config.output_every == 0 || n == steps {
                        if let Err(e) = record(&mut sim, &state, report.newton_iters) {
                            sim.failure = Some(e);
                            return sim;
                        }
                    }
                }
                Err(e) => {
                    sim.failure = Some(e);
                    return sim;
                }
            }
        }
        sim
    }
}

#[cfg(test)]
mod tests;
