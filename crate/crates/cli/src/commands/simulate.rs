use std::path::{Path, PathBuf};

use shellflow::solver::{fit_log_slope, init_from_density, wasserstein_to_shell, Simulation, Solver};

use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, CsvWriter};

pub fn dump_defaults(scenario: Option<&Path>) -> CliResult<()> {
    let cfg = match scenario {
        Some(s) => ScenarioConfig::load(s)?,
        None => ScenarioConfig::default(),
    };
    print!("{}", cfg.to_toml());
    Ok(())
}

/// Headline numbers of a finished or aborted run.
#[derive(Debug, Clone, Copy)]
pub struct Summary {
    pub t: f64,
    pub d_inf: f64,
    /// `-slope` of `ln d_2` over the second half of the run.
    pub decay_rate: f64,
    pub max_velocity: f64,
    pub gamma: f64,
    pub energy: f64,
}

impl Summary {
    fn new(sim: &Simulation) -> Option<Self> {
        let last = sim.diagnostics.last()?;
        let t: Vec<f64> = sim.diagnostics.iter().map(|d| d.t).collect();
        let d2: Vec<f64> = sim.diagnostics.iter().map(|d| d.d_2).collect();
        let slope = fit_log_slope(&t, &d2, 0.5 * last.t, last.t).unwrap_or(f64::NAN);
        Some(Self {
            t: last.t,
            d_inf: last.d_inf,
            decay_rate: -slope,
            max_velocity: last.max_velocity,
            gamma: last.gamma,
            energy: last.energy,
        })
    }

    fn line(&self, status: &str) -> String {
        format!(
            "summary t={} d_inf={} decay_rate={} max_velocity={} gamma={} energy={} status={status}",
            num(self.t),
            num(self.d_inf),
            num(self.decay_rate),
            num(self.max_velocity),
            num(self.gamma),
            num(self.energy)
        )
    }
}

pub fn run(source: &Path, out: Option<&Path>) -> CliResult<()> {
    let cfg = ScenarioConfig::load(source)?;
    let dir: PathBuf = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.outputs.dir.clone());
    let solver = Solver::new(cfg.interaction()?, cfg.sim_config()?)?;
    let init = init_from_density(cfg.profile(), cfg.solver.m, cfg.potential.dim)?;
    log::info!("simulating {} steps of dt = {}", solver.config().steps(), cfg.solver.dt);
    let sim = solver.simulate(init);
    write_outputs(&cfg, &solver, &sim, &dir)?;

    let status = if sim.failure.is_some() { "failed" } else { "ok" };
    if let Some(summary) = Summary::new(&sim) {
        let line = summary.line(status);
        std::fs::write(dir.join("summary.txt"), format!("{line}\n"))
            .map_err(|source| CliError::Io { path: dir.join("summary.txt"), source })?;
        println!("{line}");
    }
    if sim.monotone_repairs > 0 {
        log::warn!("{} monotone rearrangements were applied", sim.monotone_repairs);
    }
    match sim.failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn write_outputs(cfg: &ScenarioConfig, solver: &Solver, sim: &Simulation, dir: &Path) -> CliResult<()> {
    let mut diag = CsvWriter::create(
        dir,
        "diagnostics.csv",
        &["t", "d_inf", "d_2", "d_alpha", "gamma", "theta", "energy", "dissipation", "newton_iters"],
    )?;
    for d in &sim.diagnostics {
        diag.row(&[
            num(d.t),
            num(d.d_inf),
            num(d.d_2),
            num(d.d_alpha),
            num(d.gamma),
            num(d.theta),
            num(d.energy),
            num(d.dissipation),
            d.newton_iters.to_string(),
        ])?;
    }
    diag.finish()?;

    if let Some(last) = sim.diagnostics.last() {
        let e_min = last.energy;
        let mut decay = CsvWriter::create(dir, "energy_decay.csv", &["t", "log_energy_gap"])?;
        for d in sim.diagnostics.iter().filter(|d| d.energy > e_min) {
            decay.row(&[num(d.t), num((d.energy - e_min).ln())])?;
        }
        decay.finish()?;
    }

    let every = cfg.outputs.snapshot_every;
    if every > 0 {
        let mut snaps = CsvWriter::create(dir, "snapshots.csv", &["t", "xi", "phi"])?;
        let n = sim.snapshots.len();
        for (k, s) in sim.snapshots.iter().enumerate() {
            if k % every != 0 && k + 1 != n {
                continue;
            }
            for (xi, phi) in s.xi().iter().zip(s.phi()) {
                snaps.row(&[num(s.t()), num(*xi), num(*phi)])?;
            }
        }
        snaps.finish()?;
    }

    let extra = &cfg.outputs.alphas[1..];
    if !extra.is_empty() {
        let r_ref = solver.reference_radius();
        let mut dist = CsvWriter::create(dir, "distances.csv", &["t", "alpha", "d_alpha"])?;
        for s in &sim.snapshots {
            for &alpha in extra {
                dist.row(&[num(s.t()), num(alpha), num(wasserstein_to_shell(s, r_ref, alpha)?)])?;
            }
        }
        dist.finish()?;
    }
    Ok(())
}
