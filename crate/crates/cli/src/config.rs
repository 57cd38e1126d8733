use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shellflow::kernel::KernelContext;
use shellflow::solver::{Interaction, Profile, SimConfig};
use shellflow::PowerLawPotential;

use crate::error::{CliError, CliResult};

/// A complete simulation scenario as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub potential: PotentialSection,
    #[serde(default)]
    pub solver: SolverSection,
    pub init: InitSection,
    #[serde(default)]
    pub outputs: OutputsSection,
}

/// Either `a`, `b` for `|x|^a/a - |x|^b/b` or `pure_attractive = q` for
/// `|x|^q/q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pure_attractive: Option<f64>,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub dt: f64,
    pub t_end: f64,
    pub m: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Defaults to `dt / 256`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_min: Option<f64>,
    pub output_every: usize,
    pub enforce_monotone: bool,
    pub quad_order: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let sim = SimConfig::default();
        Self {
            dt: sim.dt,
            t_end: sim.t_end,
            m: sim.m,
            newton_tol: sim.newton_tol,
            newton_max_iter: sim.newton_max_iter,
            dt_min: None,
            output_every: sim.output_every,
            enforce_monotone: sim.enforce_monotone,
            quad_order: sim.kernel.quad_order(),
            abs_tol: sim.kernel.abs_tol(),
            rel_tol: sim.kernel.rel_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSection {
    UniformAnnulus { r1: f64, r2: f64 },
    ShellPerturbed { radius: f64, amp: f64, mode: u32 },
    TruncatedGaussianRadial { center: f64, sigma: f64, cut: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputsSection {
    /// Output directory; `--out` takes precedence.
    pub dir: PathBuf,
    /// Write every this many recorded states to the snapshot file (0 disables it).
    pub snapshot_every: usize,
    /// Transport orders: the first fills the `d_alpha` column, the rest go to
    /// a separate distances file.
    pub alphas: Vec<f64>,
}

impl Default for OutputsSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("shellflow-out"), snapshot_every: 10, alphas: vec![1.0] }
    }
}

const FIG1: &str = include_str!("../scenarios/fig1.toml");
const FIG2: &str = include_str!("../scenarios/fig2.toml");
const FIG3: &str = include_str!("../scenarios/fig3.toml");

/// Names and sources of the bundled scenarios.
pub const BUNDLED: [(&str, &str); 3] = [("fig1", FIG1), ("fig2", FIG2), ("fig3", FIG3)];

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            potential: PotentialSection { a: Some(4.0), b: Some(2.0), pure_attractive: None, dim: 2 },
            solver: SolverSection::default(),
            init: InitSection::UniformAnnulus { r1: 0.3, r2: 0.9 },
            outputs: OutputsSection::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str, origin: &Path) -> CliResult<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| CliError::Config { path: origin.to_path_buf(), message: e.to_string() })?;
        cfg.validate().map_err(|e| CliError::Config { path: origin.to_path_buf(), message: e.to_string() })?;
        Ok(cfg)
    }

    /// Reads `source` as a file, or as the name of a bundled scenario when no
    /// such file exists.
    pub fn load(source: &Path) -> CliResult<Self> {
        if !source.exists() {
            if let Some((_, text)) = BUNDLED.iter().find(|(name, _)| Path::new(name) == source) {
                return Self::parse(text, source);
            }
        }
        let text = std::fs::read_to_string(source)
            .map_err(|e| CliError::Config { path: source.to_path_buf(), message: e.to_string() })?;
        Self::parse(&text, source)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario configs always serialize")
    }

    pub fn interaction(&self) -> shellflow::Result<Interaction> {
        let p = &self.potential;
        match (p.a, p.b, p.pure_attractive) {
            (Some(a), Some(b), None) => Ok(Interaction::PowerLaw(PowerLawPotential::new(a, b, p.dim)?)),
            (None, None, Some(q)) => {
                if p.dim == 0 || !q.is_finite() || q <= 2.0 - p.dim as f64 {
                    return Err(shellflow::Error::Domain(format!(
                        "pure attraction needs dim >= 1 and exponent > 2 - dim, got q = {q}, dim = {}",
                        p.dim
                    )));
                }
                Ok(Interaction::Attractive { exponent: q, dim: p.dim })
            }
            _ => Err(shellflow::Error::Domain("[potential] needs either both `a` and `b`, or `pure_attractive`".into())),
        }
    }

    pub fn sim_config(&self) -> shellflow::Result<SimConfig> {
        let s = &self.solver;
        let kernel = KernelContext::new(s.quad_order, s.abs_tol, s.rel_tol)?;
        let cfg = SimConfig {
            dt: s.dt,
            t_end: s.t_end,
            m: s.m,
            newton_tol: s.newton_tol,
            newton_max_iter: s.newton_max_iter,
            dt_min: s.dt_min.unwrap_or(s.dt / 256.0),
            output_every: s.output_every,
            kernel,
            enforce_monotone: s.enforce_monotone,
            alpha: self.outputs.alphas.first().copied().unwrap_or(1.0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn profile(&self) -> Profile {
        match self.init {
            InitSection::UniformAnnulus { r1, r2 } => Profile::UniformAnnulus { r1, r2 },
            InitSection::ShellPerturbed { radius, amp, mode } => Profile::ShellPerturbed { radius, amp, mode },
            InitSection::TruncatedGaussianRadial { center, sigma, cut } => {
                Profile::TruncatedGaussianRadial { center, sigma, cut }
            }
        }
    }

    pub fn validate(&self) -> shellflow::Result<()> {
        self.interaction()?;
        self.sim_config()?;
        if self.outputs.alphas.is_empty() || self.outputs.alphas.iter().any(|a| !(*a >= 1.0)) {
            return Err(shellflow::Error::Domain("outputs.alphas needs at least one order, each >= 1".into()));
        }
        shellflow::solver::init_from_density(self.profile(), 5, self.potential.dim)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ScenarioConfig::default();
        let text = cfg.to_toml();
        assert_eq!(ScenarioConfig::parse(&text, Path::new("defaults")).unwrap(), cfg);
    }

    #[test]
    fn bundled_scenarios_parse_and_round_trip() {
        for (name, text) in BUNDLED {
            let cfg = ScenarioConfig::parse(text, Path::new(name)).unwrap();
            assert_eq!(ScenarioConfig::parse(&cfg.to_toml(), Path::new(name)).unwrap(), cfg, "{name}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = ScenarioConfig::default().to_toml().replace("[solver]", "[solver]\nstep = 1");
        assert!(ScenarioConfig::parse(&text, Path::new("x")).is_err());
        let text = ScenarioConfig::default().to_toml() + "\n[extra]\nx = 1\n";
        assert!(ScenarioConfig::parse(&text, Path::new("x")).is_err());
        let text = ScenarioConfig::default().to_toml().replace("r1 = 0.3", "r1 = 0.3\nr3 = 1.0");
        assert!(ScenarioConfig::parse(&text, Path::new("x")).is_err());
    }

    #[test]
    fn invariants_are_checked_at_load() {
        let base = ScenarioConfig::default().to_toml();
        for (from, to) in [("m = 201", "m = 200"), ("b = 2.0", "b = 5.0"), ("r2 = 0.9", "r2 = 0.1")] {
            let text = base.replace(from, to);
            assert_ne!(text, base, "{from}");
            assert!(ScenarioConfig::parse(&text, Path::new("x")).is_err(), "{to}");
        }
        let both = base.replace("dim = 2", "dim = 2\npure_attractive = 2.0");
        assert!(ScenarioConfig::parse(&both, Path::new("x")).is_err());
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let text = "[potential]\npure_attractive = 2.0\ndim = 3\n\n[init]\nprofile = \"uniform_annulus\"\nr1 = 0.0\nr2 = 1.0\n";
        let cfg = ScenarioConfig::parse(text, Path::new("x")).unwrap();
        assert_eq!(cfg.solver, SolverSection::default());
        assert_eq!(cfg.sim_config().unwrap().dt_min, cfg.solver.dt / 256.0);
        assert!(matches!(cfg.interaction().unwrap(), Interaction::Attractive { dim: 3, .. }));
    }
}
