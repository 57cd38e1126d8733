use std::path::Path;

use shellflow::kernel::{self, KernelContext};
use shellflow::potential::{OmegaContinuity, RadialPotentialDescriptor};
use shellflow::stability::{self, shell_radius};
use shellflow::PowerLawPotential;

use crate::error::{CliError, CliResult};
use crate::output::{num, parse_grid, CsvWriter};

/// The potential a table is evaluated for.
pub enum TablePotential {
    PowerLaw(PowerLawPotential),
    Attractive { descriptor: RadialPotentialDescriptor, dim: usize },
}

impl TablePotential {
    pub fn new(a: Option<f64>, b: Option<f64>, attractive: Option<f64>, dim: usize) -> CliResult<Self> {
        match (a, b, attractive) {
            (Some(a), Some(b), None) => Ok(Self::PowerLaw(PowerLawPotential::new(a, b, dim)?)),
            (None, None, Some(q)) => {
                let descriptor = RadialPotentialDescriptor::pure_attractive(q);
                if dim == 0 || !descriptor.regularity(dim).kprime_integrable_on_hypersurfaces {
                    return Err(CliError::usage(format!("attraction exponent {q} is too singular in dimension {dim}")));
                }
                Ok(Self::Attractive { descriptor, dim })
            }
            _ => Err(CliError::usage("give either --a and --b, or --attractive")),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Self::PowerLaw(p) => p.dim(),
            Self::Attractive { dim, .. } => *dim,
        }
    }

    fn shell_radius(&self) -> Option<f64> {
        match self {
            Self::PowerLaw(p) => shell_radius(p.a(), p.b(), p.dim()).ok(),
            Self::Attractive { .. } => None,
        }
    }

    fn continuity(&self) -> OmegaContinuity {
        match self {
            Self::PowerLaw(p) => p.regularity().omega_continuity_class,
            Self::Attractive { descriptor, dim } => descriptor.regularity(*dim).omega_continuity_class,
        }
    }

    fn omega(&self, r: f64, eta: f64, ctx: &KernelContext) -> shellflow::Result<f64> {
        Ok(match self {
            Self::PowerLaw(p) => kernel::omega(p, r, eta, ctx)?.value,
            Self::Attractive { descriptor, dim } => kernel::omega_generic(descriptor, r, eta, *dim, ctx)?.value,
        })
    }

    /// `(∂₁ω, ∂₂ω)`, infinite where they diverge.
    fn derivatives(&self, r: f64, eta: f64, ctx: &KernelContext) -> shellflow::Result<(f64, f64)> {
        let (d1, d2) = match self {
            Self::PowerLaw(p) => (kernel::d1_omega(p, r, eta, ctx), kernel::d2_omega(p, r, eta, ctx)),
            Self::Attractive { descriptor, dim } => (
                kernel::d1_omega_generic(descriptor, r, eta, *dim, ctx),
                kernel::d2_omega_generic(descriptor, r, eta, *dim, ctx),
            ),
        };
        let finite = |v: shellflow::Result<f64>, sign: f64| match v {
            Err(shellflow::Error::BlowUp(_)) => Ok(sign * f64::INFINITY),
            other => other,
        };
        Ok((finite(d1, 1.0)?, finite(d2, -1.0)?))
    }

    fn energy(&self, r: f64, eta: f64, ctx: &KernelContext) -> shellflow::Result<f64> {
        Ok(match self {
            Self::PowerLaw(p) => stability::pair_energy(p, r, eta, ctx)?.value,
            Self::Attractive { descriptor, dim } => stability::pair_energy_generic(descriptor, r, eta, *dim, ctx)?.value,
        })
    }
}

fn check_grid(name: &str, grid: &[f64]) -> CliResult<()> {
    match grid.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        Some(x) => Err(CliError::usage(format!("{name} grid values must be positive, got {x}"))),
        None => Ok(()),
    }
}

fn grids(pot: &TablePotential, r: &str, eta: &str) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let rs = parse_grid(r, pot.shell_radius())?;
    let etas = parse_grid(eta, pot.shell_radius())?;
    check_grid("r", &rs)?;
    check_grid("eta", &etas)?;
    Ok((rs, etas))
}

fn same_radius(r: f64, eta: f64) -> bool {
    (r - eta).abs() <= 1e-14 * r.max(eta)
}

/// `ω`, `∂₁ω` and `∂₂ω` on the product of the two grids.
pub fn kernel_table(pot: &TablePotential, r: &str, eta: &str, out: &Path) -> CliResult<()> {
    let (rs, etas) = grids(pot, r, eta)?;
    let ctx = KernelContext::default();
    let mut csv = CsvWriter::create(out, "kernel_table.csv", &["r", "eta", "omega", "d1_omega", "d2_omega", "diagonal"])?;
    for &e in &etas {
        for &x in &rs {
            let w = pot.omega(x, e, &ctx)?;
            let (d1, d2) = pot.derivatives(x, e, &ctx)?;
            let flag = if same_radius(x, e) { pot.continuity().to_string() } else { String::new() };
            csv.row(&[num(x), num(e), num(w), num(d1), num(d2), flag])?;
        }
    }
    let path = csv.finish()?;
    println!("kernel-table: {} rows in N = {}; wrote {}", rs.len() * etas.len(), pot.dim(), path.display());
    Ok(())
}

/// Pair energies with two checks per point: the symmetry defect
/// `E(r, η) - E(η, r)` and the ratio of a difference quotient of `∂²E/∂r²`
/// to `-∂₁ω/2`, which is one wherever `∂₁ω` is finite.
pub fn energy_landscape(pot: &TablePotential, r: &str, eta: &str, out: &Path) -> CliResult<()> {
    let (rs, etas) = grids(pot, r, eta)?;
    let ctx = KernelContext::default();
    let mut csv = CsvWriter::create(out, "energy_landscape.csv", &["r", "eta", "energy", "symmetry", "curvature_ratio"])?;
    for &e in &etas {
        for &x in &rs {
            let value = pot.energy(x, e, &ctx)?;
            let mirrored = pot.energy(e, x, &ctx)?;
            let h = 1e-3 * x;
            let second = (pot.energy(x + h, e, &ctx)? - 2.0 * value + pot.energy(x - h, e, &ctx)?) / (h * h);
            let (d1, _) = pot.derivatives(x, e, &ctx)?;
            csv.row(&[num(x), num(e), num(value), num(value - mirrored), num(second / (-0.5 * d1))])?;
        }
    }
    let path = csv.finish()?;
    println!("energy-landscape: {} rows in N = {}; wrote {}", rs.len() * etas.len(), pot.dim(), path.display());
    Ok(())
}
