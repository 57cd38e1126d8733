use std::path::Path;

use rayon::prelude::*;
use shellflow::stability::{bifurcation_grid, boundary_b, classify, StabilityReport};

use crate::error::{CliError, CliResult};
use crate::output::{num, CsvWriter};

pub struct SweepArgs {
    pub a_min: f64,
    pub a_max: f64,
    pub a_steps: usize,
    pub b_steps: usize,
    pub dim: usize,
}

fn pool() -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("SHELLFLOW_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::usage(format!("SHELLFLOW_THREADS must be a positive integer, got `{v}`")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::usage(format!("cannot start worker threads: {e}")))
}

pub fn run(args: &SweepArgs, out: &Path) -> CliResult<()> {
    if !(args.a_min <= args.a_max) || args.a_steps == 0 || args.b_steps == 0 || args.dim == 0 {
        return Err(CliError::usage("sweep needs a_min <= a_max, positive step counts and dim >= 1"));
    }
    let grid = bifurcation_grid(args.a_min, args.a_max, args.a_steps, args.b_steps, args.dim);
    let reports: Vec<Option<StabilityReport>> =
        pool()?.install(|| grid.par_iter().map(|&(a, b)| classify(a, b, args.dim).ok()).collect());

    let mut csv = CsvWriter::create(out, "sweep.csv", &["a", "b", "N", "R_ab", "regime", "d1_at_shell", "boundary_b"])?;
    let mut skipped = 0;
    for rep in &reports {
        match rep {
            Some(r) => csv.row(&[
                num(r.a),
                num(r.b),
                r.dim.to_string(),
                num(r.steady_radius),
                r.regime.name().to_string(),
                num(r.d1_at_shell),
                num(r.boundary_b),
            ])?,
            None => skipped += 1,
        }
    }
    let sweep_path = csv.finish()?;

    let mut curve = CsvWriter::create(out, "boundary.csv", &["a", "N", "boundary_b"])?;
    let mut seen = Vec::new();
    for &(a, _) in &grid {
        if seen.last() == Some(&a) {
            continue;
        }
        seen.push(a);
        if let Ok(bb) = boundary_b(a, args.dim) {
            curve.row(&[num(a), args.dim.to_string(), num(bb)])?;
        }
    }
    let curve_path = curve.finish()?;
    println!(
        "sweep: {} points classified, {skipped} skipped; wrote {} and {}",
        reports.len() - skipped,
        sweep_path.display(),
        curve_path.display()
    );
    Ok(())
}
