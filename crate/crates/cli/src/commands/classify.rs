use shellflow::stability::{check_conditions, classify};
use shellflow::PowerLawPotential;

use crate::error::CliResult;
use crate::output::num;

pub fn run(a: f64, b: f64, dim: usize) -> CliResult<()> {
    let p = PowerLawPotential::new(a, b, dim)?;
    let rep = classify(a, b, dim)?;
    let cond = check_conditions(&p, rep.steady_radius)?;
    let rows = [
        ("a", a.to_string()),
        ("b", b.to_string()),
        ("N", dim.to_string()),
        ("R_ab", format!("{:.10}", rep.steady_radius)),
        ("regime", rep.regime.to_string()),
        ("boundary_b", format!("{:.10}", rep.boundary_b)),
        ("d1_at_shell", format!("{:.10}", rep.d1_at_shell)),
        ("C0 omega(R,R)", format!("{:.3e}", cond.c0)),
        ("C1 d1 omega(R,R)", format!("{:.10} ({})", cond.c1, verdict(cond.fattening_stable()))),
        ("C2 (d1+d2) omega(R,R)", format!("{:.10} ({})", cond.c2, verdict(cond.shifting_stable()))),
    ];
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in &rows {
        println!("{k:<width$}  {v}");
    }
    println!(
        "result a={} b={} N={dim} R_ab={} regime={} boundary_b={} d1_at_shell={} c0={} c1={} c2={}",
        num(a),
        num(b),
        num(rep.steady_radius),
        rep.regime.name(),
        num(rep.boundary_b),
        num(rep.d1_at_shell),
        num(cond.c0),
        num(cond.c1),
        num(cond.c2)
    );
    Ok(())
}

fn verdict(holds: bool) -> &'static str {
    if holds {
        "holds"
    } else {
        "violated"
    }
}
