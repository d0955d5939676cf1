//! Continuation towards strong competition: energy, overlap and interface
//! along a geometric schedule in lambda, followed by the limit problem.

use critsep::functional::CouplingParams;
use critsep::geometry::{ModelParams, ReducedGrid};
use critsep::separation::{sweep_lambda, SweepSchedule};
use critsep::solver::SolveOptions;

fn main() -> critsep::Result<()> {
    let grid = ReducedGrid::new(&ModelParams::new(4, 2, 3, 1024)?)?;
    let schedule = SweepSchedule::geometric(-1.0, -1e4, 9)?;
    let out = sweep_lambda(&schedule, &CouplingParams::symmetric(4, -1.0), &grid, &SolveOptions::default())?;

    println!("{:>10} {:>12} {:>12} {:>12} {:>8}", "lambda", "energy", "overlap", "-l*overlap", "theta0");
    for r in &out.records {
        println!(
            "{:>10.1} {:>12.6} {:>12.4e} {:>12.4e} {:>8.5}",
            r.lambda,
            r.energy_c_lambda,
            r.overlap,
            r.lambda_overlap,
            r.interface_theta.unwrap_or(f64::NAN)
        );
    }
    if let (Some(limit), Some(last)) = (out.limit_energy, out.finite_records().last()) {
        println!("gap to limit at lambda = {}: {:.2}%", last.lambda, 100.0 * (limit - last.energy_c_lambda) / limit);
    }
    for f in &out.findings {
        println!("finding: {f}");
    }
    Ok(())
}
