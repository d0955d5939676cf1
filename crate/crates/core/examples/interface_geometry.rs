//! Sign structure of the limit profile. In the balanced instance N = 5,
//! m = n = 3 the two phases meet at theta = pi/4; with m = 2, n = 3 the
//! interface sits off-centre, below pi/4.

use critsep::functional::CouplingParams;
use critsep::geometry::{ModelParams, ReducedGrid};
use critsep::separation::verify_tori;
use critsep::solver::{initial_guess, minimize_limit, InitKind, SolveOptions};
use std::f64::consts::FRAC_PI_4;

fn limit_case(dim: usize, m: usize, cells: usize) -> critsep::Result<()> {
    let params = ModelParams::new(dim, m, dim + 1 - m, cells)?;
    let grid = ReducedGrid::new(&params)?;
    let init = initial_guess(InitKind::Bumps, &grid, 0);
    let w0 = init.u.axpy(-1.0, &init.v);
    let res = minimize_limit(&w0, &CouplingParams::symmetric(dim, -1.0), &grid, &SolveOptions::default())?;
    let rep = verify_tori(&res.w, &grid, &params);

    println!("N = {dim}, (m, n) = ({m}, {}), M = {cells}", dim + 1 - m);
    println!("  limit energy {:.8}, converged {}", res.energy, res.converged);
    if let Some(t0) = rep.theta0 {
        println!("  theta0 = {t0:.8}  (pi/4 = {FRAC_PI_4:.8}, cell = {:.2e})", grid.spacing());
    }
    println!("  phase at theta = 0: {}   other phase: {}", rep.zero_side_type, rep.far_side_type);
    for (name, ok) in &rep.checks {
        println!("  {name}: {ok}");
    }
    Ok(())
}

fn main() -> critsep::Result<()> {
    limit_case(5, 3, 2048)?;
    limit_case(4, 2, 2048)
}
