//! Minimizes the coupled energy over the symmetric Nehari set at one value of
//! the coupling and checks the on-manifold identities of the result.

use critsep::functional::{determinant_bound, nehari_infimum, nehari_norm_bound, CouplingParams, PairIntegrals};
use critsep::geometry::{ModelParams, ReducedGrid};
use critsep::solver::{initial_guess, minimize_nehari_observed, InitKind, SolveOptions};

fn main() -> critsep::Result<()> {
    let params = ModelParams::new(4, 2, 3, 2048)?;
    let grid = ReducedGrid::new(&params)?;
    let cp = CouplingParams::new(1.0, 1.0, 2.0, 2.0, -1.0, 4)?;
    let init = initial_guess(InitKind::Bumps, &grid, 0);

    let res = minimize_nehari_observed(&init, &cp, &grid, &SolveOptions::default(), |it| {
        if it.iteration % 5 == 0 {
            println!("iter {:>3}  E = {:.10}  |grad| = {:.2e}", it.iteration, it.energy, it.grad_norm);
        }
    })?;
    println!("converged: {} after {} iterations", res.converged, res.iterations);

    let ints = PairIntegrals::compute(&res.pair, &cp, &grid)?;
    let crit = params.critical_exponent();
    let m = ints.nehari_matrix(&cp, crit);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    println!("energy            {:.10}", res.energy);
    println!("(P + Q) / N       {:.10}", (ints.p + ints.q) / 4.0);
    println!("unattained level  {:.10}", nehari_infimum(&cp, 4)?);
    println!("P, Q              {:.6}, {:.6} (bound {:.6})", ints.p, ints.q, nehari_norm_bound(1.0, 4)?);
    println!("det               {:.6e} (bound {:.6e})", det, determinant_bound(&cp, 4, ints.c)?);
    println!("residuals         f = {:.1e}, h = {:.1e}", res.residuals.f_val, res.residuals.h_val);
    Ok(())
}
