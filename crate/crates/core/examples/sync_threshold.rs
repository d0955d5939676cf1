//! Synchronized solutions `(s U, t U)`: the coupling below which the scalar
//! system has no positive root, cross-checked by a brute scan.

use critsep::scalar::{diagonal_branch, sync_grid_scan, sync_solve, sync_threshold, SyncInstance};

fn main() -> critsep::Result<()> {
    for (mu1, mu2, alpha, beta, dim) in
        [(1.0, 1.0, 2.0, 2.0, 4), (1.0, 100.0, 2.0, 2.0, 4), (1.0, 1.0, 5.0 / 3.0, 5.0 / 3.0, 5)]
    {
        let th = sync_threshold(mu1, mu2, alpha, beta, dim)?;
        let est = th.estimate();
        let inst = SyncInstance::new(mu1, mu2, alpha, beta, est * 0.99, dim)?;
        println!("N = {dim}, mu = ({mu1}, {mu2}), alpha = {alpha:.4}: threshold {est:.7}");
        println!("  roots at 0.99 x threshold: {:?}", sync_solve(&inst)?);
        println!(
            "  brute scan counts: {} at 0.99 x, {} at 1.01 x",
            sync_grid_scan(&inst, 1_000_000)?,
            sync_grid_scan(&inst.with_lambda(est * 1.01), 1_000_000)?
        );
        if let Some(s) = diagonal_branch(&inst) {
            println!("  diagonal branch s = t = {s:.8}");
        }
    }
    println!("closed form for N = 4, alpha = beta = 2: -sqrt(mu1 mu2)/2");
    Ok(())
}
